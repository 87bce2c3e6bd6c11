//! Initial-data projection and the auxiliary dual problem.
//!
//! `Q_h` is the averaged interpolation defined by `(Q_h χ, χ_h)_h = (χ, χ_h)`
//! for all `χ_h ∈ X_h`; with the lumped product on the left it is diagonal,
//! so `(Q_h χ)_i = (χ, φ_i) / m_i`. The dual problem
//! `(∇ψ, ∇ψ̄) + (ψ, ψ̄)_h = (u, ψ̄)_h` has the M-matrix `K + diag(m)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::{integral_lumped, FeFunction, Operators};
use crate::linalg::SpdSolver;
use crate::mesh::Mesh;

/// Builtin scalar fields for initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Constant {
        c: f64,
    },
    /// `c + a·exp(−|x − x0|² / w²)`
    Gaussian {
        c: f64,
        a: f64,
        x0: f64,
        y0: f64,
        w: f64,
    },
    /// `c + a·(1 + cos(π r / w)) / 2` for `r < w`, `c` elsewhere.
    Cosine {
        c: f64,
        a: f64,
        x0: f64,
        y0: f64,
        w: f64,
    },
}

impl Field {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Field::Constant { c } => c,
            Field::Gaussian { c, a, x0, y0, w } => {
                let r2 = (x - x0).powi(2) + (y - y0).powi(2);
                c + a * (-r2 / (w * w)).exp()
            }
            Field::Cosine { c, a, x0, y0, w } => {
                let r = (x - x0).hypot(y - y0);
                if r < w {
                    c + a * 0.5 * (1.0 + (PI * r / w).cos())
                } else {
                    c
                }
            }
        }
    }

    /// Lower bound of the field over the plane.
    pub fn inf(&self) -> f64 {
        match *self {
            Field::Constant { c } => c,
            Field::Gaussian { c, a, .. } | Field::Cosine { c, a, .. } => c + a.min(0.0),
        }
    }

    /// Upper bound of the field over the plane.
    pub fn sup(&self) -> f64 {
        match *self {
            Field::Constant { c } => c,
            Field::Gaussian { c, a, .. } | Field::Cosine { c, a, .. } => c + a.max(0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let finite = match *self {
            Field::Constant { c } => c.is_finite(),
            Field::Gaussian { c, a, x0, y0, w } | Field::Cosine { c, a, x0, y0, w } => {
                if !(w > 0.0) {
                    return Err(Error::InvalidArgument(format!("{name}: width w must be > 0 (got {w})")));
                }
                [c, a, x0, y0, w].iter().all(|v| v.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name}: non-finite parameter")))
        }
    }
}

/// Initial cell density `u0 ≥ 0` and signal `v0 > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: Field,
    pub v0: Field,
    /// When set, the projected `u_{0h}` is rescaled to this lumped mass.
    pub u0_mass: Option<f64>,
}

impl InitialData {
    pub fn new(u0: Field, v0: Field) -> Result<Self> {
        let data = Self { u0, v0, u0_mass: None };
        data.validate()?;
        Ok(data)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.u0_mass = Some(mass);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.u0.validate("u0")?;
        self.v0.validate("v0")?;
        if self.u0.inf() < 0.0 {
            return Err(Error::InvalidArgument(format!("u0 must be >= 0 (lower bound {})", self.u0.inf())));
        }
        if !(self.v0.inf() > 0.0) {
            return Err(Error::InvalidArgument(format!("v0 must be > 0 (lower bound {})", self.v0.inf())));
        }
        if let Some(m) = self.u0_mass {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidArgument(format!("u0 mass must be >= 0 (got {m})")));
            }
        }
        Ok(())
    }

    /// `(u_{0h}, v_{0h}) = (Q_h u0, Q_h v0)`, with the optional mass rescaling.
    pub fn project(&self, mesh: &Mesh, ops: &Operators) -> Result<(FeFunction, FeFunction)> {
        self.validate()?;
        let mut u0h = project_qh(|x, y| self.u0.eval(x, y), mesh, ops)?;
        if let Some(target) = self.u0_mass {
            let mass = integral_lumped(&u0h, ops)?;
            if mass <= 0.0 && target > 0.0 {
                return Err(Error::InvalidArgument("cannot rescale a zero u0 to positive mass".into()));
            }
            let scale = if mass > 0.0 { target / mass } else { 0.0 };
            u0h = u0h.with_values(u0h.values().iter().map(|v| v * scale).collect())?;
        }
        let v0h = project_qh(|x, y| self.v0.eval(x, y), mesh, ops)?;
        Ok((u0h, v0h))
    }
}

/// Edge-midpoint quadrature of `(f, φ_i)`, one entry per node.
///
/// On each triangle the rule weights the three edge midpoints by `|σ|/3`;
/// `φ_i` is `1/2` at the two midpoints adjacent to vertex `i` and `0` at the
/// third. The rule is exact for quadratics.
pub fn load_vector<F: Fn(f64, f64) -> f64>(f: F, mesh: &Mesh) -> Result<Vec<f64>> {
    let mut acc = vec![crate::sum::NeumaierSum::new(); mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let w = mesh.area(t) / 3.0;
        // mid[l] is the midpoint of the edge opposite local vertex l
        let mut mid = [0.0; 3];
        for l in 0..3 {
            let a = p[(l + 1) % 3];
            let b = p[(l + 2) % 3];
            let (x, y) = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
            let v = f(x, y);
            if !v.is_finite() {
                return Err(Error::NonFinite { location: format!("quadrature point ({x}, {y})"), value: v });
            }
            mid[l] = v;
        }
        for l in 0..3 {
            let avg = 0.5 * (mid[(l + 1) % 3] + mid[(l + 2) % 3]);
            acc[tri[l]].add(w * avg);
        }
    }
    Ok(acc.iter().map(|s| s.value()).collect())
}

/// Averaged projection `Q_h f`.
pub fn project_qh<F: Fn(f64, f64) -> f64>(f: F, mesh: &Mesh, ops: &Operators) -> Result<FeFunction> {
    ops.check_mesh(mesh)?;
    let load = load_vector(f, mesh)?;
    let values = load.iter().zip(ops.mass_lumped()).map(|(l, m)| l / m).collect();
    FeFunction::new(mesh, values)
}

/// Edge-midpoint quadrature of `∫_Ω f`.
pub fn integrate_quadrature<F: Fn(f64, f64) -> f64>(f: F, mesh: &Mesh) -> Result<f64> {
    Ok(crate::sum::compensated_sum(load_vector(f, mesh)?))
}

/// Reusable factorization of the dual operator `K + diag(m)`.
#[derive(Debug, Clone)]
pub struct DualSolver {
    mesh_id: u64,
    mass: Vec<f64>,
    solver: SpdSolver,
}

impl DualSolver {
    pub fn new(ops: &Operators, tol: f64) -> Result<Self> {
        let matrix = ops.stiffness().plus_diagonal(ops.mass_lumped());
        Ok(Self { mesh_id: ops.mesh_id(), mass: ops.mass_lumped().to_vec(), solver: SpdSolver::new(matrix, tol)? })
    }

    /// Solves `(K + diag(m)) ψ = diag(m) u`.
    pub fn solve(&self, u: &FeFunction) -> Result<FeFunction> {
        if u.mesh_id() != self.mesh_id {
            return Err(Error::MeshMismatch { expected: self.mesh_id, found: u.mesh_id() });
        }
        let rhs: Vec<f64> = u.values().iter().zip(&self.mass).map(|(u, m)| m * u).collect();
        u.with_values(self.solver.solve(&rhs)?)
    }

    pub fn matrix(&self) -> &crate::linalg::CsrMatrix {
        self.solver.matrix()
    }
}

pub fn dual_solve(u: &FeFunction, ops: &Operators, tol: f64) -> Result<FeFunction> {
    ops.check_fn(u)?;
    DualSolver::new(ops, tol)?.solve(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, interpolate_nodal, norm_l1_lumped};
    use crate::mesh::generate_rect_mesh;

    #[test]
    fn constants_are_reproduced() {
        let mesh = generate_rect_mesh(5, 3, 1.0, 2.0).unwrap();
        let ops = assemble(&mesh);
        let q = project_qh(|_, _| 2.5, &mesh, &ops).unwrap();
        for &v in q.values() {
            assert!((v - 2.5).abs() <= 4.0 * f64::EPSILON * 2.5);
        }
    }

    #[test]
    fn projection_of_x_is_bounded() {
        let mesh = generate_rect_mesh(4, 4, 1.0, 1.0).unwrap();
        let ops = assemble(&mesh);
        let q = project_qh(|x, _| x, &mesh, &ops).unwrap();
        assert!(q.max() <= 1.0 + 1e-15);
        assert!(q.min() >= 0.0);
        // averaging pulls boundary values inward
        assert!(q.values()[0] > 0.0);
    }

    #[test]
    fn mass_identity() {
        let mesh = generate_rect_mesh(6, 5, 1.0, 1.0).unwrap();
        let ops = assemble(&mesh);
        let f = |x: f64, y: f64| 1.0 + x * y + (4.0 * x).sin();
        let q = project_qh(f, &mesh, &ops).unwrap();
        let lhs = integral_lumped(&q, &ops).unwrap();
        let rhs = integrate_quadrature(f, &mesh).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn quadrature_is_exact_for_quadratics() {
        let mesh = generate_rect_mesh(3, 2, 1.0, 1.0).unwrap();
        // ∫∫ x² + xy over the unit square = 1/3 + 1/4
        let v = integrate_quadrature(|x, y| x * x + x * y, &mesh).unwrap();
        assert!((v - (1.0 / 3.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn initial_data_mass_rescaling() {
        let mesh = generate_rect_mesh(8, 8, 1.0, 1.0).unwrap();
        let ops = assemble(&mesh);
        let data =
            InitialData::new(Field::Gaussian { c: 0.0, a: 1.0, x0: 0.5, y0: 0.5, w: 0.2 }, Field::Constant { c: 1.0 })
                .unwrap()
                .with_mass(1.0)
                .unwrap();
        let (u0h, v0h) = data.project(&mesh, &ops).unwrap();
        assert!((norm_l1_lumped(&u0h, &ops).unwrap() - 1.0).abs() < 1e-14);
        assert!(v0h.min() > 0.0);
    }

    #[test]
    fn invalid_initial_data() {
        assert!(InitialData::new(Field::Constant { c: -1.0 }, Field::Constant { c: 1.0 }).is_err());
        assert!(InitialData::new(Field::Constant { c: 0.0 }, Field::Constant { c: 0.0 }).is_err());
        let bad_w = Field::Cosine { c: 1.0, a: 1.0, x0: 0.0, y0: 0.0, w: 0.0 };
        assert!(InitialData::new(Field::Constant { c: 0.0 }, bad_w).is_err());
    }

    #[test]
    fn dual_solve_of_constant() {
        let mesh = generate_rect_mesh(4, 3, 1.0, 1.0).unwrap();
        let ops = assemble(&mesh);
        let psi = dual_solve(&FeFunction::constant(&mesh, 3.0), &ops, 1e-12).unwrap();
        for &v in psi.values() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_solve_preserves_sign() {
        let mesh = generate_rect_mesh(8, 8, 1.0, 1.0).unwrap();
        let ops = assemble(&mesh);
        let u = interpolate_nodal(|x, y| if x + y < 0.3 { 5.0 } else { 0.0 }, &mesh).unwrap();
        let psi = dual_solve(&u, &ops, 1e-12).unwrap();
        assert!(psi.min() >= -1e-12);
    }
}
