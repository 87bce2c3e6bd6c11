//! P1 finite elements with mass lumping.
//!
//! Nodal fields live in [`FeFunction`]; the lumped mass vector `m` and the
//! stiffness matrix `K` live in [`Operators`]. All element integrals are
//! evaluated in closed form.

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::sum::{compensated_sum, NeumaierSum};

/// Nodal coefficient vector of a P1 function on a specific mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    mesh_id: u64,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::LengthMismatch { expected: mesh.num_vertices(), found: values.len() });
        }
        Ok(Self { mesh_id: mesh.id(), values })
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self { mesh_id: mesh.id(), values: vec![c; mesh.num_vertices()] }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    /// Same mesh binding as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch { expected: self.values.len(), found: values.len() });
        }
        Ok(Self { mesh_id: self.mesh_id, values })
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the nodal minimum.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
    }

    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::MeshMismatch { expected: mesh.id(), found: self.mesh_id });
        }
        Ok(())
    }

    pub(crate) fn check_same(&self, other: &FeFunction) -> Result<()> {
        if self.mesh_id != other.mesh_id {
            return Err(Error::MeshMismatch { expected: self.mesh_id, found: other.mesh_id });
        }
        Ok(())
    }
}

/// Lumped mass vector and stiffness matrix of a mesh.
#[derive(Debug, Clone)]
pub struct Operators {
    mesh_id: u64,
    mass_lumped: Vec<f64>,
    stiffness: CsrMatrix,
    domain_area: f64,
}

impl Operators {
    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    /// `m_i = ‖φ_i‖_{L¹}`.
    pub fn mass_lumped(&self) -> &[f64] {
        &self.mass_lumped
    }

    /// `K_ij = (∇φ_j, ∇φ_i)`.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// `|Ω|`, the compensated sum of element areas.
    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    pub fn num_nodes(&self) -> usize {
        self.mass_lumped.len()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::MeshMismatch { expected: mesh.id(), found: self.mesh_id });
        }
        Ok(())
    }

    pub fn check_fn(&self, f: &FeFunction) -> Result<()> {
        if f.mesh_id != self.mesh_id {
            return Err(Error::MeshMismatch { expected: self.mesh_id, found: f.mesh_id });
        }
        Ok(())
    }
}

/// Element stiffness matrix of the P1 triangle: `(e_i · e_j) / (4|σ|)` with
/// `e_i` the edge opposite vertex `i`.
pub fn element_stiffness(p: [[f64; 2]; 3], area: f64) -> [[f64; 3]; 3] {
    let e = [0, 1, 2].map(|i| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        [b[0] - a[0], b[1] - a[1]]
    });
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (4.0 * area);
        }
    }
    k
}

pub fn assemble(mesh: &Mesh) -> Operators {
    let n = mesh.num_vertices();
    let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for edge in mesh.edges() {
        let [a, b] = edge.vertices;
        rows[a].push(b);
        rows[b].push(a);
    }
    for row in &mut rows {
        row.sort_unstable();
    }
    let mut stiffness = CsrMatrix::from_pattern(&rows);

    let mut mass = vec![NeumaierSum::new(); n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        let ke = element_stiffness(mesh.triangle_points(t), area);
        for (a, &i) in tri.iter().enumerate() {
            mass[i].add(area / 3.0);
            for (b, &j) in tri.iter().enumerate() {
                stiffness.add_to(i, j, ke[a][b]);
            }
        }
    }

    Operators {
        mesh_id: mesh.id(),
        mass_lumped: mass.iter().map(NeumaierSum::value).collect(),
        stiffness,
        domain_area: mesh.total_area(),
    }
}

/// `(f, g)_h = Σ m_i f_i g_i`.
pub fn lumped_inner(f: &FeFunction, g: &FeFunction, ops: &Operators) -> Result<f64> {
    ops.check_fn(f)?;
    ops.check_fn(g)?;
    Ok(compensated_sum(ops.mass_lumped.iter().zip(f.values()).zip(g.values()).map(|((m, a), b)| m * a * b)))
}

/// `fᵀ K g = (∇f, ∇g)`.
pub fn stiffness_form(f: &FeFunction, g: &FeFunction, ops: &Operators) -> Result<f64> {
    ops.check_fn(f)?;
    ops.check_fn(g)?;
    Ok(quadratic_form(&ops.stiffness, f.values(), g.values()))
}

pub(crate) fn quadratic_form(k: &CsrMatrix, f: &[f64], g: &[f64]) -> f64 {
    compensated_sum((0..k.dim()).map(|i| f[i] * k.row(i).map(|(j, a)| a * g[j]).sum::<f64>()))
}

pub fn norm_h(f: &FeFunction, ops: &Operators) -> Result<f64> {
    Ok(lumped_inner(f, f, ops)?.max(0.0).sqrt())
}

/// `‖∇f‖_{L²}`.
pub fn grad_l2(f: &FeFunction, ops: &Operators) -> Result<f64> {
    Ok(stiffness_form(f, f, ops)?.max(0.0).sqrt())
}

/// `‖f‖²_{H¹_h} = ‖∇f‖² + ‖f‖²_h`.
pub fn norm_h1h_sq(f: &FeFunction, ops: &Operators) -> Result<f64> {
    Ok(stiffness_form(f, f, ops)?.max(0.0) + lumped_inner(f, f, ops)?)
}

pub fn norm_h1h(f: &FeFunction, ops: &Operators) -> Result<f64> {
    Ok(norm_h1h_sq(f, ops)?.sqrt())
}

/// `∫ I_h|f| = Σ m_i |f_i|`.
pub fn norm_l1_lumped(f: &FeFunction, ops: &Operators) -> Result<f64> {
    ops.check_fn(f)?;
    Ok(compensated_sum(ops.mass_lumped.iter().zip(f.values()).map(|(m, v)| m * v.abs())))
}

/// `∫ I_h f = Σ m_i f_i`.
pub fn integral_lumped(f: &FeFunction, ops: &Operators) -> Result<f64> {
    ops.check_fn(f)?;
    Ok(compensated_sum(ops.mass_lumped.iter().zip(f.values()).map(|(m, v)| m * v)))
}

/// Exact `L²` norm of the P1 function.
pub fn norm_l2(f: &FeFunction, mesh: &Mesh) -> Result<f64> {
    f.check_mesh(mesh)?;
    let v = f.values();
    let s = compensated_sum(mesh.triangles().iter().enumerate().map(|(t, tri)| {
        let [a, b, c] = tri.map(|i| v[i]);
        mesh.area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c)
    }));
    Ok(s.max(0.0).sqrt())
}

/// Nodal interpolant `I_h g`.
pub fn interpolate_nodal<G: Fn(f64, f64) -> f64>(g: G, mesh: &Mesh) -> Result<FeFunction> {
    let values = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let v = g(p[0], p[1]);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { location: format!("vertex {i}"), value: v })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FeFunction::new(mesh, values)
}

/// Nodal composition `I_h[φ(f)]`.
pub fn compose_nodal<P: Fn(f64) -> f64>(f: &FeFunction, phi: P) -> Result<FeFunction> {
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(node, &x)| {
            let y = phi(x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Domain { node, value: x })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    f.with_values(values)
}
