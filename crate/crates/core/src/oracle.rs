//! Dense brute-force reference implementations for small meshes.
//!
//! The stiffness matrix here is built from the cotangent formula
//! `K_ij = −½ Σ cot(angle opposite edge ij)`, `K_ii = −Σ_{j≠i} K_ij`, which
//! shares no code with the edge-vector assembly in [`crate::fem`]. Linear
//! systems are solved by Gaussian elimination with partial pivoting on the
//! untransformed (unsymmetric) equations.

use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::mesh::{Mesh, Point};
use crate::motility::Motility;

pub const ORACLE_MAX_NODES: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl DenseSystem {
    pub fn new(matrix: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let n = rhs.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("dense system dimensions are inconsistent".into()));
        }
        if matrix.iter().flatten().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dense system has non-finite entries".into()));
        }
        Ok(Self { matrix, rhs })
    }

    /// Gaussian elimination with partial pivoting.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.rhs.len();
        let mut a = self.matrix.clone();
        let mut b = self.rhs.clone();
        let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("non-empty range");
            if a[piv][col].abs() <= 1e-300_f64.max(scale * 1e-15) {
                return Err(Error::Singular(col));
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[row][c] -= f * a[col][c];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        Ok(x)
    }
}

/// Dense lumped mass (diagonal) and stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperators {
    pub mass: Vec<f64>,
    pub stiffness: Vec<Vec<f64>>,
}

fn cot_at(o: Point, a: Point, b: Point) -> f64 {
    let (ux, uy) = (a[0] - o[0], a[1] - o[1]);
    let (vx, vy) = (b[0] - o[0], b[1] - o[1]);
    (ux * vx + uy * vy) / (ux * vy - uy * vx).abs()
}

fn check_cap(n: usize) -> Result<()> {
    if n > ORACLE_MAX_NODES {
        return Err(Error::SizeCap { nodes: n, cap: ORACLE_MAX_NODES });
    }
    Ok(())
}

pub fn dense_assemble(mesh: &Mesh) -> Result<DenseOperators> {
    let n = mesh.num_vertices();
    check_cap(n)?;
    let mut mass = vec![0.0; n];
    let mut k = vec![vec![0.0; n]; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let a = 0.5 * crate::mesh::signed_area2(p[0], p[1], p[2]).abs();
        for l in 0..3 {
            mass[tri[l]] += a / 3.0;
            let (i, j) = (tri[(l + 1) % 3], tri[(l + 2) % 3]);
            let c = -0.5 * cot_at(p[l], p[(l + 1) % 3], p[(l + 2) % 3]);
            k[i][j] += c;
            k[j][i] += c;
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| k[i][j]).sum();
        k[i][i] = -off;
    }
    Ok(DenseOperators { mass, stiffness: k })
}

/// Solves the untransformed u-step `(M/k + K·D) u^{n+1} = (M/k) u^n`.
pub fn dense_step_u(
    u_prev: &FeFunction,
    v_prev: &FeFunction,
    model: &dyn Motility,
    k: f64,
    mesh: &Mesh,
) -> Result<FeFunction> {
    u_prev.check_mesh(mesh)?;
    v_prev.check_mesh(mesh)?;
    let ops = dense_assemble(mesh)?;
    let n = mesh.num_vertices();
    let d: Vec<f64> = v_prev.values().iter().map(|&v| model.eval(v)).collect::<Result<_>>()?;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = ops.stiffness[i][j] * d[j];
        }
        a[i][i] += ops.mass[i] / k;
    }
    let rhs = (0..n).map(|i| ops.mass[i] * u_prev.values()[i] / k).collect();
    u_prev.with_values(DenseSystem::new(a, rhs)?.solve()?)
}

/// Solves `(K + M) ψ = M u` densely.
pub fn dense_dual_solve(u: &FeFunction, mesh: &Mesh) -> Result<FeFunction> {
    u.check_mesh(mesh)?;
    let ops = dense_assemble(mesh)?;
    let n = mesh.num_vertices();
    let mut a = ops.stiffness.clone();
    for (i, row) in a.iter_mut().enumerate().take(n) {
        row[i] += ops.mass[i];
    }
    let rhs = (0..n).map(|i| ops.mass[i] * u.values()[i]).collect();
    u.with_values(DenseSystem::new(a, rhs)?.solve()?)
}

/// Solves the v-step `(M/k + K + M·diag(u^{n+1})) v^{n+1} = (M/k) v^n` densely.
pub fn dense_step_v(v_prev: &FeFunction, u_next: &FeFunction, k: f64, mesh: &Mesh) -> Result<FeFunction> {
    v_prev.check_mesh(mesh)?;
    u_next.check_mesh(mesh)?;
    let ops = dense_assemble(mesh)?;
    let n = mesh.num_vertices();
    let mut a = ops.stiffness.clone();
    for i in 0..n {
        a[i][i] += ops.mass[i] / k + ops.mass[i] * u_next.values()[i];
    }
    let rhs = (0..n).map(|i| ops.mass[i] * v_prev.values()[i] / k).collect();
    v_prev.with_values(DenseSystem::new(a, rhs)?.solve()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::mesh::generate_rect_mesh;
    use crate::motility::MotilityModel;

    #[test]
    fn square_mass_and_row_sums() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let d = dense_assemble(&mesh).unwrap();
        let expected = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in d.mass.iter().zip(expected) {
            assert!((a - b).abs() < 1e-16);
        }
        for row in &d.stiffness {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn matches_sparse_assembly() {
        let mesh = generate_rect_mesh(3, 3, 1.0, 1.0).unwrap();
        let d = dense_assemble(&mesh).unwrap();
        let s = assemble(&mesh);
        let sk = s.stiffness().to_dense();
        let mut diff: f64 = 0.0;
        for i in 0..mesh.num_vertices() {
            diff = diff.max((d.mass[i] - s.mass_lumped()[i]).abs());
            for j in 0..mesh.num_vertices() {
                diff = diff.max((d.stiffness[i][j] - sk[i][j]).abs());
            }
        }
        assert!(diff <= 1e-14, "max diff {diff}");
    }

    #[test]
    fn constants_map_to_constants() {
        let mesh = generate_rect_mesh(2, 2, 1.0, 1.0).unwrap();
        let u = FeFunction::constant(&mesh, 0.7);
        let v = FeFunction::constant(&mesh, 1.3);
        let phi = MotilityModel::power(1.0, 1.0).unwrap();
        let u1 = dense_step_u(&u, &v, &phi, 0.1, &mesh).unwrap();
        assert!(u1.values().iter().all(|&x| (x - 0.7).abs() < 1e-14));
    }

    #[test]
    fn size_cap() {
        let mesh = generate_rect_mesh(20, 20, 1.0, 1.0).unwrap();
        assert!(matches!(dense_assemble(&mesh), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn singular_system() {
        let sys = DenseSystem::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).unwrap();
        assert!(matches!(sys.solve(), Err(Error::Singular(_))));
    }

    #[test]
    fn large_timestep_is_still_solvable() {
        // k violating the timestep condition tenfold: the oracle solves whatever
        // is solvable; no property is asserted about the result.
        let mesh = generate_rect_mesh(2, 2, 1.0, 1.0).unwrap();
        let u = crate::fem::interpolate_nodal(|x, y| x + y, &mesh).unwrap();
        let v = crate::fem::interpolate_nodal(|x, _| 1.0 + 4.0 * x, &mesh).unwrap();
        let phi = MotilityModel::power(2.0, 1.0).unwrap();
        let _ = dense_step_u(&u, &v, &phi, 5.0, &mesh);
    }
}
