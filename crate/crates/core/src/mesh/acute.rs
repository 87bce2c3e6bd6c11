use std::f64::consts::{FRAC_PI_2, PI};

use super::{Mesh, Point};
use crate::error::{Error, Result};
use crate::fem::{assemble, Operators};

/// Tolerance on angle sums, in radians.
pub const TOL_ANGLE: f64 = 1e-12;
/// Off-diagonal stiffness tolerance relative to `max |K_ii|`.
pub const TOL_MAT_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AcutenessReport {
    pub is_weakly_acute: bool,
    /// Index into [`Mesh::edges`].
    pub worst_edge: usize,
    pub worst_edge_vertices: [usize; 2],
    /// Sum of the angles opposite the worst edge (a single angle on the boundary).
    pub worst_angle_sum: f64,
    /// Limit the worst sum is compared against: π inside, π/2 on the boundary.
    pub worst_angle_limit: f64,
    /// Largest off-diagonal stiffness entry.
    pub offdiag_max: f64,
    pub tol_mat: f64,
}

impl std::fmt::Display for AcutenessReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "is_weakly_acute: {}", self.is_weakly_acute)?;
        writeln!(
            f,
            "worst_edge: {} ({}, {})",
            self.worst_edge, self.worst_edge_vertices[0], self.worst_edge_vertices[1]
        )?;
        writeln!(f, "worst_angle_sum: {:.16e}", self.worst_angle_sum)?;
        writeln!(f, "worst_angle_limit: {:.16e}", self.worst_angle_limit)?;
        writeln!(f, "offdiag_max: {:.16e}", self.offdiag_max)?;
        write!(f, "tol_mat: {:.16e}", self.tol_mat)
    }
}

/// Interior angle at `o` in the triangle (o, a, b).
fn angle_at(o: Point, a: Point, b: Point) -> f64 {
    let (ux, uy) = (a[0] - o[0], a[1] - o[1]);
    let (vx, vy) = (b[0] - o[0], b[1] - o[1]);
    (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
}

fn opposite_vertex(tri: &[usize; 3], edge: [usize; 2]) -> usize {
    *tri.iter().find(|&&v| v != edge[0] && v != edge[1]).expect("triangle contains its edge")
}

/// Certifies that the mesh is weakly acute by two independent criteria: the
/// angles opposite each edge, and the sign of the off-diagonal stiffness
/// entries. The two verdicts must agree.
pub fn check_weak_acuteness(mesh: &Mesh, operators: Option<&Operators>) -> Result<AcutenessReport> {
    let assembled;
    let ops = match operators {
        Some(ops) => {
            ops.check_mesh(mesh)?;
            ops
        }
        None => {
            assembled = assemble(mesh);
            &assembled
        }
    };

    let mut worst = (f64::NEG_INFINITY, 0, 0.0, 0.0);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let mut sum = 0.0;
        for t in edge.triangles.iter().flatten() {
            let o = opposite_vertex(&mesh.triangles()[*t], edge.vertices);
            sum += angle_at(mesh.vertex(o), pa, pb);
        }
        let limit = if edge.is_boundary() { FRAC_PI_2 } else { PI };
        let excess = sum - limit;
        if excess > worst.0 {
            worst = (excess, e, sum, limit);
        }
    }
    let (excess, worst_edge, worst_angle_sum, worst_angle_limit) = worst;

    let k = ops.stiffness();
    let offdiag_max = k.max_offdiag();
    let tol_mat = TOL_MAT_FACTOR * k.max_abs_diag();

    let by_angle = excess <= TOL_ANGLE;
    let by_matrix = offdiag_max <= tol_mat;
    if by_angle != by_matrix {
        return Err(Error::Internal(format!(
            "acuteness criteria disagree: angle excess {excess:e} vs off-diagonal {offdiag_max:e} (tol {tol_mat:e})"
        )));
    }

    Ok(AcutenessReport {
        is_weakly_acute: by_angle,
        worst_edge,
        worst_edge_vertices: mesh.edges()[worst_edge].vertices,
        worst_angle_sum,
        worst_angle_limit,
        offdiag_max,
        tol_mat,
    })
}
