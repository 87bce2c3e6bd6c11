//! Sparse storage and symmetric positive definite solvers.

mod cg;
mod cholesky;
mod csr;

pub use cg::pcg;
pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use csr::CsrMatrix;

use crate::error::{Error, Result};

/// Systems up to this size are factored directly; larger ones use PCG.
pub const DIRECT_SOLVER_MAX_NODES: usize = 20_000;

const MAX_REFINEMENT_STEPS: usize = 3;

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `‖b − A x‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(ax, b)| b - ax).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Direct(EnvelopeCholesky),
    Iterative,
}

/// Factored (or preconditioned) SPD operator that solves to a relative
/// residual tolerance.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: CsrMatrix,
    backend: Backend,
    tol: f64,
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("solver tolerance {tol} must be positive")));
        }
        let backend = if matrix.dim() <= DIRECT_SOLVER_MAX_NODES {
            Backend::Direct(EnvelopeCholesky::factor(&matrix)?)
        } else {
            Backend::Iterative
        };
        Ok(Self { matrix, backend, tol })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match &self.backend {
            Backend::Direct(chol) => {
                let mut x = chol.solve(b);
                let mut res = relative_residual(&self.matrix, &x, b);
                let mut steps = 0;
                while res > self.tol && steps < MAX_REFINEMENT_STEPS {
                    let ax = self.matrix.mul_vec(&x);
                    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
                    let dx = chol.solve(&r);
                    for (xi, d) in x.iter_mut().zip(&dx) {
                        *xi += d;
                    }
                    res = relative_residual(&self.matrix, &x, b);
                    steps += 1;
                }
                if res > self.tol {
                    return Err(Error::SolverDiverged { iterations: steps, residual: res, tol: self.tol });
                }
                Ok(x)
            }
            Backend::Iterative => {
                let max_iter = 10 * self.matrix.dim() + 100;
                pcg(&self.matrix, b, None, self.tol, max_iter)
            }
        }
    }
}

/// One-shot SPD solve.
pub fn solve_spd(matrix: CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    SpdSolver::new(matrix, tol)?.solve(b)
}
