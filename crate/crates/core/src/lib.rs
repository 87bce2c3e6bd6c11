//! Structure-preserving finite-element solver for the degenerate
//! Keller–Segel system with local sensing,
//!
//! ```text
//! ∂_t u − Δ(Φ(v) u) = 0,    ∂_t v − Δv + u v = 0,
//! ```
//!
//! with homogeneous Neumann boundary conditions, discretized by P1 elements
//! with mass lumping and a decoupled implicit-Euler step. Every discrete
//! property the scheme guarantees (nodal bounds, mass conservation, energy
//! identity, dual and entropy inequalities) is computed as a runtime
//! diagnostic.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod cli;
pub mod config;
pub mod converge;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod motility;
pub mod operators;
pub mod oracle;
pub mod scheme;
pub mod sum;

pub use error::{Error, Result};
pub use fem::{assemble, FeFunction, Operators};
pub use mesh::{check_weak_acuteness, generate_rect_mesh, load_mesh, save_mesh, AcutenessReport, Mesh};
pub use motility::{Motility, MotilityKind, MotilityModel};
pub use operators::{dual_solve, project_qh, Field, InitialData};
pub use scheme::{check_k_condition, run, step_u, step_v, InvariantMode, SchemeConfig, SchemeState, Simulation};
