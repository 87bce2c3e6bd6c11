//! Decoupled implicit-Euler / P1 scheme with mass lumping.
//!
//! Each step first solves for `u^{n+1}` with the motility frozen at `v^n`,
//!
//! ```text
//! (M/k + K·D) u^{n+1} = (M/k) u^n,        D = diag(Φ(v^n_j)),
//! ```
//!
//! then for `v^{n+1}` with absorption by `u^{n+1}`,
//!
//! ```text
//! (M/k + K + M·diag(u^{n+1})) v^{n+1} = (M/k) v^n.
//! ```
//!
//! `K·D` is unsymmetric, so the u-step is solved for `w = D u^{n+1}`, which
//! satisfies the SPD system `(M D⁻¹/k + K) w = (M/k) u^n`.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::diagnostics::{CheckOutcome, DiagnosticsRecord, DiagnosticsTracker, InvariantFamily, InvariantTally};
use crate::error::{Error, Result};
use crate::fem::{FeFunction, Operators};
use crate::linalg::SpdSolver;
use crate::mesh::{check_weak_acuteness, Mesh};
use crate::motility::Motility;
use crate::operators::InitialData;

/// Absolute tolerance on nodal bounds.
pub const TOL_NODE: f64 = 1e-10;
/// Smallest admissible nodal motility in the transformed u-step.
pub const COND_FLOOR: f64 = 1e-14;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InvariantMode {
    Off,
    #[default]
    Warn,
    Fail,
}

impl FromStr for InvariantMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(InvariantMode::Off),
            "warn" => Ok(InvariantMode::Warn),
            "fail" => Ok(InvariantMode::Fail),
            other => Err(Error::InvalidArgument(format!("unknown invariant mode `{other}` (off|warn|fail)"))),
        }
    }
}

impl fmt::Display for InvariantMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvariantMode::Off => "off",
            InvariantMode::Warn => "warn",
            InvariantMode::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub t_final: f64,
    pub steps: usize,
    pub solver_tol: f64,
    pub invariant_mode: InvariantMode,
    pub enforce_k_condition: bool,
    pub output_every: usize,
    /// Skip the weak-acuteness certificate in [`run`].
    pub skip_mesh_check: bool,
}

impl SchemeConfig {
    pub fn new(t_final: f64, steps: usize) -> Self {
        Self {
            t_final,
            steps,
            solver_tol: DEFAULT_SOLVER_TOL,
            invariant_mode: InvariantMode::Warn,
            enforce_k_condition: true,
            output_every: 1,
            skip_mesh_check: false,
        }
    }

    /// `k = T/N`.
    pub fn k(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("T must be > 0 (got {})", self.t_final)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("N must be >= 1".into()));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance must lie in (0, 1e-6] (got {})",
                self.solver_tol
            )));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidArgument("output_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(u^n_h, v^n_h)` at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub n: usize,
    pub u: FeFunction,
    pub v: FeFunction,
    pub k: f64,
}

impl SchemeState {
    pub fn t(&self) -> f64 {
        self.n as f64 * self.k
    }
}

/// Outcome of the timestep gate `2k · max_{[0, max v_{0h}]} Φ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KCondition {
    /// `2k · sup Φ`
    pub value: f64,
    pub pass: bool,
}

impl KCondition {
    pub fn margin(&self) -> f64 {
        1.0 - self.value
    }
}

pub fn check_k_condition(k: f64, v0h: &FeFunction, model: &dyn Motility) -> Result<KCondition> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("timestep must be > 0 (got {k})")));
    }
    let (node, min) = v0h.argmin();
    if !(min > 0.0) {
        return Err(Error::InvalidArgument(format!("v0h must be positive (value {min} at node {node})")));
    }
    let value = 2.0 * k * model.sup_on(v0h.max())?;
    Ok(KCondition { value, pass: value < 1.0 })
}

fn check_state(state: &SchemeState, ops: &Operators) -> Result<()> {
    ops.check_fn(&state.u)?;
    ops.check_fn(&state.v)
}

/// `u^{n+1}` through the transformed SPD system.
pub fn step_u(state: &SchemeState, ops: &Operators, model: &dyn Motility, cfg: &SchemeConfig) -> Result<FeFunction> {
    check_state(state, ops)?;
    let k = state.k;
    let mut d = Vec::with_capacity(state.v.len());
    for (node, &v) in state.v.values().iter().enumerate() {
        let phi = model.eval(v)?;
        if !(phi >= COND_FLOOR) {
            let err = Error::Conditioning { node, value: phi };
            if phi <= 0.0 || !phi.is_finite() || cfg.invariant_mode == InvariantMode::Fail {
                return Err(err);
            }
            warn!("{err}");
        }
        d.push(phi);
    }
    let m = ops.mass_lumped();
    let shift: Vec<f64> = m.iter().zip(&d).map(|(m, d)| m / (k * d)).collect();
    let matrix = ops.stiffness().plus_diagonal(&shift);
    let rhs: Vec<f64> = m.iter().zip(state.u.values()).map(|(m, u)| m * u / k).collect();
    let w = SpdSolver::new(matrix, cfg.solver_tol)?.solve(&rhs)?;
    state.u.with_values(w.iter().zip(&d).map(|(w, d)| w / d).collect())
}

/// `v^{n+1}` from `v^n` (in `state`) and `u^{n+1}`.
pub fn step_v(state: &SchemeState, u_next: &FeFunction, ops: &Operators, cfg: &SchemeConfig) -> Result<FeFunction> {
    check_state(state, ops)?;
    ops.check_fn(u_next)?;
    let k = state.k;
    let m = ops.mass_lumped();
    let shift: Vec<f64> = m.iter().zip(u_next.values()).map(|(m, u)| m / k + m * u).collect();
    let matrix = ops.stiffness().plus_diagonal(&shift);
    let rhs: Vec<f64> = m.iter().zip(state.v.values()).map(|(m, v)| m * v / k).collect();
    let v = SpdSolver::new(matrix, cfg.solver_tol)?.solve(&rhs)?;
    state.v.with_values(v)
}

/// Time integrator with per-step diagnostics and invariant enforcement.
pub struct Simulation<M: Motility> {
    ops: Operators,
    model: M,
    cfg: SchemeConfig,
    state: SchemeState,
    k_check: KCondition,
    v_max0: f64,
    tracker: DiagnosticsTracker,
    tally: InvariantTally,
    warnings: Vec<CheckOutcome>,
    records: Vec<DiagnosticsRecord>,
}

impl<M: Motility> Simulation<M> {
    /// Starts from projected initial data `(u_{0h}, v_{0h})`.
    pub fn new(ops: Operators, model: M, u0h: FeFunction, v0h: FeFunction, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        ops.check_fn(&u0h)?;
        ops.check_fn(&v0h)?;
        let k = cfg.k();
        let k_check = check_k_condition(k, &v0h, &model)?;
        if !k_check.pass {
            if cfg.enforce_k_condition {
                return Err(Error::TimestepCondition { value: k_check.value });
            }
            warn!("timestep condition not satisfied: 2k*sup(phi) = {}", k_check.value);
        }
        let v_max0 = v0h.max();
        let mut tracker = DiagnosticsTracker::new(&ops, &model, v_max0, cfg.solver_tol, TOL_NODE, k_check.pass)?;
        let state = SchemeState { n: 0, u: u0h, v: v0h, k };
        let (record, checks) = tracker.record(&state, &ops, &model)?;
        let mut sim = Self {
            ops,
            model,
            cfg,
            state,
            k_check,
            v_max0,
            tracker,
            tally: InvariantTally::default(),
            warnings: Vec::new(),
            records: vec![record],
        };
        sim.enforce(checks)?;
        Ok(sim)
    }

    fn enforce(&mut self, checks: Vec<CheckOutcome>) -> Result<()> {
        for c in checks {
            self.tally.record(c.family, c.passed);
            if c.passed {
                continue;
            }
            match self.cfg.invariant_mode {
                InvariantMode::Off => {}
                InvariantMode::Warn => {
                    warn!("invariant violated: {c}");
                    self.warnings.push(c);
                }
                InvariantMode::Fail => {
                    return Err(Error::Invariant { step: c.step, message: format!("{}: {}", c.family, c.message) });
                }
            }
        }
        Ok(())
    }

    /// Advances one step and returns its diagnostics.
    pub fn step(&mut self) -> Result<&DiagnosticsRecord> {
        let n = self.state.n + 1;
        let u = step_u(&self.state, &self.ops, &self.model, &self.cfg)?;
        let (node, min_u) = u.argmin();
        if min_u < -TOL_NODE && self.cfg.invariant_mode == InvariantMode::Fail {
            return Err(Error::Invariant {
                step: n,
                message: format!("{}: u = {min_u:e} at node {node}", InvariantFamily::NodalU),
            });
        }
        let v = step_v(&self.state, &u, &self.ops, &self.cfg)?;
        let next = SchemeState { n, u, v, k: self.state.k };
        let (record, checks) = self.tracker.record(&next, &self.ops, &self.model)?;
        self.state = next;
        self.records.push(record);
        self.enforce(checks)?;
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn is_finished(&self) -> bool {
        self.state.n >= self.cfg.steps
    }

    pub fn state(&self) -> &SchemeState {
        &self.state
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn k_condition(&self) -> KCondition {
        self.k_check
    }

    pub fn v_max0(&self) -> f64 {
        self.v_max0
    }

    pub fn sup_phi(&self) -> f64 {
        self.tracker.sup_phi()
    }

    pub fn tally(&self) -> &InvariantTally {
        &self.tally
    }

    pub fn warnings(&self) -> &[CheckOutcome] {
        &self.warnings
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Snapshots at `n = 0, output_every, 2·output_every, …` and at `n = N`.
    pub states: Vec<SchemeState>,
    /// One record per step, `n = 0..=N`.
    pub records: Vec<DiagnosticsRecord>,
    pub k_condition: KCondition,
    pub v_max0: f64,
    pub sup_phi: f64,
    pub tally: InvariantTally,
    pub warnings: Vec<CheckOutcome>,
}

/// Runs the scheme, calling `observer` on every snapshot that is kept.
pub fn run_with<M, F>(
    mesh: &Mesh,
    ops: &Operators,
    model: M,
    initial: &InitialData,
    cfg: &SchemeConfig,
    mut observer: F,
) -> Result<Trajectory>
where
    M: Motility,
    F: FnMut(&SchemeState) -> Result<()>,
{
    cfg.validate()?;
    ops.check_mesh(mesh)?;
    if !cfg.skip_mesh_check {
        let report = check_weak_acuteness(mesh, Some(ops))?;
        if !report.is_weakly_acute {
            let [a, b] = report.worst_edge_vertices;
            return Err(Error::NotWeaklyAcute { a, b, worst_angle_sum: report.worst_angle_sum });
        }
    }
    let (u0h, v0h) = initial.project(mesh, ops)?;
    let mut sim = Simulation::new(ops.clone(), model, u0h, v0h, cfg.clone())?;

    let mut states = vec![sim.state().clone()];
    observer(sim.state())?;
    while !sim.is_finished() {
        sim.step()?;
        let n = sim.state().n;
        if n % cfg.output_every == 0 || n == cfg.steps {
            observer(sim.state())?;
            states.push(sim.state().clone());
        }
    }
    Ok(Trajectory {
        states,
        records: sim.records.clone(),
        k_condition: sim.k_check,
        v_max0: sim.v_max0,
        sup_phi: sim.sup_phi(),
        tally: sim.tally.clone(),
        warnings: sim.warnings.clone(),
    })
}

pub fn run<M: Motility>(
    mesh: &Mesh,
    ops: &Operators,
    model: M,
    initial: &InitialData,
    cfg: &SchemeConfig,
) -> Result<Trajectory> {
    run_with(mesh, ops, model, initial, cfg, |_| Ok(()))
}
