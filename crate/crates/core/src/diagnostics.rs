//! Discrete a priori quantities and the per-step identities/inequalities they
//! satisfy.
//!
//! Per step `n → n+1` the scheme satisfies, up to solver error:
//!
//! * v-energy identity:
//!   `‖v¹‖²_h − ‖v⁰‖²_h + ‖v¹ − v⁰‖²_h + 2k‖∇v¹‖² + 2k‖√u¹ v¹‖²_h = 0`
//! * dual inequality, with `ψ` solving `(K + M) ψ = M u` and
//!   `‖·‖²_{H¹_h} = ‖∇·‖² + ‖·‖²_h`:
//!   `‖ψ¹‖² − ‖ψ⁰‖² + ‖ψ¹ − ψ⁰‖² + 2k(Φ(v⁰)u¹, u¹)_h ≤ 2k·supΦ·‖ψ¹‖²`
//! * log-entropy inequality, `E(v) = −Σ m_i log v_i`:
//!   `E(v¹) + k‖∇I_h log v¹‖² ≤ E(v⁰) + k‖u_{0h}‖_{L¹}`

use std::fmt;

use crate::error::{Error, Result};
use crate::fem::{compose_nodal, quadratic_form, FeFunction, Operators};
use crate::motility::Motility;
use crate::operators::DualSolver;
use crate::scheme::SchemeState;
use crate::sum::{compensated_sum, NeumaierSum};

/// Energy residual bound factor: `|res| ≤ ENERGY_FACTOR · solver_tol · ‖v^n‖²_h`.
pub const ENERGY_FACTOR: f64 = 100.0;
/// Dual slack bound: `slack ≥ −DUAL_TOL · (1 + ‖ψ^{n+1}‖²_{H¹_h})`.
pub const DUAL_TOL: f64 = 1e-9;
/// Entropy slack bound: `slack ≥ −ENTROPY_TOL · (1 + |RHS|)`.
pub const ENTROPY_TOL: f64 = 1e-9;
/// Absolute slack of the telescoped entropy bound.
pub const ENTROPY_GLOBAL_TOL: f64 = 1e-8;
/// Mass drift bound: `|Σ m u^n − Σ m u^0| ≤ MASS_FACTOR · solver_tol · Σ m u^0`.
pub const MASS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub n: usize,
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub energy_v_residual: f64,
    pub psi_h1h_sq: f64,
    pub dual_ineq_slack: f64,
    pub entropy: f64,
    pub entropy_ineq_slack: f64,
    pub grad_log_v_sq: f64,
    pub weighted_mass_flux: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "n,t,mass_u,mass_v,min_u,max_u,min_v,max_v,energy_v_residual,psi_h1h_sq,dual_ineq_slack,entropy,entropy_ineq_slack,grad_log_v_sq,weighted_mass_flux";

    pub fn to_csv_row(&self) -> String {
        let reals = [
            self.t,
            self.mass_u,
            self.mass_v,
            self.min_u,
            self.max_u,
            self.min_v,
            self.max_v,
            self.energy_v_residual,
            self.psi_h1h_sq,
            self.dual_ineq_slack,
            self.entropy,
            self.entropy_ineq_slack,
            self.grad_log_v_sq,
            self.weighted_mass_flux,
        ];
        let mut row = self.n.to_string();
        for r in reals {
            row.push(',');
            row.push_str(&format!("{r:.16e}"));
        }
        row
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass_u,
            self.mass_v,
            self.min_u,
            self.max_u,
            self.min_v,
            self.max_v,
            self.energy_v_residual,
            self.psi_h1h_sq,
            self.dual_ineq_slack,
            self.entropy,
            self.entropy_ineq_slack,
            self.grad_log_v_sq,
            self.weighted_mass_flux,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Families of runtime-checked properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantFamily {
    NodalU,
    NodalV,
    MassU,
    MassV,
    EnergyV,
    Dual,
    Entropy,
    EntropyGlobal,
    Flux,
}

impl InvariantFamily {
    pub const ALL: [InvariantFamily; 9] = [
        InvariantFamily::NodalU,
        InvariantFamily::NodalV,
        InvariantFamily::MassU,
        InvariantFamily::MassV,
        InvariantFamily::EnergyV,
        InvariantFamily::Dual,
        InvariantFamily::Entropy,
        InvariantFamily::EntropyGlobal,
        InvariantFamily::Flux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InvariantFamily::NodalU => "nodal_u",
            InvariantFamily::NodalV => "nodal_v",
            InvariantFamily::MassU => "mass_u",
            InvariantFamily::MassV => "mass_v",
            InvariantFamily::EnergyV => "energy_v",
            InvariantFamily::Dual => "dual_inequality",
            InvariantFamily::Entropy => "entropy_inequality",
            InvariantFamily::EntropyGlobal => "entropy_global",
            InvariantFamily::Flux => "weighted_mass_flux",
        }
    }
}

impl fmt::Display for InvariantFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of one invariant check at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub family: InvariantFamily,
    pub step: usize,
    pub passed: bool,
    pub message: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}: {}", self.step, self.family, self.message)
    }
}

/// Pass/fail counts per invariant family.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantTally {
    counts: std::collections::BTreeMap<InvariantFamily, (usize, usize)>,
}

impl InvariantTally {
    pub fn record(&mut self, family: InvariantFamily, passed: bool) {
        let e = self.counts.entry(family).or_insert((0, 0));
        e.0 += 1;
        if !passed {
            e.1 += 1;
        }
    }

    /// (checked, failed)
    pub fn get(&self, family: InvariantFamily) -> (usize, usize) {
        self.counts.get(&family).copied().unwrap_or((0, 0))
    }

    pub fn passed(&self, family: InvariantFamily) -> bool {
        self.get(family).1 == 0
    }

    pub fn all_passed(&self) -> bool {
        self.counts.values().all(|&(_, failed)| failed == 0)
    }
}

fn lumped_sum<F: Fn(usize) -> f64>(ops: &Operators, term: F) -> f64 {
    compensated_sum(ops.mass_lumped().iter().enumerate().map(|(i, m)| m * term(i)))
}

fn same_mesh(ops: &Operators, fields: &[&FeFunction]) -> Result<()> {
    fields.iter().try_for_each(|f| ops.check_fn(f))
}

/// Left-hand side of the v-energy identity; zero up to solver error.
pub fn check_v_energy_identity(
    v_prev: &FeFunction,
    v_next: &FeFunction,
    u_next: &FeFunction,
    ops: &Operators,
    k: f64,
) -> Result<f64> {
    same_mesh(ops, &[v_prev, v_next, u_next])?;
    let (v0, v1, u1) = (v_prev.values(), v_next.values(), u_next.values());
    let lumped = lumped_sum(ops, |i| {
        let d = v1[i] - v0[i];
        v1[i] * v1[i] - v0[i] * v0[i] + d * d + 2.0 * k * u1[i] * v1[i] * v1[i]
    });
    let grad = quadratic_form(ops.stiffness(), v1, v1);
    Ok(lumped + 2.0 * k * grad)
}

/// `‖ψ‖²_{H¹_h} = ψᵀKψ + Σ m ψ²`.
pub fn h1h_sq(psi: &FeFunction, ops: &Operators) -> Result<f64> {
    crate::fem::norm_h1h_sq(psi, ops)
}

/// `2k (Φ(v^n) u^{n+1}, u^{n+1})_h`.
pub fn weighted_mass_flux(
    u_next: &FeFunction,
    v_prev: &FeFunction,
    ops: &Operators,
    model: &dyn Motility,
    k: f64,
) -> Result<f64> {
    same_mesh(ops, &[u_next, v_prev])?;
    let phi = phi_nodal(v_prev, model)?;
    let u = u_next.values();
    Ok(2.0 * k * lumped_sum(ops, |i| phi[i] * u[i] * u[i]))
}

fn phi_nodal(v: &FeFunction, model: &dyn Motility) -> Result<Vec<f64>> {
    v.values().iter().map(|&s| model.eval(s)).collect()
}

/// Terms of the dual inequality for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualTerms {
    /// `RHS − LHS`.
    pub slack: f64,
    pub psi_next_sq: f64,
    pub flux: f64,
}

/// Evaluates the dual inequality from precomputed `ψ^n`, `ψ^{n+1}`.
pub fn dual_inequality_terms(
    psi_prev: &FeFunction,
    psi_next: &FeFunction,
    u_next: &FeFunction,
    v_prev: &FeFunction,
    ops: &Operators,
    model: &dyn Motility,
    sup_phi: f64,
    k: f64,
) -> Result<DualTerms> {
    same_mesh(ops, &[psi_prev, psi_next])?;
    let p0 = h1h_sq(psi_prev, ops)?;
    let p1 = h1h_sq(psi_next, ops)?;
    let diff = psi_next.with_values(psi_next.values().iter().zip(psi_prev.values()).map(|(a, b)| a - b).collect())?;
    let pd = h1h_sq(&diff, ops)?;
    let flux = weighted_mass_flux(u_next, v_prev, ops, model, k)?;
    let lhs = p1 - p0 + pd + flux;
    let rhs = 2.0 * k * sup_phi * p1;
    Ok(DualTerms { slack: rhs - lhs, psi_next_sq: p1, flux })
}

/// Slack `RHS − LHS` of the dual inequality; `v_bound` is `max v_{0h}`.
pub fn check_dual_inequality(
    u_prev: &FeFunction,
    u_next: &FeFunction,
    v_prev: &FeFunction,
    ops: &Operators,
    model: &dyn Motility,
    v_bound: f64,
    k: f64,
    tol: f64,
) -> Result<f64> {
    let dual = DualSolver::new(ops, tol)?;
    let psi_prev = dual.solve(u_prev)?;
    let psi_next = dual.solve(u_next)?;
    let sup_phi = model.sup_on(v_bound)?;
    Ok(dual_inequality_terms(&psi_prev, &psi_next, u_next, v_prev, ops, model, sup_phi, k)?.slack)
}

/// `−∫ I_h log v = −Σ m_i log v_i`.
pub fn entropy(v: &FeFunction, ops: &Operators) -> Result<f64> {
    ops.check_fn(v)?;
    let logs = compose_nodal(v, positive_log)?;
    let l = logs.values();
    Ok(-lumped_sum(ops, |i| l[i]))
}

fn positive_log(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NAN
    }
}

/// `‖∇ I_h log v‖²`.
pub fn grad_log_sq(v: &FeFunction, ops: &Operators) -> Result<f64> {
    ops.check_fn(v)?;
    let logs = compose_nodal(v, positive_log)?;
    Ok(quadratic_form(ops.stiffness(), logs.values(), logs.values()).max(0.0))
}

/// Slack of the per-step log-entropy inequality, and its right-hand side.
pub fn entropy_inequality_terms(
    v_prev: &FeFunction,
    v_next: &FeFunction,
    ops: &Operators,
    k: f64,
    mass_u0: f64,
) -> Result<(f64, f64)> {
    let rhs = entropy(v_prev, ops)? + k * mass_u0;
    let lhs = entropy(v_next, ops)? + k * grad_log_sq(v_next, ops)?;
    Ok((rhs - lhs, rhs))
}

pub fn check_entropy_inequality(
    v_prev: &FeFunction,
    v_next: &FeFunction,
    ops: &Operators,
    k: f64,
    mass_u0: f64,
) -> Result<f64> {
    Ok(entropy_inequality_terms(v_prev, v_next, ops, k, mass_u0)?.0)
}

fn lumped_integral(f: &FeFunction, ops: &Operators) -> f64 {
    let v = f.values();
    lumped_sum(ops, |i| v[i])
}

struct Previous {
    state: SchemeState,
    psi: FeFunction,
    entropy: f64,
    mass_v: f64,
    norm_v_sq: f64,
}

/// Computes a [`DiagnosticsRecord`] per state and checks every invariant
/// family against the previous state.
pub struct DiagnosticsTracker {
    dual: DualSolver,
    sup_phi: f64,
    v_max0: f64,
    mass_u0: f64,
    entropy0: f64,
    solver_tol: f64,
    tol_node: f64,
    check_dual: bool,
    previous: Option<Previous>,
}

impl DiagnosticsTracker {
    /// `v_max0 = max v_{0h}`; `check_dual` is false when the timestep
    /// condition does not hold (the dual inequality is then not implied).
    pub fn new(
        ops: &Operators,
        model: &dyn Motility,
        v_max0: f64,
        solver_tol: f64,
        tol_node: f64,
        check_dual: bool,
    ) -> Result<Self> {
        Ok(Self {
            dual: DualSolver::new(ops, solver_tol)?,
            sup_phi: model.sup_on(v_max0)?,
            v_max0,
            mass_u0: 0.0,
            entropy0: 0.0,
            solver_tol,
            tol_node,
            check_dual,
            previous: None,
        })
    }

    pub fn sup_phi(&self) -> f64 {
        self.sup_phi
    }

    /// Records `state`, which must be the initial state on the first call
    /// and the successor of the previously recorded state afterwards.
    pub fn record(
        &mut self,
        state: &SchemeState,
        ops: &Operators,
        model: &dyn Motility,
    ) -> Result<(DiagnosticsRecord, Vec<CheckOutcome>)> {
        same_mesh(ops, &[&state.u, &state.v])?;
        let n = state.n;
        let k = state.k;
        let mass_u = lumped_integral(&state.u, ops);
        let mass_v = lumped_integral(&state.v, ops);
        let psi = self.dual.solve(&state.u)?;
        let psi_sq = h1h_sq(&psi, ops)?;
        let ent = entropy(&state.v, ops)?;
        let glog = grad_log_sq(&state.v, ops)?;
        let v = state.v.values();
        let norm_v_sq = lumped_sum(ops, |i| v[i] * v[i]);

        let mut checks = Vec::new();
        let mut check = |family, passed: bool, message: String| {
            checks.push(CheckOutcome { family, step: n, passed, message });
        };

        let (min_u_node, min_u) = state.u.argmin();
        check(InvariantFamily::NodalU, min_u >= -self.tol_node, format!("u = {min_u:e} at node {min_u_node}"));
        let (min_v_node, min_v) = state.v.argmin();
        let (max_v_node, max_v) = state.v.argmax();
        check(
            InvariantFamily::NodalV,
            min_v > 0.0 && max_v <= self.v_max0 + self.tol_node,
            format!(
                "v ranges over [{min_v:e} (node {min_v_node}), {max_v:e} (node {max_v_node})], bound {:e}",
                self.v_max0
            ),
        );

        let (energy_res, dual_slack, ent_slack, flux) = match &self.previous {
            None => {
                self.mass_u0 = mass_u;
                self.entropy0 = ent;
                (0.0, 0.0, 0.0, 0.0)
            }
            Some(prev) => {
                if prev.state.n + 1 != n {
                    return Err(Error::Internal(format!("diagnostics expected step {}, got {n}", prev.state.n + 1)));
                }
                let drift = (mass_u - self.mass_u0).abs();
                let mass_tol = MASS_FACTOR * self.solver_tol * self.mass_u0;
                check(InvariantFamily::MassU, drift <= mass_tol, format!("mass drift {drift:e} > {mass_tol:e}"));
                let v_mass_tol = MASS_FACTOR * self.solver_tol * prev.mass_v;
                check(
                    InvariantFamily::MassV,
                    mass_v <= prev.mass_v + v_mass_tol,
                    format!("v mass grew from {:e} to {mass_v:e}", prev.mass_v),
                );

                let res = check_v_energy_identity(&prev.state.v, &state.v, &state.u, ops, k)?;
                let energy_tol = ENERGY_FACTOR * self.solver_tol * prev.norm_v_sq;
                check(
                    InvariantFamily::EnergyV,
                    res.abs() <= energy_tol,
                    format!("energy residual {res:e} exceeds {energy_tol:e}"),
                );

                let dual =
                    dual_inequality_terms(&prev.psi, &psi, &state.u, &prev.state.v, ops, model, self.sup_phi, k)?;
                if self.check_dual {
                    let tol = DUAL_TOL * (1.0 + dual.psi_next_sq);
                    check(InvariantFamily::Dual, dual.slack >= -tol, format!("dual slack {:e} < -{tol:e}", dual.slack));
                }
                check(
                    InvariantFamily::Flux,
                    dual.flux >= 0.0 && dual.flux.is_finite(),
                    format!("weighted mass flux {:e}", dual.flux),
                );

                let rhs = prev.entropy + k * self.mass_u0;
                let slack = rhs - (ent + k * glog);
                let tol = ENTROPY_TOL * (1.0 + rhs.abs());
                check(InvariantFamily::Entropy, slack >= -tol, format!("entropy slack {slack:e} < -{tol:e}"));
                let t = n as f64 * k;
                let bound = self.entropy0 + t * self.mass_u0 + ENTROPY_GLOBAL_TOL;
                check(
                    InvariantFamily::EntropyGlobal,
                    ent <= bound,
                    format!("entropy {ent:e} above telescoped bound {bound:e}"),
                );
                (res, dual.slack, slack, dual.flux)
            }
        };

        let record = DiagnosticsRecord {
            n,
            t: n as f64 * k,
            mass_u,
            mass_v,
            min_u,
            max_u: state.u.max(),
            min_v,
            max_v,
            energy_v_residual: energy_res,
            psi_h1h_sq: psi_sq,
            dual_ineq_slack: dual_slack,
            entropy: ent,
            entropy_ineq_slack: ent_slack,
            grad_log_v_sq: glog,
            weighted_mass_flux: flux,
        };
        self.previous = Some(Previous { state: state.clone(), psi, entropy: ent, mass_v, norm_v_sq });
        Ok((record, checks))
    }
}

/// Running sum of `2k(Φ(v^n)u^{n+1}, u^{n+1})_h` over a trajectory.
pub fn accumulated_flux(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let mut acc = NeumaierSum::new();
    records
        .iter()
        .map(|r| {
            acc.add(r.weighted_mass_flux);
            acc.value()
        })
        .collect()
}
