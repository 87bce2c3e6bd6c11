use ksfem::diagnostics::{
    check_dual_inequality, check_entropy_inequality, check_v_energy_identity, entropy, DiagnosticsTracker,
    InvariantFamily,
};
use ksfem::scheme::{run, DEFAULT_SOLVER_TOL, TOL_NODE};
use ksfem::{
    assemble, generate_rect_mesh, step_u, step_v, FeFunction, Field, InitialData, Mesh, MotilityModel, Operators,
    SchemeConfig, SchemeState,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn unit_square() -> (Mesh, Operators) {
    let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]]).unwrap();
    let ops = assemble(&mesh);
    (mesh, ops)
}

fn phi1() -> MotilityModel {
    MotilityModel::power(1.0, 1.0).unwrap()
}

#[test]
fn energy_identity_for_the_constant_state() {
    let (mesh, ops) = unit_square();
    let v0 = FeFunction::constant(&mesh, 2.0);
    let v1 = FeFunction::constant(&mesh, 2.0 / 1.1);
    let u1 = FeFunction::constant(&mesh, 1.0);
    let r = check_v_energy_identity(&v0, &v1, &u1, &ops, 0.1).unwrap();
    assert!(r.abs() <= 1e-12, "residual {r:e}");
}

#[test]
fn energy_identity_is_exactly_zero_when_stationary() {
    let (mesh, ops) = unit_square();
    let v = FeFunction::constant(&mesh, 3.0);
    let u = FeFunction::zeros(&mesh);
    assert_eq!(check_v_energy_identity(&v, &v, &u, &ops, 0.1).unwrap(), 0.0);
}

fn random_state(mesh: &Mesh, rng: &mut StdRng, k: f64) -> SchemeState {
    let n = mesh.num_vertices();
    SchemeState {
        n: 0,
        u: FeFunction::new(mesh, (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap(),
        v: FeFunction::new(mesh, (0..n).map(|_| rng.gen_range(0.2..1.0)).collect()).unwrap(),
        k,
    }
}

#[test]
fn random_steps_satisfy_every_identity_and_inequality() {
    let mesh = generate_rect_mesh(8, 8, 1.0, 1.0).unwrap();
    let ops = assemble(&mesh);
    let model = phi1();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let k = rng.gen_range(0.01..0.4);
        let state = random_state(&mesh, &mut rng, k);
        let cfg = SchemeConfig::new(k, 1);
        let u1 = step_u(&state, &ops, &model, &cfg).unwrap();
        let v1 = step_v(&state, &u1, &ops, &cfg).unwrap();

        let r = check_v_energy_identity(&state.v, &v1, &u1, &ops, k).unwrap();
        assert!(r.abs() <= 1e-10, "energy residual {r:e}");

        assert!(v1.min() > 0.0);
        assert!(v1.max() <= state.v.max() + 1e-12);

        let mass_u0 = ksfem::fem::integral_lumped(&state.u, &ops).unwrap();
        let s = check_entropy_inequality(&state.v, &v1, &ops, k, mass_u0).unwrap();
        assert!(s >= -1e-9, "entropy slack {s:e}");

        // The dual inequality needs the timestep condition 2k·sup Φ < 1.
        let vmax = state.v.max();
        if 2.0 * k * vmax < 1.0 {
            let s = check_dual_inequality(&state.u, &u1, &state.v, &ops, &model, vmax, k, DEFAULT_SOLVER_TOL).unwrap();
            assert!(s >= -1e-9, "dual slack {s:e}");
        }
    }
}

#[test]
fn dual_slack_vanishes_without_cells() {
    let (mesh, ops) = unit_square();
    let zero = FeFunction::zeros(&mesh);
    let v = FeFunction::constant(&mesh, 1.0);
    let s = check_dual_inequality(&zero, &zero, &v, &ops, &phi1(), 1.0, 0.1, DEFAULT_SOLVER_TOL).unwrap();
    assert_eq!(s, 0.0);
}

#[test]
fn dual_slack_for_the_constant_state() {
    let (mesh, ops) = unit_square();
    let one = FeFunction::constant(&mesh, 1.0);
    let two = FeFunction::constant(&mesh, 2.0);
    // ψ ≡ 1 both steps, so the slack is 2k·2·|Ω| − 2k·Φ(2)·|Ω| = 0 up to rounding.
    let s = check_dual_inequality(&one, &one, &two, &ops, &phi1(), 2.0, 0.1, DEFAULT_SOLVER_TOL).unwrap();
    assert!(s >= -1e-14, "slack {s:e}");
    assert!(s.abs() <= 1e-12);
}

#[test]
fn entropy_slack_examples() {
    let (mesh, ops) = unit_square();
    let c = FeFunction::constant(&mesh, 3.0);
    assert_eq!(check_entropy_inequality(&c, &c, &ops, 0.1, 0.0).unwrap(), 0.0);
    let s = check_entropy_inequality(&c, &c, &ops, 0.1, 2.0).unwrap();
    assert!((s - 0.2).abs() < 1e-15);

    // v: c → c/(1+km) raises the entropy by |Ω| log(1+km) ≤ k m |Ω|.
    let (k, m) = (0.1, 1.0);
    let next = FeFunction::constant(&mesh, 3.0 / (1.0 + k * m));
    let s = check_entropy_inequality(&c, &next, &ops, k, m).unwrap();
    let closed = k * m - (1.0 + k * m).ln();
    assert!((s - closed).abs() < 1e-14 && s > 0.0);
}

#[test]
fn entropy_rejects_a_vanishing_concentration() {
    let (mesh, ops) = unit_square();
    let v = FeFunction::new(&mesh, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
    assert!(entropy(&v, &ops).is_err());
}

#[test]
fn stationary_record() {
    let (mesh, ops) = unit_square();
    let model = phi1();
    let c = 3.0;
    let state = SchemeState { n: 0, u: FeFunction::zeros(&mesh), v: FeFunction::constant(&mesh, c), k: 0.1 };
    let mut tracker = DiagnosticsTracker::new(&ops, &model, c, DEFAULT_SOLVER_TOL, TOL_NODE, true).unwrap();
    let (rec, checks) = tracker.record(&state, &ops, &model).unwrap();
    assert_eq!(rec.mass_u, 0.0);
    assert!((rec.entropy + c.ln()).abs() < 1e-15);
    assert_eq!(rec.grad_log_v_sq, 0.0);
    assert!(checks.iter().all(|c| c.passed));

    let next = SchemeState { n: 1, ..state.clone() };
    let (rec, checks) = tracker.record(&next, &ops, &model).unwrap();
    assert_eq!(rec.energy_v_residual, 0.0);
    assert!(checks.iter().all(|c| c.passed), "{checks:?}");

    let skipped = SchemeState { n: 3, ..state };
    assert!(tracker.record(&skipped, &ops, &model).is_err());
}

#[test]
fn uniform_cells_keep_unit_mass() {
    let mesh = generate_rect_mesh(4, 4, 1.0, 1.0).unwrap();
    let ops = assemble(&mesh);
    let init = InitialData::new(Field::Constant { c: 1.0 }, Field::Constant { c: 1.0 }).unwrap();
    let traj = run(&mesh, &ops, phi1(), &init, &SchemeConfig::new(1.0, 10)).unwrap();
    for r in &traj.records {
        assert!((r.mass_u - 1.0).abs() < 1e-13);
    }
}

#[test]
fn gaussian_run_satisfies_all_invariants() {
    let mesh = generate_rect_mesh(16, 16, 1.0, 1.0).unwrap();
    let ops = assemble(&mesh);
    let u0 = Field::Gaussian { c: 0.0, a: 1.0, x0: 0.5, y0: 0.5, w: 0.15 };
    let init = InitialData::new(u0, Field::Constant { c: 1.0 }).unwrap();
    let traj = run(&mesh, &ops, phi1(), &init, &SchemeConfig::new(1.0, 20)).unwrap();
    assert_eq!(traj.records.len(), 21);
    for family in InvariantFamily::ALL {
        let (checked, failed) = traj.tally.get(family);
        assert_eq!(failed, 0, "{family} failed {failed} of {checked}");
    }
    assert!(traj.tally.get(InvariantFamily::Dual).0 > 0);
    let vmax0 = traj.v_max0;
    assert!(traj.records.iter().all(|r| r.max_v <= vmax0 + 1e-10));
}
