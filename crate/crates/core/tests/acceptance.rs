//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use ksfem::config::RunConfig;
use ksfem::converge::cauchy_study;
use ksfem::diagnostics::{ENERGY_FACTOR, ENTROPY_GLOBAL_TOL};
use ksfem::fem::{norm_h, norm_l1_lumped};
use ksfem::operators::integrate_quadrature;
use ksfem::oracle::{dense_dual_solve, dense_step_u};
use ksfem::scheme::{run, Trajectory, DEFAULT_SOLVER_TOL};
use ksfem::{
    assemble, check_weak_acuteness, dual_solve, generate_rect_mesh, project_qh, step_u, Error, FeFunction, Field,
    InitialData, Mesh, MotilityModel, SchemeConfig, SchemeState,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const DEMO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/gaussian_demo.cfg");

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// 16×16, unit-mass gaussian u0, v0 ≡ 1, Φ(s) = s, T = 1, N = 40.
fn run_one() -> Result<(Mesh, Trajectory), String> {
    let mesh = generate_rect_mesh(16, 16, 1.0, 1.0).map_err(err)?;
    let ops = assemble(&mesh);
    let u0 = Field::Gaussian { c: 0.0, a: 1.0, x0: 0.5, y0: 0.5, w: 0.15 };
    let init = InitialData::new(u0, Field::Constant { c: 1.0 }).and_then(|d| d.with_mass(1.0)).map_err(err)?;
    let mut cfg = SchemeConfig::new(1.0, 40);
    cfg.output_every = 1;
    let model = MotilityModel::power(1.0, 1.0).map_err(err)?;
    let traj = run(&mesh, &ops, model, &init, &cfg).map_err(err)?;
    Ok((mesh, traj))
}

/// u0 ≡ 1, v0 ≡ 2, Φ(s) = s, k = 0.1, N = 10.
fn run_three() -> Result<(Mesh, Trajectory), String> {
    let mesh = generate_rect_mesh(8, 8, 1.0, 1.0).map_err(err)?;
    let ops = assemble(&mesh);
    let init = InitialData::new(Field::Constant { c: 1.0 }, Field::Constant { c: 2.0 }).map_err(err)?;
    let mut cfg = SchemeConfig::new(1.0, 10);
    cfg.output_every = 1;
    let model = MotilityModel::power(1.0, 1.0).map_err(err)?;
    let traj = run(&mesh, &ops, model, &init, &cfg).map_err(err)?;
    Ok((mesh, traj))
}

fn mass_conservation(run1: &(Mesh, Trajectory)) -> Outcome {
    let (_, traj) = run1;
    let margin = traj.k_condition.margin();
    if (margin - 0.95).abs() > 1e-12 {
        return Err(format!("k-condition margin {margin} differs from 0.95"));
    }
    let worst = traj.records.iter().map(|r| (r.mass_u - 1.0).abs()).fold(0.0, f64::max);
    ensure(
        worst <= 1e-10 && traj.records.len() == 41,
        format!("max |mass_u - 1| = {worst:.3e} over {} records", traj.records.len()),
    )
}

fn nodal_bounds(run1: &(Mesh, Trajectory)) -> Outcome {
    let (_, traj) = run1;
    let vmax0 = traj.states[0].v.max();
    let min_u = traj.records.iter().map(|r| r.min_u).fold(f64::INFINITY, f64::min);
    let min_v = traj.records.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min);
    let max_v = traj.records.iter().map(|r| r.max_v).fold(f64::NEG_INFINITY, f64::max);
    let nodal_ok = traj.states.iter().all(|s| {
        s.u.values().iter().all(|&u| u >= -1e-10) && s.v.values().iter().all(|&v| v > 0.0 && v <= vmax0 + 1e-10)
    });
    ensure(
        nodal_ok && min_u >= -1e-10 && min_v > 0.0 && max_v <= vmax0 + 1e-10,
        format!("min u = {min_u:.3e}, v in [{min_v:.6e}, {max_v:.6e}], max v0h = {vmax0:.6e}"),
    )
}

fn constant_state(run3: &(Mesh, Trajectory)) -> Outcome {
    let (_, traj) = run3;
    if traj.states.len() != 11 {
        return Err(format!("expected 11 snapshots, got {}", traj.states.len()));
    }
    let (mut du, mut dv) = (0.0f64, 0.0f64);
    for s in &traj.states {
        let exact_v = 2.0 / 1.1f64.powi(s.n as i32);
        for (&u, &v) in s.u.values().iter().zip(s.v.values()) {
            du = du.max((u - 1.0).abs());
            dv = dv.max((v - exact_v).abs() / exact_v);
        }
    }
    ensure(du <= 1e-12 && dv <= 1e-11, format!("max |u - 1| = {du:.3e}, max rel |v - 2/1.1^n| = {dv:.3e}"))
}

fn energy_identity(runs: [&(Mesh, Trajectory); 2]) -> Outcome {
    let mut worst_ratio = 0.0f64;
    for (mesh, traj) in runs {
        let ops = assemble(mesh);
        for (pair, rec) in traj.states.windows(2).zip(&traj.records[1..]) {
            let vn_sq = norm_h(&pair[0].v, &ops).map_err(err)?.powi(2);
            let bound = ENERGY_FACTOR * DEFAULT_SOLVER_TOL * vn_sq;
            worst_ratio = worst_ratio.max(rec.energy_v_residual.abs() / bound);
        }
    }
    ensure(worst_ratio <= 1.0, format!("max |residual| / (100 tol ||v^n||_h^2) = {worst_ratio:.3e}"))
}

fn dual_inequality(run1: &(Mesh, Trajectory)) -> Outcome {
    let (_, traj) = run1;
    let worst = traj.records[1..].iter().map(|r| r.dual_ineq_slack).fold(f64::INFINITY, f64::min);
    ensure(worst >= -1e-9, format!("min dual slack = {worst:.3e}"))
}

fn entropy_inequality(run1: &(Mesh, Trajectory)) -> Outcome {
    let (_, traj) = run1;
    let e0 = traj.records[0].entropy;
    let mass0 = traj.records[0].mass_u;
    let per_step = traj.records[1..].iter().map(|r| r.entropy_ineq_slack).fold(f64::INFINITY, f64::min);
    let global = traj.records.iter().map(|r| e0 + r.t * mass0 - r.entropy).fold(f64::INFINITY, f64::min);
    ensure(
        per_step >= -1e-8 && global >= -ENTROPY_GLOBAL_TOL,
        format!("min per-step slack = {per_step:.3e}, min telescoped slack = {global:.3e}"),
    )
}

fn cli_exit(dir: &Path, name: &str, scale: f64) -> Result<i32, String> {
    let cfg = dir.join(format!("{name}.cfg"));
    let text = format!(
        "mesh.nx = 4\nmesh.ny = 4\ntime.T = 1\ntime.N = 2\nmotility.kind = power\nmotility.scale = {scale}\n\
         initial.u0.kind = constant\ninitial.u0.c = 1\ninitial.v0.kind = constant\ninitial.v0.c = 1\n\
         run.outdir = {name}_out\n"
    );
    std::fs::write(&cfg, text).map_err(err)?;
    let status = Command::new(env!("CARGO_BIN_EXE_ksfem")).arg("run").arg(&cfg).output().map_err(err)?.status;
    status.code().ok_or_else(|| "terminated by signal".to_string())
}

fn timestep_gate() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    // k = 1/2 and v0 ≡ 1, so 2k·supΦ equals the motility scale.
    let at_one = cli_exit(dir.path(), "critical", 1.0)?;
    let below = cli_exit(dir.path(), "subcritical", 0.999)?;
    let summary = std::fs::read_to_string(dir.path().join("critical_out/summary.txt")).unwrap_or_default();
    ensure(
        at_one == 3 && below == 0 && summary.contains("status: k_condition_rejected"),
        format!("exit {at_one} at 2k supPhi = 1.0, exit {below} at 0.999"),
    )
}

fn random_small_mesh(rng: &mut StdRng) -> Result<Mesh, String> {
    let nx = rng.gen_range(1..=4);
    let ny = rng.gen_range(1..=(25 / (nx + 1) - 1).min(4));
    let (lx, ly) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
    let base = generate_rect_mesh(nx, ny, lx, ly).map_err(err)?;
    let (hx, hy) = (lx / nx as f64, ly / ny as f64);
    let vertices = base
        .vertices()
        .iter()
        .map(|&[x, y]| {
            let interior = x > 0.0 && x < lx && y > 0.0 && y < ly;
            if interior {
                [x + rng.gen_range(-0.2..0.2) * hx, y + rng.gen_range(-0.2..0.2) * hy]
            } else {
                [x, y]
            }
        })
        .collect();
    Mesh::new(vertices, base.triangles().to_vec()).map_err(err)
}

fn random_model(rng: &mut StdRng) -> Result<MotilityModel, String> {
    let alpha = rng.gen_range(0.5..3.0);
    let scale = rng.gen_range(0.2..2.0);
    match rng.gen_range(0..3) {
        0 => MotilityModel::power(alpha, scale),
        1 => MotilityModel::power_plus_floor(alpha, scale, rng.gen_range(0.01..0.5)),
        _ => MotilityModel::bounded_rational(alpha, scale),
    }
    .map_err(err)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let (mut du, mut dpsi) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let mesh = random_small_mesh(&mut rng)?;
        if mesh.num_vertices() > 25 {
            return Err(format!("instance mesh has {} nodes", mesh.num_vertices()));
        }
        let ops = assemble(&mesh);
        let n = mesh.num_vertices();
        let u = FeFunction::new(&mesh, (0..n).map(|_| rng.gen_range(0.0..2.0)).collect()).map_err(err)?;
        let v = FeFunction::new(&mesh, (0..n).map(|_| rng.gen_range(0.1..2.0)).collect()).map_err(err)?;
        let model = random_model(&mut rng)?;
        let k = rng.gen_range(0.01..0.5);
        let state = SchemeState { n: 0, u: u.clone(), v: v.clone(), k };
        let cfg = SchemeConfig::new(k, 1);
        let sparse = step_u(&state, &ops, &model, &cfg).map_err(err)?;
        let dense = dense_step_u(&u, &v, &model, k, &mesh).map_err(err)?;
        du = sparse.values().iter().zip(dense.values()).map(|(a, b)| (a - b).abs()).fold(du, f64::max);
        let psi = dual_solve(&u, &ops, DEFAULT_SOLVER_TOL).map_err(err)?;
        let psi_dense = dense_dual_solve(&u, &mesh).map_err(err)?;
        dpsi = psi.values().iter().zip(psi_dense.values()).map(|(a, b)| (a - b).abs()).fold(dpsi, f64::max);
    }
    ensure(du <= 1e-11 && dpsi <= 1e-12, format!("max u-step diff = {du:.3e}, max dual diff = {dpsi:.3e}"))
}

/// Triangular lattice with equilateral interior triangles.
fn lattice_mesh(nx: usize, ny: usize) -> Result<Mesh, String> {
    let h = 1.0;
    let dy = h * 3f64.sqrt() / 2.0;
    let mut vertices = Vec::new();
    for j in 0..=ny {
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..=nx {
            vertices.push([i as f64 * h + shift, j as f64 * dy]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if j % 2 == 0 {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            } else {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    Mesh::new(vertices, triangles).map_err(err)
}

fn perturb(mesh: &Mesh, amplitude: f64, rng: &mut StdRng) -> Result<Mesh, String> {
    let vertices = mesh
        .vertices()
        .iter()
        .map(|&[x, y]| [x + rng.gen_range(-amplitude..amplitude), y + rng.gen_range(-amplitude..amplitude)])
        .collect();
    Mesh::new(vertices, mesh.triangles().to_vec()).map_err(err)
}

fn acuteness() -> Outcome {
    for &(nx, ny, lx, ly) in &[(1, 1, 1.0, 1.0), (4, 2, 2.0, 1.0), (16, 16, 1.0, 1.0), (7, 3, 0.3, 2.9)] {
        let mesh = generate_rect_mesh(nx, ny, lx, ly).map_err(err)?;
        let report = check_weak_acuteness(&mesh, None).map_err(err)?;
        if !report.is_weakly_acute || report.offdiag_max > report.tol_mat {
            return Err(format!("generated {nx}x{ny} mesh rejected"));
        }
    }
    // Shared edge (0,1) with opposite angles of 150° and 45°.
    let (s, c) = (PI / 12.0).sin_cos();
    let obtuse = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5 * s / c], [0.5, -0.5]], vec![[0, 1, 2], [1, 0, 3]])
        .map_err(err)?;
    let report = check_weak_acuteness(&obtuse, None).map_err(err)?;
    if report.is_weakly_acute || report.offdiag_max <= report.tol_mat {
        return Err("obtuse pair accepted".into());
    }

    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let (mut acute, mut obtuse) = (0, 0);
    for trial in 0..100 {
        let base = if trial % 2 == 0 {
            lattice_mesh(rng.gen_range(2..6), rng.gen_range(2..6))?
        } else {
            generate_rect_mesh(rng.gen_range(2..6), rng.gen_range(2..6), 1.0, 1.0).map_err(err)?
        };
        let amplitude = rng.gen_range(1e-4..0.15) * base.h_min();
        let mesh = perturb(&base, amplitude, &mut rng)?;
        match check_weak_acuteness(&mesh, None) {
            Ok(r) => {
                let by_matrix = r.offdiag_max <= r.tol_mat;
                if by_matrix != r.is_weakly_acute {
                    return Err(format!("trial {trial}: verdicts disagree"));
                }
                if r.is_weakly_acute {
                    acute += 1;
                } else {
                    obtuse += 1;
                }
            }
            Err(Error::Internal(m)) => return Err(format!("trial {trial}: {m}")),
            Err(e) => return Err(format!("trial {trial}: {e}")),
        }
    }
    ensure(
        acute > 0 && obtuse > 0,
        format!("generated meshes pass, obtuse pair fails, 100 perturbed meshes agree ({acute} acute, {obtuse} not)"),
    )
}

fn cauchy_convergence() -> Outcome {
    let overrides = ["mesh.nx=8", "mesh.ny=8", "time.N=20"].map(String::from);
    let cfg = RunConfig::load_with_overrides(DEMO, &overrides).map_err(err)?;
    let table = cauchy_study(&cfg, 3).map_err(err)?;
    let (d0, d1) = (table[0].d_v_l2, table[1].d_v_l2);
    ensure(
        table.len() == 2 && d1 < d0 && d1.is_finite(),
        format!("d_0 = {d0:.6e}, d_1 = {d1:.6e} (ratio {:.3})", d0 / d1),
    )
}

/// Nonnegative field, piecewise quadratic across the line `x = split`.
fn random_piecewise_field(rng: &mut StdRng) -> impl Fn(f64, f64) -> f64 {
    let split = rng.gen_range(0.2..0.8);
    let mut coeffs = [[0.0; 4]; 4];
    for c in &mut coeffs {
        *c = [rng.gen_range(0.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)];
    }
    let floor = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.5) };
    move |x, y| {
        let piece = if x < split { &coeffs[..2] } else { &coeffs[2..] };
        floor + piece.iter().map(|c| c[0] * (c[1] * x + c[2] * y + c[3]).powi(2)).sum::<f64>()
    }
}

fn qh_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0011);
    let mut worst_l1 = f64::NEG_INFINITY;
    let mut worst_max = f64::NEG_INFINITY;
    let mut worst_const = 0.0f64;
    for _ in 0..100 {
        let mesh = generate_rect_mesh(rng.gen_range(2..12), rng.gen_range(2..12), 1.0, rng.gen_range(0.5..2.0))
            .map_err(err)?;
        let ops = assemble(&mesh);
        let f = random_piecewise_field(&mut rng);
        let q = project_qh(&f, &mesh, &ops).map_err(err)?;
        if q.min() < 0.0 {
            return Err(format!("negative projection {:.3e}", q.min()));
        }
        let l1 = integrate_quadrature(&f, &mesh).map_err(err)?;
        worst_l1 = worst_l1.max(norm_l1_lumped(&q, &ops).map_err(err)? - l1);
        // The largest value the quadrature sees is a lower bound for sup f.
        let sup = mesh
            .edges()
            .iter()
            .map(|e| {
                let [a, b] = e.vertices.map(|v| mesh.vertex(v));
                f(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst_max = worst_max.max(q.max() - sup);
        let c = rng.gen_range(0.0..10.0);
        let qc = project_qh(|_, _| c, &mesh, &ops).map_err(err)?;
        worst_const = qc.values().iter().map(|&x| (x - c).abs() / c.max(1.0)).fold(worst_const, f64::max);
    }
    ensure(
        worst_l1 <= 1e-12 && worst_max <= 1e-12 && worst_const <= 1e-14,
        format!("L1 excess {worst_l1:.3e}, sup excess {worst_max:.3e}, constant reproduction error {worst_const:.3e}"),
    )
}

fn main() {
    let run1 = run_one();
    let run3 = run_three();
    let with = |r: &Result<(Mesh, Trajectory), String>, f: &dyn Fn(&(Mesh, Trajectory)) -> Outcome| match r {
        Ok(r) => f(r),
        Err(e) => Err(format!("run failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("mass conservation", with(&run1, &mass_conservation)),
        ("nodal bounds", with(&run1, &nodal_bounds)),
        ("constant-state closed form", with(&run3, &constant_state)),
        (
            "v-energy identity",
            match (&run1, &run3) {
                (Ok(a), Ok(b)) => energy_identity([a, b]),
                _ => Err("run failed".into()),
            },
        ),
        ("dual inequality", with(&run1, &dual_inequality)),
        ("entropy inequality", with(&run1, &entropy_inequality)),
        ("timestep gate", timestep_gate()),
        ("oracle equivalence", oracle_equivalence()),
        ("acuteness certification", acuteness()),
        ("Cauchy convergence", cauchy_convergence()),
        ("Q_h properties", qh_properties()),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
