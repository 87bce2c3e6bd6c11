//! Successive-refinement (Cauchy) study.
//!
//! Level `ℓ` runs on the `(nx·2^ℓ) × (ny·2^ℓ)` mesh with `N·2^ℓ` steps. Each
//! level is compared with the next through the piecewise-constant-in-time
//! interpolants `v̂(t) = v^{n+1}` on `[t_n, t_{n+1})`: the coarse field is
//! interpolated onto the nested fine mesh (exact for P1) and the difference
//! is integrated exactly over every fine sub-step.

use crate::config::{MeshSource, RunConfig};
use crate::error::{Error, Result};
use crate::fem::{assemble, norm_l1_lumped, norm_l2, FeFunction, Operators};
use crate::mesh::{generate_rect_mesh, Mesh, PointLocator};
use crate::scheme::{run, SchemeState, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelDifference {
    pub level: usize,
    pub nx: usize,
    pub ny: usize,
    pub steps: usize,
    pub h: f64,
    pub k: f64,
    /// `‖v̂_ℓ − v̂_{ℓ+1}‖_{L²(0,T; L²)}`
    pub d_v_l2: f64,
    /// `‖û_ℓ − û_{ℓ+1}‖_{L¹(0,T; L¹_h)}`
    pub d_u_l1: f64,
}

impl LevelDifference {
    pub const CSV_HEADER: &'static str = "level,nx,ny,N,h,k,d_v_l2,d_u_l1";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.level, self.nx, self.ny, self.steps, self.h, self.k, self.d_v_l2, self.d_u_l1
        )
    }
}

struct LevelRun {
    nx: usize,
    ny: usize,
    mesh: Mesh,
    ops: Operators,
    trajectory: Trajectory,
}

fn run_level(cfg: &RunConfig, level: usize) -> Result<LevelRun> {
    let MeshSource::Generate { nx, ny, lx, ly } = cfg.mesh else {
        return Err(Error::Config("a convergence study needs a generated mesh (mesh.nx/ny)".into()));
    };
    let factor =
        1usize.checked_shl(level as u32).ok_or_else(|| Error::Overflow(format!("refinement level {level}")))?;
    let mul = |a: usize| a.checked_mul(factor).ok_or_else(|| Error::Overflow(format!("level {level}")));
    let (nx, ny) = (mul(nx)?, mul(ny)?);
    let mut scheme = cfg.scheme.clone();
    scheme.steps = mul(scheme.steps)?;
    scheme.output_every = 1;
    let mesh = generate_rect_mesh(nx, ny, lx, ly)?;
    let ops = assemble(&mesh);
    let trajectory = run(&mesh, &ops, cfg.motility, &cfg.initial, &scheme)?;
    Ok(LevelRun { nx, ny, mesh, ops, trajectory })
}

/// Interpolation weights of the coarse P1 space at every fine vertex.
fn prolongation(coarse: &Mesh, fine: &Mesh) -> Result<Vec<([usize; 3], [f64; 3])>> {
    let locator = PointLocator::new(coarse);
    fine.vertices()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (t, lam) = locator
                .locate(p)
                .ok_or_else(|| Error::Internal(format!("fine vertex {i} lies outside the coarse mesh")))?;
            Ok((coarse.triangles()[t], lam))
        })
        .collect()
}

fn prolong(weights: &[([usize; 3], [f64; 3])], coarse: &FeFunction, fine: &Mesh) -> Result<FeFunction> {
    let c = coarse.values();
    let values =
        weights.iter().map(|(tri, lam)| lam[0] * c[tri[0]] + lam[1] * c[tri[1]] + lam[2] * c[tri[2]]).collect();
    FeFunction::new(fine, values)
}

fn difference(a: &FeFunction, b: &FeFunction) -> Result<FeFunction> {
    a.check_same(b)?;
    a.with_values(a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect())
}

fn compare(coarse: &LevelRun, fine: &LevelRun) -> Result<(f64, f64)> {
    let weights = prolongation(&coarse.mesh, &fine.mesh)?;
    let cs: &[SchemeState] = &coarse.trajectory.states;
    let fs: &[SchemeState] = &fine.trajectory.states;
    let nc = cs.len() - 1;
    if fs.len() - 1 != 2 * nc {
        return Err(Error::Internal("fine level must have twice the coarse steps".into()));
    }
    let kf = fs[1].k;
    let (mut dv2, mut du1) = (0.0, 0.0);
    for j in 1..=2 * nc {
        let c = &cs[j.div_ceil(2)];
        let f = &fs[j];
        let dv = difference(&prolong(&weights, &c.v, &fine.mesh)?, &f.v)?;
        let du = difference(&prolong(&weights, &c.u, &fine.mesh)?, &f.u)?;
        dv2 += kf * norm_l2(&dv, &fine.mesh)?.powi(2);
        du1 += kf * norm_l1_lumped(&du, &fine.ops)?;
    }
    Ok((dv2.sqrt(), du1))
}

/// Runs `levels` refinement levels (in parallel) and returns the
/// `levels − 1` successive differences.
pub fn cauchy_study(cfg: &RunConfig, levels: usize) -> Result<Vec<LevelDifference>> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("a convergence study needs at least 2 levels (got {levels})")));
    }
    if !matches!(cfg.mesh, MeshSource::Generate { .. }) {
        return Err(Error::Config("a convergence study needs a generated mesh (mesh.nx/ny)".into()));
    }
    let runs: Vec<Result<LevelRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..levels).map(|l| s.spawn(move || run_level(cfg, l))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("level worker panicked".into()))))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    runs.windows(2)
        .enumerate()
        .map(|(level, pair)| {
            let (d_v_l2, d_u_l1) = compare(&pair[0], &pair[1])?;
            let c = &pair[0];
            Ok(LevelDifference {
                level,
                nx: c.nx,
                ny: c.ny,
                steps: c.trajectory.records.len() - 1,
                h: c.mesh.h_global(),
                k: c.trajectory.states[0].k,
                d_v_l2,
                d_u_l1,
            })
        })
        .collect()
}
