//! Command-line front end: `mesh gen`, `mesh check`, `run`, `converge`.
//!
//! Exit codes: 0 success, 1 validation/invariant failure, 2 usage, config,
//! parse or I/O error, 3 timestep-condition rejection.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::config::RunConfig;
use crate::converge::{cauchy_study, LevelDifference};
use crate::diagnostics::{DiagnosticsRecord, InvariantFamily};
use crate::error::Error;
use crate::fem::assemble;
use crate::mesh::{check_weak_acuteness, generate_rect_mesh, load_mesh, save_mesh, Mesh};
use crate::scheme::{InvariantMode, SchemeState, Simulation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_K_CONDITION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ksfem", version, about = "Structure-preserving FEM for degenerate Keller-Segel with local sensing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh generation and certification.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Run a simulation from a config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set time.N=80`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (overrides run.outdir).
        #[arg(long)]
        outdir: Option<PathBuf>,
    },
    /// Successive-refinement convergence study.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=12))]
        levels: u32,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        outdir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MeshCommand {
    /// Write a uniform diagonal-split rectangle mesh.
    Gen {
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Validate a mesh file and certify weak acuteness.
    Check { path: PathBuf },
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Mesh { command: MeshCommand::Gen { nx, ny, lx, ly, output } } => cmd_mesh_gen(nx, ny, lx, ly, &output),
        Command::Mesh { command: MeshCommand::Check { path } } => cmd_mesh_check(&path),
        Command::Run { config, overrides, outdir } => cmd_run(&config, &overrides, outdir.as_deref()),
        Command::Converge { config, levels, overrides, outdir } => {
            cmd_converge(&config, levels as usize, &overrides, outdir.as_deref())
        }
    }
}

/// Exit code for an error raised while running.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::TimestepCondition { .. } => EXIT_K_CONDITION,
        Error::Parse { .. } | Error::Io { .. } | Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_VALIDATION,
    }
}

pub fn cmd_mesh_gen(nx: usize, ny: usize, lx: f64, ly: f64, output: &Path) -> i32 {
    let mesh = match generate_rect_mesh(nx, ny, lx, ly) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = save_mesh(&mesh, output) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    println!(
        "wrote {} ({} nodes, {} triangles, h = {:.6e})",
        output.display(),
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.h_global()
    );
    EXIT_OK
}

pub fn cmd_mesh_check(path: &Path) -> i32 {
    let mesh = match load_mesh(path) {
        Ok(m) => m,
        Err(e @ (Error::Parse { .. } | Error::Io { .. })) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("invalid mesh: {e}");
            return EXIT_VALIDATION;
        }
    };
    let ops = assemble(&mesh);
    match check_weak_acuteness(&mesh, Some(&ops)) {
        Ok(report) => {
            println!("nodes: {}", mesh.num_vertices());
            println!("triangles: {}", mesh.num_triangles());
            println!("h_global: {:.16e}", mesh.h_global());
            println!("h_min: {:.16e}", mesh.h_min());
            println!("quasi_uniformity_ratio: {:.16e}", mesh.quasi_uniformity_ratio());
            println!("{report}");
            if report.is_weakly_acute {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn write_fields(dir: &Path, mesh: &Mesh, state: &SchemeState) -> Result<(), Error> {
    let path = dir.join(format!("fields_{}.csv", state.n));
    let mut out = String::from("node_index,x,y,u,v\n");
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ =
            writeln!(out, "{i},{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], state.u.values()[i], state.v.values()[i]);
    }
    fs::write(&path, out).map_err(io_err(&path))
}

struct RunSummary<'a> {
    status: &'a str,
    error: Option<String>,
    lines: Vec<(String, String)>,
}

impl RunSummary<'_> {
    fn write(&self, dir: &Path) -> Result<(), Error> {
        let path = dir.join("summary.txt");
        let mut out = format!("status: {}\n", self.status);
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {}", e.replace('\n', " "));
        }
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k}: {v}");
        }
        fs::write(&path, out).map_err(io_err(&path))
    }
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn cmd_run(config: &Path, overrides: &[String], outdir: Option<&Path>) -> i32 {
    let cfg = match RunConfig::load_with_overrides(config, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let outdir = outdir.map_or_else(|| cfg.outdir.clone(), Path::to_path_buf);
    if let Err(e) = fs::create_dir_all(&outdir) {
        eprintln!("error: {}: {e}", outdir.display());
        return EXIT_USAGE;
    }
    match execute_run(&cfg, &outdir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            let status = match code {
                EXIT_K_CONDITION => "k_condition_rejected",
                EXIT_USAGE => "error",
                _ => "invariant_failure",
            };
            let summary = RunSummary { status, error: Some(e.to_string()), lines: Vec::new() };
            let _ = summary.write(&outdir);
            code
        }
    }
}

fn execute_run(cfg: &RunConfig, outdir: &Path) -> Result<i32, Error> {
    let mesh = cfg.mesh.build()?;
    let ops = assemble(&mesh);
    if !cfg.scheme.skip_mesh_check {
        let report = check_weak_acuteness(&mesh, Some(&ops))?;
        if !report.is_weakly_acute {
            let [a, b] = report.worst_edge_vertices;
            return Err(Error::NotWeaklyAcute { a, b, worst_angle_sum: report.worst_angle_sum });
        }
    }
    info!("mesh: {} nodes, {} triangles, h = {:.3e}", mesh.num_vertices(), mesh.num_triangles(), mesh.h_global());
    let (u0h, v0h) = cfg.initial.project(&mesh, &ops)?;
    let mut sim = Simulation::new(ops, cfg.motility, u0h, v0h, cfg.scheme.clone())?;

    let diag_path = outdir.join("diagnostics.csv");
    let file = File::create(&diag_path).map_err(io_err(&diag_path))?;
    let mut diag = BufWriter::new(file);
    let write_row =
        |w: &mut BufWriter<File>, r: &DiagnosticsRecord| writeln!(w, "{}", r.to_csv_row()).map_err(io_err(&diag_path));
    writeln!(diag, "{}", DiagnosticsRecord::CSV_HEADER).map_err(io_err(&diag_path))?;
    write_row(&mut diag, &sim.records()[0])?;
    write_fields(outdir, &mesh, sim.state())?;

    let every = cfg.scheme.output_every;
    let steps = cfg.scheme.steps;
    let mut failure = None;
    while !sim.is_finished() {
        match sim.step() {
            Ok(r) => {
                let r = r.clone();
                write_row(&mut diag, &r)?;
                let n = sim.state().n;
                if n % every == 0 || n == steps {
                    info!("step {n}/{steps}: mass_u = {:.16e}, min v = {:.6e}", r.mass_u, r.min_v);
                    write_fields(outdir, &mesh, sim.state())?;
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    diag.flush().map_err(io_err(&diag_path))?;

    let records = sim.records();
    let mass0 = records[0].mass_u;
    let max_drift = records.iter().map(|r| (r.mass_u - mass0).abs()).fold(0.0, f64::max);
    let kc = sim.k_condition();
    let mut lines = vec![
        ("steps_completed".to_string(), sim.state().n.to_string()),
        ("steps_requested".to_string(), steps.to_string()),
        ("T".to_string(), sci(cfg.scheme.t_final)),
        ("k".to_string(), sci(cfg.scheme.k())),
        ("nodes".to_string(), mesh.num_vertices().to_string()),
        ("h_global".to_string(), sci(mesh.h_global())),
        ("k_condition".to_string(), if kc.pass { "pass" } else { "fail" }.to_string()),
        ("k_condition_value".to_string(), sci(kc.value)),
        ("k_condition_margin".to_string(), sci(kc.margin())),
        ("sup_phi".to_string(), sci(sim.sup_phi())),
        ("v_max0".to_string(), sci(sim.v_max0())),
        ("mass_u0".to_string(), sci(mass0)),
        ("max_mass_drift".to_string(), sci(max_drift)),
        ("invariant_mode".to_string(), cfg.scheme.invariant_mode.to_string()),
    ];
    for family in InvariantFamily::ALL {
        let (checked, failed) = sim.tally().get(family);
        let verdict = if checked == 0 {
            "skipped"
        } else if failed == 0 {
            "pass"
        } else {
            "fail"
        };
        lines.push((format!("invariant.{family}"), format!("{verdict} (checked {checked}, failed {failed})")));
    }

    let (status, code, error) = match failure {
        Some(e) => ("invariant_failure", exit_code(&e).max(EXIT_VALIDATION), Some(e.to_string())),
        None if cfg.scheme.invariant_mode == InvariantMode::Fail && !sim.tally().all_passed() => {
            ("invariant_failure", EXIT_VALIDATION, None)
        }
        None => ("ok", EXIT_OK, None),
    };
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    RunSummary { status, error, lines }.write(outdir)?;
    println!("{status}: {} steps, outputs in {}", sim.state().n, outdir.display());
    Ok(code)
}

pub fn cmd_converge(config: &Path, levels: usize, overrides: &[String], outdir: Option<&Path>) -> i32 {
    let cfg = match RunConfig::load_with_overrides(config, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let outdir = outdir.map_or_else(|| cfg.outdir.clone(), Path::to_path_buf);
    info!("convergence study with {levels} levels");
    let table = match cauchy_study(&cfg, levels) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let mut out = String::from(LevelDifference::CSV_HEADER);
    out.push('\n');
    for row in &table {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    print!("{out}");
    if let Err(e) = fs::create_dir_all(&outdir) {
        eprintln!("error: {}: {e}", outdir.display());
        return EXIT_USAGE;
    }
    let path = outdir.join("convergence.csv");
    if let Err(e) = fs::write(&path, out) {
        eprintln!("error: {}: {e}", path.display());
        return EXIT_USAGE;
    }
    EXIT_OK
}
