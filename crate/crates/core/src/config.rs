//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # comment
//! mesh.nx = 16            # or: mesh.file = square.mesh
//! mesh.ny = 16
//! mesh.lx = 1
//! mesh.ly = 1
//! time.T = 1
//! time.N = 40
//! motility.kind = power   # power | power_plus_floor | bounded_rational
//! motility.alpha = 1
//! initial.u0.kind = gaussian
//! initial.u0.a = 1
//! initial.u0.w = 0.15
//! initial.u0.mass = 1
//! initial.v0.kind = constant
//! initial.v0.c = 1
//! run.invariant_mode = fail
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::{generate_rect_mesh, load_mesh, Mesh};
use crate::motility::{MotilityKind, MotilityModel};
use crate::operators::{Field, InitialData};
use crate::scheme::{InvariantMode, SchemeConfig, DEFAULT_SOLVER_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generate { nx: usize, ny: usize, lx: f64, ly: f64 },
    File(PathBuf),
}

impl MeshSource {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            MeshSource::Generate { nx, ny, lx, ly } => generate_rect_mesh(*nx, *ny, *lx, *ly),
            MeshSource::File(path) => load_mesh(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub scheme: SchemeConfig,
    pub motility: MotilityModel,
    pub initial: InitialData,
    pub outdir: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "mesh.nx",
    "mesh.ny",
    "mesh.lx",
    "mesh.ly",
    "mesh.file",
    "time.T",
    "time.N",
    "motility.kind",
    "motility.alpha",
    "motility.scale",
    "motility.floor",
    "solver.tol",
    "run.invariant_mode",
    "run.enforce_k_condition",
    "run.output_every",
    "run.outdir",
    "run.skip_mesh_check",
];

const FIELD_KEYS: &[&str] = &["kind", "c", "a", "x0", "y0", "w"];

fn is_known(key: &str) -> bool {
    if KNOWN_KEYS.contains(&key) || key == "initial.u0.mass" {
        return true;
    }
    ["initial.u0.", "initial.v0."].iter().any(|p| key.strip_prefix(p).is_some_and(|rest| FIELD_KEYS.contains(&rest)))
}

/// Ordered key/value pairs with the line each key came from.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
    source: PathBuf,
}

impl KeyValues {
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut kv = KeyValues { entries: BTreeMap::new(), source: source.to_path_buf() };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: source.to_path_buf(),
                line: i + 1,
                message: "expected `section.key = value`".into(),
            })?;
            kv.insert(key.trim(), value.trim(), i + 1)?;
        }
        Ok(kv)
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let err = |message: String| Error::Parse { path: self.source.clone(), line, message };
        if !is_known(key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(format!("empty value for `{key}`")));
        }
        if self.entries.contains_key(key) && line != 0 {
            return Err(err(format!("duplicate key `{key}`")));
        }
        self.entries.insert(key.to_string(), (value.to_string(), line));
        Ok(())
    }

    /// Applies a `key=value` override (from the command line).
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.insert(key.trim(), value.trim(), 0)
    }

    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| Error::Parse {
                path: self.source.clone(),
                line,
                message: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn field(&self, prefix: &str) -> Result<Field> {
        let kind: String = self.require(&format!("{prefix}.kind"))?;
        let num = |k: &str, default: f64| -> Result<f64> { Ok(self.get(&format!("{prefix}.{k}"))?.unwrap_or(default)) };
        match kind.as_str() {
            "constant" => Ok(Field::Constant { c: self.require(&format!("{prefix}.c"))? }),
            "gaussian" | "cosine" => {
                let (c, a) = (num("c", 0.0)?, self.require(&format!("{prefix}.a"))?);
                let (x0, y0, w) = (num("x0", 0.5)?, num("y0", 0.5)?, self.require(&format!("{prefix}.w"))?);
                Ok(if kind == "gaussian" {
                    Field::Gaussian { c, a, x0, y0, w }
                } else {
                    Field::Cosine { c, a, x0, y0, w }
                })
            }
            other => Err(Error::Config(format!("{prefix}.kind must be constant, gaussian or cosine (got `{other}`)"))),
        }
    }

    pub fn to_run_config(&self) -> Result<RunConfig> {
        let base = self.source.parent().map(Path::to_path_buf).unwrap_or_default();
        let grid_keys = ["mesh.nx", "mesh.ny", "mesh.lx", "mesh.ly"];
        let has_grid = grid_keys.iter().any(|k| self.raw(k).is_some());
        let mesh = match (has_grid, self.raw("mesh.file")) {
            (true, Some(_)) | (false, None) => {
                return Err(Error::Config("exactly one mesh source is required: mesh.nx/ny/lx/ly or mesh.file".into()))
            }
            (true, None) => MeshSource::Generate {
                nx: self.require("mesh.nx")?,
                ny: self.require("mesh.ny")?,
                lx: self.get("mesh.lx")?.unwrap_or(1.0),
                ly: self.get("mesh.ly")?.unwrap_or(1.0),
            },
            (false, Some((file, _))) => {
                let path = base.join(file);
                if !path.exists() {
                    return Err(Error::Config(format!("mesh file {} does not exist", path.display())));
                }
                MeshSource::File(path)
            }
        };

        let scheme = SchemeConfig {
            t_final: self.require("time.T")?,
            steps: self.require("time.N")?,
            solver_tol: self.get("solver.tol")?.unwrap_or(DEFAULT_SOLVER_TOL),
            invariant_mode: self.get::<InvariantMode>("run.invariant_mode")?.unwrap_or_default(),
            enforce_k_condition: self.get("run.enforce_k_condition")?.unwrap_or(true),
            output_every: self.get("run.output_every")?.unwrap_or(1),
            skip_mesh_check: self.get("run.skip_mesh_check")?.unwrap_or(false),
        };
        scheme.validate().map_err(|e| Error::Config(e.to_string()))?;

        let motility = MotilityModel::new(
            self.get::<MotilityKind>("motility.kind")?.unwrap_or(MotilityKind::Power),
            self.get("motility.alpha")?.unwrap_or(1.0),
            self.get("motility.scale")?.unwrap_or(1.0),
            self.get("motility.floor")?.unwrap_or(0.0),
        )
        .map_err(|e| Error::Config(e.to_string()))?;

        let mut initial = InitialData::new(self.field("initial.u0")?, self.field("initial.v0")?)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(mass) = self.get::<f64>("initial.u0.mass")? {
            initial = initial.with_mass(mass).map_err(|e| Error::Config(e.to_string()))?;
        }

        let outdir = match self.raw("run.outdir") {
            Some((dir, _)) => base.join(dir),
            None => base.join("out"),
        };
        Ok(RunConfig { mesh, scheme, motility, initial, outdir })
    }
}

impl RunConfig {
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        KeyValues::parse(text, source)?.to_run_config()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_overrides(path, &[])
    }

    /// Loads a config file and applies `key=value` overrides on top.
    pub fn load_with_overrides(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut kv = KeyValues::parse(&text, path)?;
        for o in overrides {
            kv.set(o)?;
        }
        kv.to_run_config()
    }
}
