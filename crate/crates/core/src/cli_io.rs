//! Flat `section.key = value` run configuration and deterministic output
//! emission with a manifest of every written file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{BoundaryData, Domain};
use crate::potentials::PotentialSpec;
use crate::relaxation::{InitKind, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeConfig {
    Rectangle { width: f64, height: f64, nx: usize, ny: usize },
    Disk { radius: f64, n: usize },
    Annulus { inner: f64, outer: f64, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BcConfig {
    Oned { a: f64 },
    Periodic { a: f64 },
    Degree { k: i32, alpha: f64 },
    Constant { u1: f64, u2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitConfig {
    Boundary,
    Random { seed: u64, amplitude: f64 },
    IsotropicDisk { radius: f64 },
}

/// Fully resolved relaxation run. `dt = None` means the stability bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: ShapeConfig,
    pub bc: BcConfig,
    pub eps: f64,
    pub l: f64,
    pub dt: Option<f64>,
    pub max_steps: usize,
    pub stop_tol: f64,
    pub snapshot_every: usize,
    pub init: InitConfig,
    pub potential_scale: f64,
}

const KEYS: &[&str] = &[
    "domain.shape",
    "domain.width",
    "domain.height",
    "domain.radius",
    "domain.inner",
    "domain.outer",
    "grid.nx",
    "grid.ny",
    "grid.n",
    "bc.kind",
    "bc.a",
    "bc.k",
    "bc.alpha",
    "bc.u1",
    "bc.u2",
    "solver.eps",
    "solver.L",
    "solver.dt",
    "solver.max_steps",
    "solver.stop_tol",
    "solver.snapshot_every",
    "init.kind",
    "init.seed",
    "init.amplitude",
    "init.radius",
    "potential.scale",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.map.get(key).map_or(0, |e| e.0),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|e| e.1.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| self.err(key, "required key missing"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.err(key, format!("cannot parse `{v}` as {}", std::any::type_name::<T>()))),
        }
    }

    fn parse_required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| self.err(key, format!("cannot parse `{v}` as {}", std::any::type_name::<T>())))
    }

    fn check(&self, key: &str, ok: bool, message: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.err(key, message))
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Parses a relaxation run configuration. Blank lines and `#` comments are
/// ignored; unknown or repeated keys are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        if map.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(Error::Parse {
                line,
                key: key.to_string(),
                message: "key given twice".into(),
            });
        }
    }
    let e = Entries { map };

    let domain = match e.required("domain.shape")? {
        "rectangle" => {
            let c = ShapeConfig::Rectangle {
                width: e.parse("domain.width", 0.4)?,
                height: e.parse("domain.height", 1.0)?,
                nx: e.parse("grid.nx", 64)?,
                ny: e.parse("grid.ny", 160)?,
            };
            if let ShapeConfig::Rectangle { width, height, nx, ny } = c {
                e.check("domain.width", positive(width), "width must be positive")?;
                e.check("domain.height", positive(height), "height must be positive")?;
                e.check("grid.nx", nx >= 3, "nx must be at least 3")?;
                e.check("grid.ny", ny >= 3, "ny must be at least 3")?;
            }
            c
        }
        "disk" => {
            let radius = e.parse("domain.radius", 1.0)?;
            let n = e.parse("grid.n", 128)?;
            e.check("domain.radius", positive(radius), "radius must be positive")?;
            e.check("grid.n", n >= 5, "n must be at least 5")?;
            ShapeConfig::Disk { radius, n }
        }
        "annulus" => {
            let inner = e.parse("domain.inner", 0.5)?;
            let outer = e.parse("domain.outer", 1.0)?;
            let n = e.parse("grid.n", 128)?;
            e.check("domain.outer", positive(outer), "outer radius must be positive")?;
            e.check("domain.inner", inner >= 0.0 && inner < outer, "inner radius must lie in [0, outer)")?;
            e.check("grid.n", n >= 5, "n must be at least 5")?;
            ShapeConfig::Annulus { inner, outer, n }
        }
        other => return Err(e.err("domain.shape", format!("unknown shape `{other}` (rectangle, disk, annulus)"))),
    };
    let is_rect = matches!(domain, ShapeConfig::Rectangle { .. });

    let bc = match e.required("bc.kind")? {
        kind @ ("oned" | "periodic") => {
            let a: f64 = e.parse("bc.a", 0.0)?;
            e.check("bc.a", (0.0..1.0).contains(&a), "a in [0,1)")?;
            e.check("bc.kind", is_rect, "one-dimensional data needs a rectangle")?;
            if kind == "oned" {
                BcConfig::Oned { a }
            } else {
                BcConfig::Periodic { a }
            }
        }
        "degree" => {
            let alpha: f64 = e.parse("bc.alpha", 0.0)?;
            e.check("bc.alpha", alpha.is_finite(), "alpha must be finite")?;
            BcConfig::Degree {
                k: e.parse_required("bc.k")?,
                alpha,
            }
        }
        "constant" => {
            let (u1, u2): (f64, f64) = (e.parse("bc.u1", 1.0)?, e.parse("bc.u2", 0.0)?);
            e.check("bc.u1", ((u1 * u1 + u2 * u2).sqrt() - 1.0).abs() <= 1e-12, "(u1, u2) must be a unit vector")?;
            BcConfig::Constant { u1, u2 }
        }
        other => return Err(e.err("bc.kind", format!("unknown kind `{other}` (oned, periodic, degree, constant)"))),
    };

    let eps: f64 = e.parse_required("solver.eps")?;
    e.check("solver.eps", positive(eps), "eps must be positive")?;
    let l: f64 = e.parse_required("solver.L")?;
    e.check("solver.L", l >= 0.0 && l.is_finite(), "L must be finite and non-negative")?;
    let dt = match e.raw("solver.dt") {
        None | Some("auto") => None,
        Some(_) => {
            let dt: f64 = e.parse_required("solver.dt")?;
            e.check("solver.dt", positive(dt), "dt must be positive")?;
            Some(dt)
        }
    };
    let max_steps = e.parse("solver.max_steps", 100_000usize)?;
    let stop_tol: f64 = e.parse("solver.stop_tol", 1e-6)?;
    e.check("solver.stop_tol", positive(stop_tol), "stop_tol must be positive")?;
    let snapshot_every = e.parse("solver.snapshot_every", 100usize)?;
    e.check("solver.snapshot_every", snapshot_every >= 1, "snapshot_every must be at least 1")?;

    let init = match e.raw("init.kind").unwrap_or("boundary") {
        "boundary" => InitConfig::Boundary,
        "random" => {
            let amplitude: f64 = e.parse("init.amplitude", 0.1)?;
            e.check("init.amplitude", amplitude >= 0.0 && amplitude.is_finite(), "amplitude must be non-negative")?;
            InitConfig::Random {
                seed: e.parse("init.seed", 0u64)?,
                amplitude,
            }
        }
        "isotropic_disk" => {
            let radius: f64 = e.parse("init.radius", 0.5)?;
            e.check("init.radius", positive(radius), "radius must be positive")?;
            InitConfig::IsotropicDisk { radius }
        }
        other => return Err(e.err("init.kind", format!("unknown kind `{other}` (boundary, random, isotropic_disk)"))),
    };
    let potential_scale: f64 = e.parse("potential.scale", 1.0)?;
    e.check("potential.scale", positive(potential_scale), "scale must be positive")?;

    let cfg = RunConfig {
        domain,
        bc,
        eps,
        l,
        dt,
        max_steps,
        stop_tol,
        snapshot_every,
        init,
        potential_scale,
    };
    if let Some(dt) = dt {
        let bound = cfg.to_sim_config()?.stability_bound();
        e.check("solver.dt", dt <= bound, &format!("dt exceeds the stability bound {bound:e}"))?;
    }
    Ok(cfg)
}

fn num(v: f64) -> String {
    // shortest representation that parses back to the same double
    format!("{v:?}")
}

impl RunConfig {
    /// Config text listing every resolved key; parses back to `self`.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match self.domain {
            ShapeConfig::Rectangle { width, height, nx, ny } => {
                put("domain.shape", "rectangle".into());
                put("domain.width", num(width));
                put("domain.height", num(height));
                put("grid.nx", nx.to_string());
                put("grid.ny", ny.to_string());
            }
            ShapeConfig::Disk { radius, n } => {
                put("domain.shape", "disk".into());
                put("domain.radius", num(radius));
                put("grid.n", n.to_string());
            }
            ShapeConfig::Annulus { inner, outer, n } => {
                put("domain.shape", "annulus".into());
                put("domain.inner", num(inner));
                put("domain.outer", num(outer));
                put("grid.n", n.to_string());
            }
        }
        match self.bc {
            BcConfig::Oned { a } => {
                put("bc.kind", "oned".into());
                put("bc.a", num(a));
            }
            BcConfig::Periodic { a } => {
                put("bc.kind", "periodic".into());
                put("bc.a", num(a));
            }
            BcConfig::Degree { k, alpha } => {
                put("bc.kind", "degree".into());
                put("bc.k", k.to_string());
                put("bc.alpha", num(alpha));
            }
            BcConfig::Constant { u1, u2 } => {
                put("bc.kind", "constant".into());
                put("bc.u1", num(u1));
                put("bc.u2", num(u2));
            }
        }
        put("solver.eps", num(self.eps));
        put("solver.L", num(self.l));
        put("solver.dt", self.dt.map_or_else(|| "auto".into(), num));
        put("solver.max_steps", self.max_steps.to_string());
        put("solver.stop_tol", num(self.stop_tol));
        put("solver.snapshot_every", self.snapshot_every.to_string());
        match self.init {
            InitConfig::Boundary => put("init.kind", "boundary".into()),
            InitConfig::Random { seed, amplitude } => {
                put("init.kind", "random".into());
                put("init.seed", seed.to_string());
                put("init.amplitude", num(amplitude));
            }
            InitConfig::IsotropicDisk { radius } => {
                put("init.kind", "isotropic_disk".into());
                put("init.radius", num(radius));
            }
        }
        put("potential.scale", num(self.potential_scale));
        out
    }

    pub fn seed(&self) -> Option<u64> {
        match self.init {
            InitConfig::Random { seed, .. } => Some(seed),
            _ => None,
        }
    }

    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let bc = match self.bc {
            BcConfig::Oned { a } => BoundaryData::OneD { a },
            BcConfig::Periodic { a } => BoundaryData::PeriodicXDirichletY { a },
            BcConfig::Degree { k, alpha } => BoundaryData::Degree { k, alpha },
            BcConfig::Constant { u1, u2 } => BoundaryData::Constant([u1, u2]),
        };
        let domain = match self.domain {
            ShapeConfig::Rectangle { width, height, nx, ny } => Domain::rectangle(width, height, nx, ny, bc)?,
            ShapeConfig::Disk { radius, n } => Domain::disk(radius, n, bc)?,
            ShapeConfig::Annulus { inner, outer, n } => Domain::annulus(inner, outer, n, bc)?,
        };
        let mut sim = SimConfig::new(Arc::new(domain), self.eps, self.l);
        sim.spec = PotentialSpec::csh().with_scale(self.potential_scale)?;
        sim.dt = self.dt;
        sim.max_steps = self.max_steps;
        sim.stop_tol = self.stop_tol;
        sim.snapshot_every = self.snapshot_every;
        sim.init = match self.init {
            InitConfig::Boundary => InitKind::BoundaryExtension,
            InitConfig::Random { seed, amplitude } => InitKind::SeededRandom { seed, amplitude },
            InitConfig::IsotropicDisk { radius } => InitKind::IsotropicDisk {
                center: [0.0, 0.0],
                radius,
            },
        };
        sim.validate()?;
        Ok(sim)
    }
}

/// A CSV table; values are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<String> {
        let mut out = self.header.join(",");
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(Error::Precondition(format!(
                    "{}: row {i} has {} columns, header has {}",
                    self.name,
                    row.len(),
                    self.header.len()
                )));
            }
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Decimal scientific notation with 17 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, Default)]
pub struct RunOutputs {
    pub tables: Vec<CsvTable>,
    pub summary: serde_json::Value,
    /// Extra files written verbatim (name, contents).
    pub extra: Vec<(String, String)>,
}

/// Provenance of a run.
#[derive(Debug, Clone, Default)]
pub struct RunInfo {
    pub command_line: Vec<String>,
    pub config_echo: String,
    /// Resolved values not visible in the echo, such as the automatic dt.
    pub resolved: serde_json::Value,
    pub seed: Option<u64>,
    pub started_unix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_echo: String,
    pub resolved: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<FileEntry>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Renders every output in memory, then writes them and `manifest.json`
/// into `out_dir`. Rendering failures leave the directory untouched.
pub fn emit_outputs(outputs: &RunOutputs, info: &RunInfo, out_dir: &Path) -> Result<RunManifest> {
    let mut files: Vec<(String, String)> = Vec::new();
    for t in &outputs.tables {
        files.push((t.name.clone(), t.render()?));
    }
    files.push(("summary.json".into(), serde_json::to_string_pretty(&outputs.summary)? + "\n"));
    files.extend(outputs.extra.iter().cloned());
    let mut seen = std::collections::HashSet::new();
    for (name, _) in &files {
        if name == "manifest.json" || !seen.insert(name.as_str()) {
            return Err(Error::Precondition(format!("duplicate output file name {name}")));
        }
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(files.len());
    for (name, body) in &files {
        let path: PathBuf = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        entries.push(FileEntry {
            name: name.clone(),
            bytes: body.len() as u64,
        });
    }
    let manifest = RunManifest {
        command_line: info.command_line.clone(),
        config_echo: info.config_echo.clone(),
        resolved: info.resolved.clone(),
        seed: info.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: info.started_unix,
        finished_unix: unix_now(),
        files: entries,
    };
    let path = out_dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
