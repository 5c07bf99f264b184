//! Flat `key = value` run configuration.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored, keys may appear at most once and unknown keys are
//! rejected. Missing keys take their defaults. [`RunConfig::to_text`] writes
//! every key in a fixed order with shortest round-trip number formatting, so
//! `parse(to_text(c)) == c` and the text of a parsed config is canonical.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use bosetunnel::lattice::{make_grid, Grid};
use bosetunnel::potential::PotentialSpec;
use bosetunnel::solver::{check_time_step, Absorber, SolverKind, MAX_EXACT_PARTICLES};
use bosetunnel::{Error, Result};

/// Largest product-grid field an exact run may allocate.
pub const MAX_FIELD_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSweep {
    None,
    Threshold,
    Lambda0,
}

impl ModelSweep {
    fn as_str(&self) -> &'static str {
        match self {
            ModelSweep::None => "none",
            ModelSweep::Threshold => "threshold",
            ModelSweep::Lambda0 => "lambda0",
        }
    }
}

impl FromStr for ModelSweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ModelSweep::None),
            "threshold" => Ok(ModelSweep::Threshold),
            "lambda0" => Ok(ModelSweep::Lambda0),
            _ => Err(Error::Config(format!("model_sweep must be none, threshold or lambda0, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Exact for up to three particles, mean-field beyond.
    Auto,
    Exact,
    MeanField,
}

impl TableKind {
    fn as_str(&self) -> &'static str {
        match self {
            TableKind::Auto => "auto",
            TableKind::Exact => "exact",
            TableKind::MeanField => "meanfield",
        }
    }
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(TableKind::Auto),
            "exact" => Ok(TableKind::Exact),
            "meanfield" => Ok(TableKind::MeanField),
            _ => Err(Error::Config(format!("table must be auto, exact or meanfield, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub particles: usize,
    pub lambda0: f64,
    pub threshold: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    /// `None` places the absorber at `0.8·x_max`.
    pub absorber_onset: Option<f64>,
    pub absorber_strength: f64,
    pub absorber_order: u32,
    pub solver_kind: SolverKind,
    pub output_dir: PathBuf,
    /// Keep wall-clock time out of the manifest.
    pub deterministic: bool,
    pub k_floor: f64,
    pub peak_prominence: f64,
    /// Half width of the momentum window written for correlation matrices.
    pub k_window: f64,
    pub table: TableKind,
    pub model_sweep: ModelSweep,
    pub model_min: f64,
    pub model_max: f64,
    pub model_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            particles: 2,
            lambda0: 1.0,
            threshold: 0.6,
            x_min: -8.0,
            x_max: 56.0,
            n_points: 512,
            dt: 0.008,
            t_final: 250.0,
            snapshot_stride: 625,
            absorber_onset: None,
            absorber_strength: 1.0,
            absorber_order: 4,
            solver_kind: SolverKind::Exact,
            output_dir: PathBuf::from("out"),
            deterministic: true,
            k_floor: 0.25,
            peak_prominence: 0.05,
            k_window: 3.0,
            table: TableKind::Auto,
            model_sweep: ModelSweep::None,
            model_min: 0.0,
            model_max: 2.0,
            model_points: 20,
        }
    }
}

const KEYS: &[&str] = &[
    "particles",
    "lambda0",
    "threshold",
    "x_min",
    "x_max",
    "n_points",
    "dt",
    "t_final",
    "snapshot_stride",
    "absorber_onset",
    "absorber_strength",
    "absorber_order",
    "solver_kind",
    "output_dir",
    "deterministic",
    "k_floor",
    "peak_prominence",
    "k_window",
    "table",
    "model_sweep",
    "model_min",
    "model_max",
    "model_points",
];

fn number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = number(key, value)?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{key}` must be finite, got `{value}`")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            config.set(key, value)?;
        }
        Ok(config)
    }

    /// Assign one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "particles" => self.particles = number(key, value)?,
            "lambda0" => self.lambda0 = real(key, value)?,
            "threshold" => self.threshold = real(key, value)?,
            "x_min" => self.x_min = real(key, value)?,
            "x_max" => self.x_max = real(key, value)?,
            "n_points" => self.n_points = number(key, value)?,
            "dt" => self.dt = real(key, value)?,
            "t_final" => self.t_final = real(key, value)?,
            "snapshot_stride" => self.snapshot_stride = number(key, value)?,
            "absorber_onset" => {
                self.absorber_onset = if value == "auto" { None } else { Some(real(key, value)?) }
            }
            "absorber_strength" => self.absorber_strength = real(key, value)?,
            "absorber_order" => self.absorber_order = number(key, value)?,
            "solver_kind" => {
                self.solver_kind = match value {
                    "exact" => SolverKind::Exact,
                    "meanfield" => SolverKind::MeanField,
                    _ => return Err(Error::Config(format!("solver_kind must be exact or meanfield, got `{value}`"))),
                }
            }
            "output_dir" => {
                if value.is_empty() {
                    return Err(Error::Config("output_dir must not be empty".into()));
                }
                self.output_dir = PathBuf::from(value)
            }
            "deterministic" => self.deterministic = number(key, value)?,
            "k_floor" => self.k_floor = real(key, value)?,
            "peak_prominence" => self.peak_prominence = real(key, value)?,
            "k_window" => self.k_window = real(key, value)?,
            "table" => self.table = value.parse()?,
            "model_sweep" => self.model_sweep = value.parse()?,
            "model_min" => self.model_min = real(key, value)?,
            "model_max" => self.model_max = real(key, value)?,
            "model_points" => self.model_points = number(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match *key {
                "particles" => self.particles.to_string(),
                "lambda0" => self.lambda0.to_string(),
                "threshold" => self.threshold.to_string(),
                "x_min" => self.x_min.to_string(),
                "x_max" => self.x_max.to_string(),
                "n_points" => self.n_points.to_string(),
                "dt" => self.dt.to_string(),
                "t_final" => self.t_final.to_string(),
                "snapshot_stride" => self.snapshot_stride.to_string(),
                "absorber_onset" => self.absorber_onset.map_or("auto".to_string(), |v| v.to_string()),
                "absorber_strength" => self.absorber_strength.to_string(),
                "absorber_order" => self.absorber_order.to_string(),
                "solver_kind" => self.solver_kind.as_str().to_string(),
                "output_dir" => self.output_dir.display().to_string(),
                "deterministic" => self.deterministic.to_string(),
                "k_floor" => self.k_floor.to_string(),
                "peak_prominence" => self.peak_prominence.to_string(),
                "k_window" => self.k_window.to_string(),
                "table" => self.table.as_str().to_string(),
                "model_sweep" => self.model_sweep.as_str().to_string(),
                "model_min" => self.model_min.to_string(),
                "model_max" => self.model_max.to_string(),
                "model_points" => self.model_points.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.x_min, self.x_max, self.n_points)
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        PotentialSpec::new(self.threshold).map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })
    }

    pub fn absorber(&self, grid: &Grid) -> Result<Absorber> {
        let onset = self.absorber_onset.unwrap_or(0.8 * grid.x_max());
        Absorber::new(onset, self.absorber_strength, self.absorber_order, grid)
    }

    /// Checks shared by every command: particle number, coupling, grid.
    pub fn validate_common(&self) -> Result<Grid> {
        if self.particles == 0 {
            return Err(Error::Config("particles must be at least 1".into()));
        }
        if self.lambda0 < 0.0 {
            return Err(Error::Config(format!("lambda0 must be non-negative, got {}", self.lambda0)));
        }
        self.potential()?;
        self.grid()
    }

    /// Everything a relaxation needs, checked before any compute.
    pub fn validate_relax(&self) -> Result<Grid> {
        let grid = self.validate_common()?;
        if self.solver_kind == SolverKind::Exact {
            if self.particles > MAX_EXACT_PARTICLES {
                return Err(Error::Config(format!(
                    "exact solver handles at most {MAX_EXACT_PARTICLES} particles, got {}",
                    self.particles
                )));
            }
            let points = (self.n_points as u128).pow(self.particles as u32);
            if points > MAX_FIELD_POINTS as u128 {
                return Err(Error::Config(format!(
                    "{}^{} grid points exceed the exact-field limit of {MAX_FIELD_POINTS}",
                    self.n_points, self.particles
                )));
            }
        }
        Ok(grid)
    }

    /// Everything a quench run needs, checked before any compute.
    pub fn validate_propagate(&self) -> Result<(Grid, PotentialSpec, Absorber)> {
        let grid = self.validate_relax()?;
        let spec = self.potential()?;
        let coordinates = match self.solver_kind {
            SolverKind::Exact => self.particles,
            SolverKind::MeanField => 1,
        };
        check_time_step(self.dt, &grid, coordinates)?;
        if !(self.t_final >= 0.0) {
            return Err(Error::Config(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be positive".into()));
        }
        let absorber = self.absorber(&grid)?;
        if !grid.contains(spec.barrier_position()) {
            return Err(Error::Config(format!(
                "barrier position {} lies outside the grid",
                spec.barrier_position()
            )));
        }
        if !(self.k_floor >= 0.0 && self.peak_prominence >= 0.0 && self.k_window > 0.0) {
            return Err(Error::Config("k_floor and peak_prominence must be non-negative, k_window positive".into()));
        }
        Ok((grid, spec, absorber))
    }

    pub fn validate_model(&self) -> Result<()> {
        let grid = self.validate_common()?;
        if self.table == TableKind::Exact && self.particles > MAX_EXACT_PARTICLES {
            return Err(Error::Config(format!(
                "exact energy tables cover at most {MAX_EXACT_PARTICLES} particles"
            )));
        }
        if self.model_sweep != ModelSweep::None {
            if !(self.model_max > self.model_min) || self.model_points == 0 {
                return Err(Error::Config(format!(
                    "model sweep needs model_max > model_min and model_points > 0, got [{}, {}] / {}",
                    self.model_min, self.model_max, self.model_points
                )));
            }
            match self.model_sweep {
                ModelSweep::Threshold if self.model_max >= 2.0 => {
                    return Err(Error::Config("threshold sweep must stay below 2".into()));
                }
                ModelSweep::Lambda0 if self.model_min < 0.0 => {
                    return Err(Error::Config("coupling sweep must start at a non-negative value".into()));
                }
                _ => {}
            }
        }
        let _ = grid;
        Ok(())
    }
}
