//! Run configuration shared by the command line and the C interface.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{FamilyOptions, SpaceContext};
use crate::grid::{GridGeometry, TimeGrid};
use crate::verify::{OperatorId, PairSweep, T1Options};

/// `count` times between `t(s_min)` and `t(s_max)`, geometric in `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub count: usize,
    pub s_min: f64,
    pub s_max: f64,
}

impl TimeGridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        TimeGrid::log_spaced(self.count, self.s_min, self.s_max)
    }
}

/// Geometric truncation radii for the `R_ε` family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusGridSpec {
    pub count: usize,
    pub eps_min: f64,
    pub eps_max: f64,
}

impl RadiusGridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        TimeGrid::geometric(self.count, self.eps_min, self.eps_max)
    }
}

/// Which verifications `verify` runs for every operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub size: bool,
    pub smoothness: bool,
    pub t1: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            size: true,
            smoothness: true,
            t1: true,
        }
    }
}

/// Everything a run depends on. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dimension.
    pub n: usize,
    /// The box is `[-half_width, half_width]^n`.
    pub half_width: f64,
    /// Grid points per axis.
    pub points: usize,
    pub time_grid: TimeGridSpec,
    pub radii: RadiusGridSpec,
    pub rho: f64,
    /// Relative tolerance of the space context.
    pub tol: f64,
    /// Gaussian exponent of the size bound.
    pub c: f64,
    pub operators: Vec<OperatorId>,
    pub checks: Checks,
    /// Kernel-bound pairs.
    pub sweep: PairSweep,
    /// Ball families of the T1 and BMO estimates.
    pub family: FamilyOptions,
    /// Directory for SVG heatmaps; none are written when absent.
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 1,
            half_width: 4.0,
            points: 401,
            time_grid: TimeGridSpec {
                count: 96,
                s_min: 1e-6,
                s_max: 1.0 - 1e-6,
            },
            radii: RadiusGridSpec {
                count: 16,
                eps_min: 0.05,
                eps_max: 2.0,
            },
            rho: 3.0,
            tol: 1e-8,
            c: 1.0 / 16.0,
            operators: Vec::new(),
            checks: Checks::default(),
            sweep: PairSweep {
                half_width: 4.0,
                points: 128,
                seed: 0,
            },
            family: FamilyOptions {
                j_max: 3,
                ..FamilyOptions::default()
            },
            output_dir: None,
            seed: 0,
        }
    }
}

/// Sets `path` inside `node`, creating missing tables from `defaults`.
fn set_path(node: &mut Value, path: &[&str], value: Value, defaults: Option<&Value>, key: &str) -> Result<()> {
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override `{key}` descends into a value that is not a table")))?;
    let defaults = defaults.and_then(|d| d.get(path[0]));
    if path.len() == 1 {
        obj.insert(path[0].to_string(), value);
        return Ok(());
    }
    let child = obj
        .entry(path[0].to_string())
        .or_insert_with(|| defaults.cloned().unwrap_or(Value::Object(Default::default())));
    set_path(child, &path[1..], value, defaults, key)
}

fn config_error(e: serde_json::Error) -> Error {
    // positions are only known when parsing text
    if e.line() == 0 {
        Error::Config(e.to_string())
    } else {
        Error::Config(format!("{e} (line {}, column {})", e.line(), e.column()))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(config_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(v).map_err(config_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides (dotted keys reach nested tables;
    /// values are JSON, falling back to a plain string) on top of `base`.
    pub fn with_overrides(base: Value, overrides: &[String]) -> Result<Self> {
        let mut v = base;
        if !v.is_object() {
            return Err(Error::Config("configuration must be a JSON object".into()));
        }
        let defaults = serde_json::to_value(RunConfig::default()).expect("config serializes");
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let path: Vec<&str> = key.split('.').collect();
            set_path(&mut v, &path, value, Some(&defaults), key)?;
        }
        Self::from_value(v)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("field `{field}`: {why}")));
        if !(1..=3).contains(&self.n) {
            return bad("n", "dimension must be 1, 2 or 3");
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return bad("half_width", "must be positive and finite");
        }
        if self.points < 2 {
            return bad("points", "need at least two points per axis");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol", "must lie in (0, 1)");
        }
        if !(self.rho > 2.0 && self.rho.is_finite()) {
            return bad("rho", "must exceed 2");
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad("c", "must be finite and non-negative");
        }
        if !(self.sweep.half_width > 0.0 && self.sweep.half_width.is_finite()) || self.sweep.points < 2 {
            return bad("sweep", "needs a positive half_width and at least two points");
        }
        if let Err(e) = self.time_grid.build() {
            return bad("time_grid", &e.to_string());
        }
        if let Err(e) = self.radii.build() {
            return bad("radii", &e.to_string());
        }
        for op in &self.operators {
            if let OperatorId::Riesz { axis } | OperatorId::RieszTruncations { axis } = op {
                if *axis >= self.n {
                    return bad("operators", &format!("`{op}` needs an axis at most n = {}", self.n));
                }
            }
        }
        Ok(())
    }

    pub fn context(&self) -> Result<SpaceContext> {
        SpaceContext::new(self.n, self.half_width, self.tol)
    }

    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.n, self.half_width, self.points)
    }

    pub fn t1_options(&self) -> T1Options {
        T1Options {
            points: self.points,
            family: self.family.clone(),
            rho: self.rho,
        }
    }

    /// Time grid for the semigroups, truncation radii for `R_ε`.
    pub fn grid_for(&self, op: OperatorId) -> Result<TimeGrid> {
        match op {
            OperatorId::RieszTruncations { .. } => self.radii.build(),
            _ => self.time_grid.build(),
        }
    }
}
