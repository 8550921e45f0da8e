//! Experiment configuration: per-command defaults, JSON overrides, flags.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Scatter,
    PdfCdf,
    Validate,
    OpSweep,
    CorrTable,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Scatter => "scatter",
            Self::PdfCdf => "pdf-cdf",
            Self::Validate => "validate",
            Self::OpSweep => "op-sweep",
            Self::CorrTable => "corr-table",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub n_ports: usize,
    pub aperture: f64,
}

/// Evenly spaced grid, `start` and `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !(self.stop >= self.start) {
            return Err(CliError::Config(format!("invalid range {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// Fully resolved experiment configuration.
///
/// Commands read only the fields that concern them; all fields are always
/// present in the written `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Samples per ensemble (the Monte Carlo floor for op-sweep).
    pub samples: usize,
    /// Absolute MVN CDF tolerance.
    pub tol: f64,
    /// Relative MVN CDF tolerance, applied on top of `tol` (0 disables).
    pub rel_tol: f64,
    pub m: f64,
    pub mu: f64,
    pub threshold_db: f64,
    pub geometries: Vec<Geometry>,
    /// Shape values swept by `validate` and `op-sweep`.
    pub m_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub snr_db: Vec<f64>,
    /// Envelope grid for `pdf-cdf`.
    pub r_grid: Range,
    /// Name of the op-sweep preset the lists came from.
    pub preset: String,
    /// Run the physical Monte Carlo benchmark in op-sweep.
    pub monte_carlo: bool,
    /// Skip MC points whose envelope-matrix theory OP is below this.
    pub mc_min_op: f64,
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    Range { start, stop, step }.points().expect("static grid")
}

fn geoms(list: &[(usize, f64)]) -> Value {
    Value::Array(
        list.iter()
            .map(|&(n, w)| json!({ "n_ports": n, "aperture": w }))
            .collect(),
    )
}

pub const PRESETS: [&str; 6] = ["fig4", "fig5a", "fig5b", "fig6", "fig7a", "fig7b"];

/// Sweep lists for an op-sweep preset.
pub fn preset(name: &str) -> Result<Value, CliError> {
    let snr = grid(0.0, 30.0, 1.0);
    let v = match name {
        "fig4" => json!({
            "geometries": geoms(&[(10, 0.5), (10, 3.5)]),
            "m_values": [3.0], "mu_values": [1.0], "snr_db": snr,
        }),
        "fig5a" => {
            let ws = grid(0.25, 5.0, 0.25);
            let g: Vec<(usize, f64)> = [5usize, 10]
                .iter()
                .flat_map(|&n| ws.iter().map(move |&w| (n, w)))
                .collect();
            json!({
                "geometries": geoms(&g),
                "m_values": [3.0], "mu_values": [1.0], "snr_db": [10.0],
            })
        }
        "fig5b" => {
            let g: Vec<(usize, f64)> = (2..=20).map(|n| (n, 2.0)).collect();
            json!({
                "geometries": geoms(&g),
                "m_values": [3.0], "mu_values": [1.0], "snr_db": [5.0, 10.0, 15.0],
            })
        }
        "fig6" => json!({
            "geometries": geoms(&[(10, 3.5), (8, 2.5)]),
            "m_values": [3.0], "mu_values": [1.0], "snr_db": snr,
        }),
        "fig7a" => json!({
            "geometries": geoms(&[(8, 2.5)]),
            "m_values": [1.0, 2.0, 3.0, 4.0], "mu_values": [1.0], "snr_db": snr,
        }),
        "fig7b" => json!({
            "geometries": geoms(&[(10, 2.5)]),
            "m_values": [3.0], "mu_values": [0.5, 1.0, 2.0], "snr_db": snr,
        }),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}, expected one of {PRESETS:?}"
            )))
        }
    };
    Ok(v)
}

/// Defaults for `experiment` as a JSON object.
pub fn defaults(experiment: Experiment) -> Value {
    let mut v = json!({
        "experiment": experiment,
        "seed": 1,
        "samples": 1_000_000,
        "tol": 1e-4,
        "rel_tol": 0.0,
        "m": 3.0,
        "mu": 1.0,
        "threshold_db": 10.0,
        "geometries": geoms(&[(10, 1.0)]),
        "m_values": [3.0],
        "mu_values": [1.0],
        "snr_db": [],
        "r_grid": { "start": 0.02, "stop": 3.0, "step": 0.02 },
        "preset": "",
        "monte_carlo": true,
        "mc_min_op": 1e-5,
    });
    let extra = match experiment {
        Experiment::Scatter => json!({
            "samples": 10_000,
            "geometries": geoms(&[(2, 0.1), (2, 0.3), (2, 0.5)]),
        }),
        Experiment::PdfCdf => json!({
            "geometries": geoms(&[(2, 0.5)]),
            "r_grid": { "start": 0.02, "stop": 6.0, "step": 0.02 },
        }),
        Experiment::Validate => json!({ "m_values": [1.0, 2.0, 3.0] }),
        Experiment::OpSweep => {
            let mut p = preset("fig4").expect("built-in preset");
            merge(&mut p, json!({ "preset": "fig4", "rel_tol": 1e-2 }));
            p
        }
        Experiment::CorrTable => json!({
            "geometries": geoms(&[(10, 3.5), (8, 2.5)]),
        }),
    };
    merge(&mut v, extra);
    v
}

/// Recursively overlay `over` onto `base` (objects merge, anything else
/// replaces).
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Command-line overrides, applied last.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub preset: Option<String>,
}

/// Reads a config file. A run manifest is accepted too: its `config` entry
/// is used.
pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match v {
        Value::Object(mut map) if map.contains_key("manifest_version") => map
            .remove("config")
            .ok_or_else(|| CliError::Config("manifest has no config entry".into())),
        Value::Object(_) => Ok(v),
        _ => Err(CliError::Config("config must be a JSON object".into())),
    }
}

pub fn resolve(
    experiment: Experiment,
    file: Option<Value>,
    flags: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let mut v = defaults(experiment);
    // a preset named in the file or on the command line replaces the lists
    let preset_name = flags.preset.clone().or_else(|| {
        file.as_ref()
            .and_then(|f| f.get("preset"))
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
    });
    if let (Experiment::OpSweep, Some(name)) = (experiment, &preset_name) {
        merge(&mut v, preset(name)?);
        merge(&mut v, json!({ "preset": name }));
    }
    if let Some(f) = file {
        if let Some(e) = f.get("experiment") {
            if *e != json!(experiment) {
                return Err(CliError::Config(format!(
                    "config is for experiment {e}, not {experiment}"
                )));
            }
        }
        merge(&mut v, f);
        if let (Some(name), true) = (&flags.preset, experiment == Experiment::OpSweep) {
            merge(&mut v, preset(name)?);
            merge(&mut v, json!({ "preset": name }));
        }
    }
    if let Some(s) = flags.seed {
        v["seed"] = json!(s);
    }
    if let Some(k) = flags.samples {
        v["samples"] = json!(k);
    }
    if let Some(t) = flags.tol {
        v["tol"] = json!(t);
    }
    let cfg: ExperimentConfig =
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if !(self.tol > 0.0 && self.tol <= 0.1) {
            return bad(format!("tol must lie in (0, 0.1], got {}", self.tol));
        }
        if !(self.rel_tol >= 0.0) {
            return bad("rel_tol must be >= 0".into());
        }
        if self.geometries.is_empty() {
            return bad("at least one geometry is required".into());
        }
        if self.experiment == Experiment::OpSweep && self.snr_db.is_empty() {
            return bad("op-sweep needs a non-empty snr_db list".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        Ok(())
    }
}
