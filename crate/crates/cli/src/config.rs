//! Flat `key = value` experiment configuration.
//!
//! One assignment per line; `#` starts a comment. Unknown or repeated keys
//! are rejected. Missing keys take the desk-scale defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ctkrylov::geometry::{uniform_angles, ScanGeometry, SizeClass};
use ctkrylov::phantom::PhantomKind;
use ctkrylov::solvers::Method;
use ctkrylov::{ProjModel, StopRule};

use crate::error::CliError;

const KEYS: &[&str] = &[
    "geometry",
    "n_pixels",
    "angles",
    "n_det",
    "det_width",
    "det_offset",
    "model_a",
    "model_b",
    "phantom_kind",
    "phantom_seed",
    "noise_level",
    "noise_seed",
    "solver",
    "omega",
    "max_iter",
    "stop_rule",
    "dp_tau",
    "ncp_patience",
    "halt_on_stop",
    "reorthogonalize",
    "output_dir",
    "keep_iterates",
];

/// Back projector choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackModel {
    /// Transpose of the matrix built with this model.
    Transpose(ProjModel),
    /// `B_τ`, the thresholded transpose of `A`.
    Threshold(f64),
}

impl FromStr for BackModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(tau) = s.strip_prefix("threshold:") {
            let tau: f64 = tau
                .trim()
                .parse()
                .map_err(|_| format!("bad threshold {tau:?}"))?;
            if !(tau >= 0.0) || !tau.is_finite() {
                return Err(format!("threshold must be >= 0, got {tau}"));
            }
            return Ok(BackModel::Threshold(tau));
        }
        s.parse::<ProjModel>()
            .map(BackModel::Transpose)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Omega {
    /// `1/(‖A‖₁·‖A‖∞)`, a lower bound on `1/σ₁²`.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub geometry: ScanGeometry,
    pub model_a: ProjModel,
    pub model_b: BackModel,
    pub phantom_kind: PhantomKind,
    pub phantom_seed: u64,
    pub noise_level: f64,
    pub noise_seed: u64,
    pub solver: Method,
    pub omega: Omega,
    pub max_iter: usize,
    pub stop_rule: StopRule,
    pub dp_tau: f64,
    pub ncp_patience: usize,
    pub halt_on_stop: bool,
    pub reorthogonalize: bool,
    pub output_dir: PathBuf,
    pub keep_iterates: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: ScanGeometry::standard(SizeClass::Desk),
            model_a: ProjModel::Strip,
            model_b: BackModel::Transpose(ProjModel::Line),
            phantom_kind: PhantomKind::ThreePhases,
            phantom_seed: 42,
            noise_level: 0.003,
            noise_seed: 7,
            solver: Method::AbGmres,
            omega: Omega::Auto,
            max_iter: 100,
            stop_rule: StopRule::None,
            dp_tau: 1.0,
            ncp_patience: 3,
            halt_on_stop: false,
            reorthogonalize: false,
            output_dir: PathBuf::from("out"),
            keep_iterates: 1,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse {raw:?}: {e}")))
}

/// `start:step:stop` (stop exclusive) or a comma-separated list of degrees.
pub fn parse_angles(raw: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = raw.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| format!("bad number {p:?}")))
            .collect::<Result<_, _>>()?;
        let (start, step, stop) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || !(stop > start) {
            return Err(format!("empty or invalid range {raw:?}"));
        }
        let count = ((stop - start) / step - 1e-9).ceil() as usize;
        return Ok(uniform_angles(count, step).into_iter().map(|a| a + start).collect());
    }
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad angle {p:?}"))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {}: unknown key {key:?}",
                    lineno + 1
                )));
            }
            if entries.insert(key.to_string(), val.trim().to_string()).is_some() {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut c = Self::default();
        if let Some(v) = e.get("geometry") {
            c.geometry = ScanGeometry::standard(value::<SizeClass>("geometry", v)?);
        }
        let g = &mut c.geometry;
        if let Some(v) = e.get("n_pixels") {
            g.n_pixels = value("n_pixels", v)?;
        }
        if let Some(v) = e.get("angles") {
            g.angles_deg =
                parse_angles(v).map_err(|m| CliError::Config(format!("angles: {m}")))?;
        }
        if let Some(v) = e.get("n_det") {
            g.n_det = value("n_det", v)?;
        }
        if let Some(v) = e.get("det_width") {
            g.det_width = value("det_width", v)?;
        }
        if let Some(v) = e.get("det_offset") {
            g.det_offset = value("det_offset", v)?;
        }
        g.validate()
            .map_err(|err| CliError::Config(format!("geometry: {err}")))?;

        if let Some(v) = e.get("model_a") {
            c.model_a = value("model_a", v)?;
        }
        if let Some(v) = e.get("model_b") {
            c.model_b = value("model_b", v)?;
        }
        if let Some(v) = e.get("phantom_kind") {
            c.phantom_kind = value("phantom_kind", v)?;
        }
        if let Some(v) = e.get("phantom_seed") {
            c.phantom_seed = value("phantom_seed", v)?;
        }
        if let Some(v) = e.get("noise_level") {
            c.noise_level = value("noise_level", v)?;
            if !(c.noise_level >= 0.0) || !c.noise_level.is_finite() {
                return Err(CliError::Config(format!("noise_level: must be >= 0, got {v}")));
            }
        }
        if let Some(v) = e.get("noise_seed") {
            c.noise_seed = value("noise_seed", v)?;
        }
        if let Some(v) = e.get("solver") {
            c.solver = value("solver", v)?;
        }
        if let Some(v) = e.get("omega") {
            c.omega = if v == "auto" {
                Omega::Auto
            } else {
                let w: f64 = value("omega", v)?;
                if !(w > 0.0) || !w.is_finite() {
                    return Err(CliError::Config(format!("omega: must be > 0, got {v}")));
                }
                Omega::Value(w)
            };
        }
        if let Some(v) = e.get("max_iter") {
            c.max_iter = value("max_iter", v)?;
            if c.max_iter == 0 {
                return Err(CliError::Config("max_iter: must be >= 1".into()));
            }
        }
        if let Some(v) = e.get("stop_rule") {
            c.stop_rule = value("stop_rule", v)?;
        }
        if let Some(v) = e.get("dp_tau") {
            c.dp_tau = value("dp_tau", v)?;
            if !(c.dp_tau >= 1.0) {
                return Err(CliError::Config(format!("dp_tau: must be >= 1, got {v}")));
            }
        }
        if let Some(v) = e.get("ncp_patience") {
            c.ncp_patience = value("ncp_patience", v)?;
            if c.ncp_patience == 0 {
                return Err(CliError::Config("ncp_patience: must be >= 1".into()));
            }
        }
        if let Some(v) = e.get("halt_on_stop") {
            c.halt_on_stop = value("halt_on_stop", v)?;
        }
        if let Some(v) = e.get("reorthogonalize") {
            c.reorthogonalize = value("reorthogonalize", v)?;
        }
        if let Some(v) = e.get("output_dir") {
            c.output_dir = PathBuf::from(v);
        }
        if let Some(v) = e.get("keep_iterates") {
            c.keep_iterates = value("keep_iterates", v)?;
        }
        Ok(c)
    }
}
