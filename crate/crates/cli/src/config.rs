//! Run configuration: a flat TOML document plus an optional `[sweep]` table.
//!
//! ```toml
//! experiment = "cfi-sweep"
//! g = 0.1
//! tau = 0.1
//! T = 10
//! N = 1
//! seed = 7
//! out = "fig2.csv"
//!
//! [sweep]
//! axis = "T"
//! values = [1, 2, 5, 10, 20, 50, 100]
//! ```
//!
//! Defaults: `delta_omega = π/(2τ)`, `mode = "weak-with-strong"`, `p_e = 0`,
//! `p_e_strong = 0`, `strength = "fixed"`, `trajectories = 10000`,
//! `reps = 1000`, `estimator = "auto"`, `epsilon = 0.1`, `chi_tp = 0`,
//! `back_action = "rotating"`, `exact = false`, `format = "csv"`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;
use weakclock_core::estimation::Estimator;
use weakclock_core::light::BackActionModel;
use weakclock_core::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CfiSweep,
    BmseSweep,
    Oci,
    Cascaded,
    Threshold,
    Light,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::CfiSweep => "cfi-sweep",
            Experiment::BmseSweep => "bmse-sweep",
            Experiment::Oci => "oci",
            Experiment::Cascaded => "cascaded",
            Experiment::Threshold => "threshold",
            Experiment::Light => "light",
        }
    }
}

/// How the weak strength is chosen at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strength {
    /// Use `g` as given.
    #[default]
    Fixed,
    /// Minimize the predicted weak-with-strong BMSE.
    Tuned,
    /// Maximize the weak-only information fit.
    OptimalWeakOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Quantities a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "T")]
    TotalTime,
    #[serde(rename = "N")]
    Qubits,
    #[serde(rename = "delta_omega")]
    DeltaOmega,
    #[serde(rename = "p_e")]
    ReadoutError,
    #[serde(rename = "p_e_strong")]
    StrongReadoutError,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "chi_tp")]
    ProbeStrength,
}

impl Axis {
    pub fn key(self) -> &'static str {
        match self {
            Axis::G => "g",
            Axis::Tau => "tau",
            Axis::TotalTime => "T",
            Axis::Qubits => "N",
            Axis::DeltaOmega => "delta_omega",
            Axis::ReadoutError => "p_e",
            Axis::StrongReadoutError => "p_e_strong",
            Axis::Omega => "omega",
            Axis::Epsilon => "epsilon",
            Axis::ProbeStrength => "chi_tp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Protocol fields before per-point resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseParams {
    pub g: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(rename = "N")]
    pub n_qubits: f64,
    /// `None` means `π/(2τ)` at each point.
    pub delta_omega: Option<f64>,
    pub mode: Mode,
    pub p_e: f64,
    pub p_e_strong: f64,
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: BaseParams,
    pub strength: Strength,
    pub sweep: Option<Sweep>,
    pub trajectories: usize,
    pub reps: usize,
    /// Fixed true frequency; `None` averages over the prior where that applies.
    pub omega: Option<f64>,
    pub estimator: Estimator,
    pub epsilon: f64,
    pub chi_tp: f64,
    pub back_action: BackActionModel,
    pub exact: bool,
    pub seed: u64,
    /// Not part of the hash: where a table lands does not change it.
    #[serde(skip)]
    pub out: PathBuf,
    pub format: Format,
    /// 1-based source lines of the keys, for errors found after parsing.
    #[serde(skip)]
    pub(crate) lines: KeyLines,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct KeyLines(Vec<(&'static str, usize)>);

impl KeyLines {
    pub(crate) fn get(&self, key: &str) -> Option<usize> {
        self.0.iter().find(|(k, _)| *k == key).map(|&(_, l)| l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted key path, e.g. `sweep.values`; empty when the document itself
    /// does not parse.
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.key.is_empty(), self.line) {
            (false, Some(line)) => write!(f, "line {line}: {}: {}", self.key, self.message),
            (false, None) => write!(f, "{}: {}", self.key, self.message),
            (true, Some(line)) => write!(f, "line {line}: {}", self.message),
            (true, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Spanned<Experiment>,
    g: Spanned<f64>,
    tau: Spanned<f64>,
    #[serde(rename = "T")]
    total_time: Spanned<f64>,
    #[serde(rename = "N")]
    n_qubits: Spanned<i64>,
    delta_omega: Option<Spanned<f64>>,
    mode: Option<Mode>,
    p_e: Option<Spanned<f64>>,
    p_e_strong: Option<Spanned<f64>>,
    strength: Option<Strength>,
    trajectories: Option<Spanned<i64>>,
    reps: Option<Spanned<i64>>,
    omega: Option<Spanned<f64>>,
    estimator: Option<Estimator>,
    epsilon: Option<Spanned<f64>>,
    chi_tp: Option<Spanned<f64>>,
    back_action: Option<BackActionModel>,
    exact: Option<bool>,
    seed: Spanned<i64>,
    out: Spanned<String>,
    format: Option<Format>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Spanned<Axis>,
    values: Spanned<Vec<f64>>,
}

pub const DEFAULT_TRAJECTORIES: usize = 10_000;
pub const DEFAULT_REPS: usize = 1000;
pub const DEFAULT_EPSILON: f64 = 0.1;

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Located<'a> {
    text: &'a str,
    lines: Vec<(&'static str, usize)>,
}

impl Located<'_> {
    fn note(&mut self, key: &'static str, span: Range<usize>) {
        let line = line_at(self.text, span.start);
        self.lines.push((key, line));
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let line = self.lines.iter().find(|(k, _)| *k == key).map(|&(_, l)| l);
        ConfigError {
            key: key.to_string(),
            line,
            message: message.into(),
        }
    }
}

/// The key named on the line of a deserializer error, if any.
fn key_on_line(text: &str, offset: usize) -> String {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next().unwrap_or("");
    match line.split_once('=') {
        Some((key, _)) => key.trim().trim_matches('"').to_string(),
        None => line.trim().trim_matches(['[', ']']).to_string(),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let mut span = e.span();
        let mut key = span.clone().map(|s| key_on_line(text, s.start)).unwrap_or_default();
        let named = |prefix: &str| {
            e.message()
                .strip_prefix(prefix)
                .map(|rest| rest.split('`').next().unwrap_or("").to_string())
        };
        if let Some(unknown) = named("unknown field `") {
            key = unknown;
        } else if let Some(missing) = named("missing field `") {
            // the span covers the enclosing table, so there is no line to report
            key = missing;
            span = None;
        }
        ConfigError {
            key,
            line: span.map(|s| line_at(text, s.start)),
            message: e.message().trim().to_string(),
        }
    })?;

    let mut at = Located {
        text,
        lines: Vec::new(),
    };
    at.note("experiment", raw.experiment.span());
    for (key, value) in [("g", &raw.g), ("tau", &raw.tau), ("T", &raw.total_time)] {
        at.note(key, value.span());
    }
    at.note("N", raw.n_qubits.span());
    at.note("seed", raw.seed.span());
    at.note("out", raw.out.span());
    let optional_f64 = [
        ("delta_omega", &raw.delta_omega),
        ("p_e", &raw.p_e),
        ("p_e_strong", &raw.p_e_strong),
        ("omega", &raw.omega),
        ("epsilon", &raw.epsilon),
        ("chi_tp", &raw.chi_tp),
    ];
    for (key, value) in optional_f64 {
        if let Some(v) = value {
            at.note(key, v.span());
        }
    }
    for (key, value) in [("trajectories", &raw.trajectories), ("reps", &raw.reps)] {
        if let Some(v) = value {
            at.note(key, v.span());
        }
    }
    if let Some(sweep) = &raw.sweep {
        at.note("sweep.axis", sweep.axis.span());
        at.note("sweep.values", sweep.values.span());
    }

    let count = |key: &'static str, value: Option<&Spanned<i64>>, default: usize, min: i64| {
        match value.map(|v| *v.get_ref()) {
            None => Ok(default),
            Some(v) if v >= min => Ok(v as usize),
            Some(v) => Err(at.error(key, format!("{v} is below the minimum {min}"))),
        }
    };
    let trajectories = count("trajectories", raw.trajectories.as_ref(), DEFAULT_TRAJECTORIES, 100)?;
    let reps = count("reps", raw.reps.as_ref(), DEFAULT_REPS, 100)?;
    let n_qubits = *raw.n_qubits.get_ref();
    if n_qubits < 1 {
        return Err(at.error("N", format!("{n_qubits} is not a positive qubit count")));
    }
    let seed = *raw.seed.get_ref();
    if seed < 0 {
        return Err(at.error("seed", "seed must be a non-negative integer"));
    }
    let out = raw.out.into_inner();
    if out.is_empty() {
        return Err(at.error("out", "output path is empty"));
    }

    let sweep = match raw.sweep {
        None => None,
        Some(s) => {
            let values = s.values.into_inner();
            if values.is_empty() {
                return Err(at.error("sweep.values", "sweep has no values"));
            }
            Some(Sweep {
                axis: s.axis.into_inner(),
                values,
            })
        }
    };

    let value = |v: Option<Spanned<f64>>| v.map(Spanned::into_inner);
    let cfg = RunConfig {
        experiment: raw.experiment.into_inner(),
        params: BaseParams {
            g: raw.g.into_inner(),
            tau: raw.tau.into_inner(),
            total_time: raw.total_time.into_inner(),
            n_qubits: n_qubits as f64,
            delta_omega: value(raw.delta_omega),
            mode: raw.mode.unwrap_or(Mode::WeakWithStrong),
            p_e: value(raw.p_e).unwrap_or(0.0),
            p_e_strong: value(raw.p_e_strong).unwrap_or(0.0),
        },
        strength: raw.strength.unwrap_or_default(),
        sweep,
        trajectories,
        reps,
        omega: value(raw.omega),
        estimator: raw.estimator.unwrap_or(Estimator::Auto),
        epsilon: value(raw.epsilon).unwrap_or(DEFAULT_EPSILON),
        chi_tp: value(raw.chi_tp).unwrap_or(0.0),
        back_action: raw.back_action.unwrap_or_default(),
        exact: raw.exact.unwrap_or(false),
        seed: seed as u64,
        out: PathBuf::from(out),
        format: raw.format.unwrap_or_default(),
        lines: KeyLines(at.lines),
    };
    // Every point is resolved once here so that constraint violations are
    // reported at parse time.
    crate::plan::plan(&cfg)?;
    Ok(cfg)
}

impl RunConfig {
    pub(crate) fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: key.to_string(),
            line: self.lines.get(key),
            message: message.into(),
        }
    }

    /// Largest `δω` that keeps one measurement period free of aliasing.
    pub fn max_delta_omega(tau: f64) -> f64 {
        FRAC_PI_2 / tau
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
