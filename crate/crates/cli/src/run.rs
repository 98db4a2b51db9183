//! Experiment dispatch. Rows are produced in sweep order, each from the
//! configured seed; parallelism lives inside the core routines.

use std::fmt;
use std::path::PathBuf;

use weakclock_core::baselines::{cascaded_bmse, oci_bound};
use weakclock_core::estimation::{bmse_experiment, threshold_model, Prior, THRESHOLD_MAX_ETA};
use weakclock_core::information::{
    analytic_information, cfi_exact, cfi_monte_carlo, cfi_monte_carlo_over_prior, fit_for_mode,
    InformationEstimate, InformationKind,
};
use weakclock_core::light::{light_sensitivity, light_variance_approximation, propagate_collective_moments};
use weakclock_core::{Error, ProtocolParams};

use crate::config::{ConfigError, Experiment, Format, RunConfig};
use crate::output::{Cell, Metadata, TableFormat, TableWriter};
use crate::plan::{guard, plan, Point};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numeric(String),
    Guard(String),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Guard(_) => 4,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numeric(e) => write!(f, "numeric failure: {e}"),
            RunError::Guard(e) => write!(f, "refused: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn numeric(row: usize) -> impl Fn(Error) -> RunError {
    move |e| match e {
        Error::EnumerationTooLarge { .. } => RunError::Guard(format!("row {row}: {e}")),
        other => RunError::Numeric(format!("row {row}: {other}")),
    }
}

pub const CFI_COLUMNS: &[&str] = &[
    "g", "tau", "T", "N", "delta_omega", "mode", "p_e", "p_e_strong", "omega", "method",
    "trajectories", "cfi", "stderr", "qfi", "fit", "molmer_bound", "cfi_over_qfi",
];
pub const BMSE_COLUMNS: &[&str] = &[
    "g", "tau", "T", "N", "delta_omega", "mode", "p_e", "p_e_strong", "strength", "estimator",
    "reps", "bmse", "stderr", "degenerate", "prior_variance", "qfi_bound", "fit_bound",
    "predicted_bmse",
];
pub const OCI_COLUMNS: &[&str] = &[
    "N", "T", "delta_omega", "delta_omega_T", "oci_bmse", "prior_variance", "qfi_bound",
];
pub const CASCADED_COLUMNS: &[&str] = &[
    "N", "T", "delta_omega", "delta_omega_T", "reps", "ensembles", "infeasible", "bmse",
    "stderr", "prior_variance", "qfi_bound",
];
pub const THRESHOLD_COLUMNS: &[&str] = &[
    "g", "tau", "T", "N", "mode", "epsilon", "T_over_tau", "eta", "n_eta", "outlier_probability",
    "information", "predicted_bmse", "required_n_eta", "required_n_eta_second_order",
];
pub const LIGHT_COLUMNS: &[&str] = &[
    "chi_tp", "omega", "tau", "T", "N", "back_action", "variance", "variance_approximation",
    "sensitivity", "unprobed_sensitivity",
];

pub fn columns(experiment: Experiment) -> &'static [&'static str] {
    match experiment {
        Experiment::CfiSweep => CFI_COLUMNS,
        Experiment::BmseSweep => BMSE_COLUMNS,
        Experiment::Oci => OCI_COLUMNS,
        Experiment::Cascaded => CASCADED_COLUMNS,
        Experiment::Threshold => THRESHOLD_COLUMNS,
        Experiment::Light => LIGHT_COLUMNS,
    }
}

pub fn metadata(cfg: &RunConfig) -> Metadata {
    let mut entries = vec![
        ("weakclock", env!("CARGO_PKG_VERSION").to_string()),
        ("experiment", cfg.experiment.as_str().to_string()),
        ("config_sha256", cfg.hash()),
        ("seed", cfg.seed.to_string()),
        (
            "units",
            "seconds and rad/s; information in s^2; BMSE in (rad/s)^2".to_string(),
        ),
    ];
    if let Some(s) = &cfg.sweep {
        entries.push(("sweep", s.axis.key().to_string()));
    }
    Metadata { entries }
}

/// Validates, guards and runs `cfg`, writing the table to `cfg.out`.
/// Returns the final path and the number of rows.
pub fn run_experiment(cfg: &RunConfig) -> Result<(PathBuf, usize), RunError> {
    let points = plan(cfg)?;
    guard(cfg, &points).map_err(RunError::Guard)?;
    let format = match cfg.format {
        Format::Csv => TableFormat::Csv,
        Format::Json => TableFormat::Json,
    };
    let mut writer = TableWriter::create(&cfg.out, format, metadata(cfg), columns(cfg.experiment))?;
    for (i, point) in points.iter().enumerate() {
        let cells = row(cfg, point).map_err(numeric(i))?;
        writer.row(&cells)?;
    }
    Ok((writer.finish()?, points.len()))
}

/// Computes one row.
pub fn row(cfg: &RunConfig, point: &Point) -> Result<Vec<Cell>, Error> {
    let p = &point.params;
    match cfg.experiment {
        Experiment::CfiSweep => cfi_row(cfg, point),
        Experiment::BmseSweep => bmse_row(cfg, p),
        Experiment::Oci => {
            let prior = Prior::for_params(p);
            let oci = oci_bound(p.n_qubits, p.total_time, p.delta_omega)?;
            Ok(vec![
                p.n_qubits.into(),
                p.total_time.into(),
                p.delta_omega.into(),
                (p.delta_omega * p.total_time).into(),
                oci.into(),
                prior.variance().into(),
                qfi_bound(p).into(),
            ])
        }
        Experiment::Cascaded => {
            let prior = Prior::for_params(p);
            let outcome = cascaded_bmse(p.n_qubits, p.total_time, &prior, cfg.reps, cfg.seed)?;
            Ok(vec![
                p.n_qubits.into(),
                p.total_time.into(),
                p.delta_omega.into(),
                (p.delta_omega * p.total_time).into(),
                outcome.result.repetitions.into(),
                outcome.ensembles.into(),
                outcome.infeasible.into(),
                outcome.result.bmse.into(),
                outcome.result.stderr.into(),
                prior.variance().into(),
                qfi_bound(p).into(),
            ])
        }
        Experiment::Threshold => {
            let model = threshold_model(p, point.epsilon)?;
            let n = p.n_qubits as f64;
            Ok(vec![
                p.g.into(),
                p.tau.into(),
                p.total_time.into(),
                p.n_qubits.into(),
                p.mode.as_str().into(),
                point.epsilon.into(),
                (p.total_time / p.tau).into(),
                p.eta().into(),
                (n * p.eta()).into(),
                model.outlier_probability.into(),
                model.information.into(),
                model.predicted_bmse.into(),
                model.required_n_eta.into(),
                model.required_n_eta_second_order.into(),
            ])
        }
        Experiment::Light => {
            let omega = point.omega.expect("planned with a fixed omega");
            let (n, steps) = (p.n_qubits as f64, p.steps());
            let moments = propagate_collective_moments(point.chi_tp, omega, p.tau, steps, n, cfg.back_action)?;
            let sensitivity = light_sensitivity(point.chi_tp, omega, p.tau, steps, n, cfg.back_action)?;
            let unprobed = light_sensitivity(0.0, omega, p.tau, steps, n, cfg.back_action)?;
            Ok(vec![
                point.chi_tp.into(),
                omega.into(),
                p.tau.into(),
                (steps as f64 * p.tau).into(),
                p.n_qubits.into(),
                back_action_name(cfg).into(),
                moments.covariance(0, 0).into(),
                light_variance_approximation(point.chi_tp, omega, p.tau, steps, n).into(),
                sensitivity.into(),
                unprobed.into(),
            ])
        }
    }
}

fn back_action_name(cfg: &RunConfig) -> &'static str {
    match cfg.back_action {
        weakclock_core::light::BackActionModel::Rotating => "rotating",
        weakclock_core::light::BackActionModel::GaussianVacuum => "gaussian-vacuum",
    }
}

fn qfi_bound(p: &ProtocolParams) -> f64 {
    1.0 / (4.0 * p.n_qubits as f64 * p.total_time * p.total_time)
}

fn closed_form(kind: InformationKind, p: &ProtocolParams) -> Option<f64> {
    analytic_information(kind, p).ok().map(|e| e.value)
}

fn cfi_row(cfg: &RunConfig, point: &Point) -> Result<Vec<Cell>, Error> {
    let p = &point.params;
    let (estimate, method): (InformationEstimate, &str) = match (point.omega, cfg.exact) {
        (Some(w), true) => (cfi_exact(p, w)?, "enumerated"),
        (Some(w), false) => (cfi_monte_carlo(p, w, cfg.trajectories, cfg.seed)?, "monte-carlo"),
        (None, _) => {
            let prior = Prior::for_params(p);
            (
                cfi_monte_carlo_over_prior(p, &prior, cfg.trajectories, cfg.seed)?,
                "monte-carlo-prior",
            )
        }
    };
    let qfi = closed_form(InformationKind::Qfi, p).expect("QFI has no domain restriction");
    Ok(vec![
        p.g.into(),
        p.tau.into(),
        p.total_time.into(),
        p.n_qubits.into(),
        p.delta_omega.into(),
        p.mode.as_str().into(),
        p.p_e.into(),
        p.p_e_strong.into(),
        Cell::opt(point.omega),
        method.into(),
        if cfg.exact { Cell::Empty } else { cfg.trajectories.into() },
        estimate.value.into(),
        estimate.stderr.into(),
        qfi.into(),
        Cell::opt(fit_for_mode(p).ok().map(|e| e.value)),
        Cell::opt(closed_form(InformationKind::MolmerBound, p)),
        (estimate.value / qfi).into(),
    ])
}

fn bmse_row(cfg: &RunConfig, p: &ProtocolParams) -> Result<Vec<Cell>, Error> {
    let prior = Prior::for_params(p);
    let estimator = cfg.estimator.resolve(p, &prior);
    let result = bmse_experiment(p, &prior, cfg.estimator, cfg.reps, cfg.seed)?;
    let fit = fit_for_mode(p).ok().map(|e| e.value).filter(|v| *v > 0.0);
    let predicted = if p.eta() <= THRESHOLD_MAX_ETA && p.g > 0.0 {
        threshold_model(p, cfg.epsilon).ok().map(|m| m.predicted_bmse)
    } else {
        None
    };
    let strength = match cfg.strength {
        crate::config::Strength::Fixed => "fixed",
        crate::config::Strength::Tuned => "tuned",
        crate::config::Strength::OptimalWeakOnly => "optimal-weak-only",
    };
    let estimator = match estimator {
        weakclock_core::estimation::Estimator::Mle => "mle",
        _ => "bayes-mmse",
    };
    Ok(vec![
        p.g.into(),
        p.tau.into(),
        p.total_time.into(),
        p.n_qubits.into(),
        p.delta_omega.into(),
        p.mode.as_str().into(),
        p.p_e.into(),
        p.p_e_strong.into(),
        strength.into(),
        estimator.into(),
        result.repetitions.into(),
        result.bmse.into(),
        result.stderr.into(),
        result.degenerate.into(),
        prior.variance().into(),
        qfi_bound(p).into(),
        Cell::opt(fit.map(|f| 1.0 / f)),
        Cell::opt(predicted),
    ])
}
