//! Fisher information about `ω`: Monte-Carlo and exact classical values,
//! closed-form asymptotes, empirical fits and upper bounds.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::estimation::Prior;
use crate::model::{Mode, ProtocolParams};
use crate::trajectory::{self, enumerate_outcome_distribution, sample_qubit_score};

/// Minimum number of sampled trajectories for a Monte-Carlo estimate.
pub const MIN_TRAJECTORIES: usize = 100;

/// Where an information value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InformationKind {
    MonteCarlo,
    /// Exact classical value from enumerating every record.
    Enumerated,
    /// `4NT²`, the quantum limit for the product state.
    Qfi,
    /// `(8/3)·Ng²T³/τ`, weak-only with negligible back-action.
    WeakAsymptotic,
    /// `4NTτ/g²`, either protocol once back-action dominates.
    StrongAsymptotic,
    /// Empirical fit to the weak-only curve.
    FitWeakOnly,
    /// Empirical fit to the weak-with-strong curve.
    FitWeakWithStrong,
    /// `4NTτ·cot²g`, valid for every `T`.
    MolmerBound,
    /// [`InformationKind::FitWeakOnly`] at the strength that maximizes it.
    OptimalG,
}

impl InformationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InformationKind::MonteCarlo => "monte-carlo",
            InformationKind::Enumerated => "enumerated",
            InformationKind::Qfi => "qfi",
            InformationKind::WeakAsymptotic => "weak-asymptotic",
            InformationKind::StrongAsymptotic => "strong-asymptotic",
            InformationKind::FitWeakOnly => "fit-weak-only",
            InformationKind::FitWeakWithStrong => "fit-weak-with-strong",
            InformationKind::MolmerBound => "molmer-bound",
            InformationKind::OptimalG => "optimal-g",
        }
    }
}

/// An information value in s², with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationEstimate {
    pub value: f64,
    /// Zero for closed forms and enumeration.
    pub stderr: f64,
    pub kind: InformationKind,
}

impl InformationEstimate {
    fn exact(value: f64, kind: InformationKind) -> Self {
        Self {
            value,
            stderr: 0.0,
            kind,
        }
    }

    /// Whether `self ≤ bound + sigmas·stderr`.
    pub fn within_bound(&self, bound: f64, sigmas: f64) -> bool {
        self.value <= bound + sigmas * self.stderr
    }
}

/// Mean and standard error of a sample, reduced in index order.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_trajectories(k: usize) -> Result<()> {
    check_domain(
        "K",
        k as f64,
        k >= MIN_TRAJECTORIES,
        "at least 100 trajectories",
    )
}

/// Monte-Carlo classical Fisher information: the mean squared score over `k`
/// sampled records.
///
/// Qubits are independent and identically distributed and their scores have
/// zero mean, so the `N`-qubit value is `N` times the single-qubit one; only
/// one qubit per record is sampled. See [`cfi_monte_carlo_all_qubits`] for the
/// unreduced estimator.
pub fn cfi_monte_carlo(
    params: &ProtocolParams,
    omega: f64,
    k: usize,
    seed: u64,
) -> Result<InformationEstimate> {
    check_trajectories(k)?;
    let squared = squared_scores(k, |index| {
        sample_qubit_score(params, omega, seed, index, 0).score
    })?;
    let (mean, stderr) = mean_and_stderr(&squared);
    let n = params.n_qubits as f64;
    Ok(InformationEstimate {
        value: n * mean,
        stderr: n * stderr,
        kind: InformationKind::MonteCarlo,
    })
}

/// Monte-Carlo Fisher information averaged over `prior`: record `j` of `k`
/// is sampled at a frequency drawn from the `j`-th equal-probability stratum.
pub fn cfi_monte_carlo_over_prior(
    params: &ProtocolParams,
    prior: &Prior,
    k: usize,
    seed: u64,
) -> Result<InformationEstimate> {
    check_trajectories(k)?;
    let squared = squared_scores(k, |index| {
        let omega = prior.stratified_draw(index, k as u64, seed);
        sample_qubit_score(params, omega, seed, index, 0).score
    })?;
    let (mean, stderr) = mean_and_stderr(&squared);
    let n = params.n_qubits as f64;
    Ok(InformationEstimate {
        value: n * mean,
        stderr: n * stderr,
        kind: InformationKind::MonteCarlo,
    })
}

/// Monte-Carlo Fisher information sampling all `N` qubits of every record.
pub fn cfi_monte_carlo_all_qubits(
    params: &ProtocolParams,
    omega: f64,
    k: usize,
    seed: u64,
) -> Result<InformationEstimate> {
    check_trajectories(k)?;
    let squared = squared_scores(k, |index| {
        (0..params.n_qubits)
            .map(|q| sample_qubit_score(params, omega, seed, index, q).score)
            .sum()
    })?;
    let (value, stderr) = mean_and_stderr(&squared);
    Ok(InformationEstimate {
        value,
        stderr,
        kind: InformationKind::MonteCarlo,
    })
}

fn squared_scores(k: usize, score: impl Fn(u64) -> f64 + Sync) -> Result<Vec<f64>> {
    let squared: Vec<f64> = (0..k as u64)
        .into_par_iter()
        .map(|index| score(index).powi(2))
        .collect();
    // Sampled records always have nonzero probability, so a non-finite score
    // means the recursion broke down.
    if let Some(bad) = squared.iter().position(|s| !s.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite score for sampled record {bad}"
        )));
    }
    Ok(squared)
}

/// Exact classical Fisher information by enumerating every single-qubit
/// record, scaled by `N`.
pub fn cfi_exact(params: &ProtocolParams, omega: f64) -> Result<InformationEstimate> {
    let single = ProtocolParams {
        n_qubits: 1,
        ..*params
    };
    let mut total = 0.0;
    for (packed, p) in enumerate_outcome_distribution(&single, omega, trajectory::ENUMERATION_LIMIT)? {
        if p > 0.0 {
            let record = trajectory::unpack_enumerated(&single, packed);
            let score = trajectory::score_trajectory(&record, omega, &single)?.score;
            total += p * score * score;
        }
    }
    Ok(InformationEstimate::exact(
        params.n_qubits as f64 * total,
        InformationKind::Enumerated,
    ))
}

/// The strength maximizing the weak-only fit at total time `total_time`:
/// `g = √(τ/T)·(3/2)^{1/4}`, i.e. `g²T/τ = √(3/2)`.
pub fn optimal_weak_only_strength(tau: f64, total_time: f64) -> Result<f64> {
    check_domain("tau", tau, tau.is_finite() && tau > 0.0, "(0, ∞)")?;
    check_domain(
        "T",
        total_time,
        total_time.is_finite() && total_time >= tau,
        "[τ, ∞)",
    )?;
    Ok((tau / total_time).sqrt() * 1.5f64.powf(0.25))
}

/// Evaluates the closed form named by `kind`. The two sampled kinds are
/// rejected; use [`cfi_monte_carlo`] or [`cfi_exact`] for those.
pub fn analytic_information(
    kind: InformationKind,
    params: &ProtocolParams,
) -> Result<InformationEstimate> {
    let n = params.n_qubits as f64;
    let t = params.total_time;
    let tau = params.tau;
    let g = params.g;
    let eta = params.eta();
    let needs_strength = |g: f64| check_domain("g", g, g > 0.0 && g <= FRAC_PI_4, "(0, π/4]");

    let value = match kind {
        InformationKind::Qfi => 4.0 * n * t * t,
        InformationKind::WeakAsymptotic => 8.0 * n * g * g * t.powi(3) / (3.0 * tau),
        InformationKind::StrongAsymptotic => {
            needs_strength(g)?;
            4.0 * n * t * tau / (g * g)
        }
        InformationKind::FitWeakOnly => fit_weak_only(n, g, t, tau),
        InformationKind::FitWeakWithStrong => {
            4.0 * n * t * t / (1.0 - 0.13 * g * (t / tau).sqrt() + eta)
        }
        InformationKind::MolmerBound => {
            needs_strength(g)?;
            4.0 * n * t * tau / (g.tan() * g.tan())
        }
        InformationKind::OptimalG => fit_weak_only(n, optimal_weak_only_strength(tau, t)?, t, tau),
        InformationKind::MonteCarlo | InformationKind::Enumerated => {
            return Err(Error::Domain {
                name: "kind",
                value: f64::NAN,
                expected: "a closed-form information kind",
            })
        }
    };
    Ok(InformationEstimate::exact(value, kind))
}

/// Empirical fit; the constants 0.77 and 2/3 are fitted, not derived.
fn fit_weak_only(n: f64, g: f64, t: f64, tau: f64) -> f64 {
    let eta = g * g * t / tau;
    8.0 * g * g * n * t.powi(3) / (3.0 * tau) / (1.0 + 0.77 * eta + 2.0 / 3.0 * eta * eta)
}

/// The fit matching the protocol's mode.
pub fn fit_for_mode(params: &ProtocolParams) -> Result<InformationEstimate> {
    analytic_information(
        match params.mode {
            Mode::WeakOnly => InformationKind::FitWeakOnly,
            Mode::WeakWithStrong => InformationKind::FitWeakWithStrong,
        },
        params,
    )
}
