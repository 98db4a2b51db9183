//! Frequency estimators, Bayesian mean-squared-error experiments and the
//! analytic threshold model of the maximum-likelihood estimator.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::information::mean_and_stderr;
use crate::model::{Mode, ProtocolParams};
use crate::rng::{substream, Domain};
use crate::trajectory::{log_likelihood_unchecked, simulate_trajectory_indexed, Trajectory};

/// Uniform prior on `[lo, hi]`, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub lo: f64,
    pub hi: f64,
}

impl Prior {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        check_domain("lo", lo, lo.is_finite(), "finite")?;
        check_domain("hi", hi, hi.is_finite() && hi > lo, "finite and above lo")?;
        Ok(Self { lo, hi })
    }

    /// `[0, δω]`
    pub fn for_params(params: &ProtocolParams) -> Self {
        Self {
            lo: 0.0,
            hi: params.delta_omega,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `δω²/12`
    pub fn variance(&self) -> f64 {
        self.width().powi(2) / 12.0
    }

    pub fn contains(&self, omega: f64) -> bool {
        (self.lo..=self.hi).contains(&omega)
    }

    pub fn clamp(&self, omega: f64) -> f64 {
        omega.clamp(self.lo, self.hi)
    }

    /// The estimators assume the support lies in `[0, π/2τ]`, where the
    /// outcome statistics determine `ω` uniquely.
    pub fn check_alias_free(&self, params: &ProtocolParams) -> Result<()> {
        let limit = PI / (2.0 * params.tau) * (1.0 + 1e-12);
        if self.lo < 0.0 || self.hi > limit {
            return Err(Error::OutOfValidity(format!(
                "prior [{}, {}] leaves the unambiguous range [0, π/2τ = {}]",
                self.lo,
                self.hi,
                PI / (2.0 * params.tau)
            )));
        }
        Ok(())
    }

    /// Draw `index` of `count` equal-probability strata, one uniform draw in
    /// each.
    pub fn stratified_draw(&self, index: u64, count: u64, seed: u64) -> f64 {
        let u: f64 = substream(seed, Domain::PriorDraw, index, 0).random();
        self.lo + (index as f64 + u) / count as f64 * self.width()
    }

    /// An independent uniform draw.
    pub fn iid_draw(&self, index: u64, seed: u64) -> f64 {
        let u: f64 = substream(seed, Domain::PriorDraw, index, 1).random();
        self.lo + u * self.width()
    }
}

/// A frequency estimate. `degenerate` marks records that carried no usable
/// signal; the estimate is then the prior midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub omega: f64,
    pub degenerate: bool,
}

/// Coarse-grid spacing of the refinement stage, in units of `π/T`.
const REFINE_GRID_PER_BIN: f64 = 16.0;
/// Grid local maxima refined by golden-section search.
const REFINE_CANDIDATES: usize = 3;
/// Periodogram peaks whose neighbourhoods are searched in full with the
/// exact likelihood, after every peak has been screened by it.
const PERIODOGRAM_CANDIDATES: usize = 3;
/// Half-width of the screening window around a periodogram peak, in bins
/// `π/T`, and the number of likelihood probes on each side.
const SCREEN_HALF_WIDTH: f64 = 0.25;
const SCREEN_PROBES: usize = 4;
const GOLDEN_ITERATIONS: usize = 60;
/// Cap on the refinement grid when the whole prior must be scanned.
const MAX_REFINE_GRID: usize = 4096;

/// Grid points per frequency bin `π/T` in the periodogram search. With one
/// point per bin, a signal half a bin away accumulates a phase error of `π`
/// over the record and its cosine sum cancels.
pub const PERIODOGRAM_OVERSAMPLING: usize = 4;

/// Stage 1 of the maximum-likelihood estimator: the frequency on the grid
/// `ω = πk/(4T)` inside the prior maximizing
/// `B(ω) = Σ_n (x_n − ½)·cos(2ωnτ)`, where `x_n` is the fraction of outcome
/// `0` at weak step `n`. The grid contains every bin `πk/T`. Ties resolve to
/// the lowest frequency. Returns `None` when no grid point lies inside the
/// prior.
pub fn dft_peak(zero_fractions: &[f64], tau: f64, total_time: f64, prior: &Prior) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (omega, b) in periodogram(zero_fractions, tau, total_time, prior) {
        if best.is_none_or(|(_, top)| b > top) {
            best = Some((omega, b));
        }
    }
    best.map(|(omega, _)| omega)
}

/// `B(ω)` on the oversampled grid inside the prior, in increasing `ω`.
fn periodogram(zero_fractions: &[f64], tau: f64, total_time: f64, prior: &Prior) -> Vec<(f64, f64)> {
    let step = PI / (total_time * PERIODOGRAM_OVERSAMPLING as f64);
    let first = (prior.lo / step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let last = (prior.hi / step * (1.0 + 1e-12)).floor() as usize;
    (first..=last)
        .map(|k| {
            let omega = k as f64 * step;
            (omega, dft_objective(zero_fractions, tau, omega))
        })
        .collect()
}

/// The `count` highest local maxima of the periodogram, best first.
pub fn periodogram_peaks(
    zero_fractions: &[f64],
    tau: f64,
    total_time: f64,
    prior: &Prior,
    count: usize,
) -> Vec<f64> {
    let grid = periodogram(zero_fractions, tau, total_time, prior);
    let mut peaks: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&i| {
            let v = grid[i].1;
            (i == 0 || v > grid[i - 1].1) && (i + 1 == grid.len() || v >= grid[i + 1].1)
        })
        .map(|i| grid[i])
        .collect();
    // stable sort keeps the lowest frequency first among ties
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.into_iter().take(count).map(|p| p.0).collect()
}

/// `Σ_n (x_n − ½)·cos(2ωnτ)`, `n = 1…len`.
pub fn dft_objective(zero_fractions: &[f64], tau: f64, omega: f64) -> f64 {
    let (s, c) = (2.0 * omega * tau).sin_cos();
    // cos(2ωnτ) by the angle-addition recurrence
    let (mut cn, mut sn) = (c, s);
    let mut total = 0.0;
    for &x in zero_fractions {
        total += (x - 0.5) * cn;
        (cn, sn) = (cn * c - sn * s, sn * c + cn * s);
    }
    total
}

fn weak_data_is_degenerate(traj: &Trajectory, params: &ProtocolParams) -> bool {
    if params.weak_steps() == 0 || params.effective_signal() == 0.0 {
        return true;
    }
    let fractions = traj.zero_fractions();
    fractions.iter().all(|&x| x == fractions[0])
}

/// Maximum-likelihood estimate of `ω` within `prior`.
///
/// Stage 1 lists the local maxima of the weak record's periodogram
/// ([`periodogram_peaks`]) and keeps the few with the highest exact likelihood
/// nearby. Stage 2 maximizes the exact replayed likelihood in
/// `[ω₁ − π/T, ω₁ + π/T]` around each of them and keeps the best. The final
/// projective readout makes that likelihood oscillate with period `π/T`, so
/// each bracket is first sampled on a grid of spacing `π/16T` and the best few
/// local maxima are polished by golden-section search. Without usable weak
/// data a weak-only record is degenerate, while a weak-with-strong record is
/// searched over the whole prior.
pub fn mle_estimate(traj: &Trajectory, params: &ProtocolParams, prior: &Prior) -> Result<Estimate> {
    traj.check_shape(params)?;
    prior.check_alias_free(params)?;
    let bin = PI / params.total_time;

    let loglik = |omega: f64| log_likelihood_unchecked(traj, omega, params);
    let spacing = bin / REFINE_GRID_PER_BIN;

    if weak_data_is_degenerate(traj, params) {
        if !params.has_strong() {
            return Ok(Estimate {
                omega: prior.midpoint(),
                degenerate: true,
            });
        }
        return Ok(Estimate {
            omega: maximize_on_bracket(loglik, (prior.lo, prior.hi), spacing).0,
            degenerate: false,
        });
    }

    let fractions = traj.zero_fractions();
    let peaks = periodogram_peaks(&fractions, params.tau, params.total_time, prior, usize::MAX);
    let mut centers = screen_candidates(&loglik, &peaks, bin, prior);
    if centers.is_empty() {
        centers.push(prior.midpoint());
    }
    let omega = centers
        .into_iter()
        .map(|c| maximize_on_bracket(loglik, (prior.clamp(c - bin), prior.clamp(c + bin)), spacing))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one center")
        .0;
    Ok(Estimate {
        omega,
        degenerate: false,
    })
}

/// The [`PERIODOGRAM_CANDIDATES`] peaks with the highest likelihood on a short
/// probe grid around them, best first. The weak record's periodogram ignores
/// the final readout, so a noise peak can outrank the signal there while the
/// likelihood still separates them.
fn screen_candidates(loglik: &impl Fn(f64) -> f64, peaks: &[f64], bin: f64, prior: &Prior) -> Vec<f64> {
    if peaks.len() <= PERIODOGRAM_CANDIDATES {
        return peaks.to_vec();
    }
    let step = SCREEN_HALF_WIDTH * bin / SCREEN_PROBES as f64;
    let probes = SCREEN_PROBES as i32;
    let mut scored: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&c| {
            let best = (-probes..=probes)
                .map(|k| loglik(prior.clamp(c + k as f64 * step)))
                .fold(f64::NEG_INFINITY, f64::max);
            (c, best)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.into_iter().take(PERIODOGRAM_CANDIDATES).map(|p| p.0).collect()
}

/// Grid scan plus golden-section polishing of the best grid local maxima.
fn maximize_on_bracket(f: impl Fn(f64) -> f64, (lo, hi): (f64, f64), spacing: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let cells = ((hi - lo) / spacing).ceil().clamp(2.0, MAX_REFINE_GRID as f64) as usize;
    let h = (hi - lo) / cells as f64;
    let grid: Vec<(f64, f64)> = (0..=cells)
        .map(|i| {
            let x = if i == cells { hi } else { lo + i as f64 * h };
            (x, f(x))
        })
        .collect();

    let mut peaks: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&i| {
            let v = grid[i].1;
            (i == 0 || v >= grid[i - 1].1) && (i + 1 == grid.len() || v >= grid[i + 1].1)
        })
        .map(|i| grid[i])
        .collect();
    if peaks.is_empty() {
        // every value is NaN
        let mid = 0.5 * (lo + hi);
        return (mid, f(mid));
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(REFINE_CANDIDATES);

    let tolerance = 1e-9 * h.max(f64::MIN_POSITIVE);
    let mut best = peaks[0];
    for &(x, _) in &peaks {
        let polished = golden_section_max(&f, (x - h).max(lo), (x + h).min(hi), tolerance);
        if polished.1 > best.1 {
            best = polished;
        }
    }
    best
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tolerance: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= tolerance {
            break;
        }
        if fc >= fd {
            (b, d, fd) = (d, c, fc);
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let ends = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    ends.into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty")
}

/// Smallest posterior grid accepted.
pub const MIN_POSTERIOR_GRID: usize = 256;
pub const DEFAULT_POSTERIOR_GRID: usize = 2048;
const MAX_POSTERIOR_GRID: usize = 1 << 16;
/// Grid doubling stops once the posterior mean moves less than this fraction
/// of the prior width.
const POSTERIOR_CONVERGENCE: f64 = 1e-3;

/// Posterior mean of `ω` under the uniform prior, evaluated on a midpoint grid
/// of `grid_size` cells that is doubled until the mean is stable.
pub fn bayesian_mmse_estimate(
    traj: &Trajectory,
    params: &ProtocolParams,
    prior: &Prior,
    grid_size: usize,
) -> Result<Estimate> {
    traj.check_shape(params)?;
    check_domain(
        "grid_size",
        grid_size as f64,
        grid_size >= MIN_POSTERIOR_GRID,
        "at least 256",
    )?;
    let loglik = |omega: f64| log_likelihood_unchecked(traj, omega, params);
    posterior_mean_converged(loglik, prior, grid_size)
}

pub(crate) fn posterior_mean_converged(
    loglik: impl Fn(f64) -> f64,
    prior: &Prior,
    grid_size: usize,
) -> Result<Estimate> {
    let mut size = grid_size;
    let mut current = posterior_mean(&loglik, prior, size)?;
    while size < MAX_POSTERIOR_GRID {
        size *= 2;
        let refined = posterior_mean(&loglik, prior, size)?;
        let moved = (refined.omega - current.omega).abs();
        current = refined;
        if moved < POSTERIOR_CONVERGENCE * prior.width() {
            break;
        }
    }
    Ok(current)
}

fn posterior_mean(loglik: &impl Fn(f64) -> f64, prior: &Prior, size: usize) -> Result<Estimate> {
    let h = prior.width() / size as f64;
    let values: Vec<(f64, f64)> = (0..size)
        .map(|i| {
            let omega = prior.lo + (i as f64 + 0.5) * h;
            (omega, loglik(omega))
        })
        .collect();
    let top = values
        .iter()
        .map(|v| v.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "record has zero likelihood everywhere on the prior".into(),
        ));
    }
    let flat = values.iter().all(|v| top - v.1 < 1e-12);
    if flat {
        return Ok(Estimate {
            omega: prior.midpoint(),
            degenerate: true,
        });
    }
    let (mut weight, mut moment) = (0.0, 0.0);
    for &(omega, l) in &values {
        let w = (l - top).exp();
        weight += w;
        moment += w * omega;
    }
    Ok(Estimate {
        omega: prior.clamp(moment / weight),
        degenerate: false,
    })
}

/// Which estimator a BMSE experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Mle,
    BayesMmse,
    /// Posterior mean when `δω·T < π`, maximum likelihood otherwise.
    Auto,
}

impl Estimator {
    pub fn resolve(self, params: &ProtocolParams, prior: &Prior) -> Estimator {
        match self {
            Estimator::Auto if prior.width() * params.total_time < PI => Estimator::BayesMmse,
            Estimator::Auto => Estimator::Mle,
            other => other,
        }
    }

    pub fn estimate(self, traj: &Trajectory, params: &ProtocolParams, prior: &Prior) -> Result<Estimate> {
        match self.resolve(params, prior) {
            Estimator::BayesMmse => bayesian_mmse_estimate(traj, params, prior, DEFAULT_POSTERIOR_GRID),
            _ => mle_estimate(traj, params, prior),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mle" => Ok(Estimator::Mle),
            "bayes-mmse" => Ok(Estimator::BayesMmse),
            "auto" => Ok(Estimator::Auto),
            other => Err(format!(
                "unknown estimator {other:?} (expected \"mle\", \"bayes-mmse\" or \"auto\")"
            )),
        }
    }
}

/// How true frequencies are drawn from the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorSampling {
    /// One draw in each of `n_rep` equal-probability strata.
    #[default]
    Stratified,
    Iid,
}

pub const MIN_REPETITIONS: usize = 100;

/// Outcome of one BMSE experiment, in (rad/s)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmseResult {
    pub bmse: f64,
    pub stderr: f64,
    pub repetitions: usize,
    /// Repetitions whose estimate was flagged degenerate.
    pub degenerate: usize,
}

/// Squared error of the estimate of repetition `index`.
pub fn bmse_repetition(
    params: &ProtocolParams,
    prior: &Prior,
    estimator: Estimator,
    sampling: PriorSampling,
    n_rep: usize,
    seed: u64,
    index: u64,
) -> Result<(f64, bool)> {
    let omega = match sampling {
        PriorSampling::Stratified => prior.stratified_draw(index, n_rep as u64, seed),
        PriorSampling::Iid => prior.iid_draw(index, seed),
    };
    let traj = simulate_trajectory_indexed(params, omega, seed, index);
    let estimate = estimator.estimate(&traj, params, prior)?;
    Ok(((estimate.omega - omega).powi(2), estimate.degenerate))
}

/// Bayesian mean squared error over `n_rep` repetitions, each drawing `ω`
/// from the prior, sampling a record and estimating.
pub fn bmse_experiment(
    params: &ProtocolParams,
    prior: &Prior,
    estimator: Estimator,
    n_rep: usize,
    seed: u64,
) -> Result<BmseResult> {
    bmse_experiment_with(params, prior, estimator, PriorSampling::Stratified, n_rep, seed)
}

pub fn bmse_experiment_with(
    params: &ProtocolParams,
    prior: &Prior,
    estimator: Estimator,
    sampling: PriorSampling,
    n_rep: usize,
    seed: u64,
) -> Result<BmseResult> {
    check_domain(
        "n_rep",
        n_rep as f64,
        n_rep >= MIN_REPETITIONS,
        "at least 100 repetitions",
    )?;
    prior.check_alias_free(params)?;
    let outcomes = (0..n_rep as u64)
        .into_par_iter()
        .map(|i| bmse_repetition(params, prior, estimator, sampling, n_rep, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (bmse, stderr) = mean_and_stderr(&errors);
    Ok(BmseResult {
        bmse,
        stderr,
        repetitions: n_rep,
        degenerate: outcomes.iter().filter(|o| o.1).count(),
    })
}

/// Analytic model of the maximum-likelihood estimator around its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub epsilon: f64,
    /// Probability that a noise bin beats the signal bin.
    pub outlier_probability: f64,
    /// `I_C` of the mode with back-action neglected.
    pub information: f64,
    /// `(1 − q)/I_C + q·π²/48τ²`, in (rad/s)².
    pub predicted_bmse: f64,
    /// Signal-to-noise `Nη` needed to be `ε`-close to `I_C`, first-order
    /// solution shared by both modes.
    pub required_n_eta: f64,
    /// Second-order solution specific to the mode.
    pub required_n_eta_second_order: f64,
}

/// Largest back-action parameter for which the model is applied.
pub const THRESHOLD_MAX_ETA: f64 = 1.5;

/// Evaluates the threshold model for `params`, using its mode.
pub fn threshold_model(params: &ProtocolParams, epsilon: f64) -> Result<ThresholdModel> {
    check_domain("epsilon", epsilon, epsilon > 0.0 && epsilon < 1.0, "(0, 1)")?;
    if params.eta() > THRESHOLD_MAX_ETA {
        return Err(Error::OutOfValidity(format!(
            "back-action η = g²T/τ = {} exceeds {THRESHOLD_MAX_ETA}",
            params.eta()
        )));
    }
    let n = params.n_qubits as f64;
    let (g, t, tau) = (params.g, params.total_time, params.tau);
    let q = outlier_probability(n, g, t, tau);
    let weak = 8.0 * n * g * g * t.powi(3) / (3.0 * tau);
    let information = match params.mode {
        Mode::WeakOnly => weak,
        Mode::WeakWithStrong => weak + 4.0 * n * t * t,
    };
    let plateau = PI * PI / (48.0 * tau * tau);
    let predicted_bmse = if q >= 1.0 {
        plateau
    } else {
        (1.0 - q) / information + q * plateau
    };

    let steps_ratio = t / tau;
    let first = (PI.powf(1.5) / (36.0 * epsilon)).ln() + 3.0 * steps_ratio.ln();
    let second = match params.mode {
        Mode::WeakOnly => first + 0.5 * first.ln(),
        Mode::WeakWithStrong => {
            let l = (PI.powf(1.5) / (48.0 * epsilon) * n * steps_ratio.powi(3)).ln();
            l - 0.5 * l.ln()
        }
    };
    Ok(ThresholdModel {
        epsilon,
        outlier_probability: q,
        information,
        predicted_bmse,
        required_n_eta: 2.0 * first,
        required_n_eta_second_order: 2.0 * second,
    })
}

/// `q = √(T/8πNτg²)·exp(−g²NT/2τ)`, clamped to `[0, 1]`.
pub fn outlier_probability(n: f64, g: f64, t: f64, tau: f64) -> f64 {
    let snr = g * g * n * t / tau;
    if snr == 0.0 {
        return 1.0;
    }
    ((t / (8.0 * PI * n * tau * g * g)).sqrt() * (-0.5 * snr).exp()).clamp(0.0, 1.0)
}

/// Weak strength for the weak-with-strong protocol at the given `T`: the
/// minimizer of the threshold model's predicted BMSE, with the back-action
/// fit standing in for `I_C`. Searched over `g²T/τ ∈ (0, 1.5]`.
pub fn tuned_weak_with_strong_strength(params: &ProtocolParams) -> Result<f64> {
    let n = params.n_qubits as f64;
    let (t, tau) = (params.total_time, params.tau);
    let plateau = PI * PI / (48.0 * tau * tau);
    let predicted = |g: f64| {
        let q = outlier_probability(n, g, t, tau);
        let eta = g * g * t / tau;
        let fit = 4.0 * n * t * t / (1.0 - 0.13 * g * (t / tau).sqrt() + eta);
        (1.0 - q) / fit + q * plateau
    };
    let g_max = (THRESHOLD_MAX_ETA * tau / t).sqrt().min(std::f64::consts::FRAC_PI_4);
    // the objective is smooth in g; minimize its negative by scan + golden
    let neg = |g: f64| -predicted(g).ln();
    let g = maximize_on_bracket(neg, (g_max * 1e-3, g_max), g_max / 256.0).0;
    if !g.is_finite() || g <= 0.0 {
        return Err(Error::Numerical("strength search failed".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{simulate_trajectory, OutcomeString};

    fn params(g: f64, tau: f64, t: f64, n: usize, mode: Mode) -> ProtocolParams {
        ProtocolParams::new(g, tau, t, n, PI / (2.0 * tau), mode).unwrap()
    }

    #[test]
    fn prior_basics() {
        let p = Prior::new(1.0, 3.0).unwrap();
        assert_eq!(p.midpoint(), 2.0);
        assert!((p.variance() - 4.0 / 12.0).abs() < 1e-15);
        assert!(Prior::new(3.0, 1.0).is_err());
        for i in 0..10 {
            let w = p.stratified_draw(i, 10, 4);
            assert!(w >= 1.0 + 0.2 * i as f64 && w < 1.0 + 0.2 * (i + 1) as f64);
        }
        let q = params(0.1, 0.1, 1.0, 1, Mode::WeakOnly);
        assert!(Prior::new(0.0, 5.0 * PI).unwrap().check_alias_free(&q).is_ok());
        assert!(Prior::new(0.0, 5.1 * PI).unwrap().check_alias_free(&q).is_err());
    }

    #[test]
    fn dft_finds_the_signal_bin() {
        let (tau, m, g) = (0.1, 200usize, 0.05);
        let t = m as f64 * tau;
        let prior = Prior::new(0.0, PI / (2.0 * tau)).unwrap();
        for k in [7usize, 33, 50, 99] {
            let omega = PI * k as f64 / t;
            let x: Vec<f64> = (1..=m)
                .map(|n| 0.5 + g * (2.0 * omega * n as f64 * tau).cos())
                .collect();
            // brute force over every grid point in the prior
            let brute = (1..=4 * m)
                .map(|j| PI * j as f64 / (4.0 * t))
                .filter(|w| prior.contains(*w))
                .map(|w| (w, dft_objective(&x, tau, w)))
                .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let found = dft_peak(&x, tau, t, &prior).unwrap();
            assert!((found - brute.0).abs() < 1e-12);
            assert!((found - omega).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn dft_finds_off_bin_signals() {
        let (tau, m, g) = (0.1, 79usize, 0.1);
        let t = 8.0;
        let prior = Prior::new(0.0, PI / (2.0 * tau)).unwrap();
        for omega in [6.1, 2.0 + PI / (2.0 * t), 11.0] {
            let x: Vec<f64> = (1..=m)
                .map(|n| 0.5 + g * (2.0 * omega * n as f64 * tau).cos())
                .collect();
            let found = dft_peak(&x, tau, t, &prior).unwrap();
            assert!((found - omega).abs() <= PI / (8.0 * t) + 1e-12, "{omega} -> {found}");
        }
    }

    #[test]
    fn dft_objective_mirror_symmetry() {
        let tau = 0.1;
        let x: Vec<f64> = (0..80).map(|i| ((i * 37 % 11) as f64) / 11.0).collect();
        for w in [0.3, 2.0, 7.7, 15.0] {
            let a = dft_objective(&x, tau, w);
            let b = dft_objective(&x, tau, PI / tau - w);
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn dft_ties_resolve_to_lowest_bin() {
        let x = vec![0.5; 40];
        let prior = Prior::new(0.0, 5.0 * PI).unwrap();
        assert_eq!(dft_peak(&x, 0.1, 4.0, &prior), Some(PI / 16.0));
    }

    #[test]
    fn uninformative_record_is_degenerate() {
        let p = params(0.0, 0.1, 2.0, 4, Mode::WeakOnly);
        let prior = Prior::for_params(&p);
        let t = simulate_trajectory(&p, 3.0, 1);
        let e = mle_estimate(&t, &p, &prior).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.omega, prior.midpoint());
        let e = bayesian_mmse_estimate(&t, &p, &prior, 256).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.omega, prior.midpoint());
    }

    #[test]
    fn estimates_stay_in_the_prior() {
        let p = params(0.2, 0.1, 3.0, 6, Mode::WeakWithStrong);
        let prior = Prior::new(2.0, 9.0).unwrap();
        for i in 0..30 {
            let t = simulate_trajectory_indexed(&p, 2.0 + 0.23 * i as f64, 5, i);
            assert!(prior.contains(mle_estimate(&t, &p, &prior).unwrap().omega));
            assert!(prior.contains(bayesian_mmse_estimate(&t, &p, &prior, 256).unwrap().omega));
        }
    }

    /// One projective readout at `T = τ` has `p(0|ω) = cos²(ωτ)`; the
    /// posterior mean is a ratio of elementary integrals.
    #[test]
    fn posterior_mean_matches_quadrature() {
        let tau = 0.5;
        let p = params(0.1, tau, tau, 1, Mode::WeakWithStrong);
        let prior = Prior::new(0.0, PI / (2.0 * tau)).unwrap();
        for bit in [false, true] {
            let t = Trajectory {
                seed: 0,
                index: 0,
                weak: vec![OutcomeString::default()],
                strong: Some(vec![bit]),
            };
            let like = |w: f64| {
                let c = (w * tau).cos().powi(2);
                if bit { 1.0 - c } else { c }
            };
            // composite Simpson on 20000 panels
            let panels = 20_000;
            let h = prior.width() / panels as f64;
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..=panels {
                let w = prior.lo + i as f64 * h;
                let c = if i == 0 || i == panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                num += c * w * like(w);
                den += c * like(w);
            }
            let exact = num / den;
            let got = bayesian_mmse_estimate(&t, &p, &prior, 2048).unwrap().omega;
            assert!((got - exact).abs() < 1e-5 * prior.width(), "{got} vs {exact}");
        }
    }

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, v) = golden_section_max(&|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && v <= 0.0);
        let best = maximize_on_bracket(|x: f64| (5.0 * x).cos() + 0.1 * x, (0.0, 4.0), 0.05).0;
        // global maximum where sin 5x = 0.02 on the last period
        assert!((best - (6.0 * PI + 0.02f64.asin()) / 5.0).abs() < 1e-6, "{best}");
    }

    #[test]
    fn threshold_examples() {
        let p = params(0.1, 0.1, 10.0, 64, Mode::WeakWithStrong);
        let model = threshold_model(&p, 0.1).unwrap();
        // √(10/(8π·64·0.1·0.01))·e^{−32}
        let q = (10.0f64 / (8.0 * PI * 64.0 * 0.1 * 0.01)).sqrt() * (-32.0f64).exp();
        assert!((model.outlier_probability / q - 1.0).abs() < 1e-12);
        assert!((model.outlier_probability - 3.16e-14).abs() < 0.01e-14);
        assert!((model.required_n_eta - 28.50).abs() < 0.01, "{}", model.required_n_eta);

        let many = threshold_model(&p.with_qubits(100_000).unwrap(), 0.1).unwrap();
        assert_eq!(many.outlier_probability, 0.0);
        assert!((many.predicted_bmse * many.information - 1.0).abs() < 1e-12);

        let faint = threshold_model(&p.with_g(1e-4).unwrap().with_qubits(1).unwrap(), 0.1).unwrap();
        assert_eq!(faint.outlier_probability, 1.0);
        assert!((faint.predicted_bmse - PI * PI / (48.0 * 0.01)).abs() < 1e-9);

        assert!(matches!(
            threshold_model(&p.with_g(0.4).unwrap(), 0.1),
            Err(Error::OutOfValidity(_))
        ));
        assert!(threshold_model(&p, 1.0).is_err());
    }

    #[test]
    fn second_order_conditions() {
        let p = params(0.1, 0.1, 10.0, 64, Mode::WeakOnly);
        let l = (PI.powf(1.5) / 3.6).ln() + 3.0 * 100f64.ln();
        let weak = threshold_model(&p, 0.1).unwrap();
        assert!((weak.required_n_eta_second_order - 2.0 * (l + 0.5 * l.ln())).abs() < 1e-12);
        let strong = threshold_model(&p.with_mode(Mode::WeakWithStrong), 0.1).unwrap();
        let l2 = (PI.powf(1.5) / 4.8 * 64.0 * 1e6).ln();
        assert!((strong.required_n_eta_second_order - 2.0 * (l2 - 0.5 * l2.ln())).abs() < 1e-12);
    }

    #[test]
    fn tuned_strength_is_in_the_weak_regime() {
        let p = params(0.1, 0.5, 10.0, 64, Mode::WeakWithStrong);
        let g = tuned_weak_with_strong_strength(&p).unwrap();
        let eta = g * g * 10.0 / 0.5;
        assert!(eta > 0.0 && eta <= THRESHOLD_MAX_ETA + 1e-12, "η = {eta}");
    }
}
