//! Comparison protocols: the optimal classical interferometer (a coherent spin
//! state read out by the best possible measurement) and the cascaded
//! multi-ensemble Ramsey scheme.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::estimation::{posterior_mean_converged, BmseResult, Prior, MIN_REPETITIONS};
use crate::information::mean_and_stderr;
use crate::rng::{substream, Domain};

/// Largest qubit number accepted by [`oci_bound`]; the work is dense in `N + 1`.
pub const OCI_MAX_QUBITS: usize = 512;
/// Eigenvalues of the averaged state below this fraction of the largest are
/// treated as zero.
const EIGEN_FLOOR: f64 = 1e-12;
const OCI_RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Dicke components with weight `C(N,k)/2^N` below this are dropped; their
/// tiny entries otherwise stall the eigensolver.
const NEGLIGIBLE_WEIGHT: f64 = 1e-30;

/// `√(C(N,k)/2^N)` for `k = 0..=N`, computed in log space.
fn binomial_amplitudes(n: usize) -> Vec<f64> {
    let half_log = 0.5 * (n as f64) * std::f64::consts::LN_2;
    let mut log_c = 0.0;
    (0..=n)
        .map(|k| {
            if k > 0 {
                log_c += ((n - k + 1) as f64 / k as f64).ln();
            }
            (0.5 * log_c - half_log).exp()
        })
        .collect()
}

/// `E[e^{−iωd}]` and `Im E[ω·e^{−iωd}]` for `ω` uniform on `[−h, h]`.
fn centered_uniform_moments(h: f64, d: f64) -> (f64, f64) {
    let x = h * d;
    if x.abs() < 1e-4 {
        // series; both moments are analytic at d = 0
        let x2 = x * x;
        let sinc = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
        // −E[ω sin ωd] = −h²d/3·(1 − x²/10)
        return (sinc, -h * h * d / 3.0 * (1.0 - x2 / 10.0));
    }
    let sinc = x.sin() / x;
    let first = (x.sin() / (d * d) - h * x.cos() / d) / h;
    (sinc, -first)
}

/// Minimum BMSE over all measurements of the `N`-qubit coherent spin state
/// after free evolution for `T`, under a uniform prior of width `δω`.
///
/// The prior is centered on zero, which leaves the BMSE unchanged. In the
/// symmetric subspace the averaged state `ρ̄` is real symmetric and the first
/// moment `ρ̄′ = iB` has `B` real antisymmetric, so `L = iK` with `K` real.
pub fn oci_bound(n_qubits: usize, total_time: f64, delta_omega: f64) -> Result<f64> {
    check_domain(
        "N",
        n_qubits as f64,
        (1..=OCI_MAX_QUBITS).contains(&n_qubits),
        "1 ≤ N ≤ 512",
    )?;
    check_domain("T", total_time, total_time.is_finite() && total_time >= 0.0, "T ≥ 0")?;
    check_domain(
        "delta_omega",
        delta_omega,
        delta_omega.is_finite() && delta_omega > 0.0,
        "δω > 0",
    )?;
    let prior_variance = delta_omega * delta_omega / 12.0;
    if total_time == 0.0 {
        return Ok(prior_variance);
    }

    let amp = binomial_amplitudes(n_qubits);
    // the kept components are contiguous around k = N/2
    let first = amp.iter().position(|a| a * a > NEGLIGIBLE_WEIGHT).unwrap_or(0);
    let dim = amp.len() - 2 * first;
    let amp = &amp[first..first + dim];
    let h = 0.5 * delta_omega;
    // both kernels depend only on k − l
    let kernels: Vec<(f64, f64)> = (0..dim)
        .map(|d| centered_uniform_moments(h, 2.0 * total_time * d as f64))
        .collect();
    let rho = DMatrix::from_fn(dim, dim, |k, l| {
        amp[k] * amp[l] * kernels[k.abs_diff(l)].0
    });
    let b = DMatrix::from_fn(dim, dim, |k, l| {
        let m = kernels[k.abs_diff(l)].1;
        let m = if k >= l { m } else { -m };
        amp[k] * amp[l] * m
    });

    let eigen = SymmetricEigen::new(rho.clone());
    if eigen.eigenvalues.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numerical("eigensolver did not converge".into()));
    }
    let p = &eigen.eigenvalues;
    let v = &eigen.eigenvectors;
    let floor = EIGEN_FLOOR * p.iter().cloned().fold(0.0, f64::max);
    let b_eig = v.transpose() * &b * v;
    let mut k_eig = DMatrix::zeros(dim, dim);
    let mut gain = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            let s = p[j] + p[k];
            if s > floor {
                k_eig[(j, k)] = 2.0 * b_eig[(j, k)] / s;
                // Tr(L²ρ̄) = Σ |L_jk|²(p_j + p_k)/2
                gain += 2.0 * b_eig[(j, k)].powi(2) / s;
            }
        }
    }

    let k_mat = v * k_eig * v.transpose();
    let residual = (0.5 * (&k_mat * &rho + &rho * &k_mat) - &b).norm();
    let scale = b.norm();
    if residual > OCI_RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE) && scale > 1e-300 {
        return Err(Error::Numerical(format!(
            "operator equation residual {residual:e} relative to {scale:e}"
        )));
    }
    Ok((prior_variance - gain).clamp(0.0, prior_variance))
}

/// Partition of `N` qubits into ensembles interrogated for `T, T/2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadedPlan {
    pub sizes: Vec<usize>,
    pub times: Vec<f64>,
}

impl CascadedPlan {
    /// `M` ensembles of `N/M` qubits each.
    pub fn equal(n_qubits: usize, ensembles: usize, total_time: f64) -> Result<Self> {
        check_domain("M", ensembles as f64, ensembles >= 1, "M ≥ 1")?;
        if !n_qubits.is_multiple_of(ensembles) {
            return Err(Error::Domain {
                name: "N",
                value: n_qubits as f64,
                expected: "a multiple of the ensemble count",
            });
        }
        Self::balanced(n_qubits, ensembles, total_time)
    }

    /// `M` ensembles whose sizes differ by at most one; the extra qubits go to
    /// the longest interrogations.
    pub fn balanced(n_qubits: usize, ensembles: usize, total_time: f64) -> Result<Self> {
        check_domain(
            "M",
            ensembles as f64,
            ensembles >= 1 && ensembles <= n_qubits,
            "1 ≤ M ≤ N",
        )?;
        check_domain("T", total_time, total_time > 0.0 && total_time.is_finite(), "T > 0")?;
        let base = n_qubits / ensembles;
        let extra = n_qubits % ensembles;
        Ok(Self {
            sizes: (0..ensembles).map(|i| base + usize::from(i < extra)).collect(),
            times: (0..ensembles).map(|i| total_time / 2f64.powi(i as i32)).collect(),
        })
    }

    pub fn ensembles(&self) -> usize {
        self.sizes.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Shortest interrogation time.
    pub fn shortest_time(&self) -> f64 {
        *self.times.last().expect("at least one ensemble")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadedFisher {
    pub total: f64,
    /// `4 N_i T_i²` per ensemble.
    pub per_ensemble: Vec<f64>,
}

/// Quantum Fisher information of an equally partitioned cascade,
/// `(16NT²/3M)(1 − 4^{−M})`.
pub fn cascaded_fisher(plan: &CascadedPlan) -> Result<CascadedFisher> {
    let m = plan.ensembles();
    let n = plan.n_qubits();
    if plan.sizes.iter().any(|&s| s * m != n) {
        return Err(Error::Domain {
            name: "N",
            value: n as f64,
            expected: "an equal partition across ensembles",
        });
    }
    let t = plan.times[0];
    let total = 16.0 * n as f64 * t * t / (3.0 * m as f64) * (1.0 - 4f64.powi(-(m as i32)));
    let per_ensemble = plan
        .sizes
        .iter()
        .zip(&plan.times)
        .map(|(&s, &ti)| 4.0 * s as f64 * ti * ti)
        .collect();
    Ok(CascadedFisher {
        total,
        per_ensemble,
    })
}

/// Smallest `M` whose shortest ensemble sees no mirror ambiguity:
/// `2·δω·T/2^{M−1} ≤ π`. An `x` readout cannot tell `2ωt` from `2π − 2ωt`.
pub fn minimal_unambiguous_ensembles(total_time: f64, delta_omega: f64) -> usize {
    let mut m = 1;
    while 2.0 * delta_omega * total_time / 2f64.powi(m as i32 - 1) > PI * (1.0 + 1e-12) {
        m += 1;
    }
    m
}

/// Posterior grid resolving the narrowest fringe of the longest ensemble.
fn cascaded_grid(prior: &Prior, total_time: f64) -> usize {
    let cells = 64.0 * prior.width() * total_time;
    (cells.ceil() as usize).next_power_of_two().max(2048)
}

/// Squared error of one cascaded repetition at true frequency `omega`.
fn cascaded_repetition(
    plan: &CascadedPlan,
    prior: &Prior,
    omega: f64,
    grid: usize,
    seed: u64,
    index: u64,
) -> Result<(f64, bool)> {
    let mut rng = substream(seed, Domain::Cascaded, index, 0);
    // number of `+x` outcomes per ensemble
    let counts: Vec<usize> = plan
        .sizes
        .iter()
        .zip(&plan.times)
        .map(|(&size, &t)| {
            let p_plus = 0.5 * (1.0 + (2.0 * omega * t).cos());
            (0..size).filter(|_| rng.random::<f64>() < p_plus).count()
        })
        .collect();
    let loglik = |w: f64| {
        plan.sizes
            .iter()
            .zip(&plan.times)
            .zip(&counts)
            .map(|((&size, &t), &plus)| {
                let p = 0.5 * (1.0 + (2.0 * w * t).cos());
                let minus = size - plus;
                let mut l = 0.0;
                if plus > 0 {
                    l += plus as f64 * p.ln();
                }
                if minus > 0 {
                    l += minus as f64 * (1.0 - p).ln();
                }
                l
            })
            .sum::<f64>()
    };
    let estimate = posterior_mean_converged(loglik, prior, grid)?;
    Ok(((estimate.omega - omega).powi(2), estimate.degenerate))
}

/// BMSE of one cascaded plan with posterior-mean estimation.
pub fn cascaded_plan_bmse(
    plan: &CascadedPlan,
    prior: &Prior,
    n_rep: usize,
    seed: u64,
) -> Result<BmseResult> {
    check_domain(
        "n_rep",
        n_rep as f64,
        n_rep >= MIN_REPETITIONS,
        "at least 100 repetitions",
    )?;
    let grid = cascaded_grid(prior, plan.times[0]);
    let outcomes = (0..n_rep as u64)
        .into_par_iter()
        .map(|i| {
            let omega = prior.stratified_draw(i, n_rep as u64, seed);
            cascaded_repetition(plan, prior, omega, grid, seed, i)
        })
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadedOutcome {
    pub result: BmseResult,
    pub ensembles: usize,
    /// No ensemble count was usable; `result` is the prior variance.
    pub infeasible: bool,
}

/// Best cascaded BMSE over `M ∈ {M₀ − 1, M₀, M₀ + 1}`, where `M₀` is
/// [`minimal_unambiguous_ensembles`]. Partitions are balanced when `M` does
/// not divide `N`.
pub fn cascaded_bmse(
    n_qubits: usize,
    total_time: f64,
    prior: &Prior,
    n_rep: usize,
    seed: u64,
) -> Result<CascadedOutcome> {
    check_domain("N", n_qubits as f64, n_qubits >= 1, "N ≥ 1")?;
    check_domain("T", total_time, total_time > 0.0 && total_time.is_finite(), "T > 0")?;
    let m0 = minimal_unambiguous_ensembles(total_time, prior.width());
    let candidates: Vec<usize> = (m0.saturating_sub(1).max(1)..=m0 + 1)
        .filter(|&m| m <= n_qubits)
        .collect();
    if candidates.is_empty() {
        return Ok(CascadedOutcome {
            result: BmseResult {
                bmse: prior.variance(),
                stderr: 0.0,
                repetitions: 0,
                degenerate: 0,
            },
            ensembles: 0,
            infeasible: true,
        });
    }
    let mut best: Option<CascadedOutcome> = None;
    for m in candidates {
        let plan = CascadedPlan::balanced(n_qubits, m, total_time)?;
        let result = cascaded_plan_bmse(&plan, prior, n_rep, seed)?;
        if best.as_ref().is_none_or(|b| result.bmse < b.result.bmse) {
            best = Some(CascadedOutcome {
                result,
                ensembles: m,
                infeasible: false,
            });
        }
    }
    Ok(best.expect("non-empty candidates"))
}
