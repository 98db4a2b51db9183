//! Resolution of a configuration into concrete sweep points, and the size
//! guards applied before any compute starts.

use weakclock_core::baselines::OCI_MAX_QUBITS;
use weakclock_core::estimation::tuned_weak_with_strong_strength;
use weakclock_core::information::optimal_weak_only_strength;
use weakclock_core::trajectory::ENUMERATION_LIMIT;
use weakclock_core::{Error, ProtocolParams};

use crate::config::{Axis, ConfigError, Experiment, RunConfig, Strength};

/// One row's worth of inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub params: ProtocolParams,
    pub omega: Option<f64>,
    pub epsilon: f64,
    pub chi_tp: f64,
}

/// Peak memory any run may claim.
pub const MEMORY_LIMIT_BYTES: f64 = 8e9;

pub fn plan(cfg: &RunConfig) -> Result<Vec<Point>, ConfigError> {
    let values: Vec<Option<f64>> = match &cfg.sweep {
        None => vec![None],
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
    };
    values
        .into_iter()
        .map(|v| resolve(cfg, v))
        .collect()
}

fn resolve(cfg: &RunConfig, swept: Option<f64>) -> Result<Point, ConfigError> {
    let axis = cfg.sweep.as_ref().map(|s| s.axis);
    let key_for = |key: &'static str| -> &'static str {
        match axis {
            Some(a) if swept.is_some() && a.key() == key => "sweep.values",
            _ => key,
        }
    };
    let pick = |a: Axis, base: f64| match (axis, swept) {
        (Some(x), Some(v)) if x == a => v,
        _ => base,
    };
    let pick_opt = |a: Axis, base: Option<f64>| match (axis, swept) {
        (Some(x), Some(v)) if x == a => Some(v),
        _ => base,
    };

    let base = &cfg.params;
    let tau = pick(Axis::Tau, base.tau);
    let n = pick(Axis::Qubits, base.n_qubits);
    if !(n >= 1.0 && n.fract() == 0.0 && n <= u32::MAX as f64) {
        return Err(cfg.error(key_for("N"), format!("{n} is not a positive qubit count")));
    }
    let delta_omega = pick_opt(Axis::DeltaOmega, base.delta_omega)
        .unwrap_or_else(|| RunConfig::max_delta_omega(tau));
    if tau.is_finite() && tau > 0.0 && delta_omega * tau > RunConfig::max_delta_omega(1.0) * (1.0 + 1e-12) {
        let key = match axis {
            Some(Axis::Tau) => "sweep.values",
            _ => key_for("delta_omega"),
        };
        return Err(cfg.error(
            key,
            format!(
                "δω·τ = {} exceeds π/2; the prior would alias within one measurement period",
                delta_omega * tau
            ),
        ));
    }
    let params = ProtocolParams::new(
        pick(Axis::G, base.g),
        tau,
        pick(Axis::TotalTime, base.total_time),
        n as usize,
        delta_omega,
        base.mode,
    )
    .and_then(|p| p.with_readout_error(pick(Axis::ReadoutError, base.p_e)))
    .and_then(|p| p.with_strong_readout_error(pick(Axis::StrongReadoutError, base.p_e_strong)))
    .map_err(|e| match e {
        Error::Domain { name, .. } => cfg.error(key_for(name), e.to_string()),
        other => cfg.error("", other.to_string()),
    })?;
    let params = match cfg.strength {
        Strength::Fixed => Ok(params),
        Strength::Tuned => tuned_weak_with_strong_strength(&params).and_then(|g| params.with_g(g)),
        Strength::OptimalWeakOnly => optimal_weak_only_strength(params.tau, params.total_time)
            .and_then(|g| params.with_g(g.min(std::f64::consts::FRAC_PI_4))),
    }
    .map_err(|e| cfg.error("strength", e.to_string()))?;

    let omega = pick_opt(Axis::Omega, cfg.omega);
    if let Some(w) = omega {
        if !w.is_finite() {
            return Err(cfg.error(key_for("omega"), "ω must be finite"));
        }
    }
    let epsilon = pick(Axis::Epsilon, cfg.epsilon);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(cfg.error(key_for("epsilon"), format!("ε = {epsilon} is outside (0, 1)")));
    }
    let chi_tp = pick(Axis::ProbeStrength, cfg.chi_tp);
    if !(chi_tp.is_finite() && chi_tp >= 0.0) {
        return Err(cfg.error(key_for("chi_tp"), format!("χt′ = {chi_tp} must be ≥ 0")));
    }

    match cfg.experiment {
        Experiment::Light if omega.is_none() => {
            return Err(cfg.error("omega", "the light experiment needs a fixed omega"))
        }
        Experiment::CfiSweep if cfg.exact && omega.is_none() => {
            return Err(cfg.error("exact", "exact enumeration needs a fixed omega"))
        }
        _ => {}
    }
    Ok(Point {
        params,
        omega,
        epsilon,
        chi_tp,
    })
}

/// Refuses plans that would enumerate exponentially many records or claim
/// more than [`MEMORY_LIMIT_BYTES`]. Returns the reason.
pub fn guard(cfg: &RunConfig, points: &[Point]) -> Result<(), String> {
    let workers = rayon::current_num_threads() as f64;
    for (i, p) in points.iter().enumerate() {
        let params = &p.params;
        let bits = params.weak_steps() + usize::from(params.has_strong());
        // one record per worker is alive at a time
        let record_bytes = workers * params.n_qubits as f64 * bits as f64 / 8.0;
        let bytes = match cfg.experiment {
            Experiment::CfiSweep if cfg.exact => {
                if bits > ENUMERATION_LIMIT {
                    return Err(format!(
                        "row {i}: exact enumeration of {bits} outcome bits exceeds the limit of {ENUMERATION_LIMIT}"
                    ));
                }
                2f64.powi(bits as i32) * 16.0
            }
            Experiment::CfiSweep => cfg.trajectories as f64 * 8.0 + record_bytes,
            Experiment::BmseSweep | Experiment::Cascaded => cfg.reps as f64 * 16.0 + record_bytes,
            Experiment::Oci => {
                if params.n_qubits > OCI_MAX_QUBITS {
                    return Err(format!(
                        "row {i}: the OCI bound is computed densely and is limited to N ≤ {OCI_MAX_QUBITS}"
                    ));
                }
                let dim = (params.n_qubits / 2 + 1) as f64;
                8.0 * dim * dim * 4.0
            }
            Experiment::Threshold | Experiment::Light => 0.0,
        };
        if bytes > MEMORY_LIMIT_BYTES {
            return Err(format!(
                "row {i}: estimated memory {:.1} GB exceeds the {:.0} GB limit",
                bytes / 1e9,
                MEMORY_LIMIT_BYTES / 1e9
            ));
        }
    }
    Ok(())
}
