//! Collective-spin moments under periodic dispersive light probing.
//!
//! Each cycle rotates the spin about `z` by `2ωτ`, kicks it about `x` by the
//! random angle `Π = χt′·X` of the probe's vacuum quadrature, and undoes the
//! mean kick. Only first and second moments are tracked.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};

/// Averages of the back-action rotation that the moment equations need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackActionMoments {
    pub cos: f64,
    pub sin: f64,
    /// `⟨cos 2Π⟩` and `⟨sin 2Π⟩`.
    pub cos_double: f64,
    pub sin_double: f64,
}

impl BackActionMoments {
    /// `⟨e^{iΠ}⟩ = e^{i(χt′/2)²}`, the form behind the quoted variance closed
    /// form. The mean kick is then a pure rotation.
    pub fn rotating(chi_tp: f64) -> Self {
        let k = 0.25 * chi_tp * chi_tp;
        Self {
            cos: k.cos(),
            sin: k.sin(),
            cos_double: (4.0 * k).cos(),
            sin_double: (4.0 * k).sin(),
        }
    }

    /// Exact averages for a vacuum quadrature, `⟨X²⟩ = ½`: the mean kick
    /// vanishes and the transverse components dephase.
    pub fn gaussian_vacuum(chi_tp: f64) -> Self {
        let variance = 0.5 * chi_tp * chi_tp;
        Self {
            cos: (-0.5 * variance).exp(),
            sin: 0.0,
            cos_double: (-2.0 * variance).exp(),
            sin_double: 0.0,
        }
    }

    fn mean_angle(&self) -> f64 {
        self.sin.atan2(self.cos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackActionModel {
    #[default]
    Rotating,
    GaussianVacuum,
}

impl BackActionModel {
    pub fn moments(self, chi_tp: f64) -> BackActionMoments {
        match self {
            Self::Rotating => BackActionMoments::rotating(chi_tp),
            Self::GaussianVacuum => BackActionMoments::gaussian_vacuum(chi_tp),
        }
    }
}

/// `⟨J⟩`, `⟨{J_a, J_b}⟩/2`, and `∂⟨J⟩/∂ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveMoments {
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
    pub mean_derivative: [f64; 3],
}

impl CollectiveMoments {
    /// Coherent spin state of `n` spins along `+x`.
    pub fn coherent(n: f64) -> Self {
        Self {
            mean: [0.5 * n, 0.0, 0.0],
            second: [[0.25 * n * n, 0.0, 0.0], [0.0, 0.25 * n, 0.0], [0.0, 0.0, 0.25 * n]],
            mean_derivative: [0.0; 3],
        }
    }

    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        self.second[a][b] - self.mean[a] * self.mean[b]
    }

    fn mean_vec(&self) -> Vector3<f64> {
        Vector3::from(self.mean)
    }

    fn second_mat(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.second[i][j])
    }
}

fn rotation_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rotation_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Averages `M S Mᵀ` over the kick angle, `M` a rotation about `x`.
fn kick_second_moments(s: &Matrix3<f64>, ba: &BackActionMoments) -> Matrix3<f64> {
    let cc = 0.5 * (1.0 + ba.cos_double);
    let ss = 0.5 * (1.0 - ba.cos_double);
    let sc = 0.5 * ba.sin_double;
    let (syy, szz, syz) = (s[(1, 1)], s[(2, 2)], s[(1, 2)]);
    let (sxy, sxz) = (s[(0, 1)], s[(0, 2)]);
    let yy = cc * syy - 2.0 * sc * syz + ss * szz;
    let zz = ss * syy + 2.0 * sc * syz + cc * szz;
    let yz = sc * (syy - szz) + (cc - ss) * syz;
    let xy = ba.cos * sxy - ba.sin * sxz;
    let xz = ba.sin * sxy + ba.cos * sxz;
    Matrix3::new(s[(0, 0)], xy, xz, xy, yy, yz, xz, yz, zz)
}

/// Moments after `steps` probing cycles of period `tau`.
pub fn propagate_collective_moments(
    chi_tp: f64,
    omega: f64,
    tau: f64,
    steps: usize,
    n: f64,
    model: BackActionModel,
) -> Result<CollectiveMoments> {
    check_domain("chi_tp", chi_tp, chi_tp.is_finite() && chi_tp >= 0.0, "χt′ ≥ 0")?;
    check_domain("steps", steps as f64, steps >= 1, "at least one cycle")?;
    check_domain("tau", tau, tau.is_finite() && tau > 0.0, "τ > 0")?;
    check_domain("N", n, n.is_finite() && n > 0.0, "N > 0")?;
    let ba = model.moments(chi_tp);
    let free = rotation_z(2.0 * omega * tau);
    // ∂U/∂ω
    let free_rate = rotation_z(2.0 * omega * tau + std::f64::consts::FRAC_PI_2)
        .component_mul(&Matrix3::new(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0))
        * (2.0 * tau);
    let undo = rotation_x(-ba.mean_angle());
    let kick_mean = Matrix3::new(1.0, 0.0, 0.0, 0.0, ba.cos, -ba.sin, 0.0, ba.sin, ba.cos);
    let mean_step = undo * kick_mean;

    let start = CollectiveMoments::coherent(n);
    let mut mean = start.mean_vec();
    let mut derivative = Vector3::zeros();
    let mut second = start.second_mat();
    for _ in 0..steps {
        derivative = mean_step * (free * derivative + free_rate * mean);
        mean = mean_step * (free * mean);
        second = undo * kick_second_moments(&(free * second * free.transpose()), &ba) * undo.transpose();
        // the update is symmetric in exact arithmetic; keep it so
        second = 0.5 * (second + second.transpose());
    }
    Ok(CollectiveMoments {
        mean: mean.into(),
        second: std::array::from_fn(|i| std::array::from_fn(|j| second[(i, j)])),
        mean_derivative: derivative.into(),
    })
}

/// `Var(J_x)/(∂⟨J_x⟩/∂ω)²` at the end of `steps` cycles, in (rad/s)².
pub fn light_sensitivity(
    chi_tp: f64,
    omega: f64,
    tau: f64,
    steps: usize,
    n: f64,
    model: BackActionModel,
) -> Result<f64> {
    let total_time = steps as f64 * tau;
    if (2.0 * omega * total_time).sin().abs() < 1e-9 {
        return Err(Error::Domain {
            name: "omega",
            value: omega,
            expected: "sin(2ωT) ≠ 0; the readout slope vanishes",
        });
    }
    let moments = propagate_collective_moments(chi_tp, omega, tau, steps, n, model)?;
    let slope = moments.mean_derivative[0];
    Ok(moments.covariance(0, 0) / (slope * slope))
}

/// Large-`N`, many-cycle approximation of `Var(J_x)` after probing.
pub fn light_variance_approximation(chi_tp: f64, omega: f64, tau: f64, steps: usize, n: f64) -> f64 {
    let t = steps as f64 * tau;
    0.25 * n * (2.0 * omega * t).sin().powi(2)
        - chi_tp * chi_tp / 64.0 * n * steps as f64 * (4.0 * omega * t).sin() / (omega * tau).tan()
}
