//! Single-qubit dynamics under free precession and a two-outcome weak `σx`
//! measurement.
//!
//! The sensing qubit starts in `|+⟩` and never leaves the `σx`–`σy` plane, so
//! its state is a planar Bloch vector `(r cos φ, r sin φ)`. One protocol step
//! is a weak measurement followed by a rotation of the in-plane angle by
//! `−2ωτ`. Outcome `x` selects the Kraus operator `K_{(−1)^x}`, i.e. outcome
//! `0` is `K₊`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};

/// Which readout closes the interrogation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `m` weak measurements.
    WeakOnly,
    /// `m − 1` weak measurements, then a projective `σx` measurement at `T`.
    WeakWithStrong,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::WeakOnly => "weak-only",
            Mode::WeakWithStrong => "weak-with-strong",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "weak-only" => Ok(Mode::WeakOnly),
            "weak-with-strong" => Ok(Mode::WeakWithStrong),
            other => Err(format!(
                "unknown mode {other:?} (expected \"weak-only\" or \"weak-with-strong\")"
            )),
        }
    }
}

/// A single measurement outcome. `Zero` selects `K₊`, `One` selects `K₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    #[inline]
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Outcome::One
        } else {
            Outcome::Zero
        }
    }

    #[inline]
    pub fn bit(self) -> bool {
        matches!(self, Outcome::One)
    }

    /// `(−1)^x`
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Zero => 1.0,
            Outcome::One => -1.0,
        }
    }
}

/// Every knob of one experiment.
///
/// `g = 0` is accepted as the non-informative limit of the weak measurement;
/// [`kraus_pair`] itself requires `g > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Measurement strength, `[0, π/4]`.
    pub g: f64,
    /// Measurement period in seconds.
    pub tau: f64,
    /// Total interrogation time `T` in seconds.
    pub total_time: f64,
    pub n_qubits: usize,
    /// Prior width `δω` in rad/s.
    pub delta_omega: f64,
    /// Bit-flip probability of the ancilla readout.
    pub p_e: f64,
    /// Bit-flip probability of the final projective readout.
    #[serde(default)]
    pub p_e_strong: f64,
    pub mode: Mode,
}

/// Relative slack used when flooring `T/τ`, so that e.g. `T = 10`, `τ = 0.1`
/// yields 100 steps despite `10.0 / 0.1 = 99.999…`.
const STEP_COUNT_SLACK: f64 = 1e-9;

impl ProtocolParams {
    pub fn new(
        g: f64,
        tau: f64,
        total_time: f64,
        n_qubits: usize,
        delta_omega: f64,
        mode: Mode,
    ) -> Result<Self> {
        let params = Self {
            g,
            tau,
            total_time,
            n_qubits,
            delta_omega,
            p_e: 0.0,
            p_e_strong: 0.0,
            mode,
        };
        params.validate()?;
        Ok(params)
    }

    /// Chooses the measurement period `τ = π/(2δω)` so that one period of
    /// free evolution cannot alias across the prior.
    pub fn from_prior(
        g: f64,
        delta_omega: f64,
        total_time: f64,
        n_qubits: usize,
        mode: Mode,
    ) -> Result<Self> {
        check_domain(
            "delta_omega",
            delta_omega,
            delta_omega.is_finite() && delta_omega > 0.0,
            "(0, ∞)",
        )?;
        Self::new(
            g,
            FRAC_PI_2 / delta_omega,
            total_time,
            n_qubits,
            delta_omega,
            mode,
        )
    }

    pub fn with_readout_error(mut self, p_e: f64) -> Result<Self> {
        self.p_e = p_e;
        self.validate()?;
        Ok(self)
    }

    pub fn with_strong_readout_error(mut self, p_e_strong: f64) -> Result<Self> {
        self.p_e_strong = p_e_strong;
        self.validate()?;
        Ok(self)
    }

    pub fn with_g(mut self, g: f64) -> Result<Self> {
        self.g = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_total_time(mut self, total_time: f64) -> Result<Self> {
        self.total_time = total_time;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_qubits(mut self, n_qubits: usize) -> Result<Self> {
        self.n_qubits = n_qubits;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_domain(
            "g",
            self.g,
            (0.0..=FRAC_PI_4).contains(&self.g),
            "[0, π/4]",
        )?;
        check_domain(
            "tau",
            self.tau,
            self.tau.is_finite() && self.tau > 0.0,
            "(0, ∞)",
        )?;
        check_domain(
            "T",
            self.total_time,
            self.total_time.is_finite() && self.total_time >= self.tau * (1.0 - STEP_COUNT_SLACK),
            "[τ, ∞)",
        )?;
        check_domain(
            "N",
            self.n_qubits as f64,
            self.n_qubits >= 1,
            "positive integer",
        )?;
        check_domain(
            "delta_omega",
            self.delta_omega,
            self.delta_omega.is_finite() && self.delta_omega > 0.0,
            "(0, ∞)",
        )?;
        check_domain(
            "p_e",
            self.p_e,
            (0.0..=0.5).contains(&self.p_e),
            "[0, 1/2]",
        )?;
        check_domain(
            "p_e_strong",
            self.p_e_strong,
            (0.0..=0.5).contains(&self.p_e_strong),
            "[0, 1/2]",
        )?;
        Ok(())
    }

    /// `m = ⌊T/τ⌋`, the number of measurement slots.
    pub fn steps(&self) -> usize {
        ((self.total_time / self.tau) * (1.0 + STEP_COUNT_SLACK)).floor() as usize
    }

    /// Number of weak measurements per qubit.
    pub fn weak_steps(&self) -> usize {
        match self.mode {
            Mode::WeakOnly => self.steps(),
            Mode::WeakWithStrong => self.steps() - 1,
        }
    }

    pub fn has_strong(&self) -> bool {
        self.mode == Mode::WeakWithStrong
    }

    /// Back-action parameter `η = g²T/τ`.
    pub fn eta(&self) -> f64 {
        self.g * self.g * self.total_time / self.tau
    }

    /// Signal amplitude of one weak readout, `(1 − 2p_e)·sin 2g`.
    pub fn effective_signal(&self) -> f64 {
        (1.0 - 2.0 * self.p_e) * (2.0 * self.g).sin()
    }

    /// Whether `δω·τ ≤ π/2`, i.e. no aliasing within one measurement period.
    pub fn is_alias_free(&self) -> bool {
        self.delta_omega * self.tau <= FRAC_PI_2 * (1.0 + 1e-12)
    }
}

/// Qubit state confined to the equatorial plane of the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarState {
    pub r: f64,
    /// In-plane angle, wrapped to `(−π, π]`.
    pub phi: f64,
}

impl PlanarState {
    /// `|+⟩`
    pub const PLUS: PlanarState = PlanarState { r: 1.0, phi: 0.0 };

    pub fn new(r: f64, phi: f64) -> Result<Self> {
        check_domain("r", r, (0.0..=1.0).contains(&r), "[0, 1]")?;
        check_domain("phi", phi, phi.is_finite(), "finite")?;
        Ok(Self {
            r,
            phi: wrap_angle(phi),
        })
    }

    #[inline]
    pub fn from_xy(x: f64, y: f64) -> Self {
        Self {
            r: x.hypot(y),
            phi: wrap_angle(y.atan2(x)),
        }
    }

    #[inline]
    pub fn to_xy(self) -> (f64, f64) {
        let (s, c) = self.phi.sin_cos();
        (self.r * c, self.r * s)
    }

    /// `⟨σx⟩`
    #[inline]
    pub fn rx(self) -> f64 {
        self.r * self.phi.cos()
    }
}

/// Wraps an angle to `(−π, π]`.
#[inline]
pub fn wrap_angle(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let wrapped = phi - 2.0 * PI * ((phi + PI) / (2.0 * PI)).floor();
    // `wrapped` lies in [−π, π); map the left endpoint onto π.
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// The two Kraus operators of the weak `σx` measurement. Both are real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub plus: [[f64; 2]; 2],
    pub minus: [[f64; 2]; 2],
}

impl KrausPair {
    pub fn operator(&self, outcome: Outcome) -> [[f64; 2]; 2] {
        match outcome {
            Outcome::Zero => self.plus,
            Outcome::One => self.minus,
        }
    }

    /// `K₊†K₊ + K₋†K₋`
    pub fn completeness(&self) -> [[f64; 2]; 2] {
        let mut sum = [[0.0; 2]; 2];
        for k in [self.plus, self.minus] {
            for (i, row) in sum.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry += k[0][i] * k[0][j] + k[1][i] * k[1][j];
                }
            }
        }
        sum
    }
}

/// `K± = (cos g·I ± sin g·σx)/√2`.
pub fn kraus_pair(g: f64) -> Result<KrausPair> {
    check_domain("g", g, g > 0.0 && g <= FRAC_PI_4, "(0, π/4]")?;
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    let (s, c) = g.sin_cos();
    let (c, s) = (c * norm, s * norm);
    Ok(KrausPair {
        plus: [[c, s], [s, c]],
        minus: [[c, -s], [-s, c]],
    })
}

/// Outcome probabilities `(p₀, p₁)` of a weak measurement on `state`, with
/// `p_x = ½[1 + (−1)^x (1−2p_e) sin(2g) r cos φ]`.
pub fn weak_meas_probabilities(state: PlanarState, g: f64, p_e: f64) -> Result<(f64, f64)> {
    check_domain("g", g, (0.0..=FRAC_PI_4).contains(&g), "[0, π/4]")?;
    check_domain("p_e", p_e, (0.0..=0.5).contains(&p_e), "[0, 1/2]")?;
    let half_bias = 0.5 * (1.0 - 2.0 * p_e) * (2.0 * g).sin() * state.rx();
    Ok((0.5 + half_bias, 0.5 - half_bias))
}

/// Precomputed constants of one protocol step, applied in Cartesian form.
///
/// A step takes the planar vector `(x, y)` through the (noisy) measurement
/// back-action for outcome sign `s`,
/// `(x, y) ↦ (x + s·S, C·y) / (1 + s·S·x)` with `S = (1−2p_e) sin 2g` and
/// `C = cos 2g`, then rotates it by `−2ωτ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepKernel {
    /// `(1 − 2p_e)·sin 2g`
    pub signal: f64,
    /// `cos 2g`
    pub contraction: f64,
    pub cos_rot: f64,
    pub sin_rot: f64,
    /// `d(2ωτ)/dω`
    pub rot_rate: f64,
}

impl StepKernel {
    pub fn new(g: f64, omega: f64, tau: f64, p_e: f64) -> Self {
        let (sin_rot, cos_rot) = (2.0 * omega * tau).sin_cos();
        Self {
            signal: (1.0 - 2.0 * p_e) * (2.0 * g).sin(),
            contraction: (2.0 * g).cos(),
            cos_rot,
            sin_rot,
            rot_rate: 2.0 * tau,
        }
    }

    pub fn for_params(params: &ProtocolParams, omega: f64) -> Self {
        Self::new(params.g, omega, params.tau, params.p_e)
    }

    /// Probability of outcome `0` from the state's `x` component.
    #[inline]
    pub fn p_zero(&self, x: f64) -> f64 {
        0.5 * (1.0 + self.signal * x)
    }

    /// Free evolution by `−2ωτ`.
    #[inline]
    pub fn rotate(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.cos_rot * x + self.sin_rot * y,
            -self.sin_rot * x + self.cos_rot * y,
        )
    }

    /// Measurement back-action for outcome sign `sign`, then rotation.
    #[inline]
    pub fn apply(&self, x: f64, y: f64, sign: f64) -> (f64, f64) {
        let ss = sign * self.signal;
        let den = 1.0 + ss * x;
        self.rotate((x + ss) / den, self.contraction * y / den)
    }
}

/// Back-action of outcome `outcome` followed by rotation by `−2ωτ`.
///
/// At `p_e = 0` a pure state stays pure; for `p_e > 0` the radius may shrink.
pub fn planar_state_update(
    state: PlanarState,
    outcome: Outcome,
    g: f64,
    omega: f64,
    tau: f64,
    p_e: f64,
) -> PlanarState {
    let kernel = StepKernel::new(g, omega, tau, p_e);
    let (x, y) = state.to_xy();
    let (x, y) = kernel.apply(x, y, outcome.sign());
    PlanarState::from_xy(x, y)
}

/// Dephasing rate of the measurement-averaged channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DephasingRate {
    Finite(f64),
    /// `g = π/4`: the measurement is projective and coherence is destroyed in
    /// a single step.
    Saturated,
}

impl DephasingRate {
    pub fn value(self) -> f64 {
        match self {
            DephasingRate::Finite(rate) => rate,
            DephasingRate::Saturated => f64::INFINITY,
        }
    }
}

/// `γ = −ln(cos 2g) / 2τ`, which approaches `g²/τ` for small `g`.
pub fn dephasing_rate(g: f64, tau: f64) -> Result<DephasingRate> {
    check_domain("g", g, g > 0.0 && g <= FRAC_PI_4, "(0, π/4]")?;
    check_domain("tau", tau, tau.is_finite() && tau > 0.0, "(0, ∞)")?;
    let c = (2.0 * g).cos();
    if c <= 0.0 || g == FRAC_PI_4 {
        return Ok(DephasingRate::Saturated);
    }
    Ok(DephasingRate::Finite(-c.ln() / (2.0 * tau)))
}

/// Closed-form parameters of the measurement-averaged dynamics:
/// `r_x(kτ) = cos(2g)^{k/2}·A·cos(αk + φ₀)` is `⟨σx⟩` just before the `k`-th
/// measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedDynamics {
    pub alpha: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub gamma: f64,
    contraction: f64,
    signal: f64,
}

impl AveragedDynamics {
    /// Mean `⟨σx⟩` before the `k`-th measurement (`k ≥ 1`).
    pub fn rx(&self, k: usize) -> f64 {
        self.contraction.powf(0.5 * k as f64)
            * self.amplitude
            * (self.alpha * k as f64 + self.phase).cos()
    }

    /// Unconditional probability of outcome `0` at the `k`-th measurement.
    pub fn p_zero(&self, k: usize) -> f64 {
        0.5 * (1.0 + self.signal * self.rx(k))
    }
}

pub fn averaged_dynamics(g: f64, omega: f64, tau: f64) -> Result<AveragedDynamics> {
    check_domain("g", g, g > 0.0 && g < FRAC_PI_4, "(0, π/4)")?;
    check_domain("tau", tau, tau.is_finite() && tau > 0.0, "(0, ∞)")?;
    let theta = 2.0 * omega * tau;
    let (sin_t, cos_t) = theta.sin_cos();
    if sin_t.abs() < 1e-12 {
        return Err(Error::DegenerateFrequency {
            omega_tau: omega * tau,
        });
    }
    let c2 = (2.0 * g).cos();
    let cos_g = g.cos();
    let sin_g = g.sin();
    let root = c2.sqrt();
    let cos_alpha = cos_g * cos_g * cos_t / root;
    if cos_alpha.abs() >= 1.0 {
        return Err(Error::OutOfValidity(format!(
            "averaged map is overdamped at g = {g}, ωτ = {}: no oscillating solution",
            omega * tau
        )));
    }

    let alpha = cos_alpha.acos();
    let amplitude = (c2 * sin_t * sin_t / (c2 - cos_g.powi(4) * cos_t * cos_t)).sqrt();
    let phase = (-sin_g * sin_g * cos_t / (root * sin_t.abs()))
        .clamp(-1.0, 1.0)
        .asin();
    let gamma = -c2.ln() / (2.0 * tau);

    Ok(AveragedDynamics {
        alpha,
        amplitude,
        phase,
        gamma,
        contraction: c2,
        signal: (2.0 * g).sin(),
    })
}
