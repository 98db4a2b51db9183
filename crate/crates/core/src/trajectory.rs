//! Sampling, replay and exact enumeration of measurement records.
//!
//! Every qubit is propagated as an unnormalized planar Bloch vector
//! `(n, x, y)`, where `n` is the trace. A weak outcome with sign `s` maps it
//! linearly to `½(n + sSx, x + sSn, Cy)` before the rotation, so `n` after a
//! record is exactly the record's probability and `∂ω n / n` is its score.
//! No normalization happens on the hot path apart from rare rescaling.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ProtocolParams, StepKernel};
use crate::rng::{substream, Domain};

/// Bits of outcome enumeration accepted before refusing.
pub const ENUMERATION_LIMIT: usize = 20;

/// Below this trace the running vector is renormalized and the scale logged.
const RESCALE_FLOOR: f64 = 1e-100;

/// A bit-packed outcome string; bit `i` is the outcome of step `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OutcomeString {
    len: usize,
    words: Vec<u64>,
}

impl OutcomeString {
    pub fn with_capacity(len: usize) -> Self {
        Self {
            len: 0,
            words: Vec::with_capacity(len.div_ceil(64)),
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::default();
        for bit in bits {
            out.push(bit);
        }
        out
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().expect("word pushed above") |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Little-endian words, 16 hex digits each.
    pub fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:016x}")).collect()
    }

    pub fn from_hex(len: usize, hex: &str) -> Result<Self> {
        let words_needed = len.div_ceil(64);
        if hex.len() != 16 * words_needed {
            return Err(Error::Decode(format!(
                "{} hex digits cannot hold exactly {len} bits",
                hex.len()
            )));
        }
        let words = (0..words_needed)
            .map(|i| {
                u64::from_str_radix(&hex[16 * i..16 * (i + 1)], 16)
                    .map_err(|e| Error::Decode(format!("bad hex word {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last() {
                if last >> (len % 64) != 0 {
                    return Err(Error::Decode("bits set beyond the string length".into()));
                }
            }
        }
        Ok(Self { len, words })
    }
}

/// The measurement record of `N` independent qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub seed: u64,
    /// Position of this record within its seeded family.
    pub index: u64,
    /// One weak outcome string per qubit.
    pub weak: Vec<OutcomeString>,
    /// Final projective outcome per qubit.
    pub strong: Option<Vec<bool>>,
}

impl Trajectory {
    pub fn n_qubits(&self) -> usize {
        self.weak.len()
    }

    pub fn weak_len(&self) -> usize {
        self.weak.first().map_or(0, OutcomeString::len)
    }

    pub fn check_shape(&self, params: &ProtocolParams) -> Result<()> {
        if self.weak.len() != params.n_qubits {
            return Err(Error::ShapeMismatch(format!(
                "{} qubits recorded, {} expected",
                self.weak.len(),
                params.n_qubits
            )));
        }
        let expected = params.weak_steps();
        if let Some((q, s)) = self.weak.iter().enumerate().find(|(_, s)| s.len() != expected) {
            return Err(Error::ShapeMismatch(format!(
                "qubit {q} has {} weak outcomes, {expected} expected",
                s.len()
            )));
        }
        match (&self.strong, params.has_strong()) {
            (Some(s), true) if s.len() == params.n_qubits => Ok(()),
            (None, false) => Ok(()),
            (Some(s), true) => Err(Error::ShapeMismatch(format!(
                "{} strong outcomes for {} qubits",
                s.len(),
                params.n_qubits
            ))),
            (Some(_), false) => Err(Error::ShapeMismatch(
                "strong outcomes present in a weak-only protocol".into(),
            )),
            (None, true) => Err(Error::ShapeMismatch("strong outcomes missing".into())),
        }
    }

    /// Fraction of qubits reporting outcome `0` at each weak step.
    pub fn zero_fractions(&self) -> Vec<f64> {
        let n = self.n_qubits();
        let mut ones = vec![0usize; self.weak_len()];
        for s in &self.weak {
            for (count, bit) in ones.iter_mut().zip(s.iter()) {
                *count += usize::from(bit);
            }
        }
        ones.into_iter()
            .map(|c| (n - c) as f64 / n as f64)
            .collect()
    }

    pub fn to_record(&self, params: &ProtocolParams) -> TrajectoryRecord {
        TrajectoryRecord {
            seed: self.seed,
            index: self.index,
            n_qubits: self.n_qubits(),
            weak_len: self.weak_len(),
            weak: self.weak.iter().map(OutcomeString::to_hex).collect(),
            strong: self
                .strong
                .as_ref()
                .map(|s| OutcomeString::from_bits(s.iter().copied()).to_hex()),
            params_hash: params_hash(params),
        }
    }

    pub fn to_json(&self, params: &ProtocolParams) -> String {
        serde_json::to_string(&self.to_record(params)).expect("record serializes")
    }

    /// Decodes a record and checks that it was produced under `params`.
    pub fn from_json(text: &str, params: &ProtocolParams) -> Result<Self> {
        let record: TrajectoryRecord =
            serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
        if record.params_hash != params_hash(params) {
            return Err(Error::Decode(
                "record was produced under different protocol parameters".into(),
            ));
        }
        let weak = record
            .weak
            .iter()
            .map(|h| OutcomeString::from_hex(record.weak_len, h))
            .collect::<Result<Vec<_>>>()?;
        if weak.len() != record.n_qubits {
            return Err(Error::Decode("qubit count disagrees with payload".into()));
        }
        let strong = record
            .strong
            .as_deref()
            .map(|h| OutcomeString::from_hex(record.n_qubits, h).map(|s| s.iter().collect()))
            .transpose()?;
        let traj = Trajectory {
            seed: record.seed,
            index: record.index,
            weak,
            strong,
        };
        traj.check_shape(params)?;
        Ok(traj)
    }
}

/// Compact replayable form of a [`Trajectory`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub index: u64,
    pub n_qubits: usize,
    pub weak_len: usize,
    pub weak: Vec<String>,
    pub strong: Option<String>,
    pub params_hash: String,
}

/// SHA-256 of the canonical JSON form of `params`, hex encoded.
pub fn params_hash(params: &ProtocolParams) -> String {
    let canonical = serde_json::to_vec(params).expect("params serialize");
    Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Log-likelihood of a record and its derivative in `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredLikelihood {
    pub log_likelihood: f64,
    /// `∂ω log p`, in seconds. `NaN` when the record is impossible.
    pub score: f64,
    /// Some step had probability exactly zero at the queried `ω`.
    pub impossible: bool,
}

impl ScoredLikelihood {
    const IMPOSSIBLE: Self = Self {
        log_likelihood: f64::NEG_INFINITY,
        score: f64::NAN,
        impossible: true,
    };

    fn accumulate(&mut self, other: Self) {
        self.log_likelihood += other.log_likelihood;
        self.score += other.score;
        self.impossible |= other.impossible;
    }
}

impl Default for ScoredLikelihood {
    fn default() -> Self {
        Self {
            log_likelihood: 0.0,
            score: 0.0,
            impossible: false,
        }
    }
}

/// Everything one qubit's replay or sampling needs at a fixed `ω`.
#[derive(Debug, Clone, Copy)]
struct QubitProtocol {
    kernel: StepKernel,
    weak_steps: usize,
    /// `1 − 2p_e` of the final projective readout, if any.
    strong_contrast: Option<f64>,
}

impl QubitProtocol {
    fn new(params: &ProtocolParams, omega: f64) -> Self {
        Self {
            kernel: StepKernel::for_params(params, omega),
            weak_steps: params.weak_steps(),
            strong_contrast: params
                .has_strong()
                .then_some(1.0 - 2.0 * params.p_e_strong),
        }
    }

    fn bits(&self) -> usize {
        self.weak_steps + usize::from(self.strong_contrast.is_some())
    }

    /// Runs one qubit through the protocol. `choose(step, p0)` returns the
    /// outcome bit of `step` given the probability `p0` of outcome `0`; the
    /// strong readout, if any, is step `weak_steps`.
    #[inline(always)]
    fn run<const SCORE: bool>(&self, mut choose: impl FnMut(usize, f64) -> bool) -> ScoredLikelihood {
        let k = &self.kernel;
        let (mut n, mut dn) = (1.0, 0.0);
        let (mut x, mut y) = k.rotate(1.0, 0.0);
        let (mut dx, mut dy) = if SCORE {
            (k.rot_rate * y, -k.rot_rate * x)
        } else {
            (0.0, 0.0)
        };
        let mut log_scale = 0.0;

        for step in 0..self.weak_steps {
            let p0 = 0.5 * (1.0 + k.signal * x / n);
            let ss = if choose(step, p0) { -k.signal } else { k.signal };
            let n1 = 0.5 * (n + ss * x);
            if n1 <= 0.0 {
                return ScoredLikelihood::IMPOSSIBLE;
            }
            let (x1, y1) = (0.5 * (x + ss * n), 0.5 * k.contraction * y);
            (x, y) = k.rotate(x1, y1);
            n = n1;
            if SCORE {
                let dn1 = 0.5 * (dn + ss * dx);
                let (dx1, dy1) = (0.5 * (dx + ss * dn), 0.5 * k.contraction * dy);
                let (rx, ry) = k.rotate(dx1, dy1);
                (dx, dy) = (rx + k.rot_rate * y, ry - k.rot_rate * x);
                dn = dn1;
            }
            if n < RESCALE_FLOOR {
                log_scale += n.ln();
                let inv = n.recip();
                (x, y, dn, dx, dy) = (x * inv, y * inv, dn * inv, dx * inv, dy * inv);
                n = 1.0;
            }
        }

        if let Some(contrast) = self.strong_contrast {
            let p0 = 0.5 * (1.0 + contrast * x / n);
            let ss = if choose(self.weak_steps, p0) { -contrast } else { contrast };
            let n1 = 0.5 * (n + ss * x);
            if n1 <= 0.0 {
                return ScoredLikelihood::IMPOSSIBLE;
            }
            if SCORE {
                dn = 0.5 * (dn + ss * dx);
            }
            n = n1;
        }

        ScoredLikelihood {
            log_likelihood: log_scale + n.ln(),
            score: if SCORE { dn / n } else { 0.0 },
            impossible: false,
        }
    }

    #[inline]
    fn sample<const SCORE: bool, R: Rng>(
        &self,
        rng: &mut R,
        mut record: impl FnMut(usize, bool),
    ) -> ScoredLikelihood {
        self.run::<SCORE>(|step, p0| {
            let bit = rng.random::<f64>() >= p0;
            record(step, bit);
            bit
        })
    }
}

fn qubit_rng(seed: u64, index: u64, qubit: usize) -> rand_chacha::ChaCha8Rng {
    substream(seed, Domain::Trajectory, index, qubit as u64)
}

/// Samples the record of all `N` qubits; identical to
/// [`simulate_trajectory_indexed`] with index `0`.
pub fn simulate_trajectory(params: &ProtocolParams, omega: f64, seed: u64) -> Trajectory {
    simulate_trajectory_indexed(params, omega, seed, 0)
}

/// Samples record number `index` of the family rooted at `seed`.
pub fn simulate_trajectory_indexed(
    params: &ProtocolParams,
    omega: f64,
    seed: u64,
    index: u64,
) -> Trajectory {
    let protocol = QubitProtocol::new(params, omega);
    let mut weak = Vec::with_capacity(params.n_qubits);
    let mut strong = params
        .has_strong()
        .then(|| Vec::with_capacity(params.n_qubits));
    for qubit in 0..params.n_qubits {
        let mut rng = qubit_rng(seed, index, qubit);
        let mut bits = OutcomeString::with_capacity(protocol.weak_steps);
        let mut last = false;
        protocol.sample::<false, _>(&mut rng, |step, bit| {
            if step < protocol.weak_steps {
                bits.push(bit);
            } else {
                last = bit;
            }
        });
        weak.push(bits);
        if let Some(s) = strong.as_mut() {
            s.push(last);
        }
    }
    Trajectory {
        seed,
        index,
        weak,
        strong,
    }
}

/// Samples one qubit of record `index` and returns the likelihood and score of
/// what was sampled, without storing the outcomes. Draws exactly the bits that
/// [`simulate_trajectory_indexed`] draws for that qubit.
pub fn sample_qubit_score(
    params: &ProtocolParams,
    omega: f64,
    seed: u64,
    index: u64,
    qubit: usize,
) -> ScoredLikelihood {
    let protocol = QubitProtocol::new(params, omega);
    let mut rng = qubit_rng(seed, index, qubit);
    protocol.sample::<true, _>(&mut rng, |_, _| {})
}

/// Replays `traj` at `omega` and returns its log-likelihood and score.
pub fn score_trajectory(
    traj: &Trajectory,
    omega: f64,
    params: &ProtocolParams,
) -> Result<ScoredLikelihood> {
    traj.check_shape(params)?;
    Ok(replay::<true>(traj, &QubitProtocol::new(params, omega)))
}

/// Log-likelihood only; cheaper than [`score_trajectory`].
pub fn log_likelihood(traj: &Trajectory, omega: f64, params: &ProtocolParams) -> Result<f64> {
    traj.check_shape(params)?;
    Ok(replay::<false>(traj, &QubitProtocol::new(params, omega)).log_likelihood)
}

/// Log-likelihood evaluator for a record whose shape was already checked.
pub(crate) fn log_likelihood_unchecked(
    traj: &Trajectory,
    omega: f64,
    params: &ProtocolParams,
) -> f64 {
    replay::<false>(traj, &QubitProtocol::new(params, omega)).log_likelihood
}

fn replay<const SCORE: bool>(traj: &Trajectory, protocol: &QubitProtocol) -> ScoredLikelihood {
    let mut total = ScoredLikelihood::default();
    for (qubit, bits) in traj.weak.iter().enumerate() {
        let last = traj.strong.as_ref().is_some_and(|s| s[qubit]);
        let words = &bits.words;
        let one = protocol.run::<SCORE>(|step, _| {
            if step < protocol.weak_steps {
                words[step / 64] >> (step % 64) & 1 == 1
            } else {
                last
            }
        });
        if one.impossible {
            return ScoredLikelihood::IMPOSSIBLE;
        }
        total.accumulate(one);
    }
    total
}

/// Exact distribution over every outcome record of the protocol.
///
/// Records are packed into a `u64` with bit `qubit·L + step`, where
/// `L = weak_steps + [strong readout]` and the strong readout is step
/// `weak_steps`. Refuses when `N·L` exceeds `max_bits` or
/// [`ENUMERATION_LIMIT`].
pub fn enumerate_outcome_distribution(
    params: &ProtocolParams,
    omega: f64,
    max_bits: usize,
) -> Result<Vec<(u64, f64)>> {
    let protocol = QubitProtocol::new(params, omega);
    let per_qubit = protocol.bits();
    let bits = params.n_qubits * per_qubit;
    let limit = max_bits.min(ENUMERATION_LIMIT);
    if bits > limit {
        return Err(Error::EnumerationTooLarge { bits, limit });
    }
    let single: Vec<f64> = (0..1u64 << per_qubit)
        .map(|pattern| {
            let r = protocol.run::<false>(|step, _| pattern >> step & 1 == 1);
            if r.impossible {
                0.0
            } else {
                r.log_likelihood.exp()
            }
        })
        .collect();
    let mask = (1u64 << per_qubit) - 1;
    Ok((0..1u64 << bits)
        .map(|packed| {
            let p = (0..params.n_qubits)
                .map(|q| single[(packed >> (q * per_qubit) & mask) as usize])
                .product();
            (packed, p)
        })
        .collect())
}

/// Unpacks a record produced by [`enumerate_outcome_distribution`].
pub fn unpack_enumerated(params: &ProtocolParams, packed: u64) -> Trajectory {
    let weak_steps = params.weak_steps();
    let per_qubit = weak_steps + usize::from(params.has_strong());
    let weak = (0..params.n_qubits)
        .map(|q| OutcomeString::from_bits((0..weak_steps).map(|s| packed >> (q * per_qubit + s) & 1 == 1)))
        .collect();
    let strong = params.has_strong().then(|| {
        (0..params.n_qubits)
            .map(|q| packed >> (q * per_qubit + weak_steps) & 1 == 1)
            .collect()
    });
    Trajectory {
        seed: 0,
        index: packed,
        weak,
        strong,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{planar_state_update, Mode, Outcome, PlanarState};
    use std::f64::consts::FRAC_PI_4;

    fn params(g: f64, tau: f64, t: f64, n: usize, mode: Mode) -> ProtocolParams {
        ProtocolParams::new(g, tau, t, n, std::f64::consts::FRAC_PI_2 / tau, mode).unwrap()
    }

    #[test]
    fn outcome_string_roundtrip() {
        let bits: Vec<bool> = (0..150).map(|i| (i * 7 + 3) % 5 < 2).collect();
        let s = OutcomeString::from_bits(bits.iter().copied());
        assert_eq!(s.len(), 150);
        assert_eq!(s.iter().collect::<Vec<_>>(), bits);
        let back = OutcomeString::from_hex(150, &s.to_hex()).unwrap();
        assert_eq!(back, s);
        assert!(OutcomeString::from_hex(151, &s.to_hex()).is_ok());
        assert!(OutcomeString::from_hex(200, &s.to_hex()).is_err());
        assert!(OutcomeString::from_hex(3, "00000000000000ff").is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = params(0.2, 0.1, 3.0, 5, Mode::WeakWithStrong);
        let a = simulate_trajectory(&p, 2.3, 99);
        let b = simulate_trajectory(&p, 2.3, 99);
        assert_eq!(a, b);
        assert_ne!(a, simulate_trajectory(&p, 2.3, 100));
        a.check_shape(&p).unwrap();
        assert_eq!(a.weak_len(), 29);
    }

    #[test]
    fn projective_fixed_point() {
        let p = params(FRAC_PI_4, 0.1, 2.0, 3, Mode::WeakOnly);
        let t = simulate_trajectory(&p, 0.0, 5);
        assert!(t.weak.iter().all(|s| s.count_ones() == 0));
        let scored = score_trajectory(&t, 0.0, &p).unwrap();
        assert_eq!(scored.log_likelihood, 0.0);
        assert!(!scored.impossible);
    }

    #[test]
    fn impossible_record_is_flagged() {
        let p = params(FRAC_PI_4, 0.1, 0.5, 1, Mode::WeakOnly);
        let t = Trajectory {
            seed: 0,
            index: 0,
            weak: vec![OutcomeString::from_bits([false, true, false, false, false])],
            strong: None,
        };
        let scored = score_trajectory(&t, 0.0, &p).unwrap();
        assert!(scored.impossible);
        assert_eq!(scored.log_likelihood, f64::NEG_INFINITY);
    }

    #[test]
    fn uninformative_limit() {
        let p = params(0.0, 0.1, 1.0, 3, Mode::WeakOnly);
        let t = simulate_trajectory(&p, 1.1, 1);
        let scored = score_trajectory(&t, 1.1, &p).unwrap();
        assert!((scored.log_likelihood - 30.0 * 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(scored.score, 0.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let p = params(0.1, 0.1, 1.0, 2, Mode::WeakOnly);
        let t = simulate_trajectory(&p, 1.0, 1);
        assert!(score_trajectory(&t, 1.0, &p.with_mode(Mode::WeakWithStrong)).is_err());
        assert!(score_trajectory(&t, 1.0, &p.with_qubits(3).unwrap()).is_err());
    }

    /// The linear unnormalized propagation reproduces the step-by-step
    /// normalized recursion.
    #[test]
    fn replay_matches_planar_updates() {
        let (g, tau, omega) = (0.3, 0.1, 4.2);
        let p = params(g, tau, 2.0, 1, Mode::WeakOnly);
        let t = simulate_trajectory(&p, omega, 17);
        let mut state = planar_state_update(PlanarState::PLUS, Outcome::Zero, 0.0, omega, tau, 0.0);
        let mut log_p = 0.0;
        for bit in t.weak[0].iter() {
            let (p0, p1) = crate::model::weak_meas_probabilities(state, g, 0.0).unwrap();
            log_p += if bit { p1 } else { p0 }.ln();
            state = planar_state_update(state, Outcome::from_bit(bit), g, omega, tau, 0.0);
        }
        let scored = score_trajectory(&t, omega, &p).unwrap();
        assert!((scored.log_likelihood - log_p).abs() < 1e-10, "{} vs {log_p}", scored.log_likelihood);
    }

    #[test]
    fn fused_sampler_matches_simulate_then_score() {
        for mode in [Mode::WeakOnly, Mode::WeakWithStrong] {
            let p = params(0.25, 0.1, 4.0, 3, mode).with_readout_error(0.05).unwrap();
            for index in 0..20 {
                let t = simulate_trajectory_indexed(&p, 3.3, 8, index);
                let whole = score_trajectory(&t, 3.3, &p).unwrap();
                let mut fused = ScoredLikelihood::default();
                for q in 0..3 {
                    fused.accumulate(sample_qubit_score(&p, 3.3, 8, index, q));
                }
                assert!((whole.log_likelihood - fused.log_likelihood).abs() < 1e-12);
                assert!((whole.score - fused.score).abs() < 1e-9 * whole.score.abs().max(1.0));
            }
        }
    }

    #[test]
    fn json_record_roundtrip() {
        let p = params(0.2, 0.1, 7.0, 4, Mode::WeakWithStrong);
        let t = simulate_trajectory_indexed(&p, 1.3, 3, 12);
        let text = t.to_json(&p);
        assert_eq!(Trajectory::from_json(&text, &p).unwrap(), t);
        assert!(Trajectory::from_json(&text, &p.with_g(0.3).unwrap()).is_err());
        assert!(Trajectory::from_json("{", &p).is_err());
    }

    #[test]
    fn enumeration_guard_and_fixed_point() {
        let p = params(0.1, 0.1, 2.1, 1, Mode::WeakOnly);
        assert!(matches!(
            enumerate_outcome_distribution(&p, 1.0, 64),
            Err(Error::EnumerationTooLarge { bits: 21, limit: 20 })
        ));
        let p = params(FRAC_PI_4, 0.1, 0.5, 1, Mode::WeakOnly);
        let dist = enumerate_outcome_distribution(&p, 0.0, 20).unwrap();
        assert_eq!(dist.len(), 32);
        assert_eq!(dist[0], (0, 1.0));
        assert!(dist[1..].iter().all(|&(_, q)| q == 0.0));
    }

    #[test]
    fn enumeration_at_zero_frequency_is_iid() {
        let p = params(0.1, 0.1, 0.5, 1, Mode::WeakOnly);
        let p0 = 0.5 * (1.0 + 0.2f64.sin());
        for (packed, prob) in enumerate_outcome_distribution(&p, 0.0, 20).unwrap() {
            let ones = packed.count_ones() as i32;
            let expected = p0.powi(5 - ones) * (1.0 - p0).powi(ones);
            assert!((prob - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn unpack_inverts_packing() {
        let p = params(0.1, 0.1, 0.3, 2, Mode::WeakWithStrong);
        let t = unpack_enumerated(&p, 0b101_110);
        t.check_shape(&p).unwrap();
        assert_eq!(t.weak[0].iter().collect::<Vec<_>>(), vec![false, true]);
        assert_eq!(t.strong, Some(vec![true, true]));
        assert_eq!(t.weak[1].iter().collect::<Vec<_>>(), vec![true, false]);
    }
}
