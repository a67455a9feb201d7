//! The sequential two-bit random access code with a tunable-strength first
//! decoder.
//!
//! A sender encodes bits `(x0, x1)` into one of four pure states sitting at
//! the corners of a square in the XZ plane of the Bloch sphere. The first
//! receiver weakly measures `sigma_X` (basis choice 0, targeting `x0`) or
//! `sigma_Z` (basis choice 1, targeting `x1`) with strength `eta`; the second
//! receiver measures the forwarded state projectively in one of the same two
//! bases. Bit 0 is associated with outcome +1, bit 1 with -1.
//!
//! Closed-form decoding witnesses:
//!
//! ```text
//! W_AB(eta)  = 1/2 + (sqrt(2)/4) eta
//! W_AC(eta)  = 1/2 + (sqrt(2)/4) (1 + sqrt(1 - eta^2)) / 2
//! W_ABC(eta) = (1/4) (1 + (eta + sqrt(1 - eta^2)) / sqrt(2))
//! ```
//!
//! All of them are cross-checked in the tests against brute-force enumeration
//! of the density-matrix pipeline in [`JointDistribution`].

use crate::qmath::{pauli, Axis, BlochVector, DensityMatrix, Mat2};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use thiserror::Error;

/// Best average decoding probability achievable with classical strategies.
pub const CLASSICAL_LIMIT: f64 = 0.75;

/// Largest achievable single-decoder witness, `1/2 + sqrt(2)/4`.
pub const WITNESS_MAX: f64 = 0.5 + SQRT_2 / 4.0;

/// Above this second-decoder witness (`1/2 + sqrt(2)/5`), the first decoder
/// is guaranteed to know less than the second.
pub const SECURITY_CROSSING: f64 = 0.5 + SQRT_2 / 5.0;

/// Probability below which conditioning on an outcome is treated as a null
/// event and no post-measurement state is produced.
pub const NULL_EVENT_PROB: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("measurement strength {value} outside [0, 1]")]
    StrengthOutOfRange { value: f64 },
    #[error("{name} = {value} outside [{lo}, {hi}]")]
    WitnessOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{context}: radicand {radicand:.3e} is negative beyond tolerance")]
    NegativeRadicand {
        context: &'static str,
        radicand: f64,
    },
    #[error("strength chain must contain at least one receiver")]
    EmptyStrengthChain,
}

/// `+1` for bit 0, `-1` for bit 1.
pub(crate) fn sign(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

/// The two bits the sender encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InputPair {
    pub x0: bool,
    pub x1: bool,
}

impl InputPair {
    pub fn new(x0: bool, x1: bool) -> Self {
        Self { x0, x1 }
    }

    /// All four inputs, ordered by `(x0, x1)` as a two-bit integer.
    pub fn all() -> [InputPair; 4] {
        [
            Self::new(false, false),
            Self::new(false, true),
            Self::new(true, false),
            Self::new(true, true),
        ]
    }

    /// The bit a decoder using `basis` is trying to recover.
    pub fn bit(&self, basis: BasisChoice) -> bool {
        match basis {
            BasisChoice::X => self.x0,
            BasisChoice::Z => self.x1,
        }
    }

    /// Index in `[0, 4)` with `x0` as the high bit.
    pub fn index(&self) -> usize {
        (self.x0 as usize) << 1 | self.x1 as usize
    }
}

/// Which observable a decoder measures: `X` targets `x0`, `Z` targets `x1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisChoice {
    X,
    Z,
}

impl BasisChoice {
    pub const ALL: [BasisChoice; 2] = [BasisChoice::X, BasisChoice::Z];

    pub fn axis(&self) -> Axis {
        match self {
            BasisChoice::X => Axis::X,
            BasisChoice::Z => Axis::Z,
        }
    }

    /// Wire code: 0 for `X`, 1 for `Z`.
    pub fn code(&self) -> u8 {
        match self {
            BasisChoice::X => 0,
            BasisChoice::Z => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BasisChoice::X),
            1 => Some(BasisChoice::Z),
            _ => None,
        }
    }

    /// The other basis.
    pub fn other(&self) -> Self {
        match self {
            BasisChoice::X => BasisChoice::Z,
            BasisChoice::Z => BasisChoice::X,
        }
    }
}

/// Projector onto the `(-1)^outcome` eigenspace of the basis observable.
pub fn projector(basis: BasisChoice, outcome: bool) -> Mat2 {
    (Mat2::identity() + pauli(basis.axis()).scale(sign(outcome))).scale(0.5)
}

/// A two-outcome weak measurement of strength `eta` in a fixed basis.
///
/// POVM elements are `M_b = (I + (-1)^b eta sigma) / 2` and the state update
/// uses the Kraus operators
/// `K_b = [(cos(mu) + sin(mu)) I + (-1)^b (cos(mu) - sin(mu)) sigma] / 2`
/// with `mu = arccos(eta) / 2`, so that `K_b^dag K_b = M_b`. Strength 1 is a
/// projective measurement, strength 0 leaves the state untouched on average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakMeasurement {
    pub basis: BasisChoice,
    pub strength: f64,
    /// Kraus mixing angle `arccos(strength) / 2`.
    pub kraus_angle: f64,
}

impl WeakMeasurement {
    pub fn new(basis: BasisChoice, strength: f64) -> Result<Self, ProtocolError> {
        if !(0.0..=1.0).contains(&strength) || strength.is_nan() {
            return Err(ProtocolError::StrengthOutOfRange { value: strength });
        }
        // Clamp absorbs floating-point drift at the endpoints.
        let kraus_angle = strength.clamp(-1.0, 1.0).acos() / 2.0;
        Ok(Self {
            basis,
            strength,
            kraus_angle,
        })
    }

    /// POVM element for the given outcome bit.
    pub fn povm_element(&self, outcome: bool) -> Mat2 {
        (Mat2::identity() + pauli(self.basis.axis()).scale(sign(outcome) * self.strength))
            .scale(0.5)
    }

    /// Kraus operator for the given outcome bit.
    pub fn kraus(&self, outcome: bool) -> Mat2 {
        let (s, c) = self.kraus_angle.sin_cos();
        (Mat2::identity().scale(c + s)
            + pauli(self.basis.axis()).scale(sign(outcome) * (c - s)))
        .scale(0.5)
    }
}

/// One branch of a measurement: outcome bit, its probability, and the
/// conditional post-measurement state (absent when the branch probability is
/// numerically zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub bit: bool,
    pub probability: f64,
    pub post_state: Option<DensityMatrix>,
}

/// Scalar decoding witnesses for one strength setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSet {
    pub w_ab: f64,
    pub w_ac: f64,
    pub w_abc: f64,
}

impl WitnessSet {
    /// Closed-form witnesses at the given strength.
    pub fn at_strength(strength: f64) -> Self {
        Self {
            w_ab: witness_ab(strength),
            w_ac: witness_ac(strength),
            w_abc: witness_abc(strength),
        }
    }
}

/// Encoding state for input `x`: `(I + (-1)^x0 sigma_X / sqrt(2) +
/// (-1)^x1 sigma_Z / sqrt(2)) / 2`, a pure state.
pub fn prepare_state(x: InputPair) -> DensityMatrix {
    let r = BlochVector::new(sign(x.x0) * FRAC_1_SQRT_2, 0.0, sign(x.x1) * FRAC_1_SQRT_2);
    DensityMatrix::from_bloch(r).expect("encoding Bloch vector is unit length")
}

/// Both branches of a weak measurement on `rho`, outcome 0 first.
///
/// Branch probabilities are `tr(M_b rho)` and sum to one; each branch carries
/// the renormalized post state `K_b rho K_b^dag / p_b` unless its probability
/// is below [`NULL_EVENT_PROB`].
pub fn weak_measure(
    rho: &DensityMatrix,
    m: &WeakMeasurement,
) -> (MeasurementOutcome, MeasurementOutcome) {
    let branch = |bit: bool| {
        let probability = rho.expectation(&m.povm_element(bit)).re.max(0.0);
        let post_state = if probability < NULL_EVENT_PROB {
            None
        } else {
            let k = m.kraus(bit);
            let unnormalized = k * *rho.matrix() * k.adjoint();
            Some(DensityMatrix::from_matrix_unchecked(
                unnormalized.scale(1.0 / probability),
            ))
        };
        MeasurementOutcome {
            bit,
            probability,
            post_state,
        }
    };
    (branch(false), branch(true))
}

/// Factor by which an averaged weak measurement of strength `eta` shortens
/// the Bloch vector of the encoding states: `(1 + sqrt(1 - eta^2)) / 2`.
pub fn shrink_factor(strength: f64) -> f64 {
    (1.0 + (1.0 - strength * strength).max(0.0).sqrt()) / 2.0
}

/// Post-measurement state averaged over the first decoder's basis choice and
/// outcome: `(1/2) sum_{y,b} K_{b|y} rho K_{b|y}^dag`.
pub fn average_post_state(rho: &DensityMatrix, strength: f64) -> DensityMatrix {
    assert!(
        (0.0..=1.0).contains(&strength),
        "strength {strength} outside [0, 1]"
    );
    let mut sum = Mat2::zero();
    for basis in BasisChoice::ALL {
        let m = WeakMeasurement::new(basis, strength).expect("strength checked above");
        for bit in [false, true] {
            let k = m.kraus(bit);
            sum = sum + k * *rho.matrix() * k.adjoint();
        }
    }
    DensityMatrix::from_matrix_unchecked(sum.scale(0.5))
}

/// Full outcome table `p(b, c | x, y, z)` for one strength setting, computed
/// from the density-matrix pipeline: encode, apply the first decoder's Kraus
/// update, project for the second decoder.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    /// Strength this table was built for.
    pub strength: f64,
    // Indexed [x][y][z][b][c] with x = (x0 << 1) | x1 and bits as 0/1.
    p: [[[[[f64; 2]; 2]; 2]; 2]; 4],
}

impl JointDistribution {
    /// Enumerates all 64 outcome probabilities at the given strength.
    pub fn new(strength: f64) -> Result<Self, ProtocolError> {
        let mut p = [[[[[0.0; 2]; 2]; 2]; 2]; 4];
        for x in InputPair::all() {
            let rho = prepare_state(x);
            for y in BasisChoice::ALL {
                let m = WeakMeasurement::new(y, strength)?;
                for b in [false, true] {
                    let k = m.kraus(b);
                    // Unnormalized branch state; its trace is p(b | x, y).
                    let branch = k * *rho.matrix() * k.adjoint();
                    for z in BasisChoice::ALL {
                        for c_bit in [false, true] {
                            let prob = (projector(z, c_bit) * branch).trace().re.max(0.0);
                            p[x.index()][y.code() as usize][z.code() as usize][b as usize]
                                [c_bit as usize] = prob;
                        }
                    }
                }
            }
        }
        Ok(Self { strength, p })
    }

    pub fn prob(&self, x: InputPair, y: BasisChoice, z: BasisChoice, b: bool, c: bool) -> f64 {
        self.p[x.index()][y.code() as usize][z.code() as usize][b as usize][c as usize]
    }

    /// Sum of the four outcome probabilities for one `(x, y, z)` setting;
    /// equals 1 up to rounding.
    pub fn slice_sum(&self, x: InputPair, y: BasisChoice, z: BasisChoice) -> f64 {
        let mut total = 0.0;
        for b in [false, true] {
            for c in [false, true] {
                total += self.prob(x, y, z, b, c);
            }
        }
        total
    }

    /// First-decoder witness by brute-force enumeration:
    /// `(1/8) sum_{x,y} p(b = x_y | x, y)`.
    pub fn witness_ab(&self) -> f64 {
        let mut total = 0.0;
        for x in InputPair::all() {
            for y in BasisChoice::ALL {
                let target = x.bit(y);
                // Marginal over the second decoder, averaged over z.
                for z in BasisChoice::ALL {
                    for c in [false, true] {
                        total += 0.5 * self.prob(x, y, z, target, c);
                    }
                }
            }
        }
        total / 8.0
    }

    /// Second-decoder witness by brute-force enumeration:
    /// `(1/8) sum_{x,z} p(c = x_z | x, z)` with the first decoder ignored.
    pub fn witness_ac(&self) -> f64 {
        let mut total = 0.0;
        for x in InputPair::all() {
            for z in BasisChoice::ALL {
                let target = x.bit(z);
                for y in BasisChoice::ALL {
                    for b in [false, true] {
                        total += 0.5 * self.prob(x, y, z, b, target);
                    }
                }
            }
        }
        total / 8.0
    }

    /// Joint-success witness by brute-force enumeration:
    /// `(1/8) sum_{x,y} p(b = x_y, c = x_z | x, y, z != y)`.
    pub fn witness_abc(&self) -> f64 {
        let mut total = 0.0;
        for x in InputPair::all() {
            for y in BasisChoice::ALL {
                let z = y.other();
                total += self.prob(x, y, z, x.bit(y), x.bit(z));
            }
        }
        total / 8.0
    }
}

/// Closed-form first-decoder witness `1/2 + (sqrt(2)/4) eta`.
pub fn witness_ab(strength: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&strength));
    0.5 + SQRT_2 / 4.0 * strength
}

/// Closed-form second-decoder witness
/// `1/2 + (sqrt(2)/4) (1 + sqrt(1 - eta^2)) / 2`.
pub fn witness_ac(strength: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&strength));
    0.5 + SQRT_2 / 4.0 * shrink_factor(strength)
}

/// Closed-form joint-success witness
/// `(1/4) (1 + (eta + sqrt(1 - eta^2)) / sqrt(2))`; at most 1/2, with
/// equality only at `eta = 1/sqrt(2)`.
pub fn witness_abc(strength: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&strength));
    let root = (1.0 - strength * strength).max(0.0).sqrt();
    0.25 * (1.0 + (strength + root) / SQRT_2)
}

/// Largest second-decoder witness compatible with an observed `w_ab`:
/// `(4 + sqrt(2) + sqrt(16 w - 16 w^2 - 2)) / 8`.
///
/// The optimal strategy saturates this bound for every strength. Fails when
/// `w_ab` lies outside the quantum-achievable range (radicand negative beyond
/// `1e-12`); radicands within tolerance of zero are clamped.
pub fn tradeoff_bound(w_ab: f64) -> Result<f64, ProtocolError> {
    let radicand = 16.0 * w_ab - 16.0 * w_ab * w_ab - 2.0;
    if radicand < -1e-12 {
        return Err(ProtocolError::NegativeRadicand {
            context: "tradeoff_bound",
            radicand,
        });
    }
    Ok((4.0 + SQRT_2 + radicand.max(0.0).sqrt()) / 8.0)
}

/// Largest first-decoder witness compatible with an observed `w_ac`:
/// `(1 + sqrt(4 (4 + sqrt(2)) w - 16 w^2 - 4 - 2 sqrt(2))) / 2`.
///
/// This inverts the saturated trade-off and yields a security statement:
/// whenever `w_ac` exceeds [`SECURITY_CROSSING`], the returned bound is below
/// `w_ac`, i.e. the intermediate decoder knows strictly less.
pub fn inverse_tradeoff_bound(w_ac: f64) -> Result<f64, ProtocolError> {
    let radicand = 4.0 * (4.0 + SQRT_2) * w_ac - 16.0 * w_ac * w_ac - 4.0 - 2.0 * SQRT_2;
    if radicand < -1e-12 {
        return Err(ProtocolError::NegativeRadicand {
            context: "inverse_tradeoff_bound",
            radicand,
        });
    }
    Ok(0.5 * (1.0 + radicand.max(0.0).sqrt()))
}

fn check_witness_range(name: &'static str, value: f64) -> Result<(), ProtocolError> {
    if !(0.5..=WITNESS_MAX + 1e-12).contains(&value) {
        return Err(ProtocolError::WitnessOutOfRange {
            name,
            value,
            lo: 0.5,
            hi: WITNESS_MAX,
        });
    }
    Ok(())
}

/// Lower self-test bound on the first decoder's strength from its witness:
/// `sqrt(2) (2 w_ab - 1)`, clamped to `[0, 1]`.
pub fn eta_lower_bound(w_ab: f64) -> Result<f64, ProtocolError> {
    check_witness_range("w_ab", w_ab)?;
    Ok((SQRT_2 * (2.0 * w_ab - 1.0)).clamp(0.0, 1.0))
}

/// Upper self-test bound on the first decoder's strength from the second
/// decoder's witness: `2 sqrt((2 + sqrt(2) - 4 w_ac)(2 w_ac - 1))`, clamped
/// to `[0, 1]`.
pub fn eta_upper_bound(w_ac: f64) -> Result<f64, ProtocolError> {
    check_witness_range("w_ac", w_ac)?;
    let radicand = (2.0 + SQRT_2 - 4.0 * w_ac) * (2.0 * w_ac - 1.0);
    if radicand < -1e-12 {
        return Err(ProtocolError::NegativeRadicand {
            context: "eta_upper_bound",
            radicand,
        });
    }
    Ok((2.0 * radicand.max(0.0).sqrt()).clamp(0.0, 1.0))
}

/// Self-test bounds on the first decoder's strength from observed witnesses:
/// `(eta_lower_bound(w_ab), eta_upper_bound(w_ac))`. Under the optimal
/// strategy the two bounds coincide with the actual strength.
pub fn eta_bounds(w_ab: f64, w_ac: f64) -> Result<(f64, f64), ProtocolError> {
    Ok((eta_lower_bound(w_ab)?, eta_upper_bound(w_ac)?))
}

/// Witnesses for a chain of receivers with the given strengths:
/// `W_k = 1/2 + (sqrt(2)/4) eta_k prod_{i<k} (1 + sqrt(1 - eta_i^2)) / 2`.
///
/// A single receiver reduces to [`witness_ab`]; `[eta, 1]` reproduces the
/// two-decoder pair.
pub fn witness_chain(strengths: &[f64]) -> Result<Vec<f64>, ProtocolError> {
    if strengths.is_empty() {
        return Err(ProtocolError::EmptyStrengthChain);
    }
    for &s in strengths {
        if !(0.0..=1.0).contains(&s) || s.is_nan() {
            return Err(ProtocolError::StrengthOutOfRange { value: s });
        }
    }
    let mut upstream = 1.0;
    let mut out = Vec::with_capacity(strengths.len());
    for &s in strengths {
        out.push(0.5 + SQRT_2 / 4.0 * s * upstream);
        upstream *= shrink_factor(s);
    }
    Ok(out)
}

/// Best third-receiver witness when the first two both beat the classical
/// limit; the result stays strictly below 3/4, so no third receiver can join
/// them.
///
/// Deterministic two-stage grid search over `(eta_1, eta_2)` with the third
/// strength fixed at 1: a coarse `1e-3` sweep followed by a `1e-6` refinement
/// around the coarse optimum. Closed form of the supremum:
/// `1/2 + (sqrt(2) + 1)(1 + sqrt(8 sqrt(2) - 11)) / 16 ~= 0.7354`.
pub fn three_receiver_no_go() -> f64 {
    fn third_witness(e1: f64, e2: f64) -> Option<f64> {
        if 0.5 + SQRT_2 / 4.0 * e1 <= CLASSICAL_LIMIT {
            return None;
        }
        let f1 = shrink_factor(e1);
        if 0.5 + SQRT_2 / 4.0 * e2 * f1 <= CLASSICAL_LIMIT {
            return None;
        }
        Some(0.5 + SQRT_2 / 4.0 * f1 * shrink_factor(e2))
    }

    fn sweep(lo1: f64, hi1: f64, lo2: f64, hi2: f64, step: f64) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        let n1 = ((hi1 - lo1) / step).round() as usize;
        let n2 = ((hi2 - lo2) / step).round() as usize;
        for i in 0..=n1 {
            let e1 = (lo1 + i as f64 * step).min(1.0);
            for j in 0..=n2 {
                let e2 = (lo2 + j as f64 * step).min(1.0);
                if let Some(w) = third_witness(e1, e2) {
                    if w > best.0 {
                        best = (w, e1, e2);
                    }
                }
            }
        }
        best
    }

    let coarse = sweep(0.0, 1.0, 0.0, 1.0, 1e-3);
    debug_assert!(coarse.0.is_finite(), "coarse grid found no feasible point");
    let (_, e1, e2) = coarse;
    let window = 2e-3;
    let fine = sweep(
        (e1 - window).max(0.0),
        (e1 + window).min(1.0),
        (e2 - window).max(0.0),
        (e2 + window).min(1.0),
        1e-6,
    );
    fine.0.max(coarse.0)
}
