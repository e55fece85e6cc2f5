//! Bell-diagonal qubit-pair states and the state families used throughout
//! the crate.
//!
//! A Bell-diagonal state is a probability 4-vector `(a, b, c, d)` over the
//! Bell basis `Φ+, Φ-, Ψ+, Ψ-`. The coefficient `a` is the fidelity with
//! respect to `Φ+`, `b` the pure phase error rate, `c` the pure bit error
//! rate and `d` the combined bit-phase error rate. Derived from these are
//! the total bit error rate `B = c + d` and total phase error rate
//! `P = b + d`.

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

/// Acceptance tolerance for normalization and positivity of probability
/// vectors. Constructors clamp negatives above `-PROB_TOL` to zero and
/// renormalize; repeated map composition accumulates rounding, so exact
/// zero checks would be too brittle.
pub const PROB_TOL: f64 = 1e-9;

/// Components below this magnitude arising from rounding inside step maps
/// are clamped to zero before renormalization, keeping downstream
/// logarithms defined.
pub const CLAMP_TOL: f64 = 1e-13;

/// A Bell state label `(l, m)` over the binary field: `l` is the phase
/// index, `m` the bit index. `(0,0) = Φ+`, `(1,0) = Φ-`, `(0,1) = Ψ+`,
/// `(1,1) = Ψ-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellLabel {
    /// Phase index `l`.
    pub phase: u8,
    /// Bit index `m`.
    pub bit: u8,
}

impl BellLabel {
    pub fn new(phase: u8, bit: u8) -> Self {
        debug_assert!(phase <= 1 && bit <= 1);
        Self { phase, bit }
    }

    /// Component index of this label in the `(a, b, c, d)` vector.
    pub fn index(self) -> usize {
        (self.phase + 2 * self.bit) as usize
    }

    /// Inverse of [`BellLabel::index`].
    pub fn from_index(i: usize) -> Self {
        debug_assert!(i < 4);
        Self {
            phase: (i & 1) as u8,
            bit: ((i >> 1) & 1) as u8,
        }
    }
}

/// Total bit and phase error rates `(B, P)` of a Bell-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    /// Total bit error rate `B = c + d`.
    pub bit: f64,
    /// Total phase error rate `P = b + d`.
    pub phase: f64,
}

/// Raw component view used for serde validation.
#[derive(Deserialize)]
struct RawComponents {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

/// A Bell-diagonal state: probabilities `(a, b, c, d)` over the Bell basis.
///
/// Values are immutable; all step maps produce new states. Constructors
/// guarantee non-negative components summing to one (within [`PROB_TOL`]
/// on input, exactly renormalized on output).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComponents")]
pub struct BellDiagonalState {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<RawComponents> for BellDiagonalState {
    type Error = BellError;

    fn try_from(raw: RawComponents) -> Result<Self> {
        Self::new(raw.a, raw.b, raw.c, raw.d)
    }
}

impl BellDiagonalState {
    /// Builds a state from raw components.
    ///
    /// Components in `[-PROB_TOL, 0)` are clamped to zero and the vector is
    /// rescaled to sum exactly to one. Components below `-PROB_TOL` or a sum
    /// deviating from one by more than `PROB_TOL` are rejected.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let comps = [a, b, c, d];
        for (i, &x) in comps.iter().enumerate() {
            if !x.is_finite() || x < -PROB_TOL {
                return Err(BellError::Domain(format!(
                    "component {i} = {x} is negative beyond tolerance"
                )));
            }
        }
        let sum: f64 = comps.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(BellError::Domain(format!(
                "components sum to {sum}, expected 1"
            )));
        }
        Ok(Self::renormalized(a, b, c, d))
    }

    /// Clamps small negatives to zero and rescales so the components sum
    /// to one. Used internally by the step maps, whose outputs are
    /// normalized by construction up to rounding.
    pub(crate) fn renormalized(a: f64, b: f64, c: f64, d: f64) -> Self {
        let clamp = |x: f64| if x < 0.0 { 0.0 } else { x };
        let (a, b, c, d) = (clamp(a), clamp(b), clamp(c), clamp(d));
        let sum = a + b + c + d;
        debug_assert!(sum > 0.0, "cannot renormalize a zero vector");
        Self {
            a: a / sum,
            b: b / sum,
            c: c / sum,
            d: d / sum,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Fidelity with respect to `Φ+` (the coefficient `a`).
    pub fn fidelity(&self) -> f64 {
        self.a
    }

    /// Components as an array indexed like [`BellLabel::index`].
    pub fn components(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Probability of drawing `label` from this state.
    pub fn probability(&self, label: BellLabel) -> f64 {
        self.components()[label.index()]
    }

    /// Formats the state as a CSV row `a,b,c,d` with 15 significant digits.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            format_sig(self.a),
            format_sig(self.b),
            format_sig(self.c),
            format_sig(self.d)
        )
    }

    /// Parses a CSV row `a,b,c,d` produced by [`BellDiagonalState::to_csv_row`].
    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(BellError::Parse(format!(
                "expected 4 comma-separated components, got {}",
                fields.len()
            )));
        }
        let mut vals = [0.0; 4];
        for (i, f) in fields.iter().enumerate() {
            vals[i] = f
                .trim()
                .parse::<f64>()
                .map_err(|e| BellError::Parse(format!("component {i}: {e}")))?;
        }
        Self::new(vals[0], vals[1], vals[2], vals[3])
    }
}

/// Formats a float in scientific notation with 15 significant digits.
/// Non-finite values print as `inf`, `-inf`, `NaN`.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x == 0.0 {
        // fold -0.0 into +0.0
        format!("{:.14e}", 0.0)
    } else {
        format!("{x:.14e}")
    }
}

/// Builds a normalized Bell-diagonal state; see [`BellDiagonalState::new`].
pub fn make_state(a: f64, b: f64, c: f64, d: f64) -> Result<BellDiagonalState> {
    BellDiagonalState::new(a, b, c, d)
}

/// Total bit and phase error rates `B = c + d`, `P = b + d`.
pub fn error_rates(s: &BellDiagonalState) -> ErrorRates {
    ErrorRates {
        bit: s.c + s.d,
        phase: s.b + s.d,
    }
}

/// Membership in `S∨`: entangled with respect to `Φ+`, i.e. `a > 1/2`
/// (strict; boundary states belong only to the closure).
pub fn is_entangled_wrt_phi_plus(s: &BellDiagonalState) -> bool {
    s.a > 0.5
}

/// Werner state `W(F) = (F, (1-F)/3, (1-F)/3, (1-F)/3)`.
pub fn werner(fidelity: f64) -> Result<BellDiagonalState> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(BellError::Domain(format!(
            "Werner fidelity {fidelity} outside [0, 1]"
        )));
    }
    let rest = (1.0 - fidelity) / 3.0;
    BellDiagonalState::new(fidelity, rest, rest, rest)
}

/// BB state `BB(F) = (F, (1-F)/2, (1-F)/2, 0)`, the worst case of the
/// BB84 protocol at fixed bit error rate.
pub fn bb84_state(fidelity: f64) -> Result<BellDiagonalState> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(BellError::Domain(format!(
            "BB fidelity {fidelity} outside [0, 1]"
        )));
    }
    let rest = (1.0 - fidelity) / 2.0;
    BellDiagonalState::new(fidelity, rest, rest, 0.0)
}

/// Parameterization `Z(a, b; z) = (a, b, z(1-a-b), (1-z)(1-a-b))` of the
/// closure of `S∨`.
pub fn z_param(a: f64, b: f64, z: f64) -> Result<BellDiagonalState> {
    if a < 0.5 - PROB_TOL {
        return Err(BellError::Domain(format!("Z requires a >= 1/2, got {a}")));
    }
    if b < -PROB_TOL {
        return Err(BellError::Domain(format!("Z requires b >= 0, got {b}")));
    }
    if a + b > 1.0 + PROB_TOL {
        return Err(BellError::Domain(format!(
            "Z requires a + b <= 1, got {}",
            a + b
        )));
    }
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&z) {
        return Err(BellError::Domain(format!(
            "Z requires z in [0, 1], got {z}"
        )));
    }
    let rest = 1.0 - a - b;
    BellDiagonalState::new(a, b, z * rest, (1.0 - z) * rest)
}

/// Point on the arc `K(t) = Z(1/4 + cos(πt/4)/(2√2), 1/4 + sin(πt/4)/(2√2); 1)`
/// for `t ∈ [-1, 1]`. Every point satisfies `f(a, b) = 0`: the arc is the
/// boundary of the `r > 2` region at `d = 0`.
pub fn arc_k(t: f64) -> Result<BellDiagonalState> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(BellError::Domain(format!(
            "arc parameter {t} outside [-1, 1]"
        )));
    }
    let scale = 0.5 / std::f64::consts::SQRT_2;
    let angle = std::f64::consts::FRAC_PI_4 * t;
    let a = 0.25 + scale * angle.cos();
    let b = 0.25 + scale * angle.sin();
    z_param(a, b.max(0.0), 1.0)
}

/// Whether bit and phase errors are statistically independent:
/// `(b+d)(c+d) - d = 0` within [`PROB_TOL`].
pub fn is_bit_phase_independent(s: &BellDiagonalState) -> bool {
    let r = error_rates(s);
    (r.phase * r.bit - s.d).abs() <= PROB_TOL
}

/// The unique independent state with the given error rates:
/// `a = (1-B)(1-P)`, `b = (1-B)P`, `c = B(1-P)`, `d = BP`.
pub fn independent_state(rates: ErrorRates) -> Result<BellDiagonalState> {
    let ErrorRates {
        bit: b_err,
        phase: p_err,
    } = rates;
    if !(0.0..=1.0).contains(&b_err) || !(0.0..=1.0).contains(&p_err) {
        return Err(BellError::Domain(format!(
            "error rates ({b_err}, {p_err}) outside [0, 1]^2"
        )));
    }
    BellDiagonalState::new(
        (1.0 - b_err) * (1.0 - p_err),
        (1.0 - b_err) * p_err,
        b_err * (1.0 - p_err),
        b_err * p_err,
    )
}
