//! The Shannon-bound functional `AsymCSS = 1 - H(B) - H(P)`, its lower
//! bound, and the asymptotic-correctability decision.
//!
//! A state is asymptotically correctable under a step sequence when the
//! Shannon bound eventually turns positive along the sequence. For bit
//! sequences this is equivalent to `r > 2` (decided through the polynomial
//! `f(a,b)`, which is well conditioned at the boundary); for phase
//! sequences `r_P > 2` is sufficient and `r_P >= 2` necessary, so the
//! exact boundary is reported as inconclusive.

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::exponents::{bn_log_rates, exponent_report, ExponentReport};
use crate::numeric::partial_binomial_sum_ln;
use crate::states::{error_rates, BellDiagonalState, ErrorRates, PROB_TOL};
use crate::steps::StepKind;

/// Tolerance for exact-tie detection on the polynomial classifiers.
pub const TIE_TOL: f64 = 1e-12;

/// Default upper bound for smallest-n searches. An absent result at this
/// bound means "not found below bound", not a proof of non-correctability.
pub const DEFAULT_SEARCH_LIMIT: u32 = 10_000;

/// Below `e^LOG_EXACT_CUTOFF` the linear-domain Shannon-bound evaluation
/// loses the square of the inverse phase rate to underflow; the log-domain
/// asymptotic comparison takes over there.
const LOG_EXACT_CUTOFF: f64 = -340.0;

/// Binary Shannon entropy `H(x) = -x log2 x - (1-x) log2 (1-x)` with
/// `H(0) = H(1) = 0` by continuity.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&x) {
        return Err(BellError::Domain(format!(
            "entropy argument {x} outside [0, 1]"
        )));
    }
    Ok(entropy_core(x.clamp(0.0, 1.0)))
}

fn entropy_core(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let m = x.min(1.0 - x);
    -(m * m.ln() + (1.0 - m) * (-m).ln_1p()) / std::f64::consts::LN_2
}

/// `1 - H(1/2 - y)`, evaluated as
/// `[2y atanh(2y) + ln(1 - 4y²)/2] / ln 2` so that tiny `y` (phase error
/// rates exponentially close to 1/2) do not cancel away.
fn one_minus_entropy_centered(y: f64) -> f64 {
    let t = 2.0 * y.abs();
    if t >= 1.0 {
        return 1.0;
    }
    (t * t.atanh() + (-t * t).ln_1p() / 2.0) / std::f64::consts::LN_2
}

/// Shannon bound `AsymCSS(B, P) = 1 - H(B) - H(P)`.
///
/// Positivity guarantees correction by some asymmetric CSS code with
/// one-way classical communication. Evaluated as
/// `[1 - H(max)] - H(min)`, which is symmetric in its arguments to the
/// last bit and keeps its accuracy when one rate approaches 1/2.
pub fn asymcss(rates: ErrorRates) -> f64 {
    let b = rates.bit.clamp(0.0, 1.0);
    let p = rates.phase.clamp(0.0, 1.0);
    // order by distance from 1/2 so the centered form gets the hard case
    let (near, far) = if (0.5 - b).abs() <= (0.5 - p).abs() {
        (b, p)
    } else {
        (p, b)
    };
    one_minus_entropy_centered(0.5 - near) - entropy_core(far)
}

/// Lower bound `A(x, y) = [x ln x - x + 2y²] / ln 2 <= AsymCSS(x, 1/2 - y)`
/// on the box `x, y ∈ [0, 1/2]`, with `x ln x = 0` at `x = 0`.
pub fn asymcss_lower_bound(x: f64, y: f64) -> Result<f64> {
    let box_ok = |v: f64| (-PROB_TOL..=0.5 + PROB_TOL).contains(&v);
    if !box_ok(x) || !box_ok(y) {
        return Err(BellError::Domain(format!(
            "lower bound arguments ({x}, {y}) outside [0, 1/2]^2"
        )));
    }
    let x = x.clamp(0.0, 0.5);
    let y = y.clamp(0.0, 0.5);
    let x_ln_x = if x == 0.0 { 0.0 } else { x * x.ln() };
    Ok((x_ln_x - x + 2.0 * y * y) / std::f64::consts::LN_2)
}

/// Shannon-bound positivity from the logarithms of the small rate `x` and
/// the inverse rate `y` (i.e. the pair `(B', 1/2 - P')` after a bit step
/// or `(P', 1/2 - B')` after a phase step).
///
/// Works far beyond the range where `x` and `y` themselves underflow by
/// comparing `ln(2y²)` against `ln[x(1 - ln x)]`, the leading behaviour
/// of `1 - H(1/2 - y)` and `H(x)`.
fn shannon_positive_from_logs(ln_x: f64, ln_y: f64) -> bool {
    if ln_y == f64::NEG_INFINITY {
        return false; // the inverse rate is exactly 1/2: H = 1
    }
    if ln_x == f64::NEG_INFINITY {
        return true; // no errors of the other kind at all
    }
    if ln_x > LOG_EXACT_CUTOFF && ln_y > LOG_EXACT_CUTOFF {
        let x = ln_x.exp();
        let y = ln_y.exp();
        one_minus_entropy_centered(y) - entropy_core(x) > 0.0
    } else {
        std::f64::consts::LN_2 + 2.0 * ln_y > ln_x + (1.0 - ln_x).ln()
    }
}

/// Correctability verdict of [`decide_correctability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Correctable,
    NotCorrectable,
    /// The exponent sits exactly on a boundary the theory leaves open
    /// (`r_P = 2` for phase sequences).
    Inconclusive,
}

/// Decision record for one state and one step-sequence kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectabilityReport {
    pub state: BellDiagonalState,
    /// Shannon bound of the state as it stands (no steps applied).
    pub asymcss_now: f64,
    pub verdict: Verdict,
    /// Least step size whose output beats the Shannon bound, when found
    /// within the search limit.
    pub smallest_n: Option<u32>,
    pub sequence_kind: StepKind,
    pub exponent_basis: ExponentReport,
}

/// Least `n <= n_max` for which the Shannon bound of `S_n(s)` is positive
/// (odd `n` only for phase sequences), or `None` if no such `n` exists
/// below the bound.
pub fn smallest_correcting_n(
    s: &BellDiagonalState,
    kind: StepKind,
    n_max: u32,
) -> Result<Option<u32>> {
    if s.a() < 0.5 - PROB_TOL {
        return Err(BellError::Domain(
            "search requires a state in the closure of S∨".into(),
        ));
    }
    match kind {
        StepKind::Bit => {
            for n in 1..=n_max {
                let (ln_x, ln_y) = bn_log_rates(s, n)?;
                if shannon_positive_from_logs(ln_x, ln_y) {
                    return Ok(Some(n));
                }
            }
        }
        StepKind::Phase => {
            let rates = error_rates(s);
            let balance = 1.0 - 2.0 * rates.bit; // = a+b-c-d
            if balance <= 0.0 {
                // bit errors can never drop below 1/2 again
                return Ok(None);
            }
            let phase_free = 1.0 - rates.phase;
            for n in (1..=n_max).step_by(2) {
                let ln_x = partial_binomial_sum_ln(n as u64, (n as u64 - 1) / 2, phase_free);
                let ln_y = n as f64 * balance.ln() - std::f64::consts::LN_2;
                if shannon_positive_from_logs(ln_x, ln_y) {
                    return Ok(Some(n));
                }
            }
        }
    }
    Ok(None)
}

/// Decides asymptotic correctability of `s` under pure bit or pure phase
/// sequences.
///
/// Bit sequences: correctable iff `f(a,b) > 0` (equivalent to `r > 2`,
/// including `r = +inf`); the `r = 2` boundary is not correctable since
/// `x_n / y_n²` stays bounded away from zero. Phase sequences: `r_P > 2`
/// is sufficient, `r_P < 2` excludes correctability, and the exact
/// boundary is inconclusive. Ties are detected on the polynomial
/// classifiers within [`TIE_TOL`].
pub fn decide_correctability(
    s: &BellDiagonalState,
    kind: StepKind,
) -> Result<CorrectabilityReport> {
    if s.a() < 0.5 - PROB_TOL {
        return Err(BellError::Domain(
            "correctability is decided on the closure of S∨ only".into(),
        ));
    }
    let basis = exponent_report(s);
    let rates = error_rates(s);
    let verdict = match kind {
        StepKind::Bit => {
            if basis.f_value > TIE_TOL {
                Verdict::Correctable
            } else {
                Verdict::NotCorrectable
            }
        }
        StepKind::Phase => {
            let gap = (1.0 - 2.0 * rates.bit).powi(4) - 4.0 * rates.phase * (1.0 - rates.phase);
            if gap > TIE_TOL {
                Verdict::Correctable
            } else if gap < -TIE_TOL {
                Verdict::NotCorrectable
            } else {
                Verdict::Inconclusive
            }
        }
    };
    let smallest_n = if verdict == Verdict::Correctable {
        smallest_correcting_n(s, kind, DEFAULT_SEARCH_LIMIT)?
    } else {
        None
    };
    Ok(CorrectabilityReport {
        state: *s,
        asymcss_now: asymcss(rates),
        verdict,
        smallest_n,
        sequence_kind: kind,
        exponent_basis: basis,
    })
}

/// Least-squares estimate of the scaling exponent `r_sup` from a sequence
/// of `(x_n, y_n)` pairs with `x_n -> 0`: the slope of `ln x` against
/// `ln y` over the final third of the list. This is a numerical estimate
/// of the supremum, not the supremum itself.
pub fn estimate_r_sup(xy: &[(f64, f64)]) -> Result<f64> {
    if xy.len() < 6 {
        return Err(BellError::Domain(format!(
            "need at least 6 points for a tail fit, got {}",
            xy.len()
        )));
    }
    for &(x, y) in xy {
        if !x.is_finite() || x <= 0.0 || !y.is_finite() || y <= 0.0 {
            return Err(BellError::Domain(format!(
                "nonpositive entry ({x}, {y}) in scaling sequence"
            )));
        }
    }
    let tail_len = (xy.len() / 3).max(2);
    let tail = &xy[xy.len() - tail_len..];
    let n = tail.len() as f64;
    let mean_ly = tail.iter().map(|&(_, y)| y.ln()).sum::<f64>() / n;
    let mean_lx = tail.iter().map(|&(x, _)| x.ln()).sum::<f64>() / n;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in tail {
        let dy = y.ln() - mean_ly;
        syy += dy * dy;
        sxy += dy * (x.ln() - mean_lx);
    }
    if syy == 0.0 {
        return Err(BellError::Domain(
            "all tail ordinates coincide; slope undefined".into(),
        ));
    }
    Ok(sxy / syy)
}
