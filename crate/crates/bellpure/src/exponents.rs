//! Characteristic exponents of the purification steps and the region
//! classifiers built from them.
//!
//! For bit steps the exponent is
//! `r = ln((a+b)/(c+d)) / ln((a+b)/(a-b))`; its sign relative to 2 is
//! equivalent on `S∨` to the sign of the polynomial
//! `f(a,b) = a² + b² - (a+b)/2`, which is the numerically robust
//! classifier. For phase steps the exponent is
//! `r_P = ln(4(a+c)(b+d)) / (2 ln(a+b-c-d))`, with the closed-form
//! classifiers of the two inequalities on `(B, P)`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BellError, Result};
use crate::numeric::{ln_binomial, partial_binomial_sum, partial_binomial_sum_ln};
use crate::states::{error_rates, BellDiagonalState, ErrorRates};
use crate::steps::apply_pn;

/// Tolerance for the `a+b = c+d` degeneracy of the exponent formula; at
/// that boundary the defining limit gives `r = 0`.
const BALANCED_TOL: f64 = 1e-12;

/// An extended-real exponent value. Degenerate inputs are reported as an
/// explicit variant instead of NaN so that region logic can branch on
/// them deliberately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
    /// The defining formula has no value (e.g. `a <= b` for `r`).
    Undefined,
}

impl ExtReal {
    /// Strictly-greater comparison; `+inf` exceeds everything finite,
    /// `-inf` and `Undefined` exceed nothing.
    pub fn gt(&self, threshold: f64) -> bool {
        match self {
            ExtReal::Finite(v) => *v > threshold,
            ExtReal::PosInfinity => true,
            ExtReal::NegInfinity | ExtReal::Undefined => false,
        }
    }

    /// Strictly-less comparison; `Undefined` is less than nothing.
    pub fn lt(&self, threshold: f64) -> bool {
        match self {
            ExtReal::Finite(v) => *v < threshold,
            ExtReal::NegInfinity => true,
            ExtReal::PosInfinity | ExtReal::Undefined => false,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Lossy conversion for tabular output: infinities map to IEEE
    /// infinities, `Undefined` to NaN.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(v) => *v,
            ExtReal::PosInfinity => f64::INFINITY,
            ExtReal::NegInfinity => f64::NEG_INFINITY,
            ExtReal::Undefined => f64::NAN,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "inf"),
            ExtReal::NegInfinity => write!(f, "-inf"),
            ExtReal::Undefined => write!(f, "undefined"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => ser.serialize_f64(*v),
            ExtReal::PosInfinity => ser.serialize_str("inf"),
            ExtReal::NegInfinity => ser.serialize_str("-inf"),
            ExtReal::Undefined => ser.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(ExtReal::Finite(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(ExtReal::PosInfinity),
                "-inf" => Ok(ExtReal::NegInfinity),
                "undefined" => Ok(ExtReal::Undefined),
                other => Err(D::Error::custom(format!("bad extended real '{other}'"))),
            },
        }
    }
}

/// Closed-form region flags of an [`ExponentReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionFlags {
    pub r_gt_1: bool,
    pub r_gt_2: bool,
    pub rp_gt_1: bool,
    pub rp_gt_2: bool,
}

/// Exponents and classifiers of one state. The flags come from the
/// polynomial classifiers (`a > 1/2`, `f(a,b) > 0` and the two `(B,P)`
/// inequalities), which stay well conditioned where the log-quotients
/// degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub r: ExtReal,
    pub r_p: ExtReal,
    pub f_value: f64,
    pub region_flags: RegionFlags,
}

/// Characteristic exponent `r` of the bit-step evolution.
///
/// Conventions at the degenerate boundaries: `a <= b` has no value;
/// `a+b = c+d` (both equal 1/2) gives `r = 0` by the limit of the defining
/// formula; `b = 0` gives `±inf` depending on the sign of `ln((a+b)/(c+d))`.
pub fn exponent_r(s: &BellDiagonalState) -> ExtReal {
    let [a, b, c, d] = s.components();
    let u = a + b;
    let v = c + d;
    let excess = a - b;
    if excess <= 0.0 {
        return ExtReal::Undefined;
    }
    if (u - v).abs() <= BALANCED_TOL {
        return ExtReal::Finite(0.0);
    }
    if v <= 0.0 {
        return ExtReal::PosInfinity;
    }
    let num = (u / v).ln();
    let den = (u / excess).ln();
    if den == 0.0 {
        return if num > 0.0 {
            ExtReal::PosInfinity
        } else {
            ExtReal::NegInfinity
        };
    }
    ExtReal::Finite(num / den)
}

/// Region polynomial `f(a,b) = a² + b² - (a+b)/2`; on `S∨` its sign equals
/// the sign of `r - 2`. Equivalently `(a-1/4)² + (b-1/4)² - 1/8`.
pub fn region_f(a: f64, b: f64) -> f64 {
    a * a + b * b - 0.5 * (a + b)
}

/// Characteristic exponent `r_P` of the phase-step evolution,
/// `ln(4(a+c)(b+d)) / (2 ln F)` with `F = a+b-c-d`.
///
/// `+inf` when the numerator argument vanishes (`b+d = 0` or `a+c = 0`)
/// while `F > 0`; no value when `F <= 0`, or at `F = 1` where the
/// denominator vanishes.
pub fn exponent_rp(s: &BellDiagonalState) -> ExtReal {
    let [a, b, c, d] = s.components();
    let phase_tot = b + d;
    let phase_free = a + c;
    let balance = a + b - c - d;
    if phase_tot <= 0.0 || phase_free <= 0.0 {
        return if balance > 0.0 {
            ExtReal::PosInfinity
        } else {
            ExtReal::Undefined
        };
    }
    if balance <= 0.0 || balance >= 1.0 {
        return ExtReal::Undefined;
    }
    let num = (4.0 * phase_free * phase_tot).ln();
    let den = 2.0 * balance.ln();
    ExtReal::Finite(num / den)
}

/// Closed-form classifiers for `r_P > 1` and `r_P > 2` in terms of the
/// error rates: `(1/2-B)² + (1/2-P)² > 1/4` and `(1-2B)⁴ - 4P(1-P) > 0`.
pub fn rp_region_flags(rates: ErrorRates) -> (bool, bool) {
    let ErrorRates { bit, phase } = rates;
    let gt1 = (0.5 - bit).powi(2) + (0.5 - phase).powi(2) > 0.25;
    let gt2 = (1.0 - 2.0 * bit).powi(4) - 4.0 * phase * (1.0 - phase) > 0.0;
    (gt1, gt2)
}

/// Full exponent report for one state.
pub fn exponent_report(s: &BellDiagonalState) -> ExponentReport {
    let rates = error_rates(s);
    let (rp_gt_1, rp_gt_2) = rp_region_flags(rates);
    let f_value = region_f(s.a(), s.b());
    ExponentReport {
        r: exponent_r(s),
        r_p: exponent_rp(s),
        f_value,
        region_flags: RegionFlags {
            r_gt_1: s.a() > 0.5,
            r_gt_2: f_value > 0.0,
            rp_gt_1,
            rp_gt_2,
        },
    }
}

/// Partial binomial sum `f_n(p) = Σ_{k=0}^{(n-1)/2} C(n,k) p^k (1-p)^{n-k}`
/// for odd `n` and `p ∈ [1/2, 1]`. Exact integer coefficients are used up
/// to `n = 60`, log-space summation beyond.
pub fn binomial_tail(n: u32, p: f64) -> Result<f64> {
    check_tail_args(n, p)?;
    Ok(partial_binomial_sum(n as u64, (n as u64 - 1) / 2, p))
}

/// Natural log of [`binomial_tail`]; usable far beyond the range where the
/// sum itself underflows. Returns `-inf` at `p = 1`.
pub fn binomial_tail_ln(n: u32, p: f64) -> Result<f64> {
    check_tail_args(n, p)?;
    Ok(partial_binomial_sum_ln(n as u64, (n as u64 - 1) / 2, p))
}

fn check_tail_args(n: u32, p: f64) -> Result<()> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(BellError::Domain(format!("need odd n >= 1, got {n}")));
    }
    if !(0.5..=1.0).contains(&p) {
        return Err(BellError::Domain(format!("need p in [1/2, 1], got {p}")));
    }
    Ok(())
}

/// Sub-exponential factor `c(n,p) = f_n(p) / z^n` with `z = 2√(p(1-p))`,
/// for odd `n` and `p` strictly inside `(1/2, 1)`. Always lies in `[0, 1]`.
pub fn chernoff_ratio(n: u32, p: f64) -> Result<f64> {
    if p <= 0.5 || p >= 1.0 {
        return Err(BellError::Domain(format!(
            "chernoff ratio needs p in (1/2, 1), got {p}"
        )));
    }
    let ln_f = binomial_tail_ln(n, p)?;
    let ln_z = (4.0 * p * (1.0 - p)).ln() / 2.0;
    Ok((ln_f - n as f64 * ln_z).exp())
}

/// Checks the Stirling-type lower bound
/// `C(2n+1, n) >= 2^(2n+1) h(n)` with
/// `h(n) = e^(-1/(6n)) (1 - 1/(2(n+1))) / sqrt(πn)`, in log space.
pub fn stirling_lower_bound_check(n: u32) -> bool {
    let n = n as u64;
    if n == 0 {
        return false;
    }
    let nf = n as f64;
    let ln_lhs = ln_binomial(2 * n + 1, n);
    let ln_h =
        -1.0 / (6.0 * nf) + (1.0 - 0.5 / (nf + 1.0)).ln() - 0.5 * (std::f64::consts::PI * nf).ln();
    let ln_rhs = (2.0 * nf + 1.0) * std::f64::consts::LN_2 + ln_h;
    ln_lhs >= ln_rhs
}

/// Whether the state is separable (`a' <= 1/2`) after a `Pn` step of the
/// given odd size. For statistically independent inputs and large `n`
/// this is governed by `r_P(s) < 1`; the step size is explicit because no
/// a-priori bound on "large" is available.
pub fn separability_after_pn(s: &BellDiagonalState, n: u32) -> Result<bool> {
    Ok(apply_pn(s, n)?.a() <= 0.5)
}

/// Logarithms `(ln B', ln(1/2 - P'))` of the bit error rate and inverse
/// phase error rate after a `Bn` step, computed without underflow:
///
/// ```text
/// B'       = (c+d)^n / N,  1/2 - P' = [(a-b)^n + (c-d)^n] / 2N,
/// N        = (a+b)^n + (c+d)^n.
/// ```
///
/// Requires `a > b` and `a > 1/2` (so that `(a-b)^n` dominates `(c-d)^n`).
pub fn bn_log_rates(s: &BellDiagonalState, n: u32) -> Result<(f64, f64)> {
    let [a, b, c, d] = s.components();
    let u = a + b;
    let v = c + d;
    let e1 = a - b;
    let e2 = c - d;
    if e1 <= 0.0 || e1 <= e2.abs() {
        return Err(BellError::Domain(
            "log-rate evaluation requires a > b and a > 1/2".into(),
        ));
    }
    let nf = n as f64;
    // ln N = n ln(max) + ln1p((min/max)^n)
    let (hi, lo) = if u >= v { (u, v) } else { (v, u) };
    let ln_norm = nf * hi.ln() + (lo / hi).powi(n as i32).ln_1p();
    let ln_bit = if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        nf * v.ln() - ln_norm
    };
    // ln[(a-b)^n + (c-d)^n] = n ln e1 + ln1p((e2/e1)^n)
    let ln_phase_gap = nf * e1.ln() + (e2 / e1).powi(n as i32).ln_1p();
    let ln_inv_phase = ln_phase_gap - std::f64::consts::LN_2 - ln_norm;
    Ok((ln_bit, ln_inv_phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bb84_state, independent_state, make_state, werner};
    use crate::steps::apply_bn;

    #[test]
    fn exponent_r_on_threshold_states() {
        // Werner((5 + 3√5)/20) sits exactly on r = 2
        let f6 = (5.0 + 3.0 * 5.0f64.sqrt()) / 20.0;
        let r = exponent_r(&werner(f6).unwrap());
        assert!((r.finite().unwrap() - 2.0).abs() < 1e-12, "r = {r}");

        let r = exponent_r(&bb84_state(0.6).unwrap());
        assert!((r.finite().unwrap() - 2.0).abs() < 1e-12, "r = {r}");

        // b = 0 with a+b > c+d diverges
        let s = make_state(0.7, 0.0, 0.3, 0.0).unwrap();
        assert_eq!(exponent_r(&s), ExtReal::PosInfinity);
    }

    #[test]
    fn exponent_r_degenerate_conventions() {
        // a <= b: no value
        let s = make_state(0.3, 0.4, 0.2, 0.1).unwrap();
        assert_eq!(exponent_r(&s), ExtReal::Undefined);
        // balanced a+b = c+d: limit value 0
        let s = make_state(0.4, 0.1, 0.3, 0.2).unwrap();
        assert_eq!(exponent_r(&s), ExtReal::Finite(0.0));
        // balanced with b = 0: still the limit convention
        let s = make_state(0.5, 0.0, 0.5, 0.0).unwrap();
        assert_eq!(exponent_r(&s), ExtReal::Finite(0.0));
        // b = 0, a+b < c+d
        let s = make_state(0.4, 0.0, 0.6, 0.0).unwrap();
        assert_eq!(exponent_r(&s), ExtReal::NegInfinity);
        // c+d = 0 with b > 0
        let s = make_state(0.8, 0.2, 0.0, 0.0).unwrap();
        assert_eq!(exponent_r(&s), ExtReal::PosInfinity);
    }

    #[test]
    fn region_f_values() {
        assert_eq!(region_f(0.5, 0.0), 0.0);
        assert!((region_f(0.6, 0.2)).abs() < 1e-15);
        assert!((region_f(0.25, 0.25) + 0.125).abs() < 1e-15);
        // circle form agrees exactly
        for &(a, b) in &[(0.7, 0.1), (0.3, 0.6), (0.52, 0.48)] {
            let circle = (a - 0.25f64).powi(2) + (b - 0.25f64).powi(2) - 0.125;
            assert!((region_f(a, b) - circle).abs() < 1e-15);
        }
    }

    #[test]
    fn exponent_rp_values() {
        // BB(3/5): ln(0.64) / (2 ln 0.6)
        let rp = exponent_rp(&bb84_state(0.6).unwrap());
        assert!(
            (rp.finite().unwrap() - 0.436829205373675).abs() < 1e-12,
            "r_P = {rp}"
        );
        // on the circle (1/2-B)² + (1/2-P)² = 1/4 the exponent is exactly 1
        let hit = 0.5 - 0.5 / std::f64::consts::SQRT_2;
        let s = independent_state(ErrorRates {
            bit: hit,
            phase: hit,
        })
        .unwrap();
        let rp = exponent_rp(&s);
        assert!((rp.finite().unwrap() - 1.0).abs() < 1e-12, "r_P = {rp}");

        let pure = make_state(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(exponent_rp(&pure), ExtReal::PosInfinity);
        // F <= 0: no value
        let s = make_state(0.2, 0.2, 0.3, 0.3).unwrap();
        assert_eq!(exponent_rp(&s), ExtReal::Undefined);
        // F = 1 with z < 1: no value
        let s = make_state(0.9, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(exponent_rp(&s), ExtReal::Undefined);
    }

    #[test]
    fn rp_flags_from_closed_forms() {
        let (g1, g2) = rp_region_flags(ErrorRates {
            bit: 0.0,
            phase: 0.0,
        });
        assert!(g1 && g2);
        let (g1, _) = rp_region_flags(ErrorRates {
            bit: 0.25,
            phase: 0.25,
        });
        assert!(!g1);
        let (g1, g2) = rp_region_flags(ErrorRates {
            bit: 0.0,
            phase: 0.2,
        });
        assert!(g1 && g2);
    }

    #[test]
    fn report_flags_match_values() {
        for s in [
            werner(0.7).unwrap(),
            werner(0.55).unwrap(),
            bb84_state(0.8).unwrap(),
            make_state(0.52, 0.2, 0.18, 0.1).unwrap(),
        ] {
            let rep = exponent_report(&s);
            assert_eq!(rep.region_flags.r_gt_2, rep.f_value > 0.0);
            if rep.r.is_finite() || rep.r == ExtReal::PosInfinity {
                assert_eq!(rep.region_flags.r_gt_2, rep.r.gt(2.0), "state {s:?}");
                assert_eq!(rep.region_flags.r_gt_1, rep.r.gt(1.0), "state {s:?}");
            }
        }
    }

    // On S∨ the exponent comparisons reduce to polynomial classifiers:
    // r > 1 iff a > 1/2, r > 2 iff f(a,b) > 0.
    #[test]
    fn sign_agreement_on_random_states() {
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut counted = 0;
        while counted < 1000 {
            let mut cuts = [next(), next(), next()];
            cuts.sort_by(f64::total_cmp);
            let (a, b, c, d) = (cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], 1.0 - cuts[2]);
            let s = make_state(a, b, c, d).unwrap();
            if s.a() <= s.b() {
                continue; // r undefined there
            }
            counted += 1;
            let r = exponent_r(&s);
            assert_eq!(
                r.gt(1.0),
                s.a() > 0.5,
                "entanglement mismatch at {s:?} (r = {r})"
            );
            if s.a() > 0.5 {
                assert_eq!(
                    r.gt(2.0),
                    region_f(s.a(), s.b()) > 0.0,
                    "region mismatch at {s:?} (r = {r})"
                );
            }
        }
    }

    #[test]
    fn r_is_invariant_under_bn() {
        for s in [
            werner(0.7).unwrap(),
            werner(0.58).unwrap(),
            bb84_state(0.65).unwrap(),
            make_state(0.55, 0.25, 0.15, 0.05).unwrap(),
        ] {
            let r0 = exponent_r(&s).finite().unwrap();
            for n in 2..=10 {
                let after = apply_bn(&s, n).unwrap().state;
                let rn = exponent_r(&after).finite().unwrap();
                assert!((rn - r0).abs() < 1e-9, "n={n}: {rn} vs {r0}");
            }
        }
    }

    #[test]
    fn binomial_tail_examples() {
        for n in [1u32, 3, 9, 41] {
            assert!((binomial_tail(n, 0.5).unwrap() - 0.5).abs() < 1e-13);
        }
        assert_eq!(binomial_tail(3, 1.0).unwrap(), 0.0);
        assert!((binomial_tail(3, 0.8).unwrap() - 0.104).abs() < 1e-15);
        assert!(binomial_tail(4, 0.8).is_err());
        assert!(binomial_tail(3, 0.4).is_err());
    }

    #[test]
    fn chernoff_ratio_examples() {
        // c(3, 0.8) = 0.104 / 0.8^3
        let c = chernoff_ratio(3, 0.8).unwrap();
        assert!((c - 0.203125).abs() < 1e-12, "c = {c}");
        assert!(chernoff_ratio(3, 0.5).is_err());
        assert!(chernoff_ratio(3, 1.0).is_err());
        for n in [1u32, 11, 101, 501] {
            for &p in &[0.55, 0.7, 0.95] {
                let c = chernoff_ratio(n, p).unwrap();
                assert!((0.0..=1.0).contains(&c), "c({n},{p}) = {c}");
            }
        }
    }

    #[test]
    fn tail_nth_root_approaches_chernoff_base() {
        let n = 2001;
        for &p in &[0.55, 0.75, 0.95] {
            let root = (binomial_tail_ln(n, p).unwrap() / n as f64).exp();
            let z = 2.0 * (p * (1.0 - p)).sqrt();
            assert!((root - z).abs() < 0.01, "p={p}: root {root} vs z {z}");
        }
    }

    #[test]
    fn stirling_bound_holds() {
        // n = 1: C(3,1) = 3 >= 8 h(1) ≈ 2.8655
        assert!(stirling_lower_bound_check(1));
        assert!(stirling_lower_bound_check(10));
        assert!(stirling_lower_bound_check(100));
        assert!(!stirling_lower_bound_check(0));
    }

    #[test]
    fn separability_under_pn() {
        let pure = make_state(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(!separability_after_pn(&pure, 3).unwrap());

        // independent state with r_P < 1 becomes separable for large n,
        // with r_P > 1 it stays entangled
        let low = independent_state(ErrorRates {
            bit: 0.2,
            phase: 0.2,
        })
        .unwrap();
        assert!(exponent_rp(&low).finite().unwrap() < 1.0);
        assert!(separability_after_pn(&low, 41).unwrap());

        let high = independent_state(ErrorRates {
            bit: 0.02,
            phase: 0.02,
        })
        .unwrap();
        assert!(exponent_rp(&high).finite().unwrap() > 1.0);
        assert!(!separability_after_pn(&high, 41).unwrap());
    }

    #[test]
    fn log_rates_match_direct_evaluation() {
        let s = werner(0.7).unwrap();
        for n in [1u32, 3, 10, 50] {
            let after = apply_bn(&s, n).unwrap().state;
            let rates = error_rates(&after);
            let (ln_bit, ln_inv_phase) = bn_log_rates(&s, n).unwrap();
            assert!(
                (ln_bit.exp() - rates.bit).abs() < 1e-13,
                "n={n}: {} vs {}",
                ln_bit.exp(),
                rates.bit
            );
            assert!(
                (ln_inv_phase.exp() - (0.5 - rates.phase)).abs() < 1e-13,
                "n={n}"
            );
        }
        // stays finite far beyond the underflow point of the direct route
        let (ln_bit, ln_inv_phase) = bn_log_rates(&s, 100_000).unwrap();
        assert!(ln_bit.is_finite() && ln_inv_phase.is_finite());
        assert!(ln_bit < -1000.0 && ln_inv_phase < -1000.0);
    }

    #[test]
    fn ext_real_serde() {
        let vals = [
            ExtReal::Finite(2.5),
            ExtReal::PosInfinity,
            ExtReal::NegInfinity,
            ExtReal::Undefined,
        ];
        for v in vals {
            let text = serde_json::to_string(&v).unwrap();
            let back: ExtReal = serde_json::from_str(&text).unwrap();
            assert_eq!(v, back);
        }
        assert_eq!(
            serde_json::to_string(&ExtReal::PosInfinity).unwrap(),
            "\"inf\""
        );
    }
}
