//! Maximum tolerable bit error rates of the six-state and BB84 protocols.
//!
//! Both thresholds come from the `r = 2` boundary of the bit-step
//! correctability region, evaluated on the protocol's worst-case state
//! family: Werner states for the six-state protocol, BB states for BB84.
//! Closed forms are `B* = 1/2 - 1/(2√5)` (fidelity `(5+3√5)/20`) and
//! `B* = 1/5` (fidelity `3/5`); a bisection on the polynomial `f` along
//! the family cross-checks them.

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::exponents::region_f;
use crate::states::{BellDiagonalState, PROB_TOL};

/// Protocol whose threshold is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    SixState,
    BB84,
}

/// How a threshold value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Bisection,
}

/// A solved protocol threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub protocol: Protocol,
    /// Fidelity at which the verdict flips.
    pub critical_fidelity: f64,
    /// Corresponding maximum tolerable bit error rate.
    pub critical_bit_error_rate: f64,
    pub method: Method,
}

const BISECT_LO: f64 = 0.5;
const BISECT_HI: f64 = 0.99;
const BISECT_TOL: f64 = 1e-12;
const BISECT_MAX_ITER: u32 = 200;

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(BellError::Domain(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo < BISECT_TOL {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Threshold of the six-state protocol over the Werner family,
/// `F* = (5 + 3√5)/20`, `B* = 1/2 - 1/(2√5)`.
pub fn six_state_threshold(method: Method) -> ThresholdResult {
    let fidelity = match method {
        Method::ClosedForm => (5.0 + 3.0 * 5.0f64.sqrt()) / 20.0,
        Method::Bisection => {
            // f(a, b) along W(F): a = F, b = (1-F)/3
            bisect(BISECT_LO, BISECT_HI, |f| region_f(f, (1.0 - f) / 3.0))
                .expect("the bracket straddles the Werner threshold")
        }
    };
    ThresholdResult {
        protocol: Protocol::SixState,
        critical_fidelity: fidelity,
        critical_bit_error_rate: 2.0 * (1.0 - fidelity) / 3.0,
        method,
    }
}

/// Threshold of the BB84 protocol over the BB family, `F* = 3/5`,
/// `B* = 1/5`.
pub fn bb84_threshold(method: Method) -> ThresholdResult {
    let fidelity = match method {
        Method::ClosedForm => 0.6,
        Method::Bisection => bisect(BISECT_LO, BISECT_HI, |f| region_f(f, (1.0 - f) / 2.0))
            .expect("the bracket straddles the BB threshold"),
    };
    ThresholdResult {
        protocol: Protocol::BB84,
        critical_fidelity: fidelity,
        critical_bit_error_rate: (1.0 - fidelity) / 2.0,
        method,
    }
}

/// Member of the fixed-bit-error-rate BB84 family
/// `ρ(B, δ) = (1 - 2B + δ, B - δ, B - δ, δ)` together with its region
/// value, evaluated through the reduced quadratic
/// `f = 2δ² + (2 - 6B)δ + (1/2 - 7B/2 + 5B²)`.
pub fn bb84_delta_family(bit_rate: f64, delta: f64) -> Result<(BellDiagonalState, f64)> {
    if !(0.0..=0.5 + PROB_TOL).contains(&bit_rate) {
        return Err(BellError::Domain(format!(
            "bit error rate {bit_rate} outside [0, 1/2]"
        )));
    }
    if !(-PROB_TOL..=bit_rate + PROB_TOL).contains(&delta) {
        return Err(BellError::Domain(format!(
            "delta {delta} outside [0, B = {bit_rate}]"
        )));
    }
    let state = BellDiagonalState::new(
        1.0 - 2.0 * bit_rate + delta,
        bit_rate - delta,
        bit_rate - delta,
        delta,
    )?;
    let quad = 2.0 * delta * delta
        + (2.0 - 6.0 * bit_rate) * delta
        + (0.5 - 3.5 * bit_rate + 5.0 * bit_rate * bit_rate);
    debug_assert!(
        (quad - region_f(state.a(), state.b())).abs() <= 1e-12,
        "quadratic and region polynomial disagree"
    );
    Ok((state, quad))
}

/// Verifies on a `grid_size`-point grid over `δ ∈ [0, B]` that the region
/// value of the δ-family is minimized at `δ = 0` (the BB state), i.e.
/// that the BB state is the worst case at fixed bit error rate.
pub fn bb84_worst_case_check(bit_rate: f64, grid_size: u32) -> Result<bool> {
    if grid_size < 2 {
        return Err(BellError::Domain("grid needs at least 2 points".into()));
    }
    let (_, at_zero) = bb84_delta_family(bit_rate, 0.0)?;
    let mut min_f = f64::INFINITY;
    for i in 0..grid_size {
        let delta = bit_rate * i as f64 / (grid_size - 1) as f64;
        let (_, f) = bb84_delta_family(bit_rate, delta)?;
        min_f = min_f.min(f);
    }
    Ok(at_zero <= min_f + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correctability::{decide_correctability, Verdict};
    use crate::exponents::exponent_r;
    use crate::states::werner;
    use crate::steps::StepKind;

    #[test]
    fn six_state_closed_form() {
        let res = six_state_threshold(Method::ClosedForm);
        assert!((res.critical_bit_error_rate - 0.276393202250021).abs() < 1e-12);
        assert!((res.critical_fidelity - 0.585410196624968).abs() < 1e-12);
    }

    #[test]
    fn six_state_bisection_agrees() {
        let closed = six_state_threshold(Method::ClosedForm);
        let solved = six_state_threshold(Method::Bisection);
        assert!((closed.critical_fidelity - solved.critical_fidelity).abs() < 1e-9);
        assert!((closed.critical_bit_error_rate - solved.critical_bit_error_rate).abs() < 1e-9);
    }

    #[test]
    fn six_state_brackets_the_r2_boundary() {
        let f_star = six_state_threshold(Method::ClosedForm).critical_fidelity;
        let above = exponent_r(&werner(f_star + 1e-6).unwrap());
        let below = exponent_r(&werner(f_star - 1e-6).unwrap());
        assert!(above.gt(2.0));
        assert!(!below.gt(2.0));
    }

    #[test]
    fn bb84_closed_form_and_bisection() {
        let closed = bb84_threshold(Method::ClosedForm);
        assert_eq!(closed.critical_bit_error_rate, 0.2);
        assert_eq!(closed.critical_fidelity, 0.6);
        let solved = bb84_threshold(Method::Bisection);
        assert!((solved.critical_fidelity - 0.6).abs() < 1e-9);
        assert!((solved.critical_bit_error_rate - 0.2).abs() < 1e-9);
    }

    #[test]
    fn delta_family_examples() {
        // δ = 0 at B = 0.2 is the BB(0.6) state on the boundary
        let (state, f) = bb84_delta_family(0.2, 0.0).unwrap();
        assert!((state.a() - 0.6).abs() < 1e-15);
        assert!(f.abs() < 1e-15);

        // δ = B = 0.2: (0.8, 0, 0, 0.2), f(0.8, 0) = 0.24
        let (state, f) = bb84_delta_family(0.2, 0.2).unwrap();
        assert!((state.a() - 0.8).abs() < 1e-15);
        assert_eq!(state.b(), 0.0);
        assert!((state.d() - 0.2).abs() < 1e-15);
        assert!((f - 0.24).abs() < 1e-12);

        // quadratic value at (B, δ) = (0.1, 0.05)
        let (_, f) = bb84_delta_family(0.1, 0.05).unwrap();
        assert!((f - 0.275).abs() < 1e-12);

        assert!(bb84_delta_family(0.6, 0.0).is_err());
        assert!(bb84_delta_family(0.2, 0.3).is_err());
    }

    #[test]
    fn quadratic_matches_region_polynomial() {
        let mut seed = 0xA076_1D64_78BD_642Fu64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10_000 {
            let b = 0.5 * next();
            let delta = b * next();
            let (state, quad) = bb84_delta_family(b, delta).unwrap();
            let poly = region_f(state.a(), state.b());
            assert!(
                (quad - poly).abs() <= 1e-12,
                "B={b} δ={delta}: {quad} vs {poly}"
            );
        }
    }

    #[test]
    fn worst_case_sits_at_delta_zero() {
        for &b in &[0.2, 0.1, 0.05] {
            assert!(bb84_worst_case_check(b, 1001).unwrap());
        }
        assert!(bb84_worst_case_check(0.2, 1).is_err());
    }

    #[test]
    fn verdict_flips_at_thresholds() {
        let f6 = six_state_threshold(Method::ClosedForm).critical_fidelity;
        let above = decide_correctability(&werner(f6 + 1e-7).unwrap(), StepKind::Bit).unwrap();
        let below = decide_correctability(&werner(f6 - 1e-7).unwrap(), StepKind::Bit).unwrap();
        assert_eq!(above.verdict, Verdict::Correctable);
        assert_eq!(below.verdict, Verdict::NotCorrectable);

        let fb = bb84_threshold(Method::ClosedForm).critical_fidelity;
        let above = decide_correctability(
            &crate::states::bb84_state(fb + 1e-7).unwrap(),
            StepKind::Bit,
        )
        .unwrap();
        let below = decide_correctability(
            &crate::states::bb84_state(fb - 1e-7).unwrap(),
            StepKind::Bit,
        )
        .unwrap();
        assert_eq!(above.verdict, Verdict::Correctable);
        assert_eq!(below.verdict, Verdict::NotCorrectable);
    }
}
