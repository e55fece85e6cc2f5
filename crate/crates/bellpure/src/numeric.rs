//! Small numeric helpers: exact and log-space binomial/multinomial
//! coefficients and partial binomial sums.
//!
//! Exact integer arithmetic is used where it is cheap (small `n`); log-space
//! evaluation with fixed-order log-sum-exp takes over where the exact route
//! would overflow.

use statrs::function::gamma::ln_gamma;

/// Largest `n` for which partial binomial sums use exact integer
/// coefficients; beyond this the log-space route is used.
pub(crate) const EXACT_BINOMIAL_MAX_N: u64 = 60;

/// `ln(n!)`.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Exact binomial coefficient, valid for `n <= 60` without overflow.
pub(crate) fn binomial_exact(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

/// Exact multinomial coefficient `n! / (counts[0]! ... counts[3]!)` in u128.
/// Exact for `n <= 33` (33! still fits in u128). Cross-check fixture for
/// the log-gamma route.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn multinomial_exact(counts: [u64; 4]) -> u128 {
    let mut acc: u128 = 1;
    let mut seen: u64 = 0;
    for &c in &counts {
        // acc *= C(seen + c, c), building the multinomial incrementally
        for j in 1..=c {
            acc = acc * (seen + j) as u128 / j as u128;
        }
        seen += c;
    }
    acc
}

/// `ln` of the multinomial coefficient `n! / (A! B! C! D!)`.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn ln_multinomial(n: u64, counts: [u64; 4]) -> f64 {
    debug_assert_eq!(counts.iter().sum::<u64>(), n);
    ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// Partial binomial sum `Σ_{k=0}^{r} C(n,k) x^k (1-x)^{n-k}`.
pub(crate) fn partial_binomial_sum(n: u64, r: u64, x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    let r = r.min(n);
    if n <= EXACT_BINOMIAL_MAX_N {
        let mut acc = 0.0;
        for k in 0..=r {
            acc += binomial_exact(n, k) as f64 * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32);
        }
        acc
    } else {
        partial_binomial_sum_ln(n, r, x).exp()
    }
}

/// `ln` of the partial binomial sum, evaluated by log-sum-exp over the
/// term logarithms in increasing `k` order. Returns `-inf` when the sum
/// is exactly zero (`x = 1` with `r < n`).
pub(crate) fn partial_binomial_sum_ln(n: u64, r: u64, x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x));
    let r = r.min(n);
    if x == 0.0 {
        return 0.0; // only the k = 0 term survives and equals 1
    }
    if x == 1.0 {
        return if r >= n { 0.0 } else { f64::NEG_INFINITY };
    }
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let mut logs = Vec::with_capacity((r + 1) as usize);
    let mut ln_c = 0.0; // ln C(n, 0)
    let mut max = f64::NEG_INFINITY;
    for k in 0..=r {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let t = ln_c + k as f64 * ln_x + (n - k) as f64 * ln_1mx;
        if t > max {
            max = t;
        }
        logs.push(t);
    }
    let sum: f64 = logs.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `ln C(n, k)` via log-gamma.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}
