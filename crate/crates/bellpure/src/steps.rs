//! Exact state maps of the purification steps.
//!
//! A bit step on `n` pairs (`Bn`) keeps the first pair only if all measured
//! bit parities agree; it admits the closed form
//!
//! ```text
//! a' = [(a+b)^n + (a-b)^n] / 2N      c' = [(c+d)^n + (c-d)^n] / 2N
//! b' = [(a+b)^n - (a-b)^n] / 2N      d' = [(c+d)^n - (c-d)^n] / 2N
//! ```
//!
//! with survival probability `N = (a+b)^n + (c+d)^n`. A phase step on an
//! odd number `n` of pairs (`Pn`) replaces the first pair's phase by the
//! majority of all phases and its bit by the parity of all bits; it never
//! discards the pair. Its exact map is evaluated by enumerating the count
//! vectors `(A,B,C,D)` with `A+B+C+D = n`, `A+C > B+D` and `A+B` odd,
//! weighted by multinomial coefficients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};
use crate::numeric::{ln_factorial, partial_binomial_sum};
use crate::states::{BellDiagonalState, BellLabel, ErrorRates};

/// Which error type a step corrects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Bit-error correcting step (`Bn`).
    Bit,
    /// Phase-error correcting step (`Pn`, odd `n`).
    Phase,
}

/// Symbolic description of a single purification step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSpec {
    pub kind: StepKind,
    pub n: u32,
}

impl StepSpec {
    pub fn new(kind: StepKind, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(BellError::Domain("step size n must be >= 1".into()));
        }
        if kind == StepKind::Phase && n.is_multiple_of(2) {
            return Err(BellError::Domain(format!(
                "phase steps require odd n, got {n}"
            )));
        }
        Ok(Self { kind, n })
    }

    pub fn bit(n: u32) -> Result<Self> {
        Self::new(StepKind::Bit, n)
    }

    pub fn phase(n: u32) -> Result<Self> {
        Self::new(StepKind::Phase, n)
    }
}

impl fmt::Display for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StepKind::Bit => write!(f, "B{}", self.n),
            StepKind::Phase => write!(f, "P{}", self.n),
        }
    }
}

impl FromStr for StepSpec {
    type Err = BellError;

    fn from_str(token: &str) -> Result<Self> {
        let token = token.trim();
        let mut chars = token.chars();
        let head = chars
            .next()
            .ok_or_else(|| BellError::Parse("empty step token".into()))?;
        let kind = match head.to_ascii_uppercase() {
            'B' => StepKind::Bit,
            'P' => StepKind::Phase,
            other => {
                return Err(BellError::Parse(format!(
                    "step token must start with B or P, got '{other}'"
                )))
            }
        };
        let n: u32 = chars
            .as_str()
            .parse()
            .map_err(|e| BellError::Parse(format!("bad step size in '{token}': {e}")))?;
        StepSpec::new(kind, n).map_err(|e| BellError::Parse(e.to_string()))
    }
}

/// An ordered sequence of purification steps, applied left to right.
///
/// Parses from the compact grammar `"B4 P3 B2"` (whitespace-separated,
/// case-insensitive).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepSequence(pub Vec<StepSpec>);

impl FromStr for StepSequence {
    type Err = BellError;

    fn from_str(text: &str) -> Result<Self> {
        text.split_whitespace()
            .map(StepSpec::from_str)
            .collect::<Result<Vec<_>>>()
            .map(StepSequence)
    }
}

impl fmt::Display for StepSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", tokens.join(" "))
    }
}

/// State of the surviving first pair together with its survival
/// probability (1 for phase steps, which never discard the pair).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub state: BellDiagonalState,
    pub survival_probability: f64,
}

/// Bilateral XOR on a pair of Bell labels:
/// `(l1,m1) x (l2,m2) -> (l1⊕l2, m1) x (l2, m1⊕m2)`.
pub fn bxor_labels(p1: BellLabel, p2: BellLabel) -> (BellLabel, BellLabel) {
    (
        BellLabel::new(p1.phase ^ p2.phase, p1.bit),
        BellLabel::new(p2.phase, p1.bit ^ p2.bit),
    )
}

/// Label transform of a bit step on `n` pure Bell pairs: the first output
/// is `(⊕ l_i, m_1)`, partner `k` becomes `(l_k, m_1 ⊕ m_k)`. The first
/// pair is kept iff every partner bit in the output is zero.
pub fn bn_label_transform(labels: &[BellLabel]) -> (BellLabel, Vec<BellLabel>) {
    debug_assert!(!labels.is_empty());
    let phase = labels.iter().fold(0, |acc, l| acc ^ l.phase);
    let first = BellLabel::new(phase, labels[0].bit);
    let partners = labels[1..]
        .iter()
        .map(|l| BellLabel::new(l.phase, labels[0].bit ^ l.bit))
        .collect();
    (first, partners)
}

/// Keep condition of a bit step: all transformed partner bits are zero.
pub fn bn_keep(partners: &[BellLabel]) -> bool {
    partners.iter().all(|l| l.bit == 0)
}

/// Label transform of a phase step on an odd number of pure Bell pairs:
/// the output phase is the majority of all phases (the final σ_z
/// correction fires when the mismatch count reaches `n+1` out of `2n+1`),
/// the output bit is the parity of all bits.
pub fn pn_label_transform(labels: &[BellLabel]) -> BellLabel {
    debug_assert!(labels.len() % 2 == 1, "phase steps need an odd pair count");
    let bit = labels.iter().fold(0, |acc, l| acc ^ l.bit);
    let lead = labels[0].phase;
    let mismatches = labels[1..].iter().filter(|l| l.phase != lead).count();
    let phase = if mismatches >= labels.len().div_ceil(2) {
        lead ^ 1
    } else {
        lead
    };
    BellLabel::new(phase, bit)
}

/// A single `B2` step on two possibly different states. The surviving
/// pair is `((ap+bq)/N, (bp+aq)/N, (cr+ds)/N, (dr+cs)/N)` with
/// `N = (a+b)(p+q) + (c+d)(r+s)`.
pub fn b2_pair(rho: &BellDiagonalState, sigma: &BellDiagonalState) -> Result<StepResult> {
    let [a, b, c, d] = rho.components();
    let [p, q, r, s] = sigma.components();
    let survival = (a + b) * (p + q) + (c + d) * (r + s);
    if survival <= 0.0 {
        return Err(BellError::DegenerateInput(
            "the surviving pair has probability zero".into(),
        ));
    }
    let state =
        BellDiagonalState::renormalized(a * p + b * q, b * p + a * q, c * r + d * s, d * r + c * s);
    Ok(StepResult {
        state,
        survival_probability: survival,
    })
}

/// Exact `Bn` map via the closed form. Powers are taken on the ratios
/// to `max(a+b, c+d)`, which keeps the state well defined for step sizes
/// far beyond the point where `(a+b)^n` itself would underflow. The
/// reported survival probability `(a+b)^n + (c+d)^n` underflows to zero
/// for such astronomically large `n`; the state does not.
pub fn apply_bn(s: &BellDiagonalState, n: u32) -> Result<StepResult> {
    if n == 0 {
        return Err(BellError::Domain("bit steps require n >= 1".into()));
    }
    let [a, b, c, d] = s.components();
    let u = a + b;
    let v = c + d;
    let scale = u.max(v); // >= 1/2 for a normalized state
    let p = n as i32;
    let ru = (u / scale).powi(p);
    let rv = (v / scale).powi(p);
    let re1 = ((a - b) / scale).powi(p);
    let re2 = ((c - d) / scale).powi(p);
    let state = BellDiagonalState::renormalized(ru + re1, ru - re1, rv + re2, rv - re2);
    Ok(StepResult {
        state,
        survival_probability: u.powi(p) + v.powi(p),
    })
}

/// Exact `Pn` map (odd `n`) by enumeration of Bell-state count vectors.
///
/// The sum runs over `X_n = {(A,B,C,D) : A+B+C+D = n, A+C > B+D, A+B odd}`,
/// i.e. the count vectors whose label tuples map to `Φ+`; the other three
/// components follow by the symmetry of the label transform. Multinomial
/// coefficients are evaluated in floating point via log-gamma; tuples are
/// visited in lexicographic order so the summation order is fixed.
pub fn apply_pn(s: &BellDiagonalState, n: u32) -> Result<BellDiagonalState> {
    if n.is_multiple_of(2) {
        return Err(BellError::Domain(format!(
            "phase steps require odd n, got {n}"
        )));
    }
    if n == 1 {
        return Ok(*s);
    }
    let [a, b, c, d] = s.components();
    let n64 = n as u64;
    let ln_fact: Vec<f64> = (0..=n64).map(ln_factorial).collect();
    let ln_n_fact = ln_fact[n as usize];

    // One factor M * x1^e1 * x2^e2 * x3^e3 * x4^e4 in log space; zero bases
    // with positive exponents kill the term.
    let term = |ln_m: f64, bases: [(f64, u64); 4]| -> f64 {
        let mut acc = ln_m;
        for (base, exp) in bases {
            if exp == 0 {
                continue;
            }
            if base == 0.0 {
                return 0.0;
            }
            acc += exp as f64 * base.ln();
        }
        acc.exp()
    };

    let mut out = [0.0f64; 4];
    for ca in 0..=n64 {
        for cb in 0..=n64 - ca {
            for cc in 0..=n64 - ca - cb {
                let cd = n64 - ca - cb - cc;
                if ca + cc <= cb + cd || (ca + cb).is_multiple_of(2) {
                    continue;
                }
                let ln_m = ln_n_fact
                    - ln_fact[ca as usize]
                    - ln_fact[cb as usize]
                    - ln_fact[cc as usize]
                    - ln_fact[cd as usize];
                out[0] += term(ln_m, [(a, ca), (b, cb), (c, cc), (d, cd)]);
                out[1] += term(ln_m, [(a, cb), (b, ca), (c, cd), (d, cc)]);
                out[2] += term(ln_m, [(a, cc), (b, cd), (c, ca), (d, cb)]);
                out[3] += term(ln_m, [(a, cd), (b, cc), (c, cb), (d, ca)]);
            }
        }
    }
    Ok(BellDiagonalState::renormalized(
        out[0], out[1], out[2], out[3],
    ))
}

/// Evolution of the `(B, P)` marginals under a `Pn` step:
/// `P' = Σ_{k=0}^{(n-1)/2} C(n,k) (1-P)^k P^{n-k}` and `B' = (1 - F^n)/2`
/// with `F = 1 - 2B`.
pub fn pn_error_rates(rates: ErrorRates, n: u32) -> Result<ErrorRates> {
    if n.is_multiple_of(2) {
        return Err(BellError::Domain(format!(
            "phase steps require odd n, got {n}"
        )));
    }
    if n == 1 {
        return Ok(rates);
    }
    let f = 1.0 - 2.0 * rates.bit;
    Ok(ErrorRates {
        bit: 0.5 * (1.0 - f.powi(n as i32)),
        phase: partial_binomial_sum(n as u64, (n as u64 - 1) / 2, 1.0 - rates.phase),
    })
}

/// Applies one step, wrapping `Pn` results with survival probability 1.
pub fn apply_step(s: &BellDiagonalState, spec: StepSpec) -> Result<StepResult> {
    match spec.kind {
        StepKind::Bit => apply_bn(s, spec.n),
        StepKind::Phase => Ok(StepResult {
            state: apply_pn(s, spec.n)?,
            survival_probability: 1.0,
        }),
    }
}

/// Applies a sequence left to right; the survival probability is the
/// product of the per-step survivals. An empty sequence is the identity.
pub fn apply_sequence(s: &BellDiagonalState, seq: &StepSequence) -> Result<StepResult> {
    let mut state = *s;
    let mut survival = 1.0;
    for spec in &seq.0 {
        let step = apply_step(&state, *spec)?;
        state = step.state;
        survival *= step.survival_probability;
    }
    Ok(StepResult {
        state,
        survival_probability: survival,
    })
}
