//! Brute-force ground truth for the step maps.
//!
//! The oracle applies the label transforms literally to every one of the
//! `4^n` Bell-label tuples, weighting each tuple by its product
//! probability. It shares no code with the closed-form maps in
//! [`crate::steps`] beyond the label transforms themselves, which are the
//! protocol definition. A seeded Monte Carlo sampler provides an
//! additional statistical cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{BellError, Result};
use crate::states::{BellDiagonalState, BellLabel};
use crate::steps::{
    bn_keep, bn_label_transform, pn_label_transform, StepKind, StepResult, StepSpec,
};

/// Largest pair count enumerated exhaustively (`4^10` tuples). The oracle
/// is a test fixture; larger `n` belongs to the closed forms.
pub const N_ORACLE_MAX: u32 = 10;

/// Shot-range size for the Monte Carlo sampler; each range draws from its
/// own counter-derived stream so results do not depend on scheduling.
const MC_RANGE: u64 = 1 << 16;

/// The product distribution over all `4^n` label tuples drawn from one
/// state: tuple `(label_1, ..., label_n)` carries weight `∏ p(label_i)`.
/// Enumeration walks the tuples in lexicographic label order, so any
/// accumulation over an ensemble is bit-reproducible.
#[derive(Debug, Clone, Copy)]
pub struct LabelEnsemble {
    state: BellDiagonalState,
    n: u32,
}

impl LabelEnsemble {
    /// Caps `n` at [`N_ORACLE_MAX`]; the oracle is a test fixture, larger
    /// step sizes belong to the closed forms.
    pub fn new(state: BellDiagonalState, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(BellError::Domain("oracle steps require n >= 1".into()));
        }
        if n > N_ORACLE_MAX {
            return Err(BellError::ResourceLimit(format!(
                "oracle enumeration capped at n = {N_ORACLE_MAX}, got {n}"
            )));
        }
        Ok(Self { state, n })
    }

    pub fn pair_count(&self) -> u32 {
        self.n
    }

    pub fn tuple_count(&self) -> u64 {
        1 << (2 * self.n)
    }

    /// Weight of one tuple under the product distribution.
    pub fn weight(&self, labels: &[BellLabel]) -> f64 {
        labels.iter().map(|&l| self.state.probability(l)).product()
    }

    /// Visits every tuple with nonzero weight in lexicographic order.
    pub fn for_each<F: FnMut(&[BellLabel], f64)>(&self, mut visit: F) {
        let comps = self.state.components();
        let n = self.n as u64;
        let mut labels = vec![BellLabel::from_index(0); self.n as usize];
        for idx in 0..self.tuple_count() {
            let mut weight = 1.0;
            for (j, label) in labels.iter_mut().enumerate() {
                let digit = ((idx >> (2 * (n - 1 - j as u64))) & 3) as usize;
                *label = BellLabel::from_index(digit);
                weight *= comps[digit];
            }
            if weight > 0.0 {
                visit(&labels, weight);
            }
        }
    }

    /// Total weight over all tuples; equals 1 up to rounding.
    pub fn total_weight(&self) -> f64 {
        let mut total = 0.0;
        self.for_each(|_, w| total += w);
        total
    }
}

/// Exhaustive `Bn` evolution: transform every tuple, keep the first pair
/// when all partner bit parities agree, and tally the kept distribution.
pub fn oracle_bn(s: &BellDiagonalState, n: u32) -> Result<StepResult> {
    let ensemble = LabelEnsemble::new(*s, n)?;
    let mut acc = [0.0f64; 4];
    let mut survival = 0.0f64;
    ensemble.for_each(|labels, weight| {
        let (first, partners) = bn_label_transform(labels);
        if bn_keep(&partners) {
            acc[first.index()] += weight;
            survival += weight;
        }
    });
    if survival <= 0.0 {
        return Err(BellError::DegenerateInput(
            "no label tuple survives the bit step".into(),
        ));
    }
    Ok(StepResult {
        state: BellDiagonalState::renormalized(acc[0], acc[1], acc[2], acc[3]),
        survival_probability: survival,
    })
}

/// Exhaustive `Pn` evolution; every tuple is kept.
pub fn oracle_pn(s: &BellDiagonalState, n: u32) -> Result<BellDiagonalState> {
    let ensemble = LabelEnsemble::new(*s, n)?;
    if n.is_multiple_of(2) {
        return Err(BellError::Domain(format!(
            "phase steps require odd n, got {n}"
        )));
    }
    let mut acc = [0.0f64; 4];
    ensemble.for_each(|labels, weight| {
        let out = pn_label_transform(labels);
        acc[out.index()] += weight;
    });
    Ok(BellDiagonalState::renormalized(
        acc[0], acc[1], acc[2], acc[3],
    ))
}

/// Samples `shots` label tuples i.i.d. from `s`, applies the step's label
/// transform and tallies the outcomes. Returns the empirical state of the
/// kept pairs and the kept fraction.
///
/// The generator is ChaCha12; shot range `i` draws from stream `i` of the
/// seed, so a run is reproducible regardless of how ranges are scheduled.
pub fn monte_carlo_step(
    s: &BellDiagonalState,
    step: StepSpec,
    shots: u64,
    seed: u64,
) -> Result<(BellDiagonalState, f64)> {
    if shots == 0 {
        return Err(BellError::Domain("monte carlo requires shots >= 1".into()));
    }
    let comps = s.components();
    let cum = [
        comps[0],
        comps[0] + comps[1],
        comps[0] + comps[1] + comps[2],
    ];
    let sample = |u: f64| -> usize {
        if u < cum[0] {
            0
        } else if u < cum[1] {
            1
        } else if u < cum[2] {
            2
        } else {
            3
        }
    };

    let n = step.n as usize;
    let mut tallies = [0u64; 4];
    let mut kept = 0u64;
    let mut labels = vec![BellLabel::from_index(0); n];
    let ranges = shots.div_ceil(MC_RANGE);
    for range in 0..ranges {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(range);
        let in_range = MC_RANGE.min(shots - range * MC_RANGE);
        for _ in 0..in_range {
            for label in labels.iter_mut() {
                *label = BellLabel::from_index(sample(rng.gen::<f64>()));
            }
            match step.kind {
                StepKind::Bit => {
                    let (first, partners) = bn_label_transform(&labels);
                    if bn_keep(&partners) {
                        kept += 1;
                        tallies[first.index()] += 1;
                    }
                }
                StepKind::Phase => {
                    let out = pn_label_transform(&labels);
                    kept += 1;
                    tallies[out.index()] += 1;
                }
            }
        }
    }
    if kept == 0 {
        return Err(BellError::DegenerateInput(
            "no sampled tuple survived the step".into(),
        ));
    }
    let state = BellDiagonalState::renormalized(
        tallies[0] as f64,
        tallies[1] as f64,
        tallies[2] as f64,
        tallies[3] as f64,
    );
    Ok((state, kept as f64 / shots as f64))
}
