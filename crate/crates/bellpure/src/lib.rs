//! Exact evolution and correctability analysis of Bell-diagonal
//! qubit-pair states under two-way purification steps.
//!
//! The crate provides:
//!
//! - [`states`]: the Bell-diagonal 4-vector, its error rates and the
//!   named families (Werner, BB, the `Z` parameterization and the
//!   boundary arc `K`);
//! - [`steps`]: the exact closed-form `Bn` map, the multinomial `Pn`
//!   map, the underlying Bell-label transforms and a parsable step
//!   grammar (`"B4 P3 B2"`);
//! - [`oracle`]: brute-force enumeration over all label tuples plus a
//!   seeded Monte Carlo sampler, used to validate every closed form;
//! - [`exponents`]: the characteristic exponents `r` and `r_P`, their
//!   polynomial region classifiers and the binomial tail bounds;
//! - [`correctability`]: the Shannon bound `1 - H(B) - H(P)`, its lower
//!   bound, smallest-step searches and the correctability verdicts;
//! - [`thresholds`]: maximum tolerable bit error rates of the BB84 and
//!   six-state protocols (closed form and bisection);
//! - [`verification`]: deterministic scans certifying the implication
//!   chain, the inequality appendix, the reduction lemmas and the
//!   optimality bound along the boundary arc, with CSV/JSON reporting.

pub mod correctability;
pub mod error;
pub mod exponents;
mod numeric;
pub mod oracle;
pub mod states;
pub mod steps;
pub mod thresholds;
pub mod verification;

pub use correctability::{
    asymcss, asymcss_lower_bound, binary_entropy, decide_correctability, estimate_r_sup,
    smallest_correcting_n, CorrectabilityReport, Verdict,
};
pub use error::{BellError, Result};
pub use exponents::{
    binomial_tail, binomial_tail_ln, bn_log_rates, chernoff_ratio, exponent_r, exponent_report,
    exponent_rp, region_f, rp_region_flags, separability_after_pn, stirling_lower_bound_check,
    ExponentReport, ExtReal, RegionFlags,
};
pub use oracle::{monte_carlo_step, oracle_bn, oracle_pn, LabelEnsemble, N_ORACLE_MAX};
pub use states::{
    arc_k, bb84_state, error_rates, is_bit_phase_independent, is_entangled_wrt_phi_plus,
    make_state, werner, z_param, BellDiagonalState, BellLabel, ErrorRates,
};
pub use steps::{
    apply_bn, apply_pn, apply_sequence, apply_step, b2_pair, bn_label_transform, bxor_labels,
    pn_error_rates, pn_label_transform, StepKind, StepResult, StepSequence, StepSpec,
};
pub use thresholds::{
    bb84_delta_family, bb84_threshold, bb84_worst_case_check, six_state_threshold, Method,
    Protocol, ThresholdResult,
};
pub use verification::{
    region_figure_data, scan_conjecture, summarize, verify_delta_inequality, verify_h_inequality,
    verify_lemma_diag, verify_reductions, verify_theorem_chain, write_records_csv, ScanRecord,
    ScanSummary, TOL_SCAN,
};
