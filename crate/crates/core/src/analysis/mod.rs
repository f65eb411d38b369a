//! Posterior summaries: consensus trees, node ages, HPD intervals, root-age
//! Bayes factors and AICM.

pub mod aicm;
pub mod bayes;
pub mod consensus;
pub mod hpd;

pub use aicm::{aicm, aicm_statistic};
pub use bayes::{bayes_factor_root, BayesFactor, Evidence, HypothesisWindows, WindowCounts};
pub use consensus::{
    majority_consensus, node_age_report, parse_subgroups, CladeSummary, ConsensusTree,
    NodeAgeReport, Subgroup,
};
pub use hpd::{hpd_interval, median};

/// Drops the first `fraction` of a sample.
pub fn discard_burn_in<T>(samples: &[T], fraction: f64) -> &[T] {
    let skip = (fraction * samples.len() as f64).floor() as usize;
    &samples[skip.min(samples.len())..]
}
