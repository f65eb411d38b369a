//! Bayes factor between two root-age hypotheses, estimated from the fraction
//! of posterior and prior trees whose root falls in each window.

use std::fmt;

use crate::error::{ModelError, Result};

/// Root-age windows in years before present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisWindows {
    pub steppe: (f64, f64),
    pub anatolian: (f64, f64),
}

impl Default for HypothesisWindows {
    fn default() -> Self {
        HypothesisWindows {
            steppe: (5500.0, 6500.0),
            anatolian: (8000.0, 9500.0),
        }
    }
}

/// Kass and Raftery evidence categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evidence {
    VeryStrong,
    Strong,
    Positive,
    Neutral,
    Negative,
}

impl Evidence {
    pub fn from_k(k: f64) -> Evidence {
        if k > 150.0 {
            Evidence::VeryStrong
        } else if k > 20.0 {
            Evidence::Strong
        } else if k > 3.0 {
            Evidence::Positive
        } else if k >= 1.0 {
            Evidence::Neutral
        } else {
            Evidence::Negative
        }
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Evidence::VeryStrong => "Very Strong",
            Evidence::Strong => "Strong",
            Evidence::Positive => "Positive",
            Evidence::Neutral => "Neutral",
            Evidence::Negative => "Negative",
        })
    }
}

/// Number of samples in each window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowCounts {
    pub posterior_steppe: usize,
    pub posterior_anatolian: usize,
    pub posterior_total: usize,
    pub prior_steppe: usize,
    pub prior_anatolian: usize,
    pub prior_total: usize,
}

impl WindowCounts {
    pub fn from_samples(posterior: &[f64], prior: &[f64], w: &HypothesisWindows) -> Self {
        let count = |v: &[f64], (lo, hi): (f64, f64)| v.iter().filter(|&&x| x >= lo && x <= hi).count();
        WindowCounts {
            posterior_steppe: count(posterior, w.steppe),
            posterior_anatolian: count(posterior, w.anatolian),
            posterior_total: posterior.len(),
            prior_steppe: count(prior, w.steppe),
            prior_anatolian: count(prior, w.anatolian),
            prior_total: prior.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BayesFactor {
    Value { k: f64, evidence: Evidence },
    /// A window holds no prior sample, so K is undefined.
    NoPrior,
    /// A window holds neither prior nor posterior samples.
    NoPriorNoPosterior,
}

impl BayesFactor {
    pub fn from_counts(c: &WindowCounts) -> Self {
        let empty_both = (c.prior_steppe == 0 && c.posterior_steppe == 0)
            || (c.prior_anatolian == 0 && c.posterior_anatolian == 0);
        if empty_both {
            return BayesFactor::NoPriorNoPosterior;
        }
        if c.prior_steppe == 0 || c.prior_anatolian == 0 {
            return BayesFactor::NoPrior;
        }
        // Both totals cancel, so the ratio reduces to integer cross products.
        let num = c.posterior_steppe as u128 * c.prior_anatolian as u128;
        let den = c.posterior_anatolian as u128 * c.prior_steppe as u128;
        let k = num as f64 / den as f64;
        BayesFactor::Value {
            k,
            evidence: Evidence::from_k(k),
        }
    }

    pub fn sentinel(&self) -> Option<&'static str> {
        match self {
            BayesFactor::Value { .. } => None,
            BayesFactor::NoPrior => Some("*"),
            BayesFactor::NoPriorNoPosterior => Some("**"),
        }
    }
}

impl fmt::Display for BayesFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BayesFactor::Value { k, evidence } => write!(f, "K = {k:.3} ({evidence})"),
            other => write!(f, "K = {}", other.sentinel().unwrap()),
        }
    }
}

/// K = [Pr(root ∈ steppe | D) / Pr(root ∈ steppe)] / [Pr(root ∈ anatolian | D) / Pr(root ∈ anatolian)].
pub fn bayes_factor_root(
    posterior_roots: &[f64],
    prior_roots: &[f64],
    windows: &HypothesisWindows,
) -> Result<BayesFactor> {
    if posterior_roots.is_empty() || prior_roots.is_empty() {
        return Err(ModelError::Usage("Bayes factor needs non-empty posterior and prior samples".into()));
    }
    Ok(BayesFactor::from_counts(&WindowCounts::from_samples(
        posterior_roots,
        prior_roots,
        windows,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(ps: usize, pa: usize, qs: usize, qa: usize) -> WindowCounts {
        WindowCounts {
            posterior_steppe: ps,
            posterior_anatolian: pa,
            posterior_total: 1000,
            prior_steppe: qs,
            prior_anatolian: qa,
            prior_total: 1000,
        }
    }

    #[test]
    fn arithmetic_and_format() {
        let bf = BayesFactor::from_counts(&counts(300, 50, 100, 100));
        assert_eq!(bf.to_string(), "K = 6.000 (Positive)");
    }

    #[test]
    fn sentinels() {
        assert_eq!(BayesFactor::from_counts(&counts(300, 50, 0, 100)).to_string(), "K = *");
        assert_eq!(BayesFactor::from_counts(&counts(0, 50, 0, 100)).to_string(), "K = **");
    }
}
