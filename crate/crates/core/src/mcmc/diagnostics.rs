//! Convergence diagnostics across independent runs.

use std::collections::{BTreeMap, BTreeSet};

use crate::clade::Clade;
use crate::error::{ModelError, Result};
use crate::tree::TimeTree;

/// Minimum frequency, in at least one run, for a split to count.
const INCLUSION_FLOOR: f64 = 0.1;

/// Frequency of every non-trivial clade across `trees`.
pub fn split_frequencies(trees: &[TimeTree]) -> BTreeMap<Clade, f64> {
    let mut counts: BTreeMap<Clade, usize> = BTreeMap::new();
    for t in trees {
        let n = t.n_tips();
        let mut seen = BTreeSet::new();
        for c in t.clades() {
            if c.len() > 1 && c.len() < n {
                seen.insert(c);
            }
        }
        for c in seen {
            *counts.entry(c).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(c, k)| (c, k as f64 / trees.len() as f64))
        .collect()
}

/// Average standard deviation of split frequencies. The first `burn_in`
/// fraction of each run is discarded. The standard deviation uses the
/// `n − 1` divisor, so two runs at frequencies 1 and 0 give 1/√2.
pub fn asdsf(runs: &[Vec<TimeTree>], burn_in: f64) -> Result<f64> {
    if runs.len() < 2 {
        return Err(ModelError::Usage("split-frequency comparison needs two runs".into()));
    }
    let freqs: Vec<BTreeMap<Clade, f64>> = runs
        .iter()
        .map(|trees| {
            let skip = (burn_in * trees.len() as f64).floor() as usize;
            let kept = &trees[skip.min(trees.len())..];
            if kept.len() < 2 {
                return Err(ModelError::Usage(
                    "fewer than two trees remain after burn-in".into(),
                ));
            }
            Ok(split_frequencies(kept))
        })
        .collect::<Result<_>>()?;
    let splits: BTreeSet<&Clade> = freqs
        .iter()
        .flat_map(|f| f.iter().filter(|(_, &v)| v >= INCLUSION_FLOOR).map(|(c, _)| c))
        .collect();
    if splits.is_empty() {
        return Ok(0.0);
    }
    let k = freqs.len() as f64;
    let total: f64 = splits
        .iter()
        .map(|c| {
            let v: Vec<f64> = freqs.iter().map(|f| f.get(*c).copied().unwrap_or(0.0)).collect();
            let mean = v.iter().sum::<f64>() / k;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        })
        .sum();
    Ok(total / splits.len() as f64)
}
