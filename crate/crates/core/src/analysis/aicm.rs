//! AICM, the Akaike information criterion estimated from an MCMC
//! log-likelihood trace: AICM = 2·s² − 2·m̄ with m̄ the sample mean and s² the
//! unbiased sample variance, as computed by Tracer (Raftery et al. 2007).
//! Lower is better.

use crate::error::{ModelError, Result};

pub const MIN_AICM_SAMPLES: usize = 20;

/// AICM of a post-burn-in trace of at least [`MIN_AICM_SAMPLES`] values.
pub fn aicm(log_likelihoods: &[f64]) -> Result<f64> {
    if log_likelihoods.len() < MIN_AICM_SAMPLES {
        return Err(ModelError::Usage(format!(
            "AICM needs at least {MIN_AICM_SAMPLES} samples, got {}",
            log_likelihoods.len()
        )));
    }
    aicm_statistic(log_likelihoods)
}

/// The AICM formula itself, for any trace with two or more values.
pub fn aicm_statistic(log_likelihoods: &[f64]) -> Result<f64> {
    let n = log_likelihoods.len();
    if n < 2 {
        return Err(ModelError::Usage("AICM needs at least two samples".into()));
    }
    let mean = log_likelihoods.iter().sum::<f64>() / n as f64;
    let var = log_likelihoods
        .iter()
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    Ok(2.0 * var - 2.0 * mean)
}
