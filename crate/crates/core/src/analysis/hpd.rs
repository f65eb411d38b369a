//! Highest-posterior-density intervals and medians.

use crate::error::{ModelError, Result};

pub const MIN_HPD_SAMPLES: usize = 20;

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(ModelError::Usage("samples contain NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Shortest contiguous window of the sorted samples holding
/// ⌈mass·n⌉ of them. Ties go to the window with the lower bound.
pub fn hpd_interval(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() < MIN_HPD_SAMPLES {
        return Err(ModelError::Usage(format!(
            "an HPD interval needs at least {MIN_HPD_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(ModelError::Usage(format!("HPD mass {mass} outside (0, 1]")));
    }
    let s = sorted(samples)?;
    let n = s.len();
    let k = ((mass * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut best = (0, f64::INFINITY);
    for i in 0..=n - k {
        let w = s[i + k - 1] - s[i];
        if w < best.1 {
            best = (i, w);
        }
    }
    Ok((s[best.0], s[best.0 + k - 1]))
}

/// HPD interval when there are enough samples, otherwise the full range.
pub fn hpd_or_range(samples: &[f64], mass: f64) -> Result<(f64, f64)> {
    if samples.len() >= MIN_HPD_SAMPLES {
        return hpd_interval(samples, mass);
    }
    let s = sorted(samples)?;
    match (s.first(), s.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(ModelError::Usage("no samples".into())),
    }
}

pub fn median(samples: &[f64]) -> Result<f64> {
    let s = sorted(samples)?;
    let n = s.len();
    if n == 0 {
        return Err(ModelError::Usage("median of no samples".into()));
    }
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_ties_break_low() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(hpd_interval(&v, 0.95).unwrap(), (1.0, 95.0));
    }

    #[test]
    fn constant_samples() {
        assert_eq!(hpd_interval(&[7.5; 30], 0.95).unwrap(), (7.5, 7.5));
    }

    #[test]
    fn too_few_samples() {
        assert!(hpd_interval(&[1.0; 19], 0.95).is_err());
        assert_eq!(hpd_or_range(&[3.0, 1.0, 2.0], 0.95).unwrap(), (1.0, 3.0));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }
}
