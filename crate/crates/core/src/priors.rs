//! Tree priors and hyperpriors.
//!
//! All densities are over node ages in years. Impossible configurations give
//! `-inf` so that the sampler rejects them; only structural misuse is an
//! error.

use crate::clock::igr_log_prior;
use crate::error::{ModelError, Result};
use crate::model::{FbdParams, FbdRates, ModelState, PriorParams, UniformParams};
use crate::tree::{CalibrationPrior, TimeTree};

/// Hyperprior constants.
pub mod hyper {
    /// Mean of the exponential prior on net diversification.
    pub const DIVERSIFICATION_MEAN: f64 = 1.0;
    /// Shape and rate of the gamma prior on the coalescent population size.
    pub const POP_SIZE_SHAPE: f64 = 1.0;
    pub const POP_SIZE_RATE: f64 = 0.01;
    /// Mean of the exponential prior on the base clock rate.
    pub const CLOCK_RATE_MEAN: f64 = 1e-4;
    /// Mean of the exponential prior on the relaxed-clock variance.
    pub const IGR_VARIANCE_MEAN: f64 = 0.005;
    /// Mean of the exponential prior on the gamma shape.
    pub const ALPHA_MEAN: f64 = 1.0;
}

pub fn exponential_log_pdf(x: f64, mean: f64) -> f64 {
    if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        -mean.ln() - x / mean
    }
}

/// Gamma density with shape/rate parameterization.
pub fn gamma_rate_log_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x
        - statrs::function::gamma::ln_gamma(shape)
}

/// Flat density on [0, 1).
fn unit_interval_log_pdf(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

fn uniform_log_pdf(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x >= lo && x <= hi {
        -(hi - lo).ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Constant-size coalescent density over a tree with possibly dated tips.
///
/// Walking back from the present, every interval with j lineages contributes
/// −j(j−1)Δt/θ and every coalescence contributes log(2/θ). With all tips at
/// age 0 this is the product over j of (2/θ)·exp(−j(j−1)t_j/θ). `theta` is in
/// the same unit as the ages.
pub fn coalescent_log_density(tree: &TimeTree, theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(ModelError::Usage(format!("theta must be positive, got {theta}")));
    }
    if tree.sampled_ancestor_count() > 0 {
        return Err(ModelError::SampledAncestorsUnsupported);
    }
    // (age, +1 for a sample / -1 for a coalescence)
    let mut events: Vec<(f64, i32)> = (0..tree.len())
        .map(|i| (tree.age(i), if tree.is_tip(i) { 1 } else { -1 }))
        .collect();
    // Samples before coalescences at equal ages.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut lineages: i64 = 0;
    let mut last = events[0].0;
    let mut log_density = 0.0;
    for (age, kind) in events {
        let j = lineages as f64;
        log_density -= j * (j - 1.0) * (age - last) / theta;
        last = age;
        if kind < 0 {
            if lineages < 2 {
                return Ok(f64::NEG_INFINITY);
            }
            log_density += (2.0 / theta).ln();
        }
        lineages += kind as i64;
    }
    Ok(log_density)
}

/// Intermediate quantities of the fossilized birth-death density at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbdHelpers {
    pub c1: f64,
    pub c2: f64,
    pub p0: f64,
    pub p1: f64,
    /// p0 with ψ = 0.
    pub p0_hat: f64,
}

fn c1_c2(lambda: f64, mu: f64, psi: f64, rho: f64) -> Result<(f64, f64)> {
    let c1 = ((lambda - mu - psi).powi(2) + 4.0 * lambda * psi).sqrt().abs();
    if !(c1 > 0.0) {
        return Err(ModelError::DegenerateParameters(format!(
            "c1 = 0 for lambda={lambda}, mu={mu}, psi={psi}"
        )));
    }
    let c2 = -(lambda - mu - 2.0 * lambda * rho - psi) / c1;
    Ok((c1, c2))
}

/// log p0(t): probability that a lineage alive at t leaves no sampled
/// descendant, written so that large c1·t does not overflow.
fn log_p0(lambda: f64, mu: f64, psi: f64, c1: f64, c2: f64, t: f64) -> f64 {
    let e = (-c1 * t).exp();
    let num = e * (1.0 - c2) - (1.0 + c2);
    let den = e * (1.0 - c2) + (1.0 + c2);
    ((lambda + mu + psi + c1 * num / den) / (2.0 * lambda)).ln()
}

/// log(1 − p0(t)) via a cancellation-free rearrangement.
fn log_one_minus_p0(lambda: f64, mu: f64, psi: f64, c1: f64, c2: f64, t: f64) -> f64 {
    let a = lambda - mu - psi;
    let e = (-c1 * t).exp();
    let den = e * (1.0 - c2) + (1.0 + c2);
    let num = e * (1.0 - c2) * (a - c1) + (1.0 + c2) * (a + c1);
    (num / (den * 2.0 * lambda)).ln()
}

/// log p1(t) = log 4ρ − log(2(1−c2²) + e^{−c1 t}(1−c2)² + e^{c1 t}(1+c2)²),
/// evaluated as log 4ρ − c1 t − 2 log((1−c2)e^{−c1 t} + (1+c2)).
fn log_p1(rho: f64, c1: f64, c2: f64, t: f64) -> f64 {
    let e = (-c1 * t).exp();
    (4.0 * rho).ln() - c1 * t - 2.0 * ((1.0 - c2) * e + (1.0 + c2)).ln()
}

pub fn fbd_helpers(lambda: f64, mu: f64, psi: f64, rho: f64, t: f64) -> Result<FbdHelpers> {
    if !(lambda > 0.0 && mu >= 0.0 && psi >= 0.0 && rho > 0.0 && rho <= 1.0 && t >= 0.0) {
        return Err(ModelError::Usage(format!(
            "fbd parameters out of range: lambda={lambda}, mu={mu}, psi={psi}, rho={rho}, t={t}"
        )));
    }
    let (c1, c2) = c1_c2(lambda, mu, psi, rho)?;
    let (h1, h2) = c1_c2(lambda, mu, 0.0, rho)?;
    Ok(FbdHelpers {
        c1,
        c2,
        p0: log_p0(lambda, mu, psi, c1, c2, t).exp(),
        p1: log_p1(rho, c1, c2, t).exp(),
        p0_hat: log_p0(lambda, mu, 0.0, h1, h2, t).exp(),
    })
}

/// Counts and ages the fossilized birth-death density is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct FbdTreeSummary {
    /// Extant sampled tips.
    pub n: usize,
    /// Extinct sampled tips.
    pub m: usize,
    /// Sampled ancestors.
    pub k: usize,
    /// Bifurcation ages; the first entry is the root (t_mrca).
    pub bifurcations: Vec<f64>,
    /// Ages of extinct sampled tips.
    pub extinct_tips: Vec<f64>,
}

impl FbdTreeSummary {
    pub fn from_tree(tree: &TimeTree) -> Self {
        let mut n = 0;
        let mut k = 0;
        let mut extinct_tips = Vec::new();
        for i in 0..tree.n_tips() {
            if tree.is_sampled_ancestor(i) {
                k += 1;
            } else if tree.age(i) == 0.0 {
                n += 1;
            } else {
                extinct_tips.push(tree.age(i));
            }
        }
        let mut bifurcations = vec![tree.root_age()];
        bifurcations.extend(
            (tree.n_tips()..tree.len())
                .filter(|&i| i != tree.root() && !tree.is_ancestor_attachment(i))
                .map(|i| tree.age(i)),
        );
        FbdTreeSummary {
            n,
            m: extinct_tips.len(),
            k,
            bifurcations,
            extinct_tips,
        }
    }
}

/// Fossilized birth-death density of the tree conditioned on the root age:
///
/// λ^{n+m−2} ψ^{k+m} / (1 − p̂0(x1))² · p1(x1) · ∏_{i=1}^{n+m−1} p1(x_i) ·
/// ∏_{i=1}^{m} p0(y_i)/p1(y_i)
///
/// where the x_i run over all bifurcation ages including the root x1, so the
/// root contributes p1(x1)² in total (one factor per lineage leaving it).
pub fn fbd_log_density(tree: &TimeTree, params: &FbdParams) -> Result<f64> {
    if !params.in_domain() {
        return Ok(f64::NEG_INFINITY);
    }
    fbd_log_density_rates(tree, &params.rates())
}

pub fn fbd_log_density_rates(tree: &TimeTree, rates: &FbdRates) -> Result<f64> {
    let FbdRates {
        lambda,
        mu,
        psi,
        rho,
    } = *rates;
    let s = FbdTreeSummary::from_tree(tree);
    if s.n < 2 {
        return Err(ModelError::Usage(format!(
            "the fossilized birth-death density needs at least two extant tips, found {}",
            s.n
        )));
    }
    if tree.is_ancestor_attachment(tree.root()) {
        return Ok(f64::NEG_INFINITY);
    }
    let fossils = (s.k + s.m) as i32;
    if psi == 0.0 && fossils > 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (c1, c2) = c1_c2(lambda, mu, psi, rho)?;
    let (h1, h2) = c1_c2(lambda, mu, 0.0, rho)?;
    let x1 = s.bifurcations[0];

    let mut ld = (s.n + s.m - 2) as f64 * lambda.ln();
    if fossils > 0 {
        ld += fossils as f64 * psi.ln();
    }
    ld -= 2.0 * log_one_minus_p0(lambda, mu, 0.0, h1, h2, x1);
    ld += log_p1(rho, c1, c2, x1);
    for &x in &s.bifurcations {
        ld += log_p1(rho, c1, c2, x);
    }
    for &y in &s.extinct_tips {
        ld += log_p0(lambda, mu, psi, c1, c2, y) - log_p1(rho, c1, c2, y);
    }
    Ok(if ld.is_nan() { f64::NEG_INFINITY } else { ld })
}

/// Uniform tree prior: log h(r) − Σ log(r − t_j) over the non-root internal
/// nodes, where t_j is the age of the oldest tip below node j and h is
/// uniform on the root bounds.
pub fn uniform_tree_log_density(tree: &TimeTree, params: &UniformParams) -> f64 {
    let r = tree.root_age();
    let mut ld = uniform_log_pdf(r, params.root_bounds);
    if !ld.is_finite() {
        return ld;
    }
    let floor = tree.oldest_tip_below();
    for i in tree.n_tips()..tree.len() {
        if i == tree.root() {
            continue;
        }
        let span = r - floor[i];
        if !(span > 0.0) {
            return f64::NEG_INFINITY;
        }
        ld -= span.ln();
    }
    ld
}

/// Density of the tree under the active prior. For the uniform prior this
/// includes the root-age density h(r).
pub fn tree_log_density(state: &ModelState) -> Result<f64> {
    match &state.prior_params {
        PriorParams::Coalescent(p) => {
            if !(p.pop_size > 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            coalescent_log_density(&state.tree, p.theta_years())
        }
        PriorParams::Fbd(p) => fbd_log_density(&state.tree, p),
        PriorParams::Uniform(p) => Ok(uniform_tree_log_density(&state.tree, p)),
    }
}

/// Hyperpriors on the scalar parameters plus the tip-age calibrations. Under
/// the fossilized birth-death prior the root age is uniform on
/// `root_bounds`; under the uniform prior that term belongs to
/// [`uniform_tree_log_density`] and is not repeated here.
pub fn hyperprior_log_density(
    state: &ModelState,
    calibrations: &[CalibrationPrior],
    root_bounds: (f64, f64),
) -> f64 {
    let pi_ok = state.pi[0] > 0.0 && state.pi[1] > 0.0;
    if !pi_ok {
        return f64::NEG_INFINITY;
    }
    let mut ld = exponential_log_pdf(state.alpha, hyper::ALPHA_MEAN)
        + exponential_log_pdf(state.clock_rate, hyper::CLOCK_RATE_MEAN)
        + exponential_log_pdf(state.igr_variance, hyper::IGR_VARIANCE_MEAN);
    if !(state.alpha > 0.0 && state.clock_rate > 0.0 && state.igr_variance > 0.0) {
        return f64::NEG_INFINITY;
    }
    match &state.prior_params {
        PriorParams::Coalescent(p) => {
            ld += gamma_rate_log_pdf(p.pop_size, hyper::POP_SIZE_SHAPE, hyper::POP_SIZE_RATE);
        }
        PriorParams::Fbd(p) => {
            if !(p.diversification > 0.0) {
                return f64::NEG_INFINITY;
            }
            ld += exponential_log_pdf(p.diversification, hyper::DIVERSIFICATION_MEAN)
                + unit_interval_log_pdf(p.turnover)
                + unit_interval_log_pdf(p.fossil_sampling)
                + uniform_log_pdf(state.tree.root_age(), root_bounds);
        }
        PriorParams::Uniform(_) => {}
    }
    for (i, cal) in calibrations.iter().enumerate() {
        ld += cal.log_density(state.tree.age(i));
    }
    ld
}

/// Full log prior: tree prior, hyperpriors, calibrations and branch rates.
pub fn log_prior(
    state: &ModelState,
    calibrations: &[CalibrationPrior],
    root_bounds: (f64, f64),
) -> Result<f64> {
    let hyper = hyperprior_log_density(state, calibrations, root_bounds);
    if hyper == f64::NEG_INFINITY {
        return Ok(hyper);
    }
    let tree = tree_log_density(state)?;
    if tree == f64::NEG_INFINITY {
        return Ok(tree);
    }
    let rates = igr_log_prior(
        &state.branch_rates,
        state.igr_variance,
        &state.tree,
        state.clock_rate,
    );
    Ok(hyper + tree + rates)
}
