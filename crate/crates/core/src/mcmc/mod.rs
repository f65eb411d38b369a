//! Metropolis-coupled MCMC over trees and model parameters.

mod diagnostics;
mod proposals;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ModelError, Result};
use crate::io::config::RunConfig;
use crate::io::matrix::CognateMatrix;
use crate::io::trace::TraceSample;
use crate::likelihood::{PatternSet, Pruner};
use crate::model::{
    CoalescentParams, FbdParams, ModelState, PriorParams, TreePriorKind, UniformParams,
};
use crate::priors::log_prior;
use crate::tree::{CalibrationPrior, TaxonSet, TimeTree};

pub use diagnostics::{asdsf, split_frequencies};
pub use proposals::Kernel;
use proposals::{param_slot, propose, MoveContext};

/// A scalar model parameter that can be sampled or held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Alpha,
    ClockRate,
    IgrVariance,
    Pi1,
    PopSize,
    Diversification,
    Turnover,
    FossilSampling,
}

impl Param {
    pub const ALL: [Param; 8] = [
        Param::Alpha,
        Param::ClockRate,
        Param::IgrVariance,
        Param::Pi1,
        Param::PopSize,
        Param::Diversification,
        Param::Turnover,
        Param::FossilSampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::ClockRate => "clock_rate",
            Param::IgrVariance => "igr_variance",
            Param::Pi1 => "pi1",
            Param::PopSize => "pop_size",
            Param::Diversification => "diversification",
            Param::Turnover => "turnover",
            Param::FossilSampling => "fossil_sampling",
        }
    }

    /// Parameters on (0, 1) get reflecting window moves, the rest scale moves.
    fn kernel(self) -> Kernel {
        match self {
            Param::Pi1 | Param::Turnover | Param::FossilSampling => Kernel::Window(self),
            _ => Kernel::Scale(self),
        }
    }
}

impl std::str::FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown parameter `{s}`"))
    }
}

/// Relative proposal weights per kernel family. Under the fossilized
/// birth-death prior the ancestor toggle's weight is taken from topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalWeights {
    pub topology: f64,
    pub node_ages: f64,
    pub tip_ages: f64,
    pub scalars: f64,
    pub branch_rates: f64,
    pub ancestor_toggle: f64,
}

impl Default for ProposalWeights {
    fn default() -> Self {
        ProposalWeights {
            topology: 30.0,
            node_ages: 30.0,
            tip_ages: 10.0,
            scalars: 20.0,
            branch_rates: 10.0,
            ancestor_toggle: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelStats {
    pub proposed: u64,
    pub accepted: u64,
    /// Current tuning parameter (scale or window width), if any.
    pub tuning: Option<f64>,
    window_proposed: u64,
    window_accepted: u64,
}

impl KernelStats {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Per-kernel proposal counts for one chain, plus swap counts for the run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProposalStats {
    pub kernels: Vec<(Kernel, KernelStats)>,
    pub swaps_proposed: u64,
    pub swaps_accepted: u64,
}

impl ProposalStats {
    pub fn report(&self) -> String {
        let mut out = format!("{:<28}{:>12}{:>12}{:>10}{:>12}\n", "kernel", "proposed", "accepted", "rate", "tuning");
        for (k, s) in &self.kernels {
            out.push_str(&format!(
                "{:<28}{:>12}{:>12}{:>10.3}{:>12}\n",
                k.name(),
                s.proposed,
                s.accepted,
                s.acceptance(),
                s.tuning.map(|t| format!("{t:.4}")).unwrap_or_else(|| "-".into())
            ));
        }
        let rate = if self.swaps_proposed == 0 {
            0.0
        } else {
            self.swaps_accepted as f64 / self.swaps_proposed as f64
        };
        out.push_str(&format!(
            "{:<28}{:>12}{:>12}{:>10.3}{:>12}\n",
            "chain_swap", self.swaps_proposed, self.swaps_accepted, rate, "-"
        ));
        out
    }
}

/// Everything shared by the chains of one analysis.
#[derive(Debug, Clone)]
pub struct ChainContext {
    pub calibrations: Vec<CalibrationPrior>,
    pub root_bounds: (f64, f64),
    pub kernels: Vec<(Kernel, f64)>,
    total_weight: f64,
}

impl ChainContext {
    /// Builds the kernel set for the given prior. Fixed parameters get no
    /// kernel; `fix_topology` removes the topology moves.
    pub fn new(
        calibrations: Vec<CalibrationPrior>,
        root_bounds: (f64, f64),
        kind: TreePriorKind,
        weights: &ProposalWeights,
        fixed: &BTreeMap<Param, f64>,
        fix_topology: bool,
    ) -> Self {
        let mut families: Vec<(f64, Vec<Kernel>)> = Vec::new();
        let toggle = kind == TreePriorKind::Fbd && calibrations.iter().any(|c| c.min_age > 0.0);
        if !fix_topology {
            let w = if toggle {
                (weights.topology - weights.ancestor_toggle).max(0.0)
            } else {
                weights.topology
            };
            families.push((w, vec![Kernel::NarrowExchange, Kernel::Fnpr]));
        }
        let mut age_moves = vec![Kernel::NodeAgeSlide, Kernel::RootScale];
        if !fixed.contains_key(&Param::ClockRate) {
            age_moves.push(Kernel::ClockTree);
        }
        families.push((weights.node_ages, age_moves));
        if calibrations.iter().any(|c| !c.is_fixed()) {
            families.push((weights.tip_ages, vec![Kernel::TipAge]));
        }
        let scalars: Vec<Kernel> = Param::ALL
            .into_iter()
            .filter(|p| !fixed.contains_key(p))
            .filter(|p| match p {
                Param::PopSize => kind == TreePriorKind::Coalescent,
                Param::Diversification | Param::Turnover | Param::FossilSampling => {
                    kind == TreePriorKind::Fbd
                }
                _ => true,
            })
            .map(Param::kernel)
            .collect();
        families.push((weights.scalars, scalars));
        families.push((weights.branch_rates, vec![Kernel::BranchRate]));
        if toggle && !fix_topology {
            families.push((weights.ancestor_toggle, vec![Kernel::AncestorToggle]));
        }
        let kernels: Vec<(Kernel, f64)> = families
            .into_iter()
            .filter(|(w, ks)| *w > 0.0 && !ks.is_empty())
            .flat_map(|(w, ks)| {
                let each = w / ks.len() as f64;
                ks.into_iter().map(move |k| (k, each))
            })
            .collect();
        let total_weight = kernels.iter().map(|(_, w)| w).sum();
        ChainContext {
            calibrations,
            root_bounds,
            kernels,
            total_weight,
        }
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>() * self.total_weight;
        for (i, (_, w)) in self.kernels.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        self.kernels.len() - 1
    }

    pub fn log_prior(&self, model: &ModelState) -> Result<f64> {
        log_prior(model, &self.calibrations, self.root_bounds)
    }
}

/// One chain: model state, cached densities, heat and random stream.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub model: ModelState,
    pub log_likelihood: f64,
    pub log_prior: f64,
    /// Heat multiplier β applied to the log posterior; 1 for the cold chain.
    pub beta: f64,
    pub rng: ChaCha8Rng,
    pruner: Option<Pruner>,
    pub stats: Vec<KernelStats>,
}

impl ChainState {
    /// `patterns = None` runs on the prior alone (log-likelihood ≡ 0).
    pub fn new(
        model: ModelState,
        patterns: Option<Arc<PatternSet>>,
        beta: f64,
        rng: ChaCha8Rng,
        ctx: &ChainContext,
    ) -> Result<Self> {
        let mut pruner = patterns.map(|p| Pruner::new(p, model.tree.len()));
        let log_likelihood = match pruner.as_mut() {
            Some(p) => {
                let ll = p.evaluate(&model)?;
                p.commit();
                ll
            }
            None => 0.0,
        };
        let log_prior = ctx.log_prior(&model)?;
        if !(log_prior.is_finite() && log_likelihood.is_finite()) {
            return Err(ModelError::DegenerateParameters(format!(
                "starting state has log prior {log_prior} and log likelihood {log_likelihood}"
            )));
        }
        let stats = ctx
            .kernels
            .iter()
            .map(|(k, _)| KernelStats {
                tuning: k.initial_tuning(),
                ..Default::default()
            })
            .collect();
        Ok(ChainState {
            model,
            log_likelihood,
            log_prior,
            beta,
            rng,
            pruner,
            stats,
        })
    }

    pub fn log_posterior(&self) -> f64 {
        self.log_likelihood + self.log_prior
    }

    /// Recomputes both densities from scratch and compares them with the
    /// cached values.
    pub fn audit(&mut self, ctx: &ChainContext, tolerance: f64) -> Result<()> {
        let lp = ctx.log_prior(&self.model)?;
        let ll = match self.pruner.as_mut() {
            Some(p) => {
                p.invalidate();
                let ll = p.evaluate(&self.model)?;
                p.commit();
                ll
            }
            None => 0.0,
        };
        if (lp - self.log_prior).abs() > tolerance || (ll - self.log_likelihood).abs() > tolerance {
            return Err(ModelError::Numeric {
                node: self.model.tree.root(),
                reason: format!(
                    "cache audit failed: cached (lnL {}, lnP {}) vs fresh (lnL {ll}, lnP {lp})",
                    self.log_likelihood, self.log_prior
                ),
            });
        }
        self.log_prior = lp;
        self.log_likelihood = ll;
        Ok(())
    }

    fn swap_payload(&mut self, other: &mut ChainState) {
        std::mem::swap(&mut self.model, &mut other.model);
        std::mem::swap(&mut self.log_likelihood, &mut other.log_likelihood);
        std::mem::swap(&mut self.log_prior, &mut other.log_prior);
        std::mem::swap(&mut self.pruner, &mut other.pruner);
    }
}

/// One Metropolis-Hastings update with the kernel at index `k` of
/// `ctx.kernels`. Returns whether the proposal was accepted.
pub fn mh_step(chain: &mut ChainState, k: usize, ctx: &ChainContext) -> Result<bool> {
    let kernel = ctx.kernels[k].0;
    let backup = chain.model.clone();
    let tuning = chain.stats[k].tuning.unwrap_or(0.0);
    let mctx = MoveContext {
        calibrations: &ctx.calibrations,
    };
    let Some(log_hastings) = propose(kernel, &mut chain.model, tuning, &mctx, &mut chain.rng) else {
        chain.model = backup;
        return Ok(false);
    };
    chain.stats[k].proposed += 1;
    chain.stats[k].window_proposed += 1;

    let reject = |chain: &mut ChainState, backup: ModelState| {
        chain.model = backup;
        if let Some(p) = chain.pruner.as_mut() {
            p.rollback();
        }
        Ok(false)
    };
    if !(log_hastings > f64::NEG_INFINITY) || !chain.model.parameters_in_domain() {
        return reject(chain, backup);
    }
    let lp = ctx.log_prior(&chain.model)?;
    if lp == f64::NEG_INFINITY {
        return reject(chain, backup);
    }
    let ll = match chain.pruner.as_mut() {
        Some(p) => match p.evaluate(&chain.model) {
            Ok(v) => v,
            Err(ModelError::DegenerateTree(_)) => return reject(chain, backup),
            Err(e) => return Err(e),
        },
        None => 0.0,
    };
    let log_alpha =
        chain.beta * ((ll - chain.log_likelihood) + (lp - chain.log_prior)) + log_hastings;
    let u: f64 = chain.rng.random();
    if log_alpha.is_nan() || u.ln() >= log_alpha {
        return reject(chain, backup);
    }
    if let Some(p) = chain.pruner.as_mut() {
        p.commit();
    }
    chain.log_likelihood = ll;
    chain.log_prior = lp;
    chain.stats[k].accepted += 1;
    chain.stats[k].window_accepted += 1;
    Ok(true)
}

const TUNE_WINDOW: u64 = 50;
const TARGET_ACCEPTANCE: f64 = 0.3;

fn tune(stats: &mut KernelStats, kernel: Kernel) {
    if stats.window_proposed < TUNE_WINDOW {
        return;
    }
    if let Some(t) = stats.tuning.as_mut() {
        let rate = stats.window_accepted as f64 / stats.window_proposed as f64;
        let (lo, hi) = kernel.tuning_range();
        *t = if rate > TARGET_ACCEPTANCE { *t * 1.2 } else { *t / 1.2 }.clamp(lo, hi);
    }
    stats.window_proposed = 0;
    stats.window_accepted = 0;
}

/// Temperatures β_i = 1 / (1 + Δ·i).
pub fn heats(n_chains: usize, delta: f64) -> Vec<f64> {
    (0..n_chains).map(|i| 1.0 / (1.0 + delta * i as f64)).collect()
}

/// Indices of iterations recorded with thinning `thin`, including state 0.
pub fn is_recorded(iteration: u64, thin: u64) -> bool {
    iteration % thin == 0
}

/// Inputs of an analysis beyond the run configuration.
#[derive(Debug, Clone)]
pub struct McmcSetup {
    pub config: RunConfig,
    pub taxa: TaxonSet,
    /// Starting tree shared by all runs; random per run when absent.
    pub start_tree: Option<TimeTree>,
}

/// Recorded output of one independent run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<TraceSample>,
    pub trees: Vec<(u64, TimeTree)>,
    pub stats: ProposalStats,
}

/// Console progress at a print interval.
#[derive(Debug, Clone)]
pub struct Progress {
    pub iteration: u64,
    pub cold_log_likelihoods: Vec<f64>,
    pub asdsf: Option<f64>,
}

struct Run {
    chains: Vec<ChainState>,
    swap_rng: ChaCha8Rng,
    samples: Vec<TraceSample>,
    trees: Vec<(u64, TimeTree)>,
    swaps_proposed: u64,
    swaps_accepted: u64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Extant sampling fraction ρ = (extant taxa in the data) / N.
pub fn sampling_fraction(taxa: &TaxonSet, n_extant_family: usize) -> Result<f64> {
    let n = taxa.iter().filter(|t| t.calibration.is_extant()).count();
    if n == 0 || n > n_extant_family {
        return Err(ModelError::Usage(format!(
            "{n} extant taxa in the data but n_extant_family = {n_extant_family}"
        )));
    }
    Ok(n as f64 / n_extant_family as f64)
}

/// Starting model for one run.
pub fn initial_state<R: Rng + ?Sized>(setup: &McmcSetup, rng: &mut R) -> Result<ModelState> {
    let cfg = &setup.config;
    let cals = setup.taxa.calibrations();
    let fixed = |p: Param, default: f64| cfg.fixed.get(&p).copied().unwrap_or(default);
    let pop_size = fixed(Param::PopSize, 1000.0);
    let tree = match &setup.start_tree {
        Some(t) => t.clone(),
        None => {
            let tip_ages: Vec<f64> = cals.iter().map(CalibrationPrior::midpoint).collect();
            let oldest = tip_ages.iter().copied().fold(0.0, f64::max);
            let root = if cfg.tree_prior.conditions_on_root() {
                let (lo, hi) = cfg.root_bounds;
                let base = lo.max(oldest);
                base + 0.2 * (hi - base).max(1.0)
            } else {
                oldest + 2.0 * pop_size
            };
            TimeTree::random(&tip_ages, root, rng)?
        }
    };
    let prior_params = match cfg.tree_prior {
        TreePriorKind::Coalescent => PriorParams::Coalescent(CoalescentParams { pop_size }),
        TreePriorKind::Fbd => PriorParams::Fbd(FbdParams {
            diversification: fixed(Param::Diversification, 1e-3),
            turnover: fixed(Param::Turnover, 0.5),
            fossil_sampling: fixed(Param::FossilSampling, 0.5),
            rho: sampling_fraction(&setup.taxa, cfg.n_extant_family)?,
        }),
        TreePriorKind::Uniform => PriorParams::Uniform(UniformParams {
            root_bounds: cfg.root_bounds,
        }),
    };
    let mut model = ModelState::new(tree, prior_params);
    for (&p, &v) in &cfg.fixed {
        if let Some(slot) = param_slot(&mut model, p) {
            *slot = v;
        }
    }
    model.pi = [1.0 - model.pi[1], model.pi[1]];
    Ok(model)
}

fn record(run: &mut Run, iteration: u64) {
    let cold = &run.chains[0];
    run.samples.push(TraceSample {
        iteration,
        log_likelihood: cold.log_likelihood,
        log_prior: cold.log_prior,
        tree_height: cold.model.tree.root_age(),
        params: cold
            .model
            .scalars()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
    });
    run.trees.push((iteration, cold.model.tree.clone()));
}

fn advance(run: &mut Run, ctx: &ChainContext, cfg: &RunConfig, from: u64, to: u64) -> Result<()> {
    let tune_until = if cfg.tune {
        (cfg.burn_in * cfg.chain_length as f64) as u64
    } else {
        0
    };
    for it in from + 1..=to {
        for chain in run.chains.iter_mut() {
            let k = ctx.choose(&mut chain.rng);
            mh_step(chain, k, ctx)?;
            if it <= tune_until {
                tune(&mut chain.stats[k], ctx.kernels[k].0);
            }
        }
        if run.chains.len() > 1 {
            let n = run.chains.len();
            let i = run.swap_rng.random_range(0..n);
            let mut j = run.swap_rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (bi, bj) = (run.chains[i].beta, run.chains[j].beta);
            let (pi, pj) = (run.chains[i].log_posterior(), run.chains[j].log_posterior());
            let log_alpha = (bi - bj) * (pj - pi);
            run.swaps_proposed += 1;
            if run.swap_rng.random::<f64>().ln() < log_alpha {
                let (lo, hi) = (i.min(j), i.max(j));
                let (a, b) = run.chains.split_at_mut(hi);
                a[lo].swap_payload(&mut b[0]);
                run.swaps_accepted += 1;
            }
        }
        let cold = &run.chains[0];
        if !cold.log_posterior().is_finite() {
            return Err(ModelError::Numeric {
                node: cold.model.tree.root(),
                reason: format!(
                    "non-finite cold-chain posterior at iteration {it}: lnL {}, lnP {}, state {:?}",
                    cold.log_likelihood, cold.log_prior, cold.model
                ),
            });
        }
        if cfg.audit_every > 0 && it % cfg.audit_every == 0 {
            for chain in run.chains.iter_mut() {
                chain.audit(ctx, 1e-6)?;
            }
        }
        if is_recorded(it, cfg.thin) {
            record(run, it);
        }
    }
    Ok(())
}

/// Runs `n_runs` independent Metropolis-coupled analyses. `data = None`
/// samples from the prior. Runs advance in lockstep blocks of `print_every`
/// iterations so that split frequencies can be compared along the way; with
/// `threads > 1` the runs of a block execute in parallel. Each run owns its
/// random streams, so the output does not depend on the thread count.
pub fn run_mc3(
    setup: &McmcSetup,
    data: Option<&CognateMatrix>,
    threads: usize,
    progress: &mut dyn FnMut(&Progress),
) -> Result<Vec<RunOutput>> {
    let cfg = &setup.config;
    let cals = setup.taxa.calibrations();
    let ctx = ChainContext::new(
        cals,
        cfg.root_bounds,
        cfg.tree_prior,
        &cfg.weights,
        &cfg.fixed,
        cfg.fix_topology,
    );
    let patterns = match data {
        Some(m) if !cfg.prior_only => {
            if m.taxa() != setup.taxa.names().as_slice() {
                return Err(ModelError::Usage("data and taxon set disagree".into()));
            }
            Some(Arc::new(PatternSet::from_matrix(m, cfg.ascertainment)))
        }
        _ => None,
    };
    let betas = heats(cfg.n_chains, cfg.heat_delta);
    let mut runs = Vec::with_capacity(cfg.n_runs);
    for r in 0..cfg.n_runs as u64 {
        let mut init_rng = stream_rng(cfg.seed, 2_000_000 + r);
        let model = initial_state(setup, &mut init_rng)?;
        let chains = betas
            .iter()
            .enumerate()
            .map(|(c, &beta)| {
                ChainState::new(
                    model.clone(),
                    patterns.clone(),
                    beta,
                    stream_rng(cfg.seed, 1 + r * 1024 + c as u64),
                    &ctx,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut run = Run {
            chains,
            swap_rng: stream_rng(cfg.seed, 1_000_000 + r),
            samples: Vec::new(),
            trees: Vec::new(),
            swaps_proposed: 0,
            swaps_accepted: 0,
        };
        record(&mut run, 0);
        runs.push(run);
    }

    let block = if cfg.print_every > 0 {
        cfg.print_every
    } else {
        cfg.chain_length
    };
    let mut done = 0;
    while done < cfg.chain_length {
        let to = (done + block).min(cfg.chain_length);
        if threads > 1 && runs.len() > 1 {
            std::thread::scope(|s| {
                let handles: Vec<_> = runs
                    .iter_mut()
                    .map(|run| {
                        let ctx = &ctx;
                        s.spawn(move || advance(run, ctx, cfg, done, to))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("run thread panicked"))
                    .collect::<Result<Vec<()>>>()
            })?;
        } else {
            for run in runs.iter_mut() {
                advance(run, &ctx, cfg, done, to)?;
            }
        }
        done = to;
        if cfg.print_every > 0 {
            let tree_sets: Vec<Vec<TimeTree>> = runs
                .iter()
                .map(|r| r.trees.iter().map(|(_, t)| t.clone()).collect())
                .collect();
            progress(&Progress {
                iteration: done,
                cold_log_likelihoods: runs.iter().map(|r| r.chains[0].log_likelihood).collect(),
                asdsf: asdsf(&tree_sets, cfg.burn_in).ok(),
            });
        }
    }

    Ok(runs
        .into_iter()
        .map(|run| RunOutput {
            stats: ProposalStats {
                kernels: ctx
                    .kernels
                    .iter()
                    .map(|(k, _)| *k)
                    .zip(run.chains[0].stats.iter().copied())
                    .collect(),
                swaps_proposed: run.swaps_proposed,
                swaps_accepted: run.swaps_accepted,
            },
            samples: run.samples,
            trees: run.trees,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperatures_and_thinning() {
        let h = heats(3, 0.1);
        assert_eq!(h[0], 1.0);
        assert!((h[1] - 1.0 / 1.1).abs() < 1e-15);
        assert!((h[2] - 1.0 / 1.2).abs() < 1e-15);
        let recorded = (0..=1_000_000u64).filter(|&i| is_recorded(i, 1000)).count();
        assert_eq!(recorded, 1001);
    }

    #[test]
    fn param_names_round_trip() {
        for p in Param::ALL {
            assert_eq!(p.name().parse::<Param>().unwrap(), p);
        }
        assert!("beta".parse::<Param>().is_err());
    }

    #[test]
    fn kernel_set_follows_prior() {
        let cals = vec![
            CalibrationPrior::EXTANT,
            CalibrationPrior::new(100.0, 200.0).unwrap(),
        ];
        let w = ProposalWeights::default();
        let fbd = ChainContext::new(cals.clone(), (1.0, 2.0), TreePriorKind::Fbd, &w, &BTreeMap::new(), false);
        assert!(fbd.kernels.iter().any(|(k, _)| *k == Kernel::AncestorToggle));
        let topo: f64 = fbd
            .kernels
            .iter()
            .filter(|(k, _)| matches!(k, Kernel::NarrowExchange | Kernel::Fnpr))
            .map(|(_, w)| w)
            .sum();
        assert!((topo - 25.0).abs() < 1e-12);
        let mut fixed = BTreeMap::new();
        fixed.insert(Param::Alpha, 1.0);
        let uni = ChainContext::new(cals, (1.0, 2.0), TreePriorKind::Uniform, &w, &fixed, true);
        assert!(uni.kernels.iter().all(|(k, _)| !matches!(
            k,
            Kernel::AncestorToggle | Kernel::NarrowExchange | Kernel::Fnpr | Kernel::Scale(Param::Alpha)
        )));
    }
}
