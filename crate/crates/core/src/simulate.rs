//! Forward simulation of dated trees and cognate matrices.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::clock::igr_shape_scale;
use crate::error::{ModelError, Result};
use crate::io::config::RunConfig;
use crate::io::matrix::{Cell, CognateMatrix};
use crate::likelihood::{discretize_gamma, transition_matrix, GAMMA_CATEGORIES};
use crate::mcmc::{run_mc3, McmcSetup, Param};
use crate::model::{BranchRates, ModelState, TreePriorKind};
use crate::tree::{CalibrationPrior, TaxonSet, TimeTree};

/// Size of the simulated problem and the generating parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub n_taxa: usize,
    pub n_fossils: usize,
    pub n_sites: usize,
    /// Half-width of each fossil's calibration window, in years.
    pub calibration_half_width: f64,
    /// Iterations of the prior-only chain that draws the tree.
    pub tree_iterations: u64,
    pub params: BTreeMap<Param, f64>,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        let params = [
            (Param::Alpha, 1.0),
            (Param::ClockRate, 1e-4),
            (Param::IgrVariance, 0.005),
            (Param::Pi1, 0.3),
            (Param::PopSize, 1500.0),
            (Param::Diversification, 7.5e-4),
            (Param::Turnover, 0.5),
            (Param::FossilSampling, 0.3),
        ]
        .into_iter()
        .collect();
        SimulationSpec {
            n_taxa: 8,
            n_fossils: 2,
            n_sites: 200,
            calibration_half_width: 100.0,
            tree_iterations: 20_000,
            params,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulated {
    pub taxa: TaxonSet,
    pub model: ModelState,
    pub matrix: CognateMatrix,
}

impl Simulated {
    pub fn tree(&self) -> &TimeTree {
        &self.model.tree
    }
}

/// Draws a tree from the configured prior (by a prior-only chain with the
/// generating parameters held fixed), branch rates from the relaxed clock
/// and characters from the F81 + Gamma process, keeping only columns with
/// at least one present cognate.
pub fn simulate(config: &RunConfig, spec: &SimulationSpec) -> Result<Simulated> {
    if spec.n_taxa < 2 || spec.n_fossils >= spec.n_taxa || spec.n_sites == 0 {
        return Err(ModelError::Usage(
            "need at least two taxa, one of them extant, and one site".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(3_000_000);

    let names: Vec<String> = (1..=spec.n_taxa).map(|i| format!("L{i:02}")).collect();
    let mut taxa = TaxonSet::new(names)?;
    let young = config.root_bounds.0;
    for i in spec.n_taxa - spec.n_fossils..spec.n_taxa {
        let centre = rng.random_range(0.1 * young..0.5 * young);
        let w = spec.calibration_half_width.min(0.5 * centre);
        taxa.set_calibration(i, CalibrationPrior::new(centre - w, centre + w)?);
    }

    let mut cfg = config.clone();
    cfg.prior_only = true;
    cfg.n_runs = 1;
    cfg.n_chains = 1;
    cfg.chain_length = spec.tree_iterations.max(1);
    cfg.thin = cfg.chain_length;
    cfg.print_every = 0;
    cfg.audit_every = 0;
    cfg.tune = false;
    cfg.fixed = spec.params.clone();
    cfg.fix_topology = false;
    let setup = McmcSetup {
        config: cfg,
        taxa: taxa.clone(),
        start_tree: None,
    };
    let out = run_mc3(&setup, None, 1, &mut |_| {})?;
    let tree = out[0].trees.last().unwrap().1.clone();

    let mut model = crate::mcmc::initial_state(&setup, &mut rng)?;
    model.tree = tree;
    model.branch_rates = BranchRates::ones(model.tree.len());
    for j in 0..model.tree.len() {
        if j == model.tree.root() || model.tree.is_sampled_ancestor(j) {
            continue;
        }
        let t = model.tree.branch_duration(j)?;
        let (shape, scale) = igr_shape_scale(t, model.clock_rate, model.igr_variance);
        let g = Gamma::new(shape, scale)
            .map_err(|e| ModelError::DegenerateParameters(e.to_string()))?;
        model.branch_rates.set(j, g.sample(&mut rng));
    }
    if config.tree_prior != TreePriorKind::Fbd {
        debug_assert_eq!(model.tree.sampled_ancestor_count(), 0);
    }

    let matrix = simulate_characters(&model, spec.n_sites, taxa.names(), &mut rng)?;
    Ok(Simulated {
        taxa,
        model,
        matrix,
    })
}

/// Characters under F81 + discrete Gamma on the model's tree, conditioned on
/// at least one present cell per column.
pub fn simulate_characters<R: Rng + ?Sized>(
    model: &ModelState,
    n_sites: usize,
    names: Vec<String>,
    rng: &mut R,
) -> Result<CognateMatrix> {
    let tree = &model.tree;
    let cats = discretize_gamma(model.alpha, GAMMA_CATEGORIES)?;
    let mut preorder = tree.postorder();
    preorder.reverse();
    let n = tree.n_tips();
    let mut rows = vec![Vec::with_capacity(n_sites); n];
    let mut states = vec![0u8; tree.len()];
    let mut accepted = 0;
    let mut attempts = 0usize;
    while accepted < n_sites {
        attempts += 1;
        if attempts > 1000 * n_sites + 1000 {
            return Err(ModelError::DegenerateParameters(
                "almost every simulated column is all-absent".into(),
            ));
        }
        let rate = cats.rates[rng.random_range(0..cats.rates.len())];
        for &id in &preorder {
            states[id] = match tree.parent(id) {
                None => u8::from(rng.random::<f64>() < model.pi[1]),
                Some(p) => {
                    let m = transition_matrix(model.pi, model.effective_length(id) * rate)?;
                    let from = states[p] as usize;
                    u8::from(rng.random::<f64>() < m.p[from][1])
                }
            };
        }
        if (0..n).all(|t| states[t] == 0) {
            continue;
        }
        for (t, row) in rows.iter_mut().enumerate() {
            row.push(if states[t] == 1 { Cell::Present } else { Cell::Absent });
        }
        accepted += 1;
    }
    CognateMatrix::new(names, rows).map_err(|e| ModelError::Usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64) -> RunConfig {
        RunConfig {
            seed,
            root_bounds: (4000.0, 8000.0),
            n_extant_family: 400,
            ..RunConfig::default()
        }
    }

    #[test]
    fn seeded_and_never_all_absent() {
        let spec = SimulationSpec {
            tree_iterations: 2000,
            ..SimulationSpec::default()
        };
        let a = simulate(&config(5), &spec).unwrap();
        let b = simulate(&config(5), &spec).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.model.tree, b.model.tree);
        assert_eq!(a.matrix.n_sites(), 200);
        for s in 0..a.matrix.n_sites() {
            assert!(a.matrix.column(s).contains(&Cell::Present));
        }
        let cals = a.taxa.calibrations();
        for (i, c) in cals.iter().enumerate() {
            assert!(c.contains(a.tree().age(i)));
        }
        let root = a.tree().root_age();
        assert!((4000.0..=8000.0).contains(&root), "{root}");
    }
}
