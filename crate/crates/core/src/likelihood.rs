//! Binary F81 likelihood with discrete-gamma rate variation, missing data and
//! correction for unobservable all-absent columns.
//!
//! Sites are compressed into unique patterns. [`Pruner`] keeps per-node
//! partial likelihoods in double buffers so that a proposal touching a few
//! branches only recomputes the nodes on the path to the root, and a rejected
//! proposal is undone by flipping buffers back.

use std::collections::HashMap;
use std::sync::Arc;

use statrs::function::gamma::gamma_lr;

use crate::error::{ModelError, Result};
use crate::io::matrix::{Cell, CognateMatrix};
use crate::model::ModelState;
use crate::tree::TimeTree;

pub const GAMMA_CATEGORIES: usize = 4;

/// Rescale a node's partials when their largest entry drops below this.
const SCALE_THRESHOLD: f64 = 1e-100;

/// 2×2 transition probabilities for one effective branch length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub p: [[f64; 2]; 2],
}

impl TransitionMatrix {
    pub const IDENTITY: TransitionMatrix = TransitionMatrix {
        p: [[1.0, 0.0], [0.0, 1.0]],
    };
}

/// F81 transition probabilities P_ij(ν) = π_j + (δ_ij − π_j)·exp(−βν) with
/// β = 1/(2π0π1), so that ν counts expected substitutions.
pub fn transition_matrix(pi: [f64; 2], nu: f64) -> Result<TransitionMatrix> {
    if !(nu >= 0.0) {
        return Err(ModelError::Usage(format!(
            "effective branch length must be non-negative, got {nu}"
        )));
    }
    Ok(f81(pi, nu))
}

#[inline]
fn f81(pi: [f64; 2], nu: f64) -> TransitionMatrix {
    let beta = 1.0 / (2.0 * pi[0] * pi[1]);
    let e = (-beta * nu).exp();
    let stay0 = pi[0] + pi[1] * e;
    let stay1 = pi[1] + pi[0] * e;
    TransitionMatrix {
        p: [[stay0, 1.0 - stay0], [1.0 - stay1, stay1]],
    }
}

/// Equal-weight rate categories of a mean-one gamma distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCategories {
    pub rates: Vec<f64>,
}

impl GammaCategories {
    pub fn weight(&self) -> f64 {
        1.0 / self.rates.len() as f64
    }
}

/// Mean-of-category discretization of Gamma(shape α, rate α) into `k`
/// equal-probability bins, renormalized so the rates average exactly one.
pub fn discretize_gamma(alpha: f64, k: usize) -> Result<GammaCategories> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::Usage(format!("gamma shape must be positive, got {alpha}")));
    }
    if k == 0 {
        return Err(ModelError::Usage("need at least one rate category".into()));
    }
    if k == 1 {
        return Ok(GammaCategories { rates: vec![1.0] });
    }
    // Bin boundaries on the mean-one scale; the mass of x·f(x) up to a
    // boundary q is P(α + 1, α q).
    let mut cum = Vec::with_capacity(k + 1);
    cum.push(0.0);
    for i in 1..k {
        let q = gamma_quantile(alpha, i as f64 / k as f64);
        cum.push(gamma_lr(alpha + 1.0, alpha * q));
    }
    cum.push(1.0);
    let mut rates: Vec<f64> = cum.windows(2).map(|w| (w[1] - w[0]) * k as f64).collect();
    let mean = rates.iter().sum::<f64>() / k as f64;
    for r in &mut rates {
        *r /= mean;
    }
    Ok(GammaCategories { rates })
}

/// Quantile of the mean-one gamma distribution by bisection on the
/// regularized incomplete gamma function.
fn gamma_quantile(alpha: f64, p: f64) -> f64 {
    let cdf = |x: f64| gamma_lr(alpha, alpha * x);
    let mut hi = 1.0;
    while cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// How the correction for unobservable columns is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AscertainmentMode {
    /// One all-absent column for the whole alignment. Taxa with no data at
    /// all are coded `?` in it.
    #[default]
    Global,
    /// One all-absent column per meaning block, with `?` for taxa missing in
    /// that block.
    PerBlock,
    /// No correction.
    None,
}

/// Unique site patterns with multiplicities, plus the all-absent patterns
/// used for the correction. Patterns are stored taxon-major.
#[derive(Debug, Clone)]
pub struct PatternSet {
    n_taxa: usize,
    cells: Vec<Cell>,
    weights: Vec<f64>,
    /// For each pattern, the index of the all-absent pattern that conditions it.
    correction: Vec<Option<usize>>,
}

impl PatternSet {
    pub fn from_matrix(matrix: &CognateMatrix, mode: AscertainmentMode) -> Self {
        let n_taxa = matrix.n_taxa();
        let mut set = PatternSet {
            n_taxa,
            cells: Vec::new(),
            weights: Vec::new(),
            correction: Vec::new(),
        };
        let mut index: HashMap<(Vec<Cell>, Option<usize>), usize> = HashMap::new();

        let zero_for = |missing: &dyn Fn(usize) -> bool| -> Vec<Cell> {
            (0..n_taxa)
                .map(|t| if missing(t) { Cell::Missing } else { Cell::Absent })
                .collect()
        };
        let mut zero_index: HashMap<Vec<Cell>, usize> = HashMap::new();
        let mut add_zero = |set: &mut PatternSet, col: Vec<Cell>| -> usize {
            *zero_index.entry(col.clone()).or_insert_with(|| set.push(col, 0.0, None))
        };

        let global = match mode {
            AscertainmentMode::Global => {
                let fully = matrix.fully_missing();
                Some(add_zero(&mut set, zero_for(&|t| fully[t])))
            }
            _ => None,
        };
        let mut block_zero: HashMap<usize, usize> = HashMap::new();
        for s in 0..matrix.n_sites() {
            let corr = match mode {
                AscertainmentMode::Global => global,
                AscertainmentMode::None => None,
                AscertainmentMode::PerBlock => {
                    let b = matrix.site_block()[s];
                    let z = match block_zero.get(&b) {
                        Some(&z) => z,
                        None => {
                            let sites: Vec<usize> = (0..matrix.n_sites())
                                .filter(|&j| matrix.site_block()[j] == b)
                                .collect();
                            let missing = |t: usize| {
                                sites.iter().all(|&j| matrix.cell(t, j) == Cell::Missing)
                            };
                            let z = add_zero(&mut set, zero_for(&missing));
                            block_zero.insert(b, z);
                            z
                        }
                    };
                    Some(z)
                }
            };
            let col = matrix.column(s);
            match index.get(&(col.clone(), corr)) {
                Some(&p) => set.weights[p] += 1.0,
                None => {
                    let p = set.push(col.clone(), 1.0, corr);
                    index.insert((col, corr), p);
                }
            }
        }
        set
    }

    /// A single column, conditioned on the all-absent column when `corrected`.
    pub fn from_column(column: &[Cell], corrected: bool) -> Self {
        let n_taxa = column.len();
        let mut set = PatternSet {
            n_taxa,
            cells: Vec::new(),
            weights: Vec::new(),
            correction: Vec::new(),
        };
        let corr = corrected.then(|| set.push(vec![Cell::Absent; n_taxa], 0.0, None));
        set.push(column.to_vec(), 1.0, corr);
        set
    }

    fn push(&mut self, col: Vec<Cell>, weight: f64, correction: Option<usize>) -> usize {
        debug_assert_eq!(col.len(), self.n_taxa);
        self.cells.extend(col);
        self.weights.push(weight);
        self.correction.push(correction);
        self.weights.len() - 1
    }

    pub fn n_patterns(&self) -> usize {
        self.weights.len()
    }

    pub fn n_taxa(&self) -> usize {
        self.n_taxa
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell(&self, pattern: usize, taxon: usize) -> Cell {
        self.cells[pattern * self.n_taxa + taxon]
    }
}

/// Incremental pruning engine for one chain.
#[derive(Debug, Clone)]
pub struct Pruner {
    patterns: Arc<PatternSet>,
    n_pat: usize,
    /// Per node, two buffers of `n_pat × K × 2` partials.
    partials: Vec<[Vec<f64>; 2]>,
    /// Per node, two buffers of cumulative log scale factors per pattern.
    scales: Vec<[Vec<f64>; 2]>,
    scaled: Vec<[bool; 2]>,
    current: Vec<usize>,
    /// Per tip, per pattern, the state vector of its cell.
    tip_vectors: Vec<Vec<[f64; 2]>>,
    cache: Option<Snapshot>,
    pending: Option<Snapshot>,
    flipped: Vec<usize>,
    gamma: Option<(f64, GammaCategories)>,
    pattern_ll: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Snapshot {
    pi: [f64; 2],
    alpha: f64,
    nu: Vec<f64>,
    children: Vec<[usize; 2]>,
}

const NO_CHILD: usize = usize::MAX;

impl Pruner {
    pub fn new(patterns: Arc<PatternSet>, n_nodes: usize) -> Self {
        let n_pat = patterns.n_patterns();
        let width = n_pat * GAMMA_CATEGORIES * 2;
        let n_tips = patterns.n_taxa();
        let tip_vectors = (0..n_tips)
            .map(|t| {
                (0..n_pat)
                    .map(|p| match patterns.cell(p, t) {
                        Cell::Absent => [1.0, 0.0],
                        Cell::Present => [0.0, 1.0],
                        Cell::Missing => [1.0, 1.0],
                    })
                    .collect()
            })
            .collect();
        Pruner {
            patterns,
            n_pat,
            partials: (0..n_nodes)
                .map(|i| {
                    if i < n_tips {
                        [Vec::new(), Vec::new()]
                    } else {
                        [vec![0.0; width], vec![0.0; width]]
                    }
                })
                .collect(),
            scales: (0..n_nodes)
                .map(|i| {
                    if i < n_tips {
                        [Vec::new(), Vec::new()]
                    } else {
                        [vec![0.0; n_pat], vec![0.0; n_pat]]
                    }
                })
                .collect(),
            scaled: vec![[false; 2]; n_nodes],
            current: vec![0; n_nodes],
            tip_vectors,
            cache: None,
            pending: None,
            flipped: Vec::new(),
            gamma: None,
            pattern_ll: vec![0.0; n_pat],
        }
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    /// Uncorrected log-likelihood of every pattern from the last evaluation.
    pub fn pattern_log_likelihoods(&self) -> &[f64] {
        &self.pattern_ll
    }

    /// Forgets all cached partials so the next evaluation is from scratch.
    pub fn invalidate(&mut self) {
        self.rollback();
        self.cache = None;
    }

    /// Evaluates the corrected log-likelihood of `state`. The result stays
    /// pending until [`commit`](Self::commit) or [`rollback`](Self::rollback).
    pub fn evaluate(&mut self, state: &ModelState) -> Result<f64> {
        self.rollback();
        let tree = &state.tree;
        if tree.n_tips() != self.patterns.n_taxa() {
            return Err(ModelError::Usage(format!(
                "tree has {} tips but the data has {} taxa",
                tree.n_tips(),
                self.patterns.n_taxa()
            )));
        }
        if !(state.pi[0] > 0.0 && state.pi[1] > 0.0) {
            return Err(ModelError::Usage("stationary frequencies must be positive".into()));
        }
        let n_nodes = tree.len();
        let mut nu = vec![0.0; n_nodes];
        let mut children = vec![[NO_CHILD; 2]; n_nodes];
        for id in 0..n_nodes {
            if id != tree.root() {
                let v = state.effective_length(id);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ModelError::Numeric {
                        node: id,
                        reason: format!("effective branch length {v}"),
                    });
                }
                nu[id] = v;
            }
            let ch = tree.children(id);
            if ch.len() == 2 {
                children[id] = [ch[0], ch[1]];
            } else if !ch.is_empty() {
                return Err(ModelError::Usage(format!(
                    "node {id} has {} children",
                    ch.len()
                )));
            }
        }

        if self.gamma.as_ref().is_none_or(|(a, _)| *a != state.alpha) {
            self.gamma = Some((state.alpha, discretize_gamma(state.alpha, GAMMA_CATEGORIES)?));
        }
        let rates = self.gamma.as_ref().unwrap().1.rates.clone();

        let full = match &self.cache {
            None => true,
            Some(c) => c.pi != state.pi || c.alpha != state.alpha || c.nu.len() != n_nodes,
        };
        let mut dirty = vec![false; n_nodes];
        for id in tree.postorder() {
            if tree.is_tip(id) {
                continue;
            }
            let [a, b] = children[id];
            let changed = full || {
                let c = self.cache.as_ref().unwrap();
                c.children[id] != children[id]
                    || c.nu[a] != nu[a]
                    || c.nu[b] != nu[b]
                    || dirty[a]
                    || dirty[b]
            };
            if changed {
                dirty[id] = true;
                let target = 1 - self.current[id];
                self.update_node(id, [a, b], &nu, state.pi, &rates, target, tree)?;
                self.current[id] = target;
                self.flipped.push(id);
            }
        }

        self.pending = Some(Snapshot {
            pi: state.pi,
            alpha: state.alpha,
            nu,
            children,
        });
        self.root_likelihoods(tree, state.pi, &rates)?;
        self.corrected_total()
    }

    pub fn commit(&mut self) {
        if let Some(s) = self.pending.take() {
            self.cache = Some(s);
        }
        self.flipped.clear();
    }

    pub fn rollback(&mut self) {
        for &id in &self.flipped {
            self.current[id] = 1 - self.current[id];
        }
        self.flipped.clear();
        self.pending = None;
    }

    #[allow(clippy::too_many_arguments)]
    fn update_node(
        &mut self,
        id: usize,
        kids: [usize; 2],
        nu: &[f64],
        pi: [f64; 2],
        rates: &[f64],
        target: usize,
        tree: &TimeTree,
    ) -> Result<()> {
        let k = rates.len();
        let n_pat = self.n_pat;
        let mats: Vec<[TransitionMatrix; GAMMA_CATEGORIES]> = kids
            .iter()
            .map(|&c| {
                let mut m = [TransitionMatrix::IDENTITY; GAMMA_CATEGORIES];
                if nu[c] > 0.0 {
                    for (j, r) in rates.iter().enumerate() {
                        m[j] = f81(pi, nu[c] * r);
                    }
                }
                m
            })
            .collect();

        let mut out = std::mem::take(&mut self.partials[id][target]);
        let mut out_scale = std::mem::take(&mut self.scales[id][target]);
        let mut any_scaled = false;
        for &c in &kids {
            if !tree.is_tip(c) && self.scaled[c][self.current[c]] {
                any_scaled = true;
            }
        }
        if any_scaled {
            out_scale.iter_mut().for_each(|s| *s = 0.0);
            for &c in &kids {
                if !tree.is_tip(c) && self.scaled[c][self.current[c]] {
                    let cs = &self.scales[c][self.current[c]];
                    for (o, s) in out_scale.iter_mut().zip(cs) {
                        *o += s;
                    }
                }
            }
        }

        for p in 0..n_pat {
            let base = p * k * 2;
            let mut max = 0.0f64;
            for j in 0..k {
                let mut acc = [1.0, 1.0];
                for (ci, &c) in kids.iter().enumerate() {
                    let v = if tree.is_tip(c) {
                        self.tip_vectors[c][p]
                    } else {
                        let buf = &self.partials[c][self.current[c]];
                        [buf[base + 2 * j], buf[base + 2 * j + 1]]
                    };
                    let m = &mats[ci][j].p;
                    acc[0] *= m[0][0] * v[0] + m[0][1] * v[1];
                    acc[1] *= m[1][0] * v[0] + m[1][1] * v[1];
                }
                out[base + 2 * j] = acc[0];
                out[base + 2 * j + 1] = acc[1];
                max = max.max(acc[0]).max(acc[1]);
            }
            if !max.is_finite() {
                self.partials[id][target] = out;
                self.scales[id][target] = out_scale;
                return Err(ModelError::Numeric {
                    node: id,
                    reason: format!("partial likelihood {max}"),
                });
            }
            if max < SCALE_THRESHOLD && max > 0.0 {
                if !any_scaled {
                    out_scale.iter_mut().for_each(|s| *s = 0.0);
                    any_scaled = true;
                }
                for x in &mut out[base..base + 2 * k] {
                    *x /= max;
                }
                out_scale[p] += max.ln();
            }
        }
        self.partials[id][target] = out;
        self.scales[id][target] = out_scale;
        self.scaled[id][target] = any_scaled;
        Ok(())
    }

    fn root_likelihoods(&mut self, tree: &TimeTree, pi: [f64; 2], rates: &[f64]) -> Result<()> {
        let root = tree.root();
        let k = rates.len();
        let w = 1.0 / k as f64;
        for p in 0..self.n_pat {
            let (l, scale) = if tree.is_tip(root) {
                let v = self.tip_vectors[root][p];
                (pi[0] * v[0] + pi[1] * v[1], 0.0)
            } else {
                let buf = &self.partials[root][self.current[root]];
                let base = p * k * 2;
                let mut l = 0.0;
                for j in 0..k {
                    l += w * (pi[0] * buf[base + 2 * j] + pi[1] * buf[base + 2 * j + 1]);
                }
                let scale = if self.scaled[root][self.current[root]] {
                    self.scales[root][self.current[root]][p]
                } else {
                    0.0
                };
                (l, scale)
            };
            let ll = l.ln() + scale;
            if ll.is_nan() {
                return Err(ModelError::Numeric {
                    node: root,
                    reason: "site likelihood is NaN".into(),
                });
            }
            self.pattern_ll[p] = ll;
        }
        Ok(())
    }

    fn corrected_total(&self) -> Result<f64> {
        let mut total = 0.0;
        for p in 0..self.n_pat {
            let w = self.patterns.weights[p];
            if w == 0.0 {
                continue;
            }
            let mut term = self.pattern_ll[p];
            if let Some(z) = self.patterns.correction[p] {
                let l0 = self.pattern_ll[z].exp();
                if l0 >= 1.0 - 1e-15 {
                    return Err(ModelError::DegenerateTree(l0));
                }
                term -= (-l0).ln_1p();
            }
            total += w * term;
        }
        Ok(total)
    }
}

/// Uncorrected log-likelihood of one column on `state.tree`.
pub fn site_log_likelihood(state: &ModelState, column: &[Cell]) -> Result<f64> {
    let patterns = Arc::new(PatternSet::from_column(column, false));
    let mut pruner = Pruner::new(patterns, state.tree.len());
    pruner.evaluate(state)
}

/// Log-likelihood of the whole matrix with the correction for unobservable
/// all-absent columns.
pub fn alignment_log_likelihood(
    state: &ModelState,
    matrix: &CognateMatrix,
    mode: AscertainmentMode,
) -> Result<f64> {
    let patterns = Arc::new(PatternSet::from_matrix(matrix, mode));
    let mut pruner = Pruner::new(patterns, state.tree.len());
    pruner.evaluate(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PriorParams, UniformParams};

    fn state_for(tree: TimeTree) -> ModelState {
        let mut s = ModelState::new(
            tree,
            PriorParams::Uniform(UniformParams {
                root_bounds: (0.0, 1e9),
            }),
        );
        s.clock_rate = 1.0;
        s
    }

    #[test]
    fn zero_length_is_identity() {
        let m = transition_matrix([0.3, 0.7], 0.0).unwrap();
        assert_eq!(m, TransitionMatrix::IDENTITY);
        assert!(transition_matrix([0.3, 0.7], -1.0).is_err());
    }

    #[test]
    fn long_branches_reach_stationarity() {
        let m = transition_matrix([0.3, 0.7], 1e6).unwrap();
        for row in m.p {
            assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_rates_average_one() {
        for alpha in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let g = discretize_gamma(alpha, 4).unwrap();
            let mean = g.rates.iter().sum::<f64>() / 4.0;
            assert!((mean - 1.0).abs() < 1e-9);
            assert!(g.rates.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(discretize_gamma(0.0, 4).is_err());
        assert!(discretize_gamma(-1.0, 4).is_err());
    }

    #[test]
    fn single_tip_is_its_stationary_frequency() {
        let tree = TimeTree::from_edges(1, &[0.0], &[], &[]).unwrap();
        let mut s = state_for(tree);
        s.pi = [0.3, 0.7];
        let ll = site_log_likelihood(&s, &[Cell::Present]).unwrap();
        assert!((ll - 0.7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn missing_data_is_uninformative() {
        let tree = TimeTree::from_edges(2, &[0.0, 0.0, 1.0], &[(0, 2), (1, 2)], &[]).unwrap();
        let s = state_for(tree);
        let ll = site_log_likelihood(&s, &[Cell::Missing, Cell::Missing]).unwrap();
        assert!(ll.abs() < 1e-15);
    }

    #[test]
    fn zero_length_tree_with_present_column() {
        let tree = TimeTree::from_edges(2, &[0.0, 0.0, 1.0], &[(0, 2), (1, 2)], &[]).unwrap();
        let mut s = state_for(tree);
        s.clock_rate = 1e-300;
        s.pi = [0.5, 0.5];
        let m = CognateMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![Cell::Present], vec![Cell::Present]],
        )
        .unwrap();
        let ll = alignment_log_likelihood(&s, &m, AscertainmentMode::Global).unwrap();
        assert!(ll.abs() < 1e-12);
    }

    #[test]
    fn degenerate_frequencies_are_reported() {
        let tree = TimeTree::from_edges(2, &[0.0, 0.0, 1.0], &[(0, 2), (1, 2)], &[]).unwrap();
        let mut s = state_for(tree);
        s.pi = [1.0 - 1e-17, 1e-17];
        let m = CognateMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![Cell::Present], vec![Cell::Absent]],
        )
        .unwrap();
        let e = alignment_log_likelihood(&s, &m, AscertainmentMode::Global).unwrap_err();
        assert!(matches!(e, ModelError::DegenerateTree(_)), "{e:?}");
    }

    #[test]
    fn incremental_matches_fresh_and_rollback_restores() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let tree = TimeTree::random(&[0.0; 6], 1.0, &mut rng).unwrap();
        let mut s = state_for(tree);
        let rows: Vec<Vec<Cell>> = (0..6)
            .map(|t| (0..30).map(|j| if (t * 7 + j * 3) % 5 < 2 { Cell::Present } else { Cell::Absent }).collect())
            .collect();
        let m = CognateMatrix::new((0..6).map(|i| format!("t{i}")).collect(), rows).unwrap();
        let patterns = Arc::new(PatternSet::from_matrix(&m, AscertainmentMode::Global));
        let mut pruner = Pruner::new(patterns, s.tree.len());
        let base = pruner.evaluate(&s).unwrap();
        pruner.commit();

        let mut moved = s.clone();
        let node = (6..11).find(|&i| i != moved.tree.root()).unwrap();
        let lo = moved.tree.children(node).iter().map(|&c| moved.tree.age(c)).fold(0.0, f64::max);
        let hi = moved.tree.age(moved.tree.parent(node).unwrap());
        moved.tree.set_age(node, 0.5 * (lo + hi));
        let inc = pruner.evaluate(&moved).unwrap();
        let fresh = alignment_log_likelihood(&moved, &m, AscertainmentMode::Global).unwrap();
        assert!((inc - fresh).abs() < 1e-12);
        pruner.rollback();
        let again = pruner.evaluate(&s).unwrap();
        assert_eq!(again, base);
        pruner.commit();
        s.branch_rates.set(0, 1.7);
        let inc = pruner.evaluate(&s).unwrap();
        let fresh = alignment_log_likelihood(&s, &m, AscertainmentMode::Global).unwrap();
        assert!((inc - fresh).abs() < 1e-12);
    }
}
