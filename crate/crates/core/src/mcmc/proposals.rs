//! Proposal kernels. Each kernel mutates the model in place and returns the
//! log Hastings ratio (including any Jacobian), or `None` when it has no
//! valid move from the current state. A return of `-inf` forces rejection.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::clock::{igr_branch_log_density, igr_shape_scale};
use crate::model::{ModelState, PriorParams};
use crate::tree::{CalibrationPrior, NodeId, TimeTree};

use super::Param;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kernel {
    NodeAgeSlide,
    RootScale,
    TipAge,
    NarrowExchange,
    Fnpr,
    Scale(Param),
    Window(Param),
    ClockTree,
    BranchRate,
    AncestorToggle,
}

impl Kernel {
    pub fn name(&self) -> String {
        match self {
            Kernel::NodeAgeSlide => "node_age_slide".into(),
            Kernel::RootScale => "root_scale".into(),
            Kernel::TipAge => "tip_age".into(),
            Kernel::NarrowExchange => "narrow_exchange".into(),
            Kernel::Fnpr => "fnpr".into(),
            Kernel::Scale(p) => format!("scale({})", p.name()),
            Kernel::Window(p) => format!("window({})", p.name()),
            Kernel::ClockTree => "clock_tree".into(),
            Kernel::BranchRate => "branch_rate".into(),
            Kernel::AncestorToggle => "ancestor_toggle".into(),
        }
    }

    /// Initial value of the tuning parameter, if the kernel has one.
    pub fn initial_tuning(&self) -> Option<f64> {
        match self {
            Kernel::RootScale => Some(0.5),
            Kernel::Scale(_) => Some(1.0),
            Kernel::Window(_) => Some(0.2),
            Kernel::ClockTree => Some(0.3),
            Kernel::BranchRate => Some(0.5),
            _ => None,
        }
    }

    pub fn tuning_range(&self) -> (f64, f64) {
        match self {
            Kernel::Window(_) => (1e-4, 1.0),
            _ => (1e-3, 10.0),
        }
    }
}

pub(crate) struct MoveContext<'a> {
    pub calibrations: &'a [CalibrationPrior],
}

pub(crate) fn propose<R: Rng + ?Sized>(
    kernel: Kernel,
    state: &mut ModelState,
    tuning: f64,
    ctx: &MoveContext,
    rng: &mut R,
) -> Option<f64> {
    match kernel {
        Kernel::NodeAgeSlide => node_age_slide(&mut state.tree, rng),
        Kernel::RootScale => root_scale(&mut state.tree, tuning, rng),
        Kernel::TipAge => tip_age(&mut state.tree, ctx.calibrations, rng),
        Kernel::NarrowExchange => narrow_exchange(&mut state.tree, rng),
        Kernel::Fnpr => fnpr(&mut state.tree, rng),
        Kernel::Scale(p) => scale_param(state, p, tuning, rng),
        Kernel::Window(p) => window_param(state, p, tuning, rng),
        Kernel::ClockTree => clock_tree(state, tuning, rng),
        Kernel::BranchRate => branch_rate(state, tuning, rng),
        Kernel::AncestorToggle => ancestor_toggle(state, ctx.calibrations, rng),
    }
}

fn multiplier<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    (lambda * (rng.random::<f64>() - 0.5)).exp()
}

fn max_child_age(tree: &TimeTree, id: NodeId) -> f64 {
    tree.children(id)
        .iter()
        .map(|&c| tree.age(c))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Every branch has non-negative duration, and only sampled-ancestor
/// branches have zero duration.
pub(crate) fn ages_consistent(tree: &TimeTree) -> bool {
    (0..tree.len()).all(|id| match tree.parent(id) {
        None => true,
        Some(p) => {
            let d = tree.age(p) - tree.age(id);
            if tree.is_sampled_ancestor(id) {
                d == 0.0
            } else {
                d > 0.0
            }
        }
    })
}

fn node_age_slide<R: Rng + ?Sized>(tree: &mut TimeTree, rng: &mut R) -> Option<f64> {
    let candidates: Vec<NodeId> = (tree.n_tips()..tree.len())
        .filter(|&id| id != tree.root() && !tree.is_ancestor_attachment(id))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let id = candidates[rng.random_range(0..candidates.len())];
    let lo = max_child_age(tree, id);
    let hi = tree.age(tree.parent(id).unwrap());
    tree.set_age(id, rng.random_range(lo..hi));
    if tree.age(id) <= lo {
        return Some(f64::NEG_INFINITY);
    }
    Some(0.0)
}

fn root_scale<R: Rng + ?Sized>(tree: &mut TimeTree, lambda: f64, rng: &mut R) -> Option<f64> {
    let root = tree.root();
    let lo = max_child_age(tree, root);
    let m = multiplier(lambda, rng);
    tree.set_age(root, lo + (tree.age(root) - lo) * m);
    Some(m.ln())
}

fn tip_age<R: Rng + ?Sized>(
    tree: &mut TimeTree,
    calibrations: &[CalibrationPrior],
    rng: &mut R,
) -> Option<f64> {
    let candidates: Vec<NodeId> = (0..tree.n_tips())
        .filter(|&i| !calibrations[i].is_fixed())
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let i = candidates[rng.random_range(0..candidates.len())];
    let c = calibrations[i];
    let age = rng.random_range(c.min_age..=c.max_age);
    tree.set_age(i, age);
    if tree.is_sampled_ancestor(i) {
        tree.set_age(tree.parent(i).unwrap(), age);
    }
    if !ages_consistent(tree) {
        return Some(f64::NEG_INFINITY);
    }
    Some(0.0)
}

/// Pairs (i, u) where i can be exchanged with its uncle u.
fn exchange_pairs(tree: &TimeTree) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for i in 0..tree.len() {
        let Some(p) = tree.parent(i) else { continue };
        if p == tree.root() || tree.is_sampled_ancestor(i) || tree.is_ancestor_attachment(p) {
            continue;
        }
        let u = tree.sibling(p).unwrap();
        if tree.is_sampled_ancestor(u) || tree.age(u) >= tree.age(p) {
            continue;
        }
        out.push((i, u));
    }
    out
}

fn narrow_exchange<R: Rng + ?Sized>(tree: &mut TimeTree, rng: &mut R) -> Option<f64> {
    let pairs = exchange_pairs(tree);
    if pairs.is_empty() {
        return None;
    }
    let (i, u) = pairs[rng.random_range(0..pairs.len())];
    swap_subtrees(tree, i, u);
    let back = exchange_pairs(tree).len();
    Some((pairs.len() as f64).ln() - (back as f64).ln())
}

/// Exchanges the positions of two nodes that are not ancestral to each other.
pub(crate) fn swap_subtrees(tree: &mut TimeTree, a: NodeId, b: NodeId) {
    let pa = tree.parent(a).unwrap();
    let pb = tree.parent(b).unwrap();
    tree.replace_child(pa, a, b);
    tree.replace_child(pb, b, a);
}

fn prunable(tree: &TimeTree) -> Vec<NodeId> {
    (0..tree.len())
        .filter(|&i| {
            let Some(p) = tree.parent(i) else { return false };
            !tree.is_sampled_ancestor(i) && p != tree.root() && !tree.is_ancestor_attachment(p)
        })
        .collect()
}

fn in_subtree(tree: &TimeTree, mut x: NodeId, top: NodeId) -> bool {
    loop {
        if x == top {
            return true;
        }
        match tree.parent(x) {
            Some(p) => x = p,
            None => return false,
        }
    }
}

fn fnpr<R: Rng + ?Sized>(tree: &mut TimeTree, rng: &mut R) -> Option<f64> {
    let before = prunable(tree);
    if before.is_empty() {
        return None;
    }
    let i = before[rng.random_range(0..before.len())];
    let p = tree.parent(i).unwrap();
    let s = tree.sibling(i).unwrap();
    let g = tree.parent(p).unwrap();
    let h = tree.age(p);

    // Prune: the sibling takes p's place below g.
    tree.replace_child(g, p, s);
    tree.set_parent(p, None);

    let targets: Vec<NodeId> = (0..tree.len())
        .filter(|&x| {
            if x == p || x == i || tree.is_sampled_ancestor(x) || in_subtree(tree, x, i) {
                return false;
            }
            match tree.parent(x) {
                Some(px) => tree.age(x) < h && h < tree.age(px),
                None => false,
            }
        })
        .collect();
    // The original edge above s always qualifies.
    let x = targets[rng.random_range(0..targets.len())];
    let px = tree.parent(x).unwrap();
    tree.replace_child(px, x, p);
    tree.set_children(p, vec![i, x]);
    tree.set_parent(x, Some(p));
    tree.set_parent(i, Some(p));

    let after = prunable(tree).len();
    Some((before.len() as f64).ln() - (after as f64).ln())
}

fn scale_param<R: Rng + ?Sized>(
    state: &mut ModelState,
    param: Param,
    lambda: f64,
    rng: &mut R,
) -> Option<f64> {
    let m = multiplier(lambda, rng);
    let slot = param_slot(state, param)?;
    *slot *= m;
    Some(m.ln())
}

fn reflect_unit(mut x: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > 1.0 {
            x = 2.0 - x;
        } else {
            return x;
        }
    }
}

fn window_param<R: Rng + ?Sized>(
    state: &mut ModelState,
    param: Param,
    width: f64,
    rng: &mut R,
) -> Option<f64> {
    let delta = width * (rng.random::<f64>() - 0.5);
    if param == Param::Pi1 {
        let p1 = reflect_unit(state.pi[1] + delta);
        state.pi = [1.0 - p1, p1];
        return Some(0.0);
    }
    let slot = param_slot(state, param)?;
    *slot = reflect_unit(*slot + delta);
    Some(0.0)
}

/// Mutable access to a scalar parameter, when the active prior has it.
pub(crate) fn param_slot(state: &mut ModelState, param: Param) -> Option<&mut f64> {
    match (param, &mut state.prior_params) {
        (Param::Alpha, _) => Some(&mut state.alpha),
        (Param::ClockRate, _) => Some(&mut state.clock_rate),
        (Param::IgrVariance, _) => Some(&mut state.igr_variance),
        (Param::Pi1, _) => Some(&mut state.pi[1]),
        (Param::PopSize, PriorParams::Coalescent(p)) => Some(&mut p.pop_size),
        (Param::Diversification, PriorParams::Fbd(p)) => Some(&mut p.diversification),
        (Param::Turnover, PriorParams::Fbd(p)) => Some(&mut p.turnover),
        (Param::FossilSampling, PriorParams::Fbd(p)) => Some(&mut p.fossil_sampling),
        _ => None,
    }
}

/// Scales the clock rate up while compressing every free internal age, which
/// leaves effective branch lengths roughly unchanged.
fn clock_tree<R: Rng + ?Sized>(state: &mut ModelState, lambda: f64, rng: &mut R) -> Option<f64> {
    let m = multiplier(lambda, rng);
    let tree = &mut state.tree;
    let free: Vec<NodeId> = (tree.n_tips()..tree.len())
        .filter(|&id| !tree.is_ancestor_attachment(id))
        .collect();
    for &id in &free {
        tree.set_age(id, tree.age(id) / m);
    }
    state.clock_rate *= m;
    if !ages_consistent(&state.tree) {
        return Some(f64::NEG_INFINITY);
    }
    Some((1.0 - free.len() as f64) * m.ln())
}

fn branch_rate<R: Rng + ?Sized>(state: &mut ModelState, lambda: f64, rng: &mut R) -> Option<f64> {
    let tree = &state.tree;
    let candidates: Vec<NodeId> = (0..tree.len())
        .filter(|&id| id != tree.root() && !tree.is_sampled_ancestor(id))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let j = candidates[rng.random_range(0..candidates.len())];
    let m = multiplier(lambda, rng);
    state.branch_rates.set(j, state.branch_rates.get(j) * m);
    Some(m.ln())
}

/// Collapses a fossil tip onto its parent (delete-branch) or restores a
/// sampled ancestor as a tip with its own branch (add-branch).
fn ancestor_toggle<R: Rng + ?Sized>(
    state: &mut ModelState,
    calibrations: &[CalibrationPrior],
    rng: &mut R,
) -> Option<f64> {
    let fossils: Vec<NodeId> = (0..state.tree.n_tips())
        .filter(|&i| calibrations[i].min_age > 0.0)
        .collect();
    if fossils.is_empty() {
        return None;
    }
    let f = fossils[rng.random_range(0..fossils.len())];
    let tree = &mut state.tree;
    let a = tree.parent(f)?;
    let g = tree.parent(a)?;
    let (c, sigma2) = (state.clock_rate, state.igr_variance);
    let fa = tree.age(f);
    let range = tree.age(g) - fa;
    if tree.is_sampled_ancestor(f) {
        // add-branch
        let new_age = rng.random_range(fa..tree.age(g));
        if new_age <= fa {
            return Some(f64::NEG_INFINITY);
        }
        tree.set_age(a, new_age);
        tree.set_sampled_ancestor(f, false);
        let (shape, scale) = igr_shape_scale(new_age - fa, c, sigma2);
        let r = Gamma::new(shape, scale).ok()?.sample(rng);
        if !(r > 0.0 && r.is_finite()) {
            return Some(f64::NEG_INFINITY);
        }
        state.branch_rates.set(f, r);
        Some(range.ln() - igr_branch_log_density(r, new_age - fa, c, sigma2))
    } else {
        // delete-branch
        let s = tree.sibling(f)?;
        if tree.age(s) >= fa || tree.is_sampled_ancestor(s) {
            return None;
        }
        let old = tree.age(a) - fa;
        let r_old = state.branch_rates.get(f);
        tree.set_age(a, fa);
        tree.set_sampled_ancestor(f, true);
        state.branch_rates.set(f, 1.0);
        Some(-range.ln() + igr_branch_log_density(r_old, old, c, sigma2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree5(seed: u64) -> TimeTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeTree::random(&[0.0, 0.0, 500.0, 0.0, 1200.0], 5000.0, &mut rng).unwrap()
    }

    #[test]
    fn narrow_exchange_is_its_own_reverse() {
        for seed in 0..50 {
            let tree = tree5(seed);
            for (i, u) in exchange_pairs(&tree) {
                let mut t = tree.clone();
                swap_subtrees(&mut t, i, u);
                assert!(ages_consistent(&t));
                assert!(exchange_pairs(&t).contains(&(u, i)));
                swap_subtrees(&mut t, u, i);
                assert_eq!(t, tree);
            }
        }
    }

    #[test]
    fn topology_moves_keep_trees_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut tree = tree5(3);
        let cals: Vec<CalibrationPrior> = (0..5)
            .map(|i| CalibrationPrior::new(tree.age(i), tree.age(i)).unwrap())
            .collect();
        for _ in 0..2000 {
            let h = if rng.random_bool(0.5) {
                fnpr(&mut tree, &mut rng)
            } else {
                narrow_exchange(&mut tree, &mut rng)
            };
            assert!(h.unwrap().is_finite());
            assert!(ages_consistent(&tree));
            assert!(crate::tree::validate_tree(&tree, &cals, None).is_empty());
        }
    }

    #[test]
    fn ancestor_toggle_round_trip() {
        // ((A:0, F:1000)@1000 ... ) built so that F can collapse.
        let tree = TimeTree::from_edges(
            3,
            &[0.0, 1000.0, 0.0, 2000.0, 5000.0],
            &[(0, 3), (1, 3), (3, 4), (2, 4)],
            &[],
        )
        .unwrap();
        let cals = [
            CalibrationPrior::EXTANT,
            CalibrationPrior::new(900.0, 1100.0).unwrap(),
            CalibrationPrior::EXTANT,
        ];
        let mut state = ModelState::new(tree, PriorParams::Uniform(crate::model::UniformParams {
            root_bounds: (4000.0, 25000.0),
        }));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = ancestor_toggle(&mut state, &cals, &mut rng).unwrap();
        assert!(state.tree.is_sampled_ancestor(1));
        assert_eq!(state.tree.age(3), 1000.0);
        assert!(h.is_finite());
        let h2 = ancestor_toggle(&mut state, &cals, &mut rng).unwrap();
        assert!(!state.tree.is_sampled_ancestor(1));
        assert!(state.tree.age(3) > 1000.0 && state.tree.age(3) < 5000.0);
        assert!(h2.is_finite());
        assert!(ages_consistent(&state.tree));
    }
}
