//! The full parameter vector sampled by the chain.

use crate::tree::TimeTree;

/// Default number of extant languages in the family, used to derive the
/// extant sampling fraction.
pub const DEFAULT_FAMILY_SIZE: usize = 400;
pub const DEFAULT_ROOT_BOUNDS: (f64, f64) = (4000.0, 25000.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreePriorKind {
    Coalescent,
    Fbd,
    Uniform,
}

impl TreePriorKind {
    pub fn name(self) -> &'static str {
        match self {
            TreePriorKind::Coalescent => "coalescent",
            TreePriorKind::Fbd => "fbd",
            TreePriorKind::Uniform => "uniform",
        }
    }

    /// Whether the prior is conditioned on the root age, so that the root is
    /// confined to the configured bounds.
    pub fn conditions_on_root(self) -> bool {
        !matches!(self, TreePriorKind::Coalescent)
    }
}

impl std::str::FromStr for TreePriorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coalescent" => Ok(TreePriorKind::Coalescent),
            "fbd" => Ok(TreePriorKind::Fbd),
            "uniform" => Ok(TreePriorKind::Uniform),
            other => Err(format!("unknown tree prior `{other}`")),
        }
    }
}

/// Constant-size coalescent. `theta = 2 * pop_size * clock_rate` in
/// substitution units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoalescentParams {
    pub pop_size: f64,
}

impl CoalescentParams {
    pub fn theta(&self, clock_rate: f64) -> f64 {
        2.0 * self.pop_size * clock_rate
    }

    /// The same quantity expressed in years, which is the unit tree ages are
    /// stored in: `theta / clock_rate`.
    pub fn theta_years(&self) -> f64 {
        2.0 * self.pop_size
    }
}

/// Fossilized birth-death parameters in the sampled reparameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbdParams {
    /// d = λ − μ
    pub diversification: f64,
    /// r = μ / λ
    pub turnover: f64,
    /// f = ψ / (ψ + μ)
    pub fossil_sampling: f64,
    /// ρ, fraction of extant family members present in the data.
    pub rho: f64,
}

/// Birth, death and fossil-recovery rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbdRates {
    pub lambda: f64,
    pub mu: f64,
    pub psi: f64,
    pub rho: f64,
}

impl FbdParams {
    pub fn rates(&self) -> FbdRates {
        let lambda = self.diversification / (1.0 - self.turnover);
        let mu = lambda * self.turnover;
        let psi = mu * self.fossil_sampling / (1.0 - self.fossil_sampling);
        FbdRates {
            lambda,
            mu,
            psi,
            rho: self.rho,
        }
    }

    pub fn in_domain(&self) -> bool {
        self.diversification > 0.0
            && (0.0..1.0).contains(&self.turnover)
            && (0.0..1.0).contains(&self.fossil_sampling)
            && self.rho > 0.0
            && self.rho <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParams {
    pub root_bounds: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorParams {
    Coalescent(CoalescentParams),
    Fbd(FbdParams),
    Uniform(UniformParams),
}

impl PriorParams {
    pub fn kind(&self) -> TreePriorKind {
        match self {
            PriorParams::Coalescent(_) => TreePriorKind::Coalescent,
            PriorParams::Fbd(_) => TreePriorKind::Fbd,
            PriorParams::Uniform(_) => TreePriorKind::Uniform,
        }
    }
}

/// Per-branch rate multipliers of the relaxed clock, indexed by the child
/// node of each branch. The root slot is unused and kept at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRates(pub Vec<f64>);

impl BranchRates {
    pub fn ones(n_nodes: usize) -> Self {
        BranchRates(vec![1.0; n_nodes])
    }

    pub fn get(&self, node: usize) -> f64 {
        self.0[node]
    }

    pub fn set(&mut self, node: usize, rate: f64) {
        self.0[node] = rate;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub tree: TimeTree,
    /// Stationary frequencies (π0, π1).
    pub pi: [f64; 2],
    /// Gamma shape for among-site rate variation.
    pub alpha: f64,
    /// Base clock rate, substitutions per site per year.
    pub clock_rate: f64,
    pub branch_rates: BranchRates,
    /// Variance parameter of the independent-gamma-rates clock.
    pub igr_variance: f64,
    pub prior_params: PriorParams,
}

impl ModelState {
    /// Starting values: flat frequencies, unit shape and the prior means of
    /// the clock parameters.
    pub fn new(tree: TimeTree, prior_params: PriorParams) -> Self {
        let n = tree.len();
        ModelState {
            tree,
            pi: [0.5, 0.5],
            alpha: 1.0,
            clock_rate: 1e-4,
            branch_rates: BranchRates::ones(n),
            igr_variance: 0.005,
            prior_params,
        }
    }

    /// Effective branch length ν = t · c · r of the branch above `node`.
    pub fn effective_length(&self, node: usize) -> f64 {
        crate::clock::effective_branch_length(&self.tree, node, self.clock_rate, &self.branch_rates)
    }

    /// Parameter-domain checks other than the tree structure.
    pub fn parameters_in_domain(&self) -> bool {
        let pi_ok = self.pi.iter().all(|&p| p > 0.0 && p < 1.0)
            && (self.pi[0] + self.pi[1] - 1.0).abs() < 1e-12;
        let rates_ok = self
            .branch_rates
            .0
            .iter()
            .all(|&r| r > 0.0 && r.is_finite());
        let prior_ok = match self.prior_params {
            PriorParams::Coalescent(p) => p.pop_size > 0.0,
            PriorParams::Fbd(p) => p.in_domain(),
            PriorParams::Uniform(p) => p.root_bounds.0 < p.root_bounds.1,
        };
        pi_ok
            && rates_ok
            && prior_ok
            && self.alpha > 0.0
            && self.clock_rate > 0.0
            && self.igr_variance > 0.0
    }

    /// Named scalar parameters, used for trace output.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("alpha", self.alpha),
            ("clock_rate", self.clock_rate),
            ("igr_variance", self.igr_variance),
            ("pi1", self.pi[1]),
        ];
        match self.prior_params {
            PriorParams::Coalescent(p) => out.push(("pop_size", p.pop_size)),
            PriorParams::Fbd(p) => {
                out.push(("diversification", p.diversification));
                out.push(("turnover", p.turnover));
                out.push(("fossil_sampling", p.fossil_sampling));
                out.push(("sampled_ancestors", self.tree.sampled_ancestor_count() as f64));
            }
            PriorParams::Uniform(_) => {}
        }
        out
    }
}
