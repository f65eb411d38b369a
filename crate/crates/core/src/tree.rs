//! Taxa, tip calibrations and dated time trees.
//!
//! Ages are years before present. Tip node `i` always carries taxon `i`, so
//! node ids `0..n_tips` are tips and the remaining ids are internal nodes.
//! A sampled ancestor is a tip attached to an internal node of the same age,
//! which gives it a zero-duration branch.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::clade::Clade;
use crate::error::{ModelError, Result};

pub type NodeId = usize;

/// Uniform prior on a tip's age, in years before present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPrior {
    pub min_age: f64,
    pub max_age: f64,
}

impl CalibrationPrior {
    pub const EXTANT: CalibrationPrior = CalibrationPrior {
        min_age: 0.0,
        max_age: 0.0,
    };

    pub fn new(min_age: f64, max_age: f64) -> Result<Self> {
        if !(min_age >= 0.0 && min_age <= max_age && max_age.is_finite()) {
            return Err(ModelError::Usage(format!(
                "invalid calibration bounds [{min_age}, {max_age}]"
            )));
        }
        Ok(CalibrationPrior { min_age, max_age })
    }

    pub fn is_extant(&self) -> bool {
        self.max_age == 0.0
    }

    pub fn is_fixed(&self) -> bool {
        self.min_age == self.max_age
    }

    pub fn contains(&self, age: f64) -> bool {
        age >= self.min_age && age <= self.max_age
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min_age + self.max_age)
    }

    /// Log density of the uniform age prior; zero-width bounds are a point mass.
    pub fn log_density(&self, age: f64) -> f64 {
        if !self.contains(age) {
            f64::NEG_INFINITY
        } else if self.is_fixed() {
            0.0
        } else {
            -(self.max_age - self.min_age).ln()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Taxon {
    pub id: usize,
    pub name: String,
    pub calibration: CalibrationPrior,
}

/// Taxa of a dataset with contiguous ids and unique names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaxonSet {
    taxa: Vec<Taxon>,
}

impl TaxonSet {
    pub fn new(names: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut taxa: Vec<Taxon> = Vec::new();
        for (id, name) in names.into_iter().enumerate() {
            if taxa.iter().any(|t| t.name == name) {
                return Err(ModelError::Usage(format!("duplicate taxon name `{name}`")));
            }
            taxa.push(Taxon {
                id,
                name,
                calibration: CalibrationPrior::EXTANT,
            });
        }
        Ok(TaxonSet { taxa })
    }

    pub fn len(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxa.is_empty()
    }

    pub fn get(&self, id: usize) -> &Taxon {
        &self.taxa[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Taxon> {
        self.taxa.iter()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.taxa.iter().position(|t| t.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.taxa.iter().map(|t| t.name.clone()).collect()
    }

    pub fn calibrations(&self) -> Vec<CalibrationPrior> {
        self.taxa.iter().map(|t| t.calibration).collect()
    }

    pub fn set_calibration(&mut self, id: usize, calibration: CalibrationPrior) {
        self.taxa[id].calibration = calibration;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub age: f64,
    pub taxon: Option<usize>,
    pub sampled_ancestor: bool,
}

/// Rooted, binary, dated tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTree {
    nodes: Vec<Node>,
    root: NodeId,
    n_tips: usize,
}

/// A structural problem found by [`validate_tree`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Structure(String),
    AgeOrdering { node: NodeId, age: f64, parent_age: f64 },
    CalibrationBounds { taxon: usize, age: f64, min: f64, max: f64 },
    Arity { node: NodeId, children: usize },
    SampledAncestor { node: NodeId, reason: &'static str },
    RootBounds { age: f64, min: f64, max: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Structure(s) => write!(f, "structure: {s}"),
            Violation::AgeOrdering { node, age, parent_age } => write!(
                f,
                "age ordering: node {node} has age {age} but its parent is aged {parent_age}"
            ),
            Violation::CalibrationBounds { taxon, age, min, max } => write!(
                f,
                "calibration bounds: taxon {taxon} aged {age} outside [{min}, {max}]"
            ),
            Violation::Arity { node, children } => {
                write!(f, "arity: node {node} has {children} children")
            }
            Violation::SampledAncestor { node, reason } => {
                write!(f, "sampled ancestor: node {node} {reason}")
            }
            Violation::RootBounds { age, min, max } => {
                write!(f, "root bounds: root age {age} outside [{min}, {max}]")
            }
        }
    }
}

impl TimeTree {
    /// Builds a tree from raw nodes. Tip `i` must carry taxon `i`.
    pub fn from_nodes(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        let n_tips = nodes.iter().filter(|n| n.children.is_empty()).count();
        for (i, n) in nodes.iter().enumerate() {
            let is_tip = n.children.is_empty();
            if is_tip != (i < n_tips) {
                return Err(ModelError::Usage(
                    "tips must occupy node ids 0..n_tips".into(),
                ));
            }
            if is_tip && n.taxon != Some(i) {
                return Err(ModelError::Usage(format!("tip {i} must carry taxon {i}")));
            }
            for &c in &n.children {
                if c >= nodes.len() || nodes[c].parent != Some(i) {
                    return Err(ModelError::Usage(format!("bad parent link below node {i}")));
                }
            }
        }
        if root >= nodes.len() || nodes[root].parent.is_some() {
            return Err(ModelError::Usage("root must have no parent".into()));
        }
        Ok(TimeTree {
            nodes,
            root,
            n_tips,
        })
    }

    /// Builds a tree from `(child, parent)` pairs and node ages. Used by parsers
    /// and tests.
    pub fn from_edges(
        n_tips: usize,
        ages: &[f64],
        edges: &[(NodeId, NodeId)],
        sampled_ancestors: &[NodeId],
    ) -> Result<Self> {
        let mut nodes: Vec<Node> = ages
            .iter()
            .enumerate()
            .map(|(i, &age)| Node {
                parent: None,
                children: Vec::new(),
                age,
                taxon: (i < n_tips).then_some(i),
                sampled_ancestor: sampled_ancestors.contains(&i),
            })
            .collect();
        for &(c, p) in edges {
            if c >= nodes.len() || p >= nodes.len() {
                return Err(ModelError::Usage(format!("edge ({c}, {p}) out of range")));
            }
            nodes[c].parent = Some(p);
            nodes[p].children.push(c);
        }
        let roots: Vec<_> = (0..nodes.len()).filter(|&i| nodes[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(ModelError::Usage(format!(
                "expected a single root, found {}",
                roots.len()
            )));
        }
        TimeTree::from_nodes(nodes, roots[0])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn n_tips(&self) -> usize {
        self.n_tips
    }

    pub fn age(&self, id: NodeId) -> f64 {
        self.nodes[id].age
    }

    pub fn root_age(&self) -> f64 {
        self.nodes[self.root].age
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn is_tip(&self, id: NodeId) -> bool {
        id < self.n_tips
    }

    pub fn is_sampled_ancestor(&self, id: NodeId) -> bool {
        self.nodes[id].sampled_ancestor
    }

    /// Internal node carrying a sampled-ancestor tip as one of its children.
    pub fn is_ancestor_attachment(&self, id: NodeId) -> bool {
        self.nodes[id]
            .children
            .iter()
            .any(|&c| self.nodes[c].sampled_ancestor)
    }

    pub fn sibling(&self, id: NodeId) -> Option<NodeId> {
        let p = self.nodes[id].parent?;
        self.nodes[p].children.iter().copied().find(|&c| c != id)
    }

    pub fn sampled_ancestor_count(&self) -> usize {
        (0..self.n_tips).filter(|&i| self.nodes[i].sampled_ancestor).count()
    }

    /// Duration of the branch above `id`, in years.
    pub fn branch_duration(&self, id: NodeId) -> Result<f64> {
        match self.nodes[id].parent {
            Some(p) => Ok(self.nodes[p].age - self.nodes[id].age),
            None => Err(ModelError::Usage("the root has no parent branch".into())),
        }
    }

    pub fn total_duration(&self) -> f64 {
        (0..self.nodes.len())
            .filter_map(|i| self.branch_duration(i).ok())
            .sum()
    }

    pub fn set_age(&mut self, id: NodeId, age: f64) {
        self.nodes[id].age = age;
    }

    pub fn set_sampled_ancestor(&mut self, id: NodeId, flag: bool) {
        self.nodes[id].sampled_ancestor = flag;
    }

    /// Puts `new` in the child slot of `parent` that held `old`. The old
    /// child's parent link is left for the caller to fix.
    pub(crate) fn replace_child(&mut self, parent: NodeId, old: NodeId, new: NodeId) {
        for c in self.nodes[parent].children.iter_mut() {
            if *c == old {
                *c = new;
            }
        }
        self.nodes[new].parent = Some(parent);
    }

    pub(crate) fn set_parent(&mut self, id: NodeId, parent: Option<NodeId>) {
        self.nodes[id].parent = parent;
    }

    pub(crate) fn set_children(&mut self, id: NodeId, children: Vec<NodeId>) {
        self.nodes[id].children = children;
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded || self.nodes[id].children.is_empty() {
                out.push(id);
            } else {
                stack.push((id, true));
                for &c in self.nodes[id].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Taxon set below every node, indexed by node id.
    pub fn clades(&self) -> Vec<Clade> {
        let mut out = vec![Clade::empty(self.n_tips); self.nodes.len()];
        for id in self.postorder() {
            if self.is_tip(id) {
                out[id].insert(id);
            } else {
                let mut c = Clade::empty(self.n_tips);
                for &ch in &self.nodes[id].children {
                    c.union_with(&out[ch]);
                }
                out[id] = c;
            }
        }
        out
    }

    /// Age of the oldest tip below every node, indexed by node id.
    pub fn oldest_tip_below(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        for id in self.postorder() {
            out[id] = if self.is_tip(id) {
                self.nodes[id].age
            } else {
                self.nodes[id]
                    .children
                    .iter()
                    .map(|&c| out[c])
                    .fold(f64::NEG_INFINITY, f64::max)
            };
        }
        out
    }

    /// Random topology with ages that respect the tip ages: the root gets
    /// `root_age` and each internal node sits between the oldest tip below it
    /// and its parent.
    pub fn random<R: Rng + ?Sized>(tip_ages: &[f64], root_age: f64, rng: &mut R) -> Result<Self> {
        let n = tip_ages.len();
        if n < 2 {
            return Err(ModelError::Usage("a tree needs at least two tips".into()));
        }
        let oldest = tip_ages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if root_age <= oldest {
            return Err(ModelError::Usage(format!(
                "root age {root_age} must exceed the oldest tip age {oldest}"
            )));
        }
        let total = 2 * n - 1;
        let mut nodes: Vec<Node> = (0..total)
            .map(|i| Node {
                parent: None,
                children: Vec::new(),
                age: if i < n { tip_ages[i] } else { 0.0 },
                taxon: (i < n).then_some(i),
                sampled_ancestor: false,
            })
            .collect();
        let mut active: Vec<NodeId> = (0..n).collect();
        let mut next = n;
        while active.len() > 1 {
            active.shuffle(rng);
            let a = active.pop().unwrap();
            let b = active.pop().unwrap();
            nodes[a].parent = Some(next);
            nodes[b].parent = Some(next);
            nodes[next].children = vec![a, b];
            active.push(next);
            next += 1;
        }
        let root = total - 1;
        let mut tree = TimeTree {
            nodes,
            root,
            n_tips: n,
        };
        let floor = tree.oldest_tip_below();
        tree.nodes[root].age = root_age;
        // Preorder: parents are assigned before their children.
        let mut order = tree.postorder();
        order.reverse();
        for id in order {
            if id == root || tree.is_tip(id) {
                continue;
            }
            let p = tree.nodes[id].parent.unwrap();
            let hi = tree.nodes[p].age;
            let lo = floor[id];
            tree.nodes[id].age = lo + (hi - lo) * rng.random_range(0.3..0.9);
        }
        Ok(tree)
    }
}

/// Checks every structural invariant of a dated tree. An empty list means the
/// tree is well formed.
pub fn validate_tree(
    tree: &TimeTree,
    calibrations: &[CalibrationPrior],
    root_bounds: Option<(f64, f64)>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if calibrations.len() != tree.n_tips() {
        out.push(Violation::Structure(format!(
            "tree has {} tips but the dataset has {} taxa",
            tree.n_tips(),
            calibrations.len()
        )));
    }
    let reached = tree.postorder();
    if reached.len() != tree.len() {
        out.push(Violation::Structure(format!(
            "{} of {} nodes are reachable from the root",
            reached.len(),
            tree.len()
        )));
    }
    for (id, node) in tree.nodes().iter().enumerate() {
        let n_children = node.children.len();
        if tree.is_tip(id) {
            if n_children != 0 {
                out.push(Violation::Arity {
                    node: id,
                    children: n_children,
                });
            }
            if let Some(cal) = calibrations.get(id) {
                if !cal.contains(node.age) {
                    out.push(Violation::CalibrationBounds {
                        taxon: id,
                        age: node.age,
                        min: cal.min_age,
                        max: cal.max_age,
                    });
                }
            }
        } else if n_children != 2 {
            out.push(Violation::Arity {
                node: id,
                children: n_children,
            });
        }
        if node.sampled_ancestor && !tree.is_tip(id) {
            out.push(Violation::SampledAncestor {
                node: id,
                reason: "is not a tip",
            });
        }
        if let Some(p) = node.parent {
            let parent_age = tree.age(p);
            if node.sampled_ancestor {
                if node.age != parent_age {
                    out.push(Violation::SampledAncestor {
                        node: id,
                        reason: "does not share its attachment point's age",
                    });
                }
                if tree.children(p).iter().filter(|&&c| tree.is_sampled_ancestor(c)).count() > 1 {
                    out.push(Violation::SampledAncestor {
                        node: id,
                        reason: "shares its attachment point with another sampled ancestor",
                    });
                }
            } else if !(node.age < parent_age) {
                out.push(Violation::AgeOrdering {
                    node: id,
                    age: node.age,
                    parent_age,
                });
            }
        } else if node.sampled_ancestor {
            out.push(Violation::SampledAncestor {
                node: id,
                reason: "is the root",
            });
        }
    }
    if let Some((min, max)) = root_bounds {
        let age = tree.root_age();
        if !(age >= min && age <= max) {
            out.push(Violation::RootBounds { age, min, max });
        }
    }
    out
}
