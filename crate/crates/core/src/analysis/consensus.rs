//! Majority-rule consensus trees and clade age summaries.

use std::collections::BTreeMap;

use crate::clade::Clade;
use crate::error::{ModelError, ParseError, Result};
use crate::io::newick::NewickNode;
use crate::tree::TimeTree;

use super::hpd::{hpd_or_range, median};

pub const HPD_MASS: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct CladeSummary {
    pub clade: Clade,
    /// Fraction of trees containing the clade.
    pub support: f64,
    pub age_median: f64,
    /// 95% HPD of the clade age over the trees containing it. With fewer
    /// than 20 such trees this is the full range.
    pub age_hpd: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusNode {
    pub summary: CladeSummary,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// A possibly multifurcating summary tree. Nodes are stored with tips first
/// (node `i` is taxon `i`), then internal clades in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusTree {
    pub taxa: Vec<String>,
    pub nodes: Vec<ConsensusNode>,
    pub root: usize,
}

/// Clade ages of every tree, keyed by clade.
fn clade_ages(trees: &[TimeTree]) -> BTreeMap<Clade, Vec<f64>> {
    let mut out: BTreeMap<Clade, Vec<f64>> = BTreeMap::new();
    for t in trees {
        for (id, c) in t.clades().into_iter().enumerate() {
            out.entry(c).or_default().push(t.age(id));
        }
    }
    out
}

fn summarize(clade: Clade, ages: &[f64], n_trees: usize) -> Result<CladeSummary> {
    Ok(CladeSummary {
        clade,
        support: ages.len() as f64 / n_trees as f64,
        age_median: median(ages)?,
        age_hpd: hpd_or_range(ages, HPD_MASS)?,
    })
}

/// Consensus of the clades whose frequency exceeds `threshold` (≥ 0.5).
pub fn majority_consensus(
    trees: &[TimeTree],
    taxa: &[String],
    threshold: f64,
) -> Result<ConsensusTree> {
    if trees.is_empty() {
        return Err(ModelError::Usage("consensus of an empty tree sample".into()));
    }
    if !(0.5..1.0).contains(&threshold) {
        return Err(ModelError::Usage(format!("consensus threshold {threshold} outside [0.5, 1)")));
    }
    let n = taxa.len();
    if trees.iter().any(|t| t.n_tips() != n) {
        return Err(ModelError::Usage("trees do not share one taxon set".into()));
    }
    let ages = clade_ages(trees);
    let total = trees.len();
    let mut tips = Vec::with_capacity(n);
    for i in 0..n {
        let c = Clade::singleton(n, i);
        tips.push(summarize(c.clone(), &ages[&c], total)?);
    }
    let mut internal: Vec<CladeSummary> = Vec::new();
    for (c, a) in &ages {
        if c.len() < 2 {
            continue;
        }
        if a.len() as f64 / total as f64 > threshold || c.len() == n {
            internal.push(summarize(c.clone(), a, total)?);
        }
    }
    let mut nodes: Vec<ConsensusNode> = tips
        .into_iter()
        .chain(internal)
        .map(|summary| ConsensusNode {
            summary,
            children: Vec::new(),
            parent: None,
        })
        .collect();
    // Parent of each node: the smallest strictly larger clade containing it.
    for i in 0..nodes.len() {
        let mut best: Option<usize> = None;
        for j in n..nodes.len() {
            if i == j {
                continue;
            }
            let (ci, cj) = (&nodes[i].summary.clade, &nodes[j].summary.clade);
            if cj.len() > ci.len() && ci.is_subset(cj) {
                let better = best.is_none_or(|b| nodes[b].summary.clade.len() > cj.len());
                if better {
                    best = Some(j);
                }
            }
        }
        nodes[i].parent = best;
    }
    for i in 0..nodes.len() {
        if let Some(p) = nodes[i].parent {
            nodes[p].children.push(i);
        }
    }
    let first_taxon: Vec<usize> = nodes
        .iter()
        .map(|n| n.summary.clade.iter().next().unwrap_or(0))
        .collect();
    for node in nodes.iter_mut() {
        node.children.sort_by_key(|&c| first_taxon[c]);
    }
    let root = (0..nodes.len())
        .find(|&i| nodes[i].parent.is_none() && nodes[i].summary.clade.len() == n)
        .ok_or_else(|| ModelError::Usage("no root clade in consensus".into()))?;
    Ok(ConsensusTree {
        taxa: taxa.to_vec(),
        nodes,
        root,
    })
}

fn fmt_num(x: f64) -> String {
    let r = (x * 1000.0).round() / 1000.0;
    format!("{r}")
}

impl ConsensusTree {
    /// Internal clades other than the root.
    pub fn clades(&self) -> Vec<&Clade> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| *i != self.root && n.summary.clade.len() > 1)
            .map(|(_, n)| &n.summary.clade)
            .collect()
    }

    pub fn node_of(&self, clade: &Clade) -> Option<&ConsensusNode> {
        self.nodes.iter().find(|n| &n.summary.clade == clade)
    }

    pub fn root_summary(&self) -> &CladeSummary {
        &self.nodes[self.root].summary
    }

    /// Annotated Newick with median-age branch lengths.
    pub fn to_newick_node(&self) -> NewickNode {
        fn build(t: &ConsensusTree, id: usize) -> NewickNode {
            let node = &t.nodes[id];
            let s = &node.summary;
            NewickNode {
                label: node.children.is_empty().then(|| t.taxa[s.clade.iter().next().unwrap()].clone()),
                length: node
                    .parent
                    .map(|p| (t.nodes[p].summary.age_median - s.age_median).max(0.0)),
                comment: Some(format!(
                    "&support={},age_median={},age_hpd={{{},{}}}",
                    fmt_num(s.support),
                    fmt_num(s.age_median),
                    fmt_num(s.age_hpd.0),
                    fmt_num(s.age_hpd.1)
                )),
                children: node.children.iter().map(|&c| build(t, c)).collect(),
            }
        }
        build(self, self.root)
    }

    pub fn to_newick(&self) -> String {
        self.to_newick_node().to_newick()
    }
}

/// A named tip set with an optional reference age.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgroup {
    pub name: String,
    pub clade: Clade,
    pub reference_age: Option<f64>,
}

/// Reads subgroup definitions, one per line: `name: taxon, taxon, ... [@ age]`.
pub fn parse_subgroups(text: &str, taxa: &[String]) -> std::result::Result<Vec<Subgroup>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| ParseError::line(i + 1, "expected `name: taxon, taxon [@ age]`"))?;
        let (members, reference) = match rest.split_once('@') {
            Some((m, r)) => {
                let r = r.trim();
                let age = r
                    .parse::<f64>()
                    .map_err(|_| ParseError::line(i + 1, format!("bad reference age `{r}`")))?;
                (m, Some(age))
            }
            None => (rest, None),
        };
        let mut clade = Clade::empty(taxa.len());
        for m in members.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let id = taxa
                .iter()
                .position(|t| t == m)
                .ok_or_else(|| ParseError::UnknownTaxon(m.to_string()))?;
            clade.insert(id);
        }
        if clade.is_empty() {
            return Err(ParseError::line(i + 1, "subgroup has no members"));
        }
        out.push(Subgroup {
            name: name.trim().to_string(),
            clade,
            reference_age: reference,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeAgeRow {
    pub name: String,
    pub monophyletic_in_consensus: bool,
    /// `None` when the subgroup is never monophyletic.
    pub summary: Option<CladeSummary>,
    pub reference_age: Option<f64>,
}

impl NodeAgeRow {
    /// Reference age minus posterior median.
    pub fn difference(&self) -> Option<f64> {
        Some(self.reference_age? - self.summary.as_ref()?.age_median)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeAgeReport {
    pub root: CladeSummary,
    pub rows: Vec<NodeAgeRow>,
}

impl NodeAgeReport {
    /// Mean of the available reference differences.
    pub fn average_difference(&self) -> Option<f64> {
        average_difference(self.rows.iter().filter_map(NodeAgeRow::difference))
    }

    pub fn render(&self) -> String {
        let fmt_row = |name: &str, flag: &str, s: Option<&CladeSummary>, r: Option<f64>, d: Option<f64>| {
            let opt = |x: Option<f64>| x.map(|v| format!("{v:.0}")).unwrap_or_else(|| "-".into());
            match s {
                Some(s) => format!(
                    "{name:<24}{flag:<6}{:>9.3}{:>10.0}  [{:.0}, {:.0}]{:>12}{:>12}\n",
                    s.support, s.age_median, s.age_hpd.0, s.age_hpd.1, opt(r), opt(d)
                ),
                None => format!("{name:<24}{flag:<6}{:>9}{:>10}  {:<14}{:>12}{:>12}\n", "–", "–", "–", opt(r), "-"),
            }
        };
        let mut out = format!(
            "{:<24}{:<6}{:>9}{:>10}  {:<14}{:>12}{:>12}\n",
            "clade", "mono", "support", "median", "95% HPD", "reference", "difference"
        );
        out.push_str(&fmt_row("root", "yes", Some(&self.root), None, None));
        for row in &self.rows {
            let flag = if row.monophyletic_in_consensus { "yes" } else { "no" };
            out.push_str(&fmt_row(&row.name, flag, row.summary.as_ref(), row.reference_age, row.difference()));
        }
        if let Some(avg) = self.average_difference() {
            out.push_str(&format!("average difference: {avg:.2}\n"));
        }
        out
    }
}

pub fn average_difference(diffs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = diffs.into_iter().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Age summaries of each subgroup over the trees in which it is monophyletic.
pub fn node_age_report(
    consensus: &ConsensusTree,
    trees: &[TimeTree],
    subgroups: &[Subgroup],
) -> Result<NodeAgeReport> {
    let ages = clade_ages(trees);
    let rows = subgroups
        .iter()
        .map(|g| {
            let summary = match ages.get(&g.clade) {
                Some(a) => Some(summarize(g.clade.clone(), a, trees.len())?),
                None => None,
            };
            Ok(NodeAgeRow {
                name: g.name.clone(),
                monophyletic_in_consensus: consensus.node_of(&g.clade).is_some(),
                summary,
                reference_age: g.reference_age,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NodeAgeReport {
        root: consensus.root_summary().clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        ["A", "B", "C", "D"][..n].iter().map(|s| s.to_string()).collect()
    }

    fn cherry_tree(pair: (usize, usize), other: usize, age: f64) -> TimeTree {
        TimeTree::from_edges(
            3,
            &[0.0, 0.0, 0.0, age, 1000.0],
            &[(pair.0, 3), (pair.1, 3), (3, 4), (other, 4)],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn two_of_three() {
        let trees = vec![
            cherry_tree((0, 1), 2, 400.0),
            cherry_tree((0, 1), 2, 600.0),
            cherry_tree((0, 2), 1, 500.0),
        ];
        let c = majority_consensus(&trees, &names(3), 0.5).unwrap();
        let ab = Clade::from_taxa(3, [0, 1]);
        let ac = Clade::from_taxa(3, [0, 2]);
        let node = c.node_of(&ab).unwrap();
        assert!((node.summary.support - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(node.summary.age_median, 500.0);
        assert!(c.node_of(&ac).is_none());
        let nwk = c.to_newick();
        assert!(nwk.contains("support=0.667"), "{nwk}");
        assert!(nwk.starts_with("((A"), "{nwk}");
    }

    #[test]
    fn identical_trees_give_full_support() {
        let trees = vec![cherry_tree((0, 1), 2, 400.0); 3];
        let c = majority_consensus(&trees, &names(3), 0.5).unwrap();
        assert!(c.nodes.iter().all(|n| n.summary.support == 1.0));
        assert_eq!(c.clades().len(), 1);
    }

    #[test]
    fn report_differences() {
        let avg = average_difference([2250.0 - 2334.0, 14.0, 221.0]).unwrap();
        assert!((avg - 50.333333333333336).abs() < 1e-12);
        let trees = vec![cherry_tree((0, 1), 2, 100.0); 25];
        let c = majority_consensus(&trees, &names(3), 0.5).unwrap();
        let groups = parse_subgroups("AB: A, B @ 90\nBC: B, C\n", &names(3)).unwrap();
        let r = node_age_report(&c, &trees, &groups).unwrap();
        assert_eq!(r.rows[0].summary.as_ref().unwrap().age_median, 100.0);
        assert_eq!(r.rows[0].difference(), Some(-10.0));
        assert!(r.rows[1].summary.is_none());
        assert!(r.render().contains('–'));
    }
}
