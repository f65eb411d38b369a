//! Newick reading and writing.
//!
//! Branch lengths are durations in years. Sampled ancestors are written as
//! zero-length tips. Bracketed comments such as
//! `[&support=0.9,age_median=2334,age_hpd={1943,2807}]` are kept on parse and
//! emitted on write.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::ParseError;
use crate::tree::{CalibrationPrior, Node, NodeId, TimeTree};

/// A generic, possibly multifurcating Newick node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewickNode {
    pub label: Option<String>,
    pub length: Option<f64>,
    pub comment: Option<String>,
    pub children: Vec<NewickNode>,
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s
            .chars()
            .any(|c| c.is_whitespace() || "(),:;[]'".contains(c))
}

fn write_label(out: &mut String, s: &str) {
    if needs_quotes(s) {
        out.push('\'');
        out.push_str(&s.replace('\'', "''"));
        out.push('\'');
    } else {
        out.push_str(s);
    }
}

impl NewickNode {
    fn write_into(&self, out: &mut String) {
        if !self.children.is_empty() {
            out.push('(');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.write_into(out);
            }
            out.push(')');
        }
        if let Some(l) = &self.label {
            write_label(out, l);
        }
        if let Some(c) = &self.comment {
            let _ = write!(out, "[{c}]");
        }
        if let Some(len) = self.length {
            let _ = write!(out, ":{len}");
        }
    }

    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out);
        out.push(';');
        out
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        if self.children.is_empty() {
            return self.label.iter().cloned().collect();
        }
        self.children.iter().flat_map(|c| c.leaf_labels()).collect()
    }
}

/// Converts a time tree into a Newick node, attaching the comment returned by
/// `annotate` to each node.
pub fn to_newick_node(
    tree: &TimeTree,
    names: &[String],
    annotate: &dyn Fn(NodeId) -> Option<String>,
) -> NewickNode {
    fn build(
        tree: &TimeTree,
        id: NodeId,
        names: &[String],
        annotate: &dyn Fn(NodeId) -> Option<String>,
    ) -> NewickNode {
        NewickNode {
            label: tree.is_tip(id).then(|| names[id].clone()),
            length: tree.branch_duration(id).ok(),
            comment: annotate(id),
            children: tree
                .children(id)
                .iter()
                .map(|&c| build(tree, c, names, annotate))
                .collect(),
        }
    }
    build(tree, tree.root(), names, annotate)
}

pub fn write_newick(tree: &TimeTree, names: &[String]) -> String {
    to_newick_node(tree, names, &|_| None).to_newick()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Newick {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn node(&mut self) -> Result<NewickNode, ParseError> {
        let mut node = NewickNode::default();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            loop {
                node.children.push(self.node()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected `,` or `)`")),
                }
            }
        }
        node.label = self.label()?;
        if self.peek() == Some(b'[') {
            node.comment = Some(self.comment()?);
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_digit() || b"+-.eE".contains(&self.src[self.pos]))
            {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let len: f64 = text.parse().map_err(|_| ParseError::Newick {
                position: start,
                message: format!("bad branch length `{text}`"),
            })?;
            node.length = Some(len);
            if self.peek() == Some(b'[') {
                let c = self.comment()?;
                node.comment.get_or_insert(c);
            }
        }
        Ok(node)
    }

    fn label(&mut self) -> Result<Option<String>, ParseError> {
        match self.peek() {
            Some(b'\'') => {
                self.pos += 1;
                let mut out = Vec::new();
                loop {
                    match self.src.get(self.pos) {
                        None => return Err(self.err("unterminated quoted label")),
                        Some(b'\'') if self.src.get(self.pos + 1) == Some(&b'\'') => {
                            out.push(b'\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(&c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Ok(Some(String::from_utf8_lossy(&out).into_owned()))
            }
            _ => {
                let start = self.pos;
                while self.pos < self.src.len() && !b"(),:;[]".contains(&self.src[self.pos]) {
                    self.pos += 1;
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos])
                    .trim()
                    .to_string();
                Ok((!s.is_empty()).then_some(s))
            }
        }
    }

    fn comment(&mut self) -> Result<String, ParseError> {
        let start = self.pos + 1;
        while self.pos < self.src.len() && self.src[self.pos] != b']' {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Err(self.err("unterminated comment"));
        }
        let c = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(c)
    }
}

/// Parses one Newick string into a generic node tree.
pub fn parse_newick_node(text: &str) -> Result<NewickNode, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let node = p.node()?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected `;`"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing characters after `;`"));
    }
    Ok(node)
}

/// Parses a binary dated tree. Tip ages are reconstructed from the branch
/// durations: with `calibrations`, the root age is placed so that tips sit
/// as close as possible to their calibration midpoints while staying inside
/// their bounds; without, the youngest tip is placed at age 0.
pub fn parse_newick(
    text: &str,
    taxa: &[String],
    calibrations: Option<&[CalibrationPrior]>,
) -> Result<TimeTree, ParseError> {
    let root = parse_newick_node(text)?;
    time_tree_from_node(&root, taxa, calibrations)
}

/// Parses a tree that carries its own taxon list (taxa in order of appearance).
pub fn parse_newick_standalone(text: &str) -> Result<(TimeTree, Vec<String>), ParseError> {
    let root = parse_newick_node(text)?;
    let taxa = root.leaf_labels();
    let tree = time_tree_from_node(&root, &taxa, None)?;
    Ok((tree, taxa))
}

pub fn time_tree_from_node(
    root: &NewickNode,
    taxa: &[String],
    calibrations: Option<&[CalibrationPrior]>,
) -> Result<TimeTree, ParseError> {
    let n = taxa.len();
    let mut nodes: Vec<Option<Node>> = vec![None; 2 * n - 1];
    let mut depth = vec![0.0; 2 * n - 1];
    let mut next_internal = n;

    // Returns the node id; assigns internal ids in postorder.
    fn visit(
        node: &NewickNode,
        parent_depth: f64,
        is_root: bool,
        taxa: &[String],
        nodes: &mut Vec<Option<Node>>,
        depth: &mut Vec<f64>,
        next_internal: &mut usize,
    ) -> Result<NodeId, ParseError> {
        let length = if is_root { 0.0 } else { node.length.unwrap_or(0.0) };
        if length < 0.0 {
            return Err(ParseError::Invalid("negative branch length".into()));
        }
        let d = parent_depth + length;
        if node.children.is_empty() {
            let label = node
                .label
                .as_ref()
                .ok_or_else(|| ParseError::Invalid("unlabeled tip".into()))?;
            let id = taxa
                .iter()
                .position(|t| t == label)
                .ok_or_else(|| ParseError::UnknownTaxon(label.clone()))?;
            if nodes[id].is_some() {
                return Err(ParseError::Invalid(format!("taxon `{label}` appears twice")));
            }
            nodes[id] = Some(Node {
                parent: None,
                children: Vec::new(),
                age: 0.0,
                taxon: Some(id),
                sampled_ancestor: !is_root && length == 0.0,
            });
            depth[id] = d;
            return Ok(id);
        }
        if node.children.len() != 2 {
            return Err(ParseError::Invalid(format!(
                "node with {} children; dated trees must be binary",
                node.children.len()
            )));
        }
        let kids: Vec<NodeId> = node
            .children
            .iter()
            .map(|c| visit(c, d, false, taxa, nodes, depth, next_internal))
            .collect::<Result<_, _>>()?;
        let id = *next_internal;
        if id >= nodes.len() {
            return Err(ParseError::Invalid("more internal nodes than a binary tree allows".into()));
        }
        *next_internal += 1;
        for &k in &kids {
            nodes[k].as_mut().unwrap().parent = Some(id);
        }
        nodes[id] = Some(Node {
            parent: None,
            children: kids,
            age: 0.0,
            taxon: None,
            sampled_ancestor: false,
        });
        depth[id] = d;
        Ok(id)
    }

    let root_id = visit(root, 0.0, true, taxa, &mut nodes, &mut depth, &mut next_internal)?;
    if nodes.iter().any(Option::is_none) {
        return Err(ParseError::Invalid(format!(
            "tree does not contain all {n} taxa exactly once"
        )));
    }
    let mut nodes: Vec<Node> = nodes.into_iter().map(Option::unwrap).collect();

    let root_age = match calibrations {
        None => (0..n).map(|i| depth[i]).fold(f64::NEG_INFINITY, f64::max),
        Some(cals) => {
            let lo = (0..n).map(|i| cals[i].min_age + depth[i]).fold(f64::NEG_INFINITY, f64::max);
            let hi = (0..n).map(|i| cals[i].max_age + depth[i]).fold(f64::INFINITY, f64::min);
            let mid = (0..n).map(|i| cals[i].midpoint() + depth[i]).sum::<f64>() / n as f64;
            if lo <= hi {
                mid.clamp(lo, hi)
            } else {
                // Inconsistent only by rounding when the tree fits its
                // calibrations.
                0.5 * (lo + hi)
            }
        }
    };
    for (i, node) in nodes.iter_mut().enumerate() {
        node.age = root_age - depth[i];
    }
    // Snap tips onto their calibration bounds to absorb rounding, and
    // sampled ancestors onto their attachment point.
    for i in 0..n {
        let mut age = nodes[i].age.max(0.0);
        if let Some(cals) = calibrations {
            let c = cals[i];
            if (age - c.min_age).abs() <= 1e-9 * (1.0 + root_age) {
                age = c.min_age;
            }
            if (age - c.max_age).abs() <= 1e-9 * (1.0 + root_age) {
                age = c.max_age;
            }
        } else if age.abs() <= 1e-9 * (1.0 + root_age) {
            age = 0.0;
        }
        nodes[i].age = age;
        if nodes[i].sampled_ancestor {
            let p = nodes[i].parent.unwrap();
            nodes[p].age = age;
        }
    }
    TimeTree::from_nodes(nodes, root_id).map_err(|e| ParseError::Invalid(e.to_string()))
}

pub const TREES_MAGIC: &str = "# glottochron trees";

/// Writes one `iteration<TAB>newick` line per sampled tree.
pub fn write_trees<W: Write>(
    trees: &[(u64, TimeTree)],
    names: &[String],
    mut sink: W,
) -> std::io::Result<()> {
    writeln!(sink, "{TREES_MAGIC}")?;
    for (iter, tree) in trees {
        writeln!(sink, "{iter}\t{}", write_newick(tree, names))?;
    }
    sink.flush()
}

pub fn parse_trees(
    text: &str,
    taxa: &[String],
    calibrations: Option<&[CalibrationPrior]>,
) -> Result<Vec<(u64, TimeTree)>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (iter, newick) = line
            .split_once('\t')
            .ok_or_else(|| ParseError::line(i + 1, "expected `iteration<TAB>newick`"))?;
        let iter: u64 = iter
            .trim()
            .parse()
            .map_err(|_| ParseError::line(i + 1, format!("bad iteration `{iter}`")))?;
        let tree = parse_newick(newick, taxa, calibrations).map_err(|e| ParseError::line(i + 1, e.to_string()))?;
        out.push((iter, tree));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("T{i}")).collect()
    }

    #[test]
    fn writes_a_cherry() {
        let tree = TimeTree::from_edges(2, &[0.0, 0.0, 100.0], &[(0, 2), (1, 2)], &[]).unwrap();
        let n = vec!["A".to_string(), "B".to_string()];
        let s = write_newick(&tree, &n);
        assert_eq!(s, "(A:100,B:100);");
        let back = parse_newick(&s, &n, None).unwrap();
        assert_eq!(back.root_age(), 100.0);
        assert_eq!(back, tree);
    }

    #[test]
    fn sampled_ancestors_are_zero_length_tips() {
        let tree = TimeTree::from_edges(
            3,
            &[1000.0, 0.0, 0.0, 1000.0, 3000.0],
            &[(0, 3), (1, 3), (3, 4), (2, 4)],
            &[0],
        )
        .unwrap();
        let n = vec!["Latin".to_string(), "Spanish".to_string(), "Hindi".to_string()];
        let s = write_newick(&tree, &n);
        assert!(s.contains("Latin:0"), "{s}");
        let back = parse_newick(&s, &n, None).unwrap();
        assert!(back.is_sampled_ancestor(0));
        assert_eq!(back.age(0), 1000.0);
    }

    #[test]
    fn comments_and_quotes_survive() {
        let text = "('Old English':10,(B,C)[&support=0.75,age_median=5,age_hpd={4,6}]:5)[&support=1];";
        let node = parse_newick_node(text).unwrap();
        assert_eq!(node.children[0].label.as_deref(), Some("Old English"));
        assert_eq!(
            node.children[1].comment.as_deref(),
            Some("&support=0.75,age_median=5,age_hpd={4,6}")
        );
        assert_eq!(parse_newick_node(&node.to_newick()).unwrap(), node);
    }

    #[test]
    fn malformed_input_reports_position() {
        for bad in ["(A:1,B:1", "(A:1,B:x);", "(A,B);junk", "(A:1,B:1)[&x"] {
            match parse_newick_node(bad) {
                Err(ParseError::Newick { .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn calibrated_reconstruction_uses_bounds() {
        // Fossil A has bounds [1600, 1700]; extant B pins the root exactly.
        let n = vec!["A".to_string(), "B".to_string()];
        let cals = [
            CalibrationPrior::new(1600.0, 1700.0).unwrap(),
            CalibrationPrior::EXTANT,
        ];
        let tree = parse_newick("(A:1350,B:3000);", &n, Some(&cals)).unwrap();
        assert_eq!(tree.root_age(), 3000.0);
        assert_eq!(tree.age(0), 1650.0);
        assert_eq!(tree.age(1), 0.0);
    }

    fn random_dated_tree(seed: u64, n: usize) -> (TimeTree, Vec<CalibrationPrior>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ages = vec![0.0; n];
        let mut cals = vec![CalibrationPrior::EXTANT; n];
        for i in 1..n {
            if rng.random_bool(0.3) {
                let lo = rng.random_range(100.0..3000.0);
                let hi = lo + rng.random_range(10.0..300.0);
                ages[i] = rng.random_range(lo..hi);
                cals[i] = CalibrationPrior::new(lo, hi).unwrap();
            }
        }
        let root = rng.random_range(4000.0..9000.0);
        (TimeTree::random(&ages, root, &mut rng).unwrap(), cals)
    }

    proptest! {
        #[test]
        fn dated_trees_round_trip(seed in 0u64..10_000) {
            let (tree, cals) = random_dated_tree(seed, 20);
            let n = names(20);
            let text = write_newick(&tree, &n);
            let back = parse_newick(&text, &n, Some(&cals)).unwrap();
            prop_assert_eq!(back.clades()[back.root()].len(), 20);
            // Same topology: identical clade sets.
            let mut a = tree.clades();
            let mut b = back.clades();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            for i in 0..tree.len() {
                // Internal ids are renumbered; compare tips directly and
                // internal nodes through their clades.
                if tree.is_tip(i) {
                    prop_assert!((tree.age(i) - back.age(i)).abs() <= 1e-6 * tree.root_age());
                }
            }
            let ages_of = |t: &TimeTree| {
                let mut v: Vec<(crate::clade::Clade, f64)> =
                    t.clades().into_iter().zip(t.nodes().iter().map(|n| n.age)).collect();
                v.sort_by(|x, y| x.0.cmp(&y.0));
                v
            };
            for ((ca, aa), (cb, ab)) in ages_of(&tree).iter().zip(ages_of(&back).iter()) {
                prop_assert_eq!(ca, cb);
                prop_assert!((aa - ab).abs() <= 1e-6 * tree.root_age().max(1.0));
            }
        }
    }

    #[test]
    fn tree_files_round_trip() {
        let (t1, cals) = random_dated_tree(1, 6);
        let (t2, _) = random_dated_tree(2, 6);
        let t2 = {
            // Keep t1's calibrations consistent for t2's fixed tips.
            let mut t = t2;
            for i in 0..6 {
                t.set_age(i, t.age(i).clamp(cals[i].min_age, cals[i].max_age));
            }
            t
        };
        let n = names(6);
        let mut buf = Vec::new();
        write_trees(&[(0, t1.clone()), (1000, t2)], &n, &mut buf).unwrap();
        let back = parse_trees(std::str::from_utf8(&buf).unwrap(), &n, Some(&cals)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, 1000);
        assert!((back[0].1.root_age() - t1.root_age()).abs() < 1e-6);
    }
}
