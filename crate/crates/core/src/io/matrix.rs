//! Cognate-class tables, binary character matrices and the matrix file format.
//!
//! The file format is a header line `ntax nchar` followed by one
//! `name<TAB>chars` row per taxon with characters drawn from `0`, `1` and `?`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::ParseError;

/// One cell of the binary character matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Absent,
    Present,
    Missing,
}

impl Cell {
    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '0' => Some(Cell::Absent),
            '1' => Some(Cell::Present),
            '?' => Some(Cell::Missing),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Absent => '0',
            Cell::Present => '1',
            Cell::Missing => '?',
        }
    }
}

/// Raw cognate-class assignments: for each taxon and meaning, the set of
/// cognate classes its words belong to (empty when the meaning is missing).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CognateClassTable {
    pub taxa: Vec<String>,
    pub meanings: Vec<String>,
    /// `entries[taxon][meaning]`
    pub entries: Vec<Vec<Vec<u32>>>,
}

impl CognateClassTable {
    pub fn new(taxa: Vec<String>, meanings: Vec<String>) -> Self {
        let entries = vec![vec![Vec::new(); meanings.len()]; taxa.len()];
        CognateClassTable {
            taxa,
            meanings,
            entries,
        }
    }

    pub fn set(&mut self, taxon: usize, meaning: usize, class: u32) {
        let slot = &mut self.entries[taxon][meaning];
        if !slot.contains(&class) {
            slot.push(class);
            slot.sort_unstable();
        }
    }
}

/// Taxa × sites binary matrix. `site_block[s]` names the meaning a column was
/// derived from; matrices read from disk put every site in its own block.
#[derive(Debug, Clone, PartialEq)]
pub struct CognateMatrix {
    taxa: Vec<String>,
    rows: Vec<Vec<Cell>>,
    site_block: Vec<usize>,
}

impl CognateMatrix {
    pub fn new(taxa: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self, ParseError> {
        let n_sites = rows.first().map_or(0, Vec::len);
        let blocks = (0..n_sites).collect();
        CognateMatrix::with_blocks(taxa, rows, blocks)
    }

    pub fn with_blocks(
        taxa: Vec<String>,
        rows: Vec<Vec<Cell>>,
        site_block: Vec<usize>,
    ) -> Result<Self, ParseError> {
        if taxa.len() != rows.len() {
            return Err(ParseError::Invalid(format!(
                "{} taxa but {} rows",
                taxa.len(),
                rows.len()
            )));
        }
        if rows.iter().any(|r| r.len() != site_block.len()) {
            return Err(ParseError::Invalid("ragged matrix rows".into()));
        }
        let unique: BTreeSet<&String> = taxa.iter().collect();
        if unique.len() != taxa.len() {
            return Err(ParseError::Invalid("duplicate taxon names".into()));
        }
        Ok(CognateMatrix {
            taxa,
            rows,
            site_block,
        })
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn n_taxa(&self) -> usize {
        self.taxa.len()
    }

    pub fn n_sites(&self) -> usize {
        self.site_block.len()
    }

    pub fn cell(&self, taxon: usize, site: usize) -> Cell {
        self.rows[taxon][site]
    }

    pub fn row(&self, taxon: usize) -> &[Cell] {
        &self.rows[taxon]
    }

    pub fn column(&self, site: usize) -> Vec<Cell> {
        self.rows.iter().map(|r| r[site]).collect()
    }

    pub fn site_block(&self) -> &[usize] {
        &self.site_block
    }

    /// Taxa whose every cell is missing.
    pub fn fully_missing(&self) -> Vec<bool> {
        self.rows
            .iter()
            .map(|r| r.iter().all(|&c| c == Cell::Missing))
            .collect()
    }

    /// Same matrix with rows reordered to follow `order` (names).
    pub fn reordered(&self, order: &[String]) -> Result<CognateMatrix, ParseError> {
        let mut rows = Vec::with_capacity(order.len());
        for name in order {
            let i = self
                .taxa
                .iter()
                .position(|t| t == name)
                .ok_or_else(|| ParseError::UnknownTaxon(name.clone()))?;
            rows.push(self.rows[i].clone());
        }
        CognateMatrix::with_blocks(order.to_vec(), rows, self.site_block.clone())
    }
}

/// Codes a cognate-class table as a binary matrix: one column per
/// (meaning, class) pair, ordered by meaning and then class id. A taxon
/// missing for a meaning is `?` across that meaning's whole block.
///
/// With `allow_polymorphism` off, a taxon with more than one class for a
/// meaning is rejected.
pub fn binarize(
    table: &CognateClassTable,
    allow_polymorphism: bool,
) -> Result<CognateMatrix, ParseError> {
    if table.taxa.is_empty() || table.meanings.is_empty() {
        return Err(ParseError::Invalid("empty cognate table".into()));
    }
    let mut rows = vec![Vec::new(); table.taxa.len()];
    let mut site_block = Vec::new();
    for (m, meaning) in table.meanings.iter().enumerate() {
        let classes: BTreeSet<u32> = table
            .entries
            .iter()
            .flat_map(|row| row[m].iter().copied())
            .collect();
        if classes.is_empty() {
            return Err(ParseError::Invalid(format!(
                "meaning `{meaning}` has no cognate classes"
            )));
        }
        for (t, row) in table.entries.iter().enumerate() {
            if row[m].len() > 1 && !allow_polymorphism {
                return Err(ParseError::Invalid(format!(
                    "taxon `{}` has {} cognate classes for meaning `{meaning}`",
                    table.taxa[t],
                    row[m].len()
                )));
            }
        }
        for class in &classes {
            site_block.push(m);
            for (t, row) in table.entries.iter().enumerate() {
                let cell = if row[m].is_empty() {
                    Cell::Missing
                } else if row[m].contains(class) {
                    Cell::Present
                } else {
                    Cell::Absent
                };
                rows[t].push(cell);
            }
        }
    }
    CognateMatrix::with_blocks(table.taxa.clone(), rows, site_block)
}

/// Recovers class memberships from a binarized matrix: for each taxon and
/// block, the within-block column offsets that are present.
pub fn reconstruct_classes(matrix: &CognateMatrix) -> Vec<BTreeMap<usize, Vec<usize>>> {
    let mut block_start: BTreeMap<usize, usize> = BTreeMap::new();
    for (s, &b) in matrix.site_block().iter().enumerate() {
        block_start.entry(b).or_insert(s);
    }
    (0..matrix.n_taxa())
        .map(|t| {
            let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (s, &b) in matrix.site_block().iter().enumerate() {
                match matrix.cell(t, s) {
                    Cell::Present => out.entry(b).or_default().push(s - block_start[&b]),
                    Cell::Absent => {
                        out.entry(b).or_default();
                    }
                    Cell::Missing => {}
                }
            }
            out
        })
        .collect()
}

pub fn parse_matrix(text: &str) -> Result<CognateMatrix, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::line(1, "missing `ntax nchar` header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| ParseError::line(hline, format!("bad dimension `{s}`")))
    };
    if dims.len() != 2 {
        return Err(ParseError::line(hline, "header must be `ntax nchar`"));
    }
    let (ntax, nchar) = (parse_dim(dims[0])?, parse_dim(dims[1])?);

    let mut taxa = Vec::with_capacity(ntax);
    let mut rows = Vec::with_capacity(ntax);
    for (lineno, line) in lines {
        let (name, chars) = line
            .split_once('\t')
            .ok_or_else(|| ParseError::line(lineno, "expected `name<TAB>characters`"))?;
        let name = name.trim().to_string();
        if name.is_empty() {
            return Err(ParseError::line(lineno, "empty taxon name"));
        }
        if taxa.contains(&name) {
            return Err(ParseError::line(lineno, format!("duplicate taxon `{name}`")));
        }
        let mut row = Vec::with_capacity(nchar);
        for (col, ch) in chars.trim().chars().enumerate() {
            let cell = Cell::from_char(ch).ok_or_else(|| {
                ParseError::line(lineno, format!("bad character `{ch}` at column {}", col + 1))
            })?;
            row.push(cell);
        }
        if row.len() != nchar {
            return Err(ParseError::line(
                lineno,
                format!("expected {nchar} characters, found {}", row.len()),
            ));
        }
        taxa.push(name);
        rows.push(row);
    }
    if taxa.len() != ntax {
        return Err(ParseError::line(
            hline,
            format!("header declares {ntax} taxa but {} rows follow", taxa.len()),
        ));
    }
    CognateMatrix::new(taxa, rows)
}

pub fn write_matrix(matrix: &CognateMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", matrix.n_taxa(), matrix.n_sites());
    for (t, name) in matrix.taxa().iter().enumerate() {
        let chars: String = matrix.row(t).iter().map(|c| c.to_char()).collect();
        let _ = writeln!(out, "{name}\t{chars}");
    }
    out
}
