//! Fixed-width taxon bitsets used for clade bookkeeping.

use std::fmt;

/// A set of taxon ids stored as a bitset. Ordering is lexicographic over the
/// underlying words, which gives a deterministic order for reports.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clade {
    words: Vec<u64>,
}

impl Clade {
    pub fn empty(n_taxa: usize) -> Self {
        Clade {
            words: vec![0; n_taxa.div_ceil(64).max(1)],
        }
    }

    pub fn singleton(n_taxa: usize, taxon: usize) -> Self {
        let mut c = Clade::empty(n_taxa);
        c.insert(taxon);
        c
    }

    pub fn from_taxa(n_taxa: usize, taxa: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Clade::empty(n_taxa);
        for t in taxa {
            c.insert(t);
        }
        c
    }

    pub fn insert(&mut self, taxon: usize) {
        self.words[taxon / 64] |= 1 << (taxon % 64);
    }

    pub fn contains(&self, taxon: usize) -> bool {
        self.words
            .get(taxon / 64)
            .is_some_and(|w| w & (1 << (taxon % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &Clade) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &Clade) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Clade) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Two clades are compatible when they are nested or disjoint.
    pub fn is_compatible(&self, other: &Clade) -> bool {
        self.is_subset(other) || other.is_subset(self) || self.is_disjoint(other)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w & (1u64 << b) != 0).map(move |b| wi * 64 + b)
        })
    }
}

impl fmt::Debug for Clade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_operations() {
        let a = Clade::from_taxa(70, [1, 65]);
        let b = Clade::from_taxa(70, [1, 2, 65]);
        let c = Clade::from_taxa(70, [3]);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert!(a.is_disjoint(&c));
        assert!(a.is_compatible(&b) && a.is_compatible(&c));
        assert!(!Clade::from_taxa(70, [1, 3]).is_compatible(&b));
        assert_eq!(b.len(), 3);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![1, 2, 65]);
    }
}
