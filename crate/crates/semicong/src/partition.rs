//! Canonical set partitions over `{0, .., n-1}`.
//!
//! A [`Partition`] stores one block id per element in restricted-growth
//! form: element 0 is always in block 0, and the first occurrence of a new
//! block id is exactly one more than the largest id seen so far. Blocks are
//! therefore numbered by their smallest member, and two partitions describe
//! the same equivalence relation iff their `block_id` vectors are equal.
//! Every constructor canonicalizes, so equality, ordering and hashing on the
//! raw vector are sound.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors raised when building a partition from untrusted block data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("partition has no elements")]
    Empty,
    #[error("element {0} appears in more than one block")]
    DuplicateElement(usize),
    #[error("element {0} is missing from the blocks (elements must cover 0..n)")]
    MissingElement(usize),
    #[error("invalid block syntax: {0}")]
    Syntax(String),
}

/// A partition of `{0, .., n-1}` in canonical restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    block_id: Vec<usize>,
}

impl Partition {
    /// The all-singletons partition of `n` elements.
    pub fn singletons(n: usize) -> Self {
        assert!(n >= 1, "partition needs at least one element");
        Partition {
            block_id: (0..n).collect(),
        }
    }

    /// The one-block partition of `n` elements.
    pub fn full(n: usize) -> Self {
        assert!(n >= 1, "partition needs at least one element");
        Partition {
            block_id: vec![0; n],
        }
    }

    /// Builds a partition from an arbitrary block assignment, relabeling
    /// block ids into canonical first-occurrence order.
    pub fn from_assignment(ids: &[usize]) -> Self {
        assert!(!ids.is_empty(), "partition needs at least one element");
        let mut relabel: Vec<Option<usize>> = Vec::new();
        let mut next = 0usize;
        let mut block_id = Vec::with_capacity(ids.len());
        for &raw in ids {
            if raw >= relabel.len() {
                relabel.resize(raw + 1, None);
            }
            let id = *relabel[raw].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            block_id.push(id);
        }
        Partition { block_id }
    }

    /// Builds a partition from explicit blocks. The blocks must cover
    /// `0..n` exactly once, where `n` is the total number of listed
    /// elements; block and element order are irrelevant.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self, PartitionError> {
        let n: usize = blocks.iter().map(|b| b.len()).sum();
        if n == 0 {
            return Err(PartitionError::Empty);
        }
        let mut raw = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &x in block {
                if x >= n {
                    return Err(PartitionError::MissingElement(x.min(n)));
                }
                if raw[x] != usize::MAX {
                    return Err(PartitionError::DuplicateElement(x));
                }
                raw[x] = b;
            }
        }
        // Full coverage: n values were placed with no duplicates, so every
        // slot is filled; the check above already caught out-of-range ids.
        debug_assert!(raw.iter().all(|&b| b != usize::MAX));
        Ok(Partition::from_assignment(&raw))
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        self.block_id.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructors require n >= 1
    }

    /// Number of blocks.
    pub fn num_blocks(&self) -> usize {
        self.block_id.iter().copied().max().unwrap() + 1
    }

    /// Block id of element `x`.
    pub fn block_of(&self, x: usize) -> usize {
        self.block_id[x]
    }

    /// Whether `a` and `b` lie in the same block.
    pub fn same(&self, a: usize, b: usize) -> bool {
        self.block_id[a] == self.block_id[b]
    }

    /// The smallest element of block `b`, which is also its first
    /// occurrence thanks to the canonical labeling.
    pub fn rep(&self, b: usize) -> usize {
        self.block_id.iter().position(|&id| id == b).unwrap()
    }

    /// All blocks, each sorted ascending, ordered by smallest member.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (x, &b) in self.block_id.iter().enumerate() {
            out[b].push(x);
        }
        out
    }

    /// Raw canonical block assignment.
    pub fn assignment(&self) -> &[usize] {
        &self.block_id
    }

    /// True iff every block of `self` is contained in a block of `other`,
    /// i.e. `self` is a finer relation than `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        assert_eq!(self.len(), other.len(), "partitions of different sets");
        let reps: Vec<usize> = (0..self.num_blocks()).map(|b| self.rep(b)).collect();
        self.block_id
            .iter()
            .enumerate()
            .all(|(x, &b)| other.block_id[x] == other.block_id[reps[b]])
    }

    /// Common refinement: blocks are the nonempty pairwise intersections.
    pub fn meet(&self, other: &Partition) -> Partition {
        assert_eq!(self.len(), other.len(), "partitions of different sets");
        let m = other.num_blocks();
        let raw: Vec<usize> = self
            .block_id
            .iter()
            .zip(&other.block_id)
            .map(|(&a, &b)| a * m + b)
            .collect();
        Partition::from_assignment(&raw)
    }

    /// Transitive closure of the union of the two relations.
    pub fn join(&self, other: &Partition) -> Partition {
        assert_eq!(self.len(), other.len(), "partitions of different sets");
        let mut uf = UnionFind::new(self.len());
        for p in [self, other] {
            for block in p.blocks() {
                for &x in &block[1..] {
                    uf.union(block[0], x);
                }
            }
        }
        uf.into_partition()
    }
}

impl fmt::Display for Partition {
    /// Prints the block form, e.g. `[[0,1],[2,3]]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, block) in self.blocks().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in block.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let blocks: Vec<Vec<usize>> =
            serde_json::from_str(s).map_err(|e| PartitionError::Syntax(e.to_string()))?;
        Partition::from_blocks(&blocks)
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.blocks().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let blocks = Vec::<Vec<usize>>::deserialize(deserializer)?;
        Partition::from_blocks(&blocks).map_err(D::Error::custom)
    }
}

/// Union-find with path compression, used for relation joins and the
/// congruence closure worklist.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; returns false if already merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Root at the smaller index so representatives stay minimal.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    pub(crate) fn into_partition(mut self) -> Partition {
        let roots: Vec<usize> = (0..self.parent.len()).map(|x| self.find(x)).collect();
        Partition::from_assignment(&roots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_relabeling() {
        let p = Partition::from_assignment(&[7, 3, 7, 1, 3]);
        assert_eq!(p.assignment(), &[0, 1, 0, 2, 1]);
        assert_eq!(p.num_blocks(), 3);
        assert_eq!(p.blocks(), vec![vec![0, 2], vec![1, 4], vec![3]]);
    }

    #[test]
    fn blocks_round_trip() {
        let p = Partition::from_blocks(&[vec![2, 0], vec![3, 1]]).unwrap();
        assert_eq!(p.to_string(), "[[0,2],[1,3]]");
        let q: Partition = "[[0,2],[1,3]]".parse().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn from_blocks_rejects_bad_covers() {
        assert_eq!(Partition::from_blocks(&[]), Err(PartitionError::Empty));
        assert_eq!(
            Partition::from_blocks(&[vec![0, 1], vec![1]]),
            Err(PartitionError::DuplicateElement(1))
        );
        // Two elements listed but ids {0, 2}: 2 is out of range for n = 2.
        assert!(Partition::from_blocks(&[vec![0], vec![2]]).is_err());
    }

    #[test]
    fn meet_and_join_small() {
        let a = Partition::from_blocks(&[vec![0, 1], vec![2, 3]]).unwrap();
        let b = Partition::from_blocks(&[vec![0, 2], vec![1, 3]]).unwrap();
        assert_eq!(a.meet(&b), Partition::singletons(4));
        assert_eq!(a.join(&b), Partition::full(4));
    }

    #[test]
    fn refines_is_a_partial_order_on_examples() {
        let d = Partition::singletons(4);
        let a = Partition::from_blocks(&[vec![0, 1], vec![2], vec![3]]).unwrap();
        let f = Partition::full(4);
        assert!(d.refines(&a) && a.refines(&f) && d.refines(&f));
        assert!(!a.refines(&d) && !f.refines(&a));
        assert!(a.refines(&a));
    }

    fn arb_assignment() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..6, 1..10)
    }

    proptest! {
        #[test]
        fn canonical_form_invariant(ids in arb_assignment()) {
            let p = Partition::from_assignment(&ids);
            let a = p.assignment();
            prop_assert_eq!(a[0], 0);
            let mut max_seen = 0usize;
            for &id in a {
                prop_assert!(id <= max_seen + 1);
                max_seen = max_seen.max(id);
            }
            // Same relation, canonical ids: re-canonicalizing is a no-op.
            prop_assert_eq!(&Partition::from_assignment(a), &p);
        }

        #[test]
        fn blocks_round_trip_any(ids in arb_assignment()) {
            let p = Partition::from_assignment(&ids);
            prop_assert_eq!(Partition::from_blocks(&p.blocks()).unwrap(), p);
        }

        #[test]
        fn lattice_absorption(xs in arb_assignment(), ys in arb_assignment(), zs in arb_assignment()) {
            let n = xs.len().min(ys.len()).min(zs.len());
            let p = Partition::from_assignment(&xs[..n]);
            let q = Partition::from_assignment(&ys[..n]);
            let r = Partition::from_assignment(&zs[..n]);
            prop_assert_eq!(p.join(&p.meet(&q)), p.clone());
            prop_assert_eq!(p.meet(&p.join(&q)), p.clone());
            // meet/join are monotone in each argument
            let pq = p.meet(&q);
            prop_assert!(pq.join(&r).refines(&p.join(&r)));
        }
    }
}
