//! Finite join semilattices as validated operation tables.
//!
//! A [`Semilattice`] is an `n x n` table of element indices that has been
//! certified idempotent, commutative, associative and closed. Elements are
//! dense indices `0..n`; labels, when present, are presentation only. The
//! induced order is `x <= y` iff `x (.) y = y`.
//!
//! A meet semilattice is the same algebra read upside down, so meet tables
//! are supported by reinterpretation: the table is validated by the exact
//! same axioms and an [`Orientation`] flag flips how [`Semilattice::leq`]
//! reads the table. Nothing else consults the flag.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congruence::Congruence;
use crate::rng::Fnv1a64;

/// Hard cap on the element count; bitmask algorithms assume it.
pub const MAX_ELEMENTS: usize = 64;

/// Which way [`Semilattice::leq`] reads the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// `x <= y` iff `x (.) y = y` (the table is a join table).
    #[default]
    Join,
    /// `x <= y` iff `x (.) y = x` (the table is a meet table).
    Meet,
}

/// Validation and construction errors, each carrying the witness tuple
/// that exhibits the violation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemilatticeError {
    #[error("table is empty")]
    Empty,
    #[error("table is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("{n} elements exceed the supported maximum of {max}")]
    TooManyElements { n: usize, max: usize },
    #[error("entry ({x},{y}) = {value} is outside [0, {n})")]
    OutOfRangeEntry { x: usize, y: usize, value: usize, n: usize },
    #[error("not idempotent: {x} (.) {x} = {got}")]
    NotIdempotent { x: usize, got: usize },
    #[error("not commutative: {x} (.) {y} = {xy} but {y} (.) {x} = {yx}")]
    NotCommutative { x: usize, y: usize, xy: usize, yx: usize },
    #[error(
        "not associative: ({x} (.) {y}) (.) {z} = {left} but {x} (.) ({y} (.) {z}) = {right}"
    )]
    NotAssociative { x: usize, y: usize, z: usize, left: usize, right: usize },
    #[error("sets {i} and {j} are duplicates")]
    DuplicateSet { i: usize, j: usize },
    #[error("family is not union-closed: union of sets {i} and {j} ({missing:?}) is absent")]
    NotUnionClosed { i: usize, j: usize, missing: Vec<usize> },
    #[error("set member {member} is outside the ground set [0, {ground})")]
    GroundOutOfRange { member: usize, ground: usize },
    #[error("ground set size {ground} exceeds {max} (bitmask representation)")]
    GroundTooLarge { ground: usize, max: usize },
    #[error("expected {n} labels, got {got}")]
    LabelCountMismatch { n: usize, got: usize },
    #[error("congruence was certified against a different semilattice")]
    MismatchedCarrier,
    #[error("semilattice document must contain exactly one of \"join\" or \"sets\"")]
    AmbiguousDocument,
    #[error("semilattice document field {0:?} is missing")]
    MissingField(&'static str),
    #[error("declared n = {declared} does not match table size {actual}")]
    DeclaredSizeMismatch { declared: usize, actual: usize },
}

/// A certified finite join semilattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semilattice {
    n: usize,
    table: Vec<usize>, // row-major n*n
    labels: Option<Vec<String>>,
    orientation: Orientation,
    fingerprint: u64,
}

impl Semilattice {
    /// Certifies a square table as a semilattice operation. Checks run in
    /// the order closure, idempotency, commutativity, associativity and
    /// report the first violation with its witness.
    #[allow(clippy::needless_range_loop)] // indices are the witnesses
    pub fn validate_join_table(table: &[Vec<usize>]) -> Result<Self, SemilatticeError> {
        let n = table.len();
        if n == 0 {
            return Err(SemilatticeError::Empty);
        }
        if n > MAX_ELEMENTS {
            return Err(SemilatticeError::TooManyElements { n, max: MAX_ELEMENTS });
        }
        for (row, r) in table.iter().enumerate() {
            if r.len() != n {
                return Err(SemilatticeError::NotSquare { row, len: r.len(), n });
            }
        }
        for x in 0..n {
            for y in 0..n {
                let v = table[x][y];
                if v >= n {
                    return Err(SemilatticeError::OutOfRangeEntry { x, y, value: v, n });
                }
            }
        }
        for x in 0..n {
            if table[x][x] != x {
                return Err(SemilatticeError::NotIdempotent { x, got: table[x][x] });
            }
        }
        for x in 0..n {
            for y in (x + 1)..n {
                if table[x][y] != table[y][x] {
                    return Err(SemilatticeError::NotCommutative {
                        x,
                        y,
                        xy: table[x][y],
                        yx: table[y][x],
                    });
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let left = table[table[x][y]][z];
                    let right = table[x][table[y][z]];
                    if left != right {
                        return Err(SemilatticeError::NotAssociative { x, y, z, left, right });
                    }
                }
            }
        }
        let flat: Vec<usize> = table.iter().flatten().copied().collect();
        let fingerprint = fingerprint_of(n, &flat);
        Ok(Semilattice {
            n,
            table: flat,
            labels: None,
            orientation: Orientation::Join,
            fingerprint,
        })
    }

    /// Builds the semilattice of a union-closed family of subsets of
    /// `{0, .., ground-1}`. Element `i` is the `i`-th set of `sets`;
    /// join is union and the induced order is inclusion.
    pub fn from_union_closed(ground: usize, sets: &[Vec<usize>]) -> Result<Self, SemilatticeError> {
        if ground > MAX_ELEMENTS {
            return Err(SemilatticeError::GroundTooLarge { ground, max: MAX_ELEMENTS });
        }
        let mut masks = Vec::with_capacity(sets.len());
        for set in sets {
            let mut mask = 0u64;
            for &member in set {
                if member >= ground {
                    return Err(SemilatticeError::GroundOutOfRange { member, ground });
                }
                mask |= 1 << member;
            }
            masks.push(mask);
        }
        Semilattice::from_union_closed_masks(ground, &masks)
    }

    /// Mask form of [`Semilattice::from_union_closed`]; bit `b` of a mask
    /// is ground element `b`.
    pub fn from_union_closed_masks(
        ground: usize,
        masks: &[u64],
    ) -> Result<Self, SemilatticeError> {
        if ground > MAX_ELEMENTS {
            return Err(SemilatticeError::GroundTooLarge { ground, max: MAX_ELEMENTS });
        }
        let n = masks.len();
        if n == 0 {
            return Err(SemilatticeError::Empty);
        }
        if n > MAX_ELEMENTS {
            return Err(SemilatticeError::TooManyElements { n, max: MAX_ELEMENTS });
        }
        if ground < MAX_ELEMENTS {
            let full = (1u64 << ground) - 1;
            for &m in masks {
                if m & !full != 0 {
                    let member = (m & !full).trailing_zeros() as usize;
                    return Err(SemilatticeError::GroundOutOfRange { member, ground });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if masks[i] == masks[j] {
                    return Err(SemilatticeError::DuplicateSet { i, j });
                }
            }
        }
        let index_of = |mask: u64| masks.iter().position(|&m| m == mask);
        let mut table = vec![vec![0usize; n]; n];
        for i in 0..n {
            for j in 0..n {
                let union = masks[i] | masks[j];
                match index_of(union) {
                    Some(k) => table[i][j] = k,
                    None => {
                        return Err(SemilatticeError::NotUnionClosed {
                            i: i.min(j),
                            j: i.max(j),
                            missing: mask_to_set(union),
                        })
                    }
                }
            }
        }
        let mut lat = Semilattice::validate_join_table(&table)
            .expect("union tables satisfy the semilattice axioms");
        lat.labels = Some(masks.iter().map(|&m| set_label(m)).collect());
        Ok(lat)
    }

    /// Element count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The table operation. Panics on out-of-range indices.
    pub fn join(&self, x: usize, y: usize) -> usize {
        assert!(x < self.n && y < self.n, "element index out of range");
        self.table[x * self.n + y]
    }

    /// Order test in the direction given by the orientation flag.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        match self.orientation {
            Orientation::Join => self.join(x, y) == y,
            Orientation::Meet => self.join(x, y) == x,
        }
    }

    /// The greatest element under the join reading (the absorbing element
    /// of the table).
    pub fn top(&self) -> usize {
        (1..self.n).fold(0, |acc, x| self.join(acc, x))
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Reinterprets the table with the given order reading. The algebra,
    /// its congruences and its fingerprint are unchanged.
    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, SemilatticeError> {
        if labels.len() != self.n {
            return Err(SemilatticeError::LabelCountMismatch { n: self.n, got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Stable 64-bit digest of `(n, table)`. Congruences record it to
    /// reject cross-semilattice operations.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// The table as rows.
    pub fn rows(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|x| self.table[x * self.n..(x + 1) * self.n].to_vec())
            .collect()
    }

    /// Quotient by a congruence: elements are the blocks of `theta`,
    /// numbered by smallest original member, and the block join is the
    /// block of any representatives' join. Also returns the projection
    /// map from old elements to blocks, a surjective homomorphism.
    pub fn quotient(&self, theta: &Congruence) -> Result<(Semilattice, Vec<usize>), SemilatticeError> {
        if theta.carrier() != self.fingerprint {
            return Err(SemilatticeError::MismatchedCarrier);
        }
        let p = theta.partition();
        let m = p.num_blocks();
        let reps: Vec<usize> = (0..m).map(|b| p.rep(b)).collect();
        let mut table = vec![vec![0usize; m]; m];
        for (bi, &ri) in reps.iter().enumerate() {
            for (bj, &rj) in reps.iter().enumerate() {
                table[bi][bj] = p.block_of(self.join(ri, rj));
            }
        }
        let blocks = p.blocks();
        let labels: Vec<String> = blocks
            .iter()
            .map(|block| {
                let names: Vec<String> = block
                    .iter()
                    .map(|&x| match &self.labels {
                        Some(ls) => ls[x].clone(),
                        None => x.to_string(),
                    })
                    .collect();
                format!("{{{}}}", names.join(","))
            })
            .collect();
        let lat = Semilattice::validate_join_table(&table)?
            .with_labels(labels)?
            .with_orientation(self.orientation);
        Ok((lat, p.assignment().to_vec()))
    }

    /// Parses the JSON semilattice document. Exactly one of `join` and
    /// `sets` must be present:
    /// `{"n": 3, "join": [[..],..], "labels": [..]?}` or
    /// `{"ground": 2, "sets": [[..],..]}`.
    pub fn from_json_str(text: &str) -> Result<Self, LoadError> {
        let doc: SemilatticeDoc = serde_json::from_str(text)?;
        Semilattice::from_doc(doc).map_err(LoadError::Invalid)
    }

    fn from_doc(doc: SemilatticeDoc) -> Result<Self, SemilatticeError> {
        match (doc.join, doc.sets) {
            (Some(table), None) => {
                let declared = doc.n.ok_or(SemilatticeError::MissingField("n"))?;
                if declared != table.len() {
                    return Err(SemilatticeError::DeclaredSizeMismatch {
                        declared,
                        actual: table.len(),
                    });
                }
                let lat = Semilattice::validate_join_table(&table)?;
                match doc.labels {
                    Some(labels) => lat.with_labels(labels),
                    None => Ok(lat),
                }
            }
            (None, Some(sets)) => {
                let ground = doc.ground.ok_or(SemilatticeError::MissingField("ground"))?;
                let lat = Semilattice::from_union_closed(ground, &sets)?;
                match doc.labels {
                    Some(labels) => lat.with_labels(labels),
                    None => Ok(lat),
                }
            }
            _ => Err(SemilatticeError::AmbiguousDocument),
        }
    }

    /// The canonical output document (always in `join` form).
    pub fn to_doc(&self) -> SemilatticeDoc {
        SemilatticeDoc {
            n: Some(self.n),
            join: Some(self.rows()),
            ground: None,
            sets: None,
            labels: self.labels.clone(),
        }
    }
}

impl Serialize for Semilattice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(serializer)
    }
}

impl fmt::Display for Semilattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "semilattice(n={})", self.n)
    }
}

/// On-disk form of a semilattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemilatticeDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub join: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// Errors from reading a semilattice document.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(SemilatticeError),
}

fn fingerprint_of(n: usize, flat: &[usize]) -> u64 {
    let mut h = Fnv1a64::new();
    h.write_u64(n as u64);
    for &v in flat {
        h.write_u64(v as u64);
    }
    h.finish()
}

fn mask_to_set(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

fn set_label(mask: u64) -> String {
    let members: Vec<String> = mask_to_set(mask).iter().map(|b| b.to_string()).collect();
    format!("{{{}}}", members.join(","))
}
