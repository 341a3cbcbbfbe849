//! Whole-lattice analysis: enumerating congruences, finding the maximal
//! ones, and decomposing a congruence into maximal factors.
//!
//! Maximal congruences of a join semilattice are exactly the two-class
//! partitions whose upper class absorbs joins and whose lower class is
//! closed under them. [`maximal_congruences`] enumerates these cuts by a
//! full bitmask scan. [`all_congruences`] offers two independent routes:
//! filtering every set partition (the oracle) and closing the maximal cuts
//! under intersection (which scales further); the two must return the same
//! list.

use serde::Serialize;
use thiserror::Error;

use crate::congruence::{is_congruence, Congruence, ComparablePair};
use crate::partition::Partition;
use crate::semilattice::Semilattice;

/// Cap for the 2^n upper-class scan in [`maximal_congruences`].
pub const MAXIMAL_SCAN_CAP: usize = 20;

/// Cap for set-partition filtering (Bell(7) = 877 candidates).
pub const BELL_FILTER_CAP: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{what} supports at most {cap} elements, got {n}")]
    SizeCapExceeded { what: &'static str, n: usize, cap: usize },
    #[error("congruence belongs to a different semilattice")]
    MismatchedCarrier,
    #[error("maximal factors meet to {got} instead of {expected} (engine bug)")]
    DecompositionMismatch { expected: Partition, got: Partition },
}

/// A maximal congruence as a two-class cut: `beta` is the upper class
/// (absorbing under join), `alpha` its complement (closed under join).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MaximalCut {
    pub beta: u64,
    pub alpha: u64,
}

impl MaximalCut {
    /// The two-block congruence this cut induces.
    pub fn to_congruence(&self, lat: &Semilattice) -> Congruence {
        let n = lat.n();
        let raw: Vec<usize> = (0..n)
            .map(|x| usize::from(self.beta >> x & 1 == 1))
            .collect();
        Congruence::certify(lat, Partition::from_assignment(&raw))
            .expect("cut invariants imply compatibility")
    }
}

/// Enumerates the maximal congruences of `lat` as cuts, ordered by the
/// bitmask value of the upper class.
pub fn maximal_cuts(lat: &Semilattice) -> Result<Vec<MaximalCut>, AnalysisError> {
    let n = lat.n();
    if n > MAXIMAL_SCAN_CAP {
        return Err(AnalysisError::SizeCapExceeded {
            what: "maximal congruence scan",
            n,
            cap: MAXIMAL_SCAN_CAP,
        });
    }
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut cuts = Vec::new();
    'beta: for beta in 1..full {
        // beta proper and nonempty; alpha = complement
        for b in 0..n {
            if beta >> b & 1 == 0 {
                continue;
            }
            for x in 0..n {
                if beta >> lat.join(b, x) & 1 == 0 {
                    continue 'beta; // upper class not absorbing
                }
            }
        }
        for a in 0..n {
            if beta >> a & 1 == 1 {
                continue;
            }
            for a2 in a..n {
                if beta >> a2 & 1 == 0 && beta >> lat.join(a, a2) & 1 == 1 {
                    continue 'beta; // lower class not join-closed
                }
            }
        }
        cuts.push(MaximalCut { beta, alpha: full & !beta });
    }
    Ok(cuts)
}

/// The maximal congruences of `lat`, in cut order.
pub fn maximal_congruences(lat: &Semilattice) -> Result<Vec<Congruence>, AnalysisError> {
    Ok(maximal_cuts(lat)?
        .iter()
        .map(|cut| cut.to_congruence(lat))
        .collect())
}

/// All maximal congruences containing `theta`. Their meet is `theta`
/// again; that is re-verified and a mismatch is reported as an engine bug.
/// `theta = Nabla` yields the empty list (the empty intersection).
pub fn papert_decomposition(
    lat: &Semilattice,
    theta: &Congruence,
) -> Result<Vec<Congruence>, AnalysisError> {
    if theta.carrier() != lat.fingerprint() {
        return Err(AnalysisError::MismatchedCarrier);
    }
    let factors: Vec<Congruence> = maximal_congruences(lat)?
        .into_iter()
        .filter(|m| theta.subset_of(m).expect("same carrier"))
        .collect();
    let mut meet = Congruence::full(lat);
    for m in &factors {
        meet = meet.meet(m).expect("same carrier");
    }
    if meet != *theta {
        return Err(AnalysisError::DecompositionMismatch {
            expected: theta.partition().clone(),
            got: meet.into_partition(),
        });
    }
    Ok(factors)
}

/// How [`all_congruences`] enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationStrategy {
    /// Generate every set partition of `n` elements and keep the
    /// compatible ones. Independent of the maximal-cut machinery.
    BellFilter,
    /// Close `{Nabla} ∪ maximal_congruences` under binary intersection.
    MeetClosure,
}

/// Every congruence of `lat`, sorted canonically. Both strategies return
/// identical lists; `BellFilter` is capped at [`BELL_FILTER_CAP`] elements.
pub fn all_congruences(
    lat: &Semilattice,
    strategy: EnumerationStrategy,
) -> Result<Vec<Congruence>, AnalysisError> {
    let n = lat.n();
    let mut out: Vec<Congruence> = match strategy {
        EnumerationStrategy::BellFilter => {
            if n > BELL_FILTER_CAP {
                return Err(AnalysisError::SizeCapExceeded {
                    what: "bell-filter enumeration",
                    n,
                    cap: BELL_FILTER_CAP,
                });
            }
            let mut found = Vec::new();
            for_each_set_partition(n, |p| {
                if is_congruence(lat, p).expect("length matches") {
                    found.push(Congruence::certify(lat, p.clone()).expect("just checked"));
                }
            });
            found
        }
        EnumerationStrategy::MeetClosure => {
            let mut known: std::collections::BTreeSet<Congruence> =
                std::iter::once(Congruence::full(lat))
                    .chain(maximal_congruences(lat)?)
                    .collect();
            let mut frontier: Vec<Congruence> = known.iter().cloned().collect();
            while let Some(c) = frontier.pop() {
                let snapshot: Vec<Congruence> = known.iter().cloned().collect();
                for k in snapshot {
                    let m = c.meet(&k).expect("same carrier");
                    if known.insert(m.clone()) {
                        frontier.push(m);
                    }
                }
            }
            known.into_iter().collect()
        }
    };
    out.sort();
    Ok(out)
}

/// Picks `BellFilter` when it is affordable, `MeetClosure` otherwise.
pub fn default_strategy(n: usize) -> EnumerationStrategy {
    if n <= BELL_FILTER_CAP {
        EnumerationStrategy::BellFilter
    } else {
        EnumerationStrategy::MeetClosure
    }
}

/// [`all_congruences`] with [`default_strategy`].
pub fn all_congruences_auto(lat: &Semilattice) -> Result<Vec<Congruence>, AnalysisError> {
    all_congruences(lat, default_strategy(lat.n()))
}

/// A family split by membership of the generator pair `(t (.) s, s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySplit {
    /// Members relating `t (.) s` to `s`.
    pub phis: Vec<Congruence>,
    /// Members keeping them apart.
    pub psis: Vec<Congruence>,
}

/// Splits `family` by whether each member contains the pair
/// `(t (.) s, s)`. Preserves input order on both sides.
pub fn classify_family(
    lat: &Semilattice,
    family: &[Congruence],
    g: &ComparablePair,
) -> Result<FamilySplit, AnalysisError> {
    let mut split = FamilySplit { phis: Vec::new(), psis: Vec::new() };
    for c in family {
        if c.carrier() != lat.fingerprint() {
            return Err(AnalysisError::MismatchedCarrier);
        }
        if c.same(g.top(), g.s()) {
            split.phis.push(c.clone());
        } else {
            split.psis.push(c.clone());
        }
    }
    Ok(split)
}

/// Calls `f` with every set partition of `{0, .., n-1}`, in lexicographic
/// restricted-growth order.
pub fn for_each_set_partition(n: usize, mut f: impl FnMut(&Partition)) {
    assert!(n >= 1);
    let mut a = vec![0usize; n];
    loop {
        f(&Partition::from_assignment(&a));
        // successor: bump the rightmost digit that may grow, reset tail
        let mut i = n;
        let mut prefix_max = vec![0usize; n];
        for k in 1..n {
            prefix_max[k] = prefix_max[k - 1].max(a[k - 1]);
        }
        for k in (1..n).rev() {
            if a[k] <= prefix_max[k] {
                i = k;
                break;
            }
        }
        if i == n {
            return;
        }
        a[i] += 1;
        a[i + 1..].fill(0);
    }
}
