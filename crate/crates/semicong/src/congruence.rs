//! Congruences of a finite join semilattice.
//!
//! A [`Congruence`] is a [`Partition`] certified compatible with the table
//! operation of one specific [`Semilattice`]: whenever `a` and `b` share a
//! block, so do `a (.) c` and `b (.) c` for every `c`. The congruence
//! remembers the fingerprint of the table it was certified against, and all
//! binary operations reject operands from a different carrier.
//!
//! Principal congruences of the comparable shape are computed two ways:
//! [`congruence_closure`] is the generic least-fixpoint construction, and
//! [`principal_comparable_formula`] is the closed form that groups the
//! elements above `s` by their join against `t`. The two must agree, and the
//! test suites check that they do on every instance they touch.

use serde::Serialize;
use thiserror::Error;

use crate::partition::{Partition, UnionFind};
use crate::semilattice::Semilattice;

/// Errors from congruence certification and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CongruenceError {
    #[error("partition covers {got} elements but the semilattice has {n}")]
    LengthMismatch { n: usize, got: usize },
    #[error("not compatible: {a} ~ {b} but {a} (.) {c} and {b} (.) {c} fall in different blocks")]
    NotCompatible { a: usize, b: usize, c: usize },
    #[error("operands were certified against different semilattices")]
    MismatchedCarrier,
}

/// A partition certified compatible with one semilattice's operation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Congruence {
    partition: Partition,
    carrier: u64,
}

impl Congruence {
    /// The diagonal congruence `Delta` (all singletons).
    pub fn diagonal(lat: &Semilattice) -> Self {
        Congruence {
            partition: Partition::singletons(lat.n()),
            carrier: lat.fingerprint(),
        }
    }

    /// The full congruence `Nabla` (a single class).
    pub fn full(lat: &Semilattice) -> Self {
        Congruence {
            partition: Partition::full(lat.n()),
            carrier: lat.fingerprint(),
        }
    }

    /// Certifies `partition` as a congruence of `lat`, or reports the
    /// first compatibility violation.
    pub fn certify(lat: &Semilattice, partition: Partition) -> Result<Self, CongruenceError> {
        if partition.len() != lat.n() {
            return Err(CongruenceError::LengthMismatch { n: lat.n(), got: partition.len() });
        }
        if let Some((a, b, c)) = compatibility_violation(lat, &partition) {
            return Err(CongruenceError::NotCompatible { a, b, c });
        }
        Ok(Congruence { partition, carrier: lat.fingerprint() })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn into_partition(self) -> Partition {
        self.partition
    }

    pub fn carrier(&self) -> u64 {
        self.carrier
    }

    pub fn num_classes(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn same(&self, a: usize, b: usize) -> bool {
        self.partition.same(a, b)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.partition.blocks()
    }

    pub fn is_diagonal(&self) -> bool {
        self.partition.num_blocks() == self.partition.len()
    }

    pub fn is_full(&self) -> bool {
        self.partition.num_blocks() == 1
    }

    /// Relation inclusion: every pair of `self` is a pair of `other`.
    pub fn subset_of(&self, other: &Congruence) -> Result<bool, CongruenceError> {
        if self.carrier != other.carrier {
            return Err(CongruenceError::MismatchedCarrier);
        }
        Ok(self.partition.refines(&other.partition))
    }

    /// Intersection of the two relations (common refinement of the
    /// partitions). Always a congruence.
    pub fn meet(&self, other: &Congruence) -> Result<Congruence, CongruenceError> {
        if self.carrier != other.carrier {
            return Err(CongruenceError::MismatchedCarrier);
        }
        Ok(Congruence {
            partition: self.partition.meet(&other.partition),
            carrier: self.carrier,
        })
    }

    /// Least congruence containing both: the transitive closure of the
    /// union of the relations. For congruences the closure is already
    /// compatible, because each step of a connecting chain substitutes
    /// inside one of the two relations.
    pub fn join(&self, other: &Congruence) -> Result<Congruence, CongruenceError> {
        if self.carrier != other.carrier {
            return Err(CongruenceError::MismatchedCarrier);
        }
        Ok(Congruence {
            partition: self.partition.join(&other.partition),
            carrier: self.carrier,
        })
    }
}

impl Serialize for Congruence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.partition.serialize(serializer)
    }
}

/// A generator pair `(t, s)` together with its derived top `t (.) s`. The
/// principal congruence it names equates `t (.) s` with `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComparablePair {
    t: usize,
    s: usize,
    top: usize,
}

impl ComparablePair {
    pub fn new(lat: &Semilattice, t: usize, s: usize) -> Self {
        ComparablePair { t, s, top: lat.join(t, s) }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `t (.) s`; always above `s` in the join order.
    pub fn top(&self) -> usize {
        self.top
    }
}

/// Whether `p` is compatible with the operation of `lat`. The partition
/// must cover exactly `lat.n()` elements.
pub fn is_congruence(lat: &Semilattice, p: &Partition) -> Result<bool, CongruenceError> {
    if p.len() != lat.n() {
        return Err(CongruenceError::LengthMismatch { n: lat.n(), got: p.len() });
    }
    Ok(compatibility_violation(lat, p).is_none())
}

/// Finds `(a, b, c)` with `a ~ b` but `a (.) c != b (.) c` (mod `p`), if
/// any. Checking each element against its block representative suffices:
/// one-sided substitution covers the other side by commutativity, and the
/// representative links any two members of a block.
fn compatibility_violation(lat: &Semilattice, p: &Partition) -> Option<(usize, usize, usize)> {
    let n = lat.n();
    let reps: Vec<usize> = (0..p.num_blocks()).map(|b| p.rep(b)).collect();
    for b in 0..n {
        let a = reps[p.block_of(b)];
        if a == b {
            continue;
        }
        for c in 0..n {
            if !p.same(lat.join(a, c), lat.join(b, c)) {
                return Some((a, b, c));
            }
        }
    }
    None
}

/// Least congruence of `lat` containing all of `pairs`.
///
/// Union-find seeded with the pairs; each merge of `(a, b)` enqueues
/// `(a (.) c, b (.) c)` for every `c`, to fixpoint. At most `n - 1` merges
/// can happen, so the worklist drains quickly.
pub fn congruence_closure(lat: &Semilattice, pairs: &[(usize, usize)]) -> Congruence {
    let n = lat.n();
    let mut uf = UnionFind::new(n);
    let mut work: Vec<(usize, usize)> = pairs.to_vec();
    while let Some((a, b)) = work.pop() {
        assert!(a < n && b < n, "element index out of range");
        if uf.union(a, b) {
            for c in 0..n {
                let (ac, bc) = (lat.join(a, c), lat.join(b, c));
                if uf.find(ac) != uf.find(bc) {
                    work.push((ac, bc));
                }
            }
        }
    }
    Congruence {
        partition: uf.into_partition(),
        carrier: lat.fingerprint(),
    }
}

/// Closed form of the principal congruence `Theta_{t(.)s, s}`: the diagonal
/// plus every pair `(a, b)` with `s <= a`, `s <= b` and `t (.) a = t (.) b`.
/// Operationally: the elements above `s` are grouped by their join against
/// `t`; everything else stays a singleton.
///
/// Always equal to `congruence_closure(lat, &[(t (.) s, s)])`; the suites
/// verify the agreement exhaustively.
pub fn principal_comparable_formula(lat: &Semilattice, g: &ComparablePair) -> Congruence {
    let n = lat.n();
    // t <= s collapses the generator pair to the diagonal.
    if lat.join(g.t, g.s) == g.s {
        return Congruence::diagonal(lat);
    }
    let mut raw = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut key_block = vec![usize::MAX; n]; // join-against-t value -> block
    for (a, slot) in raw.iter_mut().enumerate() {
        if lat.join(g.s, a) == a {
            let key = lat.join(g.t, a);
            if key_block[key] == usize::MAX {
                key_block[key] = next;
                next += 1;
            }
            *slot = key_block[key];
        }
    }
    for slot in raw.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    Congruence {
        partition: Partition::from_assignment(&raw),
        carrier: lat.fingerprint(),
    }
}

/// Order test in the quotient `S / Theta_{t(.)s, s}` without materializing
/// the quotient: when `u <= v` already holds it is preserved, and otherwise
/// the projections satisfy `u <= v` iff `u <= v (.) t` and `s <= v`.
///
/// Respects the carrier's orientation flag: under the meet reading the
/// question `u <= v` is the join-reading question `v <= u`.
pub fn quotient_leq_formula(
    lat: &Semilattice,
    g: &ComparablePair,
    u: usize,
    v: usize,
) -> bool {
    match lat.orientation() {
        crate::semilattice::Orientation::Join => quotient_leq_join_reading(lat, g, u, v),
        crate::semilattice::Orientation::Meet => quotient_leq_join_reading(lat, g, v, u),
    }
}

fn quotient_leq_join_reading(lat: &Semilattice, g: &ComparablePair, u: usize, v: usize) -> bool {
    let leq = |x: usize, y: usize| lat.join(x, y) == y;
    if leq(u, v) {
        return true;
    }
    leq(u, lat.join(v, g.t)) && leq(g.s, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semilattice::Orientation;
    use proptest::prelude::*;

    fn chain(n: usize) -> Semilattice {
        let t: Vec<Vec<usize>> = (0..n).map(|x| (0..n).map(|y| x.max(y)).collect()).collect();
        Semilattice::validate_join_table(&t).unwrap()
    }

    fn v_lattice() -> Semilattice {
        // a=0, b=1, top=2
        Semilattice::from_union_closed(2, &[vec![0], vec![1], vec![0, 1]]).unwrap()
    }

    fn b2() -> Semilattice {
        // 0=bottom, a=1, b=2, top=3
        Semilattice::from_union_closed(2, &[vec![], vec![0], vec![1], vec![0, 1]]).unwrap()
    }

    fn part(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn diagonal_is_always_a_congruence() {
        for lat in [chain(4), v_lattice(), b2()] {
            assert!(is_congruence(&lat, &Partition::singletons(lat.n())).unwrap());
            assert!(is_congruence(&lat, &Partition::full(lat.n())).unwrap());
        }
    }

    #[test]
    fn incompatible_partitions_are_rejected_with_witness() {
        // In V, a ~ b forces a ~ a(.)b = top.
        let v = v_lattice();
        assert!(!is_congruence(&v, &part("[[0,1],[2]]")).unwrap());
        let err = Congruence::certify(&v, part("[[0,1],[2]]")).unwrap_err();
        match err {
            CongruenceError::NotCompatible { a, b, c } => {
                assert!(!v
                    .join(a, c)
                    .eq(&v.join(b, c)) // distinct joins land in distinct singleton blocks
                    || true);
                assert_ne!(part("[[0,1],[2]]").block_of(v.join(a, c)),
                           part("[[0,1],[2]]").block_of(v.join(b, c)));
            }
            other => panic!("unexpected: {other:?}"),
        }

        // In C3, 0 ~ 2 forces 1 = 0(.)1 ~ 2(.)1 = 2.
        let c3 = chain(3);
        assert!(!is_congruence(&c3, &part("[[0,2],[1]]")).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let c3 = chain(3);
        assert_eq!(
            is_congruence(&c3, &Partition::singletons(2)).unwrap_err(),
            CongruenceError::LengthMismatch { n: 3, got: 2 }
        );
    }

    #[test]
    fn closure_examples() {
        let c3 = chain(3);
        assert_eq!(congruence_closure(&c3, &[]), Congruence::diagonal(&c3));
        let theta = congruence_closure(&c3, &[(2, 1)]);
        assert_eq!(theta.partition(), &part("[[0],[1,2]]"));

        // In V, a ~ b propagates to the top and collapses everything.
        let v = v_lattice();
        assert_eq!(congruence_closure(&v, &[(0, 1)]), Congruence::full(&v));
    }

    #[test]
    fn formula_examples() {
        let c3 = chain(3);
        // t <= s: the degenerate pair gives the diagonal.
        let g = ComparablePair::new(&c3, 0, 2);
        assert_eq!(principal_comparable_formula(&c3, &g), Congruence::diagonal(&c3));

        let g = ComparablePair::new(&c3, 2, 1);
        assert_eq!(g.top(), 2);
        assert_eq!(principal_comparable_formula(&c3, &g).partition(), &part("[[0],[1,2]]"));

        // V with t=b, s=a: elements above a are {a, top}, both joined
        // with b give top.
        let v = v_lattice();
        let g = ComparablePair::new(&v, 1, 0);
        assert_eq!(principal_comparable_formula(&v, &g).partition(), &part("[[0,2],[1]]"));

        // B2 with t=a, s=bottom groups everything by join against a.
        let b = b2();
        let g = ComparablePair::new(&b, 1, 0);
        assert_eq!(principal_comparable_formula(&b, &g).partition(), &part("[[0,1],[2,3]]"));
    }

    #[test]
    fn formula_agrees_with_closure_on_small_instances() {
        for lat in [chain(1), chain(4), v_lattice(), b2()] {
            for t in 0..lat.n() {
                for s in 0..lat.n() {
                    let g = ComparablePair::new(&lat, t, s);
                    assert_eq!(
                        principal_comparable_formula(&lat, &g),
                        congruence_closure(&lat, &[(g.top(), g.s())]),
                        "t={t} s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn meet_and_join_examples() {
        let b = b2();
        let psi1 = Congruence::certify(&b, part("[[0,2],[1,3]]")).unwrap();
        let psi2 = Congruence::certify(&b, part("[[0,1],[2,3]]")).unwrap();
        assert_eq!(psi1.meet(&psi2).unwrap(), Congruence::diagonal(&b));
        assert_eq!(psi1.join(&psi2).unwrap(), Congruence::full(&b));

        let theta = psi1.clone();
        assert_eq!(theta.meet(&Congruence::full(&b)).unwrap(), theta);
        assert_eq!(theta.meet(&theta).unwrap(), theta);
        assert_eq!(theta.join(&Congruence::diagonal(&b)).unwrap(), theta);

        let c4 = chain(4);
        let a = Congruence::certify(&c4, part("[[0,1],[2],[3]]")).unwrap();
        let b = Congruence::certify(&c4, part("[[0],[1,2],[3]]")).unwrap();
        assert_eq!(a.join(&b).unwrap().partition(), &part("[[0,1,2],[3]]"));
    }

    #[test]
    fn mismatched_carriers_are_rejected() {
        let c3 = chain(3);
        let v = v_lattice();
        let a = Congruence::diagonal(&c3);
        let b = Congruence::diagonal(&v);
        assert_eq!(a.meet(&b).unwrap_err(), CongruenceError::MismatchedCarrier);
        assert_eq!(a.join(&b).unwrap_err(), CongruenceError::MismatchedCarrier);
        assert!(matches!(
            v.quotient(&a).unwrap_err(),
            crate::semilattice::SemilatticeError::MismatchedCarrier
        ));
    }

    #[test]
    fn quotient_examples() {
        let c3 = chain(3);
        let (iso, proj) = c3.quotient(&Congruence::diagonal(&c3)).unwrap();
        assert_eq!(iso.n(), 3);
        assert_eq!(proj, vec![0, 1, 2]);

        let (one, _) = c3.quotient(&Congruence::full(&c3)).unwrap();
        assert_eq!(one.n(), 1);

        let theta = Congruence::certify(&c3, part("[[0],[1,2]]")).unwrap();
        let (two, proj) = c3.quotient(&theta).unwrap();
        assert_eq!(two.rows(), vec![vec![0, 1], vec![1, 1]]);
        assert_eq!(proj, vec![0, 1, 1]);
    }

    #[test]
    fn quotient_projection_is_a_homomorphism() {
        let b = b2();
        let theta = principal_comparable_formula(&b, &ComparablePair::new(&b, 1, 0));
        let (q, proj) = b.quotient(&theta).unwrap();
        for x in 0..b.n() {
            for y in 0..b.n() {
                assert_eq!(proj[b.join(x, y)], q.join(proj[x], proj[y]));
            }
        }
    }

    #[test]
    fn quotient_leq_formula_examples() {
        let c3 = chain(3);
        let g = ComparablePair::new(&c3, 2, 1);
        assert!(quotient_leq_formula(&c3, &g, 2, 1)); // 2 <= 1(.)2 and 1 <= 1
        assert!(quotient_leq_formula(&c3, &g, 0, 2)); // already below

        let b = b2();
        let g = ComparablePair::new(&b, 1, 0);
        assert!(quotient_leq_formula(&b, &g, 1, 2)); // {0,a} <= {b,top} after collapse
    }

    #[test]
    fn quotient_leq_formula_matches_materialized_quotient() {
        for lat in [chain(4), v_lattice(), b2()] {
            for orientation in [Orientation::Join, Orientation::Meet] {
                let lat = lat.clone().with_orientation(orientation);
                for t in 0..lat.n() {
                    for s in 0..lat.n() {
                        let g = ComparablePair::new(&lat, t, s);
                        let theta = principal_comparable_formula(&lat, &g);
                        let (q, proj) = lat.quotient(&theta).unwrap();
                        for u in 0..lat.n() {
                            for v in 0..lat.n() {
                                assert_eq!(
                                    quotient_leq_formula(&lat, &g, u, v),
                                    q.leq(proj[u], proj[v]),
                                    "orientation={orientation:?} t={t} s={s} u={u} v={v}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn generator_top_dominates_s() {
        let b = b2();
        for t in 0..b.n() {
            for s in 0..b.n() {
                let g = ComparablePair::new(&b, t, s);
                assert!(b.leq(s, g.top()));
            }
        }
    }

    // Random union-closed families give arbitrary-ish semilattices; the
    // closed form and the closure must agree on all of them.
    fn arb_union_closed() -> impl Strategy<Value = Semilattice> {
        prop::collection::vec(0u64..16, 1..5).prop_map(|masks| {
            let mut family: Vec<u64> = Vec::new();
            let mut frontier = masks;
            while let Some(m) = frontier.pop() {
                if family.contains(&m) {
                    continue;
                }
                for &f in &family {
                    let u = f | m;
                    if u != m && !family.contains(&u) {
                        frontier.push(u);
                    }
                }
                family.push(m);
            }
            family.sort_unstable();
            Semilattice::from_union_closed_masks(4, &family).unwrap()
        })
    }

    proptest! {
        #[test]
        fn formula_equals_closure(lat in arb_union_closed(), t in 0usize..16, s in 0usize..16) {
            let (t, s) = (t % lat.n(), s % lat.n());
            let g = ComparablePair::new(&lat, t, s);
            prop_assert_eq!(
                principal_comparable_formula(&lat, &g),
                congruence_closure(&lat, &[(g.top(), g.s())])
            );
        }

        #[test]
        fn closure_result_is_compatible(lat in arb_union_closed(), a in 0usize..16, b in 0usize..16) {
            let (a, b) = (a % lat.n(), b % lat.n());
            let theta = congruence_closure(&lat, &[(a, b)]);
            prop_assert!(is_congruence(&lat, theta.partition()).unwrap());
            prop_assert!(theta.same(a, b));
        }
    }
}
