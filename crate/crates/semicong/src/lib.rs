//! Congruences of finite join semilattices.
//!
//! The crate validates operation tables, computes principal congruences two
//! independent ways (a generic closure fixpoint and a closed form for
//! comparable generator pairs), does congruence-lattice arithmetic,
//! enumerates and decomposes against maximal two-class congruences, and
//! checks a family of distributivity-flavored identities on concrete finite
//! instances. A generator module supplies a reproducible corpus and a suite
//! module bundles the whole verification battery.
//!
//! Quick tour:
//!
//! ```
//! use semicong::{ComparablePair, Semilattice};
//! use semicong::congruence::{congruence_closure, principal_comparable_formula};
//!
//! // the three-element chain 0 < 1 < 2, join = max
//! let table = vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]];
//! let chain = Semilattice::validate_join_table(&table)?;
//!
//! let g = ComparablePair::new(&chain, 2, 1);
//! let theta = principal_comparable_formula(&chain, &g);
//! assert_eq!(theta.partition().to_string(), "[[0],[1,2]]");
//! assert_eq!(theta, congruence_closure(&chain, &[(g.top(), g.s())]));
//! # Ok::<(), semicong::SemilatticeError>(())
//! ```

pub mod analysis;
pub mod congruence;
pub mod generate;
pub mod identity;
pub mod partition;
pub mod rng;
pub mod semilattice;
pub mod suite;

pub use analysis::{
    all_congruences, all_congruences_auto, classify_family, maximal_congruences,
    papert_decomposition, AnalysisError, EnumerationStrategy, FamilySplit, MaximalCut,
};
pub use congruence::{
    congruence_closure, is_congruence, principal_comparable_formula, quotient_leq_formula,
    ComparablePair, Congruence, CongruenceError,
};
pub use generate::{desk_corpus, generate, CorpusEntry, GenError, GenSpec};
pub use identity::{
    check_generalized_crossing, check_maximal_crossing, check_one_psi, check_psi_join_full,
    check_pwd_law, random_identity_trials, search_naive_pwd, IdentityError, IdentityKind,
    IdentityReport, TrialPool,
};
pub use partition::{Partition, PartitionError};
pub use semilattice::{Orientation, Semilattice, SemilatticeError, MAX_ELEMENTS};
