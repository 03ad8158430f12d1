//! Finite-dimensional function spaces with reproducing-kernel machinery.
//!
//! The crate builds a function space from a finite generator set and a
//! quadrature rule, then derives from it:
//!
//! - delta functions `delta_q` (the reproducing kernel at q), a set of
//!   independent points, and the dual sigma/theta bases with the positive
//!   operator `L` and its square root `A`;
//! - canonical extensions of functionals (integral-against-f, point masses)
//!   and distribution embeddings against a designated test subspace;
//! - operators extended by projection: the generalized derivative and the
//!   Fourier transform on transform-closed generator sets;
//! - refinement chains that re-run an observable over nested generator sets
//!   and report whether it stabilizes.
//!
//! Everything is deterministic: spaces, frames and operators are immutable
//! after construction and safe to share across threads.

pub mod error;
pub mod extension;
pub mod families;
pub mod kernel;
pub mod operators;
pub mod quadrature;
pub mod refinement;
pub mod report;
pub mod space;
pub mod tol;

pub use error::{Error, Result};
pub use extension::{
    canonical_extend, canonical_extend_via_frame, d_equivalent, embed_distribution, FrameBasis,
    Functional, TestSubspace,
};
pub use families::{FamilyMember, Generator, GeneratorSet, HermiteExpansion, Support};
pub use kernel::{
    build_frame, delta_at, select_independent_points, select_independent_points_default, PointFrame,
};
pub use operators::{
    derivative, derivative_matrix, extend_operator, fourier_close, fourier_frame_checks,
    FourierSpace, OperatorExtension, RawOperator,
};
pub use quadrature::{build_rule, build_rule_with_grading, Domain, DomainKind, QuadratureRule};
pub use refinement::{run_chain, Observable, RefinementChain, RuleSpec, StageReport, Verdict};
pub use report::{CheckRecord, CheckReport};
pub use space::{build_space, lincomb, FunctionSpace, Ultrafunction};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
