//! Pinned tolerances used by constructors, internal consistency checks and
//! the acceptance suite. Grouped by origin so no magic numbers float around
//! in the algorithms.

/// Orthonormality of the space basis under the rule's inner product.
pub const ORTHONORMALITY: f64 = 1e-10;

/// Default spectral rank cutoff relative to the largest Gram eigenvalue.
/// Double-precision Gram matrices of smooth families are reliable to ~1e-12,
/// so 1e-10 keeps two digits of headroom.
pub const RANK_TOLERANCE_DEFAULT: f64 = 1e-10;

/// Membership test: projection residual relative to the function norm.
pub const MEMBER_RESIDUAL: f64 = 1e-8;

/// Evaluation agreement for embedded members at the quadrature nodes.
pub const MEMBER_NODE_AGREEMENT: f64 = 1e-9;

/// Registration check: generator derivative vs. central finite difference.
pub const DERIVATIVE_REGISTRATION: f64 = 1e-6;

/// Kernel symmetry delta_a(b) = delta_b(a), relative to max(|value|, 1).
pub const DELTA_SYMMETRY: f64 = 1e-12;

/// Point-evaluation matrix D symmetry (absolute).
pub const FRAME_D_SYMMETRY: f64 = 1e-12;

/// Biorthogonality of the delta and sigma bases.
pub const BIORTHOGONALITY: f64 = 1e-10;

/// `sigma_a(points[b]) = delta_ab`.
pub const SIGMA_CARDINALITY: f64 = 1e-10;

/// Theta-basis orthonormality and point symmetry.
pub const THETA_IDENTITIES: f64 = 1e-10;

/// A*A = L, relative to the norm of L.
pub const SQUARE_ROOT_RESIDUAL: f64 = 1e-9;

/// L symmetry, relative to the norm of L.
pub const L_SYMMETRY: f64 = 1e-12;

/// Representation and pairing identities through a point frame.
pub const FRAME_IDENTITIES: f64 = 1e-9;

/// Reproducing property of delta ultrafunctions, relative to the norm of u.
pub const REPRODUCING: f64 = 1e-9;

/// Condition number of D beyond which a frame is rejected: past this,
/// duality residuals exceed 1e-4 in double precision.
pub const FRAME_CONDITION_LIMIT: f64 = 1e12;

/// Pivot magnitude below which a candidate point is considered dependent.
pub const PIVOT_CUTOFF: f64 = 1e-12;

/// Member fixed point: canonical extension of a member reproduces it.
pub const MEMBER_FIXED_POINT: f64 = 1e-10;

/// Default relative tolerance for the test-subspace equivalence check.
pub const D_EQUIVALENCE_DEFAULT: f64 = 1e-9;

/// Test-subspace members must vanish at the domain endpoints.
pub const ENDPOINT_VANISH: f64 = 1e-10;

/// Distribution embedding pairing residuals.
pub const EMBEDDING_RESIDUAL: f64 = 1e-10;

/// Cached operator matrix vs. direct extension on basis vectors.
pub const OPERATOR_MATRIX_AGREEMENT: f64 = 1e-10;

/// Derivative on derivative-closed spaces and the weak pairing identity.
pub const DERIVATIVE_IDENTITIES: f64 = 1e-9;

/// Fourier transform matrix unitarity and fourth-power identity.
pub const FOURIER_UNITARITY: f64 = 1e-9;

/// Fourier frame checks (delta/exponential correspondences, reconstruction).
pub const FOURIER_FRAME_CHECKS: f64 = 1e-8;

/// Transform matrix vs. direct quadrature of the defining integral.
pub const FOURIER_ORACLE: f64 = 1e-7;

/// Scalar-multiple detection when deduplicating a transform closure:
/// normalized inner product within this of modulus one.
pub const CLOSURE_DEDUP: f64 = 1e-10;

/// Residual of projecting the conjugate of a space member back into it.
pub const CONJUGATION_CLOSURE: f64 = 1e-10;

/// Divergence detection: pairing refinements may differ by at most
/// this multiple of the rule's declared tolerance.
pub const DIVERGENCE_FACTOR: f64 = 1e3;
