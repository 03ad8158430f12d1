//! Operators extended to the space by projection: apply the raw operator,
//! then canonically extend the result back into the space. Linear operators
//! cache their matrix over the orthonormal basis.
//!
//! The generalized derivative differentiates through the generator
//! combinations (never by finite differences) and projects, so it extends
//! d/dx exactly on derivative-closed spaces. The Fourier transform is
//! symbolic per family: generators carrying Hermite-mode expansions map
//! through the eigenvalue relation, the generator set is closed under
//! transform images and conjugates, and the resulting matrix is unitary with
//! fourth power equal to the identity.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extension::{canonical_extend, Functional};
use crate::families::{FamilyMember, Generator, GeneratorSet, HermiteExpansion};
use crate::kernel::PointFrame;
use crate::report::{CheckRecord, CheckReport};
use crate::space::{FunctionSpace, Ultrafunction};
use crate::tol;

/// The action of a raw operator: maps a member to a functional that the
/// canonical extension accepts.
pub type RawOperatorFn = Arc<dyn Fn(&Ultrafunction) -> Result<Functional> + Send + Sync>;

#[derive(Clone)]
pub struct RawOperator {
    name: String,
    linear: bool,
    apply: RawOperatorFn,
}

impl std::fmt::Debug for RawOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RawOperator({}, linear: {})", self.name, self.linear)
    }
}

impl RawOperator {
    pub fn new(name: impl Into<String>, linear: bool, apply: RawOperatorFn) -> Self {
        Self {
            name: name.into(),
            linear,
            apply,
        }
    }

    pub fn identity() -> Self {
        Self::new(
            "identity",
            true,
            Arc::new(|u: &Ultrafunction| {
                let u = u.clone();
                Ok(Functional::integral_against(
                    "identity(u)",
                    Arc::new(move |x| u.evaluate(x).expect("nodes lie in the domain")),
                    vec![],
                ))
            }),
        )
    }

    pub fn multiplication_by_x() -> Self {
        Self::new(
            "multiplication_by_x",
            true,
            Arc::new(|u: &Ultrafunction| {
                let u = u.clone();
                Ok(Functional::integral_against(
                    "x*u",
                    Arc::new(move |x| {
                        Complex64::new(x, 0.0) * u.evaluate(x).expect("nodes lie in the domain")
                    }),
                    vec![],
                ))
            }),
        )
    }

    /// Pointwise square (bilinear, not the squared modulus).
    pub fn square() -> Self {
        Self::new(
            "square",
            false,
            Arc::new(|u: &Ultrafunction| {
                let u = u.clone();
                Ok(Functional::integral_against(
                    "u^2",
                    Arc::new(move |x| {
                        let v = u.evaluate(x).expect("nodes lie in the domain");
                        v * v
                    }),
                    vec![],
                ))
            }),
        )
    }

    /// Exact differentiation through the generator combinations.
    pub fn derivative() -> Self {
        Self::new(
            "derivative",
            true,
            Arc::new(|u: &Ultrafunction| {
                let u = u.clone();
                // Surface missing derivative evaluators eagerly.
                u.space()
                    .basis_derivative_at(u.space().rule().domain().midpoint())?;
                Ok(Functional::integral_against(
                    "u'",
                    Arc::new(move |x| {
                        let db = u
                            .space()
                            .basis_derivative_at(x)
                            .expect("derivative availability checked above");
                        u.coefficients()
                            .iter()
                            .zip(db.iter())
                            .map(|(c, d)| c * d)
                            .sum()
                    }),
                    vec![],
                ))
            }),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }
}

/// A raw operator extended to the space, with a cached matrix when linear.
#[derive(Debug)]
pub struct OperatorExtension {
    space: Arc<FunctionSpace>,
    raw: RawOperator,
    matrix: Option<DMatrix<Complex64>>,
}

/// Builds the extension; linear operators get their matrix assembled column
/// by column on the basis vectors.
pub fn extend_operator(space: &Arc<FunctionSpace>, raw: RawOperator) -> Result<OperatorExtension> {
    let matrix = if raw.linear {
        let beta = space.dimension();
        let mut m = DMatrix::<Complex64>::zeros(beta, beta);
        for k in 0..beta {
            let image = canonical_extend(space, &(raw.apply)(&space.basis_vector(k))?)?;
            m.set_column(k, image.coefficients());
        }
        Some(m)
    } else {
        None
    };
    Ok(OperatorExtension {
        space: Arc::clone(space),
        raw,
        matrix,
    })
}

impl OperatorExtension {
    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn raw(&self) -> &RawOperator {
        &self.raw
    }

    pub fn matrix(&self) -> Option<&DMatrix<Complex64>> {
        self.matrix.as_ref()
    }

    /// Applies the extension: cached matrix when available, otherwise apply
    /// the raw operator and canonically extend.
    pub fn apply(&self, u: &Ultrafunction) -> Result<Ultrafunction> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        match &self.matrix {
            Some(m) => self.space.from_coefficients(m * u.coefficients()),
            None => self.apply_direct(u),
        }
    }

    /// The uncached path: raw action followed by canonical extension.
    pub fn apply_direct(&self, u: &Ultrafunction) -> Result<Ultrafunction> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        canonical_extend(&self.space, &(self.raw.apply)(u)?)
    }
}

/// The generalized derivative: differentiate through the generator
/// combinations, then orthogonally project back onto the space. When u' is
/// already a member, this is exactly u'.
pub fn derivative(u: &Ultrafunction) -> Result<Ultrafunction> {
    let space = u.space();
    let rule = space.rule();
    let mut values = Vec::with_capacity(rule.len());
    for &x in rule.nodes() {
        let db = space.basis_derivative_at(x)?;
        values.push(
            u.coefficients()
                .iter()
                .zip(db.iter())
                .map(|(c, d)| c * d)
                .sum(),
        );
    }
    space.from_coefficients(space.project_node_values(&values))
}

/// Matrix of the generalized derivative over the orthonormal basis.
pub fn derivative_matrix(space: &Arc<FunctionSpace>) -> Result<DMatrix<Complex64>> {
    let beta = space.dimension();
    let mut m = DMatrix::<Complex64>::zeros(beta, beta);
    for k in 0..beta {
        let column = derivative(&space.basis_vector(k))?;
        m.set_column(k, column.coefficients());
    }
    Ok(m)
}

/// Closes a generator set under the Fourier transform and complex
/// conjugation: adds the transform images of order 1..3 and all conjugates,
/// deduplicated up to scalar multiples. Every member must carry a
/// Hermite-mode expansion.
pub fn fourier_close(set: &GeneratorSet) -> Result<GeneratorSet> {
    for g in set.generators() {
        if g.spectrum().is_none() {
            return Err(Error::Capability(format!(
                "generator {} has no registered transform",
                g.descriptor()
            )));
        }
    }

    let mut kept: Vec<Generator> = Vec::new();
    let mut kept_spectra: Vec<HermiteExpansion> = Vec::new();
    let consider =
        |gen: Generator, kept: &mut Vec<Generator>, spectra: &mut Vec<HermiteExpansion>| {
            let sp = gen
                .spectrum()
                .expect("closure candidates carry spectra")
                .clone();
            let norm = sp.norm();
            let duplicate = spectra.iter().any(|existing| {
                let overlap = sp.inner(existing).norm();
                overlap >= (1.0 - tol::CLOSURE_DEDUP) * norm * existing.norm()
            });
            if !duplicate {
                kept.push(gen);
                spectra.push(sp);
            }
        };

    // Originals first (their descriptors survive, so the closure extends the
    // input set), then transform images, then conjugates of everything.
    for g in set.generators() {
        consider(g.clone(), &mut kept, &mut kept_spectra);
    }
    for power in 1..=3u8 {
        for g in set.generators() {
            let mut sp = g.spectrum().unwrap().clone();
            for _ in 0..power {
                sp = sp.fourier();
            }
            let descriptor = FamilyMember::Transformed {
                base: Box::new(g.descriptor().clone()),
                power,
            };
            consider(
                Generator::from_expansion(descriptor, sp),
                &mut kept,
                &mut kept_spectra,
            );
        }
    }
    for power in 0..=3u8 {
        for g in set.generators() {
            let mut sp = g.spectrum().unwrap().clone();
            for _ in 0..power {
                sp = sp.fourier();
            }
            let base = if power == 0 {
                g.descriptor().clone()
            } else {
                FamilyMember::Transformed {
                    base: Box::new(g.descriptor().clone()),
                    power,
                }
            };
            let descriptor = FamilyMember::Conjugated {
                base: Box::new(base),
            };
            consider(
                Generator::from_expansion(descriptor, sp.conjugate()),
                &mut kept,
                &mut kept_spectra,
            );
        }
    }
    GeneratorSet::new(*set.domain(), kept)
}

/// A space closed under the Fourier transform, with the transform matrix
/// over the orthonormal basis and the conjugation map.
#[derive(Debug)]
pub struct FourierSpace {
    space: Arc<FunctionSpace>,
    transform_matrix: DMatrix<Complex64>,
    /// Maps coefficient vectors of conj(u) = conjugation * conj(coefficients);
    /// the identity for real bases.
    conjugation_matrix: DMatrix<Complex64>,
    /// Hermite-mode expansions of the basis functions (modes x dimension).
    basis_spectra: DMatrix<Complex64>,
}

impl FourierSpace {
    /// Assembles the transform matrix symbolically from the basis spectra
    /// and refuses spaces that are not transform-closed.
    pub fn build(space: &Arc<FunctionSpace>) -> Result<Self> {
        let gens = space.generators().generators();
        let mut max_mode = 0usize;
        let mut spectra = Vec::with_capacity(gens.len());
        for g in gens {
            let sp = g.spectrum().ok_or_else(|| {
                Error::Capability(format!(
                    "generator {} has no registered transform",
                    g.descriptor()
                ))
            })?;
            max_mode = max_mode.max(sp.max_mode());
            spectra.push(sp.clone());
        }
        let modes = max_mode + 2;
        let beta = space.dimension();

        // Basis spectra: H[(n, k)] = hermite coefficient n of e_k.
        let mut basis_spectra = DMatrix::<Complex64>::zeros(modes, beta);
        for k in 0..beta {
            for (i, sp) in spectra.iter().enumerate() {
                let c = space.generator_coefficients()[(i, k)];
                for (n, coeff) in sp.coeffs().iter().enumerate() {
                    basis_spectra[(n, k)] += c * coeff;
                }
            }
        }

        // Transform in mode space is diagonal with eigenvalues (-i)^n.
        let minus_i = Complex64::new(0.0, -1.0);
        let mut transformed = basis_spectra.clone();
        let mut eig = Complex64::ONE;
        for n in 0..modes {
            for k in 0..beta {
                transformed[(n, k)] *= eig;
            }
            eig *= minus_i;
        }

        // Project the transformed basis back onto the basis spectra; a
        // closed space leaves no residual.
        let gram = basis_spectra.adjoint() * &basis_spectra;
        let transform_matrix = gram
            .clone()
            .lu()
            .solve(&(basis_spectra.adjoint() * &transformed))
            .ok_or_else(|| Error::Capability("basis spectra are degenerate".into()))?;
        let closure_residual = (&transformed - &basis_spectra * &transform_matrix).norm()
            / transformed.norm().max(1.0);
        if closure_residual > tol::FOURIER_UNITARITY {
            return Err(Error::Capability(format!(
                "space is not transform-closed: residual {closure_residual:.3e}"
            )));
        }

        // Conjugation closure (the second closure clause): conj(e_k) must
        // project back without residual.
        let conj_spectra = basis_spectra.map(|v| v.conj());
        let conjugation_matrix = gram
            .clone()
            .lu()
            .solve(&(basis_spectra.adjoint() * &conj_spectra))
            .ok_or_else(|| Error::Capability("basis spectra are degenerate".into()))?;
        let conj_residual = (&conj_spectra - &basis_spectra * &conjugation_matrix).norm()
            / conj_spectra.norm().max(1.0);
        if conj_residual > tol::CONJUGATION_CLOSURE {
            return Err(Error::Capability(format!(
                "space is not conjugation-closed: residual {conj_residual:.3e}"
            )));
        }

        let identity = DMatrix::<Complex64>::identity(beta, beta);
        let unitarity = (&transform_matrix * transform_matrix.adjoint() - &identity).norm();
        if unitarity > tol::FOURIER_UNITARITY {
            return Err(Error::IdentityViolation {
                name: "transform unitarity",
                residual: unitarity,
                tolerance: tol::FOURIER_UNITARITY,
            });
        }
        let fourth = {
            let t2 = &transform_matrix * &transform_matrix;
            (&t2 * &t2 - &identity).norm()
        };
        if fourth > tol::FOURIER_UNITARITY {
            return Err(Error::IdentityViolation {
                name: "transform fourth power",
                residual: fourth,
                tolerance: tol::FOURIER_UNITARITY,
            });
        }

        Ok(Self {
            space: Arc::clone(space),
            transform_matrix,
            conjugation_matrix,
            basis_spectra,
        })
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn transform_matrix(&self) -> &DMatrix<Complex64> {
        &self.transform_matrix
    }

    pub fn conjugation_matrix(&self) -> &DMatrix<Complex64> {
        &self.conjugation_matrix
    }

    pub fn basis_spectra(&self) -> &DMatrix<Complex64> {
        &self.basis_spectra
    }

    /// Residual of `T T^H = I`.
    pub fn unitarity_residual(&self) -> f64 {
        let beta = self.transform_matrix.nrows();
        let identity = DMatrix::<Complex64>::identity(beta, beta);
        (&self.transform_matrix * self.transform_matrix.adjoint() - identity).norm()
    }

    /// Residual of `T^4 = I`.
    pub fn fourth_power_residual(&self) -> f64 {
        let beta = self.transform_matrix.nrows();
        let identity = DMatrix::<Complex64>::identity(beta, beta);
        let t2 = &self.transform_matrix * &self.transform_matrix;
        (&t2 * &t2 - identity).norm()
    }

    pub fn fourier(&self, u: &Ultrafunction) -> Result<Ultrafunction> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        self.space
            .from_coefficients(&self.transform_matrix * u.coefficients())
    }

    /// The inverse transform: the conjugate transpose of the (unitary)
    /// transform matrix.
    pub fn inverse_fourier(&self, u: &Ultrafunction) -> Result<Ultrafunction> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        self.space
            .from_coefficients(self.transform_matrix.adjoint() * u.coefficients())
    }

    pub fn conjugate(&self, u: &Ultrafunction) -> Result<Ultrafunction> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        self.space
            .from_coefficients(&self.conjugation_matrix * u.coefficients().map(|c| c.conj()))
    }
}

/// The four frame correspondences between deltas and projected complex
/// exponentials, verified at every frame point:
///
/// 1. the transform of delta_a equals the projection of e^{-iak}/sqrt(2 pi);
/// 2. the transform of the projected e^{iax}/sqrt(2 pi) equals delta_a;
/// 3. the projected exponential is symmetric in its two arguments over the
///    frame points;
/// 4. random members reconstruct from the projected-exponential pseudo-basis
///    with delta-basis coefficients of the transform.
pub fn fourier_frame_checks(
    fspace: &FourierSpace,
    frame: &PointFrame,
    seed: u64,
) -> Result<CheckReport> {
    if !Arc::ptr_eq(frame.space(), &fspace.space) {
        return Err(Error::SpaceMismatch);
    }
    let space = fspace.space();
    let points = frame.points();
    let beta = points.len();
    let scale = Complex64::new(1.0 / (2.0 * PI).sqrt(), 0.0);
    let mut checks = Vec::new();

    let projected_exponential = |a: f64, sign: f64| -> Result<Ultrafunction> {
        let t = Functional::integral_against(
            format!("exp({}i {a} x)", if sign < 0.0 { "-" } else { "" }),
            Arc::new(move |x: f64| Complex64::new(0.0, sign * a * x).exp()),
            vec![],
        );
        canonical_extend(space, &t)
    };

    // Check 1: F(delta_a) = projection of e^{-iak}/sqrt(2 pi).
    let mut worst = 0.0_f64;
    for (idx, &a) in points.iter().enumerate() {
        let lhs = fspace.fourier(&frame.delta_ultrafunction(idx))?;
        let rhs = &projected_exponential(a, -1.0)? * scale;
        for &b in points {
            worst = worst.max((lhs.evaluate(b)? - rhs.evaluate(b)?).norm());
        }
    }
    checks.push(CheckRecord::new(
        "transform of delta equals projected exponential",
        worst,
        tol::FOURIER_FRAME_CHECKS,
    ));

    // Check 2: F(projection of e^{iax}/sqrt(2 pi)) = delta_a.
    let mut worst = 0.0_f64;
    for (idx, &a) in points.iter().enumerate() {
        let lhs = fspace.fourier(&(&projected_exponential(a, 1.0)? * scale))?;
        let rhs = frame.delta_ultrafunction(idx);
        for &b in points {
            worst = worst.max((lhs.evaluate(b)? - rhs.evaluate(b)?).norm());
        }
    }
    checks.push(CheckRecord::new(
        "transform of projected exponential equals delta",
        worst,
        tol::FOURIER_FRAME_CHECKS,
    ));

    // Check 3: the two-variable table of projected exponentials is
    // symmetric over the frame points.
    let mut table = DMatrix::<Complex64>::zeros(beta, beta);
    for (row, &a) in points.iter().enumerate() {
        let ext = projected_exponential(a, 1.0)?;
        for (col, &b) in points.iter().enumerate() {
            table[(row, col)] = ext.evaluate(b)?;
        }
    }
    let mut worst = 0.0_f64;
    for row in 0..beta {
        for col in 0..beta {
            worst = worst.max((table[(row, col)] - table[(col, row)]).norm());
        }
    }
    checks.push(CheckRecord::new(
        "projected exponential symmetric in its arguments",
        worst,
        tol::FOURIER_FRAME_CHECKS,
    ));

    // Check 4: reconstruction through the pseudo-basis.
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0_f64;
    for _ in 0..4 {
        let coefficients = DVector::from_iterator(
            beta,
            (0..beta).map(|_| Complex64::new(rng.next_symmetric(), rng.next_symmetric())),
        );
        let norm = coefficients.norm();
        let u = space.from_coefficients(coefficients / Complex64::new(norm, 0.0))?;
        let hat = fspace.fourier(&u)?;
        let hat_delta = frame.delta_coefficients_of(&hat)?;
        let mut recon = DVector::<Complex64>::zeros(space.dimension());
        for (idx, &k) in points.iter().enumerate() {
            let ext = projected_exponential(k, 1.0)?;
            recon += ext.coefficients() * (hat_delta[idx] * scale);
        }
        let recon = space.from_coefficients(recon)?;
        for &b in points {
            worst = worst.max((recon.evaluate(b)? - u.evaluate(b)?).norm());
        }
    }
    checks.push(CheckRecord::new(
        "reconstruction from the transform's delta coefficients",
        worst,
        tol::FOURIER_FRAME_CHECKS,
    ));

    Ok(CheckReport::from_checks(checks))
}

/// Small deterministic generator for the library-level randomized checks.
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub(crate) fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub(crate) fn next_symmetric(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}
