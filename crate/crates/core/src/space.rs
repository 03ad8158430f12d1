//! Function spaces: orthonormalized spans of generator sets under a
//! quadrature rule, and the coefficient-vector elements that live in them.
//!
//! Rank decisions are spectral: the generator Gram matrix is eigen-
//! decomposed and eigenvalues below `rank_tolerance` times the largest are
//! discarded, so dependent generators reduce the dimension instead of
//! poisoning it. The retained eigenspace is then re-expressed in generator
//! order (a QR alignment, a unitary change of basis), which keeps the basis
//! deterministic even when the Gram spectrum is degenerate — already
//! orthonormal families come out essentially unchanged.
//!
//! Basis functions are carried in two forms: node-value rows for fast inner
//! products under the rule, and generator combinations for exact off-node
//! evaluation and exact derivatives.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{Generator, GeneratorSet};
use crate::quadrature::QuadratureRule;
use crate::tol;

/// A finite-dimensional function space over a quadrature rule.
#[derive(Debug)]
pub struct FunctionSpace {
    rule: QuadratureRule,
    generators: GeneratorSet,
    /// Column k holds the generator coefficients of basis function e_k.
    generator_coefficients: DMatrix<Complex64>,
    /// Row k holds e_k evaluated at the rule's nodes.
    basis_values: DMatrix<Complex64>,
    /// Bilinear basis Gram: integral of e_j * e_k without conjugation.
    /// The identity matrix whenever the basis is real.
    bilinear_gram: DMatrix<Complex64>,
    /// Integrals of the basis functions.
    basis_integrals: DVector<Complex64>,
    dimension: usize,
    rank_tolerance: f64,
    gram_residual: f64,
    basis_real: bool,
}

/// Serializable summary for fixtures: `{dimension, gram_residual,
/// generator_coefficients}`.
#[derive(Debug, Serialize)]
pub struct SpaceExport {
    pub dimension: usize,
    pub gram_residual: f64,
    pub generator_coefficients: Vec<Vec<[f64; 2]>>,
}

/// Orthonormalizes `generators` against the rule's inner product.
///
/// Errors with [`Error::Resolution`] when the rule cannot resolve the
/// requested dimension (fewer than four nodes per generator) and with
/// [`Error::DegenerateSpace`] when every Gram eigenvalue falls below the
/// cutoff.
pub fn build_space(
    generators: GeneratorSet,
    rule: QuadratureRule,
    rank_tolerance: f64,
) -> Result<Arc<FunctionSpace>> {
    if !(rank_tolerance > 0.0 && rank_tolerance <= 1e-4) {
        return Err(Error::Validation(format!(
            "rank_tolerance must lie in (0, 1e-4], got {rank_tolerance}"
        )));
    }
    if generators.domain() != rule.domain() {
        return Err(Error::Validation(
            "generator set and rule must share a domain".into(),
        ));
    }
    let n = generators.len();
    let m = rule.len();
    if m < 4 * n {
        return Err(Error::Resolution {
            nodes: m,
            dimension: n,
            required: 4 * n,
        });
    }

    // Generator values at the nodes, with finiteness checked.
    let mut generator_values = DMatrix::<Complex64>::zeros(n, m);
    for (i, g) in generators.generators().iter().enumerate() {
        for (j, &x) in rule.nodes().iter().enumerate() {
            let v = g.evaluate(x);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite {
                    node: j,
                    x,
                    value: format!("{v}"),
                });
            }
            generator_values[(i, j)] = v;
        }
    }

    // Hermitian Gram matrix under the rule.
    let weights = rule.weights();
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = Complex64::ZERO;
            for (k, &w) in weights.iter().enumerate() {
                acc += w * generator_values[(i, k)] * generator_values[(j, k)].conj();
            }
            gram[(i, j)] = acc;
            gram[(j, i)] = acc.conj();
        }
    }

    // Spectral rank decision.
    let eigen = gram.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let lambda_max = eigen.eigenvalues[order[0]];
    let cutoff = rank_tolerance * lambda_max;
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(Error::DegenerateSpace { cutoff });
    }
    let retained: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| eigen.eigenvalues[k] >= cutoff)
        .collect();
    let beta = retained.len();
    if beta == 0 {
        return Err(Error::DegenerateSpace { cutoff });
    }

    // Whitening: columns conj(U_k) / sqrt(lambda_k) are orthonormal under
    // the Gram form.
    let mut whitened = DMatrix::<Complex64>::zeros(n, beta);
    for (col, &k) in retained.iter().enumerate() {
        let inv_sqrt = 1.0 / eigen.eigenvalues[k].sqrt();
        for row in 0..n {
            whitened[(row, col)] = eigen.eigenvectors[(row, k)].conj() * inv_sqrt;
        }
    }

    // Alignment: express the retained subspace in generator order. The
    // matrix of generator projections in whitened coordinates is QR-
    // factorized without pivoting; its unitary factor rotates the whitened
    // basis so e_1 follows g_1, e_2 the part of g_2 orthogonal to e_1, ...
    // projections[(k, i)] is the inner product of g_i with the k-th
    // whitened basis vector.
    let mut projections = DMatrix::<Complex64>::zeros(beta, n);
    for k in 0..beta {
        for i in 0..n {
            let mut acc = Complex64::ZERO;
            for j in 0..n {
                acc += gram[(i, j)] * whitened[(j, k)].conj();
            }
            projections[(k, i)] = acc;
        }
    }
    let qr = projections.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..beta {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for row in 0..beta {
                q[(row, k)] *= phase;
            }
        }
    }
    let generator_coefficients = &whitened * &q;

    let basis_values = generator_coefficients.transpose() * &generator_values;

    // Verify orthonormality honestly through the rule.
    let mut gram_residual = 0.0_f64;
    let mut bilinear_gram = DMatrix::<Complex64>::zeros(beta, beta);
    for a in 0..beta {
        for b in 0..beta {
            let mut sesq = Complex64::ZERO;
            let mut bil = Complex64::ZERO;
            for (k, &w) in weights.iter().enumerate() {
                let va = basis_values[(a, k)];
                let vb = basis_values[(b, k)];
                sesq += w * va * vb.conj();
                bil += w * va * vb;
            }
            bilinear_gram[(a, b)] = bil;
            let expect = if a == b { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((sesq - expect).norm());
        }
    }
    if gram_residual > tol::ORTHONORMALITY {
        return Err(Error::IdentityViolation {
            name: "basis orthonormality",
            residual: gram_residual,
            tolerance: tol::ORTHONORMALITY,
        });
    }

    let basis_real = basis_values.iter().all(|v| v.im.abs() <= 1e-14);

    let mut basis_integrals = DVector::<Complex64>::zeros(beta);
    for k in 0..beta {
        let mut acc = Complex64::ZERO;
        for (j, &w) in weights.iter().enumerate() {
            acc += w * basis_values[(k, j)];
        }
        basis_integrals[k] = acc;
    }

    Ok(Arc::new(FunctionSpace {
        rule,
        generators,
        generator_coefficients,
        basis_values,
        bilinear_gram,
        basis_integrals,
        dimension: beta,
        rank_tolerance,
        gram_residual,
        basis_real,
    }))
}

impl FunctionSpace {
    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    pub fn basis_is_real(&self) -> bool {
        self.basis_real
    }

    pub fn generator_coefficients(&self) -> &DMatrix<Complex64> {
        &self.generator_coefficients
    }

    pub fn basis_values(&self) -> &DMatrix<Complex64> {
        &self.basis_values
    }

    pub(crate) fn bilinear_gram(&self) -> &DMatrix<Complex64> {
        &self.bilinear_gram
    }

    pub(crate) fn basis_integrals(&self) -> &DVector<Complex64> {
        &self.basis_integrals
    }

    /// Values of every basis function at an arbitrary point, through the
    /// generator combinations (exact off-node evaluation).
    pub fn basis_eval_at(&self, x: f64) -> DVector<Complex64> {
        let g: Vec<Complex64> = self
            .generators
            .generators()
            .iter()
            .map(|gen| gen.evaluate(x))
            .collect();
        let mut out = DVector::<Complex64>::zeros(self.dimension);
        for k in 0..self.dimension {
            let mut acc = Complex64::ZERO;
            for (i, gv) in g.iter().enumerate() {
                acc += self.generator_coefficients[(i, k)] * gv;
            }
            out[k] = acc;
        }
        out
    }

    /// Derivative values of every basis function at x; errors when some
    /// generator lacks a derivative evaluator.
    pub fn basis_derivative_at(&self, x: f64) -> Result<DVector<Complex64>> {
        let mut g = Vec::with_capacity(self.generators.len());
        for gen in self.generators.generators() {
            g.push(gen.derivative_at(x).ok_or_else(|| {
                Error::Capability(format!(
                    "generator {} has no derivative evaluator",
                    gen.descriptor()
                ))
            })?);
        }
        let mut out = DVector::<Complex64>::zeros(self.dimension);
        for k in 0..self.dimension {
            let mut acc = Complex64::ZERO;
            for (i, gv) in g.iter().enumerate() {
                acc += self.generator_coefficients[(i, k)] * gv;
            }
            out[k] = acc;
        }
        Ok(out)
    }

    /// The ultrafunction with the given coefficient vector.
    pub fn from_coefficients(
        self: &Arc<Self>,
        coefficients: DVector<Complex64>,
    ) -> Result<Ultrafunction> {
        if coefficients.len() != self.dimension {
            return Err(Error::Validation(format!(
                "coefficient vector length {} does not match dimension {}",
                coefficients.len(),
                self.dimension
            )));
        }
        Ok(Ultrafunction {
            space: Arc::clone(self),
            coefficients,
        })
    }

    /// Basis vector e_k as an ultrafunction.
    pub fn basis_vector(self: &Arc<Self>, k: usize) -> Ultrafunction {
        let mut c = DVector::<Complex64>::zeros(self.dimension);
        c[k] = Complex64::ONE;
        Ultrafunction {
            space: Arc::clone(self),
            coefficients: c,
        }
    }

    /// Embeds a function that already lies in the span: the projection is
    /// computed and the residual must stay below
    /// [`tol::MEMBER_RESIDUAL`] relative to the function's norm.
    pub fn member_embed<F>(self: &Arc<Self>, f: F) -> Result<Ultrafunction>
    where
        F: Fn(f64) -> Complex64,
    {
        let values: Vec<Complex64> = self.rule.nodes().iter().map(|&x| f(x)).collect();
        for (j, (v, &x)) in values.iter().zip(self.rule.nodes()).enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite {
                    node: j,
                    x,
                    value: format!("{v}"),
                });
            }
        }
        let coefficients = self.project_node_values(&values);
        // Residual of f - P f under the rule.
        let weights = self.rule.weights();
        let mut norm_f = 0.0;
        let mut norm_res = 0.0;
        for (j, &w) in weights.iter().enumerate() {
            let mut pf = Complex64::ZERO;
            for k in 0..self.dimension {
                pf += coefficients[k] * self.basis_values[(k, j)];
            }
            norm_f += w * values[j].norm_sqr();
            norm_res += w * (values[j] - pf).norm_sqr();
        }
        let (norm_f, norm_res) = (norm_f.sqrt(), norm_res.sqrt());
        if norm_res > tol::MEMBER_RESIDUAL * norm_f.max(f64::MIN_POSITIVE) {
            return Err(Error::NotAMember {
                residual: norm_res,
                threshold: tol::MEMBER_RESIDUAL * norm_f,
            });
        }
        Ok(Ultrafunction {
            space: Arc::clone(self),
            coefficients,
        })
    }

    /// Orthogonal projection coefficients of node values: c_k = (f, e_k).
    pub(crate) fn project_node_values(&self, values: &[Complex64]) -> DVector<Complex64> {
        let weights = self.rule.weights();
        let mut c = DVector::<Complex64>::zeros(self.dimension);
        for k in 0..self.dimension {
            let mut acc = Complex64::ZERO;
            for (j, &w) in weights.iter().enumerate() {
                acc += w * values[j] * self.basis_values[(k, j)].conj();
            }
            c[k] = acc;
        }
        c
    }

    /// Sesquilinear inner product of two members, through the rule's nodes.
    pub fn inner(&self, u: &Ultrafunction, v: &Ultrafunction) -> Result<Complex64> {
        self.check_member(u)?;
        self.check_member(v)?;
        let uv = u.node_values();
        let vv = v.node_values();
        let mut acc = Complex64::ZERO;
        for (j, &w) in self.rule.weights().iter().enumerate() {
            acc += w * uv[j] * vv[j].conj();
        }
        Ok(acc)
    }

    /// Bilinear pairing (no conjugation) of two members.
    pub fn pair_bilinear(&self, u: &Ultrafunction, v: &Ultrafunction) -> Result<Complex64> {
        self.check_member(u)?;
        self.check_member(v)?;
        let uv = u.node_values();
        let vv = v.node_values();
        let mut acc = Complex64::ZERO;
        for (j, &w) in self.rule.weights().iter().enumerate() {
            acc += w * uv[j] * vv[j];
        }
        Ok(acc)
    }

    fn check_member(&self, u: &Ultrafunction) -> Result<()> {
        if std::ptr::eq(self, Arc::as_ptr(&u.space)) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Export view for fixtures.
    pub fn export(&self) -> SpaceExport {
        let coeffs = (0..self.generator_coefficients.nrows())
            .map(|i| {
                (0..self.dimension)
                    .map(|k| {
                        let c = self.generator_coefficients[(i, k)];
                        [c.re, c.im]
                    })
                    .collect()
            })
            .collect();
        SpaceExport {
            dimension: self.dimension,
            gram_residual: self.gram_residual,
            generator_coefficients: coeffs,
        }
    }

    /// A generator set wrapping this space's own basis evaluators, usable to
    /// rebuild the space (it reproduces the dimension and an orthonormal
    /// change of basis).
    pub fn basis_generator_set(self: &Arc<Self>) -> Result<GeneratorSet> {
        let all_derivatives = self
            .generators
            .generators()
            .iter()
            .all(Generator::has_derivative);
        let gens = (0..self.dimension)
            .map(|k| {
                let space = Arc::clone(self);
                let eval: crate::families::EvalFn = Arc::new(move |x| space.basis_eval_at(x)[k]);
                let deriv: Option<crate::families::EvalFn> = if all_derivatives {
                    let space = Arc::clone(self);
                    Some(Arc::new(move |x| {
                        space
                            .basis_derivative_at(x)
                            .expect("derivative availability checked at construction")[k]
                    }))
                } else {
                    None
                };
                Generator::custom(
                    format!("basis[{k}]"),
                    eval,
                    deriv,
                    crate::families::Support::Global,
                    self.basis_real,
                )
            })
            .collect();
        GeneratorSet::new(*self.rule.domain(), gens)
    }
}

/// An element of a [`FunctionSpace`]: a complex coefficient vector over the
/// orthonormal basis.
#[derive(Debug, Clone)]
pub struct Ultrafunction {
    space: Arc<FunctionSpace>,
    coefficients: DVector<Complex64>,
}

impl Ultrafunction {
    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &DVector<Complex64> {
        &self.coefficients
    }

    pub fn same_space(&self, other: &Ultrafunction) -> bool {
        Arc::ptr_eq(&self.space, &other.space)
    }

    /// Pointwise evaluation; errors outside the closed domain.
    pub fn evaluate(&self, x: f64) -> Result<Complex64> {
        if !self.space.rule().domain().contains(x) {
            return Err(Error::Domain(format!(
                "x = {x} outside domain [{}, {}]",
                self.space.rule().domain().lower(),
                self.space.rule().domain().upper()
            )));
        }
        let basis = self.space.basis_eval_at(x);
        Ok(self
            .coefficients
            .iter()
            .zip(basis.iter())
            .map(|(c, e)| c * e)
            .sum())
    }

    /// Values at the rule's nodes.
    pub fn node_values(&self) -> DVector<Complex64> {
        self.space.basis_values().transpose() * &self.coefficients
    }

    /// Norm at the orthonormal level: the coefficient 2-norm. Parseval ties
    /// it to the quadrature norm of the node values.
    pub fn norm(&self) -> f64 {
        self.coefficients.norm()
    }

    /// Quadrature norm of the node values.
    pub fn norm_quadrature(&self) -> f64 {
        let values = self.node_values();
        self.space
            .rule()
            .weights()
            .iter()
            .zip(values.iter())
            .map(|(&w, v)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Coefficient-wise linear combination; all terms must share one space.
pub fn lincomb(terms: &[(Complex64, &Ultrafunction)]) -> Result<Ultrafunction> {
    let Some(((_, first), rest)) = terms.split_first() else {
        return Err(Error::Validation("lincomb of no terms".into()));
    };
    let mut coefficients = DVector::<Complex64>::zeros(first.space.dimension());
    for (scale, u) in std::iter::once(&terms[0]).chain(rest) {
        if !u.same_space(first) {
            return Err(Error::SpaceMismatch);
        }
        coefficients += u.coefficients() * *scale;
    }
    first.space.from_coefficients(coefficients)
}

impl std::ops::Add for &Ultrafunction {
    type Output = Ultrafunction;
    fn add(self, rhs: &Ultrafunction) -> Ultrafunction {
        lincomb(&[(Complex64::ONE, self), (Complex64::ONE, rhs)])
            .expect("operands from different spaces")
    }
}

impl std::ops::Sub for &Ultrafunction {
    type Output = Ultrafunction;
    fn sub(self, rhs: &Ultrafunction) -> Ultrafunction {
        lincomb(&[(Complex64::ONE, self), (-Complex64::ONE, rhs)])
            .expect("operands from different spaces")
    }
}

impl std::ops::Mul<Complex64> for &Ultrafunction {
    type Output = Ultrafunction;
    fn mul(self, rhs: Complex64) -> Ultrafunction {
        lincomb(&[(rhs, self)]).expect("single-term lincomb cannot fail")
    }
}
