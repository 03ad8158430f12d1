//! Canonical extension of functionals into the space, and distribution
//! embedding against a designated test subspace.
//!
//! A functional pairs against space members; its canonical extension is the
//! unique member whose integrals against every basis function reproduce
//! those pairings. For integral-against-f functionals this is the orthogonal
//! projection of f, so members extend to themselves and non-members (even
//! pointwise-unbounded ones like |x|^{-1/2}) get a well-defined
//! representative. Point masses extend to the delta ultrafunctions.
//!
//! Pairings are computed by quadrature with grading toward the functional's
//! own singular points; a pairing whose value keeps moving under grading
//! refinement is reported as divergent rather than silently truncated.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::families::{EvalFn, Support};
use crate::kernel::PointFrame;
use crate::space::{FunctionSpace, Ultrafunction};
use crate::tol;

/// A continuous linear functional to extend into the space.
#[derive(Clone)]
pub struct Functional {
    name: String,
    kind: FunctionalKind,
}

#[derive(Clone)]
enum FunctionalKind {
    /// v -> integral of f * v, with f possibly singular at the given points.
    IntegralAgainst {
        f: EvalFn,
        singular_points: Vec<f64>,
    },
    /// v -> scale * v(at).
    PointMass { at: f64, scale: Complex64 },
    /// Finite linear combination of functionals.
    Combination(Vec<(Complex64, Functional)>),
}

impl std::fmt::Debug for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Functional({})", self.name)
    }
}

impl Functional {
    pub fn integral_against(name: impl Into<String>, f: EvalFn, singular_points: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: FunctionalKind::IntegralAgainst { f, singular_points },
        }
    }

    pub fn point_mass(at: f64) -> Self {
        Self::scaled_point_mass(at, Complex64::ONE)
    }

    pub fn scaled_point_mass(at: f64, scale: Complex64) -> Self {
        Self {
            name: format!("point_mass({at})"),
            kind: FunctionalKind::PointMass { at, scale },
        }
    }

    pub fn combination(name: impl Into<String>, terms: Vec<(Complex64, Functional)>) -> Self {
        Self {
            name: name.into(),
            kind: FunctionalKind::Combination(terms),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn validate(&self, space: &FunctionSpace) -> Result<()> {
        match &self.kind {
            FunctionalKind::PointMass { at, .. } => {
                if !space.rule().domain().contains(*at) {
                    return Err(Error::Domain(format!(
                        "point mass at {at} outside the domain closure"
                    )));
                }
            }
            FunctionalKind::IntegralAgainst {
                singular_points, ..
            } => {
                for &s in singular_points {
                    if !space.rule().domain().contains(s) {
                        return Err(Error::Domain(format!(
                            "singular point {s} outside the domain"
                        )));
                    }
                }
            }
            FunctionalKind::Combination(terms) => {
                for (_, t) in terms {
                    t.validate(space)?;
                }
            }
        }
        Ok(())
    }
}

/// Pairs the functional against every basis function, singularity-aware.
/// Returns the vector of pairings t_j = <T, e_j>.
fn pair_basis(space: &FunctionSpace, t: &Functional) -> Result<DVector<Complex64>> {
    let beta = space.dimension();
    match &t.kind {
        FunctionalKind::PointMass { at, scale } => {
            let basis = space.basis_eval_at(*at);
            Ok(basis.map(|v| v * scale))
        }
        FunctionalKind::IntegralAgainst { f, singular_points } => {
            if singular_points.is_empty() {
                // Everything lives on the space's own nodes.
                let rule = space.rule();
                let mut out = DVector::<Complex64>::zeros(beta);
                for (m, (&x, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
                    let fv = f(x);
                    if !fv.re.is_finite() || !fv.im.is_finite() {
                        return Err(divergent(t));
                    }
                    for j in 0..beta {
                        out[j] += w * fv * space.basis_values()[(j, m)];
                    }
                }
                Ok(out)
            } else {
                let coarse = space.rule().with_singular_points(singular_points)?;
                let fine = coarse.with_grading(coarse.grading_levels() + 8)?;
                let first = pair_with_rule(space, f, &coarse, t)?;
                let second = pair_with_rule(space, f, &fine, t)?;
                let difference = (&first - &second)
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0_f64, f64::max);
                let threshold = coarse.declared_tolerance() * tol::DIVERGENCE_FACTOR;
                if difference > threshold {
                    return Err(Error::DivergentPairing {
                        name: t.name.clone(),
                        difference,
                        threshold,
                    });
                }
                Ok(second)
            }
        }
        FunctionalKind::Combination(terms) => {
            let mut out = DVector::<Complex64>::zeros(beta);
            for (scale, term) in terms {
                out += pair_basis(space, term)? * *scale;
            }
            Ok(out)
        }
    }
}

fn pair_with_rule(
    space: &FunctionSpace,
    f: &EvalFn,
    rule: &crate::quadrature::QuadratureRule,
    t: &Functional,
) -> Result<DVector<Complex64>> {
    let beta = space.dimension();
    let mut out = DVector::<Complex64>::zeros(beta);
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let fv = f(x);
        if !fv.re.is_finite() || !fv.im.is_finite() {
            return Err(divergent(t));
        }
        let basis = space.basis_eval_at(x);
        for j in 0..beta {
            out[j] += w * fv * basis[j];
        }
    }
    Ok(out)
}

/// A non-finite pairing value is reported as divergent outright.
fn divergent(t: &Functional) -> Error {
    Error::DivergentPairing {
        name: t.name.clone(),
        difference: f64::INFINITY,
        threshold: 0.0,
    }
}

/// Pairs the functional against a single space member.
pub fn pair(space: &Arc<FunctionSpace>, t: &Functional, u: &Ultrafunction) -> Result<Complex64> {
    t.validate(space)?;
    match &t.kind {
        FunctionalKind::PointMass { at, scale } => Ok(*scale * u.evaluate(*at)?),
        FunctionalKind::IntegralAgainst { f, singular_points } => {
            if singular_points.is_empty() {
                let rule = space.rule();
                let values = u.node_values();
                let mut acc = Complex64::ZERO;
                for (m, (&x, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
                    let fv = f(x);
                    if !fv.re.is_finite() || !fv.im.is_finite() {
                        return Err(divergent(t));
                    }
                    acc += w * fv * values[m];
                }
                Ok(acc)
            } else {
                let coarse = space.rule().with_singular_points(singular_points)?;
                let fine = coarse.with_grading(coarse.grading_levels() + 8)?;
                let mut results = [Complex64::ZERO; 2];
                for (slot, rule) in [&coarse, &fine].into_iter().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                        let fv = f(x);
                        if !fv.re.is_finite() || !fv.im.is_finite() {
                            return Err(divergent(t));
                        }
                        acc += w * fv * u.evaluate(x)?;
                    }
                    results[slot] = acc;
                }
                let difference = (results[0] - results[1]).norm();
                let threshold = coarse.declared_tolerance() * tol::DIVERGENCE_FACTOR;
                if difference > threshold {
                    return Err(Error::DivergentPairing {
                        name: t.name.clone(),
                        difference,
                        threshold,
                    });
                }
                Ok(results[1])
            }
        }
        FunctionalKind::Combination(terms) => {
            let mut acc = Complex64::ZERO;
            for (scale, term) in terms {
                acc += scale * pair(space, term, u)?;
            }
            Ok(acc)
        }
    }
}

/// The unique member w with `integral of w * e_j = <T, e_j>` for every basis
/// function. For integral-against-f this is the orthogonal projection of f;
/// for point masses it is the delta ultrafunction.
pub fn canonical_extend(space: &Arc<FunctionSpace>, t: &Functional) -> Result<Ultrafunction> {
    t.validate(space)?;
    let pairings = pair_basis(space, t)?;
    // Solve B c = t with B the bilinear basis Gram (identity when the
    // basis is real).
    let coefficients = space
        .bilinear_gram()
        .clone()
        .lu()
        .solve(&pairings)
        .ok_or_else(|| Error::DependentPoints("bilinear basis Gram not invertible".into()))?;
    space.from_coefficients(coefficients)
}

/// Which frame basis carries the extension formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameBasis {
    Sigma,
    Theta,
    Delta,
}

/// Frame form of the canonical extension: pair the functional with the
/// delta/theta/sigma functions and expand in the dual family. All three
/// agree with [`canonical_extend`] to frame tolerance.
pub fn canonical_extend_via_frame(
    frame: &PointFrame,
    t: &Functional,
    basis: FrameBasis,
) -> Result<Ultrafunction> {
    let space = frame.space();
    let beta = frame.len();
    let mut against = DVector::<Complex64>::zeros(beta);
    for a in 0..beta {
        let probe = match basis {
            FrameBasis::Sigma => frame.delta_ultrafunction(a),
            FrameBasis::Theta => frame.theta_at(a),
            FrameBasis::Delta => frame.sigma_at(a),
        };
        against[a] = pair(space, t, &probe)?;
    }
    match basis {
        FrameBasis::Sigma => frame.from_point_coefficients(&against),
        FrameBasis::Theta => frame.from_theta_coefficients(&against),
        FrameBasis::Delta => frame.from_delta_coefficients(&against),
    }
}

/// A designated subspace of test functions (the compact-support analog),
/// spanned by flagged generators that vanish at the domain endpoints.
#[derive(Debug)]
pub struct TestSubspace {
    space: Arc<FunctionSpace>,
    member_indices: Vec<usize>,
    /// Orthonormal coefficient columns spanning the subspace.
    basis: DMatrix<Complex64>,
}

impl TestSubspace {
    /// Spans the generators flagged compact-in-interior.
    pub fn from_flagged(space: &Arc<FunctionSpace>) -> Result<Self> {
        let indices: Vec<usize> = space
            .generators()
            .generators()
            .iter()
            .enumerate()
            .filter(|(_, g)| g.support() == Support::CompactInterior)
            .map(|(i, _)| i)
            .collect();
        Self::from_generator_indices(space, indices)
    }

    /// Spans an explicit generator subset; every spanning function must
    /// vanish at both endpoints.
    pub fn from_generator_indices(space: &Arc<FunctionSpace>, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Validation(
                "test subspace needs at least one flagged generator".into(),
            ));
        }
        let domain = *space.rule().domain();
        let mut columns = Vec::with_capacity(indices.len());
        for &i in &indices {
            let g =
                space.generators().generators().get(i).ok_or_else(|| {
                    Error::Validation(format!("generator index {i} out of range"))
                })?;
            for endpoint in [domain.lower(), domain.upper()] {
                let v = g.evaluate(endpoint);
                if v.norm() > tol::ENDPOINT_VANISH {
                    return Err(Error::Validation(format!(
                        "generator {} does not vanish at {endpoint} (|value| = {:.3e})",
                        g.descriptor(),
                        v.norm()
                    )));
                }
            }
            let member = space.member_embed(|x| g.evaluate(x))?;
            columns.push(member.coefficients().clone());
        }

        // Orthonormalize the span in coefficient space with the same
        // spectral cutoff as the space build.
        let n = columns.len();
        let mut gram = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] = columns[j].dotc(&columns[i]);
            }
        }
        let eigen = gram.symmetric_eigen();
        let lambda_max = eigen.eigenvalues.max();
        let mut basis_cols = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b]
                .partial_cmp(&eigen.eigenvalues[a])
                .unwrap()
        });
        for &k in &order {
            let lam = eigen.eigenvalues[k];
            if lam < space.rank_tolerance() * lambda_max {
                break;
            }
            let mut col = DVector::<Complex64>::zeros(space.dimension());
            for (i, c) in columns.iter().enumerate() {
                col += c * eigen.eigenvectors[(i, k)];
            }
            basis_cols.push(col / Complex64::new(lam.sqrt(), 0.0));
        }
        if basis_cols.is_empty() {
            return Err(Error::DegenerateSpace {
                cutoff: space.rank_tolerance() * lambda_max,
            });
        }
        let basis = DMatrix::from_columns(&basis_cols);
        Ok(Self {
            space: Arc::clone(space),
            member_indices: indices,
            basis,
        })
    }

    /// The whole space as its own test subspace.
    pub fn whole_space(space: &Arc<FunctionSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            member_indices: Vec::new(),
            basis: DMatrix::identity(space.dimension(), space.dimension()),
        }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn member_indices(&self) -> &[usize] {
        &self.member_indices
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis_member(&self, k: usize) -> Ultrafunction {
        self.space
            .from_coefficients(self.basis.column(k).into_owned())
            .expect("subspace columns match the space dimension")
    }

    /// Orthogonal projection onto the subspace, in coefficient space.
    pub fn project(&self, u: &Ultrafunction) -> Result<Ultrafunction> {
        if !Arc::ptr_eq(u.space(), &self.space) {
            return Err(Error::SpaceMismatch);
        }
        let coords = self.basis.adjoint() * u.coefficients();
        self.space.from_coefficients(&self.basis * coords)
    }

    /// A nonzero member of the orthogonal complement, when the subspace is
    /// proper.
    pub fn orthogonal_complement_member(&self) -> Option<Ultrafunction> {
        let beta = self.space.dimension();
        if self.dimension() >= beta {
            return None;
        }
        for k in 0..beta {
            let e = self.space.basis_vector(k);
            let coords = self.basis.adjoint() * e.coefficients();
            let residual = e.coefficients() - &self.basis * coords;
            let norm = residual.norm();
            if norm > 1e-6 {
                return Some(
                    self.space
                        .from_coefficients(residual / Complex64::new(norm, 0.0))
                        .expect("residual has the space dimension"),
                );
            }
        }
        None
    }
}

/// True when u and v pair identically (to `tolerance`, relative to
/// `norm(u - v) * norm(phi)`) against every test function.
pub fn d_equivalent(
    u: &Ultrafunction,
    v: &Ultrafunction,
    test: &TestSubspace,
    tolerance: f64,
) -> Result<bool> {
    if !u.same_space(v) || !Arc::ptr_eq(u.space(), test.space()) {
        return Err(Error::SpaceMismatch);
    }
    let diff = u - v;
    let diff_norm = diff.norm();
    for k in 0..test.dimension() {
        let phi = test.basis_member(k);
        let pairing = test.space().pair_bilinear(&diff, &phi)?;
        if pairing.norm() > tolerance * diff_norm * phi.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The canonical representative of a distribution: the unique member of the
/// test span pairing like T against every test function. Any other solution
/// differs by a vector orthogonal to the span.
pub fn embed_distribution(
    space: &Arc<FunctionSpace>,
    t: &Functional,
    test: &TestSubspace,
) -> Result<Ultrafunction> {
    if !Arc::ptr_eq(space, test.space()) {
        return Err(Error::SpaceMismatch);
    }
    t.validate(space)?;
    let dim = test.dimension();
    // Solve M a = t over the subspace basis, with M the bilinear Gram of
    // the subspace columns (identity for real bases).
    let mut pairings = DVector::<Complex64>::zeros(dim);
    let mut gram = DMatrix::<Complex64>::zeros(dim, dim);
    for j in 0..dim {
        let dj = test.basis_member(j);
        pairings[j] = pair(space, t, &dj)?;
        for k in 0..dim {
            let dk = test.basis_member(k);
            gram[(j, k)] = space.pair_bilinear(&dk, &dj)?;
        }
    }
    let coords = gram
        .lu()
        .solve(&pairings)
        .ok_or_else(|| Error::DependentPoints("test subspace Gram not invertible".into()))?;
    let mut coefficients = DVector::<Complex64>::zeros(space.dimension());
    for k in 0..dim {
        coefficients += test.basis_member(k).coefficients() * coords[k];
    }
    space.from_coefficients(coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::GeneratorSet;
    use crate::kernel::{build_frame, delta_at};
    use crate::quadrature::{build_rule, Domain};
    use crate::space::build_space;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p1_space() -> Arc<FunctionSpace> {
        let d = Domain::closed(-1.0, 1.0).unwrap();
        build_space(
            GeneratorSet::legendre(d, 2).unwrap(),
            build_rule(d, 4, 8, &[]).unwrap(),
            1e-10,
        )
        .unwrap()
    }

    fn inv_sqrt_abs() -> Functional {
        Functional::integral_against(
            "abs_inv_sqrt",
            Arc::new(|x: f64| c(x.abs().powf(-0.5))),
            vec![0.0],
        )
    }

    #[test]
    fn unbounded_function_extends_to_the_constant_two() {
        let space = p1_space();
        let extension = canonical_extend(&space, &inv_sqrt_abs()).unwrap();
        for &x in &[-1.0, -0.5, 0.0, 0.3, 1.0] {
            assert!(
                (extension.evaluate(x).unwrap() - c(2.0)).norm() < 1e-6,
                "f~({x}) = {}",
                extension.evaluate(x).unwrap()
            );
        }
        // The extension is finite at zero and equals the pairing with the
        // delta there, even though the raw function has no value at zero.
        let delta0 = delta_at(&space, 0.0).unwrap();
        let paired = pair(&space, &inv_sqrt_abs(), &delta0).unwrap();
        assert!((extension.evaluate(0.0).unwrap() - paired).norm() < 1e-8);
    }

    #[test]
    fn point_mass_extends_to_the_delta_ultrafunction() {
        let space = p1_space();
        let t = Functional::point_mass(0.0);
        let extension = canonical_extend(&space, &t).unwrap();
        let delta = delta_at(&space, 0.0).unwrap();
        let diff = (&extension - &delta).norm();
        assert!(diff < 1e-10, "residual {diff:.3e}");
    }

    #[test]
    fn member_functional_extends_to_itself() {
        let space = p1_space();
        let t = Functional::integral_against("x", Arc::new(|x: f64| c(x)), vec![]);
        let extension = canonical_extend(&space, &t).unwrap();
        let member = space.member_embed(c).unwrap();
        assert!((&extension - &member).norm() < 1e-10);
    }

    #[test]
    fn extension_is_linear_in_the_functional() {
        let space = p1_space();
        let t1 = Functional::point_mass(0.5);
        let t2 = Functional::integral_against("x", Arc::new(|x: f64| c(x)), vec![]);
        let combo =
            Functional::combination("combo", vec![(c(2.0), t1.clone()), (c(-3.0), t2.clone())]);
        let direct = canonical_extend(&space, &combo).unwrap();
        let e1 = canonical_extend(&space, &t1).unwrap();
        let e2 = canonical_extend(&space, &t2).unwrap();
        let assembled = crate::space::lincomb(&[(c(2.0), &e1), (c(-3.0), &e2)]).unwrap();
        assert!((&direct - &assembled).norm() < 1e-12);
    }

    #[test]
    fn basis_functional_fixed_point() {
        let d = Domain::closed(-1.0, 1.0).unwrap();
        let space = build_space(
            GeneratorSet::legendre(d, 5).unwrap(),
            build_rule(d, 4, 10, &[]).unwrap(),
            1e-10,
        )
        .unwrap();
        for k in 0..space.dimension() {
            let e = space.basis_vector(k);
            let t = Functional::integral_against(
                format!("e_{k}"),
                {
                    let e = e.clone();
                    Arc::new(move |x| e.evaluate(x).unwrap())
                },
                vec![],
            );
            let ext = canonical_extend(&space, &t).unwrap();
            assert!((&ext - &e).norm() < 1e-10);
        }
    }

    #[test]
    fn frame_forms_agree_with_the_orthonormal_computation() {
        let space = p1_space();
        let frame = build_frame(&space, &[-1.0, 1.0]).unwrap();
        let t = inv_sqrt_abs();
        let direct = canonical_extend(&space, &t).unwrap();
        for basis in [FrameBasis::Sigma, FrameBasis::Theta, FrameBasis::Delta] {
            let via = canonical_extend_via_frame(&frame, &t, basis).unwrap();
            let diff = (&via - &direct).norm();
            assert!(diff < 1e-9, "{basis:?} residual {diff:.3e}");
        }
    }

    #[test]
    fn extension_works_over_a_complex_basis() {
        // Generators h_0 + i h_1 and h_0 - i h_1 span the same space as
        // {h_0, h_1} but force a complex orthonormal basis, so the bilinear
        // basis Gram is no longer the identity and the extension solve has
        // to use it.
        use crate::families::{FamilyMember, Generator, HermiteExpansion};
        let d = crate::quadrature::Domain::truncated_line(16.0).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let plus = Generator::from_expansion(
            FamilyMember::Custom {
                label: "h0+ih1".into(),
            },
            HermiteExpansion::new(vec![Complex64::ONE, i]),
        );
        let minus = Generator::from_expansion(
            FamilyMember::Custom {
                label: "h0-ih1".into(),
            },
            HermiteExpansion::new(vec![Complex64::ONE, -i]),
        );
        let set = GeneratorSet::new(d, vec![plus, minus]).unwrap();
        let rule = build_rule(d, 32, 12, &[]).unwrap();
        let space = build_space(set, rule, 1e-10).unwrap();
        assert_eq!(space.dimension(), 2);
        assert!(!space.basis_is_real());

        // The real member h_0 must extend to itself.
        let h0 = HermiteExpansion::single(0);
        let target = h0.clone();
        let t = Functional::integral_against("h0", Arc::new(move |x| target.eval(x)), vec![]);
        let ext = canonical_extend(&space, &t).unwrap();
        for &x in &[-2.0, -0.3, 0.0, 1.1, 3.0] {
            let expect = h0.eval(x);
            assert!((ext.evaluate(x).unwrap() - expect).norm() < 1e-9, "x = {x}");
        }

        // The reproducing identity holds through the sesquilinear product.
        let u = space
            .from_coefficients(nalgebra::dvector![
                Complex64::new(0.4, -0.9),
                Complex64::new(-1.3, 0.2)
            ])
            .unwrap();
        for &q in &[-1.5, 0.0, 2.2] {
            let delta = crate::kernel::delta_at(&space, q).unwrap();
            let paired = space.inner(&u, &delta).unwrap();
            assert!((paired - u.evaluate(q).unwrap()).norm() < 1e-9, "q = {q}");
        }
    }

    #[test]
    fn genuinely_divergent_pairing_is_detected() {
        let space = p1_space();
        let t = Functional::integral_against(
            "inverse_square",
            Arc::new(|x: f64| c(x.powi(-2))),
            vec![0.0],
        );
        assert!(matches!(
            canonical_extend(&space, &t),
            Err(Error::DivergentPairing { .. })
        ));
    }

    fn bspline_space() -> Arc<FunctionSpace> {
        let d = Domain::closed(0.0, 1.0).unwrap();
        build_space(
            GeneratorSet::bspline(d, 4, 17).unwrap(),
            build_rule(d, 17, 6, &[]).unwrap(),
            1e-10,
        )
        .unwrap()
    }

    #[test]
    fn test_subspace_construction_and_projection() {
        let space = bspline_space();
        let test = TestSubspace::from_flagged(&space).unwrap();
        assert_eq!(test.dimension(), 12);
        for k in 0..test.dimension() {
            let phi = test.basis_member(k);
            assert!(phi.evaluate(0.0).unwrap().norm() < 1e-10);
            assert!(phi.evaluate(1.0).unwrap().norm() < 1e-10);
        }
        let z = test.orthogonal_complement_member().unwrap();
        let back = test.project(&z).unwrap();
        assert!(back.norm() < 1e-9);
    }

    #[test]
    fn d_equivalence_examples() {
        let space = bspline_space();
        let test = TestSubspace::from_flagged(&space).unwrap();
        let u = space.member_embed(|x| c(x * (1.0 - x))).unwrap();
        assert!(d_equivalent(&u, &u, &test, tol::D_EQUIVALENCE_DEFAULT).unwrap());

        // adding an orthogonal-complement vector is invisible to the tests
        let z = test.orthogonal_complement_member().unwrap();
        let shifted = &u + &z;
        assert!(d_equivalent(&u, &shifted, &test, tol::D_EQUIVALENCE_DEFAULT).unwrap());

        // against the whole space, distinct basis vectors are not equivalent
        let whole = TestSubspace::whole_space(&space);
        let e1 = space.basis_vector(0);
        let e2 = space.basis_vector(1);
        assert!(!d_equivalent(&e1, &e2, &whole, tol::D_EQUIVALENCE_DEFAULT).unwrap());
    }

    #[test]
    fn embedding_against_the_whole_space_reduces_to_extension() {
        let space = p1_space();
        let whole = TestSubspace::whole_space(&space);
        let t = Functional::point_mass(0.25);
        let embedded = embed_distribution(&space, &t, &whole).unwrap();
        let extended = canonical_extend(&space, &t).unwrap();
        assert!((&embedded - &extended).norm() < 1e-12);
    }

    #[test]
    fn point_mass_embedding_satisfies_the_pairing_identity() {
        let space = bspline_space();
        let test = TestSubspace::from_flagged(&space).unwrap();
        let t = Functional::point_mass(0.5);
        let u = embed_distribution(&space, &t, &test).unwrap();

        let mut worst = 0.0_f64;
        for k in 0..test.dimension() {
            let phi = test.basis_member(k);
            let lhs = space.pair_bilinear(&u, &phi).unwrap();
            let rhs = pair(&space, &t, &phi).unwrap();
            worst = worst.max((lhs - rhs).norm());
        }
        assert!(worst <= tol::EMBEDDING_RESIDUAL, "residual {worst:.3e}");

        // Dense least-squares oracle over the subspace coordinates.
        let dim = test.dimension();
        let mut gram = DMatrix::<Complex64>::zeros(dim, dim);
        let mut rhs = DVector::<Complex64>::zeros(dim);
        for j in 0..dim {
            let dj = test.basis_member(j);
            rhs[j] = pair(&space, &t, &dj).unwrap();
            for k in 0..dim {
                gram[(j, k)] = space.pair_bilinear(&test.basis_member(k), &dj).unwrap();
            }
        }
        let normal = gram.adjoint() * &gram;
        let oracle_coords = normal
            .lu()
            .solve(&(gram.adjoint() * rhs))
            .expect("least-squares oracle solvable");
        let mut oracle = DVector::<Complex64>::zeros(space.dimension());
        for k in 0..dim {
            oracle += test.basis_member(k).coefficients() * oracle_coords[k];
        }
        assert!((u.coefficients() - oracle).norm() < 1e-9);

        // The solution set is bigger than the canonical representative:
        // adding an orthogonal-complement vector still satisfies the pairing
        // identity, and the embedding returns only the subspace component.
        let z = test.orthogonal_complement_member().unwrap();
        let second = &u + &z;
        for k in 0..test.dimension() {
            let phi = test.basis_member(k);
            let lhs = space.pair_bilinear(&second, &phi).unwrap();
            let rhs = pair(&space, &t, &phi).unwrap();
            assert!((lhs - rhs).norm() <= 1e-9);
        }
        assert!((&second - &u).norm() > 0.5);
        let projected = test.project(&second).unwrap();
        assert!((&projected - &u).norm() < 1e-9);
    }
}
