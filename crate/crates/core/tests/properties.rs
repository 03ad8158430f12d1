//! Property tests for the algebraic invariants: linearity, evaluation
//! commuting with linear combinations, conjugate symmetry, Parseval, the
//! reproducing identity, and permutation invariance of the frame sums.

use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use ultrafunctions::kernel::{
    build_frame, delta_at, select_independent_points_default, PointFrame,
};
use ultrafunctions::space::{build_space, lincomb, FunctionSpace};
use ultrafunctions::{build_rule, Domain, GeneratorSet};

fn shared_space() -> &'static Arc<FunctionSpace> {
    static SPACE: OnceLock<Arc<FunctionSpace>> = OnceLock::new();
    SPACE.get_or_init(|| {
        let d = Domain::closed(-1.0, 1.0).unwrap();
        build_space(
            GeneratorSet::legendre(d, 5).unwrap(),
            build_rule(d, 4, 10, &[]).unwrap(),
            1e-10,
        )
        .unwrap()
    })
}

fn shared_frame() -> &'static PointFrame {
    static FRAME: OnceLock<PointFrame> = OnceLock::new();
    FRAME.get_or_init(|| {
        let space = shared_space();
        let points = select_independent_points_default(space).unwrap();
        build_frame(space, &points).unwrap()
    })
}

fn coeff_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5)
}

fn member(space: &Arc<FunctionSpace>, coeffs: &[(f64, f64)]) -> ultrafunctions::Ultrafunction {
    let v = DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().map(|&(re, im)| Complex64::new(re, im)),
    );
    space.from_coefficients(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrate_is_linear_in_the_integrand(
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        shift in -1.0..1.0f64,
    ) {
        let d = Domain::closed(-1.0, 1.0).unwrap();
        let rule = build_rule(d, 3, 6, &[]).unwrap();
        let f = |x: f64| Complex64::new((x + shift).cos(), x);
        let g = |x: f64| Complex64::new(x * x, (x - shift).sin());
        let lhs = rule
            .integrate(|x| Complex64::new(a, 0.0) * f(x) + Complex64::new(b, 0.0) * g(x))
            .unwrap();
        let rhs = Complex64::new(a, 0.0) * rule.integrate(f).unwrap()
            + Complex64::new(b, 0.0) * rule.integrate(g).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn evaluation_commutes_with_linear_combinations(
        cu in coeff_strategy(),
        cv in coeff_strategy(),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
        x in -1.0..1.0f64,
    ) {
        let space = shared_space();
        let u = member(space, &cu);
        let v = member(space, &cv);
        let (ca, cb) = (Complex64::new(alpha, 0.0), Complex64::new(0.0, beta));
        let combined = lincomb(&[(ca, &u), (cb, &v)]).unwrap();
        let lhs = combined.evaluate(x).unwrap();
        let rhs = ca * u.evaluate(x).unwrap() + cb * v.evaluate(x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + rhs.norm()));
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(cu in coeff_strategy(), cv in coeff_strategy()) {
        let space = shared_space();
        let u = member(space, &cu);
        let v = member(space, &cv);
        let uv = space.inner(&u, &v).unwrap();
        let vu = space.inner(&v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() <= 1e-12 * (1.0 + uv.norm()));
    }

    #[test]
    fn parseval_holds(cu in coeff_strategy()) {
        let space = shared_space();
        let u = member(space, &cu);
        prop_assert!((u.norm() - u.norm_quadrature()).abs() <= 1e-10 * (1.0 + u.norm()));
    }

    #[test]
    fn delta_reproduces_point_values(cu in coeff_strategy(), q in -1.0..1.0f64) {
        let space = shared_space();
        let u = member(space, &cu);
        let delta = delta_at(space, q).unwrap();
        let paired = space.pair_bilinear(&u, &delta).unwrap();
        let direct = u.evaluate(q).unwrap();
        prop_assert!((paired - direct).norm() <= 1e-9 * (1.0 + u.norm()));
    }

    #[test]
    fn frame_sums_are_permutation_invariant(cu in coeff_strategy(), seed in 0u64..1024) {
        // The frame sums are plain finite sums; summing the delta-basis
        // coefficients in a shuffled order must agree to a few ulps.
        let frame = shared_frame();
        let space = shared_space();
        let u = member(space, &cu);
        let dd = frame.delta_coefficients_of(&u).unwrap();
        let forward = frame.integrate_by_weights(&u).unwrap();

        let mut order: Vec<usize> = (0..dd.len()).collect();
        let mut state = seed.wrapping_add(1);
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            order.swap(i, j);
        }
        let shuffled: Complex64 = order.iter().map(|&i| dd[i]).sum();
        let scale: f64 = dd.iter().map(|v| v.norm()).sum::<f64>().max(1.0);
        prop_assert!((forward - shuffled).norm() <= 8.0 * f64::EPSILON * scale);
    }
}
