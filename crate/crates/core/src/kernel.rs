//! Delta ultrafunctions, independent point sets, and the sigma/theta dual
//! bases with the frame operator L and its square root A.
//!
//! `delta_at(space, q)` is the reproducing kernel at q: pairing any space
//! member against it returns the member's value at q. A point frame picks
//! dimension-many points at which the delta functions form a basis; its dual
//! (sigma) basis interpolates point values, the operator L maps sigma onto
//! delta, and theta = A sigma is an orthonormal basis symmetric in its point
//! arguments. The frame also induces a quadrature: integrating sigma gives
//! point weights.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{neumaier_sum, Neumaier};
use crate::space::{FunctionSpace, Ultrafunction};
use crate::tol;

/// The delta ultrafunction concentrated at q: the unique space member with
/// `inner(v, delta_q) = v(q)` for every member v. Over the orthonormal basis
/// its coefficients are `conj(e_j(q))`; for real bases simply `e_j(q)`.
pub fn delta_at(space: &Arc<FunctionSpace>, q: f64) -> Result<Ultrafunction> {
    if !space.rule().domain().contains(q) {
        return Err(Error::Domain(format!(
            "q = {q} outside domain [{}, {}]",
            space.rule().domain().lower(),
            space.rule().domain().upper()
        )));
    }
    let coefficients = space.basis_eval_at(q).map(|v| v.conj());
    space.from_coefficients(coefficients)
}

/// Greedy column-pivoted orthogonalization over the candidate evaluation
/// matrix: picks dimension-many points maximizing the running pivot
/// magnitude, ties broken by the lowest candidate index. Returns the chosen
/// points sorted ascending.
pub fn select_independent_points(space: &FunctionSpace, candidates: &[f64]) -> Result<Vec<f64>> {
    let beta = space.dimension();
    if candidates.len() < beta {
        return Err(Error::Validation(format!(
            "{} candidates cannot support dimension {beta}",
            candidates.len()
        )));
    }
    for &q in candidates {
        if !space.rule().domain().contains(q) {
            return Err(Error::Domain(format!("candidate {q} outside domain")));
        }
    }

    // Residual columns of the beta x n evaluation matrix.
    let n = candidates.len();
    let mut columns: Vec<DVector<Complex64>> =
        candidates.iter().map(|&q| space.basis_eval_at(q)).collect();
    let mut taken = vec![false; n];
    let mut picked = Vec::with_capacity(beta);
    for _ in 0..beta {
        let mut best: Option<(usize, f64)> = None;
        for (c, col) in columns.iter().enumerate() {
            if taken[c] {
                continue;
            }
            let norm = col.norm();
            if best.is_none_or(|(_, b)| norm > b) {
                best = Some((c, norm));
            }
        }
        let (pivot, pivot_norm) = best.expect("candidate pool exhausted");
        if pivot_norm <= tol::PIVOT_CUTOFF {
            return Err(Error::DependentPoints(format!(
                "only {} of {beta} pivots exceed {:.1e}",
                picked.len(),
                tol::PIVOT_CUTOFF
            )));
        }
        taken[pivot] = true;
        picked.push(candidates[pivot]);
        let q = columns[pivot].map(|v| v / Complex64::new(pivot_norm, 0.0));
        for (c, col) in columns.iter_mut().enumerate() {
            if !taken[c] {
                let overlap = q.dotc(col);
                *col -= &q * overlap;
            }
        }
    }
    picked.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(picked)
}

/// Candidate pool defaulting to the rule's nodes.
pub fn select_independent_points_default(space: &FunctionSpace) -> Result<Vec<f64>> {
    let nodes = space.rule().nodes().to_vec();
    select_independent_points(space, &nodes)
}

/// A set of independent points with everything derived from it.
#[derive(Debug)]
pub struct PointFrame {
    space: Arc<FunctionSpace>,
    points: Vec<f64>,
    /// evaluation[(j, a)] = e_j(points[a])
    evaluation: DMatrix<Complex64>,
    /// kernel[(a, b)] = delta_a(points[b])
    kernel: DMatrix<Complex64>,
    /// Column a holds sigma_a over the orthonormal basis.
    sigma_coefficients: DMatrix<Complex64>,
    /// Column a holds theta_a = A sigma_a over the orthonormal basis.
    theta_coefficients: DMatrix<Complex64>,
    l_matrix: DMatrix<Complex64>,
    a_matrix: DMatrix<Complex64>,
    l_inverse: DMatrix<Complex64>,
    a_inverse: DMatrix<Complex64>,
    /// weights[a] = integral of sigma_a.
    weights: DVector<Complex64>,
    condition_estimate: f64,
}

/// Serializable view: `{points, D, weights, condition_estimate}`.
#[derive(Debug, Serialize)]
pub struct FrameExport {
    pub points: Vec<f64>,
    #[serde(rename = "D")]
    pub kernel: Vec<Vec<[f64; 2]>>,
    pub weights: Vec<[f64; 2]>,
    pub condition_estimate: f64,
}

/// Builds the frame over the given points: the kernel matrix D, the sigma
/// basis solving the biorthogonality system, the operator L with
/// `L sigma_a = delta_a`, its principal square root A, and the induced
/// weights.
pub fn build_frame(space: &Arc<FunctionSpace>, points: &[f64]) -> Result<PointFrame> {
    let beta = space.dimension();
    if points.len() != beta {
        return Err(Error::Validation(format!(
            "frame needs exactly {beta} points, got {}",
            points.len()
        )));
    }
    for (i, &p) in points.iter().enumerate() {
        if !space.rule().domain().contains(p) {
            return Err(Error::Domain(format!("frame point {p} outside domain")));
        }
        if points[..i].contains(&p) {
            return Err(Error::DependentPoints(format!("duplicated point {p}")));
        }
    }

    let mut evaluation = DMatrix::<Complex64>::zeros(beta, beta);
    for (a, &p) in points.iter().enumerate() {
        evaluation.set_column(a, &space.basis_eval_at(p));
    }

    // Kernel matrix D[(a,b)] = delta_a(points[b]) = sum_j conj(E[j,a]) E[j,b];
    // Hermitian by construction, symmetric for real bases.
    let kernel = evaluation.adjoint() * &evaluation;
    let kernel_eigen = kernel.clone().symmetric_eigen();
    let lam_max = kernel_eigen.eigenvalues.max();
    let lam_min = kernel_eigen.eigenvalues.min();
    let condition_estimate = if lam_min > 0.0 {
        lam_max / lam_min
    } else {
        f64::INFINITY
    };
    if !condition_estimate.is_finite() || condition_estimate > tol::FRAME_CONDITION_LIMIT {
        return Err(Error::DependentPoints(format!(
            "kernel matrix condition {condition_estimate:.3e} exceeds {:.1e}",
            tol::FRAME_CONDITION_LIMIT
        )));
    }

    // sigma_b is the unique member with sigma_b(points[a]) = delta_ab:
    // E^T S = I.
    let lu = evaluation.transpose().lu();
    let sigma_coefficients = lu
        .try_inverse()
        .ok_or_else(|| Error::DependentPoints("evaluation matrix not invertible".into()))?;

    // L maps sigma_a to delta_a: L = conj(E) E^T.
    let delta_coefficients = evaluation.map(|v| v.conj());
    let l_matrix = &delta_coefficients * evaluation.transpose();

    let l_eigen = l_matrix.clone().symmetric_eigen();
    let norm_l = l_eigen.eigenvalues.amax();
    for &lam in l_eigen.eigenvalues.iter() {
        if lam < -1e-9 * norm_l {
            return Err(Error::NotPositive { eigenvalue: lam });
        }
        if lam <= 0.0 {
            // Clamping to zero is not an option: L must stay invertible.
            return Err(Error::DependentPoints(format!(
                "frame operator has eigenvalue {lam:.3e}"
            )));
        }
    }

    // Principal square root through the same eigendecomposition, then
    // re-symmetrized so A is Hermitian to the last bit.
    let u = &l_eigen.eigenvectors;
    let sqrt_diag =
        DMatrix::from_diagonal(&l_eigen.eigenvalues.map(|v| Complex64::new(v.sqrt(), 0.0)));
    let a_raw = u * sqrt_diag * u.adjoint();
    let a_matrix = (&a_raw + a_raw.adjoint()) * Complex64::new(0.5, 0.0);

    let inv_sqrt_diag = DMatrix::from_diagonal(
        &l_eigen
            .eigenvalues
            .map(|v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    );
    let inv_diag =
        DMatrix::from_diagonal(&l_eigen.eigenvalues.map(|v| Complex64::new(1.0 / v, 0.0)));
    let a_inverse = u * inv_sqrt_diag * u.adjoint();
    let l_inverse = u * inv_diag * u.adjoint();

    let theta_coefficients = &a_matrix * &sigma_coefficients;

    let weights = sigma_coefficients.transpose() * space.basis_integrals();

    let frame = PointFrame {
        space: Arc::clone(space),
        points: points.to_vec(),
        evaluation,
        kernel,
        sigma_coefficients,
        theta_coefficients,
        l_matrix,
        a_matrix,
        l_inverse,
        a_inverse,
        weights,
        condition_estimate,
    };
    frame.verify_construction()?;
    Ok(frame)
}

impl PointFrame {
    fn verify_construction(&self) -> Result<()> {
        let beta = self.points.len();

        // Biorthogonality through the rule: integral of delta_a sigma_b
        // (bilinear) must be the identity.
        let rule = self.space.rule();
        let basis = self.space.basis_values();
        let delta_values = self.evaluation.adjoint() * basis;
        let sigma_values = self.sigma_coefficients.transpose() * basis;
        let mut max_biorth = 0.0_f64;
        for a in 0..beta {
            for b in 0..beta {
                let mut acc = Complex64::ZERO;
                for (m, &w) in rule.weights().iter().enumerate() {
                    acc += w * delta_values[(a, m)] * sigma_values[(b, m)];
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                max_biorth = max_biorth.max((acc - expect).norm());
            }
        }
        if max_biorth > tol::BIORTHOGONALITY {
            return Err(Error::IdentityViolation {
                name: "delta/sigma biorthogonality",
                residual: max_biorth,
                tolerance: tol::BIORTHOGONALITY,
            });
        }

        // sigma_b(points[a]) = delta_ab.
        let cardinal = self.evaluation.transpose() * &self.sigma_coefficients;
        let mut max_cardinal = 0.0_f64;
        for a in 0..beta {
            for b in 0..beta {
                let expect = if a == b { 1.0 } else { 0.0 };
                max_cardinal = max_cardinal.max((cardinal[(a, b)] - expect).norm());
            }
        }
        if max_cardinal > tol::SIGMA_CARDINALITY {
            return Err(Error::IdentityViolation {
                name: "sigma cardinality",
                residual: max_cardinal,
                tolerance: tol::SIGMA_CARDINALITY,
            });
        }

        // L symmetry and A*A = L.
        let norm_l = self.l_matrix.norm();
        let sym_residual = (&self.l_matrix - self.l_matrix.adjoint()).norm();
        if sym_residual > tol::L_SYMMETRY * norm_l {
            return Err(Error::IdentityViolation {
                name: "L symmetry",
                residual: sym_residual,
                tolerance: tol::L_SYMMETRY * norm_l,
            });
        }
        let sqrt_residual = (&self.a_matrix * &self.a_matrix - &self.l_matrix).norm();
        if sqrt_residual > tol::SQUARE_ROOT_RESIDUAL * norm_l {
            return Err(Error::IdentityViolation {
                name: "A*A = L",
                residual: sqrt_residual,
                tolerance: tol::SQUARE_ROOT_RESIDUAL * norm_l,
            });
        }
        Ok(())
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `delta_a(points[b])`.
    pub fn kernel_matrix(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    pub fn evaluation_matrix(&self) -> &DMatrix<Complex64> {
        &self.evaluation
    }

    pub fn l_matrix(&self) -> &DMatrix<Complex64> {
        &self.l_matrix
    }

    pub fn a_matrix(&self) -> &DMatrix<Complex64> {
        &self.a_matrix
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Induced quadrature weights w_a = integral of sigma_a.
    pub fn weights(&self) -> &DVector<Complex64> {
        &self.weights
    }

    pub fn delta_ultrafunction(&self, a: usize) -> Ultrafunction {
        self.space
            .from_coefficients(self.evaluation.column(a).map(|v| v.conj()))
            .expect("frame coefficients match the space dimension")
    }

    pub fn sigma_at(&self, a: usize) -> Ultrafunction {
        self.space
            .from_coefficients(self.sigma_coefficients.column(a).into_owned())
            .expect("frame coefficients match the space dimension")
    }

    /// theta_a = A sigma_a; the full set is orthonormal and symmetric in its
    /// point arguments.
    pub fn theta_at(&self, a: usize) -> Ultrafunction {
        self.space
            .from_coefficients(self.theta_coefficients.column(a).into_owned())
            .expect("frame coefficients match the space dimension")
    }

    fn check_member(&self, u: &Ultrafunction) -> Result<()> {
        if Arc::ptr_eq(u.space(), &self.space) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Point values `u(points[a])`: the coefficients of u over the sigma basis.
    pub fn point_coefficients(&self, u: &Ultrafunction) -> Result<DVector<Complex64>> {
        self.check_member(u)?;
        Ok(self.evaluation.transpose() * u.coefficients())
    }

    /// Coefficients of u over the theta basis: point values of A^{-1} u,
    /// equivalently the integrals of theta_a against u.
    pub fn theta_coefficients_of(&self, u: &Ultrafunction) -> Result<DVector<Complex64>> {
        self.check_member(u)?;
        Ok(self.evaluation.transpose() * (&self.a_inverse * u.coefficients()))
    }

    /// Coefficients of u over the delta basis: point values of L^{-1} u,
    /// equivalently the integrals of sigma_a against u.
    pub fn delta_coefficients_of(&self, u: &Ultrafunction) -> Result<DVector<Complex64>> {
        self.check_member(u)?;
        Ok(self.evaluation.transpose() * (&self.l_inverse * u.coefficients()))
    }

    /// Reconstructs a member from one of the three coefficient vectors.
    pub fn from_point_coefficients(&self, values: &DVector<Complex64>) -> Result<Ultrafunction> {
        self.space
            .from_coefficients(&self.sigma_coefficients * values)
    }

    pub fn from_theta_coefficients(&self, values: &DVector<Complex64>) -> Result<Ultrafunction> {
        self.space
            .from_coefficients(&self.theta_coefficients * values)
    }

    pub fn from_delta_coefficients(&self, values: &DVector<Complex64>) -> Result<Ultrafunction> {
        let delta = self.evaluation.map(|v| v.conj());
        self.space.from_coefficients(&delta * values)
    }

    /// The integral of u as the sum of its delta-basis coefficients;
    /// equivalently the weighted sum of its point values.
    pub fn integrate_by_weights(&self, u: &Ultrafunction) -> Result<Complex64> {
        let dd = self.delta_coefficients_of(u)?;
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for v in dd.iter() {
            re.add(v.re);
            im.add(v.im);
        }
        Ok(Complex64::new(re.total(), im.total()))
    }

    /// The point-pairing sum over the frame: sum_a u(a) v(a), verified
    /// against the quadrature integral of (L u) v.
    pub fn inner_by_points(&self, u: &Ultrafunction, v: &Ultrafunction) -> Result<Complex64> {
        let up = self.point_coefficients(u)?;
        let vp = self.point_coefficients(v)?;
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for (a, b) in up.iter().zip(vp.iter()) {
            let prod = a * b;
            re.add(prod.re);
            im.add(prod.im);
        }
        let sum = Complex64::new(re.total(), im.total());

        let lu = self
            .space
            .from_coefficients(&self.l_matrix * u.coefficients())?;
        let integral = self.space.pair_bilinear(&lu, v)?;
        let scale = sum.norm().max(u.norm() * v.norm()).max(1.0);
        let residual = (sum - integral).norm();
        if residual > tol::FRAME_IDENTITIES * scale {
            return Err(Error::IdentityViolation {
                name: "point pairing vs integral of (L u) v",
                residual,
                tolerance: tol::FRAME_IDENTITIES * scale,
            });
        }
        Ok(sum)
    }

    pub fn export(&self) -> FrameExport {
        let beta = self.points.len();
        let kernel = (0..beta)
            .map(|a| {
                (0..beta)
                    .map(|b| {
                        let v = self.kernel[(a, b)];
                        [v.re, v.im]
                    })
                    .collect()
            })
            .collect();
        FrameExport {
            points: self.points.clone(),
            kernel,
            weights: self.weights.iter().map(|w| [w.re, w.im]).collect(),
            condition_estimate: self.condition_estimate,
        }
    }
}

/// Sum of the frame weights (compensated).
pub fn weight_sum(frame: &PointFrame) -> Complex64 {
    Complex64::new(
        neumaier_sum(frame.weights().iter().map(|w| w.re)),
        neumaier_sum(frame.weights().iter().map(|w| w.im)),
    )
}
