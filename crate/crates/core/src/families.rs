//! Generator functions and the built-in families.
//!
//! A [`Generator`] is an evaluable function together with the extra
//! structure the rest of the crate needs: an optional derivative evaluator,
//! an optional Hermite-mode expansion (the symbolic carrier for the Fourier
//! transform), a support flag, and a descriptor identifying it inside its
//! family. Descriptors are what refinement chains compare to verify nested
//! generator sets.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::Domain;
use crate::tol;

pub type EvalFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Support of a generator relative to the domain: compactly contained in the
/// interior (the test-function analog) or reaching the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    CompactInterior,
    Global,
}

/// Identity of a generator within the registry; compared structurally when
/// verifying that one generator set extends another.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyMember {
    Legendre {
        degree: usize,
    },
    TrigConstant,
    TrigCos {
        mode: usize,
    },
    TrigSin {
        mode: usize,
    },
    BSpline {
        order: usize,
        segments: usize,
        index: usize,
    },
    Hermite {
        degree: usize,
    },
    GaussPoly {
        degree: usize,
    },
    GridHat {
        points: usize,
        index: usize,
    },
    Transformed {
        base: Box<FamilyMember>,
        power: u8,
    },
    Conjugated {
        base: Box<FamilyMember>,
    },
    Custom {
        label: String,
    },
}

impl std::fmt::Display for FamilyMember {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyMember::Legendre { degree } => write!(f, "legendre[{degree}]"),
            FamilyMember::TrigConstant => write!(f, "trig[const]"),
            FamilyMember::TrigCos { mode } => write!(f, "trig[cos {mode}]"),
            FamilyMember::TrigSin { mode } => write!(f, "trig[sin {mode}]"),
            FamilyMember::BSpline {
                order,
                segments,
                index,
            } => {
                write!(f, "bspline[k={order},m={segments},{index}]")
            }
            FamilyMember::Hermite { degree } => write!(f, "hermite[{degree}]"),
            FamilyMember::GaussPoly { degree } => write!(f, "gausspoly[{degree}]"),
            FamilyMember::GridHat { points, index } => write!(f, "grid[n={points},{index}]"),
            FamilyMember::Transformed { base, power } => write!(f, "fourier^{power}({base})"),
            FamilyMember::Conjugated { base } => write!(f, "conj({base})"),
            FamilyMember::Custom { label } => write!(f, "custom[{label}]"),
        }
    }
}

/// Expansion over the orthonormal Hermite functions `h_n`. These are exact
/// carriers for the Fourier transform (`h_n` maps to `(-i)^n h_n`), complex
/// conjugation and differentiation, so a generator carrying one supports all
/// three symbolically.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    coeffs: Vec<Complex64>,
}

impl HermiteExpansion {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut e = Self { coeffs };
        e.trim();
        e
    }

    pub fn single(mode: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; mode + 1];
        coeffs[mode] = Complex64::ONE;
        Self { coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn max_mode(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Values of h_0..h_max at x by the stable three-term recurrence.
    pub fn hermite_values(max: usize, x: f64) -> Vec<f64> {
        let mut h = Vec::with_capacity(max + 1);
        let h0 = PI.powf(-0.25) * (-x * x / 2.0).exp();
        h.push(h0);
        if max >= 1 {
            h.push(2.0_f64.sqrt() * x * h0);
        }
        for n in 1..max {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
            h.push(next);
        }
        h
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::ZERO;
        }
        let h = Self::hermite_values(self.max_mode(), x);
        self.coeffs.iter().zip(&h).map(|(c, &v)| c * v).sum()
    }

    /// Expansion of the derivative: h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}.
    pub fn derivative(&self) -> Self {
        let mut out = vec![Complex64::ZERO; self.coeffs.len() + 1];
        for (n, c) in self.coeffs.iter().enumerate() {
            if n >= 1 {
                out[n - 1] += c * (n as f64 / 2.0).sqrt();
            }
            out[n + 1] -= c * ((n as f64 + 1.0) / 2.0).sqrt();
        }
        Self::new(out)
    }

    /// Fourier image: mode n picks up the eigenvalue (-i)^n.
    pub fn fourier(&self) -> Self {
        let minus_i = Complex64::new(0.0, -1.0);
        let mut eig = Complex64::ONE;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * eig;
                eig *= minus_i;
                v
            })
            .collect();
        Self::new(coeffs)
    }

    /// Expansion of the complex conjugate (the h_n are real).
    pub fn conjugate(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// Exact full-line inner product, conjugating `other`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }
}

/// An evaluable generator function.
#[derive(Clone)]
pub struct Generator {
    descriptor: FamilyMember,
    eval: EvalFn,
    derivative: Option<EvalFn>,
    spectrum: Option<HermiteExpansion>,
    support: Support,
    real_valued: bool,
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Generator")
            .field("descriptor", &self.descriptor)
            .field("has_derivative", &self.derivative.is_some())
            .field("has_spectrum", &self.spectrum.is_some())
            .field("support", &self.support)
            .finish()
    }
}

impl Generator {
    pub fn custom(
        label: impl Into<String>,
        eval: EvalFn,
        derivative: Option<EvalFn>,
        support: Support,
        real_valued: bool,
    ) -> Self {
        Self {
            descriptor: FamilyMember::Custom {
                label: label.into(),
            },
            eval,
            derivative,
            spectrum: None,
            support,
            real_valued,
        }
    }

    /// Generator realized by a Hermite-mode expansion; evaluation, derivative
    /// and transform all come from the expansion.
    pub fn from_expansion(descriptor: FamilyMember, expansion: HermiteExpansion) -> Self {
        let real_valued = expansion.is_real();
        let deriv = expansion.derivative();
        let e = expansion.clone();
        Self {
            descriptor,
            eval: Arc::new(move |x| e.eval(x)),
            derivative: Some(Arc::new(move |x| deriv.eval(x))),
            spectrum: Some(expansion),
            support: Support::Global,
            real_valued,
        }
    }

    pub fn descriptor(&self) -> &FamilyMember {
        &self.descriptor
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        (self.eval)(x)
    }

    pub fn derivative_at(&self, x: f64) -> Option<Complex64> {
        self.derivative.as_ref().map(|d| d(x))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn spectrum(&self) -> Option<&HermiteExpansion> {
        self.spectrum.as_ref()
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    /// The complex conjugate as a registry member: real generators are their
    /// own conjugate; spectral generators conjugate their expansion.
    pub fn conjugate(&self) -> Result<Generator> {
        if self.real_valued {
            return Ok(self.clone());
        }
        match &self.spectrum {
            Some(sp) => Ok(Generator::from_expansion(
                FamilyMember::Conjugated {
                    base: Box::new(self.descriptor.clone()),
                },
                sp.conjugate(),
            )),
            None => Err(Error::Capability(format!(
                "generator {} is complex-valued with no registered conjugate",
                self.descriptor
            ))),
        }
    }
}

/// A finite ordered set of generators over a common domain.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    domain: Domain,
    generators: Vec<Generator>,
}

impl GeneratorSet {
    /// Registers a generator list: non-empty, and every declared derivative
    /// must agree with a central finite difference at 16 interior probe
    /// points.
    pub fn new(domain: Domain, generators: Vec<Generator>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Validation("generator set must be non-empty".into()));
        }
        for g in &generators {
            check_derivative_registration(&domain, g)?;
        }
        Ok(Self { domain, generators })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Set inclusion by descriptor identity, over the same domain.
    pub fn is_extended_by(&self, other: &GeneratorSet) -> bool {
        self.domain == other.domain
            && self.generators.iter().all(|g| {
                other
                    .generators
                    .iter()
                    .any(|o| o.descriptor() == g.descriptor())
            })
    }

    /// Legendre polynomials of degree 0..count-1, affinely mapped to the
    /// domain.
    pub fn legendre(domain: Domain, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation("legendre family needs count >= 1".into()));
        }
        let generators = (0..count)
            .map(|degree| {
                let (lo, hi) = (domain.lower(), domain.upper());
                let scale = 2.0 / (hi - lo);
                let eval = Arc::new(move |x: f64| {
                    let t = (2.0 * x - lo - hi) / (hi - lo);
                    Complex64::new(legendre_value(degree, t), 0.0)
                });
                let deriv = Arc::new(move |x: f64| {
                    let t = (2.0 * x - lo - hi) / (hi - lo);
                    Complex64::new(legendre_derivative(degree, t) * scale, 0.0)
                });
                Generator {
                    descriptor: FamilyMember::Legendre { degree },
                    eval,
                    derivative: Some(deriv),
                    spectrum: None,
                    support: Support::Global,
                    real_valued: true,
                }
            })
            .collect();
        Self::new(domain, generators)
    }

    /// Full trigonometric family: constant plus cos/sin of modes 1..=max_mode
    /// at the domain's natural period.
    pub fn trig(domain: Domain, max_mode: usize) -> Result<Self> {
        Self::trig_select(domain, true, &(1..=max_mode).collect::<Vec<_>>())
    }

    /// Selected trigonometric modes; `include_constant` adds the constant 1.
    pub fn trig_select(domain: Domain, include_constant: bool, modes: &[usize]) -> Result<Self> {
        if !include_constant && modes.is_empty() {
            return Err(Error::Validation("trig family selection is empty".into()));
        }
        if modes.contains(&0) {
            return Err(Error::Validation(
                "trig modes start at 1; use include_constant for the constant".into(),
            ));
        }
        let omega = 2.0 * PI / domain.length();
        let center = domain.midpoint();
        let mut generators = Vec::new();
        if include_constant {
            generators.push(Generator {
                descriptor: FamilyMember::TrigConstant,
                eval: Arc::new(|_| Complex64::ONE),
                derivative: Some(Arc::new(|_| Complex64::ZERO)),
                spectrum: None,
                support: Support::Global,
                real_valued: true,
            });
        }
        for &m in modes {
            let w = omega * m as f64;
            generators.push(Generator {
                descriptor: FamilyMember::TrigCos { mode: m },
                eval: Arc::new(move |x| Complex64::new((w * (x - center)).cos(), 0.0)),
                derivative: Some(Arc::new(move |x| {
                    Complex64::new(-w * (w * (x - center)).sin(), 0.0)
                })),
                spectrum: None,
                support: Support::Global,
                real_valued: true,
            });
            generators.push(Generator {
                descriptor: FamilyMember::TrigSin { mode: m },
                eval: Arc::new(move |x| Complex64::new((w * (x - center)).sin(), 0.0)),
                derivative: Some(Arc::new(move |x| {
                    Complex64::new(w * (w * (x - center)).cos(), 0.0)
                })),
                spectrum: None,
                support: Support::Global,
                real_valued: true,
            });
        }
        Self::new(domain, generators)
    }

    /// B-splines of the given order (degree order-1) on a clamped uniform
    /// knot vector with `segments` subintervals; yields
    /// `segments + order - 1` members. Splines whose support avoids both
    /// endpoints are flagged compact-in-interior.
    pub fn bspline(domain: Domain, order: usize, segments: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Validation("bspline order must be >= 2".into()));
        }
        if segments < 1 {
            return Err(Error::Validation("bspline segments must be >= 1".into()));
        }
        let (lo, hi) = (domain.lower(), domain.upper());
        let mut knots = Vec::with_capacity(segments + 2 * order - 1);
        knots.extend(std::iter::repeat_n(lo, order));
        for i in 1..segments {
            knots.push(lo + (hi - lo) * i as f64 / segments as f64);
        }
        knots.extend(std::iter::repeat_n(hi, order));
        let knots = Arc::new(knots);
        let count = segments + order - 1;
        let generators = (0..count)
            .map(|index| {
                let kn = Arc::clone(&knots);
                let kd = Arc::clone(&knots);
                let interior = knots[index] > lo && knots[index + order] < hi;
                Generator {
                    descriptor: FamilyMember::BSpline {
                        order,
                        segments,
                        index,
                    },
                    eval: Arc::new(move |x| {
                        Complex64::new(bspline_value(&kn, index, order, x), 0.0)
                    }),
                    derivative: Some(Arc::new(move |x| {
                        Complex64::new(bspline_derivative(&kd, index, order, x), 0.0)
                    })),
                    spectrum: None,
                    support: if interior {
                        Support::CompactInterior
                    } else {
                        Support::Global
                    },
                    real_valued: true,
                }
            })
            .collect();
        Self::new(domain, generators)
    }

    /// Hermite functions h_0..h_{count-1}. Meaningful on truncated-line
    /// domains wide enough to hold their mass.
    pub fn hermite(domain: Domain, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation("hermite family needs count >= 1".into()));
        }
        let generators = (0..count)
            .map(|degree| {
                Generator::from_expansion(
                    FamilyMember::Hermite { degree },
                    HermiteExpansion::single(degree),
                )
            })
            .collect();
        Self::new(domain, generators)
    }

    /// Gaussian-polynomial family x^m e^{-x^2/2}, m = 0..count-1, carried as
    /// exact Hermite expansions.
    pub fn gauss_poly(domain: Domain, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation(
                "gauss_poly family needs count >= 1".into(),
            ));
        }
        let generators = (0..count)
            .map(|degree| {
                Generator::from_expansion(
                    FamilyMember::GaussPoly { degree },
                    monomial_gaussian_expansion(degree),
                )
            })
            .collect();
        Self::new(domain, generators)
    }

    /// Piecewise-linear hat functions on a uniform grid of `points` nodes.
    pub fn grid(domain: Domain, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Validation(
                "grid family needs at least 2 points".into(),
            ));
        }
        let (lo, hi) = (domain.lower(), domain.upper());
        let h = (hi - lo) / (points - 1) as f64;
        let generators = (0..points)
            .map(|index| {
                let center = lo + h * index as f64;
                let interior = index > 0 && index + 1 < points;
                Generator {
                    descriptor: FamilyMember::GridHat { points, index },
                    eval: Arc::new(move |x| {
                        Complex64::new((1.0 - ((x - center) / h).abs()).max(0.0), 0.0)
                    }),
                    derivative: Some(Arc::new(move |x| {
                        let t = (x - center) / h;
                        let d = if t.abs() >= 1.0 {
                            0.0
                        } else if t < 0.0 {
                            1.0 / h
                        } else {
                            -1.0 / h
                        };
                        Complex64::new(d, 0.0)
                    })),
                    spectrum: None,
                    support: if interior {
                        Support::CompactInterior
                    } else {
                        Support::Global
                    },
                    real_valued: true,
                }
            })
            .collect();
        Self::new(domain, generators)
    }
}

/// Central finite-difference agreement check at 16 low-discrepancy interior
/// probe points. A probe that straddles a kink of a piecewise generator is
/// retried once at a shifted abscissa.
fn check_derivative_registration(domain: &Domain, g: &Generator) -> Result<()> {
    let Some(deriv) = &g.derivative else {
        return Ok(());
    };
    let (lo, span) = (domain.lower(), domain.length());
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    for k in 1..=16u32 {
        let frac = (k as f64 * phi).fract();
        let x = lo + span * (0.05 + 0.9 * frac);
        let agrees = |x: f64| {
            let h = 1e-7 * (1.0 + x.abs());
            let fd = (g.evaluate(x + h) - g.evaluate(x - h)) / (2.0 * h);
            let dv = deriv(x);
            (fd - dv).norm() <= tol::DERIVATIVE_REGISTRATION * dv.norm().max(1.0)
        };
        if !agrees(x) && !agrees(x + 3e-7 * (1.0 + x.abs())) {
            return Err(Error::Validation(format!(
                "derivative of {} disagrees with finite difference near x = {x:.6}",
                g.descriptor
            )));
        }
    }
    Ok(())
}

/// P_n(t) on [-1, 1].
pub(crate) fn legendre_value(n: usize, t: f64) -> f64 {
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = t;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// P_n'(t) on [-1, 1], endpoint-safe.
pub(crate) fn legendre_derivative(n: usize, t: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if (t * t - 1.0).abs() < 1e-12 {
        // P_n'(+-1) = (+-1)^{n+1} n(n+1)/2
        let sign = if t > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        return sign * (n * (n + 1)) as f64 / 2.0;
    }
    let p_n = legendre_value(n, t);
    let p_nm1 = legendre_value(n - 1, t);
    n as f64 * (t * p_n - p_nm1) / (t * t - 1.0)
}

/// Cox-de Boor evaluation of B_{i,k} (order k, degree k-1).
fn bspline_value(knots: &[f64], i: usize, k: usize, x: f64) -> f64 {
    let last = *knots.last().unwrap();
    if k == 1 {
        let inside = (knots[i] <= x && x < knots[i + 1])
            || (x == last && knots[i] < knots[i + 1] && x <= knots[i + 1]);
        return if inside { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let d1 = knots[i + k - 1] - knots[i];
    if d1 > 0.0 {
        value += (x - knots[i]) / d1 * bspline_value(knots, i, k - 1, x);
    }
    let d2 = knots[i + k] - knots[i + 1];
    if d2 > 0.0 {
        value += (knots[i + k] - x) / d2 * bspline_value(knots, i + 1, k - 1, x);
    }
    value
}

fn bspline_derivative(knots: &[f64], i: usize, k: usize, x: f64) -> f64 {
    let mut value = 0.0;
    let d1 = knots[i + k - 1] - knots[i];
    if d1 > 0.0 {
        value += (k - 1) as f64 / d1 * bspline_value(knots, i, k - 1, x);
    }
    let d2 = knots[i + k] - knots[i + 1];
    if d2 > 0.0 {
        value -= (k - 1) as f64 / d2 * bspline_value(knots, i + 1, k - 1, x);
    }
    value
}

/// Exact Hermite-function expansion of x^m e^{-x^2/2}, from the monomial
/// expansion x^m = (m!/2^m) sum_k H_{m-2k} / (k! (m-2k)!).
fn monomial_gaussian_expansion(m: usize) -> HermiteExpansion {
    let mut coeffs = vec![Complex64::ZERO; m + 1];
    let m_fact = factorial(m);
    for k in 0..=(m / 2) {
        let n = m - 2 * k;
        // h_n = H_n e^{-x^2/2} / sqrt(2^n n! sqrt(pi))
        let scale = (2.0_f64.powi(n as i32) * factorial(n) * PI.sqrt()).sqrt();
        let c = m_fact / 2.0_f64.powi(m as i32) / (factorial(k) * factorial(n)) * scale;
        coeffs[n] = Complex64::new(c, 0.0);
    }
    HermiteExpansion::new(coeffs)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
