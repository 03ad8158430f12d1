//! Refinement chains: run one observable across a nested sequence of
//! generator sets and report whether its value stabilizes.
//!
//! Stabilization is the operational verdict (the last two stage-to-stage
//! deltas inside tolerance); values are never extrapolated. Member
//! observables stay constant along a chain, while genuinely stage-dependent
//! quantities (the extension of a non-member at a point, or the kernel
//! diagonal delta_q(q)) show their trend in the stage reports.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{canonical_extend, Functional};
use crate::families::GeneratorSet;
use crate::kernel::{build_frame, delta_at, select_independent_points_default, weight_sum};
use crate::quadrature::{build_rule_with_grading, Domain, QuadratureRule, DEFAULT_GRADING_LEVELS};
use crate::space::build_space;

/// Shared quadrature parameters applied at every stage.
#[derive(Debug, Clone)]
pub struct RuleSpec {
    pub panels: usize,
    pub order: usize,
    pub singular_points: Vec<f64>,
    pub grading_levels: u32,
}

impl RuleSpec {
    pub fn new(panels: usize, order: usize) -> Self {
        Self {
            panels,
            order,
            singular_points: Vec::new(),
            grading_levels: DEFAULT_GRADING_LEVELS,
        }
    }

    pub fn build(&self, domain: Domain) -> Result<QuadratureRule> {
        build_rule_with_grading(
            domain,
            self.panels,
            self.order,
            &self.singular_points,
            self.grading_levels,
        )
    }
}

/// An increasing chain of generator sets with shared rule parameters.
#[derive(Debug)]
pub struct RefinementChain {
    stages: Vec<GeneratorSet>,
    rule_spec: RuleSpec,
    rank_tolerance: f64,
    inclusion_verified: bool,
}

impl RefinementChain {
    /// Verifies the nesting (each stage extends the previous one, compared
    /// by registry descriptors) before accepting the chain.
    pub fn new(
        stages: Vec<GeneratorSet>,
        rule_spec: RuleSpec,
        rank_tolerance: f64,
    ) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Validation("refinement chain has no stages".into()));
        }
        for i in 1..stages.len() {
            if !stages[i - 1].is_extended_by(&stages[i]) {
                return Err(Error::Validation(format!(
                    "stage {} does not extend stage {}",
                    i + 1,
                    i
                )));
            }
        }
        Ok(Self {
            stages,
            rule_spec,
            rank_tolerance,
            inclusion_verified: true,
        })
    }

    pub fn stages(&self) -> &[GeneratorSet] {
        &self.stages
    }

    pub fn inclusion_verified(&self) -> bool {
        self.inclusion_verified
    }
}

/// The experiment evaluated at every stage.
#[derive(Debug, Clone)]
pub enum Observable {
    /// Canonically extend the functional, then evaluate at the point.
    ExtensionValueAt { functional: Functional, point: f64 },
    /// The kernel diagonal delta_q(q); grows with the dimension.
    DeltaSelfAt { q: f64 },
    /// Sum of the frame weights over default independent points.
    FrameWeightSum,
    /// The space dimension.
    Dimension,
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::ExtensionValueAt { functional, point } => {
                format!("extension[{}]({point})", functional.name())
            }
            Observable::DeltaSelfAt { q } => format!("delta_self({q})"),
            Observable::FrameWeightSum => "frame_weight_sum".into(),
            Observable::Dimension => "dimension".into(),
        }
    }
}

/// One stage's value of the observable.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    /// 1-based stage index.
    pub stage: usize,
    pub observable: String,
    pub dimension: usize,
    pub value_re: f64,
    pub value_im: f64,
    /// `|value_i - value_{i-1}|`; absent at the first stage.
    pub delta_from_previous: Option<f64>,
}

/// Outcome of a chain run. Stabilization requires the last two deltas to
/// sit inside the tolerance; anything else reports the delta trend.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Stabilized {
        stage: usize,
        value_re: f64,
        value_im: f64,
    },
    NotStabilized {
        deltas: Vec<f64>,
    },
}

/// Runs the observable across the chain.
pub fn run_chain(
    chain: &RefinementChain,
    observable: &Observable,
    stabilization_atol: f64,
) -> Result<(Vec<StageReport>, Verdict)> {
    if stabilization_atol.is_nan() || stabilization_atol <= 0.0 {
        return Err(Error::Validation(
            "stabilization_atol must be positive".into(),
        ));
    }
    let mut reports: Vec<StageReport> = Vec::with_capacity(chain.stages.len());
    let mut values: Vec<Complex64> = Vec::with_capacity(chain.stages.len());
    for (i, stage_set) in chain.stages.iter().enumerate() {
        let stage = i + 1;
        let run = || -> Result<(usize, Complex64)> {
            let rule = chain.rule_spec.build(*stage_set.domain())?;
            let space = build_space(stage_set.clone(), rule, chain.rank_tolerance)?;
            let value = match observable {
                Observable::ExtensionValueAt { functional, point } => {
                    canonical_extend(&space, functional)?.evaluate(*point)?
                }
                Observable::DeltaSelfAt { q } => delta_at(&space, *q)?.evaluate(*q)?,
                Observable::FrameWeightSum => {
                    let points = select_independent_points_default(&space)?;
                    let frame = build_frame(&space, &points)?;
                    weight_sum(&frame)
                }
                Observable::Dimension => Complex64::new(space.dimension() as f64, 0.0),
            };
            Ok((space.dimension(), value))
        };
        let (dimension, value) = run().map_err(|e| Error::Chain {
            stage,
            source: Box::new(e),
        })?;
        let delta = (stage > 1).then(|| (value - values[i - 1]).norm());
        reports.push(StageReport {
            stage,
            observable: observable.name(),
            dimension,
            value_re: value.re,
            value_im: value.im,
            delta_from_previous: delta,
        });
        values.push(value);
    }

    let deltas: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.delta_from_previous)
        .collect();
    let verdict = if deltas.len() >= 2
        && deltas[deltas.len() - 1] <= stabilization_atol
        && deltas[deltas.len() - 2] <= stabilization_atol
    {
        let last = values[values.len() - 1];
        Verdict::Stabilized {
            stage: reports.len(),
            value_re: last.re,
            value_im: last.im,
        }
    } else {
        Verdict::NotStabilized { deltas }
    };
    Ok((reports, verdict))
}
