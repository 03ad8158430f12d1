//! Strict experiment configuration: named, reusable components resolved by
//! name at run time. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use ultrafunctions::extension::Functional;
use ultrafunctions::families::EvalFn;
use ultrafunctions::refinement::{Observable, RefinementChain, RuleSpec};
use ultrafunctions::space::{build_space, FunctionSpace};
use ultrafunctions::{tol, Domain, GeneratorSet, QuadratureRule, RawOperator};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_rank_tolerance")]
    pub rank_tolerance: f64,
    #[serde(default)]
    pub generator_sets: BTreeMap<String, GeneratorSpec>,
    #[serde(default)]
    pub functionals: BTreeMap<String, FunctionalSpec>,
    #[serde(default)]
    pub frames: BTreeMap<String, FrameSpec>,
    #[serde(default)]
    pub operators: BTreeMap<String, OperatorSpec>,
    #[serde(default)]
    pub inputs: BTreeMap<String, InputSpec>,
    #[serde(default)]
    pub chains: BTreeMap<String, ChainSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_tolerance_scale")]
    pub tolerance_scale: f64,
}

fn default_rank_tolerance() -> f64 {
    tol::RANK_TOLERANCE_DEFAULT
}

fn default_output_dir() -> String {
    "out".into()
}

fn default_tolerance_scale() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
    #[serde(default)]
    pub truncation_radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub order: usize,
    #[serde(default)]
    pub singular_points: Vec<f64>,
    #[serde(default)]
    pub grading_levels: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Legendre {
        count: usize,
    },
    Trig {
        max_mode: usize,
    },
    TrigSelect {
        include_constant: bool,
        modes: Vec<usize>,
    },
    Bspline {
        order: usize,
        segments: usize,
    },
    Hermite {
        count: usize,
    },
    GaussPoly {
        count: usize,
    },
    Grid {
        points: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    IntegralAgainst {
        function: String,
        #[serde(default)]
        singular_points: Vec<f64>,
    },
    PointMass {
        at: f64,
        #[serde(default)]
        scale: Option<[f64; 2]>,
    },
    Combination {
        terms: Vec<CombinationTerm>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationTerm {
    pub scale: [f64; 2],
    pub functional: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub space: String,
    #[serde(default)]
    pub points: Option<Vec<f64>>,
    #[serde(default)]
    pub candidates: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    Derivative,
    MultiplicationByX,
    Square,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub space: String,
    pub function: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub stages: Vec<String>,
    pub observable: ObservableSpec,
    #[serde(default = "default_atol")]
    pub stabilization_atol: f64,
}

fn default_atol() -> f64 {
    1e-9
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    ExtensionAt { functional: String, point: f64 },
    DeltaSelf { q: f64 },
    FrameWeightSum,
    Dimension,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let d = match (
            self.domain.truncation_radius,
            self.domain.lower,
            self.domain.upper,
        ) {
            (Some(radius), None, None) => Domain::truncated_line(radius),
            (None, Some(lower), Some(upper)) => Domain::closed(lower, upper),
            _ => {
                return Err(CliError::Config(
                    "domain needs either lower/upper or truncation_radius".into(),
                ))
            }
        };
        d.map_err(CliError::from)
    }

    pub fn rule(&self) -> Result<QuadratureRule, CliError> {
        let domain = self.domain()?;
        ultrafunctions::build_rule_with_grading(
            domain,
            self.quadrature.panels,
            self.quadrature.order,
            &self.quadrature.singular_points,
            self.quadrature
                .grading_levels
                .unwrap_or(ultrafunctions::quadrature::DEFAULT_GRADING_LEVELS),
        )
        .map_err(CliError::from)
    }

    pub fn generator_set(&self, name: &str) -> Result<GeneratorSet, CliError> {
        let spec = self
            .generator_sets
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown generator set '{name}'")))?;
        let domain = self.domain()?;
        let set = match spec {
            GeneratorSpec::Legendre { count } => GeneratorSet::legendre(domain, *count),
            GeneratorSpec::Trig { max_mode } => GeneratorSet::trig(domain, *max_mode),
            GeneratorSpec::TrigSelect {
                include_constant,
                modes,
            } => GeneratorSet::trig_select(domain, *include_constant, modes),
            GeneratorSpec::Bspline { order, segments } => {
                GeneratorSet::bspline(domain, *order, *segments)
            }
            GeneratorSpec::Hermite { count } => GeneratorSet::hermite(domain, *count),
            GeneratorSpec::GaussPoly { count } => GeneratorSet::gauss_poly(domain, *count),
            GeneratorSpec::Grid { points } => GeneratorSet::grid(domain, *points),
        };
        set.map_err(CliError::from)
    }

    pub fn space(&self, name: &str) -> Result<Arc<FunctionSpace>, CliError> {
        let set = self.generator_set(name)?;
        let rule = self.rule()?;
        build_space(set, rule, self.rank_tolerance).map_err(CliError::from)
    }

    pub fn functional(&self, name: &str) -> Result<Functional, CliError> {
        let spec = self
            .functionals
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown functional '{name}'")))?;
        self.build_functional(name, spec)
    }

    fn build_functional(&self, name: &str, spec: &FunctionalSpec) -> Result<Functional, CliError> {
        match spec {
            FunctionalSpec::IntegralAgainst {
                function,
                singular_points,
            } => {
                let f = builtin_function(function)?;
                Ok(Functional::integral_against(
                    name.to_string(),
                    f,
                    singular_points.clone(),
                ))
            }
            FunctionalSpec::PointMass { at, scale } => {
                let scale = scale.map_or(Complex64::ONE, |[re, im]| Complex64::new(re, im));
                Ok(Functional::scaled_point_mass(*at, scale))
            }
            FunctionalSpec::Combination { terms } => {
                let mut built = Vec::with_capacity(terms.len());
                for term in terms {
                    let inner = self.functional(&term.functional)?;
                    built.push((Complex64::new(term.scale[0], term.scale[1]), inner));
                }
                Ok(Functional::combination(name.to_string(), built))
            }
        }
    }

    pub fn frame_spec(&self, name: &str) -> Result<&FrameSpec, CliError> {
        self.frames
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown frame '{name}'")))
    }

    pub fn operator(&self, name: &str) -> Result<RawOperator, CliError> {
        let spec = self
            .operators
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown operator '{name}'")))?;
        Ok(match spec {
            OperatorSpec::Identity => RawOperator::identity(),
            OperatorSpec::Derivative => RawOperator::derivative(),
            OperatorSpec::MultiplicationByX => RawOperator::multiplication_by_x(),
            OperatorSpec::Square => RawOperator::square(),
        })
    }

    pub fn input(&self, name: &str) -> Result<&InputSpec, CliError> {
        self.inputs
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown input '{name}'")))
    }

    pub fn chain(&self, name: &str) -> Result<(RefinementChain, Observable, f64), CliError> {
        let spec = self
            .chains
            .get(name)
            .ok_or_else(|| CliError::Config(format!("unknown chain '{name}'")))?;
        let stages = spec
            .stages
            .iter()
            .map(|s| self.generator_set(s))
            .collect::<Result<Vec<_>, _>>()?;
        let rule_spec = RuleSpec {
            panels: self.quadrature.panels,
            order: self.quadrature.order,
            singular_points: self.quadrature.singular_points.clone(),
            grading_levels: self
                .quadrature
                .grading_levels
                .unwrap_or(ultrafunctions::quadrature::DEFAULT_GRADING_LEVELS),
        };
        let chain = RefinementChain::new(stages, rule_spec, self.rank_tolerance)?;
        let observable = match &spec.observable {
            ObservableSpec::ExtensionAt { functional, point } => Observable::ExtensionValueAt {
                functional: self.functional(functional)?,
                point: *point,
            },
            ObservableSpec::DeltaSelf { q } => Observable::DeltaSelfAt { q: *q },
            ObservableSpec::FrameWeightSum => Observable::FrameWeightSum,
            ObservableSpec::Dimension => Observable::Dimension,
        };
        Ok((chain, observable, spec.stabilization_atol))
    }
}

/// Named evaluable functions usable in functionals and inputs.
pub fn builtin_function(name: &str) -> Result<EvalFn, CliError> {
    let f: EvalFn = match name {
        "one" => Arc::new(|_| Complex64::ONE),
        "x" => Arc::new(|x| Complex64::new(x, 0.0)),
        "x_squared" => Arc::new(|x| Complex64::new(x * x, 0.0)),
        "abs" => Arc::new(|x: f64| Complex64::new(x.abs(), 0.0)),
        "sign" => Arc::new(|x: f64| Complex64::new(x.signum(), 0.0)),
        "abs_inv_sqrt" => Arc::new(|x: f64| Complex64::new(x.abs().powf(-0.5), 0.0)),
        "inv_square" => Arc::new(|x: f64| Complex64::new(x.powi(-2), 0.0)),
        "sin" => Arc::new(|x: f64| Complex64::new(x.sin(), 0.0)),
        "cos" => Arc::new(|x: f64| Complex64::new(x.cos(), 0.0)),
        "gauss" => Arc::new(|x: f64| Complex64::new((-x * x / 2.0).exp(), 0.0)),
        other => {
            return Err(CliError::Config(format!(
                "unknown function '{other}' (available: one, x, x_squared, abs, sign, abs_inv_sqrt, inv_square, sin, cos, gauss)"
            )))
        }
    };
    Ok(f)
}
