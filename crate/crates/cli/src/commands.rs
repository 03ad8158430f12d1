//! The experiment pipelines behind each subcommand. Every command produces
//! a [`Report`] written to `report.json` plus whatever CSV/JSON artifacts
//! its tables call for; every numeric claim in the report carries its
//! tolerance and a pass flag.

use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use ultrafunctions::extension::{canonical_extend, pair, Functional};
use ultrafunctions::kernel::{
    build_frame, delta_at, select_independent_points, select_independent_points_default,
    weight_sum, PointFrame,
};
use ultrafunctions::operators::{
    extend_operator, fourier_close, fourier_frame_checks, FourierSpace,
};
use ultrafunctions::refinement::{run_chain, StageReport, Verdict};
use ultrafunctions::space::{build_space, FunctionSpace, Ultrafunction};
use ultrafunctions::{tol, CheckRecord};

use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, write_csv, write_json};
use crate::CliError;

pub struct RunContext<'a> {
    pub config: &'a ExperimentConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub tol_scale: f64,
}

#[derive(Serialize)]
pub struct Report {
    pub tool: String,
    pub subcommand: String,
    pub target: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub checks: Vec<CheckRecord>,
    pub values: Vec<SampledValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct SampledValue {
    pub label: String,
    pub x: f64,
    pub re: f64,
    pub im: f64,
}

impl<'a> RunContext<'a> {
    fn check(&self, name: impl Into<String>, residual: f64, tolerance: f64) -> CheckRecord {
        CheckRecord::new(name, residual, tolerance * self.tol_scale)
    }

    fn finish(
        &self,
        subcommand: &str,
        target: &str,
        checks: Vec<CheckRecord>,
        values: Vec<SampledValue>,
        verdict: Option<Verdict>,
    ) -> Result<Report, CliError> {
        let pass = checks.iter().all(|c| c.pass);
        let report = Report {
            tool: format!("ultrafun {}", env!("CARGO_PKG_VERSION")),
            subcommand: subcommand.into(),
            target: target.into(),
            seed: self.seed,
            tolerance_scale: self.tol_scale,
            checks,
            values,
            verdict,
            pass,
        };
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
        write_json(&self.out_dir.join("report.json"), &report)?;
        Ok(report)
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Uniform sample grid across the domain, endpoints included.
fn sample_grid(space: &FunctionSpace, count: usize) -> Vec<f64> {
    let d = space.rule().domain();
    (0..count)
        .map(|i| d.lower() + d.length() * i as f64 / (count - 1) as f64)
        .collect()
}

fn sampled_values(
    label: &str,
    space: &FunctionSpace,
    u: &Ultrafunction,
) -> Result<Vec<SampledValue>, CliError> {
    sample_grid(space, 9)
        .into_iter()
        .map(|x| {
            let v = u.evaluate(x)?;
            Ok(SampledValue {
                label: label.into(),
                x,
                re: v.re,
                im: v.im,
            })
        })
        .collect()
}

/// Max residual of the defining pairing identity of an extension:
/// `integral of w e_j` against `<T, e_j>` over every basis function.
fn extension_identity_residual(
    space: &Arc<FunctionSpace>,
    t: &Functional,
    w: &Ultrafunction,
) -> Result<f64, CliError> {
    let mut worst = 0.0_f64;
    for j in 0..space.dimension() {
        let e = space.basis_vector(j);
        let lhs = space.pair_bilinear(w, &e)?;
        let rhs = pair(space, t, &e)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

pub fn build_space_cmd(ctx: &RunContext, name: &str) -> Result<Report, CliError> {
    let space = ctx.config.space(name)?;
    let checks = vec![
        ctx.check(
            "basis orthonormality",
            space.gram_residual(),
            tol::ORTHONORMALITY,
        ),
        ctx.check(
            "node count covers dimension",
            (4 * space.dimension()) as f64,
            space.rule().len() as f64,
        ),
    ];
    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
    write_json(&ctx.artifact("space.json"), &space.export())?;
    let values = vec![SampledValue {
        label: "dimension".into(),
        x: 0.0,
        re: space.dimension() as f64,
        im: 0.0,
    }];
    ctx.finish("build-space", name, checks, values, None)
}

fn resolve_frame(
    ctx: &RunContext,
    name: &str,
) -> Result<(Arc<FunctionSpace>, PointFrame), CliError> {
    let spec = ctx.config.frame_spec(name)?;
    let space = ctx.config.space(&spec.space)?;
    let points = match (&spec.points, &spec.candidates) {
        (Some(points), _) => points.clone(),
        (None, Some(candidates)) => select_independent_points(&space, candidates)?,
        (None, None) => select_independent_points_default(&space)?,
    };
    let frame = build_frame(&space, &points)?;
    Ok((space, frame))
}

pub fn frame_cmd(ctx: &RunContext, name: &str) -> Result<Report, CliError> {
    let (space, frame) = resolve_frame(ctx, name)?;
    let beta = frame.len();

    let mut biorth = 0.0_f64;
    let mut cardinal = 0.0_f64;
    for a in 0..beta {
        let delta = frame.delta_ultrafunction(a);
        for b in 0..beta {
            let sigma = frame.sigma_at(b);
            let expect = if a == b { 1.0 } else { 0.0 };
            biorth = biorth
                .max((space.pair_bilinear(&delta, &sigma)? - Complex64::new(expect, 0.0)).norm());
            cardinal = cardinal
                .max((sigma.evaluate(frame.points()[a])? - Complex64::new(expect, 0.0)).norm());
        }
    }
    let kernel = frame.kernel_matrix();
    let mut d_symmetry = 0.0_f64;
    for a in 0..beta {
        for b in 0..beta {
            d_symmetry = d_symmetry.max((kernel[(a, b)] - kernel[(b, a)].conj()).norm());
        }
    }
    let l = frame.l_matrix();
    let l_symmetry = (l - l.adjoint()).norm();
    let sqrt_residual = (frame.a_matrix() * frame.a_matrix() - l).norm();
    let weight_total = weight_sum(&frame);
    let length = space.rule().domain().length();

    let checks = vec![
        ctx.check("delta/sigma biorthogonality", biorth, tol::BIORTHOGONALITY),
        ctx.check("sigma cardinality", cardinal, tol::SIGMA_CARDINALITY),
        ctx.check(
            "kernel matrix symmetry",
            d_symmetry,
            tol::FRAME_D_SYMMETRY * beta as f64,
        ),
        ctx.check(
            "L symmetry",
            l_symmetry,
            tol::L_SYMMETRY * l.norm().max(1.0),
        ),
        ctx.check(
            "A squared equals L",
            sqrt_residual,
            tol::SQUARE_ROOT_RESIDUAL * l.norm().max(1.0),
        ),
        ctx.check(
            "condition estimate below limit",
            frame.condition_estimate(),
            tol::FRAME_CONDITION_LIMIT,
        ),
        ctx.check(
            "weight sum equals domain length",
            (weight_total - Complex64::new(length, 0.0)).norm(),
            tol::FRAME_IDENTITIES * length.max(1.0),
        ),
    ];

    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
    write_json(&ctx.artifact("frame.json"), &frame.export())?;
    let rows: Vec<Vec<String>> = (0..beta)
        .flat_map(|a| {
            let frame = &frame;
            (0..beta).map(move |b| {
                vec![
                    a.to_string(),
                    b.to_string(),
                    fmt_f64(frame.points()[a]),
                    fmt_f64(frame.points()[b]),
                    fmt_f64(frame.kernel_matrix()[(a, b)].re),
                    fmt_f64(frame.kernel_matrix()[(a, b)].im),
                ]
            })
        })
        .collect();
    write_csv(
        &ctx.artifact("kernel.csv"),
        "a,b,point_a,point_b,delta_re,delta_im",
        &rows,
    )?;

    let values = frame
        .points()
        .iter()
        .zip(frame.weights().iter())
        .map(|(&p, w)| SampledValue {
            label: "weight".into(),
            x: p,
            re: w.re,
            im: w.im,
        })
        .collect();
    ctx.finish("frame", name, checks, values, None)
}

pub fn extend_cmd(
    ctx: &RunContext,
    space_name: &str,
    functional_name: &str,
) -> Result<Report, CliError> {
    let space = ctx.config.space(space_name)?;
    let functional = ctx.config.functional(functional_name)?;
    let extension = canonical_extend(&space, &functional)?;

    let identity = extension_identity_residual(&space, &functional, &extension)?;
    let mut checks = vec![ctx.check(
        "extension pairing identity",
        identity,
        tol::FRAME_IDENTITIES,
    )];

    // A point mass must land on the delta ultrafunction.
    if let Some(crate::config::FunctionalSpec::PointMass { at, scale }) =
        ctx.config.functionals.get(functional_name)
    {
        let scale = scale.map_or(Complex64::ONE, |[re, im]| Complex64::new(re, im));
        let delta = delta_at(&space, *at)?;
        let expected = ultrafunctions::lincomb(&[(scale, &delta)])?;
        checks.push(ctx.check(
            "point mass equals delta ultrafunction",
            (&extension - &expected).norm(),
            tol::MEMBER_FIXED_POINT,
        ));
    }

    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
    let coeffs: Vec<[f64; 2]> = extension
        .coefficients()
        .iter()
        .map(|c| [c.re, c.im])
        .collect();
    write_json(&ctx.artifact("extension.json"), &coeffs)?;
    let values = sampled_values("extension", &space, &extension)?;
    let rows: Vec<Vec<String>> = values
        .iter()
        .map(|v| vec![fmt_f64(v.x), fmt_f64(v.re), fmt_f64(v.im)])
        .collect();
    write_csv(&ctx.artifact("extension_samples.csv"), "x,re,im", &rows)?;
    ctx.finish(
        "extend",
        &format!("{space_name}/{functional_name}"),
        checks,
        values,
        None,
    )
}

pub fn operate_cmd(
    ctx: &RunContext,
    space_name: &str,
    operator_name: &str,
    input_name: Option<&str>,
) -> Result<Report, CliError> {
    let space = ctx.config.space(space_name)?;
    let raw = ctx.config.operator(operator_name)?;
    let op = extend_operator(&space, raw)?;

    let mut checks = Vec::new();
    if op.matrix().is_some() {
        let mut worst = 0.0_f64;
        for k in 0..space.dimension() {
            let e = space.basis_vector(k);
            let cached = op.apply(&e)?;
            let direct = op.apply_direct(&e)?;
            worst = worst.max((&cached - &direct).norm());
        }
        checks.push(ctx.check(
            "cached matrix agrees with direct extension",
            worst,
            tol::OPERATOR_MATRIX_AGREEMENT,
        ));
    }

    let mut values = Vec::new();
    if let Some(input_name) = input_name {
        let input_spec = ctx.config.input(input_name)?;
        if input_spec.space != space_name {
            return Err(CliError::Config(format!(
                "input '{input_name}' belongs to space '{}', not '{space_name}'",
                input_spec.space
            )));
        }
        let f = crate::config::builtin_function(&input_spec.function)?;
        let input = space.member_embed(|x| f(x))?;
        let result = op.apply(&input)?;
        let raw_functional = match ctx.config.operators.get(operator_name) {
            Some(crate::config::OperatorSpec::Identity) => Some(op_functional(&input, |_x, v| v)),
            Some(crate::config::OperatorSpec::MultiplicationByX) => {
                Some(op_functional(&input, |x, v| Complex64::new(x, 0.0) * v))
            }
            Some(crate::config::OperatorSpec::Square) => Some(op_functional(&input, |_x, v| v * v)),
            _ => None,
        };
        if let Some(t) = raw_functional {
            let residual = extension_identity_residual(&space, &t, &result)?;
            checks.push(ctx.check("operator pairing identity", residual, tol::FRAME_IDENTITIES));
        }
        values = sampled_values("result", &space, &result)?;
        std::fs::create_dir_all(&ctx.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
        let coeffs: Vec<[f64; 2]> = result.coefficients().iter().map(|c| [c.re, c.im]).collect();
        write_json(&ctx.artifact("result.json"), &coeffs)?;
    }
    ctx.finish(
        "operate",
        &format!("{space_name}/{operator_name}"),
        checks,
        values,
        None,
    )
}

fn op_functional(
    input: &Ultrafunction,
    map: impl Fn(f64, Complex64) -> Complex64 + Send + Sync + 'static,
) -> Functional {
    let input = input.clone();
    Functional::integral_against(
        "raw operator image",
        Arc::new(move |x| map(x, input.evaluate(x).expect("nodes lie in the domain"))),
        vec![],
    )
}

pub fn fourier_check_cmd(ctx: &RunContext, set_name: &str) -> Result<Report, CliError> {
    let set = ctx.config.generator_set(set_name)?;
    let closed = fourier_close(&set)?;
    let rule = ctx.config.rule()?;
    let space = build_space(closed, rule, ctx.config.rank_tolerance)?;
    let fspace = FourierSpace::build(&space)?;

    let mut checks = vec![
        ctx.check(
            "transform unitarity",
            fspace.unitarity_residual(),
            tol::FOURIER_UNITARITY,
        ),
        ctx.check(
            "transform fourth power",
            fspace.fourth_power_residual(),
            tol::FOURIER_UNITARITY,
        ),
    ];

    let points = select_independent_points_default(&space)?;
    let frame = build_frame(&space, &points)?;
    let frame_report = fourier_frame_checks(&fspace, &frame, ctx.seed)?;
    for record in frame_report.checks {
        checks.push(ctx.check(record.check, record.residual, record.tolerance));
    }
    ctx.finish("fourier-check", set_name, checks, Vec::new(), None)
}

pub fn refine_cmd(ctx: &RunContext, chain_name: &str) -> Result<Report, CliError> {
    let (chain, observable, atol) = ctx.config.chain(chain_name)?;
    let (stage_reports, verdict) = run_chain(&chain, &observable, atol)?;

    let monotone = stage_reports
        .windows(2)
        .all(|w| w[1].dimension >= w[0].dimension);
    let checks = vec![
        ctx.check(
            "stage inclusion verified",
            if chain.inclusion_verified() { 0.0 } else { 1.0 },
            0.5,
        ),
        ctx.check(
            "dimension monotone along chain",
            if monotone { 0.0 } else { 1.0 },
            0.5,
        ),
    ];

    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CliError::Config(format!("cannot create output dir: {e}")))?;
    let rows: Vec<Vec<String>> = stage_reports.iter().map(stage_row).collect();
    write_csv(
        &ctx.artifact("chain.csv"),
        "stage,beta,observable,value_re,value_im,delta",
        &rows,
    )?;

    let values = stage_reports
        .iter()
        .map(|r| SampledValue {
            label: format!("stage {} ({})", r.stage, r.observable),
            x: r.stage as f64,
            re: r.value_re,
            im: r.value_im,
        })
        .collect();
    ctx.finish("refine", chain_name, checks, values, Some(verdict))
}

fn stage_row(r: &StageReport) -> Vec<String> {
    vec![
        r.stage.to_string(),
        r.dimension.to_string(),
        r.observable.clone(),
        fmt_f64(r.value_re),
        fmt_f64(r.value_im),
        r.delta_from_previous.map_or_else(|| "".into(), fmt_f64),
    ]
}
