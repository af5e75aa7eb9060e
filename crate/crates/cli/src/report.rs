//! Command bodies. Each builds one report value, prints a short summary from
//! it and optionally writes it as JSON.

use std::path::{Path, PathBuf};
use std::time::Instant;

use markov_copula::{
    audit, build_strong_copula, empirical_transition, evolve, martingale_residual_test, validate_generator,
    verify_strong_copula, AuditMode, ConsistencyReport, CopulaProblem, Distribution, EmpiricalLaw, GeneratorFunction,
    LawComparison, Objective, ResidualReport, StrongCopulaVerification, ValidationReport, Verdict,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::model::{Model, ModelFile};

pub struct Context {
    argv: Vec<String>,
    timing: bool,
    out: Option<PathBuf>,
    started: Instant,
}

impl Context {
    pub fn new(argv: Vec<String>, timing: bool, out: Option<PathBuf>) -> Self {
        Context { argv, timing, out, started: Instant::now() }
    }
}

#[derive(Serialize)]
struct Input {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a [String],
    inputs: Vec<Input>,
    pass: bool,
    result: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<f64>,
}

struct Loaded {
    model: Model,
    input: Input,
}

fn read(path: &Path) -> Result<(String, Input), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let input = Input { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) };
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Io { path: path.display().to_string(), message: "not valid UTF-8".into() })?;
    Ok((text, input))
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let (text, input) = read(path)?;
    let model = ModelFile::parse(&text)
        .and_then(|f| f.to_model())
        .map_err(|e| CliError::Model(format!("{}: {e}", path.display())))?;
    Ok(Loaded { model, input })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn emit<T: Serialize>(ctx: &Context, inputs: Vec<Input>, pass: bool, result: T) -> Result<bool, CliError> {
    if let Some(out) = &ctx.out {
        let env = Envelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &ctx.argv,
            inputs,
            pass,
            result,
            elapsed_ms: ctx.timing.then(|| ctx.started.elapsed().as_secs_f64() * 1e3),
        };
        let mut text = serde_json::to_string_pretty(&env).expect("report serializes");
        text.push('\n');
        write(out, &text)?;
    }
    if ctx.timing {
        println!("elapsed: {:.1} ms", ctx.started.elapsed().as_secs_f64() * 1e3);
    }
    Ok(pass)
}

/// 16 log-spaced times from 0.01 to 4, divided by the largest exit rate.
pub fn default_grid(g: &GeneratorFunction) -> Vec<f64> {
    let rate = g.max_exit_rate(4.0);
    let scale = if rate > 0.0 { 1.0 / rate } else { 1.0 };
    let ratio: f64 = 4.0 / 0.01;
    (0..16).map(|k| 0.01 * ratio.powf(k as f64 / 15.0) * scale).collect()
}

fn grid_or_default(grid: Option<Vec<f64>>, g: &GeneratorFunction) -> Result<Vec<f64>, CliError> {
    match grid {
        Some(grid) if grid.is_empty() => Err(CliError::Usage("--grid is empty".into())),
        Some(grid) => Ok(grid),
        None => Ok(default_grid(g)),
    }
}

#[derive(Serialize)]
struct ValidateResult {
    report: ValidationReport,
}

pub fn validate(ctx: &Context, path: &Path, grid: Option<Vec<f64>>) -> Result<bool, CliError> {
    let loaded = load(path)?;
    let g = &loaded.model.generator;
    let grid = grid_or_default(grid, g)?;
    let report = validate_generator(g, &grid)?;
    let pass = report.is_ok();
    if pass {
        println!("valid generator ({} probe times)", report.probe_times.len());
    } else {
        println!("{} violation(s)", report.violations.len());
        for v in report.violations.iter().take(10) {
            match v.column {
                Some(c) => println!("  t={} row {} column {}: off-diagonal {}", v.time, v.row, c, v.value),
                None => println!("  t={} row {}: row sum {}", v.time, v.row, v.value),
            }
        }
    }
    emit(ctx, vec![loaded.input], pass, ValidateResult { report })
}

fn factor_list(spec: &str, count: usize) -> Result<Vec<usize>, CliError> {
    if spec == "all" {
        return Ok((0..count).collect());
    }
    let i: usize = spec.parse().map_err(|_| CliError::Usage(format!("--factor must be 1..{count} or `all`, got `{spec}`")))?;
    if i == 0 || i > count {
        return Err(CliError::Usage(format!("--factor must be 1..{count} or `all`, got `{spec}`")));
    }
    Ok(vec![i - 1])
}

fn describe_verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Strong => "strong",
        Verdict::WeakEvidence => "weak evidence",
        Verdict::Inconsistent => "inconsistent",
        Verdict::Undetermined => "undetermined",
    }
}

pub fn check(ctx: &Context, path: &Path, mode: AuditMode, grid: Option<Vec<f64>>, depth: usize, factor: &str) -> Result<bool, CliError> {
    let loaded = load(path)?;
    let model = &loaded.model;
    let g = &model.generator;
    let grid = grid_or_default(grid, g)?;
    let factors = factor_list(factor, model.space().factor_count())?;
    let report: ConsistencyReport = audit(g, &model.initial, &grid, depth, &factors, mode)?;
    for f in &report.factors {
        let name = &model.space().factors()[f.factor].name;
        println!("factor {} ({name}): {}, immersion {:?}", f.factor + 1, describe_verdict(f.verdict), f.immersion);
        let certs = f
            .strong
            .iter()
            .filter_map(|s| s.certificate.as_ref())
            .chain(f.weak.iter().flat_map(|w| w.certificates.first()));
        for c in certs {
            println!(
                "  {:?} certificate at t={}, {}→{}: {} vs {} (gap {:.3e})",
                c.kind, c.time, c.from, c.to, c.left_value, c.right_value, c.gap
            );
        }
    }
    let pass = report.passes();
    emit(ctx, vec![loaded.input], pass, report)
}

#[derive(Serialize)]
struct BuildResult {
    objective: &'static str,
    status: markov_copula::SolverStatus,
    times: Vec<f64>,
    objective_values: Vec<f64>,
    residual: f64,
    verification: StrongCopulaVerification,
    model: ModelFile,
}

pub fn build(
    ctx: &Context,
    paths: &[&Path],
    objective: Objective,
    grid: Option<Vec<f64>>,
    model_out: Option<&Path>,
) -> Result<bool, CliError> {
    let loaded = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let marginals: Vec<GeneratorFunction> = loaded.iter().map(|l| l.model.generator.clone()).collect();
    for (l, p) in loaded.iter().zip(paths) {
        if l.model.space().factor_count() != 1 {
            return Err(CliError::Model(format!("{}: a marginal model must have exactly one factor", p.display())));
        }
        l.model.generator.ensure_valid().map_err(|e| CliError::Model(format!("{}: {e}", p.display())))?;
    }
    let probe = match grid {
        Some(g) => g,
        None => {
            let rate: f64 = marginals.iter().map(|g| g.max_exit_rate(4.0)).sum();
            let scale = if rate > 0.0 { 1.0 / rate } else { 1.0 };
            let ratio: f64 = 400.0;
            (0..16).map(|k| 0.01 * ratio.powf(k as f64 / 15.0) * scale).collect()
        }
    };
    let name = objective.name();
    let solution = build_strong_copula(&CopulaProblem { marginals: marginals.clone(), objective, probe_times: probe.clone() })?;
    let mut check_times = solution.times.clone();
    check_times.extend(probe.iter().copied());
    let verification = verify_strong_copula(&solution.generator, &marginals, &check_times)?;
    let initial = loaded[1..]
        .iter()
        .fold(loaded[0].model.initial.clone(), |acc: Distribution, l| acc.product(&l.model.initial));
    let file = ModelFile::from_model(&Model { generator: solution.generator.clone(), initial });
    if let Some(p) = model_out {
        write(p, &file.to_json())?;
    }
    println!(
        "{name}: {:?}, objective {:?}, rate-sum residual {:.3e}",
        solution.status, solution.objective_values, verification.max_residual
    );
    let pass = verification.pass;
    let result = BuildResult {
        objective: name,
        status: solution.status,
        times: solution.times,
        objective_values: solution.objective_values,
        residual: solution.residual,
        verification,
        model: file,
    };
    emit(ctx, loaded.into_iter().map(|l| l.input).collect(), pass, result)
}

#[derive(Serialize)]
struct EmpiricalResult {
    law: EmpiricalLaw,
    expected: Vec<f64>,
    comparison: LawComparison,
}

#[derive(Serialize)]
struct SimulateResult {
    horizon: f64,
    paths: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    residuals: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical: Option<EmpiricalResult>,
}

pub fn simulate(ctx: &Context, path: &Path, t: f64, paths: usize, seed: u64, stats: bool, empirical: bool) -> Result<bool, CliError> {
    if paths == 0 {
        return Err(CliError::Usage("--paths must be positive".into()));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(CliError::Usage(format!("--t must be positive and finite, got {t}")));
    }
    let loaded = load(path)?;
    let Model { generator: g, initial } = &loaded.model;
    let residuals = if stats { Some(martingale_residual_test(g, initial, t, paths, seed)?) } else { None };
    let empirical = if empirical {
        let law = empirical_transition(g, initial, t, paths, seed)?;
        let expected = evolve(initial, g, t)?.weights().to_vec();
        let comparison = law.compare(&expected)?;
        Some(EmpiricalResult { law, expected, comparison })
    } else {
        None
    };
    if let Some(r) = &residuals {
        println!("compensator residuals: max |z| = {:.3} over {} pairs ({})", r.max_abs_z, r.pairs.len(), if r.pass { "pass" } else { "fail" });
    }
    if let Some(e) = &empirical {
        let worst = e
            .comparison
            .entries
            .iter()
            .map(|c| if c.sigma > 0.0 { (c.observed - c.expected).abs() / c.sigma } else { 0.0 })
            .fold(0.0, f64::max);
        println!("empirical law at t={t}: max deviation {worst:.3}σ ({})", if e.comparison.pass { "pass" } else { "fail" });
    }
    let pass = residuals.as_ref().map_or(true, |r| r.pass) && empirical.as_ref().map_or(true, |e| e.comparison.pass);
    let result = SimulateResult { horizon: t, paths, seed, residuals, empirical };
    emit(ctx, vec![loaded.input], pass, result)
}
