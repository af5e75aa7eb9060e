//! Joint generators with prescribed marginal laws.
//!
//! A strong copula is any nonnegative solution of the marginal rate-sum
//! system: for every factor `i`, every jump `xⁱ → yⁱ` and every context of the
//! other coordinates, the joint rates into `{yⁱ} × (anything)` must add up to
//! the marginal rate. The system is underdetermined; [`Objective`] picks the
//! solution.

mod lp;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::consistency::{check_strong, check_weak, MarginalGenerator, Verdict};
use crate::state_model::generator::kron_sum;
use crate::state_model::{tensor_sum, validate_generator, Distribution, Family, FactoredStateSpace, GeneratorFunction, RateMatrix};
use crate::{Error, Result};

use lp::{maximize_lexicographic, LpOutcome};

/// Which strong-copula solution to pick.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Tensor-sum coupling: no simultaneous jumps.
    Independent,
    /// Maximize the total rate of jumps that move two or more coordinates.
    MaximizeCommonJumps,
    MinimizeCommonJumps,
    /// Maximize a weighted sum of simultaneous-jump rates, keyed by
    /// `(from, to)` flat states.
    MaximizeWeighted(BTreeMap<(usize, usize), f64>),
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Independent => "independent",
            Objective::MaximizeCommonJumps => "maximize_common_jumps",
            Objective::MinimizeCommonJumps => "minimize_common_jumps",
            Objective::MaximizeWeighted(_) => "maximize_weighted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaProblem {
    /// One generator per factor, in factor order.
    pub marginals: Vec<GeneratorFunction>,
    pub objective: Objective,
    /// Solve times for time-dependent marginals.
    pub probe_times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    /// The program could not be optimized; the tensor-sum coupling is returned.
    FeasibleFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaSolution {
    pub generator: GeneratorFunction,
    /// Times at which the program was solved (segment starts for piecewise output).
    pub times: Vec<f64>,
    pub objective_values: Vec<f64>,
    /// Largest absolute violation of the marginal rate-sum system.
    pub residual: f64,
    pub status: SolverStatus,
}

fn product_space(marginals: &[GeneratorFunction]) -> Result<FactoredStateSpace> {
    let mut it = marginals.iter();
    let first = it.next().ok_or_else(|| Error::InvalidArgument("no marginals given".into()))?;
    it.try_fold(first.space().clone(), |acc, g| acc.product(g.space()))
}

fn check_marginals(marginals: &[GeneratorFunction]) -> Result<()> {
    if marginals.len() < 2 {
        return Err(Error::InvalidArgument("a copula needs at least two marginals".into()));
    }
    for g in marginals {
        if g.space().factor_count() != 1 {
            return Err(Error::InvalidArgument("each marginal must live on a single factor".into()));
        }
        g.ensure_valid()?;
    }
    Ok(())
}

/// Off-diagonal `(x, y)` pairs in lexicographic order; the LP variables.
fn variables(space: &FactoredStateSpace) -> Vec<(usize, usize)> {
    let n = space.size();
    (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).collect()
}

/// Rows of the marginal rate-sum system at time `t`.
fn constraint_system(space: &FactoredStateSpace, marginals: &[RateMatrix], vars: &[(usize, usize)]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, m) in marginals.iter().enumerate() {
        let k = space.cardinality(i);
        for x in 0..space.size() {
            let from = space.coord(x, i);
            for to in (0..k).filter(|&y| y != from) {
                let row = vars
                    .iter()
                    .map(|&(v, w)| if v == x && space.coord(w, i) == to { 1.0 } else { 0.0 })
                    .collect();
                a.push(row);
                b.push(m.get(from, to));
            }
        }
    }
    (a, b)
}

fn objective_vector(space: &FactoredStateSpace, objective: &Objective, vars: &[(usize, usize)]) -> Result<Vec<f64>> {
    let common = |x: usize, y: usize| space.hamming(x, y) >= 2;
    Ok(match objective {
        Objective::Independent | Objective::MaximizeCommonJumps => {
            vars.iter().map(|&(x, y)| if common(x, y) { 1.0 } else { 0.0 }).collect()
        }
        Objective::MinimizeCommonJumps => vars.iter().map(|&(x, y)| if common(x, y) { -1.0 } else { 0.0 }).collect(),
        Objective::MaximizeWeighted(w) => {
            for (&(x, y), &v) in w {
                if x >= space.size() || y >= space.size() || !common(x, y) {
                    return Err(Error::InvalidArgument(format!("weight on ({x},{y}) is not a simultaneous jump")));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("weight on ({x},{y}) must be nonnegative, got {v}")));
                }
            }
            vars.iter().map(|k| w.get(k).copied().unwrap_or(0.0)).collect()
        }
    })
}

/// Value of the problem's objective functional at a generator.
fn objective_value(space: &FactoredStateSpace, objective: &Objective, m: &RateMatrix) -> f64 {
    let n = space.size();
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x == y || space.hamming(x, y) < 2 {
                continue;
            }
            total += match objective {
                Objective::MaximizeWeighted(w) => w.get(&(x, y)).copied().unwrap_or(0.0) * m.get(x, y),
                _ => m.get(x, y),
            };
        }
    }
    total
}

fn solve_at(space: &FactoredStateSpace, marginals: &[RateMatrix], objective: &Objective) -> Result<(RateMatrix, SolverStatus)> {
    let independent = || {
        marginals[1..]
            .iter()
            .fold(marginals[0].clone(), |acc, m| kron_sum(acc.matrix(), m.matrix()))
    };
    if *objective == Objective::Independent {
        return Ok((independent(), SolverStatus::Optimal));
    }
    let vars = variables(space);
    let (a, b) = constraint_system(space, marginals, &vars);
    let c = objective_vector(space, objective, &vars)?;
    match maximize_lexicographic(&a, &b, &c) {
        LpOutcome::Optimal { x, .. } => {
            let mut m = DMatrix::zeros(space.size(), space.size());
            for (&(v, w), val) in vars.iter().zip(x) {
                m[(v, w)] = val;
            }
            Ok((RateMatrix::from_off_diagonal(m)?, SolverStatus::Optimal))
        }
        LpOutcome::Infeasible => Err(Error::Solver(
            "marginal constraint system reported infeasible although the tensor sum solves it".into(),
        )),
        LpOutcome::Unbounded => Ok((independent(), SolverStatus::FeasibleFallback)),
    }
}

/// Solves the strong-copula system for the problem's objective.
///
/// Time-homogeneous marginals give a constant generator. Otherwise the
/// system is solved at 0, at each probe time and at each marginal
/// breakpoint, and the result is assembled as a right-continuous piecewise
/// generator. The independent objective returns the exact tensor sum.
pub fn build_strong_copula(p: &CopulaProblem) -> Result<CopulaSolution> {
    check_marginals(&p.marginals)?;
    let space = product_space(&p.marginals)?;
    if p.objective == Objective::Independent {
        let generator = p.marginals[1..]
            .iter()
            .try_fold(p.marginals[0].clone(), |acc, g| tensor_sum(&acc, g))?;
        let times = solve_times(p)?;
        let residual = rate_sum_residual(&generator, &p.marginals, &times)?.0;
        return Ok(CopulaSolution {
            generator,
            objective_values: vec![0.0; times.len()],
            times,
            residual,
            status: SolverStatus::Optimal,
        });
    }
    let times = solve_times(p)?;
    let mut matrices = Vec::with_capacity(times.len());
    let mut values = Vec::with_capacity(times.len());
    let mut status = SolverStatus::Optimal;
    for &t in &times {
        let ms: Vec<RateMatrix> = p.marginals.iter().map(|g| g.at(t)).collect();
        let (m, s) = solve_at(&space, &ms, &p.objective)?;
        if s != SolverStatus::Optimal {
            status = s;
        }
        values.push(objective_value(&space, &p.objective, &m));
        matrices.push(m);
    }
    let generator = if times.len() == 1 {
        GeneratorFunction::constant(space, matrices.pop().expect("one matrix"))?
    } else {
        GeneratorFunction::piecewise(space, times.clone(), matrices)?
    };
    let residual = rate_sum_residual(&generator, &p.marginals, &times)?.0;
    Ok(CopulaSolution { generator, times, objective_values: values, residual, status })
}

fn solve_times(p: &CopulaProblem) -> Result<Vec<f64>> {
    if p.marginals.iter().all(GeneratorFunction::is_time_homogeneous) {
        return Ok(vec![0.0]);
    }
    if let Some(t) = p.probe_times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidTime(format!("probe time {t} must be finite and nonnegative")));
    }
    let mut times = vec![0.0];
    times.extend(p.probe_times.iter().copied());
    let horizon = p.probe_times.iter().copied().fold(0.0, f64::max);
    for g in &p.marginals {
        times.extend(g.breakpoints().into_iter().filter(|&b| b <= horizon));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

/// Largest absolute residual of the rate-sum system over `times`, with the
/// location of the worst one.
fn rate_sum_residual(candidate: &GeneratorFunction, marginals: &[GeneratorFunction], times: &[f64]) -> Result<(f64, Option<RateSumWitness>)> {
    let space = candidate.space();
    if space.factor_count() != marginals.len() {
        return Err(Error::DimensionMismatch { expected: space.factor_count(), found: marginals.len() });
    }
    for (i, g) in marginals.iter().enumerate() {
        if g.dim() != space.cardinality(i) {
            return Err(Error::DimensionMismatch { expected: space.cardinality(i), found: g.dim() });
        }
    }
    let mut worst = 0.0f64;
    let mut witness = None;
    for &t in times {
        let joint = candidate.at(t);
        for (i, g) in marginals.iter().enumerate() {
            let m = g.at(t);
            for x in 0..space.size() {
                let from = space.coord(x, i);
                for to in (0..space.cardinality(i)).filter(|&y| y != from) {
                    let lhs: f64 = space.states_with(i, to).map(|y| joint.get(x, y)).sum();
                    let d = (lhs - m.get(from, to)).abs();
                    if d > worst || witness.is_none() {
                        worst = worst.max(d);
                        witness = Some(RateSumWitness {
                            time: t,
                            factor: i,
                            state: space.to_tuple(x),
                            to,
                            joint_sum: lhs,
                            marginal_rate: m.get(from, to),
                        });
                    }
                }
            }
        }
    }
    Ok((worst, witness))
}

/// Location of the largest rate-sum residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSumWitness {
    pub time: f64,
    pub factor: usize,
    /// Joint state the jump starts from.
    pub state: Vec<usize>,
    /// Target coordinate of the factor.
    pub to: usize,
    pub joint_sum: f64,
    pub marginal_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongCopulaVerification {
    pub max_residual: f64,
    pub worst: Option<RateSumWitness>,
    pub validation_violations: usize,
    pub pass: bool,
}

pub const COPULA_TOL: f64 = 1e-9;

/// Checks a candidate joint generator against the marginal rate-sum system
/// and the generator constraints at every probe time.
pub fn verify_strong_copula(
    candidate: &GeneratorFunction,
    marginals: &[GeneratorFunction],
    probe_times: &[f64],
) -> Result<StrongCopulaVerification> {
    let validation = validate_generator(candidate, probe_times)?;
    let (max_residual, worst) = rate_sum_residual(candidate, marginals, &validation.probe_times)?;
    let validation_violations = validation.violations.len();
    Ok(StrongCopulaVerification {
        max_residual,
        worst,
        validation_violations,
        pass: validation_violations == 0 && max_residual <= COPULA_TOL,
    })
}

/// A registered weak-copula construction: joint generator and the marginal
/// laws it is meant to reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakCandidate {
    pub joint: GeneratorFunction,
    pub targets: Vec<GeneratorFunction>,
}

pub fn build_weak_copula_candidate(family_name: &str, params: &BTreeMap<String, f64>) -> Result<WeakCandidate> {
    match family_name {
        "example_3_2" => {
            let joint = Family::from_name("example_3_2_joint", params)?;
            let targets = ["example_3_2_marginal_1", "example_3_2_marginal_2"]
                .iter()
                .map(|n| Family::from_name(n, params).map(GeneratorFunction::family))
                .collect::<Result<Vec<_>>>()?;
            Ok(WeakCandidate { joint: GeneratorFunction::family(joint), targets })
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakClassification {
    NotWeak,
    WeakOnly,
    AlsoStrong,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakFactorResult {
    pub factor: usize,
    pub weak: Verdict,
    pub strong: Verdict,
    /// Max entrywise gap between the recovered marginal and the target.
    pub marginal_mismatch: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakCopulaVerification {
    pub valid_generator: bool,
    pub factors: Vec<WeakFactorResult>,
    pub pass: bool,
    pub classification: WeakClassification,
}

pub const WEAK_MARGINAL_TOL: f64 = 1e-6;

/// Validity of the joint generator, weak evidence for every factor, and
/// recovered marginals within 1e-6 of the targets on the grid.
pub fn verify_weak_copula(
    candidate: &GeneratorFunction,
    targets: &[GeneratorFunction],
    mu0: &Distribution,
    grid: &[f64],
    depth: usize,
) -> Result<WeakCopulaVerification> {
    let space = candidate.space();
    if targets.len() != space.factor_count() {
        return Err(Error::DimensionMismatch { expected: space.factor_count(), found: targets.len() });
    }
    let valid_generator = validate_generator(candidate, grid)?.is_ok();
    let mut factors = Vec::with_capacity(targets.len());
    for (i, target) in targets.iter().enumerate() {
        if target.dim() != space.cardinality(i) {
            return Err(Error::DimensionMismatch { expected: space.cardinality(i), found: target.dim() });
        }
        let weak = check_weak(candidate, mu0, i, grid, depth)?;
        let strong = check_strong(candidate, mu0, grid, i)?;
        let want = MarginalGenerator::from_generator(i, target, grid)?;
        factors.push(WeakFactorResult {
            factor: i,
            weak: weak.verdict,
            strong: strong.verdict,
            marginal_mismatch: weak.marginal.max_difference(&want),
        });
    }
    let pass = valid_generator
        && factors.iter().all(|f| {
            f.weak == Verdict::WeakEvidence && f.marginal_mismatch.is_some_and(|d| d <= WEAK_MARGINAL_TOL)
        });
    let classification = if !pass {
        WeakClassification::NotWeak
    } else if factors.iter().all(|f| f.strong == Verdict::Strong) {
        WeakClassification::AlsoStrong
    } else {
        WeakClassification::WeakOnly
    };
    Ok(WeakCopulaVerification { valid_generator, factors, pass, classification })
}
