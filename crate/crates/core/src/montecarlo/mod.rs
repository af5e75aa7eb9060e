//! Seeded path simulation, jump-counting processes and their compensators.
//!
//! For a Markov chain with generator `Λ(t)` the counting process `N_{vw}` of
//! jumps `v → w` has compensator `ν_{vw}(t) = ∫₀ᵗ 𝟙{X_s = v} λ_{vw}(s) ds`, so
//! `N_{vw} − ν_{vw}` has mean zero. [`martingale_residual_test`] checks that
//! numerically.

mod rng;

use rayon::prelude::*;
use serde::Serialize;

use crate::kolmogorov::check_law;
use crate::state_model::{Distribution, FactoredStateSpace, GeneratorFunction, RateMatrix};
use crate::{Error, Result};

use rng::PathRng;

/// A right-continuous trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationPath {
    /// Strictly increasing, all in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    /// `states[0]` is the initial state; `states[k+1]` is entered at `jump_times[k]`.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl SimulationPath {
    pub fn jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&s| s <= t)]
    }

    /// Sojourns `(start, end, state)` intersected with `[a, b]`.
    pub fn sojourns(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let starts = std::iter::once(0.0).chain(self.jump_times.iter().copied());
        let ends = self.jump_times.iter().copied().chain(std::iter::once(self.horizon));
        starts
            .zip(ends)
            .zip(&self.states)
            .map(move |((s, e), &v)| (s.max(a), e.min(b), v))
            .filter(|(s, e, _)| e > s)
    }
}

/// Precomputed sampling data for one generator on `[0, horizon]`.
enum Plan {
    /// Constant segments `(start, end, matrix)` covering the horizon.
    Exact(Vec<(f64, f64, RateMatrix)>),
    /// Per-state exit-rate envelope for thinning.
    Thinning(Vec<f64>),
}

impl Plan {
    fn new(g: &GeneratorFunction, horizon: f64) -> Result<Plan> {
        if g.is_piecewise_constant() {
            return Ok(Plan::Exact(g.segments(0.0, horizon)));
        }
        let env: Vec<f64> = (0..g.dim()).map(|v| g.exit_rate_envelope(v, horizon)).collect();
        if env.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidGenerator("exit-rate envelope is not finite".into()));
        }
        Ok(Plan::Thinning(env))
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidTime(format!("horizon must be positive and finite, got {horizon}")));
    }
    Ok(())
}

fn jump_target(rng: &mut PathRng, m: &RateMatrix, v: usize, total: f64) -> usize {
    let row = (0..m.dim()).filter(|&w| w != v).map(|w| (w, m.get(v, w)));
    rng.categorical(row, total).expect("positive exit rate has a positive entry")
}

fn simulate_one(g: &GeneratorFunction, plan: &Plan, mu0: &Distribution, horizon: f64, seed: u64, index: u64) -> Result<SimulationPath> {
    let mut rng = PathRng::new(seed, index);
    let mut v = rng
        .categorical(mu0.weights().iter().copied().enumerate(), 1.0)
        .expect("distribution has positive mass");
    let mut jump_times = Vec::new();
    let mut states = vec![v];
    let mut t = 0.0;
    match plan {
        Plan::Exact(segments) => {
            for (_, end, m) in segments {
                loop {
                    let rate = m.exit_rate(v);
                    if rate <= 0.0 {
                        break;
                    }
                    let next = t + rng.exponential(rate);
                    if next > *end {
                        break;
                    }
                    if next <= t {
                        continue;
                    }
                    t = next;
                    v = jump_target(&mut rng, m, v, rate);
                    jump_times.push(t);
                    states.push(v);
                }
                t = *end;
            }
        }
        Plan::Thinning(env) => loop {
            let bound = env[v];
            if bound <= 0.0 {
                break;
            }
            let next = t + rng.exponential(bound);
            if next > horizon {
                break;
            }
            t = next;
            let m = g.at(t);
            let rate = m.exit_rate(v);
            if rate > bound * (1.0 + 1e-9) {
                return Err(Error::InvalidGenerator(format!(
                    "exit rate {rate} of state {v} at t={t} exceeds its envelope {bound}"
                )));
            }
            if rng.uniform() * bound < rate && jump_times.last().map_or(true, |&s| t > s) {
                v = jump_target(&mut rng, &m, v, rate);
                jump_times.push(t);
                states.push(v);
            }
        },
    }
    Ok(SimulationPath { jump_times, states, horizon })
}

/// Samples one path on `[0, horizon]`.
///
/// Piecewise-constant generators are sampled exactly, redrawing the holding
/// time at each segment boundary. Other generators are thinned against the
/// per-state exit-rate envelope. The path is a function of `seed` alone; it
/// equals path 0 of the batch operations.
pub fn simulate(g: &GeneratorFunction, mu0: &Distribution, horizon: f64, seed: u64) -> Result<SimulationPath> {
    check_horizon(horizon)?;
    check_law(mu0, g)?;
    g.ensure_valid()?;
    simulate_one(g, &Plan::new(g, horizon)?, mu0, horizon, seed, 0)
}

/// Jump counts `N_{vw}` and compensators `ν_{vw}` of one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingStats {
    pub from: f64,
    pub to: f64,
    pub counts: Vec<Vec<u64>>,
    pub compensators: Vec<Vec<f64>>,
}

impl CountingStats {
    pub fn total_jumps(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn aggregate<T: Copy + Default + std::ops::AddAssign>(m: &[Vec<T>], space: &FactoredStateSpace, i: usize) -> Vec<Vec<T>> {
        let k = space.cardinality(i);
        let mut out = vec![vec![T::default(); k]; k];
        for (v, row) in m.iter().enumerate() {
            for (w, &x) in row.iter().enumerate() {
                let (a, b) = (space.coord(v, i), space.coord(w, i));
                if a != b {
                    out[a][b] += x;
                }
            }
        }
        out
    }

    /// Jumps of coordinate `i` from `a` to `b ≠ a`, summed over the other
    /// coordinates before and after.
    pub fn component_counts(&self, space: &FactoredStateSpace, i: usize) -> Vec<Vec<u64>> {
        Self::aggregate(&self.counts, space, i)
    }

    pub fn component_compensators(&self, space: &FactoredStateSpace, i: usize) -> Vec<Vec<f64>> {
        Self::aggregate(&self.compensators, space, i)
    }
}

// five-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];
/// Panel width for compensator quadrature of smooth time-dependent rates.
const QUAD_STEP: f64 = 0.01;

/// Adds `∫_a^b λ_{v·}(s) ds` to `row`.
fn integrate_row(g: &GeneratorFunction, v: usize, a: f64, b: f64, row: &mut [f64]) {
    let panels = ((b - a) / QUAD_STEP).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let m = g.at(mid + 0.5 * h * x);
            for (w, r) in row.iter_mut().enumerate() {
                if w != v {
                    *r += 0.5 * h * wt * m.get(v, w);
                }
            }
        }
    }
}

fn stats_with(path: &SimulationPath, g: &GeneratorFunction, segments: Option<&[(f64, f64, RateMatrix)]>, a: f64, b: f64) -> CountingStats {
    let n = g.dim();
    let mut counts = vec![vec![0u64; n]; n];
    for (k, &t) in path.jump_times.iter().enumerate() {
        if t > a && t <= b {
            counts[path.states[k]][path.states[k + 1]] += 1;
        }
    }
    let mut compensators = vec![vec![0.0; n]; n];
    for (s, e, v) in path.sojourns(a, b) {
        match segments {
            Some(segs) => {
                for (lo, hi, m) in segs {
                    let len = e.min(*hi) - s.max(*lo);
                    if len > 0.0 {
                        for w in (0..n).filter(|&w| w != v) {
                            compensators[v][w] += len * m.get(v, w);
                        }
                    }
                }
            }
            None => integrate_row(g, v, s, e, &mut compensators[v]),
        }
    }
    CountingStats { from: a, to: b, counts, compensators }
}

/// Counts and compensators over `(a, b]`. Compensators are exact for
/// piecewise-constant generators and use composite Gauss-Legendre
/// quadrature otherwise.
pub fn counting_stats_between(path: &SimulationPath, g: &GeneratorFunction, a: f64, b: f64) -> Result<CountingStats> {
    if path.states.iter().any(|&v| v >= g.dim()) {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: path.states.iter().max().map_or(0, |v| v + 1) });
    }
    if !(0.0 <= a && a <= b && b <= path.horizon) {
        return Err(Error::InvalidTime(format!("interval ({a}, {b}] is not inside [0, {}]", path.horizon)));
    }
    let segments = g.is_piecewise_constant().then(|| g.segments(0.0, path.horizon));
    Ok(stats_with(path, g, segments.as_deref(), a, b))
}

/// Counts and compensators over the whole horizon.
pub fn counting_stats(path: &SimulationPath, g: &GeneratorFunction) -> Result<CountingStats> {
    counting_stats_between(path, g, 0.0, path.horizon)
}

/// Running mean and sum of squared deviations, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Paths per work unit. Fixed so that reductions do not depend on the
/// number of worker threads.
const CHUNK: usize = 1024;

/// Maps every path of a batch and folds the per-path results in path order.
fn fold_paths<A, F, M>(n_paths: usize, init: A, per_path: F, merge: M) -> Result<A>
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, u64) -> Result<()> + Sync,
    M: Fn(A, A) -> A,
{
    let chunks: Vec<Result<A>> = (0..n_paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = init.clone();
            for p in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                per_path(&mut acc, p as u64)?;
            }
            Ok(acc)
        })
        .collect();
    let mut out = init;
    for c in chunks {
        out = merge(out, c?);
    }
    Ok(out)
}

/// Residual statistics for one ordered pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub from: usize,
    pub to: usize,
    /// Sample mean of `N_{vw}(T) − ν_{vw}(T)`.
    pub mean: f64,
    pub std_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub pairs: Vec<PairResidual>,
    pub max_abs_z: f64,
    pub pass: bool,
}

pub const Z_GATE: f64 = 4.0;
pub const MIN_RESIDUAL_PATHS: usize = 1000;

/// Simulates under `g_sim` and compares counts with compensators computed
/// under `g_comp`. With `g_comp = g_sim` the residuals have mean zero.
pub fn compensator_residual_test(
    g_sim: &GeneratorFunction,
    g_comp: &GeneratorFunction,
    mu0: &Distribution,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ResidualReport> {
    check_horizon(horizon)?;
    check_law(mu0, g_sim)?;
    g_sim.ensure_valid()?;
    g_comp.ensure_valid()?;
    if g_comp.space() != g_sim.space() {
        return Err(Error::InvalidArgument("compensator generator lives on a different state space".into()));
    }
    if n_paths < MIN_RESIDUAL_PATHS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_RESIDUAL_PATHS} paths, got {n_paths}")));
    }
    let n = g_sim.dim();
    let plan = Plan::new(g_sim, horizon)?;
    let segments = g_comp.is_piecewise_constant().then(|| g_comp.segments(0.0, horizon));
    let moments = fold_paths(
        n_paths,
        vec![Moments::default(); n * n],
        |acc, p| {
            let path = simulate_one(g_sim, &plan, mu0, horizon, seed, p)?;
            let s = stats_with(&path, g_comp, segments.as_deref(), 0.0, horizon);
            for v in 0..n {
                for w in 0..n {
                    acc[v * n + w].push(s.counts[v][w] as f64 - s.compensators[v][w]);
                }
            }
            Ok(())
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    )?;
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for v in 0..n {
        for w in (0..n).filter(|&w| w != v) {
            let m = moments[v * n + w];
            let se = m.std_error();
            let z = if se > 0.0 {
                m.mean / se
            } else if m.mean == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(m.mean)
            };
            pairs.push(PairResidual { from: v, to: w, mean: m.mean, std_error: se, z });
        }
    }
    let max_abs_z = pairs.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    Ok(ResidualReport { horizon, n_paths, seed, pairs, max_abs_z, pass: max_abs_z <= Z_GATE })
}

/// Mean residual `N_{vw}(T) − ν_{vw}(T)` for every ordered pair, with
/// `z = mean / standard error`; passes iff every `|z| ≤ 4`.
pub fn martingale_residual_test(g: &GeneratorFunction, mu0: &Distribution, horizon: f64, n_paths: usize, seed: u64) -> Result<ResidualReport> {
    compensator_residual_test(g, g, mu0, horizon, n_paths, seed)
}

/// State frequencies at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub t: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Binomial standard errors `√(p̂(1−p̂)/n)`.
    pub std_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryComparison {
    pub state: usize,
    pub expected: f64,
    pub observed: f64,
    /// Standard error used for the band: the larger of the binomial errors
    /// under the expected and the observed frequency.
    pub sigma: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawComparison {
    pub entries: Vec<EntryComparison>,
    pub pass: bool,
}

impl EmpiricalLaw {
    /// Per-entry comparison against `expected` with 4σ bands. Entries whose
    /// band has zero width must match exactly.
    pub fn compare(&self, expected: &[f64]) -> Result<LawComparison> {
        if expected.len() != self.frequencies.len() {
            return Err(Error::DimensionMismatch { expected: self.frequencies.len(), found: expected.len() });
        }
        let n = self.n_paths as f64;
        let entries: Vec<EntryComparison> = expected
            .iter()
            .zip(&self.frequencies)
            .enumerate()
            .map(|(state, (&p, &q))| {
                let sigma = (p * (1.0 - p) / n).max(0.0).sqrt().max(self.std_errors[state]);
                let within = (q - p).abs() <= Z_GATE * sigma || (q - p).abs() <= 1e-12;
                EntryComparison { state, expected: p, observed: q, sigma, within }
            })
            .collect();
        let pass = entries.iter().all(|e| e.within);
        Ok(LawComparison { entries, pass })
    }
}

/// Empirical law of `X_t` from `n_paths` paths started from `mu0`.
pub fn empirical_transition(g: &GeneratorFunction, mu0: &Distribution, t: f64, n_paths: usize, seed: u64) -> Result<EmpiricalLaw> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidTime(format!("time must be finite and nonnegative, got {t}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    check_law(mu0, g)?;
    g.ensure_valid()?;
    let n = g.dim();
    // at t = 0 only the initial draw matters; any positive horizon works
    let horizon = if t > 0.0 { t } else { 1.0 };
    let plan = Plan::new(g, horizon)?;
    let counts = fold_paths(
        n_paths,
        vec![0u64; n],
        |acc, p| {
            let path = if t > 0.0 {
                simulate_one(g, &plan, mu0, horizon, seed, p)?
            } else {
                simulate_one(g, &Plan::Exact(Vec::new()), mu0, horizon, seed, p)?
            };
            acc[path.state_at(t)] += 1;
            Ok(())
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x + y).collect(),
    )?;
    let total = n_paths as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let std_errors = frequencies.iter().map(|&p| (p * (1.0 - p) / total).sqrt()).collect();
    Ok(EmpiricalLaw { t, n_paths, seed, counts, frequencies, std_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_model::Family;

    fn ex31() -> GeneratorFunction {
        GeneratorFunction::family(Family::Example31 { a: 0.5, b: 0.3, c: 0.2 })
    }

    fn at(state: usize) -> Distribution {
        Distribution::point_mass(4, state).unwrap()
    }

    #[test]
    fn absorbing_state_never_jumps() {
        for seed in 0..20 {
            let p = simulate(&ex31(), &at(3), 5.0, seed).unwrap();
            assert_eq!(p.jumps(), 0);
            let s = counting_stats(&p, &ex31()).unwrap();
            assert_eq!(s.total_jumps(), 0);
            assert!(s.compensators.iter().flatten().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn same_seed_same_path() {
        let a = simulate(&ex31(), &at(0), 3.0, 99).unwrap();
        let b = simulate(&ex31(), &at(0), 3.0, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hand_built_common_jump_path() {
        // (0,0) → (1,1) at τ: one count, compensator c·τ on that pair
        let tau = 0.6;
        let p = SimulationPath { jump_times: vec![tau], states: vec![0, 3], horizon: 2.0 };
        let s = counting_stats(&p, &ex31()).unwrap();
        assert_eq!(s.counts[0][3], 1);
        assert_eq!(s.total_jumps(), 1);
        assert!((s.compensators[0][3] - 0.2 * tau).abs() < 1e-15);
        assert!((s.compensators[0][1] - 0.3 * tau).abs() < 1e-15);
        let space = ex31().space().clone();
        assert_eq!(s.component_counts(&space, 0)[0][1], 1);
        assert_eq!(s.component_counts(&space, 1)[0][1], 1);
    }

    #[test]
    fn family_compensator_matches_closed_form() {
        // Λ¹ rate a + c − c·w(t); integrate against a dense trapezoid rule
        let g = GeneratorFunction::family(Family::Example32Marginal { factor: 0, a: 0.5, b: 0.3, c: 0.2 });
        let p = SimulationPath { jump_times: vec![1.7], states: vec![0, 1], horizon: 2.0 };
        let s = counting_stats(&p, &g).unwrap();
        let n = 200_000;
        let h = 1.7 / n as f64;
        let trap: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * g.at(k as f64 * h).get(0, 1)
            })
            .sum::<f64>()
            * h;
        assert!((s.compensators[0][1] - trap).abs() < 1e-9);
    }

    #[test]
    fn residual_test_needs_enough_paths() {
        assert!(martingale_residual_test(&ex31(), &at(0), 1.0, 999, 1).is_err());
    }

    #[test]
    fn empirical_at_zero_is_initial_law() {
        let e = empirical_transition(&ex31(), &at(2), 0.0, 500, 3).unwrap();
        assert_eq!(e.counts, vec![0, 0, 500, 0]);
        assert!(e.compare(&[0.0, 0.0, 1.0, 0.0]).unwrap().pass);
    }
}
