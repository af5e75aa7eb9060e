//! Transition matrices, distribution evolution, path-event laws and the
//! conditional operator `Q_t^i`.

mod expm;
mod ode;

use std::collections::HashMap;

use nalgebra::{DMatrix, RowDVector};
use serde::Serialize;

pub use expm::expm;
pub use ode::solve_forward;

use crate::state_model::{Distribution, GeneratorFunction};
use crate::{Error, Result};

/// Probability floor below which states and events count as unreachable.
pub const EPS_REACH: f64 = 1e-12;

/// `P(s, t)` with `P[v][w] = ℙ(X_t = w | X_s = v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub s: f64,
    pub t: f64,
    pub matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn get(&self, v: usize, w: usize) -> f64 {
        self.matrix[(v, w)]
    }

    pub fn row(&self, v: usize) -> Vec<f64> {
        self.matrix.row(v).iter().copied().collect()
    }
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::InvalidTime(format!("times must be finite and nonnegative (s={s}, t={t})")));
    }
    if t < s {
        return Err(Error::InvalidTime(format!("end time {t} precedes start time {s}")));
    }
    Ok(())
}

/// Unclamped solution of the forward equation on `[s, t]`.
///
/// Piecewise-constant generators use an ordered product of per-segment
/// matrix exponentials; other generators use [`solve_forward`].
pub fn propagator(g: &GeneratorFunction, s: f64, t: f64) -> DMatrix<f64> {
    let n = g.dim();
    if t <= s {
        return DMatrix::identity(n, n);
    }
    if g.is_piecewise_constant() {
        g.segments(s, t)
            .into_iter()
            .fold(DMatrix::identity(n, n), |acc, (a, b, m)| acc * expm(&(m.matrix() * (b - a))))
    } else {
        solve_forward(g, s, t)
    }
}

pub fn transition_matrix(g: &GeneratorFunction, s: f64, t: f64) -> Result<TransitionMatrix> {
    check_times(s, t)?;
    g.ensure_valid()?;
    let matrix = propagator(g, s, t).map(|v| v.clamp(0.0, 1.0));
    Ok(TransitionMatrix { s, t, matrix })
}

/// `mu0 · P(0, t)`.
pub fn evolve(mu0: &Distribution, g: &GeneratorFunction, t: f64) -> Result<Distribution> {
    check_times(0.0, t)?;
    check_law(mu0, g)?;
    let p = transition_matrix(g, 0.0, t)?;
    let row = RowDVector::from_row_slice(mu0.weights()) * &p.matrix;
    Distribution::from_mass(row.iter().map(|v| v.max(0.0)).collect())
        .ok_or_else(|| Error::InvalidDistribution("evolved law lost all mass".into()))
}

pub(crate) fn check_law(mu0: &Distribution, g: &GeneratorFunction) -> Result<()> {
    if mu0.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: mu0.len() });
    }
    Ok(())
}

/// Time-stamped constraints `{X^i_{t_1} = x_1, ..., X^i_{t_k} = x_k}` on one factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEvent {
    pub factor: usize,
    pub constraints: Vec<(f64, usize)>,
}

impl PathEvent {
    pub fn new(factor: usize, constraints: Vec<(f64, usize)>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::InvalidArgument("a path event needs at least one constraint".into()));
        }
        if constraints.iter().any(|(t, _)| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidTime("constraint times must be finite and nonnegative".into()));
        }
        if constraints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidTime("constraint times must be strictly increasing".into()));
        }
        Ok(PathEvent { factor, constraints })
    }

    pub fn last(&self) -> (f64, usize) {
        *self.constraints.last().expect("nonempty by construction")
    }

    pub fn depth(&self) -> usize {
        self.constraints.len()
    }
}

/// Probability of a path event and the law of `X` at its last time given it.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEventLaw {
    pub probability: f64,
    /// `None` when the probability is at or below [`EPS_REACH`].
    pub conditional: Option<Distribution>,
}

/// Memo of propagators keyed by exact interval endpoints.
#[derive(Default)]
pub(crate) struct PropagatorCache {
    map: HashMap<(u64, u64), DMatrix<f64>>,
}

impl PropagatorCache {
    pub(crate) fn get(&mut self, g: &GeneratorFunction, s: f64, t: f64) -> &DMatrix<f64> {
        self.map
            .entry((s.to_bits(), t.to_bits()))
            .or_insert_with(|| propagator(g, s, t))
    }
}

pub fn path_event_law(mu0: &Distribution, g: &GeneratorFunction, ev: &PathEvent) -> Result<PathEventLaw> {
    check_law(mu0, g)?;
    g.ensure_valid()?;
    g.space().check_factor(ev.factor)?;
    path_event_law_cached(mu0, g, ev, &mut PropagatorCache::default())
}

pub(crate) fn path_event_law_cached(
    mu0: &Distribution,
    g: &GeneratorFunction,
    ev: &PathEvent,
    cache: &mut PropagatorCache,
) -> Result<PathEventLaw> {
    let space = g.space();
    let k = space.cardinality(ev.factor);
    if let Some((_, x)) = ev.constraints.iter().find(|(_, x)| *x >= k) {
        return Err(Error::StateOutOfRange { state: *x, size: k });
    }
    let mut mass = RowDVector::from_row_slice(mu0.weights());
    let mut now = 0.0;
    for &(t, x) in &ev.constraints {
        if t > now {
            mass = mass * cache.get(g, now, t);
            now = t;
        }
        for (state, m) in mass.iter_mut().enumerate() {
            if space.coord(state, ev.factor) != x {
                *m = 0.0;
            } else {
                *m = m.max(0.0);
            }
        }
    }
    let probability = mass.sum().clamp(0.0, 1.0);
    let conditional = if probability > EPS_REACH {
        Distribution::from_mass(mass.iter().copied().collect())
    } else {
        None
    };
    Ok(PathEventLaw { probability, conditional })
}

/// Matrix form of `(Q_t^i f)(xⁱ) = E[f(X_t) | X_t^i = xⁱ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOperator {
    pub factor: usize,
    pub t: f64,
    /// `|Xⁱ| × flat_size`.
    pub matrix: DMatrix<f64>,
    /// Rows whose conditioning event has probability above [`EPS_REACH`].
    pub defined: Vec<bool>,
}

/// Bayes restriction of a law at time `t` to each `{X_t^i = xⁱ}`.
pub(crate) fn conditional_from_law(law: &Distribution, g: &GeneratorFunction, i: usize, t: f64) -> ConditionalOperator {
    let space = g.space();
    let k = space.cardinality(i);
    let marginal = law.marginal(space, i);
    let mut matrix = DMatrix::zeros(k, space.size());
    let defined: Vec<bool> = marginal.iter().map(|&p| p > EPS_REACH).collect();
    for (x, &w) in law.weights().iter().enumerate() {
        let xi = space.coord(x, i);
        if defined[xi] {
            matrix[(xi, x)] = w / marginal[xi];
        }
    }
    ConditionalOperator { factor: i, t, matrix, defined }
}

pub fn conditional_operator(mu0: &Distribution, g: &GeneratorFunction, i: usize, t: f64) -> Result<ConditionalOperator> {
    g.space().check_factor(i)?;
    let law = evolve(mu0, g, t)?;
    Ok(conditional_from_law(&law, g, i, t))
}
