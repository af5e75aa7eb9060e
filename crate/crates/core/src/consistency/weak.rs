use serde::Serialize;

use super::marginal::marginal_rates;
use super::{check_grid, coordinate_rate, scale, sort_certificates, Certificate, CertificateKind, MarginalGenerator, Verdict, Witness};
use crate::kolmogorov::{check_law, conditional_from_law, evolve, path_event_law_cached, PathEvent, PropagatorCache};
use crate::state_model::{Distribution, GeneratorFunction};
use crate::{Error, Result};

const WEAK_TOL: f64 = 1e-7;
const CROSS_CHECK_TOL: f64 = 1e-9;

/// Intensity of the factor's `from → to` jump averaged over a conditional law
/// of the whole chain.
fn projected_from_law(g: &GeneratorFunction, law: &Distribution, i: usize, from: usize, to: usize, t: f64) -> f64 {
    let m = g.at(t);
    let space = g.space();
    space
        .states_with(i, from)
        .map(|x| law.weights()[x] * coordinate_rate(&m, space, i, x, to))
        .sum()
}

/// Projection of factor `i`'s `from → to` jump intensity onto a path event of
/// factor `i` that ends in `from`.
pub fn projected_intensity(
    g: &GeneratorFunction,
    mu0: &Distribution,
    ev: &PathEvent,
    i: usize,
    from: usize,
    to: usize,
) -> Result<f64> {
    check_law(mu0, g)?;
    g.ensure_valid()?;
    g.space().check_factor(i)?;
    if ev.factor != i {
        return Err(Error::InvalidArgument(format!("event constrains factor {}, not {i}", ev.factor)));
    }
    let (t, last) = ev.last();
    if last != from {
        return Err(Error::InvalidArgument(format!("event ends in state {last}, not {from}")));
    }
    if from == to || to >= g.space().cardinality(i) {
        return Err(Error::InvalidArgument(format!("invalid jump {from} -> {to}")));
    }
    let law = path_event_law_cached(mu0, g, ev, &mut PropagatorCache::default())?;
    let cond = law.conditional.ok_or(Error::UndefinedEvent(law.probability))?;
    Ok(projected_from_law(g, &cond, i, from, to, t))
}

/// Path events ending in `(t, from)` on dyadic sub-grids of `t`: for each
/// depth `j ≤ depth`, times `t/2^{j-1} < ... < t/2 < t` with every pattern
/// of factor states before the final one. Shallow events come first.
pub fn weak_events(g: &GeneratorFunction, i: usize, t: f64, from: usize, depth: usize) -> Vec<PathEvent> {
    let k = g.space().cardinality(i);
    let max_depth = if t > 0.0 { depth } else { 1 };
    let mut out = Vec::new();
    for j in 1..=max_depth {
        let times: Vec<f64> = (0..j).rev().map(|p| t / 2f64.powi(p as i32)).collect();
        let patterns = k.pow((j - 1) as u32);
        for code in 0..patterns {
            // most significant digit is the earliest time
            let mut states = Vec::with_capacity(j);
            let mut rest = code;
            for p in (0..j - 1).rev() {
                let d = k.pow(p as u32);
                states.push(rest / d);
                rest %= d;
            }
            states.push(from);
            out.push(PathEvent { factor: i, constraints: times.iter().copied().zip(states).collect() });
        }
    }
    out
}

/// Result of the weak-consistency falsification test for one factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakCheck {
    pub factor: usize,
    /// `WeakEvidence` or `Inconsistent`.
    pub verdict: Verdict,
    pub certificates: Vec<Certificate>,
    /// The common projected intensities (the marginal-event values).
    pub marginal: MarginalGenerator,
    /// Largest spread of projected intensities across events.
    pub max_gap: f64,
    pub events_examined: usize,
    pub notes: Vec<String>,
}

/// Compares projected jump intensities of factor `i` across all
/// non-negligible path events of depth up to `depth` at every grid time.
///
/// A disagreement beyond `1e-7·(1 + magnitude)` refutes weak consistency.
/// Each certificate pairs the single-constraint event `{X_t^i = xⁱ}` with the
/// event deviating most from it (or the extreme pair when that comparison
/// alone would not exceed the tolerance).
pub fn check_weak(g: &GeneratorFunction, mu0: &Distribution, i: usize, grid: &[f64], depth: usize) -> Result<WeakCheck> {
    let times = check_grid(grid)?;
    check_law(mu0, g)?;
    g.ensure_valid()?;
    g.space().check_factor(i)?;
    if !(1..=3).contains(&depth) {
        return Err(Error::InvalidArgument(format!("event depth must be 1, 2 or 3 (got {depth})")));
    }
    let k = g.space().cardinality(i);
    let mut cache = PropagatorCache::default();
    let mut certificates = Vec::new();
    let mut notes = Vec::new();
    let mut max_gap = 0.0f64;
    let mut events_examined = 0;
    let mut rates = Vec::with_capacity(times.len());
    let mut defined = Vec::with_capacity(times.len());

    for &t in &times {
        let mut mat = vec![vec![0.0; k]; k];
        let mut def = vec![false; k];
        for from in 0..k {
            let mut laws = Vec::new();
            for ev in weak_events(g, i, t, from, depth) {
                let law = path_event_law_cached(mu0, g, &ev, &mut cache)?;
                if let Some(c) = law.conditional {
                    laws.push((ev, c));
                }
            }
            events_examined += laws.len();
            // the marginal event has the largest probability of all; if it is
            // negligible so is every refinement
            if laws.first().map_or(true, |(ev, _)| ev.depth() != 1) {
                notes.push(format!("t={t}: factor {i} state {from} unreachable; no events to compare"));
                continue;
            }
            def[from] = true;
            for to in (0..k).filter(|&y| y != from) {
                let values: Vec<f64> = laws.iter().map(|(_, c)| projected_from_law(g, c, i, from, to, t)).collect();
                let base = values[0];
                mat[from][to] = base;
                let (lo, hi) = values.iter().enumerate().fold((0, 0), |(lo, hi), (e, v)| {
                    (if *v < values[lo] { e } else { lo }, if *v > values[hi] { e } else { hi })
                });
                let spread = values[hi] - values[lo];
                max_gap = max_gap.max(spread);
                if spread <= WEAK_TOL * scale(values[lo], values[hi]) {
                    continue;
                }
                let far = if (values[hi] - base).abs() >= (base - values[lo]).abs() { hi } else { lo };
                let (a, b) = if (values[far] - base).abs() > WEAK_TOL * scale(base, values[far]) {
                    (0, far)
                } else {
                    (lo, hi)
                };
                certificates.push(Certificate {
                    kind: CertificateKind::ProjectedIntensity,
                    factor: i,
                    time: t,
                    from,
                    to,
                    left: Witness::Event { constraints: laws[a].0.constraints.clone() },
                    right: Witness::Event { constraints: laws[b].0.constraints.clone() },
                    left_value: values[a],
                    right_value: values[b],
                    gap: (values[a] - values[b]).abs(),
                });
            }
            mat[from][from] = -(0..k).filter(|&y| y != from).map(|y| mat[from][y]).sum::<f64>();
        }

        let law = evolve(mu0, g, t)?;
        let q = conditional_from_law(&law, g, i, t);
        let direct = marginal_rates(g, &q, t);
        for x in (0..k).filter(|&x| def[x] && q.defined[x]) {
            let d = (0..k).map(|y| (direct[x][y] - mat[x][y]).abs()).fold(0.0, f64::max);
            if d > CROSS_CHECK_TOL {
                notes.push(format!("t={t}: state {x} event rates differ from the direct marginal by {d:e}"));
            }
        }
        rates.push(mat);
        defined.push(def);
    }
    sort_certificates(&mut certificates);
    let verdict = if certificates.is_empty() { Verdict::WeakEvidence } else { Verdict::Inconsistent };
    Ok(WeakCheck {
        factor: i,
        verdict,
        certificates,
        marginal: MarginalGenerator { factor: i, times, rates, defined, closed_form: None },
        max_gap,
        events_examined,
        notes,
    })
}
