use serde::Serialize;

use super::{check_grid, coordinate_rate, scale, sort_certificates, Certificate, CertificateKind, MarginalGenerator, Verdict, Witness};
use crate::kolmogorov::{check_law, evolve, EPS_REACH};
use crate::state_model::{Distribution, GeneratorFunction, RateMatrix};
use crate::Result;

const M_TOL: f64 = 1e-10;
const STRONG_TOL: f64 = 1e-9;

/// Outcome of the rate-sum invariance test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionMReport {
    /// Per factor: does the rate-sum invariance hold at every probe time?
    pub holds: Vec<bool>,
    /// Worst context pair per `(time, factor, from, to)` that disagrees.
    pub violations: Vec<Certificate>,
}

/// For each `from ≠ to` of factor `i`, the extreme contexts of the coordinate
/// rate among `states` (flat states with coordinate `from`).
fn extreme_pair(
    m: &RateMatrix,
    g: &GeneratorFunction,
    i: usize,
    to: usize,
    states: impl Iterator<Item = usize>,
) -> Option<((usize, f64), (usize, f64))> {
    let mut lo: Option<(usize, f64)> = None;
    let mut hi: Option<(usize, f64)> = None;
    for x in states {
        let s = coordinate_rate(m, g.space(), i, x, to);
        if lo.map_or(true, |(_, v)| s < v) {
            lo = Some((x, s));
        }
        if hi.map_or(true, |(_, v)| s > v) {
            hi = Some((x, s));
        }
    }
    Some((lo?, hi?))
}

fn certificate(
    g: &GeneratorFunction,
    kind: CertificateKind,
    i: usize,
    t: f64,
    from: usize,
    to: usize,
    (xa, va): (usize, f64),
    (xb, vb): (usize, f64),
) -> Certificate {
    // the lexicographically smaller state goes on the left
    let ((xl, vl), (xr, vr)) = if xa <= xb { ((xa, va), (xb, vb)) } else { ((xb, vb), (xa, va)) };
    Certificate {
        kind,
        factor: i,
        time: t,
        from,
        to,
        left: Witness::State { state: g.space().to_tuple(xl) },
        right: Witness::State { state: g.space().to_tuple(xr) },
        left_value: vl,
        right_value: vr,
        gap: (vl - vr).abs(),
    }
}

/// For every factor and `xⁱ ≠ yⁱ`, checks that the rate of the factor's
/// `xⁱ → yⁱ` jump does not depend on the other coordinates.
pub fn check_condition_m(g: &GeneratorFunction, probe_times: &[f64]) -> Result<ConditionMReport> {
    let times = check_grid(probe_times)?;
    g.ensure_valid()?;
    let space = g.space();
    let mut holds = vec![true; space.factor_count()];
    let mut violations = Vec::new();
    for &t in &times {
        let m = g.at(t);
        for i in 0..space.factor_count() {
            let k = space.cardinality(i);
            for from in 0..k {
                for to in (0..k).filter(|&y| y != from) {
                    let (lo, hi) = extreme_pair(&m, g, i, to, space.states_with(i, from)).expect("factor has states");
                    if hi.1 - lo.1 > M_TOL * scale(lo.1, hi.1).max(1.0) {
                        holds[i] = false;
                        violations.push(certificate(g, CertificateKind::ConditionM, i, t, from, to, lo, hi));
                    }
                }
            }
        }
    }
    sort_certificates(&mut violations);
    Ok(ConditionMReport { holds, violations })
}

/// Result of the strong-consistency test for one factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongCheck {
    pub factor: usize,
    pub verdict: Verdict,
    /// The common rates, present when the verdict is strong.
    pub marginal: Option<MarginalGenerator>,
    /// The maximal-gap witness on reachable states, present on failure.
    pub certificate: Option<Certificate>,
    pub max_gap: f64,
    pub notes: Vec<String>,
}

/// Tests whether factor `i` is Markov in the joint filtration: at each probe
/// time the factor's jump rates must agree across every reachable context.
pub fn check_strong(g: &GeneratorFunction, mu0: &Distribution, probe_times: &[f64], i: usize) -> Result<StrongCheck> {
    let times = check_grid(probe_times)?;
    check_law(mu0, g)?;
    g.ensure_valid()?;
    let space = g.space();
    space.check_factor(i)?;
    let k = space.cardinality(i);
    let mut worst: Option<Certificate> = None;
    let mut max_gap = 0.0f64;
    let mut failed = false;
    let mut notes = Vec::new();
    let mut rates = Vec::with_capacity(times.len());
    let mut defined = Vec::with_capacity(times.len());

    for &t in &times {
        let law = evolve(mu0, g, t)?;
        let m = g.at(t);
        let mut mat = vec![vec![0.0; k]; k];
        let mut def = vec![true; k];
        for from in 0..k {
            let reachable: Vec<usize> = space.states_with(i, from).filter(|&x| law.weights()[x] > EPS_REACH).collect();
            for to in (0..k).filter(|&y| y != from) {
                let all = extreme_pair(&m, g, i, to, space.states_with(i, from)).expect("factor has states");
                let all_gap = all.1 .1 - all.0 .1;
                let all_agree = all_gap <= STRONG_TOL * scale(all.0 .1, all.1 .1);
                match extreme_pair(&m, g, i, to, reachable.iter().copied()) {
                    Some((lo, hi)) => {
                        let gap = hi.1 - lo.1;
                        max_gap = max_gap.max(gap);
                        if gap > STRONG_TOL * scale(lo.1, hi.1) {
                            failed = true;
                            if worst.as_ref().map_or(true, |w| gap > w.gap) {
                                worst = Some(certificate(g, CertificateKind::StrongRate, i, t, from, to, lo, hi));
                            }
                        } else if !all_agree {
                            notes.push(format!(
                                "t={t}: factor {i} jump {from}->{to} differs only on unreachable states (gap {all_gap:e})"
                            ));
                        }
                        mat[from][to] = coordinate_rate(&m, space, i, reachable[0], to);
                    }
                    None if all_agree => {
                        mat[from][to] = all.0 .1;
                    }
                    None => {
                        def[from] = false;
                    }
                }
            }
            if reachable.is_empty() {
                notes.push(format!("t={t}: factor {i} state {from} unreachable; comparisons skipped"));
            }
            if def[from] {
                mat[from][from] = -(0..k).filter(|&y| y != from).map(|y| mat[from][y]).sum::<f64>();
            } else {
                mat[from] = vec![0.0; k];
            }
        }
        rates.push(mat);
        defined.push(def);
    }
    notes.dedup();

    let marginal = (!failed).then(|| MarginalGenerator {
        factor: i,
        times: times.clone(),
        rates,
        defined,
        closed_form: None,
    });
    Ok(StrongCheck {
        factor: i,
        verdict: if failed { Verdict::Inconsistent } else { Verdict::Strong },
        marginal,
        certificate: worst,
        max_gap,
        notes,
    })
}
