use serde::Serialize;

use super::{check_condition_m, check_strong, check_weak, ConditionMReport, MarginalGenerator, StrongCheck, Verdict, WeakCheck};
use crate::state_model::{Distribution, GeneratorFunction};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Immersion {
    Holds,
    Fails,
    Undetermined,
}

/// Under weak consistency, strong consistency is equivalent to immersion of
/// the factor's own filtration in the joint one. Without weak consistency the
/// equivalence says nothing.
pub fn immersion_verdict(strong: Verdict, weak: Verdict) -> Immersion {
    match (weak, strong) {
        (Verdict::WeakEvidence | Verdict::Strong, Verdict::Strong) => Immersion::Holds,
        (Verdict::WeakEvidence | Verdict::Strong, Verdict::Inconsistent) => Immersion::Fails,
        _ => Immersion::Undetermined,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMode {
    Strong,
    Weak,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorReport {
    pub factor: usize,
    pub verdict: Verdict,
    pub immersion: Immersion,
    pub strong: Option<StrongCheck>,
    pub weak: Option<WeakCheck>,
}

impl FactorReport {
    /// The marginal generator recovered by whichever check produced one.
    pub fn marginal(&self) -> Option<&MarginalGenerator> {
        self.weak
            .as_ref()
            .map(|w| &w.marginal)
            .or_else(|| self.strong.as_ref().and_then(|s| s.marginal.as_ref()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub mode: AuditMode,
    pub grid: Vec<f64>,
    pub depth: usize,
    pub condition_m: ConditionMReport,
    pub factors: Vec<FactorReport>,
}

impl ConsistencyReport {
    pub fn passes(&self) -> bool {
        self.factors.iter().all(|f| f.verdict.passes())
    }
}

/// Runs the requested checks on each listed factor.
///
/// Per-factor verdicts: in `Strong` mode, strong or inconsistent; in `Weak`
/// mode, weak evidence or inconsistent; in `Both` mode a weak refutation
/// dominates, otherwise strong if the strong check passes, else weak evidence.
pub fn audit(
    g: &GeneratorFunction,
    mu0: &Distribution,
    grid: &[f64],
    depth: usize,
    factors: &[usize],
    mode: AuditMode,
) -> Result<ConsistencyReport> {
    let condition_m = check_condition_m(g, grid)?;
    let mut reports = Vec::with_capacity(factors.len());
    for &i in factors {
        let strong = match mode {
            AuditMode::Strong | AuditMode::Both => Some(check_strong(g, mu0, grid, i)?),
            AuditMode::Weak => None,
        };
        let weak = match mode {
            AuditMode::Weak | AuditMode::Both => Some(check_weak(g, mu0, i, grid, depth)?),
            AuditMode::Strong => None,
        };
        let sv = strong.as_ref().map(|s| s.verdict);
        let wv = weak.as_ref().map(|w| w.verdict);
        let verdict = match (sv, wv) {
            (_, Some(Verdict::Inconsistent)) => Verdict::Inconsistent,
            (Some(Verdict::Strong), _) => Verdict::Strong,
            (Some(Verdict::Inconsistent), None) => Verdict::Inconsistent,
            (_, Some(Verdict::WeakEvidence)) => Verdict::WeakEvidence,
            _ => Verdict::Undetermined,
        };
        let immersion = match (sv, wv) {
            (Some(s), Some(w)) => immersion_verdict(s, w),
            _ => Immersion::Undetermined,
        };
        reports.push(FactorReport { factor: i, verdict, immersion, strong, weak });
    }
    Ok(ConsistencyReport { mode, grid: super::check_grid(grid)?, depth, condition_m, factors: reports })
}
