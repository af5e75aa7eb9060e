//! Strong and weak Markovian consistency of the components of a joint chain.
//!
//! Strong consistency (component Markov in the joint filtration) is decided
//! pointwise from rate sums on reachable states. Weak consistency (component
//! Markov in its own filtration) is only ever *refuted* by a finite
//! procedure: projected jump intensities are compared across path events of
//! the component, and a disagreement is a certificate of inconsistency. When
//! no disagreement is found the verdict is `WeakEvidence`, never a proof.

mod marginal;
mod report;
mod strong;
mod weak;

use serde::Serialize;

use crate::state_model::{FactoredStateSpace, RateMatrix};

pub use marginal::{check_operator_condition, extract_marginal, MarginalGenerator, OperatorCheck};
pub use report::{audit, immersion_verdict, AuditMode, ConsistencyReport, FactorReport, Immersion};
pub use strong::{check_condition_m, check_strong, ConditionMReport, StrongCheck};
pub use weak::{check_weak, projected_intensity, weak_events, WeakCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Strong,
    WeakEvidence,
    Inconsistent,
    Undetermined,
}

impl Verdict {
    /// Strong or weak evidence.
    pub fn passes(self) -> bool {
        matches!(self, Verdict::Strong | Verdict::WeakEvidence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    ConditionM,
    StrongRate,
    OperatorResidual,
    ProjectedIntensity,
}

/// What a certificate value was computed on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// A full joint state, as a coordinate tuple.
    State { state: Vec<usize> },
    /// A path event of the audited factor.
    Event { constraints: Vec<(f64, usize)> },
    /// The target marginal generator.
    Target,
}

/// A numeric witness: two quantities that a consistent chain would make equal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub factor: usize,
    pub time: f64,
    /// Coordinate of the audited factor before the jump.
    pub from: usize,
    /// Coordinate after the jump.
    pub to: usize,
    pub left: Witness,
    pub right: Witness,
    pub left_value: f64,
    pub right_value: f64,
    pub gap: f64,
}

impl Certificate {
    fn sort_key(&self) -> (u64, usize, usize, usize, CertificateKind) {
        // nonnegative times sort correctly by bit pattern
        (self.time.to_bits(), self.factor, self.from, self.to, self.kind)
    }
}

pub(crate) fn sort_certificates(certs: &mut [Certificate]) {
    certs.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Rate at which factor `i` jumps to `to` from flat state `x`, summed over the
/// destinations of all other coordinates.
pub(crate) fn coordinate_rate(m: &RateMatrix, space: &FactoredStateSpace, i: usize, x: usize, to: usize) -> f64 {
    debug_assert_ne!(space.coord(x, i), to);
    space.states_with(i, to).map(|y| m.get(x, y)).sum()
}

/// Relative comparison scale `1 + max(|a|, |b|)`.
pub(crate) fn scale(a: f64, b: f64) -> f64 {
    1.0 + a.abs().max(b.abs())
}

pub(crate) fn check_grid(grid: &[f64]) -> crate::Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(crate::Error::InvalidArgument("time grid must be nonempty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(crate::Error::InvalidTime(format!("grid time {t} must be finite and nonnegative")));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}
