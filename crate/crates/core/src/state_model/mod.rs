//! State spaces, generators and the structural operators on them.

mod distribution;
mod family;
pub(crate) mod generator;
mod rates;
mod space;

use nalgebra::DMatrix;
use serde::Serialize;

pub use distribution::Distribution;
pub use family::{Family, FAMILY_NAMES};
pub use generator::{GeneratorFunction, GeneratorKind};
pub use rates::{RateMatrix, Violation};
pub use space::{Factor, FactoredStateSpace};

use crate::{Error, Result};

/// Outcome of [`validate_generator`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub probe_times: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks nonnegative off-diagonals and vanishing row sums at every probe time
/// and at every breakpoint inside the probed range.
pub fn validate_generator(g: &GeneratorFunction, probe_times: &[f64]) -> Result<ValidationReport> {
    if probe_times.is_empty() {
        return Err(Error::InvalidArgument("probe_times must be nonempty".into()));
    }
    if let Some(t) = probe_times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidTime(format!("probe time {t} must be finite and nonnegative")));
    }
    let mut times: Vec<f64> = probe_times.to_vec();
    if let GeneratorKind::PiecewiseConstant { breakpoints, .. } = g.kind() {
        // every segment is probed, not just the ones the caller happened to hit
        times.extend(breakpoints.iter().copied());
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let violations = times.iter().flat_map(|&t| g.at(t).violations(t)).collect();
    Ok(ValidationReport { probe_times: times, violations })
}

/// Independent coupling `Λ(t) = Λ¹(t) ⊗ I² + I¹ ⊗ Λ²(t)` on the product space.
///
/// Single-coordinate jumps carry the corresponding marginal rate,
/// simultaneous jumps carry 0.
pub fn tensor_sum(g1: &GeneratorFunction, g2: &GeneratorFunction) -> Result<GeneratorFunction> {
    g1.ensure_valid()?;
    g2.ensure_valid()?;
    let space = g1.space().product(g2.space())?;
    let m2 = g2.dim();
    match (g1.kind(), g2.kind()) {
        (GeneratorKind::Constant(a), GeneratorKind::Constant(b)) => {
            GeneratorFunction::constant(space, generator::kron_sum(a.matrix(), b.matrix()))
        }
        _ if g1.is_piecewise_constant() && g2.is_piecewise_constant() && !(g1.is_time_homogeneous() && g2.is_time_homogeneous()) => {
            let mut cuts = g1.breakpoints();
            cuts.extend(g2.breakpoints());
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let matrices = cuts
                .iter()
                .map(|&t| generator::kron_sum(g1.at(t).matrix(), g2.at(t).matrix()))
                .collect();
            GeneratorFunction::piecewise(space, cuts, matrices)
        }
        _ if g1.is_time_homogeneous() && g2.is_time_homogeneous() => {
            GeneratorFunction::constant(space, generator::kron_sum(g1.at(0.0).matrix(), g2.at(0.0).matrix()))
        }
        _ => {
            debug_assert_eq!(space.size(), g1.dim() * m2);
            GeneratorFunction::new(space, GeneratorKind::TensorSum(Box::new(g1.clone()), Box::new(g2.clone())))
        }
    }
}

/// One-hot `flat_size × |Xⁱ|` matrix of the extension operator
/// `(C^{i,*} f)(x) = f(xⁱ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionMatrix {
    pub factor: usize,
    pub matrix: DMatrix<f64>,
}

impl ExtensionMatrix {
    /// Lifts a function on factor `i` to the product space.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.matrix.nrows())
            .map(|x| {
                let col = (0..self.matrix.ncols()).find(|&c| self.matrix[(x, c)] == 1.0).expect("one-hot row");
                f[col]
            })
            .collect()
    }
}

pub fn extension_matrix(space: &FactoredStateSpace, i: usize) -> Result<ExtensionMatrix> {
    space.check_factor(i)?;
    let matrix = DMatrix::from_fn(space.size(), space.cardinality(i), |x, c| {
        if space.coord(x, i) == c {
            1.0
        } else {
            0.0
        }
    });
    Ok(ExtensionMatrix { factor: i, matrix })
}

/// `λ_w^v(t)`, the rate of jumping from flat state `v` to `w ≠ v`.
pub fn jump_intensity(g: &GeneratorFunction, v: usize, w: usize, t: f64) -> Result<f64> {
    g.space().check_state(v)?;
    g.space().check_state(w)?;
    if v == w {
        return Err(Error::InvalidArgument("jump intensity needs distinct states".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidTime(format!("time {t} must be nonnegative")));
    }
    Ok(g.at(t).get(v, w))
}
