use nalgebra::DMatrix;

use super::{Family, FactoredStateSpace, RateMatrix};
use crate::{Error, Result};

/// How the rates depend on time.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    Constant(RateMatrix),
    /// Right-continuous: `matrices[k]` applies on `[breakpoints[k], breakpoints[k+1])`,
    /// the last one on `[breakpoints[last], ∞)`.
    PiecewiseConstant { breakpoints: Vec<f64>, matrices: Vec<RateMatrix> },
    Family(Family),
    /// Independent coupling `Λ¹ ⊗ I + I ⊗ Λ²` of two generators.
    TensorSum(Box<GeneratorFunction>, Box<GeneratorFunction>),
}

/// A time-dependent generator `Λ(t)` on a factored state space.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFunction {
    space: FactoredStateSpace,
    kind: GeneratorKind,
}

impl GeneratorFunction {
    pub fn new(space: FactoredStateSpace, kind: GeneratorKind) -> Result<Self> {
        let n = space.size();
        let check = |m: &RateMatrix| {
            if m.dim() == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: n, found: m.dim() })
            }
        };
        match &kind {
            GeneratorKind::Constant(m) => check(m)?,
            GeneratorKind::PiecewiseConstant { breakpoints, matrices } => {
                if breakpoints.is_empty() || breakpoints.len() != matrices.len() {
                    return Err(Error::InvalidGenerator(format!(
                        "piecewise generator needs one matrix per breakpoint ({} breakpoints, {} matrices)",
                        breakpoints.len(),
                        matrices.len()
                    )));
                }
                if breakpoints[0] != 0.0 {
                    return Err(Error::InvalidGenerator("first breakpoint must be 0".into()));
                }
                if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|b| !b.is_finite()) {
                    return Err(Error::InvalidGenerator("breakpoints must be finite and strictly increasing".into()));
                }
                matrices.iter().try_for_each(check)?;
            }
            GeneratorKind::Family(f) => {
                let fs = f.space();
                if fs.size() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: fs.size() });
                }
            }
            GeneratorKind::TensorSum(g1, g2) => {
                let m = g1.space.size() * g2.space.size();
                if m != n {
                    return Err(Error::DimensionMismatch { expected: n, found: m });
                }
            }
        }
        Ok(GeneratorFunction { space, kind })
    }

    pub fn constant(space: FactoredStateSpace, m: RateMatrix) -> Result<Self> {
        GeneratorFunction::new(space, GeneratorKind::Constant(m))
    }

    pub fn from_rows(space: FactoredStateSpace, rows: &[Vec<f64>]) -> Result<Self> {
        GeneratorFunction::constant(space, RateMatrix::from_rows(rows)?)
    }

    pub fn piecewise(space: FactoredStateSpace, breakpoints: Vec<f64>, matrices: Vec<RateMatrix>) -> Result<Self> {
        GeneratorFunction::new(space, GeneratorKind::PiecewiseConstant { breakpoints, matrices })
    }

    /// A registered family on its own canonical space.
    pub fn family(f: Family) -> Self {
        GeneratorFunction { space: f.space(), kind: GeneratorKind::Family(f) }
    }

    pub fn space(&self) -> &FactoredStateSpace {
        &self.space
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.space.size()
    }

    pub fn is_time_homogeneous(&self) -> bool {
        match &self.kind {
            GeneratorKind::Constant(_) => true,
            GeneratorKind::PiecewiseConstant { matrices, .. } => matrices.len() == 1,
            GeneratorKind::Family(f) => f.is_time_homogeneous(),
            GeneratorKind::TensorSum(a, b) => a.is_time_homogeneous() && b.is_time_homogeneous(),
        }
    }

    /// True when `Λ` is piecewise constant in time with known breakpoints, so
    /// that transition matrices are exact products of exponentials.
    pub fn is_piecewise_constant(&self) -> bool {
        match &self.kind {
            GeneratorKind::Constant(_) | GeneratorKind::PiecewiseConstant { .. } => true,
            GeneratorKind::Family(f) => f.is_time_homogeneous(),
            GeneratorKind::TensorSum(a, b) => a.is_piecewise_constant() && b.is_piecewise_constant(),
        }
    }

    /// Ordered constant segments covering `[s, t]`; only meaningful when
    /// [`is_piecewise_constant`](Self::is_piecewise_constant) holds.
    pub fn segments(&self, s: f64, t: f64) -> Vec<(f64, f64, RateMatrix)> {
        let mut cuts = vec![s];
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b > s && b < t));
        cuts.push(t);
        cuts.windows(2).map(|w| (w[0], w[1], self.at(w[0]))).collect()
    }

    /// Times at which the rates may jump; always includes 0.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            GeneratorKind::PiecewiseConstant { breakpoints, .. } => breakpoints.clone(),
            GeneratorKind::TensorSum(a, b) => {
                let mut all = a.breakpoints();
                all.extend(b.breakpoints());
                all.sort_by(f64::total_cmp);
                all.dedup();
                all
            }
            _ => vec![0.0],
        }
    }

    /// `Λ(t)`.
    pub fn at(&self, t: f64) -> RateMatrix {
        match &self.kind {
            GeneratorKind::Constant(m) => m.clone(),
            GeneratorKind::PiecewiseConstant { breakpoints, matrices } => {
                let k = breakpoints.partition_point(|&b| b <= t).saturating_sub(1);
                matrices[k].clone()
            }
            GeneratorKind::Family(f) => f.rate_matrix(t),
            GeneratorKind::TensorSum(a, b) => kron_sum(a.at(t).matrix(), b.at(t).matrix()),
        }
    }

    /// Upper bound on the total exit rate of `state` over `[0, horizon]`.
    ///
    /// Exact for piecewise-constant kinds; for time-inhomogeneous families a
    /// grid scan at step 1e-3 with a 1.01 safety factor, capped by the
    /// family's analytic bound.
    pub fn exit_rate_envelope(&self, state: usize, horizon: f64) -> f64 {
        if self.is_piecewise_constant() {
            return self
                .segments(0.0, horizon.max(0.0))
                .iter()
                .map(|(_, _, m)| m.exit_rate(state))
                .fold(self.at(horizon.max(0.0)).exit_rate(state), f64::max);
        }
        let steps = (horizon / 1e-3).ceil().max(1.0) as usize;
        let scanned = (0..=steps)
            .map(|k| self.at(horizon * k as f64 / steps as f64).exit_rate(state))
            .fold(0.0, f64::max);
        let scan = 1.01 * scanned;
        match self.analytic_bound() {
            Some(b) => scan.min(b).max(scanned),
            None => scan,
        }
    }

    fn analytic_bound(&self) -> Option<f64> {
        match &self.kind {
            GeneratorKind::Family(f) => Some(f.exit_rate_bound()),
            GeneratorKind::TensorSum(a, b) => Some(a.analytic_bound()? + b.analytic_bound()?),
            _ => None,
        }
    }

    /// Largest total exit rate over `[0, horizon]` across all states.
    pub fn max_exit_rate(&self, horizon: f64) -> f64 {
        (0..self.dim()).map(|v| self.exit_rate_envelope(v, horizon)).fold(0.0, f64::max)
    }

    /// Errors unless every stored matrix is a valid generator. Families are
    /// valid by construction.
    pub fn ensure_valid(&self) -> Result<()> {
        let bad = |m: &RateMatrix, t: f64| {
            let v = m.violations(t);
            if v.is_empty() {
                Ok(())
            } else {
                let first = &v[0];
                Err(Error::InvalidGenerator(format!(
                    "{} violation(s); first at t={}, row {}, column {:?}, value {:e}",
                    v.len(),
                    first.time,
                    first.row,
                    first.column,
                    first.value
                )))
            }
        };
        match &self.kind {
            GeneratorKind::Constant(m) => bad(m, 0.0),
            GeneratorKind::PiecewiseConstant { breakpoints, matrices } => {
                breakpoints.iter().zip(matrices).try_for_each(|(&t, m)| bad(m, t))
            }
            GeneratorKind::Family(_) => Ok(()),
            GeneratorKind::TensorSum(a, b) => {
                a.ensure_valid()?;
                b.ensure_valid()
            }
        }
    }
}

/// `A ⊗ I + I ⊗ B` in first-factor-slowest order.
pub(crate) fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> RateMatrix {
    let (m1, m2) = (a.nrows(), b.nrows());
    let n = m1 * m2;
    let mut out = DMatrix::zeros(n, n);
    for x1 in 0..m1 {
        for x2 in 0..m2 {
            let row = x1 * m2 + x2;
            for y1 in 0..m1 {
                out[(row, y1 * m2 + x2)] += a[(x1, y1)];
            }
            for y2 in 0..m2 {
                out[(row, x1 * m2 + y2)] += b[(x2, y2)];
            }
        }
    }
    RateMatrix::new(out).expect("tensor sum of finite square matrices")
}
