use nalgebra::DMatrix;
use serde::Serialize;

use super::{check_grid, coordinate_rate, Certificate, CertificateKind, Witness};
use crate::kolmogorov::{check_law, conditional_from_law, evolve, ConditionalOperator};
use crate::state_model::{extension_matrix, Distribution, GeneratorFunction};
use crate::{Error, Result};

/// A marginal generator `Λⁱ(t)` sampled on a time grid.
///
/// Rows whose conditioning state is unreachable are marked undefined and
/// hold zeros.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalGenerator {
    pub factor: usize,
    pub times: Vec<f64>,
    /// `rates[k][x][y]` is the rate from `x` to `y` at `times[k]`.
    pub rates: Vec<Vec<Vec<f64>>>,
    pub defined: Vec<Vec<bool>>,
    /// Exact generator when the marginal comes from a known closed form.
    #[serde(skip)]
    pub closed_form: Option<GeneratorFunction>,
}

impl MarginalGenerator {
    /// Samples a known single-factor generator on `grid`.
    pub fn from_generator(factor: usize, g: &GeneratorFunction, grid: &[f64]) -> Result<Self> {
        let times = check_grid(grid)?;
        g.ensure_valid()?;
        let rates: Vec<Vec<Vec<f64>>> = times.iter().map(|&t| g.at(t).rows()).collect();
        let defined = vec![vec![true; g.dim()]; times.len()];
        Ok(MarginalGenerator { factor, times, rates, defined, closed_form: Some(g.clone()) })
    }

    pub fn states(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }

    /// Rates and row mask at `t`: exact when a closed form is attached,
    /// otherwise only at grid times.
    pub fn at(&self, t: f64) -> Option<(Vec<Vec<f64>>, Vec<bool>)> {
        if let Some(g) = &self.closed_form {
            return Some((g.at(t).rows(), vec![true; g.dim()]));
        }
        let k = self.times.iter().position(|&s| s == t)?;
        Some((self.rates[k].clone(), self.defined[k].clone()))
    }

    /// Largest entrywise difference against `other` over grid times and rows
    /// defined in both.
    pub fn max_difference(&self, other: &MarginalGenerator) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for &t in &self.times {
            let (a, da) = self.at(t)?;
            let (b, db) = other.at(t)?;
            if a.len() != b.len() {
                return None;
            }
            for x in 0..a.len() {
                if da[x] && db[x] {
                    for y in 0..a.len() {
                        let d = (a[x][y] - b[x][y]).abs();
                        worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                    }
                }
            }
        }
        worst
    }
}

/// Rates of factor `i` averaged over the conditional law of the other
/// coordinates given `X_t^i`.
pub(crate) fn marginal_rates(g: &GeneratorFunction, q: &ConditionalOperator, t: f64) -> Vec<Vec<f64>> {
    let space = g.space();
    let i = q.factor;
    let k = space.cardinality(i);
    let m = g.at(t);
    let mut out = vec![vec![0.0; k]; k];
    for from in 0..k {
        if !q.defined[from] {
            continue;
        }
        for to in (0..k).filter(|&y| y != from) {
            out[from][to] = space
                .states_with(i, from)
                .map(|x| q.matrix[(from, x)] * coordinate_rate(&m, space, i, x, to))
                .sum();
        }
        out[from][from] = -(0..k).filter(|&y| y != from).map(|y| out[from][y]).sum::<f64>();
    }
    out
}

/// Marginal generator of factor `i` implied by the joint chain: each rate is
/// the joint coordinate rate weighted by `ℙ(X_t^{-i} = · | X_t^i = xⁱ)`.
pub fn extract_marginal(g: &GeneratorFunction, mu0: &Distribution, i: usize, grid: &[f64]) -> Result<MarginalGenerator> {
    let times = check_grid(grid)?;
    check_law(mu0, g)?;
    g.ensure_valid()?;
    g.space().check_factor(i)?;
    let mut rates = Vec::with_capacity(times.len());
    let mut defined = Vec::with_capacity(times.len());
    for &t in &times {
        let law = evolve(mu0, g, t)?;
        let q = conditional_from_law(&law, g, i, t);
        rates.push(marginal_rates(g, &q, t));
        defined.push(q.defined);
    }
    Ok(MarginalGenerator { factor: i, times, rates, defined, closed_form: None })
}

/// Residuals of `Q_t^i Λ(t) C^{i,*} = Λⁱ(t)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorCheck {
    pub factor: usize,
    /// `(t, max-norm residual over defined rows)`.
    pub residuals: Vec<(f64, f64)>,
    pub max_residual: f64,
    pub pass: bool,
    /// `(t, row)` pairs skipped because `ℙ(X_t^i = row)` is negligible.
    pub excluded: Vec<(f64, usize)>,
    pub certificate: Option<Certificate>,
}

pub const OPERATOR_TOL: f64 = 1e-6;

pub fn check_operator_condition(
    g: &GeneratorFunction,
    mu0: &Distribution,
    target: &MarginalGenerator,
    i: usize,
    grid: &[f64],
) -> Result<OperatorCheck> {
    let times = check_grid(grid)?;
    check_law(mu0, g)?;
    g.ensure_valid()?;
    let c = extension_matrix(g.space(), i)?;
    let k = g.space().cardinality(i);
    if target.states() != k {
        return Err(Error::DimensionMismatch { expected: k, found: target.states() });
    }
    let mut residuals = Vec::with_capacity(times.len());
    let mut excluded = Vec::new();
    let mut worst: Option<Certificate> = None;
    for &t in &times {
        let (want, want_def) = target
            .at(t)
            .ok_or_else(|| Error::InvalidArgument(format!("target marginal is not defined at t={t}")))?;
        let law = evolve(mu0, g, t)?;
        let q = conditional_from_law(&law, g, i, t);
        let lhs: DMatrix<f64> = &q.matrix * g.at(t).matrix() * &c.matrix;
        let mut r = 0.0f64;
        for x in 0..k {
            if !(q.defined[x] && want_def[x]) {
                excluded.push((t, x));
                continue;
            }
            for y in 0..k {
                let d = (lhs[(x, y)] - want[x][y]).abs();
                r = r.max(d);
                if worst.as_ref().map_or(true, |w| d > w.gap) && d > OPERATOR_TOL {
                    worst = Some(Certificate {
                        kind: CertificateKind::OperatorResidual,
                        factor: i,
                        time: t,
                        from: x,
                        to: y,
                        left: Witness::State { state: vec![x, y] },
                        right: Witness::Target,
                        left_value: lhs[(x, y)],
                        right_value: want[x][y],
                        gap: d,
                    });
                }
            }
        }
        residuals.push((t, r));
    }
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(OperatorCheck {
        factor: i,
        residuals,
        max_residual,
        pass: max_residual <= OPERATOR_TOL,
        excluded,
        certificate: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_model::{tensor_sum, FactoredStateSpace, Family};

    fn origin() -> Distribution {
        Distribution::point_mass(4, 0).unwrap()
    }

    fn alpha(a: f64, b: f64, c: f64, t: f64) -> f64 {
        let stay = (-(a + b + c) * t).exp();
        let moved = (-a * t).exp() * (1.0 - (-(b + c) * t).exp()) * b / (b + c);
        c * moved / (stay + moved)
    }

    #[test]
    fn contagion_marginal_at_one() {
        let (a, b, c) = (0.5, 0.3, 0.2);
        let g = GeneratorFunction::family(Family::Example32Joint { a, b, c });
        let m = extract_marginal(&g, &origin(), 0, &[1.0]).unwrap();
        let expect = a + c - alpha(a, b, c, 1.0);
        assert!((m.rates[0][0][1] - expect).abs() < 1e-12);
        assert!((m.rates[0][0][1] - 0.6439636).abs() < 1e-5);
        assert_eq!(m.defined[0], vec![true, true]);
    }

    #[test]
    fn common_shock_second_marginal_is_constant() {
        let g = GeneratorFunction::family(Family::Example31 { a: 0.5, b: 0.3, c: 0.2 });
        let m = extract_marginal(&g, &origin(), 1, &[0.2, 1.0, 3.0]).unwrap();
        for k in 0..3 {
            assert!((m.rates[k][0][1] - 0.5).abs() < 1e-12);
            assert!((m.rates[k][0][0] + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn unreachable_rows_are_undefined() {
        let g = GeneratorFunction::family(Family::Example31 { a: 0.5, b: 0.3, c: 0.2 });
        let m = extract_marginal(&g, &origin(), 0, &[0.0]).unwrap();
        assert_eq!(m.defined[0], vec![true, false]);
    }

    #[test]
    fn tensor_sum_marginal_is_the_input() {
        let mk = |n: &str, r: [f64; 2]| {
            GeneratorFunction::from_rows(FactoredStateSpace::plain(n, 2).unwrap(), &[vec![-r[0], r[0]], vec![r[1], -r[1]]]).unwrap()
        };
        let g1 = mk("X1", [0.9, 0.25]);
        let g = tensor_sum(&g1, &mk("X2", [0.5, 1.5])).unwrap();
        let mu = Distribution::new(vec![0.4, 0.6]).unwrap().product(&Distribution::new(vec![0.1, 0.9]).unwrap());
        let m = extract_marginal(&g, &mu, 0, &[0.0, 0.7, 2.0]).unwrap();
        let want = MarginalGenerator::from_generator(0, &g1, &[0.0, 0.7, 2.0]).unwrap();
        assert!(m.max_difference(&want).unwrap() < 1e-14);
    }

    #[test]
    fn operator_condition_contagion_passes_against_closed_form() {
        let (a, b, c) = (0.5, 0.3, 0.2);
        let g = GeneratorFunction::family(Family::Example32Joint { a, b, c });
        let grid: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
        let target = GeneratorFunction::family(Family::Example32Marginal { factor: 0, a, b, c });
        let target = MarginalGenerator::from_generator(0, &target, &grid).unwrap();
        let r = check_operator_condition(&g, &origin(), &target, 0, &grid).unwrap();
        assert!(r.pass, "max residual {}", r.max_residual);
        assert!(r.max_residual < 1e-12);
    }

    #[test]
    fn operator_condition_contagion_fails_against_wrong_target() {
        let (a, b, c) = (0.5, 0.3, 0.2);
        let g = GeneratorFunction::family(Family::Example32Joint { a, b, c });
        let wrong = GeneratorFunction::from_rows(
            FactoredStateSpace::plain("X1", 2).unwrap(),
            &[vec![-(a + c), a + c], vec![0.0, 0.0]],
        )
        .unwrap();
        let grid = [0.5, 1.0, 2.0];
        let target = MarginalGenerator::from_generator(0, &wrong, &grid).unwrap();
        let r = check_operator_condition(&g, &origin(), &target, 0, &grid).unwrap();
        assert!(!r.pass);
        for (t, res) in &r.residuals {
            assert!((res - alpha(a, b, c, *t)).abs() < 1e-12);
        }
        assert!(r.certificate.is_some());
    }

    #[test]
    fn target_without_matching_grid_time_errors() {
        let g = GeneratorFunction::family(Family::Example31 { a: 0.5, b: 0.3, c: 0.2 });
        let target = extract_marginal(&g, &origin(), 0, &[1.0]).unwrap();
        assert!(check_operator_condition(&g, &origin(), &target, 0, &[2.0]).is_err());
    }
}
