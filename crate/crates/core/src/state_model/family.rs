//! Registry of closed-form generator families.
//!
//! Every family lives on two binary factors (or one binary factor for the
//! marginal families) in the flat order (0,0),(0,1),(1,0),(1,1).

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{FactoredStateSpace, RateMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Strong copula of two absorbing binary chains; `a, b, c ≥ 0`.
    Example31 { a: f64, b: f64, c: f64 },
    /// Weak-only copula with common jumps from (0,0); `a, b ≥ 0`, `c > 0`.
    Example32Joint { a: f64, b: f64, c: f64 },
    /// Time-inhomogeneous marginal law of the weak-only copula; `factor` is 0 or 1.
    Example32Marginal { factor: usize, a: f64, b: f64, c: f64 },
    /// Chain whose second component is not Markov in its own filtration.
    Example33 { a: f64, b: f64, c: f64, d: f64, e: f64, f: f64, g: f64 },
}

pub const FAMILY_NAMES: [&str; 5] = [
    "example_3_1",
    "example_3_2_joint",
    "example_3_2_marginal_1",
    "example_3_2_marginal_2",
    "example_3_3",
];

fn param(params: &BTreeMap<String, f64>, name: &str) -> Result<f64> {
    let v = *params
        .get(name)
        .ok_or_else(|| Error::InvalidParameter(format!("missing parameter `{name}`")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameter(format!("parameter `{name}` = {v} must be finite and >= 0")));
    }
    Ok(v)
}

fn check_keys(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidParameter(format!("unexpected parameter `{k}`"))),
        None => Ok(()),
    }
}

/// `(1 - e^{-kt}) / k`, continuous at `k = 0`.
fn saturation(k: f64, t: f64) -> f64 {
    if k == 0.0 {
        t
    } else {
        -(-k * t).exp_m1() / k
    }
}

/// Conditional weight of the "other component already jumped" state in the
/// weak-only copula; `alpha` for factor 0 and `beta` for factor 1.
fn contagion_weight(own: f64, other: f64, c: f64, t: f64) -> f64 {
    let stay = (-(own + other + c) * t).exp();
    let moved = (-own * t).exp() * other * saturation(other + c, t);
    c * moved / (stay + moved)
}

impl Family {
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Family> {
        match name {
            "example_3_1" => {
                check_keys(params, &["a", "b", "c"])?;
                Ok(Family::Example31 { a: param(params, "a")?, b: param(params, "b")?, c: param(params, "c")? })
            }
            "example_3_2_joint" => {
                check_keys(params, &["a", "b", "c"])?;
                let c = param(params, "c")?;
                if c <= 0.0 {
                    return Err(Error::InvalidParameter("example_3_2 requires c > 0".into()));
                }
                Ok(Family::Example32Joint { a: param(params, "a")?, b: param(params, "b")?, c })
            }
            "example_3_2_marginal_1" | "example_3_2_marginal_2" => {
                check_keys(params, &["a", "b", "c"])?;
                let factor = if name.ends_with('1') { 0 } else { 1 };
                Ok(Family::Example32Marginal {
                    factor,
                    a: param(params, "a")?,
                    b: param(params, "b")?,
                    c: param(params, "c")?,
                })
            }
            "example_3_3" => {
                check_keys(params, &["a", "b", "c", "d", "e", "f", "g"])?;
                Ok(Family::Example33 {
                    a: param(params, "a")?,
                    b: param(params, "b")?,
                    c: param(params, "c")?,
                    d: param(params, "d")?,
                    e: param(params, "e")?,
                    f: param(params, "f")?,
                    g: param(params, "g")?,
                })
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Example31 { .. } => "example_3_1",
            Family::Example32Joint { .. } => "example_3_2_joint",
            Family::Example32Marginal { factor: 0, .. } => "example_3_2_marginal_1",
            Family::Example32Marginal { .. } => "example_3_2_marginal_2",
            Family::Example33 { .. } => "example_3_3",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            Family::Example31 { a, b, c }
            | Family::Example32Joint { a, b, c }
            | Family::Example32Marginal { a, b, c, .. } => vec![("a", a), ("b", b), ("c", c)],
            Family::Example33 { a, b, c, d, e, f, g } => {
                vec![("a", a), ("b", b), ("c", c), ("d", d), ("e", e), ("f", f), ("g", g)]
            }
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn space(&self) -> FactoredStateSpace {
        match self {
            Family::Example32Marginal { factor, .. } => {
                FactoredStateSpace::plain(format!("X{}", factor + 1), 2).expect("binary factor")
            }
            _ => FactoredStateSpace::binary_pair(),
        }
    }

    pub fn is_time_homogeneous(&self) -> bool {
        !matches!(self, Family::Example32Marginal { .. })
    }

    /// Upper bound on every total exit rate, valid for all `t ≥ 0`.
    pub fn exit_rate_bound(&self) -> f64 {
        match *self {
            Family::Example31 { a, b, c } | Family::Example32Joint { a, b, c } => a + b + c,
            Family::Example32Marginal { factor: 0, a, c, .. } => a + c,
            Family::Example32Marginal { b, c, .. } => b + c,
            Family::Example33 { a, b, c, d, e, f, g } => (a + b + c).max(d + e).max(f).max(g),
        }
    }

    pub fn rate_matrix(&self, t: f64) -> RateMatrix {
        let rows: Vec<f64> = match *self {
            Family::Example31 { a, b, c } => vec![
                -(a + b + c), b, a, c,
                0.0, -(a + c), 0.0, a + c,
                0.0, 0.0, -(b + c), b + c,
                0.0, 0.0, 0.0, 0.0,
            ],
            Family::Example32Joint { a, b, c } => vec![
                -(a + b + c), b, a, c,
                0.0, -a, 0.0, a,
                0.0, 0.0, -b, b,
                0.0, 0.0, 0.0, 0.0,
            ],
            Family::Example32Marginal { factor, a, b, c } => {
                let (own, other) = if factor == 0 { (a, b) } else { (b, a) };
                let rate = own + c - contagion_weight(own, other, c, t);
                vec![-rate, rate, 0.0, 0.0]
            }
            Family::Example33 { a, b, c, d, e, f, g } => vec![
                -(a + b + c), b, a, c,
                0.0, -(d + e), d, e,
                0.0, 0.0, -f, f,
                0.0, 0.0, g, -g,
            ],
        };
        let n = if rows.len() == 4 { 2 } else { 4 };
        RateMatrix::new(DMatrix::from_row_slice(n, n, &rows)).expect("family matrices are square and finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn registry_round_trip() {
        let p = params(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        for name in ["example_3_1", "example_3_2_joint", "example_3_2_marginal_1", "example_3_2_marginal_2"] {
            let f = Family::from_name(name, &p).unwrap();
            assert_eq!(f.name(), name);
            assert_eq!(f.params(), p);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            Family::from_name("example_3_2_joint", &params(&[("a", 0.5), ("b", 0.3), ("c", 0.0)])),
            Err(Error::InvalidParameter(_))
        ));
        assert!(Family::from_name("example_3_1", &params(&[("a", -1.0), ("b", 0.3), ("c", 0.0)])).is_err());
        assert!(Family::from_name("example_3_1", &params(&[("a", 1.0), ("b", 0.3)])).is_err());
        assert!(Family::from_name("example_3_1", &params(&[("a", 1.0), ("b", 0.3), ("c", 0.1), ("z", 1.0)])).is_err());
        assert!(matches!(Family::from_name("nope", &BTreeMap::new()), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn all_families_are_valid_generators() {
        let fams = [
            Family::Example31 { a: 0.5, b: 0.3, c: 0.2 },
            Family::Example32Joint { a: 0.0, b: 0.0, c: 0.2 },
            Family::Example32Marginal { factor: 0, a: 0.5, b: 0.3, c: 0.2 },
            Family::Example32Marginal { factor: 1, a: 0.0, b: 0.0, c: 0.0 },
            Family::Example33 { a: 0.4, b: 0.3, c: 0.2, d: 0.25, e: 0.15, f: 0.1, g: 0.35 },
        ];
        for f in fams {
            for t in [0.0, 0.3, 1.0, 10.0] {
                let m = f.rate_matrix(t);
                assert!(m.is_valid(), "{} at {t}", f.name());
                assert!(m.max_exit_rate() <= f.exit_rate_bound() + 1e-15);
            }
        }
    }

    #[test]
    fn contagion_weight_at_one() {
        // alpha(1) for (a, b, c) = (0.5, 0.3, 0.2), from the closed form evaluated by hand:
        // c * e^{-a}(1 - e^{-(b+c)}) b/(b+c) / (e^{-(a+b+c)} + e^{-a}(1 - e^{-(b+c)}) b/(b+c))
        let stay = (-1.0f64).exp();
        let moved = (-0.5f64).exp() * (1.0 - (-0.5f64).exp()) * 0.3 / 0.5;
        let expected = 0.2 * moved / (stay + moved);
        assert!((contagion_weight(0.5, 0.3, 0.2, 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.0560364).abs() < 1e-5);
    }
}
