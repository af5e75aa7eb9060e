use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One coordinate of a product state space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub states: Vec<String>,
}

impl Factor {
    pub fn new(name: impl Into<String>, states: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Factor {
            name: name.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    /// A factor with labels `"0"`, `"1"`, ..., `"k-1"`.
    pub fn numbered(name: impl Into<String>, k: usize) -> Self {
        Factor::new(name, (0..k).map(|s| s.to_string()))
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// Product space `X¹ × ... × Xᴺ` with a fixed row-major flat indexing in
/// which the first factor varies slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredStateSpace {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    size: usize,
}

impl FactoredStateSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpace("a state space needs at least one factor".into()));
        }
        for f in &factors {
            if f.states.len() < 2 {
                return Err(Error::InvalidSpace(format!(
                    "factor `{}` has {} state(s); at least 2 are required",
                    f.name,
                    f.states.len()
                )));
            }
            for (k, label) in f.states.iter().enumerate() {
                if f.states[..k].contains(label) {
                    return Err(Error::InvalidSpace(format!(
                        "factor `{}` repeats state label `{label}`",
                        f.name
                    )));
                }
            }
        }
        let mut strides = vec![1; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1].cardinality();
        }
        let size = strides[0] * factors[0].cardinality();
        Ok(FactoredStateSpace { factors, strides, size })
    }

    /// Single-factor space with labels `0..k`.
    pub fn plain(name: impl Into<String>, k: usize) -> Result<Self> {
        FactoredStateSpace::new(vec![Factor::numbered(name, k)])
    }

    /// `n` factors named `X1..Xn`, each with labels `0..k`.
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        FactoredStateSpace::new((1..=n).map(|i| Factor::numbered(format!("X{i}"), k)).collect())
    }

    /// Two binary factors `X1`, `X2`; flat order (0,0),(0,1),(1,0),(1,1).
    pub fn binary_pair() -> Self {
        FactoredStateSpace::uniform(2, 2).expect("two binary factors form a valid space")
    }

    /// Concatenation of the factors of `self` and `other`.
    pub fn product(&self, other: &FactoredStateSpace) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        FactoredStateSpace::new(factors)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> Result<&Factor> {
        self.factors.get(i).ok_or(Error::FactorOutOfRange {
            index: i,
            count: self.factors.len(),
        })
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.factors[i].cardinality()
    }

    /// Number of flat states.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn check_factor(&self, i: usize) -> Result<()> {
        self.factor(i).map(|_| ())
    }

    pub fn check_state(&self, flat: usize) -> Result<()> {
        if flat < self.size {
            Ok(())
        } else {
            Err(Error::StateOutOfRange { state: flat, size: self.size })
        }
    }

    pub fn to_flat(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                found: tuple.len(),
            });
        }
        let mut flat = 0;
        for (i, &x) in tuple.iter().enumerate() {
            if x >= self.factors[i].cardinality() {
                return Err(Error::StateOutOfRange {
                    state: x,
                    size: self.factors[i].cardinality(),
                });
            }
            flat += x * self.strides[i];
        }
        Ok(flat)
    }

    pub fn to_tuple(&self, flat: usize) -> Vec<usize> {
        (0..self.factors.len()).map(|i| self.coord(flat, i)).collect()
    }

    /// The `i`-th coordinate of a flat state.
    pub fn coord(&self, flat: usize, i: usize) -> usize {
        (flat / self.strides[i]) % self.factors[i].cardinality()
    }

    /// The flat state obtained by replacing coordinate `i` with `value`.
    pub fn with_coord(&self, flat: usize, i: usize, value: usize) -> usize {
        flat - self.coord(flat, i) * self.strides[i] + value * self.strides[i]
    }

    /// Number of coordinates in which two flat states differ.
    pub fn hamming(&self, a: usize, b: usize) -> usize {
        (0..self.factors.len()).filter(|&i| self.coord(a, i) != self.coord(b, i)).count()
    }

    /// The flat state with every coordinate except `i` equal (the "context" of
    /// `i`), encoded as the flat index with coordinate `i` set to 0.
    pub fn context(&self, flat: usize, i: usize) -> usize {
        self.with_coord(flat, i, 0)
    }

    /// Flat states whose `i`-th coordinate equals `value`, in increasing order.
    pub fn states_with(&self, i: usize, value: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&x| self.coord(x, i) == value)
    }

    /// Human-readable label like `(0,1)`; a bare label for one factor.
    pub fn label(&self, flat: usize) -> String {
        if self.factors.len() == 1 {
            return self.factors[0].states[flat].clone();
        }
        let parts: Vec<&str> = (0..self.factors.len())
            .map(|i| self.factors[i].states[self.coord(flat, i)].as_str())
            .collect();
        format!("({})", parts.join(","))
    }

    /// The single-factor space of factor `i`.
    pub fn marginal(&self, i: usize) -> Result<FactoredStateSpace> {
        FactoredStateSpace::new(vec![self.factor(i)?.clone()])
    }
}
