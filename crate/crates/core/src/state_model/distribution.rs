use super::FactoredStateSpace;
use crate::{Error, Result};

/// A probability law over the flat states of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no weights".into()));
        }
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {k} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(Distribution { weights })
    }

    pub fn for_space(space: &FactoredStateSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::DimensionMismatch { expected: space.size(), found: weights.len() });
        }
        Distribution::new(weights)
    }

    pub fn point_mass(size: usize, state: usize) -> Result<Self> {
        if state >= size {
            return Err(Error::StateOutOfRange { state, size });
        }
        let mut w = vec![0.0; size];
        w[state] = 1.0;
        Ok(Distribution { weights: w })
    }

    /// Renormalizes nonnegative mass; used internally after masking.
    pub(crate) fn from_mass(mass: Vec<f64>) -> Option<Self> {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        Some(Distribution { weights: mass.into_iter().map(|m| (m / total).max(0.0)).collect() })
    }

    /// Law of independent components, in flat order.
    pub fn product(&self, other: &Distribution) -> Distribution {
        let weights = self
            .weights
            .iter()
            .flat_map(|a| other.weights.iter().map(move |b| a * b))
            .collect();
        Distribution { weights }
    }

    /// Law of factor `i`.
    pub fn marginal(&self, space: &FactoredStateSpace, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; space.cardinality(i)];
        for (x, w) in self.weights.iter().enumerate() {
            out[space.coord(x, i)] += w;
        }
        out
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(k, _)| k)
    }
}
