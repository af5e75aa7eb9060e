//! The JSON model document: factors, initial law and a kind-tagged generator.

use std::collections::BTreeMap;

use markov_copula::{Distribution, Factor, FactoredStateSpace, Family, GeneratorFunction, GeneratorKind, RateMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub factors: Vec<Factor>,
    /// Weights over flat states; defaults to a point mass at the first state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    pub generator: GeneratorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    Piecewise {
        breakpoints: Vec<f64>,
        matrices: Vec<Vec<Vec<f64>>>,
    },
    Family {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// Independent coupling of consecutive groups of factors.
    TensorSum {
        parts: Vec<TensorPart>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorPart {
    /// Number of leading factors (of what remains) this part covers.
    pub factors: usize,
    pub generator: GeneratorSpec,
}

/// A parsed and structurally checked model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub generator: GeneratorFunction,
    pub initial: Distribution,
}

impl Model {
    pub fn space(&self) -> &FactoredStateSpace {
        self.generator.space()
    }
}

fn invalid(field: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Model(format!("{field}: {err}"))
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<RateMatrix, CliError> {
    RateMatrix::from_rows(rows).map_err(|e| invalid(field, e))
}

fn build_generator(field: &str, space: &FactoredStateSpace, spec: &GeneratorSpec) -> Result<GeneratorFunction, CliError> {
    match spec {
        GeneratorSpec::Constant { matrix: rows } => {
            GeneratorFunction::constant(space.clone(), matrix(&format!("{field}.matrix"), rows)?).map_err(|e| invalid(field, e))
        }
        GeneratorSpec::Piecewise { breakpoints, matrices } => {
            let ms = matrices
                .iter()
                .enumerate()
                .map(|(k, m)| matrix(&format!("{field}.matrices[{k}]"), m))
                .collect::<Result<Vec<_>, _>>()?;
            GeneratorFunction::piecewise(space.clone(), breakpoints.clone(), ms).map_err(|e| invalid(field, e))
        }
        GeneratorSpec::Family { name, params } => {
            let family = Family::from_name(name, params).map_err(|e| invalid(&format!("{field}.name"), e))?;
            let native = family.space();
            let cards = |s: &FactoredStateSpace| (0..s.factor_count()).map(|i| s.cardinality(i)).collect::<Vec<_>>();
            if cards(&native) != cards(space) {
                return Err(invalid(
                    field,
                    format!("family `{name}` needs factor cardinalities {:?}, the model declares {:?}", cards(&native), cards(space)),
                ));
            }
            GeneratorFunction::new(space.clone(), GeneratorKind::Family(family)).map_err(|e| invalid(field, e))
        }
        GeneratorSpec::TensorSum { parts } => {
            if parts.len() < 2 {
                return Err(invalid(&format!("{field}.parts"), "a tensor sum needs at least two parts"));
            }
            let total: usize = parts.iter().map(|p| p.factors).sum();
            if total != space.factor_count() || parts.iter().any(|p| p.factors == 0) {
                return Err(invalid(
                    &format!("{field}.parts"),
                    format!("part factor counts must be positive and add up to {}", space.factor_count()),
                ));
            }
            let mut offset = 0;
            let mut acc: Option<GeneratorFunction> = None;
            for (k, part) in parts.iter().enumerate() {
                let sub = FactoredStateSpace::new(space.factors()[offset..offset + part.factors].to_vec())
                    .map_err(|e| invalid(field, e))?;
                offset += part.factors;
                let g = build_generator(&format!("{field}.parts[{k}].generator"), &sub, &part.generator)?;
                acc = Some(match acc {
                    None => g,
                    Some(prev) => {
                        let joint = prev.space().product(g.space()).map_err(|e| invalid(field, e))?;
                        GeneratorFunction::new(joint, GeneratorKind::TensorSum(Box::new(prev), Box::new(g)))
                            .map_err(|e| invalid(field, e))?
                    }
                });
            }
            Ok(acc.expect("at least two parts"))
        }
    }
}

fn spec_of(g: &GeneratorFunction) -> GeneratorSpec {
    match g.kind() {
        GeneratorKind::Constant(m) => GeneratorSpec::Constant { matrix: m.rows() },
        GeneratorKind::PiecewiseConstant { breakpoints, matrices } => GeneratorSpec::Piecewise {
            breakpoints: breakpoints.clone(),
            matrices: matrices.iter().map(RateMatrix::rows).collect(),
        },
        GeneratorKind::Family(f) => GeneratorSpec::Family { name: f.name().to_string(), params: f.params() },
        GeneratorKind::TensorSum(a, b) => GeneratorSpec::TensorSum {
            parts: [a, b]
                .into_iter()
                .map(|p| TensorPart { factors: p.space().factor_count(), generator: spec_of(p) })
                .collect(),
        },
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<ModelFile, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn to_model(&self) -> Result<Model, CliError> {
        let space = FactoredStateSpace::new(self.factors.clone()).map_err(|e| invalid("factors", e))?;
        let generator = build_generator("generator", &space, &self.generator)?;
        let initial = match &self.initial {
            Some(w) => Distribution::for_space(&space, w.clone()).map_err(|e| invalid("initial", e))?,
            None => Distribution::point_mass(space.size(), 0).map_err(|e| invalid("initial", e))?,
        };
        Ok(Model { generator, initial })
    }

    pub fn from_model(model: &Model) -> ModelFile {
        let first = Distribution::point_mass(model.space().size(), 0).ok();
        ModelFile {
            factors: model.space().factors().to_vec(),
            initial: (Some(&model.initial) != first.as_ref()).then(|| model.initial.weights().to_vec()),
            generator: spec_of(&model.generator),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }
}
