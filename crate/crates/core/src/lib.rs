//! Markov copulae for finite continuous-time Markov chains.
//!
//! The crate builds multivariate chains on a product state space whose
//! components follow prescribed Markov marginal laws, and audits arbitrary
//! joint generators for strong and weak Markovian consistency of their
//! components.
//!
//! Modules:
//! - [`state_model`]: factored state spaces, rate matrices, generator
//!   functions, distributions, the extension operator and tensor-sum coupling.
//! - [`kolmogorov`]: transition matrices, distribution evolution, path-event
//!   laws and the conditional operator.
//! - [`consistency`]: rate-sum conditions, strong/weak consistency checks,
//!   marginal extraction and the immersion verdict.
//! - [`copula`]: strong-copula linear programs and weak-copula verification.
//! - [`montecarlo`]: seeded path simulation, counting processes and
//!   compensator residual tests.

pub mod consistency;
pub mod copula;
mod error;
pub mod kolmogorov;
pub mod montecarlo;
pub mod state_model;

pub use error::{Error, Result};

pub use consistency::{
    audit, check_condition_m, check_operator_condition, check_strong, check_weak,
    extract_marginal, immersion_verdict, projected_intensity, AuditMode, Certificate,
    CertificateKind, ConditionMReport, ConsistencyReport, FactorReport, Immersion,
    MarginalGenerator, OperatorCheck, StrongCheck, Verdict, WeakCheck, Witness,
};
pub use copula::{
    build_strong_copula, build_weak_copula_candidate, verify_strong_copula, verify_weak_copula,
    CopulaProblem, CopulaSolution, Objective, SolverStatus, StrongCopulaVerification,
    RateSumWitness, WeakCandidate, WeakClassification, WeakCopulaVerification, WeakFactorResult,
};
pub use kolmogorov::{
    conditional_operator, evolve, path_event_law, transition_matrix, ConditionalOperator,
    PathEvent, PathEventLaw, TransitionMatrix, EPS_REACH,
};
pub use montecarlo::{
    compensator_residual_test, counting_stats, counting_stats_between, empirical_transition,
    martingale_residual_test, simulate, CountingStats, EmpiricalLaw, LawComparison,
    ResidualReport, SimulationPath,
};
pub use state_model::{
    extension_matrix, jump_intensity, tensor_sum, validate_generator, Distribution,
    ExtensionMatrix, Factor, FactoredStateSpace, Family, GeneratorFunction, GeneratorKind,
    RateMatrix, ValidationReport, Violation,
};
