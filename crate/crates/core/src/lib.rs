//! Locality auditing for two-wing spin experiments.
//!
//! A [`Theory`] pairs a distribution over hidden states λ with a kernel
//! `(â, b̂, λ) -> P(A, B | â, b̂, λ)`. The [`conditions`] module audits a
//! theory against strong locality, factorizability, parameter and outcome
//! independence, no-signaling and measurement independence; [`inequality`]
//! evaluates correlations and CHSH values; [`montecarlo`] simulates seeded
//! trial logs.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix it to `f64`.

pub mod conditions;
pub mod direction;
pub mod dist;
pub mod error;
pub mod inequality;
pub mod montecarlo;
pub mod outcome;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod theories;
pub mod theory;

pub use conditions::{
    audit_all, check_factorizability, check_measurement_independence, check_no_signaling,
    check_outcome_independence, check_parameter_independence, check_strong_locality,
    replay_witness, verify_decomposition, AuditGrid, DecompositionReport, GridOptions,
};
pub use direction::{angle_between, Direction};
pub use dist::{conditional_a_given_b, marginal_a, marginal_b, JointOutcomeDist, OutcomeDist};
pub use error::{Error, Result};
pub use inequality::{
    chsh_grid_search, chsh_terms, chsh_value, correlation, correlation_estimate,
    lhv_bound_bruteforce, ChshSearch, ChshSpec, ChshTerms, Estimate,
};
pub use montecarlo::{
    empirical_audit, empirical_correlation, run_trials, run_trials_with_workers, TrialLog,
    TrialRecord,
};
pub use outcome::Outcome;
pub use report::{Condition, ConditionReport, DeviationKind, Verdict, Wing, Witness};
pub use scalar::Real;
pub use theory::{
    FiniteEnsemble, LambdaEnsemble, LambdaPoint, LambdaSpace, Sampler, SettingSet, Theory,
};

pub type Direction64 = Direction<f64>;
pub type JointOutcomeDist64 = JointOutcomeDist<f64>;
pub type Theory64 = Theory<f64>;
pub type LambdaPoint64 = LambdaPoint<f64>;
pub type AuditGrid64 = AuditGrid<f64>;
pub type ConditionReport64 = ConditionReport<f64>;
pub type Witness64 = Witness<f64>;
pub type TrialLog64 = TrialLog<f64>;
pub type ChshSpec64 = ChshSpec<f64>;

pub type Direction32 = Direction<f32>;
pub type Theory32 = Theory<f32>;
