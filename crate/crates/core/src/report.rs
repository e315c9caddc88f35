//! Audit verdicts with their maximum deviation and the grid point where it
//! is attained.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::outcome::Outcome;
use crate::scalar::Real;
use crate::theory::LambdaPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    StrongLocality,
    Factorizability,
    ParameterIndependence,
    OutcomeIndependence,
    NoSignaling,
    MeasurementIndependence,
    EmpiricalNoSignaling,
    EmpiricalCorrelation,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::StrongLocality => "strong_locality",
            Condition::Factorizability => "factorizability",
            Condition::ParameterIndependence => "parameter_independence",
            Condition::OutcomeIndependence => "outcome_independence",
            Condition::NoSignaling => "no_signaling",
            Condition::MeasurementIndependence => "measurement_independence",
            Condition::EmpiricalNoSignaling => "empirical_no_signaling",
            Condition::EmpiricalCorrelation => "empirical_correlation",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing could be evaluated; neither a pass nor a fail.
    Skipped,
}

/// The wing whose probability is being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wing {
    A,
    B,
    /// Deviation concerns the pair (joint table or λ-ensemble).
    Both,
}

/// Which quantity the witness deviation measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// `|P(A,B|â,b̂,λ) − P(A|â,b̂₀,λ)·P(B|â₀,b̂,λ)|`.
    JointVsLocalProduct,
    /// `|P(A|â,b̂,B,λ) − P(A|â,b̂₀,λ)|` against the reference setting.
    ConditionalVsReference,
    /// `|P(A|â,b̂,B,λ) − P(A|â,b̂,λ)|`.
    ConditionalVsOwnMarginal,
    /// `|P(A|â,b̂,λ) − P(A|â,b̂',λ)|` between two distant settings.
    MarginalSpread,
    /// λ-averaged marginal spread between two distant settings.
    AveragedMarginalSpread,
    /// Total-variation distance between `P(λ|â,b̂)` and `P(λ|â',b̂')`.
    EnsembleDistance,
    /// Empirical two-proportion z-score between distant settings.
    EmpiricalMarginalZ,
    /// Empirical vs analytic correlation z-score.
    EmpiricalCorrelationZ,
}

/// A second setting pair a deviation is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SettingRef<T> {
    pub a_index: usize,
    pub b_index: usize,
    pub a: Direction<T>,
    pub b: Direction<T>,
}

/// The point `(â, b̂, λ, A, B)` at which a deviation is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Witness<T> {
    pub kind: DeviationKind,
    pub wing: Wing,
    pub a_index: usize,
    pub b_index: usize,
    pub a: Direction<T>,
    pub b: Direction<T>,
    pub lambda_index: Option<usize>,
    pub lambda: Option<LambdaPoint<T>>,
    pub outcome_a: Option<Outcome>,
    pub outcome_b: Option<Outcome>,
    pub reference: Option<SettingRef<T>>,
    /// The deviation at this point.
    pub deviation: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConditionReport<T> {
    pub condition: Condition,
    pub verdict: Verdict,
    /// `true` iff the verdict is `Pass`.
    pub pass: bool,
    pub max_deviation: T,
    pub tolerance: T,
    pub witness: Option<Witness<T>>,
    pub evaluated_points: usize,
    /// Points whose conditioning event had zero probability.
    pub skipped_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<T: Real> ConditionReport<T> {
    /// Builds a pass/fail report; `pass ⇔ max_deviation ≤ tolerance`.
    pub fn evaluated(
        condition: Condition,
        max_deviation: T,
        tolerance: T,
        witness: Option<Witness<T>>,
        evaluated_points: usize,
        skipped_points: usize,
    ) -> Self {
        let pass = max_deviation <= tolerance;
        Self {
            condition,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            pass,
            max_deviation,
            tolerance,
            witness,
            evaluated_points,
            skipped_points,
            note: None,
        }
    }

    pub fn skipped(condition: Condition, tolerance: T, note: impl Into<String>) -> Self {
        Self {
            condition,
            verdict: Verdict::Skipped,
            pass: false,
            max_deviation: T::zero(),
            tolerance,
            witness: None,
            evaluated_points: 0,
            skipped_points: 0,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.verdict == Verdict::Skipped
    }
}

/// Running maximum with deterministic tie-breaking: a candidate replaces
/// the incumbent only if it exceeds it by more than rounding noise, so the
/// first point in iteration order wins among near-equal maxima.
#[derive(Debug, Clone)]
pub(crate) struct MaxTracker<T: Real> {
    best: Option<Witness<T>>,
}

impl<T: Real> MaxTracker<T> {
    pub fn new() -> Self {
        Self { best: None }
    }

    pub fn current(&self) -> T {
        self.best.as_ref().map_or(-T::one(), |w| w.deviation)
    }

    /// Offers a candidate; `make` is only called when it wins.
    pub fn offer(&mut self, deviation: T, make: impl FnOnce() -> Witness<T>) {
        let cur = self.current();
        if self.best.is_none() || deviation > cur + T::tie_slack(cur) {
            let mut w = make();
            w.deviation = deviation;
            self.best = Some(w);
        }
    }

    pub fn finish(self) -> (T, Option<Witness<T>>) {
        match self.best {
            Some(w) => (w.deviation, Some(w)),
            None => (T::zero(), None),
        }
    }
}
