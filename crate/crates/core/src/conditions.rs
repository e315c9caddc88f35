//! Auditors for the locality conditions.
//!
//! Every per-λ condition is checked pointwise on an [`AuditGrid`]. The
//! local marginals `P(A|â,λ)` and `P(B|b̂,λ)` are realised as kernel
//! marginals at the grid's reference settings `b̂₀ = settings_b[0]` and
//! `â₀ = settings_a[0]`; parameter independence is what makes that choice
//! immaterial. Conditioning events with probability at most
//! [`Real::exact_tol`] are skipped and counted, never treated as 0/0.
//!
//! Grid points are evaluated in parallel; maxima are reduced in
//! lexicographic order `(wing, a, b, λ, conditioning outcome, outcome)`
//! and near-ties keep the earliest point, so reports are bit-stable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::dist::{JointOutcomeDist, OutcomeDist};
use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::report::{
    Condition, ConditionReport, DeviationKind, MaxTracker, SettingRef, Wing, Witness,
};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::theory::{FiniteEnsemble, LambdaEnsemble, LambdaPoint, Theory};

/// Default number of coplanar settings per wing.
pub const DEFAULT_COPLANAR_SETTINGS: usize = 8;
/// Default λ sample count for sampled ensembles.
pub const DEFAULT_LAMBDA_SAMPLES: usize = 512;

/// Finite discretisation of "for all â, b̂, λ".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AuditGrid<T> {
    pub settings_a: Vec<Direction<T>>,
    pub settings_b: Vec<Direction<T>>,
    pub lambda_points: Vec<(LambdaPoint<T>, T)>,
    /// Seed and count used whenever an ensemble has to be sampled.
    pub seed: u64,
    pub lambda_samples: usize,
}

/// Alice's and Bob's setting lists.
pub type SettingLists<T> = (Vec<Direction<T>>, Vec<Direction<T>>);

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions<T> {
    pub coplanar: usize,
    pub lambda_samples: usize,
    pub seed: u64,
    /// Explicit setting lists, overriding the theory's own and the default.
    pub settings: Option<SettingLists<T>>,
}

impl<T> Default for GridOptions<T> {
    fn default() -> Self {
        Self {
            coplanar: DEFAULT_COPLANAR_SETTINGS,
            lambda_samples: DEFAULT_LAMBDA_SAMPLES,
            seed: 0,
            settings: None,
        }
    }
}

/// `n` directions in the x–z plane at multiples of `2π/n`.
pub fn coplanar_settings<T: Real>(n: usize) -> Vec<Direction<T>> {
    (0..n)
        .map(|k| Direction::in_plane(T::TAU() * T::lit(k as f64) / T::lit(n as f64)))
        .collect()
}

/// Four fixed directions off the measurement plane.
pub fn out_of_plane_settings<T: Real>() -> Vec<Direction<T>> {
    let v = |x: f64, y: f64, z: f64| {
        Direction::normalized(T::lit(x), T::lit(y), T::lit(z)).expect("nonzero")
    };
    vec![v(0.0, 1.0, 0.0), v(0.0, -1.0, 0.0), v(1.0, 1.0, 1.0), v(1.0, -1.0, -1.0)]
}

/// Coplanar settings followed by the out-of-plane ones.
pub fn default_settings<T: Real>(coplanar: usize) -> Vec<Direction<T>> {
    let mut s = coplanar_settings(coplanar);
    s.extend(out_of_plane_settings());
    s
}

impl<T: Real> AuditGrid<T> {
    pub fn new(
        settings_a: Vec<Direction<T>>,
        settings_b: Vec<Direction<T>>,
        lambda_points: Vec<(LambdaPoint<T>, T)>,
    ) -> Result<Self> {
        if settings_a.is_empty() || settings_b.is_empty() || lambda_points.is_empty() {
            return Err(Error::InvalidParameter("audit grid lists must be nonempty".into()));
        }
        if let Some((p, w)) = lambda_points.iter().find(|(_, w)| w.is_nan() || *w <= T::zero()) {
            return Err(Error::InvalidParameter(format!("grid weight {w} of {p} is not positive")));
        }
        Ok(Self { settings_a, settings_b, lambda_points, seed: 0, lambda_samples: DEFAULT_LAMBDA_SAMPLES })
    }

    pub fn with_sampling(mut self, seed: u64, lambda_samples: usize) -> Self {
        self.seed = seed;
        self.lambda_samples = lambda_samples;
        self
    }

    /// Grid for a theory: its own setting lists if it has them (otherwise
    /// the default directions), and the support of its source ensemble, or
    /// `lambda_samples` seeded draws for sampled ensembles.
    pub fn for_theory(theory: &Theory<T>, opts: &GridOptions<T>) -> Result<Self> {
        let (a, b) = match (&opts.settings, theory.settings()) {
            (Some((a, b)), _) => (a.clone(), b.clone()),
            (None, Some(s)) => (s.a.clone(), s.b.clone()),
            (None, None) => {
                let d = default_settings(opts.coplanar);
                (d.clone(), d)
            }
        };
        let lambda = match theory.lambda_ensemble() {
            LambdaEnsemble::Finite(f) => {
                f.points().iter().filter(|(_, w)| *w > T::zero()).copied().collect()
            }
            LambdaEnsemble::Sampler(s) => s
                .materialize(opts.lambda_samples, opts.seed, Stream::GridLambda)?
                .points()
                .to_vec(),
        };
        Ok(Self::new(a, b, lambda)?.with_sampling(opts.seed, opts.lambda_samples))
    }

    fn setting_ref(&self, a_index: usize, b_index: usize) -> SettingRef<T> {
        SettingRef { a_index, b_index, a: self.settings_a[a_index], b: self.settings_b[b_index] }
    }

    #[allow(clippy::too_many_arguments)]
    fn witness(
        &self,
        kind: DeviationKind,
        wing: Wing,
        i: usize,
        j: usize,
        l: Option<usize>,
        outcome_a: Option<Outcome>,
        outcome_b: Option<Outcome>,
        reference: Option<(usize, usize)>,
    ) -> Witness<T> {
        Witness {
            kind,
            wing,
            a_index: i,
            b_index: j,
            a: self.settings_a[i],
            b: self.settings_b[j],
            lambda_index: l,
            lambda: l.map(|l| self.lambda_points[l].0),
            outcome_a,
            outcome_b,
            reference: reference.map(|(ri, rj)| self.setting_ref(ri, rj)),
            deviation: T::zero(),
        }
    }
}

/// Kernel tables on the whole grid, indexed `(a, b, λ)`.
struct Tables<T> {
    nb: usize,
    nl: usize,
    data: Vec<JointOutcomeDist<T>>,
}

impl<T: Real> Tables<T> {
    fn evaluate(t: &Theory<T>, g: &AuditGrid<T>) -> Result<Self> {
        let (nb, nl) = (g.settings_b.len(), g.lambda_points.len());
        let rows: Vec<Vec<JointOutcomeDist<T>>> = g
            .settings_a
            .par_iter()
            .map(|a| {
                let mut row = Vec::with_capacity(nb * nl);
                for b in &g.settings_b {
                    for (p, _) in &g.lambda_points {
                        row.push(t.joint(a, b, p)?);
                    }
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self { nb, nl, data: rows.into_iter().flatten().collect() })
    }

    fn at(&self, i: usize, j: usize, l: usize) -> &JointOutcomeDist<T> {
        &self.data[(i * self.nb + j) * self.nl + l]
    }
}

// Deviation formulas, shared with witness replay so both routes perform the
// same floating-point operations.

fn joint_vs_local_product<T: Real>(
    joint: &JointOutcomeDist<T>,
    at_ref_b: &JointOutcomeDist<T>,
    at_ref_a: &JointOutcomeDist<T>,
    a: Outcome,
    b: Outcome,
) -> T {
    (joint.get(a, b) - at_ref_b.marginal_a().prob(a) * at_ref_a.marginal_b().prob(b)).abs()
}

/// `P(target | other)` on the given wing, `None` if the conditioning event is null.
fn conditional<T: Real>(joint: &JointOutcomeDist<T>, wing: Wing, given: Outcome) -> Option<OutcomeDist<T>> {
    match wing {
        Wing::A => joint.conditional_a_given_b(given).ok(),
        _ => joint.conditional_b_given_a(given).ok(),
    }
}

fn marginal<T: Real>(joint: &JointOutcomeDist<T>, wing: Wing) -> OutcomeDist<T> {
    match wing {
        Wing::A => joint.marginal_a(),
        _ => joint.marginal_b(),
    }
}

fn conditioning_prob<T: Real>(joint: &JointOutcomeDist<T>, wing: Wing, given: Outcome) -> T {
    match wing {
        Wing::A => joint.marginal_b().prob(given),
        _ => joint.marginal_a().prob(given),
    }
}

fn split(wing: Wing, target: Outcome, given: Outcome) -> (Option<Outcome>, Option<Outcome>) {
    match wing {
        Wing::A => (Some(target), Some(given)),
        _ => (Some(given), Some(target)),
    }
}

/// Factorizability, `P(A,B|â,b̂,λ) = P(A|â,λ)·P(B|b̂,λ)` with the local
/// marginals taken at the reference settings.
pub fn check_factorizability<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let tables = Tables::evaluate(t, g)?;
    Ok(factorizability(&tables, g, tol))
}

fn factorizability<T: Real>(tables: &Tables<T>, g: &AuditGrid<T>, tol: T) -> ConditionReport<T> {
    let mut best = MaxTracker::new();
    let mut n = 0;
    for i in 0..g.settings_a.len() {
        for j in 0..g.settings_b.len() {
            for l in 0..g.lambda_points.len() {
                let (joint, rb, ra) = (tables.at(i, j, l), tables.at(i, 0, l), tables.at(0, j, l));
                for a in Outcome::ALL {
                    for b in Outcome::ALL {
                        n += 1;
                        let d = joint_vs_local_product(joint, rb, ra, a, b);
                        best.offer(d, || {
                            g.witness(DeviationKind::JointVsLocalProduct, Wing::Both, i, j, Some(l), Some(a), Some(b), Some((0, 0)))
                        });
                    }
                }
            }
        }
    }
    let (dev, w) = best.finish();
    ConditionReport::evaluated(Condition::Factorizability, dev, tol, w, n, 0)
}

/// Largest spread of `P(A|â,b̂,λ)` across `b̂` (and mirrored for B across `â`).
pub fn check_parameter_independence<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let tables = Tables::evaluate(t, g)?;
    Ok(parameter_independence(&tables, g, tol))
}

fn parameter_independence<T: Real>(tables: &Tables<T>, g: &AuditGrid<T>, tol: T) -> ConditionReport<T> {
    let (na, nb, nl) = (g.settings_a.len(), g.settings_b.len(), g.lambda_points.len());
    let mut best = MaxTracker::new();
    let mut n = 0;
    for wing in [Wing::A, Wing::B] {
        let (n_fixed, n_varied) = if wing == Wing::A { (na, nb) } else { (nb, na) };
        let at = |fixed: usize, varied: usize, l: usize| match wing {
            Wing::A => tables.at(fixed, varied, l),
            _ => tables.at(varied, fixed, l),
        };
        for fixed in 0..n_fixed {
            for l in 0..nl {
                for o in Outcome::ALL {
                    n += 1;
                    let v = |k: usize| marginal(at(fixed, k, l), wing).prob(o);
                    let (mut hi, mut lo) = (0, 0);
                    for k in 1..n_varied {
                        if v(k) > v(hi) {
                            hi = k;
                        }
                        if v(k) < v(lo) {
                            lo = k;
                        }
                    }
                    let d = (v(hi) - v(lo)).abs();
                    best.offer(d, || {
                        let (i, j, ri, rj) = match wing {
                            Wing::A => (fixed, hi, fixed, lo),
                            _ => (hi, fixed, lo, fixed),
                        };
                        let (oa, ob) = if wing == Wing::A { (Some(o), None) } else { (None, Some(o)) };
                        g.witness(DeviationKind::MarginalSpread, wing, i, j, Some(l), oa, ob, Some((ri, rj)))
                    });
                }
            }
        }
    }
    let (dev, w) = best.finish();
    ConditionReport::evaluated(Condition::ParameterIndependence, dev, tol, w, n, 0)
}

/// Visits every non-null conditioning event; returns (evaluated, skipped, min P).
fn for_each_conditional<T: Real>(
    tables: &Tables<T>,
    g: &AuditGrid<T>,
    mut f: impl FnMut(Wing, usize, usize, usize, Outcome, &JointOutcomeDist<T>, OutcomeDist<T>),
) -> (usize, usize, T) {
    let (mut evaluated, mut skipped, mut p_min) = (0, 0, T::one());
    for wing in [Wing::A, Wing::B] {
        for i in 0..g.settings_a.len() {
            for j in 0..g.settings_b.len() {
                for l in 0..g.lambda_points.len() {
                    let joint = tables.at(i, j, l);
                    for given in Outcome::ALL {
                        match conditional(joint, wing, given) {
                            Some(c) => {
                                evaluated += 1;
                                p_min = p_min.min(conditioning_prob(joint, wing, given));
                                f(wing, i, j, l, given, joint, c);
                            }
                            None => skipped += 1,
                        }
                    }
                }
            }
        }
    }
    (evaluated, skipped, p_min)
}

/// `P(A|â,b̂,B,λ) = P(A|â,b̂,λ)` (and mirrored).
pub fn check_outcome_independence<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let tables = Tables::evaluate(t, g)?;
    outcome_independence(&tables, g, tol).map(|(r, _)| r)
}

fn outcome_independence<T: Real>(tables: &Tables<T>, g: &AuditGrid<T>, tol: T) -> Result<(ConditionReport<T>, T)> {
    let mut best = MaxTracker::new();
    let (evaluated, skipped, p_min) = for_each_conditional(tables, g, |wing, i, j, l, given, joint, c| {
        let m = marginal(joint, wing);
        for o in Outcome::ALL {
            let d = (c.prob(o) - m.prob(o)).abs();
            best.offer(d, || {
                let (oa, ob) = split(wing, o, given);
                g.witness(DeviationKind::ConditionalVsOwnMarginal, wing, i, j, Some(l), oa, ob, None)
            });
        }
    });
    if evaluated == 0 {
        return Err(Error::DegenerateGrid(Condition::OutcomeIndependence));
    }
    let (dev, w) = best.finish();
    Ok((ConditionReport::evaluated(Condition::OutcomeIndependence, dev, tol, w, evaluated, skipped), p_min))
}

/// `P(A|â,b̂,B,λ) = P(A|â,λ)` (and mirrored), with `P(A|â,λ)` the kernel
/// marginal at `b̂₀`. When parameter independence fails the reference is
/// ill-defined, so own-marginal deviations and the parameter-independence
/// spread are folded into the maximum as well.
pub fn check_strong_locality<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let tables = Tables::evaluate(t, g)?;
    strong_locality(&tables, g, tol)
}

fn strong_locality<T: Real>(tables: &Tables<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let mut best = MaxTracker::new();
    let (evaluated, skipped, _) = for_each_conditional(tables, g, |wing, i, j, l, given, _, c| {
        let (reference, r) = match wing {
            Wing::A => (tables.at(i, 0, l), (i, 0)),
            _ => (tables.at(0, j, l), (0, j)),
        };
        let m = marginal(reference, wing);
        for o in Outcome::ALL {
            let d = (c.prob(o) - m.prob(o)).abs();
            best.offer(d, || {
                let (oa, ob) = split(wing, o, given);
                g.witness(DeviationKind::ConditionalVsReference, wing, i, j, Some(l), oa, ob, Some(r))
            });
        }
    });
    if evaluated == 0 {
        return Err(Error::DegenerateGrid(Condition::StrongLocality));
    }
    let pi = parameter_independence(tables, g, tol);
    let mut note = None;
    if !pi.pass {
        let (oi, _) = outcome_independence(tables, g, tol)?;
        for r in [oi, pi] {
            if let Some(w) = r.witness {
                best.offer(w.deviation, || w);
            }
        }
        note = Some("parameter independence fails: reference marginal is setting-dependent; own-marginal and spread deviations folded in".to_string());
    }
    let (dev, w) = best.finish();
    let mut report = ConditionReport::evaluated(Condition::StrongLocality, dev, tol, w, evaluated, skipped);
    report.note = note;
    Ok(report)
}

/// λ-averaged `P(A|â,b̂)` and `P(B|â,b̂)` under `P(λ|â,b̂)`.
fn averaged_marginals<T: Real>(
    t: &Theory<T>,
    g: &AuditGrid<T>,
    a: &Direction<T>,
    b: &Direction<T>,
) -> Result<(OutcomeDist<T>, OutcomeDist<T>)> {
    let owned;
    let points: &[(LambdaPoint<T>, T)] = if t.is_setting_dependent() {
        owned = comparable_ensemble(t, g, a, b)?;
        owned.points()
    } else {
        &g.lambda_points
    };
    let (mut pa, mut pb, mut total) = (T::zero(), T::zero(), T::zero());
    for (p, w) in points {
        let j = t.joint(a, b, p)?;
        pa = pa + *w * j.marginal_a().plus;
        pb = pb + *w * j.marginal_b().plus;
        total = total + *w;
    }
    let (pa, pb) = (pa / total, pb / total);
    Ok((
        OutcomeDist { plus: pa, minus: T::one() - pa },
        OutcomeDist { plus: pb, minus: T::one() - pb },
    ))
}

/// `P(λ|â,b̂)` as a finite list; sampled laws are drawn with the grid seed.
fn comparable_ensemble<T: Real>(
    t: &Theory<T>,
    g: &AuditGrid<T>,
    a: &Direction<T>,
    b: &Direction<T>,
) -> Result<FiniteEnsemble<T>> {
    let e = t.ensemble_for(a, b).map_err(|e| match e {
        Error::LambdaMismatch { point, space } => {
            Error::IncomparableEnsembles(format!("{point} is outside {space}"))
        }
        other => other,
    })?;
    match e.as_ref() {
        LambdaEnsemble::Finite(f) => Ok(f.clone()),
        LambdaEnsemble::Sampler(s) => s.materialize(g.lambda_samples, g.seed, Stream::GridLambda),
    }
}

/// Ensemble-level marginal independence from the distant setting.
pub fn check_no_signaling<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let (na, nb) = (g.settings_a.len(), g.settings_b.len());
    let cells: Vec<(OutcomeDist<T>, OutcomeDist<T>)> = (0..na * nb)
        .into_par_iter()
        .map(|k| averaged_marginals(t, g, &g.settings_a[k / nb], &g.settings_b[k % nb]))
        .collect::<Result<_>>()?;
    let m = |i: usize, j: usize, wing: Wing| match wing {
        Wing::A => cells[i * nb + j].0,
        _ => cells[i * nb + j].1,
    };
    let mut best = MaxTracker::new();
    let mut n = 0;
    for wing in [Wing::A, Wing::B] {
        let (n_fixed, n_varied) = if wing == Wing::A { (na, nb) } else { (nb, na) };
        for fixed in 0..n_fixed {
            for o in Outcome::ALL {
                n += 1;
                let v = |k: usize| match wing {
                    Wing::A => m(fixed, k, wing).prob(o),
                    _ => m(k, fixed, wing).prob(o),
                };
                let (mut hi, mut lo) = (0, 0);
                for k in 1..n_varied {
                    if v(k) > v(hi) {
                        hi = k;
                    }
                    if v(k) < v(lo) {
                        lo = k;
                    }
                }
                best.offer((v(hi) - v(lo)).abs(), || {
                    let (i, j, r) = match wing {
                        Wing::A => (fixed, hi, (fixed, lo)),
                        _ => (hi, fixed, (lo, fixed)),
                    };
                    let (oa, ob) = if wing == Wing::A { (Some(o), None) } else { (None, Some(o)) };
                    g.witness(DeviationKind::AveragedMarginalSpread, wing, i, j, None, oa, ob, Some(r))
                });
            }
        }
    }
    let (dev, w) = best.finish();
    Ok(ConditionReport::evaluated(Condition::NoSignaling, dev, tol, w, n, 0))
}

/// `½ Σ_λ |P(λ) − Q(λ)|` over the union of supports.
pub fn total_variation<T: Real>(p: &FiniteEnsemble<T>, q: &FiniteEnsemble<T>) -> T {
    let mut seen: Vec<LambdaPoint<T>> = Vec::new();
    let mut sum = T::zero();
    for (x, _) in p.points().iter().chain(q.points()) {
        if seen.contains(x) {
            continue;
        }
        seen.push(*x);
        sum = sum + (p.weight_of(x) - q.weight_of(x)).abs();
    }
    sum * T::lit(0.5)
}

/// Largest total-variation distance between `P(λ|â,b̂)` across the grid.
pub fn check_measurement_independence<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<ConditionReport<T>> {
    let (na, nb) = (g.settings_a.len(), g.settings_b.len());
    if !t.is_setting_dependent() {
        return Ok(ConditionReport::evaluated(Condition::MeasurementIndependence, T::zero(), tol, None, na * nb, 0)
            .with_note("P(λ) does not depend on the settings by construction"));
    }
    let ensembles: Vec<FiniteEnsemble<T>> = (0..na * nb)
        .into_par_iter()
        .map(|k| comparable_ensemble(t, g, &g.settings_a[k / nb], &g.settings_b[k % nb]))
        .collect::<Result<_>>()?;
    let mut best = MaxTracker::new();
    let mut n = 0;
    for k in 0..ensembles.len() {
        for r in (k + 1)..ensembles.len() {
            n += 1;
            let d = total_variation(&ensembles[k], &ensembles[r]);
            best.offer(d, || {
                g.witness(DeviationKind::EnsembleDistance, Wing::Both, k / nb, k % nb, None, None, None, Some((r / nb, r % nb)))
            });
        }
    }
    let (dev, w) = best.finish();
    Ok(ConditionReport::evaluated(Condition::MeasurementIndependence, dev, tol, w, n.max(1), 0))
}

/// Slack constants of the quantified decomposition theorem.
///
/// With `δ` the common tolerance and `z` the null-event threshold:
/// PI ≤ δ ∧ OI ≤ δ ⇒ factorizability ≤ 3δ + 4z; strong locality ≤ δ ⇒
/// factorizability ≤ 3δ + 4z; factorizability ≤ δ ⇒ PI ≤ 4δ and
/// OI ≤ (5 + 4δ)·δ / p_min, with `p_min` the smallest non-null
/// conditioning probability on the grid.
pub const FORWARD_SLACK: f64 = 3.0;
pub const PI_BACKWARD_SLACK: f64 = 4.0;
pub const OI_BACKWARD_SLACK: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DecompositionReport<T> {
    pub strong_locality: ConditionReport<T>,
    pub parameter_independence: ConditionReport<T>,
    pub outcome_independence: ConditionReport<T>,
    pub factorizability: ConditionReport<T>,
    /// `PI ∧ OI ⇒ factorizability` within the forward slack.
    pub forward_holds: bool,
    /// `factorizability ⇒ PI ∧ OI` within the backward slack.
    pub backward_holds: bool,
    /// `strong locality ⇒ factorizability` within the forward slack.
    pub strong_implies_factorizable: bool,
    /// `factorizability.pass == (PI.pass ∧ OI.pass)` at the bare tolerance.
    pub verdicts_agree: bool,
    pub min_conditioning_probability: T,
    pub equivalence_holds: bool,
}

/// Runs the four per-λ auditors and checks the decomposition
/// strong locality ⇔ factorizability ⇔ parameter ∧ outcome independence.
pub fn verify_decomposition<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<DecompositionReport<T>> {
    let tables = Tables::evaluate(t, g)?;
    let sl = strong_locality(&tables, g, tol)?;
    let pi = parameter_independence(&tables, g, tol);
    let (oi, p_min) = outcome_independence(&tables, g, tol)?;
    let fact = factorizability(&tables, g, tol);

    let z = T::exact_tol();
    let forward_bound = T::lit(FORWARD_SLACK) * tol + T::lit(4.0) * z;
    let forward_holds = !(pi.pass && oi.pass) || fact.max_deviation <= forward_bound;
    let strong_implies_factorizable = !sl.pass || fact.max_deviation <= forward_bound;
    let oi_bound = (T::lit(OI_BACKWARD_SLACK) + T::lit(4.0) * tol) * tol / p_min;
    let backward_holds = !fact.pass
        || (pi.max_deviation <= T::lit(PI_BACKWARD_SLACK) * tol && oi.max_deviation <= oi_bound);
    let verdicts_agree = fact.pass == (pi.pass && oi.pass);
    Ok(DecompositionReport {
        equivalence_holds: forward_holds && backward_holds && strong_implies_factorizable,
        strong_locality: sl,
        parameter_independence: pi,
        outcome_independence: oi,
        factorizability: fact,
        forward_holds,
        backward_holds,
        strong_implies_factorizable,
        verdicts_agree,
        min_conditioning_probability: p_min,
    })
}

/// Runs every theory-level auditor in a fixed order.
pub fn audit_all<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, tol: T) -> Result<(Vec<ConditionReport<T>>, DecompositionReport<T>)> {
    let d = verify_decomposition(t, g, tol)?;
    let reports = vec![
        d.strong_locality.clone(),
        d.factorizability.clone(),
        d.parameter_independence.clone(),
        d.outcome_independence.clone(),
        check_no_signaling(t, g, tol)?,
        check_measurement_independence(t, g, tol)?,
    ];
    Ok((reports, d))
}

/// Re-evaluates a witness from the theory alone (plus the grid's λ list and
/// seed for ensemble-level quantities). Returns the deviation it certifies.
pub fn replay_witness<T: Real>(t: &Theory<T>, g: &AuditGrid<T>, w: &Witness<T>) -> Result<T> {
    let need = |x: Option<Outcome>| {
        x.ok_or_else(|| Error::InvalidParameter("witness lacks an outcome".into()))
    };
    let reference = || {
        w.reference.ok_or_else(|| Error::InvalidParameter("witness lacks a reference setting".into()))
    };
    let lambda = || w.lambda.ok_or_else(|| Error::InvalidParameter("witness lacks λ".into()));
    let (target, given) = match w.wing {
        Wing::A => (w.outcome_a, w.outcome_b),
        _ => (w.outcome_b, w.outcome_a),
    };
    match w.kind {
        DeviationKind::JointVsLocalProduct => {
            let (r, l) = (reference()?, lambda()?);
            let joint = t.joint(&w.a, &w.b, &l)?;
            let rb = t.joint(&w.a, &r.b, &l)?;
            let ra = t.joint(&r.a, &w.b, &l)?;
            Ok(joint_vs_local_product(&joint, &rb, &ra, need(w.outcome_a)?, need(w.outcome_b)?))
        }
        DeviationKind::ConditionalVsReference | DeviationKind::ConditionalVsOwnMarginal => {
            let l = lambda()?;
            let joint = t.joint(&w.a, &w.b, &l)?;
            let c = conditional(&joint, w.wing, need(given)?).ok_or(Error::ZeroConditioningEvent)?;
            let m = if w.kind == DeviationKind::ConditionalVsReference {
                let r = reference()?;
                let rj = match w.wing {
                    Wing::A => t.joint(&w.a, &r.b, &l)?,
                    _ => t.joint(&r.a, &w.b, &l)?,
                };
                marginal(&rj, w.wing)
            } else {
                marginal(&joint, w.wing)
            };
            let o = need(target)?;
            Ok((c.prob(o) - m.prob(o)).abs())
        }
        DeviationKind::MarginalSpread => {
            let (r, l) = (reference()?, lambda()?);
            let o = need(target)?;
            let hi = marginal(&t.joint(&w.a, &w.b, &l)?, w.wing).prob(o);
            let lo = marginal(&t.joint(&r.a, &r.b, &l)?, w.wing).prob(o);
            Ok((hi - lo).abs())
        }
        DeviationKind::AveragedMarginalSpread => {
            let r = reference()?;
            let o = need(target)?;
            let pick = |m: (OutcomeDist<T>, OutcomeDist<T>)| match w.wing {
                Wing::A => m.0.prob(o),
                _ => m.1.prob(o),
            };
            let hi = pick(averaged_marginals(t, g, &w.a, &w.b)?);
            let lo = pick(averaged_marginals(t, g, &r.a, &r.b)?);
            Ok((hi - lo).abs())
        }
        DeviationKind::EnsembleDistance => {
            let r = reference()?;
            Ok(total_variation(&comparable_ensemble(t, g, &w.a, &w.b)?, &comparable_ensemble(t, g, &r.a, &r.b)?))
        }
        DeviationKind::EmpiricalMarginalZ | DeviationKind::EmpiricalCorrelationZ => Err(
            Error::InvalidParameter("empirical witnesses are replayed from their trial log".into()),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theories::*;

    fn grid(t: &Theory<f64>) -> AuditGrid<f64> {
        AuditGrid::for_theory(t, &GridOptions::default()).unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let g = grid(&qm_singlet_theory());
        assert_eq!(g.settings_a.len(), 12);
        assert_eq!(g.lambda_points.len(), 1);
        let c = grid(&classical_antiparallel_theory(LambdaMode::Sampler { seed: 1 }).unwrap());
        assert_eq!(c.lambda_points.len(), 512);
    }

    #[test]
    fn grid_validation() {
        let d = vec![Direction::in_plane(0.0)];
        assert!(AuditGrid::new(vec![], d.clone(), vec![(LambdaPoint::Singleton, 1.0)]).is_err());
        assert!(AuditGrid::new(d.clone(), d.clone(), vec![(LambdaPoint::Singleton, 0.0)]).is_err());
    }

    #[test]
    fn singlet_strong_locality_fails_by_half() {
        let t = qm_singlet_theory();
        let r = check_strong_locality(&t, &grid(&t), 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.max_deviation - 0.5).abs() < 1e-12);
        let w = r.witness.unwrap();
        assert_eq!(w.a, w.b);
    }

    #[test]
    fn singlet_factorizability_deviation_is_quarter() {
        let t = qm_singlet_theory();
        let r = check_factorizability(&t, &grid(&t), 1e-9).unwrap();
        assert!((r.max_deviation - 0.25).abs() < 1e-12);
    }

    #[test]
    fn signaling_toy_parameter_spread_is_one() {
        let t = signaling_toy_theory();
        let g = grid(&t);
        let r = check_parameter_independence(&t, &g, 1e-9).unwrap();
        assert!((r.max_deviation - 1.0).abs() < 1e-12);
        let w = r.witness.clone().unwrap();
        assert!((replay_witness(&t, &g, &w).unwrap() - r.max_deviation).abs() == 0.0);
        let sl = check_strong_locality(&t, &g, 1e-9).unwrap();
        assert!(sl.max_deviation >= r.max_deviation);
        assert!(sl.note.is_some());
        assert!(!check_no_signaling(&t, &g, 1e-9).unwrap().pass);
    }

    #[test]
    fn null_conditioning_events_are_skipped_and_counted() {
        let t = preassigned_pairs_theory::<f64>();
        let g = AuditGrid::new(
            vec![Direction::in_plane(0.0)],
            vec![Direction::in_plane(0.0)],
            vec![(LambdaPoint::Pair(Outcome::Plus, Outcome::Minus), 1.0)],
        )
        .unwrap();
        let r = check_outcome_independence(&t, &g, 1e-9).unwrap();
        assert_eq!(r.skipped_points, 2);
        assert_eq!(r.evaluated_points, 2);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn measurement_independence_examples() {
        let c = classical_antiparallel_theory::<f64>(LambdaMode::default()).unwrap();
        let r = check_measurement_independence(&c, &grid(&c), 1e-9).unwrap();
        assert!(r.pass && r.max_deviation == 0.0);
        let s = superdeterministic_theory::<f64>();
        let g = grid(&s);
        let r = check_measurement_independence(&s, &g, 1e-9).unwrap();
        assert!(!r.pass && r.max_deviation > 0.0);
        let w = r.witness.unwrap();
        assert_eq!(replay_witness(&s, &g, &w).unwrap(), r.max_deviation);
        let constant = registry::build::<f64>("preassigned-pairs", &["inject:constant".into()]).unwrap();
        let r = check_measurement_independence(&constant, &grid(&constant), 1e-9).unwrap();
        assert!(r.pass && r.max_deviation == 0.0);
    }

    #[test]
    fn incomparable_ensembles() {
        let src = preassigned_pairs_theory::<f64>();
        let bad = inject_setting_dependence(
            src,
            std::sync::Arc::new(|_: &Direction<f64>, _: &Direction<f64>| {
                Ok(LambdaEnsemble::Finite(FiniteEnsemble::single(LambdaPoint::Index(0))))
            }),
        );
        let g = grid(&bad);
        assert!(matches!(
            check_measurement_independence(&bad, &g, 1e-9),
            Err(Error::IncomparableEnsembles(_))
        ));
    }

    #[test]
    fn total_variation_of_disjoint_supports_is_one() {
        let p = FiniteEnsemble::single(LambdaPoint::<f64>::Index(0));
        let q = FiniteEnsemble::single(LambdaPoint::<f64>::Index(1));
        assert_eq!(total_variation(&p, &q), 1.0);
        assert_eq!(total_variation(&p, &p), 0.0);
    }
}
