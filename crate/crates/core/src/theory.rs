//! Hidden states, their ensembles, and the kernel abstraction that makes a
//! candidate theory auditable.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::dist::JointOutcomeDist;
use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::quadrature::sphere_product_rule;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

/// A hidden state λ ("the state of the particle pair").
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum LambdaPoint<T> {
    /// The only state of a theory whose λ-space is one point (a wave function).
    Singleton,
    /// A spin direction.
    Spin(Direction<T>),
    /// Index into a list of deterministic strategies.
    Strategy(usize),
    /// Index of a partition cell after coarse-graining.
    Cell(usize),
    /// A pre-assigned outcome pair.
    Pair(Outcome, Outcome),
    /// Index into an arbitrary finite λ-space.
    Index(usize),
}

impl<T: Real> fmt::Display for LambdaPoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaPoint::Singleton => write!(f, "singleton"),
            LambdaPoint::Spin(d) => write!(f, "spin({}, {}, {})", d.x(), d.y(), d.z()),
            LambdaPoint::Strategy(k) => write!(f, "strategy[{k}]"),
            LambdaPoint::Cell(k) => write!(f, "cell[{k}]"),
            LambdaPoint::Pair(a, b) => write!(f, "pair({a}, {b})"),
            LambdaPoint::Index(k) => write!(f, "index[{k}]"),
        }
    }
}

/// Declared shape of a theory's λ-space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpace {
    Singleton,
    Sphere,
    Strategies(usize),
    Cells(Vec<String>),
    Pairs,
    Indexed(usize),
}

impl LambdaSpace {
    pub fn contains<T: Real>(&self, p: &LambdaPoint<T>) -> bool {
        match (self, p) {
            (LambdaSpace::Singleton, LambdaPoint::Singleton) => true,
            (LambdaSpace::Sphere, LambdaPoint::Spin(_)) => true,
            (LambdaSpace::Strategies(n), LambdaPoint::Strategy(k)) => k < n,
            (LambdaSpace::Cells(names), LambdaPoint::Cell(k)) => *k < names.len(),
            (LambdaSpace::Pairs, LambdaPoint::Pair(..)) => true,
            (LambdaSpace::Indexed(n), LambdaPoint::Index(k)) => k < n,
            _ => false,
        }
    }

    pub fn check<T: Real>(&self, p: &LambdaPoint<T>) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::LambdaMismatch { point: p.to_string(), space: format!("{self:?}") })
        }
    }
}

/// A finite distribution over hidden states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FiniteEnsemble<T> {
    points: Vec<(LambdaPoint<T>, T)>,
}

impl<T: Real> FiniteEnsemble<T> {
    /// Weights must be nonnegative and sum to one.
    pub fn new(points: Vec<(LambdaPoint<T>, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empty λ-ensemble".into()));
        }
        let mut total = T::zero();
        for (_, w) in &points {
            if !w.is_finite() || *w < T::zero() {
                return Err(Error::InvalidParameter(format!("negative λ weight {w}")));
            }
            total = total + *w;
        }
        // Summation error grows with the support size.
        let tol = T::exact_tol().max(T::epsilon() * T::lit(points.len() as f64));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!("λ weights sum to {total}")));
        }
        Ok(Self { points })
    }

    pub fn single(p: LambdaPoint<T>) -> Self {
        Self { points: vec![(p, T::one())] }
    }

    /// Equal weights over the given points.
    pub fn uniform(points: Vec<LambdaPoint<T>>) -> Result<Self> {
        let w = T::one() / T::lit(points.len().max(1) as f64);
        Self::new(points.into_iter().map(|p| (p, w)).collect())
    }

    pub fn points(&self) -> &[(LambdaPoint<T>, T)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Draws one point given a uniform variate `u ∈ [0, 1)`.
    pub fn pick(&self, u: T) -> &LambdaPoint<T> {
        let mut acc = T::zero();
        let mut last = &self.points[0].0;
        for (p, w) in &self.points {
            if *w <= T::zero() {
                continue;
            }
            acc = acc + *w;
            last = p;
            if u < acc {
                return p;
            }
        }
        last
    }

    /// Weight attached to a point (summed over duplicates).
    pub fn weight_of(&self, p: &LambdaPoint<T>) -> T {
        self.points.iter().filter(|(q, _)| q == p).map(|(_, w)| *w).sum()
    }
}

/// Distributions a seeded sampler can draw from. Each variant is also the
/// exact descriptor that allows the sampler to be replaced by a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Directions uniform on the unit sphere.
    UniformSphere,
}

/// A seeded generator of hidden states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub seed: u64,
    /// Sample count used when an ensemble average has to be estimated.
    pub samples: usize,
}

impl Sampler {
    pub const DEFAULT_SAMPLES: usize = 1 << 16;

    pub fn uniform_sphere(seed: u64) -> Self {
        Self { kind: SamplerKind::UniformSphere, seed, samples: Self::DEFAULT_SAMPLES }
    }

    pub fn draw<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> LambdaPoint<T> {
        match self.kind {
            SamplerKind::UniformSphere => loop {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                if let Ok(d) = Direction::normalized(T::lit(x), T::lit(y), T::lit(z)) {
                    break LambdaPoint::Spin(d);
                }
            },
        }
    }

    /// `n` independent draws addressed by `(seed, stream, 0..n)`, equally weighted.
    pub fn materialize<T: Real>(&self, n: usize, seed: u64, stream: Stream) -> Result<FiniteEnsemble<T>> {
        if n == 0 {
            return Err(Error::InvalidParameter("zero λ samples requested".into()));
        }
        let points = (0..n as u64)
            .map(|k| self.draw(&mut stream_rng(seed, stream, k)))
            .collect();
        FiniteEnsemble::uniform(points)
    }

    /// Deterministic quadrature replacing the sampler (same exact moments).
    pub fn quadrature<T: Real>(&self, nodes: usize) -> Result<FiniteEnsemble<T>> {
        match self.kind {
            SamplerKind::UniformSphere => sphere_quadrature(nodes),
        }
    }
}

/// Uniform-sphere quadrature with `nodes` azimuthal points around the
/// normal of the measurement plane and `nodes / 2` polar points.
pub fn sphere_quadrature<T: Real>(nodes: usize) -> Result<FiniteEnsemble<T>> {
    if nodes < 2 {
        return Err(Error::InvalidParameter(format!("quadrature needs ≥ 2 nodes, got {nodes}")));
    }
    let points = sphere_product_rule(nodes, nodes / 2)
        .into_iter()
        .map(|(s, w)| {
            let d = Direction::normalized(T::lit(s[0]), T::lit(s[1]), T::lit(s[2]))?;
            Ok((LambdaPoint::Spin(d), T::lit(w)))
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteEnsemble::new(points)
}

/// `P(λ)`: either an explicit finite list or a seeded sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum LambdaEnsemble<T> {
    Finite(FiniteEnsemble<T>),
    Sampler(Sampler),
}

impl<T: Real> LambdaEnsemble<T> {
    pub fn as_finite(&self) -> Option<&FiniteEnsemble<T>> {
        match self {
            LambdaEnsemble::Finite(f) => Some(f),
            LambdaEnsemble::Sampler(_) => None,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LambdaPoint<T> {
        match self {
            LambdaEnsemble::Finite(f) => *f.pick(T::lit(rng.gen::<f64>())),
            LambdaEnsemble::Sampler(s) => s.draw(rng),
        }
    }
}

/// Finite list of admissible settings for each wing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SettingSet<T> {
    pub a: Vec<Direction<T>>,
    pub b: Vec<Direction<T>>,
}

impl<T: Real> SettingSet<T> {
    fn lookup(list: &[Direction<T>], d: &Direction<T>) -> Result<usize> {
        let tol = T::analytic_tol();
        list.iter().position(|s| s.approx_eq(d, tol)).ok_or(Error::UnknownSetting {
            x: d.x().to_f64_lossy(),
            y: d.y().to_f64_lossy(),
            z: d.z().to_f64_lossy(),
        })
    }

    pub fn index_a(&self, d: &Direction<T>) -> Result<usize> {
        Self::lookup(&self.a, d)
    }

    pub fn index_b(&self, d: &Direction<T>) -> Result<usize> {
        Self::lookup(&self.b, d)
    }
}

/// `(â, b̂, λ) -> P(A, B | â, b̂, λ)`.
pub type Kernel<T> =
    Arc<dyn Fn(&Direction<T>, &Direction<T>, &LambdaPoint<T>) -> Result<JointOutcomeDist<T>> + Send + Sync>;

/// `(â, b̂) -> P(λ | â, b̂)` for theories violating measurement independence.
pub type SettingLaw<T> =
    Arc<dyn Fn(&Direction<T>, &Direction<T>) -> Result<LambdaEnsemble<T>> + Send + Sync>;

/// A candidate theory: a λ-ensemble plus a kernel.
#[derive(Clone)]
pub struct Theory<T: Real> {
    name: String,
    space: LambdaSpace,
    ensemble: LambdaEnsemble<T>,
    kernel: Kernel<T>,
    setting_law: Option<SettingLaw<T>>,
    settings: Option<SettingSet<T>>,
}

impl<T: Real> fmt::Debug for Theory<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Theory")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("setting_dependent", &self.setting_law.is_some())
            .finish_non_exhaustive()
    }
}

impl<T: Real> Theory<T> {
    pub fn new(
        name: impl Into<String>,
        space: LambdaSpace,
        ensemble: LambdaEnsemble<T>,
        kernel: Kernel<T>,
    ) -> Result<Self> {
        if let LambdaEnsemble::Finite(f) = &ensemble {
            for (p, _) in f.points() {
                space.check(p)?;
            }
        } else if space != LambdaSpace::Sphere {
            return Err(Error::InvalidParameter(
                "sampled ensembles are only defined on the sphere".into(),
            ));
        }
        Ok(Self { name: name.into(), space, ensemble, kernel, setting_law: None, settings: None })
    }

    /// Restricts the theory to a finite setting list per wing.
    pub fn with_settings(mut self, settings: SettingSet<T>) -> Self {
        self.settings = Some(settings);
        self
    }

    pub fn with_setting_law(mut self, law: SettingLaw<T>) -> Self {
        self.setting_law = Some(law);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lambda_space(&self) -> &LambdaSpace {
        &self.space
    }

    /// The setting-independent ensemble (the source distribution).
    pub fn lambda_ensemble(&self) -> &LambdaEnsemble<T> {
        &self.ensemble
    }

    pub fn settings(&self) -> Option<&SettingSet<T>> {
        self.settings.as_ref()
    }

    pub fn setting_law(&self) -> Option<&SettingLaw<T>> {
        self.setting_law.as_ref()
    }

    pub fn is_setting_dependent(&self) -> bool {
        self.setting_law.is_some()
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    /// `P(A, B | â, b̂, λ)`.
    pub fn joint(&self, a: &Direction<T>, b: &Direction<T>, lambda: &LambdaPoint<T>) -> Result<JointOutcomeDist<T>> {
        self.space.check(lambda)?;
        (self.kernel)(a, b, lambda)
    }

    /// `P(λ | â, b̂)`: the setting law when present, the source ensemble otherwise.
    pub fn ensemble_for(&self, a: &Direction<T>, b: &Direction<T>) -> Result<Cow<'_, LambdaEnsemble<T>>> {
        match &self.setting_law {
            Some(law) => {
                let e = law(a, b)?;
                if let LambdaEnsemble::Finite(f) = &e {
                    for (p, _) in f.points() {
                        self.space.check(p)?;
                    }
                }
                Ok(Cow::Owned(e))
            }
            None => Ok(Cow::Borrowed(&self.ensemble)),
        }
    }

    /// Ensemble-level `P(A, B | â, b̂)`; exact for finite ensembles.
    pub fn ensemble_joint(&self, a: &Direction<T>, b: &Direction<T>) -> Result<JointOutcomeDist<T>> {
        let e = self.ensemble_for(a, b)?;
        match e.as_ref() {
            LambdaEnsemble::Finite(f) => {
                let tables = f
                    .points()
                    .iter()
                    .map(|(p, w)| Ok((*w, self.joint(a, b, p)?)))
                    .collect::<Result<Vec<_>>>()?;
                JointOutcomeDist::mixture(tables.iter().map(|(w, t)| (*w, t)))
            }
            LambdaEnsemble::Sampler(s) => {
                let f: FiniteEnsemble<T> = s.materialize(s.samples, s.seed, Stream::EnsembleAverage)?;
                let tables = f
                    .points()
                    .iter()
                    .map(|(p, w)| Ok((*w, self.joint(a, b, p)?)))
                    .collect::<Result<Vec<_>>>()?;
                JointOutcomeDist::mixture(tables.iter().map(|(w, t)| (*w, t)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_membership() {
        let p: LambdaPoint<f64> = LambdaPoint::Strategy(3);
        assert!(LambdaSpace::Strategies(4).contains(&p));
        assert!(!LambdaSpace::Strategies(3).contains(&p));
        assert!(!LambdaSpace::Sphere.contains(&p));
        assert!(LambdaSpace::Singleton.check(&p).is_err());
    }

    #[test]
    fn ensemble_validation() {
        let s = |k| LambdaPoint::<f64>::Index(k);
        assert!(FiniteEnsemble::new(vec![(s(0), 0.5), (s(1), 0.5)]).is_ok());
        assert!(FiniteEnsemble::new(vec![(s(0), 0.5), (s(1), 0.6)]).is_err());
        assert!(FiniteEnsemble::new(vec![(s(0), 1.5), (s(1), -0.5)]).is_err());
        assert!(FiniteEnsemble::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn pick_respects_cumulative_weights() {
        let e = FiniteEnsemble::new(vec![
            (LambdaPoint::<f64>::Index(0), 0.25),
            (LambdaPoint::Index(1), 0.0),
            (LambdaPoint::Index(2), 0.75),
        ])
        .unwrap();
        assert_eq!(*e.pick(0.1), LambdaPoint::Index(0));
        assert_eq!(*e.pick(0.25), LambdaPoint::Index(2));
        assert_eq!(*e.pick(0.999_999), LambdaPoint::Index(2));
    }

    #[test]
    fn sphere_samples_are_unit_and_reproducible() {
        let s = Sampler::uniform_sphere(11);
        let a: FiniteEnsemble<f64> = s.materialize(64, 11, Stream::GridLambda).unwrap();
        let b: FiniteEnsemble<f64> = s.materialize(64, 11, Stream::GridLambda).unwrap();
        assert_eq!(a, b);
        let mean_z: f64 = a
            .points()
            .iter()
            .map(|(p, w)| match p {
                LambdaPoint::Spin(d) => d.z() * w,
                _ => unreachable!(),
            })
            .sum();
        assert!(mean_z.abs() < 0.5);
    }

    #[test]
    fn quadrature_requires_two_nodes() {
        assert!(sphere_quadrature::<f64>(1).is_err());
        assert_eq!(sphere_quadrature::<f64>(8).unwrap().len(), 8 * 4);
    }
}
