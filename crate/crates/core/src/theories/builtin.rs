//! Candidate theories: the quantum singlet, the classical anti-parallel
//! spin model, the tachyon model, Einstein's boxes, and local deterministic
//! strategy mixtures.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::dist::{JointOutcomeDist, OutcomeDist};
use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::scalar::Real;
use crate::theory::{
    sphere_quadrature, FiniteEnsemble, LambdaEnsemble, LambdaPoint, LambdaSpace, Sampler,
    SettingLaw, SettingSet, Theory,
};

/// Default azimuthal node count for the classical model's quadrature. A
/// multiple of 32 keeps sign integrals exact on the π/16 search grid.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

fn unexpected<T: Real>(lambda: &LambdaPoint<T>, space: &str) -> Error {
    Error::LambdaMismatch { point: lambda.to_string(), space: space.into() }
}

/// `P(A, B | â, b̂) = (1 − A·B·â·b̂) / 4`.
fn singlet_table<T: Real>(a: &Direction<T>, b: &Direction<T>) -> JointOutcomeDist<T> {
    let c = a.cos_between(b);
    let quarter = T::lit(0.25);
    let entry = |x: Outcome, y: Outcome| {
        let ab = T::lit(f64::from(x.value() * y.value()));
        (T::one() - ab * c) * quarter
    };
    JointOutcomeDist::from_fn(entry).expect("singlet entries lie in [0, 1/2]")
}

/// Orthodox quantum mechanics for the spin singlet; λ is the wave function.
pub fn qm_singlet_theory<T: Real>() -> Theory<T> {
    Theory::new(
        "qm-singlet",
        LambdaSpace::Singleton,
        LambdaEnsemble::Finite(FiniteEnsemble::single(LambdaPoint::Singleton)),
        Arc::new(|a, b, _| Ok(singlet_table(a, b))),
    )
    .expect("singleton ensemble")
}

/// How the classical model's uniform spin distribution is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Seeded uniform sampling of the sphere.
    Sampler { seed: u64 },
    /// Deterministic product quadrature (see [`sphere_quadrature`]).
    Quadrature { nodes: usize },
}

impl Default for LambdaMode {
    fn default() -> Self {
        LambdaMode::Quadrature { nodes: DEFAULT_QUADRATURE_NODES }
    }
}

/// Classical angular momenta aligned anti-parallel, `ŝ` uniform on the
/// sphere: `A = sign(â·ŝ)`, `B = sign(−b̂·ŝ)`, with `sign(0) = +1`.
pub fn classical_antiparallel_theory<T: Real>(mode: LambdaMode) -> Result<Theory<T>> {
    let ensemble = match mode {
        LambdaMode::Sampler { seed } => LambdaEnsemble::Sampler(Sampler::uniform_sphere(seed)),
        LambdaMode::Quadrature { nodes } => LambdaEnsemble::Finite(sphere_quadrature(nodes)?),
    };
    Theory::new(
        "classical-antiparallel",
        LambdaSpace::Sphere,
        ensemble,
        Arc::new(|a, b, lambda| match lambda {
            LambdaPoint::Spin(s) => {
                let out_a = Outcome::sign_of(a.dot(s));
                let out_b = Outcome::sign_of(-b.dot(s));
                Ok(JointOutcomeDist::point_mass(out_a, out_b))
            }
            other => Err(unexpected(other, "sphere")),
        }),
    )
}

/// Closed form of the classical model's correlation at angle `theta`
/// between the settings: `−1 + 2θ/π`.
pub fn classical_correlation_closed_form<T: Real>(theta: T) -> T {
    -T::one() + T::lit(2.0) * theta / T::PI()
}

/// Maudlin's toy model: the first particle to reach an apparatus (by
/// convention Bob's) flips a fair coin for `B`, then instantaneously
/// instructs the other to answer with `P(A | B) = (1 − A·B·â·b̂) / 2`.
///
/// Only the joint table is observable, so the ordering convention never
/// shows up in the kernel.
pub fn maudlin_tachyon_theory<T: Real>() -> Theory<T> {
    Theory::new(
        "maudlin-tachyon",
        LambdaSpace::Singleton,
        LambdaEnsemble::Finite(FiniteEnsemble::single(LambdaPoint::Singleton)),
        Arc::new(|a, b, _| {
            let c = a.cos_between(b);
            let half = T::lit(0.5);
            JointOutcomeDist::from_fn(|x, y| {
                let coin = half;
                let ab = T::lit(f64::from(x.value() * y.value()));
                let instructed = (T::one() - ab * c) * half;
                coin * instructed
            })
        }),
    )
    .expect("singleton ensemble")
}

/// Einstein's boxes: one α-particle, `n` counters. `A = +1` iff counter 1
/// registers, `B = +1` iff counter 2 registers; each counter registers with
/// probability `1/n` and never two at once. Settings are ignored.
pub fn einstein_boxes_theory<T: Real>(n_counters: usize) -> Result<Theory<T>> {
    if n_counters < 2 {
        return Err(Error::InvalidParameter(format!(
            "einstein boxes need at least 2 counters, got {n_counters}"
        )));
    }
    let p = T::one() / T::lit(n_counters as f64);
    let neither = T::one() - p - p;
    let table = JointOutcomeDist::new(T::zero(), p, p, neither)?;
    let name = format!("einstein-boxes:{n_counters}");
    Ok(Theory::new(
        name,
        LambdaSpace::Singleton,
        LambdaEnsemble::Finite(FiniteEnsemble::single(LambdaPoint::Singleton)),
        Arc::new(move |_, _, _| Ok(table)),
    )
    .expect("singleton ensemble"))
}

/// A local deterministic strategy: an outcome for every setting of each wing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LhvStrategy<T> {
    pub a: Vec<Outcome>,
    pub b: Vec<Outcome>,
    pub weight: T,
}

/// Mixture of local deterministic strategies over a finite setting set.
pub fn deterministic_lhv_theory<T: Real>(
    strategies: Vec<LhvStrategy<T>>,
    settings: SettingSet<T>,
) -> Result<Theory<T>> {
    if settings.a.is_empty() || settings.b.is_empty() {
        return Err(Error::InvalidParameter("empty setting set".into()));
    }
    for (k, s) in strategies.iter().enumerate() {
        if s.a.len() != settings.a.len() || s.b.len() != settings.b.len() {
            return Err(Error::InvalidParameter(format!(
                "strategy {k} is not total over the setting set"
            )));
        }
    }
    let ensemble = FiniteEnsemble::new(
        strategies.iter().enumerate().map(|(k, s)| (LambdaPoint::Strategy(k), s.weight)).collect(),
    )?;
    let n = strategies.len();
    let lookup = settings.clone();
    let strategies = Arc::new(strategies);
    let theory = Theory::new(
        "lhv-deterministic",
        LambdaSpace::Strategies(n),
        LambdaEnsemble::Finite(ensemble),
        Arc::new(move |a, b, lambda| match lambda {
            LambdaPoint::Strategy(k) => {
                let s = &strategies[*k];
                let i = lookup.index_a(a)?;
                let j = lookup.index_b(b)?;
                Ok(JointOutcomeDist::point_mass(s.a[i], s.b[j]))
            }
            other => Err(unexpected(other, "strategies")),
        }),
    )?;
    Ok(theory.with_settings(settings))
}

/// Built-in strategy mixture reaching `|S| = 2` on the standard settings
/// `a ∈ {0°, 90°}`, `b ∈ {45°, 135°}`. Bob also has a `0°` setting at which
/// the outcomes are perfectly anti-correlated with Alice's `0°`.
pub fn default_lhv_theory<T: Real>() -> Theory<T> {
    use Outcome::{Minus, Plus};
    let deg = |d: f64| Direction::in_plane_degrees(T::lit(d));
    let settings = SettingSet {
        a: vec![deg(0.0), deg(90.0)],
        b: vec![deg(45.0), deg(135.0), deg(0.0)],
    };
    let half = T::lit(0.5);
    let strategies = vec![
        LhvStrategy { a: vec![Plus, Plus], b: vec![Minus, Plus, Minus], weight: half },
        LhvStrategy { a: vec![Minus, Minus], b: vec![Plus, Minus, Plus], weight: half },
    ];
    deterministic_lhv_theory(strategies, settings).expect("valid built-in strategies")
}

/// λ is a pre-assigned outcome pair and the kernel simply reveals it.
/// Under a uniform λ distribution the outcomes are independent coins.
pub fn preassigned_pairs_theory<T: Real>() -> Theory<T> {
    let pairs = Outcome::ALL
        .iter()
        .flat_map(|&a| Outcome::ALL.iter().map(move |&b| LambdaPoint::Pair(a, b)))
        .collect();
    Theory::new(
        "preassigned-pairs",
        LambdaSpace::Pairs,
        LambdaEnsemble::Finite(FiniteEnsemble::uniform(pairs).expect("four points")),
        Arc::new(|_, _, lambda| match lambda {
            LambdaPoint::Pair(a, b) => Ok(JointOutcomeDist::point_mass(*a, *b)),
            other => Err(unexpected(other, "pairs")),
        }),
    )
    .expect("pair ensemble")
}

/// Setting law that draws the pre-assigned pair from the singlet joint
/// distribution at the settings actually chosen.
pub fn singlet_conspiracy_law<T: Real>() -> SettingLaw<T> {
    Arc::new(|a, b| {
        let table = singlet_table(a, b);
        let points = Outcome::ALL
            .iter()
            .flat_map(|&x| Outcome::ALL.iter().map(move |&y| (x, y)))
            .map(|(x, y)| (LambdaPoint::Pair(x, y), table.get(x, y)))
            .collect();
        Ok(LambdaEnsemble::Finite(FiniteEnsemble::new(points)?))
    })
}

/// Pre-assigned pairs whose distribution conspires with the settings.
pub fn superdeterministic_theory<T: Real>() -> Theory<T> {
    super::inject_setting_dependence(preassigned_pairs_theory(), singlet_conspiracy_law())
        .renamed("superdeterministic")
}

/// Hand-built kernel that violates parameter independence:
/// `P(A = +1 | â, b̂) = (1 + â·b̂) / 2`, `B` a fair coin independent of `A`.
pub fn signaling_toy_theory<T: Real>() -> Theory<T> {
    Theory::new(
        "signaling-toy",
        LambdaSpace::Singleton,
        LambdaEnsemble::Finite(FiniteEnsemble::single(LambdaPoint::Singleton)),
        Arc::new(|a, b, _| {
            let c = a.cos_between(b);
            let half = T::lit(0.5);
            let pa = OutcomeDist { plus: (T::one() + c) * half, minus: (T::one() - c) * half };
            let pb = OutcomeDist { plus: half, minus: half };
            Ok(JointOutcomeDist::product(&pa, &pb))
        }),
    )
    .expect("singleton ensemble")
}

/// Arbitrary finite kernel: `tables[i][j][l]` is the joint table at
/// settings `(settings.a[i], settings.b[j])` and hidden state `Index(l)`.
pub fn tabulated_theory<T: Real>(
    name: impl Into<String>,
    settings: SettingSet<T>,
    lambda_weights: Vec<T>,
    tables: Vec<Vec<Vec<JointOutcomeDist<T>>>>,
) -> Result<Theory<T>> {
    let n_l = lambda_weights.len();
    if tables.len() != settings.a.len()
        || tables.iter().any(|row| {
            row.len() != settings.b.len() || row.iter().any(|cell| cell.len() != n_l)
        })
    {
        return Err(Error::InvalidParameter("table shape does not match settings × λ".into()));
    }
    let ensemble = FiniteEnsemble::new(
        lambda_weights.into_iter().enumerate().map(|(l, w)| (LambdaPoint::Index(l), w)).collect(),
    )?;
    let lookup = settings.clone();
    let tables = Arc::new(tables);
    let theory = Theory::new(
        name,
        LambdaSpace::Indexed(n_l),
        LambdaEnsemble::Finite(ensemble),
        Arc::new(move |a, b, lambda| match lambda {
            LambdaPoint::Index(l) => Ok(tables[lookup.index_a(a)?][lookup.index_b(b)?][*l]),
            other => Err(unexpected(other, "indexed")),
        }),
    )?;
    Ok(theory.with_settings(settings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::{Minus, Plus};

    fn z() -> Direction<f64> {
        Direction::new(0.0, 0.0, 1.0).unwrap()
    }

    fn x() -> Direction<f64> {
        Direction::new(1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn singlet_examples() {
        let t = qm_singlet_theory::<f64>();
        let l = LambdaPoint::Singleton;
        assert_eq!(t.joint(&z(), &z(), &l).unwrap().get(Plus, Plus), 0.0);
        let ortho = t.joint(&z(), &x(), &l).unwrap();
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                assert_eq!(ortho.get(a, b), 0.25);
            }
        }
        assert_eq!(t.joint(&z(), &z().neg(), &l).unwrap().get(Plus, Plus), 0.5);
    }

    #[test]
    fn classical_sign_rule() {
        let t = classical_antiparallel_theory::<f64>(LambdaMode::default()).unwrap();
        let s = LambdaPoint::Spin(z());
        assert_eq!(t.joint(&z(), &z(), &s).unwrap(), JointOutcomeDist::point_mass(Plus, Minus));
        let tie = t.joint(&x(), &z(), &s).unwrap();
        assert_eq!(tie.marginal_a().plus, 1.0);
        assert!(classical_antiparallel_theory::<f64>(LambdaMode::Quadrature { nodes: 1 }).is_err());
    }

    #[test]
    fn classical_ensemble_marginal_is_half() {
        let t = classical_antiparallel_theory::<f64>(LambdaMode::default()).unwrap();
        let a = Direction::normalized(0.3, -0.7, 0.2).unwrap();
        let b = Direction::normalized(-0.1, 0.4, 0.9).unwrap();
        let m = t.ensemble_joint(&a, &b).unwrap().marginal_a();
        assert!((m.plus - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn maudlin_matches_singlet_and_conditions_to_zero() {
        let m = maudlin_tachyon_theory::<f64>();
        let q = qm_singlet_theory::<f64>();
        let l = LambdaPoint::Singleton;
        for k in 0..12 {
            let a = Direction::in_plane(k as f64 * 0.37);
            let b = Direction::normalized(0.2, (k as f64).sin(), 1.0).unwrap();
            assert_eq!(m.joint(&a, &b, &l).unwrap(), q.joint(&a, &b, &l).unwrap());
        }
        let par = m.joint(&z(), &z(), &l).unwrap();
        assert_eq!(par.conditional_a_given_b(Plus).unwrap().plus, 0.0);
        assert_eq!(par.marginal_a().plus, 0.5);
    }

    #[test]
    fn einstein_boxes_examples() {
        let t = einstein_boxes_theory::<f64>(4).unwrap();
        let j = t.joint(&z(), &x(), &LambdaPoint::Singleton).unwrap();
        assert_eq!(j.marginal_a().plus, 0.25);
        assert_eq!(j.conditional_a_given_b(Plus).unwrap().plus, 0.0);
        let two = einstein_boxes_theory::<f64>(2).unwrap();
        let j2 = two.joint(&z(), &z(), &LambdaPoint::Singleton).unwrap();
        assert_eq!(j2, JointOutcomeDist::new(0.0, 0.5, 0.5, 0.0).unwrap());
        assert!(einstein_boxes_theory::<f64>(1).is_err());
    }

    #[test]
    fn lhv_validation() {
        let settings = SettingSet { a: vec![z()], b: vec![z(), x()] };
        let bad_total = vec![LhvStrategy { a: vec![Plus], b: vec![Plus], weight: 1.0 }];
        assert!(deterministic_lhv_theory(bad_total, settings.clone()).is_err());
        let bad_weight = vec![LhvStrategy { a: vec![Plus], b: vec![Plus, Minus], weight: 0.7 }];
        assert!(deterministic_lhv_theory(bad_weight, settings.clone()).is_err());
        let ok = vec![LhvStrategy { a: vec![Plus], b: vec![Plus, Minus], weight: 1.0 }];
        let t = deterministic_lhv_theory(ok, settings).unwrap();
        let unknown = Direction::normalized(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            t.joint(&unknown, &z(), &LambdaPoint::Strategy(0)),
            Err(Error::UnknownSetting { .. })
        ));
    }

    #[test]
    fn conspiracy_law_tracks_singlet() {
        let law = singlet_conspiracy_law::<f64>();
        let e = law(&z(), &z()).unwrap();
        let f = e.as_finite().unwrap();
        assert_eq!(f.weight_of(&LambdaPoint::Pair(Plus, Minus)), 0.5);
        assert_eq!(f.weight_of(&LambdaPoint::Pair(Plus, Plus)), 0.0);
    }
}
