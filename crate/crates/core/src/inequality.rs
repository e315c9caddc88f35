//! Correlation functions, the CHSH combination, and a brute-force bound
//! for local deterministic strategies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::theory::{LambdaEnsemble, Theory};

/// Default strategy-count cap for [`lhv_bound_bruteforce`].
pub const DEFAULT_STRATEGY_CAP: u128 = 1 << 24;
/// Default grid-search resolution: 32 steps around the circle, i.e. π/16.
pub const DEFAULT_SEARCH_STEPS: usize = 32;

/// The four settings `a, a′, b, b′` of a CHSH experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChshSpec<T> {
    pub a: Direction<T>,
    pub a_prime: Direction<T>,
    pub b: Direction<T>,
    pub b_prime: Direction<T>,
}

impl<T: Real> ChshSpec<T> {
    /// Coplanar settings given as angles in degrees.
    pub fn from_degrees(a: T, a_prime: T, b: T, b_prime: T) -> Self {
        Self {
            a: Direction::in_plane_degrees(a),
            a_prime: Direction::in_plane_degrees(a_prime),
            b: Direction::in_plane_degrees(b),
            b_prime: Direction::in_plane_degrees(b_prime),
        }
    }

    /// `a = 0°, a′ = 90°, b = 45°, b′ = 135°`.
    pub fn standard() -> Self {
        Self::from_degrees(T::zero(), T::lit(90.0), T::lit(45.0), T::lit(135.0))
    }
}

/// A correlation value with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Estimate<T> {
    pub value: T,
    pub std_error: T,
    /// Number of λ samples, `None` for an exact finite sum.
    pub samples: Option<usize>,
}

/// `E(A·B | â, b̂) = Σ_λ P(λ|â,b̂) Σ_{A,B} A·B·P(A,B|â,b̂,λ)`.
pub fn correlation_estimate<T: Real>(t: &Theory<T>, a: &Direction<T>, b: &Direction<T>) -> Result<Estimate<T>> {
    let e = t.ensemble_for(a, b)?;
    match e.as_ref() {
        LambdaEnsemble::Finite(f) => {
            let (mut acc, mut total) = (T::zero(), T::zero());
            for (p, w) in f.points() {
                acc = acc + *w * t.joint(a, b, p)?.correlation();
                total = total + *w;
            }
            Ok(Estimate { value: acc / total, std_error: T::zero(), samples: None })
        }
        LambdaEnsemble::Sampler(s) => {
            let draws = s.materialize::<T>(s.samples, s.seed, Stream::EnsembleAverage)?;
            let values = draws
                .points()
                .iter()
                .map(|(p, _)| Ok(t.joint(a, b, p)?.correlation()))
                .collect::<Result<Vec<T>>>()?;
            let n = T::lit(values.len() as f64);
            let mean = values.iter().copied().sum::<T>() / n;
            let var = values.iter().map(|v| (*v - mean) * (*v - mean)).sum::<T>()
                / (n - T::one()).max(T::one());
            Ok(Estimate { value: mean, std_error: (var / n).sqrt(), samples: Some(values.len()) })
        }
    }
}

/// Point value of [`correlation_estimate`].
pub fn correlation<T: Real>(t: &Theory<T>, a: &Direction<T>, b: &Direction<T>) -> Result<T> {
    correlation_estimate(t, a, b).map(|e| e.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChshTerms<T> {
    pub e_ab: T,
    pub e_ab_prime: T,
    pub e_a_prime_b: T,
    pub e_a_prime_b_prime: T,
    pub s: T,
}

pub fn chsh_terms<T: Real>(t: &Theory<T>, spec: &ChshSpec<T>) -> Result<ChshTerms<T>> {
    let e_ab = correlation(t, &spec.a, &spec.b)?;
    let e_ab_prime = correlation(t, &spec.a, &spec.b_prime)?;
    let e_a_prime_b = correlation(t, &spec.a_prime, &spec.b)?;
    let e_a_prime_b_prime = correlation(t, &spec.a_prime, &spec.b_prime)?;
    Ok(ChshTerms {
        e_ab,
        e_ab_prime,
        e_a_prime_b,
        e_a_prime_b_prime,
        s: e_ab - e_ab_prime + e_a_prime_b + e_a_prime_b_prime,
    })
}

/// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
pub fn chsh_value<T: Real>(t: &Theory<T>, spec: &ChshSpec<T>) -> Result<T> {
    chsh_terms(t, spec).map(|c| c.s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ChshSearch<T> {
    pub max_abs_s: T,
    /// Maximising angles `(a, a′, b, b′)` in radians, in the x–z plane.
    pub angles: [T; 4],
    pub steps: usize,
}

/// Exhaustive search over coplanar quadruples at multiples of `2π / steps`.
/// Ties keep the first quadruple in `(a, a′, b, b′)` index order.
pub fn chsh_grid_search<T: Real>(t: &Theory<T>, steps: usize) -> Result<ChshSearch<T>> {
    if steps < 2 {
        return Err(Error::InvalidParameter("grid search needs at least 2 steps".into()));
    }
    let angle = |k: usize| T::TAU() * T::lit(k as f64) / T::lit(steps as f64);
    let dirs: Vec<Direction<T>> = (0..steps).map(|k| Direction::in_plane(angle(k))).collect();
    let table: Vec<T> = (0..steps * steps)
        .into_par_iter()
        .map(|k| correlation(t, &dirs[k / steps], &dirs[k % steps]))
        .collect::<Result<_>>()?;
    let e = |i: usize, j: usize| table[i * steps + j];
    let (mut best, mut arg) = (-T::one(), [0usize; 4]);
    for a in 0..steps {
        for ap in 0..steps {
            for b in 0..steps {
                for bp in 0..steps {
                    let s = (e(a, b) - e(a, bp) + e(ap, b) + e(ap, bp)).abs();
                    if s > best + T::tie_slack(best) {
                        best = s;
                        arg = [a, ap, b, bp];
                    }
                }
            }
        }
    }
    Ok(ChshSearch { max_abs_s: best, angles: arg.map(angle), steps })
}

/// Largest `|S|` reachable by any local deterministic strategy when each
/// wing has `n_a` (resp. `n_b`) abstract settings and the four CHSH
/// settings are chosen among them. By convexity this bounds every mixture.
pub fn lhv_bound_bruteforce<T: Real>(n_settings_a: usize, n_settings_b: usize) -> Result<T> {
    lhv_bound_bruteforce_with_cap(n_settings_a, n_settings_b, DEFAULT_STRATEGY_CAP)
}

pub fn lhv_bound_bruteforce_with_cap<T: Real>(n_a: usize, n_b: usize, cap: u128) -> Result<T> {
    if n_a < 2 || n_b < 2 {
        return Err(Error::InvalidParameter(format!(
            "CHSH needs two settings per wing, got {n_a} and {n_b}"
        )));
    }
    let strategies = 1u128.checked_shl((n_a + n_b) as u32).unwrap_or(u128::MAX);
    if n_a + n_b >= 128 || strategies > cap {
        return Err(Error::ResourceLimit { what: "strategy enumeration".into(), needed: strategies, cap });
    }
    let out = |bits: u64, k: usize| if bits >> k & 1 == 1 { -1i64 } else { 1 };
    let best = (0..1u64 << n_a)
        .into_par_iter()
        .map(|sa| {
            let mut best = 0i64;
            for sb in 0..1u64 << n_b {
                for a in 0..n_a {
                    for ap in (0..n_a).filter(|&x| x != a) {
                        for b in 0..n_b {
                            for bp in (0..n_b).filter(|&x| x != b) {
                                let s = out(sa, a) * out(sb, b) - out(sa, a) * out(sb, bp)
                                    + out(sa, ap) * out(sb, b)
                                    + out(sa, ap) * out(sb, bp);
                                best = best.max(s.abs());
                            }
                        }
                    }
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    Ok(T::lit(best as f64))
}
