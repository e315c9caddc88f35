//! Finite probability tables over outcome pairs and their derived
//! marginals and conditionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::scalar::Real;

/// Probability distribution over a single wing's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OutcomeDist<T> {
    pub plus: T,
    pub minus: T,
}

impl<T: Real> OutcomeDist<T> {
    pub fn prob(&self, o: Outcome) -> T {
        match o {
            Outcome::Plus => self.plus,
            Outcome::Minus => self.minus,
        }
    }

    pub fn is_valid(&self) -> bool {
        let in_range = |p: T| p >= T::zero() && p <= T::one() + T::exact_tol();
        in_range(self.plus)
            && in_range(self.minus)
            && (self.plus + self.minus - T::one()).abs() <= T::exact_tol()
    }

    /// `E[outcome] = P(+1) - P(-1)`.
    pub fn mean(&self) -> T {
        self.plus - self.minus
    }
}

/// `P(A, B)` over `{+1, -1}²`, stored as `p[A.index()][B.index()]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct JointOutcomeDist<T> {
    p: [[T; 2]; 2],
}

impl<T: Real> JointOutcomeDist<T> {
    /// Entries given in the order `(+,+), (+,-), (-,+), (-,-)`.
    pub fn new(pp: T, pm: T, mp: T, mm: T) -> Result<Self> {
        Self::from_table([[pp, pm], [mp, mm]])
    }

    pub fn from_table(p: [[T; 2]; 2]) -> Result<Self> {
        let tol = T::exact_tol();
        let mut sum = T::zero();
        for row in &p {
            for &v in row {
                if !(v >= T::zero() && v <= T::one() + tol) {
                    return Err(Error::InvalidDistribution(format!(
                        "entry {v} outside [0, 1]"
                    )));
                }
                sum = sum + v;
            }
        }
        if (sum - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}"
            )));
        }
        Ok(Self { p })
    }

    /// Builds a table from a function of `(A, B)`.
    pub fn from_fn(f: impl Fn(Outcome, Outcome) -> T) -> Result<Self> {
        let mut p = [[T::zero(); 2]; 2];
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                p[a.index()][b.index()] = f(a, b);
            }
        }
        Self::from_table(p)
    }

    pub fn point_mass(a: Outcome, b: Outcome) -> Self {
        let mut p = [[T::zero(); 2]; 2];
        p[a.index()][b.index()] = T::one();
        Self { p }
    }

    pub fn uniform() -> Self {
        let q = T::lit(0.25);
        Self { p: [[q; 2]; 2] }
    }

    /// Product of two single-wing distributions.
    pub fn product(a: &OutcomeDist<T>, b: &OutcomeDist<T>) -> Self {
        let mut p = [[T::zero(); 2]; 2];
        for x in Outcome::ALL {
            for y in Outcome::ALL {
                p[x.index()][y.index()] = a.prob(x) * b.prob(y);
            }
        }
        Self { p }
    }

    /// Weighted average of tables, `Σ wᵢ·tableᵢ / Σ wᵢ`.
    pub fn mixture<'a, I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, &'a Self)>,
    {
        let mut acc = [[T::zero(); 2]; 2];
        let mut total = T::zero();
        for (w, t) in parts {
            total = total + w;
            for (row, trow) in acc.iter_mut().zip(&t.p) {
                for (v, &tv) in row.iter_mut().zip(trow) {
                    *v = *v + w * tv;
                }
            }
        }
        if total.is_nan() || total <= T::zero() {
            return Err(Error::InvalidParameter("mixture weights sum to zero".into()));
        }
        for row in acc.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / total;
            }
        }
        Self::from_table(acc)
    }

    pub fn get(&self, a: Outcome, b: Outcome) -> T {
        self.p[a.index()][b.index()]
    }

    pub fn table(&self) -> [[T; 2]; 2] {
        self.p
    }

    /// `P(A) = Σ_B P(A, B)`.
    pub fn marginal_a(&self) -> OutcomeDist<T> {
        OutcomeDist {
            plus: self.p[0][0] + self.p[0][1],
            minus: self.p[1][0] + self.p[1][1],
        }
    }

    /// `P(B) = Σ_A P(A, B)`.
    pub fn marginal_b(&self) -> OutcomeDist<T> {
        OutcomeDist {
            plus: self.p[0][0] + self.p[1][0],
            minus: self.p[0][1] + self.p[1][1],
        }
    }

    /// `P(A | B) = P(A, B) / P(B)`.
    ///
    /// Conditioning events with probability at or below
    /// [`Real::exact_tol`] are treated as impossible.
    pub fn conditional_a_given_b(&self, b: Outcome) -> Result<OutcomeDist<T>> {
        let pb = self.marginal_b().prob(b);
        if pb <= T::exact_tol() {
            return Err(Error::ZeroConditioningEvent);
        }
        Ok(OutcomeDist {
            plus: self.get(Outcome::Plus, b) / pb,
            minus: self.get(Outcome::Minus, b) / pb,
        })
    }

    /// `P(B | A) = P(A, B) / P(A)`.
    pub fn conditional_b_given_a(&self, a: Outcome) -> Result<OutcomeDist<T>> {
        let pa = self.marginal_a().prob(a);
        if pa <= T::exact_tol() {
            return Err(Error::ZeroConditioningEvent);
        }
        Ok(OutcomeDist {
            plus: self.get(a, Outcome::Plus) / pa,
            minus: self.get(a, Outcome::Minus) / pa,
        })
    }

    /// `E[A·B]`.
    pub fn correlation(&self) -> T {
        self.p[0][0] - self.p[0][1] - self.p[1][0] + self.p[1][1]
    }

    /// Largest absolute entry-wise difference to another table.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for a in Outcome::ALL {
            for b in Outcome::ALL {
                m = m.max((self.get(a, b) - other.get(a, b)).abs());
            }
        }
        m
    }
}

/// `P(A)` of a joint table.
pub fn marginal_a<T: Real>(joint: &JointOutcomeDist<T>) -> OutcomeDist<T> {
    joint.marginal_a()
}

/// `P(B)` of a joint table.
pub fn marginal_b<T: Real>(joint: &JointOutcomeDist<T>) -> OutcomeDist<T> {
    joint.marginal_b()
}

/// `P(A | B)`; fails with [`Error::ZeroConditioningEvent`] when `P(B) = 0`.
pub fn conditional_a_given_b<T: Real>(
    joint: &JointOutcomeDist<T>,
    b: Outcome,
) -> Result<OutcomeDist<T>> {
    joint.conditional_a_given_b(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::{Minus, Plus};

    fn singlet_parallel() -> JointOutcomeDist<f64> {
        JointOutcomeDist::new(0.0, 0.5, 0.5, 0.0).unwrap()
    }

    #[test]
    fn marginal_examples() {
        let u = JointOutcomeDist::<f64>::uniform();
        assert_eq!(marginal_a(&u).plus, 0.5);
        assert_eq!(marginal_a(&u).minus, 0.5);
        assert_eq!(marginal_a(&singlet_parallel()).plus, 0.5);
        let pm = JointOutcomeDist::<f64>::point_mass(Plus, Minus);
        assert_eq!(marginal_a(&pm).plus, 1.0);
    }

    #[test]
    fn conditional_examples() {
        let c = conditional_a_given_b(&singlet_parallel(), Plus).unwrap();
        assert_eq!(c.plus, 0.0);
        let u = JointOutcomeDist::<f64>::uniform();
        assert_eq!(conditional_a_given_b(&u, Minus).unwrap().plus, 0.5);
        let pp = JointOutcomeDist::<f64>::point_mass(Plus, Plus);
        assert_eq!(
            conditional_a_given_b(&pp, Minus),
            Err(Error::ZeroConditioningEvent)
        );
    }

    #[test]
    fn validation() {
        assert!(JointOutcomeDist::new(0.5, 0.5, 0.5, -0.5).is_err());
        assert!(JointOutcomeDist::new(0.3, 0.3, 0.3, 0.3).is_err());
        assert!(JointOutcomeDist::new(0.25f32, 0.25, 0.25, 0.25).is_ok());
    }

    #[test]
    fn mixture_of_point_masses() {
        let a = JointOutcomeDist::<f64>::point_mass(Plus, Plus);
        let b = JointOutcomeDist::<f64>::point_mass(Minus, Minus);
        let m = JointOutcomeDist::mixture([(0.5, &a), (0.5, &b)]).unwrap();
        assert_eq!(m.correlation(), 1.0);
        assert_eq!(m.marginal_a().plus, 0.5);
    }
}
