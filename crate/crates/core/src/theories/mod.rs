//! Built-in theories and the two transformers that act on them:
//! coarse-graining λ into partition cells, and making `P(λ)` depend on
//! the settings.

mod builtin;
pub mod registry;

use std::fmt;
use std::sync::Arc;

pub use builtin::*;

use crate::dist::JointOutcomeDist;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::theory::{
    FiniteEnsemble, LambdaEnsemble, LambdaPoint, LambdaSpace, SettingLaw, Theory,
};

pub type CellPredicate<T> = Arc<dyn Fn(&LambdaPoint<T>) -> bool + Send + Sync>;

/// A named predicate over hidden states.
#[derive(Clone)]
pub struct Cell<T: Real> {
    pub name: String,
    pub predicate: CellPredicate<T>,
}

/// An incomplete state description: each λ is only known up to its cell.
#[derive(Clone)]
pub struct Partition<T: Real> {
    name: String,
    cells: Vec<Cell<T>>,
}

impl<T: Real> fmt::Debug for Partition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.cells.iter().map(|c| c.name.as_str()).collect();
        f.debug_struct("Partition").field("name", &self.name).field("cells", &names).finish()
    }
}

impl<T: Real> Partition<T> {
    pub fn new(name: impl Into<String>, cells: Vec<Cell<T>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidPartition("no cells".into()));
        }
        Ok(Self { name: name.into(), cells })
    }

    /// Forgets λ entirely; the cell is the bare preparation.
    pub fn single_cell() -> Self {
        Self {
            name: "single-cell".into(),
            cells: vec![Cell { name: "all".into(), predicate: Arc::new(|_| true) }],
        }
    }

    /// One cell per support point of a finite ensemble.
    pub fn identity(ensemble: &FiniteEnsemble<T>) -> Self {
        let cells = ensemble
            .points()
            .iter()
            .map(|(p, _)| {
                let p = *p;
                Cell { name: p.to_string(), predicate: Arc::new(move |q: &LambdaPoint<T>| *q == p) }
            })
            .collect();
        Self { name: "identity".into(), cells }
    }

    /// Splits spin directions by the sign of their component along `axis`
    /// (ties go to the upper cell).
    pub fn hemispheres(axis: crate::Direction<T>) -> Self {
        let upper = move |p: &LambdaPoint<T>| matches!(p, LambdaPoint::Spin(s) if s.dot(&axis) >= T::zero());
        let lower = move |p: &LambdaPoint<T>| matches!(p, LambdaPoint::Spin(s) if s.dot(&axis) < T::zero());
        Self {
            name: "hemispheres".into(),
            cells: vec![
                Cell { name: "upper".into(), predicate: Arc::new(upper) },
                Cell { name: "lower".into(), predicate: Arc::new(lower) },
            ],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    /// Index of the unique cell containing `p`.
    pub fn classify(&self, p: &LambdaPoint<T>) -> Result<usize> {
        let mut hit = None;
        for (k, c) in self.cells.iter().enumerate() {
            if (c.predicate)(p) {
                if let Some(first) = hit {
                    return Err(Error::InvalidPartition(format!(
                        "{p} lies in cells {first} and {k}"
                    )));
                }
                hit = Some(k);
            }
        }
        hit.ok_or_else(|| Error::InvalidPartition(format!("{p} lies in no cell")))
    }
}

/// Replaces λ by its partition cell:
/// `P(A,B|â,b̂,c) = Σ_{λ∈c} w(λ)·P(A,B|â,b̂,λ) / w(c)`.
///
/// Sampled sources are first replaced by their exact quadrature
/// ([`DEFAULT_QUADRATURE_NODES`]) so that cell averages are deterministic.
pub fn coarse_grain<T: Real>(source: &Theory<T>, partition: &Partition<T>) -> Result<Theory<T>> {
    if source.is_setting_dependent() {
        return Err(Error::InvalidParameter(
            "coarse-graining a setting-dependent ensemble is not supported".into(),
        ));
    }
    let support = match source.lambda_ensemble() {
        LambdaEnsemble::Finite(f) => f.clone(),
        LambdaEnsemble::Sampler(s) => s.quadrature(DEFAULT_QUADRATURE_NODES)?,
    };
    let mut members: Vec<Vec<(LambdaPoint<T>, T)>> = vec![Vec::new(); partition.cells.len()];
    for (p, w) in support.points() {
        if *w > T::zero() {
            members[partition.classify(p)?].push((*p, *w));
        }
    }
    let cell_weights: Vec<T> =
        members.iter().map(|m| m.iter().map(|(_, w)| *w).sum::<T>()).collect();
    for (cell, w) in partition.cells.iter().zip(&cell_weights) {
        if w.is_nan() || *w <= T::zero() {
            return Err(Error::EmptyCell(cell.name.clone()));
        }
    }
    let total: T = cell_weights.iter().copied().sum();
    let ensemble = FiniteEnsemble::new(
        cell_weights.iter().enumerate().map(|(k, w)| (LambdaPoint::Cell(k), *w / total)).collect(),
    )?;

    let inner = source.clone();
    let members = Arc::new(members);
    let cell_weights = Arc::new(cell_weights);
    let kernel = move |a: &crate::Direction<T>, b: &crate::Direction<T>, lambda: &LambdaPoint<T>| {
        let LambdaPoint::Cell(k) = lambda else {
            return Err(Error::LambdaMismatch { point: lambda.to_string(), space: "cells".into() });
        };
        let mut acc = [[T::zero(); 2]; 2];
        for (p, w) in &members[*k] {
            let t = inner.joint(a, b, p)?.table();
            for r in 0..2 {
                for c in 0..2 {
                    acc[r][c] = acc[r][c] + *w * t[r][c];
                }
            }
        }
        let wc = cell_weights[*k];
        for row in acc.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / wc;
            }
        }
        JointOutcomeDist::from_table(acc)
    };

    let names = partition.cells.iter().map(|c| c.name.clone()).collect();
    let mut theory = Theory::new(
        format!("{}|coarse-grain:{}", source.name(), partition.name),
        LambdaSpace::Cells(names),
        LambdaEnsemble::Finite(ensemble),
        Arc::new(kernel),
    )?;
    if let Some(s) = source.settings() {
        theory = theory.with_settings(s.clone());
    }
    Ok(theory)
}

/// Copy of `source` whose λ-distribution depends on the settings through
/// `law`; the per-λ kernel is untouched.
pub fn inject_setting_dependence<T: Real>(source: Theory<T>, law: SettingLaw<T>) -> Theory<T> {
    source.with_setting_law(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::Outcome::{Minus, Plus};
    use crate::Direction;

    #[test]
    fn single_cell_classical_reproduces_incomplete_description() {
        let src = classical_antiparallel_theory::<f64>(LambdaMode::default()).unwrap();
        let cg = coarse_grain(&src, &Partition::single_cell()).unwrap();
        let a = Direction::in_plane(0.4);
        let j = cg.joint(&a, &a, &LambdaPoint::Cell(0)).unwrap();
        assert!((j.marginal_a().plus - 0.5).abs() <= 1e-12);
        assert_eq!(j.conditional_a_given_b(Plus).unwrap().plus, 0.0);
    }

    #[test]
    fn identity_partition_is_a_relabelling() {
        let src = default_lhv_theory::<f64>();
        let f = src.lambda_ensemble().as_finite().unwrap().clone();
        let cg = coarse_grain(&src, &Partition::identity(&f)).unwrap();
        let s = src.settings().unwrap();
        for a in &s.a {
            for b in &s.b {
                for (k, (p, _)) in f.points().iter().enumerate() {
                    assert_eq!(
                        cg.joint(a, b, &LambdaPoint::Cell(k)).unwrap(),
                        src.joint(a, b, p).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn empty_and_overlapping_cells_are_rejected() {
        let src = preassigned_pairs_theory::<f64>();
        let only = |x, y| {
            Cell {
                name: format!("{x}{y}"),
                predicate: Arc::new(move |p: &LambdaPoint<f64>| *p == LambdaPoint::Pair(x, y))
                    as CellPredicate<f64>,
            }
        };
        let rest = Cell {
            name: "rest".into(),
            predicate: Arc::new(|p: &LambdaPoint<f64>| *p != LambdaPoint::Pair(Plus, Plus)),
        };
        let everything = Cell { name: "everything".into(), predicate: Arc::new(|_: &LambdaPoint<f64>| true) };
        let never = Cell { name: "never".into(), predicate: Arc::new(|_: &LambdaPoint<f64>| false) };

        let ok = Partition::new("pp-vs-rest", vec![only(Plus, Plus), rest.clone()]).unwrap();
        assert!(coarse_grain(&src, &ok).is_ok());
        let overlap = Partition::new("overlap", vec![only(Minus, Minus), everything.clone()]).unwrap();
        assert!(matches!(coarse_grain(&src, &overlap), Err(Error::InvalidPartition(_))));
        let gap = Partition::new("gap", vec![rest]).unwrap();
        assert!(matches!(coarse_grain(&src, &gap), Err(Error::InvalidPartition(_))));
        let empty = Partition::new("empty", vec![everything, never]).unwrap();
        assert!(matches!(coarse_grain(&src, &empty), Err(Error::EmptyCell(name)) if name == "never"));
    }

    #[test]
    fn hemispheres_split_the_sampled_sphere() {
        let src = classical_antiparallel_theory::<f64>(LambdaMode::Sampler { seed: 3 }).unwrap();
        let axis = Direction::new(0.0, 0.0, 1.0).unwrap();
        let cg = coarse_grain(&src, &Partition::hemispheres(axis)).unwrap();
        let w = cg.lambda_ensemble().as_finite().unwrap();
        assert!((w.points()[0].1 - 0.5).abs() < 1e-12);
    }
}
