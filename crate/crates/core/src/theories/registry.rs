//! Name-based access to built-in theories, partitions and setting laws.
//!
//! A theory spec is `name[:arg]`; transforms are `coarse-grain:<partition>`
//! or `inject:<law>` and are applied left to right.

use std::sync::Arc;

use super::*;
use crate::direction::Direction;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::theory::Theory;

/// `(name, summary)` of every registered theory.
pub const THEORIES: &[(&str, &str)] = &[
    ("qm-singlet", "quantum spin singlet; λ is the wave function"),
    (
        "classical-antiparallel",
        "anti-parallel classical spins, ŝ uniform on the sphere [:quad=N | :sampler=SEED]",
    ),
    ("maudlin-tachyon", "coin flip at the first wing plus an instantaneous instruction to the other"),
    ("einstein-boxes", "one particle, n counters, wings watch counters 1 and 2 [:N, default 4]"),
    ("lhv-deterministic", "mixture of local deterministic strategies (default mixture or --strategy-file)"),
    ("preassigned-pairs", "λ is a pre-assigned outcome pair, uniform over the four pairs"),
    ("superdeterministic", "preassigned-pairs with inject:singlet-conspiracy applied"),
    ("signaling-toy", "P(A=+1|â,b̂) = (1 + â·b̂)/2, violates parameter independence"),
];

pub const PARTITIONS: &[(&str, &str)] = &[
    ("single-cell", "forget λ entirely"),
    ("identity", "one cell per λ (finite ensembles)"),
    ("hemisphere-z", "spin directions split by the sign of their z component"),
];

pub const LAWS: &[(&str, &str)] = &[
    ("singlet-conspiracy", "pre-assigned pair drawn from the singlet joint at the actual settings"),
    ("constant", "the source ensemble at every setting (no-op)"),
];

fn unknown(kind: &'static str, name: &str) -> Error {
    Error::UnknownName { kind, name: name.to_string() }
}

fn parse_arg<N: std::str::FromStr>(what: &str, s: &str) -> Result<N> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("bad {what} argument `{s}`")))
}

/// Looks up a built-in theory from `name[:arg]`.
pub fn theory<T: Real>(spec: &str) -> Result<Theory<T>> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let no_arg = |t: Theory<T>| match arg {
        None => Ok(t),
        Some(a) => Err(Error::InvalidParameter(format!("{name} takes no argument, got `{a}`"))),
    };
    match name {
        "qm-singlet" => no_arg(qm_singlet_theory()),
        "maudlin-tachyon" => no_arg(maudlin_tachyon_theory()),
        "lhv-deterministic" => no_arg(default_lhv_theory()),
        "preassigned-pairs" => no_arg(preassigned_pairs_theory()),
        "superdeterministic" => no_arg(superdeterministic_theory()),
        "signaling-toy" => no_arg(signaling_toy_theory()),
        "einstein-boxes" => {
            let n = arg.map(|a| parse_arg("counter", a)).transpose()?.unwrap_or(4);
            einstein_boxes_theory(n)
        }
        "classical-antiparallel" => {
            let mode = match arg {
                None => LambdaMode::default(),
                Some(a) => match a.split_once('=') {
                    Some(("quad", n)) => LambdaMode::Quadrature { nodes: parse_arg("quad", n)? },
                    Some(("sampler", s)) => LambdaMode::Sampler { seed: parse_arg("sampler", s)? },
                    _ if a == "sampler" => LambdaMode::Sampler { seed: 0 },
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "classical-antiparallel expects quad=N or sampler=SEED, got `{a}`"
                        )))
                    }
                },
            };
            classical_antiparallel_theory(mode).map(|t| match mode {
                LambdaMode::Sampler { seed } => t.renamed(format!("classical-antiparallel:sampler={seed}")),
                LambdaMode::Quadrature { .. } => t,
            })
        }
        other => Err(unknown("theory", other)),
    }
}

pub fn partition<T: Real>(name: &str, source: &Theory<T>) -> Result<Partition<T>> {
    match name {
        "single-cell" => Ok(Partition::single_cell()),
        "identity" => {
            let f = source.lambda_ensemble().as_finite().ok_or_else(|| {
                Error::InvalidParameter("identity partition needs a finite λ-ensemble".into())
            })?;
            Ok(Partition::identity(f))
        }
        "hemisphere-z" => {
            let axis = Direction::new(T::zero(), T::zero(), T::one())?;
            Partition::new("hemisphere-z", Partition::hemispheres(axis).cells().to_vec())
        }
        other => Err(unknown("partition", other)),
    }
}

pub fn law<T: Real>(name: &str, source: &Theory<T>) -> Result<crate::theory::SettingLaw<T>> {
    match name {
        "singlet-conspiracy" => {
            if *source.lambda_space() != crate::theory::LambdaSpace::Pairs {
                return Err(Error::InvalidParameter(
                    "singlet-conspiracy needs a theory whose λ are outcome pairs".into(),
                ));
            }
            Ok(singlet_conspiracy_law())
        }
        "constant" => {
            let e = source.lambda_ensemble().clone();
            Ok(Arc::new(move |_, _| Ok(e.clone())))
        }
        other => Err(unknown("law", other)),
    }
}

/// Applies one `kind:arg` transform.
pub fn apply_transform<T: Real>(theory: Theory<T>, transform: &str) -> Result<Theory<T>> {
    let Some((kind, arg)) = transform.split_once(':') else {
        return Err(Error::InvalidParameter(format!(
            "transform `{transform}` must be coarse-grain:<partition> or inject:<law>"
        )));
    };
    match kind {
        "coarse-grain" => {
            let p = partition(arg, &theory)?;
            coarse_grain(&theory, &p)
        }
        "inject" => {
            let l = law(arg, &theory)?;
            let name = format!("{}|inject:{arg}", theory.name());
            Ok(inject_setting_dependence(theory, l).renamed(name))
        }
        other => Err(unknown("transform", other)),
    }
}

/// Builds a theory from a spec and a transform chain.
pub fn build<T: Real>(spec: &str, transforms: &[String]) -> Result<Theory<T>> {
    transforms.iter().try_fold(theory(spec)?, |t, tr| apply_transform(t, tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_name_resolves() {
        for (name, _) in THEORIES {
            assert!(theory::<f64>(name).is_ok(), "{name}");
        }
        assert!(theory::<f64>("einstein-boxes:6").is_ok());
        assert!(theory::<f64>("classical-antiparallel:quad=32").is_ok());
        assert!(theory::<f64>("classical-antiparallel:sampler=9").is_ok());
    }

    #[test]
    fn bad_names_and_args() {
        assert!(matches!(theory::<f64>("no-such-theory"), Err(Error::UnknownName { .. })));
        assert!(theory::<f64>("qm-singlet:3").is_err());
        assert!(theory::<f64>("einstein-boxes:one").is_err());
        assert!(theory::<f64>("einstein-boxes:1").is_err());
        assert!(build::<f64>("qm-singlet", &["coarse-grain:nope".into()]).is_err());
        assert!(build::<f64>("qm-singlet", &["inject:singlet-conspiracy".into()]).is_err());
        assert!(build::<f64>("qm-singlet", &["bogus".into()]).is_err());
    }

    #[test]
    fn chains_compose_names() {
        let t = build::<f64>(
            "classical-antiparallel",
            &["coarse-grain:hemisphere-z".into(), "coarse-grain:single-cell".into()],
        )
        .unwrap();
        assert_eq!(
            t.name(),
            "classical-antiparallel|coarse-grain:hemisphere-z|coarse-grain:single-cell"
        );
        let s = build::<f64>("preassigned-pairs", &["inject:singlet-conspiracy".into()]).unwrap();
        assert!(s.is_setting_dependent());
    }
}
