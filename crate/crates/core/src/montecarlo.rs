//! Seeded trial-level simulation of the two-wing experiment.
//!
//! Each trial `k` draws its settings, hidden state and outcomes from four
//! disjoint counter-based streams addressed by `(seed, stream, k)`, so the
//! log is identical for any number of workers.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;
use crate::error::{Error, Result};
use crate::inequality::correlation_estimate;
use crate::outcome::Outcome;
use crate::report::{Condition, ConditionReport, DeviationKind, MaxTracker, SettingRef, Wing, Witness};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use crate::theory::Theory;

/// Default z-score threshold for empirical flags.
pub const DEFAULT_TOL_SIGMA: f64 = 4.0;

pub const CSV_HEADER: &str = "trial,a_index,b_index,A,B";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub a_index: usize,
    pub b_index: usize,
    #[serde(rename = "A")]
    pub a: Outcome,
    #[serde(rename = "B")]
    pub b: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrialLog<T> {
    pub theory_name: String,
    pub seed: u64,
    pub settings_a: Vec<Direction<T>>,
    pub settings_b: Vec<Direction<T>>,
    pub records: Vec<TrialRecord>,
}

fn simulate_trial<T: Real>(
    t: &Theory<T>,
    settings_a: &[Direction<T>],
    settings_b: &[Direction<T>],
    seed: u64,
    k: u64,
) -> Result<TrialRecord> {
    let a_index = stream_rng(seed, Stream::SettingA, k).gen_range(0..settings_a.len());
    let b_index = stream_rng(seed, Stream::SettingB, k).gen_range(0..settings_b.len());
    let (a, b) = (&settings_a[a_index], &settings_b[b_index]);
    let lambda = t.ensemble_for(a, b)?.draw(&mut stream_rng(seed, Stream::Lambda, k));
    let table = t.joint(a, b, &lambda)?;
    let u = T::lit(stream_rng(seed, Stream::Outcome, k).gen::<f64>());
    let mut acc = T::zero();
    let mut chosen = None;
    for x in Outcome::ALL {
        for y in Outcome::ALL {
            let p = table.get(x, y);
            if p <= T::zero() {
                continue;
            }
            acc = acc + p;
            chosen = Some((x, y));
            if u < acc {
                return Ok(TrialRecord { index: k, a_index, b_index, a: x, b: y });
            }
        }
    }
    // u landed in the rounding gap above the last cumulative sum.
    let (x, y) = chosen.expect("a valid table has a positive entry");
    Ok(TrialRecord { index: k, a_index, b_index, a: x, b: y })
}

/// Runs `n` trials on the global thread pool.
pub fn run_trials<T: Real>(
    t: &Theory<T>,
    settings_a: &[Direction<T>],
    settings_b: &[Direction<T>],
    n: usize,
    seed: u64,
) -> Result<TrialLog<T>> {
    use rayon::prelude::*;
    if n < 1 {
        return Err(Error::InvalidParameter("trial count must be at least 1".into()));
    }
    if settings_a.is_empty() || settings_b.is_empty() {
        return Err(Error::InvalidParameter("setting lists must be nonempty".into()));
    }
    let records = (0..n as u64)
        .into_par_iter()
        .map(|k| simulate_trial(t, settings_a, settings_b, seed, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialLog {
        theory_name: t.name().to_string(),
        seed,
        settings_a: settings_a.to_vec(),
        settings_b: settings_b.to_vec(),
        records,
    })
}

/// Same as [`run_trials`] on a dedicated pool of `workers` threads.
pub fn run_trials_with_workers<T: Real>(
    t: &Theory<T>,
    settings_a: &[Direction<T>],
    settings_b: &[Direction<T>],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<TrialLog<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_trials(t, settings_a, settings_b, n, seed))
}

impl<T: Real> TrialLog<T> {
    /// `trial,a_index,b_index,A,B` with LF endings and `+1`/`-1` outcomes.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(24 * (self.records.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{},{}", r.index, r.a_index, r.b_index, r.a, r.b);
        }
        s
    }

    fn matching(&self, a_index: usize, b_index: usize) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(move |r| r.a_index == a_index && r.b_index == b_index)
    }
}

/// Parses records written by [`TrialLog::to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let bad = |line: &str| Error::InvalidParameter(format!("malformed trial row `{line}`"));
    let mut lines = text.split('\n');
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidParameter("missing trial log header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(line));
            }
            let outcome = |s: &str| match s {
                "+1" => Ok(Outcome::Plus),
                "-1" => Ok(Outcome::Minus),
                _ => Err(bad(line)),
            };
            Ok(TrialRecord {
                index: f[0].parse().map_err(|_| bad(line))?,
                a_index: f[1].parse().map_err(|_| bad(line))?,
                b_index: f[2].parse().map_err(|_| bad(line))?,
                a: outcome(f[3])?,
                b: outcome(f[4])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EmpiricalCorrelation<T> {
    pub estimate: T,
    pub std_error: T,
    pub count: usize,
}

/// Mean of `A·B` over the trials at a setting pair, with its standard error
/// (sample standard deviation over `√count`).
pub fn empirical_correlation<T: Real>(
    log: &TrialLog<T>,
    a_index: usize,
    b_index: usize,
) -> Result<EmpiricalCorrelation<T>> {
    let products: Vec<f64> =
        log.matching(a_index, b_index).map(|r| f64::from(r.a.value() * r.b.value())).collect();
    let count = products.len();
    if count == 0 {
        return Err(Error::NoMatchingTrials { a_index, b_index });
    }
    let n = count as f64;
    let mean = products.iter().sum::<f64>() / n;
    let var = if count > 1 {
        products.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EmpiricalCorrelation { estimate: T::lit(mean), std_error: T::lit((var / n).sqrt()), count })
}

/// Two-proportion z-score with pooled variance; zero when both groups agree
/// on a degenerate proportion.
fn two_proportion_z(k1: usize, n1: usize, k2: usize, n2: usize) -> f64 {
    let (p1, p2) = (k1 as f64 / n1 as f64, k2 as f64 / n2 as f64);
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (p1 - p2).abs() / se
    }
}

/// Frequency-level checks on a trial log:
///
/// * empirical no-signaling: for every local setting, the `+1` frequency
///   must not differ across distant settings by more than `tol_sigma`
///   pooled standard errors;
/// * correlation agreement: at every setting pair the empirical `E(A·B)`
///   must lie within `tol_sigma` standard errors of the analytic value,
///   with standard error `√((1 − E²)/n)` floored at `1/n`.
///
/// Groups without data are reported as skipped.
pub fn empirical_audit<T: Real>(log: &TrialLog<T>, theory: &Theory<T>, tol_sigma: T) -> Result<Vec<ConditionReport<T>>> {
    let (na, nb) = (log.settings_a.len(), log.settings_b.len());
    // counts[i][j] = (trials, A=+1 count, B=+1 count)
    let mut counts = vec![vec![(0usize, 0usize, 0usize); nb]; na];
    for r in &log.records {
        let c = &mut counts[r.a_index][r.b_index];
        c.0 += 1;
        c.1 += usize::from(r.a == Outcome::Plus);
        c.2 += usize::from(r.b == Outcome::Plus);
    }
    let sref = |i: usize, j: usize| SettingRef { a_index: i, b_index: j, a: log.settings_a[i], b: log.settings_b[j] };
    let mut reports = Vec::new();

    for wing in [Wing::A, Wing::B] {
        let (n_fixed, n_varied) = if wing == Wing::A { (na, nb) } else { (nb, na) };
        for fixed in 0..n_fixed {
            let group = |k: usize| {
                let (i, j) = if wing == Wing::A { (fixed, k) } else { (k, fixed) };
                let c = counts[i][j];
                (i, j, c.0, if wing == Wing::A { c.1 } else { c.2 })
            };
            let mut best = MaxTracker::new();
            let mut pairs = 0;
            for k1 in 0..n_varied {
                for k2 in (k1 + 1)..n_varied {
                    let (i1, j1, n1, p1) = group(k1);
                    let (i2, j2, n2, p2) = group(k2);
                    if n1 == 0 || n2 == 0 {
                        continue;
                    }
                    pairs += 1;
                    let z = T::lit(two_proportion_z(p1, n1, p2, n2));
                    best.offer(z, || Witness {
                        kind: DeviationKind::EmpiricalMarginalZ,
                        wing,
                        a_index: i1,
                        b_index: j1,
                        a: log.settings_a[i1],
                        b: log.settings_b[j1],
                        lambda_index: None,
                        lambda: None,
                        outcome_a: (wing == Wing::A).then_some(Outcome::Plus),
                        outcome_b: (wing == Wing::B).then_some(Outcome::Plus),
                        reference: Some(sref(i2, j2)),
                        deviation: T::zero(),
                    });
                }
            }
            let label = if wing == Wing::A { format!("A at a_index {fixed}") } else { format!("B at b_index {fixed}") };
            if pairs == 0 {
                reports.push(ConditionReport::skipped(
                    Condition::EmpiricalNoSignaling,
                    tol_sigma,
                    format!("{label}: fewer than two distant settings with trials"),
                ));
            } else {
                let (z, w) = best.finish();
                reports.push(
                    ConditionReport::evaluated(Condition::EmpiricalNoSignaling, z, tol_sigma, w, pairs, 0)
                        .with_note(label),
                );
            }
        }
    }

    for i in 0..na {
        for j in 0..nb {
            let label = format!("E(A·B) at (a_index {i}, b_index {j})");
            let emp = match empirical_correlation(log, i, j) {
                Ok(e) => e,
                Err(Error::NoMatchingTrials { .. }) => {
                    reports.push(ConditionReport::skipped(
                        Condition::EmpiricalCorrelation,
                        tol_sigma,
                        format!("{label}: no matching trials"),
                    ));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let analytic = correlation_estimate(theory, &log.settings_a[i], &log.settings_b[j])?;
            let n = T::lit(emp.count as f64);
            let e = analytic.value;
            let sampling_var = ((T::one() - e * e) / n).max(T::one() / (n * n));
            let se = (sampling_var + analytic.std_error * analytic.std_error).sqrt();
            let z = (emp.estimate - e).abs() / se;
            let w = Witness {
                kind: DeviationKind::EmpiricalCorrelationZ,
                wing: Wing::Both,
                a_index: i,
                b_index: j,
                a: log.settings_a[i],
                b: log.settings_b[j],
                lambda_index: None,
                lambda: None,
                outcome_a: None,
                outcome_b: None,
                reference: None,
                deviation: z,
            };
            reports.push(
                ConditionReport::evaluated(Condition::EmpiricalCorrelation, z, tol_sigma, Some(w), emp.count, 0)
                    .with_note(label),
            );
        }
    }
    Ok(reports)
}
