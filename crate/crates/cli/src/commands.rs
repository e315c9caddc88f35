use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use belllab::conditions::{AuditGrid, DecompositionReport};
use belllab::inequality::DEFAULT_SEARCH_STEPS;
use belllab::montecarlo::DEFAULT_TOL_SIGMA;
use belllab::theories::registry;
use belllab::{
    audit_all, chsh_grid_search, chsh_terms, correlation_estimate, empirical_audit, empirical_correlation,
    lhv_bound_bruteforce, replay_witness, run_trials, run_trials_with_workers, ChshSpec, ChshTerms,
    ConditionReport64, Direction64, Error, Estimate, Theory64,
};
use serde::{Deserialize, Serialize};

use crate::config::{GridConfig, TheoryConfig};
use crate::output::{emit_json, write_atomic};

pub const SCHEMA_VERSION: &str = "1.0";

/// Replayed deviations must match the reported ones to this accuracy.
pub const REPLAY_TOL: f64 = 1e-12;

/// Exit status 2 for configuration problems, 3 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => format!("{e:#}"),
        }
    }
}

pub fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

/// Library errors raised while running: bad user input is still a
/// configuration problem, everything else is a runtime failure.
fn run_err(e: Error) -> Failure {
    match e {
        Error::InvalidParameter(_)
        | Error::NotUnit { .. }
        | Error::UnknownSetting { .. }
        | Error::UnknownName { .. }
        | Error::ResourceLimit { .. } => Failure::Config(e.into()),
        _ => Failure::Runtime(e.into()),
    }
}

fn io_err(e: anyhow::Error) -> Failure {
    Failure::Runtime(e)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditConfig {
    #[serde(flatten)]
    pub theory: TheoryConfig,
    pub grid: GridConfig,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSummary {
    pub settings_a: Vec<Direction64>,
    pub settings_b: Vec<Direction64>,
    pub lambda_points: usize,
    pub lambda_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub forward_holds: bool,
    pub backward_holds: bool,
    pub strong_implies_factorizable: bool,
    pub verdicts_agree: bool,
    pub min_conditioning_probability: f64,
    pub equivalence_holds: bool,
}

impl From<&DecompositionReport<f64>> for DecompositionSummary {
    fn from(d: &DecompositionReport<f64>) -> Self {
        Self {
            forward_holds: d.forward_holds,
            backward_holds: d.backward_holds,
            strong_implies_factorizable: d.strong_implies_factorizable,
            verdicts_agree: d.verdicts_agree,
            min_conditioning_probability: d.min_conditioning_probability,
            equivalence_holds: d.equivalence_holds,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: String,
    pub command: String,
    pub config: AuditConfig,
    pub theory: String,
    pub grid: GridSummary,
    pub conditions: Vec<ConditionReport64>,
    pub decomposition: DecompositionSummary,
}

fn build_theory(cfg: &TheoryConfig) -> Result<Theory64, Failure> {
    cfg.build().map_err(config_err)
}

fn build_grid(t: &Theory64, cfg: &GridConfig) -> Result<AuditGrid<f64>, Failure> {
    AuditGrid::for_theory(t, &cfg.options()).map_err(config_err)
}

pub fn audit(cfg: AuditConfig, out: Option<&Path>) -> Result<(), Failure> {
    if cfg.tol.is_nan() || cfg.tol < 0.0 {
        return Err(config_err(anyhow!("--tol must be nonnegative")));
    }
    let t = build_theory(&cfg.theory)?;
    let g = build_grid(&t, &cfg.grid)?;
    let (conditions, d) = audit_all(&t, &g, cfg.tol).map_err(run_err)?;
    let report = AuditReport {
        schema_version: SCHEMA_VERSION.into(),
        command: "audit".into(),
        theory: t.name().to_string(),
        grid: GridSummary {
            settings_a: g.settings_a.clone(),
            settings_b: g.settings_b.clone(),
            lambda_points: g.lambda_points.len(),
            lambda_samples: g.lambda_samples,
            seed: g.seed,
        },
        conditions,
        decomposition: (&d).into(),
        config: cfg,
    };
    emit_json(&report, out).map_err(io_err)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Replay {
    pub condition: String,
    pub reported: f64,
    pub replayed: f64,
    pub abs_diff: f64,
    pub reproduced: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub schema_version: String,
    pub command: String,
    pub source: PathBuf,
    pub theory: String,
    pub tolerance: f64,
    pub replays: Vec<Replay>,
    pub all_reproduced: bool,
}

/// Rebuilds the theory and grid recorded in an audit report and
/// re-evaluates every witness in it.
pub fn replay(report_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading {}", report_path.display()))
        .map_err(config_err)?;
    let report: AuditReport = serde_json::from_str(&text)
        .with_context(|| format!("{} is not an audit report", report_path.display()))
        .map_err(config_err)?;
    let t = build_theory(&report.config.theory)?;
    let g = build_grid(&t, &report.config.grid)?;
    let mut replays = Vec::new();
    for c in &report.conditions {
        let Some(w) = &c.witness else { continue };
        let replayed = replay_witness(&t, &g, w).map_err(run_err)?;
        let abs_diff = (replayed - c.max_deviation).abs();
        replays.push(Replay {
            condition: c.condition.to_string(),
            reported: c.max_deviation,
            replayed,
            abs_diff,
            reproduced: abs_diff <= REPLAY_TOL,
        });
    }
    let out_report = ReplayReport {
        schema_version: SCHEMA_VERSION.into(),
        command: "replay".into(),
        source: report_path.to_path_buf(),
        theory: t.name().to_string(),
        tolerance: REPLAY_TOL,
        all_reproduced: replays.iter().all(|r| r.reproduced),
        replays,
    };
    emit_json(&out_report, out).map_err(io_err)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshConfig {
    #[serde(flatten)]
    pub theory: TheoryConfig,
    pub settings: Option<[Direction64; 4]>,
    pub search: bool,
    pub search_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: Direction64,
    pub a_prime: Direction64,
    pub b: Direction64,
    pub b_prime: Direction64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSummary {
    pub steps: usize,
    pub max_abs_s: f64,
    /// `(a, a′, b, b′)` in degrees within the x–z plane.
    pub angles_deg: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshReport {
    pub schema_version: String,
    pub command: String,
    pub config: ChshConfig,
    pub theory: String,
    pub settings: ChshSettings,
    pub correlations: ChshTerms<f64>,
    pub std_errors: [f64; 4],
    #[serde(rename = "S")]
    pub s: f64,
    pub abs_s: f64,
    pub lhv_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub search: Option<SearchSummary>,
}

pub fn chsh(cfg: ChshConfig, out: Option<&Path>) -> Result<(), Failure> {
    let t = build_theory(&cfg.theory)?;
    let (spec, search) = if cfg.search {
        let found = chsh_grid_search(&t, cfg.search_steps).map_err(run_err)?;
        let [a, ap, b, bp] = found.angles;
        let spec = ChshSpec {
            a: Direction64::in_plane(a),
            a_prime: Direction64::in_plane(ap),
            b: Direction64::in_plane(b),
            b_prime: Direction64::in_plane(bp),
        };
        let summary = SearchSummary {
            steps: found.steps,
            max_abs_s: found.max_abs_s,
            angles_deg: found.angles.map(f64::to_degrees),
        };
        (spec, Some(summary))
    } else {
        let [a, a_prime, b, b_prime] = cfg
            .settings
            .ok_or_else(|| config_err(anyhow!("chsh needs four settings (--angles a,a',b,b' or four --dir) or --search")))?;
        (ChshSpec { a, a_prime, b, b_prime }, None)
    };
    let terms = chsh_terms(&t, &spec).map_err(run_err)?;
    let pairs = [(spec.a, spec.b), (spec.a, spec.b_prime), (spec.a_prime, spec.b), (spec.a_prime, spec.b_prime)];
    let mut std_errors = [0.0; 4];
    for (k, (a, b)) in pairs.iter().enumerate() {
        std_errors[k] = correlation_estimate(&t, a, b).map_err(run_err)?.std_error;
    }
    let report = ChshReport {
        schema_version: SCHEMA_VERSION.into(),
        command: "chsh".into(),
        theory: t.name().to_string(),
        settings: ChshSettings { a: spec.a, a_prime: spec.a_prime, b: spec.b, b_prime: spec.b_prime },
        s: terms.s,
        abs_s: terms.s.abs(),
        correlations: terms,
        std_errors,
        lhv_bound: lhv_bound_bruteforce(2, 2).map_err(run_err)?,
        search,
        config: cfg,
    };
    emit_json(&report, out).map_err(io_err)
}

pub fn default_search_steps() -> usize {
    DEFAULT_SEARCH_STEPS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub theory: TheoryConfig,
    pub settings_a: Vec<Direction64>,
    pub settings_b: Vec<Direction64>,
    pub trials: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub tol_sigma: f64,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSummary {
    pub a_index: usize,
    pub b_index: usize,
    pub count: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub analytic: f64,
    pub analytic_std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: String,
    pub command: String,
    pub config: SimulateConfig,
    pub theory: String,
    pub correlations: Vec<PairSummary>,
    pub empirical_audit: Vec<ConditionReport64>,
    pub flagged: usize,
    pub skipped: usize,
}

pub const DEFAULT_SIMULATION_ANGLES: &str = "0,45,90,135";

pub fn simulate(mut cfg: SimulateConfig, out: Option<&Path>) -> Result<(), Failure> {
    if cfg.trials < 1 {
        return Err(config_err(anyhow!("--trials must be at least 1")));
    }
    if cfg.workers == Some(0) {
        return Err(config_err(anyhow!("--workers must be at least 1")));
    }
    let t = build_theory(&cfg.theory)?;
    // Without explicit settings, theories with their own setting set are
    // simulated on it and all others on the default angles.
    if cfg.settings_a.is_empty() {
        let (a, b) = match t.settings() {
            Some(s) => (s.a.clone(), s.b.clone()),
            None => {
                let d = crate::config::parse_angles(DEFAULT_SIMULATION_ANGLES).map_err(config_err)?;
                (d.clone(), d)
            }
        };
        cfg.settings_a = a;
        cfg.settings_b = b;
    }
    let log = match cfg.workers {
        Some(w) => run_trials_with_workers(&t, &cfg.settings_a, &cfg.settings_b, cfg.trials, cfg.seed, w),
        None => run_trials(&t, &cfg.settings_a, &cfg.settings_b, cfg.trials, cfg.seed),
    }
    .map_err(run_err)?;
    write_atomic(&cfg.csv, log.to_csv().as_bytes()).map_err(io_err)?;

    let mut correlations = Vec::new();
    for i in 0..cfg.settings_a.len() {
        for j in 0..cfg.settings_b.len() {
            let Ok(e) = empirical_correlation(&log, i, j) else { continue };
            let analytic: Estimate<f64> =
                correlation_estimate(&t, &cfg.settings_a[i], &cfg.settings_b[j]).map_err(run_err)?;
            correlations.push(PairSummary {
                a_index: i,
                b_index: j,
                count: e.count,
                estimate: e.estimate,
                std_error: e.std_error,
                analytic: analytic.value,
                analytic_std_error: analytic.std_error,
            });
        }
    }
    let audit = empirical_audit(&log, &t, cfg.tol_sigma).map_err(run_err)?;
    let report = SimulateReport {
        schema_version: SCHEMA_VERSION.into(),
        command: "simulate".into(),
        theory: t.name().to_string(),
        correlations,
        flagged: audit.iter().filter(|r| !r.pass && !r.is_skipped()).count(),
        skipped: audit.iter().filter(|r| r.is_skipped()).count(),
        empirical_audit: audit,
        config: cfg,
    };
    emit_json(&report, out).map_err(io_err)
}

pub fn default_tol_sigma() -> f64 {
    DEFAULT_TOL_SIGMA
}

pub fn list() {
    let section = |title: &str, rows: &[(&str, &str)]| {
        println!("{title}:");
        for (name, about) in rows {
            println!("  {name:<24} {about}");
        }
    };
    section("theories", registry::THEORIES);
    section("partitions (--transform coarse-grain:<name>)", registry::PARTITIONS);
    section("laws (--transform inject:<name>)", registry::LAWS);
}

#[cfg(test)]
mod tests {
    use super::*;
    use belllab::Condition;

    #[test]
    fn library_errors_map_to_exit_codes() {
        assert_eq!(run_err(Error::InvalidParameter("x".into())).exit_code(), 2);
        assert_eq!(run_err(Error::UnknownSetting { x: 0.0, y: 0.0, z: 1.0 }).exit_code(), 2);
        assert_eq!(run_err(Error::DegenerateGrid(Condition::OutcomeIndependence)).exit_code(), 3);
        assert_eq!(run_err(Error::ZeroConditioningEvent).exit_code(), 3);
        assert_eq!(run_err(Error::IncomparableEnsembles("x".into())).exit_code(), 3);
    }
}
