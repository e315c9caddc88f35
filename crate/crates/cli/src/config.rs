//! Flag parsing and theory construction shared by the subcommands.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use belllab::conditions::{GridOptions, SettingLists, DEFAULT_COPLANAR_SETTINGS, DEFAULT_LAMBDA_SAMPLES};
use belllab::theories::{deterministic_lhv_theory, registry, LhvStrategy};
use belllab::theory::SettingSet;
use belllab::{Direction, Outcome, Theory};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-9;

/// A setting given either as an in-plane angle in degrees or a 3-vector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SettingSpec {
    Degrees(f64),
    Vector([f64; 3]),
}

impl SettingSpec {
    pub fn direction(self) -> anyhow::Result<Direction<f64>> {
        match self {
            SettingSpec::Degrees(d) => Ok(Direction::in_plane_degrees(d)),
            SettingSpec::Vector([x, y, z]) => {
                Direction::normalized(x, y, z).map_err(|e| anyhow!("setting ({x}, {y}, {z}): {e}"))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySpec {
    pub a: Vec<Outcome>,
    pub b: Vec<Outcome>,
    pub weight: f64,
}

/// Contents of a `--strategy-file`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyFile {
    pub settings_a: Vec<SettingSpec>,
    pub settings_b: Vec<SettingSpec>,
    pub strategies: Vec<StrategySpec>,
}

impl StrategyFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing strategy file {}", path.display()))
    }

    fn theory(&self) -> anyhow::Result<Theory<f64>> {
        let dirs = |s: &[SettingSpec]| s.iter().map(|x| x.direction()).collect::<anyhow::Result<Vec<_>>>();
        let settings = SettingSet { a: dirs(&self.settings_a)?, b: dirs(&self.settings_b)? };
        let strategies = self
            .strategies
            .iter()
            .map(|s| LhvStrategy { a: s.a.clone(), b: s.b.clone(), weight: s.weight })
            .collect();
        Ok(deterministic_lhv_theory(strategies, settings)?)
    }
}

/// Everything needed to rebuild a theory and its audit grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryConfig {
    pub theory: String,
    pub transforms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<StrategyFile>,
}

impl TheoryConfig {
    pub fn build(&self) -> anyhow::Result<Theory<f64>> {
        let base = match &self.strategies {
            Some(file) if self.theory == "lhv-deterministic" => file.theory()?,
            Some(_) => bail!("--strategy-file only applies to lhv-deterministic"),
            None => registry::theory(&self.theory)?,
        };
        let mut t = base;
        for tr in &self.transforms {
            t = registry::apply_transform(t, tr)?;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub grid_n: usize,
    pub lambda_samples: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings_a: Option<Vec<Direction<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings_b: Option<Vec<Direction<f64>>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            grid_n: DEFAULT_COPLANAR_SETTINGS,
            lambda_samples: DEFAULT_LAMBDA_SAMPLES,
            seed: 0,
            settings_a: None,
            settings_b: None,
        }
    }
}

impl GridConfig {
    pub fn options(&self) -> GridOptions<f64> {
        GridOptions {
            coplanar: self.grid_n,
            lambda_samples: self.lambda_samples,
            seed: self.seed,
            settings: match (&self.settings_a, &self.settings_b) {
                (Some(a), Some(b)) => Some((a.clone(), b.clone())),
                _ => None,
            },
        }
    }
}

/// `"0,90,45"` → in-plane directions at those angles in degrees.
pub fn parse_angles(s: &str) -> anyhow::Result<Vec<Direction<f64>>> {
    s.split(',')
        .map(|x| {
            let d: f64 = x.trim().parse().map_err(|_| anyhow!("bad angle `{x}` in `{s}`"))?;
            if !d.is_finite() {
                bail!("angle `{x}` is not finite");
            }
            Ok(Direction::in_plane_degrees(d))
        })
        .collect()
}

/// `"x,y,z"` → a normalized direction.
pub fn parse_dir(s: &str) -> anyhow::Result<Direction<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| anyhow!("bad component `{x}` in `{s}`")))
        .collect::<anyhow::Result<_>>()?;
    let [x, y, z] = v[..] else {
        bail!("direction `{s}` must have three components");
    };
    Direction::normalized(x, y, z).map_err(|e| anyhow!("direction `{s}`: {e}"))
}

/// Setting lists from `--angles`, `--angles-b` and `--dir`; `None` when no
/// flag was given. `--dir` vectors are appended to both wings.
pub fn setting_lists(
    angles: Option<&str>,
    angles_b: Option<&str>,
    dirs: &[String],
) -> anyhow::Result<Option<SettingLists<f64>>> {
    if angles.is_none() && angles_b.is_none() && dirs.is_empty() {
        return Ok(None);
    }
    let extra = dirs.iter().map(|d| parse_dir(d)).collect::<anyhow::Result<Vec<_>>>()?;
    let mut a = angles.map(parse_angles).transpose()?.unwrap_or_default();
    let mut b = match angles_b {
        Some(s) => parse_angles(s)?,
        None => a.clone(),
    };
    a.extend(&extra);
    b.extend(&extra);
    if a.is_empty() || b.is_empty() {
        bail!("both wings need at least one setting");
    }
    Ok(Some((a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_and_dir_parsing() {
        assert_eq!(parse_angles("0, 90").unwrap().len(), 2);
        assert!(parse_angles("0,x").is_err());
        assert!(parse_dir("0,-1,0").unwrap().approx_eq(&Direction::new(0.0, -1.0, 0.0).unwrap(), 0.0));
        assert!(parse_dir("1,2").is_err());
        assert!(parse_dir("0,0,0").is_err());
    }

    #[test]
    fn setting_lists_merge_flags() {
        assert!(setting_lists(None, None, &[]).unwrap().is_none());
        let (a, b) = setting_lists(Some("0,90"), Some("45"), &["0,1,0".into()]).unwrap().unwrap();
        assert_eq!((a.len(), b.len()), (3, 2));
        assert!(setting_lists(None, Some("45"), &[]).is_err());
    }

    #[test]
    fn strategy_file_roundtrip() {
        let json = r#"{"settings_a":[0,[1,0,0]],"settings_b":[45,135],
            "strategies":[{"a":[1,1],"b":[-1,1],"weight":1.0}]}"#;
        let f: StrategyFile = serde_json::from_str(json).unwrap();
        let cfg = TheoryConfig { theory: "lhv-deterministic".into(), transforms: vec![], strategies: Some(f) };
        assert!(cfg.build().is_ok());
        let wrong = TheoryConfig { theory: "qm-singlet".into(), ..cfg };
        assert!(wrong.build().is_err());
    }
}
