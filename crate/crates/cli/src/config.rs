//! Experiment configuration files.

use std::path::{Path, PathBuf};

use bliss_milp::SolveLimits;
use bliss_tamp::encoder::{ProblemConfig, Settings};
use bliss_tamp::geometry::WorldMap;
use bliss_tamp::planners::PlannerKind;
use bliss_tamp::simharness::{ExecutionSettings, NoiseModel};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, Result};
use crate::maps::{bundled, random_maps, MapFamily, RandomMapParams};

/// A bundled family name (`standard`, `entrapped`, `narrow`) or a map file
/// path, relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MapSource(pub String);

impl MapSource {
    pub fn load(&self, base: &Path) -> Result<(String, WorldMap)> {
        if let Ok(family) = self.0.parse::<MapFamily>() {
            if let Some(map) = bundled(family) {
                return Ok((family.name().to_string(), map));
            }
            return Err(CliError::Validation("the random family needs `random_maps`, not `maps`".into()));
        }
        let path = base.join(&self.0);
        let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        let map = WorldMap::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map_or_else(|| self.0.clone(), |s| s.to_string_lossy().into_owned());
        Ok((name, map))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMapSpec {
    pub seed: u64,
    pub count: usize,
    #[serde(default)]
    pub params: RandomMapParams,
}

/// Solver limits and noise used during rollouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionConfig {
    pub noise: NoiseModel,
    pub noise_scale: f64,
    /// Per planning call, seconds.
    pub time_limit: f64,
    pub relative_gap: f64,
    pub node_limit: u64,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        let d = ExecutionSettings::default();
        Self {
            noise: d.noise,
            noise_scale: d.noise_scale,
            time_limit: d.limits.time_limit,
            relative_gap: d.limits.relative_gap,
            node_limit: d.limits.node_limit,
        }
    }
}

impl ExecutionConfig {
    pub fn settings(&self) -> ExecutionSettings {
        ExecutionSettings {
            noise: self.noise,
            noise_scale: self.noise_scale,
            limits: SolveLimits {
                time_limit: self.time_limit,
                relative_gap: self.relative_gap,
                node_limit: self.node_limit,
                ..SolveLimits::default()
            },
        }
    }
}

fn default_planners() -> Vec<PlannerKind> {
    vec![PlannerKind::Milp, PlannerKind::TwoStage]
}

fn default_runs() -> usize {
    25
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub maps: Vec<MapSource>,
    #[serde(default)]
    pub random_maps: Option<RandomMapSpec>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default = "default_planners")]
    pub planners: Vec<PlannerKind>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub delta_sweep: Option<Vec<f64>>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub execution: ExecutionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            maps: Vec::new(),
            random_maps: None,
            settings: Settings::default(),
            planners: default_planners(),
            n_runs: default_runs(),
            base_seed: 0,
            delta_sweep: None,
            output_dir: default_output(),
            execution: ExecutionConfig::default(),
        }
    }
}

/// A loaded config together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let config = Self::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    /// Checks everything that does not need the maps.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.planners.is_empty() {
            return bad("at least one planner is required".into());
        }
        if self.n_runs == 0 {
            return bad("n_runs must be at least 1".into());
        }
        if let Some(sweep) = &self.delta_sweep {
            if sweep.is_empty() {
                return bad("delta_sweep must not be empty".into());
            }
            if let Some(d) = sweep.iter().find(|d| !(**d > 0.0 && **d < 0.5)) {
                return bad(format!("delta_sweep value {d} outside (0, 0.5)"));
            }
        }
        let e = &self.execution;
        if !(e.time_limit > 0.0 && e.relative_gap > 0.0 && e.node_limit > 0 && e.noise_scale >= 0.0) {
            return bad(format!("invalid execution settings {e:?}"));
        }
        Ok(())
    }

    /// Named maps: the listed sources followed by the random family.
    pub fn resolve_maps(&self, base: &Path) -> Result<Vec<(String, WorldMap)>> {
        let mut out = Vec::new();
        for src in &self.maps {
            out.push(src.load(base)?);
        }
        if let Some(r) = &self.random_maps {
            for (i, m) in random_maps(r.seed, r.count, &r.params)?.into_iter().enumerate() {
                out.push((format!("rnd_{i:03}"), m));
            }
        }
        if out.is_empty() {
            return Err(CliError::Validation("config lists no maps".into()));
        }
        for (name, map) in &out {
            ProblemConfig::new(map.clone(), self.settings.clone())
                .validate()
                .map_err(|e| CliError::Validation(format!("map {name}: {e}")))?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig { maps: vec![MapSource("standard".into())], ..ExperimentConfig::default() };
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(c.n_runs, 25);
    }

    #[test]
    fn bad_settings_are_rejected() {
        let base = ExperimentConfig::default();
        let cases = [
            ExperimentConfig { planners: vec![], ..base.clone() },
            ExperimentConfig { n_runs: 0, ..base.clone() },
            ExperimentConfig { delta_sweep: Some(vec![]), ..base.clone() },
            ExperimentConfig { delta_sweep: Some(vec![0.1, 0.5]), ..base.clone() },
        ];
        for c in cases {
            assert!(matches!(c.validate(), Err(CliError::Validation(_))), "{c:?}");
        }
    }

    #[test]
    fn random_family_is_not_a_map_source() {
        assert!(MapSource("random".into()).load(Path::new("")).is_err());
        let (name, _) = MapSource("narrow".into()).load(Path::new("")).unwrap();
        assert_eq!(name, "narrow");
    }

    #[test]
    fn empty_config_has_no_maps() {
        assert!(ExperimentConfig::default().resolve_maps(Path::new("")).is_err());
    }
}
