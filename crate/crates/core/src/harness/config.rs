// Copyright 2026 The plantune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Flat TOML run configuration.
//!
//! Precedence, lowest first: built-in defaults, the config file, the
//! `PLANTUNE_SEED` environment variable, command-line `--set key=value` flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::{ClutterLevel, GeneratorConfig};
use crate::clustering::ClusterConfig;
use crate::error::{invalid, Error, Result};
use crate::objective::ObjectiveConfig;
use crate::planner::{PlannerParams, Termination, DEFAULT_EDGE_RESOLUTION, DEFAULT_WORKERS, GOAL_BIAS_RANGE, STEP_SIZE_RANGE};
use crate::tuner::{SearchBox, TunerConfig};

pub const SEED_ENV: &str = "PLANTUNE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    RrtStarConnect,
    /// closed-form cost model, for pipeline checks without planning
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    Budget,
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub master_seed: u64,
    pub planner: PlannerKind,

    pub time_weight: f64,
    pub t_max: f64,
    pub repetitions: usize,
    pub quantile: f64,
    pub failure_cost_offset: f64,

    pub n_trials: usize,
    pub eta: usize,
    pub max_resource: usize,
    pub min_resource: usize,
    pub random_fraction: f64,
    pub kde_min_points: usize,
    pub good_fraction: f64,
    pub bandwidth_factor: f64,
    pub step_size_min: f64,
    pub step_size_max: f64,
    pub goal_bias_min: f64,
    pub goal_bias_max: f64,

    pub eps: f64,
    pub min_samples: usize,

    pub step_size: f64,
    pub goal_bias: f64,
    pub max_time: f64,
    /// 0 means no iteration cap
    pub max_iterations: u64,
    pub worker_count: usize,
    pub edge_resolution: f64,
    pub termination: TerminationKind,
    pub patience: u64,

    pub levels: Vec<ClutterLevel>,
    pub envs_per_level: usize,
    pub problems_per_env: usize,
    pub witness_iterations: u64,
    /// concurrent experiment jobs; 0 picks the available parallelism
    pub jobs: usize,
    /// tune on the union of all environments as an extra source
    pub union_source: bool,
}

impl Default for Config {
    fn default() -> Self {
        let obj = ObjectiveConfig::default();
        let tun = TunerConfig::default();
        let clu = ClusterConfig::default();
        let gen = GeneratorConfig::default();
        let pp = PlannerParams::<f64>::default();
        Config {
            master_seed: 0,
            planner: PlannerKind::RrtStarConnect,
            time_weight: obj.time_weight,
            t_max: obj.t_max,
            repetitions: obj.repetitions,
            quantile: obj.quantile,
            failure_cost_offset: obj.failure_cost_offset,
            n_trials: tun.n_trials,
            eta: tun.eta,
            max_resource: tun.max_resource,
            min_resource: tun.min_resource,
            random_fraction: tun.random_fraction,
            kde_min_points: tun.kde_min_points,
            good_fraction: tun.good_fraction,
            bandwidth_factor: tun.bandwidth_factor,
            step_size_min: STEP_SIZE_RANGE.0,
            step_size_max: STEP_SIZE_RANGE.1,
            goal_bias_min: GOAL_BIAS_RANGE.0,
            goal_bias_max: GOAL_BIAS_RANGE.1,
            eps: clu.eps,
            min_samples: clu.min_samples,
            step_size: pp.step_size,
            goal_bias: pp.goal_bias,
            max_time: pp.max_time,
            max_iterations: 0,
            worker_count: DEFAULT_WORKERS,
            edge_resolution: DEFAULT_EDGE_RESOLUTION,
            termination: TerminationKind::Budget,
            patience: 300,
            levels: ClutterLevel::ALL.to_vec(),
            envs_per_level: 1,
            problems_per_env: gen.problems,
            witness_iterations: gen.witness_iterations,
            jobs: 0,
            union_source: true,
        }
    }
}

impl Config {
    /// Settings sized for a single desktop machine: 1 s budgets, three
    /// passes, a small trial count and single-threaded planning.
    pub fn desk() -> Self {
        Config {
            t_max: 1.0,
            max_time: 1.0,
            repetitions: 3,
            max_resource: 3,
            n_trials: 24,
            worker_count: 1,
            termination: TerminationKind::Converged,
            patience: 300,
            ..Config::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    /// Applies `PLANTUNE_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<()> {
        match std::env::var(SEED_ENV) {
            Ok(v) => self.apply_seed_str(&v),
            Err(_) => Ok(()),
        }
    }

    fn apply_seed_str(&mut self, v: &str) -> Result<()> {
        self.master_seed = v
            .trim()
            .parse()
            .map_err(|_| Error::Configuration(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        Ok(())
    }

    /// Sets one field from `key=value`, the value in TOML syntax (bare words
    /// are read as strings).
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let mut table = toml::Table::try_from(&*self).map_err(|e| invalid(e.to_string()))?;
        if !table.contains_key(key) {
            return Err(Error::Configuration(format!("unknown config key {key:?}")));
        }
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        table.insert(key.to_string(), value);
        let next: Config = table.try_into()?;
        next.validate()?;
        *self = next;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.objective().validate()?;
        self.tuner().validate()?;
        self.cluster().validate()?;
        if !(self.step_size_min < self.step_size_max && self.goal_bias_min < self.goal_bias_max) {
            return Err(invalid("search box bounds are inverted"));
        }
        if self.worker_count == 0 {
            return Err(invalid("worker_count must be at least 1"));
        }
        if self.problems_per_env == 0 || self.envs_per_level == 0 {
            return Err(invalid("environment and problem counts must be positive"));
        }
        Ok(())
    }

    pub fn objective(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            time_weight: self.time_weight,
            t_max: self.t_max,
            repetitions: self.repetitions,
            quantile: self.quantile,
            failure_cost_offset: self.failure_cost_offset,
        }
    }

    pub fn tuner(&self) -> TunerConfig {
        TunerConfig {
            n_trials: self.n_trials,
            eta: self.eta,
            max_resource: self.max_resource,
            min_resource: self.min_resource,
            random_fraction: self.random_fraction,
            kde_min_points: self.kde_min_points,
            good_fraction: self.good_fraction,
            bandwidth_factor: self.bandwidth_factor,
            search_box: SearchBox {
                step_size: (self.step_size_min, self.step_size_max),
                goal_bias: (self.goal_bias_min, self.goal_bias_max),
            },
            master_seed: self.master_seed,
        }
    }

    pub fn cluster(&self) -> ClusterConfig {
        ClusterConfig {
            eps: self.eps,
            min_samples: self.min_samples,
        }
    }

    pub fn planner_params(&self) -> PlannerParams<f64> {
        PlannerParams {
            step_size: self.step_size,
            goal_bias: self.goal_bias,
            max_time: self.max_time,
            max_iterations: (self.max_iterations > 0).then_some(self.max_iterations),
            worker_count: self.worker_count,
            seed: self.master_seed,
            edge_resolution: self.edge_resolution,
            termination: match self.termination {
                TerminationKind::Budget => Termination::Budget,
                TerminationKind::Converged => Termination::Converged { patience: self.patience },
            },
        }
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            problems: self.problems_per_env,
            witness_iterations: self.witness_iterations,
            edge_resolution: self.edge_resolution,
            ..GeneratorConfig::default()
        }
    }

    pub fn job_count(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_a_toml_round_trip() {
        let cfg = Config::default();
        assert_eq!(Config::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let desk = Config::desk();
        assert_eq!(Config::from_toml(&desk.to_toml().unwrap()).unwrap(), desk);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg = Config::from_toml("t_max = 2.0\nlevels = [\"open\"]\n").unwrap();
        assert_eq!(cfg.t_max, 2.0);
        assert_eq!(cfg.levels, vec![ClutterLevel::Open]);
        assert_eq!(cfg.repetitions, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml("stepsize = 1.0").is_err());
        assert!(Config::default().apply_override("nope=1").is_err());
    }

    #[test]
    fn overrides_parse_toml_values() {
        let mut cfg = Config::default();
        cfg.apply_override("t_max=1.5").unwrap();
        cfg.apply_override("planner = synthetic").unwrap();
        cfg.apply_override("levels=[\"narrow_passage\"]").unwrap();
        cfg.apply_override("max_iterations=500").unwrap();
        assert_eq!(cfg.t_max, 1.5);
        assert_eq!(cfg.planner, PlannerKind::Synthetic);
        assert_eq!(cfg.levels, vec![ClutterLevel::NarrowPassage]);
        assert_eq!(cfg.planner_params().max_iterations, Some(500));
        assert!(cfg.apply_override("quantile=2").is_err());
        assert_eq!(cfg.quantile, 0.7);
    }

    #[test]
    fn seed_string_parsing() {
        let mut cfg = Config::default();
        cfg.apply_seed_str(" 42 ").unwrap();
        assert_eq!(cfg.master_seed, 42);
        assert!(cfg.apply_seed_str("-1").is_err());
    }
}
