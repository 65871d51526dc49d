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

//! Multi-fidelity tuning of (step size, goal bias).
//!
//! Hyperband brackets are run cyclically. Each bracket draws its
//! configurations from [`kde_suggest`], evaluates them at the first round's
//! resource and promotes survivors of [`successive_halving_step`] until the
//! maximum resource. The resource is the number of objective repetitions.

pub mod hyperband;
pub mod kde;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::{evaluate, ObjectiveConfig};
use crate::planner::{PathPlanner, PlannerParams, PlanningProblem, GOAL_BIAS_RANGE, STEP_SIZE_RANGE};
use crate::scalar::derive_seed;
pub use hyperband::{hyperband_schedule, hyperband_schedule_with_min, successive_halving_step, Bracket, Round};
pub use kde::{kde_suggest, ProductKde};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPair {
    pub step_size: f64,
    pub goal_bias: f64,
}

impl ParamPair {
    pub fn new(step_size: f64, goal_bias: f64) -> Self {
        ParamPair { step_size, goal_bias }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.step_size, self.goal_bias]
    }
}

/// Open intervals searched for each parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub step_size: (f64, f64),
    pub goal_bias: (f64, f64),
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox {
            step_size: STEP_SIZE_RANGE,
            goal_bias: GOAL_BIAS_RANGE,
        }
    }
}

impl SearchBox {
    pub fn ranges(&self) -> [(f64, f64); 2] {
        [self.step_size, self.goal_bias]
    }

    pub fn contains(&self, p: ParamPair) -> bool {
        p.step_size > self.step_size.0
            && p.step_size < self.step_size.1
            && p.goal_bias > self.goal_bias.0
            && p.goal_bias < self.goal_bias.1
    }

    fn open_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
        loop {
            let x = rng.random_range(lo..hi);
            if x > lo {
                return x;
            }
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamPair {
        let s = Self::open_uniform(rng, self.step_size);
        let b = Self::open_uniform(rng, self.goal_bias);
        ParamPair::new(s, b)
    }

    /// Clips into the box, staying a hair inside the open bounds.
    pub fn clip(&self, x: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (d, (lo, hi)) in self.ranges().into_iter().enumerate() {
            let margin = 1e-9 * (hi - lo);
            out[d] = x[d].clamp(lo + margin, hi - margin);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    /// distinct configurations to evaluate
    pub n_trials: usize,
    pub eta: usize,
    pub max_resource: usize,
    pub min_resource: usize,
    pub random_fraction: f64,
    pub kde_min_points: usize,
    pub good_fraction: f64,
    pub bandwidth_factor: f64,
    pub search_box: SearchBox,
    pub master_seed: u64,
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            n_trials: 100,
            eta: 3,
            max_resource: 9,
            min_resource: 1,
            random_fraction: 1.0 / 3.0,
            kde_min_points: 8,
            good_fraction: 0.15,
            bandwidth_factor: 1.06,
            search_box: SearchBox::default(),
            master_seed: 0,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(invalid("n_trials must be positive"));
        }
        if self.eta < 2 {
            return Err(invalid("eta must be at least 2"));
        }
        if self.min_resource == 0 || self.min_resource > self.max_resource {
            return Err(invalid("need 1 <= min_resource <= max_resource"));
        }
        if !(self.good_fraction > 0.0 && self.good_fraction < 1.0) {
            return Err(invalid("good_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.random_fraction) {
            return Err(invalid("random_fraction must lie in [0, 1]"));
        }
        if !(self.bandwidth_factor > 0.0) {
            return Err(invalid("bandwidth_factor must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Random,
    Model,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Random => "random",
            Origin::Model => "model",
        })
    }
}

impl FromStr for Origin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Origin::Random),
            "model" => Ok(Origin::Model),
            other => Err(invalid(format!("unknown origin {other:?}"))),
        }
    }
}

/// One evaluation of one configuration at one resource level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub params: ParamPair,
    pub resource: usize,
    pub loss: f64,
    pub origin: Origin,
    /// global bracket counter, increasing across Hyperband cycles
    pub bracket: usize,
    pub round: usize,
}

/// Loss of a configuration evaluated with `resource` repetitions.
pub trait TrialObjective {
    fn loss(&self, params: ParamPair, resource: usize, seed: u64) -> Result<f64>;
}

impl<F> TrialObjective for F
where
    F: Fn(ParamPair, usize, u64) -> Result<f64>,
{
    fn loss(&self, params: ParamPair, resource: usize, seed: u64) -> Result<f64> {
        self(params, resource, seed)
    }
}

/// Plans every problem of a set, as the tuner's objective. The resource is
/// the number of repetitions, capped at `objective.repetitions`.
pub struct ProblemSetObjective<'a, P: ?Sized> {
    pub planner: &'a P,
    pub problems: &'a [PlanningProblem<f64>],
    pub template: PlannerParams<f64>,
    pub objective: ObjectiveConfig,
}

impl<P: PathPlanner<f64> + ?Sized> TrialObjective for ProblemSetObjective<'_, P> {
    fn loss(&self, params: ParamPair, resource: usize, seed: u64) -> Result<f64> {
        let cfg = ObjectiveConfig {
            repetitions: resource.clamp(1, self.objective.repetitions),
            ..self.objective.clone()
        };
        let mut run = self.template.with_pair(params.step_size, params.goal_bias);
        run.seed = seed;
        Ok(evaluate(self.planner, self.problems, &run, &cfg)?.loss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: ParamPair,
    pub best_loss: f64,
    pub best_trial: u64,
    pub history: Vec<TrialRecord>,
}

/// Runs Hyperband brackets until `n_trials` distinct configurations have been
/// evaluated. The winner is the lowest loss among evaluations at the highest
/// resource present in the history.
pub fn tune<O: TrialObjective + ?Sized>(objective: &O, cfg: &TunerConfig) -> Result<TuneOutcome> {
    cfg.validate()?;
    let schedule = hyperband_schedule_with_min(cfg.max_resource, cfg.min_resource, cfg.eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let mut history: Vec<TrialRecord> = Vec::new();
    let mut next_id = 0u64;
    let mut bracket_no = 0usize;

    while (next_id as usize) < cfg.n_trials {
        let bracket = &schedule[bracket_no % schedule.len()];
        let n = bracket.rounds[0].configs.min(cfg.n_trials - next_id as usize);
        let mut alive: Vec<(u64, ParamPair, Origin)> = (0..n)
            .map(|_| {
                let (p, origin) = kde_suggest(&history, cfg, &mut rng);
                let id = next_id;
                next_id += 1;
                (id, p, origin)
            })
            .collect();

        for (round_no, round) in bracket.rounds.iter().enumerate() {
            let mut results = Vec::with_capacity(alive.len());
            for &(id, params, origin) in &alive {
                let loss = objective.loss(params, round.resource, derive_seed(cfg.master_seed, id))?;
                if !loss.is_finite() {
                    return Err(invalid(format!("trial {id} produced a non-finite loss")));
                }
                results.push(TrialRecord {
                    trial_id: id,
                    params,
                    resource: round.resource,
                    loss,
                    origin,
                    bracket: bracket_no,
                    round: round_no,
                });
            }
            history.extend(results.iter().cloned());
            if round_no + 1 == bracket.rounds.len() {
                break;
            }
            alive = successive_halving_step(&results, cfg.eta)?
                .into_iter()
                .map(|t| (t.trial_id, t.params, t.origin))
                .collect();
        }
        bracket_no += 1;
    }

    let top = history.iter().map(|t| t.resource).max().expect("at least one trial ran");
    let best = history
        .iter()
        .filter(|t| t.resource == top)
        .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.trial_id.cmp(&b.trial_id)))
        .expect("top level is non-empty");
    Ok(TuneOutcome {
        best: best.params,
        best_loss: best.loss,
        best_trial: best.trial_id,
        history,
    })
}

/// Tunes a planner on a problem set with the given objective settings.
pub fn tune_problem_set<P: PathPlanner<f64> + ?Sized>(
    planner: &P,
    problems: &[PlanningProblem<f64>],
    template: &PlannerParams<f64>,
    objective: &ObjectiveConfig,
    cfg: &TunerConfig,
) -> Result<TuneOutcome> {
    if problems.is_empty() {
        return Err(invalid("cannot tune on an empty problem set"));
    }
    let obj = ProblemSetObjective {
        planner,
        problems,
        template: template.clone(),
        objective: objective.clone(),
    };
    tune(&obj, cfg)
}

pub fn write_history_csv<W: Write>(history: &[TrialRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for t in history {
        out.serialize(HistoryRow {
            trial_id: t.trial_id,
            step_size: t.params.step_size,
            goal_bias: t.params.goal_bias,
            resource: t.resource,
            loss: t.loss,
            origin: t.origin,
            bracket: t.bracket,
            round: t.round,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_history_csv<R: Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut input = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in input.deserialize::<HistoryRow>() {
        let row = row?;
        out.push(TrialRecord {
            trial_id: row.trial_id,
            params: ParamPair::new(row.step_size, row.goal_bias),
            resource: row.resource,
            loss: row.loss,
            origin: row.origin,
            bracket: row.bracket,
            round: row.round,
        });
    }
    Ok(out)
}

// flat CSV row; csv does not support nested structs
#[derive(Debug, Serialize, Deserialize)]
struct HistoryRow {
    trial_id: u64,
    step_size: f64,
    goal_bias: f64,
    resource: usize,
    loss: f64,
    origin: Origin,
    bracket: usize,
    round: usize,
}
