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

//! Combined time/path-length cost of a planning run and the repeated-pass
//! quantile loss over a problem set.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::planner::{PathPlanner, PathResult, PlannerParams, PlanningProblem};
use crate::scalar::{derive_seed, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// weight of planning time, per second
    pub time_weight: f64,
    /// planning time cap in seconds
    pub t_max: f64,
    /// passes over the problem set
    pub repetitions: usize,
    pub quantile: f64,
    pub failure_cost_offset: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            time_weight: 3.0,
            t_max: 20.0,
            repetitions: 5,
            quantile: 0.7,
            failure_cost_offset: 100.0,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_weight > 0.0) {
            return Err(invalid("time weight must be positive"));
        }
        if !(self.t_max > 0.0) {
            return Err(invalid("t_max must be positive"));
        }
        if self.repetitions == 0 {
            return Err(invalid("at least one repetition is required"));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(invalid("quantile must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Cost charged for an unsolved problem.
    pub fn failure_cost(&self) -> f64 {
        self.time_weight * self.t_max + self.failure_cost_offset
    }
}

/// Cost of one planning run: weighted time plus path length relative to the
/// straight joint-space distance. Failures pay [`ObjectiveConfig::failure_cost`].
/// A solved problem with start equal to goal contributes only its time term.
pub fn problem_cost<T: Scalar>(result: &PathResult<T>, problem: &PlanningProblem<T>, cfg: &ObjectiveConfig) -> f64 {
    if !result.success {
        return cfg.failure_cost();
    }
    let time_term = cfg.time_weight * result.planning_time;
    let straight = problem.straight_line_distance().as_f64();
    if straight == 0.0 {
        return time_term;
    }
    time_term + result.path_length.as_f64() / straight
}

/// Nearest-rank quantile: the element at 1-based rank `ceil(q * n)` of the sorted samples.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("quantile of an empty sample"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid(format!("quantile level {q} outside (0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    // guard against q * n landing a hair above an integer, e.g. 0.6 * 5
    let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub repetition: usize,
    pub problem_id: String,
    pub success: bool,
    pub planning_time: f64,
    pub path_length: f64,
    pub cost: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub trial_id: u64,
    pub loss: f64,
    pub per_repetition_sums: Vec<f64>,
    /// `repetitions x problems`, row-major by pass
    pub per_problem_costs: Vec<Vec<f64>>,
    pub failure_count: usize,
    /// problems solved with coincident start and goal
    pub degenerate_problems: Vec<String>,
    pub pass_seeds: Vec<u64>,
    pub runs: Vec<RunRecord>,
}

impl LossReport {
    /// Assembles a report from per-pass costs, recomputing sums and the loss.
    pub fn from_runs(trial_id: u64, runs: Vec<RunRecord>, pass_seeds: Vec<u64>, q: f64) -> Result<Self> {
        let reps = pass_seeds.len();
        if reps == 0 {
            return Err(invalid("a loss report needs at least one pass"));
        }
        let mut per_problem_costs = vec![Vec::new(); reps];
        for r in &runs {
            per_problem_costs
                .get_mut(r.repetition)
                .ok_or_else(|| invalid(format!("repetition {} out of range", r.repetition)))?
                .push(r.cost);
        }
        let per_repetition_sums: Vec<f64> = per_problem_costs.iter().map(|row| row.iter().sum()).collect();
        let loss = quantile(&per_repetition_sums, q)?;
        let failure_count = runs.iter().filter(|r| !r.success).count();
        let mut degenerate_problems: Vec<String> = runs
            .iter()
            .filter(|r| r.success && r.path_length == 0.0)
            .map(|r| r.problem_id.clone())
            .collect();
        degenerate_problems.sort();
        degenerate_problems.dedup();
        Ok(LossReport {
            trial_id,
            loss,
            per_repetition_sums,
            per_problem_costs,
            failure_count,
            degenerate_problems,
            pass_seeds,
            runs,
        })
    }

    pub fn mean(&self) -> f64 {
        self.per_repetition_sums.iter().sum::<f64>() / self.per_repetition_sums.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut s = self.per_repetition_sums.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.runs {
            out.serialize(LossRow {
                trial_id: self.trial_id,
                repetition: r.repetition.to_string(),
                problem_id: r.problem_id.clone(),
                success: Some(r.success),
                t: Some(r.planning_time),
                c_c: Some(r.path_length),
                cost: r.cost,
                seed: Some(r.seed),
            })?;
        }
        out.serialize(LossRow {
            trial_id: self.trial_id,
            repetition: SUMMARY.to_string(),
            problem_id: String::new(),
            success: None,
            t: None,
            c_c: None,
            cost: self.loss,
            seed: None,
        })?;
        out.flush()?;
        Ok(())
    }

    /// Parses a report written by [`LossReport::write_csv`].
    pub fn read_csv<R: Read>(r: R, q: f64) -> Result<Self> {
        let mut input = csv::Reader::from_reader(r);
        let mut runs = Vec::new();
        let mut trial_id = None;
        let mut summary = None;
        for row in input.deserialize::<LossRow>() {
            let row = row?;
            trial_id.get_or_insert(row.trial_id);
            if row.repetition == SUMMARY {
                summary = Some(row.cost);
                continue;
            }
            let missing = |f: &str| Error::InvalidInput(format!("run row lacks {f}"));
            runs.push(RunRecord {
                repetition: row
                    .repetition
                    .parse()
                    .map_err(|_| invalid(format!("bad repetition {:?}", row.repetition)))?,
                problem_id: row.problem_id,
                success: row.success.ok_or_else(|| missing("success"))?,
                planning_time: row.t.ok_or_else(|| missing("t"))?,
                path_length: row.c_c.ok_or_else(|| missing("c_C"))?,
                cost: row.cost,
                seed: row.seed.ok_or_else(|| missing("seed"))?,
            });
        }
        let reps = runs.iter().map(|r| r.repetition + 1).max().unwrap_or(0);
        let mut pass_seeds = vec![0; reps];
        for j in 0..reps {
            pass_seeds[j] = pass_seed_of(&runs, j);
        }
        let report = LossReport::from_runs(trial_id.unwrap_or(0), runs, pass_seeds, q)?;
        if let Some(loss) = summary {
            if loss.to_bits() != report.loss.to_bits() {
                return Err(invalid(format!("summary loss {loss} disagrees with rows ({})", report.loss)));
            }
        }
        Ok(report)
    }
}

const SUMMARY: &str = "summary";

#[derive(Debug, Serialize, Deserialize)]
struct LossRow {
    trial_id: u64,
    repetition: String,
    problem_id: String,
    success: Option<bool>,
    t: Option<f64>,
    #[serde(rename = "c_C")]
    c_c: Option<f64>,
    cost: f64,
    seed: Option<u64>,
}

// the first problem of each pass runs with the pass seed itself
fn pass_seed_of(runs: &[RunRecord], repetition: usize) -> u64 {
    runs.iter()
        .find(|r| r.repetition == repetition)
        .map(|r| r.seed)
        .unwrap_or(0)
}

/// Runs `cfg.repetitions` passes over `problems` and reduces the per-pass cost
/// sums with the configured quantile. Pass seeds derive from `params.seed`; the
/// first problem of a pass uses the pass seed, later problems derive from it.
/// Every run is capped at `cfg.t_max`.
pub fn evaluate<T: Scalar, P: PathPlanner<T> + ?Sized>(
    planner: &P,
    problems: &[PlanningProblem<T>],
    params: &PlannerParams<T>,
    cfg: &ObjectiveConfig,
) -> Result<LossReport> {
    cfg.validate()?;
    if problems.is_empty() {
        return Err(invalid("problem set is empty"));
    }
    for p in problems {
        p.validate().map_err(|e| Error::Configuration(e.to_string()))?;
    }
    let mut runs = Vec::with_capacity(cfg.repetitions * problems.len());
    let mut pass_seeds = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let pass_seed = derive_seed(params.seed, rep as u64);
        pass_seeds.push(pass_seed);
        for (n, problem) in problems.iter().enumerate() {
            let run_seed = if n == 0 { pass_seed } else { derive_seed(pass_seed, n as u64) };
            let run_params = PlannerParams {
                seed: run_seed,
                max_time: params.max_time.min(cfg.t_max),
                ..params.clone()
            };
            let result = planner.plan(problem, &run_params).map_err(|e| match e {
                Error::RejectedProblem(msg) => Error::Configuration(msg),
                other => other,
            })?;
            runs.push(RunRecord {
                repetition: rep,
                problem_id: problem.id.clone(),
                success: result.success,
                planning_time: result.planning_time,
                path_length: result.path_length.as_f64(),
                cost: problem_cost(&result, problem, cfg),
                seed: run_seed,
            });
        }
    }
    LossReport::from_runs(0, runs, pass_seeds, cfg.quantile)
}
