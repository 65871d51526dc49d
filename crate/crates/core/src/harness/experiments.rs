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

//! Cross-environment generalization and per-problem cluster experiments.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::generate::Environment;
use crate::clustering::{cluster_report, dbscan, ClusterAssignment, ClusterConfig, ClusterReport, ParamPoint};
use crate::error::{invalid, Error, Result};
use crate::objective::{evaluate, ObjectiveConfig};
use crate::planner::{PathPlanner, PlannerParams, PlanningProblem};
use crate::scalar::derive_seed;
use crate::tuner::{tune_problem_set, ParamPair, TunerConfig};

/// Stream tags for seeds derived from the master seed.
const EVAL_STREAM: u64 = 0xe7a1;
const PROBLEM_STREAM: u64 = 0x9b0b;

/// Everything an experiment needs apart from its environments.
pub struct Setup<'a, P: ?Sized> {
    pub planner: &'a P,
    /// step size and goal bias are replaced per evaluation
    pub template: PlannerParams<f64>,
    pub objective: ObjectiveConfig,
    pub tuner: TunerConfig,
    /// concurrent jobs for tuning and evaluation fan-out
    pub jobs: usize,
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
pub(crate) fn par_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(usize, &T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Loss statistics of one parameter pair on one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub mean: f64,
    /// the objective's quantile loss
    pub quantile: f64,
    pub median: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// tuning source or cluster id
    pub key: String,
    pub params: ParamPair,
    /// tuning loss for generalization rows, cluster size for cluster rows
    pub info: f64,
    pub cells: Vec<Cell>,
}

/// A parameter-pair by target-environment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub key_column: String,
    pub info_column: String,
    pub targets: Vec<String>,
    pub rows: Vec<Row>,
}

const CELL_FIELDS: [&str; 4] = ["mean", "quantile", "median", "failures"];

impl ResultTable {
    pub fn row(&self, key: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.key == key)
    }

    pub fn target_index(&self, target: &str) -> Option<usize> {
        self.targets.iter().position(|t| t == target)
    }

    pub fn cell(&self, key: &str, target: &str) -> Option<&Cell> {
        Some(&self.row(key)?.cells[self.target_index(target)?])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            self.key_column.clone(),
            "step_size".into(),
            "goal_bias".into(),
            self.info_column.clone(),
        ];
        for t in &self.targets {
            header.extend(CELL_FIELDS.iter().map(|f| format!("{t}_{f}")));
        }
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.key.clone(),
                r.params.step_size.to_string(),
                r.params.goal_bias.to_string(),
                r.info.to_string(),
            ];
            for c in &r.cells {
                rec.extend([c.mean.to_string(), c.quantile.to_string(), c.median.to_string(), c.failures.to_string()]);
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(r);
        let header = input.headers()?.clone();
        if header.len() < 4 || (header.len() - 4) % CELL_FIELDS.len() != 0 {
            return Err(invalid("result table header has the wrong shape"));
        }
        let targets = (4..header.len())
            .step_by(CELL_FIELDS.len())
            .map(|i| {
                header[i]
                    .strip_suffix("_mean")
                    .map(str::to_string)
                    .ok_or_else(|| invalid(format!("expected a *_mean column, found {:?}", &header[i])))
            })
            .collect::<Result<Vec<_>>>()?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| invalid(format!("bad number {s:?}")));
        let mut rows = Vec::new();
        for rec in input.records() {
            let rec = rec?;
            let cells = (0..targets.len())
                .map(|t| {
                    let b = 4 + t * CELL_FIELDS.len();
                    Ok(Cell {
                        mean: num(&rec[b])?,
                        quantile: num(&rec[b + 1])?,
                        median: num(&rec[b + 2])?,
                        failures: rec[b + 3].parse().map_err(|_| invalid("bad failure count"))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(Row {
                key: rec[0].to_string(),
                params: ParamPair::new(num(&rec[1])?, num(&rec[2])?),
                info: num(&rec[3])?,
                cells,
            });
        }
        Ok(ResultTable {
            key_column: header[0].to_string(),
            info_column: header[3].to_string(),
            targets,
            rows,
        })
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<14} {:>7} {:>7} {:>10}", self.key_column, "step", "bias", self.info_column)?;
        for t in &self.targets {
            write!(f, " | {t:>22}")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:<14} {:>7.3} {:>7.3} {:>10.3}", r.key, r.params.step_size, r.params.goal_bias, r.info)?;
            for c in &r.cells {
                write!(f, " | {:>9.2} m {:>9.2} q", c.mean, c.quantile)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn evaluate_cells<P: PathPlanner<f64> + ?Sized>(
    setup: &Setup<'_, P>,
    params: &[ParamPair],
    targets: &[&Environment],
) -> Result<Vec<Vec<Cell>>> {
    let jobs: Vec<(usize, usize)> = (0..params.len())
        .flat_map(|p| (0..targets.len()).map(move |t| (p, t)))
        .collect();
    let eval_seed = derive_seed(setup.tuner.master_seed, EVAL_STREAM);
    let flat = par_map(&jobs, setup.jobs, |_, &(p, t)| {
        let mut run = setup.template.with_pair(params[p].step_size, params[p].goal_bias);
        run.seed = eval_seed;
        let report = evaluate(setup.planner, &targets[t].problems, &run, &setup.objective)?;
        Ok(Cell {
            mean: report.mean(),
            quantile: report.loss,
            median: report.median(),
            failures: report.failure_count,
        })
    })?;
    let mut it = flat.into_iter();
    Ok((0..params.len()).map(|_| it.by_ref().take(targets.len()).collect()).collect())
}

/// Tunes on every environment (and on their union when `union` is set),
/// then evaluates each tuned pair on every environment. All sources share
/// the tuner seed and all cells share one evaluation seed.
pub fn run_generalization_experiment<P: PathPlanner<f64> + ?Sized>(
    setup: &Setup<'_, P>,
    envs: &[Environment],
    union: bool,
) -> Result<ResultTable> {
    if envs.is_empty() {
        return Err(Error::Configuration("generalization needs at least one environment".into()));
    }
    let ids: BTreeSet<&str> = envs.iter().map(|e| e.id.as_str()).collect();
    if ids.len() != envs.len() {
        return Err(Error::Configuration("environment ids must be unique".into()));
    }
    let mut sources: Vec<(String, Vec<PlanningProblem<f64>>)> =
        envs.iter().map(|e| (e.id.clone(), e.problems.clone())).collect();
    if union {
        sources.push(("union".into(), envs.iter().flat_map(|e| e.problems.iter().cloned()).collect()));
    }
    let tuned = par_map(&sources, setup.jobs, |_, (_, problems)| {
        tune_problem_set(setup.planner, problems, &setup.template, &setup.objective, &setup.tuner)
    })?;
    let params: Vec<ParamPair> = tuned.iter().map(|t| t.best).collect();
    let targets: Vec<&Environment> = envs.iter().collect();
    let cells = evaluate_cells(setup, &params, &targets)?;
    Ok(ResultTable {
        key_column: "source".into(),
        info_column: "tune_loss".into(),
        targets: envs.iter().map(|e| e.id.clone()).collect(),
        rows: sources
            .iter()
            .zip(tuned)
            .zip(cells)
            .map(|(((name, _), t), cells)| Row {
                key: name.clone(),
                params: t.best,
                info: t.best_loss,
                cells,
            })
            .collect(),
    })
}

/// Produces the tuned parameter pair of a single problem.
pub trait ProblemTuner: Sync {
    fn tune_problem(&self, problem: &PlanningProblem<f64>, environment_id: &str, seed: u64) -> Result<ParamPair>;
}

/// Tunes each problem on its own with the multi-fidelity tuner.
pub struct SingleProblemTuner<'a, P: ?Sized> {
    pub planner: &'a P,
    pub template: PlannerParams<f64>,
    pub objective: ObjectiveConfig,
    pub tuner: TunerConfig,
}

impl<P: PathPlanner<f64> + ?Sized> ProblemTuner for SingleProblemTuner<'_, P> {
    fn tune_problem(&self, problem: &PlanningProblem<f64>, _environment_id: &str, seed: u64) -> Result<ParamPair> {
        let cfg = TunerConfig {
            master_seed: seed,
            ..self.tuner.clone()
        };
        let out = tune_problem_set(self.planner, std::slice::from_ref(problem), &self.template, &self.objective, &cfg)?;
        Ok(out.best)
    }
}

#[derive(Debug, Clone)]
pub struct ClusterExperiment {
    pub points: Vec<ParamPoint>,
    pub assignment: ClusterAssignment,
    pub report: ClusterReport,
    /// one row per cluster centre, evaluated on each test environment
    pub table: ResultTable,
}

/// Tunes every training problem individually, clusters the tuned pairs and
/// evaluates each cluster centre on the test environments.
pub fn run_cluster_experiment<P: PathPlanner<f64> + ?Sized, Q: ProblemTuner + ?Sized>(
    setup: &Setup<'_, P>,
    problem_tuner: &Q,
    train: &[Environment],
    test: &[Environment],
    cluster_cfg: &ClusterConfig,
) -> Result<ClusterExperiment> {
    let train_ids: BTreeSet<&str> = train.iter().map(|e| e.id.as_str()).collect();
    if let Some(shared) = test.iter().find(|e| train_ids.contains(e.id.as_str())) {
        return Err(Error::Configuration(format!(
            "environment {:?} is in both the training and the test set",
            shared.id
        )));
    }
    let jobs: Vec<(&str, &PlanningProblem<f64>)> = train
        .iter()
        .flat_map(|e| e.problems.iter().map(move |p| (e.id.as_str(), p)))
        .collect();
    if jobs.is_empty() {
        return Err(Error::Configuration("training set holds no problems".into()));
    }
    let base = derive_seed(setup.tuner.master_seed, PROBLEM_STREAM);
    let points = par_map(&jobs, setup.jobs, |i, &(env, problem)| {
        let best = problem_tuner.tune_problem(problem, env, derive_seed(base, i as u64))?;
        Ok(ParamPoint::new(problem.id.clone(), env, best.step_size, best.goal_bias))
    })?;
    let pairs: Vec<ParamPair> = points.iter().map(|p| p.pair()).collect();
    let assignment = dbscan(&pairs, cluster_cfg)?;
    let report = cluster_report(&assignment, &points)?;
    let targets: Vec<&Environment> = test.iter().collect();
    let cells = if targets.is_empty() {
        vec![Vec::new(); assignment.centers.len()]
    } else {
        evaluate_cells(setup, &assignment.centers, &targets)?
    };
    let table = ResultTable {
        key_column: "cluster".into(),
        info_column: "size".into(),
        targets: test.iter().map(|e| e.id.clone()).collect(),
        rows: cells
            .into_iter()
            .enumerate()
            .map(|(c, cells)| Row {
                key: format!("c{c}"),
                params: assignment.centers[c],
                info: assignment.sizes[c] as f64,
                cells,
            })
            .collect(),
    };
    Ok(ClusterExperiment {
        points,
        assignment,
        report,
        table,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::harness::generate::ClutterLevel;
    use crate::harness::synthetic::SyntheticPlanner;
    use crate::kinematics::{JointConfig, Obstacle, RobotModel, Scene};
    use crate::planner::PathResult;

    fn env(id: &str, obstacles: usize, problems: usize) -> Environment {
        let model = Arc::new(RobotModel::uniform(vec![0.4, 0.35, 0.25], 0.03, std::f64::consts::PI).unwrap());
        // obstacles out of reach: they only steer the synthetic cost model
        let obs = (0..obstacles).map(|i| Obstacle::sphere([3.0, i as f64, 0.0], 0.1)).collect();
        let scene = Arc::new(Scene::new(id, obs).unwrap());
        let problems = (0..problems)
            .map(|k| {
                let g = 0.3 + 0.1 * (k % 10) as f64;
                PlanningProblem::new(
                    format!("{id}_p{k}"),
                    model.clone(),
                    scene.clone(),
                    JointConfig::from_f64(&[0.0, 0.0, 0.0]),
                    JointConfig::from_f64(&[g, -g, 0.5]),
                )
                .unwrap()
            })
            .collect();
        Environment {
            id: id.into(),
            level: Some(ClutterLevel::Open),
            model,
            scene,
            problems,
            witnesses: Vec::new(),
        }
    }

    fn setup<P: PathPlanner<f64> + ?Sized>(planner: &P, trials: usize) -> Setup<'_, P> {
        Setup {
            planner,
            template: PlannerParams {
                max_time: 1.0,
                worker_count: 1,
                ..Default::default()
            },
            objective: ObjectiveConfig {
                t_max: 1.0,
                repetitions: 3,
                ..Default::default()
            },
            tuner: TunerConfig {
                n_trials: trials,
                max_resource: 3,
                master_seed: 7,
                ..Default::default()
            },
            jobs: 2,
        }
    }

    struct Flat;
    impl PathPlanner<f64> for Flat {
        fn plan(&self, p: &PlanningProblem<f64>, params: &PlannerParams<f64>) -> Result<PathResult<f64>> {
            Ok(PathResult {
                success: true,
                waypoints: vec![p.start.clone(), p.goal.clone()],
                planning_time: 0.1 + 0.01 * params.step_size,
                path_length: p.straight_line_distance(),
                iterations: 1,
            })
        }
    }

    #[test]
    fn single_environment_rows_coincide() {
        let planner = SyntheticPlanner::default();
        let table = run_generalization_experiment(&setup(&planner, 12), &[env("a", 2, 4)], true).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.targets, vec!["a".to_string()]);
        assert_eq!(table.rows[0].params, table.rows[1].params);
        assert_eq!(table.rows[0].cells, table.rows[1].cells);
    }

    #[test]
    fn environment_independent_costs_give_equal_rows() {
        let envs = [env("a", 0, 3), env("b", 4, 3)];
        let table = run_generalization_experiment(&setup(&Flat, 10), &envs, true).unwrap();
        assert_eq!(table.rows.len(), 3);
        for r in &table.rows[1..] {
            assert_eq!(r.cells, table.rows[0].cells);
        }
    }

    #[test]
    fn synthetic_run_is_reproducible_and_round_trips() {
        let envs = [env("a", 0, 3), env("b", 5, 3)];
        let planner = SyntheticPlanner::default();
        let t1 = run_generalization_experiment(&setup(&planner, 15), &envs, true).unwrap();
        let t2 = run_generalization_experiment(&setup(&planner, 15), &envs, false).unwrap();
        assert_eq!(t1.rows[..2], t2.rows[..]);
        let mut buf = Vec::new();
        t1.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"source,step_size,goal_bias,tune_loss,a_mean,a_quantile,a_median,a_failures,b_mean"));
        assert_eq!(ResultTable::read_csv(&buf[..]).unwrap(), t1);
    }

    #[test]
    fn par_map_keeps_order_and_propagates_errors() {
        let items: Vec<u64> = (0..20).collect();
        let out = par_map(&items, 4, |i, &x| Ok(i as u64 * 100 + x)).unwrap();
        assert_eq!(out, (0..20).map(|x| x * 101).collect::<Vec<_>>());
        let err = par_map(&items, 3, |_, &x| if x == 7 { Err(invalid("seven")) } else { Ok(x) });
        assert!(err.is_err());
    }

    struct Planted {
        modes: [(f64, f64); 2],
    }

    impl ProblemTuner for Planted {
        fn tune_problem(&self, problem: &PlanningProblem<f64>, _env: &str, seed: u64) -> Result<ParamPair> {
            let k: usize = problem.id.rsplit('p').next().unwrap().parse().unwrap();
            let (s, b) = self.modes[k % 2];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // dispersion well inside eps / 2 in the scaled metric
            Ok(ParamPair::new(s + rng.random_range(-0.02..0.02), b + rng.random_range(-0.005..0.005)))
        }
    }

    #[test]
    fn planted_modes_become_two_clusters() {
        let train = [env("t0", 1, 20), env("t1", 3, 20)];
        let test = [env("x", 2, 3)];
        let tuner = Planted {
            modes: [(1.0, 0.2), (2.0, 0.6)],
        };
        let exp = run_cluster_experiment(&setup(&SyntheticPlanner::default(), 1), &tuner, &train, &test, &ClusterConfig::default()).unwrap();
        assert_eq!(exp.assignment.cluster_count(), 2);
        assert_eq!(exp.assignment.outlier_count(), 0);
        assert_eq!(exp.table.rows.len(), 2);
        assert_eq!(exp.table.targets, vec!["x".to_string()]);
        let mut buf = Vec::new();
        exp.table.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"cluster,step_size,goal_bias,size,x_mean"));
        assert_eq!(ResultTable::read_csv(&buf[..]).unwrap(), exp.table);
    }

    #[test]
    fn identical_optima_make_one_cluster() {
        struct Same;
        impl ProblemTuner for Same {
            fn tune_problem(&self, _: &PlanningProblem<f64>, _: &str, _: u64) -> Result<ParamPair> {
                Ok(ParamPair::new(1.3, 0.2))
            }
        }
        let exp = run_cluster_experiment(&setup(&Flat, 1), &Same, &[env("t", 0, 6)], &[], &ClusterConfig::default()).unwrap();
        assert_eq!(exp.assignment.cluster_count(), 1);
        assert_eq!(exp.assignment.outlier_count(), 0);
    }

    #[test]
    fn overlapping_train_and_test_is_rejected() {
        let e = env("same", 0, 2);
        let r = run_cluster_experiment(&setup(&Flat, 1), &SingleProblemTuner {
            planner: &Flat,
            template: PlannerParams::default(),
            objective: ObjectiveConfig::default(),
            tuner: TunerConfig::default(),
        }, &[e.clone()], &[e], &ClusterConfig::default());
        assert!(matches!(r, Err(Error::Configuration(_))));
    }
}
