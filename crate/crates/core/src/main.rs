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

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use plantune::clustering::{
    cluster_report, dbscan, read_points_csv, write_labels_csv, write_points_csv, write_recommendations_csv,
};
use plantune::harness::config::{Config, PlannerKind};
use plantune::harness::experiments::{run_cluster_experiment, run_generalization_experiment, ResultTable, Setup, SingleProblemTuner};
use plantune::harness::files::{load_environment, load_environments, save_environment, PROBLEMS_SUFFIX};
use plantune::harness::generate::{desk_robot, generate_environment, Environment};
use plantune::harness::synthetic::SyntheticPlanner;
use plantune::objective::{evaluate, LossReport};
use plantune::planner::{PathPlanner, RrtStarConnect};
use plantune::scalar::derive_seed;
use plantune::tuner::{read_history_csv, tune_problem_set, write_history_csv};
use plantune::{Error, Result};

#[derive(Parser)]
#[command(name = "plantune", version, about = "Parameter tuning for a parallel RRT*-Connect planner")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; missing keys take the preset's values
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// starting values before the config file is applied
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// override one config key, e.g. --set t_max=2.0 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// master seed; wins over the config file and PLANTUNE_SEED
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV output file (stdout when omitted) or, for multi-file commands, a directory
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 1 s budgets, 3 passes, 24 trials, single-threaded planning
    Desk,
    /// 20 s budgets, 5 passes, 100 trials, 8 planner workers
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Generate procedural environments into the --out directory
    GenScenes,
    /// Plan every problem once with the configured step size and goal bias
    Plan(Inputs),
    /// Compute the quantile loss of the configured parameters on a problem set
    Evaluate(Inputs),
    /// Tune step size and goal bias on a problem set
    Tune(Inputs),
    /// Cluster tuned parameter points from a CSV file
    Cluster {
        /// CSV with problem_id,environment_id,step_size,goal_bias
        #[arg(long)]
        points: PathBuf,
    },
    /// Tune per environment and on their union, then cross-evaluate
    ExperimentGeneralization(Inputs),
    /// Tune per training problem, cluster, and evaluate centres on test environments
    ExperimentCluster {
        #[arg(long, required = true, num_args = 1..)]
        train: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        test: Vec<PathBuf>,
    },
    /// Print a readable summary of a CSV produced by another subcommand
    Report {
        /// result table, tuning history or loss report
        input: PathBuf,
    },
}

#[derive(Args)]
struct Inputs {
    /// `.problems.json` files or directories holding them
    #[arg(required = true, num_args = 1..)]
    problems: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(c: &Common) -> Result<Config> {
    let mut cfg = match c.preset {
        Preset::Desk => Config::desk(),
        Preset::Full => Config::default(),
    };
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path)?;
        // a partial file overlays the preset rather than the built-in defaults
        let table: toml::Table = toml::from_str(&text)?;
        for (k, v) in table {
            cfg.apply_override(&format!("{k}={v}"))?;
        }
    }
    cfg.apply_env()?;
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    for o in &c.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn planner(cfg: &Config) -> Box<dyn PathPlanner<f64>> {
    match cfg.planner {
        PlannerKind::RrtStarConnect => Box::new(RrtStarConnect),
        PlannerKind::Synthetic => Box::new(SyntheticPlanner::default()),
    }
}

fn load_inputs(paths: &[PathBuf]) -> Result<Vec<Environment>> {
    let mut envs = Vec::new();
    for p in paths {
        if p.is_dir() {
            envs.extend(load_environments(p)?);
        } else if p.to_string_lossy().ends_with(PROBLEMS_SUFFIX) {
            envs.push(load_environment(p)?);
        } else {
            return Err(Error::Configuration(format!("{} is neither a directory nor a {PROBLEMS_SUFFIX} file", p.display())));
        }
    }
    Ok(envs)
}

fn csv_sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().ok_or_else(|| Error::Configuration("this command needs --out <directory>".into()))?;
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn setup<'a>(cfg: &Config, planner: &'a dyn PathPlanner<f64>) -> Setup<'a, dyn PathPlanner<f64> + 'a> {
    Setup {
        planner,
        template: cfg.planner_params(),
        objective: cfg.objective(),
        tuner: cfg.tuner(),
        jobs: cfg.job_count(),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let out = &cli.common.out;
    match cli.command {
        Command::GenScenes => {
            let dir = out_dir(out)?;
            let model = desk_robot();
            let gen = cfg.generator();
            let mut summary = csv::Writer::from_writer(create(&dir.join("environments.csv"))?);
            summary.write_record(["environment_id", "level", "obstacles", "problems"])?;
            let mut index = 0u64;
            for level in &cfg.levels {
                for k in 0..cfg.envs_per_level {
                    let id = format!("{level}_{k}");
                    let env = generate_environment(&id, *level, &model, derive_seed(cfg.master_seed, index), &gen)?;
                    index += 1;
                    let path = save_environment(&env, &dir)?;
                    summary.write_record([
                        id.clone(),
                        level.to_string(),
                        env.scene.obstacles.len().to_string(),
                        env.problems.len().to_string(),
                    ])?;
                    eprintln!("{id}: {} obstacles, {} problems -> {}", env.scene.obstacles.len(), env.problems.len(), path.display());
                }
            }
            summary.flush()?;
        }
        Command::Plan(inputs) => {
            let envs = load_inputs(&inputs.problems)?;
            let planner = planner(&cfg);
            let base = cfg.planner_params();
            let mut w = csv::Writer::from_writer(csv_sink(out)?);
            w.write_record(["environment_id", "problem_id", "success", "planning_time", "path_length", "iterations", "waypoints"])?;
            let (mut solved, mut total) = (0usize, 0usize);
            for env in &envs {
                for (n, problem) in env.problems.iter().enumerate() {
                    let params = plantune::planner::PlannerParams {
                        seed: derive_seed(base.seed, n as u64),
                        ..base.clone()
                    };
                    let r = planner.plan(problem, &params)?;
                    total += 1;
                    solved += usize::from(r.success);
                    w.write_record([
                        env.id.clone(),
                        problem.id.clone(),
                        r.success.to_string(),
                        r.planning_time.to_string(),
                        r.path_length.to_string(),
                        r.iterations.to_string(),
                        r.waypoints.len().to_string(),
                    ])?;
                }
            }
            w.flush()?;
            eprintln!("solved {solved} of {total} problems (step size {}, goal bias {})", cfg.step_size, cfg.goal_bias);
        }
        Command::Evaluate(inputs) => {
            let envs = load_inputs(&inputs.problems)?;
            let problems: Vec<_> = envs.iter().flat_map(|e| e.problems.iter().cloned()).collect();
            let planner = planner(&cfg);
            let report = evaluate(&*planner, &problems, &cfg.planner_params(), &cfg.objective())?;
            report.write_csv(csv_sink(out)?)?;
            eprintln!(
                "loss {} (q = {}) over {} passes of {} problems; mean {}, median {}, failures {}",
                report.loss,
                cfg.quantile,
                report.per_repetition_sums.len(),
                problems.len(),
                report.mean(),
                report.median(),
                report.failure_count
            );
        }
        Command::Tune(inputs) => {
            let envs = load_inputs(&inputs.problems)?;
            let problems: Vec<_> = envs.iter().flat_map(|e| e.problems.iter().cloned()).collect();
            let planner = planner(&cfg);
            let outcome = tune_problem_set(&*planner, &problems, &cfg.planner_params(), &cfg.objective(), &cfg.tuner())?;
            write_history_csv(&outcome.history, csv_sink(out)?)?;
            eprintln!(
                "best step size {} goal bias {} (loss {}, trial {}) after {} trials",
                outcome.best.step_size,
                outcome.best.goal_bias,
                outcome.best_loss,
                outcome.best_trial,
                cfg.n_trials
            );
        }
        Command::Cluster { points } => {
            let dir = out_dir(out)?;
            let points = read_points_csv(File::open(&points)?)?;
            let pairs: Vec<_> = points.iter().map(|p| p.pair()).collect();
            let assignment = dbscan(&pairs, &cfg.cluster())?;
            let report = cluster_report(&assignment, &points)?;
            write_labels_csv(&points, &assignment, create(&dir.join("labels.csv"))?)?;
            write_recommendations_csv(&report.recommendations, create(&dir.join("recommendations.csv"))?)?;
            eprint!("{report}");
        }
        Command::ExperimentGeneralization(inputs) => {
            let envs = load_inputs(&inputs.problems)?;
            let planner = planner(&cfg);
            let table = run_generalization_experiment(&setup(&cfg, &*planner), &envs, cfg.union_source)?;
            table.write_csv(csv_sink(out)?)?;
            eprint!("{table}");
        }
        Command::ExperimentCluster { train, test } => {
            let dir = out_dir(out)?;
            let train = load_inputs(&train)?;
            let test = if test.is_empty() { Vec::new() } else { load_inputs(&test)? };
            let planner = planner(&cfg);
            let tuner = SingleProblemTuner {
                planner: &*planner,
                template: cfg.planner_params(),
                objective: cfg.objective(),
                tuner: cfg.tuner(),
            };
            let exp = run_cluster_experiment(&setup(&cfg, &*planner), &tuner, &train, &test, &cfg.cluster())?;
            write_points_csv(&exp.points, create(&dir.join("points.csv"))?)?;
            write_labels_csv(&exp.points, &exp.assignment, create(&dir.join("labels.csv"))?)?;
            write_recommendations_csv(&exp.report.recommendations, create(&dir.join("recommendations.csv"))?)?;
            exp.table.write_csv(create(&dir.join("clusters.csv"))?)?;
            eprint!("{}", exp.report);
            eprint!("{}", exp.table);
        }
        Command::Report { input } => report(&input, cfg.quantile)?,
    }
    Ok(())
}

fn report(path: &Path, q: f64) -> Result<()> {
    let header = csv::Reader::from_path(path)?.headers()?.clone();
    let first = (header.get(0).unwrap_or(""), header.get(1).unwrap_or(""));
    let mut stdout = io::stdout().lock();
    match first {
        ("source" | "cluster", _) => {
            let table = ResultTable::read_csv(File::open(path)?)?;
            write!(stdout, "{table}")?;
            // how much each row loses against the best row per target
            for (t, target) in table.targets.iter().enumerate() {
                let best = table.rows.iter().map(|r| r.cells[t].quantile).fold(f64::INFINITY, f64::min);
                for r in &table.rows {
                    writeln!(stdout, "{target}: {} at {:.2}x the best quantile loss", r.key, r.cells[t].quantile / best)?;
                }
            }
        }
        ("trial_id", "step_size") => {
            let history = read_history_csv(File::open(path)?)?;
            let top = history.iter().map(|t| t.resource).max().unwrap_or(0);
            let best = history
                .iter()
                .filter(|t| t.resource == top)
                .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.trial_id.cmp(&b.trial_id)))
                .ok_or_else(|| Error::Configuration("empty tuning history".into()))?;
            let model = history.iter().filter(|t| t.origin == plantune::tuner::Origin::Model).count();
            writeln!(
                stdout,
                "{} evaluations, {model} model proposals; best trial {} at step size {} goal bias {} with loss {}",
                history.len(),
                best.trial_id,
                best.params.step_size,
                best.params.goal_bias,
                best.loss
            )?;
        }
        ("trial_id", "repetition") => {
            let report = LossReport::read_csv(File::open(path)?, q)?;
            writeln!(
                stdout,
                "{} runs over {} passes: mean {}, median {}, failures {}",
                report.runs.len(),
                report.per_repetition_sums.len(),
                report.mean(),
                report.median(),
                report.failure_count
            )?;
        }
        (a, b) => return Err(Error::Configuration(format!("unrecognized CSV (columns {a:?}, {b:?})"))),
    }
    Ok(())
}
