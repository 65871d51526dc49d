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

//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so criteria execute one after another:
//! several of them measure wall-clock planning time and must not compete for
//! the CPU.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use plantune::clustering::{dbscan, param_distance, ClusterConfig, ClusterLabel, GOAL_BIAS_WEIGHT};
use plantune::harness::config::Config;
use plantune::harness::experiments::{run_cluster_experiment, run_generalization_experiment, ProblemTuner, Setup};
use plantune::harness::generate::{desk_robot, generate_environment, ClutterLevel, Environment, GeneratorConfig};
use plantune::harness::synthetic::SyntheticPlanner;
use plantune::kinematics::{config_collides, config_distance, motion_collides, JointConfig, RobotModel, Scene};
use plantune::objective::{problem_cost, quantile, ObjectiveConfig};
use plantune::planner::{
    plan, plan_traced, PathResult, PlannerParams, PlanningProblem, RrtStarConnect, Termination, GOAL_BIAS_RANGE, STEP_SIZE_RANGE,
};
use plantune::scalar::derive_seed;
use plantune::tuner::{hyperband_schedule, tune, Origin, ParamPair, TunerConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= 1e-12, || format!("{what}: got {a}, expected {b}"))
}

fn problem(model: &Arc<RobotModel<f64>>, scene: &Arc<Scene<f64>>, start: &[f64], goal: &[f64]) -> PlanningProblem<f64> {
    PlanningProblem::new("p", model.clone(), scene.clone(), JointConfig::from_f64(start), JointConfig::from_f64(goal)).unwrap()
}

fn exact_formulas() -> Outcome {
    let model = Arc::new(desk_robot());
    let scene = Arc::new(Scene::empty("free"));
    let cfg = ObjectiveConfig::default();
    let p = problem(&model, &scene, &[0.0, 0.0, 0.0], &[1.0, -0.5, 0.25]);
    let d = p.straight_line_distance();
    let ok = |t: f64, len: f64| PathResult {
        success: true,
        waypoints: vec![p.start.clone(), p.goal.clone()],
        planning_time: t,
        path_length: len,
        iterations: 1,
    };
    close(problem_cost(&ok(2.0, d), &p, &cfg), 7.0, "straight path in 2 s")?;
    let failed = PathResult {
        success: false,
        waypoints: Vec::new(),
        planning_time: 20.0,
        path_length: f64::INFINITY,
        iterations: 0,
    };
    close(problem_cost(&failed, &p, &cfg), 160.0, "failure")?;
    let p2 = problem(&model, &scene, &[0.0, 0.0, 0.0], &[2.0, 0.0, 0.0]);
    let r = PathResult {
        waypoints: vec![p2.start.clone(), p2.goal.clone()],
        ..ok(0.5, 4.0)
    };
    close(problem_cost(&r, &p2, &cfg), 3.5, "detour path")?;

    close(param_distance(ParamPair::new(2.0, 0.1), ParamPair::new(1.0, 0.1)), 1.0, "step-only distance")?;
    close(param_distance(ParamPair::new(1.0, 0.3), ParamPair::new(1.0, 0.1)), 0.58, "bias-only distance")?;
    close(param_distance(ParamPair::new(1.3, 0.4), ParamPair::new(1.3, 0.4)), 0.0, "identical points")?;

    close(quantile(&[10.0, 20.0, 30.0, 40.0, 50.0], 0.7).unwrap(), 40.0, "quantile of five")?;
    close(quantile(&[7.0], 0.3).unwrap(), 7.0, "singleton quantile")?;
    close(quantile(&[5.0, 1.0, 3.0], 0.7).unwrap(), 5.0, "unsorted quantile")?;
    ensure(quantile(&[], 0.7).is_err(), || "empty quantile accepted".into())?;
    Ok("9 formula examples exact".into())
}

fn default_constants() -> Outcome {
    let dump: toml::Table = toml::from_str(&Config::default().to_toml().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let f = |k: &str| dump.get(k).and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)));
    let expect = [
        ("time_weight", 3.0),
        ("t_max", 20.0),
        ("repetitions", 5.0),
        ("quantile", 0.7),
        ("eps", 0.15),
        ("min_samples", 3.0),
        ("goal_bias_min", 0.05),
        ("goal_bias_max", 0.75),
        ("step_size_min", 15f64.to_radians()),
        ("step_size_max", 135f64.to_radians()),
        ("worker_count", 8.0),
    ];
    for (k, v) in expect {
        let got = f(k).ok_or_else(|| format!("{k} missing from the config dump"))?;
        ensure((got - v).abs() <= 1e-12, || format!("{k} = {got}, expected {v}"))?;
    }
    let cfg = Config::default();
    close(cfg.objective().failure_cost(), 160.0, "failure cost")?;
    close(GOAL_BIAS_WEIGHT, 2.9, "metric factor")?;
    ensure(STEP_SIZE_RANGE == (15f64.to_radians(), 135f64.to_radians()), || "step box".into())?;
    ensure(GOAL_BIAS_RANGE == (0.05, 0.75), || "bias box".into())?;
    ensure(PlannerParams::<f64>::default().worker_count == 8, || "planner workers".into())?;
    Ok(format!("{} defaults match", expect.len() + 5))
}

/// Brute-force DBSCAN: O(n^2) adjacency, union-find over cores.
fn reference_labels(pts: &[ParamPair], cfg: &ClusterConfig) -> Vec<Option<usize>> {
    let n = pts.len();
    let near = |i: usize, j: usize| param_distance(pts[i], pts[j]) <= cfg.eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= cfg.min_samples).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..i {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // components numbered by their smallest core index
    let mut id_of_root = vec![None; n];
    let mut next = 0;
    let mut labels = vec![None; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let id = *id_of_root[r].get_or_insert_with(|| {
                next += 1;
                next - 1
            });
            labels[i] = Some(id);
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n).filter(|&j| core[j] && near(i, j)).map(|j| labels[j].unwrap()).min();
        }
    }
    labels
}

fn same_up_to_relabeling(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (None, None) => true,
        (Some(x), Some(y)) => *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x,
        _ => false,
    })
}

fn dbscan_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = ClusterConfig::default();
    let mut matched = 0;
    let mut clusters = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        // a few blobs plus uniform noise so that clusters, borders and outliers all occur
        let blobs: Vec<(f64, f64)> = (0..rng.random_range(1..=4))
            .map(|_| (rng.random_range(STEP_SIZE_RANGE.0..STEP_SIZE_RANGE.1), rng.random_range(0.05..0.75)))
            .collect();
        let pts: Vec<ParamPair> = (0..n)
            .map(|_| {
                if rng.random_bool(0.7) {
                    let (s, b) = blobs[rng.random_range(0..blobs.len())];
                    ParamPair::new(
                        (s + rng.random_range(-0.15..0.15)).clamp(0.27, 2.35),
                        (b + rng.random_range(-0.05..0.05)).clamp(0.051, 0.749),
                    )
                } else {
                    ParamPair::new(rng.random_range(0.27..2.35), rng.random_range(0.051..0.749))
                }
            })
            .collect();
        let got = dbscan(&pts, &cfg).map_err(|e| e.to_string())?;
        let labels: Vec<Option<usize>> = got.labels.iter().map(|l| l.cluster()).collect();
        clusters += got.cluster_count();
        if same_up_to_relabeling(&labels, &reference_labels(&pts, &cfg)) {
            matched += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(matched == 200, || format!("{matched}/200 datasets match"))?;
    ensure(secs < 10.0, || format!("took {secs:.1} s"))?;
    Ok(format!("200/200 datasets match ({clusters} clusters total, {secs:.2} s)"))
}

fn revalidate(p: &PlanningProblem<f64>, r: &PathResult<f64>, resolution: f64) -> Result<(), String> {
    let w = &r.waypoints;
    ensure(w.first() == Some(&p.start) && w.last() == Some(&p.goal), || format!("{}: endpoints differ", p.id))?;
    let mut length = 0.0;
    for q in w {
        ensure(p.model.within_limits(q), || format!("{}: waypoint outside limits", p.id))?;
        ensure(!config_collides(&p.model, &p.scene, q).unwrap(), || format!("{}: waypoint collides", p.id))?;
    }
    for pair in w.windows(2) {
        ensure(!motion_collides(&p.model, &p.scene, &pair[0], &pair[1], resolution).unwrap(), || {
            format!("{}: segment collides", p.id)
        })?;
        length += config_distance(&pair[0], &pair[1]).unwrap();
    }
    ensure((length - r.path_length).abs() <= 1e-9 * length.max(1.0), || {
        format!("{}: reported length {} vs {}", p.id, r.path_length, length)
    })
}

fn planner_validity() -> Outcome {
    let start = Instant::now();
    let model = desk_robot();
    let gen = GeneratorConfig::default();
    let mut envs = Vec::new();
    for (i, level) in ClutterLevel::ALL.iter().enumerate() {
        for k in 0..2 {
            envs.push(generate_environment(&format!("{level}_{k}"), *level, &model, derive_seed(40, (i * 2 + k) as u64), &gen).map_err(|e| e.to_string())?);
        }
    }
    let problems: Vec<&PlanningProblem<f64>> = envs.iter().flat_map(|e| e.problems.iter()).collect();
    let workers = [1usize, 4, 8];
    let (mut solved, mut checked_traces) = (0, 0);
    for run in 0..500usize {
        let p = problems[run % problems.len()];
        let params = PlannerParams {
            step_size: 1.0,
            goal_bias: 0.2,
            max_time: 1.0,
            worker_count: workers[run % workers.len()],
            seed: run as u64,
            termination: Termination::Converged { patience: 300 },
            ..PlannerParams::default()
        };
        if params.worker_count == 1 {
            let (r, trace) = plan_traced(p, &params).map_err(|e| e.to_string())?;
            let costs: Vec<f64> = trace.iter().filter_map(|c| c.best_cost).collect();
            ensure(costs.windows(2).all(|w| w[1] <= w[0]), || format!("run {run}: best cost increased"))?;
            if let (Some(last), true) = (costs.last(), r.success) {
                ensure(r.path_length <= *last + 1e-9, || format!("run {run}: result worse than trace"))?;
            }
            checked_traces += 1;
            if r.success {
                revalidate(p, &r, params.edge_resolution)?;
                solved += 1;
            }
        } else {
            let r = plan(p, &params).map_err(|e| e.to_string())?;
            if r.success {
                revalidate(p, &r, params.edge_resolution)?;
                solved += 1;
            } else {
                ensure(r.waypoints.is_empty() && r.path_length.is_infinite(), || format!("run {run}: failure carries a path"))?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 600.0, || format!("took {secs:.0} s"))?;
    Ok(format!("500 runs, {solved} solved paths all valid, {checked_traces} monotone traces ({secs:.0} s)"))
}

fn free_space_optimality() -> Outcome {
    let model = Arc::new(desk_robot());
    let scene = Arc::new(Scene::empty("free"));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ratios = Vec::new();
    for seed in 0..50u64 {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-PI * 0.9..PI * 0.9)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-PI * 0.9..PI * 0.9)).collect();
        let p = problem(&model, &scene, &a, &b);
        let params = PlannerParams {
            max_time: 2.0,
            worker_count: 1,
            seed,
            termination: Termination::Converged { patience: 300 },
            ..PlannerParams::default()
        };
        let r = plan(&p, &params).map_err(|e| e.to_string())?;
        ensure(r.success, || format!("seed {seed} failed in free space"))?;
        ratios.push(r.path_length / config_distance(&p.start, &p.goal).unwrap());
    }
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[24] + ratios[25]);
    ensure(median <= 1.05, || format!("median length ratio {median}"))?;
    Ok(format!("median length ratio {median:.4}, worst {:.4}", ratios[49]))
}

fn stub_loss(p: ParamPair, resource: usize, seed: u64) -> f64 {
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = (p.step_size - 1.2).powi(2) + 4.0 * (p.goal_bias - 0.3).powi(2);
    // a higher resource averages more independent noisy evaluations
    f + (0..resource).map(|_| noise.sample(&mut rng)).sum::<f64>() / resource as f64
}

fn tuner_convergence() -> Outcome {
    let start = Instant::now();
    let objective = |p: ParamPair, r: usize, seed: u64| -> plantune::Result<f64> { Ok(stub_loss(p, r, seed)) };
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..10u64 {
        let cfg = TunerConfig {
            master_seed: seed,
            ..TunerConfig::default()
        };
        let out = tune(&objective, &cfg).map_err(|e| e.to_string())?;
        let err = (out.best.step_size - 1.2).abs().max((out.best.goal_bias - 0.3).abs());
        if err <= 0.15 {
            hits += 1;
        } else {
            misses.push(format!("seed {seed} at ({:.3}, {:.3})", out.best.step_size, out.best.goal_bias));
        }
    }
    let random = TunerConfig {
        random_fraction: 1.0,
        master_seed: 11,
        ..TunerConfig::default()
    };
    let audit = tune(&objective, &random).map_err(|e| e.to_string())?;
    ensure(audit.history.iter().all(|t| t.origin == Origin::Random), || "model proposal under random_fraction 1".into())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    ensure(hits >= 9, || format!("{hits}/10 runs within 0.15; misses: {}", misses.join(", ")))?;
    Ok(format!("{hits}/10 runs within 0.15, random-only audit clean ({secs:.2} s)"))
}

fn hyperband_table() -> Outcome {
    let table: Vec<Vec<(usize, usize)>> = hyperband_schedule(9, 3)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|b| b.rounds.iter().map(|r| (r.configs, r.resource)).collect())
        .collect();
    let expected = vec![vec![(9, 1), (3, 3), (1, 9)], vec![(5, 3), (1, 9)], vec![(3, 9)]];
    ensure(table == expected, || format!("got {table:?}"))?;
    Ok(format!("{table:?}"))
}

fn generalization() -> Outcome {
    let start = Instant::now();
    let cfg = Config {
        union_source: false,
        jobs: 1,
        ..Config::desk()
    };
    let model = desk_robot();
    let mut wins = 0;
    let mut notes = Vec::new();
    for rep in 0..5u64 {
        let seed = derive_seed(800, rep);
        let gen = cfg.generator();
        let open = generate_environment("open", ClutterLevel::Open, &model, derive_seed(seed, 0), &gen).map_err(|e| e.to_string())?;
        let narrow = generate_environment("narrow", ClutterLevel::NarrowPassage, &model, derive_seed(seed, 1), &gen).map_err(|e| e.to_string())?;
        let setup = Setup {
            planner: &RrtStarConnect,
            template: cfg.planner_params(),
            objective: cfg.objective(),
            tuner: TunerConfig {
                master_seed: seed,
                ..cfg.tuner()
            },
            jobs: 1,
        };
        let table = run_generalization_experiment(&setup, &[open, narrow], false).map_err(|e| e.to_string())?;
        let foreign = table.cell("open", "narrow").unwrap().median;
        let native = table.cell("narrow", "narrow").unwrap().median;
        let ratio = foreign / native;
        if ratio >= 1.5 {
            wins += 1;
        }
        let (o, n) = (table.row("open").unwrap().params, table.row("narrow").unwrap().params);
        notes.push(format!(
            "{ratio:.2} [open ({:.2},{:.2}) narrow ({:.2},{:.2})]",
            o.step_size, o.goal_bias, n.step_size, n.goal_bias
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{wins}/5 replications at >= 1.5x: {} ({secs:.0} s)", notes.join(", "));
    ensure(secs < 1800.0, || format!("took {secs:.0} s"))?;
    ensure(wins >= 4, || detail.clone())?;
    Ok(detail)
}

struct TwoModes;

impl ProblemTuner for TwoModes {
    fn tune_problem(&self, problem: &PlanningProblem<f64>, _env: &str, seed: u64) -> plantune::Result<ParamPair> {
        let k: usize = problem.id.rsplit('_').next().unwrap().trim_start_matches('p').parse().unwrap();
        let (s, b) = if k % 2 == 0 { (1.0, 0.2) } else { (2.0, 0.6) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // widest spread 0.06 + 2.9 * 0.014, about 0.1: inside eps in the scaled metric
        Ok(ParamPair::new(s + rng.random_range(-0.03..0.03), b + rng.random_range(-0.007..0.007)))
    }
}

fn synthetic_env(id: &str, n: usize) -> Environment {
    let model = Arc::new(desk_robot());
    let scene = Arc::new(Scene::empty(id));
    let problems = (0..n)
        .map(|k| {
            let g = 0.2 + 0.1 * k as f64;
            PlanningProblem::new(
                format!("{id}_p{k}"),
                model.clone(),
                scene.clone(),
                JointConfig::from_f64(&[0.0, 0.0, 0.0]),
                JointConfig::from_f64(&[g, -0.5 * g, 0.3]),
            )
            .unwrap()
        })
        .collect();
    Environment {
        id: id.into(),
        level: None,
        model,
        scene,
        problems,
        witnesses: Vec::new(),
    }
}

fn two_mode_clusters() -> Outcome {
    let train = [synthetic_env("train_a", 20), synthetic_env("train_b", 20)];
    let test = [synthetic_env("test", 4)];
    let planner = SyntheticPlanner::default();
    let setup = Setup {
        planner: &planner,
        template: PlannerParams {
            max_time: 1.0,
            ..PlannerParams::default()
        },
        objective: ObjectiveConfig {
            t_max: 1.0,
            ..ObjectiveConfig::default()
        },
        tuner: TunerConfig::default(),
        jobs: 1,
    };
    let exp = run_cluster_experiment(&setup, &TwoModes, &train, &test, &ClusterConfig::default()).map_err(|e| e.to_string())?;
    let a = &exp.assignment;
    ensure(a.cluster_count() == 2, || format!("{} clusters", a.cluster_count()))?;
    ensure(a.outlier_count() == 0, || format!("{} outliers", a.outlier_count()))?;
    ensure(!a.labels.contains(&ClusterLabel::Outlier), || "outlier label".into())?;
    for mode in [ParamPair::new(1.0, 0.2), ParamPair::new(2.0, 0.6)] {
        let gap = a
            .centers
            .iter()
            .map(|c| (c.step_size - mode.step_size).abs().max((c.goal_bias - mode.goal_bias).abs()))
            .fold(f64::INFINITY, f64::min);
        ensure(gap <= 0.05, || format!("no centre within 0.05 of {mode:?} (closest {gap})"))?;
    }
    let c = &a.centers;
    Ok(format!(
        "2 clusters, 0 outliers, centres ({:.3},{:.3}) and ({:.3},{:.3})",
        c[0].step_size, c[0].goal_bias, c[1].step_size, c[1].goal_bias
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact formulas", exact_formulas),
        ("default constants", default_constants),
        ("dbscan oracle", dbscan_oracle),
        ("planner validity", planner_validity),
        ("free-space optimality", free_space_optimality),
        ("tuner convergence", tuner_convergence),
        ("hyperband schedule", hyperband_table),
        ("directional generalization", generalization),
        ("two-mode clusters", two_mode_clusters),
    ];
    // `cargo test -- <filter>` selects criteria by number or name
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filters.is_empty() && !filters.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL - {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
