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

//! Multi-threaded RRT*-Connect.
//!
//! Two trees grow from the start and the goal and swap roles every iteration.
//! The active tree extends towards a sample with RRT* parent selection and
//! rewiring; the other tree then greedily connects towards the new node. Each
//! successful connection is recorded as a pair of coincident nodes, and the
//! best path is the cheapest recorded pair under the current tree costs.
//!
//! Workers share both trees. Tree mutations happen under a per-tree mutex;
//! collision checks run outside of it and every mutation re-validates costs
//! after reacquiring the lock.

pub mod kdtree;
mod tree;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kinematics::{config_distance, distance_unchecked, CollisionChecker, JointConfig, RobotModel, Scene};
use crate::scalar::{derive_seed, Scalar};
use tree::Tree;

/// Step-size search interval in radians (15 to 135 degrees).
pub const STEP_SIZE_RANGE: (f64, f64) = (15.0 * std::f64::consts::PI / 180.0, 135.0 * std::f64::consts::PI / 180.0);
pub const GOAL_BIAS_RANGE: (f64, f64) = (0.05, 0.75);
pub const DEFAULT_WORKERS: usize = 8;
pub const DEFAULT_EDGE_RESOLUTION: f64 = 0.05;

/// Tree size up to which the rewiring radius equals the step size.
const FULL_RADIUS_NODES: usize = 100;
/// Iterations between best-cost checkpoints.
const CHECKPOINT_EVERY: u64 = 32;
/// Relative best-cost decrease that counts as progress for [`Termination::Converged`].
const CONVERGENCE_REL_TOL: f64 = 1e-3;

/// When the planner stops once a budget has not run out yet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Keep optimizing until the time or iteration budget is exhausted.
    Budget,
    /// Stop once a solution exists and the best cost has not improved for
    /// `patience` iterations.
    Converged { patience: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PlannerParams<T> {
    pub step_size: T,
    pub goal_bias: f64,
    /// Wall-clock budget in seconds; may be infinite when `max_iterations` is set.
    pub max_time: f64,
    pub max_iterations: Option<u64>,
    pub worker_count: usize,
    pub seed: u64,
    pub edge_resolution: T,
    pub termination: Termination,
}

impl<T: Scalar> Default for PlannerParams<T> {
    fn default() -> Self {
        PlannerParams {
            step_size: T::lit(1.0),
            goal_bias: 0.25,
            max_time: 20.0,
            max_iterations: None,
            worker_count: DEFAULT_WORKERS,
            seed: 0,
            edge_resolution: T::lit(DEFAULT_EDGE_RESOLUTION),
            termination: Termination::Budget,
        }
    }
}

impl<T: Scalar> PlannerParams<T> {
    pub fn with_pair(&self, step_size: f64, goal_bias: f64) -> Self {
        PlannerParams {
            step_size: T::lit(step_size),
            goal_bias,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.step_size.as_f64();
        if !(s > STEP_SIZE_RANGE.0 && s < STEP_SIZE_RANGE.1) {
            return Err(invalid(format!("step size {s} outside {STEP_SIZE_RANGE:?}")));
        }
        if !(self.goal_bias > GOAL_BIAS_RANGE.0 && self.goal_bias < GOAL_BIAS_RANGE.1) {
            return Err(invalid(format!("goal bias {} outside {GOAL_BIAS_RANGE:?}", self.goal_bias)));
        }
        if !(self.max_time > 0.0) {
            return Err(invalid("max_time must be positive"));
        }
        if self.max_time.is_infinite() && self.max_iterations.is_none() {
            return Err(invalid("an unbounded time budget needs an iteration cap"));
        }
        if self.worker_count == 0 {
            return Err(invalid("worker_count must be at least 1"));
        }
        if !(self.edge_resolution > T::zero()) {
            return Err(invalid("edge resolution must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningProblem<T> {
    pub id: String,
    pub model: Arc<RobotModel<T>>,
    pub scene: Arc<Scene<T>>,
    pub start: JointConfig<T>,
    pub goal: JointConfig<T>,
}

impl<T: Scalar> PlanningProblem<T> {
    pub fn new(
        id: impl Into<String>,
        model: Arc<RobotModel<T>>,
        scene: Arc<Scene<T>>,
        start: JointConfig<T>,
        goal: JointConfig<T>,
    ) -> Result<Self> {
        let p = PlanningProblem {
            id: id.into(),
            model,
            scene,
            start,
            goal,
        };
        p.validate()?;
        Ok(p)
    }

    /// Rejects problems whose endpoints are outside the joint limits or in collision.
    pub fn validate(&self) -> Result<()> {
        let mut checker = CollisionChecker::new(&self.model, &self.scene);
        for (name, q) in [("start", &self.start), ("goal", &self.goal)] {
            if !self.model.within_limits(q) {
                return Err(Error::RejectedProblem(format!(
                    "{}: {name} has wrong dimension or violates joint limits",
                    self.id
                )));
            }
            if checker.config_collides(q.as_slice()) {
                return Err(Error::RejectedProblem(format!("{}: {name} is in collision", self.id)));
            }
        }
        Ok(())
    }

    pub fn straight_line_distance(&self) -> T {
        distance_unchecked(self.start.as_slice(), self.goal.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PathResult<T> {
    pub success: bool,
    pub waypoints: Vec<JointConfig<T>>,
    /// Wall-clock seconds from entry to return.
    pub planning_time: f64,
    /// Joint-space length of the returned path; infinite on failure.
    pub path_length: T,
    pub iterations: u64,
}

/// Best-cost sample taken every few iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint<T> {
    pub iteration: u64,
    pub best_cost: Option<T>,
}

/// Anything that can solve a planning problem; the objective and the tuner are
/// generic over this so tests can substitute deterministic stubs.
pub trait PathPlanner<T: Scalar>: Sync {
    fn plan(&self, problem: &PlanningProblem<T>, params: &PlannerParams<T>) -> Result<PathResult<T>>;
}

/// The parallel RRT*-Connect planner.
#[derive(Debug, Clone, Copy, Default)]
pub struct RrtStarConnect;

impl<T: Scalar> PathPlanner<T> for RrtStarConnect {
    fn plan(&self, problem: &PlanningProblem<T>, params: &PlannerParams<T>) -> Result<PathResult<T>> {
        plan(problem, params)
    }
}

/// Moves from `from` towards `target` by at most `step_size`.
pub fn steer<T: Scalar>(from: &JointConfig<T>, target: &JointConfig<T>, step_size: T) -> Result<JointConfig<T>> {
    if !(step_size > T::zero()) {
        return Err(invalid("step size must be positive"));
    }
    let d = config_distance(from, target)?;
    Ok(JointConfig(steer_slice(from.as_slice(), target.as_slice(), d, step_size)))
}

fn steer_slice<T: Scalar>(from: &[T], target: &[T], dist: T, step: T) -> Vec<T> {
    if dist <= step {
        return target.to_vec();
    }
    let f = step / dist;
    from.iter().zip(target).map(|(&a, &b)| a + (b - a) * f).collect()
}

/// The goal with probability `goal_bias`, otherwise a uniform draw over the joint limits.
pub fn sample<T: Scalar, R: Rng + ?Sized>(
    model: &RobotModel<T>,
    goal: &JointConfig<T>,
    goal_bias: f64,
    rng: &mut R,
) -> JointConfig<T> {
    if rng.random::<f64>() < goal_bias {
        goal.clone()
    } else {
        model.sample_uniform(rng)
    }
}

/// Rewiring radius: the step size for small trees, then shrinking like
/// `(log n / n)^(1/d)`, continuous at the threshold.
pub fn rewire_radius<T: Scalar>(tree_size: usize, dim: usize, step_size: T) -> T {
    if tree_size <= FULL_RADIUS_NODES {
        return step_size;
    }
    let ratio = |n: f64| n.ln() / n;
    let scale = (ratio(tree_size as f64) / ratio(FULL_RADIUS_NODES as f64)).powf(1.0 / dim as f64);
    step_size * T::lit(scale.min(1.0))
}

pub fn plan<T: Scalar>(problem: &PlanningProblem<T>, params: &PlannerParams<T>) -> Result<PathResult<T>> {
    run(problem, params, false).map(|(r, _)| r)
}

/// Same as [`plan`] but also returns the best-cost checkpoints recorded during the run.
pub fn plan_traced<T: Scalar>(
    problem: &PlanningProblem<T>,
    params: &PlannerParams<T>,
) -> Result<(PathResult<T>, Vec<Checkpoint<T>>)> {
    run(problem, params, true)
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

#[derive(Debug)]
struct Progress<T> {
    best: Option<T>,
    last_improvement: u64,
    trace: Vec<Checkpoint<T>>,
}

struct Shared<'p, T> {
    problem: &'p PlanningProblem<T>,
    params: &'p PlannerParams<T>,
    /// index 0 grows from the start, 1 from the goal
    trees: [Mutex<Tree<T>>; 2],
    /// coincident node pairs `(start-tree node, goal-tree node)`
    connections: Mutex<Vec<(usize, usize)>>,
    progress: Mutex<Progress<T>>,
    iterations: AtomicU64,
    stop: AtomicBool,
    started: Instant,
    record_trace: bool,
}

fn lock<U>(m: &Mutex<U>) -> std::sync::MutexGuard<'_, U> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn run<T: Scalar>(
    problem: &PlanningProblem<T>,
    params: &PlannerParams<T>,
    record_trace: bool,
) -> Result<(PathResult<T>, Vec<Checkpoint<T>>)> {
    let started = Instant::now();
    params.validate()?;
    problem.validate()?;

    if problem.start == problem.goal {
        let result = PathResult {
            success: true,
            waypoints: vec![problem.start.clone(), problem.goal.clone()],
            planning_time: started.elapsed().as_secs_f64(),
            path_length: T::zero(),
            iterations: 0,
        };
        return Ok((result, Vec::new()));
    }

    let shared = Shared {
        problem,
        params,
        trees: [
            Mutex::new(Tree::new(problem.start.as_slice())),
            Mutex::new(Tree::new(problem.goal.as_slice())),
        ],
        connections: Mutex::new(Vec::new()),
        progress: Mutex::new(Progress {
            best: None,
            last_improvement: 0,
            trace: Vec::new(),
        }),
        iterations: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        started,
        record_trace,
    };

    if params.worker_count == 1 {
        worker(&shared, 0);
    } else {
        std::thread::scope(|s| {
            for w in 0..params.worker_count {
                let shared = &shared;
                s.spawn(move || worker(shared, w as u64));
            }
        });
    }

    let waypoints = shared.extract_path();
    let iterations = shared.iterations.load(Ordering::SeqCst);
    let iterations = params.max_iterations.map_or(iterations, |cap| iterations.min(cap));
    let trace = std::mem::take(&mut lock(&shared.progress).trace);
    let result = match waypoints {
        Some(w) => {
            let path_length = w
                .windows(2)
                .fold(T::zero(), |acc, p| acc + distance_unchecked(p[0].as_slice(), p[1].as_slice()));
            PathResult {
                success: true,
                waypoints: w,
                planning_time: started.elapsed().as_secs_f64(),
                path_length,
                iterations,
            }
        }
        None => PathResult {
            success: false,
            waypoints: Vec::new(),
            planning_time: started.elapsed().as_secs_f64(),
            path_length: T::infinity(),
            iterations,
        },
    };
    Ok((result, trace))
}

fn worker<T: Scalar>(shared: &Shared<'_, T>, id: u64) {
    let params = shared.params;
    let problem = shared.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, id));
    let mut checker = CollisionChecker::new(&problem.model, &problem.scene);
    let roots = [problem.start.as_slice(), problem.goal.as_slice()];
    let mut local = 0usize;

    while !shared.stop.load(Ordering::Relaxed) {
        let it = shared.iterations.fetch_add(1, Ordering::SeqCst);
        if params.max_iterations.is_some_and(|cap| it >= cap)
            || shared.started.elapsed().as_secs_f64() >= params.max_time
        {
            shared.stop.store(true, Ordering::SeqCst);
            break;
        }
        let a = local % 2;
        let b = 1 - a;
        local += 1;

        let target = if rng.random::<f64>() < params.goal_bias {
            roots[b].to_vec()
        } else {
            problem.model.sample_uniform(&mut rng).0
        };

        match shared.extend(a, &target, &mut checker) {
            Extend::Trapped => {}
            Extend::Advanced(i) | Extend::Reached(i) => {
                let q_new = lock(&shared.trees[a]).nodes[i].q.clone();
                if let Some(j) = shared.connect(b, &q_new, &mut checker) {
                    let pair = if a == 0 { (i, j) } else { (j, i) };
                    lock(&shared.connections).push(pair);
                }
            }
        }

        if (it + 1) % CHECKPOINT_EVERY == 0 {
            shared.checkpoint(it + 1);
        }
    }
}

impl<T: Scalar> Shared<'_, T> {
    fn extend(&self, t: usize, target: &[T], checker: &mut CollisionChecker<'_, T>) -> Extend {
        let params = self.params;
        let step = params.step_size;
        let res = params.edge_resolution;

        let (nearest, near_q, near_dist, q_new, neighbors) = {
            let tree = lock(&self.trees[t]);
            let (nearest, dist) = tree.nearest(target);
            if dist == T::zero() {
                return Extend::Reached(nearest);
            }
            let near_q = tree.nodes[nearest].q.clone();
            let q_new = steer_slice(&near_q, target, dist, step);
            let radius = rewire_radius(tree.len(), q_new.len(), step);
            let neighbors: Vec<(usize, T, T, Vec<T>)> = tree
                .near(&q_new, radius)
                .into_iter()
                .map(|(i, d)| (i, d, tree.nodes[i].cost, tree.nodes[i].q.clone()))
                .collect();
            (nearest, near_q, dist, q_new, neighbors)
        };
        let reached = near_dist <= step;

        if checker.motion_collides(&near_q, &q_new, res) {
            return Extend::Trapped;
        }
        let near_edge = distance_unchecked(&near_q, &q_new);
        if near_edge == T::zero() {
            return Extend::Trapped;
        }

        // parent selection: cheapest collision-free neighbor, nearest node as fallback
        let near_cost = neighbors
            .iter()
            .find(|n| n.0 == nearest)
            .map(|n| n.2)
            .unwrap_or_else(|| lock(&self.trees[t]).nodes[nearest].cost);
        let mut order: Vec<usize> = (0..neighbors.len())
            .filter(|&k| neighbors[k].0 != nearest && neighbors[k].2 + neighbors[k].1 < near_cost + near_edge)
            .collect();
        order.sort_by(|&x, &y| {
            let cx = neighbors[x].2 + neighbors[x].1;
            let cy = neighbors[y].2 + neighbors[y].1;
            cx.partial_cmp(&cy).expect("finite costs").then(neighbors[x].0.cmp(&neighbors[y].0))
        });
        // free[k]: Some(true) when the edge neighbor k -> q_new is known collision free
        let mut free: Vec<Option<bool>> = vec![None; neighbors.len()];
        let mut parent = (nearest, near_edge);
        for &k in &order {
            let ok = !checker.motion_collides(&neighbors[k].3, &q_new, res);
            free[k] = Some(ok);
            if ok {
                parent = (neighbors[k].0, neighbors[k].1);
                break;
            }
        }
        if let Some(k) = neighbors.iter().position(|n| n.0 == nearest) {
            free[k] = Some(true);
        }

        let (new_id, rewire) = {
            let mut tree = lock(&self.trees[t]);
            let new_id = tree.insert(q_new.clone(), parent.0, parent.1);
            let new_cost = tree.nodes[new_id].cost;
            let rewire: Vec<usize> = (0..neighbors.len())
                .filter(|&k| {
                    let (i, d, ..) = neighbors[k];
                    i != parent.0 && new_cost + d < tree.nodes[i].cost
                })
                .collect();
            (new_id, rewire)
        };

        let mut accepted = Vec::new();
        for k in rewire {
            let ok = match free[k] {
                Some(v) => v,
                None => !checker.motion_collides(&q_new, &neighbors[k].3, res),
            };
            if ok {
                accepted.push(k);
            }
        }
        if !accepted.is_empty() {
            let mut tree = lock(&self.trees[t]);
            for k in accepted {
                let (i, d, ..) = neighbors[k];
                let new_cost = tree.nodes[new_id].cost;
                // costs may have moved while the lock was released
                if new_cost + d < tree.nodes[i].cost && !tree.is_ancestor(i, new_id) {
                    tree.reparent(i, new_id, d);
                }
            }
        }

        if reached {
            Extend::Reached(new_id)
        } else {
            Extend::Advanced(new_id)
        }
    }

    fn connect(&self, t: usize, target: &[T], checker: &mut CollisionChecker<'_, T>) -> Option<usize> {
        loop {
            match self.extend(t, target, checker) {
                Extend::Trapped => return None,
                Extend::Reached(i) => return Some(i),
                Extend::Advanced(_) => {}
            }
            if self.stop.load(Ordering::Relaxed) {
                return None;
            }
        }
    }

    fn best_connection(&self) -> Option<(usize, usize, T)> {
        let start = lock(&self.trees[0]);
        let goal = lock(&self.trees[1]);
        let conns = lock(&self.connections);
        let mut best: Option<(usize, usize, T)> = None;
        for &(i, j) in conns.iter() {
            let c = start.nodes[i].cost + goal.nodes[j].cost;
            if best.is_none_or(|b| c < b.2) {
                best = Some((i, j, c));
            }
        }
        best
    }

    fn checkpoint(&self, iteration: u64) {
        let best = self.best_connection().map(|b| b.2);
        let mut progress = lock(&self.progress);
        if let Some(c) = best {
            let improved = progress
                .best
                .is_none_or(|prev| c.as_f64() < prev.as_f64() * (1.0 - CONVERGENCE_REL_TOL));
            // workers report out of order, so never move the mark backwards
            if improved {
                progress.last_improvement = progress.last_improvement.max(iteration);
            }
            progress.best = Some(progress.best.map_or(c, |prev| prev.min(c)));
            if let Termination::Converged { patience } = self.params.termination {
                if iteration.saturating_sub(progress.last_improvement) >= patience {
                    self.stop.store(true, Ordering::SeqCst);
                }
            }
        }
        if self.record_trace {
            progress.trace.push(Checkpoint {
                iteration,
                best_cost: best,
            });
        }
    }

    fn extract_path(&self) -> Option<Vec<JointConfig<T>>> {
        let (i, j, _) = self.best_connection()?;
        let start = lock(&self.trees[0]);
        let goal = lock(&self.trees[1]);
        let mut path = start.path_to_root(i);
        path.reverse();
        path.extend(goal.path_to_root(j));
        path.dedup();
        Some(path.into_iter().map(JointConfig).collect())
    }
}
