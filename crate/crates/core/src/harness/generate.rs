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

//! Procedural scenes and problem sets for a tabletop arm.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kinematics::{CollisionChecker, JointConfig, Obstacle, RobotModel, Scene, Vec3};
use crate::planner::{plan, PlannerParams, PlanningProblem, Termination};
use crate::scalar::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClutterLevel {
    Open,
    Medium,
    NarrowPassage,
}

impl ClutterLevel {
    pub const ALL: [ClutterLevel; 3] = [ClutterLevel::Open, ClutterLevel::Medium, ClutterLevel::NarrowPassage];

    /// Inclusive range of free-standing obstacles (the narrow-passage wall is extra).
    pub fn obstacle_range(self) -> (usize, usize) {
        match self {
            ClutterLevel::Open => (0, 2),
            ClutterLevel::Medium => (3, 6),
            ClutterLevel::NarrowPassage => (0, 1),
        }
    }

    /// Width of the wall slot in link radii, for levels that have one.
    pub fn passage_width(self) -> Option<f64> {
        match self {
            ClutterLevel::NarrowPassage => Some(2.4),
            _ => None,
        }
    }
}

impl fmt::Display for ClutterLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClutterLevel::Open => "open",
            ClutterLevel::Medium => "medium",
            ClutterLevel::NarrowPassage => "narrow_passage",
        })
    }
}

impl FromStr for ClutterLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(ClutterLevel::Open),
            "medium" => Ok(ClutterLevel::Medium),
            "narrow_passage" | "narrow" => Ok(ClutterLevel::NarrowPassage),
            other => Err(invalid(format!("unknown clutter level {other:?}"))),
        }
    }
}

/// Three-joint planar arm, about a meter of reach.
pub fn desk_robot() -> RobotModel<f64> {
    RobotModel::uniform(vec![0.4, 0.35, 0.25], 0.03, std::f64::consts::PI).expect("valid desk robot")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub problems: usize,
    /// planner iterations allowed for each witness search
    pub witness_iterations: u64,
    pub witness_step_size: f64,
    pub witness_goal_bias: f64,
    /// rejection-sampling draws per endpoint
    pub sample_attempts: usize,
    /// fresh (start, goal) pairs tried per slot before giving up
    pub problem_attempts: usize,
    /// whole-scene redraws before giving up
    pub scene_attempts: usize,
    pub edge_resolution: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            problems: 8,
            witness_iterations: 60_000,
            witness_step_size: 0.5,
            witness_goal_bias: 0.2,
            sample_attempts: 20_000,
            problem_attempts: 20,
            scene_attempts: 10,
            edge_resolution: crate::planner::DEFAULT_EDGE_RESOLUTION,
        }
    }
}

/// A scene with its problems and one collision-free witness path per problem.
#[derive(Debug, Clone)]
pub struct Environment {
    pub id: String,
    /// known for generated sets, absent for hand-written ones
    pub level: Option<ClutterLevel>,
    pub model: Arc<RobotModel<f64>>,
    pub scene: Arc<Scene<f64>>,
    pub problems: Vec<PlanningProblem<f64>>,
    pub witnesses: Vec<Vec<JointConfig<f64>>>,
}

// Where end effectors may be sampled, relative to the wall for the narrow level.
#[derive(Clone, Copy)]
enum Region {
    Anywhere,
    Before(f64),
    /// end effector beyond `x`; the slot centre line is at `y`
    Beyond { x: f64, y: f64 },
}

struct Layout {
    scene: Scene<f64>,
    start_region: Region,
    goal_region: Region,
}

fn random_in_annulus(rng: &mut ChaCha8Rng, base: Vec3<f64>, r_lo: f64, r_hi: f64) -> Vec3<f64> {
    let r = rng.random_range(r_lo..r_hi);
    let a = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Vec3::new(base.x + r * a.cos(), base.y + r * a.sin(), base.z)
}

fn layout(level: ClutterLevel, model: &RobotModel<f64>, rng: &mut ChaCha8Rng, name: &str) -> Result<Layout> {
    let reach = model.reach();
    let base = model.base();
    let radius = model.link_radius();
    let (lo, hi) = level.obstacle_range();
    let count = rng.random_range(lo..=hi);
    let mut obstacles = Vec::new();
    let mut start_region = Region::Anywhere;
    let mut goal_region = Region::Anywhere;

    if let Some(width) = level.passage_width() {
        // a wall across +x with one slot, blocking everything the arm can reach beyond it
        let near = base.x + 0.5 * reach;
        let far = near + 0.05 * reach;
        let slot = width * radius;
        let centre = base.y + rng.random_range(-0.1..0.1) * reach;
        let span = 1.5 * reach;
        let zmin = base.z - 0.5 * reach;
        let zmax = base.z + 0.5 * reach;
        obstacles.push(Obstacle::aabb([near, base.y - span, zmin], [far, centre - slot / 2.0, zmax]));
        obstacles.push(Obstacle::aabb([near, centre + slot / 2.0, zmin], [far, base.y + span, zmax]));
        start_region = Region::Before(near - 0.05 * reach);
        goal_region = Region::Beyond {
            x: far + 0.1 * reach,
            y: centre,
        };
        for _ in 0..count {
            // clutter on the near side only
            let mut c = random_in_annulus(rng, base, 0.45 * reach, 0.9 * reach);
            c.x = c.x.min(near - 0.15 * reach);
            obstacles.push(Obstacle::sphere([c.x, c.y, c.z], rng.random_range(0.04..0.08) * reach));
        }
    } else {
        for _ in 0..count {
            let c = random_in_annulus(rng, base, 0.35 * reach, 0.9 * reach);
            let sphere = level == ClutterLevel::Open || rng.random_bool(0.5);
            if sphere {
                obstacles.push(Obstacle::sphere([c.x, c.y, c.z], rng.random_range(0.05..0.12) * reach));
            } else {
                let hx = rng.random_range(0.04..0.1) * reach;
                let hy = rng.random_range(0.04..0.1) * reach;
                let hz = 0.1 * reach;
                obstacles.push(Obstacle::aabb([c.x - hx, c.y - hy, c.z - hz], [c.x + hx, c.y + hy, c.z + hz]));
            }
        }
    }
    Ok(Layout {
        scene: Scene::new(name, obstacles)?,
        start_region,
        goal_region,
    })
}

fn sample_endpoint(
    model: &RobotModel<f64>,
    checker: &mut CollisionChecker<'_, f64>,
    region: Region,
    rng: &mut ChaCha8Rng,
    attempts: usize,
) -> Option<JointConfig<f64>> {
    for _ in 0..attempts {
        let q = match region {
            Region::Beyond { x, y } if is_planar_three_link(model) => match planar_goal(model, x, y, rng) {
                Some(q) => q,
                None => continue,
            },
            _ => model.sample_uniform(rng),
        };
        let ok = match region {
            Region::Anywhere => true,
            Region::Before(x) => model.forward_kinematics(&q).ok()?.iter().all(|seg| seg.b.x < x),
            Region::Beyond { x, .. } => model.end_effector(&q).ok()?.x > x,
        };
        if ok && !checker.config_collides(q.as_slice()) {
            return Some(q);
        }
    }
    None
}

fn is_planar_three_link(model: &RobotModel<f64>) -> bool {
    model.joint_count() == 3
}

// Uniform rejection sampling almost never lands beyond a narrow slot, so goals
// for the planar arm are proposed by inverse kinematics: an end-effector point
// past the wall, last link roughly along +x, elbow up or down at random.
fn planar_goal(model: &RobotModel<f64>, x_min: f64, y_slot: f64, rng: &mut ChaCha8Rng) -> Option<JointConfig<f64>> {
    use std::f64::consts::PI;
    let l = model.link_lengths();
    let base = model.base();
    let reach = model.reach();
    let ex = rng.random_range(x_min..base.x + reach) - base.x;
    let ey = y_slot - base.y + rng.random_range(-0.1..0.1) * reach;
    let phi: f64 = rng.random_range(-0.4..0.4);
    let (wx, wy) = (ex - l[2] * phi.cos(), ey - l[2] * phi.sin());
    let c = (wx * wx + wy * wy - l[0] * l[0] - l[1] * l[1]) / (2.0 * l[0] * l[1]);
    if c.abs() > 1.0 {
        return None;
    }
    let q1 = if rng.random_bool(0.5) { c.acos() } else { -c.acos() };
    let q0 = wy.atan2(wx) - (l[1] * q1.sin()).atan2(l[0] + l[1] * q1.cos());
    let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
    let q = JointConfig::new(vec![wrap(q0), q1, wrap(phi - q0 - q1)]);
    model.within_limits(&q).then_some(q)
}

/// Builds a scene for `level` and at least `cfg.problems` problems, each with
/// a witness path from a long fixed-iteration planner run. Deterministic in
/// `seed`. Open scenes keep at least half the straight-line motions free;
/// narrow-passage scenes contain at least one blocked straight line.
pub fn generate_environment(
    id: &str,
    level: ClutterLevel,
    model: &RobotModel<f64>,
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<Environment> {
    if cfg.problems == 0 {
        return Err(invalid("problem count must be positive"));
    }
    let model = Arc::new(model.clone());
    let mut failures: Vec<String> = Vec::new();
    let mut attempts = 0;
    for scene_try in 0..cfg.scene_attempts {
        attempts += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, scene_try as u64));
        let lay = layout(level, &model, &mut rng, id)?;
        let scene = Arc::new(lay.scene);
        match fill_problems(id, level, &model, &scene, lay.start_region, lay.goal_region, &mut rng, cfg) {
            Ok((problems, witnesses)) => {
                return Ok(Environment {
                    id: id.to_string(),
                    level: Some(level),
                    model,
                    scene,
                    problems,
                    witnesses,
                })
            }
            Err(why) => failures.push(format!("scene {scene_try}: {why}")),
        }
    }
    Err(Error::Generation {
        attempts,
        details: failures.join("; "),
    })
}

#[allow(clippy::too_many_arguments)]
fn fill_problems(
    id: &str,
    level: ClutterLevel,
    model: &Arc<RobotModel<f64>>,
    scene: &Arc<Scene<f64>>,
    start_region: Region,
    goal_region: Region,
    rng: &mut ChaCha8Rng,
    cfg: &GeneratorConfig,
) -> std::result::Result<(Vec<PlanningProblem<f64>>, Vec<Vec<JointConfig<f64>>>), String> {
    let mut checker = CollisionChecker::new(model, scene);
    let mut problems = Vec::with_capacity(cfg.problems);
    let mut witnesses = Vec::with_capacity(cfg.problems);
    let mut unsolved = 0;
    for slot in 0..cfg.problems {
        let mut placed = false;
        for _ in 0..cfg.problem_attempts {
            let start = sample_endpoint(model, &mut checker, start_region, rng, cfg.sample_attempts)
                .ok_or("no collision-free start found")?;
            let goal = sample_endpoint(model, &mut checker, goal_region, rng, cfg.sample_attempts)
                .ok_or("no collision-free goal found")?;
            let problem = PlanningProblem::new(format!("{id}_p{slot}"), model.clone(), scene.clone(), start, goal)
                .map_err(|e| e.to_string())?;
            let params = PlannerParams {
                step_size: cfg.witness_step_size,
                goal_bias: cfg.witness_goal_bias,
                max_time: f64::INFINITY,
                max_iterations: Some(cfg.witness_iterations),
                worker_count: 1,
                seed: rng.random(),
                edge_resolution: cfg.edge_resolution,
                termination: Termination::Converged { patience: 0 },
            };
            let result = plan(&problem, &params).map_err(|e| e.to_string())?;
            if result.success {
                problems.push(problem);
                witnesses.push(result.waypoints);
                placed = true;
                break;
            }
            unsolved += 1;
        }
        if !placed {
            return Err(format!("problem {slot}: no witness after {unsolved} unsolved candidates"));
        }
    }
    let blocked = problems
        .iter()
        .filter(|p| checker.motion_collides(p.start.as_slice(), p.goal.as_slice(), cfg.edge_resolution))
        .count();
    match level {
        ClutterLevel::Open if 2 * blocked > problems.len() => {
            Err(format!("{blocked} of {} straight lines blocked in an open scene", problems.len()))
        }
        ClutterLevel::NarrowPassage if blocked == 0 => Err("no straight line crosses the wall".into()),
        _ => Ok((problems, witnesses)),
    }
}
