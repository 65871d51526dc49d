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

//! A planner stand-in with a closed-form, seed-jittered cost model.
//!
//! It never searches. Reported times are modelled, not measured, so every
//! pipeline that uses it is bit-reproducible for a fixed seed.

use crate::error::Result;
use crate::planner::{PathPlanner, PathResult, PlannerParams, PlanningProblem};
use crate::scalar::derive_seed;

#[derive(Debug, Clone, Copy)]
pub struct SyntheticPlanner {
    /// modelled seconds for an obstacle-free problem at the optimum
    pub base_time: f64,
}

impl Default for SyntheticPlanner {
    fn default() -> Self {
        SyntheticPlanner { base_time: 0.01 }
    }
}

impl SyntheticPlanner {
    /// Preferred (step size, goal bias) for a scene with `obstacles` obstacles:
    /// clutter favours shorter steps and less greedy sampling.
    pub fn optimum(obstacles: usize) -> (f64, f64) {
        let k = obstacles as f64;
        (0.4 + 1.6 / (1.0 + 0.5 * k), 0.1 + 0.5 / (1.0 + 0.5 * k))
    }
}

impl PathPlanner<f64> for SyntheticPlanner {
    fn plan(&self, problem: &PlanningProblem<f64>, params: &PlannerParams<f64>) -> Result<PathResult<f64>> {
        params.validate()?;
        problem.validate()?;
        let n = problem.scene.obstacles.len();
        let (s_opt, b_opt) = Self::optimum(n);
        let miss = (params.step_size - s_opt).powi(2) + 4.0 * (params.goal_bias - b_opt).powi(2);
        let jitter = (derive_seed(params.seed, 0x5eed) >> 11) as f64 / (1u64 << 53) as f64;
        let time = self.base_time * (1.0 + n as f64) * (1.0 + 20.0 * miss) * (0.9 + 0.2 * jitter);
        let straight = problem.straight_line_distance();
        if time > params.max_time {
            return Ok(PathResult {
                success: false,
                waypoints: Vec::new(),
                planning_time: params.max_time,
                path_length: f64::INFINITY,
                iterations: 0,
            });
        }
        let waypoints = if straight == 0.0 {
            vec![problem.start.clone()]
        } else {
            vec![problem.start.clone(), problem.goal.clone()]
        };
        Ok(PathResult {
            success: true,
            waypoints,
            planning_time: time,
            path_length: straight * (1.0 + 0.05 * n as f64 + 0.2 * miss),
            iterations: (time * 1e5) as u64,
        })
    }
}
