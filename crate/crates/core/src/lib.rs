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

pub mod clustering;
pub mod error;
pub mod harness;
pub mod kinematics;
pub mod objective;
pub mod planner;
pub mod scalar;
pub mod tuner;

pub use error::{Error, Result};

/// Double-precision forms of the generic types, as used by the harness and CLI.
pub type JointConfig = kinematics::JointConfig<f64>;
pub type RobotModel = kinematics::RobotModel<f64>;
pub type Scene = kinematics::Scene<f64>;
pub type PlannerParams = planner::PlannerParams<f64>;
pub type PlanningProblem = planner::PlanningProblem<f64>;
pub type PathResult = planner::PathResult<f64>;
