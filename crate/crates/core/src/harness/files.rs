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

//! `.scene.json` and `.problems.json` documents.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::generate::{ClutterLevel, Environment};
use crate::error::{invalid, Error, Result};
use crate::kinematics::{JointConfig, Obstacle, RobotModel, Scene};
use crate::planner::PlanningProblem;

pub const SCENE_SUFFIX: &str = ".scene.json";
pub const PROBLEMS_SUFFIX: &str = ".problems.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub name: String,
    pub robot: RobotModel<f64>,
    pub obstacles: Vec<Obstacle<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEntry {
    pub id: String,
    pub start: JointConfig<f64>,
    pub goal: JointConfig<f64>,
    /// collision-free path found at generation time
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<JointConfig<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemsFile {
    pub environment_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<ClutterLevel>,
    /// scene path, relative to this file's directory
    pub scene: String,
    pub problems: Vec<ProblemEntry>,
}

/// Writes `<id>.scene.json` and `<id>.problems.json` into `dir`; returns the problems path.
pub fn save_environment(env: &Environment, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let scene_name = format!("{}{SCENE_SUFFIX}", env.id);
    let scene = SceneFile {
        name: env.scene.name.clone(),
        robot: (*env.model).clone(),
        obstacles: env.scene.obstacles.clone(),
    };
    fs::write(dir.join(&scene_name), serde_json::to_string_pretty(&scene)?)?;
    let problems = ProblemsFile {
        environment_id: env.id.clone(),
        level: env.level,
        scene: scene_name,
        problems: env
            .problems
            .iter()
            .enumerate()
            .map(|(i, p)| ProblemEntry {
                id: p.id.clone(),
                start: p.start.clone(),
                goal: p.goal.clone(),
                witness: env.witnesses.get(i).cloned().unwrap_or_default(),
            })
            .collect(),
    };
    let path = dir.join(format!("{}{PROBLEMS_SUFFIX}", env.id));
    fs::write(&path, serde_json::to_string_pretty(&problems)?)?;
    Ok(path)
}

/// Loads a problem set and its scene, validating every problem.
pub fn load_environment(problems_path: &Path) -> Result<Environment> {
    let doc: ProblemsFile = serde_json::from_str(&fs::read_to_string(problems_path)?)?;
    let dir = problems_path.parent().unwrap_or_else(|| Path::new("."));
    let scene_doc: SceneFile = serde_json::from_str(&fs::read_to_string(dir.join(&doc.scene))?)?;
    let model = Arc::new(scene_doc.robot);
    let scene = Arc::new(Scene::new(scene_doc.name, scene_doc.obstacles)?);
    let mut problems = Vec::with_capacity(doc.problems.len());
    let mut witnesses = Vec::with_capacity(doc.problems.len());
    for entry in doc.problems {
        problems.push(PlanningProblem::new(entry.id, model.clone(), scene.clone(), entry.start, entry.goal)?);
        witnesses.push(entry.witness);
    }
    if problems.is_empty() {
        return Err(invalid(format!("{} holds no problems", problems_path.display())));
    }
    Ok(Environment {
        id: doc.environment_id,
        level: doc.level,
        model,
        scene,
        problems,
        witnesses,
    })
}

/// Loads every `*.problems.json` in `dir`, sorted by file name.
pub fn load_environments(dir: &Path) -> Result<Vec<Environment>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(PROBLEMS_SUFFIX))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Configuration(format!("no {PROBLEMS_SUFFIX} files in {}", dir.display())));
    }
    paths.iter().map(|p| load_environment(p)).collect()
}
