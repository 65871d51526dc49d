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

use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, empty inputs, out-of-range values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A planning problem whose start or goal is in collision or outside the joint limits.
    /// Distinct from a planner that merely fails to find a path.
    #[error("rejected planning problem: {0}")]
    RejectedProblem(String),

    /// An experiment or evaluation was set up with inconsistent inputs.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Procedural generation exhausted its retry budget.
    #[error("scene generation failed after {attempts} attempts: {details}")]
    Generation { attempts: usize, details: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
