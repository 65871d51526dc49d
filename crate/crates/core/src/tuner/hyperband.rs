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

//! Hyperband bracket layout and the successive-halving cut.

use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub configs: usize,
    pub resource: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    /// number of halvings in this bracket
    pub s: usize,
    pub rounds: Vec<Round>,
}

impl Bracket {
    pub fn budget(&self) -> usize {
        self.rounds.iter().map(|r| r.configs * r.resource).sum()
    }
}

fn pow(base: usize, exp: usize) -> usize {
    (0..exp).fold(1usize, |acc, _| acc.saturating_mul(base))
}

/// Hyperband brackets for resources up to `max_resource` with `min_resource = 1`.
pub fn hyperband_schedule(max_resource: usize, eta: usize) -> Result<Vec<Bracket>> {
    hyperband_schedule_with_min(max_resource, 1, eta)
}

/// Brackets `s = s_max..=0`, where `s_max` is the largest `s` with
/// `min_resource * eta^s <= max_resource`. Bracket `s` starts
/// `ceil((s_max + 1) * eta^s / (s + 1))` configurations at resource
/// `max_resource / eta^s` and keeps `floor(n / eta)` per round until it
/// reaches `max_resource`.
pub fn hyperband_schedule_with_min(max_resource: usize, min_resource: usize, eta: usize) -> Result<Vec<Bracket>> {
    if max_resource == 0 || min_resource == 0 {
        return Err(invalid("resources must be at least 1"));
    }
    if min_resource > max_resource {
        return Err(invalid("min_resource exceeds max_resource"));
    }
    if eta < 2 {
        return Err(invalid("eta must be at least 2"));
    }
    let mut s_max = 0;
    while min_resource.saturating_mul(pow(eta, s_max + 1)) <= max_resource {
        s_max += 1;
    }
    let brackets = (0..=s_max)
        .rev()
        .map(|s| {
            let grow = pow(eta, s);
            let n = ((s_max + 1) * grow).div_ceil(s + 1);
            let rounds = (0..=s)
                .map(|i| Round {
                    configs: n / pow(eta, i),
                    resource: (max_resource / pow(eta, s - i)).max(min_resource),
                })
                .collect();
            Bracket { s, rounds }
        })
        .collect();
    Ok(brackets)
}

/// Keeps the `floor(k / eta)` lowest-loss trials (at least one), ties broken by
/// ascending trial id. All trials must share one resource level.
pub fn successive_halving_step(trials: &[TrialRecord], eta: usize) -> Result<Vec<TrialRecord>> {
    let first = trials.first().ok_or_else(|| invalid("successive halving needs at least one trial"))?;
    if trials.iter().any(|t| t.resource != first.resource) {
        return Err(invalid("successive halving compares trials at one resource level only"));
    }
    if eta < 2 {
        return Err(invalid("eta must be at least 2"));
    }
    let mut ranked = trials.to_vec();
    ranked.sort_by(|a, b| a.loss.total_cmp(&b.loss).then(a.trial_id.cmp(&b.trial_id)));
    ranked.truncate((trials.len() / eta).max(1));
    Ok(ranked)
}
