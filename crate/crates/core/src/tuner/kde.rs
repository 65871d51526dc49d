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

//! Good/bad kernel density model over (step size, goal bias).

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Origin, ParamPair, SearchBox, TrialRecord, TunerConfig};

/// Candidates drawn from the good density per model-based suggestion.
pub const KDE_CANDIDATES: usize = 64;
/// Bandwidth floor as a fraction of each dimension's range.
const BANDWIDTH_FLOOR: f64 = 0.01;

/// Product of one-dimensional Gaussian kernels.
#[derive(Debug, Clone)]
pub struct ProductKde {
    points: Vec<[f64; 2]>,
    bandwidth: [f64; 2],
}

impl ProductKde {
    /// Per-dimension bandwidth `factor * std * n^(-1/5)`, floored at 1% of the box range.
    pub fn fit(points: &[[f64; 2]], factor: f64, bounds: &SearchBox) -> Self {
        assert!(!points.is_empty());
        let n = points.len() as f64;
        let ranges = bounds.ranges();
        let mut bandwidth = [0.0; 2];
        for d in 0..2 {
            let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
            let var = if points.len() > 1 {
                points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let bw = factor * var.sqrt() * n.powf(-0.2);
            bandwidth[d] = bw.max(BANDWIDTH_FLOOR * (ranges[d].1 - ranges[d].0));
        }
        ProductKde {
            points: points.to_vec(),
            bandwidth,
        }
    }

    pub fn bandwidth(&self) -> [f64; 2] {
        self.bandwidth
    }

    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        let norm = -(self.points.len() as f64).ln()
            - self.bandwidth.iter().map(|h| h.ln()).sum::<f64>()
            - std::f64::consts::TAU.ln();
        let terms: Vec<f64> = self
            .points
            .iter()
            .map(|p| {
                (0..2)
                    .map(|d| -0.5 * ((x[d] - p[d]) / self.bandwidth[d]).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        norm + m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let p = self.points[rng.random_range(0..self.points.len())];
        let mut out = [0.0; 2];
        for d in 0..2 {
            let z: f64 = rng.sample(StandardNormal);
            out[d] = p[d] + z * self.bandwidth[d];
        }
        out
    }
}

/// Proposes the next configuration: a uniform draw when forced by
/// `random_fraction` or when fewer than `kde_min_points` trials exist at the
/// highest observed resource, otherwise the best good/bad density ratio among
/// candidates drawn from the good density.
pub fn kde_suggest<R: Rng + ?Sized>(history: &[TrialRecord], cfg: &TunerConfig, rng: &mut R) -> (ParamPair, Origin) {
    let bounds = &cfg.search_box;
    if rng.random::<f64>() < cfg.random_fraction {
        return (bounds.sample_uniform(rng), Origin::Random);
    }
    let Some(top) = history.iter().map(|t| t.resource).max() else {
        return (bounds.sample_uniform(rng), Origin::Random);
    };
    let mut level: Vec<&TrialRecord> = history.iter().filter(|t| t.resource == top).collect();
    if level.len() < cfg.kde_min_points.max(2) {
        return (bounds.sample_uniform(rng), Origin::Random);
    }
    level.sort_by(|a, b| a.loss.total_cmp(&b.loss).then(a.trial_id.cmp(&b.trial_id)));
    let n_good = ((cfg.good_fraction * level.len() as f64).ceil() as usize).clamp(1, level.len() - 1);
    let good: Vec<[f64; 2]> = level[..n_good].iter().map(|t| t.params.as_array()).collect();
    let bad: Vec<[f64; 2]> = level[n_good..].iter().map(|t| t.params.as_array()).collect();
    let good = ProductKde::fit(&good, cfg.bandwidth_factor, bounds);
    let bad = ProductKde::fit(&bad, cfg.bandwidth_factor, bounds);

    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for _ in 0..KDE_CANDIDATES {
        let x = bounds.clip(good.sample(rng));
        let score = good.log_density(x) - bad.log_density(x);
        if score > best_score {
            best_score = score;
            best = Some(x);
        }
    }
    let x = best.expect("at least one candidate");
    (ParamPair::new(x[0], x[1]), Origin::Model)
}
