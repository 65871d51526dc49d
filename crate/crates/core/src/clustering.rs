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

//! DBSCAN over tuned (step size, goal bias) pairs.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tuner::{ParamPair, SearchBox};

/// Weight of the goal-bias axis relative to the step-size axis.
pub const GOAL_BIAS_WEIGHT: f64 = 2.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub problem_id: String,
    pub environment_id: String,
    pub step_size: f64,
    pub goal_bias: f64,
}

impl ParamPoint {
    pub fn new(problem_id: impl Into<String>, environment_id: impl Into<String>, step_size: f64, goal_bias: f64) -> Self {
        ParamPoint {
            problem_id: problem_id.into(),
            environment_id: environment_id.into(),
            step_size,
            goal_bias,
        }
    }

    pub fn pair(&self) -> ParamPair {
        ParamPair::new(self.step_size, self.goal_bias)
    }

    pub fn validate(&self, bounds: &SearchBox) -> Result<()> {
        if bounds.contains(self.pair()) {
            Ok(())
        } else {
            Err(invalid(format!(
                "point for problem {:?} lies outside the search box: ({}, {})",
                self.problem_id, self.step_size, self.goal_bias
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub eps: f64,
    pub min_samples: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            eps: 0.15,
            min_samples: 3,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(invalid("eps must be positive and finite"));
        }
        if self.min_samples == 0 {
            return Err(invalid("min_samples must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterLabel {
    Cluster(usize),
    Outlier,
}

impl ClusterLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(c) => Some(c),
            ClusterLabel::Outlier => None,
        }
    }
}

impl fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterLabel::Cluster(c) => write!(f, "{c}"),
            ClusterLabel::Outlier => f.write_str("outlier"),
        }
    }
}

impl FromStr for ClusterLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "outlier" {
            return Ok(ClusterLabel::Outlier);
        }
        s.parse()
            .map(ClusterLabel::Cluster)
            .map_err(|_| invalid(format!("bad cluster label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<ClusterLabel>,
    pub core: Vec<bool>,
    /// per-cluster mean (step size, goal bias)
    pub centers: Vec<ParamPair>,
    pub sizes: Vec<usize>,
}

impl ClusterAssignment {
    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == ClusterLabel::Outlier).count()
    }
}

pub fn param_distance(a: ParamPair, b: ParamPair) -> f64 {
    (a.step_size - b.step_size).abs() + GOAL_BIAS_WEIGHT * (a.goal_bias - b.goal_bias).abs()
}

fn neighborhoods(points: &[ParamPair], eps: f64) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            (0..points.len())
                .filter(|&j| param_distance(points[i], points[j]) <= eps)
                .collect()
        })
        .collect()
}

/// Clusters in input order: each unvisited core point seeds a cluster that
/// absorbs everything density-reachable from it. A border point joins the
/// first cluster that reaches it.
pub fn dbscan(points: &[ParamPair], cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(invalid("dbscan needs at least one point"));
    }
    let nbrs = neighborhoods(points, cfg.eps);
    let core: Vec<bool> = nbrs.iter().map(|n| n.len() >= cfg.min_samples).collect();
    let mut labels = vec![ClusterLabel::Outlier; points.len()];
    let mut next = 0;
    for seed in 0..points.len() {
        if !core[seed] || labels[seed] != ClusterLabel::Outlier {
            continue;
        }
        let c = ClusterLabel::Cluster(next);
        next += 1;
        labels[seed] = c;
        let mut queue = VecDeque::from([seed]);
        while let Some(p) = queue.pop_front() {
            for &q in &nbrs[p] {
                if labels[q] != ClusterLabel::Outlier {
                    continue;
                }
                labels[q] = c;
                if core[q] {
                    queue.push_back(q);
                }
            }
        }
    }

    let mut sums = vec![(0.0, 0.0); next];
    let mut sizes = vec![0usize; next];
    for (p, l) in points.iter().zip(&labels) {
        if let ClusterLabel::Cluster(c) = *l {
            sums[c].0 += p.step_size;
            sums[c].1 += p.goal_bias;
            sizes[c] += 1;
        }
    }
    let centers = sums
        .iter()
        .zip(&sizes)
        .map(|(&(s, b), &n)| ParamPair::new(s / n as f64, b / n as f64))
        .collect();
    Ok(ClusterAssignment {
        labels,
        core,
        centers,
        sizes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub cluster: usize,
    pub step_size: f64,
    pub goal_bias: f64,
    pub size: usize,
}

/// Recommendation table plus per-environment cluster histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub recommendations: Vec<Recommendation>,
    /// environments in sorted order
    pub environments: Vec<String>,
    /// counts[e][c] for clusters; the outlier count is `outliers_per_env[e]`
    pub counts: Vec<Vec<usize>>,
    pub outliers_per_env: Vec<usize>,
    pub outliers: usize,
}

pub fn cluster_report(assignment: &ClusterAssignment, points: &[ParamPoint]) -> Result<ClusterReport> {
    if assignment.labels.len() != points.len() {
        return Err(invalid(format!(
            "{} labels for {} points",
            assignment.labels.len(),
            points.len()
        )));
    }
    let recommendations = assignment
        .centers
        .iter()
        .zip(&assignment.sizes)
        .enumerate()
        .map(|(cluster, (c, &size))| Recommendation {
            cluster,
            step_size: c.step_size,
            goal_bias: c.goal_bias,
            size,
        })
        .collect();
    let mut by_env: BTreeMap<&str, (Vec<usize>, usize)> = BTreeMap::new();
    for (p, l) in points.iter().zip(&assignment.labels) {
        let row = by_env
            .entry(p.environment_id.as_str())
            .or_insert_with(|| (vec![0; assignment.cluster_count()], 0));
        match l.cluster() {
            Some(c) => row.0[c] += 1,
            None => row.1 += 1,
        }
    }
    Ok(ClusterReport {
        recommendations,
        environments: by_env.keys().map(|s| s.to_string()).collect(),
        counts: by_env.values().map(|r| r.0.clone()).collect(),
        outliers_per_env: by_env.values().map(|r| r.1).collect(),
        outliers: assignment.outlier_count(),
    })
}

impl fmt::Display for ClusterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} clusters, {} outliers",
            self.recommendations.len(),
            self.outliers
        )?;
        for r in &self.recommendations {
            writeln!(
                f,
                "  c{}: step_size {:.4}  goal_bias {:.4}  size {}",
                r.cluster, r.step_size, r.goal_bias, r.size
            )?;
        }
        for (e, env) in self.environments.iter().enumerate() {
            let cells: Vec<String> = self.counts[e].iter().map(|n| n.to_string()).collect();
            writeln!(f, "  {env}: [{}] outliers {}", cells.join(" "), self.outliers_per_env[e])?;
        }
        Ok(())
    }
}

pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<ParamPoint>> {
    let mut input = csv::Reader::from_reader(r);
    input
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_points_csv<W: Write>(points: &[ParamPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    problem_id: String,
    environment_id: String,
    step_size: f64,
    goal_bias: f64,
    label: String,
    core: bool,
}

pub fn write_labels_csv<W: Write>(points: &[ParamPoint], assignment: &ClusterAssignment, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, p) in points.iter().enumerate() {
        out.serialize(LabelRow {
            problem_id: p.problem_id.clone(),
            environment_id: p.environment_id.clone(),
            step_size: p.step_size,
            goal_bias: p.goal_bias,
            label: assignment.labels[i].to_string(),
            core: assignment.core[i],
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a labels file back into points, labels and core flags.
pub fn read_labels_csv<R: Read>(r: R) -> Result<(Vec<ParamPoint>, Vec<ClusterLabel>, Vec<bool>)> {
    let mut input = csv::Reader::from_reader(r);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut core = Vec::new();
    for row in input.deserialize::<LabelRow>() {
        let row = row?;
        labels.push(row.label.parse()?);
        core.push(row.core);
        points.push(ParamPoint::new(row.problem_id, row.environment_id, row.step_size, row.goal_bias));
    }
    Ok((points, labels, core))
}

pub fn write_recommendations_csv<W: Write>(recs: &[Recommendation], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in recs {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_recommendations_csv<R: Read>(r: R) -> Result<Vec<Recommendation>> {
    let mut input = csv::Reader::from_reader(r);
    input
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
