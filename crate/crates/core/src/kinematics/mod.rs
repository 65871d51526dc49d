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

//! Serial-chain robot model, forward kinematics and capsule collision checks.
//!
//! Kinematic convention: every link extends along the local +x axis of its joint
//! frame. Chains with two or three joints are planar and rotate about +z only.
//! Longer chains alternate rotation axes, with even joints about +z and odd
//! joints about +y, each composed in the frame of the previous link. The
//! chain starts at `base`.

pub mod geometry;

use std::ops::Index;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
pub use geometry::{Segment, Vec3};

/// A point in joint space, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig<T>(pub Vec<T>);

impl<T: Scalar> JointConfig<T> {
    pub fn new(angles: Vec<T>) -> Self {
        JointConfig(angles)
    }

    pub fn from_f64(angles: &[f64]) -> Self {
        JointConfig(angles.iter().map(|&a| T::lit(a)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// Point at fraction `t` along the straight joint-space segment towards `other`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        JointConfig(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a + (b - a) * t)
                .collect(),
        )
    }
}

impl<T> Index<usize> for JointConfig<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RobotSpec<T> {
    joint_count: usize,
    joint_limits: Vec<[T; 2]>,
    link_lengths: Vec<T>,
    link_radius: T,
    #[serde(default)]
    base: Option<[T; 3]>,
}

/// Serial manipulator with capsule links of a shared radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RobotSpec<T>", into = "RobotSpec<T>")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RobotModel<T> {
    joint_limits: Vec<(T, T)>,
    link_lengths: Vec<T>,
    link_radius: T,
    base: Vec3<T>,
}

impl<T: Scalar> TryFrom<RobotSpec<T>> for RobotModel<T> {
    type Error = crate::Error;
    fn try_from(spec: RobotSpec<T>) -> Result<Self> {
        if spec.joint_limits.len() != spec.joint_count || spec.link_lengths.len() != spec.joint_count {
            return Err(invalid(format!(
                "robot declares {} joints but lists {} limits and {} link lengths",
                spec.joint_count,
                spec.joint_limits.len(),
                spec.link_lengths.len()
            )));
        }
        let base = spec.base.map(Vec3::from).unwrap_or_else(Vec3::zero);
        RobotModel::new(
            spec.joint_limits.iter().map(|l| (l[0], l[1])).collect(),
            spec.link_lengths,
            spec.link_radius,
            base,
        )
    }
}

impl<T: Scalar> From<RobotModel<T>> for RobotSpec<T> {
    fn from(m: RobotModel<T>) -> Self {
        RobotSpec {
            joint_count: m.joint_count(),
            joint_limits: m.joint_limits.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            link_lengths: m.link_lengths,
            link_radius: m.link_radius,
            base: Some(m.base.into()),
        }
    }
}

enum Axis {
    Y,
    Z,
}

type Mat3<T> = [[T; 3]; 3];

fn mat_mul<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn rotation<T: Scalar>(axis: &Axis, angle: T) -> Mat3<T> {
    let (s, c) = angle.sin_cos();
    let (o, l) = (T::zero(), T::one());
    match axis {
        Axis::Z => [[c, -s, o], [s, c, o], [o, o, l]],
        Axis::Y => [[c, o, s], [o, l, o], [-s, o, c]],
    }
}

impl<T: Scalar> RobotModel<T> {
    pub fn new(joint_limits: Vec<(T, T)>, link_lengths: Vec<T>, link_radius: T, base: Vec3<T>) -> Result<Self> {
        if joint_limits.len() < 2 {
            return Err(invalid(format!("robot needs at least 2 joints, got {}", joint_limits.len())));
        }
        if joint_limits.len() != link_lengths.len() {
            return Err(invalid("one link length per joint is required"));
        }
        if let Some(i) = joint_limits.iter().position(|&(lo, hi)| !(lo < hi)) {
            return Err(invalid(format!("joint {i} has an empty limit interval")));
        }
        if link_lengths.iter().any(|&l| !(l > T::zero())) {
            return Err(invalid("link lengths must be positive"));
        }
        if !(link_radius > T::zero()) {
            return Err(invalid("link radius must be positive"));
        }
        Ok(RobotModel {
            joint_limits,
            link_lengths,
            link_radius,
            base,
        })
    }

    /// Planar arm with equal limits on every joint, based at the origin.
    pub fn uniform(link_lengths: Vec<T>, link_radius: T, limit: T) -> Result<Self> {
        let n = link_lengths.len();
        RobotModel::new(vec![(-limit, limit); n], link_lengths, link_radius, Vec3::zero())
    }

    pub fn joint_count(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn joint_limits(&self) -> &[(T, T)] {
        &self.joint_limits
    }

    pub fn link_lengths(&self) -> &[T] {
        &self.link_lengths
    }

    pub fn link_radius(&self) -> T {
        self.link_radius
    }

    pub fn base(&self) -> Vec3<T> {
        self.base
    }

    pub fn reach(&self) -> T {
        self.link_lengths.iter().fold(T::zero(), |acc, &l| acc + l)
    }

    fn axis(&self, joint: usize) -> Axis {
        if self.joint_count() <= 3 || joint % 2 == 0 {
            Axis::Z
        } else {
            Axis::Y
        }
    }

    pub fn check_dimension(&self, q: &JointConfig<T>) -> Result<()> {
        if q.len() != self.joint_count() {
            return Err(invalid(format!(
                "configuration has {} angles, robot has {} joints",
                q.len(),
                self.joint_count()
            )));
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointConfig<T>) -> bool {
        q.len() == self.joint_count()
            && q.0.iter().zip(&self.joint_limits).all(|(&a, &(lo, hi))| a >= lo && a <= hi)
    }

    /// Uniform sample over the joint-limit box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> JointConfig<T> {
        JointConfig(
            self.joint_limits
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi))
                .collect(),
        )
    }

    /// Link segments, one per joint, from the base outwards.
    pub fn forward_kinematics(&self, q: &JointConfig<T>) -> Result<Vec<Segment<T>>> {
        self.check_dimension(q)?;
        let mut out = Vec::with_capacity(self.joint_count());
        self.fk_into(q.as_slice(), &mut out);
        Ok(out)
    }

    pub(crate) fn fk_into(&self, q: &[T], out: &mut Vec<Segment<T>>) {
        out.clear();
        let o = T::zero();
        let l = T::one();
        let mut frame: Mat3<T> = [[l, o, o], [o, l, o], [o, o, l]];
        let mut start = self.base;
        for (i, (&angle, &len)) in q.iter().zip(&self.link_lengths).enumerate() {
            frame = mat_mul(&frame, &rotation(&self.axis(i), angle));
            let dir = Vec3::new(frame[0][0], frame[1][0], frame[2][0]);
            let end = start + dir * len;
            out.push(Segment::new(start, end));
            start = end;
        }
    }

    pub fn end_effector(&self, q: &JointConfig<T>) -> Result<Vec3<T>> {
        let segs = self.forward_kinematics(q)?;
        Ok(segs.last().expect("at least two links").b)
    }
}

/// Workspace obstacle primitive, all lengths in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum Obstacle<T> {
    Sphere { center: Vec3<T>, radius: T },
    Box { min: Vec3<T>, max: Vec3<T> },
    Capsule { a: Vec3<T>, b: Vec3<T>, radius: T },
}

impl<T: Scalar> Obstacle<T> {
    pub fn sphere(center: [T; 3], radius: T) -> Self {
        Obstacle::Sphere {
            center: center.into(),
            radius,
        }
    }

    pub fn aabb(min: [T; 3], max: [T; 3]) -> Self {
        Obstacle::Box {
            min: min.into(),
            max: max.into(),
        }
    }

    pub fn capsule(a: [T; 3], b: [T; 3], radius: T) -> Self {
        Obstacle::Capsule {
            a: a.into(),
            b: b.into(),
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Obstacle::Sphere { radius, .. } | Obstacle::Capsule { radius, .. } if !(*radius > T::zero()) => {
                Err(invalid("obstacle radius must be positive"))
            }
            Obstacle::Box { min, max } if !(min.x < max.x && min.y < max.y && min.z < max.z) => {
                Err(invalid("box min corner must be below max corner on every axis"))
            }
            _ => Ok(()),
        }
    }

    /// Whether a capsule around `link` with the given radius touches this obstacle.
    pub fn hits_capsule(&self, link: &Segment<T>, link_radius: T) -> bool {
        match self {
            Obstacle::Sphere { center, radius } => {
                let r = *radius + link_radius;
                geometry::point_segment_dist2(*center, link) <= r * r
            }
            Obstacle::Box { min, max } => geometry::segment_aabb_dist2(link, *min, *max) <= link_radius * link_radius,
            Obstacle::Capsule { a, b, radius } => {
                let r = *radius + link_radius;
                geometry::segment_segment_dist2(link, &Segment::new(*a, *b)) <= r * r
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Scene<T> {
    pub name: String,
    pub obstacles: Vec<Obstacle<T>>,
}

impl<T: Scalar> Scene<T> {
    pub fn new(name: impl Into<String>, obstacles: Vec<Obstacle<T>>) -> Result<Self> {
        let scene = Scene {
            name: name.into(),
            obstacles,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Scene {
            name: name.into(),
            obstacles: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.obstacles.iter().try_for_each(Obstacle::validate)
    }
}

/// Euclidean joint-space distance.
pub fn config_distance<T: Scalar>(a: &JointConfig<T>, b: &JointConfig<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(invalid(format!("configurations differ in length: {} vs {}", a.len(), b.len())));
    }
    Ok(distance_unchecked(a.as_slice(), b.as_slice()))
}

#[inline]
pub(crate) fn distance_unchecked<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Reusable collision checker that keeps a scratch buffer for link segments.
#[derive(Debug, Clone)]
pub struct CollisionChecker<'a, T> {
    model: &'a RobotModel<T>,
    scene: &'a Scene<T>,
    links: Vec<Segment<T>>,
    interp: Vec<T>,
}

impl<'a, T: Scalar> CollisionChecker<'a, T> {
    pub fn new(model: &'a RobotModel<T>, scene: &'a Scene<T>) -> Self {
        CollisionChecker {
            model,
            scene,
            links: Vec::with_capacity(model.joint_count()),
            interp: vec![T::zero(); model.joint_count()],
        }
    }

    pub fn config_collides(&mut self, q: &[T]) -> bool {
        if self.scene.obstacles.is_empty() {
            return false;
        }
        self.model.fk_into(q, &mut self.links);
        let r = self.model.link_radius;
        self.links
            .iter()
            .any(|link| self.scene.obstacles.iter().any(|o| o.hits_capsule(link, r)))
    }

    /// Discretized straight-line edge check; both endpoints are included and
    /// consecutive checked configurations are at most `resolution` apart.
    pub fn motion_collides(&mut self, qa: &[T], qb: &[T], resolution: T) -> bool {
        if self.config_collides(qa) {
            return true;
        }
        let dist = distance_unchecked(qa, qb);
        if dist == T::zero() {
            return false;
        }
        if self.config_collides(qb) {
            return true;
        }
        let steps = (dist / resolution).ceil().to_usize().unwrap_or(1).max(1);
        let inv = T::one() / T::from_usize(steps).expect("step count fits");
        let mut interp = std::mem::take(&mut self.interp);
        let mut hit = false;
        for i in 1..steps {
            let t = T::from_usize(i).expect("step index fits") * inv;
            for (slot, (&a, &b)) in interp.iter_mut().zip(qa.iter().zip(qb)) {
                *slot = a + (b - a) * t;
            }
            if self.config_collides(&interp) {
                hit = true;
                break;
            }
        }
        self.interp = interp;
        hit
    }
}

/// True iff any link capsule at `q` intersects an obstacle.
pub fn config_collides<T: Scalar>(model: &RobotModel<T>, scene: &Scene<T>, q: &JointConfig<T>) -> Result<bool> {
    model.check_dimension(q)?;
    Ok(CollisionChecker::new(model, scene).config_collides(q.as_slice()))
}

pub fn motion_collides<T: Scalar>(
    model: &RobotModel<T>,
    scene: &Scene<T>,
    qa: &JointConfig<T>,
    qb: &JointConfig<T>,
    resolution: T,
) -> Result<bool> {
    model.check_dimension(qa)?;
    model.check_dimension(qb)?;
    if !(resolution > T::zero()) {
        return Err(invalid("edge resolution must be positive"));
    }
    Ok(CollisionChecker::new(model, scene).motion_collides(qa.as_slice(), qb.as_slice(), resolution))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn unit_arm(n: usize) -> RobotModel<f64> {
        RobotModel::uniform(vec![1.0; n], 0.05, PI).unwrap()
    }

    fn close(a: Vec3<f64>, b: [f64; 3]) -> bool {
        (a.x - b[0]).abs() < 1e-12 && (a.y - b[1]).abs() < 1e-12 && (a.z - b[2]).abs() < 1e-12
    }

    #[test]
    fn fk_planar_examples() {
        let arm = unit_arm(2);
        let ee = arm.end_effector(&JointConfig::new(vec![0.0, 0.0])).unwrap();
        assert!(close(ee, [2.0, 0.0, 0.0]));
        let ee = arm.end_effector(&JointConfig::new(vec![FRAC_PI_2, 0.0])).unwrap();
        assert!(close(ee, [0.0, 2.0, 0.0]));
    }

    #[test]
    fn fk_three_joint_composition() {
        // cumulative link headings are pi/2, 0, -pi/2: up, right, down
        let arm = unit_arm(3);
        let segs = arm
            .forward_kinematics(&JointConfig::new(vec![FRAC_PI_2, -FRAC_PI_2, -FRAC_PI_2]))
            .unwrap();
        assert!(close(segs[0].b, [0.0, 1.0, 0.0]));
        assert!(close(segs[1].b, [1.0, 1.0, 0.0]));
        assert!(close(segs[2].b, [1.0, 0.0, 0.0]));
    }

    #[test]
    fn fk_spatial_chain_leaves_the_plane() {
        let arm = unit_arm(4);
        // joint 1 rotates about y: pitching the second link up by -pi/2 points it along +z
        let segs = arm
            .forward_kinematics(&JointConfig::new(vec![0.0, -FRAC_PI_2, 0.0, 0.0]))
            .unwrap();
        assert!(close(segs[1].b, [1.0, 0.0, 1.0]));
        assert!(close(segs[3].b, [1.0, 0.0, 3.0]));
    }

    #[test]
    fn fk_rejects_wrong_dimension() {
        let arm = unit_arm(2);
        assert!(matches!(
            arm.forward_kinematics(&JointConfig::new(vec![0.0])),
            Err(crate::Error::InvalidInput(_))
        ));
    }

    #[test]
    fn model_validation() {
        assert!(RobotModel::<f64>::uniform(vec![1.0], 0.05, PI).is_err());
        assert!(RobotModel::<f64>::uniform(vec![1.0, 0.0], 0.05, PI).is_err());
        assert!(RobotModel::<f64>::uniform(vec![1.0, 1.0], 0.0, PI).is_err());
        assert!(RobotModel::<f64>::new(vec![(0.0, 0.0), (-1.0, 1.0)], vec![1.0, 1.0], 0.1, Vec3::zero()).is_err());
    }

    #[test]
    fn obstacle_validation() {
        assert!(Obstacle::sphere([0.0; 3], 0.0f64).validate().is_err());
        assert!(Obstacle::aabb([0.0, 0.0, 0.0], [1.0, 0.0, 1.0f64]).validate().is_err());
        assert!(Obstacle::capsule([0.0; 3], [1.0; 3], 0.1f64).validate().is_ok());
    }

    #[test]
    fn collision_examples() {
        let arm = unit_arm(2);
        let q0 = JointConfig::new(vec![0.0, 0.0]);
        let sphere = Scene::new("s", vec![Obstacle::sphere([2.0, 0.0, 0.0], 0.1)]).unwrap();
        assert!(config_collides(&arm, &sphere, &q0).unwrap());
        assert!(!config_collides(&arm, &Scene::empty("e"), &q0).unwrap());
        let boxed = Scene::new("b", vec![Obstacle::aabb([0.5, 0.5, -1.0], [1.0, 1.0, 1.0])]).unwrap();
        assert!(!config_collides(&arm, &boxed, &q0).unwrap());
        let capsule = Scene::new("c", vec![Obstacle::capsule([1.0, -1.0, 0.0], [1.0, 1.0, 0.0], 0.01)]).unwrap();
        assert!(config_collides(&arm, &capsule, &q0).unwrap());
    }

    #[test]
    fn motion_examples() {
        let arm = unit_arm(2);
        let scene = Scene::new("s", vec![Obstacle::sphere([0.0, 2.0, 0.0], 0.2)]).unwrap();
        let qa = JointConfig::new(vec![0.0, 0.0]);
        let qb = JointConfig::new(vec![PI, 0.0]);
        assert!(!motion_collides(&arm, &scene, &qa, &qa, 0.05).unwrap());
        assert!(motion_collides(&arm, &scene, &qa, &qb, 0.05).unwrap());
        // dense oracle sweep agrees
        let dense = (0..=3142).any(|i| {
            let q = qa.lerp(&qb, i as f64 / 3142.0);
            config_collides(&arm, &scene, &q).unwrap()
        });
        assert!(dense);
        let blocked = JointConfig::new(vec![FRAC_PI_2, 0.0]);
        assert!(motion_collides(&arm, &scene, &blocked, &qa, 0.05).unwrap());
        assert!(motion_collides(&arm, &scene, &qa, &qb, 0.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let d = config_distance(&JointConfig::new(vec![0.0, 0.0]), &JointConfig::new(vec![3.0, 4.0])).unwrap();
        assert_eq!(d, 5.0);
        let q = JointConfig::new(vec![0.4, -0.2]);
        assert_eq!(config_distance(&q, &q).unwrap(), 0.0);
        let d = config_distance(
            &JointConfig::new(vec![0.1, 0.2, 0.3]),
            &JointConfig::new(vec![0.2, 0.4, 0.6]),
        )
        .unwrap();
        assert!((d - 0.14f64.sqrt()).abs() < 1e-12);
        assert!((d - 0.3742).abs() < 1e-4);
        assert!(config_distance(&JointConfig::new(vec![0.0]), &q).is_err());
    }

    #[test]
    fn fk_chain_is_continuous_for_many_configs() {
        let arm = RobotModel::uniform(vec![0.4, 0.3, 0.2, 0.25, 0.1], 0.03, PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let q = arm.sample_uniform(&mut rng);
            let segs = arm.forward_kinematics(&q).unwrap();
            assert_eq!(segs.len(), 5);
            for w in segs.windows(2) {
                assert_eq!(w[0].b, w[1].a);
            }
            let total: f64 = segs.iter().map(Segment::length).sum();
            assert!((total - arm.reach()).abs() < 1e-9);
        }
    }

    #[test]
    fn f32_models_work() {
        let arm = RobotModel::<f32>::uniform(vec![1.0, 1.0], 0.05, 3.0).unwrap();
        let ee = arm.end_effector(&JointConfig::new(vec![0.0f32, 0.0])).unwrap();
        assert!((ee.x - 2.0).abs() < 1e-6);
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = Scene::new(
            "mixed",
            vec![
                Obstacle::sphere([0.1, 0.2, 0.3], 0.1),
                Obstacle::aabb([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]),
                Obstacle::capsule([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 0.2),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&scene).unwrap();
        assert!(text.contains("\"type\":\"sphere\""));
        let back: Scene<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, scene);
    }

    #[test]
    fn robot_json_validates() {
        let bad = r#"{"joint_count":2,"joint_limits":[[-1,1]],"link_lengths":[1,1],"link_radius":0.1}"#;
        assert!(serde_json::from_str::<RobotModel<f64>>(bad).is_err());
        let good = r#"{"joint_count":2,"joint_limits":[[-1,1],[-1,1]],"link_lengths":[1,1],"link_radius":0.1}"#;
        let m: RobotModel<f64> = serde_json::from_str(good).unwrap();
        assert_eq!(m.joint_count(), 2);
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(
            a in proptest::collection::vec(-3.0f64..3.0, 4),
            b in proptest::collection::vec(-3.0f64..3.0, 4),
            c in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let (a, b, c) = (JointConfig::new(a), JointConfig::new(b), JointConfig::new(c));
            let ab = config_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, config_distance(&b, &a).unwrap());
            prop_assert_eq!(config_distance(&a, &a).unwrap(), 0.0);
            prop_assert!(ab + config_distance(&b, &c).unwrap() >= config_distance(&a, &c).unwrap() - 1e-12);
            if a != b { prop_assert!(ab > 0.0); }
        }

        #[test]
        fn collision_is_monotone_in_obstacles(
            q in proptest::collection::vec(-3.0f64..3.0, 3),
            centers in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.05f64..0.4), 1..6),
            extra in (-2.0f64..2.0, -2.0f64..2.0),
        ) {
            let arm = unit_arm(3);
            let q = JointConfig::new(q);
            let obstacles: Vec<_> = centers.iter().map(|&(x, y, r)| Obstacle::sphere([x, y, 0.0], r)).collect();
            let base = Scene::new("base", obstacles.clone()).unwrap();
            let mut more = obstacles;
            more.push(Obstacle::aabb([extra.0, extra.1, -0.1], [extra.0 + 0.2, extra.1 + 0.2, 0.1]));
            let superset = Scene::new("superset", more).unwrap();
            if config_collides(&arm, &base, &q).unwrap() {
                prop_assert!(config_collides(&arm, &superset, &q).unwrap());
            }
            prop_assert_eq!(
                motion_collides(&arm, &base, &q, &q, 0.05).unwrap(),
                config_collides(&arm, &base, &q).unwrap()
            );
        }
    }
}
