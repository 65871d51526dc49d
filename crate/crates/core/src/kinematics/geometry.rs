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

//! Closed-form distance queries between segments and the obstacle primitives.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn get(self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// A line segment in the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub a: Vec3<T>,
    pub b: Vec3<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(a: Vec3<T>, b: Vec3<T>) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> T {
        (self.b - self.a).norm()
    }

    pub fn point_at(&self, t: T) -> Vec3<T> {
        self.a + (self.b - self.a) * t
    }
}

fn clamp01<T: Scalar>(t: T) -> T {
    t.max(T::zero()).min(T::one())
}

pub fn point_segment_dist2<T: Scalar>(p: Vec3<T>, seg: &Segment<T>) -> T {
    let d = seg.b - seg.a;
    let len2 = d.norm_squared();
    if len2 <= T::zero() {
        return (p - seg.a).norm_squared();
    }
    let t = clamp01((p - seg.a).dot(d) / len2);
    (p - seg.point_at(t)).norm_squared()
}

/// Squared distance between the closest points of two segments.
pub fn segment_segment_dist2<T: Scalar>(s1: &Segment<T>, s2: &Segment<T>) -> T {
    let eps = T::epsilon();
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);

    if a <= eps && e <= eps {
        return r.norm_squared();
    }
    let (s, t);
    if a <= eps {
        s = T::zero();
        t = clamp01(f / e);
    } else {
        let c = d1.dot(r);
        if e <= eps {
            t = T::zero();
            s = clamp01(-c / a);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let s0 = if denom > T::zero() {
                clamp01((b * f - c * e) / denom)
            } else {
                T::zero()
            };
            let t0 = (b * s0 + f) / e;
            if t0 < T::zero() {
                t = T::zero();
                s = clamp01(-c / a);
            } else if t0 > T::one() {
                t = T::one();
                s = clamp01((b - c) / a);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    (s1.point_at(s) - s2.point_at(t)).norm_squared()
}

pub fn point_aabb_dist2<T: Scalar>(p: Vec3<T>, min: Vec3<T>, max: Vec3<T>) -> T {
    let mut acc = T::zero();
    for k in 0..3 {
        let v = p.get(k);
        let lo = min.get(k);
        let hi = max.get(k);
        if v < lo {
            acc = acc + (lo - v) * (lo - v);
        } else if v > hi {
            acc = acc + (v - hi) * (v - hi);
        }
    }
    acc
}

/// Exact squared distance from a segment to an axis-aligned box.
///
/// The squared distance along the segment is piecewise quadratic in the segment
/// parameter, with breaks where a coordinate crosses a slab boundary. Each piece is
/// minimized in closed form.
pub fn segment_aabb_dist2<T: Scalar>(seg: &Segment<T>, min: Vec3<T>, max: Vec3<T>) -> T {
    let d = seg.b - seg.a;
    let mut breaks: [T; 8] = [T::zero(); 8];
    let mut count = 0;
    breaks[count] = T::zero();
    count += 1;
    breaks[count] = T::one();
    count += 1;
    for k in 0..3 {
        let dk = d.get(k);
        if dk == T::zero() {
            continue;
        }
        for bound in [min.get(k), max.get(k)] {
            let t = (bound - seg.a.get(k)) / dk;
            if t > T::zero() && t < T::one() {
                breaks[count] = t;
                count += 1;
            }
        }
    }
    let breaks = &mut breaks[..count];
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));

    let at = |t: T| point_aabb_dist2(seg.point_at(t), min, max);
    let mut best = at(T::zero()).min(at(T::one()));
    let half = T::lit(0.5);
    for w in breaks.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if tb <= ta {
            continue;
        }
        let mid = seg.point_at((ta + tb) * half);
        // quadratic coefficients of the active slab terms on this piece
        let mut qa = T::zero();
        let mut qb = T::zero();
        for k in 0..3 {
            let v = mid.get(k);
            let target = if v < min.get(k) {
                min.get(k)
            } else if v > max.get(k) {
                max.get(k)
            } else {
                continue;
            };
            let off = seg.a.get(k) - target;
            qa = qa + d.get(k) * d.get(k);
            qb = qb + d.get(k) * off;
        }
        if qa > T::zero() {
            let t = (-qb / qa).max(ta).min(tb);
            best = best.min(at(t));
        }
        best = best.min(at(ta)).min(at(tb));
    }
    best
}
