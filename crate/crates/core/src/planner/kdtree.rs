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

//! Incremental kd-tree over joint space used for nearest and radius queries.

use crate::scalar::Scalar;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct KdNode {
    id: usize,
    axis: usize,
    left: usize,
    right: usize,
}

/// Points are stored flat, `dim` coordinates per node, in insertion order.
#[derive(Debug, Clone)]
pub struct KdTree<T> {
    dim: usize,
    coords: Vec<T>,
    nodes: Vec<KdNode>,
}

impl<T: Scalar> KdTree<T> {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        KdTree {
            dim,
            coords: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point(&self, node: usize) -> &[T] {
        &self.coords[node * self.dim..(node + 1) * self.dim]
    }

    pub fn insert(&mut self, p: &[T], id: usize) {
        debug_assert_eq!(p.len(), self.dim);
        let new = self.nodes.len();
        self.coords.extend_from_slice(p);
        if new == 0 {
            self.nodes.push(KdNode {
                id,
                axis: 0,
                left: NIL,
                right: NIL,
            });
            return;
        }
        let mut cur = 0;
        loop {
            let axis = self.nodes[cur].axis;
            let go_left = p[axis] < self.point(cur)[axis];
            let next = if go_left { self.nodes[cur].left } else { self.nodes[cur].right };
            if next == NIL {
                let child = KdNode {
                    id,
                    axis: (axis + 1) % self.dim,
                    left: NIL,
                    right: NIL,
                };
                self.nodes.push(child);
                if go_left {
                    self.nodes[cur].left = new;
                } else {
                    self.nodes[cur].right = new;
                }
                return;
            }
            cur = next;
        }
    }

    fn dist2(a: &[T], b: &[T]) -> T {
        a.iter()
            .zip(b)
            .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
    }

    /// Nearest stored point as `(id, squared distance)`. Ties resolve to the earliest insertion.
    pub fn nearest(&self, q: &[T]) -> Option<(usize, T)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (NIL, T::infinity(), usize::MAX);
        let mut stack = vec![(0usize, T::zero())];
        while let Some((n, bound)) = stack.pop() {
            if bound > best.1 {
                continue;
            }
            let p = self.point(n);
            let d = Self::dist2(p, q);
            if d < best.1 || (d == best.1 && n < best.2) {
                best = (self.nodes[n].id, d, n);
            }
            let axis = self.nodes[n].axis;
            let diff = q[axis] - p[axis];
            let (near, far) = if diff < T::zero() {
                (self.nodes[n].left, self.nodes[n].right)
            } else {
                (self.nodes[n].right, self.nodes[n].left)
            };
            // far side pushed first so the near side is explored first
            if far != NIL && diff * diff <= best.1 {
                stack.push((far, diff * diff));
            }
            if near != NIL {
                stack.push((near, T::zero()));
            }
        }
        Some((best.0, best.1))
    }

    /// All stored points within `radius` (inclusive), as `(id, squared distance)` in insertion order.
    pub fn within(&self, q: &[T], radius: T) -> Vec<(usize, T)> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let p = self.point(n);
            let d = Self::dist2(p, q);
            if d <= r2 {
                out.push((n, d));
            }
            let axis = self.nodes[n].axis;
            let diff = q[axis] - p[axis];
            let (l, r) = (self.nodes[n].left, self.nodes[n].right);
            if l != NIL && diff <= radius {
                stack.push(l);
            }
            if r != NIL && -diff <= radius {
                stack.push(r);
            }
        }
        out.sort_unstable_by_key(|&(n, _)| n);
        out.into_iter().map(|(n, d)| (self.nodes[n].id, d)).collect()
    }
}
