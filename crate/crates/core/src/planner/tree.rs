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

use super::kdtree::KdTree;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub(crate) struct Node<T> {
    pub q: Vec<T>,
    pub parent: Option<usize>,
    /// cost-to-root along tree edges
    pub cost: T,
    /// length of the edge to the parent
    pub edge: T,
    pub children: Vec<usize>,
}

/// Search tree with cost-to-root bookkeeping. Costs stay consistent after every
/// mutation: `cost(child) == cost(parent) + edge(child)`.
#[derive(Debug, Clone)]
pub(crate) struct Tree<T> {
    pub nodes: Vec<Node<T>>,
    index: KdTree<T>,
}

impl<T: Scalar> Tree<T> {
    pub fn new(root: &[T]) -> Self {
        let mut index = KdTree::new(root.len());
        index.insert(root, 0);
        Tree {
            nodes: vec![Node {
                q: root.to_vec(),
                parent: None,
                cost: T::zero(),
                edge: T::zero(),
                children: Vec::new(),
            }],
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn nearest(&self, q: &[T]) -> (usize, T) {
        let (i, d2) = self.index.nearest(q).expect("tree always holds its root");
        (i, d2.sqrt())
    }

    pub fn near(&self, q: &[T], radius: T) -> Vec<(usize, T)> {
        self.index
            .within(q, radius)
            .into_iter()
            .map(|(i, d2)| (i, d2.sqrt()))
            .collect()
    }

    pub fn insert(&mut self, q: Vec<T>, parent: usize, edge: T) -> usize {
        let id = self.nodes.len();
        let cost = self.nodes[parent].cost + edge;
        self.index.insert(&q, id);
        self.nodes[parent].children.push(id);
        self.nodes.push(Node {
            q,
            parent: Some(parent),
            cost,
            edge,
            children: Vec::new(),
        });
        id
    }

    /// Moves `node` under `new_parent` and refreshes the costs of its subtree.
    pub fn reparent(&mut self, node: usize, new_parent: usize, edge: T) {
        if let Some(old) = self.nodes[node].parent {
            let kids = &mut self.nodes[old].children;
            if let Some(pos) = kids.iter().position(|&c| c == node) {
                kids.swap_remove(pos);
            }
        }
        self.nodes[new_parent].children.push(node);
        self.nodes[node].parent = Some(new_parent);
        self.nodes[node].edge = edge;
        self.nodes[node].cost = self.nodes[new_parent].cost + edge;
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let base = self.nodes[n].cost;
            for k in 0..self.nodes[n].children.len() {
                let c = self.nodes[n].children[k];
                self.nodes[c].cost = base + self.nodes[c].edge;
                stack.push(c);
            }
        }
    }

    /// Configurations from `node` up to and including the root.
    pub fn path_to_root(&self, node: usize) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        let mut cur = Some(node);
        while let Some(n) = cur {
            out.push(self.nodes[n].q.clone());
            cur = self.nodes[n].parent;
        }
        out
    }

    pub fn is_ancestor(&self, ancestor: usize, mut node: usize) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.nodes[node].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }
}
