//! Bounding-box kd-tree over one point cloud.
//!
//! Queries are read-only and safe to issue from many threads at once. Both
//! query kinds are defined to return exactly what a brute-force scan would:
//! radius search uses the closed ball (`‖p − c‖ ≤ r`), nearest-neighbor ties
//! break toward the smallest point index.

use nalgebra::Vector3;

use super::{GeometryError, PointCloud};

const LEAF_SIZE: usize = 16;

#[derive(Clone, Copy)]
struct Node {
    min: [f64; 3],
    max: [f64; 3],
    // u32::MAX marks a leaf; leaves own indices[start..end].
    left: u32,
    right: u32,
    start: u32,
    end: u32,
}

/// Immutable spatial acceleration structure over one [`PointCloud`].
pub struct SpatialIndex {
    points: Vec<Vector3<f64>>,
    nodes: Vec<Node>,
    indices: Vec<u32>,
    root: u32,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        let points: Vec<Vector3<f64>> = cloud.points().to_vec();
        let mut index = Self {
            indices: (0..points.len() as u32).collect(),
            nodes: Vec::with_capacity(points.len() / LEAF_SIZE * 2 + 1),
            points,
            root: 0,
        };
        if !index.points.is_empty() {
            index.root = index.build_range(0, index.indices.len());
        }
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_range(&mut self, start: usize, end: usize) -> u32 {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &idx in &self.indices[start..end] {
            let p = self.points[idx as usize];
            for axis in 0..3 {
                min[axis] = min[axis].min(p[axis]);
                max[axis] = max[axis].max(p[axis]);
            }
        }

        if end - start <= LEAF_SIZE {
            self.nodes.push(Node {
                min,
                max,
                left: u32::MAX,
                right: u32::MAX,
                start: start as u32,
                end: end as u32,
            });
            return (self.nodes.len() - 1) as u32;
        }

        let mut axis = 0;
        for candidate in 1..3 {
            if max[candidate] - min[candidate] > max[axis] - min[axis] {
                axis = candidate;
            }
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.indices[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize][axis]
                .partial_cmp(&points[b as usize][axis])
                .expect("finite coordinates")
        });

        let left = self.build_range(start, mid);
        let right = self.build_range(mid, end);
        self.nodes.push(Node {
            min,
            max,
            left,
            right,
            start: 0,
            end: 0,
        });
        (self.nodes.len() - 1) as u32
    }

    fn box_distance_sq(node: &Node, q: &Vector3<f64>) -> f64 {
        let mut d2 = 0.0;
        for axis in 0..3 {
            let v = q[axis];
            if v < node.min[axis] {
                d2 += (node.min[axis] - v) * (node.min[axis] - v);
            } else if v > node.max[axis] {
                d2 += (v - node.max[axis]) * (v - node.max[axis]);
            }
        }
        d2
    }

    /// All indices `i` with `‖pᵢ − center‖ ≤ radius`, sorted ascending.
    pub fn radius_neighbors(&self, center: &Vector3<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() || radius < 0.0 {
            return out;
        }
        let r2 = radius * radius;
        self.radius_walk(self.root, center, r2, &mut out);
        out.sort_unstable();
        out
    }

    fn radius_walk(&self, node_idx: u32, center: &Vector3<f64>, r2: f64, out: &mut Vec<usize>) {
        let node = &self.nodes[node_idx as usize];
        if Self::box_distance_sq(node, center) > r2 {
            return;
        }
        if node.left == u32::MAX {
            for &idx in &self.indices[node.start as usize..node.end as usize] {
                if (self.points[idx as usize] - center).norm_squared() <= r2 {
                    out.push(idx as usize);
                }
            }
            return;
        }
        self.radius_walk(node.left, center, r2, out);
        self.radius_walk(node.right, center, r2, out);
    }

    /// Index and Euclidean distance of the closest point; equidistant
    /// candidates resolve to the smallest index.
    pub fn nearest_neighbor(&self, query: &Vector3<f64>) -> Result<(usize, f64), GeometryError> {
        if self.points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_walk(self.root, query, &mut best);
        Ok((best.1, best.0.sqrt()))
    }

    fn nearest_walk(&self, node_idx: u32, query: &Vector3<f64>, best: &mut (f64, usize)) {
        let node = &self.nodes[node_idx as usize];
        // Strict comparison: boxes at exactly the best distance may still
        // hold an equidistant point with a smaller index.
        if Self::box_distance_sq(node, query) > best.0 {
            return;
        }
        if node.left == u32::MAX {
            for &idx in &self.indices[node.start as usize..node.end as usize] {
                let idx = idx as usize;
                let d2 = (self.points[idx] - query).norm_squared();
                if d2 < best.0 || (d2 == best.0 && idx < best.1) {
                    *best = (d2, idx);
                }
            }
            return;
        }
        let left = &self.nodes[node.left as usize];
        let right = &self.nodes[node.right as usize];
        if Self::box_distance_sq(left, query) <= Self::box_distance_sq(right, query) {
            self.nearest_walk(node.left, query, best);
            self.nearest_walk(node.right, query, best);
        } else {
            self.nearest_walk(node.right, query, best);
            self.nearest_walk(node.left, query, best);
        }
    }
}
