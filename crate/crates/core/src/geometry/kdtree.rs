use super::PointCloud;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    // children; 0 marks a leaf since the root is never a child
    left: usize,
    right: usize,
}

/// A k-d tree over a snapshot of a point cloud.
///
/// Splits happen at the median of the widest bounding box axis; every node
/// keeps its tight bounding box, which is what queries prune against.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    // coordinates stored in tree order
    coords: Vec<f64>,
    // tree order -> original index
    index: Vec<usize>,
    nodes: Vec<Node>,
    // per node: dim lower bounds then dim upper bounds
    boxes: Vec<f64>,
}

impl KdTree {
    pub fn new(cloud: &PointCloud) -> Self {
        Self::from_coords(cloud.dim(), cloud.coords())
    }

    /// Builds from row-major coordinates of `dim`-dimensional points.
    pub fn from_coords(dim: usize, coords: &[f64]) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0);
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            coords: Vec::with_capacity(coords.len()),
            index: (0..n).collect(),
            nodes: Vec::new(),
            boxes: Vec::new(),
        };
        if n > 0 {
            tree.build(coords, 0, n);
        }
        for &i in &tree.index {
            tree.coords.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        tree
    }

    fn build(&mut self, coords: &[f64], start: usize, end: usize) -> usize {
        let dim = self.dim;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: 0,
            right: 0,
        });
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.index[start..end] {
            for k in 0..dim {
                let c = coords[i * dim + k];
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let spread = hi[axis] - lo[axis];
        self.boxes.extend_from_slice(&lo);
        self.boxes.extend_from_slice(&hi);

        if end - start <= LEAF_SIZE || spread == 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        self.index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * dim + axis].total_cmp(&coords[b * dim + axis])
        });
        let left = self.build(coords, start, mid);
        let right = self.build(coords, mid, end);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    #[inline]
    fn box_dist2(&self, node: usize, center: &[f64]) -> f64 {
        let b = &self.boxes[2 * self.dim * node..2 * self.dim * (node + 1)];
        let (lo, hi) = b.split_at(self.dim);
        let mut d2 = 0.0;
        for k in 0..self.dim {
            let c = center[k];
            let d = if c < lo[k] {
                lo[k] - c
            } else if c > hi[k] {
                c - hi[k]
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }

    /// Calls `visit(original_index, squared_distance)` for every point with
    /// `‖p − center‖ ≤ r`.
    pub fn for_each_in_radius<F: FnMut(usize, f64)>(&self, center: &[f64], r: f64, mut visit: F) {
        debug_assert_eq!(center.len(), self.dim);
        if self.nodes.is_empty() {
            return;
        }
        let r2 = r * r;
        let dim = self.dim;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if self.box_dist2(id, center) > r2 {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == 0 {
                for t in node.start..node.end {
                    let p = &self.coords[t * dim..(t + 1) * dim];
                    let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 <= r2 {
                        visit(self.index[t], d2);
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
    }

    /// All `(point index, squared distance)` pairs within distance `r` of
    /// `center`, sorted by index.
    pub fn radius_query(&self, center: &[f64], r: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_in_radius(center, r, |i, d2| out.push((i, d2)));
        out.sort_unstable_by_key(|&(i, _)| i);
        out
    }

    /// Nearest point as `(index, squared distance)`; `None` for an empty tree.
    pub fn nearest(&self, center: &[f64]) -> Option<(usize, f64)> {
        self.nearest_impl(center, None)
    }

    /// Nearest point other than the one with index `exclude`.
    pub fn nearest_excluding(&self, center: &[f64], exclude: usize) -> Option<(usize, f64)> {
        self.nearest_impl(center, Some(exclude))
    }

    fn nearest_impl(&self, center: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let dim = self.dim;
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((id, bound)) = stack.pop() {
            if bound > best.1 {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == 0 {
                for t in node.start..node.end {
                    if Some(self.index[t]) == exclude {
                        continue;
                    }
                    let p = &self.coords[t * dim..(t + 1) * dim];
                    let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 < best.1 || (d2 == best.1 && self.index[t] < best.0) {
                        best = (self.index[t], d2);
                    }
                }
            } else {
                let dl = self.box_dist2(node.left, center);
                let dr = self.box_dist2(node.right, center);
                // visit the closer child first
                if dl <= dr {
                    stack.push((node.right, dr));
                    stack.push((node.left, dl));
                } else {
                    stack.push((node.left, dl));
                    stack.push((node.right, dr));
                }
            }
        }
        (best.0 != usize::MAX).then_some(best)
    }
}
