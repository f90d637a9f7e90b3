//! Static 3D kd-tree for exact nearest-neighbor queries.

use crate::geom::Vec3;

pub struct KdTree {
    points: Vec<Vec3>,
    /// Indices into `points` arranged as an implicit balanced tree.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

struct Node {
    /// Range [lo, hi) into `order`, split on `axis` at the median element.
    lo: usize,
    hi: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

fn axis_get(p: Vec3, axis: usize) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> KdTree {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.split(0, points.len(), 0);
        }
        tree
    }

    fn split(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let axis = depth % 3;
        let mid = lo + (hi - lo) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            axis_get(pts[a], axis)
                .partial_cmp(&axis_get(pts[b], axis))
                .unwrap()
        });
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            axis,
            left: None,
            right: None,
        });
        if mid > lo {
            let l = self.split(lo, mid, depth + 1);
            self.nodes[id].left = Some(l);
        }
        if mid + 1 < hi {
            let r = self.split(mid + 1, hi, depth + 1);
            self.nodes[id].right = Some(r);
        }
        id
    }

    /// Squared distance from `q` to its nearest point in the tree.
    pub fn nearest_sq(&self, q: Vec3) -> f64 {
        assert!(!self.points.is_empty());
        let mut best = f64::INFINITY;
        self.search(0, q, &mut best);
        best
    }

    fn search(&self, node: usize, q: Vec3, best: &mut f64) {
        let n = &self.nodes[node];
        let mid = n.lo + (n.hi - n.lo) / 2;
        let p = self.points[self.order[mid]];
        let d = q.sub(p);
        let dist_sq = d.dot(d);
        if dist_sq < *best {
            *best = dist_sq;
        }
        let delta = axis_get(q, n.axis) - axis_get(p, n.axis);
        let (near, far) = if delta <= 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        if let Some(c) = near {
            self.search(c, q, best);
        }
        if let Some(c) = far {
            if delta * delta < *best {
                self.search(c, q, best);
            }
        }
    }
}
