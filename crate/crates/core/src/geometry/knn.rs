use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::Point3;
use crate::{Error, Result};

const LEAF_SIZE: usize = 8;

#[inline]
fn dist2(a: &Point3, b: &Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Orders candidates by squared distance, then by index.
#[inline]
fn closer(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn cmp_candidates(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// The `k` points of `reference` closest to `query`, ascending by distance,
/// ties broken by lower index. Exhaustive scan.
pub fn nearest_neighbors(query: &Point3, reference: &[Point3], k: usize) -> Result<Vec<(usize, f64)>> {
    if k > reference.len() {
        return Err(Error::KTooLarge {
            k,
            available: reference.len(),
        });
    }
    let mut all: Vec<(f64, usize)> = reference
        .iter()
        .enumerate()
        .map(|(i, p)| (dist2(query, p), i))
        .collect();
    if k < all.len() && k > 0 {
        all.select_nth_unstable_by(k - 1, cmp_candidates);
        all.truncate(k);
    }
    all.sort_unstable_by(cmp_candidates);
    all.truncate(k);
    Ok(all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect())
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static k-d tree over 3D points for exact nearest-neighbor queries.
///
/// Results agree exactly with [`nearest_neighbors`], including the
/// lower-index tie-break.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// The `i`-th point as passed to [`KdTree::new`].
    pub fn point(&self, i: usize) -> Point3 {
        self.points[i]
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // Split the widest extent at its median.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap_or(Ordering::Equal))
            .unwrap_or(0);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].partial_cmp(&points[b][axis]).unwrap_or(Ordering::Equal)
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Index of and distance to the closest point. `None` on an empty tree.
    pub fn nearest(&self, query: &Point3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_in(0, query, &mut best);
        Some((best.1, best.0.sqrt()))
    }

    fn nearest_in(&self, node: usize, q: &Point3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = (dist2(q, &self.points[i]), i);
                    if closer(cand, *best) {
                        *best = cand;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.0 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` closest points, ascending, lower index first on ties.
    pub fn k_nearest(&self, query: &Point3, k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.points.len() {
            return Err(Error::KTooLarge {
                k,
                available: self.points.len(),
            });
        }
        let mut found: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k > 0 {
            self.k_nearest_in(0, query, k, &mut found);
        }
        Ok(found.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect())
    }

    fn k_nearest_in(&self, node: usize, q: &Point3, k: usize, found: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = (dist2(q, &self.points[i]), i);
                    if found.len() == k && !closer(cand, found[k - 1]) {
                        continue;
                    }
                    let pos = found.partition_point(|&f| closer(f, cand));
                    found.insert(pos, cand);
                    found.truncate(k);
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.k_nearest_in(near, q, k, found);
                if found.len() < k || diff * diff <= found[k - 1].0 {
                    self.k_nearest_in(far, q, k, found);
                }
            }
        }
    }
}
