use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{EndpointPairs, SkeletonGraph};
use crate::geometry::{Point3, RibLevel};
use crate::{Error, Result};

/// The unique tree path from `a` to `b`, both included.
pub fn tree_path(graph: &SkeletonGraph, a: usize, b: usize) -> Vec<usize> {
    let parent = graph.bfs_parents(b);
    let mut path = alloc::vec![a];
    let mut v = a;
    while v != b {
        v = parent[v].expect("tree is connected");
        path.push(v);
    }
    path
}

/// Angle in degrees between `b - a` and `c - b`; `None` if either is zero.
pub fn turn_angle_deg(a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    let (u, v) = (b - a, c - b);
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    Some((u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Positions in `path` kept by the continuity filter.
///
/// The first two points are always kept. Each later point is kept iff its
/// direction from the last kept point turns by at most `t_theta_deg` from the
/// last kept segment. A candidate coinciding with the last kept point has no
/// direction and is dropped.
pub fn continuity_filter_indices(path: &[Point3], t_theta_deg: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = (0..path.len().min(2)).collect();
    for j in 2..path.len() {
        let (prev, last) = (kept[kept.len() - 2], kept[kept.len() - 1]);
        if path[j] == path[last] {
            continue;
        }
        match turn_angle_deg(&path[prev], &path[last], &path[j]) {
            Some(angle) if angle > t_theta_deg => {}
            _ => kept.push(j),
        }
    }
    kept
}

pub fn continuity_filter(path: &[Point3], t_theta_deg: f64) -> Vec<Point3> {
    continuity_filter_indices(path, t_theta_deg).into_iter().map(|i| path[i]).collect()
}

/// Raw and filtered tree path of one rib, as graph vertex indices running
/// from the left endpoint to the right one.
#[derive(Debug, Clone, PartialEq)]
pub struct RibPath {
    pub level: RibLevel,
    pub raw: Vec<usize>,
    pub filtered: Vec<usize>,
}

impl RibPath {
    pub fn filtered_points(&self, graph: &SkeletonGraph) -> Vec<Point3> {
        self.filtered.iter().map(|&v| graph.points()[v]).collect()
    }

    pub fn raw_points(&self, graph: &SkeletonGraph) -> Vec<Point3> {
        self.raw.iter().map(|&v| graph.points()[v]).collect()
    }

    /// Fraction of raw vertices removed by the filter.
    pub fn pruned_fraction(&self) -> f64 {
        1.0 - self.filtered.len() as f64 / self.raw.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RibPathSet {
    ribs: [RibPath; 4],
}

impl RibPathSet {
    pub fn ribs(&self) -> &[RibPath; 4] {
        &self.ribs
    }

    pub fn get(&self, level: RibLevel) -> &RibPath {
        &self.ribs[level.index()]
    }

    /// Levels whose filter dropped more than half of the raw path.
    pub fn heavily_pruned(&self) -> Vec<RibLevel> {
        self.ribs.iter().filter(|r| r.pruned_fraction() > 0.5).map(|r| r.level).collect()
    }
}

/// Tree path between each rib's paired endpoints, left to right, then filtered.
pub fn extract_rib_paths(graph: &SkeletonGraph, pairs: &EndpointPairs, t_theta_deg: f64) -> Result<RibPathSet> {
    if !(t_theta_deg > 0.0 && t_theta_deg <= 180.0) {
        return Err(Error::InvalidParams(alloc::format!(
            "T_theta must lie in (0, 180] degrees, got {t_theta_deg}"
        )));
    }
    let n = graph.len();
    let ribs = pairs.ribs().map(|end| {
        let raw = if end.left < n && end.right < n {
            tree_path(graph, end.left, end.right)
        } else {
            Vec::new()
        };
        let points: Vec<Point3> = raw.iter().map(|&v| graph.points()[v]).collect();
        let filtered = continuity_filter_indices(&points, t_theta_deg)
            .into_iter()
            .map(|i| raw[i])
            .collect();
        RibPath {
            level: end.level,
            raw,
            filtered,
        }
    });
    if ribs.iter().any(|r| r.raw.is_empty()) {
        return Err(Error::DegenerateInput("endpoint index outside the skeleton graph"));
    }
    Ok(RibPathSet { ribs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointCloud;
    use alloc::vec;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn hand_traced_example() {
        let path = [p(0., 0., 0.), p(1., 0., 0.), p(2., 0., 0.), p(2., 1., 0.), p(3., 0., 0.)];
        assert_eq!(continuity_filter_indices(&path, 60.0), vec![0, 1, 2, 4]);
    }

    #[test]
    fn collinear_and_vacuous_threshold() {
        let line: Vec<Point3> = (0..6).map(|i| p(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert_eq!(continuity_filter(&line, 1.0), line);
        let zigzag = [p(0., 0., 0.), p(1., 0., 0.), p(0., 0.1, 0.), p(1., 0.2, 0.)];
        assert_eq!(continuity_filter(&zigzag, 180.0), zigzag.to_vec());
    }

    #[test]
    fn short_paths_pass_through() {
        assert_eq!(continuity_filter_indices(&[p(0., 0., 0.)], 60.0), vec![0]);
        assert_eq!(continuity_filter_indices(&[p(0., 0., 0.), p(0., 0., 0.)], 60.0), vec![0, 1]);
    }

    #[test]
    fn chain_path() {
        let pts = PointCloud::new((0..4).map(|i| p(i as f64, 0.0, 0.0)).collect());
        let g = SkeletonGraph::from_edges(pts, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(tree_path(&g, 0, 3), vec![0, 1, 2, 3]);
        assert_eq!(tree_path(&g, 3, 1), vec![3, 2, 1]);
        assert_eq!(tree_path(&g, 2, 2), vec![2]);
    }

    /// Four horizontal ribs joined by a vertical sternum chain at x = 0.
    fn ladder(spur: bool, kink: bool) -> (SkeletonGraph, EndpointPairs) {
        let mut pts = Vec::new();
        let mut edges = Vec::new();
        let mut ends = [(0, 0); 4];
        for r in 0..4 {
            let y = -25.0 * r as f64;
            let centre = pts.len();
            pts.push(p(0.0, y, 0.0));
            if r > 0 {
                edges.push((centre - 9, centre));
            }
            for side in [-1.0, 1.0] {
                let mut prev = centre;
                for k in 1..=4 {
                    let idx = pts.len();
                    pts.push(p(side * 10.0 * k as f64, y, -(k * k) as f64));
                    edges.push((prev, idx));
                    prev = idx;
                }
                if side < 0.0 {
                    ends[r].0 = prev;
                } else {
                    ends[r].1 = prev;
                }
            }
        }
        if kink {
            // Rib 2: left-side vertex next to the centre pulled sideways.
            pts[1] = p(-12.0, 20.0, -2.0);
        }
        if spur {
            let idx = pts.len();
            pts.push(p(20.0, -25.0 + 6.0, -4.0));
            edges.push((9 + 6, idx));
        }
        let g = SkeletonGraph::from_edges(PointCloud::new(pts), &edges).unwrap();
        (g, EndpointPairs::new(ends).unwrap())
    }

    #[test]
    fn branchless_skeleton_is_unfiltered() {
        let (g, pairs) = ladder(false, false);
        let set = extract_rib_paths(&g, &pairs, 60.0).unwrap();
        for r in set.ribs() {
            assert_eq!(r.raw.len(), 9);
            assert_eq!(r.raw, r.filtered);
            assert_eq!(r.raw[0], pairs.get(r.level).left);
        }
        assert!(set.heavily_pruned().is_empty());
    }

    #[test]
    fn spur_is_not_on_the_path() {
        let (g, pairs) = ladder(true, false);
        let spur = g.len() - 1;
        let set = extract_rib_paths(&g, &pairs, 60.0).unwrap();
        assert!(set.ribs().iter().all(|r| !r.raw.contains(&spur)));
        assert_eq!(set.ribs()[1].raw.len(), 9);
    }

    #[test]
    fn kink_is_filtered() {
        let (g, pairs) = ladder(false, true);
        let set = extract_rib_paths(&g, &pairs, 60.0).unwrap();
        let rib2 = &set.ribs()[0];
        assert!(rib2.raw.contains(&1));
        assert!(!rib2.filtered.contains(&1));
        assert_eq!(rib2.filtered.len(), 8);
    }

    #[test]
    fn threshold_range() {
        let (g, pairs) = ladder(false, false);
        assert!(extract_rib_paths(&g, &pairs, 0.0).is_err());
        assert!(extract_rib_paths(&g, &pairs, 181.0).is_err());
    }
}
