use alloc::format;
use alloc::vec::Vec;

use crate::geometry::{centroid, kabsch_fit, Point3, RibLevel, RigidTransform, Vector3};
use crate::{Error, Result};

/// Side of the sternum plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// The two endpoints of one rib level, as vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RibEndpoints {
    pub level: RibLevel,
    pub left: usize,
    pub right: usize,
}

/// Endpoint indices of the four rib levels, ordered 2 to 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndpointPairs {
    ribs: [RibEndpoints; 4],
}

impl EndpointPairs {
    /// `ends[i]` holds the (left, right) indices of `RibLevel::ALL[i]`.
    pub fn new(ends: [(usize, usize); 4]) -> Result<Self> {
        let ribs = core::array::from_fn(|i| RibEndpoints {
            level: RibLevel::ALL[i],
            left: ends[i].0,
            right: ends[i].1,
        });
        let mut all: Vec<usize> = ends.iter().flat_map(|&(l, r)| [l, r]).collect();
        all.sort_unstable();
        all.dedup();
        if all.len() != 8 {
            return Err(Error::AmbiguousPairing("endpoint indices are not distinct".into()));
        }
        Ok(EndpointPairs { ribs })
    }

    pub fn ribs(&self) -> &[RibEndpoints; 4] {
        &self.ribs
    }

    pub fn get(&self, level: RibLevel) -> RibEndpoints {
        self.ribs[level.index()]
    }

    /// Re-index through `map` (e.g. from hull-vertex positions to graph vertices).
    pub fn remap(&self, map: &[usize]) -> Result<EndpointPairs> {
        EndpointPairs::new(core::array::from_fn(|i| (map[self.ribs[i].left], map[self.ribs[i].right])))
    }
}

/// Labeled endpoint coordinates of a template skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateEndpoints {
    /// `(left, right)` per level, ordered 2 to 5.
    pub ribs: [(Point3, Point3); 4],
    /// Unlabeled template points (typically its other hull vertices) that
    /// take part in the rigid alignment but receive no label. The eight
    /// endpoints alone are nearly mirror-symmetric, so a left-right flip fits
    /// them almost as well as the truth; the rest of the hull breaks the tie.
    pub context: Vec<Point3>,
}

impl TemplateEndpoints {
    pub fn new(ribs: [(Point3, Point3); 4]) -> Self {
        TemplateEndpoints {
            ribs,
            context: Vec::new(),
        }
    }

    pub fn from_pairs(points: &[Point3], pairs: &EndpointPairs) -> Self {
        TemplateEndpoints::new(core::array::from_fn(|i| {
            let r = pairs.ribs()[i];
            (points[r.left], points[r.right])
        }))
    }

    pub fn with_context(mut self, context: Vec<Point3>) -> Self {
        self.context = context;
        self
    }

    /// Flattened as L2, R2, L3, R3, …
    pub fn points(&self) -> [Point3; 8] {
        core::array::from_fn(|k| if k % 2 == 0 { self.ribs[k / 2].0 } else { self.ribs[k / 2].1 })
    }

    pub fn min_separation(&self) -> f64 {
        let p = self.points();
        let mut best = f64::INFINITY;
        for i in 0..8 {
            for j in i + 1..8 {
                best = best.min((p[i] - p[j]).norm());
            }
        }
        best
    }

    /// Plane between the left and right endpoints: a point on it and its
    /// normal, pointing to the right side.
    pub fn sternum_plane(&self) -> (Point3, Vector3) {
        let origin = centroid(&self.points()).expect("eight points");
        let dir = self
            .ribs
            .iter()
            .fold(Vector3::zeros(), |acc, (l, r)| acc + (r - l));
        (origin, dir.normalize())
    }
}

fn nearest(p: &Point3, cands: &[Point3]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in cands.iter().enumerate() {
        let d = (c - p).norm();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn score(t: &RigidTransform, template: &[Point3], cands: &[Point3]) -> f64 {
    template.iter().map(|p| nearest(&t.apply(p), cands).1).sum::<f64>() / template.len() as f64
}

/// Rigid ICP of the template points onto the candidate set.
fn refine(mut t: RigidTransform, template: &[Point3], cands: &[Point3]) -> (RigidTransform, f64) {
    let mut current = score(&t, template, cands);
    for _ in 0..50 {
        let matched: Vec<Point3> = template.iter().map(|p| cands[nearest(&t.apply(p), cands).0]).collect();
        let Ok(next) = kabsch_fit(template, &matched) else {
            break;
        };
        let s = score(&next, template, cands);
        if s >= current - 1e-12 {
            if s < current {
                t = next;
                current = s;
            }
            break;
        }
        t = next;
        current = s;
    }
    (t, current)
}

/// Hypothesis seeds: identity plus every rigid map taking the template's widest
/// triangle onto an ordered triple of candidates with compatible side lengths.
fn hypotheses(template: &[Point3; 8], scored: &[Point3], cands: &[Point3]) -> Vec<(f64, RigidTransform)> {
    let mut anchor = (0, 1, 2);
    let mut best_area = -1.0;
    for i in 0..8 {
        for j in i + 1..8 {
            for k in j + 1..8 {
                let area = (template[j] - template[i]).cross(&(template[k] - template[i])).norm();
                if area > best_area {
                    best_area = area;
                    anchor = (i, j, k);
                }
            }
        }
    }
    let tri = [template[anchor.0], template[anchor.1], template[anchor.2]];
    let sides = [(tri[0] - tri[1]).norm(), (tri[1] - tri[2]).norm(), (tri[0] - tri[2]).norm()];
    let fits = |d: f64, want: f64| (d - want).abs() <= 0.3 * want;

    let mut out = alloc::vec![(score(&RigidTransform::identity(), scored, cands), RigidTransform::identity())];
    let n = cands.len();
    for a in 0..n {
        for b in 0..n {
            if b == a || !fits((cands[a] - cands[b]).norm(), sides[0]) {
                continue;
            }
            for c in 0..n {
                if c == a || c == b || !fits((cands[b] - cands[c]).norm(), sides[1]) || !fits((cands[a] - cands[c]).norm(), sides[2]) {
                    continue;
                }
                if let Ok(t) = kabsch_fit(&tri, &[cands[a], cands[b], cands[c]]) {
                    out.push((score(&t, scored, cands), t));
                }
            }
        }
    }
    out
}

const REFINED_HYPOTHESES: usize = 8;

/// Transfers the template's rib/side labels onto candidate hull vertices.
///
/// The template endpoints are rigidly aligned to the candidates (seeded
/// hypotheses refined by ICP, the winner chosen with the context points
/// included); each template endpoint then claims its closest unclaimed candidate, globally shortest matches first. Candidates that no
/// endpoint claims are ignored.
pub fn pair_endpoints(candidates: &[Point3], template: &TemplateEndpoints) -> Result<EndpointPairs> {
    if candidates.len() < 8 {
        return Err(Error::AmbiguousPairing(format!(
            "need at least 8 hull vertices, got {}",
            candidates.len()
        )));
    }
    let tpl = template.points();
    let mut scored = tpl.to_vec();
    scored.extend_from_slice(&template.context);
    let mut seeds = hypotheses(&tpl, &scored, candidates);
    // Stable: equal scores keep enumeration order.
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    let mut best: Option<(f64, RigidTransform)> = None;
    for (_, seed) in seeds.into_iter().take(REFINED_HYPOTHESES) {
        // Fit on the endpoints; the context only arbitrates between fits.
        let (t, _) = refine(seed, &tpl, candidates);
        let s = score(&t, &scored, candidates);
        if best.is_none_or(|(bs, _)| s < bs - 1e-12) {
            best = Some((s, t));
        }
    }
    let (_, transform) = best.expect("identity seed is always present");
    let moved: Vec<Point3> = tpl.iter().map(|p| transform.apply(p)).collect();

    let mut matches: Vec<(f64, usize, usize)> = Vec::with_capacity(8 * candidates.len());
    for (k, p) in moved.iter().enumerate() {
        for (j, c) in candidates.iter().enumerate() {
            matches.push(((c - p).norm(), k, j));
        }
    }
    matches.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut claimed = [None::<(usize, f64)>; 8];
    let mut used = alloc::vec![false; candidates.len()];
    for (d, k, j) in matches {
        if claimed[k].is_none() && !used[j] {
            claimed[k] = Some((j, d));
            used[j] = true;
        }
    }
    let limit = 0.5 * template.min_separation();
    let mut idx = [0usize; 8];
    for (k, c) in claimed.iter().enumerate() {
        let (j, d) = c.expect("at least 8 candidates");
        if d > limit {
            return Err(Error::AmbiguousPairing(format!(
                "rib {} endpoint is {:.1} mm from the nearest free hull vertex (limit {:.1} mm)",
                RibLevel::ALL[k / 2],
                d,
                limit
            )));
        }
        idx[k] = j;
    }

    let (origin, normal) = template.sternum_plane();
    let origin = transform.apply(&origin);
    let normal = transform.apply_vector(&normal);
    for i in 0..4 {
        let l = (candidates[idx[2 * i]] - origin).dot(&normal);
        let r = (candidates[idx[2 * i + 1]] - origin).dot(&normal);
        if !(l < 0.0 && r > 0.0) {
            return Err(Error::AmbiguousPairing(format!(
                "rib {} endpoints are not on opposite sides of the sternum plane",
                RibLevel::ALL[i]
            )));
        }
    }
    EndpointPairs::new(core::array::from_fn(|i| (idx[2 * i], idx[2 * i + 1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn template() -> TemplateEndpoints {
        let mut ribs = [(Point3::origin(), Point3::origin()); 4];
        for (i, (half, sag)) in [(50.0, 12.0), (62.0, 17.0), (70.0, 23.0), (75.0, 30.0)].into_iter().enumerate() {
            let y = [0.0, -30.0, -56.0, -80.0][i];
            ribs[i] = (Point3::new(-half, y, -sag), Point3::new(half, y - 2.0, -sag + 1.0));
        }
        TemplateEndpoints::new(ribs)
    }

    fn expect_identity_labels(p: &EndpointPairs) {
        for (i, r) in p.ribs().iter().enumerate() {
            assert_eq!((r.left, r.right), (2 * i, 2 * i + 1));
        }
    }

    #[test]
    fn exact_template_pairs_with_itself() {
        let t = template();
        expect_identity_labels(&pair_endpoints(&t.points(), &t).unwrap());
    }

    #[test]
    fn recovers_labels_under_motion_with_spurious_vertices() {
        let t = template();
        let motion = RigidTransform::from_euler(0.3, -0.4, 0.9, Vector3::new(40.0, -12.0, 7.0));
        let mut cands: Vec<Point3> = t.points().iter().map(|p| motion.apply(p)).collect();
        cands.push(motion.apply(&Point3::new(0.0, 200.0, 0.0)));
        cands.push(motion.apply(&Point3::new(0.0, -40.0, 150.0)));
        expect_identity_labels(&pair_endpoints(&cands, &t).unwrap());
    }

    #[test]
    fn missing_endpoint_region_is_ambiguous() {
        let t = template();
        let mut cands: Vec<Point3> = t.points().to_vec();
        // Drop rib 3 right end; add a far-away hull vertex to keep the count.
        cands.remove(3);
        cands.push(Point3::new(0.0, 150.0, 0.0));
        assert!(matches!(pair_endpoints(&cands, &t), Err(Error::AmbiguousPairing(_))));
    }

    #[test]
    fn too_few_candidates() {
        let t = template();
        assert!(pair_endpoints(&t.points()[..7], &t).is_err());
    }

    #[test]
    fn duplicate_indices_rejected() {
        assert!(EndpointPairs::new([(0, 1), (2, 3), (4, 5), (6, 0)]).is_err());
        let p = EndpointPairs::new([(0, 1), (2, 3), (4, 5), (6, 7)]).unwrap();
        let r = p.remap(&[10, 11, 12, 13, 14, 15, 16, 17]).unwrap();
        assert_eq!(r.get(RibLevel::new(5).unwrap()).right, 17);
        let _ = vec![0];
    }
}
