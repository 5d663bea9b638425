use alloc::vec::Vec;

use nalgebra::Matrix3;

use super::{evaluate, Method, RegistrationReport};
use crate::geometry::{centroid, kabsch_fit, principal_axes, KdTree, Point3, RigidTransform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    pub max_iter: usize,
    /// Stop once an iteration improves the mean distance by less than this, mm.
    pub tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iter: 100,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    pub transform: RigidTransform,
    /// Mean nearest-neighbor distance before the first iteration and after
    /// every accepted one; non-increasing.
    pub history: Vec<f64>,
    pub report: RegistrationReport,
}

fn mean_distance(points: &[Point3], t: &RigidTransform, tree: &KdTree) -> (f64, Vec<Point3>) {
    let mut sum = 0.0;
    let mut matched = Vec::with_capacity(points.len());
    for p in points {
        let (j, d) = tree.nearest(&t.apply(p)).expect("non-empty target");
        sum += d;
        matched.push(tree.point(j));
    }
    (sum / points.len() as f64, matched)
}

/// Point-to-point ICP from `initial`. A step that would raise the mean
/// nearest-neighbor distance is rejected and ends the iteration.
pub fn icp_from(source: &[Point3], target: &[Point3], params: &IcpParams, initial: RigidTransform) -> Result<IcpResult> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let tree = KdTree::new(target);
    let mut t = initial;
    let (mut current, mut matched) = mean_distance(source, &t, &tree);
    let mut history = alloc::vec![current];
    for _ in 0..params.max_iter {
        let Ok(next) = kabsch_fit(source, &matched) else {
            break;
        };
        let (d, m) = mean_distance(source, &next, &tree);
        if d > current {
            break;
        }
        let gain = current - d;
        t = next;
        current = d;
        matched = m;
        history.push(current);
        if gain < params.tol {
            break;
        }
    }
    let moved: Vec<Point3> = source.iter().map(|p| t.apply(p)).collect();
    Ok(IcpResult {
        transform: t,
        history,
        report: evaluate(&moved, target, Method::Icp)?,
    })
}

/// ICP from the identity.
pub fn icp_rigid(source: &[Point3], target: &[Point3], params: &IcpParams) -> Result<IcpResult> {
    icp_from(source, target, params, RigidTransform::identity())
}

/// Best of several ICP runs: centroid alignment alone, and centroid plus each
/// proper sign choice of the principal-axis alignment. The lowest final mean
/// distance wins; ties keep the earlier start.
pub fn icp_prealigned(source: &[Point3], target: &[Point3], params: &IcpParams) -> Result<IcpResult> {
    let (Some(cs), Some(ct)) = (centroid(source), centroid(target)) else {
        return Err(Error::EmptyCloud);
    };
    let mut starts = alloc::vec![RigidTransform::from_translation(ct - cs)];
    if let (Some(ps), Some(pt)) = (principal_axes(source), principal_axes(target)) {
        let a_s = Matrix3::from_columns(&ps.axes);
        let a_t = Matrix3::from_columns(&pt.axes);
        for signs in [[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0]] {
            let r = a_t * Matrix3::from_diagonal(&signs.into()) * a_s.transpose();
            starts.push(RigidTransform::new(r, ct.coords - r * cs.coords));
        }
    }
    let mut best: Option<IcpResult> = None;
    for start in starts {
        let run = icp_from(source, target, params, start)?;
        if best.as_ref().is_none_or(|b| run.report.ed_mean < b.report.ed_mean) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.gen_range(-50.0..50.0);
                Point3::new(x, rng.gen_range(-30.0..30.0) + 0.01 * x * x, rng.gen_range(-10.0..10.0))
            })
            .collect()
    }

    #[test]
    fn identical_clouds() {
        let s = blob(200, 1);
        let r = icp_rigid(&s, &s, &IcpParams::default()).unwrap();
        assert!(r.transform.rotation_error(&RigidTransform::identity()) < 1e-4);
        assert!(r.transform.translation_error(&RigidTransform::identity()) < 1e-4);
        assert!(r.history.len() <= 2);
    }

    #[test]
    fn small_perturbation_recovered() {
        let s = blob(400, 2);
        let truth = RigidTransform::from_axis_angle(&Vector3::new(0.3, 1.0, 0.2), 5f64.to_radians(), Vector3::new(3.0, 0.0, 0.0));
        let t: Vec<Point3> = s.iter().map(|p| truth.apply(p)).collect();
        let r = icp_rigid(&s, &t, &IcpParams::default()).unwrap();
        assert!(r.report.ed_mean < 1e-3, "{}", r.report.ed_mean);
        assert!(r.transform.translation_error(&truth) < 1e-3);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn partial_overlap() {
        let t = blob(300, 3);
        let s: Vec<Point3> = t.iter().filter(|p| p.x < 0.0).copied().collect();
        let shift = RigidTransform::from_translation(Vector3::new(1.0, 2.0, -1.0));
        let s: Vec<Point3> = s.iter().map(|p| shift.apply(p)).collect();
        let r = icp_rigid(&s, &t, &IcpParams::default()).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.report.hausdorff > 0.0);
        assert!(r.report.ed_mean <= r.report.hausdorff);
    }

    #[test]
    fn prealignment_handles_large_rotation() {
        let s = blob(300, 4);
        let truth = RigidTransform::from_euler(0.0, 0.0, 2.5, Vector3::new(20.0, -40.0, 5.0));
        let t: Vec<Point3> = s.iter().map(|p| truth.apply(p)).collect();
        let r = icp_prealigned(&s, &t, &IcpParams::default()).unwrap();
        assert!(r.report.ed_mean < 1e-3, "{}", r.report.ed_mean);
    }
}
