use nalgebra::{Matrix3, SVD};

use super::{centroid, Point3, RigidTransform};
use crate::{Error, Result};

/// Least-squares rigid transform taking `source[i]` onto `target[i]`.
///
/// SVD of the cross-covariance (Kabsch). A reflection is turned into a proper
/// rotation by flipping the singular direction with the smallest singular value.
pub fn kabsch_fit(source: &[Point3], target: &[Point3]) -> Result<RigidTransform> {
    if source.len() != target.len() {
        return Err(Error::SizeMismatch {
            left: source.len(),
            right: target.len(),
        });
    }
    if source.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: source.len(),
        });
    }
    let cs = centroid(source).expect("non-empty");
    let ct = centroid(target).expect("non-empty");

    let mut h = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        h += (s - cs) * (t - ct).transpose();
    }

    let svd = SVD::new(h, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateConfiguration("SVD did not converge")),
    };
    let sv = svd.singular_values;
    let largest = sv.max();
    let scale = h.abs().max();
    if !(largest > 0.0) || !(scale > 0.0) {
        return Err(Error::DegenerateConfiguration("covariance is zero"));
    }
    let rank = sv.iter().filter(|&&s| s > largest * 1e-10).count();
    if rank < 2 {
        return Err(Error::DegenerateConfiguration("covariance rank below 2"));
    }

    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(sv.imin(), sv.imin())] = -1.0;
    }
    let rotation = v * d * u.transpose();
    let translation = ct.coords - rotation * cs.coords;
    Ok(RigidTransform::new(rotation, translation))
}
