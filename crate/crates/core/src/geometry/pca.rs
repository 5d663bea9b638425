use nalgebra::{Matrix3, SymmetricEigen};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{centroid, Point3, Vector3};

/// Centroid and principal axes of a point set, axes sorted by decreasing variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalAxes {
    pub centroid: Point3,
    /// Unit axes forming a right-handed frame.
    pub axes: [Vector3; 3],
    /// Population variance along each axis.
    pub variances: [f64; 3],
}

impl PrincipalAxes {
    pub fn std_devs(&self) -> [f64; 3] {
        self.variances.map(|v| v.max(0.0).sqrt())
    }

    /// Coordinates of `p` in the principal frame.
    pub fn project(&self, p: &Point3) -> Vector3 {
        let d = p - self.centroid;
        Vector3::new(d.dot(&self.axes[0]), d.dot(&self.axes[1]), d.dot(&self.axes[2]))
    }
}

/// Flip `v` so that its largest-magnitude component is positive.
fn canonical_sign(v: Vector3) -> Vector3 {
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

/// Principal component analysis. Axis signs are canonical (largest component
/// positive for the first two, the third completes a right-handed frame), so
/// the result is deterministic for a given input.
pub fn principal_axes(points: &[Point3]) -> Option<PrincipalAxes> {
    let c = centroid(points)?;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    cov /= points.len() as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let e0 = canonical_sign(eig.eigenvectors.column(order[0]).normalize());
    let mut e1 = eig.eigenvectors.column(order[1]).into_owned();
    // Re-orthogonalize against e0; nearly repeated eigenvalues can leave drift.
    e1 -= e0 * e0.dot(&e1);
    let e1 = canonical_sign(e1.normalize());
    let e2 = e0.cross(&e1);
    Some(PrincipalAxes {
        centroid: c,
        axes: [e0, e1, e2],
        variances: [
            eig.eigenvalues[order[0]].max(0.0),
            eig.eigenvalues[order[1]].max(0.0),
            eig.eigenvalues[order[2]].max(0.0),
        ],
    })
}
