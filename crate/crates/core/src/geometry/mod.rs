//! 3D points, labeled clouds, rigid transforms and the distance machinery the
//! rest of the pipeline is built on. All lengths are millimeters.

mod downsample;
mod kabsch;
mod knn;
mod metrics;
mod pca;

pub use downsample::{downsample, ideal_spacing};
pub use kabsch::kabsch_fit;
pub use knn::{nearest_neighbors, KdTree};
pub use metrics::{hausdorff_distance, mean_nn_distance, NnStats};
pub use pca::{principal_axes, PrincipalAxes};

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Matrix3, Rotation3};

#[cfg(not(feature = "std"))]
use num_traits::Float;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Rib level of a costal cartilage, 2 through 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RibLevel(u8);

impl RibLevel {
    pub const ALL: [RibLevel; 4] = [RibLevel(2), RibLevel(3), RibLevel(4), RibLevel(5)];

    pub fn new(level: u8) -> Option<Self> {
        (2..=5).contains(&level).then_some(RibLevel(level))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Position of this level in [`RibLevel::ALL`].
    pub fn index(self) -> usize {
        usize::from(self.0 - 2)
    }
}

impl fmt::Display for RibLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-point anatomical tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Label {
    #[default]
    Unknown,
    Sternum,
    Rib(RibLevel),
}

impl Label {
    /// Integer code used by the file formats: 0 unknown, 1 sternum, 2..=5 rib level.
    pub fn code(self) -> u8 {
        match self {
            Label::Unknown => 0,
            Label::Sternum => 1,
            Label::Rib(level) => level.get(),
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Unknown),
            1 => Some(Label::Sternum),
            c => RibLevel::new(c).map(Label::Rib),
        }
    }
}

/// An ordered list of points with optional per-point labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<Label>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        debug_assert!(points.iter().all(is_finite));
        PointCloud {
            points,
            labels: None,
        }
    }

    pub fn with_labels(points: Vec<Point3>, labels: Vec<Label>) -> crate::Result<Self> {
        if points.len() != labels.len() {
            return Err(crate::Error::SizeMismatch {
                left: points.len(),
                right: labels.len(),
            });
        }
        debug_assert!(points.iter().all(is_finite));
        Ok(PointCloud {
            points,
            labels: Some(labels),
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn label(&self, index: usize) -> Label {
        self.labels
            .as_ref()
            .map_or(Label::Unknown, |labels| labels[index])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Point3>, Option<Vec<Label>>) {
        (self.points, self.labels)
    }

    /// Cloud made of the points at `indices`, in that order, labels carried along.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|labels| indices.iter().map(|&i| labels[i]).collect()),
        }
    }

    /// Same labels, new coordinates.
    pub fn map_points(&self, mut f: impl FnMut(&Point3) -> Point3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(&mut f).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn centroid(&self) -> Option<Point3> {
        centroid(&self.points)
    }
}

impl From<Vec<Point3>> for PointCloud {
    fn from(points: Vec<Point3>) -> Self {
        PointCloud::new(points)
    }
}

pub fn is_finite(p: &Point3) -> bool {
    p.x.is_finite() && p.y.is_finite() && p.z.is_finite()
}

pub fn centroid(points: &[Point3]) -> Option<Point3> {
    if points.is_empty() {
        return None;
    }
    let sum = points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Some(Point3::from(sum / points.len() as f64))
}

/// Rotation followed by translation: `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about `axis` by `angle` radians, then translation.
    pub fn from_axis_angle(axis: &Vector3, angle: f64, translation: Vector3) -> Self {
        let rotation = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        RigidTransform {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    /// Intrinsic x-y-z Euler angles in radians.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64, translation: Vector3) -> Self {
        let rotation = Rotation3::from_euler_angles(roll, pitch, yaw);
        RigidTransform {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3) -> Vector3 {
        self.rotation * v
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Orthonormal with determinant +1, within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        gram.abs().max() <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Frobenius norm of the rotation difference.
    pub fn rotation_error(&self, other: &RigidTransform) -> f64 {
        (self.rotation - other.rotation).norm()
    }

    pub fn translation_error(&self, other: &RigidTransform) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

/// Applies `t` to every point; labels and order are preserved.
pub fn apply_transform(t: &RigidTransform, cloud: &PointCloud) -> PointCloud {
    cloud.map_points(|p| t.apply(p))
}
