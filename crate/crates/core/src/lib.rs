//! Skeleton-graph non-rigid registration of rib-cartilage point clouds.
//!
//! Each cloud is compressed twice with a self-organizing map, the resulting
//! key points are connected by a Euclidean minimum spanning tree, and one tree
//! path per rib level is extracted between endpoints found on the convex hull.
//! The paths are pruned for directional continuity, fitted with cubic
//! polynomials and resampled so that template and subject skeletons pair up
//! index by index. The subject is reached by warping every template point with
//! the rigid transform that best aligns its nearest paired key points.
//!
//! The crate is `no_std` (with `alloc`) unless the default `std` feature is on.
//! File formats and the command-line driver live in the `skelreg` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod register;
pub mod resample;
pub mod skeleton;
pub mod som;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Label, Point3, PointCloud, RibLevel, RigidTransform, Vector3};
