use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{KdTree, Point3};
use crate::{Error, Result};

/// Nearest-neighbor distances from each moved point to a target cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct NnStats {
    pub distances: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `distances`.
    pub std_dev: f64,
}

impl NnStats {
    pub fn max(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

fn directed(from: &[Point3], to: &KdTree) -> Vec<f64> {
    from.iter()
        .map(|p| to.nearest(p).map(|(_, d)| d).unwrap_or(f64::INFINITY))
        .collect()
}

/// Mean (and spread) of the distance from every `moved` point to its closest `target` point.
pub fn mean_nn_distance(moved: &[Point3], target: &[Point3]) -> Result<NnStats> {
    if moved.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let distances = directed(moved, &KdTree::new(target));
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let var = distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(NnStats {
        distances,
        mean,
        std_dev: var.sqrt(),
    })
}

/// Symmetric Hausdorff distance: the larger of the two directed worst-case
/// nearest-neighbor distances.
pub fn hausdorff_distance(a: &[Point3], b: &[Point3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let ab = directed(a, &KdTree::new(b)).into_iter().fold(0.0, f64::max);
    let ba = directed(b, &KdTree::new(a)).into_iter().fold(0.0, f64::max);
    Ok(ab.max(ba))
}
