use alloc::vec::Vec;

use crate::geometry::{hausdorff_distance, mean_nn_distance, Point3};
use crate::Result;

/// How the moved cloud was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Graph,
    Icp,
    /// Clouds supplied from outside the pipeline.
    External,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Graph => "graph",
            Method::Icp => "icp",
            Method::External => "external",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationReport {
    pub method: Method,
    /// Distance from each moved point to its nearest target point, mm.
    pub distances: Vec<f64>,
    pub ed_mean: f64,
    pub ed_std: f64,
    pub hausdorff: f64,
    /// Wall-clock time, filled in by callers that measure it.
    pub runtime_seconds: Option<f64>,
}

/// Euclidean-distance error and Hausdorff distance of `moved` against `target`.
pub fn evaluate(moved: &[Point3], target: &[Point3], method: Method) -> Result<RegistrationReport> {
    let stats = mean_nn_distance(moved, target)?;
    let hausdorff = hausdorff_distance(moved, target)?;
    Ok(RegistrationReport {
        method,
        distances: stats.distances,
        ed_mean: stats.mean,
        ed_std: stats.std_dev,
        hausdorff,
        runtime_seconds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use alloc::vec;

    fn grid(dz: f64) -> Vec<Point3> {
        let mut v = Vec::new();
        for i in 0..=100 {
            for j in 0..=100 {
                v.push(Point3::new(i as f64 * 0.5, j as f64 * 0.5, dz));
            }
        }
        v
    }

    #[test]
    fn identical_clouds() {
        let g = grid(0.0);
        let r = evaluate(&g, &g, Method::External).unwrap();
        assert_eq!((r.ed_mean, r.ed_std, r.hausdorff), (0.0, 0.0, 0.0));
    }

    #[test]
    fn translated_flat_grid() {
        let r = evaluate(&grid(2.0), &grid(0.0), Method::Icp).unwrap();
        assert!((r.ed_mean - 2.0).abs() < 1e-12);
        assert!((r.hausdorff - 2.0).abs() < 1e-12);
        assert!(r.ed_mean <= r.hausdorff && r.ed_std >= 0.0);
        assert_eq!(r.method.to_string(), "icp");
    }

    #[test]
    fn empty() {
        assert_eq!(evaluate(&[], &[Point3::origin()], Method::Graph), Err(Error::EmptyCloud));
        let _ = vec![0];
    }
}
