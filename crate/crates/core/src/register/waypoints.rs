use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::warp_points;
use crate::geometry::{Point3, RibLevel};
use crate::resample::{Correspondence, ResampledSkeleton};
use crate::skeleton::Side;
use crate::{Error, Result};

/// Intercostal gap between two neighbouring rib levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gap {
    G23,
    G34,
    G45,
}

impl Gap {
    pub const ALL: [Gap; 3] = [Gap::G23, Gap::G34, Gap::G45];

    pub fn as_str(self) -> &'static str {
        match self {
            Gap::G23 => "2-3",
            Gap::G34 => "3-4",
            Gap::G45 => "4-5",
        }
    }

    pub fn parse(s: &str) -> Option<Gap> {
        Gap::ALL.into_iter().find(|g| g.as_str() == s)
    }

    /// The upper of the two bounding rib levels.
    pub fn upper(self) -> RibLevel {
        RibLevel::ALL[self as usize]
    }

    pub fn lower(self) -> RibLevel {
        RibLevel::ALL[self as usize + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Point3,
    pub gap: Gap,
    pub side: Side,
}

/// Position at fraction `u` of a resampled rib, linear between key points.
fn along(rib: &[Point3], u: f64) -> Point3 {
    let s = u * (rib.len() - 1) as f64;
    let i = (s.floor() as usize).min(rib.len() - 2);
    let f = s - i as f64;
    rib[i] + (rib[i + 1] - rib[i]) * f
}

/// Fractions along the rib (0 = left end, 1 = right end) used per gap.
const SCHEME: [&[f64]; 3] = [&[0.2, 0.8], &[0.15, 0.35, 0.65, 0.85], &[0.15, 0.35, 0.65, 0.85]];

/// Ten waypoints midway between neighbouring ribs: two in gap 2-3 and four
/// each in gaps 3-4 and 4-5, split evenly between the sides.
///
/// Each waypoint averages the two ribs at the same fraction of their length,
/// which for equal sample counts is the mean of index-aligned key points.
pub fn plan_waypoints(skel: &ResampledSkeleton) -> Result<Vec<Waypoint>> {
    for level in RibLevel::ALL {
        if skel.rib(level).len() < 2 {
            return Err(Error::MissingRib(level.get()));
        }
    }
    let mut out = Vec::with_capacity(10);
    for (gap, fractions) in Gap::ALL.into_iter().zip(SCHEME) {
        let (a, b) = (skel.rib(gap.upper()), skel.rib(gap.lower()));
        for &u in fractions {
            out.push(Waypoint {
                position: Point3::from((along(a, u).coords + along(b, u).coords) * 0.5),
                gap,
                side: if u < 0.5 { Side::Left } else { Side::Right },
            });
        }
    }
    Ok(out)
}

/// Warps waypoints exactly like cloud points; labels are kept.
pub fn transfer_waypoints(wp: &[Waypoint], corr: &Correspondence, n_r: usize) -> Result<Vec<Waypoint>> {
    let positions: Vec<Point3> = wp.iter().map(|w| w.position).collect();
    let moved = warp_points(&positions, corr, n_r)?;
    Ok(wp.iter().zip(moved).map(|(w, position)| Waypoint { position, ..*w }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RigidTransform, Vector3};
    use crate::resample::build_correspondence;

    fn ribs(f: impl Fn(usize, f64) -> Point3) -> ResampledSkeleton {
        ResampledSkeleton::new(core::array::from_fn(|i| {
            let n = [6, 6, 8, 10][i];
            (0..n).map(|k| f(i, -50.0 + 100.0 * k as f64 / (n - 1) as f64)).collect()
        }))
    }

    #[test]
    fn parallel_straight_ribs() {
        let s = ribs(|i, x| Point3::new(x, -20.0 * i as f64, 0.0));
        let w = plan_waypoints(&s).unwrap();
        assert_eq!(w.len(), 10);
        for p in &w {
            let y_up = -20.0 * p.gap.upper().index() as f64;
            assert!((p.position.y - (y_up - 10.0)).abs() < 1e-12);
        }
        for gap in Gap::ALL {
            let left = w.iter().filter(|p| p.gap == gap && p.side == Side::Left).count();
            let right = w.iter().filter(|p| p.gap == gap && p.side == Side::Right).count();
            assert_eq!(left, right);
            assert!(left >= 1);
        }
    }

    #[test]
    fn mirror_symmetric_cage() {
        let s = ribs(|i, x| Point3::new(x, -25.0 * i as f64 - 0.003 * x * x, -0.005 * x * x));
        let w = plan_waypoints(&s).unwrap();
        for a in w.iter().filter(|p| p.side == Side::Left) {
            let mirror = Point3::new(-a.position.x, a.position.y, a.position.z);
            assert!(w
                .iter()
                .any(|b| b.side == Side::Right && b.gap == a.gap && (b.position - mirror).norm() < 1e-6));
        }
    }

    #[test]
    fn equal_counts_average_index_aligned_points() {
        let s = ribs(|i, x| Point3::new(x, -25.0 * i as f64 + 0.01 * x * x, 0.0));
        let w = plan_waypoints(&s).unwrap();
        let (r2, r3) = (s.rib(RibLevel::ALL[0]), s.rib(RibLevel::ALL[1]));
        assert!((w[0].position.coords - (r2[1].coords + r3[1].coords) * 0.5).norm() < 1e-9);
        assert!((w[1].position.coords - (r2[4].coords + r3[4].coords) * 0.5).norm() < 1e-9);
    }

    #[test]
    fn missing_rib() {
        let mut r = ribs(|i, x| Point3::new(x, -20.0 * i as f64, 0.0)).ribs().clone();
        r[2].clear();
        assert_eq!(plan_waypoints(&ResampledSkeleton::new(r)), Err(Error::MissingRib(4)));
    }

    #[test]
    fn transfer() {
        let s = ribs(|i, x| Point3::new(x, -25.0 * i as f64, -0.004 * x * x));
        let w = plan_waypoints(&s).unwrap();
        let same = transfer_waypoints(&w, &build_correspondence(&s, &s).unwrap(), 10).unwrap();
        for (a, b) in w.iter().zip(&same) {
            assert!((a.position - b.position).norm() < 1e-9);
            assert_eq!((a.gap, a.side), (b.gap, b.side));
        }
        let t = RigidTransform::from_euler(0.05, 0.1, -0.2, Vector3::new(4.0, 1.0, -2.0));
        let moved = ResampledSkeleton::new(core::array::from_fn(|i| s.ribs()[i].iter().map(|p| t.apply(p)).collect()));
        let out = transfer_waypoints(&w, &build_correspondence(&s, &moved).unwrap(), 10).unwrap();
        for (a, b) in w.iter().zip(&out) {
            assert!((t.apply(&a.position) - b.position).norm() < 1e-9);
        }
        assert_eq!(Gap::parse("3-4"), Some(Gap::G34));
    }
}
