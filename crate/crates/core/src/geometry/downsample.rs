use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Point3, PointCloud};
use crate::{Error, Result};

const RELAXATION: f64 = 0.9;

/// Spacing of `count` points laid on a regular lattice filling the bounding
/// box. Flat extents are dropped, so a segment or a plane gets its 1D or 2D
/// spacing instead of zero.
pub fn ideal_spacing(points: &[Point3], count: usize) -> f64 {
    if points.is_empty() || count == 0 {
        return 0.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let extents = hi - lo;
    let largest = extents.max();
    if largest <= 0.0 {
        return 0.0;
    }
    let mut measure = 1.0;
    let mut dims = 0;
    for e in extents.iter() {
        if *e > largest * 1e-9 {
            measure *= e;
            dims += 1;
        }
    }
    (measure / count as f64).powf(1.0 / dims as f64)
}

type Cell = (i64, i64, i64);

fn cell_of(p: &Point3, size: f64) -> Cell {
    (
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    )
}

/// Greedy dart throwing over a seeded random visiting order: a point is kept
/// when no kept point lies closer than the current radius. The radius starts at
/// [`ideal_spacing`] and relaxes by 0.9 per pass until `target_count` points fit.
pub fn downsample(cloud: &PointCloud, target_count: usize, seed: u64) -> Result<PointCloud> {
    let n = cloud.len();
    if target_count > n {
        return Err(Error::TargetTooLarge {
            target: target_count,
            available: n,
        });
    }
    if target_count == n {
        return Ok(cloud.clone());
    }
    let points = cloud.points();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut radius = ideal_spacing(points, target_count);
    loop {
        if let Some(kept) = throw_darts(points, &order, radius, target_count) {
            return Ok(cloud.select(&kept));
        }
        radius *= RELAXATION;
    }
}

fn throw_darts(points: &[Point3], order: &[usize], radius: f64, target: usize) -> Option<Vec<usize>> {
    let mut kept = Vec::with_capacity(target);
    if radius <= 1e-12 {
        kept.extend(order.iter().take(target));
        return Some(kept);
    }
    let r2 = radius * radius;
    let mut grid: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    for &i in order {
        let p = &points[i];
        let (cx, cy, cz) = cell_of(p, radius);
        let blocked = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                (-1..=1).any(|dz| {
                    grid.get(&(cx + dx, cy + dy, cz + dz))
                        .is_some_and(|cell| cell.iter().any(|&j| (points[j] - p).norm_squared() < r2))
                })
            })
        });
        if blocked {
            continue;
        }
        grid.entry((cx, cy, cz)).or_default().push(i);
        kept.push(i);
        if kept.len() == target {
            return Some(kept);
        }
    }
    None
}
