use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geometry::{kabsch_fit, KdTree, Point3, PointCloud, RigidTransform};
use crate::resample::Correspondence;
use crate::{Error, Result};

fn check(corr: &Correspondence, n_r: usize) -> Result<()> {
    if n_r < 3 {
        return Err(Error::InvalidParams(alloc::format!("n_r must be at least 3, got {n_r}")));
    }
    if n_r > corr.len() {
        return Err(Error::KTooLarge {
            k: n_r,
            available: corr.len(),
        });
    }
    Ok(())
}

/// Rigid fit over the `n_r` source keys nearest to `p`, paired in ascending
/// key order.
pub fn local_transform(p: &Point3, corr: &Correspondence, n_r: usize) -> Result<RigidTransform> {
    check(corr, n_r)?;
    Warper::new(corr, n_r).transform(p)
}

struct Warper<'a> {
    corr: &'a Correspondence,
    tree: KdTree,
    n_r: usize,
    /// Fits keyed by neighbour set; many points share one.
    cache: BTreeMap<Vec<usize>, RigidTransform>,
}

impl<'a> Warper<'a> {
    fn new(corr: &'a Correspondence, n_r: usize) -> Self {
        Warper {
            corr,
            tree: KdTree::new(&corr.source_points()),
            n_r,
            cache: BTreeMap::new(),
        }
    }

    fn transform(&mut self, p: &Point3) -> Result<RigidTransform> {
        let mut keys: Vec<usize> = self.tree.k_nearest(p, self.n_r)?.into_iter().map(|(i, _)| i).collect();
        keys.sort_unstable();
        if let Some(t) = self.cache.get(&keys) {
            return Ok(*t);
        }
        let pairs = self.corr.pairs();
        let src: Vec<Point3> = keys.iter().map(|&i| pairs[i].source).collect();
        let dst: Vec<Point3> = keys.iter().map(|&i| pairs[i].target).collect();
        let t = kabsch_fit(&src, &dst)?;
        self.cache.insert(keys, t);
        Ok(t)
    }
}

/// Moves each point by the rigid transform fitted to its `n_r` nearest
/// source-side key points. Points are handled independently.
pub fn warp_points(points: &[Point3], corr: &Correspondence, n_r: usize) -> Result<Vec<Point3>> {
    check(corr, n_r)?;
    let mut warper = Warper::new(corr, n_r);
    points.iter().map(|p| Ok(warper.transform(p)?.apply(p))).collect()
}

/// [`warp_points`] over a cloud; labels are kept.
pub fn warp_nonrigid(source: &PointCloud, corr: &Correspondence, n_r: usize) -> Result<PointCloud> {
    if source.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let moved = warp_points(source.points(), corr, n_r)?;
    let mut iter = moved.into_iter();
    Ok(source.map_points(|_| iter.next().expect("same length")))
}
