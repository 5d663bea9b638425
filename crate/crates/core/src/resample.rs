//! Cubic rib curves and index-paired resampling.
//!
//! Each filtered rib path is expressed in a local frame whose abscissa is the
//! path's first principal axis, oriented from the path's first point to its
//! last. The two transverse coordinates are fitted as cubics of the abscissa
//! and the curve is resampled at equal abscissa steps.

use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};

use crate::geometry::{principal_axes, Label, Point3, PointCloud, RibLevel, Vector3};
use crate::skeleton::{RibPathSet, SkeletonGraph};
use crate::{Error, Result};

/// Orthonormal frame of a rib curve: `axes[0]` is the abscissa direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFrame {
    pub origin: Point3,
    pub axes: [Vector3; 3],
}

impl CurveFrame {
    pub fn world() -> Self {
        CurveFrame {
            origin: Point3::origin(),
            axes: [Vector3::x(), Vector3::y(), Vector3::z()],
        }
    }

    pub fn to_local(&self, p: &Point3) -> Vector3 {
        let d = p - self.origin;
        Vector3::new(d.dot(&self.axes[0]), d.dot(&self.axes[1]), d.dot(&self.axes[2]))
    }

    pub fn to_world(&self, x: f64, y: f64, z: f64) -> Point3 {
        self.origin + self.axes[0] * x + self.axes[1] * y + self.axes[2] * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RibCurve {
    pub level: RibLevel,
    pub frame: CurveFrame,
    /// `c[0] + c[1] x + c[2] x² + c[3] x³`, x in mm along the abscissa.
    pub coeff_y: [f64; 4],
    pub coeff_z: [f64; 4],
    pub x_min: f64,
    pub x_max: f64,
}

fn horner(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

impl RibCurve {
    pub fn eval(&self, x: f64) -> Point3 {
        self.frame.to_world(x, horner(&self.coeff_y, x), horner(&self.coeff_z, x))
    }
}

/// Least-squares cubic in `t = (x - centre) / half`, re-expanded in powers of x.
fn fit_cubic(xs: &[f64], vs: &[f64], centre: f64, half: f64) -> Option<[f64; 4]> {
    let mut ata = Matrix4::<f64>::zeros();
    let mut atb = Vector4::<f64>::zeros();
    for (&x, &v) in xs.iter().zip(vs) {
        let t = (x - centre) / half;
        let row = Vector4::new(1.0, t, t * t, t * t * t);
        ata += row * row.transpose();
        atb += row * v;
    }
    let a = ata.lu().solve(&atb)?;
    if !a.iter().all(|c| c.is_finite()) {
        return None;
    }
    // a_k ((x - c)/h)^k = a_k h^-k Σ_j C(k,j) x^j (-c)^(k-j)
    const BINOM: [[f64; 4]; 4] = [[1., 0., 0., 0.], [1., 1., 0., 0.], [1., 2., 1., 0.], [1., 3., 3., 1.]];
    let mut out = [0.0; 4];
    let mut hk = 1.0;
    for k in 0..4 {
        let scaled = a[k] / hk;
        let mut cpow = 1.0;
        for j in (0..=k).rev() {
            out[j] += scaled * BINOM[k][j] * cpow;
            cpow *= -centre;
        }
        hk *= half;
    }
    Some(out)
}

/// Fits a rib curve in a caller-chosen frame.
pub fn fit_rib_curve_with_frame(path: &[Point3], level: RibLevel, frame: CurveFrame) -> Result<RibCurve> {
    if path.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            got: path.len(),
        });
    }
    let local: Vec<Vector3> = path.iter().map(|p| frame.to_local(p)).collect();
    let xs: Vec<f64> = local.iter().map(|l| l.x).collect();
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = x_max - x_min;
    if !(spread >= 1.0) {
        return Err(Error::IllConditioned { spread });
    }
    let centre = 0.5 * (x_min + x_max);
    let half = 0.5 * spread;
    let ys: Vec<f64> = local.iter().map(|l| l.y).collect();
    let zs: Vec<f64> = local.iter().map(|l| l.z).collect();
    let coeff_y = fit_cubic(&xs, &ys, centre, half).ok_or(Error::IllConditioned { spread })?;
    let coeff_z = fit_cubic(&xs, &zs, centre, half).ok_or(Error::IllConditioned { spread })?;
    Ok(RibCurve {
        level,
        frame,
        coeff_y,
        coeff_z,
        x_min,
        x_max,
    })
}

/// Fits a rib curve in the path's own principal frame.
pub fn fit_rib_curve(path: &[Point3], level: RibLevel) -> Result<RibCurve> {
    if path.len() < 5 {
        return Err(Error::TooFewPoints {
            needed: 5,
            got: path.len(),
        });
    }
    let pa = principal_axes(path).expect("non-empty path");
    let [mut a, b, mut c] = pa.axes;
    if (path[path.len() - 1] - path[0]).dot(&a) < 0.0 {
        a = -a;
        c = -c;
    }
    fit_rib_curve_with_frame(
        path,
        level,
        CurveFrame {
            origin: pa.centroid,
            axes: [a, b, c],
        },
    )
}

/// `n` points at equal abscissa steps from `x_min` to `x_max`.
pub fn resample_curve(curve: &RibCurve, n: usize) -> Result<Vec<Point3>> {
    if n < 2 {
        return Err(Error::InvalidParams(alloc::format!("need at least 2 samples per rib, got {n}")));
    }
    let step = (curve.x_max - curve.x_min) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            let x = if k + 1 == n { curve.x_max } else { curve.x_min + step * k as f64 };
            curve.eval(x)
        })
        .collect())
}

/// Resampled key points per rib level, ordered 2 to 5.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSkeleton {
    ribs: [Vec<Point3>; 4],
}

impl ResampledSkeleton {
    pub fn new(ribs: [Vec<Point3>; 4]) -> Self {
        ResampledSkeleton { ribs }
    }

    pub fn ribs(&self) -> &[Vec<Point3>; 4] {
        &self.ribs
    }

    pub fn rib(&self, level: RibLevel) -> &[Point3] {
        &self.ribs[level.index()]
    }

    pub fn counts(&self) -> [usize; 4] {
        core::array::from_fn(|i| self.ribs[i].len())
    }

    /// All key points rib by rib, labeled with their level.
    pub fn to_cloud(&self) -> PointCloud {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (i, rib) in self.ribs.iter().enumerate() {
            points.extend_from_slice(rib);
            labels.extend(core::iter::repeat_n(Label::Rib(RibLevel::ALL[i]), rib.len()));
        }
        PointCloud::with_labels(points, labels).expect("one label per point")
    }

    /// Inverse of [`ResampledSkeleton::to_cloud`]; order within a level is kept.
    pub fn from_cloud(cloud: &PointCloud) -> Result<Self> {
        let mut ribs: [Vec<Point3>; 4] = Default::default();
        for (i, p) in cloud.points().iter().enumerate() {
            match cloud.label(i) {
                Label::Rib(level) => ribs[level.index()].push(*p),
                _ => return Err(Error::InvalidParams("resampled skeleton points must carry rib labels".into())),
            }
        }
        if let Some(i) = ribs.iter().position(|r| r.is_empty()) {
            return Err(Error::MissingRib(RibLevel::ALL[i].get()));
        }
        Ok(ResampledSkeleton { ribs })
    }
}

/// Fits and resamples every rib's filtered path.
pub fn resample_skeleton(graph: &SkeletonGraph, paths: &RibPathSet, counts: [usize; 4]) -> Result<(ResampledSkeleton, [RibCurve; 4])> {
    let mut curves = Vec::with_capacity(4);
    let mut ribs: [Vec<Point3>; 4] = Default::default();
    for (i, path) in paths.ribs().iter().enumerate() {
        let curve = fit_rib_curve(&path.filtered_points(graph), path.level)?;
        ribs[i] = resample_curve(&curve, counts[i])?;
        curves.push(curve);
    }
    let curves: [RibCurve; 4] = curves.try_into().expect("four ribs");
    Ok((ResampledSkeleton { ribs }, curves))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyPair {
    pub level: RibLevel,
    pub index: usize,
    pub source: Point3,
    pub target: Point3,
}

/// Index-paired key points of two resampled skeletons.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pairs: Vec<KeyPair>,
}

impl Correspondence {
    pub fn from_pairs(pairs: Vec<KeyPair>) -> Self {
        Correspondence { pairs }
    }

    pub fn pairs(&self) -> &[KeyPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_points(&self) -> Vec<Point3> {
        self.pairs.iter().map(|p| p.source).collect()
    }

    pub fn target_points(&self) -> Vec<Point3> {
        self.pairs.iter().map(|p| p.target).collect()
    }
}

pub fn build_correspondence(source: &ResampledSkeleton, target: &ResampledSkeleton) -> Result<Correspondence> {
    if source.counts() != target.counts() {
        return Err(Error::CountMismatch);
    }
    let mut pairs = Vec::new();
    for (i, level) in RibLevel::ALL.iter().enumerate() {
        for (index, (s, t)) in source.ribs[i].iter().zip(&target.ribs[i]).enumerate() {
            pairs.push(KeyPair {
                level: *level,
                index,
                source: *s,
                target: *t,
            });
        }
    }
    Ok(Correspondence { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn rib() -> RibLevel {
        RibLevel::new(3).unwrap()
    }

    fn cubic_samples(n: usize) -> Vec<Point3> {
        (0..n)
            .map(|i| {
                let x = -2.0 + 4.0 * i as f64 / (n - 1) as f64;
                Point3::new(x, x * x * x - x, 0.0)
            })
            .collect()
    }

    #[test]
    fn recovers_generating_cubic() {
        let c = fit_rib_curve_with_frame(&cubic_samples(9), rib(), CurveFrame::world()).unwrap();
        for (got, want) in c.coeff_y.iter().zip([0.0, -1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-9, "{:?}", c.coeff_y);
        }
        assert!(c.coeff_z.iter().all(|v| v.abs() < 1e-9));
        assert_eq!((c.x_min, c.x_max), (-2.0, 2.0));
    }

    #[test]
    fn recovers_offset_cubic() {
        // Abscissa range away from zero exercises the re-expansion.
        let pts: Vec<Point3> = (0..7)
            .map(|i| {
                let x = 40.0 + 5.0 * i as f64;
                Point3::new(x, 0.001 * x * x * x - 0.2 * x * x + 3.0, 0.5 * x - 7.0)
            })
            .collect();
        let c = fit_rib_curve_with_frame(&pts, rib(), CurveFrame::world()).unwrap();
        for (got, want) in c.coeff_y.iter().zip([3.0, 0.0, -0.2, 0.001]) {
            assert!((got - want).abs() < 1e-7 * want.abs().max(1.0), "{:?}", c.coeff_y);
        }
        for (got, want) in c.coeff_z.iter().zip([-7.0, 0.5, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-9, "{:?}", c.coeff_z);
        }
    }

    #[test]
    fn collinear_is_linear() {
        let pts: Vec<Point3> = (0..6).map(|i| Point3::new(i as f64, 2.0 * i as f64 + 1.0, -(i as f64))).collect();
        let c = fit_rib_curve_with_frame(&pts, rib(), CurveFrame::world()).unwrap();
        assert!(c.coeff_y[2].abs() < 1e-9 && c.coeff_y[3].abs() < 1e-9);
        assert!(c.coeff_z[2].abs() < 1e-9 && c.coeff_z[3].abs() < 1e-9);
        let pca = fit_rib_curve(&pts, rib()).unwrap();
        for p in resample_curve(&pca, 5).unwrap() {
            let t = p.x;
            assert!((p.y - (2.0 * t + 1.0)).abs() < 1e-9 && (p.z + t).abs() < 1e-9);
        }
    }

    #[test]
    fn noisy_cubic_rms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let truth = |x: f64| 0.002 * x * x * x - 0.05 * x * x + x;
        let pts: Vec<Point3> = (0..20)
            .map(|i| {
                let x = -30.0 + 3.0 * i as f64;
                Point3::new(x, truth(x) + noise.sample(&mut rng), noise.sample(&mut rng))
            })
            .collect();
        let c = fit_rib_curve_with_frame(&pts, rib(), CurveFrame::world()).unwrap();
        let samples = resample_curve(&c, 50).unwrap();
        let rms = (samples.iter().map(|p| (p.y - truth(p.x)).powi(2) + p.z * p.z).sum::<f64>() / 50.0).sqrt();
        assert!(rms < 0.3, "{rms}");
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_rib_curve(&cubic_samples(4), rib()), Err(Error::TooFewPoints { .. })));
        let tight: Vec<Point3> = (0..6).map(|i| Point3::new(0.1 * i as f64, i as f64, 0.0)).collect();
        assert!(matches!(
            fit_rib_curve_with_frame(&tight, rib(), CurveFrame::world()),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn resample_endpoints_and_generator() {
        let c = fit_rib_curve_with_frame(&cubic_samples(9), rib(), CurveFrame::world()).unwrap();
        let two = resample_curve(&c, 2).unwrap();
        assert!((two[0] - Point3::new(-2.0, -6.0, 0.0)).norm() < 1e-9);
        assert!((two[1] - Point3::new(2.0, 6.0, 0.0)).norm() < 1e-9);
        let eight = resample_curve(&c, 8).unwrap();
        for (k, p) in eight.iter().enumerate() {
            let x = -2.0 + 4.0 * k as f64 / 7.0;
            assert!((p - Point3::new(x, x * x * x - x, 0.0)).norm() < 1e-9);
        }
        assert!(resample_curve(&c, 1).is_err());
    }

    #[test]
    fn fit_resample_fixed_point() {
        let pts: Vec<Point3> = (0..12)
            .map(|i| {
                let x = -60.0 + 10.0 * i as f64;
                Point3::new(x, 0.01 * x * x - 20.0, -0.0001 * x * x * x + 0.3 * x)
            })
            .collect();
        let curve = fit_rib_curve(&pts, rib()).unwrap();
        let first = resample_curve(&curve, 10).unwrap();
        let again = resample_curve(&fit_rib_curve_with_frame(&first, rib(), curve.frame).unwrap(), 10).unwrap();
        for (a, b) in first.iter().zip(&again) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    fn skeleton(shift: f64) -> ResampledSkeleton {
        ResampledSkeleton::new(core::array::from_fn(|i| {
            (0..[6, 6, 8, 10][i]).map(|k| Point3::new(k as f64 * 10.0 + shift, -25.0 * i as f64, 0.0)).collect()
        }))
    }

    #[test]
    fn correspondence_pairs_by_level_and_index() {
        let s = skeleton(0.0);
        let c = build_correspondence(&s, &s).unwrap();
        assert_eq!(c.len(), 30);
        assert!(c.pairs().iter().all(|p| p.source == p.target));
        let t = RigidTransform::from_euler(0.1, 0.2, 0.3, Vector3::new(1.0, 2.0, 3.0));
        let moved = ResampledSkeleton::new(core::array::from_fn(|i| s.ribs()[i].iter().map(|p| t.apply(p)).collect()));
        for p in build_correspondence(&s, &moved).unwrap().pairs() {
            assert!((t.apply(&p.source) - p.target).norm() < 1e-12);
            assert_eq!(p.source, s.rib(p.level)[p.index]);
        }
        let mut short = s.ribs().clone();
        short[3].pop();
        assert_eq!(build_correspondence(&s, &ResampledSkeleton::new(short)), Err(Error::CountMismatch));
    }

    #[test]
    fn cloud_round_trip() {
        let s = skeleton(3.0);
        assert_eq!(ResampledSkeleton::from_cloud(&s.to_cloud()).unwrap(), s);
        let partial = PointCloud::with_labels(vec![Point3::origin()], vec![Label::Rib(rib())]).unwrap();
        assert_eq!(ResampledSkeleton::from_cloud(&partial), Err(Error::MissingRib(2)));
    }
}
