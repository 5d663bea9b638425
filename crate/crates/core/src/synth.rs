//! Synthetic rib-cartilage cages with known geometry and smooth deformations.
//!
//! Coordinates: x runs left to right across the chest, y points up (toward the
//! head) and z points out of the chest. Each rib centerline crosses the
//! midline at `(0, offset, 0)`; its ends curve back (`z = -sag·u²`) and droop
//! (`y = offset - lift·|u|³`), with `u = 2x / span`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{centroid, Label, Point3, PointCloud, RibLevel, RigidTransform, Vector3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RibSpec {
    /// Tip-to-tip extent along x, mm.
    pub span: f64,
    /// How far the tips curve back behind the midline point, mm.
    pub sag: f64,
    /// Height of the midline crossing, mm.
    pub offset: f64,
    /// Tip droop below the midline height, mm.
    pub lift: f64,
}

impl RibSpec {
    /// Centerline point at `u ∈ [-1, 1]` (left tip to right tip).
    pub fn centerline(&self, u: f64) -> Point3 {
        Point3::new(
            0.5 * self.span * u,
            self.offset - self.lift * u.abs().powi(3),
            -self.sag * u * u,
        )
    }

    fn tangent(&self, u: f64) -> Vector3 {
        Vector3::new(0.5 * self.span, -3.0 * self.lift * u * u.abs(), -2.0 * self.sag * u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CageSpec {
    /// Levels 2 to 5, top to bottom.
    pub ribs: [RibSpec; 4],
    pub sternum_width: f64,
    /// Rib points scatter on a tube of this radius about the centerline, mm.
    pub tube_radius: f64,
    pub points_per_rib: usize,
    pub sternum_points: usize,
    /// Isotropic Gaussian noise added to every point, mm.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for CageSpec {
    fn default() -> Self {
        let rib = |span, sag, offset| RibSpec {
            span,
            sag,
            offset,
            lift: 6.0,
        };
        // Middle ribs widest, so every rib tip stays on the key points' hull.
        CageSpec {
            ribs: [
                rib(115.0, 12.0, 0.0),
                rib(130.0, 18.0, -26.7),
                rib(130.0, 24.0, -53.4),
                rib(115.0, 30.0, -80.1),
            ],
            sternum_width: 30.0,
            tube_radius: 2.0,
            points_per_rib: 300,
            sternum_points: 200,
            noise_sigma: 0.5,
            seed: 0,
        }
    }
}

impl CageSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        for (i, r) in self.ribs.iter().enumerate() {
            let level = RibLevel::ALL[i];
            if !(r.span > 0.0 && r.span.is_finite()) {
                return bad(alloc::format!("rib {level}: span must be positive"));
            }
            if !(r.sag.is_finite() && r.offset.is_finite() && r.lift.is_finite()) {
                return bad(alloc::format!("rib {level}: parameters must be finite"));
            }
        }
        for w in self.ribs.windows(2) {
            if !(w[1].offset < w[0].offset) {
                return bad("rib offsets must strictly decrease from level 2 to level 5".into());
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be non-negative".into());
        }
        if !(self.tube_radius >= 0.0 && self.tube_radius.is_finite()) {
            return bad("tube radius must be non-negative".into());
        }
        if !(self.sternum_width >= 0.0 && self.sternum_width.is_finite()) {
            return bad("sternum width must be non-negative".into());
        }
        if self.points_per_rib < 2 {
            return bad("need at least 2 points per rib".into());
        }
        Ok(())
    }
}

/// Ground-truth rib centerline, sampled densely from the left tip to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    pub level: RibLevel,
    pub samples: Vec<Point3>,
}

impl Centerline {
    pub const SAMPLES: usize = 201;

    pub fn left(&self) -> Point3 {
        self.samples[0]
    }

    pub fn right(&self) -> Point3 {
        self.samples[self.samples.len() - 1]
    }
}

/// Unit vectors spanning the plane normal to `t`.
fn normal_plane(t: &Vector3) -> (Vector3, Vector3) {
    let t = t.normalize();
    let seed = if t.y.abs() < 0.9 { Vector3::y() } else { Vector3::z() };
    let a = (seed - t * seed.dot(&t)).normalize();
    (a, t.cross(&a))
}

/// Labeled cage cloud (ribs first, level by level, then the sternum) and the
/// four rib centerlines.
pub fn generate_cage(spec: &CageSpec) -> Result<(PointCloud, Vec<Centerline>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|_| Error::InvalidSpec("noise sigma".into()))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let jitter = |p: Point3, rng: &mut ChaCha8Rng| {
        if spec.noise_sigma > 0.0 {
            p + Vector3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
        } else {
            p
        }
    };

    for (i, rib) in spec.ribs.iter().enumerate() {
        for _ in 0..spec.points_per_rib {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let (a, b) = normal_plane(&rib.tangent(u));
            let p = rib.centerline(u) + (a * phi.cos() + b * phi.sin()) * spec.tube_radius;
            points.push(jitter(p, &mut rng));
            labels.push(Label::Rib(RibLevel::ALL[i]));
        }
    }
    let top = spec.ribs[0].offset + 10.0;
    let bottom = spec.ribs[3].offset - 10.0;
    for _ in 0..spec.sternum_points {
        let x = if spec.sternum_width > 0.0 {
            rng.gen_range(-0.5..=0.5) * spec.sternum_width
        } else {
            0.0
        };
        let y = rng.gen_range(bottom..=top);
        points.push(jitter(Point3::new(x, y, 0.0), &mut rng));
        labels.push(Label::Sternum);
    }

    let centerlines = spec
        .ribs
        .iter()
        .enumerate()
        .map(|(i, rib)| Centerline {
            level: RibLevel::ALL[i],
            samples: (0..Centerline::SAMPLES)
                .map(|k| rib.centerline(-1.0 + 2.0 * k as f64 / (Centerline::SAMPLES - 1) as f64))
                .collect(),
        })
        .collect();
    Ok((PointCloud::with_labels(points, labels)?, centerlines))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationSpec {
    /// Per-axis scale about the cage centre.
    pub scale: [f64; 3],
    /// Bending amplitude, mm.
    pub amplitude: f64,
    /// Bending wavelength along x, mm.
    pub wavelength: f64,
    /// Bending phase, radians.
    pub phase: f64,
    /// Rotation about the cage centre, then translation.
    pub rigid: RigidTransform,
}

impl Default for DeformationSpec {
    fn default() -> Self {
        DeformationSpec {
            scale: [1.0; 3],
            amplitude: 0.0,
            wavelength: 200.0,
            phase: 0.0,
            rigid: RigidTransform::identity(),
        }
    }
}

/// Parameter ranges for [`DeformationSpec::random`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationRanges {
    pub scale: (f64, f64),
    pub amplitude: (f64, f64),
    pub wavelength: (f64, f64),
    /// Largest rotation about each axis, degrees.
    pub max_rotation_deg: f64,
    /// Largest translation along each axis, mm.
    pub max_translation: f64,
}

impl Default for DeformationRanges {
    fn default() -> Self {
        DeformationRanges {
            scale: (0.9, 1.1),
            amplitude: (5.0, 10.0),
            wavelength: (150.0, 250.0),
            max_rotation_deg: 5.0,
            max_translation: 5.0,
        }
    }
}

impl DeformationSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.scale.iter().all(|s| (0.8..=1.25).contains(s)) {
            return Err(Error::InvalidSpec("scale factors must lie in [0.8, 1.25]".into()));
        }
        if !(0.0..=15.0).contains(&self.amplitude) {
            return Err(Error::InvalidSpec("bending amplitude must lie in [0, 15] mm".into()));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidSpec("bending wavelength must be positive".into()));
        }
        if !self.phase.is_finite() || !self.rigid.is_proper(1e-9) || !self.rigid.translation.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidSpec("phase and rigid offset must be finite and proper".into()));
        }
        Ok(())
    }

    /// Uniform draw of every parameter from `ranges`.
    pub fn random(seed: u64, ranges: &DeformationRanges) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let scale = [draw(ranges.scale), draw(ranges.scale), draw(ranges.scale)];
        let amplitude = draw(ranges.amplitude);
        let wavelength = draw(ranges.wavelength);
        let phase = draw((0.0, 2.0 * PI));
        let r = ranges.max_rotation_deg.to_radians();
        let angles = [draw((-r, r)), draw((-r, r)), draw((-r, r))];
        let m = ranges.max_translation;
        let t = Vector3::new(draw((-m, m)), draw((-m, m)), draw((-m, m)));
        DeformationSpec {
            scale,
            amplitude,
            wavelength,
            phase,
            rigid: RigidTransform::from_euler(angles[0], angles[1], angles[2], t),
        }
    }
}

/// Exact point mapping: scale about `centre`, bend, then rotate about
/// `centre` and translate. The bend leaves x unchanged, so it inverts exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    pub spec: DeformationSpec,
    pub centre: Point3,
}

impl Deformation {
    fn bend(&self, q: &Vector3) -> Vector3 {
        let theta = 2.0 * PI * q.x / self.spec.wavelength + self.spec.phase;
        let a = self.spec.amplitude;
        Vector3::new(0.0, 0.5 * a * theta.cos(), a * theta.sin())
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        let s = self.spec.scale;
        let d = p - self.centre;
        let mut q = Vector3::new(s[0] * d.x, s[1] * d.y, s[2] * d.z);
        q += self.bend(&q);
        self.centre + self.spec.rigid.rotation * q + self.spec.rigid.translation
    }

    pub fn inverse(&self, p: &Point3) -> Point3 {
        let s = self.spec.scale;
        let mut q = self.spec.rigid.rotation.transpose() * (p - self.centre - self.spec.rigid.translation);
        q -= self.bend(&q);
        self.centre + Vector3::new(q.x / s[0], q.y / s[1], q.z / s[2])
    }

    pub fn displacement(&self, p: &Point3) -> Vector3 {
        self.apply(p) - p
    }
}

/// Deforms a cage and its centerlines. The centre of scaling and rotation is
/// the centroid of the centerline samples, or of the cloud when there are none.
pub fn deform(cloud: &PointCloud, centerlines: &[Centerline], spec: &DeformationSpec) -> Result<(PointCloud, Vec<Centerline>, Deformation)> {
    spec.validate()?;
    let samples: Vec<Point3> = centerlines.iter().flat_map(|c| c.samples.iter().copied()).collect();
    let centre = centroid(&samples).or_else(|| cloud.centroid()).ok_or(Error::EmptyCloud)?;
    let field = Deformation { spec: *spec, centre };
    let moved = cloud.map_points(|p| field.apply(p));
    let lines = centerlines
        .iter()
        .map(|c| Centerline {
            level: c.level,
            samples: c.samples.iter().map(|p| field.apply(p)).collect(),
        })
        .collect();
    Ok((moved, lines, field))
}
