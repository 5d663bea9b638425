//! Text forms of pipeline products: skeleton parts, correspondences,
//! waypoints, transforms, deformations and reports.

use std::fmt::Write as _;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use skelreg_core::pipeline::Skeleton;
use skelreg_core::register::{Gap, RegistrationReport, Waypoint};
use skelreg_core::resample::{Correspondence, KeyPair, ResampledSkeleton};
use skelreg_core::skeleton::{Side, TemplateEndpoints};
use skelreg_core::synth::{Centerline, Deformation, DeformationSpec};
use skelreg_core::{Point3, PointCloud, RibLevel, RigidTransform, Vector3};

use crate::io::IoError;

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Data rows of a CSV with the given header, split into fields.
fn rows<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(parse_err(1, format!("expected header `{header}`"))),
    }
    let width = header.split(',').count();
    let out: Vec<_> = lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| (n, l.split(',').map(str::trim).collect::<Vec<_>>()))
        .collect();
    if let Some((n, f)) = out.iter().find(|(_, f)| f.len() != width) {
        return Err(parse_err(*n, format!("expected {width} fields, found {}", f.len())));
    }
    if out.is_empty() {
        return Err(IoError::EmptyFile);
    }
    Ok(out)
}

fn num(token: &str, line: usize) -> Result<f64, IoError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("`{token}` is not a finite number")))
}

fn point(fields: &[&str], line: usize) -> Result<Point3, IoError> {
    Ok(Point3::new(num(fields[0], line)?, num(fields[1], line)?, num(fields[2], line)?))
}

fn push_point(out: &mut String, p: &Point3) {
    let _ = write!(out, "{:.6},{:.6},{:.6}", p.x, p.y, p.z);
}

pub fn side_str(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn parse_side(s: &str, line: usize) -> Result<Side, IoError> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        _ => Err(parse_err(line, format!("`{s}` is not a side"))),
    }
}

fn parse_level(s: &str, line: usize) -> Result<RibLevel, IoError> {
    s.parse::<u8>()
        .ok()
        .and_then(RibLevel::new)
        .ok_or_else(|| parse_err(line, format!("`{s}` is not a rib level (2 to 5)")))
}

pub fn edges_csv(skel: &Skeleton) -> String {
    let mut out = String::from("a,b,weight\n");
    for e in skel.graph.edges() {
        let _ = writeln!(out, "{},{},{:.6}", e.a, e.b, e.weight);
    }
    out
}

pub fn hull_csv(skel: &Skeleton) -> String {
    let mut out = String::from("vertex,x,y,z\n");
    for &v in &skel.hull {
        let _ = write!(out, "{v},");
        push_point(&mut out, &skel.key_points.points()[v]);
        out.push('\n');
    }
    out
}

/// Raw tree paths and their filtered subsequences, one vertex per row.
pub fn paths_csv(skel: &Skeleton) -> String {
    let mut out = String::from("level,kind,order,vertex,x,y,z\n");
    let pts = skel.graph.points();
    for path in skel.paths.ribs() {
        for (kind, verts) in [("raw", &path.raw), ("filtered", &path.filtered)] {
            for (k, &v) in verts.iter().enumerate() {
                let _ = write!(out, "{},{kind},{k},{v},", path.level);
                push_point(&mut out, &pts[v]);
                out.push('\n');
            }
        }
    }
    out
}

pub fn resampled_csv(skel: &ResampledSkeleton) -> String {
    let mut out = String::from("level,index,x,y,z\n");
    for level in RibLevel::ALL {
        for (i, p) in skel.rib(level).iter().enumerate() {
            let _ = write!(out, "{level},{i},");
            push_point(&mut out, p);
            out.push('\n');
        }
    }
    out
}

pub fn centerlines_csv(lines: &[Centerline]) -> String {
    let mut out = String::from("level,index,x,y,z\n");
    for c in lines {
        for (i, p) in c.samples.iter().enumerate() {
            let _ = write!(out, "{},{i},", c.level);
            push_point(&mut out, p);
            out.push('\n');
        }
    }
    out
}

const CORRESPONDENCE_HEADER: &str = "level,index,source_x,source_y,source_z,target_x,target_y,target_z";

pub fn correspondence_csv(corr: &Correspondence) -> String {
    let mut out = format!("{CORRESPONDENCE_HEADER}\n");
    for p in corr.pairs() {
        let _ = write!(out, "{},{},", p.level, p.index);
        push_point(&mut out, &p.source);
        out.push(',');
        push_point(&mut out, &p.target);
        out.push('\n');
    }
    out
}

pub fn parse_correspondence(text: &str) -> Result<Correspondence, IoError> {
    let pairs = rows(text, CORRESPONDENCE_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            Ok(KeyPair {
                level: parse_level(f[0], n)?,
                index: f[1].parse().map_err(|_| parse_err(n, format!("`{}` is not an index", f[1])))?,
                source: point(&f[2..5], n)?,
                target: point(&f[5..8], n)?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Correspondence::from_pairs(pairs))
}

const WAYPOINT_HEADER: &str = "gap,side,x,y,z";

pub fn waypoints_csv(wp: &[Waypoint]) -> String {
    let mut out = format!("{WAYPOINT_HEADER}\n");
    for w in wp {
        let _ = write!(out, "{},{},", w.gap.as_str(), side_str(w.side));
        push_point(&mut out, &w.position);
        out.push('\n');
    }
    out
}

pub fn parse_waypoints(text: &str) -> Result<Vec<Waypoint>, IoError> {
    rows(text, WAYPOINT_HEADER)?
        .into_iter()
        .map(|(n, f)| {
            Ok(Waypoint {
                gap: Gap::parse(f[0]).ok_or_else(|| parse_err(n, format!("`{}` is not a gap", f[0])))?,
                side: parse_side(f[1], n)?,
                position: point(&f[2..5], n)?,
            })
        })
        .collect()
}

/// Per-waypoint distance between transferred and true positions.
pub fn waypoint_errors_csv(transferred: &[Waypoint], truth: &[Point3]) -> String {
    let mut out = String::from("index,gap,side,error\n");
    for (i, (w, t)) in transferred.iter().zip(truth).enumerate() {
        let _ = writeln!(out, "{i},{},{},{:.6}", w.gap.as_str(), side_str(w.side), (w.position - t).norm());
    }
    out
}

/// Each source point and its true deformed position.
pub fn ground_truth_csv(source: &PointCloud, field: &Deformation) -> String {
    let mut out = String::from("index,x,y,z,x_deformed,y_deformed,z_deformed\n");
    for (i, p) in source.points().iter().enumerate() {
        let _ = write!(out, "{i},");
        push_point(&mut out, p);
        out.push(',');
        push_point(&mut out, &field.apply(p));
        out.push('\n');
    }
    out
}

/// Long-format distances, one `(method, distance)` row per moved point.
pub fn plot_csv(reports: &[&RegistrationReport]) -> String {
    let mut out = String::from("method,distance\n");
    for r in reports {
        for d in &r.distances {
            let _ = writeln!(out, "{},{d:.6}", r.method);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub method: String,
    pub points: usize,
    pub ed_mean: f64,
    pub ed_std: f64,
    pub hausdorff: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_seconds: Option<f64>,
}

impl From<&RegistrationReport> for ReportRecord {
    fn from(r: &RegistrationReport) -> Self {
        ReportRecord {
            method: r.method.to_string(),
            points: r.distances.len(),
            ed_mean: r.ed_mean,
            ed_std: r.ed_std,
            hausdorff: r.hausdorff,
            runtime_seconds: r.runtime_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    /// Row-major.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformRecord {
    fn from(t: &RigidTransform) -> Self {
        let r = &t.rotation;
        TransformRecord {
            rotation: core::array::from_fn(|i| core::array::from_fn(|j| r[(i, j)])),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl TransformRecord {
    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform::new(
            Matrix3::from_fn(|i, j| self.rotation[i][j]),
            Vector3::from(self.translation),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationRecord {
    pub scale: [f64; 3],
    pub amplitude: f64,
    pub wavelength: f64,
    pub phase: f64,
    pub rigid: TransformRecord,
    pub centre: [f64; 3],
}

impl From<&Deformation> for DeformationRecord {
    fn from(d: &Deformation) -> Self {
        DeformationRecord {
            scale: d.spec.scale,
            amplitude: d.spec.amplitude,
            wavelength: d.spec.wavelength,
            phase: d.spec.phase,
            rigid: TransformRecord::from(&d.spec.rigid),
            centre: [d.centre.x, d.centre.y, d.centre.z],
        }
    }
}

impl DeformationRecord {
    pub fn to_deformation(&self) -> Deformation {
        Deformation {
            spec: DeformationSpec {
                scale: self.scale,
                amplitude: self.amplitude,
                wavelength: self.wavelength,
                phase: self.phase,
                rigid: self.rigid.to_transform(),
            },
            centre: Point3::from(self.centre),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibEndsRecord {
    pub level: u8,
    pub left: [f64; 3],
    pub right: [f64; 3],
}

/// Labeled endpoint positions, usable as the template for another skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointsRecord {
    pub ribs: Vec<RibEndsRecord>,
    /// Other hull vertices, used only to align the template.
    #[serde(default)]
    pub context: Vec<[f64; 3]>,
}

impl From<&TemplateEndpoints> for EndpointsRecord {
    fn from(t: &TemplateEndpoints) -> Self {
        let arr = |p: &Point3| [p.x, p.y, p.z];
        EndpointsRecord {
            ribs: RibLevel::ALL
                .iter()
                .zip(&t.ribs)
                .map(|(level, (l, r))| RibEndsRecord {
                    level: level.get(),
                    left: arr(l),
                    right: arr(r),
                })
                .collect(),
            context: t.context.iter().map(arr).collect(),
        }
    }
}

impl EndpointsRecord {
    pub fn to_template(&self) -> Option<TemplateEndpoints> {
        if self.ribs.len() != 4 || self.ribs.iter().zip(RibLevel::ALL).any(|(r, l)| r.level != l.get()) {
            return None;
        }
        let ribs = core::array::from_fn(|i| (Point3::from(self.ribs[i].left), Point3::from(self.ribs[i].right)));
        Some(TemplateEndpoints::new(ribs).with_context(self.context.iter().map(|&c| Point3::from(c)).collect()))
    }
}
