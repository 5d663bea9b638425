//! Gift-wrapping convex hull in 3D.
//!
//! Faces are wrapped one at a time by pivoting a supporting plane about a known
//! hull edge. Points coplanar with a face are gathered and wrapped in 2D (Jarvis
//! march), so faces may be arbitrary convex polygons and only strict corners are
//! reported as vertices.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::geometry::{principal_axes, Point3, PointCloud, Vector3};
use crate::{Error, Result};

const ANGLE_EPS: f64 = 1e-12;

struct Face {
    vertices: Vec<usize>,
    normal: Vector3,
    coplanar: Vec<usize>,
}

/// Indices of the strict vertices of the convex hull, ascending.
///
/// Coplanar input falls back to the 2D hull in the best-fit plane; collinear
/// input is rejected.
pub fn convex_hull_vertices(cloud: &PointCloud) -> Result<Vec<usize>> {
    let pts = cloud.points();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    let pa = principal_axes(pts).expect("non-empty");
    let scale = bbox_diagonal(pts);
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let sd = pa.std_devs();
    if sd[1] <= tol {
        return Err(Error::DegenerateInput("all points are collinear"));
    }
    let all: Vec<usize> = (0..pts.len()).collect();
    if sd[2] <= tol {
        let mut v = hull_2d(pts, &all, &pa.axes[0], &pa.axes[1], tol);
        v.sort_unstable();
        return Ok(v);
    }
    let mut v = wrap_3d(pts, tol);
    v.sort_unstable();
    Ok(v)
}

fn bbox_diagonal(pts: &[Point3]) -> f64 {
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in pts {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (hi - lo).norm()
}

/// Jarvis march over `subset`, projected on the `(u, v)` plane. Returns the
/// strict corners counter-clockwise about `u × v`, starting from the
/// lexicographically smallest projection.
fn hull_2d(pts: &[Point3], subset: &[usize], u: &Vector3, v: &Vector3, tol: f64) -> Vec<usize> {
    let proj = |i: usize| (pts[i].coords.dot(u), pts[i].coords.dot(v));
    let start = *subset
        .iter()
        .min_by(|&&a, &&b| {
            let (pa, pb) = (proj(a), proj(b));
            pa.0.partial_cmp(&pb.0)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(pa.1.partial_cmp(&pb.1).unwrap_or(core::cmp::Ordering::Equal))
                .then(a.cmp(&b))
        })
        .expect("non-empty subset");

    let mut hull = Vec::new();
    let mut current = start;
    for _ in 0..=subset.len() {
        hull.push(current);
        let c = proj(current);
        let mut cand: Option<(usize, (f64, f64))> = None;
        for &q in subset {
            let pq = proj(q);
            let d = (pq.0 - c.0, pq.1 - c.1);
            let dn = (d.0 * d.0 + d.1 * d.1).sqrt();
            if dn <= tol {
                continue;
            }
            match cand {
                None => cand = Some((q, d)),
                Some((_, best)) => {
                    let bn = (best.0 * best.0 + best.1 * best.1).sqrt();
                    let cross = best.0 * d.1 - best.1 * d.0;
                    // q lies clockwise of the candidate: wrap further.
                    if cross < -ANGLE_EPS * bn * dn || (cross.abs() <= ANGLE_EPS * bn * dn && dn > bn) {
                        cand = Some((q, d));
                    }
                }
            }
        }
        match cand {
            Some((next, _)) if next != start => current = next,
            _ => break,
        }
    }
    hull
}

fn lexicographic_min(pts: &[Point3]) -> usize {
    (0..pts.len())
        .min_by(|&a, &b| {
            let (p, q) = (&pts[a], &pts[b]);
            p.x.partial_cmp(&q.x)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(p.y.partial_cmp(&q.y).unwrap_or(core::cmp::Ordering::Equal))
                .then(p.z.partial_cmp(&q.z).unwrap_or(core::cmp::Ordering::Equal))
                .then(a.cmp(&b))
        })
        .expect("non-empty")
}

/// Rotates a half-plane bounded by the line through `a` along unit `axis`,
/// starting in direction `inward_t` (φ = 0) and turning toward `inward_m`
/// (φ = π/2), and stops at the last point it sweeps. Returns the outward
/// normal of the supporting plane found there.
fn pivot(pts: &[Point3], a: &Point3, axis: &Vector3, inward_t: &Vector3, inward_m: &Vector3, skip: &[usize], tol: f64) -> Option<Vector3> {
    let mut best: Option<(f64, f64)> = None;
    for (i, p) in pts.iter().enumerate() {
        if skip.binary_search(&i).is_ok() {
            continue;
        }
        let mut w = p - a;
        w -= axis * w.dot(axis);
        let wn = w.norm();
        if wn <= tol {
            continue;
        }
        let phi = w.dot(inward_m).atan2(w.dot(inward_t));
        match best {
            Some((bphi, bn)) if phi < bphi - ANGLE_EPS || (phi <= bphi + ANGLE_EPS && wn <= bn) => {}
            _ => best = Some((phi, wn)),
        }
    }
    best.map(|(phi, _)| inward_t * -phi.sin() + inward_m * phi.cos())
}

fn make_face(pts: &[Point3], anchor: &Point3, normal: Vector3, tol: f64) -> Face {
    let normal = normal.normalize();
    let coplanar: Vec<usize> = (0..pts.len())
        .filter(|&i| (pts[i] - anchor).dot(&normal).abs() <= tol)
        .collect();
    let seed = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (seed - normal * seed.dot(&normal)).normalize();
    let v = normal.cross(&u);
    let vertices = hull_2d(pts, &coplanar, &u, &v, tol);
    Face {
        vertices,
        normal,
        coplanar,
    }
}

fn first_face(pts: &[Point3], tol: f64) -> Option<Face> {
    let p0 = lexicographic_min(pts);
    let a = pts[p0];
    // Plane x = x0 supports the cloud at p0; pivot it about the y-parallel line through p0.
    let n1 = pivot(pts, &a, &Vector3::y(), &Vector3::z(), &Vector3::x(), &[], tol)?;
    let face = make_face(pts, &a, n1, tol);
    if face.vertices.len() >= 3 {
        return Some(face);
    }
    // The supporting plane only touches an edge: pivot once more about it.
    let q = *face.vertices.iter().find(|&&i| i != p0)?;
    let axis = (pts[q] - a).normalize();
    let t = n1.cross(&axis);
    let n2 = pivot(pts, &a, &axis, &t, &-n1, &face.coplanar, tol)?;
    let face = make_face(pts, &a, n2, tol);
    (face.vertices.len() >= 3).then_some(face)
}

fn face_key(face: &Face) -> Vec<usize> {
    let mut k = face.vertices.clone();
    k.sort_unstable();
    k
}

#[derive(Default)]
struct Wrap {
    faces: Vec<Face>,
    keys: BTreeSet<Vec<usize>>,
    /// Directed edges already bordered by a found face.
    owned: BTreeSet<(usize, usize)>,
    queue: VecDeque<(usize, usize, usize)>,
}

impl Wrap {
    fn add(&mut self, face: Face) {
        if !self.keys.insert(face_key(&face)) {
            return;
        }
        let id = self.faces.len();
        let n = face.vertices.len();
        for k in 0..n {
            let edge = (face.vertices[k], face.vertices[(k + 1) % n]);
            self.owned.insert(edge);
            self.queue.push_back((edge.0, edge.1, id));
        }
        self.faces.push(face);
    }
}

fn wrap_3d(pts: &[Point3], tol: f64) -> Vec<usize> {
    let Some(first) = first_face(pts, tol) else {
        return Vec::new();
    };
    let mut w = Wrap::default();
    w.add(first);

    // Every hull edge is wrapped from one side; a face count bound keeps
    // numerically inconsistent input from looping.
    let limit = 4 * pts.len() + 8;
    while let Some((u, v, id)) = w.queue.pop_front() {
        if w.faces.len() > limit {
            break;
        }
        if w.owned.contains(&(v, u)) {
            continue;
        }
        let face = &w.faces[id];
        let axis = (pts[v] - pts[u]).normalize();
        let t = face.normal.cross(&axis);
        let m = -face.normal;
        let Some(normal) = pivot(pts, &pts[u], &axis, &t, &m, &face.coplanar, tol) else {
            continue;
        };
        let next = make_face(pts, &pts[u], normal, tol);
        if next.vertices.len() >= 3 {
            w.add(next);
        }
        w.owned.insert((v, u));
    }

    let faces = w.faces;
    let set: BTreeSet<usize> = faces.iter().flat_map(|f| f.vertices.iter().copied()).collect();
    set.into_iter().collect()
}
