use proptest::prelude::*;
use skelreg_core::geometry::{apply_transform, hausdorff_distance, kabsch_fit, mean_nn_distance, nearest_neighbors};
use skelreg_core::register::{evaluate, warp_nonrigid, Method};
use skelreg_core::resample::{build_correspondence, Correspondence, KeyPair, ResampledSkeleton};
use skelreg_core::skeleton::{
    build_mst, continuity_filter, continuity_filter_indices, convex_hull_vertices, pair_endpoints, turn_angle_deg,
    TemplateEndpoints,
};
use skelreg_core::som::som_step;
use skelreg_core::synth::{deform, generate_cage, CageSpec, DeformationRanges, DeformationSpec};
use skelreg_core::{Point3, PointCloud, RibLevel, RigidTransform, Vector3};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn point(range: f64) -> impl Strategy<Value = Point3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn cloud(range: f64, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(point(range), n)
}

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (point(1.0), -3.1f64..3.1, point(50.0)).prop_filter_map("axis too short", |(axis, angle, t)| {
        let axis = axis.coords;
        (axis.norm() > 0.1).then(|| RigidTransform::from_axis_angle(&axis, angle, t.coords))
    })
}

fn kruskal_weights(p: &[Point3]) -> Vec<f64> {
    let n = p.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push(((p[i] - p[j]).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut out = Vec::new();
    for (w, i, j) in edges {
        let (a, b) = (root(&mut parent, i), root(&mut parent, j));
        if a != b {
            parent[a] = b;
            out.push(w);
        }
    }
    out
}

fn sorted_weights(p: &[Point3]) -> Vec<f64> {
    let g = build_mst(&PointCloud::new(p.to_vec())).unwrap();
    let mut w: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
    w.sort_by(f64::total_cmp);
    w
}

/// Vertex `i` is on the hull iff some plane through it and two other points
/// has every remaining point strictly on one side.
fn brute_force_hull(p: &[Point3]) -> Vec<usize> {
    let n = p.len();
    (0..n)
        .filter(|&i| {
            (0..n).any(|j| {
                j != i
                    && (j + 1..n).any(|k| {
                        if k == i {
                            return false;
                        }
                        let normal = (p[j] - p[i]).cross(&(p[k] - p[i]));
                        if normal.norm() < 1e-12 {
                            return false;
                        }
                        let side: Vec<f64> = (0..n)
                            .filter(|&m| m != i && m != j && m != k)
                            .map(|m| normal.dot(&(p[m] - p[i])))
                            .collect();
                        side.iter().all(|&s| s > 0.0) || side.iter().all(|&s| s < 0.0)
                    })
            })
        })
        .collect()
}

fn flat_keys(ribs: &[Vec<Point3>; 4]) -> Vec<Point3> {
    ribs.iter().flatten().copied().collect()
}

/// Four gently curved ribs, one above the other, as resampled key points.
fn key_skeleton(bend: f64) -> ResampledSkeleton {
    let counts = [6, 6, 8, 10];
    ResampledSkeleton::new(core::array::from_fn(|i| {
        (0..counts[i])
            .map(|k| {
                let u = -1.0 + 2.0 * k as f64 / (counts[i] - 1) as f64;
                Point3::new(60.0 * u, -25.0 * i as f64 + 4.0 * u * u * u, -(12.0 + bend * i as f64) * u * u)
            })
            .collect()
    }))
}

fn template_ends() -> [(Point3, Point3); 4] {
    // Asymmetric offsets so no rigid motion maps the set onto a relabeling of itself.
    [
        (Point3::new(-57.0, -3.0, -12.0), Point3::new(58.0, 2.0, -11.0)),
        (Point3::new(-66.0, -31.0, -19.0), Point3::new(64.0, -29.0, -17.0)),
        (Point3::new(-64.0, -55.0, -25.0), Point3::new(66.0, -52.0, -23.0)),
        (Point3::new(-56.0, -84.0, -31.0), Point3::new(59.0, -80.0, -29.0)),
    ]
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn mst_weight_equals_kruskal(p in cloud(100.0, 2..=60)) {
        let prim = sorted_weights(&p);
        let kruskal = kruskal_weights(&p);
        prop_assert_eq!(&prim, &kruskal);
        prop_assert_eq!(prim.iter().sum::<f64>(), kruskal.iter().sum::<f64>());
    }

    #[test]
    fn mst_weight_is_permutation_invariant(p in cloud(100.0, 2..=40), shuffle in any::<prop::sample::Index>()) {
        let mut q = p.clone();
        let k = shuffle.index(q.len());
        q.rotate_left(k);
        q.reverse();
        prop_assert_eq!(sorted_weights(&p), sorted_weights(&q));
    }

    #[test]
    fn hull_matches_plane_oracle(p in cloud(50.0, 4..=40)) {
        let mut got = convex_hull_vertices(&PointCloud::new(p.clone())).unwrap();
        got.sort_unstable();
        prop_assert_eq!(got, brute_force_hull(&p));
    }

    #[test]
    fn continuity_filter_invariants(p in cloud(20.0, 2..=25), t in 5.0f64..175.0) {
        let idx = continuity_filter_indices(&p, t);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(&idx[..2.min(p.len())], &[0usize, 1][..2.min(p.len())]);
        let out = continuity_filter(&p, t);
        for w in out.windows(3) {
            if let Some(a) = turn_angle_deg(&w[0], &w[1], &w[2]) {
                prop_assert!(a <= t, "turn {a} > {t}");
            }
        }
        prop_assert_eq!(continuity_filter(&out, t), out);
    }

    #[test]
    fn pairing_is_rigidly_equivariant(
        t in rigid(),
        noise in prop::collection::vec(point(1.0), 8),
        spurious in cloud(8.0, 0..=4),
        rot in 0usize..12,
    ) {
        let template = TemplateEndpoints::new(template_ends());
        let ends = template.points();
        let mut cands: Vec<Point3> = ends.iter().zip(&noise).map(|(e, n)| e + n.coords).collect();
        // Spurious vertices near the sternum, far from every endpoint.
        cands.extend(spurious.iter().map(|s| Point3::new(s.x, s.y - 40.0, s.z + 10.0)));
        let r = rot % cands.len();
        cands.rotate_left(r);
        let moved: Vec<Point3> = cands.iter().map(|c| t.apply(c)).collect();
        let a = pair_endpoints(&cands, &template).unwrap();
        let b = pair_endpoints(&moved, &template).unwrap();
        prop_assert_eq!(a, b);
        for (k, rib) in a.ribs().iter().enumerate() {
            prop_assert_eq!(rib.left, (2 * k + cands.len() - r) % cands.len());
            prop_assert_eq!(rib.right, (2 * k + 1 + cands.len() - r) % cands.len());
        }
    }

    #[test]
    fn kabsch_recovers_rigid_motion(t in rigid(), p in cloud(80.0, 4..=30)) {
        let spread = (0..p.len()).map(|i| (p[i] - p[0]).norm()).fold(0.0, f64::max);
        let area = (1..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j)))
            .map(|(i, j)| (p[i] - p[0]).cross(&(p[j] - p[0])).norm())
            .fold(0.0, f64::max);
        prop_assume!(spread > 1.0 && area > 10.0);
        let q: Vec<Point3> = p.iter().map(|x| t.apply(x)).collect();
        let fit = kabsch_fit(&p, &q).unwrap();
        prop_assert!(fit.rotation_error(&t) < 1e-8);
        prop_assert!(fit.translation_error(&t) < 1e-8);
    }

    #[test]
    fn rigid_motion_preserves_distances(t in rigid(), p in cloud(100.0, 2..=20)) {
        let q = apply_transform(&t, &PointCloud::new(p.clone()));
        for i in 0..p.len() {
            for j in 0..p.len() {
                let (a, b) = ((p[i] - p[j]).norm(), (q.points()[i] - q.points()[j]).norm());
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn metrics_match_double_loop(a in cloud(50.0, 1..=40), b in cloud(50.0, 1..=40)) {
        let directed = |x: &[Point3], y: &[Point3]| -> Vec<f64> {
            x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).collect()
        };
        let ab = directed(&a, &b);
        let ba = directed(&b, &a);
        let mean = ab.iter().sum::<f64>() / ab.len() as f64;
        let hd = ab.iter().chain(&ba).copied().fold(0.0, f64::max);
        let stats = mean_nn_distance(&a, &b).unwrap();
        prop_assert!((stats.mean - mean).abs() <= 1e-12);
        let h = hausdorff_distance(&a, &b).unwrap();
        prop_assert!((h - hd).abs() <= 1e-12);
        prop_assert_eq!(h, hausdorff_distance(&b, &a).unwrap());
        prop_assert!(h >= stats.mean && h >= mean_nn_distance(&b, &a).unwrap().mean);
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let report = evaluate(&a, &b, Method::Graph).unwrap();
        prop_assert!(report.ed_mean <= report.hausdorff && report.ed_std >= 0.0);
    }

    #[test]
    fn knn_is_prefix_of_sorted_oracle(q in point(50.0), p in cloud(50.0, 1..=60), k in 1usize..10) {
        let k = k.min(p.len());
        let got = nearest_neighbors(&q, &p, k).unwrap();
        let mut all: Vec<(usize, f64)> = p.iter().enumerate().map(|(i, x)| (i, (x - q).norm())).collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        prop_assert_eq!(got, all[..k].to_vec());
    }

    #[test]
    fn som_step_moves_along_segment(w in point(50.0), p in point(50.0), theta in 0.0f64..=1.0, lr in 0.0f64..=1.0) {
        let next = som_step(&w, &p, theta, lr);
        prop_assert!((next - w).norm() <= (p - w).norm() + 1e-12);
        let along = (next - w).cross(&(p - w)).norm();
        prop_assert!(along <= 1e-9 * (1.0 + (p - w).norm_squared()));
        prop_assert_eq!(som_step(&w, &p, 1.0, 1.0), p);
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn warp_identity_and_rigid_commutation(t in rigid(), bend in 0.0f64..6.0, n_r in 3usize..=30) {
        let src = key_skeleton(0.0);
        let tgt = key_skeleton(bend);
        let cloud = PointCloud::new((0..200).map(|i| {
            let u = i as f64 / 199.0;
            Point3::new(-60.0 + 120.0 * u, -75.0 * (1.0 - u) + 3.0 * (7.0 * u).sin(), -10.0 * u)
        }).collect());

        let same = build_correspondence(&src, &src).unwrap();
        let still = warp_nonrigid(&cloud, &same, n_r).unwrap();
        for (a, b) in cloud.points().iter().zip(still.points()) {
            prop_assert!((a - b).norm() < 1e-9);
        }

        let corr = build_correspondence(&src, &tgt).unwrap();
        let moved_corr = Correspondence::from_pairs(corr.pairs().iter().map(|p| KeyPair {
            source: t.apply(&p.source),
            target: t.apply(&p.target),
            ..*p
        }).collect());
        let then_move = apply_transform(&t, &warp_nonrigid(&cloud, &corr, n_r).unwrap());
        let move_then = warp_nonrigid(&apply_transform(&t, &cloud), &moved_corr, n_r).unwrap();
        for (a, b) in then_move.points().iter().zip(move_then.points()) {
            prop_assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn all_keys_degrade_to_global_rigid(bend in 0.0f64..6.0, shift in point(20.0)) {
        let src = key_skeleton(0.0);
        let tgt = ResampledSkeleton::new(core::array::from_fn(|i| {
            key_skeleton(bend).ribs()[i].iter().map(|p| p + shift.coords).collect()
        }));
        let corr = build_correspondence(&src, &tgt).unwrap();
        let total = corr.len();
        let cloud = PointCloud::new(flat_keys(src.ribs()).iter().map(|p| p + Vector3::new(1.0, -2.0, 3.0)).collect());
        let global = kabsch_fit(&corr.source_points(), &corr.target_points()).unwrap();
        let warped = warp_nonrigid(&cloud, &corr, total).unwrap();
        for (p, w) in cloud.points().iter().zip(warped.points()) {
            prop_assert!((global.apply(p) - w).norm() < 1e-9);
        }
    }

    #[test]
    fn correspondence_is_levelwise_bijection(bend in 0.0f64..6.0) {
        let (a, b) = (key_skeleton(0.0), key_skeleton(bend));
        let corr = build_correspondence(&a, &b).unwrap();
        prop_assert_eq!(corr.len(), 30);
        for level in RibLevel::ALL {
            let idx: Vec<usize> = corr.pairs().iter().filter(|p| p.level == level).map(|p| p.index).collect();
            prop_assert_eq!(idx, (0..a.rib(level).len()).collect::<Vec<_>>());
        }
        for p in corr.pairs() {
            prop_assert_eq!(p.source, a.rib(p.level)[p.index]);
            prop_assert_eq!(p.target, b.rib(p.level)[p.index]);
        }
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn deformation_inverts_and_keeps_labels(seed in any::<u64>()) {
        let spec = CageSpec { points_per_rib: 60, sternum_points: 40, seed, ..CageSpec::default() };
        let (cloud, lines) = generate_cage(&spec).unwrap();
        let def = DeformationSpec::random(seed, &DeformationRanges::default());
        let (moved, _, field) = deform(&cloud, &lines, &def).unwrap();
        prop_assert_eq!(moved.labels(), cloud.labels());
        for (p, q) in cloud.points().iter().zip(moved.points()) {
            prop_assert!((field.inverse(q) - p).norm() < 1e-9);
            prop_assert!((field.apply(p) - q).norm() < 1e-9);
        }
        let again = deform(&generate_cage(&spec).unwrap().0, &lines, &def).unwrap().0;
        prop_assert_eq!(again, moved);
    }
}
