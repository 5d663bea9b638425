use skelreg_core::geometry::downsample;
use skelreg_core::pipeline::{graph_register, skeletonize, som_key_points, EndpointSource, PipelineConfig};
use skelreg_core::register::{plan_waypoints, transfer_waypoints};
use skelreg_core::som::{init_grid, train_observed, SomParams};
use skelreg_core::synth::{deform, generate_cage, CageSpec, DeformationRanges, DeformationSpec};
use skelreg_core::{PointCloud, RibLevel};

fn pair(seed: u64) -> (PointCloud, PointCloud) {
    let (source, _) = generate_cage(&CageSpec { seed, ..CageSpec::default() }).unwrap();
    let (fresh, lines) = generate_cage(&CageSpec { seed: seed + 1, ..CageSpec::default() }).unwrap();
    let spec = DeformationSpec::random(seed, &DeformationRanges::default());
    (source, deform(&fresh, &lines, &spec).unwrap().0)
}

#[test]
fn default_config_gives_400_then_40_key_points() {
    let (cloud, _) = generate_cage(&CageSpec::default()).unwrap();
    let mut warnings = Vec::new();
    let (thinned, som1, keys) = som_key_points(&cloud, &PipelineConfig::default(), &mut warnings).unwrap();
    assert_eq!(thinned.len(), 1000);
    assert_eq!(som1.len(), 400);
    assert_eq!(keys.len(), 40);
    assert!(warnings.is_empty());
}

#[test]
fn stage_one_quantization_error_settles() {
    let config = PipelineConfig::default();
    let (cloud, _) = generate_cage(&CageSpec::default()).unwrap();
    let thinned = downsample(&cloud, config.downsample_target, 1).unwrap();
    let grid = init_grid(&thinned, config.som1.rows, config.som1.cols).unwrap();
    let initial = grid.quantization_error(thinned.points());
    let params = SomParams::scheduled(&grid, thinned.len(), &config.som1.schedule, 2);
    let mut errors = Vec::new();
    let trained = train_observed(grid, &thinned, &params, |_, g| errors.push(g.quantization_error(thinned.points()))).unwrap();
    let last = trained.quantization_error(thinned.points());
    assert!(last <= 0.5 * initial, "{last} vs initial {initial}");
    let tail = &errors[errors.len() - 11..];
    let rises = tail.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(rises <= 1, "{tail:?}");
}

#[test]
fn skeleton_is_deterministic_and_resampled_to_config() {
    let (cloud, _) = generate_cage(&CageSpec { seed: 3, ..CageSpec::default() }).unwrap();
    let config = PipelineConfig { seed: 3, ..PipelineConfig::default() };
    let a = skeletonize(&cloud, EndpointSource::Labels, &config).unwrap();
    let b = skeletonize(&cloud, EndpointSource::Labels, &config).unwrap();
    assert_eq!(a.key_points, b.key_points);
    assert_eq!(a.resampled, b.resampled);
    assert_eq!(a.resampled.counts(), [6, 6, 8, 10]);
    for level in RibLevel::ALL {
        let path = a.paths.get(level);
        assert!(path.filtered.len() >= 5);
        let ends = a.pairs.get(level);
        assert_eq!((path.raw[0], *path.raw.last().unwrap()), (ends.left, ends.right));
    }
}

#[test]
fn graph_registration_tracks_a_deformed_cage() {
    let (source, target) = pair(3);
    let config = PipelineConfig { seed: 3, ..PipelineConfig::default() };
    let reg = graph_register(&source, &target, &config).unwrap();
    assert_eq!(reg.correspondence.len(), 30);
    assert_eq!(reg.warped.labels(), source.labels());
    assert!(reg.report.ed_mean < 5.0, "{:?}", reg.report.ed_mean);
    assert!(reg.report.ed_mean <= reg.report.hausdorff);
    let waypoints = plan_waypoints(&reg.source.resampled).unwrap();
    assert_eq!(waypoints.len(), 10);
    assert_eq!(transfer_waypoints(&waypoints, &reg.correspondence, config.n_r).unwrap().len(), 10);
}

#[test]
fn empty_cloud_fails_at_downsample() {
    let err = skeletonize(&PointCloud::default(), EndpointSource::Labels, &PipelineConfig::default()).unwrap_err();
    assert_eq!(err.stage.as_str(), "downsample");
}
