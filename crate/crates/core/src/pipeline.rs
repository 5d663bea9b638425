//! End-to-end orchestration: cloud → SOM key points → tree skeleton → rib
//! paths → resampled key points → locally rigid warp.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::geometry::{downsample, principal_axes, KdTree, Label, Point3, PointCloud, RibLevel};
use crate::register::{evaluate, warp_nonrigid, IcpParams, Method, RegistrationReport};
use crate::resample::{build_correspondence, resample_skeleton, Correspondence, ResampledSkeleton, RibCurve};
use crate::skeleton::{
    build_mst, convex_hull_vertices, extract_rib_paths, pair_endpoints, EndpointPairs, RibPathSet, SkeletonGraph,
    TemplateEndpoints,
};
use crate::som::{extract_key_points, init_grid, train, SomParams, SomSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SomStage {
    pub rows: usize,
    pub cols: usize,
    pub schedule: SomSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub som1: SomStage,
    pub som2: SomStage,
    pub seed: u64,
    pub t_theta_deg: f64,
    /// Resampled key points per rib, levels 2 to 5.
    pub rib_samples: [usize; 4],
    pub n_r: usize,
    /// Clouds larger than this are thinned before the first SOM.
    pub downsample_target: usize,
    pub icp: IcpParams,
    /// Stage-2 SOM trainings tried per cloud, each with its own seed, until
    /// one yields a usable skeleton.
    pub som2_attempts: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            som1: SomStage {
                rows: 20,
                cols: 20,
                schedule: SomSchedule::with_epochs(200),
            },
            som2: SomStage {
                rows: 5,
                cols: 8,
                schedule: SomSchedule::with_epochs(500),
            },
            seed: 0,
            t_theta_deg: 60.0,
            rib_samples: [6, 6, 8, 10],
            n_r: 10,
            downsample_target: 1000,
            icp: IcpParams::default(),
            som2_attempts: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        for s in [&self.som1, &self.som2] {
            if s.rows == 0 || s.cols == 0 || s.schedule.epochs == 0 {
                return bad("SOM rows, cols and epochs must be at least 1");
            }
            let sch = &s.schedule;
            if !(sch.learning_rate_initial > 0.0 && sch.learning_rate_initial <= 1.0) {
                return bad("initial learning rate must lie in (0, 1]");
            }
            if !(sch.learning_rate_final > 0.0 && sch.learning_rate_final <= sch.learning_rate_initial) {
                return bad("final learning rate must lie in (0, initial]");
            }
            if !(sch.radius_final > 0.0) || sch.radius_initial.is_some_and(|r| !(r > 0.0)) {
                return bad("neighborhood radii must be positive");
            }
        }
        if !(self.t_theta_deg > 0.0 && self.t_theta_deg < 180.0) {
            return bad("T_theta must lie in (0, 180) degrees");
        }
        if self.rib_samples.iter().any(|&n| n < 2) {
            return bad("every rib needs at least 2 resampled points");
        }
        if self.n_r < 3 || self.n_r > self.rib_samples.iter().sum() {
            return bad("n_r must lie between 3 and the total resampled key-point count");
        }
        if self.som2_attempts == 0 {
            return bad("at least one stage-2 SOM attempt is needed");
        }
        if self.downsample_target == 0 {
            return bad("downsample target must be at least 1");
        }
        if self.icp.max_iter == 0 || !(self.icp.tol >= 0.0) {
            return bad("ICP needs max_iter >= 1 and tol >= 0");
        }
        Ok(())
    }

    fn stage_seed(&self, salt: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt)
    }
}

/// Pipeline step, used to attribute failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Downsample,
    SomStage1,
    SomStage2,
    Mst,
    Hull,
    Endpoints,
    Paths,
    Resample,
    Correspondence,
    Warp,
    Evaluate,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Downsample => "downsample",
            Stage::SomStage1 => "som-stage-1",
            Stage::SomStage2 => "som-stage-2",
            Stage::Mst => "mst",
            Stage::Hull => "convex-hull",
            Stage::Endpoints => "endpoint-pairing",
            Stage::Paths => "rib-paths",
            Stage::Resample => "resample",
            Stage::Correspondence => "correspondence",
            Stage::Warp => "warp",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage failed: {error}")]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
    /// Warnings raised before the failure.
    pub warnings: Vec<Warning>,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> core::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> core::result::Result<T, StageError> {
        self.map_err(|error| StageError {
            stage,
            error,
            warnings: Vec::new(),
        })
    }
}

/// Non-fatal conditions met while skeletonizing.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A SOM grid had more nodes than training points and was shrunk.
    GridCapped {
        stage: Stage,
        requested: (usize, usize),
        used: (usize, usize),
    },
    /// The continuity filter removed more than half of a rib path.
    HeavilyPruned(RibLevel),
    /// Label-derived endpoints could not be snapped to hull vertices.
    EndpointsNotOnHull,
    /// Earlier stage-2 SOM trainings gave unusable skeletons; the one kept
    /// is attempt `used` (counting from 1).
    Som2Retried { used: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::GridCapped { stage, requested, used } => write!(
                f,
                "{stage}: {}x{} grid exceeds the input size, using {}x{}",
                requested.0, requested.1, used.0, used.1
            ),
            Warning::HeavilyPruned(level) => {
                write!(f, "rib {level}: continuity filter removed more than half of the path")
            }
            Warning::EndpointsNotOnHull => f.write_str("label-derived endpoints kept off the convex hull"),
            Warning::Som2Retried { used } => write!(f, "stage-2 SOM retrained; attempt {used} kept"),
        }
    }
}

/// How rib endpoints are found on a skeleton.
#[derive(Debug, Clone, Copy)]
pub enum EndpointSource<'a> {
    /// From the cloud's rib labels (template side).
    Labels,
    /// By pairing convex-hull vertices with labeled template endpoints.
    Template(&'a TemplateEndpoints),
}

/// Every intermediate product of skeletonizing one cloud.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub downsampled: PointCloud,
    pub som1: PointCloud,
    pub key_points: PointCloud,
    pub graph: SkeletonGraph,
    /// Hull vertex indices into `key_points`.
    pub hull: Vec<usize>,
    /// Endpoint indices into `key_points`.
    pub pairs: EndpointPairs,
    pub paths: RibPathSet,
    pub curves: [RibCurve; 4],
    pub resampled: ResampledSkeleton,
    pub warnings: Vec<Warning>,
}

impl Skeleton {
    /// Labeled endpoints, with the remaining hull vertices as alignment context.
    pub fn template_endpoints(&self) -> TemplateEndpoints {
        let ends: Vec<usize> = self.pairs.ribs().iter().flat_map(|r| [r.left, r.right]).collect();
        let context = self
            .hull
            .iter()
            .filter(|v| !ends.contains(v))
            .map(|&v| self.key_points.points()[v])
            .collect();
        TemplateEndpoints::from_pairs(self.key_points.points(), &self.pairs).with_context(context)
    }
}

/// Largest grid not exceeding `n` nodes: `⌊√n⌋` rows.
fn capped_grid(rows: usize, cols: usize, n: usize) -> (usize, usize) {
    if rows * cols <= n {
        return (rows, cols);
    }
    let r = ((n as f64).sqrt().floor() as usize).max(1);
    (r, (n / r).max(1))
}

fn som_stage(
    cloud: &PointCloud,
    stage: &SomStage,
    seed: u64,
    tag: Stage,
    warnings: &mut Vec<Warning>,
) -> core::result::Result<PointCloud, StageError> {
    let (rows, cols) = capped_grid(stage.rows, stage.cols, cloud.len());
    if (rows, cols) != (stage.rows, stage.cols) {
        warnings.push(Warning::GridCapped {
            stage: tag,
            requested: (stage.rows, stage.cols),
            used: (rows, cols),
        });
    }
    let grid = init_grid(cloud, rows, cols).at(tag)?;
    let params = SomParams::scheduled(&grid, cloud.len(), &stage.schedule, seed);
    let trained = train(grid, cloud, &params).at(tag)?;
    Ok(extract_key_points(&trained))
}

/// Seed of stage-2 attempt `k`; attempt 0 uses the plain stage seed.
fn som2_seed(config: &PipelineConfig, k: usize) -> u64 {
    config.stage_seed(3 + 16 * k as u64)
}

/// Stage-1 then stage-2 SOM key points of a cloud (first stage-2 attempt).
pub fn som_key_points(
    cloud: &PointCloud,
    config: &PipelineConfig,
    warnings: &mut Vec<Warning>,
) -> core::result::Result<(PointCloud, PointCloud, PointCloud), StageError> {
    let (thinned, som1) = som1_points(cloud, config, warnings)?;
    let key_points = som_stage(&som1, &config.som2, som2_seed(config, 0), Stage::SomStage2, warnings)?;
    Ok((thinned, som1, key_points))
}

fn som1_points(
    cloud: &PointCloud,
    config: &PipelineConfig,
    warnings: &mut Vec<Warning>,
) -> core::result::Result<(PointCloud, PointCloud), StageError> {
    let target = config.downsample_target.min(cloud.len());
    let thinned = downsample(cloud, target, config.stage_seed(1)).at(Stage::Downsample)?;
    let som1 = som_stage(&thinned, &config.som1, config.stage_seed(2), Stage::SomStage1, warnings)?;
    Ok((thinned, som1))
}

/// Endpoints from labels: per rib, the labeled cloud points lying furthest
/// along the lateral axis (first principal axis of all rib points) are
/// snapped to their nearest key points, which become its left and right ends.
pub fn endpoints_from_labels(cloud: &PointCloud, key_points: &[Point3]) -> Result<EndpointPairs> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::InvalidParams("the template cloud carries no rib labels".into()))?;
    let rib_points: Vec<Point3> = cloud
        .points()
        .iter()
        .zip(labels)
        .filter(|(_, l)| matches!(l, Label::Rib(_)))
        .map(|(p, _)| *p)
        .collect();
    let lateral = principal_axes(&rib_points).ok_or(Error::MissingRib(2))?.axes[0];
    let keys = KdTree::new(key_points);
    let mut ends = [(0usize, 0usize); 4];
    for (i, level) in RibLevel::ALL.iter().enumerate() {
        let members: Vec<Point3> = cloud
            .points()
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == Label::Rib(*level))
            .map(|(p, _)| *p)
            .collect();
        let proj = |p: &&Point3| p.coords.dot(&lateral);
        let by = |a: &&Point3, b: &&Point3| proj(a).total_cmp(&proj(b));
        let (Some(lo), Some(hi)) = (members.iter().min_by(by), members.iter().max_by(by)) else {
            return Err(Error::MissingRib(level.get()));
        };
        let snap = |p: &Point3| keys.nearest(p).expect("non-empty key points").0;
        ends[i] = (snap(lo), snap(hi));
        if ends[i].0 == ends[i].1 {
            return Err(Error::MissingRib(level.get()));
        }
    }
    EndpointPairs::new(ends)
}

/// Full skeleton of one cloud.
///
/// Stage 2 is retrained with fresh seeds, up to `som2_attempts` times, while
/// it fails or the continuity filter removes more than half of a rib path.
/// The first clean attempt wins; failing that, the first that completed;
/// failing that, the first error.
pub fn skeletonize(cloud: &PointCloud, endpoints: EndpointSource<'_>, config: &PipelineConfig) -> core::result::Result<Skeleton, StageError> {
    config.validate().at(Stage::Config)?;
    if cloud.is_empty() {
        return Err(StageError {
            stage: Stage::Downsample,
            error: Error::EmptyCloud,
            warnings: Vec::new(),
        });
    }
    let mut warnings = Vec::new();
    let (downsampled, som1) = som1_points(cloud, config, &mut warnings).map_err(|mut e| {
        e.warnings = warnings.clone();
        e
    })?;
    let mut fallback: Option<core::result::Result<Skeleton, StageError>> = None;
    for k in 0..config.som2_attempts {
        let attempt = skeleton_attempt(cloud, &downsampled, &som1, endpoints, config, k, warnings.clone());
        let clean = match &attempt {
            Ok(sk) => !sk.warnings.iter().any(|w| matches!(w, Warning::HeavilyPruned(_))),
            Err(_) => false,
        };
        if clean {
            let mut sk = attempt.expect("clean attempts are Ok");
            if k > 0 {
                sk.warnings.push(Warning::Som2Retried { used: k + 1 });
            }
            return Ok(sk);
        }
        let better = matches!((&fallback, &attempt), (None, _) | (Some(Err(_)), Ok(_)));
        if better {
            fallback = Some(attempt.map(|mut sk| {
                if k > 0 {
                    sk.warnings.push(Warning::Som2Retried { used: k + 1 });
                }
                sk
            }));
        }
    }
    fallback.expect("at least one attempt")
}

fn skeleton_attempt(
    cloud: &PointCloud,
    downsampled: &PointCloud,
    som1: &PointCloud,
    endpoints: EndpointSource<'_>,
    config: &PipelineConfig,
    k: usize,
    warnings: Vec<Warning>,
) -> core::result::Result<Skeleton, StageError> {
    let mut scratch = warnings;
    skeleton_steps(cloud, downsampled, som1, endpoints, config, k, &mut scratch).map_err(|mut e| {
        e.warnings = scratch;
        e
    })
}

fn skeleton_steps(
    cloud: &PointCloud,
    downsampled: &PointCloud,
    som1: &PointCloud,
    endpoints: EndpointSource<'_>,
    config: &PipelineConfig,
    k: usize,
    warnings: &mut Vec<Warning>,
) -> core::result::Result<Skeleton, StageError> {
    let key_points = som_stage(som1, &config.som2, som2_seed(config, k), Stage::SomStage2, warnings)?;
    let graph = build_mst(&key_points).at(Stage::Mst)?;
    let hull = convex_hull_vertices(&key_points).at(Stage::Hull)?;
    let hull_points: Vec<Point3> = hull.iter().map(|&i| key_points.points()[i]).collect();

    let pairs = match endpoints {
        EndpointSource::Labels => {
            let labeled = endpoints_from_labels(cloud, key_points.points()).at(Stage::Endpoints)?;
            let rough = TemplateEndpoints::from_pairs(key_points.points(), &labeled);
            match pair_endpoints(&hull_points, &rough).and_then(|p| p.remap(&hull)) {
                Ok(snapped) => snapped,
                Err(_) => {
                    warnings.push(Warning::EndpointsNotOnHull);
                    labeled
                }
            }
        }
        EndpointSource::Template(template) => pair_endpoints(&hull_points, template)
            .and_then(|p| p.remap(&hull))
            .at(Stage::Endpoints)?,
    };

    let paths = extract_rib_paths(&graph, &pairs, config.t_theta_deg).at(Stage::Paths)?;
    warnings.extend(paths.heavily_pruned().into_iter().map(Warning::HeavilyPruned));
    let (resampled, curves) = resample_skeleton(&graph, &paths, config.rib_samples).at(Stage::Resample)?;
    Ok(Skeleton {
        downsampled: downsampled.clone(),
        som1: som1.clone(),
        key_points,
        graph,
        hull,
        pairs,
        paths,
        curves,
        resampled,
        warnings: core::mem::take(warnings),
    })
}

#[derive(Debug, Clone)]
pub struct GraphRegistration {
    pub source: Skeleton,
    pub target: Skeleton,
    pub correspondence: Correspondence,
    pub warped: PointCloud,
    pub report: RegistrationReport,
}

/// Skeleton-graph registration of a labeled template `source` onto `target`.
pub fn graph_register(source: &PointCloud, target: &PointCloud, config: &PipelineConfig) -> core::result::Result<GraphRegistration, StageError> {
    let src = skeletonize(source, EndpointSource::Labels, config)?;
    let template = src.template_endpoints();
    let tgt = skeletonize(target, EndpointSource::Template(&template), config)?;
    let correspondence = build_correspondence(&src.resampled, &tgt.resampled).at(Stage::Correspondence)?;
    let warped = warp_nonrigid(source, &correspondence, config.n_r).at(Stage::Warp)?;
    let report = evaluate(warped.points(), target.points(), Method::Graph).at(Stage::Evaluate)?;
    Ok(GraphRegistration {
        source: src,
        target: tgt,
        correspondence,
        warped,
        report,
    })
}
