//! Command-line verbs. Data goes to files under `--out`, diagnostics to
//! stderr. Exit status: 0 success, 2 usage, configuration or input error,
//! 3 pipeline failure.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skelreg_core::geometry::{apply_transform, downsample};
use skelreg_core::pipeline::{graph_register, skeletonize, EndpointSource, Skeleton, StageError};
use skelreg_core::register::{evaluate, icp_prealigned, plan_waypoints, transfer_waypoints, Method};
use skelreg_core::synth::{deform, generate_cage, CageSpec, DeformationRanges, DeformationSpec};
use skelreg_core::PointCloud;

use crate::artifacts::OutDir;
use crate::config::{read_config, ConfigError, RunConfig};
use crate::io::{read_point_cloud_auto, to_ply, IoError};
use crate::records::{
    centerlines_csv, correspondence_csv, edges_csv, ground_truth_csv, hull_csv, parse_correspondence, parse_waypoints,
    paths_csv, plot_csv, resampled_csv, waypoint_errors_csv, waypoints_csv, DeformationRecord, EndpointsRecord,
    ReportRecord, TransformRecord,
};

#[derive(Debug, Parser)]
#[command(name = "skelreg", version, about = "Skeleton-graph registration of rib-cartilage point clouds")]
pub struct Cli {
    /// Run configuration (flat TOML); absent keys take the defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic cage, a deformed copy and the true mapping.
    Synth(SynthArgs),
    /// Thin a cloud to a target count by grid sampling.
    Downsample {
        cloud: PathBuf,
        /// Target count; defaults to the configured downsample target.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Two-stage SOM, spanning tree, rib paths and resampled key points.
    Skeleton {
        cloud: PathBuf,
        /// Template endpoints (`endpoints.json` of another skeleton); without
        /// it the cloud's rib labels locate the endpoints.
        #[arg(long, value_name = "PATH")]
        endpoints: Option<PathBuf>,
    },
    /// Register a labeled source cloud onto a target cloud.
    Register {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = RegisterMethod::Graph)]
        method: RegisterMethod,
        #[command(flatten)]
        report: ReportFlags,
    },
    /// Distance report of a moved cloud against a target cloud.
    Evaluate {
        moved: PathBuf,
        target: PathBuf,
        /// Method name recorded in the report.
        #[arg(long, value_enum, default_value_t = MethodArg::External)]
        method: MethodArg,
        /// Also write `distances.csv` in long format (method, distance).
        #[arg(long)]
        plot_csv: bool,
    },
    /// Move waypoints through a graph-registration correspondence.
    Transfer {
        waypoints: PathBuf,
        correspondence: PathBuf,
        /// True deformation (`deformation.json` from `synth`); adds a
        /// per-waypoint error file.
        #[arg(long, value_name = "PATH")]
        deformation: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegisterMethod {
    Graph,
    Icp,
}

/// Method label for `evaluate`; `external` marks results from other tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Graph,
    Icp,
    External,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Graph => Method::Graph,
            MethodArg::Icp => Method::Icp,
            MethodArg::External => Method::External,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportFlags {
    /// Also write `distances.csv` in long format (method, distance).
    #[arg(long)]
    pub plot_csv: bool,
    /// Record wall-clock runtime in the report. Off by default so repeated
    /// runs stay byte-identical.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scale factor along x, 0.9 to 1.1; replaces the seeded draw.
    #[arg(long)]
    pub scale_x: Option<f64>,
    /// Scale factor along y, 0.9 to 1.1.
    #[arg(long)]
    pub scale_y: Option<f64>,
    /// Scale factor along z, 0.9 to 1.1.
    #[arg(long)]
    pub scale_z: Option<f64>,
    /// Bending amplitude, mm.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Bending wavelength, mm.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Surface noise sigma, mm.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Pipeline(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Pipeline(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Pipeline(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        for w in &e.warnings {
            eprintln!("warning: {w}");
        }
        Failure::Pipeline(e.to_string())
    }
}

fn output(e: std::io::Error) -> Failure {
    Failure::Usage(format!("cannot write output: {e}"))
}

fn input(path: &Path, e: IoError) -> Failure {
    match e {
        IoError::Io { .. } => Failure::Usage(e.to_string()),
        _ => Failure::Usage(format!("{}: {e}", path.display())),
    }
}

fn read_cloud(path: &Path) -> Result<PointCloud, Failure> {
    read_point_cloud_auto(path).map_err(|e| input(path, e))
}

fn read_text(path: &Path) -> std::io::Result<String> {
    std::fs::read_to_string(path)
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut config = match &cli.config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Synth(args) => synth(cli, &config, args),
        Command::Downsample { cloud, count } => cmd_downsample(cli, &config, cloud, *count),
        Command::Skeleton { cloud, endpoints } => cmd_skeleton(cli, &config, cloud, endpoints.as_deref()),
        Command::Register {
            source,
            target,
            method,
            report,
        } => cmd_register(cli, &config, source, target, *method, report),
        Command::Evaluate {
            moved,
            target,
            method,
            plot_csv,
        } => cmd_evaluate(cli, moved, target, *method, *plot_csv),
        Command::Transfer {
            waypoints,
            correspondence,
            deformation,
        } => cmd_transfer(cli, &config, waypoints, correspondence, deformation.as_deref()),
    }
}

fn synth(cli: &Cli, config: &RunConfig, args: &SynthArgs) -> Result<(), Failure> {
    let invalid = |e: skelreg_core::Error| Failure::Usage(e.to_string());
    let mut cage = CageSpec {
        seed: config.seed,
        ..CageSpec::default()
    };
    if let Some(n) = args.noise {
        cage.noise_sigma = n;
    }
    cage.validate().map_err(invalid)?;
    let mut spec = DeformationSpec::random(config.seed, &DeformationRanges::default());
    for (i, s) in [args.scale_x, args.scale_y, args.scale_z].into_iter().enumerate() {
        if let Some(s) = s {
            spec.scale[i] = s;
        }
    }
    if let Some(a) = args.amplitude {
        spec.amplitude = a;
    }
    if let Some(w) = args.wavelength {
        spec.wavelength = w;
    }
    spec.validate().map_err(invalid)?;

    let (source, source_lines) = generate_cage(&cage).map_err(invalid)?;
    let resampled_cage = CageSpec {
        seed: cage.seed.wrapping_add(1),
        ..cage.clone()
    };
    let (fresh, fresh_lines) = generate_cage(&resampled_cage).map_err(invalid)?;
    let (target, target_lines, field) = deform(&fresh, &fresh_lines, &spec).map_err(invalid)?;

    let mut out = OutDir::create(&cli.out, "synth").map_err(output)?;
    out.write("source.ply", to_ply(&source).as_bytes()).map_err(output)?;
    out.write("target.ply", to_ply(&target).as_bytes()).map_err(output)?;
    out.write("source_centerlines.csv", centerlines_csv(&source_lines).as_bytes())
        .map_err(output)?;
    out.write("target_centerlines.csv", centerlines_csv(&target_lines).as_bytes())
        .map_err(output)?;
    out.write("ground_truth.csv", ground_truth_csv(&source, &field).as_bytes())
        .map_err(output)?;
    out.write_json("deformation.json", &DeformationRecord::from(&field))
        .map_err(output)?;
    out.finish().map_err(output)?;
    Ok(())
}

fn cmd_downsample(cli: &Cli, config: &RunConfig, path: &Path, count: Option<usize>) -> Result<(), Failure> {
    let cloud = read_cloud(path)?;
    let target = count.unwrap_or(config.downsample_target);
    if target == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }
    let thinned = downsample(&cloud, target.min(cloud.len()), config.seed)
        .map_err(|e| Failure::Pipeline(format!("downsample stage failed: {e}")))?;
    let mut out = OutDir::create(&cli.out, "downsample").map_err(output)?;
    out.write("downsampled.ply", to_ply(&thinned).as_bytes()).map_err(output)?;
    out.finish().map_err(output)?;
    Ok(())
}

fn warn_all(skel: &Skeleton, who: &str) {
    for w in &skel.warnings {
        eprintln!("warning ({who}): {w}");
    }
}

/// Writes every intermediate of a skeleton under `prefix`.
fn write_skeleton(out: &mut OutDir, prefix: &str, skel: &Skeleton) -> Result<(), Failure> {
    let name = |n: &str| format!("{prefix}{n}");
    out.write(&name("downsampled.ply"), to_ply(&skel.downsampled).as_bytes())
        .map_err(output)?;
    out.write(&name("som1.ply"), to_ply(&skel.som1).as_bytes()).map_err(output)?;
    out.write(&name("key_points.ply"), to_ply(&skel.key_points).as_bytes())
        .map_err(output)?;
    out.write(&name("mst_edges.csv"), edges_csv(skel).as_bytes()).map_err(output)?;
    out.write(&name("hull.csv"), hull_csv(skel).as_bytes()).map_err(output)?;
    out.write(&name("rib_paths.csv"), paths_csv(skel).as_bytes()).map_err(output)?;
    out.write(&name("resampled.csv"), resampled_csv(&skel.resampled).as_bytes())
        .map_err(output)?;
    out.write_json(&name("endpoints.json"), &EndpointsRecord::from(&skel.template_endpoints()))
        .map_err(output)?;
    Ok(())
}

fn cmd_skeleton(cli: &Cli, config: &RunConfig, path: &Path, endpoints: Option<&Path>) -> Result<(), Failure> {
    let cloud = read_cloud(path)?;
    let template = match endpoints {
        Some(p) => {
            let text = read_text(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            let record: EndpointsRecord =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            Some(
                record
                    .to_template()
                    .ok_or_else(|| Failure::Usage(format!("{}: expected rib levels 2 to 5 in order", p.display())))?,
            )
        }
        None => None,
    };
    let source = match &template {
        Some(t) => EndpointSource::Template(t),
        None => EndpointSource::Labels,
    };
    let skel = skeletonize(&cloud, source, &config.to_pipeline())?;
    warn_all(&skel, "skeleton");
    let mut out = OutDir::create(&cli.out, "skeleton").map_err(output)?;
    write_skeleton(&mut out, "", &skel)?;
    out.finish().map_err(output)?;
    Ok(())
}

fn write_report(
    out: &mut OutDir,
    report: &skelreg_core::register::RegistrationReport,
    plot: bool,
) -> Result<(), Failure> {
    out.write_json("report.json", &ReportRecord::from(report)).map_err(output)?;
    if plot {
        out.write("distances.csv", plot_csv(&[report]).as_bytes()).map_err(output)?;
    }
    Ok(())
}

fn cmd_register(
    cli: &Cli,
    config: &RunConfig,
    source_path: &Path,
    target_path: &Path,
    method: RegisterMethod,
    flags: &ReportFlags,
) -> Result<(), Failure> {
    let source = read_cloud(source_path)?;
    let target = read_cloud(target_path)?;
    let pipeline = config.to_pipeline();
    let started = Instant::now();
    let mut out = OutDir::create(&cli.out, "register").map_err(output)?;
    match method {
        RegisterMethod::Graph => {
            let reg = graph_register(&source, &target, &pipeline)?;
            let mut report = reg.report.clone();
            if flags.timing {
                report.runtime_seconds = Some(started.elapsed().as_secs_f64());
            }
            warn_all(&reg.source, "source");
            warn_all(&reg.target, "target");
            write_skeleton(&mut out, "source_", &reg.source)?;
            write_skeleton(&mut out, "target_", &reg.target)?;
            out.write("correspondence.csv", correspondence_csv(&reg.correspondence).as_bytes())
                .map_err(output)?;
            let waypoints = plan_waypoints(&reg.source.resampled)
                .map_err(|e| Failure::Pipeline(format!("waypoint stage failed: {e}")))?;
            out.write("source_waypoints.csv", waypoints_csv(&waypoints).as_bytes())
                .map_err(output)?;
            out.write("warped.ply", to_ply(&reg.warped).as_bytes()).map_err(output)?;
            write_report(&mut out, &report, flags.plot_csv)?;
        }
        RegisterMethod::Icp => {
            let icp = icp_prealigned(source.points(), target.points(), &pipeline.icp)
                .map_err(|e| Failure::Pipeline(format!("icp stage failed: {e}")))?;
            let mut report = icp.report.clone();
            if flags.timing {
                report.runtime_seconds = Some(started.elapsed().as_secs_f64());
            }
            out.write_json("transform.json", &TransformRecord::from(&icp.transform))
                .map_err(output)?;
            out.write("warped.ply", to_ply(&apply_transform(&icp.transform, &source)).as_bytes())
                .map_err(output)?;
            write_report(&mut out, &report, flags.plot_csv)?;
        }
    }
    out.finish().map_err(output)?;
    Ok(())
}

fn cmd_evaluate(cli: &Cli, moved: &Path, target: &Path, method: MethodArg, plot: bool) -> Result<(), Failure> {
    let moved = read_cloud(moved)?;
    let target = read_cloud(target)?;
    let report = evaluate(moved.points(), target.points(), method.into())
        .map_err(|e| Failure::Pipeline(format!("evaluate stage failed: {e}")))?;
    let mut out = OutDir::create(&cli.out, "evaluate").map_err(output)?;
    write_report(&mut out, &report, plot)?;
    out.finish().map_err(output)?;
    Ok(())
}

fn cmd_transfer(
    cli: &Cli,
    config: &RunConfig,
    waypoints: &Path,
    correspondence: &Path,
    deformation: Option<&Path>,
) -> Result<(), Failure> {
    // Without a correspondence there is no registration to transfer through.
    let corr = read_text(correspondence)
        .map_err(|e| Failure::Pipeline(format!("correspondence {}: {e}", correspondence.display())))
        .and_then(|t| {
            parse_correspondence(&t)
                .map_err(|e| Failure::Pipeline(format!("correspondence {}: {e}", correspondence.display())))
        })?;
    let text = read_text(waypoints).map_err(|e| Failure::Usage(format!("{}: {e}", waypoints.display())))?;
    let wp = parse_waypoints(&text).map_err(|e| input(waypoints, e))?;
    let truth = match deformation {
        Some(p) => {
            let text = read_text(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            let record: DeformationRecord =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            Some(record.to_deformation())
        }
        None => None,
    };
    let moved = transfer_waypoints(&wp, &corr, config.n_r)
        .map_err(|e| Failure::Pipeline(format!("transfer stage failed: {e}")))?;
    let mut out = OutDir::create(&cli.out, "transfer").map_err(output)?;
    out.write("transferred_waypoints.csv", waypoints_csv(&moved).as_bytes())
        .map_err(output)?;
    if let Some(field) = truth {
        let true_positions: Vec<_> = wp.iter().map(|w| field.apply(&w.position)).collect();
        out.write("waypoint_errors.csv", waypoint_errors_csv(&moved, &true_positions).as_bytes())
            .map_err(output)?;
    }
    out.finish().map_err(output)?;
    Ok(())
}
