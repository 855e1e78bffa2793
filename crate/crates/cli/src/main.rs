// `!(x >= 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reassembly::curves::PenaltyNeighborhood;
use reassembly::evaluation::{generate_fracture, rotation_rmse, translation_rmse, CutPlane, FractureParams};
use reassembly::io::{read_point_cloud, read_transform, write_point_cloud, write_transform, WriteOptions};
use reassembly::parallel::configure_threads_from_env;
use reassembly::pipeline::{segment_fragment, ConfigOverrides, PipelineConfig, Preset};
use serde_json::json;

/// Pairwise reassembly of broken objects from point clouds.
#[derive(Parser, Debug)]
#[command(name = "reassemble", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align fragment B onto fragment A.
    Assemble {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write colored curve/region clouds and edge lists.
        #[arg(long)]
        debug_exports: bool,
        /// Ground-truth transform; writes metrics.json when given.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Divide the translation error by this length.
        #[arg(long)]
        normalizer: Option<f64>,
    },
    /// Split a cloud into two randomly posed fragments with known ground truth.
    Synthbreak {
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relief amplitude of the cut as a fraction of the bbox diagonal.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// Largest pose rotation in degrees.
        #[arg(long, default_value_t = 60.0)]
        max_angle: f64,
        /// Largest pose shift as a fraction of the bbox diagonal.
        #[arg(long, default_value_t = 0.3)]
        max_shift: f64,
        /// Largest cut-plane offset from the centroid, as a fraction of the
        /// half-extent along the cut normal.
        #[arg(long, default_value_t = 0.3)]
        cut_offset: f64,
        /// Do not sample the fracture face.
        #[arg(long)]
        no_fill: bool,
    },
    /// Compare a predicted transform with the ground truth.
    Evaluate {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long)]
        normalizer: Option<f64>,
    },
    /// Run a single fragment through segmentation.
    Segment {
        a: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// TOML file with parameter values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    epsilon_scale: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    min_component: Option<usize>,
    #[arg(long)]
    prune_depth: Option<usize>,
    #[arg(long)]
    dilate_steps: Option<usize>,
    #[arg(long)]
    k_vote: Option<usize>,
    #[arg(long)]
    min_region_fraction: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    convergence_eps: Option<f64>,
    #[arg(long)]
    cutoff_scale: Option<f64>,
    #[arg(long)]
    icp_points: Option<usize>,
    #[arg(long)]
    refine_pairs: Option<usize>,
    #[arg(long)]
    require_facing: Option<bool>,
    /// `graph` or `knn:N`.
    #[arg(long, value_parser = parse_neighborhood)]
    penalty_neighborhood: Option<PenaltyNeighborhood>,
    #[arg(long)]
    voxel_size: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_neighborhood(s: &str) -> Result<PenaltyNeighborhood, String> {
    if s == "graph" {
        return Ok(PenaltyNeighborhood::Graph);
    }
    s.strip_prefix("knn:")
        .and_then(|n| n.parse().ok())
        .map(PenaltyNeighborhood::Knn)
        .ok_or_else(|| format!("expected `graph` or `knn:N`, got `{s}`"))
}

impl ParamArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            preset: self.preset,
            k: self.k,
            epsilon_scale: self.epsilon_scale,
            tau: self.tau,
            min_component: self.min_component,
            prune_depth: self.prune_depth,
            dilate_steps: self.dilate_steps,
            k_vote: self.k_vote,
            min_region_fraction: self.min_region_fraction,
            max_iterations: self.max_iterations,
            convergence_eps: self.convergence_eps,
            cutoff_scale: self.cutoff_scale,
            icp_points: self.icp_points,
            refine_pairs: self.refine_pairs,
            require_facing: self.require_facing,
            penalty_neighborhood: self.penalty_neighborhood,
            voxel_size: self.voxel_size,
            seed: self.seed,
        }
    }
}

/// Problems with the invocation itself (exit 1) as opposed to failures while
/// processing (exit 2).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn require_file(path: &Path) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(UsageError(format!("input file not found: {}", path.display())).into());
    }
    Ok(())
}

fn resolve_config(params: &ParamArgs) -> anyhow::Result<PipelineConfig> {
    let file = match &params.config {
        Some(path) => {
            require_file(path)?;
            Some(ConfigOverrides::read(path).map_err(|e| UsageError(e.to_string()))?)
        }
        None => None,
    };
    PipelineConfig::resolve(file.as_ref(), &params.overrides()).map_err(|e| UsageError(e.to_string()).into())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_json(value: &serde_json::Value, path: &Path) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads_from_env().map_err(|e| UsageError(e.to_string()))?;
    match cli.command {
        Command::Assemble {
            a,
            b,
            params,
            out,
            debug_exports,
            gt,
            normalizer,
        } => {
            require_file(&a)?;
            require_file(&b)?;
            if let Some(gt) = &gt {
                require_file(gt)?;
            }
            let config = resolve_config(&params)?;
            let assembly = reassembly::pipeline::run_pipeline(&a, &b, &config)?;
            assembly.write_outputs(&out, debug_exports)?;
            if let Some(gt) = gt {
                let gt = read_transform(&gt)?;
                assembly.metrics(&gt, normalizer).write(&out.join("metrics.json"))?;
            }
            for w in &assembly.report.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "best pair ({}, {}) chamfer {:e}; wrote {}",
                assembly.report.best.region_p,
                assembly.report.best.region_q,
                assembly.report.best.chamfer,
                out.join("transform.json").display()
            );
        }
        Command::Synthbreak {
            source,
            out,
            seed,
            jitter,
            max_angle,
            max_shift,
            cut_offset,
            no_fill,
        } => {
            require_file(&source)?;
            if !(jitter >= 0.0) || !(0.0..=1.0).contains(&cut_offset) {
                bail!(UsageError("--jitter must be ≥ 0 and --cut-offset in [0, 1]".into()));
            }
            let cloud = read_point_cloud(&source)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cut = CutPlane::random(&cloud, cut_offset, &mut rng);
            let diag = cloud.aabb().diagonal();
            let params = FractureParams {
                cut,
                jitter_amp: jitter * diag,
                pose_seed: seed,
                max_angle_deg: max_angle,
                max_shift: max_shift * diag,
                fill: !no_fill,
            };
            let f = generate_fracture(&cloud, &params)?;
            create_dir(&out)?;
            write_point_cloud(&f.fragment_a, &out.join("fragment_a.ply"), WriteOptions::binary_f64())?;
            write_point_cloud(&f.fragment_b, &out.join("fragment_b.ply"), WriteOptions::binary_f64())?;
            write_transform(&f.gt_relative, &out.join("gt.json"))?;
            let (fill_a, fill_b) = f.fill_counts();
            write_json(
                &json!({
                    "seed": seed,
                    "cut_point": [cut.point.x, cut.point.y, cut.point.z],
                    "cut_normal": [f.cut.normal.x, f.cut.normal.y, f.cut.normal.z],
                    "jitter_amp": params.jitter_amp,
                    "source_points": cloud.len(),
                    "fragment_a_points": f.fragment_a.len(),
                    "fragment_b_points": f.fragment_b.len(),
                    "fill_a": fill_a,
                    "fill_b": fill_b,
                    "source_diagonal": f.source_diagonal,
                }),
                &out.join("fracture.json"),
            )?;
            println!("wrote {} and {}", out.join("fragment_a.ply").display(), out.join("fragment_b.ply").display());
        }
        Command::Evaluate { pred, gt, normalizer } => {
            require_file(&pred)?;
            require_file(&gt)?;
            if normalizer.is_some_and(|n| !(n > 0.0)) {
                bail!(UsageError("--normalizer must be positive".into()));
            }
            let p = read_transform(&pred)?;
            let g = read_transform(&gt)?;
            let report = json!({
                "rot_err_deg": rotation_rmse(&p, &g),
                "trans_err": translation_rmse(&p, &g, normalizer),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Segment { a, params, out } => {
            require_file(&a)?;
            let config = resolve_config(&params)?;
            let cloud = read_point_cloud(&a)?;
            let seg = segment_fragment(&cloud, &config)?;
            create_dir(&out)?;
            seg.write_debug(&out, "")?;
            write_json(
                &json!({ "counts": seg.counts(), "config": config }),
                &out.join("segment.json"),
            )?;
            println!(
                "{} curve points, {} regions ({} retained)",
                seg.curves.count(),
                seg.segmentation.region_count(),
                seg.retained.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
