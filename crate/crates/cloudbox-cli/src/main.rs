//! Command-line driver: point cloud in, collision scene and clearance
//! tables out.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cloudbox::bounding::obb_to_polytope;
use cloudbox::collision::{gjk_query, sphere_set_clearance, SafetyMargin};
use cloudbox::config::{parse_counts, parse_point, PipelineConfig};
use cloudbox::error::Error;
use cloudbox::io::{format_cluster_dump, load_cloud, CloudFormat};
use cloudbox::math::{Mat3, Point3};
use cloudbox::pipeline::{generate_example_scene, run_pipeline};
use cloudbox::scene::{quantize_obb, CollisionScene, VolumeFile};
use cloudbox::segmentation::{region_growing, SegmentationParams};
use cloudbox::sweep::{run_sweep, SweepSpec};

#[derive(Parser)]
#[command(name = "cloudbox", version, about = "Point clouds to collision worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline from a config file and write the scene JSON.
    Pipeline(PipelineArgs),
    /// Segment a cloud and dump `x y z cluster_id` lines.
    Segment(SegmentArgs),
    /// Sweep a moving box past a scene and write the clearance CSV.
    Sweep(SweepArgs),
    /// Generate the demonstration scene (row of cubes plus a moving cube).
    Example(ExampleArgs),
    /// Distance / collision between two volume files.
    Collide(CollideArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Config file (flat `key = value`, dotted key names).
    #[arg(long)]
    config: PathBuf,

    // Every config key is overridable by a flag of the same dotted name.
    #[arg(long = "input")]
    input: Option<String>,
    #[arg(long = "format")]
    format: Option<String>,
    #[arg(long = "workspace.min")]
    workspace_min: Option<String>,
    #[arg(long = "workspace.max")]
    workspace_max: Option<String>,
    #[arg(long = "sor.k")]
    sor_k: Option<String>,
    #[arg(long = "sor.u")]
    sor_u: Option<String>,
    #[arg(long = "seg.k")]
    seg_k: Option<String>,
    #[arg(long = "seg.d_th")]
    seg_d_th: Option<String>,
    #[arg(long = "seg.kappa_th")]
    seg_kappa_th: Option<String>,
    #[arg(long = "seg.alpha_th")]
    seg_alpha_th: Option<String>,
    #[arg(long = "seg.min_cluster_size")]
    seg_min_cluster_size: Option<String>,
    #[arg(long = "split.seed_resolution")]
    split_seed_resolution: Option<String>,
    #[arg(long = "split.voxel_resolution")]
    split_voxel_resolution: Option<String>,
    #[arg(long = "box_mode")]
    box_mode: Option<String>,
    #[arg(long = "sphere_counts")]
    sphere_counts: Option<String>,
    #[arg(long = "margin")]
    margin: Option<String>,
    #[arg(long = "gjk.tol")]
    gjk_tol: Option<String>,
    #[arg(long = "gjk.max_iter")]
    gjk_max_iter: Option<String>,
    #[arg(long = "residue_aabb")]
    residue_aabb: Option<String>,
    #[arg(long = "output.scene")]
    output_scene: Option<String>,
    #[arg(long = "output.clusters")]
    output_clusters: Option<String>,
}

impl PipelineArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |key: &str, value: &Option<String>| {
            if let Some(v) = value {
                out.push((key.to_string(), v.clone()));
            }
        };
        push("input", &self.input);
        push("format", &self.format);
        push("workspace.min", &self.workspace_min);
        push("workspace.max", &self.workspace_max);
        push("sor.k", &self.sor_k);
        push("sor.u", &self.sor_u);
        push("seg.k", &self.seg_k);
        push("seg.d_th", &self.seg_d_th);
        push("seg.kappa_th", &self.seg_kappa_th);
        push("seg.alpha_th", &self.seg_alpha_th);
        push("seg.min_cluster_size", &self.seg_min_cluster_size);
        push("split.seed_resolution", &self.split_seed_resolution);
        push("split.voxel_resolution", &self.split_voxel_resolution);
        push("box_mode", &self.box_mode);
        push("sphere_counts", &self.sphere_counts);
        push("margin", &self.margin);
        push("gjk.tol", &self.gjk_tol);
        push("gjk.max_iter", &self.gjk_max_iter);
        push("residue_aabb", &self.residue_aabb);
        push("output.scene", &self.output_scene);
        push("output.clusters", &self.output_clusters);
        out
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// xyz | csv | ply (default: from the file extension)
    #[arg(long)]
    format: Option<String>,
    #[arg(long = "seg.k", default_value_t = 8)]
    k: usize,
    #[arg(long = "seg.d_th", default_value_t = 0.1)]
    d_th: f64,
    #[arg(long = "seg.kappa_th", default_value_t = 0.05)]
    kappa_th: f64,
    /// radians
    #[arg(long = "seg.alpha_th", default_value_t = 0.17453292519943295)]
    alpha_th: f64,
    #[arg(long = "seg.min_cluster_size", default_value_t = 10)]
    min_cluster_size: usize,
    /// Write the dump here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = -1.0)]
    y_min: f64,
    #[arg(long, default_value_t = 1.0)]
    y_max: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Sweep axis, e.g. `0,1,0`.
    #[arg(long, default_value = "0,1,0")]
    axis: String,
    /// Sphere counts to evaluate, e.g. `1,2,6`.
    #[arg(long, default_value = "1,2,6")]
    spheres: String,
    /// Override the moving box center (default: first robot volume).
    #[arg(long)]
    moving_center: Option<String>,
    /// Override the moving box half extents (axis-aligned box).
    #[arg(long)]
    moving_half_extents: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExampleArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0.4)]
    spacing: f64,
    #[arg(long, default_value_t = 0.4)]
    side: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CollideArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 128)]
    max_iter: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> cloudbox::Result<()> {
    match cli.command {
        Command::Pipeline(args) => {
            let config = PipelineConfig::load(&args.config, &args.overrides())?;
            let output = run_pipeline(&config)?;
            output.scene.save(&config.output_scene)?;
            if let Some(path) = &config.output_clusters {
                fs::write(path, format_cluster_dump(&output.filtered, &output.segmentation))?;
            }
            println!(
                "scene {} written: {} volumes, {} residue points",
                config.output_scene.display(),
                output.scene.environment.len(),
                output.segmentation.residue.len()
            );
            Ok(())
        }
        Command::Segment(args) => {
            let format = match &args.format {
                Some(name) => name.parse()?,
                None => CloudFormat::from_path(&args.input)?,
            };
            let cloud = load_cloud(&args.input, format)?;
            let params = SegmentationParams {
                k: args.k,
                d_th: args.d_th,
                kappa_th: args.kappa_th,
                alpha_th: args.alpha_th,
                min_cluster_size: args.min_cluster_size,
            };
            let seg = region_growing(&cloud, &params)?;
            let dump = format_cluster_dump(&cloud, &seg);
            match &args.output {
                Some(path) => fs::write(path, dump)?,
                None => print!("{dump}"),
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let scene = CollisionScene::load(&args.scene)?;
            let moving = moving_box(&scene, &args)?;
            let spec = SweepSpec {
                moving,
                axis: parse_point("axis", &args.axis)?,
                y_min: args.y_min,
                y_max: args.y_max,
                step: args.step,
            };
            let counts = parse_counts("spheres", &args.spheres)?;
            let table = run_sweep(&scene, &spec, &counts)?;
            let csv = table.to_csv();
            match &args.output {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Example(args) => {
            if args.n < 1 {
                return Err(Error::Config("example needs --n >= 1".to_string()));
            }
            if !(args.spacing > 0.0) || !(args.side > 0.0) {
                return Err(Error::Config("spacing and side must be > 0".to_string()));
            }
            let scene = generate_example_scene(args.n, args.spacing, args.side);
            match &args.output {
                Some(path) => {
                    scene.save(path)?;
                    println!("scene {} written: {} obstacles", path.display(), args.n);
                }
                None => print!("{}", scene.to_json()),
            }
            Ok(())
        }
        Command::Collide(args) => {
            let a = VolumeFile::load(&args.a)?;
            let b = VolumeFile::load(&args.b)?;
            let margin = SafetyMargin::new(args.margin)?;
            let (distance, colliding) = collide(&a, &b, margin, args.tol, args.max_iter)?;
            println!("distance = {distance:.9}");
            println!("colliding = {colliding}");
            Ok(())
        }
    }
}

fn moving_box(scene: &CollisionScene, args: &SweepArgs) -> cloudbox::Result<cloudbox::bounding::Obb> {
    let mut obb = match scene.robot.first() {
        Some(v) => v.obb,
        None => cloudbox::bounding::Obb {
            center: Point3::ZERO,
            rotation: Mat3::IDENTITY,
            half_extents: [0.2, 0.2, 0.2],
        },
    };
    if let Some(c) = &args.moving_center {
        obb.center = parse_point("moving-center", c)?;
    }
    if let Some(he) = &args.moving_half_extents {
        let p = parse_point("moving-half-extents", he)?;
        obb = cloudbox::bounding::Obb {
            center: obb.center,
            rotation: Mat3::IDENTITY,
            half_extents: [p.x, p.y, p.z],
        };
    }
    let obb = quantize_obb(&obb);
    obb.validate()?;
    Ok(obb)
}

fn collide(
    a: &VolumeFile,
    b: &VolumeFile,
    margin: SafetyMargin,
    tol: f64,
    max_iter: usize,
) -> cloudbox::Result<(f64, bool)> {
    match (a, b) {
        (VolumeFile::Spheres(sa), VolumeFile::Spheres(sb)) => {
            let clearance = sphere_set_clearance(sa, sb, margin);
            Ok((clearance, clearance < 0.0))
        }
        (VolumeFile::Spheres(_), _) | (_, VolumeFile::Spheres(_)) => Err(Error::Config(
            "sphere volumes can only be collided with sphere volumes".to_string(),
        )),
        _ => {
            let pa = as_polytope(a);
            let pb = as_polytope(b);
            let r = gjk_query(&pa, &pb, tol, max_iter)?;
            let adjusted = r.distance - margin.delta;
            Ok((adjusted, r.colliding || adjusted < 0.0))
        }
    }
}

fn as_polytope(v: &VolumeFile) -> cloudbox::collision::ConvexPolytope {
    match v {
        VolumeFile::Box(obb) => obb_to_polytope(obb),
        VolumeFile::Polytope(p) => p.clone(),
        VolumeFile::Spheres(_) => unreachable!("handled by caller"),
    }
}
