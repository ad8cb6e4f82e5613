//! Command-line entry point wiring the toolkit together: depth projection,
//! adverse-weather dataset synthesis, detection evaluation, and the twin-depth
//! / attention kernel demos.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use advscene::degrade::{self, DepthSource, SynthesizeOptions, WeatherPreset};
use advscene::depth;
use advscene::eval3d::{self, Difficulty, EvalConfig};
use advscene::kitti_io;
use advscene::selftest;
use advscene::twin_depth::{self, LaplaceDepth};

#[derive(Parser)]
#[command(
    name = "advscene",
    version,
    about = "Adverse-weather KITTI synthesis, depth projection, and 3D detection scoring"
)]
struct Cli {
    /// Worker threads for frame-level parallelism (default: ADVSCENE_THREADS
    /// or all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DepthSourceArg {
    Lidar,
    Files,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade a KITTI dataset with one of the seven weather presets.
    Synthesize {
        /// KITTI input root (image_2/, calib/, velodyne/ or depth/).
        #[arg(long)]
        input: PathBuf,
        /// Output root; mirrors the input layout.
        #[arg(long)]
        output: PathBuf,
        /// Preset name: mod_fog, thick_fog, dense_fog, mod_rain, heavy_rain,
        /// dense_rain, low_light.
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where dense depth comes from: project LiDAR or read depth/ rasters.
        #[arg(long, value_enum, default_value = "lidar")]
        depth_source: DepthSourceArg,
        /// `key = value` parameter override file.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Densification search radius in pixels.
        #[arg(long, default_value_t = 50)]
        densify_radius: usize,
        /// Depth in meters for pixels beyond the densification radius.
        #[arg(long, default_value_t = depth::DEFAULT_FILL_DEPTH)]
        fill_depth: f64,
    },
    /// Project velodyne scans to 16-bit depth rasters.
    ProjectDepth {
        /// KITTI input root (image_2/, calib/, velodyne/).
        #[arg(long)]
        input: PathBuf,
        /// Directory receiving NNNNNN.png depth rasters.
        #[arg(long)]
        output: PathBuf,
        /// Densify with this pixel radius (0 keeps the projection sparse).
        #[arg(long, default_value_t = 0)]
        densify_radius: usize,
        #[arg(long, default_value_t = depth::DEFAULT_FILL_DEPTH)]
        fill_depth: f64,
    },
    /// Score predictions against ground truth with AP3D at 40 recall points.
    Evaluate {
        /// Directory of ground-truth label files (NNNNNN.txt).
        #[arg(long)]
        gt: PathBuf,
        /// Directory of 16-field prediction files (NNNNNN.txt).
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "Car")]
        class: String,
        #[arg(long, default_value_t = 0.7)]
        iou: f64,
        /// Optional `key = value` report file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fuse object and scene Laplace depth into the instance distribution.
    Fuse {
        #[arg(long)]
        obj_depth: f64,
        #[arg(long)]
        obj_unc: f64,
        #[arg(long)]
        sce_depth: f64,
        #[arg(long)]
        sce_unc: f64,
    },
    /// Evaluate the uncertainty-weighted instance depth loss and gradients.
    Loss {
        #[arg(long)]
        pred_depth: f64,
        #[arg(long)]
        pred_unc: f64,
        #[arg(long)]
        gt: f64,
    },
    /// Run the twin-depth and attention kernel invariant suites.
    KernelsSelftest,
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let threads = threads.or_else(|| {
        std::env::var("ADVSCENE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Synthesize {
            input,
            output,
            preset,
            seed,
            depth_source,
            params,
            densify_radius,
            fill_depth,
        } => {
            let mut preset = WeatherPreset::by_name(&preset)?;
            if let Some(path) = params {
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let overrides = degrade::parse_key_values(&text)?;
                preset.apply_overrides(&overrides)?;
            }
            let mut opts = SynthesizeOptions::new(preset, seed);
            opts.depth_source = match depth_source {
                DepthSourceArg::Lidar => DepthSource::Lidar,
                DepthSourceArg::Files => DepthSource::Files,
            };
            opts.densify_radius = densify_radius;
            opts.fill_depth = fill_depth;
            let manifest = degrade::synthesize_dataset(&input, &output, &opts)?;
            println!("{}", manifest.to_text().trim_end());
            if !manifest.skipped.is_empty() {
                eprintln!("{} frame(s) skipped; see manifest", manifest.skipped.len());
            }
            Ok(true)
        }
        Command::ProjectDepth {
            input,
            output,
            densify_radius,
            fill_depth,
        } => {
            fs::create_dir_all(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            let image_dir = input.join("image_2");
            let mut count = 0usize;
            for entry in fs::read_dir(&image_dir)
                .with_context(|| format!("reading {}", image_dir.display()))?
            {
                let path = entry?.path();
                let Some(frame) = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .filter(|_| path.extension().and_then(|e| e.to_str()) == Some("png"))
                else {
                    continue;
                };
                let frame = frame.to_string();
                let image = kitti_io::read_image(
                    &fs::read(&path).with_context(|| format!("reading {}", path.display()))?,
                )?;
                let calib_path = input.join("calib").join(format!("{frame}.txt"));
                let calib = kitti_io::parse_calib(
                    &fs::read_to_string(&calib_path)
                        .with_context(|| format!("reading {}", calib_path.display()))?,
                )?;
                let velo_path = input.join("velodyne").join(format!("{frame}.bin"));
                let cloud = kitti_io::read_point_cloud(
                    &fs::read(&velo_path)
                        .with_context(|| format!("reading {}", velo_path.display()))?,
                )?;
                let mut map =
                    depth::project_lidar_to_depth(&cloud, &calib, image.width, image.height);
                if densify_radius > 0 {
                    map = depth::densify(&map, densify_radius, fill_depth);
                }
                let out_path = output.join(format!("{frame}.png"));
                fs::write(&out_path, depth::encode_depth(&map)?)
                    .with_context(|| format!("writing {}", out_path.display()))?;
                count += 1;
            }
            println!("projected {count} frame(s)");
            Ok(true)
        }
        Command::Evaluate {
            gt,
            pred,
            class,
            iou,
            report,
        } => {
            let config = EvalConfig {
                class_name: class,
                iou_threshold: iou,
                dont_care_overlap: 0.5,
            };
            let gt_frames = load_label_dir(&gt)?;
            let pred_frames = load_label_dir(&pred)?;
            let result = eval3d::evaluate(&gt_frames, &pred_frames, &config)?;
            println!(
                "AP3D_R40 ({} @ IoU {:.2}, {} frames)",
                config.class_name,
                config.iou_threshold,
                gt_frames.len()
            );
            println!("{:<10} {:>10} {:>8}", "difficulty", "AP3D_R40", "gt");
            for d in Difficulty::ALL {
                let r = result.get(d);
                println!("{:<10} {:>10.4} {:>8}", d.name(), r.ap, r.gt_count);
            }
            if let Some(path) = report {
                let mut text = String::new();
                text.push_str(&format!("class = {}\n", config.class_name));
                text.push_str(&format!("iou_threshold = {}\n", config.iou_threshold));
                for d in Difficulty::ALL {
                    let r = result.get(d);
                    text.push_str(&format!("ap3d_r40.{} = {}\n", d.name(), r.ap));
                    text.push_str(&format!("gt_count.{} = {}\n", d.name(), r.gt_count));
                    for s in &r.samples {
                        text.push_str(&format!(
                            "pr.{}.{} = {} {}\n",
                            d.name(),
                            s.threshold,
                            s.recall,
                            s.precision
                        ));
                    }
                }
                fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(true)
        }
        Command::Fuse {
            obj_depth,
            obj_unc,
            sce_depth,
            sce_unc,
        } => {
            let fused = twin_depth::fuse(
                LaplaceDepth::new(obj_depth, obj_unc)?,
                LaplaceDepth::new(sce_depth, sce_unc)?,
            );
            println!("depth = {}", fused.depth);
            println!("uncertainty = {}", fused.uncertainty);
            Ok(true)
        }
        Command::Loss {
            pred_depth,
            pred_unc,
            gt,
        } => {
            let (value, d_depth, d_unc) =
                twin_depth::instance_depth_loss(LaplaceDepth::new(pred_depth, pred_unc)?, gt)?;
            println!("value = {value}");
            println!("d_value/d_depth = {d_depth}");
            println!("d_value/d_uncertainty = {d_unc}");
            Ok(true)
        }
        Command::KernelsSelftest => {
            let results = selftest::run_all();
            let mut all_ok = true;
            for r in &results {
                println!(
                    "{} {} ({})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
                all_ok &= r.passed;
            }
            Ok(all_ok)
        }
    }
}

fn load_label_dir(dir: &PathBuf) -> Result<BTreeMap<u64, Vec<kitti_io::ObjectLabel3D>>> {
    let mut frames = BTreeMap::new();
    for entry in
        fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?
    {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(id) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
        else {
            continue;
        };
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let labels = kitti_io::parse_labels(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        frames.insert(id, labels);
    }
    if frames.is_empty() {
        bail!("no label files found under {}", dir.display());
    }
    Ok(frames)
}

fn main() -> ExitCode {
    // Usage errors exit 2 (clap's default); --help/--version exit 0.
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
