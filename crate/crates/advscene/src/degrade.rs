//! Physically-modeled image degradation: depth-dependent fog, layered rain
//! streaks coupled with fog, and gamma low light, plus the seven-preset
//! dataset synthesizer.
//!
//! Degradation operates on normalized sRGB values in double precision. All
//! stochastic output is fully determined by (params, seed, dims) and is
//! independent of processing order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::depth::{self, DepthMap};
use crate::kitti_io::{self, ImageBuffer};

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error("depth map has missing pixels; densify before degradation")]
    MissingDepth,
    #[error("image {iw}x{ih} does not match depth {dw}x{dh}")]
    DimensionMismatch {
        iw: usize,
        ih: usize,
        dw: usize,
        dh: usize,
    },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("bad parameter override: {0}")]
    BadParam(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Kitti(#[from] kitti_io::KittiError),
    #[error(transparent)]
    Depth(#[from] depth::DepthError),
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> DegradeError {
    let context = context.into();
    move |source| DegradeError::Io { context, source }
}

/// Atmospheric scattering parameters: per-meter extinction `beta` and the
/// per-channel airlight `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogParams {
    pub beta: f64,
    pub atmospheric_light: [f64; 3],
}

/// Rain streak generator parameters. Streak angles are measured from the
/// vertical image axis; each of the `n_layers` additive layers draws
/// `streaks_per_layer` anti-aliased segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainParams {
    pub n_layers: usize,
    pub streaks_per_layer: usize,
    pub angle_mean: f64,
    pub angle_std: f64,
    pub length_range: (f64, f64),
    pub width_range: (f64, f64),
    pub intensity_range: (f64, f64),
    pub fog_coupling: FogParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowLightParams {
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetParams {
    Fog(FogParams),
    Rain(RainParams),
    LowLight(LowLightParams),
}

/// One of the seven named weather presets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherPreset {
    pub name: &'static str,
    pub params: PresetParams,
}

pub const PRESET_NAMES: [&str; 7] = [
    "mod_fog",
    "thick_fog",
    "dense_fog",
    "mod_rain",
    "heavy_rain",
    "dense_rain",
    "low_light",
];

const DEFAULT_AIRLIGHT: [f64; 3] = [0.85, 0.85, 0.85];

fn rain_preset(n_layers: usize, streaks_per_layer: usize, coupling_beta: f64) -> RainParams {
    RainParams {
        n_layers,
        streaks_per_layer,
        angle_mean: 0.12,
        angle_std: 0.05,
        length_range: (20.0, 40.0),
        width_range: (1.0, 2.5),
        intensity_range: (0.05, 0.15),
        fog_coupling: FogParams {
            beta: coupling_beta,
            atmospheric_light: DEFAULT_AIRLIGHT,
        },
    }
}

impl WeatherPreset {
    /// Looks a preset up by its canonical name.
    pub fn by_name(name: &str) -> Result<WeatherPreset, DegradeError> {
        let params = match name {
            "mod_fog" => PresetParams::Fog(FogParams {
                beta: 0.05,
                atmospheric_light: DEFAULT_AIRLIGHT,
            }),
            "thick_fog" => PresetParams::Fog(FogParams {
                beta: 0.10,
                atmospheric_light: DEFAULT_AIRLIGHT,
            }),
            "dense_fog" => PresetParams::Fog(FogParams {
                beta: 0.20,
                atmospheric_light: DEFAULT_AIRLIGHT,
            }),
            "mod_rain" => PresetParams::Rain(rain_preset(2, 400, 0.02)),
            "heavy_rain" => PresetParams::Rain(rain_preset(3, 800, 0.03)),
            "dense_rain" => PresetParams::Rain(rain_preset(4, 1500, 0.05)),
            "low_light" => PresetParams::LowLight(LowLightParams { gamma: 2.5 }),
            other => return Err(DegradeError::UnknownPreset(other.to_string())),
        };
        let name = PRESET_NAMES
            .iter()
            .find(|&&n| n == name)
            .expect("matched above");
        Ok(WeatherPreset { name, params })
    }

    pub fn all() -> Vec<WeatherPreset> {
        PRESET_NAMES
            .iter()
            .map(|n| WeatherPreset::by_name(n).expect("builtin"))
            .collect()
    }

    pub fn needs_depth(&self) -> bool {
        !matches!(self.params, PresetParams::LowLight(_))
    }

    /// Flat key/value view of all parameters, as recorded in the manifest.
    pub fn parameter_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let fog_entries = |m: &mut BTreeMap<String, String>, prefix: &str, f: &FogParams| {
            m.insert(format!("{prefix}beta"), format!("{}", f.beta));
            m.insert(
                format!("{prefix}atmospheric_light"),
                format!(
                    "{} {} {}",
                    f.atmospheric_light[0], f.atmospheric_light[1], f.atmospheric_light[2]
                ),
            );
        };
        match &self.params {
            PresetParams::Fog(f) => fog_entries(&mut m, "", f),
            PresetParams::Rain(r) => {
                m.insert("n_layers".into(), r.n_layers.to_string());
                m.insert("streaks_per_layer".into(), r.streaks_per_layer.to_string());
                m.insert("angle_mean".into(), r.angle_mean.to_string());
                m.insert("angle_std".into(), r.angle_std.to_string());
                m.insert("length_min".into(), r.length_range.0.to_string());
                m.insert("length_max".into(), r.length_range.1.to_string());
                m.insert("width_min".into(), r.width_range.0.to_string());
                m.insert("width_max".into(), r.width_range.1.to_string());
                m.insert("intensity_min".into(), r.intensity_range.0.to_string());
                m.insert("intensity_max".into(), r.intensity_range.1.to_string());
                fog_entries(&mut m, "coupling_", &r.fog_coupling);
            }
            PresetParams::LowLight(l) => {
                m.insert("gamma".into(), l.gamma.to_string());
            }
        }
        m
    }

    /// Applies `key = value` overrides to this preset's parameters. Unknown
    /// or inapplicable keys are errors.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, String>) -> Result<(), DegradeError> {
        let parse = |k: &str, v: &str| -> Result<f64, DegradeError> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| DegradeError::BadParam(format!("{k} = {v}")))
        };
        let parse_airlight = |k: &str, v: &str| -> Result<[f64; 3], DegradeError> {
            let vals: Result<Vec<f64>, _> = v.split_whitespace().map(|t| parse(k, t)).collect();
            match vals?.as_slice() {
                [g] => Ok([*g, *g, *g]),
                [r, g, b] => Ok([*r, *g, *b]),
                _ => Err(DegradeError::BadParam(format!("{k} = {v}"))),
            }
        };
        for (k, v) in overrides {
            match (&mut self.params, k.as_str()) {
                (PresetParams::Fog(f), "beta") => f.beta = parse(k, v)?,
                (PresetParams::Fog(f), "atmospheric_light") => {
                    f.atmospheric_light = parse_airlight(k, v)?
                }
                (PresetParams::Rain(r), "n_layers") => r.n_layers = parse(k, v)? as usize,
                (PresetParams::Rain(r), "streaks_per_layer") => {
                    r.streaks_per_layer = parse(k, v)? as usize
                }
                (PresetParams::Rain(r), "angle_mean") => r.angle_mean = parse(k, v)?,
                (PresetParams::Rain(r), "angle_std") => r.angle_std = parse(k, v)?,
                (PresetParams::Rain(r), "length_min") => r.length_range.0 = parse(k, v)?,
                (PresetParams::Rain(r), "length_max") => r.length_range.1 = parse(k, v)?,
                (PresetParams::Rain(r), "width_min") => r.width_range.0 = parse(k, v)?,
                (PresetParams::Rain(r), "width_max") => r.width_range.1 = parse(k, v)?,
                (PresetParams::Rain(r), "intensity_min") => r.intensity_range.0 = parse(k, v)?,
                (PresetParams::Rain(r), "intensity_max") => r.intensity_range.1 = parse(k, v)?,
                (PresetParams::Rain(r), "coupling_beta") => r.fog_coupling.beta = parse(k, v)?,
                (PresetParams::Rain(r), "coupling_atmospheric_light") => {
                    r.fog_coupling.atmospheric_light = parse_airlight(k, v)?
                }
                (PresetParams::LowLight(l), "gamma") => l.gamma = parse(k, v)?,
                _ => {
                    return Err(DegradeError::BadParam(format!(
                        "key {k:?} does not apply to preset {}",
                        self.name
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Parses the line-oriented `key = value` grammar used by parameter override
/// files and manifests. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, DegradeError> {
    let mut out = BTreeMap::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(DegradeError::BadParam(format!("expected `key = value`, got {line:?}")));
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Per-pixel transmission `T = exp(-beta * d)`.
pub fn transmission(depth: &DepthMap, beta: f64) -> Result<Vec<f64>, DegradeError> {
    if depth.has_missing() {
        return Err(DegradeError::MissingDepth);
    }
    Ok(depth.values.iter().map(|&d| (-beta * d).exp()).collect())
}

fn check_dims(image: &ImageBuffer, depth: &DepthMap) -> Result<(), DegradeError> {
    if image.width != depth.width || image.height != depth.height {
        return Err(DegradeError::DimensionMismatch {
            iw: image.width,
            ih: image.height,
            dw: depth.width,
            dh: depth.height,
        });
    }
    Ok(())
}

/// Fog composition `I = B*T + A*(1 - T)` per pixel and channel, clamped to
/// [0, 1].
pub fn apply_fog(
    image: &ImageBuffer,
    depth: &DepthMap,
    params: &FogParams,
) -> Result<ImageBuffer, DegradeError> {
    check_dims(image, depth)?;
    let t = transmission(depth, params.beta)?;
    let mut out = image.clone();
    for (i, &tv) in t.iter().enumerate() {
        for c in 0..3 {
            let b = image.data[i * 3 + c];
            let a = params.atmospheric_light[c];
            out.data[i * 3 + c] = (b * tv + a * (1.0 - tv)).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Distance from a point to a line segment.
fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn draw_streak(
    layer: &mut [f64],
    width: usize,
    height: usize,
    cx: f64,
    cy: f64,
    angle: f64,
    length: f64,
    streak_width: f64,
    intensity: f64,
) {
    // Angle from the vertical (downward) axis.
    let (dx, dy) = (angle.sin(), angle.cos());
    let (ax, ay) = (cx - dx * length / 2.0, cy - dy * length / 2.0);
    let (bx, by) = (cx + dx * length / 2.0, cy + dy * length / 2.0);
    let margin = streak_width / 2.0 + 1.0;
    let x0 = ((ax.min(bx) - margin).floor().max(0.0)) as usize;
    let x1 = ((ax.max(bx) + margin).ceil().min(width as f64 - 1.0)) as usize;
    let y0 = ((ay.min(by) - margin).floor().max(0.0)) as usize;
    let y1 = ((ay.max(by) + margin).ceil().min(height as f64 - 1.0)) as usize;
    if ax.max(bx) + margin < 0.0 || ay.max(by) + margin < 0.0 {
        return;
    }
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = segment_distance(x as f64 + 0.5, y as f64 + 0.5, ax, ay, bx, by);
            // Anti-aliased coverage: full inside the half-width, linear
            // falloff over one pixel.
            let cov = (streak_width / 2.0 + 0.5 - d).clamp(0.0, 1.0);
            if cov > 0.0 {
                layer[y * width + x] += cov * intensity;
            }
        }
    }
}

/// Renders the `n_layers` additive rain streak maps. Bit-identical output for
/// identical (params, seed, dims).
pub fn render_rain_layers(
    width: usize,
    height: usize,
    params: &RainParams,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut layers = Vec::with_capacity(params.n_layers);
    for layer_idx in 0..params.n_layers {
        let mut layer = vec![0.0; width * height];
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(layer_idx as u64)));
        let angle_dist = Normal::new(params.angle_mean, params.angle_std)
            .unwrap_or_else(|_| Normal::new(params.angle_mean, 0.0).unwrap());
        let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.gen_range(lo..hi)
            } else {
                lo
            }
        };
        for _ in 0..params.streaks_per_layer {
            let cx = rng.gen_range(0.0..width as f64);
            let cy = rng.gen_range(0.0..height as f64);
            let angle = angle_dist.sample(&mut rng);
            let length = uniform(&mut rng, params.length_range);
            let sw = uniform(&mut rng, params.width_range);
            let intensity = uniform(&mut rng, params.intensity_range);
            draw_streak(&mut layer, width, height, cx, cy, angle, length, sw, intensity);
        }
        layers.push(layer);
    }
    layers
}

/// Rain composition `I = T*(B + sum R_i) + (1 - T)*A`, clamped to [0, 1].
/// `T` and `A` come from the rain parameters' fog coupling.
pub fn apply_rain(
    image: &ImageBuffer,
    depth: &DepthMap,
    params: &RainParams,
    seed: u64,
) -> Result<ImageBuffer, DegradeError> {
    check_dims(image, depth)?;
    let t = transmission(depth, params.fog_coupling.beta)?;
    let layers = render_rain_layers(image.width, image.height, params, seed);
    let mut out = image.clone();
    for (i, &tv) in t.iter().enumerate() {
        let streak: f64 = layers.iter().map(|l| l[i]).sum();
        for c in 0..3 {
            let b = image.data[i * 3 + c];
            let a = params.fog_coupling.atmospheric_light[c];
            out.data[i * 3 + c] = (tv * (b + streak) + (1.0 - tv) * a).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// The 256-entry gamma lookup table on 8-bit values:
/// `lut[v] = round(255 * (v/255)^gamma)`.
pub fn gamma_lut(gamma: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        *out = (255.0 * (v as f64 / 255.0).powf(gamma)).round().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Gamma low light via the 8-bit lookup table: each channel is quantized to
/// a byte, mapped through `lut`, and renormalized.
pub fn apply_low_light(image: &ImageBuffer, params: &LowLightParams) -> ImageBuffer {
    let lut = gamma_lut(params.gamma);
    let mut out = image.clone();
    for v in &mut out.data {
        let byte = (*v * 255.0).round().clamp(0.0, 255.0) as usize;
        *v = lut[byte] as f64 / 255.0;
    }
    out
}

/// One step of the splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-frame RNG seed derived from the global seed and the frame id, so that
/// output is independent of processing order.
pub fn frame_seed(global_seed: u64, frame_id: u64) -> u64 {
    splitmix64(global_seed ^ splitmix64(frame_id))
}

/// Where the dense per-pixel depth driving the scattering model comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthSource {
    /// Project `velodyne/*.bin` through `calib/*.txt`, then densify.
    Lidar,
    /// Read pre-computed 16-bit rasters from `depth/*.png`, densifying if
    /// they still contain missing pixels.
    Files,
}

#[derive(Debug, Clone)]
pub struct SynthesizeOptions {
    pub preset: WeatherPreset,
    pub seed: u64,
    pub depth_source: DepthSource,
    /// Nearest-neighbor search radius for densification, pixels.
    pub densify_radius: usize,
    /// Depth assigned where densification finds no neighbor, meters.
    pub fill_depth: f64,
}

impl SynthesizeOptions {
    pub fn new(preset: WeatherPreset, seed: u64) -> Self {
        SynthesizeOptions {
            preset,
            seed,
            depth_source: DepthSource::Lidar,
            densify_radius: 50,
            fill_depth: depth::DEFAULT_FILL_DEPTH,
        }
    }
}

/// Synthesis record: preset, full parameter set, global seed, and per-frame
/// outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub preset: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub frame_count: usize,
    pub skipped: Vec<(String, String)>,
}

impl Manifest {
    /// Serializes to the line-oriented `key = value` format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("preset = {}\n", self.preset));
        out.push_str(&format!("seed = {}\n", self.seed));
        for (k, v) in &self.parameters {
            out.push_str(&format!("param.{k} = {v}\n"));
        }
        out.push_str(&format!("frame_count = {}\n", self.frame_count));
        for (frame, reason) in &self.skipped {
            out.push_str(&format!("skipped.{frame} = {reason}\n"));
        }
        out
    }
}

fn list_frames(image_dir: &Path) -> Result<Vec<u64>, DegradeError> {
    let entries = fs::read_dir(image_dir)
        .map_err(io_err(format!("reading {}", image_dir.display())))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(io_err("reading image directory entry"))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        if let Some(id) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
        {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

fn load_dense_depth(
    input_root: &Path,
    frame: &str,
    width: usize,
    height: usize,
    opts: &SynthesizeOptions,
) -> Result<DepthMap, String> {
    let sparse = match opts.depth_source {
        DepthSource::Lidar => {
            let calib_path = input_root.join("calib").join(format!("{frame}.txt"));
            let velo_path = input_root.join("velodyne").join(format!("{frame}.bin"));
            let calib_text =
                fs::read_to_string(&calib_path).map_err(|e| format!("calib: {e}"))?;
            let calib = kitti_io::parse_calib(&calib_text).map_err(|e| format!("calib: {e}"))?;
            let bytes = fs::read(&velo_path).map_err(|e| format!("velodyne: {e}"))?;
            let cloud = kitti_io::read_point_cloud(&bytes).map_err(|e| format!("velodyne: {e}"))?;
            depth::project_lidar_to_depth(&cloud, &calib, width, height)
        }
        DepthSource::Files => {
            let depth_path = input_root.join("depth").join(format!("{frame}.png"));
            let bytes = fs::read(&depth_path).map_err(|e| format!("depth: {e}"))?;
            let map = depth::decode_depth(&bytes).map_err(|e| format!("depth: {e}"))?;
            if map.width != width || map.height != height {
                return Err(format!(
                    "depth: raster {}x{} does not match image {width}x{height}",
                    map.width, map.height
                ));
            }
            map
        }
    };
    if sparse.has_missing() {
        Ok(depth::densify(&sparse, opts.densify_radius, opts.fill_depth))
    } else {
        Ok(sparse)
    }
}

fn degrade_frame(
    input_root: &Path,
    output_root: &Path,
    frame_id: u64,
    opts: &SynthesizeOptions,
) -> Result<Result<(), String>, DegradeError> {
    let frame = kitti_io::frame_name(frame_id);
    let image_path = input_root.join("image_2").join(format!("{frame}.png"));
    let bytes = match fs::read(&image_path) {
        Ok(b) => b,
        Err(e) => return Ok(Err(format!("image: {e}"))),
    };
    let image = match kitti_io::read_image(&bytes) {
        Ok(i) => i,
        Err(e) => return Ok(Err(format!("image: {e}"))),
    };

    let degraded = match &opts.preset.params {
        PresetParams::Fog(p) => {
            let dense = match load_dense_depth(input_root, &frame, image.width, image.height, opts)
            {
                Ok(d) => d,
                Err(e) => return Ok(Err(e)),
            };
            apply_fog(&image, &dense, p)?
        }
        PresetParams::Rain(p) => {
            let dense = match load_dense_depth(input_root, &frame, image.width, image.height, opts)
            {
                Ok(d) => d,
                Err(e) => return Ok(Err(e)),
            };
            apply_rain(&image, &dense, p, frame_seed(opts.seed, frame_id))?
        }
        PresetParams::LowLight(p) => apply_low_light(&image, p),
    };

    let out_image = output_root.join("image_2").join(format!("{frame}.png"));
    let png = kitti_io::write_image(&degraded)?;
    fs::write(&out_image, png).map_err(io_err(format!("writing {}", out_image.display())))?;

    // Labels and calib pass through unchanged when present.
    for sub in ["label_2", "calib"] {
        let src = input_root.join(sub).join(format!("{frame}.txt"));
        if src.is_file() {
            let dst = output_root.join(sub).join(format!("{frame}.txt"));
            fs::copy(&src, &dst).map_err(io_err(format!("copying {}", src.display())))?;
        }
    }
    Ok(Ok(()))
}

/// Degrades every frame under `input_root` with the preset and mirrors the
/// KITTI layout into `output_root`. Frames with missing required inputs are
/// skipped and recorded in the manifest; I/O failures on outputs abort.
pub fn synthesize_dataset(
    input_root: &Path,
    output_root: &Path,
    opts: &SynthesizeOptions,
) -> Result<Manifest, DegradeError> {
    let frames = list_frames(&input_root.join("image_2"))?;
    for sub in ["image_2", "label_2", "calib"] {
        let dir = output_root.join(sub);
        fs::create_dir_all(&dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }

    let results: Vec<(u64, Result<Result<(), String>, DegradeError>)> = frames
        .par_iter()
        .map(|&id| (id, degrade_frame(input_root, output_root, id, opts)))
        .collect();

    let mut manifest = Manifest {
        preset: opts.preset.name.to_string(),
        seed: opts.seed,
        parameters: opts.preset.parameter_map(),
        frame_count: 0,
        skipped: Vec::new(),
    };
    for (id, res) in results {
        match res? {
            Ok(()) => manifest.frame_count += 1,
            Err(reason) => manifest.skipped.push((kitti_io::frame_name(id), reason)),
        }
    }

    let manifest_path = output_root.join("manifest.txt");
    fs::write(&manifest_path, manifest.to_text())
        .map_err(io_err(format!("writing {}", manifest_path.display())))?;
    Ok(manifest)
}
