//! End-to-end acceptance gate. Each test covers one release criterion and
//! prints a single PASS/FAIL line (visible with `--nocapture`) before
//! asserting, so a full run yields one line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use advscene::attention::{self, AttentionParams, FeatureMap, WindowSpec};
use advscene::degrade::{
    self, apply_fog, gamma_lut, DepthSource, FogParams, SynthesizeOptions, WeatherPreset,
};
use advscene::depth::{self, DepthMap};
use advscene::eval3d::{self, Box3D, Difficulty, EvalConfig};
use advscene::kitti_io::{self, CameraCalibration, ImageBuffer, LidarPoint, ObjectLabel3D, PointCloud};
use advscene::twin_depth::{self, LaplaceDepth};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "[{}] {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion}: {detail}");
}

fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> ImageBuffer {
    ImageBuffer {
        width: w,
        height: h,
        data: (0..w * h * 3).map(|_| rng.gen_range(0.0..=1.0)).collect(),
    }
}

#[test]
fn criterion_01_fog_limits() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = [0.85, 0.85, 0.85];
    let mut identity_ok = true;
    let mut worst_saturation: f64 = 0.0;
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(32..200), rng.gen_range(16..80));
        let image = random_image(&mut rng, w, h);
        let depth = DepthMap {
            width: w,
            height: h,
            values: (0..w * h).map(|_| rng.gen_range(1.0..120.0)).collect(),
        };

        // beta = 0: transmission is 1 everywhere, output bit-equals input.
        let clear = apply_fog(&image, &depth, &FogParams { beta: 0.0, atmospheric_light: a })
            .unwrap();
        identity_ok &= clear.data == image.data;

        // beta * depth >= 20: transmission below e^-20, output is A.
        let far_depth = DepthMap {
            width: w,
            height: h,
            values: (0..w * h).map(|_| rng.gen_range(40.0..120.0)).collect(),
        };
        let fogged =
            apply_fog(&image, &far_depth, &FogParams { beta: 0.5, atmospheric_light: a }).unwrap();
        for (i, &v) in fogged.data.iter().enumerate() {
            worst_saturation = worst_saturation.max((v - a[i % 3]).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "criterion 1 (fog limits)",
        identity_ok && worst_saturation < 1e-6 && elapsed < 5.0,
        &format!(
            "beta=0 bit-exact: {identity_ok}, saturation deviation {worst_saturation:.2e}, {elapsed:.2} s"
        ),
    );
}

#[test]
fn criterion_02_gamma_identity() {
    let lut = gamma_lut(1.0);
    let ok = (0..=255u8).all(|v| lut[v as usize] == v);
    report(
        "criterion 2 (gamma identity)",
        ok,
        "gamma=1 table maps every byte to itself",
    );
}

#[test]
fn criterion_03_twin_depth_fusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (d1, u1): (f64, f64) = (rng.gen_range(-80.0..80.0), rng.gen_range(0.001..20.0));
        let (d2, u2): (f64, f64) = (rng.gen_range(-80.0..80.0), rng.gen_range(0.001..20.0));
        let fused = twin_depth::fuse(
            LaplaceDepth { depth: d1, uncertainty: u1 },
            LaplaceDepth { depth: d2, uncertainty: u2 },
        );
        // Independent oracle: plain sum and root-sum-square via hypot.
        worst = worst
            .max((fused.depth - (d1 + d2)).abs())
            .max((fused.uncertainty - u1.hypot(u2)).abs());
    }
    let pyth = twin_depth::fuse(
        LaplaceDepth { depth: 1.0, uncertainty: 3.0 },
        LaplaceDepth { depth: 2.0, uncertainty: 4.0 },
    );
    report(
        "criterion 3 (twin-depth fusion)",
        worst < 1e-12 && pyth.uncertainty == 5.0,
        &format!(
            "10,000-pair max deviation {worst:.2e}, 3-4-5 uncertainty {}",
            pyth.uncertainty
        ),
    );
}

#[test]
fn criterion_04_loss_gradients_and_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let step = 1e-6;
    let mut worst_grad: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let d: f64 = rng.gen_range(-50.0..50.0);
        let gt: f64 = rng.gen_range(-50.0..50.0);
        let u: f64 = rng.gen_range(0.05..10.0);
        if (d - gt).abs() < 1e-3 {
            continue; // kink of |d - gt|
        }
        let f = |d: f64, u: f64| {
            twin_depth::instance_depth_loss(LaplaceDepth { depth: d, uncertainty: u }, gt)
                .unwrap()
                .0
        };
        let (_, gd, gu) =
            twin_depth::instance_depth_loss(LaplaceDepth { depth: d, uncertainty: u }, gt).unwrap();
        let fd_d = (f(d + step, u) - f(d - step, u)) / (2.0 * step);
        let fd_u = (f(d, u + step) - f(d, u - step)) / (2.0 * step);
        worst_grad = worst_grad
            .max((gd - fd_d).abs() / gd.abs().max(1.0))
            .max((gu - fd_u).abs() / gu.abs().max(1.0));
        n += 1;
    }

    // Golden-section sweep over the uncertainty for fixed error e. Near the
    // minimum the direct difference of two loss values drowns in rounding
    // noise, so the bracketing comparison uses a cancellation-free form of
    // loss(c) - loss(d), cross-checked against the real loss while the
    // bracket is still wide.
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut worst_min: f64 = 0.0;
    let mut comparator_ok = true;
    for e in [0.05, 0.3, 1.0, 4.0, 9.0] {
        let f = |u: f64| {
            twin_depth::instance_depth_loss(LaplaceDepth { depth: e, uncertainty: u }, 0.0)
                .unwrap()
                .0
        };
        let diff = |c: f64, d: f64| {
            std::f64::consts::SQRT_2 * e * (d - c) / (c * d) + ((c - d) / d).ln_1p()
        };
        let (mut a, mut b) = (1e-4f64, 100.0f64);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if b - a > 1e-3 {
                comparator_ok &= (diff(c, d) - (f(c) - f(d))).abs() < 1e-9;
            }
            if diff(c, d) < 0.0 {
                b = d;
            } else {
                a = c;
            }
        }
        let u_star = (a + b) / 2.0;
        worst_min = worst_min.max((u_star - std::f64::consts::SQRT_2 * e).abs());
    }
    report(
        "criterion 4 (depth loss gradients)",
        worst_grad < 1e-5 && worst_min < 1e-9 && comparator_ok,
        &format!(
            "gradient rel err {worst_grad:.2e}, minimizer err {worst_min:.2e}, comparator faithful: {comparator_ok}"
        ),
    );
}

/// True if the BEV point lies inside the rotated footprint of `b`.
fn in_footprint(b: &Box3D, x: f64, z: f64) -> bool {
    let (dx, dz) = (x - b.center.0, z - b.center.2);
    let (s, c) = b.rotation_y.sin_cos();
    let u = dx * c - dz * s;
    let v = dx * s + dz * c;
    u.abs() <= b.dims.2 / 2.0 && v.abs() <= b.dims.1 / 2.0
}

fn bev_aabb(b: &Box3D) -> (f64, f64, f64, f64) {
    let poly = eval3d::bev_polygon(b);
    let (mut x0, mut z0, mut x1, mut z1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for (x, z) in poly {
        x0 = x0.min(x);
        z0 = z0.min(z);
        x1 = x1.max(x);
        z1 = z1.max(z);
    }
    (x0, z0, x1, z1)
}

/// Rasterization oracle: counts 2000 x 2000 midpoint samples of the overlap
/// of the two axis-aligned bounds that fall inside both footprints, then
/// combines the estimated overlap area with the exact vertical overlap.
fn iou_3d_rasterized(a: &Box3D, b: &Box3D) -> f64 {
    const N: usize = 2000;
    let (ax0, az0, ax1, az1) = bev_aabb(a);
    let (bx0, bz0, bx1, bz1) = bev_aabb(b);
    let (x0, z0) = (ax0.max(bx0), az0.max(bz0));
    let (x1, z1) = (ax1.min(bx1), az1.min(bz1));
    let inter_area = if x1 <= x0 || z1 <= z0 {
        0.0
    } else {
        let (sx, sz) = ((x1 - x0) / N as f64, (z1 - z0) / N as f64);
        let mut count = 0u64;
        for i in 0..N {
            let x = x0 + (i as f64 + 0.5) * sx;
            for j in 0..N {
                let z = z0 + (j as f64 + 0.5) * sz;
                if in_footprint(a, x, z) && in_footprint(b, x, z) {
                    count += 1;
                }
            }
        }
        count as f64 / (N * N) as f64 * (x1 - x0) * (z1 - z0)
    };
    let y_overlap = (a.center.1.min(b.center.1)
        - (a.center.1 - a.dims.0).max(b.center.1 - b.dims.0))
        .max(0.0);
    let inter = inter_area * y_overlap;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 { 0.0 } else { inter / union }
}

#[test]
fn criterion_05_rotated_iou_vs_rasterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rand_box = |rng: &mut ChaCha8Rng| Box3D {
        center: (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-3.0..3.0),
        ),
        dims: (
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.5..3.0),
        ),
        rotation_y: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    };
    let mut pairs = Vec::with_capacity(1000);
    for i in 0..1000 {
        let a = rand_box(&mut rng);
        // Half the pairs are nearby perturbations so overlap is common.
        let b = if i % 2 == 0 {
            Box3D {
                center: (
                    a.center.0 + rng.gen_range(-1.0..1.0),
                    a.center.1 + rng.gen_range(-0.5..0.5),
                    a.center.2 + rng.gen_range(-1.0..1.0),
                ),
                dims: a.dims,
                rotation_y: a.rotation_y + rng.gen_range(-0.5..0.5),
            }
        } else {
            rand_box(&mut rng)
        };
        pairs.push((a, b));
    }
    let worst = pairs
        .par_iter()
        .map(|(a, b)| (eval3d::iou_3d(a, b) - iou_3d_rasterized(a, b)).abs())
        .reduce(|| 0.0, f64::max);

    let unit = |x: f64| Box3D {
        center: (x, 0.0, 0.0),
        dims: (1.0, 1.0, 1.0),
        rotation_y: 0.0,
    };
    let hand = eval3d::iou_3d(&unit(0.0), &unit(0.5));
    let hand_err = (hand - 1.0 / 3.0).abs();
    report(
        "criterion 5 (rotated IoU)",
        worst < 1e-3 && hand_err < 1e-9,
        &format!("1,000-pair max error {worst:.2e}, unit-offset case error {hand_err:.2e}"),
    );
}

fn car(location: (f64, f64, f64), score: Option<f64>) -> ObjectLabel3D {
    ObjectLabel3D {
        class_name: "Car".to_string(),
        truncation: 0.0,
        occlusion: 0,
        alpha: 0.0,
        bbox2d: (100.0, 100.0, 200.0, 180.0), // 80 px tall: easy tier
        dims: (1.5, 1.6, 3.9),
        location,
        rotation_y: 0.0,
        score,
    }
}

#[test]
fn criterion_06_ap_evaluator_fixtures() {
    let config = EvalConfig::car();
    let gt: BTreeMap<u64, Vec<ObjectLabel3D>> = BTreeMap::from([
        (0, vec![car((0.0, 1.0, 20.0), None)]),
        (1, vec![car((5.0, 1.0, 30.0), None)]),
    ]);

    // Perfect detector: predictions duplicate ground truth.
    let perfect: BTreeMap<u64, Vec<ObjectLabel3D>> = gt
        .iter()
        .map(|(&f, ls)| {
            (f, ls.iter().map(|l| {
                let mut p = l.clone();
                p.score = Some(0.9);
                p
            }).collect())
        })
        .collect();
    let r = eval3d::evaluate(&gt, &perfect, &config).unwrap();
    let perfect_ok = Difficulty::ALL.iter().all(|&d| r.get(d).ap == 100.0);

    // No predictions at all.
    let empty: BTreeMap<u64, Vec<ObjectLabel3D>> = gt.keys().map(|&f| (f, Vec::new())).collect();
    let r = eval3d::evaluate(&gt, &empty, &config).unwrap();
    let empty_ok = Difficulty::ALL.iter().all(|&d| r.get(d).ap == 0.0);

    // 2 GT, one matched (score 0.9), one far-off false positive (score 0.8):
    // recall caps at 1/2 with precision 1 up to the TP threshold, giving
    // exactly half of the 40 recall positions, AP = 50.
    let mixed: BTreeMap<u64, Vec<ObjectLabel3D>> = BTreeMap::from([
        (0, vec![car((0.0, 1.0, 20.0), Some(0.9))]),
        (1, vec![car((40.0, 1.0, 70.0), Some(0.8))]),
    ]);
    let r = eval3d::evaluate(&gt, &mixed, &config).unwrap();
    let half_ok = Difficulty::ALL.iter().all(|&d| r.get(d).ap == 50.0);

    report(
        "criterion 6 (AP evaluator)",
        perfect_ok && empty_ok && half_ok,
        &format!("perfect=100: {perfect_ok}, empty=0: {empty_ok}, 1-TP/1-FP=50: {half_ok}"),
    );
}

#[test]
fn criterion_07_attention_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Full-map window attention against the dense oracle (positional bias
    // zeroed; the dense oracle has no notion of window-relative offsets).
    let (m, c, heads) = (4usize, 8usize, 2usize);
    let mut params = AttentionParams::random(c, heads, m, 70);
    params.bias_table.iter_mut().for_each(|v| *v = 0.0);
    let map = FeatureMap {
        height: m,
        width: m,
        channels: c,
        values: (0..m * m * c).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let spec = WindowSpec { window_size: m, shift: 0 };
    let windows = attention::window_partition(&map, &spec).unwrap();
    let windowed = attention::window_attention(&windows[0], &params).unwrap();
    let dense = attention::dense_attention(&map.values, m * m, &params).unwrap();
    let dense_err = windowed
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    // Softmax rows sum to one.
    let (n, d) = (24usize, 6usize);
    let q: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let k: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let bias: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let weights = attention::attention_weights(&q, &k, n, n, d, Some(&bias));
    let row_err = (0..n)
        .map(|i| (weights[i * n..(i + 1) * n].iter().sum::<f64>() - 1.0).abs())
        .fold(0.0f64, f64::max);

    // window_reverse inverts window_partition for 50 random configurations.
    let mut identity_ok = true;
    for _ in 0..50 {
        let m = rng.gen_range(1..=5usize);
        let h = m * rng.gen_range(1..=4usize);
        let w = m * rng.gen_range(1..=4usize);
        let spec = WindowSpec { window_size: m, shift: rng.gen_range(0..m) };
        let c = rng.gen_range(1..=6usize);
        let map = FeatureMap {
            height: h,
            width: w,
            channels: c,
            values: (0..h * w * c).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let parts = attention::window_partition(&map, &spec).unwrap();
        identity_ok &= attention::window_reverse(&parts, &spec, h, w, c).unwrap() == map;
    }

    report(
        "criterion 7 (attention kernels)",
        dense_err < 1e-6 && row_err < 1e-6 && identity_ok,
        &format!(
            "window-vs-dense {dense_err:.2e}, softmax row {row_err:.2e}, partition identity: {identity_ok}"
        ),
    );
}

/// Writes a frame with a random image and a fully dense depth raster.
fn write_frame(root: &Path, id: u64, w: usize, h: usize, rng: &mut impl Rng) {
    let frame = kitti_io::frame_name(id);
    let image = random_image(rng, w, h);
    fs::write(
        root.join("image_2").join(format!("{frame}.png")),
        kitti_io::write_image(&image).unwrap(),
    )
    .unwrap();
    let dense = DepthMap {
        width: w,
        height: h,
        values: (0..w * h).map(|_| rng.gen_range(2.0..90.0)).collect(),
    };
    fs::write(
        root.join("depth").join(format!("{frame}.png")),
        depth::encode_depth(&dense).unwrap(),
    )
    .unwrap();
}

fn make_fixture(root: &Path, frames: u64, w: usize, h: usize, seed: u64) {
    for sub in ["image_2", "depth"] {
        fs::create_dir_all(root.join(sub)).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for id in 0..frames {
        write_frame(root, id, w, h, &mut rng);
    }
}

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, prefix: &str, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let name = format!("{prefix}/{}", path.file_name().unwrap().to_str().unwrap());
            if path.is_dir() {
                walk(&path, &name, out);
            } else {
                out.insert(name, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, "", &mut out);
    out
}

#[test]
fn criterion_08_determinism_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input");
    make_fixture(&input, 10, 1280, 384, 8);

    let mut opts = SynthesizeOptions::new(WeatherPreset::by_name("heavy_rain").unwrap(), 99);
    opts.depth_source = DepthSource::Files;

    let start = Instant::now();
    let run = |threads: usize, out: &Path| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| degrade::synthesize_dataset(&input, out, &opts).unwrap())
    };
    let out_a = dir.path().join("out_a");
    let out_b = dir.path().join("out_b");
    let m1 = run(1, &out_a);
    let elapsed = start.elapsed().as_secs_f64();
    let m2 = run(4, &out_b);

    let identical = tree_bytes(&out_a) == tree_bytes(&out_b);
    report(
        "criterion 8 (determinism and speed)",
        identical && m1 == m2 && m1.frame_count == 10 && elapsed < 10.0,
        &format!(
            "trees identical: {identical}, frames {}, single-thread run {elapsed:.2} s",
            m1.frame_count
        ),
    );
}

#[test]
fn criterion_09_dataset_scale_parity() {
    // Full-scale frame-count parity: the training split holds 7,481 frames
    // and every preset must emit exactly one degraded frame per input frame.
    // The count runs at the real frame count with small images; per-pixel
    // behavior is covered by the other criteria.
    const TRAIN_SPLIT_FRAMES: u64 = 7481;
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input");
    fs::create_dir_all(input.join("image_2")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let png = kitti_io::write_image(&random_image(&mut rng, 8, 8)).unwrap();
    for id in 0..TRAIN_SPLIT_FRAMES {
        fs::write(
            input.join("image_2").join(format!("{}.png", kitti_io::frame_name(id))),
            &png,
        )
        .unwrap();
    }
    let opts = SynthesizeOptions::new(WeatherPreset::by_name("low_light").unwrap(), 0);
    let out = dir.path().join("out_low_light");
    let manifest = degrade::synthesize_dataset(&input, &out, &opts).unwrap();
    let emitted = fs::read_dir(out.join("image_2")).unwrap().count() as u64;
    let full_ok = manifest.frame_count as u64 == TRAIN_SPLIT_FRAMES
        && manifest.skipped.is_empty()
        && emitted == TRAIN_SPLIT_FRAMES;

    // Every preset preserves the frame count on a depth-bearing fixture.
    let small = dir.path().join("small");
    make_fixture(&small, 5, 32, 16, 90);
    let mut preset_ok = true;
    for preset in WeatherPreset::all() {
        let name = preset.name;
        let mut opts = SynthesizeOptions::new(preset, 1);
        opts.depth_source = DepthSource::Files;
        let out = dir.path().join(format!("small_out_{name}"));
        let manifest = degrade::synthesize_dataset(&small, &out, &opts).unwrap();
        let emitted = fs::read_dir(out.join("image_2")).unwrap().count();
        preset_ok &= manifest.frame_count == 5 && manifest.skipped.is_empty() && emitted == 5;
    }

    report(
        "criterion 9 (dataset-scale parity)",
        full_ok && preset_ok,
        &format!(
            "{TRAIN_SPLIT_FRAMES}-frame split emitted {emitted} frames, all presets preserve counts: {preset_ok}"
        ),
    );
}

#[test]
fn criterion_10_depth_projection() {
    // Pinhole with f = 100, cx = 50, cy = 25; LiDAR frame equals the
    // rectified camera frame, so u = 100 x / z + 50, v = 100 y / z + 25.
    let ident3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let calib = CameraCalibration {
        p2: [
            [100.0, 0.0, 50.0, 0.0],
            [0.0, 100.0, 25.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ],
        r0_rect: ident3,
        tr_velo_to_cam: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ],
    };
    let pt = |x: f64, y: f64, z: f64| LidarPoint { x, y, z, reflectance: 0.0 };
    let cloud = PointCloud {
        points: vec![
            pt(1.0, 0.5, 10.0),   // (60, 30) depth 10
            pt(-2.0, 1.0, 20.0),  // (40, 30) depth 20
            pt(0.0, 0.0, 4.0),    // (50, 25) depth 4
            pt(0.0, 0.0, 8.0),    // (50, 25) depth 8: loses to the 4 m point
            pt(3.0, -1.0, 25.0),  // (62, 21) depth 25
            pt(1.2, 0.6, 2.0),    // (110, 55) outside the 100 x 50 image
            pt(0.0, 0.0, -5.0),   // behind the camera
            pt(0.0, 0.0, 0.05),   // closer than the minimum camera depth
        ],
        dropped_non_finite: 0,
    };
    let map = depth::project_lidar_to_depth(&cloud, &calib, 100, 50);
    let expected = [(60usize, 30usize, 10.0), (40, 30, 20.0), (50, 25, 4.0), (62, 21, 25.0)];
    let mut projection_ok = map.values.iter().filter(|&&v| v > 0.0).count() == expected.len();
    for (x, y, d) in expected {
        projection_ok &= map.get(x, y) == d;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dense = DepthMap {
        width: 64,
        height: 32,
        values: (0..64 * 32).map(|_| rng.gen_range(0.01..255.9)).collect(),
    };
    let decoded = depth::decode_depth(&depth::encode_depth(&dense).unwrap()).unwrap();
    let round_trip_err = dense
        .values
        .iter()
        .zip(&decoded.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    report(
        "criterion 10 (depth projection)",
        projection_ok && round_trip_err <= 1.0 / 512.0,
        &format!(
            "hand-computed pixels exact: {projection_ok}, encode round-trip {round_trip_err:.2e} m"
        ),
    );
}
