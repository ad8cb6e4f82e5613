//! Exit-code contract and end-to-end pipeline checks for the `advscene`
//! binary: depth projection, synthesis, and evaluation driven through argv.

use std::fs;
use std::path::Path;
use std::process::Command;

use advscene::kitti_io::{self, ObjectLabel3D};

const BIN: &str = env!("CARGO_BIN_EXE_advscene");

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn help_exits_zero() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("synthesize"));
}

#[test]
fn missing_required_flag_is_usage_error() {
    let (code, _, stderr) = run(&["synthesize", "--output", "/tmp/x", "--preset", "thick_fog"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--input"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let (code, _, stderr) = run(&["evaluate", "--no-such-flag"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--no-such-flag") || stderr.contains("unexpected"));
}

#[test]
fn unknown_preset_is_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(&[
        "synthesize",
        "--input",
        dir.path().to_str().unwrap(),
        "--output",
        dir.path().to_str().unwrap(),
        "--preset",
        "blizzard",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("blizzard"));
}

#[test]
fn fuse_and_loss_print_results() {
    let (code, stdout, _) = run(&[
        "fuse",
        "--obj-depth", "1.0",
        "--obj-unc", "3.0",
        "--sce-depth", "2.0",
        "--sce-unc", "4.0",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("depth = 3"));
    assert!(stdout.contains("uncertainty = 5"));

    let (code, stdout, _) = run(&[
        "loss",
        "--pred-depth", "10.0",
        "--pred-unc", "1.0",
        "--gt", "12.0",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("value = "));
    assert!(stdout.contains("d_value/d_depth = "));
}

#[test]
fn kernels_selftest_passes() {
    let (code, stdout, _) = run(&["kernels-selftest"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}

fn write_fixture(root: &Path, frames: u64) {
    for sub in ["image_2", "calib", "velodyne", "label_2"] {
        fs::create_dir_all(root.join(sub)).unwrap();
    }
    // Pinhole with f = 100, principal point (50, 25); LiDAR frame equals the
    // rectified camera frame.
    let calib = "\
P2: 100 0 50 0 0 100 25 0 0 0 1 0
R0_rect: 1 0 0 0 1 0 0 0 1
Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0
";
    for id in 0..frames {
        let frame = kitti_io::frame_name(id);
        let mut image = kitti_io::ImageBuffer::new(100, 50);
        for y in 0..50 {
            for x in 0..100 {
                image.set_pixel(x, y, [x as f64 / 99.0, y as f64 / 49.0, 0.5]);
            }
        }
        fs::write(
            root.join("image_2").join(format!("{frame}.png")),
            kitti_io::write_image(&image).unwrap(),
        )
        .unwrap();
        fs::write(root.join("calib").join(format!("{frame}.txt")), calib).unwrap();

        // A coarse grid of LiDAR points spanning the image at 8-40 m.
        let mut bin = Vec::new();
        for gy in 0..10 {
            for gx in 0..20 {
                let z = 8.0 + (gx + gy * 20) as f32 % 32.0;
                let x = (gx as f32 - 9.5) / 20.0 * z;
                let y = (gy as f32 - 4.5) / 20.0 * z;
                for v in [x, y, z, 0.0f32] {
                    bin.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        fs::write(root.join("velodyne").join(format!("{frame}.bin")), bin).unwrap();

        let label = ObjectLabel3D {
            class_name: "Car".to_string(),
            truncation: 0.0,
            occlusion: 0,
            alpha: 0.0,
            bbox2d: (10.0, 0.0, 60.0, 45.0),
            dims: (1.5, 1.6, 3.9),
            location: (id as f64, 1.0, 15.0),
            rotation_y: 0.1,
            score: None,
        };
        fs::write(
            root.join("label_2").join(format!("{frame}.txt")),
            kitti_io::write_labels(&[label]),
        )
        .unwrap();
    }
}

#[test]
fn pipeline_project_synthesize_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input");
    write_fixture(&input, 3);

    // LiDAR -> sparse depth rasters under input/depth.
    let (code, _, stderr) = run(&[
        "project-depth",
        "--input", input.to_str().unwrap(),
        "--output", input.join("depth").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "project-depth failed: {stderr}");

    // Degrade via the projected rasters.
    let output = dir.path().join("foggy");
    let (code, stdout, stderr) = run(&[
        "synthesize",
        "--input", input.to_str().unwrap(),
        "--output", output.to_str().unwrap(),
        "--preset", "thick_fog",
        "--seed", "11",
        "--depth-source", "files",
    ]);
    assert_eq!(code, 0, "synthesize failed: {stderr}");
    assert!(stdout.contains("frame_count = 3"));
    assert!(output.join("manifest.txt").is_file());

    // Perfect detector: ground truth plus a score, against copied labels.
    let pred = dir.path().join("pred");
    fs::create_dir_all(&pred).unwrap();
    for id in 0..3u64 {
        let frame = kitti_io::frame_name(id);
        let text = fs::read_to_string(output.join("label_2").join(format!("{frame}.txt"))).unwrap();
        let mut labels = kitti_io::parse_labels(&text).unwrap();
        for l in &mut labels {
            l.score = Some(0.9);
        }
        fs::write(pred.join(format!("{frame}.txt")), kitti_io::write_labels(&labels)).unwrap();
    }
    let report = dir.path().join("report.txt");
    let (code, stdout, stderr) = run(&[
        "evaluate",
        "--gt", output.join("label_2").to_str().unwrap(),
        "--pred", pred.to_str().unwrap(),
        "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "evaluate failed: {stderr}");
    assert!(stdout.contains("100.0000"), "expected perfect AP, got:\n{stdout}");
    let report_text = fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("ap3d_r40.easy = 100"));
}

#[test]
fn synthesize_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input");
    write_fixture(&input, 3);
    let mut trees = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out_{threads}"));
        let (code, _, stderr) = run(&[
            "synthesize",
            "--threads", threads,
            "--input", input.to_str().unwrap(),
            "--output", out.to_str().unwrap(),
            "--preset", "heavy_rain",
            "--seed", "5",
        ]);
        assert_eq!(code, 0, "synthesize failed: {stderr}");
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for sub in ["image_2", "calib", "label_2"] {
            let mut names: Vec<_> = fs::read_dir(out.join(sub))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            for p in names {
                files.push((
                    format!("{sub}/{}", p.file_name().unwrap().to_str().unwrap()),
                    fs::read(&p).unwrap(),
                ));
            }
        }
        files.push(("manifest.txt".into(), fs::read(out.join("manifest.txt")).unwrap()));
        trees.push(files);
    }
    assert_eq!(trees[0], trees[1]);
}
