//! Parsers and writers for the KITTI on-disk formats: label files, calibration
//! files, velodyne scans, and 8-bit RGB images.
//!
//! Directory layout convention: `image_2/NNNNNN.png`, `label_2/NNNNNN.txt`,
//! `calib/NNNNNN.txt`, `velodyne/NNNNNN.bin` with zero-padded 6-digit frame
//! ids. All parsers are pure functions of their input.

use std::io::Cursor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KittiError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("calibration key {0} missing")]
    MissingCalibKey(&'static str),
    #[error("calibration key {key}: expected {expected} values, got {got}")]
    CalibValueCount {
        key: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("point cloud byte length {0} is not a multiple of 16")]
    PointCloudLength(usize),
    #[error("image decode failed: {0}")]
    ImageDecode(String),
    #[error("image encode failed: {0}")]
    ImageEncode(String),
}

/// Rectified camera calibration extracted from a KITTI calib file.
///
/// `p2` projects rectified-camera points to pixels, `r0_rect` rectifies
/// camera-frame points, `tr_velo_to_cam` moves LiDAR points into the camera
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraCalibration {
    pub p2: [[f64; 4]; 3],
    pub r0_rect: [[f64; 3]; 3],
    pub tr_velo_to_cam: [[f64; 4]; 3],
}

impl CameraCalibration {
    /// Checks positive focal lengths and that `r0_rect` is orthonormal
    /// within 1e-3 on row dot products.
    pub fn validate(&self) -> Result<(), KittiError> {
        if self.p2[0][0] <= 0.0 || self.p2[1][1] <= 0.0 {
            return Err(KittiError::Parse {
                line: 0,
                msg: format!(
                    "non-positive focal lengths ({}, {})",
                    self.p2[0][0], self.p2[1][1]
                ),
            });
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| self.r0_rect[i][k] * self.r0_rect[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-3 {
                    return Err(KittiError::Parse {
                        line: 0,
                        msg: format!("R0_rect rows {i},{j} not orthonormal (dot = {dot})"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One KITTI object record. Ground-truth lines carry 15 fields; prediction
/// lines add a 16th confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectLabel3D {
    pub class_name: String,
    pub truncation: f64,
    pub occlusion: i32,
    pub alpha: f64,
    /// (left, top, right, bottom) in pixels.
    pub bbox2d: (f64, f64, f64, f64),
    /// (height, width, length) in meters.
    pub dims: (f64, f64, f64),
    /// 3D center (x, y, z) in the camera frame, meters. KITTI puts y at the
    /// bottom face of the box.
    pub location: (f64, f64, f64),
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl ObjectLabel3D {
    pub fn is_dont_care(&self) -> bool {
        self.class_name == "DontCare"
    }

    /// 2D box height in pixels; drives difficulty binning.
    pub fn bbox_height(&self) -> f64 {
        self.bbox2d.3 - self.bbox2d.1
    }
}

/// A single velodyne return: position in the LiDAR frame plus reflectance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub reflectance: f64,
}

/// A decoded velodyne scan. Non-finite records are rejected at load time and
/// counted in `dropped_non_finite`.
#[derive(Debug, Clone, Default)]
pub struct PointCloud {
    pub points: Vec<LidarPoint>,
    pub dropped_non_finite: usize,
}

/// H x W x 3 image with values normalized to [0, 1], row-major, interleaved
/// RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        ImageBuffer {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }
}

fn parse_field(tok: &str, line: usize, what: &str) -> Result<f64, KittiError> {
    tok.parse::<f64>().map_err(|_| KittiError::Parse {
        line,
        msg: format!("non-numeric {what} field {tok:?}"),
    })
}

/// Parses the contents of a KITTI label file. Lines are 15-field ground truth
/// or 16-field scored predictions; `DontCare` lines are retained with their
/// geometry stored as given.
pub fn parse_labels(text: &str) -> Result<Vec<ObjectLabel3D>, KittiError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if tok.len() != 15 && tok.len() != 16 {
            return Err(KittiError::Parse {
                line,
                msg: format!("expected 15 or 16 fields, got {}", tok.len()),
            });
        }
        let f = |i: usize, what: &str| parse_field(tok[i], line, what);
        let occlusion = tok[2].parse::<f64>().map_err(|_| KittiError::Parse {
            line,
            msg: format!("non-numeric occlusion field {:?}", tok[2]),
        })? as i32;
        let label = ObjectLabel3D {
            class_name: tok[0].to_string(),
            truncation: f(1, "truncation")?,
            occlusion,
            alpha: f(3, "alpha")?,
            bbox2d: (f(4, "bbox")?, f(5, "bbox")?, f(6, "bbox")?, f(7, "bbox")?),
            dims: (f(8, "dims")?, f(9, "dims")?, f(10, "dims")?),
            location: (f(11, "location")?, f(12, "location")?, f(13, "location")?),
            rotation_y: f(14, "rotation_y")?,
            score: if tok.len() == 16 {
                Some(f(15, "score")?)
            } else {
                None
            },
        };
        out.push(label);
    }
    Ok(out)
}

/// Formats label records back to KITTI text. Numeric fields use fixed
/// 2-decimal formatting for interoperability with external evaluators.
pub fn write_labels(records: &[ObjectLabel3D]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{} {:.2} {} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2}",
            r.class_name,
            r.truncation,
            r.occlusion,
            r.alpha,
            r.bbox2d.0,
            r.bbox2d.1,
            r.bbox2d.2,
            r.bbox2d.3,
            r.dims.0,
            r.dims.1,
            r.dims.2,
            r.location.0,
            r.location.1,
            r.location.2,
            r.rotation_y,
        ));
        if let Some(s) = r.score {
            out.push_str(&format!(" {s:.2}"));
        }
        out.push('\n');
    }
    out
}

fn calib_values(
    text: &str,
    key: &'static str,
    expected: usize,
) -> Result<Option<Vec<f64>>, KittiError> {
    for (idx, raw) in text.lines().enumerate() {
        let Some(rest) = raw.strip_prefix(key).and_then(|r| r.strip_prefix(':')) else {
            continue;
        };
        let vals: Result<Vec<f64>, _> = rest
            .split_whitespace()
            .map(|t| parse_field(t, idx + 1, key))
            .collect();
        let vals = vals?;
        if vals.len() != expected {
            return Err(KittiError::CalibValueCount {
                key,
                expected,
                got: vals.len(),
            });
        }
        return Ok(Some(vals));
    }
    Ok(None)
}

/// Parses a KITTI calib file. Requires `P2`, `R0_rect`, and `Tr_velo_to_cam`;
/// other keys are ignored.
pub fn parse_calib(text: &str) -> Result<CameraCalibration, KittiError> {
    let p2 = calib_values(text, "P2", 12)?.ok_or(KittiError::MissingCalibKey("P2"))?;
    let r0 = calib_values(text, "R0_rect", 9)?.ok_or(KittiError::MissingCalibKey("R0_rect"))?;
    let tr = calib_values(text, "Tr_velo_to_cam", 12)?
        .ok_or(KittiError::MissingCalibKey("Tr_velo_to_cam"))?;

    let row34 = |v: &[f64], r: usize| [v[r * 4], v[r * 4 + 1], v[r * 4 + 2], v[r * 4 + 3]];
    let row33 = |v: &[f64], r: usize| [v[r * 3], v[r * 3 + 1], v[r * 3 + 2]];
    Ok(CameraCalibration {
        p2: [row34(&p2, 0), row34(&p2, 1), row34(&p2, 2)],
        r0_rect: [row33(&r0, 0), row33(&r0, 1), row33(&r0, 2)],
        tr_velo_to_cam: [row34(&tr, 0), row34(&tr, 1), row34(&tr, 2)],
    })
}

/// Decodes a velodyne `.bin` payload: packed little-endian `f32` quadruples
/// (x, y, z, reflectance).
pub fn read_point_cloud(bytes: &[u8]) -> Result<PointCloud, KittiError> {
    if bytes.len() % 16 != 0 {
        return Err(KittiError::PointCloudLength(bytes.len()));
    }
    let mut cloud = PointCloud::default();
    for rec in bytes.chunks_exact(16) {
        let v: Vec<f32> = rec
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        if v.iter().all(|x| x.is_finite()) {
            cloud.points.push(LidarPoint {
                x: v[0] as f64,
                y: v[1] as f64,
                z: v[2] as f64,
                reflectance: v[3] as f64,
            });
        } else {
            cloud.dropped_non_finite += 1;
        }
    }
    Ok(cloud)
}

/// Decodes 8-bit RGB PNG bytes into a normalized image (byte v maps to
/// v / 255).
pub fn read_image(bytes: &[u8]) -> Result<ImageBuffer, KittiError> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| KittiError::ImageDecode(e.to_string()))?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
    Ok(ImageBuffer {
        width: w,
        height: h,
        data,
    })
}

/// Encodes a normalized image to PNG bytes (value x maps to round(x * 255)).
pub fn write_image(img: &ImageBuffer) -> Result<Vec<u8>, KittiError> {
    let bytes: Vec<u8> = img
        .data
        .iter()
        .map(|&x| (x * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    let rgb = image::RgbImage::from_raw(img.width as u32, img.height as u32, bytes)
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    rgb.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| KittiError::ImageEncode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Zero-padded 6-digit frame id used across the KITTI directory layout.
pub fn frame_name(id: u64) -> String {
    format!("{id:06}")
}
