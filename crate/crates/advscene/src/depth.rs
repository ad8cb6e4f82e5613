//! Per-pixel scene depth: LiDAR-to-camera projection, nearest-neighbor
//! densification, and the 16-bit depth raster encoding (meters x 256, 0 means
//! missing).

use std::io::Cursor;

use thiserror::Error;

use crate::kitti_io::{CameraCalibration, PointCloud};

/// Points closer than this to the image plane are discarded before
/// projection.
pub const MIN_CAMERA_DEPTH: f64 = 0.1;

/// Default far-field depth used when densification finds no neighbor.
pub const DEFAULT_FILL_DEPTH: f64 = 80.0;

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("depth map has missing pixels; densify before use")]
    MissingPixels,
    #[error("depth {0} m exceeds the 16-bit encoding range (< 256 m)")]
    EncodingOverflow(f64),
    #[error("depth raster decode failed: {0}")]
    Decode(String),
    #[error("depth raster encode failed: {0}")]
    Encode(String),
}

/// H x W depth in meters. Values <= 0 mean "no depth at this pixel".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn empty(width: usize, height: usize) -> Self {
        DepthMap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Self {
        DepthMap {
            width,
            height,
            values: vec![depth; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, depth: f64) {
        self.values[y * self.width + x] = depth;
    }

    #[inline]
    pub fn is_present(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|&v| v <= 0.0)
    }
}

/// Applies a 3x4 affine transform to a point.
#[inline]
fn apply34(m: &[[f64; 4]; 3], p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * p[0] + row[1] * p[1] + row[2] * p[2] + row[3];
    }
    out
}

#[inline]
fn apply33(m: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
    }
    out
}

/// Transforms one LiDAR point into the rectified camera frame.
pub fn lidar_to_rect(calib: &CameraCalibration, p: [f64; 3]) -> [f64; 3] {
    apply33(&calib.r0_rect, apply34(&calib.tr_velo_to_cam, p))
}

/// Projects a rectified-camera point to sub-pixel image coordinates and its
/// projective depth. Returns `None` for points at or behind the image plane.
pub fn project_rect_to_pixel(calib: &CameraCalibration, p: [f64; 3]) -> Option<(f64, f64, f64)> {
    let h = apply34(&calib.p2, p);
    if h[2] <= 0.0 {
        return None;
    }
    Some((h[0] / h[2], h[1] / h[2], h[2]))
}

/// Projects a LiDAR scan into a sparse depth map.
///
/// Each point is moved LiDAR -> camera -> rectified frame and projected
/// through P2. Points with camera depth below [`MIN_CAMERA_DEPTH`] or landing
/// outside the image are discarded; when several points hit one pixel the
/// smallest depth wins.
pub fn project_lidar_to_depth(
    cloud: &PointCloud,
    calib: &CameraCalibration,
    width: usize,
    height: usize,
) -> DepthMap {
    let mut map = DepthMap::empty(width, height);
    for pt in &cloud.points {
        let rect = lidar_to_rect(calib, [pt.x, pt.y, pt.z]);
        let Some((u, v, z)) = project_rect_to_pixel(calib, rect) else {
            continue;
        };
        if z <= MIN_CAMERA_DEPTH {
            continue;
        }
        let (x, y) = (u.round(), v.round());
        if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
            continue;
        }
        let (x, y) = (x as usize, y as usize);
        let cur = map.get(x, y);
        if cur <= 0.0 || z < cur {
            map.set(x, y, z);
        }
    }
    map
}

/// Fills missing pixels from the nearest present pixel (Euclidean pixel
/// distance) within `max_radius`; ties go to the candidate with the smaller
/// row, then smaller column. Pixels with no neighbor in range take
/// `fill_value`. Present pixels are untouched.
pub fn densify(sparse: &DepthMap, max_radius: usize, fill_value: f64) -> DepthMap {
    let (w, h) = (sparse.width, sparse.height);
    // Sorted column indices of present pixels per row, for nearest-column
    // lookup via binary search.
    let mut present_cols: Vec<Vec<usize>> = vec![Vec::new(); h];
    for y in 0..h {
        for x in 0..w {
            if sparse.is_present(x, y) {
                present_cols[y].push(x);
            }
        }
    }

    let r2_max = (max_radius * max_radius) as i64;
    let mut out = sparse.clone();
    for y in 0..h {
        for x in 0..w {
            if sparse.is_present(x, y) {
                continue;
            }
            // Best candidate as (dist2, row, col); rows scanned top to
            // bottom so equal-distance later rows never displace an earlier
            // hit, matching the scanline tie-break.
            let mut best: Option<(i64, usize, usize)> = None;
            let y_lo = y.saturating_sub(max_radius);
            let y_hi = (y + max_radius).min(h.saturating_sub(1));
            for cy in y_lo..=y_hi {
                let cols = &present_cols[cy];
                if cols.is_empty() {
                    continue;
                }
                let dy = cy as i64 - y as i64;
                let dy2 = dy * dy;
                if let Some((bd, _, _)) = best {
                    if dy2 > bd {
                        continue;
                    }
                }
                // Nearest present column; on equidistant columns prefer the
                // smaller one.
                let idx = cols.partition_point(|&c| c < x);
                let mut row_best: Option<(i64, usize)> = None;
                if idx > 0 {
                    let c = cols[idx - 1];
                    let dx = x as i64 - c as i64;
                    row_best = Some((dx * dx, c));
                }
                if idx < cols.len() {
                    let c = cols[idx];
                    let dx = c as i64 - x as i64;
                    let d2 = dx * dx;
                    if row_best.map_or(true, |(bd, _)| d2 < bd) {
                        row_best = Some((d2, c));
                    }
                }
                let (dx2, cx) = row_best.unwrap();
                let d2 = dy2 + dx2;
                if d2 > r2_max {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bd, _, _)) => d2 < bd,
                };
                if better {
                    best = Some((d2, cy, cx));
                }
            }
            let depth = match best {
                Some((_, cy, cx)) => sparse.get(cx, cy),
                None => fill_value,
            };
            out.set(x, y, depth);
        }
    }
    out
}

/// Encodes a depth map as a 16-bit grayscale PNG: stored value is
/// round(meters x 256), with 0 reserved for missing pixels.
pub fn encode_depth(map: &DepthMap) -> Result<Vec<u8>, DepthError> {
    let mut raw = Vec::with_capacity(map.values.len());
    for &v in &map.values {
        if v <= 0.0 {
            raw.push(0u16);
        } else if v >= 256.0 {
            return Err(DepthError::EncodingOverflow(v));
        } else {
            raw.push((v * 256.0).round() as u16);
        }
    }
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(
        map.width as u32,
        map.height as u32,
        raw,
    )
    .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| DepthError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// Inverse of [`encode_depth`]: stored value v decodes to v / 256 meters,
/// 0 decodes to missing.
pub fn decode_depth(bytes: &[u8]) -> Result<DepthMap, DepthError> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| DepthError::Decode(e.to_string()))?
        .into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = img.as_raw().iter().map(|&v| v as f64 / 256.0).collect();
    Ok(DepthMap {
        width: w,
        height: h,
        values,
    })
}
