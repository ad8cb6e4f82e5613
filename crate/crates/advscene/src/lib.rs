//! Adverse-weather toolkit for KITTI-format driving data.
//!
//! The crate turns clean KITTI frames into physically-modeled fog, rain, and
//! low-light datasets, projects LiDAR scans into per-pixel depth, implements
//! the twin-depth Laplace fusion and loss kernels with analytic gradients,
//! provides forward-only windowed-attention kernels, and scores 3D detections
//! with the AP3D R40 protocol (rotated-box IoU, easy/moderate/hard binning).

pub mod attention;
pub mod degrade;
pub mod depth;
pub mod eval3d;
pub mod kitti_io;
pub mod selftest;
pub mod twin_depth;
