//! Twin-depth kernels: Laplace fusion of object and scene depth, depth-target
//! decoupling, and the loss functions with analytic gradients.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TwinDepthError {
    #[error("uncertainty must be positive, got {0}")]
    NonPositiveUncertainty(f64),
    #[error("non-finite loss component {0}")]
    NonFiniteComponent(&'static str),
}

/// A Laplace-distributed depth estimate: mean in meters and a positive scale
/// (uncertainty) in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceDepth {
    pub depth: f64,
    pub uncertainty: f64,
}

impl LaplaceDepth {
    pub fn new(depth: f64, uncertainty: f64) -> Result<Self, TwinDepthError> {
        if !(uncertainty > 0.0) {
            return Err(TwinDepthError::NonPositiveUncertainty(uncertainty));
        }
        Ok(LaplaceDepth { depth, uncertainty })
    }
}

/// Component losses of the overall objective; `l_dins` may be negative
/// through its log term, the rest are non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_h: f64,
    pub l_o2d: f64,
    pub l_s2d: f64,
    pub l_s3d: f64,
    pub l_theta: f64,
    pub l_o3d: f64,
    pub l_dins: f64,
}

impl LossBreakdown {
    fn components(&self) -> [(&'static str, f64); 7] {
        [
            ("l_h", self.l_h),
            ("l_o2d", self.l_o2d),
            ("l_s2d", self.l_s2d),
            ("l_s3d", self.l_s3d),
            ("l_theta", self.l_theta),
            ("l_o3d", self.l_o3d),
            ("l_dins", self.l_dins),
        ]
    }
}

/// Fuses object and scene depth into the instance depth distribution:
/// means add, uncertainties combine as the root of the sum of squares.
pub fn fuse(obj: LaplaceDepth, sce: LaplaceDepth) -> LaplaceDepth {
    LaplaceDepth {
        depth: obj.depth + sce.depth,
        uncertainty: (obj.uncertainty * obj.uncertainty + sce.uncertainty * sce.uncertainty)
            .sqrt(),
    }
}

/// Derives the object-depth supervision target from the instance-depth label
/// and the LiDAR scene depth at the object: `instance - scene`.
pub fn split_depth_targets(instance_gt: f64, scene_gt: f64) -> f64 {
    instance_gt - scene_gt
}

/// Smooth L1: `0.5 e^2` for |e| < 1, `|e| - 0.5` otherwise. Returns the value
/// and its derivative (`e` on the quadratic branch, `sign(e)` beyond).
pub fn smooth_l1(e: f64) -> (f64, f64) {
    if e.abs() < 1.0 {
        (0.5 * e * e, e)
    } else {
        (e.abs() - 0.5, e.signum())
    }
}

/// Uncertainty-weighted instance depth loss
/// `(sqrt(2)/u) * |d - gt| + ln(u)` with analytic gradients in `d` and `u`.
///
/// At the |d - gt| kink the depth gradient uses the subgradient sign(0) = 0.
pub fn instance_depth_loss(
    pred: LaplaceDepth,
    gt: f64,
) -> Result<(f64, f64, f64), TwinDepthError> {
    let u = pred.uncertainty;
    if !(u > 0.0) {
        return Err(TwinDepthError::NonPositiveUncertainty(u));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let err = pred.depth - gt;
    let value = sqrt2 / u * err.abs() + u.ln();
    let sign = if err == 0.0 { 0.0 } else { err.signum() };
    let d_depth = sqrt2 / u * sign;
    let d_unc = -sqrt2 / (u * u) * err.abs() + 1.0 / u;
    Ok((value, d_depth, d_unc))
}

/// Sums the seven loss components with unit weights.
pub fn total_loss(parts: &LossBreakdown) -> Result<f64, TwinDepthError> {
    let mut sum = 0.0;
    for (name, v) in parts.components() {
        if !v.is_finite() {
            return Err(TwinDepthError::NonFiniteComponent(name));
        }
        sum += v;
    }
    Ok(sum)
}
