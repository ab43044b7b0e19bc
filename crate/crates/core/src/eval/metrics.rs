use serde::{Deserialize, Serialize};

use crate::error::{HetError, Result};
use crate::tracker::BoxI;

/// Real-valued box, upper-left origin, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxF {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoxF {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BoxF { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    /// Nearest integer box.
    pub fn round(&self) -> BoxI {
        BoxI::new(
            self.x.round() as i32,
            self.y.round() as i32,
            self.w.round().max(1.0) as u32,
            self.h.round().max(1.0) as u32,
        )
    }
}

impl From<BoxI> for BoxF {
    fn from(b: BoxI) -> Self {
        BoxF::new(b.x as f64, b.y as f64, b.w as f64, b.h as f64)
    }
}

/// Intersection over union.
pub fn overlap(a: &BoxF, b: &BoxF) -> Result<f64> {
    for bx in [a, b] {
        if !(bx.w > 0.0 && bx.h > 0.0) || !bx.is_finite() {
            return Err(HetError::Contract(format!("degenerate box {bx:?}")));
        }
    }
    // areas from edge coordinates so that overlap(a, a) is exactly 1
    let (ar, ab) = (a.x + a.w, a.y + a.h);
    let (br, bb) = (b.x + b.w, b.y + b.h);
    let iw = (ar.min(br) - a.x.max(b.x)).max(0.0);
    let ih = (ab.min(bb) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = (ar - a.x) * (ab - a.y) + (br - b.x) * (bb - b.y) - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Distance between box centers.
pub fn center_error(a: &BoxF, b: &BoxF) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

pub const PRECISION_THRESHOLDS: usize = 51;
pub const SUCCESS_THRESHOLDS: usize = 21;

/// Precision thresholds 0..=50 px.
pub fn precision_thresholds() -> Vec<f64> {
    (0..PRECISION_THRESHOLDS).map(|t| t as f64).collect()
}

/// Overlap thresholds 0, 0.05, ..., 1.
pub fn success_thresholds() -> Vec<f64> {
    (0..SUCCESS_THRESHOLDS).map(|t| t as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub center_errors: Vec<f64>,
    pub overlaps: Vec<f64>,
    /// `(threshold px, fraction of frames with center error <= threshold)`
    pub precision_curve: Vec<(f64, f64)>,
    /// `(threshold, fraction of frames with overlap >= threshold)`
    pub success_curve: Vec<(f64, f64)>,
    pub success_auc: f64,
    pub precision_at_20: f64,
}

impl MetricReport {
    /// Scores predicted boxes against ground truth, frame by frame.
    pub fn from_boxes(predicted: &[BoxF], truth: &[BoxF]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(HetError::Contract(format!(
                "{} predictions for {} ground-truth frames",
                predicted.len(),
                truth.len()
            )));
        }
        if predicted.is_empty() {
            return Err(HetError::Contract("no frames to evaluate".into()));
        }
        let mut center_errors = Vec::with_capacity(truth.len());
        let mut overlaps = Vec::with_capacity(truth.len());
        for (p, t) in predicted.iter().zip(truth) {
            center_errors.push(center_error(p, t));
            overlaps.push(overlap(p, t)?);
        }
        Ok(Self::from_frame_scores(center_errors, overlaps))
    }

    pub fn from_frame_scores(center_errors: Vec<f64>, overlaps: Vec<f64>) -> Self {
        let n = center_errors.len().max(1) as f64;
        let precision_curve: Vec<(f64, f64)> = precision_thresholds()
            .into_iter()
            .map(|t| (t, center_errors.iter().filter(|&&e| e <= t).count() as f64 / n))
            .collect();
        let success_curve: Vec<(f64, f64)> = success_thresholds()
            .into_iter()
            .map(|t| (t, overlaps.iter().filter(|&&o| o >= t).count() as f64 / n))
            .collect();
        let success_auc =
            success_curve.iter().map(|(_, v)| v).sum::<f64>() / success_curve.len() as f64;
        let precision_at_20 = precision_curve[20].1;
        MetricReport {
            center_errors,
            overlaps,
            precision_curve,
            success_curve,
            success_auc,
            precision_at_20,
        }
    }

    pub fn mean_center_error(&self) -> f64 {
        mean(&self.center_errors)
    }

    pub fn mean_overlap(&self) -> f64 {
        mean(&self.overlaps)
    }

    /// Whether both curves have the expected monotonicity.
    pub fn curves_are_monotone(&self) -> bool {
        self.precision_curve.windows(2).all(|w| w[1].1 >= w[0].1)
            && self.success_curve.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}
