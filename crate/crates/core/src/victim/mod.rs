//! Victim detectors.
//!
//! [`VictimModel`] is the interface the attack talks to: it detects boxes and
//! returns the disappearing loss together with its gradient with respect to
//! every input pixel. [`TinyDetector`] is the built-in differentiable
//! single-stage detector; [`surrogate`] holds closed-form victims used to
//! check the optimizer itself.

pub mod fd;
pub mod scenes;
pub mod surrogate;
mod tiny;
mod train;

pub use fd::finite_diff_grad;
pub use scenes::{designated_target, gen_scenes, Scene};
pub use tiny::{Candidate, TinyDetector, ANCHOR, CELL, GRID, INPUT_SIZE, NMS_IOU, SCORE_THRESHOLD};
pub use train::{clean_sdr, train_tiny, train_tiny_with, TrainConfig, TrainReport};

use serde::{Deserialize, Serialize};

use crate::attack::LossSpec;
use crate::contour::GroundTruth;
use crate::error::Result;
use crate::geom::{iou, BBox};
use crate::imagecore::Image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub objectness: f64,
    pub category: String,
}

/// Loss value and input gradient from one forward/backward pass.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub value: f64,
    /// Same `H x W x 3` layout as the input image.
    pub grad: Vec<f64>,
    /// Number of candidate boxes that contributed to the loss.
    pub matched: usize,
    /// Set when the loss has no gradient path to the input.
    pub dead: bool,
}

impl LossGrad {
    pub fn dead(value: f64, len: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; len],
            matched: 0,
            dead: true,
        }
    }
}

/// The detector under attack.
pub trait VictimModel: Send + Sync {
    /// Input size the model accepts, or `None` if any size works.
    fn input_dims(&self) -> Option<(usize, usize)>;

    /// Post-processed detections, sorted by objectness descending.
    fn detect(&self, x: &Image) -> Result<Vec<Detection>>;

    fn loss_and_grad(&self, x: &Image, gt: &GroundTruth, loss: &LossSpec) -> Result<LossGrad>;
}

/// Greedy non-maximum suppression. Input order decides priority, so callers
/// sort by objectness first. A box is dropped when its IoU with an already
/// kept box exceeds `threshold`.
pub fn nms(sorted: Vec<Detection>, threshold: f64) -> Vec<Detection> {
    let mut keep: Vec<Detection> = Vec::with_capacity(sorted.len());
    for det in sorted {
        if keep.iter().all(|k| iou(&k.bbox, &det.bbox) <= threshold) {
            keep.push(det);
        }
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(r: f64, c: f64, s: f64, p: f64) -> Detection {
        Detection {
            bbox: BBox::new(r, c, r + s, c + s),
            objectness: p,
            category: "object".into(),
        }
    }

    #[test]
    fn nms_suppresses_overlaps() {
        let dets = vec![
            det(0.0, 0.0, 10.0, 0.9),
            det(1.0, 1.0, 10.0, 0.8),
            det(30.0, 30.0, 10.0, 0.7),
        ];
        let kept = nms(dets, 0.5);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].objectness, 0.9);
        assert_eq!(kept[1].objectness, 0.7);
        assert!(nms(Vec::new(), 0.5).is_empty());
    }
}
