//! Closed-form victims. Their objectives have known optima, which makes them
//! oracles for the color and mask optimizers.

use super::{Detection, LossGrad, VictimModel};
use crate::attack::LossSpec;
use crate::contour::GroundTruth;
use crate::error::{AscError, Result};
use crate::geom::BBox;
use crate::imagecore::Image;

fn whole_canvas(x: &Image) -> Vec<Detection> {
    vec![Detection {
        bbox: BBox::new(0.0, 0.0, x.height() as f64, x.width() as f64),
        objectness: 1.0,
        category: "surrogate".into(),
    }]
}

fn check(len: usize, x: &Image) -> Result<()> {
    if x.data().len() != len {
        return Err(AscError::shape(
            format!("{len} input values"),
            format!("{} values", x.data().len()),
        ));
    }
    Ok(())
}

/// `J(x) = <w, x>`. Always "detects" the whole canvas, so attacks against it
/// never stop early.
#[derive(Debug, Clone)]
pub struct LinearSurrogate {
    pub height: usize,
    pub width: usize,
    pub weights: Vec<f64>,
}

impl VictimModel for LinearSurrogate {
    fn input_dims(&self) -> Option<(usize, usize)> {
        Some((self.height, self.width))
    }

    fn detect(&self, x: &Image) -> Result<Vec<Detection>> {
        Ok(whole_canvas(x))
    }

    fn loss_and_grad(&self, x: &Image, _gt: &GroundTruth, _loss: &LossSpec) -> Result<LossGrad> {
        check(self.weights.len(), x)?;
        let value = self.weights.iter().zip(x.data()).map(|(w, v)| w * v).sum();
        Ok(LossGrad {
            value,
            grad: self.weights.clone(),
            matched: 1,
            dead: false,
        })
    }
}

/// `J(x) = -||x - c||^2`, maximized at `x = c`.
#[derive(Debug, Clone)]
pub struct QuadraticSurrogate {
    pub height: usize,
    pub width: usize,
    pub target: Vec<f64>,
}

impl VictimModel for QuadraticSurrogate {
    fn input_dims(&self) -> Option<(usize, usize)> {
        Some((self.height, self.width))
    }

    fn detect(&self, x: &Image) -> Result<Vec<Detection>> {
        Ok(whole_canvas(x))
    }

    fn loss_and_grad(&self, x: &Image, _gt: &GroundTruth, _loss: &LossSpec) -> Result<LossGrad> {
        check(self.target.len(), x)?;
        let diff: Vec<f64> = x
            .data()
            .iter()
            .zip(&self.target)
            .map(|(v, c)| v - c)
            .collect();
        Ok(LossGrad {
            value: -diff.iter().map(|d| d * d).sum::<f64>(),
            grad: diff.iter().map(|d| -2.0 * d).collect(),
            matched: 1,
            dead: false,
        })
    }
}
