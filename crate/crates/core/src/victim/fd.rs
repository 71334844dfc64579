//! Central finite differences of a victim's loss, used as a gradient oracle
//! in tests.

use super::VictimModel;
use crate::attack::LossSpec;
use crate::contour::GroundTruth;
use crate::error::Result;
use crate::imagecore::{Image, CHANNELS};

/// Estimates `dJ/dx` at each `(row, col, channel)` in `coords` with
/// `(J(x + eps e_k) - J(x - eps e_k)) / (2 eps)`. Perturbed values are
/// clamped to `[0, 1]` and the step shrinks accordingly at the bounds.
pub fn finite_diff_grad(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    loss: &LossSpec,
    eps: f64,
    coords: &[(usize, usize, usize)],
) -> Result<Vec<f64>> {
    let (h, w) = x.dims();
    coords
        .iter()
        .map(|&(r, c, ch)| {
            let idx = (r * w + c) * CHANNELS + ch;
            let base = x.data()[idx];
            let (lo, hi) = ((base - eps).max(0.0), (base + eps).min(1.0));
            let probe = |v: f64| -> Result<f64> {
                let mut data = x.data().to_vec();
                data[idx] = v;
                Ok(model
                    .loss_and_grad(&Image::new(h, w, data)?, gt, loss)?
                    .value)
            };
            Ok((probe(hi)? - probe(lo)?) / (hi - lo))
        })
        .collect()
}
