use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenes::Scene;
use super::tiny::{cell_center, sigmoid, TinyDetector, ANCHOR, CELL, GRID, INPUT_SIZE};
use super::VictimModel;
use crate::error::{AscError, Result};
use crate::eval::{is_detected, sdr};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Weight of the objectness term on positive cells.
    pub pos_weight: f64,
    pub box_weight: f64,
    /// Share of the dataset held out to report clean SDR.
    pub val_fraction: f64,
    /// The learning rate drops tenfold for this final share of epochs.
    pub anneal_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 2e-3,
            seed: 0,
            batch_size: 16,
            pos_weight: 4.0,
            box_weight: 1.0,
            val_fraction: 0.1,
            anneal_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_size: usize,
    pub val_size: usize,
    /// Mean per-scene loss over the last epoch.
    pub final_loss: f64,
    /// Clean SDR of the designated targets in the validation split.
    pub val_sdr: Option<f64>,
}

/// Regression target of one object at one responsible cell.
struct Target {
    cell: usize,
    params: [f64; 4],
}

/// Cells along one axis whose center lies strictly within one cell of `c`.
fn responsible(c: f64) -> impl Iterator<Item = usize> {
    (0..GRID).filter(move |&g| (c - cell_center(g)).abs() < CELL)
}

/// Every cell near an object's center is trained as positive. A single
/// responsible cell splits confidence between neighbors whenever the
/// center sits near a cell border.
fn targets(scene: &Scene) -> Vec<Target> {
    let mut out = Vec::new();
    for gt in &scene.objects {
        let (cy, cx) = gt.bbox.center();
        let off = |c: f64, g: usize| ((c - cell_center(g)) / CELL).clamp(-0.95, 0.95).atanh();
        let th = (gt.bbox.height().max(1.0) / ANCHOR).ln();
        let tw = (gt.bbox.width().max(1.0) / ANCHOR).ln();
        for gy in responsible(cy) {
            for gx in responsible(cx) {
                out.push(Target {
                    cell: gy * GRID + gx,
                    params: [off(cy, gy), off(cx, gx), th, tw],
                });
            }
        }
    }
    out
}

fn smooth_l1(d: f64) -> (f64, f64) {
    if d.abs() < 1.0 {
        (0.5 * d * d, d)
    } else {
        (d.abs() - 0.5, d.signum())
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (k, p) in params.iter_mut().enumerate() {
            let g = grads[k];
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * g;
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * g * g;
            let update = lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
            **p -= update;
        }
    }
}

/// Loss of one scene; accumulates parameter gradients into `grads`
/// (flattened in `layers()` order, weights then bias per layer).
fn scene_loss_and_grad(
    model: &TinyDetector,
    scene: &Scene,
    cfg: &TrainConfig,
    grads: &mut [f64],
) -> f64 {
    let trace = model.forward_raw(scene.image.data());
    let plane = GRID * GRID;
    let mut dhead = vec![0.0; trace.head.len()];
    let mut positive = vec![false; plane];
    let tgts = targets(scene);
    for t in &tgts {
        positive[t.cell] = true;
    }
    let mut loss = 0.0;
    for cell in 0..plane {
        let z = trace.head[cell];
        let (t, w) = if positive[cell] {
            (1.0, cfg.pos_weight)
        } else {
            (0.0, 1.0)
        };
        // log(1 + e^z) - t z, computed stably
        let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
        loss += w * (softplus - t * z);
        dhead[cell] = w * (sigmoid(z) - t);
    }
    for t in &tgts {
        for (k, &target) in t.params.iter().enumerate() {
            let idx = (k + 1) * plane + t.cell;
            let (l, d) = smooth_l1(trace.head[idx] - target);
            loss += cfg.box_weight * l;
            dhead[idx] = cfg.box_weight * d;
        }
    }

    let [l1, l2, l3] = model.layers();
    let (n1, n2) = (
        l1.weight.len() + l1.bias.len(),
        l2.weight.len() + l2.bias.len(),
    );
    let (g1, rest) = grads.split_at_mut(n1);
    let (g2, g3) = rest.split_at_mut(n2);
    let mid = INPUT_SIZE / 2;

    let (w3, b3) = g3.split_at_mut(l3.weight.len());
    l3.accumulate_param_grad(&trace.act2, GRID, GRID, &dhead, w3, b3);
    let mut d2 = l3.backward_input(&dhead, GRID, GRID);
    for (g, &z) in d2.iter_mut().zip(&trace.pre2) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    let (w2, b2) = g2.split_at_mut(l2.weight.len());
    l2.accumulate_param_grad(&trace.act1, mid, mid, &d2, w2, b2);
    let mut d1 = l2.backward_input(&d2, mid, mid);
    for (g, &z) in d1.iter_mut().zip(&trace.pre1) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    let (w1, b1) = g1.split_at_mut(l1.weight.len());
    l1.accumulate_param_grad(&trace.x, INPUT_SIZE, INPUT_SIZE, &d1, w1, b1);
    loss
}

/// Clean SDR of the designated targets of `scenes`.
pub fn clean_sdr(model: &dyn VictimModel, scenes: &[Scene]) -> Result<f64> {
    let mut flags = Vec::with_capacity(scenes.len());
    for s in scenes {
        if let Some(gt) = s.target() {
            flags.push(is_detected(&model.detect(&s.image)?, gt));
        }
    }
    Ok(sdr(&flags))
}

pub fn train_tiny(
    dataset: &[Scene],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<(TinyDetector, TrainReport)> {
    train_tiny_with(
        dataset,
        &TrainConfig {
            epochs,
            lr,
            seed,
            ..TrainConfig::default()
        },
    )
}

pub fn train_tiny_with(
    dataset: &[Scene],
    cfg: &TrainConfig,
) -> Result<(TinyDetector, TrainReport)> {
    if dataset.is_empty() {
        return Err(AscError::invalid("cannot train on an empty dataset"));
    }
    if cfg.batch_size == 0
        || !(0.0..1.0).contains(&cfg.val_fraction)
        || !cfg.lr.is_finite()
        || cfg.lr < 0.0
    {
        return Err(AscError::invalid("bad training configuration"));
    }
    if let Some(s) = dataset
        .iter()
        .find(|s| s.image.dims() != (INPUT_SIZE, INPUT_SIZE))
    {
        return Err(AscError::shape(
            format!("{INPUT_SIZE}x{INPUT_SIZE} scenes"),
            format!("scene {} of {}x{}", s.id, s.image.height(), s.image.width()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let val_size = (dataset.len() as f64 * cfg.val_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(val_size);
    let mut train_idx = train_idx.to_vec();

    let mut model = TinyDetector::init(cfg.seed);
    let n_params = model.parameter_count();
    let mut adam = Adam::new(n_params);
    let anneal_from = ((1.0 - cfg.anneal_fraction) * cfg.epochs as f64).round() as usize;
    let mut final_loss = 0.0;
    for epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        let lr = if epoch >= anneal_from {
            cfg.lr * 0.1
        } else {
            cfg.lr
        };
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let mut grads = vec![0.0; n_params];
            for &i in batch {
                epoch_loss += scene_loss_and_grad(&model, &dataset[i], cfg, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| *g *= scale);
            let mut params: Vec<&mut f64> = model
                .layers_mut()
                .into_iter()
                .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
                .collect();
            adam.step(&mut params, &grads, lr);
        }
        final_loss = epoch_loss / train_idx.len().max(1) as f64;
        log::info!("epoch {}/{}: loss {:.4}", epoch + 1, cfg.epochs, final_loss);
    }

    let val: Vec<Scene> = val_idx.iter().map(|&i| dataset[i].clone()).collect();
    let val_sdr = if val.is_empty() {
        None
    } else {
        Some(clean_sdr(&model, &val)?)
    };
    Ok((
        model,
        TrainReport {
            train_size: train_idx.len(),
            val_size,
            final_loss,
            val_sdr,
        },
    ))
}
