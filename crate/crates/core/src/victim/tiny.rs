//! A small anchor-grid detector with hand-written reverse mode.
//!
//! Layout: `64x64x3` input, two `3x3` stride-2 convolutions with ReLU
//! (3 -> 8 -> 16 channels), then a `1x1` convolution head producing five
//! maps over a `16x16` grid: objectness logit and four box parameters per
//! cell. Cell `(i, j)` decodes to a box centered at
//! `(4i + 1.5 + 4 tanh(ty), 4j + 1.5 + 4 tanh(tx))` with size
//! `16 exp(th) x 16 exp(tw)`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{nms, Detection, LossGrad, VictimModel};
use crate::attack::{disappear_loss, LossSpec, PROB_FLOOR};
use crate::contour::GroundTruth;
use crate::error::{AscError, Result};
use crate::geom::{iou, BBox};
use crate::imagecore::{Image, CHANNELS};

pub const INPUT_SIZE: usize = 64;
pub const GRID: usize = 16;
pub const CELL: f64 = 4.0;
pub const ANCHOR: f64 = 16.0;
pub const SCORE_THRESHOLD: f64 = 0.05;
pub const NMS_IOU: f64 = 0.5;

pub(crate) const HEAD_OUT: usize = 5;
const LOG_SIZE_CLAMP: f64 = 4.0;
const CATEGORY: &str = "object";

const WEIGHTS_MAGIC: &[u8; 4] = b"ASCW";
const WEIGHTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Conv2d {
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    /// `[out_c][in_c][k][k]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    fn zeros(in_c: usize, out_c: usize, k: usize, stride: usize, pad: usize) -> Self {
        Self {
            in_c,
            out_c,
            k,
            stride,
            pad,
            weight: vec![0.0; out_c * in_c * k * k],
            bias: vec![0.0; out_c],
        }
    }

    fn out_len(&self, n: usize) -> usize {
        (n + 2 * self.pad - self.k) / self.stride + 1
    }

    /// Output indices `o` in `lo..hi` for which `o * stride + kk - pad`
    /// lands inside `0..in_n`.
    fn span(&self, out_n: usize, in_n: usize, kk: usize) -> (usize, usize) {
        let (s, p) = (self.stride, self.pad);
        let lo = if kk >= p { 0 } else { (p - kk).div_ceil(s) };
        if in_n + p <= kk {
            return (0, 0);
        }
        let hi = ((in_n - 1 + p - kk) / s + 1).min(out_n);
        (lo, hi.max(lo))
    }

    fn w_index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_c + i) * self.k + ky) * self.k + kx
    }

    pub fn forward(&self, input: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
        let (oh, ow) = (self.out_len(h), self.out_len(w));
        let (s, p) = (self.stride, self.pad);
        let mut out = vec![0.0; self.out_c * oh * ow];
        for o in 0..self.out_c {
            let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
            plane.fill(self.bias[o]);
            for i in 0..self.in_c {
                let src = &input[i * h * w..(i + 1) * h * w];
                for ky in 0..self.k {
                    let (y0, y1) = self.span(oh, h, ky);
                    for kx in 0..self.k {
                        let wv = self.weight[self.w_index(o, i, ky, kx)];
                        let (x0, x1) = self.span(ow, w, kx);
                        for oy in y0..y1 {
                            let iy = oy * s + ky - p;
                            let row_in = &src[iy * w..(iy + 1) * w];
                            let row_out = &mut plane[oy * ow..(oy + 1) * ow];
                            for ox in x0..x1 {
                                row_out[ox] += wv * row_in[ox * s + kx - p];
                            }
                        }
                    }
                }
            }
        }
        (out, oh, ow)
    }

    /// Gradient with respect to the layer input. Sparse upstream gradients
    /// (the attack case) take a scatter path that skips zero entries.
    pub fn backward_input(&self, dout: &[f64], h: usize, w: usize) -> Vec<f64> {
        let (oh, ow) = (self.out_len(h), self.out_len(w));
        let (s, p) = (self.stride, self.pad);
        let mut din = vec![0.0; self.in_c * h * w];
        let nonzero = dout.iter().filter(|v| **v != 0.0).count();
        if nonzero * 4 < dout.len() {
            for o in 0..self.out_c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let g = dout[(o * oh + oy) * ow + ox];
                        if g == 0.0 {
                            continue;
                        }
                        for ky in 0..self.k {
                            let iy = oy * s + ky;
                            if iy < p || iy - p >= h {
                                continue;
                            }
                            let iy = iy - p;
                            for kx in 0..self.k {
                                let ix = ox * s + kx;
                                if ix < p || ix - p >= w {
                                    continue;
                                }
                                let ix = ix - p;
                                for i in 0..self.in_c {
                                    din[(i * h + iy) * w + ix] +=
                                        self.weight[self.w_index(o, i, ky, kx)] * g;
                                }
                            }
                        }
                    }
                }
            }
            return din;
        }
        for o in 0..self.out_c {
            let gplane = &dout[o * oh * ow..(o + 1) * oh * ow];
            for i in 0..self.in_c {
                let dst = &mut din[i * h * w..(i + 1) * h * w];
                for ky in 0..self.k {
                    let (y0, y1) = self.span(oh, h, ky);
                    for kx in 0..self.k {
                        let wv = self.weight[self.w_index(o, i, ky, kx)];
                        let (x0, x1) = self.span(ow, w, kx);
                        for oy in y0..y1 {
                            let iy = oy * s + ky - p;
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            let drow = &mut dst[iy * w..(iy + 1) * w];
                            for ox in x0..x1 {
                                drow[ox * s + kx - p] += wv * grow[ox];
                            }
                        }
                    }
                }
            }
        }
        din
    }

    pub fn accumulate_param_grad(
        &self,
        input: &[f64],
        h: usize,
        w: usize,
        dout: &[f64],
        dweight: &mut [f64],
        dbias: &mut [f64],
    ) {
        let (oh, ow) = (self.out_len(h), self.out_len(w));
        let (s, p) = (self.stride, self.pad);
        for o in 0..self.out_c {
            let gplane = &dout[o * oh * ow..(o + 1) * oh * ow];
            dbias[o] += gplane.iter().sum::<f64>();
            for i in 0..self.in_c {
                let src = &input[i * h * w..(i + 1) * h * w];
                for ky in 0..self.k {
                    let (y0, y1) = self.span(oh, h, ky);
                    for kx in 0..self.k {
                        let (x0, x1) = self.span(ow, w, kx);
                        let mut acc = 0.0;
                        for oy in y0..y1 {
                            let iy = oy * s + ky - p;
                            let row_in = &src[iy * w..(iy + 1) * w];
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            for ox in x0..x1 {
                                acc += grow[ox] * row_in[ox * s + kx - p];
                            }
                        }
                        dweight[self.w_index(o, i, ky, kx)] += acc;
                    }
                }
            }
        }
    }
}

/// Activations kept from a forward pass for the backward pass.
pub(crate) struct Trace {
    pub x: Vec<f64>,
    pub pre1: Vec<f64>,
    pub act1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub act2: Vec<f64>,
    pub head: Vec<f64>,
}

/// One decoded grid cell before thresholding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub cell: usize,
    pub bbox: BBox,
    pub logit: f64,
    pub objectness: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn cell_center(index: usize) -> f64 {
    CELL * index as f64 + (CELL - 1.0) / 2.0
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn relu_backward(grad: &mut [f64], pre: &[f64]) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinyDetector {
    pub(crate) conv1: Conv2d,
    pub(crate) conv2: Conv2d,
    pub(crate) head: Conv2d,
}

impl TinyDetector {
    /// All weights and biases zero: every cell scores `sigmoid(0) = 0.5`.
    pub fn zeroed() -> Self {
        Self {
            conv1: Conv2d::zeros(3, 8, 3, 2, 1),
            conv2: Conv2d::zeros(8, 16, 3, 2, 1),
            head: Conv2d::zeros(16, HEAD_OUT, 1, 1, 0),
        }
    }

    /// Kaiming-uniform initialization. The objectness bias starts at a
    /// 1% prior so the untrained grid is mostly background.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Self::zeroed();
        for layer in [&mut model.conv1, &mut model.conv2, &mut model.head] {
            let fan_in = (layer.in_c * layer.k * layer.k) as f64;
            let bound = (6.0 / fan_in).sqrt();
            for w in layer.weight.iter_mut() {
                *w = rng.gen_range(-bound..bound);
            }
        }
        // head weights start small so initial boxes sit on the anchors
        for w in model.head.weight.iter_mut() {
            *w *= 0.1;
        }
        model.head.bias[0] = -(99.0f64).ln();
        model
    }

    pub(crate) fn layers(&self) -> [&Conv2d; 3] {
        [&self.conv1, &self.conv2, &self.head]
    }

    pub(crate) fn layers_mut(&mut self) -> [&mut Conv2d; 3] {
        [&mut self.conv1, &mut self.conv2, &mut self.head]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &Image) -> Result<()> {
        if x.dims() != (INPUT_SIZE, INPUT_SIZE) {
            return Err(AscError::shape(
                format!("{INPUT_SIZE}x{INPUT_SIZE} input"),
                format!("{}x{} input", x.height(), x.width()),
            ));
        }
        Ok(())
    }

    pub(crate) fn to_chw(data: &[f64]) -> Vec<f64> {
        let plane = INPUT_SIZE * INPUT_SIZE;
        let mut out = vec![0.0; CHANNELS * plane];
        for (p, px) in data.chunks_exact(CHANNELS).enumerate() {
            for c in 0..CHANNELS {
                out[c * plane + p] = px[c];
            }
        }
        out
    }

    fn chw_to_hwc(chw: &[f64]) -> Vec<f64> {
        let plane = INPUT_SIZE * INPUT_SIZE;
        let mut out = vec![0.0; CHANNELS * plane];
        for p in 0..plane {
            for c in 0..CHANNELS {
                out[p * CHANNELS + c] = chw[c * plane + p];
            }
        }
        out
    }

    pub(crate) fn forward_raw(&self, hwc: &[f64]) -> Trace {
        let x = Self::to_chw(hwc);
        let (pre1, h1, w1) = self.conv1.forward(&x, INPUT_SIZE, INPUT_SIZE);
        let act1 = relu(&pre1);
        let (pre2, h2, w2) = self.conv2.forward(&act1, h1, w1);
        let act2 = relu(&pre2);
        let (head, _, _) = self.head.forward(&act2, h2, w2);
        Trace {
            x,
            pre1,
            act1,
            pre2,
            act2,
            head,
        }
    }

    /// Backpropagates a head gradient to the input (`CHW` layout).
    pub(crate) fn backward_to_input(&self, trace: &Trace, dhead: &[f64]) -> Vec<f64> {
        let mid = INPUT_SIZE / 2;
        let mut d2 = self.head.backward_input(dhead, GRID, GRID);
        relu_backward(&mut d2, &trace.pre2);
        let mut d1 = self.conv2.backward_input(&d2, mid, mid);
        relu_backward(&mut d1, &trace.pre1);
        self.conv1.backward_input(&d1, INPUT_SIZE, INPUT_SIZE)
    }

    pub(crate) fn decode(head: &[f64]) -> Vec<Candidate> {
        let plane = GRID * GRID;
        (0..plane)
            .map(|cell| {
                let (gy, gx) = (cell / GRID, cell % GRID);
                let logit = head[cell];
                let ty = head[plane + cell];
                let tx = head[2 * plane + cell];
                let th = head[3 * plane + cell].clamp(-LOG_SIZE_CLAMP, LOG_SIZE_CLAMP);
                let tw = head[4 * plane + cell].clamp(-LOG_SIZE_CLAMP, LOG_SIZE_CLAMP);
                let cy = cell_center(gy) + CELL * ty.tanh();
                let cx = cell_center(gx) + CELL * tx.tanh();
                Candidate {
                    cell,
                    bbox: BBox::from_center(cy, cx, ANCHOR * th.exp(), ANCHOR * tw.exp()),
                    logit,
                    objectness: sigmoid(logit),
                }
            })
            .collect()
    }

    /// Every grid cell decoded, in cell order, before any filtering.
    pub fn candidates(&self, x: &Image) -> Result<Vec<Candidate>> {
        self.check_input(x)?;
        Ok(Self::decode(&self.forward_raw(x.data()).head))
    }

    pub(crate) fn postprocess(candidates: &[Candidate]) -> Vec<Detection> {
        let mut kept: Vec<&Candidate> = candidates
            .iter()
            .filter(|c| c.objectness > SCORE_THRESHOLD)
            .collect();
        kept.sort_by(|a, b| {
            b.objectness
                .total_cmp(&a.objectness)
                .then(a.cell.cmp(&b.cell))
        });
        let dets = kept
            .into_iter()
            .map(|c| Detection {
                bbox: c.bbox,
                objectness: c.objectness,
                category: CATEGORY.to_string(),
            })
            .collect();
        nms(dets, NMS_IOU)
    }

    /// Loss and input gradient for raw `HWC` data; values need not lie in
    /// `[0, 1]` (finite differences step slightly outside).
    pub(crate) fn loss_and_grad_raw(
        &self,
        hwc: &[f64],
        gt: &GroundTruth,
        loss: &LossSpec,
    ) -> LossGrad {
        let trace = self.forward_raw(hwc);
        let cands = Self::decode(&trace.head);
        let matched: Vec<&Candidate> = cands
            .iter()
            .filter(|c| iou(&c.bbox, &gt.bbox) > loss.iou_match_threshold)
            .collect();
        let probs: Vec<f64> = matched.iter().map(|c| c.objectness).collect();
        let value = disappear_loss(&probs);
        if matched.is_empty() {
            return LossGrad::dead(value, hwc.len());
        }
        let mut dhead = vec![0.0; trace.head.len()];
        for c in &matched {
            // d(-ln p)/dz = -(1 - p); the floor clamp has zero slope
            if c.objectness > PROB_FLOOR {
                dhead[c.cell] = -(1.0 - c.objectness);
            }
        }
        let dx = self.backward_to_input(&trace, &dhead);
        let grad = Self::chw_to_hwc(&dx);
        let dead = grad.iter().all(|g| *g == 0.0);
        LossGrad {
            value,
            grad,
            matched: matched.len(),
            dead,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(WEIGHTS_MAGIC);
        out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers().len() as u32).to_le_bytes());
        for l in self.layers() {
            for v in [l.in_c, l.out_c, l.k, l.stride, l.pad] {
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
        for l in self.layers() {
            for v in l.weight.iter().chain(&l.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: &str| AscError::Malformed {
            path: origin.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut cursor = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cursor.len() < n {
                return Err(bad("weights file is truncated"));
            }
            let (head, rest) = cursor.split_at(n);
            cursor = rest;
            Ok(head)
        };
        if take(4)? != WEIGHTS_MAGIC {
            return Err(bad("bad magic, not a detector weights file"));
        }
        let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize;
        let version = read_u32(take(4)?);
        if version != WEIGHTS_VERSION as usize {
            return Err(bad(&format!("unsupported weights version {version}")));
        }
        let mut model = Self::zeroed();
        let n_layers = read_u32(take(4)?);
        if n_layers != 3 {
            return Err(bad(&format!("expected 3 layers, found {n_layers}")));
        }
        for layer in model.layers_mut() {
            let mut dims = [0usize; 5];
            for d in dims.iter_mut() {
                *d = read_u32(take(4)?);
            }
            if dims != [layer.in_c, layer.out_c, layer.k, layer.stride, layer.pad] {
                return Err(bad(&format!(
                    "layer shape {dims:?} does not match the architecture"
                )));
            }
        }
        for layer in model.layers_mut() {
            for v in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *v = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
                if !v.is_finite() {
                    return Err(bad("non-finite weight"));
                }
            }
        }
        if !cursor.is_empty() {
            return Err(bad("trailing bytes after weights"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| AscError::Unwritable {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| AscError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes, path)
    }
}

impl VictimModel for TinyDetector {
    fn input_dims(&self) -> Option<(usize, usize)> {
        Some((INPUT_SIZE, INPUT_SIZE))
    }

    fn detect(&self, x: &Image) -> Result<Vec<Detection>> {
        Ok(Self::postprocess(&self.candidates(x)?))
    }

    fn loss_and_grad(&self, x: &Image, gt: &GroundTruth, loss: &LossSpec) -> Result<LossGrad> {
        self.check_input(x)?;
        loss.validate()?;
        Ok(self.loss_and_grad_raw(x.data(), gt, loss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct 7-loop convolution used as an oracle for the strided loops.
    fn naive_conv(layer: &Conv2d, input: &[f64], h: usize, w: usize) -> Vec<f64> {
        let (oh, ow) = (layer.out_len(h), layer.out_len(w));
        let mut out = vec![0.0; layer.out_c * oh * ow];
        for o in 0..layer.out_c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = layer.bias[o];
                    for i in 0..layer.in_c {
                        for ky in 0..layer.k {
                            for kx in 0..layer.k {
                                let iy = (oy * layer.stride + ky) as isize - layer.pad as isize;
                                let ix = (ox * layer.stride + kx) as isize - layer.pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                acc += layer.weight[layer.w_index(o, i, ky, kx)]
                                    * input[(i * h + iy as usize) * w + ix as usize];
                            }
                        }
                    }
                    out[(o * oh + oy) * ow + ox] = acc;
                }
            }
        }
        out
    }

    fn random_layer(in_c: usize, out_c: usize, k: usize, s: usize, p: usize, seed: u64) -> Conv2d {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = Conv2d::zeros(in_c, out_c, k, s, p);
        l.weight
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-1.0..1.0));
        l.bias
            .iter_mut()
            .for_each(|b| *b = rng.gen_range(-1.0..1.0));
        l
    }

    #[test]
    fn conv_forward_matches_naive() {
        for (k, s, p, seed) in [(3, 2, 1, 1), (5, 1, 2, 2), (3, 1, 0, 3), (1, 1, 0, 4)] {
            let l = random_layer(3, 4, k, s, p, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let (h, w) = (9, 7);
            let input: Vec<f64> = (0..3 * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (out, _, _) = l.forward(&input, h, w);
            let naive = naive_conv(&l, &input, h, w);
            for (a, b) in out.iter().zip(&naive) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_backward_is_adjoint_of_forward() {
        // <conv(x), g> is linear in x, so its x-gradient is backward_input(g)
        for (k, s, p, sparse) in [(3, 2, 1, false), (5, 1, 2, true), (3, 2, 1, true)] {
            let mut l = random_layer(2, 3, k, s, p, 9);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
            let (h, w) = (8, 8);
            let mut rng = ChaCha8Rng::seed_from_u64(10);
            let x: Vec<f64> = (0..2 * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (y, oh, ow) = l.forward(&x, h, w);
            let mut g: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if sparse {
                g.iter_mut().enumerate().for_each(|(i, v)| {
                    if i % 7 != 0 {
                        *v = 0.0
                    }
                });
            }
            assert_eq!(y.len(), 3 * oh * ow);
            let lhs: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
            let dx = l.backward_input(&g, h, w);
            let rhs: f64 = dx.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");

            let mut dw = vec![0.0; l.weight.len()];
            let mut db = vec![0.0; l.bias.len()];
            l.accumulate_param_grad(&x, h, w, &g, &mut dw, &mut db);
            let rhs_w: f64 = dw.iter().zip(&l.weight).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs_w).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_weights_score_one_half_everywhere() {
        let model = TinyDetector::zeroed();
        let x = Image::filled(INPUT_SIZE, INPUT_SIZE, 0.3).unwrap();
        let cands = model.candidates(&x).unwrap();
        assert_eq!(cands.len(), GRID * GRID);
        assert!(cands.iter().all(|c| c.objectness == 0.5));
        let dets = model.detect(&x).unwrap();
        assert!(!dets.is_empty());
        assert_eq!(dets, model.detect(&x).unwrap());
        for (i, a) in dets.iter().enumerate() {
            for b in &dets[i + 1..] {
                assert!(iou(&a.bbox, &b.bbox) <= NMS_IOU);
            }
        }
    }

    #[test]
    fn low_logits_give_no_detections() {
        let mut model = TinyDetector::zeroed();
        model.head.bias[0] = -10.0;
        let x = Image::filled(INPUT_SIZE, INPUT_SIZE, 0.3).unwrap();
        assert!(model.detect(&x).unwrap().is_empty());
    }

    #[test]
    fn rejects_wrong_input_size() {
        let model = TinyDetector::zeroed();
        let x = Image::filled(32, 64, 0.3).unwrap();
        assert!(matches!(model.detect(&x), Err(AscError::Shape { .. })));
    }

    #[test]
    fn weights_round_trip_and_corruption() {
        let model = TinyDetector::init(5);
        let bytes = model.to_bytes();
        let origin = Path::new("mem");
        assert_eq!(TinyDetector::from_bytes(&bytes, origin).unwrap(), model);
        assert!(TinyDetector::from_bytes(&bytes[..bytes.len() - 3], origin).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(TinyDetector::from_bytes(&wrong, origin).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(TinyDetector::from_bytes(&extra, origin).is_err());
    }
}
