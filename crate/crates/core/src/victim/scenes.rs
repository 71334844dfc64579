//! Synthetic detection scenes: one to three saturated shapes on a textured,
//! low-saturation background, each annotated with a polygon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tiny::INPUT_SIZE;
use crate::contour::{GroundTruth, Point};
use crate::error::Result;
use crate::geom::BBox;
use crate::imagecore::{Image, Mask, CHANNELS};

pub const CATEGORY: &str = "object";
const MIN_AREA: usize = 64;
const ELLIPSE_VERTICES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: u64,
    pub image: Image,
    pub objects: Vec<GroundTruth>,
}

impl Scene {
    pub fn target(&self) -> Option<&GroundTruth> {
        designated_target(&self.objects).map(|i| &self.objects[i])
    }
}

/// The object a benchmark attacks in a scene: the largest by area, first
/// on ties.
pub fn designated_target(objects: &[GroundTruth]) -> Option<usize> {
    objects
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.object_area.cmp(&b.object_area).then(ib.cmp(ia)))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    /// center and semi-axes, all `(row, col)`
    Ellipse {
        center: Point,
        radii: Point,
    },
    Rectangle {
        top_left: (usize, usize),
        size: (usize, usize),
    },
    Triangle {
        vertices: [Point; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub rgb: [f64; 3],
}

impl ShapeSpec {
    /// Analytic membership test for the rendered shape.
    pub fn contains(&self, r: f64, c: f64) -> bool {
        match self.kind {
            ShapeKind::Ellipse { center, radii } => {
                let dy = (r - center.0) / radii.0;
                let dx = (c - center.1) / radii.1;
                dy * dy + dx * dx <= 1.0
            }
            ShapeKind::Rectangle { top_left, size } => {
                r >= top_left.0 as f64
                    && r <= (top_left.0 + size.0) as f64
                    && c >= top_left.1 as f64
                    && c <= (top_left.1 + size.1) as f64
            }
            ShapeKind::Triangle { vertices } => {
                let sign = |a: Point, b: Point| (b.1 - a.1) * (r - a.0) - (b.0 - a.0) * (c - a.1);
                let d0 = sign(vertices[0], vertices[1]);
                let d1 = sign(vertices[1], vertices[2]);
                let d2 = sign(vertices[2], vertices[0]);
                let neg = d0 < 0.0 || d1 < 0.0 || d2 < 0.0;
                let pos = d0 > 0.0 || d1 > 0.0 || d2 > 0.0;
                !(neg && pos)
            }
        }
    }

    pub fn polygon(&self) -> Vec<Point> {
        match self.kind {
            ShapeKind::Ellipse { center, radii } => (0..ELLIPSE_VERTICES)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / ELLIPSE_VERTICES as f64;
                    (center.0 + radii.0 * t.sin(), center.1 + radii.1 * t.cos())
                })
                .collect(),
            ShapeKind::Rectangle { top_left, size } => {
                let (r0, c0) = (top_left.0 as f64, top_left.1 as f64);
                let (r1, c1) = (r0 + size.0 as f64, c0 + size.1 as f64);
                vec![(r0, c0), (r0, c1), (r1, c1), (r1, c0)]
            }
            ShapeKind::Triangle { vertices } => vertices.to_vec(),
        }
    }

    pub fn extent(&self) -> BBox {
        let poly = self.polygon();
        let mut b = BBox::new(
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for (r, c) in poly {
            b.row_min = b.row_min.min(r);
            b.col_min = b.col_min.min(c);
            b.row_max = b.row_max.max(r);
            b.col_max = b.col_max.max(c);
        }
        b
    }

    pub fn render_mask(&self, height: usize, width: usize) -> Mask {
        Mask::from_fn(height, width, |r, c| self.contains(r as f64, c as f64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub shapes: Vec<ShapeSpec>,
    background_seed: u64,
    object_noise_seed: u64,
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let i = h6.floor();
    let f = h6 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match i as u32 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

fn random_shape(rng: &mut ChaCha8Rng) -> ShapeKind {
    let n = INPUT_SIZE as f64;
    match rng.gen_range(0..3) {
        0 => {
            let radii = (rng.gen_range(7.0..13.0), rng.gen_range(7.0..13.0));
            let center = (
                rng.gen_range(radii.0 + 1.0..n - radii.0 - 2.0),
                rng.gen_range(radii.1 + 1.0..n - radii.1 - 2.0),
            );
            ShapeKind::Ellipse { center, radii }
        }
        1 => {
            let size = (rng.gen_range(13..=24), rng.gen_range(13..=24));
            let top_left = (
                rng.gen_range(1..INPUT_SIZE - size.0 - 1),
                rng.gen_range(1..INPUT_SIZE - size.1 - 1),
            );
            ShapeKind::Rectangle { top_left, size }
        }
        _ => {
            let s = rng.gen_range(17.0..26.0);
            let r0 = rng.gen_range(1.0..n - s - 2.0);
            let c0 = rng.gen_range(1.0..n - s - 2.0);
            let apex_along = rng.gen_range(0.25..0.75) * s;
            // four orientations: apex up, down, left, right
            let vertices = match rng.gen_range(0..4) {
                0 => [(r0, c0 + apex_along), (r0 + s, c0 + s), (r0 + s, c0)],
                1 => [(r0 + s, c0 + apex_along), (r0, c0), (r0, c0 + s)],
                2 => [(r0 + apex_along, c0), (r0, c0 + s), (r0 + s, c0 + s)],
                _ => [(r0 + apex_along, c0 + s), (r0 + s, c0), (r0, c0)],
            };
            ShapeKind::Triangle { vertices }
        }
    }
}

fn overlaps(a: &BBox, b: &BBox, gap: f64) -> bool {
    a.row_min - gap <= b.row_max
        && b.row_min - gap <= a.row_max
        && a.col_min - gap <= b.col_max
        && b.col_min - gap <= a.col_max
}

/// Draws the layout of one scene.
pub fn sample_scene_spec(rng: &mut ChaCha8Rng) -> SceneSpec {
    let wanted = rng.gen_range(1..=3);
    let mut shapes: Vec<ShapeSpec> = Vec::new();
    let mut attempts = 0;
    while shapes.len() < wanted && attempts < 200 {
        attempts += 1;
        let kind = random_shape(rng);
        let hue = rng.gen_range(0.0..1.0);
        let rgb = hsv_to_rgb(hue, rng.gen_range(0.75..1.0), rng.gen_range(0.65..1.0));
        let spec = ShapeSpec { kind, rgb };
        if spec.render_mask(INPUT_SIZE, INPUT_SIZE).count() < MIN_AREA {
            continue;
        }
        let ext = spec.extent();
        if shapes.iter().any(|s| overlaps(&s.extent(), &ext, 3.0)) {
            continue;
        }
        shapes.push(spec);
    }
    SceneSpec {
        shapes,
        background_seed: rng.gen(),
        object_noise_seed: rng.gen(),
    }
}

fn background(seed: u64) -> Vec<f64> {
    const COARSE: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: f64 = rng.gen_range(0.3..0.7);
    let tint: [f64; 3] = [
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
        rng.gen_range(-0.05..0.05),
    ];
    let grid: Vec<f64> = (0..COARSE * COARSE)
        .map(|_| rng.gen_range(-0.15..0.15))
        .collect();
    let n = INPUT_SIZE;
    let scale = (COARSE - 1) as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n * CHANNELS);
    for r in 0..n {
        for c in 0..n {
            let (fy, fx) = (r as f64 * scale, c as f64 * scale);
            let (y0, x0) = (
                (fy.floor() as usize).min(COARSE - 2),
                (fx.floor() as usize).min(COARSE - 2),
            );
            let (ty, tx) = (fy - y0 as f64, fx - x0 as f64);
            let g = |y: usize, x: usize| grid[y * COARSE + x];
            let smooth = g(y0, x0) * (1.0 - ty) * (1.0 - tx)
                + g(y0, x0 + 1) * (1.0 - ty) * tx
                + g(y0 + 1, x0) * ty * (1.0 - tx)
                + g(y0 + 1, x0 + 1) * ty * tx;
            let grain = rng.gen_range(-0.06..0.06);
            for t in tint {
                let v = base + smooth + grain + t + rng.gen_range(-0.02..0.02);
                out.push(v.clamp(0.0, 1.0));
            }
        }
    }
    out
}

/// Renders a layout into an image plus the analytic mask of each shape.
pub fn render(spec: &SceneSpec) -> (Image, Vec<Mask>) {
    let n = INPUT_SIZE;
    let mut data = background(spec.background_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.object_noise_seed);
    let mut masks = Vec::with_capacity(spec.shapes.len());
    for shape in &spec.shapes {
        let m = shape.render_mask(n, n);
        for (r, c) in m.ones() {
            let i = (r * n + c) * CHANNELS;
            for ch in 0..CHANNELS {
                data[i + ch] = (shape.rgb[ch] + rng.gen_range(-0.04..0.04)).clamp(0.0, 1.0);
            }
        }
        masks.push(m);
    }
    (Image::from_raw_unchecked(n, n, data), masks)
}

pub fn annotate(spec: &SceneSpec) -> Result<Vec<GroundTruth>> {
    spec.shapes
        .iter()
        .map(|s| GroundTruth::from_polygons(vec![s.polygon()], INPUT_SIZE, INPUT_SIZE, CATEGORY))
        .collect()
}

fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` scenes with ids `0..n`. Scene `i` depends only on `(seed, i)`.
pub fn gen_scenes(n: usize, seed: u64) -> Result<Vec<Scene>> {
    (0..n as u64)
        .map(|id| {
            let spec = sample_scene_spec(&mut scene_rng(seed, id));
            let (image, _) = render(&spec);
            Ok(Scene {
                id,
                image,
                objects: annotate(&spec)?,
            })
        })
        .collect()
}
