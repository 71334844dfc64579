//! Comparison patterns: budget-limited masks placed over a target object.
//!
//! Square and grid patterns live inside the object's pixel box: the pixels
//! whose centers round into its bounding box, clipped to the canvas. All
//! generators are deterministic and never exceed the budget.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contour::{fit_budget, stride_prune, GroundTruth};
use crate::error::{AscError, Result};
use crate::imagecore::{mask_of, pixel_set, Mask, PixelSet};

/// Pipelines accepted by the CLI and the bench.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    AdvPatch,
    FourPatch,
    Grid2x2,
    SmallGrid,
    Strip,
    Fasc,
    Oasc,
}

impl PatternKind {
    pub const ALL: [PatternKind; 7] = [
        PatternKind::AdvPatch,
        PatternKind::FourPatch,
        PatternKind::Grid2x2,
        PatternKind::SmallGrid,
        PatternKind::Strip,
        PatternKind::Fasc,
        PatternKind::Oasc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::AdvPatch => "advpatch",
            PatternKind::FourPatch => "fourpatch",
            PatternKind::Grid2x2 => "grid2x2",
            PatternKind::SmallGrid => "smallgrid",
            PatternKind::Strip => "strip",
            PatternKind::Fasc => "fasc",
            PatternKind::Oasc => "oasc",
        }
    }

    /// Contour pipelines pick their own mask.
    pub fn is_contour(self) -> bool {
        matches!(self, PatternKind::Fasc | PatternKind::Oasc)
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternKind {
    type Err = AscError;

    fn from_str(s: &str) -> Result<Self> {
        PatternKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<_> = PatternKind::ALL.iter().map(|k| k.name()).collect();
                AscError::invalid(format!(
                    "unknown pattern '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Inclusive pixel box `(r0, c0, r1, c1)` of the object on the canvas.
pub fn pixel_box(
    gt: &GroundTruth,
    height: usize,
    width: usize,
) -> Result<(usize, usize, usize, usize)> {
    let b = &gt.bbox;
    if !b.is_valid() || height == 0 || width == 0 {
        return Err(AscError::invalid("object box is invalid"));
    }
    let r0 = b.row_min.round().max(0.0);
    let c0 = b.col_min.round().max(0.0);
    let r1 = b.row_max.round().min(height as f64 - 1.0);
    let c1 = b.col_max.round().min(width as f64 - 1.0);
    if r0 > r1 || c0 > c1 {
        return Err(AscError::invalid("object box lies outside the canvas"));
    }
    Ok((r0 as usize, c0 as usize, r1 as usize, c1 as usize))
}

struct Painter {
    mask: Mask,
    bounds: (isize, isize, isize, isize),
}

impl Painter {
    fn new(gt: &GroundTruth, height: usize, width: usize) -> Result<Self> {
        let (r0, c0, r1, c1) = pixel_box(gt, height, width)?;
        Ok(Self {
            mask: Mask::zeros(height, width),
            bounds: (r0 as isize, c0 as isize, r1 as isize, c1 as isize),
        })
    }

    /// Fills rows `top..top+h` and cols `left..left+w`, clipped to the box.
    fn rect(&mut self, top: isize, left: isize, h: isize, w: isize) {
        let (r0, c0, r1, c1) = self.bounds;
        for r in top.max(r0)..(top + h).min(r1 + 1) {
            for c in left.max(c0)..(left + w).min(c1 + 1) {
                self.mask.set(r as usize, c as usize, true);
            }
        }
    }

    /// Square of side `s` centered on `(cr, cc)`.
    fn square(&mut self, cr: f64, cc: f64, s: usize) {
        let half = (s as f64 - 1.0) / 2.0;
        let top = (cr - half).round() as isize;
        let left = (cc - half).round() as isize;
        self.rect(top, left, s as isize, s as isize);
    }
}

fn isqrt(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

fn prune(mask: Mask, budget: usize) -> Result<Mask> {
    if mask.count() <= budget {
        return Ok(mask);
    }
    let (h, w) = mask.dims();
    let kept = stride_prune(pixel_set(&mask).coords(), budget, 0);
    mask_of(&PixelSet::from_unique(kept), h, w)
}

fn check_budget(budget: usize, min: usize) -> Result<()> {
    if budget < min {
        return Err(AscError::invalid(format!(
            "budget {budget} is below the minimum of {min}"
        )));
    }
    Ok(())
}

/// One square of side `floor(sqrt(budget))` at the box center.
pub fn adv_patch(gt: &GroundTruth, budget: usize, height: usize, width: usize) -> Result<Mask> {
    check_budget(budget, 1)?;
    let mut p = Painter::new(gt, height, width)?;
    let (cr, cc) = gt.bbox.center();
    p.square(cr, cc, isqrt(budget));
    Ok(p.mask)
}

/// Four squares of side `floor(sqrt(budget / 4))` at the quadrant centers.
pub fn four_patch(gt: &GroundTruth, budget: usize, height: usize, width: usize) -> Result<Mask> {
    check_budget(budget, 4)?;
    let mut p = Painter::new(gt, height, width)?;
    let (cr, cc) = gt.bbox.center();
    let (qr, qc) = (gt.bbox.height() / 4.0, gt.bbox.width() / 4.0);
    let s = isqrt(budget / 4);
    for (dr, dc) in [(-qr, -qc), (-qr, qc), (qr, -qc), (qr, qc)] {
        p.square(cr + dr, cc + dc, s);
    }
    Ok(p.mask)
}

fn lattice(gt: &GroundTruth, thickness: usize, height: usize, width: usize) -> Result<Mask> {
    let mut p = Painter::new(gt, height, width)?;
    let (r0, c0, r1, c1) = p.bounds;
    let t = thickness as isize;
    let (bh, bw) = (r1 - r0 + 1, c1 - c0 + 1);
    let mid_r = (r0 + r1) / 2 - (t - 1) / 2;
    let mid_c = (c0 + c1) / 2 - (t - 1) / 2;
    for top in [r0, mid_r, r1 - t + 1] {
        p.rect(top, c0, t, bw);
    }
    for left in [c0, mid_c, c1 - t + 1] {
        p.rect(r0, left, bh, t);
    }
    Ok(p.mask)
}

/// Line thickness [`grid_2x2`] uses for `budget`, or 0 when even a
/// one-pixel lattice is over budget and gets pruned.
pub fn grid_thickness(
    gt: &GroundTruth,
    budget: usize,
    height: usize,
    width: usize,
) -> Result<usize> {
    let mut count = lattice(gt, 1, height, width)?.count();
    if count > budget {
        return Ok(0);
    }
    let mut t = 1;
    loop {
        let next = lattice(gt, t + 1, height, width)?.count();
        if next > budget || next == count {
            return Ok(t);
        }
        count = next;
        t += 1;
    }
}

/// Two border lines and one midline in each direction, splitting the box
/// into 2x2 cells. Lines get the largest thickness that fits the budget.
pub fn grid_2x2(gt: &GroundTruth, budget: usize, height: usize, width: usize) -> Result<Mask> {
    check_budget(budget, 1)?;
    match grid_thickness(gt, budget, height, width)? {
        0 => prune(lattice(gt, 1, height, width)?, budget),
        t => lattice(gt, t, height, width),
    }
}

/// `k x k` lattice of 2x2 squares spread evenly over the box, with the
/// largest `k` such that `4k^2 <= budget`.
pub fn small_grid(gt: &GroundTruth, budget: usize, height: usize, width: usize) -> Result<Mask> {
    check_budget(budget, 1)?;
    let mut p = Painter::new(gt, height, width)?;
    if budget < 4 {
        let (cr, cc) = gt.bbox.center();
        p.square(cr, cc, 1);
        return Ok(p.mask);
    }
    let k = isqrt(budget / 4);
    let (r0, c0, r1, c1) = p.bounds;
    let (bh, bw) = ((r1 - r0 + 1) as f64, (c1 - c0 + 1) as f64);
    for i in 0..k {
        for j in 0..k {
            let cr = r0 as f64 - 0.5 + (i as f64 + 0.5) * bh / k as f64;
            let cc = c0 as f64 - 0.5 + (j as f64 + 0.5) * bw / k as f64;
            p.rect(
                (cr - 0.5).floor() as isize,
                (cc - 0.5).floor() as isize,
                2,
                2,
            );
        }
    }
    Ok(p.mask)
}

fn nearest_occupied(counts: &[usize], target: f64) -> usize {
    (0..counts.len())
        .filter(|&i| counts[i] > 0)
        .min_by(|&a, &b| {
            let (da, db) = ((a as f64 - target).abs(), (b as f64 - target).abs());
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("segmentation is not empty")
}

/// The horizontal and vertical chords of `seg` through its centroid. When
/// the centroid's row (or column) misses the segmentation, the nearest row
/// (column) that hits it is used.
pub fn strip_chords(seg: &Mask) -> Result<Mask> {
    if seg.is_empty() {
        return Err(AscError::invalid("segmentation is empty"));
    }
    let (h, w) = seg.dims();
    let (mut rows, mut cols) = (vec![0usize; h], vec![0usize; w]);
    let (mut sr, mut sc) = (0.0, 0.0);
    for (r, c) in seg.ones() {
        rows[r] += 1;
        cols[c] += 1;
        sr += r as f64;
        sc += c as f64;
    }
    let n = seg.count() as f64;
    let row = nearest_occupied(&rows, (sr / n).round());
    let col = nearest_occupied(&cols, (sc / n).round());
    Ok(Mask::from_fn(h, w, |r, c| {
        seg.get(r, c) && (r == row || c == col)
    }))
}

/// Centroid chords of the segmentation, thickened inside it or pruned to
/// the budget.
pub fn strip(seg: &Mask, budget: usize) -> Result<Mask> {
    check_budget(budget, 1)?;
    fit_budget(&strip_chords(seg)?, seg, budget, 0)
}

/// Mask of a fixed comparison pattern. Contour kinds are rejected since
/// their mask comes out of the attack.
pub fn generate(kind: PatternKind, gt: &GroundTruth, seg: &Mask, budget: usize) -> Result<Mask> {
    let (h, w) = seg.dims();
    match kind {
        PatternKind::AdvPatch => adv_patch(gt, budget, h, w),
        PatternKind::FourPatch => four_patch(gt, budget, h, w),
        PatternKind::Grid2x2 => grid_2x2(gt, budget, h, w),
        PatternKind::SmallGrid => small_grid(gt, budget, h, w),
        PatternKind::Strip => strip(seg, budget),
        PatternKind::Fasc | PatternKind::Oasc => {
            Err(AscError::invalid(format!("{kind} has no fixed mask")))
        }
    }
}
