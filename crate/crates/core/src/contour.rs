//! Ground-truth objects, polygon fill, the contour prior and l0 budget fitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AscError, Result};
use crate::geom::BBox;
use crate::imagecore::{pixel_set, Mask, PixelSet};

/// Polygon vertex as `(row, col)`.
pub type Point = (f64, f64);

/// One annotated object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bbox: BBox,
    pub polygons: Vec<Vec<Point>>,
    /// Pixel count of the filled segmentation.
    pub object_area: usize,
    pub category: String,
}

impl GroundTruth {
    /// Builds an object from its segmentation polygons, deriving the box from
    /// the vertex extents and the area from the rasterized fill.
    pub fn from_polygons(
        polygons: Vec<Vec<Point>>,
        height: usize,
        width: usize,
        category: impl Into<String>,
    ) -> Result<Self> {
        let seg = rasterize_polygon(&polygons, height, width)?;
        let mut bbox = BBox::new(
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for &(r, c) in polygons.iter().flatten() {
            bbox.row_min = bbox.row_min.min(r);
            bbox.col_min = bbox.col_min.min(c);
            bbox.row_max = bbox.row_max.max(r);
            bbox.col_max = bbox.col_max.max(c);
        }
        Ok(Self {
            bbox,
            polygons,
            object_area: seg.count(),
            category: category.into(),
        })
    }

    pub fn segmentation(&self, height: usize, width: usize) -> Result<Mask> {
        rasterize_polygon(&self.polygons, height, width)
    }
}

/// Boundary pixels of an object's filled segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorContour {
    pub mask: Mask,
}

/// Fills polygons with the even-odd rule, sampling at pixel centers
/// (pixel `(r, c)` is the point `(r, c)`). Centers lying exactly on an edge
/// count as inside. Several polygons are united. Geometry outside the canvas
/// is clipped away, never clamped onto the border.
pub fn rasterize_polygon(polygons: &[Vec<Point>], height: usize, width: usize) -> Result<Mask> {
    let mut out = Mask::zeros(height, width);
    for poly in polygons {
        if poly.len() < 3 {
            return Err(AscError::invalid(format!(
                "polygon needs at least 3 vertices, got {}",
                poly.len()
            )));
        }
        if poly.iter().any(|(r, c)| !r.is_finite() || !c.is_finite()) {
            return Err(AscError::invalid("polygon vertex is not finite"));
        }
        fill_one(poly, &mut out);
    }
    Ok(out)
}

const ON_EDGE_EPS: f64 = 1e-9;

fn fill_one(poly: &[Point], out: &mut Mask) {
    let (height, width) = out.dims();
    let n = poly.len();
    let row_lo = poly
        .iter()
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min)
        .ceil()
        .max(0.0);
    let row_hi = poly
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .floor()
        .min(height as f64 - 1.0);
    if row_lo > row_hi {
        return;
    }
    let mut crossings = Vec::with_capacity(n);
    let mark = |out: &mut Mask, r: usize, lo: f64, hi: f64| {
        let c0 = (lo - ON_EDGE_EPS).ceil().max(0.0);
        let c1 = (hi + ON_EDGE_EPS).floor().min(width as f64 - 1.0);
        if c0 <= c1 {
            for c in c0 as usize..=c1 as usize {
                out.set(r, c, true);
            }
        }
    };
    for r in row_lo as usize..=row_hi as usize {
        let y = r as f64;
        crossings.clear();
        for i in 0..n {
            let (y0, x0) = poly[i];
            let (y1, x1) = poly[(i + 1) % n];
            if y0 == y1 {
                // horizontal edges contribute only their own pixels
                if y0 == y {
                    mark(out, r, x0.min(x1), x0.max(x1));
                }
                continue;
            }
            let (ylo, yhi) = (y0.min(y1), y0.max(y1));
            if y < ylo || y > yhi {
                continue;
            }
            let x = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
            // centers on the edge itself are inside
            mark(out, r, x, x);
            // half-open rule so shared vertices are counted once
            if y >= ylo && y < yhi {
                crossings.push(x);
            }
        }
        crossings.sort_by(|a, b| a.total_cmp(b));
        for pair in crossings.chunks_exact(2) {
            mark(out, r, pair[0], pair[1]);
        }
    }
}

/// Inner 4-connected boundary: selected pixels with at least one
/// 4-neighbor that is unselected or off the canvas.
pub fn extract_boundary(seg: &Mask) -> Result<PriorContour> {
    if seg.is_empty() {
        return Err(AscError::invalid(
            "cannot extract the boundary of an empty segmentation",
        ));
    }
    let mask = Mask::from_fn(seg.height(), seg.width(), |r, c| {
        if !seg.get(r, c) {
            return false;
        }
        let (r, c) = (r as isize, c as isize);
        [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
            .iter()
            .any(|&(nr, nc)| !seg.get_signed(nr, nc))
    });
    Ok(PriorContour { mask })
}

/// Prior contour of an object: boundary of its rasterized polygons.
pub fn prior_contour(gt: &GroundTruth, height: usize, width: usize) -> Result<PriorContour> {
    extract_boundary(&gt.segmentation(height, width)?)
}

/// Pixel budget for an l0 constraint given as a fraction of the object area.
pub fn budget_pixels(gt: &GroundTruth, fraction: f64) -> usize {
    ((fraction * gt.object_area as f64).floor() as usize).max(1)
}

/// Keeps `keep` entries spread at a uniform stride over `coords`. The
/// starting phase within the first stride is drawn from `seed`.
pub(crate) fn stride_prune(
    coords: &[(usize, usize)],
    keep: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    let n = coords.len();
    if keep >= n {
        return coords.to_vec();
    }
    if keep == 0 {
        return Vec::new();
    }
    let step = n as f64 / keep as f64;
    let phase = ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..step);
    (0..keep)
        .map(|i| {
            let idx = ((phase + i as f64 * step).floor() as usize).min(n - 1);
            coords[idx]
        })
        .collect()
}

/// One step of 4-neighbor dilation of `current`, restricted to `region`,
/// returning only the newly reached pixels in row-major order.
pub(crate) fn dilation_ring(current: &Mask, region: &Mask) -> Vec<(usize, usize)> {
    let (h, w) = current.dims();
    let mut ring = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if current.get(r, c) || !region.get(r, c) {
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            if [(ri - 1, ci), (ri + 1, ci), (ri, ci - 1), (ri, ci + 1)]
                .iter()
                .any(|&(nr, nc)| current.get_signed(nr, nc))
            {
                ring.push((r, c));
            }
        }
    }
    ring
}

/// Fits a mask to an l0 budget.
///
/// Too many pixels: a uniform-stride subset along the row-major traversal
/// is kept. Too few: the mask is grown one dilation ring at a time inside
/// `region` (the object's segmentation), every original pixel is kept, and
/// the last ring is stride-pruned so the total lands on the budget. Growth
/// stops early if the region is exhausted.
pub fn fit_budget(m: &Mask, region: &Mask, budget: usize, seed: u64) -> Result<Mask> {
    if budget < 1 {
        return Err(AscError::invalid("budget must be at least one pixel"));
    }
    if m.dims() != region.dims() {
        return Err(AscError::shape(
            format!("{}x{} region", m.height(), m.width()),
            format!("{}x{} region", region.height(), region.width()),
        ));
    }
    let (h, w) = m.dims();
    let n = m.count();
    if n == budget {
        return Ok(m.clone());
    }
    if n > budget {
        let kept = stride_prune(pixel_set(m).coords(), budget, seed);
        return crate::imagecore::mask_of(&PixelSet::from_unique(kept), h, w);
    }
    let mut grown = m.clone();
    let mut total = n;
    let mut ring_seed = seed;
    while total < budget {
        let ring = dilation_ring(&grown, region);
        if ring.is_empty() {
            break;
        }
        let room = budget - total;
        let take = if ring.len() <= room {
            ring
        } else {
            ring_seed = ring_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
            stride_prune(&ring, room, ring_seed)
        };
        total += take.len();
        for (r, c) in take {
            grown.set(r, c, true);
        }
    }
    Ok(grown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent point-in-polygon oracle: on-edge test, then even-odd ray
    /// cast toward +col.
    fn oracle_inside(poly: &[Point], y: f64, x: f64) -> bool {
        let n = poly.len();
        for i in 0..n {
            let (ay, ax) = poly[i];
            let (by, bx) = poly[(i + 1) % n];
            let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
            let within = x >= ax.min(bx) - 1e-12
                && x <= ax.max(bx) + 1e-12
                && y >= ay.min(by) - 1e-12
                && y <= ay.max(by) + 1e-12;
            if cross.abs() < 1e-9 && within {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let (ay, ax) = poly[i];
            let (by, bx) = poly[(i + 1) % n];
            if (ay > y) != (by > y) {
                let xc = ax + (y - ay) * (bx - ax) / (by - ay);
                if xc > x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn oracle_mask(poly: &[Point], h: usize, w: usize) -> Mask {
        Mask::from_fn(h, w, |r, c| oracle_inside(poly, r as f64, c as f64))
    }

    #[test]
    fn square_fill_counts_sixteen() {
        let sq = vec![(1.0, 1.0), (1.0, 4.0), (4.0, 4.0), (4.0, 1.0)];
        let m = rasterize_polygon(std::slice::from_ref(&sq), 6, 6).unwrap();
        assert_eq!(m.count(), 16);
        assert_eq!(m, oracle_mask(&sq, 6, 6));
    }

    #[test]
    fn triangle_matches_point_in_polygon_oracle() {
        let tri = vec![(0.0, 0.0), (0.0, 4.0), (4.0, 0.0)];
        let m = rasterize_polygon(std::slice::from_ref(&tri), 6, 6).unwrap();
        assert_eq!(m, oracle_mask(&tri, 6, 6));
        assert_eq!(m, Mask::from_fn(6, 6, |r, c| r + c <= 4));
    }

    #[test]
    fn outside_polygon_is_empty_and_degenerate_rejected() {
        let far = vec![(20.0, 20.0), (20.0, 30.0), (30.0, 30.0)];
        assert!(rasterize_polygon(&[far], 8, 8).unwrap().is_empty());
        let neg = vec![(-9.0, -9.0), (-9.0, -2.0), (-2.0, -2.0)];
        assert!(rasterize_polygon(&[neg], 8, 8).unwrap().is_empty());
        assert!(rasterize_polygon(&[vec![(0.0, 0.0), (1.0, 1.0)]], 8, 8).is_err());
    }

    #[test]
    fn boundary_examples() {
        let block = Mask::from_fn(5, 5, |r, c| (1..=3).contains(&r) && (1..=3).contains(&c));
        let b = extract_boundary(&block).unwrap().mask;
        assert_eq!(b.count(), 8);
        assert!(!b.get(2, 2));

        let single = Mask::from_fn(4, 4, |r, c| r == 2 && c == 1);
        assert_eq!(extract_boundary(&single).unwrap().mask, single);

        let full = Mask::full(6, 7);
        let ring = extract_boundary(&full).unwrap().mask;
        assert_eq!(
            ring,
            Mask::from_fn(6, 7, |r, c| r == 0 || c == 0 || r == 5 || c == 6)
        );

        assert!(extract_boundary(&Mask::zeros(3, 3)).is_err());
    }

    #[test]
    fn budget_examples() {
        let gt = |area| GroundTruth {
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
            polygons: vec![],
            object_area: area,
            category: "person".into(),
        };
        assert_eq!(budget_pixels(&gt(1000), 0.05), 50);
        assert_eq!(budget_pixels(&gt(1000), 0.035), 35);
        assert_eq!(budget_pixels(&gt(10), 0.035), 1);
    }

    #[test]
    fn fit_budget_keeps_feasible_masks() {
        let m = Mask::from_fn(10, 10, |r, _| r == 3);
        assert_eq!(fit_budget(&m, &Mask::full(10, 10), 10, 1).unwrap(), m);
        assert!(fit_budget(&m, &Mask::full(10, 10), 0, 1).is_err());
    }

    #[test]
    fn fit_budget_prunes_to_subset() {
        let m = Mask::full(10, 10);
        let out = fit_budget(&m, &m, 50, 7).unwrap();
        assert!(out.count() <= 50);
        assert_eq!(out.count(), 50);
        assert!(out.is_subset_of(&m));
    }

    #[test]
    fn fit_budget_thickens_inside_region() {
        // 10x10 square outline = 36 pixels, region is a large filled square
        let region = Mask::from_fn(40, 40, |r, c| (5..35).contains(&r) && (5..35).contains(&c));
        let contour = extract_boundary(&region).unwrap().mask;
        let thin = Mask::from_fn(40, 40, |r, c| {
            (10..20).contains(&r)
                && (10..20).contains(&c)
                && (r == 10 || r == 19 || c == 10 || c == 19)
        });
        assert_eq!(thin.count(), 36);
        let out = fit_budget(&thin, &region, 120, 3).unwrap();
        assert!(out.count() <= 120);
        assert_eq!(out.count(), 120);
        assert!(thin.is_subset_of(&out));
        assert!(out.is_subset_of(&region));
        // contour of a region grows inward only
        let grown = fit_budget(&contour, &region, 200, 3).unwrap();
        assert!(grown.is_subset_of(&region));
    }

    #[test]
    fn fit_budget_stops_when_region_exhausted() {
        let region = Mask::from_fn(6, 6, |r, c| r < 2 && c < 2);
        let seed = Mask::from_fn(6, 6, |r, c| r == 0 && c == 0);
        let out = fit_budget(&seed, &region, 30, 0).unwrap();
        assert_eq!(out, region);
    }

    fn random_shape() -> impl Strategy<Value = Mask> {
        (
            4usize..20,
            4usize..20,
            proptest::collection::vec((0usize..20, 0usize..20, 1usize..8, 1usize..8), 1..4),
        )
            .prop_map(|(h, w, rects)| {
                Mask::from_fn(h, w, |r, c| {
                    rects
                        .iter()
                        .any(|&(r0, c0, rh, cw)| r >= r0 && r < r0 + rh && c >= c0 && c < c0 + cw)
                })
            })
    }

    proptest! {
        #[test]
        fn boundary_neighbor_property(seg in random_shape()) {
            prop_assume!(!seg.is_empty());
            let b = extract_boundary(&seg).unwrap().mask;
            prop_assert!(b.is_subset_of(&seg));
            for r in 0..seg.height() {
                for c in 0..seg.width() {
                    let (ri, ci) = (r as isize, c as isize);
                    let interior = seg.get(r, c)
                        && seg.get_signed(ri - 1, ci) && seg.get_signed(ri + 1, ci)
                        && seg.get_signed(ri, ci - 1) && seg.get_signed(ri, ci + 1);
                    prop_assert_eq!(b.get(r, c), seg.get(r, c) && !interior);
                }
            }
        }

        #[test]
        fn fit_budget_invariants(seg in random_shape(), budget in 1usize..80, seed in 0u64..1000) {
            prop_assume!(!seg.is_empty());
            let contour = extract_boundary(&seg).unwrap().mask;
            let a = fit_budget(&contour, &seg, budget, seed).unwrap();
            let b = fit_budget(&contour, &seg, budget, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.count() <= budget);
            prop_assert!(a.is_subset_of(&seg));
            if contour.count() <= budget {
                prop_assert!(contour.is_subset_of(&a));
            } else {
                prop_assert!(a.is_subset_of(&contour));
                prop_assert_eq!(a.count(), budget);
            }
        }

        #[test]
        fn convex_boundary_within_perimeter_bound(r0 in 0usize..10, c0 in 0usize..10, h in 1usize..12, w in 1usize..12) {
            let seg = Mask::from_fn(24, 24, |r, c| r >= r0 && r < r0 + h && c >= c0 && c < c0 + w);
            let b = extract_boundary(&seg).unwrap().mask;
            prop_assert!(b.count() <= 2 * (h + w));
        }

        #[test]
        fn random_polygons_match_oracle(pts in proptest::collection::vec((0i32..16, 0i32..16), 3..7)) {
            let poly: Vec<Point> = pts.iter().map(|&(r, c)| (r as f64, c as f64)).collect();
            let m = rasterize_polygon(std::slice::from_ref(&poly), 16, 16).unwrap();
            prop_assert_eq!(m, oracle_mask(&poly, 16, 16));
        }
    }
}
