use serde::{Deserialize, Serialize};

/// Axis-aligned box in continuous pixel coordinates, pixel centers at
/// integer positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub row_min: f64,
    pub col_min: f64,
    pub row_max: f64,
    pub col_max: f64,
}

impl BBox {
    pub fn new(row_min: f64, col_min: f64, row_max: f64, col_max: f64) -> Self {
        Self {
            row_min,
            col_min,
            row_max,
            col_max,
        }
    }

    pub fn from_center(center_row: f64, center_col: f64, height: f64, width: f64) -> Self {
        Self {
            row_min: center_row - height / 2.0,
            col_min: center_col - width / 2.0,
            row_max: center_row + height / 2.0,
            col_max: center_col + width / 2.0,
        }
    }

    pub fn height(&self) -> f64 {
        self.row_max - self.row_min
    }

    pub fn width(&self) -> f64 {
        self.col_max - self.col_min
    }

    pub fn area(&self) -> f64 {
        self.height().max(0.0) * self.width().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.row_min + self.row_max) / 2.0,
            (self.col_min + self.col_max) / 2.0,
        )
    }

    pub fn is_valid(&self) -> bool {
        [self.row_min, self.col_min, self.row_max, self.col_max]
            .iter()
            .all(|v| v.is_finite())
            && self.row_min <= self.row_max
            && self.col_min <= self.col_max
    }

    /// Inclusive integer pixel range `(r0, c0, r1, c1)` of pixel centers
    /// covered by the box and lying on a `height x width` canvas, or `None`
    /// when that range is empty.
    pub fn pixel_range(&self, height: usize, width: usize) -> Option<(usize, usize, usize, usize)> {
        let r0 = self.row_min.ceil().max(0.0);
        let c0 = self.col_min.ceil().max(0.0);
        let r1 = self.row_max.floor().min(height as f64 - 1.0);
        let c1 = self.col_max.floor().min(width as f64 - 1.0);
        if r0 > r1 || c0 > c1 {
            return None;
        }
        Some((r0 as usize, c0 as usize, r1 as usize, c1 as usize))
    }
}

/// Intersection over union. Zero-area boxes score 0 against everything,
/// themselves included.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (area_a, area_b) = (a.area(), b.area());
    if area_a <= 0.0 || area_b <= 0.0 {
        return 0.0;
    }
    let ih = (a.row_max.min(b.row_max) - a.row_min.max(b.row_min)).max(0.0);
    let iw = (a.col_max.min(b.col_max) - a.col_min.max(b.col_min)).max(0.0);
    let inter = ih * iw;
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}
