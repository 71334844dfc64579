//! COCO-style datasets: a directory of PNGs plus `annotations.json`.
//!
//! On disk boxes are `[x, y, w, h]` and polygons are flat `[x1, y1, ...]`
//! lists, with `x` the column. In memory everything is `(row, col)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contour::{rasterize_polygon, GroundTruth};
use crate::error::{AscError, Result};
use crate::geom::BBox;
use crate::imagecore::{load_image, save_image};
use crate::victim::scenes::CATEGORY;
use crate::victim::Scene;

pub const ANNOTATIONS_FILE: &str = "annotations.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub height: usize,
    pub width: usize,
    pub file_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    #[serde(default)]
    pub id: u64,
    pub image_id: u64,
    pub bbox: [f64; 4],
    pub segmentation: Vec<Vec<f64>>,
    #[serde(default)]
    pub area: f64,
    pub category_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CocoFile {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    pub categories: Vec<CocoCategory>,
}

fn to_annotation(id: u64, image_id: u64, gt: &GroundTruth, category_id: u64) -> CocoAnnotation {
    let b = &gt.bbox;
    CocoAnnotation {
        id,
        image_id,
        bbox: [b.col_min, b.row_min, b.width(), b.height()],
        segmentation: gt
            .polygons
            .iter()
            .map(|p| p.iter().flat_map(|&(r, c)| [c, r]).collect())
            .collect(),
        area: gt.object_area as f64,
        category_id,
    }
}

impl CocoAnnotation {
    /// Converts to a ground-truth object on a `height x width` canvas. The
    /// stored box is kept; the area is recomputed from the polygons.
    pub fn to_ground_truth(
        &self,
        height: usize,
        width: usize,
        category: &str,
    ) -> Result<GroundTruth> {
        let mut polygons = Vec::with_capacity(self.segmentation.len());
        for flat in &self.segmentation {
            if flat.len() % 2 != 0 {
                return Err(AscError::invalid(format!(
                    "annotation {}: polygon has an odd number of coordinates",
                    self.id
                )));
            }
            polygons.push(flat.chunks(2).map(|xy| (xy[1], xy[0])).collect::<Vec<_>>());
        }
        let [x, y, w, h] = self.bbox;
        let bbox = BBox::new(y, x, y + h, x + w);
        if !bbox.is_valid() {
            return Err(AscError::invalid(format!(
                "annotation {}: invalid bbox",
                self.id
            )));
        }
        let area = rasterize_polygon(&polygons, height, width)?.count();
        Ok(GroundTruth {
            bbox,
            polygons,
            object_area: area,
            category: category.to_string(),
        })
    }
}

impl CocoFile {
    pub fn from_scenes(scenes: &[Scene]) -> Self {
        let mut file = CocoFile {
            categories: vec![CocoCategory {
                id: 1,
                name: CATEGORY.into(),
            }],
            ..Default::default()
        };
        for s in scenes {
            file.images.push(CocoImage {
                id: s.id,
                height: s.image.height(),
                width: s.image.width(),
                file_name: image_file_name(s.id),
            });
            for gt in &s.objects {
                let id = file.annotations.len() as u64 + 1;
                file.annotations.push(to_annotation(id, s.id, gt, 1));
            }
        }
        file
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| AscError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| AscError::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    fn category_name(&self, id: u64) -> String {
        self.categories
            .iter()
            .find(|c| c.id == id)
            .map_or_else(|| id.to_string(), |c| c.name.clone())
    }

    /// Objects annotated on `image`, in file order.
    pub fn objects(&self, image: &CocoImage) -> Result<Vec<GroundTruth>> {
        self.annotations
            .iter()
            .filter(|a| a.image_id == image.id)
            .map(|a| {
                a.to_ground_truth(
                    image.height,
                    image.width,
                    &self.category_name(a.category_id),
                )
            })
            .collect()
    }

    /// Entry for an image file, matched by file name (the only entry is
    /// returned when there is just one).
    pub fn find_image(&self, file_name: &str) -> Option<&CocoImage> {
        self.images
            .iter()
            .find(|i| i.file_name == file_name)
            .or_else(|| (self.images.len() == 1).then(|| &self.images[0]))
    }
}

pub fn image_file_name(id: u64) -> String {
    format!("{id:06}.png")
}

/// Writes each scene as a PNG and all annotations as `annotations.json`.
pub fn save_dataset(scenes: &[Scene], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| AscError::Unwritable {
        path: dir.to_path_buf(),
        source,
    })?;
    for s in scenes {
        save_image(&s.image, dir.join(image_file_name(s.id)))?;
    }
    let path = dir.join(ANNOTATIONS_FILE);
    let json = serde_json::to_string_pretty(&CocoFile::from_scenes(scenes))?;
    std::fs::write(&path, json).map_err(|source| AscError::Unwritable { path, source })
}

/// Reads a dataset written by [`save_dataset`] (or any file following the
/// same schema). Scenes come back ordered by image id.
pub fn load_dataset(dir: &Path) -> Result<Vec<Scene>> {
    let file = CocoFile::load(&dir.join(ANNOTATIONS_FILE))?;
    let mut by_id = BTreeMap::new();
    for img in &file.images {
        let image = load_image(dir.join(&img.file_name))?;
        if image.dims() != (img.height, img.width) {
            return Err(AscError::Malformed {
                path: dir.join(&img.file_name),
                reason: format!(
                    "annotated as {}x{}, file is {}x{}",
                    img.height,
                    img.width,
                    image.height(),
                    image.width()
                ),
            });
        }
        by_id.insert(
            img.id,
            Scene {
                id: img.id,
                image,
                objects: file.objects(img)?,
            },
        );
    }
    Ok(by_id.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::victim::gen_scenes;

    /// Polygons and areas survive exactly; `x + w` may be off by an ulp.
    fn assert_same_objects(a: &[GroundTruth], b: &[GroundTruth]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.polygons, y.polygons);
            assert_eq!(x.object_area, y.object_area);
            assert_eq!(x.category, y.category);
            let (p, q) = (&x.bbox, &y.bbox);
            for (u, v) in [
                (p.row_min, q.row_min),
                (p.col_min, q.col_min),
                (p.row_max, q.row_max),
                (p.col_max, q.col_max),
            ] {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn annotation_round_trip() {
        let scenes = gen_scenes(3, 11).unwrap();
        let file = CocoFile::from_scenes(&scenes);
        let json = serde_json::to_string(&file).unwrap();
        let back: CocoFile = serde_json::from_str(&json).unwrap();
        for (s, img) in scenes.iter().zip(&back.images) {
            assert_same_objects(&back.objects(img).unwrap(), &s.objects);
        }
    }

    #[test]
    fn dataset_round_trip_quantizes_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let scenes = gen_scenes(2, 5).unwrap();
        save_dataset(&scenes, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in scenes.iter().zip(&back) {
            assert_same_objects(&a.objects, &b.objects);
            let err = a
                .image
                .data()
                .iter()
                .zip(b.image.data())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn coco_box_convention() {
        let ann = CocoAnnotation {
            id: 1,
            image_id: 0,
            bbox: [2.0, 5.0, 10.0, 4.0],
            segmentation: vec![vec![2.0, 5.0, 12.0, 5.0, 12.0, 9.0, 2.0, 9.0]],
            area: 0.0,
            category_id: 1,
        };
        let gt = ann.to_ground_truth(32, 32, "object").unwrap();
        assert_eq!(gt.bbox, BBox::new(5.0, 2.0, 9.0, 12.0));
        assert_eq!(gt.object_area, 5 * 11);
        assert_eq!(gt.polygons[0][1], (5.0, 12.0));
    }

    #[test]
    fn missing_annotations_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(dir.path()).unwrap_err().is_io());
    }
}
