//! Detection criterion, SDR and the benchmark harness.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{attack_with_pattern, f_asc, o_asc_from, AttackConfig, AttackResult};
use crate::contour::{budget_pixels, GroundTruth};
use crate::error::{AscError, Result};
pub use crate::geom::iou;
use crate::imagecore::apply_pattern;
use crate::patterns::{generate, PatternKind};
use crate::victim::{Detection, Scene, VictimModel};

/// A target counts as detected when some box overlaps it with IoU strictly
/// above `iou_threshold` and has objectness strictly above `conf_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionCriterion {
    pub iou_threshold: f64,
    pub conf_threshold: f64,
}

impl Default for DetectionCriterion {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            conf_threshold: 0.5,
        }
    }
}

pub fn is_detected(dets: &[Detection], gt: &GroundTruth) -> bool {
    is_detected_with(dets, gt, &DetectionCriterion::default())
}

pub fn is_detected_with(dets: &[Detection], gt: &GroundTruth, crit: &DetectionCriterion) -> bool {
    dets.iter()
        .any(|d| iou(&d.bbox, &gt.bbox) > crit.iou_threshold && d.objectness > crit.conf_threshold)
}

/// Highest IoU of any detection with the target, and the highest objectness
/// among detections overlapping it above `iou_threshold` (0 if none).
pub fn best_match(dets: &[Detection], gt: &GroundTruth, crit: &DetectionCriterion) -> (f64, f64) {
    let mut best_iou = 0.0f64;
    let mut best_conf = 0.0f64;
    for d in dets {
        let v = iou(&d.bbox, &gt.bbox);
        best_iou = best_iou.max(v);
        if v > crit.iou_threshold {
            best_conf = best_conf.max(d.objectness);
        }
    }
    (best_iou, best_conf)
}

/// Share of `true` entries; 0 for an empty list.
pub fn sdr(per_image_detected: &[bool]) -> f64 {
    if per_image_detected.is_empty() {
        return 0.0;
    }
    per_image_detected.iter().filter(|&&d| d).count() as f64 / per_image_detected.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub patterns: Vec<PatternKind>,
    pub budgets: Vec<f64>,
    /// Global seed; every image derives its own attack seed from it.
    pub seed: u64,
    pub workers: usize,
    /// `budget_fraction` and `seed` are overridden per cell.
    pub attack: AttackConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            patterns: PatternKind::ALL.to_vec(),
            budgets: vec![0.05, 0.035],
            seed: 0,
            workers: 1,
            attack: AttackConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patterns.is_empty() || self.budgets.is_empty() {
            return Err(AscError::invalid(
                "bench needs at least one pattern and one budget",
            ));
        }
        if self.workers == 0 {
            return Err(AscError::invalid("workers must be at least 1"));
        }
        for &b in &self.budgets {
            AttackConfig {
                budget_fraction: b,
                ..self.attack.clone()
            }
            .validate()?;
        }
        self.attack.validate()
    }
}

/// One evaluated (image, pattern, budget) cell. Clean rows use pattern
/// `clean` and budget 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub image_id: u64,
    pub pattern: String,
    pub budget_fraction: f64,
    pub detected: u8,
    pub best_iou: f64,
    pub best_conf: f64,
    pub l0_used: usize,
    /// Pixel budget the row was held to (0 for clean rows).
    #[serde(skip)]
    pub budget: usize,
    pub rounds: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub image_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub pattern: String,
    /// SDR per budget, in `budgets` order.
    pub sdr: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub images: usize,
    pub clean_sdr: f64,
    pub table: Vec<TableRow>,
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<Skip>,
}

/// Per-image attack seed.
pub fn image_seed(seed: u64, image_id: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ image_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Outcome {
    Rows(Vec<BenchRow>),
    Skipped(Skip),
}

fn row(
    model: &dyn VictimModel,
    scene: &Scene,
    gt: &GroundTruth,
    crit: &DetectionCriterion,
    pattern: PatternKind,
    budget_fraction: f64,
    result: &AttackResult,
) -> Result<BenchRow> {
    let dets = model.detect(&apply_pattern(&scene.image, &result.pattern)?)?;
    let (best_iou, best_conf) = best_match(&dets, gt, crit);
    Ok(BenchRow {
        image_id: scene.id,
        pattern: pattern.name().into(),
        budget_fraction,
        detected: is_detected_with(&dets, gt, crit) as u8,
        best_iou,
        best_conf,
        l0_used: result.l0_used,
        budget: result.budget,
        rounds: result.rounds_used,
        wall_ms: result.wall_ms,
    })
}

fn bench_image(model: &dyn VictimModel, scene: &Scene, config: &BenchConfig) -> Result<Outcome> {
    let skip = |reason: String| {
        Ok(Outcome::Skipped(Skip {
            image_id: scene.id,
            reason,
        }))
    };
    if let Some(dims) = model.input_dims() {
        if dims != scene.image.dims() {
            return skip(format!(
                "image is {}x{}, model expects {}x{}",
                scene.image.height(),
                scene.image.width(),
                dims.0,
                dims.1
            ));
        }
    }
    let Some(gt) = scene.target() else {
        return skip("no annotated object".into());
    };
    if gt.object_area == 0 {
        return skip("target has an empty segmentation".into());
    }
    let crit = &config.attack.success;
    let (h, w) = scene.image.dims();
    let seg = gt.segmentation(h, w)?;
    let started = Instant::now();
    let clean = model.detect(&scene.image)?;
    let (best_iou, best_conf) = best_match(&clean, gt, crit);
    let mut rows = vec![BenchRow {
        image_id: scene.id,
        pattern: "clean".into(),
        budget_fraction: 0.0,
        detected: is_detected_with(&clean, gt, crit) as u8,
        best_iou,
        best_conf,
        l0_used: 0,
        budget: 0,
        rounds: 0,
        wall_ms: started.elapsed().as_millis() as u64,
    }];
    // O-ASC continues from F-ASC, so a benched F-ASC run is reused
    let mut fixed_cache: Vec<(f64, AttackResult)> = Vec::new();
    for &pattern in &config.patterns {
        for &fraction in &config.budgets {
            let cfg = AttackConfig {
                budget_fraction: fraction,
                seed: image_seed(config.seed, scene.id),
                ..config.attack.clone()
            };
            let result = match pattern {
                PatternKind::Fasc => {
                    let r = f_asc(model, &scene.image, gt, &cfg)?;
                    fixed_cache.push((fraction, r.clone()));
                    r
                }
                PatternKind::Oasc => {
                    let started = Instant::now();
                    let fixed = match fixed_cache.iter().position(|(b, _)| *b == fraction) {
                        Some(i) => fixed_cache.swap_remove(i).1,
                        None => f_asc(model, &scene.image, gt, &cfg)?,
                    };
                    o_asc_from(model, &scene.image, gt, &cfg, fixed, started)?
                }
                kind => {
                    let mask = match generate(kind, gt, &seg, budget_pixels(gt, fraction)) {
                        Ok(m) => m,
                        Err(e) => return skip(format!("{kind} at budget {fraction}: {e}")),
                    };
                    attack_with_pattern(model, &scene.image, gt, &mask, &cfg)?
                }
            };
            rows.push(row(model, scene, gt, crit, pattern, fraction, &result)?);
        }
    }
    Ok(Outcome::Rows(rows))
}

/// Runs every pattern at every budget on the designated target of each
/// scene. Work is spread over `config.workers` threads; the report is
/// assembled in dataset order, so it does not depend on scheduling.
pub fn run_bench(
    model: &dyn VictimModel,
    dataset: &[Scene],
    config: &BenchConfig,
) -> Result<BenchReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| AscError::invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        dataset
            .par_iter()
            .map(|scene| {
                let out = bench_image(model, scene, config);
                log::debug!("bench: image {} done", scene.id);
                out
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for out in outcomes {
        match out? {
            Outcome::Rows(r) => rows.extend(r),
            Outcome::Skipped(s) => {
                log::warn!("skipping image {}: {}", s.image_id, s.reason);
                skipped.push(s);
            }
        }
    }
    let rate = |pattern: &str, budget: Option<f64>| {
        let flags: Vec<bool> = rows
            .iter()
            .filter(|r| r.pattern == pattern && budget.is_none_or(|b| r.budget_fraction == b))
            .map(|r| r.detected == 1)
            .collect();
        sdr(&flags)
    };
    let clean_sdr = rate("clean", None);
    let mut table = vec![TableRow {
        pattern: "clean".into(),
        sdr: vec![clean_sdr; config.budgets.len()],
    }];
    for p in &config.patterns {
        table.push(TableRow {
            pattern: p.name().into(),
            sdr: config
                .budgets
                .iter()
                .map(|&b| rate(p.name(), Some(b)))
                .collect(),
        });
    }
    Ok(BenchReport {
        config: config.clone(),
        images: dataset.len() - skipped.len(),
        clean_sdr,
        table,
        rows,
        skipped,
    })
}

fn budget_label(b: f64) -> String {
    format!("budget_{:.1}", b * 100.0)
}

impl BenchReport {
    /// SDR grid: one row per pattern (clean first), one column per budget,
    /// values in percent.
    pub fn table_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["pattern".to_string()];
        header.extend(self.config.budgets.iter().map(|&b| budget_label(b)));
        w.write_record(&header)?;
        for row in &self.table {
            let mut rec = vec![row.pattern.clone()];
            rec.extend(row.sdr.iter().map(|v| format!("{:.2}", v * 100.0)));
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(
            w.into_inner()
                .map_err(|e| AscError::invalid(e.to_string()))?,
        )
        .expect("csv is utf-8"))
    }

    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        Ok(String::from_utf8(
            w.into_inner()
                .map_err(|e| AscError::invalid(e.to_string()))?,
        )
        .expect("csv is utf-8"))
    }

    /// SDR of `pattern` at `budget`, if both were benched.
    pub fn sdr_of(&self, pattern: &str, budget: f64) -> Option<f64> {
        let col = self.config.budgets.iter().position(|&b| b == budget)?;
        self.table
            .iter()
            .find(|r| r.pattern == pattern)
            .map(|r| r.sdr[col])
    }

    /// Writes `sdr_table.csv`, `rows.csv` and `report.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let unwritable = |path: &Path| {
            let path = path.to_path_buf();
            move |source| AscError::Unwritable { path, source }
        };
        std::fs::create_dir_all(dir).map_err(unwritable(dir))?;
        let files = [
            ("sdr_table.csv", self.table_csv()?),
            ("rows.csv", self.rows_csv()?),
            ("report.json", serde_json::to_string_pretty(self)?),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(unwritable(&path))?;
            out.push(path);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BBox;
    use proptest::prelude::*;

    fn gt() -> GroundTruth {
        GroundTruth::from_polygons(
            vec![vec![(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]],
            32,
            32,
            "object",
        )
        .unwrap()
    }

    /// Box with the given IoU against `(0,0,10,10)`: same rows, shifted
    /// columns. Overlap `10 - s`, union `10 + s` in units of 10.
    fn det_with_iou(target: f64, conf: f64) -> Detection {
        let s = 10.0 * (1.0 - target) / (1.0 + target);
        Detection {
            bbox: BBox::new(0.0, s, 10.0, 10.0 + s),
            objectness: conf,
            category: "object".into(),
        }
    }

    #[test]
    fn strict_criterion() {
        let g = gt();
        let d = det_with_iou(0.6, 0.6);
        assert!((iou(&d.bbox, &g.bbox) - 0.6).abs() < 1e-12);
        assert!(is_detected(&[d], &g));
        assert!(!is_detected(&[det_with_iou(0.6, 0.5)], &g));
        assert!(!is_detected(
            &[Detection {
                bbox: BBox::new(0.0, 0.0, 10.0, 20.0),
                objectness: 0.9,
                category: "object".into()
            }],
            &g
        ));
        assert!(!is_detected(&[], &g));
    }

    #[test]
    fn sdr_examples() {
        assert_eq!(sdr(&[true, true, false, false]), 0.5);
        assert_eq!(sdr(&[false; 7]), 0.0);
        let flags: Vec<bool> = (0..1000).map(|i| i < 983).collect();
        assert_eq!(format!("{:.1}", sdr(&flags) * 100.0), "98.3");
    }

    #[test]
    fn iou_example() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(5.0, 5.0, 15.0, 15.0);
        assert!((iou(&a, &b) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn image_seeds_differ() {
        assert_ne!(image_seed(0, 1), image_seed(0, 2));
        assert_ne!(image_seed(1, 1), image_seed(0, 1));
        assert_eq!(image_seed(5, 9), image_seed(5, 9));
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.0..40.0f64, 0.0..40.0f64)
            .prop_map(|(r, c, h, w)| BBox::new(r, c, r + h, c + w))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let (ab, ba) = (iou(&a, &b), iou(&b, &a));
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            if a.area() > 0.0 {
                prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
            }
        }
    }
}
