//! Sparse contour attacks.
//!
//! An attack searches for a pattern `P = (M, T)` that maximizes the
//! disappearing loss `J = -sum_i ln p_i` over the candidate boxes matched to
//! the target, subject to `l0(M) <= budget`. Colors are optimized by
//! clipped gradient ascent for a fixed mask ([`optimize_colors`]); masks are
//! searched by relocating a few pixels at a time inside the object and
//! keeping the candidate only if its optimized loss is strictly higher
//! ([`asc_optimize`]). The search starts from the object's boundary pixels
//! fitted to the budget.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contour::{budget_pixels, extract_boundary, fit_budget, GroundTruth};
use crate::error::{AscError, Result};
use crate::eval::{is_detected_with, DetectionCriterion};
use crate::imagecore::{
    apply_pattern, l0_norm, mask_of, pixel_set, save_color_field, save_image, save_mask,
    ColorField, Image, Mask, Pattern, PixelSet, CHANNELS,
};
use crate::victim::VictimModel;

/// Lower clamp applied to objectness before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Color given to pixels that enter a mask without an incumbent color.
pub const FRESH_COLOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Disappear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Candidate boxes with IoU strictly above this against the target count
    /// toward the loss.
    pub iou_match_threshold: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self {
            kind: LossKind::Disappear,
            iou_match_threshold: 0.5,
        }
    }
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_match_threshold > 0.0 && self.iou_match_threshold < 1.0) {
            return Err(AscError::invalid(format!(
                "iou_match_threshold {} is outside (0, 1)",
                self.iou_match_threshold
            )));
        }
        Ok(())
    }
}

/// `-sum ln(max(p, 1e-12))`; zero for no matches.
pub fn disappear_loss(matched: &[f64]) -> f64 {
    matched.iter().map(|&p| -p.max(PROB_FLOOR).ln()).sum()
}

/// Rule for taking a candidate mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Acceptance {
    /// Only strictly better candidates replace the incumbent.
    Greedy,
    /// Metropolis rule with temperature `initial_temperature * cooling^k`.
    /// The best pattern seen is still what the attack returns.
    Annealing {
        initial_temperature: f64,
        cooling: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Color ascent step size.
    pub step_size: f64,
    pub color_steps_per_round: usize,
    /// Mask sampling rounds; zero leaves the prior mask fixed.
    pub rounds: usize,
    /// Chebyshev radius of a pixel relocation.
    pub sample_radius: usize,
    /// Share of the mask's pixels relocated per proposal (at least one).
    pub move_fraction: f64,
    /// l0 budget as a fraction of the object area.
    pub budget_fraction: f64,
    pub success: DetectionCriterion,
    pub loss: LossSpec,
    pub acceptance: Acceptance,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            color_steps_per_round: 10,
            rounds: 300,
            sample_radius: 5,
            move_fraction: 0.2,
            budget_fraction: 0.05,
            success: DetectionCriterion::default(),
            loss: LossSpec::default(),
            acceptance: Acceptance::Greedy,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(AscError::invalid("step_size must be positive"));
        }
        if self.color_steps_per_round == 0 {
            return Err(AscError::invalid("color_steps_per_round must be positive"));
        }
        if self.sample_radius == 0 {
            return Err(AscError::invalid("sample_radius must be at least 1"));
        }
        if !(self.move_fraction > 0.0 && self.move_fraction <= 1.0) {
            return Err(AscError::invalid("move_fraction must lie in (0, 1]"));
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
            return Err(AscError::invalid("budget_fraction must lie in (0, 1]"));
        }
        if let Acceptance::Annealing {
            initial_temperature,
            cooling,
        } = self.acceptance
        {
            if !(initial_temperature > 0.0 && cooling > 0.0 && cooling <= 1.0) {
                return Err(AscError::invalid(
                    "annealing needs temperature > 0 and cooling in (0, 1]",
                ));
            }
        }
        self.loss.validate()
    }
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    pub pipeline: String,
    pub pattern: Pattern,
    /// Loss of the returned pattern.
    pub best_loss: f64,
    /// Every loss evaluation in order.
    pub loss_trace: Vec<f64>,
    /// Best accepted loss after the initial color pass and after each round.
    pub incumbent_trace: Vec<f64>,
    /// The target is no longer detected on `x ⊕ P*`.
    pub success: bool,
    pub l0_used: usize,
    pub budget: usize,
    pub rounds_used: usize,
    pub wall_ms: u64,
    pub dead_gradient: bool,
    pub diagnostic: Option<String>,
}

/// Outcome of [`optimize_colors`].
#[derive(Debug, Clone)]
pub struct ColorOutcome {
    pub colors: ColorField,
    pub value: f64,
    /// The gradient vanished on every masked entry at the starting point.
    pub dead: bool,
    pub evaluations: Vec<f64>,
}

fn composite(x: &Image, mask: &Mask, colors: &ColorField) -> Result<Image> {
    apply_pattern(x, &Pattern::new(mask.clone(), colors.clone())?)
}

/// Clipped gradient ascent on the colors under a fixed mask:
/// `T <- clip_[0,1](T + step * dJ/dx)` on masked pixels. Returns the best
/// iterate by loss (the starting colors included), not the last one.
#[allow(clippy::too_many_arguments)]
pub fn optimize_colors(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    mask: &Mask,
    t0: &ColorField,
    steps: usize,
    step_size: f64,
    loss: &LossSpec,
) -> Result<ColorOutcome> {
    if mask.dims() != x.dims() || t0.dims() != x.dims() {
        return Err(AscError::shape(
            format!("{}x{} mask and colors", x.height(), x.width()),
            format!("{:?} mask, {:?} colors", mask.dims(), t0.dims()),
        ));
    }
    let first = model.loss_and_grad(&composite(x, mask, t0)?, gt, loss)?;
    let mut evaluations = vec![first.value];
    let masked_grad_zero = |g: &[f64]| {
        mask.ones().all(|(r, c)| {
            let i = (r * x.width() + c) * CHANNELS;
            g[i..i + CHANNELS].iter().all(|v| *v == 0.0)
        })
    };
    if mask.is_empty() || masked_grad_zero(&first.grad) {
        return Ok(ColorOutcome {
            colors: t0.clone(),
            value: first.value,
            dead: !mask.is_empty(),
            evaluations,
        });
    }
    let mut best = (t0.clone(), first.value);
    let mut current = t0.clone();
    let mut grad = first.grad;
    for _ in 0..steps {
        current = current.ascend(mask, &grad, step_size)?;
        debug_assert!(current.data().iter().all(|v| (0.0..=1.0).contains(v)));
        let lg = model.loss_and_grad(&composite(x, mask, &current)?, gt, loss)?;
        evaluations.push(lg.value);
        if lg.value > best.1 {
            best = (current.clone(), lg.value);
        }
        grad = lg.grad;
    }
    Ok(ColorOutcome {
        colors: best.0,
        value: best.1,
        dead: false,
        evaluations,
    })
}

/// Result of one mask proposal.
#[derive(Debug, Clone)]
pub struct Relocation {
    pub pixels: PixelSet,
    /// `(from, to)` for every pixel that moved.
    pub moves: Vec<((usize, usize), (usize, usize))>,
}

/// Proposes a neighbor of `current`: `max(1, ceil(move_fraction * n))`
/// pixels chosen uniformly each jump to a uniformly drawn free pixel of
/// `region` within Chebyshev distance `radius`. A pixel with no legal
/// target stays put.
pub fn sample_pixel_set<R: Rng + ?Sized>(
    current: &PixelSet,
    region: &Mask,
    radius: usize,
    move_fraction: f64,
    budget: usize,
    rng: &mut R,
) -> Result<Relocation> {
    if current.is_empty() {
        return Err(AscError::invalid("cannot relocate an empty pixel set"));
    }
    if radius == 0 {
        return Err(AscError::invalid("sampling radius must be at least 1"));
    }
    let n = current.len();
    let count = ((move_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut coords = current.coords().to_vec();
    let mut occupied: HashSet<(usize, usize)> = coords.iter().copied().collect();
    let (h, w) = region.dims();
    let rad = radius as isize;
    let mut moves = Vec::new();
    let mut targets = Vec::with_capacity((2 * radius + 1).pow(2));
    for slot in index::sample(rng, n, count) {
        let (r, c) = coords[slot];
        targets.clear();
        for dr in -rad..=rad {
            for dc in -rad..=rad {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if (dr, dc) == (0, 0) || nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue;
                }
                let to = (nr as usize, nc as usize);
                if region.get(to.0, to.1) && !occupied.contains(&to) {
                    targets.push(to);
                }
            }
        }
        if targets.is_empty() {
            continue;
        }
        let to = targets[rng.gen_range(0..targets.len())];
        occupied.remove(&(r, c));
        occupied.insert(to);
        coords[slot] = to;
        moves.push(((r, c), to));
    }
    coords.truncate(budget);
    Ok(Relocation {
        pixels: PixelSet::from_unique(coords),
        moves,
    })
}

fn ensure_budget(mask: &Mask, budget: usize) -> Result<()> {
    let used = l0_norm(mask);
    if used > budget {
        return Err(AscError::invalid(format!(
            "mask uses {used} pixels, budget is {budget}"
        )));
    }
    Ok(())
}

fn cloaked(
    model: &dyn VictimModel,
    x: &Image,
    pattern: &Pattern,
    gt: &GroundTruth,
    crit: &DetectionCriterion,
) -> Result<bool> {
    let dets = model.detect(&apply_pattern(x, pattern)?)?;
    Ok(!is_detected_with(&dets, gt, crit))
}

fn check_inputs(model: &dyn VictimModel, x: &Image, config: &AttackConfig) -> Result<()> {
    config.validate()?;
    if let Some(dims) = model.input_dims() {
        if dims != x.dims() {
            return Err(AscError::shape(
                format!("{}x{} image", dims.0, dims.1),
                format!("{}x{} image", x.height(), x.width()),
            ));
        }
    }
    Ok(())
}

/// Budget-fitted boundary of the target's segmentation, with mid-gray colors.
pub fn prior_pattern(
    x: &Image,
    gt: &GroundTruth,
    config: &AttackConfig,
) -> Result<(Pattern, Mask)> {
    let (h, w) = x.dims();
    let seg = gt.segmentation(h, w)?;
    let contour = extract_boundary(&seg)?;
    let budget = budget_pixels(gt, config.budget_fraction);
    let mask = fit_budget(&contour.mask, &seg, budget, config.seed)?;
    Ok((
        Pattern::new(mask, ColorField::filled(h, w, FRESH_COLOR)?)?,
        seg,
    ))
}

/// Where the mask search starts.
enum Start {
    /// Colors still need the initial optimization pass.
    Fresh(Pattern),
    /// Colors already optimized, with their loss.
    Evaluated(Pattern, f64),
}

struct Search<'a> {
    model: &'a dyn VictimModel,
    x: &'a Image,
    gt: &'a GroundTruth,
    region: &'a Mask,
    config: &'a AttackConfig,
    budget: usize,
    trace: Vec<f64>,
    any_live: bool,
}

impl Search<'_> {
    fn colors(&mut self, mask: &Mask, t0: &ColorField) -> Result<ColorOutcome> {
        ensure_budget(mask, self.budget)?;
        let out = optimize_colors(
            self.model,
            self.x,
            self.gt,
            mask,
            t0,
            self.config.color_steps_per_round,
            self.config.step_size,
            &self.config.loss,
        )?;
        self.any_live |= !out.dead;
        self.trace.extend_from_slice(&out.evaluations);
        Ok(out)
    }

    fn cloaked(&self, p: &Pattern) -> Result<bool> {
        cloaked(self.model, self.x, p, self.gt, &self.config.success)
    }

    fn run(
        mut self,
        start: Start,
        prior_trace: Vec<f64>,
        pipeline: &str,
        started: Instant,
    ) -> Result<AttackResult> {
        let cfg = self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        self.trace = prior_trace;
        let (mut inc_mask, mut inc_colors, mut inc_value) = match start {
            Start::Fresh(p) => {
                let (m, t) = p.into_parts();
                let out = self.colors(&m, &t)?;
                (m, out.colors, out.value)
            }
            Start::Evaluated(p, v) => {
                self.any_live = true;
                let (m, t) = p.into_parts();
                (m, t, v)
            }
        };
        ensure_budget(&inc_mask, self.budget)?;
        let mut best = (inc_mask.clone(), inc_colors.clone(), inc_value);
        let mut incumbent_trace = vec![inc_value];
        let mut success = self.cloaked(&Pattern::new(inc_mask.clone(), inc_colors.clone())?)?;
        let mut rounds_used = 0;
        let (h, w) = self.x.dims();

        for round in 1..=cfg.rounds {
            if success {
                break;
            }
            rounds_used = round;
            if inc_mask.is_empty() {
                break;
            }

            // (a) keep refining the incumbent's colors
            let refined = self.colors(&inc_mask, &inc_colors)?;
            if refined.value > inc_value {
                inc_colors = refined.colors;
                inc_value = refined.value;
            }

            // (b) propose a relocated mask, warm-starting colors
            let proposal = sample_pixel_set(
                &pixel_set(&inc_mask),
                self.region,
                cfg.sample_radius,
                cfg.move_fraction,
                self.budget,
                &mut rng,
            )?;
            let cand_mask = mask_of(&proposal.pixels, h, w)?;
            let mut cand_colors = inc_colors.clone();
            for &(_, to) in &proposal.moves {
                cand_colors = cand_colors.with_pixel(to.0, to.1, [FRESH_COLOR; CHANNELS]);
            }

            // (c) optimize the candidate's colors
            let cand = self.colors(&cand_mask, &cand_colors)?;

            // (d) accept
            let accept = match cfg.acceptance {
                Acceptance::Greedy => cand.value > inc_value,
                Acceptance::Annealing {
                    initial_temperature,
                    cooling,
                } => {
                    let temp = initial_temperature * cooling.powi(round as i32);
                    cand.value > inc_value
                        || rng.gen::<f64>() < ((cand.value - inc_value) / temp).exp()
                }
            };
            if accept {
                for &(from, to) in &proposal.moves {
                    let dist = from.0.abs_diff(to.0).max(from.1.abs_diff(to.1));
                    debug_assert!(
                        dist <= cfg.sample_radius,
                        "relocation of {dist} exceeds the radius"
                    );
                }
                inc_mask = cand_mask;
                inc_colors = cand.colors;
                inc_value = cand.value;
            }
            if inc_value > best.2 {
                best = (inc_mask.clone(), inc_colors.clone(), inc_value);
            }
            incumbent_trace.push(best.2);
            success = self.cloaked(&Pattern::new(best.0.clone(), best.1.clone())?)?;
        }

        let pattern = Pattern::new(best.0, best.1)?;
        ensure_budget(pattern.mask(), self.budget)?;
        let diagnostic = (!self.any_live)
            .then(|| "loss gradient was zero on every masked pixel in every pass".to_string());
        Ok(AttackResult {
            pipeline: pipeline.to_string(),
            l0_used: l0_norm(pattern.mask()),
            pattern,
            best_loss: best.2,
            loss_trace: self.trace,
            incumbent_trace,
            success,
            budget: self.budget,
            rounds_used,
            wall_ms: started.elapsed().as_millis() as u64,
            dead_gradient: !self.any_live,
            diagnostic,
        })
    }
}

/// Alternating mask sampling and color optimization from the contour prior.
pub fn asc_optimize(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let started = Instant::now();
    check_inputs(model, x, config)?;
    let (prior, seg) = prior_pattern(x, gt, config)?;
    search(model, x, gt, &seg, config).run(Start::Fresh(prior), Vec::new(), "asc", started)
}

fn search<'a>(
    model: &'a dyn VictimModel,
    x: &'a Image,
    gt: &'a GroundTruth,
    region: &'a Mask,
    config: &'a AttackConfig,
) -> Search<'a> {
    Search {
        model,
        x,
        gt,
        region,
        config,
        budget: budget_pixels(gt, config.budget_fraction),
        trace: Vec::new(),
        any_live: false,
    }
}

/// Fixed contour: the prior mask with optimized colors, no mask search.
pub fn f_asc(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let fixed = AttackConfig {
        rounds: 0,
        ..config.clone()
    };
    let mut r = asc_optimize(model, x, gt, &fixed)?;
    r.pipeline = "fasc".into();
    Ok(r)
}

/// Optimized contour: F-ASC first, and the full mask search only when the
/// fixed contour fails.
pub fn o_asc(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let started = Instant::now();
    let fixed = f_asc(model, x, gt, config)?;
    o_asc_from(model, x, gt, config, fixed, started)
}

/// O-ASC continuing from an F-ASC result computed with the same inputs.
pub fn o_asc_from(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    config: &AttackConfig,
    fixed: AttackResult,
    started: Instant,
) -> Result<AttackResult> {
    if fixed.success || config.rounds == 0 {
        return Ok(AttackResult {
            pipeline: "oasc".into(),
            ..fixed
        });
    }
    let (h, w) = x.dims();
    let seg = gt.segmentation(h, w)?;
    let start = Start::Evaluated(fixed.pattern.clone(), fixed.best_loss);
    search(model, x, gt, &seg, config).run(start, fixed.loss_trace, "oasc", started)
}

/// Baseline pipeline: a fixed mask with optimized colors.
pub fn attack_with_pattern(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    mask: &Mask,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let started = Instant::now();
    check_inputs(model, x, config)?;
    let (h, w) = x.dims();
    let seg = gt.segmentation(h, w)?;
    let fixed = AttackConfig {
        rounds: 0,
        ..config.clone()
    };
    let start = Start::Fresh(Pattern::new(
        mask.clone(),
        ColorField::filled(h, w, FRESH_COLOR)?,
    )?);
    search(model, x, gt, &seg, &fixed).run(start, Vec::new(), "pattern", started)
}

/// Continues an attack under `config.budget_fraction`, starting from a
/// pattern found under a smaller budget. The mask is grown inside the object
/// to the new budget; added pixels take the image's own colors, so the
/// starting composite (and loss) equals that of `init`.
pub fn warm_start(
    model: &dyn VictimModel,
    x: &Image,
    gt: &GroundTruth,
    init: &Pattern,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let started = Instant::now();
    check_inputs(model, x, config)?;
    let (h, w) = x.dims();
    let seg = gt.segmentation(h, w)?;
    let budget = budget_pixels(gt, config.budget_fraction);
    ensure_budget(init.mask(), budget)?;
    let mask = fit_budget(init.mask(), &seg, budget, config.seed)?;
    let mut colors = init.colors().clone();
    for (r, c) in mask.ones().filter(|&(r, c)| !init.mask().get(r, c)) {
        colors = colors.with_pixel(r, c, x.pixel(r, c));
    }
    search(model, x, gt, &seg, config).run(
        Start::Fresh(Pattern::new(mask, colors)?),
        Vec::new(),
        "warm",
        started,
    )
}

/// JSON form of an attack result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackReport {
    pub pipeline: String,
    pub success: bool,
    pub l0_used: usize,
    pub budget: usize,
    pub rounds_used: usize,
    pub wall_ms: u64,
    pub best_loss: f64,
    pub dead_gradient: bool,
    pub diagnostic: Option<String>,
    pub loss_trace: Vec<f64>,
    pub incumbent_trace: Vec<f64>,
    /// `(row, col)` of each selected pixel.
    pub pixels: Vec<[usize; 2]>,
    /// Exact colors at `pixels`.
    pub colors: Vec<[f64; 3]>,
    pub height: usize,
    pub width: usize,
    pub config: AttackConfig,
    /// Extra provenance supplied by the caller (input paths, image id, ...).
    #[serde(default)]
    pub context: serde_json::Value,
    /// Renders written next to the report, relative to its directory.
    #[serde(default)]
    pub files: RenderFiles,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RenderFiles {
    pub original: Option<String>,
    pub mask: Option<String>,
    pub colors: Option<String>,
    pub adversarial: Option<String>,
}

impl AttackResult {
    pub fn report(&self, config: &AttackConfig, context: serde_json::Value) -> AttackReport {
        let mask = self.pattern.mask();
        let colors = self.pattern.colors();
        AttackReport {
            pipeline: self.pipeline.clone(),
            success: self.success,
            l0_used: self.l0_used,
            budget: self.budget,
            rounds_used: self.rounds_used,
            wall_ms: self.wall_ms,
            best_loss: self.best_loss,
            dead_gradient: self.dead_gradient,
            diagnostic: self.diagnostic.clone(),
            loss_trace: self.loss_trace.clone(),
            incumbent_trace: self.incumbent_trace.clone(),
            pixels: mask.ones().map(|(r, c)| [r, c]).collect(),
            colors: mask.ones().map(|(r, c)| colors.pixel(r, c)).collect(),
            height: mask.height(),
            width: mask.width(),
            config: config.clone(),
            context,
            files: RenderFiles::default(),
        }
    }

    /// Writes `result.json` plus PNG renders of `x`, `M*`, `T*` and
    /// `x ⊕ P*` into `dir`. Returns the JSON path.
    pub fn save(
        &self,
        dir: &Path,
        x: &Image,
        config: &AttackConfig,
        context: serde_json::Value,
    ) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|source| AscError::Unwritable {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut report = self.report(config, context);
        save_image(x, dir.join("original.png"))?;
        save_mask(self.pattern.mask(), dir.join("mask.png"))?;
        save_color_field(self.pattern.colors(), dir.join("colors.png"))?;
        save_image(
            &apply_pattern(x, &self.pattern)?,
            dir.join("adversarial.png"),
        )?;
        report.files = RenderFiles {
            original: Some("original.png".into()),
            mask: Some("mask.png".into()),
            colors: Some("colors.png".into()),
            adversarial: Some("adversarial.png".into()),
        };
        let path = dir.join("result.json");
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(&path, json).map_err(|source| AscError::Unwritable {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

impl AttackReport {
    /// Rebuilds the exact pattern from the stored pixels and colors.
    pub fn pattern(&self) -> Result<Pattern> {
        let ps = PixelSet::new(self.pixels.iter().map(|p| (p[0], p[1])).collect())?;
        let mask = mask_of(&ps, self.height, self.width)?;
        let mut colors = ColorField::filled(self.height, self.width, FRESH_COLOR)?;
        for (p, rgb) in self.pixels.iter().zip(&self.colors) {
            colors = colors.with_pixel(p[0], p[1], *rgb);
        }
        Pattern::new(mask, colors)
    }
}
