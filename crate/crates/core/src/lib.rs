//! Sparse adversarial contour attacks against object detectors.
//!
//! The crate covers the whole loop: image and mask primitives
//! ([`imagecore`]), ground-truth polygons and the boundary prior
//! ([`contour`]), comparison patterns ([`patterns`]), a small differentiable
//! detector with its trainer and scene generator ([`victim`]), the attack
//! itself ([`attack`]) and the SDR benchmark ([`eval`]).

pub mod attack;
pub mod coco;
pub mod contour;
pub mod error;
pub mod eval;
pub mod geom;
pub mod imagecore;
pub mod patterns;
pub mod victim;

pub use attack::{asc_optimize, f_asc, o_asc, AttackConfig, AttackResult, LossSpec};
pub use contour::GroundTruth;
pub use error::{AscError, Result};
pub use eval::{is_detected, run_bench, sdr, BenchConfig, BenchReport};
pub use geom::{iou, BBox};
pub use imagecore::{apply_pattern, render_panel, ColorField, Image, Mask, Pattern, PixelSet};
pub use patterns::PatternKind;
pub use victim::{Detection, Scene, TinyDetector, VictimModel};
