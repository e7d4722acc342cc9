//! Piecewise-linear dynamics of a linear recurrence coupled with the stop operator.

pub mod classifier;
pub mod dsge;
pub mod dynamics;
pub mod error;
pub mod hitting_map;
pub mod hysteresis;
pub mod output;
pub mod planar;
pub mod sweep;

pub use classifier::{classify, predict_attractor, predict_period, Case, PeriodPrediction};
pub use dsge::{DsgeParams, DsgeState, Preset};
pub use dynamics::{detect_attractor, AttractorKind, AttractorReport, DetectionConfig};
pub use error::{Error, Result};
pub use planar::{step, step_n, PlanarParams, PlanarState};
