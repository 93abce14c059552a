//! Barrier-type solutions of the Skorokhod embedding problem for Brownian
//! motion with a general, finitely supported starting law.
//!
//! The crate computes exact stopped laws of rules acting on the running
//! maximum and minimum, calibrates vh-barriers so that the stopped law
//! equals a prescribed target, and verifies optimality, uniqueness and
//! structural properties of the result.

pub mod analysis;
pub mod barriers;
pub mod calibration;
pub mod engine;
pub mod error;
pub mod measures;
pub mod rules;

pub use barriers::{
    dpoint_cmp, to_dbarrier, union, vh_hit, DBarrier, DPoint, HLine, HitConvention, LevelThreshold, Side,
    TimeSpaceBarrier, TimeSpaceKind, VLine, VhBarrier,
};
pub use calibration::{calibrate_perkins, CalibrationOptions, CalibrationResult, Orientation};
pub use engine::mc::McConfig;
pub use engine::{
    dbarrier_stopped_law, exact_law, exit_split, vh_stopped_law, CriticalGrid, Event, ExitSplit, ExtremaRule,
    ExtremaState, JointAtom, StoppedLaw,
};
pub use error::{BarrierError, CalibrationError, EngineError, MeasureError};
pub use measures::{convex_order, corpus_pair, meet, moment, potential, random_convex_pair, Atom, DiscreteMeasure};
pub use rules::{azema_yor_boundary, should_stop, StepMap, StoppingRule};
