//! Integrated sensing and communication simulation on top of the 5G NR
//! positioning reference signal.
//!
//! A PRS resource grid is reflected by point targets, dechirped against the
//! transmitted grid and turned into a range-Doppler map whose peaks are
//! scored against ground truth. The number of PRBs given to sensing can be
//! swept or adapted with a binary search.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod channel;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod processor;
pub mod rng;
pub mod waveform;

/// Speed of light used throughout, in m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

pub use adaptation::{run_adaptation, SearchMode, SearchState};
pub use channel::{NoiseSpec, Scenario, Target};
pub use error::{Error, Result};
pub use metrics::{match_detections, EvaluationRecord, SweepSummary};
pub use processor::{DetectorParams, Detection, RangeDopplerMap};
pub use waveform::{Numerology, PrsConfig, PrsParams, ResourceGrid};
