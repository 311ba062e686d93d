//! End-to-end runs: transmit grid, echo, noise, range-Doppler map, peaks and
//! scoring.

use rand::Rng;

use crate::channel::{add_noise, apply_echo, Scenario, Target};
use crate::error::{Error, Result};
use crate::metrics::{match_detections, Assignment, BinScales, EvaluationRecord};
use crate::processor::{
    dechirp, detect_peaks, range_doppler_map_windowed, DetectorParams, Detection, RangeDopplerMap,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::waveform::build_prs_grid;

/// Sweep bounds on target range and speed.
pub const MAX_TARGET_RANGE_M: f64 = 102.0;
pub const MAX_TARGET_SPEED_MPS: f64 = 20.0;
pub const DEFAULT_RCS_M2: f64 = 4.0;
pub const TARGETS_PER_RUN: usize = 5;

const PRS_STREAM: u64 = 0;
const TARGET_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub map: RangeDopplerMap,
    pub detections: Vec<Detection>,
    pub assignment: Assignment,
    pub record: EvaluationRecord,
}

impl RunOutput {
    pub fn detected(&self) -> usize {
        self.assignment.pairs.len()
    }
}

/// Seed of the transmitted PRS sequence for a scenario seed.
pub fn prs_seed(scenario_seed: u64) -> u64 {
    derive_seed(scenario_seed, PRS_STREAM)
}

pub fn range_doppler_for(scenario: &Scenario, detector: &DetectorParams) -> Result<RangeDopplerMap> {
    let tx = build_prs_grid(&scenario.config, prs_seed(scenario.seed));
    let echo = apply_echo(&tx, scenario)?;
    let rx = add_noise(&echo, scenario)?;
    let dechirped = dechirp(&rx, &tx)?;
    range_doppler_map_windowed(&dechirped, &scenario.config, detector.zero_pad, detector.window)
}

pub fn run_scenario(scenario: &Scenario, detector: &DetectorParams) -> Result<RunOutput> {
    let map = range_doppler_for(scenario, detector)?;
    let detections = detect_peaks(&map, detector.threshold_fraction, detector.neighborhood)?;
    let scales = BinScales {
        range_bin_m: map.native_range_bin_m(),
        velocity_bin_mps: map.native_velocity_bin_mps(),
    };
    let assignment = match_detections(&detections, &scenario.targets, scales);
    let record = EvaluationRecord::from_assignment(&scenario.config, &assignment);
    Ok(RunOutput {
        map,
        detections,
        assignment,
        record,
    })
}

/// `count` targets with range uniform in `(0, max_range_m]`, velocity
/// uniform in `[-max_speed_mps, max_speed_mps]` and the default RCS.
pub fn random_targets(seed: u64, count: usize, max_range_m: f64, max_speed_mps: f64) -> Result<Vec<Target>> {
    if !(max_range_m > 0.0) || !(max_speed_mps >= 0.0) {
        return Err(Error::param(
            "target bounds",
            format!("range {max_range_m} m, speed {max_speed_mps} m/s"),
        ));
    }
    let mut rng = rng_from_seed(derive_seed(seed, TARGET_STREAM));
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let range = max_range_m * (1.0 - u);
            let velocity = rng.random_range(-max_speed_mps..=max_speed_mps);
            Target::new(range, velocity, DEFAULT_RCS_M2)
        })
        .collect()
}

/// Seed of Monte Carlo run `run` under `seed_base`.
pub fn run_seed(seed_base: u64, run: u64) -> u64 {
    derive_seed(seed_base, run)
}
