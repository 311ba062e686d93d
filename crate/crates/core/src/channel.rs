//! Monostatic multi-target echo model and receiver noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;
use crate::waveform::{PrsConfig, ResourceGrid};
use crate::SPEED_OF_LIGHT;

/// Seed stream reserved for receiver noise.
const NOISE_STREAM: u64 = 1;

/// Point target. Positive velocity gives positive Doppler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub rcs_m2: f64,
}

impl Target {
    pub fn new(range_m: f64, velocity_mps: f64, rcs_m2: f64) -> Result<Self> {
        if !(range_m > 0.0) || !range_m.is_finite() {
            return Err(Error::InvalidTarget(format!("range {range_m} m must be positive")));
        }
        if !(rcs_m2 > 0.0) || !rcs_m2.is_finite() {
            return Err(Error::InvalidTarget(format!("RCS {rcs_m2} m^2 must be positive")));
        }
        if !velocity_mps.is_finite() {
            return Err(Error::InvalidTarget(format!("velocity {velocity_mps} m/s")));
        }
        Ok(Self {
            range_m,
            velocity_mps,
            rcs_m2,
        })
    }
}

/// Receiver noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// Per-RE SNR of a reference target (range, RCS) under the configured waveform.
    SnrDb {
        snr_db: f64,
        reference_range_m: f64,
        reference_rcs_m2: f64,
    },
    /// One-sided noise power spectral density; per-RE variance is `N0 * spacing`.
    PowerDensity { w_per_hz: f64 },
}

impl NoiseSpec {
    pub const DEFAULT_SNR_DB: f64 = -20.0;
    pub const REFERENCE_RANGE_M: f64 = 102.0;
    pub const REFERENCE_RCS_M2: f64 = 4.0;

    pub fn snr_db(snr_db: f64) -> Self {
        NoiseSpec::SnrDb {
            snr_db,
            reference_range_m: Self::REFERENCE_RANGE_M,
            reference_rcs_m2: Self::REFERENCE_RCS_M2,
        }
    }

    pub fn noiseless() -> Self {
        NoiseSpec::PowerDensity { w_per_hz: 0.0 }
    }

    /// Complex noise variance per resource element.
    pub fn variance(&self, config: &PrsConfig) -> Result<f64> {
        match *self {
            NoiseSpec::SnrDb {
                snr_db,
                reference_range_m,
                reference_rcs_m2,
            } => {
                if !snr_db.is_finite() {
                    return Err(Error::param("snr_db", format!("{snr_db}")));
                }
                let xi = attenuation(reference_range_m, reference_rcs_m2, config)?;
                Ok(xi * xi * 10f64.powf(-snr_db / 10.0))
            }
            NoiseSpec::PowerDensity { w_per_hz } => {
                if !(w_per_hz >= 0.0) || !w_per_hz.is_finite() {
                    return Err(Error::param(
                        "noise power density",
                        format!("{w_per_hz} W/Hz must be non-negative"),
                    ));
                }
                Ok(w_per_hz * config.spacing_hz())
            }
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::snr_db(Self::DEFAULT_SNR_DB)
    }
}

/// Targets, waveform and noise for one simulated dwell.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: PrsConfig,
    pub targets: Vec<Target>,
    pub noise: NoiseSpec,
    pub seed: u64,
}

/// Two-way Doppler shift `2 v f_c / c`.
pub fn doppler_shift(velocity_mps: f64, carrier_hz: f64) -> f64 {
    2.0 * velocity_mps * carrier_hz / SPEED_OF_LIGHT
}

/// Echo amplitude from the monostatic radar equation with unit antenna gains:
/// `sqrt(P_tx * lambda^2 * rcs / ((4 pi)^3 R^4))`.
pub fn attenuation(range_m: f64, rcs_m2: f64, config: &PrsConfig) -> Result<f64> {
    if !(range_m > 0.0) {
        return Err(Error::InvalidTarget(format!("range {range_m} m must be positive")));
    }
    if !(rcs_m2 > 0.0) {
        return Err(Error::InvalidTarget(format!("RCS {rcs_m2} m^2 must be positive")));
    }
    let lambda = config.wavelength_m();
    let gain = 1.0;
    let power = config.tx_power_w() * gain * gain * lambda * lambda * rcs_m2
        / ((4.0 * PI).powi(3) * range_m.powi(4));
    Ok(power.sqrt())
}

/// Noiseless echo: each RE of `tx` is multiplied by the sum over targets of
/// `xi * exp(-j 2 pi comb k df 2R/c) * exp(j 2 pi comb m T_s f_d)`.
pub fn apply_echo(tx: &ResourceGrid, scenario: &Scenario) -> Result<ResourceGrid> {
    let config = &scenario.config;
    tx.check_shape(config.grid_shape())?;
    let comb = config.comb_size() as f64;
    let spacing = config.spacing_hz();
    let symbol_total = config.numerology().total_s;

    let mut out = ResourceGrid::zeros(tx.shape());
    for target in &scenario.targets {
        let xi = attenuation(target.range_m, target.rcs_m2, config)?;
        let delay = 2.0 * target.range_m / SPEED_OF_LIGHT;
        let doppler = doppler_shift(target.velocity_mps, config.carrier_hz());
        let range_rate = -2.0 * PI * comb * spacing * delay;
        let doppler_rate = 2.0 * PI * comb * symbol_total * doppler;
        for ((k, m), value) in out.data_mut().indexed_iter_mut() {
            let phase = range_rate * k as f64 + doppler_rate * m as f64;
            *value += Complex64::from_polar(xi, phase) * tx.data()[(k, m)];
        }
    }
    Ok(out)
}

/// Adds circular complex Gaussian noise with the scenario's per-RE variance.
/// Zero variance returns the input unchanged.
pub fn add_noise(grid: &ResourceGrid, scenario: &Scenario) -> Result<ResourceGrid> {
    let variance = scenario.noise.variance(&scenario.config)?;
    let mut out = grid.clone();
    if variance == 0.0 {
        return Ok(out);
    }
    let sigma = (variance / 2.0).sqrt();
    let mut rng = rng::rng_from_seed(rng::derive_seed(scenario.seed, NOISE_STREAM));
    for value in out.data_mut().iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *value += Complex64::new(sigma * re, sigma * im);
    }
    Ok(out)
}
