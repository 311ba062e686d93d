//! Range-Doppler processing of PRS echoes.
//!
//! The received grid is dechirped against the transmitted grid, then an
//! inverse DFT across subcarriers resolves delay (range) and a centred forward
//! DFT across slow time resolves Doppler (velocity). Peaks of the resulting
//! power map above a fraction of the global maximum become detections.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::waveform::{PrsConfig, ResourceGrid};
use crate::SPEED_OF_LIGHT;

/// Taper applied along both axes before the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann if len <= 1 => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()
                })
                .collect(),
        }
    }
}

/// Detector and transform settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub threshold_fraction: f64,
    pub neighborhood: usize,
    pub zero_pad: usize,
    pub window: Window,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.1,
            neighborhood: 3,
            zero_pad: 4,
            window: Window::Rectangular,
        }
    }
}

/// Power over (range bin, Doppler bin) with physical axes.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    power: Array2<f64>,
    range_step_m: f64,
    velocity_step_mps: f64,
    doppler_center: usize,
    max_range_m: f64,
    max_velocity_mps: f64,
    zero_pad: usize,
}

impl RangeDopplerMap {
    pub fn power(&self) -> &Array2<f64> {
        &self.power
    }

    /// `(range bins, Doppler bins)`.
    pub fn shape(&self) -> (usize, usize) {
        self.power.dim()
    }

    pub fn range_step_m(&self) -> f64 {
        self.range_step_m
    }

    pub fn velocity_step_mps(&self) -> f64 {
        self.velocity_step_mps
    }

    /// Doppler bin holding zero velocity.
    pub fn doppler_center(&self) -> usize {
        self.doppler_center
    }

    pub fn max_range_m(&self) -> f64 {
        self.max_range_m
    }

    pub fn max_velocity_mps(&self) -> f64 {
        self.max_velocity_mps
    }

    pub fn zero_pad(&self) -> usize {
        self.zero_pad
    }

    /// Range bin width before zero padding.
    pub fn native_range_bin_m(&self) -> f64 {
        self.range_step_m * self.zero_pad as f64
    }

    /// Doppler bin width (in m/s) before zero padding.
    pub fn native_velocity_bin_mps(&self) -> f64 {
        self.velocity_step_mps * self.zero_pad as f64
    }

    pub fn bin_to_range(&self, i: usize) -> Result<f64> {
        let len = self.power.nrows();
        if i >= len {
            return Err(Error::Index {
                axis: "range bin",
                index: i,
                len,
            });
        }
        Ok(i as f64 * self.range_step_m)
    }

    pub fn bin_to_velocity(&self, j: usize) -> Result<f64> {
        let len = self.power.ncols();
        if j >= len {
            return Err(Error::Index {
                axis: "Doppler bin",
                index: j,
                len,
            });
        }
        Ok((j as f64 - self.doppler_center as f64) * self.velocity_step_mps)
    }

    pub fn range_axis(&self) -> Vec<f64> {
        (0..self.power.nrows())
            .map(|i| i as f64 * self.range_step_m)
            .collect()
    }

    pub fn velocity_axis(&self) -> Vec<f64> {
        (0..self.power.ncols())
            .map(|j| (j as f64 - self.doppler_center as f64) * self.velocity_step_mps)
            .collect()
    }

    pub fn total_power(&self) -> f64 {
        self.power.sum()
    }
}

/// A thresholded local maximum of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub power: f64,
    pub range_bin: usize,
    pub doppler_bin: usize,
}

/// `rx * conj(tx)` element-wise.
pub fn dechirp(rx: &ResourceGrid, tx: &ResourceGrid) -> Result<ResourceGrid> {
    rx.check_shape(tx.shape())?;
    let data = ndarray::Zip::from(rx.data())
        .and(tx.data())
        .map_collect(|r, t| r * t.conj());
    Ok(ResourceGrid::from_array(data))
}

/// Complex delay-Doppler spectrum: unnormalised inverse DFT over subcarriers,
/// forward DFT over slow time with zero Doppler moved to column `len / 2`.
pub fn range_doppler_spectrum(
    dechirped: &ResourceGrid,
    config: &PrsConfig,
    zero_pad: usize,
    window: Window,
) -> Result<Array2<Complex64>> {
    if zero_pad < 1 {
        return Err(Error::param("zero_pad", format!("{zero_pad} must be >= 1")));
    }
    dechirped.check_shape(config.grid_shape())?;
    let (rows, cols) = dechirped.shape();
    let (padded_rows, padded_cols) = (rows * zero_pad, cols * zero_pad);
    let range_taper = window.coefficients(rows);
    let doppler_taper = window.coefficients(cols);

    let mut planner = FftPlanner::<f64>::new();
    let range_ifft = planner.plan_fft_inverse(padded_rows);
    let doppler_fft = planner.plan_fft_forward(padded_cols);

    // fast time: one column per slow-time sample, stored row-major afterwards
    let mut spectrum = Array2::<Complex64>::zeros((padded_rows, padded_cols));
    let mut column = vec![Complex64::new(0.0, 0.0); padded_rows];
    for m in 0..cols {
        column.fill(Complex64::new(0.0, 0.0));
        for k in 0..rows {
            column[k] = dechirped.data()[(k, m)] * (range_taper[k] * doppler_taper[m]);
        }
        range_ifft.process(&mut column);
        for (i, value) in column.iter().enumerate() {
            spectrum[(i, m)] = *value;
        }
    }

    let center = padded_cols / 2;
    let mut row_buf = vec![Complex64::new(0.0, 0.0); padded_cols];
    for mut row in spectrum.rows_mut() {
        row_buf.copy_from_slice(row.as_slice().expect("standard layout"));
        doppler_fft.process(&mut row_buf);
        for (j, out) in row.iter_mut().enumerate() {
            *out = row_buf[(j + padded_cols - center) % padded_cols];
        }
    }
    Ok(spectrum)
}

/// Magnitude-squared range-Doppler map with a rectangular window.
pub fn range_doppler_map(
    dechirped: &ResourceGrid,
    config: &PrsConfig,
    zero_pad: usize,
) -> Result<RangeDopplerMap> {
    range_doppler_map_windowed(dechirped, config, zero_pad, Window::Rectangular)
}

pub fn range_doppler_map_windowed(
    dechirped: &ResourceGrid,
    config: &PrsConfig,
    zero_pad: usize,
    window: Window,
) -> Result<RangeDopplerMap> {
    let spectrum = range_doppler_spectrum(dechirped, config, zero_pad, window)?;
    Ok(map_from_spectrum(&spectrum, config, zero_pad))
}

pub(crate) fn map_from_spectrum(
    spectrum: &Array2<Complex64>,
    config: &PrsConfig,
    zero_pad: usize,
) -> RangeDopplerMap {
    let (padded_rows, padded_cols) = spectrum.dim();
    let max_range_m = max_unambiguous_range(config);
    let max_velocity_mps = max_unambiguous_velocity(config);
    RangeDopplerMap {
        power: spectrum.mapv(|z| z.norm_sqr()),
        range_step_m: max_range_m / padded_rows as f64,
        velocity_step_mps: max_velocity_mps / padded_cols as f64,
        doppler_center: padded_cols / 2,
        max_range_m,
        max_velocity_mps,
        zero_pad,
    }
}

/// Strict local maxima over a `neighborhood x neighborhood` window whose
/// power reaches `threshold_fraction` of the global maximum, strongest first.
pub fn detect_peaks(
    map: &RangeDopplerMap,
    threshold_fraction: f64,
    neighborhood: usize,
) -> Result<Vec<Detection>> {
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(Error::param(
            "threshold_fraction",
            format!("{threshold_fraction} not in (0, 1]"),
        ));
    }
    if neighborhood < 3 || neighborhood.is_multiple_of(2) {
        return Err(Error::param(
            "neighborhood",
            format!("{neighborhood} must be odd and >= 3"),
        ));
    }
    let power = &map.power;
    let global_max = power.iter().copied().fold(0.0_f64, f64::max);
    if !(global_max > 0.0) {
        return Ok(Vec::new());
    }
    let threshold = threshold_fraction * global_max;
    let half = neighborhood / 2;
    let (rows, cols) = power.dim();

    let mut detections = Vec::new();
    for ((i, j), &p) in power.indexed_iter() {
        if p < threshold {
            continue;
        }
        let is_peak = (i.saturating_sub(half)..(i + half + 1).min(rows)).all(|ii| {
            (j.saturating_sub(half)..(j + half + 1).min(cols))
                .all(|jj| (ii == i && jj == j) || power[(ii, jj)] < p)
        });
        if is_peak {
            detections.push(Detection {
                range_m: map.bin_to_range(i)?,
                velocity_mps: map.bin_to_velocity(j)?,
                power: p,
                range_bin: i,
                doppler_bin: j,
            });
        }
    }
    detections.sort_by(|a, b| {
        b.power
            .total_cmp(&a.power)
            .then(a.range_bin.cmp(&b.range_bin))
            .then(a.doppler_bin.cmp(&b.doppler_bin))
    });
    Ok(detections)
}

/// `c / (2 comb df)`.
pub fn max_unambiguous_range(config: &PrsConfig) -> f64 {
    SPEED_OF_LIGHT / (2.0 * config.comb_size() as f64 * config.spacing_hz())
}

/// `c / (2 n_prb df)`, reported as printed; the DFT range bin is 12 times finer.
pub fn range_resolution(config: &PrsConfig) -> f64 {
    SPEED_OF_LIGHT / (2.0 * config.n_prb() as f64 * config.spacing_hz())
}

/// `c / (2 comb T_s f_c)`.
pub fn max_unambiguous_velocity(config: &PrsConfig) -> f64 {
    SPEED_OF_LIGHT
        / (2.0 * config.comb_size() as f64 * config.numerology().total_s * config.carrier_hz())
}

/// `c / (2 M T_s f_c)`.
pub fn velocity_resolution(config: &PrsConfig) -> f64 {
    SPEED_OF_LIGHT
        / (2.0 * config.num_symbols() as f64 * config.numerology().total_s * config.carrier_hz())
}
