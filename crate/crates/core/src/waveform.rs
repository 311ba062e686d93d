//! NR numerology, PRS configuration and comb-mapped PRS resource grids.
//!
//! Only PRS-bearing resource elements are stored: a grid has one row per
//! PRS subcarrier (`N_j = 12 * n_prb / comb`) and one column per slow-time
//! sample (`num_symbols / comb`). Every entry is a unit-modulus QPSK symbol
//! drawn from a length-31 Gold sequence.

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUBCARRIERS_PER_PRB: usize = 12;
pub const MIN_PRB: usize = 24;
pub const MAX_PRB: usize = 272;
pub const PRB_STEP: usize = 4;
pub const COMB_SIZES: [usize; 4] = [2, 4, 6, 12];

/// Normal cyclic prefix length in units of the useful symbol duration.
const NORMAL_CP_FRACTION: f64 = 144.0 / 2048.0;
const GOLD_FAST_FORWARD: usize = 1600;
const GOLD_STATE_MASK: u64 = 0x7FFF_FFFF;

/// Subcarrier spacing and OFDM symbol timing for one numerology index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub mu: u32,
    pub spacing_hz: f64,
    /// Useful symbol duration `T = 1 / spacing`.
    pub symbol_s: f64,
    pub cp_s: f64,
    /// `T + T_CP`.
    pub total_s: f64,
}

impl Numerology {
    pub fn from_mu(mu: u32) -> Result<Self> {
        if mu > 4 {
            return Err(Error::UnsupportedNumerology(format!(
                "mu = {mu}, supported 0..=4"
            )));
        }
        let spacing_hz = 15_000.0 * f64::from(1u32 << mu);
        let symbol_s = 1.0 / spacing_hz;
        let cp_s = NORMAL_CP_FRACTION * symbol_s;
        Ok(Self {
            mu,
            spacing_hz,
            symbol_s,
            cp_s,
            total_s: symbol_s + cp_s,
        })
    }

    /// Numerology whose spacing is exactly `spacing_hz`.
    pub fn from_spacing(spacing_hz: f64) -> Result<Self> {
        (0..=4)
            .map(|mu| Self::from_mu(mu).expect("mu in range"))
            .find(|n| n.spacing_hz == spacing_hz)
            .ok_or_else(|| {
                Error::UnsupportedNumerology(format!(
                    "subcarrier spacing {spacing_hz} Hz is not 15 kHz * 2^mu"
                ))
            })
    }
}

pub fn numerology_from_mu(mu: u32) -> Result<Numerology> {
    Numerology::from_mu(mu)
}

/// True when `n_prb` lies on the `{24, 28, ..., 272}` lattice.
pub fn is_valid_prb(n_prb: usize) -> bool {
    (MIN_PRB..=MAX_PRB).contains(&n_prb) && n_prb.is_multiple_of(PRB_STEP)
}

/// Lattice PRB count nearest to `bandwidth / (12 * spacing)`; ties round down.
pub fn prb_count_for(bandwidth_hz: f64, spacing_hz: f64) -> Result<usize> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::param("bandwidth", format!("{bandwidth_hz} Hz")));
    }
    Numerology::from_spacing(spacing_hz)?;
    let exact = bandwidth_hz / (SUBCARRIERS_PER_PRB as f64 * spacing_hz);
    if exact > (MAX_PRB + PRB_STEP / 2) as f64 {
        return Err(Error::OutOfRange {
            what: "PRB count",
            detail: format!(
                "{bandwidth_hz} Hz at {spacing_hz} Hz spacing needs {exact:.2} PRBs, more than {MAX_PRB}"
            ),
        });
    }
    let step = PRB_STEP as f64;
    let lower = (exact / step).floor() * step;
    let upper = lower + step;
    let nearest = if upper - exact < exact - lower {
        upper
    } else {
        lower
    };
    Ok((nearest as usize).clamp(MIN_PRB, MAX_PRB))
}

/// User-facing PRS parameters; validated into a [`PrsConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct PrsParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub mu: u32,
    /// Overrides the count derived from the bandwidth when set.
    pub n_prb: Option<usize>,
    pub comb_size: usize,
    pub comb_offset: usize,
    pub num_symbols: usize,
    pub tx_power_w: f64,
}

impl Default for PrsParams {
    fn default() -> Self {
        Self {
            carrier_hz: 24.0e9,
            bandwidth_hz: 100.0e6,
            mu: 2,
            n_prb: None,
            comb_size: 2,
            comb_offset: 0,
            num_symbols: 128,
            tx_power_w: 1.0e-2,
        }
    }
}

/// Validated PRS transmission configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PrsConfig {
    carrier_hz: f64,
    bandwidth_hz: f64,
    numerology: Numerology,
    n_prb: usize,
    comb_size: usize,
    comb_offset: usize,
    num_symbols: usize,
    tx_power_w: f64,
}

impl PrsConfig {
    pub fn new(params: &PrsParams) -> Result<Self> {
        let numerology = Numerology::from_mu(params.mu)?;
        if !(params.carrier_hz > 0.0) || !params.carrier_hz.is_finite() {
            return Err(Error::param("carrier_hz", format!("{}", params.carrier_hz)));
        }
        if !(params.tx_power_w > 0.0) || !params.tx_power_w.is_finite() {
            return Err(Error::param("tx_power_w", format!("{}", params.tx_power_w)));
        }
        let n_prb = match params.n_prb {
            Some(n) if is_valid_prb(n) => n,
            Some(n) => {
                return Err(Error::OutOfRange {
                    what: "PRB count",
                    detail: format!("{n} is not a multiple of {PRB_STEP} in [{MIN_PRB}, {MAX_PRB}]"),
                })
            }
            None => prb_count_for(params.bandwidth_hz, numerology.spacing_hz)?,
        };
        if !COMB_SIZES.contains(&params.comb_size) {
            return Err(Error::param(
                "comb_size",
                format!("{} not in {COMB_SIZES:?}", params.comb_size),
            ));
        }
        if params.comb_offset >= params.comb_size {
            return Err(Error::param(
                "comb_offset",
                format!("{} must be below comb size {}", params.comb_offset, params.comb_size),
            ));
        }
        if params.num_symbols == 0 || !params.num_symbols.is_multiple_of(params.comb_size) {
            return Err(Error::param(
                "num_symbols",
                format!(
                    "{} must be a positive multiple of comb size {}",
                    params.num_symbols, params.comb_size
                ),
            ));
        }
        Ok(Self {
            carrier_hz: params.carrier_hz,
            bandwidth_hz: params.bandwidth_hz,
            numerology,
            n_prb,
            comb_size: params.comb_size,
            comb_offset: params.comb_offset,
            num_symbols: params.num_symbols,
            tx_power_w: params.tx_power_w,
        })
    }

    /// Same configuration with a different PRB allocation; the nominal
    /// bandwidth follows as `12 * n_prb * spacing`.
    pub fn with_n_prb(&self, n_prb: usize) -> Result<Self> {
        let mut params = self.params();
        params.n_prb = Some(n_prb);
        params.bandwidth_hz = (SUBCARRIERS_PER_PRB * n_prb) as f64 * self.numerology.spacing_hz;
        Self::new(&params)
    }

    pub fn params(&self) -> PrsParams {
        PrsParams {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            mu: self.numerology.mu,
            n_prb: Some(self.n_prb),
            comb_size: self.comb_size,
            comb_offset: self.comb_offset,
            num_symbols: self.num_symbols,
            tx_power_w: self.tx_power_w,
        }
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }
    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }
    pub fn numerology(&self) -> &Numerology {
        &self.numerology
    }
    pub fn spacing_hz(&self) -> f64 {
        self.numerology.spacing_hz
    }
    pub fn n_prb(&self) -> usize {
        self.n_prb
    }
    pub fn comb_size(&self) -> usize {
        self.comb_size
    }
    pub fn comb_offset(&self) -> usize {
        self.comb_offset
    }
    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }
    pub fn tx_power_w(&self) -> f64 {
        self.tx_power_w
    }
    pub fn wavelength_m(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Total subcarriers `N = 12 * n_prb`.
    pub fn total_subcarriers(&self) -> usize {
        SUBCARRIERS_PER_PRB * self.n_prb
    }

    /// PRS-bearing subcarriers `N_j = N / comb`.
    pub fn prs_subcarriers(&self) -> usize {
        self.total_subcarriers() / self.comb_size
    }

    /// Slow-time samples `num_symbols / comb`.
    pub fn slow_time_samples(&self) -> usize {
        self.num_symbols / self.comb_size
    }

    /// Compact grid shape `(N_j, num_symbols / comb)`.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.prs_subcarriers(), self.slow_time_samples())
    }
}

/// Baseband frequency of the `k`-th PRS subcarrier, `(comb * k + k0) * spacing`.
pub fn subcarrier_frequency(k: usize, config: &PrsConfig) -> Result<f64> {
    let len = config.prs_subcarriers();
    if k >= len {
        return Err(Error::Index {
            axis: "PRS subcarrier",
            index: k,
            len,
        });
    }
    Ok((config.comb_size * k + config.comb_offset) as f64 * config.spacing_hz())
}

/// Raw Gold sequence `c(n)` for a 31-bit initial state of the second register.
///
/// `x1(n+31) = x1(n+3) + x1(n)`, `x2(n+31) = x2(n+3) + x2(n+2) + x2(n+1) + x2(n)`
/// (mod 2), `x1` starts from a single one, both registers are clocked 1600
/// times before output.
pub fn gold_bits(c_init: u32, len: usize) -> Vec<u8> {
    // bit i of each register holds x(n + i)
    let mut x1: u32 = 1;
    let mut x2: u32 = c_init & GOLD_STATE_MASK as u32;
    let step = |x1: &mut u32, x2: &mut u32| {
        let f1 = (*x1 ^ (*x1 >> 3)) & 1;
        let f2 = (*x2 ^ (*x2 >> 1) ^ (*x2 >> 2) ^ (*x2 >> 3)) & 1;
        *x1 = (*x1 >> 1) | (f1 << 30);
        *x2 = (*x2 >> 1) | (f2 << 30);
    };
    for _ in 0..GOLD_FAST_FORWARD {
        step(&mut x1, &mut x2);
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(((x1 ^ x2) & 1) as u8);
        step(&mut x1, &mut x2);
    }
    out
}

/// Register state used for `seed`. The all-zero state is skipped since it
/// degenerates the Gold pair into a single m-sequence.
pub fn gold_state_for_seed(seed: u64) -> u32 {
    (seed % GOLD_STATE_MASK + 1) as u32
}

/// `length` QPSK symbols `((1 - 2c(2n)) + j(1 - 2c(2n+1))) / sqrt(2)`.
pub fn generate_prs_sequence(seed: u64, length: usize) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(Error::EmptySequence);
    }
    let bits = gold_bits(gold_state_for_seed(seed), 2 * length);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Ok(bits
        .chunks_exact(2)
        .map(|pair| {
            Complex64::new(
                scale * (1.0 - 2.0 * f64::from(pair[0])),
                scale * (1.0 - 2.0 * f64::from(pair[1])),
            )
        })
        .collect())
}

/// Complex symbols over (PRS subcarrier, slow-time sample).
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    data: Array2<Complex64>,
}

impl ResourceGrid {
    pub fn from_array(data: Array2<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self {
            data: Array2::zeros(shape),
        }
    }

    /// `(subcarriers, slow-time samples)`.
    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.data
    }

    pub fn into_array(self) -> Array2<Complex64> {
        self.data
    }

    pub fn get(&self, k: usize, m: usize) -> Option<Complex64> {
        self.data.get((k, m)).copied()
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub(crate) fn check_shape(&self, expected: (usize, usize)) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::Shape {
                expected,
                actual: self.shape(),
            });
        }
        Ok(())
    }
}

/// Transmit grid for `config`. Column `m` holds symbols `m * N_j .. (m + 1) * N_j`
/// of one PRS sequence seeded by `seed`.
pub fn build_prs_grid(config: &PrsConfig, seed: u64) -> ResourceGrid {
    let (rows, cols) = config.grid_shape();
    let symbols =
        generate_prs_sequence(seed, rows * cols).expect("PrsConfig guarantees a non-empty grid");
    // column-major fill: each slow-time symbol gets its own contiguous segment
    let data = Array2::from_shape_vec((rows, cols).f(), symbols).expect("shape matches length");
    ResourceGrid { data }
}
