use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metrics::{EvaluationRecord, SweepSummary};
use crate::pipeline::{
    random_targets, run_scenario, run_seed, MAX_TARGET_RANGE_M, MAX_TARGET_SPEED_MPS,
    TARGETS_PER_RUN,
};
use crate::channel::Scenario;
use crate::waveform::{PrsConfig, PrsParams};

use super::scenario::{
    locate_key, toml_error, waveform_config, DetectorSection, NoiseSection, ParseError,
    ResolvedScenario, ScenarioFile, WaveformSection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    FR1,
    FR2,
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Band::FR1 => "FR1",
            Band::FR2 => "FR2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fr1,
    Fr2,
    Both,
}

/// One swept waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub band: Band,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcarrier_spacing_hz: Option<f64>,
    #[serde(default = "default_comb")]
    pub comb_size: usize,
    #[serde(default)]
    pub comb_offset: usize,
    #[serde(default = "default_symbols")]
    pub num_symbols: usize,
    #[serde(default = "default_power")]
    pub tx_power_w: f64,
}

fn default_comb() -> usize {
    PrsParams::default().comb_size
}

fn default_symbols() -> usize {
    PrsParams::default().num_symbols
}

fn default_power() -> f64 {
    PrsParams::default().tx_power_w
}

fn default_runs() -> usize {
    100
}

fn default_targets() -> usize {
    TARGETS_PER_RUN
}

fn default_max_range() -> f64 {
    MAX_TARGET_RANGE_M
}

fn default_max_speed() -> f64 {
    MAX_TARGET_SPEED_MPS
}

impl SweepConfig {
    pub fn new(band: Band, carrier_hz: f64, bandwidth_hz: f64, spacing_hz: f64) -> Self {
        Self {
            band,
            carrier_hz,
            bandwidth_hz,
            mu: None,
            subcarrier_spacing_hz: Some(spacing_hz),
            comb_size: default_comb(),
            comb_offset: 0,
            num_symbols: default_symbols(),
            tx_power_w: default_power(),
        }
    }

    pub fn waveform(&self) -> WaveformSection {
        WaveformSection {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            mu: self.mu,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
            n_prb: None,
            comb_size: self.comb_size,
            comb_offset: self.comb_offset,
            num_symbols: self.num_symbols,
            tx_power_w: self.tx_power_w,
        }
    }
}

/// Monte Carlo sweep over waveform configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_runs")]
    pub monte_carlo_runs: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_targets")]
    pub targets_per_run: usize,
    #[serde(default = "default_max_range")]
    pub max_range_m: f64,
    #[serde(default = "default_max_speed")]
    pub max_speed_mps: f64,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub detector: DetectorSection,
    pub configs: Vec<SweepConfig>,
}

impl SweepSpec {
    fn with_configs(configs: Vec<SweepConfig>) -> Self {
        Self {
            monte_carlo_runs: default_runs(),
            seed_base: 0,
            targets_per_run: default_targets(),
            max_range_m: default_max_range(),
            max_speed_mps: default_max_speed(),
            noise: NoiseSection::default(),
            detector: DetectorSection::default(),
            configs,
        }
    }

    /// 2.5 GHz carrier, 30 kHz spacing, 10/15/25/80 MHz.
    pub fn fr1() -> Self {
        Self::with_configs(
            [10e6, 15e6, 25e6, 80e6]
                .iter()
                .map(|&b| SweepConfig::new(Band::FR1, 2.5e9, b, 30e3))
                .collect(),
        )
    }

    /// 24 GHz carrier, 100 MHz, 60/120/240 kHz spacing.
    pub fn fr2() -> Self {
        Self::with_configs(
            [60e3, 120e3, 240e3]
                .iter()
                .map(|&df| SweepConfig::new(Band::FR2, 24e9, 100e6, df))
                .collect(),
        )
    }

    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Fr1 => Self::fr1(),
            Preset::Fr2 => Self::fr2(),
            Preset::Both => {
                let mut spec = Self::fr1();
                spec.configs.extend(Self::fr2().configs);
                spec
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        spec.validate().map_err(|(key, message)| ParseError {
            line: locate_key(text, &key),
            key: Some(key),
            message,
        })?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String, ParseError> {
        toml::to_string(self).map_err(|e| ParseError {
            key: None,
            line: None,
            message: e.to_string(),
        })
    }

    /// Checks every configuration and returns the resolved waveforms.
    pub fn validate(&self) -> Result<Vec<PrsConfig>, (String, String)> {
        if self.monte_carlo_runs == 0 {
            return Err(("monte_carlo_runs".into(), "must be >= 1".into()));
        }
        if self.configs.is_empty() {
            return Err(("configs".into(), "at least one configuration is required".into()));
        }
        if !(self.max_range_m > 0.0) {
            return Err(("max_range_m".into(), format!("{} must be positive", self.max_range_m)));
        }
        if !(self.max_speed_mps >= 0.0) {
            return Err(("max_speed_mps".into(), format!("{} must be >= 0", self.max_speed_mps)));
        }
        self.detector.check("detector.")?;
        let configs = self
            .configs
            .iter()
            .enumerate()
            .map(|(i, c)| waveform_config(&c.waveform(), &format!("configs[{i}].")))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, config) in configs.iter().enumerate() {
            self.scenario_for(config).resolve().map_err(|(key, message)| {
                (
                    if key.starts_with("noise") { key } else { format!("configs[{i}]") },
                    message,
                )
            })?;
        }
        Ok(configs)
    }

    /// Target-free scenario carrying this spec's noise and detector settings.
    fn scenario_for(&self, config: &PrsConfig) -> ScenarioFile {
        let p = config.params();
        ScenarioFile {
            seed: 0,
            waveform: WaveformSection {
                carrier_hz: p.carrier_hz,
                bandwidth_hz: p.bandwidth_hz,
                mu: Some(p.mu),
                subcarrier_spacing_hz: None,
                n_prb: p.n_prb,
                comb_size: p.comb_size,
                comb_offset: p.comb_offset,
                num_symbols: p.num_symbols,
                tx_power_w: p.tx_power_w,
            },
            noise: self.noise,
            detector: self.detector,
            targets: Vec::new(),
        }
    }
}

/// Aggregate of one configuration over its Monte Carlo runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub band: Band,
    /// Mean errors over runs with at least one matched pair; counts are totals.
    pub record: EvaluationRecord,
    pub std_e_range_m: f64,
    pub std_e_velocity_mps: f64,
    pub runs_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub result: ConfigResult,
    pub normalized_error: f64,
    pub comm_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFailure {
    pub band: Band,
    pub bandwidth_hz: f64,
    pub spacing_hz: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Sorted by band, then PRB count.
    pub rows: Vec<TradeoffRow>,
    pub failures: Vec<ConfigFailure>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn aggregate(
    band: Band,
    config: &PrsConfig,
    runs: Vec<Result<EvaluationRecord, crate::Error>>,
) -> Result<ConfigResult, String> {
    let mut scored = Vec::new();
    let (mut matched, mut misses, mut false_alarms) = (0, 0, 0);
    for run in runs {
        let r = run.map_err(|e| e.to_string())?;
        matched += r.matched;
        misses += r.misses;
        false_alarms += r.false_alarms;
        if let (Some(er), Some(ev)) = (r.e_range_m, r.e_velocity_mps) {
            scored.push((er, ev));
        }
    }
    if scored.is_empty() {
        return Err("no run matched any target".into());
    }
    let (er, sr) = mean_std(&scored.iter().map(|s| s.0).collect::<Vec<_>>());
    let (ev, sv) = mean_std(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
    Ok(ConfigResult {
        band,
        record: EvaluationRecord {
            n_prb: config.n_prb(),
            spacing_hz: config.spacing_hz(),
            bandwidth_hz: config.bandwidth_hz(),
            carrier_hz: config.carrier_hz(),
            e_range_m: Some(er),
            e_velocity_mps: Some(ev),
            matched,
            misses,
            false_alarms,
        },
        std_e_range_m: sr,
        std_e_velocity_mps: sv,
        runs_used: scored.len(),
    })
}

/// Runs every configuration for `monte_carlo_runs` seeded random scenes.
/// Run `r` uses the same targets and seed under every configuration.
pub fn evaluate_sweep(spec: &SweepSpec) -> Result<SweepOutcome, ParseError> {
    let configs = spec.validate().map_err(|(key, message)| ParseError {
        key: Some(key),
        line: None,
        message,
    })?;
    let scene = |run: usize| -> Result<(u64, Vec<crate::channel::Target>), crate::Error> {
        let seed = run_seed(spec.seed_base, run as u64);
        let targets = random_targets(seed, spec.targets_per_run, spec.max_range_m, spec.max_speed_mps)?;
        Ok((seed, targets))
    };
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..spec.monte_carlo_runs).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<EvaluationRecord, crate::Error>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (seed, targets) = scene(r)?;
            let file = spec.scenario_for(&configs[c]);
            let ResolvedScenario { scenario, detector } =
                file.resolve().map_err(|(_, m)| crate::Error::InvalidTarget(m))?;
            let scenario = Scenario {
                targets,
                seed,
                ..scenario
            };
            Ok(run_scenario(&scenario, &detector)?.record)
        })
        .collect();

    let mut per_config: Vec<Vec<_>> = (0..configs.len()).map(|_| Vec::new()).collect();
    for (&(c, _), result) in jobs.iter().zip(results) {
        per_config[c].push(result);
    }

    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for ((cfg, spec_cfg), runs) in configs.iter().zip(&spec.configs).zip(per_config) {
        match aggregate(spec_cfg.band, cfg, runs) {
            Ok(r) => ok.push(r),
            Err(reason) => failures.push(ConfigFailure {
                band: spec_cfg.band,
                bandwidth_hz: cfg.bandwidth_hz(),
                spacing_hz: cfg.spacing_hz(),
                reason,
            }),
        }
    }
    ok.sort_by(|a, b| {
        (a.band, a.record.n_prb)
            .cmp(&(b.band, b.record.n_prb))
            .then(a.record.spacing_hz.total_cmp(&b.record.spacing_hz))
    });
    if ok.is_empty() {
        return Ok(SweepOutcome {
            rows: Vec::new(),
            failures,
        });
    }
    let summary = SweepSummary::new(ok.iter().map(|r| r.record.clone()).collect())
        .expect("aggregated records carry errors on the lattice");
    let rows = ok
        .into_iter()
        .zip(summary.normalized_errors)
        .zip(summary.comm_rates)
        .map(|((result, normalized_error), comm_rate)| TradeoffRow {
            result,
            normalized_error,
            comm_rate,
        })
        .collect();
    Ok(SweepOutcome { rows, failures })
}

pub fn tradeoff_csv(spec: &SweepSpec, outcome: &SweepOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# monte_carlo_runs={} seed_base={} targets_per_run={}",
        spec.monte_carlo_runs, spec.seed_base, spec.targets_per_run
    );
    let _ = writeln!(
        s,
        "# errors are means over runs with matched pairs (RMSE over matched pairs); normalized_error uses the maxima over all rows"
    );
    for f in &outcome.failures {
        let _ = writeln!(
            s,
            "# failed band={} bandwidth_hz={} spacing_hz={}: {}",
            f.band, f.bandwidth_hz, f.spacing_hz, f.reason
        );
    }
    s.push_str(
        "band,bandwidth_hz,spacing_hz,n_prb,mean_e_range_m,mean_e_velocity_mps,std_e_range_m,std_e_velocity_mps,normalized_error,comm_rate,runs_used,matched,misses,false_alarms\n",
    );
    for row in &outcome.rows {
        let r = &row.result;
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
            r.band,
            r.record.bandwidth_hz,
            r.record.spacing_hz,
            r.record.n_prb,
            r.record.e_range_m.unwrap_or(f64::NAN),
            r.record.e_velocity_mps.unwrap_or(f64::NAN),
            r.std_e_range_m,
            r.std_e_velocity_mps,
            row.normalized_error,
            row.comm_rate,
            r.runs_used,
            r.record.matched,
            r.record.misses,
            r.record.false_alarms,
        );
    }
    s
}
