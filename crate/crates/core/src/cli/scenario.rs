use serde::{Deserialize, Serialize};

use crate::channel::{NoiseSpec, Scenario, Target};
use crate::error::Error;
use crate::processor::{DetectorParams, Window};
use crate::waveform::{Numerology, PrsConfig, PrsParams};

/// A configuration error tied to a key of the source document.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key `{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSection {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcarrier_spacing_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prb: Option<usize>,
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

impl Default for WaveformSection {
    fn default() -> Self {
        let p = PrsParams::default();
        Self {
            carrier_hz: p.carrier_hz,
            bandwidth_hz: p.bandwidth_hz,
            mu: Some(p.mu),
            subcarrier_spacing_hz: None,
            n_prb: None,
            comb_size: p.comb_size,
            comb_offset: p.comb_offset,
            num_symbols: p.num_symbols,
            tx_power_w: p.tx_power_w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub range_m: f64,
    pub velocity_mps: f64,
    #[serde(default = "default_rcs")]
    pub rcs_m2: f64,
}

fn default_rcs() -> f64 {
    crate::pipeline::DEFAULT_RCS_M2
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_range_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_rcs_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_density_w_per_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowName {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default = "default_threshold")]
    pub threshold_fraction: f64,
    #[serde(default = "default_neighborhood")]
    pub neighborhood: usize,
    #[serde(default = "default_zero_pad")]
    pub zero_pad: usize,
    #[serde(default)]
    pub window: WindowName,
}

fn default_threshold() -> f64 {
    DetectorParams::default().threshold_fraction
}

fn default_neighborhood() -> usize {
    DetectorParams::default().neighborhood
}

fn default_zero_pad() -> usize {
    DetectorParams::default().zero_pad
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            threshold_fraction: default_threshold(),
            neighborhood: default_neighborhood(),
            zero_pad: default_zero_pad(),
            window: WindowName::Rectangular,
        }
    }
}

impl DetectorSection {
    pub fn to_params(&self) -> DetectorParams {
        DetectorParams {
            threshold_fraction: self.threshold_fraction,
            neighborhood: self.neighborhood,
            zero_pad: self.zero_pad,
            window: match self.window {
                WindowName::Rectangular => Window::Rectangular,
                WindowName::Hann => Window::Hann,
            },
        }
    }

    pub(crate) fn check(&self, prefix: &str) -> Result<(), (String, String)> {
        let key = |k: &str| format!("{prefix}{k}");
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return Err((
                key("threshold_fraction"),
                format!("{} not in (0, 1]", self.threshold_fraction),
            ));
        }
        if self.neighborhood < 3 || self.neighborhood.is_multiple_of(2) {
            return Err((
                key("neighborhood"),
                format!("{} must be odd and >= 3", self.neighborhood),
            ));
        }
        if self.zero_pad == 0 {
            return Err((key("zero_pad"), "must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parsed scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: u64,
    pub waveform: WaveformSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub targets: Vec<TargetEntry>,
}

/// Scenario ready for simulation.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    pub detector: DetectorParams,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        file.resolve().map_err(|(key, message)| ParseError {
            line: locate_key(text, &key),
            key: Some(key),
            message,
        })?;
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String, ParseError> {
        toml::to_string(self).map_err(|e| ParseError {
            key: None,
            line: None,
            message: e.to_string(),
        })
    }

    pub fn resolve(&self) -> Result<ResolvedScenario, (String, String)> {
        let config = waveform_config(&self.waveform, "waveform.")?;
        let noise = noise_spec(&self.noise)?;
        noise
            .variance(&config)
            .map_err(|e| ("noise".to_string(), e.to_string()))?;
        self.detector.check("detector.")?;
        let targets = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Target::new(t.range_m, t.velocity_mps, t.rcs_m2)
                    .map_err(|e| (format!("targets[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ResolvedScenario {
            scenario: Scenario {
                config,
                targets,
                noise,
                seed: self.seed,
            },
            detector: self.detector.to_params(),
        })
    }
}

/// Resolves `mu` / `subcarrier_spacing_hz` and validates the waveform.
pub(crate) fn waveform_config(w: &WaveformSection, prefix: &str) -> Result<PrsConfig, (String, String)> {
    let key = |k: &str| format!("{prefix}{k}");
    let mu = match (w.mu, w.subcarrier_spacing_hz) {
        (Some(mu), None) => mu,
        (None, Some(spacing)) => Numerology::from_spacing(spacing)
            .map_err(|e| (key("subcarrier_spacing_hz"), e.to_string()))?
            .mu,
        (Some(mu), Some(spacing)) => {
            let from_spacing = Numerology::from_spacing(spacing)
                .map_err(|e| (key("subcarrier_spacing_hz"), e.to_string()))?;
            if from_spacing.mu != mu {
                return Err((
                    key("subcarrier_spacing_hz"),
                    format!("{spacing} Hz disagrees with mu = {mu}"),
                ));
            }
            mu
        }
        (None, None) => {
            return Err((key("mu"), "one of `mu` or `subcarrier_spacing_hz` is required".into()))
        }
    };
    let params = PrsParams {
        carrier_hz: w.carrier_hz,
        bandwidth_hz: w.bandwidth_hz,
        mu,
        n_prb: w.n_prb,
        comb_size: w.comb_size,
        comb_offset: w.comb_offset,
        num_symbols: w.num_symbols,
        tx_power_w: w.tx_power_w,
    };
    PrsConfig::new(&params).map_err(|e| {
        let field = match &e {
            Error::InvalidParameter { name: "bandwidth", .. } => "bandwidth_hz",
            Error::InvalidParameter { name, .. } => name,
            Error::UnsupportedNumerology(_) if w.mu.is_some() => "mu",
            Error::UnsupportedNumerology(_) => "subcarrier_spacing_hz",
            Error::OutOfRange { .. } if w.n_prb.is_some() => "n_prb",
            _ => "bandwidth_hz",
        };
        (key(field), e.to_string())
    })
}

fn noise_spec(n: &NoiseSection) -> Result<NoiseSpec, (String, String)> {
    match (n.snr_db, n.power_density_w_per_hz) {
        (Some(_), Some(_)) => Err((
            "noise.power_density_w_per_hz".into(),
            "set either `snr_db` or `power_density_w_per_hz`, not both".into(),
        )),
        (None, Some(w_per_hz)) => {
            if n.reference_range_m.is_some() || n.reference_rcs_m2.is_some() {
                return Err((
                    "noise.reference_range_m".into(),
                    "reference target only applies with `snr_db`".into(),
                ));
            }
            Ok(NoiseSpec::PowerDensity { w_per_hz })
        }
        (snr, None) => Ok(NoiseSpec::SnrDb {
            snr_db: snr.unwrap_or(NoiseSpec::DEFAULT_SNR_DB),
            reference_range_m: n.reference_range_m.unwrap_or(NoiseSpec::REFERENCE_RANGE_M),
            reference_rcs_m2: n.reference_rcs_m2.unwrap_or(NoiseSpec::REFERENCE_RCS_M2),
        }),
    }
}

/// Turns a TOML deserialisation error into a [`ParseError`] with the line
/// and, when the span points at an assignment, the dotted key.
pub(crate) fn toml_error(text: &str, err: &toml::de::Error) -> ParseError {
    let line = err.span().map(|s| line_of(text, s.start));
    let key = line
        .and_then(|l| key_at_line(text, l))
        .or_else(|| missing_field(err.message()));
    ParseError {
        key,
        line,
        message: err.message().trim().to_string(),
    }
}

fn missing_field(message: &str) -> Option<String> {
    let rest = message.split("missing field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses `[table]` / `[[array]]` headers.
fn header(line: &str) -> Option<(&str, bool)> {
    let t = line.trim();
    if let Some(inner) = t.strip_prefix("[[").and_then(|s| s.split("]]").next()) {
        return Some((inner.trim(), true));
    }
    let inner = t.strip_prefix('[')?.split(']').next()?;
    Some((inner.trim(), false))
}

fn assignment_key(line: &str) -> Option<&str> {
    let t = line.trim();
    if t.starts_with('#') || t.starts_with('[') {
        return None;
    }
    let (k, _) = t.split_once('=')?;
    let k = k.trim().trim_matches('"');
    (!k.is_empty()).then_some(k)
}

/// Dotted key assigned on 1-based line `line`, e.g. `targets[1].range_m`.
fn key_at_line(text: &str, line: usize) -> Option<String> {
    let lines: Vec<&str> = text.lines().collect();
    let key = assignment_key(lines.get(line.checked_sub(1)?)?)?;
    let mut section = String::new();
    let mut counts = std::collections::HashMap::<String, usize>::new();
    for l in &lines[..line - 1] {
        if let Some((name, array)) = header(l) {
            section = if array {
                let n = counts.entry(name.to_string()).or_insert(0);
                *n += 1;
                format!("{name}[{}]", *n - 1)
            } else {
                name.to_string()
            };
        }
    }
    Some(if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    })
}

/// Line on which a dotted key is assigned; falls back to its section header.
pub(crate) fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (lines, mut header_line) = (text.lines().collect::<Vec<_>>(), None);
    let mut section = String::new();
    let mut counts = std::collections::HashMap::<String, usize>::new();
    for (i, l) in lines.iter().enumerate() {
        if let Some((name, array)) = header(l) {
            section = if array {
                let n = counts.entry(name.to_string()).or_insert(0);
                *n += 1;
                format!("{name}[{}]", *n - 1)
            } else {
                name.to_string()
            };
            if dotted.starts_with(&section) && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        if let Some(k) = assignment_key(l) {
            let full = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            if full == dotted {
                return Some(i + 1);
            }
        }
    }
    header_line
}
