use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::adaptation::SearchState;
use crate::channel::Target;
use crate::metrics::{communication_rate, EvaluationRecord};
use crate::processor::{Detection, RangeDopplerMap};

use super::CliError;

/// Dynamic range of the grayscale map image.
pub const PGM_FLOOR_DB: f64 = -60.0;

pub(crate) fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

fn opt(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:.6}"))
}

pub fn map_csv(map: &RangeDopplerMap) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# range-Doppler power |X|^2; rows are range bins, columns Doppler bins");
    let _ = writeln!(
        s,
        "# range_step_m={:.9e} velocity_step_mps={:.9e} zero_pad={}",
        map.range_step_m(),
        map.velocity_step_mps(),
        map.zero_pad()
    );
    s.push_str("range_m\\velocity_mps");
    for v in map.velocity_axis() {
        let _ = write!(s, ",{v:.6e}");
    }
    s.push('\n');
    for (r, row) in map.range_axis().iter().zip(map.power().rows()) {
        let _ = write!(s, "{r:.6e}");
        for p in row {
            let _ = write!(s, ",{p:.6e}");
        }
        s.push('\n');
    }
    s
}

/// Binary PGM: one row per range bin, log power relative to the map maximum
/// mapped linearly from the floor (black) to 0 dB (white).
pub fn map_pgm(map: &RangeDopplerMap) -> Vec<u8> {
    let (rows, cols) = map.shape();
    let max = map.power().iter().copied().fold(0.0_f64, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(map.power().iter().map(|&p| {
        if max <= 0.0 || p <= 0.0 {
            return 0u8;
        }
        let db = (10.0 * (p / max).log10()).max(PGM_FLOOR_DB);
        (255.0 * (db - PGM_FLOOR_DB) / -PGM_FLOOR_DB).round() as u8
    }));
    out
}

pub fn detections_csv(detections: &[Detection]) -> String {
    let mut s = String::from("range_est_m,velocity_est_mps,power,bin_i,bin_j\n");
    for d in detections {
        let _ = writeln!(
            s,
            "{:.6},{:.6},{:.6e},{},{}",
            d.range_m, d.velocity_mps, d.power, d.range_bin, d.doppler_bin
        );
    }
    s
}

pub fn truths_csv(targets: &[Target]) -> String {
    let mut s = String::from("range_m,velocity_mps,rcs_m2\n");
    for t in targets {
        let _ = writeln!(s, "{:.6},{:.6},{:.6}", t.range_m, t.velocity_mps, t.rcs_m2);
    }
    s
}

pub fn metrics_csv(record: &EvaluationRecord) -> String {
    let mut s = String::from(
        "# RMSE over matched truth/detection pairs; unmatched truths are counted as misses\n\
         n_prb,spacing_hz,bandwidth_hz,carrier_hz,e_range_m,e_velocity_mps,matched,misses,false_alarms,comm_rate\n",
    );
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{},{}",
        record.n_prb,
        record.spacing_hz,
        record.bandwidth_hz,
        record.carrier_hz,
        opt(record.e_range_m),
        opt(record.e_velocity_mps),
        record.matched,
        record.misses,
        record.false_alarms,
        opt(communication_rate(record.n_prb).ok()),
    );
    s
}

pub fn search_trace_csv(state: &SearchState, chosen: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# mode={} chosen_n_prb={} iterations={} truncated={}",
        state.mode, chosen, state.iterations, state.truncated
    );
    s.push_str("iteration,n_L,n_M,n_R,n_prb,count\n");
    for r in &state.history {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iteration, r.n_low, r.n_mid, r.n_high, r.n_prb, r.count
        );
    }
    s
}

pub fn band_of(carrier_hz: f64) -> &'static str {
    if carrier_hz <= 7.125e9 {
        "FR1"
    } else {
        "FR2"
    }
}

/// `band=.. n_prb=.. detected=m/n e_R=.. e_v=..`
pub fn summary_line(record: &EvaluationRecord, truths: usize) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |v| format!("{v:.4}"));
    format!(
        "band={} n_prb={} detected={}/{} e_R={} e_v={}",
        band_of(record.carrier_hz),
        record.n_prb,
        record.matched,
        truths,
        fmt(record.e_range_m),
        fmt(record.e_velocity_mps)
    )
}
