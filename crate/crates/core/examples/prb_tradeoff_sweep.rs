//! Monte Carlo sweep of both bands: sensing error against communication rate.
//! The first argument sets the number of runs per configuration (default 50).

use prs_isac::cli::{evaluate_sweep, Preset, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SweepSpec::preset(Preset::Both);
    spec.monte_carlo_runs = match std::env::args().nth(1) {
        Some(n) => n.parse()?,
        None => 50,
    };
    let outcome = evaluate_sweep(&spec)?;
    println!(
        "{:>4} {:>6} {:>9} {:>11} {:>8} {:>10}",
        "band", "n_prb", "e_R (m)", "e_v (m/s)", "e_norm", "comm_rate"
    );
    for row in &outcome.rows {
        let r = &row.result.record;
        println!(
            "{:>4} {:>6} {:>9.3} {:>11.3} {:>8.3} {:>10.3}",
            row.result.band,
            r.n_prb,
            r.e_range_m.unwrap_or(f64::NAN),
            r.e_velocity_mps.unwrap_or(f64::NAN),
            row.normalized_error,
            row.comm_rate
        );
    }
    for f in &outcome.failures {
        println!("failed {} {} Hz: {}", f.band, f.bandwidth_hz, f.reason);
    }
    Ok(())
}
