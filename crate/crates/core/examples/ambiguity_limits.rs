//! Unambiguous range/velocity and resolutions for the FR1 and FR2 presets.

use prs_isac::cli::SweepSpec;
use prs_isac::processor::{
    max_unambiguous_range, max_unambiguous_velocity, range_resolution, velocity_resolution,
};

fn main() {
    let spec = SweepSpec::preset(prs_isac::cli::Preset::Both);
    let configs = spec.validate().expect("presets are valid");
    println!(
        "{:>4} {:>8} {:>8} {:>6} {:>10} {:>9} {:>10} {:>9}",
        "band", "B (MHz)", "df (kHz)", "n_prb", "R_max (m)", "dR (m)", "v_max", "dv (m/s)"
    );
    for (entry, config) in spec.configs.iter().zip(&configs) {
        println!(
            "{:>4} {:>8.0} {:>8.0} {:>6} {:>10.1} {:>9.3} {:>10.1} {:>9.3}",
            entry.band,
            config.bandwidth_hz() / 1e6,
            config.spacing_hz() / 1e3,
            config.n_prb(),
            max_unambiguous_range(config),
            range_resolution(config),
            max_unambiguous_velocity(config),
            velocity_resolution(config),
        );
    }
}
