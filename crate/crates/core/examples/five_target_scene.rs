//! Five targets at 24 GHz with 140 PRBs. Pass a path to also write the
//! range-Doppler map as a PGM image.

use prs_isac::channel::{NoiseSpec, Scenario, Target};
use prs_isac::cli::output::map_pgm;
use prs_isac::pipeline::run_scenario;
use prs_isac::processor::DetectorParams;
use prs_isac::waveform::{PrsConfig, PrsParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PrsConfig::new(&PrsParams::default())?;
    let targets = [(70.0, -15.0), (78.0, 12.0), (85.0, -5.0), (94.0, 18.0), (102.0, 8.0)]
        .into_iter()
        .map(|(r, v)| Target::new(r, v, 4.0))
        .collect::<Result<Vec<_>, _>>()?;
    let scenario = Scenario {
        config,
        targets,
        noise: NoiseSpec::default(),
        seed: 1,
    };
    let out = run_scenario(&scenario, &DetectorParams::default())?;

    println!(
        "{} PRBs, map {:?}, native bins {:.3} m x {:.3} m/s",
        scenario.config.n_prb(),
        out.map.shape(),
        out.map.native_range_bin_m(),
        out.map.native_velocity_bin_mps()
    );
    for pair in &out.assignment.pairs {
        let t = &scenario.targets[pair.truth];
        let d = &out.detections[pair.detection];
        println!(
            "truth ({:6.2} m, {:6.2} m/s) -> estimate ({:6.2} m, {:6.2} m/s)",
            t.range_m, t.velocity_mps, d.range_m, d.velocity_mps
        );
    }
    println!(
        "e_R = {:.3} m, e_v = {:.3} m/s, misses {}, false alarms {}",
        out.record.e_range_m.unwrap_or(f64::NAN),
        out.record.e_velocity_mps.unwrap_or(f64::NAN),
        out.record.misses,
        out.record.false_alarms
    );
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, map_pgm(&out.map))?;
        println!("wrote {path}");
    }
    Ok(())
}
