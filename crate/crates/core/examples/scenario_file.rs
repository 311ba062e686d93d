//! Parses a scenario document, reports a broken one, and prints the
//! normalised form that `--dump-config` emits.

use prs_isac::cli::ScenarioFile;

const SCENARIO: &str = r#"
seed = 9

[waveform]
carrier_hz = 2.5e9
bandwidth_hz = 80e6
subcarrier_spacing_hz = 30e3

[[targets]]
range_m = 30.0
velocity_mps = -7.5
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = ScenarioFile::parse(SCENARIO)?;
    let resolved = file.resolve().map_err(|(k, m)| format!("{k}: {m}"))?;
    println!("resolved to {} PRBs", resolved.scenario.config.n_prb());
    print!("{}", file.to_toml()?);

    let broken = SCENARIO.replace("80e6", "400e6");
    if let Err(e) = ScenarioFile::parse(&broken) {
        println!("rejected: {e}");
    }
    Ok(())
}
