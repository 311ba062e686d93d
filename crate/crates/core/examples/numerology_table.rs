//! Prints subcarrier spacing and symbol timing for every supported numerology.

use prs_isac::waveform::numerology_from_mu;

fn main() -> Result<(), prs_isac::Error> {
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "mu", "df (kHz)", "T (us)", "T_CP (us)", "T_s (us)");
    for mu in 0..=4 {
        let n = numerology_from_mu(mu)?;
        println!(
            "{:>3} {:>10.0} {:>10.2} {:>10.2} {:>10.2}",
            n.mu,
            n.spacing_hz / 1e3,
            n.symbol_s * 1e6,
            n.cp_s * 1e6,
            n.total_s * 1e6
        );
    }
    Ok(())
}
