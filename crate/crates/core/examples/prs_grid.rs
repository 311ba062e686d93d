//! Builds a small PRS grid and reports its structure and sequence statistics.

use num_complex::Complex64;
use prs_isac::waveform::{build_prs_grid, generate_prs_sequence, PrsConfig, PrsParams};

fn main() -> Result<(), prs_isac::Error> {
    let config = PrsConfig::new(&PrsParams {
        n_prb: Some(24),
        num_symbols: 8,
        ..PrsParams::default()
    })?;
    let grid = build_prs_grid(&config, 11);
    let (rows, cols) = grid.shape();
    println!(
        "{} PRBs, comb {}: {} of {} subcarriers carry PRS, {} slow-time samples",
        config.n_prb(),
        config.comb_size(),
        rows,
        config.total_subcarriers(),
        cols
    );
    println!("grid energy {:.1} (one per RE)", grid.energy());
    for k in 0..4 {
        let row: Vec<String> = (0..cols)
            .map(|m| {
                let z = grid.get(k, m).expect("in range");
                format!("{:+.2}{:+.2}j", z.re, z.im)
            })
            .collect();
        println!("k={k}: {}", row.join(" "));
    }

    let seq = generate_prs_sequence(11, 1024)?;
    let energy: f64 = seq.iter().map(|z| z.norm_sqr()).sum();
    let worst = (1..seq.len())
        .map(|lag| {
            let c: Complex64 = seq[lag..].iter().zip(&seq).map(|(a, b)| a * b.conj()).sum();
            c.norm() / energy
        })
        .fold(0.0, f64::max);
    println!("worst normalised autocorrelation sidelobe over 1024 symbols: {worst:.3}");
    Ok(())
}
