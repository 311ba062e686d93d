//! Optimal truth/detection assignment, RMSE and sweep normalisation on toy data.

use prs_isac::channel::Target;
use prs_isac::metrics::{
    communication_rate, match_detections, rmse_range, rmse_velocity, BinScales,
};
use prs_isac::processor::Detection;

fn detection(range_m: f64, velocity_mps: f64) -> Detection {
    Detection {
        range_m,
        velocity_mps,
        power: 1.0,
        range_bin: 0,
        doppler_bin: 0,
    }
}

fn main() -> Result<(), prs_isac::Error> {
    let truths = vec![
        Target::new(10.0, 0.0, 4.0)?,
        Target::new(11.5, 0.0, 4.0)?,
        Target::new(60.0, 3.0, 4.0)?,
    ];
    let detections = vec![detection(11.0, 0.0), detection(8.1, 0.0), detection(90.0, 0.0)];
    let scales = BinScales {
        range_bin_m: 1.0,
        velocity_bin_mps: 1.0,
    };
    let a = match_detections(&detections, &truths, scales);
    for p in &a.pairs {
        println!("truth {} <- detection {} (cost {:.2})", p.truth, p.detection, p.cost);
    }
    println!("misses {:?}, false alarms {:?}", a.misses, a.false_alarms);
    println!("e_R = {:.3} m, e_v = {:.3} m/s", rmse_range(&a)?, rmse_velocity(&a)?);
    for n in [24, 68, 140, 272] {
        println!("comm rate at {n:>3} PRBs: {:.4}", communication_rate(n)?);
    }
    Ok(())
}
