//! PRB binary search in both modes, first against a scripted step response and
//! then against the full pipeline on the five-target scene.

use std::convert::Infallible;

use prs_isac::adaptation::{run_adaptation, SearchMode};
use prs_isac::channel::{NoiseSpec, Scenario, Target};
use prs_isac::pipeline::run_scenario;
use prs_isac::processor::DetectorParams;
use prs_isac::waveform::{PrsConfig, PrsParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mode in [SearchMode::Paper, SearchMode::Standard] {
        let step = |n_prb: usize| Ok::<_, Infallible>(if n_prb >= 200 { 5 } else { 4 });
        let (chosen, state) = run_adaptation(step, mode, 20).expect("scripted evaluator");
        let trace: Vec<usize> = state.history.iter().map(|r| r.n_prb).collect();
        println!("step at 200, {mode:>8}: chosen {chosen:>3}, probes {trace:?}");
    }

    let base = Scenario {
        config: PrsConfig::new(&PrsParams::default())?,
        targets: [(70.0, -15.0), (78.0, 12.0), (85.0, -5.0), (94.0, 18.0), (102.0, 8.0)]
            .into_iter()
            .map(|(r, v)| Target::new(r, v, 4.0))
            .collect::<Result<_, _>>()?,
        noise: NoiseSpec::default(),
        seed: 1,
    };
    let detector = DetectorParams::default();
    for mode in [SearchMode::Paper, SearchMode::Standard] {
        let evaluator = |n_prb: usize| -> prs_isac::Result<usize> {
            let mut s = base.clone();
            s.config = base.config.with_n_prb(n_prb)?;
            Ok(run_scenario(&s, &detector)?.detections.len())
        };
        let (chosen, state) = run_adaptation(evaluator, mode, 20)?;
        println!("pipeline, {mode:>8}: chosen {chosen}");
        for r in &state.history {
            println!(
                "  {:>2}: n_L={:>2} n_M={:>2} n_R={:>2} n_prb={:>3} count={}",
                r.iteration, r.n_low, r.n_mid, r.n_high, r.n_prb, r.count
            );
        }
    }
    Ok(())
}
