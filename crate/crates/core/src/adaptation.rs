//! Binary search over the PRB lattice `n_prb = 4 n + 24`, `n in 0..=62`,
//! driven by the number of targets a candidate allocation detects.
//!
//! Both modes start by counting targets at `n = 31` (148 PRBs) and then at
//! `floor((31 + 62) / 2) = 46` (208 PRBs).
//!
//! * [`SearchMode::Paper`] keeps climbing towards `n_R` while the count
//!   increases (`n_L = n_M`, `n_M = floor((n_M + n_L) / 2)`), moves `n_R`
//!   down otherwise, and stops once two consecutive evaluations agree.
//! * [`SearchMode::Standard`] additionally evaluates the right end of the
//!   lattice, then bisects for the smallest index reaching the best count.
//!   For a non-decreasing evaluator this is the brute-force optimum.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::waveform::{MIN_PRB, PRB_STEP};

pub const MAX_INDEX: usize = 62;
pub const START_INDEX: usize = 31;

#[derive(Debug, Error, PartialEq)]
pub enum AdaptError<E> {
    #[error("max_iters must be at least 1")]
    NoIterations,
    #[error("lattice index {0} outside 0..=62")]
    Index(usize),
    #[error("evaluator failed: {0}")]
    Evaluator(E),
}

/// `4 n + 24`.
pub fn prb_from_index(n: usize) -> Result<usize, AdaptError<std::convert::Infallible>> {
    if n > MAX_INDEX {
        return Err(AdaptError::Index(n));
    }
    Ok(PRB_STEP * n + MIN_PRB)
}

fn prb(n: usize) -> usize {
    PRB_STEP * n + MIN_PRB
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    Paper,
    #[default]
    Standard,
}

impl std::str::FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(SearchMode::Paper),
            "standard" => Ok(SearchMode::Standard),
            other => Err(format!("unknown search mode `{other}` (paper|standard)")),
        }
    }
}

impl std::fmt::Display for SearchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchMode::Paper => "paper",
            SearchMode::Standard => "standard",
        })
    }
}

/// One evaluator call together with the bracket at the time it was made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub iteration: usize,
    pub n_low: usize,
    pub n_mid: usize,
    pub n_high: usize,
    pub n_prb: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchState {
    pub mode: SearchMode,
    pub n_low: usize,
    pub n_mid: usize,
    pub n_high: usize,
    pub history: Vec<TraceRow>,
    /// Evaluator calls after the initial one at `n = 31`.
    pub iterations: usize,
    /// Set when `max_iters` ran out before the search terminated.
    pub truncated: bool,
}

impl SearchState {
    fn new(mode: SearchMode) -> Self {
        Self {
            mode,
            n_low: 0,
            n_mid: START_INDEX,
            n_high: MAX_INDEX,
            history: Vec::new(),
            iterations: 0,
            truncated: false,
        }
    }

    /// Smallest evaluated PRB count among those with the largest observed count.
    pub fn best_prb(&self) -> Option<usize> {
        let best = self.history.iter().map(|r| r.count).max()?;
        self.history
            .iter()
            .filter(|r| r.count == best)
            .map(|r| r.n_prb)
            .min()
    }
}

/// Signals that the iteration budget is spent.
struct Exhausted;

struct Search<'a, F> {
    state: SearchState,
    cache: BTreeMap<usize, usize>,
    evaluator: &'a mut F,
    max_iters: usize,
}

impl<'a, F, E> Search<'a, F>
where
    F: FnMut(usize) -> Result<usize, E>,
{
    fn eval(&mut self, n: usize) -> Result<Result<usize, Exhausted>, E> {
        if let Some(&count) = self.cache.get(&n) {
            return Ok(Ok(count));
        }
        let first = self.state.history.is_empty();
        if !first && self.state.iterations >= self.max_iters {
            self.state.truncated = true;
            return Ok(Err(Exhausted));
        }
        let count = (self.evaluator)(prb(n))?;
        if !first {
            self.state.iterations += 1;
        }
        self.cache.insert(n, count);
        self.state.history.push(TraceRow {
            iteration: self.state.history.len(),
            n_low: self.state.n_low,
            n_mid: self.state.n_mid,
            n_high: self.state.n_high,
            n_prb: prb(n),
            count,
        });
        Ok(Ok(count))
    }

    fn run_paper(&mut self) -> Result<(), E> {
        let Ok(mut mid_count) = self.eval(self.state.n_mid)? else {
            return Ok(());
        };
        while self.state.n_high - self.state.n_low > 1 {
            let probe = (self.state.n_mid + self.state.n_high) / 2;
            if probe == self.state.n_mid {
                break;
            }
            self.state.n_mid = probe;
            let Ok(count) = self.eval(probe)? else {
                return Ok(());
            };
            if count > mid_count {
                self.state.n_low = self.state.n_mid;
            } else {
                self.state.n_high = self.state.n_mid;
            }
            self.state.n_mid = (self.state.n_mid + self.state.n_low) / 2;
            if count == mid_count {
                break;
            }
            mid_count = count;
        }
        Ok(())
    }

    fn run_standard(&mut self) -> Result<(), E> {
        let opening = [
            START_INDEX,
            (START_INDEX + MAX_INDEX) / 2,
            MAX_INDEX,
        ];
        for n in opening {
            self.state.n_mid = n;
            if self.eval(n)?.is_err() {
                return Ok(());
            }
        }

        let mut target = self.cache.values().copied().max().unwrap_or(0);
        let high = *self
            .cache
            .iter()
            .find(|(_, &c)| c >= target)
            .map(|(n, _)| n)
            .expect("opening evaluations exist");
        let low = self
            .cache
            .range(..high)
            .filter(|(_, &c)| c < target)
            .map(|(&n, _)| n + 1)
            .max()
            .unwrap_or(0);
        self.state.n_low = low;
        self.state.n_high = high;

        while self.state.n_low < self.state.n_high {
            self.state.n_mid = (self.state.n_low + self.state.n_high) / 2;
            let Ok(count) = self.eval(self.state.n_mid)? else {
                return Ok(());
            };
            if count >= target {
                target = count;
                self.state.n_high = self.state.n_mid;
            } else {
                self.state.n_low = self.state.n_mid + 1;
            }
        }
        self.state.n_mid = self.state.n_high;
        Ok(())
    }
}

/// Runs the PRB search. `evaluator` maps a PRB count to a detected-target
/// count; at most `max_iters` calls are made after the initial one.
/// Returns the chosen PRB count and the full search state.
pub fn run_adaptation<F, E>(
    mut evaluator: F,
    mode: SearchMode,
    max_iters: usize,
) -> Result<(usize, SearchState), AdaptError<E>>
where
    F: FnMut(usize) -> Result<usize, E>,
{
    if max_iters == 0 {
        return Err(AdaptError::NoIterations);
    }
    let mut search = Search {
        state: SearchState::new(mode),
        cache: BTreeMap::new(),
        evaluator: &mut evaluator,
        max_iters,
    };
    match mode {
        SearchMode::Paper => search.run_paper(),
        SearchMode::Standard => search.run_standard(),
    }
    .map_err(AdaptError::Evaluator)?;
    let state = search.state;
    let chosen = state.best_prb().expect("at least one evaluation");
    Ok((chosen, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn step(at_prb: usize, low: usize, high: usize) -> impl FnMut(usize) -> Result<usize, Infallible> {
        move |n_prb| Ok(if n_prb >= at_prb { high } else { low })
    }

    #[test]
    fn lattice_mapping() {
        assert_eq!(prb_from_index(31).unwrap(), 148);
        assert_eq!(prb_from_index(46).unwrap(), 208);
        assert_eq!(prb_from_index(0).unwrap(), 24);
        assert_eq!(prb_from_index(62).unwrap(), 272);
        assert_eq!(prb_from_index(63), Err(AdaptError::Index(63)));
    }

    #[test]
    fn paper_mode_constant_counts() {
        let (chosen, state) =
            run_adaptation(|_| Ok::<_, Infallible>(5), SearchMode::Paper, 20).unwrap();
        assert_eq!(chosen, 148);
        let prbs: Vec<usize> = state.history.iter().map(|r| r.n_prb).collect();
        assert_eq!(prbs, vec![148, 208]);
        assert!(!state.truncated);
        // bracket moved left after the non-increasing probe
        assert_eq!((state.n_low, state.n_mid, state.n_high), (0, 23, 46));
    }

    #[test]
    fn paper_mode_climbs_while_increasing() {
        // count grows with every allocation
        let (chosen, state) =
            run_adaptation(Ok::<_, Infallible>, SearchMode::Paper, 20).unwrap();
        let prbs: Vec<usize> = state.history.iter().map(|r| r.n_prb).collect();
        assert_eq!(prbs, vec![148, 208, 240, 256, 264, 268]);
        assert_eq!(chosen, 268);
    }

    #[test]
    fn paper_mode_continues_after_a_drop() {
        let (chosen, state) = run_adaptation(step(150, 5, 3), SearchMode::Paper, 20).unwrap();
        let prbs: Vec<usize> = state.history.iter().map(|r| r.n_prb).collect();
        assert_eq!(prbs, vec![148, 208, 160]);
        assert_eq!(chosen, 148);
        assert_eq!(state.n_high, 34);
    }

    #[test]
    fn standard_mode_step_at_208() {
        let (chosen, state) = run_adaptation(step(208, 4, 5), SearchMode::Standard, 20).unwrap();
        assert_eq!(chosen, 208);
        assert_eq!(state.history[0].n_prb, 148);
        assert_eq!(state.history[1].n_prb, 208);
        assert!(state.history.len() - 2 <= 6);
    }

    #[test]
    fn modes_diverge_after_opening_pair() {
        let (_, paper) = run_adaptation(step(208, 4, 5), SearchMode::Paper, 20).unwrap();
        let (_, standard) = run_adaptation(step(208, 4, 5), SearchMode::Standard, 20).unwrap();
        assert_eq!(paper.history[..2], standard.history[..2]);
        assert_ne!(paper.history[2].n_prb, standard.history[2].n_prb);
    }

    #[test]
    fn iteration_cap() {
        let mut calls = 0;
        let (_, state) = run_adaptation(
            |p| {
                calls += 1;
                Ok::<_, Infallible>(p)
            },
            SearchMode::Standard,
            1,
        )
        .unwrap();
        assert_eq!(calls, 2);
        assert_eq!(state.iterations, 1);
        assert!(state.truncated);
        assert_eq!(
            run_adaptation(|_| Ok::<_, Infallible>(1), SearchMode::Paper, 0).unwrap_err(),
            AdaptError::NoIterations
        );
    }

    #[test]
    fn evaluator_errors_propagate() {
        let err = run_adaptation(
            |p| if p > 200 { Err("boom") } else { Ok(1) },
            SearchMode::Standard,
            10,
        )
        .unwrap_err();
        assert_eq!(err, AdaptError::Evaluator("boom"));
    }

    #[test]
    fn standard_matches_brute_force_on_multi_step() {
        let counts = |p: usize| -> Result<usize, Infallible> {
            Ok(match p {
                0..=59 => 1,
                60..=179 => 2,
                180..=251 => 3,
                _ => 4,
            })
        };
        let (chosen, _) = run_adaptation(counts, SearchMode::Standard, 20).unwrap();
        assert_eq!(chosen, 252);
    }
}
