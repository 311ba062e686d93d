//! Estimation scoring and the sensing/communication tradeoff.
//!
//! RMSE values divide by the number of matched truth/detection pairs;
//! unmatched truths are reported as misses rather than entering the error.

use crate::channel::Target;
use crate::error::{Error, Result};
use crate::processor::Detection;
use crate::waveform::{is_valid_prb, MAX_PRB, PrsConfig};

/// Pairs further apart than this many native bins are never matched.
pub const DEFAULT_GATE_BINS: f64 = 3.0;

/// Native bin widths used to normalise match distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinScales {
    pub range_bin_m: f64,
    pub velocity_bin_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub truth: usize,
    pub detection: usize,
    /// Estimate minus truth.
    pub range_error_m: f64,
    pub velocity_error_mps: f64,
    /// Squared bin-normalised distance.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub pairs: Vec<MatchedPair>,
    pub misses: Vec<usize>,
    pub false_alarms: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.cost).sum()
    }
}

fn normalized_cost(d: &Detection, t: &Target, scales: BinScales) -> f64 {
    let dr = (d.range_m - t.range_m) / scales.range_bin_m;
    let dv = (d.velocity_mps - t.velocity_mps) / scales.velocity_bin_mps;
    dr * dr + dv * dv
}

pub fn match_detections(
    detections: &[Detection],
    truths: &[Target],
    scales: BinScales,
) -> Assignment {
    match_detections_gated(detections, truths, scales, DEFAULT_GATE_BINS)
}

/// Optimal one-to-one assignment: maximises the number of pairs inside the
/// gate, then minimises the summed squared normalised distance.
pub fn match_detections_gated(
    detections: &[Detection],
    truths: &[Target],
    scales: BinScales,
    gate_bins: f64,
) -> Assignment {
    let gate = gate_bins * gate_bins;
    let n_pairs = truths.len().min(detections.len());
    // any gated pair costs more than every admissible assignment combined
    let forbidden = (gate + 1.0) * (n_pairs as f64 + 1.0);
    let cost: Vec<Vec<f64>> = truths
        .iter()
        .map(|t| {
            detections
                .iter()
                .map(|d| {
                    let c = normalized_cost(d, t, scales);
                    if c <= gate {
                        c
                    } else {
                        forbidden
                    }
                })
                .collect()
        })
        .collect();

    let mut pairs = Vec::new();
    for (ti, di) in min_cost_assignment(&cost) {
        if cost[ti][di] >= forbidden {
            continue;
        }
        let (t, d) = (&truths[ti], &detections[di]);
        pairs.push(MatchedPair {
            truth: ti,
            detection: di,
            range_error_m: d.range_m - t.range_m,
            velocity_error_mps: d.velocity_mps - t.velocity_mps,
            cost: cost[ti][di],
        });
    }
    pairs.sort_by_key(|p| p.truth);
    let misses = (0..truths.len())
        .filter(|ti| !pairs.iter().any(|p| p.truth == *ti))
        .collect();
    let false_alarms = (0..detections.len())
        .filter(|di| !pairs.iter().any(|p| p.detection == *di))
        .collect();
    Assignment {
        pairs,
        misses,
        false_alarms,
    }
}

/// Hungarian algorithm (potentials form) on a rectangular cost matrix.
/// Returns `min(rows, cols)` (row, col) pairs.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| cost[r][c]).collect())
            .collect();
        return min_cost_assignment(&transposed)
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
    }

    // 1-based indexing; column 0 is a virtual start node
    let (n, m) = (rows, cols);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect()
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    (n > 0).then(|| (sum / n as f64).sqrt())
}

pub fn rmse_range(assignment: &Assignment) -> Result<f64> {
    rms(assignment.pairs.iter().map(|p| p.range_error_m))
        .ok_or(Error::UndefinedMetric("range RMSE without matched pairs"))
}

pub fn rmse_velocity(assignment: &Assignment) -> Result<f64> {
    rms(assignment.pairs.iter().map(|p| p.velocity_error_mps))
        .ok_or(Error::UndefinedMetric("velocity RMSE without matched pairs"))
}

/// Scores of one configuration (one run, or a Monte Carlo mean).
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub n_prb: usize,
    pub spacing_hz: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    /// `None` when nothing was matched.
    pub e_range_m: Option<f64>,
    pub e_velocity_mps: Option<f64>,
    pub matched: usize,
    pub misses: usize,
    pub false_alarms: usize,
}

impl EvaluationRecord {
    pub fn from_assignment(config: &PrsConfig, assignment: &Assignment) -> Self {
        Self {
            n_prb: config.n_prb(),
            spacing_hz: config.spacing_hz(),
            bandwidth_hz: config.bandwidth_hz(),
            carrier_hz: config.carrier_hz(),
            e_range_m: rmse_range(assignment).ok(),
            e_velocity_mps: rmse_velocity(assignment).ok(),
            matched: assignment.pairs.len(),
            misses: assignment.misses.len(),
            false_alarms: assignment.false_alarms.len(),
        }
    }

    fn errors(&self) -> Result<(f64, f64)> {
        match (self.e_range_m, self.e_velocity_mps) {
            (Some(r), Some(v)) => Ok((r, v)),
            _ => Err(Error::UndefinedMetric("record without matched pairs")),
        }
    }
}

/// `0.5 * (e_v / max e_v + e_R / max e_R)` over the batch. A column whose
/// maximum is zero contributes zero.
pub fn normalized_error(records: &[EvaluationRecord]) -> Result<Vec<f64>> {
    let errors = records
        .iter()
        .map(EvaluationRecord::errors)
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize_pairs(&errors)?.0)
}

/// Returns the normalised errors plus the two column maxima.
fn normalize_pairs(errors: &[(f64, f64)]) -> Result<(Vec<f64>, f64, f64)> {
    if errors.is_empty() {
        return Err(Error::UndefinedMetric("normalised error of an empty batch"));
    }
    let max_r = errors.iter().map(|e| e.0).fold(0.0, f64::max);
    let max_v = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let ratio = |x: f64, max: f64| if max > 0.0 { x / max } else { 0.0 };
    let normalized = errors
        .iter()
        .map(|&(r, v)| 0.5 * (ratio(v, max_v) + ratio(r, max_r)))
        .collect();
    Ok((normalized, max_r, max_v))
}

/// Share of the maximum 272 PRBs left for data: `(272 - n_prb) / 272`.
pub fn communication_rate(n_prb: usize) -> Result<f64> {
    if !is_valid_prb(n_prb) {
        return Err(Error::param(
            "n_prb",
            format!("{n_prb} is not on the 24..=272 step-4 lattice"),
        ));
    }
    Ok((MAX_PRB - n_prb) as f64 / MAX_PRB as f64)
}

/// Records of one sweep invocation with their joint normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub records: Vec<EvaluationRecord>,
    pub max_e_range_m: f64,
    pub max_e_velocity_mps: f64,
    pub normalized_errors: Vec<f64>,
    pub comm_rates: Vec<f64>,
}

impl SweepSummary {
    pub fn new(records: Vec<EvaluationRecord>) -> Result<Self> {
        let errors = records
            .iter()
            .map(EvaluationRecord::errors)
            .collect::<Result<Vec<_>>>()?;
        let (normalized_errors, max_e_range_m, max_e_velocity_mps) = normalize_pairs(&errors)?;
        let comm_rates = records
            .iter()
            .map(|r| communication_rate(r.n_prb))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            records,
            max_e_range_m,
            max_e_velocity_mps,
            normalized_errors,
            comm_rates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SCALES: BinScales = BinScales {
        range_bin_m: 1.0,
        velocity_bin_mps: 1.0,
    };

    fn det(range_m: f64, velocity_mps: f64) -> Detection {
        Detection {
            range_m,
            velocity_mps,
            power: 1.0,
            range_bin: 0,
            doppler_bin: 0,
        }
    }

    fn tgt(range_m: f64, velocity_mps: f64) -> Target {
        Target::new(range_m, velocity_mps, 4.0).unwrap()
    }

    fn record(e_r: f64, e_v: f64) -> EvaluationRecord {
        EvaluationRecord {
            n_prb: 68,
            spacing_hz: 30e3,
            bandwidth_hz: 25e6,
            carrier_hz: 2.5e9,
            e_range_m: Some(e_r),
            e_velocity_mps: Some(e_v),
            matched: 1,
            misses: 0,
            false_alarms: 0,
        }
    }

    /// Every injective truth -> detection map, exhaustively.
    fn brute_force_cost(cost: &[Vec<f64>]) -> f64 {
        fn go(row: usize, used: &mut Vec<bool>, cost: &[Vec<f64>]) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(row + 1, used, cost));
                    used[j] = false;
                }
            }
            best
        }
        go(0, &mut vec![false; cost[0].len()], cost)
    }

    #[test]
    fn perfect_estimates() {
        let truths = vec![tgt(10.0, 1.0), tgt(20.0, -2.0), tgt(30.0, 0.5)];
        let dets: Vec<_> = truths.iter().rev().map(|t| det(t.range_m, t.velocity_mps)).collect();
        let a = match_detections(&dets, &truths, SCALES);
        assert_eq!(a.pairs.len(), 3);
        assert!(a.misses.is_empty() && a.false_alarms.is_empty());
        for p in &a.pairs {
            assert_eq!(p.detection, 2 - p.truth);
        }
        assert_eq!(rmse_range(&a).unwrap(), 0.0);
        assert_eq!(rmse_velocity(&a).unwrap(), 0.0);
    }

    #[test]
    fn more_truths_than_detections() {
        let truths: Vec<_> = (0..5).map(|i| tgt(10.0 * (i + 1) as f64, 0.0)).collect();
        let dets: Vec<_> = truths[..4].iter().map(|t| det(t.range_m + 0.1, 0.0)).collect();
        let a = match_detections(&dets, &truths, SCALES);
        assert_eq!(a.pairs.len(), 4);
        assert_eq!(a.misses, vec![4]);
    }

    #[test]
    fn optimal_beats_greedy() {
        // truth-order greedy pairs t0-d0 (cost 1) and then t1-d1 (cost 11.56)
        let truths = vec![tgt(10.0, 0.0), tgt(11.5, 0.0)];
        let dets = vec![det(11.0, 0.0), det(8.1, 0.0)];
        let scales = BinScales {
            range_bin_m: 1.0,
            velocity_bin_mps: 1.0,
        };
        let a = match_detections_gated(&dets, &truths, scales, 10.0);
        let cost: Vec<Vec<f64>> = truths
            .iter()
            .map(|t| dets.iter().map(|d| normalized_cost(d, t, scales)).collect())
            .collect();
        let greedy = 1.0 + 11.56;
        assert_relative_eq!(a.total_cost(), brute_force_cost(&cost));
        assert!(a.total_cost() < greedy);
        assert_relative_eq!(a.total_cost(), 3.61 + 0.25, max_relative = 1e-12);
        assert_eq!((a.pairs[0].detection, a.pairs[1].detection), (1, 0));
    }

    #[test]
    fn hungarian_matches_exhaustive_search() {
        let mut state = 12345u64;
        let mut next = || {
            state = crate::rng::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for rows in 1..=5 {
            for cols in rows..=6 {
                let cost: Vec<Vec<f64>> =
                    (0..rows).map(|_| (0..cols).map(|_| next() * 10.0).collect()).collect();
                let found: f64 = min_cost_assignment(&cost)
                    .iter()
                    .map(|&(r, c)| cost[r][c])
                    .sum();
                assert_relative_eq!(found, brute_force_cost(&cost), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gate_rejects_distant_pairs() {
        let truths = vec![tgt(10.0, 0.0)];
        let dets = vec![det(50.0, 0.0)];
        let a = match_detections(&dets, &truths, SCALES);
        assert!(a.pairs.is_empty());
        assert_eq!(a.misses, vec![0]);
        assert_eq!(a.false_alarms, vec![0]);
        assert!(matches!(rmse_range(&a), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn rmse_values() {
        let truths = vec![tgt(10.0, 0.0)];
        let a = match_detections(&[det(11.0, 0.0)], &truths, SCALES);
        assert_eq!(rmse_range(&a).unwrap(), 1.0);
        let truths = vec![tgt(10.0, 0.0), tgt(30.0, 0.0)];
        let a = match_detections_gated(&[det(13.0, 0.0), det(34.0, 0.0)], &truths, SCALES, 5.0);
        assert_relative_eq!(rmse_range(&a).unwrap(), (25.0f64 / 2.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn normalized_error_examples() {
        let e = normalized_error(&[record(2.0, 1.0), record(4.0, 2.0), record(1.0, 4.0)]).unwrap();
        assert_relative_eq!(e[0], 0.375, epsilon = 1e-12);
        assert_relative_eq!(e[1], 0.75, epsilon = 1e-12);
        assert_relative_eq!(e[2], 0.625, epsilon = 1e-12);
        let e = normalized_error(&[record(4.0, 2.0), record(2.0, 1.0)]).unwrap();
        assert_eq!(e, vec![1.0, 0.5]);
        let e = normalized_error(&[record(0.0, 2.0), record(0.0, 1.0)]).unwrap();
        assert_eq!(e, vec![0.5, 0.25]);
        assert!(normalized_error(&[]).is_err());
    }

    #[test]
    fn communication_rates() {
        assert_eq!(communication_rate(272).unwrap(), 0.0);
        assert_eq!(communication_rate(68).unwrap(), 0.75);
        assert_relative_eq!(communication_rate(24).unwrap(), 248.0 / 272.0);
        assert!(communication_rate(70).is_err());
        assert!(communication_rate(20).is_err());
    }

    #[test]
    fn summary_maxima() {
        let s = SweepSummary::new(vec![record(2.0, 1.0), record(4.0, 2.0), record(1.0, 4.0)]).unwrap();
        assert_eq!(s.max_e_range_m, 4.0);
        assert_eq!(s.max_e_velocity_mps, 4.0);
        assert_eq!(s.comm_rates, vec![0.75; 3]);
    }
}
