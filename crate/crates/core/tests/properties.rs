use std::convert::Infallible;
use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use prs_isac::adaptation::{run_adaptation, SearchMode, MAX_INDEX};
use prs_isac::channel::{apply_echo, NoiseSpec, Scenario, Target};
use prs_isac::metrics::{
    communication_rate, match_detections, normalized_error, rmse_range, rmse_velocity, BinScales,
    EvaluationRecord,
};
use prs_isac::processor::{
    dechirp, detect_peaks, max_unambiguous_range, max_unambiguous_velocity, range_doppler_map,
    range_doppler_spectrum, Detection, Window,
};
use prs_isac::waveform::{
    build_prs_grid, numerology_from_mu, prb_count_for, PrsConfig, PrsParams, ResourceGrid,
};

fn small_config(comb: usize, symbols: usize) -> PrsConfig {
    PrsConfig::new(&PrsParams {
        n_prb: Some(24),
        comb_size: comb,
        num_symbols: symbols,
        ..PrsParams::default()
    })
    .unwrap()
}

fn scenario(config: &PrsConfig, targets: Vec<Target>) -> Scenario {
    Scenario {
        config: config.clone(),
        targets,
        noise: NoiseSpec::noiseless(),
        seed: 0,
    }
}

fn target() -> impl Strategy<Value = Target> {
    (1.0..300.0f64, -40.0..40.0f64, 0.1..10.0f64)
        .prop_map(|(r, v, s)| Target::new(r, v, s).unwrap())
}

/// Direct evaluation of the delay-Doppler spectrum definition.
fn brute_force_spectrum(x: &ResourceGrid, zero_pad: usize) -> Vec<Vec<Complex64>> {
    let (n, m) = x.shape();
    let (p, q) = (n * zero_pad, m * zero_pad);
    let center = q / 2;
    (0..p)
        .map(|i| {
            (0..q)
                .map(|j| {
                    let shift = j as f64 - center as f64;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        for s in 0..m {
                            let phase = 2.0 * PI * (k * i) as f64 / p as f64
                                - 2.0 * PI * s as f64 * shift / q as f64;
                            acc += x.data()[(k, s)] * Complex64::from_polar(1.0, phase);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prb_count_on_lattice(b in 1e6..400e6f64, mu in 0u32..=4) {
        let df = numerology_from_mu(mu).unwrap().spacing_hz;
        if let Ok(n) = prb_count_for(b, df) {
            prop_assert_eq!(n % 4, 0);
            prop_assert!((24..=272).contains(&n));
        }
    }

    #[test]
    fn grid_is_pure_with_unit_energy(seed in any::<u64>(), comb_idx in 0usize..4) {
        let comb = [2, 4, 6, 12][comb_idx];
        let config = small_config(comb, 2 * comb);
        let a = build_prs_grid(&config, seed);
        prop_assert_eq!(&a, &build_prs_grid(&config, seed));
        let (n, m) = config.grid_shape();
        prop_assert!((a.energy() - (n * m) as f64).abs() <= 1e-12 * (n * m) as f64);
    }

    #[test]
    fn echo_superposition(a in target(), b in target(), seed in any::<u64>()) {
        let config = small_config(4, 8);
        let tx = build_prs_grid(&config, seed);
        let both = apply_echo(&tx, &scenario(&config, vec![a, b])).unwrap();
        let ea = apply_echo(&tx, &scenario(&config, vec![a])).unwrap();
        let eb = apply_echo(&tx, &scenario(&config, vec![b])).unwrap();
        for ((x, y), z) in both.data().iter().zip(ea.data()).zip(eb.data()) {
            prop_assert!((x - (y + z)).norm() <= 1e-12 * x.norm().max(y.norm() + z.norm()));
        }
    }

    #[test]
    fn static_target_has_constant_columns(r in 1.0..300.0f64) {
        let config = small_config(2, 8);
        let ones = ResourceGrid::from_array(ndarray::Array2::from_elem(
            config.grid_shape(),
            Complex64::new(1.0, 0.0),
        ));
        let echo =
            apply_echo(&ones, &scenario(&config, vec![Target::new(r, 0.0, 4.0).unwrap()])).unwrap();
        for row in echo.data().rows() {
            for z in row.iter() {
                prop_assert!((z - row[0]).norm() <= 1e-15 * row[0].norm());
            }
        }
    }

    #[test]
    fn parseval(targets in prop::collection::vec(target(), 1..4), zp in 1usize..4, seed in any::<u64>()) {
        let config = small_config(2, 8);
        let tx = build_prs_grid(&config, seed);
        let rx = apply_echo(&tx, &scenario(&config, targets)).unwrap();
        let d = dechirp(&rx, &tx).unwrap();
        let map = range_doppler_map(&d, &config, zp).unwrap();
        let (n, m) = d.shape();
        let expected = (n * zp * m * zp) as f64 * d.energy();
        prop_assert!((map.total_power() - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn off_grid_target_within_half_bin(fr in 0.02..0.9f64, fv in -0.4..0.4f64, seed in any::<u64>()) {
        let config = small_config(2, 16);
        let r = fr * max_unambiguous_range(&config);
        let v = fv * max_unambiguous_velocity(&config);
        let tx = build_prs_grid(&config, seed);
        let rx = apply_echo(&tx, &scenario(&config, vec![Target::new(r, v, 4.0).unwrap()])).unwrap();
        let map = range_doppler_map(&dechirp(&rx, &tx).unwrap(), &config, 4).unwrap();
        let d = detect_peaks(&map, 0.5, 3).unwrap();
        prop_assert!(!d.is_empty());
        prop_assert!((d[0].range_m - r).abs() <= 0.5 * map.native_range_bin_m());
        prop_assert!((d[0].velocity_mps - v).abs() <= 0.5 * map.native_velocity_bin_mps());
    }

    #[test]
    fn detection_count_monotone_in_threshold(
        targets in prop::collection::vec(target(), 1..5),
        t1 in 0.01..1.0f64,
        t2 in 0.01..1.0f64,
    ) {
        let config = small_config(2, 8);
        let tx = build_prs_grid(&config, 3);
        let rx = apply_echo(&tx, &scenario(&config, targets)).unwrap();
        let map = range_doppler_map(&dechirp(&rx, &tx).unwrap(), &config, 2).unwrap();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(
            detect_peaks(&map, lo, 3).unwrap().len() >= detect_peaks(&map, hi, 3).unwrap().len()
        );
    }

    #[test]
    fn range_axis_is_affine(zp in 1usize..5, i in 0usize..100) {
        let config = small_config(2, 8);
        let map = range_doppler_map(
            &ResourceGrid::zeros(config.grid_shape()),
            &config,
            zp,
        ).unwrap();
        let slope = max_unambiguous_range(&config) / (config.prs_subcarriers() * zp) as f64;
        let i = i % map.shape().0;
        prop_assert!((map.bin_to_range(i).unwrap() - slope * i as f64).abs() <= 1e-9);
        prop_assert!(map.bin_to_range(map.shape().0).is_err());
    }

    #[test]
    fn bracket_invariant_and_call_budget(
        steps in prop::collection::vec(0usize..=62, 0..4),
        max_iters in 1usize..12,
        paper in any::<bool>(),
    ) {
        let mode = if paper { SearchMode::Paper } else { SearchMode::Standard };
        let mut calls = 0;
        let evaluator = |n_prb: usize| {
            calls += 1;
            let n = (n_prb - 24) / 4;
            Ok::<_, Infallible>(steps.iter().filter(|&&s| n >= s).count())
        };
        let (_, state) = run_adaptation(evaluator, mode, max_iters).unwrap();
        prop_assert!(calls <= max_iters + 2);
        let mut prev = (0, MAX_INDEX);
        for row in &state.history {
            prop_assert!(row.n_low <= row.n_high);
            prop_assert!(row.n_low >= prev.0 && row.n_high <= prev.1);
            prev = (row.n_low, row.n_high);
        }
        prop_assert!(state.n_low >= prev.0 && state.n_high <= prev.1);
    }

    #[test]
    fn standard_mode_matches_brute_force(steps in prop::collection::vec(0usize..=62, 0..5)) {
        let count = |n_prb: usize| {
            let n = (n_prb - 24) / 4;
            steps.iter().filter(|&&s| n >= s).count()
        };
        let lattice: Vec<usize> = (0..=62).map(|n| 4 * n + 24).collect();
        let best = lattice.iter().map(|&p| count(p)).max().unwrap();
        let expected = *lattice.iter().find(|&&p| count(p) == best).unwrap();
        let (chosen, a) =
            run_adaptation(|p| Ok::<_, Infallible>(count(p)), SearchMode::Standard, 64).unwrap();
        prop_assert_eq!(chosen, expected);
        let (_, b) =
            run_adaptation(|p| Ok::<_, Infallible>(count(p)), SearchMode::Standard, 64).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rmse_permutation_invariant(
        pts in prop::collection::vec((1.0..100.0f64, -20.0..20.0f64, -0.5..0.5f64, -0.5..0.5f64), 1..6),
        rot in 0usize..6,
    ) {
        let truths: Vec<Target> =
            pts.iter().map(|p| Target::new(p.0, p.1, 4.0).unwrap()).collect();
        let dets: Vec<Detection> = pts
            .iter()
            .map(|p| Detection {
                range_m: p.0 + p.2,
                velocity_mps: p.1 + p.3,
                power: 1.0,
                range_bin: 0,
                doppler_bin: 0,
            })
            .collect();
        let scales = BinScales { range_bin_m: 1.0, velocity_bin_mps: 1.0 };
        let a = match_detections(&dets, &truths, scales);
        let mut rotated = dets.clone();
        rotated.rotate_left(rot % dets.len());
        let b = match_detections(&rotated, &truths, scales);
        prop_assert!((rmse_range(&a).unwrap() - rmse_range(&b).unwrap()).abs() <= 1e-12);
        prop_assert!((rmse_velocity(&a).unwrap() - rmse_velocity(&b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn normalized_error_scale_invariant(
        errs in prop::collection::vec((0.01..10.0f64, 0.01..10.0f64), 1..8),
        k in 0.01..100.0f64,
    ) {
        let records = |scale: f64| -> Vec<EvaluationRecord> {
            errs.iter()
                .map(|&(r, v)| EvaluationRecord {
                    n_prb: 68,
                    spacing_hz: 30e3,
                    bandwidth_hz: 25e6,
                    carrier_hz: 2.5e9,
                    e_range_m: Some(r * scale),
                    e_velocity_mps: Some(v),
                    matched: 1,
                    misses: 0,
                    false_alarms: 0,
                })
                .collect()
        };
        let a = normalized_error(&records(1.0)).unwrap();
        let b = normalized_error(&records(k)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
        let max = a.iter().copied().fold(0.0, f64::max);
        prop_assert!(max <= 1.0 + 1e-12);
    }
}

#[test]
fn numerology_trends() {
    for mu in 0..4 {
        let a = numerology_from_mu(mu).unwrap();
        let b = numerology_from_mu(mu + 1).unwrap();
        assert_eq!(b.spacing_hz, 2.0 * a.spacing_hz);
        assert!(b.total_s < a.total_s);
    }
}

#[test]
fn communication_rate_strictly_decreasing() {
    let rates: Vec<f64> = (24..=272).step_by(4).map(|n| communication_rate(n).unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn near_zero_range_static_target_is_identity() {
    let config = small_config(2, 8);
    let tx = build_prs_grid(&config, 2);
    let t = Target::new(1e-9, 0.0, 4.0).unwrap();
    let xi = prs_isac::channel::attenuation(t.range_m, t.rcs_m2, &config).unwrap();
    let echo = apply_echo(&tx, &scenario(&config, vec![t])).unwrap();
    for (e, x) in echo.data().iter().zip(tx.data()) {
        assert!((e - x * xi).norm() <= 1e-9 * xi);
    }
}

#[test]
fn spectrum_matches_brute_force_dft() {
    // 48 x 4 grid, two targets, zero padding 2
    let config = small_config(6, 24);
    assert!(config.prs_subcarriers() <= 64);
    let tx = build_prs_grid(&config, 77);
    let a = Target::new(40.0, 30.0, 4.0).unwrap();
    let b = Target::new(130.0, -70.0, 2.0).unwrap();
    let d = |targets| dechirp(&apply_echo(&tx, &scenario(&config, targets)).unwrap(), &tx).unwrap();
    let (da, db, dab) = (d(vec![a]), d(vec![b]), d(vec![a, b]));

    let sa = range_doppler_spectrum(&da, &config, 2, Window::Rectangular).unwrap();
    let sb = range_doppler_spectrum(&db, &config, 2, Window::Rectangular).unwrap();
    let oracle = brute_force_spectrum(&da, 2);
    let scale = sa.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for ((i, j), z) in sa.indexed_iter() {
        assert!((z - oracle[i][j]).norm() <= 1e-9 * scale, "({i},{j})");
    }

    let map = range_doppler_map(&dab, &config, 2).unwrap();
    let peak = map.power().iter().copied().fold(0.0, f64::max);
    for ((i, j), p) in map.power().indexed_iter() {
        let combined = (sa[(i, j)] + sb[(i, j)]).norm_sqr();
        assert!((p - combined).abs() <= 1e-9 * peak);
    }
}
