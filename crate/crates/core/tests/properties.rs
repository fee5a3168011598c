//! Property tests for invariants that hold for any valid input.

use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use phaseshaping::analysis::{analyze_events, classify_half, normalized_rates, AnalysisSpec, Half};
use phaseshaping::detection::{
    run_experiment, DetectionEvent, ExperimentSetup, Origin, PeakCounts, Port, Routing,
};
use phaseshaping::grid::gaussian_envelope;
use phaseshaping::interference::{cross_fraction, joint_densities};
use phaseshaping::source::SourceConfig;
use phaseshaping::{io, Execution, PhaseProfile, TimeGrid};

const PERIOD: f64 = 1e3 / 0.74;

fn event() -> impl Strategy<Value = DetectionEvent> {
    (0u64..400, any::<bool>(), -200.0f64..200.0, 0u8..3).prop_map(|(trial, c, offset, o)| {
        DetectionEvent {
            trial,
            port: if c { Port::C } else { Port::D },
            timestamp_ns: trial as f64 * PERIOD + offset,
            origin: [Origin::Photon, Origin::Extra, Origin::Dark][o as usize],
        }
    })
}

fn sorted_events(max: usize) -> impl Strategy<Value = Vec<DetectionEvent>> {
    prop::collection::vec(event(), 0..max).prop_map(|mut v| {
        v.sort_by(|a, b| a.timestamp_ns.total_cmp(&b.timestamp_ns));
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn densities_sum_to_half_the_symmetrised_product(
        dphi in 0.0f64..2.0 * PI,
        t_step in -100.0f64..100.0,
        dnu in -5.0f64..5.0,
        lambda in 0.0f64..=1.0,
    ) {
        let grid = TimeGrid::centered(0.0, 400.0, 8.0).unwrap();
        let b = gaussian_envelope(&grid, 0.0, 150.0).unwrap();
        let a = b.apply_phase(&PhaseProfile::step(t_step, dphi, 0.0).unwrap()).apply_detuning(dnu);
        let jd = joint_densities(&a, &b, lambda).unwrap();
        let (aa, bb) = (a.amplitudes(), b.amplitudes());
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let s = aa[i].norm_sqr() * bb[j].norm_sqr() + aa[j].norm_sqr() * bb[i].norm_sqr();
                prop_assert!((jd.cross_at(i, j) + jd.same_at(i, j) - s / 2.0).abs() <= 1e-15);
            }
        }
        prop_assert!((jd.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase_is_periodic(dphi in 0.0f64..2.0 * PI, turns in 1i32..4) {
        let grid = TimeGrid::centered(0.0, 400.0, 8.0).unwrap();
        let b = gaussian_envelope(&grid, 0.0, 150.0).unwrap();
        let shifted = dphi + 2.0 * PI * turns as f64;
        let x = joint_densities(&b.apply_phase(&PhaseProfile::step(0.0, dphi, 0.0).unwrap()), &b, 1.0).unwrap();
        let y = joint_densities(&b.apply_phase(&PhaseProfile::step(0.0, shifted, 0.0).unwrap()), &b, 1.0).unwrap();
        for (p, q) in x.p_cross().iter().zip(y.p_cross()) {
            prop_assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_fraction_is_a_probability(
        m in prop::array::uniform4((0.0f64..2.0, -PI..PI)),
        lambda in 0.0f64..=1.0,
    ) {
        let [a1, a2, b1, b2] = m.map(|(r, p)| Complex64::from_polar(r, p));
        let q = cross_fraction(a1, a2, b1, b2, lambda);
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!((q - cross_fraction(b1, b2, a1, a2, lambda)).abs() < 1e-12);
    }

    #[test]
    fn cross_fraction_of_pure_phase_difference(phi1 in -PI..PI, phi2 in -PI..PI, r1 in 0.1f64..2.0, r2 in 0.1f64..2.0) {
        let a1 = Complex64::from_polar(r1, phi1);
        let a2 = Complex64::from_polar(r2, phi2);
        let b1 = Complex64::new(r1, 0.0);
        let b2 = Complex64::new(r2, 0.0);
        let q = cross_fraction(a1, a2, b1, b2, 1.0);
        prop_assert!((q - (0.5 * (phi1 - phi2)).sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn halves_partition_the_time_axis(t in -300.0f64..300.0, step in -50.0f64..50.0) {
        let c = classify_half(t, step, 5.0, 80.0);
        let d = (t - step).abs();
        let expected = if d <= 5.0 || d >= 80.0 { Half::Excluded } else if t < step { Half::I } else { Half::II };
        prop_assert_eq!(c.label, expected);
    }

    #[test]
    fn regions_partition_zero_lag_pairs(events in sorted_events(300)) {
        let log = phaseshaping::detection::EventLog { period_ns: PERIOD, n_trials: 400, events };
        let s = analyze_events(&log, &AnalysisSpec::default(), Execution::Sequential).unwrap();
        let p = s.partition;
        prop_assert_eq!(p.same_half + p.cross_half + p.excluded, p.all_zero_lag);
    }

    #[test]
    fn ratio_is_invariant_under_count_scaling(counts in prop::collection::vec(1u64..1000, 13), k in 2u64..50) {
        let mut a = PeakCounts::new(6);
        let mut b = PeakCounts::new(6);
        for (lag, &n) in (-6..=6).zip(&counts) {
            a.add(lag, n);
            b.add(lag, k * n);
        }
        let (x, y) = (normalized_rates(&a).unwrap(), normalized_rates(&b).unwrap());
        prop_assert!((x.ratio - y.ratio).abs() <= 1e-12 * x.ratio.max(1.0));
    }

    #[test]
    fn event_csv_round_trip(events in sorted_events(100)) {
        let mut buf = Vec::new();
        io::write_events(&mut buf, &events).unwrap();
        prop_assert_eq!(io::read_events(buf.as_slice()).unwrap(), events);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_is_seed_deterministic(seed in any::<u64>(), dphi in 0.0f64..2.0 * PI) {
        let setup = ExperimentSetup {
            source: SourceConfig::default(),
            eom_phase: PhaseProfile::step(0.0, dphi, 10.0).unwrap(),
            routing: Routing::Hom,
        };
        let seq = run_experiment(&setup, 20_000, seed, Execution::Sequential).unwrap();
        let par = run_experiment(&setup, 20_000, seed, Execution::Parallel).unwrap();
        prop_assert_eq!(&seq.events, &par.events);
        prop_assert!(seq.events.windows(2).all(|w| w[0].timestamp_ns <= w[1].timestamp_ns));
    }
}
