//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use phaseshaping::analysis::{
    beat_overlay, beat_report, AnalysisSpec, HalfWindows, PairRegion, Summary,
};
use phaseshaping::cli::{run_sweep, simulate_scenario};
use phaseshaping::config::{PhaseSpec, Scenario, BUILTIN_SCENARIOS};
use phaseshaping::detection::{
    g2_histogram, run_experiment, sample_mode_pair, ExperimentSetup, PairSampler, Port, Routing,
};
use phaseshaping::exec::with_threads;
use phaseshaping::grid::gaussian_envelope;
use phaseshaping::interference::{joint_densities, noninterfering_density, region_rate_ratio};
use phaseshaping::source::{PhotonMode, SourceConfig};
use phaseshaping::{fwhm_to_sigma, io, Execution, PhaseProfile, TimeGrid};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn quad_grid() -> TimeGrid {
    TimeGrid::centered(0.0, 675.0, 1.0).unwrap()
}

fn ideal() -> SourceConfig {
    SourceConfig::ideal()
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&format!("builtin:{name}")).unwrap()
}

fn pi_step(source: SourceConfig, n_trials: u64, seed: u64) -> Scenario {
    let mut s = scenario("fig2_pi_step");
    s.source = source;
    s.run.n_trials = n_trials;
    s.run.seed = seed;
    s
}

fn run(s: &Scenario) -> Summary {
    simulate_scenario(s, Execution::Parallel).unwrap().1
}

fn criterion_1(r: &mut Report) {
    let grid = quad_grid();
    let b = gaussian_envelope(&grid, 0.0, 150.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..=8 {
        let dphi = k as f64 * PI / 4.0;
        let profile = PhaseProfile::step(0.0, dphi, 0.0).unwrap();
        let a = b.apply_phase(&profile);
        let jd = joint_densities(&a, &b, 1.0).unwrap();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                if let Some(q) = jd.conditional_cross(i, j) {
                    let expect = (0.5 * (profile.eval(grid.time(i)) - profile.eval(grid.time(j))))
                        .sin()
                        .powi(2);
                    worst = worst.max((q - expect).abs());
                }
            }
        }
    }
    r.check(
        "C1 conditional cross fraction = sin²(Δφ/2)",
        worst <= 1e-9,
        format!("max deviation {worst:.2e} over Δφ = 0, π/4, …, 2π (tol 1e-9)"),
    );
}

fn criterion_2(r: &mut Report) {
    let b = gaussian_envelope(&quad_grid(), 0.0, 150.0).unwrap();
    let jd = joint_densities(&b, &b, 1.0).unwrap();
    let mass = jd.cross_mass();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sampler = PairSampler::new(&jd).unwrap();
    let grid_split = (0..100_000)
        .filter(|_| {
            let (x, y) = sampler.sample(&mut rng);
            x.port != y.port
        })
        .count();
    let mode = PhotonMode {
        center: 0.0,
        sigma: fwhm_to_sigma(150.0),
        detuning_mhz: 0.0,
    };
    let flat = PhaseProfile::zero();
    let mode_split = (0..100_000)
        .filter(|_| {
            let (x, y) = sample_mode_pair(&mode, &flat, &mode, 1.0, &mut rng);
            x.port != y.port
        })
        .count();
    r.check(
        "C2 HOM limit",
        mass < 1e-10 && grid_split == 0 && mode_split == 0,
        format!("cross mass {mass:.2e} (< 1e-10); split pairs {grid_split} + {mode_split} of 2×1e5 (= 0)"),
    );
}

fn criterion_3(r: &mut Report) {
    let windows = AnalysisSpec::default().windows();
    let b = gaussian_envelope(&quad_grid(), 0.0, 150.0).unwrap();
    let a = b.apply_phase(&PhaseProfile::step(0.0, PI, 0.0).unwrap());
    let jd = joint_densities(&a, &b, 1.0).unwrap();
    let reference = noninterfering_density(&a, &b).unwrap();
    let q_same = region_rate_ratio(&jd, &reference, |x, y| {
        windows.contains(PairRegion::SameHalf, x, y)
    })
    .unwrap();
    let q_cross = region_rate_ratio(&jd, &reference, |x, y| {
        windows.contains(PairRegion::CrossHalf, x, y)
    })
    .unwrap();
    r.check(
        "C3a ideal π step, quadrature",
        q_same.abs() < 1e-9 && (q_cross - 2.0).abs() < 1e-9,
        format!("same {q_same:.3e} (= 0), cross {q_cross:.12} (= 2)"),
    );
    let s = run(&pi_step(ideal(), 1_000_000, 31));
    let same = s.same_half.unwrap();
    let cross = s.cross_half.unwrap();
    r.check(
        "C3b ideal π step, Monte Carlo 1e6 trials",
        same.ratio.abs() <= 4.0 * same.error && (cross.ratio - 2.0).abs() <= 4.0 * cross.error,
        format!(
            "same {:.4} ± {:.4}, cross {:.4} ± {:.4} (within 4σ of 0 and 2)",
            same.ratio, same.error, cross.ratio, cross.error
        ),
    );
}

fn criterion_4(r: &mut Report) {
    let s = run(&pi_step(SourceConfig::default(), 80_000_000, 41));
    let (same, cross, all) = (
        s.same_half.unwrap(),
        s.cross_half.unwrap(),
        s.integrated.unwrap(),
    );
    r.check(
        "C4 calibrated π-step ratios",
        (same.ratio - 0.16).abs() <= 0.03 && (cross.ratio - 1.83).abs() <= 0.09 && (all.ratio - 0.98).abs() <= 0.04,
        format!(
            "same {:.4} ± {:.4} (0.16 ± 0.03), cross {:.4} ± {:.4} (1.83 ± 0.09), integrated {:.4} ± {:.4} (0.98 ± 0.04)",
            same.ratio, same.error, cross.ratio, cross.error, all.ratio, all.error
        ),
    );
}

fn criterion_5(r: &mut Report) {
    let mut s = scenario("fig3_sweep");
    s.run.n_trials = 10_000_000;
    s.run.seed = 51;
    let phases = s.sweep.as_ref().unwrap().phases().unwrap();
    let (_, fit) = run_sweep(&s, &phases, Execution::Parallel).unwrap();
    let vis = fit.cross_half.as_ref().unwrap();
    r.check(
        "C5a calibrated sweep visibility",
        (vis.v - 0.67).abs() <= 0.05 && vis.converged,
        format!(
            "v = {:.4} ± {:.4} (0.67 ± 0.05), min/max estimate {:.4}",
            vis.v, vis.v_error, vis.minmax_visibility
        ),
    );
    let (slope, err) = (
        fit.same_half_slope_per_rad.unwrap(),
        fit.same_half_slope_error.unwrap(),
    );
    r.check(
        "C5b same-half ratio flat vs Δφ",
        slope.abs() <= 2.0 * err,
        format!(
            "slope {slope:.5} ± {err:.5} per rad (|slope| ≤ 2σ), mean {:.4}",
            fit.same_half_mean.unwrap()
        ),
    );
    let mut ideal_sweep = s.clone();
    ideal_sweep.source = ideal();
    ideal_sweep.run.n_trials = 2_000_000;
    let (_, fit) = run_sweep(&ideal_sweep, &phases, Execution::Parallel).unwrap();
    let vis = fit.cross_half.as_ref().unwrap();
    r.check(
        "C5c ideal sweep visibility",
        (vis.v - 1.0).abs() <= 0.01,
        format!("v = {:.4} ± {:.4} (1.00 ± 0.01)", vis.v, vis.v_error),
    );
}

fn beat_run(s: &Scenario, dnu: f64) -> phaseshaping::analysis::BeatOverlay {
    let log = run_experiment(
        &s.setup().unwrap(),
        s.run.n_trials,
        s.run.seed,
        Execution::Parallel,
    )
    .unwrap();
    beat_overlay(
        &log,
        &s.analysis,
        dnu,
        s.source.fwhm_ns,
        Execution::Parallel,
    )
    .unwrap()
}

fn criterion_6(r: &mut Report) {
    let mut s = scenario("fig4a_ramp_11MHz");
    s.run.n_trials = 30_000_000;
    s.run.seed = 61;
    let rep = beat_report(&beat_run(&s, 11.0));
    let at = |expected: f64| {
        rep.minima
            .iter()
            .find(|m| (m.expected_ns - expected).abs() < 1.0)
            .and_then(|m| m.found_ns)
    };
    let spacing = 1e3 / 11.0;
    let found = [at(-spacing), at(0.0), at(spacing)];
    let ok_min = match found {
        [Some(m), Some(z), Some(p)] => {
            z.abs() <= 3.0 && (m + 91.0).abs() <= 3.0 && (p - 91.0).abs() <= 3.0
        }
        _ => false,
    };
    r.check(
        "C6a 11 MHz beat minima",
        ok_min,
        format!("minima at {found:.2?} ns (0 ± 3, ±91 ± 3)"),
    );
    r.check(
        "C6b beat envelope FWHM",
        (rep.envelope_fwhm_ns - 212.0).abs() <= 10.0,
        format!("{:.2} ns (212 ± 10)", rep.envelope_fwhm_ns),
    );

    let mut s = scenario("fig4b_sawtooth_25MHz");
    s.run.n_trials = 30_000_000;
    s.run.seed = 62;
    let rep = beat_report(&beat_run(&s, 25.0));
    let period = rep.period_ns.unwrap_or(f64::NAN);
    r.check(
        "C6c 25 MHz beat period",
        (period - 40.0).abs() <= 2.0,
        format!("{period:.2} ns (40 ± 2)"),
    );

    // zero-fall sawtooth against the continuous ramp with the same slope
    let mut saw = s.clone();
    saw.phase = PhaseSpec::Sawtooth {
        t_start_ns: -160.0,
        tooth_period_ns: 40.0,
        n_teeth: 8,
        tooth_phase: Some(2.0 * PI),
        tooth_phase_pi_units: None,
        fall_time_ns: 0.0,
    };
    saw.run.n_trials = 20_000_000;
    let mut ramp = saw.clone();
    ramp.phase = PhaseSpec::Detuning {
        delta_nu_mhz: 25.0,
        t_ref_ns: -160.0,
        t_begin_ns: -160.0,
        t_end_ns: 160.0,
    };
    ramp.run.seed = 63;
    let (x, y) = (beat_run(&saw, 25.0), beat_run(&ramp, 25.0));
    let (mut chi2, mut dof) = (0.0, 0usize);
    for (a, b) in x.coincidences.iter().zip(&y.coincidences) {
        let n = (a + b) as f64;
        if n > 0.0 {
            chi2 += (*a as f64 - *b as f64).powi(2) / n;
            dof += 1;
        }
    }
    let bound = dof as f64 + 4.0 * (2.0 * dof as f64).sqrt();
    r.check(
        "C6d sawtooth equals ramp",
        chi2 <= bound,
        format!("χ² = {chi2:.1} over {dof} bins (≤ {bound:.1}, independent seeds)"),
    );
}

fn criterion_7(r: &mut Report) {
    let source = SourceConfig {
        p_click: 0.5,
        lambda: 0.0,
        ..ideal()
    };
    let setup = ExperimentSetup {
        source,
        eom_phase: PhaseProfile::zero(),
        routing: Routing::Hom,
    };
    let log = run_experiment(&setup, 1_000_000, 71, Execution::Parallel).unwrap();
    let h = g2_histogram(&log.events, log.period_ns, 2.0, 6, Execution::Parallel).unwrap();
    let adjacent = (h.peaks.get(1) + h.peaks.get(-1)) as f64 / 2.0 / h.peaks.outer_mean().unwrap();
    r.check(
        "C7a routing-only adjacent peaks",
        (adjacent - 0.75).abs() <= 0.02,
        format!("peak(±1)/outer = {adjacent:.4} (0.75 ± 0.02, 1e6 trials)"),
    );
    let mut s = scenario("g2_reference");
    s.run.n_trials = 10_000_000;
    s.run.seed = 72;
    let sup = run(&s).g2.central_suppression_pct.unwrap_or(f64::NAN);
    r.check(
        "C7b calibrated g² suppression",
        (sup - 95.0).abs() <= 1.5,
        format!("{sup:.2} % (95 ± 1.5)"),
    );
}

fn criterion_8(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = TimeGrid::centered(0.0, 675.0, 0.5).unwrap();
    let n_pairs = 200_000;
    let mut all_ok = true;
    let mut worst: f64 = 0.0;
    for case in 0..5 {
        let dphi = rng.random_range(0.0..2.0 * PI);
        let lambda = rng.random_range(0.3..1.0);
        let t_step = rng.random_range(-30.0..30.0);
        let dnu = rng.random_range(0.0..4.0);
        let windows = HalfWindows {
            step_time: t_step,
            rise_exclusion: 5.0,
            tail_cutoff: 80.0,
        };
        let profile = PhaseProfile::step(t_step, dphi, 0.0).unwrap();
        let sigma = fwhm_to_sigma(150.0);
        let ma = PhotonMode {
            center: 0.0,
            sigma,
            detuning_mhz: dnu,
        };
        let mb = PhotonMode {
            detuning_mhz: 0.0,
            ..ma
        };
        let a = ma.packet(&grid).unwrap().apply_phase(&profile);
        let b = mb.packet(&grid).unwrap();
        let jd = joint_densities(&a, &b, lambda).unwrap();
        let reference = noninterfering_density(&a, &b).unwrap();
        let mut hits = [0u64; 3];
        let regions = [
            PairRegion::SameHalf,
            PairRegion::CrossHalf,
            PairRegion::Included,
        ];
        for _ in 0..n_pairs {
            let (x, y) = sample_mode_pair(&ma, &profile, &mb, lambda, &mut rng);
            if x.port == y.port {
                continue;
            }
            let (tc, td) = if x.port == Port::C {
                (x.time, y.time)
            } else {
                (y.time, x.time)
            };
            for (h, reg) in hits.iter_mut().zip(regions) {
                if windows.contains(reg, tc, td) {
                    *h += 1;
                }
            }
        }
        for (h, reg) in hits.iter().zip(regions) {
            let pred = |x: f64, y: f64| windows.contains(reg, x, y);
            let quad = region_rate_ratio(&jd, &reference, pred).unwrap();
            let (ref_mass, _) = reference.region_cross_mass(pred);
            let p = *h as f64 / n_pairs as f64;
            let sd = (p * (1.0 - p) / n_pairs as f64)
                .sqrt()
                .max(1.0 / n_pairs as f64)
                / ref_mass;
            let z = (p / ref_mass - quad) / sd;
            worst = worst.max(z.abs());
            if z.abs() > 4.0 {
                all_ok = false;
                println!(
                    "    case {case} {reg:?}: MC {:.4} quad {quad:.4} z {z:.2}",
                    p / ref_mass
                );
            }
        }
    }
    r.check(
        "C8 Monte Carlo matches quadrature",
        all_ok,
        format!("5 random scenarios × 3 regions, worst |z| = {worst:.2} (≤ 4)"),
    );
}

fn criterion_9(r: &mut Report) {
    let mut worst: f64 = 0.0;
    for name in BUILTIN_SCENARIOS {
        let s = scenario(name);
        let grid = s.grid.grid().unwrap();
        let b = gaussian_envelope(&grid, 0.0, s.source.fwhm_ns).unwrap();
        let a = b.apply_phase(&s.phase.profile().unwrap());
        let jd = joint_densities(&a, &b, s.source.lambda).unwrap();
        worst = worst.max((jd.total_mass() - 1.0).abs());
    }
    r.check(
        "C9a density mass",
        worst <= 1e-6,
        format!("max |mass − 1| = {worst:.2e} over bundled scenarios (≤ 1e-6)"),
    );

    let s = pi_step(SourceConfig::default(), 3_000_000, 91);
    let bytes = |exec: Execution| {
        let (log, summary) = simulate_scenario(&s, exec).unwrap();
        let mut buf = Vec::new();
        io::write_events(&mut buf, &log.events).unwrap();
        buf.extend(serde_json::to_vec(&summary).unwrap());
        buf
    };
    let one = with_threads(1, || bytes(Execution::Parallel));
    let four = with_threads(4, || bytes(Execution::Parallel));
    let seq = bytes(Execution::Sequential);
    r.check(
        "C9b byte-identical across thread counts",
        one == four && one == seq,
        format!(
            "{} bytes; 1 thread, 4 threads and sequential agree: {}",
            one.len(),
            one == four && one == seq
        ),
    );
}

fn main() {
    let mut r = Report { failures: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    if r.failures > 0 {
        println!("{} acceptance check(s) failed", r.failures);
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
