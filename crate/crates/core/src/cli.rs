//! Command-line front end. Parameter precedence: scenario file, then
//! `PHASESHAPING_*` environment variables, then flags.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::analysis::{
    analyze_events, beat_overlay, beat_report, fit_visibility, linear_slope, PhasePoint,
    RateSummary, Summary, VisibilityFit,
};
use crate::calibration::{calibrate, Targets};
use crate::config::Scenario;
use crate::detection::{run_experiment, EventLog};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::gaussian_envelope;
use crate::interference::joint_densities_with;
use crate::io;
use crate::source::{indexed_rng, RngStream, SourceConfig};

#[derive(Debug, Parser)]
#[command(
    name = "phaseshaping",
    version,
    about = "Two-photon interference with phase-shaped wave packets"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo run: event log, resolved config and summary.
    Simulate(RunArgs),
    /// One run per step size, the coincidence table and a visibility fit.
    SweepPhase {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated step sizes in units of π (overrides the scenario).
        #[arg(long, value_delimiter = ',')]
        phases_pi: Option<Vec<f64>>,
    },
    /// Quantum-beat histogram and predicted curve.
    Beat {
        #[command(flatten)]
        run: RunArgs,
        /// Frequency shift (MHz); must agree with a ramp or sawtooth drive.
        #[arg(long)]
        delta_nu: Option<f64>,
    },
    /// Analysis of an existing event log.
    Analyze {
        /// Event CSV with header `trial,port,timestamp_ns,origin`.
        #[arg(long)]
        events: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Two-photon detection densities on the scenario grid.
    Density(RunArgs),
    /// Fits the imperfection model to the operating-point targets.
    Calibrate {
        #[arg(long, default_value = "out/calibration")]
        out: PathBuf,
        /// Detected single-photon probability per trial (held fixed).
        #[arg(long)]
        p_click: Option<f64>,
        /// Per-detector dark-count rate in counts/s (held fixed).
        #[arg(long)]
        dark_rate: Option<f64>,
        /// Relative envelope-width jitter (held fixed).
        #[arg(long)]
        amp_jitter: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file, or `builtin:NAME` for a bundled scenario.
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Table format. For `density`, `json` selects raw f64 matrices with
    /// JSON sidecars.
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

impl RunArgs {
    /// Loads the scenario and applies environment then flag overrides.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::load(&self.config)?;
        s.apply_env(|k| std::env::var(k).ok())?;
        if let Some(seed) = self.seed {
            s.run.seed = seed;
        }
        if let Some(n) = self.trials {
            s.run.n_trials = n;
        }
        if let Some(out) = &self.out {
            s.run.out_dir = out.clone();
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.threads {
        #[cfg(feature = "parallel")]
        Some(n) if n > 0 => crate::exec::with_threads(n, || dispatch(cli.command, exec)),
        _ => dispatch(cli.command, exec),
    }
}

fn dispatch(command: Command, exec: Execution) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(&args, exec),
        Command::SweepPhase { run, phases_pi } => sweep_phase(&run, phases_pi, exec),
        Command::Beat { run, delta_nu } => beat(&run, delta_nu, exec),
        Command::Analyze { events, run } => analyze(&events, &run, exec),
        Command::Density(args) => density(&args, exec),
        Command::Calibrate {
            out,
            p_click,
            dark_rate,
            amp_jitter,
        } => {
            let d = SourceConfig::default();
            let base = SourceConfig {
                p_click: p_click.unwrap_or(d.p_click),
                dark_rate_cps: dark_rate.unwrap_or(d.dark_rate_cps),
                amp_jitter: amp_jitter.unwrap_or(d.amp_jitter),
                ..d
            };
            base.validate()?;
            calibrate_cmd(&base, &out)
        }
    }
}

fn write_events_table(dir: &Path, log: &EventLog, format: Format) -> Result<()> {
    match format {
        Format::Csv => io::write_atomic(&dir.join("events.csv"), |w| {
            io::write_events(w, &log.events)
        }),
        Format::Json => io::write_json(&dir.join("events.json"), &log.events),
    }
}

fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T], format: Format) -> Result<()> {
    match format {
        Format::Csv => io::write_atomic(&dir.join(format!("{stem}.csv")), |w| {
            io::write_csv_rows(w, rows)
        }),
        Format::Json => io::write_json(&dir.join(format!("{stem}.json")), &rows),
    }
}

/// Simulates the scenario and returns the log and its summary.
pub fn simulate_scenario(s: &Scenario, exec: Execution) -> Result<(EventLog, Summary)> {
    let log = run_experiment(&s.setup()?, s.run.n_trials, s.run.seed, exec)?;
    let summary = analyze_events(&log, &s.analysis, exec)?;
    Ok((log, summary))
}

fn print_rates(summary: &Summary) {
    let show = |name: &str, r: &Option<RateSummary>| match r {
        Some(r) => println!(
            "{name:>12}: {:.4} ± {:.4}  (n0 = {})",
            r.ratio, r.error, r.n0
        ),
        None => println!("{name:>12}: undefined (empty reference)"),
    };
    show("same-half", &summary.same_half);
    show("cross-half", &summary.cross_half);
    show("integrated", &summary.integrated);
    match summary.g2.central_suppression_pct {
        Some(p) => println!("{:>12}: {p:.2} %", "suppression"),
        None => println!("{:>12}: undefined", "suppression"),
    }
}

fn simulate(args: &RunArgs, exec: Execution) -> Result<()> {
    let s = args.scenario()?;
    let (log, summary) = simulate_scenario(&s, exec)?;
    let dir = &s.run.out_dir;
    write_events_table(dir, &log, args.format)?;
    io::write_json(&dir.join("config.resolved.json"), &s)?;
    io::write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "{} events from {} trials -> {}",
        log.events.len(),
        log.n_trials,
        dir.display()
    );
    print_rates(&summary);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub delta_phi: f64,
    pub delta_phi_pi: f64,
    pub seed: u64,
    pub same_ratio: f64,
    pub same_error: f64,
    pub cross_ratio: f64,
    pub cross_error: f64,
    pub integrated_ratio: f64,
    pub integrated_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFit {
    pub cross_half: Option<VisibilityFit>,
    pub fit_error: Option<String>,
    pub same_half_slope_per_rad: Option<f64>,
    pub same_half_slope_error: Option<f64>,
    pub same_half_mean: Option<f64>,
}

/// Seed of sweep point `k`: an independent draw keyed by the run seed.
pub fn sweep_point_seed(seed: u64, k: usize) -> u64 {
    indexed_rng(seed, RngStream::Sampling, k as u64).next_u64()
}

/// Runs every sweep point and fits the cross-half curve.
pub fn run_sweep(
    s: &Scenario,
    phases: &[f64],
    exec: Execution,
) -> Result<(Vec<SweepRow>, SweepFit)> {
    let mut rows = Vec::with_capacity(phases.len());
    for (k, &phi) in phases.iter().enumerate() {
        let mut point = s.with_step(phi);
        point.run.seed = sweep_point_seed(s.run.seed, k);
        let (_, summary) = simulate_scenario(&point, exec)?;
        let get = |r: &Option<RateSummary>| {
            r.as_ref()
                .map_or((f64::NAN, f64::NAN), |r| (r.ratio, r.error))
        };
        let (same_ratio, same_error) = get(&summary.same_half);
        let (cross_ratio, cross_error) = get(&summary.cross_half);
        let (integrated_ratio, integrated_error) = get(&summary.integrated);
        rows.push(SweepRow {
            delta_phi: phi,
            delta_phi_pi: phi / std::f64::consts::PI,
            seed: point.run.seed,
            same_ratio,
            same_error,
            cross_ratio,
            cross_error,
            integrated_ratio,
            integrated_error,
        });
    }
    let points: Vec<PhasePoint> = rows
        .iter()
        .filter(|r| r.cross_ratio.is_finite())
        .map(|r| PhasePoint {
            delta_phi: r.delta_phi,
            ratio: r.cross_ratio,
            error: r.cross_error,
        })
        .collect();
    let (cross_half, fit_error) = match fit_visibility(&points) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let x: Vec<f64> = rows.iter().map(|r| r.delta_phi).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.same_ratio).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.same_error).collect();
    let slope = linear_slope(&x, &y, &e);
    let finite: Vec<f64> = y.iter().copied().filter(|v| v.is_finite()).collect();
    Ok((
        rows,
        SweepFit {
            cross_half,
            fit_error,
            same_half_slope_per_rad: slope.map(|s| s.0),
            same_half_slope_error: slope.map(|s| s.1),
            same_half_mean: (!finite.is_empty())
                .then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        },
    ))
}

fn sweep_phase(args: &RunArgs, phases_pi: Option<Vec<f64>>, exec: Execution) -> Result<()> {
    let s = args.scenario()?;
    let phases = match phases_pi {
        Some(p) => p.iter().map(|x| x * std::f64::consts::PI).collect(),
        None => match &s.sweep {
            Some(sw) => sw.phases()?,
            None => {
                return Err(Error::config(
                    "sweep",
                    "scenario has no sweep section and --phases-pi is absent",
                ))
            }
        },
    };
    let (rows, fit) = run_sweep(&s, &phases, exec)?;
    let dir = &s.run.out_dir;
    write_table(dir, "sweep", &rows, args.format)?;
    io::write_json(&dir.join("fit.json"), &fit)?;
    io::write_json(&dir.join("config.resolved.json"), &s)?;
    for r in &rows {
        println!(
            "Δφ = {:5.2}π  same {:.3} ± {:.3}  cross {:.3} ± {:.3}",
            r.delta_phi_pi, r.same_ratio, r.same_error, r.cross_ratio, r.cross_error
        );
    }
    match (&fit.cross_half, &fit.fit_error) {
        (Some(f), _) => println!(
            "visibility {:.3} ± {:.3} (min/max {:.3})",
            f.v, f.v_error, f.minmax_visibility
        ),
        (None, Some(e)) => println!("no visibility fit: {e}"),
        _ => {}
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct BeatRow {
    tau_ns: f64,
    coincidences: u64,
    reference: f64,
    reference_fit: f64,
    predicted: f64,
}

fn beat(args: &RunArgs, delta_nu: Option<f64>, exec: Execution) -> Result<()> {
    let s = args.scenario()?;
    let stated = delta_nu.or(s.beat.and_then(|b| b.delta_nu_mhz));
    let dnu = s.beat_detuning_with(stated)?;
    let log = run_experiment(&s.setup()?, s.run.n_trials, s.run.seed, exec)?;
    let overlay = beat_overlay(&log, &s.analysis, dnu, s.source.fwhm_ns, exec)?;
    let report = beat_report(&overlay);
    let rows: Vec<BeatRow> = (0..overlay.tau.len())
        .map(|k| BeatRow {
            tau_ns: overlay.tau[k],
            coincidences: overlay.coincidences[k],
            reference: overlay.reference[k],
            reference_fit: overlay.reference_fit[k],
            predicted: overlay.predicted[k],
        })
        .collect();
    let dir = &s.run.out_dir;
    write_table(dir, "beat", &rows, args.format)?;
    io::write_json(&dir.join("beat_report.json"), &report)?;
    io::write_json(&dir.join("config.resolved.json"), &s)?;
    println!("Δν = {dnu:.3} MHz");
    for m in &report.minima {
        match m.found_ns {
            Some(t) => println!("minimum near {:7.2} ns at {t:7.2} ns", m.expected_ns),
            None => println!("minimum near {:7.2} ns not resolved", m.expected_ns),
        }
    }
    if let Some(p) = report.period_ns {
        println!("oscillation period {p:.2} ns");
    }
    println!("envelope FWHM {:.1} ns", report.envelope_fwhm_ns);
    Ok(())
}

fn analyze(events: &Path, args: &RunArgs, exec: Execution) -> Result<()> {
    let s = args.scenario()?;
    let file = std::fs::File::open(events)?;
    let events = io::read_events(std::io::BufReader::new(file))?;
    let n_trials = events.iter().map(|e| e.trial + 1).max().unwrap_or(0);
    let log = EventLog {
        period_ns: s.source.rep_period_ns(),
        n_trials,
        events,
    };
    let summary = analyze_events(&log, &s.analysis, exec)?;
    io::write_json(&s.run.out_dir.join("summary.json"), &summary)?;
    println!("{} events", summary.n_events);
    print_rates(&summary);
    Ok(())
}

#[derive(Debug, Serialize)]
struct DensitySummary {
    total_mass: f64,
    cross_mass: f64,
    same_mass: f64,
    lambda: f64,
    n_points: usize,
    dt_ns: f64,
}

fn density(args: &RunArgs, exec: Execution) -> Result<()> {
    let s = args.scenario()?;
    let grid = s.grid.grid()?;
    let b = gaussian_envelope(&grid, 0.0, s.source.fwhm_ns)?;
    let a = b.apply_phase(&s.phase.profile()?);
    let jd = joint_densities_with(&a, &b, s.source.lambda, exec)?;
    let dir = &s.run.out_dir;
    match args.format {
        Format::Csv => {
            io::write_atomic(&dir.join("density.csv"), |w| io::write_density_csv(w, &jd))?
        }
        Format::Json => {
            io::write_matrix_raw(
                dir,
                "p_cross",
                jd.p_cross(),
                &io::density_sidecar(&jd, "p_cross"),
            )?;
            io::write_matrix_raw(
                dir,
                "p_same",
                jd.p_same(),
                &io::density_sidecar(&jd, "p_same"),
            )?;
        }
    }
    let summary = DensitySummary {
        total_mass: jd.total_mass(),
        cross_mass: jd.cross_mass(),
        same_mass: jd.same_mass(),
        lambda: jd.lambda(),
        n_points: grid.len(),
        dt_ns: grid.dt(),
    };
    io::write_json(&dir.join("density_summary.json"), &summary)?;
    println!(
        "mass {:.9}  cross {:.6}  same {:.6}",
        summary.total_mass, summary.cross_mass, summary.same_mass
    );
    Ok(())
}

fn calibrate_cmd(base: &SourceConfig, out: &Path) -> Result<()> {
    let windows = crate::analysis::AnalysisSpec::default().windows();
    let report = calibrate(base, &windows, &Targets::default())?;
    io::write_json(&out.join("calibration.json"), &report)?;
    let p = &report.predictions;
    println!("P_TWO_PHOTON = {:e}", report.source.p_two_photon);
    println!("SIGMA_NU_MHZ = {}", report.source.sigma_nu_mhz);
    println!("LAMBDA = {}", report.source.lambda);
    println!(
        "predicted: suppression {:.2} %, same {:.4}, cross {:.4}, integrated {:.4}, visibility {:.4} (chi2 {:.3})",
        p.suppression_pct, p.same_half, p.cross_half, p.integrated, p.visibility, report.chi2
    );
    Ok(())
}
