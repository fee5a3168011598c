//! Monte Carlo time tagging: turns NPBS arrival groups into detector clicks
//! and bins click pairs into correlation histograms.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::grid::WavePacket;
use crate::interference::{cross_fraction, JointDensity};
use crate::phase::PhaseProfile;
use crate::source::{
    assemble_pairs, indexed_rng, route_pbs, sample_trial, ArrivalGroup, Path, PhotonInstance,
    PhotonMode, RngStream, SourceConfig,
};

/// Correlation lags used everywhere: peaks −6..=6.
pub const MAX_LAG: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Photon,
    Extra,
    Dark,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub trial: u64,
    pub port: Port,
    pub timestamp_ns: f64,
    pub origin: Origin,
}

/// One detector click before it is attached to a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub time: f64,
    pub port: Port,
}

/// Gaussian timing jitter followed by quantisation to the TDC resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub jitter_ns: f64,
    pub resolution_ns: f64,
}

impl DetectorModel {
    pub const PERFECT: Self = Self {
        jitter_ns: 0.0,
        resolution_ns: 0.0,
    };

    pub fn from_source(cfg: &SourceConfig) -> Self {
        Self {
            jitter_ns: cfg.det_jitter_ns,
            resolution_ns: cfg.timing_resolution_ns,
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        let t = if self.jitter_ns > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            t + self.jitter_ns * z
        } else {
            t
        };
        self.quantize(t)
    }

    pub fn quantize(&self, t: f64) -> f64 {
        if self.resolution_ns > 0.0 {
            (t / self.resolution_ns).round() * self.resolution_ns
        } else {
            t
        }
    }
}

fn random_port<R: Rng + ?Sized>(rng: &mut R) -> Port {
    if rng.random_bool(0.5) {
        Port::C
    } else {
        Port::D
    }
}

/// Inverse-CDF sampler over the cells of a 1-D grid density.
#[derive(Debug, Clone)]
pub struct GridSampler1D {
    cdf: Vec<f64>,
}

impl GridSampler1D {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w.max(0.0);
                acc
            })
            .collect();
        if !(acc > 0.0) {
            return Err(Error::DegenerateDensity);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { cdf })
    }

    /// Cell index and the in-cell uniform offset in [0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        (i, rng.random())
    }
}

/// Exact 2-D inverse-CDF sampler for a [`JointDensity`]: marginal over t1,
/// then the conditional row over t2, uniform within the cell.
#[derive(Debug, Clone)]
pub struct PairSampler<'a> {
    jd: &'a JointDensity,
    rows: GridSampler1D,
    cols: Vec<Option<GridSampler1D>>,
}

impl<'a> PairSampler<'a> {
    pub fn new(jd: &'a JointDensity) -> Result<Self> {
        let n = jd.n();
        let row_weights: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| jd.cross_at(i, j) + jd.same_at(i, j))
                    .collect()
            })
            .collect();
        let marginal: Vec<f64> = row_weights.iter().map(|r| r.iter().sum()).collect();
        let rows = GridSampler1D::new(&marginal)?;
        let cols = row_weights
            .iter()
            .map(|r| GridSampler1D::new(r).ok())
            .collect();
        Ok(Self { jd, rows, cols })
    }

    /// Draws (t1, port1, t2, port2) with ideal time tags.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Detection, Detection) {
        let g = self.jd.grid();
        let (i, fi) = self.rows.sample(rng);
        let (j, fj) = self.cols[i]
            .as_ref()
            .expect("row with positive marginal mass")
            .sample(rng);
        let t1 = g.time(i) + (fi - 0.5) * g.dt();
        let t2 = g.time(j) + (fj - 0.5) * g.dt();
        let q = self.jd.conditional_cross(i, j).unwrap_or(0.5);
        assign_ports(t1, t2, q, rng)
    }
}

fn assign_ports<R: Rng + ?Sized>(t1: f64, t2: f64, q: f64, rng: &mut R) -> (Detection, Detection) {
    let u: f64 = rng.random();
    if u < q {
        (
            Detection {
                time: t1,
                port: Port::C,
            },
            Detection {
                time: t2,
                port: Port::D,
            },
        )
    } else {
        let port = random_port(rng);
        (Detection { time: t1, port }, Detection { time: t2, port })
    }
}

/// One pair detection drawn from `jd`, with detector effects applied.
pub fn sample_pair_detections<R: Rng + ?Sized>(
    jd: &JointDensity,
    detector: &DetectorModel,
    rng: &mut R,
) -> Result<(Detection, Detection)> {
    let sampler = PairSampler::new(jd)?;
    let (mut a, mut b) = sampler.sample(rng);
    a.time = detector.apply(a.time, rng);
    b.time = detector.apply(b.time, rng);
    Ok((a, b))
}

/// A lone photon: time from |ζ|², port uniform.
pub fn sample_single_detection<R: Rng + ?Sized>(
    packet: &WavePacket,
    detector: &DetectorModel,
    rng: &mut R,
) -> Result<Detection> {
    let sampler = GridSampler1D::new(&packet.intensity())?;
    let g = packet.grid();
    let (i, f) = sampler.sample(rng);
    let t = g.time(i) + (f - 0.5) * g.dt();
    Ok(Detection {
        time: detector.apply(t, rng),
        port: random_port(rng),
    })
}

/// Pair detection for two closed-form modes, `a` entering port A with the
/// EOM phase `phase_a` and `b` entering port B.
///
/// (t1, t2) is drawn from ½[|a1|²|b2|² + |b1|²|a2|²], which is
/// p_cross + p_same for any overlap, then split into ports with the local
/// cross-port fraction.
pub fn sample_mode_pair<R: Rng + ?Sized>(
    a: &PhotonMode,
    phase_a: &PhaseProfile,
    b: &PhotonMode,
    lambda: f64,
    rng: &mut R,
) -> (Detection, Detection) {
    let (t1, t2) = if rng.random_bool(0.5) {
        (a.sample_time(rng), b.sample_time(rng))
    } else {
        (b.sample_time(rng), a.sample_time(rng))
    };
    let q = if lambda == 0.0 {
        0.5
    } else {
        let amp_a = |t: f64| a.amplitude(t) * num_complex::Complex64::cis(phase_a.eval(t));
        cross_fraction(
            amp_a(t1),
            amp_a(t2),
            b.amplitude(t1),
            b.amplitude(t2),
            lambda,
        )
    };
    assign_ports(t1, t2, q, rng)
}

/// How photons reach the recombining beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Routing {
    /// PBS split into EOM and delay paths, recombined on the NPBS.
    #[default]
    Hom,
    /// Whole stream on one input (Hanbury Brown–Twiss g² measurement).
    Hbt,
}

/// Everything the Monte Carlo needs besides trial count and seed.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub source: SourceConfig,
    /// Phase imprinted on photons taking the EOM path.
    pub eom_phase: PhaseProfile,
    pub routing: Routing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub period_ns: f64,
    pub n_trials: u64,
    pub events: Vec<DetectionEvent>,
}

impl EventLog {
    pub fn count(&self, port: Port) -> usize {
        self.events.iter().filter(|e| e.port == port).count()
    }
}

fn group_events<R: Rng + ?Sized>(
    group: &ArrivalGroup,
    setup: &ExperimentSetup,
    detector: &DetectorModel,
    period: f64,
    rng: &mut R,
) -> Vec<DetectionEvent> {
    let origin = |p: &PhotonInstance| {
        if p.extra {
            Origin::Extra
        } else {
            Origin::Photon
        }
    };
    let slot_t = group.slot as f64 * period;
    let event = |p: &PhotonInstance, d: Detection, rng: &mut R| DetectionEvent {
        trial: p.trial,
        port: d.port,
        timestamp_ns: detector.apply(slot_t + d.time, rng),
        origin: origin(p),
    };
    match group.photons.as_slice() {
        [p] => {
            let d = Detection {
                time: p.mode.sample_time(rng),
                port: random_port(rng),
            };
            vec![event(p, d, rng)]
        }
        [p, q] => {
            // The EOM photon enters port A.
            let (a, b) = if q.path == Some(Path::Short) && p.path != Some(Path::Short) {
                (q, p)
            } else {
                (p, q)
            };
            let interfering = a.path != b.path;
            let lambda = if interfering {
                setup.source.lambda
            } else {
                0.0
            };
            let flat = PhaseProfile::zero();
            let phase = if a.path == Some(Path::Short) {
                &setup.eom_phase
            } else {
                &flat
            };
            let (da, db) = sample_mode_pair(&a.mode, phase, &b.mode, lambda, rng);
            // which photon produced which click is not observable; tag in order
            vec![event(a, da, rng), event(b, db, rng)]
        }
        _ => Vec::new(),
    }
}

/// Slots handled per work item of the Monte Carlo.
const SLOT_BLOCK: u64 = 1 << 15;

fn emit_trial(setup: &ExperimentSetup, seed: u64, k: u64) -> Vec<PhotonInstance> {
    let cfg = &setup.source;
    let mut rng = indexed_rng(seed, RngStream::Emission, k);
    sample_trial(cfg, k, &mut rng)
        .into_iter()
        .filter_map(|p| {
            let p = match setup.routing {
                Routing::Hom => route_pbs(p, &mut rng),
                Routing::Hbt => PhotonInstance {
                    path: Some(Path::Short),
                    ..p
                },
            };
            let keep = match p.path {
                Some(Path::Long) => cfg.path_survival.long,
                _ => cfg.path_survival.short,
            };
            (keep >= 1.0 || rng.random_bool(keep)).then_some(p)
        })
        .collect()
}

fn dark_events(
    cfg: &SourceConfig,
    detector: &DetectorModel,
    seed: u64,
    slot: u64,
    out: &mut Vec<DetectionEvent>,
) {
    let period = cfg.rep_period_ns();
    let dark_mean = cfg.dark_rate_cps * 1e-9 * period;
    if dark_mean <= 0.0 {
        return;
    }
    let mut rng = indexed_rng(seed, RngStream::Dark, slot);
    let poisson = Poisson::new(dark_mean).expect("positive mean");
    for port in [Port::C, Port::D] {
        let n = poisson.sample(&mut rng) as u64;
        for _ in 0..n {
            let u: f64 = rng.random();
            out.push(DetectionEvent {
                trial: slot,
                port,
                timestamp_ns: detector.quantize((slot as f64 + u - 0.5) * period),
                origin: Origin::Dark,
            });
        }
    }
}

/// Full Monte Carlo run. The output depends only on (setup, n_trials, seed):
/// every trial and every slot draws from its own counter-based stream.
pub fn run_experiment(
    setup: &ExperimentSetup,
    n_trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<EventLog> {
    setup.source.validate()?;
    let cfg = &setup.source;
    let period = cfg.rep_period_ns();
    let detector = DetectorModel::from_source(cfg);
    // slot n_trials only receives delay-path photons of the last trial
    let n_slots = n_trials + 1;
    let n_blocks = n_slots.div_ceil(SLOT_BLOCK) as usize;

    let blocks = exec::map_range(exec, n_blocks, |b| {
        let lo = b as u64 * SLOT_BLOCK;
        let hi = (lo + SLOT_BLOCK).min(n_slots);
        let stream: Vec<PhotonInstance> = (lo.saturating_sub(1)..hi.min(n_trials))
            .flat_map(|k| emit_trial(setup, seed, k))
            .filter(|p| p.arrival_slot().is_some_and(|s| (lo..hi).contains(&s)))
            .collect();
        let groups = assemble_pairs(&stream);
        let dropped: usize = groups.iter().map(|g| g.dropped).sum();
        let mut events = Vec::new();
        for group in &groups {
            let mut rng = indexed_rng(seed, RngStream::Detection, group.slot);
            events.extend(group_events(group, setup, &detector, period, &mut rng));
        }
        for slot in lo..hi {
            dark_events(cfg, &detector, seed, slot, &mut events);
        }
        (events, dropped)
    });

    let dropped: usize = blocks.iter().map(|b| b.1).sum();
    if dropped > 0 {
        log::warn!("{dropped} photon(s) dropped from slots holding more than two photons");
    }
    let mut events: Vec<DetectionEvent> =
        Vec::with_capacity(blocks.iter().map(|b| b.0.len()).sum());
    for (block, _) in blocks {
        events.extend(block);
    }
    sort_events(&mut events);
    Ok(EventLog {
        period_ns: period,
        n_trials,
        events,
    })
}

pub fn sort_events(events: &mut [DetectionEvent]) {
    events.sort_by(|a, b| {
        a.timestamp_ns
            .total_cmp(&b.timestamp_ns)
            .then(a.port.cmp(&b.port))
            .then(a.trial.cmp(&b.trial))
            .then(a.origin.cmp(&b.origin))
    });
}

/// Counts per integer correlation lag `-max_lag..=max_lag`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakCounts {
    pub max_lag: i32,
    pub counts: Vec<u64>,
}

impl PeakCounts {
    pub fn new(max_lag: i32) -> Self {
        Self {
            max_lag,
            counts: vec![0; (2 * max_lag + 1) as usize],
        }
    }

    pub fn get(&self, lag: i32) -> u64 {
        if lag.abs() > self.max_lag {
            return 0;
        }
        self.counts[(lag + self.max_lag) as usize]
    }

    pub fn add(&mut self, lag: i32, n: u64) {
        if lag.abs() <= self.max_lag {
            self.counts[(lag + self.max_lag) as usize] += n;
        }
    }

    pub fn merge(&mut self, other: &PeakCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Sum over the reference peaks 2 ≤ |n| ≤ max_lag and their number.
    pub fn outer(&self) -> (u64, usize) {
        let lags = (2..=self.max_lag).flat_map(|n| [n, -n]);
        lags.fold((0, 0), |(s, k), n| (s + self.get(n), k + 1))
    }

    pub fn outer_mean(&self) -> Option<f64> {
        let (s, k) = self.outer();
        (k > 0 && s > 0).then(|| s as f64 / k as f64)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// C→D delay histogram (τ = t_D − t_C) with per-lag peak sums. Peak `n`
/// collects |τ − n·T| ≤ T/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width: f64,
    pub period: f64,
    pub tau_min: f64,
    pub counts: Vec<u64>,
    pub peaks: PeakCounts,
    /// Mean of the outer peaks, the non-interfering level before halving.
    pub outer_mean: Option<f64>,
}

impl CoincidenceHistogram {
    pub fn bin_center(&self, k: usize) -> f64 {
        self.tau_min + (k as f64 + 0.5) * self.bin_width
    }
}

/// Timestamps split by detector, each sorted.
pub(crate) struct PortTimes {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl PortTimes {
    pub fn new(events: &[DetectionEvent]) -> Self {
        let mut c = Vec::new();
        let mut d = Vec::new();
        for e in events {
            match e.port {
                Port::C => c.push(e.timestamp_ns),
                Port::D => d.push(e.timestamp_ns),
            }
        }
        c.sort_by(f64::total_cmp);
        d.sort_by(f64::total_cmp);
        Self { c, d }
    }

    /// Folds `f(acc, t_c, t_d)` over every C→D pair with |t_d − t_c| ≤ reach.
    pub fn fold_pairs<A, F, M>(&self, reach: f64, exec: Execution, init: A, f: F, merge: M) -> A
    where
        A: Clone + Send + Sync,
        F: Fn(&mut A, f64, f64) + Sync + Send,
        M: Fn(&mut A, A),
    {
        let d = &self.d;
        exec::fold_range(
            exec,
            self.c.len(),
            4096,
            init,
            |acc, i| {
                let tc = self.c[i];
                let lo = d.partition_point(|&t| t < tc - reach);
                for &td in d[lo..].iter().take_while(|&&t| t <= tc + reach) {
                    f(acc, tc, td);
                }
            },
            merge,
        )
    }
}

/// Integer lag of a delay τ for period T.
#[inline]
pub fn lag_of(tau: f64, period: f64) -> i32 {
    (tau / period).round() as i32
}

/// Second-order correlation histogram between the two detectors.
pub fn g2_histogram(
    events: &[DetectionEvent],
    period: f64,
    bin_width: f64,
    max_lag: i32,
    exec: Execution,
) -> Result<CoincidenceHistogram> {
    if !(bin_width > 0.0) {
        return Err(Error::invalid("bin_width", "must be positive"));
    }
    let reach = (max_lag as f64 + 0.5) * period;
    let n_bins = (2.0 * reach / bin_width).ceil() as usize;
    let tau_min = -reach;
    let times = PortTimes::new(events);
    let (counts, peaks) = times.fold_pairs(
        reach,
        exec,
        (vec![0u64; n_bins], PeakCounts::new(max_lag)),
        |(counts, peaks), tc, td| {
            let tau = td - tc;
            let lag = lag_of(tau, period);
            if lag.abs() > max_lag {
                return;
            }
            let k = (((tau - tau_min) / bin_width) as usize).min(n_bins - 1);
            counts[k] += 1;
            peaks.add(lag, 1);
        },
        |(ca, pa), (cb, pb)| {
            ca.iter_mut().zip(&cb).for_each(|(x, y)| *x += y);
            pa.merge(&pb);
        },
    );
    let outer_mean = peaks.outer_mean();
    Ok(CoincidenceHistogram {
        bin_width,
        period,
        tau_min,
        counts,
        peaks,
        outer_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_envelope, TimeGrid};
    use crate::interference::{joint_densities, noninterfering_density};
    use crate::source::indexed_rng;
    use std::f64::consts::PI;

    fn packet() -> WavePacket {
        gaussian_envelope(&TimeGrid::centered(0.0, 675.0, 1.0).unwrap(), 0.0, 150.0).unwrap()
    }

    fn three_sigma(p: f64, n: f64) -> f64 {
        3.0 * (p * (1.0 - p) / n).sqrt()
    }

    #[test]
    fn ideal_pairs_never_split() {
        let a = packet();
        let jd = joint_densities(&a, &a, 1.0).unwrap();
        let sampler = PairSampler::new(&jd).unwrap();
        let mut rng = indexed_rng(1, RngStream::Sampling, 0);
        let split = (0..100_000)
            .filter(|_| {
                let (x, y) = sampler.sample(&mut rng);
                x.port != y.port
            })
            .count();
        assert_eq!(split, 0);
    }

    #[test]
    fn distinguishable_pairs_split_half_the_time() {
        let a = packet();
        let jd = noninterfering_density(&a, &a).unwrap();
        let sampler = PairSampler::new(&jd).unwrap();
        let mut rng = indexed_rng(2, RngStream::Sampling, 0);
        let n = 100_000;
        let split = (0..n)
            .filter(|_| {
                let (x, y) = sampler.sample(&mut rng);
                x.port != y.port
            })
            .count() as f64
            / n as f64;
        assert!((split - 0.5).abs() < three_sigma(0.5, n as f64));
    }

    #[test]
    fn pi_step_cross_half_pairs_split() {
        let a = packet();
        let b = a.apply_phase(&PhaseProfile::step(0.0, PI, 0.0).unwrap());
        let jd = joint_densities(&a, &b, 1.0).unwrap();
        let sampler = PairSampler::new(&jd).unwrap();
        let mut rng = indexed_rng(3, RngStream::Sampling, 0);
        let (mut n, mut split) = (0, 0);
        for _ in 0..100_000 {
            let (x, y) = sampler.sample(&mut rng);
            // stay clear of the cell holding the jump
            if x.time.abs() > 1.0 && y.time.abs() > 1.0 && (x.time < 0.0) != (y.time < 0.0) {
                n += 1;
                split += (x.port != y.port) as usize;
            }
        }
        assert!(n > 20_000);
        assert_eq!(split, n);
    }

    #[test]
    fn single_detections_follow_the_envelope() {
        let wp = packet();
        let mut rng = indexed_rng(4, RngStream::Sampling, 0);
        let n = 100_000;
        let draws: Vec<Detection> = (0..n)
            .map(|_| sample_single_detection(&wp, &DetectorModel::PERFECT, &mut rng).unwrap())
            .collect();
        let mean = draws.iter().map(|d| d.time).sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d.time - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma = crate::fwhm_to_sigma(150.0);
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt());
        // sd of the sample sd ≈ σ/√(2n)
        assert!((var.sqrt() - sigma).abs() < 3.0 * sigma / (2.0 * n as f64).sqrt());
        let c = draws.iter().filter(|d| d.port == Port::C).count() as f64 / n as f64;
        assert!((c - 0.5).abs() < three_sigma(0.5, n as f64));
    }

    #[test]
    fn quantisation_rounds_to_resolution() {
        let det = DetectorModel {
            jitter_ns: 0.0,
            resolution_ns: 2.0,
        };
        let mut rng = indexed_rng(0, RngStream::Sampling, 0);
        assert_eq!(det.apply(3.1, &mut rng), 4.0);
        assert_eq!(det.apply(-2.9, &mut rng), -2.0);
    }

    #[test]
    fn one_period_apart_lands_in_peak_one() {
        let ev = |port, t| DetectionEvent {
            trial: 0,
            port,
            timestamp_ns: t,
            origin: Origin::Photon,
        };
        let period = 1000.0;
        let events = [ev(Port::C, 10.0), ev(Port::D, 1010.0)];
        let h = g2_histogram(&events, period, 2.0, MAX_LAG, Execution::Sequential).unwrap();
        assert_eq!(h.peaks.get(1), 1);
        assert_eq!(h.peaks.total(), 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert!(g2_histogram(&events, period, 0.0, MAX_LAG, Execution::Sequential).is_err());
    }

    #[test]
    fn dark_counts_only_without_trials() {
        let setup = ExperimentSetup {
            source: SourceConfig {
                dark_rate_cps: 1e6,
                ..SourceConfig::default()
            },
            eom_phase: PhaseProfile::zero(),
            routing: Routing::Hom,
        };
        let log = run_experiment(&setup, 0, 1, Execution::Sequential).unwrap();
        assert!(!log.events.is_empty());
        assert!(log.events.iter().all(|e| e.origin == Origin::Dark));
    }
}
