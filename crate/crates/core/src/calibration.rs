//! Closed-form expectations of the Monte Carlo observables and the fit of
//! the imperfection model to measured operating-point targets.
//!
//! Per repetition slot the short path delivers the photons of trial k and
//! the long path those of trial k − 1. Each contributes one photon with
//! probability (p1 + p2)/2 and two with probability p2/4. Zero-lag
//! coincidences come from pairs (interfering when the paths differ) plus
//! photon–dark and dark–dark combinations; outer peaks come from
//! independent slots.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::analysis::{HalfWindows, PairRegion};
use crate::error::{Error, Result};
use crate::phase::PhaseProfile;
use crate::source::SourceConfig;

/// Probabilists' Gauss–Hermite rule, five nodes.
const GH_NODES: [f64; 5] = [
    -2.856_970_013_872_805_6,
    -1.355_626_179_974_265_7,
    0.0,
    1.355_626_179_974_265_7,
    2.856_970_013_872_805_6,
];
const GH_WEIGHTS: [f64; 5] = [
    0.011_257_411_327_720_691,
    0.222_075_922_005_612_6,
    8.0 / 15.0,
    0.222_075_922_005_612_6,
    0.011_257_411_327_720_691,
];

/// Quadrature step for the region integrals (ns).
const QUAD_DT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
struct SlotOccupancy {
    one: f64,
    two: f64,
    zero: f64,
}

impl SlotOccupancy {
    /// Photon-number distribution contributed to a slot by one path.
    fn per_path(cfg: &SourceConfig) -> Self {
        let one = (cfg.p_click + cfg.p_two_photon) / 2.0;
        let two = cfg.p_two_photon / 4.0;
        Self {
            one,
            two,
            zero: 1.0 - one - two,
        }
    }
}

/// Region integrals of the averaged single-photon quantities. The
/// interference overlap is kept per grid lag so that the frequency-jitter
/// decay can be applied for any σ_ν without redoing the double sum.
#[derive(Debug, Clone, PartialEq)]
struct RegionIntegrals {
    /// ∫ ḡ(t1)ḡ(t2)
    f: f64,
    /// ∫ [ḡ(t1) + ḡ(t2)]
    g_sum: f64,
    area: f64,
    /// Σ H(t1,t2)·cos(φ1 − φ2)·dt² over cells with t1 − t2 = (d − n + 1)·dt.
    overlap_by_lag: Vec<f64>,
}

impl RegionIntegrals {
    /// ∫ H·cos(φ1 − φ2)·exp(−4π²σ_ν²τ²).
    fn j(&self, sigma_nu: f64) -> f64 {
        let decay = 4.0 * PI * PI * sigma_nu.powi(2) * 1e-6;
        let offset = (self.overlap_by_lag.len() / 2) as f64;
        self.overlap_by_lag
            .iter()
            .enumerate()
            .map(|(d, v)| {
                let tau = (d as f64 - offset) * QUAD_DT;
                v * (-decay * tau * tau).exp()
            })
            .sum()
    }
}

fn widths(cfg: &SourceConfig) -> Vec<(f64, f64)> {
    let s0 = cfg.sigma_t();
    if cfg.amp_jitter == 0.0 {
        return vec![(s0, 1.0)];
    }
    GH_NODES
        .iter()
        .zip(GH_WEIGHTS)
        .map(|(z, w)| (s0 * (1.0 + cfg.amp_jitter * z).max(0.05), w))
        .collect()
}

fn gauss(t: f64, s: f64) -> f64 {
    (-0.5 * (t / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
}

fn region_integrals(
    cfg: &SourceConfig,
    windows: &HalfWindows,
    region: PairRegion,
    phase: &PhaseProfile,
) -> RegionIntegrals {
    let ws = widths(cfg);
    let lo = windows.step_time - windows.tail_cutoff;
    let n = (2.0 * windows.tail_cutoff / QUAD_DT).round() as usize;
    let t: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * QUAD_DT).collect();
    let gbar: Vec<f64> = t
        .iter()
        .map(|&x| ws.iter().map(|&(s, w)| w * gauss(x, s)).sum())
        .collect();
    let root: Vec<Vec<f64>> = ws
        .iter()
        .map(|&(s, _)| t.iter().map(|&x| gauss(x, s).sqrt()).collect())
        .collect();
    let phi: Vec<f64> = t.iter().map(|&x| phase.eval(x)).collect();
    let cell = QUAD_DT * QUAD_DT;
    let mut acc = RegionIntegrals {
        f: 0.0,
        g_sum: 0.0,
        area: 0.0,
        overlap_by_lag: vec![0.0; 2 * n - 1],
    };
    for i in 0..n {
        for k in 0..n {
            if !windows.contains(region, t[i], t[k]) {
                continue;
            }
            let h: f64 = ws
                .iter()
                .zip(&root)
                .map(|(&(_, w), r)| w * r[i] * r[k])
                .sum();
            acc.f += gbar[i] * gbar[k] * cell;
            acc.overlap_by_lag[i + n - 1 - k] += h * h * (phi[i] - phi[k]).cos() * cell;
            acc.g_sum += (gbar[i] + gbar[k]) * cell;
            acc.area += cell;
        }
    }
    acc
}

/// Expected zero-lag coincidences in a region and the matching
/// non-interfering reference (outer-peak mean halved), per slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRates {
    pub zero_lag: f64,
    pub reference: f64,
}

impl ExpectedRates {
    pub fn ratio(&self) -> f64 {
        self.zero_lag / self.reference
    }

    pub fn combine(self, other: Self) -> Self {
        Self {
            zero_lag: self.zero_lag + other.zero_lag,
            reference: self.reference + other.reference,
        }
    }
}

fn rates_from(cfg: &SourceConfig, ri: &RegionIntegrals) -> ExpectedRates {
    let occ = SlotOccupancy::per_path(cfg);
    let m = cfg.mean_photons();
    let r = cfg.dark_rate_cps * 1e-9;
    let w = r * (m / 2.0) * ri.g_sum + r * r * ri.area;
    // cross-port mass of a pair: F/2 − λ²J/2 when interfering, F/2 otherwise
    let interfering =
        occ.one * occ.one * (ri.f - cfg.lambda.powi(2) * ri.j(cfg.sigma_nu_mhz)) / 2.0;
    let same_path = 2.0 * occ.two * occ.zero * ri.f / 2.0;
    ExpectedRates {
        zero_lag: interfering + same_path + w,
        reference: (m * m / 4.0 * ri.f + w) / 2.0,
    }
}

/// Expected rates for an EOM phase profile applied to the short path.
pub fn expected_rates(
    cfg: &SourceConfig,
    windows: &HalfWindows,
    region: PairRegion,
    phase: &PhaseProfile,
) -> ExpectedRates {
    rates_from(cfg, &region_integrals(cfg, windows, region, phase))
}

/// Expected g² central-peak suppression (%) of the stream sent onto a single
/// beam-splitter input.
pub fn expected_suppression(cfg: &SourceConfig) -> f64 {
    let m = cfg.mean_photons();
    let dark = cfg.dark_rate_cps * 1e-9 * cfg.rep_period_ns();
    let w = m * dark + dark * dark;
    100.0 * (1.0 - (cfg.p_two_photon / 2.0 + w) / (m * m / 4.0 + w))
}

/// Two-photon probability giving the target suppression, by bisection.
pub fn solve_two_photon(cfg: &SourceConfig, target_pct: f64) -> Result<f64> {
    let at = |p2: f64| {
        expected_suppression(&SourceConfig {
            p_two_photon: p2,
            ..cfg.clone()
        })
    };
    let (mut lo, mut hi) = (0.0, (1.0 - cfg.p_click).min(0.5));
    if !(at(lo) >= target_pct && at(hi) <= target_pct) {
        return Err(Error::invalid(
            "target_pct",
            format!(
                "{target_pct} is not reachable (range {:.2}..{:.2})",
                at(hi),
                at(lo)
            ),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) > target_pct {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: f64,
    pub error: f64,
}

/// Operating-point observables the imperfection model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub suppression_pct: f64,
    pub same_half: Target,
    pub cross_half: Target,
    pub visibility: Target,
    pub integrated: Target,
}

impl Default for Targets {
    fn default() -> Self {
        Self {
            suppression_pct: 95.0,
            same_half: Target {
                value: 0.16,
                error: 0.02,
            },
            cross_half: Target {
                value: 1.83,
                error: 0.06,
            },
            visibility: Target {
                value: 0.67,
                error: 0.03,
            },
            integrated: Target {
                value: 0.98,
                error: 0.03,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub suppression_pct: f64,
    pub same_half: f64,
    pub cross_half: f64,
    pub integrated: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub source: SourceConfig,
    pub targets: Targets,
    pub predictions: Predictions,
    pub chi2: f64,
}

/// Linear-in-λ² pieces of one observable: value = α + β·λ².
#[derive(Debug, Clone, Copy)]
struct Linear {
    alpha: f64,
    beta: f64,
}

fn linearise(cfg: &SourceConfig, ri: &RegionIntegrals) -> Linear {
    let at = |l2: f64| {
        rates_from(
            &SourceConfig {
                lambda: l2.sqrt(),
                ..cfg.clone()
            },
            ri,
        )
        .ratio()
    };
    let alpha = at(0.0);
    Linear {
        alpha,
        beta: at(1.0) - alpha,
    }
}

/// Observables of a calibrated source under a π step.
pub fn predict(cfg: &SourceConfig, windows: &HalfWindows) -> Predictions {
    let step = PhaseProfile::step(windows.step_time, PI, 0.0).expect("valid step");
    let same = expected_rates(cfg, windows, PairRegion::SameHalf, &step);
    let cross = expected_rates(cfg, windows, PairRegion::CrossHalf, &step);
    let flat = expected_rates(cfg, windows, PairRegion::CrossHalf, &PhaseProfile::zero());
    // R(Δφ) = c − a·cos Δφ with R(0) = c − a and R(π) = c + a
    let (c, a) = (
        (cross.ratio() + flat.ratio()) / 2.0,
        (cross.ratio() - flat.ratio()) / 2.0,
    );
    Predictions {
        suppression_pct: expected_suppression(cfg),
        same_half: same.ratio(),
        cross_half: cross.ratio(),
        integrated: same.combine(cross).ratio(),
        visibility: a / c,
    }
}

/// Fits p_two_photon to the suppression, then λ and σ_ν to the temporal-half
/// ratios and the visibility. `base` fixes every other parameter.
pub fn calibrate(
    base: &SourceConfig,
    windows: &HalfWindows,
    targets: &Targets,
) -> Result<CalibrationReport> {
    let p2 = solve_two_photon(base, targets.suppression_pct)?;
    let mut cfg = SourceConfig {
        p_two_photon: p2,
        ..base.clone()
    };
    let step = PhaseProfile::step(windows.step_time, PI, 0.0)?;
    let flat = PhaseProfile::zero();
    let same_ri = region_integrals(&cfg, windows, PairRegion::SameHalf, &step);
    let cross_ri = region_integrals(&cfg, windows, PairRegion::CrossHalf, &step);
    let zero_ri = region_integrals(&cfg, windows, PairRegion::CrossHalf, &flat);
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..=3000 {
        cfg.sigma_nu_mhz = k as f64 * 0.001;
        let same = linearise(&cfg, &same_ri);
        let cross = linearise(&cfg, &cross_ri);
        let zero = linearise(&cfg, &zero_ri);
        // v = a/c with a = (cross − zero)/2, c = (cross + zero)/2; at fixed σ the
        // baseline c does not depend on λ, so v is linear in λ² as well
        let c = (cross.alpha + zero.alpha) / 2.0;
        let vis = Linear {
            alpha: 0.0,
            beta: (cross.beta - zero.beta) / 2.0 / c,
        };
        // the integrated ratio pools both regions' counts
        let (ws, wc) = (
            rates_from(&cfg, &same_ri).reference,
            rates_from(&cfg, &cross_ri).reference,
        );
        let integrated = Linear {
            alpha: (ws * same.alpha + wc * cross.alpha) / (ws + wc),
            beta: (ws * same.beta + wc * cross.beta) / (ws + wc),
        };
        let obs = [
            (same, targets.same_half),
            (cross, targets.cross_half),
            (vis, targets.visibility),
            (integrated, targets.integrated),
        ];
        let (num, den) = obs.iter().fold((0.0, 0.0), |(n, d), (l, t)| {
            let w = t.error.powi(-2);
            (
                n + w * l.beta * (t.value - l.alpha),
                d + w * l.beta * l.beta,
            )
        });
        let l2 = (num / den).clamp(0.0, 1.0);
        let chi2: f64 = obs
            .iter()
            .map(|(l, t)| ((l.alpha + l.beta * l2 - t.value) / t.error).powi(2))
            .sum();
        if best.is_none_or(|(b, _, _)| chi2 < b) {
            best = Some((chi2, cfg.sigma_nu_mhz, l2.sqrt()));
        }
    }
    let (chi2, sigma_nu, lambda) = best.expect("scan is non-empty");
    cfg.sigma_nu_mhz = sigma_nu;
    cfg.lambda = lambda;
    Ok(CalibrationReport {
        predictions: predict(&cfg, windows),
        source: cfg,
        targets: *targets,
        chi2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalysisSpec;
    use approx::assert_abs_diff_eq;

    fn windows() -> HalfWindows {
        AnalysisSpec::default().windows()
    }

    #[test]
    fn ideal_source_predictions() {
        let p = predict(&SourceConfig::ideal(), &windows());
        assert_abs_diff_eq!(p.same_half, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.cross_half, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.visibility, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.suppression_pct, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn noninterfering_ratio_is_one() {
        let cfg = SourceConfig {
            lambda: 0.0,
            ..SourceConfig::ideal()
        };
        let r = expected_rates(
            &cfg,
            &windows(),
            PairRegion::Included,
            &PhaseProfile::zero(),
        );
        assert_abs_diff_eq!(r.ratio(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn suppression_falls_with_two_photon_events() {
        let cfg = SourceConfig::default();
        let doubled = SourceConfig {
            p_two_photon: 2.0 * cfg.p_two_photon,
            ..cfg.clone()
        };
        assert!(expected_suppression(&doubled) < expected_suppression(&cfg));
    }

    #[test]
    fn two_photon_solve_hits_target() {
        let cfg = SourceConfig::default();
        let p2 = solve_two_photon(&cfg, 95.0).unwrap();
        let s = expected_suppression(&SourceConfig {
            p_two_photon: p2,
            ..cfg
        });
        assert_abs_diff_eq!(s, 95.0, epsilon = 1e-9);
    }

    #[test]
    fn frozen_defaults_match_calibration() {
        let cfg = SourceConfig::default();
        let report = calibrate(&cfg, &windows(), &Targets::default()).unwrap();
        assert_abs_diff_eq!(report.source.p_two_photon, cfg.p_two_photon, epsilon = 1e-6);
        assert_abs_diff_eq!(report.source.sigma_nu_mhz, cfg.sigma_nu_mhz, epsilon = 1e-9);
        assert_abs_diff_eq!(report.source.lambda, cfg.lambda, epsilon = 1e-4);
    }
}
