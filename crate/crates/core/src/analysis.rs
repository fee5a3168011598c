//! Data reductions on time-tagged detector clicks: temporal-half
//! classification, normalisation to the non-interfering reference,
//! visibility fits, quantum-beat overlays and g² suppression.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::detection::{
    g2_histogram, lag_of, CoincidenceHistogram, EventLog, Origin, PeakCounts, Port, PortTimes,
    MAX_LAG,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interference::predict_beat_curve;
use crate::{fwhm_to_sigma, sigma_to_fwhm};

/// Data-reduction parameters. Defaults follow the published analysis
/// windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// Phase-step time relative to the packet centre (ns).
    pub step_time_ns: f64,
    /// Clicks within this distance of the step are dropped (ns).
    pub rise_exclusion_ns: f64,
    /// Clicks at or beyond this distance from the step are dropped (ns).
    pub tail_cutoff_ns: f64,
    pub max_lag: i32,
    pub g2_bin_ns: f64,
    /// Half width of the quantum-beat acceptance window (ns).
    pub beat_window_ns: f64,
    pub beat_bin_ns: f64,
    /// Background level attributed to multi-photon events and detector
    /// noise, reported as a subtracted ratio alongside the raw one.
    pub background_offset: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            step_time_ns: 0.0,
            rise_exclusion_ns: 5.0,
            tail_cutoff_ns: 80.0,
            max_lag: MAX_LAG,
            g2_bin_ns: 2.0,
            beat_window_ns: 150.0,
            beat_bin_ns: 4.0,
            background_offset: 0.05,
        }
    }
}

impl AnalysisSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: &str| Err(Error::config(format!("analysis.{path}"), msg));
        if !(self.rise_exclusion_ns >= 0.0) {
            return bad("rise_exclusion_ns", "must be ≥ 0");
        }
        if !(self.tail_cutoff_ns > self.rise_exclusion_ns) {
            return bad("tail_cutoff_ns", "must exceed rise_exclusion_ns");
        }
        if !(2..=64).contains(&self.max_lag) {
            return bad("max_lag", "must lie in 2..=64");
        }
        if !(self.g2_bin_ns > 0.0) {
            return bad("g2_bin_ns", "must be positive");
        }
        if !(self.beat_window_ns > 0.0) {
            return bad("beat_window_ns", "must be positive");
        }
        if !(self.beat_bin_ns > 0.0) {
            return bad("beat_bin_ns", "must be positive");
        }
        if !self.background_offset.is_finite() {
            return bad("background_offset", "must be finite");
        }
        Ok(())
    }

    pub fn windows(&self) -> HalfWindows {
        HalfWindows {
            step_time: self.step_time_ns,
            rise_exclusion: self.rise_exclusion_ns,
            tail_cutoff: self.tail_cutoff_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Half {
    I,
    II,
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfReason {
    RiseWindow,
    FarTail,
    InRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfClassification {
    pub label: Half,
    pub reason: HalfReason,
}

/// Assigns a click time (relative to its packet) to half I, half II, or
/// excludes it near the step or in the far tails.
pub fn classify_half(
    t: f64,
    step_time: f64,
    rise_exclusion: f64,
    tail_cutoff: f64,
) -> HalfClassification {
    let d = (t - step_time).abs();
    let (label, reason) = if d <= rise_exclusion {
        (Half::Excluded, HalfReason::RiseWindow)
    } else if d >= tail_cutoff {
        (Half::Excluded, HalfReason::FarTail)
    } else if t < step_time {
        (Half::I, HalfReason::InRange)
    } else {
        (Half::II, HalfReason::InRange)
    };
    HalfClassification { label, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRegion {
    /// Both clicks in I or both in II.
    SameHalf,
    /// One click in I, the other in II.
    CrossHalf,
    /// Union of the two.
    Included,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWindows {
    pub step_time: f64,
    pub rise_exclusion: f64,
    pub tail_cutoff: f64,
}

impl HalfWindows {
    pub fn classify(&self, t: f64) -> HalfClassification {
        classify_half(t, self.step_time, self.rise_exclusion, self.tail_cutoff)
    }

    /// `None` when either click is excluded.
    pub fn pair_class(&self, t1: f64, t2: f64) -> Option<PairRegion> {
        match (self.classify(t1).label, self.classify(t2).label) {
            (Half::Excluded, _) | (_, Half::Excluded) => None,
            (a, b) if a == b => Some(PairRegion::SameHalf),
            _ => Some(PairRegion::CrossHalf),
        }
    }

    /// Region membership of a (t1, t2) point, usable as a quadrature predicate.
    pub fn contains(&self, region: PairRegion, t1: f64, t2: f64) -> bool {
        match (region, self.pair_class(t1, t2)) {
            (_, None) => false,
            (PairRegion::Included, Some(_)) => true,
            (r, Some(c)) => r == c,
        }
    }
}

/// Time of a click relative to the nominal packet centre of its slot.
#[inline]
pub fn relative_time(t: f64, period: f64) -> f64 {
    t - (t / period).round() * period
}

/// C→D pair counts per lag split by temporal-half region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfPairCounts {
    pub same: PeakCounts,
    pub cross: PeakCounts,
    pub excluded: PeakCounts,
}

impl HalfPairCounts {
    pub fn new(max_lag: i32) -> Self {
        Self {
            same: PeakCounts::new(max_lag),
            cross: PeakCounts::new(max_lag),
            excluded: PeakCounts::new(max_lag),
        }
    }

    pub fn region(&self, region: PairRegion) -> PeakCounts {
        match region {
            PairRegion::SameHalf => self.same.clone(),
            PairRegion::CrossHalf => self.cross.clone(),
            PairRegion::Included => {
                let mut p = self.same.clone();
                p.merge(&self.cross);
                p
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        self.same.merge(&other.same);
        self.cross.merge(&other.cross);
        self.excluded.merge(&other.excluded);
    }
}

pub fn half_pair_counts(
    events: &[crate::detection::DetectionEvent],
    period: f64,
    windows: &HalfWindows,
    max_lag: i32,
    exec: Execution,
) -> HalfPairCounts {
    let reach = (max_lag as f64 + 0.5) * period;
    PortTimes::new(events).fold_pairs(
        reach,
        exec,
        HalfPairCounts::new(max_lag),
        |acc, tc, td| {
            let lag = lag_of(td - tc, period);
            if lag.abs() > max_lag {
                return;
            }
            let (rc, rd) = (relative_time(tc, period), relative_time(td, period));
            let bucket = match windows.pair_class(rc, rd) {
                Some(PairRegion::SameHalf) => &mut acc.same,
                Some(_) => &mut acc.cross,
                None => &mut acc.excluded,
            };
            bucket.add(lag, 1);
        },
        |a, b| a.merge(&b),
    )
}

/// Zero-lag coincidences relative to the non-interfering reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRatio {
    pub ratio: f64,
    pub error: f64,
    pub n0: u64,
    /// Mean outer-peak count divided by two.
    pub reference: f64,
}

/// n = 0 counts over half the mean of the peaks 2 ≤ |n| ≤ max_lag. The
/// |n| = 1 peaks are never used: routing depletes them to ¾.
pub fn normalized_rates(peaks: &PeakCounts) -> Result<RateRatio> {
    let (outer_sum, k) = peaks.outer();
    if outer_sum == 0 || k == 0 {
        return Err(Error::EmptyReference);
    }
    let reference = outer_sum as f64 / k as f64 / 2.0;
    let n0 = peaks.get(0);
    let ratio = n0 as f64 / reference;
    // Poisson errors in quadrature; an empty peak still carries one count of error
    let e_n0 = (n0.max(1) as f64).sqrt() / reference;
    let e_ref = ratio / (outer_sum as f64).sqrt();
    Ok(RateRatio {
        ratio,
        error: e_n0.hypot(e_ref),
        n0,
        reference,
    })
}

/// 100·(1 − peak(0)/mean(outer peaks)); `None` when the outer peaks are empty.
pub fn central_suppression(hist: &CoincidenceHistogram) -> Option<f64> {
    let outer = hist.peaks.outer_mean()?;
    Some(100.0 * (1.0 - hist.peaks.get(0) as f64 / outer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub delta_phi: f64,
    pub ratio: f64,
    pub error: f64,
}

/// Weighted fit of R(Δφ) = c − a·cos Δφ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    /// a/c clamped to [0, 1].
    pub v: f64,
    pub v_error: f64,
    pub baseline: f64,
    pub amplitude: f64,
    /// Phase per volt when the points came from a voltage sweep.
    pub phase_scale: Option<f64>,
    /// (max − min)/(max + min) of the measured ratios.
    pub minmax_visibility: f64,
    pub residuals: Vec<f64>,
    pub chi2: f64,
    pub converged: bool,
}

pub fn fit_visibility(points: &[PhasePoint]) -> Result<VisibilityFit> {
    if points.len() < 4 {
        return Err(Error::invalid(
            "points",
            format!("need at least 4, got {}", points.len()),
        ));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
            (l.min(p.delta_phi), h.max(p.delta_phi))
        });
    if hi - lo < 2.0 * std::f64::consts::PI - 1e-9 {
        return Err(Error::invalid(
            "points",
            "phases must span at least one period",
        ));
    }
    // normal equations for columns [1, −cos Δφ]
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = if p.error > 0.0 { p.error.powi(-2) } else { 1.0 };
        let x = -p.delta_phi.cos();
        s00 += w;
        s01 += w * x;
        s11 += w * x * x;
        r0 += w * p.ratio;
        r1 += w * x * p.ratio;
    }
    let det = s00 * s11 - s01 * s01;
    let scale = s00 * s11;
    let well_posed = det > 1e-12 * scale && det.is_finite();
    let (c, a) = if well_posed {
        ((s11 * r0 - s01 * r1) / det, (s00 * r1 - s01 * r0) / det)
    } else {
        (r0 / s00, 0.0)
    };
    let residuals: Vec<f64> = points
        .iter()
        .map(|p| p.ratio - (c - a * p.delta_phi.cos()))
        .collect();
    let chi2 = points
        .iter()
        .zip(&residuals)
        .map(|(p, r)| {
            if p.error > 0.0 {
                (r / p.error).powi(2)
            } else {
                r * r
            }
        })
        .sum();
    // covariance of (c, a) is the inverse normal matrix
    let (var_c, var_a, cov) = if well_posed {
        (s11 / det, s00 / det, -s01 / det)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let raw_v = a / c;
    let v_error = (raw_v.abs()
        * (var_a / (a * a) + var_c / (c * c) - 2.0 * cov / (a * c))
            .max(0.0)
            .sqrt())
    .max(0.0);
    let (max, min) = points
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), p| {
            (h.max(p.ratio), l.min(p.ratio))
        });
    Ok(VisibilityFit {
        v: if raw_v.is_finite() {
            raw_v.clamp(0.0, 1.0)
        } else {
            0.0
        },
        v_error,
        baseline: c,
        amplitude: a,
        phase_scale: None,
        minmax_visibility: if max + min > 0.0 {
            (max - min) / (max + min)
        } else {
            0.0
        },
        residuals,
        chi2,
        converged: well_posed && c > 0.0 && raw_v.is_finite(),
    })
}

/// Zero-lag coincidences vs τ inside the beat window together with the
/// non-interfering reference and the predicted curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatOverlay {
    pub delta_nu_mhz: f64,
    pub bin_width: f64,
    pub tau: Vec<f64>,
    pub coincidences: Vec<u64>,
    /// Outer-peak mean per bin, halved.
    pub reference: Vec<f64>,
    /// Fitted non-interfering Gaussian.
    pub reference_fit: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Amplitude of the reference Gaussian, the only fit parameter.
    pub amplitude: f64,
    /// FWHM of the full-peak reference τ distribution after subtracting the
    /// flat accidental floor.
    pub envelope_fwhm_ns: f64,
}

#[derive(Clone)]
struct BeatAcc {
    zero: Vec<u64>,
    outer: Vec<u64>,
    full: Vec<u64>,
}

/// Builds the quantum-beat overlay. `fwhm_ns` is the single-photon intensity
/// FWHM that fixes the reference Gaussian's width.
pub fn beat_overlay(
    log: &EventLog,
    spec: &AnalysisSpec,
    delta_nu: f64,
    fwhm_ns: f64,
    exec: Execution,
) -> Result<BeatOverlay> {
    if !(delta_nu >= 0.0) {
        return Err(Error::invalid("delta_nu", "must be ≥ 0"));
    }
    let period = log.period_ns;
    let w = spec.beat_window_ns;
    let bin = spec.beat_bin_ns;
    let n_bins = (2.0 * (2.0 * w) / bin).ceil() as usize;
    let tau_min = -(n_bins as f64) * bin / 2.0;
    let full_bin = 2.0;
    let n_full = (period / full_bin).ceil() as usize;
    let full_min = -(n_full as f64) * full_bin / 2.0;
    let max_lag = spec.max_lag;
    let reach = (max_lag as f64 + 0.5) * period;
    let acc = PortTimes::new(&log.events).fold_pairs(
        reach,
        exec,
        BeatAcc {
            zero: vec![0; n_bins],
            outer: vec![0; n_bins],
            full: vec![0; n_full],
        },
        |acc, tc, td| {
            let lag = lag_of(td - tc, period);
            if lag.abs() > max_lag || lag.abs() == 1 {
                return;
            }
            let (rc, rd) = (relative_time(tc, period), relative_time(td, period));
            let tau = (td - tc) - lag as f64 * period;
            if lag != 0 {
                let k = ((tau - full_min) / full_bin).floor();
                if k >= 0.0 && (k as usize) < n_full {
                    acc.full[k as usize] += 1;
                }
            }
            if rc.abs() > w || rd.abs() > w {
                return;
            }
            let k = ((tau - tau_min) / bin).floor();
            if k < 0.0 || k as usize >= n_bins {
                return;
            }
            if lag == 0 {
                acc.zero[k as usize] += 1;
            } else {
                acc.outer[k as usize] += 1;
            }
        },
        |a, b| {
            a.zero.iter_mut().zip(&b.zero).for_each(|(x, y)| *x += y);
            a.outer.iter_mut().zip(&b.outer).for_each(|(x, y)| *x += y);
            a.full.iter_mut().zip(&b.full).for_each(|(x, y)| *x += y);
        },
    );
    let n_outer = 2 * (max_lag - 1) as usize;
    let tau: Vec<f64> = (0..n_bins)
        .map(|k| tau_min + (k as f64 + 0.5) * bin)
        .collect();
    let reference: Vec<f64> = acc
        .outer
        .iter()
        .map(|&c| c as f64 / n_outer as f64 / 2.0)
        .collect();

    let sigma_tau = std::f64::consts::SQRT_2 * fwhm_to_sigma(fwhm_ns);
    let gauss = |t: f64| (-t * t / (2.0 * sigma_tau * sigma_tau)).exp();
    let (sy, sg) = tau
        .iter()
        .zip(&reference)
        .fold((0.0, 0.0), |(sy, sg), (&t, &y)| {
            (sy + y * gauss(t), sg + gauss(t).powi(2))
        });
    let amplitude = if sg > 0.0 { sy / sg } else { 0.0 };
    let reference_fit: Vec<f64> = tau.iter().map(|&t| amplitude * gauss(t)).collect();
    let curve = predict_beat_curve(delta_nu, |t| amplitude * gauss(t));
    let predicted = tau.iter().map(|&t| curve(t)).collect();

    let full_tau: Vec<f64> = (0..n_full)
        .map(|k| full_min + (k as f64 + 0.5) * full_bin)
        .collect();
    let envelope_fwhm_ns = floor_subtracted_fwhm(&full_tau, &acc.full, 0.8 * period / 2.0);

    Ok(BeatOverlay {
        delta_nu_mhz: delta_nu,
        bin_width: bin,
        tau,
        coincidences: acc.zero,
        reference,
        reference_fit,
        predicted,
        amplitude,
        envelope_fwhm_ns,
    })
}

/// Moment-based FWHM of a peak sitting on a flat floor; the floor is the mean
/// over |τ| ≥ `edge`.
fn floor_subtracted_fwhm(tau: &[f64], counts: &[u64], edge: f64) -> f64 {
    let tail: Vec<f64> = tau
        .iter()
        .zip(counts)
        .filter(|(t, _)| t.abs() >= edge)
        .map(|(_, &c)| c as f64)
        .collect();
    let floor = if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (&t, &c) in tau.iter().zip(counts) {
        if t.abs() < edge {
            let y = c as f64 - floor;
            m0 += y;
            m1 += y * t;
            m2 += y * t * t;
        }
    }
    if !(m0 > 0.0) {
        return f64::NAN;
    }
    let mean = m1 / m0;
    sigma_to_fwhm((m2 / m0 - mean * mean).max(0.0).sqrt())
}

/// Position of the minimum of a sinusoid y = a + b·cos(ωu) + c·sin(ωu),
/// u = x − center, fitted by weighted least squares to the points with
/// |u| ≤ half_width. The returned minimum lies within half a period of
/// `center`.
pub fn local_sinusoid_minimum(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
    center: f64,
    half_width: f64,
    frequency: f64,
) -> Option<f64> {
    let omega = 2.0 * PI * frequency;
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    let mut n = 0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(weights) {
        let u = xi - center;
        if u.abs() > half_width || !(wi > 0.0) {
            continue;
        }
        n += 1;
        let b = [1.0, (omega * u).cos(), (omega * u).sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += wi * b[i] * b[j];
            }
            r[i] += wi * b[i] * yi;
        }
    }
    if n < 3 || !(omega > 0.0) {
        return None;
    }
    let p = solve3(m, r)?;
    if p[1] == 0.0 && p[2] == 0.0 {
        return None;
    }
    // a + R·cos(ωu − θ) is smallest where ωu − θ = π
    let theta = p[2].atan2(p[1]);
    let d = (theta + PI).rem_euclid(2.0 * PI);
    let d = if d > PI { d - 2.0 * PI } else { d };
    Some(center + d / omega)
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, p) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Frequency (MHz) in `[f_lo, f_hi]` whose cosine c − a·cos(2πfτ) best fits
/// `y(τ)`, found by a scan and parabolic refinement.
pub fn dominant_frequency(
    tau: &[f64],
    y: &[f64],
    weights: &[f64],
    f_lo: f64,
    f_hi: f64,
) -> Option<f64> {
    let ssr = |f: f64| -> f64 {
        let w = 2.0 * std::f64::consts::PI * f * crate::MHZ_NS;
        let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&t, &v), &wt) in tau.iter().zip(y).zip(weights) {
            let x = (w * t).cos();
            s00 += wt;
            s01 += wt * x;
            s11 += wt * x * x;
            r0 += wt * v;
            r1 += wt * x * v;
        }
        let det = s00 * s11 - s01 * s01;
        if det <= 0.0 {
            return f64::INFINITY;
        }
        let c = (s11 * r0 - s01 * r1) / det;
        let a = (s00 * r1 - s01 * r0) / det;
        tau.iter()
            .zip(y)
            .zip(weights)
            .map(|((&t, &v), &wt)| wt * (v - c - a * (w * t).cos()).powi(2))
            .sum()
    };
    let steps = 400;
    let h = (f_hi - f_lo) / steps as f64;
    let vals: Vec<f64> = (0..=steps).map(|k| ssr(f_lo + k as f64 * h)).collect();
    let (k, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    if k == 0 || k == steps {
        return Some(f_lo + k as f64 * h);
    }
    let (a, b, c) = (vals[k - 1], vals[k], vals[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom > 0.0 {
        0.5 * (a - c) / denom
    } else {
        0.0
    };
    Some(f_lo + (k as f64 + shift) * h)
}

/// Weighted straight-line slope and its standard error.
pub fn linear_slope(x: &[f64], y: &[f64], err: &[f64]) -> Option<(f64, f64)> {
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&xi, &yi), &ei) in x.iter().zip(y).zip(err) {
        if !(yi.is_finite() && ei > 0.0) {
            continue;
        }
        let w = ei.powi(-2);
        s += w;
        sx += w * xi;
        sxx += w * xi * xi;
        sy += w * yi;
        sxy += w * xi * yi;
    }
    let det = s * sxx - sx * sx;
    (det > 0.0).then(|| ((s * sxy - sx * sy) / det, (s / det).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatMinimum {
    pub expected_ns: f64,
    pub found_ns: Option<f64>,
}

/// Features of a beat overlay: minima near k/Δν, dominant oscillation and
/// the envelope width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatReport {
    pub delta_nu_mhz: f64,
    pub minima: Vec<BeatMinimum>,
    pub dominant_frequency_mhz: Option<f64>,
    pub period_ns: Option<f64>,
    pub envelope_fwhm_ns: f64,
    pub amplitude: f64,
}

/// Frequency range searched for the beat oscillation.
pub const BEAT_SCAN_MHZ: (f64, f64) = (2.0, 100.0);

pub fn beat_report(overlay: &BeatOverlay) -> BeatReport {
    let dnu = overlay.delta_nu_mhz;
    let mut minima = Vec::new();
    let tau_max = overlay.tau.last().copied().unwrap_or(0.0);
    if dnu > 0.0 {
        let spacing = 1.0 / (dnu * crate::MHZ_NS);
        let k_max = ((0.75 * tau_max) / spacing).floor() as i64;
        let frequency = dnu * crate::MHZ_NS;
        let (mut y, mut w) = (Vec::new(), Vec::new());
        for (&c, &r) in overlay.coincidences.iter().zip(&overlay.reference_fit) {
            let c = c as f64;
            y.push(if r > 0.0 { c / r } else { 0.0 });
            w.push(if r > 0.0 { r * r / c.max(1.0) } else { 0.0 });
        }
        for k in -k_max..=k_max {
            let expected = k as f64 * spacing;
            minima.push(BeatMinimum {
                expected_ns: expected,
                found_ns: local_sinusoid_minimum(
                    &overlay.tau,
                    &y,
                    &w,
                    expected,
                    0.3 * spacing,
                    frequency,
                ),
            });
        }
    }
    // oscillation of the normalised curve, weighted by the envelope
    let (mut tau, mut ratio, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for ((&t, &c), &r) in overlay
        .tau
        .iter()
        .zip(&overlay.coincidences)
        .zip(&overlay.reference_fit)
    {
        if r > 0.0 && r >= 0.2 * overlay.amplitude {
            tau.push(t);
            ratio.push(c as f64 / r);
            w.push(r);
        }
    }
    let f = if dnu > 0.0 && tau.len() >= 4 {
        dominant_frequency(&tau, &ratio, &w, BEAT_SCAN_MHZ.0, BEAT_SCAN_MHZ.1)
    } else {
        None
    };
    BeatReport {
        delta_nu_mhz: dnu,
        minima,
        dominant_frequency_mhz: f,
        period_ns: f.map(|f| 1.0 / (f * crate::MHZ_NS)),
        envelope_fwhm_ns: overlay.envelope_fwhm_ns,
        amplitude: overlay.amplitude,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub ratio: f64,
    pub error: f64,
    pub n0: u64,
    pub reference: f64,
    pub ratio_minus_offset: f64,
}

impl RateSummary {
    fn new(r: RateRatio, offset: f64) -> Self {
        Self {
            ratio: r.ratio,
            error: r.error,
            n0: r.n0,
            reference: r.reference,
            ratio_minus_offset: r.ratio - offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub same_half: u64,
    pub cross_half: u64,
    pub excluded: u64,
    pub all_zero_lag: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Summary {
    /// Counts for lags −max_lag..=max_lag.
    pub peaks: Vec<u64>,
    pub outer_mean: Option<f64>,
    pub central_suppression_pct: Option<f64>,
    pub suppression_defined: bool,
    pub adjacent_to_outer: Option<f64>,
}

/// Everything the analysis derives from an event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_events: u64,
    pub clicks_c: u64,
    pub clicks_d: u64,
    pub period_ns: f64,
    pub same_half: Option<RateSummary>,
    pub cross_half: Option<RateSummary>,
    pub integrated: Option<RateSummary>,
    pub partition: RegionPartition,
    pub g2: G2Summary,
    pub background_offset: f64,
}

pub fn analyze_events(log: &EventLog, spec: &AnalysisSpec, exec: Execution) -> Result<Summary> {
    spec.validate()?;
    let period = log.period_ns;
    let halves = half_pair_counts(&log.events, period, &spec.windows(), spec.max_lag, exec);
    let hist = g2_histogram(&log.events, period, spec.g2_bin_ns, spec.max_lag, exec)?;
    let rate = |r: PairRegion| {
        normalized_rates(&halves.region(r))
            .ok()
            .map(|x| RateSummary::new(x, spec.background_offset))
    };
    // a log without emitter clicks carries no antibunching information
    let has_signal = log.events.iter().any(|e| e.origin != Origin::Dark);
    let suppression = central_suppression(&hist).filter(|_| has_signal);
    let adjacent = hist
        .peaks
        .outer_mean()
        .map(|m| (hist.peaks.get(1) + hist.peaks.get(-1)) as f64 / 2.0 / m);
    Ok(Summary {
        n_events: log.events.len() as u64,
        clicks_c: log.count(Port::C) as u64,
        clicks_d: log.count(Port::D) as u64,
        period_ns: period,
        same_half: rate(PairRegion::SameHalf),
        cross_half: rate(PairRegion::CrossHalf),
        integrated: rate(PairRegion::Included),
        partition: RegionPartition {
            same_half: halves.same.get(0),
            cross_half: halves.cross.get(0),
            excluded: halves.excluded.get(0),
            all_zero_lag: hist.peaks.get(0),
        },
        g2: G2Summary {
            peaks: hist.peaks.counts.clone(),
            outer_mean: hist.peaks.outer_mean(),
            central_suppression_pct: suppression,
            suppression_defined: suppression.is_some(),
            adjacent_to_outer: adjacent,
        },
        background_offset: spec.background_offset,
    })
}
