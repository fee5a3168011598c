//! Uniform time grids and single-photon temporal mode functions on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::phase::PhaseProfile;
use crate::{fwhm_to_sigma, MHZ_NS};

/// Default grid step (ns), well below the 2 ns detector resolution.
pub const DEFAULT_DT: f64 = 0.5;
/// Default half span (ns) around the packet centre.
pub const DEFAULT_HALF_SPAN: f64 = 675.0;
/// Tolerance on Σ|ζ|²dt = 1.
pub const NORM_TOL: f64 = 1e-9;

/// Uniform grid `t_start + i·dt` for `i < n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_points: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if n_points < 2 {
            return Err(Error::invalid("n_points", "need at least two points"));
        }
        if !t_start.is_finite() {
            return Err(Error::invalid("t_start", "must be finite"));
        }
        Ok(Self {
            t_start,
            dt,
            n_points,
        })
    }

    /// Symmetric grid covering `center ± half_span`.
    pub fn centered(center: f64, half_span: f64, dt: f64) -> Result<Self> {
        if !(half_span > 0.0) {
            return Err(Error::invalid("half_span", "must be positive"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        let n = (2.0 * half_span / dt).round() as usize + 1;
        Self::new(center - half_span, dt, n)
    }

    pub fn default_for(center: f64) -> Self {
        Self::centered(center, DEFAULT_HALF_SPAN, DEFAULT_DT).expect("default grid")
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_points - 1)
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.time(i))
    }

    /// Index of the grid node whose cell contains `t`, if any.
    pub fn cell_of(&self, t: f64) -> Option<usize> {
        let x = ((t - self.t_start) / self.dt).round();
        (x >= 0.0 && (x as usize) < self.n_points).then_some(x as usize)
    }

    /// Same grid with half the step over the same span.
    pub fn refined(&self) -> Self {
        Self {
            t_start: self.t_start,
            dt: self.dt / 2.0,
            n_points: 2 * self.n_points - 1,
        }
    }
}

/// Normalized complex temporal mode function ζ(t) sampled on a grid
/// (units ns^-1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    grid: TimeGrid,
    amplitude: Vec<Complex64>,
    center: f64,
    label: String,
}

impl WavePacket {
    /// Wraps samples that are already normalized.
    pub fn from_amplitudes(
        grid: TimeGrid,
        amplitude: Vec<Complex64>,
        center: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let wp = Self::unchecked(grid, amplitude, center, label.into())?;
        let norm = wp.norm_sq();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                label: wp.label,
                norm,
            });
        }
        Ok(wp)
    }

    /// Rescales arbitrary samples to unit norm.
    pub fn normalized(
        grid: TimeGrid,
        mut amplitude: Vec<Complex64>,
        center: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let raw: f64 = amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dt();
        if !(raw > 0.0 && raw.is_finite()) {
            return Err(Error::invalid("amplitude", "zero or non-finite norm"));
        }
        let s = raw.sqrt().recip();
        amplitude.iter_mut().for_each(|a| *a *= s);
        Self::unchecked(grid, amplitude, center, label.into())
    }

    fn unchecked(
        grid: TimeGrid,
        amplitude: Vec<Complex64>,
        center: f64,
        label: String,
    ) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::invalid(
                "amplitude",
                format!(
                    "{} samples for a {}-point grid",
                    amplitude.len(),
                    grid.len()
                ),
            ));
        }
        if amplitude
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::invalid("amplitude", "non-finite sample"));
        }
        Ok(Self {
            grid,
            amplitude,
            center,
            label,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Σ|ζ|²·dt
    pub fn norm_sq(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOL
    }

    /// Detection-time density |ζ(t)|².
    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// FWHM of |ζ|² from the samples, interpolating the half-maximum crossings.
    pub fn intensity_fwhm(&self) -> f64 {
        let inten = self.intensity();
        let (imax, &peak) = inten
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        let half = peak / 2.0;
        let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
            for i in range {
                let j = (i as isize + step) as usize;
                if inten[j] < half {
                    let (ti, tj) = (self.grid.time(i), self.grid.time(j));
                    return ti + (tj - ti) * (inten[i] - half) / (inten[i] - inten[j]);
                }
            }
            f64::NAN
        };
        let right = cross(&mut (imax..inten.len() - 1), 1);
        let left = cross(&mut (1..=imax).rev(), -1);
        right - left
    }

    /// Multiplies by e^{iφ(t)}; the modulus is untouched.
    pub fn apply_phase(&self, profile: &PhaseProfile) -> WavePacket {
        let amplitude = self
            .amplitude
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::cis(profile.eval(self.grid.time(i))))
            .collect();
        WavePacket {
            amplitude,
            ..self.clone()
        }
    }

    /// Shifts the carrier by `delta_nu` MHz, i.e. φ(t) = 2π·Δν·(t − center).
    pub fn apply_detuning(&self, delta_nu: f64) -> WavePacket {
        let w = 2.0 * PI * delta_nu * MHZ_NS;
        let amplitude = self
            .amplitude
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::cis(w * (self.grid.time(i) - self.center)))
            .collect();
        WavePacket {
            amplitude,
            ..self.clone()
        }
    }
}

/// Gaussian packet whose intensity |ζ|² has the given FWHM, with flat phase.
///
/// The grid must cover `center ± 3σ` of the intensity profile.
pub fn gaussian_envelope(grid: &TimeGrid, center: f64, fwhm_intensity: f64) -> Result<WavePacket> {
    if !(fwhm_intensity > 0.0 && fwhm_intensity.is_finite()) {
        return Err(Error::invalid(
            "fwhm_intensity",
            format!("must be positive, got {fwhm_intensity}"),
        ));
    }
    let sigma = fwhm_to_sigma(fwhm_intensity);
    let (lo, hi) = (center - 3.0 * sigma, center + 3.0 * sigma);
    let margin = (grid.t_start() - lo).max(hi - grid.t_end());
    if margin > 0.0 {
        return Err(Error::EnvelopeExceedsGrid {
            lo,
            hi,
            grid_lo: grid.t_start(),
            grid_hi: grid.t_end(),
            margin,
        });
    }
    let inv = 1.0 / (4.0 * sigma * sigma);
    let amplitude = grid
        .times()
        .map(|t| Complex64::new((-(t - center).powi(2) * inv).exp(), 0.0))
        .collect();
    WavePacket::normalized(*grid, amplitude, center, "gaussian")
}

/// ⟨a|b⟩ = Σ a*(t)·b(t)·dt
pub fn inner_product(a: &WavePacket, b: &WavePacket) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let s: Complex64 = a
        .amplitude
        .iter()
        .zip(&b.amplitude)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid.dt())
}
