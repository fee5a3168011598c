//! Electro-optic modulator drive waveforms as piecewise-affine phase profiles.
//!
//! Phases are stored unwrapped. Outside the segment range the profile holds
//! its boundary value, so a ramp that ends stays at its final phase.

use std::f64::consts::PI;
use std::io::Read;

use crate::error::{Error, Result};
use crate::MHZ_NS;

/// Default rise time (ns) of a phase step.
pub const DEFAULT_RISE_TIME: f64 = 10.0;
/// Default fall time (ns) of a sawtooth tooth.
pub const DEFAULT_FALL_TIME: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t_begin: f64,
    t_end: f64,
    phi_begin: f64,
    phi_end: f64,
}

impl Segment {
    #[inline]
    fn at(&self, t: f64) -> f64 {
        let span = self.t_end - self.t_begin;
        if span <= 0.0 {
            return self.phi_end;
        }
        self.phi_begin + (self.phi_end - self.phi_begin) * (t - self.t_begin) / span
    }
}

/// φ(t) in radians, piecewise affine over contiguous segments.
///
/// A zero-length segment encodes a jump; at a jump the profile is
/// right-continuous.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseProfile {
    segments: Vec<Segment>,
}

impl PhaseProfile {
    pub fn zero() -> Self {
        Self::default()
    }

    fn from_segments(segments: Vec<Segment>) -> Self {
        debug_assert!(segments.windows(2).all(|w| w[0].t_end == w[1].t_begin));
        debug_assert!(segments.iter().all(|s| s.t_end >= s.t_begin));
        Self { segments }
    }

    /// Voltage step of height `delta_phi` centred on `t_step`, rising linearly
    /// over `rise_time`.
    pub fn step(t_step: f64, delta_phi: f64, rise_time: f64) -> Result<Self> {
        if !(rise_time >= 0.0 && rise_time.is_finite()) {
            return Err(Error::invalid("rise_time", "must be finite and ≥ 0"));
        }
        check_finite("t_step", t_step)?;
        check_finite("delta_phi", delta_phi)?;
        Ok(Self::from_segments(vec![Segment {
            t_begin: t_step - rise_time / 2.0,
            t_end: t_step + rise_time / 2.0,
            phi_begin: 0.0,
            phi_end: delta_phi,
        }]))
    }

    /// Phase ramp from 0 to `total_phase` over `[t_start, t_start + duration]`.
    pub fn linear_ramp(t_start: f64, duration: f64, total_phase: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        check_finite("t_start", t_start)?;
        check_finite("total_phase", total_phase)?;
        Ok(Self::from_segments(vec![Segment {
            t_begin: t_start,
            t_end: t_start + duration,
            phi_begin: 0.0,
            phi_end: total_phase,
        }]))
    }

    /// Serrodyne drive: `n_teeth` teeth, each rising to `tooth_phase` over
    /// `tooth_period − fall_time` and dropping back to 0 over `fall_time`.
    pub fn sawtooth(
        t_start: f64,
        tooth_period: f64,
        n_teeth: usize,
        tooth_phase: f64,
        fall_time: f64,
    ) -> Result<Self> {
        if !(tooth_period > 0.0 && tooth_period.is_finite()) {
            return Err(Error::invalid("tooth_period", "must be positive"));
        }
        if !(fall_time >= 0.0 && fall_time < tooth_period) {
            return Err(Error::invalid(
                "fall_time",
                format!("must lie in [0, {tooth_period})"),
            ));
        }
        check_finite("t_start", t_start)?;
        check_finite("tooth_phase", tooth_phase)?;
        let mut segments = Vec::with_capacity(2 * n_teeth);
        for k in 0..n_teeth {
            let t0 = t_start + k as f64 * tooth_period;
            let top = t0 + tooth_period - fall_time;
            segments.push(Segment {
                t_begin: t0,
                t_end: top,
                phi_begin: 0.0,
                phi_end: tooth_phase,
            });
            segments.push(Segment {
                t_begin: top,
                t_end: t0 + tooth_period,
                phi_begin: tooth_phase,
                phi_end: 0.0,
            });
        }
        Ok(Self::from_segments(segments))
    }

    /// Unbounded-looking carrier shift 2π·Δν·(t − t_ref), realised over
    /// `[t_begin, t_end]`.
    pub fn detuning(delta_nu: f64, t_ref: f64, t_begin: f64, t_end: f64) -> Result<Self> {
        check_finite("delta_nu", delta_nu)?;
        if !(t_end > t_begin) {
            return Err(Error::invalid("t_end", "must exceed t_begin"));
        }
        let w = 2.0 * PI * delta_nu * MHZ_NS;
        Ok(Self::from_segments(vec![Segment {
            t_begin,
            t_end,
            phi_begin: w * (t_begin - t_ref),
            phi_end: w * (t_end - t_ref),
        }]))
    }

    /// Phase from a sampled drive voltage, φ = π·V/V_π, linearly interpolated.
    pub fn from_voltage(trace: &[(f64, f64)], cal: &EomCalibration) -> Result<Self> {
        if trace.is_empty() {
            return Err(Error::invalid("trace", "no samples"));
        }
        if trace.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("trace", "non-finite sample"));
        }
        if trace.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("trace", "times must be strictly increasing"));
        }
        let phi = |v: f64| cal.phase_for(v);
        if trace.len() == 1 {
            let (t, v) = trace[0];
            return Ok(Self::from_segments(vec![Segment {
                t_begin: t,
                t_end: t,
                phi_begin: phi(v),
                phi_end: phi(v),
            }]));
        }
        Ok(Self::from_segments(
            trace
                .windows(2)
                .map(|w| Segment {
                    t_begin: w[0].0,
                    t_end: w[1].0,
                    phi_begin: phi(w[0].1),
                    phi_end: phi(w[1].1),
                })
                .collect(),
        ))
    }

    /// φ(t), right-continuous at jumps.
    pub fn eval(&self, t: f64) -> f64 {
        let Some(first) = self.segments.first() else {
            return 0.0;
        };
        let idx = self.segments.partition_point(|s| s.t_begin <= t);
        if idx == 0 {
            return first.phi_begin;
        }
        let seg = &self.segments[idx - 1];
        if t < seg.t_end {
            seg.at(t)
        } else {
            seg.phi_end
        }
    }

    /// Left limit φ(t⁻).
    pub fn eval_left(&self, t: f64) -> f64 {
        let Some(first) = self.segments.first() else {
            return 0.0;
        };
        let idx = self.segments.partition_point(|s| s.t_begin < t);
        if idx == 0 {
            return first.phi_begin;
        }
        let seg = &self.segments[idx - 1];
        if t <= seg.t_end {
            seg.at(t)
        } else {
            seg.phi_end
        }
    }

    /// Pointwise sum of two profiles.
    pub fn add(&self, other: &PhaseProfile) -> PhaseProfile {
        let mut breaks: Vec<f64> = self
            .segments
            .iter()
            .chain(&other.segments)
            .flat_map(|s| [s.t_begin, s.t_end])
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let right = |t| self.eval(t) + other.eval(t);
        let left = |t| self.eval_left(t) + other.eval_left(t);
        let mut segments = Vec::new();
        for (k, &b) in breaks.iter().enumerate() {
            let (l, r) = (left(b), right(b));
            if l != r {
                segments.push(Segment {
                    t_begin: b,
                    t_end: b,
                    phi_begin: l,
                    phi_end: r,
                });
            }
            if let Some(&next) = breaks.get(k + 1) {
                segments.push(Segment {
                    t_begin: b,
                    t_end: next,
                    phi_begin: r,
                    phi_end: left(next),
                });
            }
        }
        if segments.is_empty() {
            if let Some(&b) = breaks.first() {
                let v = right(b);
                segments.push(Segment {
                    t_begin: b,
                    t_end: b,
                    phi_begin: v,
                    phi_end: v,
                });
            }
        }
        PhaseProfile::from_segments(segments)
    }

    pub fn negated(&self) -> PhaseProfile {
        PhaseProfile::from_segments(
            self.segments
                .iter()
                .map(|s| Segment {
                    phi_begin: -s.phi_begin,
                    phi_end: -s.phi_end,
                    ..*s
                })
                .collect(),
        )
    }

    /// True when φ vanishes everywhere (to `tol`).
    pub fn is_zero(&self, tol: f64) -> bool {
        self.segments
            .iter()
            .all(|s| s.phi_begin.abs() <= tol && s.phi_end.abs() <= tol)
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }
}

fn check_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite"))
    }
}

/// Frequency shift (MHz) implied by a linear ramp.
pub fn ramp_detuning(total_phase: f64, duration: f64) -> f64 {
    total_phase / (2.0 * PI * duration * MHZ_NS)
}

/// Effective frequency shift (MHz) of a sawtooth; exact modulo 2π when the
/// tooth height is 2π.
pub fn sawtooth_detuning(tooth_phase: f64, tooth_period: f64) -> f64 {
    ramp_detuning(tooth_phase, tooth_period)
}

/// Linear EOM response: `v_pi` volts give a π shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EomCalibration {
    v_pi: f64,
}

impl EomCalibration {
    /// Measured π-voltage of the modulator.
    pub const NOMINAL_V_PI: f64 = 3.60;

    pub fn new(v_pi: f64) -> Result<Self> {
        if !(v_pi > 0.0 && v_pi.is_finite()) {
            return Err(Error::invalid("v_pi", "must be positive"));
        }
        Ok(Self { v_pi })
    }

    pub fn v_pi(&self) -> f64 {
        self.v_pi
    }

    pub fn phase_for(&self, volts: f64) -> f64 {
        PI * volts / self.v_pi
    }

    pub fn voltage_for(&self, phase: f64) -> f64 {
        phase * self.v_pi / PI
    }
}

impl Default for EomCalibration {
    fn default() -> Self {
        Self {
            v_pi: Self::NOMINAL_V_PI,
        }
    }
}

/// Reads a `time_ns,volts` CSV with a header row.
pub fn read_voltage_trace<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() != 2 || headers.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `time_ns,volts`".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |k: usize| -> Result<f64> {
            let s = rec.get(k).unwrap_or("");
            let x: f64 = s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse `{s}` as a number"),
            })?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Parse {
                    line,
                    message: "non-finite value".into(),
                })
            }
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}
