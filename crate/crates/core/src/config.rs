//! Scenario files: one JSON document per experiment with a schema version,
//! field-path diagnostics, and a resolved echo that re-reads identically.
//!
//! Times are in ns, frequencies in MHz, phases in radians. Every phase field
//! also has a `*_pi_units` twin (multiples of π); resolving a scenario
//! rewrites those into radians.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::analysis::AnalysisSpec;
use crate::detection::{ExperimentSetup, Routing};
use crate::error::{Error, Result};
use crate::grid::{TimeGrid, DEFAULT_DT, DEFAULT_HALF_SPAN};
use crate::phase::{
    ramp_detuning, read_voltage_trace, sawtooth_detuning, EomCalibration, PhaseProfile,
    DEFAULT_FALL_TIME, DEFAULT_RISE_TIME,
};
use crate::source::SourceConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Prefix of the environment variables that override run parameters.
pub const ENV_PREFIX: &str = "PHASESHAPING_";

/// Names accepted after `builtin:`.
pub const BUILTIN_SCENARIOS: [&str; 6] = [
    "ideal_hom",
    "fig2_pi_step",
    "fig3_sweep",
    "fig4a_ramp_11MHz",
    "fig4b_sawtooth_25MHz",
    "g2_reference",
];

pub fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "ideal_hom" => include_str!("../scenarios/ideal_hom.json"),
        "fig2_pi_step" => include_str!("../scenarios/fig2_pi_step.json"),
        "fig3_sweep" => include_str!("../scenarios/fig3_sweep.json"),
        "fig4a_ramp_11MHz" => include_str!("../scenarios/fig4a_ramp_11MHz.json"),
        "fig4b_sawtooth_25MHz" => include_str!("../scenarios/fig4b_sawtooth_25MHz.json"),
        "g2_reference" => include_str!("../scenarios/g2_reference.json"),
        _ => return None,
    })
}

fn default_rise() -> f64 {
    DEFAULT_RISE_TIME
}

fn default_fall() -> f64 {
    DEFAULT_FALL_TIME
}

fn default_v_pi() -> f64 {
    EomCalibration::NOMINAL_V_PI
}

/// EOM drive applied to the short-path photon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseSpec {
    #[default]
    None,
    Step {
        #[serde(default)]
        t_step_ns: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_phi: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_phi_pi_units: Option<f64>,
        #[serde(default = "default_rise")]
        rise_time_ns: f64,
    },
    Ramp {
        t_start_ns: f64,
        duration_ns: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        total_phase: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        total_phase_pi_units: Option<f64>,
    },
    Sawtooth {
        t_start_ns: f64,
        tooth_period_ns: f64,
        n_teeth: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tooth_phase: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tooth_phase_pi_units: Option<f64>,
        #[serde(default = "default_fall")]
        fall_time_ns: f64,
    },
    Detuning {
        delta_nu_mhz: f64,
        #[serde(default)]
        t_ref_ns: f64,
        t_begin_ns: f64,
        t_end_ns: f64,
    },
    Voltage {
        /// CSV with a `time_ns,volts` header, relative to the scenario file.
        trace: PathBuf,
        #[serde(default = "default_v_pi")]
        v_pi: f64,
    },
}

/// Picks the radian value out of a (radians, π units) pair.
fn radians(path: &str, rad: Option<f64>, pi_units: Option<f64>) -> Result<f64> {
    match (rad, pi_units) {
        (Some(r), None) => Ok(r),
        (None, Some(p)) => Ok(p * PI),
        (Some(_), Some(_)) => Err(Error::config(
            path,
            "give either radians or pi_units, not both",
        )),
        (None, None) => Err(Error::config(path, "missing (radians or pi_units)")),
    }
}

impl PhaseSpec {
    /// Same spec with every phase in radians.
    pub fn resolved(&self, base_dir: Option<&Path>) -> Result<PhaseSpec> {
        Ok(match self.clone() {
            PhaseSpec::Step {
                t_step_ns,
                delta_phi,
                delta_phi_pi_units,
                rise_time_ns,
            } => PhaseSpec::Step {
                t_step_ns,
                delta_phi: Some(radians("phase.delta_phi", delta_phi, delta_phi_pi_units)?),
                delta_phi_pi_units: None,
                rise_time_ns,
            },
            PhaseSpec::Ramp {
                t_start_ns,
                duration_ns,
                total_phase,
                total_phase_pi_units,
            } => PhaseSpec::Ramp {
                t_start_ns,
                duration_ns,
                total_phase: Some(radians(
                    "phase.total_phase",
                    total_phase,
                    total_phase_pi_units,
                )?),
                total_phase_pi_units: None,
            },
            PhaseSpec::Sawtooth {
                t_start_ns,
                tooth_period_ns,
                n_teeth,
                tooth_phase,
                tooth_phase_pi_units,
                fall_time_ns,
            } => PhaseSpec::Sawtooth {
                t_start_ns,
                tooth_period_ns,
                n_teeth,
                tooth_phase: Some(radians(
                    "phase.tooth_phase",
                    tooth_phase,
                    tooth_phase_pi_units,
                )?),
                tooth_phase_pi_units: None,
                fall_time_ns,
            },
            PhaseSpec::Voltage { trace, v_pi } => PhaseSpec::Voltage {
                trace: match base_dir {
                    Some(dir) if trace.is_relative() => dir.join(trace),
                    _ => trace,
                },
                v_pi,
            },
            other => other,
        })
    }

    /// Builds the profile; the spec must be resolved.
    pub fn profile(&self) -> Result<PhaseProfile> {
        let wrap = |path: &str, e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(format!("{path}.{name}"), reason)
            }
            other => other,
        };
        let unresolved = |f: &str| Error::config(format!("phase.{f}"), "spec is not resolved");
        match self {
            PhaseSpec::None => Ok(PhaseProfile::zero()),
            PhaseSpec::Step {
                t_step_ns,
                delta_phi,
                rise_time_ns,
                ..
            } => PhaseProfile::step(
                *t_step_ns,
                delta_phi.ok_or_else(|| unresolved("delta_phi"))?,
                *rise_time_ns,
            )
            .map_err(|e| wrap("phase", e)),
            PhaseSpec::Ramp {
                t_start_ns,
                duration_ns,
                total_phase,
                ..
            } => PhaseProfile::linear_ramp(
                *t_start_ns,
                *duration_ns,
                total_phase.ok_or_else(|| unresolved("total_phase"))?,
            )
            .map_err(|e| wrap("phase", e)),
            PhaseSpec::Sawtooth {
                t_start_ns,
                tooth_period_ns,
                n_teeth,
                tooth_phase,
                fall_time_ns,
                ..
            } => PhaseProfile::sawtooth(
                *t_start_ns,
                *tooth_period_ns,
                *n_teeth,
                tooth_phase.ok_or_else(|| unresolved("tooth_phase"))?,
                *fall_time_ns,
            )
            .map_err(|e| wrap("phase", e)),
            PhaseSpec::Detuning {
                delta_nu_mhz,
                t_ref_ns,
                t_begin_ns,
                t_end_ns,
            } => PhaseProfile::detuning(*delta_nu_mhz, *t_ref_ns, *t_begin_ns, *t_end_ns)
                .map_err(|e| wrap("phase", e)),
            PhaseSpec::Voltage { trace, v_pi } => {
                let cal = EomCalibration::new(*v_pi).map_err(|e| wrap("phase", e))?;
                let file = std::fs::File::open(trace).map_err(|e| {
                    Error::config("phase.trace", format!("{}: {e}", trace.display()))
                })?;
                let samples = read_voltage_trace(file)?;
                PhaseProfile::from_voltage(&samples, &cal).map_err(|e| wrap("phase", e))
            }
        }
    }

    /// Frequency shift implied by a ramp, sawtooth or detuning drive.
    pub fn implied_detuning(&self) -> Option<f64> {
        match self {
            PhaseSpec::Ramp {
                duration_ns,
                total_phase: Some(phi),
                ..
            } => Some(ramp_detuning(*phi, *duration_ns)),
            PhaseSpec::Sawtooth {
                tooth_period_ns,
                tooth_phase: Some(phi),
                ..
            } => Some(sawtooth_detuning(*phi, *tooth_period_ns)),
            PhaseSpec::Detuning { delta_nu_mhz, .. } => Some(*delta_nu_mhz),
            PhaseSpec::Step { .. } | PhaseSpec::None => Some(0.0),
            _ => None,
        }
    }

    /// Step time when the drive is a step.
    pub fn step_time(&self) -> Option<f64> {
        match self {
            PhaseSpec::Step { t_step_ns, .. } => Some(*t_step_ns),
            _ => None,
        }
    }
}

/// Quadrature grid for density exports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub dt_ns: f64,
    pub half_span_ns: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dt_ns: DEFAULT_DT,
            half_span_ns: DEFAULT_HALF_SPAN,
        }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::centered(0.0, self.half_span_ns, self.dt_ns).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                Error::config(format!("grid.{name}"), reason)
            }
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub n_trials: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            n_trials: 200_000,
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Phase list for a sweep; the scenario's step is rescaled to each value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_phi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_phi_pi_units: Option<Vec<f64>>,
    /// EOM drive voltages, converted through `v_pi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltages: Option<Vec<f64>>,
    #[serde(default = "default_v_pi")]
    pub v_pi: f64,
}

impl SweepSpec {
    /// Phase points in radians.
    pub fn phases(&self) -> Result<Vec<f64>> {
        let given = [
            self.delta_phi.is_some(),
            self.delta_phi_pi_units.is_some(),
            self.voltages.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(Error::config(
                "sweep",
                "give exactly one of delta_phi, delta_phi_pi_units, voltages",
            ));
        }
        if let Some(v) = &self.delta_phi {
            return Ok(v.clone());
        }
        if let Some(v) = &self.delta_phi_pi_units {
            return Ok(v.iter().map(|p| p * PI).collect());
        }
        let cal = EomCalibration::new(self.v_pi)
            .map_err(|e| Error::config("sweep.v_pi", e.to_string()))?;
        Ok(self
            .voltages
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|&v| cal.phase_for(v))
            .collect())
    }

    fn resolved(&self) -> Result<Self> {
        Ok(Self {
            delta_phi: Some(self.phases()?),
            delta_phi_pi_units: None,
            voltages: self.voltages.clone(),
            v_pi: self.v_pi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BeatSpec {
    /// Must agree with the drive's implied shift when both are known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_nu_mhz: Option<f64>,
}

/// Relative tolerance between a stated Δν and the one a drive implies.
pub const DETUNING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub routing: Routing,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub phase: PhaseSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beat: Option<BeatSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            routing: Routing::default(),
            source: SourceConfig::default(),
            phase: PhaseSpec::default(),
            grid: GridSpec::default(),
            analysis: AnalysisSpec::default(),
            run: RunSpec::default(),
            sweep: None,
            beat: None,
        }
    }
}

impl Scenario {
    /// Parses without resolving. Errors carry the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." {
                    "<root>".to_string()
                } else {
                    path
                },
                e.into_inner().to_string(),
            )
        })
    }

    /// Loads `builtin:NAME` or a file, then resolves and validates.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            let text = builtin_source(name).ok_or_else(|| {
                Error::config(
                    "--config",
                    format!(
                        "unknown bundled scenario `{name}` (have: {})",
                        BUILTIN_SCENARIOS.join(", ")
                    ),
                )
            })?;
            return Self::from_json(text)?.resolve(None);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)?.resolve(path.parent())
    }

    /// Converts π-unit fields to radians and validates every section.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Self> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        let out = Self {
            phase: self.phase.resolved(base_dir)?,
            sweep: self.sweep.as_ref().map(SweepSpec::resolved).transpose()?,
            ..self.clone()
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.analysis.validate()?;
        self.grid.grid()?;
        if self.run.n_trials == 0 {
            return Err(Error::config("run.n_trials", "must be positive"));
        }
        self.phase.profile()?;
        if let Some(sweep) = &self.sweep {
            sweep.phases()?;
            if !matches!(self.phase, PhaseSpec::Step { .. } | PhaseSpec::None) {
                return Err(Error::config(
                    "sweep",
                    "a phase sweep needs a `step` or `none` drive",
                ));
            }
        }
        if let Some(beat) = &self.beat {
            self.beat_detuning_with(beat.delta_nu_mhz)?;
        }
        Ok(())
    }

    /// Δν for the beat analysis: the stated value, the drive's implied shift,
    /// or both when they agree.
    pub fn beat_detuning_with(&self, stated: Option<f64>) -> Result<f64> {
        let implied = self.phase.implied_detuning();
        match (stated, implied) {
            (Some(s), _) if !(s >= 0.0 && s.is_finite()) => {
                Err(Error::config("beat.delta_nu_mhz", "must be finite and ≥ 0"))
            }
            (Some(s), Some(i))
                if (s - i.abs()).abs() > DETUNING_TOL * s.max(1.0)
                    && !self.implied_is_trivial() =>
            {
                Err(Error::config(
                    "beat.delta_nu_mhz",
                    format!("{s} MHz disagrees with the drive's {:.6} MHz", i.abs()),
                ))
            }
            (Some(s), _) => Ok(s),
            (None, Some(i)) => Ok(i.abs()),
            (None, None) => Err(Error::config(
                "beat.delta_nu_mhz",
                "required for this drive",
            )),
        }
    }

    fn implied_is_trivial(&self) -> bool {
        matches!(self.phase, PhaseSpec::None | PhaseSpec::Step { .. })
    }

    pub fn setup(&self) -> Result<ExperimentSetup> {
        Ok(ExperimentSetup {
            source: self.source.clone(),
            eom_phase: self.phase.profile()?,
            routing: self.routing,
        })
    }

    /// The scenario with its step drive replaced by one of size `delta_phi`.
    pub fn with_step(&self, delta_phi: f64) -> Self {
        let (t_step_ns, rise_time_ns) = match self.phase {
            PhaseSpec::Step {
                t_step_ns,
                rise_time_ns,
                ..
            } => (t_step_ns, rise_time_ns),
            _ => (self.analysis.step_time_ns, DEFAULT_RISE_TIME),
        };
        Self {
            phase: PhaseSpec::Step {
                t_step_ns,
                delta_phi: Some(delta_phi),
                delta_phi_pi_units: None,
                rise_time_ns,
            },
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serialises");
        s.push('\n');
        s
    }

    /// Applies overrides from `PHASESHAPING_SEED`, `PHASESHAPING_TRIALS` and
    /// `PHASESHAPING_OUT` given by `lookup`.
    pub fn apply_env<F>(&mut self, lookup: F) -> Result<()>
    where
        F: Fn(&str) -> Option<String>,
    {
        let key = |k: &str| format!("{ENV_PREFIX}{k}");
        if let Some(v) = lookup(&key("SEED")) {
            self.run.seed = v.parse().map_err(|_| {
                Error::config(key("SEED"), format!("`{v}` is not an unsigned integer"))
            })?;
        }
        if let Some(v) = lookup(&key("TRIALS")) {
            self.run.n_trials = v.parse().map_err(|_| {
                Error::config(key("TRIALS"), format!("`{v}` is not an unsigned integer"))
            })?;
        }
        if let Some(v) = lookup(&key("OUT")) {
            self.run.out_dir = PathBuf::from(v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_resolves() {
        for name in BUILTIN_SCENARIOS {
            let s = Scenario::load(&format!("builtin:{name}")).unwrap();
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn echo_round_trips() {
        for name in BUILTIN_SCENARIOS {
            let s = Scenario::load(&format!("builtin:{name}")).unwrap();
            let again = Scenario::from_json(&s.to_json())
                .unwrap()
                .resolve(None)
                .unwrap();
            assert_eq!(s, again);
        }
    }

    #[test]
    fn pi_units_become_radians() {
        let s = Scenario::load("builtin:fig2_pi_step").unwrap();
        match s.phase {
            PhaseSpec::Step {
                delta_phi,
                delta_phi_pi_units,
                ..
            } => {
                assert_eq!(delta_phi, Some(PI));
                assert_eq!(delta_phi_pi_units, None);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_reports_its_path() {
        let err =
            Scenario::from_json(r#"{"schema_version":1,"source":{"p_clik":0.2}}"#).unwrap_err();
        match err {
            Error::Config { path, .. } => assert!(path.starts_with("source"), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_values_are_rejected_with_paths() {
        let s = Scenario::from_json(r#"{"schema_version":1,"source":{"p_click":1.5}}"#).unwrap();
        match s.resolve(None).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "source.p_click"),
            other => panic!("unexpected {other:?}"),
        }
        let s = Scenario::from_json(r#"{"schema_version":7}"#).unwrap();
        assert!(s.resolve(None).unwrap_err().is_config_error());
        let s = Scenario::from_json(
            r#"{"schema_version":1,"phase":{"kind":"step","delta_phi":1,"delta_phi_pi_units":1}}"#,
        )
        .unwrap();
        assert!(s.resolve(None).is_err());
    }

    #[test]
    fn beat_detuning_from_drives() {
        let ramp = Scenario::load("builtin:fig4a_ramp_11MHz").unwrap();
        assert!((ramp.beat_detuning_with(None).unwrap() - 11.0).abs() < 1e-9);
        let saw = Scenario::load("builtin:fig4b_sawtooth_25MHz").unwrap();
        assert!((saw.beat_detuning_with(None).unwrap() - 25.0).abs() < 1e-9);
        assert!(ramp.beat_detuning_with(Some(12.0)).is_err());
        assert_eq!(ramp.beat_detuning_with(Some(11.0)).unwrap(), 11.0);
    }

    #[test]
    fn env_overrides() {
        let mut s = Scenario::default();
        s.apply_env(|k| match k {
            "PHASESHAPING_SEED" => Some("42".into()),
            "PHASESHAPING_TRIALS" => Some("10".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!((s.run.seed, s.run.n_trials), (42, 10));
        assert!(s.apply_env(|_| Some("x".into())).is_err());
    }
}
