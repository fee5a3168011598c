//! Pulsed single-photon stream, polarising-beam-splitter routing and
//! arrival-slot bookkeeping at the recombining beam splitter.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{gaussian_envelope, TimeGrid, WavePacket};
use crate::{fwhm_to_sigma, sigma_to_fwhm, MHZ_NS};

/// Photon generation rate (MHz).
pub const NOMINAL_REP_RATE_MHZ: f64 = 0.74;
/// Intensity FWHM of the emitted wave packets (ns).
pub const NOMINAL_FWHM_NS: f64 = 150.0;
/// Detector timing resolution (ns).
pub const NOMINAL_RESOLUTION_NS: f64 = 2.0;

/// Calibrated operating point, produced by `phaseshaping calibrate` with
/// `p_click = 0.1`, `dark_rate_cps = 50` and `amp_jitter = 0.05` held fixed.
pub mod calibrated {
    /// Chosen: detected single-photon probability per trial.
    pub const P_CLICK: f64 = 0.1;
    /// Fitted: 95 % g² central-peak suppression.
    pub const P_TWO_PHOTON: f64 = 2.394_926_588_509_262_4e-4;
    /// Fitted: temporal-half ratios, integrated ratio and sweep visibility.
    pub const SIGMA_NU_MHZ: f64 = 0.953;
    /// Fitted together with `SIGMA_NU_MHZ`.
    pub const LAMBDA: f64 = 0.953_496_173_184_281_8;
    /// Chosen: relative std of the envelope width.
    pub const AMP_JITTER: f64 = 0.05;
    /// Chosen: per-detector dark-count rate (counts/s).
    pub const DARK_RATE_CPS: f64 = 50.0;
}

/// Per-path survival probability between the PBS and the NPBS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSurvival {
    pub short: f64,
    pub long: f64,
}

impl Default for PathSurvival {
    fn default() -> Self {
        Self {
            short: 1.0,
            long: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub rep_rate_mhz: f64,
    pub fwhm_ns: f64,
    /// Probability of exactly one detectable photon per trial.
    pub p_click: f64,
    /// Probability of two photons (multi-atom event) per trial.
    pub p_two_photon: f64,
    pub sigma_nu_mhz: f64,
    pub amp_jitter: f64,
    pub dark_rate_cps: f64,
    pub det_jitter_ns: f64,
    pub timing_resolution_ns: f64,
    pub lambda: f64,
    pub path_survival: PathSurvival,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            rep_rate_mhz: NOMINAL_REP_RATE_MHZ,
            fwhm_ns: NOMINAL_FWHM_NS,
            p_click: calibrated::P_CLICK,
            p_two_photon: calibrated::P_TWO_PHOTON,
            sigma_nu_mhz: calibrated::SIGMA_NU_MHZ,
            amp_jitter: calibrated::AMP_JITTER,
            dark_rate_cps: calibrated::DARK_RATE_CPS,
            det_jitter_ns: 0.0,
            timing_resolution_ns: NOMINAL_RESOLUTION_NS,
            lambda: calibrated::LAMBDA,
            path_survival: PathSurvival::default(),
        }
    }
}

impl SourceConfig {
    /// Perfect source and detectors: single photons only, no jitter, no
    /// background, full mode overlap, continuous time tags.
    pub fn ideal() -> Self {
        Self {
            p_two_photon: 0.0,
            sigma_nu_mhz: 0.0,
            amp_jitter: 0.0,
            dark_rate_cps: 0.0,
            timing_resolution_ns: 0.0,
            lambda: 1.0,
            ..Self::default()
        }
    }

    /// Repetition period in ns; the delay fibre is cut to match it.
    pub fn rep_period_ns(&self) -> f64 {
        1e3 / self.rep_rate_mhz
    }

    pub fn sigma_t(&self) -> f64 {
        fwhm_to_sigma(self.fwhm_ns)
    }

    /// Mean number of photons per trial.
    pub fn mean_photons(&self) -> f64 {
        self.p_click + 2.0 * self.p_two_photon
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::config(
                    format!("source.{name}"),
                    format!("must lie in [0, 1], got {x}"),
                ))
            }
        };
        let nonneg = |name: &str, x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    format!("source.{name}"),
                    format!("must be finite and ≥ 0, got {x}"),
                ))
            }
        };
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    format!("source.{name}"),
                    format!("must be positive, got {x}"),
                ))
            }
        };
        positive("rep_rate_mhz", self.rep_rate_mhz)?;
        positive("fwhm_ns", self.fwhm_ns)?;
        prob("p_click", self.p_click)?;
        prob("p_two_photon", self.p_two_photon)?;
        if self.p_click + self.p_two_photon > 1.0 {
            return Err(Error::config(
                "source.p_two_photon",
                "p_click + p_two_photon must not exceed 1",
            ));
        }
        nonneg("sigma_nu_mhz", self.sigma_nu_mhz)?;
        nonneg("amp_jitter", self.amp_jitter)?;
        nonneg("dark_rate_cps", self.dark_rate_cps)?;
        nonneg("det_jitter_ns", self.det_jitter_ns)?;
        nonneg("timing_resolution_ns", self.timing_resolution_ns)?;
        prob("lambda", self.lambda)?;
        prob("path_survival.short", self.path_survival.short)?;
        prob("path_survival.long", self.path_survival.long)?;
        Ok(())
    }
}

/// Independent random streams of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum RngStream {
    Emission = 1,
    Detection = 2,
    Dark = 3,
    Sampling = 4,
}

/// Counter-based stream: the key is (seed, purpose), the stream id is the
/// trial or slot index. Draws for index `k` never depend on other indices.
pub fn indexed_rng(seed: u64, purpose: RngStream, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Gaussian temporal mode with a carrier detuning, evaluated in closed form.
/// Time is measured from the nominal packet centre of the photon's slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonMode {
    pub center: f64,
    /// Standard deviation of |ζ|² (ns).
    pub sigma: f64,
    pub detuning_mhz: f64,
}

impl PhotonMode {
    #[inline]
    pub fn intensity(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.sigma;
        (-0.5 * x * x).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    #[inline]
    pub fn amplitude(&self, t: f64) -> Complex64 {
        let phase = 2.0 * PI * self.detuning_mhz * MHZ_NS * (t - self.center);
        Complex64::from_polar(self.intensity(t).sqrt(), phase)
    }

    /// Detection time drawn from |ζ|².
    pub fn sample_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.center + self.sigma * z
    }

    /// The same mode sampled on a grid.
    pub fn packet(&self, grid: &TimeGrid) -> Result<WavePacket> {
        Ok(
            gaussian_envelope(grid, self.center, sigma_to_fwhm(self.sigma))?
                .apply_detuning(self.detuning_mhz)
                .with_label("photon"),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    /// Through the EOM.
    Short,
    /// Through the one-period delay fibre.
    Long,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonInstance {
    pub trial: u64,
    pub mode: PhotonMode,
    pub path: Option<Path>,
    /// Second photon of a multi-photon trial.
    pub extra: bool,
}

impl PhotonInstance {
    /// Index of the repetition period in which the photon reaches the NPBS.
    pub fn arrival_slot(&self) -> Option<u64> {
        self.path.map(|p| match p {
            Path::Short => self.trial,
            Path::Long => self.trial + 1,
        })
    }
}

/// Zero, one or two photons for one trial, with shot-to-shot width and
/// frequency jitter drawn independently per photon.
pub fn sample_trial<R: Rng + ?Sized>(
    cfg: &SourceConfig,
    trial: u64,
    rng: &mut R,
) -> Vec<PhotonInstance> {
    let u: f64 = rng.random();
    let n = if u < cfg.p_two_photon {
        2
    } else if u < cfg.p_two_photon + cfg.p_click {
        1
    } else {
        0
    };
    let sigma0 = cfg.sigma_t();
    (0..n)
        .map(|k| {
            let zw: f64 = rng.sample(StandardNormal);
            let zn: f64 = rng.sample(StandardNormal);
            PhotonInstance {
                trial,
                mode: PhotonMode {
                    center: 0.0,
                    sigma: sigma0 * (1.0 + cfg.amp_jitter * zw).max(0.05),
                    detuning_mhz: cfg.sigma_nu_mhz * zn,
                },
                path: None,
                extra: k == 1,
            }
        })
        .collect()
}

/// Random 50/50 routing at the polarising beam splitter.
pub fn route_pbs<R: Rng + ?Sized>(photon: PhotonInstance, rng: &mut R) -> PhotonInstance {
    let path = if rng.random_bool(0.5) {
        Path::Short
    } else {
        Path::Long
    };
    PhotonInstance {
        path: Some(path),
        ..photon
    }
}

/// Photons reaching the NPBS in one repetition slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalGroup {
    pub slot: u64,
    pub photons: Vec<PhotonInstance>,
    /// Photons dropped because the slot held more than two.
    pub dropped: usize,
}

impl ArrivalGroup {
    pub fn is_pair(&self) -> bool {
        self.photons.len() == 2
    }

    /// A pair entering through different input ports.
    pub fn is_interfering(&self) -> bool {
        self.is_pair() && self.photons[0].path != self.photons[1].path
    }
}

/// Groups routed photons by arrival slot. Slots with more than two photons
/// keep the first two in (trial, extra) order.
pub fn assemble_pairs(stream: &[PhotonInstance]) -> Vec<ArrivalGroup> {
    let mut keyed: Vec<(u64, &PhotonInstance)> = stream
        .iter()
        .map(|p| {
            (
                p.arrival_slot()
                    .expect("photon must be routed before pairing"),
                p,
            )
        })
        .collect();
    keyed.sort_by_key(|(slot, p)| (*slot, p.trial, p.extra));
    let mut groups: Vec<ArrivalGroup> = Vec::new();
    for (slot, p) in keyed {
        match groups.last_mut() {
            Some(g) if g.slot == slot => {
                if g.photons.len() < 2 {
                    g.photons.push(p.clone());
                } else {
                    g.dropped += 1;
                }
            }
            _ => groups.push(ArrivalGroup {
                slot,
                photons: vec![p.clone()],
                dropped: 0,
            }),
        }
    }
    groups
}
