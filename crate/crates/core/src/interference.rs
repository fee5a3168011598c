//! Two-photon detection statistics behind a balanced beam splitter.
//!
//! For input modes `a` (port A) and `b` (port B) with residual overlap λ in
//! the unresolved degrees of freedom, the ordered detection densities are
//!
//! ```text
//! p_cross(t1,t2) = ¼[|a1|²|b2|² + |b1|²|a2|² − 2λ²·Re(a1 b2 a2* b1*)]
//! p_same (t1,t2) = ¼[|a1|²|b2|² + |b1|²|a2|² + 2λ²·Re(a1 b2 a2* b1*)]
//! ```
//!
//! where `p_cross` is the density for port C at t1 and port D at t2, and
//! `p_same` aggregates CC and DD. When `b = a·e^{iφ}` and λ = 1 the cross-port
//! fraction at (t1,t2) reduces to sin²((φ(t2) − φ(t1))/2).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::grid::{TimeGrid, WavePacket};

/// Probability of opposite-port detection given a phase difference accumulated
/// between the two detection times.
pub fn conditional_cross_prob(delta_phi: f64) -> f64 {
    (delta_phi / 2.0).sin().powi(2)
}

/// Cross-port fraction for one pair of sampled amplitudes.
///
/// `a1 = a(t1)` etc. Returns ½ where both orderings have vanishing weight.
#[inline]
pub fn cross_fraction(
    a1: Complex64,
    a2: Complex64,
    b1: Complex64,
    b2: Complex64,
    lambda: f64,
) -> f64 {
    let s = a1.norm_sqr() * b2.norm_sqr() + b1.norm_sqr() * a2.norm_sqr();
    if !(s > 0.0) {
        return 0.5;
    }
    let x = (a1 * b2 * a2.conj() * b1.conj()).re;
    (0.5 * (1.0 - 2.0 * lambda * lambda * x / s)).clamp(0.0, 1.0)
}

/// Dense (t1,t2) densities on a shared grid, row-major in t1.
#[derive(Debug, Clone)]
pub struct JointDensity {
    grid: TimeGrid,
    p_cross: Vec<f64>,
    p_same: Vec<f64>,
    lambda: f64,
}

impl JointDensity {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn p_cross(&self) -> &[f64] {
        &self.p_cross
    }

    pub fn p_same(&self) -> &[f64] {
        &self.p_same
    }

    #[inline]
    pub fn cross_at(&self, i: usize, j: usize) -> f64 {
        self.p_cross[i * self.n() + j]
    }

    #[inline]
    pub fn same_at(&self, i: usize, j: usize) -> f64 {
        self.p_same[i * self.n() + j]
    }

    /// p_cross / (p_cross + p_same) at a cell, `None` where both vanish.
    pub fn conditional_cross(&self, i: usize, j: usize) -> Option<f64> {
        let (c, s) = (self.cross_at(i, j), self.same_at(i, j));
        (c + s > 0.0).then(|| c / (c + s))
    }

    fn cell_area(&self) -> f64 {
        self.grid.dt() * self.grid.dt()
    }

    pub fn total_mass(&self) -> f64 {
        let s: f64 = self
            .p_cross
            .iter()
            .zip(&self.p_same)
            .map(|(c, s)| c + s)
            .sum();
        s * self.cell_area()
    }

    pub fn cross_mass(&self) -> f64 {
        self.p_cross.iter().sum::<f64>() * self.cell_area()
    }

    pub fn same_mass(&self) -> f64 {
        self.p_same.iter().sum::<f64>() * self.cell_area()
    }

    /// ∫∫ p_cross over the cells whose centres satisfy `region`, plus the
    /// number of such cells.
    pub fn region_cross_mass<F>(&self, region: F) -> (f64, usize)
    where
        F: Fn(f64, f64) -> bool,
    {
        let n = self.n();
        let mut mass = 0.0;
        let mut cells = 0;
        for i in 0..n {
            let t1 = self.grid.time(i);
            let row = &self.p_cross[i * n..(i + 1) * n];
            for (j, p) in row.iter().enumerate() {
                if region(t1, self.grid.time(j)) {
                    mass += p;
                    cells += 1;
                }
            }
        }
        (mass * self.cell_area(), cells)
    }

    /// Cross-port density marginalised onto τ = t2 − t1, sampled at k·dt.
    pub fn cross_tau_marginal(&self) -> TauMarginal {
        let n = self.n();
        let dt = self.grid.dt();
        let values = (0..2 * n - 1)
            .map(|m| {
                let k = m as isize - (n as isize - 1);
                let lo = (-k).max(0) as usize;
                let hi = (n as isize - k.max(0)) as usize;
                (lo..hi)
                    .map(|i| self.cross_at(i, (i as isize + k) as usize))
                    .sum::<f64>()
                    * dt
            })
            .collect();
        TauMarginal {
            dt,
            half: n - 1,
            values,
        }
    }
}

/// Density on τ sampled at integer multiples of `dt`.
#[derive(Debug, Clone)]
pub struct TauMarginal {
    dt: f64,
    half: usize,
    values: Vec<f64>,
}

impl TauMarginal {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn taus(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |m| (m as f64 - self.half as f64) * self.dt)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation, zero outside the sampled range.
    pub fn at(&self, tau: f64) -> f64 {
        let x = tau / self.dt + self.half as f64;
        if x < 0.0 || x > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        match self.values.get(k + 1) {
            Some(next) => self.values[k] * (1.0 - f) + next * f,
            None => self.values[k],
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dt
    }

    /// Full width at half maximum from the samples.
    pub fn fwhm(&self) -> f64 {
        let (imax, &peak) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let half = peak / 2.0;
        let t = |m: usize| (m as f64 - self.half as f64) * self.dt;
        let mut right = f64::NAN;
        for m in imax..self.values.len() - 1 {
            if self.values[m + 1] < half {
                let f = (self.values[m] - half) / (self.values[m] - self.values[m + 1]);
                right = t(m) + f * self.dt;
                break;
            }
        }
        let mut left = f64::NAN;
        for m in (1..=imax).rev() {
            if self.values[m - 1] < half {
                let f = (self.values[m] - half) / (self.values[m] - self.values[m - 1]);
                left = t(m) - f * self.dt;
                break;
            }
        }
        right - left
    }
}

fn check_inputs(a: &WavePacket, b: &WavePacket, lambda: f64) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    for wp in [a, b] {
        if !wp.is_normalized() {
            return Err(Error::NotNormalized {
                label: wp.label().to_owned(),
                norm: wp.norm_sq(),
            });
        }
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(
            "lambda",
            format!("must lie in [0,1], got {lambda}"),
        ));
    }
    Ok(())
}

/// Joint detection densities for photons `a` (port A) and `b` (port B).
pub fn joint_densities(a: &WavePacket, b: &WavePacket, lambda: f64) -> Result<JointDensity> {
    joint_densities_with(a, b, lambda, Execution::default())
}

pub fn joint_densities_with(
    a: &WavePacket,
    b: &WavePacket,
    lambda: f64,
    exec: Execution,
) -> Result<JointDensity> {
    check_inputs(a, b, lambda)?;
    let n = a.grid().len();
    let (aa, bb) = (a.amplitudes(), b.amplitudes());
    let l2 = lambda * lambda;
    let mut cross = vec![0.0; n * n];
    let mut same = vec![0.0; n * n];
    exec::fill_chunks(exec, &mut cross, n, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let (s, x) = pair_terms(aa[i], aa[j], bb[i], bb[j]);
            *out = (0.25 * (s - 2.0 * l2 * x)).max(0.0);
        }
    });
    exec::fill_chunks(exec, &mut same, n, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let (s, x) = pair_terms(aa[i], aa[j], bb[i], bb[j]);
            *out = (0.25 * (s + 2.0 * l2 * x)).max(0.0);
        }
    });
    Ok(JointDensity {
        grid: *a.grid(),
        p_cross: cross,
        p_same: same,
        lambda,
    })
}

#[inline]
fn pair_terms(a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> (f64, f64) {
    let s = a1.norm_sqr() * b2.norm_sqr() + b1.norm_sqr() * a2.norm_sqr();
    let x = (a1 * b2 * a2.conj() * b1.conj()).re;
    (s, x)
}

/// Reference densities for distinguishable photons (λ = 0).
pub fn noninterfering_density(a: &WavePacket, b: &WavePacket) -> Result<JointDensity> {
    joint_densities(a, b, 0.0)
}

/// Cross-port mass of `jd` inside `region` relative to that of `reference`.
pub fn region_rate_ratio<F>(jd: &JointDensity, reference: &JointDensity, region: F) -> Result<f64>
where
    F: Fn(f64, f64) -> bool,
{
    if jd.grid != reference.grid {
        return Err(Error::GridMismatch);
    }
    let (num, cells) = jd.region_cross_mass(&region);
    if cells == 0 {
        return Err(Error::EmptyRegion);
    }
    let (den, _) = reference.region_cross_mass(&region);
    if !(den > 0.0) {
        return Err(Error::EmptyRegion);
    }
    Ok(num / den)
}

/// Expected cross-port coincidences vs detection-time difference for two
/// photons detuned by `delta_nu` MHz: R(τ) = 2·N(τ)·sin²(π·Δν·τ).
pub fn predict_beat_curve<F>(delta_nu: f64, ref_tau_marginal: F) -> impl Fn(f64) -> f64
where
    F: Fn(f64) -> f64,
{
    move |tau| {
        2.0 * ref_tau_marginal(tau)
            * conditional_cross_prob(2.0 * std::f64::consts::PI * delta_nu * crate::MHZ_NS * tau)
    }
}
