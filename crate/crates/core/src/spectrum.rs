// SPDX-License-Identifier: Apache-2.0

//! Closed-form mirror displacement spectrum, effective mechanical response and
//! effective temperature.
//!
//! The mirror sees a frequency-dependent spring and damping from the cavity:
//!
//! ```text
//! chi^-1(w)  = m (W_eff^2 - w^2) - i w G_eff
//! W_eff^2    = W^2 - C hbar g'^2 d'' (kappa^2 + d'^2 - w^2) / (m D(w))
//! G_eff      = m gamma_m + 4 hbar g'^2 d'' kappa / D(w)
//! D(w)       = (kappa^2 + d'^2 - w^2)^2 + 4 kappa^2 w^2
//! S_q(w)     = |chi|^2 { hbar m gamma_m f(w) + R hbar^2 kappa g'^2 (w^2 + kappa^2 + d^2) / D(w) }
//! ```
//!
//! [`Convention::Normalized`] uses `C = R = 2`, the constants for which the
//! closed form coincides with the exact linear response without Kerr term.
//! [`Convention::Literal`] uses `C = R = 4`, drops the `1/m` in `W_eff^2` and the
//! second `hbar` in the noise term.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift_matrix, numeric_modes};
use crate::error::{Error, Result};
use crate::model::{derive_quantities, DerivedQuantities, SystemParams};
use crate::quad::{adaptive_simpson, Quadrature};
use crate::steady::SteadyState;
use crate::verification::oracle::Oracle;

/// Constants used in the closed-form response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Constants fixed by the exact linear response without Kerr medium.
    #[default]
    Normalized,
    /// Spring and noise constants 4, mass-weighted damping.
    Literal,
}

impl std::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Convention::Normalized),
            "literal" => Ok(Convention::Literal),
            other => Err(Error::Config(format!("convention: expected `normalized` or `literal`, got `{other}`"))),
        }
    }
}

/// Effective mechanical frequency and damping at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveResponse {
    /// `W_eff^2`; may be negative.
    pub omega_eff_sq: f64,
    /// In [`Convention::Normalized`] a rate; in [`Convention::Literal`] it
    /// carries the mass factor of `m gamma_m`.
    pub gamma_eff: f64,
}

impl EffectiveResponse {
    /// `sign(W_eff^2) sqrt(|W_eff^2|)`.
    pub fn omega_eff(&self) -> f64 {
        self.omega_eff_sq.signum() * self.omega_eff_sq.abs().sqrt()
    }
}

/// Closed-form spectrum on one steady-state branch.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForm {
    pub params: SystemParams,
    pub derived: DerivedQuantities,
    pub convention: Convention,
}

impl ClosedForm {
    pub fn new(p: &SystemParams, s: &SteadyState, convention: Convention) -> Self {
        ClosedForm { params: *p, derived: derive_quantities(p, s), convention }
    }

    fn denominator(&self, w: f64) -> f64 {
        let k2 = self.params.kappa * self.params.kappa;
        let x = k2 + self.derived.delta_prime_sq - w * w;
        x * x + 4.0 * k2 * w * w
    }

    pub fn response(&self, w: f64) -> EffectiveResponse {
        let p = &self.params;
        let d = &self.derived;
        let den = self.denominator(w);
        let gg = p.hbar * d.g_prime * d.g_prime * d.delta_dprime;
        let spring = (p.kappa * p.kappa + d.delta_prime_sq - w * w) / den;
        let damping = 4.0 * gg * p.kappa / den;
        let om2 = p.omega_m * p.omega_m;
        match self.convention {
            Convention::Normalized => EffectiveResponse {
                omega_eff_sq: om2 - 2.0 * gg * spring / p.mass,
                gamma_eff: p.gamma_m + damping / p.mass,
            },
            Convention::Literal => {
                EffectiveResponse { omega_eff_sq: om2 - 4.0 * gg * spring, gamma_eff: p.mass * p.gamma_m + damping }
            }
        }
    }

    /// `chi^-1(w)` as `(real, imaginary)`.
    pub fn inverse_susceptibility(&self, w: f64) -> (f64, f64) {
        let r = self.response(w);
        let m = self.params.mass;
        match self.convention {
            Convention::Normalized => (m * (r.omega_eff_sq - w * w), -w * m * r.gamma_eff),
            Convention::Literal => (m * (r.omega_eff_sq - w * w), -w * r.gamma_eff),
        }
    }

    pub fn s_q(&self, w: f64) -> f64 {
        let p = &self.params;
        let d = &self.derived;
        let (re, im) = self.inverse_susceptibility(w);
        let chi2 = 1.0 / (re * re + im * im);
        let thermal = p.mass * p.gamma_m * p.noise().thermal_kernel(w);
        let shot = p.kappa * d.g_prime * d.g_prime * (w * w + p.kappa * p.kappa + d.small_delta * d.small_delta)
            / self.denominator(w);
        match self.convention {
            Convention::Normalized => chi2 * (p.hbar * thermal + 2.0 * p.hbar * p.hbar * shot),
            Convention::Literal => p.hbar * chi2 * (thermal + 4.0 * shot),
        }
    }

    /// Momentum spectrum `m^2 w^2 S_q`.
    pub fn s_p(&self, w: f64) -> f64 {
        let m = self.params.mass;
        m * m * w * w * self.s_q(w)
    }
}

pub fn effective_response(
    p: &SystemParams,
    d: &DerivedQuantities,
    omega: f64,
    convention: Convention,
) -> EffectiveResponse {
    ClosedForm { params: *p, derived: *d, convention }.response(omega)
}

pub fn s_q_closed_form(p: &SystemParams, d: &DerivedQuantities, omega: f64, convention: Convention) -> f64 {
    ClosedForm { params: *p, derived: *d, convention }.s_q(omega)
}

/// Uniform grid in units of `omega_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Also include the negated nonzero points, ascending overall.
    pub mirrored: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { start: 0.0, stop: 2.0, count: 4001, mirrored: false }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;
    /// `start:stop:count`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid: expected start:stop:count, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let g = GridSpec { start, stop, count, mirrored: false };
        g.validate()?;
        Ok(g)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop <= self.start || self.count < 3 {
            return Err(Error::Config(format!(
                "grid: need finite start < stop and at least 3 points, got {}:{}:{}",
                self.start, self.stop, self.count
            )));
        }
        Ok(())
    }

    /// Grid points in units of `omega_m`.
    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        let forward: Vec<f64> = (0..self.count)
            .map(|k| if k + 1 == self.count { self.stop } else { self.start + k as f64 * step })
            .collect();
        if !self.mirrored {
            return forward;
        }
        let mut out: Vec<f64> = forward.iter().rev().filter(|&&x| x != 0.0).map(|&x| -x).collect();
        out.extend(forward);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    /// Full width at half maximum; `None` if the half level is not reached
    /// inside the grid on both sides.
    pub fwhm: Option<f64>,
}

/// Interior local maxima with parabolic refinement.
///
/// Fails with [`Error::GridTooCoarse`] when two maxima are within five grid
/// steps of each other or a peak is narrower than two steps.
pub fn find_peaks(omega: &[f64], values: &[f64]) -> Result<Vec<Peak>> {
    if omega.len() < 3 || omega.len() != values.len() {
        return Err(Error::GridTooCoarse);
    }
    let step = (omega[omega.len() - 1] - omega[0]) / (omega.len() - 1) as f64;
    let mut peaks = Vec::new();
    let mut last_index: Option<usize> = None;
    for k in 1..omega.len() - 1 {
        let (l, c, r) = (values[k - 1], values[k], values[k + 1]);
        if !(c > l && c >= r) {
            continue;
        }
        if let Some(prev) = last_index {
            if k - prev <= 5 {
                return Err(Error::GridTooCoarse);
            }
        }
        last_index = Some(k);
        let h = omega[k + 1] - omega[k];
        let curvature = l - 2.0 * c + r;
        let shift = if curvature != 0.0 { 0.5 * (l - r) / curvature } else { 0.0 };
        let x = omega[k] + shift * h;
        let height = c - 0.25 * (l - r) * shift;
        let half = 0.5 * height;
        let left = (0..k).rev().find(|&j| values[j] < half).map(|j| {
            let t = (half - values[j]) / (values[j + 1] - values[j]);
            omega[j] + t * (omega[j + 1] - omega[j])
        });
        let right = (k + 1..omega.len()).find(|&j| values[j] < half).map(|j| {
            let t = (half - values[j - 1]) / (values[j] - values[j - 1]);
            omega[j - 1] + t * (omega[j] - omega[j - 1])
        });
        let fwhm = match (left, right) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        if let Some(w) = fwhm {
            if w < 2.0 * step {
                return Err(Error::GridTooCoarse);
            }
        }
        peaks.push(Peak { omega: x, height, fwhm });
    }
    Ok(peaks)
}

/// Mean energy of the mirror expressed as a temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureReport {
    pub t_eff: f64,
    pub q2_mean: f64,
    pub p2_mean: f64,
    /// Final cutoff of the frequency integral.
    pub omega_max: f64,
    /// Accumulated Simpson error estimate of `t_eff` plus the last cutoff change.
    pub error_estimate: f64,
    /// Relative change of `t_eff` in the last cutoff doubling.
    pub relative_change: f64,
}

/// Controls for [`effective_temperature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureOptions {
    /// Initial cutoff in units of `omega_m`.
    pub initial_cutoff: f64,
    pub max_doublings: u32,
    /// Required relative change of `t_eff` between successive cutoffs.
    pub tolerance: f64,
    /// Panels per narrowest mode width in the first interval.
    pub panels_per_width: f64,
}

impl Default for TemperatureOptions {
    fn default() -> Self {
        TemperatureOptions { initial_cutoff: 10.0, max_doublings: 12, tolerance: 1e-4, panels_per_width: 4.0 }
    }
}

/// `T_eff = (m W^2 <q^2> / 2 + <p^2> / 2m) / k_B` with
/// `<q^2> = (1/2pi) int S_q dw` over the whole real line.
///
/// The cutoff starts at `10 omega_m` and doubles until `T_eff` changes by less
/// than the tolerance; otherwise the last two values are returned in
/// [`Error::QuadratureNotConverged`].
pub fn effective_temperature(
    p: &SystemParams,
    s: &SteadyState,
    convention: Convention,
    opts: TemperatureOptions,
) -> Result<TemperatureReport> {
    if !s.eig_stable {
        return Err(Error::UnstableBranch(s.branch_index));
    }
    let cf = ClosedForm::new(p, s, convention);
    let modes = numeric_modes(&build_drift_matrix(p, s))?;
    let narrowest = modes.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let width = narrowest.clamp(1e-7 * p.omega_m, 0.1 * p.omega_m);

    // The integrands are even, so integrate over [0, W] and double.
    let sq = |w: f64| cf.s_q(w);
    let sp = |w: f64| cf.s_p(w);
    let rel = 1e-10;
    let first = opts.initial_cutoff * p.omega_m;
    let panels = ((first / width) * opts.panels_per_width).ceil().clamp(16.0, 4.0e6) as usize;
    let mut q = adaptive_simpson(&sq, 0.0, first, panels, rel, 0.0);
    let mut pp = adaptive_simpson(&sp, 0.0, first, panels, rel, 0.0);
    let temp = |q: &Quadrature, pp: &Quadrature| {
        let q2 = q.value / std::f64::consts::PI;
        let p2 = pp.value / std::f64::consts::PI;
        let t = (0.5 * p.mass * p.omega_m * p.omega_m * q2 + p2 / (2.0 * p.mass)) / p.k_b;
        let err = (0.5 * p.mass * p.omega_m * p.omega_m * q.error + pp.error / (2.0 * p.mass))
            / (std::f64::consts::PI * p.k_b);
        (t, q2, p2, err)
    };

    let mut cutoff = first;
    let (mut t_prev, ..) = temp(&q, &pp);
    let mut before = t_prev;
    for _ in 0..opts.max_doublings {
        let next = 2.0 * cutoff;
        q = q + adaptive_simpson(&sq, cutoff, next, 64, rel, 0.0);
        pp = pp + adaptive_simpson(&sp, cutoff, next, 64, rel, 0.0);
        cutoff = next;
        let (t, q2, p2, err) = temp(&q, &pp);
        let change = (t - t_prev).abs() / t.abs();
        if change < opts.tolerance {
            return Ok(TemperatureReport {
                t_eff: t,
                q2_mean: q2,
                p2_mean: p2,
                omega_max: cutoff,
                error_estimate: err + (t - t_prev).abs(),
                relative_change: change,
            });
        }
        before = t_prev;
        t_prev = t;
    }
    Err(Error::QuadratureNotConverged { lower: before.min(t_prev), upper: before.max(t_prev) })
}

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub omega_over_omega_m: f64,
    pub s_q_closed: f64,
    pub s_q_oracle: f64,
    pub s_p: f64,
    pub omega_eff: f64,
    pub gamma_eff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub branch_index: usize,
    pub convention: Convention,
    pub rows: Vec<SpectrumRow>,
    /// Peaks of the closed-form spectrum on `w >= 0`.
    pub peaks: Vec<Peak>,
    /// Peaks of the oracle spectrum on `w >= 0`.
    pub oracle_peaks: Vec<Peak>,
}

impl SpectrumResult {
    pub fn max_s_q_closed(&self) -> f64 {
        self.rows.iter().map(|r| r.s_q_closed).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_s_q_oracle(&self) -> f64 {
        self.rows.iter().map(|r| r.s_q_oracle).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative deviation between the closed form and the oracle.
    pub fn max_relative_deviation(&self) -> f64 {
        self.rows.iter().map(|r| (r.s_q_closed - r.s_q_oracle).abs() / r.s_q_oracle.abs()).fold(0.0, f64::max)
    }
}

/// Distance between the outermost of the listed peaks (0 for fewer than two).
pub fn peak_separation(peaks: &[Peak]) -> f64 {
    if peaks.len() < 2 {
        return 0.0;
    }
    peaks[peaks.len() - 1].omega - peaks[0].omega
}

/// Closed-form and oracle spectra of a stable branch on a grid.
pub fn compute_spectrum(
    p: &SystemParams,
    s: &SteadyState,
    grid: &GridSpec,
    convention: Convention,
) -> Result<SpectrumResult> {
    grid.validate()?;
    let oracle = Oracle::new(p, s)?;
    let cf = ClosedForm::new(p, s, convention);
    let rows = grid
        .points()
        .par_iter()
        .map(|&x| {
            let w = x * p.omega_m;
            let r = cf.response(w);
            let s_q = cf.s_q(w);
            Ok(SpectrumRow {
                omega: w,
                omega_over_omega_m: x,
                s_q_closed: s_q,
                s_q_oracle: oracle.s_q(w)?,
                s_p: p.mass * p.mass * w * w * s_q,
                omega_eff: r.omega_eff(),
                gamma_eff: r.gamma_eff,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let positive: Vec<&SpectrumRow> = rows.iter().filter(|r| r.omega >= 0.0).collect();
    let w: Vec<f64> = positive.iter().map(|r| r.omega).collect();
    let closed: Vec<f64> = positive.iter().map(|r| r.s_q_closed).collect();
    let exact: Vec<f64> = positive.iter().map(|r| r.s_q_oracle).collect();
    Ok(SpectrumResult {
        branch_index: s.branch_index,
        convention,
        peaks: find_peaks(&w, &closed)?,
        oracle_peaks: find_peaks(&w, &exact)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::mechanical_response;
    use crate::model::UnitMode;
    use crate::steady::{drive_for, solve_branches};
    use proptest::prelude::*;

    fn reduced(kappa: f64, gamma: f64, g: f64, eta: f64, delta_0: f64, eps: f64, t: f64) -> SystemParams {
        SystemParams {
            omega_c: delta_0,
            omega_l: 0.0,
            kappa,
            omega_m: 1.0,
            gamma_m: gamma,
            mass: 1.0,
            g_m: g,
            eta,
            eps_drive: eps,
            temperature: t,
            hbar: 1.0,
            k_b: 1.0,
            unit_mode: UnitMode::Reduced,
        }
    }

    /// Branch with `n` photons at effective detuning `delta`.
    fn pinned(kappa: f64, gamma: f64, g: f64, eta_p: f64, delta: f64, n: f64, t: f64) -> (SystemParams, SteadyState) {
        let mut p = reduced(kappa, gamma, g, eta_p / n, 0.0, 0.0, t);
        p.omega_c = delta + p.radiation_pull() * n;
        p.eps_drive = drive_for(&p, n, delta);
        let s = solve_branches(&p).unwrap().into_iter().find(|b| (b.n_s - n).abs() < 1e-6 * n).unwrap();
        (p, s)
    }

    #[test]
    fn brownian_hand_value() {
        let p = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 1.0, 0.5);
        let s = &solve_branches(&p).unwrap()[0];
        for c in [Convention::Normalized, Convention::Literal] {
            let v = ClosedForm::new(&p, s, c).s_q(1.0);
            assert!((v - 131.303_528_549_933_1).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn decoupled_response() {
        let p = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 1.0, 0.5);
        let s = &solve_branches(&p).unwrap()[0];
        for c in [Convention::Normalized, Convention::Literal] {
            let r = ClosedForm::new(&p, s, c).response(0.7);
            assert_eq!(r.omega_eff_sq, 1.0);
            assert_eq!(r.gamma_eff, 0.01);
        }
    }

    #[test]
    fn blue_side_anti_damping() {
        let (p, s) = pinned(0.1, 0.01, 0.01, 0.0, -1.0, 25.0, 50.0);
        for c in [Convention::Normalized, Convention::Literal] {
            assert!(ClosedForm::new(&p, &s, c).response(1.0).gamma_eff < p.mass * p.gamma_m);
        }
    }

    #[test]
    fn static_spring_constant_audit() {
        // Exact static response is 1 / (m W_eff^2(0)); only C = 2 reproduces it.
        let (p, s) = pinned(0.1, 0.01, 0.01, 0.0, 1.0, 25.0, 50.0);
        let exact = 1.0 / mechanical_response(&build_drift_matrix(&p, &s), 0.0).unwrap().re;
        let g2 = (p.g_m * p.g_m) * 25.0;
        let expected = |c: f64| 1.0 - c * g2 * 1.0 / (0.01 + 1.0);
        assert!((exact - expected(2.0)).abs() < 1e-12);
        assert!((exact - expected(4.0)).abs() > 1e-3);
        let normalized = ClosedForm::new(&p, &s, Convention::Normalized).response(0.0).omega_eff_sq;
        let literal = ClosedForm::new(&p, &s, Convention::Literal).response(0.0).omega_eff_sq;
        assert!((normalized - exact).abs() < 1e-12);
        assert!((literal - expected(4.0)).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_peak_recovered() {
        let omega: Vec<f64> = (0..2001).map(|k| k as f64 * 0.001).collect();
        let (x0, g) = (0.8137, 0.02);
        let v: Vec<f64> = omega.iter().map(|w| 1.0 / ((w - x0) * (w - x0) + g * g / 4.0)).collect();
        let peaks = find_peaks(&omega, &v).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].omega - x0).abs() < 1e-3);
        assert!((peaks[0].fwhm.unwrap() - g).abs() < 1e-3);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let omega: Vec<f64> = (0..21).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = omega.iter().map(|w| 1.0 / ((w - 1.0) * (w - 1.0) + 1e-6)).collect();
        assert_eq!(find_peaks(&omega, &v), Err(Error::GridTooCoarse));
        let two: Vec<f64> = omega.iter().map(|w| (w * 30.0).sin()).collect();
        assert_eq!(find_peaks(&omega, &two), Err(Error::GridTooCoarse));
    }

    #[test]
    fn equipartition() {
        let p = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 1.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let r = effective_temperature(&p, s, Convention::Normalized, TemperatureOptions::default()).unwrap();
        assert!((r.t_eff / 50.0 - 1.0).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn backaction_cooling() {
        let (p, s) = pinned(0.1, 0.01, 0.01, 0.0, 1.0, 25.0, 50.0);
        let r = effective_temperature(&p, &s, Convention::Normalized, TemperatureOptions::default()).unwrap();
        assert!(r.t_eff < 50.0, "{r:?}");
    }

    #[test]
    fn temperature_is_grid_independent() {
        let (p, s) = pinned(0.1, 0.01, 0.01, 0.0, 1.0, 25.0, 50.0);
        let base = effective_temperature(&p, &s, Convention::Normalized, TemperatureOptions::default()).unwrap();
        let fine = TemperatureOptions { panels_per_width: 8.0, ..Default::default() };
        let finer = effective_temperature(&p, &s, Convention::Normalized, fine).unwrap();
        assert!((base.t_eff - finer.t_eff).abs() < 1e-5 * base.t_eff);
    }

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "0:2:4001".parse().unwrap();
        assert_eq!(g, GridSpec::default());
        assert!("0:2".parse::<GridSpec>().is_err());
        assert!("2:0:10".parse::<GridSpec>().is_err());
        let m = GridSpec { mirrored: true, ..GridSpec { start: 0.0, stop: 1.0, count: 5, mirrored: false } };
        assert_eq!(m.points(), vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn spectrum_layout_and_evenness() {
        let (p, s) = pinned(0.1, 0.01, 0.01, 0.0, 1.0, 100.0, 50.0);
        let grid = GridSpec { mirrored: true, ..Default::default() };
        let r = compute_spectrum(&p, &s, &grid, Convention::Normalized).unwrap();
        assert_eq!(r.rows.len(), 8001);
        for k in 0..4000 {
            let (a, b) = (&r.rows[k], &r.rows[8000 - k]);
            assert_eq!(a.omega, -b.omega);
            assert!((a.s_q_closed - b.s_q_closed).abs() <= 1e-12 * b.s_q_closed);
            assert!((a.s_q_oracle - b.s_q_oracle).abs() <= 1e-12 * b.s_q_oracle);
        }
        for row in &r.rows {
            assert!(row.s_q_closed >= 0.0);
            assert!((row.s_p - row.omega * row.omega * row.s_q_closed).abs() <= 1e-14 * row.s_p);
        }
        assert_eq!(r.peaks.len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_oracle_without_kerr(
            k in 0.02..1.0f64, gm in 0.001..0.05f64, g in 0.001..0.05f64,
            delta in 0.1..2.0f64, n in 1.0..400.0f64, t in 0.0..100.0f64, w in -3.0..3.0f64,
        ) {
            let mut p = reduced(k, gm, g, 0.0, 0.0, 0.0, t);
            p.omega_c = delta + p.radiation_pull() * n;
            p.eps_drive = drive_for(&p, n, delta);
            let s = solve_branches(&p).unwrap().into_iter().find(|b| (b.n_s - n).abs() < 1e-6 * n);
            prop_assume!(s.is_some_and(|s| s.eig_stable));
            let s = s.unwrap();
            let exact = Oracle::new(&p, &s).unwrap().s_q(w).unwrap();
            let closed = ClosedForm::new(&p, &s, Convention::Normalized).s_q(w);
            prop_assert!((closed - exact).abs() <= 1e-8 * exact, "{} vs {}", closed, exact);
        }

        #[test]
        fn closed_form_is_even(w in 0.0..3.0f64, eta_p in 0.0..0.08f64) {
            let (p, s) = pinned(0.1, 0.01, 0.01, eta_p, 1.0, 100.0, 50.0);
            let cf = ClosedForm::new(&p, &s, Convention::Normalized);
            prop_assert!((cf.s_q(w) - cf.s_q(-w)).abs() <= 1e-12 * cf.s_q(w));
        }
    }
}
