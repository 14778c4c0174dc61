// SPDX-License-Identifier: Apache-2.0

//! Time-domain integration of the Langevin equations with classical noise.
//!
//! The mirror bath is replaced by white noise of intensity `2 m gamma_m k_B T`,
//! valid when `k_B T >> hbar omega_m`; each field quadrature receives
//! `sqrt(2 kappa)` times unit-density white noise. Realization `k` draws from
//! a ChaCha8 stream seeded with `seed` on stream `k`, so results do not depend
//! on scheduling.

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift_matrix, langevin_drift, steady_state_vector};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Euler,
    /// Implicit midpoint rule solved by fixed-point iteration; additive noise.
    Midpoint,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "midpoint" => Ok(Scheme::Midpoint),
            other => Err(Error::Config(format!("scheme: expected `euler` or `midpoint`, got `{other}`"))),
        }
    }
}

/// Which equations are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdeModel {
    /// Full nonlinear drift.
    #[default]
    Nonlinear,
    /// Drift matrix about the initial branch. Unlike the nonlinear equations,
    /// whose field amplitude stays below `eps / kappa`, this grows without
    /// bound on an unstable branch.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeOptions {
    pub scheme: Scheme,
    pub model: SdeModel,
    /// Time step in units of `1 / omega_m`.
    pub step: f64,
    /// Length of each realization in units of `1 / omega_m`, burn-in included.
    pub duration: f64,
    /// Discarded initial stretch in units of `1 / omega_m`.
    pub burn_in: f64,
    /// Target spacing of recorded samples in units of `1 / omega_m`.
    pub sample_interval: f64,
    /// Welch segment length in samples.
    pub segment: usize,
    pub seed: u64,
    pub realizations: usize,
    /// Compare against a run at half the step on realization 0.
    pub check_step: bool,
    pub keep_trajectories: bool,
}

impl Default for SdeOptions {
    fn default() -> Self {
        SdeOptions {
            scheme: Scheme::Euler,
            model: SdeModel::Nonlinear,
            step: 1e-3,
            duration: 2000.0,
            burn_in: 200.0,
            sample_interval: 0.1,
            segment: 8192,
            seed: 0,
            realizations: 64,
            check_step: true,
            keep_trajectories: false,
        }
    }
}

/// Recorded samples of one realization, rows `(t, q, p, re a, im a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeTrajectory {
    pub realization: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub step: f64,
    pub duration: f64,
    pub samples: Vec<[f64; 5]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub var_q: f64,
    pub var_q_half_step: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeResult {
    pub options: SdeOptions,
    /// Non-negative frequencies, physical units.
    pub omega: Vec<f64>,
    /// Ensemble-averaged two-sided density of `q`, normalized so that
    /// `(1/2pi) int S dw` over the real line equals the variance.
    pub psd: Vec<f64>,
    /// Mean sample variance of `q` after burn-in.
    pub var_q: f64,
    /// Standard error of `var_q` across realizations.
    pub var_q_stderr: f64,
    pub step_check: Option<StepCheck>,
    pub trajectories: Vec<SdeTrajectory>,
}

impl SdeResult {
    /// `(1/2pi) int S dw` by the rectangle rule over the two-sided spectrum.
    pub fn integrated_power(&self) -> f64 {
        if self.omega.len() < 2 {
            return 0.0;
        }
        let dw = self.omega[1] - self.omega[0];
        let n = (self.omega.len() - 1) * 2;
        // Bins 1..n/2-1 appear twice in the two-sided sum.
        let mut total = self.psd[0];
        for (k, s) in self.psd.iter().enumerate().skip(1) {
            total += if 2 * k == n { *s } else { 2.0 * s };
        }
        total * dw / (2.0 * std::f64::consts::PI)
    }

    /// Moving average over `2 half + 1` bins.
    pub fn smoothed(&self, half: usize) -> Vec<f64> {
        let n = self.psd.len();
        (0..n)
            .map(|k| {
                let lo = k.saturating_sub(half);
                let hi = (k + half).min(n - 1);
                self.psd[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect()
    }

    /// The `count` highest local maxima of the smoothed spectrum within
    /// `[lo, hi]` (physical units), ascending in frequency.
    pub fn dominant_peaks(&self, lo: f64, hi: f64, count: usize, half: usize) -> Vec<f64> {
        let s = self.smoothed(half);
        let mut maxima: Vec<(f64, f64)> = (1..s.len().saturating_sub(1))
            .filter(|&k| self.omega[k] >= lo && self.omega[k] <= hi && s[k] > s[k - 1] && s[k] >= s[k + 1])
            .map(|k| (self.omega[k], s[k]))
            .collect();
        maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let mut out: Vec<f64> = maxima.into_iter().take(count).map(|m| m.0).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }
}

struct Integrator<'a> {
    p: &'a SystemParams,
    model: SdeModel,
    origin: Vector4<f64>,
    linear: nalgebra::Matrix4<f64>,
    /// Noise amplitudes per unit sqrt(time): `(0, sqrt(2 m gamma k T), sqrt(2 kappa), sqrt(2 kappa))`.
    sigma: Vector4<f64>,
}

impl Integrator<'_> {
    fn drift(&self, x: &Vector4<f64>) -> Vector4<f64> {
        match self.model {
            SdeModel::Nonlinear => langevin_drift(self.p, x),
            SdeModel::Linearized => self.linear * (x - self.origin),
        }
    }

    fn step(&self, scheme: Scheme, x: &Vector4<f64>, dt: f64, dw: &Vector4<f64>) -> Vector4<f64> {
        let kick = self.sigma.component_mul(dw);
        let euler = x + self.drift(x) * dt + kick;
        match scheme {
            Scheme::Euler => euler,
            Scheme::Midpoint => {
                let mut next = euler;
                for _ in 0..4 {
                    next = x + self.drift(&(0.5 * (x + next))) * dt + kick;
                }
                next
            }
        }
    }
}

struct Run {
    samples: Vec<[f64; 5]>,
    q: Vec<f64>,
}

fn normal4(rng: &mut ChaCha8Rng) -> Vector4<f64> {
    Vector4::new(0.0, rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Integrate one realization. With `substeps = 2` each step is split in two
/// and the pair of half-step increments sums to the full-step increment.
fn integrate(integ: &Integrator, opts: &SdeOptions, realization: usize, substeps: usize, keep: bool) -> Result<Run> {
    let w = integ.p.omega_m;
    let dt = opts.step / w;
    let steps = (opts.duration / opts.step).round() as usize;
    let every = ((opts.sample_interval / opts.step).round() as usize).max(1);
    let burn = (opts.burn_in / opts.step).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(realization as u64);

    // Independent stream for the bridge so the full-step increments match
    // those of the undivided run.
    let mut bridge = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9E37_79B9_7F4A_7C15);
    bridge.set_stream(realization as u64);

    let mut x = integ.origin;
    let scale = match integ.model {
        SdeModel::Nonlinear => x.norm().max(1.0),
        SdeModel::Linearized => 1.0,
    };
    let limit = 1e6 * scale;
    let h = dt / substeps as f64;
    let mut run = Run { samples: Vec::new(), q: Vec::with_capacity(steps / every + 1) };
    for k in 1..=steps {
        let full = normal4(&mut rng) * dt.sqrt();
        if substeps == 1 {
            x = integ.step(opts.scheme, &x, dt, &full);
        } else {
            // Brownian bridge split of the full increment.
            let split = normal4(&mut bridge) * (0.5 * h).sqrt();
            let first = full * 0.5 + split;
            let second = full * 0.5 - split;
            x = integ.step(opts.scheme, &x, h, &first);
            x = integ.step(opts.scheme, &x, h, &second);
        }
        if k % every == 0 {
            let t = k as f64 * dt;
            let dev = match integ.model {
                SdeModel::Nonlinear => x.norm(),
                SdeModel::Linearized => (x - integ.origin).norm(),
            };
            if !(dev <= limit) {
                return Err(Error::UnstableBlowup { time: t });
            }
            if k > burn {
                run.q.push(x[0]);
            }
            if keep {
                run.samples.push([t, x[0], x[1], 0.5 * x[2], 0.5 * x[3]]);
            }
        }
    }
    Ok(run)
}

fn variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
}

/// Welch estimate with a Hann window and 50% overlap; returns the two-sided
/// density at bins `0..=segment/2`, summed (not averaged) with the segment count.
fn welch(x: &[f64], segment: usize, sample_dt: f64) -> (Vec<f64>, usize) {
    let n = segment;
    let window: Vec<f64> =
        (0..n).map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
    let norm: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut acc = vec![0.0; n / 2 + 1];
    let mut segments = 0;
    let mut start = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    while start + n <= x.len() {
        let chunk = &x[start..start + n];
        let mean = chunk.iter().sum::<f64>() / n as f64;
        for (b, (v, w)) in buf.iter_mut().zip(chunk.iter().zip(&window)) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += sample_dt * z.norm_sqr() / norm;
        }
        segments += 1;
        start += n / 2;
    }
    (acc, segments)
}

/// Ensemble of stochastic trajectories starting on branch `s`, with the
/// ensemble-averaged periodogram of `q`.
pub fn sde_simulate(p: &SystemParams, s: &SteadyState, opts: &SdeOptions) -> Result<SdeResult> {
    let ratio = p.k_b * p.temperature / (p.hbar * p.omega_m);
    if !(ratio >= 10.0) {
        return Err(Error::NonClassicalBath { ratio });
    }
    if !(opts.step > 0.0 && opts.duration > opts.burn_in && opts.burn_in >= 0.0 && opts.sample_interval >= opts.step)
        || opts.realizations == 0
        || opts.segment < 16
    {
        return Err(Error::Config(
            "sde: need step > 0, duration > burn_in >= 0, sample_interval >= step, realizations >= 1, segment >= 16"
                .into(),
        ));
    }
    let every = ((opts.sample_interval / opts.step).round() as usize).max(1);
    let sample_dt = every as f64 * opts.step / p.omega_m;
    let recorded = ((opts.duration - opts.burn_in) / opts.step).round() as usize / every;
    if recorded < opts.segment {
        return Err(Error::Config(format!(
            "sde: {recorded} samples after burn-in, fewer than one segment of {}",
            opts.segment
        )));
    }

    let integ = Integrator {
        p,
        model: opts.model,
        origin: steady_state_vector(s),
        linear: build_drift_matrix(p, s).a,
        sigma: Vector4::new(
            0.0,
            (2.0 * p.mass * p.gamma_m * p.k_b * p.temperature).sqrt(),
            (2.0 * p.kappa).sqrt(),
            (2.0 * p.kappa).sqrt(),
        ),
    };

    let runs = (0..opts.realizations)
        .into_par_iter()
        .map(|r| integrate(&integ, opts, r, 1, opts.keep_trajectories))
        .collect::<Result<Vec<_>>>()?;

    let step_check = if opts.check_step {
        let half = integrate(&integ, opts, 0, 2, false)?;
        let var_q = variance(&runs[0].q);
        let var_q_half_step = variance(&half.q);
        let discrepancy = (var_q - var_q_half_step).abs() / var_q_half_step;
        if discrepancy > 0.1 {
            return Err(Error::StepTooLarge { discrepancy });
        }
        Some(StepCheck { var_q, var_q_half_step, discrepancy })
    } else {
        None
    };

    let mut psd = vec![0.0; opts.segment / 2 + 1];
    let mut segments = 0;
    let vars: Vec<f64> = runs.iter().map(|r| variance(&r.q)).collect();
    for run in &runs {
        let (acc, n) = welch(&run.q, opts.segment, sample_dt);
        for (a, b) in psd.iter_mut().zip(acc) {
            *a += b;
        }
        segments += n;
    }
    for v in psd.iter_mut() {
        *v /= segments as f64;
    }
    let dw = 2.0 * std::f64::consts::PI / (opts.segment as f64 * sample_dt);
    let omega = (0..psd.len()).map(|k| k as f64 * dw).collect();
    let var_q = vars.iter().sum::<f64>() / vars.len() as f64;
    let var_q_stderr = if vars.len() > 1 {
        (vars.iter().map(|v| (v - var_q).powi(2)).sum::<f64>() / ((vars.len() - 1) * vars.len()) as f64).sqrt()
    } else {
        f64::NAN
    };

    let trajectories = if opts.keep_trajectories {
        runs.into_iter()
            .enumerate()
            .map(|(r, run)| SdeTrajectory {
                realization: r,
                seed: opts.seed,
                scheme: opts.scheme,
                step: opts.step,
                duration: opts.duration,
                samples: run.samples,
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(SdeResult { options: *opts, omega, psd, var_q, var_q_stderr, step_check, trajectories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UnitMode;
    use crate::steady::{drive_for, solve_branches, steady_point};

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

    fn brownian_opts() -> SdeOptions {
        SdeOptions {
            scheme: Scheme::Midpoint,
            step: 0.05,
            duration: 40_000.0,
            burn_in: 500.0,
            sample_interval: 0.1,
            segment: 65_536,
            seed: 7,
            realizations: 16,
            check_step: false,
            ..Default::default()
        }
    }

    #[test]
    fn brownian_linewidth() {
        let p = reduced(0.1, 0.02, 0.0, 0.0, 1.0, 1.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let r = sde_simulate(&p, s, &brownian_opts()).unwrap();
        let smooth = r.smoothed(1);
        let (k, top) =
            smooth.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).map(|(k, v)| (k, *v)).unwrap();
        assert!((r.omega[k] - 1.0).abs() < 0.01, "{}", r.omega[k]);
        let left = (0..k).rev().find(|&j| smooth[j] < top / 2.0).unwrap();
        let right = (k..smooth.len()).find(|&j| smooth[j] < top / 2.0).unwrap();
        let fwhm = r.omega[right] - r.omega[left];
        assert!((fwhm / 0.02 - 1.0).abs() < 0.2, "fwhm {fwhm}");
    }

    #[test]
    fn parseval_and_equipartition() {
        let p = reduced(0.1, 0.02, 0.0, 0.0, 1.0, 1.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let r = sde_simulate(&p, s, &brownian_opts()).unwrap();
        assert!((r.integrated_power() / r.var_q - 1.0).abs() < 0.02);
        // <q^2> = k_B T / (m omega_m^2) = 50.
        assert!((r.var_q - 50.0).abs() < 4.0 * r.var_q_stderr.max(1.0), "{} +- {}", r.var_q, r.var_q_stderr);
    }

    #[test]
    fn seed_reproducible() {
        let p = reduced(0.1, 0.01, 0.01, 0.0, 1.6, 10.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let opts = SdeOptions {
            duration: 30.0,
            burn_in: 1.0,
            segment: 64,
            realizations: 3,
            keep_trajectories: true,
            check_step: false,
            seed: 11,
            ..Default::default()
        };
        let a = sde_simulate(&p, s, &opts).unwrap();
        let b = sde_simulate(&p, s, &opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trajectories[0].samples, a.trajectories[1].samples);
        let c = sde_simulate(&p, s, &SdeOptions { seed: 12, ..opts }).unwrap();
        assert_ne!(a.trajectories[0].samples, c.trajectories[0].samples);
    }

    #[test]
    fn unstable_branch_blows_up() {
        let mut p = reduced(0.1, 0.01, 0.01, 0.0, 0.0, 0.0, 50.0);
        let n = 0.6 / (p.g_m * p.g_m);
        p.omega_c = 1.0 + p.radiation_pull() * n;
        p.eps_drive = drive_for(&p, n, 1.0);
        let s = steady_point(&p, n);
        let opts = SdeOptions {
            model: SdeModel::Linearized,
            duration: 500.0,
            burn_in: 0.0,
            segment: 64,
            realizations: 2,
            ..Default::default()
        };
        let err = sde_simulate(&p, &s, &opts).unwrap_err();
        assert!(matches!(err, Error::UnstableBlowup { time } if time > 0.0 && time < 500.0), "{err:?}");
    }

    #[test]
    fn quantum_bath_is_refused() {
        let p = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 1.0, 5.0);
        let s = &solve_branches(&p).unwrap()[0];
        assert!(matches!(sde_simulate(&p, s, &SdeOptions::default()), Err(Error::NonClassicalBath { .. })));
    }
}
