// SPDX-License-Identifier: Apache-2.0

//! Frequency-domain solve of the linearized Langevin equations.
//!
//! For each frequency the transfer matrix `X = (-i w I - A)^-1 B` maps the three
//! noise inputs onto the state. The symmetrized displacement spectrum is
//!
//! ```text
//! S_q = |X_q,xi|^2 hbar m gamma_m f(w) + (|X_q,x|^2 + |X_q,y|^2) S_vac
//! ```
//!
//! with `f(w) = w coth(hbar w / 2 k_B T)` and `S_vac` the vacuum quadrature density.

use nalgebra::Matrix4x3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift_matrix, resolvent_solve, DriftMatrix};
use crate::error::{Error, Result};
use crate::model::{NoiseModel, SystemParams};
use crate::steady::SteadyState;

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub drift: DriftMatrix,
    pub noise: NoiseModel,
    /// `hbar m gamma_m`, multiplying the thermal kernel.
    pub force_scale: f64,
}

/// Per-channel contributions to the displacement spectrum at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub omega: f64,
    pub s_q: f64,
    pub s_p: f64,
    pub t_xi: f64,
    pub t_x_in: f64,
    pub t_y_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub points: Vec<OraclePoint>,
}

impl Oracle {
    /// Oracle for a stable branch; unstable branches are refused.
    pub fn new(p: &SystemParams, s: &SteadyState) -> Result<Self> {
        if !s.eig_stable {
            return Err(Error::UnstableBranch(s.branch_index));
        }
        Ok(Self::from_drift(p, build_drift_matrix(p, s)))
    }

    pub fn from_drift(p: &SystemParams, drift: DriftMatrix) -> Self {
        Oracle { drift, noise: p.noise(), force_scale: p.hbar * p.mass * p.gamma_m }
    }

    pub fn transfer(&self, omega: f64) -> Result<Matrix4x3<Complex64>> {
        resolvent_solve(&self.drift.a, omega, &self.drift.b)
    }

    pub fn point(&self, omega: f64) -> Result<OraclePoint> {
        let x = self.transfer(omega)?;
        let thermal = self.force_scale * self.noise.thermal_kernel(omega);
        let vac = self.noise.vacuum_density();
        let row = |r: usize| x[(r, 0)].norm_sqr() * thermal + (x[(r, 1)].norm_sqr() + x[(r, 2)].norm_sqr()) * vac;
        Ok(OraclePoint {
            omega,
            s_q: row(0),
            s_p: row(1),
            t_xi: x[(0, 0)].norm_sqr(),
            t_x_in: x[(0, 1)].norm_sqr(),
            t_y_in: x[(0, 2)].norm_sqr(),
        })
    }

    pub fn s_q(&self, omega: f64) -> Result<f64> {
        Ok(self.point(omega)?.s_q)
    }

    /// Evaluate on a grid in parallel; output order follows the grid.
    pub fn spectrum(&self, omegas: &[f64]) -> Result<OracleSpectrum> {
        let points = omegas.par_iter().map(|&w| self.point(w)).collect::<Result<Vec<_>>>()?;
        Ok(OracleSpectrum { points })
    }
}

/// Exact spectrum of the linearized dynamics on one branch.
pub fn oracle_spectrum(p: &SystemParams, s: &SteadyState, omegas: &[f64]) -> Result<OracleSpectrum> {
    Oracle::new(p, s)?.spectrum(omegas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UnitMode;
    use crate::steady::solve_branches;
    use nalgebra::Matrix4;

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

    fn brownian(p: &SystemParams, w: f64) -> f64 {
        let m = p.mass;
        let inv = (m * (p.omega_m * p.omega_m - w * w)).powi(2) + (w * p.gamma_m * m).powi(2);
        p.hbar * m * p.gamma_m * p.noise().thermal_kernel(w) / inv
    }

    #[test]
    fn brownian_limit() {
        let p = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 3.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let oracle = Oracle::new(&p, s).unwrap();
        for k in 0..=400 {
            let w = k as f64 * 0.005;
            let got = oracle.s_q(w).unwrap();
            let want = brownian(&p, w);
            assert!((got - want).abs() <= 1e-12 * want, "{w}: {got} vs {want}");
        }
        // Hand value: gamma = 0.01, k_B T = 0.5, w = 1 gives coth(1) / 0.01.
        let cold = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 3.0, 0.5);
        let s = &solve_branches(&cold).unwrap()[0];
        let v = Oracle::new(&cold, s).unwrap().s_q(1.0).unwrap();
        assert!((v - 131.303_528_549_933_1).abs() < 1e-9);
    }

    #[test]
    fn vacuum_only_isolation() {
        let p = reduced(0.1, 0.01, 0.0, 0.0, 1.0, 3.0, 0.0);
        let s = &solve_branches(&p).unwrap()[0];
        let oracle = Oracle::new(&p, s).unwrap();
        for w in [-1.3, 0.2, 1.0, 1.7] {
            let pt = oracle.point(w).unwrap();
            assert_eq!(pt.t_x_in, 0.0);
            assert_eq!(pt.t_y_in, 0.0);
            let chi0 = 1.0 / ((1.0 - w * w).powi(2) + (w * 0.01f64).powi(2));
            assert!((pt.s_q - chi0 * 0.01 * w.abs()).abs() < 1e-12 * pt.s_q);
        }
    }

    #[test]
    fn refuses_unstable_branch() {
        let p = reduced(1.0, 0.01, 0.0, 0.5, -3.0, 2.0, 1.0);
        let b = solve_branches(&p).unwrap();
        assert!(matches!(Oracle::new(&p, &b[1]), Err(Error::UnstableBranch(1))));
    }

    #[test]
    fn invariant_under_diagonal_rescaling() {
        let p = reduced(0.1, 0.01, 0.01, 0.0004, 0.6, 12.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let oracle = Oracle::new(&p, s).unwrap();
        // New coordinates z = D x: A -> D A D^-1, B -> D B, and S_q scales by d_q^2.
        let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(3.0, 0.2, 7.0, 0.5));
        let d_inv = d.try_inverse().unwrap();
        let scaled = DriftMatrix { a: d * oracle.drift.a * d_inv, b: d * oracle.drift.b };
        let other = Oracle { drift: scaled, ..oracle };
        for k in 0..200 {
            let w = k as f64 * 0.01;
            let a = oracle.point(w).unwrap();
            let b = other.point(w).unwrap();
            assert!((b.s_q / 9.0 - a.s_q).abs() <= 1e-10 * a.s_q);
            assert!((b.s_p / 0.04 - a.s_p).abs() <= 1e-10 * a.s_p);
        }
    }

    #[test]
    fn momentum_spectrum_is_velocity_spectrum() {
        let p = reduced(0.1, 0.01, 0.01, 0.0004, 0.6, 12.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let oracle = Oracle::new(&p, s).unwrap();
        for w in [0.1, 0.9, 1.0, 1.4] {
            let pt = oracle.point(w).unwrap();
            assert!((pt.s_p - w * w * pt.s_q).abs() < 1e-12 * pt.s_p);
        }
    }

    #[test]
    fn full_grid_is_fast() {
        let p = reduced(0.1, 0.01, 0.01, 0.0, 0.6, 12.0, 50.0);
        let s = &solve_branches(&p).unwrap()[0];
        let omegas: Vec<f64> = (0..4001).map(|k| k as f64 * 2.0 / 4000.0).collect();
        let start = std::time::Instant::now();
        let spec = oracle_spectrum(&p, s, &omegas).unwrap();
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert_eq!(spec.points.len(), 4001);
        assert!(spec.points.iter().all(|pt| pt.s_q >= 0.0));
    }
}
