// SPDX-License-Identifier: Apache-2.0

//! Fixed points of the driven cavity + mirror and their local stability.
//!
//! Eliminating the mirror displacement and the field phase leaves a real cubic
//! in the intracavity photon number `n`:
//!
//! ```text
//! eps^2 = n [kappa^2 + (delta_0 + c n)^2],   c = 2 eta - hbar g_m^2 / (m omega_m^2)
//! ```
//!
//! Every real non-negative root is a steady-state branch.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift_matrix, eigenvalues};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::poly::monic_cubic_roots;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub branch_index: usize,
    /// Intracavity photon number `|a_s|^2`.
    pub n_s: f64,
    pub a_s: Complex64,
    pub q_s: f64,
    pub p_s: f64,
    /// `omega_c - omega_l - g_m q_s`.
    pub delta_eff: f64,
    /// `|P(n_s)| / omega_m^2`, the cubic residual in reduced units.
    pub residual: f64,
    /// Signs of the three closed-form Routh-Hurwitz expressions.
    pub rh: [bool; 3],
    /// All drift-matrix eigenvalues strictly in the left half plane.
    pub eig_stable: bool,
    /// Double root of the cubic (turning point of the response curve).
    pub fold: bool,
}

/// JSON layout of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub branch_index: usize,
    pub n_s: f64,
    pub re_a_s: f64,
    pub im_a_s: f64,
    pub q_s: f64,
    pub delta_eff: f64,
    pub residual: f64,
    pub rh: [bool; 3],
    pub eig_stable: bool,
    pub fold: bool,
}

impl From<&SteadyState> for BranchReport {
    fn from(s: &SteadyState) -> Self {
        BranchReport {
            branch_index: s.branch_index,
            n_s: s.n_s,
            re_a_s: s.a_s.re,
            im_a_s: s.a_s.im,
            q_s: s.q_s,
            delta_eff: s.delta_eff,
            residual: s.residual,
            rh: s.rh,
            eig_stable: s.eig_stable,
            fold: s.fold,
        }
    }
}

/// The steady-state cubic `P(n) = n [kappa^2 + (delta_0 + c n)^2] - eps^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyCubic {
    pub kappa: f64,
    pub delta_0: f64,
    pub c: f64,
    pub eps_sq: f64,
}

impl SteadyCubic {
    pub fn new(p: &SystemParams) -> Self {
        SteadyCubic {
            kappa: p.kappa,
            delta_0: p.bare_detuning(),
            c: 2.0 * p.eta - p.radiation_pull(),
            eps_sq: p.eps_drive * p.eps_drive,
        }
    }

    pub fn value(&self, n: f64) -> f64 {
        let d = self.delta_0 + self.c * n;
        n * (self.kappa * self.kappa + d * d) - self.eps_sq
    }

    pub fn derivative(&self, n: f64) -> f64 {
        let d = self.delta_0 + self.c * n;
        self.kappa * self.kappa + d * d + 2.0 * self.c * n * d
    }

    /// Expanded coefficients `[c3, c2, c1, c0]`.
    pub fn coefficients(&self) -> [f64; 4] {
        [
            self.c * self.c,
            2.0 * self.delta_0 * self.c,
            self.kappa * self.kappa + self.delta_0 * self.delta_0,
            -self.eps_sq,
        ]
    }

    fn newton(&self, mut n: f64) -> f64 {
        for _ in 0..200 {
            let d = self.derivative(n);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let step = self.value(n) / d;
            n -= step;
            if step.abs() <= 4.0 * f64::EPSILON * n.abs() {
                break;
            }
        }
        n
    }

    /// Real non-negative roots, ascending, with a fold flag on doubled roots.
    pub fn physical_roots(&self) -> Result<Vec<(f64, bool)>> {
        if self.eps_sq == 0.0 {
            return Ok(vec![(0.0, false)]);
        }
        let [c3, c2, c1, c0] = self.coefficients();
        if c3 == 0.0 {
            // Kerr and radiation-pressure shifts cancel (or vanish): the equation is linear.
            return Ok(vec![(self.newton(-c0 / c1), false)]);
        }
        let roots = monic_cubic_roots(c2 / c3, c1 / c3, c0 / c3)?;
        let accept = 1e-9 * self.eps_sq;
        let mut candidates: Vec<f64> = roots
            .iter()
            .filter(|z| z.im.abs() <= 1e-3 * z.norm().max(f64::MIN_POSITIVE))
            .map(|z| self.newton(z.re))
            .filter(|&n| n > 0.0 && n.is_finite() && self.value(n).abs() <= accept)
            .collect();
        candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));

        let mut out: Vec<(f64, bool)> = Vec::with_capacity(3);
        for n in candidates {
            match out.last_mut() {
                Some((prev, fold)) if (n - *prev).abs() <= 1e-6 * n.max(*prev) => *fold = true,
                _ => out.push((n, false)),
            }
        }
        for (n, fold) in out.iter_mut() {
            if (self.derivative(*n) * *n).abs() < 1e-6 * self.eps_sq {
                *fold = true;
            }
        }
        if out.is_empty() {
            return Err(Error::NoPhysicalRoot);
        }
        Ok(out)
    }
}

/// Steady state for a given photon number, without stability verdicts.
pub fn steady_point(p: &SystemParams, n_s: f64) -> SteadyState {
    let cubic = SteadyCubic::new(p);
    let q_s = p.displacement_per_photon() * n_s;
    let delta_eff = p.bare_detuning() - p.g_m * q_s;
    let a_s = Complex64::new(p.eps_drive, 0.0) / Complex64::new(p.kappa, delta_eff + 2.0 * p.eta * n_s);
    SteadyState {
        branch_index: 0,
        n_s,
        a_s,
        q_s,
        p_s: 0.0,
        delta_eff,
        residual: cubic.value(n_s).abs() / (p.omega_m * p.omega_m),
        rh: [false; 3],
        eig_stable: false,
        fold: false,
    }
}

/// All steady-state branches, sorted by photon number.
pub fn solve_branches(p: &SystemParams) -> Result<Vec<SteadyState>> {
    let roots = SteadyCubic::new(p).physical_roots()?;
    roots
        .into_iter()
        .enumerate()
        .map(|(i, (n, fold))| {
            let mut s = steady_point(p, n);
            s.branch_index = i;
            s.fold = fold;
            s.rh = routh_hurwitz(p, &s);
            s.eig_stable = eigen_stability(p, &s)?;
            Ok(s)
        })
        .collect()
}

/// Drive amplitude that produces `n_s` photons at effective detuning `delta_eff`.
pub fn drive_for(p: &SystemParams, n_s: f64, delta_eff: f64) -> f64 {
    let d = delta_eff + 2.0 * p.eta * n_s;
    (n_s * (p.kappa * p.kappa + d * d)).sqrt()
}

/// The three closed-form Routh-Hurwitz expressions, each reduced to the real number
/// it algebraically is (`i (a^2 - a*^2) = -2 Im a^2`, `a^2 + a*^2 = 2 Re a^2`).
pub fn routh_hurwitz_values(p: &SystemParams, s: &SteadyState) -> [f64; 3] {
    let (kappa, gamma, om2, eta) = (p.kappa, p.gamma_m, p.omega_m * p.omega_m, p.eta);
    let n = s.a_s.norm_sqr();
    let a2 = s.a_s * s.a_s;
    let (u, v) = (a2.re, a2.im);
    let re_a4 = (a2 * a2).re;
    let dp = s.delta_eff + 4.0 * eta * n;
    let i_diff = -2.0 * v; // i (a^2 - a*^2)
    let sum = 2.0 * u; // a^2 + a*^2
    let coupling = p.hbar * p.g_m * p.g_m / p.mass;

    let first = dp * dp + kappa * kappa + om2 + 2.0 * gamma * kappa + 2.0 * eta * i_diff * (kappa + gamma)
        - 4.0 * eta * eta * re_a4;
    let second = gamma * dp * dp + 2.0 * om2 * (kappa + eta * i_diff) - gamma * eta * eta * sum * sum;
    let damped = kappa + eta * i_diff;
    let third = om2 * (damped * damped + dp * dp) + coupling * eta * sum * sum
        - om2 * eta * eta * sum * sum
        - 2.0 * coupling * n * dp;
    [first, second, third]
}

pub fn routh_hurwitz(p: &SystemParams, s: &SteadyState) -> [bool; 3] {
    routh_hurwitz_values(p, s).map(|x| x > 0.0)
}

/// Largest real part among the drift-matrix eigenvalues.
pub fn max_growth_rate(p: &SystemParams, s: &SteadyState) -> Result<f64> {
    let drift = build_drift_matrix(p, s);
    let ev = eigenvalues(&drift.a)?;
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Ground-truth stability: every eigenvalue has real part below `-1e-12 omega_m`.
pub fn eigen_stability(p: &SystemParams, s: &SteadyState) -> Result<bool> {
    Ok(max_growth_rate(p, s)? < -1e-12 * p.omega_m)
}

/// Pick a branch: explicit index, or the lowest-intensity stable branch.
pub fn select_branch(branches: &[SteadyState], index: Option<usize>) -> Result<&SteadyState> {
    match index {
        Some(i) => branches
            .get(i)
            .ok_or_else(|| Error::Config(format!("branch {i} requested but only {} exist", branches.len()))),
        None => branches.iter().find(|b| b.eig_stable).ok_or(Error::NoStableBranch),
    }
}
