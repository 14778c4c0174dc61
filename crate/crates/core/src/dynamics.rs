// SPDX-License-Identifier: Apache-2.0

//! Linearized fluctuation dynamics around a steady state.
//!
//! State order is `(dq, dp, dx, dy)` with the field quadratures
//! `dx = da + da†` and `dy = i (da† - da)`, so `da = (dx + i dy) / 2`.
//! The drift matrix is the Jacobian of the classical Langevin drift
//!
//! ```text
//! q' = p / m
//! p' = -m omega_m^2 q + hbar g_m |a|^2 - gamma_m p
//! a' = -i delta_0 a + i g_m q a + eps - 2 i eta |a|^2 a - kappa a
//! ```
//!
//! evaluated at the fixed point.

use nalgebra::{Matrix4, Matrix4x3, Schur, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_quantities, SystemParams};
use crate::steady::SteadyState;

/// Real generator of the linearized dynamics and the map from the three noise
/// inputs `(xi, dx_in, dy_in)` onto the state derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub a: Matrix4<f64>,
    pub b: Matrix4x3<f64>,
}

pub fn build_drift_matrix(p: &SystemParams, s: &SteadyState) -> DriftMatrix {
    drift_from_parts(p, s.a_s, s.delta_eff)
}

/// Drift matrix at field amplitude `a_s` and effective detuning `delta_eff`.
pub fn drift_from_parts(p: &SystemParams, a_s: Complex64, delta_eff: f64) -> DriftMatrix {
    let n = a_s.norm_sqr();
    let a2 = a_s * a_s;
    let (u, v) = (a2.re, a2.im);
    let dp = delta_eff + 4.0 * p.eta * n;
    let (kappa, eta, g) = (p.kappa, p.eta, p.g_m);

    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0,                                 1.0 / p.mass, 0.0,                     0.0,
        -p.mass * p.omega_m * p.omega_m,     -p.gamma_m,   p.hbar * g * a_s.re,     p.hbar * g * a_s.im,
        -2.0 * g * a_s.im,                   0.0,          -kappa + 2.0 * eta * v,  dp - 2.0 * eta * u,
        2.0 * g * a_s.re,                    0.0,          -dp - 2.0 * eta * u,     -kappa - 2.0 * eta * v,
    );
    let root = (2.0 * kappa).sqrt();
    #[rustfmt::skip]
    let b = Matrix4x3::new(
        0.0, 0.0,  0.0,
        1.0, 0.0,  0.0,
        0.0, root, 0.0,
        0.0, 0.0,  root,
    );
    DriftMatrix { a, b }
}

/// Deterministic part of the nonlinear Langevin equations in `(q, p, x, y)`.
pub fn langevin_drift(p: &SystemParams, state: &Vector4<f64>) -> Vector4<f64> {
    let (q, mom) = (state[0], state[1]);
    let a = Complex64::new(state[2], state[3]) * 0.5;
    let n = a.norm_sqr();
    let i = Complex64::i();
    let a_dot = -i * p.bare_detuning() * a + i * p.g_m * q * a + p.eps_drive - 2.0 * i * p.eta * n * a - p.kappa * a;
    Vector4::new(
        mom / p.mass,
        -p.mass * p.omega_m * p.omega_m * q + p.hbar * p.g_m * n - p.gamma_m * mom,
        2.0 * a_dot.re,
        2.0 * a_dot.im,
    )
}

/// Fixed point in `(q, p, x, y)` coordinates.
pub fn steady_state_vector(s: &SteadyState) -> Vector4<f64> {
    Vector4::new(s.q_s, s.p_s, 2.0 * s.a_s.re, 2.0 * s.a_s.im)
}

/// Central-difference Jacobian of [`langevin_drift`]; coordinate `j` is
/// perturbed by `step * max(1, |x_j|)`.
pub fn finite_difference_jacobian(p: &SystemParams, state: &Vector4<f64>, step: f64) -> Matrix4<f64> {
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let h = step * state[j].abs().max(1.0);
        let mut hi = *state;
        let mut lo = *state;
        hi[j] += h;
        lo[j] -= h;
        let col = (langevin_drift(p, &hi) - langevin_drift(p, &lo)) / (hi[j] - lo[j]);
        jac.set_column(j, &col);
    }
    jac
}

/// Eigenvalues of a real 4x4 matrix.
pub fn eigenvalues(m: &Matrix4<f64>) -> Result<[Complex64; 4]> {
    let ev = match Schur::try_new(*m, f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues(),
        // Retry with a looser convergence test.
        None => Schur::try_new(*m, 16.0 * f64::EPSILON, 100_000).ok_or(Error::EigenFailure)?.complex_eigenvalues(),
    };
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// Eigenvalues of the drift matrix sorted by `|Im|`, then by `Im`. Mode
/// frequencies are the imaginary parts; decay rates are `-Re`.
pub fn numeric_modes(drift: &DriftMatrix) -> Result<[Complex64; 4]> {
    let mut ev = eigenvalues(&drift.a)?;
    ev.sort_by(|x, y| x.im.abs().partial_cmp(&y.im.abs()).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    Ok(ev)
}

/// Which detuning enters the closed-form eigenfrequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaEtaConvention {
    /// `delta_eff + 6 eta'`.
    #[default]
    Detuning,
    /// `omega_m + 6 eta'`, the resonant-detuning form.
    Literal,
}

impl DeltaEtaConvention {
    pub fn delta_eta(self, p: &SystemParams, delta_eff: f64, eta_p: f64) -> f64 {
        match self {
            DeltaEtaConvention::Detuning => delta_eff + 6.0 * eta_p,
            DeltaEtaConvention::Literal => p.omega_m + 6.0 * eta_p,
        }
    }
}

/// Closed-form eigenfrequencies of the coupled mirror/field-fluctuation modes:
///
/// ```text
/// w± = (D + W - i kappa - i gamma) / 2 ± sqrt(G^2 - (i (D - W) + (kappa - gamma))^2 / 4)
/// ```
///
/// with `W = omega_m`, `D` the Kerr-shifted detuning and `G = g_m_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormModes {
    pub omega_plus: Complex64,
    pub omega_minus: Complex64,
    /// The mirrored pair `-w±*`.
    pub partner_plus: Complex64,
    pub partner_minus: Complex64,
    /// Principal square root in the expression above.
    pub sqrt_term: Complex64,
    pub g_m_eff: f64,
    pub delta_eta: f64,
    pub convention: DeltaEtaConvention,
}

pub fn closed_form_modes(p: &SystemParams, s: &SteadyState, convention: DeltaEtaConvention) -> ClosedFormModes {
    let d = derive_quantities(p, s);
    closed_form_from(p, d.g_m_eff, convention.delta_eta(p, d.delta_eff, d.eta_p), convention)
}

/// Closed form for explicit `g_m_eff` and Kerr-shifted detuning.
pub fn closed_form_from(
    p: &SystemParams,
    g_m_eff: f64,
    delta_eta: f64,
    convention: DeltaEtaConvention,
) -> ClosedFormModes {
    let i = Complex64::i();
    let (w, kappa, gamma) = (p.omega_m, p.kappa, p.gamma_m);
    let centre = (delta_eta + w - i * kappa - i * gamma) / 2.0;
    let mismatch = i * (delta_eta - w) + (kappa - gamma);
    let sqrt_term = (Complex64::new(g_m_eff * g_m_eff, 0.0) - mismatch * mismatch / 4.0).sqrt();
    let omega_plus = centre + sqrt_term;
    let omega_minus = centre - sqrt_term;
    ClosedFormModes {
        omega_plus,
        omega_minus,
        partner_plus: -omega_plus.conj(),
        partner_minus: -omega_minus.conj(),
        sqrt_term,
        g_m_eff,
        delta_eta,
        convention,
    }
}

/// Solve `(-i w I - A) X = rhs` by LU with partial pivoting.
pub fn resolvent_solve(a: &Matrix4<f64>, omega: f64, rhs: &Matrix4x3<f64>) -> Result<Matrix4x3<Complex64>> {
    let m: Matrix4<Complex64> =
        Matrix4::from_diagonal_element(Complex64::new(0.0, -omega)) - a.map(|x| Complex64::new(x, 0.0));
    let rhs_c = rhs.map(|x| Complex64::new(x, 0.0));
    let lu = m.lu();
    let mut x = lu.solve(&rhs_c).ok_or(Error::SingularSystem { omega })?;
    let norm = rhs_c.norm();
    let tol = 1e-12 * norm;
    let mut residual = rhs_c - m * x;
    if residual.norm() > tol {
        // One step of iterative refinement.
        if let Some(dx) = lu.solve(&residual) {
            x += dx;
            residual = rhs_c - m * x;
        }
    }
    if !(residual.norm() <= tol) {
        return Err(Error::SingularSystem { omega });
    }
    Ok(x)
}

/// Mirror displacement per unit force, `[(-i w - A)^-1]_{q,p}`.
pub fn mechanical_response(drift: &DriftMatrix, omega: f64) -> Result<Complex64> {
    let mut force = Matrix4x3::zeros();
    force[(1, 0)] = 1.0;
    Ok(resolvent_solve(&drift.a, omega, &force)?[(0, 0)])
}

/// Local maxima of `|mechanical_response|^2` over positive frequencies.
pub fn response_peaks(drift: &DriftMatrix, modes: &[Complex64; 4]) -> Result<Vec<f64>> {
    let top = modes.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let widest = modes.iter().map(|z| -z.re).fold(0.0, f64::max);
    let narrowest = modes.iter().filter(|z| z.im.abs() > 0.0).map(|z| (-z.re).abs()).fold(f64::INFINITY, f64::min);
    let hi = 1.5 * top + 5.0 * widest;
    if !(hi > 0.0) {
        return Ok(Vec::new());
    }
    let step = (narrowest / 20.0).max(hi / 200_000.0).min(hi / 2_000.0);
    let count = (hi / step).ceil() as usize + 1;
    let power = |w: f64| mechanical_response(drift, w).map(|z| z.norm_sqr());
    let values = (0..count).map(|k| power(k as f64 * step)).collect::<Result<Vec<_>>>()?;

    let mut peaks = Vec::new();
    for k in 1..count - 1 {
        if values[k] > values[k - 1] && values[k] >= values[k + 1] {
            peaks.push(golden_max(&power, (k - 1) as f64 * step, (k + 1) as f64 * step)?);
        }
    }
    Ok(peaks)
}

fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..100 {
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Normal-mode splitting diagnostics for one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmsReport {
    pub closed_form: ClosedFormModes,
    /// Drift-matrix eigenvalues, sorted as in [`numeric_modes`].
    pub numeric_eigenvalues: [Complex64; 4],
    /// Positive frequencies of the two underdamped eigenpairs, ascending.
    pub eigen_frequencies: Vec<f64>,
    /// Difference of the two underdamped eigenfrequencies (0 if fewer than two).
    pub eigen_separation: f64,
    /// Maxima of the mirror response `|chi(w)|^2`, ascending.
    pub response_peaks: Vec<f64>,
    /// Distance between the two response maxima (0 for a single peak).
    pub peak_separation: f64,
    pub splitting_closed: bool,
    pub splitting_numeric: bool,
    /// Resolvability threshold `max(tolerance, (gamma_m + kappa) / 2)`.
    pub threshold: f64,
    pub g_m_eff: f64,
    pub delta_eta: f64,
    pub delta_eta_convention: DeltaEtaConvention,
}

/// Classify normal-mode splitting.
///
/// The closed-form flag compares `Re w+` and `Re w-`. The numeric flag requires
/// the mirror response built from the drift matrix to show two maxima further
/// apart than `max(tolerance, (gamma_m + kappa) / 2)`; two eigenfrequencies
/// alone are not enough, since a mode with little mechanical weight leaves no
/// trace in the mirror spectrum.
pub fn classify_nms(
    p: &SystemParams,
    s: &SteadyState,
    tolerance: f64,
    convention: DeltaEtaConvention,
) -> Result<NmsReport> {
    let closed = closed_form_modes(p, s, convention);
    let drift = build_drift_matrix(p, s);
    let modes = numeric_modes(&drift)?;

    let mut freqs: Vec<f64> = modes.iter().filter(|z| z.im > 0.0).map(|z| z.im).collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let eigen_separation = if freqs.len() >= 2 { freqs[freqs.len() - 1] - freqs[0] } else { 0.0 };

    let peaks = response_peaks(&drift, &modes)?;
    let peak_separation = if peaks.len() >= 2 { peaks[peaks.len() - 1] - peaks[0] } else { 0.0 };
    let threshold = tolerance.max(0.5 * (p.gamma_m + p.kappa));

    Ok(NmsReport {
        closed_form: closed,
        numeric_eigenvalues: modes,
        eigen_frequencies: freqs,
        eigen_separation,
        splitting_closed: (closed.omega_plus.re - closed.omega_minus.re).abs() > tolerance,
        splitting_numeric: peaks.len() >= 2 && peak_separation > threshold,
        response_peaks: peaks,
        peak_separation,
        threshold,
        g_m_eff: closed.g_m_eff,
        delta_eta: closed.delta_eta,
        delta_eta_convention: convention,
    })
}
