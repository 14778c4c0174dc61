// SPDX-License-Identifier: Apache-2.0

//! Side-by-side comparison of each closed-form object with its exact
//! counterpart from the linearized dynamics.
//!
//! The exact effective spring and damping follow from the mirror response
//! `chi(w) = [(-i w - A)^-1]_{q,p}`:
//! `m W_eff^2(w) = Re chi^-1 + m w^2` and `m G_eff(w) = -Im chi^-1 / w`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{build_drift_matrix, classify_nms, mechanical_response, DeltaEtaConvention};
use crate::error::Result;
use crate::model::{derive_quantities, SystemParams};
use crate::spectrum::{ClosedForm, Convention, GridSpec};
use crate::steady::{eigen_stability, routh_hurwitz, SteadyState};
use crate::verification::oracle::Oracle;

/// Relative deviation below which a closed-form object is said to agree.
pub const AGREEMENT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditItem {
    pub name: String,
    pub max_relative_deviation: f64,
    pub median_relative_deviation: f64,
    pub agrees: bool,
    pub verdict: String,
}

impl AuditItem {
    fn from_deviations(name: &str, mut dev: Vec<f64>) -> Self {
        dev.retain(|d| !d.is_nan());
        dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max = dev.last().copied().unwrap_or(0.0);
        let median = if dev.is_empty() { 0.0 } else { dev[dev.len() / 2] };
        let agrees = max <= AGREEMENT;
        let verdict = if agrees {
            format!("agree <= {AGREEMENT:e}")
        } else {
            format!("deviates: max relative deviation {max:.3e}")
        };
        AuditItem {
            name: name.to_string(),
            max_relative_deviation: max,
            median_relative_deviation: median,
            agrees,
            verdict,
        }
    }
}

/// Constants of the closed form recovered from the exact response. Each is
/// `None` when its prefactor vanishes (no coupling, or zero detuning term).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    /// `C` in `W_eff^2 = W^2 - C hbar g'^2 d'' (...) / (m D)`, at `w = 0`.
    pub spring: Option<f64>,
    /// Constant in `G_eff = gamma_m + K hbar g'^2 d'' kappa / (m D)`, at `w = omega_m`.
    pub damping: Option<f64>,
    /// `R` in the radiation-pressure noise term, at `w = omega_m`.
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub branch_index: usize,
    pub convention: Convention,
    pub delta_eta_convention: DeltaEtaConvention,
    /// Phase of the intracavity amplitude; the closed forms depend on `|a_s|` only.
    pub phase_a_s: f64,
    pub omega: Vec<f64>,
    pub s_q_relative_deviation: Vec<f64>,
    pub items: Vec<AuditItem>,
    pub fitted: FittedConstants,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE)
    }
}

pub fn audit_report(
    p: &SystemParams,
    s: &SteadyState,
    grid: &GridSpec,
    convention: Convention,
    delta_eta: DeltaEtaConvention,
) -> Result<AuditReport> {
    grid.validate()?;
    let oracle = Oracle::new(p, s)?;
    let drift = build_drift_matrix(p, s);
    let cf = ClosedForm::new(p, s, convention);
    let d = derive_quantities(p, s);
    let m = p.mass;
    let mass_on_gamma = match convention {
        Convention::Normalized => 1.0,
        Convention::Literal => m,
    };

    let omega: Vec<f64> = grid.points().iter().map(|x| x * p.omega_m).collect();
    let mut s_dev = Vec::with_capacity(omega.len());
    let mut spring_dev = Vec::with_capacity(omega.len());
    let mut damping_dev = Vec::with_capacity(omega.len());
    for &w in &omega {
        s_dev.push(rel(cf.s_q(w), oracle.s_q(w)?));
        let inv = 1.0 / mechanical_response(&drift, w)?;
        let r = cf.response(w);
        spring_dev.push(rel(r.omega_eff_sq, inv.re / m + w * w));
        if w != 0.0 {
            damping_dev.push(rel(r.gamma_eff / mass_on_gamma, -inv.im / (m * w)));
        }
    }

    let nms = classify_nms(p, s, 1e-3, delta_eta)?;
    let mut closed: Vec<f64> = vec![nms.closed_form.omega_plus.re, nms.closed_form.omega_minus.re];
    closed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mode_dev: Vec<f64> = if nms.eigen_frequencies.len() == 2 {
        closed.iter().zip(&nms.eigen_frequencies).map(|(c, e)| rel(*c, *e)).collect()
    } else {
        vec![f64::INFINITY]
    };
    let rh_agrees = routh_hurwitz(p, s).iter().all(|&x| x) == eigen_stability(p, s)?;

    let items = vec![
        AuditItem::from_deviations("displacement_spectrum", s_dev.clone()),
        AuditItem::from_deviations("effective_spring", spring_dev),
        AuditItem::from_deviations("effective_damping", damping_dev),
        AuditItem::from_deviations("mode_frequencies", mode_dev),
        AuditItem {
            name: "routh_hurwitz".to_string(),
            max_relative_deviation: if rh_agrees { 0.0 } else { 1.0 },
            median_relative_deviation: if rh_agrees { 0.0 } else { 1.0 },
            agrees: rh_agrees,
            verdict: if rh_agrees {
                "sign verdict matches eigenvalue stability".to_string()
            } else {
                "sign verdict contradicts eigenvalue stability".to_string()
            },
        },
    ];

    // Constants recovered from the exact response.
    let coupling = p.hbar * d.g_prime * d.g_prime * d.delta_dprime;
    let k2 = p.kappa * p.kappa;
    let den = |w: f64| {
        let x = k2 + d.delta_prime_sq - w * w;
        x * x + 4.0 * k2 * w * w
    };
    let wm = p.omega_m;
    let spring = (coupling != 0.0).then(|| -> Result<f64> {
        let inv = 1.0 / mechanical_response(&drift, 0.0)?;
        let exact = inv.re / m;
        Ok((p.omega_m * p.omega_m - exact) * m * den(0.0) / (coupling * (k2 + d.delta_prime_sq)))
    });
    let damping = (coupling != 0.0).then(|| -> Result<f64> {
        let inv = 1.0 / mechanical_response(&drift, wm)?;
        let exact = -inv.im / (m * wm);
        Ok((exact - p.gamma_m) * m * den(wm) / (coupling * p.kappa))
    });
    let shot_scale = p.hbar * p.hbar * p.kappa * d.g_prime * d.g_prime * (wm * wm + k2 + d.small_delta * d.small_delta);
    let noise = (shot_scale != 0.0).then(|| -> Result<f64> {
        let chi = mechanical_response(&drift, wm)?;
        let thermal = p.hbar * m * p.gamma_m * p.noise().thermal_kernel(wm);
        Ok((oracle.s_q(wm)? / chi.norm_sqr() - thermal) * den(wm) / shot_scale)
    });

    Ok(AuditReport {
        branch_index: s.branch_index,
        convention,
        delta_eta_convention: delta_eta,
        phase_a_s: s.a_s.arg(),
        omega,
        s_q_relative_deviation: s_dev,
        items,
        fitted: FittedConstants {
            spring: spring.transpose()?,
            damping: damping.transpose()?,
            noise: noise.transpose()?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UnitMode;
    use crate::steady::{drive_for, solve_branches};

    fn pinned(eta_p: f64, g: f64) -> (SystemParams, SteadyState) {
        let n = 100.0;
        let mut p = SystemParams {
            omega_c: 0.0,
            omega_l: 0.0,
            kappa: 0.1,
            omega_m: 1.0,
            gamma_m: 0.01,
            mass: 1.0,
            g_m: g,
            eta: eta_p / n,
            eps_drive: 0.0,
            temperature: 50.0,
            hbar: 1.0,
            k_b: 1.0,
            unit_mode: UnitMode::Reduced,
        };
        p.omega_c = 1.0 + p.radiation_pull() * n;
        p.eps_drive = drive_for(&p, n, 1.0);
        let s = solve_branches(&p).unwrap().into_iter().find(|b| (b.n_s - n).abs() < 1e-6).unwrap();
        (p, s)
    }

    fn item<'a>(r: &'a AuditReport, name: &str) -> &'a AuditItem {
        r.items.iter().find(|i| i.name == name).unwrap()
    }

    #[test]
    fn kerr_free_objects_agree() {
        let (p, s) = pinned(0.0, 0.01);
        let r =
            audit_report(&p, &s, &GridSpec::default(), Convention::Normalized, DeltaEtaConvention::Detuning).unwrap();
        for name in ["displacement_spectrum", "effective_spring", "effective_damping", "routh_hurwitz"] {
            assert!(item(&r, name).agrees, "{name}: {:?}", item(&r, name));
        }
        let f = r.fitted;
        assert!((f.spring.unwrap() - 2.0).abs() < 1e-6);
        assert!((f.damping.unwrap() - 4.0).abs() < 1e-6);
        assert!((f.noise.unwrap() - 2.0).abs() < 1e-6);
        // The literal constants do not reproduce the exact response.
        let lit =
            audit_report(&p, &s, &GridSpec::default(), Convention::Literal, DeltaEtaConvention::Detuning).unwrap();
        assert!(!item(&lit, "displacement_spectrum").agrees);
    }

    #[test]
    fn uncoupled_objects_agree() {
        let (p, s) = pinned(0.0, 0.0);
        let r =
            audit_report(&p, &s, &GridSpec::default(), Convention::Normalized, DeltaEtaConvention::Detuning).unwrap();
        for name in ["displacement_spectrum", "effective_spring", "effective_damping", "routh_hurwitz"] {
            assert!(item(&r, name).agrees, "{name}");
        }
        assert_eq!(r.fitted.spring, None);
    }

    #[test]
    fn kerr_report_is_emitted() {
        let (p, s) = pinned(0.04, 0.01);
        let r =
            audit_report(&p, &s, &GridSpec::default(), Convention::Normalized, DeltaEtaConvention::Detuning).unwrap();
        assert_eq!(r.s_q_relative_deviation.len(), 4001);
        assert_eq!(r.items.len(), 5);
        assert!(serde_json::to_string(&r).is_ok());
    }
}
