// SPDX-License-Identifier: Apache-2.0

//! Bundled parameter sets and targets expressed through steady-state quantities.
//!
//! A parameter set can be specified partly through quantities that only exist
//! once the steady state is known: the scaled Kerr strength `eta_p = eta n_s`,
//! the enhanced coupling `g_prime = g_m sqrt(n_s)` and the effective detuning
//! `delta_eff`. [`Pins::apply`] back-solves `eta`, `eps_drive` and `omega_c`
//! so that one branch has exactly those values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_params, RawConfig, SystemParams, UnitMode, HBAR_SI};
use crate::steady::drive_for;

/// Keys accepted as pins in addition to [`crate::model::CONFIG_KEYS`].
pub const PIN_KEYS: &[&str] = &["eta_p", "g_prime", "delta_eff"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pins {
    pub eta_p: Option<f64>,
    pub g_prime: Option<f64>,
    pub delta_eff: Option<f64>,
}

impl Pins {
    pub fn is_active(&self) -> bool {
        self.eta_p.is_some() || self.g_prime.is_some() || self.delta_eff.is_some()
    }

    /// Set one pin from text; returns `Ok(false)` if `key` is not a pin.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let slot = match key {
            "eta_p" => &mut self.eta_p,
            "g_prime" => &mut self.g_prime,
            "delta_eff" => &mut self.delta_eff,
            _ => return Ok(false),
        };
        let v: f64 = value.trim().parse().map_err(|_| Error::Config(format!("{key}: `{value}` is not a number")))?;
        if !v.is_finite() {
            return Err(Error::NonFinite(key.to_string()));
        }
        *slot = Some(v);
        Ok(true)
    }

    /// Resolve `raw` into parameters whose pinned branch carries the requested
    /// values. Returns the parameters and the pinned photon number.
    ///
    /// `eta`, `eps_drive` and `omega_c` are outputs and must not be given.
    pub fn apply(&self, raw: &RawConfig) -> Result<(SystemParams, f64)> {
        for (key, v) in [("eta", raw.eta), ("eps_drive", raw.eps_drive), ("omega_c", raw.omega_c)] {
            if v.is_some() {
                return Err(Error::Config(format!(
                    "`{key}` is determined by the eta_p / g_prime / delta_eff targets; remove one or the other"
                )));
            }
        }
        let eta_p = self.eta_p.ok_or_else(|| Error::MissingField("eta_p".into()))?;
        let g_prime = self.g_prime.ok_or_else(|| Error::MissingField("g_prime".into()))?;
        let delta = self.delta_eff.ok_or_else(|| Error::MissingField("delta_eff".into()))?;
        if eta_p < 0.0 {
            return Err(Error::NegativeValue("eta_p".into()));
        }
        if !(g_prime > 0.0) {
            return Err(Error::NonPositiveRate("g_prime".into()));
        }

        let mut base = raw.clone();
        base.eta = Some(0.0);
        base.eps_drive = Some(0.0);
        base.omega_c = Some(raw.omega_l.unwrap_or(0.0));
        let mut p = make_params(&base)?;
        if !(p.g_m > 0.0) {
            return Err(Error::NonPositiveRate("g_m".into()));
        }
        let n = (g_prime / p.g_m).powi(2);
        p.eta = eta_p / n;
        p.omega_c = p.omega_l + delta + p.radiation_pull() * n;
        p.eps_drive = drive_for(&p, n, delta);
        // Re-validate the completed set.
        let p = make_params(&RawConfig::from(&p))?;
        Ok((p, n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Resolved-sideband regime without Kerr medium.
    Fig2Eta0,
    /// Same with `eta_p = 0.04`.
    Fig2Eta004,
    /// Optomechanical microtoroid in SI units.
    Schliesser,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2_eta0" => Ok(Preset::Fig2Eta0),
            "fig2_eta004" => Ok(Preset::Fig2Eta004),
            "schliesser" => Ok(Preset::Schliesser),
            other => {
                Err(Error::Config(format!("unknown preset `{other}` (expected fig2_eta0, fig2_eta004 or schliesser)")))
            }
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2Eta0 => "fig2_eta0",
            Preset::Fig2Eta004 => "fig2_eta004",
            Preset::Schliesser => "schliesser",
        }
    }

    /// Raw configuration and pins.
    pub fn config(self) -> (RawConfig, Pins) {
        match self {
            Preset::Fig2Eta0 | Preset::Fig2Eta004 => {
                let raw = RawConfig {
                    omega_l: Some(0.0),
                    kappa: Some(0.1),
                    gamma_m: Some(0.01),
                    // g_prime = 0.1 at 100 photons.
                    g_m: Some(0.01),
                    temperature: Some(50.0),
                    unit_mode: Some(UnitMode::Reduced),
                    ..Default::default()
                };
                let eta_p = if self == Preset::Fig2Eta0 { 0.0 } else { 0.04 };
                (raw, Pins { eta_p: Some(eta_p), g_prime: Some(0.1), delta_eff: Some(1.0) })
            }
            Preset::Schliesser => (schliesser(), Pins::default()),
        }
    }
}

fn schliesser() -> RawConfig {
    use std::f64::consts::TAU;
    let omega_m = TAU * 73.5e6;
    let mass = 1e-11;
    let length = (HBAR_SI / (mass * omega_m)).sqrt();
    let kappa = TAU * 7.35e6;
    // 1064 nm drive on the red sideband.
    let omega_l = TAU * 299_792_458.0 / 1064e-9;
    let mut p = SystemParams {
        omega_c: omega_l + omega_m,
        omega_l,
        kappa,
        omega_m,
        gamma_m: TAU * 1.3e3,
        mass,
        // Single-photon coupling rate 2pi x 2 MHz per zero-point length.
        g_m: TAU * 2.0e6 / length,
        eta: TAU * 3.0e6,
        eps_drive: 0.0,
        temperature: 50.0 * HBAR_SI * omega_m / crate::model::K_B_SI,
        hbar: HBAR_SI,
        k_b: crate::model::K_B_SI,
        unit_mode: UnitMode::Si,
    };
    // Drive for one intracavity photon at the bare detuning omega_m.
    let delta_eff = p.bare_detuning() - p.radiation_pull();
    p.eps_drive = drive_for(&p, 1.0, delta_eff);
    RawConfig::from(&p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_quantities;
    use crate::steady::solve_branches;

    #[test]
    fn fig2_pins_hit_targets() {
        for (preset, eta_p) in [(Preset::Fig2Eta0, 0.0), (Preset::Fig2Eta004, 0.04)] {
            let (raw, pins) = preset.config();
            let (p, n) = pins.apply(&raw).unwrap();
            assert!((n - 100.0).abs() < 1e-9);
            let b = solve_branches(&p).unwrap();
            let s = b.iter().find(|s| (s.n_s - n).abs() < 1e-8 * n).unwrap();
            let d = derive_quantities(&p, s);
            assert!((d.eta_p - eta_p).abs() < 1e-12);
            assert!((d.g_prime - 0.1).abs() < 1e-12);
            assert!((d.delta_eff - 1.0).abs() < 1e-12);
            assert!(s.eig_stable);
        }
    }

    #[test]
    fn pins_conflict_with_outputs() {
        let (mut raw, pins) = Preset::Fig2Eta0.config();
        raw.eta = Some(0.1);
        assert!(matches!(pins.apply(&raw), Err(Error::Config(_))));
        let (raw, mut pins) = Preset::Fig2Eta0.config();
        pins.delta_eff = None;
        assert_eq!(pins.apply(&raw).unwrap_err(), Error::MissingField("delta_eff".into()));
    }

    #[test]
    fn schliesser_reduces_sensibly() {
        let p = make_params(&Preset::Schliesser.config().0).unwrap();
        let (r, _) = p.to_reduced();
        assert!((r.kappa - 0.1).abs() < 1e-12);
        assert!((r.temperature - 50.0).abs() < 1e-9);
        assert!((r.g_m - 2.0 / 73.5).abs() < 1e-12);
        let b = solve_branches(&p).unwrap();
        assert!(b.iter().any(|s| (s.n_s - 1.0).abs() < 1e-6));
    }

    #[test]
    fn preset_names_round_trip() {
        for p in [Preset::Fig2Eta0, Preset::Fig2Eta004, Preset::Schliesser] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig3".parse::<Preset>().is_err());
    }
}
