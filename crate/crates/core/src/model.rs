// SPDX-License-Identifier: Apache-2.0

//! Physical parameters, unit conventions and the shorthand quantities derived
//! from a steady state.
//!
//! Two unit systems are supported. In [`UnitMode::Reduced`] the constants
//! `hbar`, `k_b`, the mirror mass and the mechanical frequency are all exactly
//! one, so every rate is measured in units of `omega_m`, lengths in units of
//! `sqrt(hbar / (m omega_m))` and temperatures as `k_B T / (hbar omega_m)`.
//! [`UnitMode::Si`] carries physical constants; [`SystemParams::to_reduced`]
//! converts to the canonical reduced system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steady::SteadyState;

/// CODATA 2018 reduced Planck constant, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// CODATA 2018 Boltzmann constant, J / K.
pub const K_B_SI: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    /// hbar = m = omega_m = k_B = 1.
    #[default]
    Reduced,
    Si,
}

/// Validated parameter set for the driven Kerr cavity with a movable mirror.
///
/// Serializes to the same flat key-value layout that [`RawConfig`] ingests, so a
/// resolved parameter set can be written out and read back verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    /// Cavity resonance.
    pub omega_c: f64,
    /// Drive laser frequency.
    pub omega_l: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    /// Mechanical frequency.
    pub omega_m: f64,
    /// Mechanical damping rate (momentum damping, `p' = ... - gamma_m p`).
    pub gamma_m: f64,
    pub mass: f64,
    /// Optomechanical coupling, frequency per unit length.
    pub g_m: f64,
    /// Kerr anharmonicity.
    pub eta: f64,
    /// Drive amplitude, real and non-negative.
    pub eps_drive: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub unit_mode: UnitMode,
}

/// Flat configuration as read from JSON. Every key is optional at parse time so
/// that missing keys produce a named error rather than a serde message.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_m: Option<f64>,
    /// Alternative to `g_m`: cavity length `L`, giving `g_m = omega_c / L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_drive: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_mode: Option<UnitMode>,
}

/// Keys accepted by [`RawConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "omega_c",
    "omega_l",
    "kappa",
    "omega_m",
    "gamma_m",
    "mass",
    "g_m",
    "cavity_length",
    "eta",
    "eps_drive",
    "temperature",
    "hbar",
    "k_b",
    "unit_mode",
];

impl RawConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Set one key from its textual value. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key == "unit_mode" {
            self.unit_mode = Some(match value.trim() {
                "reduced" => UnitMode::Reduced,
                "si" => UnitMode::Si,
                other => return Err(Error::Config(format!("unit_mode: expected `reduced` or `si`, got `{other}`"))),
            });
            return Ok(());
        }
        let v: f64 = value.trim().parse().map_err(|_| Error::Config(format!("{key}: `{value}` is not a number")))?;
        let slot = match key {
            "omega_c" => &mut self.omega_c,
            "omega_l" => &mut self.omega_l,
            "kappa" => &mut self.kappa,
            "omega_m" => &mut self.omega_m,
            "gamma_m" => &mut self.gamma_m,
            "mass" => &mut self.mass,
            "g_m" => &mut self.g_m,
            "cavity_length" => &mut self.cavity_length,
            "eta" => &mut self.eta,
            "eps_drive" => &mut self.eps_drive,
            "temperature" => &mut self.temperature,
            "hbar" => &mut self.hbar,
            "k_b" => &mut self.k_b,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        };
        *slot = Some(v);
        Ok(())
    }
}

impl From<&SystemParams> for RawConfig {
    fn from(p: &SystemParams) -> Self {
        RawConfig {
            omega_c: Some(p.omega_c),
            omega_l: Some(p.omega_l),
            kappa: Some(p.kappa),
            omega_m: Some(p.omega_m),
            gamma_m: Some(p.gamma_m),
            mass: Some(p.mass),
            g_m: Some(p.g_m),
            cavity_length: None,
            eta: Some(p.eta),
            eps_drive: Some(p.eps_drive),
            temperature: Some(p.temperature),
            hbar: Some(p.hbar),
            k_b: Some(p.k_b),
            unit_mode: Some(p.unit_mode),
        }
    }
}

fn required(name: &str, v: Option<f64>) -> Result<f64> {
    let v = v.ok_or_else(|| Error::MissingField(name.to_string()))?;
    if !v.is_finite() {
        return Err(Error::NonFinite(name.to_string()));
    }
    Ok(v)
}

/// Reduced-mode unit constant: may be omitted, but if present must equal one.
fn unit_constant(name: &str, v: Option<f64>) -> Result<f64> {
    match v {
        None => Ok(1.0),
        Some(x) if !x.is_finite() => Err(Error::NonFinite(name.to_string())),
        Some(1.0) => Ok(1.0),
        Some(x) => Err(Error::InconsistentUnits(format!("reduced mode requires {name} = 1, got {x}"))),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPositiveRate(name.to_string()))
    }
}

fn non_negative(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::NegativeValue(name.to_string()))
    }
}

/// Validate a raw configuration into [`SystemParams`].
pub fn make_params(raw: &RawConfig) -> Result<SystemParams> {
    let unit_mode = raw.unit_mode.unwrap_or_default();
    let (hbar, k_b, mass, omega_m) = match unit_mode {
        UnitMode::Reduced => (
            unit_constant("hbar", raw.hbar)?,
            unit_constant("k_b", raw.k_b)?,
            unit_constant("mass", raw.mass)?,
            unit_constant("omega_m", raw.omega_m)?,
        ),
        UnitMode::Si => {
            let hbar = match raw.hbar {
                Some(_) => required("hbar", raw.hbar)?,
                None => HBAR_SI,
            };
            let k_b = match raw.k_b {
                Some(_) => required("k_b", raw.k_b)?,
                None => K_B_SI,
            };
            (
                positive("hbar", hbar)?,
                positive("k_b", k_b)?,
                positive("mass", required("mass", raw.mass)?)?,
                positive("omega_m", required("omega_m", raw.omega_m)?)?,
            )
        }
    };

    let omega_c = required("omega_c", raw.omega_c)?;
    let omega_l = required("omega_l", raw.omega_l)?;
    let kappa = positive("kappa", required("kappa", raw.kappa)?)?;
    let gamma_m = non_negative("gamma_m", required("gamma_m", raw.gamma_m)?)?;
    let eta = non_negative("eta", required("eta", raw.eta)?)?;
    let eps_drive = non_negative("eps_drive", required("eps_drive", raw.eps_drive)?)?;
    let temperature = non_negative("temperature", required("temperature", raw.temperature)?)?;

    // Direct entry wins over the cavity length.
    let g_m = match (raw.g_m, raw.cavity_length) {
        (Some(_), _) => required("g_m", raw.g_m)?,
        (None, Some(_)) => {
            let length = positive("cavity_length", required("cavity_length", raw.cavity_length)?)?;
            omega_c / length
        }
        (None, None) => return Err(Error::MissingField("g_m".to_string())),
    };
    let g_m = non_negative("g_m", g_m)?;

    Ok(SystemParams {
        omega_c,
        omega_l,
        kappa,
        omega_m,
        gamma_m,
        mass,
        g_m,
        eta,
        eps_drive,
        temperature,
        hbar,
        k_b,
        unit_mode,
    })
}

/// Physical scales of the reduced unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub omega_m: f64,
    pub mass: f64,
    pub hbar: f64,
    pub k_b: f64,
}

impl Scales {
    /// Identity scales (already reduced).
    pub const UNIT: Scales = Scales { omega_m: 1.0, mass: 1.0, hbar: 1.0, k_b: 1.0 };

    /// Length unit `sqrt(hbar / (m omega_m))`.
    pub fn length(&self) -> f64 {
        (self.hbar / (self.mass * self.omega_m)).sqrt()
    }

    /// Temperature unit `hbar omega_m / k_B`.
    pub fn temperature(&self) -> f64 {
        self.hbar * self.omega_m / self.k_b
    }
}

impl SystemParams {
    /// Bare detuning `omega_c - omega_l`.
    pub fn bare_detuning(&self) -> f64 {
        self.omega_c - self.omega_l
    }

    pub fn scales(&self) -> Scales {
        Scales { omega_m: self.omega_m, mass: self.mass, hbar: self.hbar, k_b: self.k_b }
    }

    /// Static mirror displacement per intracavity photon, `hbar g_m / (m omega_m^2)`.
    pub fn displacement_per_photon(&self) -> f64 {
        self.hbar * self.g_m / (self.mass * self.omega_m * self.omega_m)
    }

    /// Frequency pull per intracavity photon from the static mirror shift.
    pub fn radiation_pull(&self) -> f64 {
        self.g_m * self.displacement_per_photon()
    }

    /// Express the parameters in reduced units, returning the scales needed to go back.
    pub fn to_reduced(&self) -> (SystemParams, Scales) {
        let s = self.scales();
        let w = s.omega_m;
        let reduced = SystemParams {
            omega_c: self.omega_c / w,
            omega_l: self.omega_l / w,
            kappa: self.kappa / w,
            omega_m: 1.0,
            gamma_m: self.gamma_m / w,
            mass: 1.0,
            g_m: self.g_m * s.length() / w,
            eta: self.eta / w,
            eps_drive: self.eps_drive / w,
            temperature: self.temperature / s.temperature(),
            hbar: 1.0,
            k_b: 1.0,
            unit_mode: UnitMode::Reduced,
        };
        (reduced, s)
    }

    /// Inverse of [`SystemParams::to_reduced`]. `self` must be in reduced units.
    pub fn from_reduced(&self, s: &Scales) -> SystemParams {
        let w = s.omega_m;
        SystemParams {
            omega_c: self.omega_c * w,
            omega_l: self.omega_l * w,
            kappa: self.kappa * w,
            omega_m: w,
            gamma_m: self.gamma_m * w,
            mass: s.mass,
            g_m: self.g_m * w / s.length(),
            eta: self.eta * w,
            eps_drive: self.eps_drive * w,
            temperature: self.temperature * s.temperature(),
            hbar: s.hbar,
            k_b: s.k_b,
            unit_mode: if *s == Scales::UNIT { UnitMode::Reduced } else { UnitMode::Si },
        }
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { hbar: self.hbar, k_b: self.k_b, temperature: self.temperature }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("SystemParams serializes")
    }
}

/// Kerr coefficient from the third-order susceptibility:
/// `eta = 3 hbar omega_c^2 Re[chi3] / (2 eps_0 V_c)`.
pub fn eta_from_susceptibility(omega_c: f64, re_chi3: f64, eps_0: f64, v_c: f64, hbar: f64) -> Result<f64> {
    if !(v_c > 0.0) {
        return Err(Error::ZeroVolume);
    }
    if !(eps_0 > 0.0) {
        return Err(Error::NonPositiveRate("eps_0".to_string()));
    }
    Ok(3.0 * hbar * omega_c * omega_c * re_chi3 / (2.0 * eps_0 * v_c))
}

/// Noise statistics of the two baths.
///
/// The mirror bath enters through the symmetrized kernel
/// `f(w) = w coth(hbar w / 2 k_B T)`; the symmetrized force spectrum is
/// `hbar m gamma_m f(w)`. The optical input is vacuum with unit symmetrized
/// density in each quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub hbar: f64,
    pub k_b: f64,
    pub temperature: f64,
}

impl NoiseModel {
    /// Below this value of `|hbar w / 2 k_B T|` the kernel uses its Laurent expansion.
    pub const SERIES_THRESHOLD: f64 = 1e-6;

    pub fn thermal_kernel(&self, omega: f64) -> f64 {
        let kt = self.k_b * self.temperature;
        if kt == 0.0 {
            return omega.abs();
        }
        let x = self.hbar * omega / (2.0 * kt);
        if x.abs() < Self::SERIES_THRESHOLD {
            // w coth(x) = 2kT/hbar + hbar w^2 / (6 kT) + O(w^4)
            2.0 * kt / self.hbar + self.hbar * omega * omega / (6.0 * kt)
        } else {
            omega / x.tanh()
        }
    }

    /// Symmetrized spectral density of each vacuum input quadrature.
    pub fn vacuum_density(&self) -> f64 {
        1.0
    }
}

/// Shorthand symbols evaluated on one steady-state branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub n_s: f64,
    pub a_s: Complex64,
    pub q_s: f64,
    /// `omega_c - omega_l`.
    pub delta_0: f64,
    /// Effective detuning including the static mirror shift.
    pub delta_eff: f64,
    /// `eta n_s`.
    pub eta_p: f64,
    /// `delta_cap_prime^2 - 4 eta_p^2`.
    pub delta_prime_sq: f64,
    /// `delta_eff + 4 eta_p`.
    pub delta_cap_prime: f64,
    /// `delta_eff + 2 eta_p`.
    pub small_delta: f64,
    /// `delta_cap_prime - eta_p`.
    pub delta_dprime: f64,
    /// `g_m |a_s|`.
    pub g_prime: f64,
    /// `2 g_m |a_s| sqrt(hbar / (m omega_m))`.
    pub g_m_eff: f64,
    /// Kerr-shifted detuning `delta_eff + 6 eta_p`.
    pub delta_eta: f64,
}

pub fn derive_quantities(params: &SystemParams, branch: &SteadyState) -> DerivedQuantities {
    DerivedQuantities::from_parts(params, branch.n_s, branch.a_s, branch.q_s, branch.delta_eff)
}

impl DerivedQuantities {
    pub fn from_parts(params: &SystemParams, n_s: f64, a_s: Complex64, q_s: f64, delta_eff: f64) -> Self {
        let eta_p = params.eta * n_s;
        let delta_cap_prime = delta_eff + 4.0 * eta_p;
        let amplitude = n_s.sqrt();
        DerivedQuantities {
            n_s,
            a_s,
            q_s,
            delta_0: params.bare_detuning(),
            delta_eff,
            eta_p,
            delta_prime_sq: delta_cap_prime * delta_cap_prime - 4.0 * eta_p * eta_p,
            delta_cap_prime,
            small_delta: delta_eff + 2.0 * eta_p,
            delta_dprime: delta_cap_prime - eta_p,
            g_prime: params.g_m * amplitude,
            g_m_eff: 2.0 * params.g_m * amplitude * (params.hbar / (params.mass * params.omega_m)).sqrt(),
            delta_eta: delta_eff + 6.0 * eta_p,
        }
    }
}
