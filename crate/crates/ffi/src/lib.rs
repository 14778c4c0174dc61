// SPDX-License-Identifier: Apache-2.0

//! C ABI for `optomech-core`.
//!
//! Objects cross the boundary as opaque handles created by calls such as
//! [`om_params_preset`] and released by the matching `om_*_free`. Every
//! fallible call returns an [`OmStatus`]; on failure the message is available
//! from [`om_last_error`] on the same thread. Panics are caught and reported
//! as [`OmStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use optomech_core::cli::{choose_branch, Layers};
use optomech_core::dynamics::{classify_nms, DeltaEtaConvention};
use optomech_core::presets::Preset;
use optomech_core::spectrum::{
    compute_spectrum, effective_temperature, Convention, GridSpec, SpectrumResult, TemperatureOptions,
};
use optomech_core::steady::SteadyState;
use optomech_core::{solve_branches, Error, ErrorKind, RawConfig, SystemParams};

/// Result of every fallible call. Codes 1 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    Physics = 3,
    Numerical = 4,
    NullPointer = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// Spectrum convention selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmConvention {
    /// Constants that reproduce the exact linear response without Kerr medium.
    Normalized = 0,
    /// Constants 4 and 4 in spring and noise terms, damping weighted by mass.
    Literal = 1,
}

/// Column selector for [`om_spectrum_column`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmColumn {
    Omega = 0,
    SqClosed = 1,
    SqOracle = 2,
    Sp = 3,
    OmegaEff = 4,
    GammaEff = 5,
}

/// Parameter layers: a raw configuration plus optional steady-state targets.
pub struct OmParams {
    layers: Layers,
}

/// All steady-state branches of one resolved parameter set.
pub struct OmBranches {
    params: SystemParams,
    branches: Vec<SteadyState>,
    target: Option<f64>,
}

/// Displacement spectrum on a frequency grid.
pub struct OmSpectrum {
    result: SpectrumResult,
}

/// One steady-state branch.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OmBranchInfo {
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

/// Normal modes of one branch.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OmModes {
    /// Drift-matrix eigenvalues, sorted by imaginary part magnitude.
    pub eigen_re: [f64; 4],
    pub eigen_im: [f64; 4],
    /// Closed-form `w+` and `w-`.
    pub closed_re: [f64; 2],
    pub closed_im: [f64; 2],
    /// Distance between the two mirror-response maxima, 0 for one.
    pub peak_separation: f64,
    pub splitting_closed: bool,
    pub splitting_numeric: bool,
}

/// Effective mirror temperature. When the integral does not settle the call
/// returns [`OmStatus::Numerical`], `t_eff` is NaN and the last two estimates
/// are in `lower` and `upper`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OmTemperature {
    pub t_eff: f64,
    pub q2_mean: f64,
    pub p2_mean: f64,
    pub omega_max: f64,
    pub lower: f64,
    pub upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OmStatus {
    match e.kind() {
        ErrorKind::Config => OmStatus::Config,
        ErrorKind::Physics => OmStatus::Physics,
        ErrorKind::Numerical => OmStatus::Numerical,
        ErrorKind::Io => OmStatus::Io,
    }
}

/// Failure carried out of a guarded body.
enum Fail {
    Core(Error),
    Null(&'static str),
    Invalid(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> OmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => OmStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("`{name}` is null"));
            OmStatus::NullPointer
        }
        Ok(Err(Fail::Invalid(msg))) => {
            set_error(msg);
            OmStatus::InvalidArgument
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            OmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn slot<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

fn convention(c: c_int) -> Result<Convention, Fail> {
    match c {
        0 => Ok(Convention::Normalized),
        1 => Ok(Convention::Literal),
        other => Err(Fail::Invalid(format!("unknown convention {other}"))),
    }
}

fn branch(b: &OmBranches, index: usize) -> Result<&SteadyState, Fail> {
    b.branches
        .get(index)
        .ok_or_else(|| Fail::Invalid(format!("branch {index} out of range ({} branches)", b.branches.len())))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn om_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn om_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn om_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parameters of a bundled preset (`fig2_eta0`, `fig2_eta004`, `schliesser`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_params_preset(name: *const c_char, out: *mut *mut OmParams) -> OmStatus {
    guard(|| {
        let preset: Preset = text(name, "name")?.parse()?;
        let out = slot(out, "out")?;
        let (raw, pins) = preset.config();
        *out = Box::into_raw(Box::new(OmParams { layers: Layers { raw, pins } }));
        Ok(())
    })
}

/// Parameters from JSON: a flat parameter object, or a summary with a
/// `params` member.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_params_from_json(json: *const c_char, out: *mut *mut OmParams) -> OmStatus {
    guard(|| {
        let value: serde_json::Value = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        let params = match value.get("params") {
            Some(p) if p.is_object() => p.clone(),
            _ => value,
        };
        let raw: RawConfig = serde_json::from_value(params).map_err(Error::from)?;
        let out = slot(out, "out")?;
        *out = Box::into_raw(Box::new(OmParams { layers: Layers { raw, pins: Default::default() } }));
        Ok(())
    })
}

/// Set one parameter or steady-state target (`eta_p`, `g_prime`, `delta_eff`)
/// from its textual value.
///
/// # Safety
/// `params` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn om_params_set(params: *mut OmParams, key: *const c_char, value: *const c_char) -> OmStatus {
    guard(|| {
        let params = slot(params, "params")?;
        let (key, value) = (text(key, "key")?, text(value, "value")?);
        let mut next = params.layers.clone();
        next.set(key, value)?;
        params.layers = next;
        Ok(())
    })
}

/// Resolved parameter set as JSON; release with [`om_string_free`].
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_params_to_json(params: *const OmParams, out: *mut *mut c_char) -> OmStatus {
    guard(|| {
        let (p, _) = obj(params, "params")?.layers.resolve()?;
        let out = slot(out, "out")?;
        *out = CString::new(p.to_json()).map_err(|e| Fail::Invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a live handle, which becomes invalid.
#[no_mangle]
pub unsafe extern "C" fn om_params_free(params: *mut OmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Resolve the parameters and solve for every steady-state branch.
///
/// # Safety
/// `params` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_solve_branches(params: *const OmParams, out: *mut *mut OmBranches) -> OmStatus {
    guard(|| {
        let (p, target) = obj(params, "params")?.layers.resolve()?;
        let branches = solve_branches(&p)?;
        let out = slot(out, "out")?;
        *out = Box::into_raw(Box::new(OmBranches { params: p, branches, target }));
        Ok(())
    })
}

/// Number of branches; 0 for a null handle.
///
/// # Safety
/// `branches` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_branches_len(branches: *const OmBranches) -> usize {
    branches.as_ref().map_or(0, |b| b.branches.len())
}

/// # Safety
/// `branches` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_branches_get(
    branches: *const OmBranches,
    index: usize,
    out: *mut OmBranchInfo,
) -> OmStatus {
    guard(|| {
        let s = branch(obj(branches, "branches")?, index)?;
        *slot(out, "out")? = OmBranchInfo {
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
        };
        Ok(())
    })
}

/// Default branch: the one closest to the targeted photon number when
/// targets are set, else the lowest stable branch.
///
/// # Safety
/// `branches` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_branches_default(branches: *const OmBranches, out: *mut usize) -> OmStatus {
    guard(|| {
        let b = obj(branches, "branches")?;
        *slot(out, "out")? = choose_branch(&b.branches, None, b.target)?.branch_index;
        Ok(())
    })
}

/// # Safety
/// `branches` must be null or a live handle, which becomes invalid.
#[no_mangle]
pub unsafe extern "C" fn om_branches_free(branches: *mut OmBranches) {
    if !branches.is_null() {
        drop(Box::from_raw(branches));
    }
}

/// Closed-form and numeric normal modes of one branch.
///
/// # Safety
/// `branches` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_modes(branches: *const OmBranches, index: usize, out: *mut OmModes) -> OmStatus {
    guard(|| {
        let b = obj(branches, "branches")?;
        let r = classify_nms(&b.params, branch(b, index)?, 1e-3, DeltaEtaConvention::Detuning)?;
        let out = slot(out, "out")?;
        for (k, z) in r.numeric_eigenvalues.iter().enumerate() {
            out.eigen_re[k] = z.re;
            out.eigen_im[k] = z.im;
        }
        let cf = r.closed_form;
        out.closed_re = [cf.omega_plus.re, cf.omega_minus.re];
        out.closed_im = [cf.omega_plus.im, cf.omega_minus.im];
        out.peak_separation = r.peak_separation;
        out.splitting_closed = r.splitting_closed;
        out.splitting_numeric = r.splitting_numeric;
        Ok(())
    })
}

/// Displacement spectrum of one stable branch on `count` points from
/// `start` to `stop` (units of the mechanical frequency).
///
/// # Safety
/// `branches` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_spectrum(
    branches: *const OmBranches,
    index: usize,
    start: f64,
    stop: f64,
    count: usize,
    convention_id: c_int,
    out: *mut *mut OmSpectrum,
) -> OmStatus {
    guard(|| {
        let b = obj(branches, "branches")?;
        let grid = GridSpec { start, stop, count, mirrored: false };
        let result = compute_spectrum(&b.params, branch(b, index)?, &grid, convention(convention_id)?)?;
        *slot(out, "out")? = Box::into_raw(Box::new(OmSpectrum { result }));
        Ok(())
    })
}

/// Number of grid points; 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn om_spectrum_len(spectrum: *const OmSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.result.rows.len())
}

/// Copy one column into `buf`, which must hold [`om_spectrum_len`] values.
///
/// # Safety
/// `spectrum` must be a live handle; `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn om_spectrum_column(
    spectrum: *const OmSpectrum,
    column: c_int,
    buf: *mut f64,
    len: usize,
) -> OmStatus {
    guard(|| {
        let rows = &obj(spectrum, "spectrum")?.result.rows;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        if len < rows.len() {
            return Err(Fail::Invalid(format!("buffer holds {len} values, {} needed", rows.len())));
        }
        let pick: fn(&optomech_core::spectrum::SpectrumRow) -> f64 = match column {
            0 => |r| r.omega,
            1 => |r| r.s_q_closed,
            2 => |r| r.s_q_oracle,
            3 => |r| r.s_p,
            4 => |r| r.omega_eff,
            5 => |r| r.gamma_eff,
            other => return Err(Fail::Invalid(format!("unknown column {other}"))),
        };
        let dst = std::slice::from_raw_parts_mut(buf, rows.len());
        for (d, r) in dst.iter_mut().zip(rows) {
            *d = pick(r);
        }
        Ok(())
    })
}

/// Peak frequencies of the closed-form spectrum. Writes at most `cap` values
/// and stores the total number of peaks in `found`.
///
/// # Safety
/// `spectrum` must be a live handle; `buf` writable for `cap` values (may be
/// null when `cap` is 0); `found` writable.
#[no_mangle]
pub unsafe extern "C" fn om_spectrum_peaks(
    spectrum: *const OmSpectrum,
    buf: *mut f64,
    cap: usize,
    found: *mut usize,
) -> OmStatus {
    guard(|| {
        let peaks = &obj(spectrum, "spectrum")?.result.peaks;
        *slot(found, "found")? = peaks.len();
        if cap > 0 {
            if buf.is_null() {
                return Err(Fail::Null("buf"));
            }
            let dst = std::slice::from_raw_parts_mut(buf, cap);
            for (d, p) in dst.iter_mut().zip(peaks) {
                *d = p.omega;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a live handle, which becomes invalid.
#[no_mangle]
pub unsafe extern "C" fn om_spectrum_free(spectrum: *mut OmSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Effective mirror temperature of one stable branch.
///
/// # Safety
/// `branches` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn om_effective_temperature(
    branches: *const OmBranches,
    index: usize,
    convention_id: c_int,
    out: *mut OmTemperature,
) -> OmStatus {
    guard(|| {
        let b = obj(branches, "branches")?;
        let s = branch(b, index)?;
        let c = convention(convention_id)?;
        let out = slot(out, "out")?;
        match effective_temperature(&b.params, s, c, TemperatureOptions::default()) {
            Ok(r) => {
                *out = OmTemperature {
                    t_eff: r.t_eff,
                    q2_mean: r.q2_mean,
                    p2_mean: r.p2_mean,
                    omega_max: r.omega_max,
                    lower: r.t_eff,
                    upper: r.t_eff,
                };
                Ok(())
            }
            Err(e) => {
                let (lower, upper) = match e {
                    Error::QuadratureNotConverged { lower, upper } => (lower, upper),
                    _ => (f64::NAN, f64::NAN),
                };
                *out = OmTemperature {
                    t_eff: f64::NAN,
                    q2_mean: f64::NAN,
                    p2_mean: f64::NAN,
                    omega_max: f64::NAN,
                    lower,
                    upper,
                };
                Err(e.into())
            }
        }
    })
}
