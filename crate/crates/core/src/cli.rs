// SPDX-License-Identifier: Apache-2.0

//! Run specification, parameter resolution, sweeps and file emission for the
//! `optomech` binary.
//!
//! Parameters are layered: preset, then the `--config` file, then `--set`
//! overrides. Every output file embeds the resolved parameter set, and every
//! JSON summary can be passed back through `--config` to reproduce the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{build_drift_matrix, classify_nms, numeric_modes, DeltaEtaConvention};
use crate::error::{Error, ErrorKind, Result};
use crate::model::{derive_quantities, make_params, RawConfig, SystemParams, UnitMode, CONFIG_KEYS};
use crate::presets::{Pins, Preset, PIN_KEYS};
use crate::spectrum::{
    compute_spectrum, effective_temperature, peak_separation, Convention, GridSpec, TemperatureOptions,
};
use crate::steady::{max_growth_rate, select_branch, solve_branches, BranchReport, SteadyState};
use crate::verification::audit::audit_report;
use crate::verification::sde::{sde_simulate, SdeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Steady,
    Modes,
    Spectrum,
    Temperature,
    Sweep,
    Audit,
    Sde,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
    pub log: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !CONFIG_KEYS.contains(&self.param.as_str()) && !PIN_KEYS.contains(&self.param.as_str()) {
            return Err(Error::Config(format!("sweep: unknown parameter `{}`", self.param)));
        }
        if self.param == "unit_mode" {
            return Err(Error::Config("sweep: `unit_mode` is not numeric".into()));
        }
        if self.count < 2 {
            return Err(Error::Config(format!("sweep: count must be at least 2, got {}", self.count)));
        }
        if !(self.from.is_finite() && self.to.is_finite()) || self.from == self.to {
            return Err(Error::Config("sweep: need finite --from and --to with from != to".into()));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(Error::Config("sweep: --log needs positive bounds".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let t = k as f64 / last;
                if k + 1 == self.count {
                    self.to
                } else if self.log {
                    (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp()
                } else {
                    self.from + t * (self.to - self.from)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub preset: Option<Preset>,
    /// `key=value` overrides in order.
    pub overrides: Vec<(String, String)>,
    pub out: PathBuf,
    pub branch: Option<usize>,
    pub grid: GridSpec,
    pub sweep: Option<SweepSpec>,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub timestamp: bool,
    pub convention: Convention,
    pub delta_eta: DeltaEtaConvention,
    pub sde: SdeOptions,
    pub dump_trajectories: bool,
}

impl RunSpec {
    pub fn new(command: Command) -> Self {
        RunSpec {
            command,
            config: None,
            preset: None,
            overrides: Vec::new(),
            out: PathBuf::from("."),
            branch: None,
            grid: GridSpec::default(),
            sweep: None,
            jobs: None,
            seed: 0,
            timestamp: true,
            convention: Convention::default(),
            delta_eta: DeltaEtaConvention::default(),
            sde: SdeOptions::default(),
            dump_trajectories: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, _) in &self.overrides {
            if !CONFIG_KEYS.contains(&key.as_str()) && !PIN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }
        self.grid.validate()?;
        match (&self.sweep, self.command) {
            (Some(s), _) => s.validate()?,
            (None, Command::Sweep) => {
                return Err(Error::Config("sweep needs --param, --from, --to and --count".into()))
            }
            _ => {}
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parse `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) =
        s.split_once('=').ok_or_else(|| Error::Config(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Raw layers before pin resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layers {
    pub raw: RawConfig,
    pub pins: Pins,
}

impl Layers {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if self.pins.set(key, value)? {
            return Ok(());
        }
        self.raw.set(key, value)
    }

    /// Final parameters and, when pinned, the target photon number.
    pub fn resolve(&self) -> Result<(SystemParams, Option<f64>)> {
        if self.pins.is_active() {
            let (p, n) = self.pins.apply(&self.raw)?;
            Ok((p, Some(n)))
        } else {
            Ok((make_params(&self.raw)?, None))
        }
    }
}

/// Read a configuration file: a flat parameter object, or any JSON summary
/// written by this tool (its `params` member is used).
pub fn read_config(path: &Path) -> Result<RawConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)?;
    let params = match value.get("params") {
        Some(p) if p.is_object() => p.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(params)?)
}

fn overlay(base: &RawConfig, top: &RawConfig) -> Result<RawConfig> {
    let mut merged = serde_json::to_value(base)?;
    if let (Value::Object(m), Value::Object(t)) = (&mut merged, serde_json::to_value(top)?) {
        for (k, v) in t {
            m.insert(k, v);
        }
    }
    Ok(serde_json::from_value(merged)?)
}

pub fn layers(spec: &RunSpec) -> Result<Layers> {
    let mut l = Layers::default();
    if let Some(preset) = spec.preset {
        let (raw, pins) = preset.config();
        l = Layers { raw, pins };
    }
    if let Some(path) = &spec.config {
        l.raw = overlay(&l.raw, &read_config(path)?)?;
    }
    for (k, v) in &spec.overrides {
        l.set(k, v)?;
    }
    Ok(l)
}

/// Branch used by single-branch commands: explicit index, else the pinned
/// branch, else the lowest stable branch.
pub fn choose_branch(branches: &[SteadyState], index: Option<usize>, target: Option<f64>) -> Result<&SteadyState> {
    match (index, target) {
        (None, Some(n)) => branches
            .iter()
            .min_by(|a, b| (a.n_s - n).abs().partial_cmp(&(b.n_s - n).abs()).unwrap())
            .ok_or(Error::NoPhysicalRoot),
        _ => select_branch(branches, index),
    }
}

/// Format with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

struct Emitter<'a> {
    spec: &'a RunSpec,
    params: SystemParams,
    written: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn header(&self, branch: Option<usize>) -> String {
        let mut h = String::new();
        if self.spec.timestamp {
            let secs =
                std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let _ = writeln!(h, "# generated_unix: {secs}");
        }
        let _ = writeln!(h, "# params: {}", serde_json::to_string(&self.params).expect("params serialize"));
        if let Some(b) = branch {
            let _ = writeln!(h, "# branch_index: {b}");
        }
        let unit = match self.params.unit_mode {
            UnitMode::Reduced => "reduced",
            UnitMode::Si => "si (absolute S_q normalization is convention-dependent)",
        };
        let _ = writeln!(h, "# unit_mode: {unit}");
        let _ = writeln!(h, "# convention: {}", enum_name(&self.spec.convention));
        let _ = writeln!(h, "# delta_eta_convention: {}", enum_name(&self.spec.delta_eta));
        h
    }

    fn summary(&self, branch: Option<usize>, body: Value) -> Value {
        let mut v = json!({
            "params": self.params,
            "run": {
                "command": self.spec.command,
                "branch_index": branch,
                "convention": self.spec.convention,
                "delta_eta_convention": self.spec.delta_eta,
                "grid": self.spec.grid,
                "seed": self.spec.seed,
            },
        });
        if self.spec.timestamp {
            let secs =
                std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            v["generated_unix"] = json!(secs);
        }
        if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
            m.extend(b);
        }
        v
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.spec.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, content).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Files written by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

/// Run one command, writing its artifacts under `spec.out`.
pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    spec.validate()?;
    let layers = layers(spec)?;
    let (params, target) = layers.resolve()?;
    let mut em = Emitter { spec, params, written: Vec::new() };
    em.write("params.json", &(params.to_json() + "\n"))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    pool.install(|| dispatch(spec, &layers, &params, target, &mut em))?;
    Ok(RunOutput { files: em.written })
}

fn dispatch(spec: &RunSpec, layers: &Layers, p: &SystemParams, target: Option<f64>, em: &mut Emitter) -> Result<()> {
    if spec.command == Command::Sweep {
        let sweep = spec.sweep.as_ref().expect("validated");
        let rows = sweep_rows(spec, layers, sweep)?;
        let csv = emit_sweep(&em.header(None), sweep, &rows);
        return em.write("sweep.csv", &csv);
    }

    let branches = solve_branches(p)?;
    if spec.command == Command::Steady {
        let reports: Vec<Value> = branches
            .iter()
            .map(|b| {
                let mut v = serde_json::to_value(BranchReport::from(b)).expect("report");
                v["derived"] = serde_json::to_value(derive_quantities(p, b)).expect("derived");
                v["max_growth_rate"] = json!(max_growth_rate(p, b).ok());
                v
            })
            .collect();
        let v = em.summary(None, json!({ "branches": reports }));
        return em.write_json("steady.json", &v);
    }

    let s = choose_branch(&branches, spec.branch, target)?;
    let b = Some(s.branch_index);
    match spec.command {
        Command::Modes => {
            let report = classify_nms(p, s, 1e-3, spec.delta_eta)?;
            let v = em.summary(b, json!({ "branch": BranchReport::from(s), "nms": report }));
            em.write_json("modes.json", &v)
        }
        Command::Spectrum => {
            let r = compute_spectrum(p, s, &spec.grid, spec.convention)?;
            let mut csv = em.header(b);
            csv.push_str("omega,omega_over_omega_m,s_q_closed,s_q_oracle,s_p,omega_eff,gamma_eff\n");
            for row in &r.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    num(row.omega),
                    num(row.omega_over_omega_m),
                    num(row.s_q_closed),
                    num(row.s_q_oracle),
                    num(row.s_p),
                    num(row.omega_eff),
                    num(row.gamma_eff)
                );
            }
            em.write("spectrum.csv", &csv)?;
            let temp = effective_temperature(p, s, spec.convention, TemperatureOptions::default());
            let (t_eff, q2, p2, quadrature) = match temp {
                Ok(t) => (
                    json!(t.t_eff),
                    json!(t.q2_mean),
                    json!(t.p2_mean),
                    json!({"omega_max": t.omega_max, "error_estimate": t.error_estimate, "converged": true}),
                ),
                Err(Error::QuadratureNotConverged { lower, upper }) => {
                    (Value::Null, Value::Null, Value::Null, json!({"converged": false, "lower": lower, "upper": upper}))
                }
                Err(e) => return Err(e),
            };
            let v = em.summary(
                b,
                json!({
                    "peaks": r.peaks,
                    "oracle_peaks": r.oracle_peaks,
                    "peak_separation": peak_separation(&r.peaks),
                    "max_relative_deviation_from_oracle": r.max_relative_deviation(),
                    "t_eff": t_eff,
                    "q2_mean": q2,
                    "p2_mean": p2,
                    "quadrature": quadrature,
                }),
            );
            em.write_json("spectrum.json", &v)
        }
        Command::Temperature => {
            let t = effective_temperature(p, s, spec.convention, TemperatureOptions::default())?;
            let v = em.summary(
                b,
                json!({
                    "t_eff": t.t_eff,
                    "t_eff_over_t": t.t_eff / p.temperature,
                    "q2_mean": t.q2_mean,
                    "p2_mean": t.p2_mean,
                    "quadrature": {"omega_max": t.omega_max, "error_estimate": t.error_estimate, "relative_change": t.relative_change},
                }),
            );
            em.write_json("temperature.json", &v)
        }
        Command::Audit => {
            let r = audit_report(p, s, &spec.grid, spec.convention, spec.delta_eta)?;
            let v = em.summary(b, json!({ "audit": r }));
            em.write_json("audit.json", &v)
        }
        Command::Sde => {
            let opts = SdeOptions { seed: spec.seed, keep_trajectories: spec.dump_trajectories, ..spec.sde };
            let r = sde_simulate(p, s, &opts)?;
            let mut csv = em.header(b);
            csv.push_str("omega,omega_over_omega_m,psd_q\n");
            for (w, v) in r.omega.iter().zip(&r.psd) {
                let _ = writeln!(csv, "{},{},{}", num(*w), num(w / p.omega_m), num(*v));
            }
            em.write("sde.csv", &csv)?;
            for t in &r.trajectories {
                let mut out = em.header(b);
                let _ = writeln!(out, "# realization: {}", t.realization);
                out.push_str("t,q,p,re_a,im_a\n");
                for row in &t.samples {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        num(row[0]),
                        num(row[1]),
                        num(row[2]),
                        num(row[3]),
                        num(row[4])
                    );
                }
                em.write(&format!("trajectories/realization_{:04}.csv", t.realization), &out)?;
            }
            let peaks = r.dominant_peaks(0.5 * p.omega_m, 1.5 * p.omega_m, 2, 2);
            let v = em.summary(
                b,
                json!({
                    "sde": {
                        "options": opts,
                        "var_q": r.var_q,
                        "var_q_stderr": r.var_q_stderr,
                        "integrated_power": r.integrated_power(),
                        "step_check": r.step_check,
                        "dominant_peaks": peaks,
                    }
                }),
            );
            em.write_json("sde.json", &v)
        }
        Command::Steady | Command::Sweep => unreachable!(),
    }
}

/// One evaluated sweep point. Failures are recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub n_s: Vec<f64>,
    pub stable: Vec<bool>,
    pub branch_index: Option<usize>,
    pub peak_separation: Option<f64>,
    pub splitting: Option<bool>,
    pub t_eff: Option<f64>,
    pub max_re_eigenvalue: Option<f64>,
    pub error: Option<String>,
}

fn sweep_point(spec: &RunSpec, base: &Layers, param: &str, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        n_s: Vec::new(),
        stable: Vec::new(),
        branch_index: None,
        peak_separation: None,
        splitting: None,
        t_eff: None,
        max_re_eigenvalue: None,
        error: None,
    };
    let mut notes: Vec<String> = Vec::new();
    let result = (|| -> Result<()> {
        let mut l = base.clone();
        l.set(param, &format!("{value:e}"))?;
        let (p, target) = l.resolve()?;
        let branches = solve_branches(&p)?;
        row.n_s = branches.iter().map(|b| b.n_s).collect();
        row.stable = branches.iter().map(|b| b.eig_stable).collect();
        let s = choose_branch(&branches, spec.branch, target)?;
        row.branch_index = Some(s.branch_index);
        let ev = numeric_modes(&build_drift_matrix(&p, s))?;
        row.max_re_eigenvalue = Some(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max));
        if !s.eig_stable {
            return Err(Error::UnstableBranch(s.branch_index));
        }
        let nms = classify_nms(&p, s, 1e-3, spec.delta_eta)?;
        row.splitting = Some(nms.splitting_numeric);
        match compute_spectrum(&p, s, &spec.grid, spec.convention) {
            Ok(r) => row.peak_separation = Some(peak_separation(&r.peaks)),
            Err(e) => notes.push(format!("spectrum: {e}")),
        }
        match effective_temperature(&p, s, spec.convention, TemperatureOptions::default()) {
            Ok(t) => row.t_eff = Some(t.t_eff),
            Err(e) => notes.push(format!("t_eff: {e}")),
        }
        Ok(())
    })();
    if let Err(e) = result {
        notes.insert(0, e.to_string());
    }
    if !notes.is_empty() {
        row.error = Some(notes.join("; "));
    }
    row
}

/// Evaluate all sweep points in the current thread pool; rows stay in sweep order.
pub fn sweep_rows(spec: &RunSpec, base: &Layers, sweep: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    Ok(sweep.values().par_iter().map(|&v| sweep_point(spec, base, &sweep.param, v)).collect())
}

/// CSV table, one row per sweep point.
pub fn emit_sweep(header: &str, sweep: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::from(header);
    let _ = writeln!(
        out,
        "# sweep: {} from {} to {} count {} {}",
        sweep.param,
        sweep.from,
        sweep.to,
        sweep.count,
        if sweep.log { "log" } else { "linear" }
    );
    let _ = writeln!(
        out,
        "{},branches,n_s_0,n_s_1,n_s_2,stable_0,stable_1,stable_2,branch_index,peak_separation,splitting,t_eff,max_re_eigenvalue,error",
        sweep.param
    );
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in rows {
        let mut cells = vec![num(r.value), r.n_s.len().to_string()];
        for k in 0..3 {
            cells.push(r.n_s.get(k).map(|x| num(*x)).unwrap_or_default());
        }
        for k in 0..3 {
            cells.push(r.stable.get(k).map(|x| x.to_string()).unwrap_or_default());
        }
        cells.push(r.branch_index.map(|b| b.to_string()).unwrap_or_default());
        cells.push(opt(r.peak_separation));
        cells.push(r.splitting.map(|x| x.to_string()).unwrap_or_default());
        cells.push(opt(r.t_eff));
        cells.push(opt(r.max_re_eigenvalue));
        cells.push(r.error.as_ref().map(|e| format!("\"{}\"", e.replace('"', "'"))).unwrap_or_default());
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Physics => 3,
        ErrorKind::Numerical => 4,
        ErrorKind::Io => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values() {
        let s = SweepSpec { param: "eta_p".into(), from: 0.0, to: 0.08, count: 17, log: false };
        let v = s.values();
        assert_eq!(v.len(), 17);
        assert_eq!(v[16], 0.08);
        assert!((v[1] - 0.005).abs() < 1e-15);
        let l = SweepSpec { param: "kappa".into(), from: 0.01, to: 1.0, count: 3, log: true };
        assert!((l.values()[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sweep_validation() {
        let mut s = SweepSpec { param: "eta_p".into(), from: 0.0, to: 0.08, count: 1, log: false };
        assert!(s.validate().is_err());
        s.count = 2;
        assert!(s.validate().is_ok());
        s.param = "nope".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn override_parsing() {
        assert_eq!(parse_override("kappa=0.2").unwrap(), ("kappa".into(), "0.2".into()));
        assert!(parse_override("kappa").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::NoStableBranch), 3);
        assert_eq!(exit_code(&Error::GridTooCoarse), 4);
    }
}
