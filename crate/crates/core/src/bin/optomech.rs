// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use optomech_core::cli::{exit_code, parse_override, run, Command, RunSpec, SweepSpec};
use optomech_core::dynamics::DeltaEtaConvention;
use optomech_core::presets::Preset;
use optomech_core::spectrum::{Convention, GridSpec};
use optomech_core::verification::sde::{Scheme, SdeModel, SdeOptions};
use optomech_core::Result;

#[derive(Parser)]
#[command(
    name = "optomech",
    version,
    about = "Driven Kerr cavity with a movable mirror: steady states, modes, spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// All steady-state branches with stability verdicts.
    Steady(Common),
    /// Closed-form and numeric normal modes of one branch.
    Modes(Common),
    /// Displacement spectrum on a frequency grid.
    Spectrum(Common),
    /// Effective mirror temperature.
    Temperature(Common),
    /// Repeat the evaluation over one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Compare every closed-form object with the exact linear response.
    Audit(Common),
    /// Stochastic time-domain cross-check.
    Sde {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sde: SdeArgs,
    },
}

#[derive(Args)]
struct Common {
    /// JSON parameter file (flat, or any summary written by this tool).
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig2_eta0, fig2_eta004 or schliesser.
    #[arg(long)]
    preset: Option<String>,
    /// Override one parameter, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Branch index; default is the pinned branch or the lowest stable one.
    #[arg(long)]
    branch: Option<usize>,
    /// Frequency grid `start:stop:count` in units of omega_m.
    #[arg(long, default_value = "0:2:4001")]
    grid: String,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Omit the generation timestamp so identical inputs give identical files.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long, value_enum, default_value = "normalized")]
    convention: ConventionArg,
    #[arg(long = "delta-eta", value_enum, default_value = "detuning")]
    delta_eta: DeltaEtaArg,
}

#[derive(Args)]
struct SweepArgs {
    /// Parameter name (any config key, or eta_p, g_prime, delta_eff).
    #[arg(long)]
    param: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long)]
    count: usize,
    /// Logarithmic spacing.
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct SdeArgs {
    #[arg(long, default_value_t = 64)]
    realizations: usize,
    /// Length of each realization in units of 1/omega_m.
    #[arg(long, default_value_t = 2000.0)]
    duration: f64,
    /// Time step in units of 1/omega_m.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, value_enum, default_value = "euler")]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "nonlinear")]
    model: ModelArg,
    /// Write each realization as CSV under trajectories/.
    #[arg(long)]
    dump_trajectories: bool,
    /// Skip the half-step comparison.
    #[arg(long)]
    no_step_check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Normalized,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeltaEtaArg {
    Detuning,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    Midpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Nonlinear,
    Linearized,
}

fn spec_from(command: Command, c: Common) -> Result<RunSpec> {
    let mut spec = RunSpec::new(command);
    spec.config = c.config;
    spec.preset = c.preset.as_deref().map(str::parse::<Preset>).transpose()?;
    spec.overrides = c.set.iter().map(|s| parse_override(s)).collect::<Result<_>>()?;
    spec.out = c.out;
    spec.branch = c.branch;
    spec.grid = c.grid.parse::<GridSpec>()?;
    spec.jobs = c.jobs;
    spec.seed = c.seed;
    spec.timestamp = !c.no_timestamp;
    spec.convention = match c.convention {
        ConventionArg::Normalized => Convention::Normalized,
        ConventionArg::Literal => Convention::Literal,
    };
    spec.delta_eta = match c.delta_eta {
        DeltaEtaArg::Detuning => DeltaEtaConvention::Detuning,
        DeltaEtaArg::Literal => DeltaEtaConvention::Literal,
    };
    Ok(spec)
}

fn build(cli: Cli) -> Result<RunSpec> {
    Ok(match cli.command {
        Cmd::Steady(c) => spec_from(Command::Steady, c)?,
        Cmd::Modes(c) => spec_from(Command::Modes, c)?,
        Cmd::Spectrum(c) => spec_from(Command::Spectrum, c)?,
        Cmd::Temperature(c) => spec_from(Command::Temperature, c)?,
        Cmd::Audit(c) => spec_from(Command::Audit, c)?,
        Cmd::Sweep { common, sweep } => {
            let mut spec = spec_from(Command::Sweep, common)?;
            spec.sweep = Some(SweepSpec {
                param: sweep.param,
                from: sweep.from,
                to: sweep.to,
                count: sweep.count,
                log: sweep.log,
            });
            spec
        }
        Cmd::Sde { common, sde } => {
            let mut spec = spec_from(Command::Sde, common)?;
            spec.sde = SdeOptions {
                realizations: sde.realizations,
                duration: sde.duration,
                step: sde.step,
                scheme: match sde.scheme {
                    SchemeArg::Euler => Scheme::Euler,
                    SchemeArg::Midpoint => Scheme::Midpoint,
                },
                model: match sde.model {
                    ModelArg::Nonlinear => SdeModel::Nonlinear,
                    ModelArg::Linearized => SdeModel::Linearized,
                },
                check_step: !sde.no_step_check,
                ..SdeOptions::default()
            };
            spec.dump_trajectories = sde.dump_trajectories;
            spec
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match build(cli).and_then(|spec| run(&spec)) {
        Ok(out) => {
            for f in out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
