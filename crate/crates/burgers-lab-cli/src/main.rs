//! `burgers-lab`: command-line front end of the toolkit.
//!
//! Every command is turned into a [`RunConfig`] first, either from flags or
//! from `--config FILE`, so `--dry-run` can print the resolved plan and every
//! run records the configuration it used.

mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use burgers_lab::blowup::{MonitorOptions, Side};
use burgers_lab::config::{CertifyStart, EvolveRun, GridSpec, InitialData, RunConfig, RunSpec};
use burgers_lab::parabolic::{BoundarySpec, EndCondition, EvolveOptions};
use burgers_lab::stationary::{BcKind, HalflineKind, ShootingTarget, SignKind};
use burgers_lab::supersolutions::{SuperDomain, SuperRequest, ValidationGrid};
use burgers_lab::sweep::{MapLayer, SweepConfig};
use burgers_lab::{Error, ModelParams};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "BURGERS_LAB_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "burgers-lab-out";

const EXIT_REGIME: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "burgers-lab",
    version,
    about = "Phase-plane, stationary and parabolic analysis of u_t = u_xx - u u_x + u|u|^(p-1) - lambda u"
)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = OUTPUT_ENV)]
    output_dir: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance of orbit integration.
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute tolerance of orbit integration.
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Residual accepted for shooting solutions.
    #[arg(long, global = true)]
    residual_target: Option<f64>,
    /// Read the run from a JSON document instead of the command flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Validate and print the resolved plan without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct EvolveArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    left: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    right: f64,
    #[arg(long, default_value_t = 128)]
    cells: usize,
    /// Condition at both ends: dirichlet, neumann, robin:A, dynamical:SIGMA, flux:C2,C1.
    #[arg(long, value_parser = parse::end_condition)]
    bc: Option<EndCondition>,
    #[arg(long, value_parser = parse::end_condition)]
    bc_left: Option<EndCondition>,
    #[arg(long, value_parser = parse::end_condition)]
    bc_right: Option<EndCondition>,
    /// constant:V, gaussian:A,CENTER,WIDTH, expdecay:A,K or samples:PATH.
    #[arg(long, value_parser = parse::initial_data)]
    initial: Option<InitialData>,
    #[arg(long, default_value_t = 1.0)]
    final_time: f64,
    #[arg(long, default_value_t = 0.1)]
    snapshot_interval: f64,
    #[arg(long, default_value_t = 1e8)]
    blowup_cap: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibria of the stationary system with their types.
    #[command(allow_negative_numbers = true)]
    Equilibria {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Orbits from a lattice of starts.
    #[command(allow_negative_numbers = true)]
    Portrait {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "-3,3")]
        u_range: String,
        #[arg(long, default_value = "-3,3")]
        v_range: String,
        #[arg(long, default_value_t = 7)]
        seeds: usize,
        #[arg(long, default_value_t = 20.0)]
        max_parameter: f64,
    },
    /// Boundedness certificate for an orbit start.
    #[command(allow_negative_numbers = true)]
    Certify {
        #[command(flatten)]
        params: ParamArgs,
        /// Start (0, V0) on the v-axis.
        #[arg(long, conflicts_with = "beta")]
        v0: Option<f64>,
        /// u-axis start of the power-curve construction.
        #[arg(long)]
        beta: Option<f64>,
        /// Integrate the orbit and check it against the verdict.
        #[arg(long)]
        confirm: bool,
    },
    /// Stationary solution on a bounded interval by shooting.
    #[command(allow_negative_numbers = true)]
    Shoot {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse::kebab::<BcKind>)]
        bc: Option<BcKind>,
        #[arg(long, value_parser = parse::kebab::<SignKind>, default_value = "positive")]
        sign: SignKind,
        /// Target profile amplitude.
        #[arg(long, conflicts_with = "start")]
        amplitude: Option<f64>,
        /// Fixed shooting start value.
        #[arg(long)]
        start: Option<f64>,
    },
    /// Periodic solution from a closed orbit through (0, V0).
    #[command(allow_negative_numbers = true)]
    Periodic {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        v0: Option<f64>,
    },
    /// Stationary solution on a half-line or the whole line.
    #[command(allow_negative_numbers = true)]
    Halfline {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_parser = parse::kebab::<HalflineKind>, default_value = "halfline-neumann")]
        kind: HalflineKind,
    },
    /// Time evolution of the parabolic problem.
    #[command(allow_negative_numbers = true)]
    Evolve {
        #[command(flatten)]
        run: EvolveArgs,
    },
    /// Builds and validates an explicit super-solution.
    #[command(allow_negative_numbers = true)]
    Super {
        #[command(flatten)]
        params: ParamArgs,
        /// constant-root, exp-growth or gaussian-decay.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 2)]
        power: u32,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long, value_parser = parse::end_condition, default_value = "neumann")]
        bc: EndCondition,
        /// right, left, whole or interval:A,B.
        #[arg(long, value_parser = parse::super_domain, default_value = "right")]
        domain: SuperDomain,
        /// Upper bound of the initial data.
        #[arg(long, default_value_t = 0.0)]
        phi_sup: f64,
        /// Coefficient of a dynamical boundary condition.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Evolution on a truncated half-line with weighted-norm monitoring.
    #[command(allow_negative_numbers = true)]
    Blowup {
        #[command(flatten)]
        run: EvolveArgs,
        #[arg(long, value_parser = parse::kebab::<Side>, default_value = "right-half-line")]
        side: Side,
        /// Weight exponent below the admissible maximum.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        burn_in: f64,
    },
    /// Regime map over the (lambda, p) plane.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, default_value = "-2,2")]
        lambda_range: String,
        #[arg(long, default_value = "1,4")]
        p_range: String,
        /// Points per axis, or LAMBDA,P.
        #[arg(long, default_value = "21")]
        resolution: String,
        /// Skip the shooting witnesses behind existence flags.
        #[arg(long)]
        no_witnesses: bool,
        /// Also write an SVG heat map of this layer.
        #[arg(long, value_parser = parse::map_layer)]
        svg: Option<MapLayer>,
    },
}

/// Failures of the front end, mapped to exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("missing required flag --{flag} (or pass --config FILE)")))
}

fn model(args: ParamArgs) -> Result<ModelParams, CliError> {
    let p = required(args.p, "p")?;
    let lambda = required(args.lambda, "lambda")?;
    Ok(ModelParams::new(p, lambda)?)
}

fn pair(s: &str, flag: &str) -> Result<[f64; 2], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("--{flag}: {e}")))?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(usage(format!("--{flag} takes two comma-separated numbers"))),
    }
}

fn evolve_run(args: &EvolveArgs) -> Result<EvolveRun, CliError> {
    let both = args.bc;
    let left = args.bc_left.or(both);
    let right = args.bc_right.or(both);
    let bc = BoundarySpec {
        left: required(left, "bc")?,
        right: required(right, "bc")?,
    };
    let mut options = EvolveOptions::default().with_final_time(args.final_time, args.snapshot_interval);
    options.blowup_cap = args.blowup_cap;
    Ok(EvolveRun {
        params: model(args.params)?,
        grid: GridSpec {
            left: args.left,
            right: args.right,
            cells: args.cells,
        },
        bc,
        initial: required(args.initial.clone(), "initial")?,
        options,
    })
}

fn spec_from_flags(command: &Command) -> Result<RunSpec, CliError> {
    Ok(match command {
        Command::Equilibria { params } => RunSpec::Equilibria {
            params: model(*params)?,
        },
        Command::Portrait {
            params,
            u_range,
            v_range,
            seeds,
            max_parameter,
        } => RunSpec::Portrait {
            params: model(*params)?,
            u_range: pair(u_range, "u-range")?,
            v_range: pair(v_range, "v-range")?,
            seeds_per_axis: *seeds,
            max_parameter: *max_parameter,
        },
        Command::Certify {
            params,
            v0,
            beta,
            confirm,
        } => {
            let start = match (v0, beta) {
                (Some(v0), None) => CertifyStart::Axis { v0: *v0 },
                (None, Some(beta)) => CertifyStart::UAxis { beta: *beta },
                _ => return Err(usage("certify needs exactly one of --v0 or --beta")),
            };
            RunSpec::Certify {
                params: model(*params)?,
                start,
                confirm: *confirm,
            }
        }
        Command::Shoot {
            params,
            bc,
            sign,
            amplitude,
            start,
        } => RunSpec::Shoot {
            params: model(*params)?,
            bc: required(*bc, "bc")?,
            sign: *sign,
            target: match (amplitude, start) {
                (Some(a), _) => ShootingTarget::Amplitude(*a),
                (None, Some(s)) => ShootingTarget::Seed(*s),
                (None, None) => ShootingTarget::Canonical,
            },
        },
        Command::Periodic { params, v0 } => RunSpec::Periodic {
            params: model(*params)?,
            v0: required(*v0, "v0")?,
        },
        Command::Halfline { params, kind } => RunSpec::Halfline {
            params: model(*params)?,
            kind: *kind,
        },
        Command::Evolve { run } => RunSpec::Evolve(evolve_run(run)?),
        Command::Super {
            params,
            kind,
            rate,
            power,
            amplitude,
            bc,
            domain,
            phi_sup,
            sigma,
        } => {
            let request = match required(kind.as_deref(), "kind")? {
                "constant-root" => SuperRequest::ConstantRoot,
                "exp-growth" => SuperRequest::ExpGrowth {
                    rate: required(*rate, "rate")?,
                    power: *power,
                    amplitude: *amplitude,
                },
                "gaussian-decay" => SuperRequest::GaussianDecay { amplitude: *amplitude },
                other => {
                    return Err(usage(format!(
                        "--kind `{other}` is not one of constant-root, exp-growth, gaussian-decay"
                    )))
                }
            };
            RunSpec::Super {
                params: model(*params)?,
                request,
                bc: *bc,
                domain: *domain,
                phi_sup: *phi_sup,
                grid: ValidationGrid::default(),
                sigma: *sigma,
            }
        }
        Command::Blowup {
            run,
            side,
            alpha,
            burn_in,
        } => RunSpec::Blowup {
            evolve: evolve_run(run)?,
            side: *side,
            monitor: MonitorOptions {
                alpha: *alpha,
                burn_in_fraction: *burn_in,
                ..MonitorOptions::default()
            },
        },
        Command::Sweep {
            lambda_range,
            p_range,
            resolution,
            no_witnesses,
            ..
        } => {
            let counts: Vec<usize> = resolution
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| usage(format!("--resolution: {e}")))?;
            let resolution = match counts.as_slice() {
                [n] => [*n, *n],
                [nl, np] => [*nl, *np],
                _ => return Err(usage("--resolution takes N or LAMBDA,P")),
            };
            RunSpec::Sweep(SweepConfig {
                lambda_range: pair(lambda_range, "lambda-range")?,
                p_range: pair(p_range, "p-range")?,
                resolution,
                witnesses: !no_witnesses,
                ..SweepConfig::default()
            })
        }
    })
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Equilibria { .. } => "equilibria",
        Command::Portrait { .. } => "portrait",
        Command::Certify { .. } => "certify",
        Command::Shoot { .. } => "shoot",
        Command::Periodic { .. } => "periodic",
        Command::Halfline { .. } => "halfline",
        Command::Evolve { .. } => "evolve",
        Command::Super { .. } => "super",
        Command::Blowup { .. } => "blowup",
        Command::Sweep { .. } => "sweep",
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let config = RunConfig::load(path)?;
            let expected = command_name(&cli.command);
            if config.run.command() != expected {
                return Err(usage(format!(
                    "{} describes a `{}` run, not `{expected}`",
                    path.display(),
                    config.run.command()
                )));
            }
            config
        }
        None => RunConfig::new(spec_from_flags(&cli.command)?),
    };
    if cli.output_dir.is_some() || config.output_dir.is_none() {
        config.output_dir = Some(cli.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)));
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let t = &mut config.tolerances;
    t.rtol = cli.rtol.or(t.rtol);
    t.atol = cli.atol.or(t.atol);
    t.residual_target = cli.residual_target.or(t.residual_target);
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = resolve(cli)?;
    if cli.dry_run {
        commands::print(&config)?;
        return Ok(());
    }
    let svg = match &cli.command {
        Command::Sweep { svg, .. } => *svg,
        _ => None,
    };
    commands::execute(&config, svg)?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::Truncation(_) => EXIT_NUMERICAL,
        _ => EXIT_REGIME,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
