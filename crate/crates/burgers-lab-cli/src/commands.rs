//! Execution of a resolved run configuration.
//!
//! Each command prints a JSON summary on stdout and writes its files into the
//! output directory together with the configuration that produced them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use burgers_lab::barriers::{
    certify_bounded_lneg, certify_bounded_pge3, certify_unbounded_axis_start, certify_unbounded_u_axis_start, confirm,
    Certificate, Verdict,
};
use burgers_lab::blowup::{check_lambda0_conditions, monitor};
use burgers_lab::config::{CertifyStart, EvolveRun, RunConfig, RunSpec, ToleranceOverrides};
use burgers_lab::flow::{portrait, write_events_csv, write_samples_csv, IntegrationOptions};
use burgers_lab::model::classify_equilibria;
use burgers_lab::parabolic::{evolve, write_snapshots_csv, EndCondition, EvolutionResult};
use burgers_lab::stationary::{
    find_halfline, find_periodic, profile_integration, solve_bvp, write_profile_csv, HalflineOptions, ShootingOptions,
    StationarySolution,
};
use burgers_lab::supersolutions::{build, validate};
use burgers_lab::sweep::{regime_map, write_regime_csv, write_regime_svg, MapLayer};
use burgers_lab::{Error, ModelParams, PhasePoint, Result};
use serde::Serialize;
use serde_json::json;

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(self.create(name)?, value)?;
        Ok(())
    }
}

/// Writes `value` as pretty JSON to stdout; a reader that closed the pipe
/// early is not an error.
pub fn print<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn tuned(mut opts: IntegrationOptions, t: &ToleranceOverrides) -> IntegrationOptions {
    opts.rtol = t.rtol.unwrap_or(opts.rtol);
    opts.atol = t.atol.unwrap_or(opts.atol);
    opts
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
}

/// Runs the command described by `config`.
pub fn execute(config: &RunConfig, svg: Option<MapLayer>) -> Result<()> {
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let tol = &config.tolerances;
    match &config.run {
        RunSpec::Equilibria { params } => {
            let list = classify_equilibria(params);
            print(&json!({
                "p": params.p(),
                "lambda": params.lambda(),
                "count": list.len(),
                "equilibria": list,
            }))
        }
        RunSpec::Portrait {
            params,
            u_range,
            v_range,
            seeds_per_axis,
            max_parameter,
        } => {
            let out = Output::new(&dir)?;
            out.json("run.json", config)?;
            let n = *seeds_per_axis;
            let at = |r: &[f64; 2], k: usize| {
                if n == 1 {
                    0.5 * (r[0] + r[1])
                } else {
                    r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64
                }
            };
            let seeds: Vec<PhasePoint> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| PhasePoint::new(at(u_range, i), at(v_range, j)))
                .collect();
            let opts = tuned(IntegrationOptions::default().with_max_parameter(*max_parameter), tol);
            let trajectories = thread_pool(config.threads)?.install(|| portrait(params, &seeds, &opts));
            let mut entries = Vec::new();
            for (k, (seed, t)) in seeds.iter().zip(trajectories).enumerate() {
                match t {
                    Ok(t) => {
                        let samples = format!("orbit_{k:03}.csv");
                        write_samples_csv(&t.samples, out.create(&samples)?)?;
                        let events = format!("orbit_{k:03}_events.csv");
                        write_events_csv(&t.events, out.create(&events)?)?;
                        entries.push(json!({
                            "seed": seed, "terminal": t.terminal,
                            "samples": samples, "events": events,
                        }));
                    }
                    Err(e) => entries.push(json!({"seed": seed, "error": e.to_string()})),
                }
            }
            let summary = json!({"p": params.p(), "lambda": params.lambda(), "orbits": entries});
            out.json("portrait.json", &summary)?;
            print(&summary)
        }
        RunSpec::Certify {
            params,
            start,
            confirm: check,
        } => certify(params, *start, *check, tol),
        RunSpec::Shoot {
            params,
            bc,
            sign,
            target,
        } => {
            let mut opts = ShootingOptions {
                target: *target,
                integration: tuned(profile_integration(), tol),
                ..ShootingOptions::default()
            };
            opts.residual_target = tol.residual_target.unwrap_or(opts.residual_target);
            let solution = thread_pool(config.threads)?.install(|| solve_bvp(*bc, params, *sign, &opts))?;
            emit_profile(&dir, config, &solution)
        }
        RunSpec::Periodic { params, v0 } => {
            let solution = find_periodic(params, *v0, &tuned(profile_integration(), tol))?;
            emit_profile(&dir, config, &solution)
        }
        RunSpec::Halfline { params, kind } => {
            let mut opts = HalflineOptions::default();
            opts.integration = tuned(opts.integration, tol);
            let solution = find_halfline(params, *kind, &opts)?;
            emit_profile(&dir, config, &solution)
        }
        RunSpec::Evolve(run) => {
            let out = Output::new(&dir)?;
            out.json("run.json", config)?;
            let result = run_evolution(run)?;
            write_snapshots_csv(&result.snapshots, out.create("snapshots.csv")?)?;
            let summary = result.summary(&run.options);
            out.json("summary.json", &summary)?;
            print(&json!({
                "outcome": summary.outcome,
                "t_b": summary.t_b,
                "steps": summary.steps,
                "final_sup_norm": result.final_field().sup_norm(),
                "snapshots": out.path("snapshots.csv"),
            }))
        }
        RunSpec::Super {
            params,
            request,
            bc,
            domain,
            phi_sup,
            grid,
            sigma,
        } => {
            let spec = build(*request, params, *bc, *domain, *phi_sup)?;
            let sigma_value = sigma.or(match bc {
                EndCondition::Dynamical { sigma } => Some(*sigma),
                _ => None,
            });
            let sigma_fn = sigma_value.map(|s| move |_t: f64| s);
            let report = validate(&spec, grid, sigma_fn.as_ref().map(|f| f as &dyn Fn(f64) -> f64));
            let out = Output::new(&dir)?;
            out.json("run.json", config)?;
            let summary = json!({"spec": spec, "report": report});
            out.json("super.json", &summary)?;
            print(&summary)?;
            if report.certified {
                Ok(())
            } else {
                Err(Error::Precondition(format!(
                    "{} candidate failed validation (smallest normalized residual {:.3e})",
                    report.kind, report.min_interior_residual
                )))
            }
        }
        RunSpec::Blowup {
            evolve: run,
            side,
            monitor: options,
        } => {
            let out = Output::new(&dir)?;
            out.json("run.json", config)?;
            let field = run.initial_field()?;
            let lambda0 = check_lambda0_conditions(&run.params, &field)?;
            let result = run_evolution(run)?;
            write_snapshots_csv(&result.snapshots, out.create("snapshots.csv")?)?;
            let report = monitor(&result, *side, options)?;
            out.json("blowup.json", &report)?;
            out.json("summary.json", &result.summary(&run.options))?;
            print(&json!({
                "alpha": report.alpha,
                "beta_h": report.beta_h,
                "N0": report.n0,
                "t_star": report.t_star,
                "t_b": report.t_b,
                "hypotheses": report.hypotheses,
                "consistent": report.consistent,
                "lambda0": lambda0,
                "report": out.path("blowup.json"),
            }))
        }
        RunSpec::Sweep(sweep) => {
            let out = Output::new(&dir)?;
            out.json("run.json", config)?;
            let witness_dir = sweep.witnesses.then(|| out.path("witnesses"));
            let map = regime_map(sweep, config.threads, witness_dir.as_deref())?;
            write_regime_csv(&map, out.create("regime.csv")?)?;
            out.json("regime.json", &map)?;
            if let Some(layer) = svg {
                write_regime_svg(&map, layer, &out.path("regime.svg"))?;
            }
            let failures: usize = map.cells.iter().map(|c| c.failures.len()).sum();
            print(&json!({
                "cells": map.cells.len(),
                "cell_failures": failures,
                "csv": out.path("regime.csv"),
            }))
        }
    }
}

fn run_evolution(run: &EvolveRun) -> Result<EvolutionResult> {
    let field = run.initial_field()?;
    evolve(&field, &run.bc, &run.params, &run.options)
}

fn emit_profile(dir: &Path, config: &RunConfig, solution: &StationarySolution) -> Result<()> {
    let out = Output::new(dir)?;
    out.json("run.json", config)?;
    write_profile_csv(&solution.profile, out.create("profile.csv")?)?;
    let meta = solution.metadata();
    out.json("profile.json", &meta)?;
    print(&json!({"metadata": meta, "profile": out.path("profile.csv")}))
}

fn certify(m: &ModelParams, start: CertifyStart, check: bool, tol: &ToleranceOverrides) -> Result<()> {
    let attempts: Vec<Result<Certificate>> = match start {
        CertifyStart::Axis { v0 } => vec![
            certify_bounded_pge3(v0, m),
            certify_bounded_lneg(v0, m),
            certify_unbounded_axis_start(v0, m),
        ],
        CertifyStart::UAxis { beta } => vec![certify_unbounded_u_axis_start(beta, m)],
    };
    let mut reasons = Vec::new();
    let mut certificates = Vec::new();
    for a in attempts {
        match a {
            Ok(c) => certificates.push(c),
            Err(e) => reasons.push(e.to_string()),
        }
    }
    if certificates.is_empty() {
        return Err(Error::Precondition(format!(
            "no barrier construction applies: {}",
            reasons.join("; ")
        )));
    }
    let decisive = certificates
        .iter()
        .find(|c| c.verdict != Verdict::Undetermined)
        .cloned();
    let verdict = decisive.as_ref().map_or(Verdict::Undetermined, |c| c.verdict);
    let confirmation = match (&decisive, check) {
        (Some(c), true) => Some(confirm(c, m, &tuned(IntegrationOptions::default(), tol))?),
        _ => None,
    };
    print(&json!({
        "verdict": verdict,
        "certificates": certificates,
        "not_applicable": reasons,
        "confirmation": confirmation,
    }))
}
