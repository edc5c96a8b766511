use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logit_core::audit::{audit_design, gradient_deviation_experiment, gradient_deviation_with, hessian_lower_sweep_sampled};
use logit_core::designs::{DesignKind, DesignSpec};
use logit_core::linalg::{normalized, unit_vector};
use logit_core::theory::phase_boundary;
use logit_core::{fit_mle, Dataset, FitOptions, FitStatus, ModelParams, SeededRng, StructuredSpectralMatrix};
use logit_harness::config::{Direction, ExperimentConfig, LawFamily, SampleSizes};
use logit_harness::grid::{run_existence_grid, run_misspec_grid, run_risk_grid};
use logit_harness::output::{sink, timings, write_csv, write_json, GradDevRow, MisspecRow, PhaseRow, SweepRow};
use logit_harness::{HarnessError, Result};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Parser)]
#[command(name = "logit-lab", version, about = "High-dimensional logistic regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Existence frequency of the MLE over a grid of cells (CSV).
    SimulateExistence(GridArgs),
    /// Excess risk, Wilks statistic and estimation errors over a grid (CSV).
    SimulateRisk(GridArgs),
    /// Worst-case label cells next to matched well-specified cells (CSV).
    SimulateMisspec(GridArgs),
    /// Monte Carlo phase boundary h(β) (CSV `beta,h_hat,se,t_star`).
    PhaseCurve(PhaseArgs),
    /// Small-ball, two-dimensional margin and ψ₁ audit of a design (JSON).
    AuditDesign(AuditArgs),
    /// Whitened empirical Hessian floor per replicate (CSV).
    HessianSweep(SweepArgs),
    /// Whitened score norm at θ* per replicate (CSV).
    GradDev(GradArgs),
    /// Fit the MLE to a CSV dataset (JSON). Exit code 0 converged,
    /// 2 separation detected, 1 otherwise.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    WellSpecified,
    WorstCase,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Canonical,
    Diffuse,
}

#[derive(Clone, Copy, ValueEnum)]
enum UStarArg {
    Canonical,
    Diffuse,
    Random,
}

fn parse_design(s: &str) -> std::result::Result<DesignKind, String> {
    s.parse().map_err(|e: logit_core::Error| e.to_string())
}

#[derive(Args)]
struct GridArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_design)]
    design: Option<DesignKind>,
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// `‖θ*‖` grid, or `p` grid for worst-case labels.
    #[arg(long, value_delimiter = ',')]
    signal: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', conflicts_with = "n_per_bd")]
    n: Option<Vec<usize>>,
    /// Sample sizes as multiples of `B·d`.
    #[arg(long, value_delimiter = ',')]
    n_per_bd: Option<Vec<f64>>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    risk_mc: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GridArgs {
    fn into_config(self, default_law: LawFamily) -> Result<ExperimentConfig> {
        let missing = |what: &str| HarnessError::Config(format!("--{what} is required without --config"));
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig {
                design: DesignKind::Gaussian,
                law: default_law,
                direction: Direction::Canonical,
                d: self.d.clone().ok_or_else(|| missing("d"))?,
                signal: self.signal.clone().ok_or_else(|| missing("signal"))?,
                n: SampleSizes::Absolute(Vec::new()),
                t: 1.0,
                replicates: self.replicates.ok_or_else(|| missing("replicates"))?,
                master_seed: self.seed,
                output: None,
                risk_mc: 200_000,
            },
        };
        cfg.master_seed = self.seed;
        if let Some(k) = self.design {
            cfg.design = k;
        }
        if let Some(l) = self.law {
            cfg.law = match l {
                LawArg::WellSpecified => LawFamily::WellSpecified,
                LawArg::WorstCase => LawFamily::WorstCase,
            };
        }
        if let Some(dir) = self.direction {
            cfg.direction = match dir {
                DirectionArg::Canonical => Direction::Canonical,
                DirectionArg::Diffuse => Direction::Diffuse,
            };
        }
        if let Some(d) = self.d {
            cfg.d = d;
        }
        if let Some(s) = self.signal {
            cfg.signal = s;
        }
        match (self.n, self.n_per_bd) {
            (Some(n), _) => cfg.n = SampleSizes::Absolute(n),
            (None, Some(m)) => cfg.n = SampleSizes::PerSignalDimension(m),
            (None, None) if self.config.is_none() => return Err(missing("n or --n-per-bd")),
            _ => {}
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
        if let Some(m) = self.risk_mc {
            cfg.risk_mc = m;
        }
        if self.out.is_some() {
            cfg.output = self.out;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    mc: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_parser = parse_design, default_value = "gaussian")]
    design: DesignKind,
    #[arg(long, value_enum, default_value = "canonical")]
    ustar: UStarArg,
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 100_000)]
    mc: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_design, default_value = "gaussian")]
    design: DesignKind,
    #[arg(long)]
    d: usize,
    /// `‖θ*‖` along `e₁`.
    #[arg(long)]
    signal: f64,
    #[arg(long)]
    n: usize,
    /// `H`-radius; defaults to `1/(100√B)`.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 200)]
    dirs: usize,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradArgs {
    #[arg(long)]
    d: usize,
    /// `‖θ*‖` along `e₁`; values at least e also enforce the sample-size floor.
    #[arg(long)]
    signal: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    t: f64,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    tol_grad: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_timings(out: Option<&Path>, cells: &[logit_harness::CellSummary]) -> Result<()> {
    if let Some(path) = out {
        let mut p = path.as_os_str().to_owned();
        p.push(".timing.json");
        let rows = timings(cells);
        write_json(&serde_json::json!({ "cells": rows }), sink(Some(Path::new(&p)))?)?;
    }
    Ok(())
}

fn grid(args: GridArgs, law: LawFamily, which: fn(&ExperimentConfig) -> Result<Vec<logit_harness::CellSummary>>) -> Result<()> {
    let cfg = args.into_config(law)?;
    let rows = which(&cfg)?;
    write_csv(&rows, sink(cfg.output.as_deref())?)?;
    write_timings(cfg.output.as_deref(), &rows)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::SimulateExistence(a) => grid(a, LawFamily::WellSpecified, run_existence_grid)?,
        Command::SimulateRisk(a) => grid(a, LawFamily::WellSpecified, run_risk_grid)?,
        Command::SimulateMisspec(a) => {
            let cfg = a.into_config(LawFamily::WorstCase)?;
            let rows: Vec<MisspecRow> = run_misspec_grid(&cfg)?.iter().map(MisspecRow::from).collect();
            write_csv(&rows, sink(cfg.output.as_deref())?)?;
        }
        Command::PhaseCurve(a) => {
            let rows = a
                .beta
                .iter()
                .enumerate()
                .map(|(i, &beta)| {
                    let est = phase_boundary(beta, a.mc, &mut SeededRng::with_path(a.seed, i as u64, 0).stream())?;
                    Ok(PhaseRow { beta, h_hat: est.h_hat, se: est.mc_std_error, t_star: est.t_star })
                })
                .collect::<Result<Vec<_>>>()?;
            write_csv(&rows, sink(a.out.as_deref())?)?;
        }
        Command::AuditDesign(a) => {
            let mut rng = SeededRng::new(a.seed).stream();
            let u = match a.ustar {
                UStarArg::Canonical => Direction::Canonical.vector(a.d),
                UStarArg::Diffuse => Direction::Diffuse.vector(a.d),
                UStarArg::Random => {
                    let g: Vec<f64> = (0..a.d).map(|_| rng.sample(StandardNormal)).collect();
                    normalized(&g).ok_or_else(|| HarnessError::Config("degenerate random direction".into()))?
                }
            };
            let spec = DesignSpec::new(a.design, a.d)?;
            let report = audit_design(&spec, &u, a.eta, a.c, a.mc, &mut rng)?;
            write_json(&report, sink(a.out.as_deref())?)?;
        }
        Command::HessianSweep(a) => {
            let spec = DesignSpec::new(a.design, a.d)?;
            let theta = ModelParams::from_direction(&unit_vector(a.d, 0), a.signal)?;
            let h = StructuredSpectralMatrix::from_theta_star(&theta)?;
            let radius = a.radius.unwrap_or(1.0 / (100.0 * h.b().sqrt()));
            let rows = (0..a.replicates)
                .map(|r| {
                    let mut rng = SeededRng::with_path(a.seed, 0, r as u64).stream();
                    let v = hessian_lower_sweep_sampled(&spec, &theta, &h, radius, a.n, a.dirs, &mut rng)?;
                    Ok(SweepRow { replicate: r, min_whitened_eigenvalue: v })
                })
                .collect::<Result<Vec<_>>>()?;
            write_csv(&rows, sink(a.out.as_deref())?)?;
        }
        Command::GradDev(a) => {
            let rows = (0..a.replicates)
                .map(|r| {
                    let mut rng = SeededRng::with_path(a.seed, 0, r as u64).stream();
                    let s = if a.signal >= logit_core::E {
                        gradient_deviation_experiment(a.d, a.signal, a.n, a.t, 1, &mut rng)?
                    } else {
                        let u = unit_vector(a.d, 0);
                        let theta: Vec<f64> = u.iter().map(|x| x * a.signal).collect();
                        gradient_deviation_with(&theta, &u, a.n, a.t, 1, &mut rng)?
                    };
                    Ok(GradDevRow { replicate: r, statistic: s.samples[0], bound: s.bound })
                })
                .collect::<Result<Vec<_>>>()?;
            write_csv(&rows, sink(a.out.as_deref())?)?;
        }
        Command::Fit(a) => {
            let data = Dataset::read_csv(&a.data)?;
            let mut opts = FitOptions::default();
            if let Some(t) = a.tol_grad {
                opts.tol_grad = t;
            }
            if let Some(m) = a.max_iters {
                opts.max_iters = m;
            }
            let fit = fit_mle(&data, &opts)?;
            write_json(&fit, sink(a.out.as_deref())?)?;
            return Ok(match fit.status {
                FitStatus::Converged => ExitCode::SUCCESS,
                FitStatus::SeparationDetected => ExitCode::from(2),
                FitStatus::IterationLimit => ExitCode::FAILURE,
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
