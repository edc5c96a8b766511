//! Replicated experiment grids. Every replicate draws from its own stream
//! `(master_seed, cell, replicate)`, and results are collected in replicate
//! order, so output does not depend on thread scheduling.

use std::time::Instant;

use logit_core::designs::{sample_dataset, DesignKind, DesignSpec, LabelLaw};
use logit_core::linalg::{dot, norm, sub};
use logit_core::logistic::logistic_loss;
use logit_core::stats::{mean, median, quantile, wilson_interval};
use logit_core::theory::{excess_risk_gaussian_wellspec, population_risk_gaussian_worstcase, worstcase_coordinates};
use logit_core::{check_separation, fit_mle, FitOptions, FitStatus, SeededRng, SeparationStatus};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Cell, ExperimentConfig, LawFamily};
use crate::error::{config_err, Result};

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Default)]
struct Replicate {
    exists: bool,
    excess: Option<f64>,
    iterations: Option<usize>,
    direction_error: Option<f64>,
    norm_error: Option<f64>,
    no_sign_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub d: usize,
    /// `‖θ*‖` or flip probability `p`.
    pub signal: f64,
    pub b: f64,
    pub n: usize,
    pub replicates: usize,
    pub existing: usize,
    pub existence_frequency: f64,
    pub existence_lower: f64,
    pub existence_upper: f64,
    /// Existing-MLE replicates whose risk was evaluated.
    pub risk_count: usize,
    pub excess_q50: Option<f64>,
    pub excess_q90: Option<f64>,
    pub excess_q99: Option<f64>,
    /// Mean of `2n·(L(θ̂) − L(θ*))`.
    pub wilks_mean: Option<f64>,
    pub direction_error_median: Option<f64>,
    pub norm_error_median: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// Kept out of the CSV so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl CellSummary {
    fn from_replicates(cell: &Cell, reps: &[Replicate], wall_time_s: f64) -> Self {
        let total = reps.len();
        let existing = reps.iter().filter(|r| r.exists).count();
        let ci = wilson_interval(existing as u64, total as u64, Z95);
        let excess: Vec<f64> = reps.iter().filter_map(|r| r.excess).collect();
        let some = |v: &[f64], f: &dyn Fn(&[f64]) -> f64| (!v.is_empty()).then(|| f(v));
        let dir: Vec<f64> = reps.iter().filter_map(|r| r.direction_error).collect();
        let nrm: Vec<f64> = reps.iter().filter_map(|r| r.norm_error).collect();
        let iters: Vec<f64> = reps.iter().filter_map(|r| r.iterations.map(|k| k as f64)).collect();
        let two_n = 2.0 * cell.n as f64;
        Self {
            cell: cell.index,
            d: cell.d,
            signal: cell.signal,
            b: cell.b,
            n: cell.n,
            replicates: total,
            existing,
            existence_frequency: existing as f64 / total as f64,
            existence_lower: ci.lower,
            existence_upper: ci.upper,
            risk_count: excess.len(),
            excess_q50: some(&excess, &|v| quantile(v, 0.5)),
            excess_q90: some(&excess, &|v| quantile(v, 0.9)),
            excess_q99: some(&excess, &|v| quantile(v, 0.99)),
            wilks_mean: some(&excess, &|v| two_n * mean(v)),
            direction_error_median: some(&dir, &median),
            norm_error_median: some(&nrm, &median),
            mean_iterations: some(&iters, &mean),
            wall_time_s,
        }
    }
}

/// Excess population risk of a fitted parameter for one cell.
struct RiskEvaluator {
    design: DesignSpec,
    law: LabelLaw,
    minimizer: Vec<f64>,
    kind: RiskKind,
    risk_mc: usize,
}

enum RiskKind {
    GaussianWellSpecified,
    GaussianWorstCase { u_star: Vec<f64>, p: f64, floor: f64 },
    MonteCarlo,
}

impl RiskEvaluator {
    fn new(cfg: &ExperimentConfig, cell: &Cell) -> Result<Self> {
        let design = cfg.design_spec(cell.d)?;
        let law = cfg.label_law(cell)?;
        let minimizer = cfg.population_minimizer(cell);
        let kind = match (&cfg.design, cfg.law) {
            (DesignKind::Gaussian, LawFamily::WellSpecified) => RiskKind::GaussianWellSpecified,
            (DesignKind::Gaussian, LawFamily::WorstCase) => {
                RiskKind::GaussianWorstCase { u_star: cfg.direction.vector(cell.d), p: cell.signal, floor: population_risk_gaussian_worstcase(cell.b, 0.0, cell.signal) }
            }
            _ => RiskKind::MonteCarlo,
        };
        Ok(Self { design, law, minimizer, kind, risk_mc: cfg.risk_mc })
    }

    /// Quadrature where available; otherwise a paired Monte Carlo average of
    /// `ℓ(θ̂) − ℓ(θ*)` on common draws.
    fn excess<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<f64> {
        Ok(match &self.kind {
            RiskKind::GaussianWellSpecified => excess_risk_gaussian_wellspec(theta, &self.minimizer),
            RiskKind::GaussianWorstCase { u_star, p, floor } => {
                let (a, b) = worstcase_coordinates(theta, u_star);
                population_risk_gaussian_worstcase(a, b, *p) - floor
            }
            RiskKind::MonteCarlo => {
                let mut sum = 0.0;
                let mut done = 0;
                while done < self.risk_mc {
                    let m = 4096.min(self.risk_mc - done);
                    let data = sample_dataset(&self.design, &self.law, m, rng)?;
                    sum += data.iter().map(|(x, y)| logistic_loss(theta, x, y) - logistic_loss(&self.minimizer, x, y)).sum::<f64>();
                    done += m;
                }
                sum / self.risk_mc as f64
            }
        })
    }
}

fn run_replicate(cfg: &ExperimentConfig, cell: &Cell, eval: &RiskEvaluator, law: &LabelLaw, seed: SeededRng, with_risk: bool) -> Result<Replicate> {
    let mut rng = seed.stream();
    let data = sample_dataset(&eval.design, law, cell.n, &mut rng)?;
    let u_star = cfg.direction.vector(cell.d);
    let no_sign_error = data.iter().all(|(x, y)| y * dot(&u_star, x) > 0.0);
    if !with_risk {
        let sep = check_separation(&data)?;
        return Ok(Replicate { exists: sep.mle_exists(), no_sign_error, ..Default::default() });
    }
    let fit = fit_mle(&data, &FitOptions::default())?;
    let mut rep = Replicate { exists: fit.separation.mle_exists(), no_sign_error, ..Default::default() };
    if fit.status == FitStatus::Converged {
        let theta = &*fit.theta_hat;
        rep.excess = Some(eval.excess(theta, &mut seed.lane(1).stream())?);
        rep.iterations = Some(fit.iterations);
        let target = norm(&eval.minimizer);
        let fitted = norm(theta);
        if target > 0.0 && fitted > 0.0 {
            let dir: Vec<f64> = theta.iter().map(|t| t / fitted).collect();
            rep.direction_error = Some(norm(&sub(&dir, &u_star)));
        }
        rep.norm_error = Some((fitted - target).abs());
    }
    Ok(rep)
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, law: &LabelLaw, eval: &RiskEvaluator, lane: u64, with_risk: bool) -> Result<(CellSummary, Vec<Replicate>)> {
    let start = Instant::now();
    let reps = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, cell, eval, law, SeededRng::with_path(cfg.master_seed, cell.index as u64, r as u64).lane(lane), with_risk))
        .collect::<Result<Vec<_>>>()?;
    Ok((CellSummary::from_replicates(cell, &reps, start.elapsed().as_secs_f64()), reps))
}

fn run(cfg: &ExperimentConfig, with_risk: bool) -> Result<Vec<CellSummary>> {
    cfg.cells()?
        .iter()
        .map(|cell| {
            let eval = RiskEvaluator::new(cfg, cell)?;
            let law = cfg.label_law(cell)?;
            Ok(run_cell(cfg, cell, &law, &eval, 0, with_risk)?.0)
        })
        .collect()
}

/// Existence frequency per cell (with Wilson interval), plus risk summaries
/// on the replicates where the MLE exists.
pub fn run_existence_grid(cfg: &ExperimentConfig) -> Result<Vec<CellSummary>> {
    run(cfg, true)
}

/// Existence frequencies only, skipping the fits.
pub fn run_existence_only(cfg: &ExperimentConfig) -> Result<Vec<CellSummary>> {
    run(cfg, false)
}

/// Excess-risk quantiles, Wilks mean, direction and norm errors per cell.
pub fn run_risk_grid(cfg: &ExperimentConfig) -> Result<Vec<CellSummary>> {
    run(cfg, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecComparison {
    pub worst_case: CellSummary,
    /// Well-specified cell at the same `(d, B, n)` with `θ* = B·u*`.
    pub matched: CellSummary,
    /// Fraction of replicates with `Yᵢ⟨u*,Xᵢ⟩ > 0` for every row.
    pub no_sign_error_frequency: f64,
    /// `(1 − p)ⁿ`
    pub no_sign_error_expected: f64,
    pub no_sign_error_se: f64,
}

/// Worst-case label cells next to their matched well-specified cells.
pub fn run_misspec_grid(cfg: &ExperimentConfig) -> Result<Vec<MisspecComparison>> {
    if cfg.law != LawFamily::WorstCase {
        return Err(config_err("misspecification grid needs the worst_case law"));
    }
    let mut matched_cfg = cfg.clone();
    matched_cfg.law = LawFamily::WellSpecified;
    cfg.cells()?
        .iter()
        .map(|cell| {
            let eval = RiskEvaluator::new(cfg, cell)?;
            let law = cfg.label_law(cell)?;
            let (worst_case, reps) = run_cell(cfg, cell, &law, &eval, 0, true)?;
            let twin = Cell { signal: cell.b, ..cell.clone() };
            let twin_eval = RiskEvaluator::new(&matched_cfg, &twin)?;
            let twin_law = matched_cfg.label_law(&twin)?;
            let (mut matched, _) = run_cell(&matched_cfg, &twin, &twin_law, &twin_eval, 1, true)?;
            matched.signal = cell.signal;
            let freq = reps.iter().filter(|r| r.no_sign_error).count() as f64 / reps.len() as f64;
            let expected = (1.0 - cell.signal).powi(cell.n as i32);
            Ok(MisspecComparison {
                worst_case,
                matched,
                no_sign_error_frequency: freq,
                no_sign_error_expected: expected,
                no_sign_error_se: (expected * (1.0 - expected) / reps.len() as f64).sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Smallest `n` with existence frequency `≥ 1/2`.
    pub n_star: usize,
    /// `(n, frequency)` for every probed `n`, in probe order.
    pub probes: Vec<(usize, f64)>,
}

/// Existence frequency at `n` where replicate `r` uses the first `n` rows of
/// its own stream. Nested datasets make each replicate's existence monotone
/// in `n`, so the frequency is exactly nondecreasing.
pub fn prefix_existence_frequency(spec: &DesignSpec, law: &LabelLaw, n: usize, replicates: usize, seed: SeededRng) -> Result<f64> {
    let hits = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.replicate(r as u64).stream();
            let mut rows = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let mut x = vec![0.0; spec.d];
                spec.kind.fill(&mut x, &mut rng);
                y.push(law.sample_label(&x, &mut rng));
                rows.push(x);
            }
            let data = logit_core::Dataset::from_rows(&rows, &y)?;
            Ok(check_separation(&data)?.status == SeparationStatus::NotSeparated)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / replicates as f64)
}

/// Bisection over `n` for the existence crossing of `1/2`, doubling the
/// upper bracket from `2d` until it is reached (capped at `max_n`).
pub fn existence_crossing(spec: &DesignSpec, law: &LabelLaw, replicates: usize, seed: SeededRng, max_n: usize) -> Result<Crossing> {
    let mut probes = Vec::new();
    let mut probe = |n: usize| -> Result<f64> {
        let f = prefix_existence_frequency(spec, law, n, replicates, seed)?;
        probes.push((n, f));
        Ok(f)
    };
    // fewer than d rows never pin down a d-dimensional MLE
    let mut lo = spec.d.saturating_sub(1).max(1);
    let mut hi = 2 * spec.d;
    while probe(hi)? < 0.5 {
        lo = hi;
        if hi >= max_n {
            return Err(config_err(format!("existence frequency stays below 1/2 up to n = {max_n}")));
        }
        hi = (2 * hi).min(max_n);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Crossing { n_star: hi, probes })
}
