//! Damped Newton for the empirical logistic risk.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::norm;
use crate::logistic::{empirical_risk, risk_grad_hessian, ModelParams};
use crate::separation::{check_separation, SeparationResult, SeparationStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub tol_newton: f64,
    pub tol_grad: f64,
    pub max_iters: usize,
    pub armijo_slope: f64,
    pub backtrack: f64,
    pub jitter: f64,
    /// `‖θ‖₂` above this aborts with `IterationLimit`.
    pub norm_cap: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol_newton: 1e-10,
            tol_grad: 1e-9,
            max_iters: 200,
            armijo_slope: 1e-4,
            backtrack: 0.5,
            jitter: 1e-10,
            norm_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    SeparationDetected,
    IterationLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: ModelParams,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub status: FitStatus,
    pub final_risk: f64,
    /// Newton decrement `√(gᵀH⁻¹g)` at each iterate.
    pub decrements: Vec<f64>,
    pub separation: SeparationResult,
}

/// Separation pre-check, then damped Newton from `θ₀ = 0`.
pub fn fit_mle(data: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    let separation = check_separation(data)?;
    let d = data.d();
    if separation.status != SeparationStatus::NotSeparated {
        return Ok(FitResult {
            theta_hat: ModelParams::zeros(d),
            iterations: 0,
            final_grad_norm: f64::NAN,
            status: FitStatus::SeparationDetected,
            final_risk: f64::NAN,
            decrements: Vec::new(),
            separation,
        });
    }
    let (theta, iterations, grad_norm, risk, decrements, status) = newton_iterate(data, vec![0.0; d], opts);
    Ok(FitResult {
        theta_hat: ModelParams::new(theta)?,
        iterations,
        final_grad_norm: grad_norm,
        status,
        final_risk: risk,
        decrements,
        separation,
    })
}

type NewtonOutcome = (Vec<f64>, usize, f64, f64, Vec<f64>, FitStatus);

pub(crate) fn newton_iterate(data: &Dataset, mut theta: Vec<f64>, opts: &FitOptions) -> NewtonOutcome {
    let d = data.d();
    let mut decrements = Vec::new();
    let (mut risk, mut grad, mut hess) = risk_grad_hessian(&theta, data);
    for iter in 0..opts.max_iters {
        let gnorm = norm(&grad);
        if gnorm <= opts.tol_grad {
            return (theta, iter, gnorm, risk, decrements, FitStatus::Converged);
        }
        let step = newton_direction(&hess, &grad, opts.jitter, d);
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let decrement = (-slope).max(0.0).sqrt();
        decrements.push(decrement);

        // once the predicted decrease is below rounding of the risk, the
        // Armijo test is noise: take the full step
        let in_roundoff = 0.5 * decrement * decrement <= 64.0 * f64::EPSILON * risk.abs().max(1e-300);
        let mut t = 1.0;
        let mut candidate;
        let mut cand_risk;
        loop {
            candidate = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect::<Vec<_>>();
            cand_risk = empirical_risk(&candidate, data);
            if in_roundoff || cand_risk <= risk + opts.armijo_slope * t * slope || t < 1e-20 {
                break;
            }
            t *= opts.backtrack;
        }
        let accepted = in_roundoff || cand_risk <= risk;
        if accepted {
            theta = candidate;
        }
        if norm(&theta) > opts.norm_cap {
            let (r, g, _) = risk_grad_hessian(&theta, data);
            return (theta, iter + 1, norm(&g), r, decrements, FitStatus::IterationLimit);
        }
        (risk, grad, hess) = risk_grad_hessian(&theta, data);
        if decrement <= opts.tol_newton || !accepted {
            let gnorm = norm(&grad);
            let status = if gnorm <= opts.tol_grad { FitStatus::Converged } else { FitStatus::IterationLimit };
            return (theta, iter + 1, gnorm, risk, decrements, status);
        }
    }
    let gnorm = norm(&grad);
    let status = if gnorm <= opts.tol_grad { FitStatus::Converged } else { FitStatus::IterationLimit };
    (theta, opts.max_iters, gnorm, risk, decrements, status)
}

fn newton_direction(hess: &DMatrix<f64>, grad: &[f64], jitter: f64, d: usize) -> Vec<f64> {
    let g = DVector::from_column_slice(grad);
    let mut ridge = 0.0;
    for _ in 0..40 {
        let mut h = hess.clone();
        for i in 0..d {
            h[(i, i)] += ridge;
        }
        if let Some(chol) = Cholesky::new(h) {
            let step = chol.solve(&g);
            if step.iter().all(|v| v.is_finite()) {
                return step.iter().map(|v| -v).collect();
            }
        }
        ridge = if ridge == 0.0 { jitter * (1.0 + hess.diagonal().amax()) } else { ridge * 10.0 };
    }
    grad.iter().map(|v| -v).collect()
}
