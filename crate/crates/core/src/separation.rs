//! Existence of the logistic MLE via linear separation.
//!
//! The data are separated iff some `θ` has `Aθ ≥ 0` and `1ᵀAθ = 1`, where
//! `A` has rows `YᵢXᵢᵀ`. By the theorem of the alternative this fails iff
//! `Aᵀy = 0` for some `y ≥ 1`, i.e. `Aᵀz = −Aᵀ1, z ≥ 0` is feasible. That
//! system has only `d` rows, so it is what the simplex solves; when it is
//! infeasible the phase-1 Farkas ray is exactly a separating direction.
//!
//! Non-separated data whose rows do not span `ℝᵈ` are reported as
//! `DegenerateSpan`: the risk is flat along the kernel, so no unique MLE.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::simplex::{solve_standard_form, LpStatus, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationStatus {
    Separated,
    NotSeparated,
    DegenerateSpan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationResult {
    pub status: SeparationStatus,
    /// `Separated`: direction with margins `≥ −tol_sep` summing to 1.
    /// `DegenerateSpan`: a unit kernel vector of the design (and the
    /// `certificate` of non-separation).
    pub witness: Option<Vec<f64>>,
    pub margins: Option<Vec<f64>>,
    /// `NotSeparated`: weights `y ≥ 1` with `Σ yᵢYᵢXᵢ = 0`.
    pub certificate: Option<Vec<f64>>,
    /// Residual of whichever certificate was produced.
    pub lp_residual: f64,
}

impl SeparationResult {
    /// The MLE exists iff the data are neither separated nor rank deficient.
    pub fn mle_exists(&self) -> bool {
        self.status == SeparationStatus::NotSeparated
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeparationOptions {
    pub tol_sep: f64,
    /// Relative eigenvalue floor of `XᵀX` below which the span is degenerate.
    pub rank_tol: f64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        Self { tol_sep: 1e-9, rank_tol: 1e-12 }
    }
}

pub fn check_separation(data: &Dataset) -> Result<SeparationResult> {
    check_separation_with(data, &SeparationOptions::default())
}

pub fn check_separation_with(data: &Dataset, opts: &SeparationOptions) -> Result<SeparationResult> {
    let (n, d) = (data.n(), data.d());
    let a = data.signed_rows();
    // M = Aᵀ, d × n
    let mut m = vec![0.0; d * n];
    for i in 0..n {
        for j in 0..d {
            m[j * n + i] = a[i * d + j];
        }
    }
    let b0: Vec<f64> = (0..d).map(|j| -m[j * n..(j + 1) * n].iter().sum::<f64>()).collect();
    let scale = 1.0 + b0.iter().map(|v| v.abs()).sum::<f64>();
    let cost = vec![0.0; n];
    let mut last_failure = String::new();

    for perturbation in [0.0, 1e-11, 1e-9] {
        let b: Vec<f64> = b0
            .iter()
            .enumerate()
            .map(|(j, v)| v + perturbation * scale * if j % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let lp = solve_standard_form(&m, d, n, &b, &cost, &SimplexOptions::default())?;
        match lp.status {
            LpStatus::Infeasible => {
                let theta: Vec<f64> = lp.duals.iter().map(|q| -q).collect();
                let margins = data.margins(&theta);
                let total: f64 = margins.iter().sum();
                if !(total > 0.0) || !total.is_finite() {
                    last_failure = format!("Farkas ray has nonpositive total margin {total}");
                    continue;
                }
                let theta: Vec<f64> = theta.iter().map(|v| v / total).collect();
                let margins: Vec<f64> = margins.iter().map(|v| v / total).collect();
                let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
                if worst >= -opts.tol_sep {
                    return Ok(SeparationResult {
                        status: SeparationStatus::Separated,
                        witness: Some(theta),
                        margins: Some(margins),
                        certificate: None,
                        lp_residual: (-worst).max(0.0),
                    });
                }
                last_failure = format!("witness min margin {worst} below -tol_sep");
            }
            LpStatus::Optimal | LpStatus::Unbounded => {
                let y: Vec<f64> = lp.x.iter().map(|z| 1.0 + z).collect();
                let residual = (0..d)
                    .map(|j| dot(&m[j * n..(j + 1) * n], &y).abs())
                    .fold(0.0f64, f64::max)
                    / (1.0 + y.iter().sum::<f64>());
                if residual <= opts.tol_sep {
                    if let Some(kernel) = kernel_direction(data, opts.rank_tol) {
                        let kernel_margins = data.margins(&kernel);
                        let kernel_residual = kernel_margins.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        return Ok(SeparationResult {
                            status: SeparationStatus::DegenerateSpan,
                            witness: Some(kernel),
                            margins: Some(kernel_margins),
                            certificate: Some(y),
                            lp_residual: kernel_residual,
                        });
                    }
                    return Ok(SeparationResult {
                        status: SeparationStatus::NotSeparated,
                        witness: None,
                        margins: None,
                        certificate: Some(y),
                        lp_residual: residual,
                    });
                }
                last_failure = format!("certificate residual {residual} above tol_sep");
            }
        }
    }
    Err(Error::SeparationSolver(last_failure))
}

/// Unit vector in the kernel of the design when `rank(X) < d`.
fn kernel_direction(data: &Dataset, rank_tol: f64) -> Option<Vec<f64>> {
    let d = data.d();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for x in data.x().rows() {
        for i in 0..d {
            for j in i..d {
                gram[(i, j)] += x[i] * x[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let eig = SymmetricEigen::new(gram);
    let (k, &min) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    if data.n() < d || min <= rank_tol * max.max(f64::MIN_POSITIVE) {
        Some(eig.eigenvectors.column(k).iter().copied().collect())
    } else {
        None
    }
}
