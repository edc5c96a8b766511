//! Empirical version of the convex localization argument: if the whitened
//! gradient at `θ*` is small compared with the Hessian lower bound on an
//! `H`-ball around `θ*`, the minimizer exists inside that ball.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::linalg::{min_eigenvalue, norm};
use crate::logistic::empirical_gradient;
use crate::spectral::StructuredSpectralMatrix;
use crate::sweep::{column_chunk, HessianBank, CHUNK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCertificate {
    /// `‖∇L̂ₙ(θ*)‖_{H⁻¹}`
    pub nu: f64,
    /// min of `λ_min(H^{−1/2}Ĥₙ(θ)H^{−1/2})` over the sampled sphere and `θ*`
    pub c0_hat: f64,
    pub r0: f64,
    pub verdict: Verdict,
    /// `‖θ̂ − θ*‖_H ≤ 2ν/c0_hat` when certified
    pub norm_bound: Option<f64>,
    /// `2c1ν²/c0_hat²` when certified
    pub risk_bound: Option<f64>,
}

/// Empirical certificate; `c0_hat` comes from `n_dirs` sampled points, so
/// it is a Monte Carlo estimate, not a proof.
pub fn localization_certificate<R: Rng + ?Sized>(
    data: &Dataset,
    theta_star: &[f64],
    h: &StructuredSpectralMatrix,
    r0: f64,
    c1: f64,
    n_dirs: usize,
    rng: &mut R,
) -> LocalizationCertificate {
    let grad = empirical_gradient(theta_star, data);
    let nu = norm(&h.apply_power(-0.5, &grad));
    let mut thetas = vec![theta_star.to_vec()];
    if r0 > 0.0 {
        thetas.extend((0..n_dirs).map(|_| h.sample_sphere(theta_star, r0, rng)));
    }
    let c0_hat = whitened_min_eigenvalues(data, h, thetas).into_iter().fold(f64::INFINITY, f64::min);
    let certified = nu < c0_hat * r0 / 2.0;
    LocalizationCertificate {
        nu,
        c0_hat,
        r0,
        verdict: if certified { Verdict::Certified } else { Verdict::NotCertified },
        norm_bound: certified.then(|| 2.0 * nu / c0_hat),
        risk_bound: certified.then(|| 2.0 * c1 * nu * nu / (c0_hat * c0_hat)),
    }
}

/// `λ_min(H^{−1/2}Ĥₙ(θ)H^{−1/2})` for each `θ`.
pub(crate) fn whitened_min_eigenvalues(data: &Dataset, h: &StructuredSpectralMatrix, thetas: Vec<Vec<f64>>) -> Vec<f64> {
    let d = data.d();
    let mut bank = HessianBank::new(d, thetas);
    let mut buf = Vec::new();
    let mut start = 0;
    while start < data.n() {
        let len = CHUNK.min(data.n() - start);
        column_chunk(data.x().values(), d, start, len, &mut buf);
        bank.add_chunk(&buf, len);
        start += len;
    }
    bank.hessians().iter().map(|m| min_eigenvalue(&h.whiten(m))).collect()
}
