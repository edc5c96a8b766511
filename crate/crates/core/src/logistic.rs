//! Logistic primitives and the empirical risk with its first two derivatives.

use std::ops::Deref;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// `σ(s) = eˢ/(1+eˢ)`, evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `σ'(s) = σ(s)σ(−s)`.
#[inline]
pub fn sigmoid_prime(s: f64) -> f64 {
    let e = (-s.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `log(1 + eˣ)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    (-x.abs()).exp().ln_1p() + x.max(0.0)
}

/// Loss as a function of the margin `m = y⟨θ, x⟩`: `log(1 + e^{−m})`.
#[inline]
pub fn margin_loss(m: f64) -> f64 {
    softplus(-m)
}

/// Parameter vector `θ ∈ ℝᵈ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams(Vec<f64>);

impl ModelParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Empty);
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(Self(theta))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    /// `θ = s·u` for a direction `u` (normalized here).
    pub fn from_direction(u: &[f64], signal: f64) -> Result<Self> {
        let u = crate::linalg::normalized(u).ok_or_else(|| crate::error::invalid("zero direction"))?;
        Self::new(u.into_iter().map(|v| v * signal).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `θ/‖θ‖`; `None` at the origin.
    pub fn direction(&self) -> Option<Vec<f64>> {
        crate::linalg::normalized(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ModelParams {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn logistic_loss(theta: &[f64], x: &[f64], y: f64) -> f64 {
    margin_loss(y * dot(theta, x))
}

pub fn empirical_risk(theta: &[f64], data: &Dataset) -> f64 {
    debug_assert_eq!(theta.len(), data.d());
    data.iter().map(|(x, y)| logistic_loss(theta, x, y)).sum::<f64>() / data.n() as f64
}

/// `−(1/n) Σ Yᵢ σ(−Yᵢ⟨θ,Xᵢ⟩) Xᵢ`.
pub fn empirical_gradient(theta: &[f64], data: &Dataset) -> Vec<f64> {
    let mut g = vec![0.0; data.d()];
    for (x, y) in data.iter() {
        let w = -y * sigmoid(-y * dot(theta, x));
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += w * xj;
        }
    }
    let n = data.n() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// `(1/n) Σ σ'(⟨θ,Xᵢ⟩) XᵢXᵢᵀ`.
pub fn empirical_hessian(theta: &[f64], data: &Dataset) -> DMatrix<f64> {
    let d = data.d();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for (x, _) in data.iter() {
        let w = sigmoid_prime(dot(theta, x));
        for i in 0..d {
            let wi = w * x[i];
            for j in i..d {
                h[(i, j)] += wi * x[j];
            }
        }
    }
    let n = data.n() as f64;
    for i in 0..d {
        for j in i..d {
            let v = h[(i, j)] / n;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Risk, gradient and Hessian in one pass (the Newton inner loop).
pub(crate) fn risk_grad_hessian(theta: &[f64], data: &Dataset) -> (f64, Vec<f64>, DMatrix<f64>) {
    let d = data.d();
    let mut risk = 0.0;
    let mut g = vec![0.0; d];
    let mut h = DMatrix::<f64>::zeros(d, d);
    for (x, y) in data.iter() {
        let s = dot(theta, x);
        risk += margin_loss(y * s);
        let gw = -y * sigmoid(-y * s);
        let hw = sigmoid_prime(s);
        for i in 0..d {
            g[i] += gw * x[i];
            let wi = hw * x[i];
            for j in i..d {
                h[(i, j)] += wi * x[j];
            }
        }
    }
    let n = data.n() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    for i in 0..d {
        for j in i..d {
            let v = h[(i, j)] / n;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (risk / n, g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DesignMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
        let x: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        Dataset::new(DesignMatrix::new(x, n, d).unwrap(), y).unwrap()
    }

    #[test]
    fn sigmoid_reference_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        let expected = 1.0 - (-40f64).exp();
        assert!(((sigmoid(40.0) - expected) / expected).abs() <= 1e-17);
        for s in [1e3, -1e3, 1e6, -1e6] {
            let v = sigmoid(s);
            assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn loss_reference_values() {
        let x = [0.3, -1.2];
        assert!((logistic_loss(&[0.0, 0.0], &x, 1.0) - 2f64.ln()).abs() < 1e-15);
        // m = 1
        assert!((margin_loss(1.0) - 0.313_261_687_518_222_8).abs() < 1e-15);
        for m in [-30.0, -2.0, 0.5, 7.0] {
            let lhs = margin_loss(m) + margin_loss(-m);
            let rhs = (2.0 + m.exp() + (-m).exp()).ln();
            assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1.0));
        }
        assert!(margin_loss(-1e6).is_finite());
        assert_eq!(margin_loss(1e6), 0.0);
    }

    #[test]
    fn empirical_risk_examples() {
        let data = Dataset::from_rows(&[vec![1.0], vec![2.0]], &[1.0, -1.0]).unwrap();
        assert!((empirical_risk(&[0.0], &data) - 2f64.ln()).abs() < 1e-15);
        let expected = ((1.0 + (-0.1f64).exp()).ln() + (1.0 + 0.2f64.exp()).ln()) / 2.0;
        assert!((empirical_risk(&[0.1], &data) - expected).abs() < 1e-15);
        let single = Dataset::from_rows(&[vec![1.0, -1.0]], &[1.0]).unwrap();
        assert!((empirical_risk(&[2.0, 2.0], &single) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn derivatives_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_data(&mut rng, 40, 3);
        let g = empirical_gradient(&[0.0; 3], &data);
        let h = empirical_hessian(&[0.0; 3], &data);
        let n = data.n() as f64;
        for j in 0..3 {
            let expected: f64 = -data.iter().map(|(x, y)| y * x[j]).sum::<f64>() / (2.0 * n);
            assert!((g[j] - expected).abs() < 1e-14);
            for k in 0..3 {
                let expected: f64 = data.iter().map(|(x, _)| x[j] * x[k]).sum::<f64>() / (4.0 * n);
                assert!((h[(j, k)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let d = 4;
            let data = random_data(&mut rng, 30, d);
            let theta: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let g = empirical_gradient(&theta, &data);
            let h = empirical_hessian(&theta, &data);
            let eps = 1e-5;
            for j in 0..d {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += eps;
                tm[j] -= eps;
                let fd = (empirical_risk(&tp, &data) - empirical_risk(&tm, &data)) / (2.0 * eps);
                assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1e-3), "grad {j}: {fd} vs {}", g[j]);
                let gp = empirical_gradient(&tp, &data);
                let gm = empirical_gradient(&tm, &data);
                for k in 0..d {
                    let fd = (gp[k] - gm[k]) / (2.0 * eps);
                    assert!((fd - h[(k, j)]).abs() <= 1e-5, "hess {k},{j}");
                }
            }
            let (r, g2, h2) = risk_grad_hessian(&theta, &data);
            assert!((r - empirical_risk(&theta, &data)).abs() < 1e-14);
            assert!(g2.iter().zip(&g).all(|(a, b)| (a - b).abs() < 1e-15));
            assert!((h2 - h).abs().max() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn sigmoid_identities(s in -700.0f64..700.0) {
            prop_assert!((sigmoid(s) + sigmoid(-s) - 1.0).abs() <= 1e-14);
            prop_assert!((sigmoid_prime(s) - sigmoid(s) * sigmoid(-s)).abs() <= 1e-14);
        }

        #[test]
        fn risk_is_convex_along_segments(seed in 0u64..1000, t in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_data(&mut rng, 25, 3);
            let a: Vec<f64> = (0..3).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let b: Vec<f64> = (0..3).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let lhs = empirical_risk(&mid, &data);
            let rhs = t * empirical_risk(&a, &data) + (1.0 - t) * empirical_risk(&b, &data);
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn hessian_is_psd(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_data(&mut rng, 12, 5);
            let theta: Vec<f64> = (0..5).map(|_| 4.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let h = empirical_hessian(&theta, &data);
            prop_assert!(crate::linalg::min_eigenvalue(&h) >= -1e-10);
        }
    }
}
