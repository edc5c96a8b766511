//! The structured matrix `H = B⁻³ u*u*ᵀ + B⁻¹ (I − u*u*ᵀ)`.
//!
//! `H` is stored as `(u*, B)`; every power `Hᵖ` acts as
//! `B^{−3p}⟨u*,v⟩u* + B^{−p}(v − ⟨u*,v⟩u*)`, so no dense factorization is
//! ever needed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{dot, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSpectralMatrix {
    u_star: Vec<f64>,
    b: f64,
}

impl StructuredSpectralMatrix {
    /// `u_star` must be a unit vector (within 1e-12) and `b ≥ e`.
    pub fn new(u_star: Vec<f64>, b: f64) -> Result<Self> {
        if u_star.is_empty() || u_star.iter().any(|v| !v.is_finite()) {
            return Err(invalid("u_star must be a finite nonempty vector"));
        }
        if (norm(&u_star) - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("u_star must have unit norm, got {}", norm(&u_star))));
        }
        if !(b >= crate::E) || !b.is_finite() {
            return Err(invalid(format!("signal strength must satisfy B >= e, got {b}")));
        }
        Ok(Self { u_star, b })
    }

    /// `u* = θ*/‖θ*‖`, `B = max{e, ‖θ*‖}`; rejects `θ* = 0`.
    pub fn from_theta_star(theta_star: &[f64]) -> Result<Self> {
        let u = crate::linalg::normalized(theta_star)
            .ok_or_else(|| invalid("theta_star = 0 has no direction; use `with_direction`"))?;
        Self::new(u, crate::signal_strength(norm(theta_star)))
    }

    /// Like [`Self::from_theta_star`] but falls back to `fallback` when `θ* = 0`.
    pub fn with_direction(theta_star: &[f64], fallback: &[f64]) -> Result<Self> {
        match crate::linalg::normalized(theta_star) {
            Some(u) => Self::new(u, crate::signal_strength(norm(theta_star))),
            None => {
                let u = crate::linalg::normalized(fallback).ok_or_else(|| invalid("zero fallback direction"))?;
                Self::new(u, crate::E)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.u_star.len()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn u_star(&self) -> &[f64] {
        &self.u_star
    }

    /// Eigenvalue along `u*` and on its orthogonal complement.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.b.powi(-3), 1.0 / self.b)
    }

    /// `Hᵖ v`.
    pub fn apply_power(&self, p: f64, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim());
        let c = dot(&self.u_star, v);
        let par = self.b.powf(-3.0 * p);
        let perp = self.b.powf(-p);
        v.iter()
            .zip(&self.u_star)
            .map(|(vi, ui)| par * c * ui + perp * (vi - c * ui))
            .collect()
    }

    /// `(‖v‖_H, ‖v‖_{H⁻¹})`.
    pub fn norms(&self, v: &[f64]) -> (f64, f64) {
        let c = dot(&self.u_star, v);
        let perp2 = (dot(v, v) - c * c).max(0.0);
        let h = self.b.powi(-3) * c * c + perp2 / self.b;
        let hinv = self.b.powi(3) * c * c + self.b * perp2;
        (h.sqrt(), hinv.sqrt())
    }

    /// Dense `Hᵖ`.
    pub fn to_dense_power(&self, p: f64) -> DMatrix<f64> {
        let d = self.dim();
        let par = self.b.powf(-3.0 * p);
        let perp = self.b.powf(-p);
        DMatrix::from_fn(d, d, |i, j| {
            let uu = self.u_star[i] * self.u_star[j];
            let id = if i == j { 1.0 } else { 0.0 };
            par * uu + perp * (id - uu)
        })
    }

    /// `H^{−1/2} M H^{−1/2}`.
    pub fn whiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let w = self.to_dense_power(-0.5);
        &w * m * &w
    }

    /// Uniform draw on `{θ : ‖θ − center‖_H = radius}`.
    pub fn sample_sphere<R: Rng + ?Sized>(&self, center: &[f64], radius: f64, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let xi: Vec<f64> = loop {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm(&v);
            if n > 0.0 {
                break v.into_iter().map(|x| x / n).collect();
            }
        };
        let step = self.apply_power(-0.5, &xi);
        center.iter().zip(step).map(|(c, s)| c + radius * s).collect()
    }
}
