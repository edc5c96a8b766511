//! Standard normal helpers and the Gaussian Fisher-information components
//! `c0(β) = E[σ'(βG)G²]`, `c1(β) = E[σ'(βG)]`.

use serde::{Deserialize, Serialize};

use crate::logistic::sigmoid_prime;
use crate::quad::{gauss_hermite_adaptive, integrate, integrate_to_infinity};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(x)`, accurate in both tails.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherComponents {
    pub c0: f64,
    pub c1: f64,
}

/// `(c0(β), c1(β))`.
pub fn gaussian_fisher_components(beta: f64) -> FisherComponents {
    FisherComponents { c0: sigma_prime_abs_moment(beta, 2), c1: sigma_prime_abs_moment(beta, 0) }
}

/// `E[σ'(βG)|G|ᵏ]`.
///
/// Gauss–Hermite from 96 nodes, doubled up to 768 until successive values
/// agree to 1e−9; when the peak of `σ'(βG)` is too narrow for the rule, falls
/// back to adaptive Gauss–Kronrod on the half-line.
pub fn sigma_prime_abs_moment(beta: f64, k: u32) -> f64 {
    let beta = beta.abs();
    let f = |g: f64| sigmoid_prime(beta * g) * g.abs().powi(k as i32);
    // |g|^k is smooth only for even k
    if k % 2 == 0 {
        if let Some(v) = gauss_hermite_adaptive(f, 96, 768, 1e-9) {
            return v;
        }
    }
    sigma_prime_abs_moment_kronrod(beta, k)
}

/// Independent route: `2∫₀^∞ σ'(βg) gᵏ φ(g) dg` by adaptive Gauss–Kronrod.
pub fn sigma_prime_abs_moment_kronrod(beta: f64, k: u32) -> f64 {
    let beta = beta.abs();
    let f = |g: f64| sigmoid_prime(beta * g) * g.powi(k as i32) * std_normal_pdf(g);
    let split = if beta > 1.0 { 40.0 / beta } else { 40.0 };
    let head = integrate(f, 0.0, split, 1e-18, 1e-13);
    let tail = integrate_to_infinity(f, split, 1e-18, 1e-13);
    2.0 * (head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn normal_helpers() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((std_normal_cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-15);
        assert!((std_normal_cdf(-10.0) - 7.619_853_024_160_526e-24).abs() < 1e-37);
        assert!((std_normal_pdf(0.0) - INV_SQRT_2PI).abs() < 1e-17);
    }

    #[test]
    fn components_at_zero() {
        let c = gaussian_fisher_components(0.0);
        assert!((c.c0 - 0.25).abs() < 1e-12);
        assert!((c.c1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn routes_agree() {
        for i in 0..=100 {
            let beta = i as f64 * 0.5;
            for k in [0, 2] {
                let a = sigma_prime_abs_moment(beta, k);
                let b = sigma_prime_abs_moment_kronrod(beta, k);
                assert!((a - b).abs() <= 1e-8 * b, "beta={beta} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn moment_bounds_hold() {
        let s = (2.0 / std::f64::consts::PI).sqrt();
        for k in [0u32, 2] {
            for beta in [1.0f64, 5.0, 20.0] {
                let m = sigma_prime_abs_moment(beta, k);
                let kp = (k + 1) as f64;
                let lower = s * (2f64.powi(k as i32 + 1) / kp)
                    * (1.0 / (4.0 * crate::E.powi(4) * beta.powf(kp))).min(sigmoid_prime(2.0 * beta) / crate::E.powi(2));
                let kfact = if k == 0 { 1.0 } else { 2.0 };
                let upper = s * gamma(kp / 2.0).min(kfact / beta.powf(kp));
                assert!(lower <= m && m <= upper, "k={k} beta={beta}: {lower} <= {m} <= {upper}");
            }
        }
    }

    #[test]
    fn scaled_components_stay_in_fixed_interval() {
        let (mut lo0, mut hi0, mut lo1, mut hi1) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
        for i in 0..=200 {
            let beta = i as f64 * 0.25;
            let c = gaussian_fisher_components(beta);
            let a = c.c0 * (beta + 1.0).powi(3);
            let b = c.c1 * (beta + 1.0);
            lo0 = lo0.min(a);
            hi0 = hi0.max(a);
            lo1 = lo1.min(b);
            hi1 = hi1.max(b);
        }
        assert!(lo0 >= 0.2 && hi0 <= 2.0, "c0 scaled in [{lo0}, {hi0}]");
        assert!(lo1 >= 0.2 && hi1 <= 0.5, "c1 scaled in [{lo1}, {hi1}]");
    }

    #[test]
    fn ordering_and_monotonicity() {
        let mut prev = gaussian_fisher_components(0.0);
        for i in 1..=200 {
            let beta = i as f64 * 0.25;
            let c = gaussian_fisher_components(beta);
            assert!(c.c0 > 0.0 && c.c1 > 0.0);
            assert!(c.c0 <= c.c1, "beta={beta}");
            assert!(c.c0 <= prev.c0 && c.c1 <= prev.c1, "beta={beta}");
            prev = c;
        }
    }
}
