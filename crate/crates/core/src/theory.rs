//! Computable theoretical objects: `ψ`, the phase boundary `h(β)`, the
//! statistical-dimension functional `F(V)`, and population risks.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::designs::{sample_dataset, DesignSpec, LabelLaw};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{sigma_prime_abs_moment, std_normal_cdf, std_normal_pdf};
use crate::linalg::{dot, norm};
use crate::logistic::{logistic_loss, sigmoid, softplus};
use crate::quad::{integrate, integrate_to_infinity, GaussHermite};

/// `ψ(s) = E[(s − Z)₊²] = (s² + 1)Φ(s) + sφ(s)`.
pub fn psi(s: f64) -> f64 {
    (s * s + 1.0) * std_normal_cdf(s) + s * std_normal_pdf(s)
}

/// `ψ'(s) = 2(sΦ(s) + φ(s))`.
pub fn psi_prime(s: f64) -> f64 {
    2.0 * (s * std_normal_cdf(s) + std_normal_pdf(s))
}

/// `ψ''(s) = 2Φ(s)`.
pub fn psi_second(s: f64) -> f64 {
    2.0 * std_normal_cdf(s)
}

/// `∫_{−∞}^{s} (s − z)² φ(z) dz` by adaptive quadrature, as `∫₀^∞ u² φ(s − u) du`.
pub fn psi_quadrature(s: f64) -> f64 {
    let f = |u: f64| u * u * std_normal_pdf(s - u);
    let upper = s.max(0.0) + 40.0;
    let mid = s.max(0.0);
    let head = if mid > 0.0 { integrate(f, 0.0, mid, 1e-16, 1e-14) } else { 0.0 };
    head + integrate(f, mid, upper, 1e-16, 1e-14)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundaryEstimate {
    pub beta: f64,
    pub h_hat: f64,
    pub mc_std_error: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseBoundaryOptions {
    pub bootstrap: usize,
    pub t_tol: f64,
}

impl Default for PhaseBoundaryOptions {
    fn default() -> Self {
        Self { bootstrap: 200, t_tol: 1e-9 }
    }
}

/// `n` draws of `V_β = Y'X'` with `X' ~ N(0,1)` and `P(Y' = 1 | X') = σ(βX')`.
pub fn sample_v_beta<R: Rng + ?Sized>(beta: f64, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            if rng.random::<f64>() < sigmoid(beta * x) {
                x
            } else {
                -x
            }
        })
        .collect()
}

/// `g(t) = mean ψ(tVᵢ)`.
pub fn phase_objective(v: &[f64], t: f64) -> f64 {
    v.iter().map(|&x| psi(t * x)).sum::<f64>() / v.len() as f64
}

fn phase_objective_slope(v: &[f64], t: f64) -> f64 {
    v.iter().map(|&x| x * psi_prime(t * x)).sum::<f64>() / v.len() as f64
}

/// Minimizer over `ℝ` of a convex function with derivative `slope`. The
/// sign of `slope(0)` picks the half-line; the bracket `[0, 10]` on that side
/// is doubled until the slope changes sign, then golden-section search.
fn minimize_convex<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, slope: G, tol: f64) -> Result<f64> {
    let s0 = slope(0.0);
    if s0 == 0.0 {
        return Ok(0.0);
    }
    let dir = if s0 > 0.0 { -1.0 } else { 1.0 };
    let mut hi = 10.0;
    while dir * slope(dir * hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Bracket(format!("objective still decreasing at t = {}", dir * hi)));
        }
    }
    Ok(dir * golden_section(|u| f(dir * u), 0.0, hi, tol))
}

pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Monte Carlo `h(β) = min_t E ψ(tV_β)` with a bootstrap standard error.
/// `V_β` leans positive, so for `β > 0` the minimizer `t_star` is negative.
pub fn phase_boundary<R: Rng + ?Sized>(beta: f64, n_mc: usize, rng: &mut R) -> Result<PhaseBoundaryEstimate> {
    phase_boundary_with(beta, n_mc, rng, &PhaseBoundaryOptions::default())
}

pub fn phase_boundary_with<R: Rng + ?Sized>(
    beta: f64,
    n_mc: usize,
    rng: &mut R,
    opts: &PhaseBoundaryOptions,
) -> Result<PhaseBoundaryEstimate> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be finite and nonnegative, got {beta}")));
    }
    if n_mc < 1000 {
        return Err(invalid(format!("phase boundary needs at least 1000 samples, got {n_mc}")));
    }
    let v = sample_v_beta(beta, n_mc, rng);
    let t_star = minimize_convex(|t| phase_objective(&v, t), |t| phase_objective_slope(&v, t), opts.t_tol)?;
    let h_hat = phase_objective(&v, t_star);

    // Bootstrap: each resample is re-optimized by one Newton step from t*,
    // exact to second order in the resampling perturbation; ψ and its
    // derivatives at t*Vᵢ are shared by all resamples.
    let vals: Vec<(f64, f64, f64)> = v
        .iter()
        .map(|&x| (psi(t_star * x), x * psi_prime(t_star * x), x * x * psi_second(t_star * x)))
        .collect();
    let n = v.len();
    let mut boot = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let (mut g, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (a, b, c) = vals[rng.random_range(0..n)];
            g += a;
            g1 += b;
            g2 += c;
        }
        let (g, g1, g2) = (g / n as f64, g1 / n as f64, g2 / n as f64);
        let correction = if g2 > 0.0 { 0.5 * g1 * g1 / g2 } else { 0.0 };
        boot.push(g - correction);
    }
    let se = crate::stats::std_dev(&boot).max(f64::EPSILON * h_hat.max(1e-300));
    Ok(PhaseBoundaryEstimate { beta, h_hat: h_hat.clamp(0.0, 1.0), mc_std_error: se, t_star })
}

/// Deterministic `h(β)` using the density `2φ(v)σ(βv)` of `V_β`.
pub fn phase_boundary_quadrature(beta: f64) -> Result<PhaseBoundaryEstimate> {
    let density = |v: f64| 2.0 * std_normal_pdf(v) * sigmoid(beta * v);
    let expect = |h: &dyn Fn(f64) -> f64| {
        integrate(|v| h(v) * density(v), -40.0, 0.0, 1e-15, 1e-13) + integrate(|v| h(v) * density(v), 0.0, 40.0, 1e-15, 1e-13)
    };
    let g = |t: f64| expect(&|v| psi(t * v));
    let slope = |t: f64| expect(&|v| v * psi_prime(t * v));
    let t_star = minimize_convex(g, slope, 1e-10)?;
    Ok(PhaseBoundaryEstimate { beta, h_hat: g(t_star), mc_std_error: 0.0, t_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatDimEstimate {
    pub f_hat: f64,
    pub delta_hat: f64,
    pub n: usize,
    pub std_error: f64,
}

/// `min_λ Σ (λVᵢ − Zᵢ)₊²` with its minimizer; the minimizer is `±∞` when
/// every nonzero `Vᵢ` has the same sign.
pub fn stat_dim_inner(v: &[f64], z: &[f64]) -> (f64, f64) {
    let objective = |lambda: f64| -> f64 {
        v.iter().zip(z).map(|(&a, &b)| (lambda * a - b).max(0.0).powi(2)).sum()
    };
    let slope = |lambda: f64| -> f64 { v.iter().zip(z).map(|(&a, &b)| a * (lambda * a - b).max(0.0)).sum() };
    let has_pos = v.iter().any(|&a| a > 0.0);
    let has_neg = v.iter().any(|&a| a < 0.0);
    let fixed: f64 = v.iter().zip(z).filter(|(&a, _)| a == 0.0).map(|(_, &b)| b.min(0.0).powi(2)).sum();
    match (has_pos, has_neg) {
        (false, false) => (0.0, fixed),
        (true, false) => (f64::NEG_INFINITY, fixed),
        (false, true) => (f64::INFINITY, fixed),
        (true, true) => {
            let (mut lo, mut hi) = (-1.0, 1.0);
            while slope(lo) > 0.0 {
                lo *= 2.0;
            }
            while slope(hi) < 0.0 {
                hi *= 2.0;
            }
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lambda = 0.5 * (lo + hi);
            (lambda, objective(lambda))
        }
    }
}

/// Monte Carlo `E_V F(V)` with a fresh `V` of length `n` for every draw of `Z`.
pub fn expected_statistical_dimension<R: Rng + ?Sized>(
    beta: f64,
    n: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<StatDimEstimate> {
    if n == 0 || n_mc == 0 {
        return Err(Error::Empty);
    }
    let mut z = vec![0.0; n];
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let v = sample_v_beta(beta, n, rng);
        z.iter_mut().for_each(|zi| *zi = rng.sample(StandardNormal));
        draws.push(stat_dim_inner(&v, &z).1);
    }
    let f_hat = crate::stats::mean(&draws).clamp(0.0, n as f64);
    Ok(StatDimEstimate { f_hat, delta_hat: n as f64 - f_hat, n, std_error: crate::stats::std_error(&draws) })
}

/// Monte Carlo `F(V) = E_Z[dist(Z, ℝV + ℝ₊ⁿ)²]`.
pub fn statistical_dimension_f<R: Rng + ?Sized>(v: &[f64], n_mc: usize, rng: &mut R) -> Result<StatDimEstimate> {
    let n = v.len();
    if n == 0 || n_mc == 0 {
        return Err(Error::Empty);
    }
    let mut z = vec![0.0; n];
    let mut draws = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        z.iter_mut().for_each(|zi| *zi = rng.sample(StandardNormal));
        draws.push(stat_dim_inner(v, &z).1);
    }
    let f_hat = crate::stats::mean(&draws).clamp(0.0, n as f64);
    Ok(StatDimEstimate { f_hat, delta_hat: n as f64 - f_hat, n, std_error: crate::stats::std_error(&draws) })
}

/// `E softplus(rG)`.
pub fn expected_softplus(r: f64) -> f64 {
    let r = r.abs();
    if r == 0.0 {
        return std::f64::consts::LN_2;
    }
    let split = if r > 1.0 { 40.0 / r } else { 40.0 };
    let f = |g: f64| (-r * g).exp().ln_1p() * std_normal_pdf(g);
    let tail = integrate(f, 0.0, split, 1e-17, 1e-14) + integrate_to_infinity(f, split, 1e-17, 1e-14);
    r * crate::gaussian::std_normal_pdf(0.0) + 2.0 * tail
}

/// Gaussian well-specified risk at `θ` with `a = ⟨θ,u*⟩`, `b = ‖θ − a u*‖`,
/// signal `β = ‖θ*‖`: `E softplus(‖θ‖G) − aβ c1(β)`.
pub fn population_risk_gaussian_wellspec(a: f64, b: f64, beta: f64) -> f64 {
    let r = a.hypot(b);
    expected_softplus(r) - a * beta * sigma_prime_abs_moment(beta, 0)
}

/// `(∂L/∂a, ∂L/∂b) = (a c1(r) − β c1(β), b c1(r))`.
pub fn population_risk_gaussian_wellspec_grad(a: f64, b: f64, beta: f64) -> (f64, f64) {
    let c1r = sigma_prime_abs_moment(a.hypot(b), 0);
    (a * c1r - beta * sigma_prime_abs_moment(beta, 0), b * c1r)
}

/// Same risk by a tensor Gauss–Hermite rule on `(G₁, G₂)`; accurate for
/// moderate `β` only.
pub fn population_risk_gaussian_wellspec_tensor(a: f64, b: f64, beta: f64, nodes: usize) -> f64 {
    GaussHermite::cached(nodes).expect2(|g1, g2| {
        let s = a * g1 + b * g2;
        sigmoid(beta * g1) * softplus(-s) + sigmoid(-beta * g1) * softplus(s)
    })
}

/// `(a, b, β)` for `θ` relative to `θ*`; `θ* = 0` uses any direction.
pub fn wellspec_coordinates(theta: &[f64], theta_star: &[f64]) -> (f64, f64, f64) {
    let beta = norm(theta_star);
    if beta == 0.0 {
        return (0.0, norm(theta), 0.0);
    }
    let a = dot(theta, theta_star) / beta;
    let b = (dot(theta, theta) - a * a).max(0.0).sqrt();
    (a, b, beta)
}

/// `L(θ) − L(θ*)` on the Gaussian well-specified model, with the `c1(β)`
/// terms combined before subtraction.
pub fn excess_risk_gaussian_wellspec(theta: &[f64], theta_star: &[f64]) -> f64 {
    let (a, b, beta) = wellspec_coordinates(theta, theta_star);
    let drift = (a - beta) * beta * sigma_prime_abs_moment(beta, 0);
    (expected_softplus(a.hypot(b)) - expected_softplus(beta)) - drift
}

/// `E softplus(c + bG)`. The Gaussian weight is below `1e-340` outside
/// `[−40, 40]`, so the range is truncated there and split at the kink
/// `−c/b` when it falls inside.
fn expected_softplus_shift(c: f64, b: f64) -> f64 {
    const EDGE: f64 = 40.0;
    let b = b.abs();
    if b < 1e-300 {
        return softplus(c);
    }
    let g0 = -c / b;
    let f = |g: f64| softplus(c + b * g) * std_normal_pdf(g);
    if g0 > -EDGE && g0 < EDGE {
        integrate(f, -EDGE, g0, 1e-17, 1e-13) + integrate(f, g0, EDGE, 1e-17, 1e-13)
    } else {
        // split at 0 so the bulk is resolved before bisection starts
        integrate(f, -EDGE, 0.0, 1e-17, 1e-13) + integrate(f, 0.0, EDGE, 1e-17, 1e-13)
    }
}

/// Worst-case misspecified risk on a Gaussian design at `θ` with
/// `a = ⟨θ,u*⟩`, `b` the orthogonal norm:
/// `E softplus(−(a|G₁| + bG₂)) + p·a·√(2/π)`.
pub fn population_risk_gaussian_worstcase(a: f64, b: f64, p: f64) -> f64 {
    let inner = |g1: f64| expected_softplus_shift(-a * g1, b) * 2.0 * std_normal_pdf(g1);
    let split = if a.abs() > 1.0 { 40.0 / a.abs() } else { 40.0 };
    let e = integrate(inner, 0.0, split, 1e-15, 1e-12) + integrate_to_infinity(inner, split, 1e-15, 1e-12);
    e + p * a * (2.0 / std::f64::consts::PI).sqrt()
}

/// Worst-case coordinates of `θ` relative to `u*`.
pub fn worstcase_coordinates(theta: &[f64], u_star: &[f64]) -> (f64, f64) {
    let a = dot(theta, u_star);
    (a, (dot(theta, theta) - a * a).max(0.0).sqrt())
}

/// Plain Monte Carlo risk `(estimate, std_error)`.
pub fn population_risk_mc<R: Rng + ?Sized>(
    theta: &[f64],
    design: &DesignSpec,
    law: &LabelLaw,
    n_mc: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if theta.len() != design.d {
        return Err(Error::DimensionMismatch { expected: design.d, found: theta.len() });
    }
    const BATCH: usize = 4096;
    let (mut sum, mut sum2, mut done) = (0.0, 0.0, 0usize);
    while done < n_mc {
        let m = BATCH.min(n_mc - done);
        let data = sample_dataset(design, law, m, rng)?;
        for (x, y) in data.iter() {
            let l = logistic_loss(theta, x, y);
            sum += l;
            sum2 += l * l;
        }
        done += m;
    }
    let n = n_mc as f64;
    let mean = sum / n;
    let var = ((sum2 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Population Hessian of the Gaussian well-specified model at `θ*`:
/// `c0(β)u*u*ᵀ + c1(β)(I − u*u*ᵀ)`.
pub fn gaussian_population_hessian(theta_star: &[f64]) -> nalgebra::DMatrix<f64> {
    let beta = norm(theta_star);
    let c = crate::gaussian::gaussian_fisher_components(beta);
    let d = theta_star.len();
    let u: Vec<f64> = if beta > 0.0 { theta_star.iter().map(|t| t / beta).collect() } else { vec![0.0; d] };
    nalgebra::DMatrix::from_fn(d, d, |i, j| {
        let uu = u[i] * u[j];
        let id = if i == j { 1.0 } else { 0.0 };
        c.c0 * uu + c.c1 * (id - uu)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn psi_examples() {
        assert!((psi(0.0) - 0.5).abs() < 1e-15);
        assert!((psi(2.0) + psi(-2.0) - 5.0).abs() < 1e-13);
        assert!(psi(-3.0) <= (-4.5f64).exp() / 2.0);
    }

    #[test]
    fn psi_closed_form_matches_quadrature() {
        let mut worst = 0.0f64;
        for i in 0..=2000 {
            let s = -10.0 + i as f64 * 0.01;
            worst = worst.max((psi(s) - psi_quadrature(s)).abs());
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn psi_derivatives_match_differences() {
        for i in -40..=40 {
            let s = i as f64 * 0.2;
            let h = 1e-5;
            let d1 = (psi(s + h) - psi(s - h)) / (2.0 * h);
            let d2 = (psi_prime(s + h) - psi_prime(s - h)) / (2.0 * h);
            assert!((d1 - psi_prime(s)).abs() < 1e-8 * (1.0 + d1.abs()));
            assert!((d2 - psi_second(s)).abs() < 1e-8);
        }
    }

    #[test]
    fn phase_boundary_at_zero_signal() {
        let est = phase_boundary(0.0, 200_000, &mut SeededRng::new(1).stream()).unwrap();
        assert!((est.h_hat - 0.5).abs() < 3.0 * est.mc_std_error + 1e-3, "{est:?}");
        assert!(est.mc_std_error > 0.0 && est.t_star.abs() < 0.02);
        let q = phase_boundary_quadrature(0.0).unwrap();
        assert!((q.h_hat - 0.5).abs() < 1e-10 && q.t_star < 1e-6);
    }

    #[test]
    fn phase_boundary_agrees_with_quadrature() {
        for (k, beta) in [1.0, 5.0].into_iter().enumerate() {
            let est = phase_boundary(beta, 200_000, &mut SeededRng::with_path(2, k as u64, 0).stream()).unwrap();
            let q = phase_boundary_quadrature(beta).unwrap();
            assert!((est.h_hat - q.h_hat).abs() < 4.0 * est.mc_std_error, "{est:?} vs {q:?}");
            assert!(est.t_star < 0.0 && (est.t_star - q.t_star).abs() < 0.05 * q.t_star.abs());
        }
    }

    #[test]
    fn phase_boundary_rejects_small_samples() {
        assert!(phase_boundary(1.0, 10, &mut SeededRng::new(0).stream()).is_err());
        assert!(phase_boundary(-1.0, 5000, &mut SeededRng::new(0).stream()).is_err());
    }

    #[test]
    fn phase_objective_is_convex_and_prefers_negative_t() {
        let v = sample_v_beta(2.0, 20_000, &mut SeededRng::new(3).stream());
        let h = 0.05;
        for i in 1..100 {
            let t = i as f64 * 0.05;
            let second = phase_objective(&v, t + h) - 2.0 * phase_objective(&v, t) + phase_objective(&v, t - h);
            assert!(second >= -1e-9);
            assert!(phase_objective(&v, -t) < phase_objective(&v, t));
        }
    }

    #[test]
    fn stat_dim_edge_cases() {
        let mut rng = SeededRng::new(4).stream();
        let n = 50;
        let est = statistical_dimension_f(&vec![0.0; n], 4000, &mut rng).unwrap();
        assert!((est.f_hat - n as f64 / 2.0).abs() < 3.0 * est.std_error, "{est:?}");
        let est = statistical_dimension_f(&[1.0], 2000, &mut rng).unwrap();
        assert!(est.f_hat <= 1e-3);
    }

    #[test]
    fn expected_stat_dim_sits_below_phase_boundary() {
        let mut rng = SeededRng::new(6).stream();
        // a single coordinate spans the whole line, so nothing is left over
        let one = expected_statistical_dimension(2.0, 1, 500, &mut rng).unwrap();
        assert!(one.f_hat < 1e-12);
        for beta in [0.5, 3.0] {
            let n = 200;
            let est = expected_statistical_dimension(beta, n, 3000, &mut rng).unwrap();
            let h = phase_boundary_quadrature(beta).unwrap().h_hat;
            let per = est.f_hat / n as f64;
            assert!(per <= h + 3.0 * est.std_error / n as f64, "beta {beta}: {per} vs {h}");
            // the inequality is tight up to lower-order terms in n
            assert!(per >= 0.9 * h, "beta {beta}: {per} vs {h}");
        }
    }

    #[test]
    fn stat_dim_inner_is_stationary() {
        let mut rng = SeededRng::new(5).stream();
        let v = sample_v_beta(1.0, 40, &mut rng);
        for _ in 0..50 {
            let z: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
            let (lambda, value) = stat_dim_inner(&v, &z);
            let slope = |l: f64| -> f64 { v.iter().zip(&z).map(|(&a, &b)| a * (l * a - b).max(0.0)).sum() };
            assert!(slope(lambda - 1e-9) <= 1e-9 && slope(lambda + 1e-9) >= -1e-9);
            let f = |l: f64| -> f64 { v.iter().zip(&z).map(|(&a, &b)| (l * a - b).max(0.0).powi(2)).sum() };
            assert!(value <= f(lambda + 1e-3) && value <= f(lambda - 1e-3));
        }
    }

    #[test]
    fn wellspec_risk_examples() {
        assert!((population_risk_gaussian_wellspec(0.0, 0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        for beta in [0.5, 1.0, 5.0, 20.0] {
            let (ga, gb) = population_risk_gaussian_wellspec_grad(beta, 0.0, beta);
            assert!(ga.abs() < 1e-12 && gb.abs() < 1e-12);
            let h = 1e-5;
            let num_a = (population_risk_gaussian_wellspec(beta + h, 0.0, beta) - population_risk_gaussian_wellspec(beta - h, 0.0, beta)) / (2.0 * h);
            let num_b = (population_risk_gaussian_wellspec(beta, h, beta) - population_risk_gaussian_wellspec(beta, -h, beta)) / (2.0 * h);
            assert!(num_a.abs() < 1e-6 && num_b.abs() < 1e-6, "{num_a} {num_b}");
            assert!(population_risk_gaussian_wellspec(0.0, 0.0, beta) - population_risk_gaussian_wellspec(beta, 0.0, beta) >= 0.0);
        }
    }

    #[test]
    fn wellspec_risk_matches_tensor_rule() {
        for &(a, b, beta) in &[(0.3, 0.4, 0.5), (1.0, 0.0, 1.0), (-0.5, 1.5, 2.0), (2.0, 1.0, 1.5)] {
            let exact = population_risk_gaussian_wellspec(a, b, beta);
            let tensor = population_risk_gaussian_wellspec_tensor(a, b, beta, 192);
            assert!((exact - tensor).abs() < 1e-8 * exact, "{a} {b} {beta}: {exact} vs {tensor}");
        }
    }

    #[test]
    fn wellspec_risk_symmetry_and_excess_grid() {
        for beta in [1.0, 5.0] {
            let base = population_risk_gaussian_wellspec(beta, 0.0, beta);
            for i in 0..20 {
                for j in 0..20 {
                    let a = -2.0 * beta + 4.0 * beta * i as f64 / 19.0;
                    let b = 3.0 * j as f64 / 19.0;
                    let l = population_risk_gaussian_wellspec(a, b, beta);
                    assert!((l - population_risk_gaussian_wellspec(a, -b, beta)).abs() < 1e-15);
                    assert!(l - base >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn excess_risk_is_consistent() {
        let theta_star = [1.0, 2.0, -1.0];
        let theta = [1.1, 1.9, -0.8];
        let (a, b, beta) = wellspec_coordinates(&theta, &theta_star);
        let direct = population_risk_gaussian_wellspec(a, b, beta) - population_risk_gaussian_wellspec(beta, 0.0, beta);
        assert!((excess_risk_gaussian_wellspec(&theta, &theta_star) - direct).abs() < 1e-12);
        assert!(excess_risk_gaussian_wellspec(&theta_star, &theta_star).abs() < 1e-15);
    }

    #[test]
    fn worstcase_risk_minimized_at_calibrated_signal() {
        let p = 0.01;
        let b_star = crate::designs::worstcase_signal_of_p(p).unwrap();
        let f = |a: f64| population_risk_gaussian_worstcase(a, 0.0, p);
        let a_min = golden_section(f, 0.5, 100.0, 1e-7);
        assert!((a_min - b_star).abs() < 1e-3 * b_star, "{a_min} vs {b_star}");
        assert!(population_risk_gaussian_worstcase(b_star, 0.3, p) > f(b_star));
        assert!(f(b_star) < population_risk_gaussian_worstcase(-b_star, 0.0, p));
    }

    #[test]
    fn mc_risk_agrees_with_quadrature() {
        use crate::designs::{DesignKind, DesignSpec};
        use crate::logistic::ModelParams;
        let mut rng = SeededRng::new(6).stream();
        let spec = DesignSpec::new(DesignKind::Gaussian, 3).unwrap();
        for k in 0..20 {
            let beta = 0.5 + 4.0 * rng.random::<f64>();
            let theta_star = ModelParams::from_direction(&crate::linalg::unit_vector(3, 0), beta).unwrap();
            let theta: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let law = LabelLaw::well_specified(theta_star.clone());
            let (est, se) = population_risk_mc(&theta, &spec, &law, 40_000, &mut SeededRng::with_path(6, 1, k).stream()).unwrap();
            let (a, b, beta) = wellspec_coordinates(&theta, &theta_star);
            let exact = population_risk_gaussian_wellspec(a, b, beta);
            assert!((est - exact).abs() < 4.0 * se, "{est} ± {se} vs {exact}");
        }
        let law = LabelLaw::well_specified(ModelParams::zeros(3));
        let (est, _) = population_risk_mc(&[0.0; 3], &spec, &law, 1000, &mut rng).unwrap();
        assert!((est - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn worstcase_mc_orientation_and_quadrature() {
        use crate::designs::{DesignKind, DesignSpec};
        let p = 0.02;
        let b = crate::designs::worstcase_signal_of_p(p).unwrap();
        let u = crate::linalg::unit_vector(2, 0);
        let spec = DesignSpec::new(DesignKind::Gaussian, 2).unwrap();
        let law = LabelLaw::worst_case(u.clone(), p).unwrap();
        let plus: Vec<f64> = u.iter().map(|x| b * x).collect();
        let minus: Vec<f64> = u.iter().map(|x| -b * x).collect();
        let (lp, sp) = population_risk_mc(&plus, &spec, &law, 100_000, &mut SeededRng::new(7).stream()).unwrap();
        let (lm, _) = population_risk_mc(&minus, &spec, &law, 100_000, &mut SeededRng::new(8).stream()).unwrap();
        assert!(lp < lm);
        let exact = population_risk_gaussian_worstcase(b, 0.0, p);
        assert!((lp - exact).abs() < 4.0 * sp, "{lp} ± {sp} vs {exact}");
    }

    #[test]
    fn population_hessian_components() {
        let h = gaussian_population_hessian(&[0.0, 2.0]);
        let c = crate::gaussian::gaussian_fisher_components(2.0);
        assert!((h[(1, 1)] - c.c0).abs() < 1e-15 && (h[(0, 0)] - c.c1).abs() < 1e-15);
    }

    #[test]
    fn worstcase_risk_small_orthogonal_component() {
        // Simpson over |G₁| on [0, 12] with Gauss–Hermite in G₂
        let p = 0.005;
        let gh = GaussHermite::cached(200);
        for (a, b) in [(12.0, 0.05), (12.0, 1e-3), (3.0, 0.5), (0.5, 2.0), (12.0, 0.0)] {
            let inner = |g1: f64| gh.expect(|g2| softplus(-(a * g1 + b * g2))) * 2.0 * std_normal_pdf(g1);
            let m = 200_000;
            let h = 12.0 / m as f64;
            let mut acc = inner(0.0) + inner(12.0);
            for k in 1..m {
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * inner(k as f64 * h);
            }
            let oracle = acc * h / 3.0 + p * a * (2.0 / std::f64::consts::PI).sqrt();
            let got = population_risk_gaussian_worstcase(a, b, p);
            assert!((got - oracle).abs() < 1e-10, "({a}, {b}): {got} vs {oracle}");
        }
    }
}
