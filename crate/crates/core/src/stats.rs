//! Summary statistics used by the auditors and the grid harness.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lower: 0.0, upper: 1.0 };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds are exactly 0 and 1 at the extremes; avoid roundoff there
    let lower = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Interval { lower, upper }
}

/// `√(p(1−p)/n)`.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn std_error(v: &[f64]) -> f64 {
    std_dev(v) / (v.len() as f64).sqrt()
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return f64::NAN;
    }
    let h = (s.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn median(v: &[f64]) -> f64 {
    quantile(v, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut dmax) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        dmax = dmax.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * dmax;
    KsTest { statistic: dmax, p_value: kolmogorov_tail(lambda) }
}

/// `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn wilson_matches_reference() {
        // 81 / 263 at 95%: reference interval (0.2553, 0.3662)
        let ci = wilson_interval(81, 263, 1.959_963_984_540_054);
        assert!((ci.lower - 0.2553).abs() < 1e-4 && (ci.upper - 0.3662).abs() < 1e-4, "{ci:?}");
        let zero = wilson_interval(0, 50, 1.96);
        assert_eq!(zero.lower, 0.0);
        assert!(zero.upper > 0.0 && zero.upper < 0.1);
    }

    #[test]
    fn wilson_width_shrinks_like_inverse_root() {
        let w1 = wilson_interval(300, 1000, 1.96);
        let w4 = wilson_interval(1200, 4000, 1.96);
        let ratio = (w1.upper - w1.lower) / (w4.upper - w4.lower);
        assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile(&v, 0.9) - 3.7).abs() < 1e-12);
        assert!((std_dev(&v) - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let mut rng = crate::rng::SeededRng::new(1).stream();
        let a: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.3).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
        let _ = rng.random::<f64>();
    }
}
