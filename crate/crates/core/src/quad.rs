//! Quadrature: Gauss–Hermite rules for Gaussian expectations and an adaptive
//! Gauss–Kronrod (7/15) integrator for everything with kinks or sharp peaks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Hermite rule normalized for `G ~ N(0,1)`: `E f(G) ≈ Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch on the physicists' Jacobi matrix, then `x = √2·node`,
    /// `w = weight/√π`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (std::f64::consts::SQRT_2 * eig.eigenvalues[k], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize to kill eigensolver asymmetry
        for k in 0..n / 2 {
            let (a, b) = (pairs[k], pairs[n - 1 - k]);
            let x = 0.5 * (b.0 - a.0);
            let w = 0.5 * (a.1 + b.1);
            pairs[k] = (-x, w);
            pairs[n - 1 - k] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let (nodes, weights) = pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
        Self { nodes, weights }
    }

    /// Shared, lazily built rule with `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().unwrap().get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(GaussHermite::new(n));
        cache.lock().unwrap().entry(n).or_insert(rule).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `E f(G₁, G₂)` on the tensor grid.
    pub fn expect2<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = 0.0;
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
                inner += wy * f(x, y);
            }
            acc += wx * inner;
        }
        acc
    }
}

/// Estimate of `E f(G)` by Gauss–Hermite, doubling the node count from
/// `start` until successive estimates agree to `rel_tol` (relative, with an
/// absolute floor of `rel_tol·1e-3`). Returns `None` if `max_nodes` is
/// reached first.
pub fn gauss_hermite_adaptive<F: Fn(f64) -> f64>(f: F, start: usize, max_nodes: usize, rel_tol: f64) -> Option<f64> {
    let mut n = start;
    let mut prev = GaussHermite::cached(n).expect(&f);
    while n * 2 <= max_nodes {
        n *= 2;
        let cur = GaussHermite::cached(n).expect(&f);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(1e-3) {
            return Some(cur);
        }
        prev = cur;
    }
    None
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod on `[a, b]` with absolute tolerance `abs_tol` and
/// relative tolerance `rel_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (mut total, mut err) = kronrod15(&mut f, a, b);
    let mut pieces = vec![(a, b, total, err)];
    for _ in 0..4000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, v, e) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(&mut f, lo, mid);
        let (v2, e2) = kronrod15(&mut f, mid, hi);
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // re-sum to shed the drift of incremental updates
    pieces.iter().map(|p| p.2).sum()
}

/// `∫_a^∞ f`, via `x = a + t/(1−t)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let x = a + t / (1.0 - t);
            let v = f(x) / ((1.0 - t) * (1.0 - t));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// `E f(G)` for `G ~ N(0,1)` by adaptive quadrature on both half-lines.
pub fn gaussian_expectation<F: FnMut(f64) -> f64>(mut f: F, abs_tol: f64, rel_tol: f64) -> f64 {
    let pdf = crate::gaussian::std_normal_pdf;
    let right = integrate_to_infinity(|x| f(x) * pdf(x), 0.0, 0.5 * abs_tol, rel_tol);
    let left = integrate_to_infinity(|x| f(-x) * pdf(x), 0.0, 0.5 * abs_tol, rel_tol);
    left + right
}
