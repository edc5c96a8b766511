//! Monte Carlo auditors for design regularity (small-ball, two-dimensional
//! margin, ψ₁ tails) and deviation experiments for the whitened gradient and
//! empirical Hessian.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::designs::{sample_dataset, DesignKind, DesignSpec, LabelLaw};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, min_eigenvalue, norm, orthonormal_complement, unit_vector};
use crate::logistic::{empirical_gradient, ModelParams};
use crate::spectral::StructuredSpectralMatrix;
use crate::stats::{binomial_se, wilson_interval, Interval};
use crate::sweep::{HessianBank, CHUNK};

const Z95: f64 = 1.959_963_984_540_054;

/// Draws of `⟨dᵢ, X⟩` for fixed directions plus selected raw coordinates.
///
/// Rademacher designs use packed sign bits and per-byte partial-sum tables,
/// so a projection costs `d/8` lookups instead of `d` multiply-adds.
struct Projector {
    d: usize,
    kind: DesignKind,
    dirs: Vec<Vec<f64>>,
    coords: Vec<usize>,
    tables: Vec<Vec<f64>>,
    row: Vec<f64>,
    words: Vec<u64>,
}

impl Projector {
    fn new(design: &DesignSpec, dirs: Vec<Vec<f64>>, coords: Vec<usize>) -> Self {
        let d = design.d;
        let tables = if design.kind == DesignKind::Rademacher {
            let bytes = d.div_ceil(8);
            dirs.iter()
                .map(|v| {
                    let mut t = vec![0.0; bytes * 256];
                    for b in 0..bytes {
                        for pattern in 0..256usize {
                            let mut s = 0.0;
                            for l in 0..8 {
                                let j = 8 * b + l;
                                if j < d {
                                    s += if pattern >> l & 1 == 1 { v[j] } else { -v[j] };
                                }
                            }
                            t[b * 256 + pattern] = s;
                        }
                    }
                    t
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            d,
            kind: design.kind.clone(),
            dirs,
            coords,
            tables,
            row: vec![0.0; d],
            words: vec![0; d.div_ceil(64)],
        }
    }

    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, proj: &mut [f64], coords: &mut [f64]) {
        if self.kind == DesignKind::Rademacher {
            self.words.iter_mut().for_each(|w| *w = rng.random());
            for (k, table) in self.tables.iter().enumerate() {
                let mut s = 0.0;
                for (wi, &w) in self.words.iter().enumerate() {
                    let base = wi * 8;
                    for byte in 0..8 {
                        let b = base + byte;
                        if b * 8 >= self.d {
                            break;
                        }
                        s += table[b * 256 + ((w >> (8 * byte)) & 0xff) as usize];
                    }
                }
                proj[k] = s;
            }
            for (c, &i) in coords.iter_mut().zip(&self.coords) {
                *c = if self.words[i / 64] >> (i % 64) & 1 == 1 { 1.0 } else { -1.0 };
            }
        } else {
            self.kind.fill(&mut self.row, rng);
            for (p, v) in proj.iter_mut().zip(&self.dirs) {
                *p = dot(v, &self.row);
            }
            for (c, &i) in coords.iter_mut().zip(&self.coords) {
                *c = self.row[i];
            }
        }
    }
}

fn check_unit(u: &[f64], d: usize) -> Result<()> {
    if u.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: u.len() });
    }
    if (norm(u) - 1.0).abs() > 1e-9 {
        return Err(invalid("direction must be a unit vector"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallPoint {
    pub t: f64,
    pub p_hat: f64,
    pub std_error: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallCurve {
    pub points: Vec<SmallBallPoint>,
    /// `max_{t ≥ η} P̂(|⟨u*,X⟩| ≤ t)/t`: smallest `c` for which the bound
    /// holds empirically on the grid above `η`.
    pub c_hat: f64,
}

pub fn small_ball_estimate<R: Rng + ?Sized>(
    design: &DesignSpec,
    u_star: &[f64],
    t_grid: &[f64],
    eta: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<SmallBallCurve> {
    check_unit(u_star, design.d)?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(invalid("t grid must be a nonempty subset of (0, 1]"));
    }
    let mut proj = Projector::new(design, vec![u_star.to_vec()], Vec::new());
    let mut counts = vec![0u64; t_grid.len()];
    let mut p = [0.0];
    for _ in 0..n_mc {
        proj.sample(rng, &mut p, &mut []);
        let a = p[0].abs();
        for (c, &t) in counts.iter_mut().zip(t_grid) {
            if a <= t {
                *c += 1;
            }
        }
    }
    let points: Vec<SmallBallPoint> = t_grid
        .iter()
        .zip(&counts)
        .map(|(&t, &k)| {
            let p_hat = k as f64 / n_mc as f64;
            SmallBallPoint { t, p_hat, std_error: binomial_se(p_hat, n_mc as u64), interval: wilson_interval(k, n_mc as u64, Z95) }
        })
        .collect();
    let c_hat = points.iter().filter(|pt| pt.t >= eta).map(|pt| pt.p_hat / pt.t).fold(0.0, f64::max);
    Ok(SmallBallCurve { points, c_hat })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProbeKind {
    /// `cos α·u* + sin α·w` with `w` the plane's unit vector orthogonal to `u*`.
    Rotation { plane: usize, angle: f64 },
    /// `sign·(eᵢ − eⱼ)/√2`
    Sparse { i: usize, j: usize, sign: f64 },
    Dense { v: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    pub kind: ProbeKind,
    /// `‖u* − v‖₂`
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    u_star: Vec<f64>,
    planes: Vec<Vec<f64>>,
    probes: Vec<Probe>,
}

pub const PROBE_ANGLES: [f64; 6] = [PI / 64.0, PI / 32.0, PI / 16.0, PI / 8.0, PI / 4.0, PI / 2.0];

impl ProbeSet {
    /// `u*` itself, rotations by [`PROBE_ANGLES`] in `n_planes` random
    /// planes through `u*`, and up to `n_sparse` contrasts `±(eᵢ − eⱼ)/√2`
    /// with `⟨u*, v⟩ ≥ 0` (the pair on the two largest `|u*ᵢ|` first).
    pub fn standard<R: Rng + ?Sized>(u_star: &[f64], n_planes: usize, n_sparse: usize, rng: &mut R) -> Result<Self> {
        let d = u_star.len();
        check_unit(u_star, d)?;
        let mut set = Self { u_star: u_star.to_vec(), planes: Vec::new(), probes: Vec::new() };
        set.probes.push(Probe { label: "u_star".into(), kind: ProbeKind::Rotation { plane: 0, angle: 0.0 }, distance: 0.0 });
        if d >= 2 {
            for k in 0..n_planes {
                let w = loop {
                    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    if let Some(w) = orthonormal_complement(u_star, &g) {
                        break w;
                    }
                };
                set.planes.push(w);
                for (a, &angle) in PROBE_ANGLES.iter().enumerate() {
                    set.probes.push(Probe {
                        label: format!("rotation[{k}]/pi_over_{}", [64, 32, 16, 8, 4, 2][a]),
                        kind: ProbeKind::Rotation { plane: k, angle },
                        distance: 2.0 * (angle / 2.0).sin(),
                    });
                }
            }
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| u_star[b].abs().total_cmp(&u_star[a].abs()).then(a.cmp(&b)));
            let mut pairs = vec![(order[0].min(order[1]), order[0].max(order[1]))];
            let mut guard = 0;
            while pairs.len() < n_sparse.min(d * (d - 1) / 2) && guard < 100 * n_sparse {
                guard += 1;
                let i = rng.random_range(0..d);
                let j = rng.random_range(0..d);
                let pair = (i.min(j), i.max(j));
                if i != j && !pairs.contains(&pair) {
                    pairs.push(pair);
                }
            }
            for &(i, j) in pairs.iter().take(n_sparse) {
                let inner = (u_star[i] - u_star[j]) / std::f64::consts::SQRT_2;
                for sign in [1.0, -1.0] {
                    if sign * inner >= -1e-15 {
                        set.probes.push(Probe {
                            label: format!("sparse[{}{i}-{j}]", if sign > 0.0 { "+" } else { "-" }),
                            kind: ProbeKind::Sparse { i, j, sign },
                            distance: (2.0 - 2.0 * sign * inner).max(0.0).sqrt(),
                        });
                    }
                }
            }
        }
        Ok(set)
    }

    /// Explicit probe directions only (plus `u*`).
    pub fn from_vectors(u_star: &[f64], vs: Vec<Vec<f64>>) -> Result<Self> {
        check_unit(u_star, u_star.len())?;
        let mut probes = vec![Probe { label: "u_star".into(), kind: ProbeKind::Rotation { plane: 0, angle: 0.0 }, distance: 0.0 }];
        for (k, v) in vs.into_iter().enumerate() {
            check_unit(&v, u_star.len())?;
            if dot(u_star, &v) < -1e-12 {
                return Err(invalid("probe directions must satisfy <u*, v> >= 0"));
            }
            let distance = norm(&crate::linalg::sub(u_star, &v));
            probes.push(Probe { label: format!("dense[{k}]"), kind: ProbeKind::Dense { v }, distance });
        }
        Ok(Self { u_star: u_star.to_vec(), planes: Vec::new(), probes })
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn u_star(&self) -> &[f64] {
        &self.u_star
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEstimate {
    pub label: String,
    pub distance: f64,
    pub p_hat: f64,
    pub std_error: f64,
    /// `P̂·c/η`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginEstimate {
    pub probes: Vec<ProbeEstimate>,
    pub min_ratio: f64,
}

/// `P̂(|⟨u*,X⟩| ≤ small, |⟨v,X⟩| ≥ factor·max{η, ‖u* − v‖})` for every probe.
pub fn two_dim_margin_probabilities<R: Rng + ?Sized>(
    design: &DesignSpec,
    probes: &ProbeSet,
    small: f64,
    factor: f64,
    eta: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    check_unit(&probes.u_star, design.d)?;
    let mut dirs = vec![probes.u_star.clone()];
    dirs.extend(probes.planes.iter().cloned());
    let mut coords = Vec::new();
    let mut dense_index = Vec::new();
    for p in &probes.probes {
        match &p.kind {
            ProbeKind::Sparse { i, j, .. } => {
                for c in [*i, *j] {
                    if !coords.contains(&c) {
                        coords.push(c);
                    }
                }
            }
            ProbeKind::Dense { v } => {
                dense_index.push(dirs.len());
                dirs.push(v.clone());
            }
            ProbeKind::Rotation { .. } => {}
        }
    }
    let n_dirs = dirs.len();
    let n_planes = probes.planes.len();
    let mut proj = Projector::new(design, dirs, coords.clone());
    let mut pv = vec![0.0; n_dirs];
    let mut cv = vec![0.0; coords.len()];
    let thresholds: Vec<f64> = probes.probes.iter().map(|p| factor * eta.max(p.distance)).collect();
    let mut counts = vec![0u64; probes.probes.len()];
    for _ in 0..n_mc {
        proj.sample(rng, &mut pv, &mut cv);
        if pv[0].abs() > small {
            continue;
        }
        let mut dense_seen = 0;
        for (k, p) in probes.probes.iter().enumerate() {
            let value = match &p.kind {
                ProbeKind::Rotation { plane, angle } => {
                    if *angle == 0.0 || n_planes == 0 {
                        pv[0]
                    } else {
                        angle.cos() * pv[0] + angle.sin() * pv[1 + plane]
                    }
                }
                ProbeKind::Sparse { i, j, sign } => {
                    let xi = cv[coords.iter().position(|c| c == i).expect("registered coordinate")];
                    let xj = cv[coords.iter().position(|c| c == j).expect("registered coordinate")];
                    sign * (xi - xj) / std::f64::consts::SQRT_2
                }
                ProbeKind::Dense { .. } => {
                    let v = pv[dense_index[dense_seen]];
                    dense_seen += 1;
                    v
                }
            };
            if value.abs() >= thresholds[k] {
                counts[k] += 1;
            }
        }
    }
    Ok(counts
        .iter()
        .map(|&k| {
            let p = k as f64 / n_mc as f64;
            (p, binomial_se(p, n_mc as u64))
        })
        .collect())
}

/// Two-dimensional margin auditor: `min_v P̂·c/η` over the probe set, with
/// the event `|⟨u*,X⟩| ≤ cη, |⟨v,X⟩| ≥ c⁻¹max{η, ‖u* − v‖}`. The assumption
/// holds empirically iff the minimum is at least 1.
pub fn two_dim_margin_estimate<R: Rng + ?Sized>(
    design: &DesignSpec,
    eta: f64,
    c: f64,
    probes: &ProbeSet,
    n_mc: usize,
    rng: &mut R,
) -> Result<MarginEstimate> {
    if !(eta > 0.0 && c > 0.0) {
        return Err(invalid("eta and c must be positive"));
    }
    let probs = two_dim_margin_probabilities(design, probes, c * eta, 1.0 / c, eta, n_mc, rng)?;
    let estimates: Vec<ProbeEstimate> = probes
        .probes
        .iter()
        .zip(probs)
        .map(|(p, (p_hat, se))| ProbeEstimate { label: p.label.clone(), distance: p.distance, p_hat, std_error: se, ratio: p_hat * c / eta })
        .collect();
    let min_ratio = estimates.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min);
    Ok(MarginEstimate { probes: estimates, min_ratio })
}

/// `max_{p ∈ grid} 2e·(Ê|⟨v,X⟩|ᵖ)^{1/p}/p`.
pub fn psi1_norm_estimate<R: Rng + ?Sized>(design: &DesignSpec, v: &[f64], p_grid: &[f64], n_mc: usize, rng: &mut R) -> Result<f64> {
    check_unit(v, design.d)?;
    if p_grid.is_empty() || p_grid.iter().any(|&p| !(2.0..=20.0).contains(&p)) {
        return Err(invalid("p grid must be a nonempty subset of [2, 20]"));
    }
    let mut proj = Projector::new(design, vec![v.to_vec()], Vec::new());
    let mut sums = vec![0.0; p_grid.len()];
    let mut x = [0.0];
    for _ in 0..n_mc {
        proj.sample(rng, &mut x, &mut []);
        let a = x[0].abs();
        let la = a.ln();
        for (s, &p) in sums.iter_mut().zip(p_grid) {
            if a > 0.0 {
                *s += (p * la).exp();
            }
        }
    }
    Ok(sums
        .iter()
        .zip(p_grid)
        .map(|(s, &p)| 2.0 * crate::E * (s / n_mc as f64).powf(1.0 / p) / p)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub u_star: Vec<f64>,
    pub eta: f64,
    pub c: f64,
    pub c_small_ball: f64,
    pub margin2d_min_ratio: f64,
    pub psi1_hat: f64,
    pub n_mc: usize,
}

/// Small-ball constant on a log grid of `t ∈ [η, 1]`, the two-dimensional
/// margin ratio on the standard probe set, and the larger ψ₁ estimate of
/// `⟨u*,X⟩` and of the first coordinate.
pub fn audit_design<R: Rng + ?Sized>(design: &DesignSpec, u_star: &[f64], eta: f64, c: f64, n_mc: usize, rng: &mut R) -> Result<RegularityReport> {
    if !(eta > 0.0 && eta <= (-1.0f64).exp()) {
        return Err(invalid(format!("eta must lie in (0, 1/e], got {eta}")));
    }
    let t_grid: Vec<f64> = (0..20).map(|k| eta * (1.0 / eta).powf(k as f64 / 19.0)).map(|t: f64| t.min(1.0)).collect();
    let sb = small_ball_estimate(design, u_star, &t_grid, eta, n_mc, rng)?;
    let probes = ProbeSet::standard(u_star, 2, 6, rng)?;
    let margin = two_dim_margin_estimate(design, eta, c, &probes, n_mc, rng)?;
    let p_grid: Vec<f64> = (2..=20).map(f64::from).collect();
    let psi_u = psi1_norm_estimate(design, u_star, &p_grid, n_mc, rng)?;
    let psi_e = psi1_norm_estimate(design, &unit_vector(design.d, 0), &p_grid, n_mc, rng)?;
    Ok(RegularityReport {
        u_star: u_star.to_vec(),
        eta,
        c,
        c_small_ball: sb.c_hat,
        margin2d_min_ratio: margin.min_ratio,
        psi1_hat: psi_u.max(psi_e),
        n_mc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub samples: Vec<f64>,
    pub bound: f64,
    pub coverage: f64,
}

impl DeviationSummary {
    fn new(samples: Vec<f64>, bound: f64) -> Self {
        let coverage = samples.iter().filter(|&&s| s <= bound).count() as f64 / samples.len().max(1) as f64;
        Self { samples, bound, coverage }
    }
}

/// `‖H^{−1/2}∇L̂ₙ(θ*)‖₂` over replicates of the Gaussian well-specified
/// model, against `27√((d + t)/n)`. `θ* = ‖θ*‖·u*` with `‖θ*‖ = B`; requires
/// `n ≥ 4B(d log 5 + t)`.
pub fn gradient_deviation_experiment<R: Rng + ?Sized>(
    d: usize,
    b: f64,
    n: usize,
    t: f64,
    replicates: usize,
    rng: &mut R,
) -> Result<DeviationSummary> {
    if !(b >= crate::E) {
        return Err(invalid(format!("B must be at least e, got {b}")));
    }
    let needed = 4.0 * b * (d as f64 * 5f64.ln() + t);
    if (n as f64) < needed {
        return Err(invalid(format!("n = {n} is below 4B(d log 5 + t) = {needed:.1}")));
    }
    let theta_star = ModelParams::from_direction(&unit_vector(d, 0), b)?;
    gradient_deviation_with(&theta_star, &unit_vector(d, 0), n, t, replicates, rng)
}

/// General form for any `θ*` (including `0`, where `u*` is `fallback`).
pub fn gradient_deviation_with<R: Rng + ?Sized>(
    theta_star: &[f64],
    fallback: &[f64],
    n: usize,
    t: f64,
    replicates: usize,
    rng: &mut R,
) -> Result<DeviationSummary> {
    let d = theta_star.len();
    let h = StructuredSpectralMatrix::with_direction(theta_star, fallback)?;
    let spec = DesignSpec::new(DesignKind::Gaussian, d)?;
    let law = LabelLaw::well_specified(ModelParams::new(theta_star.to_vec())?);
    let mut samples = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let data = sample_dataset(&spec, &law, n, rng)?;
        samples.push(whitened_gradient_norm(&data, theta_star, &h));
    }
    Ok(DeviationSummary::new(samples, 27.0 * ((d as f64 + t) / n as f64).sqrt()))
}

pub fn whitened_gradient_norm(data: &Dataset, theta_star: &[f64], h: &StructuredSpectralMatrix) -> f64 {
    norm(&h.apply_power(-0.5, &empirical_gradient(theta_star, data)))
}

fn sphere_points<R: Rng + ?Sized>(theta_star: &[f64], h: &StructuredSpectralMatrix, radius: f64, n_dirs: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut thetas = vec![theta_star.to_vec()];
    thetas.extend((0..n_dirs).map(|_| h.sample_sphere(theta_star, radius, rng)));
    thetas
}

/// `min λ_min(H^{−1/2}Ĥₙ(θ)H^{−1/2})` over `θ*` and `n_dirs` points drawn
/// uniformly on the `H`-sphere of the given radius about `θ*`.
pub fn hessian_lower_sweep<R: Rng + ?Sized>(
    data: &Dataset,
    theta_star: &[f64],
    h: &StructuredSpectralMatrix,
    radius: f64,
    n_dirs: usize,
    rng: &mut R,
) -> f64 {
    let thetas = sphere_points(theta_star, h, radius, n_dirs, rng);
    crate::localization::whitened_min_eigenvalues(data, h, thetas).into_iter().fold(f64::INFINITY, f64::min)
}

/// Same sweep on `n` fresh design rows generated chunk by chunk, never
/// materializing the full design (labels do not enter the Hessian).
/// Directions are drawn first, then the design.
pub fn hessian_lower_sweep_sampled<R: Rng + ?Sized>(
    design: &DesignSpec,
    theta_star: &[f64],
    h: &StructuredSpectralMatrix,
    radius: f64,
    n: usize,
    n_dirs: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = design.d;
    if theta_star.len() != d || h.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: theta_star.len() });
    }
    let thetas = sphere_points(theta_star, h, radius, n_dirs, rng);
    let mut bank = HessianBank::new(d, thetas);
    let mut buf = vec![0.0; CHUNK * d];
    let mut done = 0;
    while done < n {
        let len = CHUNK.min(n - done);
        // i.i.d. coordinates: a column-major fill has the same law as rows
        design.kind.fill(&mut buf[..len * d], rng);
        bank.add_chunk(&buf[..len * d], len);
        done += len;
    }
    Ok(bank.hessians().iter().map(|m| min_eigenvalue(&h.whiten(m))).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{gaussian_fisher_components, std_normal_cdf};
    use crate::linalg::diffuse_unit_vector;
    use crate::rng::SeededRng;

    fn gaussian(d: usize) -> DesignSpec {
        DesignSpec::new(DesignKind::Gaussian, d).unwrap()
    }

    fn rademacher(d: usize) -> DesignSpec {
        DesignSpec::new(DesignKind::Rademacher, d).unwrap()
    }

    fn random_unit(d: usize, rng: &mut impl Rng) -> Vec<f64> {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        crate::linalg::normalized(&g).unwrap()
    }

    #[test]
    fn rademacher_projection_fast_path_matches_dot() {
        let d = 77;
        let mut rng = SeededRng::new(1).stream();
        let u = random_unit(d, &mut rng);
        let mut proj = Projector::new(&rademacher(d), vec![u.clone()], vec![0, 5, 76]);
        let mut p = [0.0];
        let mut c = [0.0; 3];
        for _ in 0..100 {
            proj.sample(&mut rng, &mut p, &mut c);
            let x: Vec<f64> = (0..d).map(|i| if proj.words[i / 64] >> (i % 64) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            assert!((p[0] - dot(&u, &x)).abs() < 1e-12);
            assert_eq!(c, [x[0], x[5], x[76]]);
        }
    }

    #[test]
    fn gaussian_small_ball() {
        let d = 6;
        let mut rng = SeededRng::new(2).stream();
        let u = random_unit(d, &mut rng);
        let n = 200_000;
        let curve = small_ball_estimate(&gaussian(d), &u, &[0.1, 0.5, 1.0], 0.1, n, &mut rng).unwrap();
        let expected = 2.0 * std_normal_cdf(0.1) - 1.0;
        let pt = curve.points[0];
        assert!((pt.p_hat - expected).abs() < 3.0 * pt.std_error, "{pt:?}");
        assert!(pt.interval.lower <= pt.p_hat && pt.p_hat <= pt.interval.upper);
        assert!(curve.points.iter().all(|p| (0.0..=1.0).contains(&p.p_hat)));
        assert!(curve.c_hat > 0.7 && curve.c_hat < 0.85);
    }

    #[test]
    fn rademacher_canonical_direction_has_no_small_ball_mass() {
        let curve = small_ball_estimate(&rademacher(8), &unit_vector(8, 0), &[0.5], 0.1, 10_000, &mut SeededRng::new(3).stream()).unwrap();
        assert_eq!(curve.points[0].p_hat, 0.0);
    }

    #[test]
    fn rademacher_diffuse_small_ball_ratio() {
        let k = crate::E;
        let d = 1024;
        assert!(d as f64 >= k.powi(6));
        let lo = k.powi(3) / (d as f64).sqrt();
        let grid: Vec<f64> = (0..6).map(|i| lo + (1.0 - lo) * i as f64 / 5.0).collect();
        let curve = small_ball_estimate(&rademacher(d), &diffuse_unit_vector(d), &grid, lo, 100_000, &mut SeededRng::new(4).stream()).unwrap();
        for pt in &curve.points {
            let ratio = pt.p_hat / pt.t;
            let se = pt.std_error / pt.t;
            assert!(ratio >= 0.25 - 3.0 * se && ratio <= 1.0 + 3.0 * se, "{pt:?}");
        }
    }

    #[test]
    fn gaussian_margin_ratio_and_orthogonal_oracle() {
        let d = 5;
        let mut rng = SeededRng::new(5).stream();
        let u = random_unit(d, &mut rng);
        let (eta, c) = (0.05, 10.0);
        let probes = ProbeSet::standard(&u, 2, 4, &mut rng).unwrap();
        let est = two_dim_margin_estimate(&gaussian(d), eta, c, &probes, 200_000, &mut rng).unwrap();
        assert!(est.min_ratio >= 1.0, "{est:?}");
        // v ⟂ u*: independent marginals
        let w = orthonormal_complement(&u, &random_unit(d, &mut rng)).unwrap();
        let set = ProbeSet::from_vectors(&u, vec![w]).unwrap();
        let n = 400_000;
        let probs = two_dim_margin_probabilities(&gaussian(d), &set, c * eta, 1.0 / c, eta, n, &mut rng).unwrap();
        let dist = 2f64.sqrt();
        let oracle = (2.0 * std_normal_cdf(c * eta) - 1.0) * 2.0 * (1.0 - std_normal_cdf(dist / c));
        let (p, se) = probs[1];
        assert!((p - oracle).abs() < 4.0 * se, "{p} vs {oracle}");
    }

    #[test]
    fn gaussian_audits_are_rotation_invariant() {
        let d = 4;
        let mut rng = SeededRng::new(6).stream();
        let eta = 0.05;
        let mut small = Vec::new();
        for _ in 0..5 {
            let u = random_unit(d, &mut rng);
            let curve = small_ball_estimate(&gaussian(d), &u, &[0.2], eta, 50_000, &mut rng).unwrap();
            small.push(curve.points[0]);
        }
        for p in &small {
            assert!((p.p_hat - small[0].p_hat).abs() < 3.0 * (p.std_error.hypot(small[0].std_error)));
        }
    }

    #[test]
    fn rademacher_canonical_margin_fails() {
        let (eta, c) = (0.05, 10.0);
        let u = unit_vector(6, 0);
        let probes = ProbeSet::standard(&u, 1, 3, &mut SeededRng::new(7).stream()).unwrap();
        let est = two_dim_margin_estimate(&rademacher(6), eta, c, &probes, 20_000, &mut SeededRng::new(8).stream()).unwrap();
        assert_eq!(est.min_ratio, 0.0);
        assert!(est.probes.iter().all(|p| p.p_hat == 0.0));
    }

    #[test]
    fn rademacher_diffuse_margin_raw_lemma_form() {
        // κ = 1 for signs; d ≥ 2025, η ∈ [45/√d, 1], factor 0.2, bound η/70000
        let d = 4096;
        let u = diffuse_unit_vector(d);
        let mut rng = SeededRng::new(9).stream();
        let probes = ProbeSet::standard(&u, 2, 6, &mut rng).unwrap();
        for eta in [45.0 / 64.0, 1.0] {
            let probs = two_dim_margin_probabilities(&rademacher(d), &probes, eta, 0.2, eta, 20_000, &mut rng).unwrap();
            for (p, _) in probs {
                assert!(p >= eta / 70_000.0);
            }
        }
    }

    #[test]
    fn probe_set_respects_orientation() {
        let mut rng = SeededRng::new(10).stream();
        let u = random_unit(7, &mut rng);
        let set = ProbeSet::standard(&u, 2, 5, &mut rng).unwrap();
        assert_eq!(set.probes().len(), 1 + 12 + set.probes().iter().filter(|p| matches!(p.kind, ProbeKind::Sparse { .. })).count());
        for p in set.probes() {
            if let ProbeKind::Sparse { i, j, sign } = p.kind {
                assert!(sign * (u[i] - u[j]) >= -1e-15);
            }
            assert!(p.distance >= 0.0 && p.distance <= 2f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn psi1_estimates() {
        let p_grid: Vec<f64> = (2..=20).map(f64::from).collect();
        let mut rng = SeededRng::new(11).stream();
        let r = psi1_norm_estimate(&rademacher(3), &unit_vector(3, 0), &p_grid, 1000, &mut rng).unwrap();
        assert!((r - crate::E).abs() < 1e-12);
        let g = psi1_norm_estimate(&gaussian(3), &unit_vector(3, 1), &p_grid, 1_000_000, &mut rng).unwrap();
        assert!((1.5..=4.0).contains(&g), "{g}");
        // sup over p of 2e‖G‖_p/p from the moment formula
        let oracle = p_grid
            .iter()
            .map(|&p| {
                let m = 2f64.powf(p / 2.0) * statrs::function::gamma::gamma((p + 1.0) / 2.0) / PI.sqrt();
                2.0 * crate::E * m.powf(1.0 / p) / p
            })
            .fold(0.0, f64::max);
        assert!(g <= oracle * 1.01);
        // on the full grid both unit-variance maxima sit at p = 2 (value e);
        // the heavier Laplace tail shows from p = 3 on
        let laplace = DesignSpec::new(DesignKind::IidLaplace, 3).unwrap();
        let l = psi1_norm_estimate(&laplace, &unit_vector(3, 1), &p_grid, 1_000_000, &mut rng).unwrap();
        assert!((l - crate::E).abs() < 0.02 && (g - crate::E).abs() < 0.02);
        let tail: Vec<f64> = (3..=20).map(f64::from).collect();
        let g3 = psi1_norm_estimate(&gaussian(3), &unit_vector(3, 1), &tail, 1_000_000, &mut rng).unwrap();
        let l3 = psi1_norm_estimate(&laplace, &unit_vector(3, 1), &tail, 1_000_000, &mut rng).unwrap();
        assert!(l3 > g3 + 0.1, "{l3} vs {g3}");
    }

    #[test]
    fn gradient_deviation_coverage_and_scaling() {
        let mut rng = SeededRng::new(12).stream();
        let (d, b, t) = (5usize, crate::E, 2.0);
        let n = (4.0 * b * (d as f64 * 5f64.ln() + t)).ceil() as usize;
        let s1 = gradient_deviation_experiment(d, b, n, t, 400, &mut rng).unwrap();
        assert!(s1.coverage >= 1.0 - 2.0 * (-t).exp());
        let s4 = gradient_deviation_experiment(d, b, 4 * n, t, 400, &mut rng).unwrap();
        let ratio = crate::stats::median(&s1.samples) / crate::stats::median(&s4.samples);
        assert!((ratio - 2.0).abs() <= 0.3, "{ratio}");
        assert!(gradient_deviation_experiment(d, b, n - 1, t, 1, &mut rng).is_err());
    }

    #[test]
    fn gradient_deviation_null_signal_variance() {
        let d = 4;
        let n = 500;
        let summary = gradient_deviation_with(&[0.0; 4], &unit_vector(d, 0), n, 1.0, 2000, &mut SeededRng::new(13).stream()).unwrap();
        // H⁻¹ at B = e: e³ along u*, e on the complement
        let trace = crate::E.powi(3) + (d as f64 - 1.0) * crate::E;
        let mean_sq = summary.samples.iter().map(|s| s * s).sum::<f64>() / summary.samples.len() as f64;
        let expected = trace / (4.0 * n as f64);
        assert!((mean_sq - expected).abs() < 0.06 * expected, "{mean_sq} vs {expected}");
    }

    #[test]
    fn gradient_deviation_rotation_invariance() {
        let d = 4;
        let n = 300;
        let mut rng = SeededRng::new(14).stream();
        let u1 = random_unit(d, &mut rng);
        let u2 = random_unit(d, &mut rng);
        let th1: Vec<f64> = u1.iter().map(|x| 3.0 * x).collect();
        let th2: Vec<f64> = u2.iter().map(|x| 3.0 * x).collect();
        let a = gradient_deviation_with(&th1, &u1, n, 1.0, 2000, &mut rng).unwrap();
        let b = gradient_deviation_with(&th2, &u2, n, 1.0, 2000, &mut rng).unwrap();
        assert!(crate::stats::ks_two_sample(&a.samples, &b.samples).p_value > 0.01);
    }

    #[test]
    fn hessian_sweep_large_sample_limit() {
        let d = 3;
        let beta = 2.0;
        let theta = ModelParams::from_direction(&unit_vector(d, 2), beta).unwrap();
        let h = StructuredSpectralMatrix::from_theta_star(&theta).unwrap();
        let spec = gaussian(d);
        let data = sample_dataset(&spec, &LabelLaw::well_specified(theta.clone()), 1_000_000, &mut SeededRng::new(15).stream()).unwrap();
        let m = h.whiten(&crate::logistic::empirical_hessian(&theta, &data));
        let c = gaussian_fisher_components(beta);
        let b = h.b();
        let along = m[(2, 2)];
        assert!((along / (c.c0 * b.powi(3)) - 1.0).abs() < 0.05, "{along}");
        for i in 0..2 {
            assert!((m[(i, i)] / (c.c1 * b) - 1.0).abs() < 0.05);
        }
        let swept = hessian_lower_sweep(&data, &theta, &h, 0.0, 0, &mut SeededRng::new(16).stream());
        assert!((swept - min_eigenvalue(&m)).abs() < 1e-10);
    }

    #[test]
    fn hessian_sweep_sampled_matches_materialized() {
        let d = 3;
        let theta = ModelParams::from_direction(&unit_vector(d, 0), 3.0).unwrap();
        let h = StructuredSpectralMatrix::from_theta_star(&theta).unwrap();
        let spec = gaussian(d);
        let streamed = hessian_lower_sweep_sampled(&spec, &theta, &h, 0.05, 5000, 10, &mut SeededRng::new(17).stream()).unwrap();
        // same draw order: directions, then column-major chunks
        let mut rng = SeededRng::new(17).stream();
        let thetas = sphere_points(&theta, &h, 0.05, 10, &mut rng);
        let mut rows = vec![vec![0.0; d]; 5000];
        let mut start = 0;
        while start < 5000 {
            let len = CHUNK.min(5000 - start);
            let mut buf = vec![0.0; len * d];
            spec.kind.fill(&mut buf, &mut rng);
            for r in 0..len {
                for j in 0..d {
                    rows[start + r][j] = buf[j * len + r];
                }
            }
            start += len;
        }
        let data = Dataset::from_rows(&rows, &vec![1.0; 5000]).unwrap();
        let direct = crate::localization::whitened_min_eigenvalues(&data, &h, thetas).into_iter().fold(f64::INFINITY, f64::min);
        assert!((streamed - direct).abs() < 1e-12);
    }

    #[test]
    fn hessian_sweep_monotone_in_radius() {
        let d = 3;
        let theta = ModelParams::from_direction(&unit_vector(d, 0), 4.0).unwrap();
        let h = StructuredSpectralMatrix::from_theta_star(&theta).unwrap();
        let data = sample_dataset(&gaussian(d), &LabelLaw::well_specified(theta.clone()), 20_000, &mut SeededRng::new(18).stream()).unwrap();
        // nested direction sets: same unit directions scaled by radius
        let mut prev = f64::INFINITY;
        for radius in [0.0, 0.1, 0.3, 0.6] {
            let v = hessian_lower_sweep(&data, &theta, &h, radius, 40, &mut SeededRng::new(19).stream());
            assert!(v <= prev + 1e-12, "{radius}: {v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn rademacher_canonical_hessian_collapses_with_signal() {
        let d = 4;
        let n = 50_000;
        let mut last_rad = f64::INFINITY;
        for (k, b) in [4.0, 8.0, 16.0].into_iter().enumerate() {
            let theta = ModelParams::from_direction(&unit_vector(d, 0), b).unwrap();
            let h = StructuredSpectralMatrix::from_theta_star(&theta).unwrap();
            let rad = hessian_lower_sweep_sampled(&rademacher(d), &theta, &h, 0.0, n, 0, &mut SeededRng::with_path(20, k as u64, 0).stream()).unwrap();
            let gau = hessian_lower_sweep_sampled(&gaussian(d), &theta, &h, 0.0, n, 0, &mut SeededRng::with_path(21, k as u64, 0).stream()).unwrap();
            assert!(rad < last_rad);
            assert!(rad < 0.5 * gau, "B={b}: {rad} vs {gau}");
            last_rad = rad;
        }
        assert!(last_rad < 1e-2);
    }
}
