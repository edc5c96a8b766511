//! Design samplers and label mechanisms.
//!
//! Every design family has i.i.d. centered, unit-variance coordinates, so
//! rows are isotropic.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{invalid, Error, Result};
use crate::gaussian::std_normal_pdf;
use crate::linalg::{dot, norm};
use crate::logistic::{sigmoid, ModelParams};
use crate::quad::integrate_to_infinity;

/// Discrete coordinate law given as atoms and probabilities; must be
/// centered with unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAtoms", into = "RawAtoms")]
pub struct AtomTable {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawAtoms {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawAtoms> for AtomTable {
    type Error = Error;

    fn try_from(raw: RawAtoms) -> Result<Self> {
        AtomTable::new(raw.values, raw.probs)
    }
}

impl From<AtomTable> for RawAtoms {
    fn from(t: AtomTable) -> Self {
        RawAtoms { values: t.values, probs: t.probs }
    }
}

impl AtomTable {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(invalid("atom table needs matching, nonempty values and probabilities"));
        }
        if values.iter().chain(&probs).any(|v| !v.is_finite()) || probs.iter().any(|&p| p < 0.0) {
            return Err(invalid("atom table entries must be finite with nonnegative probabilities"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("atom probabilities sum to {total}, expected 1")));
        }
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let second: f64 = values.iter().zip(&probs).map(|(v, p)| v * v * p).sum();
        if mean.abs() > 1e-9 || (second - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("atom table must be centered with unit variance (mean {mean}, E X² {second})")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { values, probs, cumulative })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "atoms")]
pub enum DesignKind {
    Gaussian,
    Rademacher,
    IidLaplace,
    IidCentered(AtomTable),
}

impl DesignKind {
    /// One coordinate draw.
    #[inline]
    pub fn sample_coordinate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DesignKind::Gaussian => rng.sample(StandardNormal),
            DesignKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            DesignKind::IidLaplace => {
                let e: f64 = Exp1.sample(rng);
                let mag = e * std::f64::consts::FRAC_1_SQRT_2;
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            DesignKind::IidCentered(table) => table.sample(rng),
        }
    }

    /// Fill `buf` with i.i.d. coordinates.
    pub fn fill<R: Rng + ?Sized>(&self, buf: &mut [f64], rng: &mut R) {
        for v in buf {
            *v = self.sample_coordinate(rng);
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignKind::Gaussian => "gaussian",
            DesignKind::Rademacher => "rademacher",
            DesignKind::IidLaplace => "laplace",
            DesignKind::IidCentered(_) => "iid_centered",
        })
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(DesignKind::Gaussian),
            "rademacher" | "bernoulli" => Ok(DesignKind::Rademacher),
            "laplace" | "iid_laplace" => Ok(DesignKind::IidLaplace),
            other => Err(invalid(format!(
                "unknown design kind `{other}` (expected gaussian, rademacher or laplace; custom atom tables go through the config file)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub d: usize,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Empty);
        }
        Ok(Self { kind, d })
    }
}

/// `n` i.i.d. rows from the spec.
pub fn sample_design<R: Rng + ?Sized>(spec: &DesignSpec, n: usize, rng: &mut R) -> Result<DesignMatrix> {
    if n == 0 || spec.d == 0 {
        return Err(Error::Empty);
    }
    let mut values = vec![0.0; n * spec.d];
    spec.kind.fill(&mut values, rng);
    DesignMatrix::new(values, n, spec.d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum LabelLaw {
    /// `P(Y = 1 | X) = σ(⟨θ*, X⟩)`.
    WellSpecified { theta_star: ModelParams },
    /// `Y = sign⟨u*, X⟩`, flipped independently with probability `p`.
    WorstCase { u_star: Vec<f64>, p: f64 },
}

/// Upper end of the admissible flip probability, `e⁻²/2`.
pub fn worstcase_p_max() -> f64 {
    0.5 * (-2.0f64).exp()
}

impl LabelLaw {
    pub fn well_specified(theta_star: ModelParams) -> Self {
        LabelLaw::WellSpecified { theta_star }
    }

    pub fn worst_case(u_star: Vec<f64>, p: f64) -> Result<Self> {
        if !(p > 0.0 && p < worstcase_p_max()) {
            return Err(invalid(format!("flip probability must lie in (0, e^-2/2), got {p}")));
        }
        if u_star.iter().any(|v| !v.is_finite()) || (norm(&u_star) - 1.0).abs() > 1e-12 {
            return Err(invalid("u_star must be a finite unit vector"));
        }
        Ok(LabelLaw::WorstCase { u_star, p })
    }

    pub fn dim(&self) -> usize {
        match self {
            LabelLaw::WellSpecified { theta_star } => theta_star.dim(),
            LabelLaw::WorstCase { u_star, .. } => u_star.len(),
        }
    }

    /// One label given the covariate row.
    pub fn sample_label<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        match self {
            LabelLaw::WellSpecified { theta_star } => {
                if rng.random::<f64>() < sigmoid(dot(theta_star, x)) {
                    1.0
                } else {
                    -1.0
                }
            }
            LabelLaw::WorstCase { u_star, p } => {
                let s = dot(u_star, x);
                // ties: fair coin
                let coin = rng.random::<bool>();
                let base = if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else if coin {
                    1.0
                } else {
                    -1.0
                };
                if rng.random::<f64>() < *p {
                    -base
                } else {
                    base
                }
            }
        }
    }
}

pub fn sample_labels<R: Rng + ?Sized>(x: &DesignMatrix, law: &LabelLaw, rng: &mut R) -> Result<Vec<f64>> {
    if law.dim() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.d(), found: law.dim() });
    }
    Ok(x.rows().map(|row| law.sample_label(row, rng)).collect())
}

/// Design then labels from one generator.
pub fn sample_dataset<R: Rng + ?Sized>(
    spec: &DesignSpec,
    law: &LabelLaw,
    n: usize,
    rng: &mut R,
) -> Result<crate::data::Dataset> {
    let x = sample_design(spec, n, rng)?;
    let y = sample_labels(&x, law, rng)?;
    crate::data::Dataset::new(x, y)
}

/// `√(π/2)·E[|G| σ(−B|G|)]`, the sign-error probability implied by signal `B`
/// on a Gaussian design.
pub fn worstcase_p_of_signal(b: f64) -> f64 {
    let integral = integrate_to_infinity(|x| x * sigmoid(-b * x) * std_normal_pdf(x), 0.0, 1e-16, 1e-13);
    (std::f64::consts::PI / 2.0).sqrt() * 2.0 * integral
}

/// Signal `B = ‖θ*‖` solving `p = √(π/2)·E[|G| σ(−B|G|)]`, by bisection on
/// `log B`.
pub fn worstcase_signal_of_p(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < worstcase_p_max()) {
        return Err(invalid(format!("flip probability must lie in (0, e^-2/2), got {p}")));
    }
    let (mut lo, mut hi) = (1e-3f64.ln(), 1e4f64.ln());
    if worstcase_p_of_signal(hi.exp()) > p {
        return Err(invalid(format!("p = {p} is below the bracketed range")));
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if worstcase_p_of_signal(mid.exp()) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
