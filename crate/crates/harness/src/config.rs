use std::path::{Path, PathBuf};

use logit_core::designs::{worstcase_p_max, worstcase_signal_of_p, DesignKind, DesignSpec, LabelLaw};
use logit_core::linalg::{diffuse_unit_vector, unit_vector};
use logit_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawFamily {
    /// Logit labels; the signal grid holds `‖θ*‖`.
    WellSpecified,
    /// Sign labels flipped with probability `p`; the signal grid holds `p`.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `e₁`
    #[default]
    Canonical,
    /// `(1, …, 1)/√d`
    Diffuse,
}

impl Direction {
    pub fn vector(self, d: usize) -> Vec<f64> {
        match self {
            Direction::Canonical => unit_vector(d, 0),
            Direction::Diffuse => diffuse_unit_vector(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizes {
    Absolute(Vec<usize>),
    /// Multiples of `B·d`, rounded up.
    PerSignalDimension(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: DesignKind,
    pub law: LawFamily,
    #[serde(default)]
    pub direction: Direction,
    pub d: Vec<usize>,
    pub signal: Vec<f64>,
    pub n: SampleSizes,
    #[serde(default = "default_t")]
    pub t: f64,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Monte Carlo size for risks without a quadrature evaluator.
    #[serde(default = "default_risk_mc")]
    pub risk_mc: usize,
}

fn default_t() -> f64 {
    1.0
}

fn default_risk_mc() -> usize {
    200_000
}

/// One point of the `d × signal × n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub d: usize,
    /// `‖θ*‖` or `p`, as in the config.
    pub signal: f64,
    /// `max{e, ‖θ*‖}`, or the calibrated norm for worst-case labels.
    pub b: f64,
    pub n: usize,
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d.is_empty() || self.signal.is_empty() {
            return Err(config_err("d and signal grids must be nonempty"));
        }
        match &self.n {
            SampleSizes::Absolute(v) if v.is_empty() || v.contains(&0) => return Err(config_err("n grid must be nonempty with n >= 1")),
            SampleSizes::PerSignalDimension(v) if v.is_empty() || v.iter().any(|m| !(*m > 0.0)) => {
                return Err(config_err("n multiples must be nonempty and positive"))
            }
            _ => {}
        }
        if self.replicates == 0 {
            return Err(config_err("replicates must be at least 1"));
        }
        if self.d.contains(&0) {
            return Err(config_err("dimensions must be positive"));
        }
        if !(self.t >= 0.0) {
            return Err(config_err("t must be nonnegative"));
        }
        for &s in &self.signal {
            match self.law {
                LawFamily::WellSpecified if !(s >= 0.0 && s.is_finite()) => {
                    return Err(config_err(format!("signal norm must be finite and nonnegative, got {s}")))
                }
                LawFamily::WorstCase if !(s > 0.0 && s < worstcase_p_max()) => {
                    return Err(config_err(format!("flip probability must lie in (0, e^-2/2), got {s}")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn signal_strength(&self, signal: f64) -> Result<f64> {
        Ok(match self.law {
            LawFamily::WellSpecified => logit_core::signal_strength(signal),
            LawFamily::WorstCase => worstcase_signal_of_p(signal)?,
        })
    }

    /// Cells in `d`-major, then signal, then `n` order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        let mut out = Vec::new();
        for &d in &self.d {
            for &signal in &self.signal {
                let b = self.signal_strength(signal)?;
                let ns: Vec<usize> = match &self.n {
                    SampleSizes::Absolute(v) => v.clone(),
                    SampleSizes::PerSignalDimension(m) => m.iter().map(|k| (k * b * d as f64).ceil().max(1.0) as usize).collect(),
                };
                for n in ns {
                    out.push(Cell { index: out.len(), d, signal, b, n });
                }
            }
        }
        Ok(out)
    }

    pub fn design_spec(&self, d: usize) -> Result<DesignSpec> {
        Ok(DesignSpec::new(self.design.clone(), d)?)
    }

    /// Label law of a cell, with `θ* = ‖θ*‖·u*` or `(u*, p)`.
    pub fn label_law(&self, cell: &Cell) -> Result<LabelLaw> {
        let u = self.direction.vector(cell.d);
        Ok(match self.law {
            LawFamily::WellSpecified => LabelLaw::well_specified(ModelParams::from_direction(&u, cell.signal)?),
            LawFamily::WorstCase => LabelLaw::worst_case(u, cell.signal)?,
        })
    }

    /// Population minimizer of the cell: `θ*`, or `B·u*` under worst-case
    /// labels.
    pub fn population_minimizer(&self, cell: &Cell) -> Vec<f64> {
        let u = self.direction.vector(cell.d);
        let scale = match self.law {
            LawFamily::WellSpecified => cell.signal,
            LawFamily::WorstCase => cell.b,
        };
        u.iter().map(|x| x * scale).collect()
    }
}
