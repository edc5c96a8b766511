//! Design matrices and labelled datasets, with CSV import/export.
//!
//! CSV layout: header `x1,...,xd,y`, one row per observation, `y ∈ {-1, 1}`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major `n × d` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl DesignMatrix {
    pub fn new(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Empty);
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        Ok(Self { values, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        Self::new(values, rows.len(), d)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `X v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows().map(|r| crate::linalg::dot(r, v)).collect()
    }
}

/// Immutable sample `(X_i, Y_i)`, labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DesignMatrix,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: DesignMatrix, y: Vec<f64>) -> Result<Self> {
        if y.len() != x.n() {
            return Err(Error::DimensionMismatch { expected: x.n(), found: y.len() });
        }
        if let Some(&bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidLabel(bad));
        }
        Ok(Self { x, y })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        Self::new(DesignMatrix::from_rows(rows)?, y.to_vec())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.n()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.x.d()
    }

    pub fn x(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        self.y[i]
    }

    /// Iterator over `(X_i, Y_i)`.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.x.rows().zip(self.y.iter().copied())
    }

    /// Signed rows `Y_i X_i`, row-major.
    pub fn signed_rows(&self) -> Vec<f64> {
        self.iter().flat_map(|(x, y)| x.iter().map(move |v| y * v)).collect()
    }

    /// Margins `Y_i ⟨θ, X_i⟩`.
    pub fn margins(&self, theta: &[f64]) -> Vec<f64> {
        self.iter().map(|(x, y)| y * crate::linalg::dot(x, theta)).collect()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv_from(std::fs::File::open(path)?)
    }

    pub fn read_csv_from<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let d = headers.len().checked_sub(1).filter(|&d| d > 0).ok_or(Error::Empty)?;
        for (j, h) in headers.iter().take(d).enumerate() {
            if h != format!("x{}", j + 1) {
                return Err(Error::InvalidParameter(format!("unexpected CSV column `{h}`, expected `x{}`", j + 1)));
            }
        }
        if &headers[d] != "y" {
            return Err(Error::InvalidParameter(format!("last CSV column must be `y`, found `{}`", &headers[d])));
        }
        let mut values = Vec::new();
        let mut y = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(Error::DimensionMismatch { expected: d + 1, found: rec.len() });
            }
            for field in rec.iter().take(d) {
                values.push(parse_f64(field)?);
            }
            y.push(parse_f64(&rec[d])?);
        }
        let n = y.len();
        Self::new(DesignMatrix::new(values, n, d)?, y)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.d()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        wtr.write_record(&header)?;
        for (x, y) in self.iter() {
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            rec.push(if y > 0.0 { "1".into() } else { "-1".into() });
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse `{s}` as a number")))
}
