//! Empirical Hessians `(1/n) Σ σ'(⟨θ,Xᵢ⟩) XᵢXᵢᵀ` for many `θ` at once.
//!
//! Rows are fed in column-major chunks; each chunk's pairwise products
//! `x_i x_j` are formed once and shared by every `θ`.

use nalgebra::DMatrix;

use crate::fastmath::sigmoid_prime_fast;

pub(crate) const CHUNK: usize = 1024;

pub(crate) struct HessianBank {
    d: usize,
    thetas: Vec<Vec<f64>>,
    /// per θ, upper triangle in row order
    acc: Vec<f64>,
    rows: usize,
    products: Vec<f64>,
    s: Vec<f64>,
    w: Vec<f64>,
}

impl HessianBank {
    pub(crate) fn new(d: usize, thetas: Vec<Vec<f64>>) -> Self {
        let pairs = d * (d + 1) / 2;
        Self {
            d,
            acc: vec![0.0; thetas.len() * pairs],
            thetas,
            rows: 0,
            products: vec![0.0; pairs * CHUNK],
            s: vec![0.0; CHUNK],
            w: vec![0.0; CHUNK],
        }
    }

    /// Add `len ≤ CHUNK` rows stored column-major: column `j` is
    /// `cols[j*len .. (j+1)*len]`.
    pub(crate) fn add_chunk(&mut self, cols: &[f64], len: usize) {
        assert!(len <= CHUNK && cols.len() == self.d * len);
        #[cfg(target_arch = "x86_64")]
        {
            if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
                // SAFETY: the required CPU features were detected at runtime.
                unsafe { self.add_chunk_avx2(cols, len) };
                return;
            }
        }
        self.add_chunk_generic(cols, len);
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn add_chunk_avx2(&mut self, cols: &[f64], len: usize) {
        self.add_chunk_generic(cols, len)
    }

    #[inline(always)]
    fn add_chunk_generic(&mut self, cols: &[f64], len: usize) {
        let d = self.d;
        let pairs = d * (d + 1) / 2;
        let mut k = 0;
        for i in 0..d {
            let ci = &cols[i * len..(i + 1) * len];
            for j in i..d {
                let cj = &cols[j * len..(j + 1) * len];
                let dst = &mut self.products[k * CHUNK..k * CHUNK + len];
                for ((p, a), b) in dst.iter_mut().zip(ci).zip(cj) {
                    *p = a * b;
                }
                k += 1;
            }
        }
        for (t, theta) in self.thetas.iter().enumerate() {
            let s = &mut self.s[..len];
            s.fill(0.0);
            for (j, &tj) in theta.iter().enumerate() {
                if tj != 0.0 {
                    for (sr, x) in s.iter_mut().zip(&cols[j * len..(j + 1) * len]) {
                        *sr += tj * x;
                    }
                }
            }
            let w = &mut self.w[..len];
            for (wr, &sr) in w.iter_mut().zip(s.iter()) {
                *wr = sigmoid_prime_fast(sr);
            }
            let acc = &mut self.acc[t * pairs..(t + 1) * pairs];
            for (k, a) in acc.iter_mut().enumerate() {
                let p = &self.products[k * CHUNK..k * CHUNK + len];
                let mut lanes = [0.0f64; 8];
                let mut wc = w.chunks_exact(8);
                let mut pc = p.chunks_exact(8);
                for (wb, pb) in (&mut wc).zip(&mut pc) {
                    for l in 0..8 {
                        lanes[l] += wb[l] * pb[l];
                    }
                }
                let mut tail = 0.0;
                for (a, b) in wc.remainder().iter().zip(pc.remainder()) {
                    tail += a * b;
                }
                *a += lanes.iter().sum::<f64>() + tail;
            }
        }
        self.rows += len;
    }

    /// Averaged Hessians, one per `θ`.
    pub(crate) fn hessians(&self) -> Vec<DMatrix<f64>> {
        let d = self.d;
        let pairs = d * (d + 1) / 2;
        let n = self.rows.max(1) as f64;
        (0..self.thetas.len())
            .map(|t| {
                let acc = &self.acc[t * pairs..(t + 1) * pairs];
                let mut h = DMatrix::<f64>::zeros(d, d);
                let mut k = 0;
                for i in 0..d {
                    for j in i..d {
                        h[(i, j)] = acc[k] / n;
                        h[(j, i)] = acc[k] / n;
                        k += 1;
                    }
                }
                h
            })
            .collect()
    }
}

/// Transpose rows `start..start+len` of a row-major matrix into `out`.
pub(crate) fn column_chunk(values: &[f64], d: usize, start: usize, len: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(d * len, 0.0);
    for r in 0..len {
        let row = &values[(start + r) * d..(start + r + 1) * d];
        for (j, &v) in row.iter().enumerate() {
            out[j * len + r] = v;
        }
    }
}
