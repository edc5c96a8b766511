//! Dense two-phase tableau simplex. Entering columns are priced by the most
//! negative reduced cost, falling back to Bland's rule (smallest index)
//! after a run of degenerate pivots, which rules out cycling.
//!
//! Solves `min cᵀx  s.t.  Mx = b, x ≥ 0`. Artificial columns stay in the
//! tableau (they are never allowed to re-enter) so that dual values can be
//! read off their reduced costs in either phase.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (meaningful when `Optimal`).
    pub x: Vec<f64>,
    pub objective: f64,
    /// `Optimal`: duals `y` with `Mᵀy ≤ c`. `Infeasible`: Farkas ray with
    /// `Mᵀy ≤ 0` and `bᵀy > 0`.
    pub duals: Vec<f64>,
    /// Optimal phase-1 value, `min Σ artificials`.
    pub infeasibility: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    /// Smallest-index entering and leaving variables throughout.
    Bland,
    /// Most negative reduced cost; Bland's rule while degenerate pivots
    /// keep the objective stalled.
    DantzigWithBlandFallback,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Pivot and reduced-cost threshold.
    pub eps: f64,
    /// Phase-1 value above `feas_tol·(1 + ‖b‖₁)` means infeasible.
    pub feas_tol: f64,
    pub max_pivots: usize,
    pub pricing: Pricing,
}

/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { eps: 1e-11, feas_tol: 1e-9, max_pivots: 1_000_000, pricing: Pricing::DantzigWithBlandFallback }
    }
}

struct Tableau {
    rows: usize,
    /// original + artificial columns
    cols: usize,
    n_orig: usize,
    width: usize,
    /// `rows` constraint rows then the objective row; last column is the rhs
    t: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn obj_row(&self) -> usize {
        self.rows
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.t.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[pc];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[pc] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    fn entering(&self, bland: bool, eps: f64) -> Option<usize> {
        let orow = &self.t[self.obj_row() * self.width..][..self.n_orig];
        if bland {
            return orow.iter().position(|&v| v < -eps);
        }
        let mut best: Option<(f64, usize)> = None;
        for (c, &v) in orow.iter().enumerate() {
            if v < -eps && best.is_none_or(|(b, _)| v < b) {
                best = Some((v, c));
            }
        }
        best.map(|(_, c)| c)
    }

    /// Simplex iterations on the current objective row; `Ok(true)` optimal,
    /// `Ok(false)` unbounded.
    fn run(&mut self, opts: &SimplexOptions) -> Result<bool> {
        let mut stalled = 0usize;
        loop {
            if self.pivots > opts.max_pivots {
                return Err(crate::Error::SeparationSolver(format!("simplex exceeded {} pivots", opts.max_pivots)));
            }
            let bland = opts.pricing == Pricing::Bland || stalled >= STALL_LIMIT;
            let Some(pc) = self.entering(bland, opts.eps) else {
                return Ok(true);
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.rows {
                if !self.active[r] {
                    continue;
                }
                let a = self.at(r, pc);
                if a > opts.eps {
                    let ratio = self.rhs(r) / a;
                    best = match best {
                        None => Some((ratio, r)),
                        Some((br, brow)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[r] < self.basis[brow] {
                                Some((ratio, r))
                            } else {
                                Some((br, brow))
                            }
                        }
                    };
                }
            }
            match best {
                Some((ratio, pr)) => {
                    // a zero step leaves the objective unchanged
                    if ratio.abs() <= opts.eps {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    self.pivot(pr, pc)
                }
                None => return Ok(false),
            }
        }
    }

    fn set_objective(&mut self, costs: &[f64]) {
        let orow = self.obj_row();
        let w = self.width;
        for c in 0..w {
            self.t[orow * w + c] = costs.get(c).copied().unwrap_or(0.0);
        }
        for r in 0..self.rows {
            let cb = costs.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 && self.active[r] {
                for c in 0..w {
                    self.t[orow * w + c] -= cb * self.t[r * w + c];
                }
            }
        }
    }
}

/// `min cᵀx  s.t.  Mx = b, x ≥ 0`, with `M` row-major `rows × cols`.
pub fn solve_standard_form(
    m: &[f64],
    rows: usize,
    cols: usize,
    b: &[f64],
    c: &[f64],
    opts: &SimplexOptions,
) -> Result<LpSolution> {
    if m.len() != rows * cols || b.len() != rows || c.len() != cols {
        return Err(invalid("LP shapes disagree"));
    }
    if m.iter().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(crate::Error::NonFinite("LP data"));
    }
    let total = cols + rows;
    let width = total + 1;
    let mut t = vec![0.0; (rows + 1) * width];
    let mut sign = vec![1.0; rows];
    for r in 0..rows {
        if b[r] < 0.0 {
            sign[r] = -1.0;
        }
        for j in 0..cols {
            t[r * width + j] = sign[r] * m[r * cols + j];
        }
        t[r * width + cols + r] = 1.0;
        t[r * width + total] = sign[r] * b[r];
    }
    let mut tab = Tableau {
        rows,
        cols: total,
        n_orig: cols,
        width,
        t,
        basis: (cols..total).collect(),
        active: vec![true; rows],
        pivots: 0,
    };

    // phase 1: minimize the sum of artificials
    let mut phase1_cost = vec![0.0; total];
    phase1_cost[cols..].iter_mut().for_each(|v| *v = 1.0);
    tab.set_objective(&phase1_cost);
    tab.run(opts)?;
    let infeasibility = -tab.at(tab.obj_row(), total);
    let b_scale = 1.0 + b.iter().map(|v| v.abs()).sum::<f64>();
    // π_i = 1 − (reduced cost of artificial i), undone row flips
    let phase1_duals: Vec<f64> = (0..rows).map(|r| sign[r] * (1.0 - tab.at(tab.obj_row(), cols + r))).collect();
    if infeasibility > opts.feas_tol * b_scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; cols],
            objective: f64::NAN,
            duals: phase1_duals,
            infeasibility,
            pivots: tab.pivots,
        });
    }

    // drive artificials out of the basis; rows where that fails are redundant
    for r in 0..rows {
        if tab.basis[r] >= cols {
            match (0..cols).find(|&j| tab.at(r, j).abs() > 1e-9) {
                Some(j) => tab.pivot(r, j),
                None => tab.active[r] = false,
            }
        }
    }

    // phase 2
    let mut phase2_cost = vec![0.0; total];
    phase2_cost[..cols].copy_from_slice(c);
    tab.set_objective(&phase2_cost);
    let bounded = tab.run(opts)?;
    let mut x = vec![0.0; cols];
    for r in 0..rows {
        if tab.active[r] && tab.basis[r] < cols {
            x[tab.basis[r]] = tab.rhs(r).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    let duals = (0..rows)
        .map(|r| if tab.active[r] { -sign[r] * tab.at(tab.obj_row(), cols + r) } else { 0.0 })
        .collect();
    Ok(LpSolution {
        status: if bounded { LpStatus::Optimal } else { LpStatus::Unbounded },
        x,
        objective,
        duals,
        infeasibility,
        pivots: tab.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(m: &[&[f64]], b: &[f64], c: &[f64]) -> LpSolution {
        let rows = m.len();
        let cols = c.len();
        let flat: Vec<f64> = m.iter().flat_map(|r| r.iter().copied()).collect();
        solve_standard_form(&flat, rows, cols, b, c, &SimplexOptions::default()).unwrap()
    }

    #[test]
    fn small_optimum_with_slacks() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  (2, 6), value 36
        let s = solve(
            &[&[1.0, 0.0, 1.0, 0.0, 0.0], &[0.0, 2.0, 0.0, 1.0, 0.0], &[3.0, 2.0, 0.0, 0.0, 1.0]],
            &[4.0, 12.0, 18.0],
            &[-3.0, -5.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-10);
        assert!((s.x[0] - 2.0).abs() < 1e-10 && (s.x[1] - 6.0).abs() < 1e-10);
        // strong duality
        let dual_obj: f64 = s.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual_obj - s.objective).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_and_equalities() {
        // x1 + x2 = 1, x1 − x2 = −0.5 → x = (0.25, 0.75); min x1 + 2x2 = 1.75
        let s = solve(&[&[1.0, 1.0], &[1.0, -1.0]], &[1.0, -0.5], &[1.0, 2.0]);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.75).abs() < 1e-12);
        let dual_obj = s.duals[0] * 1.0 + s.duals[1] * -0.5;
        assert!((dual_obj - 1.75).abs() < 1e-10);
    }

    #[test]
    fn infeasible_gives_farkas_ray() {
        // x1 + x2 = −1 with x ≥ 0
        let s = solve(&[&[1.0, 1.0], &[1.0, -1.0]], &[-1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(s.status, LpStatus::Infeasible);
        let y = &s.duals;
        let mty = [y[0] + y[1], y[0] - y[1]];
        assert!(mty.iter().all(|&v| v <= 1e-12));
        assert!(-y[0] > 0.0);
    }

    #[test]
    fn unbounded_detected() {
        // min −x1 s.t. x1 − x2 = 0
        let s = solve(&[&[1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let s = solve(&[&[1.0, 1.0], &[2.0, 2.0]], &[1.0, 2.0], &[1.0, 3.0]);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example in standard form
        let s = solve(
            &[
                &[0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0],
                &[0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            &[0.0, 0.0, 1.0],
            &[-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-12);
        // Beale's instance cycles under pure Dantzig pricing; a stall limit of
        // fifty still hands over to Bland's rule in time
        let m = [0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0, 0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let c = [-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0];
        let bland = SimplexOptions { pricing: Pricing::Bland, ..Default::default() };
        let s = solve_standard_form(&m, 3, 7, &[0.0, 0.0, 1.0], &c, &bland).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-12);
    }

    #[test]
    fn pricing_rules_agree_on_random_programs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (rows, cols) = (rng.random_range(1..6), rng.random_range(1..9));
            let m: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-3i32..4) as f64).collect();
            let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-3i32..4) as f64).collect();
            let c: Vec<f64> = (0..cols).map(|_| rng.random_range(-2i32..4) as f64).collect();
            let fast = solve_standard_form(&m, rows, cols, &b, &c, &SimplexOptions::default()).unwrap();
            let bland = SimplexOptions { pricing: Pricing::Bland, ..Default::default() };
            let slow = solve_standard_form(&m, rows, cols, &b, &c, &bland).unwrap();
            assert_eq!(fast.status, slow.status);
            if fast.status == LpStatus::Optimal {
                assert!((fast.objective - slow.objective).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shape_errors() {
        assert!(solve_standard_form(&[1.0], 1, 2, &[1.0], &[0.0, 0.0], &SimplexOptions::default()).is_err());
    }
}
