//! Dense two-phase simplex with Bland's rule.
//!
//! Problems here are tiny (a handful of free variables, a few dozen rows), so
//! the tableau is a plain row-major `Vec<f64>` and every pivot touches all of it.
//! After the optimal basis is found the basic solution is recomputed from the
//! original data with an LU solve, which removes most pivoting round-off.

use crate::error::{numeric, Result};
use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize, // excluding rhs
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, p: usize, q: usize, cost: &mut [f64]) {
        let w = self.cols + 1;
        let piv = self.at(p, q);
        for j in 0..w {
            self.data[p * w + j] /= piv;
        }
        let prow: Vec<f64> = self.data[p * w..(p + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == p {
                continue;
            }
            let f = self.data[i * w + q];
            if f != 0.0 {
                for j in 0..w {
                    self.data[i * w + j] -= f * prow[j];
                }
            }
        }
        let f = cost[q];
        if f != 0.0 {
            for j in 0..w {
                cost[j] -= f * prow[j];
            }
        }
        self.basis[p] = q;
    }

    /// Runs simplex iterations maximising the objective encoded in `cost`
    /// (reduced costs, last entry = -objective). Columns with `allowed[j] == false`
    /// never enter. Returns `false` when unbounded.
    fn run(&mut self, cost: &mut [f64], allowed: &[bool]) -> Result<bool> {
        let max_iter = 50 * (self.rows + self.cols) + 100;
        for _ in 0..max_iter {
            // Bland: lowest-index improving column
            let Some(q) = (0..self.cols).find(|&j| allowed[j] && cost[j] > PIVOT_EPS) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    }
                }
            }
            match best {
                None => return Ok(false),
                Some((p, _)) => self.pivot(p, q, cost),
            }
        }
        numeric("simplex iteration limit reached")
    }
}

/// Maximises `c . x` subject to `rows[i] . x <= b[i]` over free `x`.
pub fn maximize(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let n = c.len();
    let m = rows.len();
    if m == 0 {
        return Ok(if c.iter().all(|&v| v == 0.0) {
            LpOutcome::Optimal { x: vec![0.0; n], value: 0.0 }
        } else {
            LpOutcome::Unbounded
        });
    }
    // columns: x+ (n) | x- (n) | slack (m) | artificial (k)
    let neg: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let k = neg.len();
    let cols = 2 * n + m + k;
    let w = cols + 1;
    let mut data = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (t, &i) in neg.iter().enumerate() {
        art_of_row[i] = t;
    }
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            data[i * w + j] = sign * rows[i][j];
            data[i * w + n + j] = -sign * rows[i][j];
        }
        data[i * w + 2 * n + i] = sign;
        data[i * w + cols] = sign * b[i];
        if art_of_row[i] != usize::MAX {
            let a = 2 * n + m + art_of_row[i];
            data[i * w + a] = 1.0;
            basis[i] = a;
        } else {
            basis[i] = 2 * n + i;
        }
    }
    let mut tab = Tableau { rows: m, cols, data, basis };
    let is_art = |j: usize| j >= 2 * n + m;

    if k > 0 {
        let mut cost = vec![0.0; w];
        for i in 0..m {
            if is_art(tab.basis[i]) {
                for j in 0..w {
                    if !is_art(j) || j == cols {
                        cost[j] += tab.at(i, j);
                    }
                }
            }
        }
        let allowed = vec![true; cols];
        tab.run(&mut cost, &allowed)?;
        // cost[cols] = -value = sum of artificials
        if cost[cols] > FEAS_EPS * (1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Ok(LpOutcome::Infeasible);
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if is_art(tab.basis[i]) {
                if let Some(q) = (0..2 * n + m).find(|&j| tab.at(i, j).abs() > 1e-9) {
                    let mut dummy = vec![0.0; w];
                    tab.pivot(i, q, &mut dummy);
                }
            }
        }
    }

    let col_cost = |j: usize| -> f64 {
        if j < n {
            c[j]
        } else if j < 2 * n {
            -c[j - n]
        } else {
            0.0
        }
    };
    let mut cost = vec![0.0; w];
    for (j, cj) in cost.iter_mut().enumerate().take(cols) {
        *cj = col_cost(j);
    }
    for i in 0..m {
        let cb = col_cost(tab.basis[i]);
        if cb != 0.0 {
            for j in 0..w {
                cost[j] -= cb * tab.at(i, j);
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art(j)).collect();
    if !tab.run(&mut cost, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut xs = vec![0.0; cols];
    for i in 0..m {
        xs[tab.basis[i]] = tab.rhs(i);
    }
    refine_basic_solution(&tab, rows, b, n, &mut xs);
    let x: Vec<f64> = (0..n).map(|j| xs[j] - xs[n + j]).collect();
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, value })
}

/// Re-solves B x_B = b against the original (unpivoted) standard-form columns.
fn refine_basic_solution(tab: &Tableau, rows: &[Vec<f64>], b: &[f64], n: usize, xs: &mut [f64]) {
    let m = rows.len();
    if tab.basis.iter().any(|&j| j >= 2 * n + m) {
        return;
    }
    let column = |j: usize, i: usize| -> f64 {
        if j < n {
            rows[i][j]
        } else if j < 2 * n {
            -rows[i][j - n]
        } else if j - 2 * n == i {
            1.0
        } else {
            0.0
        }
    };
    let bm = DMatrix::from_fn(m, m, |i, k| column(tab.basis[k], i));
    let Some(sol) = bm.lu().solve(&DVector::from_column_slice(b)) else {
        return;
    };
    if sol.iter().all(|v| v.is_finite() && *v >= -1e-9) {
        for (k, &j) in tab.basis.iter().enumerate() {
            xs[j] = sol[k].max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_box() {
        // max x + y s.t. x <= 1, y <= 2, -x <= 0, -y <= 0
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let out = maximize(&[1.0, 1.0], &rows, &[1.0, 2.0, 0.0, 0.0]).unwrap();
        let (x, v) = out.optimal().unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn needs_phase_one() {
        // x >= 2 (i.e. -x <= -2), x <= 5, maximise -x  => x = 2
        let rows = vec![vec![-1.0], vec![1.0]];
        let out = maximize(&[-1.0], &rows, &[-2.0, 5.0]).unwrap();
        let (x, v) = out.optimal().unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let rows = vec![vec![1.0], vec![-1.0]];
        assert_eq!(maximize(&[1.0], &rows, &[1.0, -2.0]).unwrap(), LpOutcome::Infeasible);
        let rows = vec![vec![-1.0]];
        assert_eq!(maximize(&[1.0], &rows, &[0.0]).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // many constraints through the optimum (1,1)
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for k in 0..12 {
            let t = k as f64 / 11.0;
            rows.push(vec![t, 1.0 - t]);
            b.push(1.0);
        }
        rows.push(vec![-1.0, 0.0]);
        b.push(0.0);
        rows.push(vec![0.0, -1.0]);
        b.push(0.0);
        let out = maximize(&[1.0, 1.0], &rows, &b).unwrap();
        let (_, v) = out.optimal().unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }
}
