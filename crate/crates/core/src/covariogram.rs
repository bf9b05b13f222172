//! m-th order covariogram, difference-body radial function and roof function.

use crate::error::{invalid, numeric, Result};
use crate::linalg::{dot, norm, scale, solve};
use crate::lp::{maximize, LpOutcome};
use crate::measure::{integrate_over_polytope, WeightedMeasure};
use crate::polytope::{Estimate, Polytope, StarBodyFn, GEOM_TOL};
use crate::quadrature::gauss_legendre;
use itertools::Itertools;
use serde::Serialize;

/// A point of S^{nm-1} stored as m blocks of length n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MDirection {
    blocks: Vec<Vec<f64>>,
}

impl MDirection {
    /// Accepts blocks whose squared norms sum to 1 within 1e-12.
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self::validate_shape(&blocks)?;
        if (d - 1.0).abs() > 1e-12 {
            return invalid("direction blocks must have unit total norm");
        }
        Ok(MDirection { blocks })
    }

    /// Rescales arbitrary nonzero blocks onto the sphere.
    pub fn normalized(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self::validate_shape(&blocks)?;
        if !(d > 0.0) {
            return invalid("direction must be nonzero");
        }
        let s = 1.0 / d.sqrt();
        Ok(MDirection { blocks: blocks.iter().map(|b| scale(b, s)).collect() })
    }

    /// Splits a unit vector of R^{nm} into m blocks of length n.
    pub fn from_flat(n: usize, v: &[f64]) -> Result<Self> {
        if n == 0 || v.is_empty() || !v.len().is_multiple_of(n) {
            return invalid("flat direction length must be a positive multiple of n");
        }
        Self::normalized(v.chunks(n).map(|c| c.to_vec()).collect())
    }

    fn validate_shape(blocks: &[Vec<f64>]) -> Result<f64> {
        if blocks.is_empty() || blocks[0].is_empty() || blocks.iter().any(|b| b.len() != blocks[0].len()) {
            return invalid("direction needs m >= 1 blocks of equal positive length");
        }
        if blocks.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("direction entries must be finite");
        }
        Ok(blocks.iter().map(|b| dot(b, b)).sum())
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn flat(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    /// `r θ̄` as m shift vectors.
    pub fn scaled(&self, r: f64) -> Vec<Vec<f64>> {
        self.blocks.iter().map(|b| scale(b, r)).collect()
    }
}

/// `g_{μ,m}(K, x̄) = μ(K ∩ ⋂ (x_i + K))`.
pub fn covariogram(k: &Polytope, mu: &WeightedMeasure, xbar: &[Vec<f64>]) -> Result<Estimate> {
    if mu.dim() != k.dim() {
        return invalid("measure and body dimensions differ");
    }
    match k.intersect_translates(xbar)? {
        Some(p) => integrate_over_polytope(mu, &p),
        None => Ok(Estimate { value: 0.0, stderr: None }),
    }
}

/// `ρ_{D^m K}(θ̄)`: max r with y ∈ K and y - rθ_i ∈ K for all i (one LP in (y, r)).
pub fn diffbody_radial(k: &Polytope, theta: &MDirection) -> Result<f64> {
    let n = k.dim();
    if theta.n() != n {
        return invalid("direction block length differs from the body dimension");
    }
    // y = c + z with c interior keeps every right-hand side positive
    let c = k.interior_point();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for h in k.halfspaces() {
        let s = h.slack(c);
        let mut row = h.normal.clone();
        row.push(0.0);
        rows.push(row);
        rhs.push(s);
        for th in theta.blocks() {
            let mut row = h.normal.clone();
            row.push(-dot(&h.normal, th));
            rows.push(row);
            rhs.push(s);
        }
    }
    let mut obj = vec![0.0; n];
    obj.push(1.0);
    match maximize(&obj, &rows, &rhs)? {
        LpOutcome::Optimal { value, .. } if value > 0.0 => Ok(value),
        LpOutcome::Optimal { .. } => numeric("difference-body radius vanished"),
        _ => numeric("difference-body LP failed"),
    }
}

/// Roof function `max(1 - |x|/ρ_L(x/|x|), 0)`; 1 at the origin.
pub fn roof(l: &StarBodyFn, x: &[f64]) -> f64 {
    let r = norm(x);
    if r == 0.0 {
        return 1.0;
    }
    let rho = l.eval(&scale(x, 1.0 / r));
    (1.0 - r / rho).max(0.0)
}

/// Parameters in (0, ρ_D) where the combinatorial type of K ∩ ⋂(rθ_i + K)
/// can change: n+1 of the (m+1)·F moving hyperplanes become concurrent at a
/// point of the intersection. Between consecutive values `r ↦ g(rθ̄)` is
/// polynomial for constant densities and analytic for analytic ones.
pub fn ray_breakpoints(k: &Polytope, theta: &MDirection, rho_d: f64) -> Vec<f64> {
    let n = k.dim();
    // hyperplane a.x - r (a.θ_i) = b for copies i = 0 (θ_0 = 0) .. m
    let mut planes: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for h in k.halfspaces() {
        planes.push((h.normal.clone(), 0.0, h.offset));
        for th in theta.blocks() {
            planes.push((h.normal.clone(), dot(&h.normal, th), h.offset));
        }
    }
    let tol = GEOM_TOL * k.halfspaces().iter().map(|h| h.offset.abs()).fold(1.0, f64::max);
    let mut out: Vec<f64> = Vec::new();
    for subset in (0..planes.len()).combinations(n + 1) {
        let rows: Vec<Vec<f64>> = subset
            .iter()
            .map(|&i| {
                let mut r = planes[i].0.clone();
                r.push(-planes[i].1);
                r
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let rhs: Vec<f64> = subset.iter().map(|&i| planes[i].2).collect();
        let Some(sol) = solve(&refs, &rhs) else { continue };
        let r = sol[n];
        if !(r > 1e-12 * rho_d && r < rho_d * (1.0 - 1e-12)) {
            continue;
        }
        let x = &sol[..n];
        let feasible = planes.iter().all(|(a, c, b)| dot(a, x) - r * c <= b + tol);
        if feasible {
            out.push(r);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * rho_d);
    out
}

/// `[0, b_1, ..., ρ_D]`: the pieces on which the ray profile is smooth.
pub fn ray_pieces(k: &Polytope, theta: &MDirection, rho_d: f64) -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend(ray_breakpoints(k, theta, rho_d));
    v.push(rho_d);
    v
}

/// Tabulated ray profile `r ↦ g_{μ,m}(K, rθ̄)` on `[0, ρ_D]`.
#[derive(Debug, Clone, Serialize)]
pub struct CovariogramSlice {
    pub direction: MDirection,
    pub rho_d: f64,
    /// Gauss-Legendre nodes on [0, ρ_D] with both endpoints prepended/appended.
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Interior parameters where the profile may lose smoothness.
    pub breakpoints: Vec<f64>,
    #[serde(skip)]
    body: Polytope,
    #[serde(skip)]
    measure: WeightedMeasure,
}

impl CovariogramSlice {
    /// `g(rθ̄)`; zero beyond `ρ_D`.
    pub fn value_at(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return invalid("slice parameter must be nonnegative");
        }
        if r > self.rho_d {
            return Ok(0.0);
        }
        Ok(covariogram(&self.body, &self.measure, &self.direction.scaled(r))?.value)
    }
}

pub fn covariogram_slice(
    k: &Polytope,
    mu: &WeightedMeasure,
    theta: &MDirection,
    grid: usize,
) -> Result<CovariogramSlice> {
    if grid == 0 {
        return invalid("grid size must be positive");
    }
    let rho_d = diffbody_radial(k, theta)?;
    let rule = gauss_legendre(grid);
    let mut nodes = vec![0.0];
    nodes.extend(rule.nodes.iter().map(|x| 0.5 * rho_d * (1.0 + x)));
    nodes.push(rho_d);
    let values = nodes
        .iter()
        .map(|&r| Ok(covariogram(k, mu, &theta.scaled(r))?.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(CovariogramSlice {
        direction: theta.clone(),
        rho_d,
        nodes,
        values,
        breakpoints: ray_breakpoints(k, theta, rho_d),
        body: k.clone(),
        measure: mu.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(blocks: Vec<Vec<f64>>) -> MDirection {
        MDirection::normalized(blocks).unwrap()
    }

    #[test]
    fn square_values() {
        let sq = Polytope::cube(2);
        let leb = WeightedMeasure::lebesgue(2);
        assert!((covariogram(&sq, &leb, &[vec![0.5, 0.0]]).unwrap().value - 0.5).abs() < 1e-12);
        let g2 = covariogram(&sq, &leb, &[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap().value;
        assert!((g2 - 0.25).abs() < 1e-12);
        assert_eq!(covariogram(&sq, &leb, &[vec![0.0, 0.0]]).unwrap().value, 1.0);
    }

    #[test]
    fn difference_body_radii() {
        let sq = Polytope::cube(2);
        assert!((diffbody_radial(&sq, &dir(vec![vec![1.0, 0.0]])).unwrap() - 1.0).abs() < 1e-12);
        let tri = Polytope::simplex(2);
        let r = diffbody_radial(&tri, &dir(vec![vec![1.0, -1.0]])).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn roof_values() {
        let b = Polytope::box_shape(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let l = StarBodyFn::of_polytope(&b, &[0.0, 0.0]).unwrap();
        assert_eq!(roof(&l, &[0.0, 0.0]), 1.0);
        assert!((roof(&l, &[0.5, 0.0]) - 0.5).abs() < 1e-15);
        assert!(roof(&l, &[1.0, 0.0]).abs() < 1e-15);
    }

    #[test]
    fn slice_of_square_is_linear() {
        let sq = Polytope::cube(2);
        let s = covariogram_slice(&sq, &WeightedMeasure::lebesgue(2), &dir(vec![vec![1.0, 0.0]]), 8).unwrap();
        for (r, v) in s.nodes.iter().zip(&s.values) {
            assert!((v - (1.0 - r)).abs() < 1e-9);
        }
        assert_eq!(s.value_at(s.rho_d * (1.0 + 1e-6)).unwrap(), 0.0);
    }
}
