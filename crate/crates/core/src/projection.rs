//! Weighted m-th order projection body, its polar, the variational formula
//! check and the linear covariance check.

use crate::covariogram::{covariogram, ray_breakpoints, diffbody_radial, MDirection};
use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::measure::{transform_measure, weighted_surface_measure, FacetMeasure, WeightedMeasure};
use crate::polytope::{LinearMap, Polytope, StarBodyFn};
use crate::verify::{DirectionRow, VerifyReport};
use std::f64::consts::PI;
use std::sync::Arc;

/// Default forward-difference steps of the variational check.
pub const VARIATIONAL_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// `Π^m_μ K` given functionally through the facet atoms of `S^μ_K`.
#[derive(Debug, Clone)]
pub struct ProjectionBody {
    pub n: usize,
    pub m: usize,
    pub surface: Arc<FacetMeasure>,
}

impl ProjectionBody {
    pub fn new(k: &Polytope, mu: &WeightedMeasure, m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("order m must be positive");
        }
        Ok(ProjectionBody { n: k.dim(), m, surface: Arc::new(weighted_surface_measure(k, mu)?) })
    }

    /// `Σ_F w_F max_i <x_i, u_F>_-`.
    pub fn support(&self, xbar: &[Vec<f64>]) -> f64 {
        self.surface
            .atoms
            .iter()
            .map(|(u, w)| {
                let neg = xbar.iter().map(|x| -dot(x, u)).fold(0.0, f64::max);
                w * neg
            })
            .sum()
    }

    /// Support at a point of R^{nm} stored flat.
    pub fn support_flat(&self, v: &[f64]) -> f64 {
        let blocks: Vec<Vec<f64>> = v.chunks(self.n).map(|c| c.to_vec()).collect();
        self.support(&blocks)
    }

    /// `ρ_{Π^{∘,m}_μ K}(θ̄) = 1 / h_{Π^m_μ K}(θ̄)`.
    pub fn polar_radial(&self, theta: &MDirection) -> Result<f64> {
        if theta.n() != self.n {
            return invalid("direction block length differs from the body dimension");
        }
        let h = self.support(theta.blocks());
        if !(h > 1e-300) {
            return Err(Error::DegenerateMeasure(format!(
                "projection body support vanishes at {:?}",
                theta.flat()
            )));
        }
        Ok(1.0 / h)
    }

    /// `c · Π^{∘,m}_μ K` as a star body in R^{nm}; infinite radii become NaN.
    pub fn polar_star_body(&self, c: f64) -> StarBodyFn {
        let me = self.clone();
        StarBodyFn::new(self.n * self.m, move |u| {
            let h = me.support_flat(u);
            if h > 1e-300 {
                c / h
            } else {
                f64::NAN
            }
        })
    }

    /// Angles in [0, 2π) where the planar support function changes its linear
    /// piece (m = 1, n = 2): every facet normal rotated by ±π/2.
    pub fn polar_breaks_2d(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (u, _) in &self.surface.atoms {
            let a = u[1].atan2(u[0]);
            out.push((a + 0.5 * PI).rem_euclid(2.0 * PI));
            out.push((a - 0.5 * PI).rem_euclid(2.0 * PI));
        }
        out
    }
}

pub fn projection_support(k: &Polytope, mu: &WeightedMeasure, xbar: &[Vec<f64>]) -> Result<f64> {
    if xbar.iter().any(|x| x.len() != k.dim()) {
        return invalid("shift dimension mismatch");
    }
    Ok(ProjectionBody::new(k, mu, xbar.len().max(1))?.support(xbar))
}

pub fn polar_projection_radial(k: &Polytope, mu: &WeightedMeasure, theta: &MDirection) -> Result<f64> {
    ProjectionBody::new(k, mu, theta.m())?.polar_radial(theta)
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)` (Neville).
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// `d/dr g(rθ̄)` at `0⁺` from forward differences extrapolated to zero step.
/// Steps are shrunk so the largest stays inside the first smooth piece of the
/// ray profile. Returns the derivative and the steps actually used.
pub fn ray_derivative_at_zero(
    k: &Polytope,
    mu: &WeightedMeasure,
    theta: &MDirection,
    steps: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if steps.is_empty() || steps.iter().any(|h| !(*h > 0.0)) {
        return invalid("steps must be positive");
    }
    let rho_d = diffbody_radial(k, theta)?;
    let first = ray_breakpoints(k, theta, rho_d).first().copied().unwrap_or(rho_d);
    let hmax = steps.iter().cloned().fold(0.0, f64::max);
    let shrink = if hmax > 0.5 * first { 0.5 * first / hmax } else { 1.0 };
    let hs: Vec<f64> = steps.iter().map(|h| h * shrink).collect();
    let g0 = covariogram(k, mu, &theta.scaled(0.0))?.value;
    let ds = hs
        .iter()
        .map(|&h| Ok((covariogram(k, mu, &theta.scaled(h))?.value - g0) / h))
        .collect::<Result<Vec<_>>>()?;
    Ok((neville_at_zero(&hs, &ds), hs))
}

/// `d/dr g_{μ,m}(K, rθ̄)|_{0⁺} = -h_{Π^m_μ K}(θ̄)`; pass iff relative error <= 1e-3.
pub fn variational_check(
    k: &Polytope,
    mu: &WeightedMeasure,
    theta: &MDirection,
    steps: &[f64],
) -> Result<VerifyReport> {
    let (deriv, used) = ray_derivative_at_zero(k, mu, theta, steps)?;
    let h = ProjectionBody::new(k, mu, theta.m())?.support(theta.blocks());
    let err = (deriv + h).abs() / h.abs().max(1e-300);
    let mut r = VerifyReport::new("variational");
    r.lhs = deriv;
    r.rhs = -h;
    r.ratio = -deriv / h;
    r.bound = 1.0;
    r.tolerance = 1e-3;
    r.margin = r.tolerance - err;
    r.pass = err <= r.tolerance;
    r.samples = 1;
    r.rows.push(DirectionRow {
        index: 0,
        direction: theta.flat(),
        values: vec![("derivative".into(), deriv), ("neg_support".into(), -h), ("rel_error".into(), err)],
        pass: r.pass,
    });
    Ok(r.note(format!("forward differences at steps {used:?}, Neville extrapolation to 0")))
}

/// `h_{Π^m_μ(TK)}(θ̄) = |det T| h_{Π^m_{μ^T} K}(T̄^{-1} θ̄)` at every direction.
pub fn linear_covariance_check(
    k: &Polytope,
    mu: &WeightedMeasure,
    t: &LinearMap,
    dirs: &[MDirection],
) -> Result<VerifyReport> {
    if t.dim() != k.dim() {
        return invalid("linear map dimension mismatch");
    }
    if dirs.is_empty() {
        return invalid("need at least one direction");
    }
    let m = dirs[0].m();
    let tk = k.apply_linear(t)?;
    let left = ProjectionBody::new(&tk, mu, m)?;
    let right = ProjectionBody::new(k, &transform_measure(mu, t)?, m)?;
    let tol = if mu.is_constant() && !mu.is_stochastic() { 1e-6 } else { 1e-3 };
    let mut r = VerifyReport::new("linear_covariance");
    let mut worst: f64 = 0.0;
    let (mut lsum, mut rsum) = (0.0, 0.0);
    for (i, th) in dirs.iter().enumerate() {
        if th.m() != m || th.n() != k.dim() {
            return invalid("directions must share the same (m, n)");
        }
        let lhs = left.support(th.blocks());
        let pre: Vec<Vec<f64>> = th.blocks().iter().map(|b| t.apply_inverse(b)).collect();
        let rhs = t.det_abs() * right.support(&pre);
        let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
        worst = worst.max(err);
        lsum += lhs;
        rsum += rhs;
        r.rows.push(DirectionRow {
            index: i,
            direction: th.flat(),
            values: vec![("lhs".into(), lhs), ("rhs".into(), rhs), ("rel_error".into(), err)],
            pass: err <= tol,
        });
    }
    r.lhs = lsum;
    r.rhs = rsum;
    r.ratio = lsum / rsum;
    r.bound = 1.0;
    r.tolerance = tol;
    r.margin = tol - worst;
    r.pass = worst <= tol;
    r.samples = dirs.len();
    Ok(r.note(format!("max relative error {worst:e}")))
}
