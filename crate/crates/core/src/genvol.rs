//! General dual volumes and the two chord-integral inequalities.
//!
//! Ray integrals are split at the breakpoints a [`ConcaveRayFn`] reports; the
//! first piece carries the kernel factor `r^α` as a Gauss-Jacobi weight.

use crate::covariogram::MDirection;
use crate::error::{invalid, Error, Result};
use crate::measure::{integrate_over_polytope, Density, WeightedMeasure};
use crate::oracle::{rng, SphereQuadrature};
use crate::polytope::{Polytope, StarBodyFn};
use crate::projection::{neville_at_zero, ray_derivative_at_zero, VARIATIONAL_STEPS};
use crate::quadrature::{gauss_converged, jacobi_left, jacobi_right, legendre};
use crate::radialmean::RayProfile;
use crate::verify::{DirectionRow, VerifyReport};
use rand::Rng;
use std::sync::Arc;

/// Directions with `|∂f/∂r|₀⁺| < OMEGA_TOL` are treated as flat.
pub const OMEGA_TOL: f64 = 1e-8;
/// Relative slack of both chord checks.
pub const CHORD_TOL: f64 = 1e-3;
const SIDE_SAMPLES: usize = 100;
const CONCAVITY_DIRS: usize = 32;
const CONCAVITY_PAIRS: usize = 16;

/// Which homogeneity inequality a kernel satisfies for `u ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSide {
    /// `G(ur, ·) >= u^α G(r, ·)`.
    Lower,
    /// `G(ur, ·) <= u^α G(r, ·)`.
    Upper,
    /// Exactly `α`-homogeneous.
    Both,
}

impl KernelSide {
    pub fn is_lower(self) -> bool {
        matches!(self, KernelSide::Lower | KernelSide::Both)
    }

    pub fn is_upper(self) -> bool {
        matches!(self, KernelSide::Upper | KernelSide::Both)
    }
}

type RadialFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Positive kernel `G(r, θ)` with declared homogeneity degree and side.
#[derive(Clone)]
pub struct KernelG {
    pub dim: usize,
    pub alpha: f64,
    pub side: KernelSide,
    g: RadialFn,
}

impl std::fmt::Debug for KernelG {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KernelG(dim={}, alpha={}, side={:?})", self.dim, self.alpha, self.side)
    }
}

impl KernelG {
    /// `G = r^α`.
    pub fn power(dim: usize, alpha: f64) -> Result<KernelG> {
        if dim == 0 || !(alpha > -1.0) || !alpha.is_finite() {
            return invalid("power kernel needs dim >= 1 and α > -1");
        }
        Ok(KernelG { dim, alpha, side: KernelSide::Both, g: Arc::new(move |r, _| r.powf(alpha)) })
    }

    /// `G = r^α φ(rθ)`; nondecreasing `φ` gives the upper side, constant `φ`
    /// both, anything else is declared lower and spot-checked.
    pub fn power_density(alpha: f64, density: Density) -> Result<KernelG> {
        let dim = density.dim();
        let base = KernelG::power(dim, alpha)?;
        let side = if density.is_constant() {
            KernelSide::Both
        } else if density.radially_nondecreasing() {
            KernelSide::Upper
        } else {
            KernelSide::Lower
        };
        let g: RadialFn = Arc::new(move |r, th: &[f64]| {
            let x: Vec<f64> = th.iter().map(|c| c * r).collect();
            r.powf(alpha) * density.eval(&x)
        });
        let k = KernelG { g, side, ..base };
        k.check_side(1.0, 0)?;
        Ok(k)
    }

    /// User kernel with declared `(α, side)`, spot-checked on `r ∈ (0, r_max]`.
    pub fn custom(
        dim: usize,
        alpha: f64,
        side: KernelSide,
        r_max: f64,
        g: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<KernelG> {
        let k = KernelG { side, g: Arc::new(g), ..KernelG::power(dim, alpha)? };
        k.check_side(r_max, 0)?;
        Ok(k)
    }

    pub fn scaled(self, c: f64) -> Result<KernelG> {
        if !(c > 0.0) || !c.is_finite() {
            return invalid("kernel scale must be positive");
        }
        let g = self.g.clone();
        Ok(KernelG { g: Arc::new(move |r, th| c * g(r, th)), ..self })
    }

    pub fn eval(&self, r: f64, theta: &[f64]) -> f64 {
        (self.g)(r, theta)
    }

    /// `G / r^α`, the factor left after the Jacobi weight.
    fn smooth(&self, r: f64, theta: &[f64]) -> f64 {
        self.eval(r, theta) / r.powf(self.alpha)
    }

    /// Positivity and the declared side at random `(u, r, θ)`.
    pub fn check_side(&self, r_max: f64, seed: u64) -> Result<()> {
        let mut g = rng(seed, "kernel_side", 0);
        for _ in 0..SIDE_SAMPLES {
            let th = crate::oracle::random_unit(&mut g, self.dim);
            let r = r_max * (1.0 - g.random::<f64>());
            let u: f64 = g.random();
            let (big, small) = (self.eval(r, &th), self.eval(u * r, &th));
            if !(big > 0.0) || !big.is_finite() {
                return invalid(format!("kernel is not positive at r = {r}"));
            }
            let scaled = u.powf(self.alpha) * big;
            let slack = 1e-12 * scaled.abs().max(1e-300);
            let ok = match self.side {
                KernelSide::Lower => small >= scaled - slack,
                KernelSide::Upper => small <= scaled + slack,
                KernelSide::Both => (small - scaled).abs() <= 1e-9 * scaled.abs().max(1e-300),
            };
            if !ok {
                return invalid(format!("kernel fails declared {:?} homogeneity at u = {u}, r = {r}", self.side));
            }
        }
        Ok(())
    }
}

/// One ray of a [`ConcaveRayFn`].
pub struct Ray {
    pub rho: f64,
    pub f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative_at_zero: f64,
    /// Interior radii where `f` may fail to be smooth.
    pub breaks: Vec<f64>,
}

type RayFactory = Arc<dyn Fn(&[f64]) -> Result<Ray> + Send + Sync>;

/// Nonnegative `f(r, θ)`, concave in `r` on `[0, ρ_L(θ)]` and 0 beyond.
#[derive(Clone)]
pub struct ConcaveRayFn {
    pub dim: usize,
    ray: RayFactory,
}

impl std::fmt::Debug for ConcaveRayFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ConcaveRayFn(dim={})", self.dim)
    }
}

/// One-sided derivative at 0 from forward differences extrapolated to zero step.
fn forward_derivative(f: &dyn Fn(f64) -> f64, first_smooth: f64) -> f64 {
    let f0 = f(0.0);
    let hs: Vec<f64> = VARIATIONAL_STEPS.iter().map(|h| h * first_smooth).collect();
    let ds: Vec<f64> = hs.iter().map(|&h| (f(h) - f0) / h).collect();
    neville_at_zero(&hs, &ds)
}

impl ConcaveRayFn {
    pub fn from_rays(dim: usize, ray: impl Fn(&[f64]) -> Result<Ray> + Send + Sync + 'static) -> Self {
        ConcaveRayFn { dim, ray: Arc::new(ray) }
    }

    /// `f` from a closure on `[0, ρ_L(θ)]`; the derivative at 0 is estimated
    /// numerically inside the first smooth piece.
    pub fn from_fn(
        support: StarBodyFn,
        f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        breaks: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
    ) -> Self {
        let f = Arc::new(f);
        let dim = support.dim;
        ConcaveRayFn::from_rays(dim, move |th| {
            let rho = support.eval(th);
            if !(rho > 0.0) || !rho.is_finite() {
                return invalid(format!("support radius {rho} is not positive"));
            }
            let brk: Vec<f64> = breaks.as_ref().map_or(Vec::new(), |b| b(th));
            let first = brk.first().copied().unwrap_or(rho).min(rho);
            let (f2, t) = (f.clone(), th.to_vec());
            let ray_f = move |r: f64| if r > rho { 0.0 } else { f2(r, &t) };
            let d0 = forward_derivative(&ray_f, first);
            Ok(Ray { rho, f: Box::new(ray_f), derivative_at_zero: d0, breaks: brk })
        })
    }

    /// `f = f0(θ) (1 - r/ρ_L(θ))`, affine on every ray.
    pub fn affine(support: StarBodyFn, f0: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let dim = support.dim;
        ConcaveRayFn::from_rays(dim, move |th| {
            let rho = support.eval(th);
            let c = f0(th);
            if !(rho > 0.0) || !(c >= 0.0) {
                return invalid("affine ray function needs ρ_L > 0 and f(0) >= 0");
            }
            Ok(Ray {
                rho,
                f: Box::new(move |r| if r > rho { 0.0 } else { c * (1.0 - r / rho) }),
                derivative_at_zero: -c / rho,
                breaks: Vec::new(),
            })
        })
    }

    /// `f = g_{μ,m}(K, ·)^s` on `D^m K`, from an interpolated ray profile.
    /// Concave when `μ` is `s`-concave.
    pub fn covariogram_power(k: &Polytope, mu: &WeightedMeasure, m: usize, s: f64) -> Result<Self> {
        if !(s > 0.0) || m == 0 {
            return invalid("covariogram composition needs s > 0 and m >= 1");
        }
        let (k, mu, n) = (k.clone(), mu.clone(), k.dim());
        integrate_over_polytope(&mu, &k)?;
        Ok(ConcaveRayFn::from_rays(n * m, move |th| {
            let theta = MDirection::from_flat(n, th)?;
            let prof = RayProfile::new(&k, &mu, &theta)?;
            let (deriv, _) = ray_derivative_at_zero(&k, &mu, &theta, &VARIATIONAL_STEPS)?;
            let rho = prof.rho_d;
            let d0 = s * prof.mu_k.powf(s - 1.0) * deriv;
            let breaks = prof.breaks[1..prof.breaks.len() - 1].iter().map(|t| t * rho).collect();
            Ok(Ray { rho, f: Box::new(move |r| prof.value(r).max(0.0).powf(s)), derivative_at_zero: d0, breaks })
        }))
    }

    pub fn ray(&self, theta: &[f64]) -> Result<Ray> {
        if theta.len() != self.dim {
            return invalid("direction dimension mismatch");
        }
        (self.ray)(theta)
    }

    pub fn eval(&self, r: f64, theta: &[f64]) -> Result<f64> {
        Ok((self.ray(theta)?.f)(r))
    }

    pub fn support(&self) -> StarBodyFn {
        let me = self.clone();
        StarBodyFn::new(self.dim, move |th| me.ray(th).map_or(f64::NAN, |r| r.rho))
    }

    pub fn value_at_zero(&self, theta: &[f64]) -> Result<f64> {
        self.eval(0.0, theta)
    }

    pub fn ray_derivative_at_zero(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.ray(theta)?.derivative_at_zero)
    }

    /// Nonnegativity and midpoint concavity on up to 32 of the given directions.
    pub fn check_concavity(&self, quad: &SphereQuadrature, seed: u64) -> Result<()> {
        let step = quad.len().div_ceil(CONCAVITY_DIRS).max(1);
        let mut g = rng(seed, "ray_concavity", 0);
        for th in quad.nodes().iter().step_by(step) {
            let ray = self.ray(th)?;
            let scale = (ray.f)(0.0).abs().max(1e-300);
            for _ in 0..CONCAVITY_PAIRS {
                let (a, b) = (ray.rho * g.random::<f64>(), ray.rho * g.random::<f64>());
                let (fa, fb, fm) = ((ray.f)(a), (ray.f)(b), (ray.f)(0.5 * (a + b)));
                if fa < -1e-12 * scale || fm < 0.5 * (fa + fb) - 1e-9 * scale {
                    return invalid(format!("f is not concave and nonnegative along θ = {th:?}"));
                }
            }
        }
        Ok(())
    }
}

/// `∫_0^ρ q(r) G(r, θ) dr` split at `breaks`; `q` is smooth on each piece.
fn ray_integral(q: &dyn Fn(f64) -> f64, g: &KernelG, theta: &[f64], rho: f64, breaks: &[f64]) -> Result<f64> {
    let mut edges = vec![0.0];
    edges.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < rho));
    edges.push(rho);
    let scale = q(0.0).abs().max(1e-300) * g.eval(rho, theta) * rho;
    gauss_converged(
        |n| {
            edges
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    if i == 0 {
                        jacobi_left(|r| q(r) * g.smooth(r, theta), 0.0, w[1], g.alpha, n)
                    } else {
                        legendre(|r| q(r) * g.eval(r, theta), w[0], w[1], n)
                    }
                })
                .sum()
        },
        scale,
    )
    .map_err(|e| Error::Numeric(format!("kernel ray integral diverges or is unresolved: {e}")))
}

/// `Ṽ_G(L) = (1/d) ∫_{S^{d-1}} ∫_0^{ρ_L(θ)} G(r, θ) dr dθ`.
pub fn dual_volume(g: &KernelG, l: &StarBodyFn, quad: &SphereQuadrature) -> Result<f64> {
    if g.dim != l.dim || quad.dim() != l.dim {
        return invalid("kernel, star body and sphere rule dimensions differ");
    }
    let vals = crate::par_map(quad.nodes(), |u| {
        let rho = l.eval(u);
        if !(rho > 0.0) || !rho.is_finite() {
            return invalid(format!("radial function {rho} is not positive"));
        }
        ray_integral(&|_| 1.0, g, u, rho, &[])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(quad.integrate_values(&vals).value / l.dim as f64)
}

/// `(α+1) ∫_0^1 h(f0 τ) (1-τ)^α dτ`.
pub fn beta_integral(h: &dyn Fn(f64) -> f64, f0: f64, alpha: f64) -> Result<f64> {
    let scale = h(f0).abs().max(1e-300);
    Ok((alpha + 1.0) * gauss_converged(|n| jacobi_right(|t| h(f0 * t), 0.0, 1.0, alpha, n), scale)?)
}

struct RaySample {
    rho: f64,
    f0: f64,
    deriv: f64,
    lhs: f64,
    beta: f64,
}

fn sample_rays(
    f: &ConcaveRayFn,
    h: &(dyn Fn(f64) -> f64 + Sync),
    g: &KernelG,
    quad: &SphereQuadrature,
) -> Result<Vec<RaySample>> {
    if f.dim != g.dim || quad.dim() != f.dim {
        return invalid("ray function, kernel and sphere rule dimensions differ");
    }
    f.check_concavity(quad, 0)?;
    crate::par_map(quad.nodes(), |u| {
        let ray = f.ray(u)?;
        let q = |r: f64| h((ray.f)(r));
        let lhs = ray_integral(&q, g, u, ray.rho, &ray.breaks)?;
        let f0 = (ray.f)(0.0);
        Ok(RaySample { rho: ray.rho, f0, deriv: ray.derivative_at_zero, lhs, beta: beta_integral(h, f0, g.alpha)? })
    })
    .into_iter()
    .collect()
}

/// `∫∫ h(f) G dr dθ >= d β_α Ṽ_G(L)` for a lower-side kernel.
pub fn chord_lower_check(
    f: &ConcaveRayFn,
    h: &(dyn Fn(f64) -> f64 + Sync),
    g: &KernelG,
    quad: &SphereQuadrature,
) -> Result<VerifyReport> {
    if !g.side.is_lower() {
        return invalid("chord lower check needs a kernel with G(ur) >= u^α G(r)");
    }
    let samples = sample_rays(f, h, g, quad)?;
    let beta = samples.iter().map(|s| s.beta).fold(f64::INFINITY, f64::min);
    let vols = crate::par_map(quad.nodes(), |u| ray_integral(&|_| 1.0, g, u, f.ray(u)?.rho, &[]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let lhs = quad.integrate_values(&samples.iter().map(|s| s.lhs).collect::<Vec<_>>()).value;
    let rhs = beta * quad.integrate_values(&vols).value;
    let mut r = VerifyReport::new("chord_lower");
    r.rows = rows(quad, &samples, |s| vec![("beta".into(), s.beta)]);
    r.lhs = lhs;
    r.rhs = rhs;
    r.ratio = lhs / rhs;
    r.bound = 1.0;
    r.tolerance = CHORD_TOL;
    r.margin = r.ratio - 1.0;
    r.pass = lhs >= rhs * (1.0 - CHORD_TOL);
    r.samples = quad.len();
    Ok(r.note(format!("β_α = {beta}, α = {}", g.alpha)))
}

fn rows(quad: &SphereQuadrature, samples: &[RaySample], extra: impl Fn(&RaySample) -> Vec<(String, f64)>) -> Vec<DirectionRow> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut values = vec![("rho_L".into(), s.rho), ("f0".into(), s.f0), ("ray_lhs".into(), s.lhs)];
            values.extend(extra(s));
            DirectionRow { index: i, direction: quad.nodes()[i].clone(), values, pass: true }
        })
        .collect()
}

/// `∫∫ h(f) G <= β_b ∫_{S \ Ω_f} ∫_0^{ρ_L̃} G + ∫_{Ω_f} ∫_0^{ρ_L} h(f(0,θ)) G`
/// for an upper-side kernel and `f` maximal at `r = 0` on every ray.
pub fn chord_upper_check(
    f: &ConcaveRayFn,
    h: &(dyn Fn(f64) -> f64 + Sync),
    g: &KernelG,
    quad: &SphereQuadrature,
) -> Result<VerifyReport> {
    if !g.side.is_upper() {
        return invalid("chord upper check needs a kernel with G(ur) <= u^α G(r)");
    }
    let samples = sample_rays(f, h, g, quad)?;
    for (u, s) in quad.nodes().iter().zip(&samples) {
        let ray = f.ray(u)?;
        let peak = (0..=32).map(|j| (ray.f)(s.rho * j as f64 / 32.0)).fold(f64::NEG_INFINITY, f64::max);
        if peak > s.f0 * (1.0 + 1e-9) + 1e-12 {
            return invalid(format!("f(·, θ) peaks away from r = 0 along θ = {u:?}"));
        }
    }
    let flat: Vec<bool> = samples.iter().map(|s| s.deriv.abs() < OMEGA_TOL).collect();
    let beta = samples
        .iter()
        .zip(&flat)
        .filter(|(_, f)| !**f)
        .map(|(s, _)| s.beta)
        .fold(f64::NEG_INFINITY, f64::max);
    let tails = crate::par_map(&quad.nodes().iter().zip(samples.iter().zip(&flat)).collect::<Vec<_>>(), |(u, (s, fl))| {
        if **fl {
            Ok((0.0, h(s.f0) * ray_integral(&|_| 1.0, g, u, s.rho, &[])?, s.rho))
        } else {
            let rho_t = -s.f0 / s.deriv;
            if !(rho_t > 0.0) || !rho_t.is_finite() {
                return Err(Error::Numeric(format!("ρ_L̃ = {rho_t} is not positive along {u:?}")));
            }
            Ok((ray_integral(&|_| 1.0, g, u, rho_t, &[])?, 0.0, rho_t))
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let omega_count = flat.iter().filter(|f| **f).count();
    let main = quad.integrate_values(&tails.iter().map(|t| t.0).collect::<Vec<_>>()).value;
    let omega = quad.integrate_values(&tails.iter().map(|t| t.1).collect::<Vec<_>>()).value;
    let lhs = quad.integrate_values(&samples.iter().map(|s| s.lhs).collect::<Vec<_>>()).value;
    let beta_used = if omega_count == samples.len() { 0.0 } else { beta };
    let rhs = beta_used * main + omega;
    let mut r = VerifyReport::new("chord_upper");
    r.rows = rows(quad, &samples, |s| vec![("beta".into(), s.beta), ("derivative".into(), s.deriv)]);
    for (row, t) in r.rows.iter_mut().zip(&tails) {
        row.values.push(("rho_L_tilde".into(), t.2));
    }
    r.lhs = lhs;
    r.rhs = rhs;
    r.ratio = lhs / rhs;
    r.bound = 1.0;
    r.tolerance = CHORD_TOL;
    r.margin = 1.0 - r.ratio;
    r.pass = lhs <= rhs * (1.0 + CHORD_TOL);
    r.samples = quad.len();
    r = r.note(format!("β_b = {beta_used}, α = {}, |Ω_f| = {omega_count} of {}", g.alpha, samples.len()));
    if omega_count == 0 {
        r = r.note(format!("Ω_f empty: LHS <= d β_b Ṽ_G(L̃) with d Ṽ_G(L̃) = {main}"));
    }
    Ok(r)
}
