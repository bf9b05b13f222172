//! Weighted measures `dμ = φ dλ`, their integrals over polytopes and the
//! weighted surface area measure of a polytope.

use crate::cubature::integrate_simplex;
use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::oracle::{mc_over_polytope, rng};
use crate::polytope::{Estimate, Halfspace, LinearMap, Polytope};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Default points per simplex axis for the `Grid` integration mode.
pub const DEFAULT_GRID_LEVELS: usize = 12;

#[derive(Debug, Clone)]
pub enum DensityKind {
    Constant { c: f64 },
    /// `exp(-|x|^2 / (2σ^2))`
    Gaussian { sigma: f64 },
    /// `(<a,x> + b)_+^k`
    LinearPower { a: Vec<f64>, b: f64, k: f64 },
    /// Product of factors acting on consecutive coordinate blocks.
    Product { factors: Vec<Density> },
    /// `x ↦ base(T x)`.
    Pullback { base: Box<Density>, map: LinearMap },
}

/// Declared concavity class of the measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Concavity {
    S { s: f64 },
    Log,
    F { tag: String },
    None,
}

#[derive(Debug, Clone)]
pub struct Density {
    dim: usize,
    kind: DensityKind,
    concavity: Concavity,
}

impl Density {
    pub fn constant(dim: usize, c: f64) -> Density {
        Density { dim, kind: DensityKind::Constant { c }, concavity: Concavity::S { s: 1.0 / dim as f64 } }
    }

    pub fn gaussian(dim: usize, sigma: f64) -> Result<Density> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid("gaussian sigma must be positive");
        }
        Ok(Density { dim, kind: DensityKind::Gaussian { sigma }, concavity: Concavity::Log })
    }

    pub fn linear_power(a: Vec<f64>, b: f64, k: f64) -> Result<Density> {
        if a.is_empty() || !(k >= 0.0) || !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
            return invalid("linear-power density needs a finite vector a, finite b and k >= 0");
        }
        let dim = a.len();
        Ok(Density {
            dim,
            kind: DensityKind::LinearPower { a, b, k },
            concavity: Concavity::S { s: 1.0 / (k + dim as f64) },
        })
    }

    pub fn product(factors: Vec<Density>) -> Result<Density> {
        if factors.is_empty() {
            return invalid("product density needs at least one factor");
        }
        let dim = factors.iter().map(|f| f.dim).sum();
        let concavity = if factors.iter().all(|f| match f.concavity {
            Concavity::Log => true,
            Concavity::S { s } => s >= 0.0,
            _ => false,
        }) {
            Concavity::Log
        } else {
            Concavity::None
        };
        Ok(Density { dim, kind: DensityKind::Product { factors }, concavity })
    }

    /// Replaces the declared concavity tag.
    pub fn with_concavity(mut self, c: Concavity) -> Density {
        self.concavity = c;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn concavity(&self) -> &Concavity {
        &self.concavity
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, DensityKind::Constant { .. })
    }

    /// `φ(r x)` nondecreasing in `r > 0` for every `x`.
    pub fn radially_nondecreasing(&self) -> bool {
        match &self.kind {
            DensityKind::Constant { .. } => true,
            DensityKind::Gaussian { .. } => false,
            DensityKind::LinearPower { b, k, .. } => *b <= 0.0 || *k == 0.0,
            DensityKind::Product { factors } => factors.iter().all(|f| f.radially_nondecreasing()),
            DensityKind::Pullback { base, .. } => base.radially_nondecreasing(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DensityKind::Constant { c } => *c,
            DensityKind::Gaussian { sigma } => (-dot(x, x) / (2.0 * sigma * sigma)).exp(),
            DensityKind::LinearPower { a, b, k } => {
                let t = dot(a, x) + b;
                if t <= 0.0 {
                    0.0
                } else if *k == 0.0 {
                    1.0
                } else {
                    t.powf(*k)
                }
            }
            DensityKind::Product { factors } => {
                let mut off = 0;
                let mut v = 1.0;
                for f in factors {
                    v *= f.eval(&x[off..off + f.dim]);
                    off += f.dim;
                }
                v
            }
            DensityKind::Pullback { base, map } => base.eval(&map.apply(x)),
        }
    }

    /// Density `x ↦ φ(T x)`, simplified where the family is closed under `T`.
    pub fn pullback(&self, t: &LinearMap) -> Result<Density> {
        if t.dim() != self.dim {
            return invalid("linear map dimension mismatch");
        }
        let kind = match &self.kind {
            DensityKind::Constant { c } => DensityKind::Constant { c: *c },
            DensityKind::LinearPower { a, b, k } => {
                DensityKind::LinearPower { a: t.apply_transpose(a), b: *b, k: *k }
            }
            DensityKind::Gaussian { sigma } => match scalar_multiple(t) {
                Some(c) => DensityKind::Gaussian { sigma: sigma / c.abs() },
                None => DensityKind::Pullback { base: Box::new(self.clone()), map: t.clone() },
            },
            _ => DensityKind::Pullback { base: Box::new(self.clone()), map: t.clone() },
        };
        Ok(Density { dim: self.dim, kind, concavity: self.concavity.clone() })
    }

    /// Midpoint spot-check of the declared concavity on `pairs` random pairs in the box.
    pub fn check_concavity(&self, lo: &[f64], hi: &[f64], pairs: usize, seed: u64) -> Result<()> {
        let gamma = match self.concavity {
            Concavity::None | Concavity::F { .. } => return Ok(()),
            Concavity::Log => None,
            Concavity::S { s } => {
                let n = self.dim as f64;
                if s > 1.0 / n + 1e-12 {
                    return invalid(format!("concavity spot-check failed: s = {s} exceeds 1/n for an n = {} density", self.dim));
                }
                if (s - 1.0 / n).abs() <= 1e-12 {
                    Some(f64::INFINITY)
                } else if s == 0.0 {
                    None
                } else {
                    Some(s / (1.0 - n * s))
                }
            }
        };
        let mut r = rng(seed, "concavity", 0);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < pairs && attempts < 50 * pairs {
            attempts += 1;
            let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
            let y: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| r.random_range(*a..=*b)).collect();
            let (fx, fy) = (self.eval(&x), self.eval(&y));
            if !(fx > 0.0 && fy > 0.0) {
                continue;
            }
            checked += 1;
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let fm = self.eval(&mid);
            let ok = match gamma {
                Some(g) if g.is_infinite() => {
                    (fx - fy).abs() <= 1e-12 * fx.abs().max(fy.abs()) && (fm - fx).abs() <= 1e-12 * fx.abs()
                }
                Some(g) if g > 0.0 => fm.powf(g) >= 0.5 * (fx.powf(g) + fy.powf(g)) - 1e-9,
                Some(g) => fm.powf(g) <= 0.5 * (fx.powf(g) + fy.powf(g)) + 1e-9,
                None => fm > 0.0 && fm.ln() >= 0.5 * (fx.ln() + fy.ln()) - 1e-9,
            };
            if !ok {
                return invalid(format!(
                    "concavity spot-check failed for tag {:?} at x={x:?}, y={y:?}",
                    self.concavity
                ));
            }
        }
        Ok(())
    }
}

fn scalar_multiple(t: &LinearMap) -> Option<f64> {
    let m = t.matrix();
    let c = m[0][0];
    let n = m.len();
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { c } else { 0.0 };
            if (m[i][j] - want).abs() > 1e-15 * c.abs() {
                return None;
            }
        }
    }
    Some(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Integration {
    ExactConstant,
    /// Collapsed Gauss cubature with `levels` points per simplex axis.
    Grid { levels: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    density: Density,
    integration: Integration,
}

impl WeightedMeasure {
    pub fn new(density: Density, integration: Integration) -> Result<Self> {
        match integration {
            Integration::ExactConstant if !density.is_constant() => {
                invalid("exact_constant integration requires a constant density")
            }
            Integration::Grid { levels: 0 } => invalid("grid levels must be positive"),
            Integration::MonteCarlo { samples, .. } if samples < 2 => invalid("need at least two samples"),
            _ => Ok(WeightedMeasure { density, integration }),
        }
    }

    /// Exact integration for constant densities, Gauss cubature otherwise.
    pub fn with_density(density: Density) -> Self {
        let integration = if density.is_constant() {
            Integration::ExactConstant
        } else {
            Integration::Grid { levels: DEFAULT_GRID_LEVELS }
        };
        WeightedMeasure { density, integration }
    }

    pub fn lebesgue(dim: usize) -> Self {
        Self::with_density(Density::constant(dim, 1.0))
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn integration(&self) -> &Integration {
        &self.integration
    }

    pub fn dim(&self) -> usize {
        self.density.dim
    }

    pub fn is_constant(&self) -> bool {
        self.density.is_constant()
    }

    /// Whether integrals carry Monte Carlo error.
    pub fn is_stochastic(&self) -> bool {
        matches!(self.integration, Integration::MonteCarlo { .. })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.density.eval(x)
    }

    /// Cubature levels used for facet and slice integrals.
    pub fn levels(&self) -> usize {
        match self.integration {
            Integration::Grid { levels } => levels,
            _ => DEFAULT_GRID_LEVELS,
        }
    }

    /// `∫_P f dμ` with the measure's integration mode.
    pub fn integrate_fn<F: Fn(&[f64]) -> f64 + Sync>(&self, p: &Polytope, f: F, tag: &str) -> Estimate {
        match self.integration {
            Integration::MonteCarlo { samples, seed } => {
                mc_over_polytope(p, |x| f(x) * self.density.eval(x), samples, seed, tag)
            }
            _ => {
                let levels = self.levels();
                let constant = match self.density.kind {
                    DensityKind::Constant { c } => Some(c),
                    _ => None,
                };
                let value = p
                    .simplices()
                    .iter()
                    .map(|s| match constant {
                        Some(c) => c * integrate_simplex(s, levels, &f),
                        None => integrate_simplex(s, levels, |x| f(x) * self.density.eval(x)),
                    })
                    .sum();
                Estimate { value, stderr: None }
            }
        }
    }
}

/// `μ(P)`; exact `c·vol(P)` for constant densities.
pub fn integrate_over_polytope(mu: &WeightedMeasure, p: &Polytope) -> Result<Estimate> {
    if p.dim() != mu.dim() {
        return invalid("measure and polytope dimensions differ");
    }
    if let DensityKind::Constant { c } = mu.density.kind {
        if !matches!(mu.integration, Integration::MonteCarlo { .. }) {
            return Ok(Estimate { value: c * p.volume(), stderr: None });
        }
    }
    Ok(mu.integrate_fn(p, |_| 1.0, "integrate"))
}

/// `μ(P)` with 0 for the empty value.
pub fn measure_of(mu: &WeightedMeasure, p: Option<&Polytope>) -> Result<Estimate> {
    match p {
        Some(p) => integrate_over_polytope(mu, p),
        None => Ok(Estimate { value: 0.0, stderr: None }),
    }
}

/// Atoms `(u_F, w_F)` of the weighted surface area measure.
#[derive(Debug, Clone, Serialize)]
pub struct FacetMeasure {
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl FacetMeasure {
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, |a| a.0.len())
    }
}

/// One atom per facet with weight `∫_F φ dH^{n-1}`.
pub fn weighted_surface_measure(k: &Polytope, mu: &WeightedMeasure) -> Result<FacetMeasure> {
    if k.dim() != mu.dim() {
        return invalid("measure and polytope dimensions differ");
    }
    let levels = mu.levels();
    let atoms = k
        .facets()
        .iter()
        .map(|f| {
            let w = match mu.density.kind {
                DensityKind::Constant { c } => c * f.area,
                _ => {
                    if k.dim() == 1 {
                        mu.eval(&f.vertices[0])
                    } else {
                        f.simplices.iter().map(|s| integrate_simplex(s, levels, |x| mu.eval(x))).sum()
                    }
                }
            };
            (f.normal.clone(), w)
        })
        .collect();
    Ok(FacetMeasure { atoms })
}

/// `μ⁺(∂K)` as the facet sum, with the outer-parallel finite difference alongside.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryMeasure {
    pub facet_sum: f64,
    pub finite_difference: f64,
    pub epsilon: f64,
}

pub fn boundary_measure_total(k: &Polytope, mu: &WeightedMeasure) -> Result<BoundaryMeasure> {
    let eps = 1e-3;
    let facet_sum = weighted_surface_measure(k, mu)?.total();
    // outer parallel polytope: every facet pushed out by eps
    let hs: Vec<Halfspace> = k
        .halfspaces()
        .iter()
        .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset + eps })
        .collect();
    let outer = Polytope::build(k.dim(), hs, false)?
        .ok_or_else(|| Error::Numeric("outer parallel polytope vanished".into()))?;
    let m0 = integrate_over_polytope(mu, k)?.value;
    let m1 = integrate_over_polytope(mu, &outer)?.value;
    Ok(BoundaryMeasure { facet_sum, finite_difference: (m1 - m0) / eps, epsilon: eps })
}

/// `μ^T` with density `x ↦ φ(T x)`; the integration mode is kept.
pub fn transform_measure(mu: &WeightedMeasure, t: &LinearMap) -> Result<WeightedMeasure> {
    Ok(WeightedMeasure { density: mu.density.pullback(t)?, integration: mu.integration.clone() })
}

/// A strictly increasing concavity profile `F` with inverse and derivative.
#[derive(Clone)]
pub struct ConcavityF {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub f_inv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub f_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Open domain `(lo, hi)` of `F`.
    pub domain: (f64, f64),
}

impl std::fmt::Debug for ConcavityF {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ConcavityF({})", self.name)
    }
}

impl ConcavityF {
    /// `F(t) = t^s`, `s > 0`.
    pub fn power(s: f64) -> Result<ConcavityF> {
        if !(s > 0.0) || !s.is_finite() {
            return invalid("power profile needs s > 0");
        }
        Ok(ConcavityF {
            name: format!("t^{s}"),
            f: Arc::new(move |t| t.powf(s)),
            f_inv: Arc::new(move |y| y.max(0.0).powf(1.0 / s)),
            f_prime: Arc::new(move |t| s * t.powf(s - 1.0)),
            domain: (0.0, f64::INFINITY),
        })
    }

    /// `Q(t) = log t`.
    pub fn log() -> ConcavityF {
        ConcavityF {
            name: "log".into(),
            f: Arc::new(|t: f64| t.ln()),
            f_inv: Arc::new(|y: f64| y.exp()),
            f_prime: Arc::new(|t| 1.0 / t),
            domain: (0.0, f64::INFINITY),
        }
    }

    pub fn is_log(&self) -> bool {
        self.name == "log"
    }

    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_inv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
    ) -> ConcavityF {
        ConcavityF {
            name: name.into(),
            f: Arc::new(f),
            f_inv: Arc::new(f_inv),
            f_prime: Arc::new(f_prime),
            domain,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn inv(&self, y: f64) -> f64 {
        (self.f_inv)(y)
    }

    pub fn prime(&self, t: f64) -> f64 {
        (self.f_prime)(t)
    }

    /// Round-trip and derivative checks at `samples` points of `(lo, hi)`.
    pub fn validate(&self, lo: f64, hi: f64, samples: usize) -> Result<()> {
        for i in 1..=samples {
            let t = lo + (hi - lo) * i as f64 / (samples + 1) as f64;
            let y = self.eval(t);
            let back = self.eval(self.inv(y));
            if (back - y).abs() > 1e-9 * y.abs().max(1.0) {
                return invalid(format!("F(F^-1(y)) != y at y={y}"));
            }
            let h = 1e-5 * t.abs().max(1e-3);
            let fd = (self.eval(t + h) - self.eval(t - h)) / (2.0 * h);
            let d = self.prime(t);
            if (fd - d).abs() > 1e-6 * d.abs().max(1e-12) {
                return invalid(format!("F' disagrees with a central difference at t={t}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrals_on_square() {
        let sq = Polytope::cube(2);
        let mu = WeightedMeasure::with_density(Density::constant(2, 2.0));
        assert_eq!(integrate_over_polytope(&mu, &sq).unwrap().value, 2.0);
        let lin = WeightedMeasure::with_density(Density::linear_power(vec![1.0, 0.0], 0.0, 1.0).unwrap());
        assert!((integrate_over_polytope(&lin, &sq).unwrap().value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gaussian_on_large_square() {
        let b = Polytope::box_shape(&[-5.0, -5.0], &[5.0, 5.0]).unwrap();
        let g = WeightedMeasure::with_density(Density::gaussian(2, 1.0).unwrap());
        let v = integrate_over_polytope(&g, &b).unwrap().value;
        // (√(2π) erf(5/√2))^2
        let one_d = (2.0 * std::f64::consts::PI).sqrt() * statrs::function::erf::erf(5.0 / 2f64.sqrt());
        assert!((v - one_d * one_d).abs() < 5e-3 * v, "{v}");
    }

    #[test]
    fn surface_atoms() {
        let sq = Polytope::cube(2);
        let lin = WeightedMeasure::with_density(Density::linear_power(vec![1.0, 0.0], 0.0, 1.0).unwrap());
        let fm = weighted_surface_measure(&sq, &lin).unwrap();
        for (u, w) in &fm.atoms {
            let want = if u[0] > 0.5 {
                1.0
            } else if u[0] < -0.5 {
                0.0
            } else {
                0.5
            };
            assert!((w - want).abs() < 1e-14, "{u:?} {w}");
        }
        let b = boundary_measure_total(&sq, &lin).unwrap();
        assert!((b.facet_sum - 2.0).abs() < 1e-13);
        assert!((b.finite_difference - 2.0).abs() < 0.02 * 2.0);
    }

    #[test]
    fn transforms() {
        let g = WeightedMeasure::with_density(Density::gaussian(2, 1.0).unwrap());
        let t = LinearMap::diagonal(&[2.0, 2.0]).unwrap();
        let gt = transform_measure(&g, &t).unwrap();
        assert!(matches!(gt.density().kind(), DensityKind::Gaussian { sigma } if (*sigma - 0.5).abs() < 1e-15));
        let lin = WeightedMeasure::with_density(Density::linear_power(vec![1.0, 0.0], 0.0, 1.0).unwrap());
        let lt = transform_measure(&lin, &LinearMap::diagonal(&[3.0, 1.0]).unwrap()).unwrap();
        assert!(matches!(lt.density().kind(), DensityKind::LinearPower { a, .. } if a == &vec![3.0, 0.0]));
    }

    #[test]
    fn concavity_tags() {
        let (lo, hi) = (vec![-1.0, -1.0], vec![1.0, 1.0]);
        Density::constant(2, 1.0).check_concavity(&lo, &hi, 200, 1).unwrap();
        Density::gaussian(2, 1.0).unwrap().check_concavity(&lo, &hi, 200, 1).unwrap();
        let bad = Density::gaussian(2, 1.0).unwrap().with_concavity(Concavity::S { s: 0.5 });
        assert!(bad.check_concavity(&lo, &hi, 200, 1).is_err());
        let lp = Density::linear_power(vec![1.0, 0.0], 2.0, 1.0).unwrap();
        lp.check_concavity(&lo, &hi, 200, 1).unwrap();
    }

    #[test]
    fn profiles_validate() {
        ConcavityF::power(0.5).unwrap().validate(0.1, 3.0, 20).unwrap();
        ConcavityF::log().validate(0.1, 3.0, 20).unwrap();
    }
}
