//! Brute-force estimators used as ground truth, plus sphere quadratures.

use crate::error::{invalid, Result};
use crate::linalg::{dot, norm, scale};
use crate::measure::Density;
use crate::polytope::{Estimate, Polytope};
use crate::quadrature::gauss_legendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Samples per independently seeded chunk; fixes the reduction order.
const CHUNK: usize = 4096;

/// Deterministic seed for `(seed, tag, index)` (FNV-1a over the tag, then splitmix64).
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h.rotate_left(17) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for _ in 0..2 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

pub fn rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}

/// Surface measure |S^{d-1}| = 2 π^{d/2} / Γ(d/2).
pub fn sphere_area(d: usize) -> f64 {
    if d == 1 {
        return 2.0;
    }
    (std::f64::consts::LN_2 + 0.5 * d as f64 * PI.ln() - ln_gamma(0.5 * d as f64)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SphereKind {
    /// The two points of S^0.
    Points,
    Trapezoid,
    Fibonacci,
    MonteCarlo { seed: u64 },
    /// Gauss-Legendre in the angle on each sector between the given breakpoints.
    AngularExact,
}

/// Weighted nodes on S^{d-1}; weights sum to |S^{d-1}|.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    dim: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    kind: SphereKind,
}

impl SphereQuadrature {
    /// Default rule per dimension: trapezoid (d=2), Fibonacci (d=3), Monte Carlo (d>=4).
    pub fn new(d: usize, count: usize, seed: u64) -> Result<Self> {
        match d {
            0 => invalid("sphere dimension must be positive"),
            1 => Ok(Self::points()),
            2 => Self::trapezoid(count),
            3 => Self::fibonacci(count),
            _ => Self::monte_carlo(d, count, seed),
        }
    }

    pub fn points() -> Self {
        SphereQuadrature {
            dim: 1,
            nodes: vec![vec![1.0], vec![-1.0]],
            weights: vec![1.0, 1.0],
            kind: SphereKind::Points,
        }
    }

    pub fn trapezoid(count: usize) -> Result<Self> {
        if count == 0 {
            return invalid("quadrature count must be positive");
        }
        let w = 2.0 * PI / count as f64;
        let nodes = (0..count)
            .map(|i| {
                let t = w * i as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Ok(SphereQuadrature { dim: 2, nodes, weights: vec![w; count], kind: SphereKind::Trapezoid })
    }

    /// Gauss-Legendre on every sector between consecutive angles of `breaks`
    /// (taken modulo 2π). Exact to rounding for integrands smooth per sector.
    pub fn angular_exact(breaks: &[f64], per_sector: usize) -> Result<Self> {
        if per_sector == 0 {
            return invalid("quadrature count must be positive");
        }
        let mut b: Vec<f64> = breaks.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
        b.push(0.0);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        let first = b[0];
        b.push(first + 2.0 * PI);
        let rule = gauss_legendre(per_sector);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for s in b.windows(2) {
            let (c, h) = (0.5 * (s[0] + s[1]), 0.5 * (s[1] - s[0]));
            if h <= 0.0 {
                continue;
            }
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = c + h * x;
                nodes.push(vec![t.cos(), t.sin()]);
                weights.push(w * h);
            }
        }
        Ok(SphereQuadrature { dim: 2, nodes, weights, kind: SphereKind::AngularExact })
    }

    pub fn fibonacci(count: usize) -> Result<Self> {
        if count == 0 {
            return invalid("quadrature count must be positive");
        }
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let nodes = (0..count)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * PI * (i as f64 / golden).fract();
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        Ok(SphereQuadrature {
            dim: 3,
            nodes,
            weights: vec![4.0 * PI / count as f64; count],
            kind: SphereKind::Fibonacci,
        })
    }

    /// Uniform directions from normalised standard gaussians.
    pub fn monte_carlo(d: usize, count: usize, seed: u64) -> Result<Self> {
        if d == 0 || count == 0 {
            return invalid("sphere dimension and count must be positive");
        }
        let chunks = count.div_ceil(CHUNK);
        let parts: Vec<Vec<Vec<f64>>> = crate::par_map(&(0..chunks).collect::<Vec<_>>(), |&c| {
            let mut r = rng(seed, "sphere", c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| random_unit(&mut r, d)).collect()
        });
        let nodes: Vec<Vec<f64>> = parts.into_iter().flatten().collect();
        let w = sphere_area(d) / count as f64;
        Ok(SphereQuadrature { dim: d, nodes, weights: vec![w; count], kind: SphereKind::MonteCarlo { seed } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> &SphereKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of precomputed node values; Monte Carlo rules also report
    /// the sample standard error.
    pub fn integrate_values(&self, vals: &[f64]) -> Estimate {
        let value: f64 = vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let stderr = match self.kind {
            SphereKind::MonteCarlo { .. } => {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                Some(sphere_area(self.dim) * (var / n).sqrt())
            }
            _ => None,
        };
        Estimate { value, stderr }
    }

    pub fn integrate<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> Estimate {
        let vals = crate::par_map(&self.nodes, |u| f(u));
        self.integrate_values(&vals)
    }
}

pub fn random_unit<R: Rng>(r: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(r)).collect();
        let l = norm(&v);
        if l > 1e-12 {
            return scale(&v, 1.0 / l);
        }
    }
}

/// Uniform point in the simplex with the given vertices.
pub fn random_in_simplex<R: Rng>(r: &mut R, verts: &[Vec<f64>]) -> Vec<f64> {
    let e: Vec<f64> = (0..verts.len()).map(|_| Exp1.sample(r)).collect();
    let s: f64 = e.iter().sum();
    let n = verts[0].len();
    let mut x = vec![0.0; n];
    for (v, w) in verts.iter().zip(&e) {
        for j in 0..n {
            x[j] += v[j] * w / s;
        }
    }
    x
}

/// Uniform sampler over a polytope by volume-weighted simplex choice.
pub struct PolytopeSampler<'a> {
    simplices: &'a [Vec<Vec<f64>>],
    cdf: Vec<f64>,
}

impl<'a> PolytopeSampler<'a> {
    pub fn new(p: &'a Polytope) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .simplices()
            .iter()
            .map(|s| {
                acc += crate::cubature::simplex_measure(s);
                acc
            })
            .collect::<Vec<_>>();
        let total = acc;
        PolytopeSampler { simplices: p.simplices(), cdf: cdf.into_iter().map(|c| c / total).collect() }
    }

    pub fn sample<R: Rng>(&self, r: &mut R) -> Vec<f64> {
        let u: f64 = r.random();
        let k = self.cdf.partition_point(|&c| c < u).min(self.simplices.len() - 1);
        random_in_simplex(r, &self.simplices[k])
    }
}

/// Sum and sum of squares of `f` over `count` seeded samples, chunked for a
/// thread-count-independent reduction.
pub(crate) fn mc_moments<S, F>(count: usize, seed: u64, tag: &str, sample: S, f: F) -> (f64, f64)
where
    S: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = crate::par_map(&(0..chunks).collect::<Vec<_>>(), |&c| {
        let mut r = rng(seed, tag, c as u64);
        let len = CHUNK.min(count - c * CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..len {
            let x = sample(&mut r);
            let v = f(&x);
            s += v;
            s2 += v * v;
        }
        (s, s2)
    });
    parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

fn mean_and_error(sum: f64, sum2: f64, n: usize, scale_by: f64) -> Estimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum2 / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
    Estimate { value: scale_by * mean, stderr: Some(scale_by * (var / nf).sqrt()) }
}

/// Rejection estimate of `∫_box φ·χ_membership` from uniform box samples.
pub fn mc_measure<M: Fn(&[f64]) -> bool + Sync>(
    density: &Density,
    membership: M,
    lo: &[f64],
    hi: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if lo.len() != hi.len() || lo.len() != density.dim() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
        return invalid("bounding box must be nondegenerate and match the density dimension");
    }
    if n_samples < 2 {
        return invalid("need at least two samples");
    }
    let box_vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let (s, s2) = mc_moments(
        n_samples,
        seed,
        "mc_measure",
        |r| lo.iter().zip(hi).map(|(a, b)| r.random_range(*a..*b)).collect(),
        |x| if membership(x) { density.eval(x) } else { 0.0 },
    );
    Ok(mean_and_error(s, s2, n_samples, box_vol))
}

/// `∫_P f` by uniform sampling inside `P` (used by Monte Carlo measures).
pub fn mc_over_polytope<F: Fn(&[f64]) -> f64 + Sync>(
    p: &Polytope,
    f: F,
    n_samples: usize,
    seed: u64,
    tag: &str,
) -> Estimate {
    let sampler = PolytopeSampler::new(p);
    let (s, s2) = mc_moments(n_samples.max(2), seed, tag, |r| sampler.sample(r), f);
    mean_and_error(s, s2, n_samples.max(2), p.volume())
}

/// Brute-force Lebesgue membership test used by oracle cross-checks.
pub fn in_translates(k: &Polytope, shifts: &[Vec<f64>], y: &[f64]) -> bool {
    k.contains(y, 0.0)
        && shifts.iter().all(|x| {
            k.halfspaces()
                .iter()
                .all(|h| dot(&h.normal, y) - dot(&h.normal, x) <= h.offset)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Density;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn rules_sum_to_area() {
        for q in [
            SphereQuadrature::trapezoid(256).unwrap(),
            SphereQuadrature::fibonacci(1000).unwrap(),
            SphereQuadrature::monte_carlo(4, 5000, 1).unwrap(),
            SphereQuadrature::angular_exact(&[0.3, 2.0, -1.0], 8).unwrap(),
        ] {
            let s: f64 = q.weights().iter().sum();
            assert!((s - sphere_area(q.dim())).abs() < 1e-9, "{:?}", q.kind());
            assert!(q.nodes().iter().all(|u| (norm(u) - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn deterministic_seeds() {
        assert_eq!(derive_seed(42, "a", 3), derive_seed(42, "a", 3));
        assert_ne!(derive_seed(42, "a", 3), derive_seed(42, "b", 3));
        let a = SphereQuadrature::monte_carlo(4, 9000, 7).unwrap();
        let b = SphereQuadrature::monte_carlo(4, 9000, 7).unwrap();
        assert_eq!(a.nodes(), b.nodes());
    }

    #[test]
    fn unit_square_by_rejection() {
        let d = Density::constant(2, 1.0);
        let sq = Polytope::cube(2);
        let e = mc_measure(&d, |x| sq.contains(x, 0.0), &[-1.0, -1.0], &[2.0, 2.0], 200_000, 42).unwrap();
        assert!((e.value - 1.0).abs() < 3.0 * e.stderr.unwrap());
    }
}
