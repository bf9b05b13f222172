use super::constants::{berwald_const_f, berwald_const_q, gen_binom};
use super::report::{DirectionRow, VerifyReport};
use crate::covariogram::{diffbody_radial, MDirection};
use crate::error::{invalid, Result};
use crate::measure::{integrate_over_polytope, Concavity, ConcavityF, WeightedMeasure};
use crate::oracle::{SphereKind, SphereQuadrature};
use crate::polytope::{star_volume, Polytope, StarBodyFn};
use crate::projection::ProjectionBody;
use crate::quadrature::{adaptive, gauss_legendre};
use crate::radialmean::RayProfile;

/// Pairs checked when spot-checking a declared concavity tag.
const CONCAVITY_PAIRS: usize = 200;

/// Concavity family of an inclusion chain.
#[derive(Debug, Clone)]
pub enum ChainConcavity {
    S(f64),
    F(ConcavityF),
    Q(ConcavityF),
}

#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub concavity: ChainConcavity,
    /// Strictly increasing, in (-1, ∞), without 0.
    pub p_list: Vec<f64>,
    pub directions: Vec<MDirection>,
}

/// Deterministic directions on S^{nm-1}: equally spaced angles (d = 2),
/// spherical Fibonacci (d = 3), seeded uniform samples (d >= 4).
pub fn direction_mesh(n: usize, m: usize, count: usize, seed: u64) -> Result<Vec<MDirection>> {
    let d = n * m;
    let quad = if d == 2 {
        SphereQuadrature::trapezoid(count)?
    } else {
        SphereQuadrature::new(d, count, seed)?
    };
    quad.nodes().iter().map(|u| MDirection::from_flat(n, u)).collect()
}

/// Default sphere rule for volumes in R^d: 1000 nodes for d <= 3, 2e5 beyond.
pub fn default_sphere(d: usize, seed: u64) -> Result<SphereQuadrature> {
    SphereQuadrature::new(d, if d <= 3 { 1000 } else { 200_000 }, seed)
}

/// Sphere rule for the polar projection body: exact per angular sector when
/// nm = 2 with n = 2, the default rule otherwise.
pub fn polar_sphere(pb: &ProjectionBody, seed: u64) -> Result<SphereQuadrature> {
    if pb.n == 2 && pb.m == 1 {
        SphereQuadrature::angular_exact(&pb.polar_breaks_2d(), 64)
    } else {
        default_sphere(pb.n * pb.m, seed)
    }
}

fn exact_tolerance(mu: &WeightedMeasure) -> f64 {
    if mu.is_constant() && !mu.is_stochastic() {
        1e-6
    } else {
        1e-2
    }
}

fn spot_check(k: &Polytope, mu: &WeightedMeasure, tag: Concavity) -> Result<()> {
    let (lo, hi) = k.bounding_box();
    mu.density()
        .clone()
        .with_concavity(tag)
        .check_concavity(&lo, &hi, CONCAVITY_PAIRS, 0)
}

/// Inclusion chain `D^m ⊆ c_q R_q ⊆ c_p R_p ⊆ E Π^{∘,m}_μ` checked radially
/// at every direction (the `D^m` end is omitted for the Q family).
pub fn chain_check(k: &Polytope, mu: &WeightedMeasure, spec: &ChainSpec) -> Result<VerifyReport> {
    if spec.p_list.is_empty() || spec.directions.is_empty() {
        return invalid("chain needs at least one p and one direction");
    }
    if spec.p_list.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("p_list must be strictly increasing");
    }
    if spec.p_list.iter().any(|&p| !(p > -1.0) || p == 0.0 || !p.is_finite()) {
        return invalid("p_list entries must lie in (-1, ∞) \\ {0}");
    }
    let m = spec.directions[0].m();
    if spec.directions.iter().any(|t| t.m() != m || t.n() != k.dim()) {
        return invalid("directions must share the shape (m, n)");
    }
    let mu_k = integrate_over_polytope(mu, k)?.value;
    let (consts, endpoint, with_d, label) = match &spec.concavity {
        ChainConcavity::S(s) => {
            if !(*s > 0.0) {
                return invalid("s must be positive");
            }
            spot_check(k, mu, Concavity::S { s: *s })?;
            let c = spec
                .p_list
                .iter()
                .map(|&p| Ok(gen_binom(1.0 / s, p)?.powf(1.0 / p)))
                .collect::<Result<Vec<_>>>()?;
            (c, mu_k / s, true, format!("s={s}"))
        }
        ChainConcavity::F(f) => {
            let c = spec.p_list.iter().map(|&p| berwald_const_f(f, p, mu_k)).collect::<Result<Vec<_>>>()?;
            (c, f.eval(mu_k) / f.prime(mu_k), true, format!("F={}", f.name))
        }
        ChainConcavity::Q(q) => {
            if q.is_log() {
                spot_check(k, mu, Concavity::Log)?;
            }
            let c = spec.p_list.iter().map(|&p| berwald_const_q(q, p, mu_k)).collect::<Result<Vec<_>>>()?;
            (c, 1.0 / q.prime(mu_k), false, format!("Q={}", q.name))
        }
    };
    let pb = ProjectionBody::new(k, mu, m)?;
    let tol = exact_tolerance(mu);
    let rows = crate::par_map(&spec.directions, |theta| -> Result<(Vec<(String, f64)>, f64, f64)> {
        let prof = RayProfile::new(k, mu, theta)?;
        let mut vals: Vec<(String, f64)> = Vec::new();
        if with_d {
            vals.push(("rho_D".into(), prof.rho_d));
        }
        for (p, c) in spec.p_list.iter().zip(&consts).rev() {
            vals.push((format!("C_p*rho_R(p={p})"), c * prof.radial(*p)?));
        }
        vals.push(("E*rho_polar".into(), endpoint * pb.polar_radial(theta)?));
        let mut margin = f64::INFINITY;
        let mut worst: f64 = 0.0;
        for w in vals.windows(2) {
            margin = margin.min((w[1].1 - w[0].1) / w[1].1);
            worst = worst.max(w[0].1 / w[1].1);
        }
        Ok((vals, margin, worst))
    });
    let mut r = VerifyReport::new("chain");
    let mut min_margin = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for (i, (row, theta)) in rows.into_iter().zip(&spec.directions).enumerate() {
        let (vals, margin, w) = row?;
        min_margin = min_margin.min(margin);
        worst = worst.max(w);
        let mut values = vals;
        values.push(("margin".into(), margin));
        r.rows.push(DirectionRow { index: i, direction: theta.flat(), values, pass: margin >= -tol });
    }
    r.lhs = worst;
    r.rhs = 1.0;
    r.ratio = worst;
    r.bound = 1.0;
    r.tolerance = tol;
    r.margin = min_margin;
    r.pass = min_margin >= -tol;
    r.samples = spec.directions.len();
    Ok(r.note(format!("{label}, p_list {:?}, Mellin radii, μ(K) = {mu_k}", spec.p_list)))
}

/// `vol_{nm}(D^m K) / vol(K)^m` against `C(nm+n, n)` (and `2^n` below for m = 1).
pub fn rogers_shephard_check(k: &Polytope, m: usize, quad: Option<&SphereQuadrature>) -> Result<VerifyReport> {
    if m == 0 {
        return invalid("order m must be positive");
    }
    let n = k.dim();
    let upper = gen_binom(n as f64, (n * m) as f64)?;
    let mut r = VerifyReport::new("rogers_shephard");
    let (ratio, tol, lower) = if m == 1 {
        (k.difference_body()?.volume() / k.volume(), 1e-9, Some(2f64.powi(n as i32)))
    } else {
        let owned;
        let q = match quad {
            Some(q) => q,
            None => {
                owned = default_sphere(n * m, 0)?;
                &owned
            }
        };
        if q.dim() != n * m {
            return invalid("sphere rule dimension must be nm");
        }
        let kk = k.clone();
        let star = StarBodyFn::new(n * m, move |u| {
            MDirection::from_flat(n, u).and_then(|t| diffbody_radial(&kk, &t)).unwrap_or(f64::NAN)
        });
        let est = star_volume(&star, q)?;
        if let Some(se) = est.stderr {
            r = r.note(format!("sphere Monte Carlo stderr {se:e}"));
        }
        (est.value / k.volume().powi(m as i32), 2e-2, None)
    };
    r.lhs = ratio;
    r.rhs = upper;
    r.ratio = ratio;
    r.bound = upper;
    r.tolerance = tol;
    r.margin = (upper - ratio) / upper;
    let lower_ok = lower.is_none_or(|l| ratio >= l * (1.0 - tol));
    if let Some(l) = lower {
        r = r.note(format!("lower bound 2^n = {l}"));
        r.margin = r.margin.min((ratio - l) / l);
    }
    r.pass = ratio <= upper * (1.0 + tol) && lower_ok;
    r.samples = quad.map_or(1, |q| q.len());
    Ok(r)
}

/// Product density of `ν_1 × ... × ν_m` on R^{nm}.
fn product_density(nu: &[WeightedMeasure], x: &[f64]) -> f64 {
    let n = nu[0].dim();
    nu.iter().zip(x.chunks(n)).map(|(v, b)| v.eval(b)).product()
}

/// `ν(L)` for a star body `L` in R^{nm}: per-direction Gauss quadrature of
/// `∫_0^ρ φ_ν(r u) r^{d-1} dr` (closed form for constant densities).
pub fn nu_mass(nu: &[WeightedMeasure], l: &StarBodyFn, quad: &SphereQuadrature) -> Result<crate::Estimate> {
    let d = l.dim;
    if quad.dim() != d || nu.is_empty() || nu.iter().map(|v| v.dim()).sum::<usize>() != d {
        return invalid("ν factors, star body and sphere rule dimensions differ");
    }
    let constant = nu.iter().all(|v| v.is_constant());
    let rule = gauss_legendre(32);
    let vals: Vec<f64> = crate::par_map(quad.nodes(), |u| {
        let rho = l.eval(u);
        if constant {
            return product_density(nu, u) * rho.powi(d as i32) / d as f64;
        }
        let h = 0.5 * rho;
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| {
                let r = h * (1.0 + x);
                let p: Vec<f64> = u.iter().map(|c| c * r).collect();
                w * product_density(nu, &p) * r.powi(d as i32 - 1)
            })
            .sum::<f64>()
            * h
    });
    if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
        return invalid(format!("star body radius produced a non-finite mass {bad}"));
    }
    Ok(quad.integrate_values(&vals))
}

/// `∫_K Π_i ν_i(y - K) dμ(y)`.
pub fn zhang_denominator(k: &Polytope, mu: &WeightedMeasure, nu: &[WeightedMeasure]) -> Result<f64> {
    if nu.iter().all(|v| v.is_constant() && !v.is_stochastic()) {
        let c: f64 = nu.iter().map(|v| integrate_over_polytope(v, k).map(|e| e.value)).product::<Result<f64>>()?;
        return Ok(c * integrate_over_polytope(mu, k)?.value);
    }
    let neg = k.reflected();
    Ok(mu
        .integrate_fn(
            k,
            |y| {
                let t = neg.translated(y);
                nu.iter().map(|v| integrate_over_polytope(v, &t).map_or(f64::NAN, |e| e.value)).product()
            },
            "zhang_denominator",
        )
        .value)
}

fn check_nu(k: &Polytope, nu: &[WeightedMeasure]) -> Result<()> {
    if nu.is_empty() {
        return invalid("need at least one ν factor");
    }
    if nu.iter().any(|v| v.dim() != k.dim()) {
        return invalid("every ν factor must live on R^n");
    }
    if nu.iter().any(|v| !v.density().radially_nondecreasing()) {
        return invalid("every ν factor must have a radially non-decreasing density");
    }
    Ok(())
}

fn zhang_tolerance(mu: &WeightedMeasure, nu: &[WeightedMeasure], quad: &SphereQuadrature) -> f64 {
    let exact_measures = mu.is_constant() && !mu.is_stochastic() && nu.iter().all(|v| v.is_constant());
    if exact_measures && *quad.kind() == SphereKind::AngularExact {
        1e-6
    } else {
        2e-2
    }
}

/// `μ(K) ν((1/s) μ(K) Π^{∘,m}_μ K) / ∫_K Π ν_i(y-K) dμ(y) >= C(nm + 1/s, nm)`.
pub fn zhang_check(
    k: &Polytope,
    mu: &WeightedMeasure,
    s: f64,
    nu: &[WeightedMeasure],
    quad: &SphereQuadrature,
) -> Result<VerifyReport> {
    if !(s > 0.0) {
        return invalid("s must be positive");
    }
    check_nu(k, nu)?;
    let m = nu.len();
    let d = k.dim() * m;
    let mu_k = integrate_over_polytope(mu, k)?.value;
    let pb = ProjectionBody::new(k, mu, m)?;
    let num = nu_mass(nu, &pb.polar_star_body(mu_k / s), quad)?;
    let den = zhang_denominator(k, mu, nu)?;
    let bound = gen_binom(1.0 / s, d as f64)?;
    let tol = zhang_tolerance(mu, nu, quad);
    let mut r = VerifyReport::new("zhang");
    r.lhs = mu_k * num.value;
    r.rhs = den;
    r.ratio = r.lhs / den;
    r.bound = bound;
    r.tolerance = tol;
    r.margin = (r.ratio - bound) / bound;
    r.pass = r.ratio >= bound * (1.0 - tol);
    r.samples = quad.len();
    if let Some(se) = num.stderr {
        r = r.note(format!("ν-mass sphere Monte Carlo stderr {se:e}"));
    }
    Ok(r.note(format!("s={s}, nm={d}, bound C(nm+1/s, nm)")))
}

/// General F form: `ν(F(μK)/F'(μK) Π^{∘,m}_μ K) >= ∫_K Π ν_i(y-K) dμ / (nm ∫_0^1 F^{-1}[F(μK) t](1-t)^{nm-1} dt)`.
/// Also requires the weaker `ν(...) >= ∫_K Π ν_i(y-K) dμ / μ(K)`.
pub fn general_zhang_check(
    k: &Polytope,
    mu: &WeightedMeasure,
    f: &ConcavityF,
    nu: &[WeightedMeasure],
    quad: &SphereQuadrature,
) -> Result<VerifyReport> {
    check_nu(k, nu)?;
    let m = nu.len();
    let d = k.dim() * m;
    let mu_k = integrate_over_polytope(mu, k)?.value;
    let pb = ProjectionBody::new(k, mu, m)?;
    let scale = f.eval(mu_k) / f.prime(mu_k);
    let lhs = nu_mass(nu, &pb.polar_star_body(scale), quad)?;
    let den = zhang_denominator(k, mu, nu)?;
    let top = f.eval(mu_k);
    let dm1 = d as i32 - 1;
    let (j, _) = adaptive(|t| f.inv(top * t) * (1.0 - t).powi(dm1), 0.0, 1.0, 1e-13, 0.0)?;
    let rhs = den / (d as f64 * j);
    let weak = den / mu_k;
    let tol = zhang_tolerance(mu, nu, quad);
    let mut r = VerifyReport::new("general_zhang");
    r.lhs = lhs.value;
    r.rhs = rhs;
    r.ratio = lhs.value / rhs;
    r.bound = 1.0;
    r.tolerance = tol;
    r.margin = r.ratio - 1.0;
    let weak_ok = lhs.value >= weak * (1.0 - tol);
    r.pass = r.ratio >= 1.0 - tol && weak_ok;
    r.samples = quad.len();
    Ok(r.note(format!("F={}, nm∫F^-1[F(μK)t](1-t)^(nm-1) = {}, simplified bound {weak}", f.name, d as f64 * j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(blocks: Vec<Vec<f64>>) -> MDirection {
        MDirection::normalized(blocks).unwrap()
    }

    #[test]
    fn rogers_shephard_m1() {
        let r = rogers_shephard_check(&Polytope::simplex(2), 1, None).unwrap();
        assert!((r.ratio - 6.0).abs() < 1e-9 && r.pass);
        let r = rogers_shephard_check(&Polytope::cube(2), 1, None).unwrap();
        assert!((r.ratio - 4.0).abs() < 1e-9 && r.pass);
    }

    #[test]
    fn zhang_triangle_and_square() {
        let leb = WeightedMeasure::lebesgue(2);
        let tri = Polytope::simplex(2);
        let pb = ProjectionBody::new(&tri, &leb, 1).unwrap();
        let q = polar_sphere(&pb, 0).unwrap();
        let r = zhang_check(&tri, &leb, 0.5, std::slice::from_ref(&leb), &q).unwrap();
        assert!((r.ratio - 6.0).abs() < 1e-9, "{r:?}");
        assert!(r.pass);
        let sq = Polytope::cube(2);
        let q = polar_sphere(&ProjectionBody::new(&sq, &leb, 1).unwrap(), 0).unwrap();
        let r = zhang_check(&sq, &leb, 0.5, std::slice::from_ref(&leb), &q).unwrap();
        assert!(r.margin > 1e-2, "{r:?}");
    }

    #[test]
    fn general_zhang_reduces_to_s_form() {
        let leb = WeightedMeasure::lebesgue(2);
        let sq = Polytope::cube(2);
        let q = polar_sphere(&ProjectionBody::new(&sq, &leb, 1).unwrap(), 0).unwrap();
        let a = zhang_check(&sq, &leb, 0.5, std::slice::from_ref(&leb), &q).unwrap();
        let b = general_zhang_check(&sq, &leb, &ConcavityF::power(0.5).unwrap(), std::slice::from_ref(&leb), &q).unwrap();
        assert!((a.ratio / a.bound - b.ratio).abs() < 1e-9, "{} {}", a.ratio / a.bound, b.ratio);
    }

    #[test]
    fn chain_triangle_equality_and_square_strict() {
        let leb = WeightedMeasure::lebesgue(2);
        let spec = ChainSpec {
            concavity: ChainConcavity::S(0.5),
            p_list: vec![1.0, 2.0],
            directions: direction_mesh(2, 1, 12, 0).unwrap(),
        };
        let r = chain_check(&Polytope::simplex(2), &leb, &spec).unwrap();
        assert!(r.pass && r.margin.abs() < 1e-6, "{}", r.margin);
        let e1 = ChainSpec { directions: vec![dir(vec![vec![1.0, 0.0]])], ..spec };
        let r = chain_check(&Polytope::cube(2), &leb, &e1).unwrap();
        assert!(r.pass && r.margin > 1e-3, "{}", r.margin);
    }

    #[test]
    fn chain_rejects_bad_specs() {
        let leb = WeightedMeasure::lebesgue(2);
        let dirs = direction_mesh(2, 1, 4, 0).unwrap();
        for p_list in [vec![2.0, 1.0], vec![0.0, 1.0], vec![-1.0]] {
            let spec = ChainSpec { concavity: ChainConcavity::S(0.5), p_list, directions: dirs.clone() };
            assert!(chain_check(&Polytope::cube(2), &leb, &spec).is_err());
        }
        let gauss = WeightedMeasure::with_density(crate::Density::gaussian(2, 1.0).unwrap());
        let spec = ChainSpec { concavity: ChainConcavity::S(0.5), p_list: vec![1.0], directions: dirs };
        let e = chain_check(&Polytope::cube(2), &gauss, &spec).unwrap_err();
        assert!(e.to_string().contains("spot-check"), "{e}");
    }
}
