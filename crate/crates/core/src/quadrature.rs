//! One-dimensional quadrature: cached Gauss rules, adaptive Gauss-Kronrod, and
//! a helper for integrands carrying an algebraic endpoint singularity.

use crate::error::{numeric, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of a rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type Cache = Mutex<HashMap<(usize, u64, u64), Arc<Rule>>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre rule with `n` points (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    let key = (n, u64::MAX, u64::MAX);
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let r = Arc::new(Rule { nodes, weights });
    cache().lock().unwrap().insert(key, r.clone());
    r
}

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b on [-1, 1] (Golub-Welsch).
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Arc<Rule> {
    assert!(a > -1.0 && b > -1.0 && n > 0);
    if a == 0.0 && b == 0.0 {
        return gauss_legendre(n);
    }
    let key = (n, a.to_bits(), b.to_bits());
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let ab = a + b;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let den = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        *d = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / den
        };
    }
    for (j, o) in off.iter_mut().enumerate() {
        let k = (j + 1) as f64;
        let beta = if j == 0 {
            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + a) * (k + b) * (k + ab)
                / ((2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0))
        };
        *o = beta.sqrt();
    }
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = diag[i];
        if i + 1 < n {
            jm[(i, i + 1)] = off[i];
            jm[(i + 1, i)] = off[i];
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let r = Arc::new(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    });
    cache().lock().unwrap().insert(key, r.clone());
    r
}

/// `∫_a^b f` with an `n`-point Gauss-Legendre rule.
pub fn legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let r = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// `∫_a^b f(t) (t-a)^alpha dt` with an `n`-point Gauss-Jacobi rule.
pub fn jacobi_left<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, alpha: f64, n: usize) -> f64 {
    let r = gauss_jacobi(n, 0.0, alpha);
    let h = 0.5 * (b - a);
    let scale = h.powf(alpha + 1.0);
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(x, w)| w * f(a + h * (1.0 + x)))
        .sum::<f64>()
        * scale
}

/// `∫_a^b f(t) (b-t)^alpha dt` with an `n`-point Gauss-Jacobi rule.
pub fn jacobi_right<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, alpha: f64, n: usize) -> f64 {
    let r = gauss_jacobi(n, alpha, 0.0);
    let h = 0.5 * (b - a);
    let scale = h.powf(alpha + 1.0);
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(x, w)| w * f(a + h * (1.0 + x)))
        .sum::<f64>()
        * scale
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) with global error control.
/// Returns the estimate and its error bound; fails when the bound stays above
/// `max(abs_tol, rel_tol * |I|)` after the subdivision budget is spent.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    segs.push((a, b, v, e));
    for _ in 0..2000 {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return numeric("non-finite integrand in adaptive quadrature");
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
    let total: f64 = segs.iter().map(|s| s.2).sum();
    let err: f64 = segs.iter().map(|s| s.3).sum();
    if err <= 1e3 * abs_tol.max(rel_tol * total.abs()) {
        return Ok((total, err));
    }
    numeric(format!("adaptive quadrature did not converge (error {err:e})"))
}

/// `∫_a^b f(t) (t-a)^alpha dt` for smooth `f` and `alpha > -1`.
///
/// A Gauss-Jacobi panel absorbs the singular factor on [a, a+h]; h is halved
/// until the 20- and 40-point panels agree, and the rest goes to [`adaptive`].
pub fn power_singular<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, alpha: f64, rel_tol: f64) -> Result<f64> {
    let mut h = b - a;
    let mut panel = None;
    for _ in 0..60 {
        let i1 = jacobi_left(&f, a, a + h, alpha, 20);
        let i2 = jacobi_left(&f, a, a + h, alpha, 40);
        if (i1 - i2).abs() <= rel_tol * i2.abs().max(1e-300) || (i1 - i2).abs() < 1e-15 {
            panel = Some(i2);
            break;
        }
        h *= 0.5;
    }
    let Some(p) = panel else {
        return numeric("singular panel did not converge");
    };
    if h >= b - a {
        return Ok(p);
    }
    let (rest, _) = adaptive(
        |t| f(t) * (t - a).powf(alpha),
        a + h,
        b,
        rel_tol,
        1e-15 * p.abs(),
    )?;
    Ok(p + rest)
}


/// Polynomial interpolant on `N+1` Chebyshev points of the second kind in
/// `[a, b]`, evaluated with the barycentric formula.
#[derive(Debug, Clone)]
pub struct ChebInterp {
    pub a: f64,
    pub b: f64,
    /// Nodes `cos(kπ/N)` on [-1, 1], `k = 0..=N`.
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn cheb_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|k| (std::f64::consts::PI * k as f64 / n as f64).cos()).collect()
}

impl ChebInterp {
    fn to_unit(&self, t: f64) -> f64 {
        (2.0 * t - self.a - self.b) / (self.b - self.a)
    }

    pub fn degree(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = self.to_unit(t);
        let n = self.xs.len() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=n {
            let d = x - self.xs[k];
            if d == 0.0 {
                return self.ys[k];
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                w *= 0.5;
            }
            num += w / d * self.ys[k];
            den += w / d;
        }
        num / den
    }
}

/// Chebyshev interpolant of `f` on `[a, b]`, doubling the nested point set
/// from 5 up to `max_points` until the previous interpolant predicts the new
/// samples within `rel_tol * scale`. Fails when the last change still
/// exceeds `1e-6 * scale`.
pub fn cheb_adaptive<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    scale: f64,
    rel_tol: f64,
    max_points: usize,
) -> Result<ChebInterp> {
    let map = |x: f64| 0.5 * (a + b) + 0.5 * (b - a) * x;
    let mut n = 4;
    let xs = cheb_nodes(n);
    let ys = xs.iter().map(|&x| f(map(x))).collect::<Result<Vec<_>>>()?;
    let mut cur = ChebInterp { a, b, xs, ys };
    loop {
        let n2 = 2 * n;
        let xs2 = cheb_nodes(n2);
        let mut ys2 = vec![0.0; n2 + 1];
        let mut err: f64 = 0.0;
        let mut mag = cur.ys.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
        for k in 0..=n2 {
            if k % 2 == 0 {
                ys2[k] = cur.ys[k / 2];
            } else {
                let t = map(xs2[k]);
                let v = f(t)?;
                err = err.max((v - cur.eval(t)).abs());
                mag = mag.max(v.abs());
                ys2[k] = v;
            }
        }
        cur = ChebInterp { a, b, xs: xs2, ys: ys2 };
        n = n2;
        let s = scale.max(mag);
        if err <= rel_tol * s {
            return Ok(cur);
        }
        if n + 1 >= max_points {
            if err <= 1e-6 * s {
                return Ok(cur);
            }
            return numeric(format!("interpolant did not converge on [{a}, {b}] (change {err:e})"));
        }
    }
}

/// Chebyshev interpolant on a fixed number of points (for noisy samples).
pub fn cheb_fixed<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, n: usize) -> Result<ChebInterp> {
    let xs = cheb_nodes(n.max(1));
    let ys = xs
        .iter()
        .map(|&x| f(0.5 * (a + b) + 0.5 * (b - a) * x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChebInterp { a, b, xs, ys })
}

/// Runs an `n`-point rule for n = 16, 32, ..., 1024 until two consecutive
/// values agree to `1e-13` relative (or `1e-15 * abs_scale`). Fails when the
/// last relative change exceeds 1e-6.
pub fn gauss_converged<Q: FnMut(usize) -> f64>(mut q: Q, abs_scale: f64) -> Result<f64> {
    let mut prev = q(16);
    let mut n = 16;
    while n < 1024 {
        n *= 2;
        let cur = q(n);
        let d = (cur - prev).abs();
        if d <= 1e-13 * cur.abs() || d <= 1e-15 * abs_scale {
            return Ok(cur);
        }
        if n == 1024 {
            if d <= 1e-6 * cur.abs().max(1e-300) {
                return Ok(cur);
            }
            return numeric(format!("Gauss rule did not converge (change {d:e})"));
        }
        prev = cur;
    }
    Ok(prev)
}

/// `∫_0^1 f(s) log s ds` via `s = w^6` and Gauss-Legendre refinement.
pub fn log_weighted_unit<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    let scale = (0..=8).map(|i| f(i as f64 / 8.0).abs()).fold(0.0, f64::max);
    gauss_converged(
        |n| {
            legendre(
                |w| {
                    if w <= 0.0 {
                        return 0.0;
                    }
                    let s = w.powi(6);
                    36.0 * w.powi(5) * w.ln() * f(s)
                },
                0.0,
                1.0,
                n,
            )
        },
        scale,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 12, 33] {
            let deg = 2 * n - 1;
            let v = legendre(|x| x.powi(deg as i32 - 1) + 1.0, 0.0, 1.0, n);
            assert!((v - (1.0 / deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
        let r = gauss_legendre(20);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weights_match_beta_function() {
        // ∫_0^1 t^{-1/2} (1-t)^2 dt = B(1/2, 3) = 16/15
        let v = jacobi_left(|t| (1.0 - t).powi(2), 0.0, 1.0, -0.5, 6);
        assert!((v - 16.0 / 15.0).abs() < 1e-13, "{v}");
        let w = jacobi_right(|t| t, 0.0, 1.0, 1.5, 6);
        // ∫_0^1 t (1-t)^{3/2} dt = B(2, 5/2) = 4/35
        assert!((w - 4.0 / 35.0).abs() < 1e-13, "{w}");
    }

    #[test]
    fn adaptive_handles_kinks() {
        let (v, _) = adaptive(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12, 1e-14).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn chebyshev_interpolates_polynomials_exactly() {
        let c = cheb_adaptive(|t| Ok(1.0 - 3.0 * t + t * t * t), 0.5, 2.0, 1.0, 1e-12, 129).unwrap();
        assert_eq!(c.degree(), 8);
        assert!((c.eval(1.3) - (1.0 - 3.9 + 1.3f64.powi(3))).abs() < 1e-13);
        let e = cheb_adaptive(|t: f64| Ok(t.exp()), 0.0, 1.0, 1.0, 1e-12, 129).unwrap();
        assert!((e.eval(0.77) - 0.77f64.exp()).abs() < 1e-13);
        assert!(cheb_adaptive(|t: f64| Ok((t - 0.3).abs()), 0.0, 1.0, 1.0, 1e-12, 33).is_err());
    }

    #[test]
    fn log_weight() {
        // ∫_0^1 s log s ds = -1/4
        let v = log_weighted_unit(|s| s).unwrap();
        assert!((v + 0.25).abs() < 1e-12, "{v}");
    }

    #[test]
    fn power_singular_log_gamma() {
        // ∫_0^40 e^{-t} t^{-0.7} dt ≈ Γ(0.3)
        let v = power_singular(|t| (-t).exp(), 0.0, 40.0, -0.7, 1e-12).unwrap();
        let g = statrs::function::gamma::gamma(0.3);
        assert!((v - g).abs() < 1e-9 * g, "{v} {g}");
    }
}
