use crate::error::{domain, invalid, numeric, Result};
use crate::measure::ConcavityF;
use crate::quadrature::{adaptive, power_singular};
use statrs::function::gamma::{gamma, ln_gamma};

const QUAD_TOL: f64 = 1e-13;

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p <= -1.0 || p == 0.0 {
        return domain(format!("constant needs p in (-1, ∞) \\ {{0}} (got {p})"));
    }
    Ok(())
}

/// `Γ(a+k+1) / (Γ(a+1) Γ(k+1))` for `a, k > -1`.
pub fn gen_binom(a: f64, k: f64) -> Result<f64> {
    if !(a > -1.0) || !(k > -1.0) || !a.is_finite() || !k.is_finite() {
        return domain(format!("gen_binom needs a, k > -1 (got {a}, {k})"));
    }
    if k.fract() == 0.0 && k <= 170.0 {
        // exact product (a+1)(a+2)...(a+k)/k!
        return Ok((1..=k as u32).map(|j| (a + j as f64) / j as f64).product());
    }
    let top = a + k + 1.0;
    if top > 0.0 {
        return Ok((ln_gamma(top) - ln_gamma(a + 1.0) - ln_gamma(k + 1.0)).exp());
    }
    // top in (-1, 0]: Γ(top) is negative or a pole
    if top == 0.0 {
        return domain("gen_binom argument hits a Gamma pole");
    }
    let v = gamma(top) / (gamma(a + 1.0) * gamma(k + 1.0));
    if !(v > 0.0) {
        return domain(format!("gen_binom({a}, {k}) = {v} is not positive"));
    }
    Ok(v)
}

/// Berwald constant `C(p, μ, K)` of an F-concave measure with `μ(K) = mu_k`.
pub fn berwald_const_f(f: &ConcavityF, p: f64, mu_k: f64) -> Result<f64> {
    check_p(p)?;
    if !(mu_k > 0.0) {
        return invalid("μ(K) must be positive");
    }
    let top = f.eval(mu_k);
    let inner = |t: f64| f.inv(top * (1.0 - t));
    let bracket = if p > 0.0 {
        p / mu_k * power_singular(inner, 0.0, 1.0, p - 1.0, QUAD_TOL)?
    } else {
        // (F^{-1}[F(μK)(1-t)] - μK) = O(t): integrate (..)/t against t^p
        let q = |t: f64| (inner(t) - mu_k) / t;
        p / mu_k * power_singular(q, 0.0, 1.0, p, QUAD_TOL)? + 1.0
    };
    if !(bracket > 0.0) || !bracket.is_finite() {
        return numeric(format!("Berwald integral gave a nonpositive bracket {bracket}"));
    }
    Ok(bracket.powf(-1.0 / p))
}

/// `C_Q(p, μ, K)`; `Γ(1+p)^{-1/p}` in closed form when `Q = log`.
pub fn berwald_const_q(q: &ConcavityF, p: f64, mu_k: f64) -> Result<f64> {
    check_p(p)?;
    if q.is_log() {
        return Ok((-ln_gamma(1.0 + p) / p).exp());
    }
    berwald_const_q_numeric(q, p, mu_k)
}

/// `C_Q` by quadrature on `(0, ∞)`, truncated where `Q^{-1}[Q(μK) - t]`
/// drops below `1e-16 μK`.
pub fn berwald_const_q_numeric(q: &ConcavityF, p: f64, mu_k: f64) -> Result<f64> {
    check_p(p)?;
    if !(mu_k > 0.0) {
        return invalid("μ(K) must be positive");
    }
    let top = q.eval(mu_k);
    let inner = |t: f64| q.inv(top - t);
    let mut end = 1.0;
    while inner(end) > 1e-16 * mu_k {
        end *= 2.0;
        if end > 1e8 {
            return numeric("Q^{-1}[Q(μK) - t] does not decay; the integral diverges");
        }
    }
    let bracket = if p > 0.0 {
        let head = power_singular(inner, 0.0, 1.0_f64.min(end), p - 1.0, QUAD_TOL)?;
        let tail = if end > 1.0 {
            adaptive(|t| inner(t) * t.powf(p - 1.0), 1.0, end, QUAD_TOL, 0.0)?.0
        } else {
            0.0
        };
        p / mu_k * (head + tail)
    } else {
        let qf = |t: f64| (inner(t) - mu_k) / t;
        let head = power_singular(qf, 0.0, 1.0, p, QUAD_TOL)?;
        let mid = adaptive(|t| (inner(t) - mu_k) * t.powf(p - 1.0), 1.0, end.max(1.0), QUAD_TOL, 0.0)?.0;
        // ∫_end^∞ (-μK) t^{p-1} dt = μK end^p / p
        let tail = mu_k * end.max(1.0).powf(p) / p;
        p / mu_k * (head + mid + tail)
    };
    if !(bracket > 0.0) || !bracket.is_finite() {
        return numeric(format!("C_Q integral gave a nonpositive bracket {bracket}"));
    }
    Ok(bracket.powf(-1.0 / p))
}
