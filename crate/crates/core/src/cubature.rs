//! Cubature on simplices by collapsed (Duffy) tensor Gauss-Jacobi rules.
//!
//! Axis k of the unit cube carries the Jacobian factor (1-u_k)^(d-1-k), which is
//! absorbed into a Gauss-Jacobi weight; a rule with `L` points per axis is
//! exact for polynomials of total degree 2L-1.

use crate::linalg::{determinant, sub};
use crate::quadrature::gauss_jacobi;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Points of the reference simplex {x >= 0, Σx <= 1} (cartesian) with weights
/// summing to 1/d!.
#[derive(Debug)]
pub struct SimplexRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

type Cache = Mutex<HashMap<(usize, usize), Arc<SimplexRule>>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn simplex_rule(d: usize, levels: usize) -> Arc<SimplexRule> {
    if let Some(r) = cache().lock().unwrap().get(&(d, levels)) {
        return r.clone();
    }
    let rule = if d == 0 {
        SimplexRule { points: vec![vec![]], weights: vec![1.0] }
    } else {
        // per-axis rules on [0,1] with weight (1-u)^(d-1-k)
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
            .map(|k| {
                let a = (d - 1 - k) as f64;
                let r = gauss_jacobi(levels, a, 0.0);
                let s = 0.5f64.powf(a + 1.0);
                (
                    r.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(),
                    r.weights.iter().map(|w| w * s).collect(),
                )
            })
            .collect();
        let mut points = Vec::with_capacity(levels.pow(d as u32));
        let mut weights = Vec::with_capacity(levels.pow(d as u32));
        let mut idx = vec![0usize; d];
        loop {
            let mut x = vec![0.0; d];
            let mut rem = 1.0;
            let mut w = 1.0;
            for k in 0..d {
                let u = axes[k].0[idx[k]];
                w *= axes[k].1[idx[k]];
                x[k] = rem * u;
                rem *= 1.0 - u;
            }
            points.push(x);
            weights.push(w);
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] < levels {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == d {
                    break;
                }
            }
            if k == d {
                break;
            }
        }
        SimplexRule { points, weights }
    };
    let rule = Arc::new(rule);
    cache().lock().unwrap().insert((d, levels), rule.clone());
    rule
}

/// d-volume of the simplex spanned by `verts` (d+1 points in R^n, n >= d),
/// via the Gram determinant of the edge vectors.
pub fn simplex_measure(verts: &[Vec<f64>]) -> f64 {
    let d = verts.len() - 1;
    if d == 0 {
        return 1.0;
    }
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| sub(v, &verts[0])).collect();
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    if edges[0].len() == d {
        return determinant(&edges).abs() / fact;
    }
    let gram: Vec<Vec<f64>> = edges
        .iter()
        .map(|a| edges.iter().map(|b| crate::linalg::dot(a, b)).collect())
        .collect();
    determinant(&gram).max(0.0).sqrt() / fact
}

/// `∫_S f` over the simplex `verts` with the collapsed rule of `levels` points per axis.
pub fn integrate_simplex<F: FnMut(&[f64]) -> f64>(verts: &[Vec<f64>], levels: usize, mut f: F) -> f64 {
    let d = verts.len() - 1;
    let vol = simplex_measure(verts);
    if vol == 0.0 {
        return 0.0;
    }
    let rule = simplex_rule(d, levels);
    let n = verts[0].len();
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| sub(v, &verts[0])).collect();
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    let mut x = vec![0.0; n];
    let mut acc = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        x.copy_from_slice(&verts[0]);
        for (k, e) in edges.iter().enumerate() {
            for j in 0..n {
                x[j] += p[k] * e[j];
            }
        }
        acc += w * f(&x);
    }
    acc * vol * fact
}
