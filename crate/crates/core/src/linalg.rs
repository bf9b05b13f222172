//! Small dense vector helpers. Points are plain `&[f64]` slices; dimensions
//! here never exceed a handful, so nothing is vectorised.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| x * c).collect()
}

/// `a + c * b`
#[inline]
pub fn axpy(a: &[f64], c: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    let k = points.len() as f64;
    c.iter_mut().for_each(|x| *x /= k);
    c
}

/// Solves the square system `rows * x = rhs`; `None` when (numerically) singular.
pub fn solve(rows: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    let x = lu.solve(&DVector::from_column_slice(rhs))?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

pub fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

/// Orthonormal basis (n-1 vectors) of the hyperplane orthogonal to the unit vector `u`.
pub fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    // skip the axis most aligned with u; the rest stay independent of it
    let skip = (0..n)
        .max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for axis in (0..n).filter(|&i| i != skip) {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        let c = dot(&v, u);
        v = axpy(&v, -c, u);
        for b in &basis {
            let c = dot(&v, b);
            v = axpy(&v, -c, b);
        }
        let l = norm(&v);
        basis.push(scale(&v, 1.0 / l));
    }
    basis
}

/// Numerical rank of a set of vectors (rows) via SVD with a relative cutoff.
pub fn rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let d = rows[0].len();
    if d == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax.max(1.0)).count()
}

/// Normal of the hyperplane through `d` affinely independent points in R^d
/// (generalised cross product of the edge vectors). Not normalised.
pub fn hyperplane_normal(points: &[&[f64]]) -> Vec<f64> {
    let d = points[0].len();
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, points[0])).collect();
    let mut normal = vec![0.0; d];
    for (j, nj) in normal.iter_mut().enumerate() {
        let minor: Vec<Vec<f64>> = edges
            .iter()
            .map(|e| {
                e.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *nj = sign * determinant(&minor);
    }
    normal
}
