//! Convex polytopes in H-representation with cached vertices, facets and a
//! simplicial decomposition.
//!
//! Construction normalises and deduplicates halfspaces, finds a Chebyshev
//! centre, prunes redundant halfspaces by LP, enumerates vertices from
//! n-subsets of the remaining hyperplanes and fans every face from its vertex
//! centroid. Everything is immutable afterwards.

use crate::error::{invalid, Error, Result};
use crate::linalg::{centroid, dot, norm, rank, scale, solve, sub};
use crate::lp::{maximize, LpOutcome};
use crate::oracle::SphereQuadrature;
use itertools::Itertools;
use std::sync::Arc;

/// Predicate tolerance for incidence and feasibility tests.
pub const GEOM_TOL: f64 = 1e-9;

/// `{x : <normal, x> <= offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Normalises `a . x <= b`; a zero normal is rejected.
    pub fn new(a: &[f64], b: f64) -> Result<Self> {
        let l = norm(a);
        if !(l > 1e-300) || !l.is_finite() || !b.is_finite() {
            return invalid("halfspace normal must be finite and nonzero");
        }
        Ok(Halfspace { normal: scale(a, 1.0 / l), offset: b / l })
    }

    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

#[derive(Debug, Clone)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    /// (n-1)-dimensional Hausdorff measure (1 for the endpoints of an interval).
    pub area: f64,
    pub vertices: Vec<Vec<f64>>,
    /// Decomposition into (n-1)-simplices embedded in R^n.
    pub simplices: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    simplices: Vec<Vec<Vec<f64>>>,
    volume: f64,
    center: Vec<f64>,
    inradius: f64,
}

impl Polytope {
    /// Builds a body from halfspaces; fails when the set is unbounded or has empty interior.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Polytope> {
        match Self::build(dim, halfspaces, true)? {
            Some(p) => Ok(p),
            None => invalid("halfspace system has empty interior"),
        }
    }

    /// Convenience wrapper over raw `(a, b)` pairs.
    pub fn from_inequalities(dim: usize, rows: &[(Vec<f64>, f64)]) -> Result<Polytope> {
        let hs = rows
            .iter()
            .map(|(a, b)| Halfspace::new(a, *b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_halfspaces(dim, hs)
    }

    /// Convex hull of a point cloud (brute-force facet search).
    pub fn from_vertices(points: &[Vec<f64>]) -> Result<Polytope> {
        if points.is_empty() {
            return invalid("empty vertex list");
        }
        let n = points[0].len();
        if n == 0 || points.iter().any(|p| p.len() != n || p.iter().any(|x| !x.is_finite())) {
            return invalid("vertices must be finite points of equal positive dimension");
        }
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for p in points {
            if !pts.iter().any(|q| crate::linalg::dist(p, q) < GEOM_TOL) {
                pts.push(p.clone());
            }
        }
        let diffs: Vec<Vec<f64>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
        if rank(&diffs, 1e-10) < n {
            return invalid("vertices do not span a full-dimensional body");
        }
        let scale_len = pts.iter().map(|p| norm(p)).fold(1.0, f64::max);
        let tol = GEOM_TOL * scale_len;
        let mut hs: Vec<Halfspace> = Vec::new();
        for subset in (0..pts.len()).combinations(n) {
            let refs: Vec<&[f64]> = subset.iter().map(|&i| pts[i].as_slice()).collect();
            let a = crate::linalg::hyperplane_normal(&refs);
            if norm(&a) < 1e-12 * scale_len.powi(n as i32 - 1) {
                continue;
            }
            let Ok(h) = Halfspace::new(&a, dot(&a, refs[0])) else { continue };
            let (mut above, mut below) = (false, false);
            for p in &pts {
                let s = h.slack(p);
                if s < -tol {
                    above = true;
                } else if s > tol {
                    below = true;
                }
                if above && below {
                    break;
                }
            }
            let cand = match (above, below) {
                (false, _) => h,
                (true, false) => Halfspace { normal: scale(&h.normal, -1.0), offset: -h.offset },
                (true, true) => continue,
            };
            if !hs.iter().any(|g| {
                crate::linalg::dist(&g.normal, &cand.normal) < 1e-9 && (g.offset - cand.offset).abs() < tol
            }) {
                hs.push(cand);
            }
        }
        Self::from_halfspaces(n, hs)
    }

    /// Standard simplex conv{0, e_1, ..., e_n}.
    pub fn simplex(n: usize) -> Polytope {
        let mut rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|i| {
                let mut a = vec![0.0; n];
                a[i] = -1.0;
                (a, 0.0)
            })
            .collect();
        rows.push((vec![1.0; n], 1.0));
        Self::from_inequalities(n, &rows).expect("standard simplex")
    }

    /// Unit cube [0, 1]^n.
    pub fn cube(n: usize) -> Polytope {
        Self::box_shape(&vec![0.0; n], &vec![1.0; n]).expect("unit cube")
    }

    /// Axis-aligned box [lo, hi].
    pub fn box_shape(lo: &[f64], hi: &[f64]) -> Result<Polytope> {
        let n = lo.len();
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut a = vec![0.0; n];
            a[i] = 1.0;
            rows.push((a.clone(), hi[i]));
            a[i] = -1.0;
            rows.push((a, -lo[i]));
        }
        Self::from_inequalities(n, &rows)
    }

    /// Cross-polytope conv{±e_i}.
    pub fn cross(n: usize) -> Polytope {
        let rows: Vec<(Vec<f64>, f64)> = (0..1usize << n)
            .map(|mask| {
                let a = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                (a, 1.0)
            })
            .collect();
        Self::from_inequalities(n, &rows).expect("cross-polytope")
    }

    /// Named fixtures: `simplex`, `cube`, `cross`.
    pub fn named(name: &str, dim: usize) -> Result<Polytope> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        match name {
            "simplex" => Ok(Self::simplex(dim)),
            "cube" => Ok(Self::cube(dim)),
            "cross" => Ok(Self::cross(dim)),
            other => invalid(format!("unknown named body '{other}'")),
        }
    }

    /// Internal constructor. `Ok(None)` means empty or measure zero.
    pub(crate) fn build(dim: usize, raw: Vec<Halfspace>, check_bounded: bool) -> Result<Option<Polytope>> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        if raw.iter().any(|h| h.normal.len() != dim) {
            return invalid("halfspace dimension mismatch");
        }
        if raw.iter().any(|h| (norm(&h.normal) - 1.0).abs() > 1e-12 || !h.offset.is_finite()) {
            return invalid("halfspace normals must be unit vectors with finite offsets");
        }
        // duplicate normals: keep the tightest offset
        let mut hs: Vec<Halfspace> = Vec::with_capacity(raw.len());
        for h in raw {
            if let Some(g) = hs.iter_mut().find(|g| crate::linalg::dist(&g.normal, &h.normal) < 1e-12) {
                g.offset = g.offset.min(h.offset);
            } else {
                hs.push(h);
            }
        }
        if hs.len() < dim + 1 {
            if check_bounded {
                return invalid("fewer than n+1 halfspaces cannot bound a body");
            }
            return Ok(None);
        }
        let scale_b = hs.iter().map(|h| h.offset.abs()).fold(1.0, f64::max);
        let tol = GEOM_TOL * scale_b;

        // Chebyshev centre: max t s.t. a.x + t <= b, t <= cap
        let mut rows: Vec<Vec<f64>> = hs
            .iter()
            .map(|h| {
                let mut r = h.normal.clone();
                r.push(1.0);
                r
            })
            .collect();
        let mut rhs: Vec<f64> = hs.iter().map(|h| h.offset).collect();
        let mut cap = vec![0.0; dim];
        cap.push(1.0);
        rows.push(cap);
        rhs.push(1e6 * scale_b);
        let mut obj = vec![0.0; dim];
        obj.push(1.0);
        let (center, inradius) = match maximize(&obj, &rows, &rhs)? {
            LpOutcome::Optimal { x, value } => (x[..dim].to_vec(), value),
            LpOutcome::Infeasible => return Ok(None),
            LpOutcome::Unbounded => return Err(Error::Numeric("Chebyshev LP unbounded".into())),
        };
        if inradius <= 1e-10 * scale_b {
            return Ok(None);
        }

        // shifted system a.z <= b - a.c (all positive)
        let shifted: Vec<f64> = hs.iter().map(|h| h.slack(&center)).collect();
        if check_bounded {
            let arows: Vec<Vec<f64>> = hs.iter().map(|h| h.normal.clone()).collect();
            for k in 0..dim {
                for sgn in [1.0, -1.0] {
                    let mut c = vec![0.0; dim];
                    c[k] = sgn;
                    if let LpOutcome::Unbounded = maximize(&c, &arows, &shifted)? {
                        return invalid("halfspace system is unbounded");
                    }
                }
            }
        }

        // redundancy pruning
        let mut keep: Vec<bool> = vec![true; hs.len()];
        for i in 0..hs.len() {
            let mut arows: Vec<Vec<f64>> = Vec::with_capacity(hs.len());
            let mut b: Vec<f64> = Vec::with_capacity(hs.len());
            for j in 0..hs.len() {
                if j != i && keep[j] {
                    arows.push(hs[j].normal.clone());
                    b.push(shifted[j]);
                }
            }
            arows.push(hs[i].normal.clone());
            b.push(shifted[i] + 1.0);
            if let LpOutcome::Optimal { value, .. } = maximize(&hs[i].normal, &arows, &b)? {
                if value <= shifted[i] + tol {
                    keep[i] = false;
                }
            }
        }
        let hs: Vec<Halfspace> = hs.into_iter().zip(&keep).filter(|p| *p.1).map(|p| p.0).collect();
        let shifted: Vec<f64> = hs.iter().map(|h| h.slack(&center)).collect();

        // vertices from n-subsets (computed in shifted coordinates)
        let mut verts: Vec<Vec<f64>> = Vec::new();
        for subset in (0..hs.len()).combinations(dim) {
            let rows: Vec<&[f64]> = subset.iter().map(|&i| hs[i].normal.as_slice()).collect();
            let rhs: Vec<f64> = subset.iter().map(|&i| shifted[i]).collect();
            let Some(z) = solve(&rows, &rhs) else { continue };
            if hs.iter().zip(&shifted).all(|(h, &b)| dot(&h.normal, &z) <= b + tol)
                && !verts.iter().any(|v| crate::linalg::dist(v, &z) < tol)
            {
                verts.push(z);
            }
        }
        if verts.len() < dim + 1 {
            return Ok(None);
        }
        let verts: Vec<Vec<f64>> = verts.iter().map(|z| crate::linalg::add(z, &center)).collect();

        // facet incidences
        let incid: Vec<Vec<usize>> = hs
            .iter()
            .map(|h| (0..verts.len()).filter(|&v| h.slack(&verts[v]).abs() <= tol).collect())
            .collect();
        let apex = centroid(&verts);
        let mut facets = Vec::new();
        let mut simplices = Vec::new();
        let mut kept_hs = Vec::new();
        for (fi, h) in hs.iter().enumerate() {
            let ids = &incid[fi];
            if affine_dim(&verts, ids) + 1 != dim {
                continue;
            }
            let fsimp = triangulate_face(&verts, ids, dim - 1, &incid);
            let area: f64 = if dim == 1 {
                1.0
            } else {
                fsimp.iter().map(|s| crate::cubature::simplex_measure(s)).sum()
            };
            for s in &fsimp {
                let mut full = s.clone();
                full.push(apex.clone());
                simplices.push(full);
            }
            facets.push(Facet {
                normal: h.normal.clone(),
                offset: h.offset,
                area,
                vertices: ids.iter().map(|&v| verts[v].clone()).collect(),
                simplices: fsimp,
            });
            kept_hs.push(h.clone());
        }
        let volume: f64 = simplices.iter().map(|s| crate::cubature::simplex_measure(s)).sum();
        if volume <= 0.0 {
            return Ok(None);
        }
        Ok(Some(Polytope {
            dim,
            halfspaces: kept_hs,
            vertices: verts,
            facets,
            simplices,
            volume,
            center,
            inradius,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Full-dimensional simplices covering the polytope without overlap.
    pub fn simplices(&self) -> &[Vec<Vec<f64>>] {
        &self.simplices
    }

    /// Chebyshev centre (strictly interior).
    pub fn interior_point(&self) -> &[f64] {
        &self.center
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area).sum()
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= -tol)
    }

    /// Radial function of `P - base` in direction `u`.
    pub fn radial(&self, base: &[f64], u: &[f64]) -> Result<f64> {
        if self.halfspaces.iter().any(|h| h.slack(base) <= GEOM_TOL) {
            return invalid("radial base point must be interior");
        }
        Ok(self.radial_unchecked(base, u))
    }

    /// Radial function without the interiority check; 0 on the boundary.
    pub fn radial_unchecked(&self, base: &[f64], u: &[f64]) -> f64 {
        let mut r = f64::INFINITY;
        for h in &self.halfspaces {
            let c = dot(&h.normal, u);
            if c > 0.0 {
                r = r.min(h.slack(base).max(0.0) / c);
            }
        }
        r
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// `K ∩ (x_1 + K) ∩ ... ∩ (x_m + K)`; `None` when empty or of measure zero.
    pub fn intersect_translates(&self, shifts: &[Vec<f64>]) -> Result<Option<Polytope>> {
        if shifts.iter().any(|x| x.len() != self.dim) {
            return invalid("shift dimension mismatch");
        }
        if shifts.is_empty() || shifts.iter().all(|x| x.iter().all(|&c| c == 0.0)) {
            return Ok(Some(self.clone()));
        }
        let mut hs = self.halfspaces.clone();
        for x in shifts {
            for h in &self.halfspaces {
                hs.push(Halfspace { normal: h.normal.clone(), offset: h.offset + dot(&h.normal, x) });
            }
        }
        Self::build(self.dim, hs, false)
    }

    /// `x + P`, transforming cached data directly.
    pub fn translated(&self, x: &[f64]) -> Polytope {
        let sh = |p: &Vec<f64>| crate::linalg::add(p, x);
        Polytope {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset + dot(&h.normal, x) })
                .collect(),
            vertices: self.vertices.iter().map(sh).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    normal: f.normal.clone(),
                    offset: f.offset + dot(&f.normal, x),
                    area: f.area,
                    vertices: f.vertices.iter().map(sh).collect(),
                    simplices: f.simplices.iter().map(|s| s.iter().map(sh).collect()).collect(),
                })
                .collect(),
            simplices: self.simplices.iter().map(|s| s.iter().map(sh).collect()).collect(),
            volume: self.volume,
            center: sh(&self.center),
            inradius: self.inradius,
        }
    }

    /// `c P` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Polytope {
        assert!(c > 0.0);
        let sc = |p: &Vec<f64>| scale(p, c);
        let d = self.dim as i32;
        Polytope {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace { normal: h.normal.clone(), offset: h.offset * c })
                .collect(),
            vertices: self.vertices.iter().map(sc).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    normal: f.normal.clone(),
                    offset: f.offset * c,
                    area: f.area * c.powi(d - 1),
                    vertices: f.vertices.iter().map(sc).collect(),
                    simplices: f.simplices.iter().map(|s| s.iter().map(sc).collect()).collect(),
                })
                .collect(),
            simplices: self.simplices.iter().map(|s| s.iter().map(sc).collect()).collect(),
            volume: self.volume * c.powi(d),
            center: sc(&self.center),
            inradius: self.inradius * c,
        }
    }

    /// `-P`.
    pub fn reflected(&self) -> Polytope {
        let ng = |p: &Vec<f64>| scale(p, -1.0);
        Polytope {
            dim: self.dim,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace { normal: ng(&h.normal), offset: h.offset })
                .collect(),
            vertices: self.vertices.iter().map(ng).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    normal: ng(&f.normal),
                    offset: f.offset,
                    area: f.area,
                    vertices: f.vertices.iter().map(ng).collect(),
                    simplices: f.simplices.iter().map(|s| s.iter().map(ng).collect()).collect(),
                })
                .collect(),
            simplices: self.simplices.iter().map(|s| s.iter().map(ng).collect()).collect(),
            volume: self.volume,
            center: ng(&self.center),
            inradius: self.inradius,
        }
    }

    /// Image `T P`.
    pub fn apply_linear(&self, t: &LinearMap) -> Result<Polytope> {
        if t.dim() != self.dim {
            return invalid("linear map dimension mismatch");
        }
        let hs = self
            .halfspaces
            .iter()
            .map(|h| Halfspace::new(&t.apply_inverse_transpose(&h.normal), h.offset))
            .collect::<Result<Vec<_>>>()?;
        match Self::build(self.dim, hs, false)? {
            Some(p) => Ok(p),
            None => invalid("linear image lost full dimension"),
        }
    }

    /// Difference body `P + (-P)`.
    pub fn difference_body(&self) -> Result<Polytope> {
        let mut pts = Vec::with_capacity(self.vertices.len().pow(2));
        for v in &self.vertices {
            for w in &self.vertices {
                pts.push(sub(v, w));
            }
        }
        Self::from_vertices(&pts)
    }
}

fn affine_dim(verts: &[Vec<f64>], ids: &[usize]) -> usize {
    if ids.len() <= 1 {
        return 0;
    }
    let diffs: Vec<Vec<f64>> = ids[1..].iter().map(|&i| sub(&verts[i], &verts[ids[0]])).collect();
    rank(&diffs, 1e-9)
}

/// Fans the face spanned by `ids` (of affine dimension `k`) into k-simplices.
fn triangulate_face(verts: &[Vec<f64>], ids: &[usize], k: usize, incid: &[Vec<usize>]) -> Vec<Vec<Vec<f64>>> {
    match k {
        0 => vec![vec![verts[ids[0]].clone()]],
        1 => {
            // extreme pair along the segment direction
            let far = *ids
                .iter()
                .max_by(|&&a, &&b| {
                    crate::linalg::dist(&verts[a], &verts[ids[0]])
                        .total_cmp(&crate::linalg::dist(&verts[b], &verts[ids[0]]))
                })
                .unwrap();
            let dir = sub(&verts[far], &verts[ids[0]]);
            let lo = *ids
                .iter()
                .min_by(|&&a, &&b| dot(&verts[a], &dir).total_cmp(&dot(&verts[b], &dir)))
                .unwrap();
            let hi = *ids
                .iter()
                .max_by(|&&a, &&b| dot(&verts[a], &dir).total_cmp(&dot(&verts[b], &dir)))
                .unwrap();
            vec![vec![verts[lo].clone(), verts[hi].clone()]]
        }
        _ => {
            let pts: Vec<Vec<f64>> = ids.iter().map(|&i| verts[i].clone()).collect();
            let apex = centroid(&pts);
            let mut seen: Vec<Vec<usize>> = Vec::new();
            let mut out = Vec::new();
            for tight in incid {
                let sub_ids: Vec<usize> = ids.iter().copied().filter(|v| tight.contains(v)).collect();
                if sub_ids.len() < k || sub_ids.len() == ids.len() || seen.contains(&sub_ids) {
                    continue;
                }
                if affine_dim(verts, &sub_ids) + 1 != k {
                    continue;
                }
                seen.push(sub_ids.clone());
                for mut s in triangulate_face(verts, &sub_ids, k - 1, incid) {
                    s.push(apex.clone());
                    out.push(s);
                }
            }
            out
        }
    }
}

/// Invertible linear map of R^n.
#[derive(Debug, Clone)]
pub struct LinearMap {
    matrix: Vec<Vec<f64>>,
    inverse: Vec<Vec<f64>>,
    det_abs: f64,
}

impl LinearMap {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<LinearMap> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n || r.iter().any(|x| !x.is_finite())) {
            return invalid("linear map must be a finite square matrix");
        }
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
        let det = m.determinant();
        if det.abs() <= 1e-12 {
            return invalid("linear map is singular");
        }
        let inv = m.try_inverse().ok_or_else(|| Error::InvalidInput("linear map is singular".into()))?;
        let inverse = (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect();
        Ok(LinearMap { matrix, inverse, det_abs: det.abs() })
    }

    pub fn identity(n: usize) -> LinearMap {
        let m = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        LinearMap::new(m).unwrap()
    }

    pub fn diagonal(d: &[f64]) -> Result<LinearMap> {
        let n = d.len();
        LinearMap::new((0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn det_abs(&self) -> f64 {
        self.det_abs
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|r| dot(r, x)).collect()
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        self.inverse.iter().map(|r| dot(r, x)).collect()
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| self.matrix[i][j] * x[i]).sum()).collect()
    }

    pub fn apply_inverse_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| self.inverse[i][j] * x[i]).sum()).collect()
    }
}

/// Star body in R^d given by its radial function on unit vectors.
#[derive(Clone)]
pub struct StarBodyFn {
    pub dim: usize,
    pub radial: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for StarBodyFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StarBodyFn(dim={})", self.dim)
    }
}

impl StarBodyFn {
    pub fn new(dim: usize, radial: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        StarBodyFn { dim, radial: Arc::new(radial) }
    }

    /// Radial function of a polytope about an interior point.
    pub fn of_polytope(p: &Polytope, base: &[f64]) -> Result<Self> {
        if p.halfspaces().iter().any(|h| h.slack(base) <= GEOM_TOL) {
            return invalid("radial base point must be interior");
        }
        let p = p.clone();
        let base = base.to_vec();
        Ok(StarBodyFn::new(p.dim(), move |u| p.radial_unchecked(&base, u)))
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        (self.radial)(u)
    }
}

/// Point estimate with an optional Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// `vol_d(S) = (1/d) ∫ ρ_S^d` over the sphere.
pub fn star_volume(s: &StarBodyFn, quad: &SphereQuadrature) -> Result<Estimate> {
    if s.dim != quad.dim() {
        return invalid("star body and sphere quadrature dimensions differ");
    }
    let d = s.dim as i32;
    let vals: Vec<f64> = crate::par_map(quad.nodes(), |u| (s.radial)(u));
    if let Some(bad) = vals.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return invalid(format!("nonpositive radial sample {bad}"));
    }
    let f: Vec<f64> = vals.iter().map(|r| r.powi(d) / d as f64).collect();
    Ok(quad.integrate_values(&f))
}
