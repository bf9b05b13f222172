//! One function per command; each returns computed values, per-direction
//! rows and any verification reports.

use crate::job::{ChainFamilySpec, Command, HSpec, JobSpec, MethodSpec, Params, RaySpec, SideSpec, StarSpec};
use mbody::covariogram::{covariogram_slice, diffbody_radial, roof};
use mbody::measure::Concavity;
use mbody::oracle::{in_translates, mc_measure, SphereQuadrature};
use mbody::projection::VARIATIONAL_STEPS;
use mbody::schema::build_measure;
use mbody::verify::{default_sphere, direction_mesh, polar_sphere, zhang_denominator};
use mbody::{
    berwald_const_f, berwald_const_q, boundary_measure_total, chain_check, chord_lower_check, chord_upper_check,
    covariogram, dual_volume, gen_binom, general_zhang_check, integrate_over_polytope, linear_covariance_check,
    polar_projection_radial, projection_support, rmb_limit_neg1, rmb_radial_direct, rmb_radial_mellin, rmb_radial_p0,
    rogers_shephard_check, star_volume, variational_check, weighted_surface_measure, zhang_check, ChainConcavity,
    ChainSpec, ConcaveRayFn, DirectionRow, Error, KernelSide, LinearMap, MDirection, Method, Order, Polytope,
    ProjectionBody, RadialMeanBody, Result, StarBodyFn, VerifyReport, WeightedMeasure,
};
use serde_json::{json, Map, Value};

/// Directions used when a command is given neither `directions` nor `direction_count`.
const DEFAULT_DIRECTIONS: usize = 32;
const DEFAULT_SLICE_GRID: usize = 16;
/// Sphere nodes for chord checks in dimension >= 4.
const CHORD_SPHERE_HIGH_DIM: usize = 4000;
const SPOT_CHECK_PAIRS: usize = 200;

#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Map<String, Value>,
    pub rows: Vec<DirectionRow>,
    pub reports: Vec<VerifyReport>,
}

struct Ctx<'a> {
    k: Polytope,
    mu: WeightedMeasure,
    n: usize,
    seed: u64,
    p: &'a Params,
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub fn run(job: &JobSpec, seed: u64) -> Result<Outcome> {
    let mut k = job.body.build()?;
    if let Some(t) = &job.params.transform {
        k = k.apply_linear(&LinearMap::new(t.clone())?)?;
    }
    let n = k.dim();
    let mu = build_measure(job.measure.as_ref(), job.integration.as_ref(), n, seed)?;
    if *mu.density().concavity() != Concavity::None {
        let (lo, hi) = k.bounding_box();
        mu.density().check_concavity(&lo, &hi, SPOT_CHECK_PAIRS, seed)?;
    }
    let ctx = Ctx { k, mu, n, seed, p: &job.params };
    let mut out = match job.command {
        Command::Covariogram => covariogram_cmd(&ctx),
        Command::Diffbody => diffbody_cmd(&ctx),
        Command::Projbody => projbody_cmd(&ctx),
        Command::Rmb => rmb_cmd(&ctx),
        Command::VerifyChain => chain_cmd(&ctx),
        Command::VerifyZhang => zhang_cmd(&ctx),
        Command::VerifyRs => rs_cmd(&ctx),
        Command::VerifyVariational => variational_cmd(&ctx),
        Command::VerifyLinear => linear_cmd(&ctx),
        Command::VerifyChord => chord_cmd(&ctx),
        Command::Dualvol => dualvol_cmd(&ctx),
    }?;
    out.result.insert("body_volume".into(), json!(ctx.k.volume()));
    out.result.insert("dim".into(), json!(n));
    Ok(out)
}

fn order_m(p: &Params) -> Result<usize> {
    match p.m.unwrap_or(1) {
        0 => bad("m must be at least 1"),
        m => Ok(m),
    }
}

fn directions(ctx: &Ctx, m: usize, default: usize) -> Result<Vec<MDirection>> {
    match &ctx.p.directions {
        Some(list) => {
            if list.is_empty() {
                return bad("directions must not be empty");
            }
            list.iter()
                .map(|blocks| {
                    let t = MDirection::normalized(blocks.clone())?;
                    if t.m() != m || t.n() != ctx.n {
                        return bad(format!("direction shape ({}, {}) differs from (m, n) = ({m}, {})", t.m(), t.n(), ctx.n));
                    }
                    Ok(t)
                })
                .collect()
        }
        None => direction_mesh(ctx.n, m, ctx.p.direction_count.unwrap_or(default), ctx.seed),
    }
}

fn shifts(ctx: &Ctx, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if x.is_empty() || x.iter().any(|v| v.len() != ctx.n) {
        return bad(format!("x must be a nonempty list of vectors of length {}", ctx.n));
    }
    Ok(x.to_vec())
}

fn sphere(ctx: &Ctx, d: usize) -> Result<Option<SphereQuadrature>> {
    ctx.p.sphere_count.map(|c| SphereQuadrature::new(d, c, ctx.seed)).transpose()
}

fn estimate_json(e: mbody::Estimate) -> Value {
    json!({ "value": e.value, "stderr": e.stderr })
}

fn row(index: usize, theta: &MDirection, values: Vec<(&str, f64)>) -> DirectionRow {
    DirectionRow {
        index,
        direction: theta.flat(),
        values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        pass: true,
    }
}

fn diffbody_star(k: &Polytope, m: usize) -> StarBodyFn {
    let (k, n) = (k.clone(), k.dim());
    StarBodyFn::new(n * m, move |u| {
        MDirection::from_flat(n, u).and_then(|t| diffbody_radial(&k, &t)).unwrap_or(f64::NAN)
    })
}

fn covariogram_cmd(ctx: &Ctx) -> Result<Outcome> {
    let mut out = Outcome::default();
    out.result.insert("measure_of_body".into(), estimate_json(integrate_over_polytope(&ctx.mu, &ctx.k)?));
    if ctx.p.x.is_none() && ctx.p.direction.is_none() {
        return bad("covariogram needs x (a shift tuple) or direction (a ray)");
    }
    if let Some(x) = &ctx.p.x {
        let x = shifts(ctx, x)?;
        out.result.insert("value".into(), estimate_json(covariogram(&ctx.k, &ctx.mu, &x)?));
        let cap = ctx.k.intersect_translates(&x)?;
        out.result.insert("intersection_volume".into(), json!(cap.as_ref().map_or(0.0, |c| c.volume())));
        if let Some(samples) = ctx.p.mc_samples {
            let (lo, hi) = ctx.k.bounding_box();
            let est = mc_measure(ctx.mu.density(), |y| in_translates(&ctx.k, &x, y), &lo, &hi, samples, ctx.seed)?;
            out.result.insert("monte_carlo".into(), estimate_json(est));
        }
    }
    if let Some(blocks) = &ctx.p.direction {
        let theta = MDirection::normalized(blocks.clone())?;
        if theta.n() != ctx.n {
            return bad("direction blocks must have length n");
        }
        let slice = covariogram_slice(&ctx.k, &ctx.mu, &theta, ctx.p.grid.unwrap_or(DEFAULT_SLICE_GRID))?;
        let d_star = diffbody_star(&ctx.k, theta.m());
        let flat = theta.flat();
        for (i, (r, g)) in slice.nodes.iter().zip(&slice.values).enumerate() {
            let x: Vec<f64> = flat.iter().map(|t| t * r).collect();
            out.rows.push(row(i, &theta, vec![("r", *r), ("g", *g), ("roof", roof(&d_star, &x))]));
        }
        out.result.insert("rho_d".into(), json!(slice.rho_d));
        out.result.insert("breakpoints".into(), json!(slice.breakpoints));
    }
    Ok(out)
}

fn diffbody_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let mut out = Outcome::default();
    let base = ctx.k.interior_point().to_vec();
    for (i, theta) in directions(ctx, m, DEFAULT_DIRECTIONS)?.iter().enumerate() {
        let rho = diffbody_radial(&ctx.k, theta)?;
        let mut values = vec![("rho_D", rho)];
        if m == 1 {
            let u = &theta.blocks()[0];
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            values.push(("h_K(u)", ctx.k.support(u)));
            values.push(("h_K(-u)", ctx.k.support(&neg)));
            values.push(("rho_K(u) about interior point", ctx.k.radial(&base, u)?));
        }
        out.rows.push(row(i, theta, values));
    }
    let d = ctx.n * m;
    let quad = match sphere(ctx, d)? {
        Some(q) => q,
        None => default_sphere(d, ctx.seed)?,
    };
    out.result.insert("volume".into(), estimate_json(star_volume(&diffbody_star(&ctx.k, m), &quad)?));
    if m == 1 {
        let dk = ctx.k.difference_body()?;
        out.result.insert("exact_volume".into(), json!(dk.volume()));
        out.result.insert("vertices".into(), json!(dk.vertices()));
    }
    Ok(out)
}

fn projbody_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let mut out = Outcome::default();
    let atoms = weighted_surface_measure(&ctx.k, &ctx.mu)?;
    let list: Vec<Value> = atoms.atoms.iter().map(|(u, w)| json!({ "normal": u, "weight": w })).collect();
    out.result.insert("surface_measure".into(), json!(list));
    out.result.insert("boundary_measure".into(), serde_json::to_value(boundary_measure_total(&ctx.k, &ctx.mu)?).unwrap_or(Value::Null));
    if let Some(x) = &ctx.p.x {
        let x = shifts(ctx, x)?;
        out.result.insert("support".into(), json!(projection_support(&ctx.k, &ctx.mu, &x)?));
    }
    let pb = ProjectionBody::new(&ctx.k, &ctx.mu, m)?;
    for (i, theta) in directions(ctx, m, DEFAULT_DIRECTIONS)?.iter().enumerate() {
        let rho = polar_projection_radial(&ctx.k, &ctx.mu, theta)?;
        out.rows.push(row(i, theta, vec![("h_Pi", pb.support(theta.blocks())), ("rho_polar", rho)]));
    }
    let quad = match sphere(ctx, ctx.n * m)? {
        Some(q) => q,
        None => polar_sphere(&pb, ctx.seed)?,
    };
    out.result.insert("polar_volume".into(), estimate_json(star_volume(&pb.polar_star_body(1.0), &quad)?));
    Ok(out)
}

fn rmb_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    if ctx.p.p.is_none() && ctx.p.p_seq.is_none() {
        return bad("rmb needs p, p_seq or both");
    }
    let mut out = Outcome::default();
    let dirs = directions(ctx, m, DEFAULT_DIRECTIONS)?;
    if let Some(p) = ctx.p.p {
        let method = ctx.p.method.unwrap_or(MethodSpec::Mellin);
        out.result.insert("p".into(), json!(p));
        out.result.insert("method".into(), json!(if p == 0.0 { "direct" } else { method_name(method) }));
        for (i, theta) in dirs.iter().enumerate() {
            let rho = match (p == 0.0, method) {
                (true, _) => rmb_radial_p0(&ctx.k, &ctx.mu, theta)?,
                (false, MethodSpec::Direct) => rmb_radial_direct(&ctx.k, &ctx.mu, p, theta)?,
                (false, MethodSpec::Mellin) => rmb_radial_mellin(&ctx.k, &ctx.mu, p, theta)?,
            };
            out.rows.push(row(i, theta, vec![("rho_R", rho), ("rho_D", diffbody_radial(&ctx.k, theta)?)]));
        }
    }
    if let Some(seq) = &ctx.p.p_seq {
        let reports = dirs.iter().map(|t| rmb_limit_neg1(&ctx.k, &ctx.mu, t, seq)).collect::<Result<Vec<_>>>()?;
        out.reports.push(combine("rmb_limit_neg1", reports));
    }
    Ok(out)
}

fn method_name(m: MethodSpec) -> &'static str {
    match m {
        MethodSpec::Direct => "direct",
        MethodSpec::Mellin => "mellin",
    }
}

/// Folds per-direction reports into one: worst margin, all rows, pass iff all pass.
fn combine(name: &str, reports: Vec<VerifyReport>) -> VerifyReport {
    let mut r = VerifyReport::new(name);
    let mut worst: Option<&VerifyReport> = None;
    for rep in &reports {
        if worst.is_none_or(|w| rep.margin < w.margin) {
            worst = Some(rep);
        }
    }
    if let Some(w) = worst {
        r.lhs = w.lhs;
        r.rhs = w.rhs;
        r.ratio = w.ratio;
        r.bound = w.bound;
        r.margin = w.margin;
        r.tolerance = w.tolerance;
        r.notes = w.notes.clone();
    }
    r.pass = reports.iter().all(|x| x.pass);
    r.samples = reports.iter().map(|x| x.samples).sum();
    for (i, rep) in reports.into_iter().enumerate() {
        for mut row in rep.rows {
            row.index = r.rows.len();
            row.values.insert(0, ("case".into(), i as f64));
            r.rows.push(row);
        }
    }
    r
}

fn chain_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let Some(family) = &ctx.p.concavity else {
        return bad("verify-chain needs concavity: {\"family\": \"s\" | \"f\" | \"q\", ...}");
    };
    let p_list = ctx.p.p_list.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let mu_k = integrate_over_polytope(&ctx.mu, &ctx.k)?.value;
    let (concavity, consts) = match family {
        ChainFamilySpec::S { s } => {
            let c = p_list.iter().map(|&p| Ok(gen_binom(1.0 / s, p)?.powf(1.0 / p))).collect::<Result<Vec<_>>>()?;
            (ChainConcavity::S(*s), c)
        }
        ChainFamilySpec::F { profile } => {
            let f = profile.build()?;
            let c = p_list.iter().map(|&p| berwald_const_f(&f, p, mu_k)).collect::<Result<Vec<_>>>()?;
            (ChainConcavity::F(f), c)
        }
        ChainFamilySpec::Q { profile } => {
            let q = profile.build()?;
            let c = p_list.iter().map(|&p| berwald_const_q(&q, p, mu_k)).collect::<Result<Vec<_>>>()?;
            (ChainConcavity::Q(q), c)
        }
    };
    let spec = ChainSpec { concavity, p_list: p_list.clone(), directions: directions(ctx, m, 100)? };
    let report = chain_check(&ctx.k, &ctx.mu, &spec)?;
    let table: Vec<Value> = p_list.iter().zip(&consts).map(|(p, c)| json!({ "p": p, "constant": c })).collect();
    let mut out = Outcome::default();
    out.result.insert("constants".into(), json!(table));
    out.result.insert("measure_of_body".into(), json!(mu_k));
    out.reports.push(report);
    Ok(out)
}

fn zhang_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let nu = match &ctx.p.nu {
        Some(list) => {
            if list.len() != m {
                return bad(format!("nu must list m = {m} densities"));
            }
            list.iter().map(|d| Ok(WeightedMeasure::with_density(d.build(ctx.n)?))).collect::<Result<Vec<_>>>()?
        }
        None => vec![WeightedMeasure::lebesgue(ctx.n); m],
    };
    let pb = ProjectionBody::new(&ctx.k, &ctx.mu, m)?;
    let quad = match sphere(ctx, ctx.n * m)? {
        Some(q) => q,
        None => polar_sphere(&pb, ctx.seed)?,
    };
    let report = match &ctx.p.profile {
        Some(f) => {
            if ctx.p.s.is_some() {
                return bad("give either s or profile, not both");
            }
            general_zhang_check(&ctx.k, &ctx.mu, &f.build()?, &nu, &quad)?
        }
        None => {
            let s = match (ctx.p.s, ctx.mu.density().concavity()) {
                (Some(s), _) => s,
                (None, Concavity::S { s }) => *s,
                (None, _) if ctx.mu.is_constant() => 1.0 / ctx.n as f64,
                _ => return bad("verify-zhang needs s or profile for a non-constant density"),
            };
            zhang_check(&ctx.k, &ctx.mu, s, &nu, &quad)?
        }
    };
    let mut out = Outcome::default();
    out.result.insert("denominator".into(), json!(zhang_denominator(&ctx.k, &ctx.mu, &nu)?));
    out.reports.push(report);
    Ok(out)
}

fn rs_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let quad = sphere(ctx, ctx.n * m)?;
    let quad = match (quad, m) {
        (Some(q), _) => Some(q),
        (None, 1) => None,
        (None, _) => Some(default_sphere(ctx.n * m, ctx.seed)?),
    };
    let mut out = Outcome::default();
    out.reports.push(rogers_shephard_check(&ctx.k, m, quad.as_ref())?);
    Ok(out)
}

fn variational_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let steps = ctx.p.steps.clone().unwrap_or_else(|| VARIATIONAL_STEPS.to_vec());
    let reports = directions(ctx, m, 20)?
        .iter()
        .map(|t| variational_check(&ctx.k, &ctx.mu, t, &steps))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    out.reports.push(combine("variational", reports));
    Ok(out)
}

fn linear_cmd(ctx: &Ctx) -> Result<Outcome> {
    let m = order_m(ctx.p)?;
    let Some(map) = &ctx.p.map else {
        return bad("verify-linear needs map (an invertible n×n matrix)");
    };
    let t = LinearMap::new(map.clone())?;
    let mut out = Outcome::default();
    out.reports.push(linear_covariance_check(&ctx.k, &ctx.mu, &t, &directions(ctx, m, 50)?)?);
    Ok(out)
}

fn star(ctx: &Ctx, spec: &StarSpec) -> Result<StarBodyFn> {
    Ok(match spec {
        StarSpec::Ball { radius, dim } => {
            if !(*radius > 0.0) || *dim == 0 {
                return bad("ball needs a positive radius and dimension");
            }
            let r = *radius;
            StarBodyFn::new(*dim, move |_| r)
        }
        StarSpec::Body => StarBodyFn::of_polytope(&ctx.k, ctx.k.interior_point())?,
        StarSpec::DifferenceBody { m } => {
            if *m == 0 {
                return bad("m must be at least 1");
            }
            diffbody_star(&ctx.k, *m)
        }
        StarSpec::PolarProjection { m, scale } => {
            ProjectionBody::new(&ctx.k, &ctx.mu, *m)?.polar_star_body(scale.unwrap_or(1.0))
        }
        StarSpec::RadialMean { m, p, method } => {
            let method = match method.unwrap_or(MethodSpec::Mellin) {
                MethodSpec::Direct => Method::Direct,
                MethodSpec::Mellin => Method::Mellin,
            };
            RadialMeanBody::new(&ctx.k, &ctx.mu, *m, Order::Finite(*p), method)?.star_body()
        }
    })
}

/// Sphere rule for a star body: exact sectors for the planar polar
/// projection body, the default rule otherwise.
fn star_sphere(ctx: &Ctx, spec: &StarSpec, d: usize, high_dim_count: Option<usize>) -> Result<SphereQuadrature> {
    if let Some(q) = sphere(ctx, d)? {
        return Ok(q);
    }
    if let StarSpec::PolarProjection { m: 1, .. } = spec {
        if ctx.n == 2 {
            return polar_sphere(&ProjectionBody::new(&ctx.k, &ctx.mu, 1)?, ctx.seed);
        }
    }
    match high_dim_count {
        Some(c) if d >= 4 => SphereQuadrature::new(d, c, ctx.seed),
        _ => default_sphere(d, ctx.seed),
    }
}

fn chord_cmd(ctx: &Ctx) -> Result<Outcome> {
    let (Some(ray), Some(kernel)) = (&ctx.p.ray, &ctx.p.kernel) else {
        return bad("verify-chord needs ray and kernel");
    };
    let (f, star_spec) = match ray {
        RaySpec::Affine { star: s, f0 } => {
            let c = *f0;
            (ConcaveRayFn::affine(star(ctx, s)?, move |_| c), Some(s))
        }
        RaySpec::Quadratic { star: s, f0 } => {
            let (l, c) = (star(ctx, s)?, *f0);
            let l2 = l.clone();
            let f = ConcaveRayFn::from_fn(l, move |r, th| c * (1.0 - (r / l2.eval(th)).powi(2)), None);
            (f, Some(s))
        }
        RaySpec::CovariogramPower { m, s } => (ConcaveRayFn::covariogram_power(&ctx.k, &ctx.mu, *m, *s)?, None),
    };
    let d = f.dim;
    let g = kernel.build(d)?;
    let k_exp = match ctx.p.h.as_ref().unwrap_or(&HSpec::Power { k: 1.0 }) {
        HSpec::Power { k } if *k > 0.0 => *k,
        HSpec::Power { .. } => return bad("h(t) = t^k needs k > 0"),
    };
    let h = move |t: f64| t.max(0.0).powf(k_exp);
    let quad = match star_spec {
        Some(s) => star_sphere(ctx, s, d, Some(CHORD_SPHERE_HIGH_DIM))?,
        None => match sphere(ctx, d)? {
            Some(q) => q,
            None if d >= 4 => SphereQuadrature::new(d, CHORD_SPHERE_HIGH_DIM, ctx.seed)?,
            None => default_sphere(d, ctx.seed)?,
        },
    };
    f.check_concavity(&quad, ctx.seed)?;
    g.check_side(1.0, ctx.seed)?;
    let sides: Vec<SideSpec> = match (ctx.p.side, g.side) {
        (Some(s), _) => vec![s],
        (None, KernelSide::Lower) => vec![SideSpec::Lower],
        (None, KernelSide::Upper) => vec![SideSpec::Upper],
        (None, KernelSide::Both) => vec![SideSpec::Lower, SideSpec::Upper],
    };
    let mut out = Outcome::default();
    for side in sides {
        out.reports.push(match side {
            SideSpec::Lower => chord_lower_check(&f, &h, &g, &quad)?,
            SideSpec::Upper => chord_upper_check(&f, &h, &g, &quad)?,
        });
    }
    out.result.insert("alpha".into(), json!(g.alpha));
    out.result.insert("sphere_nodes".into(), json!(quad.len()));
    Ok(out)
}

fn dualvol_cmd(ctx: &Ctx) -> Result<Outcome> {
    let (Some(kernel), Some(spec)) = (&ctx.p.kernel, &ctx.p.star) else {
        return bad("dualvol needs kernel and star");
    };
    let l = star(ctx, spec)?;
    let g = kernel.build(l.dim)?;
    let quad = star_sphere(ctx, spec, l.dim, None)?;
    let mut out = Outcome::default();
    out.result.insert("dual_volume".into(), json!(dual_volume(&g, &l, &quad)?));
    out.result.insert("volume".into(), estimate_json(star_volume(&l, &quad)?));
    out.result.insert("sphere_nodes".into(), json!(quad.len()));
    Ok(out)
}
