//! Property tests for the structural invariants of every module.

use mbody::covariogram::{covariogram, diffbody_radial, MDirection};
use mbody::genvol::{beta_integral, dual_volume, KernelG};
use mbody::measure::{
    boundary_measure_total, integrate_over_polytope, transform_measure, weighted_surface_measure, Density,
    WeightedMeasure,
};
use mbody::oracle::{mc_measure, SphereQuadrature};
use mbody::polytope::{star_volume, Halfspace, LinearMap, Polytope, StarBodyFn};
use mbody::projection::{projection_support, ProjectionBody};
use mbody::radialmean::RayProfile;
use mbody::verify::{chain_check, gen_binom, ChainConcavity, ChainSpec};
use proptest::prelude::*;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

fn direction(d: usize) -> impl Strategy<Value = Vec<f64>> {
    point(d).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2).prop_map(|v| unit(&v))
}

/// Full-dimensional hull of `n + 4` random points.
fn polytope(n: usize) -> impl Strategy<Value = Polytope> {
    prop::collection::vec(point(n), n + 4)
        .prop_filter_map("degenerate hull", |pts| Polytope::from_vertices(&pts).ok().filter(|p| p.volume() > 0.05))
}

fn fixtures() -> Vec<Polytope> {
    vec![Polytope::simplex(2), Polytope::cube(2), Polytope::cross(2), Polytope::simplex(3), Polytope::cube(3)]
}

fn gauss(n: usize) -> WeightedMeasure {
    WeightedMeasure::with_density(Density::gaussian(n, 1.0).unwrap())
}

fn invertible(n: usize) -> impl Strategy<Value = LinearMap> {
    prop::collection::vec(point(n), n)
        .prop_filter_map("singular", |rows| LinearMap::new(rows).ok().filter(|t| t.det_abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hrep_vrep_round_trip(p in polytope(3), dirs in prop::collection::vec(direction(3), 100)) {
        let q = Polytope::from_vertices(p.vertices()).unwrap();
        let r = Polytope::from_halfspaces(3, q.halfspaces().to_vec()).unwrap();
        for u in &dirs {
            prop_assert!((p.support(u) - r.support(u)).abs() <= 1e-9);
        }
    }

    #[test]
    fn support_under_linear_maps(p in polytope(2), t in invertible(2), u in direction(2)) {
        let tp = p.apply_linear(&t).unwrap();
        prop_assert!((tp.support(&u) - p.support(&t.apply_transpose(&u))).abs() <= 1e-9);
    }

    #[test]
    fn radial_scales_with_body(p in polytope(2), c in 0.1..5.0f64, u in direction(2)) {
        let o = p.interior_point().to_vec();
        let a = p.radial(&o, &u).unwrap();
        let scaled = p.scaled(c);
        let co: Vec<f64> = o.iter().map(|x| c * x).collect();
        prop_assert!((scaled.radial(&co, &u).unwrap() - c * a).abs() <= 1e-9 * c.max(1.0));
    }

    #[test]
    fn facet_areas_sum_to_surface(p in polytope(3)) {
        let s: f64 = p.facets().iter().map(|f| f.area).sum();
        prop_assert!((s - p.surface_area()).abs() <= 1e-9);
    }

    #[test]
    fn measure_is_additive(p in polytope(2), u in direction(2), cut in -0.3..0.3f64) {
        let off = p.support(&u) * cut;
        let mu = gauss(2);
        let mut a = p.halfspaces().to_vec();
        a.push(Halfspace::new(&u, off).unwrap());
        let mut b = p.halfspaces().to_vec();
        b.push(Halfspace::new(&u.iter().map(|x| -x).collect::<Vec<_>>(), -off).unwrap());
        let pieces: f64 = [a, b]
            .into_iter()
            .filter_map(|hs| Polytope::from_halfspaces(2, hs).ok())
            .map(|q| integrate_over_polytope(&mu, &q).unwrap().value)
            .sum();
        let whole = integrate_over_polytope(&mu, &p).unwrap().value;
        prop_assert!((pieces - whole).abs() <= 1e-9 * whole);
    }

    #[test]
    fn change_of_variables(p in polytope(2), t in invertible(2)) {
        let mu = gauss(2);
        let pulled = integrate_over_polytope(&transform_measure(&mu, &t).unwrap(), &p).unwrap().value;
        let pushed = integrate_over_polytope(&mu, &p.apply_linear(&t).unwrap()).unwrap().value / t.det_abs();
        prop_assert!((pulled - pushed).abs() <= 1e-8 * pushed);
    }

    #[test]
    fn covariogram_support_property(k in polytope(2), u in direction(2)) {
        let t = MDirection::new(vec![u]).unwrap();
        let rho = diffbody_radial(&k, &t).unwrap();
        let leb = WeightedMeasure::lebesgue(2);
        prop_assert!(covariogram(&k, &leb, &t.scaled(rho * (1.0 - 1e-4))).unwrap().value > 0.0);
        prop_assert_eq!(covariogram(&k, &leb, &t.scaled(rho * (1.0 + 1e-4))).unwrap().value, 0.0);
    }

    #[test]
    fn covariogram_symmetric(k in polytope(2), x in point(2)) {
        let leb = WeightedMeasure::lebesgue(2);
        let a = covariogram(&k, &leb, std::slice::from_ref(&x)).unwrap().value;
        let b = covariogram(&k, &leb, &[x.iter().map(|v| -v).collect()]).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn covariogram_concavity_inherited(
        k in polytope(2),
        pairs in prop::collection::vec((direction(4), 0.0..1.0f64, direction(4), 0.0..1.0f64), 200),
    ) {
        let leb = WeightedMeasure::lebesgue(2);
        let g = gauss(2);
        let point_in = |u: &Vec<f64>, s: f64| {
            let t = MDirection::from_flat(2, u).unwrap();
            let rho = diffbody_radial(&k, &t).unwrap();
            t.scaled(s * rho)
        };
        for (u, s, v, w) in &pairs {
            let (x, y) = (point_in(u, *s), point_in(v, *w));
            let mid: Vec<Vec<f64>> = x.iter().zip(&y).map(|(a, b)| a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect()).collect();
            let root = |z: &[Vec<f64>]| covariogram(&k, &leb, z).unwrap().value.sqrt();
            prop_assert!(root(&mid) >= 0.5 * (root(&x) + root(&y)) - 1e-9);
            let (gx, gy) = (covariogram(&k, &g, &x).unwrap().value, covariogram(&k, &g, &y).unwrap().value);
            if gx > 1e-12 && gy > 1e-12 {
                let gm = covariogram(&k, &g, &mid).unwrap().value;
                prop_assert!(gm.ln() >= 0.5 * (gx.ln() + gy.ln()) - 1e-7);
            }
        }
    }

    #[test]
    fn diagonal_collapse(k in polytope(2), x in point(2)) {
        let mu = gauss(2);
        let one = projection_support(&k, &mu, std::slice::from_ref(&x)).unwrap();
        let three = projection_support(&k, &mu, &[x.clone(), x.clone(), x.clone()]).unwrap();
        prop_assert!((one - three).abs() <= 1e-12 * one.max(1.0));
    }

    #[test]
    fn cauchy_formula(k in polytope(3), u in direction(3)) {
        let pb = ProjectionBody::new(&k, &WeightedMeasure::lebesgue(3), 1).unwrap();
        let cauchy: f64 = k.facets().iter().map(|f| 0.5 * f.area * f.normal.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>().abs()).sum();
        prop_assert!((pb.support(&[u]) - cauchy).abs() <= 1e-9);
    }

    #[test]
    fn radial_means_nested(k in polytope(2), u in direction(2), mu_gauss in any::<bool>()) {
        let mu = if mu_gauss { gauss(2) } else { WeightedMeasure::lebesgue(2) };
        let prof = RayProfile::new(&k, &mu, &MDirection::new(vec![u]).unwrap()).unwrap();
        let mut prev = 0.0;
        for p in [-0.9, -0.5, 0.5, 1.0, 2.0, 8.0] {
            let r = prof.radial(p).unwrap();
            prop_assert!(r >= prev - 1e-9 && r <= prof.rho_d + 1e-9, "p={} r={} prev={}", p, r, prev);
            prev = r;
        }
    }
}

#[test]
fn cube_surface_is_six() {
    let s: f64 = Polytope::cube(3).facets().iter().map(|f| f.area).sum();
    assert!((s - 6.0).abs() <= 1e-9);
}

#[test]
fn surface_atoms_close_up() {
    for k in fixtures() {
        let atoms = weighted_surface_measure(&k, &WeightedMeasure::lebesgue(k.dim())).unwrap().atoms;
        for i in 0..k.dim() {
            let s: f64 = atoms.iter().map(|(u, w)| u[i] * w).sum();
            assert!(s.abs() <= 1e-9);
        }
    }
}

#[test]
fn boundary_measure_matches_finite_difference() {
    for k in fixtures() {
        for mu in [WeightedMeasure::lebesgue(k.dim()), gauss(k.dim())] {
            let b = boundary_measure_total(&k, &mu).unwrap();
            assert!((b.facet_sum / b.finite_difference - 1.0).abs() <= 2e-2, "{b:?}");
        }
    }
}

#[test]
fn volumes_match_monte_carlo() {
    use rand::Rng;
    let mut g = mbody::oracle::rng(3, "volume_property", 0);
    for case in 0..20u64 {
        let n = 2 + (case % 2) as usize;
        let pts: Vec<Vec<f64>> = (0..n + 4).map(|_| (0..n).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
        let k = Polytope::from_vertices(&pts).unwrap();
        let (lo, hi) = k.bounding_box();
        let est = mc_measure(&Density::constant(n, 1.0), |x| k.contains(x, 0.0), &lo, &hi, 100_000, case).unwrap();
        assert!((est.value - k.volume()).abs() <= 3.0 * est.stderr.unwrap());
    }
}

#[test]
fn zhang_lower_bound_and_difference_body_inclusion() {
    let mut g = mbody::oracle::rng(4, "zhang_property", 0);
    for k in [Polytope::simplex(2), Polytope::cube(2), Polytope::cross(2), Polytope::simplex(3)] {
        let n = k.dim();
        let leb = WeightedMeasure::lebesgue(n);
        let pb = ProjectionBody::new(&k, &leb, 1).unwrap();
        let q = if n == 2 {
            SphereQuadrature::angular_exact(&pb.polar_breaks_2d(), 64).unwrap()
        } else {
            SphereQuadrature::fibonacci(20_000).unwrap()
        };
        let v = k.volume().powi(n as i32 - 1) * star_volume(&pb.polar_star_body(1.0), &q).unwrap().value;
        let bound = gen_binom(n as f64, n as f64).unwrap() / (n as f64).powi(n as i32);
        assert!(v >= bound * (1.0 - 1e-2), "{v} {bound}");
        for _ in 0..500 {
            let u = mbody::oracle::random_unit(&mut g, n);
            let t = MDirection::new(vec![u]).unwrap();
            let lhs = diffbody_radial(&k, &t).unwrap();
            let rhs = n as f64 * k.volume() * pb.polar_radial(&t).unwrap();
            assert!(lhs <= rhs + 1e-9);
        }
    }
}

#[test]
fn radial_mean_star_shaped_and_continuous() {
    let k = Polytope::cube(2);
    let leb = WeightedMeasure::lebesgue(2);
    let n = 720;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            RayProfile::new(&k, &leb, &MDirection::new(vec![vec![a.cos(), a.sin()]]).unwrap())
                .unwrap()
                .radial(1.0)
                .unwrap()
        })
        .collect();
    for i in 0..n {
        assert!(vals[i] > 0.0 && vals[i].is_finite());
        assert!((vals[i] - vals[(i + 1) % n]).abs() <= 2e-2 * vals[i]);
    }
}

#[test]
fn integration_by_parts_form() {
    for mu in [WeightedMeasure::lebesgue(2), gauss(2)] {
        let k = Polytope::simplex(2);
        let t = MDirection::normalized(vec![vec![1.0, 0.3]]).unwrap();
        let prof = RayProfile::new(&k, &mu, &t).unwrap();
        let lhs = prof.radial(1.0).unwrap() * prof.mu_k;
        let h = 1e-5 * prof.rho_d;
        let rule = mbody::quadrature::gauss_legendre(64);
        let rhs: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| {
                let r = 0.5 * prof.rho_d * (1.0 + x);
                let lo = (r - h).max(0.0);
                let d = (prof.value(r + h) - prof.value(lo)) / (r + h - lo);
                -w * d * r * 0.5 * prof.rho_d
            })
            .sum();
        assert!((lhs / rhs - 1.0).abs() <= 1e-2, "{lhs} {rhs}");
    }
}

#[test]
fn chain_p_term_tends_to_polar_endpoint() {
    let k = Polytope::cube(2);
    let leb = WeightedMeasure::lebesgue(2);
    let spec = ChainSpec {
        concavity: ChainConcavity::S(0.5),
        p_list: vec![-0.999],
        directions: mbody::verify::direction_mesh(2, 1, 16, 0).unwrap(),
    };
    let r = chain_check(&k, &leb, &spec).unwrap();
    for row in &r.rows {
        let p_term = row.values[1].1;
        let polar = row.values[2].1;
        assert!((p_term / polar - 1.0).abs() <= 2e-2, "{p_term} {polar}");
    }
}

#[test]
fn dual_volume_equals_star_volume() {
    let q = SphereQuadrature::trapezoid(512).unwrap();
    for k in [Polytope::cube(2), Polytope::cross(2)] {
        let c: Vec<f64> = vec![0.5 * (k.support(&[1.0, 0.0]) - k.support(&[-1.0, 0.0])), 0.5 * (k.support(&[0.0, 1.0]) - k.support(&[0.0, -1.0]))];
        let l = StarBodyFn::of_polytope(&k, &c).unwrap();
        let g = KernelG::power(2, 1.0).unwrap().scaled(2.0).unwrap();
        let a = dual_volume(&g, &l, &q).unwrap();
        let b = star_volume(&l, &q).unwrap().value;
        assert!((a - b).abs() <= 1e-9, "{a} {b}");
    }
}

#[test]
fn beta_constants_coincide_for_constant_f0() {
    for alpha in [0.0, 1.0, 2.5] {
        let h = |t: f64| t * t + t;
        let a = beta_integral(&h, 1.3, alpha).unwrap();
        // (α+1)∫(f0τ + f0²τ²)(1-τ)^α = f0/(α+2) + 2 f0²/((α+2)(α+3))
        let exact = 1.3 / (alpha + 2.0) + 2.0 * 1.69 / ((alpha + 2.0) * (alpha + 3.0));
        assert!((a - exact).abs() <= 1e-12, "{a} {exact}");
    }
}

#[test]
fn sphere_rules_deterministic_across_threads() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let q = SphereQuadrature::new(4, 20_000, 9).unwrap();
            let e = q.integrate(|u| u[0] * u[0]);
            let mc = mc_measure(&Density::gaussian(2, 1.0).unwrap(), |x| x[0] > 0.0, &[-1.0, -1.0], &[1.0, 1.0], 50_000, 3).unwrap();
            (e.value.to_bits(), e.stderr.map(f64::to_bits), mc.value.to_bits())
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn monte_carlo_error_halves_with_four_times_the_samples() {
    let d = Density::constant(2, 1.0);
    let inside = |x: &[f64]| x[0] * x[0] + x[1] * x[1] <= 1.0;
    let a = mc_measure(&d, inside, &[-1.0, -1.0], &[1.0, 1.0], 40_000, 1).unwrap().stderr.unwrap();
    let b = mc_measure(&d, inside, &[-1.0, -1.0], &[1.0, 1.0], 160_000, 1).unwrap().stderr.unwrap();
    assert!((a / b / 2.0 - 1.0).abs() <= 0.3, "{a} {b}");
}
