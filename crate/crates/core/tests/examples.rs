//! Cross-module fixtures with independently derived reference values.

use mbody::covariogram::{covariogram, diffbody_radial, MDirection};
use mbody::genvol::{dual_volume, KernelG};
use mbody::measure::{ConcavityF, Density, WeightedMeasure};
use mbody::oracle::{in_translates, mc_measure, random_unit, rng, sphere_area, SphereQuadrature};
use mbody::polytope::{LinearMap, Polytope};
use mbody::projection::{linear_covariance_check, ProjectionBody};
use mbody::radialmean::{rmb_limit_neg1, DirectProfile, RayProfile};
use mbody::verify::{
    chain_check, default_sphere, direction_mesh, general_zhang_check, nu_mass, polar_sphere, zhang_check,
    zhang_denominator, ChainConcavity, ChainSpec,
};
use statrs::function::erf::erf;

fn gauss(n: usize) -> WeightedMeasure {
    WeightedMeasure::with_density(Density::gaussian(n, 1.0).unwrap())
}

#[test]
fn second_order_covariogram_against_monte_carlo() {
    let sq = Polytope::cube(2);
    let shifts = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
    let exact = covariogram(&sq, &WeightedMeasure::lebesgue(2), &shifts).unwrap().value;
    assert!((exact - 0.25).abs() < 1e-12);
    let est = mc_measure(&Density::constant(2, 1.0), |y| in_translates(&sq, &shifts, y), &[-0.5, -0.5], &[1.5, 1.5], 400_000, 1)
        .unwrap();
    assert!((est.value - exact).abs() <= 3.0 * est.stderr.unwrap());
}

#[test]
fn second_order_difference_body_against_grid_search() {
    // ρ_{D²K}(θ̄) is the largest r with K ∩ (rθ_1 + K) ∩ (rθ_2 + K) ≠ ∅
    let sq = Polytope::cube(2);
    let mut g = rng(2, "diffbody_grid", 0);
    for _ in 0..5 {
        let t = MDirection::from_flat(2, &random_unit(&mut g, 4)).unwrap();
        let rho = diffbody_radial(&sq, &t).unwrap();
        let nonempty = |r: f64| {
            let shifts = t.scaled(r);
            (0..=200).any(|i| {
                (0..=200).any(|j| in_translates(&sq, &shifts, &[i as f64 / 200.0, j as f64 / 200.0]))
            })
        };
        assert!(nonempty(rho * 0.98) && !nonempty(rho * 1.02), "ρ = {rho}");
    }
}

#[test]
fn gaussian_measure_of_unit_square_against_erf() {
    // (π/2) erf(1/√2)^2; statrs' erf is only good to ~1e-10 here, so the
    // grid comparison uses the value to 16 digits
    let exact = (std::f64::consts::PI / 2.0) * erf(1.0 / 2f64.sqrt()).powi(2);
    let reference = 0.732_093_100_000_809_4;
    assert!((exact - reference).abs() < 1e-9);
    let est = mc_measure(&Density::gaussian(2, 1.0).unwrap(), |_| true, &[0.0, 0.0], &[1.0, 1.0], 200_000, 4).unwrap();
    assert!((est.value - exact).abs() <= 3.0 * est.stderr.unwrap());
    let grid = mbody::integrate_over_polytope(&gauss(2), &Polytope::cube(2)).unwrap().value;
    assert!((grid - reference).abs() < 1e-13, "{grid}");
}

#[test]
fn sphere_rule_moments() {
    let q = SphereQuadrature::trapezoid(256).unwrap();
    assert!((q.integrate(|_| 1.0).value - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let q = SphereQuadrature::new(4, 200_000, 5).unwrap();
    let e = q.integrate(|u| u[0] * u[0]);
    assert!((e.value - sphere_area(4) / 4.0).abs() <= 3.0 * e.stderr.unwrap());
    let q = SphereQuadrature::fibonacci(10_000).unwrap();
    // ∫_{S²} |u₃| = 2π ∫_0^π |cos φ| sin φ dφ = 2π
    let v = q.integrate(|u| u[2].abs()).value;
    assert!((v / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-3, "{v}");
}

#[test]
fn second_order_zhang_triangle() {
    let tri = Polytope::simplex(2);
    let leb = WeightedMeasure::lebesgue(2);
    let q = default_sphere(4, 3).unwrap();
    let r = zhang_check(&tri, &leb, 0.5, &[leb.clone(), leb.clone()], &q).unwrap();
    assert!((r.bound - 15.0).abs() < 1e-9);
    assert!((r.ratio / 15.0 - 1.0).abs() < 2e-2 && r.pass, "{r:?}");
}

#[test]
fn square_zhang_is_strict() {
    let sq = Polytope::cube(2);
    let leb = WeightedMeasure::lebesgue(2);
    let q = polar_sphere(&ProjectionBody::new(&sq, &leb, 1).unwrap(), 0).unwrap();
    let r = zhang_check(&sq, &leb, 0.5, std::slice::from_ref(&leb), &q).unwrap();
    // Π°[0,1]² = {|x₁| + |x₂| <= 1}: ν(2Π°) = 8 over a denominator of 1, against the bound 6
    assert!((r.ratio - 8.0).abs() < 1e-9 && r.margin > 1e-2, "{r:?}");
}

#[test]
fn general_zhang_linear_power_density() {
    let tri = Polytope::simplex(2);
    let mu = WeightedMeasure::with_density(Density::linear_power(vec![1.0, 0.0], 1.0, 1.0).unwrap());
    let leb = WeightedMeasure::lebesgue(2);
    let q = polar_sphere(&ProjectionBody::new(&tri, &mu, 1).unwrap(), 0).unwrap();
    let r = general_zhang_check(&tri, &mu, &ConcavityF::power(1.0 / 3.0).unwrap(), &[leb], &q).unwrap();
    assert!(r.pass && r.margin > 0.0, "{r:?}");
}

#[test]
fn general_zhang_linear_profile_denominator() {
    // F(t) = t: nm ∫_0^1 μK t (1-t)^{nm-1} dt = μK / (nm + 1)
    let tri = Polytope::simplex(2);
    let leb = WeightedMeasure::lebesgue(2);
    let q = polar_sphere(&ProjectionBody::new(&tri, &leb, 1).unwrap(), 0).unwrap();
    let r = general_zhang_check(&tri, &leb, &ConcavityF::power(1.0).unwrap(), std::slice::from_ref(&leb), &q).unwrap();
    let den = zhang_denominator(&tri, &leb, std::slice::from_ref(&leb)).unwrap();
    assert!((den - 0.25).abs() < 1e-12);
    assert!((r.rhs - den / (0.5 / 3.0)).abs() < 1e-9, "{}", r.rhs);
}

#[test]
fn dual_volume_matches_nu_mass() {
    let tri = Polytope::simplex(2);
    let leb = WeightedMeasure::lebesgue(2);
    let pb = ProjectionBody::new(&tri, &leb, 1).unwrap();
    let l = pb.polar_star_body(1.0);
    let q = SphereQuadrature::angular_exact(&pb.polar_breaks_2d(), 64).unwrap();
    let nu = gauss(2);
    let mass = nu_mass(std::slice::from_ref(&nu), &l, &q).unwrap().value;
    let g = KernelG::power_density(1.0, nu.density().clone()).unwrap().scaled(2.0).unwrap();
    let dv = dual_volume(&g, &l, &q).unwrap();
    assert!((dv - mass).abs() < 1e-6 * mass, "{dv} {mass}");
}

#[test]
fn gaussian_second_order_chain_with_log_constants() {
    let tri = Polytope::simplex(2);
    let spec = ChainSpec {
        concavity: ChainConcavity::Q(ConcavityF::log()),
        p_list: vec![0.5, 1.0, 2.0],
        directions: direction_mesh(2, 2, 200, 6).unwrap(),
    };
    let r = chain_check(&tri, &gauss(2), &spec).unwrap();
    assert!(r.pass && r.rows.len() == 200, "{}", r.margin);
}

#[test]
fn gaussian_second_order_limit() {
    let tri = Polytope::simplex(2);
    let mut g = rng(7, "limit_example", 0);
    let t = MDirection::from_flat(2, &random_unit(&mut g, 4)).unwrap();
    let r = rmb_limit_neg1(&tri, &gauss(2), &t, &[-0.9, -0.99, -0.999]).unwrap();
    let errs: Vec<f64> = r.rows.iter().map(|row| row.values[2].1).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]) && errs[2] < 2e-2, "{errs:?}");
}

#[test]
fn second_order_direct_and_mellin_agree() {
    let tri = Polytope::simplex(2);
    let leb = WeightedMeasure::lebesgue(2);
    for t in direction_mesh(2, 2, 5, 8).unwrap() {
        let a = RayProfile::new(&tri, &leb, &t).unwrap().radial(2.0).unwrap();
        let b = DirectProfile::new(&tri, &leb, &t).unwrap().radial(2.0).unwrap();
        assert!((a / b - 1.0).abs() < 5e-3, "{a} {b}");
    }
}

#[test]
fn linear_covariance_examples() {
    let sq = Polytope::cube(2);
    let leb = WeightedMeasure::lebesgue(2);
    let e1 = vec![MDirection::new(vec![vec![1.0, 0.0]]).unwrap()];
    let r = linear_covariance_check(&sq, &leb, &LinearMap::diagonal(&[2.0, 1.0]).unwrap(), &e1).unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12);
    let t = LinearMap::new(vec![vec![1.2, 0.4], vec![-0.3, 0.9]]).unwrap();
    let dirs = direction_mesh(2, 2, 20, 9).unwrap();
    let r = linear_covariance_check(&Polytope::simplex(2), &gauss(2), &t, &dirs).unwrap();
    assert!(r.pass, "{r:?}");
}
