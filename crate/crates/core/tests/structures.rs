use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use crgeom::cartan::{solve_cartan, transgression_mu};
use crgeom::field::ScalarField;
use crgeom::invariants::{mu_lens, mu_pseudohermitian, pullback_structure, rigidity_certificate};
use crgeom::manifold::{Backend, SampleManifold};
use crgeom::pseudohermitian::{build_coframe, cartan_tensor, is_spherical, solve_ph, AdmissibleCoframe};
use crgeom::sampling;

fn poly_sphere() -> SampleManifold {
    SampleManifold::sphere(Backend::poly()).unwrap()
}

fn grid() -> SampleManifold {
    SampleManifold::sphere(Backend::grid(24, 24, 24)).unwrap()
}

fn rossi(m: &SampleManifold, r: f64, phase: f64) -> AdmissibleCoframe {
    build_coframe(&ScalarField::real_constant(m, 1.0), &ScalarField::constant(m, C64::from_polar(r, phase))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, max_shrink_iters: 16, ..ProptestConfig::default() })]

    #[test]
    fn rossi_solver_contract(r in 0.0f64..0.3, phase in 0.0f64..(2.0 * PI)) {
        let cf = rossi(&poly_sphere(), r, phase);
        let ph = solve_ph(&cf).unwrap();
        prop_assert!(ph.residuals.reconstruction < 1e-8);
        prop_assert!(ph.residuals.reality < 1e-8);
        prop_assert!(ph.residuals.imag_w < 1e-8);
        // Constant E keeps W constant and the torsion vanishes only at E = 0.
        prop_assert!(ph.w().std_dev().unwrap() < 1e-10);
        prop_assert_eq!(ph.a11().sup_norm() < 1e-12, r < 1e-12);
    }

    #[test]
    fn rossi_routes_agree(r in 0.0f64..0.3, phase in 0.0f64..(2.0 * PI)) {
        let cf = rossi(&poly_sphere(), r, phase);
        let ph = solve_ph(&cf).unwrap();
        let mu = mu_pseudohermitian(&ph, &cf).unwrap();
        let pkg = solve_cartan(&cf, &ph).unwrap();
        let tr = transgression_mu(&pkg).unwrap();
        prop_assert!((tr.mu_trace - mu.mu).abs() < 1e-4 * (1.0 + mu.mu.abs()));
        prop_assert!(pkg.trace_pi_omega().unwrap() < 1e-7);
        // Breakdown terms add up to 8π²μ.
        let sum = mu.curvature_torsion_term + mu.chern_simons_term;
        prop_assert!((sum - 8.0 * PI * PI * mu.mu).abs() < 1e-10 * (1.0 + sum.abs()));
    }

    #[test]
    fn rossi_mu_exceeds_standard(r in 0.01f64..0.3) {
        let cf = rossi(&poly_sphere(), r, 0.0);
        let mu = mu_pseudohermitian(&solve_ph(&cf).unwrap(), &cf).unwrap().mu;
        prop_assert!(mu > -1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, max_shrink_iters: 8, ..ProptestConfig::default() })]

    #[test]
    fn deformed_solver_reconstructs(seed in any::<u64>()) {
        let m = grid();
        let mut rng = sampling::rng(seed);
        let e = sampling::random_field(&mut rng, &m, 0, 1, 0.1);
        let cf = build_coframe(&ScalarField::real_constant(&m, 1.0), &e).unwrap();
        let ph = solve_ph(&cf).unwrap();
        prop_assert!(ph.residuals.reconstruction < 1e-4);
        prop_assert!(ph.residuals.imag_w < 1e-6);
    }

    #[test]
    fn mu_is_independent_of_contact_form(seed in any::<u64>()) {
        let m = grid();
        let mut rng = sampling::rng(seed);
        let e = sampling::random_field(&mut rng, &m, 0, 1, 0.1);
        let u = sampling::random_positive(&mut rng, &m, 2, 0.3);
        let one = ScalarField::real_constant(&m, 1.0);
        let mu = |u: &ScalarField| {
            let cf = build_coframe(u, &e).unwrap();
            mu_pseudohermitian(&solve_ph(&cf).unwrap(), &cf).unwrap().mu
        };
        let (a, b) = (mu(&one), mu(&u));
        prop_assert!((a - b).abs() / (1.0 + a.abs()) < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn cartan_tensor_is_equivariant(seed in any::<u64>()) {
        let m = grid();
        let mut rng = sampling::rng(seed);
        let e = sampling::random_field(&mut rng, &m, 0, 1, 0.1);
        let one = ScalarField::real_constant(&m, 1.0);
        let g = sampling::random_u2(&mut rng);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let q = cartan_tensor(&solve_ph(&build_coframe(&one, &e).unwrap()).unwrap()).unwrap();
        let (up, ep) = pullback_structure(&one, &e, g).unwrap();
        let qp = cartan_tensor(&solve_ph(&build_coframe(&up, &ep).unwrap()).unwrap()).unwrap();
        let want = q.group_pullback(g).unwrap().scale(det * det);
        prop_assert!(qp.sup_distance(&want).unwrap() < 1e-6 * q.sup_norm());
    }
}

#[test]
fn standard_structure() {
    let m = poly_sphere();
    let cf = AdmissibleCoframe::standard(&m);
    let ph = solve_ph(&cf).unwrap();
    assert!((ph.w().max_re() - 2.0).abs() < 1e-14 && ph.w().std_dev().unwrap() < 1e-14);
    assert!(is_spherical(&cartan_tensor(&ph).unwrap(), 1e-10));
    assert!((mu_pseudohermitian(&ph, &cf).unwrap().mu + 1.0).abs() < 1e-12);
    let cert = rigidity_certificate(&ph).unwrap();
    assert!(cert.holds && (cert.margin - 2.0).abs() < 1e-12);
}

#[test]
fn rossi_is_not_spherical() {
    let ph = solve_ph(&rossi(&poly_sphere(), 0.1, 0.3)).unwrap();
    assert!(!is_spherical(&cartan_tensor(&ph).unwrap(), 1e-8));
}

#[test]
fn lens_quotients_divide_mu() {
    for (p, q) in [(2, 1), (3, 1), (5, 1), (5, 2)] {
        let m = SampleManifold::lens(p, q, Backend::poly()).unwrap();
        let cf = AdmissibleCoframe::standard(&m);
        let mu = mu_lens(p, q, &solve_ph(&cf).unwrap(), &cf).unwrap().mu;
        assert!((mu + 1.0 / f64::from(p)).abs() < 1e-8, "L({p},{q}): {mu}");
    }
}

#[test]
fn lens_rejects_common_factors() {
    assert!(SampleManifold::lens(4, 2, Backend::poly()).is_err());
}

#[test]
fn grid_and_exact_mu_agree() {
    let cf = rossi(&poly_sphere(), 0.15, 1.0);
    let exact = mu_pseudohermitian(&solve_ph(&cf).unwrap(), &cf).unwrap().mu;
    let g = rossi(&grid(), 0.15, 1.0);
    let sampled = mu_pseudohermitian(&solve_ph(&g).unwrap(), &g).unwrap();
    assert!((sampled.mu - exact).abs() < 1e-4 * exact.abs());
    assert_eq!(sampled.resolution, Some([24, 24, 24]));
}
