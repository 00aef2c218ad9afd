use num_complex::Complex64 as C64;
use proptest::prelude::*;

use crgeom::field::{Dir, ScalarField};
use crgeom::manifold::{Backend, SampleManifold};
use crgeom::poly::Poly;
use crgeom::sampling;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn poly_sphere() -> SampleManifold {
    SampleManifold::sphere(Backend::poly()).unwrap()
}

fn d(f: &ScalarField, dir: Dir) -> ScalarField {
    f.frame_derivative(dir)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, max_shrink_iters: 64, ..ProptestConfig::default() })]

    #[test]
    fn frame_commutators(seed in any::<u64>(), deg in 1u16..=6) {
        let m = poly_sphere();
        let f = sampling::random_field(&mut sampling::rng(seed), &m, 0, deg, 1.0);
        let z1z1bar = d(&d(&f, Dir::Z1bar), Dir::Z1).sub(&d(&d(&f, Dir::Z1), Dir::Z1bar)).unwrap();
        prop_assert!(z1z1bar.add(&d(&f, Dir::T).scale(I)).unwrap().sup_norm() < 1e-10);
        let z1t = d(&d(&f, Dir::T), Dir::Z1).sub(&d(&d(&f, Dir::Z1), Dir::T)).unwrap();
        prop_assert!(z1t.sub(&d(&f, Dir::Z1).scale(I * 2.0)).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn grid_quadrature_matches_closed_form(seed in any::<u64>(), deg in 0u16..=8) {
        let p = sampling::random_poly(&mut sampling::rng(seed), deg, 1.0);
        let exact = ScalarField::from_poly(&poly_sphere(), &p).integrate().unwrap();
        let grid = SampleManifold::sphere(Backend::default_grid()).unwrap();
        let quad = ScalarField::from_poly(&grid, &p).integrate().unwrap();
        prop_assert!((exact - quad).norm() < 1e-8, "{exact} vs {quad}");
    }

    #[test]
    fn grid_derivatives_match_exact(seed in any::<u64>(), deg in 1u16..=6) {
        let p = sampling::random_poly(&mut sampling::rng(seed), deg, 1.0);
        let exact = ScalarField::from_poly(&poly_sphere(), &p);
        let grid = SampleManifold::sphere(Backend::grid(32, 32, 32)).unwrap();
        let f = ScalarField::from_poly(&grid, &p);
        for dir in Dir::ALL {
            let want = d(&exact, dir).resample(&grid).unwrap();
            prop_assert!(d(&f, dir).sup_distance(&want).unwrap() < 1e-9);
        }
    }

    #[test]
    fn integral_is_u2_invariant(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let m = poly_sphere();
        let f = sampling::random_field(&mut rng, &m, 0, 4, 1.0);
        let g = sampling::random_u2(&mut rng);
        let a = f.integrate().unwrap();
        let b = f.group_pullback(g).unwrap().integrate().unwrap();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn lens_fields_are_invariant(seed in any::<u64>(), p in prop::sample::select(vec![2u32, 3, 5, 7]), q in 1i64..5) {
        prop_assume!(num_gcd(p as i64, q) == 1);
        let m = SampleManifold::lens(p, q, Backend::poly()).unwrap();
        let f = sampling::random_field(&mut sampling::rng(seed), &m, 0, 5, 1.0);
        let zeta = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / p as f64);
        let g = [[zeta, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), zeta.powi(q as i32)]];
        let back = f.group_pullback(g).unwrap();
        prop_assert!(back.sup_distance(&f).unwrap() < 1e-12);
    }

    #[test]
    fn snapshot_roundtrip(seed in any::<u64>(), grid in any::<bool>()) {
        let backend = if grid { Backend::grid(8, 8, 8) } else { Backend::poly() };
        let m = SampleManifold::sphere(backend).unwrap();
        let f = sampling::random_field(&mut sampling::rng(seed), &m, 0, 4, 1.0);
        let json = serde_json::to_string(&f.snapshot()).unwrap();
        let back = ScalarField::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
        prop_assert_eq!(back.sample_values(), f.sample_values());
    }
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { num_gcd(b, a % b) }
}

#[test]
fn sphere_volume() {
    let one = Poly::constant(C64::new(1.0, 0.0));
    let v = ScalarField::from_poly(&poly_sphere(), &one).integrate().unwrap();
    assert!((v.re - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
}

#[test]
fn iterated_grid_derivatives_stay_accurate() {
    // Fourth-order frame derivatives must not pick up pole-amplified roundoff.
    let p = Poly::z1().mul(&Poly::z2bar()).add(&Poly::z2().mul(&Poly::z2()));
    let exact = ScalarField::from_poly(&poly_sphere(), &p);
    let chain = [Dir::Z1, Dir::Z1bar, Dir::Z1, Dir::Z1bar];
    let apply = |f: &ScalarField| chain.iter().fold(f.clone(), |g, &dir| d(&g, dir));
    let want = apply(&exact);
    for n in [24, 32, 48, 64] {
        let grid = SampleManifold::sphere(Backend::grid(n, n, n)).unwrap();
        let err = apply(&ScalarField::from_poly(&grid, &p)).sup_distance(&want.resample(&grid).unwrap()).unwrap();
        assert!(err < 1e-7 * want.sup_norm(), "n = {n}: {err:.3e}");
    }
}

#[test]
fn nan_samples_are_rejected() {
    let m = SampleManifold::sphere(Backend::grid(8, 8, 8)).unwrap();
    let mut v = vec![C64::new(1.0, 0.0); 512];
    v[7] = C64::new(f64::NAN, 0.0);
    assert!(ScalarField::from_samples(&m, v, 0).is_err());
}
