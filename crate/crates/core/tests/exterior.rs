use proptest::prelude::*;

use crgeom::exterior::{Coframe, FormField};
use crgeom::field::ScalarField;
use crgeom::manifold::{Backend, SampleManifold};
use crgeom::pseudohermitian::build_coframe;
use crgeom::sampling;

fn poly_sphere() -> SampleManifold {
    SampleManifold::sphere(Backend::poly()).unwrap()
}

fn random_form(seed: u64, m: &SampleManifold, degree: usize) -> FormField {
    let mut rng = sampling::rng(seed);
    let n = [1, 3, 3, 1][degree];
    let c = (0..n).map(|_| sampling::random_field(&mut rng, m, 0, 3, 1.0)).collect();
    FormField::new(degree, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, max_shrink_iters: 64, ..ProptestConfig::default() })]

    #[test]
    fn leibniz(seed in any::<u64>(), idx in 0usize..3, degree in 1usize..=2) {
        let m = poly_sphere();
        let cf = Coframe::standard(&m);
        let f = sampling::random_field(&mut sampling::rng(seed), &m, 0, 4, 1.0);
        let one = ScalarField::real_constant(&m, 1.0);
        let a = if degree == 1 { FormField::basis1(one, idx) } else { FormField::basis2(one, idx) };
        let lhs = cf.d(&a.mul_fn(&f).unwrap()).unwrap();
        let rhs = cf.df(&f).unwrap().wedge(&a).unwrap().add(&cf.d(&a).unwrap().mul_fn(&f).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-9);
    }

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), degree in 0usize..=1) {
        let m = poly_sphere();
        let cf = Coframe::standard(&m);
        let a = random_form(seed, &m, degree);
        prop_assert!(cf.d(&cf.d(&a).unwrap()).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn conjugation_commutes_with_d_and_wedge(seed in any::<u64>()) {
        let m = poly_sphere();
        let cf = Coframe::standard(&m);
        let a = random_form(seed, &m, 1);
        let b = random_form(seed ^ 0x9e37, &m, 1);
        let dc = cf.d(&a.conj()).unwrap().sub(&cf.d(&a).unwrap().conj()).unwrap();
        prop_assert!(dc.sup_norm() < 1e-10);
        let wc = a.conj().wedge(&b.conj()).unwrap().sub(&a.wedge(&b).unwrap().conj()).unwrap();
        prop_assert!(wc.sup_norm() < 1e-12);
    }

    #[test]
    fn wedge_of_one_forms_is_antisymmetric(seed in any::<u64>()) {
        let m = poly_sphere();
        let a = random_form(seed, &m, 1);
        let b = random_form(seed.wrapping_add(1), &m, 1);
        let s = a.wedge(&b).unwrap().add(&b.wedge(&a).unwrap()).unwrap();
        prop_assert!(s.sup_norm() < 1e-12);
    }

    #[test]
    fn exact_three_forms_integrate_to_zero(seed in any::<u64>()) {
        let m = poly_sphere();
        let cf = Coframe::standard(&m);
        let a = random_form(seed, &m, 2);
        prop_assert!(cf.integrate(&cf.d(&a).unwrap()).unwrap().norm() < 1e-10);
    }

    #[test]
    fn deformed_coframe_keeps_d_squared(seed in any::<u64>()) {
        let m = SampleManifold::sphere(Backend::grid(16, 16, 16)).unwrap();
        let mut rng = sampling::rng(seed);
        let e = sampling::random_field(&mut rng, &m, 0, 1, 0.1);
        let u = sampling::random_positive(&mut rng, &m, 1, 0.2);
        let cf = build_coframe(&u, &e).unwrap();
        let f = sampling::random_field(&mut rng, &m, 0, 2, 1.0);
        let ddf = cf.coframe().d(&cf.coframe().df(&f).unwrap()).unwrap();
        prop_assert!(ddf.sup_norm() < 1e-6, "{:e}", ddf.sup_norm());
    }
}

#[test]
fn volume_form_matches_round_volume() {
    let m = poly_sphere();
    let cf = Coframe::standard(&m);
    let vol = FormField::volume(ScalarField::real_constant(&m, 1.0));
    let direct = cf.integrate(&vol).unwrap();
    let by_density = cf.volume_density().integrate().unwrap();
    assert!((direct - by_density).norm() < 1e-12);
}

#[test]
fn form_snapshot_roundtrip() {
    let m = poly_sphere();
    let a = random_form(5, &m, 2);
    let json = serde_json::to_string(&a.snapshot()).unwrap();
    let back = FormField::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back.sub(&a).unwrap().sup_norm(), 0.0);
}

#[test]
fn degree_four_is_rejected() {
    let m = poly_sphere();
    assert!(FormField::zero(&m, 4).is_err());
}


