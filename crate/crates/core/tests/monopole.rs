use num_complex::Complex64 as C64;
use proptest::prelude::*;

use crgeom::exterior::FormField;
use crgeom::field::ScalarField;
use crgeom::manifold::{Backend, SampleManifold};
use crgeom::monopole::{
    gauge_transform, l2_pairing, obstruction_report, residuals, twisted_dbar, twisted_dbar_adjoint, MonopoleFields,
};
use crgeom::pseudohermitian::{build_coframe, solve_ph, AdmissibleCoframe, PHData};
use crgeom::sampling;

fn background(e: C64) -> PHData {
    background_on(Backend::poly(), e)
}

fn background_on(backend: Backend, e: C64) -> PHData {
    let m = SampleManifold::sphere(backend).unwrap();
    solve_ph(&build_coframe(&ScalarField::real_constant(&m, 1.0), &ScalarField::constant(&m, e)).unwrap()).unwrap()
}

fn real_one_form(seed: u64, m: &SampleManifold) -> FormField {
    let mut rng = sampling::rng(seed);
    let t = sampling::random_field(&mut rng, m, 0, 2, 0.5).re();
    let c = sampling::random_field(&mut rng, m, 0, 2, 0.5);
    FormField::one_form([t, c.clone(), c.conj()])
}

fn fields(seed: u64, m: &SampleManifold) -> MonopoleFields {
    let mut rng = sampling::rng(seed);
    MonopoleFields {
        alpha: sampling::random_field(&mut rng, m, 0, 2, 1.0),
        beta1bar: sampling::random_field(&mut rng, m, 0, 2, 1.0),
        a: real_one_form(seed ^ 0x5bd1, m),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, max_shrink_iters: 16, ..ProptestConfig::default() })]

    #[test]
    fn residual_norms_are_gauge_invariant(seed in any::<u64>(), r in 0.0f64..0.2) {
        // The exact backend expands e^{iγ} as a truncated series, so the phase
        // is only unimodular up to the truncation bound; the grid has no such error.
        let ph = background_on(Backend::grid(24, 24, 24), C64::from_polar(r, 1.1));
        let m = *ph.manifold();
        let mf = fields(seed, &m);
        let gamma = sampling::random_field(&mut sampling::rng(seed.wrapping_mul(3)), &m, 0, 2, 1.0).re();
        let a = residuals(&ph, &mf).unwrap();
        let b = residuals(&ph, &gauge_transform(&ph, &mf, &gamma).unwrap()).unwrap();
        for (x, y) in a.dirac.iter().zip(&b.dirac) {
            prop_assert!((x.sup_norm() - y.sup_norm()).abs() < 1e-8 * (1.0 + x.sup_norm()));
        }
        prop_assert!(a.curvature.sup_distance(&b.curvature).unwrap() < 1e-8);
    }

    #[test]
    fn twisted_operators_are_adjoint(seed in any::<u64>()) {
        let ph = background(C64::new(0.0, 0.0));
        let m = *ph.manifold();
        let mut rng = sampling::rng(seed);
        let alpha = sampling::random_field(&mut rng, &m, 0, 3, 1.0);
        let beta = sampling::random_field(&mut rng, &m, 0, 3, 1.0);
        let a = real_one_form(seed.wrapping_add(1), &m);
        let lhs = l2_pairing(&ph, &twisted_dbar(&ph, &alpha, &a).unwrap(), &beta).unwrap();
        let rhs = l2_pairing(&ph, &alpha, &twisted_dbar_adjoint(&ph, &beta, &a).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-6 * (1.0 + lhs.norm()));
    }

    #[test]
    fn zero_configuration_gives_minus_w(r in 0.0f64..0.3) {
        let ph = background(C64::from_polar(r, 0.2));
        let res = residuals(&ph, &MonopoleFields::zero(ph.manifold()).unwrap()).unwrap();
        prop_assert!(res.curvature.add(ph.w()).unwrap().sup_norm() < 1e-12);
    }
}

#[test]
fn obstruction_flags_torsion() {
    let std = obstruction_report(&background(C64::new(0.0, 0.0)), 1e-8).unwrap();
    assert!(std.torsion_free && std.w_positive);
    let rossi = obstruction_report(&background(C64::new(0.1, 0.0)), 1e-8).unwrap();
    assert!(!rossi.torsion_free);
    assert!(rossi.verdict.contains("torsion"));
}

#[test]
fn snapshot_roundtrip() {
    let m = SampleManifold::sphere(Backend::poly()).unwrap();
    let mf = fields(3, &m);
    let json = serde_json::to_string(&mf.snapshot()).unwrap();
    let back = MonopoleFields::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back.snapshot(), mf.snapshot());
}

#[test]
fn fields_on_another_manifold_are_rejected() {
    let ph = background(C64::new(0.0, 0.0));
    let other = SampleManifold::lens(3, 1, Backend::poly()).unwrap();
    let _ = AdmissibleCoframe::standard(&other);
    assert!(residuals(&ph, &MonopoleFields::zero(&other).unwrap()).is_err());
}

