//! Seeded random test data: polynomial fields, positive conformal factors
//! and elements of U(2).

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::ScalarField;
use crate::manifold::SampleManifold;
use crate::poly::{Exponents, Poly};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn exponents(max_degree: u16) -> Vec<Exponents> {
    let mut out = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                for d in 0..=max_degree - a - b - c {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Random polynomial of degree ≤ `max_degree` whose coefficient sum (a bound
/// for its sup on S³) equals `amplitude`.
pub fn random_poly<R: Rng>(rng: &mut R, max_degree: u16, amplitude: f64) -> Poly {
    let p = Poly::from_terms(
        exponents(max_degree)
            .into_iter()
            .map(|e| (e, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
    );
    let b = p.coefficient_bound();
    if b == 0.0 {
        p
    } else {
        p.scale(C64::new(amplitude / b, 0.0))
    }
}

/// Random field of the given lens charge, sup-bounded by `amplitude`.
pub fn random_field<R: Rng>(rng: &mut R, m: &SampleManifold, charge: i64, max_degree: u16, amplitude: f64) -> ScalarField {
    ScalarField::from_poly_charged(m, &random_poly(rng, max_degree, amplitude), charge)
}

/// 1 + Re(p) with sup|p| ≤ amplitude < 1, so the result is positive.
pub fn random_positive<R: Rng>(rng: &mut R, m: &SampleManifold, max_degree: u16, amplitude: f64) -> ScalarField {
    let p = random_poly(rng, max_degree, amplitude);
    let re = p.add(&p.conj()).scale(C64::new(0.5, 0.0));
    ScalarField::from_poly(m, &re.add(&Poly::constant(C64::new(1.0, 0.0))))
}

/// Haar-like random element of U(2).
pub fn random_u2<R: Rng>(rng: &mut R) -> [[C64; 2]; 2] {
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let a = C64::new(v[0] / n, v[1] / n);
    let b = C64::new(v[2] / n, v[3] / n);
    let ph = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    [[ph * a, -ph * b.conj()], [ph * b, ph * a.conj()]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Backend;

    #[test]
    fn seeded_draws_repeat() {
        let a = random_poly(&mut rng(3), 2, 0.1);
        let b = random_poly(&mut rng(3), 2, 0.1);
        assert_eq!(a, b);
        assert!((a.coefficient_bound() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn positive_factor_is_positive() {
        let m = SampleManifold::sphere(Backend::poly()).unwrap();
        let u = random_positive(&mut rng(1), &m, 2, 0.4);
        assert!(u.min_re() > 0.5);
        assert!(u.imag_sup() < 1e-15);
    }

    #[test]
    fn u2_is_unitary() {
        let g = random_u2(&mut rng(9));
        for i in 0..2 {
            for j in 0..2 {
                let s: C64 = (0..2).map(|k| g[k][i].conj() * g[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-14);
            }
        }
    }
}
