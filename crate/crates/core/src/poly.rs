//! Polynomial fields on S³.
//!
//! A field is a finite sum of monomials z₁^a z̄₁^b z₂^c z̄₂^d. On the sphere
//! z₁z̄₁ = 1 − z₂z̄₂, so every polynomial is kept in the reduced form where no
//! monomial contains both z₁ and z̄₁. In this form the representation of a
//! function on S³ is unique and the constant term is well defined.
//!
//! The standard frame acts exactly:
//!
//! * Z₁ = z̄₂ ∂/∂z₁ − z̄₁ ∂/∂z₂
//! * Z̄₁ = z₂ ∂/∂z̄₁ − z₁ ∂/∂z̄₂
//! * T  = i (z·∂/∂z − z̄·∂/∂z̄)
//!
//! All three are tangent to the spheres |z| = const, so differentiating a
//! reduced representative gives a representative of the derivative.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Coefficients below this modulus are dropped after products.
pub const PRUNE_TOL: f64 = 1e-18;

/// Exponents (a, b, c, d) of z₁^a z̄₁^b z₂^c z̄₂^d.
pub type Exponents = [u16; 4];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Exponents, C64>,
    /// Accumulated bound on the series truncation error carried by this field.
    truncation: f64,
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: C64) -> Self {
        let mut p = Poly::zero();
        p.add_term([0, 0, 0, 0], c);
        p
    }

    pub fn monomial(e: Exponents, c: C64) -> Self {
        let mut p = Poly::zero();
        p.add_term(e, c);
        p
    }

    /// Build from raw (possibly unreduced) terms.
    pub fn from_terms<I: IntoIterator<Item = (Exponents, C64)>>(terms: I) -> Self {
        let mut p = Poly::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// z₁, z̄₁, z₂, z̄₂ as fields.
    pub fn z1() -> Self {
        Poly::monomial([1, 0, 0, 0], C64::new(1.0, 0.0))
    }
    pub fn z1bar() -> Self {
        Poly::monomial([0, 1, 0, 0], C64::new(1.0, 0.0))
    }
    pub fn z2() -> Self {
        Poly::monomial([0, 0, 1, 0], C64::new(1.0, 0.0))
    }
    pub fn z2bar() -> Self {
        Poly::monomial([0, 0, 0, 1], C64::new(1.0, 0.0))
    }

    /// Add c·z^e, reducing z₁z̄₁ → 1 − z₂z̄₂.
    pub fn add_term(&mut self, e: Exponents, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let m = e[0].min(e[1]);
        if m == 0 {
            let slot = self.terms.entry(e).or_insert(C64::new(0.0, 0.0));
            *slot += c;
            if *slot == C64::new(0.0, 0.0) {
                self.terms.remove(&e);
            }
            return;
        }
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let coef = c * (sign * binomial(m as u32, k as u32));
            self.add_term([e[0] - m, e[1] - m, e[2] + k, e[3] + k], coef);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn with_truncation(mut self, t: f64) -> Self {
        self.truncation = t;
        self
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|&x| x as u32).sum()).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> C64 {
        self.terms.get(&[0, 0, 0, 0]).copied().unwrap_or_default()
    }

    /// True when the reduced form has no non-constant monomial.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| *e == [0, 0, 0, 0])
    }

    /// Σ|c|, an upper bound for the sup norm on S³ (|z_i| ≤ 1).
    pub fn coefficient_bound(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn eval(&self, z1: C64, z2: C64) -> C64 {
        let (w1, w2) = (z1.conj(), z2.conj());
        self.terms
            .iter()
            .map(|(e, c)| {
                c * z1.powu(e[0] as u32) * w1.powu(e[1] as u32) * z2.powu(e[2] as u32) * w2.powu(e[3] as u32)
            })
            .sum()
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            out.add_term(*e, c * s);
        }
        out.truncation = self.truncation * s.norm();
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, *c);
        }
        out.truncation = self.truncation + other.truncation;
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut raw: std::collections::HashMap<Exponents, C64> = std::collections::HashMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
                *raw.entry(e).or_default() += ca * cb;
            }
        }
        let mut raw: Vec<(Exponents, C64)> = raw.into_iter().collect();
        raw.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut out = Poly::zero();
        for (e, c) in raw {
            out.add_term(e, c);
        }
        out.truncation = self.truncation * other.coefficient_bound()
            + other.truncation * self.coefficient_bound()
            + self.truncation * other.truncation;
        out.prune();
        out
    }

    /// Drop coefficients below [`PRUNE_TOL`], charging them to the truncation
    /// bound (every monomial has modulus ≤ 1 on S³).
    fn prune(&mut self) {
        let mut dropped = 0.0;
        self.terms.retain(|_, c| {
            let keep = c.norm() >= PRUNE_TOL;
            if !keep {
                dropped += c.norm();
            }
            keep
        });
        self.truncation += dropped;
    }

    pub fn conj(&self) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            out.add_term([e[1], e[0], e[3], e[2]], c.conj());
        }
        out.truncation = self.truncation;
        out
    }

    /// Z₁ = z̄₂ ∂_{z₁} − z̄₁ ∂_{z₂}.
    pub fn z1_derivative(&self) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            if e[0] > 0 {
                out.add_term([e[0] - 1, e[1], e[2], e[3] + 1], c * e[0] as f64);
            }
            if e[2] > 0 {
                out.add_term([e[0], e[1] + 1, e[2] - 1, e[3]], -c * e[2] as f64);
            }
        }
        out
    }

    /// Z̄₁ = z₂ ∂_{z̄₁} − z₁ ∂_{z̄₂}.
    pub fn z1bar_derivative(&self) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            if e[1] > 0 {
                out.add_term([e[0], e[1] - 1, e[2] + 1, e[3]], c * e[1] as f64);
            }
            if e[3] > 0 {
                out.add_term([e[0] + 1, e[1], e[2], e[3] - 1], -c * e[3] as f64);
            }
        }
        out
    }

    /// T = i(z₁∂_{z₁} + z₂∂_{z₂} − z̄₁∂_{z̄₁} − z̄₂∂_{z̄₂}).
    pub fn t_derivative(&self) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let w = e[0] as f64 - e[1] as f64 + e[2] as f64 - e[3] as f64;
            out.add_term(*e, c * C64::new(0.0, w));
        }
        out
    }

    /// ∫_{S³} f dV with the round measure (total volume 2π²).
    ///
    /// ∫ |z₁|^{2a} |z₂|^{2c} dV = 2π² a! c! / (a + c + 1)!; every other monomial
    /// integrates to zero.
    pub fn integrate(&self) -> C64 {
        let two_pi2 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        self.terms
            .iter()
            .filter(|(e, _)| e[0] == e[1] && e[2] == e[3])
            .map(|(e, c)| {
                let (a, cc) = (e[0] as u32, e[2] as u32);
                c * (two_pi2 * factorial(a) * factorial(cc) / factorial(a + cc + 1))
            })
            .sum()
    }

    /// f ∘ g for g ∈ U(2) acting on (z₁, z₂).
    pub fn pullback(&self, g: [[C64; 2]; 2]) -> Poly {
        let l1 = Poly::from_terms([([1, 0, 0, 0], g[0][0]), ([0, 0, 1, 0], g[0][1])]);
        let l2 = Poly::from_terms([([1, 0, 0, 0], g[1][0]), ([0, 0, 1, 0], g[1][1])]);
        let (l1b, l2b) = (l1.conj(), l2.conj());
        let max = self.terms.keys().fold([0u16; 4], |m, e| {
            [m[0].max(e[0]), m[1].max(e[1]), m[2].max(e[2]), m[3].max(e[3])]
        });
        let powers = |base: &Poly, n: u16| {
            let mut v = vec![Poly::constant(C64::new(1.0, 0.0))];
            for i in 1..=n as usize {
                let next = v[i - 1].mul(base);
                v.push(next);
            }
            v
        };
        let (p1, p1b, p2, p2b) = (powers(&l1, max[0]), powers(&l1b, max[1]), powers(&l2, max[2]), powers(&l2b, max[3]));
        let mut out = Poly::zero();
        for (e, c) in &self.terms {
            let m = p1[e[0] as usize]
                .mul(&p1b[e[1] as usize])
                .mul(&p2[e[2] as usize])
                .mul(&p2b[e[3] as usize]);
            out = out.add(&m.scale(*c));
        }
        out.truncation = self.truncation;
        out
    }

    /// Keep only monomials accepted by `keep`.
    pub fn filter<F: Fn(&Exponents) -> bool>(&self, keep: F) -> Poly {
        Poly {
            terms: self.terms.iter().filter(|(e, _)| keep(e)).map(|(e, c)| (*e, *c)).collect(),
            truncation: self.truncation,
        }
    }

    /// Split f = c₀(1 + g) around the constant term, for series expansions.
    fn split(&self) -> Result<(C64, Poly, f64)> {
        let c0 = self.constant_term();
        if c0.norm() == 0.0 {
            return Err(Error::SeriesDivergence(f64::INFINITY));
        }
        let g = self.sub(&Poly::constant(c0)).scale(c0.inv());
        let bound = g.coefficient_bound();
        Ok((c0, g, bound))
    }

    /// f^α as a truncated binomial series around the constant term.
    /// Exact when f is constant.
    pub fn powf(&self, alpha: f64, order: u32) -> Result<Poly> {
        let (c0, g, bound) = self.split()?;
        if g.is_empty() {
            return Ok(Poly::constant(c0.powf(alpha)).with_truncation(self.truncation));
        }
        if bound >= 1.0 {
            return Err(Error::SeriesDivergence(bound));
        }
        let mut sum = Poly::constant(C64::new(1.0, 0.0));
        let mut gk = Poly::constant(C64::new(1.0, 0.0));
        let mut coef = 1.0;
        for k in 1..=order {
            coef *= (alpha - (k - 1) as f64) / k as f64;
            gk = gk.mul(&g);
            sum = sum.add(&gk.scale(C64::new(coef, 0.0)));
        }
        let next = coef * (alpha - order as f64) / (order + 1) as f64;
        // geometric tail bound of the remaining binomial terms
        let tail = next.abs() * bound.powi(order as i32 + 1) / (1.0 - bound);
        let scale = c0.powf(alpha);
        let lip = alpha.abs() * c0.norm().powf(alpha - 1.0) * self.truncation;
        let mut out = sum.scale(scale);
        out.truncation = tail * scale.norm() + lip + gk.truncation * scale.norm();
        Ok(out)
    }

    /// exp(f) as a truncated series around the constant term.
    pub fn exp(&self, order: u32) -> Poly {
        let c0 = self.constant_term();
        let g = self.sub(&Poly::constant(c0));
        let bound = g.coefficient_bound();
        let mut sum = Poly::constant(C64::new(1.0, 0.0));
        let mut gk = Poly::constant(C64::new(1.0, 0.0));
        let mut fact = 1.0;
        for k in 1..=order {
            gk = gk.mul(&g);
            fact *= k as f64;
            sum = sum.add(&gk.scale(C64::new(1.0 / fact, 0.0)));
        }
        let scale = c0.exp();
        let tail = if g.is_empty() { 0.0 } else { bound.powi(order as i32 + 1) / (fact * (order + 1) as f64) * bound.exp() };
        let mut out = sum.scale(scale);
        out.truncation = (tail + self.truncation * bound.exp()) * scale.norm();
        out
    }

    /// log(f) for f near a positive constant.
    pub fn ln(&self, order: u32) -> Result<Poly> {
        let (c0, g, bound) = self.split()?;
        if g.is_empty() {
            return Ok(Poly::constant(c0.ln()).with_truncation(self.truncation / c0.norm()));
        }
        if bound >= 1.0 {
            return Err(Error::SeriesDivergence(bound));
        }
        let mut sum = Poly::constant(c0.ln());
        let mut gk = Poly::constant(C64::new(1.0, 0.0));
        for k in 1..=order {
            gk = gk.mul(&g);
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum = sum.add(&gk.scale(C64::new(s / k as f64, 0.0)));
        }
        let tail = bound.powi(order as i32 + 1) / ((order + 1) as f64 * (1.0 - bound));
        sum.truncation = tail + self.truncation / c0.norm();
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn reduction_makes_radius_one() {
        let r2 = Poly::from_terms([([1, 1, 0, 0], c(1.0)), ([0, 0, 1, 1], c(1.0))]);
        assert!(r2.is_constant());
        assert_eq!(r2.constant_term(), c(1.0));
    }

    #[test]
    fn frame_kills_radius() {
        let r2 = Poly::z1().mul(&Poly::z1bar()).add(&Poly::z2().mul(&Poly::z2bar()));
        assert!(r2.z1_derivative().is_empty());
        assert!(r2.z1bar_derivative().is_empty());
        assert!(r2.t_derivative().is_empty());
    }

    #[test]
    fn z1_of_z1_z2bar() {
        let f = Poly::z1().mul(&Poly::z2bar());
        let g = f.z1_derivative();
        assert_eq!(g, Poly::monomial([0, 0, 0, 2], c(1.0)));
    }

    #[test]
    fn monomial_integrals() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((Poly::constant(c(1.0)).integrate().re - 2.0 * pi2).abs() < 1e-12);
        let r1 = Poly::monomial([1, 1, 0, 0], c(1.0));
        assert!((r1.integrate().re - pi2).abs() < 1e-12);
        let diff = r1.sub(&Poly::monomial([0, 0, 1, 1], c(1.0)));
        assert!(diff.integrate().norm() < 1e-12);
    }

    #[test]
    fn series_exact_for_constants() {
        let f = Poly::constant(c(4.0));
        let r = f.powf(-0.5, 3).unwrap();
        assert_eq!(r.constant_term(), c(0.5));
        assert_eq!(r.truncation(), 0.0);
    }

    #[test]
    fn series_reciprocal_converges() {
        let f = Poly::constant(c(1.0)).add(&Poly::monomial([1, 0, 0, 1], c(0.1)));
        let inv = f.powf(-1.0, 12).unwrap();
        let prod = f.mul(&inv).sub(&Poly::constant(c(1.0)));
        assert!(prod.coefficient_bound() < 1e-12);
        assert!(inv.truncation() < 1e-11);
    }

    #[test]
    fn series_divergence_reported() {
        let f = Poly::constant(c(1.0)).add(&Poly::monomial([1, 0, 0, 0], c(2.0)));
        assert!(matches!(f.powf(0.5, 4), Err(Error::SeriesDivergence(_))));
    }
}
