//! Sample manifolds: the round 3-sphere and its lens quotients, together with
//! the numerical backend that carries fields on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Topological type of the sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ManifoldKind {
    Sphere,
    /// Quotient of S³ by (z₁, z₂) ↦ (ζ z₁, ζ^q z₂), ζ = e^{2πi/p}.
    Lens { p: u32, q: i64 },
}

/// How fields are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Backend {
    /// Finite sums of monomials z₁^a z̄₁^b z₂^c z̄₂^d, reduced modulo |z|² = 1.
    /// Non-polynomial operations are expanded as truncated series of the
    /// given order.
    PolynomialExact { series_order: u32 },
    /// Cell-centred Hopf grid, spectral in all three directions.
    HopfGrid { n_eta: usize, n_xi1: usize, n_xi2: usize },
}

impl Backend {
    pub const fn poly() -> Self {
        Backend::PolynomialExact { series_order: 6 }
    }

    pub const fn grid(n_eta: usize, n_xi1: usize, n_xi2: usize) -> Self {
        Backend::HopfGrid { n_eta, n_xi1, n_xi2 }
    }

    /// Default desk-scale grid.
    pub const fn default_grid() -> Self {
        Backend::HopfGrid { n_eta: 64, n_xi1: 64, n_xi2: 32 }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Backend::HopfGrid { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Backend::PolynomialExact { .. } => "poly",
            Backend::HopfGrid { .. } => "grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleManifold {
    pub kind: ManifoldKind,
    pub backend: Backend,
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl SampleManifold {
    pub fn sphere(backend: Backend) -> Result<Self> {
        Self::new(ManifoldKind::Sphere, backend)
    }

    pub fn lens(p: u32, q: i64, backend: Backend) -> Result<Self> {
        Self::new(ManifoldKind::Lens { p, q }, backend)
    }

    pub fn new(kind: ManifoldKind, backend: Backend) -> Result<Self> {
        if let ManifoldKind::Lens { p, q } = kind {
            if p == 0 {
                return Err(Error::InvalidManifold("lens order p must be positive".into()));
            }
            if gcd(p as i64, q) != 1 {
                return Err(Error::InvalidManifold(format!("gcd({p}, {q}) != 1")));
            }
        }
        if let Backend::HopfGrid { n_eta, n_xi1, n_xi2 } = backend {
            for (axis, n) in [("n_eta", n_eta), ("n_xi1", n_xi1), ("n_xi2", n_xi2)] {
                if n < 8 {
                    return Err(Error::ResolutionTooLow { axis, got: n, min: 8 });
                }
            }
            if n_xi1 % 2 != 0 || n_xi2 % 2 != 0 {
                return Err(Error::InvalidManifold("xi resolutions must be even".into()));
            }
            if let ManifoldKind::Lens { p, .. } = kind {
                let p = p as usize;
                if n_xi1 % p != 0 || n_xi2 % p != 0 {
                    return Err(Error::InvalidManifold(format!(
                        "xi resolutions must be divisible by the lens order {p}"
                    )));
                }
            }
        }
        Ok(SampleManifold { kind, backend })
    }

    /// Order of the deck group.
    pub fn order(&self) -> u32 {
        match self.kind {
            ManifoldKind::Sphere => 1,
            ManifoldKind::Lens { p, .. } => p,
        }
    }

    /// Reduce a charge modulo the group order (always 0 on the sphere).
    pub fn reduce_charge(&self, k: i64) -> i64 {
        let p = self.order() as i64;
        k.rem_euclid(p)
    }

    /// Charge of the monomial z₁^a z̄₁^b z₂^c z̄₂^d under the generator.
    pub fn monomial_charge(&self, e: [u16; 4]) -> i64 {
        match self.kind {
            ManifoldKind::Sphere => 0,
            ManifoldKind::Lens { q, .. } => {
                let k = (e[0] as i64 - e[1] as i64) + q * (e[2] as i64 - e[3] as i64);
                self.reduce_charge(k)
            }
        }
    }

    /// Charge shift produced by the standard Z₁ derivative (Z₁ maps charge k to k − (1 + q)).
    pub fn z1_charge_shift(&self) -> i64 {
        match self.kind {
            ManifoldKind::Sphere => 0,
            ManifoldKind::Lens { q, .. } => -(1 + q),
        }
    }

    pub fn with_backend(&self, backend: Backend) -> Result<Self> {
        Self::new(self.kind, backend)
    }

    pub fn covering_sphere(&self) -> Self {
        SampleManifold { kind: ManifoldKind::Sphere, backend: self.backend }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_requires_coprime() {
        assert!(SampleManifold::lens(4, 2, Backend::poly()).is_err());
        assert!(SampleManifold::lens(5, 2, Backend::poly()).is_ok());
        assert!(SampleManifold::lens(1, 0, Backend::poly()).is_ok());
    }

    #[test]
    fn grid_resolution_floor() {
        let err = SampleManifold::sphere(Backend::grid(4, 16, 16)).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooLow { axis: "n_eta", .. }));
    }

    #[test]
    fn monomial_charges() {
        let m = SampleManifold::lens(3, 1, Backend::poly()).unwrap();
        assert_eq!(m.monomial_charge([1, 1, 0, 0]), 0);
        assert_eq!(m.monomial_charge([1, 0, 0, 0]), 1);
        assert_eq!(m.monomial_charge([1, 0, 1, 0]), 2);
        assert_eq!(m.monomial_charge([1, 0, 0, 1]), 0);
    }
}
