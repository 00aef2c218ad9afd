//! Residuals of the contact monopole equations on a pseudohermitian
//! background, together with gauge moves and the hypothesis report.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::exterior::{FormField, FormSnapshot};
use crate::field::{FieldSnapshot, ScalarField};
use crate::manifold::{Backend, SampleManifold};
use crate::pseudohermitian::{CovDir, PHData};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Candidate fields (α, β_1̄, a).
#[derive(Debug, Clone)]
pub struct MonopoleFields {
    pub alpha: ScalarField,
    pub beta1bar: ScalarField,
    /// Real 1-form, the abelian part of the spin-c connection.
    pub a: FormField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonopoleSnapshot {
    pub alpha: FieldSnapshot,
    pub beta1bar: FieldSnapshot,
    pub a: FormSnapshot,
}

impl MonopoleFields {
    /// α = β_1̄ = 0, a = 0.
    pub fn zero(m: &SampleManifold) -> Result<MonopoleFields> {
        Ok(MonopoleFields {
            alpha: ScalarField::zero(m),
            beta1bar: ScalarField::zero(m),
            a: FormField::zero(m, 1)?,
        })
    }

    pub fn snapshot(&self) -> MonopoleSnapshot {
        MonopoleSnapshot { alpha: self.alpha.snapshot(), beta1bar: self.beta1bar.snapshot(), a: self.a.snapshot() }
    }

    pub fn from_snapshot(s: &MonopoleSnapshot) -> Result<MonopoleFields> {
        Ok(MonopoleFields {
            alpha: ScalarField::from_snapshot(&s.alpha)?,
            beta1bar: ScalarField::from_snapshot(&s.beta1bar)?,
            a: FormField::from_snapshot(&s.a)?,
        })
    }

    fn check(&self, ph: &PHData) -> Result<()> {
        let m = ph.manifold();
        if self.a.degree() != 1 {
            return Err(Error::BadDegree(self.a.degree()));
        }
        for (name, mm) in [("alpha", self.alpha.manifold()), ("beta1bar", self.beta1bar.manifold()), ("a", self.a.manifold())] {
            if mm != m {
                return Err(Error::ManifoldMismatch(format!("{name} does not live on the background manifold")));
            }
        }
        Ok(())
    }
}

fn twist() -> f64 {
    f64::from(Conventions::get().twist_sign)
}

/// ∂̄_b^a α = X_1̄α + i·a(X_1̄)·α.
pub fn twisted_dbar(ph: &PHData, alpha: &ScalarField, a: &FormField) -> Result<ScalarField> {
    let d = ph.covariant_derivative(alpha, (0, 0), CovDir::OneBar)?;
    d.add(&a.coeff(2).mul(alpha)?.scale(I * twist()))
}

/// β_1̄,₁^a = β_1̄,₁ + i·a(X₁)·β_1̄, the twisted covariant derivative of the
/// (0,1)-component.
pub fn twisted_beta_derivative(ph: &PHData, beta1bar: &ScalarField, a: &FormField) -> Result<ScalarField> {
    let d = ph.covariant_derivative(beta1bar, (0, 1), CovDir::One)?;
    d.add(&a.coeff(1).mul(beta1bar)?.scale(I * twist()))
}

/// Formal adjoint of ∂̄_b^a for the θ∧dθ pairing: −β_1̄,₁^a.
pub fn twisted_dbar_adjoint(ph: &PHData, beta1bar: &ScalarField, a: &FormField) -> Result<ScalarField> {
    Ok(twisted_beta_derivative(ph, beta1bar, a)?.neg())
}

/// ⟨f, g⟩ = ∫ f·conj(g) θ∧dθ.
pub fn l2_pairing(ph: &PHData, f: &ScalarField, g: &ScalarField) -> Result<C64> {
    ph.coframe().integrate(&ph.theta_dtheta()?.mul_fn(&f.mul(&g.conj())?)?)
}

pub fn l2_norm(ph: &PHData, f: &ScalarField) -> Result<f64> {
    Ok(l2_pairing(ph, f, f)?.re.max(0.0).sqrt())
}

/// da(e₁, e₂) with e₁ = X₁ + X_1̄, e₂ = i(X₁ − X_1̄).
pub fn curvature_on_legs(ph: &PHData, a: &FormField) -> Result<ScalarField> {
    let da = ph.coframe().d(a)?;
    Ok(da.coeff(0).scale(C64::new(0.0, -2.0)))
}

#[derive(Debug, Clone)]
pub struct MonopoleResidual {
    /// [α,_1̄^a, β_1̄,₁^a].
    pub dirac: [ScalarField; 2],
    /// da(e₁,e₂) − W − |α|² + |β_1̄|².
    pub curvature: ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineNorms {
    pub sup: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub alpha_line: LineNorms,
    pub beta_line: LineNorms,
    pub curvature_line: LineNorms,
}

pub fn residuals(ph: &PHData, mf: &MonopoleFields) -> Result<MonopoleResidual> {
    mf.check(ph)?;
    let r1 = twisted_dbar(ph, &mf.alpha, &mf.a)?;
    let r2 = twisted_beta_derivative(ph, &mf.beta1bar, &mf.a)?;
    let curvature = curvature_on_legs(ph, &mf.a)?
        .sub(ph.w())?
        .sub(&mf.alpha.norm_sqr())?
        .add(&mf.beta1bar.norm_sqr())?;
    Ok(MonopoleResidual { dirac: [r1, r2], curvature })
}

impl MonopoleResidual {
    pub fn report(&self, ph: &PHData) -> Result<ResidualReport> {
        let norms = |f: &ScalarField| -> Result<LineNorms> { Ok(LineNorms { sup: f.sup_norm(), l2: l2_norm(ph, f)? }) };
        Ok(ResidualReport {
            alpha_line: norms(&self.dirac[0])?,
            beta_line: norms(&self.dirac[1])?,
            curvature_line: norms(&self.curvature)?,
        })
    }
}

/// α → e^{iγ}α, β_1̄ → e^{iγ}β_1̄, a → a − dγ for a real γ.
pub fn gauge_transform(ph: &PHData, mf: &MonopoleFields, gamma: &ScalarField) -> Result<MonopoleFields> {
    let phase = gamma.scale(I * twist()).exp()?;
    let dgamma = ph.coframe().df(gamma)?;
    Ok(MonopoleFields {
        alpha: mf.alpha.mul(&phase)?,
        beta1bar: mf.beta1bar.mul(&phase)?,
        a: mf.a.sub(&dgamma)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub torsion_free: bool,
    pub w_positive: bool,
    pub torsion_sup: f64,
    pub min_w: f64,
    /// Fraction of the round volume on which W ≤ 0.
    pub negative_fraction: f64,
    pub verdict: String,
}

/// Check whether the background satisfies A₁₁ = 0 and W > 0.
pub fn obstruction_report(ph: &PHData, torsion_tol: f64) -> Result<ObstructionReport> {
    let torsion_sup = ph.a11().sup_norm();
    let min_w = ph.w().min_re();
    let negative_fraction = negative_fraction(ph.w())?;
    let torsion_free = torsion_sup <= torsion_tol;
    let w_positive = min_w > 0.0;
    let verdict = match (torsion_free, w_positive) {
        (true, true) => "torsion-free background with positive Tanaka-Webster curvature: hypotheses hold".to_string(),
        (false, true) => format!("hypotheses fail: torsion sup {torsion_sup:.3e} exceeds {torsion_tol:.1e}"),
        (true, false) => format!("hypotheses fail: W is not positive (W <= 0 on {:.2}% of the volume)", 100.0 * negative_fraction),
        (false, false) => format!(
            "hypotheses fail: torsion sup {torsion_sup:.3e} and W <= 0 on {:.2}% of the volume",
            100.0 * negative_fraction
        ),
    };
    Ok(ObstructionReport { torsion_free, w_positive, torsion_sup, min_w, negative_fraction, verdict })
}

fn negative_fraction(w: &ScalarField) -> Result<f64> {
    let on_grid = match w.manifold().backend {
        Backend::HopfGrid { .. } => w.clone(),
        Backend::PolynomialExact { .. } => w.resample(&w.manifold().with_backend(Backend::grid(24, 24, 24))?)?,
    };
    let ind: Vec<C64> = on_grid
        .sample_values()
        .iter()
        .map(|x| C64::new(if x.re <= 0.0 { 1.0 } else { 0.0 }, 0.0))
        .collect();
    let ind = ScalarField::from_samples(on_grid.manifold(), ind, 0)?;
    let vol = ScalarField::real_constant(on_grid.manifold(), 1.0).integrate()?.re;
    Ok(ind.integrate()?.re / vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Backend;
    use crate::poly::Poly;
    use crate::pseudohermitian::{solve_ph, AdmissibleCoframe};

    fn standard() -> PHData {
        let m = SampleManifold::sphere(Backend::poly()).unwrap();
        solve_ph(&AdmissibleCoframe::standard(&m)).unwrap()
    }

    #[test]
    fn constants_are_holomorphic() {
        let ph = standard();
        let m = *ph.manifold();
        let a = FormField::zero(&m, 1).unwrap();
        let r = twisted_dbar(&ph, &ScalarField::constant(&m, C64::new(0.3, 1.0)), &a).unwrap();
        assert_eq!(r.sup_norm(), 0.0);
    }

    #[test]
    fn dbar_of_z1bar() {
        // X_1̄ = z₂∂_{z̄₁} − z₁∂_{z̄₂} on the standard sphere, so X_1̄ z̄₁ = z₂.
        let ph = standard();
        let m = *ph.manifold();
        let a = FormField::zero(&m, 1).unwrap();
        let r = twisted_dbar(&ph, &ScalarField::from_poly(&m, &Poly::z1bar()), &a).unwrap();
        let want = ScalarField::from_poly(&m, &Poly::z2());
        assert!(r.sup_distance(&want).unwrap() < 1e-14);
    }

    #[test]
    fn zero_configuration_gives_minus_w() {
        let ph = standard();
        let mf = MonopoleFields::zero(ph.manifold()).unwrap();
        let res = residuals(&ph, &mf).unwrap();
        assert!(res.curvature.add(ph.w()).unwrap().sup_norm() < 1e-14);
        assert!((res.curvature.max_re() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn standard_background_meets_hypotheses() {
        let ph = standard();
        let rep = obstruction_report(&ph, 1e-8).unwrap();
        assert!(rep.torsion_free && rep.w_positive);
        assert_eq!(rep.negative_fraction, 0.0);
    }
}
