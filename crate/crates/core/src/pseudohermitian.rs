//! Admissible coframes, the pseudohermitian structure equations, covariant
//! derivatives and the Cartan tensor.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::conventions::{Conventions, SignBits};
use crate::error::{Error, Result};
use crate::exterior::{Coframe, FormField};
use crate::field::ScalarField;
use crate::manifold::SampleManifold;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default threshold for the admissibility and reality checks.
pub const DEFAULT_TOL: f64 = 1e-6;

/// A coframe (θ, θ¹) with dθ = iθ¹∧θ^1̄ exactly.
#[derive(Debug, Clone)]
pub struct AdmissibleCoframe {
    u: ScalarField,
    e: ScalarField,
    coframe: Arc<Coframe>,
    admissibility: f64,
}

fn swap_hat(b: usize) -> usize {
    [0, 2, 1][b]
}

/// Row of the conjugate 1-form in the standard basis.
fn conj_row(row: &[ScalarField; 3]) -> [ScalarField; 3] {
    std::array::from_fn(|b| row[swap_hat(b)].conj())
}

fn admissibility_of(cf: &Coframe) -> Result<f64> {
    let dtheta = cf.structure(0);
    let target = FormField::basis2(ScalarField::constant(cf.manifold(), I), 0);
    Ok(dtheta.sub(&target)?.sup_norm())
}

impl AdmissibleCoframe {
    pub fn standard(manifold: &SampleManifold) -> AdmissibleCoframe {
        let cf = Coframe::standard(manifold);
        AdmissibleCoframe {
            u: ScalarField::real_constant(manifold, 1.0),
            e: ScalarField::from_poly_charged(manifold, &crate::poly::Poly::zero(), -2 * manifold.z1_charge_shift()),
            coframe: Arc::new(cf),
            admissibility: 0.0,
        }
    }

    fn from_rows(u: ScalarField, e: ScalarField, row0: [ScalarField; 3], row1: [ScalarField; 3], tol: f64) -> Result<Self> {
        let row2 = conj_row(&row1);
        let coframe = Coframe::from_matrix([row0, row1, row2])?;
        let admissibility = admissibility_of(&coframe)?;
        let slack = tol + coframe.structure(0).truncation();
        if admissibility > slack {
            return Err(Error::Inadmissible(admissibility, tol));
        }
        Ok(AdmissibleCoframe { u, e, coframe: Arc::new(coframe), admissibility })
    }

    /// Contact factor relative to the standard form: θ = u·θ̂.
    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    /// CR deformation: θ¹ ∝ θ̂¹ + E·θ̂^1̄ (mod θ̂).
    pub fn e(&self) -> &ScalarField {
        &self.e
    }

    pub fn coframe(&self) -> &Coframe {
        &self.coframe
    }

    pub(crate) fn coframe_arc(&self) -> Arc<Coframe> {
        self.coframe.clone()
    }

    pub fn manifold(&self) -> &SampleManifold {
        self.u.manifold()
    }

    /// sup |dθ − iθ¹∧θ^1̄|.
    pub fn admissibility_residual(&self) -> f64 {
        self.admissibility
    }

    /// The contact form θ as a 1-form.
    pub fn theta(&self) -> FormField {
        FormField::basis1(ScalarField::real_constant(self.manifold(), 1.0), 0)
    }

    /// θ∧dθ as a 3-form.
    pub fn theta_dtheta(&self) -> Result<FormField> {
        self.theta().wedge(self.coframe.structure(0))
    }
}

/// Build the normalized coframe for contact factor `u` and deformation `e`.
pub fn build_coframe(u: &ScalarField, e: &ScalarField) -> Result<AdmissibleCoframe> {
    build_coframe_tol(u, e, DEFAULT_TOL)
}

pub fn build_coframe_tol(u: &ScalarField, e: &ScalarField, tol: f64) -> Result<AdmissibleCoframe> {
    let m = *u.manifold();
    if *e.manifold() != m {
        return Err(Error::ManifoldMismatch("u and E on different manifolds".into()));
    }
    let u = u.clone().into_real(tol)?;
    let umin = u.min_re();
    if umin <= 0.0 {
        return Err(Error::NonPositive(umin));
    }
    let esup = e.sup_norm();
    if esup >= 1.0 {
        return Err(Error::DeformationTooLarge(esup));
    }
    let e = if m.reduce_charge(e.charge()) == m.reduce_charge(-2 * m.z1_charge_shift()) || e.sup_norm() == 0.0 {
        e.clone()
    } else {
        return Err(Error::ManifoldMismatch(format!("deformation has lens charge {}", e.charge())));
    };
    let one = ScalarField::real_constant(&m, 1.0);
    let zero = ScalarField::zero(&m);
    let h_inv = one.sub(&e.norm_sqr())?;
    let lambda = u.div(&h_inv)?.sqrt()?.assume_real();
    let [_, zu, zbu] = u.frame_derivatives();
    let v = zbu.sub(&e.mul(&zu)?)?.div(&u)?.scale(I);
    let row0 = [u.clone(), zero.clone(), zero];
    let row1 = [lambda.mul(&v)?, lambda.clone(), lambda.mul(&e)?];
    AdmissibleCoframe::from_rows(u, e, row0, row1, tol)
}

/// Residuals recorded by [`solve_ph`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhResiduals {
    pub admissibility: f64,
    /// sup |dθ¹ − θ¹∧ω₁¹ − A¹_1̄ θ∧θ^1̄|.
    pub reconstruction: f64,
    /// sup |Re(a₀)| for the θ-coefficient a₀ of ω₁¹.
    pub reality: f64,
    /// sup |Im W|.
    pub imag_w: f64,
    /// Series truncation bound carried by the coefficients (0 on the grid).
    pub truncation: f64,
}

/// Solved pseudohermitian data.
#[derive(Debug, Clone)]
pub struct PHData {
    coframe: Arc<Coframe>,
    omega: FormField,
    a1_1bar: ScalarField,
    a11: ScalarField,
    w: ScalarField,
    signs: SignBits,
    pub residuals: PhResiduals,
}

/// Direction of a covariant derivative: `1`, `1̄` or `0` (the T-direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovDir {
    One,
    OneBar,
    Zero,
}

impl CovDir {
    fn index(self) -> usize {
        match self {
            CovDir::Zero => 0,
            CovDir::One => 1,
            CovDir::OneBar => 2,
        }
    }
}

pub fn solve_ph(cf: &AdmissibleCoframe) -> Result<PHData> {
    solve_ph_with(cf, Conventions::get().sign_bits, DEFAULT_TOL)
}

/// Solve with explicit sign bits and tolerance.
pub fn solve_ph_with(cf: &AdmissibleCoframe, signs: SignBits, tol: f64) -> Result<PHData> {
    let coframe = cf.coframe_arc();
    let adm = admissibility_of(&coframe)?;
    let trunc = coframe.structure(0).truncation().max(coframe.structure(1).truncation());
    if adm > tol + trunc {
        return Err(Error::Inadmissible(adm, tol));
    }
    let d1 = coframe.structure(1);
    let (p, q, r) = (d1.coeff(0), d1.coeff(1), d1.coeff(2));
    let omega = FormField::one_form([q.neg(), p.conj().neg(), p.clone()]);
    let reality = q.re().sup_norm();
    if reality > tol + trunc {
        return Err(Error::Reality(reality, tol));
    }
    let dw = coframe.d(&omega)?;
    let w_raw = dw.coeff(0).clone();
    let imag_w = w_raw.imag_sup();
    if imag_w > tol + dw.truncation() {
        return Err(Error::Reality(imag_w, tol));
    }
    let w = w_raw.re();
    let one = ScalarField::real_constant(coframe.manifold(), 1.0);
    let theta1 = FormField::basis1(one.clone(), 1);
    let tt1bar = FormField::basis2(r.clone(), 2);
    let recon = theta1.wedge(&omega)?.add(&tt1bar)?;
    let reconstruction = d1.sub(&recon)?.sup_norm();
    let a11 = if signs.torsion_conjugate { r.conj() } else { r.clone() };
    let a1_1bar = r.clone();
    let residuals = PhResiduals {
        admissibility: adm,
        reconstruction,
        reality,
        imag_w,
        truncation: dw.truncation().max(trunc),
    };
    Ok(PHData { coframe, omega, a1_1bar, a11, w, signs, residuals })
}

impl PHData {
    /// ω₁¹.
    pub fn omega(&self) -> &FormField {
        &self.omega
    }

    /// A₁₁ under the active sign convention.
    pub fn a11(&self) -> &ScalarField {
        &self.a11
    }

    /// A¹_1̄, the θ∧θ^1̄ coefficient of dθ¹.
    pub fn a1_1bar(&self) -> &ScalarField {
        &self.a1_1bar
    }

    /// Tanaka-Webster curvature.
    pub fn w(&self) -> &ScalarField {
        &self.w
    }

    pub fn coframe(&self) -> &Coframe {
        &self.coframe
    }

    pub fn signs(&self) -> SignBits {
        self.signs
    }

    pub fn manifold(&self) -> &SampleManifold {
        self.coframe.manifold()
    }

    /// Covariant derivative of a component with `weights = (n₁, n₁̄)` lower
    /// indices in direction `dir`.
    pub fn covariant_derivative(&self, t: &ScalarField, weights: (i32, i32), dir: CovDir) -> Result<ScalarField> {
        let a = dir.index();
        let xt = self.coframe.derivative(t, a)?;
        let k = weights.0 - weights.1;
        if k == 0 {
            return Ok(xt);
        }
        let s = f64::from(self.signs.connection) * f64::from(k);
        xt.sub(&self.omega.coeff(a).mul(t)?.scale_re(s))
    }

    /// sup |ω₁¹ + conj(ω₁¹)|.
    pub fn omega_reality_residual(&self) -> Result<f64> {
        Ok(self.omega.add(&self.omega.conj())?.sup_norm())
    }

    /// θ∧dθ for the solved coframe.
    pub fn theta_dtheta(&self) -> Result<FormField> {
        FormField::basis1(ScalarField::real_constant(self.manifold(), 1.0), 0).wedge(self.coframe.structure(0))
    }
}

/// Q₁₁ = (1/6)W,₁₁ + (i/2)W A₁₁ − A₁₁,₀ − (2i/3)A₁₁,1̄1.
pub fn cartan_tensor(ph: &PHData) -> Result<ScalarField> {
    let w = ph.w();
    let a = ph.a11();
    let w1 = ph.covariant_derivative(w, (0, 0), CovDir::One)?;
    let w11 = ph.covariant_derivative(&w1, (1, 0), CovDir::One)?;
    let a0 = ph.covariant_derivative(a, (2, 0), CovDir::Zero)?;
    let a1b = ph.covariant_derivative(a, (2, 0), CovDir::OneBar)?;
    let a1b1 = ph.covariant_derivative(&a1b, (2, 1), CovDir::One)?;
    w11.scale_re(1.0 / 6.0)
        .add(&w.mul(a)?.scale(C64::new(0.0, 0.5)))?
        .sub(&a0)?
        .sub(&a1b1.scale(C64::new(0.0, 2.0 / 3.0)))
}

/// Sphericality verdict: sup |Q₁₁| < tol.
pub fn is_spherical(q: &ScalarField, tol: f64) -> bool {
    q.sup_norm() < tol
}

/// Parameters of a coframe change θ̃ = uθ, θ̃¹ = u₁¹θ¹ + v¹θ.
#[derive(Debug, Clone)]
pub struct CoframeChange {
    pub u: ScalarField,
    pub u11: ScalarField,
    pub v1: ScalarField,
    pub s: ScalarField,
}

impl CoframeChange {
    pub fn identity(cf: &AdmissibleCoframe) -> CoframeChange {
        let m = cf.manifold();
        let one = ScalarField::real_constant(m, 1.0);
        CoframeChange {
            u: one.clone(),
            u11: one,
            v1: ScalarField::from_poly_charged(m, &crate::poly::Poly::zero(), -m.z1_charge_shift()),
            s: ScalarField::zero(m),
        }
    }

    /// The change with given `u` and phase direction `u11` whose shift v¹
    /// keeps the transformed coframe in the φ = 0 gauge.
    pub fn admissible(cf: &AdmissibleCoframe, u: &ScalarField, u11: &ScalarField) -> Result<CoframeChange> {
        let u11 = normalize_u11(u, u11)?;
        let x1bar_u = cf.coframe().derivative(u, 2)?;
        let v1 = x1bar_u.div(&u11.conj())?.scale(I);
        Ok(CoframeChange { u: u.clone(), u11, v1, s: ScalarField::zero(u.manifold()) })
    }
}

/// Rescale u₁¹ so that |u₁¹|² = u, keeping its phase.
fn normalize_u11(u: &ScalarField, u11: &ScalarField) -> Result<ScalarField> {
    let ratio = u.div(&u11.norm_sqr())?;
    u11.mul(&ratio.sqrt()?.assume_real())
}

/// Result of [`transform_coframe`].
#[derive(Debug, Clone)]
pub struct TransformedCoframe {
    pub coframe: AdmissibleCoframe,
    /// Normalized u₁¹ (|u₁¹|² = u).
    pub u11: ScalarField,
    /// φ̃ = −du/u + (i/u)(u₁¹v̄θ¹ − v ū₁¹θ^1̄) + sθ in the old basis.
    pub phi_tilde: FormField,
}

pub fn transform_coframe(cf: &AdmissibleCoframe, ch: &CoframeChange) -> Result<TransformedCoframe> {
    transform_coframe_tol(cf, ch, DEFAULT_TOL)
}

pub fn transform_coframe_tol(cf: &AdmissibleCoframe, ch: &CoframeChange, tol: f64) -> Result<TransformedCoframe> {
    let u = ch.u.clone().into_real(tol)?;
    let umin = u.min_re();
    if umin <= 0.0 {
        return Err(Error::NonPositive(umin));
    }
    let s = ch.s.clone().into_real(tol)?;
    let u11 = normalize_u11(&u, &ch.u11)?;
    let old = cf.coframe().matrix();
    let row0: [ScalarField; 3] = std::array::from_fn(|b| old[0][b].mul(&u).expect("same manifold"));
    let row1: [ScalarField; 3] = std::array::from_fn(|b| {
        old[1][b].mul(&u11).and_then(|x| x.add(&old[0][b].mul(&ch.v1)?)).expect("consistent charges")
    });
    let du = cf.coframe().df(&u)?;
    let inv_u = u.recip()?;
    let c1 = u11.mul(&ch.v1.conj())?.mul(&inv_u)?.scale(I);
    let c2 = ch.v1.mul(&u11.conj())?.mul(&inv_u)?.scale(-I);
    let shift = FormField::one_form([s, c1, c2]);
    let phi_tilde = du.mul_fn(&inv_u)?.neg().add(&shift)?;
    let new_u = cf.u().mul(&u)?;
    let coframe = AdmissibleCoframe::from_rows(new_u, cf.e().clone(), row0, row1, tol)?;
    Ok(TransformedCoframe { coframe, u11, phi_tilde })
}
