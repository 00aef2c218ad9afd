//! The Cartan connection in the gauge φ = 0, its curvature and the
//! transgression route to μ.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{matrix_wedge, Coframe, FormField, MatrixForm};
use crate::field::ScalarField;
use crate::pseudohermitian::{AdmissibleCoframe, PHData};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Residual norms of the structure equations, by line.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartanResiduals {
    pub normalization: f64,
    /// dθ¹ − θ¹∧φ₁¹ − θ∧φ¹.
    pub first_1: f64,
    /// dφ − 2Re(iθ_1̄∧φ^1̄) − θ∧ψ.
    pub first_2: f64,
    /// All components of the φ₁¹ line of the second structure equations.
    pub second_1: f64,
    /// Components of the φ¹ line other than the θ^1̄∧θ component.
    pub second_2: f64,
    /// θ¹∧θ^1̄ component of the ψ line.
    pub second_3: f64,
    /// sup |R_1̄ − conj(R₁)|.
    pub r_reality: f64,
    /// sup |Im δ|.
    pub delta_reality: f64,
    pub trace_pi: f64,
}

#[derive(Debug, Clone)]
pub struct CartanPackage {
    pub phi: FormField,
    pub phi11: FormField,
    pub phi1: FormField,
    pub psi: FormField,
    pub pi: MatrixForm,
    pub omega: MatrixForm,
    pub q1_1bar: ScalarField,
    pub r1: ScalarField,
    pub r1bar: ScalarField,
    pub residuals: CartanResiduals,
    coframe: Coframe,
}

fn basis1(f: &ScalarField, idx: usize) -> FormField {
    FormField::basis1(f.clone(), idx)
}

/// Solve the Cartan structure equations on an admissible coframe.
pub fn solve_cartan(cf: &AdmissibleCoframe, ph: &PHData) -> Result<CartanPackage> {
    let coframe = cf.coframe().clone();
    let m = *cf.manifold();
    let one = ScalarField::real_constant(&m, 1.0);
    let theta = basis1(&one, 0);
    let theta1 = basis1(&one, 1);
    let theta1bar = basis1(&one, 2);

    let omega = ph.omega();
    let w = ph.w();
    let r = ph.a1_1bar();
    let alpha = w.scale(c(0.0, 0.25));
    let domega = coframe.d(omega)?;
    let x1bar_alpha = coframe.derivative(&alpha, 2)?;
    let gamma = domega.coeff(2).sub(&x1bar_alpha)?.scale(c(0.0, 2.0 / 3.0));
    let eps = gamma.conj().scale(I);

    let phi = FormField::zero(&m, 1)?;
    let phi11 = omega.add(&theta.mul_fn(&alpha)?)?;
    let phi1 = FormField::one_form([gamma.clone(), alpha.clone(), r.clone()]);
    let phi1bar = phi1.conj();
    let psi0 = FormField::one_form([ScalarField::zero(&m), eps.clone(), eps.conj()]);

    let line2 = |psi: &FormField| -> Result<FormField> {
        coframe
            .d(&phi1)?
            .sub(&phi.wedge(&phi1)?)?
            .sub(&phi1.wedge(&phi11)?)?
            .add(&psi.wedge(&theta1)?.scale_re(0.5))
    };
    let l2_0 = line2(&psi0)?;
    let delta_raw = l2_0.coeff(1).scale_re(-2.0);
    let delta_reality = delta_raw.imag_sup();
    let delta = delta_raw.re();
    let psi = psi0.add(&theta.mul_fn(&delta)?)?;
    let l2 = line2(&psi)?;
    let q1_1bar = l2.coeff(2).neg();

    // second structure equations, line 1
    let l1 = coframe
        .d(&phi11)?
        .sub(&theta1bar.wedge(&phi1)?.scale(I))?
        .add(&phi1bar.wedge(&theta1)?.scale(c(0.0, 2.0)))?
        .add(&psi.wedge(&theta)?.scale_re(0.5))?;
    // line 3
    let l3 = coframe
        .d(&psi)?
        .sub(&phi.wedge(&psi)?)?
        .sub(&phi1.wedge(&phi1bar)?.scale(c(0.0, 2.0)))?;
    let r1 = l3.coeff(1).neg();
    let r1bar = l3.coeff(2).neg();

    // first structure equations
    let f1 = coframe
        .structure(1)
        .sub(&theta1.wedge(&phi11)?)?
        .sub(&theta.wedge(&phi1)?)?;
    let it_phi = theta1.wedge(&phi1bar)?.scale(I);
    let f2 = coframe
        .d(&phi)?
        .sub(&it_phi.add(&it_phi.conj())?)?
        .sub(&theta.wedge(&psi)?)?;

    let normalization = phi.sub(&phi11)?.sub(&phi11.conj())?.sup_norm();
    let pi = cartan_matrix(&phi, &phi11, &phi1, &psi, &m)?;
    let trace_pi = pi.trace()?.sup_norm();
    let omega_m = pi.d(&coframe)?.sub(&matrix_wedge(&pi, &pi)?)?;
    let residuals = CartanResiduals {
        normalization,
        first_1: f1.sup_norm(),
        first_2: f2.sup_norm(),
        second_1: l1.sup_norm(),
        second_2: l2.coeff(0).sup_norm().max(l2.coeff(1).sup_norm()),
        second_3: l3.coeff(0).sup_norm(),
        r_reality: r1bar.sub(&r1.conj())?.sup_norm(),
        delta_reality,
        trace_pi,
    };
    Ok(CartanPackage {
        phi,
        phi11,
        phi1,
        psi,
        pi,
        omega: omega_m,
        q1_1bar,
        r1,
        r1bar,
        residuals,
        coframe,
    })
}

/// Check the stage-one residuals against a tolerance, naming the first
/// offending line.
pub fn check_residuals(res: &CartanResiduals, tol: f64) -> Result<()> {
    let lines = [
        ("normalization", res.normalization),
        ("first structure equation, theta1 line", res.first_1),
        ("first structure equation, phi line", res.first_2),
        ("second structure equation, phi11 line", res.second_1),
        ("second structure equation, phi1 line", res.second_2),
        ("second structure equation, psi line", res.second_3),
    ];
    for (line, value) in lines {
        if !(value <= tol) {
            if line == "normalization" {
                return Err(Error::Normalization(value));
            }
            return Err(Error::StructureResidual { line: line.into(), value, tol });
        }
    }
    Ok(())
}

fn cartan_matrix(
    phi: &FormField,
    phi11: &FormField,
    phi1: &FormField,
    psi: &FormField,
    m: &crate::manifold::SampleManifold,
) -> Result<MatrixForm> {
    let one = ScalarField::real_constant(m, 1.0);
    let third = 1.0 / 3.0;
    let phi1bar = phi1.conj();
    let phi1b1b = phi11.conj();
    let e00 = phi11.add(phi)?.scale_re(-third);
    let e01 = basis1(&one, 1);
    let e02 = basis1(&one, 0).scale_re(2.0);
    let e10 = phi1bar.scale(-I);
    let e11 = phi11.scale_re(2.0).sub(phi)?.scale_re(third);
    let e12 = basis1(&one, 2).scale(c(0.0, 2.0));
    let e20 = psi.scale_re(-0.25);
    let e21 = phi1.scale_re(0.5);
    let e22 = phi.add(&phi1b1b)?.scale_re(third);
    MatrixForm::new([[e00, e01, e02], [e10, e11, e12], [e20, e21, e22]])
}

impl CartanPackage {
    pub fn coframe(&self) -> &Coframe {
        &self.coframe
    }

    /// Ω = dΠ − Π∧Π.
    pub fn curvature(&self) -> &MatrixForm {
        &self.omega
    }

    /// sup of tr(Π∧Ω).
    pub fn trace_pi_omega(&self) -> Result<f64> {
        Ok(matrix_wedge(&self.pi, &self.omega)?.trace()?.sup_norm())
    }

    /// sup of dΩ − (Π∧Ω − Ω∧Π).
    pub fn bianchi_residual(&self) -> Result<f64> {
        let d_omega = self.omega.d(&self.coframe)?;
        let rhs = matrix_wedge(&self.pi, &self.omega)?.sub(&matrix_wedge(&self.omega, &self.pi)?)?;
        Ok(d_omega.sub(&rhs)?.sup_norm())
    }

    /// Largest entry of Ω outside the (1,0), (2,0), (2,1) positions.
    pub fn curvature_pattern_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if !matches!((i, j), (1, 0) | (2, 0) | (2, 1)) {
                    worst = worst.max(self.omega.entry(i, j).sup_norm());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransgressionReport {
    /// (1/24π²) ∫ tr(Π∧Π∧Π).
    pub mu_trace: f64,
    /// (1/8π²) ∫ [2Re(iθ¹∧φ^1̄∧φ₁¹) + ½θ∧ψ∧φ − 2iθ∧φ¹∧φ^1̄ − ½d(θ∧ψ)].
    pub mu_middle: f64,
    /// (1/8π²) ∫ tr(Π∧Ω).
    pub trace_pi_omega_integral: f64,
    pub imag_residual: f64,
}

pub fn transgression_mu(pkg: &CartanPackage) -> Result<TransgressionReport> {
    let cf = &pkg.coframe;
    let m = *pkg.phi.manifold();
    let pp = matrix_wedge(&pkg.pi, &pkg.pi)?;
    let ppp = matrix_wedge(&pp, &pkg.pi)?;
    let t = cf.integrate(&ppp.trace()?)?;
    let one = ScalarField::real_constant(&m, 1.0);
    let theta = basis1(&one, 0);
    let theta1 = basis1(&one, 1);
    let phi1bar = pkg.phi1.conj();
    let a = theta1.wedge(&phi1bar)?.wedge(&pkg.phi11)?.scale(I);
    let a = a.add(&a.conj())?;
    let b = theta.wedge(&pkg.psi)?.wedge(&pkg.phi)?.scale_re(0.5);
    let cc = theta.wedge(&pkg.phi1)?.wedge(&phi1bar)?.scale(c(0.0, -2.0));
    let dd = cf.d(&theta.wedge(&pkg.psi)?)?.scale_re(-0.5);
    let mid = cf.integrate(&a.add(&b)?.add(&cc)?.add(&dd)?)?;
    let tpo = cf.integrate(&matrix_wedge(&pkg.pi, &pkg.omega)?.trace()?)?;
    Ok(TransgressionReport {
        mu_trace: t.re / (24.0 * PI * PI),
        mu_middle: mid.re / (8.0 * PI * PI),
        trace_pi_omega_integral: tpo.re / (8.0 * PI * PI),
        imag_residual: t.im.abs().max(mid.im.abs()) / (8.0 * PI * PI),
    })
}
