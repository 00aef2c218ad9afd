//! The global invariant μ from pseudohermitian data, lens quotients and the
//! local-rigidity certificate.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::manifold::{Backend, ManifoldKind, SampleManifold};
use crate::pseudohermitian::{build_coframe, solve_ph, AdmissibleCoframe, CovDir, PHData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuReport {
    pub mu: f64,
    /// ∫((1/6)W² + 2|A₁₁|²) θ∧dθ.
    pub curvature_torsion_term: f64,
    /// ∫(2/3) ω₁¹∧dω₁¹.
    pub chern_simons_term: f64,
    /// Largest imaginary part discarded from the two integrals.
    pub imag_residual: f64,
    pub backend: String,
    pub resolution: Option<[usize; 3]>,
    /// Quadrature error estimate (two resolutions on the grid, truncation
    /// bound on the polynomial backend).
    pub error_estimate: f64,
}

fn resolution_of(m: &SampleManifold) -> Option<[usize; 3]> {
    match m.backend {
        Backend::HopfGrid { n_eta, n_xi1, n_xi2 } => Some([n_eta, n_xi1, n_xi2]),
        Backend::PolynomialExact { .. } => None,
    }
}

/// μ = (1/8π²) ∫ [((1/6)W² + 2|A₁₁|²) θ∧dθ + (2/3) ω₁¹∧dω₁¹].
pub fn mu_pseudohermitian(ph: &PHData, cf: &AdmissibleCoframe) -> Result<MuReport> {
    let coframe = cf.coframe();
    let w = ph.w();
    let density = w.mul(w)?.scale_re(1.0 / 6.0).add(&ph.a11().norm_sqr().scale_re(2.0))?;
    let tdt = cf.theta_dtheta()?;
    let t1 = coframe.integrate(&tdt.mul_fn(&density)?)?;
    let omega = ph.omega();
    let cs = omega.wedge(&coframe.d(omega)?)?.scale_re(2.0 / 3.0);
    let t2 = coframe.integrate(&cs)?;
    let total = t1.re + t2.re;
    let trunc = density.truncation() + cs.truncation();
    Ok(MuReport {
        mu: total / (8.0 * PI * PI),
        curvature_torsion_term: t1.re,
        chern_simons_term: t2.re,
        imag_residual: t1.im.abs().max(t2.im.abs()),
        backend: cf.manifold().backend.label().into(),
        resolution: resolution_of(cf.manifold()),
        error_estimate: trunc * 4.0 * PI * PI / (8.0 * PI * PI),
    })
}

/// Coarser grid used for error estimates: three quarters of each axis,
/// kept even and compatible with the lens order.
pub fn coarser(m: &SampleManifold) -> Option<SampleManifold> {
    let Backend::HopfGrid { n_eta, n_xi1, n_xi2 } = m.backend else {
        return None;
    };
    let p = m.order() as usize;
    let step = 2 * p / crate::manifold::gcd(2, p as i64) as usize;
    let shrink = |n: usize, step: usize| ((n * 3 / 4) / step).max(1) * step;
    let b = Backend::grid(shrink(n_eta, 2).max(8), shrink(n_xi1, step).max(8), shrink(n_xi2, step).max(8));
    SampleManifold::new(m.kind, b).ok()
}

/// μ of the structure (u, E) with an error estimate. On the grid the
/// structure is re-solved on a coarser grid and the difference reported.
pub fn mu_of_structure(u: &ScalarField, e: &ScalarField) -> Result<MuReport> {
    let cf = build_coframe(u, e)?;
    let ph = solve_ph(&cf)?;
    let mut rep = mu_pseudohermitian(&ph, &cf)?;
    if let Some(c) = coarser(u.manifold()) {
        let cf2 = build_coframe(&u.resample(&c)?, &e.resample(&c)?)?;
        let ph2 = solve_ph(&cf2)?;
        rep.error_estimate = (mu_pseudohermitian(&ph2, &cf2)?.mu - rep.mu).abs();
    }
    Ok(rep)
}

/// μ on a lens quotient: the integrals run over Γ\S³.
pub fn mu_lens(p: u32, q: i64, ph: &PHData, cf: &AdmissibleCoframe) -> Result<MuReport> {
    match cf.manifold().kind {
        ManifoldKind::Lens { p: p0, q: q0 } if p0 == p && (q0 - q).rem_euclid(p as i64) == 0 => {}
        ManifoldKind::Sphere if p == 1 => {}
        _ => return Err(Error::ManifoldMismatch(format!("structure does not live on L({p},{q})"))),
    }
    mu_pseudohermitian(ph, cf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityCertificate {
    pub holds: bool,
    /// Pointwise minimum of min(W, 4W(5W² + 3Δ_bW) − 3|∇_bW|²).
    pub margin: f64,
    pub torsion_sup: f64,
    pub min_w: f64,
    /// Pointwise minimum of 4W(5W² + 3Δ_bW) − 3|∇_bW|².
    pub inequality_min: f64,
    pub reason: Option<String>,
}

/// Δ_bW = −(W,11̄ + W,1̄1).
pub fn sublaplacian(ph: &PHData, w: &ScalarField) -> Result<ScalarField> {
    let w1 = ph.covariant_derivative(w, (0, 0), CovDir::One)?;
    let w1b = ph.covariant_derivative(w, (0, 0), CovDir::OneBar)?;
    let w11b = ph.covariant_derivative(&w1, (1, 0), CovDir::OneBar)?;
    let w1b1 = ph.covariant_derivative(&w1b, (0, 1), CovDir::One)?;
    Ok(w11b.add(&w1b1)?.neg())
}

/// |∇_bW|² = 2|W,₁|².
pub fn gradient_sq(ph: &PHData, w: &ScalarField) -> Result<ScalarField> {
    let w1 = ph.covariant_derivative(w, (0, 0), CovDir::One)?;
    Ok(w1.norm_sqr().scale_re(2.0))
}

pub fn rigidity_certificate(ph: &PHData) -> Result<RigidityCertificate> {
    rigidity_certificate_tol(ph, 1e-8)
}

pub fn rigidity_certificate_tol(ph: &PHData, torsion_tol: f64) -> Result<RigidityCertificate> {
    let w = ph.w();
    let lap = sublaplacian(ph, w)?;
    let grad = gradient_sq(ph, w)?;
    let w2 = w.mul(w)?;
    let inner = w2.scale_re(5.0).add(&lap.scale_re(3.0))?;
    let ineq = w.mul(&inner)?.scale_re(4.0).sub(&grad.scale_re(3.0))?;
    let wv = w.sample_values();
    let iv = ineq.sample_values();
    let margin = wv.iter().zip(&iv).map(|(a, b)| a.re.min(b.re)).fold(f64::INFINITY, f64::min);
    let min_w = wv.iter().map(|a| a.re).fold(f64::INFINITY, f64::min);
    let inequality_min = iv.iter().map(|a| a.re).fold(f64::INFINITY, f64::min);
    let torsion_sup = ph.a11().sup_norm();
    let reason = if torsion_sup > torsion_tol {
        Some("torsion".to_string())
    } else if min_w <= 0.0 {
        Some("curvature".to_string())
    } else if inequality_min <= 0.0 {
        Some("inequality".to_string())
    } else {
        None
    };
    Ok(RigidityCertificate { holds: reason.is_none(), margin, torsion_sup, min_w, inequality_min, reason })
}

/// Pull a structure back by g ∈ U(2): (u∘g, (E∘g)·conj(det g)²).
pub fn pullback_structure(u: &ScalarField, e: &ScalarField, g: [[C64; 2]; 2]) -> Result<(ScalarField, ScalarField)> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    Ok((u.group_pullback(g)?, e.group_pullback(g)?.scale(det.conj() * det.conj())))
}
