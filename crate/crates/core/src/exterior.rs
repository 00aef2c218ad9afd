//! Differential forms in a coframe basis.
//!
//! A [`Coframe`] is given by the matrix expressing its 1-forms
//! `[θ, θ¹, θ^1̄]` in the standard coframe `[θ̂, θ̂¹, θ̂^1̄]`. Forms are
//! always stored in the active coframe:
//!
//! * degree 1: `[θ, θ¹, θ^1̄]`
//! * degree 2: `[θ¹∧θ^1̄, θ∧θ¹, θ∧θ^1̄]`
//! * degree 3: `[θ∧θ¹∧θ^1̄]`

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Dir, FieldSnapshot, ScalarField};
use crate::manifold::SampleManifold;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Basis labels per degree, in storage order.
pub const BASIS_LABELS: [&[&str]; 4] = [
    &["1"],
    &["theta", "theta1", "theta1bar"],
    &["theta1^theta1bar", "theta^theta1", "theta^theta1bar"],
    &["theta^theta1^theta1bar"],
];

/// Index pairs (c, d) of the degree-2 basis.
const PAIRS: [(usize, usize); 3] = [(1, 2), (0, 1), (0, 2)];

fn dim(degree: usize) -> usize {
    match degree {
        0 | 3 => 1,
        _ => 3,
    }
}

/// Component of e^c∧e^d (any c, d) in the degree-2 basis, as (slot, sign).
fn pair_slot(c: usize, d: usize) -> Option<(usize, f64)> {
    PAIRS.iter().enumerate().find_map(|(k, &(a, b))| {
        if (a, b) == (c, d) {
            Some((k, 1.0))
        } else if (a, b) == (d, c) {
            Some((k, -1.0))
        } else {
            None
        }
    })
}

#[derive(Debug, Clone)]
pub struct FormField {
    degree: usize,
    coeffs: Vec<ScalarField>,
}

impl FormField {
    pub fn zero(manifold: &SampleManifold, degree: usize) -> Result<Self> {
        if degree > 3 {
            return Err(Error::BadDegree(degree));
        }
        Ok(FormField { degree, coeffs: vec![ScalarField::zero(manifold); dim(degree)] })
    }

    pub fn new(degree: usize, coeffs: Vec<ScalarField>) -> Result<Self> {
        if degree > 3 {
            return Err(Error::BadDegree(degree));
        }
        if coeffs.len() != dim(degree) {
            return Err(Error::Shape(format!("degree {degree} form needs {} coefficients", dim(degree))));
        }
        let m = *coeffs[0].manifold();
        if coeffs.iter().any(|c| *c.manifold() != m) {
            return Err(Error::ManifoldMismatch("form coefficients on different manifolds".into()));
        }
        Ok(FormField { degree, coeffs })
    }

    pub fn function(f: ScalarField) -> Self {
        FormField { degree: 0, coeffs: vec![f] }
    }

    pub fn one_form(c: [ScalarField; 3]) -> Self {
        FormField::new(1, c.to_vec()).expect("three coefficients")
    }

    pub fn two_form(c: [ScalarField; 3]) -> Self {
        FormField::new(2, c.to_vec()).expect("three coefficients")
    }

    pub fn volume(c: ScalarField) -> Self {
        FormField { degree: 3, coeffs: vec![c] }
    }

    /// Basis 1-form `idx` (0 = θ, 1 = θ¹, 2 = θ^1̄) with coefficient `c`.
    pub fn basis1(c: ScalarField, idx: usize) -> Self {
        let z = ScalarField::zero(c.manifold());
        let mut v = [z.clone(), z.clone(), z];
        v[idx] = c;
        Self::one_form(v)
    }

    /// Basis 2-form `idx` (0 = θ¹∧θ^1̄, 1 = θ∧θ¹, 2 = θ∧θ^1̄) with coefficient `c`.
    pub fn basis2(c: ScalarField, idx: usize) -> Self {
        let z = ScalarField::zero(c.manifold());
        let mut v = [z.clone(), z.clone(), z];
        v[idx] = c;
        Self::two_form(v)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize) -> &ScalarField {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[ScalarField] {
        &self.coeffs
    }

    pub fn manifold(&self) -> &SampleManifold {
        self.coeffs[0].manifold()
    }

    fn check_degree(&self, other: &FormField) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::Shape(format!("degrees {} and {} differ", self.degree, other.degree)));
        }
        Ok(())
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.check_degree(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(FormField { degree: self.degree, coeffs })
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.check_degree(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(FormField { degree: self.degree, coeffs })
    }

    pub fn scale(&self, s: C64) -> FormField {
        FormField { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn scale_re(&self, s: f64) -> FormField {
        self.scale(C64::new(s, 0.0))
    }

    pub fn neg(&self) -> FormField {
        self.scale_re(-1.0)
    }

    /// Multiply by a function.
    pub fn mul_fn(&self, f: &ScalarField) -> Result<FormField> {
        let coeffs = self.coeffs.iter().map(|c| c.mul(f)).collect::<Result<_>>()?;
        Ok(FormField { degree: self.degree, coeffs })
    }

    /// Complex conjugate; θ is real and θ¹, θ^1̄ are exchanged.
    pub fn conj(&self) -> FormField {
        let c: Vec<ScalarField> = self.coeffs.iter().map(|c| c.conj()).collect();
        let coeffs = match self.degree {
            0 => c,
            1 => vec![c[0].clone(), c[2].clone(), c[1].clone()],
            2 => vec![c[0].neg(), c[2].clone(), c[1].clone()],
            _ => vec![c[0].neg()],
        };
        FormField { degree: self.degree, coeffs }
    }

    /// Sup norm of `self − conj(self)`; zero for real forms.
    pub fn reality_residual(&self) -> Result<f64> {
        self.sub(&self.conj()).map(|d| d.sup_norm())
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.sup_norm()))
    }

    pub fn truncation(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.truncation()))
    }

    pub fn wedge(&self, other: &FormField) -> Result<FormField> {
        let deg = self.degree + other.degree;
        if deg > 3 {
            return Err(Error::DegreeOverflow(self.degree, other.degree));
        }
        let (a, b) = (&self.coeffs, &other.coeffs);
        match (self.degree, other.degree) {
            (0, _) => other.mul_fn(&a[0]),
            (_, 0) => self.mul_fn(&b[0]),
            (1, 1) => {
                let w = |i: usize, j: usize| -> Result<ScalarField> { a[i].mul(&b[j])?.sub(&a[j].mul(&b[i])?) };
                Ok(FormField::two_form([w(1, 2)?, w(0, 1)?, w(0, 2)?]))
            }
            (1, 2) | (2, 1) => {
                let (v, w) = if self.degree == 1 { (a, b) } else { (b, a) };
                // v∧(w12 e1e2 + w01 e0e1 + w02 e0e2)
                let c = v[0].mul(&w[0])?.sub(&v[1].mul(&w[2])?)?.add(&v[2].mul(&w[1])?)?;
                Ok(FormField::volume(c))
            }
            _ => unreachable!("degree sum checked above"),
        }
    }

    pub fn snapshot(&self) -> FormSnapshot {
        FormSnapshot {
            degree: self.degree,
            basis: BASIS_LABELS[self.degree].iter().map(|s| s.to_string()).collect(),
            coefficients: self.coeffs.iter().map(|c| c.snapshot()).collect(),
        }
    }

    pub fn from_snapshot(s: &FormSnapshot) -> Result<FormField> {
        if s.degree > 3 {
            return Err(Error::BadDegree(s.degree));
        }
        let expected: Vec<String> = BASIS_LABELS[s.degree].iter().map(|x| x.to_string()).collect();
        if s.basis != expected {
            return Err(Error::Config(format!("unexpected basis labels {:?}", s.basis)));
        }
        let coeffs = s.coefficients.iter().map(ScalarField::from_snapshot).collect::<Result<_>>()?;
        FormField::new(s.degree, coeffs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSnapshot {
    pub degree: usize,
    pub basis: Vec<String>,
    pub coefficients: Vec<FieldSnapshot>,
}

type Mat3 = [[ScalarField; 3]; 3];

/// Active coframe with its dual frame and structure 2-forms.
#[derive(Debug, Clone)]
pub struct Coframe {
    m: Mat3,
    n: Mat3,
    det: ScalarField,
    vol_density: ScalarField,
    structure: [FormField; 3],
}

impl Coframe {
    /// The standard coframe (θ̂, θ̂¹, θ̂^1̄).
    pub fn standard(manifold: &SampleManifold) -> Coframe {
        let one = ScalarField::real_constant(manifold, 1.0);
        let z = ScalarField::zero(manifold);
        let m = [
            [one.clone(), z.clone(), z.clone()],
            [z.clone(), one.clone(), z.clone()],
            [z.clone(), z.clone(), one.clone()],
        ];
        Coframe::from_matrix(m).expect("identity is invertible")
    }

    /// Coframe whose row `a` expresses the a-th active 1-form in the standard basis.
    pub fn from_matrix(m: Mat3) -> Result<Coframe> {
        let manifold = *m[0][0].manifold();
        if m.iter().flatten().any(|f| *f.manifold() != manifold) {
            return Err(Error::ManifoldMismatch("coframe entries on different manifolds".into()));
        }
        let cof = |r: usize, c: usize| -> Result<ScalarField> {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            m[r1][c1].mul(&m[r2][c2])?.sub(&m[r1][c2].mul(&m[r2][c1])?)
        };
        let mut cofactors: Vec<ScalarField> = Vec::with_capacity(9);
        for r in 0..3 {
            for c in 0..3 {
                cofactors.push(cof(r, c)?);
            }
        }
        let det = m[0][0]
            .mul(&cofactors[0])?
            .add(&m[0][1].mul(&cofactors[1])?)?
            .add(&m[0][2].mul(&cofactors[2])?)?;
        let inv_det = det.recip()?;
        // N = adj(M)/det, adj(M)[b][a] = cofactor(a, b)
        let n: Mat3 = std::array::from_fn(|b| {
            std::array::from_fn(|a| cofactors[a * 3 + b].mul(&inv_det).expect("same manifold"))
        });
        let vol_density = det.scale(C64::new(0.0, -2.0));
        let mut cf = Coframe {
            m,
            n,
            det,
            vol_density,
            structure: std::array::from_fn(|_| FormField::zero(&manifold, 2).expect("degree 2")),
        };
        cf.structure = cf.compute_structure()?;
        Ok(cf)
    }

    pub fn manifold(&self) -> &SampleManifold {
        self.m[0][0].manifold()
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    /// Inverse matrix: column `a` gives the a-th frame vector in the standard frame.
    pub fn frame(&self) -> &Mat3 {
        &self.n
    }

    pub fn det(&self) -> &ScalarField {
        &self.det
    }

    /// `dθ^a` in the active basis.
    pub fn structure(&self, a: usize) -> &FormField {
        &self.structure[a]
    }

    /// Derivatives of `f` along the active frame (dual to θ, θ¹, θ^1̄).
    pub fn derivatives(&self, f: &ScalarField) -> Result<[ScalarField; 3]> {
        let hat = f.frame_derivatives();
        let mut out = Vec::with_capacity(3);
        for a in 0..3 {
            let mut acc = hat[0].mul(&self.n[0][a])?;
            for b in 1..3 {
                acc = acc.add(&hat[b].mul(&self.n[b][a])?)?;
            }
            out.push(acc);
        }
        let mut it = out.into_iter();
        Ok([it.next().expect("three"), it.next().expect("three"), it.next().expect("three")])
    }

    pub fn derivative(&self, f: &ScalarField, a: usize) -> Result<ScalarField> {
        Ok(self.derivatives(f)?[a].clone())
    }

    /// df = (Xf)θ + (X₁f)θ¹ + (X_1̄f)θ^1̄.
    pub fn df(&self, f: &ScalarField) -> Result<FormField> {
        Ok(FormField::one_form(self.derivatives(f)?))
    }

    fn hat_to_active(&self, w: [ScalarField; 3]) -> Result<FormField> {
        // w[k] is the coefficient of ê^b∧ê^e for (b, e) = PAIRS[k]
        let mut out = Vec::with_capacity(3);
        for &(c, d) in PAIRS.iter() {
            let mut acc: Option<ScalarField> = None;
            for (k, &(b, e)) in PAIRS.iter().enumerate() {
                let minor = self.n[b][c].mul(&self.n[e][d])?.sub(&self.n[e][c].mul(&self.n[b][d])?)?;
                let term = w[k].mul(&minor)?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term)?,
                });
            }
            out.push(acc.expect("three terms"));
        }
        let mut it = out.into_iter();
        Ok(FormField::two_form([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]))
    }

    fn compute_structure(&self) -> Result<[FormField; 3]> {
        let mut res = Vec::with_capacity(3);
        for a in 0..3 {
            // hat components, slots as PAIRS: (1,2), (0,1), (0,2)
            let mut w12 = self.m[a][0].scale(I);
            let mut w01 = self.m[a][1].scale(C64::new(0.0, 2.0));
            let mut w02 = self.m[a][2].scale(C64::new(0.0, -2.0));
            for b in 0..3 {
                let dm = self.m[a][b].frame_derivatives();
                for (c, dmc) in dm.iter().enumerate() {
                    if c == b {
                        continue;
                    }
                    let (slot, sign) = pair_slot(c, b).expect("distinct indices");
                    let term = dmc.scale_re(sign);
                    match slot {
                        0 => w12 = w12.add(&term)?,
                        1 => w01 = w01.add(&term)?,
                        _ => w02 = w02.add(&term)?,
                    }
                }
            }
            res.push(self.hat_to_active([w12, w01, w02])?);
        }
        let mut it = res.into_iter();
        Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
    }

    /// Exterior derivative of a form of degree ≤ 2.
    pub fn d(&self, form: &FormField) -> Result<FormField> {
        if form.manifold() != self.manifold() {
            return Err(Error::CoframeMismatch);
        }
        match form.degree() {
            0 => self.df(form.coeff(0)),
            1 => {
                let mut acc = FormField::zero(self.manifold(), 2)?;
                for a in 0..3 {
                    let f = form.coeff(a);
                    let basis = FormField::basis1(ScalarField::real_constant(self.manifold(), 1.0), a);
                    acc = acc.add(&self.df(f)?.wedge(&basis)?)?;
                    acc = acc.add(&self.structure[a].mul_fn(f)?)?;
                }
                Ok(acc)
            }
            2 => {
                let mut acc = FormField::zero(self.manifold(), 3)?;
                for (k, &(c, d)) in PAIRS.iter().enumerate() {
                    let f = form.coeff(k);
                    let one = ScalarField::real_constant(self.manifold(), 1.0);
                    let basis = FormField::basis2(one.clone(), k);
                    acc = acc.add(&self.df(f)?.wedge(&basis)?)?;
                    // d(e^c∧e^d) = de^c∧e^d − e^c∧de^d
                    let dcd = self.structure[c]
                        .wedge(&FormField::basis1(one.clone(), d))?
                        .sub(&FormField::basis1(one, c).wedge(&self.structure[d])?)?;
                    acc = acc.add(&dcd.mul_fn(f)?)?;
                }
                Ok(acc)
            }
            k => Err(Error::BadDegree(k)),
        }
    }

    /// ∫_M of a 3-form.
    pub fn integrate(&self, form: &FormField) -> Result<C64> {
        if form.degree() != 3 {
            return Err(Error::BadDegree(form.degree()));
        }
        form.coeff(0).mul(&self.vol_density)?.integrate()
    }

    /// Density (w.r.t. the round measure) of the basis volume form θ∧θ¹∧θ^1̄.
    pub fn volume_density(&self) -> &ScalarField {
        &self.vol_density
    }

    /// Re-express a 1-form of this coframe's basis in another coframe's basis.
    pub fn transfer_one_form(&self, form: &FormField, target: &Coframe) -> Result<FormField> {
        if form.degree() != 1 {
            return Err(Error::BadDegree(form.degree()));
        }
        // e^a = Σ_b M^a_b ê^b, ê^b = Σ_c N'^b_c e'^c
        let mut out = Vec::with_capacity(3);
        for c in 0..3 {
            let mut acc: Option<ScalarField> = None;
            for a in 0..3 {
                for b in 0..3 {
                    let term = form.coeff(a).mul(&self.m[a][b])?.mul(&target.n[b][c])?;
                    acc = Some(match acc {
                        None => term,
                        Some(x) => x.add(&term)?,
                    });
                }
            }
            out.push(acc.expect("nine terms"));
        }
        let mut it = out.into_iter();
        Ok(FormField::one_form([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]))
    }
}

/// 3×3 matrix of forms of a common degree.
#[derive(Debug, Clone)]
pub struct MatrixForm {
    degree: usize,
    entries: Vec<FormField>,
}

impl MatrixForm {
    pub fn new(entries: [[FormField; 3]; 3]) -> Result<MatrixForm> {
        let degree = entries[0][0].degree();
        let flat: Vec<FormField> = entries.into_iter().flatten().collect();
        if flat.iter().any(|e| e.degree() != degree) {
            return Err(Error::Shape("matrix entries of mixed degree".into()));
        }
        Ok(MatrixForm { degree, entries: flat })
    }

    pub fn zero(manifold: &SampleManifold, degree: usize) -> Result<MatrixForm> {
        let z = FormField::zero(manifold, degree)?;
        Ok(MatrixForm { degree, entries: vec![z; 9] })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn entry(&self, i: usize, j: usize) -> &FormField {
        &self.entries[i * 3 + j]
    }

    fn map2<F: Fn(&FormField, &FormField) -> Result<FormField>>(&self, other: &MatrixForm, f: F) -> Result<MatrixForm> {
        if self.degree != other.degree {
            return Err(Error::Shape("matrix forms of different degree".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        Ok(MatrixForm { degree: self.degree, entries })
    }

    pub fn add(&self, other: &MatrixForm) -> Result<MatrixForm> {
        self.map2(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &MatrixForm) -> Result<MatrixForm> {
        self.map2(other, |a, b| a.sub(b))
    }

    pub fn trace(&self) -> Result<FormField> {
        self.entry(0, 0).add(self.entry(1, 1))?.add(self.entry(2, 2))
    }

    /// Entrywise exterior derivative.
    pub fn d(&self, cf: &Coframe) -> Result<MatrixForm> {
        let entries = self.entries.iter().map(|e| cf.d(e)).collect::<Result<Vec<_>>>()?;
        Ok(MatrixForm { degree: self.degree + 1, entries })
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.sup_norm()))
    }
}

/// Matrix product with wedge-multiplied entries.
pub fn matrix_wedge(a: &MatrixForm, b: &MatrixForm) -> Result<MatrixForm> {
    let degree = a.degree + b.degree;
    if degree > 3 {
        return Err(Error::DegreeOverflow(a.degree, b.degree));
    }
    let mut entries = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = a.entry(i, 0).wedge(b.entry(0, j))?;
            for k in 1..3 {
                acc = acc.add(&a.entry(i, k).wedge(b.entry(k, j))?)?;
            }
            entries.push(acc);
        }
    }
    Ok(MatrixForm { degree, entries })
}

/// Derivation used for the standard frame, re-exported for convenience.
pub fn standard_derivative(f: &ScalarField, dir: Dir) -> ScalarField {
    f.frame_derivative(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Backend;
    use crate::poly::Poly;

    fn sphere() -> SampleManifold {
        SampleManifold::sphere(Backend::poly()).unwrap()
    }

    fn one(m: &SampleManifold) -> ScalarField {
        ScalarField::real_constant(m, 1.0)
    }

    #[test]
    fn standard_structure_forms() {
        let m = sphere();
        let cf = Coframe::standard(&m);
        let d0 = cf.structure(0);
        assert!((d0.coeff(0).sample_values()[0] - I).norm() < 1e-15);
        assert!(d0.coeff(1).sup_norm() < 1e-15 && d0.coeff(2).sup_norm() < 1e-15);
        let d1 = cf.structure(1);
        assert!((d1.coeff(1).sample_values()[0] - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn theta_wedge_theta_vanishes() {
        let m = sphere();
        let t = FormField::basis1(one(&m), 0);
        assert!(t.wedge(&t).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn wedge_overflow() {
        let m = sphere();
        let t = FormField::basis2(one(&m), 0);
        assert!(matches!(t.wedge(&t), Err(Error::DegreeOverflow(2, 2))));
    }

    #[test]
    fn ddf_vanishes() {
        let m = sphere();
        let cf = Coframe::standard(&m);
        let f = ScalarField::from_poly(
            &m,
            &Poly::from_terms([([2, 1, 0, 1], C64::new(1.0, 0.5)), ([0, 0, 3, 1], C64::new(-0.3, 0.0))]),
        );
        let ddf = cf.d(&cf.df(&f).unwrap()).unwrap();
        assert!(ddf.sup_norm() < 1e-12);
    }
}
