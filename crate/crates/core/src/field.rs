//! Scalar fields on a [`SampleManifold`] and the standard frame acting on them.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridPlan;
use crate::manifold::{Backend, ManifoldKind, SampleManifold};
use crate::par;
use crate::poly::Poly;

/// Imaginary-part tolerance for the `Real` tag.
pub const REAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Real,
    Complex,
}

/// Direction of a standard-frame derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dir {
    T,
    Z1,
    Z1bar,
}

impl Dir {
    pub const ALL: [Dir; 3] = [Dir::T, Dir::Z1, Dir::Z1bar];
}

#[derive(Debug, Clone)]
pub(crate) enum Data {
    Poly(Poly),
    Grid(Arc<GridPlan>, Vec<C64>),
}

/// A complex function on the manifold.
///
/// On a lens space a field is stored on the covering sphere together with
/// its charge k: f(γz) = ζ^k f(z) for the generator γ. Scalars that descend
/// to the quotient have charge 0; frame components of tensors carry the
/// charge of the frame vectors they are paired with.
#[derive(Debug, Clone)]
pub struct ScalarField {
    manifold: SampleManifold,
    data: Data,
    parity: Parity,
    charge: i64,
}

fn sample_points() -> &'static [(C64, C64)] {
    use std::sync::OnceLock;
    static PTS: OnceLock<Vec<(C64, C64)>> = OnceLock::new();
    PTS.get_or_init(|| {
        let plan = GridPlan::get(12, 16, 16);
        (0..plan.len()).map(|i| plan.point(i)).collect()
    })
}

impl ScalarField {
    fn from_parts(manifold: SampleManifold, data: Data, parity: Parity, charge: i64) -> Self {
        let charge = manifold.reduce_charge(charge);
        ScalarField { manifold, data, parity, charge }
    }

    fn plan(manifold: &SampleManifold) -> Option<Arc<GridPlan>> {
        match manifold.backend {
            Backend::HopfGrid { n_eta, n_xi1, n_xi2 } => Some(GridPlan::get(n_eta, n_xi1, n_xi2)),
            Backend::PolynomialExact { .. } => None,
        }
    }

    pub fn constant(manifold: &SampleManifold, c: C64) -> Self {
        let parity = if c.im == 0.0 { Parity::Real } else { Parity::Complex };
        let data = match Self::plan(manifold) {
            Some(plan) => {
                let n = plan.len();
                Data::Grid(plan, vec![c; n])
            }
            None => Data::Poly(Poly::constant(c)),
        };
        Self::from_parts(*manifold, data, parity, 0)
    }

    pub fn real_constant(manifold: &SampleManifold, c: f64) -> Self {
        Self::constant(manifold, C64::new(c, 0.0))
    }

    pub fn zero(manifold: &SampleManifold) -> Self {
        Self::real_constant(manifold, 0.0)
    }

    /// Invariant (charge-0) field from a polynomial. On a lens space the
    /// polynomial is projected onto invariant monomials.
    pub fn from_poly(manifold: &SampleManifold, p: &Poly) -> Self {
        Self::from_poly_charged(manifold, p, 0)
    }

    /// Field of a prescribed charge from a polynomial; monomials of other
    /// charges are projected out.
    pub fn from_poly_charged(manifold: &SampleManifold, p: &Poly, charge: i64) -> Self {
        let charge = manifold.reduce_charge(charge);
        let p = match manifold.kind {
            ManifoldKind::Sphere => p.clone(),
            ManifoldKind::Lens { .. } => p.filter(|e| manifold.monomial_charge(*e) == charge),
        };
        let data = match Self::plan(manifold) {
            Some(plan) => {
                let vals = par::collect(plan.len(), |i| {
                    let (z1, z2) = plan.point(i);
                    p.eval(z1, z2)
                });
                Data::Grid(plan, vals)
            }
            None => Data::Poly(p),
        };
        let mut f = Self::from_parts(*manifold, data, Parity::Complex, charge);
        if f.imag_sup() < REAL_TOL {
            f.parity = Parity::Real;
        }
        f
    }

    /// Field from a pointwise function of (z₁, z₂). Only available on the grid.
    pub fn from_fn<F>(manifold: &SampleManifold, charge: i64, f: F) -> Result<Self>
    where
        F: Fn(C64, C64) -> C64 + Sync + Send,
    {
        let plan = Self::plan(manifold)
            .ok_or_else(|| Error::ManifoldMismatch("pointwise construction needs the grid backend".into()))?;
        let vals = par::collect(plan.len(), |i| {
            let (z1, z2) = plan.point(i);
            f(z1, z2)
        });
        let field = Self::from_parts(*manifold, Data::Grid(plan, vals), Parity::Complex, charge);
        field.project_charge()
    }

    /// Grid field from raw samples (η-major, then ξ₁, then ξ₂).
    pub fn from_samples(manifold: &SampleManifold, values: Vec<C64>, charge: i64) -> Result<Self> {
        let plan = Self::plan(manifold)
            .ok_or_else(|| Error::ManifoldMismatch("samples need the grid backend".into()))?;
        if values.len() != plan.len() {
            return Err(Error::Shape(format!("expected {} samples, got {}", plan.len(), values.len())));
        }
        if values.iter().any(|v| v.re.is_nan() || v.im.is_nan()) {
            return Err(Error::NaN("field samples"));
        }
        Self::from_parts(*manifold, Data::Grid(plan, values), Parity::Complex, charge).project_charge()
    }

    /// Average over the lens orbit with the character of the field's charge.
    fn project_charge(self) -> Result<Self> {
        let ManifoldKind::Lens { p, q } = self.manifold.kind else {
            return Ok(self.tag_real_if_possible());
        };
        let Data::Grid(plan, vals) = &self.data else {
            return Ok(self);
        };
        let zeta = |j: i64| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (self.charge * j) as f64 / p as f64);
        let mut out = vec![C64::new(0.0, 0.0); vals.len()];
        for t in 0..p as i64 {
            let (s1, s2) = plan.lens_shift(p, q, t);
            let w = zeta(t) / p as f64;
            for (idx, o) in out.iter_mut().enumerate() {
                let (j, k, l) = plan.coords(idx);
                let src = plan.index(j, (k + s1) % plan.n1, (l + s2) % plan.n2);
                *o += vals[src] * w;
            }
        }
        let plan = plan.clone();
        Ok(Self::from_parts(self.manifold, Data::Grid(plan, out), Parity::Complex, self.charge).tag_real_if_possible())
    }

    fn tag_real_if_possible(mut self) -> Self {
        if self.imag_sup() < REAL_TOL {
            self.parity = Parity::Real;
        }
        self
    }

    pub fn manifold(&self) -> &SampleManifold {
        &self.manifold
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn charge(&self) -> i64 {
        self.charge
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        match &self.data {
            Data::Poly(p) => Some(p),
            Data::Grid(..) => None,
        }
    }

    pub fn as_samples(&self) -> Option<&[C64]> {
        match &self.data {
            Data::Grid(_, v) => Some(v),
            Data::Poly(_) => None,
        }
    }

    /// Series truncation error bound (polynomial backend; 0 on the grid).
    pub fn truncation(&self) -> f64 {
        match &self.data {
            Data::Poly(p) => p.truncation(),
            Data::Grid(..) => 0.0,
        }
    }

    fn series_order(&self) -> u32 {
        match self.manifold.backend {
            Backend::PolynomialExact { series_order } => series_order,
            Backend::HopfGrid { .. } => 0,
        }
    }

    fn is_exact_zero(&self) -> bool {
        match &self.data {
            Data::Poly(p) => p.is_empty(),
            Data::Grid(_, v) => v.iter().all(|x| *x == C64::new(0.0, 0.0)),
        }
    }

    fn check_same(&self, other: &ScalarField) -> Result<()> {
        if self.manifold != other.manifold {
            return Err(Error::ManifoldMismatch(format!("{:?} vs {:?}", self.manifold, other.manifold)));
        }
        Ok(())
    }

    fn zip<F: Fn(C64, C64) -> C64 + Sync + Send>(a: &[C64], b: &[C64], f: F) -> Vec<C64> {
        par::collect(a.len(), |i| f(a[i], b[i]))
    }

    fn map_values<F: Fn(C64) -> C64 + Sync + Send>(a: &[C64], f: F) -> Vec<C64> {
        par::collect(a.len(), |i| f(a[i]))
    }

    fn combine(&self, other: &ScalarField, sign: f64) -> Result<ScalarField> {
        self.check_same(other)?;
        let charge = if self.charge == other.charge || other.is_exact_zero() {
            self.charge
        } else if self.is_exact_zero() {
            other.charge
        } else {
            return Err(Error::ManifoldMismatch(format!(
                "adding fields of lens charges {} and {}",
                self.charge, other.charge
            )));
        };
        let data = match (&self.data, &other.data) {
            (Data::Poly(a), Data::Poly(b)) => {
                Data::Poly(if sign > 0.0 { a.add(b) } else { a.sub(b) })
            }
            (Data::Grid(plan, a), Data::Grid(_, b)) => {
                Data::Grid(plan.clone(), Self::zip(a, b, |x, y| x + y * sign))
            }
            _ => unreachable!("backend is part of the manifold"),
        };
        let parity = if self.parity == Parity::Real && other.parity == Parity::Real {
            Parity::Real
        } else {
            Parity::Complex
        };
        Ok(Self::from_parts(self.manifold, data, parity, charge))
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, -1.0)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same(other)?;
        let data = match (&self.data, &other.data) {
            (Data::Poly(a), Data::Poly(b)) => Data::Poly(a.mul(b)),
            (Data::Grid(plan, a), Data::Grid(_, b)) => Data::Grid(plan.clone(), Self::zip(a, b, |x, y| x * y)),
            _ => unreachable!("backend is part of the manifold"),
        };
        let parity = if self.parity == Parity::Real && other.parity == Parity::Real {
            Parity::Real
        } else {
            Parity::Complex
        };
        Ok(Self::from_parts(self.manifold, data, parity, self.charge + other.charge))
    }

    pub fn scale(&self, s: C64) -> ScalarField {
        let data = match &self.data {
            Data::Poly(a) => Data::Poly(a.scale(s)),
            Data::Grid(plan, a) => Data::Grid(plan.clone(), Self::map_values(a, |x| x * s)),
        };
        let parity = if self.parity == Parity::Real && s.im == 0.0 { Parity::Real } else { Parity::Complex };
        Self::from_parts(self.manifold, data, parity, self.charge)
    }

    pub fn scale_re(&self, s: f64) -> ScalarField {
        self.scale(C64::new(s, 0.0))
    }

    pub fn neg(&self) -> ScalarField {
        self.scale_re(-1.0)
    }

    pub fn conj(&self) -> ScalarField {
        let data = match &self.data {
            Data::Poly(a) => Data::Poly(a.conj()),
            Data::Grid(plan, a) => Data::Grid(plan.clone(), Self::map_values(a, |x| x.conj())),
        };
        Self::from_parts(self.manifold, data, self.parity, -self.charge)
    }

    pub fn re(&self) -> ScalarField {
        let mut f = self.add(&self.conj()).expect("same manifold").scale_re(0.5);
        f.parity = Parity::Real;
        f
    }

    pub fn im(&self) -> ScalarField {
        let mut f = self.sub(&self.conj()).expect("same manifold").scale(C64::new(0.0, -0.5));
        f.parity = Parity::Real;
        f
    }

    /// |f|².
    pub fn norm_sqr(&self) -> ScalarField {
        let mut f = self.mul(&self.conj()).expect("same manifold");
        f.parity = Parity::Real;
        f
    }

    /// Assert the `Real` tag: fails if the imaginary part exceeds `tol`.
    pub fn into_real(mut self, tol: f64) -> Result<ScalarField> {
        let im = self.imag_sup();
        if im > tol {
            return Err(Error::Reality(im, tol));
        }
        self.parity = Parity::Real;
        Ok(self)
    }

    /// Mark as real without checking (caller guarantees it algebraically).
    pub(crate) fn assume_real(mut self) -> ScalarField {
        self.parity = Parity::Real;
        self
    }

    /// Pointwise values used for sup norms: grid nodes, or a fixed Hopf sample
    /// set for polynomial fields.
    pub fn sample_values(&self) -> Vec<C64> {
        match &self.data {
            Data::Grid(_, v) => v.clone(),
            Data::Poly(p) => {
                let pts = sample_points();
                par::collect(pts.len(), |i| p.eval(pts[i].0, pts[i].1))
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.sample_values().iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn imag_sup(&self) -> f64 {
        match &self.data {
            Data::Poly(p) => {
                let c = p.sub(&p.conj());
                if c.is_empty() {
                    0.0
                } else {
                    ScalarField::from_parts(self.manifold, Data::Poly(c), Parity::Complex, 0).sup_norm() * 0.5
                }
            }
            Data::Grid(_, v) => v.iter().fold(0.0, |m, x| m.max(x.im.abs())),
        }
    }

    pub fn min_re(&self) -> f64 {
        self.sample_values().iter().fold(f64::INFINITY, |m, v| m.min(v.re))
    }

    pub fn max_re(&self) -> f64 {
        self.sample_values().iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.re))
    }

    /// Volume-weighted standard deviation of the real part.
    pub fn std_dev(&self) -> Result<f64> {
        let re = self.re();
        let vol = ScalarField::real_constant(&self.manifold, 1.0).integrate_sphere().re;
        let mean = re.integrate_sphere().re / vol;
        let dev = re.sub(&ScalarField::real_constant(&self.manifold, mean))?;
        let var = dev.mul(&dev)?.integrate_sphere().re / vol;
        Ok(var.max(0.0).sqrt())
    }

    /// Standard-frame derivative.
    pub fn frame_derivative(&self, dir: Dir) -> ScalarField {
        let [t, z, zb] = self.frame_derivatives();
        match dir {
            Dir::T => t,
            Dir::Z1 => z,
            Dir::Z1bar => zb,
        }
    }

    /// (T f, Z₁ f, Z̄₁ f) computed together.
    pub fn frame_derivatives(&self) -> [ScalarField; 3] {
        let shift = self.manifold.z1_charge_shift();
        let real_t = if self.parity == Parity::Real { Parity::Real } else { Parity::Complex };
        match &self.data {
            Data::Poly(p) => [
                Self::from_parts(self.manifold, Data::Poly(p.t_derivative()), real_t, self.charge),
                Self::from_parts(self.manifold, Data::Poly(p.z1_derivative()), Parity::Complex, self.charge + shift),
                Self::from_parts(self.manifold, Data::Poly(p.z1bar_derivative()), Parity::Complex, self.charge - shift),
            ],
            Data::Grid(plan, v) => {
                let [t, z, zb] = plan.frame_derivatives(v);
                let mut t = Self::from_parts(self.manifold, Data::Grid(plan.clone(), t), real_t, self.charge);
                if real_t == Parity::Real {
                    if let Data::Grid(_, vals) = &mut t.data {
                        vals.iter_mut().for_each(|x| x.im = 0.0);
                    }
                }
                [
                    t,
                    Self::from_parts(self.manifold, Data::Grid(plan.clone(), z), Parity::Complex, self.charge + shift),
                    Self::from_parts(self.manifold, Data::Grid(plan.clone(), zb), Parity::Complex, self.charge - shift),
                ]
            }
        }
    }

    /// Integral over the covering sphere.
    fn integrate_sphere(&self) -> C64 {
        match &self.data {
            Data::Poly(p) => p.integrate(),
            Data::Grid(plan, v) => plan.integrate(v),
        }
    }

    /// ∫_M f dV with the round measure; on Γ\S³ this is (1/p) times the
    /// integral of the invariant integrand over the covering sphere.
    pub fn integrate(&self) -> Result<C64> {
        if self.charge != 0 {
            return Err(Error::NonInvariant { charge: self.charge, p: self.manifold.order() });
        }
        if let Data::Grid(_, v) = &self.data {
            if v.iter().any(|x| x.re.is_nan() || x.im.is_nan()) {
                return Err(Error::NaN("integrand"));
            }
        }
        Ok(self.integrate_sphere() / self.manifold.order() as f64)
    }

    /// Apply a pointwise function. Grid: exact pointwise. Polynomial: only for
    /// constant fields (anything else needs a series, see [`powf`](Self::powf)).
    fn map_pointwise<F: Fn(C64) -> C64 + Sync + Send>(&self, f: F, name: &'static str) -> Result<ScalarField> {
        match &self.data {
            Data::Grid(plan, v) => {
                let out = Self::map_values(v, f);
                if out.iter().any(|x| x.re.is_nan() || x.im.is_nan()) {
                    return Err(Error::NaN(name));
                }
                Ok(Self::from_parts(self.manifold, Data::Grid(plan.clone(), out), self.parity, self.charge))
            }
            Data::Poly(p) if p.is_constant() => {
                Ok(Self::from_parts(self.manifold, Data::Poly(Poly::constant(f(p.constant_term()))), self.parity, self.charge))
            }
            Data::Poly(_) => Err(Error::ManifoldMismatch(format!("{name} of a non-constant polynomial"))),
        }
    }

    /// f^α. Polynomial backend: binomial series around the constant term,
    /// truncated at the backend's series order (error bound in `truncation`).
    /// Only charge-0 fields are admissible.
    pub fn powf(&self, alpha: f64) -> Result<ScalarField> {
        self.require_invariant("powf")?;
        match &self.data {
            Data::Poly(p) => {
                let out = p.powf(alpha, self.series_order())?;
                Ok(Self::from_parts(self.manifold, Data::Poly(out), self.parity, 0))
            }
            Data::Grid(..) => self.map_pointwise(|x| x.powf(alpha), "powf"),
        }
    }

    pub fn recip(&self) -> Result<ScalarField> {
        match &self.data {
            Data::Grid(..) => {
                let mut r = self.map_pointwise(|x| x.inv(), "recip")?;
                r.charge = self.manifold.reduce_charge(-self.charge);
                Ok(r)
            }
            Data::Poly(_) => self.powf(-1.0),
        }
    }

    pub fn sqrt(&self) -> Result<ScalarField> {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Result<ScalarField> {
        self.require_invariant("exp")?;
        match &self.data {
            Data::Poly(p) => {
                let parity = if self.parity == Parity::Real { Parity::Real } else { Parity::Complex };
                Ok(Self::from_parts(self.manifold, Data::Poly(p.exp(self.series_order())), parity, 0))
            }
            Data::Grid(..) => self.map_pointwise(|x| x.exp(), "exp"),
        }
    }

    pub fn ln(&self) -> Result<ScalarField> {
        self.require_invariant("ln")?;
        match &self.data {
            Data::Poly(p) => Ok(Self::from_parts(self.manifold, Data::Poly(p.ln(self.series_order())?), self.parity, 0)),
            Data::Grid(..) => self.map_pointwise(|x| x.ln(), "ln"),
        }
    }

    fn require_invariant(&self, what: &str) -> Result<()> {
        if self.charge != 0 {
            return Err(Error::ManifoldMismatch(format!("{what} of a charged lens field")));
        }
        Ok(())
    }

    /// Divide by a field (f / g).
    pub fn div(&self, other: &ScalarField) -> Result<ScalarField> {
        self.mul(&other.recip()?)
    }

    /// Pullback f ∘ g by g ∈ U(2).
    pub fn group_pullback(&self, g: [[C64; 2]; 2]) -> Result<ScalarField> {
        let dev = unitarity_defect(&g);
        if dev > 1e-10 {
            return Err(Error::NonUnitary(dev));
        }
        match &self.data {
            Data::Poly(p) => {
                let mut f = Self::from_parts(self.manifold, Data::Poly(p.pullback(g)), self.parity, self.charge);
                if self.parity == Parity::Real {
                    f.parity = Parity::Real;
                }
                Ok(f)
            }
            Data::Grid(plan, v) => {
                let pts: Vec<(C64, C64)> = (0..plan.len())
                    .map(|i| {
                        let (z1, z2) = plan.point(i);
                        (g[0][0] * z1 + g[0][1] * z2, g[1][0] * z1 + g[1][1] * z2)
                    })
                    .collect();
                let vals = plan.interpolate(v, &pts);
                let mut f = Self::from_parts(self.manifold, Data::Grid(plan.clone(), vals), Parity::Complex, self.charge);
                if self.parity == Parity::Real {
                    if let Data::Grid(_, vals) = &mut f.data {
                        vals.iter_mut().for_each(|x| x.im = 0.0);
                    }
                    f.parity = Parity::Real;
                }
                Ok(f)
            }
        }
    }

    /// Resample onto another backend of the same manifold kind (polynomial → grid
    /// or grid → grid of a different resolution via spectral interpolation).
    pub fn resample(&self, target: &SampleManifold) -> Result<ScalarField> {
        if target.kind != self.manifold.kind {
            return Err(Error::ManifoldMismatch("resample across manifold kinds".into()));
        }
        let plan = Self::plan(target)
            .ok_or_else(|| Error::ManifoldMismatch("resampling target must be a grid".into()))?;
        let vals = match &self.data {
            Data::Poly(p) => par::collect(plan.len(), |i| {
                let (z1, z2) = plan.point(i);
                p.eval(z1, z2)
            }),
            Data::Grid(src, v) => {
                let pts: Vec<(C64, C64)> = (0..plan.len()).map(|i| plan.point(i)).collect();
                src.interpolate(v, &pts)
            }
        };
        let mut f = Self::from_parts(*target, Data::Grid(plan, vals), self.parity, self.charge);
        if self.parity == Parity::Real {
            if let Data::Grid(_, vals) = &mut f.data {
                vals.iter_mut().for_each(|x| x.im = 0.0);
            }
        }
        Ok(f)
    }

    /// Evaluate at points of the covering sphere.
    pub fn eval_at(&self, points: &[(C64, C64)]) -> Vec<C64> {
        match &self.data {
            Data::Poly(p) => points.iter().map(|&(a, b)| p.eval(a, b)).collect(),
            Data::Grid(plan, v) => plan.interpolate(v, points),
        }
    }

    /// Sup-norm of f − g sampled at the same points.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }
}

fn unitarity_defect(g: &[[C64; 2]; 2]) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..2 {
                s += g[k][i].conj() * g[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s - target).norm());
        }
    }
    dev
}

/// JSON snapshot of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub manifold: SampleManifold,
    pub backend: String,
    #[serde(default)]
    pub charge: i64,
    #[serde(default)]
    pub real_valued: bool,
    #[serde(default)]
    pub truncation: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shape: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ordering: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub real: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub imag: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub terms: Option<Vec<MonomialTerm>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub a: u16,
    pub b: u16,
    pub c: u16,
    pub d: u16,
    pub re: f64,
    pub im: f64,
}

pub const GRID_ORDERING: &str = "eta-major, then xi1, then xi2";

impl ScalarField {
    pub fn snapshot(&self) -> FieldSnapshot {
        match &self.data {
            Data::Poly(p) => FieldSnapshot {
                manifold: self.manifold,
                backend: "poly".into(),
                charge: self.charge,
                real_valued: self.parity == Parity::Real,
                truncation: p.truncation(),
                shape: None,
                ordering: None,
                real: None,
                imag: None,
                terms: Some(
                    p.terms()
                        .map(|(e, c)| MonomialTerm { a: e[0], b: e[1], c: e[2], d: e[3], re: c.re, im: c.im })
                        .collect(),
                ),
            },
            Data::Grid(plan, v) => FieldSnapshot {
                manifold: self.manifold,
                backend: "grid".into(),
                charge: self.charge,
                real_valued: self.parity == Parity::Real,
                truncation: 0.0,
                shape: Some([plan.n_eta, plan.n1, plan.n2]),
                ordering: Some(GRID_ORDERING.into()),
                real: Some(v.iter().map(|x| x.re).collect()),
                imag: Some(v.iter().map(|x| x.im).collect()),
                terms: None,
            },
        }
    }

    pub fn from_snapshot(s: &FieldSnapshot) -> Result<ScalarField> {
        let mut f = Self::from_snapshot_data(s)?;
        f.parity = if s.real_valued { Parity::Real } else { Parity::Complex };
        Ok(f)
    }

    fn from_snapshot_data(s: &FieldSnapshot) -> Result<ScalarField> {
        let m = SampleManifold::new(s.manifold.kind, s.manifold.backend)?;
        if let Some(terms) = &s.terms {
            let p = Poly::from_terms(terms.iter().map(|t| ([t.a, t.b, t.c, t.d], C64::new(t.re, t.im))))
                .with_truncation(s.truncation);
            return Ok(ScalarField::from_poly_charged(&m, &p, s.charge));
        }
        let (Some(re), Some(im)) = (&s.real, &s.imag) else {
            return Err(Error::Config("snapshot needs either terms or real/imag samples".into()));
        };
        if let Some(o) = &s.ordering {
            if o != GRID_ORDERING {
                return Err(Error::Config(format!("unsupported ordering '{o}'")));
            }
        }
        if re.len() != im.len() {
            return Err(Error::Shape("real/imag length mismatch".into()));
        }
        let vals = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        ScalarField::from_samples(&m, vals, s.charge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        for backend in [Backend::poly(), Backend::grid(8, 8, 8)] {
            let m = SampleManifold::sphere(backend).unwrap();
            let f = ScalarField::real_constant(&m, 3.0);
            for d in Dir::ALL {
                assert!(f.frame_derivative(d).sup_norm() < 1e-13);
            }
        }
    }

    #[test]
    fn radius_is_constant_on_the_sphere() {
        let r2 = Poly::from_terms([([1, 1, 0, 0], one()), ([0, 0, 1, 1], one())]);
        for backend in [Backend::poly(), Backend::grid(8, 8, 8)] {
            let m = SampleManifold::sphere(backend).unwrap();
            let f = ScalarField::from_poly(&m, &r2);
            for d in Dir::ALL {
                assert!(f.frame_derivative(d).sup_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn z1bar_is_conjugate_of_z1() {
        let m = SampleManifold::sphere(Backend::grid(10, 10, 10)).unwrap();
        let p = Poly::from_terms([([2, 0, 0, 1], C64::new(0.3, 0.2)), ([0, 1, 1, 0], C64::new(-1.0, 0.5))]);
        let f = ScalarField::from_poly(&m, &p);
        let lhs = f.frame_derivative(Dir::Z1bar);
        let rhs = f.conj().frame_derivative(Dir::Z1).conj();
        assert!(lhs.sup_distance(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn lens_integral_is_a_fraction_of_sphere() {
        let m = SampleManifold::lens(3, 1, Backend::poly()).unwrap();
        let f = ScalarField::real_constant(&m, 1.0);
        assert!((f.integrate().unwrap().re - 2.0 * PI * PI / 3.0).abs() < 1e-12);
        let z1 = ScalarField::from_poly_charged(&m, &Poly::z1(), 1);
        assert!(matches!(z1.integrate(), Err(Error::NonInvariant { .. })));
    }

    #[test]
    fn non_unitary_rejected() {
        let m = SampleManifold::sphere(Backend::poly()).unwrap();
        let f = ScalarField::from_poly(&m, &Poly::z1());
        let g = [[C64::new(2.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), one()]];
        assert!(matches!(f.group_pullback(g), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn snapshot_roundtrip_grid() {
        let m = SampleManifold::sphere(Backend::grid(8, 8, 8)).unwrap();
        let f = ScalarField::from_poly(&m, &Poly::z1().mul(&Poly::z2bar()));
        let s = f.snapshot();
        let json = serde_json::to_string(&s).unwrap();
        let back = ScalarField::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.as_samples().unwrap(), f.as_samples().unwrap());
    }
}
