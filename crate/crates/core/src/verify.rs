//! Verification suites. Each suite measures a family of identities and
//! reports one [`Check`] per measured quantity; thresholds come from the
//! run configuration.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cartan::{solve_cartan, transgression_mu, CartanPackage};
use crate::config::{BackendKind, RunConfig};
use crate::conventions::Conventions;
use crate::error::Result;
use crate::exterior::{matrix_wedge, Coframe, FormField, MatrixForm};
use crate::field::{Dir, ScalarField};
use crate::flows::{self, CalibrationConfig, CartanFlowParams, FlowState, YamabeParams};
use crate::invariants::{mu_pseudohermitian, pullback_structure, rigidity_certificate_tol};
use crate::manifold::{Backend, SampleManifold};
use crate::monopole::{self, MonopoleFields};
use crate::poly::Poly;
use crate::pseudohermitian::{
    build_coframe, cartan_tensor, solve_ph_with, transform_coframe, AdmissibleCoframe, CoframeChange, PHData,
};
use crate::sampling::{self, random_field, random_positive};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub tol: f64,
    pub pass: bool,
}

pub const SUITES: &[&str] = &[
    "frame",
    "integration",
    "exterior",
    "standard",
    "transformation-law",
    "contact-independence",
    "cross-formula",
    "structure-equations",
    "first-variation",
    "cartan-flow",
    "yamabe-flow",
    "lens",
    "monopole",
    "rigidity",
    "u2-invariance",
    "grid-vs-exact",
];

struct Suite<'a> {
    name: &'static str,
    cfg: &'a RunConfig,
    checks: Vec<Check>,
}

impl<'a> Suite<'a> {
    fn new(name: &'static str, cfg: &'a RunConfig) -> Self {
        Suite { name, cfg, checks: Vec::new() }
    }

    /// Pass iff measured ≤ tol (NaN fails).
    fn le(&mut self, name: impl Into<String>, measured: f64, tol: f64) {
        let pass = measured <= tol;
        self.checks.push(Check { suite: self.name.into(), name: name.into(), measured, tol, pass });
    }

    /// Pass iff measured ≥ tol.
    fn ge(&mut self, name: impl Into<String>, measured: f64, tol: f64) {
        let pass = measured >= tol;
        self.checks.push(Check { suite: self.name.into(), name: name.into(), measured, tol, pass });
    }

    fn truth(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push(Check {
            suite: self.name.into(),
            name: name.into(),
            measured: if ok { 1.0 } else { 0.0 },
            tol: 1.0,
            pass: ok,
        });
    }

    fn solve(&self, cf: &AdmissibleCoframe) -> Result<PHData> {
        solve_ph_with(cf, self.cfg.signs(), self.cfg.tolerances.solver)
    }

    fn grid(&self) -> Result<SampleManifold> {
        let [a, b, c] = self.cfg.suites.grid_resolution;
        SampleManifold::sphere(Backend::grid(a, b, c))
    }
}

fn poly_sphere() -> Result<SampleManifold> {
    SampleManifold::sphere(Backend::poly())
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}

/// Run one named suite.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Vec<Check>> {
    let checks = match name {
        "frame" => frame(cfg)?,
        "integration" => integration(cfg)?,
        "exterior" => exterior(cfg)?,
        "standard" => standard(cfg)?,
        "transformation-law" => transformation_law(cfg)?,
        "contact-independence" => contact_independence(cfg)?,
        "cross-formula" => cross_formula(cfg)?,
        "structure-equations" => structure_equations(cfg)?,
        "first-variation" => first_variation(cfg)?,
        "cartan-flow" => cartan_flow(cfg)?,
        "yamabe-flow" => yamabe_flow(cfg)?,
        "lens" => lens(cfg)?,
        "monopole" => monopole_suite(cfg)?,
        "rigidity" => rigidity(cfg)?,
        "u2-invariance" => u2_invariance(cfg)?,
        "grid-vs-exact" => grid_vs_exact(cfg)?,
        other => return Err(crate::Error::Config(format!("unknown suite '{other}'"))),
    };
    Ok(checks)
}

/// [X_a, X_b] f + Σ_c dθ^c(X_a, X_b) X_c f, worst over the three pairs.
fn commutator_residual(cf: &Coframe, f: &ScalarField) -> Result<f64> {
    let x = cf.derivatives(f)?;
    let mut worst: f64 = 0.0;
    for (a, b, slot) in [(1, 2, 0), (0, 1, 1), (0, 2, 2)] {
        let xab = cf.derivative(&x[b], a)?;
        let xba = cf.derivative(&x[a], b)?;
        let mut r = xab.sub(&xba)?;
        for (c, xc) in x.iter().enumerate() {
            r = r.add(&cf.structure(c).coeff(slot).mul(xc)?)?;
        }
        worst = worst.max(r.sup_norm());
    }
    Ok(worst)
}

fn frame(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("frame", cfg);
    let tol = cfg.tolerances;
    let mut rng = sampling::rng(cfg.seed);
    let m = poly_sphere()?;
    let f = random_field(&mut rng, &m, 0, 4, 1.0);
    let z1 = f.conj().frame_derivative(Dir::Z1).conj();
    s.le("Z1bar f = conj(Z1 conj f)", f.frame_derivative(Dir::Z1bar).sup_distance(&z1)?, tol.frame);
    let g = random_positive(&mut rng, &m, 4, 0.5);
    s.le("T maps real fields to real fields", g.frame_derivative(Dir::T).imag_sup(), tol.frame);
    let cf = Coframe::standard(&m);
    let [t, z, zb] = f.frame_derivatives();
    let lhs = zb.frame_derivative(Dir::Z1).sub(&z.frame_derivative(Dir::Z1bar))?;
    s.le("[Z1, Z1bar] = -iT", lhs.add(&t.scale(C64::new(0.0, 1.0)))?.sup_norm(), tol.frame);
    let lhs = t.frame_derivative(Dir::Z1).sub(&z.frame_derivative(Dir::T))?;
    s.le("[Z1, T] = 2i Z1", lhs.sub(&z.scale(C64::new(0.0, 2.0)))?.sup_norm(), tol.frame);
    s.le("standard commutators match structure coefficients", commutator_residual(&cf, &f)?, tol.frame);
    let want = ScalarField::from_poly(&m, &Poly::z2bar().mul(&Poly::z2bar()));
    let zf = ScalarField::from_poly(&m, &Poly::z1().mul(&Poly::z2bar())).frame_derivative(Dir::Z1);
    s.le("Z1(z1 conj z2) = conj(z2)^2", zf.sup_distance(&want)?, tol.frame);

    let gm = s.grid()?;
    let u = random_positive(&mut rng, &gm, 2, cfg.suites.u_amplitude);
    let e = random_field(&mut rng, &gm, 0, 2, cfg.suites.e_amplitude);
    let cf = build_coframe(&u, &e)?;
    let dtheta = cf.coframe().structure(0);
    let reeb = dtheta.coeff(1).sup_norm().max(dtheta.coeff(2).sup_norm());
    s.le("deformed: T contracts dtheta to zero", reeb, tol.solver);
    let fg = random_field(&mut rng, &gm, 0, 3, 1.0);
    s.le("deformed commutators match structure coefficients", commutator_residual(cf.coframe(), &fg)?, tol.solver);
    Ok(s.checks)
}

fn closed_form_monomial(a: u32, c: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    2.0 * PI * PI * fact(a) * fact(c) / fact(a + c + 1)
}

fn integration(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("integration", cfg);
    let tol = cfg.tolerances.integration;
    let default_grid = SampleManifold::sphere(Backend::default_grid())?;
    for m in [poly_sphere()?, default_grid] {
        let label = m.backend.label();
        let mut worst: f64 = 0.0;
        for a in 0..=4u16 {
            for c in 0..=(4 - a) {
                let p = Poly::monomial([a, a, c, c], C64::new(1.0, 0.0));
                let got = ScalarField::from_poly(&m, &p).integrate()?;
                worst = worst.max((got - closed_form_monomial(a.into(), c.into())).norm());
                let q = Poly::monomial([a + 1, a, c, c + 1], C64::new(1.0, 0.0));
                worst = worst.max(ScalarField::from_poly(&m, &q).integrate()?.norm());
            }
        }
        let tol = if m.backend.is_grid() { 1e-8 } else { tol };
        s.le(format!("{label}: monomial integrals of degree <= 8"), worst, tol);
    }
    let mut rng = sampling::rng(cfg.seed);
    let m = poly_sphere()?;
    let f = random_field(&mut rng, &m, 0, 3, 1.0);
    let g = sampling::random_u2(&mut rng);
    let d = (f.group_pullback(g)?.integrate()? - f.integrate()?).norm();
    s.le("integral is U(2)-invariant", d, tol);
    for p in [2u32, 3, 5] {
        let l = SampleManifold::lens(p, 1, Backend::poly())?;
        let one = ScalarField::real_constant(&l, 1.0).integrate()?.re;
        s.le(format!("vol L({p},1) = 2pi^2/{p}"), (one - 2.0 * PI * PI / f64::from(p)).abs(), tol);
    }
    Ok(s.checks)
}

fn exterior(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("exterior", cfg);
    let tol = cfg.tolerances;
    let mut rng = sampling::rng(cfg.seed);
    let m = poly_sphere()?;
    let cf = Coframe::standard(&m);
    let f = random_field(&mut rng, &m, 0, 4, 1.0);
    s.le("standard: ddf = 0", cf.d(&cf.df(&f)?)?.sup_norm(), 1e-9);
    let theta1 = FormField::basis1(ScalarField::real_constant(&m, 1.0), 1);
    s.le("standard: dd theta1 = 0", cf.d(cf.structure(1))?.sup_norm(), 1e-9);
    let leib = cf.d(&theta1.mul_fn(&f)?)?.sub(&cf.df(&f)?.wedge(&theta1)?.add(&cf.d(&theta1)?.mul_fn(&f)?)?)?;
    s.le("Leibniz rule", leib.sup_norm(), 1e-9);
    let a = FormField::one_form(std::array::from_fn(|_| random_field(&mut rng, &m, 0, 2, 1.0)));
    let b = FormField::one_form(std::array::from_fn(|_| random_field(&mut rng, &m, 0, 2, 1.0)));
    s.le("a^b = -b^a", a.wedge(&b)?.add(&b.wedge(&a)?)?.sup_norm(), 1e-12);
    s.le("conj commutes with d", cf.d(&a.conj())?.sub(&cf.d(&a)?.conj())?.sup_norm(), 1e-12);
    let ma = MatrixForm::new(std::array::from_fn(|_| {
        std::array::from_fn(|_| FormField::one_form(std::array::from_fn(|_| random_field(&mut rng, &m, 0, 1, 1.0))))
    }))?;
    let mb = MatrixForm::new(std::array::from_fn(|_| {
        std::array::from_fn(|_| FormField::one_form(std::array::from_fn(|_| random_field(&mut rng, &m, 0, 1, 1.0))))
    }))?;
    let cyc = matrix_wedge(&ma, &mb)?.trace()?.add(&matrix_wedge(&mb, &ma)?.trace()?)?;
    s.le("graded trace cyclicity", cyc.sup_norm(), 1e-12);

    let gm = s.grid()?;
    let u = random_positive(&mut rng, &gm, 2, cfg.suites.u_amplitude);
    let e = random_field(&mut rng, &gm, 0, 2, cfg.suites.e_amplitude);
    let cf = build_coframe(&u, &e)?;
    let fg = random_field(&mut rng, &gm, 0, 3, 1.0);
    let c = cf.coframe();
    s.le("deformed: ddf = 0", c.d(&c.df(&fg)?)?.sup_norm(), tol.solver);
    let ch = CoframeChange::admissible(&cf, &u, &ScalarField::real_constant(&gm, 1.0))?;
    let tc = transform_coframe(&cf, &ch)?;
    let vol_new = tc.coframe.theta_dtheta()?;
    let lhs = tc.coframe.coframe().integrate(&vol_new.mul_fn(&fg)?)?;
    let rhs = c.integrate(&cf.theta_dtheta()?.mul_fn(&fg.mul(&u.mul(&u)?)?)?)?;
    s.le("volume law: new theta^dtheta = u^2 theta^dtheta", rel((lhs - rhs).norm(), rhs.norm()), tol.solver);
    Ok(s.checks)
}

fn standard(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("standard", cfg);
    let tol = cfg.tolerances;
    let ledger = Conventions::get();
    let m = poly_sphere()?;
    let cf = AdmissibleCoframe::standard(&m);
    let ph = s.solve(&cf)?;
    let q = cartan_tensor(&ph)?;
    s.le("sup |A11|", ph.a11().sup_norm(), tol.standard_torsion);
    s.le("std-dev W", ph.w().std_dev()?, tol.standard_w_std);
    s.le("sup |Q11|", q.sup_norm(), tol.standard_q);
    s.le("|W - c0| (ledger)", (ph.w().max_re() - ledger.c0).abs(), tol.frame);
    s.le("omega + conj(omega) = 0", ph.omega_reality_residual()?, tol.frame);
    let mu = mu_pseudohermitian(&ph, &cf)?;
    s.le("|mu - mu0| (ledger)", (mu.mu - ledger.mu0).abs(), tol.frame);
    s.truth("spherical verdict", crate::pseudohermitian::is_spherical(&q, tol.spherical));
    s.le("ledger derivation hash", if ledger.derivation_hash() == ledger.c0_derivation_sha256 { 0.0 } else { 1.0 }, 0.0);
    let gm = s.grid()?;
    let gcf = AdmissibleCoframe::standard(&gm);
    let gph = s.solve(&gcf)?;
    let gmu = mu_pseudohermitian(&gph, &gcf)?.mu;
    s.le("grid mu matches exact mu", rel((gmu - mu.mu).abs(), mu.mu.abs()), tol.mu_cross);
    Ok(s.checks)
}

/// Q₁₁ = Q̃₁₁·u·(u₁¹)² for a random admissible change on a deformed base.
pub fn transformation_law_error<R: Rng>(
    cfg: &RunConfig,
    m: &SampleManifold,
    rng: &mut R,
) -> Result<f64> {
    let signs = cfg.signs();
    let tol = cfg.tolerances.solver;
    let e = random_field(rng, m, -2 * m.z1_charge_shift(), 2, cfg.suites.e_amplitude);
    let one = ScalarField::real_constant(m, 1.0);
    let cf = build_coframe(&one, &e)?;
    let q = cartan_tensor(&solve_ph_with(&cf, signs, tol)?)?;
    let u = random_positive(rng, m, 2, cfg.suites.u_amplitude);
    let phase = random_field(rng, m, 0, 2, 0.5).re();
    let u11 = phase.scale(C64::new(0.0, 1.0)).exp()?;
    let ch = CoframeChange::admissible(&cf, &u, &u11)?;
    let tc = transform_coframe(&cf, &ch)?;
    let qt = cartan_tensor(&solve_ph_with(&tc.coframe, signs, tol)?)?;
    let predicted = qt.mul(&u)?.mul(&tc.u11.mul(&tc.u11)?)?;
    Ok(rel(q.sup_distance(&predicted)?, q.sup_norm()))
}

fn transformation_law(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("transformation-law", cfg);
    let m = s.grid()?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(2));
    for k in 0..cfg.suites.law_samples {
        let err = transformation_law_error(cfg, &m, &mut rng)?;
        s.le(format!("change {k}: relative sup error"), err, cfg.tolerances.transformation_law);
    }
    let pm = poly_sphere()?;
    let cf = AdmissibleCoframe::standard(&pm);
    let tc = transform_coframe(&cf, &CoframeChange::identity(&cf))?;
    let d = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| tc.coframe.coframe().matrix()[i][j].sup_distance(&cf.coframe().matrix()[i][j]))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    s.le("identity change leaves the coframe unchanged", d, cfg.tolerances.frame);
    Ok(s.checks)
}

fn contact_independence(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("contact-independence", cfg);
    let m = s.grid()?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(3));
    let e = random_field(&mut rng, &m, 0, 2, cfg.suites.e_amplitude);
    let one = ScalarField::real_constant(&m, 1.0);
    let cf = build_coframe(&one, &e)?;
    let mu0 = mu_pseudohermitian(&s.solve(&cf)?, &cf)?.mu;
    for k in 0..cfg.suites.contact_samples {
        let u = random_positive(&mut rng, &m, 2, cfg.suites.u_amplitude);
        let cfu = build_coframe(&u, &e)?;
        let mu = mu_pseudohermitian(&s.solve(&cfu)?, &cfu)?.mu;
        s.le(format!("u sample {k}: |mu(u theta) - mu(theta)|/(1+|mu|)"), (mu - mu0).abs() / (1.0 + mu0.abs()), cfg.tolerances.contact_independence);
    }
    Ok(s.checks)
}

fn cartan_of(s: &Suite, u: &ScalarField, e: &ScalarField) -> Result<(AdmissibleCoframe, PHData, CartanPackage)> {
    let cf = build_coframe(u, e)?;
    let ph = s.solve(&cf)?;
    let pkg = solve_cartan(&cf, &ph)?;
    Ok((cf, ph, pkg))
}

/// Seeded deformation of the given degree shared by several suites.
fn deformed_e(cfg: &RunConfig, m: &SampleManifold, degree: u16) -> ScalarField {
    let mut rng = sampling::rng(cfg.seed.wrapping_add(4));
    random_field(&mut rng, m, 0, degree, cfg.suites.e_amplitude)
}

fn cross_formula(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("cross-formula", cfg);
    let tol = cfg.tolerances;
    let m = poly_sphere()?;
    let gm = s.grid()?;
    let structures = [
        ("standard", ScalarField::zero(&m)),
        ("rossi", ScalarField::constant(&m, C64::new(0.1, 0.05))),
        ("deformed", deformed_e(cfg, &gm, 2)),
    ];
    for (label, e) in structures {
        let one = ScalarField::real_constant(e.manifold(), 1.0);
        let (cf, ph, pkg) = cartan_of(&s, &one, &e)?;
        let mu = mu_pseudohermitian(&ph, &cf)?.mu;
        let t = transgression_mu(&pkg)?;
        s.le(format!("{label}: mu trace vs mu pseudohermitian"), rel((t.mu_trace - mu).abs(), mu.abs()), tol.mu_cross);
        s.le(format!("{label}: middle display vs trace"), rel((t.mu_middle - t.mu_trace).abs(), mu.abs()), 1e-6);
        s.le(format!("{label}: sup |tr(Pi^Omega)|"), pkg.trace_pi_omega()?, tol.trace_pi_omega);
    }
    Ok(s.checks)
}

fn structure_equations(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("structure-equations", cfg);
    let tol = cfg.tolerances;
    let m = poly_sphere()?;
    let one = ScalarField::real_constant(&m, 1.0);
    let (_, _, std_pkg) = cartan_of(&s, &one, &ScalarField::zero(&m))?;
    s.le("standard: sup |Omega|", std_pkg.curvature().sup_norm(), tol.structure_equations);
    s.le("standard: sup |Q^1_1bar|", std_pkg.q1_1bar.sup_norm(), tol.standard_q);
    let (_, _, rossi) = cartan_of(&s, &one, &ScalarField::constant(&m, C64::new(0.1, 0.05)))?;
    s.le("rossi: Bianchi identity (exact)", rossi.bianchi_residual()?, tol.frame);
    let gm = s.grid()?;
    let e = deformed_e(cfg, &gm, 2);
    let (_, ph, pkg) = cartan_of(&s, &ScalarField::real_constant(&gm, 1.0), &e)?;
    let r = pkg.residuals;
    s.le("normalization", r.normalization, tol.structure_equations);
    s.le("first equations, theta1 line", r.first_1, tol.structure_equations);
    s.le("first equations, phi line", r.first_2, tol.structure_equations);
    s.le("second equations, phi11 line", r.second_1, tol.structure_equations);
    s.le("second equations, phi1 line remainder", r.second_2, tol.structure_equations);
    s.le("second equations, psi line remainder", r.second_3, tol.structure_equations);
    s.le("trace Pi", r.trace_pi, tol.structure_equations);
    s.le("R1bar = conj(R1)", r.r_reality, tol.cartan_q_match);
    s.le("delta real", r.delta_reality, tol.structure_equations);
    let q = cartan_tensor(&ph)?;
    let want = q.conj().scale_re(Conventions::get().cartan_q.factor);
    s.le("extracted Q vs Q11", rel(pkg.q1_1bar.sup_distance(&want)?, q.sup_norm()), tol.cartan_q_match);
    s.le("curvature outside the Q/R pattern", pkg.curvature_pattern_residual(), tol.structure_equations);
    s.le("Bianchi identity, relative to sup |Omega|", rel(pkg.bianchi_residual()?, pkg.curvature().sup_norm()), tol.bianchi);
    s.le("solver reconstruction of dtheta1", ph.residuals.reconstruction, 1e-8);
    s.le("Im W", ph.residuals.imag_w, 1e-8);
    s.le("omega + conj(omega) = 0", ph.omega_reality_residual()?, 1e-8);
    s.ge("deformed structure is not spherical (sup |Q11|)", q.sup_norm(), tol.spherical);
    Ok(s.checks)
}

fn first_variation(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("first-variation", cfg);
    let tol = cfg.tolerances;
    let cal_cfg = CalibrationConfig {
        manifold: SampleManifold::sphere(Backend::grid(16, 16, 16))?,
        directions: cfg.suites.calibration_directions,
        base_points: cfg.suites.calibration_base_points,
        eps: cfg.suites.calibration_eps,
        seed: cfg.seed,
        max_dispersion: f64::INFINITY,
        ..CalibrationConfig::default()
    };
    let cal = flows::calibrate_pairing(&cal_cfg)?;
    s.le("dispersion of the pairing constant", cal.dispersion, tol.calibration_dispersion);
    s.le("directional derivative at E = 0", cal.gradient_at_standard, tol.gradient_at_standard);
    s.le("difference quotient order |p - 2|", (cal.convergence_order - 2.0).abs(), 0.1);
    let ledger = Conventions::get().pairing.c;
    s.le("fitted constant vs ledger", rel((cal.c - ledger).norm(), ledger), tol.calibration_dispersion);
    Ok(s.checks)
}

/// Random constant deformation with |E| = r.
fn rossi_start<R: Rng>(rng: &mut R, m: &SampleManifold, r: f64) -> ScalarField {
    ScalarField::constant(m, C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
}

fn cartan_flow(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("cartan-flow", cfg);
    let tol = cfg.tolerances;
    let m = poly_sphere()?;
    let one = ScalarField::real_constant(&m, 1.0);
    let params = CartanFlowParams { mu_slack: cfg.flow.mu_slack, e_margin: cfg.flow.e_margin, min_dt: cfg.flow.min_dt, ..Default::default() };
    let fixed = FlowState::new(&one, &ScalarField::zero(&m), cfg.suites.flow_dt)?;
    let out = flows::cartan_flow_step(&fixed, fixed.dt, &params)?;
    s.le("E = 0 is a fixed point", out.state.e().sup_distance(fixed.e())?, tol.fixed_point);
    let mut rng = sampling::rng(cfg.seed.wrapping_add(6));
    for k in 0..cfg.suites.flow_starts {
        let r = cfg.suites.e_amplitude * rng.gen_range(0.5..1.5);
        let e0 = rossi_start(&mut rng, &m, r);
        let mut st = FlowState::new(&one, &e0, cfg.suites.flow_dt)?;
        let sup0 = st.monitors().sup_e;
        let mut worst_rise = f64::NEG_INFINITY;
        for _ in 0..cfg.suites.flow_steps {
            let next = flows::cartan_flow_step(&st, st.dt, &params)?.state;
            worst_rise = worst_rise.max(next.mu() - st.mu());
            st = next;
        }
        s.le(format!("start {k}: largest mu increase"), worst_rise, cfg.flow.mu_slack);
        s.ge(format!("start {k}: relative decrease of sup|E|"), 1.0 - st.monitors().sup_e / sup0, tol.flow_e_decrease);
    }
    Ok(s.checks)
}

fn yamabe_flow(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("yamabe-flow", cfg);
    let tol = cfg.tolerances;
    let m = poly_sphere()?;
    let one = ScalarField::real_constant(&m, 1.0);
    let norm = YamabeParams { normalized: true, min_dt: cfg.flow.min_dt };
    let fixed = FlowState::new(&one, &ScalarField::zero(&m), cfg.suites.yamabe_dt)?;
    let v = flows::yamabe_velocity(fixed.coframe(), fixed.ph(), true)?;
    s.le("normalized right-hand side at the standard structure", v.sup_norm(), 1e-10);
    let raw = YamabeParams { normalized: false, min_dt: cfg.flow.min_dt };
    let mut st = FlowState::new(&one, &ScalarField::constant(&m, C64::new(0.1, 0.05)), cfg.suites.yamabe_dt)?;
    let mut worst_std: f64 = 0.0;
    let mut monitors = 0;
    for _ in 0..cfg.suites.yamabe_steps {
        st = flows::yamabe_flow_step(&st, st.dt, &raw)?.state;
        worst_std = worst_std.max(st.ph().w().std_dev()?);
        monitors += st.monitors().harnack().is_finite() as u64;
    }
    s.le("constant-W data: largest std-dev of W", worst_std, tol.yamabe_w_std);
    s.le("constant-W data: std-dev of u", st.u().std_dev()?, tol.yamabe_w_std);
    s.truth("Harnack monitor emitted every step", monitors == cfg.suites.yamabe_steps);
    let st2 = flows::yamabe_flow_step(&fixed, fixed.dt, &norm)?.state;
    s.le("normalized flow: standard structure stationary", st2.u().sup_distance(fixed.u())?, 1e-10);

    let gm = s.grid()?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(7));
    let u = random_positive(&mut rng, &gm, 2, cfg.suites.u_amplitude);
    let st = FlowState::new(&u, &ScalarField::zero(&gm), cfg.suites.yamabe_dt)?;
    let lin_err = |dt: f64| -> Result<f64> {
        let next = flows::yamabe_flow_step(&st, dt, &raw)?.state;
        let lin = u.add(&u.mul(st.ph().w())?.scale_re(next.dt))?;
        next.u().sup_distance(&lin)
    };
    let dt = cfg.suites.taylor_dt;
    let (e1, e2) = (lin_err(dt)?, lin_err(dt / 2.0)?);
    s.ge("Taylor consistency: error ratio for dt -> dt/2", e1 / e2, tol.taylor_ratio);
    Ok(s.checks)
}

fn lens(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("lens", cfg);
    let tol = cfg.tolerances.lens;
    let sphere = poly_sphere()?;
    let scf = AdmissibleCoframe::standard(&sphere);
    let mu_s = mu_pseudohermitian(&s.solve(&scf)?, &scf)?.mu;
    let mut by_p = Vec::new();
    for (p, q) in cfg.suites.lens_orders {
        let l = SampleManifold::lens(p, q, Backend::poly())?;
        let cf = AdmissibleCoframe::standard(&l);
        let ph = s.solve(&cf)?;
        let mu = crate::invariants::mu_lens(p, q, &ph, &cf)?.mu;
        s.le(format!("L({p},{q}): |mu - mu(S3)/{p}|"), (mu - mu_s / f64::from(p)).abs(), tol);
        s.le(format!("L({p},{q}): sup |Q11|"), cartan_tensor(&ph)?.sup_norm(), cfg.tolerances.standard_q);
        by_p.push((p, mu));
    }
    let trivial = SampleManifold::lens(1, 0, Backend::poly())?;
    let tcf = AdmissibleCoframe::standard(&trivial);
    let mu1 = crate::invariants::mu_lens(1, 0, &s.solve(&tcf)?, &tcf)?.mu;
    s.le("L(1,0) equals the sphere", (mu1 - mu_s).abs(), tol);
    if let (Some(&(2, a)), Some(&(3, b))) = (by_p.iter().find(|x| x.0 == 2), by_p.iter().find(|x| x.0 == 3)) {
        s.le("L(2,1) : L(3,1) = 3 : 2", (a / b - 1.5).abs(), tol);
    }
    // a deformed invariant structure descends with the same factor
    let l = SampleManifold::lens(3, 1, Backend::poly())?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(8));
    let p = sampling::random_poly(&mut rng, 2, cfg.suites.e_amplitude);
    let charge = -2 * l.z1_charge_shift();
    let el = ScalarField::from_poly_charged(&l, &p, charge);
    let projected = Poly::from_terms(
        p.terms().filter(|(e, _)| l.monomial_charge(**e) == l.reduce_charge(charge)).map(|(e, c)| (*e, *c)),
    );
    let es = ScalarField::from_poly(&sphere, &projected);
    let one_l = ScalarField::real_constant(&l, 1.0);
    let one_s = ScalarField::real_constant(&sphere, 1.0);
    let (cl, cs) = (build_coframe(&one_l, &el)?, build_coframe(&one_s, &es)?);
    let ml = mu_pseudohermitian(&s.solve(&cl)?, &cl)?.mu;
    let ms = mu_pseudohermitian(&s.solve(&cs)?, &cs)?.mu;
    s.le("deformed L(3,1): mu = mu(cover)/3", (ml - ms / 3.0).abs(), tol);
    Ok(s.checks)
}

fn monopole_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("monopole", cfg);
    let tol = cfg.tolerances;
    let pm = poly_sphere()?;
    let sph = s.solve(&AdmissibleCoframe::standard(&pm))?;
    let zero = monopole::residuals(&sph, &MonopoleFields::zero(&pm)?)?;
    s.le("standard: zero configuration gives -W", zero.curvature.add(sph.w())?.sup_norm(), tol.zero_configuration);
    let rep = monopole::obstruction_report(&sph, tol.torsion_free)?;
    s.truth("standard: torsion free and W positive", rep.torsion_free && rep.w_positive);

    let m = s.grid()?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(9));
    let u = random_positive(&mut rng, &m, 1, cfg.suites.u_amplitude);
    let e = random_field(&mut rng, &m, 0, 2, cfg.suites.e_amplitude);
    let cf = build_coframe(&u, &e)?;
    let ph = s.solve(&cf)?;
    let zero = monopole::residuals(&ph, &MonopoleFields::zero(&m)?)?;
    s.le("deformed: zero configuration gives -W", zero.curvature.add(ph.w())?.sup_norm(), tol.zero_configuration);
    let rep = monopole::obstruction_report(&ph, tol.torsion_free)?;
    s.truth("deformed: torsion detected", !rep.torsion_free);

    let a1 = random_field(&mut rng, &m, 0, 1, 0.5);
    let a = FormField::one_form([random_positive(&mut rng, &m, 1, 0.3), a1.clone(), a1.conj()]);
    let mf = MonopoleFields { alpha: random_field(&mut rng, &m, 0, 2, 1.0), beta1bar: random_field(&mut rng, &m, 0, 2, 1.0), a };
    let lhs = monopole::l2_pairing(&ph, &monopole::twisted_dbar(&ph, &mf.alpha, &mf.a)?, &mf.beta1bar)?;
    let rhs = monopole::l2_pairing(&ph, &mf.alpha, &monopole::twisted_dbar_adjoint(&ph, &mf.beta1bar, &mf.a)?)?;
    s.le("twisted adjointness", rel((lhs - rhs).norm(), lhs.norm().max(1.0)), tol.adjoint);

    let r0 = monopole::residuals(&ph, &mf)?.report(&ph)?;
    let gamma = random_field(&mut rng, &m, 0, 2, 0.5).re();
    let r1 = monopole::residuals(&ph, &monopole::gauge_transform(&ph, &mf, &gamma)?)?.report(&ph)?;
    let worst = [
        (r0.alpha_line.sup - r1.alpha_line.sup).abs(),
        (r0.beta_line.sup - r1.beta_line.sup).abs(),
        (r0.curvature_line.sup - r1.curvature_line.sup).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    s.le("gauge invariance of residual sup-norms", worst, tol.gauge);

    let doubled = MonopoleFields { alpha: mf.alpha.scale_re(2.0), ..mf.clone() };
    let d0 = monopole::twisted_dbar(&ph, &mf.alpha, &mf.a)?;
    let d1 = monopole::twisted_dbar(&ph, &doubled.alpha, &mf.a)?;
    s.le("doubling alpha doubles the Dirac residual", d1.sup_distance(&d0.scale_re(2.0))?, 1e-12);
    let c0 = monopole::residuals(&ph, &mf)?.curvature;
    let c1 = monopole::residuals(&ph, &doubled)?.curvature;
    let want = c0.sub(&mf.alpha.norm_sqr().scale_re(3.0))?;
    s.le("doubling alpha quadruples its curvature term", c1.sup_distance(&want)?, 1e-12);
    Ok(s.checks)
}

fn rigidity(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("rigidity", cfg);
    let tol = cfg.tolerances;
    let m = poly_sphere()?;
    for scale in [0.5, 1.0, 2.0, 4.0] {
        let u = ScalarField::real_constant(&m, scale);
        let cf = build_coframe(&u, &ScalarField::zero(&m))?;
        let ph = s.solve(&cf)?;
        let c0 = ph.w().max_re();
        let cert = rigidity_certificate_tol(&ph, tol.torsion_free)?;
        s.truth(format!("u = {scale}: certificate holds"), cert.holds);
        s.le(format!("u = {scale}: |margin - min(c0, 20 c0^3)|"), (cert.margin - c0.min(20.0 * c0.powi(3))).abs(), tol.rigidity);
    }
    let cf = build_coframe(&ScalarField::real_constant(&m, 1.0), &ScalarField::constant(&m, C64::new(0.1, 0.0)))?;
    let cert = rigidity_certificate_tol(&s.solve(&cf)?, tol.torsion_free)?;
    s.truth("torsion reported for a Rossi sphere", cert.reason.as_deref() == Some("torsion"));
    // continuity of the margin along W = c0 + eps f
    let gm = s.grid()?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(10));
    let f = random_positive(&mut rng, &gm, 2, 0.9).sub(&ScalarField::real_constant(&gm, 1.0))?;
    let margin = |eps: f64| -> Result<f64> {
        let u = ScalarField::real_constant(&gm, 1.0).add(&f.scale_re(eps))?;
        let cf = build_coframe(&u, &ScalarField::zero(&gm))?;
        Ok(rigidity_certificate_tol(&s.solve(&cf)?, f64::INFINITY)?.margin)
    };
    let (m0, m1, m2) = (margin(0.0)?, margin(1e-3)?, margin(2e-3)?);
    s.le("margin continuous in eps", (m2 - m1).abs().max((m1 - m0).abs()), 0.1);
    Ok(s.checks)
}

fn u2_invariance(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("u2-invariance", cfg);
    let tol = cfg.tolerances.u2_invariance;
    let m = poly_sphere()?;
    let mut rng = sampling::rng(cfg.seed.wrapping_add(11));
    let f = random_field(&mut rng, &m, 0, 2, 1.0);
    let id = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    s.le("identity pullback", f.group_pullback(id)?.sup_distance(&f)?, tol);
    let phi = 0.7f64;
    let g = [[C64::from_polar(1.0, phi), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    let z1 = ScalarField::from_poly(&m, &Poly::z1());
    s.le("diag(e^{i phi}, 1) pulls z1 back to e^{i phi} z1", z1.group_pullback(g)?.sup_distance(&z1.scale(C64::from_polar(1.0, phi)))?, tol);

    let one = ScalarField::real_constant(&m, 1.0);
    let e = deformed_e(cfg, &m, 1);
    let g = sampling::random_u2(&mut rng);
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let cf = build_coframe(&one, &e)?;
    let ph = s.solve(&cf)?;
    let q = cartan_tensor(&ph)?;
    let mu = mu_pseudohermitian(&ph, &cf)?.mu;
    let (up, ep) = pullback_structure(&one, &e, g)?;
    let cfp = build_coframe(&up, &ep)?;
    let php = s.solve(&cfp)?;
    let qp = cartan_tensor(&php)?;
    s.le("mu is U(2)-invariant", (mu_pseudohermitian(&php, &cfp)?.mu - mu).abs(), tol);
    let want = q.group_pullback(g)?.scale(det * det);
    s.le("Q of the pullback is the pullback of Q", rel(qp.sup_distance(&want)?, q.sup_norm()), 1e-6);

    let er = ScalarField::constant(&m, C64::new(0.1, 0.05));
    let (_, _, pkg) = cartan_of(&s, &one, &er)?;
    let (upr, epr) = pullback_structure(&one, &er, g)?;
    let (_, _, pkgp) = cartan_of(&s, &upr, &epr)?;
    let t0 = transgression_mu(&pkg)?.mu_trace;
    s.le("transgression mu is U(2)-invariant", (transgression_mu(&pkgp)?.mu_trace - t0).abs(), tol);
    Ok(s.checks)
}

fn grid_vs_exact(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut s = Suite::new("grid-vs-exact", cfg);
    let res = match cfg.backend.kind {
        BackendKind::Grid => cfg.backend.resolution,
        BackendKind::Poly => cfg.suites.grid_resolution,
    };
    let half = res.map(|n| (n / 2).max(8) & !1);
    let fine = SampleManifold::sphere(Backend::grid(res[0], res[1], res[2]))?;
    let coarse = SampleManifold::sphere(Backend::grid(half[0], half[1], half[2]))?;
    let pm = poly_sphere()?;
    let deriv_err = |gm: &SampleManifold| -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut rng = sampling::rng(cfg.seed.wrapping_add(12));
        for deg in 1..=6u16 {
            let p = sampling::random_poly(&mut rng, deg, 1.0);
            let exact = ScalarField::from_poly(&pm, &p).frame_derivatives();
            let grid = ScalarField::from_poly(gm, &p).frame_derivatives();
            for (x, g) in exact.iter().zip(&grid) {
                worst = worst.max(x.resample(gm)?.sup_distance(g)?);
            }
        }
        Ok(worst)
    };
    let (ef, ec) = (deriv_err(&fine)?, deriv_err(&coarse)?);
    s.le(format!("frame derivatives, degree <= 6, at {res:?}"), ef, 1e-8);
    s.le("refinement does not increase the derivative error", ef - ec.max(1e-12), 0.0);
    let mu_err = |gm: &SampleManifold| -> Result<f64> {
        let e = deformed_e(cfg, &pm, 1);
        let one = ScalarField::real_constant(&pm, 1.0);
        let cf = build_coframe(&one, &e)?;
        let exact = mu_pseudohermitian(&s.solve(&cf)?, &cf)?.mu;
        let gcf = build_coframe(&one.resample(gm)?, &e.resample(gm)?)?;
        let g = mu_pseudohermitian(&s.solve(&gcf)?, &gcf)?.mu;
        Ok(rel((g - exact).abs(), exact.abs()))
    };
    let (mf, mc) = (mu_err(&fine)?, mu_err(&coarse)?);
    s.le(format!("mu relative error at {res:?}"), mf, cfg.tolerances.mu_cross);
    s.le(format!("mu relative error at {half:?} (coarse)"), mc, 10.0 * cfg.tolerances.mu_cross);
    Ok(s.checks)
}

/// Run every suite in order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for name in SUITES {
        out.extend(run_suite(name, cfg)?);
    }
    Ok(out)
}
