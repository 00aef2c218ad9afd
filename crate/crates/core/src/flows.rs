//! Cartan gradient flow on the deformation tensor and the CR Yamabe flow on
//! the conformal factor, with monitors, checkpoints and the calibration of
//! the first-variation pairing.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::conventions::Conventions;
use crate::error::{Error, Result};
use crate::field::{FieldSnapshot, ScalarField};
use crate::invariants::mu_pseudohermitian;
use crate::manifold::{Backend, SampleManifold};
use crate::pseudohermitian::{build_coframe, cartan_tensor, solve_ph, AdmissibleCoframe, PHData};
use crate::sampling;

/// One row of the flow time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    pub t: f64,
    pub dt: f64,
    pub mu: f64,
    pub sup_q: f64,
    pub max_w: f64,
    pub min_w: f64,
    pub sup_e: f64,
    pub accepted: bool,
}

impl Monitors {
    pub const CSV_HEADER: &'static str = "t,dt,mu,supQ,maxW,minW,supE,accepted";

    /// Harnack-type ratio max W / min W.
    pub fn harnack(&self) -> f64 {
        self.max_w / self.min_w
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t, self.dt, self.mu, self.sup_q, self.max_w, self.min_w, self.sup_e, self.accepted as u8
        )
    }
}

/// A solved structure (u, E) at time t.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    /// Step size proposed for the next step.
    pub dt: f64,
    pub accepted_steps: u64,
    cf: AdmissibleCoframe,
    ph: PHData,
    q: ScalarField,
    monitors: Monitors,
}

impl FlowState {
    pub fn new(u: &ScalarField, e: &ScalarField, dt: f64) -> Result<FlowState> {
        Self::assemble(u, e, 0.0, dt, 0)
    }

    fn assemble(u: &ScalarField, e: &ScalarField, t: f64, dt: f64, accepted_steps: u64) -> Result<FlowState> {
        let cf = build_coframe(u, e)?;
        let ph = solve_ph(&cf)?;
        let q = cartan_tensor(&ph)?;
        let mu = mu_pseudohermitian(&ph, &cf)?.mu;
        if !mu.is_finite() {
            return Err(Error::NaN("mu"));
        }
        let monitors = Monitors {
            t,
            dt,
            mu,
            sup_q: q.sup_norm(),
            max_w: ph.w().max_re(),
            min_w: ph.w().min_re(),
            sup_e: e.sup_norm(),
            accepted: true,
        };
        Ok(FlowState { t, dt, accepted_steps, cf, ph, q, monitors })
    }

    pub fn u(&self) -> &ScalarField {
        self.cf.u()
    }

    pub fn e(&self) -> &ScalarField {
        self.cf.e()
    }

    pub fn coframe(&self) -> &AdmissibleCoframe {
        &self.cf
    }

    pub fn ph(&self) -> &PHData {
        &self.ph
    }

    pub fn q(&self) -> &ScalarField {
        &self.q
    }

    pub fn monitors(&self) -> Monitors {
        self.monitors
    }

    pub fn mu(&self) -> f64 {
        self.monitors.mu
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            t: self.t,
            dt: self.dt,
            accepted_steps: self.accepted_steps,
            u: self.u().snapshot(),
            e: self.e().snapshot(),
            monitors: self.monitors,
        }
    }

    /// Rebuild a state from a checkpoint. The structure is re-solved from the
    /// stored (u, E), which reproduces the original state bit for bit.
    pub fn from_checkpoint(c: &Checkpoint) -> Result<FlowState> {
        let u = ScalarField::from_snapshot(&c.u)?;
        let e = ScalarField::from_snapshot(&c.e)?;
        Self::assemble(&u, &e, c.t, c.dt, c.accepted_steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub dt: f64,
    pub accepted_steps: u64,
    pub u: FieldSnapshot,
    pub e: FieldSnapshot,
    pub monitors: Monitors,
}

/// Result of one step: the new state plus the monitors of rejected attempts.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FlowState,
    pub rejected: Vec<Monitors>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartanFlowParams {
    /// Pairing constant c with dμ(Ė) = Re(c ∫ Q₁₁ Ė/(1−|E|²) θ∧dθ).
    pub pairing: C64,
    pub mu_slack: f64,
    /// sup|E| must stay below 1 − e_margin.
    pub e_margin: f64,
    pub min_dt: f64,
}

impl Default for CartanFlowParams {
    fn default() -> Self {
        CartanFlowParams {
            pairing: C64::new(Conventions::get().pairing.c, 0.0),
            mu_slack: 1e-9,
            e_margin: 0.05,
            min_dt: 1e-12,
        }
    }
}

/// Ė = −(1−|E|²)·conj(c·Q₁₁)/|c|, which makes dμ/dt = −|c|∫|Q₁₁|² θ∧dθ.
pub fn cartan_velocity(e: &ScalarField, q: &ScalarField, pairing: C64) -> Result<ScalarField> {
    let one = ScalarField::real_constant(e.manifold(), 1.0);
    let weight = one.sub(&e.norm_sqr())?;
    let dir = q.scale(pairing / pairing.norm()).conj();
    Ok(weight.mul(&dir)?.neg())
}

fn velocity_at(u: &ScalarField, e: &ScalarField, pairing: C64) -> Result<ScalarField> {
    let cf = build_coframe(u, e)?;
    let q = cartan_tensor(&solve_ph(&cf)?)?;
    cartan_velocity(e, &q, pairing)
}

fn axpy(x: &ScalarField, a: f64, y: &ScalarField) -> Result<ScalarField> {
    x.add(&y.scale_re(a))
}

fn rk4_e(s: &FlowState, dt: f64, p: &CartanFlowParams) -> Result<ScalarField> {
    let u = s.u();
    let e = s.e();
    let k1 = cartan_velocity(e, &s.q, p.pairing)?;
    let k2 = velocity_at(u, &axpy(e, dt / 2.0, &k1)?, p.pairing)?;
    let k3 = velocity_at(u, &axpy(e, dt / 2.0, &k2)?, p.pairing)?;
    let k4 = velocity_at(u, &axpy(e, dt, &k3)?, p.pairing)?;
    let incr = k1.add(&k4)?.add(&k2.add(&k3)?.scale_re(2.0))?;
    axpy(e, dt / 6.0, &incr)
}

fn rejected_row(s: &FlowState, dt: f64, mu: f64) -> Monitors {
    Monitors { t: s.t + dt, dt, mu, accepted: false, ..s.monitors }
}

/// One RK4 step of the Cartan flow. The step is rejected and retried with
/// half the step size when μ rises above the slack or a stage leaves the
/// admissible region.
pub fn cartan_flow_step(s: &FlowState, dt: f64, p: &CartanFlowParams) -> Result<StepOutcome> {
    let mut dt = dt;
    let mut rejected = Vec::new();
    loop {
        if dt < p.min_dt {
            return Err(Error::DtUnderflow { t: s.t, dt });
        }
        let attempt = rk4_e(s, dt, p).and_then(|e| {
            let sup = e.sup_norm();
            if sup >= 1.0 - p.e_margin {
                return Err(Error::MarginViolated(sup));
            }
            FlowState::assemble(s.u(), &e, s.t + dt, dt, s.accepted_steps + 1)
        });
        match attempt {
            Ok(next) if next.mu() <= s.mu() + p.mu_slack => return Ok(StepOutcome { state: next, rejected }),
            Ok(next) => rejected.push(rejected_row(s, dt, next.mu())),
            // Past the explicit stability limit a stage breaks reality or admissibility.
            Err(
                Error::DeformationTooLarge(_) | Error::MarginViolated(_) | Error::Reality(..) | Error::Inadmissible(..),
            ) if dt / 2.0 >= p.min_dt => {
                rejected.push(rejected_row(s, dt, f64::NAN))
            }
            Err(e) => return Err(e),
        }
        dt /= 2.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YamabeParams {
    /// Subtract the θ∧dθ-mean of W, removing the uniform scaling mode.
    pub normalized: bool,
    pub min_dt: f64,
}

impl Default for YamabeParams {
    fn default() -> Self {
        YamabeParams { normalized: false, min_dt: 1e-12 }
    }
}

/// Right-hand side of d(log u)/dt: W, or W minus its mean.
pub fn yamabe_velocity(cf: &AdmissibleCoframe, ph: &PHData, normalized: bool) -> Result<ScalarField> {
    let w = ph.w().clone();
    if !normalized {
        return Ok(w);
    }
    let tdt = cf.theta_dtheta()?;
    let c = cf.coframe();
    let total = c.integrate(&tdt.mul_fn(&w)?)?.re;
    let vol = c.integrate(&tdt)?.re;
    Ok(w.sub(&ScalarField::real_constant(w.manifold(), total / vol))?)
}

fn scaled_u(u: &ScalarField, a: f64, k: &ScalarField) -> Result<ScalarField> {
    let f = u.mul(&k.scale_re(a).exp()?)?;
    let min = f.min_re();
    if !(min > 0.0) {
        return Err(Error::NonPositive(min));
    }
    Ok(f.re())
}

fn yamabe_rhs(u: &ScalarField, e: &ScalarField, normalized: bool) -> Result<ScalarField> {
    let cf = build_coframe(u, e)?;
    let ph = solve_ph(&cf)?;
    yamabe_velocity(&cf, &ph, normalized)
}

fn rk4_log_u(s: &FlowState, dt: f64, p: &YamabeParams) -> Result<ScalarField> {
    let u = s.u();
    let e = s.e();
    let k1 = yamabe_velocity(&s.cf, &s.ph, p.normalized)?;
    let k2 = yamabe_rhs(&scaled_u(u, dt / 2.0, &k1)?, e, p.normalized)?;
    let k3 = yamabe_rhs(&scaled_u(u, dt / 2.0, &k2)?, e, p.normalized)?;
    let k4 = yamabe_rhs(&scaled_u(u, dt, &k3)?, e, p.normalized)?;
    let incr = k1.add(&k4)?.add(&k2.add(&k3)?.scale_re(2.0))?;
    scaled_u(u, dt / 6.0, &incr)
}

/// One RK4 step of the Yamabe flow on log u. Positivity failures halve dt.
pub fn yamabe_flow_step(s: &FlowState, dt: f64, p: &YamabeParams) -> Result<StepOutcome> {
    let mut dt = dt;
    let mut rejected = Vec::new();
    loop {
        if dt < p.min_dt {
            return Err(Error::DtUnderflow { t: s.t, dt });
        }
        let attempt = rk4_log_u(s, dt, p)
            .and_then(|u| FlowState::assemble(&u, s.e(), s.t + dt, dt, s.accepted_steps + 1));
        match attempt {
            Ok(next) => return Ok(StepOutcome { state: next, rejected }),
            // an explicit step past the stability limit shows up as a broken
            // reality or admissibility condition in the next solve
            Err(Error::NonPositive(_) | Error::NaN(_) | Error::Reality(..) | Error::Inadmissible(..)) => {
                rejected.push(rejected_row(s, dt, f64::NAN))
            }
            Err(e) => return Err(e),
        }
        dt /= 2.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Cartan,
    Yamabe,
}

/// Driver options shared by both flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRun {
    pub kind: FlowKind,
    pub max_steps: u64,
    pub cartan: CartanFlowParams,
    pub yamabe: YamabeParams,
    /// Stop early once sup|Q| (Cartan) or the W spread (Yamabe) drops below this.
    pub stationary_tol: f64,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxSteps,
    FixedPoint,
}

/// Advance until `max_steps` accepted steps or a fixed point. Every attempted
/// step is reported to `on_row`; every accepted state to `on_accept`.
pub fn run_flow<F, G>(start: FlowState, run: &FlowRun, mut on_row: F, mut on_accept: G) -> Result<(FlowState, Termination)>
where
    F: FnMut(&Monitors) -> Result<()>,
    G: FnMut(&FlowState) -> Result<()>,
{
    let mut s = start;
    while s.accepted_steps < run.max_steps {
        let fixed = match run.kind {
            FlowKind::Cartan => s.monitors.sup_q < run.stationary_tol,
            FlowKind::Yamabe => {
                run.yamabe.normalized && (s.monitors.max_w - s.monitors.min_w).abs() < run.stationary_tol
            }
        };
        if fixed {
            return Ok((s, Termination::FixedPoint));
        }
        let out = match run.kind {
            FlowKind::Cartan => cartan_flow_step(&s, s.dt, &run.cartan)?,
            FlowKind::Yamabe => yamabe_flow_step(&s, s.dt, &run.yamabe)?,
        };
        for r in &out.rejected {
            on_row(r)?;
        }
        s = out.state;
        on_row(&s.monitors)?;
        on_accept(&s)?;
    }
    Ok((s, Termination::MaxSteps))
}

/// Settings of [`calibrate_pairing`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub manifold: SampleManifold,
    pub directions: usize,
    pub base_points: usize,
    /// sup-bound of the random base deformations.
    pub amplitude: f64,
    pub max_degree: u16,
    pub eps: f64,
    pub seed: u64,
    pub max_dispersion: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            manifold: SampleManifold::sphere(Backend::grid(16, 16, 16)).expect("valid grid"),
            directions: 10,
            base_points: 2,
            amplitude: 0.08,
            max_degree: 2,
            eps: 1e-3,
            seed: 7,
            max_dispersion: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingCalibration {
    /// Mean fitted constant.
    pub c: C64,
    /// max |c_k − c| / |c| over the samples.
    pub dispersion: f64,
    pub samples: Vec<C64>,
    /// Largest directional derivative of μ at E = 0.
    pub gradient_at_standard: f64,
    /// Observed order of the centered difference quotient.
    pub convergence_order: f64,
}

fn mu_at(u: &ScalarField, e: &ScalarField) -> Result<f64> {
    let cf = build_coframe(u, e)?;
    Ok(mu_pseudohermitian(&solve_ph(&cf)?, &cf)?.mu)
}

/// Centered difference (μ(E+hĖ) − μ(E−hĖ))/2h.
pub fn centered_difference(u: &ScalarField, e: &ScalarField, edot: &ScalarField, h: f64) -> Result<f64> {
    Ok((mu_at(u, &axpy(e, h, edot)?)? - mu_at(u, &axpy(e, -h, edot)?)?) / (2.0 * h))
}

/// Richardson-extrapolated directional derivative of μ.
pub fn first_variation_fd(u: &ScalarField, e: &ScalarField, edot: &ScalarField, h: f64) -> Result<f64> {
    let d1 = centered_difference(u, e, edot, h)?;
    let d2 = centered_difference(u, e, edot, h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// ∫ Q₁₁ Ė/(1−|E|²) θ∧dθ.
pub fn q_pairing(cf: &AdmissibleCoframe, q: &ScalarField, edot: &ScalarField) -> Result<C64> {
    let one = ScalarField::real_constant(cf.manifold(), 1.0);
    let weight = one.sub(&cf.e().norm_sqr())?;
    let density = q.mul(&edot.div(&weight)?)?;
    cf.coframe().integrate(&cf.theta_dtheta()?.mul_fn(&density)?)
}

/// Fit c in dμ(Ė) = Re(c ∫ Q₁₁ Ė/(1−|E|²) θ∧dθ) over random directions and
/// base points. Each sample uses the pair (Ė, iĖ) to recover c·Z.
pub fn calibrate_pairing(cfg: &CalibrationConfig) -> Result<PairingCalibration> {
    let m = cfg.manifold;
    let mut rng = sampling::rng(cfg.seed);
    let e_charge = -2 * m.z1_charge_shift();
    let u = ScalarField::real_constant(&m, 1.0);
    let i = C64::new(0.0, 1.0);
    let mut samples = Vec::new();
    let mut convergence_order = f64::NAN;
    for b in 0..cfg.base_points {
        let e = sampling::random_field(&mut rng, &m, e_charge, cfg.max_degree, cfg.amplitude);
        let cf = build_coframe(&u, &e)?;
        let q = cartan_tensor(&solve_ph(&cf)?)?;
        for k in 0..cfg.directions {
            let edot = sampling::random_field(&mut rng, &m, e_charge, cfg.max_degree, 1.0);
            let z = q_pairing(&cf, &q, &edot)?;
            let g = first_variation_fd(&u, &e, &edot, cfg.eps)?;
            let gi = first_variation_fd(&u, &e, &edot.scale(i), cfg.eps)?;
            samples.push(C64::new(g, -gi) / z);
            if b == 0 && k == 0 {
                let h = 16.0 * cfg.eps;
                let d: Vec<f64> = [h, h / 2.0, h / 4.0]
                    .iter()
                    .map(|&h| centered_difference(&u, &e, &edot, h))
                    .collect::<Result<_>>()?;
                convergence_order = ((d[0] - d[1]).abs() / (d[1] - d[2]).abs()).log2();
            }
        }
    }
    let c = samples.iter().sum::<C64>() / samples.len() as f64;
    let dispersion = samples.iter().map(|s| (s - c).norm()).fold(0.0, f64::max) / c.norm();
    let zero = ScalarField::from_poly_charged(&m, &crate::poly::Poly::zero(), e_charge);
    let mut gradient_at_standard: f64 = 0.0;
    for _ in 0..cfg.directions {
        let edot = sampling::random_field(&mut rng, &m, e_charge, cfg.max_degree, 1.0);
        gradient_at_standard = gradient_at_standard.max(first_variation_fd(&u, &zero, &edot, cfg.eps)?.abs());
    }
    if !(dispersion <= cfg.max_dispersion) {
        return Err(Error::CalibrationDispersion(dispersion));
    }
    Ok(PairingCalibration { c, dispersion, samples, gradient_at_standard, convergence_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Backend;

    fn poly_sphere() -> SampleManifold {
        SampleManifold::sphere(Backend::poly()).unwrap()
    }

    fn rossi(m: &SampleManifold, e: C64) -> FlowState {
        let u = ScalarField::real_constant(m, 1.0);
        FlowState::new(&u, &ScalarField::constant(m, e), 0.1).unwrap()
    }

    #[test]
    fn standard_structure_is_a_fixed_point() {
        let m = poly_sphere();
        let s = rossi(&m, C64::new(0.0, 0.0));
        let out = cartan_flow_step(&s, 0.1, &CartanFlowParams::default()).unwrap();
        assert!(out.rejected.is_empty());
        assert!(out.state.e().sup_distance(s.e()).unwrap() < 1e-12);
        let y = yamabe_flow_step(&s, 0.1, &YamabeParams { normalized: true, ..Default::default() }).unwrap();
        assert!(y.state.u().sup_distance(s.u()).unwrap() < 1e-12);
    }

    #[test]
    fn cartan_step_lowers_mu() {
        let m = poly_sphere();
        let s = rossi(&m, C64::new(0.1, -0.05));
        let out = cartan_flow_step(&s, s.dt, &CartanFlowParams::default()).unwrap();
        assert!(out.state.mu() < s.mu());
        assert!(out.state.monitors().sup_e < s.monitors().sup_e);
    }

    #[test]
    fn raw_yamabe_scales_constant_data() {
        let m = poly_sphere();
        let s = rossi(&m, C64::new(0.0, 0.0));
        let out = yamabe_flow_step(&s, 0.01, &YamabeParams::default()).unwrap();
        // W(uθ) = 2/u for constant u, so du/dt = 2.
        let want = 1.0 + 2.0 * 0.01;
        assert!((out.state.u().max_re() - want).abs() < 1e-10);
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let m = poly_sphere();
        let s = rossi(&m, C64::new(0.05, 0.02));
        let json = serde_json::to_string(&s.checkpoint()).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        let r = FlowState::from_checkpoint(&back).unwrap();
        assert_eq!(r.monitors(), s.monitors());
    }

    #[test]
    fn csv_row_has_every_column() {
        let m = poly_sphere();
        let row = rossi(&m, C64::new(0.0, 0.0)).monitors().csv_row();
        assert_eq!(row.split(',').count(), Monitors::CSV_HEADER.split(',').count());
    }
}
