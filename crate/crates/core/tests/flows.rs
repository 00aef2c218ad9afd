use num_complex::Complex64 as C64;
use proptest::prelude::*;

use crgeom::flows::{
    cartan_flow_step, cartan_velocity, run_flow, yamabe_flow_step, yamabe_velocity, CartanFlowParams, Checkpoint, FlowKind,
    FlowRun, FlowState, Termination, YamabeParams,
};
use crgeom::field::ScalarField;
use crgeom::manifold::{Backend, SampleManifold};
use crgeom::poly::Poly;
use crgeom::Error;

fn poly_sphere() -> SampleManifold {
    SampleManifold::sphere(Backend::poly()).unwrap()
}

fn rossi_state(r: f64, phase: f64, dt: f64) -> FlowState {
    let m = poly_sphere();
    FlowState::new(&ScalarField::real_constant(&m, 1.0), &ScalarField::constant(&m, C64::from_polar(r, phase)), dt).unwrap()
}

fn cartan_run(max_steps: u64) -> FlowRun {
    FlowRun {
        kind: FlowKind::Cartan,
        max_steps,
        cartan: CartanFlowParams::default(),
        yamabe: YamabeParams::default(),
        stationary_tol: 1e-12,
    }
}

fn csv(start: FlowState, run: &FlowRun) -> (Vec<String>, FlowState) {
    let mut rows = Vec::new();
    let (end, _) = run_flow(
        start,
        run,
        |m| {
            rows.push(m.csv_row());
            Ok(())
        },
        |_| Ok(()),
    )
    .unwrap();
    (rows, end)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, max_shrink_iters: 16, ..ProptestConfig::default() })]

    #[test]
    fn cartan_flow_lowers_mu_and_shrinks_e(r in 0.02f64..0.2, phase in 0.0f64..std::f64::consts::TAU) {
        let p = CartanFlowParams::default();
        let mut s = rossi_state(r, phase, 0.01);
        let sup0 = s.monitors().sup_e;
        for _ in 0..10 {
            let next = cartan_flow_step(&s, s.dt, &p).unwrap().state;
            prop_assert!(next.mu() <= s.mu() + p.mu_slack);
            prop_assert!(next.monitors().sup_e < s.monitors().sup_e);
            s = next;
        }
        prop_assert!(s.monitors().sup_e < sup0);
    }

    #[test]
    fn constant_w_survives_raw_yamabe(r in 0.0f64..0.2, scale in 0.5f64..2.0) {
        let m = poly_sphere();
        let u = ScalarField::real_constant(&m, scale);
        let e = ScalarField::constant(&m, C64::from_polar(r, 0.4));
        let mut s = FlowState::new(&u, &e, 0.01).unwrap();
        for _ in 0..5 {
            s = yamabe_flow_step(&s, s.dt, &YamabeParams::default()).unwrap().state;
            prop_assert!(s.ph().w().std_dev().unwrap() < 1e-10);
        }
    }
}

#[test]
fn standard_structure_is_stationary() {
    let s = rossi_state(0.0, 0.0, 0.01);
    let c = CartanFlowParams::default().pairing;
    assert!(cartan_velocity(s.e(), s.q(), c).unwrap().sup_norm() < 1e-10);
    assert!(yamabe_velocity(s.coframe(), s.ph(), true).unwrap().sup_norm() < 1e-10);
    let (_, end) = csv(s, &cartan_run(5));
    assert_eq!(end.accepted_steps, 0);
}

#[test]
fn fixed_point_terminates_early() {
    let (rows, _) = csv(rossi_state(0.0, 0.0, 0.01), &cartan_run(5));
    assert!(rows.is_empty());
    let (end, why) = run_flow(rossi_state(0.0, 0.0, 0.01), &cartan_run(5), |_| Ok(()), |_| Ok(())).unwrap();
    assert_eq!(why, Termination::FixedPoint);
    assert_eq!(end.accepted_steps, 0);
}

#[test]
fn identical_runs_are_bit_identical() {
    let run = cartan_run(8);
    let (a, _) = csv(rossi_state(0.1, 0.7, 0.01), &run);
    let (b, _) = csv(rossi_state(0.1, 0.7, 0.01), &run);
    assert_eq!(a, b);
}

#[test]
fn checkpoint_restart_is_bit_compatible() {
    let (full, end) = csv(rossi_state(0.1, 2.0, 0.01), &cartan_run(8));
    let (head, mid) = csv(rossi_state(0.1, 2.0, 0.01), &cartan_run(4));
    let json = serde_json::to_string(&mid.checkpoint()).unwrap();
    let back: Checkpoint = serde_json::from_str(&json).unwrap();
    let (tail, end2) = csv(FlowState::from_checkpoint(&back).unwrap(), &cartan_run(8));
    assert_eq!([head, tail].concat(), full);
    assert_eq!(end.e().sample_values(), end2.e().sample_values());
}

#[test]
fn admissibility_margin_is_enforced() {
    let m = poly_sphere();
    let e = ScalarField::constant(&m, C64::new(1.2, 0.0));
    assert!(FlowState::new(&ScalarField::real_constant(&m, 1.0), &e, 0.01).is_err());
}

#[test]
fn stiff_grid_yamabe_never_returns_garbage() {
    // Past the explicit stability limit the stepper either halves its way
    // through or stops with a dt underflow; it must not hand back NaNs.
    let m = SampleManifold::sphere(Backend::grid(16, 16, 16)).unwrap();
    let u = ScalarField::from_poly(&m, &Poly::constant(C64::new(1.0, 0.0)).add(&Poly::z1().mul(&Poly::z1bar()).scale(C64::new(0.2, 0.0))));
    let mut s = FlowState::new(&u, &ScalarField::zero(&m), 0.05).unwrap();
    let p = YamabeParams { normalized: false, min_dt: 1e-5 };
    for _ in 0..20 {
        match yamabe_flow_step(&s, s.dt, &p) {
            Ok(out) => {
                assert!(out.state.u().sample_values().iter().all(|v| v.re.is_finite() && v.re > 0.0));
                s = out.state;
            }
            Err(Error::DtUnderflow { .. }) => return,
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
