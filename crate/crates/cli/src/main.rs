use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crgeom::cartan::{check_residuals, solve_cartan, transgression_mu};
use crgeom::config::{BackendKind, RunConfig};
use crgeom::flows::{self, Checkpoint, FlowKind, FlowRun, FlowState, Monitors, Termination};
use crgeom::invariants::{mu_pseudohermitian, rigidity_certificate_tol};
use crgeom::monopole;
use crgeom::pseudohermitian::{build_coframe_tol, cartan_tensor, is_spherical, solve_ph_with};
use crgeom::verify::{self, Check, SUITES};
use crgeom::Error;

#[derive(Parser)]
#[command(name = "crgeom", version, about = "Pseudohermitian invariants, Cartan and CR Yamabe flows on S³ and lens spaces")]
struct Cli {
    /// JSON run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Grid size as N1xN2xN3 (η, ξ₁, ξ₂).
    #[arg(long, global = true, value_parser = parse_resolution)]
    resolution: Option<[usize; 3]>,
    /// Output directory (default `out`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Poly,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    Cartan,
    Yamabe,
}

#[derive(Subcommand)]
enum Command {
    /// W, torsion, Cartan tensor, both routes to μ and the rigidity certificate.
    Invariants,
    /// Integrate a flow, writing a CSV time series and checkpoints.
    Flow {
        #[arg(value_enum)]
        which: FlowArg,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Residuals of the monopole equations for the configured fields.
    MonopoleResidual,
    /// Run one verification suite, or all of them.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

fn parse_resolution(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.len() != 3 {
        return Err(format!("expected N1xN2xN3, got '{s}'"));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("bad grid size '{p}'"))?;
    }
    Ok(out)
}

/// Process outcome with the documented exit codes.
enum Failure {
    Config(String),
    Numerical(String),
    Stall(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Stall(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Stall(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_)
            | Error::InvalidManifold(_)
            | Error::ResolutionTooLow { .. }
            | Error::NonInvariant { .. }
            | Error::Json(_) => Failure::Config(msg),
            Error::DtUnderflow { .. } => Failure::Stall(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Numerical(format!("{}: {e}", path.display()))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(b) = cli.backend {
        cfg.backend.kind = match b {
            BackendArg::Poly => BackendKind::Poly,
            BackendArg::Grid => BackendKind::Grid,
        };
    }
    if let Some(r) = cli.resolution {
        cfg.backend.resolution = r;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.sample_manifold()?;
    Ok(cfg)
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Numerical(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_err(&cfg.out_dir, e))?;
    Ok(cfg.out_dir.clone())
}

fn emit(cfg: &RunConfig, name: &str, v: &Value) -> Result<(), Failure> {
    let dir = out_dir(cfg)?;
    write_json(&dir.join(name), v)?;
    println!("{}", serde_json::to_string_pretty(v).map_err(|e| Failure::Numerical(e.to_string()))?);
    Ok(())
}

fn cmd_invariants(cfg: &RunConfig) -> Result<(), Failure> {
    let tol = &cfg.tolerances;
    let (u, e) = cfg.structure()?;
    let cf = build_coframe_tol(&u, &e, tol.solver)?;
    let ph = solve_ph_with(&cf, cfg.signs(), tol.solver)?;
    let q = cartan_tensor(&ph)?;
    let mu = mu_pseudohermitian(&ph, &cf)?;
    let pkg = solve_cartan(&cf, &ph)?;
    check_residuals(&pkg.residuals, tol.structure_equations)?;
    let tr = transgression_mu(&pkg)?;
    let cert = rigidity_certificate_tol(&ph, tol.torsion_free)?;

    let coframe = cf.coframe();
    let tdt = cf.theta_dtheta()?;
    let vol = coframe.integrate(&tdt)?.re;
    let w = ph.w();
    let mean_w = coframe.integrate(&tdt.mul_fn(w)?)?.re / vol;
    let agreement = (tr.mu_trace - mu.mu).abs() / mu.mu.abs().max(f64::MIN_POSITIVE);
    let v = json!({
        "manifold": cfg.manifold,
        "backend": cf.manifold().backend,
        "w": { "min": w.min_re(), "max": w.max_re(), "mean": mean_w, "std_dev": w.std_dev()? },
        "torsion": { "sup_a11": ph.a11().sup_norm() },
        "sup_q": q.sup_norm(),
        "spherical": is_spherical(&q, tol.spherical),
        "mu_ph": mu,
        "mu_cartan": tr,
        "mu_relative_difference": agreement,
        "sup_trace_pi_omega": pkg.trace_pi_omega()?,
        "rigidity": cert,
    });
    emit(cfg, "invariants.json", &v)?;
    if agreement > tol.mu_cross {
        return Err(Failure::Numerical(format!("the two routes to mu differ by {agreement:.3e} (relative)")));
    }
    Ok(())
}

fn flow_name(which: FlowArg) -> &'static str {
    match which {
        FlowArg::Cartan => "cartan",
        FlowArg::Yamabe => "yamabe",
    }
}

fn cmd_flow(cfg: &RunConfig, which: FlowArg, restart: Option<&Path>) -> Result<(), Failure> {
    let f = &cfg.flow;
    let name = flow_name(which);
    let run = FlowRun {
        kind: match which {
            FlowArg::Cartan => FlowKind::Cartan,
            FlowArg::Yamabe => FlowKind::Yamabe,
        },
        max_steps: f.max_steps,
        cartan: flows::CartanFlowParams { mu_slack: f.mu_slack, e_margin: f.e_margin, min_dt: f.min_dt, ..Default::default() },
        yamabe: flows::YamabeParams { normalized: f.normalized, min_dt: f.min_dt },
        stationary_tol: f.stationary_tol,
    };
    let start = match restart {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            let c: Checkpoint = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}:{}:{}: {e}", p.display(), e.line(), e.column())))?;
            FlowState::from_checkpoint(&c)?
        }
        None => {
            let (u, e) = cfg.structure()?;
            FlowState::new(&u, &e, f.dt0)?
        }
    };

    let dir = out_dir(cfg)?;
    let ck_dir = dir.join("checkpoints");
    fs::create_dir_all(&ck_dir).map_err(|e| io_err(&ck_dir, e))?;
    let csv_path = dir.join(format!("flow_{name}.csv"));
    let mut csv = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    writeln!(csv, "{}", Monitors::CSV_HEADER).map_err(|e| io_err(&csv_path, e))?;
    let mut row = |m: &Monitors| -> crgeom::Result<()> { writeln!(csv, "{}", m.csv_row()).map_err(Error::from) };
    if restart.is_none() {
        row(&start.monitors())?;
    }

    let mut written = Vec::new();
    let every = f.checkpoint_every;
    let result = flows::run_flow(start, &run, &mut row, |s| {
        if every > 0 && s.accepted_steps % every == 0 {
            let p = ck_dir.join(format!("{name}_{:06}.json", s.accepted_steps));
            let text = serde_json::to_string(&s.checkpoint())?;
            fs::write(&p, text)?;
            written.push(p);
        }
        Ok(())
    });
    let (state, term) = result?;
    let final_path = dir.join(format!("{name}_final.json"));
    fs::write(&final_path, serde_json::to_string(&state.checkpoint()).map_err(Error::from)?)
        .map_err(|e| io_err(&final_path, e))?;

    let m = state.monitors();
    let v = json!({
        "flow": name,
        "termination": match term { Termination::MaxSteps => "max_steps", Termination::FixedPoint => "fixed_point" },
        "accepted_steps": state.accepted_steps,
        "t": state.t,
        "dt": state.dt,
        "final": m,
        "csv": csv_path,
        "checkpoints": written,
        "final_checkpoint": final_path,
    });
    emit(cfg, &format!("flow_{name}.json"), &v)
}

fn cmd_monopole(cfg: &RunConfig) -> Result<(), Failure> {
    let tol = &cfg.tolerances;
    let (u, e) = cfg.structure()?;
    let cf = build_coframe_tol(&u, &e, tol.solver)?;
    let ph = solve_ph_with(&cf, cfg.signs(), tol.solver)?;
    let mf = cfg.monopole_fields()?;
    let rep = monopole::residuals(&ph, &mf)?.report(&ph)?;
    let obs = monopole::obstruction_report(&ph, tol.torsion_free)?;
    emit(cfg, "monopole_residual.json", &json!({ "residuals": rep, "obstruction": obs }))
}

fn cmd_verify(cfg: &RunConfig, suite: &str) -> Result<(), Failure> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(Failure::Config(format!("unknown suite '{suite}' (expected all or one of {})", SUITES.join(", "))));
    };
    let mut checks: Vec<Check> = Vec::new();
    let mut errors = Vec::new();
    for name in names {
        match verify::run_suite(name, cfg) {
            Ok(c) => checks.extend(c),
            Err(e) => errors.push(json!({ "suite": name, "error": e.to_string() })),
        }
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let v = json!({
        "passed": passed,
        "failed": checks.len() - passed,
        "errors": errors,
        "checks": checks,
    });
    emit(cfg, "verify.json", &v)?;
    if let Some(e) = errors.first() {
        return Err(Failure::Numerical(format!("suite {} did not complete: {}", e["suite"], e["error"])));
    }
    if let Some(c) = checks.iter().find(|c| !c.pass) {
        return Err(Failure::Numerical(format!(
            "{}: {} (measured {:.3e}, tolerance {:.1e})",
            c.suite, c.name, c.measured, c.tol
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Invariants => cmd_invariants(&cfg),
        Command::Flow { which, restart } => cmd_flow(&cfg, *which, restart.as_deref()),
        Command::MonopoleResidual => cmd_monopole(&cfg),
        Command::Verify { suite } => cmd_verify(&cfg, suite),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("crgeom: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
