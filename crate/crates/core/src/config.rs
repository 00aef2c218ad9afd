//! Run configuration: manifold, backend, structure, flow parameters and
//! every tolerance used by the verification suites.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::conventions::SignBits;
use crate::error::{Error, Result};
use crate::exterior::FormField;
use crate::field::{FieldSnapshot, MonomialTerm, ScalarField};
use crate::manifold::{Backend, ManifoldKind, SampleManifold};
use crate::poly::Poly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Poly,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSpec {
    pub kind: BackendKind,
    /// (n_eta, n_xi1, n_xi2) for the grid.
    pub resolution: [usize; 3],
    pub series_order: u32,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec { kind: BackendKind::Poly, resolution: [64, 64, 32], series_order: 6 }
    }
}

impl BackendSpec {
    pub fn backend(&self) -> Backend {
        match self.kind {
            BackendKind::Poly => Backend::PolynomialExact { series_order: self.series_order },
            BackendKind::Grid => {
                let [a, b, c] = self.resolution;
                Backend::grid(a, b, c)
            }
        }
    }
}

/// A scalar field given inline or by a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant { constant: [f64; 2] },
    Terms { terms: Vec<MonomialTerm> },
    Snapshot { snapshot: PathBuf },
}

impl FieldSpec {
    pub fn real(c: f64) -> FieldSpec {
        FieldSpec::Constant { constant: [c, 0.0] }
    }

    /// Build the field on `m` with the given lens charge. Monomials of
    /// another charge are rejected rather than silently dropped.
    pub fn build(&self, m: &SampleManifold, charge: i64, base: &Path) -> Result<ScalarField> {
        match self {
            FieldSpec::Constant { constant } => {
                let p = Poly::constant(C64::new(constant[0], constant[1]));
                from_poly_checked(m, &p, charge)
            }
            FieldSpec::Terms { terms } => {
                let p = Poly::from_terms(terms.iter().map(|t| ([t.a, t.b, t.c, t.d], C64::new(t.re, t.im))));
                from_poly_checked(m, &p, charge)
            }
            FieldSpec::Snapshot { snapshot } => {
                let path = base.join(snapshot);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let s: FieldSnapshot = serde_json::from_str(&text).map_err(|e| anchored(&path.display().to_string(), &e))?;
                let f = ScalarField::from_snapshot(&s)?;
                if f.manifold() != m {
                    let f = f.resample(m)?;
                    return Ok(f);
                }
                Ok(f)
            }
        }
    }
}

fn from_poly_checked(m: &SampleManifold, p: &Poly, charge: i64) -> Result<ScalarField> {
    let want = m.reduce_charge(charge);
    if p.terms().any(|(e, c)| c.norm() > 0.0 && m.monomial_charge(*e) != want) {
        return Err(Error::NonInvariant { charge: want, p: m.order() });
    }
    Ok(ScalarField::from_poly_charged(m, p, charge))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureSpec {
    /// Conformal factor, real and positive.
    pub u: FieldSpec,
    /// Deformation tensor.
    pub e: FieldSpec,
}

impl Default for StructureSpec {
    fn default() -> Self {
        StructureSpec { u: FieldSpec::real(1.0), e: FieldSpec::real(0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub dt0: f64,
    pub max_steps: u64,
    pub mu_slack: f64,
    /// Write a checkpoint every this many accepted steps (0 disables).
    pub checkpoint_every: u64,
    pub e_margin: f64,
    pub min_dt: f64,
    /// Yamabe only: subtract the mean of W.
    pub normalized: bool,
    /// Stop once the flow's right-hand side is this small.
    pub stationary_tol: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt0: 0.01,
            max_steps: 200,
            mu_slack: 1e-9,
            checkpoint_every: 50,
            e_margin: 0.05,
            min_dt: 1e-12,
            normalized: false,
            stationary_tol: 1e-12,
        }
    }
}

/// Every threshold used by a verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solver: f64,
    pub spherical: f64,
    pub frame: f64,
    pub standard_torsion: f64,
    pub standard_w_std: f64,
    pub standard_q: f64,
    pub transformation_law: f64,
    pub contact_independence: f64,
    pub mu_cross: f64,
    pub trace_pi_omega: f64,
    pub structure_equations: f64,
    pub cartan_q_match: f64,
    /// Relative to sup|Ω| on sampled backends.
    pub bianchi: f64,
    pub calibration_dispersion: f64,
    pub gradient_at_standard: f64,
    pub flow_e_decrease: f64,
    pub fixed_point: f64,
    pub yamabe_w_std: f64,
    /// Lower bound on the error ratio when dt is halved (4 for O(dt²)).
    pub taylor_ratio: f64,
    pub lens: f64,
    pub gauge: f64,
    pub zero_configuration: f64,
    pub adjoint: f64,
    pub rigidity: f64,
    pub torsion_free: f64,
    pub u2_invariance: f64,
    pub integration: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-6,
            spherical: 1e-8,
            frame: 1e-12,
            standard_torsion: 1e-10,
            standard_w_std: 1e-8,
            standard_q: 1e-8,
            transformation_law: 1e-6,
            contact_independence: 1e-5,
            mu_cross: 1e-4,
            trace_pi_omega: 1e-7,
            structure_equations: 1e-7,
            cartan_q_match: 1e-4,
            bianchi: 1e-3,
            calibration_dispersion: 0.01,
            gradient_at_standard: 1e-10,
            flow_e_decrease: 0.5,
            fixed_point: 1e-12,
            yamabe_w_std: 1e-6,
            taylor_ratio: 3.0,
            lens: 1e-8,
            gauge: 1e-8,
            zero_configuration: 1e-12,
            adjoint: 1e-6,
            rigidity: 1e-9,
            torsion_free: 1e-8,
            u2_invariance: 1e-8,
            integration: 1e-12,
        }
    }
}

/// Sizes of the randomized verification experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    /// Grid used where series expansions of non-constant factors would be
    /// too slow on the polynomial backend.
    pub grid_resolution: [usize; 3],
    pub law_samples: usize,
    pub contact_samples: usize,
    pub u_amplitude: f64,
    pub e_amplitude: f64,
    pub calibration_directions: usize,
    pub calibration_base_points: usize,
    pub calibration_eps: f64,
    pub flow_starts: usize,
    pub flow_steps: u64,
    pub flow_dt: f64,
    pub yamabe_steps: u64,
    pub yamabe_dt: f64,
    /// Step for the one-step Taylor check on a grid, inside the explicit
    /// stability limit of the sub-Laplacian.
    pub taylor_dt: f64,
    pub lens_orders: [(u32, i64); 3],
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            grid_resolution: [32, 32, 32],
            law_samples: 5,
            contact_samples: 5,
            u_amplitude: 0.3,
            e_amplitude: 0.1,
            calibration_directions: 10,
            calibration_base_points: 2,
            calibration_eps: 1e-3,
            flow_starts: 3,
            flow_steps: 200,
            flow_dt: 0.01,
            yamabe_steps: 100,
            yamabe_dt: 0.01,
            taylor_dt: 1e-3,
            lens_orders: [(2, 1), (3, 1), (5, 1)],
        }
    }
}

/// Candidate monopole fields; a = a₀θ + a₁θ¹ + conj(a₁)θ^1̄.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonopoleSpec {
    pub alpha: FieldSpec,
    pub beta1bar: FieldSpec,
    pub a0: FieldSpec,
    pub a1: FieldSpec,
}

impl Default for MonopoleSpec {
    fn default() -> Self {
        MonopoleSpec { alpha: FieldSpec::real(0.0), beta1bar: FieldSpec::real(0.0), a0: FieldSpec::real(0.0), a1: FieldSpec::real(0.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldKind,
    pub backend: BackendSpec,
    pub structure: StructureSpec,
    pub flow: FlowParams,
    pub monopole: MonopoleSpec,
    pub tolerances: Tolerances,
    pub suites: SuiteParams,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Override of the ledger sign bits (mutation testing).
    pub sign_bits: Option<SignBits>,
    /// Directory against which snapshot paths are resolved.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifold: ManifoldKind::Sphere,
            backend: BackendSpec::default(),
            structure: StructureSpec::default(),
            flow: FlowParams::default(),
            monopole: MonopoleSpec::default(),
            tolerances: Tolerances::default(),
            suites: SuiteParams::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            sign_bits: None,
            base_dir: PathBuf::from("."),
        }
    }
}

fn anchored(source: &str, e: &serde_json::Error) -> Error {
    Error::Config(format!("{source}:{}:{}: {e}", e.line(), e.column()))
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> usize {
    let pat = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&pat)).map_or(1, |i| i + 1)
}

impl RunConfig {
    /// Parse and validate a JSON config. Errors carry `source:line:column`.
    pub fn from_json(text: &str, source: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| anchored(source, &e))?;
        cfg.validate().map_err(|(key, msg)| Error::Config(format!("{source}:{}: {msg}", line_of(text, key))))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        SampleManifold::new(self.manifold, self.backend.backend()).map_err(|e| match self.manifold {
            ManifoldKind::Lens { .. } if !matches!(e, Error::ResolutionTooLow { .. }) => ("p", e.to_string()),
            _ => ("backend", e.to_string()),
        })?;
        let f = &self.flow;
        if !(f.dt0 > 0.0) || !(f.min_dt > 0.0) {
            return Err(("flow", "dt0 and min_dt must be positive".into()));
        }
        if !(0.0..1.0).contains(&f.e_margin) {
            return Err(("e_margin", "e_margin must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn sample_manifold(&self) -> Result<SampleManifold> {
        SampleManifold::new(self.manifold, self.backend.backend())
    }

    /// (u, E) of the configured structure.
    pub fn structure(&self) -> Result<(ScalarField, ScalarField)> {
        let m = self.sample_manifold()?;
        let u = self.structure.u.build(&m, 0, &self.base_dir)?;
        let e = self.structure.e.build(&m, -2 * m.z1_charge_shift(), &self.base_dir)?;
        Ok((u, e))
    }

    pub fn monopole_fields(&self) -> Result<crate::monopole::MonopoleFields> {
        let m = self.sample_manifold()?;
        let s = &self.monopole;
        let b = &self.base_dir;
        let a0 = s.a0.build(&m, 0, b)?.into_real(self.tolerances.solver)?;
        let a1 = s.a1.build(&m, m.z1_charge_shift(), b)?;
        Ok(crate::monopole::MonopoleFields {
            alpha: s.alpha.build(&m, 0, b)?,
            beta1bar: s.beta1bar.build(&m, 0, b)?,
            a: FormField::one_form([a0, a1.clone(), a1.conj()]),
        })
    }

    pub fn signs(&self) -> SignBits {
        self.sign_bits.unwrap_or(crate::conventions::Conventions::get().sign_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let c = RunConfig::from_json("{}", "cfg").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let text = "{\n  \"seed\": 3,\n  \"flow\": {\"dt0\": }\n}";
        let err = RunConfig::from_json(text, "cfg.json").unwrap_err().to_string();
        assert!(err.contains("cfg.json:3:"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json("{\n\"sed\": 1}", "c").unwrap_err().to_string();
        assert!(err.contains("c:2:"), "{err}");
    }

    #[test]
    fn non_coprime_lens_is_rejected_at_its_line() {
        let text = "{\n \"manifold\": {\"kind\": \"lens\",\n  \"p\": 4, \"q\": 2}\n}";
        let err = RunConfig::from_json(text, "c").unwrap_err().to_string();
        assert!(err.contains("c:3:"), "{err}");
    }

    #[test]
    fn charge_mismatch_is_an_error() {
        let text = r#"{"manifold": {"kind": "lens", "p": 3, "q": 1},
            "structure": {"e": {"terms": [{"a": 0, "b": 0, "c": 0, "d": 1, "re": 0.1, "im": 0.0}]}}}"#;
        let c = RunConfig::from_json(text, "c").unwrap();
        assert!(matches!(c.structure(), Err(Error::NonInvariant { .. })));
    }
}
