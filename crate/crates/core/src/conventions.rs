//! The checked-in convention ledger (`conventions.json`).

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const LEDGER: &str = include_str!("../conventions.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignBits {
    /// Sign s in `t_{,a} = X_a t − s·(n₁ − n₁̄)·ω(X_a)·t`.
    pub connection: i8,
    /// `A₁₁ = conj(A¹_1̄)` when set, `A₁₁ = A¹_1̄` otherwise.
    pub torsion_conjugate: bool,
}

impl SignBits {
    /// All four sign choices.
    pub fn all() -> [SignBits; 4] {
        [
            SignBits { connection: 1, torsion_conjugate: true },
            SignBits { connection: 1, torsion_conjugate: false },
            SignBits { connection: -1, torsion_conjugate: true },
            SignBits { connection: -1, torsion_conjugate: false },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanQ {
    pub relation: String,
    pub factor: f64,
}

/// Identification of the first variation of μ with the Q-pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub form: String,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub frame: serde_json::Value,
    pub orientation: String,
    pub c0: f64,
    pub c0_derivation: String,
    pub c0_derivation_sha256: String,
    pub mu0: f64,
    pub sign_bits: SignBits,
    pub cartan_q: CartanQ,
    pub laplacian: String,
    pub legs: String,
    pub twist_sign: i8,
    pub pairing: Pairing,
}

impl Conventions {
    pub fn get() -> &'static Conventions {
        static C: OnceLock<Conventions> = OnceLock::new();
        C.get_or_init(|| serde_json::from_str(LEDGER).expect("conventions.json is well-formed"))
    }

    pub fn raw() -> &'static str {
        LEDGER
    }

    /// SHA-256 (hex) of the recorded derivation of c₀.
    pub fn derivation_hash(&self) -> String {
        let digest = Sha256::digest(self.c0_derivation.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
