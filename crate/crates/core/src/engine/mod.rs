//! The two JSR algorithms, the enumeration oracle and certificates.
//!
//! Both algorithms iterate in the lifted space with every operator divided
//! by `C^2`, `C` being the current lower bound in unlifted units. A step
//! computes the images `W` of the current vertices, the largest conitope
//! norm `B` among them, and the bound `Y = C * sqrt(B)`; `B <= 1 + tol_b`
//! closes the sandwich and the conitope becomes the certificate.

mod certificate;
mod run;
mod smp;
mod subspace;

use serde::{Deserialize, Serialize};

use crate::tol::Tolerances;

pub use certificate::{
    verify_certificate, Certificate, CertificateKind, Check, SplitCertificate, UpperSource, Verification, Violation,
};
pub use run::{algorithm1, algorithm2, upper_bound_from_conitope};
pub use smp::{
    brute_force_bounds, brute_force_cost, necklace_count, smp_search, smp_search_cached, smp_search_cost,
    subproduct_scan, subproduct_scan_cached, BruteForceBounds, SmpCandidate, SpectralCache,
};
pub use subspace::{detect_invariant_subspace, invariance_defect, split_along, SubspaceSplit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Longest word of the initial SMP search (Algorithm 1).
    pub max_smp_len: usize,
    /// Main-loop steps per run.
    pub max_iters: usize,
    /// Vertex cap; exceeding it ends the run with bounds only.
    pub max_vertices: usize,
    /// Restarts of Algorithm 1 before giving up on exactness.
    pub max_restarts: usize,
    /// Cap on enumerated products for searches and the classical estimate.
    pub product_budget: usize,
    /// Run the subproduct scan inside Algorithm 1 as well.
    pub scan_in_conitope_method: bool,
    /// Seed Algorithm 1 with every rotation of the candidate, not just
    /// the candidate itself.
    pub cyclic_seeds: bool,
    /// Word length of the classical norm estimate used as a fallback.
    pub classical_depth: usize,
    pub tol: Tolerances,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            max_smp_len: 4,
            max_iters: 100,
            max_vertices: 5000,
            max_restarts: 20,
            product_budget: 1_000_000,
            scan_in_conitope_method: true,
            cyclic_seeds: true,
            classical_depth: 8,
            tol: Tolerances::default(),
        }
    }
}

/// One main-loop step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Restart (Algorithm 1) or 0.
    pub restart: usize,
    pub step: usize,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub vertices: usize,
}

/// Sandwich state at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsState {
    pub lower: f64,
    pub upper: f64,
    /// Last `B`.
    pub b: f64,
    /// Main-loop steps of the final run.
    pub iteration: usize,
    pub vertex_count: usize,
    pub restarts: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub certificate: Certificate,
    pub state: BoundsState,
}

impl RunOutcome {
    pub fn is_exact(&self) -> bool {
        self.certificate.kind == CertificateKind::Exact
    }

    pub fn lower(&self) -> f64 {
        self.certificate.lower
    }

    pub fn upper(&self) -> f64 {
        self.certificate.upper
    }
}
