use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every stage of a run.
///
/// All of them are written into reports and certificates so that a
/// certificate can be re-verified without knowing the flags of the run that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative primal/dual gap at which the norm program stops.
    pub tol_gap: f64,
    /// Slack allowed on the LMI and on the sign constraints.
    pub tol_feas: f64,
    /// Negative eigenvalue mass tolerated when a point is tagged PSD.
    pub tol_psd: f64,
    /// A point is inside a conitope iff its gauge is at most `1 + tol_member`.
    pub tol_member: f64,
    /// Minimum eigenvalue of the vertex sum required to call a conitope valid.
    pub tol_interior: f64,
    /// Main loops stop once `B <= 1 + tol_b`.
    pub tol_b: f64,
    /// Invariance slack used by certificate verification; must be `>= tol_b`.
    pub tol_cert: f64,
    /// Relative modulus gap under which two eigenvalues count as tied.
    pub tol_eig_tie: f64,
    /// Relative eigen-residual bound `|Mv - lv| <= tol_eig_res * |M|_2`.
    pub tol_eig_res: f64,
    /// Relative threshold for rank decisions in subspace detection.
    pub tol_rank: f64,
    /// Newton iteration cap of the interior point solver.
    pub max_ip_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_gap: 1e-9,
            tol_feas: 1e-9,
            tol_psd: 1e-10,
            tol_member: 1e-8,
            tol_interior: 1e-10,
            tol_b: 1e-8,
            tol_cert: 1e-7,
            tol_eig_tie: 1e-8,
            tol_eig_res: 1e-9,
            tol_rank: 1e-9,
            max_ip_iters: 200,
        }
    }
}
