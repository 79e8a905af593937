//! Numerical thresholds shared by the library, the CLI harness and the tests.

/// Tolerance record. Every threshold the crate compares against lives here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest real part an eigenvalue may have for a plant to count as stable.
    pub stability_margin: f64,
    /// Condition number above which the Wiener-Hopf matrix is rejected.
    pub max_condition: f64,
    /// Allowed asymmetry of a Gram matrix.
    pub symmetry: f64,
    /// Relative residual accepted from the Wiener-Hopf solve.
    pub solve_residual: f64,
    /// |e| above which a closed-loop run is declared divergent.
    pub divergence_cutoff: f64,
    /// Relative change of the aliasing sum allowed when doubling its length.
    pub alias_tail: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    stability_margin: 0.0,
    max_condition: 1e12,
    symmetry: 1e-10,
    solve_residual: 1e-8,
    divergence_cutoff: 1e9,
    alias_tail: 1e-6,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOLERANCES
    }
}
