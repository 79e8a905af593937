use nalgebra::{DMatrix, SymmetricEigen};

use super::wiener::gram_increment;
use crate::error::{AncError, Result};
use crate::lifting::BlockSeries;

/// Checks of the three sufficient conditions for uniform exponential
/// stability of `α[n+1] = (I − μ Φ[n]) α[n]`, where `Φ[n]` is the blocked
/// Gram matrix of the filtered reference accumulated over `[0, n h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsConditionReport {
    pub mu: f64,
    pub steps: usize,
    /// `max_n ‖Φ[n]‖₂`
    pub gamma: f64,
    /// `max_n λ_max(Φ[n])`
    pub max_lambda: f64,
    /// `2 / max_lambda`, infinite when `Φ[n] ≡ 0`.
    pub mu_bound: f64,
    /// `max_n ‖μ (Φ[n] − Φ[n−1])‖₂`
    pub epsilon: f64,
    pub epsilon_threshold: f64,
    pub bounded: bool,
    pub step_size_ok: bool,
    pub slowly_varying: bool,
    /// `Φ[n]` vanishes identically; the step-size bound is vacuous.
    pub degenerate: bool,
    /// Smallest eigenvalue of any increment `Φ[n] − Φ[n−1]`.
    pub min_increment_eigenvalue: f64,
}

impl LmsConditionReport {
    pub fn all_pass(&self) -> bool {
        self.bounded && self.step_size_ok && self.slowly_varying
    }
}

fn spectral_norm_sym(m: &DMatrix<f64>) -> (f64, f64, f64) {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    (max.abs().max(min.abs()), max, min)
}

/// Evaluates the conditions on the blocks `U[n]` of a run.
pub fn check_lms_conditions(
    u: &BlockSeries,
    mu: f64,
    n_taps: usize,
    epsilon_threshold: f64,
) -> Result<LmsConditionReport> {
    if u.steps() == 0 {
        return Err(AncError::InvalidArgument("empty trace".into()));
    }
    if n_taps == 0 {
        return Err(AncError::InvalidArgument("need at least one tap".into()));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(AncError::InvalidArgument(format!(
            "step size must be positive, got {mu}"
        )));
    }
    let mut phi = DMatrix::zeros(n_taps, n_taps);
    let mut gamma = 0.0f64;
    let mut max_lambda = 0.0f64;
    let mut epsilon = 0.0f64;
    let mut min_inc = f64::INFINITY;
    for n in 0..u.steps() {
        let inc = gram_increment(u, n, n_taps);
        let (inc_norm, _, inc_min) = spectral_norm_sym(&inc);
        epsilon = epsilon.max(mu * inc_norm);
        min_inc = min_inc.min(inc_min);
        phi += inc;
        let (norm, lmax, _) = spectral_norm_sym(&phi);
        gamma = gamma.max(norm);
        max_lambda = max_lambda.max(lmax);
    }
    let degenerate = max_lambda <= 0.0;
    let mu_bound = if degenerate {
        f64::INFINITY
    } else {
        2.0 / max_lambda
    };
    Ok(LmsConditionReport {
        mu,
        steps: u.steps(),
        gamma,
        max_lambda,
        mu_bound,
        epsilon,
        epsilon_threshold,
        bounded: gamma.is_finite(),
        step_size_ok: mu < mu_bound,
        slowly_varying: epsilon <= epsilon_threshold,
        degenerate,
        min_increment_eigenvalue: min_inc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::FastSampler;

    #[test]
    fn zero_reference_is_degenerate_pass() {
        let u = BlockSeries::zeros(FastSampler::new(1.0, 4).unwrap(), 20);
        let r = check_lms_conditions(&u, 3.0, 4, 0.1).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert!(r.degenerate);
        assert!(r.all_pass());
    }

    #[test]
    fn huge_step_fails_condition_two() {
        let s = FastSampler::new(1.0, 2).unwrap();
        let mut vals = vec![0.0; 20];
        vals[0] = 0.5;
        vals[1] = 0.5;
        let u = BlockSeries::new(s, vals).unwrap();
        let r = check_lms_conditions(&u, 1e6, 3, f64::INFINITY).unwrap();
        assert!(!r.step_size_ok);
        assert!(r.bounded && r.slowly_varying);
    }

    #[test]
    fn empty_trace_rejected() {
        let u = BlockSeries::zeros(FastSampler::new(1.0, 4).unwrap(), 0);
        assert!(check_lms_conditions(&u, 0.1, 2, 0.1).is_err());
    }
}
