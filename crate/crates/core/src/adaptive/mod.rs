//! Filter design layers: the Wiener solution, steepest descent on the
//! continuous-time cost, and the causal sampled-data filtered-x update.

mod conditions;
mod lms;
mod wiener;

pub use conditions::{check_lms_conditions, LmsConditionReport};
pub use lms::{sdfx_lms_step, AdaptiveState, ConventionalFxLms};
pub use wiener::{build_wiener, gradient, sd_run, wiener_solve, SteepestDescent, WienerProblem};

use crate::error::{AncError, Result};

/// FIR filter `K(z) = Σ α_k z^{-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(AncError::InvalidArgument("FIR filter needs at least one tap".into()));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(AncError::InvalidArgument("FIR tap is not finite".into()));
        }
        Ok(Self { taps })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// `Σ α_k x[n−k]` with `history[0] = x[n]`, `history[1] = x[n−1]`, ...
    pub fn apply(&self, history: &[f64]) -> f64 {
        self.taps.iter().zip(history).map(|(a, x)| a * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<FirFilter> for Vec<f64> {
    fn from(f: FirFilter) -> Self {
        f.taps
    }
}
