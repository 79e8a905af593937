use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::FirFilter;
use crate::error::{AncError, Result};
use crate::lifting::BlockSeries;
use crate::tolerances::TOLERANCES;

/// Normal equations of the continuous-time cost over `[0, T]`:
/// `J(α) = J_d − 2 αᵀβ + αᵀΦα`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerProblem {
    pub phi: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub horizon: f64,
    /// `∫ d² dt` under the same quadrature.
    pub d_energy: f64,
}

/// `R[k, j] = U[n−k]_j`, zero before the start of the record.
pub(crate) fn regressor(u: &BlockSeries, n: usize, n_taps: usize) -> DMatrix<f64> {
    let l = u.ratio();
    let mut r = DMatrix::zeros(n_taps, l);
    for k in 0..n_taps {
        if let Some(block) = u.block(n as isize - k as isize) {
            for (j, v) in block.iter().enumerate() {
                r[(k, j)] = *v;
            }
        }
    }
    r
}

/// Gram increment of period `n`: `(1/Δ) Σ_j r_j r_jᵀ`, where `r_j / Δ` is
/// the mean of `[u(t), u(t−h), …]` over fast subinterval `j`.
pub(crate) fn gram_increment(u: &BlockSeries, n: usize, n_taps: usize) -> DMatrix<f64> {
    let r = regressor(u, n, n_taps);
    let dt = u.sampler().fast_period();
    (&r * r.transpose()) / dt
}

fn steps_in_horizon(h: f64, horizon: f64) -> Result<usize> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(AncError::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let ratio = horizon / h;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(AncError::InvalidArgument(format!(
            "horizon {horizon} is not a multiple of the period {h}"
        )));
    }
    Ok(steps as usize)
}

/// Assembles `Φ` and `β` from the block integrals `U[n]` of the filtered
/// reference and the fast samples of the disturbance `d`.
///
/// `u` enters through its subinterval integrals, `d` is held at the left
/// endpoint of each subinterval. `Φ` is a sum of Gram matrices, hence
/// symmetric positive semidefinite.
pub fn build_wiener(
    u: &BlockSeries,
    d: &BlockSeries,
    n_taps: usize,
    horizon: f64,
) -> Result<WienerProblem> {
    if n_taps == 0 {
        return Err(AncError::InvalidArgument("need at least one tap".into()));
    }
    if u.sampler() != d.sampler() {
        return Err(AncError::Dimension(
            "filtered reference and disturbance are on different grids".into(),
        ));
    }
    let sampler = u.sampler();
    let steps = steps_in_horizon(sampler.period(), horizon)?;
    let dt = sampler.fast_period();

    let mut phi = DMatrix::zeros(n_taps, n_taps);
    let mut beta = DVector::zeros(n_taps);
    let mut d_energy = 0.0;
    for n in 0..steps {
        phi += gram_increment(u, n, n_taps);
        if let Some(dn) = d.block(n as isize) {
            let dn = DVector::from_column_slice(dn);
            beta += regressor(u, n, n_taps) * &dn;
            d_energy += dn.norm_squared() * dt;
        }
    }
    // Gram sums are symmetric up to rounding.
    let phi = (&phi + phi.transpose()) * 0.5;
    Ok(WienerProblem {
        phi,
        beta,
        horizon,
        d_energy,
    })
}

impl WienerProblem {
    pub fn taps(&self) -> usize {
        self.beta.len()
    }

    pub fn cost(&self, alpha: &[f64]) -> Result<f64> {
        let a = self.check_len(alpha)?;
        Ok(self.d_energy - 2.0 * a.dot(&self.beta) + a.dot(&(&self.phi * &a)))
    }

    fn check_len(&self, alpha: &[f64]) -> Result<DVector<f64>> {
        if alpha.len() != self.taps() {
            return Err(AncError::Dimension(format!(
                "{} taps given for a problem with {}",
                alpha.len(),
                self.taps()
            )));
        }
        Ok(DVector::from_column_slice(alpha))
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(self.phi.clone()).eigenvalues
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `∇J = 2 (Φα − β)`.
pub fn gradient(problem: &WienerProblem, alpha: &[f64]) -> Result<DVector<f64>> {
    let a = problem.check_len(alpha)?;
    Ok((&problem.phi * a - &problem.beta) * 2.0)
}

/// Solves `Φ α = β`. Fails when `Φ` is singular or its condition number
/// exceeds the configured limit.
pub fn wiener_solve(problem: &WienerProblem) -> Result<FirFilter> {
    let eig = SymmetricEigen::new(problem.phi.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(lmax > 0.0) || !(condition <= TOLERANCES.max_condition) {
        return Err(AncError::Singular { condition });
    }
    let chol = problem
        .phi
        .clone()
        .cholesky()
        .ok_or(AncError::Singular { condition })?;
    let mut alpha = chol.solve(&problem.beta);
    // one step of iterative refinement
    let residual = &problem.beta - &problem.phi * &alpha;
    alpha += chol.solve(&residual);

    let residual = (&problem.phi * &alpha - &problem.beta).norm();
    if residual > TOLERANCES.solve_residual * problem.beta.norm().max(f64::MIN_POSITIVE) {
        return Err(AncError::Singular { condition });
    }
    FirFilter::new(alpha.iter().copied().collect())
}

/// Iterates `α[n+1] = α[n] + μ (β − Φ α[n])`, yielding `α[0], α[1], …`.
#[derive(Debug, Clone)]
pub struct SteepestDescent<'a> {
    problem: &'a WienerProblem,
    mu: f64,
    alpha: DVector<f64>,
}

impl<'a> SteepestDescent<'a> {
    pub fn new(problem: &'a WienerProblem, alpha0: &[f64], mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(AncError::InvalidArgument(format!(
                "step size must be non-negative, got {mu}"
            )));
        }
        let alpha = problem.check_len(alpha0)?;
        Ok(Self { problem, mu, alpha })
    }

    pub fn current(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn advance(&mut self) {
        // (I − μΦ) α + μβ
        let contracted = &self.alpha - (&self.problem.phi * &self.alpha) * self.mu;
        self.alpha = contracted + &self.problem.beta * self.mu;
    }
}

impl Iterator for SteepestDescent<'_> {
    type Item = DVector<f64>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.alpha.clone();
        self.advance();
        Some(out)
    }
}

/// `α[0..=n_steps]` of the steepest descent iteration. Divergence for
/// large `μ` shows up as growing iterates, not as an error.
pub fn sd_run(
    problem: &WienerProblem,
    alpha0: &[f64],
    mu: f64,
    n_steps: usize,
) -> Result<Vec<FirFilter>> {
    let mut sd = SteepestDescent::new(problem, alpha0, mu)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    for _ in 0..=n_steps {
        // diverged iterates may overflow to inf; keep them as they are
        out.push(FirFilter {
            taps: sd.current().iter().copied().collect(),
        });
        sd.advance();
    }
    Ok(out)
}
