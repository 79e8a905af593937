//! Frequency-domain bound on the eigenvalues of the normal matrix.
//!
//! With `u = F H_h x_d` and `û` its Fourier transform, the aliased energy
//! spectrum
//!
//! ```text
//! S(jω) = (1/h) Σ_n |û(jω + 2nπj/h)|²,   ω ∈ (−π/h, π/h)
//! ```
//!
//! bounds every eigenvalue of `Φ` from above by `‖S‖∞`, and
//! `Φ_kl = (h/2π) ∫ S(jω) e^{jω(k−l)h} dω` over the Nyquist band. The
//! steepest-descent iteration converges for `0 < μ < 2 / ‖S‖∞`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::adaptive::WienerProblem;
use crate::error::{AncError, Result};
use crate::lti::{ContinuousStateSpace, FrequencyEvaluator};

/// Default number of points on the Nyquist band.
pub const DEFAULT_GRID: usize = 4096;
/// Default aliasing-sum half-width.
pub const DEFAULT_ALIAS: usize = 64;

/// `X_d(e^{jωh}) = Σ x_d[n] e^{−jωnh}`.
pub fn dtft(x_d: &[f64], h: f64, omega: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -omega * h);
    let mut z = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for x in x_d {
        acc += z * *x;
        z *= step;
    }
    acc
}

/// Zero-order hold response `(1 − e^{−jωh}) / (jω)`, equal to `h` at `ω = 0`.
pub fn zoh_response(h: f64, omega: f64) -> Complex64 {
    if omega == 0.0 {
        return Complex64::new(h, 0.0);
    }
    let jw = Complex64::new(0.0, omega);
    (Complex64::new(1.0, 0.0) - (-jw * h).exp()) / jw
}

/// `û(jω) = F(jω) H₀(jω) X_d(e^{jωh})` given the value of the input DTFT.
pub fn u_spectrum(
    f: &ContinuousStateSpace,
    xd_spectrum: Complex64,
    h: f64,
    omega: f64,
) -> Result<Complex64> {
    Ok(f.freq_response_siso(omega)? * zoh_response(h, omega) * xd_spectrum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBound {
    pub h: f64,
    /// Uniform grid `ω_i = −π/h + i 2π/(h G)`, `i = 0..G`.
    pub omega: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// Maximum of `s_grid`, a lower estimate of `‖S‖∞`.
    pub s_inf: f64,
    pub n_alias: usize,
    /// `2 / s_inf`, infinite for a vanishing spectrum.
    pub mu_max: f64,
    /// Relative change of `s_inf` when the aliasing sum is doubled.
    pub alias_change: f64,
}

fn alias_energy(f: &FrequencyEvaluator, h: f64, omega: f64, n_alias: usize) -> f64 {
    let shift = 2.0 * PI / h;
    let term = |n: i64| {
        let w = omega + n as f64 * shift;
        (f.eval(w) * zoh_response(h, w)).norm_sqr()
    };
    let mut acc = term(0);
    for n in 1..=n_alias as i64 {
        acc += term(n) + term(-n);
    }
    acc
}

fn grid(h: f64, size: usize) -> Vec<f64> {
    let step = 2.0 * PI / (h * size as f64);
    (0..size).map(|i| -PI / h + i as f64 * step).collect()
}

fn s_values(
    f: &FrequencyEvaluator,
    x_d: &[f64],
    h: f64,
    omega: &[f64],
    n_alias: usize,
) -> Vec<f64> {
    omega
        .par_iter()
        .map(|&w| dtft(x_d, h, w).norm_sqr() * alias_energy(f, h, w, n_alias) / h)
        .collect()
}

/// Samples `S(jω)` on a uniform grid of the Nyquist band.
///
/// `X_d` is periodic in `ω` with period `2π/h`, so it factors out of the
/// aliasing sum.
pub fn spectral_bound(
    f: &ContinuousStateSpace,
    x_d: &[f64],
    h: f64,
    grid_size: usize,
    n_alias: usize,
) -> Result<SpectralBound> {
    if !f.is_siso() {
        return Err(AncError::Dimension("spectral bound needs a SISO plant".into()));
    }
    if !f.is_strictly_proper() {
        return Err(AncError::Improper(
            "aliasing sum does not converge for a plant with direct feedthrough".into(),
        ));
    }
    if !(h > 0.0) || grid_size == 0 {
        return Err(AncError::InvalidArgument(
            "need h > 0 and a non-empty frequency grid".into(),
        ));
    }
    let eval = FrequencyEvaluator::new(f)?;
    let omega = grid(h, grid_size);
    let s_grid = s_values(&eval, x_d, h, &omega, n_alias);
    let s_inf = s_grid.iter().copied().fold(0.0, f64::max);

    // Doubling check at the maximizing frequency only: the tail is
    // monotone in n_alias at every ω.
    let alias_change = if s_inf > 0.0 {
        let i = s_grid
            .iter()
            .position(|v| *v == s_inf)
            .expect("max is an element");
        let doubled = s_values(&eval, x_d, h, &omega[i..=i], 2 * n_alias)[0];
        (doubled - s_inf).abs() / s_inf
    } else {
        0.0
    };
    Ok(SpectralBound {
        h,
        omega,
        s_grid,
        s_inf,
        n_alias,
        mu_max: if s_inf > 0.0 { 2.0 / s_inf } else { f64::INFINITY },
        alias_change,
    })
}

/// Comparison of `Φ` with its frequency-domain representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsevalReport {
    /// `(h/2π) ∫ S(jω) e^{jω(k−l)h} dω` on the grid.
    pub integral: DMatrix<f64>,
    /// `max |integral − Φ| / max |Φ|` (absolute when `Φ = 0`).
    pub max_rel_deviation: f64,
    /// Relative deviation of the `(0, 0)` entry.
    pub phi00_rel_deviation: f64,
}

/// Integrates the grid values of `S` against `e^{jω(k−l)h}`. The integrand
/// is `2π/h`-periodic, so the rectangle rule on the uniform grid is used.
pub fn parseval_check(problem: &WienerProblem, bound: &SpectralBound, h: f64) -> Result<ParsevalReport> {
    if (bound.h - h).abs() > 1e-12 * h.abs() {
        return Err(AncError::InvalidArgument(
            "spectral bound was computed for a different period".into(),
        ));
    }
    let n = problem.taps();
    let g = bound.s_grid.len() as f64;
    let mut integral = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let lag = (k as f64 - l as f64) * h;
            let sum: f64 = bound
                .omega
                .iter()
                .zip(&bound.s_grid)
                .map(|(w, s)| s * (w * lag).cos())
                .sum();
            integral[(k, l)] = sum / g;
        }
    }
    let scale = problem.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_dev = (&integral - &problem.phi)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let rel = |dev: f64| if scale > 0.0 { dev / scale } else { dev };
    let phi00 = problem.phi[(0, 0)];
    let dev00 = (integral[(0, 0)] - phi00).abs();
    Ok(ParsevalReport {
        max_rel_deviation: rel(max_dev),
        phi00_rel_deviation: if phi00.abs() > 0.0 { dev00 / phi00.abs() } else { dev00 },
        integral,
    })
}
