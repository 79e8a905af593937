use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::FirFilter;
use crate::error::{AncError, Result};
use crate::lifting::LiftedDiscretization;
use crate::lti::{expm, ContinuousStateSpace};

fn check_step_size(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(AncError::InvalidArgument(format!(
            "step size must be non-negative, got {mu}"
        )));
    }
    Ok(())
}

/// Running state of the sampled-data filtered-x update
///
/// ```text
/// α[n+1] = α[n] + μ δ[n]
/// δ[n+1] = δ[n] + [e[n]ᵀ U[n−k]]_k
/// ```
///
/// where `e[n]` holds the error at the `L` fast instants of period `n` and
/// `U[n]` comes from the `F_h` block filter driven by the sampled noise.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    taps: Vec<f64>,
    delta: DVector<f64>,
    eta: DVector<f64>,
    /// `U[n], U[n−1], …, U[n−N+1]`; zero before the start.
    u_hist: VecDeque<DVector<f64>>,
    xd_hist: VecDeque<f64>,
    n: usize,
}

impl AdaptiveState {
    pub fn new(lift: &LiftedDiscretization, alpha0: FirFilter) -> Self {
        let n_taps = alpha0.len();
        let l = lift.ratio();
        Self {
            taps: alpha0.into(),
            delta: DVector::zeros(n_taps),
            eta: DVector::zeros(lift.state_dim()),
            u_hist: (0..n_taps).map(|_| DVector::zeros(l)).collect(),
            xd_hist: (0..n_taps).map(|_| 0.0).collect(),
            n: 0,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn filter(&self) -> Result<FirFilter> {
        FirFilter::new(self.taps.clone())
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn eta(&self) -> &DVector<f64> {
        &self.eta
    }

    pub fn u_history(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.u_hist.iter()
    }

    pub fn xd_history(&self) -> impl Iterator<Item = &f64> {
        self.xd_hist.iter()
    }

    pub fn step_index(&self) -> usize {
        self.n
    }

    /// `α ← α + μ δ` with the direction accumulated so far.
    pub fn apply_update(&mut self, mu: f64) -> Result<()> {
        check_step_size(mu)?;
        for (a, d) in self.taps.iter_mut().zip(self.delta.iter()) {
            *a += mu * d;
        }
        Ok(())
    }

    /// Consumes the error block of the period just simulated and the noise
    /// sample taken at its start. Returns the increment added to `δ`.
    pub fn accumulate(
        &mut self,
        lift: &LiftedDiscretization,
        x_d: f64,
        e_block: &[f64],
    ) -> Result<DVector<f64>> {
        let l = lift.ratio();
        if e_block.len() != l {
            return Err(AncError::Dimension(format!(
                "error block has length {}, expected L = {l}",
                e_block.len()
            )));
        }
        if lift.state_dim() != self.eta.len() {
            return Err(AncError::Dimension(
                "lifted filter does not match the adaptive state".into(),
            ));
        }
        if self.u_hist.front().map(|u| u.len()) != Some(l) {
            return Err(AncError::Dimension(
                "block length changed between steps".into(),
            ));
        }
        let (eta_next, u_now) = lift.fh_step(&self.eta, x_d);
        self.u_hist.pop_back();
        self.u_hist.push_front(u_now);
        self.xd_hist.pop_back();
        self.xd_hist.push_front(x_d);

        let e = DVector::from_column_slice(e_block);
        let increment = DVector::from_iterator(
            self.taps.len(),
            self.u_hist.iter().map(|u| e.dot(u)),
        );
        self.delta += &increment;
        self.eta = eta_next;
        self.n += 1;
        Ok(increment)
    }
}

/// One full update for a period whose error block is already known:
/// taps first move along the accumulated direction, then the direction
/// takes in the new error block.
pub fn sdfx_lms_step(
    state: &mut AdaptiveState,
    lift: &LiftedDiscretization,
    mu: f64,
    e_block: &[f64],
    x_d: f64,
) -> Result<()> {
    state.apply_update(mu)?;
    state.accumulate(lift, x_d, e_block)?;
    Ok(())
}

/// Textbook discrete-time filtered-x LMS with a step-invariant model of the
/// secondary path and the error sampled once per period.
///
/// The filtered reference is `r[n] = v((n+1)h) − v(nh)` where
/// `v = (F/s) H_h x_d` is the running integral of the secondary-path
/// response; the model is the zero-order-hold discretization of `F(s)/s`.
/// The direction accumulates `e(nh) r[n−k]` with the same cumulative
/// structure as [`AdaptiveState`].
#[derive(Debug, Clone)]
pub struct ConventionalFxLms {
    taps: Vec<f64>,
    delta: Vec<f64>,
    ad: DMatrix<f64>,
    bd: DVector<f64>,
    state: DVector<f64>,
    r_hist: VecDeque<f64>,
}

impl ConventionalFxLms {
    pub fn new(secondary: &ContinuousStateSpace, h: f64, alpha0: FirFilter) -> Result<Self> {
        secondary.validate_plant("secondary path F")?;
        if !(h > 0.0) {
            return Err(AncError::InvalidArgument(format!(
                "sampling period must be positive, got {h}"
            )));
        }
        let nu = secondary.state_dim();
        // states [ζ; v], v' = Cζ, and one extra column for the held input
        let size = nu + 2;
        let mut m = DMatrix::zeros(size, size);
        m.view_mut((0, 0), (nu, nu)).copy_from(secondary.a());
        m.view_mut((nu, 0), (1, nu)).copy_from(secondary.c());
        m.view_mut((0, nu + 1), (nu, 1)).copy_from(secondary.b());
        let e = expm(&(m * h))?;
        let ad = e.view((0, 0), (nu + 1, nu + 1)).into_owned();
        let bd = e.view((0, nu + 1), (nu + 1, 1)).column(0).into_owned();
        let n_taps = alpha0.len();
        Ok(Self {
            taps: alpha0.into(),
            delta: vec![0.0; n_taps],
            ad,
            bd,
            state: DVector::zeros(nu + 1),
            r_hist: (0..n_taps).map(|_| 0.0).collect(),
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn apply_update(&mut self, mu: f64) -> Result<()> {
        check_step_size(mu)?;
        for (a, d) in self.taps.iter_mut().zip(&self.delta) {
            *a += mu * d;
        }
        Ok(())
    }

    /// Takes `x_d[n]` and `e(nh)`, returns the filtered reference `r[n]`.
    pub fn accumulate(&mut self, x_d: f64, e_sample: f64) -> f64 {
        let next = &self.ad * &self.state + &self.bd * x_d;
        let last = self.state.len() - 1;
        let r = next[last] - self.state[last];
        self.state = next;
        self.r_hist.pop_back();
        self.r_hist.push_front(r);
        for (d, r) in self.delta.iter_mut().zip(&self.r_hist) {
            *d += e_sample * r;
        }
        r
    }
}
