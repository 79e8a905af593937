//! Lifted discretization of a hold-driven continuous plant.
//!
//! A plant `F` driven through a zero-order hold of period `h` is an exact
//! discrete-time system when its output is viewed as a sequence of
//! functions on `[0, h)`. Splitting each period into `L` subintervals and
//! integrating the output over each one gives the finite-dimensional filter
//!
//! ```text
//! η[n+1] = A_h η[n] + B_h x[n]
//! U[n]   = C_h η[n] + D_h x[n]        (U[n] ∈ R^L)
//! ```
//!
//! where row `l` of `C_h`, `D_h` integrates over `[l h/L, (l+1) h/L)`.

mod hybrid;

pub use hybrid::{HybridLoop, HybridLoopState, HybridPlants, NoiseSource, StepOutput};

use nalgebra::{DMatrix, DVector};

use crate::error::{AncError, Result};
use crate::lti::{vanloan, ContinuousStateSpace};

/// Sampling grid: period `h` split into `l` equal subintervals. Sample
/// instants are `n h + j h / l`, `j = 0..l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastSampler {
    h: f64,
    l: usize,
}

impl FastSampler {
    pub fn new(h: f64, l: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(AncError::InvalidArgument(format!(
                "sampling period must be positive, got {h}"
            )));
        }
        if l == 0 {
            return Err(AncError::InvalidArgument(
                "fast-sampling ratio must be at least 1".into(),
            ));
        }
        Ok(Self { h, l })
    }

    pub fn period(&self) -> f64 {
        self.h
    }

    pub fn ratio(&self) -> usize {
        self.l
    }

    /// Fast sampling interval `h / L`.
    pub fn fast_period(&self) -> f64 {
        self.h / self.l as f64
    }

    pub fn instant(&self, n: usize, j: usize) -> f64 {
        n as f64 * self.h + j as f64 * self.fast_period()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDiscretization {
    pub ah: DMatrix<f64>,
    pub bh: DVector<f64>,
    pub ch: DMatrix<f64>,
    pub dh: DVector<f64>,
    sampler: FastSampler,
}

impl LiftedDiscretization {
    pub fn sampler(&self) -> FastSampler {
        self.sampler
    }

    pub fn period(&self) -> f64 {
        self.sampler.h
    }

    pub fn ratio(&self) -> usize {
        self.sampler.l
    }

    pub fn state_dim(&self) -> usize {
        self.ah.nrows()
    }

    /// One step of the `F_h` filter: returns `(η[n+1], U[n])`.
    pub fn fh_step(&self, eta: &DVector<f64>, x: f64) -> (DVector<f64>, DVector<f64>) {
        let next = &self.ah * eta + &self.bh * x;
        let blocks = &self.ch * eta + &self.dh * x;
        (next, blocks)
    }

    /// Runs the filter from rest over `x` and returns the block sequence
    /// `U[0..steps)`. Inputs past the end of `x` are zero.
    pub fn filter(&self, x: &[f64], steps: usize) -> BlockSeries {
        let mut eta = DVector::zeros(self.state_dim());
        let mut values = Vec::with_capacity(steps * self.ratio());
        for n in 0..steps {
            let xn = x.get(n).copied().unwrap_or(0.0);
            let (next, u) = self.fh_step(&eta, xn);
            values.extend(u.iter());
            eta = next;
        }
        BlockSeries {
            sampler: self.sampler,
            values,
        }
    }

    /// Impulse response blocks `G_0 = D_h`, `G_i = C_h A_h^{i-1} B_h`.
    pub fn markov_blocks(&self, count: usize) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.dh.clone());
        let mut state = self.bh.clone();
        for _ in 1..count {
            out.push(&self.ch * &state);
            state = &self.ah * state;
        }
        out
    }
}

/// Builds `A_h, B_h, C_h, D_h` for a SISO strictly proper plant.
///
/// Rows of `C_h` and `D_h` are differences of the cumulative integrals at
/// consecutive subinterval endpoints.
pub fn discretize_lifted(sys: &ContinuousStateSpace, h: f64, l: usize) -> Result<LiftedDiscretization> {
    let sampler = FastSampler::new(h, l)?;
    if !sys.is_siso() {
        return Err(AncError::Dimension(
            "lifted discretization needs a single-input single-output plant".into(),
        ));
    }
    if !sys.is_strictly_proper() {
        return Err(AncError::Improper(
            "lifted discretization needs D = 0".into(),
        ));
    }
    let nu = sys.state_dim();
    let mut ch = DMatrix::zeros(l, nu);
    let mut dh = DVector::zeros(l);
    let mut prev_lambda = DMatrix::zeros(1, nu);
    let mut prev_theta = 0.0;
    let mut full = None;
    for row in 0..l {
        let t = if row + 1 == l {
            h
        } else {
            (row + 1) as f64 * h / l as f64
        };
        let vl = vanloan(sys, t)?;
        ch.row_mut(row).copy_from(&(&vl.lambda - &prev_lambda));
        dh[row] = vl.theta[(0, 0)] - prev_theta;
        prev_lambda = vl.lambda.clone();
        prev_theta = vl.theta[(0, 0)];
        if row + 1 == l {
            full = Some(vl);
        }
    }
    let full = full.expect("l >= 1");
    Ok(LiftedDiscretization {
        ah: full.phi,
        bh: full.gamma.column(0).into_owned(),
        ch,
        dh,
        sampler,
    })
}

/// Signal stored as consecutive blocks of `L` values, one block per period.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSeries {
    sampler: FastSampler,
    values: Vec<f64>,
}

impl BlockSeries {
    pub fn new(sampler: FastSampler, values: Vec<f64>) -> Result<Self> {
        if values.len() % sampler.l != 0 {
            return Err(AncError::Dimension(format!(
                "{} values do not fill whole blocks of {}",
                values.len(),
                sampler.l
            )));
        }
        Ok(Self { sampler, values })
    }

    pub fn zeros(sampler: FastSampler, steps: usize) -> Self {
        Self {
            sampler,
            values: vec![0.0; steps * sampler.l],
        }
    }

    pub fn sampler(&self) -> FastSampler {
        self.sampler
    }

    pub fn ratio(&self) -> usize {
        self.sampler.l
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.sampler.l
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Block `n`, or `None` before the start or past the end (causal zero).
    pub fn block(&self, n: isize) -> Option<&[f64]> {
        if n < 0 {
            return None;
        }
        let l = self.sampler.l;
        let start = n as usize * l;
        self.values.get(start..start + l)
    }

    pub fn push_block(&mut self, block: &[f64]) -> Result<()> {
        if block.len() != self.sampler.l {
            return Err(AncError::Dimension(format!(
                "block of length {} pushed into series with L = {}",
                block.len(),
                self.sampler.l
            )));
        }
        self.values.extend_from_slice(block);
        Ok(())
    }

    /// Sums groups of `factor` adjacent entries, giving the series on the
    /// coarser grid `L / factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.sampler.l % factor != 0 {
            return Err(AncError::InvalidArgument(format!(
                "cannot coarsen L = {} by {factor}",
                self.sampler.l
            )));
        }
        let sampler = FastSampler::new(self.sampler.h, self.sampler.l / factor)?;
        let values = self
            .values
            .chunks(factor)
            .map(|c| c.iter().sum())
            .collect();
        Ok(Self { sampler, values })
    }

    /// Keeps every `factor`-th entry (left endpoints of the coarser grid).
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.sampler.l % factor != 0 {
            return Err(AncError::InvalidArgument(format!(
                "cannot subsample L = {} by {factor}",
                self.sampler.l
            )));
        }
        let sampler = FastSampler::new(self.sampler.h, self.sampler.l / factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Ok(Self { sampler, values })
    }
}

/// `sqrt(∫ e² dt)` over `[0, t_end)` with `e` held constant on each fast
/// subinterval, the same rule the blocked update uses.
pub fn l2_norm(samples: &[f64], dt: f64, t_end: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(AncError::InvalidArgument("empty trace".into()));
    }
    if !(dt > 0.0) {
        return Err(AncError::InvalidArgument(format!(
            "sample spacing must be positive, got {dt}"
        )));
    }
    let count = ((t_end / dt) + 1e-9).floor().max(0.0) as usize;
    let count = count.min(samples.len());
    let energy: f64 = samples[..count].iter().map(|v| v * v).sum::<f64>() * dt;
    Ok(energy.sqrt())
}
