//! Exact simulation of the sampled-data noise-control loop.
//!
//! The noise `x` drives the primary path `P` to give the disturbance `d`.
//! The digital filter output `y_d` is held over each period and drives the
//! secondary path `F` to give `w`; the residual is `e = d − w`. All
//! continuous states are propagated by matrix exponentials over the fast
//! interval `h / L`, so the fast samples are exact.

use nalgebra::{DMatrix, DVector};

use super::{discretize_lifted, FastSampler, LiftedDiscretization};
use crate::error::{AncError, Result};
use crate::lti::{expm, zoh, ContinuousStateSpace};

/// Primary and secondary paths of the loop.
#[derive(Debug, Clone)]
pub struct HybridPlants {
    pub primary: ContinuousStateSpace,
    pub secondary: ContinuousStateSpace,
}

impl HybridPlants {
    pub fn new(primary: ContinuousStateSpace, secondary: ContinuousStateSpace) -> Result<Self> {
        primary.validate_plant("primary path P")?;
        secondary.validate_plant("secondary path F")?;
        Ok(Self { primary, secondary })
    }
}

/// Where the noise `x(t)` comes from.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    /// `x(t) = C e^{At} x0`, with no inputs.
    Autonomous {
        generator: ContinuousStateSpace,
        initial: DVector<f64>,
    },
    /// Samples on the fast grid, held constant over each fast interval;
    /// zero past the end.
    Sampled { samples: Vec<f64> },
}

impl NoiseSource {
    pub fn silent() -> Self {
        NoiseSource::Sampled {
            samples: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            NoiseSource::Autonomous { generator, initial } => {
                if generator.inputs() != 0 || generator.outputs() != 1 {
                    return Err(AncError::Dimension(
                        "noise generator must have no inputs and one output".into(),
                    ));
                }
                if initial.len() != generator.state_dim() {
                    return Err(AncError::Dimension(format!(
                        "generator initial state has length {}, expected {}",
                        initial.len(),
                        generator.state_dim()
                    )));
                }
                Ok(())
            }
            NoiseSource::Sampled { samples } => {
                if samples.iter().any(|v| !v.is_finite()) {
                    return Err(AncError::InvalidArgument("non-finite noise sample".into()));
                }
                Ok(())
            }
        }
    }
}

/// Continuous states of the loop at `t = n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridLoopState {
    pub zeta_p: DVector<f64>,
    pub zeta_f: DVector<f64>,
    pub gen_state: DVector<f64>,
    /// Copy of the secondary path driven by the held noise samples; its
    /// output is the filtered reference `u = F H_h x_d`.
    pub zeta_u: DVector<f64>,
    /// State of the `F_h` block filter.
    pub eta: DVector<f64>,
    pub n: usize,
}

/// Signals produced over one period `[n h, (n+1) h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub n: usize,
    pub x_d: f64,
    pub y_d: f64,
    /// `e(n h + j h / L)`, `j = 0..L`.
    pub e_block: Vec<f64>,
    /// `U[n]`: integrals of `u` over the fast subintervals.
    pub u_block: Vec<f64>,
    pub x_block: Vec<f64>,
    pub d_block: Vec<f64>,
    pub w_block: Vec<f64>,
    /// Point samples of `u` at the fast instants.
    pub u_samples: Vec<f64>,
}

enum NoiseProp {
    /// Joint autonomous system `[x_g; ζ_P]`.
    Joint {
        step: DMatrix<f64>,
        gen_out: DMatrix<f64>,
    },
    Held {
        phi_p: DMatrix<f64>,
        gamma_p: DVector<f64>,
        samples: Vec<f64>,
    },
}

pub struct HybridLoop {
    sampler: FastSampler,
    plants: HybridPlants,
    lift: LiftedDiscretization,
    noise: NoiseProp,
    phi_f: DMatrix<f64>,
    gamma_f: DVector<f64>,
    state: HybridLoopState,
    xd_history: Vec<f64>,
}

impl HybridLoop {
    pub fn new(plants: HybridPlants, source: NoiseSource, h: f64, l: usize) -> Result<Self> {
        let sampler = FastSampler::new(h, l)?;
        source.validate()?;
        let dt = sampler.fast_period();
        let lift = discretize_lifted(&plants.secondary, h, l)?;
        let (phi_f, gamma_f) = zoh(&plants.secondary, dt)?;
        let nu_p = plants.primary.state_dim();

        let (noise, gen_state) = match source {
            NoiseSource::Autonomous { generator, initial } => {
                let ng = generator.state_dim();
                let n = ng + nu_p;
                let mut joint = DMatrix::zeros(n, n);
                joint.view_mut((0, 0), (ng, ng)).copy_from(generator.a());
                joint
                    .view_mut((ng, 0), (nu_p, ng))
                    .copy_from(&(plants.primary.b() * generator.c()));
                joint
                    .view_mut((ng, ng), (nu_p, nu_p))
                    .copy_from(plants.primary.a());
                let step = expm(&(joint * dt))?;
                (
                    NoiseProp::Joint {
                        step,
                        gen_out: generator.c().clone(),
                    },
                    initial,
                )
            }
            NoiseSource::Sampled { samples } => {
                let (phi_p, gamma_p) = zoh(&plants.primary, dt)?;
                (
                    NoiseProp::Held {
                        phi_p,
                        gamma_p: gamma_p.column(0).into_owned(),
                        samples,
                    },
                    DVector::zeros(0),
                )
            }
        };

        let nu_f = plants.secondary.state_dim();
        let state = HybridLoopState {
            zeta_p: DVector::zeros(nu_p),
            zeta_f: DVector::zeros(nu_f),
            gen_state,
            zeta_u: DVector::zeros(nu_f),
            eta: DVector::zeros(nu_f),
            n: 0,
        };
        Ok(Self {
            sampler,
            plants,
            lift,
            noise,
            phi_f: phi_f.clone(),
            gamma_f: gamma_f.column(0).into_owned(),
            state,
            xd_history: Vec::new(),
        })
    }

    pub fn sampler(&self) -> FastSampler {
        self.sampler
    }

    pub fn state(&self) -> &HybridLoopState {
        &self.state
    }

    pub fn lift(&self) -> &LiftedDiscretization {
        &self.lift
    }

    pub fn plants(&self) -> &HybridPlants {
        &self.plants
    }

    fn noise_now(&self, fast_index: usize) -> f64 {
        match &self.noise {
            NoiseProp::Joint { gen_out, .. } => (gen_out * &self.state.gen_state)[(0, 0)],
            NoiseProp::Held { samples, .. } => samples.get(fast_index).copied().unwrap_or(0.0),
        }
    }

    /// Advances one sampling period with the FIR taps `taps` applied to the
    /// sampled noise (zero prehistory).
    pub fn step(&mut self, taps: &[f64]) -> Result<StepOutput> {
        if taps.is_empty() {
            return Err(AncError::Dimension("FIR filter needs at least one tap".into()));
        }
        let l = self.sampler.ratio();
        let n = self.state.n;
        let x_d = self.noise_now(n * l);
        self.xd_history.push(x_d);
        let y_d: f64 = taps
            .iter()
            .zip(self.xd_history.iter().rev())
            .map(|(a, x)| a * x)
            .sum();

        let (eta_next, u_block) = self.lift.fh_step(&self.state.eta, x_d);
        self.state.eta = eta_next;

        let c_p = self.plants.primary.c();
        let c_f = self.plants.secondary.c();
        let mut out = StepOutput {
            n,
            x_d,
            y_d,
            e_block: Vec::with_capacity(l),
            u_block: u_block.iter().copied().collect(),
            x_block: Vec::with_capacity(l),
            d_block: Vec::with_capacity(l),
            w_block: Vec::with_capacity(l),
            u_samples: Vec::with_capacity(l),
        };
        for j in 0..l {
            let fast_index = n * l + j;
            let x = self.noise_now(fast_index);
            let d = (c_p * &self.state.zeta_p)[(0, 0)];
            let w = (c_f * &self.state.zeta_f)[(0, 0)];
            let u = (c_f * &self.state.zeta_u)[(0, 0)];
            out.x_block.push(x);
            out.d_block.push(d);
            out.w_block.push(w);
            out.e_block.push(d - w);
            out.u_samples.push(u);

            match &self.noise {
                NoiseProp::Joint { step, .. } => {
                    let ng = self.state.gen_state.len();
                    let mut joint = DVector::zeros(ng + self.state.zeta_p.len());
                    joint.rows_mut(0, ng).copy_from(&self.state.gen_state);
                    joint.rows_mut(ng, self.state.zeta_p.len()).copy_from(&self.state.zeta_p);
                    let next = step * joint;
                    self.state.gen_state = next.rows(0, ng).into_owned();
                    self.state.zeta_p = next.rows(ng, self.state.zeta_p.len()).into_owned();
                }
                NoiseProp::Held { phi_p, gamma_p, .. } => {
                    self.state.zeta_p = phi_p * &self.state.zeta_p + gamma_p * x;
                }
            }
            self.state.zeta_f = &self.phi_f * &self.state.zeta_f + &self.gamma_f * y_d;
            self.state.zeta_u = &self.phi_f * &self.state.zeta_u + &self.gamma_f * x_d;
        }
        self.state.n += 1;
        Ok(out)
    }
}
