//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use anc_core::lti::ContinuousStateSpace;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Matrix exponential by truncated Taylor series with scaling and squaring.
/// Deliberately a different algorithm from the library's Padé version.
pub fn taylor_expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let a = m / 2f64.powi(s);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &a / k as f64;
        sum += &term;
        if term.amax() < 1e-18 * sum.amax() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = &fc * WGK[7];
    let mut g = &fc * WG[3];
    for i in 0..7 {
        let pair = f(c - r * XGK[i]) + f(c + r * XGK[i]);
        k += &pair * WGK[i];
        if i % 2 == 1 {
            g += &pair * WG[i / 2];
        }
    }
    (k * r, g * r)
}

/// Composite 15-point Kronrod rule of a matrix-valued integrand over
/// `panels` equal pieces. Returns the estimate and the Kronrod-Gauss gap.
pub fn quad_panels<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64, panels: usize) -> (DMatrix<f64>, f64) {
    let w = (b - a) / panels as f64;
    let mut total: Option<DMatrix<f64>> = None;
    let mut gap = 0.0;
    for i in 0..panels {
        let (k, g) = kronrod(f, a + w * i as f64, a + w * (i + 1) as f64);
        gap += (&k - &g).amax();
        total = Some(match total {
            Some(t) => t + k,
            None => k,
        });
    }
    (total.expect("at least one panel"), gap)
}

/// Composite Kronrod with 16 panels; the integrands used here are smooth
/// on intervals of a few periods at most, where this is at rounding level.
pub fn quad<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64) -> DMatrix<f64> {
    quad_panels(f, a, b, 16).0
}

pub fn quad_scalar<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    quad(&|t| DMatrix::from_element(1, 1, f(t)), a, b)[(0, 0)]
}

/// Classical RK4 for `ζ' = A ζ + B v` with constant `v`, augmented with the
/// running integral `q' = C ζ`. Returns `(ζ, q)` after `steps` steps of `dt`.
pub fn rk4_held(
    sys: &ContinuousStateSpace,
    zeta: &DVector<f64>,
    q: f64,
    v: f64,
    dt: f64,
    steps: usize,
) -> (DVector<f64>, f64) {
    let a = sys.a();
    let b = sys.b().column(0).into_owned();
    let c = sys.c().row(0).transpose();
    let f = |z: &DVector<f64>| -> (DVector<f64>, f64) { (a * z + &b * v, c.dot(z)) };
    let mut z = zeta.clone();
    let mut q = q;
    for _ in 0..steps {
        let (k1, l1) = f(&z);
        let (k2, l2) = f(&(&z + &k1 * (0.5 * dt)));
        let (k3, l3) = f(&(&z + &k2 * (0.5 * dt)));
        let (k4, l4) = f(&(&z + &k3 * dt));
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        q += (l1 + 2.0 * l2 + 2.0 * l3 + l4) * (dt / 6.0);
    }
    (z, q)
}

/// Random stable SISO plant with `D = 0`: real poles and lightly damped
/// pairs, mixed by a well-conditioned similarity transform.
pub fn random_stable_siso(rng: &mut ChaCha8Rng, nu: usize) -> ContinuousStateSpace {
    let mut a = DMatrix::zeros(nu, nu);
    let mut i = 0;
    while i < nu {
        if i + 1 < nu && rng.gen_bool(0.6) {
            let s = rng.gen_range(0.05..1.0);
            let w = rng.gen_range(0.2..5.0);
            a[(i, i)] = -s;
            a[(i, i + 1)] = w;
            a[(i + 1, i)] = -w;
            a[(i + 1, i + 1)] = -s;
            i += 2;
        } else {
            a[(i, i)] = -rng.gen_range(0.1..3.0);
            i += 1;
        }
    }
    let t = DMatrix::identity(nu, nu) + DMatrix::from_fn(nu, nu, |_, _| rng.gen_range(-0.15..0.15));
    let t_inv = t.clone().try_inverse().expect("near-identity is invertible");
    let a = &t * a * t_inv;
    let b = DMatrix::from_fn(nu, 1, |_, _| rng.gen_range(-1.0..1.0));
    let c = DMatrix::from_fn(1, nu, |_, _| rng.gen_range(-1.0..1.0));
    ContinuousStateSpace::new(a, b, c, DMatrix::zeros(1, 1)).unwrap()
}

/// Secondary path of the reference experiment with damping 0.1.
pub fn reference_secondary() -> ContinuousStateSpace {
    ContinuousStateSpace::from_second_order_bank(&[0.05; 4], &[0.1; 4], &[1.0, 2.0, 3.0, 4.0], &[1.1]).unwrap()
}

pub fn rel_err(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    (got - want).amax() / want.amax().max(1e-300)
}

/// Damped sinusoid `a e^{−σt} sin(ωt + φ)` and its antiderivative-free
/// integral over `[t0, t1]` in closed form.
#[derive(Debug, Clone, Copy)]
pub struct DampedSine {
    pub amp: f64,
    pub decay: f64,
    pub freq: f64,
    pub phase: f64,
}

impl DampedSine {
    pub fn random(rng: &mut ChaCha8Rng, freq: std::ops::Range<f64>) -> Self {
        Self {
            amp: rng.gen_range(0.5..1.5),
            decay: rng.gen_range(0.02..0.1),
            freq: rng.gen_range(freq),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.amp * (-self.decay * t).exp() * (self.freq * t + self.phase).sin()
    }

    /// `∫_{t0}^{t1}` of the causal signal.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        let (t0, t1) = (t0.max(0.0), t1.max(0.0));
        // Im of ∫ e^{(−σ + jω)t + jφ} dt
        let z = num_complex::Complex64::new(-self.decay, self.freq);
        let prim = |t: f64| ((z * t).exp() * num_complex::Complex64::from_polar(1.0, self.phase) / z).im;
        self.amp * (prim(t1) - prim(t0))
    }
}

/// Wiener problem built from simulated traces: `x_d` is a decaying random
/// sequence, `u = F H_h x_d` enters through its lifted blocks and `d` is a
/// sum of damped sinusoids sampled on the fast grid.
pub struct TraceProblem {
    pub problem: anc_core::adaptive::WienerProblem,
    pub x_d: Vec<f64>,
    pub u: anc_core::lifting::BlockSeries,
    pub d: anc_core::lifting::BlockSeries,
}

pub fn trace_problem(
    rng: &mut ChaCha8Rng,
    f: &ContinuousStateSpace,
    h: f64,
    l: usize,
    n_taps: usize,
    steps: usize,
) -> TraceProblem {
    use anc_core::lifting::{discretize_lifted, BlockSeries};
    let lift = discretize_lifted(f, h, l).unwrap();
    let x_d: Vec<f64> = (0..steps)
        .map(|n| rng.gen_range(-1.0..1.0) * (-0.02 * n as f64 * h).exp())
        .collect();
    let u = lift.filter(&x_d, steps);
    let tones: Vec<DampedSine> = (0..3).map(|_| DampedSine::random(rng, 0.3..5.0)).collect();
    let sampler = lift.sampler();
    let d_values: Vec<f64> = (0..steps * l)
        .map(|i| {
            let t = sampler.instant(i / l, i % l);
            tones.iter().map(|s| s.value(t)).sum()
        })
        .collect();
    let d = BlockSeries::new(sampler, d_values).unwrap();
    let problem = anc_core::adaptive::build_wiener(&u, &d, n_taps, steps as f64 * h).unwrap();
    TraceProblem { problem, x_d, u, d }
}

/// `J(α) = Δ Σ (d_j − w̄_j)²` with `w̄` the block average of
/// `w = Σ_k α_k u(t − kh)`, evaluated straight from the traces.
pub fn cost_from_traces(tp: &TraceProblem, alpha: &[f64]) -> f64 {
    let l = tp.u.ratio();
    let dt = tp.u.sampler().fast_period();
    let mut acc = 0.0;
    for n in 0..tp.u.steps() {
        let d = tp.d.block(n as isize).unwrap();
        for j in 0..l {
            let mut w = 0.0;
            for (k, a) in alpha.iter().enumerate() {
                if let Some(u) = tp.u.block(n as isize - k as isize) {
                    w += a * u[j] / dt;
                }
            }
            acc += (d[j] - w).powi(2);
        }
    }
    acc * dt
}
