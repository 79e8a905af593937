//! Continuous-time LTI state-space models.
//!
//! A [`ContinuousStateSpace`] is the realization `(A, B, C, D)` of
//! `ẋ = A x + B u`, `y = C x + D u`. Models are immutable once built; the
//! composition operators return new models.

mod expm;
mod freq;

pub use expm::expm;
pub use freq::FrequencyEvaluator;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{AncError, Result};
use crate::tolerances::TOLERANCES;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousStateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl ContinuousStateSpace {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(AncError::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(AncError::Dimension(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(AncError::Dimension(format!(
                "C has {} columns, expected {n}",
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(AncError::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        let all = a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(AncError::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Single-input single-output model with no direct feedthrough.
    pub fn siso(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let c = c.transpose();
        let b = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        let c = DMatrix::from_row_slice(1, c.len(), c.as_slice());
        Self::new(a, b, c, DMatrix::zeros(1, 1))
    }

    /// Static gain `y = k u` (no states).
    pub fn gain(k: f64) -> Self {
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: DMatrix::from_element(1, 1, k),
        }
    }

    /// First-order lag `1 / (s + pole)`.
    pub fn first_order(pole: f64) -> Result<Self> {
        if !(pole > 0.0) || !pole.is_finite() {
            return Err(AncError::Unstable(format!(
                "first-order pole location {pole} must be positive"
            )));
        }
        Ok(Self {
            a: DMatrix::from_element(1, 1, -pole),
            b: DMatrix::from_element(1, 1, 1.0),
            c: DMatrix::from_element(1, 1, 1.0),
            d: DMatrix::zeros(1, 1),
        })
    }

    /// Resonant section `gain ω² / (s² + 2ζω s + ω²)` in controllable
    /// canonical form.
    pub fn resonant(gain: f64, damping: f64, frequency: f64) -> Result<Self> {
        if !(damping > 0.0) || !(frequency > 0.0) || !damping.is_finite() || !frequency.is_finite()
        {
            return Err(AncError::Unstable(format!(
                "resonant section needs damping > 0 and frequency > 0, got ζ={damping}, ω={frequency}"
            )));
        }
        if !gain.is_finite() {
            return Err(AncError::InvalidArgument("section gain is not finite".into()));
        }
        let w2 = frequency * frequency;
        Ok(Self {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w2, -2.0 * damping * frequency]),
            b: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::from_row_slice(1, 2, &[gain * w2, 0.0]),
            d: DMatrix::zeros(1, 1),
        })
    }

    /// `Π 1/(s+p_i) · Σ_k g_k ω_k² / (s² + 2ζ_k ω_k s + ω_k²)`.
    ///
    /// An empty resonant bank stands for the constant factor 1, so a
    /// single pole and no sections gives `1/(s+p)`.
    pub fn from_second_order_bank(
        gains: &[f64],
        dampings: &[f64],
        frequencies: &[f64],
        first_order_poles: &[f64],
    ) -> Result<Self> {
        if gains.len() != dampings.len() || gains.len() != frequencies.len() {
            return Err(AncError::Dimension(format!(
                "bank has {} gains, {} dampings and {} frequencies",
                gains.len(),
                dampings.len(),
                frequencies.len()
            )));
        }
        let mut bank: Option<Self> = None;
        for ((&g, &z), &w) in gains.iter().zip(dampings).zip(frequencies) {
            let section = Self::resonant(g, z, w)?;
            bank = Some(match bank {
                None => section,
                Some(acc) => parallel(&acc, &section)?,
            });
        }
        let mut sys: Option<Self> = None;
        for &p in first_order_poles {
            let lag = Self::first_order(p)?;
            sys = Some(match sys {
                None => lag,
                Some(acc) => series(&acc, &lag)?,
            });
        }
        let out = match (sys, bank) {
            (Some(lags), Some(bank)) => series(&lags, &bank)?,
            (Some(lags), None) => lags,
            (None, Some(bank)) => bank,
            (None, None) => {
                return Err(AncError::Improper(
                    "empty bank: no poles and no sections gives a static unit gain".into(),
                ))
            }
        };
        Ok(out)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }
    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|v| *v == 0.0)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        if self.state_dim() == 0 {
            return Vec::new();
        }
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect()
    }

    /// All poles strictly in the open left half plane.
    pub fn is_stable(&self) -> bool {
        self.poles()
            .iter()
            .all(|p| p.re < -TOLERANCES.stability_margin)
    }

    /// Checks the requirements on a plant placed in the noise path:
    /// SISO, stable and strictly proper.
    pub fn validate_plant(&self, name: &str) -> Result<()> {
        if !self.is_siso() {
            return Err(AncError::Dimension(format!(
                "{name} must be single-input single-output"
            )));
        }
        if !self.is_strictly_proper() {
            return Err(AncError::Improper(format!(
                "{name} has a direct feedthrough term"
            )));
        }
        if !self.is_stable() {
            return Err(AncError::Unstable(format!("{name} has a pole with Re ≥ 0")));
        }
        Ok(())
    }

    pub fn negate(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: -&self.c,
            d: -&self.d,
        }
    }

    /// `C (jωI − A)⁻¹ B + D`.
    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let n = self.state_dim();
        let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
        let d = to_c(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let resolvent = DMatrix::<Complex64>::from_diagonal_element(n, n, Complex64::new(0.0, omega))
            - to_c(&self.a);
        let x = resolvent.lu().solve(&to_c(&self.b)).ok_or_else(|| {
            AncError::InvalidArgument(format!("jωI − A is singular at ω = {omega}"))
        })?;
        Ok(to_c(&self.c) * x + d)
    }

    /// Scalar frequency response of a SISO model.
    pub fn freq_response_siso(&self, omega: f64) -> Result<Complex64> {
        if !self.is_siso() {
            return Err(AncError::Dimension("model is not SISO".into()));
        }
        Ok(self.freq_response(omega)?[(0, 0)])
    }

    /// Exponential and input/output integrals over `[0, t]`.
    pub fn vanloan(&self, t: f64) -> Result<VanLoanResult> {
        vanloan(self, t)
    }
}

/// `second ∘ first`: the output of `first` drives `second`.
pub fn series(first: &ContinuousStateSpace, second: &ContinuousStateSpace) -> Result<ContinuousStateSpace> {
    if first.outputs() != second.inputs() {
        return Err(AncError::Dimension(format!(
            "series: first has {} outputs, second has {} inputs",
            first.outputs(),
            second.inputs()
        )));
    }
    let (n1, n2) = (first.state_dim(), second.state_dim());
    let n = n1 + n2;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&first.a);
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(&second.b * &first.c));
    a.view_mut((n1, n1), (n2, n2)).copy_from(&second.a);

    let m = first.inputs();
    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&first.b);
    b.view_mut((n1, 0), (n2, m)).copy_from(&(&second.b * &first.d));

    let p = second.outputs();
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, n1)).copy_from(&(&second.d * &first.c));
    c.view_mut((0, n1), (p, n2)).copy_from(&second.c);

    let d = &second.d * &first.d;
    ContinuousStateSpace::new(a, b, c, d)
}

/// Sum of two models sharing the same input.
pub fn parallel(lhs: &ContinuousStateSpace, rhs: &ContinuousStateSpace) -> Result<ContinuousStateSpace> {
    if lhs.inputs() != rhs.inputs() || lhs.outputs() != rhs.outputs() {
        return Err(AncError::Dimension(format!(
            "parallel: {}x{} and {}x{} systems",
            lhs.outputs(),
            lhs.inputs(),
            rhs.outputs(),
            rhs.inputs()
        )));
    }
    let (n1, n2) = (lhs.state_dim(), rhs.state_dim());
    let n = n1 + n2;
    let (m, p) = (lhs.inputs(), lhs.outputs());
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(&lhs.a);
    a.view_mut((n1, n1), (n2, n2)).copy_from(&rhs.a);
    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&lhs.b);
    b.view_mut((n1, 0), (n2, m)).copy_from(&rhs.b);
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, n1)).copy_from(&lhs.c);
    c.view_mut((0, n1), (p, n2)).copy_from(&rhs.c);
    ContinuousStateSpace::new(a, b, c, &lhs.d + &rhs.d)
}

/// Blocks of `exp(M t)` for `M = [[0, C, 0], [0, A, B], [0, 0, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VanLoanResult {
    /// `e^{At}`
    pub phi: DMatrix<f64>,
    /// `∫₀ᵗ e^{Aτ} dτ B`
    pub gamma: DMatrix<f64>,
    /// `∫₀ᵗ ∫₀^θ C e^{Aτ} B dτ dθ`
    pub theta: DMatrix<f64>,
    /// `∫₀ᵗ C e^{Aθ} dθ`
    pub lambda: DMatrix<f64>,
}

pub fn vanloan(sys: &ContinuousStateSpace, t: f64) -> Result<VanLoanResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(AncError::InvalidArgument(format!(
            "integration time must be positive, got {t}"
        )));
    }
    let (n, m, p) = (sys.state_dim(), sys.inputs(), sys.outputs());
    let size = p + n + m;
    let mut big = DMatrix::zeros(size, size);
    big.view_mut((0, p), (p, n)).copy_from(&(&sys.c * t));
    big.view_mut((p, p), (n, n)).copy_from(&(&sys.a * t));
    big.view_mut((p, p + n), (n, m)).copy_from(&(&sys.b * t));
    let e = expm(&big)?;
    Ok(VanLoanResult {
        phi: e.view((p, p), (n, n)).into_owned(),
        gamma: e.view((p, p + n), (n, m)).into_owned(),
        theta: e.view((0, p + n), (p, m)).into_owned(),
        lambda: e.view((0, p), (p, n)).into_owned(),
    })
}

/// Exact zero-order-hold discretization over `dt`: `(e^{A dt}, ∫₀^{dt} e^{Aθ}B dθ)`.
pub fn zoh(sys: &ContinuousStateSpace, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let vl = vanloan(sys, dt)?;
    Ok((vl.phi, vl.gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag(p: f64) -> ContinuousStateSpace {
        ContinuousStateSpace::first_order(p).unwrap()
    }

    #[test]
    fn first_order_canonical_form() {
        let sys = ContinuousStateSpace::from_second_order_bank(&[], &[], &[], &[1.1]).unwrap();
        assert_eq!(sys.state_dim(), 1);
        assert_eq!(sys.a()[(0, 0)], -1.1);
        assert_eq!(sys.b()[(0, 0)], 1.0);
        assert_eq!(sys.c()[(0, 0)], 1.0);
    }

    #[test]
    fn zero_gain_bank_is_zero_system() {
        let sys = ContinuousStateSpace::from_second_order_bank(
            &[0.0, 0.0],
            &[0.1, 0.1],
            &[1.0, 2.0],
            &[1.1],
        )
        .unwrap();
        for w in [0.0, 0.5, 1.0, 2.0, 10.0] {
            assert_eq!(sys.freq_response_siso(w).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn rejects_unstable_sections() {
        assert!(matches!(
            ContinuousStateSpace::from_second_order_bank(&[1.0], &[0.1], &[1.0], &[-1.0]),
            Err(AncError::Unstable(_))
        ));
        assert!(matches!(
            ContinuousStateSpace::from_second_order_bank(&[1.0], &[0.0], &[1.0], &[1.0]),
            Err(AncError::Unstable(_))
        ));
        assert!(matches!(
            ContinuousStateSpace::from_second_order_bank(&[1.0], &[0.1], &[-2.0], &[1.0]),
            Err(AncError::Unstable(_))
        ));
        assert!(ContinuousStateSpace::from_second_order_bank(&[], &[], &[], &[]).is_err());
    }

    #[test]
    fn lag_dc_and_corner() {
        let sys = lag(1.0);
        assert!((sys.freq_response_siso(0.0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let mag = sys.freq_response_siso(1.0).unwrap().norm();
        assert!((mag - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn series_dc_gain() {
        let sys = series(&lag(1.0), &lag(2.0)).unwrap();
        assert!((sys.freq_response_siso(0.0).unwrap().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn series_with_identity_and_parallel_cancellation() {
        let g = ContinuousStateSpace::resonant(0.7, 0.2, 1.5).unwrap();
        let g = series(&lag(0.8), &g).unwrap();
        let ident = ContinuousStateSpace::gain(1.0);
        let gi = series(&g, &ident).unwrap();
        let zero = parallel(&g, &g.negate()).unwrap();
        for w in [0.0, 0.3, 1.0, 1.5, 3.0, 20.0] {
            let a = g.freq_response_siso(w).unwrap();
            assert!((gi.freq_response_siso(w).unwrap() - a).norm() < 1e-14);
            assert!(zero.freq_response_siso(w).unwrap().norm() <= 1e-12);
        }
    }

    #[test]
    fn composition_dimension_errors() {
        let two_out = ContinuousStateSpace::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        assert!(matches!(series(&two_out, &lag(1.0)), Err(AncError::Dimension(_))));
        assert!(matches!(parallel(&two_out, &lag(1.0)), Err(AncError::Dimension(_))));
    }

    #[test]
    fn constructor_checks_dimensions() {
        let bad = ContinuousStateSpace::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(bad, Err(AncError::Dimension(_))));
    }

    #[test]
    fn stability_flag_flips_with_pole_sign() {
        let sys = lag(2.0);
        assert!(sys.is_stable());
        let flipped = ContinuousStateSpace::new(
            -sys.a().clone(),
            sys.b().clone(),
            sys.c().clone(),
            sys.d().clone(),
        )
        .unwrap();
        assert!(!flipped.is_stable());
        assert!(flipped.validate_plant("F").is_err());
    }

    #[test]
    fn vanloan_integrator() {
        let sys = ContinuousStateSpace::new(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let v = vanloan(&sys, 1.0).unwrap();
        assert!((v.phi[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((v.gamma[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((v.lambda[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((v.theta[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vanloan_decay_closed_form() {
        let v = vanloan(&lag(1.0), 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((v.gamma[(0, 0)] - (1.0 - e1)).abs() < 1e-14);
        assert!((v.lambda[(0, 0)] - (1.0 - e1)).abs() < 1e-14);
        assert!((v.theta[(0, 0)] - e1).abs() < 1e-14);
    }

    #[test]
    fn vanloan_small_time_expansion() {
        let sys = series(&lag(1.3), &ContinuousStateSpace::resonant(1.0, 0.3, 2.0).unwrap()).unwrap();
        let t = 1e-8;
        let v = vanloan(&sys, t).unwrap();
        let first_order = sys.b() * t;
        for (got, want) in v.gamma.iter().zip(first_order.iter()) {
            assert!((got - want).abs() <= 1e-15 + 1e-7 * want.abs());
        }
    }

    #[test]
    fn vanloan_rejects_nonpositive_time() {
        assert!(vanloan(&lag(1.0), 0.0).is_err());
        assert!(vanloan(&lag(1.0), -1.0).is_err());
    }
}
