//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree selection follows the backward-error thresholds for the [m/m]
//! approximants, m in {3, 5, 7, 9, 13}. Matrices whose 1-norm exceeds the
//! degree-13 threshold are scaled by a power of two, exponentiated, and
//! squared back.

use nalgebra::DMatrix;

use crate::error::{AncError, Result};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `U` and `V` for a low-degree approximant: U = A Σ b_odd A^2k, V = Σ b_even A^2k.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut power = ident.clone();
    let mut u_inner = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for pair in b.chunks(2) {
        v += &power * pair[0];
        u_inner += &power * pair[1];
        power = &power * &a2;
    }
    (a * u_inner, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let u_hi = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_hi = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    (u, v)
}

/// Exponential of a square matrix.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(AncError::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(AncError::InvalidArgument("expm input is not finite".into()));
    }

    let norm = norm1(m);
    let (mut scaled, squarings) = (m.clone(), 0u32);
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(&scaled, &B3);
        (u, v, squarings)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(&scaled, &B5);
        (u, v, squarings)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(&scaled, &B7);
        (u, v, squarings)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(&scaled, &B9);
        (u, v, squarings)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as u32;
        scaled /= 2f64.powi(s as i32);
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };

    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| AncError::InvalidArgument("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}
