use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::NoiseSection;
use crate::error::{AncError, Result};
use crate::lifting::NoiseSource;
use crate::lti::ContinuousStateSpace;

/// Phases of the sinusoid bank: the configured ones, or uniform draws on
/// `[0, 2π)` from the seed.
pub fn phases(noise: &NoiseSection, seed: u64) -> Vec<f64> {
    match &noise.phases {
        Some(p) => p.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..noise.amplitudes.len()).map(|_| rng.gen_range(0.0..TAU)).collect()
        }
    }
}

/// Autonomous realization of `Σ a_i e^{−σ_i t} sin(ω_i t + φ_i)`: one
/// rotation block `[[−σ, −ω], [ω, −σ]]` per component, started at
/// `[cos φ, sin φ]` and read out by `[0, a]`.
pub fn damped_sinusoid_bank(
    amplitudes: &[f64],
    frequencies: &[f64],
    decays: &[f64],
    phases: &[f64],
) -> Result<NoiseSource> {
    let k = amplitudes.len();
    if frequencies.len() != k || decays.len() != k || phases.len() != k {
        return Err(AncError::Dimension(
            "sinusoid bank parameters must have equal lengths".into(),
        ));
    }
    let n = 2 * k;
    let mut a = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(1, n);
    let mut x0 = DVector::zeros(n);
    for i in 0..k {
        let (s, w) = (decays[i], frequencies[i]);
        let o = 2 * i;
        a[(o, o)] = -s;
        a[(o, o + 1)] = -w;
        a[(o + 1, o)] = w;
        a[(o + 1, o + 1)] = -s;
        c[(0, o + 1)] = amplitudes[i];
        x0[o] = phases[i].cos();
        x0[o + 1] = phases[i].sin();
    }
    let generator = ContinuousStateSpace::new(a, DMatrix::zeros(n, 0), c, DMatrix::zeros(1, 0))?;
    Ok(NoiseSource::Autonomous {
        generator,
        initial: x0,
    })
}

/// Reads one sample per record from the first column; a non-numeric first
/// record is taken as a header.
pub fn read_waveform(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AncError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = rec.get(0).unwrap_or("");
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => {
                return Err(AncError::config(
                    "noise.waveform",
                    format!("non-finite sample on record {}", i + 1),
                ))
            }
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(AncError::config(
                    "noise.waveform",
                    format!("record {} is not a number: {field:?}", i + 1),
                ))
            }
        }
    }
    Ok(out)
}

pub fn noise_source(noise: &NoiseSection, seed: u64) -> Result<NoiseSource> {
    match &noise.waveform {
        Some(path) => Ok(NoiseSource::Sampled {
            samples: read_waveform(path)?,
        }),
        None => damped_sinusoid_bank(
            &noise.amplitudes,
            &noise.frequencies,
            &noise.decays,
            &phases(noise, seed),
        ),
    }
}
