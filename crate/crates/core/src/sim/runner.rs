use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::SimConfig;
use super::generator::noise_source;
use crate::adaptive::{check_lms_conditions, AdaptiveState, FirFilter, LmsConditionReport};
use crate::error::{AncError, Result};
use crate::lifting::{discretize_lifted, BlockSeries, FastSampler, HybridLoop, HybridPlants, NoiseSource};
use crate::lti::ContinuousStateSpace;
use crate::tolerances::TOLERANCES;

/// Signals of one closed-loop run. Fast signals are on the simulation grid
/// `h / L`; `taps[n]` is the filter used during period `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub sampler: FastSampler,
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
    pub e: Vec<f64>,
    pub x_d: Vec<f64>,
    pub y_d: Vec<f64>,
    pub taps: Vec<Vec<f64>>,
    /// Filtered-reference blocks on the update grid of the algorithm.
    pub u_blocks: BlockSeries,
    /// Error samples the update consumed, on the same grid.
    pub e_blocks: BlockSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub label: String,
    pub mu: f64,
    /// Fast-sampling ratio of the update (1 for the conventional method).
    pub update_ratio: usize,
    pub steps: usize,
    /// Set when `|e|` passed the divergence cutoff; the run stops there.
    pub diverged: bool,
    /// `‖e‖₂` over `[0, T]`, `+inf` when diverged.
    pub e_norm: f64,
    /// Norms over the simulated part of the horizon.
    pub d_norm: f64,
    pub w_norm: f64,
    pub final_taps: Vec<f64>,
    /// `‖δ[n]‖` after each period.
    pub delta_norms: Vec<f64>,
    /// Absent for `μ = 0`.
    pub conditions: Option<LmsConditionReport>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub proposed: RunOutcome,
    pub conventional: RunOutcome,
    /// `‖e‖_proposed / ‖e‖_conventional`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub conventional: RunReport,
    pub proposed: RunReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableInterval {
    /// Largest scanned `μ` such that it and every smaller scanned `μ` keep
    /// `‖e‖₂` below the threshold; 0 if the smallest already fails.
    pub scanned: f64,
    /// Bisection estimate between `scanned` and the first failing `μ`.
    pub refined: f64,
    /// First failing scanned `μ`, if any.
    pub first_failure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub threshold: f64,
    /// Sorted by `μ`.
    pub rows: Vec<SweepRow>,
    pub conventional: StableInterval,
    pub proposed: StableInterval,
    /// `proposed.refined / conventional.refined`.
    pub interval_ratio: f64,
}

/// Plants, noise realization and grid shared by every run of a config.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: SimConfig,
    plants: HybridPlants,
    source: NoiseSource,
    /// `U[n]` over the whole horizon on the simulation grid. The filtered
    /// reference does not depend on the taps, so one pass serves all runs.
    reference: BlockSeries,
}

impl Experiment {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let plants = HybridPlants::new(config.primary()?, config.secondary()?)?;
        let source = noise_source(&config.noise, config.sim.seed)?;
        let lift = discretize_lifted(&plants.secondary, config.sim.h, config.sim.l)?;
        let mut probe = HybridLoop::new(plants.clone(), source.clone(), config.sim.h, config.sim.l)?;
        let x_d: Vec<f64> = (0..config.steps())
            .map(|_| probe.step(&[0.0]).map(|o| o.x_d))
            .collect::<Result<_>>()?;
        let reference = lift.filter(&x_d, x_d.len());
        Ok(Self {
            config,
            plants,
            source,
            reference,
        })
    }

    /// Filtered-reference blocks over the whole horizon, on the grid of
    /// an update with fast-sampling ratio `update_ratio`.
    pub fn reference_blocks(&self, update_ratio: usize) -> Result<BlockSeries> {
        let l = self.config.sim.l;
        if update_ratio == 0 || l % update_ratio != 0 {
            return Err(AncError::InvalidArgument(format!(
                "update ratio {update_ratio} does not divide the simulation ratio {l}"
            )));
        }
        self.reference.coarsen(l / update_ratio)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn plants(&self) -> &HybridPlants {
        &self.plants
    }

    pub fn source(&self) -> &NoiseSource {
        &self.source
    }

    fn alpha0(&self) -> Result<FirFilter> {
        match &self.config.sim.initial_taps {
            Some(t) => FirFilter::new(t.clone()),
            None => FirFilter::zeros(self.config.sim.n_taps),
        }
    }

    /// Closed loop with the sampled-data update at fast-sampling ratio
    /// `update_ratio`, which must divide the simulation ratio `sim.L`.
    /// Ratio 1 is the conventional discrete-time filtered-x LMS.
    pub fn run(&self, mu: f64, update_ratio: usize, label: &str) -> Result<RunOutcome> {
        let start = Instant::now();
        let cfg = &self.config.sim;
        let l = cfg.l;
        if update_ratio == 0 || l % update_ratio != 0 {
            return Err(AncError::InvalidArgument(format!(
                "update ratio {update_ratio} does not divide the simulation ratio {l}"
            )));
        }
        let stride = l / update_ratio;
        let steps = self.config.steps();
        let mut sim = HybridLoop::new(self.plants.clone(), self.source.clone(), cfg.h, l)?;
        let lift = discretize_lifted(&self.plants.secondary, cfg.h, update_ratio)?;
        let mut state = AdaptiveState::new(&lift, self.alpha0()?);

        let sampler = sim.sampler();
        let coarse = FastSampler::new(cfg.h, update_ratio)?;
        let cap = steps * l;
        let mut trace = RunTrace {
            sampler,
            x: Vec::with_capacity(cap),
            d: Vec::with_capacity(cap),
            w: Vec::with_capacity(cap),
            e: Vec::with_capacity(cap),
            x_d: Vec::with_capacity(steps),
            y_d: Vec::with_capacity(steps),
            taps: Vec::with_capacity(steps),
            u_blocks: BlockSeries::zeros(coarse, 0),
            e_blocks: BlockSeries::zeros(coarse, 0),
        };
        let mut delta_norms = Vec::with_capacity(steps);
        let mut diverged = false;
        let mut u_fine = BlockSeries::zeros(sampler, 0);

        for _ in 0..steps {
            state.apply_update(mu)?;
            let out = sim.step(state.taps())?;
            trace.taps.push(state.taps().to_vec());
            trace.x_d.push(out.x_d);
            trace.y_d.push(out.y_d);
            trace.x.extend_from_slice(&out.x_block);
            trace.d.extend_from_slice(&out.d_block);
            trace.w.extend_from_slice(&out.w_block);
            trace.e.extend_from_slice(&out.e_block);
            u_fine.push_block(&out.u_block)?;

            if out
                .e_block
                .iter()
                .any(|e| !e.is_finite() || e.abs() > TOLERANCES.divergence_cutoff)
            {
                diverged = true;
                break;
            }
            let e_used: Vec<f64> = out.e_block.iter().step_by(stride).copied().collect();
            state.accumulate(&lift, out.x_d, &e_used)?;
            trace.e_blocks.push_block(&e_used)?;
            delta_norms.push(state.delta().norm());
        }
        trace.u_blocks = u_fine.coarsen(stride)?;

        let dt = sampler.fast_period();
        let norm = |v: &[f64]| (dt * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let conditions = if mu > 0.0 && steps > 0 {
            Some(check_lms_conditions(&self.reference_blocks(update_ratio)?, mu, cfg.n_taps, cfg.epsilon)?)
        } else {
            None
        };
        let report = RunReport {
            label: label.to_string(),
            mu,
            update_ratio,
            steps: trace.x_d.len(),
            diverged,
            e_norm: if diverged { f64::INFINITY } else { norm(&trace.e) },
            d_norm: norm(&trace.d),
            w_norm: norm(&trace.w),
            final_taps: state.taps().to_vec(),
            delta_norms,
            conditions,
            wall_time: start.elapsed(),
        };
        Ok(RunOutcome { report, trace })
    }
}

pub fn run_single(config: &SimConfig) -> Result<RunOutcome> {
    let exp = Experiment::new(config.clone())?;
    exp.run(config.sim.mu, config.sim.l, "proposed")
}

fn compare_with(exp: &Experiment, mu: f64) -> Result<Comparison> {
    let l = exp.config().sim.l;
    let (proposed, conventional) = rayon::join(
        || exp.run(mu, l, "proposed"),
        || exp.run(mu, 1, "conventional"),
    );
    let (proposed, conventional) = (proposed?, conventional?);
    let ratio = proposed.report.e_norm / conventional.report.e_norm;
    Ok(Comparison {
        proposed,
        conventional,
        ratio,
    })
}

/// Proposed update at the configured `L` against the conventional one
/// (`L = 1`) on the same plants, noise and simulation grid.
pub fn run_comparison(config: &SimConfig) -> Result<Comparison> {
    let exp = Experiment::new(config.clone())?;
    compare_with(&exp, config.sim.mu)
}

fn passes(report: &RunReport, threshold: f64) -> bool {
    report.e_norm < threshold
}

fn stable_interval(
    exp: &Experiment,
    rows: &[(f64, &RunReport)],
    threshold: f64,
    update_ratio: usize,
) -> Result<StableInterval> {
    let mut scanned = 0.0;
    let mut first_failure = None;
    for (mu, rep) in rows {
        if passes(rep, threshold) {
            scanned = *mu;
        } else {
            first_failure = Some(*mu);
            break;
        }
    }
    let mut refined = scanned;
    if let Some(fail) = first_failure {
        let (mut lo, mut hi) = (scanned, fail);
        for _ in 0..exp.config().sim.refine_steps {
            let mid = 0.5 * (lo + hi);
            if passes(&exp.run(mid, update_ratio, "refine")?.report, threshold) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        refined = lo;
    }
    Ok(StableInterval {
        scanned,
        refined,
        first_failure,
    })
}

/// Runs both methods at every `μ` (in parallel) and estimates, for each,
/// the largest `μ` keeping `‖e‖₂` below `sim.threshold`.
pub fn run_mu_sweep(config: &SimConfig, mu_list: &[f64]) -> Result<SweepReport> {
    if mu_list.is_empty() {
        return Err(AncError::config("sim.mu_sweep", "step-size list is empty"));
    }
    if mu_list.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(AncError::config("sim.mu_sweep", "entries must be non-negative"));
    }
    let exp = Experiment::new(config.clone())?;
    let mut mus = mu_list.to_vec();
    mus.sort_by(|a, b| a.total_cmp(b));
    mus.dedup();
    let l = config.sim.l;

    let rows: Vec<SweepRow> = mus
        .par_iter()
        .map(|&mu| {
            let cmp = compare_with(&exp, mu)?;
            Ok(SweepRow {
                mu,
                conventional: cmp.conventional.report,
                proposed: cmp.proposed.report,
            })
        })
        .collect::<Result<_>>()?;

    let threshold = config.sim.threshold;
    let conv: Vec<_> = rows.iter().map(|r| (r.mu, &r.conventional)).collect();
    let prop: Vec<_> = rows.iter().map(|r| (r.mu, &r.proposed)).collect();
    let (conventional, proposed) = rayon::join(
        || stable_interval(&exp, &conv, threshold, 1),
        || stable_interval(&exp, &prop, threshold, l),
    );
    let (conventional, proposed) = (conventional?, proposed?);
    let interval_ratio = proposed.refined / conventional.refined;
    Ok(SweepReport {
        threshold,
        rows,
        conventional,
        proposed,
        interval_ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeRow {
    pub omega: f64,
    pub mag_f: f64,
    pub mag_p: f64,
    /// Set on the row placed exactly at the Nyquist frequency `π / h`.
    pub nyquist: bool,
}

/// `|F(jω)|` and `|P(jω)|` on `points` log-spaced frequencies in
/// `[omega_min, omega_max]`, plus one row at `π / h`.
pub fn bode_table(
    f: &ContinuousStateSpace,
    p: &ContinuousStateSpace,
    h: f64,
    omega_min: f64,
    omega_max: f64,
    points: usize,
) -> Result<Vec<BodeRow>> {
    if !(omega_min > 0.0) || !(omega_max > omega_min) || points < 2 {
        return Err(AncError::InvalidArgument(
            "need 0 < omega_min < omega_max and at least two points".into(),
        ));
    }
    let ef = crate::lti::FrequencyEvaluator::new(f)?;
    let ep = crate::lti::FrequencyEvaluator::new(p)?;
    let (lo, hi) = (omega_min.log10(), omega_max.log10());
    let mut omegas: Vec<(f64, bool)> = (0..points)
        .map(|i| (10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64), false))
        .collect();
    let nyquist = std::f64::consts::PI / h;
    omegas.retain(|(w, _)| *w != nyquist);
    omegas.push((nyquist, true));
    omegas.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(omegas
        .into_iter()
        .map(|(omega, nyquist)| BodeRow {
            omega,
            mag_f: ef.eval(omega).norm(),
            mag_p: ep.eval(omega).norm(),
            nyquist,
        })
        .collect())
}

pub fn emit_bode(config: &SimConfig) -> Result<Vec<BodeRow>> {
    config.validate()?;
    bode_table(&config.secondary()?, &config.primary()?, config.sim.h, 0.01, 100.0, 600)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SimConfig {
        let mut c = SimConfig::default();
        c.sim.horizon = 20.0;
        c
    }

    #[test]
    fn frozen_filter_leaves_disturbance() {
        let mut c = short();
        c.sim.mu = 0.0;
        let out = run_single(&c).unwrap();
        assert_eq!(out.report.e_norm, out.report.d_norm);
        assert_eq!(out.report.w_norm, 0.0);
        assert!(out.report.conditions.is_none());
    }

    #[test]
    fn silent_noise_gives_zero_error() {
        let mut c = short();
        c.noise.amplitudes = vec![0.0; 6];
        let out = run_single(&c).unwrap();
        assert_eq!(out.report.e_norm, 0.0);
        assert!(out.trace.e.iter().all(|v| *v == 0.0));
        assert!(out.report.conditions.unwrap().degenerate);
    }

    #[test]
    fn unit_ratio_comparison_is_identical() {
        let mut c = short();
        c.sim.l = 1;
        let cmp = run_comparison(&c).unwrap();
        assert_eq!(cmp.proposed.trace.e, cmp.conventional.trace.e);
        assert_eq!(cmp.ratio, 1.0);
    }

    #[test]
    fn update_ratio_must_divide() {
        let exp = Experiment::new(short()).unwrap();
        assert!(exp.run(0.1, 3, "x").is_err());
        assert!(exp.run(0.1, 0, "x").is_err());
    }

    #[test]
    fn bode_contains_nyquist_row() {
        let rows = emit_bode(&SimConfig::default()).unwrap();
        let ny: Vec<_> = rows.iter().filter(|r| r.nyquist).collect();
        assert_eq!(ny.len(), 1);
        assert_eq!(ny[0].omega, std::f64::consts::PI);
        assert!(rows.windows(2).all(|w| w[0].omega < w[1].omega));
    }

    #[test]
    fn sweep_rows_sorted() {
        let c = short();
        let rep = run_mu_sweep(&c, &[0.3, 0.0, 0.1]).unwrap();
        let mus: Vec<f64> = rep.rows.iter().map(|r| r.mu).collect();
        assert_eq!(mus, vec![0.0, 0.1, 0.3]);
        assert!(run_mu_sweep(&c, &[]).is_err());
    }
}
