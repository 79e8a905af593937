use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use anc_core::adaptive::check_lms_conditions;
use anc_core::error::{AncError, Result};
use anc_core::sim::output::{read_blocks, write_bode, write_comparison, write_conditions, write_run, write_sweep};
use anc_core::sim::{emit_bode, run_comparison, run_mu_sweep, run_single, RunReport, SimConfig};

#[derive(Parser)]
#[command(name = "anc-sim", version, about = "Sampled-data filtered-x LMS noise-control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single closed-loop run of the sampled-data update.
    Run(Common),
    /// Sampled-data update against the conventional one (L = 1).
    Compare(Common),
    /// Both methods over a list of step sizes.
    Sweep(Common),
    /// Magnitude responses of the secondary and primary paths.
    Bode(Common),
    /// Stability-condition report for a saved blocks trace.
    Check {
        #[command(flatten)]
        common: Common,
        /// Blocks CSV written by `run` or `compare`.
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random generator phases.
    #[arg(long)]
    seed: Option<u64>,
    /// One step size, or a comma-separated list for `sweep`.
    #[arg(long)]
    mu: Option<String>,
    /// Fast-sampling ratio.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Error-norm threshold for the stable step-size interval.
    #[arg(long)]
    threshold: Option<f64>,
}

// A closed stdout (say, piped into `head`) must not abort the run.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! say_part {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

fn parse_mu_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| AncError::config("--mu", format!("not a number: {s:?}")))
        })
        .collect()
}

impl Common {
    fn load(&self) -> Result<(SimConfig, Option<Vec<f64>>)> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::from_path(p)?,
            None => SimConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if let Some(l) = self.l {
            cfg.sim.l = l;
        }
        if let Some(t) = self.threshold {
            cfg.sim.threshold = t;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        let mut list = None;
        if let Some(m) = &self.mu {
            let mus = parse_mu_list(m)?;
            if mus.len() == 1 {
                cfg.sim.mu = mus[0];
            }
            list = Some(mus);
        }
        cfg.validate()?;
        Ok((cfg, list))
    }
}

fn describe(r: &RunReport) {
    say_part!(
        "{:<13} mu={} L={} |e|2={:.6} |d|2={:.6} |w|2={:.6}",
        r.label, r.mu, r.update_ratio, r.e_norm, r.d_norm, r.w_norm
    );
    if r.diverged {
        say_part!(" diverged after {} periods", r.steps);
    }
    if let Some(c) = &r.conditions {
        say_part!(
            " cond=[{} {} {}] mu_bound={:.6}",
            c.bounded as u8, c.step_size_ok as u8, c.slowly_varying as u8, c.mu_bound
        );
    }
    say!(" ({:.3} s)", r.wall_time.as_secs_f64());
}

fn list_files(paths: &[PathBuf]) {
    for p in paths {
        say!("wrote {}", p.display());
    }
}

fn execute(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Run(c) => {
            let (cfg, _) = c.load()?;
            let run = run_single(&cfg)?;
            describe(&run.report);
            list_files(&write_run(&cfg.output.dir, "proposed", &run)?);
        }
        Command::Compare(c) => {
            let (cfg, _) = c.load()?;
            let cmp = run_comparison(&cfg)?;
            describe(&cmp.proposed.report);
            describe(&cmp.conventional.report);
            say!("ratio proposed/conventional = {:.6}", cmp.ratio);
            list_files(&write_comparison(&cfg.output.dir, &cmp)?);
        }
        Command::Sweep(c) => {
            let (cfg, list) = c.load()?;
            let mus = list.unwrap_or_else(|| cfg.sim.mu_sweep.clone());
            let sweep = run_mu_sweep(&cfg, &mus)?;
            say!("{:>10} {:>16} {:>16}", "mu", "|e|2 conv", "|e|2 prop");
            for r in &sweep.rows {
                say!("{:>10} {:>16.6} {:>16.6}", r.mu, r.conventional.e_norm, r.proposed.e_norm);
            }
            say!(
                "largest mu with |e|2 < {}: conventional {:.4}, proposed {:.4}, ratio {:.3}",
                sweep.threshold, sweep.conventional.refined, sweep.proposed.refined, sweep.interval_ratio
            );
            list_files(&write_sweep(&cfg.output.dir, &sweep)?);
        }
        Command::Bode(c) => {
            let (cfg, _) = c.load()?;
            let rows = emit_bode(&cfg)?;
            let path = cfg.output.dir.join("bode.csv");
            write_bode(&path, &rows)?;
            list_files(&[path]);
        }
        Command::Check { common, trace } => {
            let (cfg, _) = common.load()?;
            let u = read_blocks(&trace)?;
            let report = check_lms_conditions(&u, cfg.sim.mu, cfg.sim.n_taps, cfg.sim.epsilon)?;
            say!(
                "gamma={:.6} max_lambda={:.6} mu_bound={:.6} epsilon={:.6}",
                report.gamma, report.max_lambda, report.mu_bound, report.epsilon
            );
            say!(
                "bounded={} step_size={} slowly_varying={}{}",
                report.bounded,
                report.step_size_ok,
                report.slowly_varying,
                if report.degenerate { " (degenerate)" } else { "" }
            );
            let stem = trace.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
            let path = out_dir(&common, &cfg, &trace).join(format!("{stem}_conditions.csv"));
            write_conditions(&path, &report)?;
            list_files(&[path]);
        }
    }
    say!("wall time {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn out_dir(common: &Common, cfg: &SimConfig, trace: &Path) -> PathBuf {
    if common.out.is_some() || common.config.is_some() {
        cfg.output.dir.clone()
    } else {
        trace.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anc-sim: {e}");
            ExitCode::FAILURE
        }
    }
}
