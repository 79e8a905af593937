//! CSV emission. Every file starts with a `# anc-sim <kind> v<version>`
//! line, then a header row with units in brackets. Floats are written in
//! shortest round-trip form, so identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::runner::{BodeRow, Comparison, RunOutcome, RunReport, SweepReport};
use crate::adaptive::LmsConditionReport;
use crate::error::{AncError, Result};
use crate::lifting::{BlockSeries, FastSampler};

pub const FORMAT_VERSION: u32 = 1;

fn num(v: f64) -> String {
    format!("{v}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

struct Table {
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    fn create(path: &Path, kind: &str, extra: &str, header: &[String]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut file = BufWriter::new(File::create(path)?);
        write!(file, "# anc-sim {kind} v{FORMAT_VERSION}")?;
        if !extra.is_empty() {
            write!(file, " {extra}")?;
        }
        writeln!(file)?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

fn strs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `t[s], x, d, w, e` on the simulation grid.
pub fn write_fast_trace(path: &Path, run: &RunOutcome) -> Result<()> {
    let t = &run.trace;
    let mut table = Table::create(path, "fast-trace", "", &strs(&["t[s]", "x", "d", "w", "e"]))?;
    let l = t.sampler.ratio();
    for i in 0..t.e.len() {
        table.row([
            num(t.sampler.instant(i / l, i % l)),
            num(t.x[i]),
            num(t.d[i]),
            num(t.w[i]),
            num(t.e[i]),
        ])?;
    }
    table.finish()
}

/// `n, t[s], x_d, y_d, alpha_0..` once per period.
pub fn write_discrete_trace(path: &Path, run: &RunOutcome) -> Result<()> {
    let t = &run.trace;
    let n_taps = t.taps.first().map_or(0, |a| a.len());
    let mut header = strs(&["n", "t[s]", "x_d", "y_d"]);
    header.extend((0..n_taps).map(|k| format!("alpha_{k}")));
    let mut table = Table::create(path, "discrete-trace", "", &header)?;
    for n in 0..t.x_d.len() {
        let mut rec = vec![n.to_string(), num(t.sampler.instant(n, 0)), num(t.x_d[n]), num(t.y_d[n])];
        rec.extend(t.taps[n].iter().map(|a| num(*a)));
        table.row(rec)?;
    }
    table.finish()
}

/// `n, U_0.., e_0..` on the update grid; the marker line records `h` and `L`
/// so that [`read_blocks`] can rebuild the series.
pub fn write_blocks(path: &Path, u: &BlockSeries, e: &BlockSeries) -> Result<()> {
    let s = u.sampler();
    let l = s.ratio();
    let mut header = vec!["n".to_string()];
    header.extend((0..l).map(|j| format!("U_{j}[s]")));
    header.extend((0..l).map(|j| format!("e_{j}")));
    let mut table = Table::create(path, "blocks", &format!("h={} L={}", num(s.period()), l), &header)?;
    for n in 0..u.steps() {
        let mut rec = vec![n.to_string()];
        rec.extend(u.block(n as isize).unwrap_or(&[]).iter().map(|v| num(*v)));
        match e.block(n as isize) {
            Some(b) => rec.extend(b.iter().map(|v| num(*v))),
            None => rec.extend((0..l).map(|_| String::new())),
        }
        table.row(rec)?;
    }
    table.finish()
}

/// Reads the `U` blocks back from a file written by [`write_blocks`].
pub fn read_blocks(path: &Path) -> Result<BlockSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| AncError::Io(format!("{}: {e}", path.display())))?;
    let bad = |msg: &str| AncError::InvalidArgument(format!("{}: {msg}", path.display()));
    let first = text.lines().next().ok_or_else(|| bad("empty file"))?;
    if !first.starts_with("# anc-sim blocks v") {
        return Err(bad("not a blocks trace"));
    }
    let mut h = None;
    let mut l = None;
    for tok in first.split_whitespace() {
        if let Some(v) = tok.strip_prefix("h=") {
            h = v.parse::<f64>().ok();
        } else if let Some(v) = tok.strip_prefix("L=") {
            l = v.parse::<usize>().ok();
        }
    }
    let (h, l) = (h.ok_or_else(|| bad("missing h"))?, l.ok_or_else(|| bad("missing L"))?);
    let sampler = FastSampler::new(h, l)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() < 1 + l {
            return Err(bad("short record"));
        }
        for j in 0..l {
            let v: f64 = rec[1 + j].parse().map_err(|_| bad("unparsable U entry"))?;
            values.push(v);
        }
    }
    BlockSeries::new(sampler, values)
}

fn conditions_rows(c: &Option<LmsConditionReport>) -> Vec<(String, String)> {
    match c {
        None => vec![("conditions".into(), "not evaluated".into())],
        Some(c) => vec![
            ("gamma".into(), num(c.gamma)),
            ("max_lambda".into(), num(c.max_lambda)),
            ("mu_bound".into(), num(c.mu_bound)),
            ("epsilon".into(), num(c.epsilon)),
            ("epsilon_threshold".into(), num(c.epsilon_threshold)),
            ("min_increment_eigenvalue".into(), num(c.min_increment_eigenvalue)),
            ("cond1_bounded".into(), flag(c.bounded).into()),
            ("cond2_step_size".into(), flag(c.step_size_ok).into()),
            ("cond3_slowly_varying".into(), flag(c.slowly_varying).into()),
            ("degenerate".into(), flag(c.degenerate).into()),
        ],
    }
}

/// Key/value summary of a run. Wall time is left out on purpose so the
/// file is reproducible.
pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    let mut table = Table::create(path, "report", "", &strs(&["key", "value"]))?;
    let mut rows: Vec<(String, String)> = vec![
        ("label".into(), report.label.clone()),
        ("mu".into(), num(report.mu)),
        ("update_ratio".into(), report.update_ratio.to_string()),
        ("steps".into(), report.steps.to_string()),
        ("diverged".into(), flag(report.diverged).into()),
        ("e_norm".into(), num(report.e_norm)),
        ("d_norm".into(), num(report.d_norm)),
        ("w_norm".into(), num(report.w_norm)),
    ];
    rows.extend(
        report
            .final_taps
            .iter()
            .enumerate()
            .map(|(k, a)| (format!("final_alpha_{k}"), num(*a))),
    );
    rows.extend(conditions_rows(&report.conditions));
    for (k, v) in rows {
        table.row([k, v])?;
    }
    table.finish()
}

/// `n, |delta|` per period.
pub fn write_delta_norms(path: &Path, report: &RunReport) -> Result<()> {
    let mut table = Table::create(path, "delta-norms", "", &strs(&["n", "delta_norm"]))?;
    for (n, v) in report.delta_norms.iter().enumerate() {
        table.row([n.to_string(), num(*v)])?;
    }
    table.finish()
}

/// All files of one run, named `<prefix>_<kind>.csv`.
pub fn write_run(dir: &Path, prefix: &str, run: &RunOutcome) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = ["fast", "discrete", "blocks", "report", "delta"]
        .iter()
        .map(|k| dir.join(format!("{prefix}_{k}.csv")))
        .collect();
    write_fast_trace(&paths[0], run)?;
    write_discrete_trace(&paths[1], run)?;
    write_blocks(&paths[2], &run.trace.u_blocks, &run.trace.e_blocks)?;
    write_report(&paths[3], &run.report)?;
    write_delta_norms(&paths[4], &run.report)?;
    Ok(paths)
}

pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<Vec<PathBuf>> {
    let mut paths = write_run(dir, "proposed", &cmp.proposed)?;
    paths.extend(write_run(dir, "conventional", &cmp.conventional)?);
    let path = dir.join("comparison.csv");
    let mut table = Table::create(
        &path,
        "comparison",
        "",
        &strs(&["method", "update_ratio", "mu", "e_norm", "d_norm", "w_norm", "diverged"]),
    )?;
    for r in [&cmp.proposed.report, &cmp.conventional.report] {
        table.row([
            r.label.clone(),
            r.update_ratio.to_string(),
            num(r.mu),
            num(r.e_norm),
            num(r.d_norm),
            num(r.w_norm),
            flag(r.diverged).to_string(),
        ])?;
    }
    table.row([
        "ratio".to_string(),
        String::new(),
        String::new(),
        num(cmp.ratio),
        String::new(),
        String::new(),
        String::new(),
    ])?;
    table.finish()?;
    paths.push(path);
    Ok(paths)
}

fn cond2(r: &RunReport) -> String {
    r.conditions
        .as_ref()
        .map_or(String::new(), |c| flag(c.step_size_ok).to_string())
}

pub fn write_sweep(dir: &Path, sweep: &SweepReport) -> Result<Vec<PathBuf>> {
    let rows_path = dir.join("sweep.csv");
    let mut table = Table::create(
        &rows_path,
        "sweep",
        &format!("threshold={}", num(sweep.threshold)),
        &strs(&[
            "mu",
            "e_norm_conventional",
            "e_norm_proposed",
            "diverged_conventional",
            "diverged_proposed",
            "cond2_conventional",
            "cond2_proposed",
            "mu_bound_conventional",
            "mu_bound_proposed",
        ]),
    )?;
    let bound = |r: &RunReport| r.conditions.as_ref().map_or(String::new(), |c| num(c.mu_bound));
    for row in &sweep.rows {
        table.row([
            num(row.mu),
            num(row.conventional.e_norm),
            num(row.proposed.e_norm),
            flag(row.conventional.diverged).to_string(),
            flag(row.proposed.diverged).to_string(),
            cond2(&row.conventional),
            cond2(&row.proposed),
            bound(&row.conventional),
            bound(&row.proposed),
        ])?;
    }
    table.finish()?;

    let summary_path = dir.join("sweep_summary.csv");
    let mut table = Table::create(
        &summary_path,
        "sweep-summary",
        "",
        &strs(&["method", "mu_stable_scanned", "mu_stable_refined", "first_failure"]),
    )?;
    for (name, iv) in [("conventional", &sweep.conventional), ("proposed", &sweep.proposed)] {
        table.row([
            name.to_string(),
            num(iv.scanned),
            num(iv.refined),
            iv.first_failure.map_or(String::new(), num),
        ])?;
    }
    table.row([
        "ratio".to_string(),
        String::new(),
        num(sweep.interval_ratio),
        String::new(),
    ])?;
    table.finish()?;
    Ok(vec![rows_path, summary_path])
}

pub fn write_bode(path: &Path, rows: &[BodeRow]) -> Result<()> {
    let mut table = Table::create(
        path,
        "bode",
        "",
        &strs(&["omega[rad/s]", "mag_F", "mag_P", "mag_F[dB]", "mag_P[dB]", "nyquist"]),
    )?;
    for r in rows {
        table.row([
            num(r.omega),
            num(r.mag_f),
            num(r.mag_p),
            num(20.0 * r.mag_f.log10()),
            num(20.0 * r.mag_p.log10()),
            flag(r.nyquist).to_string(),
        ])?;
    }
    table.finish()
}

pub fn write_conditions(path: &Path, report: &LmsConditionReport) -> Result<()> {
    let mut table = Table::create(path, "conditions", "", &strs(&["key", "value"]))?;
    table.row(["mu".to_string(), num(report.mu)])?;
    table.row(["steps".to_string(), report.steps.to_string()])?;
    for (k, v) in conditions_rows(&Some(report.clone())) {
        table.row([k, v])?;
    }
    table.finish()
}
