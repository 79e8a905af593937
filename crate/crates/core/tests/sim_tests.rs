use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anc_core::sim::{bode_table, run_comparison, run_mu_sweep, run_single, SimConfig};

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

// Frozen once from the default configuration; they guard against silent
// changes of the simulation, not against an external reference.
const DEFAULT_E_PROPOSED: f64 = 1.5014763867896412;
const DEFAULT_E_CONVENTIONAL: f64 = 2.1040430800509498;
const DEFAULT_D: f64 = 1.1545662528154539;
const DEFAULT_RATIO: f64 = 0.7136148499170857;
const LOW_BAND_RATIO: f64 = 0.9670555932607036;

#[test]
fn default_comparison_fixture() {
    let cmp = run_comparison(&SimConfig::default()).unwrap();
    let (p, c) = (&cmp.proposed.report, &cmp.conventional.report);
    assert!(close(p.e_norm, DEFAULT_E_PROPOSED, 1e-9), "{}", p.e_norm);
    assert!(close(c.e_norm, DEFAULT_E_CONVENTIONAL, 1e-9), "{}", c.e_norm);
    assert!(close(p.d_norm, DEFAULT_D, 1e-12) && p.d_norm == c.d_norm);
    assert!(close(cmp.ratio, DEFAULT_RATIO, 1e-9), "{}", cmp.ratio);

    let pc = p.conditions.as_ref().unwrap();
    assert!(close(pc.gamma, 6.356429105210866, 1e-9));
    assert!(close(pc.mu_bound, 0.3146420681952454, 1e-9));
    assert!(close(pc.epsilon, 0.0680642644655629, 1e-9));
    assert!(pc.all_pass());
    let cc = c.conditions.as_ref().unwrap();
    assert!(close(cc.mu_bound, 0.3347511219503634, 1e-9));
}

#[test]
fn shipped_default_config_equals_builtin() {
    let cfg = SimConfig::from_path(&repo_file("configs/default.toml")).unwrap();
    assert_eq!(cfg, SimConfig::default());
}

#[test]
fn low_band_noise_makes_methods_agree() {
    let mut cfg = SimConfig::from_path(&repo_file("configs/low_band.toml")).unwrap();
    let nyquist = std::f64::consts::PI / cfg.sim.h;
    assert!(cfg.noise.frequencies.iter().all(|w| *w < 0.1 * nyquist));
    let ratio = run_comparison(&cfg).unwrap().ratio;
    assert!(close(ratio, LOW_BAND_RATIO, 1e-9), "{ratio}");
    for seed in 2..=5 {
        cfg.sim.seed = seed;
        let r = run_comparison(&cfg).unwrap().ratio;
        assert!((0.8..=1.05).contains(&r), "seed {seed}: {r}");
    }
}

#[test]
fn error_norm_obeys_triangle_inequality() {
    let mut cfg = SimConfig::default();
    cfg.sim.horizon = 60.0;
    let sweep = run_mu_sweep(&cfg, &[0.0, 0.05, 0.2, 0.5, 1.0]).unwrap();
    for row in &sweep.rows {
        for r in [&row.conventional, &row.proposed] {
            assert!(r.e_norm >= 0.0);
            assert!(r.e_norm <= r.d_norm + r.w_norm + 1e-12, "μ={}: {r:?}", row.mu);
        }
    }
}

#[test]
fn frozen_filter_rows_and_divergent_rows() {
    let cfg = SimConfig::default();
    let sweep = run_mu_sweep(&cfg, &[0.0]).unwrap();
    let row = &sweep.rows[0];
    assert_eq!(row.proposed.e_norm, row.proposed.d_norm);
    assert_eq!(row.conventional.e_norm, row.conventional.d_norm);
    assert!(row.proposed.conditions.is_none());

    // far above the step-size bound both methods blow up
    let sweep = run_mu_sweep(&cfg, &[0.1, 20.0]).unwrap();
    let wild = &sweep.rows[1];
    for r in [&wild.conventional, &wild.proposed] {
        assert!(r.e_norm >= cfg.sim.threshold);
        assert!(r.diverged);
        assert!(!r.conditions.as_ref().unwrap().step_size_ok);
    }
    assert_eq!(sweep.conventional.first_failure, Some(20.0));
}

#[test]
fn default_sweep_fixture() {
    let cfg = SimConfig::default();
    let sweep = run_mu_sweep(&cfg, &cfg.sim.mu_sweep).unwrap();
    assert!(sweep.rows.windows(2).all(|w| w[0].mu < w[1].mu));
    assert_eq!(sweep.conventional.scanned, 0.3);
    assert_eq!(sweep.proposed.scanned, 0.65);
    assert!(close(sweep.conventional.refined, 0.3098388671875001, 1e-9));
    assert!(close(sweep.proposed.refined, 0.696240234375, 1e-9));
    for row in &sweep.rows {
        for r in [&row.conventional, &row.proposed] {
            if r.diverged {
                assert!(!r.conditions.as_ref().unwrap().step_size_ok);
            }
        }
    }
}

#[test]
fn config_errors_name_the_field() {
    for (text, field) in [
        ("sim.L = 0", "sim.L"),
        ("sim.h = -1.0", "sim.h"),
        ("sim.T = 10.5", "sim.T"),
        ("noise.decays = [0.03, 0.03, 0.03, 0.03, 0.03, 0.0]", "noise.decays"),
        ("sim.bogus = 1", "bogus"),
    ] {
        let err = SimConfig::from_str(text).unwrap_err().to_string();
        assert!(err.contains(field), "{text}: {err}");
    }
    // partial bank override keeps the other defaults
    let cfg = SimConfig::from_str("plant.secondary.first_order_poles = [2.0]").unwrap();
    assert_eq!(cfg.plant.secondary.gains, vec![0.05; 4]);
}

#[test]
fn waveform_source_is_read_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x\n");
    for i in 0..400 {
        let t = i as f64 / 8.0;
        text += &format!("{}\n", (-0.05 * t).exp() * (1.3 * t).sin());
    }
    fs::write(dir.path().join("x.csv"), text).unwrap();
    fs::write(dir.path().join("cfg.toml"), "sim.T = 50.0\nnoise.waveform = \"x.csv\"\n").unwrap();
    let cfg = SimConfig::from_path(&dir.path().join("cfg.toml")).unwrap();
    let out = run_single(&cfg).unwrap();
    assert_eq!(out.trace.x.len(), 400);
    assert!((out.trace.x[8] - (-0.05f64).exp() * 1.3f64.sin()).abs() < 1e-15);
}

fn local_maxima(omega: &[f64], mag: &[f64]) -> Vec<f64> {
    (1..mag.len() - 1)
        .filter(|&i| mag[i] > mag[i - 1] && mag[i] > mag[i + 1])
        .map(|i| omega[i])
        .collect()
}

#[test]
fn bode_peaks_at_section_frequencies() {
    let cfg = SimConfig::default();
    let rows = bode_table(&cfg.secondary().unwrap(), &cfg.primary().unwrap(), 1.0, 0.1, 10.0, 4000).unwrap();
    let omega: Vec<f64> = rows.iter().map(|r| r.omega).collect();
    let f: Vec<f64> = rows.iter().map(|r| r.mag_f).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.mag_p).collect();
    for (peaks, nominal) in [
        (local_maxima(&omega, &f), [1.0, 2.0, 3.0, 4.0]),
        (local_maxima(&omega, &p), [1.2, 2.4, 3.6, 4.8]),
    ] {
        assert_eq!(peaks.len(), 4, "{peaks:?}");
        for (w, k) in peaks.iter().zip(nominal) {
            assert!((w - k).abs() < 0.1 * k, "peak {w} for {k}");
        }
    }
    let far = bode_table(&cfg.secondary().unwrap(), &cfg.primary().unwrap(), 1.0, 1e3, 1e4, 2).unwrap();
    assert!(far.iter().filter(|r| !r.nyquist).all(|r| r.mag_f < 1e-6 && r.mag_p < 1e-6));
}

fn anc_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anc-sim")).args(args).output().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn cli_output_is_byte_identical_across_invocations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        for cmd in ["compare", "sweep", "bode"] {
            let res = anc_sim(&[cmd, "--seed", "7", "--out", out]);
            assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
        }
    }
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert!(fa.len() >= 14);
    assert_eq!(fa, fb);
}

#[test]
fn cli_run_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = anc_sim(&["run", "--out", out, "--mu", "0.1"]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("|e|2=1.501476"), "{stdout}");
    let fast = fs::read_to_string(dir.path().join("proposed_fast.csv")).unwrap();
    assert!(fast.starts_with("# anc-sim fast-trace v1\nt[s],x,d,w,e\n"));
    assert_eq!(fast.lines().count(), 2 + 800);

    let trace = dir.path().join("proposed_blocks.csv");
    let res = anc_sim(&["check", "--trace", trace.to_str().unwrap(), "--mu", "0.1"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("bounded=true step_size=true slowly_varying=true"));
    assert!(dir.path().join("proposed_blocks_conditions.csv").exists());

    let res = anc_sim(&["check", "--trace", trace.to_str().unwrap(), "--mu", "1e6"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("step_size=false"));
}

#[test]
fn cli_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "sim.N = 0\n").unwrap();
    let res = anc_sim(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("sim.N"));

    let res = anc_sim(&["sweep", "--mu", "0.1,x"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("--mu"));

    let res = anc_sim(&["check", "--trace", "/nonexistent/blocks.csv"]);
    assert!(!res.status.success());

    let res = anc_sim(&["run", "--L", "0"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("sim.L"));
}
