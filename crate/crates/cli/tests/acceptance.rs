//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p tma-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, Matrix4, Matrix5, RowVector5, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use tma_core::batch_tls::{solve_gtls, EivBatch};
use tma_core::circumnav::control;
use tma_core::pseudo_linear::{build_row, line_of_sight, line_of_sight_perp, row_covariances};
use tma_core::sim::{run_monte_carlo, run_noise_sweep, run_trial, NoiseLevel};
use tma_core::{
    CircumnavConfig, EstimatorKind, Guidance, NoiseConfig, PseudoRow, RtlsConfig, RtlsEstimator,
    SimClock, TrialConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn check(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "[{}] {id}. {name}: {}; {:.2} s (limit {} s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

/// Noise-free trial with lambda = 1: RTLS and batch GTLS both recover x.
fn noise_free_recovery() -> Outcome {
    let cfg = TrialConfig {
        noise: NoiseConfig::noiseless(),
        rtls: RtlsConfig {
            lambda: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let rec = run_trial(&cfg).expect("noise-free trial runs");
    let e_s = rec.final_row().e_s;
    let rows: Vec<PseudoRow> = rec
        .measurements()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            PseudoRow::from_measurement(
                m.theta_m,
                &m.p_o_m,
                SimClock::new(k, cfg.dt).unwrap(),
                &cfg.noise,
            )
        })
        .collect();
    let batch = EivBatch::from_rows(&rows, 1.0, Matrix5::identity()).unwrap();
    let x = cfg.target.to_vector();
    let (gtls_err, row_res) = match solve_gtls(&batch) {
        Ok(g) => (
            (g - x).norm(),
            rows.iter()
                .map(|r| r.residual(&g).abs())
                .fold(0.0, f64::max),
        ),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    outcome(
        e_s < 1e-6 && gtls_err < 1e-9,
        format!("RTLS final e_s = {e_s:.3e} (< 1e-6), |x_gtls - x| = {gtls_err:.3e} (< 1e-9), max row residual {row_res:.3e}"),
    )
}

/// Sampled covariances of the row perturbations against the closed forms.
fn covariance_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = NoiseConfig::new(0.5f64.to_radians(), 0.05, 0).unwrap();
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let draws = 100_000;
    let mut worst_y: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for _ in 0..5 {
        let theta = rng.random_range(-3.1..3.1);
        let p_o = Vector2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let clock = SimClock::new(rng.random_range(0..600), 0.1).unwrap();
        let (y0, h0) = build_row(theta, &p_o, clock);
        let mut dy = Vec::with_capacity(draws);
        let mut dh = Vec::with_capacity(draws);
        for _ in 0..draws {
            let th = theta + noise.sigma_theta * n01.sample(&mut rng);
            let po = p_o + Vector2::new(n01.sample(&mut rng), n01.sample(&mut rng)) * noise.sigma_p;
            let (y, h) = build_row(th, &po, clock);
            dy.push(y - y0);
            dh.push(h - h0);
        }
        let n = draws as f64;
        let my = dy.iter().sum::<f64>() / n;
        let var_y = dy.iter().map(|d| (d - my).powi(2)).sum::<f64>() / (n - 1.0);
        let mh = dh.iter().sum::<Vector4<f64>>() / n;
        let cov_h = dh
            .iter()
            .map(|d| (d - mh) * (d - mh).transpose())
            .sum::<Matrix4<f64>>()
            / (n - 1.0);
        let (r_y, r_h) = row_covariances(theta, &p_o, clock, &noise);
        worst_y = worst_y.max((var_y - r_y).abs() / r_y);
        worst_h = worst_h.max((cov_h - r_h).norm() / r_h.norm());
    }
    outcome(
        worst_y <= 0.05 && worst_h <= 0.05,
        format!(
            "worst relative error r_y {:.2}%, R_h {:.2}% (<= 5%) over 5 geometries",
            worst_y * 100.0,
            worst_h * 100.0
        ),
    )
}

/// RTLS on synthetic errors-in-variables batches against batch GTLS.
fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n01 = Normal::new(0.0, 1.0).unwrap();
    let sd = 0.05;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = Vector4::from_fn(|_, _| {
            let m: f64 = rng.random_range(1.0..3.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        });
        let mut z = DMatrix::zeros(200, 5);
        for i in 0..200 {
            let h = Vector4::from_fn(|_, _| rng.random_range(-3.0..3.0));
            for j in 0..4 {
                z[(i, j)] = h[j];
            }
            z[(i, 4)] = h.dot(&x);
            for j in 0..5 {
                z[(i, j)] += sd * n01.sample(&mut rng);
            }
        }
        let gtls = solve_gtls(&EivBatch::unweighted(z.clone()).unwrap()).unwrap();
        let mut est = RtlsEstimator::new(RtlsConfig {
            lambda: 1.0,
            ..Default::default()
        })
        .unwrap();
        let cov = Matrix5::identity() * sd * sd;
        for i in 0..200 {
            est.update_augmented(&RowVector5::from_fn(|_, j| z[(i, j)]), &cov)
                .unwrap();
        }
        let r = est.estimate();
        for i in 0..4 {
            worst = worst.max((r[i] - gtls[i]).abs() / gtls[i].abs());
        }
    }
    outcome(
        worst <= 0.01,
        format!(
            "worst per-coordinate relative difference {:.4}% (<= 1%) over 20 batches",
            worst * 100.0
        ),
    )
}

/// First step whose value drops below `threshold`.
fn first_below(curve: &[f64], threshold: f64) -> Option<usize> {
    curve.iter().position(|&v| v < threshold)
}

fn fmt_step(k: Option<usize>) -> String {
    k.map_or("never".to_string(), |k| k.to_string())
}

/// Reference ensemble: RTLS ends lower and converges sooner than PLKF.
fn comparison_one() -> Outcome {
    let cfg = TrialConfig::default();
    let mc = run_monte_carlo(&cfg, &[EstimatorKind::Rtls, EstimatorKind::Plkf], 100, 0).unwrap();
    let rtls = mc.get(EstimatorKind::Rtls).unwrap();
    let plkf = mc.get(EstimatorKind::Plkf).unwrap();
    let rtls_final = *rtls.mean_e_s.last().unwrap();
    let plkf_final = *plkf.mean_e_s.last().unwrap();
    let tail = &plkf.mean_e_s[cfg.mse_window_start()..];
    let plkf_steady = tail.iter().sum::<f64>() / tail.len() as f64;
    let threshold = 0.5 * plkf_steady;
    let k_rtls = first_below(&rtls.mean_e_s, threshold);
    let k_plkf = first_below(&plkf.mean_e_s, threshold);
    let earlier = match (k_rtls, k_plkf) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    };
    outcome(
        rtls_final < plkf_final && earlier,
        format!(
            "final mean e_s rtls {rtls_final:.4} vs plkf {plkf_final:.4}; below {threshold:.4} at step rtls {} vs plkf {}",
            fmt_step(k_rtls),
            fmt_step(k_plkf)
        ),
    )
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn fmt_series(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", items.join(", "))
}

/// Noise sweeps: RTLS at or below PLKF everywhere, MSE non-decreasing in noise.
fn comparison_two() -> Outcome {
    let cfg = TrialConfig::default();
    let kinds = [EstimatorKind::Rtls, EstimatorKind::Plkf];
    let bearing: Vec<NoiseLevel> = (1..=10)
        .map(|d| NoiseLevel {
            sigma_theta_deg: d as f64,
            sigma_p: 1.0,
        })
        .collect();
    let position: Vec<NoiseLevel> = [0.001, 0.01, 0.1, 1.0, 10.0]
        .iter()
        .map(|&p| NoiseLevel {
            sigma_theta_deg: 5.0,
            sigma_p: p,
        })
        .collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, levels) in [("bearing", &bearing), ("position", &position)] {
        let pts = run_noise_sweep(&cfg, &kinds, levels, 50, 0).unwrap();
        let series = |k| -> Vec<f64> {
            pts.iter()
                .map(|p| p.summary.get(k).unwrap().mse_pos)
                .collect()
        };
        let r = series(EstimatorKind::Rtls);
        let p = series(EstimatorKind::Plkf);
        let below: Vec<usize> = (0..r.len()).filter(|&i| r[i] > p[i]).collect();
        let ok = below.is_empty() && non_decreasing(&r) && non_decreasing(&p);
        pass &= ok;
        detail.push(format!(
            "{label} sweep rtls {} plkf {} (rtls > plkf at levels {:?}; monotone rtls {}, plkf {})",
            fmt_series(&r),
            fmt_series(&p),
            below,
            non_decreasing(&r),
            non_decreasing(&p)
        ));
    }
    outcome(pass, detail.join("; "))
}

/// Standoff distance stays in the band over the second half of a trial.
fn distances(rec: &tma_core::TrialRecord) -> Vec<f64> {
    rec.rows.iter().map(|r| (r.p_o - r.p).norm()).collect()
}

fn circumnavigation() -> Outcome {
    let base = TrialConfig::default();
    let rho = base.circ.rho;
    let (lo, hi) = (0.95 * rho, 1.05 * rho);
    let half = base.steps / 2;

    let truth = TrialConfig {
        noise: NoiseConfig::noiseless(),
        guidance: Guidance::Truth,
        ..base.clone()
    };
    let d = distances(&run_trial(&truth).unwrap());
    let last_out = d.iter().rposition(|&v| v < lo || v > hi);
    let settled = last_out.is_none_or(|k| k < half);
    let tail = &d[half..];
    let (tmin, tmax) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });

    let mut held = 0;
    for i in 0..100 {
        let rec = run_trial(&base.with_seed(i)).unwrap();
        if distances(&rec)[half..].iter().all(|&v| v >= lo && v <= hi) {
            held += 1;
        }
    }
    outcome(
        settled && held >= 90,
        format!(
            "band [{lo:.2}, {hi:.2}] m; truth-fed: last exit at step {}, distance over second half in [{tmin:.3}, {tmax:.3}]; estimated: {held}/100 trials in band over second half (>= 90)",
            fmt_step(last_out)
        ),
    )
}

/// Random inputs never exceed the command bound.
fn controller_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_dot: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..1_000_000 {
        let cfg = CircumnavConfig::new(
            rng.random_range(0.1..20.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.1..10.0),
        )
        .unwrap();
        let p_hat = Vector2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let p_o = Vector2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let theta = rng.random_range(-10.0..10.0);
        let u = control(&p_hat, &p_o, theta, &cfg);
        let ratio = u.norm() / cfg.total_bound();
        if ratio > 1.0 {
            violations += 1;
        }
        worst_ratio = worst_ratio.max(ratio);
        worst_dot = worst_dot.max(line_of_sight(theta).dot(&line_of_sight_perp(theta)).abs());
    }
    outcome(
        violations == 0 && worst_dot < 1e-12,
        format!("{violations} bound violations in 1e6 draws, max |u|/(U^f + alpha) = {worst_ratio:.6}, max |g . g_perp| = {worst_dot:.1e}"),
    )
}

fn presets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets")
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tma"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("TMA_THREADS", threads)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("tma {} exited with {status}", args.join(" ")))
    }
}

/// Two runs of each preset with the same seed give identical CSV bytes.
fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("tma-acceptance-{}", std::process::id()));
    let mut compared = 0;
    let mut mismatches = Vec::new();
    let mut presets: Vec<PathBuf> = std::fs::read_dir(presets_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    presets.sort();
    for preset in &presets {
        let stem = preset.file_stem().unwrap().to_string_lossy().to_string();
        let cfg = preset.to_string_lossy().to_string();
        let runs: [(&str, Vec<&str>); 3] = [
            ("trial", vec!["trial", "--config", &cfg, "--seed", "7"]),
            (
                "ensemble",
                vec!["ensemble", "--config", &cfg, "--trials", "8"],
            ),
            ("sweep", vec!["sweep", "--config", &cfg, "--trials", "3"]),
        ];
        for (cmd, args) in runs {
            let a = root.join(format!("{stem}-{cmd}-a"));
            let b = root.join(format!("{stem}-{cmd}-b"));
            if let Err(e) = run_cli(&args, &a, "1").and_then(|_| run_cli(&args, &b, "4")) {
                mismatches.push(e);
                continue;
            }
            for entry in std::fs::read_dir(&a).unwrap() {
                let path = entry.unwrap().path();
                if path.extension().is_some_and(|e| e == "csv") {
                    let name = path.file_name().unwrap();
                    let same = std::fs::read(&path).ok() == std::fs::read(b.join(name)).ok();
                    compared += 1;
                    if !same {
                        mismatches.push(format!("{stem}/{cmd}/{}", name.to_string_lossy()));
                    }
                }
            }
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    outcome(
        mismatches.is_empty() && compared > 0,
        format!(
            "{compared} CSV files compared across {} presets (1 vs 4 threads), mismatches: {mismatches:?}",
            presets.len()
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; listing or
    // filtering is not supported here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    println!("acceptance criteria");
    let results = [
        check(
            1,
            "noise-free exact recovery",
            Duration::from_secs(1),
            noise_free_recovery,
        ),
        check(
            2,
            "covariance formulas",
            Duration::from_secs(5),
            covariance_formulas,
        ),
        check(
            3,
            "oracle agreement",
            Duration::from_secs(10),
            oracle_agreement,
        ),
        check(
            4,
            "comparison 1 trend",
            Duration::from_secs(120),
            comparison_one,
        ),
        check(
            5,
            "comparison 2 trends",
            Duration::from_secs(300),
            comparison_two,
        ),
        check(
            6,
            "circumnavigation band",
            Duration::from_secs(60),
            circumnavigation,
        ),
        check(
            7,
            "controller bound",
            Duration::from_secs(5),
            controller_bound,
        ),
        check(8, "determinism", Duration::from_secs(600), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
