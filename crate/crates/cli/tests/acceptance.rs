//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any check fails.
//!
//! Set `SSVEP_REAL_DATA_DIR` to a directory of converted `.ssvp` subject files
//! to run the real-data reproduction check.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ssvep_core::canonical::DEFAULT_RIDGE;
use ssvep_core::{
    canonical_correlations, evaluate_loocv, generate_ssvep, read_dataset, EegEpoch, FilterBank,
    FusionParams, Method, SynthSpec,
};

type Check = Result<String, String>;

struct Outcome {
    name: &'static str,
    status: &'static str,
    detail: String,
}

fn run(name: &'static str, budget: Duration, f: impl FnOnce() -> Check) -> Outcome {
    let t0 = Instant::now();
    let res = f();
    let elapsed = t0.elapsed();
    let (status, mut detail) = match res {
        Ok(d) if elapsed <= budget => ("PASS", d),
        Ok(d) => ("FAIL", format!("{d}; over budget {budget:?}")),
        Err(d) => ("FAIL", d),
    };
    detail.push_str(&format!(" [{:.2} s]", elapsed.as_secs_f64()));
    Outcome { name, status, detail }
}

fn gaussian_rows(rows: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect())
        .collect()
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

/// Largest |corr(wz' z, wy' y)| over unit directions on a 2000 x 2000 angle grid.
fn brute_force_rho(z: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    const STEPS: usize = 2000;
    let czz = [
        covariance(&z[0], &z[0]),
        covariance(&z[0], &z[1]),
        covariance(&z[1], &z[1]),
    ];
    let cyy = [
        covariance(&y[0], &y[0]),
        covariance(&y[0], &y[1]),
        covariance(&y[1], &y[1]),
    ];
    let czy = [
        [covariance(&z[0], &y[0]), covariance(&z[0], &y[1])],
        [covariance(&z[1], &y[0]), covariance(&z[1], &y[1])],
    ];
    let dirs: Vec<(f64, f64)> = (0..STEPS)
        .map(|i| {
            let a = PI * i as f64 / STEPS as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let var = |c: &[f64; 3], (u, v): (f64, f64)| c[0] * u * u + 2.0 * c[1] * u * v + c[2] * v * v;
    let vy: Vec<f64> = dirs.iter().map(|d| var(&cyy, *d).sqrt()).collect();
    let mut best = 0.0f64;
    for &(u, v) in &dirs {
        let sz = var(&czz, (u, v)).sqrt();
        let (p, q) = (u * czy[0][0] + v * czy[1][0], u * czy[0][1] + v * czy[1][1]);
        for (j, &(s, t)) in dirs.iter().enumerate() {
            let r = ((p * s + q * t) / (sz * vy[j])).abs();
            best = best.max(r);
        }
    }
    best
}

fn cca_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let n = 500;
        let shared = gaussian_rows(2, n, &mut rng);
        let mut z = gaussian_rows(2, n, &mut rng);
        let mut y = gaussian_rows(2, n, &mut rng);
        let coupling: f64 = rng.gen_range(0.2..2.0);
        for c in 0..2 {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            for s in 0..n {
                z[c][s] += coupling * (a * shared[0][s] + b * shared[1][s]);
                y[c][s] += coupling * (b * shared[0][s] - a * shared[1][s]);
            }
        }
        let rho = canonical_correlations(
            &EegEpoch::from_rows(&z, 256.0).map_err(|e| e.to_string())?,
            &EegEpoch::from_rows(&y, 256.0).map_err(|e| e.to_string())?,
            0.0,
        )
        .map_err(|e| e.to_string())?
        .rho1();
        let grid = brute_force_rho(&z, &y);
        let diff = grid - rho;
        if !(-1e-3..=1e-4).contains(&diff) {
            return Err(format!("instance {inst}: grid {grid:.8} vs solver {rho:.8}"));
        }
        worst = worst.max(diff.abs());
    }
    Ok(format!("50 instances, worst |grid - rho1| = {worst:.2e}"))
}

fn cca_analytic() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = EegEpoch::from_rows(&gaussian_rows(4, 600, &mut rng), 256.0).map_err(|e| e.to_string())?;
    let same = canonical_correlations(&x, &x, DEFAULT_RIDGE).map_err(|e| e.to_string())?;
    let dev = same
        .correlations()
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0, f64::max);
    if same.rank() != 4 || dev > 1e-6 {
        return Err(format!("identical inputs: rank {} max |rho - 1| {dev:.2e}", same.rank()));
    }

    let n = 512;
    let wave = |f: fn(f64) -> f64| vec![(0..n).map(|s| f(2.0 * PI * 8.0 * s as f64 / n as f64)).collect::<Vec<_>>()];
    let sin = EegEpoch::from_rows(&wave(f64::sin), 256.0).map_err(|e| e.to_string())?;
    let cos = EegEpoch::from_rows(&wave(f64::cos), 256.0).map_err(|e| e.to_string())?;
    let sc = canonical_correlations(&sin, &cos, DEFAULT_RIDGE)
        .map_err(|e| e.to_string())?
        .rho1();
    if sc > 0.01 {
        return Err(format!("sin vs cos rho1 = {sc}"));
    }

    let z = gaussian_rows(3, 400, &mut rng);
    let mut y = gaussian_rows(3, 400, &mut rng);
    for c in 0..3 {
        for s in 0..400 {
            y[c][s] += 0.8 * z[(c + 1) % 3][s];
        }
    }
    let m = [[2.0, 0.3, -0.5], [0.1, 1.5, 0.4], [-0.2, 0.6, 1.8]];
    let mixed: Vec<Vec<f64>> = (0..3)
        .map(|r| (0..400).map(|s| (0..3).map(|k| m[r][k] * z[k][s]).sum()).collect())
        .collect();
    let ep = |rows: &[Vec<f64>]| EegEpoch::from_rows(rows, 256.0).map_err(|e| e.to_string());
    let a = canonical_correlations(&ep(&z)?, &ep(&y)?, 0.0).map_err(|e| e.to_string())?;
    let b = canonical_correlations(&ep(&mixed)?, &ep(&y)?, 0.0).map_err(|e| e.to_string())?;
    let drift = a
        .correlations()
        .iter()
        .zip(b.correlations())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    if drift > 1e-8 {
        return Err(format!("mixing drift {drift:.2e}"));
    }
    Ok(format!(
        "identical max dev {dev:.1e}, sin/cos rho1 {sc:.1e}, mixing drift {drift:.1e}"
    ))
}

fn filter_correctness() -> Check {
    let fs = 256.0;
    let bank = FilterBank::with_defaults(9.25, 5, fs).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (spec, f) in bank.specs().iter().zip(bank.filters()) {
        let center = (spec.low_hz * spec.high_hz).sqrt();
        let at_center = f.magnitude_db(center, fs);
        let at_one = f.magnitude_db(1.0, fs);
        let radius = f.max_pole_radius();
        if !(-3.0..=0.01).contains(&at_center) || at_one > -20.0 || radius >= 1.0 {
            return Err(format!(
                "band {}: center {at_center:.3} dB, 1 Hz {at_one:.2} dB, |pole| {radius}",
                spec.low_hz
            ));
        }
        lines.push(format!("{}:{at_center:.2}", spec.low_hz));
    }
    Ok(format!("band center dB {}", lines.join(" ")))
}

fn fusion_arithmetic() -> Check {
    let p = FusionParams::default();
    let phi = p.channel_weights(8);
    let w = p.band_weights();
    let ones8 = ssvep_core::FeatureVector::new(vec![1.0; 8]).map_err(|e| e.to_string())?;
    let delta = ssvep_core::channel_fuse(&ones8, &p);
    let psi = ssvep_core::band_fuse(&[1.0; 5], &p).map_err(|e| e.to_string())?;
    let decreasing = |v: &[f64]| v.iter().all(|x| *x > 0.0) && v.windows(2).all(|p| p[0] > p[1]);
    if (delta - 2.806358).abs() > 1e-5 || (psi - 2.713611).abs() > 1e-6 {
        return Err(format!("channel {delta:.7}, band {psi:.7}"));
    }
    if !decreasing(&phi) || !decreasing(&w) {
        return Err("weights not positive and strictly decreasing".into());
    }
    Ok(format!("channel_fuse {delta:.7}, band_fuse {psi:.7}"))
}

fn binomial_interval(n: usize, p: f64, alpha: f64) -> (usize, usize) {
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = (1.0 - p).powi(n as i32);
    for k in 1..=n {
        pmf[k] = pmf[k - 1] * (n - k + 1) as f64 / k as f64 * p / (1.0 - p);
    }
    let mut lo = 0;
    let mut tail = 0.0;
    while tail + pmf[lo] <= alpha / 2.0 {
        tail += pmf[lo];
        lo += 1;
    }
    let mut hi = n;
    let mut tail = 0.0;
    while tail + pmf[hi] <= alpha / 2.0 {
        tail += pmf[hi];
        hi -= 1;
    }
    (lo, hi)
}

fn end_to_end() -> Check {
    let p = FusionParams::default();
    let clean = generate_ssvep(&SynthSpec::standard(f64::INFINITY, 42)).map_err(|e| e.to_string())?;
    let r = evaluate_loocv(&clean, Method::ProposedFusion, &p, 1.0, 0.0).map_err(|e| e.to_string())?;
    if r.accuracy() != 1.0 {
        return Err(format!("noiseless accuracy {}", r.accuracy()));
    }

    let noise = generate_ssvep(&SynthSpec::standard(-100.0, 43)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let nf = noise.dims().n_freqs;
    let shuffled = noise
        .remap_records(|_, _| rng.gen_range(0..nf))
        .map_err(|e| e.to_string())?;
    let r = evaluate_loocv(&shuffled, Method::ProposedFusion, &p, 1.0, 0.0).map_err(|e| e.to_string())?;
    let (lo, hi) = binomial_interval(r.n_total(), 1.0 / nf as f64, 0.01);
    let k = r.n_correct();
    if k < lo || k > hi {
        return Err(format!("chance run {k}/{} outside [{lo}, {hi}]", r.n_total()));
    }
    Ok(format!(
        "noiseless 180/180; chance run {k}/{} within 99% interval [{lo}, {hi}]",
        r.n_total()
    ))
}

fn method_ordering() -> Check {
    let p = FusionParams::default();
    let d = generate_ssvep(&SynthSpec::standard(-5.0, 42)).map_err(|e| e.to_string())?;
    let base = evaluate_loocv(&d, Method::BaselineSscca, &p, 1.0, 0.0).map_err(|e| e.to_string())?;
    let prop = evaluate_loocv(&d, Method::ProposedFusion, &p, 1.0, 0.0).map_err(|e| e.to_string())?;
    let msg = format!("proposed {:.4}, baseline {:.4}", prop.accuracy(), base.accuracy());
    if prop.accuracy() >= base.accuracy() - 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ssvep(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ssvep"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "ssvep {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let read = |p: &str| std::fs::read(p).map_err(|e| e.to_string());

    for name in ["a.ssvp", "b.ssvp"] {
        ssvep(&["synth", "--snr", "-5", "--seed", "42", "--out", &path(name)])?;
    }
    if read(&path("a.ssvp"))? != read(&path("b.ssvp"))? {
        return Err("synth outputs differ".into());
    }
    for name in ["a.csv", "b.csv"] {
        ssvep(&[
            "bench",
            "--data",
            &path("a.ssvp"),
            "--windows",
            "0.5,1.0",
            "--out",
            &path(name),
        ])?;
    }
    let (a, b) = (read(&path("a.csv"))?, read(&path("b.csv"))?);
    if a != b {
        return Err("bench CSVs differ".into());
    }
    Ok(format!("synth and bench outputs byte-identical ({} CSV bytes)", a.len()))
}

fn env_f64(key: &str, default: f64) -> f64 {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn real_data(dir: &Path) -> Check {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ssvp"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no .ssvp files in {}", dir.display()));
    }
    let window = env_f64("SSVEP_REAL_WINDOW_S", 3.0);
    let start = env_f64("SSVEP_REAL_START_S", 1.0);
    let p = FusionParams::default();
    let (mut prop, mut base) = (0.0, 0.0);
    for f in &files {
        let d = read_dataset(f).map_err(|e| format!("{}: {e}", f.display()))?;
        prop += evaluate_loocv(&d, Method::ProposedFusion, &p, window, start)
            .map_err(|e| e.to_string())?
            .accuracy();
        base += evaluate_loocv(&d, Method::BaselineSscca, &p, window, start)
            .map_err(|e| e.to_string())?
            .accuracy();
    }
    let n = files.len() as f64;
    let (prop, base) = (prop / n, base / n);
    let msg = format!(
        "{} subjects, {window} s window at {start} s: proposed {prop:.4}, baseline {base:.4}",
        files.len()
    );
    if (prop - 0.945).abs() <= 0.05 && prop - base >= 0.2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut outcomes = vec![
        run("cca_brute_force_oracle", secs(60), cca_brute_force),
        run("cca_analytic_cases", secs(5), cca_analytic),
        run("filter_correctness", secs(5), filter_correctness),
        run("fusion_arithmetic", secs(1), fusion_arithmetic),
        run("end_to_end_oracle", secs(180), end_to_end),
        run("method_ordering", secs(300), method_ordering),
        run("determinism", secs(60), determinism),
    ];
    match std::env::var_os("SSVEP_REAL_DATA_DIR") {
        Some(dir) => outcomes.push(run("real_data_reproduction", secs(1800), || {
            real_data(Path::new(&dir))
        })),
        None => outcomes.push(Outcome {
            name: "real_data_reproduction",
            status: "SKIP",
            detail: "SSVEP_REAL_DATA_DIR not set".into(),
        }),
    }

    for o in &outcomes {
        println!("{} {}: {}", o.status, o.name, o.detail);
    }
    if outcomes.iter().any(|o| o.status == "FAIL") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
