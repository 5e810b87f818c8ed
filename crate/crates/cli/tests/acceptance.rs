//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any criterion fails.
//!
//! Criteria 7–10 drive the release experiment runner end to end on the
//! default (desk-scale) configuration with seed 42.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chaosbayes::baselines::{episodes_detected, standardized_alerts, BurstInjection};
use chaosbayes::dynamics::{integrate, rk4_step, LorenzParams, State3};
use chaosbayes::recurrence::{
    correlation_dimension, correlation_integral, default_radii, detect_bursts, fibonacci_union,
    CorrelationCurve, FIBONACCI_WINDOWS,
};
use chaosbayes::sectioning::{mahalanobis_sq, SectionStats};
use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Suite {
    results: Vec<(u32, &'static str, bool)>,
}

impl Suite {
    /// Run a criterion, folding its runtime bound into the verdict.
    fn check(
        &mut self,
        id: u32,
        name: &'static str,
        limit: Option<Duration>,
        f: impl FnOnce() -> Outcome,
    ) {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = o.pass && in_time;
        let time = match limit {
            Some(l) => format!(
                "{:.2} s, limit {:.0} s",
                elapsed.as_secs_f64(),
                l.as_secs_f64()
            ),
            None => format!("{:.2} s", elapsed.as_secs_f64()),
        };
        println!(
            "[{}] criterion {id:>2}: {name} — {} ({time})",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        self.results.push((id, name, pass));
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

// ---------------------------------------------------------------------------
// Criteria 1–6: library-level checks.

fn integrator_order() -> Outcome {
    let decay = |s: State3| s * -1.0;
    let error = |dt: f64| {
        let n = (1.0 / dt).round() as usize;
        let mut s = State3::new(1.0, 0.0, 0.0);
        for _ in 0..n {
            s = rk4_step(&decay, s, dt);
        }
        (s.x - (-1.0f64).exp()).abs()
    };
    let ratio = error(0.02) / error(0.01);
    outcome(
        (12.0..=20.0).contains(&ratio),
        format!("error ratio {ratio:.3} in [12, 20]"),
    )
}

fn mahalanobis_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let l = Matrix2::new(
            rng.random_range(-3.0..3.0),
            0.0,
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        let cov = l * l.transpose() + Matrix2::identity() * rng.random_range(0.01..1.0);
        let mu = Vector2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let z = Vector2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let stats = SectionStats::from_moments(mu, cov, 1000).unwrap();
        let d = z - mu;
        let solved = (cov + Matrix2::identity() * stats.ridge)
            .lu()
            .solve(&d)
            .unwrap();
        let oracle = d.dot(&solved);
        worst = worst.max((mahalanobis_sq(&z, &stats) - oracle).abs() / oracle.max(1.0));
    }
    outcome(
        worst <= 1e-10,
        format!("1000 SPD cases, max relative deviation {worst:.2e} <= 1e-10"),
    )
}

fn brute_force(points: &[State3], radii: &[f64]) -> Vec<f64> {
    let n = points.len();
    let pairs = (n * (n - 1) / 2) as f64;
    radii
        .iter()
        .map(|&r| {
            let mut inside = 0usize;
            for i in 0..n {
                for j in i + 1..n {
                    if (points[i] - points[j]).norm() < r {
                        inside += 1;
                    }
                }
            }
            inside as f64 / pairs
        })
        .collect()
}

fn well_formed(c: &CorrelationCurve) -> bool {
    c.values.windows(2).all(|w| w[0] <= w[1]) && c.values.iter().all(|v| (0.0..=1.0).contains(v))
}

fn correlation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut clouds: Vec<Vec<State3>> = Vec::new();
    for n in [2usize, 3, 40, 250, 500] {
        clouds.push(
            (0..n)
                .map(|_| State3::new(rng.random(), rng.random(), rng.random()))
                .collect(),
        );
    }
    clouds.push(
        (0..500)
            .map(|_| State3::new(rng.random::<f64>() * 5.0, 0.0, 0.0))
            .collect(),
    );
    let grid: Vec<f64> = (0..300)
        .map(|i| (rng.random_range(0..8) as f64) * 0.25 + (i % 3) as f64)
        .collect();
    clouds.push(
        grid.chunks(3)
            .map(|c| State3::new(c[0], c[1], c[2]))
            .collect(),
    );
    let radii: Vec<f64> = (0..24).map(|k| 0.005 * 1.35f64.powi(k)).collect();
    let mut mismatches = 0;
    let mut malformed = 0;
    for cloud in &clouds {
        let curve = correlation_integral(cloud, &radii).unwrap();
        let oracle = brute_force(cloud, &radii);
        mismatches += curve
            .values
            .iter()
            .zip(&oracle)
            .filter(|(a, b)| a != b)
            .count();
        malformed += usize::from(!well_formed(&curve));
    }
    outcome(
        mismatches == 0 && malformed == 0,
        format!(
            "{} clouds (N <= 500, incl. tied distances) x 24 radii: {mismatches} mismatches, {malformed} non-monotone/out-of-range curves",
            clouds.len()
        ),
    )
}

fn slope(points: &[State3], seed: u64) -> f64 {
    let radii = default_radii(points, 24, 2000, seed).unwrap();
    let curve = correlation_integral(points, &radii).unwrap();
    correlation_dimension(&curve).unwrap().slope
}

fn dimension_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let line: Vec<State3> = (0..2000)
        .map(|_| State3::new(rng.random(), 0.0, 0.0))
        .collect();
    let square: Vec<State3> = (0..2000)
        .map(|_| State3::new(rng.random(), rng.random(), 0.0))
        .collect();
    let traj = integrate(
        &LorenzParams::CANONICAL,
        State3::new(1.0, 1.0, 1.0),
        0.01,
        210_000,
        10_000,
    )
    .unwrap();
    let lorenz: Vec<State3> = traj.states.iter().step_by(10).copied().collect();
    let (l, s, z) = (slope(&line, 4), slope(&square, 5), slope(&lorenz, 6));
    let pass = (0.9..=1.1).contains(&l) && (1.8..=2.1).contains(&s) && (1.85..=2.25).contains(&z);
    outcome(
        pass,
        format!(
            "line {l:.3} in [0.9, 1.1]; square {s:.3} in [1.8, 2.1]; Lorenz ({} pts) {z:.3} in [1.85, 2.25]",
            lorenz.len()
        ),
    )
}

fn burst_detection() -> Outcome {
    let mut spike = vec![0.0; 200];
    spike[100] = 10.0;
    let spike_ok = FIBONACCI_WINDOWS
        .iter()
        .all(|&w| detect_bursts(&spike, w, 3.0).unwrap().into_iter().eq([100]));
    let constant_ok = FIBONACCI_WINDOWS
        .iter()
        .all(|&w| detect_bursts(&[4.2; 300], w, 3.0).unwrap().is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut affine_ok = true;
    let mut alerts_seen = 0;
    for _ in 0..50 {
        let xs: Vec<f64> = (0..400)
            .map(|_| rng.random::<f64>().powi(3) * 10.0 - 5.0)
            .collect();
        let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(-1e3..1e3));
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        for &w in &FIBONACCI_WINDOWS {
            let base = detect_bursts(&xs, w, 3.0).unwrap();
            alerts_seen += base.len();
            affine_ok &= base == detect_bursts(&ys, w, 3.0).unwrap();
        }
    }
    outcome(
        spike_ok && constant_ok && affine_ok,
        format!(
            "spike exact for all windows: {spike_ok}; constant empty: {constant_ok}; 50 affine maps x 4 windows identical ({alerts_seen} alerts): {affine_ok}"
        ),
    )
}

fn multi_scale_superiority() -> Outcome {
    let inj = BurstInjection::multi_scale(6.0);
    let short = inj.spans.iter().position(|s| s.len() == 5).unwrap();
    let (mut union_hits, mut total, mut short_base) = (0, 0, 0);
    let seeds = 20;
    for seed in 0..seeds {
        let s = inj.generate(seed);
        let union = fibonacci_union(&s, &FIBONACCI_WINDOWS, 3.0)
            .unwrap()
            .union_alerts;
        let hits = episodes_detected(&union, &inj.spans);
        union_hits += hits.iter().filter(|h| **h).count();
        total += hits.len();
        let base = standardized_alerts(&s, 200, 3.0).unwrap();
        short_base += usize::from(episodes_detected(&base, &inj.spans)[short]);
    }
    let union_rate = union_hits as f64 / total as f64;
    let base_rate = short_base as f64 / seeds as f64;
    outcome(
        union_rate >= 0.95 && base_rate < 0.8,
        format!(
            "Fibonacci union detects {union_hits}/{total} episodes ({union_rate:.3} >= 0.95); window-200 baseline detects {short_base}/{seeds} duration-5 episodes ({base_rate:.2} < 0.80)"
        ),
    )
}

// ---------------------------------------------------------------------------
// Criteria 7–10: experiment runs through the binary.

struct Chain {
    params: Vec<[f64; 3]>,
    d: Vec<f64>,
    accepted: Vec<bool>,
}

impl Chain {
    fn read(path: &Path) -> Chain {
        let text = fs::read_to_string(path).unwrap();
        let mut c = Chain {
            params: vec![],
            d: vec![],
            accepted: vec![],
        };
        for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| f[i].parse::<f64>().unwrap();
            c.params.push([num(1), num(2), num(3)]);
            c.d.push(num(5));
            c.accepted.push(f[6] == "1");
        }
        c
    }

    fn median(&self, j: usize, burn_in: usize) -> f64 {
        let mut v: Vec<f64> = self.params[burn_in..].iter().map(|p| p[j]).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    fn acceptance_after(&self, burn_in: usize) -> f64 {
        let tail = &self.accepted[burn_in..];
        tail.iter().filter(|a| **a).count() as f64 / tail.len() as f64
    }

    /// Iterations (1-based) where d strictly decreased without an acceptance.
    fn unexplained_dips(&self) -> Vec<usize> {
        (1..self.d.len())
            .filter(|&i| self.d[i] < self.d[i - 1] && !self.accepted[i])
            .map(|i| i + 1)
            .collect()
    }
}

struct Run {
    dir: PathBuf,
    ok: bool,
    elapsed: Duration,
    stderr: String,
}

fn experiment(cmd: &str, dir: &Path, config: Option<&Path>) -> Run {
    let start = Instant::now();
    let mut c = Command::new(env!("CARGO_BIN_EXE_chaosbayes"));
    c.env_remove("CHAOSBAYES_OUT")
        .arg(cmd)
        .arg("--out")
        .arg(dir);
    if let Some(cfg) = config {
        c.arg("--config").arg(cfg);
    } else {
        c.args(["--seed", "42"]);
    }
    let o = c.output().unwrap();
    Run {
        dir: dir.to_path_buf(),
        ok: o.status.success(),
        elapsed: start.elapsed(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn csv_rows(path: &Path) -> usize {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .count()
        .saturating_sub(1)
}

const BURN_IN: usize = 100;
const LIMIT_5_MIN: u64 = 300;

fn main() {
    println!("acceptance suite: 10 criteria");
    let mut suite = Suite { results: vec![] };
    suite.check(1, "integrator order", secs(1), integrator_order);
    suite.check(
        2,
        "Mahalanobis oracle equivalence",
        secs(1),
        mahalanobis_oracle,
    );
    suite.check(
        3,
        "correlation-integral oracle equivalence",
        secs(5),
        correlation_oracle,
    );
    suite.check(
        4,
        "correlation-dimension sanity",
        secs(60),
        dimension_sanity,
    );
    suite.check(5, "burst detection", secs(1), burst_detection);
    suite.check(
        6,
        "multi-scale superiority",
        secs(10),
        multi_scale_superiority,
    );

    let tmp = tempfile::tempdir().unwrap();
    let ll = experiment("exp-ll", &tmp.path().join("exp-ll"), None);
    let lr = experiment("exp-lr", &tmp.path().join("exp-lr"), None);
    for r in [&ll, &lr] {
        if !r.ok {
            println!("  run in {} failed: {}", r.dir.display(), r.stderr.trim());
        }
    }

    suite.check(7, "Lorenz–Lorenz Model A posterior", None, || {
        if !ll.ok {
            return outcome(false, "exp-ll run failed");
        }
        let chain = Chain::read(&ll.dir.join("model_a_chain.csv"));
        let (sigma, rho) = (chain.median(0, BURN_IN), chain.median(1, BURN_IN));
        let acc = chain.acceptance_after(BURN_IN);
        let sections = csv_rows(&ll.dir.join("observed_section.csv"));
        let pass = chain.params.len() == 500
            && (8.5..=11.5).contains(&sigma)
            && (24.0..=32.0).contains(&rho)
            && (0.1..=0.6).contains(&acc)
            && ll.elapsed.as_secs() < LIMIT_5_MIN;
        outcome(
            pass,
            format!(
                "{} iterations; median sigma {sigma:.3} in [8.5, 11.5], rho {rho:.3} in [24, 32]; acceptance after burn-in {acc:.3} in [0.1, 0.6]; {sections} section points; full exp-ll {:.1} s < 300 s",
                chain.params.len(),
                ll.elapsed.as_secs_f64()
            ),
        )
    });

    suite.check(8, "D-trace dips only at accepted iterations", None, || {
        if !(ll.ok && lr.ok) {
            return outcome(false, "experiment runs failed");
        }
        let chains = [
            ("exp-ll model A", ll.dir.join("model_a_chain.csv")),
            ("exp-ll model B", ll.dir.join("model_b_chain.csv")),
            ("exp-lr model A", lr.dir.join("model_a_chain.csv")),
            ("exp-lr model B (Rössler)", lr.dir.join("model_b_chain.csv")),
        ];
        let mut pass = true;
        let mut parts = vec![];
        for (name, path) in &chains {
            let c = Chain::read(path);
            let bad = c.unexplained_dips();
            let dips = (1..c.d.len()).filter(|&i| c.d[i] < c.d[i - 1]).count();
            pass &= bad.is_empty();
            parts.push(format!("{name}: {dips} dips, {} unexplained", bad.len()));
        }
        outcome(pass, parts.join("; "))
    });

    suite.check(9, "Lorenz–Rössler transfer", None, || {
        if !lr.ok {
            return outcome(false, "exp-lr run failed");
        }
        let chain = Chain::read(&lr.dir.join("model_b_chain.csv"));
        let acc = chain.acceptance_after(BURN_IN);
        let finite = chain.d.iter().all(|d| d.is_finite());
        let sections = csv_rows(&lr.dir.join("observed_section.csv"));
        let pass = chain.params.len() == 500
            && (0.05..=0.6).contains(&acc)
            && finite
            && sections >= 200
            && lr.elapsed.as_secs() < LIMIT_5_MIN;
        outcome(
            pass,
            format!(
                "Rössler Model B {} iterations, acceptance after burn-in {acc:.3} in [0.05, 0.6], D-trace finite: {finite}; Lorenz section {sections} >= 200 points; full exp-lr {:.1} s < 300 s",
                chain.params.len(),
                lr.elapsed.as_secs_f64()
            ),
        )
    });

    suite.check(10, "reproducibility", None, || {
        if !(ll.ok && lr.ok) {
            return outcome(false, "experiment runs failed");
        }
        let (a, b) = (csvs(&ll.dir), csvs(&lr.dir));
        let same_seed = a["model_a_chain.csv"] == b["model_a_chain.csv"];
        let mut parts = vec![format!(
            "seed 42 Model A chain identical across exp-ll/exp-lr: {same_seed}"
        )];
        let mut pass = same_seed;
        for (cmd, run, original) in [("exp-ll", &ll, &a), ("exp-lr", &lr, &b)] {
            let replay = experiment(
                cmd,
                &tmp.path().join(format!("{cmd}-replay")),
                Some(&run.dir.join("manifest.txt")),
            );
            if !replay.ok {
                parts.push(format!("{cmd} replay failed: {}", replay.stderr.trim()));
                pass = false;
                continue;
            }
            let again = csvs(&replay.dir);
            let differing: Vec<&String> = original
                .keys()
                .filter(|k| again.get(*k) != original.get(*k))
                .collect();
            let ok = differing.is_empty() && again.len() == original.len();
            pass &= ok;
            parts.push(format!(
                "{cmd} manifest replay: {}/{} CSVs bit-identical{}",
                original.len() - differing.len(),
                original.len(),
                if differing.is_empty() {
                    String::new()
                } else {
                    format!(" (differ: {differing:?})")
                }
            ));
        }
        outcome(pass, parts.join("; "))
    });

    let failed: Vec<u32> = suite.results.iter().filter(|r| !r.2).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        suite.results.len() - failed.len(),
        suite.results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
