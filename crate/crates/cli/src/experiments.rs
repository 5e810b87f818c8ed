//! Subcommand runners. Each writes its manifest first, then its artifacts, then
//! `summary.txt` with derived scalars (acceptance rates, medians, resolved τ).

use std::fmt::Display;
use std::io::Write as _;
use std::path::PathBuf;

use chaosbayes::baselines::{compare_fib_vs_fixed, episodes_detected, BurstInjection};
use chaosbayes::dynamics::{State3, SystemKind, TrajectorySeries};
use chaosbayes::inference::{
    run_chain, BurstAbc, ChainConfig, ChainRecord, ModelBConfig, PoincareMahalanobis, Scorer,
};
use chaosbayes::recurrence::{
    correlation_dimension_in, correlation_integral, default_radii, series_from_trajectory,
    summarize, BurstProfile,
};
use chaosbayes::sectioning::{extract_section, section_stats, SectionCloud};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{BaselineSource, Experiment, ExperimentConfig, Tau};
use crate::error::{CliError, Result};
use crate::output::OutputDir;
use crate::plot::{decimate, emit_plot, Plot, PlotData, Series};

/// RNG stream reserved for the τ pilot draws, so they never share draws with a chain.
const PILOT_STREAM: u64 = 1;

/// What a run produced.
#[derive(Debug)]
pub struct RunReport {
    pub experiment: Experiment,
    pub out: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
}

#[derive(Debug, Default)]
struct Summary(Vec<(String, String)>);

impl Summary {
    fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.0.push((key.into(), value.to_string()));
    }

    fn num(&mut self, key: impl Into<String>, value: f64) {
        self.put(key, format!("{value:?}"));
    }

    fn list(&mut self, key: impl Into<String>, values: &[f64]) {
        self.put(
            key,
            values
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
    }

    fn render(&self, experiment: Experiment) -> String {
        let mut s = format!("# chaosbayes {experiment} summary\n");
        for (k, v) in &self.0 {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: OutputDir,
    summary: Summary,
}

/// Horizontal label, vertical label and the map from a state to plot coordinates.
type Projection = (&'static str, &'static str, fn(&State3) -> [f64; 2]);

/// Axes used to draw an orbit of `kind`: Lorenz in the x–z plane, Rössler in x–y.
fn projection(kind: SystemKind) -> Projection {
    match kind {
        SystemKind::Lorenz => ("x", "z", |s| [s.x, s.z]),
        SystemKind::Rossler => ("x", "y", |s| [s.x, s.y]),
    }
}

/// Start and alert count of the `len`-step window holding the most alerts
/// (earliest on ties). `len` is clamped to the mask length.
pub fn densest_window(mask: &[bool], len: usize) -> (usize, usize) {
    let len = len.min(mask.len());
    if len == 0 {
        return (0, 0);
    }
    let mut count = mask[..len].iter().filter(|a| **a).count();
    let (mut best_start, mut best) = (0, count);
    for start in 1..=mask.len() - len {
        count = count + usize::from(mask[start + len - 1]) - usize::from(mask[start - 1]);
        if count > best {
            best = count;
            best_start = start;
        }
    }
    (best_start, best)
}

fn chain_config(cfg: &ExperimentConfig, kind: SystemKind) -> Result<ChainConfig> {
    Ok(ChainConfig {
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        proposal: cfg.proposal_state(kind)?,
        init_attempts: cfg.proposal.init_attempts,
    })
}

impl<'a> Run<'a> {
    fn simulate(&self, kind: SystemKind) -> Result<TrajectorySeries> {
        let system = kind
            .with_params(self.cfg.params(kind))
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(self.cfg.simulation(kind).run(&system)?)
    }

    /// The observed trajectory: `input` when given, otherwise a simulation of `kind`.
    fn observed(&self, kind: SystemKind) -> Result<TrajectorySeries> {
        match &self.cfg.input {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Ok(TrajectorySeries::read_csv(&text)?)
            }
            None => self.simulate(kind),
        }
    }

    fn plot(&mut self, name: &str, plot: &Plot) -> Result<()> {
        let path = self.out.path(name);
        emit_plot(plot, &path)?;
        self.out.record(path);
        Ok(())
    }

    fn orbit_points(&self, kind: SystemKind, traj: &TrajectorySeries) -> Vec<[f64; 2]> {
        let (_, _, proj) = projection(kind);
        let pts: Vec<[f64; 2]> = traj.states.iter().map(proj).collect();
        decimate(&pts, self.cfg.plot_max_points)
    }

    fn write_trajectory(
        &mut self,
        name: &str,
        kind: SystemKind,
        traj: &TrajectorySeries,
        title: &str,
    ) -> Result<()> {
        self.out
            .write_csv(&format!("{name}.csv"), |w| traj.write_csv(w))?;
        let (a, b, _) = projection(kind);
        let plot = Plot::new(
            title,
            a,
            b,
            PlotData::Line(vec![Series::new(
                kind.name(),
                self.orbit_points(kind, traj),
            )]),
        );
        self.plot(&format!("{name}.svg"), &plot)?;
        self.summary.put(format!("{name}.states"), traj.len());
        let xs = traj.states.iter().map(|s| s.x);
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| {
            (l.min(x), h.max(x))
        });
        self.summary.num(format!("{name}.x_min"), lo);
        self.summary.num(format!("{name}.x_max"), hi);
        Ok(())
    }

    fn write_section(
        &mut self,
        name: &str,
        kind: SystemKind,
        traj: &TrajectorySeries,
    ) -> Result<SectionCloud> {
        let mut cloud = extract_section(traj, &self.cfg.model_a.plane);
        cloud.source_params = Some(self.cfg.params(kind));
        self.out
            .write_csv(&format!("{name}.csv"), |w| cloud.write_csv(w))?;
        self.summary.put(format!("{name}.points"), cloud.len());
        if !cloud.is_empty() {
            let pts = cloud.points.iter().map(|p| [p[0], p[1]]).collect();
            let plot = Plot::new(
                format!("Section cloud ({})", kind.name()),
                "u",
                "v",
                PlotData::Scatter(pts),
            );
            self.plot(&format!("{name}.svg"), &plot)?;
        }
        if let Ok(stats) = section_stats(&cloud) {
            self.out
                .write_csv(&format!("{name}_stats.csv"), |w| stats.write_csv(w))?;
        }
        Ok(cloud)
    }

    fn write_correlation(&mut self, name: &str, traj: &TrajectorySeries) -> Result<()> {
        let d = &self.cfg.dimension;
        let stride = (traj.len() / d.points).max(1);
        let points: Vec<State3> = traj
            .states
            .iter()
            .step_by(stride)
            .take(d.points)
            .copied()
            .collect();
        let radii = default_radii(&points, d.radii, d.pairs, self.cfg.seed)?;
        let curve = correlation_integral(&points, &radii)?;
        self.out
            .write_csv(&format!("{name}.csv"), |w| curve.write_csv(w))?;
        let positive: Vec<[f64; 2]> = curve
            .radii
            .iter()
            .zip(&curve.values)
            .filter(|(_, c)| **c > 0.0)
            .map(|(r, c)| [r.log10(), c.log10()])
            .collect();
        if !positive.is_empty() {
            let plot = Plot::new(
                "Correlation integral",
                "log10 r",
                "log10 C(r)",
                PlotData::Line(vec![Series::new("C(r)", positive)]),
            );
            self.plot(&format!("{name}.svg"), &plot)?;
        }
        self.summary.put(format!("{name}.points"), points.len());
        match correlation_dimension_in(&curve, d.region) {
            Ok(fit) => {
                self.summary.num(format!("{name}.dimension"), fit.slope);
                self.summary.num(format!("{name}.r_squared"), fit.r_squared);
                self.summary.put(format!("{name}.radii_used"), fit.used);
            }
            Err(e) => self
                .summary
                .put(format!("{name}.dimension"), format!("unavailable ({e})")),
        }
        Ok(())
    }

    fn write_highlight(
        &mut self,
        name: &str,
        kind: SystemKind,
        traj: &TrajectorySeries,
        profile: &BurstProfile,
    ) -> Result<()> {
        let mask = profile.union_mask();
        let (start, count) = densest_window(&mask, self.cfg.highlight_length);
        let end = (start + self.cfg.highlight_length.min(mask.len())).min(traj.len() - 1);
        let (a, b, proj) = projection(kind);
        let window: Vec<[f64; 2]> = traj.states[start..=end].iter().map(proj).collect();
        let mut flagged = Vec::new();
        let mut t = start;
        while t < end {
            if mask[t] {
                let run_start = t;
                while t < end && mask[t] {
                    t += 1;
                }
                flagged.push(traj.states[run_start..=t].iter().map(proj).collect());
            } else {
                t += 1;
            }
        }
        let path = self.out.path(&format!("{name}.csv"));
        self.out.write(&format!("{name}.csv"), |w| {
            let io = |e| CliError::io(&path, e);
            writeln!(w, "t,x,y,z,alert").map_err(io)?;
            for i in start..=end {
                let s = traj.states[i];
                let alert = mask.get(i).copied().unwrap_or(false);
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    chaosbayes::fmt_f64(traj.time(i)),
                    chaosbayes::fmt_f64(s.x),
                    chaosbayes::fmt_f64(s.y),
                    chaosbayes::fmt_f64(s.z),
                    u8::from(alert)
                )
                .map_err(io)?;
            }
            Ok(())
        })?;
        let plot = Plot::new(
            format!(
                "Short-orbit highlight ({} alerts in steps {start}..{end})",
                count
            ),
            a,
            b,
            PlotData::HighlightedOrbit {
                orbit: self.orbit_points(kind, traj),
                window,
                flagged,
            },
        );
        self.plot(&format!("{name}.svg"), &plot)?;
        self.summary.put(format!("{name}.start"), start);
        self.summary.put(format!("{name}.alerts"), count);
        Ok(())
    }

    fn write_chain(&mut self, prefix: &str, kind: SystemKind, chain: &ChainRecord) -> Result<()> {
        self.out
            .write_csv(&format!("{prefix}_chain.csv"), |w| chain.write_csv(w))?;
        let names = kind.param_names();
        let tail = if chain.burn_in < chain.len() {
            &chain.samples[chain.burn_in..]
        } else {
            &chain.samples[..]
        };
        let cloud = tail.iter().map(|t| [t[0], t[1]]).collect();
        let plot = Plot::new(
            format!("Posterior cloud ({prefix})"),
            names[0],
            names[1],
            PlotData::Scatter(cloud),
        );
        self.plot(&format!("{prefix}_posterior.svg"), &plot)?;
        let series = (0..3)
            .map(|j| {
                Series::new(
                    names[j],
                    chain
                        .samples
                        .iter()
                        .enumerate()
                        .map(|(i, t)| [(i + 1) as f64, t[j]])
                        .collect(),
                )
            })
            .collect();
        self.plot(
            &format!("{prefix}_trace.svg"),
            &Plot::new(
                format!("MH trace ({prefix})"),
                "iteration",
                "parameter",
                PlotData::Line(series),
            ),
        )?;
        let d: Vec<[f64; 2]> = chain
            .d_trace
            .iter()
            .enumerate()
            .map(|(i, d)| [(i + 1) as f64, *d])
            .collect();
        self.plot(
            &format!("{prefix}_dtrace.svg"),
            &Plot::new(
                format!("D-trace ({prefix})"),
                "iteration",
                "d",
                PlotData::Line(vec![Series::new("d", d)]),
            ),
        )?;

        self.summary.put(format!("{prefix}.system"), kind.name());
        self.summary
            .put(format!("{prefix}.iterations"), chain.len());
        self.summary
            .num(format!("{prefix}.acceptance"), chain.acceptance_rate);
        self.summary.num(
            format!("{prefix}.acceptance_after_burn_in"),
            chain.post_burn_in_acceptance(),
        );
        let median = chain.posterior_median();
        for (n, m) in names.iter().zip(median) {
            self.summary.num(format!("{prefix}.median.{n}"), m);
        }
        self.summary
            .list(format!("{prefix}.initial"), &chain.initial.theta);
        self.summary.list(
            format!("{prefix}.final_step_scales"),
            &chain.final_proposal.step_scales,
        );
        Ok(())
    }

    /// Model A on `observed`: frozen section statistics, chain, posterior and trace plots.
    fn model_a(
        &mut self,
        prefix: &str,
        kind: SystemKind,
        observed: &TrajectorySeries,
    ) -> Result<ChainRecord> {
        let cloud = extract_section(observed, &self.cfg.model_a.plane);
        let stats = section_stats(&cloud)?;
        let scorer = PoincareMahalanobis {
            kind,
            simulation: self.cfg.simulation(kind),
            observed: stats,
            config: self.cfg.model_a,
        };
        let chain = run_chain(
            &scorer,
            self.cfg.prior(kind),
            kind,
            &chain_config(self.cfg, kind)?,
        )?;
        self.write_chain(prefix, kind, &chain)?;
        Ok(chain)
    }

    /// Model B on `observed`: burst profile, τ, chain, highlight, D-trace and reconstruction.
    fn model_b(
        &mut self,
        prefix: &str,
        kind: SystemKind,
        observed: &TrajectorySeries,
    ) -> Result<ChainRecord> {
        let cfg = self.cfg;
        let b = &cfg.model_b;
        let series = series_from_trajectory(observed, b.channel);
        let (profile, observed_summary) = summarize(&series, &b.bursts)?;
        self.out
            .write_csv(&format!("{prefix}_observed_bursts.csv"), |w| {
                profile.write_csv(w)
            })?;
        self.summary
            .list(format!("{prefix}.observed_summary"), &observed_summary.0);

        let mut scorer = BurstAbc {
            kind,
            simulation: self.cfg.simulation(kind),
            observed: observed_summary,
            config: ModelBConfig {
                bursts: b.bursts.clone(),
                weights: b.weights.clone(),
                tau: 1.0,
                channel: b.channel,
            },
        };
        let prior = cfg.prior(kind);
        scorer.config.tau = match b.tau {
            Tau::Fixed(t) => t,
            Tau::Auto => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(PILOT_STREAM);
                scorer.calibrate_tau(prior, b.pilots, b.tau_quantile, &mut rng)?
            }
        };
        scorer.config.validate()?;
        self.summary.num(format!("{prefix}.tau"), scorer.config.tau);
        self.summary.put(
            format!("{prefix}.tau_source"),
            match b.tau {
                Tau::Fixed(_) => "fixed".to_string(),
                Tau::Auto => format!("quantile {:?} of {} pilots", b.tau_quantile, b.pilots),
            },
        );

        let chain = run_chain(&scorer, prior, kind, &chain_config(cfg, kind)?)?;
        self.write_chain(prefix, kind, &chain)?;
        self.write_highlight(&format!("{prefix}_highlight"), kind, observed, &profile)?;

        let median = chain.posterior_median();
        let system = kind.with_params(median)?;
        let recon = self.cfg.simulation(kind).run(&system)?;
        self.out
            .write_csv(&format!("{prefix}_reconstruction.csv"), |w| {
                recon.write_csv(w)
            })?;
        let (a, bl, _) = projection(kind);
        let plot = Plot::new(
            format!("Attractor at posterior median {median:.3?}"),
            a,
            bl,
            PlotData::Line(vec![
                Series::new("observed", self.orbit_points(kind, observed)),
                Series::new("posterior median", self.orbit_points(kind, &recon)),
            ]),
        );
        self.plot(&format!("{prefix}_reconstruction.svg"), &plot)?;
        self.summary.num(
            format!("{prefix}.median_distance"),
            scorer
                .evaluate(&median)
                .map(|e| e.distance)
                .unwrap_or(f64::NAN),
        );
        Ok(chain)
    }

    fn simulate_cmd(&mut self) -> Result<()> {
        let kind = self.cfg.system;
        let traj = self.simulate(kind)?;
        self.write_trajectory(
            "trajectory",
            kind,
            &traj,
            &format!("{} attractor", kind.name()),
        )
    }

    fn section_cmd(&mut self) -> Result<()> {
        let kind = self.cfg.system;
        let traj = self.observed(kind)?;
        let cloud = self.write_section("section", kind, &traj)?;
        section_stats(&cloud)?;
        Ok(())
    }

    fn bursts_cmd(&mut self) -> Result<()> {
        let kind = self.cfg.system;
        let traj = self.observed(kind)?;
        let b = &self.cfg.model_b.clone();
        let series = series_from_trajectory(&traj, b.channel);
        let (profile, summary) = summarize(&series, &b.bursts)?;
        self.out.write_csv("bursts.csv", |w| profile.write_csv(w))?;
        self.summary.list("summary_vector", &summary.0);
        for (w, alerts) in &profile.per_window {
            self.summary.put(format!("alerts.{w}"), alerts.len());
        }
        self.summary.put("alerts.union", profile.union_alerts.len());
        self.write_highlight("highlight", kind, &traj, &profile)?;
        self.write_correlation("correlation", &traj)
    }

    fn baseline_cmd(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (series, spans) = match cfg.baseline.source {
            BaselineSource::Trajectory => {
                let traj = self.observed(cfg.system)?;
                (series_from_trajectory(&traj, cfg.model_b.channel), None)
            }
            BaselineSource::Injection => {
                let inj = BurstInjection::multi_scale(cfg.baseline.amplitude);
                let s = inj.generate(cfg.seed);
                let path = self.out.path("series.csv");
                self.out.write("series.csv", |w| {
                    let io = |e| CliError::io(&path, e);
                    writeln!(w, "t,value").map_err(io)?;
                    for (t, v) in s.iter().enumerate() {
                        writeln!(w, "{t},{}", chaosbayes::fmt_f64(*v)).map_err(io)?;
                    }
                    Ok(())
                })?;
                (s, Some(inj.spans))
            }
        };
        let report = compare_fib_vs_fixed(&series, &cfg.model_b.bursts, cfg.baseline.threshold)?;
        self.out
            .write_csv("baseline.csv", |w| report.write_csv(w))?;

        let defined = |v: &[Option<f64>]| -> Vec<[f64; 2]> {
            v.iter()
                .enumerate()
                .filter_map(|(t, x)| x.map(|x| [t as f64, x]))
                .collect()
        };
        let vol = report
            .windows
            .iter()
            .map(|w| Series::new(format!("window {w}"), defined(&report.rolling_vol[w])))
            .filter(|s| !s.points.is_empty())
            .collect::<Vec<_>>();
        if !vol.is_empty() {
            self.plot(
                "baseline_volatility.svg",
                &Plot::new("Rolling volatility", "t", "std", PlotData::Line(vol)),
            )?;
        }
        let mut z: Vec<Series> = report
            .windows
            .iter()
            .map(|w| Series::new(format!("z, window {w}"), defined(&report.z_scores[w])))
            .filter(|s| !s.points.is_empty())
            .collect();
        if !z.is_empty() {
            let last = (report.len - 1) as f64;
            let th = cfg.baseline.threshold;
            z.push(Series::new(format!("+{th}"), vec![[0.0, th], [last, th]]));
            z.push(Series::new(format!("-{th}"), vec![[0.0, -th], [last, -th]]));
            self.plot(
                "baseline_zscores.svg",
                &Plot::new("Standardized returns", "t", "z", PlotData::Line(z)),
            )?;
        }
        let mut rows = Vec::new();
        for &t in &report.fibonacci.union_alerts {
            rows.push([t as f64, 0.0]);
        }
        for (i, w) in report.windows.iter().enumerate() {
            rows.extend(
                report.z_alerts[w]
                    .iter()
                    .map(|&t| [t as f64, (i + 1) as f64]),
            );
        }
        if !rows.is_empty() {
            let label = std::iter::once("0 = Fibonacci union".to_string())
                .chain(
                    report
                        .windows
                        .iter()
                        .enumerate()
                        .map(|(i, w)| format!("{} = z{w}", i + 1)),
                )
                .collect::<Vec<_>>()
                .join(", ");
            self.plot(
                "baseline_alerts.svg",
                &Plot::new(
                    "Fibonacci vs fixed-window alerts",
                    "t",
                    label,
                    PlotData::Scatter(rows),
                ),
            )?;
        }

        let c = &report.comparison;
        self.summary.put("series.len", report.len);
        self.summary.put("alerts.fib_union", c.union_count);
        for (w, n) in &c.fixed_counts {
            self.summary.put(format!("alerts.z{w}"), n);
        }
        for (w, j) in &c.union_vs_fixed {
            self.summary.num(format!("jaccard.fib_union.z{w}"), *j);
        }
        for ((a, b), j) in &c.fixed_vs_fixed {
            self.summary.num(format!("jaccard.z{a}.z{b}"), *j);
        }
        if let Some(spans) = spans {
            let fmt = |hits: Vec<bool>| {
                hits.iter()
                    .map(|h| u8::from(*h).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            self.summary.put(
                "episodes",
                spans
                    .iter()
                    .map(|s| format!("{}..{}", s.start, s.end))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            self.summary.put(
                "episodes.fib_union",
                fmt(episodes_detected(&report.fibonacci.union_alerts, &spans)),
            );
            for (w, alerts) in &report.z_alerts {
                self.summary.put(
                    format!("episodes.z{w}"),
                    fmt(episodes_detected(alerts, &spans)),
                );
            }
        }
        Ok(())
    }

    fn fit_a_cmd(&mut self) -> Result<()> {
        let kind = self.cfg.system;
        let traj = self.observed(kind)?;
        self.write_section("observed_section", kind, &traj)?;
        self.model_a("model_a", kind, &traj)?;
        Ok(())
    }

    fn fit_b_cmd(&mut self) -> Result<()> {
        let kind = self.cfg.system;
        let traj = self.observed(kind)?;
        self.model_b("model_b", kind, &traj)?;
        Ok(())
    }

    fn lorenz_lorenz(&mut self) -> Result<()> {
        let kind = SystemKind::Lorenz;
        let traj = self.simulate(kind)?;
        self.write_trajectory("observed_trajectory", kind, &traj, "Observed Lorenz orbit")?;
        self.write_section("observed_section", kind, &traj)?;
        self.write_correlation("observed_correlation", &traj)?;
        self.model_a("model_a", kind, &traj)?;
        self.model_b("model_b", kind, &traj)?;
        Ok(())
    }

    fn lorenz_rossler(&mut self) -> Result<()> {
        let lorenz = self.simulate(SystemKind::Lorenz)?;
        self.write_trajectory(
            "observed_trajectory",
            SystemKind::Lorenz,
            &lorenz,
            "Observed Lorenz orbit",
        )?;
        self.write_section("observed_section", SystemKind::Lorenz, &lorenz)?;
        self.model_a("model_a", SystemKind::Lorenz, &lorenz)?;
        let rossler = self.simulate(SystemKind::Rossler)?;
        self.write_trajectory(
            "rossler_trajectory",
            SystemKind::Rossler,
            &rossler,
            "Rössler attractor (x–y)",
        )?;
        self.write_correlation("rossler_correlation", &rossler)?;
        self.model_b("model_b", SystemKind::Rossler, &rossler)?;
        Ok(())
    }
}

/// Run `experiment` with a resolved configuration.
///
/// The output directory is created and probed for writability before any
/// computation; the manifest is the first artifact written.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<RunReport> {
    let wants_input = !matches!(
        experiment,
        Experiment::Simulate | Experiment::LorenzLorenz | Experiment::LorenzRossler
    ) && !(experiment == Experiment::Baseline
        && cfg.baseline.source == BaselineSource::Injection);
    if cfg.input.is_some() && !wants_input {
        return Err(CliError::Config(format!(
            "`{experiment}` does not take an input trajectory"
        )));
    }
    let mut out = OutputDir::prepare(&cfg.out)?;
    out.write_text("manifest.txt", &cfg.manifest(experiment))?;
    let mut run = Run {
        cfg,
        out,
        summary: Summary::default(),
    };
    run.summary.put("experiment", experiment);
    run.summary.put("seed", cfg.seed);
    match experiment {
        Experiment::Simulate => run.simulate_cmd()?,
        Experiment::Section => run.section_cmd()?,
        Experiment::Bursts => run.bursts_cmd()?,
        Experiment::Baseline => run.baseline_cmd()?,
        Experiment::FitA => run.fit_a_cmd()?,
        Experiment::FitB => run.fit_b_cmd()?,
        Experiment::LorenzLorenz => run.lorenz_lorenz()?,
        Experiment::LorenzRossler => run.lorenz_rossler()?,
    }
    let text = run.summary.render(experiment);
    run.out.write_text("summary.txt", &text)?;
    Ok(RunReport {
        experiment,
        out: run.out.root().to_path_buf(),
        artifacts: run.out.written().to_vec(),
        summary: run.summary.0,
    })
}
