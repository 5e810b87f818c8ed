//! Flat `key = value` configuration with dotted keys, resolved into typed settings.
//!
//! Every key has a default; the resolved configuration can be written back as a
//! manifest that reproduces the run when fed to `--config`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chaosbayes::dynamics::{LorenzParams, RosslerParams, Simulation, State3, SystemKind};
use chaosbayes::inference::{ModelAConfig, PriorSpec, ProposalState, StudentTPrior};
use chaosbayes::recurrence::{
    BurstConfig, Channel, ScalingRegion, WeightVector, FIBONACCI_WINDOWS, FIXED_WINDOWS,
};
use chaosbayes::sectioning::{CrossingDirection, SectionPlane};

use crate::error::{CliError, Result};

/// The experiment a subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Section,
    Bursts,
    Baseline,
    FitA,
    FitB,
    LorenzLorenz,
    LorenzRossler,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Section => "section",
            Experiment::Bursts => "bursts",
            Experiment::Baseline => "baseline",
            Experiment::FitA => "fit-a",
            Experiment::FitB => "fit-b",
            Experiment::LorenzLorenz => "exp-ll",
            Experiment::LorenzRossler => "exp-lr",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unvalidated key/value pairs from a config file and command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// One `key = value` per line; blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    n + 1
                ))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", n + 1)));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    n + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Set or replace a value; later calls win.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    /// Parse a `key=value` override as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| {
            CliError::Config(format!("override `{pair}` is not of the form key=value"))
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Config(format!(
                "override `{pair}` has an empty key"
            )));
        }
        self.set(k, v.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Kernel tolerance for Model B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    /// Quantile of prior-predictive pilot distances.
    Auto,
    Fixed(f64),
}

/// Where the baseline comparison takes its series from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineSource {
    /// First differences of the observed trajectory.
    Trajectory,
    /// Seeded Gaussian noise with injected volatility bursts.
    Injection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSettings {
    pub target: f64,
    pub rate: f64,
    /// Initial random-walk step as a fraction of each prior scale.
    pub rel_step: f64,
    pub init_attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBSettings {
    pub bursts: BurstConfig,
    pub weights: WeightVector,
    pub tau: Tau,
    pub tau_quantile: f64,
    pub pilots: usize,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionSettings {
    /// Trajectory states (evenly strided) fed to the correlation integral.
    pub points: usize,
    pub radii: usize,
    /// Pair subsample used to place the radii grid.
    pub pairs: usize,
    pub region: ScalingRegion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSettings {
    pub threshold: f64,
    pub source: BaselineSource,
    pub amplitude: f64,
}

/// Fully resolved and validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    /// System used by the single-system subcommands.
    pub system: SystemKind,
    pub lorenz: LorenzParams,
    pub rossler: RosslerParams,
    pub lorenz_dt: f64,
    pub rossler_dt: f64,
    pub initial: State3,
    pub steps: usize,
    pub transient: usize,
    pub lorenz_prior: PriorSpec,
    pub rossler_prior: PriorSpec,
    pub proposal: ProposalSettings,
    pub model_a: ModelAConfig,
    pub model_b: ModelBSettings,
    pub baseline: BaselineSettings,
    pub highlight_length: usize,
    pub dimension: DimensionSettings,
    pub plot_max_points: usize,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::resolve(&RawConfig::default()).expect("built-in defaults are valid")
    }
}

/// Reads typed values out of a [`RawConfig`], remembering which keys were used.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn value(&mut self, key: &'static str) -> Option<&'a str> {
        self.used.insert(key);
        self.raw.get(key)
    }

    fn parsed<T: FromStr>(&mut self, key: &'static str, default: T, what: &str) -> Result<T> {
        match self.value(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("`{key}`: expected {what}, got `{v}`"))),
        }
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v: f64 = self.parsed(key, default, "a number")?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{key}` must be finite, got {v}")));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if v <= 0.0 {
            return Err(CliError::Config(format!(
                "`{key}` must be positive, got {v}"
            )));
        }
        Ok(v)
    }

    fn usize(&mut self, key: &'static str, default: usize) -> Result<usize> {
        self.parsed(key, default, "a non-negative integer")
    }

    fn at_least(&mut self, key: &'static str, default: usize, min: usize) -> Result<usize> {
        let v = self.usize(key, default)?;
        if v < min {
            return Err(CliError::Config(format!(
                "`{key}` must be >= {min}, got {v}"
            )));
        }
        Ok(v)
    }

    fn list<T: FromStr>(
        &mut self,
        key: &'static str,
        default: Vec<T>,
        what: &str,
    ) -> Result<Vec<T>> {
        match self.value(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        CliError::Config(format!(
                            "`{key}`: expected a comma-separated list of {what}, got `{v}`"
                        ))
                    })
                })
                .collect(),
        }
    }

    fn finish(self) -> Result<()> {
        let unknown: Vec<&str> = self
            .raw
            .entries
            .keys()
            .map(String::as_str)
            .filter(|k| !self.used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown key(s): {}",
                unknown.join(", ")
            )))
        }
    }
}

fn invalid(context: &str) -> impl FnOnce(chaosbayes::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

/// Keys of the form `prior.<system>.<param>.<field>`, leaked once so the
/// reader can track them like the literal keys.
fn prior_key(kind: SystemKind, param: &str, field: &str) -> &'static str {
    use std::sync::OnceLock;
    static KEYS: OnceLock<BTreeMap<String, &'static str>> = OnceLock::new();
    let keys = KEYS.get_or_init(|| {
        let mut m = BTreeMap::new();
        for kind in [SystemKind::Lorenz, SystemKind::Rossler] {
            for p in kind.param_names() {
                for f in PRIOR_FIELDS {
                    let k = format!("prior.{}.{p}.{f}", kind.name());
                    let leaked: &'static str = Box::leak(k.clone().into_boxed_str());
                    m.insert(k, leaked);
                }
            }
        }
        m
    });
    keys[&format!("prior.{}.{param}.{field}", kind.name())]
}

const PRIOR_FIELDS: [&str; 4] = ["location", "scale", "df", "lower"];

/// Default prior: Student-t centred on the canonical value, scale 30% of it, ν = 3, truncated at 0.
pub const PRIOR_REL_SCALE: f64 = 0.3;
pub const PRIOR_DF: f64 = 3.0;

fn read_prior(r: &mut Reader<'_>, kind: SystemKind) -> Result<PriorSpec> {
    let canonical = kind.canonical();
    let mut params = Vec::with_capacity(3);
    for (p, c) in kind.param_names().into_iter().zip(canonical) {
        let location = r.f64(prior_key(kind, p, "location"), c)?;
        let scale = r.f64(prior_key(kind, p, "scale"), PRIOR_REL_SCALE * c.abs())?;
        let df = r.f64(prior_key(kind, p, "df"), PRIOR_DF)?;
        let lower: f64 = r.parsed(prior_key(kind, p, "lower"), 0.0, "a number or -inf")?;
        let context = format!("prior.{}.{p}", kind.name());
        params.push(StudentTPrior::new(location, scale, df, lower).map_err(invalid(&context))?);
    }
    Ok(PriorSpec {
        params: [params[0], params[1], params[2]],
    })
}

impl ExperimentConfig {
    /// Apply defaults for every missing key and validate the result.
    pub fn resolve(raw: &RawConfig) -> Result<Self> {
        let mut r = Reader {
            raw,
            used: BTreeSet::new(),
        };
        let seed: u64 = r.parsed("seed", 42, "an unsigned integer")?;
        let iterations = r.at_least("iterations", 500, 1)?;
        let burn_in = r.usize("burn_in", 100)?;
        let system: SystemKind = r.parsed("system", SystemKind::Lorenz, "`lorenz` or `rossler`")?;

        let l = LorenzParams::CANONICAL;
        let lorenz = LorenzParams::new(
            r.f64("lorenz.sigma", l.sigma)?,
            r.f64("lorenz.rho", l.rho)?,
            r.f64("lorenz.beta", l.beta)?,
        )
        .map_err(invalid("lorenz"))?;
        let lorenz_dt = r.positive("lorenz.dt", SystemKind::Lorenz.default_dt())?;
        let c = RosslerParams::CANONICAL;
        let rossler = RosslerParams::new(
            r.f64("rossler.a", c.a)?,
            r.f64("rossler.b", c.b)?,
            r.f64("rossler.c", c.c)?,
        )
        .map_err(invalid("rossler"))?;
        let rossler_dt = r.positive("rossler.dt", SystemKind::Rossler.default_dt())?;

        let initial = State3::new(
            r.f64("integration.x0", 1.0)?,
            r.f64("integration.y0", 1.0)?,
            r.f64("integration.z0", 1.0)?,
        );
        let steps = r.at_least("integration.steps", Simulation::DEFAULT_STEPS, 2)?;
        let transient = r.usize("integration.transient", Simulation::DEFAULT_TRANSIENT)?;
        if transient + 2 > steps {
            return Err(CliError::Config(format!(
                "integration.steps ({steps}) must exceed integration.transient ({transient}) by at least 2"
            )));
        }

        let lorenz_prior = read_prior(&mut r, SystemKind::Lorenz)?;
        let rossler_prior = read_prior(&mut r, SystemKind::Rossler)?;

        let proposal = ProposalSettings {
            target: r.f64("proposal.target", 0.234)?,
            rate: r.f64("proposal.rate", 1.0)?,
            rel_step: r.positive("proposal.rel_step", 0.1)?,
            init_attempts: r.at_least("proposal.init_attempts", 100, 1)?,
        };
        ProposalState::new([1.0; 3], proposal.target, proposal.rate)
            .map_err(invalid("proposal"))?;

        let normal: Vec<f64> = r.list("section.normal", vec![0.0, 1.0, 0.0], "numbers")?;
        if normal.len() != 3 {
            return Err(CliError::Config(format!(
                "`section.normal` needs 3 components, got {}",
                normal.len()
            )));
        }
        let direction: CrossingDirection = r.parsed(
            "section.direction",
            CrossingDirection::Positive,
            "`positive`, `negative` or `both`",
        )?;
        let plane = SectionPlane::new(
            State3::new(normal[0], normal[1], normal[2]),
            r.f64("section.offset", 0.0)?,
            direction,
        )
        .map_err(invalid("section"))?;
        let defaults_a = ModelAConfig::default();
        let model_a = ModelAConfig {
            plane,
            gamma: r.f64("modelA.gamma", defaults_a.gamma)?,
            df: r.f64("modelA.df", defaults_a.df)?,
        };
        model_a.validate().map_err(invalid("modelA"))?;

        let bursts = BurstConfig {
            k: r.positive("modelB.k", 3.0)?,
            windows: r.list(
                "modelB.windows",
                FIBONACCI_WINDOWS.to_vec(),
                "window lengths",
            )?,
            fixed_windows: r.list(
                "modelB.fixed_windows",
                FIXED_WINDOWS.to_vec(),
                "window lengths",
            )?,
        };
        if bursts.windows.is_empty()
            || bursts
                .windows
                .iter()
                .chain(&bursts.fixed_windows)
                .any(|w| *w < 3)
        {
            return Err(CliError::Config(
                "`modelB.windows` must be nonempty and every window must be >= 3".into(),
            ));
        }
        let longest = bursts
            .windows
            .iter()
            .chain(&bursts.fixed_windows)
            .max()
            .copied()
            .unwrap_or(0);
        if steps - transient - 1 < longest {
            return Err(CliError::Config(format!(
                "the diagnostic series has {} values, shorter than the longest window {longest}",
                steps - transient - 1
            )));
        }
        let weights: Vec<f64> =
            r.list("modelB.weights", vec![1.0; bursts.summary_len()], "numbers")?;
        if weights.len() != bursts.summary_len() {
            return Err(CliError::Config(format!(
                "`modelB.weights` needs {} entries (one per summary component), got {}",
                bursts.summary_len(),
                weights.len()
            )));
        }
        let weights = WeightVector::new(weights).map_err(invalid("modelB.weights"))?;
        let tau = match r.value("modelB.tau") {
            None | Some("auto") => Tau::Auto,
            Some(v) => match v.parse::<f64>() {
                Ok(t) if t.is_finite() && t > 0.0 => Tau::Fixed(t),
                _ => {
                    return Err(CliError::Config(format!(
                        "`modelB.tau`: expected `auto` or a positive number, got `{v}`"
                    )))
                }
            },
        };
        let tau_quantile = r.f64("modelB.tau_quantile", 0.2)?;
        if !(0.0..=1.0).contains(&tau_quantile) {
            return Err(CliError::Config(format!(
                "`modelB.tau_quantile` must lie in [0, 1], got {tau_quantile}"
            )));
        }
        let model_b = ModelBSettings {
            bursts,
            weights,
            tau,
            tau_quantile,
            pilots: r.at_least("modelB.pilots", 50, 1)?,
            channel: r.parsed("modelB.channel", Channel::X, "`x`, `y` or `z`")?,
        };

        let baseline = BaselineSettings {
            threshold: r.positive("baseline.threshold", 3.0)?,
            source: match r.value("baseline.source") {
                None | Some("trajectory") => BaselineSource::Trajectory,
                Some("injection") => BaselineSource::Injection,
                Some(v) => {
                    return Err(CliError::Config(format!(
                        "`baseline.source`: expected `trajectory` or `injection`, got `{v}`"
                    )))
                }
            },
            amplitude: r.positive("baseline.amplitude", 6.0)?,
        };

        let highlight_length = r.at_least("highlight.length", 300, 1)?;
        let lower = r.positive("dimension.lower", ScalingRegion::default().lower)?;
        let upper = r.positive("dimension.upper", ScalingRegion::default().upper)?;
        if !(lower < upper && upper <= 1.0) {
            return Err(CliError::Config(format!(
                "dimension scaling band needs 0 < lower < upper <= 1, got [{lower}, {upper}]"
            )));
        }
        let dimension = DimensionSettings {
            points: r.at_least("dimension.points", 5000, 2)?,
            radii: r.at_least("dimension.radii", 24, 2)?,
            pairs: r.at_least("dimension.pairs", 2000, 2)?,
            region: ScalingRegion { lower, upper },
        };
        let plot_max_points = r.at_least("plot.max_points", 5000, 2)?;
        let input = r
            .value("input")
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        let out = PathBuf::from(r.value("out").filter(|v| !v.is_empty()).unwrap_or("out"));
        r.finish()?;

        Ok(Self {
            seed,
            iterations,
            burn_in,
            system,
            lorenz,
            rossler,
            lorenz_dt,
            rossler_dt,
            initial,
            steps,
            transient,
            lorenz_prior,
            rossler_prior,
            proposal,
            model_a,
            model_b,
            baseline,
            highlight_length,
            dimension,
            plot_max_points,
            input,
            out,
        })
    }

    /// Every effective setting as `(key, value)`, in manifest order. Numbers use
    /// the shortest representation that parses back to the same value.
    pub fn entries(&self) -> Vec<(String, String)> {
        fn num(v: f64) -> String {
            format!("{v:?}")
        }
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        }
        let mut e: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| e.push((k.to_string(), v));
        push("seed", self.seed.to_string());
        push("iterations", self.iterations.to_string());
        push("burn_in", self.burn_in.to_string());
        push("system", self.system.name().to_string());
        push("lorenz.sigma", num(self.lorenz.sigma));
        push("lorenz.rho", num(self.lorenz.rho));
        push("lorenz.beta", num(self.lorenz.beta));
        push("lorenz.dt", num(self.lorenz_dt));
        push("rossler.a", num(self.rossler.a));
        push("rossler.b", num(self.rossler.b));
        push("rossler.c", num(self.rossler.c));
        push("rossler.dt", num(self.rossler_dt));
        push("integration.x0", num(self.initial.x));
        push("integration.y0", num(self.initial.y));
        push("integration.z0", num(self.initial.z));
        push("integration.steps", self.steps.to_string());
        push("integration.transient", self.transient.to_string());
        for (kind, prior) in [
            (SystemKind::Lorenz, &self.lorenz_prior),
            (SystemKind::Rossler, &self.rossler_prior),
        ] {
            for (p, t) in kind.param_names().into_iter().zip(&prior.params) {
                let base = format!("prior.{}.{p}", kind.name());
                push(&format!("{base}.location"), num(t.location));
                push(&format!("{base}.scale"), num(t.scale));
                push(&format!("{base}.df"), num(t.df));
                push(&format!("{base}.lower"), num(t.lower));
            }
        }
        push("proposal.target", num(self.proposal.target));
        push("proposal.rate", num(self.proposal.rate));
        push("proposal.rel_step", num(self.proposal.rel_step));
        push(
            "proposal.init_attempts",
            self.proposal.init_attempts.to_string(),
        );
        let n = self.model_a.plane.normal();
        push("section.normal", list(&[num(n.x), num(n.y), num(n.z)]));
        push("section.offset", num(self.model_a.plane.offset()));
        push(
            "section.direction",
            self.model_a.plane.direction().to_string(),
        );
        push("modelA.gamma", num(self.model_a.gamma));
        push("modelA.df", num(self.model_a.df));
        let b = &self.model_b;
        push("modelB.k", num(b.bursts.k));
        push("modelB.windows", list(&b.bursts.windows));
        push("modelB.fixed_windows", list(&b.bursts.fixed_windows));
        push(
            "modelB.weights",
            list(
                &b.weights
                    .as_slice()
                    .iter()
                    .map(|w| num(*w))
                    .collect::<Vec<_>>(),
            ),
        );
        push(
            "modelB.tau",
            match b.tau {
                Tau::Auto => "auto".to_string(),
                Tau::Fixed(t) => num(t),
            },
        );
        push("modelB.tau_quantile", num(b.tau_quantile));
        push("modelB.pilots", b.pilots.to_string());
        push("modelB.channel", b.channel.to_string());
        push("baseline.threshold", num(self.baseline.threshold));
        push(
            "baseline.source",
            match self.baseline.source {
                BaselineSource::Trajectory => "trajectory",
                BaselineSource::Injection => "injection",
            }
            .to_string(),
        );
        push("baseline.amplitude", num(self.baseline.amplitude));
        push("highlight.length", self.highlight_length.to_string());
        push("dimension.points", self.dimension.points.to_string());
        push("dimension.radii", self.dimension.radii.to_string());
        push("dimension.pairs", self.dimension.pairs.to_string());
        push("dimension.lower", num(self.dimension.region.lower));
        push("dimension.upper", num(self.dimension.region.upper));
        push("plot.max_points", self.plot_max_points.to_string());
        if let Some(input) = &self.input {
            push("input", input.display().to_string());
        }
        push("out", self.out.display().to_string());
        e
    }

    /// Manifest text: a comment header followed by every effective setting.
    pub fn manifest(&self, experiment: Experiment) -> String {
        let mut s = format!(
            "# chaosbayes {} run manifest\n# experiment = {experiment}\n# replay with: chaosbayes {experiment} --config <this file>\n",
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn params(&self, kind: SystemKind) -> [f64; 3] {
        match kind {
            SystemKind::Lorenz => [self.lorenz.sigma, self.lorenz.rho, self.lorenz.beta],
            SystemKind::Rossler => [self.rossler.a, self.rossler.b, self.rossler.c],
        }
    }

    pub fn prior(&self, kind: SystemKind) -> &PriorSpec {
        match kind {
            SystemKind::Lorenz => &self.lorenz_prior,
            SystemKind::Rossler => &self.rossler_prior,
        }
    }

    pub fn simulation(&self, kind: SystemKind) -> Simulation {
        Simulation {
            initial: self.initial,
            dt: match kind {
                SystemKind::Lorenz => self.lorenz_dt,
                SystemKind::Rossler => self.rossler_dt,
            },
            steps: self.steps,
            transient: self.transient,
        }
    }

    /// Initial proposal: `rel_step` times each prior scale.
    pub fn proposal_state(&self, kind: SystemKind) -> Result<ProposalState> {
        let steps = self
            .prior(kind)
            .scales()
            .map(|s| s * self.proposal.rel_step);
        ProposalState::new(steps, self.proposal.target, self.proposal.rate)
            .map_err(invalid("proposal"))
    }
}
