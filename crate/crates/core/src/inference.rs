//! Heavy-tailed priors, random-walk Metropolis-Hastings and ABC-MCMC.
//!
//! Both models share one sampler. Each proposal is scored by a [`Scorer`]:
//!
//! * model A simulates the proposed system, takes its Poincaré section and
//!   turns the mean squared Mahalanobis distance to the frozen observed
//!   section into a Student-t shaped log pseudo-likelihood;
//! * model B simulates, builds the burst summary vector and uses the log of the
//!   Laplace kernel `exp(−d/τ)` on the weighted L1 distance as its log score.
//!
//! The per-parameter proposal scales adapt during burn-in by a Robbins-Monro
//! step on their logarithm and are frozen afterwards, leaving a symmetric
//! Gaussian random walk.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;

use crate::dynamics::{Simulation, SystemKind};
use crate::recurrence::{
    distance_b, series_from_trajectory, summarize, BurstConfig, Channel, SummaryVector,
    WeightVector,
};
use crate::sectioning::{discrepancy_a, extract_section, SectionPlane, SectionStats};
use crate::stats::quantile_sorted;
use crate::{fmt_f64, Error, Result};

/// A parameter triple: `(σ, ρ, β)` for Lorenz or `(a, b, c)` for Rössler.
pub type Theta = [f64; 3];

/// Cap on prior rejection draws before the truncation is declared infeasible.
pub const PRIOR_RETRY_CAP: usize = 100_000;

/// Student-t prior on one parameter, truncated to `(lower, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentTPrior {
    pub location: f64,
    pub scale: f64,
    pub df: f64,
    pub lower: f64,
}

impl StudentTPrior {
    pub fn new(location: f64, scale: f64, df: f64, lower: f64) -> Result<Self> {
        if !location.is_finite()
            || !(scale.is_finite() && scale > 0.0)
            || !(df > 0.0)
            || lower.is_nan()
        {
            return Err(Error::InvalidParameter(format!(
                "invalid Student-t prior (location {location}, scale {scale}, df {df}, lower {lower})"
            )));
        }
        Ok(Self {
            location,
            scale,
            df,
            lower,
        })
    }

    /// Unnormalized log density; `−∞` at or below the truncation bound.
    pub fn log_density(&self, x: f64) -> f64 {
        if !(x > self.lower) || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.location) / self.scale;
        -0.5 * (self.df + 1.0) * (z * z / self.df).ln_1p() - self.scale.ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub params: [StudentTPrior; 3],
}

impl PriorSpec {
    /// Priors located at the canonical parameters with `scale = rel_scale · |location|`,
    /// truncated at zero.
    pub fn centered(kind: SystemKind, rel_scale: f64, df: f64) -> Result<Self> {
        let loc = kind.canonical();
        let mk = |l: f64| StudentTPrior::new(l, rel_scale * l.abs(), df, 0.0);
        Ok(Self {
            params: [mk(loc[0])?, mk(loc[1])?, mk(loc[2])?],
        })
    }

    /// Draw each parameter from its truncated Student-t by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Theta> {
        let mut theta = [0.0; 3];
        for (slot, p) in theta.iter_mut().zip(&self.params) {
            let t = StudentT::new(p.df)
                .map_err(|e| Error::InvalidParameter(format!("student-t df {}: {e}", p.df)))?;
            *slot = (0..PRIOR_RETRY_CAP)
                .map(|_| p.location + p.scale * t.sample(rng))
                .find(|x| *x > p.lower)
                .ok_or(Error::PriorRetriesExhausted(PRIOR_RETRY_CAP))?;
        }
        Ok(theta)
    }

    pub fn log_density(&self, theta: &Theta) -> f64 {
        self.params
            .iter()
            .zip(theta)
            .map(|(p, x)| p.log_density(*x))
            .sum()
    }

    pub fn scales(&self) -> Theta {
        self.params.map(|p| p.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelAConfig {
    pub plane: SectionPlane,
    /// Likelihood scale γ.
    pub gamma: f64,
    /// Likelihood degrees of freedom ν_L.
    pub df: f64,
}

impl Default for ModelAConfig {
    fn default() -> Self {
        Self {
            plane: SectionPlane::y_zero(),
            gamma: 1.0,
            df: 3.0,
        }
    }
}

impl ModelAConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) || !(self.df.is_finite() && self.df > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "model A needs gamma > 0 and df > 0, got {} / {}",
                self.gamma, self.df
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBConfig {
    pub bursts: BurstConfig,
    pub weights: WeightVector,
    /// Kernel tolerance τ.
    pub tau: f64,
    pub channel: Channel,
}

impl ModelBConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if self.weights.as_slice().len() != self.bursts.summary_len() {
            return Err(Error::LengthMismatch {
                left: self.weights.as_slice().len(),
                right: self.bursts.summary_len(),
            });
        }
        Ok(())
    }
}

/// `−((ν+1)/2) · ln(1 + score / (ν γ²))`.
pub fn log_pseudo_likelihood_a(score: f64, cfg: &ModelAConfig) -> f64 {
    -0.5 * (cfg.df + 1.0) * (score / (cfg.df * cfg.gamma * cfg.gamma)).ln_1p()
}

/// `K_τ(d) = exp(−d/τ)`.
pub fn laplace_kernel(d: f64, tau: f64) -> f64 {
    (-d / tau).exp()
}

/// Result of scoring one parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Log (pseudo-)likelihood term added to the log prior.
    pub log_likelihood: f64,
    /// Discrepancy recorded in the D-trace: mean D² for model A, d for model B.
    pub distance: f64,
}

pub trait Scorer: Sync {
    fn evaluate(&self, theta: &Theta) -> Result<Evaluation>;
}

impl<F> Scorer for F
where
    F: Fn(&Theta) -> Result<Evaluation> + Sync,
{
    fn evaluate(&self, theta: &Theta) -> Result<Evaluation> {
        self(theta)
    }
}

/// Model A: simulate, section, compare with the frozen observed section statistics.
#[derive(Debug, Clone)]
pub struct PoincareMahalanobis {
    pub kind: SystemKind,
    pub simulation: Simulation,
    pub observed: SectionStats,
    pub config: ModelAConfig,
}

impl Scorer for PoincareMahalanobis {
    fn evaluate(&self, theta: &Theta) -> Result<Evaluation> {
        let system = self.kind.with_params(*theta)?;
        let traj = self.simulation.run(&system)?;
        let cloud = extract_section(&traj, &self.config.plane);
        let score = discrepancy_a(&cloud, &self.observed)?;
        Ok(Evaluation {
            log_likelihood: log_pseudo_likelihood_a(score, &self.config),
            distance: score,
        })
    }
}

/// Model B: simulate, summarize the burst profile, compare with the frozen observed summary.
#[derive(Debug, Clone)]
pub struct BurstAbc {
    pub kind: SystemKind,
    pub simulation: Simulation,
    pub observed: SummaryVector,
    pub config: ModelBConfig,
}

impl BurstAbc {
    pub fn distance(&self, theta: &Theta) -> Result<f64> {
        let system = self.kind.with_params(*theta)?;
        let traj = self.simulation.run(&system)?;
        let series = series_from_trajectory(&traj, self.config.channel);
        let (_, summary) = summarize(&series, &self.config.bursts)?;
        distance_b(&summary, &self.observed, &self.config.weights)
    }

    /// Distances of `pilots` prior-predictive simulations, in draw order.
    /// Failed simulations are skipped.
    pub fn pilot_distances<R: Rng + ?Sized>(
        &self,
        prior: &PriorSpec,
        pilots: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let draws = (0..pilots)
            .map(|_| prior.sample(rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(draws
            .par_iter()
            .map(|theta| self.distance(theta).ok())
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .filter(|d| d.is_finite())
            .collect())
    }

    /// τ as the `quantile` of the pilot distances. Falls back to the smallest
    /// positive pilot distance when the quantile is zero.
    pub fn calibrate_tau<R: Rng + ?Sized>(
        &self,
        prior: &PriorSpec,
        pilots: usize,
        quantile: f64,
        rng: &mut R,
    ) -> Result<f64> {
        let mut d = self.pilot_distances(prior, pilots, rng)?;
        if d.is_empty() {
            return Err(Error::InvalidParameter(
                "no pilot simulation produced a finite distance; cannot calibrate tau".into(),
            ));
        }
        d.sort_by(f64::total_cmp);
        let q = quantile_sorted(&d, quantile);
        if q > 0.0 {
            return Ok(q);
        }
        d.into_iter().find(|v| *v > 0.0).ok_or_else(|| {
            Error::InvalidParameter("all pilot distances are zero; set tau explicitly".into())
        })
    }
}

impl Scorer for BurstAbc {
    fn evaluate(&self, theta: &Theta) -> Result<Evaluation> {
        let d = self.distance(theta)?;
        Ok(Evaluation {
            log_likelihood: -d / self.config.tau,
            distance: d,
        })
    }
}

/// Random-walk proposal scales and their adaptation schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalState {
    pub step_scales: Theta,
    pub target_acceptance: f64,
    pub adaptation_rate: f64,
}

/// Exponent of the decaying adaptation gain `rate / i^0.6`.
pub const ADAPTATION_DECAY: f64 = 0.6;

impl ProposalState {
    pub fn new(step_scales: Theta, target_acceptance: f64, adaptation_rate: f64) -> Result<Self> {
        if step_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "step scales must be positive, got {step_scales:?}"
            )));
        }
        if !(target_acceptance > 0.0 && target_acceptance < 1.0) || !(adaptation_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target acceptance must lie in (0, 1) and rate be >= 0, got {target_acceptance} / {adaptation_rate}"
            )));
        }
        Ok(Self {
            step_scales,
            target_acceptance,
            adaptation_rate,
        })
    }

    /// Draw `θ + s ⊙ ξ`, `ξ ~ N(0, I)`.
    pub fn propose<R: Rng + ?Sized>(&self, theta: &Theta, rng: &mut R) -> Theta {
        let mut out = *theta;
        for (x, s) in out.iter_mut().zip(&self.step_scales) {
            let xi: f64 = StandardNormal.sample(rng);
            *x += s * xi;
        }
        out
    }

    /// Log density of moving from `from` to `to` (symmetric in its arguments).
    pub fn log_density(&self, from: &Theta, to: &Theta) -> f64 {
        from.iter()
            .zip(to)
            .zip(&self.step_scales)
            .map(|((a, b), s)| {
                let z = (b - a) / s;
                -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            })
            .sum()
    }

    /// Stochastic-approximation update after iteration `i` (1-based).
    pub fn adapt(&mut self, i: usize, accepted: bool) {
        let gain = self.adaptation_rate / (i as f64).powf(ADAPTATION_DECAY);
        let signal = f64::from(u8::from(accepted)) - self.target_acceptance;
        let factor = (gain * signal).exp();
        self.step_scales.iter_mut().for_each(|s| *s *= factor);
    }
}

/// Current point of a chain with its cached scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub theta: Theta,
    pub log_prior: f64,
    pub eval: Evaluation,
}

impl ChainState {
    pub fn log_posterior(&self) -> f64 {
        self.log_prior + self.eval.log_likelihood
    }
}

/// Metropolis rule in log form with a uniform draw `u ∈ [0, 1)`.
pub fn metropolis_accept(log_current: f64, log_proposed: f64, u: f64) -> bool {
    if !log_proposed.is_finite() {
        return false;
    }
    let delta = log_proposed - log_current;
    delta >= 0.0 || u.ln() < delta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: ChainState,
    pub accepted: bool,
}

/// One Metropolis-Hastings transition.
///
/// Proposals outside the prior support are rejected without simulating;
/// scoring failures (blow-up, empty section, ...) count as `−∞`. Every call
/// consumes the same number of random draws.
pub fn mh_step<S: Scorer + ?Sized, R: Rng + ?Sized>(
    current: &ChainState,
    scorer: &S,
    prior: &PriorSpec,
    proposal: &ProposalState,
    rng: &mut R,
) -> StepOutcome {
    let theta = proposal.propose(&current.theta, rng);
    let u: f64 = rng.random();
    let reject = StepOutcome {
        state: *current,
        accepted: false,
    };
    let log_prior = prior.log_density(&theta);
    if !log_prior.is_finite() {
        return reject;
    }
    let Ok(eval) = scorer.evaluate(&theta) else {
        return reject;
    };
    let candidate = ChainState {
        theta,
        log_prior,
        eval,
    };
    if eval.distance.is_finite()
        && metropolis_accept(current.log_posterior(), candidate.log_posterior(), u)
    {
        StepOutcome {
            state: candidate,
            accepted: true,
        }
    } else {
        reject
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub proposal: ProposalState,
    /// Prior draws tried for a finite starting score.
    pub init_attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub param_names: [String; 3],
    pub samples: Vec<Theta>,
    pub log_scores: Vec<f64>,
    pub accepted: Vec<bool>,
    pub d_trace: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
    pub acceptance_rate: f64,
    pub initial: ChainState,
    pub final_proposal: ProposalState,
}

impl ChainRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Acceptance rate over the iterations after burn-in (falls back to the whole chain).
    pub fn post_burn_in_acceptance(&self) -> f64 {
        let tail = if self.burn_in < self.accepted.len() {
            &self.accepted[self.burn_in..]
        } else {
            &self.accepted[..]
        };
        tail.iter().filter(|a| **a).count() as f64 / tail.len() as f64
    }

    /// Component-wise median of the samples after burn-in (whole chain if burn-in covers it).
    pub fn posterior_median(&self) -> Theta {
        let tail = if self.burn_in < self.samples.len() {
            &self.samples[self.burn_in..]
        } else {
            &self.samples[..]
        };
        let mut out = [0.0; 3];
        for (j, slot) in out.iter_mut().enumerate() {
            let mut col: Vec<f64> = tail.iter().map(|t| t[j]).collect();
            col.sort_by(f64::total_cmp);
            *slot = crate::stats::median_sorted(&col);
        }
        out
    }

    /// `iter,p1,p2,p3,score,d,accepted` with a `#` line naming the parameters.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# p1,p2,p3 = {}", self.param_names.join(","))?;
        writeln!(w, "iter,p1,p2,p3,score,d,accepted")?;
        for i in 0..self.len() {
            let t = self.samples[i];
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                i + 1,
                fmt_f64(t[0]),
                fmt_f64(t[1]),
                fmt_f64(t[2]),
                fmt_f64(self.log_scores[i]),
                fmt_f64(self.d_trace[i]),
                u8::from(self.accepted[i])
            )?;
        }
        Ok(())
    }
}

/// Run an adaptive random-walk chain.
///
/// The starting point is the first of up to `init_attempts` prior draws with a
/// finite score. Proposal scales adapt for iterations `1..=burn_in` only.
pub fn run_chain<S: Scorer + ?Sized>(
    scorer: &S,
    prior: &PriorSpec,
    kind: SystemKind,
    cfg: &ChainConfig,
) -> Result<ChainRecord> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = None;
    for _ in 0..cfg.init_attempts.max(1) {
        let theta = prior.sample(&mut rng)?;
        if let Ok(eval) = scorer.evaluate(&theta) {
            if eval.log_likelihood.is_finite() && eval.distance.is_finite() {
                current = Some(ChainState {
                    theta,
                    log_prior: prior.log_density(&theta),
                    eval,
                });
                break;
            }
        }
    }
    let mut current = current.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no prior draw out of {} gave a finite score",
            cfg.init_attempts.max(1)
        ))
    })?;
    let initial = current;

    let mut proposal = cfg.proposal;
    let n = cfg.iterations;
    let mut samples = Vec::with_capacity(n);
    let mut log_scores = Vec::with_capacity(n);
    let mut accepted = Vec::with_capacity(n);
    let mut d_trace = Vec::with_capacity(n);
    for i in 1..=n {
        let step = mh_step(&current, scorer, prior, &proposal, &mut rng);
        if i <= cfg.burn_in {
            proposal.adapt(i, step.accepted);
        }
        current = step.state;
        samples.push(current.theta);
        log_scores.push(current.eval.log_likelihood);
        d_trace.push(current.eval.distance);
        accepted.push(step.accepted);
    }
    let acceptance_rate = accepted.iter().filter(|a| **a).count() as f64 / n as f64;
    Ok(ChainRecord {
        param_names: kind.param_names().map(String::from),
        samples,
        log_scores,
        accepted,
        d_trace,
        seed: cfg.seed,
        burn_in: cfg.burn_in,
        acceptance_rate,
        initial,
        final_proposal: proposal,
    })
}
