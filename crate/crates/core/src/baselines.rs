//! Fixed-window baselines: rolling volatility, standardized-return alerts and
//! their comparison against the Fibonacci union.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::recurrence::{fibonacci_union, jaccard, AlertSet, BurstConfig, BurstProfile};
use crate::stats::{mean, sample_std};
use crate::{fmt_f64, Error, Result};

/// Floor added to the trailing standard deviation.
pub const STD_EPS: f64 = 1e-12;

fn check_len(series: &[f64], window: usize) -> Result<()> {
    if window < 2 {
        return Err(Error::InvalidParameter(format!(
            "window must be >= 2, got {window}"
        )));
    }
    if series.len() < window {
        return Err(Error::SeriesTooShort {
            needed: window,
            got: series.len(),
        });
    }
    Ok(())
}

/// Trailing sample standard deviation; `None` for the first `window − 1` indices.
pub fn rolling_volatility(series: &[f64], window: usize) -> Result<Vec<Option<f64>>> {
    check_len(series, window)?;
    let mut out = vec![None; window - 1];
    out.extend(series.windows(window).map(|w| Some(sample_std(w))));
    Ok(out)
}

/// `z_t = (x_t − mean) / (std + 1e-12)` over the trailing window ending at `t`.
///
/// Moments are taken of the deviations from `x_t`, so a constant window
/// scores exactly zero whatever its level.
pub fn standardized_scores(series: &[f64], window: usize) -> Result<Vec<Option<f64>>> {
    check_len(series, window)?;
    let mut out = vec![None; window - 1];
    let mut dev = vec![0.0; window];
    for w in series.windows(window) {
        let current = w[window - 1];
        dev.iter_mut().zip(w).for_each(|(d, x)| *d = x - current);
        out.push(Some(-mean(&dev) / (sample_std(&dev) + STD_EPS)));
    }
    Ok(out)
}

pub fn standardized_alerts(series: &[f64], window: usize, threshold: f64) -> Result<AlertSet> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    Ok(standardized_scores(series, window)?
        .into_iter()
        .enumerate()
        .filter_map(|(t, z)| z.filter(|z| z.abs() > threshold).map(|_| t))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub union_count: usize,
    pub fixed_counts: BTreeMap<usize, usize>,
    /// Jaccard(Fibonacci union, standardized alerts at each fixed window).
    pub union_vs_fixed: BTreeMap<usize, f64>,
    /// Jaccard between every pair of fixed-window alert sets, keyed `(w1, w2)` with `w1 < w2`.
    pub fixed_vs_fixed: BTreeMap<(usize, usize), f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub len: usize,
    pub windows: Vec<usize>,
    pub rolling_vol: BTreeMap<usize, Vec<Option<f64>>>,
    pub z_scores: BTreeMap<usize, Vec<Option<f64>>>,
    pub z_alerts: BTreeMap<usize, AlertSet>,
    pub fibonacci: BurstProfile,
    pub comparison: Comparison,
}

/// Fibonacci profile plus fixed-window volatility and standardized alerts.
pub fn compare_fib_vs_fixed(
    series: &[f64],
    cfg: &BurstConfig,
    threshold: f64,
) -> Result<BaselineReport> {
    let needed = cfg.fixed_windows.iter().copied().max().unwrap_or(0);
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    let fibonacci = fibonacci_union(series, &cfg.windows, cfg.k)?;
    let mut rolling_vol = BTreeMap::new();
    let mut z_scores = BTreeMap::new();
    let mut z_alerts = BTreeMap::new();
    for &w in &cfg.fixed_windows {
        rolling_vol.insert(w, rolling_volatility(series, w)?);
        let z = standardized_scores(series, w)?;
        let alerts: AlertSet = z
            .iter()
            .enumerate()
            .filter_map(|(t, z)| z.filter(|z| z.abs() > threshold).map(|_| t))
            .collect();
        z_scores.insert(w, z);
        z_alerts.insert(w, alerts);
    }
    let union_vs_fixed = z_alerts
        .iter()
        .map(|(&w, a)| (w, jaccard(&fibonacci.union_alerts, a)))
        .collect();
    let mut fixed_vs_fixed = BTreeMap::new();
    for (&w1, a) in &z_alerts {
        for (&w2, b) in z_alerts.range(w1 + 1..) {
            fixed_vs_fixed.insert((w1, w2), jaccard(a, b));
        }
    }
    let comparison = Comparison {
        union_count: fibonacci.union_alerts.len(),
        fixed_counts: z_alerts.iter().map(|(&w, a)| (w, a.len())).collect(),
        union_vs_fixed,
        fixed_vs_fixed,
    };
    Ok(BaselineReport {
        len: series.len(),
        windows: cfg.fixed_windows.clone(),
        rolling_vol,
        z_scores,
        z_alerts,
        fibonacci,
        comparison,
    })
}

impl BaselineReport {
    /// `t,vol50,vol200,z50,z200,alert_z50,alert_z200,alert_fib_union`; warm-up
    /// entries are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        write!(w, "t")?;
        for win in &self.windows {
            write!(w, ",vol{win}")?;
        }
        for win in &self.windows {
            write!(w, ",z{win}")?;
        }
        for win in &self.windows {
            write!(w, ",alert_z{win}")?;
        }
        writeln!(w, ",alert_fib_union")?;
        for t in 0..self.len {
            write!(w, "{t}")?;
            for win in &self.windows {
                write!(w, ",{}", opt(self.rolling_vol[win][t]))?;
            }
            for win in &self.windows {
                write!(w, ",{}", opt(self.z_scores[win][t]))?;
            }
            for win in &self.windows {
                write!(w, ",{}", u8::from(self.z_alerts[win].contains(&t)))?;
            }
            writeln!(w, ",{}", u8::from(self.fibonacci.union_alerts.contains(&t)))?;
        }
        Ok(())
    }
}

/// For each span, whether any alert falls inside it.
pub fn episodes_detected(alerts: &AlertSet, spans: &[Range<usize>]) -> Vec<bool> {
    spans
        .iter()
        .map(|s| alerts.range(s.clone()).next().is_some())
        .collect()
}

/// Gaussian noise with volatility bursts: inside each span the unit-variance
/// noise is multiplied by `amplitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstInjection {
    pub len: usize,
    pub spans: Vec<Range<usize>>,
    pub amplitude: f64,
}

impl BurstInjection {
    /// Episodes of duration 80, 5 and 30. The short episode starts 20 steps
    /// after the long one ends, inside the 200-step memory of the slow baseline.
    pub fn multi_scale(amplitude: f64) -> Self {
        Self {
            len: 1000,
            spans: vec![300..380, 400..405, 700..730],
            amplitude,
        }
    }

    pub fn generate(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (0..self.len)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        for span in &self.spans {
            xs[span.clone()]
                .iter_mut()
                .for_each(|x| *x *= self.amplitude);
        }
        xs
    }
}
