//! Model B statistics: correlation integrals, Fibonacci-window burst profiles,
//! summary vectors and the weighted L1 distance between them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{State3, TrajectorySeries};
use crate::stats::{median_sorted, quantile_sorted};
use crate::{fmt_f64, Error, Result};

/// Window sizes of the multi-scale burst detector.
pub const FIBONACCI_WINDOWS: [usize; 4] = [21, 34, 55, 89];
/// Window sizes of the fixed-window comparison sets.
pub const FIXED_WINDOWS: [usize; 2] = [50, 200];
/// Gaussian consistency constant for the MAD.
pub const MAD_SCALE: f64 = 1.4826;
/// Floor added to the robust scale so constant windows never divide by zero.
pub const MAD_EPS: f64 = 1e-12;

pub type AlertSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub point_count: usize,
}

impl CorrelationCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,C")?;
        for (r, c) in self.radii.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt_f64(*r), fmt_f64(*c))?;
        }
        Ok(())
    }
}

/// Fraction of pairs with `‖x_i − x_j‖ < r`, for every radius in `radii`.
///
/// Pairs are counted exactly. Row blocks are summed in parallel into integer
/// histograms, so the result does not depend on the thread count.
pub fn correlation_integral(points: &[State3], radii: &[f64]) -> Result<CorrelationCurve> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidParameter(
            "radii must be positive and finite".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "radii must be sorted ascending".into(),
        ));
    }
    // bins[k] counts pairs whose distance first falls below radii[k]
    let bins = (0..n - 1)
        .into_par_iter()
        .fold(
            || vec![0u64; radii.len() + 1],
            |mut acc, i| {
                let a = points[i];
                for b in &points[i + 1..] {
                    let d = (a - *b).norm();
                    acc[radii.partition_point(|&r| r <= d)] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; radii.len() + 1],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut running = 0u64;
    let values = bins[..radii.len()]
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / pairs as f64
        })
        .collect();
    Ok(CorrelationCurve {
        radii: radii.to_vec(),
        values,
        point_count: n,
    })
}

/// `count` log-spaced radii between the 1st and 99th percentile of a random
/// subsample of `pairs` pairwise distances.
pub fn default_radii(points: &[State3], count: usize, pairs: usize, seed: u64) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    if count < 2 {
        return Err(Error::InvalidParameter("need at least two radii".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dists: Vec<f64> = (0..pairs.max(2))
        .filter_map(|_| {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            (i != j).then(|| (points[i] - points[j]).norm())
        })
        .filter(|d| *d > 0.0)
        .collect();
    if dists.len() < 2 {
        return Err(Error::InvalidParameter("degenerate point cloud".into()));
    }
    dists.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&dists, 0.01).ln();
    let hi = quantile_sorted(&dists, 0.99).ln();
    Ok((0..count)
        .map(|k| (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp())
        .collect())
}

/// The band of correlation-integral values treated as the scaling region.
///
/// Because `C(r)` is the empirical distribution function of the pairwise
/// distances, `C(r) ∈ [lower, upper]` selects exactly the radii between the
/// `lower` and `upper` quantiles of the pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegion {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ScalingRegion {
    fn default() -> Self {
        Self {
            lower: 0.005,
            upper: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
}

pub const MIN_SCALING_RADII: usize = 5;

/// Least-squares slope of `log C` against `log r` over the default scaling region.
pub fn correlation_dimension(curve: &CorrelationCurve) -> Result<DimensionFit> {
    correlation_dimension_in(curve, ScalingRegion::default())
}

pub fn correlation_dimension_in(
    curve: &CorrelationCurve,
    region: ScalingRegion,
) -> Result<DimensionFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .radii
        .iter()
        .zip(&curve.values)
        .filter(|(_, &c)| c > 0.0 && c < 1.0 && c >= region.lower && c <= region.upper)
        .map(|(r, c)| (r.ln(), c.ln()))
        .unzip();
    let n = xs.len();
    if n < MIN_SCALING_RADII {
        return Err(Error::NoScalingRegion {
            needed: MIN_SCALING_RADII,
            got: n,
        });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok(DimensionFit {
        slope,
        intercept,
        r_squared,
        used: n,
    })
}

/// Trailing-window median/MAD detector.
///
/// For `t >= window − 1` the window is `series[t + 1 − window ..= t]`, and `t`
/// alerts when `|x_t − median| / (1.4826·MAD + 1e-12) > k`.
pub fn detect_bursts(series: &[f64], window: usize, k: f64) -> Result<AlertSet> {
    if window < 3 {
        return Err(Error::InvalidParameter(format!(
            "window must be >= 3, got {window}"
        )));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "k must be positive, got {k}"
        )));
    }
    if series.len() < window {
        return Err(Error::SeriesTooShort {
            needed: window,
            got: series.len(),
        });
    }
    let mut sorted: Vec<f64> = series[..window].to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut alerts = AlertSet::new();
    for t in window - 1..series.len() {
        if t >= window {
            let old = series[t - window];
            let at = sorted.partition_point(|v| v.total_cmp(&old).is_lt());
            sorted.remove(at);
            let new = series[t];
            let at = sorted.partition_point(|v| v.total_cmp(&new).is_lt());
            sorted.insert(at, new);
        }
        let (med, mad) = median_and_mad(&sorted);
        let z = (series[t] - med) / (MAD_SCALE * mad + MAD_EPS);
        if z.abs() > k {
            alerts.insert(t);
        }
    }
    Ok(alerts)
}

/// Median and median absolute deviation of a sorted window in `O(log n)`.
///
/// Deviations below the median, read right to left, and deviations above it,
/// read left to right, are two ascending runs; the MAD is an order statistic
/// of their merge.
fn median_and_mad(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    let med = median_sorted(sorted);
    let split = sorted.partition_point(|v| *v < med);
    let below = |i: usize| med - sorted[split - 1 - i];
    let above = |j: usize| sorted[split + j] - med;
    let (nb, na) = (split, n - split);
    let mad = if n % 2 == 1 {
        kth_of_two(below, nb, above, na, n / 2)
    } else {
        0.5 * (kth_of_two(below, nb, above, na, n / 2 - 1)
            + kth_of_two(below, nb, above, na, n / 2))
    };
    (med, mad)
}

/// `k`-th smallest (0-based) element of the merge of two ascending sequences.
fn kth_of_two(
    a: impl Fn(usize) -> f64,
    na: usize,
    b: impl Fn(usize) -> f64,
    nb: usize,
    k: usize,
) -> f64 {
    debug_assert!(k < na + nb);
    // smallest count `i` taken from `a` such that a[i] >= b[k - i]
    let (mut lo, mut hi) = ((k + 1).saturating_sub(nb), (k + 1).min(na));
    while lo < hi {
        let i = (lo + hi) / 2;
        let j = k + 1 - i;
        if a(i) < b(j - 1) {
            lo = i + 1;
        } else {
            hi = i;
        }
    }
    let j = k + 1 - lo;
    let from_a = if lo > 0 { a(lo - 1) } else { f64::NEG_INFINITY };
    let from_b = if j > 0 { b(j - 1) } else { f64::NEG_INFINITY };
    from_a.max(from_b)
}

/// Per-window alert sets and their union.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstProfile {
    pub per_window: BTreeMap<usize, AlertSet>,
    pub union_alerts: AlertSet,
    pub k: f64,
    pub windows: Vec<usize>,
    pub len: usize,
}

impl BurstProfile {
    /// 0/1 union mask over the series.
    pub fn union_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len];
        for &t in &self.union_alerts {
            mask[t] = true;
        }
        mask
    }

    /// CSV with one `alert_<w>` column per window and a final `alert_union` column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for win in &self.windows {
            write!(w, ",alert_{win}")?;
        }
        writeln!(w, ",alert_union")?;
        for t in 0..self.len {
            write!(w, "{t}")?;
            for win in &self.windows {
                write!(w, ",{}", u8::from(self.per_window[win].contains(&t)))?;
            }
            writeln!(w, ",{}", u8::from(self.union_alerts.contains(&t)))?;
        }
        Ok(())
    }
}

/// Run [`detect_bursts`] for every window and union the alerts.
pub fn fibonacci_union(series: &[f64], windows: &[usize], k: f64) -> Result<BurstProfile> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one window is required".into(),
        ));
    }
    let sets = windows
        .par_iter()
        .map(|&w| detect_bursts(series, w, k).map(|a| (w, a)))
        .collect::<Result<Vec<_>>>()?;
    let mut per_window = BTreeMap::new();
    let mut union_alerts = AlertSet::new();
    for (w, alerts) in sets {
        union_alerts.extend(alerts.iter().copied());
        per_window.insert(w, alerts);
    }
    Ok(BurstProfile {
        per_window,
        union_alerts,
        k,
        windows: windows.to_vec(),
        len: series.len(),
    })
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counted as identical.
pub fn jaccard(a: &AlertSet, b: &AlertSet) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Detector settings shared by the summary vector and the baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstConfig {
    pub k: f64,
    pub windows: Vec<usize>,
    pub fixed_windows: Vec<usize>,
}

impl Default for BurstConfig {
    fn default() -> Self {
        Self {
            k: 3.0,
            windows: FIBONACCI_WINDOWS.to_vec(),
            fixed_windows: FIXED_WINDOWS.to_vec(),
        }
    }
}

impl BurstConfig {
    /// Number of components in the summary vector this config produces.
    pub fn summary_len(&self) -> usize {
        self.windows.len() + 1 + self.fixed_windows.len()
    }

    fn min_len(&self) -> usize {
        self.windows
            .iter()
            .chain(&self.fixed_windows)
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Burst counts per window, the union count, then Jaccard(union, fixed) per fixed window.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector(pub Vec<f64>);

impl SummaryVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be finite and >= 0".into(),
            ));
        }
        if !w.iter().any(|v| *v > 0.0) {
            return Err(Error::InvalidParameter(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(Self(w))
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Compute the Fibonacci profile and the summary vector together.
pub fn summarize(series: &[f64], cfg: &BurstConfig) -> Result<(BurstProfile, SummaryVector)> {
    let needed = cfg.min_len();
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    let profile = fibonacci_union(series, &cfg.windows, cfg.k)?;
    let mut s: Vec<f64> = cfg
        .windows
        .iter()
        .map(|w| profile.per_window[w].len() as f64)
        .collect();
    s.push(profile.union_alerts.len() as f64);
    for &w in &cfg.fixed_windows {
        let fixed = detect_bursts(series, w, cfg.k)?;
        s.push(jaccard(&profile.union_alerts, &fixed));
    }
    Ok((profile, SummaryVector(s)))
}

pub fn summary_vector(series: &[f64], cfg: &BurstConfig) -> Result<SummaryVector> {
    summarize(series, cfg).map(|(_, s)| s)
}

/// `Σ_j w_j |s_j − s_obs_j|`.
pub fn distance_b(s: &SummaryVector, obs: &SummaryVector, w: &WeightVector) -> Result<f64> {
    if s.len() != obs.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: obs.len(),
        });
    }
    if w.0.len() != s.len() {
        return Err(Error::LengthMismatch {
            left: w.0.len(),
            right: s.len(),
        });
    }
    Ok(s.0
        .iter()
        .zip(&obs.0)
        .zip(&w.0)
        .map(|((a, b), w)| w * (a - b).abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Channel {
    #[default]
    X,
    Y,
    Z,
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Channel::X),
            "y" => Ok(Channel::Y),
            "z" => Ok(Channel::Z),
            other => Err(Error::InvalidParameter(format!(
                "unknown channel '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Z => "z",
        })
    }
}

/// First differences `c_{t+1} − c_t` of the selected coordinate.
pub fn series_from_trajectory(traj: &TrajectorySeries, channel: Channel) -> Vec<f64> {
    let pick = |s: &State3| match channel {
        Channel::X => s.x,
        Channel::Y => s.y,
        Channel::Z => s.z,
    };
    traj.states
        .windows(2)
        .map(|w| pick(&w[1]) - pick(&w[0]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn on_line(xs: &[f64]) -> Vec<State3> {
        xs.iter().map(|&x| State3::new(x, 0.0, 0.0)).collect()
    }

    fn spike(len: usize, at: usize) -> Vec<f64> {
        let mut s = vec![0.0; len];
        s[at] = 10.0;
        s
    }

    fn set(xs: &[usize]) -> AlertSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn correlation_integral_examples() {
        let c = correlation_integral(&on_line(&[0.0, 1.0]), &[2.0]).unwrap();
        assert_eq!(c.values, vec![1.0]);
        let c = correlation_integral(&on_line(&[0.0, 1.0, 2.0]), &[1.5]).unwrap();
        assert!((c.values[0] - 2.0 / 3.0).abs() < 1e-15);
        // strict inequality: the pair at distance exactly 1 is excluded at r = 1
        let c = correlation_integral(&on_line(&[0.0, 1.0]), &[1.0, 1.0 + 1e-12]).unwrap();
        assert_eq!(c.values, vec![0.0, 1.0]);
    }

    #[test]
    fn correlation_integral_errors() {
        assert!(matches!(
            correlation_integral(&on_line(&[0.0]), &[1.0]),
            Err(Error::InsufficientPoints { .. })
        ));
        assert!(correlation_integral(&on_line(&[0.0, 1.0]), &[2.0, 1.0]).is_err());
        assert!(correlation_integral(&on_line(&[0.0, 1.0]), &[0.0]).is_err());
    }

    #[test]
    fn dimension_needs_scaling_region() {
        let curve = CorrelationCurve {
            radii: vec![1.0, 2.0, 3.0],
            values: vec![0.01, 0.02, 0.03],
            point_count: 100,
        };
        assert!(matches!(
            correlation_dimension(&curve),
            Err(Error::NoScalingRegion { needed: 5, got: 3 })
        ));
    }

    #[test]
    fn dimension_of_exact_power_law() {
        let radii: Vec<f64> = (0..30).map(|i| 0.001 * 1.2f64.powi(i)).collect();
        let values: Vec<f64> = radii.iter().map(|r| (3.0 * r * r).min(1.0)).collect();
        let fit = correlation_dimension(&CorrelationCurve {
            radii,
            values,
            point_count: 10,
        })
        .unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn constant_series_never_alerts() {
        for w in [3, 21, 89] {
            assert!(detect_bursts(&[4.2; 300], w, 3.0).unwrap().is_empty());
        }
    }

    #[test]
    fn single_spike_flags_only_itself() {
        let s = spike(200, 100);
        for w in FIBONACCI_WINDOWS {
            assert_eq!(
                detect_bursts(&s, w, 3.0).unwrap(),
                set(&[100]),
                "window {w}"
            );
        }
    }

    #[test]
    fn huge_threshold_never_alerts() {
        let s: Vec<f64> = (0..300).map(|i| ((i * 7919) % 101) as f64).collect();
        assert!(detect_bursts(&s, 21, 1e300).unwrap().is_empty());
    }

    #[test]
    fn warm_up_indices_never_alert() {
        let mut s = vec![0.0; 100];
        s[5] = 100.0;
        assert!(detect_bursts(&s, 21, 3.0).unwrap().is_empty());
    }

    #[test]
    fn detector_argument_errors() {
        assert!(matches!(
            detect_bursts(&[0.0; 10], 21, 3.0),
            Err(Error::SeriesTooShort {
                needed: 21,
                got: 10
            })
        ));
        assert!(detect_bursts(&[0.0; 10], 2, 3.0).is_err());
        assert!(detect_bursts(&[0.0; 10], 5, 0.0).is_err());
    }

    #[test]
    fn union_semantics() {
        let p = fibonacci_union(&[1.0; 120], &FIBONACCI_WINDOWS, 3.0).unwrap();
        assert!(p.union_alerts.is_empty() && p.per_window.values().all(|s| s.is_empty()));

        // a spike early enough that only the shortest window's warm-up has passed
        let s = spike(120, 30);
        let p = fibonacci_union(&s, &FIBONACCI_WINDOWS, 3.0).unwrap();
        assert_eq!(p.per_window[&21], set(&[30]));
        assert!(p.per_window[&89].is_empty());
        assert_eq!(p.union_alerts, set(&[30]));
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&[1, 2]), &set(&[1, 2])), 1.0);
        assert_eq!(jaccard(&set(&[1, 2]), &set(&[5])), 0.0);
        assert_eq!(jaccard(&set(&[1, 2, 3]), &set(&[3, 4])), 0.25);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn summary_examples() {
        let cfg = BurstConfig::default();
        assert_eq!(
            summary_vector(&[0.5; 250], &cfg).unwrap().0,
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]
        );
        // spike past the 200-step warm-up so the fixed windows can see it too
        let s = summary_vector(&spike(400, 300), &cfg).unwrap();
        assert_eq!(s.0, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            summary_vector(&[0.0; 150], &cfg),
            Err(Error::SeriesTooShort {
                needed: 200,
                got: 150
            })
        ));
    }

    #[test]
    fn summary_is_scale_invariant() {
        let s: Vec<f64> = (0..600)
            .map(|i| (i as f64 * 0.37).sin() + 0.3 * (i as f64 * 1.91).cos())
            .collect();
        let doubled: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        let cfg = BurstConfig::default();
        assert_eq!(
            summary_vector(&s, &cfg).unwrap(),
            summary_vector(&doubled, &cfg).unwrap()
        );
    }

    #[test]
    fn distance_examples() {
        let w = WeightVector::new(vec![2.0, 1.0, 1.0]).unwrap();
        let a = SummaryVector(vec![1.0, 0.0, 0.0]);
        let b = SummaryVector(vec![0.0, 0.0, 0.0]);
        assert_eq!(distance_b(&a, &a, &w).unwrap(), 0.0);
        assert_eq!(distance_b(&a, &b, &w).unwrap(), 2.0);
        assert!(matches!(
            distance_b(&a, &SummaryVector(vec![0.0]), &w),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(WeightVector::new(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn diff_series() {
        let mk = |xs: Vec<f64>| TrajectorySeries {
            dt: 0.1,
            t0: 0.0,
            states: xs.into_iter().map(|x| State3::new(x, 1.0, 2.0)).collect(),
        };
        assert_eq!(
            series_from_trajectory(&mk(vec![3.0; 5]), Channel::X),
            vec![0.0; 4]
        );
        assert_eq!(
            series_from_trajectory(&mk(vec![1.0, 3.0, 5.0, 7.0]), Channel::X),
            vec![2.0; 3]
        );
        assert_eq!(
            series_from_trajectory(&mk(vec![1.0, 3.0]), Channel::Y),
            vec![0.0]
        );
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_bounded(
            a in proptest::collection::btree_set(0usize..50, 0..20),
            b in proptest::collection::btree_set(0usize..50, 0..20),
        ) {
            let j = jaccard(&a, &b);
            prop_assert_eq!(j, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&j));
        }

        #[test]
        fn distance_is_pseudometric(
            v in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.0..100.0f64, 0.0..5.0f64), 7),
        ) {
            let a = SummaryVector(v.iter().map(|t| t.0).collect());
            let b = SummaryVector(v.iter().map(|t| t.1).collect());
            let c = SummaryVector(v.iter().map(|t| t.2).collect());
            let mut w: Vec<f64> = v.iter().map(|t| t.3).collect();
            w[0] += 0.1;
            let w = WeightVector::new(w).unwrap();
            let ab = distance_b(&a, &b, &w).unwrap();
            prop_assert_eq!(ab, distance_b(&b, &a, &w).unwrap());
            prop_assert_eq!(distance_b(&a, &a, &w).unwrap(), 0.0);
            let ac = distance_b(&a, &c, &w).unwrap();
            let cb = distance_b(&c, &b, &w).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
        }

        #[test]
        fn fast_mad_matches_sorting(xs in proptest::collection::vec(-50i32..50, 3..60)) {
            let mut sorted: Vec<f64> = xs.iter().map(|&x| x as f64 * 0.25).collect();
            sorted.sort_by(f64::total_cmp);
            let med = median_sorted(&sorted);
            let mut dev: Vec<f64> = sorted.iter().map(|v| (v - med).abs()).collect();
            dev.sort_by(f64::total_cmp);
            prop_assert_eq!(median_and_mad(&sorted), (med, median_sorted(&dev)));
        }

        #[test]
        fn union_contains_each_window(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..400).map(|_| rand::Rng::random::<f64>(&mut rng).powi(5) * 10.0).collect();
            let p = fibonacci_union(&s, &FIBONACCI_WINDOWS, 3.0).unwrap();
            for alerts in p.per_window.values() {
                prop_assert!(alerts.is_subset(&p.union_alerts));
            }
            prop_assert!(p.union_alerts.iter().all(|&t| t < s.len()));
        }
    }
}
