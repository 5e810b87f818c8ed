//! Poincaré sections and the Mahalanobis discrepancy used by model A.

use std::io::Write;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use crate::dynamics::{State3, TrajectorySeries};
use crate::{fmt_f64, Error, Result};

/// Which sign changes of `normal·s − offset` count as crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    Positive,
    Negative,
    Both,
}

impl FromStr for CrossingDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "+" => Ok(Self::Positive),
            "negative" | "-" => Ok(Self::Negative),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidParameter(format!(
                "unknown crossing direction '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for CrossingDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Both => "both",
        })
    }
}

/// The plane `normal·s = offset` plus a crossing-direction filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPlane {
    normal: State3,
    offset: f64,
    direction: CrossingDirection,
    basis: [State3; 2],
}

impl SectionPlane {
    pub fn new(normal: State3, offset: f64, direction: CrossingDirection) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "section plane needs a finite nonzero normal, got {normal:?} / offset {offset}"
            )));
        }
        Ok(Self {
            normal,
            offset,
            direction,
            basis: in_plane_basis(normal * (1.0 / len)),
        })
    }

    /// The plane `y = 0` with upward crossings, read out as `(x, z)`.
    pub fn y_zero() -> Self {
        Self::new(State3::new(0.0, 1.0, 0.0), 0.0, CrossingDirection::Positive)
            .expect("static plane is valid")
    }

    pub fn normal(&self) -> State3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn direction(&self) -> CrossingDirection {
        self.direction
    }

    fn signed(&self, s: &State3) -> f64 {
        self.normal.dot(s) - self.offset
    }

    /// In-plane coordinates of a point.
    pub fn project(&self, s: &State3) -> Vector2<f64> {
        Vector2::new(self.basis[0].dot(s), self.basis[1].dot(s))
    }
}

impl Default for SectionPlane {
    fn default() -> Self {
        Self::y_zero()
    }
}

// Gram-Schmidt on the two coordinate axes other than the normal's dominant one,
// in coordinate order. Axis-aligned planes therefore read out plain coordinates.
fn in_plane_basis(n: State3) -> [State3; 2] {
    let comps = n.to_array().map(f64::abs);
    let dominant = (0..3)
        .max_by(|&a, &b| comps[a].total_cmp(&comps[b]))
        .unwrap_or(0);
    let mut axes = (0..3).filter(|&i| i != dominant).map(|i| {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        State3::from(e)
    });
    let a = axes.next().unwrap();
    let b = axes.next().unwrap();
    let u = a - n * n.dot(&a);
    let u = u * (1.0 / u.norm());
    let v = b - n * n.dot(&b) - u * u.dot(&b);
    let v = v * (1.0 / v.norm());
    [u, v]
}

/// Section points in in-plane coordinates, with their interpolated crossing times.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionCloud {
    pub points: Vec<Vector2<f64>>,
    pub times: Vec<f64>,
    pub plane: SectionPlane,
    pub source_params: Option<[f64; 3]>,
}

impl SectionCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "u,v")?;
        for p in &self.points {
            writeln!(w, "{},{}", fmt_f64(p.x), fmt_f64(p.y))?;
        }
        Ok(())
    }
}

/// Linear-interpolated crossings of `traj` through `plane`.
///
/// A pair `(s_i, s_{i+1})` is an upward crossing when `f(s_i) < 0 <= f(s_{i+1})`
/// and downward when `f(s_i) > 0 >= f(s_{i+1})`, with `f = normal·s − offset`.
pub fn extract_section(traj: &TrajectorySeries, plane: &SectionPlane) -> SectionCloud {
    let mut points = Vec::new();
    let mut times = Vec::new();
    for (i, pair) in traj.states.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (plane.signed(&a), plane.signed(&b));
        let up = fa < 0.0 && fb >= 0.0;
        let down = fa > 0.0 && fb <= 0.0;
        let keep = match plane.direction {
            CrossingDirection::Positive => up,
            CrossingDirection::Negative => down,
            CrossingDirection::Both => up || down,
        };
        if keep {
            let alpha = fa / (fa - fb);
            let hit = a + (b - a) * alpha;
            points.push(plane.project(&hit));
            times.push(traj.time(i) + alpha * traj.dt);
        }
    }
    SectionCloud {
        points,
        times,
        plane: *plane,
        source_params: None,
    }
}

/// Empirical mean and covariance of a section cloud with its regularized inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionStats {
    pub mean: Vector2<f64>,
    pub covariance: Matrix2<f64>,
    pub precision: Matrix2<f64>,
    pub ridge: f64,
    pub count: usize,
}

/// Ridge floor used when the covariance trace vanishes (all points identical).
pub const RIDGE_FLOOR: f64 = 1e-12;

impl SectionStats {
    /// Build from explicit moments. `precision = (covariance + ε I)⁻¹` with
    /// `ε = 1e-9 · trace / 2`, floored at [`RIDGE_FLOOR`].
    pub fn from_moments(
        mean: Vector2<f64>,
        covariance: Matrix2<f64>,
        count: usize,
    ) -> Result<Self> {
        if count < 3 {
            return Err(Error::InsufficientPoints {
                needed: 3,
                got: count,
            });
        }
        let ridge = (1e-9 * covariance.trace() / 2.0).max(RIDGE_FLOOR);
        let regularized = covariance + Matrix2::identity() * ridge;
        let inv = regularized.try_inverse().ok_or_else(|| {
            Error::InvalidParameter(format!("covariance is not invertible: {covariance}"))
        })?;
        let precision = (inv + inv.transpose()) * 0.5;
        if !precision.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "covariance precision is not finite: {covariance}"
            )));
        }
        Ok(Self {
            mean,
            covariance,
            precision,
            ridge,
            count,
        })
    }

    /// Single-row CSV `mu_u,mu_v,c_uu,c_uv,c_vv,n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mu_u,mu_v,c_uu,c_uv,c_vv,n")?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(self.mean.x),
            fmt_f64(self.mean.y),
            fmt_f64(self.covariance[(0, 0)]),
            fmt_f64(self.covariance[(0, 1)]),
            fmt_f64(self.covariance[(1, 1)]),
            self.count
        )?;
        Ok(())
    }
}

/// Sample mean and `N − 1` covariance of the cloud.
pub fn section_stats(cloud: &SectionCloud) -> Result<SectionStats> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: n });
    }
    let mean = cloud.points.iter().sum::<Vector2<f64>>() / n as f64;
    let scatter = cloud
        .points
        .iter()
        .map(|p| {
            let d = p - mean;
            d * d.transpose()
        })
        .sum::<Matrix2<f64>>();
    let covariance = scatter / (n as f64 - 1.0);
    SectionStats::from_moments(mean, (covariance + covariance.transpose()) * 0.5, n)
}

/// `(z − μ)ᵀ P (z − μ)` with the regularized precision `P`.
pub fn mahalanobis_sq(point: &Vector2<f64>, stats: &SectionStats) -> f64 {
    let d = point - stats.mean;
    d.dot(&(stats.precision * d)).max(0.0)
}

/// Mean squared Mahalanobis distance of the simulated points to the observed cloud.
pub fn discrepancy_a(sim: &SectionCloud, obs: &SectionStats) -> Result<f64> {
    if sim.is_empty() {
        return Err(Error::EmptySection);
    }
    let total: f64 = sim.points.iter().map(|p| mahalanobis_sq(p, obs)).sum();
    Ok(total / sim.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn traj(states: Vec<State3>) -> TrajectorySeries {
        TrajectorySeries {
            dt: 1.0,
            t0: 0.0,
            states,
        }
    }

    fn cloud(points: &[(f64, f64)]) -> SectionCloud {
        SectionCloud {
            points: points.iter().map(|&(u, v)| Vector2::new(u, v)).collect(),
            times: vec![0.0; points.len()],
            plane: SectionPlane::y_zero(),
            source_params: None,
        }
    }

    fn identity_stats() -> SectionStats {
        SectionStats::from_moments(Vector2::zeros(), Matrix2::identity(), 10).unwrap()
    }

    #[test]
    fn midpoint_crossing() {
        let t = traj(vec![
            State3::new(0.0, -1.0, 5.0),
            State3::new(0.0, 1.0, 5.0),
        ]);
        let c = extract_section(&t, &SectionPlane::y_zero());
        assert_eq!(c.len(), 1);
        assert_abs_diff_eq!(c.points[0].x, 0.0);
        assert_abs_diff_eq!(c.points[0].y, 5.0);
        assert_abs_diff_eq!(c.times[0], 0.5);
    }

    #[test]
    fn direction_filter() {
        let t = traj(vec![
            State3::new(1.0, -1.0, 0.0),
            State3::new(2.0, 1.0, 0.0),
            State3::new(3.0, -1.0, 0.0),
        ]);
        let mk = |d| SectionPlane::new(State3::new(0.0, 1.0, 0.0), 0.0, d).unwrap();
        let up = extract_section(&t, &mk(CrossingDirection::Positive));
        let down = extract_section(&t, &mk(CrossingDirection::Negative));
        let both = extract_section(&t, &mk(CrossingDirection::Both));
        assert_eq!(up.points, vec![Vector2::new(1.5, 0.0)]);
        assert_eq!(down.points, vec![Vector2::new(2.5, 0.0)]);
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn one_sided_trajectory_has_empty_section() {
        let t = traj(
            (0..50)
                .map(|i| State3::new(i as f64, 1.0 + i as f64, 0.0))
                .collect(),
        );
        assert!(extract_section(&t, &SectionPlane::y_zero()).is_empty());
    }

    #[test]
    fn axis_aligned_planes_read_plain_coordinates() {
        let s = State3::new(1.0, 2.0, 3.0);
        let z_plane =
            SectionPlane::new(State3::new(0.0, 0.0, 2.0), 27.0, CrossingDirection::Both).unwrap();
        assert_eq!(z_plane.project(&s), Vector2::new(1.0, 2.0));
        assert_eq!(SectionPlane::y_zero().project(&s), Vector2::new(1.0, 3.0));
        assert!(SectionPlane::new(State3::default(), 0.0, CrossingDirection::Both).is_err());
    }

    #[test]
    fn stats_mean_and_count_guard() {
        let s = section_stats(&cloud(&[(0.0, 0.0), (2.0, 2.0), (1.0, 1.0)])).unwrap();
        assert_abs_diff_eq!(s.mean.x, 1.0);
        assert_abs_diff_eq!(s.mean.y, 1.0);
        assert_abs_diff_eq!(s.covariance[(0, 1)], 1.0);
        let err = section_stats(&cloud(&[(0.0, 0.0), (1.0, 1.0)])).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientPoints { needed: 3, got: 2 }
        ));
    }

    #[test]
    fn degenerate_cloud_stays_usable() {
        let s = section_stats(&cloud(&[(2.0, 3.0); 5])).unwrap();
        assert!(s.precision.iter().all(|v| v.is_finite()));
        assert_eq!(mahalanobis_sq(&Vector2::new(2.0, 3.0), &s), 0.0);
    }

    #[test]
    fn precision_inverts_regularized_covariance() {
        let s = section_stats(&cloud(&[(0.0, 1.0), (2.0, 2.5), (1.0, -1.0), (4.0, 0.3)])).unwrap();
        let prod = s.precision * (s.covariance + Matrix2::identity() * s.ridge);
        assert!((prod - Matrix2::identity()).abs().max() < 1e-8);
    }

    #[test]
    fn euclidean_case() {
        assert_abs_diff_eq!(
            mahalanobis_sq(&Vector2::new(3.0, 4.0), &identity_stats()),
            25.0,
            epsilon = 1e-6
        );
        assert_eq!(mahalanobis_sq(&Vector2::zeros(), &identity_stats()), 0.0);
    }

    #[test]
    fn discrepancy_examples() {
        let stats = identity_stats();
        assert_eq!(
            discrepancy_a(&cloud(&[(0.0, 0.0); 4]), &stats).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            discrepancy_a(&cloud(&[(3.0, 4.0)]), &stats).unwrap(),
            25.0,
            epsilon = 1e-6
        );
        let base = [(1.0, 2.0), (-0.5, 0.1), (3.0, -2.0)];
        let doubled: Vec<_> = base.iter().chain(base.iter()).copied().collect();
        assert_abs_diff_eq!(
            discrepancy_a(&cloud(&base), &stats).unwrap(),
            discrepancy_a(&cloud(&doubled), &stats).unwrap(),
            epsilon = 1e-12
        );
        assert!(matches!(
            discrepancy_a(&cloud(&[]), &stats),
            Err(Error::EmptySection)
        ));
    }

    fn spd() -> impl Strategy<Value = Matrix2<f64>> {
        (-0.3..0.3f64, -0.3..0.3f64, -0.3..0.3f64, 1.0..2.0f64).prop_map(|(a, b, c, d)| {
            let l = Matrix2::new(a, 0.0, b, c);
            l * l.transpose() + Matrix2::identity() * d
        })
    }

    proptest! {
        #[test]
        fn affine_invariance(
            cov in spd(),
            mu in (-5.0..5.0f64, -5.0..5.0f64),
            z in (-5.0..5.0f64, -5.0..5.0f64),
            angle in 0.0..std::f64::consts::TAU,
            stretch in (0.8..1.25f64, 0.8..1.25f64),
            flip in proptest::bool::ANY,
            shift in (-10.0..10.0f64, -10.0..10.0f64),
        ) {
            let (s, c) = angle.sin_cos();
            let mut a = Matrix2::new(c, -s, s, c) * Matrix2::new(stretch.0, 0.0, 0.0, stretch.1);
            if flip {
                a.set_column(0, &(-a.column(0)));
            }
            let b = Vector2::new(shift.0, shift.1);
            let mu = Vector2::new(mu.0, mu.1);
            let z = Vector2::new(z.0, z.1);
            let s = SectionStats::from_moments(mu, cov, 10).unwrap();
            let st = SectionStats::from_moments(a * mu + b, a * cov * a.transpose(), 10).unwrap();
            let d0 = mahalanobis_sq(&z, &s);
            let d1 = mahalanobis_sq(&(a * z + b), &st);
            prop_assert!((d0 - d1).abs() <= 1e-8 * (1.0 + d0), "{} vs {}", d0, d1);
        }

        #[test]
        fn crossings_lie_between_samples(phase in 0.0..std::f64::consts::TAU, dt in 0.05..0.5f64) {
            let t = TrajectorySeries {
                dt,
                t0: 1.0,
                states: (0..400)
                    .map(|i| {
                        let th = phase + i as f64 * dt;
                        State3::new(th.cos(), th.sin(), 0.1 * th)
                    })
                    .collect(),
            };
            let plane = SectionPlane::new(State3::new(0.0, 1.0, 0.0), 0.01, CrossingDirection::Both).unwrap();
            let c = extract_section(&t, &plane);
            prop_assert!(!c.is_empty());
            for &tc in &c.times {
                let i = ((tc - t.t0) / dt).floor() as usize;
                prop_assert!(tc > t.time(i) && tc < t.time(i + 1));
            }
        }
    }
}
