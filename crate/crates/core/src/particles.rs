//! Second-class particle tracking and rarefaction-fan speed laws.
//!
//! The particle position is located through the exit-point characterization:
//! `X(t) <= x` exactly when the boundary passage to `(x, t)` can avoid all
//! mass left of the origin, i.e. when `L_{nu+}(x,t) >= L_{nu-}(x,t)`. Both
//! sides are computed in one sweep each, so a position costs O(n log n).
//!
//! The closed-form speed laws cover the two worked initial conditions of the
//! classical model: Poisson densities `lambda` (right) / `mu` (left), and
//! deterministic periodic configurations of the same densities.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lpp::chain_values;
use crate::points::{
    periodic_measure, sample_atomic_poisson, sample_point_set, AtomicMeasure, Point, Rect, Side,
    WeightDistribution, WeightedPointSet,
};
use crate::seeding::derive_seed;
use crate::stats::mean_ci95;

/// Law of one side of the initial fluid in a rarefaction setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryLaw {
    Poisson { intensity: f64 },
    Periodic { density: f64 },
}

impl BoundaryLaw {
    pub fn density(&self) -> f64 {
        match self {
            BoundaryLaw::Poisson { intensity } => *intensity,
            BoundaryLaw::Periodic { density } => *density,
        }
    }

    fn sample(&self, interval: (f64, f64), side: Side, seed: u64) -> Result<AtomicMeasure> {
        match self {
            BoundaryLaw::Poisson { intensity } => {
                sample_atomic_poisson(interval, *intensity, &WeightDistribution::Dirac1, seed)
            }
            BoundaryLaw::Periodic { density } => periodic_measure(interval, *density, side),
        }
    }
}

/// Rarefaction initial condition: density `lambda` ahead of the origin,
/// `mu > lambda` behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RarefactionConfig {
    pub right: BoundaryLaw,
    pub left: BoundaryLaw,
}

impl RarefactionConfig {
    pub fn new(right: BoundaryLaw, left: BoundaryLaw) -> Result<Self> {
        let (lambda, mu) = (right.density(), left.density());
        if !(lambda > 0.0 && mu > lambda) {
            return Err(Error::invalid("rarefaction requires mu > lambda > 0"));
        }
        Ok(RarefactionConfig { right, left })
    }

    /// Sample the initial measure on `[window.0, window.1]`.
    pub fn sample(&self, window: (f64, f64), seed: u64) -> Result<AtomicMeasure> {
        if !(window.0 < 0.0 && window.1 > 0.0) {
            return Err(Error::invalid("window must straddle the origin"));
        }
        let right = self
            .right
            .sample((0.0, window.1), Side::Right, derive_seed(seed, &[1]))?;
        let left = self
            .left
            .sample((window.0, 0.0), Side::Left, derive_seed(seed, &[2]))?;
        Ok(right.merge(&left))
    }
}

/// Located second-class particle position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondClassPosition {
    pub x: f64,
    /// The position ran against the sampled window (either no candidate
    /// satisfied the exit criterion, or the left branch leaned on the west
    /// edge of the window) and should be recomputed with a wider one.
    pub saturated: bool,
}

/// Position of the second-class particle at time `t`:
/// `X(t) = inf { x >= 0 : L_{nu+}(x,t) >= L_{nu-}(x,t) }`.
///
/// The candidate positions are the origin, atoms of `nu` and point
/// x-coordinates; the sweep takes the first candidate where the plus branch
/// catches up.
pub fn second_class_position(
    nu: &AtomicMeasure,
    points: &WeightedPointSet,
    t: f64,
) -> Result<SecondClassPosition> {
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    let window = (points.rect.x0, points.rect.x1);
    if !(window.0 < 0.0 && window.1 > 0.0) {
        return Err(Error::invalid("point window must straddle the origin"));
    }
    let full = position_in_window(nu, points, t, window.0)?;
    match full {
        Some(x) => {
            // Window sensitivity check: recompute with the west extent
            // halved; a changed answer means the minus branch leaned on
            // unsampled territory and the caller should widen the window.
            let half = position_in_window(nu, points, t, window.0 / 2.0)?;
            Ok(SecondClassPosition {
                x,
                saturated: half != Some(x),
            })
        }
        None => Ok(SecondClassPosition {
            x: window.1,
            saturated: true,
        }),
    }
}

/// First candidate `x >= 0` with `L_{nu+}(x,t) >= L_{nu-}(x,t)` when the
/// data is truncated to `z > z_min`, or `None` if the plus branch never
/// catches up inside the window.
fn position_in_window(
    nu: &AtomicMeasure,
    points: &WeightedPointSet,
    t: f64,
    z_min: f64,
) -> Result<Option<f64>> {
    let nu = nu.restrict(z_min, f64::INFINITY);
    // Points usable by any branch: x in (z_min, x_hi], 0 < t_p <= t.
    let pts: Vec<Point> = points
        .points()
        .iter()
        .copied()
        .filter(|p| p.t > 0.0 && p.t <= t && p.x > z_min)
        .collect();

    // Plus branch: entries z in [0, x_p); minus branch: entries z < 0.
    let base_plus = |p: &Point| -> f64 {
        if p.x > 0.0 {
            nu.cumulative_left(p.x).max(0.0)
        } else {
            f64::NEG_INFINITY
        }
    };
    let base_minus = |p: &Point| -> f64 { nu.cumulative_left(p.x.min(0.0)) };
    let plus = chain_values(&pts, base_plus);
    let minus = chain_values(&pts, base_minus);

    // Direct boundary entries without any interior point.
    let minus_direct = -nu.mass_at(0.0); // sup_{z<0} nu(z)

    // Candidates in increasing order.
    let mut cands: Vec<f64> = Vec::with_capacity(nu.len() + pts.len() + 1);
    cands.push(0.0);
    cands.extend(nu.positions().iter().copied().filter(|&p| p > 0.0));
    cands.extend(pts.iter().map(|p| p.x).filter(|&x| x > 0.0));
    cands.sort_by(|a, b| a.total_cmp(b));
    cands.dedup();

    let mut run_plus = f64::NEG_INFINITY;
    let mut run_minus = minus_direct;
    let mut i = 0usize;
    for &c in &cands {
        while i < pts.len() && pts[i].x <= c {
            if plus[i] > run_plus {
                run_plus = plus[i];
            }
            if minus[i] > run_minus {
                run_minus = minus[i];
            }
            i += 1;
        }
        let l_plus = run_plus.max(nu.cumulative(c));
        if l_plus >= run_minus {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Particle trajectory over the given increasing times (nondecreasing by
/// monotonicity of the coupled dynamics).
pub fn trajectory(
    nu: &AtomicMeasure,
    points: &WeightedPointSet,
    times: &[f64],
) -> Result<Vec<(f64, SecondClassPosition)>> {
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    times
        .iter()
        .map(|&t| Ok((t, second_class_position(nu, points, t)?)))
        .collect()
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Speed law for Poisson initial data: `P(V <= v)` for right/left densities
/// `lambda < mu`.
pub fn rarefaction_cdf_poisson(lambda: f64, mu: f64, v: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > lambda) {
        return Err(Error::invalid("requires mu > lambda > 0"));
    }
    if !(v > 0.0) {
        return Err(Error::invalid("v must be positive"));
    }
    let tail = if v >= 1.0 / (lambda * lambda) {
        0.0
    } else if v <= 1.0 / (mu * mu) {
        1.0
    } else {
        (1.0 / v.sqrt() - lambda) / (mu - lambda)
    };
    Ok(1.0 - tail)
}

/// Positive fixed point of `p = 1 - exp(-p rho / lambda)`, by bisection to
/// absolute tolerance better than 1e-12. Exists iff `rho > lambda`.
pub fn solve_p_plus(lambda: f64, rho: f64) -> Result<f64> {
    if !(lambda > 0.0 && rho > lambda) {
        return Err(Error::invalid("positive root requires rho > lambda > 0"));
    }
    let c = rho / lambda;
    let g = |p: f64| -(-p * c).exp_m1() - p;
    let mut lo = 1e-300;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `P(S- <= k)`: distribution of the supremum of a Poisson(rho) path against
/// the periodic density `mu`, with the inner alternating sum in compensated
/// arithmetic.
pub fn s_minus_cdf(k: u32, rho: f64, mu: f64) -> Result<f64> {
    if !(rho > 0.0 && mu > rho) {
        return Err(Error::invalid("requires mu > rho > 0"));
    }
    let q = rho / mu;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    let mut log_fact = 0.0f64;
    for i in 0..=k {
        if i > 0 {
            log_fact += (i as f64).ln();
        }
        let kmi = (k - i) as f64;
        // (-q)^i * (k-i)^i / i! * exp(rho (k-i) / mu)
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let log_mag = if i == 0 {
            q * kmi
        } else if kmi == 0.0 {
            continue; // (k-i)^i = 0 for i = k > 0
        } else {
            (i as f64) * (q.ln() + kmi.ln()) - log_fact + q * kmi
        };
        let term = sign * log_mag.exp();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok((1.0 - q) * sum)
}

/// Speed law for periodic initial data at the comparison intensity `rho`:
/// `P(S+ >= S-)` as a truncated geometric series over the plus-side law.
///
/// Requires `lambda < rho < mu` and a truncation depth with geometric tail
/// `(1 - p+)^k_max < 1e-10`.
pub fn rarefaction_cdf_periodic(lambda: f64, mu: f64, rho: f64, k_max: u32) -> Result<f64> {
    if !(lambda > 0.0 && rho > lambda && mu > rho) {
        return Err(Error::invalid("requires lambda < rho < mu"));
    }
    let p_plus = solve_p_plus(lambda, rho)?;
    if (1.0 - p_plus).powi(k_max as i32) >= 1e-10 {
        return Err(Error::invalid(
            "k_max too small: geometric tail above 1e-10",
        ));
    }
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    let mut geom = p_plus;
    for k in 0..=k_max {
        let term = s_minus_cdf(k, rho, mu)? * geom;
        let y = term - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
        geom *= 1.0 - p_plus;
    }
    Ok(total)
}

/// The `lambda -> infinity` limit of the periodic law: `1 - rho/mu`.
pub fn rarefaction_periodic_lambda_inf(rho: f64, mu: f64) -> Result<f64> {
    if !(rho > 0.0 && mu > rho) {
        return Err(Error::invalid("requires mu > rho > 0"));
    }
    Ok(1.0 - rho / mu)
}

// ---------------------------------------------------------------------------
// Empirical speed distribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfKind {
    ClosedForm,
    Empirical,
}

/// A cumulative distribution of limiting speeds, evaluated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCdf {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub kind: CdfKind,
}

impl SpeedCdf {
    pub fn new(grid: Vec<f64>, cdf: Vec<f64>, kind: CdfKind) -> Result<Self> {
        if grid.len() != cdf.len() || grid.is_empty() {
            return Err(Error::invalid("grid and cdf must be nonempty, same length"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid must be strictly increasing"));
        }
        if cdf.windows(2).any(|w| w[0] > w[1] + 1e-12)
            || cdf.iter().any(|&p| !(-1e-12..=1.0 + 1e-12).contains(&p))
        {
            return Err(Error::invalid("cdf must be nondecreasing in [0, 1]"));
        }
        Ok(SpeedCdf { grid, cdf, kind })
    }

    /// Largest absolute difference to another CDF evaluator on this grid.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, other: F) -> f64 {
        self.grid
            .iter()
            .zip(&self.cdf)
            .map(|(&v, &p)| (p - other(v)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "v,cdf")?;
        for (v, p) in self.grid.iter().zip(&self.cdf) {
            writeln!(w, "{v},{p}")?;
        }
        Ok(())
    }
}

/// Monte Carlo speed distribution for a rarefaction configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedReport {
    pub t_final: f64,
    pub replicas: usize,
    pub saturation_rate: f64,
    pub cdf: SpeedCdf,
    /// Sorted observed speeds (for support checks and CSV export).
    #[serde(skip)]
    pub speeds: Vec<f64>,
}

impl SpeedReport {
    /// Fraction of observed speeds inside `[lo, hi]`.
    pub fn support_fraction(&self, lo: f64, hi: f64) -> f64 {
        if self.speeds.is_empty() {
            return 0.0;
        }
        let inside = self
            .speeds
            .iter()
            .filter(|&&v| v >= lo && v <= hi)
            .count();
        inside as f64 / self.speeds.len() as f64
    }
}

/// Empirical CDF of `X(T)/T` over replicas under unit-weight dynamics.
pub fn empirical_speed_distribution(
    config: &RarefactionConfig,
    t_final: f64,
    replicas: usize,
    v_grid: &[f64],
    seed: u64,
) -> Result<SpeedReport> {
    if !(t_final > 0.0) {
        return Err(Error::invalid("t_final must be positive"));
    }
    if replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let lambda = config.right.density();
    let x_hi = 1.3 * t_final / (lambda * lambda) + 20.0;
    let z_min = -3.0 * t_final - 20.0;

    let samples: Vec<SecondClassPosition> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s_nu = derive_seed(seed, &[0x2C1A, i]);
            let s_pts = derive_seed(seed, &[0x2C1B, i]);
            let nu = config.sample((z_min, x_hi), s_nu)?;
            let rect = Rect::new(z_min, x_hi, 0.0, t_final)?;
            let pts = sample_point_set(rect, 1.0, &WeightDistribution::Dirac1, s_pts)?;
            second_class_position(&nu, &pts, t_final)
        })
        .collect::<Result<_>>()?;

    let saturated = samples.iter().filter(|s| s.saturated).count();
    let mut speeds: Vec<f64> = samples.iter().map(|s| s.x / t_final).collect();
    speeds.sort_by(|a, b| a.total_cmp(b));
    let n = speeds.len() as f64;
    let cdf_vals: Vec<f64> = v_grid
        .iter()
        .map(|&v| speeds.partition_point(|&s| s <= v) as f64 / n)
        .collect();
    Ok(SpeedReport {
        t_final,
        replicas,
        saturation_rate: saturated as f64 / replicas as f64,
        cdf: SpeedCdf::new(v_grid.to_vec(), cdf_vals, CdfKind::Empirical)?,
        speeds,
    })
}

/// Strong-law check in classical equilibrium of intensity `lambda`:
/// mean of `X(T)/T` against the characteristic speed `1/lambda^2`, plus
/// exact trajectory monotonicity.
#[derive(Debug, Clone, Serialize)]
pub struct SecondClassLawReport {
    pub lambda: f64,
    pub t_final: f64,
    pub replicas: usize,
    pub mean_speed: f64,
    pub ci95: f64,
    pub target_speed: f64,
    pub monotone_all: bool,
    pub saturation_rate: f64,
    pub pass_speed: bool,
    pub pass_monotone: bool,
    #[serde(skip)]
    pub speeds: Vec<f64>,
}

impl SecondClassLawReport {
    pub fn pass(&self) -> bool {
        self.pass_speed && self.pass_monotone
    }
}

pub fn second_class_law_report(
    lambda: f64,
    t_final: f64,
    times: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<SecondClassLawReport> {
    if !(lambda > 0.0 && t_final > 0.0) {
        return Err(Error::invalid("lambda and t_final must be positive"));
    }
    if times.is_empty() || times.last().copied() != Some(t_final) {
        return Err(Error::invalid("times must end at t_final"));
    }
    let phi = 1.0 / (lambda * lambda);
    let x_hi = 2.0 * t_final * phi + 40.0;
    let z_min = -2.0 * t_final - 40.0;

    let runs: Vec<(f64, bool, bool)> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s_nu = derive_seed(seed, &[0x5C1A, i]);
            let s_pts = derive_seed(seed, &[0x5C1B, i]);
            let nu = sample_atomic_poisson(
                (z_min, x_hi),
                lambda,
                &WeightDistribution::Dirac1,
                s_nu,
            )?;
            let rect = Rect::new(z_min, x_hi, 0.0, t_final)?;
            let pts = sample_point_set(rect, 1.0, &WeightDistribution::Dirac1, s_pts)?;
            let traj = trajectory(&nu, &pts, times)?;
            let monotone = traj.windows(2).all(|w| w[0].1.x <= w[1].1.x);
            let saturated = traj.iter().any(|p| p.1.saturated);
            let last = traj.last().expect("times nonempty");
            Ok((last.1.x / t_final, monotone, saturated))
        })
        .collect::<Result<_>>()?;

    let speeds: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (mean_speed, ci95) = mean_ci95(&speeds);
    let speeds_out = speeds.clone();
    let monotone_all = runs.iter().all(|r| r.1);
    let saturation_rate =
        runs.iter().filter(|r| r.2).count() as f64 / replicas.max(1) as f64;
    Ok(SecondClassLawReport {
        lambda,
        t_final,
        replicas,
        mean_speed,
        ci95,
        target_speed: phi,
        monotone_all,
        saturation_rate,
        pass_speed: (mean_speed - phi).abs() <= 0.10 * phi,
        pass_monotone: monotone_all,
        speeds: speeds_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pts(rect: (f64, f64, f64, f64), p: &[(f64, f64, f64)]) -> WeightedPointSet {
        WeightedPointSet::from_points(
            Rect::new(rect.0, rect.1, rect.2, rect.3).unwrap(),
            p.iter().map(|&(x, t, w)| Point { x, t, w }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn time_zero_position_is_origin() {
        let nu = AtomicMeasure::new(vec![(-1.0, 1.0), (1.0, 1.0)]).unwrap();
        let ps = pts((-5.0, 5.0, 0.0, 5.0), &[(1.0, 1.0, 1.0)]);
        let r = second_class_position(&nu, &ps, 0.0).unwrap();
        assert_eq!(r.x, 0.0);
        assert!(!r.saturated);
    }

    #[test]
    fn no_left_mass_keeps_particle_at_origin() {
        // With neither fluid mass nor interior points left of the origin,
        // the minus branch can never win and the particle stays put.
        let nu = AtomicMeasure::new(vec![(0.5, 1.0), (2.0, 1.0)]).unwrap();
        for t in [0.5, 1.5, 4.0] {
            let ps = pts((-5.0, 5.0, 0.0, 5.0), &[(1.0, 1.0, 1.0), (2.5, 2.0, 1.0)]);
            let r = second_class_position(&nu, &ps, t).unwrap();
            assert_eq!(r.x, 0.0, "t={t}");
        }
    }

    #[test]
    fn poisson_cdf_boundaries() {
        // boundary v = 1/lambda^2: tail 0.
        assert_relative_eq!(rarefaction_cdf_poisson(1.0, 2.0, 1.0).unwrap(), 1.0);
        // boundary v = 1/mu^2: tail 1.
        assert_relative_eq!(rarefaction_cdf_poisson(1.0, 2.0, 0.25).unwrap(), 0.0);
        // interior point: tail (1/sqrt(0.49) - 1) / 1 = 3/7.
        assert_relative_eq!(
            rarefaction_cdf_poisson(1.0, 2.0, 0.49).unwrap(),
            1.0 - 3.0 / 7.0,
            epsilon = 1e-12
        );
        assert!(rarefaction_cdf_poisson(2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn p_plus_fixed_point() {
        // frozen from an independent bisection oracle
        let p = solve_p_plus(1.0, 2.0).unwrap();
        assert_relative_eq!(p, 0.7968121300200199, epsilon = 1e-12);
        // consistency: p solves its own equation
        assert!((p - (1.0 - (-2.0 * p).exp())).abs() < 1e-12);
        // root degenerates as rho -> lambda+
        let small = solve_p_plus(1.0, 1.0 + 1e-6).unwrap();
        assert!(small < 1e-5);
        assert!(solve_p_plus(1.0, 0.9).is_err());
    }

    #[test]
    fn s_minus_starts_at_one_minus_ratio() {
        // P(S- = 0) = 1 - rho/mu
        assert_relative_eq!(s_minus_cdf(0, 1.5, 2.0).unwrap(), 0.25, epsilon = 1e-12);
        // frozen from the series oracle
        assert_relative_eq!(
            s_minus_cdf(1, 1.5, 2.0).unwrap(),
            0.5292500041531687,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s_minus_cdf(3, 1.5, 2.0).unwrap(),
            0.840152121380936,
            epsilon = 1e-11
        );
    }

    #[test]
    fn periodic_series_value() {
        // frozen from the series oracle at (lambda, mu, rho) = (1, 2, 1.5)
        let v = rarefaction_cdf_periodic(1.0, 2.0, 1.5, 60).unwrap();
        assert_relative_eq!(v, 0.4114752992214977, epsilon = 1e-10);
        // lies below the Poisson-case value (mu - rho)/(mu - lambda) = 0.5
        assert!(v < 0.5);
        // insufficient truncation depth is rejected
        assert!(rarefaction_cdf_periodic(1.0, 2.0, 1.5, 3).is_err());
        assert!(rarefaction_cdf_periodic(1.0, 2.0, 2.5, 60).is_err());
    }

    #[test]
    fn lambda_inf_helper() {
        assert_relative_eq!(
            rarefaction_periodic_lambda_inf(1.5, 2.0).unwrap(),
            0.25
        );
        assert!(rarefaction_periodic_lambda_inf(2.0, 1.5).is_err());
    }

    #[test]
    fn speed_cdf_validation_and_sup_distance() {
        let c = SpeedCdf::new(vec![0.2, 0.5, 1.0], vec![0.0, 0.4, 1.0], CdfKind::Empirical)
            .unwrap();
        assert!(SpeedCdf::new(vec![0.5, 0.2], vec![0.0, 1.0], CdfKind::Empirical).is_err());
        let d = c.sup_distance(|v| v);
        assert_relative_eq!(d, 0.2);
    }

    #[test]
    fn rarefaction_config_validation() {
        assert!(RarefactionConfig::new(
            BoundaryLaw::Poisson { intensity: 2.0 },
            BoundaryLaw::Poisson { intensity: 1.0 },
        )
        .is_err());
        let c = RarefactionConfig::new(
            BoundaryLaw::Poisson { intensity: 1.0 },
            BoundaryLaw::Poisson { intensity: 2.0 },
        )
        .unwrap();
        let nu = c.sample((-50.0, 50.0), 3).unwrap();
        // roughly lambda mass right, mu mass left
        assert!(nu.cumulative(50.0) > 25.0 && nu.cumulative(50.0) < 80.0);
        assert!(nu.cumulative(-50.0) < -60.0);
    }
}
