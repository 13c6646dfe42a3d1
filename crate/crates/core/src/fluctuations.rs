//! Variance/covariance identities, Gaussian limits off the characteristic
//! direction, cube-root exponent estimation and shape-constant estimation.
//!
//! Everything here runs on the unit-weight model, where the stationary box
//! (Poisson(lambda) sources, Poisson(1/lambda) sinks, unit interior points)
//! gives exact-in-distribution samples of the equilibrium passage time from
//! finite data. Confidence intervals for derived statistics (variances,
//! covariances, identity gaps) come from batch means over a fixed number of
//! contiguous replica batches, so results do not depend on thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::lpp::{last_passage, sources_sinks_passage_bulk, PassageResult, SourcesSinks};
use crate::points::{
    sample_atomic_poisson, sample_point_set, AtomicMeasure, Rect, WeightDistribution,
    WeightedPointSet,
};
use crate::seeding::derive_seed;
use crate::stats::{ks_test, loglog_fit, mean_ci95, ExponentFit, KsReference, TestResult};

/// Harness constants: acceptance bands that are calibration choices, not
/// model quantities.
pub mod thresholds {
    /// Acceptance band for the cube-root exponent fits (2/3 +- 0.10).
    pub const SLOPE_BAND: (f64, f64) = (0.57, 0.77);
    /// Acceptance band for the unit-weight shape constant at t = 1000
    /// (gamma = 2 approached from below).
    pub const SHAPE_BAND: (f64, f64) = (1.95, 2.00);
    /// Variance-ratio tolerance for the non-characteristic CLT.
    pub const CLT_VAR_TOL: f64 = 0.10;
    /// KS acceptance level used across the statistical suites.
    pub const KS_LEVEL: f64 = 0.01;
    /// Bound on E(residual^2)/t for the stationarity check at t = 500.
    pub const STATIONARITY_RATIO_BOUND: f64 = 0.15;
    /// Number of contiguous batches used for batch-mean CIs.
    pub const BATCHES: usize = 25;
}

/// Monte Carlo moment estimates with 95% confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub covariance: Option<f64>,
    pub mean_ci95: f64,
    pub variance_ci95: f64,
    pub covariance_ci95: Option<f64>,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1.0)
}

/// CI half-width for an arbitrary statistic via batch means: the statistic
/// is recomputed on `thresholds::BATCHES` contiguous chunks and the spread
/// of the batch values gives a Student-t interval.
fn batch_ci<F: Fn(std::ops::Range<usize>) -> f64>(n: usize, stat: F) -> f64 {
    let b = thresholds::BATCHES.min(n / 2).max(2);
    let mut vals = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k * n / b;
        let hi = (k + 1) * n / b;
        vals.push(stat(lo..hi));
    }
    let (_, sd) = {
        let m = vals.iter().sum::<f64>() / b as f64;
        let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b as f64 - 1.0);
        (m, v.sqrt())
    };
    let t = StudentsT::new(0.0, 1.0, b as f64 - 1.0)
        .expect("valid dof")
        .inverse_cdf(0.975);
    t * sd / (b as f64).sqrt()
}

impl MomentSummary {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 4 {
            return Err(Error::invalid("need at least 4 samples"));
        }
        let (mean, mean_ci95) = mean_ci95(xs);
        let variance = sample_variance(xs);
        let variance_ci95 = batch_ci(xs.len(), |r| sample_variance(&xs[r]));
        Ok(MomentSummary {
            n: xs.len(),
            mean,
            variance,
            covariance: None,
            mean_ci95,
            variance_ci95,
            covariance_ci95: None,
        })
    }

    pub fn from_paired(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("paired samples must have equal length"));
        }
        let mut s = Self::from_samples(xs)?;
        s.covariance = Some(sample_covariance(xs, ys));
        s.covariance_ci95 = Some(batch_ci(xs.len(), |r| {
            sample_covariance(&xs[r.clone()], &ys[r])
        }));
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// Equilibrium box sampling
// ---------------------------------------------------------------------------

/// One stationary box realization: the passage result plus the boundary
/// cumulative readings used by the identities.
#[derive(Debug, Clone)]
pub struct EquilibriumSample {
    pub result: PassageResult,
    /// Source cumulative at the east corner, `nu_lambda(x)`.
    pub nu_x: f64,
    pub sources: AtomicMeasure,
    pub sinks: AtomicMeasure,
    pub points: WeightedPointSet,
}

/// Sample the stationary box of intensity `lambda` on `[0,x] x [0,t]` and
/// solve it. Unit weights only: the stationary boundary construction has no
/// analogue for general weight laws.
pub fn equilibrium_sample(lambda: f64, x: f64, t: f64, seed: u64) -> Result<EquilibriumSample> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be positive"));
    }
    if x < 0.0 || t < 0.0 {
        return Err(Error::invalid("box dimensions must be nonnegative"));
    }
    let dist = WeightDistribution::Dirac1;
    let sources = if x > 0.0 {
        sample_atomic_poisson((0.0, x), lambda, &dist, derive_seed(seed, &[1]))?
    } else {
        AtomicMeasure::empty()
    };
    let sinks = if t > 0.0 {
        sample_atomic_poisson((0.0, t), 1.0 / lambda, &dist, derive_seed(seed, &[2]))?
    } else {
        AtomicMeasure::empty()
    };
    let points = if x > 0.0 && t > 0.0 {
        sample_point_set(Rect::new(0.0, x, 0.0, t)?, 1.0, &dist, derive_seed(seed, &[3]))?
    } else {
        WeightedPointSet::from_points(
            Rect::new(-1.0, x.max(1.0), -1.0, t.max(1.0))?,
            Vec::new(),
        )?
    };
    let ss = SourcesSinks::new(sources.clone(), sinks.clone());
    let result = sources_sinks_passage_bulk(&ss, &points, x, t)?;
    let nu_x = sources.cumulative(x);
    Ok(EquilibriumSample {
        result,
        nu_x,
        sources,
        sinks,
        points,
    })
}

/// Exact-in-distribution sample of the equilibrium passage time
/// `L_lambda(x, t)` with its exit points.
pub fn equilibrium_passage(lambda: f64, x: f64, t: f64, seed: u64) -> Result<PassageResult> {
    Ok(equilibrium_sample(lambda, x, t, seed)?.result)
}

// ---------------------------------------------------------------------------
// Exit-point identities
// ---------------------------------------------------------------------------

/// Verdicts for the exit-point variance and covariance identities at one
/// `(lambda, x, t)`.
#[derive(Debug, Clone, Serialize)]
pub struct ExitIdentityReport {
    pub lambda: f64,
    pub x: f64,
    pub t: f64,
    pub replicas: usize,
    pub var_l: f64,
    pub var_l_ci95: f64,
    /// `t/lambda - lambda x + 2 lambda E Z+`.
    pub identity_rhs: f64,
    pub mean_z_plus: f64,
    pub cov_nu_l: f64,
    /// `lambda E Z+`.
    pub cov_rhs: f64,
    /// Batch-mean gap `Var - rhs` with its CI.
    pub var_gap: f64,
    pub var_gap_ci95: f64,
    pub cov_gap: f64,
    pub cov_gap_ci95: f64,
    pub pass_variance_identity: bool,
    pub pass_covariance_identity: bool,
    /// Raw `(L, nu_x, z_plus)` rows for CSV export.
    #[serde(skip)]
    pub samples: Vec<(f64, f64, f64)>,
}

impl ExitIdentityReport {
    pub fn pass(&self) -> bool {
        self.pass_variance_identity && self.pass_covariance_identity
    }
}

pub fn exit_identity_report(
    lambda: f64,
    x: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<ExitIdentityReport> {
    if replicas < 100 {
        return Err(Error::invalid("identity checks need at least 100 replicas"));
    }
    let rows: Vec<(f64, f64, f64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s = equilibrium_sample(lambda, x, t, derive_seed(seed, &[0xE1, i]))?;
            let z_plus = s.result.z_plus().unwrap_or(0.0);
            Ok((s.result.value, s.nu_x, z_plus))
        })
        .collect::<Result<_>>()?;

    let ls: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let nus: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let zs: Vec<f64> = rows.iter().map(|r| r.2).collect();

    let n = ls.len();
    let offset = t / lambda - lambda * x;
    let var_l = sample_variance(&ls);
    let var_l_ci95 = batch_ci(n, |r| sample_variance(&ls[r]));
    let mean_z_plus = zs.iter().sum::<f64>() / n as f64;
    let identity_rhs = offset + 2.0 * lambda * mean_z_plus;
    let cov_nu_l = sample_covariance(&nus, &ls);
    let cov_rhs = lambda * mean_z_plus;

    let var_gap_stat = |r: std::ops::Range<usize>| {
        let m_z = zs[r.clone()].iter().sum::<f64>() / (r.len() as f64);
        sample_variance(&ls[r]) - offset - 2.0 * lambda * m_z
    };
    let var_gap = var_l - identity_rhs;
    let var_gap_ci95 = batch_ci(n, var_gap_stat);
    let cov_gap_stat = |r: std::ops::Range<usize>| {
        let m_z = zs[r.clone()].iter().sum::<f64>() / (r.len() as f64);
        sample_covariance(&nus[r.clone()], &ls[r]) - lambda * m_z
    };
    let cov_gap = cov_nu_l - cov_rhs;
    let cov_gap_ci95 = batch_ci(n, cov_gap_stat);

    Ok(ExitIdentityReport {
        lambda,
        x,
        t,
        replicas,
        var_l,
        var_l_ci95,
        identity_rhs,
        mean_z_plus,
        cov_nu_l,
        cov_rhs,
        var_gap,
        var_gap_ci95,
        cov_gap,
        cov_gap_ci95,
        pass_variance_identity: var_gap.abs() <= var_gap_ci95,
        pass_covariance_identity: cov_gap.abs() <= cov_gap_ci95,
        samples: rows,
    })
}

// ---------------------------------------------------------------------------
// Stationarity residual
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub lambda: f64,
    pub speed_a: f64,
    pub t: f64,
    pub replicas: usize,
    /// Mean square of `L(at,t) - nu(b) - psi t`.
    pub mean_square: f64,
    pub mean_square_ci95: f64,
    /// Reference `Var L(phi t, t)` from independent replicas.
    pub var_characteristic: f64,
    pub var_characteristic_ci95: f64,
    pub ratio_to_t: f64,
    pub pass_identity: bool,
    pub pass_ratio_bound: bool,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl StationarityReport {
    pub fn pass(&self) -> bool {
        self.pass_identity && self.pass_ratio_bound
    }
}

/// Mean-square of the stationarity residual along speed `a >= phi`,
/// compared against the characteristic-direction variance.
pub fn stationarity_residual(
    lambda: f64,
    speed_a: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<StationarityReport> {
    let phi = 1.0 / (lambda * lambda);
    let psi = 2.0 / lambda;
    if speed_a < phi {
        return Err(Error::invalid(
            "supported speeds have a >= phi = 1/lambda^2 (b on the source axis)",
        ));
    }
    if replicas < 100 {
        return Err(Error::invalid("need at least 100 replicas"));
    }
    let x = speed_a * t;
    let b = x - phi * t;

    let residuals: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s = equilibrium_sample(lambda, x, t, derive_seed(seed, &[0x5A, i]))?;
            Ok(s.result.value - s.sources.cumulative(b) - psi * t)
        })
        .collect::<Result<_>>()?;
    let refs: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s = equilibrium_sample(lambda, phi * t, t, derive_seed(seed, &[0x5B, i]))?;
            Ok(s.result.value)
        })
        .collect::<Result<_>>()?;

    let sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    let (mean_square, mean_square_ci95) = mean_ci95(&sq);
    let var_characteristic = sample_variance(&refs);
    let var_characteristic_ci95 = batch_ci(refs.len(), |r| sample_variance(&refs[r]));
    let ratio_to_t = mean_square / t;
    Ok(StationarityReport {
        lambda,
        speed_a,
        t,
        replicas,
        mean_square,
        mean_square_ci95,
        var_characteristic,
        var_characteristic_ci95,
        ratio_to_t,
        pass_identity: (mean_square - var_characteristic).abs()
            <= mean_square_ci95 + var_characteristic_ci95,
        pass_ratio_bound: ratio_to_t < thresholds::STATIONARITY_RATIO_BOUND,
        residuals,
    })
}

// ---------------------------------------------------------------------------
// Central limit checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub lambda: f64,
    pub speed_a: f64,
    pub t: f64,
    pub replicas: usize,
    pub sigma_squared: f64,
    pub var_ratio: f64,
    pub ks: TestResult,
    pub pass_variance: bool,
    pub pass_normality: bool,
    #[serde(skip)]
    pub standardized: Vec<f64>,
}

impl CltReport {
    pub fn pass(&self) -> bool {
        self.pass_variance && self.pass_normality
    }
}

/// Gaussian fluctuations of `L_lambda(at, t)` off the characteristic
/// direction: variance slope `|a lambda - 1/lambda|` and a KS normality
/// check of the standardized samples.
pub fn clt_check(lambda: f64, speed_a: f64, t: f64, replicas: usize, seed: u64) -> Result<CltReport> {
    let phi = 1.0 / (lambda * lambda);
    if (speed_a - phi).abs() < 1e-9 {
        return Err(Error::invalid(
            "characteristic direction rejected: a = 1/lambda^2 has sublinear variance",
        ));
    }
    if replicas < 100 {
        return Err(Error::invalid("need at least 100 replicas"));
    }
    let x = speed_a * t;
    let sigma_squared = (speed_a * lambda - 1.0 / lambda).abs();
    let center = lambda * x + t / lambda;
    let scale = (sigma_squared * t).sqrt();

    let standardized: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s = equilibrium_sample(lambda, x, t, derive_seed(seed, &[0xC1, i]))?;
            Ok((s.result.value - center) / scale)
        })
        .collect::<Result<_>>()?;

    let var_ratio = sample_variance(&standardized);
    let ks = ks_test(&standardized, KsReference::StandardNormal)?;
    Ok(CltReport {
        lambda,
        speed_a,
        t,
        replicas,
        sigma_squared,
        var_ratio,
        ks,
        pass_variance: (var_ratio - 1.0).abs() <= thresholds::CLT_VAR_TOL,
        pass_normality: ks.p_value > thresholds::KS_LEVEL,
        standardized,
    })
}

/// Busemann-direction CLT along `beta in [0, pi/2]`: `B(beta, t)` equals the
/// equilibrium passage to `t(cos beta, sin beta)` at intensity 1, so its
/// variance slope is `|cos beta - sin beta|`.
pub fn busemann_direction_clt(
    beta: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<CltReport> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&beta) {
        return Err(Error::invalid("beta must lie in [0, pi/2]"));
    }
    let slope = (beta.cos() - beta.sin()).abs();
    if slope < 1e-9 {
        return Err(Error::invalid(
            "diagonal direction rejected: variance slope vanishes",
        ));
    }
    if replicas < 100 {
        return Err(Error::invalid("need at least 100 replicas"));
    }
    let (x, tt) = (t * beta.cos(), t * beta.sin());
    let center = x + tt;
    let scale = (slope * t).sqrt();
    let standardized: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let s = equilibrium_sample(1.0, x, tt, derive_seed(seed, &[0xB3, i]))?;
            Ok((s.result.value - center) / scale)
        })
        .collect::<Result<_>>()?;
    let var_ratio = sample_variance(&standardized);
    let ks = ks_test(&standardized, KsReference::StandardNormal)?;
    Ok(CltReport {
        lambda: 1.0,
        speed_a: beta,
        t,
        replicas,
        sigma_squared: slope,
        var_ratio,
        ks,
        pass_variance: (var_ratio - 1.0).abs() <= thresholds::CLT_VAR_TOL,
        pass_normality: ks.p_value > thresholds::KS_LEVEL,
        standardized,
    })
}

// ---------------------------------------------------------------------------
// Cube-root scaling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CubeRootPoint {
    pub t: f64,
    pub var_l: f64,
    pub var_l_ci95: f64,
    pub mean_z_plus: f64,
    pub mean_z_plus_ci95: f64,
    pub identity_gap: f64,
    pub identity_gap_ci95: f64,
    pub pass_identity: bool,
    /// `P(Z > r t^{2/3})` for r in {1, 2, 4}.
    pub tail_probs: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeRootReport {
    pub t_grid: Vec<f64>,
    pub replicas_per_t: usize,
    pub points: Vec<CubeRootPoint>,
    pub var_fit: ExponentFit,
    pub z_plus_fit: ExponentFit,
    pub pass_var_slope: bool,
    pub pass_z_slope: bool,
    pub pass_identity: bool,
    pub pass_tail: bool,
    /// Raw `(t, L, z_plus)` rows for CSV export.
    #[serde(skip)]
    pub samples: Vec<(f64, f64, f64)>,
}

impl CubeRootReport {
    pub fn pass(&self) -> bool {
        self.pass_var_slope && self.pass_z_slope && self.pass_identity && self.pass_tail
    }
}

/// Cube-root scaling at the characteristic direction: log-log slopes of
/// `Var L_1(t,t)` and `E Z+_1(t,t)` over a geometric t-grid, the per-t
/// identity `Var = 2 E Z+`, and the exit tail profile.
pub fn cube_root_fit(t_grid: &[f64], replicas_per_t: usize, seed: u64) -> Result<CubeRootReport> {
    if t_grid.len() < 4 {
        return Err(Error::invalid("need at least 4 grid points"));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid[0] <= 0.0 {
        return Err(Error::invalid("t grid must be positive increasing"));
    }
    if replicas_per_t < 100 {
        return Err(Error::invalid("need at least 100 replicas per t"));
    }

    let mut points = Vec::with_capacity(t_grid.len());
    let mut samples = Vec::new();
    for (ti, &t) in t_grid.iter().enumerate() {
        let rows: Vec<(f64, f64, f64)> = (0..replicas_per_t as u64)
            .into_par_iter()
            .map(|i| {
                let s = equilibrium_sample(
                    1.0,
                    t,
                    t,
                    derive_seed(seed, &[0xCB, ti as u64, i]),
                )?;
                let z_bar = s.result.exit_sup.unwrap_or(0.0);
                Ok((s.result.value, z_bar.max(0.0), z_bar))
            })
            .collect::<Result<_>>()?;
        samples.extend(rows.iter().map(|r| (t, r.0, r.1)));
        let ls: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let zp: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let n = ls.len();
        let var_l = sample_variance(&ls);
        let var_l_ci95 = batch_ci(n, |r| sample_variance(&ls[r]));
        let (mean_z_plus, mean_z_plus_ci95) = mean_ci95(&zp);
        let identity_gap = var_l - 2.0 * mean_z_plus;
        let identity_gap_ci95 = batch_ci(n, |r| {
            let m_z = zp[r.clone()].iter().sum::<f64>() / (r.len() as f64);
            sample_variance(&ls[r]) - 2.0 * m_z
        });
        let scale = t.powf(2.0 / 3.0);
        let tail = |r: f64| {
            rows.iter().filter(|row| row.2 > r * scale).count() as f64 / n as f64
        };
        points.push(CubeRootPoint {
            t,
            var_l,
            var_l_ci95,
            mean_z_plus,
            mean_z_plus_ci95,
            identity_gap,
            identity_gap_ci95,
            pass_identity: identity_gap.abs() <= identity_gap_ci95,
            tail_probs: [tail(1.0), tail(2.0), tail(4.0)],
        });
    }

    let var_fit = loglog_fit(
        &points
            .iter()
            .map(|p| (p.t, p.var_l))
            .collect::<Vec<_>>(),
    )?;
    let z_plus_fit = loglog_fit(
        &points
            .iter()
            .map(|p| (p.t, p.mean_z_plus))
            .collect::<Vec<_>>(),
    )?;

    let band = thresholds::SLOPE_BAND;
    let in_band = |s: f64| s >= band.0 && s <= band.1;
    // Weak-form tail check: nonincreasing in r and falling faster than
    // r^{-2} between successive doublings (up to slack for empty tails).
    let pass_tail = points.iter().all(|p| {
        let [p1, p2, p4] = p.tail_probs;
        let mono = p1 >= p2 && p2 >= p4;
        let fast2 = p2 <= p1 / 4.0 + 0.02 && p4 <= p2 / 4.0 + 0.02;
        mono && fast2
    });

    Ok(CubeRootReport {
        t_grid: t_grid.to_vec(),
        replicas_per_t,
        pass_var_slope: in_band(var_fit.slope),
        pass_z_slope: in_band(z_plus_fit.slope),
        pass_identity: points.iter().all(|p| p.pass_identity),
        pass_tail,
        points,
        var_fit,
        z_plus_fit,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Stationary vs free comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CompareStationaryPoint {
    pub t: f64,
    /// `E |L(t,t) - 2t| / t^{1/3}`.
    pub abs_scaled: f64,
    pub abs_scaled_ci95: f64,
    /// `P(|L_1 - L| >= r t^{1/3})` for r in {2, 4, 8} on coupled samples.
    pub coupled_tail: [f64; 3],
    /// Every replica satisfied `L_1(t,t) >= L(0,(t,t))`.
    pub domination_all: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareStationaryReport {
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub points: Vec<CompareStationaryPoint>,
    pub ratio_max_min: f64,
    pub pass_ratio: bool,
    pub pass_tail_monotone: bool,
    pub pass_domination: bool,
    /// Raw `(t, L_free, L_stationary)` rows for CSV export.
    #[serde(skip)]
    pub samples: Vec<(f64, f64, f64)>,
}

impl CompareStationaryReport {
    pub fn pass(&self) -> bool {
        self.pass_ratio && self.pass_tail_monotone && self.pass_domination
    }
}

/// Couple the free passage time `L(0,(t,t))` with the stationary
/// `L_1(t,t)` on shared interior points and compare their fluctuations.
pub fn compare_stationary(
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<CompareStationaryReport> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid[0] <= 0.0 {
        return Err(Error::invalid("t grid must be positive increasing"));
    }
    if replicas < 100 {
        return Err(Error::invalid("need at least 100 replicas"));
    }
    let dist = WeightDistribution::Dirac1;
    let mut points_out = Vec::with_capacity(t_grid.len());
    let mut samples = Vec::new();
    for (ti, &t) in t_grid.iter().enumerate() {
        let rows: Vec<(f64, f64, bool)> = (0..replicas as u64)
            .into_par_iter()
            .map(|i| {
                let s_pts = derive_seed(seed, &[0xC5, ti as u64, i]);
                let pts = sample_point_set(Rect::new(0.0, t, 0.0, t)?, 1.0, &dist, s_pts)?;
                let l_free = last_passage(&pts, (0.0, 0.0), (t, t))?;
                let sources = sample_atomic_poisson(
                    (0.0, t),
                    1.0,
                    &dist,
                    derive_seed(seed, &[0xC6, ti as u64, i]),
                )?;
                let sinks = sample_atomic_poisson(
                    (0.0, t),
                    1.0,
                    &dist,
                    derive_seed(seed, &[0xC7, ti as u64, i]),
                )?;
                let ss = SourcesSinks::new(sources, sinks);
                let l_eq = sources_sinks_passage_bulk(&ss, &pts, t, t)?.value;
                Ok((l_free, l_eq, l_eq + 1e-9 >= l_free))
            })
            .collect::<Result<_>>()?;
        samples.extend(rows.iter().map(|r| (t, r.0, r.1)));
        let scale = t.powf(1.0 / 3.0);
        let abs_scaled_samples: Vec<f64> =
            rows.iter().map(|r| (r.0 - 2.0 * t).abs() / scale).collect();
        let (abs_scaled, abs_scaled_ci95) = mean_ci95(&abs_scaled_samples);
        let n = rows.len() as f64;
        let tail = |r: f64| {
            rows.iter()
                .filter(|row| (row.1 - row.0).abs() >= r * scale)
                .count() as f64
                / n
        };
        points_out.push(CompareStationaryPoint {
            t,
            abs_scaled,
            abs_scaled_ci95,
            coupled_tail: [tail(2.0), tail(4.0), tail(8.0)],
            domination_all: rows.iter().all(|r| r.2),
        });
    }

    let max = points_out
        .iter()
        .map(|p| p.abs_scaled)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = points_out
        .iter()
        .map(|p| p.abs_scaled)
        .fold(f64::INFINITY, f64::min);
    let ratio_max_min = max / min;
    let pass_tail_monotone = points_out
        .iter()
        .all(|p| p.coupled_tail[0] >= p.coupled_tail[1] && p.coupled_tail[1] >= p.coupled_tail[2]);
    Ok(CompareStationaryReport {
        t_grid: t_grid.to_vec(),
        replicas,
        ratio_max_min,
        pass_ratio: ratio_max_min <= 2.0,
        pass_tail_monotone,
        pass_domination: points_out.iter().all(|p| p.domination_all),
        points: points_out,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Shape constant
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ShapePoint {
    pub t: f64,
    pub mean_l_over_t: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeReport {
    pub dist: WeightDistribution,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub points: Vec<ShapePoint>,
    /// Estimate at the largest grid point (the sequence increases to gamma).
    pub gamma_hat: f64,
    pub gamma_hat_ci95: f64,
    /// Domination bound `2 * sqrt-tail-integral`.
    pub bound: f64,
    pub pass_monotone: bool,
    pub pass_bound: bool,
    /// Only checked for unit weights: gamma_hat inside the acceptance band.
    pub pass_band: Option<bool>,
    /// Raw `(t, L/t)` values for CSV export.
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

impl ShapeReport {
    pub fn pass(&self) -> bool {
        self.pass_monotone && self.pass_bound && self.pass_band.unwrap_or(true)
    }
}

/// Estimate the shape constant `gamma(F) = lim E L(0,(t,t))/t` over a grid,
/// reporting the largest-t value with the monotone-approach check and the
/// square-root-tail domination bound.
pub fn shape_estimate(
    dist: &WeightDistribution,
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<ShapeReport> {
    dist.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid[0] <= 0.0 {
        return Err(Error::invalid("t grid must be positive increasing"));
    }
    if replicas < 10 {
        return Err(Error::invalid("need at least 10 replicas"));
    }
    let mut points = Vec::with_capacity(t_grid.len());
    let mut samples = Vec::new();
    for (ti, &t) in t_grid.iter().enumerate() {
        let vals: Vec<f64> = (0..replicas as u64)
            .into_par_iter()
            .map(|i| {
                let pts = sample_point_set(
                    Rect::new(0.0, t, 0.0, t)?,
                    1.0,
                    dist,
                    derive_seed(seed, &[0x5E, ti as u64, i]),
                )?;
                Ok(last_passage(&pts, (0.0, 0.0), (t, t))? / t)
            })
            .collect::<Result<_>>()?;
        let (mean, ci) = mean_ci95(&vals);
        samples.extend(vals.iter().map(|&v| (t, v)));
        points.push(ShapePoint {
            t,
            mean_l_over_t: mean,
            ci95: ci,
        });
    }
    let last = points.last().expect("grid nonempty");
    let gamma_hat = last.mean_l_over_t;
    let gamma_hat_ci95 = last.ci95;
    let bound = 2.0 * dist.sqrt_tail_integral();
    let pass_monotone = points
        .windows(2)
        .all(|w| w[1].mean_l_over_t + w[1].ci95 + w[0].ci95 >= w[0].mean_l_over_t);
    let pass_bound = gamma_hat - gamma_hat_ci95 <= bound;
    let pass_band = dist.is_unit().then(|| {
        let band = thresholds::SHAPE_BAND;
        gamma_hat >= band.0 && gamma_hat <= band.1
    });
    Ok(ShapeReport {
        dist: dist.clone(),
        t_grid: t_grid.to_vec(),
        replicas,
        points,
        gamma_hat,
        gamma_hat_ci95,
        bound,
        pass_monotone,
        pass_bound,
        pass_band,
        samples,
    })
}
