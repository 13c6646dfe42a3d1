//! Statistical testing primitives shared by the experiment harness:
//! Kolmogorov-Smirnov tests, a Pearson/Fisher independence test, chi-square
//! goodness of fit against a Poisson law, and log-log regression for
//! exponent estimation.
//!
//! P-values are asymptotic; every test requires a moderate minimum sample
//! size (the acceptance suites all use n >= 100).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl TestResult {
    /// True when the test rejects at the given level.
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Least-squares fit of `log y` against `log t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// The design points `(log t, log y)`.
    pub design: Vec<(f64, f64)>,
}

/// Reference distribution for the one-sample KS test.
pub enum KsReference<'a> {
    Exponential { rate: f64 },
    StandardNormal,
    /// Two-sample test against another empirical sample.
    Empirical(&'a [f64]),
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

/// Asymptotic Kolmogorov tail probability Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    // Stephens' small-sample correction to the asymptotic law.
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// Two-sided Kolmogorov-Smirnov test of `sample` against a reference law or
/// a second sample. Requires n >= 20.
pub fn ks_test(sample: &[f64], reference: KsReference) -> Result<TestResult> {
    let n = sample.len();
    if n < 20 {
        return Err(Error::invalid("ks_test requires n >= 20"));
    }
    let xs = sorted(sample);
    match reference {
        KsReference::Empirical(other) => {
            if other.len() < 20 {
                return Err(Error::invalid("ks_test requires n >= 20 in both samples"));
            }
            let ys = sorted(other);
            let (mut i, mut j) = (0usize, 0usize);
            let (nx, ny) = (xs.len() as f64, ys.len() as f64);
            let mut d: f64 = 0.0;
            while i < xs.len() && j < ys.len() {
                let v = xs[i].min(ys[j]);
                while i < xs.len() && xs[i] <= v {
                    i += 1;
                }
                while j < ys.len() && ys[j] <= v {
                    j += 1;
                }
                d = d.max((i as f64 / nx - j as f64 / ny).abs());
            }
            let n_eff = nx * ny / (nx + ny);
            Ok(TestResult {
                statistic: d,
                p_value: ks_p_value(d, n_eff),
                n,
            })
        }
        _ => {
            let cdf: Box<dyn Fn(f64) -> f64> = match reference {
                KsReference::Exponential { rate } => {
                    if rate <= 0.0 {
                        return Err(Error::invalid("exponential rate must be positive"));
                    }
                    Box::new(move |x: f64| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })
                }
                KsReference::StandardNormal => {
                    let nd = Normal::new(0.0, 1.0).expect("standard normal");
                    Box::new(move |x: f64| nd.cdf(x))
                }
                KsReference::Empirical(_) => unreachable!(),
            };
            let nf = n as f64;
            let mut d: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let f = cdf(x);
                d = d.max(((i + 1) as f64 / nf - f).abs());
                d = d.max((i as f64 / nf - f).abs());
            }
            Ok(TestResult {
                statistic: d,
                p_value: ks_p_value(d, nf),
                n,
            })
        }
    }
}

/// Pearson-correlation independence test with a Fisher-z p-value.
/// Requires paired samples of equal length n >= 30 and nonzero variances.
pub fn independence_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::invalid("paired samples must have equal length"));
    }
    if n < 30 {
        return Err(Error::invalid("independence_test requires n >= 30"));
    }
    let nf = n as f64;
    let ma = a.iter().sum::<f64>() / nf;
    let mb = b.iter().sum::<f64>() / nf;
    let mut sa = 0.0;
    let mut sb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        sa += (x - ma) * (x - ma);
        sb += (y - mb) * (y - mb);
        sab += (x - ma) * (y - mb);
    }
    if sa == 0.0 || sb == 0.0 {
        return Err(Error::invalid("independence_test requires nonzero variance"));
    }
    let r = (sab / (sa.sqrt() * sb.sqrt())).clamp(-1.0, 1.0);
    let z = if r.abs() >= 1.0 {
        f64::INFINITY
    } else {
        r.atanh() * (nf - 3.0).sqrt()
    };
    let nd = Normal::new(0.0, 1.0).expect("standard normal");
    let p = if z.is_finite() {
        2.0 * (1.0 - nd.cdf(z.abs()))
    } else {
        0.0
    };
    Ok(TestResult {
        statistic: r,
        p_value: p.clamp(0.0, 1.0),
        n,
    })
}

/// Chi-square goodness-of-fit of observed counts against Poisson(`mean`).
/// Count categories with small expectation are pooled so every cell has
/// expected count >= 5.
pub fn chi_square_poisson(counts: &[u64], mean: f64) -> Result<TestResult> {
    let n = counts.len();
    if n < 20 {
        return Err(Error::invalid("chi_square_poisson requires n >= 20 cells"));
    }
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::invalid("mean must be positive"));
    }
    let max_c = *counts.iter().max().expect("nonempty") as usize;
    let mut observed = vec![0.0f64; max_c + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    // Poisson pmf by forward recurrence.
    let nf = n as f64;
    let mut pmf = Vec::with_capacity(max_c + 2);
    let mut p = (-mean).exp();
    let mut tail = 1.0;
    for k in 0..=max_c {
        pmf.push(p);
        tail -= p;
        p *= mean / (k as f64 + 1.0);
    }
    pmf.push(tail.max(0.0)); // everything above max_c

    // Pool adjacent cells until each expected count is >= 5.
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for k in 0..pmf.len() {
        acc_o += observed.get(k).copied().unwrap_or(0.0);
        acc_e += pmf[k] * nf;
        if acc_e >= 5.0 {
            cells.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let Some(last) = cells.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            cells.push((acc_o, acc_e));
        }
    }
    if cells.len() < 2 {
        return Err(Error::invalid(
            "too few count categories for a chi-square test",
        ));
    }
    let stat: f64 = cells
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (cells.len() - 1) as f64;
    let chi = ChiSquared::new(df).expect("positive df");
    Ok(TestResult {
        statistic: stat,
        p_value: (1.0 - chi.cdf(stat)).clamp(0.0, 1.0),
        n,
    })
}

/// Sample mean with a normal-approximation 95% CI half-width.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Least squares of `log y` on `log t`. All inputs must be positive, at
/// least three points.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::invalid("loglog_fit requires at least 3 points"));
    }
    if points.iter().any(|&(t, y)| t <= 0.0 || y <= 0.0) {
        return Err(Error::invalid("loglog_fit requires positive values"));
    }
    let design: Vec<(f64, f64)> = points.iter().map(|&(t, y)| (t.ln(), y.ln())).collect();
    let n = design.len() as f64;
    let mx = design.iter().map(|p| p.0).sum::<f64>() / n;
    let my = design.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = design.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = design.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("loglog_fit requires distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = design
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let ss_tot: f64 = design.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let dof = (design.len() - 2) as f64;
    let slope_stderr = if dof > 0.0 {
        (ss_res / dof / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExponentFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        design,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_sample_vs_continuous_rejects() {
        let xs = vec![1.0; 100];
        let r = ks_test(&xs, KsReference::Exponential { rate: 1.0 }).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn identical_empirical_samples_have_zero_statistic() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let r = ks_test(&xs, KsReference::Empirical(&xs)).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn small_sample_rejected() {
        let xs = vec![1.0; 10];
        assert!(ks_test(&xs, KsReference::StandardNormal).is_err());
        assert!(independence_test(&xs, &xs).is_err());
    }

    #[test]
    fn perfectly_dependent_samples_reject() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b = a.clone();
        let r = independence_test(&a, &b).unwrap();
        assert!(r.p_value < 1e-10);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let r = independence_test(&a, &neg).unwrap();
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn zero_variance_rejected() {
        let a = vec![1.0; 40];
        let b: Vec<f64> = (0..40).map(|i| i as f64).collect();
        assert!(independence_test(&a, &b).is_err());
    }

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&t: &f64| (t, t.powf(2.0 / 3.0)))
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert_relative_eq!(fit.slope, 2.0 / 3.0, epsilon = 1e-12);
        assert!(fit.slope_stderr < 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_law_has_unit_slope() {
        let pts: Vec<(f64, f64)> = [1.0, 3.0, 9.0, 27.0].iter().map(|&t| (t, 5.0 * t)).collect();
        let fit = loglog_fit(&pts).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 5.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn loglog_rejects_bad_input() {
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn chi_square_detects_wrong_mean() {
        // counts identically 3 against Poisson(1): strongly rejected.
        let counts = vec![3u64; 200];
        let r = chi_square_poisson(&counts, 1.0).unwrap();
        assert!(r.p_value < 1e-10);
    }
}
