//! Descriptive statistics and the goodness-of-fit tests used to compare the
//! engines with each other and with the exact kernel.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// Sample standard deviation (`n - 1` denominator); 0 for a single value.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    let d = ChiSquared::new(dof).expect("positive degrees of freedom");
    d.sf(stat)
}

/// Pearson goodness-of-fit of `observed` counts against `probs`. Cells with
/// expected count below `min_expected` are pooled into one cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<TestResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::InvalidParameter("observed/probs length mismatch".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no observations".into()));
    }
    let t = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * t;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 || pooled_obs > 0.0 {
        cells.push((pooled_obs, pooled_exp));
    }
    let mut stat = 0.0;
    for &(o, e) in &cells {
        if e == 0.0 {
            if o > 0.0 {
                return Ok(TestResult {
                    statistic: f64::INFINITY,
                    dof: (cells.len() - 1) as f64,
                    p_value: 0.0,
                });
            }
            continue;
        }
        stat += (o - e) * (o - e) / e;
    }
    let dof = cells.len().saturating_sub(1) as f64;
    Ok(TestResult {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
    })
}

/// Chi-square test of homogeneity between two samples binned the same way.
/// Bins whose pooled count is below `min_count` are merged.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_count: u64) -> Result<TestResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidParameter("bin vectors differ in length".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Empty("a sample has no observations".into()));
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut sa, mut sb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if x + y < min_count {
            sa += x as f64;
            sb += y as f64;
        } else {
            bins.push((x as f64, y as f64));
        }
    }
    if sa + sb > 0.0 {
        bins.push((sa, sb));
    }
    let total = na + nb;
    let mut stat = 0.0;
    for &(x, y) in &bins {
        let col = x + y;
        let ea = na * col / total;
        let eb = nb * col / total;
        stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    let dof = bins.len().saturating_sub(1) as f64;
    Ok(TestResult {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
    })
}

/// Kolmogorov distribution tail `Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value. On
/// discrete data the p-value is conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS needs two non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(TestResult {
        statistic: d,
        dof: 0.0,
        p_value: kolmogorov_q(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptive() {
        let xs = [7.0; 5];
        assert_eq!(mean(&xs), Some(7.0));
        assert_eq!(median(&xs), Some(7.0));
        assert_eq!(std_dev(&xs), Some(0.0));
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(mean(&[]), None);
    }

    #[test]
    fn wilson_half() {
        let (lo, hi) = wilson_interval(500, 1000, Z95);
        assert!(lo >= 0.46 && hi <= 0.54 && lo < 0.5 && hi > 0.5, "{lo} {hi}");
        let (lo, hi) = wilson_interval(100, 100, Z95);
        assert!(lo < 1.0 && hi == 1.0);
        // reference value for 0.95 * 1000 successes
        let (lo, hi) = wilson_interval(950, 1000, Z95);
        assert!((lo - 0.934_686_179_8).abs() < 1e-9 && (hi - 0.961_869_737_6).abs() < 1e-9, "{lo} {hi}");
    }

    #[test]
    fn chi_square_reference() {
        // statistic 2.0 on 2 dof has survival exp(-1)
        let r = chi_square_gof(&[30, 50, 20], &[0.3, 0.4, 0.3], 0.0).unwrap();
        let stat = 0.0 + 100.0 / 40.0 + 100.0 / 30.0;
        assert!((r.statistic - stat).abs() < 1e-12);
        assert_eq!(r.dof, 2.0);
        assert!((r.p_value - (-stat / 2.0f64).exp()).abs() < 1e-9);
        let r = chi_square_gof(&[10, 0], &[1.0, 0.0], 5.0).unwrap();
        assert!(r.p_value > 0.99);
        let r = chi_square_gof(&[9, 1], &[1.0, 0.0], 0.0).unwrap();
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn two_sample_chi_square_identical_is_one() {
        let r = chi_square_two_sample(&[10, 20, 30], &[10, 20, 30], 0).unwrap();
        assert!(r.statistic.abs() < 1e-12 && r.p_value > 0.999);
        let r = chi_square_two_sample(&[100, 0], &[0, 100], 0).unwrap();
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn ks_reference() {
        let a: Vec<f64> = (0..100).map(f64::from).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = (50..150).map(f64::from).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-9);
        // Q(1.0) = 0.26999967...
        assert!((kolmogorov_q(1.0) - 0.269_999_671_677_355_3).abs() < 1e-9);
    }
}
