//! Empirical distances between one-dimensional samples and the small amount
//! of statistics the experiments need: two-sample tests, chi-square tests and
//! log-log rate fits.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Upper limit on the common quantile grid used for unequal sample sizes.
pub const MAX_QUANTILE_GRID: usize = 100_000;

/// A sorted, nonempty sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    /// Sort `values` (NaN-free) into an empirical sample.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::RangeError("sample contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Empirical distribution function, right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.len() as f64
    }
}

/// `d_q(x, y) = min(|x - y|, |x - y|^q)`.
pub fn d_q(x: f64, y: f64, q: f64) -> f64 {
    let d = (x - y).abs();
    if d <= 1.0 {
        d
    } else {
        d.powf(q)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Pairs of order statistics under the monotone coupling. Equal sizes pair
/// directly; otherwise both samples are read off a common quantile grid of
/// size `min(lcm(n, m), MAX_QUANTILE_GRID)`.
fn monotone_pairs<'a>(xs: &'a EmpiricalSample, ys: &'a EmpiricalSample) -> Box<dyn Iterator<Item = (f64, f64)> + 'a> {
    let (n, m) = (xs.len(), ys.len());
    if n == m {
        return Box::new(xs.values.iter().copied().zip(ys.values.iter().copied()));
    }
    let lcm = (n / gcd(n, m)).saturating_mul(m);
    let grid = lcm.min(MAX_QUANTILE_GRID);
    Box::new((0..grid).map(move |i| {
        let u = (i as f64 + 0.5) / grid as f64;
        let xi = ((u * n as f64) as usize).min(n - 1);
        let yi = ((u * m as f64) as usize).min(m - 1);
        (xs.values[xi], ys.values[yi])
    }))
}

fn mean_of<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

/// Wasserstein distance of order `p` under the monotone coupling.
///
/// For `p >= 1` the monotone coupling is optimal on the line and the value is
/// `(mean |x_(i) - y_(i)|^p)^{1/p}`. For `p < 1` the value is the transport
/// cost `mean |x_(i) - y_(i)|^p` of the monotone coupling, which only bounds
/// the optimum from above; see [`is_upper_bound`].
pub fn wp_empirical(xs: &EmpiricalSample, ys: &EmpiricalSample, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::RangeError(format!("order p = {p} must be positive")));
    }
    let cost = mean_of(monotone_pairs(xs, ys).map(|(x, y)| (x - y).abs().powf(p)));
    Ok(if p >= 1.0 { cost.powf(1.0 / p) } else { cost })
}

/// Whether [`wp_empirical`] at order `p` is an upper bound rather than the
/// exact empirical distance.
pub fn is_upper_bound(p: f64) -> bool {
    p < 1.0
}

/// Transport cost of the monotone coupling for the metric `d_q`, an upper
/// bound on `W_{d_q}` that never exceeds the order-1 distance.
pub fn wdq_upper(xs: &EmpiricalSample, ys: &EmpiricalSample, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::RangeError(format!("exponent q = {q} outside (0, 1]")));
    }
    Ok(mean_of(monotone_pairs(xs, ys).map(|(x, y)| d_q(x, y, q))))
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_n - G_m|`.
pub fn ks_two_sample(xs: &EmpiricalSample, ys: &EmpiricalSample) -> f64 {
    let (a, b) = (&xs.values, &ys.values);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &EmpiricalSample, cdf: F) -> f64 {
    let n = xs.len() as f64;
    xs.values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail probability for a KS statistic `d` computed
/// with effective sample size `n_eff` (`n` for one sample, `nm/(n+m)` for
/// two), with the usual small-sample correction.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let en = n_eff.sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

fn chi_square_tail(statistic: f64, dof: f64) -> Result<f64> {
    let law = ChiSquared::new(dof).map_err(|e| Error::DegenerateDesign(format!("chi-square with {dof} dof: {e}")))?;
    Ok(law.sf(statistic))
}

/// Goodness of fit of observed counts to expected counts. `fitted` is the
/// number of parameters estimated from the data.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted: usize) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() || observed.len() < fitted + 2 {
        return Err(Error::DegenerateDesign(format!(
            "{} cells for {} expected values and {fitted} fitted parameters",
            observed.len(),
            expected.len()
        )));
    }
    let statistic = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (observed.len() - 1 - fitted) as f64;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_tail(statistic, dof)?,
    })
}

/// Pearson independence test on a contingency table given row by row.
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<ChiSquareTest> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::DegenerateDesign(
            "need a rectangular table of at least 2x2".into(),
        ));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_sums[i] * col_sums[j] / total;
            if e <= 0.0 {
                return Err(Error::DegenerateDesign("empty row or column".into()));
            }
            statistic += (o - e) * (o - e) / e;
        }
    }
    let dof = ((rows - 1) * (cols - 1)) as f64;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_tail(statistic, dof)?,
    })
}

/// Interior cut points splitting `values` into `bins` groups of equal size.
pub fn quantile_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (1..bins).map(|b| v[b * v.len() / bins]).collect()
}

/// Index of the bin of `x` given sorted cut points.
pub fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|c| *c <= x)
}

/// Least-squares slope of `log y` against `log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateDesign(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::DegenerateDesign("coordinates must be positive".into()));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateDesign("x values are not distinct".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
    })
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pearson correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(v: &[f64]) -> EmpiricalSample {
        EmpiricalSample::new(v.to_vec()).unwrap()
    }

    /// Exhaustive minimum transport cost over all permutations (small n).
    fn brute_force_w1(a: &[f64], b: &[f64]) -> f64 {
        fn perms(k: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == idx.len() {
                out.push(idx.clone());
                return;
            }
            for i in k..idx.len() {
                idx.swap(k, i);
                perms(k + 1, idx, out);
                idx.swap(k, i);
            }
        }
        let mut all = Vec::new();
        perms(0, &mut (0..a.len()).collect(), &mut all);
        all.iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).abs()).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            / a.len() as f64
    }

    #[test]
    fn w1_examples() {
        assert_eq!(wp_empirical(&s(&[1.0, 2.0]), &s(&[2.0, 1.0]), 1.0).unwrap(), 0.0);
        let d = wp_empirical(&s(&[0.0, 1.0]), &s(&[0.0, 2.0]), 1.0).unwrap();
        assert_abs_diff_eq!(d, brute_force_w1(&[0.0, 1.0], &[0.0, 2.0]), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wp_empirical(&s(&[0.0]), &s(&[3.0]), 2.0).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn w1_matches_brute_force_on_small_samples() {
        let a = [0.3, -1.2, 4.0, 2.2, 0.0];
        let b = [1.0, 1.5, -3.0, 0.7, 2.0];
        assert_abs_diff_eq!(
            wp_empirical(&s(&a), &s(&b), 1.0).unwrap(),
            brute_force_w1(&a, &b),
            epsilon = 1e-14
        );
    }

    #[test]
    fn dq_examples() {
        assert_eq!(wdq_upper(&s(&[0.0]), &s(&[4.0]), 0.5).unwrap(), 2.0);
        assert_eq!(wdq_upper(&s(&[1.0, 5.0]), &s(&[5.0, 1.0]), 0.5).unwrap(), 0.0);
        assert_eq!(wdq_upper(&s(&[0.0]), &s(&[0.5]), 0.5).unwrap(), 0.5);
        assert!(wdq_upper(&s(&[0.0]), &s(&[0.5]), 1.5).is_err());
    }

    #[test]
    fn unequal_sizes_use_common_grid() {
        // {0, 1} against {0, 0, 1, 1} describe the same law.
        let d = wp_empirical(&s(&[0.0, 1.0]), &s(&[0.0, 0.0, 1.0, 1.0]), 1.0).unwrap();
        assert_eq!(d, 0.0);
        let d = wp_empirical(&s(&[0.0]), &s(&[0.0, 2.0, 4.0]), 1.0).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert_eq!(EmpiricalSample::new(vec![]), Err(Error::EmptySample));
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&s(&[1.0, 2.0]), &s(&[1.0, 2.0])), 0.0);
        assert_eq!(ks_two_sample(&s(&[1.0, 2.0]), &s(&[3.0, 4.0])), 1.0);
        assert_eq!(ks_two_sample(&s(&[1.0, 3.0]), &s(&[2.0, 4.0])), 0.5);
    }

    #[test]
    fn ks_handles_ties() {
        assert_eq!(ks_two_sample(&s(&[1.0, 1.0, 2.0]), &s(&[1.0, 2.0, 2.0])), 1.0 / 3.0);
    }

    #[test]
    fn ks_p_value_reference_points() {
        // Kolmogorov distribution: P(K > 1.358) = 0.05, P(K > 1.628) = 0.01.
        let n: f64 = 1e8;
        assert_abs_diff_eq!(ks_p_value(1.358 / n.sqrt(), n), 0.05, epsilon = 5e-4);
        assert_abs_diff_eq!(ks_p_value(1.628 / n.sqrt(), n), 0.01, epsilon = 2e-4);
    }

    #[test]
    fn slope_examples() {
        let fit = loglog_slope(&[(10.0, 1.0), (100.0, 0.1), (1000.0, 0.01)]).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.stderr, 0.0, epsilon = 1e-12);
        let fit = loglog_slope(&[(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.0, epsilon = 1e-12);
        let pts: Vec<(f64, f64)> = [4.0f64, 16.0, 64.0].iter().map(|&x| (x, 4.0 * x.powf(-0.5))).collect();
        assert_abs_diff_eq!(loglog_slope(&pts).unwrap().slope, -0.5, epsilon = 1e-12);
        assert!(matches!(
            loglog_slope(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn chi_square_examples() {
        // Perfect fit.
        let t = chi_square_gof(&[10.0, 20.0, 30.0], &[10.0, 20.0, 30.0], 0).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_abs_diff_eq!(t.p_value, 1.0, epsilon = 1e-12);
        // 2x2 table with a strong association.
        let t = chi_square_independence(&[vec![50.0, 0.0], vec![0.0, 50.0]]).unwrap();
        assert_abs_diff_eq!(t.statistic, 100.0, epsilon = 1e-9);
        assert!(t.p_value < 1e-20);
        // Chi-square(1) tail at 3.841 is 0.05.
        let t = chi_square_gof(&[60.0, 40.0], &[50.0, 50.0], 0).unwrap();
        assert_abs_diff_eq!(t.statistic, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_value, 0.0455003, epsilon = 1e-6);
    }
}
