//! Small statistical toolbox used by the experiment drivers and the test
//! suites: summary statistics, a tie-corrected one-sided rank-sum test,
//! chi-square goodness checks and a two-segment change-point detector.

/// Mean and sample standard deviation (`n - 1` denominator; 0 for fewer
/// than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "mean of an empty sample");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Standard normal CDF via the Abramowitz–Stegun erf approximation
/// (absolute error below 1.5e-7).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// One-sided Wilcoxon rank-sum (Mann–Whitney) p-value for the alternative
/// "samples in `a` tend to be smaller than samples in `b`", using the
/// normal approximation with tie correction and continuity correction.
pub fn rank_sum_p_less(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;

    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("non-NaN samples"));

    // Average ranks over tie groups; tie sizes feed the variance correction.
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let tied = (j - i) as f64;
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for entry in &pooled[i..j] {
            if entry.1 {
                rank_sum_a += avg_rank;
            }
        }
        tie_term += tied * tied * tied - tied;
        i = j;
    }

    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let mean = na * nb / 2.0;
    let variance = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    let z = (u - mean + 0.5) / variance.sqrt();
    normal_cdf(z)
}

/// Pearson chi-square statistic for observed counts against expectations.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Generous rejection threshold for a chi-square statistic with `df`
/// degrees of freedom: `df + 5 * sqrt(2 df)` sits beyond the 0.999
/// quantile once df reaches a few dozen.
pub fn chi_square_threshold(df: usize) -> f64 {
    let df = df as f64;
    df + 5.0 * (2.0 * df).sqrt()
}

/// Two-segment linear least-squares change point.
///
/// Returns the split index `k` (first index of the second segment,
/// `2 <= k <= len - 2`) minimizing the summed squared error of one linear
/// fit on `series[..k]` and one on `series[k..]`.
pub fn change_point(series: &[f64]) -> usize {
    assert!(series.len() >= 4, "need at least 4 points for two segments");
    let mut best_k = 2;
    let mut best_sse = f64::INFINITY;
    for k in 2..=series.len() - 2 {
        let sse = linear_fit_sse(&series[..k], 0) + linear_fit_sse(&series[k..], k);
        if sse < best_sse {
            best_sse = sse;
            best_k = k;
        }
    }
    best_k
}

/// Residual sum of squares of the least-squares line through
/// `(offset + i, values[i])`.
fn linear_fit_sse(values: &[f64], offset: usize) -> f64 {
    let n = values.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (i, &y) in values.iter().enumerate() {
        sx += (offset + i) as f64;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (i, &y) in values.iter().enumerate() {
        let dx = (offset + i) as f64 - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return syy;
    }
    syy - sxy * sxy / sxx
}
