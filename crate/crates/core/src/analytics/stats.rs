use super::AnalyticsError;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the n − 1 denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(AnalyticsError::TooShort { len: x.len(), min: 2 });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::DegenerateSeries);
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Haessel's goodness of fit: the squared correlation between an observed
/// series and the reference series it is meant to track.
pub fn haessel_r2(observed: &[f64], reference: &[f64]) -> Result<f64, AnalyticsError> {
    let r = pearson(observed, reference)?;
    Ok((r * r).clamp(0.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Cronbach's alpha for a respondents × items matrix.
pub fn cronbach_alpha(items: &[Vec<f64>]) -> Result<f64, AnalyticsError> {
    let n = items.len();
    if n < 2 {
        return Err(AnalyticsError::TooShort { len: n, min: 2 });
    }
    let k = items[0].len();
    if k < 2 {
        return Err(AnalyticsError::TooShort { len: k, min: 2 });
    }
    if let Some(row) = items.iter().find(|r| r.len() != k) {
        return Err(AnalyticsError::LengthMismatch {
            left: k,
            right: row.len(),
        });
    }
    let item_var: f64 = (0..k)
        .map(|j| sample_variance(&items.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = items.iter().map(|r| r.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var <= 0.0 {
        return Err(AnalyticsError::DegenerateVariance);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

/// Two-sided exact sign test p-value for `positive` vs `negative` counts.
pub fn sign_test_p_value(positive: usize, negative: usize) -> f64 {
    let n = positive + negative;
    if n == 0 {
        return 1.0;
    }
    let k = positive.min(negative);
    // P(X <= k) for X ~ Binomial(n, 1/2), accumulated in log space
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose + ln_half_n).exp();
    }
    (2.0 * tail).min(1.0)
}
