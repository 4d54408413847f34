//! Small numeric helpers shared across modules: compensated summation,
//! batch standard errors and exact combinatorics in `f64`.

/// Neumaier-compensated sum. Fixed evaluation order makes reductions
/// reproducible independently of how the data was produced.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values) / values.len() as f64
}

/// Mean plus a standard error estimated from `nb` contiguous batch means.
pub fn mean_and_batch_se(values: &[f64], nb: usize) -> (f64, f64) {
    let n = values.len();
    let mean = compensated_mean(values);
    let nb = nb.clamp(2, n.max(2));
    if n < 2 * nb {
        // Too few observations to batch; fall back to the iid formula.
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1).max(1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let batch = n / nb;
    let mut batch_means = Vec::with_capacity(nb);
    for b in 0..nb {
        let lo = b * batch;
        let hi = if b + 1 == nb { n } else { lo + batch };
        batch_means.push(compensated_mean(&values[lo..hi]));
    }
    let m = compensated_mean(&batch_means);
    let var = batch_means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (nb - 1) as f64;
    (mean, (var / nb as f64).sqrt())
}

/// Default batch count for Monte Carlo standard errors.
pub const MC_BATCHES: usize = 50;

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}
