//! Estimators for Monte Carlo checks: jackknife errors, batched means,
//! autocorrelation times, and a two-sample Kolmogorov-Smirnov statistic.

/// Point estimate with a jackknife standard error.
#[derive(Clone, Copy, Debug)]
pub struct Jackknife {
    pub value: f64,
    pub stderr: f64,
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    assert!(m >= 2, "need at least two samples");
    let mean = xs.iter().sum::<f64>() / m as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Covariance of paired samples with a leave-one-out jackknife error.
pub fn jackknife_covariance(xs: &[f64], ys: &[f64]) -> Jackknife {
    let m = xs.len();
    assert_eq!(m, ys.len(), "paired samples must have equal length");
    assert!(m >= 3, "need at least three samples");
    let mf = m as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let full = sxy / mf - (sx / mf) * (sy / mf);

    let lf = mf - 1.0;
    let mut deltas = Vec::with_capacity(m);
    for i in 0..m {
        let (x, y) = (xs[i], ys[i]);
        let theta = (sxy - x * y) / lf - ((sx - x) / lf) * ((sy - y) / lf);
        deltas.push(theta);
    }
    let jbar = deltas.iter().sum::<f64>() / mf;
    let ssq = deltas.iter().map(|t| (t - jbar) * (t - jbar)).sum::<f64>();
    Jackknife {
        value: full,
        stderr: (lf / mf * ssq).sqrt(),
    }
}

/// Mean with an error bar from batched means, plus the implied integrated
/// autocorrelation time (1 for independent samples).
#[derive(Clone, Copy, Debug)]
pub struct BatchedMean {
    pub mean: f64,
    pub stderr: f64,
    pub tau: f64,
}

/// Splits the series into `batches` contiguous blocks and uses the spread of
/// block means as the error estimate; robust to autocorrelated input.
pub fn batched_mean(xs: &[f64], batches: usize) -> BatchedMean {
    let m = xs.len();
    assert!(batches >= 2 && m >= 2 * batches, "series too short for batching");
    let len = m / batches;
    let used = len * batches;
    let mut block = Vec::with_capacity(batches);
    for b in 0..batches {
        let seg = &xs[b * len..(b + 1) * len];
        block.push(seg.iter().sum::<f64>() / len as f64);
    }
    let (mean, stderr) = mean_stderr(&block);
    let naive_var = {
        let mu = xs[..used].iter().sum::<f64>() / used as f64;
        xs[..used].iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (used - 1) as f64
    };
    let naive_se2 = naive_var / used as f64;
    let tau = if naive_se2 > 0.0 {
        (stderr * stderr / naive_se2).max(1.0)
    } else {
        1.0
    };
    BatchedMean { mean, stderr, tau }
}

/// Integrated autocorrelation time with an adaptive window cut at the first
/// lag where the running window exceeds five times the accumulated time.
pub fn autocorrelation_time(xs: &[f64]) -> f64 {
    let m = xs.len();
    assert!(m >= 8, "series too short");
    let mean = xs.iter().sum::<f64>() / m as f64;
    let c0: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / m as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 0.5;
    for t in 1..m / 2 {
        let mut ct = 0.0;
        for i in 0..m - t {
            ct += (xs[i] - mean) * (xs[i + t] - mean);
        }
        ct /= (m - t) as f64;
        tau += ct / c0;
        if (t as f64) >= 5.0 * tau {
            break;
        }
    }
    (2.0 * tau).max(1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        if sa[i] <= sb[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{standard_normal, stream_rng};

    #[test]
    fn jackknife_matches_known_covariance() {
        let mut rng = stream_rng(5, 0, 0);
        let m = 20_000;
        let mut xs = Vec::with_capacity(m);
        let mut ys = Vec::with_capacity(m);
        for _ in 0..m {
            let u = standard_normal(&mut rng);
            let v = standard_normal(&mut rng);
            xs.push(u);
            ys.push(0.6 * u + 0.8 * v);
        }
        let est = jackknife_covariance(&xs, &ys);
        assert!(
            (est.value - 0.6).abs() < 4.0 * est.stderr,
            "cov {} +- {}",
            est.value,
            est.stderr
        );
        assert!(est.stderr > 0.0 && est.stderr < 0.05);
    }

    #[test]
    fn batched_mean_detects_correlation() {
        let mut rng = stream_rng(6, 0, 0);
        let m = 40_000;
        let rho: f64 = 0.9;
        let mut xs = Vec::with_capacity(m);
        let mut x = 0.0;
        for _ in 0..m {
            x = rho * x + (1.0f64 - rho * rho).sqrt() * standard_normal(&mut rng);
            xs.push(x);
        }
        let st = batched_mean(&xs, 50);
        // AR(1) with rho = 0.9 has integrated autocorrelation time 19.
        assert!(st.tau > 8.0, "tau = {}", st.tau);
        assert!(st.mean.abs() < 5.0 * st.stderr);
        let tau = autocorrelation_time(&xs);
        assert!((tau - 19.0).abs() < 8.0, "tau = {tau}");
    }

    #[test]
    fn ks_statistic_separates_shifted_samples() {
        let mut rng = stream_rng(7, 0, 0);
        let m = 2000;
        let a: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
        let c: Vec<f64> = b.iter().map(|x| x + 1.0).collect();
        let crit = 1.36 * (2.0 / m as f64).sqrt();
        assert!(ks_two_sample(&a, &b) < crit);
        assert!(ks_two_sample(&a, &c) > crit);
    }
}
