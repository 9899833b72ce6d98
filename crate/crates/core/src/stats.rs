//! Small statistical helpers for the experiment reports: chi-square
//! uniformity checks, normal quantiles for confidence intervals, and the
//! binomial pieces the failure bounds are assembled from.

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Critical value v with Pr[X > v] = tail for a chi-square with `df`
/// degrees of freedom.
pub fn chi2_critical(df: usize, tail: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::param("chi-square needs df >= 1"));
    }
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::param(format!("tail must be in (0,1), got {tail}")));
    }
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::param(format!("bad chi-square parameter: {e}")))?;
    Ok(dist.inverse_cdf(1.0 - tail))
}

/// Pearson statistic against the uniform distribution over the cells, with
/// its degrees of freedom. Zero total count gives a zero statistic.
pub fn chi2_uniform_stat(counts: &[u64]) -> Result<(f64, usize)> {
    if counts.len() < 2 {
        return Err(Error::param("need at least two cells"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Ok((0.0, counts.len() - 1));
    }
    let expected = total as f64 / counts.len() as f64;
    let stat = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    Ok((stat, counts.len() - 1))
}

/// Two-sided z value: Pr[|Z| <= z] = confidence.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(format!(
            "confidence must be in (0,1), got {confidence}"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Standard deviation of the empirical mean of `n` Bernoulli(p) draws.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / n as f64).sqrt()
}

/// Binomial coefficient as a float, exact for small arguments.
pub fn binom_coeff(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}
