//! Streaming moments, batch-means error bars, jackknife, and least-squares
//! fits.

use crate::error::{Error, Result};

/// Streaming count/mean/M2 (Welford). Merging two accumulators agrees with
/// accumulating the concatenation up to rounding.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let d = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += d * n2 / n;
        self.m2 += other.m2 + d * d * n1 * n2 / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n - 1) as f64
    }

    /// Standard error of the mean for independent draws.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Batch-means estimator for correlated streams: the mean's error bar comes
/// from the spread of per-batch means. Needs >= 16 complete batches for a
/// usable error bar.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    batch_len: u64,
    current: MomentAccumulator,
    batches: Vec<f64>,
    overall: MomentAccumulator,
}

impl BatchMeans {
    pub fn new(batch_len: u64) -> Self {
        BatchMeans {
            batch_len: batch_len.max(1),
            current: MomentAccumulator::new(),
            batches: Vec::new(),
            overall: MomentAccumulator::new(),
        }
    }

    pub fn push(&mut self, x: f64) {
        self.overall.push(x);
        self.current.push(x);
        if self.current.count() >= self.batch_len {
            self.batches.push(self.current.mean());
            self.current = MomentAccumulator::new();
        }
    }

    pub fn mean(&self) -> f64 {
        self.overall.mean()
    }

    pub fn sample_variance(&self) -> f64 {
        self.overall.variance()
    }

    pub fn batch_count(&self) -> usize {
        self.batches.len()
    }

    /// Standard error of the mean from batch spread.
    pub fn stderr(&self) -> f64 {
        let k = self.batches.len();
        if k < 2 {
            return f64::INFINITY;
        }
        let mut acc = MomentAccumulator::new();
        for &b in &self.batches {
            acc.push(b);
        }
        (acc.variance() / k as f64).sqrt()
    }

    /// Lag-1 autocorrelation of batch means; near zero when batches are long
    /// enough.
    pub fn batch_autocorr(&self) -> f64 {
        let k = self.batches.len();
        if k < 3 {
            return f64::NAN;
        }
        let mean = self.batches.iter().sum::<f64>() / k as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..k {
            let d = self.batches[i] - mean;
            den += d * d;
            if i + 1 < k {
                num += d * (self.batches[i + 1] - mean);
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Ordinary least squares `y = slope x + intercept`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "fit needs matched samples of length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    for i in 0..x.len() {
        let r = y[i] - slope * x[i] - intercept;
        ss_res += r * r;
    }
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        residual_rms: (ss_res / n).sqrt(),
    })
}

/// Fit `ln y = slope ln x + c`; `y` must be positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if y.iter().any(|&v| v <= 0.0) || x.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Leave-one-out jackknife stderr of `stat` over `items`.
pub fn jackknife_stderr<T: Clone>(items: &[T], stat: impl Fn(&[T]) -> f64) -> f64 {
    let n = items.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mut loo = Vec::with_capacity(n);
    let mut scratch: Vec<T> = Vec::with_capacity(n - 1);
    for i in 0..n {
        scratch.clear();
        scratch.extend_from_slice(&items[..i]);
        scratch.extend_from_slice(&items[i + 1..]);
        loo.push(stat(&scratch));
    }
    let mean = loo.iter().sum::<f64>() / n as f64;
    let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
    ((n - 1) as f64 / n as f64 * ss).sqrt()
}

/// Sample covariance of paired observations.
pub fn sample_covariance(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_equals_concatenation() {
        let xs: Vec<f64> = (0..57)
            .map(|i| ((i * 37) % 11) as f64 * 0.25 - 1.0)
            .collect();
        let mut whole = MomentAccumulator::new();
        for &x in &xs {
            whole.push(x);
        }
        for split in [1usize, 13, 29, 56] {
            let mut a = MomentAccumulator::new();
            let mut b = MomentAccumulator::new();
            for &x in &xs[..split] {
                a.push(x);
            }
            for &x in &xs[split..] {
                b.push(x);
            }
            a.merge(&b);
            assert_eq!(a.count(), whole.count());
            assert!((a.mean() - whole.mean()).abs() <= 1e-12 * whole.mean().abs().max(1.0));
            assert!((a.m2() - whole.m2()).abs() <= 1e-12 * whole.m2().abs().max(1.0));
        }
    }

    #[test]
    fn merge_is_associative_within_tolerance() {
        let xs: Vec<f64> = (0..300).map(|i| (i as f64 * 0.7).sin()).collect();
        let acc = |range: std::ops::Range<usize>| {
            let mut a = MomentAccumulator::new();
            for &x in &xs[range] {
                a.push(x);
            }
            a
        };
        let mut ab = acc(0..100);
        ab.merge(&acc(100..200));
        let mut ab_c = ab;
        ab_c.merge(&acc(200..300));
        let mut bc = acc(100..200);
        bc.merge(&acc(200..300));
        let mut a_bc = acc(0..100);
        a_bc.merge(&bc);
        assert!((ab_c.mean() - a_bc.mean()).abs() < 1e-12);
        assert!((ab_c.m2() - a_bc.m2()).abs() < 1e-12 * a_bc.m2().max(1.0));
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x: Vec<f64> = (1..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let x: Vec<f64> = (1..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 5.0 * v.powf(-1.5)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-10);
    }

    #[test]
    fn jackknife_matches_naive_for_mean() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 1.3).cos()).collect();
        let se = jackknife_stderr(&xs, |s| s.iter().sum::<f64>() / s.len() as f64);
        let mut acc = MomentAccumulator::new();
        for &x in &xs {
            acc.push(x);
        }
        assert!((se - acc.stderr()).abs() < 1e-10);
    }

    #[test]
    fn batch_means_on_iid_matches_naive() {
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut next = move || {
            state = crate::rng::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut bm = BatchMeans::new(100);
        let mut acc = MomentAccumulator::new();
        for _ in 0..6400 {
            let x = next();
            bm.push(x);
            acc.push(x);
        }
        assert_eq!(bm.batch_count(), 64);
        let ratio = bm.stderr() / acc.stderr();
        assert!(ratio > 0.6 && ratio < 1.6, "ratio {ratio}");
    }
}
