//! Small numerical and statistical helpers: log-sum-exp accumulation and
//! batch-based standard errors for means and smooth functionals.

use serde::Serialize;

/// A point estimate with its standard error (0 for exact values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, se: 0.0 }
    }

    /// True when `target` lies within `k` standard errors (plus `slack`).
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.se + slack
    }
}

/// Streaming `log(sum(exp(x_i)))`.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `log(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let mut acc = LogSumExp::default();
    acc.push(a);
    acc.push(b);
    acc.value()
}

/// Power sums of a vector-valued series, split into consecutive batches.
///
/// Means get batch-means standard errors; variances, covariances, skewness
/// and kurtosis get delete-one-batch jackknife errors.  With i.i.d. input
/// the same machinery gives ordinary standard errors.
#[derive(Clone, Debug)]
pub struct BatchStats {
    dim: usize,
    batch_size: u64,
    batches: Vec<PowerSums>,
    shift: Option<Vec<f64>>,
    seen: u64,
}

#[derive(Clone, Debug)]
struct PowerSums {
    n: f64,
    s1: Vec<f64>,
    s2: Vec<f64>, // row-major dim x dim
    s3: Vec<f64>,
    s4: Vec<f64>,
}

impl PowerSums {
    fn new(dim: usize) -> Self {
        PowerSums { n: 0.0, s1: vec![0.0; dim], s2: vec![0.0; dim * dim], s3: vec![0.0; dim], s4: vec![0.0; dim] }
    }

    fn add(&mut self, other: &PowerSums, sign: f64) {
        self.n += sign * other.n;
        for (a, b) in self.s1.iter_mut().zip(&other.s1) {
            *a += sign * b;
        }
        for (a, b) in self.s2.iter_mut().zip(&other.s2) {
            *a += sign * b;
        }
        for (a, b) in self.s3.iter_mut().zip(&other.s3) {
            *a += sign * b;
        }
        for (a, b) in self.s4.iter_mut().zip(&other.s4) {
            *a += sign * b;
        }
    }
}

/// Central moments of one pooled set of power sums (for a shifted series).
struct Moments<'a> {
    sums: &'a PowerSums,
    dim: usize,
}

impl Moments<'_> {
    fn mean(&self, i: usize) -> f64 {
        self.sums.s1[i] / self.sums.n
    }

    fn cov(&self, i: usize, j: usize) -> f64 {
        let n = self.sums.n;
        let c = self.sums.s2[i * self.dim + j] / n - self.mean(i) * self.mean(j);
        c * n / (n - 1.0)
    }

    fn central3(&self, i: usize) -> f64 {
        let n = self.sums.n;
        let m = self.mean(i);
        self.sums.s3[i] / n - 3.0 * m * self.sums.s2[i * self.dim + i] / n + 2.0 * m.powi(3)
    }

    fn central4(&self, i: usize) -> f64 {
        let n = self.sums.n;
        let m = self.mean(i);
        self.sums.s4[i] / n - 4.0 * m * self.sums.s3[i] / n + 6.0 * m * m * self.sums.s2[i * self.dim + i] / n
            - 3.0 * m.powi(4)
    }

    fn central2(&self, i: usize) -> f64 {
        let n = self.sums.n;
        let m = self.mean(i);
        self.sums.s2[i * self.dim + i] / n - m * m
    }

    fn skewness(&self, i: usize) -> f64 {
        let v = self.central2(i);
        if v <= 0.0 {
            return 0.0;
        }
        self.central3(i) / v.powf(1.5)
    }

    fn excess_kurtosis(&self, i: usize) -> f64 {
        let v = self.central2(i);
        if v <= 0.0 {
            return 0.0;
        }
        self.central4(i) / (v * v) - 3.0
    }
}

impl BatchStats {
    /// Accumulator for `expected` observations of dimension `dim`, split into
    /// `n_batches` batches of equal size (the last batch may be shorter).
    pub fn new(dim: usize, expected: u64, n_batches: usize) -> Self {
        let n_batches = n_batches.max(1) as u64;
        let batch_size = expected.div_ceil(n_batches).max(1);
        BatchStats { dim, batch_size, batches: Vec::new(), shift: None, seen: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.seen
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let shift = self.shift.get_or_insert_with(|| x.to_vec());
        let b = (self.seen / self.batch_size) as usize;
        if b == self.batches.len() {
            self.batches.push(PowerSums::new(self.dim));
        }
        let sums = &mut self.batches[b];
        sums.n += 1.0;
        let d = self.dim;
        for i in 0..d {
            let xi = x[i] - shift[i];
            sums.s1[i] += xi;
            let x2 = xi * xi;
            sums.s3[i] += x2 * xi;
            sums.s4[i] += x2 * x2;
            for j in 0..d {
                sums.s2[i * d + j] += xi * (x[j] - shift[j]);
            }
        }
        self.seen += 1;
    }

    fn pooled(&self) -> PowerSums {
        let mut p = PowerSums::new(self.dim);
        for b in &self.batches {
            p.add(b, 1.0);
        }
        p
    }

    fn shift(&self, i: usize) -> f64 {
        self.shift.as_ref().map_or(0.0, |s| s[i])
    }

    /// Evaluates `f` on the pooled moments and on every delete-one-batch
    /// subset, returning the estimate with its jackknife standard error.
    fn jackknife(&self, f: impl Fn(&Moments<'_>) -> f64) -> Estimate {
        let pooled = self.pooled();
        if pooled.n < 2.0 {
            return Estimate { value: f64::NAN, se: f64::NAN };
        }
        let value = f(&Moments { sums: &pooled, dim: self.dim });
        let nb = self.batches.len();
        if nb < 2 {
            return Estimate { value, se: f64::NAN };
        }
        let loo: Vec<f64> = self
            .batches
            .iter()
            .map(|b| {
                let mut s = pooled.clone();
                s.add(b, -1.0);
                f(&Moments { sums: &s, dim: self.dim })
            })
            .collect();
        let m = loo.iter().sum::<f64>() / nb as f64;
        let ss: f64 = loo.iter().map(|v| (v - m) * (v - m)).sum();
        Estimate { value, se: ((nb as f64 - 1.0) / nb as f64 * ss).sqrt() }
    }

    /// Mean of component `i` with batch-means standard error.
    pub fn mean(&self, i: usize) -> Estimate {
        let shift = self.shift(i);
        let est = self.jackknife(|m| m.mean(i));
        Estimate { value: est.value + shift, se: est.se }
    }

    /// Unbiased covariance of components `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> Estimate {
        self.jackknife(|m| m.cov(i, j))
    }

    pub fn variance(&self, i: usize) -> Estimate {
        self.covariance(i, i)
    }

    pub fn skewness(&self, i: usize) -> Estimate {
        self.jackknife(|m| m.skewness(i))
    }

    pub fn excess_kurtosis(&self, i: usize) -> Estimate {
        self.jackknife(|m| m.excess_kurtosis(i))
    }
}
