//! Log-space evaluation of the orientation-count series behind correlation
//! functions in the special model.
//!
//! With `beta = aT/d` and independent Poisson(`beta`) counts `n_1..n_d` of
//! facets per axis class, the series is
//!
//! ```text
//! S = e^{-beta (d-1)} * sum_n prod_l beta^{n_l}/n_l! * exp(kappa * e_s(n + c))
//! ```
//!
//! where `e_s` is the elementary symmetric polynomial of order `s` and `c`
//! holds the per-axis multiplicities of the query facets.  The last
//! coordinate is summed in closed form: `e_s` is affine in it, so its Poisson
//! sum is `exp(beta e^{kappa e_{s-1}} + kappa (e_s + c_d e_{s-1}))` evaluated
//! on the remaining coordinates.

use crate::error::{Error, Result};
use crate::stats::LogSumExp;
use rayon::prelude::*;

/// Largest number of series terms evaluated before refusing.
const MAX_TERMS: f64 = 5e8;

/// A truncated series: log of the partial sum and log of a certified bound
/// on the omitted tail (both normalised by `e^{-beta (d-1)}`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub log_partial: f64,
    pub log_tail: f64,
    pub truncation: usize,
}

impl SeriesSum {
    pub fn partial(&self) -> f64 {
        self.log_partial.exp()
    }

    pub fn tail(&self) -> f64 {
        self.log_tail.exp()
    }

    /// Tail bound relative to the partial sum.
    pub fn relative_tail(&self) -> f64 {
        (self.log_tail - self.log_partial).exp()
    }
}

/// `ln P(Poisson(beta) >= t)` bounded by the Chernoff inequality
/// `P(X >= t) <= e^{-beta} (e beta / t)^t` for `t > beta`, and by 0 otherwise.
pub fn log_poisson_tail_bound(beta: f64, t: usize) -> f64 {
    let t = t as f64;
    if t <= beta || beta <= 0.0 {
        return if beta <= 0.0 && t > 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    (-beta + t * (1.0 + beta.ln() - t.ln())).min(0.0)
}

fn elementary_pair(values: &[f64], s: usize, scratch: &mut [f64]) -> (f64, f64) {
    // scratch[k] = e_k of the values processed so far.
    scratch.iter_mut().for_each(|e| *e = 0.0);
    scratch[0] = 1.0;
    for &v in values {
        for k in (1..=s).rev() {
            scratch[k] += v * scratch[k - 1];
        }
    }
    (scratch[s], scratch[s - 1])
}

/// Evaluates the series with counts truncated at `truncation` per summed
/// coordinate.  `counts` has length `d` and `1 <= order <= d`; `kappa <= 0`.
pub fn count_series(beta: f64, kappa: f64, order: usize, counts: &[u32], truncation: usize) -> Result<SeriesSum> {
    let d = counts.len();
    if d < 2 || order == 0 || order > d {
        return Err(Error::InvalidQuery(format!("series order {order} invalid for d = {d}")));
    }
    if !(kappa <= 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidQuery("series needs beta > 0 and kappa <= 0".into()));
    }
    let n = truncation;
    let inner_dims = d - 2;
    let terms = ((n + 1) as f64).powi(d as i32 - 1);
    if terms > MAX_TERMS {
        return Err(Error::Budget(format!("{terms:.3e} series terms exceed {MAX_TERMS:.0e}")));
    }
    let log_beta = beta.ln();
    let mut log_fact = vec![0.0; n + 1];
    for k in 1..=n {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    let c_last = counts[d - 1] as f64;
    let offset = -beta * (d as f64 - 1.0);

    let per_outer: Vec<LogSumExp> = (0..=n)
        .into_par_iter()
        .map(|n1| {
            let mut acc = LogSumExp::default();
            let mut idx = vec![0usize; inner_dims];
            let mut shifted = vec![0.0; d - 1];
            let mut scratch = vec![0.0; order + 1];
            loop {
                shifted[0] = (n1 as u32 + counts[0]) as f64;
                let mut log_w = n1 as f64 * log_beta - log_fact[n1];
                for (k, &m) in idx.iter().enumerate() {
                    shifted[k + 1] = (m as u32 + counts[k + 1]) as f64;
                    log_w += m as f64 * log_beta - log_fact[m];
                }
                let (e0, e1) = elementary_pair(&shifted, order, &mut scratch);
                let last = if kappa == 0.0 { beta } else { beta * (kappa * e1).exp() };
                let interaction = if kappa == 0.0 { 0.0 } else { kappa * (e0 + c_last * e1) };
                acc.push(log_w + last + interaction + offset);
                // Advance the odometer over the inner coordinates.
                let mut k = 0;
                loop {
                    if k == inner_dims {
                        return acc;
                    }
                    idx[k] += 1;
                    if idx[k] <= n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        })
        .collect();
    let mut total = LogSumExp::default();
    for part in &per_outer {
        total.merge(part);
    }
    let log_tail = ((d - 1) as f64).ln() + beta + log_poisson_tail_bound(beta, n + 1);
    Ok(SeriesSum { log_partial: total.value(), log_tail, truncation: n })
}

/// Initial truncation guess: a few Poisson standard deviations past the mean.
pub(crate) fn initial_truncation(beta: f64) -> usize {
    (beta + 12.0 * beta.sqrt() + 24.0).ceil() as usize
}

/// Smallest doubling of the initial truncation (capped at `cap`) whose
/// relative tail falls below `tolerance` for every series in `specs`.
pub(crate) fn auto_truncated(
    beta: f64,
    specs: &[(f64, usize, &[u32])],
    cap: Option<usize>,
    tolerance: f64,
) -> Result<Vec<SeriesSum>> {
    if let Some(n) = cap {
        return specs.iter().map(|(k, s, c)| count_series(beta, *k, *s, c, n)).collect();
    }
    let mut n = initial_truncation(beta);
    loop {
        let sums: Vec<SeriesSum> =
            specs.iter().map(|(k, s, c)| count_series(beta, *k, *s, c, n)).collect::<Result<_>>()?;
        if sums.iter().all(|s| s.relative_tail() <= tolerance) {
            return Ok(sums);
        }
        n *= 2;
    }
}
