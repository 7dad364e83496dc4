use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::stream_rng;
use crate::stats::{BatchStats, Estimate};
use crate::ustat::{t1_g, T1Estimator};
use rayon::prelude::*;

/// Outer Monte Carlo over `lambda / T` and the inner evaluator of the first
/// difference operator.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceConfig {
    pub outer_samples: usize,
    pub inner: T1Estimator,
    pub seed: u64,
}

impl Default for CovarianceConfig {
    fn default() -> Self {
        CovarianceConfig { outer_samples: 2000, inner: T1Estimator::Quadrature { resolution: 64 }, seed: 0 }
    }
}

/// Asymptotic covariance `C_ij = ∫ T1G_i(x) T1G_j(x) lambda(dx)` of the
/// rescaled statistics `a^{-(j - 1/2)} (G_j - E G_j)` under the Poisson
/// process.
pub fn asymptotic_covariance(i: usize, j: usize, p: &ModelParams, cfg: &CovarianceConfig) -> Result<Estimate> {
    let m = covariance_for_orders(&[i, j], p, cfg)?;
    Ok(m[0][1])
}

/// The full `d x d` matrix of asymptotic covariances.
pub fn asymptotic_covariance_matrix(p: &ModelParams, cfg: &CovarianceConfig) -> Result<Vec<Vec<Estimate>>> {
    let orders: Vec<usize> = (1..=p.dim()).collect();
    covariance_for_orders(&orders, p, cfg)
}

fn covariance_for_orders(orders: &[usize], p: &ModelParams, cfg: &CovarianceConfig) -> Result<Vec<Vec<Estimate>>> {
    let d = p.dim();
    if let Some(&bad) = orders.iter().find(|&&o| o == 0 || o > d) {
        return Err(Error::InvalidQuery(format!("order {bad} outside 1..={d}")));
    }
    if cfg.outer_samples < 2 {
        return Err(Error::Budget("at least 2 outer samples required".into()));
    }
    let n = orders.len();
    // Per outer sample: T1 values and their evaluation errors.
    let rows: Vec<Result<Vec<Estimate>>> = (0..cfg.outer_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(cfg.seed, s as u64);
            let x = p.sample_facet(&mut rng);
            let inner = match cfg.inner {
                T1Estimator::MonteCarlo { samples, seed } => T1Estimator::MonteCarlo {
                    samples,
                    seed: seed.wrapping_add((s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                },
                q => q,
            };
            orders.iter().map(|&o| t1_g(o, &x, p, &inner)).collect()
        })
        .collect();
    let t = p.total_mass();
    let mut stats = BatchStats::new(n * n, cfg.outer_samples as u64, 32);
    let mut inner_err = vec![0.0; n * n];
    let mut prods = vec![0.0; n * n];
    for row in rows {
        let row = row?;
        for a in 0..n {
            for b in 0..n {
                prods[a * n + b] = t * row[a].value * row[b].value;
                inner_err[a * n + b] += t * (row[a].value.abs() * row[b].se + row[b].value.abs() * row[a].se);
            }
        }
        stats.push(&prods);
    }
    let samples = cfg.outer_samples as f64;
    Ok((0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let e = stats.mean(a * n + b);
                    let inner = inner_err[a * n + b] / samples;
                    Estimate { value: e.value, se: e.se.hypot(inner) }
                })
                .collect()
        })
        .collect())
}
