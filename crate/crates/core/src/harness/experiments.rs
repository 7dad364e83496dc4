use super::config::{ExperimentConfig, ExperimentId};
use super::output::{Cell, ExperimentOutput, ResultTable, SeedRecord};
use crate::correlation::{rho_bounds, rho_limit, rho_series_counts, QueryShape, RhoQuery};
use crate::error::{Error, Result};
use crate::geometry::Facet;
use crate::model::ModelParams;
use crate::moments::{
    asymptotic_covariance_matrix, facet_integrals, mixed_moment, moment_limit_constants, CovarianceConfig,
    IntegralConfig, Kernel, MomentSpec, PoissonCorrelation,
};
use crate::sampler::{run_chain_streaming, sample_poisson, ChainConfig, ChainDiagnostics, ChainState};
use crate::stats::{BatchStats, Estimate};
use crate::ustat::{g_vector, T1Estimator};
use rayon::prelude::*;

/// Stream offset separating Poisson control replicates from the main ones.
const CONTROL_STREAMS: u64 = 1 << 62;

/// Resolution of the first-difference quadrature inside covariances.
const T1_RESOLUTION: usize = 64;

/// Runs the experiment selected by `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentId::E1 => experiment_e1_poisson_clt(cfg),
        ExperimentId::E2 => experiment_e2_degeneracy(cfg),
        ExperimentId::E3 => experiment_e3_rho_limits(cfg),
        ExperimentId::E4 => experiment_e4_moment_limits(cfg),
    }
}

fn binom(n: usize, r: usize) -> f64 {
    (1..=r).fold(1.0, |acc, i| acc * (n - r + i) as f64 / i as f64)
}

fn est_cells(e: Estimate) -> [Cell; 2] {
    [e.value.into(), e.se.into()]
}

/// Chain configuration for grid point `gi` and chain `r`; `chain.steps`
/// counts steps after burn-in.
fn chain_config(cfg: &ExperimentConfig, p: &ModelParams, gi: usize, r: usize) -> ChainConfig {
    let mut c = ChainConfig::for_params(p, 0, cfg.seed);
    if let Some(b) = cfg.chain_burnin {
        c.burn_in = b;
    }
    if let Some(t) = cfg.chain_thin {
        c.thin = t;
    }
    c.n_steps = c.burn_in + cfg.chain_steps;
    c.chain_index = ((gi as u64) << 20) | r as u64;
    c.record_trace = false;
    c.batches = cfg.chain_batches;
    c
}

struct ChainRun {
    stats: BatchStats,
    diag: ChainDiagnostics,
}

/// Runs `cfg.replicates` independent chains, recording `observe(state)` for
/// every retained state.
fn run_chains(
    cfg: &ExperimentConfig,
    p: &ModelParams,
    gi: usize,
    width: usize,
    observe: impl Fn(&ChainState<'_>, &mut [f64]) + Sync,
) -> Result<(Vec<ChainRun>, SeedRecord)> {
    let runs: Vec<Result<ChainRun>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let c = chain_config(cfg, p, gi, r);
            let mut stats = BatchStats::new(width, c.retained(), c.batches);
            let mut row = vec![0.0; width];
            let diag = run_chain_streaming(p, &c, |s| {
                observe(s, &mut row);
                stats.push(&row);
            })?;
            Ok(ChainRun { stats, diag })
        })
        .collect();
    let seeds = SeedRecord {
        a: p.a(),
        role: "chain".into(),
        seed: cfg.seed,
        first: (gi as u64) << 20,
        count: cfg.replicates as u64,
    };
    Ok((runs.into_iter().collect::<Result<_>>()?, seeds))
}

/// Average of per-chain estimates; errors combine as independent.
fn pooled(runs: &[ChainRun], f: impl Fn(&BatchStats) -> Estimate) -> Estimate {
    let n = runs.len() as f64;
    let (mut value, mut var) = (0.0, 0.0);
    for r in runs {
        let e = f(&r.stats);
        value += e.value;
        var += e.se * e.se;
    }
    Estimate { value: value / n, se: var.sqrt() / n }
}

fn mean_of(runs: &[ChainRun], f: impl Fn(&ChainDiagnostics) -> f64) -> f64 {
    runs.iter().map(|r| f(&r.diag)).sum::<f64>() / runs.len() as f64
}

/// Poisson expectation of `G_j` by the moment formula (exact whenever the
/// integrand is constant per orientation stratum).
fn poisson_mean(p: &ModelParams, j: usize, samples: usize, seed: u64) -> Result<Estimate> {
    let spec = MomentSpec::new(vec![Kernel::Intersection { order: j }], &PoissonCorrelation, samples.max(2), seed);
    Ok(mixed_moment(&spec, p)?.estimate())
}

/// Summary of one chain at the first grid value: means of `N` and `G_j`.
pub fn simulate(cfg: &ExperimentConfig) -> Result<(ResultTable, ChainDiagnostics, Vec<SeedRecord>)> {
    cfg.validate()?;
    let a = cfg.a_grid[0];
    let p = cfg.params(a)?;
    let mut c = chain_config(cfg, &p, 0, 0);
    c.record_trace = true;
    let diag = run_chain_streaming(&p, &c, |_| {})?;
    let mut table = ResultTable::new(&["a", "statistic", "mean", "se"]);
    table.push(vec![a.into(), "N".into(), diag.n_mean.value.into(), diag.n_mean.se.into()]);
    for (j, g) in diag.g_mean.iter().enumerate() {
        table.push(vec![a.into(), format!("G_{}", j + 1).into(), g.value.into(), g.se.into()]);
    }
    let seeds = vec![SeedRecord { a, role: "chain".into(), seed: cfg.seed, first: 0, count: 1 }];
    Ok((table, diag, seeds))
}

/// Poisson central-limit diagnostics: empirical covariance, skewness and
/// kurtosis of `Z_j = (G_j - E G_j) / a^{j - 1/2}` against the asymptotic
/// covariances.
pub fn experiment_e1_poisson_clt(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.nu.iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidParams("e1 studies the Poisson process: all nu_j must be 0".into()));
    }
    let d = cfg.d;
    let base = cfg.params(1.0)?;
    let cov_cfg = CovarianceConfig {
        outer_samples: cfg.covariance_samples,
        inner: T1Estimator::Quadrature { resolution: T1_RESOLUTION },
        seed: cfg.seed,
    };
    let theory = asymptotic_covariance_matrix(&base, &cov_cfg)?;
    let mut seeds = vec![SeedRecord {
        a: 1.0,
        role: "covariance".into(),
        seed: cfg.seed,
        first: 0,
        count: cfg.covariance_samples as u64,
    }];
    let mut table = ResultTable::new(&[
        "a",
        "i",
        "j",
        "c_emp",
        "c_emp_se",
        "c_theory",
        "c_theory_se",
        "mean_std",
        "mean_std_se",
        "skew",
        "skew_se",
        "kurt",
        "kurt_se",
    ]);
    for (gi, &a) in cfg.a_grid.iter().enumerate() {
        let p = cfg.params(a)?;
        let exact: Vec<Estimate> =
            (1..=d).map(|j| poisson_mean(&p, j, cfg.moment_samples, cfg.seed)).collect::<Result<_>>()?;
        let scales: Vec<f64> = (1..=d).map(|j| a.powf(j as f64 - 0.5)).collect();
        let first_stream = (gi as u64) << 32;
        let gs: Vec<Vec<f64>> = (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| g_vector(&sample_poisson(&p, cfg.seed, first_stream | r)).0)
            .collect();
        let mut stats = BatchStats::new(d, cfg.replicates as u64, 50);
        let mut z = vec![0.0; d];
        for g in &gs {
            for j in 0..d {
                z[j] = (g[j] - exact[j].value) / scales[j];
            }
            stats.push(&z);
        }
        seeds.push(SeedRecord {
            a,
            role: "poisson".into(),
            seed: cfg.seed,
            first: first_stream,
            count: cfg.replicates as u64,
        });
        for i in 0..d {
            for j in i..d {
                let mut row: Vec<Cell> = vec![a.into(), (i + 1).into(), (j + 1).into()];
                row.extend(est_cells(stats.covariance(i, j)));
                row.extend(est_cells(theory[i][j]));
                if i == j {
                    let m = stats.mean(i);
                    let se = m.se.hypot(exact[i].se / scales[i]);
                    row.extend([m.value.into(), se.into()]);
                    row.extend(est_cells(stats.skewness(i)));
                    row.extend(est_cells(stats.excess_kurtosis(i)));
                } else {
                    row.extend(std::iter::repeat_n(Cell::Empty, 6));
                }
                table.push(row);
            }
        }
    }
    Ok(ExperimentOutput { experiment: cfg.experiment.to_string(), table, seeds })
}

/// The single active interaction order of a submodel configuration.
fn submodel_order(cfg: &ExperimentConfig) -> Result<usize> {
    if let Some(s) = cfg.order {
        if !(2..=cfg.d).contains(&s) {
            return Err(Error::Config(format!("order {s} outside 2..={}", cfg.d)));
        }
        if cfg.nu.iter().enumerate().any(|(j, &v)| j + 1 != s && v != 0.0) {
            return Err(Error::InvalidParams(format!("only nu.{s} may be nonzero in the submodel of order {s}")));
        }
        return Ok(s);
    }
    let active: Vec<usize> = (0..cfg.d).filter(|&j| cfg.nu[j] != 0.0).map(|j| j + 1).collect();
    match active.as_slice() {
        [s] if *s >= 2 => Ok(*s),
        _ => Err(Error::InvalidParams(
            "submodel experiments need exactly one nonzero nu_s with s >= 2 (or an explicit order)".into(),
        )),
    }
}

/// Facets of `s` distinct axes through the window center.
fn distinct_axis_facets(p: &ModelParams, s: usize) -> Result<Vec<Facet>> {
    let center = vec![p.b() / 2.0; p.dim()];
    (0..s).map(|axis| Facet::axis(&center, p.b(), axis)).collect()
}

/// Decay of `E G_s` in the repulsive submodel of order `s`: chain estimates
/// with exact values (`s = d`), certified envelopes, orientation occupancy
/// and a Poisson control.
pub fn experiment_e2_degeneracy(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d = cfg.d;
    let s = submodel_order(cfg)?;
    let nu = cfg.nu[s - 1];
    if !(nu < 0.0) {
        return Err(Error::InvalidParams(format!("e2 needs nu.{s} < 0, got {nu}")));
    }
    let k = d - s;
    let mut table = ResultTable::new(&[
        "a",
        "s",
        "nu",
        "g_mean",
        "g_se",
        "exact",
        "exact_tail",
        "bound",
        "rate",
        "rate_envelope",
        "occupancy",
        "occupancy_se",
        "n_mean",
        "n_se",
        "birth_acc",
        "death_acc",
        "control_mean",
        "control_se",
        "control_exact",
        "control_exact_se",
    ]);
    let mut seeds = Vec::new();
    for (gi, &a) in cfg.a_grid.iter().enumerate() {
        let p = cfg.params(a)?;
        let beta = a * p.total_mass() / d as f64;
        let (runs, rec) = run_chains(cfg, &p, gi, 2, |st, row| {
            row[0] = st.g[s - 1];
            let present = st.pattern.axis_counts().iter().filter(|&&c| c > 0).count();
            row[1] = (present < s) as u8 as f64;
        })?;
        seeds.push(rec);
        let g = pooled(&runs, |b| b.mean(0));
        let occ = pooled(&runs, |b| b.mean(1));
        let n_mean = {
            let nr = runs.len() as f64;
            let v = runs.iter().map(|r| r.diag.n_mean.value).sum::<f64>() / nr;
            let se = runs.iter().map(|r| r.diag.n_mean.se.powi(2)).sum::<f64>().sqrt() / nr;
            Estimate { value: v, se }
        };
        let (exact, exact_tail) = if s == d {
            let sv = rho_series_counts(d, beta, nu, &vec![1; d], None, cfg.series_tolerance)?;
            let scale = beta.powi(d as i32);
            (Some(scale * sv.value), Some(scale * sv.tail_bound))
        } else {
            (None, None)
        };
        let mut query = RhoQuery::from_params(&p, distinct_axis_facets(&p, s)?, s)?;
        query.tolerance = cfg.series_tolerance;
        let bound = rho_bounds(&query)?;
        let envelope = binom(d, s) * beta.powi(s as i32) * (2.0 * cfg.b).powi(k as i32) * bound.upper;
        let rate = bound.rate.map(|r| r.rate);
        // Poisson control at the same scale.
        let p0 = p.with_nu(vec![0.0; d])?;
        let control_first = CONTROL_STREAMS | ((gi as u64) << 32);
        let control: Vec<f64> = (0..cfg.control_replicates as u64)
            .into_par_iter()
            .map(|r| g_vector(&sample_poisson(&p0, cfg.seed, control_first | r))[s - 1])
            .collect();
        let mut cs = BatchStats::new(1, control.len() as u64, 20);
        for v in &control {
            cs.push(&[*v]);
        }
        let control_mean = if control.len() >= 2 { cs.mean(0) } else { Estimate { value: f64::NAN, se: f64::NAN } };
        seeds.push(SeedRecord {
            a,
            role: "control".into(),
            seed: cfg.seed,
            first: control_first,
            count: cfg.control_replicates as u64,
        });
        let control_exact = poisson_mean(&p0, s, cfg.moment_samples, cfg.seed)?;
        let mut row: Vec<Cell> = vec![a.into(), s.into(), nu.into()];
        row.extend(est_cells(g));
        row.extend([exact.into(), exact_tail.into(), envelope.into(), rate.into()]);
        row.push(rate.map(|r| (r * a).exp()).into());
        row.extend(est_cells(occ));
        row.extend(est_cells(n_mean));
        row.push(mean_of(&runs, |d| d.birth_acceptance).into());
        row.push(mean_of(&runs, |d| d.death_acceptance).into());
        row.extend(est_cells(control_mean));
        row.extend(est_cells(control_exact));
        table.push(row);
    }
    Ok(ExperimentOutput { experiment: cfg.experiment.to_string(), table, seeds })
}

/// Every `(shape, k, l)` correlation query with a limit in dimension `d`.
pub fn rho_queries(d: usize) -> Vec<(QueryShape, usize, usize)> {
    let mut out = Vec::new();
    for shape in [QueryShape::Distinct, QueryShape::TwoGroups, QueryShape::SharedFacet] {
        for k in 1..d {
            if let Some((lo, hi)) = shape.admissible(d, k) {
                out.extend((lo..=hi).map(|l| (shape, k, l)));
            }
        }
    }
    out
}

/// Full-order correlation series along the grid against their limits, for
/// every query shape and admissible common-axis count.
pub fn experiment_e3_rho_limits(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut out = rho_convergence(cfg, &rho_queries(cfg.d))?;
    out.experiment = cfg.experiment.to_string();
    Ok(out)
}

/// Full-order correlation series for the given `(shape, k, l)` queries
/// along the grid, with truncation certificates and limits.
pub fn rho_convergence(cfg: &ExperimentConfig, queries: &[(QueryShape, usize, usize)]) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let d = cfg.d;
    if cfg.nu[..d - 1].iter().any(|&v| v != 0.0) || !(cfg.nu[d - 1] < 0.0) {
        return Err(Error::InvalidParams(format!("correlation series need the full-order model: only nu.{d} < 0")));
    }
    let nu = cfg.nu[d - 1];
    let mut table = ResultTable::new(&[
        "a",
        "shape",
        "k",
        "l",
        "rho",
        "lower",
        "upper",
        "tail_bound",
        "truncation",
        "limit",
        "numerator",
        "denominator",
    ]);
    for &a in &cfg.a_grid {
        let p = cfg.params(a)?;
        let beta = a * p.total_mass() / d as f64;
        for &(shape, k, l) in queries {
            let counts = shape.multiplicities(d, k, l)?;
            let sv = rho_series_counts(d, beta, nu, &counts, None, cfg.series_tolerance)?;
            let lim = rho_limit(d, k, shape, l)?;
            table.push(vec![
                a.into(),
                shape.label().into(),
                k.into(),
                l.into(),
                sv.value.into(),
                sv.lower.into(),
                sv.upper.into(),
                sv.tail_bound.into(),
                sv.truncation.into(),
                (*lim.numer() as f64 / *lim.denom() as f64).into(),
                sv.numerator.into(),
                sv.denominator.into(),
            ]);
        }
    }
    Ok(ExperimentOutput { experiment: "rho".into(), table, seeds: Vec::new() })
}

/// Poisson moments along the grid plus the grid-free asymptotic constants.
///
/// Rows (`quantity, i, j, a, value, se`):
///
/// * `poisson_mean` — `E G_i` under the Poisson process at scale `a`;
/// * `poisson_second` — `E G_i G_j` under the Poisson process;
/// * `asymptotic_covariance` — `C_ij` of the rescaled Poisson statistics;
/// * `facet_integral_mean`, `facet_integral_variance` — the facet integrals
///   of the `i = d - k` fold intersections (canonical models only);
/// * `limit_mean`, `limit_var_square`, `limit_var_factorial`,
///   `limit_var_mixture` — the derived full-order limits for that `i`.
pub fn moments_summary(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let d = cfg.d;
    let mut table = ResultTable::new(&["quantity", "i", "j", "a", "value", "se"]);
    let mut seeds = Vec::new();
    let push = |table: &mut ResultTable, q: &str, i: usize, j: Option<usize>, a: Option<f64>, e: Estimate| {
        table.push(vec![q.into(), i.into(), j.map_or(Cell::Empty, Cell::from), a.into(), e.value.into(), e.se.into()]);
    };
    for (gi, &a) in cfg.a_grid.iter().enumerate() {
        let p = cfg.params(a)?;
        let seed = cfg.seed.wrapping_add(gi as u64);
        for i in 1..=d {
            let spec = MomentSpec::new(
                vec![Kernel::Intersection { order: i }],
                &PoissonCorrelation,
                cfg.moment_samples.max(2),
                seed,
            );
            push(&mut table, "poisson_mean", i, None, Some(a), mixed_moment(&spec, &p)?.estimate());
        }
        for i in 1..=d {
            for j in i..=d {
                let kernels = vec![Kernel::Intersection { order: i }, Kernel::Intersection { order: j }];
                let spec = MomentSpec::new(kernels, &PoissonCorrelation, cfg.moment_samples.max(2), seed);
                push(&mut table, "poisson_second", i, Some(j), Some(a), mixed_moment(&spec, &p)?.estimate());
            }
        }
        seeds.push(SeedRecord { a, role: "moments".into(), seed, first: 0, count: 1 });
    }
    let base = cfg.params(1.0)?;
    let cov_cfg = CovarianceConfig {
        outer_samples: cfg.covariance_samples,
        inner: T1Estimator::Quadrature { resolution: T1_RESOLUTION },
        seed: cfg.seed,
    };
    let cov = asymptotic_covariance_matrix(&base, &cov_cfg)?;
    for i in 1..=d {
        for j in i..=d {
            push(&mut table, "asymptotic_covariance", i, Some(j), None, cov[i - 1][j - 1]);
        }
    }
    seeds.push(SeedRecord {
        a: 1.0,
        role: "covariance".into(),
        seed: cfg.seed,
        first: 0,
        count: cfg.covariance_samples as u64,
    });
    if base.is_canonical() {
        let icfg =
            IntegralConfig { resolution: cfg.quadrature_resolution, samples: cfg.moment_samples, seed: cfg.seed };
        for k in 1..d {
            let ints = facet_integrals(&base, k, &icfg)?;
            let lim = moment_limit_constants(d, k, ints.mean.value, ints.variance.value)?;
            let m = d - k;
            push(&mut table, "facet_integral_mean", m, None, None, ints.mean);
            push(&mut table, "facet_integral_variance", m, None, None, ints.variance);
            for (q, v) in [
                ("limit_mean", lim.mean),
                ("limit_var_square", lim.variance_square),
                ("limit_var_factorial", lim.variance_factorial),
                ("limit_var_mixture", lim.variance_mixture),
            ] {
                push(&mut table, q, m, None, None, Estimate::exact(v));
            }
        }
        seeds.push(SeedRecord {
            a: 1.0,
            role: "integrals".into(),
            seed: cfg.seed,
            first: 0,
            count: 2 * (d as u64 - 1),
        });
    }
    Ok(ExperimentOutput { experiment: "moments".into(), table, seeds })
}

/// Mean and variance of `G_{d-k}` in the full-order model against the
/// large-intensity constants.
pub fn experiment_e4_moment_limits(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let d = cfg.d;
    if d < 3 {
        return Err(Error::InvalidParams("e4 needs d >= 3".into()));
    }
    if cfg.nu[..d - 1].iter().any(|&v| v != 0.0) || !(cfg.nu[d - 1] < 0.0) {
        return Err(Error::InvalidParams(format!("e4 needs the full-order model: only nu.{d} < 0")));
    }
    let k = cfg.k;
    if k == 0 || k >= d {
        return Err(Error::Config(format!("k = {k} outside 1..={}", d - 1)));
    }
    let m = d - k;
    let nu = cfg.nu[d - 1];
    let base = cfg.params(1.0)?;
    let integrals = facet_integrals(
        &base,
        k,
        &IntegralConfig { resolution: cfg.quadrature_resolution, samples: cfg.moment_samples, seed: cfg.seed },
    )?;
    let limits = moment_limit_constants(d, k, integrals.mean.value, integrals.variance.value)?;
    let candidates = [
        ("square", limits.variance_square),
        ("factorial", limits.variance_factorial),
        ("mixture", limits.variance_mixture),
    ];
    let mut table = ResultTable::new(&[
        "a",
        "k",
        "mean_ratio",
        "mean_ratio_se",
        "mean_exact",
        "mean_limit",
        "var_ratio",
        "var_ratio_se",
        "var_ratio_full",
        "var_ratio_full_se",
        "var_square",
        "var_factorial",
        "var_mixture",
        "nearest",
        "skew",
        "skew_se",
        "occupancy",
        "occupancy_se",
        "birth_acc",
        "death_acc",
    ]);
    let mut seeds = vec![SeedRecord { a: 1.0, role: "integrals".into(), seed: cfg.seed, first: 0, count: 2 }];
    for (gi, &a) in cfg.a_grid.iter().enumerate() {
        let p = cfg.params(a)?;
        let beta = a * p.total_mass() / d as f64;
        let (runs, rec) = run_chains(cfg, &p, gi, 2, |st, row| {
            row[0] = st.g[m - 1];
            let present = st.pattern.axis_counts().iter().filter(|&&c| c > 0).count();
            row[1] = (present < d) as u8 as f64;
        })?;
        seeds.push(rec);
        let scale = |e: Estimate, pow: f64| Estimate { value: e.value / a.powf(pow), se: e.se / a.powf(pow) };
        let mean = scale(pooled(&runs, |b| b.mean(0)), m as f64);
        let var = pooled(&runs, |b| b.variance(0));
        let var_ratio = scale(var, 2.0 * m as f64 - 1.0);
        let var_full = scale(var, 2.0 * m as f64);
        let rho = rho_series_counts(d, beta, nu, &[vec![1; m], vec![0; k]].concat(), None, cfg.series_tolerance)?;
        let mean_exact = binom(d, m) / (d as f64).powi(m as i32) * integrals.mean.value * rho.value;
        let best = candidates.iter().map(|(_, c)| (var_ratio.value - c).abs()).fold(f64::INFINITY, f64::min);
        let nearest: Vec<&str> = candidates
            .iter()
            .filter(|(_, c)| (var_ratio.value - c).abs() <= best * (1.0 + 1e-12))
            .map(|(name, _)| *name)
            .collect();
        let mut row: Vec<Cell> = vec![a.into(), k.into()];
        row.extend(est_cells(mean));
        row.extend([mean_exact.into(), limits.mean.into()]);
        row.extend(est_cells(var_ratio));
        row.extend(est_cells(var_full));
        row.extend(candidates.iter().map(|(_, c)| Cell::from(*c)));
        row.push(nearest.join("|").into());
        row.extend(est_cells(pooled(&runs, |b| b.skewness(0))));
        row.extend(est_cells(pooled(&runs, |b| b.mean(1))));
        row.push(mean_of(&runs, |d| d.birth_acceptance).into());
        row.push(mean_of(&runs, |d| d.death_acceptance).into());
        table.push(row);
    }
    Ok(ExperimentOutput { experiment: cfg.experiment.to_string(), table, seeds })
}
