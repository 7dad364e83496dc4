//! Moment formulas for U-statistics: partition expansions of mixed moments
//! with pluggable correlation functions, the leading term of centered
//! moments, asymptotic covariances of rescaled statistics, and the geometric
//! constants governing the large-intensity mean and variance of `G_j`.

mod covariance;
mod limits;
mod partition;

pub use covariance::{asymptotic_covariance, asymptotic_covariance_matrix, CovarianceConfig};
pub use limits::{facet_integrals, moment_limit_constants, FacetIntegrals, IntegralConfig, LimitConstants};
pub use partition::{enumerate_partitions, GroupedPartition, MAX_PARTITION_INDICES};

use crate::correlation::{rho_mcmc, rho_series_counts, unused_axis_fraction, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{measure_unchecked, Facet, Orientation};
use crate::model::ModelParams;
use crate::rng::stream_rng;
use crate::stats::Estimate;
use crate::ustat::FacetPattern;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

/// Largest number of orientation strata used for one partition integral.
const MAX_STRATA: usize = 4096;

pub type KernelFn = Arc<dyn Fn(&[Facet]) -> f64 + Send + Sync>;

/// Symmetric kernel `f` of a U-statistic `F = Σ_{distinct ordered tuples} f`.
#[derive(Clone)]
pub enum Kernel {
    /// `f ≡ 1`: `F` counts ordered tuples of distinct facets.
    Unit {
        order: usize,
    },
    /// `f = H(y_1 ∩ .. ∩ y_j) / j!`, so that `F = G_j`.
    Intersection {
        order: usize,
    },
    Custom {
        order: usize,
        label: String,
        f: KernelFn,
    },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({})", self.label())
    }
}

impl Kernel {
    pub fn order(&self) -> usize {
        match self {
            Kernel::Unit { order } | Kernel::Intersection { order } | Kernel::Custom { order, .. } => *order,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Kernel::Unit { order } => format!("unit{order}"),
            Kernel::Intersection { order } => format!("G{order}"),
            Kernel::Custom { label, .. } => label.clone(),
        }
    }

    pub fn eval(&self, facets: &[Facet]) -> f64 {
        match self {
            Kernel::Unit { .. } => 1.0,
            Kernel::Intersection { order } => {
                measure_unchecked(facets) / (1..=*order).map(|i| i as f64).product::<f64>()
            }
            Kernel::Custom { f, .. } => f(facets),
        }
    }
}

/// Source of the correlation functions `rho_n` used inside partition
/// integrals.
pub trait CorrelationProvider: Sync {
    fn rho(&self, facets: &[Facet]) -> Result<f64>;

    /// True when `rho_n ≡ 1` (Poisson process).
    fn is_identity(&self) -> bool {
        false
    }

    fn label(&self) -> String;
}

/// `rho_n ≡ 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PoissonCorrelation;

impl CorrelationProvider for PoissonCorrelation {
    fn rho(&self, _facets: &[Facet]) -> Result<f64> {
        Ok(1.0)
    }

    fn is_identity(&self) -> bool {
        true
    }

    fn label(&self) -> String {
        "poisson".into()
    }
}

/// Ergodic averages of conditional intensities over stored chain states.
pub struct ChainCorrelation<'a> {
    pub samples: &'a [FacetPattern],
    pub params: &'a ModelParams,
}

impl CorrelationProvider for ChainCorrelation<'_> {
    fn rho(&self, facets: &[Facet]) -> Result<f64> {
        Ok(rho_mcmc(facets, self.samples, self.params)?.value)
    }

    fn label(&self) -> String {
        format!("chain({} states)", self.samples.len())
    }
}

fn axis_counts(d: usize, facets: &[Facet]) -> Result<Vec<u32>> {
    let mut counts = vec![0u32; d];
    for f in facets {
        let axis = f.orientation().axis().ok_or_else(|| Error::InvalidQuery("axis-aligned facets required".into()))?;
        counts[axis] += 1;
    }
    Ok(counts)
}

/// Large-intensity limit of the full-order special model: the fraction of
/// axes carrying none of the arguments.
#[derive(Clone, Copy, Debug)]
pub struct LimitCorrelation {
    pub d: usize,
}

impl CorrelationProvider for LimitCorrelation {
    fn rho(&self, facets: &[Facet]) -> Result<f64> {
        let r = unused_axis_fraction(self.d, &axis_counts(self.d, facets)?);
        Ok(*r.numer() as f64 / *r.denom() as f64)
    }

    fn label(&self) -> String {
        "limit".into()
    }
}

/// Exact series values of the full-order special model, cached by the
/// per-axis multiplicities they depend on.
pub struct SeriesCorrelation {
    d: usize,
    beta: f64,
    nu: f64,
    cache: Mutex<HashMap<Vec<u32>, f64>>,
}

impl SeriesCorrelation {
    /// Requires the special model with only `nu_d` active.
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        let d = p.dim();
        if !p.is_special() || p.nu()[..d - 1].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidQuery("series correlations need the full-order special model".into()));
        }
        Ok(SeriesCorrelation {
            d,
            beta: p.a() * p.total_mass() / d as f64,
            nu: p.nu()[d - 1],
            cache: Mutex::new(HashMap::new()),
        })
    }
}

impl CorrelationProvider for SeriesCorrelation {
    fn rho(&self, facets: &[Facet]) -> Result<f64> {
        let counts = axis_counts(self.d, facets)?;
        if let Some(v) = self.cache.lock().expect("cache lock").get(&counts) {
            return Ok(*v);
        }
        let v = rho_series_counts(self.d, self.beta, self.nu, &counts, None, DEFAULT_TOLERANCE)?.value;
        self.cache.lock().expect("cache lock").insert(counts, v);
        Ok(v)
    }

    fn label(&self) -> String {
        "series".into()
    }
}

/// Mixed moment `E Π_i F_i` of U-statistics under a correlation provider.
pub struct MomentSpec<'a> {
    pub kernels: Vec<Kernel>,
    pub provider: &'a dyn CorrelationProvider,
    /// Monte Carlo draws per orientation stratum of each partition integral.
    pub samples_per_stratum: usize,
    /// Guard on the total number of integrand evaluations.
    pub max_evaluations: u64,
    pub seed: u64,
}

impl<'a> MomentSpec<'a> {
    pub fn new(
        kernels: Vec<Kernel>,
        provider: &'a dyn CorrelationProvider,
        samples_per_stratum: usize,
        seed: u64,
    ) -> Self {
        MomentSpec { kernels, provider, samples_per_stratum, max_evaluations: 200_000_000, seed }
    }

    fn validate(&self) -> Result<Vec<usize>> {
        if self.kernels.is_empty() {
            return Err(Error::InvalidQuery("at least one kernel required".into()));
        }
        if self.samples_per_stratum < 2 {
            return Err(Error::Budget("at least 2 samples per stratum required".into()));
        }
        let orders: Vec<usize> = self.kernels.iter().map(Kernel::order).collect();
        if orders.contains(&0) {
            return Err(Error::InvalidQuery("kernel orders must be >= 1".into()));
        }
        Ok(orders)
    }
}

/// Contribution of one partition to a mixed moment.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionTerm {
    pub blocks: usize,
    pub value: f64,
    pub se: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub se: f64,
    pub terms: Vec<PartitionTerm>,
    pub evaluations: u64,
}

impl MomentEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, se: self.se }
    }
}

fn strata_count(p: &ModelParams, n: usize) -> usize {
    if !p.is_canonical() {
        return 1;
    }
    match p.dim().checked_pow(n as u32) {
        Some(s) if s <= MAX_STRATA => s,
        _ => 1,
    }
}

/// `∫ (⊗ f_i)_sigma rho_{|sigma|} d lambda_a^{|sigma|}` for one partition,
/// by Monte Carlo over `lambda / T` stratified over axis assignments.
fn partition_integral(
    sigma: &GroupedPartition,
    kernels: &[Kernel],
    provider: &dyn CorrelationProvider,
    p: &ModelParams,
    samples: usize,
    seed_stream: (u64, u64),
) -> Result<PartitionTerm> {
    let n = sigma.len();
    let d = p.dim();
    let strata = strata_count(p, n);
    let stratified = strata > 1;
    let scale = (p.a() * p.total_mass()).powi(n as i32);
    // Index lists of each kernel's arguments, in group order.
    let mut offsets = Vec::with_capacity(kernels.len());
    let mut start = 0;
    for k in kernels {
        offsets.push(start..start + k.order());
        start += k.order();
    }
    let per_stratum: Vec<Result<(f64, f64)>> = (0..strata)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed_stream.0, (seed_stream.1 << 32) | s as u64);
            let mut axes = vec![0usize; n];
            let mut code = s;
            for a in axes.iter_mut() {
                *a = code % d;
                code /= d;
            }
            let mut z: Vec<Facet> = Vec::with_capacity(n);
            let mut args: Vec<Facet> = Vec::new();
            let (mut shift, mut s1, mut s2) = (None, 0.0, 0.0);
            for _ in 0..samples {
                z.clear();
                for &axis in &axes {
                    z.push(if stratified {
                        p.sample_facet_oriented(Orientation::Axis(axis), &mut rng)
                    } else {
                        p.sample_facet(&mut rng)
                    });
                }
                let mut value = 1.0;
                for (k, range) in kernels.iter().zip(&offsets) {
                    args.clear();
                    args.extend(range.clone().map(|idx| z[sigma.block_of(idx)]));
                    value *= k.eval(&args);
                    if value == 0.0 {
                        break;
                    }
                }
                if value != 0.0 && !provider.is_identity() {
                    value *= provider.rho(&z)?;
                }
                let c = *shift.get_or_insert(value);
                s1 += value - c;
                s2 += (value - c) * (value - c);
            }
            let m = samples as f64;
            let mean = shift.unwrap_or(0.0) + s1 / m;
            let var = ((s2 - s1 * s1 / m) / (m - 1.0)).max(0.0);
            Ok((mean, var / m))
        })
        .collect();
    let weight = 1.0 / strata as f64;
    let (mut value, mut var) = (0.0, 0.0);
    for r in per_stratum {
        let (m, v) = r?;
        value += weight * m;
        var += weight * weight * v;
    }
    Ok(PartitionTerm { blocks: n, value: scale * value, se: scale * var.sqrt() })
}

/// Mixed moment `E Π_i F_i(mu)` as the sum over grouped partitions `sigma`
/// of `∫ (⊗ f_i)_sigma rho_{|sigma|} d lambda_a^{|sigma|}`.
///
/// Integrals are Monte Carlo averages over the normalised intensity measure,
/// stratified over axis assignments for canonical orientations; strata on
/// which the integrand is constant contribute no error, so Poisson moments
/// of the special model come out exact.
pub fn mixed_moment(spec: &MomentSpec<'_>, p: &ModelParams) -> Result<MomentEstimate> {
    let orders = spec.validate()?;
    let partitions = enumerate_partitions(&orders)?;
    let mut terms = Vec::with_capacity(partitions.len());
    let (mut value, mut var, mut evaluations) = (0.0f64, 0.0f64, 0u64);
    for (idx, sigma) in partitions.iter().enumerate() {
        let cost = (strata_count(p, sigma.len()) * spec.samples_per_stratum) as u64;
        if evaluations + cost > spec.max_evaluations {
            return Err(Error::Budget(format!(
                "evaluation budget {} exhausted after {idx}/{} partitions; partial sum {value} (se {})",
                spec.max_evaluations,
                partitions.len(),
                var.sqrt()
            )));
        }
        let term = partition_integral(
            sigma,
            &spec.kernels,
            spec.provider,
            p,
            spec.samples_per_stratum,
            (spec.seed, idx as u64),
        )?;
        evaluations += cost;
        value += term.value;
        var += term.se * term.se;
        terms.push(term);
    }
    Ok(MomentEstimate { value, se: var.sqrt(), terms, evaluations })
}

/// Leading term of the `m`-th centered moment of `F`:
/// `Σ_{l=0}^m C(m,l) (-1)^{m-l} M_l M_1^{m-l}` with
/// `M_l = ∫ f^{⊗l} rho_{lk} d lambda_a^{lk}` (the all-distinct partition).
///
/// The terms cancel to lower order in regular cases, so this is a
/// diagnostic, not a variance estimate.  The error treats the `M_l` as
/// independent.
pub fn centered_moment_leading(
    kernel: &Kernel,
    m: usize,
    provider: &dyn CorrelationProvider,
    p: &ModelParams,
    samples_per_stratum: usize,
    seed: u64,
) -> Result<Estimate> {
    if m == 0 {
        return Err(Error::InvalidQuery("moment order must be >= 1".into()));
    }
    let k = kernel.order();
    if k == 0 {
        return Err(Error::InvalidQuery("kernel order must be >= 1".into()));
    }
    if m * k > MAX_PARTITION_INDICES {
        return Err(Error::Budget(format!("{} indices exceed the guard", m * k)));
    }
    // ms[l] = M_l with M_0 = 1.
    let mut ms = vec![Estimate::exact(1.0)];
    for l in 1..=m {
        if provider.is_identity() && l >= 2 {
            let m1 = ms[1];
            ms.push(Estimate {
                value: m1.value.powi(l as i32),
                se: l as f64 * m1.value.abs().powi(l as i32 - 1) * m1.se,
            });
            continue;
        }
        let kernels = vec![kernel.clone(); l];
        let sigma = GroupedPartition::singletons(&vec![k; l]);
        let t = partition_integral(&sigma, &kernels, provider, p, samples_per_stratum, (seed, l as u64))?;
        ms.push(Estimate { value: t.value, se: t.se });
    }
    let binom = |n: usize, r: usize| (1..=r).fold(1.0, |acc, i| acc * (n - r + i) as f64 / i as f64);
    let sign = |e: usize| if e.is_multiple_of(2) { 1.0 } else { -1.0 };
    let m1 = ms[1].value;
    let mut value = 0.0;
    for l in 0..=m {
        value += binom(m, l) * sign(m - l) * ms[l].value * m1.powi((m - l) as i32);
    }
    if provider.is_identity() {
        // All M_l are powers of M_1; the alternating sum vanishes identically.
        return Ok(Estimate { value, se: 0.0 });
    }
    // Delta-method error: M_1 enters both as a moment and as the power base.
    let mut d_m1 = m as f64 * sign(m - 1) * m1.powi(m as i32 - 1);
    let mut var = 0.0;
    for l in (0..=m).filter(|&l| l != 1) {
        let c = binom(m, l) * sign(m - l);
        if l < m {
            d_m1 += c * (m - l) as f64 * ms[l].value * m1.powi((m - l) as i32 - 1);
        }
        let d_ml = c * m1.powi((m - l) as i32);
        var += (d_ml * ms[l].se).powi(2);
    }
    var += (d_m1 * ms[1].se).powi(2);
    Ok(Estimate { value, se: var.sqrt() })
}
