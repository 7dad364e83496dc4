//! Correlation functions `rho_m(y_1..y_m) = E[lambda*(y_1..y_m; X)]`:
//! closed-form large-scale limits, exact truncated series for the
//! full-order submodel of the special model, certified bounds for lower
//! orders, and an MCMC estimator valid for any model.

mod series;

pub use series::{count_series, log_poisson_tail_bound, SeriesSum};

use crate::error::{Error, Result};
use crate::geometry::{Facet, MAX_DIM};
use crate::model::{log_conditional_intensity, ModelParams};
use crate::stats::{BatchStats, Estimate};
use crate::ustat::FacetPattern;
use num_rational::Ratio;
use serde::Serialize;

/// Default relative tolerance of certified series tails.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Arrangement of query facets relative to the interacting order `d - k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QueryShape {
    /// `d - k` facets with distinct axes.
    Distinct,
    /// Two groups of `d - k` distinct axes each, sharing `l` axes.
    TwoGroups,
    /// Two groups of `d - k` distinct axes that share one facet; besides
    /// the shared facet's axis, `l` further axes are common to both groups.
    SharedFacet,
}

impl QueryShape {
    pub fn label(&self) -> &'static str {
        match self {
            QueryShape::Distinct => "distinct",
            QueryShape::TwoGroups => "two_groups",
            QueryShape::SharedFacet => "shared_facet",
        }
    }

    /// Admissible range of the common-axis count `l` (inclusive); both
    /// groups must fit into `d` axes.
    pub fn admissible(&self, d: usize, k: usize) -> Option<(usize, usize)> {
        if d < 2 || k == 0 || k >= d {
            return None;
        }
        let m = d - k;
        match self {
            QueryShape::Distinct => Some((0, 0)),
            QueryShape::TwoGroups => Some(((2 * m).saturating_sub(d), m)),
            QueryShape::SharedFacet => Some(((2 * m).saturating_sub(d + 1), m - 1)),
        }
    }

    fn check(&self, d: usize, k: usize, l: usize) -> Result<()> {
        match self.admissible(d, k) {
            Some((lo, hi)) if (lo..=hi).contains(&l) => Ok(()),
            Some((lo, hi)) => Err(Error::InvalidQuery(format!(
                "common-axis count {l} outside admissible range {lo}..={hi} for d = {d}, k = {k}"
            ))),
            None => Err(Error::InvalidQuery(format!("need 1 <= k <= d - 1, got d = {d}, k = {k}"))),
        }
    }

    /// Number of query facets per axis for a canonical realisation of the
    /// shape (axes filled in order: shared axes first).
    pub fn multiplicities(&self, d: usize, k: usize, l: usize) -> Result<Vec<u32>> {
        self.check(d, k, l)?;
        let m = d - k;
        let mut c = vec![0u32; d];
        match self {
            QueryShape::Distinct => c[..m].iter_mut().for_each(|v| *v = 1),
            QueryShape::TwoGroups => {
                // First group on axes 0..m; second group reuses axes 0..l and
                // takes m - l fresh axes.
                c[..m].iter_mut().for_each(|v| *v = 1);
                c[..l].iter_mut().for_each(|v| *v += 1);
                c[m..m + (m - l)].iter_mut().for_each(|v| *v = 1);
            }
            QueryShape::SharedFacet => {
                // Shared facet on axis 0; group one adds axes 1..m, group two
                // reuses axes 1..=l and takes m - 1 - l fresh axes.
                c[..m].iter_mut().for_each(|v| *v = 1);
                c[1..=l].iter_mut().for_each(|v| *v += 1);
                c[m..m + (m - 1 - l)].iter_mut().for_each(|v| *v = 1);
            }
        }
        Ok(c)
    }
}

/// Large-scale limit of the full-order correlation function for the given
/// query shape: the fraction of axes not used by any query facet.
pub fn rho_limit(d: usize, k: usize, shape: QueryShape, l: usize) -> Result<Ratio<i64>> {
    let c = shape.multiplicities(d, k, l)?;
    Ok(unused_axis_fraction(d, &c))
}

/// `#{axes with no query facet} / d`.
pub fn unused_axis_fraction(d: usize, counts: &[u32]) -> Ratio<i64> {
    let unused = counts.iter().filter(|&&c| c == 0).count();
    Ratio::new(unused as i64, d as i64)
}

/// Arguments and truncation control for series evaluations.
#[derive(Clone, Debug)]
pub struct RhoQuery {
    pub facets: Vec<Facet>,
    /// Interacting order `s` of the submodel.
    pub order: usize,
    /// Interaction strength `nu_s <= 0`.
    pub nu: f64,
    pub a: f64,
    pub d: usize,
    pub b: f64,
    pub total_mass: f64,
    /// Fixed truncation per summed count; chosen automatically when absent.
    pub truncation: Option<usize>,
    /// Target relative tail when the truncation is automatic.
    pub tolerance: f64,
}

impl RhoQuery {
    /// Query against the special-model submodel described by `p`.
    pub fn from_params(p: &ModelParams, facets: Vec<Facet>, order: usize) -> Result<Self> {
        let d = p.dim();
        if !p.is_special() {
            return Err(Error::InvalidQuery("series evaluation needs the special model".into()));
        }
        if order < 2 || order > d {
            return Err(Error::InvalidQuery(format!("submodel order {order} outside 2..={d}")));
        }
        if p.nu().iter().enumerate().any(|(j, v)| j + 1 != order && *v != 0.0) {
            return Err(Error::InvalidQuery(format!("model is not the submodel of order {order}")));
        }
        Ok(RhoQuery {
            facets,
            order,
            nu: p.nu()[order - 1],
            a: p.a(),
            d,
            b: p.b(),
            total_mass: p.total_mass(),
            truncation: None,
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    /// `beta = aT/d`, the mean count per axis class.
    pub fn beta(&self) -> f64 {
        self.a * self.total_mass / self.d as f64
    }

    fn validate(&self) -> Result<Vec<u32>> {
        if self.d < 2 || self.d > MAX_DIM {
            return Err(Error::Dimension(self.d));
        }
        if self.order < 2 || self.order > self.d {
            return Err(Error::InvalidQuery(format!("order {} outside 2..={}", self.order, self.d)));
        }
        if !(self.nu <= 0.0) {
            return Err(Error::NonIntegrable { order: self.order, value: self.nu });
        }
        if self.truncation == Some(0) {
            return Err(Error::InvalidQuery("truncation must be >= 1".into()));
        }
        if !(self.a > 0.0 && self.total_mass > 0.0 && self.b > 0.0) {
            return Err(Error::InvalidQuery("a, T and b must be positive".into()));
        }
        self.axis_counts()
    }

    /// Per-axis counts of the query facets; they must be distinct,
    /// axis-aligned and of pairwise distinct orientation.
    fn axis_counts(&self) -> Result<Vec<u32>> {
        let mut counts = vec![0u32; self.d];
        for (i, f) in self.facets.iter().enumerate() {
            if f.dim() != self.d {
                return Err(Error::Dimension(f.dim()));
            }
            if self.facets[..i].contains(f) {
                return Err(Error::DuplicateFacet);
            }
            let axis = f
                .orientation()
                .axis()
                .ok_or_else(|| Error::InvalidQuery("query facets must be axis-aligned".into()))?;
            counts[axis] += 1;
        }
        if counts.iter().any(|&c| c > 1) {
            return Err(Error::InvalidQuery("query facets must have pairwise distinct orientations".into()));
        }
        Ok(counts)
    }
}

/// Exact (up to a certified tail) correlation value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    /// Certified enclosure of the exact value.
    pub lower: f64,
    pub upper: f64,
    /// `max(upper - value, value - lower)`.
    pub tail_bound: f64,
    /// Normalised numerator and denominator partial sums.
    pub numerator: f64,
    pub denominator: f64,
    pub truncation: usize,
}

fn ratio_from_sums(num: &SeriesSum, den: &SeriesSum) -> SeriesValue {
    // Both series are normalised by the same factor; differences of logs
    // keep the ratio finite even when the sums themselves are huge.
    let value = (num.log_partial - den.log_partial).exp();
    let upper = value * (1.0 + num.relative_tail());
    let lower = value / (1.0 + den.relative_tail());
    SeriesValue {
        value,
        lower,
        upper,
        tail_bound: (upper - value).max(value - lower),
        numerator: num.partial(),
        denominator: den.partial(),
        truncation: num.truncation.max(den.truncation),
    }
}

/// Full-order correlation function for query facets placed on axes with
/// multiplicities `counts` (any multiplicities are allowed here).
pub fn rho_series_counts(
    d: usize,
    beta: f64,
    nu: f64,
    counts: &[u32],
    truncation: Option<usize>,
    tolerance: f64,
) -> Result<SeriesValue> {
    if counts.len() != d {
        return Err(Error::InvalidQuery("one multiplicity per axis required".into()));
    }
    if !(nu <= 0.0) {
        return Err(Error::NonIntegrable { order: d, value: nu });
    }
    if nu == 0.0 {
        return Ok(SeriesValue {
            value: 1.0,
            lower: 1.0,
            upper: 1.0,
            tail_bound: 0.0,
            numerator: 1.0,
            denominator: 1.0,
            truncation: 0,
        });
    }
    let zeros = vec![0u32; d];
    let sums = series::auto_truncated(beta, &[(nu, d, counts), (nu, d, &zeros)], truncation, tolerance)?;
    Ok(ratio_from_sums(&sums[0], &sums[1]))
}

/// Full-order correlation function of the special model (`order == d`).
/// In this case every full set of distinct axes meets in exactly one point,
/// so the value only depends on the axes of the query facets.
pub fn rho_series_full_order(q: &RhoQuery) -> Result<SeriesValue> {
    let counts = q.validate()?;
    if q.order != q.d {
        return Err(Error::InvalidQuery(format!(
            "order {} < d = {}: the value depends on centers; use rho_bounds or rho_mcmc",
            q.order, q.d
        )));
    }
    rho_series_counts(q.d, q.beta(), q.nu, &counts, q.truncation, q.tolerance)
}

/// Rate `R = T R_1 / d` with `R_1(p, q) = k e^{nu b^k p} + (d-k-1) e^{nu b^k}
/// + e^{nu b^k q} - (d-k-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegeneracyRate {
    pub p: u32,
    pub q: u32,
    pub r1: f64,
    pub rate: f64,
}

/// Evaluates the rate at given integers `p, q >= 1`.
pub fn degeneracy_rate_at(d: usize, k: usize, b: f64, total_mass: f64, nu: f64, p: u32, q: u32) -> DegeneracyRate {
    let e = |t: f64| (nu * b.powi(k as i32) * t).exp();
    let rest = (d - k - 1) as f64;
    let r1 = e(p as f64) * k as f64 + e(1.0) * rest + e(q as f64) - rest;
    DegeneracyRate { p, q, r1, rate: total_mass * r1 / d as f64 }
}

/// Minimises `R_1` over `1 <= p, q <= cap`, ties resolved towards the
/// smallest `(p, q)`.  `R_1` is a sum of a term in `p` and a term in `q`,
/// both decreasing, so the two coordinates are minimised separately.  The
/// cap is raised when needed so that a negative `R_1` (which exists for
/// every `nu < 0` once `d - k >= 2`) lies inside the search box.
pub fn degeneracy_rate(d: usize, k: usize, b: f64, total_mass: f64, nu: f64, cap: u32) -> Result<DegeneracyRate> {
    if !(nu < 0.0) {
        return Err(Error::InvalidQuery(format!("rate needs nu < 0, got {nu}")));
    }
    if k == 0 || k + 2 > d {
        return Err(Error::InvalidQuery(format!("rate needs 1 <= k <= d - 2, got d = {d}, k = {k}")));
    }
    let x = -nu * b.powi(k as i32);
    let rest = (d - k - 1) as f64;
    // (k + 1) e^{-x n} < rest (1 - e^{-x}) guarantees R_1(n, n) < 0.
    let needed = (((k + 1) as f64) / (rest * -(-x).exp_m1())).ln() / x;
    let cap = cap.max(1).max(needed.ceil().min(u32::MAX as f64 - 2.0) as u32 + 1);
    let argmin = |weight: f64| {
        let mut best = (1u32, weight * (-x).exp());
        for n in 2..=cap {
            let v = weight * (-x * n as f64).exp();
            if v < best.1 {
                best = (n, v);
            }
        }
        best.0
    };
    let best = degeneracy_rate_at(d, k, b, total_mass, nu, argmin(k as f64), argmin(1.0));
    if !(best.r1 < 0.0) {
        return Err(Error::InvalidQuery(format!("no negative rate found with cap {cap}")));
    }
    Ok(best)
}

/// Certified upper bound on a correlation function of order `s = d - k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoBound {
    /// Upper bound on `rho` (includes the truncation tail).
    pub upper: f64,
    /// Normalised partial sums of the numerator upper bound and the
    /// denominator lower bound.
    pub numerator_upper: f64,
    pub denominator_lower: f64,
    pub truncation: usize,
    /// `true` when `nu = 0` and the bound is the trivial value 1.
    pub trivial: bool,
    /// Exponential rate for `k >= 1`, `d - k >= 2`.
    pub rate: Option<DegeneracyRate>,
}

/// Search cap for the rate integers.
pub const DEFAULT_RATE_CAP: u32 = 64;

/// Upper bound on `rho_s(y)` for query facets with distinct axes in the
/// submodel of order `s`.  Every intersection of `s` facets with distinct
/// axes has measure in `[b^k, (2b)^k]`, which bounds the numerator from
/// above and the denominator from below by count series.  For `s = d` the
/// bound is exact up to the tail.
pub fn rho_bounds(q: &RhoQuery) -> Result<RhoBound> {
    let counts = q.validate()?;
    let k = q.d - q.order;
    if q.nu == 0.0 {
        return Ok(RhoBound {
            upper: 1.0,
            numerator_upper: 1.0,
            denominator_lower: 1.0,
            truncation: 0,
            trivial: true,
            rate: None,
        });
    }
    let kappa_num = q.nu * q.b.powi(k as i32);
    let kappa_den = q.nu * (2.0 * q.b).powi(k as i32);
    let zeros = vec![0u32; q.d];
    let sums = series::auto_truncated(
        q.beta(),
        &[(kappa_num, q.order, &counts), (kappa_den, q.order, &zeros)],
        q.truncation,
        q.tolerance,
    )?;
    let (num, den) = (&sums[0], &sums[1]);
    let upper = (num.log_partial - den.log_partial).exp() * (1.0 + num.relative_tail());
    let rate = if k >= 1 && q.order >= 2 {
        degeneracy_rate(q.d, k, q.b, q.total_mass, q.nu, DEFAULT_RATE_CAP).ok()
    } else {
        None
    };
    Ok(RhoBound {
        upper,
        numerator_upper: num.partial(),
        denominator_lower: den.partial(),
        truncation: num.truncation.max(den.truncation),
        trivial: false,
        rate,
    })
}

/// Ergodic average of the conditional intensity of `facets` over chain
/// samples, with batch-means standard error.
pub fn rho_mcmc(facets: &[Facet], samples: &[FacetPattern], p: &ModelParams) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(Error::InvalidQuery("no chain samples".into()));
    }
    let batches = ((samples.len() as f64).sqrt() as usize).clamp(1, 32);
    let mut stats = BatchStats::new(1, samples.len() as u64, batches);
    for x in samples {
        stats.push(&[log_conditional_intensity(facets, x, p)?.exp()]);
    }
    let est = stats.mean(0);
    if samples.len() == 1 {
        return Ok(Estimate { value: est.value, se: f64::NAN });
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::submodel_nu;
    use crate::sampler::{run_chain, ChainConfig};

    fn ax(c: &[f64], i: usize) -> Facet {
        Facet::axis(c, 1.0, i).unwrap()
    }

    #[test]
    fn limits() {
        assert_eq!(rho_limit(3, 1, QueryShape::Distinct, 0).unwrap(), Ratio::new(1, 3));
        assert_eq!(rho_limit(3, 1, QueryShape::TwoGroups, 2).unwrap(), Ratio::new(1, 3));
        assert_eq!(rho_limit(3, 1, QueryShape::TwoGroups, 1).unwrap(), Ratio::new(0, 3));
        assert_eq!(rho_limit(3, 2, QueryShape::Distinct, 0).unwrap(), Ratio::new(2, 3));
        assert!(rho_limit(3, 1, QueryShape::TwoGroups, 0).is_err());
        assert!(rho_limit(3, 1, QueryShape::TwoGroups, 3).is_err());
        // Shared facet: 2k - d + l + 1 unused axes out of d.
        for d in 2..=6usize {
            for k in 1..d {
                let (lo, hi) = QueryShape::SharedFacet.admissible(d, k).unwrap();
                for l in lo..=hi {
                    let expect = Ratio::new((2 * k + l + 1) as i64 - d as i64, d as i64);
                    assert_eq!(rho_limit(d, k, QueryShape::SharedFacet, l).unwrap(), expect);
                    assert!(expect >= Ratio::from_integer(0));
                }
                let (lo, hi) = QueryShape::TwoGroups.admissible(d, k).unwrap();
                for l in lo..=hi {
                    let expect = Ratio::new((2 * k + l) as i64 - d as i64, d as i64);
                    assert_eq!(rho_limit(d, k, QueryShape::TwoGroups, l).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn multiplicities_count_the_query_facets() {
        let c = QueryShape::SharedFacet.multiplicities(5, 2, 1).unwrap();
        assert_eq!(c.iter().sum::<u32>(), 5);
        assert_eq!(c, vec![1, 2, 1, 1, 0]);
        let c = QueryShape::TwoGroups.multiplicities(4, 2, 0).unwrap();
        assert_eq!(c, vec![1, 1, 1, 1]);
    }

    #[test]
    fn series_is_one_without_interaction() {
        let v = rho_series_counts(3, 4.0, 0.0, &[1, 1, 0], None, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn full_order_series_approaches_limits() {
        let p = ModelParams::special(3, 1.0, submodel_nu(3, 3, -1.0).unwrap(), 64.0, 1.0).unwrap();
        let q = RhoQuery::from_params(&p, vec![ax(&[0.1, 0.2, 0.3], 0), ax(&[0.5, 0.5, 0.5], 1)], 3).unwrap();
        let v = rho_series_full_order(&q).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 0.02, "{v:?}");
        assert!((v.denominator - 3.0).abs() < 0.05);
        assert!((v.numerator - 1.0).abs() < 0.05);
        assert!(v.tail_bound < 1e-6);
        let q2 = RhoQuery::from_params(&p, vec![ax(&[0.1, 0.2, 0.3], 2)], 3).unwrap();
        let v2 = rho_series_full_order(&q2).unwrap();
        assert!((v2.value - 2.0 / 3.0).abs() < 0.02, "{v2:?}");
    }

    #[test]
    fn full_order_query_errors() {
        let p = ModelParams::special(3, 1.0, submodel_nu(3, 3, -1.0).unwrap(), 4.0, 1.0).unwrap();
        let same_axis = vec![ax(&[0.1, 0.2, 0.3], 0), ax(&[0.5, 0.5, 0.5], 0)];
        assert!(rho_series_full_order(&RhoQuery::from_params(&p, same_axis, 3).unwrap()).is_err());
        let p2 = ModelParams::special(3, 1.0, submodel_nu(3, 2, -1.0).unwrap(), 4.0, 1.0).unwrap();
        let q = RhoQuery::from_params(&p2, vec![ax(&[0.1, 0.2, 0.3], 0), ax(&[0.5, 0.5, 0.5], 1)], 2).unwrap();
        assert!(rho_series_full_order(&q).is_err());
        assert!(rho_bounds(&q).is_ok());
    }

    #[test]
    fn rate_examples() {
        let r = degeneracy_rate_at(3, 1, 1.0, 1.0, -1.0, 10, 10);
        assert!((r.r1 - (2.0 * (-10f64).exp() + (-1f64).exp() - 1.0)).abs() < 1e-15);
        assert!((r.r1 + 0.632).abs() < 1e-3);
        let best = degeneracy_rate(3, 1, 1.0, 3.0, -1.0, DEFAULT_RATE_CAP).unwrap();
        assert!(best.rate < 0.0 && best.r1 <= r.r1);
        let strong = degeneracy_rate(5, 1, 1.0, 1.0, -50.0, DEFAULT_RATE_CAP).unwrap();
        assert!((strong.r1 + 3.0).abs() < 1e-12);
        assert!(degeneracy_rate(3, 1, 1.0, 1.0, 0.0, 8).is_err());
        for nu in [-1e-3, -0.1, -5.0] {
            assert!(degeneracy_rate(4, 2, 1.0, 1.0, nu, DEFAULT_RATE_CAP).is_ok(), "nu = {nu}");
        }
    }

    #[test]
    fn bound_dominates_chain_estimate() {
        let p = ModelParams::special(2, 1.0, submodel_nu(2, 2, -1.0).unwrap(), 4.0, 1.0).unwrap();
        let y = vec![ax(&[0.3, 0.6], 0), ax(&[0.7, 0.2], 1)];
        let bound = rho_bounds(&RhoQuery::from_params(&p, y.clone(), 2).unwrap()).unwrap();
        let mut c = ChainConfig::for_params(&p, 60_000, 8);
        c.thin = 5;
        let (samples, _) = run_chain(&p, &c).unwrap();
        let est = rho_mcmc(&y, &samples, &p).unwrap();
        assert!(est.value <= bound.upper + 3.0 * est.se, "{est:?} vs {bound:?}");
        // Order d: the bound is the exact series value.
        let exact = rho_series_full_order(&RhoQuery::from_params(&p, y, 2).unwrap()).unwrap();
        assert!((bound.upper - exact.upper).abs() < 1e-12);
        assert!(est.within(exact.value, 3.0, exact.tail_bound), "{est:?} vs {exact:?}");
    }

    #[test]
    fn chain_estimate_is_one_for_poisson() {
        let p = ModelParams::special(2, 1.0, vec![0.0, 0.0], 4.0, 1.0).unwrap();
        let (samples, _) = run_chain(&p, &ChainConfig::for_params(&p, 2000, 1)).unwrap();
        let est = rho_mcmc(&[ax(&[0.3, 0.6], 0)], &samples, &p).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(rho_mcmc(&[ax(&[0.3, 0.6], 0)], &[], &p).is_err());
    }
}
