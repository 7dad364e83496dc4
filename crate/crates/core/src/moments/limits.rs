use crate::error::{Error, Result};
use crate::geometry::{coordinate_factor, measure_unchecked, Facet, Orientation, MAX_DIM};
use crate::model::{ModelParams, SizeLaw};
use crate::rng::stream_rng;
use crate::stats::{BatchStats, Estimate};
use rayon::prelude::*;
use serde::Serialize;

/// Largest number of midpoint nodes per coordinate integral.
const MAX_NODES: f64 = 2e7;

/// Numerical settings for [`facet_integrals`].
#[derive(Clone, Copy, Debug)]
pub struct IntegralConfig {
    /// Midpoint nodes per axis (constant center intensity).
    pub resolution: usize,
    /// Monte Carlo draws (tabulated center intensity).
    pub samples: usize,
    pub seed: u64,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        IntegralConfig { resolution: 256, samples: 200_000, seed: 0 }
    }
}

/// Geometric constants of the `m = d - k` fold intersections of facets with
/// distinct axes, under the center intensity `chi`:
///
/// * `mean = ∫ H^k(y_1 ∩ .. ∩ y_m) chi(s_1)..chi(s_m) ds`,
/// * `variance = ∫ H^k(y_1 ∩ y_2 .. ∩ y_m) H^k(y_1 ∩ y'_2 .. ∩ y'_m) chi(s_1) chi(s_2)..chi(s'_m) ds`,
///
/// where the two tuples share `y_1` and use the same axis assignment.
/// Each constant is computed for two different axis assignments; they agree
/// whenever `chi` is symmetric under permutations of the axes.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FacetIntegrals {
    pub d: usize,
    pub k: usize,
    pub mean: Estimate,
    pub variance: Estimate,
    pub mean_alt: Estimate,
    pub variance_alt: Estimate,
    /// `"quadrature"` or `"monte-carlo"`.
    pub method: &'static str,
}

/// Limits of `E G_m / a^m` and three candidate limits of
/// `Var G_m / a^{2m - 1}` for `m = d - k` in the full-order special model.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LimitConstants {
    pub mean: f64,
    /// Variance constant with combinatorial factor `m^2 C(d-2, m-1)^2`.
    pub variance_square: f64,
    /// Variance constant with combinatorial factor `(m!)^2 C(d-2, m-1)^2`.
    pub variance_factorial: f64,
    /// Variance constant `(d-1) C(d-2, m-1)^2 I' / d^{2m-1}`: the process is
    /// asymptotically an equal mixture of Poisson processes on `d - 1` axes,
    /// and the first-difference variance of one such component gives this.
    pub variance_mixture: f64,
}

fn binom(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    (1..=r).fold(1.0, |acc, i| acc * (n - r + i) as f64 / i as f64)
}

/// Mean and variance constants from the facet integrals.
pub fn moment_limit_constants(
    d: usize,
    k: usize,
    mean_integral: f64,
    variance_integral: f64,
) -> Result<LimitConstants> {
    if d < 2 || k == 0 || k >= d {
        return Err(Error::InvalidQuery(format!("need 1 <= k <= d - 1, got d = {d}, k = {k}")));
    }
    let m = d - k;
    let df = d as f64;
    let pair = binom(d - 2, m - 1).powi(2);
    let base = variance_integral * (df - 1.0) / df.powi(2 * m as i32 - 1);
    let m_fact: f64 = (1..=m).map(|i| i as f64).product();
    Ok(LimitConstants {
        mean: mean_integral * binom(d - 1, m) / df.powi(m as i32),
        variance_square: base * (m * m) as f64 * pair,
        variance_factorial: base * m_fact * m_fact * pair,
        variance_mixture: base * pair,
    })
}

/// The mean and variance facet integrals of the special model `p` (any
/// center law; the window, size and orientation laws must be special).
pub fn facet_integrals(p: &ModelParams, k: usize, cfg: &IntegralConfig) -> Result<FacetIntegrals> {
    let d = p.dim();
    if k == 0 || k >= d {
        return Err(Error::InvalidQuery(format!("need 1 <= k <= d - 1, got k = {k}")));
    }
    if !p.is_canonical() {
        return Err(Error::InvalidQuery("facet integrals need axis orientations".into()));
    }
    let r = match p.size_law() {
        SizeLaw::Fixed(r) => *r,
        SizeLaw::Discrete { .. } => return Err(Error::InvalidQuery("facet integrals need a fixed facet size".into())),
    };
    let m = d - k;
    let forward: Vec<usize> = (0..m).collect();
    let backward: Vec<usize> = (0..m).map(|i| d - 1 - i).collect();
    let (mean, variance, mean_alt, variance_alt, method) = match p.constant_level() {
        Some(level) => {
            let (m1, v1) = quadrature(p, r, level, &forward, cfg.resolution)?;
            let (m2, v2) = quadrature(p, r, level, &backward, cfg.resolution)?;
            (m1, v1, m2, v2, "quadrature")
        }
        None => {
            let (m1, v1) = monte_carlo(p, r, &forward, cfg.samples, cfg.seed)?;
            let (m2, v2) = monte_carlo(p, r, &backward, cfg.samples, cfg.seed.wrapping_add(1))?;
            (m1, v1, m2, v2, "monte-carlo")
        }
    };
    Ok(FacetIntegrals { d, k, mean, variance, mean_alt, variance_alt, method })
}

/// Constant center level: both integrals factorise over coordinates.  For
/// coordinate `c`, `g_c(x) = ∫ factor_c(x, z_2..z_m) dz` with `x` the shared
/// facet's coordinate; then `mean = L^m Π_c ∫ g_c` and
/// `variance = L^{2m-1} Π_c ∫ g_c^2`.  Midpoint rules at `n` and `n/2`
/// nodes are combined by Richardson extrapolation (the integrands are
/// piecewise linear, so the leading error is `O(h^2)`).
fn quadrature(p: &ModelParams, r: f64, level: f64, axes: &[usize], resolution: usize) -> Result<(Estimate, Estimate)> {
    let m = axes.len();
    let d = p.dim();
    let n = (resolution.max(4) as f64).min(MAX_NODES.powf(1.0 / m as f64)).floor() as usize & !1;
    let eval = |n: usize| -> (f64, f64) {
        let (mut mean, mut var) = (level.powi(m as i32), level.powi(2 * m as i32 - 1));
        for c in 0..d {
            let fixer = axes.iter().position(|&a| a == c);
            let (lo, hi) = (p.window().lo()[c], p.window().hi()[c]);
            let (q1, q2) = coordinate_moments(m, r, fixer, lo, hi, n);
            mean *= q1;
            var *= q2;
        }
        (mean, var)
    };
    let (fm, fv) = eval(n);
    let (cm, cv) = eval(n / 2);
    let rich = |fine: f64, coarse: f64| {
        let v = (4.0 * fine - coarse) / 3.0;
        Estimate { value: v, se: (v - fine).abs() }
    };
    Ok((rich(fm, cm), rich(fv, cv)))
}

/// `(∫ g, ∫ g^2)` over `[lo, hi]` for one coordinate.
fn coordinate_moments(m: usize, r: f64, fixer: Option<usize>, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let halves = [r; MAX_DIM];
    let node = |i: usize| lo + h * (i as f64 + 0.5);
    let inner_nodes = n.pow(m as u32 - 1);
    let g: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut values = [0.0; MAX_DIM];
            values[0] = node(i);
            let mut sum = 0.0;
            for code in 0..inner_nodes {
                let mut rest = code;
                for v in values[1..m].iter_mut() {
                    *v = node(rest % n);
                    rest /= n;
                }
                sum += coordinate_factor(&values[..m], &halves[..m], fixer);
            }
            sum * h.powi(m as i32 - 1)
        })
        .collect();
    let q1 = g.iter().sum::<f64>() * h;
    let q2 = g.iter().map(|v| v * v).sum::<f64>() * h;
    (q1, q2)
}

/// Tabulated center intensity: Monte Carlo over centers drawn from `chi/T`.
fn monte_carlo(p: &ModelParams, r: f64, axes: &[usize], samples: usize, seed: u64) -> Result<(Estimate, Estimate)> {
    if samples < 2 {
        return Err(Error::Budget("at least 2 Monte Carlo samples required".into()));
    }
    let m = axes.len();
    let t = p.total_mass();
    let mut rng = stream_rng(seed, 0);
    let mut stats = BatchStats::new(2, samples as u64, 32);
    let draw = |axis: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut buf = [0.0; MAX_DIM];
        p.sample_center_into(rng, &mut buf[..p.dim()]);
        Facet::new(&buf[..p.dim()], r, Orientation::Axis(axis)).expect("valid facet")
    };
    let mut first = Vec::with_capacity(m);
    let mut second = Vec::with_capacity(m);
    for _ in 0..samples {
        first.clear();
        second.clear();
        for &axis in axes {
            first.push(draw(axis, &mut rng));
        }
        second.push(first[0]);
        for &axis in &axes[1..] {
            second.push(draw(axis, &mut rng));
        }
        let h1 = measure_unchecked(&first);
        let h2 = measure_unchecked(&second);
        stats.push(&[h1, h1 * h2]);
    }
    let scale = |e: Estimate, pow: i32| Estimate { value: e.value * t.powi(pow), se: e.se * t.powi(pow) };
    Ok((scale(stats.mean(0), m as i32), scale(stats.mean(1), 2 * m as i32 - 1)))
}
