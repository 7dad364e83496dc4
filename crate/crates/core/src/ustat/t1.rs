use crate::error::{Error, Result};
use crate::geometry::{coordinate_factor, measure_unchecked, Facet, MAX_DIM};
use crate::model::ModelParams;
use crate::rng::stream_rng;
use crate::stats::{BatchStats, Estimate};

/// How to evaluate the integral defining the first difference operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum T1Estimator {
    /// Plain Monte Carlo over the intensity measure.
    MonteCarlo { samples: usize, seed: u64 },
    /// Tensor-product midpoint rule with `resolution` nodes per axis; needs
    /// axis orientations and a constant center intensity.
    Quadrature { resolution: usize },
}

/// First difference of `G_j` at facet `y` under the Poisson process with
/// intensity `lambda` (scale 1):
/// `(1/(j-1)!) * ∫ H(y_1 ∩ .. ∩ y_{j-1} ∩ y) lambda^{j-1}(dy_1..dy_{j-1})`.
pub fn t1_g(j: usize, y: &Facet, p: &ModelParams, estimator: &T1Estimator) -> Result<Estimate> {
    let d = p.dim();
    if j == 0 || j > d {
        return Err(Error::InvalidQuery(format!("order {j} outside 1..={d}")));
    }
    if y.dim() != d {
        return Err(Error::Dimension(y.dim()));
    }
    if j == 1 {
        return Ok(Estimate::exact(y.measure()));
    }
    match *estimator {
        T1Estimator::MonteCarlo { samples, seed } => monte_carlo(j, y, p, samples, seed),
        T1Estimator::Quadrature { resolution } => {
            let fine = quadrature(j, y, p, resolution)?;
            let coarse = quadrature(j, y, p, (resolution / 2).max(1))?;
            Ok(Estimate { value: fine, se: (fine - coarse).abs() })
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn monte_carlo(j: usize, y: &Facet, p: &ModelParams, samples: usize, seed: u64) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::Budget("Monte Carlo estimator needs at least 2 samples".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let scale = p.total_mass().powi(j as i32 - 1) / factorial(j - 1);
    let mut stats = BatchStats::new(1, samples as u64, 32);
    let mut tuple = Vec::with_capacity(j);
    for _ in 0..samples {
        tuple.clear();
        tuple.push(*y);
        for _ in 1..j {
            tuple.push(p.sample_facet(&mut rng));
        }
        stats.push(&[scale * measure_unchecked(&tuple)]);
    }
    Ok(stats.mean(0))
}

/// Midpoint-rule value of the integral for axis orientations and a constant
/// center level: orientation and size atoms are summed exactly and the
/// center integral factorises over coordinates.
fn quadrature(j: usize, y: &Facet, p: &ModelParams, resolution: usize) -> Result<f64> {
    let level =
        p.constant_level().ok_or_else(|| Error::InvalidQuery("quadrature needs a constant center intensity".into()))?;
    if !p.is_canonical() || y.orientation().axis().is_none() {
        return Err(Error::InvalidQuery("quadrature needs axis orientations".into()));
    }
    if resolution == 0 {
        return Err(Error::Budget("quadrature resolution must be positive".into()));
    }
    let partners = j - 1;
    let nodes = (resolution as f64).powi(partners as i32);
    if nodes > 1e7 {
        return Err(Error::Budget(format!("{nodes} quadrature nodes per coordinate exceeds 1e7")));
    }
    let d = p.dim();
    let atoms = p.size_atoms();
    let y_axis = y.orientation().axis().unwrap_or(0);
    let mut total = 0.0;
    // Ordered assignments of (axis, size atom) to each partner facet.
    let per_partner = d * atoms.len();
    let n_assign = per_partner.pow(partners as u32);
    for code in 0..n_assign {
        let mut rest = code;
        let mut axes = [0usize; MAX_DIM];
        let mut halves = [0.0; MAX_DIM];
        let mut weight = 1.0;
        axes[0] = y_axis;
        halves[0] = y.half_extent();
        for k in 1..=partners {
            let choice = rest % per_partner;
            rest /= per_partner;
            axes[k] = choice % d;
            let (r, w) = atoms[choice / d];
            halves[k] = r;
            weight *= w / d as f64;
        }
        let distinct = (0..=partners).all(|a| (a + 1..=partners).all(|b| axes[a] != axes[b]));
        if !distinct {
            continue;
        }
        let mut prod = weight;
        for c in 0..d {
            let fixer = (0..=partners).find(|&k| axes[k] == c);
            prod *= coordinate_integral(
                y.center()[c],
                &halves[..=partners],
                fixer,
                p.window().lo()[c],
                p.window().hi()[c],
                resolution,
            );
            if prod == 0.0 {
                break;
            }
        }
        total += prod;
    }
    // Orientation and size weights are probabilities; each partner center
    // carries density `level` on the window.
    Ok(total * level.powi(partners as i32) / factorial(partners))
}

/// `∫_{[lo,hi]^m} coordinate_factor(y_c, z_1..z_m) dz` by the midpoint rule.
fn coordinate_integral(yc: f64, halves: &[f64], fixer: Option<usize>, lo: f64, hi: f64, n: usize) -> f64 {
    let m = halves.len() - 1;
    let h = (hi - lo) / n as f64;
    let mut values = [0.0; MAX_DIM];
    values[0] = yc;
    let mut idx = [0usize; MAX_DIM];
    let mut sum = 0.0;
    loop {
        for k in 0..m {
            values[k + 1] = lo + h * (idx[k] as f64 + 0.5);
        }
        sum += coordinate_factor(&values[..=m], halves, fixer);
        let mut k = 0;
        loop {
            if k == m {
                return sum * h.powi(m as i32);
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
