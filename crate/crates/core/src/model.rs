//! Model parameters, unnormalised density, conditional intensities and the
//! local stability bound.

use crate::error::{Error, Result};
use crate::geometry::{Facet, Orientation, Window, MAX_DIM};
use crate::ustat::{g_increment, g_vector, FacetPattern};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Intensity `chi` of facet centers on the window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CenterLaw {
    /// Constant level on the whole window.
    Constant(f64),
    /// Piecewise-constant levels on a regular grid with `cells[i]` cells
    /// along axis `i`; `levels` is indexed with axis 0 varying fastest.
    Table { cells: Vec<usize>, levels: Vec<f64> },
}

/// Distribution of facet half extents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SizeLaw {
    Fixed(f64),
    Discrete { half_extents: Vec<f64>, weights: Vec<f64> },
}

/// Distribution of facet orientations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum OrientationLaw {
    /// Uniform on the `d` coordinate axes.
    Canonical,
    /// Planar only: piecewise-constant density of the normal angle on
    /// `(-pi/2, pi/2]`, with equal-width bins weighted by `weights`.
    Planar { weights: Vec<f64> },
}

/// Parameters of the exponential-family facet process at scale `a`.
#[derive(Clone, Debug, Serialize)]
pub struct ModelParams {
    #[serde(skip)]
    window: Window,
    b: f64,
    nu: Vec<f64>,
    a: f64,
    center_law: CenterLaw,
    size_law: SizeLaw,
    orientation_law: OrientationLaw,
    total_mass: f64,
    #[serde(skip)]
    center_cdf: Vec<f64>,
    #[serde(skip)]
    size_cdf: Vec<f64>,
    #[serde(skip)]
    orientation_cdf: Vec<f64>,
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Interaction vector of the submodel of order `s`: only `nu_s` is active.
pub fn submodel_nu(d: usize, s: usize, nu_s: f64) -> Result<Vec<f64>> {
    if s == 0 || s > d {
        return Err(Error::InvalidParams(format!("submodel order {s} outside 1..={d}")));
    }
    let mut nu = vec![0.0; d];
    nu[s - 1] = nu_s;
    Ok(nu)
}

impl ModelParams {
    pub fn new(
        window: Window,
        b: f64,
        nu: Vec<f64>,
        a: f64,
        center_law: CenterLaw,
        size_law: SizeLaw,
        orientation_law: OrientationLaw,
    ) -> Result<Self> {
        let mut p = ModelParams {
            window,
            b,
            nu,
            a,
            center_law,
            size_law,
            orientation_law,
            total_mass: f64::NAN,
            center_cdf: Vec::new(),
            size_cdf: Vec::new(),
            orientation_cdf: Vec::new(),
        };
        p.validate_laws()?;
        p.validate()?;
        Ok(p)
    }

    /// The special model: window `[0,b]^d`, half extent `b`, uniform axis
    /// orientations and constant center intensity `chi`.
    pub fn special(d: usize, b: f64, nu: Vec<f64>, a: f64, chi: f64) -> Result<Self> {
        ModelParams::new(
            Window::cube(d, b)?,
            b,
            nu,
            a,
            CenterLaw::Constant(chi),
            SizeLaw::Fixed(b),
            OrientationLaw::Canonical,
        )
    }

    fn validate_laws(&mut self) -> Result<()> {
        let d = self.window.dim();
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParams(format!("size scale b must be positive, got {}", self.b)));
        }
        let cell_volume;
        match &self.center_law {
            CenterLaw::Constant(level) => {
                if !(*level > 0.0 && level.is_finite()) {
                    return Err(Error::InvalidParams(format!("center level must be positive, got {level}")));
                }
                self.total_mass = level * self.window.volume();
            }
            CenterLaw::Table { cells, levels } => {
                if cells.len() != d || cells.contains(&0) {
                    return Err(Error::InvalidParams("center table needs d positive cell counts".into()));
                }
                if levels.len() != cells.iter().product::<usize>() {
                    return Err(Error::InvalidParams("center table level count mismatch".into()));
                }
                if levels.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
                    return Err(Error::InvalidParams("center levels must be nonnegative".into()));
                }
                cell_volume = self.window.volume() / levels.len() as f64;
                self.total_mass = levels.iter().sum::<f64>() * cell_volume;
                self.center_cdf = cumulative(levels);
            }
        }
        match &self.size_law {
            SizeLaw::Fixed(r) => {
                if !(*r > 0.0 && *r <= self.b) {
                    return Err(Error::InvalidParams(format!("half extent {r} outside (0, b]")));
                }
            }
            SizeLaw::Discrete { half_extents, weights } => {
                if half_extents.is_empty() || half_extents.len() != weights.len() {
                    return Err(Error::InvalidParams("size table length mismatch".into()));
                }
                if half_extents.iter().any(|r| !(*r > 0.0 && *r <= self.b)) {
                    return Err(Error::InvalidParams("half extents must lie in (0, b]".into()));
                }
                if weights.iter().any(|w| *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::InvalidParams("size weights must be nonnegative, not all 0".into()));
                }
                self.size_cdf = cumulative(weights);
            }
        }
        if let OrientationLaw::Planar { weights } = &self.orientation_law {
            if d != 2 {
                return Err(Error::UnsupportedOrientation(
                    "continuous orientation laws are only supported in the plane".into(),
                ));
            }
            if weights.is_empty() || weights.iter().any(|w| *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidParams("orientation weights must be nonnegative, not all 0".into()));
            }
            self.orientation_cdf = cumulative(weights);
        }
        Ok(())
    }

    /// Checks the interaction vector and scale: every `nu_j` with `j >= 2`
    /// must be `<= 0` for the density to be integrable; `nu_1` is free.
    pub fn validate(&self) -> Result<()> {
        let d = self.window.dim();
        if self.nu.len() != d {
            return Err(Error::InvalidParams(format!("expected {d} interaction parameters, got {}", self.nu.len())));
        }
        if self.nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("interaction parameters must be finite".into()));
        }
        for (j, &v) in self.nu.iter().enumerate().skip(1) {
            if v > 0.0 {
                return Err(Error::NonIntegrable { order: j + 1, value: v });
            }
        }
        if !(self.a >= 1.0 && self.a.is_finite()) {
            return Err(Error::InvalidParams(format!("intensity scale a must be >= 1, got {}", self.a)));
        }
        if !(self.total_mass > 0.0) {
            return Err(Error::InvalidParams("center intensity has zero total mass".into()));
        }
        Ok(())
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        let mut p = self.clone();
        p.a = a;
        p.validate()?;
        Ok(p)
    }

    pub fn with_nu(&self, nu: Vec<f64>) -> Result<Self> {
        let mut p = self.clone();
        p.nu = nu;
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn center_law(&self) -> &CenterLaw {
        &self.center_law
    }

    pub fn size_law(&self) -> &SizeLaw {
        &self.size_law
    }

    pub fn orientation_law(&self) -> &OrientationLaw {
        &self.orientation_law
    }

    /// `T`, the total mass of the center intensity.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Expected number of facets of the reference Poisson process, `a T`.
    pub fn expected_count(&self) -> f64 {
        self.a * self.total_mass
    }

    /// The submodel order when exactly one interaction parameter is nonzero.
    pub fn active_order(&self) -> Option<usize> {
        let mut active = self.nu.iter().enumerate().filter(|(_, v)| **v != 0.0);
        match (active.next(), active.next()) {
            (Some((j, _)), None) => Some(j + 1),
            _ => None,
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.orientation_law == OrientationLaw::Canonical
    }

    /// True for the special model (cube window `[0,b]^d`, fixed half extent
    /// `b`, uniform axis orientations); any center law is allowed.
    pub fn is_special(&self) -> bool {
        let d = self.dim();
        self.is_canonical()
            && self.size_law == SizeLaw::Fixed(self.b)
            && self.window.lo().iter().all(|&v| v == 0.0)
            && self.window.hi().iter().all(|&v| v == self.b)
            && d >= 2
    }

    /// Constant center level, when the center law is constant.
    pub fn constant_level(&self) -> Option<f64> {
        match self.center_law {
            CenterLaw::Constant(l) => Some(l),
            CenterLaw::Table { .. } => None,
        }
    }

    /// Largest half extent the size law can produce.
    pub fn max_half_extent(&self) -> f64 {
        match &self.size_law {
            SizeLaw::Fixed(r) => *r,
            SizeLaw::Discrete { half_extents, .. } => half_extents.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Size-law atoms as `(half_extent, probability)`.
    pub fn size_atoms(&self) -> Vec<(f64, f64)> {
        match &self.size_law {
            SizeLaw::Fixed(r) => vec![(*r, 1.0)],
            SizeLaw::Discrete { half_extents, weights } => {
                let total: f64 = weights.iter().sum();
                half_extents.iter().zip(weights).map(|(r, w)| (*r, w / total)).collect()
            }
        }
    }

    /// Center drawn from `chi / T`, written into `out[..d]`.
    pub fn sample_center_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim();
        let (lo, hi) = (self.window.lo(), self.window.hi());
        match &self.center_law {
            CenterLaw::Constant(_) => {
                for i in 0..d {
                    out[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                }
            }
            CenterLaw::Table { cells, .. } => {
                let mut cell = pick(&self.center_cdf, rng.random::<f64>());
                for i in 0..d {
                    let k = cell % cells[i];
                    cell /= cells[i];
                    let w = (hi[i] - lo[i]) / cells[i] as f64;
                    out[i] = lo[i] + w * (k as f64 + rng.random::<f64>());
                }
            }
        }
    }

    pub fn sample_center<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        self.sample_center_into(rng, &mut c);
        c
    }

    pub fn sample_half_extent<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.size_law {
            SizeLaw::Fixed(r) => *r,
            SizeLaw::Discrete { half_extents, .. } => half_extents[pick(&self.size_cdf, rng.random::<f64>())],
        }
    }

    pub fn sample_orientation<R: Rng + ?Sized>(&self, rng: &mut R) -> Orientation {
        match &self.orientation_law {
            OrientationLaw::Canonical => Orientation::Axis(rng.random_range(0..self.dim())),
            OrientationLaw::Planar { weights } => {
                let bin = pick(&self.orientation_cdf, rng.random::<f64>());
                let width = PI / weights.len() as f64;
                let theta = -PI / 2.0 + width * (bin as f64 + rng.random::<f64>());
                Orientation::planar(theta)
            }
        }
    }

    /// One facet drawn from the normalised intensity measure `lambda / T`.
    pub fn sample_facet<R: Rng + ?Sized>(&self, rng: &mut R) -> Facet {
        let mut buf = [0.0; MAX_DIM];
        let center = &mut buf[..self.dim()];
        self.sample_center_into(rng, center);
        let r = self.sample_half_extent(rng);
        let o = self.sample_orientation(rng);
        Facet::new(center, r, o).expect("sampled facet is valid")
    }

    /// Like [`sample_facet`](Self::sample_facet) with the orientation fixed.
    pub fn sample_facet_oriented<R: Rng + ?Sized>(&self, o: Orientation, rng: &mut R) -> Facet {
        let mut buf = [0.0; MAX_DIM];
        let center = &mut buf[..self.dim()];
        self.sample_center_into(rng, center);
        let r = self.sample_half_extent(rng);
        Facet::new(center, r, o).expect("sampled facet is valid")
    }
}

/// `nu . G(x)`, the log density up to the (never computed) normalising constant.
pub fn log_density_unnorm(x: &FacetPattern, p: &ModelParams) -> f64 {
    g_vector(x).dot(p.nu())
}

/// `log` of the conditional intensity of adding the facets `ys` to `x`,
/// accumulated one facet at a time.
pub fn log_conditional_intensity(ys: &[Facet], x: &FacetPattern, p: &ModelParams) -> Result<f64> {
    if ys.len() == 1 {
        return Ok(g_increment(x, &ys[0])?.dot(p.nu()));
    }
    let mut grown = x.clone();
    let mut total = 0.0;
    for y in ys {
        total += g_increment(&grown, y)?.dot(p.nu());
        grown.insert_unchecked(*y);
    }
    Ok(total)
}

/// `exp(nu . (G(x ∪ ys) - G(x)))`.
pub fn conditional_intensity(ys: &[Facet], x: &FacetPattern, p: &ModelParams) -> Result<f64> {
    Ok(log_conditional_intensity(ys, x, p)?.exp())
}

/// Uniform bound on the one-point conditional intensity: increments of
/// orders `>= 2` are nonnegative and weighted by `nu_j <= 0`, so only the
/// facet-measure term can raise the intensity above 1.
pub fn local_stability_bound(p: &ModelParams) -> f64 {
    let sup_measure = (2.0 * p.max_half_extent()).powi(p.dim() as i32 - 1);
    (p.nu()[0].max(0.0) * sup_measure).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn ax(c: &[f64], i: usize) -> Facet {
        Facet::axis(c, 1.0, i).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(ModelParams::special(3, 1.0, vec![0.5, -1.0, 0.0], 1.0, 1.0).is_ok());
        let err = ModelParams::special(2, 1.0, vec![0.0, 0.1], 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonIntegrable { order: 2, .. }));
        assert!(err.to_string().contains("not integrable"));
        assert!(ModelParams::special(2, 1.0, vec![0.0, 0.0], 1.0, 1.0).is_ok());
        assert!(ModelParams::special(2, 1.0, vec![0.0, 0.0], 0.5, 1.0).is_err());
    }

    #[test]
    fn density_examples() {
        let x = FacetPattern::from_facets(2, [ax(&[0.2, 0.7], 0), ax(&[0.9, 0.3], 1)]).unwrap();
        let poisson = ModelParams::special(2, 1.0, vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(log_density_unnorm(&x, &poisson), 0.0);
        let p = ModelParams::special(2, 1.0, vec![0.0, -1.0], 1.0, 1.0).unwrap();
        assert_eq!(log_density_unnorm(&x, &p), -1.0);
        assert_eq!(log_density_unnorm(&FacetPattern::new(2).unwrap(), &p), 0.0);
    }

    #[test]
    fn conditional_intensity_examples() {
        let nu2 = -0.7;
        let p = ModelParams::special(2, 1.0, submodel_nu(2, 2, nu2).unwrap(), 1.0, 1.0).unwrap();
        let x = FacetPattern::from_facets(2, [ax(&[0.2, 0.7], 0)]).unwrap();
        let y = ax(&[0.9, 0.3], 1);
        assert!((conditional_intensity(&[y], &x, &p).unwrap() - nu2.exp()).abs() < 1e-15);
        let empty = FacetPattern::new(2).unwrap();
        let pair = [ax(&[0.2, 0.7], 0), y];
        assert!((conditional_intensity(&pair, &empty, &p).unwrap() - nu2.exp()).abs() < 1e-15);
        let poisson = ModelParams::special(2, 1.0, vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(conditional_intensity(&pair, &empty, &poisson).unwrap(), 1.0);
        assert!(conditional_intensity(&[pair[0]], &x, &p).is_err());
    }

    #[test]
    fn stability_bound_examples() {
        let p = ModelParams::special(3, 1.0, vec![0.0, -1.0, -2.0], 1.0, 1.0).unwrap();
        assert_eq!(local_stability_bound(&p), 1.0);
        let p = ModelParams::special(2, 1.0, vec![1.0, 0.0], 1.0, 1.0).unwrap();
        assert!((local_stability_bound(&p) - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn table_center_law_samples_only_positive_cells() {
        let p = ModelParams::new(
            Window::cube(2, 1.0).unwrap(),
            1.0,
            vec![0.0, 0.0],
            1.0,
            CenterLaw::Table { cells: vec![2, 2], levels: vec![0.0, 4.0, 0.0, 0.0] },
            SizeLaw::Discrete { half_extents: vec![0.5, 1.0], weights: vec![1.0, 3.0] },
            OrientationLaw::Planar { weights: vec![1.0, 0.0] },
        )
        .unwrap();
        assert!((p.total_mass() - 1.0).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let f = p.sample_facet(&mut rng);
            // Cell 1 is x in [0.5, 1], y in [0, 0.5].
            assert!(f.center()[0] >= 0.5 && f.center()[1] <= 0.5);
            match f.orientation() {
                Orientation::Planar { nx, ny } => assert!(nx >= 0.0 && ny <= 0.0),
                _ => panic!("expected planar orientation"),
            }
        }
    }
}
