//! Facets and the Hausdorff measures of their intersections.
//!
//! A facet is a cube (sup-norm ball) of half side `half_extent` inside a
//! hyperplane.  Axis-aligned facets are supported in every dimension; in the
//! plane, facets may also carry an arbitrary normal direction, in which case
//! they are segments.

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// Normal direction of the hyperplane carrying a facet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Orientation {
    /// Normal along coordinate axis `i` (zero based: `Axis(0)` is `e_1`).
    Axis(usize),
    /// Unit normal `(nx, ny)` in the plane, normalised so that the first
    /// nonzero coordinate is positive.
    Planar { nx: f64, ny: f64 },
}

impl Orientation {
    /// Planar orientation whose normal makes angle `theta` with the first axis.
    pub fn planar(theta: f64) -> Self {
        let (mut nx, mut ny) = (theta.cos(), theta.sin());
        if nx < 0.0 || (nx == 0.0 && ny < 0.0) {
            nx = -nx;
            ny = -ny;
        }
        Orientation::Planar { nx, ny }
    }

    /// Unit normal in the plane (axis orientations included).
    fn planar_normal(&self) -> (f64, f64) {
        match *self {
            Orientation::Axis(0) => (1.0, 0.0),
            Orientation::Axis(_) => (0.0, 1.0),
            Orientation::Planar { nx, ny } => (nx, ny),
        }
    }

    pub fn axis(&self) -> Option<usize> {
        match *self {
            Orientation::Axis(i) => Some(i),
            Orientation::Planar { .. } => None,
        }
    }
}

/// A bounded piece of a hyperplane: a cube of half side `half_extent`
/// centred at `center`, lying in the hyperplane through `center` with the
/// given normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet {
    dim: u8,
    center: [f64; MAX_DIM],
    half_extent: f64,
    orientation: Orientation,
}

impl Facet {
    pub fn new(center: &[f64], half_extent: f64, orientation: Orientation) -> Result<Self> {
        let d = center.len();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::Dimension(d));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidFacet(format!("half extent must be positive and finite, got {half_extent}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFacet("center must be finite".into()));
        }
        match orientation {
            Orientation::Axis(i) if i >= d => {
                return Err(Error::UnsupportedOrientation(format!("axis index {i} out of range for dimension {d}")))
            }
            Orientation::Planar { nx, ny } => {
                if d != 2 {
                    return Err(Error::UnsupportedOrientation(format!(
                        "non-axis orientation requires d = 2, got d = {d}"
                    )));
                }
                if ((nx * nx + ny * ny) - 1.0).abs() > 1e-12 {
                    return Err(Error::UnsupportedOrientation("normal must have unit length".into()));
                }
                if nx < 0.0 || (nx == 0.0 && ny <= 0.0) {
                    return Err(Error::UnsupportedOrientation(
                        "normal must have its first nonzero coordinate positive".into(),
                    ));
                }
            }
            _ => {}
        }
        let mut c = [0.0; MAX_DIM];
        c[..d].copy_from_slice(center);
        Ok(Facet { dim: d as u8, center: c, half_extent, orientation })
    }

    /// Axis-aligned facet; convenience for the canonical model.
    pub fn axis(center: &[f64], half_extent: f64, axis: usize) -> Result<Self> {
        Facet::new(center, half_extent, Orientation::Axis(axis))
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim as usize]
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// `(d-1)`-dimensional measure of the facet, `(2r)^(d-1)`.
    pub fn measure(&self) -> f64 {
        (2.0 * self.half_extent).powi(self.dim as i32 - 1)
    }
}

/// `(d-1)`-dimensional Hausdorff measure of a facet.
pub fn facet_measure(f: &Facet, d: usize) -> Result<f64> {
    if d < 2 || d != f.dim() {
        return Err(Error::Dimension(d));
    }
    Ok(f.measure())
}

/// Axis-aligned box used as the observation window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    dim: usize,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
}

impl Window {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        if !(2..=MAX_DIM).contains(&d) || hi.len() != d {
            return Err(Error::Dimension(d));
        }
        let mut w = Window { dim: d, lo: [0.0; MAX_DIM], hi: [0.0; MAX_DIM] };
        for i in 0..d {
            if !(hi[i] > lo[i]) || !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(Error::InvalidParams(format!("window side {i} has no positive length")));
            }
            w.lo[i] = lo[i];
            w.hi[i] = hi[i];
        }
        Ok(w)
    }

    /// The cube `[0, b]^d`.
    pub fn cube(d: usize, b: f64) -> Result<Self> {
        Window::new(&vec![0.0; d], &vec![b; d])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.hi[i] - self.lo[i]).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim && (0..self.dim).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }
}

/// True when the two facets lie in parallel hyperplanes.
pub fn parallel(a: &Facet, b: &Facet) -> bool {
    match (a.orientation, b.orientation) {
        (Orientation::Axis(i), Orientation::Axis(j)) => i == j,
        _ => {
            let (ax, ay) = a.orientation.planar_normal();
            let (bx, by) = b.orientation.planar_normal();
            ax * by - ay * bx == 0.0
        }
    }
}

/// True iff no two of the facets are parallel.
pub fn general_position(facets: &[Facet]) -> bool {
    facets.iter().enumerate().all(|(i, a)| facets[i + 1..].iter().all(|b| !parallel(a, b)))
}

/// `(d-j)`-dimensional measure of the intersection of `j` distinct facets.
///
/// Parallel pairs contribute 0.  Axis-aligned tuples are handled in every
/// dimension; tuples involving a planar orientation only in `d = 2`.
pub fn intersection_measure(facets: &[Facet], d: usize) -> Result<f64> {
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::Dimension(d));
    }
    let j = facets.len();
    if j == 0 || j > d {
        return Err(Error::InvalidQuery(format!("need 1..={d} facets, got {j}")));
    }
    if facets.iter().any(|f| f.dim() != d) {
        return Err(Error::Dimension(d));
    }
    if d > 2 && facets.iter().any(|f| f.orientation.axis().is_none()) {
        return Err(Error::UnsupportedOrientation("non-axis facets are only supported in the plane".into()));
    }
    for (i, a) in facets.iter().enumerate() {
        if facets[i + 1..].iter().any(|b| a == b) {
            return Err(Error::DuplicateFacet);
        }
    }
    Ok(measure_unchecked(facets))
}

/// Intersection measure without argument validation; the caller guarantees
/// a supported, duplicate-free tuple of 1..=d facets of equal dimension.
pub(crate) fn measure_unchecked(facets: &[Facet]) -> f64 {
    if facets.len() == 1 {
        return facets[0].measure();
    }
    if facets.iter().all(|f| f.orientation.axis().is_some()) {
        axis_intersection(facets)
    } else {
        planar_crossing(&facets[0], &facets[1])
    }
}

fn axis_intersection(facets: &[Facet]) -> f64 {
    let d = facets[0].dim();
    let j = facets.len();
    let mut fixer = [usize::MAX; MAX_DIM];
    for (idx, f) in facets.iter().enumerate() {
        let axis = f.orientation.axis().unwrap_or(0);
        if fixer[axis] != usize::MAX {
            return 0.0;
        }
        fixer[axis] = idx;
    }
    let mut values = [0.0; MAX_DIM];
    let mut halves = [0.0; MAX_DIM];
    for (h, f) in halves.iter_mut().zip(facets) {
        *h = f.half_extent;
    }
    let mut prod = 1.0;
    for c in 0..d {
        for (v, f) in values.iter_mut().zip(facets) {
            *v = f.center[c];
        }
        let fix = (fixer[c] != usize::MAX).then_some(fixer[c]);
        prod *= coordinate_factor(&values[..j], &halves[..j], fix);
        if prod == 0.0 {
            return 0.0;
        }
    }
    prod
}

/// Contribution of one coordinate to the intersection measure of
/// axis-aligned facets whose centers have coordinate values `values`.
///
/// If facet `fixer` has its normal along this coordinate, the factor is the
/// indicator that its level lies within every other facet's extent;
/// otherwise it is the length of the common overlap of the extents.
pub(crate) fn coordinate_factor(values: &[f64], halves: &[f64], fixer: Option<usize>) -> f64 {
    match fixer {
        Some(f) => {
            let v = values[f];
            let inside = values.iter().zip(halves).enumerate().all(|(g, (z, r))| g == f || (z - v).abs() <= *r);
            if inside {
                1.0
            } else {
                0.0
            }
        }
        None => {
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for (z, r) in values.iter().zip(halves) {
                lo = lo.max(z - r);
                hi = hi.min(z + r);
            }
            (hi - lo).max(0.0)
        }
    }
}

/// Crossing indicator of two segments in the plane.
fn planar_crossing(a: &Facet, b: &Facet) -> f64 {
    let (anx, any) = a.orientation.planar_normal();
    let (bnx, bny) = b.orientation.planar_normal();
    // Segment directions are the normals rotated by a quarter turn.
    let (tax, tay) = (-any, anx);
    let (tbx, tby) = (-bny, bnx);
    let cross = tax * tby - tay * tbx;
    if cross == 0.0 {
        return 0.0;
    }
    let (dx, dy) = (b.center[0] - a.center[0], b.center[1] - a.center[1]);
    let s = (dx * tby - dy * tbx) / cross;
    let u = (dx * tay - dy * tax) / cross;
    if s.abs() <= a.half_extent && u.abs() <= b.half_extent {
        1.0
    } else {
        0.0
    }
}
