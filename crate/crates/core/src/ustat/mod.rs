//! Interaction U-statistics `G_1..G_d`, generic U-statistics, one-point
//! increments and the first difference operator used for Poisson
//! covariances.

mod pattern;
mod t1;

pub use pattern::FacetPattern;
pub use t1::{t1_g, T1Estimator};

use crate::error::{Error, Result};
use crate::geometry::{measure_unchecked, Facet};
use itertools::Itertools;
use serde::Serialize;
use std::ops::{Add, Index, Sub};

/// The vector `(G_1, ..., G_d)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GVector(pub Vec<f64>);

impl GVector {
    pub fn zeros(d: usize) -> Self {
        GVector(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, nu: &[f64]) -> f64 {
        self.0.iter().zip(nu).map(|(g, n)| g * n).sum()
    }

    pub fn add_assign(&mut self, other: &GVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &GVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= b;
        }
    }
}

impl Index<usize> for GVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &GVector {
    type Output = GVector;
    fn add(self, rhs: &GVector) -> GVector {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &GVector {
    type Output = GVector;
    fn sub(self, rhs: &GVector) -> GVector {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

/// Walks the subsets of a pattern whose members have pairwise distinct axis
/// classes (planar facets may be combined freely), in a fixed order.
struct SubsetWalker<'a> {
    classes: &'a [Vec<Facet>],
    dim: usize,
    excluded_class: Option<usize>,
    skip: Option<(usize, usize)>,
}

impl SubsetWalker<'_> {
    fn walk(&self, from_class: usize, need: usize, buf: &mut Vec<Facet>, visit: &mut impl FnMut(&[Facet])) {
        if need == 0 {
            visit(buf);
            return;
        }
        for c in from_class..self.dim {
            if Some(c) == self.excluded_class {
                continue;
            }
            for (p, f) in self.classes[c].iter().enumerate() {
                if self.skip == Some((c, p)) {
                    continue;
                }
                buf.push(*f);
                self.walk(c + 1, need - 1, buf, visit);
                buf.pop();
            }
        }
        self.walk_planar(0, need, buf, visit);
    }

    fn walk_planar(&self, from: usize, need: usize, buf: &mut Vec<Facet>, visit: &mut impl FnMut(&[Facet])) {
        if need == 0 {
            visit(buf);
            return;
        }
        let planar = &self.classes[self.dim];
        for p in from..planar.len() {
            if self.skip == Some((self.dim, p)) {
                continue;
            }
            buf.push(planar[p]);
            self.walk_planar(p + 1, need - 1, buf, visit);
            buf.pop();
        }
    }
}

/// `(G_1, ..., G_d)`: for each order `j`, the sum of intersection measures
/// over unordered `j`-subsets.  Subsets repeating an axis class are skipped
/// (they are parallel and contribute 0).
pub fn g_vector(x: &FacetPattern) -> GVector {
    let d = x.dim();
    let walker = SubsetWalker { classes: x.classes(), dim: d, excluded_class: None, skip: None };
    let mut g = GVector::zeros(d);
    let mut buf = Vec::with_capacity(d);
    for j in 1..=d {
        let mut total = 0.0;
        walker.walk(0, j, &mut buf, &mut |s| total += measure_unchecked(s));
        g.0[j - 1] = total;
    }
    g
}

/// `g_vector(x ∪ {u}) - g_vector(x)`, enumerating only subsets containing `u`.
pub fn g_increment(x: &FacetPattern, u: &Facet) -> Result<GVector> {
    if u.dim() != x.dim() {
        return Err(Error::Dimension(u.dim()));
    }
    if x.contains(u) {
        return Err(Error::DuplicateFacet);
    }
    Ok(increment_with_skip(x, u, None))
}

/// Increment contributed by the facet at global index `idx` relative to the
/// rest of the pattern, i.e. `g_vector(x) - g_vector(x \ {x_idx})`.
pub fn g_increment_of_member(x: &FacetPattern, idx: usize) -> GVector {
    let slot = x.locate(idx);
    let u = x.classes()[slot.0][slot.1];
    increment_with_skip(x, &u, Some(slot))
}

fn increment_with_skip(x: &FacetPattern, u: &Facet, skip: Option<(usize, usize)>) -> GVector {
    let d = x.dim();
    let walker = SubsetWalker { classes: x.classes(), dim: d, excluded_class: u.orientation().axis(), skip };
    let mut g = GVector::zeros(d);
    g.0[0] = u.measure();
    let mut buf = Vec::with_capacity(d);
    for j in 2..=d {
        buf.clear();
        buf.push(*u);
        let mut total = 0.0;
        walker.walk(0, j - 1, &mut buf, &mut |s| total += measure_unchecked(s));
        g.0[j - 1] = total;
    }
    g
}

/// Sum of a symmetric kernel over ordered `k`-tuples of distinct facets,
/// computed as `k!` times the sum over unordered subsets.
pub fn u_statistic(x: &FacetPattern, kernel: impl Fn(&[Facet]) -> f64, k: usize) -> f64 {
    if k == 0 || k > x.len() {
        return 0.0;
    }
    let facets: Vec<Facet> = x.iter().copied().collect();
    let k_factorial: f64 = (1..=k).map(|i| i as f64).product();
    let mut buf = Vec::with_capacity(k);
    let total: f64 = facets
        .iter()
        .combinations(k)
        .map(|subset| {
            buf.clear();
            buf.extend(subset.into_iter().copied());
            kernel(&buf)
        })
        .sum();
    k_factorial * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{intersection_measure, Orientation};
    use proptest::prelude::*;

    fn ax(c: &[f64], r: f64, i: usize) -> Facet {
        Facet::axis(c, r, i).unwrap()
    }

    /// Oracle: brute force over all subsets, no orientation pruning.
    fn brute_g(x: &FacetPattern) -> Vec<f64> {
        let d = x.dim();
        let facets: Vec<Facet> = x.iter().copied().collect();
        (1..=d)
            .map(|j| facets.iter().copied().combinations(j).map(|s| intersection_measure(&s, d).unwrap()).sum())
            .collect()
    }

    #[test]
    fn small_examples() {
        let empty = FacetPattern::new(3).unwrap();
        assert_eq!(g_vector(&empty).0, vec![0.0; 3]);
        let one = FacetPattern::from_facets(2, [ax(&[0.5, 0.5], 1.0, 0)]).unwrap();
        assert_eq!(g_vector(&one).0, vec![2.0, 0.0]);
        let two = FacetPattern::from_facets(2, [ax(&[0.2, 0.7], 1.0, 0), ax(&[0.9, 0.3], 1.0, 1)]).unwrap();
        assert_eq!(g_vector(&two).0, vec![4.0, 1.0]);
    }

    #[test]
    fn increments_into_empty_and_crossing() {
        let empty = FacetPattern::new(2).unwrap();
        let u = ax(&[0.1, 0.1], 1.0, 1);
        assert_eq!(g_increment(&empty, &u).unwrap().0, vec![2.0, 0.0]);
        let x = FacetPattern::from_facets(2, [ax(&[0.2, 0.7], 1.0, 0)]).unwrap();
        assert_eq!(g_increment(&x, &u).unwrap()[1], 1.0);
        let dup = *x.get(0);
        assert!(matches!(g_increment(&x, &dup), Err(Error::DuplicateFacet)));
    }

    #[test]
    fn u_statistic_examples() {
        let x =
            FacetPattern::from_facets(2, [ax(&[0.2, 0.7], 1.0, 0), ax(&[0.9, 0.3], 1.0, 1), ax(&[0.4, 0.4], 1.0, 1)])
                .unwrap();
        assert_eq!(u_statistic(&x, |_| 1.0, 1), 3.0);
        assert_eq!(u_statistic(&x, |_| 1.0, 2), 6.0);
        assert_eq!(u_statistic(&x, |_| 1.0, 4), 0.0);
        let g2 = u_statistic(&x, |s| intersection_measure(s, 2).unwrap() / 2.0, 2);
        assert_eq!(g2, g_vector(&x)[1]);
    }

    fn arb_axis_pattern(d: usize, max_n: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64, usize)>> {
        prop::collection::vec((prop::collection::vec(0.0..1.0f64, d), 0.2..1.0f64, 0..d), 0..max_n)
    }

    fn build(d: usize, raw: &[(Vec<f64>, f64, usize)]) -> FacetPattern {
        let mut x = FacetPattern::new(d).unwrap();
        for (c, r, i) in raw {
            let _ = x.insert(ax(c, *r, *i));
        }
        x
    }

    proptest! {
        #[test]
        fn grouped_enumeration_matches_brute_force(raw in arb_axis_pattern(3, 9)) {
            let x = build(3, &raw);
            let g = g_vector(&x);
            for (a, b) in g.0.iter().zip(brute_g(&x)) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn increment_is_a_difference(raw in arb_axis_pattern(3, 8), c in prop::collection::vec(0.0..1.0f64, 3), i in 0..3usize) {
            let x = build(3, &raw);
            let u = ax(&c, 0.7, i);
            let inc = g_increment(&x, &u).unwrap();
            let mut y = x.clone();
            y.insert(u).unwrap();
            let (gx, gy) = (g_vector(&x), g_vector(&y));
            for j in 0..3 {
                prop_assert!((gx[j] + inc[j] - gy[j]).abs() <= 1e-12 * (1.0 + gy[j].abs()));
                // Kernels are nonnegative, so adding a facet never decreases G_j.
                prop_assert!(gy[j] >= gx[j]);
            }
            let idx = y.iter().position(|f| *f == u).unwrap();
            prop_assert_eq!(g_increment_of_member(&y, idx), inc);
        }

        #[test]
        fn full_order_statistic_is_product_of_counts(raw in arb_axis_pattern(3, 10)) {
            // Special model: half extent b = 1 on [0,1]^3.
            let raw: Vec<_> = raw.into_iter().map(|(c, _, i)| (c, 1.0, i)).collect();
            let x = build(3, &raw);
            let prod: usize = x.axis_counts().iter().product();
            prop_assert_eq!(g_vector(&x)[2], prod as f64);
            prop_assert_eq!(brute_g(&x)[2], prod as f64);
        }

        #[test]
        fn permutation_invariance(raw in arb_axis_pattern(3, 8), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let x = build(3, &raw);
            let mut facets: Vec<Facet> = x.iter().copied().collect();
            facets.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let y = FacetPattern::from_facets(3, facets.iter().copied()).unwrap();
            let (gx, gy) = (g_vector(&x), g_vector(&y));
            for j in 0..3 {
                prop_assert!((gx[j] - gy[j]).abs() <= 1e-12 * (1.0 + gx[j].abs()));
            }
            // The intersection measure itself is symmetric in its arguments.
            if facets.len() >= 3 {
                let t = [facets[0], facets[1], facets[2]];
                let h = intersection_measure(&t, 3).unwrap();
                prop_assert_eq!(h, intersection_measure(&[t[2], t[0], t[1]], 3).unwrap());
                prop_assert_eq!(h, intersection_measure(&[t[1], t[2], t[0]], 3).unwrap());
            }
        }

        #[test]
        fn planar_patterns_match_brute_force(raw in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.1..0.8f64, -1.5..1.5f64), 0..10)) {
            let mut x = FacetPattern::new(2).unwrap();
            for (cx, cy, r, th) in raw {
                let _ = x.insert(Facet::new(&[cx, cy], r, Orientation::planar(th)).unwrap());
            }
            let g = g_vector(&x);
            prop_assert_eq!(g.0, brute_g(&x));
        }

        #[test]
        fn special_bounds_on_overlap(c in prop::collection::vec(0.0..1.0f64, 6), b in 0.5..2.0f64) {
            // Two facets with distinct axes in [0,b]^3, half extent b: H^1 in [b, 2b].
            let f = [ax(&[c[0] * b, c[1] * b, c[2] * b], b, 0), ax(&[c[3] * b, c[4] * b, c[5] * b], b, 1)];
            let h = intersection_measure(&f, 3).unwrap();
            prop_assert!(h >= b - 1e-12 && h <= 2.0 * b + 1e-12);
        }

        #[test]
        fn overlap_monotone_in_half_extent(c in prop::collection::vec(0.0..1.0f64, 6), r in 0.1..1.0f64, dr in 0.0..1.0f64) {
            let small = [ax(&c[..3], r, 0), ax(&c[3..], 0.6, 1)];
            let large = [ax(&c[..3], r + dr, 0), ax(&c[3..], 0.6, 1)];
            prop_assert!(intersection_measure(&large, 3).unwrap() >= intersection_measure(&small, 3).unwrap());
        }
    }
}
