use crate::error::{Error, Result};
use crate::geometry::{Facet, MAX_DIM};

/// A finite simple configuration of facets, grouped by orientation class.
///
/// Class `i < d` holds the facets with normal `e_{i+1}`; class `d` holds
/// facets with a non-axis (planar) orientation.  Facets are addressed either
/// by a global index in `0..len()` (class-major order) or by their
/// `(class, position)` slot.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetPattern {
    dim: usize,
    classes: Vec<Vec<Facet>>,
    len: usize,
}

impl FacetPattern {
    pub fn new(dim: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        Ok(FacetPattern { dim, classes: vec![Vec::new(); dim + 1], len: 0 })
    }

    pub fn from_facets(dim: usize, facets: impl IntoIterator<Item = Facet>) -> Result<Self> {
        let mut x = FacetPattern::new(dim)?;
        for f in facets {
            x.insert(f)?;
        }
        Ok(x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub(crate) fn class_of(&self, f: &Facet) -> usize {
        f.orientation().axis().unwrap_or(self.dim)
    }

    pub(crate) fn classes(&self) -> &[Vec<Facet>] {
        &self.classes
    }

    pub fn contains(&self, f: &Facet) -> bool {
        self.classes[self.class_of(f)].iter().any(|g| g == f)
    }

    /// Adds a facet, rejecting duplicates and dimension mismatches.
    pub fn insert(&mut self, f: Facet) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::Dimension(f.dim()));
        }
        if self.contains(&f) {
            return Err(Error::DuplicateFacet);
        }
        self.insert_unchecked(f);
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, f: Facet) {
        let c = self.class_of(&f);
        self.classes[c].push(f);
        self.len += 1;
    }

    /// `(class, position)` slot of global index `idx`.
    pub fn locate(&self, mut idx: usize) -> (usize, usize) {
        assert!(idx < self.len, "facet index {idx} out of range");
        for (c, class) in self.classes.iter().enumerate() {
            if idx < class.len() {
                return (c, idx);
            }
            idx -= class.len();
        }
        unreachable!()
    }

    pub fn get(&self, idx: usize) -> &Facet {
        let (c, p) = self.locate(idx);
        &self.classes[c][p]
    }

    /// Removes and returns the facet at global index `idx`.
    pub fn remove(&mut self, idx: usize) -> Facet {
        let (c, p) = self.locate(idx);
        self.len -= 1;
        self.classes[c].swap_remove(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Facet> {
        self.classes.iter().flatten()
    }

    /// Number of facets in each axis class.
    pub fn axis_counts(&self) -> Vec<usize> {
        self.classes[..self.dim].iter().map(Vec::len).collect()
    }

    /// Number of distinct axis orientations present.
    pub fn axes_present(&self) -> usize {
        self.classes[..self.dim].iter().filter(|c| !c.is_empty()).count()
    }
}
