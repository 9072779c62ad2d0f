use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::grid::{FacetId, Grid};

/// A set of interior facets, kept sorted for deterministic iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetSet(BTreeSet<FacetId>);

impl FacetSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, f: FacetId) -> bool {
        self.0.insert(f)
    }

    pub fn remove(&mut self, f: &FacetId) -> bool {
        self.0.remove(f)
    }

    pub fn contains(&self, f: &FacetId) -> bool {
        self.0.contains(f)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FacetId> {
        self.0.iter()
    }

    pub fn union(&self, other: &FacetSet) -> FacetSet {
        FacetSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &FacetSet) -> FacetSet {
        FacetSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &FacetSet) -> FacetSet {
        FacetSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &FacetSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &FacetSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// Whether every member is an interior facet of `grid`.
    pub fn fits(&self, grid: &Grid) -> bool {
        self.0.iter().all(|&f| grid.is_interior_facet(f))
    }
}

impl FromIterator<FacetId> for FacetSet {
    fn from_iter<I: IntoIterator<Item = FacetId>>(iter: I) -> Self {
        FacetSet(iter.into_iter().collect())
    }
}

impl Extend<FacetId> for FacetSet {
    fn extend<I: IntoIterator<Item = FacetId>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl<'a> IntoIterator for &'a FacetSet {
    type Item = &'a FacetId;
    type IntoIter = std::collections::btree_set::Iter<'a, FacetId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// (d−1)-dimensional measure: facet count times h^{d−1}.
pub fn surface_measure(s: &FacetSet, grid: &Grid) -> f64 {
    s.len() as f64 * grid.facet_area()
}
