use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::metric::point::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPoint<T> {
    pub point: Point<T>,
    pub weight: u64,
}

/// Distinct points with positive integer weights.
///
/// Entries keep insertion order; tie-breaking always goes through point ids,
/// never through storage position.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPointSet<T> {
    entries: Vec<WeightedPoint<T>>,
    total_weight: u64,
}

impl<T> Default for WeightedPointSet<T> {
    fn default() -> Self {
        WeightedPointSet { entries: Vec::new(), total_weight: 0 }
    }
}

impl<T: Clone> WeightedPointSet<T> {
    /// Unit weights.
    pub fn from_points(points: &[Point<T>]) -> Result<Self> {
        Self::from_entries(points.iter().map(|p| (p.clone(), 1)))
    }

    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point<T>, u64)>,
    {
        let mut set = WeightedPointSet::default();
        let mut seen = HashSet::new();
        for (point, weight) in entries {
            if weight == 0 {
                return Err(Error::Input(format!("point {} has zero weight", point.id)));
            }
            if !seen.insert(point.id) {
                return Err(Error::Input(format!("duplicate point id {}", point.id)));
            }
            set.total_weight += weight;
            set.entries.push(WeightedPoint { point, weight });
        }
        Ok(set)
    }
}

impl<T> WeightedPointSet<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn entries(&self) -> &[WeightedPoint<T>] {
        &self.entries
    }

    pub fn point(&self, i: usize) -> &Point<T> {
        &self.entries[i].point
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.entries[i].weight
    }

    pub fn points(&self) -> impl Iterator<Item = &Point<T>> {
        self.entries.iter().map(|e| &e.point)
    }

    /// Appends a point the caller knows is new.
    pub(crate) fn push(&mut self, point: Point<T>, weight: u64) {
        debug_assert!(weight > 0);
        self.total_weight += weight;
        self.entries.push(WeightedPoint { point, weight });
    }

    pub(crate) fn add_weight(&mut self, i: usize, weight: u64) {
        self.entries[i].weight += weight;
        self.total_weight += weight;
    }

    /// Indices sorted by point id.
    pub fn order_by_id(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| self.entries[i].point.id);
        idx
    }

    pub fn into_entries(self) -> Vec<WeightedPoint<T>> {
        self.entries
    }
}
