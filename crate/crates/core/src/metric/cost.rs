use crate::error::{Error, Result};
use crate::metric::measure::Measure;
use crate::metric::point::Point;
use crate::metric::weighted::WeightedPointSet;
use crate::scalar::Scalar;

/// Nearest-center connection cost, optionally with the assignment that
/// realises it (`assignment[i]` indexes `centers`).
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport<T> {
    pub value: T,
    pub assignment: Option<Vec<usize>>,
}

/// Index and dissimilarity of the nearest center; ties go to the smaller id.
pub fn nearest<T: Scalar>(p: &Point<T>, centers: &[Point<T>], m: &Measure<T>) -> (usize, T) {
    let mut best = (usize::MAX, T::infinity());
    for (j, c) in centers.iter().enumerate() {
        let d = m.d(p, c);
        if d < best.1 || (d == best.1 && (best.0 == usize::MAX || c.id < centers[best.0].id)) {
            best = (j, d);
        }
    }
    best
}

/// `COST(A, B) = sum over a of min over b of D(a, b)`.
pub fn cost<T: Scalar>(demands: &[Point<T>], centers: &[Point<T>], m: &Measure<T>) -> Result<CostReport<T>> {
    if centers.is_empty() {
        return Err(Error::Input("empty center set".into()));
    }
    m.check_all(demands.iter().chain(centers))?;
    let mut value = T::zero();
    let mut assignment = Vec::with_capacity(demands.len());
    for p in demands {
        let (j, d) = nearest(p, centers, m);
        value = value + d;
        assignment.push(j);
    }
    Ok(CostReport { value, assignment: Some(assignment) })
}

/// Unconstrained nearest-center cost of a weighted set.
pub fn weighted_cost<T: Scalar>(set: &WeightedPointSet<T>, centers: &[Point<T>], m: &Measure<T>) -> Result<T> {
    if centers.is_empty() {
        return Err(Error::Input("empty center set".into()));
    }
    m.check_all(set.points().chain(centers))?;
    Ok(set
        .entries()
        .iter()
        .map(|e| T::of_u64(e.weight) * nearest(&e.point, centers, m).1)
        .fold(T::zero(), |s, v| s + v))
}
