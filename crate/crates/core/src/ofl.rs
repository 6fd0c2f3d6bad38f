//! Randomized online facility location: each arriving point opens a
//! facility with probability `min(1, delta/f)`, where `delta` is its
//! dissimilarity to the nearest open facility, and otherwise connects to
//! that facility.

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{Measure, Point};
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OflDecision<T> {
    pub id: usize,
    /// Distance to the nearest facility; `None` when no facility existed.
    pub delta: Option<T>,
    pub opened: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OflState<T> {
    facility_cost: T,
    facilities: Vec<Point<T>>,
    total_facility_cost: T,
    total_connection_cost: T,
    decisions: Vec<OflDecision<T>>,
}

impl<T: Scalar> OflState<T> {
    pub fn new(facility_cost: T) -> Result<Self> {
        if !(facility_cost > T::zero()) || !facility_cost.is_finite() {
            return Err(Error::Parameter(format!("facility cost must be positive, got {facility_cost}")));
        }
        Ok(OflState {
            facility_cost,
            facilities: Vec::new(),
            total_facility_cost: T::zero(),
            total_connection_cost: T::zero(),
            decisions: Vec::new(),
        })
    }

    pub fn facility_cost(&self) -> T {
        self.facility_cost
    }

    pub fn facilities(&self) -> &[Point<T>] {
        &self.facilities
    }

    pub fn total_facility_cost(&self) -> T {
        self.total_facility_cost
    }

    pub fn total_connection_cost(&self) -> T {
        self.total_connection_cost
    }

    pub fn total_cost(&self) -> T {
        self.total_facility_cost + self.total_connection_cost
    }

    pub fn decisions(&self) -> &[OflDecision<T>] {
        &self.decisions
    }

    /// Processes one arrival with an externally supplied uniform `u` in `[0, 1)`.
    pub fn step(&mut self, p: &Point<T>, u: T, m: &Measure<T>) -> &OflDecision<T> {
        let delta = self.facilities.iter().map(|c| m.d(p, c)).reduce(T::min);
        let opened = match delta {
            None => true,
            Some(d) => u < (d / self.facility_cost).min(T::one()),
        };
        if opened {
            self.facilities.push(p.clone());
            self.total_facility_cost = self.total_facility_cost + self.facility_cost;
        } else {
            self.total_connection_cost = self.total_connection_cost + delta.unwrap_or_default();
        }
        self.decisions.push(OflDecision { id: p.id, delta, opened });
        self.decisions.last().expect("just pushed")
    }
}

/// Folds [`OflState::step`] over `stream` with one uniform draw per point
/// from the seeded generator.
pub fn ofl_run<T: Scalar>(stream: &[Point<T>], f: T, m: &Measure<T>, seed: u64) -> Result<OflState<T>> {
    if stream.is_empty() {
        return Err(Error::Input("empty stream".into()));
    }
    m.check_all(stream)?;
    let mut state = OflState::new(f)?;
    let mut rng = seeded(seed);
    for p in stream {
        let u = T::of(rng.random::<f64>());
        state.step(p, u, m);
    }
    Ok(state)
}
