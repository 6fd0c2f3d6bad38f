//! Dissimilarity measures: a base metric composed with a loss `rho`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::point::{Payload, PayloadKind, Point};
use crate::metric::tree::TreeMetric;
use crate::scalar::Scalar;

/// Loss applied to base distances. The robust estimators use the unit-scale
/// representatives; rescaling `c1·rho(c2·x)` leaves the weak-triangle
/// constant unchanged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rho<T> {
    Linear,
    Gaussian,
    Huber,
    Cauchy,
    Tukey,
    /// `x^p` with `p` in `[1, 8]`.
    LpPower(T),
}

pub const LP_POWER_RANGE: (f64, f64) = (1.0, 8.0);

impl<T: Scalar> Rho<T> {
    pub fn lp_power(p: T) -> Result<Self> {
        let (lo, hi) = LP_POWER_RANGE;
        if !(p >= T::of(lo) && p <= T::of(hi)) {
            return Err(Error::Parameter(format!("lp power {p} outside [{lo}, {hi}]")));
        }
        Ok(Rho::LpPower(p))
    }

    /// The five estimators with tabulated constants (everything but `LpPower`).
    pub fn estimators() -> [Rho<T>; 5] {
        [Rho::Linear, Rho::Gaussian, Rho::Huber, Rho::Cauchy, Rho::Tukey]
    }

    pub fn apply(&self, x: T) -> T {
        let one = T::one();
        match *self {
            Rho::Linear => x,
            Rho::Gaussian => x * x,
            Rho::Huber => {
                if x < one {
                    x * x
                } else {
                    x + x - one
                }
            }
            Rho::Cauchy => (x * x).ln_1p(),
            Rho::Tukey => {
                if x < one {
                    let s = one - x * x;
                    one - s * s * s
                } else {
                    one
                }
            }
            Rho::LpPower(p) => x.powf(p),
        }
    }

    /// Weak-triangle constant: `rho(c) <= beta·(rho(a) + rho(b))` whenever
    /// `c <= a + b`.
    pub fn beta(&self) -> T {
        match *self {
            Rho::Linear => T::one(),
            Rho::Gaussian | Rho::Huber | Rho::Cauchy | Rho::Tukey => T::of(2.0),
            Rho::LpPower(p) => T::of(2.0).powf(p - T::one()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Rho::Linear => "linear".into(),
            Rho::Gaussian => "gaussian".into(),
            Rho::Huber => "huber".into(),
            Rho::Cauchy => "cauchy".into(),
            Rho::Tukey => "tukey".into(),
            Rho::LpPower(p) => format!("lp:{p}"),
        }
    }
}

impl<T: Scalar> fmt::Display for Rho<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl<T: Scalar> FromStr for Rho<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(Rho::Linear),
            "gaussian" => Ok(Rho::Gaussian),
            "huber" => Ok(Rho::Huber),
            "cauchy" => Ok(Rho::Cauchy),
            "tukey" => Ok(Rho::Tukey),
            other => match other.strip_prefix("lp:") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad lp power in {other:?}")))?;
                    Rho::lp_power(T::of(p))
                }
                None => Err(Error::Parameter(format!("unknown measure {other:?}"))),
            },
        }
    }
}

/// Square symmetric matrix of pairwise distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Checks squareness, zero diagonal, nonnegativity and symmetry (up to
    /// `tol`); the stored matrix is symmetrised from the upper triangle.
    pub fn new(rows: Vec<Vec<T>>, tol: T) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Input("empty distance matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            if data[i * n + i].abs() > tol {
                return Err(Error::Input(format!("nonzero diagonal entry ({i},{i})")));
            }
            data[i * n + i] = T::zero();
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !(a >= T::zero()) || !(b >= T::zero()) {
                    return Err(Error::Input(format!("negative or NaN entry at ({i},{j})")));
                }
                if (a - b).abs() > tol {
                    return Err(Error::Input(format!(
                        "asymmetric entry ({i},{j}): {a} vs ({j},{i}): {b}"
                    )));
                }
                data[j * n + i] = a;
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseMetric<T> {
    Euclidean,
    Matrix(Arc<DistanceMatrix<T>>),
    Tree(Arc<TreeMetric<T>>),
}

impl<T> BaseMetric<T> {
    pub fn payload_kind(&self) -> PayloadKind {
        match self {
            BaseMetric::Euclidean => PayloadKind::Coords,
            BaseMetric::Matrix(_) => PayloadKind::Node,
            BaseMetric::Tree(_) => PayloadKind::Tree,
        }
    }
}

/// `D(a, b) = rho(d(a, b))` for a base metric `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<T> {
    pub base: BaseMetric<T>,
    pub rho: Rho<T>,
}

impl<T: Scalar> Measure<T> {
    pub fn new(base: BaseMetric<T>, rho: Rho<T>) -> Self {
        Measure { base, rho }
    }

    pub fn euclidean(rho: Rho<T>) -> Self {
        Measure::new(BaseMetric::Euclidean, rho)
    }

    /// Plain Euclidean k-median distance.
    pub fn linear() -> Self {
        Measure::euclidean(Rho::Linear)
    }

    pub fn beta(&self) -> T {
        self.rho.beta()
    }

    /// Checks that `p` can be measured by this base metric.
    pub fn check(&self, p: &Point<T>) -> Result<()> {
        let ok = match (&self.base, &p.payload) {
            (BaseMetric::Euclidean, Payload::Coords(_)) => true,
            (BaseMetric::Matrix(m), Payload::Node(i)) => *i < m.len(),
            (BaseMetric::Tree(t), Payload::Tree(n)) => t.contains(n),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "point {} ({}) does not belong to a {} metric",
                p.id,
                p.kind(),
                self.base.payload_kind()
            )))
        }
    }

    /// Validates a whole dataset: every payload fits the base metric and
    /// coordinate dimensions are uniform.
    pub fn check_all<'a, I>(&self, points: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Point<T>>,
    {
        let mut dim = None;
        for p in points {
            self.check(p)?;
            if let Some(c) = p.as_coords() {
                match dim {
                    None => dim = Some(c.len()),
                    Some(d) if d != c.len() => {
                        return Err(Error::Input(format!(
                            "point {} has dimension {}, expected {d}",
                            p.id,
                            c.len()
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Base distance `d(a, b)`.
    pub fn base_distance(&self, a: &Point<T>, b: &Point<T>) -> Result<T> {
        match (&self.base, &a.payload, &b.payload) {
            (BaseMetric::Euclidean, Payload::Coords(x), Payload::Coords(y)) => {
                if x.len() != y.len() {
                    return Err(Error::Input(format!(
                        "dimension mismatch between points {} and {}",
                        a.id, b.id
                    )));
                }
                Ok(euclidean(x, y))
            }
            (BaseMetric::Matrix(m), Payload::Node(i), Payload::Node(j)) => {
                if *i >= m.len() || *j >= m.len() {
                    return Err(Error::Input("matrix node out of range".into()));
                }
                Ok(m.get(*i, *j))
            }
            (BaseMetric::Tree(t), Payload::Tree(x), Payload::Tree(y)) => Ok(t.distance(*x, *y)),
            _ => Err(Error::Input(format!(
                "payload kinds {} / {} do not match a {} metric",
                a.kind(),
                b.kind(),
                self.base.payload_kind()
            ))),
        }
    }

    /// Checked dissimilarity `rho(d(a, b))`.
    pub fn dissimilarity(&self, a: &Point<T>, b: &Point<T>) -> Result<T> {
        self.base_distance(a, b).map(|d| self.rho.apply(d))
    }

    /// Unchecked dissimilarity for validated datasets.
    ///
    /// Panics on a payload mismatch; algorithms call [`Measure::check_all`]
    /// on their inputs first.
    #[inline]
    pub fn d(&self, a: &Point<T>, b: &Point<T>) -> T {
        match (&self.base, &a.payload, &b.payload) {
            (BaseMetric::Euclidean, Payload::Coords(x), Payload::Coords(y)) => {
                self.rho.apply(euclidean(x, y))
            }
            _ => self.dissimilarity(a, b).expect("dataset validated against measure"),
        }
    }
}

#[inline]
fn euclidean<T: Scalar>(x: &[T], y: &[T]) -> T {
    if x.len() == 1 {
        return (x[0] - y[0]).abs();
    }
    x.iter()
        .zip(y)
        .map(|(&a, &b)| (a - b) * (a - b))
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
}
