//! Streaming k-median with a doubling cost threshold.
//!
//! The maintained weighted set `psi` starts as the first `29m` distinct
//! points. Each epoch compresses `psi` with [`compress_b`], raises the
//! threshold to `L = max(10L, lambda/3)` and then runs online facility
//! location with facility cost `L/m`: an arrival `p` with nearest
//! representative `y` is added to `psi` iff `u·L < m·D(p, y)` and is otherwise
//! merged into `y`. The epoch ends once `psi` holds `29m` points or the merge
//! cost reaches `14L`.
//!
//! Compression is deferred until the next point actually arrives, so a
//! stream that ends exactly at an epoch boundary keeps its uncompressed set.
//!
//! Nearest neighbours for compression are maintained incrementally: each
//! arrival indexes up to three pending members of `psi`, and an epoch always
//! lasts at least `14m` arrivals, so the index covers `psi` by the time it is
//! compressed.

use std::collections::VecDeque;

use rand::distr::Open01;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::compress::{beats, compress_b, nearest_neighbor_map, NearestNeighborMap};
use crate::error::{Error, Result};
use crate::metric::{cost, local_search_kmedian, Measure, Point, WeightedPointSet};
use crate::order::random_shuffle;
use crate::rng::{derive_seed, seeded, Rng};
use crate::scalar::Scalar;

/// Support cap factor: `psi` never holds more than `29m` points.
pub const SUPPORT_FACTOR: usize = 29;
/// An epoch ends once its merge cost reaches this multiple of `L`.
pub const EPOCH_COST_FACTOR: f64 = 14.0;
/// Bound on the cost of moving every seen point onto `psi`, in units of `L`.
pub const LEDGER_FACTOR: f64 = 20.0;
/// Pending `psi` members indexed per arrival.
pub const INDEX_PER_ARRIVAL: usize = 3;

/// `k·(4 + ceil(log2 t))`, the smallest `m` covered by the approximation
/// guarantee on t-semirandom streams.
pub fn default_m(k: usize, t: usize) -> usize {
    let log_t = t.max(1).next_power_of_two().trailing_zeros() as usize;
    k * (4 + log_t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum PiMode {
    /// Amortised three-per-arrival maintenance.
    #[default]
    Incremental,
    /// Full pairwise rebuild at every compression (for differential tests).
    Batch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochRecord<T> {
    pub lambda: T,
    pub l: T,
    pub support_in: usize,
    pub support_out: usize,
    pub points_seen: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterRunReport<T> {
    pub psi_final: WeightedPointSet<T>,
    pub l_final: T,
    pub m_param: usize,
    pub max_support: usize,
    pub epochs: usize,
    pub history: Vec<EpochRecord<T>>,
    pub points_seen: u64,
    /// Total movement cost: compression certificates plus merge costs.
    pub constructive_cost: T,
    /// The stream ended before `psi` first filled up.
    pub degenerate: bool,
    pub max_evals_per_point: u64,
    pub total_evals: u64,
    /// Amplification instance this report came from.
    pub instance: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Filling,
    NeedCompress,
    Epoch,
}

/// Nearest-neighbour index over a growing prefix of `psi` positions.
#[derive(Clone, Debug, Default)]
struct IncrementalNn<T> {
    indexed: Vec<usize>,
    /// Per `psi` position: (position, dissimilarity, id) of its nearest
    /// indexed neighbour.
    nn: Vec<Option<(usize, T, usize)>>,
    pending: VecDeque<usize>,
}

impl<T: Scalar> IncrementalNn<T> {
    fn reset(&mut self, len: usize) {
        self.indexed.clear();
        self.nn.clear();
        self.nn.resize(len, None);
        self.pending = (0..len).collect();
    }

    fn enqueue(&mut self, pos: usize) {
        if self.nn.len() <= pos {
            self.nn.resize(pos + 1, None);
        }
        self.pending.push_back(pos);
    }

    fn covers(&self, len: usize) -> bool {
        self.pending.is_empty() && self.indexed.len() == len
    }

    /// Indexes one pending position; O(|indexed|) dissimilarities.
    fn index_one(&mut self, psi: &WeightedPointSet<T>, m: &Measure<T>, evals: &mut u64) -> bool {
        let Some(x) = self.pending.pop_front() else { return false };
        let px = psi.point(x);
        let mut best: Option<(T, usize)> = None;
        let mut best_pos = 0;
        for &s in &self.indexed {
            let ps = psi.point(s);
            let d = m.d(px, ps);
            *evals += 1;
            if beats(d, ps.id, best) {
                best = Some((d, ps.id));
                best_pos = s;
            }
            let cur = self.nn[s].map(|(_, cd, cid)| (cd, cid));
            if beats(d, px.id, cur) {
                self.nn[s] = Some((x, d, px.id));
            }
        }
        self.nn[x] = best.map(|(d, id)| (best_pos, d, id));
        self.indexed.push(x);
        true
    }

    fn to_map(&self, psi: &WeightedPointSet<T>) -> NearestNeighborMap<T> {
        let (pi, dist) = self.nn.iter().map(|e| e.map(|(p, d, _)| (p, d)).expect("covered")).unzip();
        NearestNeighborMap::from_parts(pi, dist, psi.points().map(|p| p.id).collect())
    }
}

/// Observable state after each arrival.
#[derive(Clone, Copy, Debug)]
pub struct Checkpoint<'a, T> {
    pub points_seen: u64,
    pub l: T,
    pub epoch_cost: T,
    pub constructive_cost: T,
    pub psi: &'a WeightedPointSet<T>,
}

impl<T: Scalar> Checkpoint<'_, T> {
    /// `constructive_cost < 20L`, or zero cost while `L = 0`.
    pub fn ledger_holds(&self) -> bool {
        if self.l == T::zero() {
            self.constructive_cost == T::zero()
        } else {
            self.constructive_cost < T::of(LEDGER_FACTOR) * self.l
        }
    }
}

/// Push-based streaming clusterer.
pub struct ClusterState<T> {
    measure: Measure<T>,
    m: usize,
    pi_mode: PiMode,
    rng: Rng,
    phase: Phase,
    psi: WeightedPointSet<T>,
    l: T,
    epoch_cost: T,
    constructive: T,
    index: IncrementalNn<T>,
    history: Vec<EpochRecord<T>>,
    points_seen: u64,
    max_support: usize,
    evals: u64,
    max_evals_per_point: u64,
}

impl<T: Scalar> ClusterState<T> {
    pub fn new(m: usize, measure: Measure<T>, seed: u64) -> Result<Self> {
        Self::with_mode(m, measure, seed, PiMode::Incremental)
    }

    pub fn with_mode(m: usize, measure: Measure<T>, seed: u64, pi_mode: PiMode) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("m must be at least 1".into()));
        }
        Ok(ClusterState {
            measure,
            m,
            pi_mode,
            rng: seeded(seed),
            phase: Phase::Filling,
            psi: WeightedPointSet::default(),
            l: T::zero(),
            epoch_cost: T::zero(),
            constructive: T::zero(),
            index: IncrementalNn::default(),
            history: Vec::new(),
            points_seen: 0,
            max_support: 0,
            evals: 0,
            max_evals_per_point: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        SUPPORT_FACTOR * self.m
    }

    pub fn psi(&self) -> &WeightedPointSet<T> {
        &self.psi
    }

    pub fn threshold(&self) -> T {
        self.l
    }

    pub fn checkpoint(&self) -> Checkpoint<'_, T> {
        Checkpoint {
            points_seen: self.points_seen,
            l: self.l,
            epoch_cost: self.epoch_cost,
            constructive_cost: self.constructive,
            psi: &self.psi,
        }
    }

    fn nearest_in_psi(&mut self, p: &Point<T>) -> (usize, T) {
        let mut best = (0, T::infinity(), usize::MAX);
        for (i, e) in self.psi.entries().iter().enumerate() {
            let d = self.measure.d(p, &e.point);
            if d < best.1 || (d == best.1 && e.point.id < best.2) {
                best = (i, d, e.point.id);
            }
        }
        self.evals += self.psi.len() as u64;
        (best.0, best.1)
    }

    fn add_to_psi(&mut self, p: &Point<T>) {
        let pos = self.psi.len();
        self.psi.push(p.clone(), 1);
        self.index.enqueue(pos);
    }

    fn compress(&mut self) -> Result<()> {
        let cap = self.capacity();
        let support_in = self.psi.len();
        if support_in > cap {
            return Err(Error::Invariant(format!("compression entered with {support_in} > {cap} points")));
        }
        let map = match self.pi_mode {
            PiMode::Incremental => {
                if !self.index.covers(support_in) {
                    return Err(Error::Invariant(format!(
                        "nearest-neighbour index covers {} of {support_in} points at compression",
                        self.index.indexed.len()
                    )));
                }
                self.index.to_map(&self.psi)
            }
            PiMode::Batch => {
                self.evals += (support_in * (support_in - 1)) as u64;
                nearest_neighbor_map(&self.psi, &self.measure)?
            }
        };
        let out = compress_b(&self.psi, self.m, &map, &self.measure)?;
        let limit = (support_in + self.m) / 2;
        if out.z.len() > limit || out.z.total_weight() != self.psi.total_weight() {
            return Err(Error::Invariant(format!(
                "compression produced {} points (limit {limit})",
                out.z.len()
            )));
        }
        self.psi = out.z;
        self.index.reset(self.psi.len());
        self.l = (self.l * T::of(10.0)).max(out.lambda / T::of(3.0));
        self.constructive = self.constructive + out.lambda;
        self.epoch_cost = T::zero();
        self.history.push(EpochRecord {
            lambda: out.lambda,
            l: self.l,
            support_in,
            support_out: self.psi.len(),
            points_seen: self.points_seen,
        });
        Ok(())
    }

    fn epoch_open(&self) -> bool {
        self.psi.len() < self.capacity() && self.epoch_cost < T::of(EPOCH_COST_FACTOR) * self.l
    }

    /// Processes one arrival.
    pub fn push(&mut self, p: &Point<T>) -> Result<()> {
        self.measure.check(p)?;
        let evals_before = self.evals;
        if self.phase == Phase::NeedCompress {
            self.compress()?;
            while !self.epoch_open() {
                let before = self.psi.len();
                self.compress()?;
                if self.psi.len() == before && !self.epoch_open() {
                    return Err(Error::Invariant("compression left a zero threshold".into()));
                }
            }
            self.phase = Phase::Epoch;
        }

        let (y, d) = if self.psi.is_empty() { (0, T::infinity()) } else { self.nearest_in_psi(p) };
        match self.phase {
            Phase::Filling => {
                if d == T::zero() {
                    self.psi.add_weight(y, 1);
                } else {
                    self.add_to_psi(p);
                }
            }
            Phase::Epoch => {
                let u = T::of(self.rng.sample::<f64, _>(Open01));
                if u * self.l < T::of_usize(self.m) * d {
                    self.add_to_psi(p);
                } else {
                    self.psi.add_weight(y, 1);
                    self.epoch_cost = self.epoch_cost + d;
                    self.constructive = self.constructive + d;
                }
            }
            Phase::NeedCompress => unreachable!(),
        }
        self.points_seen += 1;

        if self.pi_mode == PiMode::Incremental {
            for _ in 0..INDEX_PER_ARRIVAL {
                if !self.index.index_one(&self.psi, &self.measure, &mut self.evals) {
                    break;
                }
            }
        }

        let support = self.psi.len();
        if support > self.capacity() {
            return Err(Error::Invariant(format!("psi grew to {support} > {}", self.capacity())));
        }
        debug_assert_eq!(self.psi.total_weight(), self.points_seen);
        self.max_support = self.max_support.max(support);
        self.max_evals_per_point = self.max_evals_per_point.max(self.evals - evals_before);
        match self.phase {
            Phase::Filling if support == self.capacity() => self.phase = Phase::NeedCompress,
            Phase::Epoch if !self.epoch_open() => self.phase = Phase::NeedCompress,
            _ => {}
        }
        Ok(())
    }

    pub fn finish(self) -> ClusterRunReport<T> {
        ClusterRunReport {
            degenerate: self.history.is_empty(),
            epochs: self.history.len(),
            psi_final: self.psi,
            l_final: self.l,
            m_param: self.m,
            max_support: self.max_support,
            history: self.history,
            points_seen: self.points_seen,
            constructive_cost: self.constructive,
            max_evals_per_point: self.max_evals_per_point,
            total_evals: self.evals,
            instance: 0,
        }
    }
}

/// Runs the streaming clusterer over `stream`.
pub fn cluster_stream<T: Scalar>(
    stream: &[Point<T>],
    m: usize,
    measure: &Measure<T>,
    seed: u64,
) -> Result<ClusterRunReport<T>> {
    cluster_stream_with(stream, m, measure, seed, PiMode::Incremental)
}

pub fn cluster_stream_with<T: Scalar>(
    stream: &[Point<T>],
    m: usize,
    measure: &Measure<T>,
    seed: u64,
    pi_mode: PiMode,
) -> Result<ClusterRunReport<T>> {
    if stream.is_empty() {
        return Err(Error::Input("empty stream".into()));
    }
    measure.check_all(stream)?;
    let mut state = ClusterState::with_mode(m, measure.clone(), seed, pi_mode)?;
    for p in stream {
        state.push(p)?;
    }
    Ok(state.finish())
}

/// `ceil(log2(1/delta))` independent instances for failure probability `delta`.
pub fn amplification_instances(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(((1.0 / delta).log2().ceil() as usize).max(1))
}

fn instance_seed(seed: u64, i: usize) -> u64 {
    if i == 0 {
        seed
    } else {
        derive_seed(seed, i as u64)
    }
}

/// Every amplification instance over the same stream, in instance order.
/// Instance 0 uses `seed` itself.
pub fn cluster_instances<T: Scalar>(
    stream: &[Point<T>],
    m: usize,
    measure: &Measure<T>,
    delta: f64,
    seed: u64,
) -> Result<Vec<ClusterRunReport<T>>> {
    let count = amplification_instances(delta)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            cluster_stream(stream, m, measure, instance_seed(seed, i)).map(|mut r| {
                r.instance = i;
                r
            })
        })
        .collect()
}

/// The instance with minimal final threshold (lowest index on ties).
pub fn cluster_amplified<T: Scalar>(
    stream: &[Point<T>],
    m: usize,
    measure: &Measure<T>,
    delta: f64,
    seed: u64,
) -> Result<ClusterRunReport<T>> {
    let reports = cluster_instances(stream, m, measure, delta, seed)?;
    Ok(reports
        .into_iter()
        .reduce(|best, r| if r.l_final < best.l_final { r } else { best })
        .expect("at least one instance"))
}

/// `k` centers for the weighted set by local search (the whole support when
/// it has at most `k` points).
pub fn extract_centers<T: Scalar>(psi: &WeightedPointSet<T>, k: usize, measure: &Measure<T>) -> Result<Vec<Point<T>>> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if k >= psi.len() {
        let mut all: Vec<Point<T>> = psi.points().cloned().collect();
        all.sort_by_key(|p| p.id);
        return Ok(all);
    }
    Ok(local_search_kmedian(psi, k, measure, crate::metric::oracle::DEFAULT_LOCAL_SEARCH_ROUNDS)?.centers)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RamSolution<T> {
    pub centers: Vec<Point<T>>,
    /// Nearest-center cost over all input points.
    pub cost: T,
    pub instance: usize,
    pub reports: Vec<ClusterRunReport<T>>,
}

/// Offline k-median in `O(nk log(1/delta))`: shuffle, stream with `m = 4k`,
/// extract `k` centers per instance and keep the cheapest.
pub fn cluster_ram<T: Scalar>(
    points: &[Point<T>],
    k: usize,
    measure: &Measure<T>,
    delta: f64,
    seed: u64,
) -> Result<RamSolution<T>> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::Input(format!("{} points cannot host {k} centers", points.len())));
    }
    let stream: Vec<Point<T>> =
        random_shuffle(points.len(), seed).into_iter().map(|i| points[i].clone()).collect();
    let reports = cluster_instances(&stream, 4 * k, measure, delta, derive_seed(seed, u64::MAX))?;
    let solutions = reports
        .par_iter()
        .map(|r| {
            let centers = extract_centers(&r.psi_final, k, measure)?;
            let c = cost(points, &centers, measure)?.value;
            Ok((centers, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let (instance, (centers, cost)) = solutions
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .1 < best.1 .1 { cur } else { best })
        .expect("at least one instance");
    Ok(RamSolution { centers, cost, instance, reports })
}
