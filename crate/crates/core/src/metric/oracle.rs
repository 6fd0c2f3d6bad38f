//! Offline k-median solvers over centers drawn from the input support:
//! exhaustive enumeration for tiny inputs and single-swap local search.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::metric::measure::Measure;
use crate::metric::point::Point;
use crate::metric::weighted::WeightedPointSet;
use crate::scalar::Scalar;

/// Largest support [`opt_bar_exact`] will enumerate by default.
pub const BRUTE_FORCE_CAP: usize = 14;

/// Default round limit for [`local_search_kmedian`].
pub const DEFAULT_LOCAL_SEARCH_ROUNDS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct KMedianSolution<T> {
    pub value: T,
    /// Chosen centers, sorted by id.
    pub centers: Vec<Point<T>>,
}

fn solution<T: Scalar>(set: &WeightedPointSet<T>, value: T, mut idx: Vec<usize>) -> KMedianSolution<T> {
    idx.sort_by_key(|&i| set.point(i).id);
    KMedianSolution { value, centers: idx.into_iter().map(|i| set.point(i).clone()).collect() }
}

fn check_k<T: Scalar>(set: &WeightedPointSet<T>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if k > set.len() {
        return Err(Error::Parameter(format!("k = {k} exceeds support size {}", set.len())));
    }
    Ok(())
}

/// Minimum weighted cost over every `k`-subset of the support, with the
/// lexicographically first optimal subset (by point id).
pub fn opt_bar_exact<T: Scalar>(set: &WeightedPointSet<T>, k: usize, m: &Measure<T>) -> Result<KMedianSolution<T>> {
    opt_bar_exact_capped(set, k, m, BRUTE_FORCE_CAP)
}

pub fn opt_bar_exact_capped<T: Scalar>(
    set: &WeightedPointSet<T>,
    k: usize,
    m: &Measure<T>,
    cap: usize,
) -> Result<KMedianSolution<T>> {
    if set.len() > cap {
        return Err(Error::Size { size: set.len(), cap });
    }
    check_k(set, k)?;
    m.check_all(set.points())?;
    let n = set.len();
    let order = set.order_by_id();
    let dist: Vec<T> = (0..n)
        .flat_map(|a| (0..n).map(move |c| (a, c)))
        .map(|(a, c)| m.d(set.point(a), set.point(c)))
        .collect();
    let weight: Vec<T> = (0..n).map(|a| T::of_u64(set.weight(a))).collect();

    let mut best: Option<(T, Vec<usize>)> = None;
    for subset in order.iter().copied().combinations(k) {
        let value = (0..n)
            .map(|a| {
                let near = subset.iter().map(|&c| dist[a * n + c]).fold(T::infinity(), T::min);
                weight[a] * near
            })
            .fold(T::zero(), |s, v| s + v);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, subset));
        }
    }
    let (value, idx) = best.expect("at least one subset");
    Ok(solution(set, value, idx))
}

/// Single-swap local search seeded by farthest-point traversal from the
/// point of minimum id.
///
/// Each round applies the best improving (center, candidate) swap; the
/// search stops when no swap improves the cost by more than a relative
/// `1e-12` or after `max_rounds` rounds.
pub fn local_search_kmedian<T: Scalar>(
    set: &WeightedPointSet<T>,
    k: usize,
    m: &Measure<T>,
    max_rounds: usize,
) -> Result<KMedianSolution<T>> {
    check_k(set, k)?;
    m.check_all(set.points())?;
    let order = set.order_by_id();
    let n = set.len();
    let weight: Vec<T> = (0..n).map(|a| T::of_u64(set.weight(a))).collect();
    let pt = |i: usize| set.point(i);

    // farthest-point seeding
    let mut centers = vec![order[0]];
    let mut is_center = vec![false; n];
    is_center[order[0]] = true;
    let mut d1: Vec<T> = (0..n).map(|p| m.d(pt(p), pt(order[0]))).collect();
    while centers.len() < k {
        let mut far = None;
        for &p in &order {
            if is_center[p] {
                continue;
            }
            if far.is_none_or(|(_, d)| d1[p] > d) {
                far = Some((p, d1[p]));
            }
        }
        let (c, _) = far.expect("k <= n");
        centers.push(c);
        is_center[c] = true;
        for p in 0..n {
            d1[p] = d1[p].min(m.d(pt(p), pt(c)));
        }
    }

    let tol = T::of(1e-12);
    let mut near = vec![0usize; n];
    let mut d2 = vec![T::infinity(); n];
    let mut dj = vec![T::zero(); n];
    let mut extra = vec![T::zero(); k];
    let mut current = T::zero();
    for round in 0..=max_rounds {
        // nearest and second-nearest center per point
        current = T::zero();
        for p in 0..n {
            let (mut b1, mut b2, mut bi) = (T::infinity(), T::infinity(), 0);
            for (ci, &c) in centers.iter().enumerate() {
                let d = m.d(pt(p), pt(c));
                if d < b1 {
                    b2 = b1;
                    b1 = d;
                    bi = ci;
                } else if d < b2 {
                    b2 = d;
                }
            }
            d1[p] = b1;
            d2[p] = b2;
            near[p] = bi;
            current = current + weight[p] * b1;
        }
        if round == max_rounds {
            break;
        }
        let mut best: Option<(T, usize, usize)> = None;
        let threshold = current - tol * current.abs();
        for &j in &order {
            if is_center[j] {
                continue;
            }
            for p in 0..n {
                dj[p] = m.d(pt(p), pt(j));
            }
            let mut base = T::zero();
            extra.iter_mut().for_each(|e| *e = T::zero());
            for p in 0..n {
                let with_j = dj[p].min(d1[p]);
                base = base + weight[p] * with_j;
                extra[near[p]] = extra[near[p]] + weight[p] * (dj[p].min(d2[p]) - with_j);
            }
            for (ci, &e) in extra.iter().enumerate() {
                let cand = base + e;
                if cand < threshold && best.is_none_or(|(b, _, _)| cand < b) {
                    best = Some((cand, ci, j));
                }
            }
        }
        match best {
            Some((_, ci, j)) => {
                is_center[centers[ci]] = false;
                is_center[j] = true;
                centers[ci] = j;
            }
            None => break,
        }
    }
    Ok(solution(set, current, centers))
}
