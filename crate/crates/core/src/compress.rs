//! Halving compression of a weighted set.
//!
//! Every point points at its nearest other point (`pi`); with ties broken
//! toward the greatest id, the functional graph of `pi` has only 2-cycles,
//! so each component is a pair of trees with coupled roots and can be
//! 2-coloured. After setting aside the `k` points with the largest
//! `w(a)·D(a, pi(a))`, the larger colour class is merged into its images,
//! which leaves at most `floor((n + k) / 2)` points and moves weight at a
//! cost no larger than the best k-median solution with centers in the set.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::metric::{Measure, WeightedPointSet};
use crate::scalar::Scalar;

/// Nearest-neighbour function over a weighted set, by position in the set.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestNeighborMap<T> {
    pi: Vec<usize>,
    dist: Vec<T>,
    ids: Vec<usize>,
}

impl<T: Scalar> NearestNeighborMap<T> {
    pub(crate) fn from_parts(pi: Vec<usize>, dist: Vec<T>, ids: Vec<usize>) -> Self {
        debug_assert!(pi.len() == dist.len() && pi.len() == ids.len());
        NearestNeighborMap { pi, dist, ids }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Position of the nearest neighbour of position `a`.
    pub fn image(&self, a: usize) -> usize {
        self.pi[a]
    }

    pub fn images(&self) -> &[usize] {
        &self.pi
    }

    /// `D(a, pi(a))`.
    pub fn distance(&self, a: usize) -> T {
        self.dist[a]
    }

    /// Whether this map was built over `set` (same ids in the same positions).
    pub fn indexes<U>(&self, set: &WeightedPointSet<U>) -> bool {
        self.ids.len() == set.len() && set.points().zip(&self.ids).all(|(p, &id)| p.id == id)
    }
}

/// Whether candidate `b` at dissimilarity `d` beats the incumbent for a
/// nearest-neighbour slot: strictly closer, or equally close and greater id.
#[inline]
pub(crate) fn beats<T: PartialOrd>(d: T, b_id: usize, best: Option<(T, usize)>) -> bool {
    match best {
        None => true,
        Some((bd, bid)) => d < bd || (d == bd && b_id > bid),
    }
}

/// Exact `pi` by pairwise scan: the closest other point, ties to the greatest id.
pub fn nearest_neighbor_map<T: Scalar>(set: &WeightedPointSet<T>, m: &Measure<T>) -> Result<NearestNeighborMap<T>> {
    let n = set.len();
    if n < 2 {
        return Err(Error::Input(format!("nearest-neighbour map needs at least 2 points, got {n}")));
    }
    m.check_all(set.points())?;
    let mut pi = vec![0; n];
    let mut dist = vec![T::zero(); n];
    for a in 0..n {
        let mut best: Option<(T, usize)> = None;
        let mut best_pos = 0;
        for b in (0..n).filter(|&b| b != a) {
            let d = m.d(set.point(a), set.point(b));
            let id = set.point(b).id;
            if beats(d, id, best) {
                best = Some((d, id));
                best_pos = b;
            }
        }
        pi[a] = best_pos;
        dist[a] = best.expect("n >= 2").0;
    }
    let ids = set.points().map(|p| p.id).collect();
    Ok(NearestNeighborMap { pi, dist, ids })
}

/// Lengths of all cycles of the functional graph `a -> images[a]`.
pub fn functional_graph_cycles(images: &[usize]) -> Vec<usize> {
    // 0 = unvisited, 1 = on current walk, 2 = done
    let mut state = vec![0u8; images.len()];
    let mut cycles = Vec::new();
    let mut walk = Vec::new();
    for start in 0..images.len() {
        let mut a = start;
        walk.clear();
        while state[a] == 0 {
            state[a] = 1;
            walk.push(a);
            a = images[a];
        }
        if state[a] == 1 {
            let pos = walk.iter().position(|&x| x == a).expect("on walk");
            cycles.push(walk.len() - pos);
        }
        for &w in &walk {
            state[w] = 2;
        }
    }
    cycles
}

/// Two colours (0/1) indexed like the map's positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiTreeColoring {
    pub color: Vec<u8>,
}

impl BiTreeColoring {
    /// Every point differs in colour from its image.
    pub fn is_proper(&self, images: &[usize]) -> bool {
        images.iter().enumerate().all(|(a, &b)| self.color[a] != self.color[b])
    }
}

/// Proper 2-colouring of the bi-tree forest in linear time: walk up to the
/// coupled roots of each uncoloured component, colour the roots 0 and 1
/// (lower position gets 0), then push alternating colours down child lists.
pub fn bitree_two_color<T: Scalar>(map: &NearestNeighborMap<T>) -> Result<BiTreeColoring> {
    let pi = &map.pi;
    let n = pi.len();
    // children in CSR form
    let mut start = vec![0usize; n + 1];
    for &p in pi {
        start[p + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut children = vec![0usize; n];
    for (a, &p) in pi.iter().enumerate() {
        children[fill[p]] = a;
        fill[p] += 1;
    }

    const NONE: u8 = u8::MAX;
    let mut color = vec![NONE; n];
    let mut stack = Vec::new();
    for s in 0..n {
        if color[s] != NONE {
            continue;
        }
        let mut a = s;
        let mut steps = 0;
        while pi[pi[a]] != a {
            if pi[a] == a {
                return Err(Error::Invariant(format!("position {a} is its own nearest neighbour")));
            }
            a = pi[a];
            steps += 1;
            if steps > n {
                return Err(Error::Invariant(
                    "nearest-neighbour graph has a cycle longer than 2".into(),
                ));
            }
        }
        let (r0, r1) = (a.min(pi[a]), a.max(pi[a]));
        color[r0] = 0;
        color[r1] = 1;
        stack.push(r0);
        stack.push(r1);
        while let Some(v) = stack.pop() {
            for &c in &children[start[v]..start[v + 1]] {
                if color[c] == NONE {
                    color[c] = 1 - color[v];
                    stack.push(c);
                }
            }
        }
    }
    Ok(BiTreeColoring { color })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Compression<T> {
    pub z: WeightedPointSet<T>,
    /// Total weighted movement `sum of w(a)·D(a, pi(a))` over merged points.
    pub lambda: T,
    /// Positions (in the input set) of the merged points.
    pub merged: Vec<usize>,
}

/// Compresses `set` to at most `floor((n + k) / 2)` points, returning the
/// compressed set and its movement cost.
pub fn compress_b<T: Scalar>(
    set: &WeightedPointSet<T>,
    k: usize,
    map: &NearestNeighborMap<T>,
    m: &Measure<T>,
) -> Result<Compression<T>> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let n = set.len();
    if k >= n {
        return Ok(Compression { z: set.clone(), lambda: T::zero(), merged: Vec::new() });
    }
    if !map.indexes(set) {
        return Err(Error::Input("nearest-neighbour map does not index this set".into()));
    }
    #[cfg(debug_assertions)]
    for a in 0..n {
        debug_assert!(m.d(set.point(a), set.point(map.pi[a])) == map.dist[a]);
    }
    #[cfg(not(debug_assertions))]
    let _ = m;

    let score: Vec<T> = (0..n).map(|a| T::of_u64(set.weight(a)) * map.dist[a]).collect();
    // k largest scores, ties toward larger id
    let mut idx: Vec<usize> = (0..n).collect();
    let by_score_desc = |&a: &usize, &b: &usize| {
        score[b]
            .partial_cmp(&score[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| set.point(b).id.cmp(&set.point(a).id))
    };
    idx.select_nth_unstable_by(k - 1, by_score_desc);
    let mut set_aside = vec![false; n];
    for &a in &idx[..k] {
        set_aside[a] = true;
    }

    let coloring = bitree_two_color(map)?;
    let mut class_size = [0usize; 2];
    for a in (0..n).filter(|&a| !set_aside[a]) {
        class_size[coloring.color[a] as usize] += 1;
    }
    let merge_color = if class_size[0] > class_size[1] { 0 } else { 1 };

    let mut weight: Vec<u64> = (0..n).map(|a| set.weight(a)).collect();
    let mut gone = vec![false; n];
    let mut lambda = T::zero();
    let mut merged = Vec::with_capacity(class_size[merge_color as usize]);
    for a in 0..n {
        if set_aside[a] || coloring.color[a] != merge_color {
            continue;
        }
        let target = map.pi[a];
        debug_assert!(coloring.color[target] != merge_color);
        weight[target] += weight[a];
        lambda = lambda + score[a];
        gone[a] = true;
        merged.push(a);
    }
    let z = WeightedPointSet::from_entries(
        (0..n).filter(|&a| !gone[a]).map(|a| (set.point(a).clone(), weight[a])),
    )?;
    Ok(Compression { z, lambda, merged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{line_points, opt_bar_exact};

    fn unit(values: &[f64]) -> WeightedPointSet<f64> {
        WeightedPointSet::from_points(&line_points(values)).unwrap()
    }

    #[test]
    fn pi_on_a_line() {
        let a = unit(&[0.0, 1.0, 10.0]);
        let map = nearest_neighbor_map(&a, &Measure::linear()).unwrap();
        assert_eq!(map.images(), &[1, 0, 1]);
        assert_eq!(map.distance(2), 9.0);
        let map = nearest_neighbor_map(&unit(&[0.0, 1.0, 2.0]), &Measure::linear()).unwrap();
        assert_eq!(map.image(1), 2);
        let map = nearest_neighbor_map(&unit(&[4.0, -1.0]), &Measure::linear()).unwrap();
        assert_eq!(map.images(), &[1, 0]);
        assert!(nearest_neighbor_map(&unit(&[4.0]), &Measure::linear()).is_err());
    }

    #[test]
    fn coloring_on_a_line() {
        let map = nearest_neighbor_map(&unit(&[0.0, 1.0, 10.0]), &Measure::linear()).unwrap();
        let c = bitree_two_color(&map).unwrap();
        assert_eq!(c.color[2], c.color[0]);
        assert_ne!(c.color[0], c.color[1]);
        assert!(c.is_proper(map.images()));
    }

    #[test]
    fn long_cycle_is_an_invariant_failure() {
        let map = NearestNeighborMap::from_parts(vec![1, 2, 0], vec![1.0; 3], vec![0, 1, 2]);
        assert!(matches!(bitree_two_color(&map), Err(Error::Invariant(_))));
        assert_eq!(functional_graph_cycles(&[1, 2, 0]), vec![3]);
        assert_eq!(functional_graph_cycles(&[1, 0, 1, 2]), vec![2]);
    }

    #[test]
    fn compress_line_example() {
        let a = unit(&[0.0, 1.0, 10.0]);
        let m = Measure::linear();
        let map = nearest_neighbor_map(&a, &m).unwrap();
        let c = compress_b(&a, 1, &map, &m).unwrap();
        assert_eq!(c.lambda, 1.0);
        assert_eq!(c.z.len(), 2);
        assert_eq!(c.z.total_weight(), 3);
        let got: Vec<(usize, u64)> = c.z.entries().iter().map(|e| (e.point.id, e.weight)).collect();
        assert_eq!(got, vec![(0, 2), (2, 1)]);
        assert!(c.lambda <= opt_bar_exact(&a, 1, &m).unwrap().value);
    }

    #[test]
    fn k_at_least_n_is_identity() {
        let a = unit(&[0.0, 1.0, 10.0]);
        let m = Measure::linear();
        let map = nearest_neighbor_map(&a, &m).unwrap();
        let c = compress_b(&a, 3, &map, &m).unwrap();
        assert_eq!((c.z, c.lambda), (a.clone(), 0.0));
        assert!(compress_b(&a, 0, &map, &m).is_err());
    }

    #[test]
    fn strict_shrink_at_n_equals_2k() {
        let m = Measure::linear();
        for k in 1..=6 {
            let vals: Vec<f64> = (0..2 * k).map(|i| (i * i) as f64 * 0.7).collect();
            let a = unit(&vals);
            let map = nearest_neighbor_map(&a, &m).unwrap();
            let c = compress_b(&a, k, &map, &m).unwrap();
            assert!(c.z.len() <= 3 * k / 2);
            assert!(c.z.len() < a.len());
        }
    }

    #[test]
    fn map_must_match_set() {
        let m = Measure::linear();
        let a = unit(&[0.0, 1.0, 10.0]);
        let b = unit(&[0.0, 1.0, 10.0, 11.0]);
        let map = nearest_neighbor_map(&b, &m).unwrap();
        assert!(compress_b(&a, 1, &map, &m).is_err());
    }
}
