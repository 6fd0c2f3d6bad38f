//! Stream orders: seeded random shuffles, the t-bounded adversary protocol
//! and the boundedness checker for emitted permutations.
//!
//! A t-bounded adversary holds a hand of at most `t` cards drawn from a
//! (shuffled) deck. It may draw while the hand has room, and must hand a card
//! to the algorithm before drawing once the hand is full.
//!
//! Permutations in this module map an arrival index to its emission
//! position: `sigma[i]` is where the `i`-th card drawn ends up in the
//! emitted stream. Under this convention an order is producible with a hand
//! of `t` cards iff `min_bound(sigma) <= t`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Point;
use crate::rng::{derive_seed, seeded, Rng};

/// Uniform random permutation of `0..n` (Fisher-Yates), reproducible per seed.
pub fn random_shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded(seed));
    perm
}

pub fn check_permutation(sigma: &[usize]) -> Result<()> {
    let mut seen = vec![false; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        if s >= sigma.len() || std::mem::replace(&mut seen[s], true) {
            return Err(Error::Input(format!("not a permutation: entry {i} = {s}")));
        }
    }
    Ok(())
}

pub fn inverse(sigma: &[usize]) -> Result<Vec<usize>> {
    check_permutation(sigma)?;
    let mut inv = vec![0; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        inv[s] = i;
    }
    Ok(inv)
}

/// Least `t` with `|{j < i : sigma[j] > sigma[i]}| < t` for every `i`.
pub fn min_bound(sigma: &[usize]) -> Result<usize> {
    check_permutation(sigma)?;
    // Fenwick tree over values seen so far
    let n = sigma.len();
    let mut tree = vec![0usize; n + 1];
    let mut worst = 0;
    for (i, &s) in sigma.iter().enumerate() {
        let mut le = 0;
        let mut k = s + 1;
        while k > 0 {
            le += tree[k];
            k &= k - 1;
        }
        worst = worst.max(i - le);
        let mut k = s + 1;
        while k <= n {
            tree[k] += 1;
            k += k & k.wrapping_neg();
        }
    }
    Ok(worst + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEvent {
    /// Point id drawn from the deck into the hand.
    Draw(usize),
    /// Point id handed to the algorithm.
    Emit(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryTrace {
    /// Arrival index to emission position.
    pub sigma: Vec<usize>,
    /// `min_bound(sigma)`: the smallest hand that produces this order.
    pub hand_high_water: usize,
    /// Largest hand actually held during the run.
    #[serde(default, skip_serializing)]
    pub peak_hand: usize,
    #[serde(default, skip_serializing)]
    pub steps: Vec<TraceEvent>,
}

impl AdversaryTrace {
    /// Arrival indices in emission order.
    pub fn emitted_order(&self) -> Vec<usize> {
        inverse(&self.sigma).expect("trace holds a permutation")
    }

    /// Validates a trace read from disk against the order it claims.
    pub fn validate(&self) -> Result<()> {
        let bound = min_bound(&self.sigma)?;
        if bound != self.hand_high_water {
            return Err(Error::Input(format!(
                "trace claims hand_high_water {} but sigma needs {bound}",
                self.hand_high_water
            )));
        }
        Ok(())
    }

    /// Reorders `arrivals` as this trace emitted them.
    pub fn reorder<P: Clone>(&self, arrivals: &[P]) -> Result<Vec<P>> {
        if arrivals.len() != self.sigma.len() {
            return Err(Error::Input(format!(
                "trace covers {} points, stream has {}",
                self.sigma.len(),
                arrivals.len()
            )));
        }
        Ok(inverse(&self.sigma)?.into_iter().map(|i| arrivals[i].clone()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Draw,
    /// Emit the card at this position of the hand.
    Emit(usize),
}

/// What an adversary sees before each move.
pub struct HandView<'a, T> {
    pub stream: &'a [Point<T>],
    /// Arrival indices currently held, in arrival order.
    pub hand: &'a [usize],
    pub deck_remaining: usize,
    /// Hand limit enforced by the harness.
    pub capacity: usize,
}

impl<T> HandView<'_, T> {
    pub fn card(&self, slot: usize) -> &Point<T> {
        &self.stream[self.hand[slot]]
    }
}

pub trait Adversary<T>: Send {
    fn act(&mut self, view: &HandView<'_, T>, rng: &mut Rng) -> Result<Action>;
}

impl<T, F> Adversary<T> for F
where
    F: FnMut(&HandView<'_, T>, &mut Rng) -> Result<Action> + Send,
{
    fn act(&mut self, view: &HandView<'_, T>, rng: &mut Rng) -> Result<Action> {
        self(view, rng)
    }
}

pub enum AdversaryStrategy<T> {
    /// Emits every card as soon as it is drawn.
    Passthrough,
    /// Holds the target point ids for as long as its capacity allows.
    DelaySet { targets: HashSet<usize>, capacity: usize },
    /// Releases tree points in non-decreasing depth, stable within a depth.
    DepthOrder { capacity: usize },
    Custom(Box<dyn Adversary<T>>),
}

impl<T> AdversaryStrategy<T> {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::Passthrough => "passthrough",
            AdversaryStrategy::DelaySet { .. } => "delay-set",
            AdversaryStrategy::DepthOrder { .. } => "depth-order",
            AdversaryStrategy::Custom(_) => "custom",
        }
    }
}

impl<T> Adversary<T> for AdversaryStrategy<T> {
    fn act(&mut self, view: &HandView<'_, T>, rng: &mut Rng) -> Result<Action> {
        match self {
            AdversaryStrategy::Passthrough => {
                Ok(if view.hand.is_empty() { Action::Draw } else { Action::Emit(0) })
            }
            AdversaryStrategy::DelaySet { targets, capacity } => {
                let free = (0..view.hand.len()).find(|&s| !targets.contains(&view.card(s).id));
                Ok(match free {
                    Some(s) => Action::Emit(s),
                    None if view.deck_remaining > 0 && view.hand.len() < *capacity => Action::Draw,
                    None => Action::Emit(0),
                })
            }
            AdversaryStrategy::DepthOrder { capacity } => {
                let mut shallowest: Option<(usize, u32)> = None;
                for s in 0..view.hand.len() {
                    let p = view.card(s);
                    let depth = p.depth().ok_or_else(|| {
                        Error::Input(format!("depth order needs tree points, got point {}", p.id))
                    })?;
                    if shallowest.is_none_or(|(_, d)| depth < d) {
                        shallowest = Some((s, depth));
                    }
                }
                Ok(match shallowest {
                    Some((s, 0)) => Action::Emit(s),
                    _ if view.deck_remaining > 0 && view.hand.len() < *capacity => Action::Draw,
                    Some((s, _)) => Action::Emit(s),
                    None => Action::Draw,
                })
            }
            AdversaryStrategy::Custom(inner) => inner.act(view, rng),
        }
    }
}

/// Holds up to `capacity` cards and releases the one with the smallest
/// coordinate on `axis` (earliest arrival on ties): a sorting adversary for
/// vector data.
#[derive(Clone, Debug)]
pub struct SortByCoordinate {
    pub capacity: usize,
    pub axis: usize,
}

impl<T: crate::Scalar> Adversary<T> for SortByCoordinate {
    fn act(&mut self, view: &HandView<'_, T>, _rng: &mut Rng) -> Result<Action> {
        if view.deck_remaining > 0 && view.hand.len() < self.capacity {
            return Ok(Action::Draw);
        }
        let mut best: Option<(usize, T)> = None;
        for s in 0..view.hand.len() {
            let p = view.card(s);
            let x = *p.as_coords().and_then(|c| c.get(self.axis)).ok_or_else(|| {
                Error::Input(format!("point {} has no coordinate {}", p.id, self.axis))
            })?;
            if best.is_none_or(|(_, b)| x < b) {
                best = Some((s, x));
            }
        }
        Ok(best.map_or(Action::Draw, |(s, _)| Action::Emit(s)))
    }
}

/// Replays a requested emission order (arrival indices), drawing lazily
/// until the next requested card is in hand.
#[derive(Clone, Debug)]
pub struct ScriptedOrder {
    order: Vec<usize>,
    next: usize,
}

impl ScriptedOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        check_permutation(&order)?;
        Ok(ScriptedOrder { order, next: 0 })
    }
}

impl<T> Adversary<T> for ScriptedOrder {
    fn act(&mut self, view: &HandView<'_, T>, _rng: &mut Rng) -> Result<Action> {
        let want = *self
            .order
            .get(self.next)
            .ok_or_else(|| Error::Input("scripted order exhausted".into()))?;
        match view.hand.iter().position(|&a| a == want) {
            Some(s) => {
                self.next += 1;
                Ok(Action::Emit(s))
            }
            None => Ok(Action::Draw),
        }
    }
}

/// Runs the hand-of-cards protocol with hand limit `t` over `stream` (taken
/// as the deck, top card first) and returns the emitted stream.
pub fn apply_adversary<T: Clone, A: Adversary<T> + ?Sized>(
    stream: &[Point<T>],
    strategy: &mut A,
    t: usize,
    seed: u64,
) -> Result<(Vec<Point<T>>, AdversaryTrace)> {
    if t == 0 {
        return Err(Error::Parameter("hand capacity t must be at least 1".into()));
    }
    let n = stream.len();
    let mut rng = seeded(seed);
    let mut hand: Vec<usize> = Vec::with_capacity(t.min(n));
    let mut sigma = vec![usize::MAX; n];
    let mut emitted = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(2 * n);
    let mut next = 0;
    let mut peak = 0;
    let mut step = 0;
    while emitted.len() < n {
        let view = HandView { stream, hand: &hand, deck_remaining: n - next, capacity: t };
        match strategy.act(&view, &mut rng)? {
            Action::Draw => {
                if next == n {
                    return Err(Error::Protocol { step, reason: "draw from an empty deck".into() });
                }
                if hand.len() >= t {
                    return Err(Error::Protocol {
                        step,
                        reason: format!("draw would hold {} cards, limit is {t}", hand.len() + 1),
                    });
                }
                hand.push(next);
                steps.push(TraceEvent::Draw(stream[next].id));
                next += 1;
                peak = peak.max(hand.len());
            }
            Action::Emit(slot) => {
                if slot >= hand.len() {
                    return Err(Error::Protocol {
                        step,
                        reason: format!("emit from slot {slot} of a {}-card hand", hand.len()),
                    });
                }
                let arrival = hand.remove(slot);
                sigma[arrival] = emitted.len();
                steps.push(TraceEvent::Emit(stream[arrival].id));
                emitted.push(stream[arrival].clone());
            }
        }
        step += 1;
    }
    let hand_high_water = min_bound(&sigma)?;
    Ok((emitted, AdversaryTrace { sigma, hand_high_water, peak_hand: peak, steps }))
}

/// A t-semirandom stream: seeded shuffle first, adversary second.
pub struct SemirandomStream<T> {
    /// Shuffled order (indices into the input), i.e. the deck.
    pub shuffle: Vec<usize>,
    pub emitted: Vec<Point<T>>,
    /// Trace relative to the shuffled deck.
    pub trace: AdversaryTrace,
}

pub fn semirandom_stream<T: Clone, A: Adversary<T> + ?Sized>(
    points: &[Point<T>],
    strategy: &mut A,
    t: usize,
    seed: u64,
) -> Result<SemirandomStream<T>> {
    let shuffle = random_shuffle(points.len(), derive_seed(seed, 0));
    let deck: Vec<Point<T>> = shuffle.iter().map(|&i| points[i].clone()).collect();
    let (emitted, trace) = apply_adversary(&deck, strategy, t, derive_seed(seed, 1))?;
    Ok(SemirandomStream { shuffle, emitted, trace })
}
