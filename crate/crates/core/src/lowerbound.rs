//! Hard instances for online facility location under t-bounded orders.
//!
//! For `t >= 4` let `m = ceil(log2 t / log2 log2 t)`, `h = m - 1` and
//! `D = f/h`. The metric is a complete `z`-ary tree of depth `h` whose
//! depth-`i` edges have length `D·m^{-i} − D·m^{-i-1}`. A hidden root-to-leaf
//! path `x_0, ..., x_h` receives `m^i` demands at `x_i`; all other demands sit
//! at the root. Opening facilities at the root and at `x_h` costs less than
//! `3f`, while an algorithm that sees the demands in non-decreasing depth
//! cannot tell where the path continues.

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{BaseMetric, Measure, Point, Rho, TreeMetric, TreeNode};
use crate::ofl::ofl_run;
use crate::order::{apply_adversary, random_shuffle, AdversaryStrategy};
use crate::rng::{derive_seed, seeded};
use crate::scalar::Scalar;

/// `(m, h)` for hand size `t`.
pub fn tree_parameters(t: usize) -> Result<(usize, usize)> {
    if t < 4 {
        return Err(Error::Parameter(format!("lower-bound family needs t >= 4, got {t}")));
    }
    let lg = (t as f64).log2();
    let m = (lg / lg.log2()).ceil() as usize;
    Ok((m, m - 1))
}

/// `sum_{i=1..h} m^i`: demands away from the root.
pub fn off_root_demands(m: usize, h: usize) -> usize {
    (1..=h as u32).map(|i| m.pow(i)).sum()
}

#[derive(Clone, Debug)]
pub struct TreeInstance<T> {
    pub t: usize,
    pub m: usize,
    pub h: usize,
    /// Scale `D = f/h`.
    pub scale: T,
    pub z: u64,
    pub f: T,
    /// Hidden child choices `b_1..b_h`, each in `1..=z`.
    pub hidden: Vec<u64>,
    pub n: usize,
    /// `x_0` (root) through `x_h`.
    pub path: Vec<TreeNode>,
    pub demands: Vec<Point<T>>,
    pub measure: Measure<T>,
}

impl<T: Scalar> TreeInstance<T> {
    pub fn metric(&self) -> &TreeMetric<T> {
        match &self.measure.base {
            BaseMetric::Tree(t) => t,
            _ => unreachable!("tree instances use a tree metric"),
        }
    }

    /// Largest over smallest nonzero distance among demand locations.
    pub fn aspect_ratio(&self) -> T {
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for a in &self.path {
            for b in &self.path {
                if a != b {
                    let d = self.metric().distance(*a, *b);
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
        hi / lo
    }
}

/// Instance with a hidden path drawn uniformly from `{1..z}^h`.
pub fn build_tree_instance<T: Scalar>(t: usize, z: u64, n: usize, f: T, seed: u64) -> Result<TreeInstance<T>> {
    let (_, h) = tree_parameters(t)?;
    let mut rng = seeded(seed);
    let hidden = (0..h).map(|_| rng.random_range(1..=z.max(1))).collect();
    build_tree_instance_with_hidden(t, z, n, f, hidden)
}

pub fn build_tree_instance_with_hidden<T: Scalar>(
    t: usize,
    z: u64,
    n: usize,
    f: T,
    hidden: Vec<u64>,
) -> Result<TreeInstance<T>> {
    let (m, h) = tree_parameters(t)?;
    if z < 2 {
        return Err(Error::Parameter(format!("branching factor z = {z} < 2")));
    }
    if n < t {
        return Err(Error::Parameter(format!("need n >= t, got n = {n}, t = {t}")));
    }
    if !(f > T::zero()) {
        return Err(Error::Parameter("facility cost must be positive".into()));
    }
    if hidden.len() != h || hidden.iter().any(|&b| b < 1 || b > z) {
        return Err(Error::Parameter(format!("hidden path must be {h} entries in 1..={z}")));
    }
    let off_root = off_root_demands(m, h);
    if off_root >= t {
        return Err(Error::Invariant(format!("{off_root} off-root demands not below t = {t}")));
    }
    let scale = f / T::of_usize(h);
    let metric = TreeMetric::new(z, h as u32, scale, T::of_usize(m))?;
    let mut path = vec![TreeNode::ROOT];
    for &b in &hidden {
        let last = *path.last().expect("root");
        path.push(metric.child(last, b - 1));
    }
    let mut demands = Vec::with_capacity(n);
    for _ in 0..(n - off_root) {
        demands.push(Point::tree(demands.len(), TreeNode::ROOT));
    }
    for (i, &node) in path.iter().enumerate().skip(1) {
        for _ in 0..m.pow(i as u32) {
            demands.push(Point::tree(demands.len(), node));
        }
    }
    let measure = Measure::new(BaseMetric::Tree(Arc::new(metric)), Rho::Linear);
    Ok(TreeInstance { t, m, h, scale, z, f, hidden, n, path, demands, measure })
}

/// Cost of facilities at the root and at `x_h`, every off-root demand served
/// by `x_h`. Always below `3f`.
pub fn opt_certificate<T: Scalar>(inst: &TreeInstance<T>) -> Result<T> {
    let leaf = Point::tree(usize::MAX, *inst.path.last().expect("path"));
    let connection = inst
        .demands
        .iter()
        .map(|p| if p.depth() == Some(0) { T::zero() } else { inst.measure.d(p, &leaf) })
        .fold(T::zero(), |s, v| s + v);
    let total = inst.f + inst.f + connection;
    if !(total < T::of(3.0) * inst.f) {
        return Err(Error::Invariant(format!("certificate cost {total} not below 3f")));
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundConfig {
    pub t_values: Vec<usize>,
    pub z: u64,
    /// Demands per instance; raised to `t` when smaller.
    pub n: usize,
    pub f: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RatioStats {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub failures: usize,
}

impl RatioStats {
    pub fn from_samples(samples: &[f64], failures: usize) -> Self {
        let k = samples.len();
        if k == 0 {
            return RatioStats { mean: f64::NAN, stderr: f64::NAN, trials: 0, failures };
        }
        let mean = samples.iter().sum::<f64>() / k as f64;
        let var = if k > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64
        } else {
            0.0
        };
        RatioStats { mean, stderr: (var / k as f64).sqrt(), trials: k, failures }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundRow {
    pub t: usize,
    pub m: usize,
    pub h: usize,
    pub opt: f64,
    /// Depth-ordered (adversarial) stream.
    pub adversarial: RatioStats,
    /// Same instances and OFL seeds in plain random order.
    pub control: RatioStats,
    /// First error per failed trial, `(trial, class)`.
    pub errors: Vec<(usize, String)>,
}

#[derive(Clone, Copy, Debug)]
struct TrialOutcome {
    opt: f64,
    adversarial: f64,
    control: f64,
}

fn lowerbound_trial<T: Scalar>(cfg: &LowerBoundConfig, t: usize, trial: usize) -> Result<TrialOutcome> {
    let seed = derive_seed(derive_seed(cfg.seed, t as u64), trial as u64);
    let inst = build_tree_instance::<T>(t, cfg.z, cfg.n.max(t), T::of(cfg.f), derive_seed(seed, 0))?;
    let opt = opt_certificate(&inst)?;
    let deck: Vec<Point<T>> = random_shuffle(inst.demands.len(), derive_seed(seed, 1))
        .into_iter()
        .map(|i| inst.demands[i].clone())
        .collect();
    let mut adversary = AdversaryStrategy::DepthOrder { capacity: t };
    let (ordered, _) = apply_adversary(&deck, &mut adversary, t, derive_seed(seed, 2))?;
    let ofl_seed = derive_seed(seed, 3);
    let adv = ofl_run(&ordered, inst.f, &inst.measure, ofl_seed)?.total_cost();
    let ctl = ofl_run(&deck, inst.f, &inst.measure, ofl_seed)?.total_cost();
    Ok(TrialOutcome { opt: opt.as_f64(), adversarial: (adv / opt).as_f64(), control: (ctl / opt).as_f64() })
}

/// Mean OFL competitive ratio per `t` on depth-ordered streams, with a
/// random-order control. Trials run in parallel; rows are in `t_values`
/// order and every trial is counted as a success or a failure.
pub fn run_lowerbound_experiment<T: Scalar>(cfg: &LowerBoundConfig) -> Result<Vec<LowerBoundRow>> {
    if !(cfg.f > 0.0) {
        return Err(Error::Parameter("facility cost must be positive".into()));
    }
    cfg.t_values
        .iter()
        .map(|&t| {
            let (m, h) = tree_parameters(t)?;
            let outcomes: Vec<Result<TrialOutcome>> =
                (0..cfg.trials).into_par_iter().map(|i| lowerbound_trial::<T>(cfg, t, i)).collect();
            let mut adv = Vec::with_capacity(cfg.trials);
            let mut ctl = Vec::with_capacity(cfg.trials);
            let mut errors = Vec::new();
            let mut opt = f64::NAN;
            for (i, o) in outcomes.into_iter().enumerate() {
                match o {
                    Ok(o) => {
                        opt = o.opt;
                        adv.push(o.adversarial);
                        ctl.push(o.control);
                    }
                    Err(e) => errors.push((i, e.class().to_string())),
                }
            }
            Ok(LowerBoundRow {
                t,
                m,
                h,
                opt,
                adversarial: RatioStats::from_samples(&adv, errors.len()),
                control: RatioStats::from_samples(&ctl, errors.len()),
                errors,
            })
        })
        .collect()
}
