//! Reproducible experiment sweeps. Every table row is a pure function of the
//! configuration; trials run in parallel but are reported in trial order.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kmedian::{default_m, extract_centers, ClusterState, SUPPORT_FACTOR};
use crate::lowerbound::{run_lowerbound_experiment, LowerBoundConfig, LowerBoundRow};
use crate::metric::{cost, local_search_kmedian, Measure, Point, Rho, WeightedPointSet};
use crate::metric::oracle::DEFAULT_LOCAL_SEARCH_ROUNDS;
use crate::order::{semirandom_stream, AdversaryStrategy, SortByCoordinate};
use crate::rng::{derive_seed, seeded};
use crate::synth::gaussian_mixture;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    Passthrough,
    /// Holds `t - 1` random points for as long as possible.
    DelaySet,
    /// Releases tree points by depth.
    DepthOrder,
    /// Releases vector points sorted on the first axis within the hand.
    Sort,
}

impl AdversaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryKind::Passthrough => "passthrough",
            AdversaryKind::DelaySet => "delay-set",
            AdversaryKind::DepthOrder => "depth-order",
            AdversaryKind::Sort => "sort",
        }
    }

    /// Strategy with hand limit `t`; delay-set targets are drawn from `points`.
    pub fn strategy<T: crate::Scalar>(&self, t: usize, points: &[Point<T>], seed: u64) -> AdversaryStrategy<T> {
        match self {
            AdversaryKind::Passthrough => AdversaryStrategy::Passthrough,
            AdversaryKind::DelaySet => {
                let held = (t - 1).min(points.len());
                let targets: HashSet<usize> =
                    sample(&mut seeded(seed), points.len(), held).into_iter().map(|i| points[i].id).collect();
                AdversaryStrategy::DelaySet { targets, capacity: t }
            }
            AdversaryKind::DepthOrder => AdversaryStrategy::DepthOrder { capacity: t },
            AdversaryKind::Sort => AdversaryStrategy::Custom(Box::new(SortByCoordinate { capacity: t, axis: 0 })),
        }
    }
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passthrough" => Ok(AdversaryKind::Passthrough),
            "delay-set" => Ok(AdversaryKind::DelaySet),
            "depth-order" => Ok(AdversaryKind::DepthOrder),
            "sort" => Ok(AdversaryKind::Sort),
            other => Err(Error::Parameter(format!("unknown adversary {other:?}"))),
        }
    }
}

/// Adversarial vs random-order OFL ratios on the lower-bound family.
pub fn bench_ratio_vs_t(cfg: &LowerBoundConfig) -> Result<Vec<LowerBoundRow>> {
    run_lowerbound_experiment::<f64>(cfg)
}

fn config_line<C: Serialize>(cfg: &C) -> String {
    format!("# config: {}\n", serde_json::to_string(cfg).expect("config serialises"))
}

/// `t,m,h,opt,mean_ratio,stderr`, optionally followed by the control and
/// trial-count columns.
pub fn ratio_table_csv(cfg: &LowerBoundConfig, rows: &[LowerBoundRow], with_control: bool) -> String {
    let mut out = config_line(cfg);
    out.push_str("t,m,h,opt,mean_ratio,stderr");
    if with_control {
        out.push_str(",control_mean,control_stderr,trials,failures");
    }
    out.push('\n');
    for r in rows {
        write!(out, "{},{},{},{},{},{}", r.t, r.m, r.h, r.opt, r.adversarial.mean, r.adversarial.stderr).unwrap();
        if with_control {
            write!(
                out,
                ",{},{},{},{}",
                r.control.mean, r.control.stderr, r.adversarial.trials, r.adversarial.failures
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterBenchConfig {
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    pub sigma: f64,
    /// Distance between consecutive mixture means, in units of sigma.
    pub separation: f64,
    pub t_values: Vec<usize>,
    pub adversaries: Vec<AdversaryKind>,
    /// Fixed `m`; `None` uses `k·(4 + ceil(log2 t))` per `t`.
    pub m: Option<usize>,
    pub measure: String,
    pub trials: usize,
    pub seed: u64,
    /// Compute offline local-search costs and approximation ratios.
    pub oracle: bool,
}

impl Default for ClusterBenchConfig {
    fn default() -> Self {
        ClusterBenchConfig {
            k: 4,
            n: 2000,
            dim: 1,
            sigma: 1.0,
            separation: 10.0,
            t_values: vec![1, 16, 256],
            adversaries: vec![AdversaryKind::Passthrough, AdversaryKind::DelaySet, AdversaryKind::Sort],
            m: None,
            measure: "linear".into(),
            trials: 10,
            seed: 0,
            oracle: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterTrial {
    pub trial: usize,
    pub t: usize,
    pub adversary: &'static str,
    pub m: usize,
    /// `"ok"` or the error class.
    pub status: String,
    /// Nearest-center cost of the extracted `k` centers over the offline cost.
    pub ratio: Option<f64>,
    /// Nearest-center cost against the whole support of `psi` over the offline cost.
    pub psi_ratio: Option<f64>,
    pub max_support: usize,
    pub support_cap: usize,
    pub max_evals_per_point: u64,
    pub epochs: usize,
    pub l_final: f64,
    /// Checkpoints where the movement cost was not below `20L`.
    pub ledger_violations: usize,
}

struct RunOutcome {
    max_support: usize,
    max_evals_per_point: u64,
    epochs: usize,
    l_final: f64,
    ledger_violations: usize,
    psi: WeightedPointSet<f64>,
}

fn run_one(stream: &[Point<f64>], m: usize, measure: &Measure<f64>, seed: u64) -> Result<RunOutcome> {
    let mut state = ClusterState::new(m, measure.clone(), seed)?;
    let mut ledger_violations = 0;
    for p in stream {
        state.push(p)?;
        if !state.checkpoint().ledger_holds() {
            ledger_violations += 1;
        }
    }
    let r = state.finish();
    Ok(RunOutcome {
        max_support: r.max_support,
        max_evals_per_point: r.max_evals_per_point,
        epochs: r.epochs,
        l_final: r.l_final,
        ledger_violations,
        psi: r.psi_final,
    })
}

fn cluster_trial(cfg: &ClusterBenchConfig, measure: &Measure<f64>, trial: usize) -> Vec<ClusterTrial> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let mix = gaussian_mixture::<f64>(cfg.k, cfg.n, cfg.dim, cfg.sigma, cfg.separation, derive_seed(seed, 0));
    let offline = if cfg.oracle {
        WeightedPointSet::from_points(&mix.points)
            .and_then(|set| local_search_kmedian(&set, cfg.k, measure, DEFAULT_LOCAL_SEARCH_ROUNDS))
            .map(|s| Some(s.value))
    } else {
        Ok(None)
    };
    let mut rows = Vec::new();
    for &t in &cfg.t_values {
        for &adv in &cfg.adversaries {
            let m = cfg.m.unwrap_or_else(|| default_m(cfg.k, t));
            let run_seed = derive_seed(seed, (t as u64) << 8 | adv as u64);
            let outcome = offline.clone().and_then(|offline| {
                let mut strategy = adv.strategy(t, &mix.points, derive_seed(run_seed, 0));
                let stream = semirandom_stream(&mix.points, &mut strategy, t, derive_seed(run_seed, 1))?;
                let run = run_one(&stream.emitted, m, measure, derive_seed(run_seed, 2))?;
                let ratios = match offline {
                    Some(opt) => {
                        let centers = extract_centers(&run.psi, cfg.k, measure)?;
                        let c = cost(&mix.points, &centers, measure)?.value;
                        let support: Vec<Point<f64>> = run.psi.points().cloned().collect();
                        let s = cost(&mix.points, &support, measure)?.value;
                        (Some(c / opt), Some(s / opt))
                    }
                    None => (None, None),
                };
                Ok((run, ratios))
            });
            let cap = SUPPORT_FACTOR * m;
            rows.push(match outcome {
                Ok((run, (ratio, psi_ratio))) => ClusterTrial {
                    trial,
                    t,
                    adversary: adv.name(),
                    m,
                    status: "ok".into(),
                    ratio,
                    psi_ratio,
                    max_support: run.max_support,
                    support_cap: cap,
                    max_evals_per_point: run.max_evals_per_point,
                    epochs: run.epochs,
                    l_final: run.l_final,
                    ledger_violations: run.ledger_violations,
                },
                Err(e) => ClusterTrial {
                    trial,
                    t,
                    adversary: adv.name(),
                    m,
                    status: e.class().into(),
                    ratio: None,
                    psi_ratio: None,
                    max_support: 0,
                    support_cap: cap,
                    max_evals_per_point: 0,
                    epochs: 0,
                    l_final: f64::NAN,
                    ledger_violations: 0,
                },
            });
        }
    }
    rows
}

/// One row per (trial, t, adversary), ordered by trial index.
pub fn bench_cluster_quality(cfg: &ClusterBenchConfig) -> Result<Vec<ClusterTrial>> {
    if cfg.k == 0 || cfg.n < cfg.k || cfg.dim == 0 || !(cfg.sigma > 0.0) {
        return Err(Error::Parameter("cluster bench needs 1 <= k <= n, dim >= 1, sigma > 0".into()));
    }
    if cfg.t_values.contains(&0) {
        return Err(Error::Parameter("t must be at least 1".into()));
    }
    let measure = Measure::euclidean(cfg.measure.parse::<Rho<f64>>()?);
    let per_trial: Vec<Vec<ClusterTrial>> =
        (0..cfg.trials).into_par_iter().map(|i| cluster_trial(cfg, &measure, i)).collect();
    Ok(per_trial.into_iter().flatten().collect())
}

/// Nearest-rank percentile of unsorted samples.
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSummary {
    pub t: usize,
    pub adversary: &'static str,
    pub m: usize,
    pub trials: usize,
    pub failures: usize,
    pub median_ratio: f64,
    pub p95_ratio: f64,
    pub median_psi_ratio: f64,
    pub max_support: usize,
    pub support_cap: usize,
    pub max_evals_per_point: u64,
    pub ledger_violations: usize,
}

pub fn summarize_cluster(trials: &[ClusterTrial]) -> Vec<ClusterSummary> {
    let mut keys: Vec<(usize, &'static str, usize)> = Vec::new();
    for r in trials {
        if !keys.contains(&(r.t, r.adversary, r.m)) {
            keys.push((r.t, r.adversary, r.m));
        }
    }
    keys.into_iter()
        .map(|(t, adversary, m)| {
            let rows: Vec<&ClusterTrial> =
                trials.iter().filter(|r| r.t == t && r.adversary == adversary && r.m == m).collect();
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
            let psi: Vec<f64> = rows.iter().filter_map(|r| r.psi_ratio).collect();
            ClusterSummary {
                t,
                adversary,
                m,
                trials: rows.len(),
                failures: rows.iter().filter(|r| r.status != "ok").count(),
                median_ratio: percentile(&ratios, 0.5),
                p95_ratio: percentile(&ratios, 0.95),
                median_psi_ratio: percentile(&psi, 0.5),
                max_support: rows.iter().map(|r| r.max_support).max().unwrap_or(0),
                support_cap: SUPPORT_FACTOR * m,
                max_evals_per_point: rows.iter().map(|r| r.max_evals_per_point).max().unwrap_or(0),
                ledger_violations: rows.iter().map(|r| r.ledger_violations).sum(),
            }
        })
        .collect()
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn cluster_trials_csv(cfg: &ClusterBenchConfig, rows: &[ClusterTrial]) -> String {
    let mut out = config_line(cfg);
    out.push_str("trial,t,adversary,m,status,ratio,psi_ratio,max_support,support_cap,max_evals_per_point,epochs,l_final,ledger_violations\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.t,
            r.adversary,
            r.m,
            r.status,
            opt_cell(r.ratio),
            opt_cell(r.psi_ratio),
            r.max_support,
            r.support_cap,
            r.max_evals_per_point,
            r.epochs,
            r.l_final,
            r.ledger_violations
        )
        .unwrap();
    }
    out
}

pub fn cluster_summary_csv(cfg: &ClusterBenchConfig, rows: &[ClusterSummary]) -> String {
    let mut out = config_line(cfg);
    out.push_str("t,adversary,m,trials,failures,median_ratio,p95_ratio,median_psi_ratio,max_support,support_cap,max_evals_per_point,ledger_violations\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.adversary,
            r.m,
            r.trials,
            r.failures,
            r.median_ratio,
            r.p95_ratio,
            r.median_psi_ratio,
            r.max_support,
            r.support_cap,
            r.max_evals_per_point,
            r.ledger_violations
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_nearest_rank() {
        let s = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(percentile(&s, 0.5), 3.0);
        assert_eq!(percentile(&s, 0.95), 5.0);
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert!(percentile(&[], 0.5).is_nan());
    }

    #[test]
    fn adversary_names_round_trip() {
        for k in [AdversaryKind::Passthrough, AdversaryKind::DelaySet, AdversaryKind::DepthOrder, AdversaryKind::Sort] {
            assert_eq!(k.name().parse::<AdversaryKind>().unwrap(), k);
        }
        assert!("chaos".parse::<AdversaryKind>().is_err());
    }

    #[test]
    fn small_cluster_sweep_is_complete_and_bounded() {
        let cfg = ClusterBenchConfig {
            k: 2,
            n: 400,
            t_values: vec![1, 8],
            trials: 3,
            ..Default::default()
        };
        let rows = bench_cluster_quality(&cfg).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 3);
        for r in &rows {
            assert_eq!(r.status, "ok");
            assert!(r.max_support <= r.support_cap);
            assert_eq!(r.ledger_violations, 0);
        }
        let again = bench_cluster_quality(&cfg).unwrap();
        assert_eq!(cluster_trials_csv(&cfg, &rows), cluster_trials_csv(&cfg, &again));
        assert_eq!(summarize_cluster(&rows).len(), 6);
    }

    #[test]
    fn depth_order_on_vectors_is_a_recorded_failure() {
        let cfg = ClusterBenchConfig {
            k: 2,
            n: 100,
            t_values: vec![4],
            adversaries: vec![AdversaryKind::DepthOrder],
            trials: 2,
            oracle: false,
            ..Default::default()
        };
        let rows = bench_cluster_quality(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.status == "input"));
    }
}
