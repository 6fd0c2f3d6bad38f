//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line with its measurements; run with `--nocapture` to see them.

use std::collections::HashSet;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;

use streamclust::bench::{bench_cluster_quality, percentile, AdversaryKind, ClusterBenchConfig};
use streamclust::kmedian::{default_m, ClusterState, SUPPORT_FACTOR};
use streamclust::lowerbound::{build_tree_instance, opt_certificate, run_lowerbound_experiment, LowerBoundConfig};
use streamclust::metric::{cost, Measure, Point, Rho, TreeMetric, WeightedPointSet};
use streamclust::order::{apply_adversary, inverse, min_bound, Action, AdversaryStrategy, HandView, ScriptedOrder, SortByCoordinate};
use streamclust::rng::{seeded, Rng};
use streamclust::{
    bitree_two_color, compress_b, functional_graph_cycles, nearest_neighbor_map, opt_bar_exact, AdversaryTrace,
    OflState,
};

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn random_point(rng: &mut Rng, id: usize, dim: usize, span: f64) -> Point<f64> {
    Point::coords(id, (0..dim).map(|_| rng.random_range(0.0..span)).collect())
}

#[test]
fn criterion_01_compression_guarantee() {
    let start = Instant::now();
    let mut rng = seeded(1);
    let mut violations = Vec::new();
    let mut runs = 0;
    for inst in 0..1000 {
        let n = rng.random_range(2..=14);
        let dim = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let rho = Rho::estimators()[inst % 5];
        let measure = Measure::euclidean(rho);
        let entries: Vec<(Point<f64>, u64)> =
            (0..n).map(|id| (random_point(&mut rng, id, dim, 10.0), rng.random_range(1..=5))).collect();
        let set = WeightedPointSet::from_entries(entries).unwrap();
        let map = nearest_neighbor_map(&set, &measure).unwrap();
        let out = compress_b(&set, k, &map, &measure).unwrap();
        let opt = opt_bar_exact(&set, k.min(n), &measure).unwrap().value;
        runs += 1;
        if out.lambda > opt * (1.0 + 1e-12) + 1e-12 {
            violations.push(format!("inst {inst}: lambda {} > opt {opt}", out.lambda));
        }
        if out.z.len() > (n + k) / 2 {
            violations.push(format!("inst {inst}: |Z| {} > {}", out.z.len(), (n + k) / 2));
        }
        if out.z.total_weight() != set.total_weight() {
            violations.push(format!("inst {inst}: weight not preserved"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        violations.is_empty() && secs < 60.0,
        format!("{runs} instances, {} violations, {secs:.1}s {:?}", violations.len(), violations.first()),
    );
}

#[test]
fn criterion_02_nearest_neighbor_cycles() {
    let mut rng = seeded(2);
    let mut bad_cycles = 0;
    let mut improper = 0;
    for inst in 0..1000 {
        let n = rng.random_range(2..=200);
        let dim = rng.random_range(1..=5);
        let grid = inst % 2 == 0;
        let points: Vec<Point<f64>> = (0..n)
            .map(|id| {
                if grid {
                    Point::coords(id, (0..dim).map(|_| rng.random_range(0..4) as f64).collect())
                } else {
                    random_point(&mut rng, id, dim, 1.0)
                }
            })
            .collect();
        let set = WeightedPointSet::from_points(&points).unwrap();
        let map = nearest_neighbor_map(&set, &Measure::linear()).unwrap();
        bad_cycles += functional_graph_cycles(map.images()).iter().filter(|&&c| c != 2).count();
        match bitree_two_color(&map) {
            Ok(c) if c.is_proper(map.images()) => {}
            _ => improper += 1,
        }
    }
    report(2, bad_cycles == 0 && improper == 0, format!("1000 sets, {bad_cycles} bad cycles, {improper} improper colorings"));
}

/// Exact expected waiting cost for a fixed order of distances to the single
/// open facility, with `f = 1`.
fn exact_waiting_cost(dists: &[f64]) -> f64 {
    let mut survive = 1.0;
    let mut total = 0.0;
    for &d in dists {
        let p = d.min(1.0);
        total += survive * (1.0 - p) * d;
        survive *= 1.0 - p;
    }
    total
}

#[test]
fn criterion_03_waiting_cost() {
    let mut rng = seeded(3);
    let measure = Measure::linear();
    let mut worst = String::new();
    let mut pass = true;
    let mut max_mean: f64 = 0.0;
    for order_idx in 0..20 {
        // Mixed scales: most points close to the facility, a few far away.
        let mut dists: Vec<f64> = (0..50)
            .map(|_| match rng.random_range(0..3) {
                0 => rng.random_range(0.001..0.05),
                1 => rng.random_range(0.05..0.5),
                _ => rng.random_range(0.5..3.0),
            })
            .collect();
        match order_idx % 4 {
            0 => dists.sort_by(f64::total_cmp),
            1 => dists.sort_by(|a, b| b.total_cmp(a)),
            2 => dists.shuffle(&mut rng),
            _ => {
                dists.sort_by(f64::total_cmp);
                let far = dists.split_off(25);
                dists = dists.into_iter().zip(far).flat_map(|(a, b)| [a, b]).collect();
            }
        }
        let facility = Point::coords(0, vec![0.0]);
        let zs: Vec<Point<f64>> = dists.iter().enumerate().map(|(i, &d)| Point::coords(i + 1, vec![d])).collect();
        let trials = 10_000;
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut state = OflState::new(1.0).unwrap();
            state.step(&facility, 0.0, &measure);
            let mut waited = 0.0;
            for z in &zs {
                let u: f64 = rng.random();
                let d = state.step(z, u, &measure);
                if d.opened {
                    break;
                }
                waited += d.delta.unwrap();
            }
            samples.push(waited);
        }
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let exact = exact_waiting_cost(&dists);
        max_mean = max_mean.max(mean);
        if !(mean < 1.0 + 3.0 * se) || (mean - exact).abs() > 5.0 * se + 1e-9 {
            pass = false;
            worst = format!("order {order_idx}: mean {mean}, se {se}, exact {exact}");
        }
    }
    report(3, pass, format!("20 orders x 10^4 trials, max mean {max_mean:.4} {worst}"));
}

#[test]
fn criterion_04_space_bound() {
    let cfg = ClusterBenchConfig {
        k: 1,
        n: 1500,
        dim: 2,
        t_values: vec![1, 16, 256],
        adversaries: vec![AdversaryKind::Passthrough, AdversaryKind::DelaySet, AdversaryKind::Sort],
        trials: 112,
        seed: 4,
        oracle: false,
        ..Default::default()
    };
    let rows = bench_cluster_quality(&cfg).unwrap();
    let mut runs = rows.len();
    let mut failures = rows.iter().filter(|r| r.status != "ok").count();
    let mut breaches = rows.iter().filter(|r| r.max_support > r.support_cap).count();
    let mut eval_breaches = rows
        .iter()
        .filter(|r| r.max_evals_per_point > 40 * r.support_cap as u64)
        .count();
    let mut max_evals_ratio = rows
        .iter()
        .map(|r| r.max_evals_per_point as f64 / r.support_cap as f64)
        .fold(0.0, f64::max);

    // Depth-ordered tree streams cover the remaining strategy.
    for (i, &t) in [16usize, 256].iter().cycle().take(40).enumerate() {
        let inst = build_tree_instance::<f64>(t, 8, 2000, 1.0, 400 + i as u64).unwrap();
        let m = default_m(1, t);
        let mut adv = AdversaryStrategy::DepthOrder { capacity: t };
        let (stream, _) = apply_adversary(&inst.demands, &mut adv, t, i as u64).unwrap();
        runs += 1;
        match streamclust::cluster_stream(&stream, m, &inst.measure, i as u64) {
            Ok(r) => {
                let cap = SUPPORT_FACTOR * m;
                breaches += usize::from(r.max_support > cap);
                eval_breaches += usize::from(r.max_evals_per_point > 40 * cap as u64);
                max_evals_ratio = max_evals_ratio.max(r.max_evals_per_point as f64 / cap as f64);
            }
            Err(_) => failures += 1,
        }
    }
    report(
        4,
        runs >= 1000 && failures == 0 && breaches == 0 && eval_breaches == 0,
        format!(
            "{runs} runs, {failures} failures, {breaches} support breaches, {eval_breaches} eval breaches, max evals/29m {max_evals_ratio:.2}"
        ),
    );
}

#[test]
fn criterion_05_cost_ledger() {
    let mut rng = seeded(5);
    let mut checkpoints = 0u64;
    let mut violations = 0u64;
    let mut audit_violations = 0u64;
    for run in 0..100 {
        let n = rng.random_range(200..=2000);
        let dim = rng.random_range(1..=3);
        let m = rng.random_range(2..=12);
        let points: Vec<Point<f64>> = if run % 2 == 0 {
            streamclust::synth::gaussian_mixture(rng.random_range(1..=6), n, dim, 1.0, 8.0, run).points
        } else {
            (0..n).map(|id| random_point(&mut rng, id, dim, 100.0)).collect()
        };
        let measure = Measure::linear();
        let mut state = ClusterState::new(m, measure.clone(), run).unwrap();
        for (i, p) in points.iter().enumerate() {
            state.push(p).unwrap();
            let cp = state.checkpoint();
            checkpoints += 1;
            if !cp.ledger_holds() {
                violations += 1;
            }
            // Nearest-support cost of the prefix never exceeds the ledger.
            if i % 97 == 0 || i + 1 == n {
                let support: Vec<Point<f64>> = cp.psi.points().cloned().collect();
                let seen = cost(&points[..=i], &support, &measure).unwrap().value;
                let bound = if cp.l == 0.0 { 0.0 } else { 20.0 * cp.l };
                if seen > cp.constructive_cost * (1.0 + 1e-9) + 1e-9 || (cp.l == 0.0 && seen > 0.0) || (cp.l > 0.0 && seen >= bound) {
                    audit_violations += 1;
                }
            }
        }
    }
    report(
        5,
        violations == 0 && audit_violations == 0,
        format!("100 runs, {checkpoints} checkpoints, {violations} ledger violations, {audit_violations} audit violations"),
    );
}

#[test]
fn criterion_06_quality_at_t1() {
    let start = Instant::now();
    let cfg = ClusterBenchConfig {
        k: 4,
        n: 5000,
        dim: 2,
        sigma: 1.0,
        separation: 10.0,
        t_values: vec![1],
        adversaries: vec![AdversaryKind::Passthrough],
        m: Some(16),
        trials: 50,
        seed: 6,
        oracle: true,
        ..Default::default()
    };
    let rows = bench_cluster_quality(&cfg).unwrap();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let median = percentile(&ratios, 0.5);
    let p95 = percentile(&ratios, 0.95);
    let secs = start.elapsed().as_secs_f64();
    report(
        6,
        ratios.len() == 50 && median <= 3.0 && p95 <= 6.0 && secs < 300.0,
        format!("{} ratios, median {median:.4}, p95 {p95:.4}, {secs:.1}s", ratios.len()),
    );
}

#[test]
fn criterion_07_ratio_grows_with_t() {
    let cfg = LowerBoundConfig { t_values: vec![4, 16, 256, 65536], z: 64, n: 0, f: 1.0, trials: 500, seed: 7 };
    let rows = run_lowerbound_experiment::<f64>(&cfg).unwrap();
    let mut monotone = true;
    for w in rows.windows(2) {
        let se = (w[0].adversarial.stderr.powi(2) + w[1].adversarial.stderr.powi(2)).sqrt();
        monotone &= w[1].adversarial.mean >= w[0].adversarial.mean - 2.0 * se;
    }
    let failures: usize = rows.iter().map(|r| r.adversarial.failures).sum();
    let first = rows[0].adversarial.mean;
    let last = rows[rows.len() - 1].adversarial.mean;
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("t={} {:.4}+-{:.4}", r.t, r.adversarial.mean, r.adversarial.stderr))
        .collect();
    report(
        7,
        monotone && failures == 0 && last >= 1.25 * first,
        format!("{}; growth {:.3}x", table.join(", "), last / first),
    );
}

#[test]
fn criterion_08_lower_bound_instances() {
    let mut rng = seeded(8);
    let mut instances = 0;
    let mut cert_failures = 0;
    for _ in 0..300 {
        let t = [4usize, 16, 100, 256, 1000, 4096, 65536][rng.random_range(0..7)];
        let z = rng.random_range(2..=64);
        let f = rng.random_range(0.1..10.0);
        let inst = build_tree_instance::<f64>(t, z, t, f, rng.random()).unwrap();
        instances += 1;
        match opt_certificate(&inst) {
            Ok(c) if c < 3.0 * f => {}
            _ => cert_failures += 1,
        }
    }
    let mut triangle_failures = 0;
    let mut triples = 0u64;
    for z in 2..=4u64 {
        for h in 1..=3u32 {
            for ratio in [2.0, 3.0, 5.0] {
                let metric = TreeMetric::new(z, h, 1.0, ratio).unwrap();
                let nodes = metric.nodes();
                for &a in &nodes {
                    for &b in &nodes {
                        let ab = metric.distance(a, b);
                        for &c in &nodes {
                            triples += 1;
                            if ab > metric.distance(a, c) + metric.distance(c, b) + 1e-12 {
                                triangle_failures += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    report(
        8,
        cert_failures == 0 && triangle_failures == 0,
        format!("{instances} instances, {cert_failures} certificate failures, {triples} triples, {triangle_failures} triangle failures"),
    );
}

/// Smallest hand that can produce `sigma` (arrival -> emission position),
/// by direct simulation of the emission schedule.
fn simulated_bound(sigma: &[usize]) -> usize {
    let n = sigma.len();
    let mut order = vec![0; n];
    for (arrival, &pos) in sigma.iter().enumerate() {
        order[pos] = arrival;
    }
    let mut drawn = 0;
    let mut hand = 0;
    let mut peak = 0;
    for &a in &order {
        while drawn <= a {
            drawn += 1;
            hand += 1;
            peak = peak.max(hand);
        }
        hand -= 1;
    }
    peak
}

struct RandomAdversary {
    capacity: usize,
}

impl streamclust::Adversary<f64> for RandomAdversary {
    fn act(&mut self, view: &HandView<'_, f64>, rng: &mut Rng) -> streamclust::Result<Action> {
        let can_draw = view.deck_remaining > 0 && view.hand.len() < self.capacity;
        if view.hand.is_empty() || (can_draw && rng.random_bool(0.6)) {
            Ok(Action::Draw)
        } else {
            Ok(Action::Emit(rng.random_range(0..view.hand.len())))
        }
    }
}

#[test]
fn criterion_09_order_checker() {
    let identity_ok = (1..=20).all(|n| min_bound(&(0..n).collect::<Vec<_>>()).unwrap() == 1);
    let reverse_ok = (2..=20).all(|n| min_bound(&(0..n).rev().collect::<Vec<_>>()).unwrap() == n);
    let mut rng = seeded(9);
    let mut bad = 0;
    for run in 0..1000 {
        let n = rng.random_range(1..=120);
        let t = rng.random_range(1..=n.max(2));
        let points: Vec<Point<f64>> = (0..n).map(|id| random_point(&mut rng, id, 1, 1.0)).collect();
        let seed = rng.random();
        let (result, cap) = match run % 4 {
            0 => {
                let targets: HashSet<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
                (apply_adversary(&points, &mut AdversaryStrategy::DelaySet { targets, capacity: t }, t, seed), t)
            }
            1 => (apply_adversary(&points, &mut SortByCoordinate { capacity: t, axis: 0 }, t, seed), t),
            2 => (apply_adversary(&points, &mut RandomAdversary { capacity: t }, t, seed), t),
            _ => {
                // A scripted order replays only with a hand as large as it needs.
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                let cap = simulated_bound(&inverse(&order).unwrap());
                (apply_adversary(&points, &mut ScriptedOrder::new(order).unwrap(), cap, seed), cap)
            }
        };
        let (_, trace): (_, AdversaryTrace) = result.unwrap();
        if trace.hand_high_water > cap
            || trace.peak_hand > cap
            || trace.hand_high_water != simulated_bound(&trace.sigma)
        {
            bad += 1;
        }
    }
    report(
        9,
        identity_ok && reverse_ok && bad == 0,
        format!("identity {identity_ok}, reverse {reverse_ok}, 1000 traces, {bad} over bound or mismatched"),
    );
}

fn triple(rng: &mut Rng) -> (f64, f64, f64) {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    let a = rng.random_range(0.0..1.0) * scale;
    let b = rng.random_range(0.0..1.0) * scale;
    let c = rng.random_range(0.0..=1.0) * (a + b);
    (a, b, c)
}

#[test]
fn criterion_10_beta_constants() {
    let mut rng = seeded(10);
    let mut measures: Vec<Rho<f64>> = Rho::estimators().to_vec();
    measures.extend([1.0, 1.5, 2.0, 3.0, 8.0].map(|p| Rho::lp_power(p).unwrap()));
    let mut soundness = Vec::new();
    for rho in &measures {
        let beta = rho.beta();
        let bad = (0..100_000)
            .filter(|_| {
                let (a, b, c) = triple(&mut rng);
                let rhs = beta * (rho.apply(a) + rho.apply(b));
                rho.apply(c) > rhs * (1.0 + 1e-12)
            })
            .count();
        soundness.push((rho.name(), bad));
    }
    let mut tightness = Vec::new();
    for rho in [Rho::Gaussian, Rho::Huber] {
        let below = rho.beta() - 0.01;
        let found = (0..1_000_000)
            .filter(|_| {
                let (a, b, c) = triple(&mut rng);
                rho.apply(c) > below * (rho.apply(a) + rho.apply(b))
            })
            .count();
        tightness.push((rho.name(), found));
    }
    let pass = soundness.iter().all(|s| s.1 == 0) && tightness.iter().all(|s| s.1 > 0);
    report(10, pass, format!("violations at beta {soundness:?}; violations at beta-0.01 {tightness:?}"));
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_streamclust"))
        .args(args)
        .env_remove("STREAMCLUST_SEED")
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn criterion_11_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("points.csv");
    let mix = streamclust::synth::gaussian_mixture::<f64>(3, 400, 2, 1.0, 10.0, 11);
    let body: String = mix.points.iter().map(|p| {
        let c = p.as_coords().unwrap();
        format!("{},{}\n", c[0], c[1])
    }).collect();
    std::fs::write(&pts, body).unwrap();
    let trace = dir.path().join("trace.json");
    let input = pts.to_str().unwrap();
    let (code, bytes) = run_cli(&["check-order", "--input", input, "--t", "8", "--adversary", "delay-set", "--seed", "3"]);
    assert_eq!(code, 0);
    std::fs::write(&trace, &bytes).unwrap();
    let trace = trace.to_str().unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["ofl", "--input", input, "--f", "5", "--measure", "linear", "--seed", "3"],
        vec!["ofl", "--input", input, "--f", "5", "--seed", "3", "--order-file", trace],
        vec!["compress", "--input", input, "--k", "3", "--measure", "huber"],
        vec!["cluster", "--input", input, "--k", "3", "--t", "16", "--delta", "0.1", "--seed", "3", "--adversary", "sort"],
        vec!["lowerbound", "--t-list", "4,16", "--z", "8", "--n", "64", "--f", "1", "--trials", "20", "--seed", "3"],
        vec!["bench-ratio", "--t-list", "4,256", "--trials", "10", "--seed", "3"],
        vec!["bench-cluster", "--k", "2", "--n", "300", "--t-list", "1,8", "--trials", "4", "--seed", "3"],
        vec!["check-order", "--trace", trace],
        vec!["check-order", "--n", "50", "--t", "5", "--adversary", "delay-set", "--seed", "3"],
    ];
    let mut mismatched = Vec::new();
    for args in &commands {
        let (c1, o1) = run_cli(args);
        let (c2, o2) = run_cli(args);
        if c1 != 0 || c2 != 0 || o1 != o2 || o1.is_empty() {
            mismatched.push(args[0]);
        }
    }
    report(11, mismatched.is_empty(), format!("{} invocations twice each, differing or failing: {mismatched:?}", commands.len()));
}
