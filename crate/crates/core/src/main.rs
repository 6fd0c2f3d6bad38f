use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use streamclust::bench::{
    bench_cluster_quality, bench_ratio_vs_t, cluster_summary_csv, cluster_trials_csv, ratio_table_csv,
    summarize_cluster, AdversaryKind, ClusterBenchConfig,
};
use streamclust::io::{ingest_points, read_trace, Dataset, InputFormat};
use streamclust::kmedian::{cluster_amplified, default_m, extract_centers};
use streamclust::lowerbound::LowerBoundConfig;
use streamclust::metric::{cost, Point, Rho};
use streamclust::order::{apply_adversary, min_bound, random_shuffle};
use streamclust::rng::derive_seed;
use streamclust::{compress_b, nearest_neighbor_map, ofl_run, Error, Result, WeightedPointSet};

const SEED_ENV: &str = "STREAMCLUST_SEED";

#[derive(Parser)]
#[command(name = "streamclust", version, about = "Streaming clustering under semirandom orders")]
struct Cli {
    /// Worker threads for parallel trials (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: InputFormat,
    /// linear, gaussian, huber, cauchy, tukey or lp:<p>.
    #[arg(long, default_value = "linear")]
    measure: Rho<f64>,
}

#[derive(Args)]
struct Seed {
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Online facility location over the input in file order.
    Ofl {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        f: f64,
        #[command(flatten)]
        seed: Seed,
        /// Reorder the input by a trace before running.
        #[arg(long)]
        order_file: Option<PathBuf>,
    },
    /// One compression step; prints the weighted set and its cost.
    Compress {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
    },
    /// Streaming k-median over a t-semirandom order of the input.
    Cluster {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[command(flatten)]
        seed: Seed,
        #[arg(long, default_value = "passthrough")]
        adversary: AdversaryKind,
        /// Stream the input in file order instead of shuffling it first.
        #[arg(long)]
        no_shuffle: bool,
    },
    /// Mean OFL ratio on the lower-bound tree family.
    Lowerbound {
        #[command(flatten)]
        sweep: RatioSweep,
    },
    /// `lowerbound` plus the random-order control and trial counts.
    BenchRatio {
        #[command(flatten)]
        sweep: RatioSweep,
    },
    /// Clustering quality and space over synthetic mixtures.
    BenchCluster {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,16,256")]
        t_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "passthrough,delay-set,sort")]
        adversaries: Vec<AdversaryKind>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value = "linear")]
        measure: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[command(flatten)]
        seed: Seed,
        /// Skip the offline oracle (no ratio columns).
        #[arg(long)]
        no_oracle: bool,
        /// Print per-trial rows instead of the summary.
        #[arg(long)]
        per_trial: bool,
    },
    /// Audits a trace (`--trace`) or generates one for an input.
    CheckOrder {
        #[arg(long, conflicts_with_all = ["input", "n"])]
        trace: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: InputFormat,
        /// Generate over ids 0..n on a line instead of an input file.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value = "passthrough")]
        adversary: AdversaryKind,
        #[command(flatten)]
        seed: Seed,
    },
}

#[derive(Args)]
struct RatioSweep {
    #[arg(long, value_delimiter = ',', default_value = "4,16,256")]
    t_list: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    z: u64,
    #[arg(long, default_value_t = 0)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    seed: Seed,
}

impl RatioSweep {
    fn config(&self) -> LowerBoundConfig {
        LowerBoundConfig {
            t_values: self.t_list.clone(),
            z: self.z,
            n: self.n,
            f: self.f,
            trials: self.trials,
            seed: self.seed.seed,
        }
    }
}

fn load(input: &Input) -> Result<Dataset<f64>> {
    ingest_points(&input.input, input.format)
}

fn print_json<S: Serialize>(value: &S) {
    println!("{}", serde_json::to_string_pretty(value).expect("serialisable output"));
}

fn center_json(p: &Point<f64>) -> serde_json::Value {
    match p.as_coords() {
        Some(c) => json!({ "id": p.id, "coords": c }),
        None => json!({ "id": p.id }),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ofl { input, f, seed, order_file } => {
            let data = load(&input)?;
            let measure = data.measure(input.measure);
            let stream = match order_file {
                Some(path) => read_trace(&path)?.reorder(&data.points)?,
                None => data.points,
            };
            measure.check_all(&stream)?;
            let state = ofl_run(&stream, f, &measure, seed.seed)?;
            let facilities: Vec<usize> = state.facilities().iter().map(|p| p.id).collect();
            print_json(&json!({
                "facilities": facilities,
                "facility_cost": state.total_facility_cost(),
                "connection_cost": state.total_connection_cost(),
                "total": state.total_cost(),
            }));
        }
        Command::Compress { input, k } => {
            let data = load(&input)?;
            let measure = data.measure(input.measure);
            measure.check_all(&data.points)?;
            let set = WeightedPointSet::from_points(&data.points)?;
            let map = nearest_neighbor_map(&set, &measure)?;
            let out = compress_b(&set, k, &map, &measure)?;
            let mut z: Vec<_> = out.z.entries().to_vec();
            z.sort_by_key(|e| e.point.id);
            println!("id,weight");
            for e in &z {
                println!("{},{}", e.point.id, e.weight);
            }
            println!("# lambda,{}", out.lambda);
        }
        Command::Cluster { input, k, m, t, delta, seed, adversary, no_shuffle } => {
            if k == 0 {
                return Err(Error::Parameter("k must be positive".into()));
            }
            if t == 0 {
                return Err(Error::Parameter("t must be at least 1".into()));
            }
            let data = load(&input)?;
            let measure = data.measure(input.measure);
            measure.check_all(&data.points)?;
            let seed = seed.seed;
            let m = m.unwrap_or_else(|| default_m(k, t));
            let deck: Vec<Point<f64>> = if no_shuffle {
                data.points.clone()
            } else {
                random_shuffle(data.points.len(), derive_seed(seed, 0))
                    .into_iter()
                    .map(|i| data.points[i].clone())
                    .collect()
            };
            let mut strategy = adversary.strategy(t, &deck, derive_seed(seed, 1));
            let (stream, _) = apply_adversary(&deck, &mut strategy, t, derive_seed(seed, 2))?;
            let report = cluster_amplified(&stream, m, &measure, delta, derive_seed(seed, 3))?;
            let centers = extract_centers(&report.psi_final, k, &measure)?;
            let c = cost(&data.points, &centers, &measure)?.value;
            print_json(&json!({
                "centers": centers.iter().map(center_json).collect::<Vec<_>>(),
                "cost": c,
                "l_final": report.l_final,
                "max_support": report.max_support,
                "epochs": report.epochs,
                "m": m,
                "instance": report.instance,
                "degenerate": report.degenerate,
            }));
        }
        Command::Lowerbound { sweep } => {
            let cfg = sweep.config();
            print!("{}", ratio_table_csv(&cfg, &bench_ratio_vs_t(&cfg)?, false));
        }
        Command::BenchRatio { sweep } => {
            let cfg = sweep.config();
            print!("{}", ratio_table_csv(&cfg, &bench_ratio_vs_t(&cfg)?, true));
        }
        Command::BenchCluster {
            k,
            n,
            dim,
            separation,
            t_list,
            adversaries,
            m,
            measure,
            trials,
            seed,
            no_oracle,
            per_trial,
        } => {
            let cfg = ClusterBenchConfig {
                k,
                n,
                dim,
                sigma: 1.0,
                separation,
                t_values: t_list,
                adversaries,
                m,
                measure,
                trials,
                seed: seed.seed,
                oracle: !no_oracle,
            };
            let rows = bench_cluster_quality(&cfg)?;
            if per_trial {
                print!("{}", cluster_trials_csv(&cfg, &rows));
            } else {
                print!("{}", cluster_summary_csv(&cfg, &summarize_cluster(&rows)));
            }
            if let Some(r) = rows.iter().find(|r| r.status == "ok" && r.max_support > r.support_cap) {
                return Err(Error::Invariant(format!(
                    "trial {} held {} points, cap {}",
                    r.trial, r.max_support, r.support_cap
                )));
            }
        }
        Command::CheckOrder { trace, input, format, n, t, adversary, seed } => {
            if let Some(path) = trace {
                let trace = read_trace(&path)?;
                print_json(&json!({ "n": trace.sigma.len(), "min_bound": min_bound(&trace.sigma)? }));
                return Ok(());
            }
            let points: Vec<Point<f64>> = match (input, n) {
                (Some(path), _) => ingest_points(&path, format)?.points,
                (None, Some(n)) => (0..n).map(|i| Point::coords(i, vec![i as f64])).collect(),
                (None, None) => return Err(Error::Parameter("check-order needs --trace, --input or --n".into())),
            };
            let mut strategy = adversary.strategy(t, &points, derive_seed(seed.seed, 0));
            let (_, trace) = apply_adversary(&points, &mut strategy, t, derive_seed(seed.seed, 1))?;
            println!("{}", serde_json::to_string(&trace).expect("serialisable trace"));
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) | Error::Protocol { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let outcome = run(cli);
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
