//! Online facility location and streaming k-median for streams whose order
//! is random up to a bounded adversarial reordering.
//!
//! Everything is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix it to `f64`.

pub mod bench;
pub mod compress;
pub mod error;
pub mod io;
pub mod kmedian;
pub mod lowerbound;
pub mod metric;
pub mod ofl;
pub mod order;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use compress::{
    bitree_two_color, compress_b, functional_graph_cycles, nearest_neighbor_map, BiTreeColoring, Compression,
    NearestNeighborMap,
};
pub use error::{Error, Result};
pub use kmedian::{
    cluster_amplified, cluster_ram, cluster_stream, default_m, extract_centers, ClusterRunReport, ClusterState,
    PiMode, RamSolution,
};
pub use lowerbound::{build_tree_instance, opt_certificate, run_lowerbound_experiment, tree_parameters, TreeInstance};
pub use metric::{
    cost, line_points, local_search_kmedian, opt_bar_exact, BaseMetric, DistanceMatrix, Measure, Point, Rho,
    TreeMetric, TreeNode, WeightedPoint, WeightedPointSet,
};
pub use ofl::{ofl_run, OflState};
pub use order::{apply_adversary, min_bound, semirandom_stream, Adversary, AdversaryStrategy, AdversaryTrace};
pub use scalar::Scalar;

pub type Point64 = Point<f64>;
pub type Measure64 = Measure<f64>;
pub type Rho64 = Rho<f64>;
pub type WeightedPointSet64 = WeightedPointSet<f64>;
pub type ClusterRunReport64 = ClusterRunReport<f64>;
pub type OflState64 = OflState<f64>;
pub type TreeInstance64 = TreeInstance<f64>;
