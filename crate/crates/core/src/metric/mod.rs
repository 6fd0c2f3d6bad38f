//! Points, dissimilarity measures, weighted sets, cost evaluation and the
//! offline k-median oracles.

pub mod cost;
pub mod measure;
pub mod oracle;
pub mod point;
pub mod tree;
pub mod weighted;

pub use cost::{cost, nearest, weighted_cost, CostReport};
pub use measure::{BaseMetric, DistanceMatrix, Measure, Rho};
pub use oracle::{local_search_kmedian, opt_bar_exact, opt_bar_exact_capped, KMedianSolution, BRUTE_FORCE_CAP};
pub use point::{line_points, Payload, PayloadKind, Point};
pub use tree::{TreeMetric, TreeNode};
pub use weighted::{WeightedPoint, WeightedPointSet};
