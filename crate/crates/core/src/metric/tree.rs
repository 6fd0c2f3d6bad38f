//! Complete z-ary tree metric with geometrically shrinking edge lengths.
//!
//! The edge from a depth-`i` node to each of its children has length
//! `scale·r^{-i} − scale·r^{-i-1}`, so the distance from a depth-`i` node up
//! to its depth-`j` ancestor telescopes to `scale·(r^{-j} − r^{-i})`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A tree node identified by its depth and the base-`z` encoding of the
/// child indices on the path from the root (most significant digit first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeNode {
    pub depth: u32,
    pub path: u64,
}

impl TreeNode {
    pub const ROOT: TreeNode = TreeNode { depth: 0, path: 0 };
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeMetric<T> {
    branching: u64,
    height: u32,
    scale: T,
    ratio: T,
    /// `scale·ratio^{-i}` for `i = 0..=height`.
    level: Vec<T>,
}

impl<T: Scalar> TreeMetric<T> {
    pub fn new(branching: u64, height: u32, scale: T, ratio: T) -> Result<Self> {
        if branching < 2 {
            return Err(Error::Parameter(format!("branching factor {branching} < 2")));
        }
        if !(scale > T::zero()) || !(ratio > T::one()) {
            return Err(Error::Parameter("tree metric needs scale > 0 and ratio > 1".into()));
        }
        if branching.checked_pow(height).is_none() {
            return Err(Error::Parameter(format!(
                "tree with branching {branching} and height {height} has too many nodes"
            )));
        }
        let level = (0..=height).map(|i| scale * ratio.powi(-(i as i32))).collect();
        Ok(TreeMetric { branching, height, scale, ratio, level })
    }

    pub fn branching(&self) -> u64 {
        self.branching
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn ratio(&self) -> T {
        self.ratio
    }

    pub fn contains(&self, node: &TreeNode) -> bool {
        node.depth <= self.height && node.path < self.branching.pow(node.depth)
    }

    /// Child `index` (0-based) of `node`.
    pub fn child(&self, node: TreeNode, index: u64) -> TreeNode {
        debug_assert!(index < self.branching && node.depth < self.height);
        TreeNode { depth: node.depth + 1, path: node.path * self.branching + index }
    }

    /// Length of the edge from a depth-`depth` node to any of its children.
    pub fn edge_length(&self, depth: u32) -> T {
        self.level[depth as usize] - self.level[depth as usize + 1]
    }

    fn ancestor(&self, node: TreeNode, depth: u32) -> u64 {
        node.path / self.branching.pow(node.depth - depth)
    }

    /// Depth of the lowest common ancestor.
    pub fn lca_depth(&self, a: TreeNode, b: TreeNode) -> u32 {
        let mut c = a.depth.min(b.depth);
        while c > 0 && self.ancestor(a, c) != self.ancestor(b, c) {
            c -= 1;
        }
        c
    }

    /// Shortest-path distance.
    pub fn distance(&self, a: TreeNode, b: TreeNode) -> T {
        if a == b {
            return T::zero();
        }
        let c = self.lca_depth(a, b) as usize;
        let up = |n: TreeNode| self.level[c] - self.level[n.depth as usize];
        up(a) + up(b)
    }

    /// Every node of the tree in breadth-first order. Only sensible for
    /// small trees (exhaustive checks).
    pub fn nodes(&self) -> Vec<TreeNode> {
        (0..=self.height)
            .flat_map(|d| (0..self.branching.pow(d)).map(move |path| TreeNode { depth: d, path }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_telescope_along_a_path() {
        let t = TreeMetric::<f64>::new(3, 3, 1.0, 2.0).unwrap();
        let a = t.child(TreeNode::ROOT, 1);
        let b = t.child(a, 2);
        let c = t.child(b, 0);
        assert_eq!(t.distance(TreeNode::ROOT, a), 0.5);
        assert_eq!(t.distance(a, b), 0.25);
        assert_eq!(t.distance(TreeNode::ROOT, c), 1.0 - 0.125);
        let sib = t.child(TreeNode::ROOT, 0);
        assert_eq!(t.distance(a, sib), 1.0);
        assert_eq!(t.lca_depth(c, b), 2);
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(TreeMetric::<f64>::new(1, 2, 1.0, 2.0).is_err());
        assert!(TreeMetric::<f64>::new(2, 2, 1.0, 1.0).is_err());
        assert!(TreeMetric::<f64>::new(1 << 32, 3, 1.0, 2.0).is_err());
    }

    #[test]
    fn exhaustive_triangle_inequality_small_trees() {
        for z in 2..=3u64 {
            for h in 1..=3u32 {
                let t = TreeMetric::<f64>::new(z, h, 1.0, 3.0).unwrap();
                let nodes = t.nodes();
                for &a in &nodes {
                    for &b in &nodes {
                        assert_eq!(t.distance(a, b), t.distance(b, a));
                        for &c in &nodes {
                            let lhs = t.distance(a, c);
                            let rhs = t.distance(a, b) + t.distance(b, c);
                            assert!(lhs <= rhs + 1e-12, "{a:?} {b:?} {c:?}");
                        }
                    }
                }
            }
        }
    }
}
