use std::fmt;

use crate::metric::tree::TreeNode;

/// Location of a point: raw coordinates or a reference into an explicit
/// finite metric.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload<T> {
    Coords(Vec<T>),
    /// Row index into a distance matrix.
    Node(usize),
    /// Node of a complete z-ary tree metric.
    Tree(TreeNode),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PayloadKind {
    Coords,
    Node,
    Tree,
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PayloadKind::Coords => "coordinates",
            PayloadKind::Node => "matrix node",
            PayloadKind::Tree => "tree node",
        })
    }
}

impl<T> Payload<T> {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Coords(_) => PayloadKind::Coords,
            Payload::Node(_) => PayloadKind::Node,
            Payload::Tree(_) => PayloadKind::Tree,
        }
    }
}

/// A point of a dataset. The `id` is the global order used by every
/// tie-breaking rule in the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    pub id: usize,
    pub payload: Payload<T>,
}

impl<T> Point<T> {
    pub fn coords(id: usize, coords: Vec<T>) -> Self {
        Point { id, payload: Payload::Coords(coords) }
    }

    pub fn node(id: usize, node: usize) -> Self {
        Point { id, payload: Payload::Node(node) }
    }

    pub fn tree(id: usize, node: TreeNode) -> Self {
        Point { id, payload: Payload::Tree(node) }
    }

    pub fn kind(&self) -> PayloadKind {
        self.payload.kind()
    }

    /// Coordinates, if this is a vector point.
    pub fn as_coords(&self) -> Option<&[T]> {
        match &self.payload {
            Payload::Coords(c) => Some(c),
            _ => None,
        }
    }

    /// Depth in the tree metric, if this is a tree point.
    pub fn depth(&self) -> Option<u32> {
        match &self.payload {
            Payload::Tree(n) => Some(n.depth),
            _ => None,
        }
    }
}

/// Unit-spaced 1-D points `values[i]` with ids `0..n`; handy for tests and
/// small oracles.
pub fn line_points<T: Copy>(values: &[T]) -> Vec<Point<T>> {
    values.iter().enumerate().map(|(i, &v)| Point::coords(i, vec![v])).collect()
}
