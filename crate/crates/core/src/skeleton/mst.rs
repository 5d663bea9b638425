use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Point3, PointCloud};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Euclidean length in mm.
    pub weight: f64,
}

/// Spanning tree over skeleton key points.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    vertices: PointCloud,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl SkeletonGraph {
    /// Builds a graph from an explicit edge list, checking that it is a tree.
    pub fn from_edges(vertices: PointCloud, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = vertices.len();
        if pairs.len() + 1 != n {
            return Err(Error::DegenerateInput("a tree needs exactly n - 1 edges"));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b {
                return Err(Error::DegenerateInput("edge endpoint out of range"));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
            let weight = (vertices.points()[a] - vertices.points()[b]).norm();
            edges.push(Edge { a, b, weight });
        }
        let graph = SkeletonGraph {
            vertices,
            edges,
            adjacency,
        };
        if graph.bfs_parents(0).iter().skip(1).any(|p| p.is_none()) {
            return Err(Error::DegenerateInput("edges do not connect every vertex"));
        }
        Ok(graph)
    }

    pub fn vertices(&self) -> &PointCloud {
        &self.vertices
    }

    pub fn points(&self) -> &[Point3] {
        self.vertices.points()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub(crate) fn bfs_parents(&self, root: usize) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(v);
                    queue.push_back(u);
                }
            }
        }
        parent
    }
}

/// Prim's algorithm on the complete Euclidean graph, grown from vertex 0.
/// Among equally cheap connections the lowest vertex index joins first.
pub fn build_mst(points: &PointCloud) -> Result<SkeletonGraph> {
    let pts = points.points();
    let n = pts.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut in_tree = vec![false; n];
    let mut cost = vec![f64::INFINITY; n];
    let mut link = vec![0usize; n];
    let mut adjacency = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(n - 1);

    in_tree[0] = true;
    for v in 1..n {
        cost[v] = (pts[v] - pts[0]).norm();
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (next == usize::MAX || cost[v] < cost[next]) {
                next = v;
            }
        }
        in_tree[next] = true;
        let (a, b) = (link[next], next);
        edges.push(Edge { a, b, weight: cost[next] });
        adjacency[a].push(b);
        adjacency[b].push(a);
        for v in 0..n {
            if !in_tree[v] {
                let d = (pts[v] - pts[next]).norm();
                if d < cost[v] {
                    cost[v] = d;
                    link[v] = next;
                }
            }
        }
    }
    Ok(SkeletonGraph {
        vertices: points.clone(),
        edges,
        adjacency,
    })
}
