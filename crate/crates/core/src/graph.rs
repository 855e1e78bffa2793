//! ε-ball connectivity graph over a point cloud.
//!
//! The radius ε is the cloud-wide mean distance from a point to its `k`
//! nearest neighbours; `k` is used for nothing else. Edges join every pair
//! of distinct-position points at most `epsilon_scale · ε` apart.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::parallel;
use crate::spatial::KdTree;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodGraph {
    adjacency: Vec<Vec<usize>>,
    /// Connection radius actually used (scaled).
    pub epsilon: f64,
    /// The unscaled mean-kNN estimate.
    pub base_epsilon: f64,
    pub k: usize,
}

impl NeighborhoodGraph {
    /// Builds a graph from explicit undirected edges. Used for hand-made
    /// graphs in tests and tools; `epsilon` is recorded as given.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], epsilon: f64) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Self {
            adjacency,
            epsilon,
            base_epsilon: epsilon,
            k: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Sorted neighbour indices of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Every undirected edge once, as `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Diagnostic dump: one `i j` pair per line, `i < j`.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn check_size(cloud: &PointCloud, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "must be positive"));
    }
    if cloud.len() < k + 1 {
        return Err(Error::CloudTooSmall {
            points: cloud.len(),
            required: k + 1,
        });
    }
    Ok(())
}

/// Mean over all points of the mean distance to their `k` nearest
/// neighbours (the point itself excluded).
pub fn estimate_epsilon(cloud: &PointCloud, k: usize) -> Result<f64> {
    check_size(cloud, k)?;
    let index = KdTree::new(&cloud.points);
    estimate_epsilon_with(&index, k)
}

pub fn estimate_epsilon_with(index: &KdTree, k: usize) -> Result<f64> {
    if k == 0 || index.len() < k + 1 {
        return Err(Error::CloudTooSmall {
            points: index.len(),
            required: k + 1,
        });
    }
    let mut sums = parallel::map_range(index.len(), |i| {
        index
            .knn_of(i, k)
            .expect("k checked above")
            .iter()
            .map(|n| n.distance)
            .sum::<f64>()
    });
    // sorted accumulation makes the estimate independent of point order
    sums.sort_by(f64::total_cmp);
    let total: f64 = sums.iter().sum();
    Ok(total / (index.len() as f64 * k as f64))
}

/// ε-ball graph with radius `epsilon_scale · estimate_epsilon(cloud, k)`.
pub fn build_graph(cloud: &PointCloud, k: usize, epsilon_scale: f64) -> Result<NeighborhoodGraph> {
    check_size(cloud, k)?;
    let index = KdTree::new(&cloud.points);
    build_graph_with(&index, k, epsilon_scale)
}

pub fn build_graph_with(index: &KdTree, k: usize, epsilon_scale: f64) -> Result<NeighborhoodGraph> {
    if !(epsilon_scale > 0.0 && epsilon_scale.is_finite()) {
        return Err(Error::invalid("epsilon_scale", "must be positive and finite"));
    }
    let base = estimate_epsilon_with(index, k)?;
    let epsilon = base * epsilon_scale;
    if epsilon <= 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    let points = index.points();
    let adjacency = parallel::map_range(points.len(), |i| {
        index
            .within_radius(&points[i], epsilon)
            .into_iter()
            .filter(|n| n.index != i && n.distance > 0.0)
            .map(|n| n.index)
            .collect::<Vec<_>>()
    });
    Ok(NeighborhoodGraph {
        adjacency,
        epsilon,
        base_epsilon: base,
        k,
    })
}

/// Maximal connected sets of active points, each sorted, ordered by their
/// smallest index.
pub fn connected_components(g: &NeighborhoodGraph, active: Option<&[bool]>) -> Result<Vec<Vec<usize>>> {
    if let Some(mask) = active {
        if mask.len() != g.len() {
            return Err(Error::MaskLength {
                mask: mask.len(),
                points: g.len(),
            });
        }
    }
    let is_active = |i: usize| active.is_none_or(|m| m[i]);
    let mut seen = vec![false; g.len()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..g.len() {
        if seen[seed] || !is_active(seed) {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        let mut comp = Vec::new();
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            for &j in g.neighbors(i) {
                if !seen[j] && is_active(j) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    Ok(components)
}
