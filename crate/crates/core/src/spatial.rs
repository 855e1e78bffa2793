//! Exact nearest-neighbour queries over a point cloud.
//!
//! Results always match a brute-force scan, including the order among
//! equidistant points (smaller index first).

use crate::error::{Error, Result};
use crate::geometry::Point3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// A static kd-tree. Immutable once built.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Squared Euclidean distance; the single metric used for every ranking.
#[inline]
pub fn squared_distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// `(d², index)` ordering used for every ranking in the crate.
#[inline]
fn closer(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Bounded ascending list of the best `k` candidates seen so far.
struct Best {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Best {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    fn offer(&mut self, cand: (f64, usize)) {
        if self.items.len() == self.k && !closer(cand, self.items[self.k - 1]) {
            return;
        }
        let pos = self.items.partition_point(|&it| closer(it, cand));
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
    }
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap()
    }

    fn search(&self, node: usize, q: &Point3, skip: Option<usize>, best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) != skip {
                        best.offer((squared_distance(q, &self.points[i]), i));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, best);
                // `<=` keeps equidistant points with smaller indices reachable
                if diff * diff <= best.worst() {
                    self.search(far, q, skip, best);
                }
            }
        }
    }

    /// Allocation-free single-nearest variant of [`Self::search`].
    fn search_nearest(&self, node: usize, q: &Point3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let cand = (squared_distance(q, &self.points[i]), i);
                    if closer(cand, *best) {
                        *best = cand;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search_nearest(near, q, best);
                if diff * diff <= best.0 {
                    self.search_nearest(far, q, best);
                }
            }
        }
    }

    fn collect(best: Best) -> Vec<Neighbor> {
        best.items
            .into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    /// The `k` nearest points to an arbitrary query location.
    pub fn knn(&self, query: &Point3, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.len() {
            return Err(Error::KOutOfRange { k, max: self.len() });
        }
        let mut best = Best::new(k);
        self.search(0, query, None, &mut best);
        Ok(Self::collect(best))
    }

    /// The `k` nearest points to cloud point `index`, excluding itself.
    pub fn knn_of(&self, index: usize, k: usize) -> Result<Vec<Neighbor>> {
        let max = self.len().saturating_sub(1);
        if k == 0 || k > max {
            return Err(Error::KOutOfRange { k, max });
        }
        let mut best = Best::new(k);
        self.search(0, &self.points[index], Some(index), &mut best);
        Ok(Self::collect(best))
    }

    /// Nearest point to `query`. Panics on an empty tree.
    pub fn nearest(&self, query: &Point3) -> Neighbor {
        assert!(!self.is_empty(), "nearest() on an empty index");
        let (d2, index) = self.nearest_d2(query);
        Neighbor {
            index,
            distance: d2.sqrt(),
        }
    }

    /// Squared distance and index of the nearest point.
    pub(crate) fn nearest_d2(&self, query: &Point3) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search_nearest(0, query, &mut best);
        best
    }

    /// Nearest point with squared distance at most `max_d2`, if any.
    pub(crate) fn nearest_within_d2(&self, query: &Point3, max_d2: f64) -> Option<(f64, usize)> {
        let mut best = (max_d2, usize::MAX);
        self.search_nearest(0, query, &mut best);
        (best.1 != usize::MAX).then_some(best)
    }

    /// All points within `radius` of `query` (inclusive), sorted by index.
    pub fn within_radius(&self, query: &Point3, radius: f64) -> Vec<Neighbor> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &i in &self.order[start..end] {
                        let d = squared_distance(query, &self.points[i]).sqrt();
                        if d <= radius {
                            out.push(Neighbor { index: i, distance: d });
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let diff = query[axis] - value;
                    if diff <= 0.0 || diff * diff <= r2 * (1.0 + 1e-12) {
                        stack.push(left);
                    }
                    if diff >= 0.0 || diff * diff <= r2 * (1.0 + 1e-12) {
                        stack.push(right);
                    }
                }
            }
        }
        out.sort_by_key(|n| n.index);
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n) scan with the same ordering contract.
    pub fn brute_knn(points: &[Point3], q: &Point3, k: usize, skip: Option<usize>) -> Vec<Neighbor> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, p)| (squared_distance(q, p), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter()
            .map(|(d2, index)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    #[test]
    fn collinear_line() {
        let pts: Vec<Point3> = (0..4).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let t = KdTree::new(&pts);
        let nn = t.knn_of(0, 2).unwrap();
        assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(nn.iter().map(|n| n.distance).collect::<Vec<_>>(), vec![1.0, 2.0]);
    }

    #[test]
    fn duplicates_tie_to_lower_index() {
        let p = Point3::new(0.5, 0.5, 0.5);
        let pts = vec![Point3::origin(), p, p, p];
        let t = KdTree::new(&pts);
        let nn = t.knn_of(3, 1).unwrap();
        assert_eq!(nn[0].index, 1);
        assert_eq!(nn[0].distance, 0.0);
        let nn = t.knn_of(1, 2).unwrap();
        assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn k_out_of_range() {
        let pts: Vec<Point3> = (0..4).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let t = KdTree::new(&pts);
        assert!(matches!(t.knn_of(0, 4), Err(Error::KOutOfRange { k: 4, max: 3 })));
        assert!(t.knn(&Point3::origin(), 4).is_ok());
        assert!(t.knn(&Point3::origin(), 5).is_err());
        assert!(t.knn(&Point3::origin(), 0).is_err());
    }

    #[test]
    fn matches_brute_force_on_random_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let pts: Vec<Point3> = (0..500)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let t = KdTree::new(&pts);
        for i in 0..pts.len() {
            assert_eq!(t.knn_of(i, 10).unwrap(), brute_knn(&pts, &pts[i], 10, Some(i)));
        }
    }

    #[test]
    fn grid_ties_match_brute_force() {
        let mut pts = Vec::new();
        for x in 0..6 {
            for y in 0..6 {
                for z in 0..3 {
                    pts.push(Point3::new(x as f64, y as f64, z as f64));
                }
            }
        }
        let t = KdTree::new(&pts);
        for i in 0..pts.len() {
            assert_eq!(t.knn_of(i, 12).unwrap(), brute_knn(&pts, &pts[i], 12, Some(i)));
        }
    }

    proptest! {
        #[test]
        fn radius_query_matches_scan(seed in any::<u64>(), r in 0.01f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point3> = (0..200)
                .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let t = KdTree::new(&pts);
            let q = pts[0];
            let got: Vec<usize> = t.within_radius(&q, r).iter().map(|n| n.index).collect();
            let want: Vec<usize> = (0..pts.len()).filter(|&i| squared_distance(&pts[i], &q).sqrt() <= r).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn knn_query_matches_scan(seed in any::<u64>(), k in 1usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // quantized coordinates to force ties
            let pts: Vec<Point3> = (0..300)
                .map(|_| Point3::new(
                    rng.random_range(0..8) as f64,
                    rng.random_range(0..8) as f64,
                    rng.random_range(0..8) as f64,
                ))
                .collect();
            let t = KdTree::new(&pts);
            let q = Point3::new(rng.random_range(0.0..8.0), 3.0, rng.random_range(0.0..8.0));
            prop_assert_eq!(t.knn(&q, k).unwrap(), brute_knn(&pts, &q, k, None));
        }

        #[test]
        fn nearest_matches_scan(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point3> = (0..300)
                .map(|_| Point3::new(
                    rng.random_range(0..6) as f64,
                    rng.random_range(0..6) as f64,
                    rng.random_range(0..6) as f64,
                ))
                .collect();
            let t = KdTree::new(&pts);
            for _ in 0..20 {
                let q = Point3::new(rng.random_range(-1.0..7.0), rng.random_range(0..6) as f64, 2.5);
                prop_assert_eq!(t.nearest(&q), brute_knn(&pts, &q, 1, None)[0]);
            }
        }
    }
}
