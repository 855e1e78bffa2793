//! Region growing bounded by breaking curves, followed by kNN voting that
//! folds curve points back into the regions around them.

use crate::curves::BreakingCurveSet;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::graph::{connected_components, NeighborhoodGraph};
use crate::parallel;
use crate::spatial::KdTree;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSegmentation {
    /// Region id per point; `None` for points not yet assigned.
    pub region_of: Vec<Option<usize>>,
    /// Member indices per region, ascending.
    pub regions: Vec<Vec<usize>>,
}

impl RegionSegmentation {
    pub fn region_sizes(&self) -> Vec<usize> {
        self.regions.iter().map(Vec::len).collect()
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn unassigned(&self) -> usize {
        self.region_of.iter().filter(|r| r.is_none()).count()
    }

    pub fn is_total(&self) -> bool {
        self.region_of.iter().all(Option::is_some)
    }

    /// Label per point for export; `None` stays `None`.
    pub fn labels(&self) -> &[Option<usize>] {
        &self.region_of
    }

    fn from_assignment(region_of: Vec<Option<usize>>, region_count: usize) -> Self {
        let mut regions = vec![Vec::new(); region_count];
        for (i, r) in region_of.iter().enumerate() {
            if let Some(r) = r {
                regions[*r].push(i);
            }
        }
        Self { region_of, regions }
    }
}

/// Regions are the connected components of the graph restricted to
/// non-curve points, numbered by their smallest point index. Curve points
/// stay unassigned.
pub fn grow_regions(g: &NeighborhoodGraph, curves: &BreakingCurveSet) -> Result<RegionSegmentation> {
    let free: Vec<bool> = curves.member.iter().map(|m| !m).collect();
    let regions = connected_components(g, Some(&free))?;
    let mut region_of = vec![None; g.len()];
    for (id, comp) in regions.iter().enumerate() {
        for &i in comp {
            region_of[i] = Some(id);
        }
    }
    Ok(RegionSegmentation { region_of, regions })
}

/// Winning region among `(region, distance)` votes: most votes, then the
/// region owning the closest voter, then the smaller id.
fn modal(votes: &[(usize, f64)]) -> Option<usize> {
    let mut tally: Vec<(usize, usize, f64)> = Vec::new();
    for &(r, d) in votes {
        match tally.iter_mut().find(|t| t.0 == r) {
            Some(t) => {
                t.1 += 1;
                t.2 = t.2.min(d);
            }
            None => tally.push((r, 1, d)),
        }
    }
    tally
        .into_iter()
        .min_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
        .map(|t| t.0)
}

/// Assigns every unassigned point by majority vote among its `k_vote`
/// nearest points that already carry a region.
///
/// Voting runs in rounds against a frozen snapshot; a point whose neighbours
/// are all unassigned waits for a later round. If a round makes no progress,
/// the rest join the region of their nearest assigned point.
pub fn assign_curve_points(
    seg: &RegionSegmentation,
    cloud: &PointCloud,
    index: &KdTree,
    k_vote: usize,
) -> Result<RegionSegmentation> {
    if seg.regions.is_empty() {
        return Err(Error::NothingToVoteInto);
    }
    if k_vote == 0 {
        return Err(Error::invalid("k_vote", "must be positive"));
    }
    let k = k_vote.min(cloud.len().saturating_sub(1));
    let mut region_of = seg.region_of.clone();
    let mut pending: Vec<usize> = (0..region_of.len()).filter(|&i| region_of[i].is_none()).collect();

    while !pending.is_empty() && k > 0 {
        let snapshot = &region_of;
        let decided = parallel::map_slice(&pending, |&i| {
            let votes: Vec<(usize, f64)> = index
                .knn_of(i, k)
                .expect("k bounded by cloud size")
                .iter()
                .filter_map(|n| snapshot[n.index].map(|r| (r, n.distance)))
                .collect();
            modal(&votes)
        });
        if decided.iter().all(Option::is_none) {
            break;
        }
        let mut still = Vec::new();
        for (&i, d) in pending.iter().zip(decided) {
            match d {
                Some(r) => region_of[i] = Some(r),
                None => still.push(i),
            }
        }
        pending = still;
    }

    if !pending.is_empty() {
        let assigned: Vec<usize> = (0..region_of.len()).filter(|&i| region_of[i].is_some()).collect();
        let sub = KdTree::new(&assigned.iter().map(|&i| cloud[i]).collect::<Vec<_>>());
        for i in pending {
            let nearest = assigned[sub.nearest(&cloud[i]).index];
            region_of[i] = region_of[nearest];
        }
    }
    Ok(RegionSegmentation::from_assignment(region_of, seg.regions.len()))
}

/// Ids of regions holding at least `min_fraction` of all points, largest
/// first (ties by id).
pub fn filter_small_regions(seg: &RegionSegmentation, min_fraction: f64) -> Result<Vec<usize>> {
    let total = seg.region_of.len();
    let threshold = min_fraction * total as f64;
    let mut keep: Vec<usize> = (0..seg.regions.len())
        .filter(|&r| seg.regions[r].len() as f64 >= threshold)
        .collect();
    keep.sort_by(|&a, &b| seg.regions[b].len().cmp(&seg.regions[a].len()).then(a.cmp(&b)));
    if keep.is_empty() {
        return Err(Error::NoCandidateRegions {
            min_fraction,
            points: total,
        });
    }
    Ok(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(n: usize) -> NeighborhoodGraph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        NeighborhoodGraph::from_edges(n, &edges, 1.0)
    }

    fn curves(g: &NeighborhoodGraph, members: &[usize]) -> BreakingCurveSet {
        let mut m = vec![false; g.len()];
        for &i in members {
            m[i] = true;
        }
        BreakingCurveSet::from_mask(m, g).unwrap()
    }

    fn line_cloud(n: usize) -> PointCloud {
        PointCloud::new((0..n).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect()).unwrap()
    }

    fn seg_from(labels: Vec<Option<usize>>, count: usize) -> RegionSegmentation {
        RegionSegmentation::from_assignment(labels, count)
    }

    #[test]
    fn no_curves_gives_one_region() {
        let g = chain(6);
        let s = grow_regions(&g, &curves(&g, &[])).unwrap();
        assert_eq!(s.regions, vec![(0..6).collect::<Vec<_>>()]);
    }

    #[test]
    fn curve_point_splits_chain() {
        let g = chain(5);
        let s = grow_regions(&g, &curves(&g, &[2])).unwrap();
        assert_eq!(s.regions, vec![vec![0, 1], vec![3, 4]]);
        assert_eq!(s.region_of[2], None);
    }

    #[test]
    fn all_curve_points_gives_no_regions_and_voting_fails() {
        let g = chain(4);
        let s = grow_regions(&g, &curves(&g, &[0, 1, 2, 3])).unwrap();
        assert!(s.regions.is_empty());
        let c = line_cloud(4);
        let idx = KdTree::new(&c.points);
        assert!(matches!(
            assign_curve_points(&s, &c, &idx, 3),
            Err(Error::NothingToVoteInto)
        ));
    }

    #[test]
    fn unanimous_vote() {
        // point 3 is the curve point; its 3 nearest are 2, 4 (dist 1) and 1 (dist 2)
        let c = line_cloud(7);
        let labels = vec![Some(0), Some(0), Some(0), None, Some(0), Some(1), Some(1)];
        let s = seg_from(labels, 2);
        let out = assign_curve_points(&s, &c, &KdTree::new(&c.points), 3).unwrap();
        assert_eq!(out.region_of[3], Some(0));
    }

    #[test]
    fn majority_vote() {
        let c = line_cloud(5);
        // nearest three of point 2: 1, 3, 0 → votes {0, 1, 0}
        let labels = vec![Some(0), Some(0), None, Some(1), Some(1)];
        let out = assign_curve_points(&seg_from(labels, 2), &c, &KdTree::new(&c.points), 3).unwrap();
        assert_eq!(out.region_of[2], Some(0));
    }

    #[test]
    fn tie_goes_to_smaller_id() {
        let c = line_cloud(5);
        // nearest two of point 2: 1 (region 1) and 3 (region 0)
        let labels = vec![Some(1), Some(1), None, Some(0), Some(0)];
        let out = assign_curve_points(&seg_from(labels, 2), &c, &KdTree::new(&c.points), 2).unwrap();
        assert_eq!(out.region_of[2], Some(0));
    }

    #[test]
    fn deep_curve_points_fill_in_over_rounds() {
        let c = line_cloud(12);
        let mut labels = vec![None; 12];
        labels[0] = Some(0);
        labels[11] = Some(1);
        let out = assign_curve_points(&seg_from(labels, 2), &c, &KdTree::new(&c.points), 2).unwrap();
        assert!(out.is_total());
        assert_eq!(out.region_of[1], Some(0));
        assert_eq!(out.region_of[10], Some(1));
        assert_eq!(out.region_sizes().iter().sum::<usize>(), 12);
    }

    #[test]
    fn filter_examples() {
        let mut labels = vec![Some(0); 900];
        labels.extend(vec![Some(1); 90]);
        labels.extend(vec![Some(2); 10]);
        let s = seg_from(labels, 3);
        assert_eq!(filter_small_regions(&s, 0.05).unwrap(), vec![0, 1]);
        assert_eq!(filter_small_regions(&s, 1e-9).unwrap(), vec![0, 1, 2]);
        assert!(matches!(
            filter_small_regions(&s, 0.95),
            Err(Error::NoCandidateRegions { .. })
        ));
    }

    #[test]
    fn modal_rules() {
        assert_eq!(modal(&[(0, 1.0), (0, 1.0), (1, 1.0)]), Some(0));
        assert_eq!(modal(&[(1, 1.0), (0, 1.0)]), Some(0));
        assert_eq!(modal(&[(2, 1.0), (1, 1.0), (2, 2.0)]), Some(2));
        // equal counts: the region with the closer voter wins
        assert_eq!(modal(&[(1, 0.5), (0, 0.7)]), Some(1));
        assert_eq!(modal(&[]), None);
    }

    fn random_setup(seed: u64, n: usize) -> (PointCloud, NeighborhoodGraph, BreakingCurveSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point3> = (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random_range(0.0..0.05)))
            .collect();
        let c = PointCloud::new(pts).unwrap();
        let g = crate::graph::build_graph(&c, 6, 1.0).unwrap();
        let mask: Vec<bool> = c.iter().map(|p| (p.x - 0.5).abs() < 0.05 || (p.y - 0.3).abs() < 0.04).collect();
        let b = BreakingCurveSet::from_mask(mask, &g).unwrap();
        (c, g, b)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn voting_covers_everything(seed in any::<u64>()) {
            let (c, g, b) = random_setup(seed, 400);
            let s = grow_regions(&g, &b).unwrap();
            // pre-voting regions are disjoint and connected among non-curve points
            let mut owner = vec![None; c.len()];
            for (r, comp) in s.regions.iter().enumerate() {
                let mut mask = vec![false; c.len()];
                for &i in comp {
                    prop_assert!(owner[i].is_none());
                    prop_assert!(!b.member[i]);
                    owner[i] = Some(r);
                    mask[i] = true;
                }
                prop_assert_eq!(connected_components(&g, Some(&mask)).unwrap().len(), 1);
            }
            let out = assign_curve_points(&s, &c, &KdTree::new(&c.points), 5).unwrap();
            prop_assert!(out.is_total());
            prop_assert_eq!(out.region_count(), s.region_count());
            prop_assert_eq!(out.region_sizes().iter().sum::<usize>(), c.len());
            for i in 0..c.len() {
                if let Some(r) = s.region_of[i] {
                    prop_assert_eq!(out.region_of[i], Some(r));
                }
            }
        }

        #[test]
        fn segmentation_is_permutation_equivariant(seed in any::<u64>()) {
            let (c, g, b) = random_setup(seed, 300);
            let s = assign_curve_points(&grow_regions(&g, &b).unwrap(), &c, &KdTree::new(&c.points), 5).unwrap();

            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let mut perm: Vec<usize> = (0..c.len()).collect();
            perm.shuffle(&mut rng);
            let mut pts = vec![Point3::origin(); c.len()];
            let mut mask = vec![false; c.len()];
            for i in 0..c.len() {
                pts[perm[i]] = c[i];
                mask[perm[i]] = b.member[i];
            }
            let c2 = PointCloud::new(pts).unwrap();
            let g2 = crate::graph::build_graph(&c2, 6, 1.0).unwrap();
            let b2 = BreakingCurveSet::from_mask(mask, &g2).unwrap();
            let s2 = assign_curve_points(&grow_regions(&g2, &b2).unwrap(), &c2, &KdTree::new(&c2.points), 5).unwrap();

            // same partition up to relabeling
            let mut a: Vec<Vec<usize>> = s.regions.iter()
                .map(|r| { let mut v: Vec<usize> = r.iter().map(|&i| perm[i]).collect(); v.sort_unstable(); v })
                .collect();
            a.sort();
            let mut bb = s2.regions.clone();
            bb.sort();
            prop_assert_eq!(a, bb);
        }

        #[test]
        fn retention_monotone(sizes in prop::collection::vec(1usize..200, 1..12), f1 in 0.0f64..0.5, f2 in 0.0f64..0.5) {
            let mut labels = Vec::new();
            for (r, &n) in sizes.iter().enumerate() {
                labels.extend(std::iter::repeat_n(Some(r), n));
            }
            let s = seg_from(labels, sizes.len());
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let a = filter_small_regions(&s, lo).map(|v| v.len()).unwrap_or(0);
            let b = filter_small_regions(&s, hi).map(|v| v.len()).unwrap_or(0);
            prop_assert!(b <= a);
        }
    }
}
