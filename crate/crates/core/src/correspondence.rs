//! Pairing projected beacons with extracted corners and removing gross
//! matching errors.

use crate::geometry::PixelPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub pfp_id: u32,
    pub projected: PixelPoint,
    pub extracted: PixelPoint,
    /// Euclidean pixel distance between the two points.
    pub distance: f64,
}

impl MatchedPair {
    pub fn new(pfp_id: u32, projected: PixelPoint, extracted: PixelPoint) -> Self {
        Self { pfp_id, projected, extracted, distance: projected.distance(&extracted) }
    }
}

/// Matched pairs in `pfp_id` order. The number of pairs is `N_M`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pub pairs: Vec<MatchedPair>,
}

impl MatchSet {
    pub fn new(mut pairs: Vec<MatchedPair>) -> Self {
        pairs.sort_by_key(|p| p.pfp_id);
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> Vec<u32> {
        self.pairs.iter().map(|p| p.pfp_id).collect()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.distance).collect()
    }
}

/// Index of the point in `pool` nearest to `q`; the lowest index wins ties.
fn nearest(q: &PixelPoint, pool: &[PixelPoint]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in pool.iter().enumerate() {
        let d = (q.u - p.u).powi(2) + (q.v - p.v).powi(2);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Mutual-nearest-neighbour index pairs `(projected, extracted)`.
pub fn mutual_nearest_indices(projected: &[PixelPoint], extracted: &[PixelPoint]) -> Vec<(usize, usize)> {
    let back: Vec<Option<usize>> = extracted.iter().map(|e| nearest(e, projected)).collect();
    projected
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let j = nearest(p, extracted)?;
            (back[j] == Some(i)).then_some((i, j))
        })
        .collect()
}

/// Pairs each projected point with the extracted point that is nearest to it
/// and to which it is itself the nearest projected point.
///
/// Projected points must carry ids; callers pass visible points only.
pub fn mutual_nearest_match(projected: &[PixelPoint], extracted: &[PixelPoint]) -> MatchSet {
    MatchSet::new(
        mutual_nearest_indices(projected, extracted)
            .into_iter()
            .map(|(i, j)| {
                let id = projected[i].id.expect("projected points carry feature point ids");
                MatchedPair::new(id, projected[i], extracted[j])
            })
            .collect(),
    )
}

/// Outcome of a single elimination pass: which pairs were flagged.
fn flag_pass(distances: &[f64], t1: f64, t2_percent: f64) -> Vec<bool> {
    let n = distances.len();
    let total: f64 = distances.iter().sum();
    distances
        .iter()
        .map(|&d| {
            let others_mean = (total - d) / (n - 1) as f64;
            d > t1 && (d - others_mean) / others_mean * 100.0 > t2_percent
        })
        .collect()
}

/// Iteratively removes pairs whose distance exceeds both `t1` pixels and the
/// mean distance of the other pairs by more than `t2_percent`.
///
/// Every flagged pair is removed in a pass; passes repeat until nothing is
/// flagged. Sets with at most two pairs are returned unchanged.
pub fn eliminate_gross_errors(m: &MatchSet, t1: f64, t2_percent: f64) -> MatchSet {
    eliminate_gross_errors_traced(m, t1, t2_percent).0
}

/// Like [`eliminate_gross_errors`], also returning the number of passes run.
pub fn eliminate_gross_errors_traced(m: &MatchSet, t1: f64, t2_percent: f64) -> (MatchSet, usize) {
    let mut pairs = m.pairs.clone();
    let mut passes = 0;
    while pairs.len() > 2 {
        passes += 1;
        let flags = flag_pass(&pairs.iter().map(|p| p.distance).collect::<Vec<_>>(), t1, t2_percent);
        if !flags.contains(&true) {
            break;
        }
        let mut it = flags.into_iter();
        pairs.retain(|_| !it.next().unwrap());
    }
    (MatchSet { pairs }, passes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn proj(id: u32, u: f64, v: f64) -> PixelPoint {
        PixelPoint { u, v, id: Some(id), visible: true }
    }

    fn ext(u: f64, v: f64) -> PixelPoint {
        PixelPoint::extracted(u, v)
    }

    /// Set of pairs with the requested distances along the u axis.
    fn with_distances(ds: &[f64]) -> MatchSet {
        MatchSet::new(
            ds.iter()
                .enumerate()
                .map(|(i, &d)| {
                    let x = 100.0 * i as f64;
                    MatchedPair::new(i as u32 + 1, proj(i as u32 + 1, x, 0.0), ext(x + d, 0.0))
                })
                .collect(),
        )
    }

    /// Literal two-condition check over all pairs, with lowest-index ties.
    fn brute_force(projected: &[PixelPoint], extracted: &[PixelPoint]) -> Vec<(usize, usize)> {
        let d = |a: &PixelPoint, b: &PixelPoint| ((a.u - b.u).powi(2) + (a.v - b.v).powi(2)).sqrt();
        let mut out = Vec::new();
        for (i, p) in projected.iter().enumerate() {
            for (j, e) in extracted.iter().enumerate() {
                let cond1 = projected
                    .iter()
                    .enumerate()
                    .all(|(k, q)| k == i || d(q, e) > d(p, e) || (d(q, e) == d(p, e) && i < k));
                let cond2 = extracted
                    .iter()
                    .enumerate()
                    .all(|(k, f)| k == j || d(p, f) > d(p, e) || (d(p, f) == d(p, e) && j < k));
                if cond1 && cond2 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn obvious_neighbours() {
        let m = mutual_nearest_match(&[proj(1, 0.0, 0.0), proj(2, 10.0, 0.0)], &[ext(1.0, 0.0), ext(9.0, 0.0)]);
        assert_eq!(m.len(), 2);
        assert_eq!((m.pairs[0].extracted.u, m.pairs[1].extracted.u), (1.0, 9.0));
        assert_eq!(m.distances(), vec![1.0, 1.0]);
    }

    #[test]
    fn empty_inputs() {
        assert!(mutual_nearest_match(&[proj(1, 0.0, 0.0)], &[]).is_empty());
        assert!(mutual_nearest_match(&[], &[ext(0.0, 0.0)]).is_empty());
    }

    #[test]
    fn matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let np = rng.random_range(0..=7);
            let ne = rng.random_range(0..=20);
            // integer coordinates so exact ties occur
            let projected: Vec<_> = (0..np)
                .map(|i| proj(i + 1, rng.random_range(0..60) as f64, rng.random_range(0..60) as f64))
                .collect();
            let extracted: Vec<_> =
                (0..ne).map(|_| ext(rng.random_range(0..60) as f64, rng.random_range(0..60) as f64)).collect();
            assert_eq!(mutual_nearest_indices(&projected, &extracted), brute_force(&projected, &extracted), "trial {trial}");
        }
    }

    #[test]
    fn single_far_outlier_removed() {
        let out = eliminate_gross_errors(&with_distances(&[1.0, 1.0, 1.0, 100.0]), 5.0, 50.0);
        assert_eq!(out.distances(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn equal_distances_kept() {
        let m = with_distances(&[6.0; 5]);
        assert_eq!(eliminate_gross_errors(&m, 5.0, 50.0), m);
    }

    #[test]
    fn two_pass_cascade() {
        let m = with_distances(&[2.0, 2.0, 2.0, 2.0, 8.0, 40.0]);
        let first = flag_pass(&m.distances(), 5.0, 50.0);
        assert_eq!(first, vec![false, false, false, false, false, true]);
        let (out, passes) = eliminate_gross_errors_traced(&m, 5.0, 50.0);
        assert_eq!(out.distances(), vec![2.0; 4]);
        assert_eq!(passes, 3);
    }

    #[test]
    fn tiny_sets_untouched() {
        let m = with_distances(&[1.0, 90.0]);
        assert_eq!(eliminate_gross_errors(&m, 5.0, 50.0), m);
    }

    proptest! {
        #[test]
        fn symmetric_under_role_swap(pts in prop::collection::vec((0u8..40, 0u8..40), 0..10),
                                     others in prop::collection::vec((0u8..40, 0u8..40), 0..10)) {
            let a: Vec<_> = pts.iter().map(|&(u, v)| ext(u as f64, v as f64)).collect();
            let b: Vec<_> = others.iter().map(|&(u, v)| ext(u as f64, v as f64)).collect();
            let ab = mutual_nearest_indices(&a, &b);
            let mut ba: Vec<_> = mutual_nearest_indices(&b, &a).into_iter().map(|(j, i)| (i, j)).collect();
            ba.sort();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn elimination_postconditions(ds in prop::collection::vec(0.0..60.0f64, 0..12)) {
            let m = with_distances(&ds);
            let (out, passes) = eliminate_gross_errors_traced(&m, 5.0, 50.0);
            prop_assert!(out.len() <= m.len());
            prop_assert!(passes <= m.len().max(1));
            if out.len() > 2 {
                prop_assert!(!flag_pass(&out.distances(), 5.0, 50.0).contains(&true));
            }
        }

        #[test]
        fn injected_outliers_removed(inliers in prop::collection::vec(0.0..5.0f64, 7),
                                     outliers in prop::collection::vec(51.0..200.0f64, 0..=2)) {
            let mut ds = inliers.clone();
            let mut slots: Vec<usize> = Vec::new();
            for (k, o) in outliers.iter().enumerate() {
                ds[2 * k + 1] = *o;
                slots.push(2 * k + 2);
            }
            let out = eliminate_gross_errors(&with_distances(&ds), 5.0, 50.0);
            let kept: Vec<u32> = out.ids();
            let expected: Vec<u32> = (1..=7).filter(|id| !slots.contains(&(*id as usize))).collect();
            prop_assert_eq!(kept, expected);
        }
    }
}
