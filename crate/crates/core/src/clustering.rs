//! Mini-batch k-means, distance-based membership probabilities, the
//! silhouette coefficient and silhouette-driven choice of k.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventgraph::NodeRole;

/// Distances below this are treated as coincident in [`ClusterModel::membership_prob`].
pub const COINCIDENT_EPS: f64 = 1e-12;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Nearest centroid and its squared distance; ties go to the lower index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub role: NodeRole,
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
    /// Cluster of each fitted point, from a final full pass.
    pub assignments: Vec<usize>,
}

impl ClusterModel {
    pub fn predict(&self, point: &[f64]) -> usize {
        nearest(point, &self.centroids).0
    }

    /// Sum of squared distances of `points` to their nearest centroid.
    pub fn inertia(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|p| nearest(p, &self.centroids).1).sum()
    }

    /// Inverse-distance membership: `p_t = d_t^-1 / sum_j d_j^-1`.
    ///
    /// When the point sits on one or more centroids (distance below
    /// [`COINCIDENT_EPS`]) all mass is split evenly among those centroids.
    pub fn membership_prob(&self, point: &[f64]) -> Vec<f64> {
        let dists: Vec<f64> = self.centroids.iter().map(|c| euclidean(point, c)).collect();
        let coincident = dists.iter().filter(|&&d| d < COINCIDENT_EPS).count();
        if coincident > 0 {
            let share = 1.0 / coincident as f64;
            return dists
                .iter()
                .map(|&d| if d < COINCIDENT_EPS { share } else { 0.0 })
                .collect();
        }
        let inv: Vec<f64> = dists.iter().map(|d| 1.0 / d).collect();
        let total: f64 = inv.iter().sum();
        inv.iter().map(|v| v / total).collect()
    }

    /// Number of points assigned to each cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// Fits mini-batch k-means with k-means++ seeding.
pub fn minibatch_kmeans(role: NodeRole, points: &[Vec<f64>], params: &KMeansParams) -> Result<ClusterModel> {
    fit(role, points, params, false).map(|(m, _)| m)
}

/// Like [`minibatch_kmeans`], also returning the full-data inertia after
/// seeding and after every iteration.
pub fn minibatch_kmeans_traced(
    role: NodeRole,
    points: &[Vec<f64>],
    params: &KMeansParams,
) -> Result<(ClusterModel, Vec<f64>)> {
    fit(role, points, params, true)
}

fn fit(role: NodeRole, points: &[Vec<f64>], params: &KMeansParams, trace: bool) -> Result<(ClusterModel, Vec<f64>)> {
    let n = points.len();
    let k = params.k;
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { points: n, k });
    }
    if params.iterations == 0 || params.batch_size == 0 {
        return Err(Error::Config(
            "k-means needs at least one iteration and a positive batch size".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut counts = vec![0u64; k];
    let mut history = Vec::new();
    let full_inertia = |centroids: &[Vec<f64>]| points.iter().map(|p| nearest(p, centroids).1).sum::<f64>();
    if trace {
        history.push(full_inertia(&centroids));
    }

    for _ in 0..params.iterations {
        let batch: Vec<usize> = if params.batch_size >= n {
            (0..n).collect()
        } else {
            let mut b = rand::seq::index::sample(&mut rng, n, params.batch_size).into_vec();
            b.sort_unstable();
            b
        };
        let assigned: Vec<usize> = batch.par_iter().map(|&i| nearest(&points[i], &centroids).0).collect();
        for (&i, &c) in batch.iter().zip(&assigned) {
            counts[c] += 1;
            let eta = 1.0 / counts[c] as f64;
            for (m, x) in centroids[c].iter_mut().zip(&points[i]) {
                *m += eta * (x - *m);
            }
        }
        // Centroids that have never received a point move to the batch
        // point farthest from its nearest centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let far = batch.iter().map(|&i| (i, nearest(&points[i], &centroids).1)).fold(
                    (batch[0], f64::NEG_INFINITY),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
                centroids[c] = points[far.0].clone();
            }
        }
        if trace {
            history.push(full_inertia(&centroids));
        }
    }

    let assignments = points.par_iter().map(|p| nearest(p, &centroids).0).collect();
    Ok((
        ClusterModel {
            role,
            k,
            centroids,
            counts,
            assignments,
        },
        history,
    ))
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // All points coincide with a chosen centroid.
            Err(_) => rng.gen_range(0..n),
        };
        centroids.push(points[next].clone());
        let newest = centroids.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, newest));
        }
    }
    centroids
}

/// Mean silhouette over all points; points alone in their cluster score 0.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    if points.len() != assignments.len() {
        return Err(Error::Data(format!(
            "{} points but {} assignments",
            points.len(),
            assignments.len()
        )));
    }
    // Dense relabelling so the per-point buckets are small.
    let labels: BTreeMap<usize, usize> = assignments
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(dense, label)| (label, dense))
        .collect();
    if labels.len() < 2 {
        return Err(Error::SingleCluster);
    }
    let dense: Vec<usize> = assignments.iter().map(|a| labels[a]).collect();
    let scores: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![0.0; labels.len()];
            let mut sizes = vec![0usize; labels.len()];
            for (j, p) in points.iter().enumerate() {
                if i != j {
                    sums[dense[j]] += euclidean(&points[i], p);
                    sizes[dense[j]] += 1;
                }
            }
            let own = dense[i];
            if sizes[own] == 0 {
                return 0.0;
            }
            let a = sums[own] / sizes[own] as f64;
            let b = (0..labels.len())
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub candidates: Vec<(usize, f64)>,
    pub best_k: usize,
}

/// Fits every k in `k_min..=k_max` with the same seed and keeps the
/// silhouette-maximizing one (smallest k on ties).
pub fn sweep_k(
    role: NodeRole,
    points: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    iterations: usize,
    batch_size: usize,
    seed: u64,
) -> Result<SweepResult> {
    if k_min < 2 || k_min > k_max || k_max > points.len() {
        return Err(Error::Config(format!(
            "invalid k range {k_min}..={k_max} for {} points",
            points.len()
        )));
    }
    let candidates = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let params = KMeansParams {
                k,
                iterations,
                batch_size,
                seed,
            };
            let model = minibatch_kmeans(role, points, &params)?;
            Ok((k, silhouette(points, &model.assignments)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.1 > best.1 {
            best = c;
        }
    }
    Ok(SweepResult {
        candidates,
        best_k: best.0,
    })
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let pairs = |x: u64| x * x.saturating_sub(1) / 2;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| pairs(v) as f64).sum();
    let sum_rows: f64 = rows.values().map(|&v| pairs(v) as f64).sum();
    let sum_cols: f64 = cols.values().map(|&v| pairs(v) as f64).sum();
    let total = pairs(n as u64) as f64;
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn model(centroids: Vec<Vec<f64>>) -> ClusterModel {
        let k = centroids.len();
        ClusterModel {
            role: NodeRole::Trigger,
            k,
            centroids,
            counts: vec![1; k],
            assignments: vec![],
        }
    }

    pub(crate) fn blobs(centers: &[Vec<f64>], per: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push(
                    center
                        .iter()
                        .map(|x| x + spread * rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                );
                labels.push(c);
            }
        }
        (pts, labels)
    }

    #[test]
    fn single_cluster_converges_to_mean() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let params = KMeansParams {
            k: 1,
            iterations: 5,
            batch_size: pts.len(),
            seed: 3,
        };
        let m = minibatch_kmeans(NodeRole::Trigger, &pts, &params).unwrap();
        let mean_x = pts.iter().map(|p| p[0]).sum::<f64>() / 20.0;
        let mean_y = pts.iter().map(|p| p[1]).sum::<f64>() / 20.0;
        assert_abs_diff_eq!(m.centroids[0][0], mean_x, epsilon = 1e-9);
        assert_abs_diff_eq!(m.centroids[0][1], mean_y, epsilon = 1e-9);
    }

    #[test]
    fn recovers_two_separated_blobs() {
        let (pts, labels) = blobs(&[vec![0.0, 0.0], vec![100.0, 100.0]], 30, 1.0, 11);
        let params = KMeansParams {
            k: 2,
            iterations: 10,
            batch_size: 16,
            seed: 5,
        };
        let m = minibatch_kmeans(NodeRole::Argument, &pts, &params).unwrap();
        assert_eq!(adjusted_rand_index(&m.assignments, &labels), 1.0);
        assert_eq!(m.role, NodeRole::Argument);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0]];
        let params = KMeansParams {
            k: 2,
            iterations: 1,
            batch_size: 1,
            seed: 0,
        };
        assert!(matches!(
            minibatch_kmeans(NodeRole::Trigger, &pts, &params),
            Err(Error::TooFewPoints { points: 1, k: 2 })
        ));
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let params = KMeansParams {
            k: 3,
            iterations: 3,
            batch_size: 2,
            seed: 0,
        };
        let m = minibatch_kmeans(NodeRole::Trigger, &pts, &params).unwrap();
        assert!(m.centroids.iter().flatten().all(|x| x.is_finite()));
        assert!(m.assignments.iter().all(|&a| a < 3));
    }

    #[test]
    fn full_batch_inertia_is_monotone() {
        let (pts, _) = blobs(&[vec![0.0, 0.0], vec![3.0, 1.0], vec![-2.0, 4.0]], 15, 1.5, 2);
        let params = KMeansParams {
            k: 4,
            iterations: 15,
            batch_size: pts.len(),
            seed: 9,
        };
        let (_, trace) = minibatch_kmeans_traced(NodeRole::Trigger, &pts, &params).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{trace:?}");
        }
    }

    #[test]
    fn membership_single_and_symmetric() {
        assert_eq!(model(vec![vec![3.0, 4.0]]).membership_prob(&[0.0, 0.0]), vec![1.0]);
        let m = model(vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(m.membership_prob(&[0.0, 5.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn membership_collapses_on_centroid() {
        let m = model(vec![vec![0.0], vec![1.0], vec![0.0]]);
        assert_eq!(m.membership_prob(&[0.0]), vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn membership_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cents: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let m = model(cents.clone());
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = m.membership_prob(&x);
        let d: Vec<f64> = cents
            .iter()
            .map(|c| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt())
            .collect();
        let z: f64 = d.iter().map(|v| 1.0 / v).sum();
        for t in 0..5 {
            assert_abs_diff_eq!(p[t], (1.0 / d[t]) / z, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn silhouette_hand_example() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let s = silhouette(&pts, &[0, 0, 1, 1]).unwrap();
        // Per point a = 0.1; b = 10.05, 9.95, 9.95, 10.05.
        let expected = ((10.05 - 0.1) / 10.05 + (9.95 - 0.1) / 9.95) / 2.0;
        assert_abs_diff_eq!(s, expected, epsilon = 1e-12);
        assert!((s - 0.990).abs() < 1e-3);
    }

    #[test]
    fn silhouette_singletons_and_errors() {
        assert_eq!(silhouette(&[vec![0.0], vec![1.0]], &[0, 1]).unwrap(), 0.0);
        assert!(matches!(
            silhouette(&[vec![0.0], vec![1.0]], &[4, 4]),
            Err(Error::SingleCluster)
        ));
    }

    #[test]
    fn sweep_single_candidate_and_bad_range() {
        let (pts, _) = blobs(&[vec![0.0], vec![10.0]], 5, 0.1, 0);
        let r = sweep_k(NodeRole::Trigger, &pts, 3, 3, 5, 10, 0).unwrap();
        assert_eq!(r.best_k, 3);
        assert_eq!(r.candidates.len(), 1);
        assert!(sweep_k(NodeRole::Trigger, &pts, 1, 3, 5, 10, 0).is_err());
        assert!(sweep_k(NodeRole::Trigger, &pts, 2, 11, 5, 10, 0).is_err());
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(v < 0.0);
    }

    proptest! {
        #[test]
        fn membership_is_simplex_and_argmax_is_nearest(
            cents in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..6),
            x in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let m = model(cents);
            let p = m.membership_prob(&x);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let mut arg = 0;
            for t in 1..p.len() {
                if p[t] > p[arg] { arg = t; }
            }
            prop_assert_eq!(arg, m.predict(&x));
        }

        #[test]
        fn translation_invariance(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 4..12),
            shift in prop::collection::vec(-50.0f64..50.0, 2),
        ) {
            let labels: Vec<usize> = (0..pts.len()).map(|i| i % 2).collect();
            let moved: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect();
            let a = silhouette(&pts, &labels).unwrap();
            let b = silhouette(&moved, &labels).unwrap();
            prop_assert!((a - b).abs() < 1e-9);

            let m = model(pts[..2].to_vec());
            let mm = model(moved[..2].to_vec());
            let pa = m.membership_prob(&pts[2]);
            let pb = mm.membership_prob(&moved[2]);
            for (u, v) in pa.iter().zip(&pb) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }
}
