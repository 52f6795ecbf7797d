//! Lloyd's k-means with k-means++ seeding, and the mean silhouette score.

use rand::Rng;

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

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

/// k-means++ seeding: first centre uniform, each further centre drawn with
/// probability proportional to squared distance from the nearest chosen one.
fn seed_centroids<R: Rng>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![rows[rng.gen_range(0..rows.len())].clone()];
    let mut dist: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = rows.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.gen_range(0..rows.len())
        };
        centroids.push(rows[next].clone());
        for (i, row) in rows.iter().enumerate() {
            dist[i] = dist[i].min(sq_dist(row, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// One k-means run. Requires `k <= rows.len()`.
pub fn kmeans<R: Rng>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> KMeansFit {
    assert!(k >= 1 && k <= rows.len());
    let dims = rows[0].len();
    let mut centroids = seed_centroids(rows, k, rng);
    let mut assignment = vec![usize::MAX; rows.len()];

    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let (c, _) = nearest(row, &centroids);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in rows.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its centre.
                let far = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i, sq_dist(r, &centroids[assignment[i]])))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                centroids[c] = rows[far].clone();
            } else {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }

    let inertia = rows
        .iter()
        .zip(&assignment)
        .map(|(r, &c)| sq_dist(r, &centroids[c]))
        .sum();
    KMeansFit {
        assignment,
        centroids,
        inertia,
    }
}

/// Mean silhouette over all points, using Euclidean distance.
///
/// Points in singleton clusters score 0. When a point's own-cluster and
/// nearest-cluster distances are both zero it also scores 0.
pub fn silhouette(rows: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 0.0;
    }
    let mut sizes = vec![0usize; k];
    for &c in assignment {
        sizes[c] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignment[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[assignment[j]] += sq_dist(&rows[i], &rows[j]).sqrt();
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}
