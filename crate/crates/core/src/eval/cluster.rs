//! Clusterings of embedding rows: k-means (k-means++ seeding, Lloyd
//! iterations) and Ward agglomerative clustering.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Node-to-cluster assignment with every cluster nonempty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    k: usize,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        let mut sizes = vec![0usize; k];
        for &c in &assignment {
            if c >= k {
                return Err(Error::InvalidPartition(format!(
                    "cluster id {c} out of range for k={k}"
                )));
            }
            sizes[c] += 1;
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("cluster {c} is empty")));
        }
        Ok(Clustering { assignment, k })
    }

    /// Relabels arbitrary labels to `0..k` in first-seen order.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(labels: &[T]) -> Self {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Clustering {
            assignment,
            k: ids.len(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.assignment[v] == c).collect()
    }

    /// `n x k` indicator matrix with `X_ij = 1/sqrt(|C_j|)` for members.
    pub fn indicator_matrix(&self) -> DMatrix<f64> {
        let sizes = self.sizes();
        let mut x = DMatrix::zeros(self.len(), self.k);
        for (v, &c) in self.assignment.iter().enumerate() {
            x[(v, c)] = 1.0 / (sizes[c] as f64).sqrt();
        }
        x
    }

    /// `node_id<TAB>cluster_id` lines.
    pub fn to_tsv(&self, node_ids: &[String]) -> String {
        let mut out = String::new();
        for (id, c) in node_ids.iter().zip(&self.assignment) {
            out.push_str(id);
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    /// Reads `node_id<TAB>cluster_id` lines, ordering nodes by `node_ids`.
    pub fn parse_tsv(text: &str, node_ids: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = node_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut labels: Vec<Option<String>> = vec![None; node_ids.len()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected 'node_id<TAB>cluster_id'".into(),
                });
            };
            let v = *index
                .get(id)
                .ok_or_else(|| Error::UnknownNode(id.to_owned()))?;
            labels[v] = Some(label.to_owned());
        }
        let labels: Vec<String> = labels
            .into_iter()
            .enumerate()
            .map(|(v, l)| l.ok_or_else(|| Error::InvalidPartition(format!("node '{}' is not assigned", node_ids[v]))))
            .collect::<Result<_>>()?;
        Ok(Clustering::from_labels(&labels))
    }

    pub fn load_tsv(path: impl AsRef<Path>, node_ids: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Clustering::parse_tsv(&text, node_ids)
    }
}

/// Cluster means, one row per cluster.
pub fn centroids(points: &DMatrix<f64>, c: &Clustering) -> DMatrix<f64> {
    let mut sums = DMatrix::zeros(c.k(), points.ncols());
    let sizes = c.sizes();
    for (v, &cl) in c.assignment().iter().enumerate() {
        let mut row = sums.row_mut(cl);
        row += points.row(v);
    }
    for (cl, &s) in sizes.iter().enumerate() {
        sums.row_mut(cl).unscale_mut(s as f64);
    }
    sums
}

/// Sum of squared distances from each point to its cluster mean.
pub fn kmeans_objective(points: &DMatrix<f64>, c: &Clustering) -> f64 {
    let cent = centroids(points, c);
    (0..points.nrows())
        .map(|v| (points.row(v) - cent.row(c.cluster_of(v))).norm_squared())
        .sum()
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub clustering: Clustering,
    pub objective: f64,
    pub iterations: usize,
    /// Objective after seeding and after every Lloyd iteration.
    pub objective_history: Vec<f64>,
}

/// k-means with k-means++ seeding and Lloyd iterations, stopping when the
/// assignment is stable or after [`MAX_LLOYD_ITERATIONS`].
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k={k} clusters requested for {n} points"
        )));
    }
    let dim = points.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist2 = |v: usize, c: &DMatrix<f64>, j: usize| (points.row(v) - c.row(j)).norm_squared();

    // k-means++
    let mut cent = DMatrix::zeros(k, dim);
    let first = rng.random_range(0..n);
    cent.row_mut(0).copy_from(&points.row(first));
    let mut closest: Vec<f64> = (0..n).map(|v| dist2(v, &cent, 0)).collect();
    for j in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (v, &dv) in closest.iter().enumerate() {
                acc += dv;
                if acc > target && dv > 0.0 {
                    chosen = v;
                    break;
                }
            }
            chosen
        } else {
            // all points coincide with existing centers
            rng.random_range(0..n)
        };
        cent.row_mut(j).copy_from(&points.row(pick));
        for v in 0..n {
            closest[v] = closest[v].min(dist2(v, &cent, j));
        }
    }

    let mut assignment = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        for v in 0..n {
            let mut best = 0;
            let mut best_d = dist2(v, &cent, 0);
            for j in 1..k {
                let dj = dist2(v, &cent, j);
                if dj < best_d {
                    best = j;
                    best_d = dj;
                }
            }
            if assignment[v] != best {
                assignment[v] = best;
                changed = true;
            }
        }
        repair_empty_clusters(points, &mut assignment, k, &mut cent);
        if iterations == 0 {
            history.push(assignment_cost(points, &assignment, &cent));
        }
        if !changed && iterations > 0 {
            break;
        }
        update_centroids(points, &assignment, &mut cent);
        iterations += 1;
        let obj = assignment_cost(points, &assignment, &cent);
        let prev = *history.last().unwrap();
        assert!(
            obj <= prev * (1.0 + 1e-12) + 1e-300,
            "k-means objective increased from {prev} to {obj}"
        );
        history.push(obj);
        if iterations >= MAX_LLOYD_ITERATIONS {
            break;
        }
    }

    let clustering = Clustering::new(assignment, k)?;
    let objective = kmeans_objective(points, &clustering);
    Ok(KMeansResult {
        clustering,
        objective,
        iterations,
        objective_history: history,
    })
}

fn assignment_cost(points: &DMatrix<f64>, assignment: &[usize], cent: &DMatrix<f64>) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(v, &c)| (points.row(v) - cent.row(c)).norm_squared())
        .sum()
}

fn update_centroids(points: &DMatrix<f64>, assignment: &[usize], cent: &mut DMatrix<f64>) {
    let k = cent.nrows();
    let mut counts = vec![0usize; k];
    cent.fill(0.0);
    for (v, &c) in assignment.iter().enumerate() {
        let mut row = cent.row_mut(c);
        row += points.row(v);
        counts[c] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        cent.row_mut(c).unscale_mut(count as f64);
    }
}

/// Moves the point farthest from its center (lowest index on ties, taken
/// from clusters with more than one member) into each empty cluster.
fn repair_empty_clusters(
    points: &DMatrix<f64>,
    assignment: &mut [usize],
    k: usize,
    cent: &mut DMatrix<f64>,
) {
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (v, &c) in assignment.iter().enumerate() {
            if counts[c] < 2 {
                continue;
            }
            let dv = (points.row(v) - cent.row(c)).norm_squared();
            if dv > far_d {
                far_d = dv;
                far = Some(v);
            }
        }
        let v = far.expect("k <= n guarantees a donor cluster");
        assignment[v] = empty;
        cent.row_mut(empty).copy_from(&points.row(v));
    }
}

/// Ward agglomerative clustering down to `k` clusters. Merges the pair with
/// the smallest increase in within-cluster variance,
/// `|A||B|/(|A|+|B|) * ||mean_A - mean_B||^2`, lowest index pair on ties.
pub fn agglomerative(points: &DMatrix<f64>, k: usize) -> Result<Clustering> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k={k} clusters requested for {n} points"
        )));
    }
    let mut means: Vec<Vec<f64>> = (0..n).map(|v| points.row(v).iter().copied().collect()).collect();
    let mut sizes = vec![1usize; n];
    let mut active = vec![true; n];
    // cluster label for each original point (index of its representative)
    let mut owner: Vec<usize> = (0..n).collect();

    let ward = |means: &[Vec<f64>], sizes: &[usize], a: usize, b: usize| -> f64 {
        let (sa, sb) = (sizes[a] as f64, sizes[b] as f64);
        let d2: f64 = means[a].iter().zip(&means[b]).map(|(x, y)| (x - y) * (x - y)).sum();
        sa * sb / (sa + sb) * d2
    };
    let nearest = |means: &[Vec<f64>], sizes: &[usize], active: &[bool], a: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for b in 0..n {
            if b != a && active[b] {
                let c = ward(means, sizes, a, b);
                if c < best.0 {
                    best = (c, b);
                }
            }
        }
        best
    };

    let mut nn: Vec<(f64, usize)> = (0..n)
        .map(|a| {
            if n > 1 {
                nearest(&means, &sizes, &active, a)
            } else {
                (f64::INFINITY, usize::MAX)
            }
        })
        .collect();

    let mut clusters = n;
    while clusters > k {
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && (a == usize::MAX || nn[i].0 < nn[a].0) {
                a = i;
            }
        }
        let b = nn[a].1;
        let (keep, gone) = (a.min(b), a.max(b));
        let (sk, sg) = (sizes[keep] as f64, sizes[gone] as f64);
        let merged: Vec<f64> = means[keep]
            .iter()
            .zip(&means[gone])
            .map(|(x, y)| (sk * x + sg * y) / (sk + sg))
            .collect();
        means[keep] = merged;
        sizes[keep] += sizes[gone];
        active[gone] = false;
        for o in owner.iter_mut() {
            if *o == gone {
                *o = keep;
            }
        }
        clusters -= 1;
        if clusters == 1 {
            break;
        }

        nn[keep] = nearest(&means, &sizes, &active, keep);
        for i in 0..n {
            if !active[i] || i == keep {
                continue;
            }
            if nn[i].1 == keep || nn[i].1 == gone {
                nn[i] = nearest(&means, &sizes, &active, i);
            } else {
                let c = ward(&means, &sizes, i, keep);
                if c < nn[i].0 || (c == nn[i].0 && keep < nn[i].1) {
                    nn[i] = (c, keep);
                }
            }
        }
    }

    Ok(Clustering::from_labels(&owner))
}
