//! Relative deviation score: how far a node drifts from its own cluster
//! toward another one, measured in units of each cluster's radius.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::eval::cluster::{centroids, Clustering};

/// Per-node RDS. A cluster's radius is the *sum* of member distances to its
/// mean, floored at machine epsilon so singleton clusters stay finite.
pub fn rds(points: &DMatrix<f64>, c: &Clustering) -> Result<Vec<f64>> {
    if c.len() != points.nrows() {
        return Err(Error::InvalidPartition(format!(
            "clustering covers {} points, embedding has {}",
            c.len(),
            points.nrows()
        )));
    }
    if c.k() < 2 {
        return Err(Error::InvalidParameter(
            "RDS needs at least two clusters".into(),
        ));
    }
    let cent = centroids(points, c);
    let dist = |v: usize, cl: usize| (points.row(v) - cent.row(cl)).norm();
    let mut radius = vec![0.0; c.k()];
    for v in 0..points.nrows() {
        radius[c.cluster_of(v)] += dist(v, c.cluster_of(v));
    }
    for r in radius.iter_mut() {
        *r = r.max(f64::EPSILON);
    }
    Ok((0..points.nrows())
        .map(|v| {
            let own = c.cluster_of(v);
            let rel_own = dist(v, own) / radius[own];
            (0..c.k())
                .filter(|&cl| cl != own)
                .map(|cl| rel_own / (dist(v, cl) / radius[cl]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Node indices by descending score, lower index first on ties.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}
