//! Graph-level clustering quality: modularity with a misassignment penalty,
//! and permanence.

use log::warn;

use crate::error::{Error, Result};
use crate::eval::cluster::Clustering;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularityReport {
    /// Newman modularity without penalty.
    pub raw: f64,
    /// Sum of `1/(2m * D_vv)` over nodes with no intra-cluster weight whose
    /// cluster has other members.
    pub penalty: f64,
    /// `raw - penalty`.
    pub penalized: f64,
    /// Nodes that incurred the penalty.
    pub penalized_nodes: usize,
}

fn check_cover(g: &Graph, c: &Clustering) -> Result<()> {
    if c.len() != g.n() {
        return Err(Error::InvalidPartition(format!(
            "clustering covers {} nodes, graph has {}",
            c.len(),
            g.n()
        )));
    }
    Ok(())
}

pub fn modularity(g: &Graph, c: &Clustering) -> Result<ModularityReport> {
    check_cover(g, c)?;
    let two_m = g.total_weight();
    let deg = g.degree_vector();
    let sizes = c.sizes();
    let mut internal = vec![0.0; c.k()];
    let mut volume = vec![0.0; c.k()];
    let mut penalty = 0.0;
    let mut penalized_nodes = 0;
    for v in 0..g.n() {
        let cv = c.cluster_of(v);
        volume[cv] += deg.get(v);
        let inside: f64 = g
            .neighbors(v)
            .filter(|&(u, _)| c.cluster_of(u) == cv)
            .map(|(_, w)| w)
            .sum();
        internal[cv] += inside;
        if inside == 0.0 && sizes[cv] > 1 {
            penalty += 1.0 / (two_m * deg.get(v));
            penalized_nodes += 1;
        }
    }
    let raw: f64 = internal
        .iter()
        .zip(&volume)
        .map(|(i, vol)| i / two_m - (vol / two_m).powi(2))
        .sum();
    Ok(ModularityReport {
        raw,
        penalty,
        penalized: raw - penalty,
        penalized_nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermanenceReport {
    pub per_node: Vec<f64>,
    /// Sum over nodes.
    pub total: f64,
    /// Average over nodes.
    pub mean: f64,
}

/// Permanence on the unweighted structure of `g`:
/// `I(v) / max(E_max(v), 1) / deg(v) - (1 - C_in(v))` per node, with
/// `C_in = 1` when fewer than two internal neighbors exist.
pub fn permanence(g: &Graph, c: &Clustering) -> Result<PermanenceReport> {
    check_cover(g, c)?;
    if !g.has_unit_weights() {
        warn!("permanence ignores edge weights; treating every edge as unit weight");
    }
    let n = g.n();
    let mut mark = vec![false; n];
    let mut external = vec![0usize; c.k()];
    let mut per_node = Vec::with_capacity(n);
    for v in 0..n {
        let cv = c.cluster_of(v);
        let internal: Vec<usize> = g
            .neighbors(v)
            .map(|(u, _)| u)
            .filter(|&u| c.cluster_of(u) == cv)
            .collect();
        external.fill(0);
        for (u, _) in g.neighbors(v) {
            let cu = c.cluster_of(u);
            if cu != cv {
                external[cu] += 1;
            }
        }
        let e_max = external.iter().copied().max().unwrap_or(0).max(1);
        let degree = g.neighbor_count(v) as f64;

        let c_in = if internal.len() < 2 {
            1.0
        } else {
            for &u in &internal {
                mark[u] = true;
            }
            let mut links = 0usize;
            for &u in &internal {
                links += g.neighbors(u).filter(|&(x, _)| mark[x]).count();
            }
            for &u in &internal {
                mark[u] = false;
            }
            let pairs = internal.len() * (internal.len() - 1);
            // each internal edge was counted from both ends
            links as f64 / pairs as f64
        };
        per_node.push(internal.len() as f64 / e_max as f64 / degree - (1.0 - c_in));
    }
    let total: f64 = per_node.iter().sum();
    Ok(PermanenceReport {
        mean: total / n as f64,
        total,
        per_node,
    })
}
