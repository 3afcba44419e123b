//! Experiment drivers: the unseen-node holdout simulation and the
//! projection-cost sweep over sketch sizes.

use std::collections::HashSet;
use std::time::Instant;

use log::warn;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{kmeans, modularity};
use crate::factor::embed_with_sketch_size;
use crate::graph::Graph;
use crate::inductive::{extend, UnseenNode};
use crate::sketch::{sketch_size, ApproxParams, ProjectionCostOracle};

const HOLDOUT_STREAM: u64 = 0x401d;

#[derive(Debug, Clone, PartialEq)]
pub struct UnseenSimConfig {
    pub params: ApproxParams,
    /// Sketch size override; the formula on the retained node count otherwise.
    pub d: Option<usize>,
    pub clusters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnseenSimRow {
    pub fraction: f64,
    pub held_out: usize,
    /// Retained nodes left without neighbors, plus held-out nodes that could
    /// not be folded in.
    pub excluded: Vec<String>,
    pub dropped_links: usize,
    pub d: usize,
    pub evaluated_nodes: usize,
    pub modularity_raw: f64,
    pub modularity: f64,
}

/// Holds out `fraction` of the nodes, embeds the rest, folds the held-out
/// nodes back in (random order, links to retained nodes only), clusters the
/// combined embedding and scores it on the graph induced by every evaluated
/// node.
pub fn unseen_node_trial(g: &Graph, fraction: f64, cfg: &UnseenSimConfig) -> Result<UnseenSimRow> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(HOLDOUT_STREAM);
    let held_count = (fraction * n as f64).round() as usize;
    let mut held: Vec<usize> = sample(&mut rng, n, held_count).into_vec();
    held.shuffle(&mut rng);
    let held_set: HashSet<usize> = held.iter().copied().collect();

    let mut excluded = Vec::new();
    let mut retained = Vec::new();
    for v in (0..n).filter(|v| !held_set.contains(v)) {
        if g.neighbors(v).any(|(u, _)| !held_set.contains(&u)) {
            retained.push(v);
        } else {
            excluded.push(v);
        }
    }
    if retained.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "holdout of {fraction} leaves {} usable nodes",
            retained.len()
        )));
    }
    if !excluded.is_empty() {
        warn!("{} retained nodes isolated by the holdout were excluded", excluded.len());
    }
    let retained_set: HashSet<usize> = retained.iter().copied().collect();

    let train = g.induced_subgraph(&retained)?;
    let d = match cfg.d {
        Some(d) => d,
        None => sketch_size(train.n(), &cfg.params)?,
    };
    let model = embed_with_sketch_size(&train, &cfg.params, cfg.seed, d)?;

    let mut dropped_links = 0;
    let mut unseen = Vec::with_capacity(held.len());
    for &v in &held {
        let mut links = Vec::new();
        for (u, w) in g.neighbors(v) {
            if retained_set.contains(&u) {
                links.push((g.node_id(u).to_owned(), w));
            } else {
                dropped_links += 1;
            }
        }
        if links.is_empty() {
            excluded.push(v);
        } else {
            unseen.push(UnseenNode::new(g.node_id(v), links)?);
        }
    }
    let ext = extend(&model, &unseen)?;

    let evaluated: Vec<usize> = ext
        .node_ids
        .iter()
        .map(|id| g.index_of(id).expect("extension ids come from the graph"))
        .collect();
    let eval_graph = g.induced_subgraph(&evaluated)?;
    let points = nalgebra::DMatrix::from_fn(eval_graph.n(), ext.y.ncols(), |r, c| {
        let row = ext
            .node_ids
            .iter()
            .position(|id| id == eval_graph.node_id(r))
            .expect("same node set");
        ext.y[(row, c)]
    });
    let clustering = kmeans(&points, cfg.clusters, cfg.seed)?.clustering;
    let q = modularity(&eval_graph, &clustering)?;
    let mut excluded_ids: Vec<String> = excluded.iter().map(|&v| g.node_id(v).to_owned()).collect();
    excluded_ids.sort();
    Ok(UnseenSimRow {
        fraction,
        held_out: held.len(),
        excluded: excluded_ids,
        dropped_links: dropped_links + ext.dropped_links,
        d,
        evaluated_nodes: eval_graph.n(),
        modularity_raw: q.raw,
        modularity: q.penalized,
    })
}

/// One row per fraction, every fraction from the same seed.
pub fn unseen_node_curve(g: &Graph, fractions: &[f64], cfg: &UnseenSimConfig) -> Result<Vec<UnseenSimRow>> {
    fractions.iter().map(|&f| unseen_node_trial(g, f, cfg)).collect()
}

pub const SWEEP_RUNS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    /// Mean and sample standard deviation of the relative projection cost;
    /// `None` in runtime-only mode.
    pub cost_mean: Option<f64>,
    pub cost_std: Option<f64>,
    pub runtime_mean_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub k: usize,
    pub seed: u64,
    pub runs: usize,
    pub with_cost: bool,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs `cfg.runs` seeded embeddings at each sketch size. Run `r` uses seed
/// `cfg.seed + r`.
pub fn cost_sweep(g: &Graph, sizes: &[usize], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    let oracle = if cfg.with_cost {
        Some(ProjectionCostOracle::new(g)?)
    } else {
        None
    };
    // epsilon only matters for the default sketch size, which is overridden here
    let params = ApproxParams::new(0.5, cfg.k)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &d in sizes {
        let mut costs = Vec::with_capacity(cfg.runs);
        let mut times = Vec::with_capacity(cfg.runs);
        for r in 0..cfg.runs {
            let start = Instant::now();
            let model = embed_with_sketch_size(g, &params, cfg.seed.wrapping_add(r as u64), d)?;
            times.push(start.elapsed().as_secs_f64());
            if let Some(oracle) = &oracle {
                costs.push(oracle.relative_cost(&model.factors.u)?);
            }
        }
        let (cost_mean, cost_std) = if costs.is_empty() {
            (None, None)
        } else {
            let (m, s) = mean_std(&costs);
            (Some(m), Some(s))
        };
        rows.push(SweepRow {
            d,
            cost_mean,
            cost_std,
            runtime_mean_secs: mean_std(&times).0,
        });
    }
    Ok(rows)
}
