//! Linear-threshold and independent-cascade diffusion, and the structural
//! hole influence index (SHII) estimated over Monte-Carlo trials.
//!
//! All randomness is derived from `(seed, trial, edge slot or node)` through
//! a stateless mixer, so a trial's coin flips and thresholds are fixed
//! regardless of the seed set. That coupling makes IC activation monotone in
//! the seed set for a fixed trial.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::cluster::Clustering;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionModel {
    LinearThreshold,
    IndependentCascade,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionConfig {
    pub model: DiffusionModel,
    /// Per-edge activation probability under IC.
    pub ic_probability: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            model: DiffusionModel::LinearThreshold,
            ic_probability: 0.01,
            trials: 10_000,
            seed: 0x5eed,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.model == DiffusionModel::IndependentCascade
            && !(self.ic_probability > 0.0 && self.ic_probability <= 1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "IC probability must lie in (0, 1], got {}",
                self.ic_probability
            )));
        }
        Ok(())
    }
}

const STREAM_IC: u64 = 0x1c;
const STREAM_LT: u64 = 0x17;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in `(0, 1]`, a pure function of its inputs.
fn uniform(seed: u64, stream: u64, trial: u64, item: u64) -> f64 {
    let h = mix(mix(mix(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)) ^ trial) ^ item);
    ((h >> 11) + 1) as f64 / (1u64 << 53) as f64
}

/// Runs one diffusion trial from `seeds`; returns the activation mask.
pub fn simulate_diffusion(
    g: &Graph,
    seeds: &[usize],
    cfg: &DiffusionConfig,
    trial: u64,
) -> Result<Vec<bool>> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("seed set is empty".into()));
    }
    if let Some(&v) = seeds.iter().find(|&&v| v >= g.n()) {
        return Err(Error::IndexOutOfRange { index: v, len: g.n() });
    }
    cfg.validate()?;
    Ok(match cfg.model {
        DiffusionModel::IndependentCascade => independent_cascade(g, seeds, cfg, trial),
        DiffusionModel::LinearThreshold => linear_threshold(g, seeds, cfg, trial),
    })
}

fn independent_cascade(g: &Graph, seeds: &[usize], cfg: &DiffusionConfig, trial: u64) -> Vec<bool> {
    let mut active = vec![false; g.n()];
    let mut frontier = Vec::new();
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            frontier.push(s);
        }
    }
    let offsets = g.row_offsets();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for (slot, (v, _)) in (offsets[u]..).zip(g.neighbors(u)) {
                if active[v] {
                    continue;
                }
                if uniform(cfg.seed, STREAM_IC, trial, slot as u64) <= cfg.ic_probability {
                    active[v] = true;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    active
}

fn linear_threshold(g: &Graph, seeds: &[usize], cfg: &DiffusionConfig, trial: u64) -> Vec<bool> {
    let n = g.n();
    let deg = g.degree_vector();
    let threshold: Vec<f64> = (0..n)
        .map(|v| uniform(cfg.seed, STREAM_LT, trial, v as u64))
        .collect();
    let mut active = vec![false; n];
    let mut influence = vec![0.0; n];
    let mut frontier = Vec::new();
    for &s in seeds {
        if !active[s] {
            active[s] = true;
            frontier.push(s);
        }
    }
    while !frontier.is_empty() {
        let mut touched = Vec::new();
        for &u in &frontier {
            for (v, w) in g.neighbors(u) {
                if !active[v] {
                    influence[v] += w / deg.get(v);
                    touched.push(v);
                }
            }
        }
        let mut next = Vec::new();
        for v in touched {
            // tolerance absorbs rounding when a node's full in-weight is active
            if !active[v] && influence[v] >= threshold[v] - 1e-12 {
                active[v] = true;
                next.push(v);
            }
        }
        frontier = next;
    }
    active
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiiEstimate {
    pub mean: f64,
    /// Standard error of the mean over trials.
    pub std_error: f64,
    pub trials: usize,
}

/// Mean over trials of (activations outside `v`'s cluster) / (activations
/// inside it), seeding `v` plus `max(1, round(0.1 |C_v|))` random cluster
/// mates per trial.
pub fn shii(g: &Graph, c: &Clustering, v: usize, cfg: &DiffusionConfig) -> Result<ShiiEstimate> {
    if c.len() != g.n() {
        return Err(Error::InvalidPartition(format!(
            "clustering covers {} nodes, graph has {}",
            c.len(),
            g.n()
        )));
    }
    if v >= g.n() {
        return Err(Error::IndexOutOfRange { index: v, len: g.n() });
    }
    cfg.validate()?;
    let cv = c.cluster_of(v);
    let mates: Vec<usize> = c.members(cv).into_iter().filter(|&u| u != v).collect();
    if mates.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "node {v} is alone in its cluster"
        )));
    }
    let sample_size = ((0.1 * (mates.len() + 1) as f64).round() as usize).clamp(1, mates.len());

    let scores: Vec<f64> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial);
            let mut seeds = vec![v];
            seeds.extend(sample(&mut rng, mates.len(), sample_size).iter().map(|i| mates[i]));
            let active = match cfg.model {
                DiffusionModel::IndependentCascade => independent_cascade(g, &seeds, cfg, trial),
                DiffusionModel::LinearThreshold => linear_threshold(g, &seeds, cfg, trial),
            };
            let (mut inside, mut outside) = (0usize, 0usize);
            for (u, &a) in active.iter().enumerate() {
                if a {
                    if c.cluster_of(u) == cv {
                        inside += 1;
                    } else {
                        outside += 1;
                    }
                }
            }
            outside as f64 / inside as f64
        })
        .collect();

    let t = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / t;
    let var = if scores.len() > 1 {
        scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    Ok(ShiiEstimate {
        mean,
        std_error: (var / t).sqrt(),
        trials: scores.len(),
    })
}
