//! Command-line interface.
//!
//! Exit status 0 on success, 1 for argument, parse, validation and I/O
//! errors, 2 for numerical failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::eval::{
    agglomerative, kmeans, modularity, permanence, rank_descending, rds, shii, Clustering,
    DiffusionConfig, DiffusionModel,
};
use crate::factor::embed_with_sketch_size;
use crate::graph::Graph;
use crate::inductive::{extend, load_unseen_nodes};
use crate::io::{load_model, read_embeddings, save_model, write_embeddings, EmbeddingHeader};
use crate::protocol::{cost_sweep, unseen_node_curve, SweepConfig, UnseenSimConfig, SWEEP_RUNS};
use crate::sketch::{sketch_size, ApproxParams};

pub const DEFAULT_SEED: u64 = 42;
pub const EMBEDDINGS_FILE: &str = "embeddings.txt";
pub const MODEL_FILE: &str = "model.bin";

#[derive(Debug, Parser)]
#[command(name = "figrl", version, about = "Fast inductive graph representation learning")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a graph; writes embeddings.txt and model.bin into --out.
    ///
    /// Edge lists hold one `u v [w]` per line; duplicate edges sum their
    /// weights, self-loops are rejected.
    Embed(EmbedArgs),
    /// Fold unseen nodes into a saved model.
    Foldin(FoldinArgs),
    /// Cluster embeddings and score the result on the graph.
    Eval(EvalArgs),
    /// Relative projection cost and runtime across sketch sizes.
    CostSweep(SweepArgs),
    /// Hold out nodes, re-add them by fold-in and score the clustering.
    UnseenSim(UnseenArgs),
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Edge list.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub eps: f64,
    /// Sketch size override.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Warn when the n x d sketch exceeds this many MiB.
    #[arg(long, default_value_t = 4096)]
    pub memory_budget_mb: u64,
}

#[derive(Debug, Args)]
pub struct FoldinArgs {
    /// Directory written by `embed`.
    #[arg(long)]
    pub model_dir: PathBuf,
    /// Unseen nodes, one `id: target[=weight] ...` per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Combined embeddings file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Kmeans,
    Agglo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Modularity,
    Permanence,
    Rds,
    Shii,
    Ncut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Diffusion {
    Lt,
    Ic,
}

impl From<Diffusion> for DiffusionModel {
    fn from(d: Diffusion) -> Self {
        match d {
            Diffusion::Lt => DiffusionModel::LinearThreshold,
            Diffusion::Ic => DiffusionModel::IndependentCascade,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Edge list the embeddings were built from.
    #[arg(long)]
    pub input: PathBuf,
    /// Embeddings file.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long, value_enum, default_value = "kmeans")]
    pub alg: Algorithm,
    /// Cluster count; defaults to the embedding dimension.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Use this `node<TAB>cluster` partition instead of clustering.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lt")]
    pub model: Diffusion,
    #[arg(long, default_value_t = 0.01)]
    pub ic_p: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Restrict SHII to these node ids (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub nodes: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the partition as `node<TAB>cluster`.
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Sketch sizes (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub sweep: Vec<usize>,
    #[arg(long, default_value_t = SWEEP_RUNS)]
    pub runs: usize,
    /// Skip the dense cost oracle and time the embedding only.
    #[arg(long)]
    pub runtime_only: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UnseenArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub d: Option<usize>,
    /// Cluster count; defaults to k.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Holdout fractions (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let stdout = std::io::stdout();
    match run(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Embed(a) => cmd_embed(a, out),
        Command::Foldin(a) => cmd_foldin(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::CostSweep(a) => cmd_cost_sweep(a, out),
        Command::UnseenSim(a) => cmd_unseen_sim(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn emit_to(path: Option<&Path>, out: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => emit(out, text),
    }
}

fn cmd_embed(a: &EmbedArgs, out: &mut dyn Write) -> Result<()> {
    let params = ApproxParams::new(a.eps, a.k)?;
    if a.d == Some(0) {
        return Err(Error::InvalidParameter("--d must be at least 1".into()));
    }
    let g = Graph::load_edge_list(&a.input)?;
    let d = match a.d {
        Some(d) => d,
        None => sketch_size(g.n(), &params)?,
    };
    let sketch_mib = (g.n() as u64).saturating_mul(d as u64).saturating_mul(8) >> 20;
    if sketch_mib > a.memory_budget_mb {
        warn!(
            "sketch needs about {sketch_mib} MiB, above the {} MiB budget; consider --d",
            a.memory_budget_mb
        );
    }
    let start = Instant::now();
    let model = embed_with_sketch_size(&g, &params, a.seed, d)?;
    let elapsed = start.elapsed().as_secs_f64();

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_embeddings(
        a.out.join(EMBEDDINGS_FILE),
        &EmbeddingHeader::for_model(&model),
        &model.node_ids,
        &model.y,
    )?;
    save_model(&model, a.out.join(MODEL_FILE))?;
    if model.factors.rank < model.k() {
        warn!(
            "sketch has rank {} < k={}; trailing embedding columns are zero",
            model.factors.rank,
            model.k()
        );
    }
    emit(
        out,
        &format!(
            "n={}\nm={}\nd={}\nk={}\nrank={}\nruntime_secs={elapsed:.6}\n",
            g.n(),
            g.m(),
            d,
            model.k(),
            model.factors.rank
        ),
    )
}

fn cmd_foldin(a: &FoldinArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(a.model_dir.join(MODEL_FILE))?;
    let nodes = load_unseen_nodes(&a.input)?;
    let ext = extend(&model, &nodes)?;
    let header = EmbeddingHeader {
        n: ext.node_ids.len(),
        ..EmbeddingHeader::for_model(&model)
    };
    write_embeddings(&a.out, &header, &ext.node_ids, &ext.y)?;
    let mut report = format!(
        "folded={}\ndropped_links={}\nskipped={}\n",
        ext.node_ids.len() - model.n(),
        ext.dropped_links,
        ext.skipped.len()
    );
    for id in &ext.skipped {
        let _ = writeln!(report, "skipped_node={id}");
    }
    emit(out, &report)
}

/// Embedding rows reordered to the graph's node order.
fn align_embeddings(g: &Graph, path: &Path) -> Result<DMatrix<f64>> {
    let table = read_embeddings(path)?;
    if table.node_ids.len() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "embeddings cover {} nodes, graph has {}",
            table.node_ids.len(),
            g.n()
        )));
    }
    let mut y = DMatrix::zeros(g.n(), table.header.k);
    for (row, id) in table.node_ids.iter().enumerate() {
        let i = g
            .index_of(id)
            .ok_or_else(|| Error::UnknownNode(id.clone()))?;
        y.row_mut(i).copy_from(&table.y.row(row));
    }
    Ok(y)
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let diffusion = DiffusionConfig {
        model: a.model.into(),
        ic_probability: a.ic_p,
        trials: a.trials,
        seed: a.seed,
    };
    if a.metric == Metric::Shii {
        diffusion.validate()?;
    }
    let g = Graph::load_edge_list(&a.input)?;
    let y = align_embeddings(&g, &a.embeddings)?;
    let clustering = match &a.partition {
        Some(p) => Clustering::load_tsv(p, g.node_ids())?,
        None => {
            let k = a.clusters.unwrap_or(y.ncols());
            match a.alg {
                Algorithm::Kmeans => kmeans(&y, k, a.seed)?.clustering,
                Algorithm::Agglo => agglomerative(&y, k)?,
            }
        }
    };
    if let Some(p) = &a.partition_out {
        std::fs::write(p, clustering.to_tsv(g.node_ids())).map_err(|e| Error::io(p, e))?;
    }

    let mut report = format!("metric={:?}\nclusters={}\n", a.metric, clustering.k()).to_lowercase();
    match a.metric {
        Metric::Modularity => {
            let q = modularity(&g, &clustering)?;
            let _ = write!(
                report,
                "modularity={}\nmodularity_raw={}\npenalty={}\npenalized_nodes={}\n",
                q.penalized, q.raw, q.penalty, q.penalized_nodes
            );
        }
        Metric::Permanence => {
            let p = permanence(&g, &clustering)?;
            let _ = write!(report, "permanence_mean={}\npermanence_total={}\n", p.mean, p.total);
            for (v, x) in p.per_node.iter().enumerate() {
                let _ = writeln!(report, "node={}\tpermanence={x}", g.node_id(v));
            }
        }
        Metric::Rds => {
            let scores = rds(&y, &clustering)?;
            for (rank, v) in rank_descending(&scores).into_iter().enumerate() {
                let _ = writeln!(
                    report,
                    "rank={}\tnode={}\trds={}",
                    rank + 1,
                    g.node_id(v),
                    scores[v]
                );
            }
        }
        Metric::Shii => {
            let targets: Vec<usize> = if a.nodes.is_empty() {
                let sizes = clustering.sizes();
                (0..g.n())
                    .filter(|&v| sizes[clustering.cluster_of(v)] > 1)
                    .collect()
            } else {
                a.nodes
                    .iter()
                    .map(|id| g.index_of(id).ok_or_else(|| Error::UnknownNode(id.clone())))
                    .collect::<Result<_>>()?
            };
            let _ = writeln!(report, "diffusion={:?}\ntrials={}", diffusion.model, diffusion.trials);
            for v in targets {
                let est = shii(&g, &clustering, v, &diffusion)?;
                let _ = writeln!(
                    report,
                    "node={}\tshii={}\tstd_error={}",
                    g.node_id(v),
                    est.mean,
                    est.std_error
                );
            }
        }
        Metric::Ncut => {
            let mut total = 0.0;
            for c in 0..clustering.k() {
                let inside = clustering.members(c);
                let outside: Vec<usize> = (0..g.n()).filter(|&v| clustering.cluster_of(v) != c).collect();
                let cut = if outside.is_empty() {
                    0.0
                } else {
                    g.normalized_cut(&inside, &outside)?
                };
                total += cut;
                let _ = writeln!(report, "cluster={c}\tncut={cut}");
            }
            let _ = writeln!(report, "ncut_total={total}");
        }
    }
    emit_to(a.out.as_deref(), out, &report)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_owned(), |v| format!("{v}"))
}

fn cmd_cost_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    if a.sweep.contains(&0) {
        return Err(Error::InvalidParameter("sketch sizes must be at least 1".into()));
    }
    let g = Graph::load_edge_list(&a.input)?;
    let cfg = SweepConfig {
        k: a.k,
        seed: a.seed,
        runs: a.runs,
        with_cost: !a.runtime_only,
    };
    let rows = cost_sweep(&g, &a.sweep, &cfg)?;
    let mut table = format!("# n={} m={} k={} runs={} seed={}\n", g.n(), g.m(), a.k, a.runs, a.seed);
    table.push_str("d\tcost_mean\tcost_std\truntime_secs\n");
    for r in rows {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{:.6}",
            r.d,
            fmt_opt(r.cost_mean),
            fmt_opt(r.cost_std),
            r.runtime_mean_secs
        );
    }
    emit_to(a.out.as_deref(), out, &table)
}

fn cmd_unseen_sim(a: &UnseenArgs, out: &mut dyn Write) -> Result<()> {
    let params = ApproxParams::new(a.eps, a.k)?;
    if let Some(f) = a.fractions.iter().find(|f| !(0.0..1.0).contains(*f)) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in [0, 1), got {f}"
        )));
    }
    let g = Graph::load_edge_list(&a.input)?;
    let cfg = UnseenSimConfig {
        params,
        d: a.d,
        clusters: a.clusters.unwrap_or(a.k),
        seed: a.seed,
    };
    let rows = unseen_node_curve(&g, &a.fractions, &cfg)?;
    let mut table = format!(
        "# n={} m={} k={} eps={} clusters={} seed={}\n",
        g.n(),
        g.m(),
        a.k,
        a.eps,
        cfg.clusters,
        a.seed
    );
    table.push_str("fraction\theld_out\texcluded\tdropped_links\td\tmodularity\tmodularity_raw\n");
    for r in rows {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.fraction,
            r.held_out,
            r.excluded.len(),
            r.dropped_links,
            r.d,
            r.modularity,
            r.modularity_raw
        );
    }
    emit_to(a.out.as_deref(), out, &table)
}
