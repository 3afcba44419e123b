//! Thin SVD of the sketch and assembly of the degree-scaled embeddings.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DegreeVector, Graph};
use crate::projection::ProjectionSpec;
use crate::sketch::{build_sketch, sketch_size, ApproxParams, Sketch};

/// Singular values at or below this fraction of the largest are treated as
/// rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Below this conditioning the left factor is re-orthonormalized.
const REORTHONORMALIZE_BELOW: f64 = 1e-7;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `n x k`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending, non-negative.
    pub sigma: Vec<f64>,
    /// `d x k`, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Number of leading columns with singular values above the rank
    /// tolerance; trailing columns of `u` are zero.
    pub rank: usize,
}

impl SvdFactors {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `1/sigma_i` for the numerically nonzero singular values, 0 otherwise.
    pub fn inverse_sigma(&self) -> Vec<f64> {
        self.sigma
            .iter()
            .enumerate()
            .map(|(i, s)| if i < self.rank { 1.0 / s } else { 0.0 })
            .collect()
    }
}

/// Everything needed to reproduce the embeddings and fold in new nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    /// `n x k`; row `i` is `u` row `i` divided by `sqrt(degree_i)`.
    pub y: DMatrix<f64>,
    pub factors: SvdFactors,
    pub spec: ProjectionSpec,
    pub degrees: DegreeVector,
    pub node_ids: Vec<String>,
    pub params: ApproxParams,
    pub source_checksum: u64,
}

impl EmbeddingModel {
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn k(&self) -> usize {
        self.factors.k()
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|x| x == id)
    }
}

/// Rank-`k` truncated SVD of the sketch.
///
/// Eigendecomposes whichever Gram matrix is smaller (`M^T M` when `d <= n`,
/// otherwise `M M^T`), then forms `U = M V S^-1`. Columns follow the sign
/// convention that the largest-magnitude entry of each `U` column is
/// positive, lowest row winning ties.
pub fn thin_svd(sketch: &Sketch, k: usize) -> Result<SvdFactors> {
    let (n, d) = (sketch.n(), sketch.d());
    if k == 0 || k > n.min(d) {
        return Err(Error::InvalidParameter(format!(
            "rank k={k} must lie in 1..={}",
            n.min(d)
        )));
    }

    // singular values are re-measured as ||M v_i||: the Gram route squares
    // the spectrum and would put rank-deficient values near sqrt(eps) sigma_1
    let ones = vec![1.0; k];
    let mut v = if d <= n {
        top_eigenpairs(column_gram(sketch), k)?.1
    } else {
        let m = sketch.to_matrix();
        let (_, u0) = top_eigenpairs(&m * m.transpose(), k)?;
        let mut w = m.transpose() * &u0;
        for mut col in w.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col.scale_mut(1.0 / norm);
            }
        }
        w
    };
    let mut mv = left_factor(sketch, &v, &ones);
    let mut sigma: Vec<f64> = mv.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        sigma = order.iter().map(|&o| sigma[o]).collect();
        v = DMatrix::from_fn(v.nrows(), k, |r, c| v[(r, order[c])]);
        mv = DMatrix::from_fn(n, k, |r, c| mv[(r, order[c])]);
    }

    let top = sigma[0];
    if !(top > 0.0) || !top.is_finite() {
        return Err(Error::Numerical(format!(
            "largest singular value of the sketch is {top}"
        )));
    }
    let rank = sigma
        .iter()
        .take_while(|&&s| s > RANK_TOLERANCE * top)
        .count();
    if rank < k {
        warn!(
            "sketch is rank deficient: {} of {k} singular values are below {RANK_TOLERANCE:e} * sigma_1; \
             the corresponding embedding columns are zero",
            k - rank
        );
    }

    let inv_sigma: Vec<f64> = (0..k)
        .map(|c| if c < rank { 1.0 / sigma[c] } else { 0.0 })
        .collect();
    let mut u = mv;
    for (c, s) in inv_sigma.iter().enumerate() {
        u.column_mut(c).scale_mut(*s);
    }

    if sigma[k - 1] < REORTHONORMALIZE_BELOW * top && rank > 0 {
        let q = u.columns(0, rank).into_owned().qr().q();
        u.columns_mut(0, rank).copy_from(&q);
    }

    for c in 0..k {
        let col = u.column(c);
        let mut pivot = 0;
        for r in 1..n {
            if col[r].abs() > col[pivot].abs() {
                pivot = r;
            }
        }
        if col[pivot] < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }

    Ok(SvdFactors { u, sigma, v, rank })
}

/// `M^T M`, accumulated over a fixed partition of row blocks and reduced in
/// block order so the result does not depend on the thread count.
fn column_gram(sketch: &Sketch) -> DMatrix<f64> {
    let (n, d) = (sketch.n(), sketch.d());
    let rows_per_block = 256.max(n.div_ceil(64));
    let partials: Vec<DMatrix<f64>> = sketch
        .data()
        .par_chunks(rows_per_block * d)
        .map(|block| {
            let b = DMatrix::from_row_slice(block.len() / d, d, block);
            b.tr_mul(&b)
        })
        .collect();
    let mut gram = DMatrix::zeros(d, d);
    for p in partials {
        gram += p;
    }
    gram
}

/// Largest `k` eigenpairs of a symmetric matrix, descending.
fn top_eigenpairs(mat: DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = mat.nrows();
    let eig = SymmetricEigen::try_new(mat, f64::EPSILON, EIGEN_MAX_ITER).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge on a {dim}x{dim} Gram matrix"
        ))
    })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let vals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(dim, k, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// `U = M V diag(inv_sigma)`, one row at a time.
fn left_factor(sketch: &Sketch, v: &DMatrix<f64>, inv_sigma: &[f64]) -> DMatrix<f64> {
    let (n, k) = (sketch.n(), inv_sigma.len());
    let mut rows = vec![0.0; n * k];
    rows.par_chunks_mut(k).enumerate().for_each(|(i, out)| {
        project_row(sketch.row(i), v, inv_sigma, out);
    });
    DMatrix::from_row_slice(n, k, &rows)
}

/// `out = row V diag(inv_sigma)`. Shared with fold-in.
pub(crate) fn project_row(row: &[f64], v: &DMatrix<f64>, inv_sigma: &[f64], out: &mut [f64]) {
    for (c, o) in out.iter_mut().enumerate() {
        let dot: f64 = row.iter().zip(v.column(c).iter()).map(|(a, b)| a * b).sum();
        *o = dot * inv_sigma[c];
    }
}

/// Runs the full static pipeline with the default sketch size.
pub fn embed(g: &Graph, params: &ApproxParams, seed: u64) -> Result<EmbeddingModel> {
    let d = sketch_size(g.n(), params)?;
    embed_with_sketch_size(g, params, seed, d)
}

/// Same as [`embed`] with an explicit sketch size.
pub fn embed_with_sketch_size(
    g: &Graph,
    params: &ApproxParams,
    seed: u64,
    d: usize,
) -> Result<EmbeddingModel> {
    let params = ApproxParams::new(params.epsilon, params.k)?;
    if params.k > g.n() {
        return Err(Error::InvalidParameter(format!(
            "k={} exceeds the node count {}",
            params.k,
            g.n()
        )));
    }
    let degrees = g.degree_vector();
    let spec = ProjectionSpec::new(seed, d, g.n())?;
    let sketch = build_sketch(g, &degrees, &spec)?;
    let factors = thin_svd(&sketch, params.k)?;
    let y = scale_by_degree(&factors.u, &degrees);
    Ok(EmbeddingModel {
        y,
        factors,
        spec,
        degrees,
        node_ids: g.node_ids().to_vec(),
        params,
        source_checksum: sketch.source_checksum,
    })
}

pub(crate) fn scale_by_degree(u: &DMatrix<f64>, degrees: &DegreeVector) -> DMatrix<f64> {
    let mut y = u.clone();
    for (i, mut row) in y.row_iter_mut().enumerate() {
        row /= degrees.get(i).sqrt();
    }
    y
}
