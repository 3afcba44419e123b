//! Projection-cost preserving sketch `M = (1/sqrt(d)) L R^T` of the
//! normalized random-walk matrix, plus the sketch-size rule and the dense
//! relative projection-cost diagnostic.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DegreeVector, Graph};
use crate::projection::ProjectionSpec;

/// Largest graph the dense projection-cost oracle accepts.
pub const ORACLE_MAX_NODES: usize = 5000;

const SKETCH_MAGIC: &[u8; 8] = b"FIGRLSK\0";
const SKETCH_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    pub epsilon: f64,
    pub k: usize,
}

impl ApproxParams {
    pub fn new(epsilon: f64, k: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(ApproxParams { epsilon, k })
    }
}

/// Default sketch size `ceil(max(4 ln(n) / eps^2, k / eps^2))`.
///
/// Uses the natural logarithm and applies no cap, so `d` may exceed `n`.
pub fn sketch_size(n: usize, params: &ApproxParams) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sketch size needs at least 2 nodes, got {n}"
        )));
    }
    let ApproxParams { epsilon, k } = ApproxParams::new(params.epsilon, params.k)?;
    let eps2 = epsilon * epsilon;
    let jl = 4.0 * (n as f64).ln() / eps2;
    let rank = k as f64 / eps2;
    let x = jl.max(rank);
    // k / eps^2 is often an integer that rounding pushes a hair above
    let nearest = x.round();
    let d = if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    Ok(d as usize)
}

/// Dense `n x d` sketch, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch {
    pub(crate) data: Vec<f64>,
    pub spec: ProjectionSpec,
    pub source_checksum: u64,
}

impl Sketch {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.spec.d..(i + 1) * self.spec.d]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n(), self.d(), &self.data)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(SKETCH_MAGIC)?;
        w.write_all(&SKETCH_VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.d() as u64).to_le_bytes())?;
        w.write_all(&self.spec.seed.to_le_bytes())?;
        w.write_all(&self.source_checksum.to_le_bytes())?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Sketch> {
        let fmt = |e: std::io::Error| Error::Format(format!("truncated sketch file: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(fmt)?;
        if &magic != SKETCH_MAGIC {
            return Err(Error::Format("not a sketch file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(fmt)?;
        let version = u32::from_le_bytes(b4);
        if version != SKETCH_VERSION {
            return Err(Error::Format(format!("unsupported sketch version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b8).map_err(fmt)?;
            Ok(u64::from_le_bytes(b8))
        };
        let n = next_u64(&mut r)? as usize;
        let d = next_u64(&mut r)? as usize;
        let seed = next_u64(&mut r)?;
        let source_checksum = next_u64(&mut r)?;
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Error::Format("sketch dimensions overflow".into()))?;
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes).map_err(fmt)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Sketch {
            data,
            spec: ProjectionSpec::new(seed, d, n)?,
            source_checksum,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Sketch> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Sketch::read_from(std::io::BufReader::new(file))
    }
}

/// Computes one sketch row: `(1/sqrt(d)) * sum_j L_ij R[:, j]`, neighbors in
/// CSR order. Fold-in reuses this so that a node's own row is reproduced
/// exactly.
pub(crate) fn sketch_row(
    entries: impl IntoIterator<Item = (usize, f64)>,
    spec: &ProjectionSpec,
    out: &mut [f64],
) {
    out.fill(0.0);
    for (j, l) in entries {
        spec.axpy_column(j, l, out);
    }
    let scale = 1.0 / (spec.d as f64).sqrt();
    for x in out.iter_mut() {
        *x *= scale;
    }
}

/// Builds the sketch in a single pass over the graph rows. Rows are
/// independent, so they are computed in parallel with identical results.
pub fn build_sketch(g: &Graph, deg: &DegreeVector, spec: &ProjectionSpec) -> Result<Sketch> {
    if spec.n != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "projection has {} columns but graph has {} nodes",
            spec.n,
            g.n()
        )));
    }
    if deg.len() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "degree vector has {} entries, graph has {} nodes",
            deg.len(),
            g.n()
        )));
    }
    let d = spec.d;
    let mut data = vec![0.0; g.n() * d];
    data.par_chunks_mut(d).enumerate().for_each(|(i, out)| {
        let di = deg.get(i);
        let entries = g.neighbors(i).map(|(j, w)| (j, w / (di * deg.get(j)).sqrt()));
        sketch_row(entries, spec, out);
    });
    Ok(Sketch {
        data,
        spec: *spec,
        source_checksum: g.checksum(),
    })
}

/// Exact spectral data of `L` for evaluating projection costs of arbitrary
/// bases. Built once per graph; `L` is symmetric, so its singular values are
/// the absolute eigenvalues.
#[derive(Debug, Clone)]
pub struct ProjectionCostOracle {
    walk: DMatrix<f64>,
    /// Singular values of `L`, descending.
    singular_values: Vec<f64>,
    /// Left singular vectors, columns aligned with `singular_values`.
    singular_vectors: DMatrix<f64>,
    frobenius_sq: f64,
}

impl ProjectionCostOracle {
    pub fn new(g: &Graph) -> Result<Self> {
        if g.n() > ORACLE_MAX_NODES {
            return Err(Error::TooLargeForOracle {
                n: g.n(),
                limit: ORACLE_MAX_NODES,
            });
        }
        let walk = g.dense_walk_matrix(&g.degree_vector());
        let eig = SymmetricEigen::new(walk.clone());
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
                .then(a.cmp(&b))
        });
        let singular_values = order.iter().map(|&i| eig.eigenvalues[i].abs()).collect();
        let singular_vectors = DMatrix::from_fn(g.n(), g.n(), |r, c| eig.eigenvectors[(r, order[c])]);
        let frobenius_sq = walk.norm_squared();
        Ok(ProjectionCostOracle {
            walk,
            singular_values,
            singular_vectors,
            frobenius_sq,
        })
    }

    pub fn walk_matrix(&self) -> &DMatrix<f64> {
        &self.walk
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Top-`k` exact left singular vectors as an `n x k` matrix.
    pub fn top_singular_vectors(&self, k: usize) -> DMatrix<f64> {
        self.singular_vectors.columns(0, k).into_owned()
    }

    /// `||L - L_k||_F^2`, the optimal rank-`k` residual.
    pub fn optimal_residual(&self, k: usize) -> f64 {
        self.singular_values.iter().skip(k).map(|s| s * s).sum()
    }

    /// `||L - U U^T L||_F^2` for an orthonormal `U`.
    pub fn projection_cost(&self, u: &DMatrix<f64>) -> Result<f64> {
        check_orthonormal(u, 1e-8)?;
        if u.nrows() != self.walk.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} rows, graph has {} nodes",
                u.nrows(),
                self.walk.nrows()
            )));
        }
        let proj = u.transpose() * &self.walk;
        Ok(self.frobenius_sq - proj.norm_squared())
    }

    /// `(||L - U U^T L||_F^2 - ||L - L_k||_F^2) / ||L - L_k||_F^2` with `k`
    /// the column count of `U`.
    pub fn relative_cost(&self, u: &DMatrix<f64>) -> Result<f64> {
        let cost = self.projection_cost(u)?;
        let residual = self.optimal_residual(u.ncols());
        if residual <= f64::EPSILON * self.frobenius_sq {
            return Err(Error::Numerical(format!(
                "rank-{} residual of L vanishes; relative cost undefined",
                u.ncols()
            )));
        }
        Ok((cost - residual) / residual)
    }
}

/// Relative projection cost of `u_k` against the exact rank-`k` SVD of `L`.
pub fn relative_projection_cost(g: &Graph, u_k: &DMatrix<f64>) -> Result<f64> {
    ProjectionCostOracle::new(g)?.relative_cost(u_k)
}

pub(crate) fn check_orthonormal(u: &DMatrix<f64>, tol: f64) -> Result<()> {
    let gram = u.transpose() * u;
    let mut worst: f64 = 0.0;
    for r in 0..gram.nrows() {
        for c in 0..gram.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - target).abs());
        }
    }
    if worst > tol {
        return Err(Error::NotOrthonormal(worst));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, k: usize) -> ApproxParams {
        ApproxParams::new(eps, k).unwrap()
    }

    #[test]
    fn sketch_size_examples() {
        assert_eq!(sketch_size(34, &params(0.1, 2)).unwrap(), 1411);
        assert_eq!(sketch_size(3, &params(0.5, 100)).unwrap(), 400);
        assert_eq!(sketch_size(317_080, &params(0.1, 200)).unwrap(), 20000);
    }

    #[test]
    fn sketch_size_rejects_bad_input() {
        assert!(sketch_size(1, &params(0.1, 2)).is_err());
        assert!(ApproxParams::new(0.0, 2).is_err());
        assert!(ApproxParams::new(1.0, 2).is_err());
        assert!(ApproxParams::new(0.5, 0).is_err());
    }

    #[test]
    fn triangle_sketch_matches_dense_product() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 0").unwrap();
        let deg = g.degree_vector();
        let spec = ProjectionSpec::new(11, 2, 3).unwrap();
        let sketch = build_sketch(&g, &deg, &spec).unwrap();
        let l = g.dense_walk_matrix(&deg);
        let expected = &l * spec.materialize().transpose() / 2f64.sqrt();
        for i in 0..3 {
            for c in 0..2 {
                assert!((sketch.row(i)[c] - expected[(i, c)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = Graph::parse_edge_list("0 1\n1 2").unwrap();
        let spec = ProjectionSpec::new(1, 4, 5).unwrap();
        assert!(matches!(
            build_sketch(&g, &g.degree_vector(), &spec).unwrap_err(),
            Error::DimensionMismatch(_)
        ));
    }

    #[test]
    fn binary_round_trip() {
        let g = Graph::parse_edge_list("a b\nb c 2\nc a").unwrap();
        let spec = ProjectionSpec::new(5, 7, 3).unwrap();
        let sketch = build_sketch(&g, &g.degree_vector(), &spec).unwrap();
        let mut buf = Vec::new();
        sketch.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 32 + 3 * 7 * 8);
        let back = Sketch::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, sketch);
        assert!(Sketch::read_from(&buf[..20]).is_err());
    }

    #[test]
    fn oracle_rejects_non_orthonormal_basis() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 0\n0 2").unwrap();
        let oracle = ProjectionCostOracle::new(&g).unwrap();
        let u = DMatrix::from_element(4, 1, 1.0);
        assert!(matches!(
            oracle.relative_cost(&u).unwrap_err(),
            Error::NotOrthonormal(_)
        ));
    }

    #[test]
    fn exact_basis_has_zero_relative_cost() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 0\n0 2\n3 4\n4 5\n5 3").unwrap();
        let oracle = ProjectionCostOracle::new(&g).unwrap();
        for k in 1..4 {
            let u = oracle.top_singular_vectors(k);
            assert!(oracle.relative_cost(&u).unwrap().abs() < 1e-9);
        }
    }
}
