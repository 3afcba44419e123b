//! Gaussian projection matrices that are never stored.
//!
//! Column `j` of the `d x n` matrix `R` is produced by a ChaCha8 stream keyed
//! by `(seed, j)`: the master seed selects the key and the column index
//! selects the stream. Regenerating a column therefore costs `O(d)` and
//! always yields bit-identical values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub seed: u64,
    /// Rows of `R`, i.e. the sketch size.
    pub d: usize,
    /// Columns of `R`, i.e. the source dimension.
    pub n: usize,
}

impl ProjectionSpec {
    pub fn new(seed: u64, d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("sketch size d must be at least 1".into()));
        }
        Ok(ProjectionSpec { seed, d, n })
    }

    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.d];
        self.fill_column(j, &mut out)?;
        Ok(out)
    }

    /// Writes column `j` into `out`, which must have length `d`.
    pub fn fill_column(&self, j: usize, out: &mut [f64]) -> Result<()> {
        if j >= self.n {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.n,
            });
        }
        if out.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "column buffer has length {}, expected {}",
                out.len(),
                self.d
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(j as u64);
        for x in out.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        Ok(())
    }

    /// Adds `scale * R[:, j]` to `acc` without allocating.
    pub(crate) fn axpy_column(&self, j: usize, scale: f64, acc: &mut [f64]) {
        debug_assert!(j < self.n && acc.len() == self.d);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(j as u64);
        for a in acc.iter_mut() {
            let r: f64 = StandardNormal.sample(&mut rng);
            *a += scale * r;
        }
    }

    /// Dense `d x n` matrix. Test and diagnostic use only.
    pub fn materialize(&self) -> nalgebra::DMatrix<f64> {
        let mut r = nalgebra::DMatrix::zeros(self.d, self.n);
        let mut col = vec![0.0; self.d];
        for j in 0..self.n {
            self.fill_column(j, &mut col).expect("in range");
            r.column_mut(j).copy_from_slice(&col);
        }
        r
    }
}
