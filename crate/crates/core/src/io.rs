//! On-disk formats for embeddings and trained models.
//!
//! Embeddings text: a `#figrl n=.. k=.. d=.. eps=.. seed=..` header, then
//! `node_id v1 .. vk` per line with 17 significant digits.
//!
//! Model binary (little-endian): magic, version, n, k, d, seed, epsilon,
//! rank, source checksum, then `sigma`, `v` (d x k row-major), `u`
//! (n x k row-major), degrees, and length-prefixed UTF-8 node ids.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::factor::{scale_by_degree, EmbeddingModel, SvdFactors};
use crate::graph::DegreeVector;
use crate::projection::ProjectionSpec;
use crate::sketch::ApproxParams;

const MODEL_MAGIC: &[u8; 8] = b"FIGRLMD\0";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingHeader {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl EmbeddingHeader {
    pub fn for_model(model: &EmbeddingModel) -> Self {
        EmbeddingHeader {
            n: model.n(),
            k: model.k(),
            d: model.d(),
            epsilon: model.params.epsilon,
            seed: model.spec.seed,
        }
    }
}

pub fn format_embeddings(header: &EmbeddingHeader, node_ids: &[String], y: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "#figrl n={} k={} d={} eps={} seed={}",
        header.n, header.k, header.d, header.epsilon, header.seed
    );
    for (i, id) in node_ids.iter().enumerate() {
        out.push_str(id);
        for c in 0..y.ncols() {
            let _ = write!(out, " {:.16e}", y[(i, c)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_embeddings(
    path: impl AsRef<Path>,
    header: &EmbeddingHeader,
    node_ids: &[String],
    y: &DMatrix<f64>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_embeddings(header, node_ids, y)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub header: EmbeddingHeader,
    pub node_ids: Vec<String>,
    pub y: DMatrix<f64>,
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let header_line = lines
        .next()
        .map(|(_, l)| l.trim())
        .ok_or_else(|| Error::Format("empty embeddings file".into()))?;
    let rest = header_line
        .strip_prefix("#figrl")
        .ok_or_else(|| Error::Format("missing '#figrl' header".into()))?;
    let mut fields = std::collections::HashMap::new();
    for tok in rest.split_whitespace() {
        if let Some((key, val)) = tok.split_once('=') {
            fields.insert(key, val);
        }
    }
    let get = |key: &str| -> Result<&str> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::Format(format!("header lacks '{key}'")))
    };
    let bad = |key: &str| Error::Format(format!("header field '{key}' is malformed"));
    let header = EmbeddingHeader {
        n: get("n")?.parse().map_err(|_| bad("n"))?,
        k: get("k")?.parse().map_err(|_| bad("k"))?,
        d: get("d")?.parse().map_err(|_| bad("d"))?,
        epsilon: get("eps")?.parse().map_err(|_| bad("eps"))?,
        seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
    };

    let mut node_ids = Vec::with_capacity(header.n);
    let mut values = Vec::with_capacity(header.n * header.k);
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let id = toks.next().unwrap();
        let row: Vec<f64> = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: lineno + 1,
                message: "non-numeric embedding value".into(),
            })?;
        if row.len() != header.k {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected {} values, found {}", header.k, row.len()),
            });
        }
        node_ids.push(id.to_owned());
        values.extend(row);
    }
    if node_ids.len() != header.n {
        return Err(Error::Format(format!(
            "header declares {} nodes, file has {}",
            header.n,
            node_ids.len()
        )));
    }
    Ok(EmbeddingTable {
        y: DMatrix::from_row_slice(node_ids.len(), header.k, &values),
        header,
        node_ids,
    })
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}

fn put_u64(w: &mut impl Write, x: u64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn put_f64s(w: &mut impl Write, xs: impl IntoIterator<Item = f64>) -> std::io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| m[(r, c)]))
}

pub fn write_model(model: &EmbeddingModel, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    put_u64(&mut w, model.n() as u64)?;
    put_u64(&mut w, model.k() as u64)?;
    put_u64(&mut w, model.d() as u64)?;
    put_u64(&mut w, model.spec.seed)?;
    w.write_all(&model.params.epsilon.to_le_bytes())?;
    put_u64(&mut w, model.factors.rank as u64)?;
    put_u64(&mut w, model.source_checksum)?;
    put_f64s(&mut w, model.factors.sigma.iter().copied())?;
    put_f64s(&mut w, row_major(&model.factors.v))?;
    put_f64s(&mut w, row_major(&model.factors.u))?;
    put_f64s(&mut w, model.degrees.values().iter().copied())?;
    for id in &model.node_ids {
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.f64()).collect()
    }
}

pub fn read_model(r: impl Read) -> Result<EmbeddingModel> {
    let mut r = Reader { inner: r };
    if &r.bytes::<8>()? != MODEL_MAGIC {
        return Err(Error::Format("not a model file".into()));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let n = r.u64()? as usize;
    let k = r.u64()? as usize;
    let d = r.u64()? as usize;
    let seed = r.u64()?;
    let epsilon = r.f64()?;
    let rank = r.u64()? as usize;
    let source_checksum = r.u64()?;
    if k == 0 || k > n.min(d) || rank > k {
        return Err(Error::Format(format!(
            "inconsistent model dimensions n={n} k={k} d={d} rank={rank}"
        )));
    }
    let sigma = r.f64s(k)?;
    let v = DMatrix::from_row_slice(d, k, &r.f64s(d * k)?);
    let u = DMatrix::from_row_slice(n, k, &r.f64s(n * k)?);
    let degrees = DegreeVector::from_values(r.f64s(n)?)
        .map_err(|e| Error::Format(format!("bad degree table: {e}")))?;
    let mut node_ids = Vec::with_capacity(n);
    for _ in 0..n {
        let len = u32::from_le_bytes(r.bytes()?) as usize;
        let mut buf = vec![0u8; len];
        r.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated node table: {e}")))?;
        node_ids.push(String::from_utf8(buf).map_err(|_| Error::Format("node id is not UTF-8".into()))?);
    }
    let y = scale_by_degree(&u, &degrees);
    Ok(EmbeddingModel {
        y,
        factors: SvdFactors { u, sigma, v, rank },
        spec: ProjectionSpec::new(seed, d, n)?,
        degrees,
        node_ids,
        params: ApproxParams::new(epsilon, k).map_err(|e| Error::Format(e.to_string()))?,
        source_checksum,
    })
}

pub fn save_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_model(model, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(std::io::BufReader::new(file))
}

/// One `key=value` line per metric.
pub fn format_report<'a>(entries: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
