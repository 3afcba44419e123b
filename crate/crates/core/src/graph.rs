//! Immutable undirected weighted graphs in compressed sparse row form.
//!
//! Node identifiers are arbitrary whitespace-free tokens interned in
//! first-seen order, so internal index `i` always refers to the `i`-th
//! distinct token of the input.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
    num_edges: usize,
    total_weight: f64,
}

/// Weighted degree of every node (row sums of the adjacency matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degree of node {i} must be positive and finite, got {}",
                values[i]
            )));
        }
        Ok(DegreeVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Accumulates nodes and edges before freezing them into a [`Graph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    // (lo, hi) -> summed weight; BTreeMap keeps CSR construction deterministic
    edges: BTreeMap<(usize, usize), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `id`, returning its index. Existing ids keep their index.
    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.node_ids.len();
        self.node_ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    /// Adds an undirected edge; repeated pairs sum their weights.
    pub fn add_edge(&mut self, u: &str, v: &str, weight: f64) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop {
                line: 0,
                node: u.to_owned(),
            });
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "edge ({u}, {v}) has non-positive weight {weight}"
            )));
        }
        let a = self.add_node(u);
        let b = self.add_node(v);
        *self.edges.entry((a.min(b), a.max(b))).or_insert(0.0) += weight;
        Ok(())
    }

    pub fn build(self) -> Result<Graph> {
        let n = self.node_ids.len();
        let mut counts = vec![0usize; n];
        for &(a, b) in self.edges.keys() {
            counts[a] += 1;
            counts[b] += 1;
        }
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(Error::IsolatedNode(self.node_ids[i].clone()));
        }

        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        for c in &counts {
            row_offsets.push(row_offsets.last().unwrap() + c);
        }
        let nnz = row_offsets[n];
        let mut col_indices = vec![0usize; nnz];
        let mut weights = vec![0f64; nnz];
        let mut cursor = row_offsets[..n].to_vec();
        // rows must come out sorted by column
        let mut ordered: Vec<(usize, usize, f64)> = Vec::with_capacity(nnz);
        for (&(a, b), &w) in &self.edges {
            ordered.push((a, b, w));
            ordered.push((b, a, w));
        }
        ordered.sort_by_key(|x| (x.0, x.1));
        for (row, col, w) in ordered {
            let slot = cursor[row];
            col_indices[slot] = col;
            weights[slot] = w;
            cursor[row] += 1;
        }
        let total_weight = weights.iter().sum();

        Ok(Graph {
            node_ids: self.node_ids,
            index: self.index,
            row_offsets,
            col_indices,
            weights,
            num_edges: self.edges.len(),
            total_weight,
        })
    }
}

impl Graph {
    /// Parses the line-oriented edge-list format: `u v` or `u v w` per line,
    /// `#` comments, blank lines ignored, LF or CRLF endings.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut builder = GraphBuilder::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let (u, v, w) = match tokens.as_slice() {
                [u, v] => (*u, *v, 1.0),
                [u, v, w] => {
                    let w: f64 = w.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("weight '{w}' is not a number"),
                    })?;
                    (*u, *v, w)
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected 2 or 3 fields, found {}", tokens.len()),
                    })
                }
            };
            if u == v {
                return Err(Error::SelfLoop {
                    line: line_no,
                    node: u.to_owned(),
                });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("weight must be positive and finite, got {w}"),
                });
            }
            builder.add_edge(u, v, w)?;
        }
        builder.build()
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::parse_edge_list(&text)
    }

    /// Serializes to the edge-list format, one `u v w` line per undirected edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            for (j, w) in self.neighbors(i) {
                if i < j {
                    let _ = writeln!(out, "{} {} {:?}", self.node_ids[i], self.node_ids[j], w);
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.num_edges
    }

    /// Sum of all adjacency entries, i.e. twice the total edge weight.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Neighbors of `i` with edge weights, in ascending index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Unweighted degree.
    pub fn neighbor_count(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn degree_vector(&self) -> DegreeVector {
        DegreeVector(
            (0..self.n())
                .map(|i| self.neighbors(i).map(|(_, w)| w).sum())
                .collect(),
        )
    }

    /// Row `i` of the normalized random-walk matrix `D^-1/2 W D^-1/2`.
    pub fn walk_matrix_row(&self, deg: &DegreeVector, i: usize) -> Result<Vec<(usize, f64)>> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n(),
            });
        }
        if deg.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "degree vector has {} entries, graph has {} nodes",
                deg.len(),
                self.n()
            )));
        }
        let di = deg.get(i);
        Ok(self
            .neighbors(i)
            .map(|(j, w)| (j, w / (di * deg.get(j)).sqrt()))
            .collect())
    }

    /// Dense `n x n` normalized random-walk matrix. Only meant for small graphs.
    pub fn dense_walk_matrix(&self, deg: &DegreeVector) -> nalgebra::DMatrix<f64> {
        let n = self.n();
        let mut l = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, w) in self.neighbors(i) {
                l[(i, j)] = w / (deg.get(i) * deg.get(j)).sqrt();
            }
        }
        l
    }

    /// Normalized cut between two disjoint node sets:
    /// `cut(A,B)/assoc(A,V) + cut(A,B)/assoc(B,V)`.
    pub fn normalized_cut(&self, part_a: &[usize], part_b: &[usize]) -> Result<f64> {
        if part_a.is_empty() || part_b.is_empty() {
            return Err(Error::InvalidPartition("both parts must be nonempty".into()));
        }
        let mut side = vec![0u8; self.n()];
        for (mark, part) in [(1u8, part_a), (2u8, part_b)] {
            for &v in part {
                if v >= self.n() {
                    return Err(Error::IndexOutOfRange {
                        index: v,
                        len: self.n(),
                    });
                }
                if side[v] != 0 && side[v] != mark {
                    return Err(Error::InvalidPartition(format!(
                        "node '{}' is in both parts",
                        self.node_ids[v]
                    )));
                }
                side[v] = mark;
            }
        }
        let (mut cut, mut assoc_a, mut assoc_b) = (0.0, 0.0, 0.0);
        for v in 0..self.n() {
            match side[v] {
                1 => {
                    for (u, w) in self.neighbors(v) {
                        assoc_a += w;
                        if side[u] == 2 {
                            cut += w;
                        }
                    }
                }
                2 => assoc_b += self.neighbors(v).map(|(_, w)| w).sum::<f64>(),
                _ => {}
            }
        }
        Ok(cut / assoc_a + cut / assoc_b)
    }

    /// SHA-256 over the node table and CSR arrays, truncated to 64 bits.
    pub fn checksum(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        for id in &self.node_ids {
            hasher.update((id.len() as u64).to_le_bytes());
            hasher.update(id.as_bytes());
        }
        for &o in &self.row_offsets {
            hasher.update((o as u64).to_le_bytes());
        }
        for &c in &self.col_indices {
            hasher.update((c as u64).to_le_bytes());
        }
        for &w in &self.weights {
            hasher.update(w.to_le_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    /// Subgraph induced by `keep` (indices into this graph), preserving the
    /// relative order of the kept nodes. Fails if a kept node loses all edges.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<Graph> {
        let mut kept = vec![false; self.n()];
        for &v in keep {
            kept[v] = true;
        }
        let mut builder = GraphBuilder::new();
        let mut order: Vec<usize> = keep.to_vec();
        order.sort_unstable();
        for &v in &order {
            builder.add_node(&self.node_ids[v]);
        }
        for &v in &order {
            for (u, w) in self.neighbors(v) {
                if v < u && kept[u] {
                    builder.add_edge(&self.node_ids[v], &self.node_ids[u], w)?;
                }
            }
        }
        builder.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::parse_edge_list("0 1\n1 2\n2 0").unwrap()
    }

    fn path3() -> Graph {
        Graph::parse_edge_list("0 1\n1 2").unwrap()
    }

    #[test]
    fn parses_triangle() {
        let g = triangle();
        assert_eq!((g.n(), g.m()), (3, 3));
        assert!(g.weights().iter().all(|&w| w == 1.0));
        assert_eq!(g.total_weight(), 6.0);
    }

    #[test]
    fn parses_single_weighted_edge() {
        let g = Graph::parse_edge_list("a b 2.5").unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
        assert_eq!(g.degree_vector().values(), &[2.5, 2.5]);
    }

    #[test]
    fn comments_crlf_and_duplicates() {
        let g = Graph::parse_edge_list("# header\r\nx y 1\r\n\r\ny x 2\r\nx z\r\n").unwrap();
        assert_eq!(g.node_ids(), &["x", "y", "z"]);
        assert_eq!(g.m(), 2);
        let deg = g.degree_vector();
        assert_eq!(deg.values(), &[4.0, 3.0, 1.0]);
    }

    #[test]
    fn rejects_self_loop_with_line_number() {
        let err = Graph::parse_edge_list("a b\nb b\n").unwrap_err();
        match err {
            Error::SelfLoop { line, node } => {
                assert_eq!(line, 2);
                assert_eq!(node, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(
            Graph::parse_edge_list("a b 0").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(matches!(
            Graph::parse_edge_list("a b -1").unwrap_err(),
            Error::Parse { .. }
        ));
        assert!(matches!(
            Graph::parse_edge_list("a b\nc d x").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
        assert!(matches!(
            Graph::parse_edge_list("a b 1 2").unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn builder_rejects_isolated_node() {
        let mut b = GraphBuilder::new();
        b.add_node("lonely");
        b.add_edge("a", "b", 1.0).unwrap();
        assert!(matches!(b.build().unwrap_err(), Error::IsolatedNode(id) if id == "lonely"));
    }

    #[test]
    fn degrees() {
        assert_eq!(triangle().degree_vector().values(), &[2.0, 2.0, 2.0]);
        assert_eq!(path3().degree_vector().values(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn walk_rows() {
        let g = triangle();
        let deg = g.degree_vector();
        assert_eq!(g.walk_matrix_row(&deg, 0).unwrap(), vec![(1, 0.5), (2, 0.5)]);

        let g = path3();
        let deg = g.degree_vector();
        let row = g.walk_matrix_row(&deg, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(row.len(), 2);
        assert_eq!(row[0].0, 0);
        assert_eq!(row[1].0, 2);
        assert!((row[0].1 - s).abs() < 1e-15 && (row[1].1 - s).abs() < 1e-15);

        let g = Graph::parse_edge_list("a b 2.5").unwrap();
        let deg = g.degree_vector();
        assert_eq!(g.walk_matrix_row(&deg, 0).unwrap(), vec![(1, 1.0)]);
        assert!(matches!(
            g.walk_matrix_row(&deg, 2).unwrap_err(),
            Error::IndexOutOfRange { index: 2, len: 2 }
        ));
    }

    #[test]
    fn normalized_cut_examples() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 0\n3 4\n4 5\n5 3").unwrap();
        assert_eq!(g.normalized_cut(&[0, 1, 2], &[3, 4, 5]).unwrap(), 0.0);

        let k4 = Graph::parse_edge_list("0 1\n0 2\n0 3\n1 2\n1 3\n2 3").unwrap();
        let v = k4.normalized_cut(&[0, 1], &[2, 3]).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12);

        let v = path3().normalized_cut(&[0], &[1, 2]).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_cut_errors() {
        let g = path3();
        assert!(matches!(
            g.normalized_cut(&[], &[1]).unwrap_err(),
            Error::InvalidPartition(_)
        ));
        assert!(matches!(
            g.normalized_cut(&[0, 1], &[1, 2]).unwrap_err(),
            Error::InvalidPartition(_)
        ));
    }

    #[test]
    fn induced_subgraph_keeps_order() {
        let g = Graph::parse_edge_list("a b\nb c\nc d\nd a").unwrap();
        let sub = g.induced_subgraph(&[3, 0, 1]).unwrap();
        assert_eq!(sub.node_ids(), &["a", "b", "d"]);
        assert_eq!(sub.m(), 2);
        assert!(matches!(
            g.induced_subgraph(&[0, 2]).unwrap_err(),
            Error::IsolatedNode(_)
        ));
    }
}
