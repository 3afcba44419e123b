//! Folding unseen nodes into a trained model without touching its factors.
//!
//! A new node `j` with links to seen nodes gets the walk-matrix row
//! `W_jv / sqrt(D_jj D_vv)`, is pushed through the same regenerated
//! projection columns as the training rows, and is projected onto the right
//! singular vectors: `(1/sqrt(D_jj)) b V_k S_k^-1`. Seen-node degrees stay
//! frozen at their training values.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::factor::{project_row, EmbeddingModel};
use crate::sketch::sketch_row;

#[derive(Debug, Clone, PartialEq)]
pub struct UnseenNode {
    pub id: String,
    links: Vec<(String, f64)>,
}

impl UnseenNode {
    /// Builds a node, summing weights of repeated targets (first-seen order).
    pub fn new(id: impl Into<String>, links: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let id = id.into();
        let mut order: Vec<String> = Vec::new();
        let mut sums: HashMap<String, f64> = HashMap::new();
        for (target, w) in links {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "link {id} -> {target} has non-positive weight {w}"
                )));
            }
            if target == id {
                return Err(Error::InvalidParameter(format!("node '{id}' links to itself")));
            }
            match sums.get_mut(&target) {
                Some(s) => *s += w,
                None => {
                    sums.insert(target.clone(), w);
                    order.push(target);
                }
            }
        }
        if order.is_empty() {
            return Err(Error::InvalidParameter(format!("unseen node '{id}' has no links")));
        }
        let links = order
            .into_iter()
            .map(|t| {
                let w = sums[&t];
                (t, w)
            })
            .collect();
        Ok(UnseenNode { id, links })
    }

    pub fn links(&self) -> &[(String, f64)] {
        &self.links
    }

    pub fn degree(&self) -> f64 {
        self.links.iter().map(|(_, w)| w).sum()
    }
}

/// Embeds one unseen node against `model`.
pub fn fold_in(model: &EmbeddingModel, node: &UnseenNode) -> Result<Vec<f64>> {
    let index: HashMap<&str, usize> = model
        .node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    fold_in_indexed(model, &index, node)
}

fn fold_in_indexed(
    model: &EmbeddingModel,
    index: &HashMap<&str, usize>,
    node: &UnseenNode,
) -> Result<Vec<f64>> {
    let mut targets = Vec::with_capacity(node.links.len());
    for (t, w) in &node.links {
        let v = *index
            .get(t.as_str())
            .ok_or_else(|| Error::UnknownNode(t.clone()))?;
        targets.push((v, *w));
    }
    let degree = node.degree();
    let entries = targets
        .iter()
        .map(|&(v, w)| (v, w / (degree * model.degrees.get(v)).sqrt()));

    let mut b = vec![0.0; model.d()];
    sketch_row(entries, &model.spec, &mut b);

    let factors = &model.factors;
    if factors.rank < factors.k() {
        warn!(
            "model has {} zeroed trailing columns; folded-in entries there are 0",
            factors.k() - factors.rank
        );
    }
    let mut out = vec![0.0; factors.k()];
    project_row(&b, &factors.v, &factors.inverse_sigma(), &mut out);
    let scale = 1.0 / degree.sqrt();
    for x in out.iter_mut() {
        *x *= scale;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    /// Original rows followed by one row per accepted unseen node.
    pub y: DMatrix<f64>,
    pub node_ids: Vec<String>,
    /// Links dropped because they pointed at other unseen nodes.
    pub dropped_links: usize,
    /// Nodes whose every link pointed at another unseen node.
    pub skipped: Vec<String>,
}

/// Folds in `nodes` in arrival order, each independently against the
/// original model. Links between unseen nodes are dropped and counted.
pub fn extend(model: &EmbeddingModel, nodes: &[UnseenNode]) -> Result<Extension> {
    let index: HashMap<&str, usize> = model
        .node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut batch: HashSet<&str> = HashSet::new();
    for node in nodes {
        if index.contains_key(node.id.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "unseen node '{}' is already in the model",
                node.id
            )));
        }
        if !batch.insert(node.id.as_str()) {
            return Err(Error::InvalidParameter(format!(
                "unseen node '{}' listed twice",
                node.id
            )));
        }
    }

    let k = model.k();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut node_ids = model.node_ids.clone();
    let mut dropped_links = 0;
    let mut skipped = Vec::new();
    for node in nodes {
        let (seen, unseen): (Vec<_>, Vec<_>) = node
            .links
            .iter()
            .cloned()
            .partition(|(t, _)| !batch.contains(t.as_str()));
        dropped_links += unseen.len();
        if seen.is_empty() {
            warn!("unseen node '{}' links only to other unseen nodes; skipped", node.id);
            skipped.push(node.id.clone());
            continue;
        }
        let trimmed = UnseenNode::new(node.id.clone(), seen)?;
        rows.push(fold_in_indexed(model, &index, &trimmed)?);
        node_ids.push(node.id.clone());
    }
    if dropped_links > 0 {
        warn!("dropped {dropped_links} links between unseen nodes");
    }

    let n = model.n();
    let mut y = DMatrix::zeros(n + rows.len(), k);
    y.rows_mut(0, n).copy_from(&model.y);
    for (r, row) in rows.iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            y[(n + r, c)] = *x;
        }
    }
    Ok(Extension {
        y,
        node_ids,
        dropped_links,
        skipped,
    })
}

/// Parses the unseen-node format: `new_id: seen1=w1 seen2 seen3=w3`, one
/// node per line, weights default to 1, `#` comments.
pub fn parse_unseen_nodes(text: &str) -> Result<Vec<UnseenNode>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rest) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected 'new_id: target[=weight] ...'".into(),
        })?;
        let id = id.trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("invalid node id '{id}'"),
            });
        }
        let mut links = Vec::new();
        for tok in rest.split_whitespace() {
            let (target, w) = match tok.split_once('=') {
                Some((t, w)) => {
                    let w: f64 = w.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("weight '{w}' is not a number"),
                    })?;
                    (t, w)
                }
                None => (tok, 1.0),
            };
            if target.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("empty link target in '{tok}'"),
                });
            }
            links.push((target.to_owned(), w));
        }
        let node = UnseenNode::new(id, links).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(node);
    }
    Ok(out)
}

pub fn load_unseen_nodes(path: impl AsRef<Path>) -> Result<Vec<UnseenNode>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_unseen_nodes(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::embed;
    use crate::graph::Graph;
    use crate::sketch::ApproxParams;

    fn two_squares() -> Graph {
        Graph::parse_edge_list(
            "a b\nb c\nc d\nd a\na c\ne f\nf g\ng h\nh e\ne g\nd e\nb d\nf h",
        )
        .unwrap()
    }

    fn model() -> EmbeddingModel {
        embed(&two_squares(), &ApproxParams::new(0.3, 3).unwrap(), 5).unwrap()
    }

    fn links(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
        pairs.iter().map(|(t, w)| (t.to_string(), *w)).collect()
    }

    #[test]
    fn refolding_training_rows_reproduces_embeddings() {
        let g = two_squares();
        let m = model();
        for i in 0..g.n() {
            let node = UnseenNode::new(
                "probe",
                g.neighbors(i).map(|(j, w)| (g.node_id(j).to_owned(), w)),
            )
            .unwrap();
            let v = fold_in(&m, &node).unwrap();
            let row = m.y.row(i);
            let diff: f64 = v.iter().zip(row.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(diff <= 1e-8 * row.norm(), "node {i}: {diff}");
        }
    }

    #[test]
    fn duplicate_targets_are_pre_summed() {
        let m = model();
        let a = UnseenNode::new("x", links(&[("a", 1.0), ("b", 2.0), ("a", 0.5)])).unwrap();
        let b = UnseenNode::new("x", links(&[("a", 1.5), ("b", 2.0)])).unwrap();
        assert_eq!(a, b);
        assert_eq!(fold_in(&m, &a).unwrap(), fold_in(&m, &b).unwrap());
    }

    #[test]
    fn scaling_link_weights_is_harmless() {
        let m = model();
        let a = UnseenNode::new("x", links(&[("a", 1.0), ("f", 3.0)])).unwrap();
        let b = UnseenNode::new("x", links(&[("a", 4.0), ("f", 12.0)])).unwrap();
        let (va, vb) = (fold_in(&m, &a).unwrap(), fold_in(&m, &b).unwrap());
        for (x, y) in va.iter().zip(&vb) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn fold_in_errors() {
        let m = model();
        let node = UnseenNode::new("x", links(&[("nope", 1.0)])).unwrap();
        assert!(matches!(fold_in(&m, &node).unwrap_err(), Error::UnknownNode(t) if t == "nope"));
        assert!(UnseenNode::new("x", Vec::new()).is_err());
        assert!(UnseenNode::new("x", links(&[("a", 0.0)])).is_err());
    }

    #[test]
    fn extend_with_nothing_is_identity() {
        let m = model();
        let ext = extend(&m, &[]).unwrap();
        assert_eq!(ext.y, m.y);
        assert_eq!(ext.node_ids, m.node_ids);
    }

    #[test]
    fn extend_drops_links_between_unseen_nodes() {
        let m = model();
        let nodes = vec![
            UnseenNode::new("x", links(&[("a", 1.0), ("y", 1.0)])).unwrap(),
            UnseenNode::new("y", links(&[("x", 1.0)])).unwrap(),
            UnseenNode::new("z", links(&[("h", 2.0)])).unwrap(),
        ];
        let ext = extend(&m, &nodes).unwrap();
        assert_eq!(ext.dropped_links, 2);
        assert_eq!(ext.skipped, vec!["y".to_string()]);
        assert_eq!(ext.y.nrows(), m.n() + 2);
        assert_eq!(&ext.node_ids[m.n()..], &["x".to_string(), "z".to_string()]);
        assert_eq!(ext.y.rows(0, m.n()), m.y.rows(0, m.n()));

        // row for x equals an isolated fold-in with only its seen link
        let alone = fold_in(&m, &UnseenNode::new("x", links(&[("a", 1.0)])).unwrap()).unwrap();
        for c in 0..m.k() {
            assert_eq!(ext.y[(m.n(), c)], alone[c]);
        }
    }

    #[test]
    fn extend_rejects_known_ids() {
        let m = model();
        let nodes = vec![UnseenNode::new("a", links(&[("b", 1.0)])).unwrap()];
        assert!(extend(&m, &nodes).is_err());
    }

    #[test]
    fn parses_unseen_file() {
        let nodes = parse_unseen_nodes("# new nodes\nx: a=2 b\r\ny: c=0.5 c=0.5\n").unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].links(), &links(&[("a", 2.0), ("b", 1.0)])[..]);
        assert_eq!(nodes[1].links(), &links(&[("c", 1.0)])[..]);
        assert!(matches!(
            parse_unseen_nodes("x a b").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
        assert!(parse_unseen_nodes("x: a=abc").is_err());
        assert!(parse_unseen_nodes("x:").is_err());
    }
}
