//! Fast inductive graph representation learning.
//!
//! The pipeline sketches the normalized random-walk matrix
//! `L = D^{-1/2} W D^{-1/2}` with a seeded Gaussian projection, takes a thin
//! SVD of the sketch, and scales the left factor by `D^{-1/2}` to obtain node
//! embeddings. New nodes are folded into an existing model without
//! recomputation. An evaluation harness covers clustering quality,
//! structural-hole detection and projection-cost diagnostics.
//!
//! ```
//! use figrl::{embed, ApproxParams, Graph};
//!
//! let g = Graph::parse_edge_list("a b\nb c\nc a\nc d\n").unwrap();
//! let model = embed(&g, &ApproxParams::new(0.5, 2).unwrap(), 7).unwrap();
//! assert_eq!(model.y.shape(), (4, 2));
//! ```

pub mod cli;
pub mod error;
pub mod eval;
pub mod factor;
pub mod graph;
pub mod inductive;
pub mod io;
pub mod projection;
pub mod protocol;
pub mod sketch;

pub use error::{Error, Result};
pub use factor::{embed, embed_with_sketch_size, thin_svd, EmbeddingModel, SvdFactors};
pub use graph::{DegreeVector, Graph, GraphBuilder};
pub use inductive::{extend, fold_in, Extension, UnseenNode};
pub use projection::ProjectionSpec;
pub use sketch::{
    build_sketch, relative_projection_cost, sketch_size, ApproxParams, ProjectionCostOracle, Sketch,
};
