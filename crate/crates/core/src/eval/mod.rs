//! Evaluation harness: clustering, modularity, permanence, structural-hole
//! scoring and diffusion-based influence.

pub mod cluster;
pub mod diffusion;
pub mod holes;
pub mod quality;

pub use cluster::{agglomerative, centroids, kmeans, kmeans_objective, Clustering, KMeansResult};
pub use diffusion::{shii, simulate_diffusion, DiffusionConfig, DiffusionModel, ShiiEstimate};
pub use holes::{rank_descending, rds};
pub use quality::{modularity, permanence, ModularityReport, PermanenceReport};
