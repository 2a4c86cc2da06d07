//! Product-manifold factorization of point clouds.
//!
//! Data sampled from a product of manifolds `M1 x M2` has graph-Laplacian
//! eigenvectors that are (approximately) elementwise products of eigenvectors
//! living on each factor. This crate computes the low spectrum of a kernel
//! graph, finds which eigenvectors factor as products of two others, and
//! splits the remaining "factor" eigenvectors into two groups with a Max-Cut,
//! one group per latent degree of freedom.
//!
//! The pipeline is split into modules that mirror its stages:
//!
//! | Module | Stage |
//! |--------|-------|
//! | [`synthgen`] | seeded synthetic datasets with known latent structure, PCA |
//! | [`spectral`] | kernel graph, random-walk Laplacian spectrum, diffusion coordinates |
//! | [`factorize`] | product-eigenvector search (eigenvalue and similarity criteria) |
//! | [`separate`] | separability matrix and Max-Cut (exact and SDP-rounded) |
//! | [`oracle`] | analytic spectra of intervals, rectangles, circles and tori |
//! | [`pipeline`] | end-to-end runs, embeddings, reports and benchmarks |
//!
//! ```no_run
//! use manifactor::pipeline::{PipelineConfig, run_pipeline};
//!
//! let config = PipelineConfig::rectangle_example("out/rect");
//! let report = run_pipeline(&config).unwrap();
//! println!("{:?}", report.assignment.factors());
//! ```

pub mod error;
pub mod factorize;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod separate;
pub mod spectral;
pub mod synthgen;

pub use error::{Error, Result};
pub use factorize::{find_triplets, FactorizationParams, Triplet, TripletList};
pub use separate::{assign_factors, build_separability, FactorAssignment, SeparabilityMatrix};
pub use spectral::{pairwise_kernel, select_epsilon, spectral_decompose, KernelGraph, SpectralDecomposition};
pub use synthgen::{GeneratorConfig, PointCloud};
