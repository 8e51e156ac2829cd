//! Graph neural network engine for metadata-linked collections.
//!
//! Records (artworks) are linked into an undirected homogeneous graph when
//! they share a categorical property such as their school. A two-hop
//! GraphSAGE encoder with mean aggregation produces context-aware node
//! representations, which are concatenated with a projection of precomputed
//! visual features and fed to one head per task. Heads are trained jointly
//! under a weighted sum of per-task losses.
//!
//! Module map:
//!
//! - [`graph`]: manifests, CSR adjacency, degree capping, split views, neighbor sampling
//! - [`nn`]: dense tensors and the differentiable ops the model needs
//! - [`model`]: feature matrices, task heads, forward/backward of the full model
//! - [`trainer`]: optimizers, plateau schedule, early stopping, the fit loop
//! - [`metrics`]: accuracy, cumulative score, CF1/OF1, mAP
//! - [`retrieval`]: embedding extraction and exact cosine kNN
//! - [`io`]: on-disk formats, split generation, tag vocabulary
//! - [`synth`]: synthetic collections for demos and experiments

pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod retrieval;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};

/// Derives an independent stream seed from a base seed and a sequence of
/// salts (epoch, batch index, ...).
pub fn derive_seed(base: u64, salts: &[u64]) -> u64 {
    // splitmix64 finalizer, chained.
    let mut z = base;
    for &s in salts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(s);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
