//! Metadata graph: records, CSR adjacency, and fixed-fanout neighbor sampling.

mod csr;
mod manifest;
mod sampling;

pub use csr::{build_adjacency, downsample_degrees, split_view, Graph, NeighborPolicy};
pub use manifest::{LabelValue, Record, RecordManifest, Split, UNKNOWN_PROPERTY};
pub use sampling::{sample_neighborhood, HopBlock, SampledBlock, DEFAULT_FANOUTS};

pub const DEFAULT_MAX_DEGREE: usize = 128;
