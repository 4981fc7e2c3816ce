//! Liberal event extraction with automatic event-schema induction.
//!
//! The pipeline turns sentences into candidate events ([`promptgen`]),
//! builds a heterogeneous trigger/argument graph per sentence
//! ([`eventgraph`]), encodes it with role-typed multi-head attention
//! ([`encoder`]), clusters triggers and arguments ([`clustering`]) and reads
//! event schemas off the attention weights ([`schema`]). [`pipeline`] wires
//! the stages together behind the `evschema` command-line tool.

pub mod clustering;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eventgraph;
pub mod io;
pub mod pipeline;
pub mod promptgen;
pub mod schema;

pub use error::{BackendError, Error, Result};

/// Mixes a tag into a seed (SplitMix64 finalizer) so every stochastic
/// component gets its own reproducible stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
