//! Quantifying how languages organize semantic concepts in a shared
//! multilingual embedding space.
//!
//! The pipeline: load per-language spaces ([`embedding`]), resolve a concept
//! list into every language by nearest-neighbor translation ([`align`]),
//! compare the languages' similarity structure ([`rsa`]), reconstruct and
//! score phylogenetic trees ([`phylo`]), and measure per-word semantic drift
//! between language clusters ([`drift`]). Translation quality of the loaded
//! spaces is evaluated separately ([`quality`]).
//!
//! All operations are deterministic: randomness flows from explicit seeds
//! with per-iteration streams, so results do not depend on thread count.

pub mod align;
pub mod bundled;
pub mod drift;
pub mod embedding;
pub mod language;
mod numeric;
pub mod phylo;
pub mod quality;
pub mod rsa;
pub mod synth;

pub use align::{build_concept_set, concept_set_from_aligned, translate, ConceptSet};
pub use embedding::{AlignedItemSet, EmbeddingSpace, Manifest};
pub use language::LanguageId;
pub use phylo::{tree_distance, ward_cluster, PhyloTree};
pub use rsa::{build_language_matrix, build_rsm, spearman, LanguageSimilarityMatrix};
