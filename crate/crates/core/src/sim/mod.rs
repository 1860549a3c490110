//! Random-coding simulation: i.i.d. codebooks, memoryless transmission and
//! type-based decoding, with error rates estimated per channel.

mod codebook;
mod decoder;
mod estimate;

pub use codebook::{generate_codebook, transmit, Codebook};
pub use decoder::{decode, joint_type, Decoded, DecoderSpec, DecoderVariant, TiePolicy};
pub use estimate::{
    codebook_size, estimate_error, CodebookMode, Evaluation, SimConfig, SimParams, TrialStats,
};
