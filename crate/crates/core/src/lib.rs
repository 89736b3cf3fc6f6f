//! Makeup transfer by semantic-aware patch correspondence.
//!
//! Source and reference faces are encoded into four-level feature pyramids.
//! Each source patch is rebuilt from reference patches of the same facial
//! part, weighted by a softmax over normalized cross-correlation. The
//! rebuilt pyramid is mixed back with the source per level and per recipe
//! (shade, several references, parts from different references, removal)
//! and rendered straight from its finest level.

pub mod control;
pub mod encoder;
pub mod engine;
mod error;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod parallel;
pub mod recipe;
pub mod sac;
pub mod synthesis;
pub mod tensor;

pub use engine::{Face, Settings, TransferOutput};
pub use error::{Error, Result};
pub use recipe::TransferRecipe;
pub use tensor::{BinaryMask, FeatureMap, FeaturePyramid, LabelMask, MaskPyramid, OneHotMask, Provenance};
