//! Egocentric hand-object interaction tooling: box geometry, the hand/object
//! record model with its offset-vector codec, the hand to active-object
//! matcher, the six-metric evaluation suite, motion-blur augmentation with
//! mask-driven box correction, and dataset IO, statistics and splitting.

pub mod augment;
pub mod cli;
pub mod dataset;
pub mod geometry;
pub mod matcher;
pub mod metrics;
pub mod model;

pub use geometry::{BBox, BinaryMask, ImageSize, Point};
pub use matcher::{match_frame, MatchResult};
pub use metrics::{evaluate, ApConfig, EvalReport, Interpolation, Metric};
pub use model::{decode_offset, encode_offset, ContactState, HandRecord, HandSide, ObjectRecord, OffsetVector};
