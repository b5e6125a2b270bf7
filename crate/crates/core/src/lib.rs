//! Moving-object detection and tracking for sequences shot from a moving camera.
//!
//! Frames are registered against their predecessors by phase correlation, an
//! acting background is built from the aligned history, foreground pixels are
//! classified and grouped into refined blobs, and blobs are tracked with a
//! constant-velocity Kalman filter.

pub mod annotate;
pub mod background;
pub mod blob;
pub mod error;
pub mod evaluation;
pub mod foreground;
pub mod frame;
pub mod motion;
pub mod pipeline;
pub mod sequence_io;
pub mod synthetic;
pub mod tracker;

pub use error::{Error, Result};
pub use frame::{BoundingBox, Frame, Plane};
pub use pipeline::{run_sequence, FrameResult, Pipeline, PipelineConfig};
