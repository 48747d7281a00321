//! Render-aware motion estimation for computer-generated video.
//!
//! A renderer knows the true motion of every pixel and the depth of every
//! visible surface. This crate turns that side information into motion
//! candidates for a block-based encoder:
//!
//! * [`mvmap`] reduces a per-pixel motion field to one representative vector
//!   per 4×4 block,
//! * [`disocclusion`] compares depth maps across frames and drops blocks whose
//!   content was hidden in the previous frame,
//! * [`search`] tests the surviving candidates next to a conventional diamond
//!   search under a Lagrangian rate cost.
//!
//! [`codec`] wraps the search in a small closed-loop inter codec, [`synthgen`]
//! renders synthetic sequences with exact ground truth, and [`eval`] computes
//! PSNR and Bjøntegaard-delta rates.

pub mod codec;
pub mod disocclusion;
pub mod error;
pub mod eval;
pub mod mv;
pub mod mvmap;
pub mod search;
pub mod seqio;
pub mod synthgen;

pub use error::{Error, Result};
pub use mv::Mv;
pub use seqio::{DepthMap, Frame, MotionField, MotionSample, Sequence, SequenceManifest};
