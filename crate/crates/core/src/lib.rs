//! No-reference light-field image quality assessment.
//!
//! The pipeline converts every sub-aperture view to CIELAB, stacks views
//! along four angular orientations, reduces each stack to its first
//! principal angular component with a full-rank Tucker decomposition, and
//! extracts two feature groups from it:
//!
//! * [`pcsc`]: spatial naturalness statistics of the principal component
//!   (AGGD and MGGD fits of MSCN coefficients, DCT entropies);
//! * [`tavi`]: angular consistency, from the SSIM of every view against the
//!   principal component.
//!
//! Orientation features are pooled and mapped to a quality score by an
//! ε-SVR ([`regress`]). [`synth`] generates graded synthetic light fields so
//! the whole pipeline can be exercised without subjective databases.

pub mod colorspace;
pub mod error;
pub mod imgproc;
pub mod lfio;
pub mod pcsc;
pub mod pipeline;
pub mod regress;
pub mod synth;
pub mod tavi;
pub mod tucker;
pub mod viewstack;

pub use error::{Error, Result};
