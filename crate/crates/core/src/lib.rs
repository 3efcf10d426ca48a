//! Payload-crafting and detection toolkit for image containers.
//!
//! Image formats tolerate content that renderers never look at: bytes after
//! the end-of-image marker, comment and application metadata segments,
//! whole-file text encodings. This crate builds carrier files that hide a
//! harmless test payload in those spots and provides the container-aware
//! scanner that finds them again: per-region signature search plus a bounded
//! inverse-transform search over reversed, base64-encoded, and
//! linebreak-split variants.

mod bytesearch;

pub mod carrier;
pub mod container;
pub mod corpus;
pub mod craft;
pub mod error;
pub mod payload;
pub mod report;
pub mod scan;
pub mod transform;

pub use error::{Error, Result};
