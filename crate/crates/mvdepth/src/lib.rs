//! File formats, dataset manifests, reports and the `mvdepth` command-line
//! harness around [`mvdepth_core`].

pub mod cli;
pub mod commands;
pub mod error;
mod header;
pub mod manifest;
pub mod pfm;
pub mod ppm;
pub mod report;

pub use error::{IoError, ParseError};
pub use manifest::Manifest;

pub(crate) fn write_text(path: &std::path::Path, text: &str) -> error::Result<()> {
    error::write_bytes(path, text.as_bytes())
}
