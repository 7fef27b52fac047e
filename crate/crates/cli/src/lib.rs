//! File formats, experiment presets and sweeps on top of `szlab-core`.
//!
//! - [`io`]: MNIST IDX and CIFAR-10 binary readers and writers
//! - [`emit`]: metrics CSV, summary CSV, window PGM and filter PPM output
//! - [`config`]: `key = value` config files and flag merging
//! - [`preset`]: the four experiment networks with their training defaults
//! - [`sweep`]: multi-session reduction sweeps and run manifests

pub mod config;
pub mod emit;
pub mod error;
pub mod io;
pub mod preset;
pub mod sweep;

pub use error::{Error, Result};
