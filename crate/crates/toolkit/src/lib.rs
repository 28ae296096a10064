//! Configuration files, CSV formats and the command-line front end for
//! [`pairsource_core`].

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod materials;
pub mod reproduce;

pub use commands::{Command, Context};
pub use config::{load_config, SourceConfig};
pub use error::{FieldError, ToolkitError};
