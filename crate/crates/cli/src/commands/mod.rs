pub mod penalty_check;
pub mod solve;
pub mod sweep;
pub mod transport;

use anyhow::Result;

use crate::output::OutputDir;

/// Output directories are created only once the configuration has been
/// validated, so schema errors leave no files behind.
pub trait MakeOutput: FnOnce() -> Result<OutputDir> {}

impl<F: FnOnce() -> Result<OutputDir>> MakeOutput for F {}
