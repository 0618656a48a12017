pub mod decode;
pub mod exponent;
pub mod jscc;
pub mod packing;
pub mod prop2;
pub mod selftest;
pub mod simulate;

use std::path::PathBuf;

/// Run-wide settings resolved from the command line.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub seed: u64,
    pub verify: bool,
    /// Directory of the config file; relative paths resolve against it.
    pub base: PathBuf,
}
