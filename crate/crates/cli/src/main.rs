//! `racxpt`: experiment driver for random-access coding over two-sender
//! multiple-access channels.

mod commands;
mod config;
mod error;
mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::Ctx;
use config::{DecodeConfig, ExponentConfig, JsccConfig, PackingConfig, Prop2Config, SelftestConfig, SimulateConfig};
use error::{CliError, Result};
use report::Outcome;

#[derive(Parser)]
#[command(name = "racxpt", version, about = "Method-of-types random-access coding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Report directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Check invariants of the loaded objects before the main computation.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Liu-Hughes or JSCC exponents.
    Exponent,
    /// Error probabilities over a range of blocklengths.
    Simulate,
    /// Decode one received sequence with a saved library.
    Decode,
    /// Draw a library that passes the packing audit.
    Packing,
    /// Joint source-channel code errors.
    Jscc,
    /// Mixture witness for the collision exponent.
    Prop2,
    /// Fast invariant suites.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Exponent => "exponent",
            Self::Simulate => "simulate",
            Self::Decode => "decode",
            Self::Packing => "packing",
            Self::Jscc => "jscc",
            Self::Prop2 => "prop2",
            Self::Selftest => "selftest",
        }
    }
}

/// Configs whose seed the command line may override.
trait Seeded {
    fn seed(&self) -> Option<u64>;
    /// Sets the run seed and every nested seed derived from it.
    fn set_seed(&mut self, seed: u64);
}

macro_rules! seeded {
    ($($t:ty => |$c:ident, $s:ident| $body:expr),* $(,)?) => {$(
        impl Seeded for $t {
            fn seed(&self) -> Option<u64> {
                self.seed
            }

            fn set_seed(&mut self, $s: u64) {
                let $c = self;
                $c.seed = Some($s);
                $body
            }
        }
    )*};
}

seeded!(
    ExponentConfig => |c, s| c.task.set_seed(s),
    SimulateConfig => |c, s| c.solver.seed = s,
    DecodeConfig => |_c, _s| (),
    PackingConfig => |_c, _s| (),
    JsccConfig => |c, s| c.solver.seed = s,
    Prop2Config => |c, s| c.ecthx.seed = s,
    SelftestConfig => |_c, _s| (),
);

fn required(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| CliError::Invalid(format!("`{}` needs --config", cli.command.name())))
}

/// Loads the config, resolves the seed and runs `f`.
fn dispatch<C, F>(cli: &Cli, cfg: Option<C>, f: F) -> Result<(u64, serde_json::Value, Outcome)>
where
    C: DeserializeOwned + Serialize + Seeded,
    F: FnOnce(&C, &Ctx) -> Result<Outcome>,
{
    let mut cfg = match cfg {
        Some(c) => c,
        None => config::load(required(cli)?)?,
    };
    let seed = cli.seed.or(cfg.seed()).unwrap_or(0);
    cfg.set_seed(seed);
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let ctx = Ctx { seed, verify: cli.verify, base };
    let outcome = f(&cfg, &ctx)?;
    Ok((seed, serde_json::to_value(&cfg)?, outcome))
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?;
    }
    let (seed, resolved, outcome) = match cli.command {
        Command::Exponent => dispatch::<ExponentConfig, _>(cli, None, commands::exponent::run)?,
        Command::Simulate => dispatch::<SimulateConfig, _>(cli, None, commands::simulate::run)?,
        Command::Decode => dispatch::<DecodeConfig, _>(cli, None, commands::decode::run)?,
        Command::Packing => dispatch::<PackingConfig, _>(cli, None, commands::packing::run)?,
        Command::Jscc => dispatch::<JsccConfig, _>(cli, None, commands::jscc::run)?,
        Command::Prop2 => dispatch::<Prop2Config, _>(cli, None, commands::prop2::run)?,
        Command::Selftest => {
            let default = cli.config.is_none().then(SelftestConfig::default);
            dispatch(cli, default, commands::selftest::run)?
        }
    };
    let name = cli.command.name();
    for a in outcome.verification.iter().chain(&outcome.assertions) {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    let (paths, passed) = report::emit(&cli.out, name, seed, &resolved, &outcome)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
