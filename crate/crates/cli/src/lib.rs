//! Experiment runner for the `qzd` simulator: configuration, recipes,
//! artifact formats and the reference check.

pub mod args;
pub mod check;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod recipes;

use error::CliResult;
use std::path::Path;

/// Runs a resolved configuration, prints the summary, and applies `--check`.
pub fn execute(cfg: &config::RunConfig, out_flag: Option<&Path>, check: bool) -> CliResult<experiments::Outcome> {
    let out = output::resolve_out_dir(out_flag, cfg.out_dir.as_deref());
    log::info!("running {} into {}", cfg.experiment.name(), out.display());
    let o = experiments::run(cfg, &out)?;
    output::print_summary(&o.summary);
    for f in &o.files {
        log::info!("wrote {}", f.display());
    }
    if check {
        let lines = check::check(cfg.experiment.name(), &o)?;
        for l in &lines {
            println!("{l}");
        }
        let n = check::failures(&lines);
        if n > 0 {
            return Err(error::CliError::Check(n));
        }
    }
    Ok(o)
}
