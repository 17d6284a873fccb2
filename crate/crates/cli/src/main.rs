use clap::Parser;
use qzd_cli::args::{Cli, Plan};
use qzd_cli::recipes::RECIPES;
use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli.plan().and_then(|p| match p {
        Plan::ListRecipes => {
            let mut out = std::io::stdout().lock();
            for (name, text) in RECIPES {
                let about = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                if writeln!(out, "{name}\t{about}").is_err() {
                    break;
                }
            }
            Ok(())
        }
        Plan::Run(cfg) => qzd_cli::execute(&cfg, cli.common.out.as_deref(), cli.common.check).map(|_| ()),
    });
    if let Err(e) = result {
        eprintln!("qzd: {e}");
        std::process::exit(e.exit_code());
    }
}
