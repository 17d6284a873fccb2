//! Command-line surface. Per-experiment flags become parameter overrides
//! layered on top of an optional config file.

use crate::config::{load_layers, parse_layers, CollisionSpec, Cplx, EngineMode, Layers, RunConfig, SynthMode};
use crate::error::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "qzd", version, about = "Quantum Zeno dynamics cavity-field simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (else config `out_dir`, then $QZD_OUT_DIR, then ./qzd-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Compare the summary with bundled reference values; exit 4 on violation.
    #[arg(long, global = true)]
    pub check: bool,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fock-space truncation.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Vacuum Rabi frequency in rad/us.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Cavity lifetime in us.
    #[arg(long = "t-c", global = true)]
    pub t_c: Option<f64>,
    /// Thermal photon number.
    #[arg(long = "n-th", global = true)]
    pub n_th: Option<f64>,
    /// Relaxation sub-step in us.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confine the field inside the exclusion circle.
    Confine(ConfineArgs),
    /// Semi-transparent barrier cat.
    Cat(CatArgs),
    /// Multi-component cat from repeated collisions.
    Multicat(MulticatArgs),
    /// Drag a coherent component with an s=1 barrier.
    Tweezers(TweezersArgs),
    /// Synthesize a coherent-state superposition.
    Synth(SynthArgs),
    /// Mean photon number revival inside the circle.
    Revival(RevivalArgs),
    /// Return fidelity over a (beta, phi) grid.
    SweepConfinement(SweepConfinementArgs),
    /// Transparency over a (beta, phi) grid.
    SweepTransparency(SweepTransparencyArgs),
    /// Tweezers fidelity over a (steps, phi) grid.
    SweepTweezers(SweepTweezersArgs),
    /// Wigner grid of a dumped state.
    WignerDump(WignerDumpArgs),
    /// Run a config file.
    Run { file: PathBuf },
    /// Run a shipped recipe, or list them when no name is given.
    Recipe { name: Option<String> },
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ConfineArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// projective, ideal-kick, joint-kick, pulsed or realistic.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<EngineMode>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite_p_p: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_jumps: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_every: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_half: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct CatArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realistic: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite_p_p: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_half: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct MulticatArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realistic: Option<bool>,
    /// Ideal-mode collision `beta,phi,steps`; repeat for each.
    #[arg(long = "collision", allow_hyphen_values = true)]
    #[serde(rename = "collisions", skip_serializing_if = "Vec::is_empty")]
    pub collisions: Vec<CollisionSpec>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_first: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_second: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch_threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite_p_p: Option<f64>,
    /// Expected component `re,im`; repeat for each.
    #[arg(long = "component", allow_hyphen_values = true)]
    #[serde(rename = "components", skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Cplx>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct TweezersArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<Cplx>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<Cplx>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stretch: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Cplx>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_end: Option<Cplx>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SynthArgs {
    /// Target coefficient `re,im`; repeat in component order.
    #[arg(long = "coeff", allow_hyphen_values = true)]
    #[serde(rename = "coeffs", skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<Cplx>,
    /// Target amplitude `re,im`; repeat in component order.
    #[arg(long = "gamma", allow_hyphen_values = true)]
    #[serde(rename = "gammas", skip_serializing_if = "Vec::is_empty")]
    pub gammas: Vec<Cplx>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leg_step: Option<f64>,
    /// ideal or realistic.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SynthMode>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composite_p_p: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct RevivalArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
}

/// Grids are `lo:hi:n` or a single value.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SweepConfinementArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SweepTransparencyArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SweepTweezersArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<Cplx>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct WignerDumpArgs {
    /// State dump written by another subcommand.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

fn table<T: Serialize>(a: &T) -> CliResult<toml::Table> {
    match toml::Value::try_from(a) {
        Ok(toml::Value::Table(t)) => Ok(t),
        Ok(_) => Ok(toml::Table::new()),
        Err(e) => Err(CliError::Config(format!("flags: {e}"))),
    }
}

/// What the command asks for once parsed.
#[derive(Debug)]
pub enum Plan {
    Run(RunConfig),
    ListRecipes,
}

impl Cli {
    /// Resolves file, recipe and flag layers into a run configuration.
    pub fn plan(&self) -> CliResult<Plan> {
        let (name, overrides, file): (Option<&str>, toml::Table, Option<Layers>) = match &self.command {
            Command::Confine(a) => (Some("confine"), table(a)?, None),
            Command::Cat(a) => (Some("cat"), table(a)?, None),
            Command::Multicat(a) => (Some("multicat"), table(a)?, None),
            Command::Tweezers(a) => (Some("tweezers"), table(a)?, None),
            Command::Synth(a) => (Some("synth"), table(a)?, None),
            Command::Revival(a) => (Some("revival"), table(a)?, None),
            Command::SweepConfinement(a) => (Some("sweep-confinement"), table(a)?, None),
            Command::SweepTransparency(a) => (Some("sweep-transparency"), table(a)?, None),
            Command::SweepTweezers(a) => (Some("sweep-tweezers"), table(a)?, None),
            Command::WignerDump(a) => (Some("wigner-dump"), table(a)?, None),
            Command::Run { file } => (None, toml::Table::new(), Some(load_layers(file)?)),
            Command::Recipe { name: None } => return Ok(Plan::ListRecipes),
            Command::Recipe { name: Some(n) } => {
                (None, toml::Table::new(), Some(parse_layers(crate::recipes::text(n)?)?))
            }
        };
        let mut layers = match (file, &self.common.config) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("--config: not allowed with `run` or `recipe`".into()));
            }
            (Some(l), None) => l,
            (None, Some(p)) => load_layers(p)?,
            (None, None) => Layers::default(),
        };
        let c = &self.common;
        let ph = &mut layers.physics;
        if let Some(v) = c.d {
            ph.d = v;
        }
        if let Some(v) = c.omega {
            ph.omega = v;
        }
        if let Some(v) = c.t_c {
            ph.t_c = v;
        }
        if let Some(v) = c.n_th {
            ph.n_th = v;
        }
        if let Some(v) = c.dt {
            ph.dt = v;
        }
        if c.seed.is_some() {
            layers.seed = c.seed;
        }
        if c.threads.is_some() {
            layers.threads = c.threads;
        }
        Ok(Plan::Run(layers.resolve(name, overrides)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    fn plan(args: &[&str]) -> CliResult<RunConfig> {
        let cli = Cli::try_parse_from(std::iter::once("qzd").chain(args.iter().copied())).unwrap();
        match cli.plan()? {
            Plan::Run(r) => Ok(r),
            Plan::ListRecipes => panic!("unexpected list"),
        }
    }

    #[test]
    fn flags_become_params() {
        let r = plan(&["confine", "--s", "6", "--beta", "0.1", "--phi", "6.2832", "--steps", "50", "--wigner-every", "5"])
            .unwrap();
        let Experiment::Confine(c) = r.experiment else { panic!() };
        assert_eq!((c.s, c.beta, c.steps, c.wigner_every), (6, 0.1, Some(50), Some(5)));
    }

    #[test]
    fn global_physics_flags() {
        let r = plan(&["revival", "--d", "40", "--n-th", "0", "--threads", "2"]).unwrap();
        assert_eq!(r.physics.d, 40);
        assert_eq!(r.physics.n_th, 0.0);
        assert_eq!(r.threads, Some(2));
    }

    #[test]
    fn repeated_flags() {
        let r = plan(&["synth", "--coeff", "0.6", "--coeff", "0.8", "--gamma", "3,0", "--gamma", "-3,0"]).unwrap();
        let Experiment::Synth(c) = r.experiment else { panic!() };
        assert_eq!(c.coeffs.len(), 2);
        assert_eq!(c.gammas[1].0.re, -3.0);
        let r = plan(&["multicat", "--realistic", "false", "--collision", "0.3,3,10"]).unwrap();
        let Experiment::Multicat(m) = r.experiment else { panic!() };
        assert!(!m.realistic);
        assert_eq!(m.collisions[0].steps, 10);
    }

    #[test]
    fn sweep_grids() {
        let r = plan(&["sweep-confinement", "--beta", "0.05:1.0:40", "--phi", "0:6.2832:40"]).unwrap();
        let Experiment::SweepConfinement(c) = r.experiment else { panic!() };
        assert_eq!(c.beta.values().len(), 40);
        let e = plan(&["sweep-confinement", "--beta", "0.05:1.0"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn recipe_and_bad_values() {
        let r = plan(&["recipe", "revival-s6"]).unwrap();
        assert_eq!(r.experiment.name(), "revival");
        assert_eq!(plan(&["recipe", "nope"]).unwrap_err().exit_code(), 2);
        assert_eq!(plan(&["confine", "--d", "1"]).unwrap_err().exit_code(), 2);
    }
}
