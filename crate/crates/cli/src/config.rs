//! Run configuration: a TOML file with `experiment`, optional run settings,
//! a `[physics]` table and a `[params]` table, overridden by flags.

use crate::error::{CliError, CliResult};
use qzd::opensys::RelaxationConfig;
use qzd::units::{DIM, N_THERMAL, OMEGA, T_CAVITY};
use qzd::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const EXPERIMENTS: [&str; 10] = [
    "confine",
    "cat",
    "multicat",
    "tweezers",
    "synth",
    "revival",
    "sweep-confinement",
    "sweep-transparency",
    "sweep-tweezers",
    "wigner-dump",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub d: usize,
    pub omega: f64,
    pub t_c: f64,
    pub n_th: f64,
    pub dt: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { d: DIM, omega: OMEGA, t_c: T_CAVITY, n_th: N_THERMAL, dt: 10.0 }
    }
}

impl Physics {
    pub fn relax(&self) -> RelaxationConfig {
        RelaxationConfig { t_c: self.t_c, n_th: self.n_th, dt: self.dt }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.d < 2 {
            return Err(CliError::Config(format!("physics.d: must be >= 2, got {}", self.d)));
        }
        for (name, v) in [("omega", self.omega), ("t_c", self.t_c), ("dt", self.dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("physics.{name}: must be positive, got {v}")));
            }
        }
        if !(self.n_th >= 0.0) {
            return Err(CliError::Config(format!("physics.n_th: must be >= 0, got {}", self.n_th)));
        }
        Ok(())
    }
}

/// Inclusive linear grid written `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64).collect()
    }
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("grid `{s}` must be lo:hi:n");
        match parts.as_slice() {
            [lo, hi, n] => {
                let g = Grid {
                    lo: lo.trim().parse().map_err(|_| bad())?,
                    hi: hi.trim().parse().map_err(|_| bad())?,
                    n: n.trim().parse().map_err(|_| bad())?,
                };
                if g.n == 0 {
                    return Err(format!("grid `{s}` has no points"));
                }
                Ok(g)
            }
            [v] => {
                let x: f64 = v.trim().parse().map_err(|_| bad())?;
                Ok(Grid { lo: x, hi: x, n: 1 })
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Grid {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.to_string()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

/// Complex number given as `[re, im]` in files or `re,im` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CplxRepr", into = "[f64; 2]")]
pub struct Cplx(pub C64);

#[derive(Deserialize)]
#[serde(untagged)]
enum CplxRepr {
    Pair([f64; 2]),
    Real(f64),
    Text(String),
}

impl TryFrom<CplxRepr> for Cplx {
    type Error = String;
    fn try_from(r: CplxRepr) -> Result<Self, String> {
        match r {
            CplxRepr::Pair([a, b]) => Ok(Cplx(C64::new(a, b))),
            CplxRepr::Real(a) => Ok(Cplx(C64::new(a, 0.0))),
            CplxRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Cplx> for [f64; 2] {
    fn from(c: Cplx) -> Self {
        [c.0.re, c.0.im]
    }
}

impl FromStr for Cplx {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("complex `{s}` must be re,im");
        let mut it = s.split(',');
        let re = it.next().ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?;
        let im = match it.next() {
            Some(t) => t.trim().parse::<f64>().map_err(|_| bad())?,
            None => 0.0,
        };
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(Cplx(C64::new(re, im)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    Projective,
    #[default]
    #[serde(alias = "ideal-kick")]
    IdealKick,
    #[serde(alias = "joint-kick")]
    JointKick,
    Pulsed,
    Realistic,
}

impl FromStr for EngineMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.replace('-', "_").as_str() {
            "projective" => EngineMode::Projective,
            "ideal_kick" => EngineMode::IdealKick,
            "joint_kick" => EngineMode::JointKick,
            "pulsed" => EngineMode::Pulsed,
            "realistic" => EngineMode::Realistic,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SynthMode {
    #[default]
    Ideal,
    Realistic,
}

impl FromStr for SynthMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ideal" => Ok(SynthMode::Ideal),
            "realistic" => Ok(SynthMode::Realistic),
            _ => Err(format!("unknown synthesis mode `{s}`")),
        }
    }
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfineConfig {
    pub s: usize,
    pub beta: f64,
    pub phi: f64,
    /// Defaults to the return time `floor(2 sqrt(s) / beta)`.
    pub steps: Option<usize>,
    pub mode: EngineMode,
    pub composite_p_p: f64,
    /// Projective mode: draw jumps from the run seed instead of post-selecting.
    pub sample_jumps: bool,
    pub wigner_every: Option<usize>,
    pub wigner_half: f64,
    pub wigner_points: usize,
}

impl Default for ConfineConfig {
    fn default() -> Self {
        Self {
            s: 6,
            beta: 0.4,
            phi: two_pi(),
            steps: None,
            mode: EngineMode::IdealKick,
            composite_p_p: 2.0,
            sample_jumps: false,
            wigner_every: None,
            wigner_half: 5.0,
            wigner_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatConfig {
    pub s: usize,
    pub beta: f64,
    pub phi: f64,
    pub steps: Option<usize>,
    /// Pi composite pulses with relaxation instead of ideal joint kicks.
    pub realistic: bool,
    pub composite_p_p: f64,
    pub wigner: bool,
    pub wigner_half: f64,
    pub wigner_points: usize,
}

impl Default for CatConfig {
    fn default() -> Self {
        Self {
            s: 6,
            beta: 0.345,
            phi: 3.03,
            steps: None,
            realistic: false,
            composite_p_p: 2.0,
            wigner: false,
            wigner_half: 7.0,
            wigner_points: 141,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSpec {
    pub beta: f64,
    pub phi: f64,
    pub steps: usize,
}

impl FromStr for CollisionSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("collision `{s}` must be beta,phi,steps");
        let p: Vec<&str> = s.split(',').map(str::trim).collect();
        match p.as_slice() {
            [b, f, n] => Ok(Self {
                beta: b.parse().map_err(|_| bad())?,
                phi: f.parse().map_err(|_| bad())?,
                steps: n.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MulticatConfig {
    pub s: usize,
    pub realistic: bool,
    /// Ideal mode: explicit collisions.
    pub collisions: Vec<CollisionSpec>,
    pub beta_first: f64,
    pub beta_second: f64,
    pub steps: usize,
    pub switch_threshold: f64,
    pub composite_p_p: f64,
    pub components: Vec<Cplx>,
}

impl Default for MulticatConfig {
    fn default() -> Self {
        Self {
            s: 3,
            realistic: true,
            collisions: Vec::new(),
            beta_first: 0.34,
            beta_second: 0.45,
            steps: 18,
            switch_threshold: 0.3,
            composite_p_p: 2.0,
            components: [-0.3, 3.2, 6.7].iter().map(|&x| Cplx(C64::from(x))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TweezersConfig {
    pub start: Cplx,
    pub end: Cplx,
    pub steps: usize,
    pub phi: f64,
    pub max_step: Option<f64>,
    /// Stretch a two-component cat instead of pulling the vacuum.
    pub stretch: bool,
    pub alpha: Cplx,
    pub alpha_end: Cplx,
}

impl Default for TweezersConfig {
    fn default() -> Self {
        Self {
            start: Cplx(C64::from(0.0)),
            end: Cplx(C64::from(2.0 * 6f64.sqrt())),
            steps: 10,
            phi: two_pi(),
            max_step: None,
            stretch: false,
            alpha: Cplx(C64::from(2.0)),
            alpha_end: Cplx(C64::new(0.0, 5.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub coeffs: Vec<Cplx>,
    pub gammas: Vec<Cplx>,
    pub leg_step: f64,
    pub mode: SynthMode,
    pub phi: f64,
    pub composite_p_p: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let t = qzd::protocols::SynthesisTarget::four_component();
        Self {
            coeffs: t.coeffs.into_iter().map(Cplx).collect(),
            gammas: t.gammas.into_iter().map(Cplx).collect(),
            leg_step: 0.1,
            mode: SynthMode::Ideal,
            phi: two_pi(),
            composite_p_p: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevivalConfig {
    pub s: usize,
    pub beta: f64,
    /// Latest admissible recurrence, in units of omega t.
    pub tmax: f64,
    pub window: f64,
    pub t_min: f64,
}

impl Default for RevivalConfig {
    fn default() -> Self {
        Self { s: 4, beta: 0.05, tmax: 200.0, window: 10.0, t_min: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfinementConfig {
    pub s: usize,
    pub beta: Grid,
    pub phi: Grid,
}

impl Default for SweepConfinementConfig {
    fn default() -> Self {
        Self { s: 6, beta: Grid::new(0.05, 1.0, 20), phi: Grid::new(0.0, two_pi(), 20) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepTransparencyConfig {
    pub s: usize,
    pub beta: Grid,
    pub phi: Grid,
}

impl Default for SweepTransparencyConfig {
    fn default() -> Self {
        Self { s: 6, beta: Grid::new(0.2, 0.6, 9), phi: Grid::new(2.5, 3.5, 9) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepTweezersConfig {
    pub steps: Grid,
    pub phi: Grid,
    pub end: Cplx,
}

impl Default for SweepTweezersConfig {
    fn default() -> Self {
        Self { steps: Grid::new(10.0, 31.0, 22), phi: Grid::new(PI, two_pi(), 11), end: Cplx(C64::from(2.0 * 6f64.sqrt())) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerDumpConfig {
    pub input: Option<PathBuf>,
    pub half: f64,
    pub points: usize,
}

impl Default for WignerDumpConfig {
    fn default() -> Self {
        Self { input: None, half: 5.0, points: 101 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Confine(ConfineConfig),
    Cat(CatConfig),
    Multicat(MulticatConfig),
    Tweezers(TweezersConfig),
    Synth(SynthConfig),
    Revival(RevivalConfig),
    SweepConfinement(SweepConfinementConfig),
    SweepTransparency(SweepTransparencyConfig),
    SweepTweezers(SweepTweezersConfig),
    WignerDump(WignerDumpConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Confine(_) => "confine",
            Experiment::Cat(_) => "cat",
            Experiment::Multicat(_) => "multicat",
            Experiment::Tweezers(_) => "tweezers",
            Experiment::Synth(_) => "synth",
            Experiment::Revival(_) => "revival",
            Experiment::SweepConfinement(_) => "sweep-confinement",
            Experiment::SweepTransparency(_) => "sweep-transparency",
            Experiment::SweepTweezers(_) => "sweep-tweezers",
            Experiment::WignerDump(_) => "wigner-dump",
        }
    }

    /// Builds an experiment from its name and a parameter table; unknown or
    /// mistyped fields are reported by name.
    pub fn from_table(name: &str, params: toml::Table) -> CliResult<Self> {
        let v = toml::Value::Table(params);
        let wrap = |e: toml::de::Error| CliError::Config(format!("[params] for {name}: {}", e.message()));
        Ok(match name {
            "confine" => Experiment::Confine(v.try_into().map_err(wrap)?),
            "cat" => Experiment::Cat(v.try_into().map_err(wrap)?),
            "multicat" => Experiment::Multicat(v.try_into().map_err(wrap)?),
            "tweezers" => Experiment::Tweezers(v.try_into().map_err(wrap)?),
            "synth" => Experiment::Synth(v.try_into().map_err(wrap)?),
            "revival" => Experiment::Revival(v.try_into().map_err(wrap)?),
            "sweep-confinement" => Experiment::SweepConfinement(v.try_into().map_err(wrap)?),
            "sweep-transparency" => Experiment::SweepTransparency(v.try_into().map_err(wrap)?),
            "sweep-tweezers" => Experiment::SweepTweezers(v.try_into().map_err(wrap)?),
            "wigner-dump" => Experiment::WignerDump(v.try_into().map_err(wrap)?),
            other => {
                return Err(CliError::Config(format!(
                    "experiment: unknown `{other}`, expected one of {}",
                    EXPERIMENTS.join(", ")
                )))
            }
        })
    }

    /// Parameters as a table, defaults filled in.
    pub fn to_table(&self) -> toml::Table {
        let v = match self {
            Experiment::Confine(c) => toml::Value::try_from(c),
            Experiment::Cat(c) => toml::Value::try_from(c),
            Experiment::Multicat(c) => toml::Value::try_from(c),
            Experiment::Tweezers(c) => toml::Value::try_from(c),
            Experiment::Synth(c) => toml::Value::try_from(c),
            Experiment::Revival(c) => toml::Value::try_from(c),
            Experiment::SweepConfinement(c) => toml::Value::try_from(c),
            Experiment::SweepTransparency(c) => toml::Value::try_from(c),
            Experiment::SweepTweezers(c) => toml::Value::try_from(c),
            Experiment::WignerDump(c) => toml::Value::try_from(c),
        };
        match v {
            Ok(toml::Value::Table(t)) => t,
            _ => toml::Table::new(),
        }
    }
}

/// Everything needed for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub physics: Physics,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads for sweeps and Wigner grids; `None` uses all cores.
    pub threads: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: String,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    physics: Physics,
    #[serde(default)]
    params: toml::Table,
}

/// Raw pieces gathered from a file before flag overrides.
#[derive(Debug, Clone, Default)]
pub struct Layers {
    pub experiment: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub physics: Physics,
    pub params: toml::Table,
}

pub fn parse_layers(text: &str) -> CliResult<Layers> {
    let f: FileConfig = toml::from_str(text)?;
    Ok(Layers {
        experiment: Some(f.experiment),
        out_dir: f.out_dir,
        seed: f.seed,
        threads: f.threads,
        physics: f.physics,
        params: f.params,
    })
}

pub fn load_layers(path: &Path) -> CliResult<Layers> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_layers(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Layers {
    /// Applies flag overrides and resolves the experiment.
    pub fn resolve(mut self, experiment: Option<&str>, overrides: toml::Table) -> CliResult<RunConfig> {
        let name = match (experiment, self.experiment.as_deref()) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!("experiment: config file is for `{b}`, not `{a}`")))
            }
            (Some(a), _) => a.to_string(),
            (None, Some(b)) => b.to_string(),
            (None, None) => return Err(CliError::Config("experiment: not given".into())),
        };
        for (k, v) in overrides {
            self.params.insert(k, v);
        }
        self.physics.validate()?;
        if self.threads == Some(0) {
            return Err(CliError::Config("threads: must be >= 1".into()));
        }
        Ok(RunConfig {
            experiment: Experiment::from_table(&name, self.params)?,
            physics: self.physics,
            out_dir: self.out_dir,
            seed: self.seed.unwrap_or(0),
            threads: self.threads,
        })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        parse_layers(text)?.resolve(None, toml::Table::new())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        load_layers(path)?.resolve(None, toml::Table::new())
    }

    pub fn new(experiment: Experiment) -> Self {
        Self { experiment, physics: Physics::default(), out_dir: None, seed: 0, threads: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.05:1.0:40".parse().unwrap();
        assert_eq!(g.values().len(), 40);
        assert_eq!(g.values()[39], 1.0);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert_eq!("2.5".parse::<Grid>().unwrap().values(), vec![2.5]);
    }

    #[test]
    fn complex_forms() {
        assert_eq!("1.5,-2".parse::<Cplx>().unwrap().0, C64::new(1.5, -2.0));
        let t: SynthConfig = toml::from_str("coeffs = [[0.5, 0.0], 0.5, \"0.5,0\"]").unwrap();
        assert_eq!(t.coeffs.len(), 3);
    }

    #[test]
    fn mode_spellings_agree() {
        for m in ["ideal-kick", "ideal_kick"] {
            let rc = RunConfig::from_toml(&format!("experiment = \"confine\"\n[params]\nmode = \"{m}\"\n")).unwrap();
            let Experiment::Confine(c) = rc.experiment else { panic!() };
            assert_eq!(c.mode, m.parse().unwrap());
        }
    }

    #[test]
    fn field_level_errors() {
        let e = RunConfig::from_toml("experiment = \"confine\"\n[params]\nbta = 0.3\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("bta"), "{msg}");
        assert_eq!(e.exit_code(), 2);
        let e = RunConfig::from_toml("experiment = \"confine\"\n[physics]\nd = 1\n").unwrap_err();
        assert!(e.to_string().contains("physics.d"));
        let e = RunConfig::from_toml("experiment = \"nope\"\n").unwrap_err();
        assert!(e.to_string().contains("unknown"));
    }

    #[test]
    fn overrides_win() {
        let l = parse_layers("experiment = \"confine\"\n[params]\nbeta = 0.3\ns = 4\n").unwrap();
        let mut o = toml::Table::new();
        o.insert("beta".into(), toml::Value::Float(0.1));
        let rc = l.resolve(Some("confine"), o).unwrap();
        let Experiment::Confine(c) = rc.experiment else { panic!() };
        assert_eq!((c.s, c.beta), (4, 0.1));
        assert!(parse_layers("experiment = \"cat\"\n").unwrap().resolve(Some("confine"), toml::Table::new()).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        for name in EXPERIMENTS {
            let e = Experiment::from_table(name, toml::Table::new()).unwrap();
            let back = Experiment::from_table(name, e.to_table()).unwrap();
            assert_eq!(e, back, "{name}");
        }
    }
}
