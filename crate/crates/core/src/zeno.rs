//! Ideal quantum Zeno dynamics: projective steps, selective kicks, generic
//! joint kicks, composite-pulse kicks and translated exclusion circles.

use crate::atomfield::{selective_rotation, AtomLevel, BlockOp, CompositePulse, CompositePulseSpec, JointState};
use crate::fock::{displacement, drive_hamiltonian, unitary_evolution, CMat, CVec, DensityOp, FockVector};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Rounding allowance above 2 pi, so `6.2832` is accepted.
pub const PHI_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Field projector `1 - |s><s|` after each step, conditional no-jump record.
    Projective,
    /// Field kick `1 - 2|s><s|`.
    #[default]
    IdealKick,
    /// Generic-angle selective rotation on the joint space, atom reused.
    JointKick,
    /// Finite composite pulses (unitary, no relaxation).
    Pulsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoConfig {
    pub s: usize,
    pub beta: C64,
    pub phi: f64,
    pub n_steps: usize,
    pub mode: Mode,
    /// Exclusion-circle centre for each step.
    #[serde(default)]
    pub gamma_trajectory: Option<Vec<C64>>,
    /// Composite pulse for `Mode::Pulsed`.
    #[serde(default)]
    pub composite: Option<CompositePulseSpec>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    /// Draw jumps stochastically in projective mode.
    #[serde(default)]
    pub sample_seed: Option<u64>,
}

fn default_omega() -> f64 {
    crate::units::OMEGA
}

impl ZenoConfig {
    pub fn new(s: usize, beta: C64, n_steps: usize, mode: Mode) -> Self {
        Self {
            s,
            beta,
            phi: 2.0 * PI,
            n_steps,
            mode,
            gamma_trajectory: None,
            composite: None,
            omega: default_omega(),
            sample_seed: None,
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_gammas(mut self, g: Vec<C64>) -> Self {
        self.gamma_trajectory = Some(g);
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        if self.s >= d {
            return Err(Error::InvalidParameter(format!("s={} must be below d={d}", self.s)));
        }
        if let Some(g) = &self.gamma_trajectory {
            if g.len() != self.n_steps {
                return Err(Error::InvalidParameter(format!(
                    "gamma trajectory has {} points for {} steps",
                    g.len(),
                    self.n_steps
                )));
            }
        }
        if matches!(self.mode, Mode::JointKick | Mode::Pulsed) && self.s == 0 {
            return Err(Error::InvalidParameter("joint kicks need s >= 1".into()));
        }
        if !(self.phi.is_finite() && self.phi >= 0.0 && self.phi <= 2.0 * PI + PHI_SLACK) && self.mode == Mode::JointKick {
            return Err(Error::InvalidParameter(format!("phi={} outside [0, 2pi]", self.phi)));
        }
        Ok(())
    }
}

/// Field or joint state carried by an engine.
#[derive(Debug, Clone, PartialEq)]
pub enum ZenoState {
    Field(FockVector),
    Joint(JointState),
}

impl ZenoState {
    pub fn dim(&self) -> usize {
        match self {
            ZenoState::Field(f) => f.dim(),
            ZenoState::Joint(j) => j.dim,
        }
    }

    /// Reduced field density matrix.
    pub fn field_density(&self) -> DensityOp {
        match self {
            ZenoState::Field(f) => f.to_density(),
            ZenoState::Joint(j) => j.field_density(),
        }
    }

    fn to_joint(&self) -> JointState {
        match self {
            ZenoState::Field(f) => JointState::product(AtomLevel::H, f),
            ZenoState::Joint(j) => j.clone(),
        }
    }

    fn to_field(&self) -> Result<FockVector> {
        match self {
            ZenoState::Field(f) => Ok(f.clone()),
            ZenoState::Joint(_) => Err(Error::InvalidParameter("field-space mode given a joint state".into())),
        }
    }

    fn apply_field(&self, f: &CMat) -> Self {
        match self {
            ZenoState::Field(v) => ZenoState::Field(FockVector { amps: f * &v.amps }),
            ZenoState::Joint(j) => ZenoState::Joint(j.apply_field(f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoTrace {
    /// Initial state followed by the state after each step.
    pub states: Vec<ZenoState>,
    /// No-jump probability of each step (1 outside projective mode).
    pub no_jump: Vec<f64>,
    pub topological_phase: f64,
    /// Step at which a sampled jump ended the run.
    pub interrupted: Option<usize>,
}

impl ZenoTrace {
    pub fn final_state(&self) -> &ZenoState {
        self.states.last().expect("trace holds the initial state")
    }

    pub fn final_field(&self) -> DensityOp {
        self.final_state().field_density()
    }

    /// Product of the per-step no-jump probabilities.
    pub fn survival(&self) -> f64 {
        self.no_jump.iter().product()
    }
}

/// `(P_<s, P_>s, P = 1 - |s><s|)`.
pub fn projectors(s: usize, d: usize) -> Result<(CMat, CMat, CMat)> {
    if s >= d {
        return Err(Error::InvalidParameter(format!("s={s} must be below d={d}")));
    }
    let diag = |f: &dyn Fn(usize) -> bool| {
        CMat::from_diagonal(&CVec::from_iterator(d, (0..d).map(|n| C64::from(if f(n) { 1.0 } else { 0.0 }))))
    };
    Ok((diag(&|n| n < s), diag(&|n| n > s), diag(&|n| n != s)))
}

/// `H_Z = P_<s H P_<s + P_>s H P_>s`.
pub fn zeno_hamiltonian(h: &CMat, s: usize) -> Result<CMat> {
    let (pb, pa, _) = projectors(s, h.nrows())?;
    Ok(&pb * h * &pb + &pa * h * &pa)
}

/// `U_s = 1 - 2|s><s|`.
pub fn ideal_kick(s: usize, d: usize) -> Result<CMat> {
    if s >= d {
        return Err(Error::InvalidParameter(format!("s={s} must be below d={d}")));
    }
    let mut u = CMat::identity(d, d);
    u[(s, s)] = C64::from(-1.0);
    Ok(u)
}

/// Steps needed to cross the exclusion circle and come back: `floor(2 sqrt(s)/|beta|)`.
pub fn return_steps(s: usize, beta: f64) -> usize {
    (2.0 * (s as f64).sqrt() / beta.abs() + 1e-9).floor() as usize
}

enum Kick {
    Project(usize),
    Field(CMat),
    Joint(BlockOp),
}

impl Kick {
    fn build(cfg: &ZenoConfig, d: usize) -> Result<Self> {
        Ok(match cfg.mode {
            Mode::Projective => Kick::Project(cfg.s),
            Mode::IdealKick => Kick::Field(ideal_kick(cfg.s, d)?),
            Mode::JointKick => Kick::Joint(selective_rotation(cfg.s, cfg.phi, d)?),
            Mode::Pulsed => {
                let spec = cfg.composite.clone().unwrap_or_else(|| CompositePulseSpec::two_pi(cfg.s, 2.0));
                Kick::Joint(CompositePulse::new(&spec, cfg.omega)?.propagator(d))
            }
        })
    }

    /// Returns the new state and the no-jump probability.
    fn apply(&self, st: ZenoState) -> Result<(ZenoState, f64)> {
        Ok(match (self, st) {
            (Kick::Project(s), ZenoState::Field(mut f)) => {
                f.amps[*s] = C64::from(0.0);
                let p = f.amps.norm_squared();
                (ZenoState::Field(f), p)
            }
            (Kick::Field(u), ZenoState::Field(f)) => (ZenoState::Field(FockVector { amps: u * f.amps }), 1.0),
            (Kick::Joint(op), ZenoState::Joint(j)) => (ZenoState::Joint(j.apply(op)), 1.0),
            _ => return Err(Error::InvalidParameter("state kind does not match mode".into())),
        })
    }
}

/// Runs `[U_s(gamma_k) D(beta)]^N` (or its projective counterpart).
pub fn run_qzd(initial: &ZenoState, cfg: &ZenoConfig) -> Result<ZenoTrace> {
    let d = initial.dim();
    cfg.validate(d)?;
    let state = match cfg.mode {
        Mode::Projective | Mode::IdealKick => ZenoState::Field(initial.to_field()?),
        Mode::JointKick | Mode::Pulsed => ZenoState::Joint(initial.to_joint()),
    };
    let kick = Kick::build(cfg, d)?;
    let free = displacement(cfg.beta, d)?;
    let mut rng = cfg.sample_seed.map(ChaCha8Rng::seed_from_u64);
    let mut trace = ZenoTrace {
        states: vec![state.clone()],
        no_jump: Vec::with_capacity(cfg.n_steps),
        topological_phase: 0.0,
        interrupted: None,
    };
    let mut st = state;
    let mut shift: Option<(C64, CMat, CMat)> = None;
    let mut prev_gamma: Option<C64> = None;
    for k in 0..cfg.n_steps {
        st = st.apply_field(&free);
        let gamma = cfg.gamma_trajectory.as_ref().map(|g| g[k]);
        let (next, p) = match gamma {
            Some(g) if g != C64::from(0.0) => {
                if shift.as_ref().map(|(c, _, _)| *c != g).unwrap_or(true) {
                    shift = Some((g, displacement(g, d)?, displacement(-g, d)?));
                }
                let (_, dp, dm) = shift.as_ref().expect("set above");
                let (s2, p) = kick.apply(st.apply_field(dm))?;
                (s2.apply_field(dp), p)
            }
            _ => kick.apply(st)?,
        };
        if let Some(g) = gamma {
            trace.topological_phase += 2.0 * (cfg.beta * g.conj()).im;
            if let Some(gp) = prev_gamma {
                trace.topological_phase += (g.conj() * gp).im;
            }
            prev_gamma = Some(g);
        }
        st = next;
        if cfg.mode == Mode::Projective {
            if let Some(r) = rng.as_mut() {
                if r.random::<f64>() >= p {
                    trace.no_jump.push(p);
                    trace.interrupted = Some(k + 1);
                    return Ok(trace);
                }
            } else if p <= f64::MIN_POSITIVE {
                return Err(Error::Interrupted { step: k + 1, prob: p });
            }
            if let ZenoState::Field(f) = &mut st {
                f.amps /= C64::from(p.sqrt());
            }
        }
        trace.no_jump.push(p);
        trace.states.push(st.clone());
    }
    Ok(trace)
}

/// `run_qzd` with a mandatory exclusion-circle trajectory.
pub fn run_translated(initial: &ZenoState, cfg: &ZenoConfig) -> Result<ZenoTrace> {
    if cfg.gamma_trajectory.is_none() {
        return Err(Error::InvalidParameter("translated run needs a gamma trajectory".into()));
    }
    run_qzd(initial, cfg)
}

/// Exact evolution confined to the first `s` Fock states:
/// `exp(N P_<s (beta a_dag - conj(beta) a) P_<s) |psi>`.
pub fn strict_subspace_reference(initial: &FockVector, beta: C64, n_steps: usize, s: usize) -> Result<FockVector> {
    let d = initial.dim();
    if s == 0 || s > d {
        return Err(Error::InvalidParameter(format!("strict subspace size s={s} for d={d}")));
    }
    let outside: f64 = (s..d).map(|n| initial.amps[n].norm_sqr()).sum();
    if outside > 1e-12 {
        return Err(Error::InvalidParameter(format!("initial state has weight {outside:.2e} at n >= s")));
    }
    let mut out = CVec::zeros(d);
    if s == 1 {
        out[0] = initial.amps[0];
        return Ok(FockVector { amps: out });
    }
    // exp(G) with G = beta a_dag - conj(beta) a = -i H, H = drive_hamiltonian(i beta)
    let h = drive_hamiltonian(C64::i() * beta * n_steps as f64, s)?;
    let u = unitary_evolution(&h, 1.0)?;
    let v = u * initial.amps.rows(0, s);
    out.rows_mut(0, s).copy_from(&v);
    Ok(FockVector { amps: out })
}
