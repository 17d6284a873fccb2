//! Cavity relaxation: Lindblad evolution of field or atom-field density
//! matrices, and a segment runner interleaving finite pulses with photon
//! loss and thermal excitation.

use crate::atomfield::{field_conjugate, partial_trace_atom, BlockOp, CompositePulse, JointState, SquarePulse, LEVELS};
use crate::fock::{CMat, DensityOp};
use crate::units::{N_THERMAL, T_CAVITY};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    /// Energy damping time, us. `f64::INFINITY` disables relaxation.
    pub t_c: f64,
    pub n_th: f64,
    /// Largest integrator step, us.
    pub dt: f64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self { t_c: T_CAVITY, n_th: N_THERMAL, dt: 10.0 }
    }
}

impl RelaxationConfig {
    pub fn lossless() -> Self {
        Self { t_c: f64::INFINITY, n_th: 0.0, dt: 10.0 }
    }

    pub fn kappa(&self) -> f64 {
        if self.t_c.is_infinite() {
            0.0
        } else {
            1.0 / self.t_c
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_c > 0.0) {
            return Err(Error::InvalidParameter(format!("T_c={} must be positive", self.t_c)));
        }
        if !(self.n_th >= 0.0) || !self.n_th.is_finite() {
            return Err(Error::InvalidParameter(format!("n_th={} must be >= 0", self.n_th)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt={} must be positive", self.dt)));
        }
        Ok(())
    }
}

/// `kappa (1+n_th) D[a] rho + kappa n_th D[a_dag] rho` with `a` acting on the
/// field factor of an `L*d` space (field index = row index mod `d`).
pub fn dissipator(rho: &CMat, d: usize, kappa: f64, n_th: f64) -> CMat {
    let n = rho.nrows();
    let mut out = CMat::zeros(n, n);
    if kappa == 0.0 {
        return out;
    }
    let down = kappa * (1.0 + n_th);
    let up = kappa * n_th;
    let sq: Vec<f64> = (0..=d).map(|k| (k as f64).sqrt()).collect();
    // truncated a a_dag has (d-1, d-1) element 0
    let aad = |k: usize| if k + 1 < d { (k + 1) as f64 } else { 0.0 };
    for j in 0..n {
        let nj = j % d;
        for i in 0..n {
            let ni = i % d;
            let mut v = C64::from(0.0);
            if ni + 1 < d && nj + 1 < d {
                v += rho[(i + 1, j + 1)] * (down * sq[ni + 1] * sq[nj + 1]);
            }
            if ni >= 1 && nj >= 1 {
                v += rho[(i - 1, j - 1)] * (up * sq[ni] * sq[nj]);
            }
            let anti = down * 0.5 * (ni + nj) as f64 + up * 0.5 * (aad(ni) + aad(nj));
            v -= rho[(i, j)] * anti;
            out[(i, j)] = v;
        }
    }
    out
}

fn lindblad_rhs(rho: &CMat, h: Option<&CMat>, d: usize, kappa: f64, n_th: f64) -> CMat {
    let mut r = dissipator(rho, d, kappa, n_th);
    if let Some(h) = h {
        let c = h * rho - rho * h;
        r += c * C64::new(0.0, -1.0);
    }
    r
}

fn rk4(rho: &CMat, h: Option<&CMat>, d: usize, kappa: f64, n_th: f64, dt: f64) -> CMat {
    let f = |r: &CMat| lindblad_rhs(r, h, d, kappa, n_th);
    let k1 = f(rho);
    let k2 = f(&(rho + &k1 * C64::from(0.5 * dt)));
    let k3 = f(&(rho + &k2 * C64::from(0.5 * dt)));
    let k4 = f(&(rho + &k3 * C64::from(dt)));
    rho + (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(dt / 6.0)
}

fn op_norm_bound(h: &CMat) -> f64 {
    h.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Integrates `d rho/dt = -i[H, rho] + dissipator` over `duration` with
/// fixed-step RK4, step chosen so that `dt * |generator| < 0.05`.
/// `field_dim` is the Fock truncation (`rho` may be a joint matrix).
pub fn lindblad_step(rho: &CMat, h: &CMat, field_dim: usize, cfg: &RelaxationConfig, duration: f64) -> Result<CMat> {
    cfg.validate()?;
    if rho.nrows() != h.nrows() || rho.nrows() % field_dim != 0 {
        return Err(Error::DimensionMismatch(rho.nrows(), h.nrows()));
    }
    if duration <= 0.0 {
        return Ok(rho.clone());
    }
    let kappa = cfg.kappa();
    let gen = 2.0 * op_norm_bound(h) + kappa * (1.0 + 2.0 * cfg.n_th) * 2.0 * field_dim as f64;
    let mut steps = (duration / cfg.dt).ceil().max(1.0) as usize;
    if gen > 0.0 {
        steps = steps.max((duration * gen / 0.05).ceil() as usize);
    }
    let dt = duration / steps as f64;
    let t0 = rho.trace().re;
    let mut r = rho.clone();
    for _ in 0..steps {
        r = rk4(&r, Some(h), field_dim, kappa, cfg.n_th, dt);
    }
    let drift = (r.trace().re - t0).abs();
    if drift > 1e-7 * (duration / 1000.0).max(1.0) {
        return Err(Error::StepTooLarge(format!("trace drift {drift:.2e} over {duration} us")));
    }
    Ok(r)
}

/// Field-only convenience wrapper of [`lindblad_step`].
pub fn lindblad_step_field(rho: &DensityOp, h: &CMat, cfg: &RelaxationConfig, duration: f64) -> Result<DensityOp> {
    Ok(DensityOp { mat: lindblad_step(&rho.mat, h, rho.dim(), cfg, duration)? })
}

/// Square pulse split into rotating-frame substeps.
#[derive(Debug, Clone)]
pub struct PreparedPulse {
    pub pulse: SquarePulse,
    step: BlockOp,
    frame: BlockOp,
    substeps: usize,
}

impl PreparedPulse {
    pub fn new(pulse: SquarePulse, d: usize, dt: f64) -> Self {
        let substeps = (pulse.duration / dt).ceil().max(1.0) as usize;
        let h = pulse.duration / substeps as f64;
        Self { pulse, step: pulse.step_op(d, h), frame: pulse.frame_op(d, pulse.duration), substeps }
    }
}

#[derive(Debug, Clone)]
pub enum Segment {
    /// Instantaneous field operator applied on every atomic level.
    Field(CMat),
    /// Instantaneous joint unitary.
    Unitary(BlockOp),
    /// Finite pulse with relaxation.
    Pulse(Box<PreparedPulse>),
    /// Free relaxation.
    Idle(f64),
}

impl Segment {
    pub fn pulse(p: SquarePulse, d: usize, dt: f64) -> Self {
        Segment::Pulse(Box::new(PreparedPulse::new(p, d, dt)))
    }

    pub fn duration(&self) -> f64 {
        match self {
            Segment::Pulse(p) => p.pulse.duration,
            Segment::Idle(t) => *t,
            _ => 0.0,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Segment::Field(_) => "field",
            Segment::Unitary(_) => "unitary",
            Segment::Pulse(_) => "pulse",
            Segment::Idle(_) => "idle",
        }
    }
}

/// First pulse, Stark kick, second pulse.
pub fn composite_segments(cp: &CompositePulse, d: usize, dt: f64) -> Vec<Segment> {
    vec![
        Segment::pulse(cp.first, d, dt),
        Segment::Unitary(cp.spec.kick.op(d)),
        Segment::pulse(cp.second, d, dt),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub kind: &'static str,
    pub start: f64,
    pub duration: f64,
    pub trace: f64,
}

/// Joint density-matrix evolution driven segment by segment.
#[derive(Debug, Clone)]
pub struct RealisticRunner {
    pub d: usize,
    pub cfg: RelaxationConfig,
    pub rho: CMat,
    pub time: f64,
    pub reports: Vec<SegmentReport>,
    pub keep_reports: bool,
}

impl RealisticRunner {
    pub fn from_joint(state: &JointState, cfg: RelaxationConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { d: state.dim, cfg, rho: state.to_density(), time: 0.0, reports: Vec::new(), keep_reports: true })
    }

    /// Atom in h, field in `rho`.
    pub fn from_field(rho: &DensityOp, cfg: RelaxationConfig) -> Result<Self> {
        cfg.validate()?;
        let d = rho.dim();
        let mut m = CMat::zeros(LEVELS * d, LEVELS * d);
        m.view_mut((0, 0), (d, d)).copy_from(&rho.mat);
        Ok(Self { d, cfg, rho: m, time: 0.0, reports: Vec::new(), keep_reports: true })
    }

    fn relax(&mut self, t: f64) {
        let kappa = self.cfg.kappa();
        if kappa == 0.0 || t <= 0.0 {
            return;
        }
        let m = (t / self.cfg.dt).ceil().max(1.0) as usize;
        let h = t / m as f64;
        for _ in 0..m {
            self.rho = rk4(&self.rho, None, self.d, kappa, self.cfg.n_th, h);
        }
    }

    pub fn apply(&mut self, seg: &Segment) {
        let start = self.time;
        match seg {
            Segment::Field(f) => self.rho = field_conjugate(&self.rho, f),
            Segment::Unitary(u) => self.rho = u.conjugate(&self.rho),
            Segment::Pulse(p) => {
                let h = p.pulse.duration / p.substeps as f64;
                for _ in 0..p.substeps {
                    self.relax(0.5 * h);
                    self.rho = p.step.conjugate(&self.rho);
                    self.relax(0.5 * h);
                }
                // frame factor commutes with field relaxation
                self.rho = p.frame.conjugate(&self.rho);
            }
            Segment::Idle(t) => self.relax(*t),
        }
        self.time += seg.duration();
        if self.keep_reports {
            self.reports.push(SegmentReport {
                kind: seg.label(),
                start,
                duration: seg.duration(),
                trace: self.rho.trace().re,
            });
        }
    }

    pub fn apply_all(&mut self, segs: &[Segment]) {
        for s in segs {
            self.apply(s);
        }
    }

    pub fn field(&self) -> DensityOp {
        partial_trace_atom(&self.rho, self.d).expect("runner keeps joint dimensions")
    }

    /// Population of one atomic level.
    pub fn level_population(&self, level: crate::atomfield::AtomLevel) -> f64 {
        let o = level.index() * self.d;
        (0..self.d).map(|n| self.rho[(o + n, o + n)].re).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RealisticResult {
    pub joint: CMat,
    pub field: DensityOp,
    pub duration: f64,
    pub segments: Vec<SegmentReport>,
}

pub enum Initial<'a> {
    Joint(&'a JointState),
    Field(&'a DensityOp),
}

/// Runs a full segment list from `initial`.
pub fn run_realistic(initial: Initial<'_>, segments: &[Segment], cfg: &RelaxationConfig) -> Result<RealisticResult> {
    let mut r = match initial {
        Initial::Joint(j) => RealisticRunner::from_joint(j, *cfg)?,
        Initial::Field(f) => RealisticRunner::from_field(f, *cfg)?,
    };
    r.apply_all(segments);
    Ok(RealisticResult { field: r.field(), joint: r.rho, duration: r.time, segments: r.reports })
}
