//! Atom-field model: four atomic levels tensored with the truncated Fock
//! space, finite square pulses in the dressed-state picture, Stark kicks,
//! shelving and the soft vacuum pulse.
//!
//! Joint index is `level * d + n` with levels ordered `h, g, e, i`.
//! Pulse propagators are in the interaction picture with respect to the
//! carrier on level h, each pulse phase-referenced to its own start.

use crate::fock::{expm, CMat, CVec, DensityOp, FockVector};
use crate::optim::brent_min;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub const LEVELS: usize = 4;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const MI: C64 = C64::new(0.0, -1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomLevel {
    H,
    G,
    E,
    I,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 4] = [AtomLevel::H, AtomLevel::G, AtomLevel::E, AtomLevel::I];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[inline]
pub fn joint_index(level: AtomLevel, n: usize, d: usize) -> usize {
    level.index() * d + n
}

/// Pure atom-field state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub amps: CVec,
    pub dim: usize,
}

impl JointState {
    pub fn new(amps: CVec, d: usize) -> Result<Self> {
        if d == 0 || amps.len() != LEVELS * d {
            return Err(Error::InvalidDimension(format!("joint vector of length {} for d={d}", amps.len())));
        }
        let n = amps.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::NonFinite("JointState::new"));
        }
        Ok(Self { amps: amps / C64::from(n), dim: d })
    }

    pub fn product(level: AtomLevel, field: &FockVector) -> Self {
        let d = field.dim();
        let mut amps = CVec::zeros(LEVELS * d);
        amps.rows_mut(level.index() * d, d).copy_from(&field.amps);
        Self { amps, dim: d }
    }

    pub fn basis(level: AtomLevel, n: usize, d: usize) -> Result<Self> {
        Ok(Self::product(level, &FockVector::number(n, d)?))
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn amp(&self, level: AtomLevel, n: usize) -> C64 {
        self.amps[joint_index(level, n, self.dim)]
    }

    pub fn level_population(&self, level: AtomLevel) -> f64 {
        self.amps.rows(level.index() * self.dim, self.dim).norm_squared()
    }

    /// Field component attached to one atomic level (unnormalized).
    pub fn branch(&self, level: AtomLevel) -> CVec {
        self.amps.rows(level.index() * self.dim, self.dim).into_owned()
    }

    pub fn to_density(&self) -> CMat {
        &self.amps * self.amps.adjoint()
    }

    /// Reduced field state, atom traced out.
    pub fn field_density(&self) -> DensityOp {
        let d = self.dim;
        let mut m = CMat::zeros(d, d);
        for l in 0..LEVELS {
            let b = self.amps.rows(l * d, d);
            m += &b * b.adjoint();
        }
        DensityOp { mat: m }
    }

    pub fn apply(&self, op: &BlockOp) -> Self {
        Self { amps: op.apply(&self.amps), dim: self.dim }
    }

    /// `(1 (x) F) psi` for a field operator `F`.
    pub fn apply_field(&self, f: &CMat) -> Self {
        let d = self.dim;
        let mut amps = CVec::zeros(LEVELS * d);
        for l in 0..LEVELS {
            let v = f * self.amps.rows(l * d, d);
            amps.rows_mut(l * d, d).copy_from(&v);
        }
        Self { amps, dim: d }
    }
}

/// Reduced field density matrix of a joint density matrix.
pub fn partial_trace_atom(rho: &CMat, d: usize) -> Result<DensityOp> {
    if rho.nrows() != LEVELS * d || rho.ncols() != LEVELS * d {
        return Err(Error::DimensionMismatch(rho.nrows(), LEVELS * d));
    }
    let mut m = CMat::zeros(d, d);
    for l in 0..LEVELS {
        m += rho.view((l * d, l * d), (d, d));
    }
    Ok(DensityOp { mat: m })
}

/// `(1 (x) F) rho (1 (x) F)^dag` on a joint density matrix.
pub fn field_conjugate(rho: &CMat, f: &CMat) -> CMat {
    let d = f.nrows();
    let fd = f.adjoint();
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for k in 0..LEVELS {
        for l in 0..LEVELS {
            let b = f * rho.view((k * d, l * d), (d, d)) * &fd;
            out.view_mut((k * d, l * d), (d, d)).copy_from(&b);
        }
    }
    out
}

/// Sparse joint operator: a set of dense blocks on disjoint index sets,
/// identity elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOp {
    total: usize,
    blocks: Vec<(Vec<usize>, CMat)>,
}

impl BlockOp {
    pub fn identity(total: usize) -> Self {
        Self { total, blocks: Vec::new() }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn blocks(&self) -> &[(Vec<usize>, CMat)] {
        &self.blocks
    }

    pub fn push(&mut self, idx: Vec<usize>, m: CMat) {
        debug_assert_eq!(idx.len(), m.nrows());
        self.blocks.push((idx, m));
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        let mut out = v.clone();
        for (idx, m) in &self.blocks {
            let sub = CVec::from_iterator(idx.len(), idx.iter().map(|&i| v[i]));
            let r = m * sub;
            for (k, &i) in idx.iter().enumerate() {
                out[i] = r[k];
            }
        }
        out
    }

    /// `U M`.
    pub fn left_mul(&self, m: &CMat) -> CMat {
        let mut out = m.clone();
        let nc = m.ncols();
        for (idx, b) in &self.blocks {
            let k = idx.len();
            let mut rows = CMat::zeros(k, nc);
            for (r, &i) in idx.iter().enumerate() {
                rows.row_mut(r).copy_from(&m.row(i));
            }
            let res = b * rows;
            for (r, &i) in idx.iter().enumerate() {
                out.row_mut(i).copy_from(&res.row(r));
            }
        }
        out
    }

    /// `M U^dag`.
    pub fn right_mul_adjoint(&self, m: &CMat) -> CMat {
        let mut out = m.clone();
        let nr = m.nrows();
        for (idx, b) in &self.blocks {
            let k = idx.len();
            let mut cols = CMat::zeros(nr, k);
            for (c, &i) in idx.iter().enumerate() {
                cols.column_mut(c).copy_from(&m.column(i));
            }
            let res = cols * b.adjoint();
            for (c, &i) in idx.iter().enumerate() {
                out.column_mut(i).copy_from(&res.column(c));
            }
        }
        out
    }

    /// `U rho U^dag`.
    pub fn conjugate(&self, rho: &CMat) -> CMat {
        self.right_mul_adjoint(&self.left_mul(rho))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            total: self.total,
            blocks: self.blocks.iter().map(|(i, m)| (i.clone(), m.adjoint())).collect(),
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut u = CMat::identity(self.total, self.total);
        for (idx, m) in &self.blocks {
            for (r, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    u[(i, j)] = m[(r, c)];
                }
            }
        }
        u
    }

    /// Matrix element `<i|U|j>`.
    pub fn element(&self, i: usize, j: usize) -> C64 {
        for (idx, m) in &self.blocks {
            if let Some(r) = idx.iter().position(|&x| x == i) {
                return match idx.iter().position(|&x| x == j) {
                    Some(c) => m[(r, c)],
                    None => ZERO,
                };
            }
        }
        if i == j {
            ONE
        } else {
            ZERO
        }
    }
}

/// Indices of the pulse block for photon number `n`: `(h,n), (g,n), (e,n-1)`,
/// or `(h,0), (g,0)` for the vacuum.
pub fn pulse_block_indices(n: usize, d: usize) -> Vec<usize> {
    let h = joint_index(AtomLevel::H, n, d);
    let g = joint_index(AtomLevel::G, n, d);
    if n == 0 {
        vec![h, g]
    } else {
        vec![h, g, joint_index(AtomLevel::E, n - 1, d)]
    }
}

/// Resonant coupling `V = (Omega/2)(|e><g| a + |g><e| a_dag)` on the joint space.
pub fn jc_hamiltonian(omega: f64, d: usize) -> Result<CMat> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("d={d}, need d>=2")));
    }
    let mut v = CMat::zeros(LEVELS * d, LEVELS * d);
    for n in 1..d {
        let g = joint_index(AtomLevel::G, n, d);
        let e = joint_index(AtomLevel::E, n - 1, d);
        let c = C64::from(0.5 * omega * (n as f64).sqrt());
        v[(e, g)] = c;
        v[(g, e)] = c;
    }
    Ok(v)
}

/// `|+-,n> = (|e,n-1> +- |g,n>)/sqrt(2)` for `n >= 1`.
pub fn dressed_state(plus: bool, n: usize, d: usize) -> Result<JointState> {
    if n == 0 || n >= d {
        return Err(Error::InvalidParameter(format!("dressed state n={n} needs 1<=n<d")));
    }
    let mut amps = CVec::zeros(LEVELS * d);
    amps[joint_index(AtomLevel::E, n - 1, d)] = C64::from(FRAC_1_SQRT_2);
    amps[joint_index(AtomLevel::G, n, d)] = C64::from(if plus { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 });
    Ok(JointState { amps, dim: d })
}

/// `|g,0>`, every `|h,n>` and every `|+-,n>`.
pub fn dressed_basis(d: usize) -> Result<Vec<JointState>> {
    let mut out = vec![JointState::basis(AtomLevel::G, 0, d)?];
    for n in 0..d {
        out.push(JointState::basis(AtomLevel::H, n, d)?);
    }
    for n in 1..d {
        out.push(dressed_state(true, n, d)?);
        out.push(dressed_state(false, n, d)?);
    }
    Ok(out)
}

/// `delta_n = (Omega/2)|sqrt(s) - sqrt(n)|`.
pub fn dressed_transition_gap(s: usize, n: usize, omega: f64) -> f64 {
    0.5 * omega * ((s as f64).sqrt() - (n as f64).sqrt()).abs()
}

/// Carrier of a pulse driving level h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    /// Resonant with `|h,s> -> |+,s>`.
    Plus,
    /// Resonant with `|-,s> -> |h,s>`.
    Minus,
    /// Resonant with the bare `|h,0> -> |g,0>` line.
    Bare,
    /// Explicit detuning from the bare h-g line, rad/us.
    Detuning(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub s: usize,
    /// Rotation angle on the addressed transition in units of pi.
    pub n_p: f64,
    /// Even integer placing the spectral zeros.
    pub p_p: f64,
    pub carrier: Carrier,
    pub phase: f64,
    /// Overrides the zero-placement duration when set, us.
    #[serde(default)]
    pub duration: Option<f64>,
}

impl PulseSpec {
    pub fn selective(s: usize, n_p: f64, p_p: f64, carrier: Carrier, phase: f64) -> Self {
        Self { s, n_p, p_p, carrier, phase, duration: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::InvalidParameter("pulse target s must be >= 1".into()));
        }
        if !(self.n_p > 0.0) || !self.n_p.is_finite() {
            return Err(Error::InvalidParameter(format!("n_p={} must be positive", self.n_p)));
        }
        if self.duration.is_none() && !matches!(self.carrier, Carrier::Bare) {
            if self.p_p.fract() != 0.0 || (self.p_p as i64) % 2 != 0 {
                return Err(Error::InvalidParameter(format!("p_p={} must be an even integer", self.p_p)));
            }
            if self.p_p <= self.n_p {
                return Err(Error::InvalidParameter(format!("p_p={} must exceed n_p={}", self.p_p, self.n_p)));
            }
        }
        if let Some(t) = self.duration {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("duration {t} must be positive")));
            }
        }
        Ok(())
    }

    pub fn detuning(&self, omega: f64) -> f64 {
        let half = 0.5 * omega * (self.s as f64).sqrt();
        match self.carrier {
            Carrier::Plus => half,
            Carrier::Minus => -half,
            Carrier::Bare => 0.0,
            Carrier::Detuning(x) => x,
        }
    }

    pub fn duration(&self, omega: f64) -> Result<f64> {
        self.validate()?;
        match (self.duration, self.carrier) {
            (Some(t), _) => Ok(t),
            (None, Carrier::Bare) => soft_pulse_duration(self.n_p * PI, omega),
            (None, _) => square_pulse_duration(self, omega),
        }
    }

    /// Bare h-g Rabi frequency; dressed carriers carry the sqrt(2) of the
    /// g component of `|+-,s>`.
    pub fn drive_amplitude(&self, omega: f64) -> Result<f64> {
        let t = self.duration(omega)?;
        Ok(match self.carrier {
            Carrier::Plus | Carrier::Minus => SQRT_2 * self.n_p * PI / t,
            _ => self.n_p * PI / t,
        })
    }

    pub fn resolve(&self, omega: f64) -> Result<SquarePulse> {
        Ok(SquarePulse {
            detuning: self.detuning(omega),
            drive: self.drive_amplitude(omega)?,
            phase: self.phase,
            duration: self.duration(omega)?,
            omega,
        })
    }
}

/// `t_p = (pi/delta_{s-1}) sqrt(p_p^2 - n_p^2)`.
pub fn square_pulse_duration(spec: &PulseSpec, omega: f64) -> Result<f64> {
    if spec.s == 0 {
        return Err(Error::InvalidParameter("s must be >= 1".into()));
    }
    if spec.p_p <= spec.n_p {
        return Err(Error::InvalidParameter(format!("p_p={} must exceed n_p={}", spec.p_p, spec.n_p)));
    }
    let gap = dressed_transition_gap(spec.s, spec.s - 1, omega);
    Ok(PI / gap * (spec.p_p * spec.p_p - spec.n_p * spec.n_p).sqrt())
}

/// Duration of a resonant vacuum pulse of angle `theta` that performs a
/// 4 pi rotation on the `|h,1> -> |+-,1>` lines.
pub fn soft_pulse_duration(theta: f64, omega: f64) -> Result<f64> {
    let r = 16.0 * PI * PI - 0.5 * theta * theta;
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("soft pulse angle {theta} too large")));
    }
    Ok(2.0 / omega * r.sqrt())
}

/// Resolved square pulse: detuning of the carrier from the bare h-g line,
/// bare Rabi frequency, phase and duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquarePulse {
    pub detuning: f64,
    pub drive: f64,
    pub phase: f64,
    pub duration: f64,
    pub omega: f64,
}

impl SquarePulse {
    /// Rotating-frame Hamiltonian on the block of photon number `n`.
    pub fn hamiltonian_block(&self, n: usize) -> CMat {
        let k = if n == 0 { 2 } else { 3 };
        let mut h = CMat::zeros(k, k);
        h[(0, 0)] = C64::from(self.detuning);
        let c = C64::from_polar(0.5 * self.drive, -self.phase);
        h[(1, 0)] = c;
        h[(0, 1)] = c.conj();
        if n > 0 {
            let v = C64::from(0.5 * self.omega * (n as f64).sqrt());
            h[(1, 2)] = v;
            h[(2, 1)] = v;
        }
        h
    }

    fn step_block(&self, n: usize, dt: f64) -> CMat {
        expm(&(self.hamiltonian_block(n) * C64::new(0.0, -dt))).expect("finite pulse block")
    }

    /// Interaction-picture propagator of block `n` after time `t`.
    pub fn block_unitary(&self, n: usize, t: f64) -> CMat {
        let mut u = self.step_block(n, t);
        let w = C64::from_polar(1.0, self.detuning * t);
        for z in u.row_mut(0).iter_mut() {
            *z *= w;
        }
        u
    }

    /// Full pulse propagator on the joint space.
    pub fn propagator(&self, d: usize) -> BlockOp {
        let mut op = BlockOp::identity(LEVELS * d);
        for n in 0..d {
            op.push(pulse_block_indices(n, d), self.block_unitary(n, self.duration));
        }
        op
    }

    /// Rotating-frame step `exp(-i H dt)` without the frame factor.
    pub fn step_op(&self, d: usize, dt: f64) -> BlockOp {
        let mut op = BlockOp::identity(LEVELS * d);
        for n in 0..d {
            op.push(pulse_block_indices(n, d), self.step_block(n, dt));
        }
        op
    }

    /// Frame factor `exp(i detuning t)` on level h.
    pub fn frame_op(&self, d: usize, t: f64) -> BlockOp {
        let w = C64::from_polar(1.0, self.detuning * t);
        let mut op = BlockOp::identity(LEVELS * d);
        for n in 0..d {
            op.push(vec![joint_index(AtomLevel::H, n, d)], CMat::from_element(1, 1, w));
        }
        op
    }

    /// Phase acquired by `|h,n>`.
    pub fn light_shift(&self, n: usize) -> f64 {
        self.block_unitary(n, self.duration)[(0, 0)].arg()
    }

    /// Population leaving `|h,n>`.
    pub fn transfer(&self, n: usize) -> f64 {
        1.0 - self.block_unitary(n, self.duration)[(0, 0)].norm_sqr()
    }
}

pub fn propagate_square_pulse(state: &JointState, spec: &PulseSpec, omega: f64) -> Result<JointState> {
    Ok(state.apply(&spec.resolve(omega)?.propagator(state.dim)))
}

/// Photon-number-independent level phases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StarkKick {
    pub phi_h: f64,
    pub phi_g: f64,
    pub phi_e: f64,
}

impl StarkKick {
    /// `phi_e - phi_g = pi` with no phase on h: swaps `|+,n>` and `|-,n>`.
    pub fn exchange() -> Self {
        Self { phi_h: 0.0, phi_g: PI, phi_e: 0.0 }
    }

    fn phases(&self) -> [C64; 3] {
        [
            C64::from_polar(1.0, self.phi_h),
            C64::from_polar(1.0, self.phi_g),
            C64::from_polar(1.0, self.phi_e),
        ]
    }

    pub fn op(&self, d: usize) -> BlockOp {
        let p = self.phases();
        let mut op = BlockOp::identity(LEVELS * d);
        for (k, lvl) in [AtomLevel::H, AtomLevel::G, AtomLevel::E].into_iter().enumerate() {
            for n in 0..d {
                op.push(vec![joint_index(lvl, n, d)], CMat::from_element(1, 1, p[k]));
            }
        }
        op
    }

    fn block(&self, n: usize) -> CMat {
        let p = self.phases();
        let k = if n == 0 { 2 } else { 3 };
        CMat::from_diagonal(&CVec::from_iterator(k, p.into_iter().take(k)))
    }
}

pub fn stark_kick(state: &JointState, kick: &StarkKick) -> JointState {
    state.apply(&kick.op(state.dim))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeKind {
    /// `|h,s> -> -|h,s>`.
    TwoPi,
    /// `|h,s> -> |-,s>`.
    Pi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositePulseSpec {
    pub s: usize,
    pub kind: CompositeKind,
    pub n_p: f64,
    pub p_p: f64,
    pub kick: StarkKick,
    /// Phase of the second pulse; calibrated when absent.
    #[serde(default)]
    pub chi: Option<f64>,
}

impl CompositePulseSpec {
    pub fn two_pi(s: usize, p_p: f64) -> Self {
        Self { s, kind: CompositeKind::TwoPi, n_p: 1.0, p_p, kick: StarkKick::exchange(), chi: None }
    }

    pub fn pi(s: usize, p_p: f64) -> Self {
        Self { s, kind: CompositeKind::Pi, n_p: 0.5, p_p, kick: StarkKick::exchange(), chi: None }
    }

    pub fn first(&self) -> PulseSpec {
        PulseSpec::selective(self.s, self.n_p, self.p_p, Carrier::Plus, 0.0)
    }

    pub fn second(&self, chi: f64) -> PulseSpec {
        PulseSpec::selective(self.s, self.n_p, self.p_p, Carrier::Minus, chi)
    }
}

/// Calibrated composite pulse: first pulse, Stark kick, second pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositePulse {
    pub spec: CompositePulseSpec,
    pub chi: f64,
    pub first: SquarePulse,
    pub second: SquarePulse,
    pub duration: f64,
}

impl CompositePulse {
    pub fn new(spec: &CompositePulseSpec, omega: f64) -> Result<Self> {
        let first = spec.first().resolve(omega)?;
        let chi = match spec.chi {
            Some(c) => c.rem_euclid(2.0 * PI),
            None => calibrate_chi(spec, omega)?,
        };
        let second = spec.second(chi).resolve(omega)?;
        Ok(Self { spec: spec.clone(), chi, first, second, duration: first.duration + second.duration })
    }

    /// Phase the Stark kick puts on h.
    pub fn phase_h(&self) -> f64 {
        self.spec.kick.phi_h
    }

    pub fn block(&self, n: usize) -> CMat {
        let u1 = self.first.block_unitary(n, self.first.duration);
        let u2 = self.second.block_unitary(n, self.second.duration);
        u2 * self.spec.kick.block(n) * u1
    }

    pub fn propagator(&self, d: usize) -> BlockOp {
        let mut op = BlockOp::identity(LEVELS * d);
        for n in 0..d {
            op.push(pulse_block_indices(n, d), self.block(n));
        }
        op
    }

    /// Population leaving `|h,n>`.
    pub fn transfer(&self, n: usize) -> f64 {
        1.0 - self.block(n)[(0, 0)].norm_sqr()
    }

    /// Phase of `<h,n|U|h,n>` relative to the target kick.
    pub fn residual_phase(&self, n: usize) -> f64 {
        let z = self.block(n)[(0, 0)];
        let target = if n == self.spec.s && self.spec.kind == CompositeKind::TwoPi { -ONE } else { ONE };
        (z * target.conj()).arg()
    }

    /// `|mean_n conj(k_n) <h,n|U|h,n>|^2` against the ideal field kick
    /// `1 - 2|s><s|`, averaged over `n < n_max`.
    pub fn field_kick_fidelity(&self, n_max: usize) -> f64 {
        let mut acc = ZERO;
        for n in 0..n_max {
            let k = if n == self.spec.s { -1.0 } else { 1.0 };
            acc += self.block(n)[(0, 0)] * k;
        }
        (acc / n_max as f64).norm_sqr()
    }
}

fn minus_in_block() -> CVec {
    CVec::from_vec(vec![ZERO, C64::from(-FRAC_1_SQRT_2), C64::from(FRAC_1_SQRT_2)])
}

/// Second-pulse phase: `<h,s|U|h,s> -> -1` for the 2 pi kind, maximal
/// `|<-,s|U|h,s>|` for the pi kind.
pub fn calibrate_chi(spec: &CompositePulseSpec, omega: f64) -> Result<f64> {
    let first = spec.first().resolve(omega)?;
    let s = spec.s;
    let u1 = first.block_unitary(s, first.duration);
    let k = spec.kick.block(s);
    let ku1 = k * u1;
    let minus = minus_in_block();
    let cost = |chi: f64| -> f64 {
        let second = match spec.second(chi).resolve(omega) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        let u = second.block_unitary(s, second.duration) * &ku1;
        match spec.kind {
            CompositeKind::TwoPi => (u[(0, 0)] + ONE).norm(),
            CompositeKind::Pi => -minus.dotc(&u.column(0)).norm_sqr(),
        }
    };
    let n = 720;
    let h = 2.0 * PI / n as f64;
    let (mut best, mut fbest) = (0.0, f64::INFINITY);
    for k in 0..n {
        let c = k as f64 * h;
        let f = cost(c);
        if f < fbest {
            best = c;
            fbest = f;
        }
    }
    let (x, _) = brent_min(cost, best - h, best + h);
    Ok(x.rem_euclid(2.0 * PI))
}

pub fn propagate_composite_pulse(state: &JointState, spec: &CompositePulseSpec, omega: f64) -> Result<JointState> {
    Ok(state.apply(&CompositePulse::new(spec, omega)?.propagator(state.dim)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShelvingDirection {
    GToI,
    IToG,
}

/// Hard pi rotation between g and i for every photon number:
/// `|g,n> -> -i|i,n>`, `|i,n> -> -i|g,n>`.
pub fn shelving_op(d: usize) -> BlockOp {
    let mut op = BlockOp::identity(LEVELS * d);
    let m = CMat::from_row_slice(2, 2, &[ZERO, MI, MI, ZERO]);
    for n in 0..d {
        op.push(vec![joint_index(AtomLevel::G, n, d), joint_index(AtomLevel::I, n, d)], m.clone());
    }
    op
}

/// Both directions are the same pi rotation; the argument documents intent.
pub fn shelving_pulse(state: &JointState, _direction: ShelvingDirection) -> JointState {
    state.apply(&shelving_op(state.dim))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SoftMode {
    /// Instantaneous rotation on the vacuum pair only.
    #[default]
    Ideal,
    /// Finite resonant square pulse on the whole joint space.
    Realistic,
}

/// Rotation of angle `theta` and phase `phi` on the bare h-g pair:
/// `|h> -> cos(theta/2)|h> - i e^{-i phi} sin(theta/2)|g>`,
/// `|g> -> cos(theta/2)|g> - i e^{i phi} sin(theta/2)|h>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftPulse {
    pub theta: f64,
    pub phi: f64,
}

impl SoftPulse {
    /// Rotation taking `|h,0>` to `a|g,0> + b|h,0>`; `b` must be real and
    /// non-negative.
    pub fn from_coefficients(a: C64, b: C64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("|a|^2+|b|^2 = {norm}")));
        }
        if b.im.abs() > 1e-9 || b.re < -1e-9 {
            return Err(Error::InvalidParameter(format!("b = {b} must be real and non-negative")));
        }
        let theta = 2.0 * b.re.clamp(-1.0, 1.0).acos();
        // -i e^{-i phi} = a/|a|
        let phi = if a.norm() > 0.0 { -(C64::i() * a).arg() } else { 0.0 };
        Ok(Self { theta, phi })
    }

    fn matrix(&self) -> CMat {
        let c = C64::from((0.5 * self.theta).cos());
        let s = (0.5 * self.theta).sin();
        let hg = MI * C64::from_polar(s, -self.phi);
        let gh = MI * C64::from_polar(s, self.phi);
        CMat::from_row_slice(2, 2, &[c, gh, hg, c])
    }

    pub fn ideal_op(&self, d: usize) -> BlockOp {
        let mut op = BlockOp::identity(LEVELS * d);
        op.push(vec![joint_index(AtomLevel::H, 0, d), joint_index(AtomLevel::G, 0, d)], self.matrix());
        op
    }

    pub fn square(&self, omega: f64) -> Result<SquarePulse> {
        let duration = soft_pulse_duration(self.theta, omega)?;
        Ok(SquarePulse { detuning: 0.0, drive: self.theta / duration, phase: self.phi, duration, omega })
    }

    pub fn duration(&self, mode: SoftMode, omega: f64) -> Result<f64> {
        match mode {
            SoftMode::Ideal => Ok(0.0),
            SoftMode::Realistic => soft_pulse_duration(self.theta, omega),
        }
    }

    pub fn op(&self, mode: SoftMode, d: usize, omega: f64) -> Result<BlockOp> {
        match mode {
            SoftMode::Ideal => Ok(self.ideal_op(d)),
            SoftMode::Realistic => Ok(self.square(omega)?.propagator(d)),
        }
    }
}

pub fn soft_vacuum_pulse(state: &JointState, a: C64, b: C64, mode: SoftMode, omega: f64) -> Result<JointState> {
    let p = SoftPulse::from_coefficients(a, b)?;
    Ok(state.apply(&p.op(mode, state.dim, omega)?))
}

/// Generic selective rotation `exp[-i (phi/2)(|h,s><+,s| + h.c.)]`.
pub fn selective_rotation(s: usize, phi: f64, d: usize) -> Result<BlockOp> {
    if s == 0 || s >= d {
        return Err(Error::InvalidParameter(format!("selective rotation needs 1<=s<d, got s={s}")));
    }
    let r = FRAC_1_SQRT_2;
    // basis (h, g, e): |+> = (0, r, r), |-> = (0, -r, r)
    let plus = [0.0, r, r];
    let minus = [0.0, -r, r];
    let hv = [1.0, 0.0, 0.0];
    let (c, sn) = ((0.5 * phi).cos(), (0.5 * phi).sin());
    let mut m = CMat::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            let proj = minus[i] * minus[j] + c * (hv[i] * hv[j] + plus[i] * plus[j]);
            let gen = hv[i] * plus[j] + plus[i] * hv[j];
            m[(i, j)] = C64::new(proj, -sn * gen);
        }
    }
    let mut op = BlockOp::identity(LEVELS * d);
    op.push(pulse_block_indices(s, d), m);
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{max_abs, unitarity_error};
    use crate::units::OMEGA;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dense_unitary(op: &BlockOp) -> f64 {
        unitarity_error(&op.to_dense())
    }

    #[test]
    fn jc_elements() {
        let d = 6;
        let v = jc_hamiltonian(OMEGA, d).unwrap();
        let e0 = joint_index(AtomLevel::E, 0, d);
        let g1 = joint_index(AtomLevel::G, 1, d);
        assert_abs_diff_eq!(v[(e0, g1)].re, OMEGA / 2.0, epsilon = 1e-15);
        let g0 = JointState::basis(AtomLevel::G, 0, d).unwrap();
        assert_eq!((&v * &g0.amps).norm(), 0.0);
        let sub = CMat::from_row_slice(2, 2, &[v[(g1, g1)], v[(g1, e0)], v[(e0, g1)], v[(e0, e0)]]);
        let mut ev: Vec<f64> = sub.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], -OMEGA / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], OMEGA / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn dressed_splitting_and_completeness() {
        let d = 8;
        let v = jc_hamiltonian(OMEGA, d).unwrap();
        for n in 1..d {
            let p = dressed_state(true, n, d).unwrap();
            let m = dressed_state(false, n, d).unwrap();
            let ep = p.amps.dotc(&(&v * &p.amps)).re;
            let em = m.amps.dotc(&(&v * &m.amps)).re;
            assert_abs_diff_eq!(ep - em, OMEGA * (n as f64).sqrt(), epsilon = 1e-13);
        }
        let basis = dressed_basis(d).unwrap();
        assert_eq!(basis.len(), 3 * d - 1);
        let mut proj = CMat::zeros(LEVELS * d, LEVELS * d);
        for (i, a) in basis.iter().enumerate() {
            for b in basis.iter().skip(i + 1) {
                assert!(a.amps.dotc(&b.amps).norm() < 1e-15);
            }
            proj += a.to_density();
        }
        // spans h, g and e up to the truncated |e,d-1>
        for l in [AtomLevel::H, AtomLevel::G, AtomLevel::E] {
            for n in 0..d {
                let i = joint_index(l, n, d);
                let want = if l == AtomLevel::E && n == d - 1 { 0.0 } else { 1.0 };
                assert_abs_diff_eq!(proj[(i, i)].re, want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn gaps_and_durations() {
        let g = dressed_transition_gap(6, 5, OMEGA) / (2.0 * PI);
        assert!((g * 1000.0 - 5.3).abs() / 5.3 < 0.02, "{g}");
        assert_eq!(dressed_transition_gap(3, 3, OMEGA), 0.0);
        assert_abs_diff_eq!(dressed_transition_gap(1, 0, OMEGA), OMEGA / 2.0, epsilon = 1e-15);
        let t = |s, p| square_pulse_duration(&PulseSpec::selective(s, 2.0, p, Carrier::Plus, 0.0), OMEGA).unwrap();
        assert!((t(1, 4.0) - 69.0).abs() < 1.0);
        assert!((t(1, 6.0) - 113.0).abs() < 1.0);
        assert!((t(6, 4.0) - 324.0).abs() < 2.0);
        assert!((t(6, 6.0) - 530.0).abs() < 2.0);
        let bad = PulseSpec::selective(1, 2.0, 2.0, Carrier::Plus, 0.0);
        assert!(square_pulse_duration(&bad, OMEGA).is_err());
        assert!(PulseSpec::selective(1, 1.0, 3.0, Carrier::Plus, 0.0).validate().is_err());
    }

    #[test]
    fn square_two_pi_on_target() {
        let d = 12;
        let spec = PulseSpec::selective(6, 2.0, 4.0, Carrier::Plus, 0.0);
        let p = spec.resolve(OMEGA).unwrap();
        let out = propagate_square_pulse(&JointState::basis(AtomLevel::H, 6, d).unwrap(), &spec, OMEGA).unwrap();
        let z = out.amp(AtomLevel::H, 6);
        assert!((z + ONE).norm_sqr() < 0.01, "{z}");
        assert!(p.transfer(5) < 0.02);
        assert!((p.light_shift(5) + 0.86).abs() < 0.05, "{}", p.light_shift(5));
        assert!((p.light_shift(4) + 0.47).abs() < 0.05, "{}", p.light_shift(4));
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn weak_drive_approaches_ideal_kick() {
        let d = 10;
        let base = PulseSpec::selective(1, 2.0, 4.0, Carrier::Plus, 0.0);
        let t0 = base.duration(OMEGA).unwrap();
        let errs: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&f| {
                let p = PulseSpec { duration: Some(t0 * f), ..base.clone() }.resolve(OMEGA).unwrap();
                (0..d)
                    .map(|n| {
                        let k = if n == 1 { -ONE } else { ONE };
                        (p.block_unitary(n, p.duration)[(0, 0)] - k).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn stark_exchange() {
        let d = 7;
        let k = StarkKick::exchange();
        for n in 1..d {
            let p = dressed_state(true, n, d).unwrap();
            let m = dressed_state(false, n, d).unwrap();
            let out = stark_kick(&p, &k);
            assert_abs_diff_eq!(out.amps.dotc(&m.amps).norm(), 1.0, epsilon = 1e-14);
            let back = stark_kick(&out, &k);
            assert_abs_diff_eq!(back.amps.dotc(&p.amps).norm(), 1.0, epsilon = 1e-14);
        }
        let zero = StarkKick::default();
        let st = dressed_state(true, 3, d).unwrap();
        assert_eq!(stark_kick(&st, &zero), st);
    }

    #[test]
    fn composite_s1() {
        let cp = CompositePulse::new(&CompositePulseSpec::two_pi(1, 4.0), OMEGA).unwrap();
        assert!((cp.duration - 155.0).abs() < 1.0, "{}", cp.duration);
        assert!((cp.chi - 2.75).abs() < 0.05, "{}", cp.chi);
        assert!((cp.block(1)[(0, 0)] + ONE).norm() < 0.01);
        assert!(cp.residual_phase(0).abs() <= 1e-4, "{}", cp.residual_phase(0));
        assert!(cp.field_kick_fidelity(2) >= 0.98);
        assert!(cp.transfer(0) < 0.02);
        assert!(dense_unitary(&cp.propagator(6)) < 1e-12);
        assert_eq!(cp.phase_h(), 0.0);
    }

    #[test]
    fn composite_pi_cycles() {
        let d = 10;
        let s = 3;
        let cp = CompositePulse::new(&CompositePulseSpec::pi(s, 2.0), OMEGA).unwrap();
        let op = cp.propagator(d);
        let h = JointState::basis(AtomLevel::H, s, d).unwrap();
        let m = dressed_state(false, s, d).unwrap();
        let p = dressed_state(true, s, d).unwrap();
        let s1 = h.apply(&op);
        let s2 = s1.apply(&op);
        let s3 = s2.apply(&op);
        assert!(s1.amps.dotc(&m.amps).norm_sqr() > 0.9);
        assert!(s2.amps.dotc(&p.amps).norm_sqr() > 0.9);
        assert!(s3.amps.dotc(&h.amps).norm_sqr() > 0.9);
    }

    #[test]
    fn shelving_conventions() {
        let d = 5;
        let g3 = JointState::basis(AtomLevel::G, 3, d).unwrap();
        let out = shelving_pulse(&g3, ShelvingDirection::GToI);
        assert_eq!(out.amp(AtomLevel::I, 3), MI);
        let h2 = JointState::basis(AtomLevel::H, 2, d).unwrap();
        assert_eq!(shelving_pulse(&h2, ShelvingDirection::GToI), h2);
        let back = shelving_pulse(&out, ShelvingDirection::IToG);
        assert_abs_diff_eq!((back.amp(AtomLevel::G, 3) + ONE).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn soft_pulse_modes() {
        let d = 8;
        let h0 = JointState::basis(AtomLevel::H, 0, d).unwrap();
        let pi = soft_vacuum_pulse(&h0, ONE, ZERO, SoftMode::Ideal, OMEGA).unwrap();
        assert_abs_diff_eq!(pi.amp(AtomLevel::G, 0).re, 1.0, epsilon = 1e-14);
        let id = soft_vacuum_pulse(&h0, ZERO, ONE, SoftMode::Ideal, OMEGA).unwrap();
        assert_eq!(id, h0);
        let a = C64::new(0.3, -0.4);
        let b = C64::from((1.0 - a.norm_sqr()).sqrt());
        let out = soft_vacuum_pulse(&h0, a, b, SoftMode::Ideal, OMEGA).unwrap();
        assert!((out.amp(AtomLevel::G, 0) - a).norm() < 1e-14);
        let real = soft_vacuum_pulse(&h0, a, b, SoftMode::Realistic, OMEGA).unwrap();
        assert!((real.amp(AtomLevel::G, 0) - a).norm() < 1e-12);
        assert!(soft_vacuum_pulse(&h0, ONE, ONE, SoftMode::Ideal, OMEGA).is_err());
        // 4 pi on the nearest spurious line leaves |h,1> in place
        let p = SoftPulse::from_coefficients(a, b).unwrap().square(OMEGA).unwrap();
        assert!(p.transfer(1) < 1e-4);
        assert!(p.duration <= 80.0 + 1e-9);
    }

    #[test]
    fn selective_rotation_two_pi_is_field_kick() {
        let d = 9;
        let op = selective_rotation(4, 2.0 * PI, d).unwrap();
        for n in 0..d {
            let k = if n == 4 { -1.0 } else { 1.0 };
            assert_abs_diff_eq!(op.element(joint_index(AtomLevel::H, n, d), joint_index(AtomLevel::H, n, d)).re, k, epsilon = 1e-15);
        }
        assert!(dense_unitary(&op) < 1e-14);
        assert!(selective_rotation(0, PI, d).is_err());
    }

    #[test]
    fn block_op_matches_dense() {
        let d = 5;
        let op = CompositePulse::new(&CompositePulseSpec::two_pi(2, 4.0), OMEGA).unwrap().propagator(d);
        let u = op.to_dense();
        let mut rho = CMat::zeros(LEVELS * d, LEVELS * d);
        for i in 0..LEVELS * d {
            for j in 0..LEVELS * d {
                rho[(i, j)] = C64::new((i * 7 + j) as f64 % 5.0, (i as f64 - j as f64) * 0.1);
            }
        }
        assert!(max_abs(&(op.conjugate(&rho) - &u * &rho * u.adjoint())) < 1e-12);
        let v = CVec::from_iterator(LEVELS * d, (0..LEVELS * d).map(|k| C64::new(k as f64, 1.0)));
        assert!((op.apply(&v) - &u * &v).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_and_field_ops() {
        let d = 6;
        let f = crate::fock::coherent_state(C64::new(0.5, 0.2), d).unwrap();
        let st = JointState::product(AtomLevel::E, &f);
        let r1 = st.field_density();
        let r2 = partial_trace_atom(&st.to_density(), d).unwrap();
        assert!(max_abs(&(r1.mat.clone() - r2.mat)) < 1e-15);
        let dm = crate::fock::displacement(C64::new(0.3, 0.0), d).unwrap();
        let a = st.apply_field(&dm).to_density();
        let b = field_conjugate(&st.to_density(), &dm);
        assert!(max_abs(&(a - b)) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn pulses_preserve_norm(s in 1usize..7, n_p in 0.3f64..2.0, phase in 0.0f64..6.3, amp_re in -1.0f64..1.0, amp_im in -1.0f64..1.0) {
            let d = 10;
            let mut v = CVec::zeros(LEVELS * d);
            for k in 0..LEVELS * d {
                v[k] = C64::new(amp_re + (k as f64 * 0.37).sin(), amp_im + (k as f64 * 0.11).cos());
            }
            let st = JointState::new(v, d).unwrap();
            let spec = PulseSpec::selective(s, n_p, 4.0, Carrier::Plus, phase);
            let out = propagate_square_pulse(&st, &spec, OMEGA).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-8);
            let sh = shelving_pulse(&out, ShelvingDirection::GToI);
            prop_assert!((sh.norm() - 1.0).abs() < 1e-8);
        }
    }
}
