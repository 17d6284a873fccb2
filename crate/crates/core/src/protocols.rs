//! Composite experiments: tweezers, semi-transparent and multi-collision
//! cats, coherent-superposition synthesis and the relaxation-aware runs.

use crate::analysis::{
    coherent_fit, fit_relative_phases, mean_amplitude, mfss_fit, reoptimize_positions, superposition,
    superposition_fidelity, transparency, MfssReport,
};
use crate::atomfield::{
    selective_rotation, shelving_op, AtomLevel, BlockOp, CompositePulse, CompositePulseSpec, JointState, SoftPulse,
};
use crate::fock::{displacement, fidelity_pure, DensityOp, FockVector};
use crate::opensys::{composite_segments, RealisticRunner, RelaxationConfig, Segment};
use crate::zeno::{run_qzd, strict_subspace_reference, Mode, ZenoConfig, ZenoState};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Minimum distance kept between a moving exclusion circle and frozen components.
pub const D_MIN: f64 = 3.0;

/// Exclusion-circle trajectory for an s=1 tweezers run. `centers[0]` is the
/// starting centre; kicks are applied at `centers[1..]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweezersPlan {
    pub centers: Vec<C64>,
    pub mode: Mode,
    pub phi: f64,
    /// Hard limit on `|gamma_{k+1} - gamma_k|`.
    #[serde(default)]
    pub max_step: Option<f64>,
}

impl TweezersPlan {
    /// `n` equal steps on the segment `start -> end`.
    pub fn straight(start: C64, end: C64, n: usize, phi: f64) -> Self {
        let mut centers = vec![start];
        centers.extend((1..=n).map(|k| start + (end - start) * (k as f64 / n as f64)));
        let mode = if (phi - 2.0 * PI).abs() < 1e-12 { Mode::IdealKick } else { Mode::JointKick };
        Self { centers, mode, phi, max_step: None }
    }

    /// Largest displacement between consecutive centres.
    pub fn delta(&self) -> f64 {
        self.centers.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
    }

    pub fn end(&self) -> C64 {
        *self.centers.last().unwrap_or(&C64::from(0.0))
    }
}

#[derive(Debug, Clone)]
pub struct TweezersReport {
    pub state: ZenoState,
    /// Amplitude of the best coherent approximation.
    pub fitted: C64,
    pub fidelity: f64,
    pub delta: f64,
    pub topological_phase: f64,
}

pub fn run_tweezers(initial: &ZenoState, plan: &TweezersPlan) -> Result<TweezersReport> {
    let delta = plan.delta();
    if let Some(limit) = plan.max_step {
        if delta > limit {
            return Err(Error::StepTooLarge(format!("tweezers step {delta:.4} exceeds limit {limit}")));
        }
    }
    let n = plan.centers.len().saturating_sub(1);
    let mut cfg = ZenoConfig::new(1, C64::from(0.0), n, plan.mode).with_phi(plan.phi);
    cfg.gamma_trajectory = Some(plan.centers[1..].to_vec());
    let trace = if n == 0 {
        crate::zeno::ZenoTrace {
            states: vec![initial.clone()],
            no_jump: vec![],
            topological_phase: 0.0,
            interrupted: None,
        }
    } else {
        run_qzd(initial, &cfg)?
    };
    let rho = trace.final_field();
    let (fitted, fidelity) = coherent_fit(&rho, plan.end());
    Ok(TweezersReport {
        state: trace.final_state().clone(),
        fitted,
        fidelity,
        delta,
        topological_phase: trace.topological_phase,
    })
}

/// Stretches `|alpha> + |-alpha>` to `|alpha'> + |-alpha'>`, moving each
/// component with its own leg of `steps_per_leg` kicks. Returns the final
/// field and its fidelity to the stretched cat.
pub fn stretch_cat(alpha: C64, alpha_end: C64, steps_per_leg: usize, phi: f64, d: usize) -> Result<(DensityOp, f64)> {
    let one = C64::from(1.0);
    let cat = superposition(&[one, one], &[alpha, -alpha], d)?;
    let p1 = TweezersPlan::straight(alpha, alpha_end, steps_per_leg, phi);
    let p2 = TweezersPlan::straight(-alpha, -alpha_end, steps_per_leg, phi);
    let mut st = ZenoState::Field(cat);
    for p in [p1, p2] {
        st = run_tweezers(&st, &p)?.state;
    }
    let rho = st.field_density();
    let f = superposition_fidelity(&rho, &[one, one], &[alpha_end, -alpha_end])?;
    Ok((rho, f))
}

#[derive(Debug, Clone)]
pub struct CatReport {
    pub state: ZenoState,
    pub fit: MfssReport,
    pub transparency: f64,
}

/// Vacuum pushed against a leaky barrier with generic-angle joint kicks.
pub fn make_cat_semitransparent(s: usize, beta: f64, phi: f64, n_steps: usize, d: usize) -> Result<CatReport> {
    let cfg = ZenoConfig::new(s, C64::from(beta), n_steps, Mode::JointKick).with_phi(phi);
    let trace = run_qzd(&ZenoState::Field(FockVector::vacuum(d)?), &cfg)?;
    let fit = mfss_fit(&trace.final_field(), s)?;
    let t = transparency(&fit.fit)?;
    Ok(CatReport { state: trace.final_state().clone(), fit, transparency: t })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub beta: f64,
    pub phi: f64,
    pub n_steps: usize,
}

/// Successive collisions with the same barrier, atom carried across.
pub fn make_multicomponent_cat(s: usize, collisions: &[Collision], d: usize) -> Result<ZenoState> {
    if collisions.is_empty() {
        return Err(Error::InvalidParameter("at least one collision is required".into()));
    }
    let mut st = ZenoState::Field(FockVector::vacuum(d)?);
    for c in collisions {
        let cfg = ZenoConfig::new(s, C64::from(c.beta), c.n_steps, Mode::JointKick).with_phi(c.phi);
        st = run_qzd(&st, &cfg)?.final_state().clone();
    }
    Ok(st)
}

/// Target `sum_j c_j |gamma_j>`, global phase chosen so `c_m` is real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisTarget {
    pub coeffs: Vec<C64>,
    pub gammas: Vec<C64>,
}

impl SynthesisTarget {
    pub fn new(coeffs: Vec<C64>, gammas: Vec<C64>) -> Result<Self> {
        let m = coeffs.len();
        if m == 0 || m != gammas.len() {
            return Err(Error::InvalidParameter("target needs matching, non-empty component lists".into()));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-3 {
            return Err(Error::InvalidParameter(format!("sum |c_j|^2 = {norm}")));
        }
        for j in 0..m {
            for k in j + 1..m {
                if (gammas[j] - gammas[k]).norm() < D_MIN - 1e-9 {
                    return Err(Error::InvalidParameter(format!("components {j} and {k} overlap")));
                }
            }
            if j + 1 < m && gammas[j].norm() < D_MIN - 1e-9 {
                return Err(Error::InvalidParameter(format!("component {j} too close to the vacuum")));
            }
        }
        let ph = C64::from_polar(1.0, -coeffs[m - 1].arg());
        Ok(Self { coeffs: coeffs.iter().map(|c| c * ph).collect(), gammas })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn state(&self, d: usize) -> Result<FockVector> {
        superposition(&self.coeffs, &self.gammas, d)
    }

    /// `(|4> + |4i> + |3 e^{i 5 pi/4}> + |0>)/2`.
    pub fn four_component() -> Self {
        let h = C64::from(0.5);
        Self::new(
            vec![h; 4],
            vec![C64::new(4.0, 0.0), C64::new(0.0, 4.0), C64::from_polar(3.0, 1.25 * PI), C64::from(0.0)],
        )
        .expect("valid built-in target")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SynthesisStep {
    Soft { component: usize, pulse: SoftPulse },
    Shelve,
    Unshelve,
    /// Kicks at `centers`, moving one component along a polyline.
    Leg { component: usize, centers: Vec<C64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub component: usize,
    pub kind: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisPlan {
    pub target: SynthesisTarget,
    pub b: Vec<C64>,
    pub a: Vec<f64>,
    pub steps: Vec<SynthesisStep>,
    pub records: Vec<PhaseRecord>,
    pub leg_step: f64,
}

impl SynthesisPlan {
    pub fn soft_pulses(&self) -> impl Iterator<Item = &SoftPulse> {
        self.steps.iter().filter_map(|s| match s {
            SynthesisStep::Soft { pulse, .. } => Some(pulse),
            _ => None,
        })
    }

    pub fn kick_count(&self) -> usize {
        self.steps
            .iter()
            .map(|s| match s {
                SynthesisStep::Leg { centers, .. } => centers.len(),
                _ => 0,
            })
            .sum()
    }
}

fn seg_distance(a: C64, b: C64, p: C64) -> (f64, C64) {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    let t = if l2 > 0.0 { (((p - a) * ab.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = a + ab * t;
    ((p - q).norm(), q)
}

fn route(a: C64, b: C64, frozen: &[C64], depth: usize) -> Result<Vec<C64>> {
    for &p in frozen {
        let (dist, q) = seg_distance(a, b, p);
        if dist < D_MIN - 1e-9 {
            if depth == 0 {
                return Err(Error::Infeasible(format!("no detour found around frozen component at {p}")));
            }
            let dir = if (q - p).norm() > 1e-9 {
                (q - p) / (q - p).norm()
            } else {
                let ab = b - a;
                C64::i() * ab / ab.norm()
            };
            let w = p + dir * (1.05 * D_MIN);
            let mut first = route(a, w, frozen, depth - 1)?;
            first.extend(route(w, b, frozen, depth - 1)?.into_iter().skip(1));
            return Ok(first);
        }
    }
    Ok(vec![a, b])
}

fn leg_centers(waypoints: &[C64], step: f64) -> Vec<C64> {
    let mut out = Vec::new();
    for w in waypoints.windows(2) {
        let l = (w[1] - w[0]).norm();
        let n = (l / step - 1e-9).ceil() as usize;
        out.extend((1..=n).map(|k| w[0] + (w[1] - w[0]) * (k as f64 / n as f64)));
    }
    out
}

/// Phase `sum Im(conj(gamma_k) gamma_{k-1})` picked up along a leg from 0.
fn leg_phase(centers: &[C64]) -> f64 {
    let mut prev = C64::from(0.0);
    let mut acc = 0.0;
    for &g in centers {
        acc += (g.conj() * prev).im;
        prev = g;
    }
    acc
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Coefficient recursion, pulse phases and legs (straight from the vacuum,
/// detouring around frozen components).
pub fn plan_synthesis(target: &SynthesisTarget, leg_step: f64) -> Result<SynthesisPlan> {
    if !(leg_step > 0.0) {
        return Err(Error::InvalidParameter(format!("leg step {leg_step} must be positive")));
    }
    let m = target.len();
    let c = &target.coeffs;
    let (mut b, mut a) = (Vec::new(), Vec::new());
    let mut prod = 1.0;
    for (j, cj) in c.iter().enumerate().take(m - 1) {
        if prod < 1e-12 {
            break;
        }
        let bj = cj / prod;
        if bj.norm() > 1.0 + 1e-9 {
            return Err(Error::Infeasible(format!(
                "|b_{}| = {:.4} > 1; reorder components so larger weights come first",
                j + 1,
                bj.norm()
            )));
        }
        let aj = (1.0 - bj.norm_sqr()).max(0.0).sqrt();
        b.push(bj);
        a.push(aj);
        prod *= aj;
    }
    if (prod - c[m - 1].norm()).abs() > 1e-6 && b.len() == m - 1 {
        return Err(Error::Infeasible(format!("product of a_j = {prod} differs from c_m = {}", c[m - 1].norm())));
    }
    let mut legs: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut records = Vec::new();
    for j in 0..m {
        let g = target.gammas[j];
        let centers = if g.norm() > 0.0 {
            leg_centers(&route(C64::from(0.0), g, &target.gammas[..j], 4)?, leg_step)
        } else {
            Vec::new()
        };
        let tau = leg_phase(&centers);
        records.push(PhaseRecord { component: j, kind: "topological".into(), value: tau });
        legs.push(centers);
    }
    let tau: Vec<f64> = records.iter().map(|r| r.value).collect();
    let target_phase = |j: usize| c[j].arg() - c[0].arg() + tau[0] - tau[j];

    let mut steps = Vec::new();
    let push_leg = |steps: &mut Vec<SynthesisStep>, j: usize, shelve: bool| {
        if legs[j].is_empty() {
            return;
        }
        if shelve {
            steps.push(SynthesisStep::Shelve);
        }
        steps.push(SynthesisStep::Leg { component: j, centers: legs[j].clone() });
        if shelve {
            steps.push(SynthesisStep::Unshelve);
        }
    };
    if m == 1 || b.first().map(|x| x.norm() >= 1.0 - 1e-12).unwrap_or(false) {
        push_leg(&mut steps, 0, false);
        return Ok(SynthesisPlan { target: target.clone(), b, a, steps, records, leg_step });
    }
    // remaining vacuum amplitude after the first pulse, in g
    let phi1 = -0.5 * PI;
    let theta1 = 2.0 * b[0].norm().clamp(0.0, 1.0).acos();
    steps.push(SynthesisStep::Soft { component: 0, pulse: SoftPulse { theta: theta1, phi: phi1 } });
    let mut r = C64::new(0.0, -1.0) * C64::from_polar(a[0], -phi1);
    let mut shelved = false;
    if !legs[0].is_empty() {
        push_leg(&mut steps, 0, true);
        shelved = true;
    }
    for j in 1..m {
        if r.norm() < 1e-12 {
            break;
        }
        if shelved {
            r = -r;
        }
        let (theta, mag_next) = if j < b.len() {
            (2.0 * b[j].norm().clamp(0.0, 1.0).asin(), a[j])
        } else {
            (PI, 0.0)
        };
        let phi = wrap(target_phase(j) - r.arg() + 0.5 * PI);
        steps.push(SynthesisStep::Soft { component: j, pulse: SoftPulse { theta, phi } });
        r *= mag_next;
        let last = j == m - 1 || mag_next < 1e-12;
        shelved = !last && !legs[j].is_empty();
        push_leg(&mut steps, j, !last);
        if last {
            break;
        }
    }
    Ok(SynthesisPlan { target: target.clone(), b, a, steps, records, leg_step })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SynthesisMode {
    /// Instantaneous pulses and selective kicks of angle `phi`.
    Ideal { phi: f64 },
    /// Finite soft pulses and composite kicks with cavity relaxation.
    Realistic { composite_p_p: f64, relax: RelaxationConfig, omega: f64 },
}

#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub field: DensityOp,
    pub fidelity: f64,
    pub reoptimized_fidelity: f64,
    pub reoptimized_gammas: Vec<C64>,
    /// Population left outside level h.
    pub atom_residual: f64,
    pub entangled: bool,
    /// Total sequence time (zero in ideal mode).
    pub duration: f64,
    /// Time spent in interrogation (composite) pulses.
    pub interrogation_time: f64,
    pub max_pulse_duration: f64,
}

const ENTANGLEMENT_THRESHOLD: f64 = 0.02;

enum Engine {
    Ideal { st: JointState, kick: BlockOp },
    Realistic { run: Box<RealisticRunner>, kick: Vec<Segment>, kick_time: f64 },
}

impl Engine {
    fn unitary(&mut self, op: &BlockOp) {
        match self {
            Engine::Ideal { st, .. } => *st = st.apply(op),
            Engine::Realistic { run, .. } => run.apply(&Segment::Unitary(op.clone())),
        }
    }

    fn kick_at(&mut self, g: C64, d: usize) -> Result<()> {
        let (dp, dm) = (displacement(g, d)?, displacement(-g, d)?);
        match self {
            Engine::Ideal { st, kick } => *st = st.apply_field(&dm).apply(kick).apply_field(&dp),
            Engine::Realistic { run, kick, .. } => {
                run.apply(&Segment::Field(dm));
                run.apply_all(kick);
                run.apply(&Segment::Field(dp));
            }
        }
        Ok(())
    }
}

pub fn run_synthesis(plan: &SynthesisPlan, mode: SynthesisMode, d: usize) -> Result<SynthesisReport> {
    let omega = match mode {
        SynthesisMode::Realistic { omega, .. } => omega,
        SynthesisMode::Ideal { .. } => crate::units::OMEGA,
    };
    let vac = JointState::product(AtomLevel::H, &FockVector::vacuum(d)?);
    let mut max_pulse: f64 = 0.0;
    let mut eng = match mode {
        SynthesisMode::Ideal { phi } => Engine::Ideal { st: vac, kick: selective_rotation(1, phi, d)? },
        SynthesisMode::Realistic { composite_p_p, relax, .. } => {
            let cp = CompositePulse::new(&CompositePulseSpec::two_pi(1, composite_p_p), omega)?;
            max_pulse = cp.first.duration.max(cp.second.duration);
            let mut run = RealisticRunner::from_joint(&vac, relax)?;
            run.keep_reports = false;
            Engine::Realistic { run: Box::new(run), kick: composite_segments(&cp, d, relax.dt), kick_time: cp.duration }
        }
    };
    let shelve = shelving_op(d);
    let mut interrogation = 0.0;
    for step in &plan.steps {
        match step {
            SynthesisStep::Soft { pulse, .. } => match &mut eng {
                Engine::Ideal { st, .. } => *st = st.apply(&pulse.ideal_op(d)),
                Engine::Realistic { run, .. } => {
                    let sq = pulse.square(omega)?;
                    max_pulse = max_pulse.max(sq.duration);
                    run.apply(&Segment::pulse(sq, d, run.cfg.dt));
                }
            },
            SynthesisStep::Shelve | SynthesisStep::Unshelve => eng.unitary(&shelve),
            SynthesisStep::Leg { centers, .. } => {
                for &g in centers {
                    eng.kick_at(g, d)?;
                    if let Engine::Realistic { kick_time, .. } = &eng {
                        interrogation += *kick_time;
                    }
                }
            }
        }
    }
    let (field, atom_residual, duration) = match &eng {
        Engine::Ideal { st, .. } => (st.field_density(), 1.0 - st.level_population(AtomLevel::H), 0.0),
        Engine::Realistic { run, .. } => (run.field(), 1.0 - run.level_population(AtomLevel::H), run.time),
    };
    let t = &plan.target;
    let fidelity = superposition_fidelity(&field, &t.coeffs, &t.gammas)?;
    let (reoptimized_gammas, reoptimized_fidelity) = reoptimize_positions(&field, &t.coeffs, &t.gammas)?;
    Ok(SynthesisReport {
        field,
        fidelity,
        reoptimized_fidelity,
        reoptimized_gammas,
        atom_residual,
        entangled: atom_residual > ENTANGLEMENT_THRESHOLD,
        duration,
        interrogation_time: interrogation,
        max_pulse_duration: max_pulse,
    })
}

/// Settings shared by the relaxation-aware Zeno runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealisticZeno {
    pub s: usize,
    pub beta: f64,
    pub n_steps: usize,
    pub composite: CompositePulseSpec,
    pub relax: RelaxationConfig,
    pub d: usize,
    pub omega: f64,
}

impl RealisticZeno {
    /// Confinement at s=6, beta=0.4, 12 steps, 2 pi composite with p_p=2.
    pub fn confinement() -> Self {
        Self {
            s: 6,
            beta: 0.4,
            n_steps: 12,
            composite: CompositePulseSpec::two_pi(6, 2.0),
            relax: RelaxationConfig::default(),
            d: crate::units::DIM,
            omega: crate::units::OMEGA,
        }
    }

    /// Two-component cat at s=6, beta=0.33, 15 steps, pi composite with p_p=2.
    pub fn pi_cat() -> Self {
        Self {
            s: 6,
            beta: 0.33,
            n_steps: 15,
            composite: CompositePulseSpec::pi(6, 2.0),
            relax: RelaxationConfig::default(),
            d: crate::units::DIM,
            omega: crate::units::OMEGA,
        }
    }

    fn start(&self) -> Result<(RealisticRunner, Vec<Segment>)> {
        let cp = CompositePulse::new(&self.composite, self.omega)?;
        let mut run = RealisticRunner::from_field(&FockVector::vacuum(self.d)?.to_density(), self.relax)?;
        run.keep_reports = false;
        Ok((run, composite_segments(&cp, self.d, self.relax.dt)))
    }
}

#[derive(Debug, Clone)]
pub struct RealisticReport {
    pub field: DensityOp,
    pub fidelity: f64,
    pub duration: f64,
}

/// Composite-pulse confinement with relaxation; fidelity to the strict
/// subspace evolution.
pub fn realistic_confinement(p: &RealisticZeno) -> Result<RealisticReport> {
    realistic_confinement_with(p, |_, _, _| {})
}

/// As [`realistic_confinement`], calling `on_step(k, time, field)` after each step.
pub fn realistic_confinement_with(
    p: &RealisticZeno,
    mut on_step: impl FnMut(usize, f64, &DensityOp),
) -> Result<RealisticReport> {
    let (mut run, kick) = p.start()?;
    let free = Segment::Field(displacement(C64::from(p.beta), p.d)?);
    for k in 0..p.n_steps {
        run.apply(&free);
        run.apply_all(&kick);
        on_step(k + 1, run.time, &run.field());
    }
    let field = run.field();
    let reference = strict_subspace_reference(&FockVector::vacuum(p.d)?, C64::from(p.beta), p.n_steps, p.s)?;
    let fidelity = fidelity_pure(&field, &reference)?;
    Ok(RealisticReport { field, fidelity, duration: run.time })
}

/// Semi-transparent barrier cat with relaxation; fidelity is that of the
/// two-component fit.
pub fn realistic_cat(p: &RealisticZeno) -> Result<(RealisticReport, MfssReport)> {
    let (mut run, kick) = p.start()?;
    let free = Segment::Field(displacement(C64::from(p.beta), p.d)?);
    for _ in 0..p.n_steps {
        run.apply(&free);
        run.apply_all(&kick);
    }
    let field = run.field();
    let fit = mfss_fit(&field, p.s)?;
    Ok((RealisticReport { fidelity: fit.fit.fidelity, field, duration: run.time }, fit))
}

/// Three-component cat from two collisions with a pi-composite barrier.
/// The step switches from `beta_first` to `beta_second` once the mean
/// amplitude of the part trapped below the barrier has gone from above
/// `switch_threshold` to below `-switch_threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealisticMulticat {
    pub s: usize,
    pub beta_first: f64,
    pub beta_second: f64,
    pub n_steps: usize,
    pub switch_threshold: f64,
    pub composite: CompositePulseSpec,
    pub relax: RelaxationConfig,
    pub d: usize,
    pub omega: f64,
    /// Component centres used to score the result.
    pub components: Vec<C64>,
}

impl Default for RealisticMulticat {
    fn default() -> Self {
        Self {
            s: 3,
            beta_first: 0.34,
            beta_second: 0.45,
            n_steps: 18,
            switch_threshold: 0.3,
            composite: CompositePulseSpec::pi(3, 2.0),
            relax: RelaxationConfig::default(),
            d: crate::units::DIM,
            omega: crate::units::OMEGA,
            components: vec![C64::from(-0.3), C64::from(3.2), C64::from(6.7)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct MulticatReport {
    pub field: DensityOp,
    pub fidelity: f64,
    pub phases: Vec<f64>,
    pub duration: f64,
    /// Step after which the second step size was used, if reached.
    pub switched_at: Option<usize>,
}

pub fn realistic_multicat(p: &RealisticMulticat) -> Result<MulticatReport> {
    let cp = CompositePulse::new(&p.composite, p.omega)?;
    let kick = composite_segments(&cp, p.d, p.relax.dt);
    let mut run = RealisticRunner::from_field(&FockVector::vacuum(p.d)?.to_density(), p.relax)?;
    run.keep_reports = false;
    let first = Segment::Field(displacement(C64::from(p.beta_first), p.d)?);
    let second = Segment::Field(displacement(C64::from(p.beta_second), p.d)?);
    let mut switched_at = None;
    let mut was_positive = false;
    for k in 0..p.n_steps {
        run.apply(if switched_at.is_some() { &second } else { &first });
        run.apply_all(&kick);
        if switched_at.is_none() {
            let m = inner_mean_amplitude(&run.field(), p.s);
            if m > p.switch_threshold {
                was_positive = true;
            }
            if was_positive && m < -p.switch_threshold {
                switched_at = Some(k + 1);
            }
        }
    }
    let field = run.field();
    let w = vec![1.0; p.components.len()];
    let (phases, fidelity) = fit_relative_phases(&field, &w, &p.components)?;
    Ok(MulticatReport { field, fidelity, phases, duration: run.time, switched_at })
}

/// `Re Tr(P rho P a) / Tr(P rho P)` with `P` the projector on `n < s`.
pub fn inner_mean_amplitude(rho: &DensityOp, s: usize) -> f64 {
    let s = s.min(rho.dim());
    let inner = DensityOp { mat: rho.mat.view((0, 0), (s, s)).into_owned() };
    let w = inner.trace();
    if w <= 0.0 {
        return 0.0;
    }
    mean_amplitude(&inner).re / w
}

/// `<gamma|psi>`.
pub fn component_overlap(psi: &FockVector, gamma: C64) -> Result<C64> {
    let g = crate::fock::coherent_state(gamma, psi.dim())?;
    g.overlap(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_state;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const D: usize = 60;

    #[test]
    fn tweezers_pull_two_pi() {
        let l = 2.0 * 6f64.sqrt();
        let plan = TweezersPlan::straight(C64::from(0.0), C64::from(l), 10, 2.0 * PI);
        let r = run_tweezers(&ZenoState::Field(FockVector::vacuum(D).unwrap()), &plan).unwrap();
        assert!(r.fidelity > 0.99, "{}", r.fidelity);
        assert!((r.fitted - C64::from(l)).norm() < 0.5);
        assert_abs_diff_eq!(r.delta, l / 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.topological_phase, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tweezers_step_limit() {
        let mut plan = TweezersPlan::straight(C64::from(0.0), C64::from(4.0), 4, 2.0 * PI);
        plan.max_step = Some(0.5);
        let e = run_tweezers(&ZenoState::Field(FockVector::vacuum(D).unwrap()), &plan);
        assert!(matches!(e, Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn tweezers_locality() {
        let far = C64::new(0.0, -5.0);
        let one = C64::from(1.0);
        let psi = superposition(&[one, one], &[C64::from(0.0), far], D).unwrap();
        let plan = TweezersPlan::straight(C64::from(0.0), C64::from(2.0 * 6f64.sqrt()), 10, 2.0 * PI);
        let r = run_tweezers(&ZenoState::Field(psi.clone()), &plan).unwrap();
        let ZenoState::Field(out) = r.state else { panic!("field mode") };
        let g = coherent_state(far, D).unwrap();
        let before = g.overlap(&psi).unwrap().norm_sqr();
        let after = g.overlap(&out).unwrap().norm_sqr();
        assert!((before - after).abs() < 1e-3, "{before} {after}");
    }

    #[test]
    fn opaque_barrier_cat_is_single_component() {
        let n = crate::zeno::return_steps(6, 0.1);
        let r = make_cat_semitransparent(6, 0.1, 2.0 * PI, n, D).unwrap();
        assert!(r.transparency < 0.01, "{}", r.transparency);
    }

    #[test]
    fn single_collision_matches_cat() {
        let c = Collision { beta: 0.345, phi: 3.03, n_steps: 14 };
        let st = make_multicomponent_cat(6, &[c], D).unwrap();
        let cat = make_cat_semitransparent(6, 0.345, 3.03, 14, D).unwrap();
        assert_eq!(st, cat.state);
    }

    #[test]
    fn two_opaque_collisions() {
        let n = crate::zeno::return_steps(6, 0.1);
        let c = Collision { beta: 0.1, phi: 2.0 * PI, n_steps: n };
        let st = make_multicomponent_cat(6, &[c, c], D).unwrap();
        let rho = st.field_density();
        let above: f64 = (7..D).map(|k| rho.mat[(k, k)].re).sum();
        assert!(above < 0.01, "{above}");
    }

    #[test]
    fn recursion_closed_form() {
        let plan = plan_synthesis(&SynthesisTarget::four_component(), 0.1).unwrap();
        let b: Vec<f64> = plan.b.iter().map(|x| x.norm()).collect();
        assert_abs_diff_eq!(b[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(b[2], 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(plan.a[0], 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.a[1], (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(plan.a.iter().product::<f64>(), 0.5, epsilon = 1e-12);
        assert_eq!(plan.soft_pulses().count(), 4);
    }

    #[test]
    fn degenerate_targets() {
        let one = SynthesisTarget::new(vec![C64::from(1.0)], vec![C64::new(3.0, 1.0)]).unwrap();
        let p = plan_synthesis(&one, 0.1).unwrap();
        assert_eq!(p.soft_pulses().count(), 0);
        assert_eq!(p.steps.len(), 1);
        let r = run_synthesis(&p, SynthesisMode::Ideal { phi: 2.0 * PI }, D).unwrap();
        assert!(r.fidelity > 0.99, "{}", r.fidelity);

        let two = SynthesisTarget::new(vec![C64::from(1.0), C64::from(0.0)], vec![C64::from(4.0), C64::from(0.0)]).unwrap();
        let p = plan_synthesis(&two, 0.1).unwrap();
        assert!(matches!(p.steps.as_slice(), [SynthesisStep::Leg { .. }]));
    }

    #[test]
    fn infeasible_ordering() {
        let gammas = vec![C64::from(4.0), C64::new(0.0, 4.0), C64::from(0.0)];
        let bad = SynthesisTarget { coeffs: vec![C64::from(0.9), C64::from(0.5), C64::from(0.1)], gammas: gammas.clone() };
        assert!(matches!(plan_synthesis(&bad, 0.1), Err(Error::Infeasible(_))));
        let n = (0.01f64 + 0.25 + 0.81).sqrt();
        let good = SynthesisTarget::new([0.1, 0.5, 0.9].map(|x| C64::from(x / n)).to_vec(), gammas).unwrap();
        assert!(plan_synthesis(&good, 0.1).is_ok());
    }

    #[test]
    fn detour_keeps_distance() {
        let t = SynthesisTarget::new(vec![C64::from(0.6), C64::from(0.8)], vec![C64::from(4.0), C64::from(8.0)]).unwrap();
        let p = plan_synthesis(&t, 0.2).unwrap();
        for s in &p.steps {
            if let SynthesisStep::Leg { component: 1, centers } = s {
                assert!(centers.iter().all(|g| (g - C64::from(4.0)).norm() >= D_MIN - 0.2));
                assert!((centers.last().unwrap() - C64::from(8.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ideal_synthesis_weights_and_phases() {
        let coeffs = vec![C64::from_polar(0.6, 0.7), C64::from_polar(0.48, -1.2), C64::from(0.64)];
        let gammas = vec![C64::new(4.0, 0.0), C64::new(-1.0, 4.0), C64::from(0.0)];
        let t = SynthesisTarget::new(coeffs, gammas).unwrap();
        let plan = plan_synthesis(&t, 0.1).unwrap();
        let r = run_synthesis(&plan, SynthesisMode::Ideal { phi: 2.0 * PI }, D).unwrap();
        assert!(r.fidelity > 0.98, "{}", r.fidelity);
        assert!(r.atom_residual < 1e-3 && !r.entangled);
        // dominant eigenvector of the field state
        let eig = r.field.mat.clone().symmetric_eigen();
        let k = eig.eigenvalues.imax();
        let psi = FockVector::new(eig.eigenvectors.column(k).into_owned()).unwrap();
        let ov: Vec<C64> = t.gammas.iter().map(|g| component_overlap(&psi, *g).unwrap()).collect();
        for j in 0..3 {
            assert!((ov[j].norm_sqr() - t.coeffs[j].norm_sqr()).abs() < 0.01, "{j}: {}", ov[j].norm_sqr());
            let rel = wrap(ov[j].arg() - ov[0].arg() - (t.coeffs[j].arg() - t.coeffs[0].arg()));
            assert!(rel.abs() < 0.05, "{j}: {rel}");
        }
    }

    #[test]
    fn inner_amplitude() {
        let rho = coherent_state(C64::from(0.3), D).unwrap().to_density();
        let m = inner_mean_amplitude(&rho, D);
        assert_abs_diff_eq!(m, 0.3, epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn recursion_reproduces_weights(w in proptest::collection::vec(0.2f64..1.0, 2..5)) {
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let m = w.len();
            let coeffs: Vec<C64> = w.iter().map(|x| C64::from(x / n)).collect();
            let gammas: Vec<C64> = (0..m).map(|j| if j + 1 == m { C64::from(0.0) } else { C64::from_polar(5.0, j as f64 * 1.7) }).collect();
            let t = SynthesisTarget { coeffs: coeffs.clone(), gammas };
            match plan_synthesis(&t, 0.5) {
                Ok(p) => {
                    let mut prod = 1.0;
                    for (j, (b, a)) in p.b.iter().zip(&p.a).enumerate() {
                        prop_assert!((b.norm() * prod - coeffs[j].norm()).abs() < 1e-9);
                        prod *= a;
                    }
                    prop_assert!((prod - coeffs[m - 1].norm()).abs() < 1e-6);
                }
                Err(Error::Infeasible(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
