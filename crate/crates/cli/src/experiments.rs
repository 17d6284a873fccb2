//! One runner per experiment. Each writes its artifacts under the output
//! directory and returns an ordered `key=value` summary.

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_state, write_text, write_wigner, DumpedState};
use qzd::analysis::{
    fit_relative_phases, mean_photon, revival_detect, s4_closed_form, wigner, GridSpec, RevivalOptions,
};
use qzd::atomfield::{CompositePulse, CompositePulseSpec};
use qzd::fock::{fidelity_pure, DensityOp, FockVector};
use qzd::protocols::{
    make_cat_semitransparent, make_multicomponent_cat, plan_synthesis, realistic_cat, realistic_confinement_with,
    realistic_multicat, run_synthesis, run_tweezers, stretch_cat, Collision, RealisticMulticat, RealisticZeno,
    SynthesisMode, SynthesisTarget, TweezersPlan,
};
use qzd::zeno::{return_steps, run_qzd, strict_subspace_reference, Mode, ZenoConfig, ZenoState};
use qzd::C64;
use rayon::prelude::*;
use std::fmt::Display;
use std::path::{Path, PathBuf};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub summary: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn put(&mut self, k: &str, v: impl Display) {
        self.summary.push((k.to_string(), v.to_string()));
    }

    fn num(&mut self, k: &str, v: f64) {
        self.put(k, format!("{v:.6}"));
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.summary.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str())
    }

    pub fn value(&self, k: &str) -> Option<f64> {
        self.get(k).and_then(|v| v.parse().ok())
    }
}

fn engine(e: qzd::Error) -> CliError {
    CliError::Engine(e)
}

/// Runs the experiment inside a thread pool of the configured size.
pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    let dir = out.join(cfg.experiment.name());
    pool.install(|| {
        let mut o = Outcome::default();
        o.put("experiment", cfg.experiment.name());
        match &cfg.experiment {
            Experiment::Confine(c) => confine(c, cfg, &dir, &mut o)?,
            Experiment::Cat(c) => cat(c, cfg, &dir, &mut o)?,
            Experiment::Multicat(c) => multicat(c, cfg, &dir, &mut o)?,
            Experiment::Tweezers(c) => tweezers(c, cfg, &dir, &mut o)?,
            Experiment::Synth(c) => synth(c, cfg, &dir, &mut o)?,
            Experiment::Revival(c) => revival(c, cfg, &dir, &mut o)?,
            Experiment::SweepConfinement(c) => sweep_confinement(c, cfg, &dir, &mut o)?,
            Experiment::SweepTransparency(c) => sweep_transparency(c, cfg, &dir, &mut o)?,
            Experiment::SweepTweezers(c) => sweep_tweezers(c, cfg, &dir, &mut o)?,
            Experiment::WignerDump(c) => wigner_dump(c, &dir, &mut o)?,
        }
        Ok(o)
    })
}

fn meta(cfg: &RunConfig, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![
        ("experiment".to_string(), cfg.experiment.name().to_string()),
        ("engine".to_string(), format!("qzd {ENGINE_VERSION}")),
        ("d".to_string(), cfg.physics.d.to_string()),
    ];
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

fn dump(o: &mut Outcome, path: PathBuf, st: &DumpedState, m: &[(String, String)]) -> CliResult<()> {
    write_state(&path, st, m)?;
    o.files.push(path);
    Ok(())
}

fn snapshot(o: &mut Outcome, path: PathBuf, rho: &DensityOp, half: f64, points: usize) -> CliResult<()> {
    let g = wigner(rho, &GridSpec::square(half, points)).map_err(engine)?;
    write_wigner(&path, &g)?;
    o.files.push(path);
    Ok(())
}

fn dumped(st: &ZenoState) -> DumpedState {
    match st {
        ZenoState::Field(v) => DumpedState::Vector(v.clone()),
        ZenoState::Joint(_) => DumpedState::Density(st.field_density()),
    }
}

fn confine(c: &ConfineConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    let steps = c.steps.unwrap_or_else(|| return_steps(c.s, c.beta));
    for (k, v) in [("s", c.s.to_string()), ("beta", c.beta.to_string()), ("phi", c.phi.to_string())] {
        o.put(k, v);
    }
    o.put("steps", steps);
    o.put("mode", toml::Value::try_from(c.mode).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default());
    let vac = FockVector::vacuum(d).map_err(engine)?;
    let refs: Vec<FockVector> = (0..=steps)
        .map(|k| strict_subspace_reference(&vac, C64::from(c.beta), k, c.s))
        .collect::<qzd::Result<_>>()
        .map_err(engine)?;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let want_snapshot = |k: usize| c.wigner_every.map(|e| e > 0 && k > 0 && k % e == 0).unwrap_or(false);
    let row = |k: usize, t: f64, rho: &DensityOp, p: f64| -> CliResult<Vec<f64>> {
        let f = fidelity_pure(rho, &refs[k]).map_err(engine)?;
        Ok(vec![k as f64, k as f64 * c.beta, t, mean_photon(rho), rho.mat[(0, 0)].re, f, p])
    };
    let (final_rho, final_state, duration) = if c.mode == EngineMode::Realistic {
        let p = RealisticZeno {
            s: c.s,
            beta: c.beta,
            n_steps: steps,
            composite: CompositePulseSpec::two_pi(c.s, c.composite_p_p),
            relax: cfg.physics.relax(),
            d,
            omega: cfg.physics.omega,
        };
        rows.push(row(0, 0.0, &vac.to_density(), 1.0)?);
        let mut err = None;
        let rep = realistic_confinement_with(&p, |k, t, rho| {
            match row(k, t, rho, 1.0) {
                Ok(r) => rows.push(r),
                Err(e) => err = Some(e),
            }
            if want_snapshot(k) {
                snapshots.push((k, rho.clone()));
            }
        })
        .map_err(engine)?;
        if let Some(e) = err {
            return Err(e);
        }
        (rep.field.clone(), DumpedState::Density(rep.field), rep.duration)
    } else {
        let mode = match c.mode {
            EngineMode::Projective => Mode::Projective,
            EngineMode::IdealKick => Mode::IdealKick,
            EngineMode::JointKick => Mode::JointKick,
            _ => Mode::Pulsed,
        };
        let mut z = ZenoConfig::new(c.s, C64::from(c.beta), steps, mode).with_phi(c.phi);
        z.omega = cfg.physics.omega;
        let mut kick_time = 0.0;
        if mode == Mode::Pulsed {
            let spec = CompositePulseSpec::two_pi(c.s, c.composite_p_p);
            kick_time = CompositePulse::new(&spec, z.omega).map_err(engine)?.duration;
            z.composite = Some(spec);
        }
        if c.sample_jumps {
            z.sample_seed = Some(cfg.seed);
        }
        let tr = run_qzd(&ZenoState::Field(vac.clone()), &z).map_err(engine)?;
        let mut surv = 1.0;
        for (k, st) in tr.states.iter().enumerate() {
            let rho = st.field_density();
            if k > 0 {
                surv *= tr.no_jump[k - 1];
            }
            rows.push(row(k, k as f64 * kick_time, &rho, surv)?);
            if want_snapshot(k) {
                snapshots.push((k, rho));
            }
        }
        if c.mode == EngineMode::Projective {
            o.num("survival", tr.survival());
            o.put("interrupted", tr.interrupted.map(|k| k.to_string()).unwrap_or_else(|| "none".into()));
        }
        (tr.final_field(), dumped(tr.final_state()), kick_time * steps as f64)
    };
    let last = rows.last().cloned().unwrap_or_default();
    o.num("fidelity", last[5]);
    o.num("vacuum_population", last[4]);
    o.num("mean_photon", last[3]);
    o.put("duration_us", format!("{duration:.1}"));
    let m = meta(cfg, &[("s", c.s.to_string()), ("beta", c.beta.to_string()), ("phi", c.phi.to_string())]);
    let path = dir.join("trace.csv");
    write_csv(
        &path,
        &m,
        &["step", "omega_t", "time_us", "mean_photon", "vacuum_population", "reference_fidelity", "no_jump"],
        &rows,
    )?;
    o.files.push(path);
    dump(o, dir.join("state.txt"), &final_state, &m)?;
    for (k, rho) in &snapshots {
        snapshot(o, dir.join(format!("wigner_step_{k:04}.txt")), rho, c.wigner_half, c.wigner_points)?;
    }
    o.put("wigner_grids", snapshots.len());
    let _ = final_rho;
    Ok(())
}

fn cat(c: &CatConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    let steps = c.steps.unwrap_or_else(|| return_steps(c.s, c.beta));
    o.put("s", c.s);
    o.put("beta", c.beta);
    o.put("phi", c.phi);
    o.put("steps", steps);
    o.put("realistic", c.realistic);
    let (rho, state, fit, duration) = if c.realistic {
        let p = RealisticZeno {
            s: c.s,
            beta: c.beta,
            n_steps: steps,
            composite: CompositePulseSpec::pi(c.s, c.composite_p_p),
            relax: cfg.physics.relax(),
            d,
            omega: cfg.physics.omega,
        };
        let (rep, fit) = realistic_cat(&p).map_err(engine)?;
        (rep.field.clone(), DumpedState::Density(rep.field), fit, rep.duration)
    } else {
        let r = make_cat_semitransparent(c.s, c.beta, c.phi, steps, d).map_err(engine)?;
        (r.state.field_density(), dumped(&r.state), r.fit, 0.0)
    };
    let f = fit.fit;
    o.num("transparency", qzd::analysis::transparency(&f).map_err(engine)?);
    o.num("fit_fidelity", f.fidelity);
    o.num("theta", f.theta);
    o.num("w_below", f.w_below);
    o.num("w_above", f.w_above);
    o.num("alpha_below", f.alpha_below);
    o.num("alpha_above", f.alpha_above);
    o.num("mean_photon", mean_photon(&rho));
    o.put("duration_us", format!("{duration:.1}"));
    let m = meta(cfg, &[("s", c.s.to_string()), ("beta", c.beta.to_string()), ("phi", c.phi.to_string())]);
    dump(o, dir.join("state.txt"), &state, &m)?;
    if c.wigner {
        snapshot(o, dir.join("wigner.txt"), &rho, c.wigner_half, c.wigner_points)?;
    }
    Ok(())
}

fn multicat(c: &MulticatConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    let comps: Vec<C64> = c.components.iter().map(|z| z.0).collect();
    o.put("s", c.s);
    o.put("realistic", c.realistic);
    let (rho, fidelity, phases, duration) = if c.realistic {
        let p = RealisticMulticat {
            s: c.s,
            beta_first: c.beta_first,
            beta_second: c.beta_second,
            n_steps: c.steps,
            switch_threshold: c.switch_threshold,
            composite: CompositePulseSpec::pi(c.s, c.composite_p_p),
            relax: cfg.physics.relax(),
            d,
            omega: cfg.physics.omega,
            components: comps.clone(),
        };
        let r = realistic_multicat(&p).map_err(engine)?;
        o.put("steps", c.steps);
        o.put("switched_at", r.switched_at.map(|k| k.to_string()).unwrap_or_else(|| "none".into()));
        (r.field, r.fidelity, r.phases, r.duration)
    } else {
        if c.collisions.is_empty() {
            return Err(CliError::Config("params.collisions: ideal mode needs at least one collision".into()));
        }
        let cols: Vec<Collision> =
            c.collisions.iter().map(|x| Collision { beta: x.beta, phi: x.phi, n_steps: x.steps }).collect();
        let st = make_multicomponent_cat(c.s, &cols, d).map_err(engine)?;
        let rho = st.field_density();
        let (ph, f) = fit_relative_phases(&rho, &vec![1.0; comps.len()], &comps).map_err(engine)?;
        o.put("collisions", cols.len());
        (rho, f, ph, 0.0)
    };
    o.num("fidelity", fidelity);
    o.put("phases", phases.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(","));
    o.num("mean_photon", mean_photon(&rho));
    o.put("duration_us", format!("{duration:.1}"));
    dump(o, dir.join("state.txt"), &DumpedState::Density(rho), &meta(cfg, &[("s", c.s.to_string())]))?;
    Ok(())
}

fn tweezers(c: &TweezersConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    o.put("phi", c.phi);
    o.put("steps", c.steps);
    o.put("stretch", c.stretch);
    let m = meta(cfg, &[("phi", c.phi.to_string()), ("steps", c.steps.to_string())]);
    if c.stretch {
        let (rho, f) = stretch_cat(c.alpha.0, c.alpha_end.0, c.steps, c.phi, d).map_err(engine)?;
        o.num("stretch_fidelity", f);
        dump(o, dir.join("state.txt"), &DumpedState::Density(rho), &m)?;
        return Ok(());
    }
    let mut plan = TweezersPlan::straight(c.start.0, c.end.0, c.steps, c.phi);
    plan.max_step = c.max_step;
    let start = qzd::fock::coherent_state(c.start.0, d).map_err(engine)?;
    let r = run_tweezers(&ZenoState::Field(start), &plan).map_err(engine)?;
    o.num("fidelity", r.fidelity);
    o.num("fitted_re", r.fitted.re);
    o.num("fitted_im", r.fitted.im);
    o.num("fitted_offset", (r.fitted - c.end.0).norm());
    o.num("delta", r.delta);
    o.num("topological_phase", r.topological_phase);
    dump(o, dir.join("state.txt"), &dumped(&r.state), &m)?;
    Ok(())
}

fn synth(c: &SynthConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    let target = SynthesisTarget::new(c.coeffs.iter().map(|z| z.0).collect(), c.gammas.iter().map(|z| z.0).collect())
        .map_err(|e| CliError::Config(format!("params.coeffs/gammas: {e}")))?;
    let default = SynthConfig::default();
    o.put("target", if c.coeffs == default.coeffs && c.gammas == default.gammas { "four_component" } else { "custom" });
    o.put("mode", if c.mode == SynthMode::Ideal { "ideal" } else { "realistic" });
    o.put("leg_step", c.leg_step);
    let plan = plan_synthesis(&target, c.leg_step).map_err(engine)?;
    let mode = match c.mode {
        SynthMode::Ideal => SynthesisMode::Ideal { phi: c.phi },
        SynthMode::Realistic => SynthesisMode::Realistic {
            composite_p_p: c.composite_p_p,
            relax: cfg.physics.relax(),
            omega: cfg.physics.omega,
        },
    };
    let r = run_synthesis(&plan, mode, d).map_err(engine)?;
    o.put("kicks", plan.kick_count());
    o.put("soft_pulses", plan.soft_pulses().count());
    o.num("fidelity", r.fidelity);
    o.num("reoptimized_fidelity", r.reoptimized_fidelity);
    o.num("atom_residual", r.atom_residual);
    o.put("entangled", r.entangled);
    o.put("duration_us", format!("{:.1}", r.duration));
    o.put("interrogation_us", format!("{:.1}", r.interrogation_time));
    o.put("max_pulse_us", format!("{:.2}", r.max_pulse_duration));
    o.put(
        "reoptimized_gammas",
        r.reoptimized_gammas.iter().map(|g| format!("{:.4}{:+.4}i", g.re, g.im)).collect::<Vec<_>>().join(","),
    );
    let plan_text = toml::to_string(&plan).map_err(|e| CliError::Config(format!("plan serialization: {e}")))?;
    let p = dir.join("plan.toml");
    write_text(&p, &plan_text)?;
    o.files.push(p);
    dump(o, dir.join("state.txt"), &DumpedState::Density(r.field), &meta(cfg, &[("leg_step", c.leg_step.to_string())]))?;
    Ok(())
}

fn revival(c: &RevivalConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    if !(c.beta > 0.0) || !(c.tmax > c.t_min) {
        return Err(CliError::Config("params: need beta > 0 and tmax > t_min".into()));
    }
    let n = ((c.tmax + c.window) / c.beta).ceil() as usize;
    let z = ZenoConfig::new(c.s, C64::from(c.beta), n, Mode::IdealKick);
    let tr = run_qzd(&ZenoState::Field(FockVector::vacuum(d).map_err(engine)?), &z).map_err(engine)?;
    let nbar: Vec<f64> = tr.states.iter().map(|s| mean_photon(&s.field_density())).collect();
    let ts: Vec<f64> = (0..nbar.len()).map(|k| k as f64 * c.beta).collect();
    let closed = (c.s == 4).then(|| s4_closed_form(&ts, 1.0));
    let rows: Vec<Vec<f64>> = ts
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut r = vec![*t, nbar[k]];
            if let Some(cf) = &closed {
                r.push(cf[k].iter().enumerate().map(|(n, p)| n as f64 * p).sum());
            }
            r
        })
        .collect();
    let mut header = vec!["omega_t", "mean_photon"];
    if closed.is_some() {
        header.push("closed_form");
    }
    let m = meta(cfg, &[("s", c.s.to_string()), ("beta", c.beta.to_string())]);
    let p = dir.join("revival.csv");
    write_csv(&p, &m, &header, &rows)?;
    o.files.push(p);
    o.put("s", c.s);
    o.put("beta", c.beta);
    let opts = RevivalOptions { window: c.window, t_min: c.t_min, ..RevivalOptions::default() };
    let r = revival_detect(&nbar, c.beta, &opts).map_err(engine)?;
    o.num("revival_time", r.time);
    o.num("mismatch", r.mismatch);
    Ok(())
}

/// Evaluates `f` on every `(x, y)` cell, in parallel within the current pool,
/// returning rows in grid order.
pub fn sweep<F>(xs: &[f64], ys: &[f64], f: F) -> CliResult<Vec<Vec<f64>>>
where
    F: Fn(f64, f64) -> qzd::Result<Vec<f64>> + Sync,
{
    let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let results: Vec<(f64, f64, qzd::Result<Vec<f64>>)> = cells.par_iter().map(|&(x, y)| (x, y, f(x, y))).collect();
    let mut failed = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for (x, y, r) in results {
        match r {
            Ok(v) => rows.push([vec![x, y], v].concat()),
            Err(e) => failed.push(format!("({x}, {y}): {e}")),
        }
    }
    if !failed.is_empty() {
        return Err(CliError::Sweep(format!("{} cell(s) failed: {}", failed.len(), failed.join("; "))));
    }
    Ok(rows)
}

fn sweep_stats(o: &mut Outcome, rows: &[Vec<f64>], col: usize, name: &str) {
    let v: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    o.put("cells", v.len());
    o.num(&format!("{name}_max"), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    o.num(&format!("{name}_min"), v.iter().cloned().fold(f64::INFINITY, f64::min));
}

fn started() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn sweep_confinement(c: &SweepConfinementConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    o.put("started_unix", started());
    let vac = FockVector::vacuum(d).map_err(engine)?;
    let rows = sweep(&c.beta.values(), &c.phi.values(), |beta, phi| {
        let n = return_steps(c.s, beta);
        let z = ZenoConfig::new(c.s, C64::from(beta), n, Mode::JointKick).with_phi(phi);
        let tr = run_qzd(&ZenoState::Field(vac.clone()), &z)?;
        let r = strict_subspace_reference(&vac, C64::from(beta), n, c.s)?;
        Ok(vec![n as f64, fidelity_pure(&tr.final_field(), &r)?])
    })?;
    let m = meta(
        cfg,
        &[("s", c.s.to_string()), ("axis_beta", c.beta.to_string()), ("axis_phi", c.phi.to_string()), ("mode", "joint_kick".into())],
    );
    let p = dir.join("confinement.csv");
    write_csv(&p, &m, &["beta", "phi", "steps", "fidelity"], &rows)?;
    o.files.push(p);
    sweep_stats(o, &rows, 3, "fidelity");
    Ok(())
}

fn sweep_transparency(c: &SweepTransparencyConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    o.put("started_unix", started());
    let rows = sweep(&c.beta.values(), &c.phi.values(), |beta, phi| {
        let n = return_steps(c.s, beta);
        let r = make_cat_semitransparent(c.s, beta, phi, n, d)?;
        Ok(vec![n as f64, r.transparency, r.fit.fit.fidelity])
    })?;
    let m = meta(
        cfg,
        &[("s", c.s.to_string()), ("axis_beta", c.beta.to_string()), ("axis_phi", c.phi.to_string()), ("mode", "joint_kick".into())],
    );
    let p = dir.join("transparency.csv");
    write_csv(&p, &m, &["beta", "phi", "steps", "transparency", "fit_fidelity"], &rows)?;
    o.files.push(p);
    sweep_stats(o, &rows, 3, "transparency");
    Ok(())
}

fn sweep_tweezers(c: &SweepTweezersConfig, cfg: &RunConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let d = cfg.physics.d;
    o.put("started_unix", started());
    let steps: Vec<f64> = c.steps.values().iter().map(|x| x.round()).collect();
    if steps.iter().any(|&n| n < 1.0) {
        return Err(CliError::Config("params.steps: grid must be >= 1".into()));
    }
    let vac = FockVector::vacuum(d).map_err(engine)?;
    let end = c.end.0;
    let rows = sweep(&steps, &c.phi.values(), |n, phi| {
        let plan = TweezersPlan::straight(C64::from(0.0), end, n as usize, phi);
        let r = run_tweezers(&ZenoState::Field(vac.clone()), &plan)?;
        Ok(vec![r.fidelity])
    })?;
    let m = meta(
        cfg,
        &[("axis_steps", c.steps.to_string()), ("axis_phi", c.phi.to_string()), ("end", format!("{},{}", end.re, end.im))],
    );
    let p = dir.join("tweezers.csv");
    write_csv(&p, &m, &["steps", "phi", "fidelity"], &rows)?;
    o.files.push(p);
    sweep_stats(o, &rows, 2, "fidelity");
    Ok(())
}

fn wigner_dump(c: &WignerDumpConfig, dir: &Path, o: &mut Outcome) -> CliResult<()> {
    let input = c.input.as_ref().ok_or_else(|| CliError::Config("params.input: state dump path required".into()))?;
    let (st, _) = crate::output::read_state(input)?;
    let rho = st.density();
    let g = wigner(&rho, &GridSpec::square(c.half, c.points)).map_err(engine)?;
    let p = dir.join("wigner.txt");
    write_wigner(&p, &g)?;
    o.files.push(p);
    o.num("integral", g.integral());
    o.num("w_min", g.values.iter().cloned().fold(f64::INFINITY, f64::min));
    o.num("w_max", g.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    Ok(())
}
