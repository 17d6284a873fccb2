//! Browser bindings: a confinement Wigner snapshot, the semi-transparent
//! barrier cat and a photon-number revival trace.

use qzd::analysis::{mean_photon, wigner, GridSpec};
use qzd::fock::FockVector;
use qzd::protocols::make_cat_semitransparent;
use qzd::units::DIM;
use qzd::zeno::{return_steps, run_qzd, Mode, ZenoConfig, ZenoState};
use qzd::C64;
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 201;
const MAX_STEPS: usize = 20_000;

fn err(e: qzd::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn grid(half: f64, points: usize) -> Result<GridSpec, qzd::Error> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(qzd::Error::InvalidParameter(format!("points must be in 2..={MAX_POINTS}")));
    }
    Ok(GridSpec::square(half, points))
}

fn steps_or_return(s: usize, beta: f64, steps: usize) -> Result<usize, qzd::Error> {
    let n = if steps == 0 { return_steps(s, beta) } else { steps };
    if n > MAX_STEPS {
        return Err(qzd::Error::InvalidParameter(format!("at most {MAX_STEPS} steps")));
    }
    Ok(n)
}

/// Field Wigner function, row-major `points x points` over `[-half, half]^2`,
/// after `steps` joint kicks from the vacuum (`steps = 0`: one return trip).
pub fn confinement_wigner_values(s: usize, beta: f64, phi: f64, steps: usize, half: f64, points: usize) -> qzd::Result<Vec<f64>> {
    let n = steps_or_return(s, beta, steps)?;
    let cfg = ZenoConfig::new(s, C64::from(beta), n, Mode::JointKick).with_phi(phi);
    let tr = run_qzd(&ZenoState::Field(FockVector::vacuum(DIM)?), &cfg)?;
    Ok(wigner(&tr.final_field(), &grid(half, points)?)?.values)
}

#[wasm_bindgen]
pub fn confinement_wigner(s: usize, beta: f64, phi: f64, steps: usize, half: f64, points: usize) -> Result<Vec<f64>, JsError> {
    confinement_wigner_values(s, beta, phi, steps, half, points).map_err(err)
}

#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct CatView {
    pub transparency: f64,
    pub fidelity: f64,
    pub theta: f64,
    pub alpha_below: f64,
    pub alpha_above: f64,
    wigner: Vec<f64>,
}

#[wasm_bindgen]
impl CatView {
    #[wasm_bindgen(getter)]
    pub fn wigner(&self) -> Vec<f64> {
        self.wigner.clone()
    }
}

pub fn cat_view(s: usize, beta: f64, phi: f64, half: f64, points: usize) -> qzd::Result<CatView> {
    let n = steps_or_return(s, beta, 0)?;
    let c = make_cat_semitransparent(s, beta, phi, n, DIM)?;
    let w = wigner(&c.state.field_density(), &grid(half, points)?)?;
    let f = c.fit.fit;
    Ok(CatView {
        transparency: c.transparency,
        fidelity: f.fidelity,
        theta: f.theta,
        alpha_below: f.alpha_below,
        alpha_above: f.alpha_above,
        wigner: w.values,
    })
}

/// One return trip through a partially transparent barrier, with the
/// two-component fit and the final Wigner grid.
#[wasm_bindgen]
pub fn semitransparent_cat(s: usize, beta: f64, phi: f64, half: f64, points: usize) -> Result<CatView, JsError> {
    cat_view(s, beta, phi, half, points).map_err(err)
}

/// Mean photon number after each ideal kick from the vacuum, sampled every
/// `beta` in omega t up to `tmax`.
pub fn revival_values(s: usize, beta: f64, tmax: f64) -> qzd::Result<Vec<f64>> {
    if !(beta > 0.0 && tmax > 0.0) {
        return Err(qzd::Error::InvalidParameter("beta and tmax must be positive".into()));
    }
    let n = (tmax / beta).ceil() as usize;
    if n > MAX_STEPS {
        return Err(qzd::Error::InvalidParameter(format!("at most {MAX_STEPS} steps")));
    }
    let tr = run_qzd(&ZenoState::Field(FockVector::vacuum(DIM)?), &ZenoConfig::new(s, C64::from(beta), n, Mode::IdealKick))?;
    Ok(tr.states.iter().map(|st| mean_photon(&st.field_density())).collect())
}

#[wasm_bindgen]
pub fn revival_trace(s: usize, beta: f64, tmax: f64) -> Result<Vec<f64>, JsError> {
    revival_values(s, beta, tmax).map_err(err)
}
