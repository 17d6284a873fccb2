//! Observables, fits and analytic oracles.

use crate::fock::{coherent_amplitudes, coherent_state, CMat, CVec, DensityOp, FockVector};
use crate::optim::nelder_mead;
use crate::{Error, Result, C64};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Rectangular phase-space grid, inclusive ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half: f64, n: usize) -> Self {
        Self { re_min: -half, re_max: half, im_min: -half, im_max: half, nx: n, ny: n }
    }

    pub fn x(&self, ix: usize) -> f64 {
        axis(self.re_min, self.re_max, self.nx, ix)
    }

    pub fn y(&self, iy: usize) -> f64 {
        axis(self.im_min, self.im_max, self.ny, iy)
    }

    pub fn cell_area(&self) -> f64 {
        let dx = if self.nx > 1 { (self.re_max - self.re_min) / (self.nx - 1) as f64 } else { 1.0 };
        let dy = if self.ny > 1 { (self.im_max - self.im_min) / (self.ny - 1) as f64 } else { 1.0 };
        dx * dy
    }
}

fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Wigner function samples, row-major with rows along the imaginary axis:
/// `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }

    /// Riemann sum of W over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_area()
    }
}

/// `W(alpha)` normalized to unit integral over the complex plane, by the
/// iterative Laguerre recursion.
pub fn wigner_point(rho: &CMat, alpha: C64, work: &mut Vec<C64>) -> f64 {
    let d = rho.nrows();
    work.clear();
    work.resize(d, C64::from(0.0));
    let wl = work;
    let sq: Vec<f64> = (0..d).map(|k| (k as f64).sqrt()).collect();
    let a2 = alpha * 2.0;
    let ac2 = alpha.conj() * 2.0;
    wl[0] = C64::from(2.0 / PI * (-2.0 * alpha.norm_sqr()).exp());
    let mut w = rho[(0, 0)].re * wl[0].re;
    for n in 1..d {
        wl[n] = a2 * wl[n - 1] / sq[n];
        w += 2.0 * (rho[(0, n)] * wl[n]).re;
    }
    for m in 1..d {
        let mut temp = wl[m];
        wl[m] = (ac2 * temp - wl[m - 1] * sq[m]) / sq[m];
        w += (rho[(m, m)] * wl[m]).re;
        for n in m + 1..d {
            let t2 = (a2 * wl[n - 1] - temp * sq[m]) / sq[n];
            temp = wl[n];
            wl[n] = t2;
            w += 2.0 * (rho[(m, n)] * wl[n]).re;
        }
    }
    w
}

/// Wigner function on a grid. Fails when an axis extends beyond
/// `|xi|^2 > d`, where the truncated space cannot hold the phase-space region.
pub fn wigner(rho: &DensityOp, spec: &GridSpec) -> Result<WignerGrid> {
    let d = rho.dim() as f64;
    let ext = spec.re_min.abs().max(spec.re_max.abs()).max(spec.im_min.abs()).max(spec.im_max.abs());
    if ext * ext > d {
        return Err(Error::InvalidParameter(format!("grid extent {ext} exceeds truncation d={d}")));
    }
    if spec.nx == 0 || spec.ny == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let row = |iy: usize| -> Vec<f64> {
        let mut work = Vec::new();
        let y = spec.y(iy);
        (0..spec.nx).map(|ix| wigner_point(&rho.mat, C64::new(spec.x(ix), y), &mut work)).collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..spec.ny).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..spec.ny).map(row).collect();
    Ok(WignerGrid { spec: *spec, values: rows.concat() })
}

/// Two-component superposition `w_< |a_<> + w_> e^{i theta} |a_>>` with
/// real amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfssFit {
    pub w_below: f64,
    pub w_above: f64,
    pub alpha_below: f64,
    pub alpha_above: f64,
    pub theta: f64,
    pub fidelity: f64,
}

impl MfssFit {
    pub fn state(&self, d: usize) -> Result<FockVector> {
        mfss_state(self.w_below, self.w_above, self.alpha_below, self.alpha_above, self.theta, d)
    }
}

pub fn mfss_state(wb: f64, wa: f64, ab: f64, aa: f64, theta: f64, d: usize) -> Result<FockVector> {
    let v = coherent_amplitudes(C64::from(ab), d) * C64::from(wb)
        + coherent_amplitudes(C64::from(aa), d) * C64::from_polar(wa, theta);
    FockVector::new(v)
}

/// Fit result with the fidelity reached after each refinement stage.
#[derive(Debug, Clone, PartialEq)]
pub struct MfssReport {
    pub fit: MfssFit,
    pub stages: Vec<f64>,
}

/// Best complex weights `x` for `max x^dag M x / x^dag G x`.
fn best_pair(m: &Matrix2<C64>, g: &Matrix2<C64>) -> Option<(f64, Vector2<C64>)> {
    let ch = g.cholesky()?;
    let l = ch.l();
    let li = l.try_inverse()?;
    let c = li * m * li.adjoint();
    let c = (c + c.adjoint()) * C64::from(0.5);
    let eig = c.symmetric_eigen();
    let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let y = eig.eigenvectors.column(k).into_owned();
    let x = li.adjoint() * y;
    Some((eig.eigenvalues[k], x))
}

fn pair_matrices(rho: &CMat, u: &CVec, v: &CVec, ru: &CVec, rv: &CVec) -> (Matrix2<C64>, Matrix2<C64>) {
    let m = Matrix2::new(u.dotc(ru), u.dotc(rv), v.dotc(ru), v.dotc(rv));
    let _ = rho;
    let g = Matrix2::new(u.dotc(u), u.dotc(v), v.dotc(u), v.dotc(v));
    (m, g)
}

fn weights_from(x: &Vector2<C64>) -> (f64, f64, f64) {
    let (wb, wa) = (x[0].norm(), x[1].norm());
    let n = (wb * wb + wa * wa).sqrt();
    let theta = if wb > 0.0 && wa > 0.0 { (x[1] / x[0]).arg().rem_euclid(2.0 * PI) } else { 0.0 };
    (wb / n, wa / n, theta)
}

fn mfss_fidelity(rho: &CMat, p: &[f64]) -> f64 {
    let d = rho.nrows();
    match mfss_state(p[0], p[1], p[2], p[3], p[4], d) {
        Ok(v) => v.amps.dotc(&(rho * &v.amps)).re,
        Err(_) => 0.0,
    }
}

/// Closed-form optimal weights and phase at fixed amplitudes.
fn polish(rho: &CMat, ab: f64, aa: f64) -> Option<MfssFit> {
    let d = rho.nrows();
    let u = coherent_amplitudes(C64::from(ab), d);
    let v = coherent_amplitudes(C64::from(aa), d);
    let (ru, rv) = (rho * &u, rho * &v);
    let (m, g) = pair_matrices(rho, &u, &v, &ru, &rv);
    let (f, x) = best_pair(&m, &g)?;
    let (wb, wa, theta) = weights_from(&x);
    Some(MfssFit { w_below: wb, w_above: wa, alpha_below: ab, alpha_above: aa, theta, fidelity: f })
}

/// Fits a two-component cat to `rho`: amplitude grid (0.25 spacing) with
/// exact weights and phase per grid point, Nelder-Mead over all five
/// parameters, then an exact weight polish.
pub fn mfss_fit(rho: &DensityOp, s: usize) -> Result<MfssReport> {
    let d = rho.dim();
    let r = &rho.mat;
    let sqs = (s as f64).sqrt();
    let below: Vec<f64> = (0..=12).map(|k| -1.5 + 0.25 * k as f64).collect();
    let n_above = ((sqs + 2.0) / 0.25).round() as usize;
    let above: Vec<f64> = (0..=n_above).map(|k| sqs + 0.25 * k as f64).collect();
    let vecs = |xs: &[f64]| -> Vec<(CVec, CVec)> {
        xs.iter()
            .map(|&a| {
                let v = coherent_amplitudes(C64::from(a), d);
                let rv = r * &v;
                (v, rv)
            })
            .collect()
    };
    let (vb, va) = (vecs(&below), vecs(&above));
    let mut best: Option<MfssFit> = None;
    for (i, (u, ru)) in vb.iter().enumerate() {
        for (j, (v, rv)) in va.iter().enumerate() {
            let (m, g) = pair_matrices(r, u, v, ru, rv);
            if let Some((f, x)) = best_pair(&m, &g) {
                if best.map(|b| f > b.fidelity).unwrap_or(true) {
                    let (wb, wa, theta) = weights_from(&x);
                    best = Some(MfssFit {
                        w_below: wb,
                        w_above: wa,
                        alpha_below: below[i],
                        alpha_above: above[j],
                        theta,
                        fidelity: f,
                    });
                }
            }
        }
    }
    let coarse = best.ok_or_else(|| Error::FitFailed("no admissible grid point".into()))?;
    let mut stages = vec![coarse.fidelity];
    let x0 = [coarse.w_below, coarse.w_above, coarse.alpha_below, coarse.alpha_above, coarse.theta];
    let (x, fneg) = nelder_mead(|p| -mfss_fidelity(r, p), &x0, &[0.05, 0.05, 0.1, 0.1, 0.2], 4000, 1e-12);
    let mut fit = coarse;
    if -fneg >= coarse.fidelity {
        let (wb, wa) = (x[0].abs(), x[1].abs());
        let n = (wb * wb + wa * wa).sqrt();
        let mut theta = x[4];
        if x[0] < 0.0 {
            theta += PI;
        }
        if x[1] < 0.0 {
            theta += PI;
        }
        fit = MfssFit {
            w_below: wb / n,
            w_above: wa / n,
            alpha_below: x[2],
            alpha_above: x[3],
            theta: theta.rem_euclid(2.0 * PI),
            fidelity: -fneg,
        };
    }
    stages.push(fit.fidelity);
    if let Some(p) = polish(r, fit.alpha_below, fit.alpha_above) {
        if p.fidelity >= fit.fidelity {
            fit = p;
        }
    }
    stages.push(fit.fidelity);
    Ok(MfssReport { fit, stages })
}

/// `T = w_>^2 / (w_<^2 + w_>^2)`.
pub fn transparency(fit: &MfssFit) -> Result<f64> {
    let den = fit.w_below * fit.w_below + fit.w_above * fit.w_above;
    if den == 0.0 {
        return Err(Error::InvalidParameter("both MFSS weights vanish".into()));
    }
    Ok(fit.w_above * fit.w_above / den)
}

/// `lambda_+- = sqrt(3 +- sqrt(6))`, the positive eigenvalues of `H_<4 / alpha`.
pub fn s4_eigenvalues() -> (f64, f64) {
    ((3.0 + 6f64.sqrt()).sqrt(), (3.0 - 6f64.sqrt()).sqrt())
}

/// Populations `p_0..p_3` at each `omega t` in `t_grid` for the vacuum
/// evolving under `H_<4`.
pub fn s4_closed_form(t_grid: &[f64], omega: f64) -> Vec<[f64; 4]> {
    let (lp, lm) = s4_eigenvalues();
    let terms: Vec<(f64, [f64; 4])> = [lp, lm]
        .iter()
        .map(|&l| {
            let l2 = l * l;
            let comps = [1.0, l, (l2 - 1.0) / 2f64.sqrt(), l * (l2 - 3.0) / 6f64.sqrt()];
            let n2: f64 = comps.iter().map(|c| c * c).sum();
            (l, comps.map(|c| 2.0 * c / n2))
        })
        .collect();
    t_grid
        .iter()
        .map(|&t| {
            let x = omega * t;
            let (mut c0, mut c1, mut c2, mut c3) = (0.0, 0.0, 0.0, 0.0);
            for (l, w) in &terms {
                let (s, c) = (l * x).sin_cos();
                c0 += w[0] * c;
                c1 += w[1] * s;
                c2 += w[2] * c;
                c3 += w[3] * s;
            }
            [c0 * c0, c1 * c1, c2 * c2, c3 * c3]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalOptions {
    /// Comparison window length in units of `omega t`.
    pub window: f64,
    /// Earliest admissible recurrence.
    pub t_min: f64,
    /// Relative RMS mismatch above which no recurrence is reported.
    pub max_mismatch: f64,
}

impl Default for RevivalOptions {
    fn default() -> Self {
        Self { window: 10.0, t_min: 20.0, max_mismatch: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Revival {
    pub time: f64,
    /// RMS mismatch relative to the signal's standard deviation.
    pub mismatch: f64,
}

/// Locates the best recurrence of the initial window of `samples`
/// (spacing `dt` in `omega t`), scoring each lag by RMS mismatch.
pub fn revival_detect(samples: &[f64], dt: f64, opts: &RevivalOptions) -> Result<Revival> {
    let nw = (opts.window / dt).round() as usize;
    let k0 = (opts.t_min / dt).ceil() as usize;
    if nw == 0 || samples.len() < k0 + nw + 1 {
        return Err(Error::NoRecurrence);
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    let refw = &samples[..nw];
    let mut best = (f64::INFINITY, 0usize);
    for k in k0..=samples.len() - nw {
        let rms = (samples[k..k + nw].iter().zip(refw).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / nw as f64).sqrt();
        if rms < best.0 - 1e-12 {
            best = (rms, k);
        }
    }
    let mismatch = if sd > 0.0 { best.0 / sd } else { f64::INFINITY };
    if !(mismatch <= opts.max_mismatch) {
        return Err(Error::NoRecurrence);
    }
    Ok(Revival { time: best.1 as f64 * dt, mismatch })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalVariant {
    /// `h = p` inside the circle of radius R, zero outside.
    Inside,
    /// `h = p` outside the circle, zero inside.
    Outside,
}

/// Phase-space path of the semi-classical particle: unit velocity along x
/// at fixed p, with an instantaneous jump across the circle's chord on contact.
pub fn classical_trajectory(
    x0: f64,
    p0: f64,
    r: f64,
    t_grid: &[f64],
    variant: ClassicalVariant,
) -> Result<Vec<(f64, f64)>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
    }
    if ((p0.abs() - r) / r).abs() < 1e-12 {
        return Err(Error::Degenerate(format!("tangential contact at p0={p0}")));
    }
    let r0 = (x0 * x0 + p0 * p0).sqrt();
    let c = if p0.abs() < r { (r * r - p0 * p0).sqrt() } else { 0.0 };
    match variant {
        ClassicalVariant::Inside => {
            if r0 > r + 1e-12 {
                return Err(Error::InvalidParameter("inside variant needs r0 <= R".into()));
            }
            let span = 2.0 * c;
            Ok(t_grid.iter().map(|&t| (-c + (x0 + c + t).rem_euclid(span), p0)).collect())
        }
        ClassicalVariant::Outside => {
            if r0 < r - 1e-12 {
                return Err(Error::InvalidParameter("outside variant needs r0 >= R".into()));
            }
            let hits = p0.abs() < r && x0 <= -c;
            Ok(t_grid
                .iter()
                .map(|&t| {
                    let x = x0 + t;
                    if hits && x >= -c {
                        (x + 2.0 * c, p0)
                    } else {
                        (x, p0)
                    }
                })
                .collect())
        }
    }
}

pub fn mean_photon(rho: &DensityOp) -> f64 {
    (0..rho.dim()).map(|n| n as f64 * rho.mat[(n, n)].re).sum()
}

pub fn purity(rho: &DensityOp) -> f64 {
    rho.mat.iter().map(|z| z.norm_sqr()).sum()
}

/// Mean field amplitude `Tr(rho a)`.
pub fn mean_amplitude(rho: &DensityOp) -> C64 {
    (1..rho.dim()).map(|n| rho.mat[(n, n - 1)] * (n as f64).sqrt()).sum()
}

/// Best coherent-state approximation: `(alpha, <alpha|rho|alpha>)`.
pub fn coherent_fit(rho: &DensityOp, guess: C64) -> (C64, f64) {
    let d = rho.dim();
    let f = |p: &[f64]| -> f64 {
        let v = coherent_state(C64::new(p[0], p[1]), d).expect("finite amplitude");
        -v.amps.dotc(&(&rho.mat * &v.amps)).re
    };
    let (x, fx) = nelder_mead(f, &[guess.re, guess.im], &[0.1, 0.1], 2000, 1e-14);
    (C64::new(x[0], x[1]), -fx)
}

/// Normalized `sum_j c_j |gamma_j>`.
pub fn superposition(coeffs: &[C64], gammas: &[C64], d: usize) -> Result<FockVector> {
    if coeffs.len() != gammas.len() || coeffs.is_empty() {
        return Err(Error::InvalidParameter("coefficient and amplitude lists differ".into()));
    }
    let mut v = CVec::zeros(d);
    for (c, g) in coeffs.iter().zip(gammas) {
        v += coherent_amplitudes(*g, d) * *c;
    }
    FockVector::new(v)
}

pub fn superposition_fidelity(rho: &DensityOp, coeffs: &[C64], gammas: &[C64]) -> Result<f64> {
    let v = superposition(coeffs, gammas, rho.dim())?;
    Ok(v.amps.dotc(&(&rho.mat * &v.amps)).re)
}

/// Fidelity to `sum_j |c_j| e^{i phi_j} |gamma_j>` maximized over the
/// relative phases (first phase fixed); returns `(phases, fidelity)`.
pub fn fit_relative_phases(rho: &DensityOp, weights: &[f64], gammas: &[C64]) -> Result<(Vec<f64>, f64)> {
    let m = gammas.len();
    if m != weights.len() || m == 0 {
        return Err(Error::InvalidParameter("weights and amplitudes differ".into()));
    }
    if m == 1 {
        return Ok((vec![0.0], superposition_fidelity(rho, &[C64::from(weights[0])], gammas)?));
    }
    let eval = |ph: &[f64]| -> f64 {
        let mut c = vec![C64::from(weights[0])];
        c.extend(ph.iter().zip(&weights[1..]).map(|(p, w)| C64::from_polar(*w, *p)));
        superposition_fidelity(rho, &c, gammas).unwrap_or(0.0)
    };
    let k = m - 1;
    let per: usize = if k <= 2 { 24 } else { 8 };
    let mut best = (vec![0.0; k], f64::NEG_INFINITY);
    let total = per.pow(k as u32);
    for idx in 0..total {
        let mut rem = idx;
        let ph: Vec<f64> = (0..k)
            .map(|_| {
                let j = rem % per;
                rem /= per;
                2.0 * PI * j as f64 / per as f64
            })
            .collect();
        let f = eval(&ph);
        if f > best.1 {
            best = (ph, f);
        }
    }
    let (x, fneg) = nelder_mead(|p| -eval(p), &best.0, &vec![0.2; k], 4000, 1e-13);
    let mut out = vec![0.0];
    out.extend(x.iter().map(|p| p.rem_euclid(2.0 * PI)));
    Ok((out, -fneg))
}

/// Fidelity to `sum_j c_j |gamma'_j>` maximized over the complex positions
/// `gamma'_j` starting from `gammas`; returns `(positions, fidelity)`.
pub fn reoptimize_positions(rho: &DensityOp, coeffs: &[C64], gammas: &[C64]) -> Result<(Vec<C64>, f64)> {
    let m = gammas.len();
    let unpack = |p: &[f64]| -> Vec<C64> { (0..m).map(|j| C64::new(p[2 * j], p[2 * j + 1])).collect() };
    let x0: Vec<f64> = gammas.iter().flat_map(|g| [g.re, g.im]).collect();
    let f0 = superposition_fidelity(rho, coeffs, gammas)?;
    let (x, fneg) = nelder_mead(
        |p| -superposition_fidelity(rho, coeffs, &unpack(p)).unwrap_or(0.0),
        &x0,
        &vec![0.1; 2 * m],
        20000,
        1e-13,
    );
    if -fneg >= f0 {
        Ok((unpack(&x), -fneg))
    } else {
        Ok((gammas.to_vec(), f0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{displacement, drive_hamiltonian, unitary_evolution};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn parity_wigner(rho: &CMat, alpha: C64) -> f64 {
        // embed in a larger space so the displaced state is not truncated
        let d = rho.nrows() + 60;
        let mut big = CMat::zeros(d, d);
        big.view_mut((0, 0), rho.shape()).copy_from(rho);
        let dm = displacement(-alpha, d).unwrap();
        let r = &dm * &big * dm.adjoint();
        2.0 / PI * (0..d).map(|n| if n % 2 == 0 { r[(n, n)].re } else { -r[(n, n)].re }).sum::<f64>()
    }

    fn random_state(seed: u64, d: usize, nmax: usize) -> DensityOp {
        let mut x = seed as f64 * 0.1234 + 0.5;
        let mut v = CVec::zeros(d);
        for n in 0..nmax {
            x = (x * 3.7 + 0.11).fract();
            v[n] = C64::new(x - 0.5, (x * 13.0).fract() - 0.5);
        }
        FockVector::new(v).unwrap().to_density()
    }

    #[test]
    fn wigner_known_values() {
        let d = 30;
        let mut work = Vec::new();
        let vac = FockVector::vacuum(d).unwrap().to_density();
        assert_abs_diff_eq!(wigner_point(&vac.mat, C64::from(0.0), &mut work), 2.0 / PI, epsilon = 1e-14);
        let w1 = wigner_point(&vac.mat, C64::new(0.3, 0.4), &mut work);
        assert_abs_diff_eq!(w1, 2.0 / PI * (-0.5f64).exp(), epsilon = 1e-14);
        let one = FockVector::number(1, d).unwrap().to_density();
        assert_abs_diff_eq!(wigner_point(&one.mat, C64::from(0.0), &mut work), -2.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn wigner_matches_displaced_parity() {
        let d = 40;
        let rho = random_state(3, d, 12);
        let mut work = Vec::new();
        for &(x, y) in &[(0.0, 0.0), (0.7, -0.2), (-1.3, 1.1), (2.0, 0.5), (0.1, -2.2)] {
            let a = C64::new(x, y);
            let w = wigner_point(&rho.mat, a, &mut work);
            assert!((w - parity_wigner(&rho.mat, a)).abs() < 1e-10, "{a}");
        }
    }

    #[test]
    fn wigner_normalization_and_guard() {
        let d = 60;
        let rho = coherent_state(C64::new(1.0, -0.5), d).unwrap().to_density();
        let g = wigner(&rho, &GridSpec::square(4.0, 121)).unwrap();
        assert_abs_diff_eq!(g.integral(), 1.0, epsilon = 1e-2);
        assert!(wigner(&rho, &GridSpec::square(9.0, 5)).is_err());
    }

    #[test]
    fn cat_fringes() {
        let d = 60;
        let cat = superposition(&[C64::from(1.0), C64::from(1.0)], &[C64::from(2.0), C64::from(-2.0)], d)
            .unwrap()
            .to_density();
        let mut work = Vec::new();
        // interference term at x=0 is e^{-2y^2} cos(8y), up to e^{-8} tails
        let w0 = wigner_point(&cat.mat, C64::new(0.0, 0.0), &mut work);
        let wq = wigner_point(&cat.mat, C64::new(0.0, PI / 8.0), &mut work);
        let wh = wigner_point(&cat.mat, C64::new(0.0, PI / 4.0), &mut work);
        let env = |y: f64| (2.0 / PI) * (-2.0 * y * y).exp();
        assert!((w0 - env(0.0)).abs() < 2e-3, "{w0}");
        assert!((wq + env(PI / 8.0)).abs() < 2e-3, "{wq}");
        assert!((wh - env(PI / 4.0)).abs() < 2e-3, "{wh}");
    }

    #[test]
    fn wigner_marginal() {
        let d = 60;
        let rho = random_state(9, d, 10);
        let n = 141;
        let spec = GridSpec::square(7.0, n);
        let g = wigner(&rho, &spec).unwrap();
        let dy = 14.0 / (n - 1) as f64;
        let s2 = 2f64.sqrt();
        for ix in (20..120).step_by(10) {
            let x = spec.x(ix);
            let marg: f64 = (0..n).map(|iy| g.at(ix, iy)).sum::<f64>() * dy;
            // Hermite functions of q = sqrt(2) x
            let q = s2 * x;
            let mut psi = vec![0.0; d];
            psi[0] = PI.powf(-0.25) * (-q * q / 2.0).exp();
            psi[1] = s2 * q * psi[0];
            for k in 2..d {
                psi[k] = (2.0 / k as f64).sqrt() * q * psi[k - 1] - ((k - 1) as f64 / k as f64).sqrt() * psi[k - 2];
            }
            let mut p = C64::from(0.0);
            for i in 0..d {
                for j in 0..d {
                    p += rho.mat[(i, j)] * psi[i] * psi[j];
                }
            }
            assert!((marg - s2 * p.re).abs() < 1e-3, "x={x}: {marg} vs {}", s2 * p.re);
        }
    }

    #[test]
    fn mfss_self_fit() {
        let d = 60;
        let st = mfss_state(0.6, 0.8, 0.3, 4.9, 3.0, d).unwrap();
        let rep = mfss_fit(&st.to_density(), 6).unwrap();
        let f = rep.fit;
        assert!(f.fidelity > 0.9999, "{f:?}");
        assert!((f.w_below - 0.6).abs() < 1e-3 && (f.w_above - 0.8).abs() < 1e-3);
        assert!((f.alpha_below - 0.3).abs() < 1e-3 && (f.alpha_above - 4.9).abs() < 1e-3);
        assert!((f.theta - 3.0).abs() < 1e-3);
        assert!(rep.stages.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mfss_degenerate_input() {
        let d = 60;
        let rep = mfss_fit(&FockVector::vacuum(d).unwrap().to_density(), 6).unwrap();
        assert!(rep.fit.w_above < 1e-3, "{:?}", rep.fit);
        assert!(transparency(&rep.fit).unwrap() < 1e-5);
    }

    #[test]
    fn transparency_values() {
        let mk = |wb, wa| MfssFit { w_below: wb, w_above: wa, alpha_below: 0.0, alpha_above: 5.0, theta: 0.0, fidelity: 1.0 };
        assert_abs_diff_eq!(transparency(&mk(0.5, 0.5)).unwrap(), 0.5);
        assert_eq!(transparency(&mk(1.0, 0.0)).unwrap(), 0.0);
        assert!(transparency(&mk(0.0, 0.0)).is_err());
    }

    #[test]
    fn s4_forms() {
        let p = s4_closed_form(&[0.0], 1.0);
        assert_abs_diff_eq!(p[0][0], 1.0, epsilon = 1e-14);
        let (lp, lm) = s4_eigenvalues();
        assert!((lp / lm - 22.0 / 7.0).abs() / (22.0 / 7.0) < 5e-3);
        let t = 22.0 * 2.0 * PI / lp;
        assert!((t - 59.2).abs() < 0.1);
        assert!(s4_closed_form(&[t], 1.0)[0][0] > 0.99);
        // against matrix evolution
        let h = drive_hamiltonian(C64::from(1.0), 4).unwrap();
        let ts: Vec<f64> = (0..=400).map(|k| k as f64 * 0.5).collect();
        let cf = s4_closed_form(&ts, 1.0);
        for (t, p) in ts.iter().zip(&cf) {
            let u = unitary_evolution(&h, *t).unwrap();
            for n in 0..4 {
                assert!((u[(n, 0)].norm_sqr() - p[n]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn revival_synthetic() {
        let dt = 0.01;
        let sig: Vec<f64> = (0..10000)
            .map(|k| {
                let t = k as f64 * dt;
                (2.0 * PI * t / 5.0).cos() + 0.5 * (2.0 * PI * t / 12.5).cos()
            })
            .collect();
        let r = revival_detect(&sig, dt, &RevivalOptions::default()).unwrap();
        assert!((r.time - 25.0).abs() < 1e-9, "{r:?}");
        let flat = vec![1.0; 5000];
        assert!(revival_detect(&flat, dt, &RevivalOptions::default()).is_err());
    }

    #[test]
    fn classical_paths() {
        let r = 6f64.sqrt();
        let ts: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let inside = classical_trajectory(-2.0, 0.0, r, &ts, ClassicalVariant::Inside).unwrap();
        // reaches +R then reappears at -R
        let jump = inside.windows(2).find(|w| w[1].0 < w[0].0).unwrap();
        assert!((jump[0].0 - r).abs() < 0.11 && (jump[1].0 + r).abs() < 0.11);
        assert!(inside.iter().all(|&(_, p)| p == 0.0));
        let outside = classical_trajectory(-4.0, 1.0, r, &ts, ClassicalVariant::Outside).unwrap();
        let c = (r * r - 1.0).sqrt();
        let j = outside.windows(2).find(|w| w[1].0 - w[0].0 > 1.0).unwrap();
        assert!((j[0].0 + c).abs() < 0.11 && (j[1].0 - c).abs() < 0.11);
        assert!(matches!(classical_trajectory(0.0, r, r, &ts, ClassicalVariant::Outside), Err(Error::Degenerate(_))));
    }

    #[test]
    fn photon_and_purity() {
        let d = 60;
        let a = C64::new(1.2, -0.7);
        let rho = coherent_state(a, d).unwrap().to_density();
        assert_abs_diff_eq!(mean_photon(&rho), a.norm_sqr(), epsilon = 1e-10);
        assert_abs_diff_eq!(purity(&rho), 1.0, epsilon = 1e-12);
        assert!((mean_amplitude(&rho) - a).norm() < 1e-10);
        let mixed = DensityOp { mat: CMat::identity(2, 2) * C64::from(0.5) };
        assert_abs_diff_eq!(purity(&mixed), 0.5);
        let (fa, f) = coherent_fit(&rho, C64::new(1.0, 0.0));
        assert!((fa - a).norm() < 1e-4 && f > 0.9999999);
    }

    #[test]
    fn phase_and_position_fits() {
        let d = 60;
        let g = [C64::new(-0.3, 0.0), C64::new(3.2, 0.0), C64::new(6.7, 0.0)];
        let c = [C64::from(1.0), C64::from_polar(1.0, 2.0), C64::from_polar(1.0, 4.0)];
        let rho = superposition(&c, &g, d).unwrap().to_density();
        let (ph, f) = fit_relative_phases(&rho, &[1.0, 1.0, 1.0], &g).unwrap();
        assert!(f > 0.99999 && (ph[1] - 2.0).abs() < 1e-3 && (ph[2] - 4.0).abs() < 1e-3, "{ph:?} {f}");
        let shifted = [g[0] + 0.1, g[1] - C64::new(0.0, 0.1), g[2]];
        let (pos, f2) = reoptimize_positions(&rho, &c, &shifted).unwrap();
        assert!(f2 > 0.9999 && (pos[1] - g[1]).norm() < 1e-2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn wigner_parity_oracle(seed in 0u64..10_000, x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let rho = random_state(seed, 30, 8);
            let mut work = Vec::new();
            let a = C64::new(x, y);
            prop_assert!((wigner_point(&rho.mat, a, &mut work) - parity_wigner(&rho.mat, a)).abs() < 1e-9);
        }
    }
}
