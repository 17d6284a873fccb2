//! Truncated Fock space: states, ladder operators, displacements, coherent
//! states and matrix exponentials.

use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
/// Dense operator on the field (or joint) space.
pub type FieldOperator = CMat;

/// Population of the top Fock state above which a truncation warning is raised.
pub const TRUNCATION_GUARD: f64 = 1e-6;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pure field state over |0>..|d-1>.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amps: CVec,
}

impl FockVector {
    /// Normalizes `amps`; fails on an empty or zero vector.
    pub fn new(amps: CVec) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidDimension("empty state".into()));
        }
        let n = amps.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::NonFinite("FockVector::new"));
        }
        Ok(Self { amps: amps / C64::from(n) })
    }

    pub fn number(n: usize, d: usize) -> Result<Self> {
        check_dim(d, 1)?;
        if n >= d {
            return Err(Error::InvalidDimension(format!("|{n}> outside d={d}")));
        }
        let mut amps = CVec::zeros(d);
        amps[n] = ONE;
        Ok(Self { amps })
    }

    pub fn vacuum(d: usize) -> Result<Self> {
        Self::number(0, d)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn top_population(&self) -> f64 {
        self.amps[self.dim() - 1].norm_sqr()
    }

    pub fn to_density(&self) -> DensityOp {
        DensityOp { mat: &self.amps * self.amps.adjoint() }
    }

    pub fn overlap(&self, other: &FockVector) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }
}

/// Field density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    pub mat: CMat,
}

impl DensityOp {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "{}x{} density matrix",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.mat + self.mat.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace and positive within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol && (self.trace() - 1.0).abs() < tol && self.min_eigenvalue() > -tol
    }

    pub fn expect(&self, op: &CMat) -> Result<C64> {
        same_dim(self.dim(), op.nrows())?;
        Ok((&self.mat * op).trace())
    }
}

fn check_dim(d: usize, min: usize) -> Result<()> {
    if d < min {
        Err(Error::InvalidDimension(format!("d={d}, need d>={min}")))
    } else {
        Ok(())
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Annihilation operator, `a[n-1,n] = sqrt(n)`.
pub fn annihilation(d: usize) -> CMat {
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    a
}

/// `(a, a_dag, n)`.
pub fn ladder_ops(d: usize) -> Result<(CMat, CMat, CMat)> {
    check_dim(d, 1)?;
    let a = annihilation(d);
    let ad = a.adjoint();
    let n = &ad * &a;
    Ok((a, ad, n))
}

/// `H = alpha a_dag + conj(alpha) a`.
pub fn drive_hamiltonian(alpha: C64, d: usize) -> Result<CMat> {
    check_dim(d, 2)?;
    let mut h = CMat::zeros(d, d);
    for n in 1..d {
        let r = (n as f64).sqrt();
        h[(n, n - 1)] = alpha * r;
        h[(n - 1, n)] = alpha.conj() * r;
    }
    Ok(h)
}

fn check_finite(m: &CMat, what: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General matrix exponential by Pade(13) scaling and squaring.
pub fn expm(m: &CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimension("expm of non-square matrix".into()));
    }
    check_finite(m, "expm")?;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = m.nrows();
    let nrm = norm1(m);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m * C64::from(0.5f64.powi(s));
    let id = CMat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| C64::from(B[k]);
    let u_in = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9)) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1);
    let u = &a * u_in;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidParameter("singular Pade denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    check_finite(&r, "expm result")?;
    Ok(r)
}

/// `exp(M t)`.
pub fn matrix_exponential(m: &CMat, t: f64) -> Result<CMat> {
    expm(&(m * C64::from(t)))
}

/// `exp(-i H t)` for Hermitian `H`, through its eigendecomposition.
pub fn unitary_evolution(h: &CMat, t: f64) -> Result<CMat> {
    if h.nrows() != h.ncols() {
        return Err(Error::InvalidDimension("non-square generator".into()));
    }
    check_finite(h, "unitary_evolution")?;
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut vd = v.adjoint();
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let ph = C64::from_polar(1.0, -lam * t);
        for z in vd.row_mut(k).iter_mut() {
            *z *= ph;
        }
    }
    Ok(v * vd)
}

/// `D(xi) = exp(xi a_dag - conj(xi) a)` on the truncated space.
pub fn displacement(xi: C64, d: usize) -> Result<CMat> {
    check_dim(d, 1)?;
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return Err(Error::NonFinite("displacement"));
    }
    if d == 1 || xi == ZERO {
        return Ok(CMat::identity(d, d));
    }
    // exp(G) = exp(-i H) with H = i G Hermitian
    let h = drive_hamiltonian(xi * I, d)?;
    let dm = unitary_evolution(&h, 1.0)?;
    let top = dm[(d - 1, 0)].norm_sqr();
    if top > TRUNCATION_GUARD {
        log::warn!("displacement {xi}: top Fock population {top:.2e} at d={d}");
    }
    Ok(dm)
}

/// True when `D(xi)|0>` puts more than the guard population in the top state.
pub fn displacement_truncated(xi: C64, d: usize) -> Result<bool> {
    Ok(displacement(xi, d)?[(d - 1, 0)].norm_sqr() > TRUNCATION_GUARD)
}

/// Unnormalized analytic coherent amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)`.
pub fn coherent_amplitudes(alpha: C64, d: usize) -> CVec {
    let mut v = CVec::zeros(d);
    if d == 0 {
        return v;
    }
    v[0] = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for n in 1..d {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    v
}

/// Coherent state renormalized on the truncated space.
pub fn coherent_state(alpha: C64, d: usize) -> Result<FockVector> {
    check_dim(d, 1)?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("coherent_state"));
    }
    let st = FockVector::new(coherent_amplitudes(alpha, d))?;
    if st.top_population() > TRUNCATION_GUARD {
        log::warn!("coherent state {alpha}: top Fock population {:.2e} at d={d}", st.top_population());
    }
    Ok(st)
}

/// `Tr(rho sigma)`, clamped to [0, 1].
pub fn fidelity(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    let t: C64 = rho.mat.iter().zip(sigma.mat.transpose().iter()).map(|(a, b)| a * b).sum();
    Ok(t.re.clamp(0.0, 1.0))
}

/// `<psi|rho|psi>`.
pub fn fidelity_pure(rho: &DensityOp, psi: &FockVector) -> Result<f64> {
    same_dim(rho.dim(), psi.dim())?;
    Ok(psi.amps.dotc(&(&rho.mat * &psi.amps)).re.clamp(0.0, 1.0))
}

/// `max |U^dag U - 1|`.
pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ladder_small() {
        let (a, ad, n) = ladder_ops(2).unwrap();
        assert_eq!(a[(0, 1)], ONE);
        assert_eq!(a[(1, 0)], ZERO);
        assert_eq!(ad[(1, 0)], ONE);
        assert_eq!(n[(1, 1)], ONE);
        let (a1, _, _) = ladder_ops(1).unwrap();
        assert_eq!(a1[(0, 0)], ZERO);
        let (_, _, n4) = ladder_ops(4).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(n4[(k, k)].re, k as f64, epsilon = 1e-14);
        }
        assert!(ladder_ops(0).is_err());
    }

    #[test]
    fn drive_matrix() {
        let h = drive_hamiltonian(ONE, 3).unwrap();
        let s2 = 2f64.sqrt();
        let want = [[0.0, 1.0, 0.0], [1.0, 0.0, s2], [0.0, s2, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(h[(i, j)].re, want[i][j], epsilon = 1e-14);
            }
        }
        assert_eq!(max_abs(&drive_hamiltonian(ZERO, 4).unwrap()), 0.0);
        let hi = drive_hamiltonian(I, 2).unwrap();
        assert_eq!(hi[(0, 1)], c(0.0, -1.0));
        assert_eq!(hi[(1, 0)], c(0.0, 1.0));
        assert!(drive_hamiltonian(ONE, 1).is_err());
    }

    #[test]
    fn displacement_oracles() {
        let id = displacement(ZERO, 10).unwrap();
        assert_eq!(max_abs(&(id - CMat::identity(10, 10))), 0.0);
        let beta = c(0.5, 0.0);
        let d = displacement(beta, 60).unwrap();
        let exact = coherent_amplitudes(beta, 60);
        let dev = (0..60).map(|n| (d[(n, 0)] - exact[n]).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev}");
        let p = displacement(ONE, 60).unwrap() * displacement(-ONE, 60).unwrap();
        assert!(max_abs(&(p - CMat::identity(60, 60))) < 1e-8);
        assert!(displacement_truncated(c(6.0, 0.0), 30).unwrap());
        assert!(!displacement_truncated(c(1.0, 0.0), 30).unwrap());
    }

    #[test]
    fn coherent_oracles() {
        let v = coherent_state(ZERO, 5).unwrap();
        assert_eq!(v.amps[0], ONE);
        let (_, _, n) = ladder_ops(60).unwrap();
        let s = coherent_state(c(2.0, 0.0), 60).unwrap();
        assert_abs_diff_eq!(s.to_density().expect(&n).unwrap().re, 4.0, epsilon = 1e-8);
        let a = coherent_state(ONE, 60).unwrap();
        let b = coherent_state(c(1.0, 1.0), 60).unwrap();
        assert_abs_diff_eq!(a.overlap(&b).unwrap().norm_sqr(), (-1.0f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn fidelity_oracles() {
        let v = FockVector::number(0, 4).unwrap().to_density();
        let w = FockVector::number(1, 4).unwrap().to_density();
        assert_abs_diff_eq!(fidelity(&v, &v).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(fidelity(&v, &w).unwrap(), 0.0);
        let a = coherent_state(c(0.3, 0.0), 60).unwrap();
        let b = coherent_state(c(0.3, 0.4), 60).unwrap();
        let f = fidelity(&a.to_density(), &b.to_density()).unwrap();
        assert_abs_diff_eq!(f, (-0.16f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(fidelity_pure(&a.to_density(), &b).unwrap(), f, epsilon = 1e-12);
        assert!(fidelity(&v, &FockVector::vacuum(3).unwrap().to_density()).is_err());
    }

    #[test]
    fn expm_oracles() {
        let z = expm(&CMat::zeros(4, 4)).unwrap();
        assert!(max_abs(&(z - CMat::identity(4, 4))) < 1e-15);
        let th = [0.3, -1.2, 2.5];
        let m = CMat::from_diagonal(&CVec::from_iterator(3, th.iter().map(|&t| c(0.0, t))));
        let e = expm(&m).unwrap();
        for k in 0..3 {
            assert!((e[(k, k)] - C64::from_polar(1.0, th[k])).norm() < 1e-13);
        }
        // large-norm case exercises squaring
        let h = drive_hamiltonian(c(1.3, 0.4), 30).unwrap();
        let u1 = matrix_exponential(&(h.clone() * c(0.0, -1.0)), 7.0).unwrap();
        let u2 = unitary_evolution(&h, 7.0).unwrap();
        assert!(max_abs(&(u1 - u2)) < 1e-9);
        let bad = CMat::from_element(2, 2, c(f64::NAN, 0.0));
        assert!(expm(&bad).is_err());
    }

    #[test]
    fn drive_evolution_is_coherent() {
        // exp(-iHt)|0> = |-i alpha t>
        let alpha = c(0.25, 0.0);
        let t = 2.0;
        let u = unitary_evolution(&drive_hamiltonian(alpha, 60).unwrap(), t).unwrap();
        let want = coherent_state(-I * alpha * t, 60).unwrap();
        let dev = (0..60).map(|n| (u[(n, 0)] - want.amps[n]).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10);
    }

    fn hermitian(vals: &[f64], d: usize) -> CMat {
        let mut h = CMat::zeros(d, d);
        let mut it = vals.iter().cycle();
        for i in 0..d {
            h[(i, i)] = C64::from(*it.next().unwrap());
            for j in 0..i {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        h
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hermitian_evolution_is_unitary(vals in prop::collection::vec(-2.0f64..2.0, 64), t in -5.0f64..5.0) {
            let h = hermitian(&vals, 20);
            let u = unitary_evolution(&h, t).unwrap();
            prop_assert!(unitarity_error(&u) < 1e-9);
            let up = matrix_exponential(&(h * c(0.0, -1.0)), t).unwrap();
            prop_assert!(unitarity_error(&up) < 1e-9);
        }

        #[test]
        fn coherent_matches_displaced_vacuum(re in -2.5f64..2.5, im in -2.5f64..2.5) {
            let a = c(re, im);
            let d = 60;
            let s = coherent_state(a, d).unwrap();
            let dm = displacement(a, d).unwrap();
            let dev = (0..d).map(|n| (dm[(n, 0)] - s.amps[n]).norm()).fold(0.0, f64::max);
            prop_assert!(dev < 1e-9);
            prop_assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }
}
