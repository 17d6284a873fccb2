//! Thin wrappers over argmin's derivative-free minimizers.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::brent::BrentOpt;
use argmin::solver::neldermead::NelderMead;

struct Scalar<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Scalar<F> {
    type Param = f64;
    type Output = f64;
    fn cost(&self, p: &f64) -> Result<f64, ArgminError> {
        Ok((self.0)(*p))
    }
}

struct Multi<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Multi<F> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> Result<f64, ArgminError> {
        Ok((self.0)(p))
    }
}

/// Minimum of `f` on `[a, b]`; returns `(x, f(x))`.
pub fn brent_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> (f64, f64) {
    let fallback = {
        let m = 0.5 * (a + b);
        (m, f(m))
    };
    let res = Executor::new(Scalar(&f), BrentOpt::new(a, b).set_tolerance(1e-12, 1e-14))
        .configure(|s| s.max_iters(200))
        .timer(false)
        .run();
    match res {
        Ok(r) => match r.state().get_best_param() {
            Some(&x) => (x, f(x)),
            None => fallback,
        },
        Err(_) => fallback,
    }
}

/// Nelder-Mead from `x0` with an axis-aligned initial simplex of size `step`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], max_iters: u64, tol: f64) -> (Vec<f64>, f64) {
    let mut simplex = vec![x0.to_vec()];
    for (k, h) in step.iter().enumerate() {
        let mut v = x0.to_vec();
        v[k] += h;
        simplex.push(v);
    }
    let f0 = f(x0);
    let solver = match NelderMead::new(simplex).with_sd_tolerance(tol) {
        Ok(s) => s,
        Err(_) => return (x0.to_vec(), f0),
    };
    let res = Executor::new(Multi(&f), solver)
        .configure(|s| s.max_iters(max_iters))
        .timer(false)
        .run();
    match res {
        Ok(r) => {
            let st = r.state();
            match st.get_best_param() {
                Some(x) if st.get_best_cost() <= f0 => (x.clone(), st.get_best_cost()),
                _ => (x0.to_vec(), f0),
            }
        }
        Err(_) => (x0.to_vec(), f0),
    }
}
