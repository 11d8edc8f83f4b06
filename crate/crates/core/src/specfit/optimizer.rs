//! Derivative-free simplex and damped Gauss–Newton (Levenberg–Marquardt)
//! minimisers for small, unconstrained least-squares problems.

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::Float;

use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule<T> {
    pub max_iterations: usize,
    /// Relative change of the objective below which iteration stops.
    pub tolerance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

fn rel_change<T: Real>(old: T, new: T) -> T {
    let scale = Float::max(Float::abs(old), T::min_positive_value());
    Float::abs(old - new) / scale
}

/// Nelder–Mead with standard coefficients. `f` may return +∞ to reject a point.
pub fn nelder_mead<T: Real, F: Fn(&[T]) -> T>(f: F, x0: &[T], steps: &[T], rule: StopRule<T>) -> Outcome<T> {
    let n = x0.len();
    let half = T::lit(0.5);
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for j in 0..n {
        let mut x = x0.to_vec();
        x[j] = x[j] + steps[j];
        let v = f(&x);
        simplex.push((x, v));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < rule.max_iterations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best == T::zero() || (worst.is_finite() && rel_change(best, worst) < rule.tolerance) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for j in 0..n {
                centroid[j] = centroid[j] + x[j] / T::usize(n);
            }
        }
        let along = |t: T| -> Vec<T> { (0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect() };
        let xr = along(-T::one());
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-T::lit(2.0));
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-half);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(half);
                let v = f(&x);
                (x, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        x[j] = x_best[j] + half * (x[j] - x_best[j]);
                    }
                    *v = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, value) = simplex.swap_remove(0);
    Outcome { x, value, iterations, converged }
}

fn sum_sq<T: Real>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |a, &v| a + v * v)
}

/// Levenberg–Marquardt on residuals `r(x)` with a central-difference Jacobian.
/// `r` returns `None` where the model cannot be evaluated.
pub fn levenberg_marquardt<T, R>(r: R, x0: &[T], rule: StopRule<T>) -> Outcome<T>
where
    T: Real + RealField,
    R: Fn(&[T]) -> Option<Vec<T>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let Some(mut res) = r(&x) else {
        return Outcome { x, value: T::infinity(), iterations: 0, converged: false };
    };
    let m = res.len();
    let mut cost = sum_sq(&res);
    let mut lambda = T::lit(1e-3);
    let mut iterations = 0;
    let mut converged = cost == T::zero();
    let h_rel = T::lit(6e-6);
    while !converged && iterations < rule.max_iterations {
        iterations += 1;
        let mut jac = DMatrix::<T>::zeros(m, n);
        let mut jac_ok = true;
        for j in 0..n {
            let h = h_rel * (T::one() + Float::abs(x[j]));
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            match (r(&xp), r(&xm)) {
                (Some(rp), Some(rm)) => {
                    for k in 0..m {
                        jac[(k, j)] = (rp[k] - rm[k]) / (h + h);
                    }
                }
                _ => jac_ok = false,
            }
        }
        if !jac_ok {
            break;
        }
        let rv = DVector::from_column_slice(&res);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &rv;
        let mut improved = false;
        while lambda < T::lit(1e16) {
            let mut a = jtj.clone();
            for j in 0..n {
                let d = Float::max(jtj[(j, j)], T::lit(1e-30));
                a[(j, j)] += lambda * d;
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= T::lit(4.0);
                continue;
            };
            let trial: Vec<T> = (0..n).map(|j| x[j] + step[j]).collect();
            if let Some(rt) = r(&trial) {
                let c = sum_sq(&rt);
                if c < cost {
                    let change = rel_change(cost, c);
                    x = trial;
                    res = rt;
                    cost = c;
                    lambda = Float::max(lambda / T::lit(3.0), T::lit(1e-12));
                    improved = true;
                    if change < rule.tolerance || cost == T::zero() {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= T::lit(2.0);
        }
        if !improved {
            // no descent direction left at any damping: a stationary point
            converged = true;
        }
    }
    Outcome { x, value: cost, iterations, converged }
}
