//! Projected gradient solver over a box with Armijo backtracking along the
//! projection arc and Barzilai–Borwein trial steps.

use crate::error::{Error, Result};
use crate::model::{dot, BoxSet};

/// A continuously differentiable function of `x ∈ ℝⁿ`.
pub trait SmoothObjective {
    fn value(&self, x: &[f64]) -> f64;
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>);
}

impl<F, G> SmoothObjective for (F, G)
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        ((self.0)(x), (self.1)(x))
    }
}

/// Initial trial step of each line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepInit {
    BarzilaiBorwein,
    Fixed(f64),
}

pub const MIN_STEP: f64 = 1e-12;
pub const MAX_STEP: f64 = 1e12;
/// Consecutive step reductions before the line search gives up.
pub const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub step_init: StepInit,
    /// Convergence additionally requires the objective to be at most this value.
    pub target_value: Option<f64>,
    /// Report convergence as soon as the objective drops to this value.
    pub value_stop: Option<f64>,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 50_000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            step_init: StepInit::BarzilaiBorwein,
            target_value: None,
            value_stop: None,
        }
    }
}

impl InnerOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Parameter(what.to_string()));
        if !(self.tol > 0.0) {
            return bad("inner tolerance must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo constant must lie in (0,1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtracking factor must lie in (0,1)");
        }
        if let StepInit::Fixed(t) = self.step_init {
            if !(t > 0.0 && t.is_finite()) {
                return bad("fixed step must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnerStatus {
    Converged,
    MaxIters,
    LineSearchStall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Stationarity residual at `x`.
    pub residual: f64,
    pub iters: usize,
    pub status: InnerStatus,
}

/// `dist(-g, N_C(x))` for the box `C`: the Euclidean norm of the
/// componentwise distances. Bounds are detected by exact equality.
pub fn stationarity_residual(g: &[f64], x: &[f64], bounds: &BoxSet) -> Result<f64> {
    if g.len() != x.len() || x.len() != bounds.dim() {
        return Err(Error::Schema(format!(
            "length mismatch: gradient {}, point {}, box {}",
            g.len(),
            x.len(),
            bounds.dim()
        )));
    }
    if !bounds.contains(x) {
        return Err(Error::Domain("point lies outside the box".into()));
    }
    Ok(residual_unchecked(g, x, bounds))
}

pub(crate) fn residual_unchecked(g: &[f64], x: &[f64], bounds: &BoxSet) -> f64 {
    let (lo, hi) = (bounds.lower(), bounds.upper());
    let mut acc = 0.0;
    for j in 0..x.len() {
        let at_lo = x[j] == lo[j];
        let at_hi = x[j] == hi[j];
        let d = match (at_lo, at_hi) {
            (true, true) => 0.0,
            (true, false) => (-g[j]).max(0.0),
            (false, true) => g[j].max(0.0),
            (false, false) => g[j].abs(),
        };
        acc += d * d;
    }
    acc.sqrt()
}

/// Minimize `obj` over `bounds` from `x0` (clamped into the box first).
///
/// Each iteration tries `P(x - t∇f(x))`, shrinking `t` by the backtracking
/// factor until `f(x_t) ≤ f(x) - c⟨∇f(x), x - x_t⟩`. When `f(x_t) - f(x)`
/// is at rounding level, the trapezoidal estimate `½⟨∇f(x) + ∇f(x_t), x_t - x⟩`
/// stands in for the difference in the Armijo test. Accepted iterates never
/// increase the computed objective by more than [`rounding_level`].
pub fn solve_inner<O: SmoothObjective + ?Sized>(
    obj: &O,
    bounds: &BoxSet,
    x0: &[f64],
    opts: &InnerOptions,
) -> InnerResult {
    let mut x = bounds.project(x0);
    let (mut f, mut g) = obj.value_and_grad(&x);
    let mut residual = residual_unchecked(&g, &x, bounds);
    let mut step = match opts.step_init {
        StepInit::Fixed(t) => t,
        StepInit::BarzilaiBorwein => 1.0 / norm(&g).max(1.0),
    };
    let mut iters = 0;
    let finish = |x: Vec<f64>, value, residual, iters, status| InnerResult { x, value, residual, iters, status };

    loop {
        let target_met = opts.target_value.is_none_or(|t| f <= t + rounding_level(t));
        let low_enough = opts.value_stop.is_some_and(|v| f <= v);
        if (residual <= opts.tol && target_met) || low_enough {
            return finish(x, f, residual, iters, InnerStatus::Converged);
        }
        if iters >= opts.max_iters {
            return finish(x, f, residual, iters, InnerStatus::MaxIters);
        }

        let mut t = step;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            bounds.project_in_place(&mut trial);
            if trial == x {
                // step below the resolution of x
                break;
            }
            let decrease: f64 = x.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            let f_trial = obj.value(&trial);
            if f_trial <= f - opts.armijo_c * decrease {
                let (f_new, g_new) = obj.value_and_grad(&trial);
                accepted = Some((trial, f_new, g_new, t));
                break;
            }
            if (f_trial - f).abs() <= rounding_level(f) {
                // the difference is lost in rounding; estimate it from both gradients
                let (f_new, g_new) = obj.value_and_grad(&trial);
                let change: f64 =
                    x.iter().zip(&trial).zip(g.iter().zip(&g_new)).map(|((a, b), (g0, g1))| 0.5 * (g0 + g1) * (b - a)).sum();
                if change <= -opts.armijo_c * decrease {
                    accepted = Some((trial, f_new, g_new, t));
                    break;
                }
            }
            t *= opts.backtrack_factor;
        }
        let Some((x_new, f_new, g_new, t_used)) = accepted else {
            return finish(x, f, residual, iters, InnerStatus::LineSearchStall);
        };

        iters += 1;

        step = match opts.step_init {
            StepInit::Fixed(t0) => t0,
            StepInit::BarzilaiBorwein => {
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                let ss = dot(&s, &s);
                let raw = if sy > 0.0 {
                    ss / sy
                } else {
                    let ny = norm(&y);
                    if ny > 0.0 { ss.sqrt() / ny } else { 2.0 * t_used }
                };
                raw.clamp(MIN_STEP, MAX_STEP)
            }
        };

        x = x_new;
        f = f_new;
        g = g_new;
        residual = residual_unchecked(&g, &x, bounds);
    }
}

/// Differences of objective values below this are indistinguishable from rounding.
pub fn rounding_level(f: f64) -> f64 {
    64.0 * f64::EPSILON * f.abs().max(1.0)
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half_norm_sq() -> (impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> Vec<f64>) {
        (|x: &[f64]| 0.5 * dot(x, x), |x: &[f64]| x.to_vec())
    }

    #[test]
    fn residual_examples() {
        let b = BoxSet::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(stationarity_residual(&[-3.0, 2.0], &[0.0, 0.5], &b).unwrap(), 13f64.sqrt());
        assert_eq!(stationarity_residual(&[3.0, 4.0], &[7.0, -1.0], &BoxSet::unbounded(2)).unwrap(), 5.0);
        let b1 = BoxSet::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(stationarity_residual(&[5.0], &[1.0], &b1).unwrap(), 5.0);
        assert_eq!(stationarity_residual(&[-5.0], &[1.0], &b1).unwrap(), 0.0);
        let fixed = BoxSet::new(vec![2.0], vec![2.0]).unwrap();
        assert_eq!(stationarity_residual(&[9.0], &[2.0], &fixed).unwrap(), 0.0);
        assert!(matches!(stationarity_residual(&[1.0], &[2.0], &b1), Err(Error::Domain(_))));
    }

    #[test]
    fn unconstrained_quadratic() {
        let obj = half_norm_sq();
        let opts = InnerOptions { tol: 1e-10, ..Default::default() };
        let res = solve_inner(&obj, &BoxSet::unbounded(2), &[3.0, -4.0], &opts);
        assert_eq!(res.status, InnerStatus::Converged);
        assert!(res.residual <= 1e-10);
        assert!(res.x.iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn active_lower_bound() {
        let obj = (|x: &[f64]| x[0], |_: &[f64]| vec![1.0]);
        let b = BoxSet::new(vec![0.0], vec![1.0]).unwrap();
        let res = solve_inner(&obj, &b, &[0.7], &InnerOptions::default());
        assert_eq!(res.status, InnerStatus::Converged);
        assert_eq!(res.x, vec![0.0]);
        assert_eq!(res.residual, 0.0);
    }

    #[test]
    fn start_is_clamped() {
        let obj = half_norm_sq();
        let b = BoxSet::new(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
        let res = solve_inner(&obj, &b, &[5.0, -5.0], &InnerOptions::default());
        assert_eq!(res.status, InnerStatus::Converged);
        assert_eq!(res.x, vec![1.0, 1.0]);
    }

    #[test]
    fn max_iters_reported() {
        // Rosenbrock with a fixed tiny step cannot converge in 5 iterations
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let opts = InnerOptions { max_iters: 5, step_init: StepInit::Fixed(1e-4), ..Default::default() };
        let res = solve_inner(&(f, g), &BoxSet::unbounded(2), &[-1.2, 1.0], &opts);
        assert_eq!(res.status, InnerStatus::MaxIters);
        assert_eq!(res.iters, 5);
    }

    #[test]
    fn unreachable_target_does_not_converge() {
        let obj = half_norm_sq();
        let opts = InnerOptions { target_value: Some(-1.0), max_iters: 100, ..Default::default() };
        let res = solve_inner(&obj, &BoxSet::unbounded(1), &[1.0], &opts);
        assert_ne!(res.status, InnerStatus::Converged);
    }

    #[test]
    fn option_validation() {
        assert!(InnerOptions::default().validate().is_ok());
        assert!(InnerOptions { armijo_c: 1.0, ..Default::default() }.validate().is_err());
        assert!(InnerOptions { backtrack_factor: 0.0, ..Default::default() }.validate().is_err());
        assert!(InnerOptions { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(InnerOptions { step_init: StepInit::Fixed(-1.0), ..Default::default() }.validate().is_err());
    }
}
