//! Projected gradient method on the nonconvex feasible set `[l₀,u₀] × Dᵖ` of a
//! bound-constrained quadratic MPCC. Every iterate is exactly feasible.

use crate::envelope::Point2;
use crate::error::{Error, Result};
use crate::inner::{InnerResult, InnerStatus, MAX_BACKTRACKS};
use crate::model::{dot, norm2, QuadraticForm, QuadraticMpcc};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmOptions {
    pub eta_max: f64,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for PgmOptions {
    fn default() -> Self {
        Self { eta_max: 1.0, gamma: 0.5, c: 1e-4, epsilon: 1e-8, max_iters: 100_000 }
    }
}

impl PgmOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_max > 0.0)
            || !(self.gamma > 0.0 && self.gamma < 1.0)
            || !(self.c > 0.0 && self.c < 1.0)
            || !(self.epsilon > 0.0)
            || self.max_iters == 0
        {
            return Err(Error::Parameter(format!("invalid PGM options {self:?}")));
        }
        Ok(())
    }
}

fn check_partition(x: &[f64], q: &QuadraticMpcc) -> Result<()> {
    q.validate()?;
    if q.linear_ineq.is_some() || q.linear_cc.is_some() {
        return Err(Error::Schema("the projected gradient baseline needs the bound-constrained form".into()));
    }
    if x.len() != q.dim() {
        return Err(Error::Schema(format!("point has length {}, expected {}", x.len(), q.dim())));
    }
    Ok(())
}

/// Clamp non-pair variables into the box and project each pair onto `D`
/// (intersected with the pair's own bounds, if any). Ties `x_j = x_k > 0`
/// resolve to `(x_j, 0)`.
pub fn project_box_times_d(x: &[f64], q: &QuadraticMpcc) -> Result<Vec<f64>> {
    check_partition(x, q)?;
    let mut out = x.to_vec();
    project_in_place(&mut out, q);
    Ok(out)
}

fn project_in_place(x: &mut [f64], q: &QuadraticMpcc) {
    let raw: Vec<Point2> = q.cc_pairs.iter().map(|&(j, k)| Point2::new(x[j], x[k])).collect();
    q.bounds.project_in_place(x);
    let (lo, hi) = (q.bounds.lower(), q.bounds.upper());
    for (&(j, k), &z) in q.cc_pairs.iter().zip(&raw) {
        let p = project_pair(z, (lo[j], hi[j]), (lo[k], hi[k]));
        x[j] = p.z1;
        x[k] = p.z2;
    }
}

/// Projection onto `({[0,∞)∩[a,b]} × {0}) ∪ ({0} × {[0,∞)∩[c,d]})`.
fn project_pair(z: Point2, (a, b): (f64, f64), (c, d): (f64, f64)) -> Point2 {
    let first = Point2::new(z.z1.clamp(a.max(0.0), b.max(0.0)), 0.0);
    let second = Point2::new(0.0, z.z2.clamp(c.max(0.0), d.max(0.0)));
    if z.sub(first).norm_sq() <= z.sub(second).norm_sq() {
        first
    } else {
        second
    }
}

/// Projected gradient with Armijo backtracking: from `η = η_max`, shrink
/// `η ← γη` until `f(x_t) ≤ f(x) - c⟨∇f(x), x - x_t⟩`, then stop once
/// `‖x_{ν+1} - x_ν‖/η ≤ ε`. The reported residual is that last quantity.
pub fn pgm_solve(q: &QuadraticMpcc, x0: &[f64], opts: &PgmOptions) -> Result<InnerResult> {
    check_partition(x0, q)?;
    opts.validate()?;
    let form = QuadraticForm::new(q);
    let mut x = x0.to_vec();
    project_in_place(&mut x, q);
    let (mut f, mut g) = form.value_and_gradient(&x);
    let mut iters = 0;

    loop {
        let mut eta = opts.eta_max;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
            project_in_place(&mut trial, q);
            let decrease: f64 = x.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            let f_trial = form.value(&trial);
            if f_trial <= f - opts.c * decrease {
                accepted = Some((trial, f_trial));
                break;
            }
            eta *= opts.gamma;
        }
        let Some((x_new, f_new)) = accepted else {
            return Ok(InnerResult { x, value: f, residual: f64::INFINITY, iters, status: InnerStatus::LineSearchStall });
        };
        let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| (a - b) / eta).collect();
        let measure = norm2(&step);
        if measure <= opts.epsilon {
            return Ok(InnerResult { x: x_new, value: f_new, residual: measure, iters, status: InnerStatus::Converged });
        }
        iters += 1;
        if iters >= opts.max_iters {
            return Ok(InnerResult { x: x_new, value: f_new, residual: measure, iters, status: InnerStatus::MaxIters });
        }
        x = x_new;
        f = f_new;
        g = form.gradient(&x);
        debug_assert!(dot(&g, &g).is_finite());
    }
}
