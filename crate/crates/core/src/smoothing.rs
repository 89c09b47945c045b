//! The smoothed objective `s_{λ,β}(x) = f(x) + (1/λ) Σ_i r_β(F_i(x))` and the
//! stage-one feasibility objective `Σ_i r_β(F_i(x))`.

use crate::envelope::{big_r_beta, r_beta, Beta, EnvelopeParams, Point2};
use crate::inner::SmoothObjective;
use crate::model::MpccProblem;

/// Read-only view of an [`MpccProblem`] under fixed envelope parameters.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedProblem<'a> {
    base: &'a MpccProblem,
    params: EnvelopeParams,
}

impl<'a> SmoothedProblem<'a> {
    pub fn new(base: &'a MpccProblem, params: EnvelopeParams) -> Self {
        Self { base, params }
    }

    pub fn base(&self) -> &'a MpccProblem {
        self.base
    }

    pub fn params(&self) -> EnvelopeParams {
        self.params
    }

    pub fn s_eval(&self, x: &[f64]) -> f64 {
        let beta = self.params.beta();
        let penalty: f64 = self.base.pair_values(x).into_iter().map(|z| r_beta(z, beta)).sum();
        self.base.objective(x) + penalty / self.params.lambda()
    }

    pub fn s_grad(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_grad(x).1
    }

    /// `y_i = R_β(F_i(x)) / λ` for every pair.
    pub fn multipliers(&self, x: &[f64]) -> Vec<Point2> {
        let beta = self.params.beta();
        let inv = 1.0 / self.params.lambda();
        self.base.pair_values(x).into_iter().map(|z| big_r_beta(z, beta).scale(inv)).collect()
    }
}

impl SmoothObjective for SmoothedProblem<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.s_eval(x)
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (penalty, mut grad) = penalty_and_grad(self.base, x, self.params.beta(), 1.0 / self.params.lambda());
        let f = self.base.objective(x);
        for (gi, fi) in grad.iter_mut().zip(self.base.gradient(x)) {
            *gi += fi;
        }
        (f + penalty, grad)
    }
}

/// `x ↦ Σ_i r_β(F_i(x))`, minimized over the box in stage one.
#[derive(Debug, Clone, Copy)]
pub struct FeasibilityObjective<'a> {
    base: &'a MpccProblem,
    beta: Beta,
}

impl<'a> FeasibilityObjective<'a> {
    pub fn new(base: &'a MpccProblem, beta: Beta) -> Self {
        Self { base, beta }
    }
}

impl SmoothObjective for FeasibilityObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.base.pair_values(x).into_iter().map(|z| r_beta(z, self.beta)).sum()
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        penalty_and_grad(self.base, x, self.beta, 1.0)
    }
}

/// `scale · Σ r_β(F_i(x))` and its gradient; each pair is evaluated once.
fn penalty_and_grad(base: &MpccProblem, x: &[f64], beta: Beta, scale: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; base.dim()];
    let mut total = 0.0;
    for cc in base.ccs() {
        let z = (cc.eval)(x);
        total += r_beta(z, beta);
        let r = big_r_beta(z, beta);
        if r != Point2::ORIGIN {
            (cc.jacobian)(x).add_tr_mul(r.scale(scale), &mut grad);
        }
    }
    (scale * total, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::kth3;
    use approx::assert_relative_eq;

    #[test]
    fn kth3_values() {
        let p = kth3();
        for (lambda, beta) in [(1.0, 0.5), (0.01, 0.999), (100.0, 0.9)] {
            let sp = SmoothedProblem::new(&p, EnvelopeParams::new(lambda, beta).unwrap());
            assert_relative_eq!(sp.s_eval(&[0.0, 1.0]), 0.5, max_relative = 1e-15);
        }
        let sp = SmoothedProblem::new(&p, EnvelopeParams::new(1.0, 0.5).unwrap());
        assert_relative_eq!(sp.s_eval(&[1.0, 1.0]), 2.0 / 3.0, max_relative = 1e-14);
        let g = sp.s_grad(&[1.0, 1.0]);
        assert_relative_eq!(g[0], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(g[1], 2.0 / 3.0, max_relative = 1e-14);
        let y = sp.multipliers(&[1.0, 1.0]);
        assert_relative_eq!(y[0].z1, 2.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn multiplier_scaling() {
        let p = kth3();
        let sp = SmoothedProblem::new(&p, EnvelopeParams::new(0.5, 0.5).unwrap());
        assert_eq!(sp.multipliers(&[3.0, -1.0]), vec![Point2::new(0.0, -4.0)]);
        assert_eq!(sp.multipliers(&[0.0, 2.0]), vec![Point2::new(0.0, 0.0)]);
    }

    #[test]
    fn feasible_gradient_is_objective_gradient() {
        let p = kth3();
        let sp = SmoothedProblem::new(&p, EnvelopeParams::new(0.1, 0.9).unwrap());
        let x = [0.0, 3.0];
        assert_eq!(sp.s_grad(&x), p.gradient(&x));
    }
}
