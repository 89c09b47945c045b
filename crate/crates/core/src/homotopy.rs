//! Outer continuation in `λ`: a stage-one feasibility solve followed by a
//! sequence of smoothed subproblems with geometrically decreasing `λ`, each
//! warm started from the better of the previous iterate and the stage-one
//! point, until `Σ r_β(F_i(x)) ≤ ε²/2`.

use serde::{Deserialize, Serialize};

use crate::envelope::{
    cone_membership, project_d_c_beta, Beta, Cone, EnvelopeParams, Point2, CONE_TOL,
};
use crate::error::{Error, Result};
use crate::inner::{residual_unchecked, solve_inner, InnerOptions, InnerStatus, SmoothObjective};
use crate::model::{violation_of, MpccProblem, Norm};
use crate::smoothing::{FeasibilityObjective, SmoothedProblem};

/// Smallest admissible `λ`; below it the penalty `1/λ` swamps double precision.
pub const LAMBDA_FLOOR: f64 = 1e-18;

/// How `λ^ν` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSchedule {
    /// `λ^ν = ρ·λ^{ν-1}` starting from `λ⁰`.
    Geometric,
    /// Explicit values `λ¹, λ², …`; the run ends after the last one.
    Manual(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyParams {
    pub epsilon: f64,
    pub beta: f64,
    pub lambda0: f64,
    pub rho: f64,
    pub max_outer: usize,
    /// Lower bound of `f` on the feasible set, used for the outer iteration bound.
    pub f_lower: Option<f64>,
    pub schedule: LambdaSchedule,
    /// Use the tolerance `max(ε, 0.5^ν)` for the `ν`-th subproblem.
    pub decreasing_tolerance: bool,
    /// Inner solver settings; `tol` and `target_value` are set per subproblem.
    pub inner: InnerOptions,
}

impl Default for HomotopyParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            beta: 0.999,
            lambda0: 1.0,
            rho: 0.8,
            max_outer: 200,
            f_lower: None,
            schedule: LambdaSchedule::Geometric,
            decreasing_tolerance: false,
            inner: InnerOptions::default(),
        }
    }
}

impl HomotopyParams {
    pub fn validate(&self) -> Result<Beta> {
        let beta = Beta::new(self.beta)?;
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Parameter(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Parameter(format!("rho must lie in (0,1), got {}", self.rho)));
        }
        if self.max_outer == 0 {
            return Err(Error::Parameter("max_outer must be positive".into()));
        }
        if let LambdaSchedule::Manual(values) = &self.schedule {
            if values.is_empty() || values.iter().any(|l| !(*l > 0.0)) {
                return Err(Error::Parameter("manual schedule needs positive lambda values".into()));
            }
        }
        self.inner.validate()?;
        Ok(beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    CertifiedStationary,
    OuterLimit,
    InnerFailure,
    Stage1Failure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::CertifiedStationary => "CertifiedStationary",
            SolveStatus::OuterLimit => "OuterLimit",
            SolveStatus::InnerFailure => "InnerFailure",
            SolveStatus::Stage1Failure => "Stage1Failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage1Mode {
    NearFeasible,
    HeuristicStationary,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StationarityLabel {
    ApproxC,
    ApproxM,
    None,
}

impl StationarityLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            StationarityLabel::ApproxC => "ApproxC",
            StationarityLabel::ApproxM => "ApproxM",
            StationarityLabel::None => "None",
        }
    }
}

/// Verdict for one complementarity pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    /// Multiplier `R_β(F_i(x))/λ`.
    pub y: Point2,
    /// Base point: `Π_D(F_i(x))`, or the origin inside `int T_β`.
    pub z: Point2,
    pub cone: Cone,
    pub member: bool,
    /// Membership in the Clarke cone, which contains the limiting cone.
    pub clarke_member: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityCertificate {
    pub residual: f64,
    pub cc_violation: f64,
    pub per_constraint: Vec<PairVerdict>,
    pub label: StationarityLabel,
}

/// One row of the outer trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub nu: usize,
    pub lambda: f64,
    pub s_value: f64,
    pub f_value: f64,
    pub inner_residual: f64,
    pub envelope_residual: f64,
    pub cc_violation: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_final: Vec<f64>,
    pub status: SolveStatus,
    pub trace: Vec<OuterRecord>,
    pub certificate: StationarityCertificate,
    pub stage1_mode: Stage1Mode,
    /// Starting point of the outer loop (stage-one output).
    pub x0: Vec<f64>,
    pub stage1_iters: usize,
    /// Every iterate `x^ν`, aligned with `trace`.
    pub iterates: Vec<Vec<f64>>,
}

impl SolveReport {
    pub fn outer_iters(&self) -> usize {
        self.trace.len()
    }

    pub fn inner_iters_total(&self) -> usize {
        self.stage1_iters + self.trace.iter().map(|r| r.inner_iters).sum::<usize>()
    }

    /// `λ` of the last subproblem, if any was solved.
    pub fn final_lambda(&self) -> Option<f64> {
        self.trace.last().map(|r| r.lambda)
    }
}

/// Stage one: minimize `Σ r_β(F_i(x))` over the box from `x_start`.
///
/// Succeeds with [`Stage1Mode::NearFeasible`] when the sum drops to `ε²/4`,
/// otherwise with [`Stage1Mode::HeuristicStationary`] at an `ε`-stationary
/// point of the feasibility problem. Returns the point, mode and inner
/// iteration count, or `None` on failure together with the last point.
pub fn stage1_feasibility(
    problem: &MpccProblem,
    params: &HomotopyParams,
    x_start: &[f64],
) -> Result<(Vec<f64>, Option<Stage1Mode>, usize)> {
    let beta = params.validate()?;
    problem.check_point(x_start)?;
    let near = params.epsilon * params.epsilon / 4.0;
    let objective = FeasibilityObjective::new(problem, beta);
    let opts = InnerOptions {
        // ask for more than ε so that near-feasibility is preferred when reachable
        tol: 1e-3 * params.epsilon,
        target_value: None,
        value_stop: Some(near),
        ..params.inner
    };
    let res = solve_inner(&objective, problem.bounds(), x_start, &opts);
    let mode = if res.value <= near {
        Some(Stage1Mode::NearFeasible)
    } else if res.residual <= params.epsilon {
        Some(Stage1Mode::HeuristicStationary)
    } else {
        None
    };
    Ok((res.x, mode, res.iters))
}

/// The outer loop; see the module documentation.
pub fn solve(
    problem: &MpccProblem,
    params: &HomotopyParams,
    x_start: &[f64],
    skip_stage1: bool,
) -> Result<SolveReport> {
    let beta = params.validate()?;
    problem.check_point(x_start)?;
    let eps = params.epsilon;
    let stop_level = eps * eps / 2.0;

    let (x0, stage1_mode, stage1_iters) = if skip_stage1 {
        (problem.bounds().project(x_start), Stage1Mode::Skipped, 0)
    } else {
        let (x, mode, iters) = stage1_feasibility(problem, params, x_start)?;
        match mode {
            Some(m) => (x, m, iters),
            None => {
                let certificate = certify(problem, &x, params.lambda0, params.beta, eps)?;
                return Ok(SolveReport {
                    x_final: x.clone(),
                    status: SolveStatus::Stage1Failure,
                    trace: Vec::new(),
                    certificate,
                    stage1_mode: Stage1Mode::Failed,
                    x0: x,
                    stage1_iters: iters,
                    iterates: Vec::new(),
                });
            }
        }
    };

    let max_outer = match &params.schedule {
        LambdaSchedule::Geometric => params.max_outer,
        LambdaSchedule::Manual(values) => values.len().min(params.max_outer),
    };

    let mut trace = Vec::new();
    let mut iterates: Vec<Vec<f64>> = Vec::new();
    let mut x_prev = x0.clone();
    let mut lambda = params.lambda0;
    let mut status = SolveStatus::OuterLimit;

    for nu in 1..=max_outer {
        lambda = match &params.schedule {
            LambdaSchedule::Geometric => lambda * params.rho,
            LambdaSchedule::Manual(values) => values[nu - 1],
        };
        if lambda < LAMBDA_FLOOR {
            break;
        }
        let env = EnvelopeParams::new(lambda, params.beta)?;
        let sp = SmoothedProblem::new(problem, env);

        let s_prev = sp.s_eval(&x_prev);
        let s_init = sp.s_eval(&x0);
        let (warm, target) = if s_prev <= s_init { (&x_prev, s_prev) } else { (&x0, s_init) };

        let tol = if params.decreasing_tolerance { eps.max(0.5f64.powi(nu as i32)) } else { eps };
        let opts = InnerOptions { tol, target_value: Some(target), value_stop: None, ..params.inner };
        let res = solve_inner(&sp, problem.bounds(), warm, &opts);

        let values = problem.pair_values(&res.x);
        let env_res: f64 = values.iter().map(|z| crate::envelope::r_beta(*z, beta)).sum();
        trace.push(OuterRecord {
            nu,
            lambda,
            s_value: res.value,
            f_value: problem.objective(&res.x),
            inner_residual: res.residual,
            envelope_residual: env_res,
            cc_violation: violation_of(&values, Norm::Two),
            inner_iters: res.iters,
        });
        iterates.push(res.x.clone());
        x_prev = res.x;

        if res.status != InnerStatus::Converged {
            status = SolveStatus::InnerFailure;
            break;
        }
        if env_res <= stop_level && tol <= eps {
            status = SolveStatus::CertifiedStationary;
            break;
        }
    }

    let final_lambda = trace.last().map_or(params.lambda0, |r| r.lambda);
    let certificate = certify(problem, &x_prev, final_lambda, params.beta, eps)?;
    if status == SolveStatus::CertifiedStationary && certificate.label == StationarityLabel::None {
        // the stopping test passed but the certificate does not hold
        status = SolveStatus::InnerFailure;
    }
    Ok(SolveReport {
        x_final: x_prev,
        status,
        trace,
        certificate,
        stage1_mode,
        x0,
        stage1_iters,
        iterates,
    })
}

/// `1 + log_{1/ρ}(4λ⁰(f(x⁰) - f̲)/ε²)`, reported as 1 when the gap is zero.
pub fn outer_iteration_bound(params: &HomotopyParams, f_x0: f64) -> Result<f64> {
    let f_lower = params
        .f_lower
        .ok_or_else(|| Error::Parameter("the outer bound needs a lower bound of f".into()))?;
    if f_x0 < f_lower {
        return Err(Error::Parameter(format!("f(x0) = {f_x0} is below the lower bound {f_lower}")));
    }
    let gap = f_x0 - f_lower;
    if gap == 0.0 {
        return Ok(1.0);
    }
    let arg = 4.0 * params.lambda0 * gap / (params.epsilon * params.epsilon);
    Ok(1.0 + arg.ln() / (1.0 / params.rho).ln())
}

/// Approximate stationarity certificate of `x` for the subproblem `(λ, β)`.
///
/// A pair declared well-behaved is tested against the limiting cone,
/// otherwise against the Clarke cone. The label is `ApproxM` when there is
/// at least one pair, all pairs are well-behaved and all limiting tests
/// pass; `ApproxC` when all Clarke tests pass; both also require residual
/// and violation at most `ε`.
pub fn certify(
    problem: &MpccProblem,
    x: &[f64],
    lambda: f64,
    beta: f64,
    epsilon: f64,
) -> Result<StationarityCertificate> {
    let env = EnvelopeParams::new(lambda, beta)?;
    problem.check_point(x)?;
    if !problem.bounds().contains(x) {
        return Err(Error::Domain("point lies outside the box".into()));
    }
    let sp = SmoothedProblem::new(problem, env);
    let (_, grad) = sp.value_and_grad(x);
    let residual = residual_unchecked(&grad, x, problem.bounds());
    let values = problem.pair_values(x);
    let cc_violation = violation_of(&values, Norm::Two);
    let multipliers = sp.multipliers(x);

    let mut per_constraint = Vec::with_capacity(values.len());
    for ((z_raw, y), cc) in values.iter().zip(multipliers).zip(problem.ccs()) {
        let z = project_d_c_beta(*z_raw, env.beta());
        let cone = if cc.well_behaved { Cone::Limiting } else { Cone::Clarke };
        let member = cone_membership(y, z, cone, CONE_TOL)?;
        let clarke_member = cone == Cone::Clarke && member || cone_membership(y, z, Cone::Clarke, CONE_TOL)?;
        per_constraint.push(PairVerdict { y, z, cone, member, clarke_member });
    }

    let approx = residual <= epsilon && cc_violation <= epsilon;
    let all_limiting = !per_constraint.is_empty()
        && per_constraint.iter().all(|v| v.cone == Cone::Limiting && v.member);
    let all_clarke = per_constraint.iter().all(|v| v.clarke_member);
    let label = if approx && all_limiting {
        StationarityLabel::ApproxM
    } else if approx && all_clarke {
        StationarityLabel::ApproxC
    } else {
        StationarityLabel::None
    };
    Ok(StationarityCertificate { residual, cc_violation, per_constraint, label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::kth3;
    use crate::model::{BoxSet, CcPair, PairJacobian};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn bound_formula() {
        let params = HomotopyParams { epsilon: 1e-2, f_lower: Some(0.0), ..Default::default() };
        let b = outer_iteration_bound(&params, 1.0).unwrap();
        assert_relative_eq!(b, 1.0 + (4e4f64).ln() / 1.25f64.ln(), max_relative = 1e-14);
        assert!((b - 48.488).abs() < 1e-3);
        assert_eq!(outer_iteration_bound(&params, 0.0).unwrap(), 1.0);
        let faster = HomotopyParams { rho: 0.5, ..params.clone() };
        assert!(outer_iteration_bound(&faster, 1.0).unwrap() < b);
        let missing = HomotopyParams { f_lower: None, ..params };
        assert!(matches!(outer_iteration_bound(&missing, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn params_validation() {
        assert!(HomotopyParams::default().validate().is_ok());
        assert!(HomotopyParams { beta: 1.0, ..Default::default() }.validate().is_err());
        assert!(HomotopyParams { rho: 1.0, ..Default::default() }.validate().is_err());
        assert!(HomotopyParams { epsilon: 0.0, ..Default::default() }.validate().is_err());
        let manual = HomotopyParams { schedule: LambdaSchedule::Manual(vec![]), ..Default::default() };
        assert!(manual.validate().is_err());
    }

    fn smooth_only() -> MpccProblem {
        MpccProblem::new(
            2,
            Arc::new(|x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2)),
            Arc::new(|x: &[f64]| vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)]),
            vec![],
            BoxSet::unbounded(2),
        )
        .unwrap()
    }

    #[test]
    fn no_pairs_terminates_immediately() {
        let p = smooth_only();
        let report = solve(&p, &HomotopyParams::default(), &[1.0, -2.0], true).unwrap();
        assert_eq!(report.status, SolveStatus::CertifiedStationary);
        assert_eq!(report.outer_iters(), 1);
        assert_eq!(report.x_final, vec![1.0, -2.0]);
        assert_eq!(report.certificate.label, StationarityLabel::ApproxC);
        assert_eq!(report.certificate.residual, 0.0);
    }

    #[test]
    fn kth3_certificate_near_global_minimizer() {
        // stationary point of the smoothed problem next to (0,1)
        let (lambda, beta) = (1e-3, 0.999);
        let t = (1.0 - beta) * lambda;
        let x = [t / (1.0 + t), 1.0];
        let c = certify(&kth3(), &x, lambda, beta, 1e-6).unwrap();
        assert_eq!(c.label, StationarityLabel::ApproxC);
        assert!(c.residual < 1e-12);
        assert!(c.cc_violation <= 1e-6);
        let v = &c.per_constraint[0];
        assert_eq!(v.y.z2, 0.0);
        assert_relative_eq!(v.y.z1, 1.0, max_relative = 1e-5);
        assert_eq!(v.z, Point2::new(0.0, 1.0));
        assert_eq!(v.cone, Cone::Clarke);
        // at (0,1) itself the multiplier vanishes and -∇f is left over
        let exact = certify(&kth3(), &[0.0, 1.0], lambda, beta, 1e-6).unwrap();
        assert_eq!(exact.cc_violation, 0.0);
        assert_eq!(exact.residual, 1.0);
        assert_eq!(exact.label, StationarityLabel::None);
        let off = certify(&kth3(), &[0.5, 0.5], 1e-3, 0.999, 1e-6).unwrap();
        assert_eq!(off.label, StationarityLabel::None);
        assert_relative_eq!(off.cc_violation, 0.5);
    }

    fn constant_pair(z: Point2, well_behaved: bool) -> MpccProblem {
        MpccProblem::new(
            1,
            Arc::new(|_: &[f64]| 0.0),
            Arc::new(|_: &[f64]| vec![0.0]),
            vec![CcPair::new(Arc::new(move |_: &[f64]| z), Arc::new(|_: &[f64]| PairJacobian::default()))
                .with_well_behaved(well_behaved)],
            BoxSet::unbounded(1),
        )
        .unwrap()
    }

    #[test]
    fn interior_wedge_is_clarke_not_limiting() {
        let delta = 1e-9;
        let p = constant_pair(Point2::new(delta, delta), true);
        let c = certify(&p, &[0.0], 1.0, 0.5, 1e-6).unwrap();
        let v = &c.per_constraint[0];
        assert_eq!(v.z, Point2::ORIGIN);
        assert!(v.y.z1 > 0.0 && v.y.z2 > 0.0);
        assert_eq!(v.cone, Cone::Limiting);
        // at λ = 1 the multiplier is below the cone tolerance
        let c = certify(&p, &[0.0], 1e-4, 0.5, 1e-6).unwrap();
        let v = &c.per_constraint[0];
        assert!(v.y.z1 > CONE_TOL);
        assert!(!v.member);
        assert!(v.clarke_member);
        assert_eq!(c.label, StationarityLabel::ApproxC);
    }

    #[test]
    fn well_behaved_pairs_give_m_label() {
        let p = constant_pair(Point2::new(3.0, 0.0), true);
        let c = certify(&p, &[0.0], 1e-2, 0.9, 1e-6).unwrap();
        assert_eq!(c.label, StationarityLabel::ApproxM);
    }
}
