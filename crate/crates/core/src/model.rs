//! Problem representation: a smooth objective over a box together with a
//! list of complementarity pairs `F_i(x) = (G_i(x), H_i(x)) ∈ D`.

use std::fmt;
use std::sync::Arc;

use crate::envelope::{dist_to_d, r_beta, Beta, Point2};
use crate::error::{Error, Result};
use crate::sparse::{Csr, SymTriplets, Triplets};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type PairFn = Arc<dyn Fn(&[f64]) -> Point2 + Send + Sync>;
pub type PairJacobianFn = Arc<dyn Fn(&[f64]) -> PairJacobian + Send + Sync>;

/// A sparse row `(index, value)`.
pub type SparseRow = Vec<(usize, f64)>;

/// The 2×n Jacobian of a pair, rows `∇G_iᵀ` and `∇H_iᵀ`, stored sparsely.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairJacobian {
    pub g: SparseRow,
    pub h: SparseRow,
}

impl PairJacobian {
    /// `out += JFᵀ y`
    pub fn add_tr_mul(&self, y: Point2, out: &mut [f64]) {
        if y.z1 != 0.0 {
            for &(j, v) in &self.g {
                out[j] += v * y.z1;
            }
        }
        if y.z2 != 0.0 {
            for &(j, v) in &self.h {
                out[j] += v * y.z2;
            }
        }
    }
}

/// Componentwise bounds `lower ≤ x ≤ upper`; infinite entries mean no bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Schema(format!(
                "bound vectors differ in length: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::Schema(format!("invalid bounds [{l}, {u}] for component {j}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The whole space `ℝⁿ`.
    pub fn unbounded(n: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.iter().all(|l| *l == f64::NEG_INFINITY) && self.upper.iter().all(|u| *u == f64::INFINITY)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        for ((v, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(l, u);
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }
}

/// One complementarity constraint `0 ≤ G_i(x) ⊥ H_i(x) ≥ 0`.
#[derive(Clone)]
pub struct CcPair {
    pub eval: PairFn,
    pub jacobian: PairJacobianFn,
    /// Caller-asserted: `F_i(x)` stays away from a ball around the origin
    /// intersected with the open positive quadrant.
    pub well_behaved: bool,
    pub constant_g: bool,
    pub constant_h: bool,
}

impl CcPair {
    pub fn new(eval: PairFn, jacobian: PairJacobianFn) -> Self {
        Self { eval, jacobian, well_behaved: false, constant_g: false, constant_h: false }
    }

    pub fn with_well_behaved(mut self, flag: bool) -> Self {
        self.well_behaved = flag;
        self
    }

    /// The pair `0 ≤ x_j ⊥ x_k ≥ 0`.
    pub fn variables(j: usize, k: usize) -> Self {
        Self::new(
            Arc::new(move |x: &[f64]| Point2::new(x[j], x[k])),
            Arc::new(move |_: &[f64]| PairJacobian { g: vec![(j, 1.0)], h: vec![(k, 1.0)] }),
        )
    }
}

impl fmt::Debug for CcPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CcPair")
            .field("well_behaved", &self.well_behaved)
            .field("constant_g", &self.constant_g)
            .field("constant_h", &self.constant_h)
            .finish_non_exhaustive()
    }
}

/// A smooth scalar constraint function with its gradient.
#[derive(Clone)]
pub struct SmoothConstraint {
    pub value: ScalarFn,
    pub gradient: VectorFn,
}

impl SmoothConstraint {
    pub fn new(value: ScalarFn, gradient: VectorFn) -> Self {
        Self { value, gradient }
    }

    /// `c(x) = aᵀx + b`
    pub fn affine(a: Vec<f64>, b: f64) -> Self {
        let a = Arc::new(a);
        let ga = Arc::clone(&a);
        Self {
            value: Arc::new(move |x: &[f64]| dot(&a, x) + b),
            gradient: Arc::new(move |_: &[f64]| ga.as_ref().clone()),
        }
    }
}

/// Norm used to aggregate the complementarity violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Two,
    Inf,
}

/// `minimize f(x)` over `x ∈ C` (a box) subject to `F_i(x) ∈ D` for every pair.
#[derive(Clone)]
pub struct MpccProblem {
    dim: usize,
    objective: ScalarFn,
    gradient: VectorFn,
    ccs: Vec<CcPair>,
    bounds: BoxSet,
}

impl fmt::Debug for MpccProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MpccProblem")
            .field("dim", &self.dim)
            .field("ccs", &self.ccs)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl MpccProblem {
    pub fn new(dim: usize, objective: ScalarFn, gradient: VectorFn, ccs: Vec<CcPair>, bounds: BoxSet) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Schema("problem dimension must be positive".into()));
        }
        if bounds.dim() != dim {
            return Err(Error::Schema(format!("box has dimension {}, expected {dim}", bounds.dim())));
        }
        Ok(Self { dim, objective, gradient, ccs, bounds })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ccs(&self) -> &[CcPair] {
        &self.ccs
    }

    pub fn num_ccs(&self) -> usize {
        self.ccs.len()
    }

    pub fn bounds(&self) -> &BoxSet {
        &self.bounds
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    pub fn pair_values(&self, x: &[f64]) -> Vec<Point2> {
        self.ccs.iter().map(|c| (c.eval)(x)).collect()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Schema(format!("point has length {}, expected {}", x.len(), self.dim)));
        }
        Ok(())
    }
}

/// Rewrite equalities and inequalities as complementarity pairs.
///
/// An equality `c(x) = 0` becomes the two pairs `(c(x), 0)` and `(-c(x), 0)`;
/// an inequality `c(x) ≤ 0` becomes `(-c(x), 0)`. These pairs never enter the
/// open positive quadrant and are flagged well-behaved. Pairs are ordered as
/// user pairs, then equalities, then inequalities.
pub fn from_general(
    dim: usize,
    objective: ScalarFn,
    gradient: VectorFn,
    equalities: Vec<SmoothConstraint>,
    inequalities: Vec<SmoothConstraint>,
    mut ccs: Vec<CcPair>,
    bounds: BoxSet,
) -> Result<MpccProblem> {
    for c in equalities {
        ccs.push(reformulated(c.clone(), 1.0));
        ccs.push(reformulated(c, -1.0));
    }
    for c in inequalities {
        ccs.push(reformulated(c, -1.0));
    }
    MpccProblem::new(dim, objective, gradient, ccs, bounds)
}

fn reformulated(c: SmoothConstraint, sign: f64) -> CcPair {
    let value = Arc::clone(&c.value);
    let gradient = c.gradient;
    CcPair {
        eval: Arc::new(move |x: &[f64]| Point2::new(sign * value(x), 0.0)),
        jacobian: Arc::new(move |x: &[f64]| PairJacobian {
            g: gradient(x)
                .into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .map(|(j, v)| (j, sign * v))
                .collect(),
            h: Vec::new(),
        }),
        well_behaved: true,
        constant_g: false,
        constant_h: true,
    }
}

/// Norm of the vector `(min{G_i(x), H_i(x)})_i`.
pub fn cc_violation(problem: &MpccProblem, x: &[f64], norm: Norm) -> f64 {
    violation_of(&problem.pair_values(x), norm)
}

pub fn violation_of(values: &[Point2], norm: Norm) -> f64 {
    let mins = values.iter().map(|z| z.z1.min(z.z2));
    match norm {
        Norm::Two => mins.map(|m| m * m).sum::<f64>().sqrt(),
        Norm::Inf => mins.fold(0.0, |acc, m| acc.max(m.abs())),
    }
}

/// `Σ_i r_β(F_i(x))`
pub fn envelope_residual(problem: &MpccProblem, x: &[f64], beta: Beta) -> f64 {
    problem.pair_values(x).into_iter().map(|z| r_beta(z, beta)).sum()
}

/// Largest distance from a pair value to `D`; zero exactly when all pairs are feasible.
pub fn max_pair_distance(problem: &MpccProblem, x: &[f64]) -> f64 {
    problem.pair_values(x).into_iter().map(dist_to_d).fold(0.0, f64::max)
}

/// `A x₀ + a ≤ 0` on the leading `n0` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIneq {
    pub a_mat: Triplets,
    pub a_vec: Vec<f64>,
}

/// `0 ≤ x₁ ⊥ N x₀ + M x₁ + q ≥ 0` with `x₁` the `p` variables after `x₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCc {
    pub n_mat: Triplets,
    pub m_mat: Triplets,
    pub q_vec: Vec<f64>,
}

/// `minimize ½ xᵀQx + gᵀx` over a box with variable-pair and linear
/// complementarity constraints.
///
/// Variables are partitioned as `x = (x₀, rest)` with `x₀` of length `n0`.
/// In the bound-constrained form `rest = (x₁, x₂)` and `cc_pairs` links
/// `x₁ᵢ` with `x₂ᵢ`; in the linearly constrained form `rest = x₁` and the
/// pairs come from `linear_cc`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticMpcc {
    pub n0: usize,
    pub q: SymTriplets,
    pub g: Vec<f64>,
    pub bounds: BoxSet,
    pub cc_pairs: Vec<(usize, usize)>,
    pub linear_ineq: Option<LinearIneq>,
    pub linear_cc: Option<LinearCc>,
}

impl QuadraticMpcc {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Number of complementarity pairs contributed by variable pairs and `linear_cc`.
    pub fn num_cc(&self) -> usize {
        self.cc_pairs.len() + self.linear_cc.as_ref().map_or(0, |l| l.q_vec.len())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Schema("problem has no variables".into()));
        }
        if self.q.dim() != n {
            return Err(Error::Schema(format!("Q is {0}x{0} but g has length {n}", self.q.dim())));
        }
        if self.bounds.dim() != n {
            return Err(Error::Schema(format!("box has dimension {} but g has length {n}", self.bounds.dim())));
        }
        if self.n0 > n {
            return Err(Error::Schema(format!("n0 = {} exceeds the dimension {n}", self.n0)));
        }
        let mut used = vec![false; n];
        for &(j, k) in &self.cc_pairs {
            for idx in [j, k] {
                if idx >= n {
                    return Err(Error::Schema(format!("cc index {idx} out of range for n = {n}")));
                }
                if used[idx] {
                    return Err(Error::Schema(format!("variable {idx} appears in more than one cc pair")));
                }
                used[idx] = true;
            }
        }
        if let Some(li) = &self.linear_ineq {
            if li.a_mat.cols() != self.n0 || li.a_mat.rows() != li.a_vec.len() {
                return Err(Error::Schema(format!(
                    "A is {}x{} and a has length {}; expected {} columns and matching rows",
                    li.a_mat.rows(),
                    li.a_mat.cols(),
                    li.a_vec.len(),
                    self.n0
                )));
            }
        }
        if let Some(lc) = &self.linear_cc {
            let p = lc.q_vec.len();
            if self.n0 + p != n {
                return Err(Error::Schema(format!("linear cc form needs n = n0 + p, got {n} != {} + {p}", self.n0)));
            }
            if lc.n_mat.rows() != p || lc.n_mat.cols() != self.n0 {
                return Err(Error::Schema(format!("N must be {p}x{}", self.n0)));
            }
            if lc.m_mat.rows() != p || lc.m_mat.cols() != p {
                return Err(Error::Schema(format!("M must be {p}x{p}")));
            }
            if self.cc_pairs.iter().any(|&(j, k)| j >= self.n0 || k >= self.n0) {
                return Err(Error::Schema("variable pairs may not touch x1 in the linear cc form".into()));
            }
        }
        Ok(())
    }

    /// Objective value `½ xᵀQx + gᵀx` (no constant term).
    pub fn objective(&self, x: &[f64]) -> f64 {
        QuadraticForm::new(self).value(x)
    }

    /// A lower bound of the objective over the box.
    ///
    /// Variables with two finite bounds are handled by interval arithmetic
    /// term by term. The remaining variables `u` must carry a strictly
    /// diagonally dominant block `Q_uu` with Gershgorin margin `σ > 0`; their
    /// contribution `x_uᵀ b + ½ x_uᵀ Q_uu x_u` with `b = Q_ub x_b + g_u` is
    /// then at least `-‖b‖²/(2σ)`, and `‖b‖` is bounded over the box.
    /// Returns `None` when neither argument applies.
    pub fn lower_bound(&self) -> Option<f64> {
        let n = self.dim();
        let lo = self.bounds.lower();
        let hi = self.bounds.upper();
        let bounded: Vec<bool> = (0..n).map(|j| lo[j].is_finite() && hi[j].is_finite()).collect();

        let mut total = 0.0;
        for j in (0..n).filter(|&j| bounded[j]) {
            total += (self.g[j] * lo[j]).min(self.g[j] * hi[j]);
        }

        // Gershgorin margins of the unbounded block and intervals of b
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        let mut b_lo: Vec<f64> = self.g.clone();
        let mut b_hi: Vec<f64> = self.g.clone();
        let add_coupling = |u: usize, v: f64, k: usize, b_lo: &mut Vec<f64>, b_hi: &mut Vec<f64>| {
            let (a, c) = (v * lo[k], v * hi[k]);
            b_lo[u] += a.min(c);
            b_hi[u] += a.max(c);
        };
        for &(r, c, v) in self.q.upper() {
            if v == 0.0 {
                continue;
            }
            match (bounded[r], bounded[c]) {
                (true, true) if r == c => {
                    let (a, b) = (lo[r], hi[r]);
                    let sq_min = if a <= 0.0 && b >= 0.0 { 0.0 } else { (a * a).min(b * b) };
                    let sq_max = (a * a).max(b * b);
                    total += 0.5 * if v > 0.0 { v * sq_min } else { v * sq_max };
                }
                (true, true) => {
                    let (a, b, c2, d) = (lo[r], hi[r], lo[c], hi[c]);
                    total += [a * c2, a * d, b * c2, b * d].into_iter().map(|t| v * t).fold(f64::INFINITY, f64::min);
                }
                (false, false) if r == c => diag[r] += v,
                (false, false) => {
                    off[r] += v.abs();
                    off[c] += v.abs();
                }
                (false, true) => add_coupling(r, v, c, &mut b_lo, &mut b_hi),
                (true, false) => add_coupling(c, v, r, &mut b_lo, &mut b_hi),
            }
        }
        let free: Vec<usize> = (0..n).filter(|&j| !bounded[j]).collect();
        if !free.is_empty() {
            let sigma = free.iter().map(|&j| diag[j] - off[j]).fold(f64::INFINITY, f64::min);
            if !(sigma > 0.0) {
                return None;
            }
            let b_sq: f64 = free.iter().map(|&j| b_lo[j].abs().max(b_hi[j].abs()).powi(2)).sum();
            total -= b_sq / (2.0 * sigma);
        }
        total.is_finite().then_some(total)
    }
}

/// Compressed view of `½ xᵀQx + gᵀx` for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    q: Csr,
    g: Vec<f64>,
}

impl QuadraticForm {
    pub fn new(problem: &QuadraticMpcc) -> Self {
        Self { q: problem.q.to_csr(), g: problem.g.clone() }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.q.quad_form(x) + dot(&self.g, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.q.mul_vec(x);
        for (o, gi) in out.iter_mut().zip(&self.g) {
            *o += gi;
        }
        out
    }

    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let qx = self.q.mul_vec(x);
        let value = 0.5 * dot(&qx, x) + dot(&self.g, x);
        let grad = qx.into_iter().zip(&self.g).map(|(a, b)| a + b).collect();
        (value, grad)
    }
}

/// Wire a quadratic instance into callback form.
///
/// Variable pairs and linear complementarity rows are flagged not
/// well-behaved; inequality rows go through [`from_general`] and are.
pub fn quadratic_to_mpcc(q: &QuadraticMpcc) -> Result<MpccProblem> {
    q.validate()?;
    let n = q.dim();
    let form = Arc::new(QuadraticForm::new(q));
    let f_obj = Arc::clone(&form);
    let objective: ScalarFn = Arc::new(move |x: &[f64]| f_obj.value(x));
    let gradient: VectorFn = Arc::new(move |x: &[f64]| form.gradient(x));

    let mut ccs: Vec<CcPair> = q.cc_pairs.iter().map(|&(j, k)| CcPair::variables(j, k)).collect();

    if let Some(lc) = &q.linear_cc {
        let n0 = q.n0;
        let nm = lc.n_mat.to_csr();
        let mm = lc.m_mat.to_csr();
        for (i, &qi) in lc.q_vec.iter().enumerate() {
            let row: SparseRow = nm
                .row(i)
                .chain(mm.row(i).map(|(j, v)| (n0 + j, v)))
                .collect();
            let eval_row = row.clone();
            let xi = n0 + i;
            ccs.push(CcPair::new(
                Arc::new(move |x: &[f64]| {
                    let w = eval_row.iter().map(|&(j, v)| v * x[j]).sum::<f64>() + qi;
                    Point2::new(x[xi], w)
                }),
                Arc::new(move |_: &[f64]| PairJacobian { g: vec![(xi, 1.0)], h: row.clone() }),
            ));
        }
    }

    let mut inequalities = Vec::new();
    if let Some(li) = &q.linear_ineq {
        let am = li.a_mat.to_csr();
        for (i, &ai) in li.a_vec.iter().enumerate() {
            let mut coeffs = vec![0.0; n];
            for (j, v) in am.row(i) {
                coeffs[j] += v;
            }
            inequalities.push(SmoothConstraint::affine(coeffs, ai));
        }
    }

    from_general(n, objective, gradient, Vec::new(), inequalities, ccs, q.bounds.clone())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
