//! Random bound-constrained quadratic instances and reference problems.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, so a seed
//! produces the same instance on every platform.

use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{BoxSet, CcPair, MpccProblem, QuadraticMpcc};
use crate::sparse::SymTriplets;

/// Size and seed of a bound-constrained instance with `n = n0 + 2p` variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundQpccSpec {
    pub n0: usize,
    pub p: usize,
    pub seed: u64,
}

impl BoundQpccSpec {
    pub fn dim(&self) -> usize {
        self.n0 + 2 * self.p
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generate `min ½xᵀQx + gᵀx  s.t.  l₀ ≤ x₀ ≤ u₀,  0 ≤ x₁ ⊥ x₂ ≥ 0`.
///
/// * `Q` has a full standard-normal diagonal plus `⌊n²/8⌋` strictly upper
///   positions (mirrored, so about a quarter of the matrix is filled) with
///   standard-normal values.
/// * The diagonal of the `(x₁, x₂)` block is raised to `1 + Σ|off-diagonal|`
///   within that block, so the objective is bounded below on the feasible set.
/// * If the diagonal does not already exhibit both signs, one `x₀` diagonal
///   entry is lowered and one raised by `1 + max|Q_jj|`.
/// * `g ~ U[-10,10]`, `l₀ ~ U[-10,10]`, `u₀ = l₀ + U[0,20]`.
pub fn gen_bound_qpcc(spec: BoundQpccSpec) -> QuadraticMpcc {
    let BoundQpccSpec { n0, p, seed } = spec;
    let n = spec.dim();
    let mut rng = rng_from_seed(seed);

    let mut diag: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    let total_upper = n * n.saturating_sub(1) / 2;
    let count = (n * n / 8).min(total_upper);
    let mut positions: Vec<(usize, usize)> = index::sample(&mut rng, total_upper, count)
        .into_iter()
        .map(|k| upper_position(n, k))
        .collect();
    positions.sort_unstable();
    let off: Vec<(usize, usize, f64)> =
        positions.into_iter().map(|(r, c)| (r, c, rng.sample(StandardNormal))).collect();

    let mut cc_row_sum = vec![0.0; n];
    for &(r, c, v) in &off {
        if r >= n0 && c >= n0 {
            cc_row_sum[r] += f64::abs(v);
            cc_row_sum[c] += f64::abs(v);
        }
    }
    for j in n0..n {
        diag[j] = 1.0 + cc_row_sum[j];
    }

    let has_neg = diag.iter().any(|&d| d < 0.0);
    let has_pos = diag.iter().any(|&d| d > 0.0);
    if n >= 2 && n0 >= 1 && !(has_neg && has_pos) {
        let shift = 1.0 + diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if !has_neg {
            diag[0] -= shift;
        }
        if !has_pos {
            diag[n - 1] += shift;
        }
    }

    let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..=10.0)).collect();
    let l0: Vec<f64> = (0..n0).map(|_| rng.gen_range(-10.0..=10.0)).collect();
    let u0: Vec<f64> = l0.iter().map(|l| l + rng.gen_range(0.0..=20.0)).collect();

    let mut upper: Vec<(usize, usize, f64)> = diag.into_iter().enumerate().map(|(j, v)| (j, j, v)).collect();
    upper.extend(off);
    upper.sort_by_key(|e| (e.0, e.1));

    let mut lower = l0;
    lower.resize(n, f64::NEG_INFINITY);
    let mut upper_b = u0;
    upper_b.resize(n, f64::INFINITY);

    QuadraticMpcc {
        n0,
        q: SymTriplets::new(n, upper).expect("generated triplets are in range"),
        g,
        bounds: BoxSet::new(lower, upper_b).expect("generated bounds are ordered"),
        cc_pairs: (0..p).map(|i| (n0 + i, n0 + p + i)).collect(),
        linear_ineq: None,
        linear_cc: None,
    }
}

/// The `k`-th strictly upper position of an `n×n` matrix in row-major order.
fn upper_position(n: usize, mut k: usize) -> (usize, usize) {
    let mut r = 0;
    loop {
        let len = n - r - 1;
        if k < len {
            return (r, r + 1 + k);
        }
        k -= len;
        r += 1;
    }
}

/// `n` coordinates drawn uniformly from `[-half_width, half_width]`.
pub fn uniform_point(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-half_width..=half_width)).collect()
}

/// The feasible start `(l₀, 0, 0)`; components without a finite lower bound start at zero.
pub fn bound_qpcc_start(q: &QuadraticMpcc) -> Vec<f64> {
    q.bounds.lower().iter().map(|l| if l.is_finite() { *l } else { 0.0 }).collect()
}

/// `min 0.5(x₁-1)² + (x₂-1)²  s.t.  0 ≤ x₁ ⊥ x₂ ≥ 0` over `ℝ²`.
///
/// Global minimizer `(0, 1)` with value `0.5`; local minimizer `(1, 0)` with value `1`.
pub fn kth3() -> MpccProblem {
    MpccProblem::new(
        2,
        Arc::new(|x: &[f64]| 0.5 * (x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)),
        Arc::new(|x: &[f64]| vec![x[0] - 1.0, 2.0 * (x[1] - 1.0)]),
        vec![CcPair::variables(0, 1)],
        BoxSet::unbounded(2),
    )
    .expect("kth3 is well formed")
}

/// kth3 in quadratic form; the objective differs from [`kth3`] by the constant 1.5.
pub fn kth3_quadratic() -> QuadraticMpcc {
    QuadraticMpcc {
        n0: 0,
        q: SymTriplets::new(2, vec![(0, 0, 1.0), (1, 1, 2.0)]).expect("static data"),
        g: vec![-1.0, -2.0],
        bounds: BoxSet::unbounded(2),
        cc_pairs: vec![(0, 1)],
        linear_ineq: None,
        linear_cc: None,
    }
}

/// The constant dropped from [`kth3_quadratic`].
pub const KTH3_CONSTANT: f64 = 1.5;
