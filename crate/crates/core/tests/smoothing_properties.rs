use std::sync::Arc;

use llmpcc::envelope::{in_interior_t, Beta, EnvelopeParams, Point2};
use llmpcc::generators::{gen_bound_qpcc, rng_from_seed, uniform_point, BoundQpccSpec};
use llmpcc::model::{from_general, quadratic_to_mpcc, BoxSet, CcPair, MpccProblem, SmoothConstraint};
use llmpcc::oracles::finite_diff_grad;
use llmpcc::smoothing::SmoothedProblem;
use proptest::prelude::*;

fn beta_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(0.9), Just(0.999), 0.05f64..0.99]
}

fn boundary_distance(z: Point2, beta: f64) -> f64 {
    let g = 1.0 - beta;
    let line = |a: f64, b: f64| (a * z.z1 + b * z.z2).abs() / (a * a + b * b).sqrt();
    [z.z1.abs(), z.z2.abs(), line(g, -1.0), line(1.0, -g)].into_iter().fold(f64::INFINITY, f64::min)
}

/// `min ‖x‖²` with one user pair `(x₀ + x₁, x₁ - x₂)` and affine equality/inequality rows.
fn mixed_problem(rows: &[(Vec<f64>, f64)]) -> MpccProblem {
    let pair = CcPair::new(
        Arc::new(|x: &[f64]| Point2::new(x[0] + x[1], x[1] - x[2])),
        Arc::new(|_: &[f64]| llmpcc::model::PairJacobian { g: vec![(0, 1.0), (1, 1.0)], h: vec![(1, 1.0), (2, -1.0)] }),
    );
    let (eqs, ineqs) = rows.split_at(rows.len() / 2);
    let affine = |v: &[(Vec<f64>, f64)]| v.iter().map(|(a, b)| SmoothConstraint::affine(a.clone(), *b)).collect();
    from_general(
        3,
        Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum()),
        Arc::new(|x: &[f64]| x.iter().map(|v| 2.0 * v).collect()),
        affine(eqs),
        affine(ineqs),
        vec![pair],
        BoxSet::unbounded(3),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn gradient_matches_finite_differences(seed in 0u64..1000, lambda in 0.05f64..5.0, beta in beta_value()) {
        let q = gen_bound_qpcc(BoundQpccSpec { n0: 2, p: 3, seed });
        let problem = quadratic_to_mpcc(&q).unwrap();
        let x = uniform_point(&mut rng_from_seed(seed + 7), q.dim(), 3.0);
        prop_assume!(problem.pair_values(&x).into_iter().all(|z| boundary_distance(z, beta) > 1e-4));
        let sp = SmoothedProblem::new(&problem, EnvelopeParams::new(lambda, beta).unwrap());
        let fd = finite_diff_grad(|v| sp.s_eval(v), &x, 1e-6);
        let grad = sp.s_grad(&x);
        let scale = grad.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fd.iter().zip(&grad) {
            prop_assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn smoothed_value_decreases_in_lambda(
        seed in 0u64..1000,
        lambdas in (0.01f64..10.0, 0.01f64..10.0),
        beta in beta_value(),
    ) {
        let (small, large) = if lambdas.0 <= lambdas.1 { lambdas } else { (lambdas.1, lambdas.0) };
        let q = gen_bound_qpcc(BoundQpccSpec { n0: 2, p: 3, seed });
        let problem = quadratic_to_mpcc(&q).unwrap();
        let x = uniform_point(&mut rng_from_seed(seed), q.dim(), 5.0);
        let at = |l: f64| SmoothedProblem::new(&problem, EnvelopeParams::new(l, beta).unwrap()).s_eval(&x);
        prop_assert!(at(small) >= at(large));
        prop_assert!(at(large) >= problem.objective(&x));
    }

    #[test]
    fn reformulated_rows_have_no_second_multiplier(
        rows in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 3), -2.0f64..2.0), 1..5),
        x in prop::collection::vec(-3.0f64..3.0, 3),
        lambda in 0.01f64..5.0,
        beta in beta_value(),
    ) {
        let problem = mixed_problem(&rows);
        let sp = SmoothedProblem::new(&problem, EnvelopeParams::new(lambda, beta).unwrap());
        let values = problem.pair_values(&x);
        let b = Beta::new(beta).unwrap();
        for ((cc, y), z) in problem.ccs().iter().zip(sp.multipliers(&x)).zip(values) {
            if cc.constant_h && !in_interior_t(z, b) {
                prop_assert_eq!(y.z2, 0.0);
            }
        }
    }
}
