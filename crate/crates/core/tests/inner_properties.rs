use llmpcc::envelope::EnvelopeParams;
use llmpcc::generators::{gen_bound_qpcc, rng_from_seed, uniform_point, BoundQpccSpec};
use llmpcc::inner::*;
use llmpcc::model::{quadratic_to_mpcc, BoxSet, QuadraticForm, QuadraticMpcc};
use llmpcc::smoothing::SmoothedProblem;
use llmpcc::sparse::SymTriplets;
use proptest::prelude::*;
use rand::Rng;

/// The `k`-th iterate, read off a run capped at `k` iterations.
fn iterate<O: SmoothObjective>(obj: &O, bounds: &BoxSet, x0: &[f64], opts: &InnerOptions, k: usize) -> InnerResult {
    let capped = InnerOptions { max_iters: k.max(1), ..*opts };
    if k == 0 {
        let x = bounds.project(x0);
        let (value, g) = obj.value_and_grad(&x);
        let residual = stationarity_residual(&g, &x, bounds).unwrap();
        return InnerResult { x, value, residual, iters: 0, status: InnerStatus::MaxIters };
    }
    solve_inner(obj, bounds, x0, &capped)
}

/// A random instance whose pair variables also carry finite bounds.
fn boxed_instance(seed: u64) -> QuadraticMpcc {
    let mut q = gen_bound_qpcc(BoundQpccSpec { n0: 3, p: 3, seed });
    let mut rng = rng_from_seed(seed ^ 0xb0c5);
    let n = q.dim();
    let lower: Vec<f64> = (0..n).map(|j| if j < 3 { q.bounds.lower()[j] } else { rng.gen_range(-4.0..0.0) }).collect();
    let upper: Vec<f64> = (0..n).map(|j| if j < 3 { q.bounds.upper()[j] } else { rng.gen_range(0.0..4.0) }).collect();
    q.bounds = BoxSet::new(lower, upper).unwrap();
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterates_descend_and_stay_in_the_box(seed in 0u64..1000, lambda in 0.01f64..2.0) {
        let q = boxed_instance(seed);
        let problem = quadratic_to_mpcc(&q).unwrap();
        let sp = SmoothedProblem::new(&problem, EnvelopeParams::new(lambda, 0.999).unwrap());
        let x0 = uniform_point(&mut rng_from_seed(seed), q.dim(), 20.0);
        let opts = InnerOptions { tol: 1e-10, ..Default::default() };
        let mut prev = iterate(&sp, problem.bounds(), &x0, &opts, 0);
        let (_, mut g_prev) = sp.value_and_grad(&prev.x);
        for k in 1..=25 {
            let cur = iterate(&sp, problem.bounds(), &x0, &opts, k);
            prop_assert!(problem.bounds().contains(&cur.x));
            if cur.iters < k {
                break;
            }
            prop_assert!(cur.value <= prev.value + rounding_level(prev.value), "k={k}: {} > {}", cur.value, prev.value);
            let decrease: f64 = prev.x.iter().zip(&cur.x).zip(&g_prev).map(|((a, b), g)| g * (a - b)).sum();
            let (_, g_cur) = sp.value_and_grad(&cur.x);
            let armijo = cur.value <= prev.value - opts.armijo_c * decrease;
            let change: f64 = prev.x.iter().zip(&cur.x).zip(g_prev.iter().zip(&g_cur))
                .map(|((a, b), (g0, g1))| 0.5 * (g0 + g1) * (b - a)).sum();
            let rounded = (cur.value - prev.value).abs() <= rounding_level(prev.value)
                && change <= -opts.armijo_c * decrease;
            prop_assert!(armijo || rounded, "k={k}");
            prev = cur;
            g_prev = g_cur;
        }
    }

    #[test]
    fn identical_inputs_give_identical_runs(seed in 0u64..1000) {
        let q = gen_bound_qpcc(BoundQpccSpec { n0: 4, p: 4, seed });
        let problem = quadratic_to_mpcc(&q).unwrap();
        let sp = SmoothedProblem::new(&problem, EnvelopeParams::new(0.1, 0.999).unwrap());
        let x0 = uniform_point(&mut rng_from_seed(seed), q.dim(), 10.0);
        let opts = InnerOptions { tol: 1e-6, ..Default::default() };
        let a = solve_inner(&sp, problem.bounds(), &x0, &opts);
        let b = solve_inner(&sp, problem.bounds(), &x0, &opts);
        prop_assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn strictly_convex_quadratic_reaches_its_minimizer(seed in 0u64..1000, n in 1usize..12, boxed in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let bounds = if boxed {
            let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..0.0)).collect();
            let hi: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            BoxSet::new(lo, hi).unwrap()
        } else {
            BoxSet::unbounded(n)
        };
        // separable, so the minimizer is the clamped unconstrained one
        let x_star = bounds.project(&diag.iter().zip(&g).map(|(d, gi)| -gi / d).collect::<Vec<_>>());
        let q = QuadraticMpcc {
            n0: n,
            q: SymTriplets::new(n, diag.iter().enumerate().map(|(j, d)| (j, j, *d)).collect()).unwrap(),
            g,
            bounds: bounds.clone(),
            cc_pairs: Vec::new(),
            linear_ineq: None,
            linear_cc: None,
        };
        let form = QuadraticForm::new(&q);
        let obj = (|x: &[f64]| form.value(x), |x: &[f64]| form.gradient(x));
        let tol = 1e-9;
        let x0 = uniform_point(&mut rng, n, 10.0);
        let res = solve_inner(&obj, &bounds, &x0, &InnerOptions { tol, ..Default::default() });
        prop_assert_eq!(res.status, InnerStatus::Converged);
        prop_assert!(res.residual <= tol);
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(*d), b.max(*d)));
        let err: Vec<f64> = res.x.iter().zip(&x_star).map(|(a, b)| a - b).collect();
        prop_assert!(err.iter().map(|e| e * e).sum::<f64>().sqrt() <= tol * (hi / lo).sqrt(), "{err:?}");
    }
}
