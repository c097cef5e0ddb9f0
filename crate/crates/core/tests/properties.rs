use ckis_core::compression::{mmd_omp, refit, CONTRACT_SLACK};
use ckis_core::embedding::{embed, mmd, preimage, rkhs_inner};
use ckis_core::kernel::pd_solve;
use ckis_core::{Embedding, Kernel, ParticleMeasure, Point};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-3.0..3.0f64, dim)
}

/// Random embedding in `dim` dimensions with `1..=max` atoms.
fn embedding(dim: usize, h: f64, max: usize) -> impl Strategy<Value = Embedding> {
    (1..=max).prop_flat_map(move |m| {
        (
            prop::collection::vec(point(dim), m),
            prop::collection::vec(-2.0..2.0f64, m),
        )
            .prop_map(move |(atoms, coeffs)| {
                Embedding::new(Kernel::new(h, dim).unwrap(), atoms, coeffs).unwrap()
            })
    })
}

fn triple() -> impl Strategy<Value = (Embedding, Embedding, Embedding)> {
    (1usize..=2, 0.2..2.0f64).prop_flat_map(|(dim, h)| {
        (embedding(dim, h, 6), embedding(dim, h, 6), embedding(dim, h, 6))
    })
}

fn objective(target: &Embedding, atoms: &[Point], g: &[f64]) -> f64 {
    let approx = Embedding::new(*target.kernel(), atoms.to_vec(), g.to_vec()).unwrap();
    let d = mmd(target, &approx).unwrap();
    d * d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mmd_is_a_metric((a, b, c) in triple()) {
        let ab = mmd(&a, &b).unwrap();
        let ba = mmd(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        prop_assert!(mmd(&a, &a).unwrap() <= 1e-7);
        let ac = mmd(&a, &c).unwrap();
        let cb = mmd(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-7);
    }

    #[test]
    fn embedding_round_trip(e in (1usize..=3, 0.1..2.0f64).prop_flat_map(|(d, h)| embedding(d, h, 10))) {
        let kernel = *e.kernel();
        let measure = ParticleMeasure::from_parts(
            e.atoms().to_vec(),
            e.coeffs().to_vec(),
            e.coeff_sum(),
        );
        let back = preimage(&embed(&measure, kernel).unwrap());
        prop_assert_eq!(back.atoms(), measure.atoms());
        prop_assert_eq!(back.weights(), measure.weights());
        let again = embed(&back, kernel).unwrap();
        prop_assert_eq!(&again, &embed(&measure, kernel).unwrap());
    }

    #[test]
    fn inner_product_matches_norm(e in embedding(2, 0.7, 8)) {
        let ip = rkhs_inner(&e, &e).unwrap();
        prop_assert!((ip - e.norm_sq()).abs() <= 1e-10 * (1.0 + ip.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn refit_is_optimal(
        (target, keep) in (1usize..=2, 0.3..1.5f64)
            .prop_flat_map(|(d, h)| embedding(d, h, 10))
            .prop_flat_map(|t| {
                let m = t.model_order();
                (Just(t), prop::collection::vec(any::<bool>(), m))
            })
    ) {
        let mut dict: Vec<Point> = target
            .atoms()
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(a, _)| a.clone())
            .collect();
        if dict.is_empty() {
            dict.push(target.atoms()[0].clone());
        }
        let kernel = *target.kernel();
        let g = refit(&target, &dict).unwrap();

        let k_dd = kernel.gram(&dict).unwrap().into_inner();
        let k_dt = kernel.cross_gram(&dict, target.atoms()).unwrap();
        let rhs = &k_dt * nalgebra::DVector::from_column_slice(target.coeffs());
        let lhs = &k_dd * nalgebra::DVector::from_column_slice(&g);
        let resid = (lhs - &rhs).amax();
        prop_assert!(resid <= 1e-8 * rhs.amax().max(f64::MIN_POSITIVE), "residual {resid}");

        let best = objective(&target, &dict, &g);
        for i in 0..g.len() {
            for delta in [-1e-3, 1e-3] {
                let mut p = g.clone();
                p[i] += delta;
                prop_assert!(objective(&target, &dict, &p) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn compression_contract_and_monotone_order(
        target in (1usize..=2, 0.3..1.5f64).prop_flat_map(|(d, h)| embedding(d, h, 12)),
        e1 in 0.0..1.0f64,
        e2 in 0.0..1.0f64,
    ) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (small, r_lo) = mmd_omp(&target, lo).unwrap();
        let (large, r_hi) = mmd_omp(&target, hi).unwrap();
        prop_assert!(mmd(&target, &small).unwrap() <= lo + CONTRACT_SLACK);
        prop_assert!(mmd(&target, &large).unwrap() <= hi + CONTRACT_SLACK);
        prop_assert!(r_lo.final_order >= r_hi.final_order);
        prop_assert!(r_hi.final_order >= 1);
        prop_assert_eq!(r_lo.final_order, r_lo.initial_order - r_lo.removed_indices.len());
        prop_assert_eq!(small.model_order(), r_lo.final_order);
    }

    /// Re-running on the output with the budget left over after the first
    /// pass removes nothing further.
    #[test]
    fn rerun_with_remaining_budget_is_idempotent(
        target in (1usize..=2, 0.05..1.0f64).prop_flat_map(|(d, h)| embedding(d, h, 10)),
        eps in 0.05..1.5f64,
    ) {
        let (out, report) = mmd_omp(&target, eps).unwrap();
        let remaining = (eps * eps - report.achieved_mmd * report.achieved_mmd).max(0.0).sqrt();
        let (_, again) = mmd_omp(&out, remaining * 0.999).unwrap();
        prop_assert!(again.removed_indices.is_empty(), "{:?}", again);
    }

    #[test]
    fn pd_solve_small_residual(
        m in 1usize..=200,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let kernel = Kernel::new(0.5, 2).unwrap();
        let pts: Vec<Point> = (0..m)
            .map(|_| vec![rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)])
            .collect();
        let g = kernel.gram(&pts).unwrap().into_inner();
        let b = DMatrix::from_fn(m, 1, |_, _| rng.random_range(-1.0..1.0));
        let sol = pd_solve(&g, &b).unwrap();
        let mut shifted = g.clone();
        for i in 0..m {
            shifted[(i, i)] += sol.jitter;
        }
        let resid = (&shifted * &sol.solution - &b).amax();
        prop_assert!(resid <= 1e-8 * b.amax().max(1.0), "m={m} residual {resid}");
    }
}

/// Re-running with the same budget can prune more even for far-apart atoms:
/// the first pass spends part of the budget, the second starts afresh.
#[test]
fn same_budget_rerun_can_prune_again() {
    let kernel = Kernel::new(0.01, 1).unwrap();
    let target = Embedding::new(
        kernel,
        vec![vec![0.0], vec![1.0], vec![2.0]],
        vec![0.5, 0.5, 10.0],
    )
    .unwrap();
    let (once, r1) = mmd_omp(&target, 0.6).unwrap();
    assert_eq!(r1.final_order, 2);
    let (_, r2) = mmd_omp(&once, 0.6).unwrap();
    assert_eq!(r2.final_order, 1);
}

#[test]
fn single_atom_refit() {
    let kernel = Kernel::new(0.3, 1).unwrap();
    let target = Embedding::new(kernel, vec![vec![0.4]], vec![2.5]).unwrap();
    let g = refit(&target, &[vec![0.4]]).unwrap();
    assert!((g[0] - 2.5).abs() < 1e-12);
}
