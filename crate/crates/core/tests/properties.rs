use proptest::prelude::*;

use wlsq_core::fourdvar::{apply_linv, assemble_l, assemble_l_tilde, VariantKind};
use wlsq_core::linalg::{cholesky, spectral_norm, sym_eigen, DenseMatrix, SpdMatrix};
use wlsq_core::random::{instance_rng, random_instance, random_layout};
use wlsq_core::theory::{admissible_error, condition_bound, error_budget, preconditioned_spectrum};

fn square(n: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| DenseMatrix::new(n, n, v).unwrap())
}

fn spd(n: usize) -> impl Strategy<Value = DenseMatrix> {
    square(n).prop_map(move |b| {
        let mut m = b.gram();
        for i in 0..n {
            m[(i, i)] += 0.5;
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cholesky_reconstructs(m in (1usize..8).prop_flat_map(spd)) {
        let l = cholesky(&m).unwrap();
        let back = l.matmul(&l.transpose()).unwrap();
        prop_assert!(back.sub(&m).unwrap().max_abs() <= 1e-12 * m.max_abs());
    }

    #[test]
    fn eigenvalues_sum_to_trace(b in (1usize..9).prop_flat_map(square)) {
        let m = b.add(&b.transpose()).unwrap();
        let ev = sym_eigen(&m).unwrap();
        let sum: f64 = ev.iter().sum();
        prop_assert!((sum - m.trace()).abs() <= 1e-10 * (1.0 + m.frobenius_norm()));
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spectral_norm_of_transpose(m in (1usize..7).prop_flat_map(square)) {
        let a = spectral_norm(&m).unwrap();
        let b = spectral_norm(&m.transpose()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a <= m.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn spectrum_invariant_under_joint_scaling(index in 0u64..500, c in 0.01f64..100.0, s in 0.01f64..100.0) {
        let inst = random_instance(9, index, 6);
        let base = preconditioned_spectrum(&inst.a, &inst.a_tilde, &inst.w).unwrap();
        let w_scaled = SpdMatrix::new(inst.w.matrix().scale(s)).unwrap();
        let scaled = preconditioned_spectrum(&inst.a.scale(c), &inst.a_tilde.scale(c), &w_scaled).unwrap();
        let top = base.last().copied().unwrap();
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert!((x - y).abs() <= 1e-9 * top);
        }
    }

    #[test]
    fn admissible_error_decreases(k in 1.0f64..1e6, f in 1.0001f64..100.0) {
        prop_assert!(admissible_error(k * f) < admissible_error(k));
    }

    #[test]
    fn error_budget_ordering(k in 1.0f64..1e6, m in 1.01f64..1e4, f in 1.01f64..10.0) {
        let g = error_budget(k, m);
        prop_assert!(g > 0.0);
        prop_assert!(g < admissible_error(k));
        prop_assert!(error_budget(k, m * f) > g);
        prop_assert!(error_budget(k * f, m) < g);
    }

    #[test]
    fn budget_round_trip(k in 1.0f64..1e6, m in 1.5f64..1e4) {
        let back = condition_bound(error_budget(k, m), k).unwrap();
        prop_assert!((back - m).abs() <= 1e-9 * m);
    }

    #[test]
    fn linv_recovers_rhs(index in 0u64..300, kind in 0usize..3) {
        let kind = [VariantKind::Zero, VariantKind::Identity, VariantKind::Custom][kind];
        let mut rng = instance_rng(21, index);
        let layout = random_layout(&mut rng, 4, 6, kind);
        let rhs: Vec<f64> = (0..layout.dim()).map(|i| (i as f64).sin() + 0.5).collect();
        let y = apply_linv(&layout.l_tilde_operator(), &rhs, false).unwrap();
        let back = assemble_l_tilde(&layout).matvec(&y).unwrap();
        let scale = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in back.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(y.iter().fold(0.0f64, |m, x| m.max(x.abs()))));
        }
        let l = assemble_l(&layout);
        prop_assert!(l.diagonal().iter().all(|&d| d == 1.0));
        for i in 0..l.rows() {
            for j in i + 1..l.cols() {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
    }
}
