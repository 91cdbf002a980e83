mod common;

use common::{inverse, max_gap, pencil_eigs_by_bisection, sym_eigs_by_bisection};
use wlsq_core::fourdvar::{
    apply_linv, assemble_l, assemble_l_tilde, assemble_state_system, error_blocks, Approximation,
    BlockCovariances, FourDVarLayout, VariantKind,
};
use wlsq_core::linalg::{generalized_eigs, spectral_norm, sym_eigen, DenseMatrix};
use wlsq_core::random::{
    gaussian_matrix, gaussian_vector, instance_rng, random_layout, random_spd,
};
use wlsq_core::theory::{normal_matrix, preconditioned_spectrum};

#[test]
fn jacobi_matches_inertia_bisection_on_random_symmetric() {
    for seed in 0..5 {
        let mut rng = instance_rng(seed, 0);
        let g = gaussian_matrix(&mut rng, 6, 6);
        let m = g.add(&g.transpose()).unwrap().scale(0.5);
        let ours = sym_eigen(&m).unwrap();
        let oracle = sym_eigs_by_bisection(&m, 1e-12);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn generalized_eigs_match_pencil_roots() {
    let mut rng = instance_rng(11, 0);
    let n = random_spd(&mut rng, 4, 50.0);
    let p = random_spd(&mut rng, 4, 20.0);
    let ours = generalized_eigs(&n, &p).unwrap();
    let oracle = pencil_eigs_by_bisection(n.matrix(), p.matrix(), 0.0, 1e3, 1e-12);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-8 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn normal_matrix_matches_explicit_inverse() {
    let mut rng = instance_rng(5, 0);
    let a = gaussian_matrix(&mut rng, 5, 5);
    let w = random_spd(&mut rng, 5, 30.0);
    let ours = normal_matrix(&a, &w).unwrap();
    let oracle = a
        .transpose()
        .matmul(&inverse(w.matrix()))
        .unwrap()
        .matmul(&a)
        .unwrap();
    let scale = oracle.max_abs();
    assert!(max_gap(ours.matrix(), &oracle) <= 1e-10 * scale);
}

#[test]
fn preconditioned_spectrum_matches_pencil_of_explicit_products() {
    let mut rng = instance_rng(6, 0);
    let a = gaussian_matrix(&mut rng, 4, 4);
    let a_tilde = a.add(&gaussian_matrix(&mut rng, 4, 4).scale(0.1)).unwrap();
    let w = random_spd(&mut rng, 4, 10.0);
    let winv = inverse(w.matrix());
    let n = a
        .transpose()
        .matmul(&winv)
        .unwrap()
        .matmul(&a)
        .unwrap()
        .symmetrized();
    let p = a_tilde
        .transpose()
        .matmul(&winv)
        .unwrap()
        .matmul(&a_tilde)
        .unwrap()
        .symmetrized();
    let ours = preconditioned_spectrum(&a, &a_tilde, &w).unwrap();
    let oracle = pencil_eigs_by_bisection(&n, &p, 0.0, 100.0, 1e-13);
    for (x, y) in ours.iter().zip(&oracle) {
        assert!((x - y).abs() <= 1e-8 * y.max(1.0), "{x} vs {y}");
    }
}

#[test]
fn apply_linv_matches_dense_solve() {
    let mut rng = instance_rng(9, 0);
    let models: Vec<DenseMatrix> = (0..4)
        .map(|_| gaussian_matrix(&mut rng, 3, 3).scale(0.5))
        .collect();
    let tilde: Vec<DenseMatrix> = models
        .iter()
        .map(|m| m.add(&gaussian_matrix(&mut rng, 3, 3).scale(0.1)).unwrap())
        .collect();
    let layout = FourDVarLayout::new(3, models, Approximation::Custom(tilde)).unwrap();
    let lt = assemble_l_tilde(&layout);
    let inv = inverse(&lt);
    let rhs = gaussian_vector(&mut rng, layout.dim());
    let op = layout.l_tilde_operator();
    let forward = apply_linv(&op, &rhs, false).unwrap();
    let backward = apply_linv(&op, &rhs, true).unwrap();
    let forward_oracle = inv.matvec(&rhs).unwrap();
    let backward_oracle = inv.transpose().matvec(&rhs).unwrap();
    for (x, y) in forward
        .iter()
        .zip(&forward_oracle)
        .chain(backward.iter().zip(&backward_oracle))
    {
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
    }
    let recovered = lt.matvec(&forward).unwrap();
    for (x, y) in recovered.iter().zip(&rhs) {
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
    }
}

#[test]
fn l_places_negated_models_below_the_diagonal() {
    let mut rng = instance_rng(2, 0);
    let (n, windows) = (2, 3);
    let models: Vec<DenseMatrix> = (0..windows)
        .map(|_| gaussian_matrix(&mut rng, n, n))
        .collect();
    let layout = FourDVarLayout::new(n, models.clone(), Approximation::Zero).unwrap();
    let l = assemble_l(&layout);
    assert_eq!(l.rows(), n * (windows + 1));
    for i in 0..l.rows() {
        for j in 0..l.cols() {
            let (bi, bj) = (i / n, j / n);
            let expected = if i == j {
                1.0
            } else if bi == bj + 1 {
                -models[bj][(i % n, j % n)]
            } else {
                0.0
            };
            assert_eq!(l[(i, j)], expected, "entry ({i}, {j})");
        }
    }
    assert_eq!(assemble_l_tilde(&layout), DenseMatrix::identity(l.rows()));
}

#[test]
fn error_blocks_match_l_times_dense_inverse() {
    for i in 0..30u64 {
        let kind = [
            VariantKind::Zero,
            VariantKind::Identity,
            VariantKind::Custom,
        ][(i % 3) as usize];
        let mut rng = instance_rng(77, i);
        let layout = random_layout(&mut rng, 4, 6, kind);
        let oracle = assemble_l(&layout)
            .matmul(&inverse(&assemble_l_tilde(&layout)))
            .unwrap()
            .sub(&DenseMatrix::identity(layout.dim()))
            .unwrap();
        assert!(
            max_gap(&error_blocks(&layout), &oracle) <= 1e-12,
            "{kind} layout {i}"
        );
    }
}

#[test]
fn identity_approximation_error_display_for_commuting_scalars() {
    // n = 1: E_ij = (1 − M_i) for every j < i.
    let ms = [0.3, 0.7, 1.2];
    let layout = FourDVarLayout::new(
        1,
        ms.iter()
            .map(|&m| DenseMatrix::from_rows(&[vec![m]]).unwrap())
            .collect(),
        Approximation::Identity,
    )
    .unwrap();
    let e = error_blocks(&layout);
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i > j { 1.0 - ms[i - 1] } else { 0.0 };
            assert!((e[(i, j)] - expected).abs() < 1e-15);
        }
    }
}

#[test]
fn zero_variant_norm_is_largest_model_norm() {
    let mut rng = instance_rng(3, 0);
    let models: Vec<DenseMatrix> = (0..5).map(|_| gaussian_matrix(&mut rng, 3, 3)).collect();
    let expected = models
        .iter()
        .map(|m| spectral_norm(m).unwrap())
        .fold(0.0, f64::max);
    let layout = FourDVarLayout::new(3, models, Approximation::Zero).unwrap();
    let e = spectral_norm(&error_blocks(&layout)).unwrap();
    assert!((e - expected).abs() <= 1e-10 * expected);
}

#[test]
fn state_system_with_observations_adds_identity() {
    let layout = FourDVarLayout::new(
        1,
        vec![DenseMatrix::from_rows(&[vec![2.0]]).unwrap()],
        Approximation::Zero,
    )
    .unwrap();
    let cov = BlockCovariances::scaled_identity(&layout, 1.0, 1.0)
        .unwrap()
        .with_identity_observations(&layout, 1.0)
        .unwrap();
    let (m, rhs) = assemble_state_system(&layout, &cov, &[1.0, 0.0], Some(&[0.5, 0.5])).unwrap();
    let expected = DenseMatrix::from_rows(&[vec![6.0, -2.0], vec![-2.0, 2.0]]).unwrap();
    assert!(max_gap(m.matrix(), &expected) < 1e-14);
    // Lᵀ b + d with b = (1, 0): (1, 0) + (0.5, 0.5).
    assert!((rhs[0] - 1.5).abs() < 1e-14 && (rhs[1] - 0.5).abs() < 1e-14);
}
