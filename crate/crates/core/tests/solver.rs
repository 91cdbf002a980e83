use wlsq_core::fourdvar::{Approximation, BlockCovariances, FourDVarLayout, VariantKind};
use wlsq_core::gallery::{example_instance, ExampleVariant, VariantTag};
use wlsq_core::krylov::{
    cg, fourdvar_benchmark_rhs, fourdvar_operators, pcg, wlsq_benchmark_rhs, wlsq_operators,
    IdentityOperator, LinearOperator, PcgOptions,
};
use wlsq_core::linalg::{dot, norm2, DenseMatrix};
use wlsq_core::random::{
    gaussian_matrix, gaussian_vector, instance_rng, random_covariances, random_instance,
    random_layout, random_orthogonal,
};

fn three_level_system() -> DenseMatrix {
    let mut rng = instance_rng(4, 0);
    let q = random_orthogonal(&mut rng, 50);
    let levels: Vec<f64> = (0..50).map(|i| [1.0, 2.0, 3.0][i % 3]).collect();
    let mut half = q.transpose();
    for (i, l) in levels.iter().enumerate() {
        for j in 0..50 {
            half[(i, j)] *= l.sqrt();
        }
    }
    half.gram()
}

#[test]
fn three_distinct_eigenvalues_need_at_most_three_iterations() {
    let a = three_level_system();
    let rhs = gaussian_vector(&mut instance_rng(4, 1), 50);
    let t = cg(&a, &rhs, PcgOptions::default()).unwrap();
    assert!(t.converged);
    assert!(t.iterations <= 3, "{} iterations", t.iterations);
    assert_eq!(t.residual_norms.len(), t.iterations + 1);
}

/// Textbook CG with the same operation order as the library.
fn reference_cg(a: &DenseMatrix, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let n = b.len();
    let target = tol * norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut k = 0;
    while k < max_iter {
        let ap = a.matvec(&p).unwrap();
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
        }
        for i in 0..n {
            r[i] += -alpha * ap[i];
        }
        k += 1;
        let ax = a.matvec(&x).unwrap();
        let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, v)| bi - v).collect();
        if norm2(&res) <= target {
            break;
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    (x, k)
}

#[test]
fn identity_preconditioner_reproduces_plain_cg_bitwise() {
    let mut rng = instance_rng(8, 0);
    let g = gaussian_matrix(&mut rng, 20, 20);
    let mut a = g.gram();
    for i in 0..20 {
        a[(i, i)] += 1.0;
    }
    let rhs = gaussian_vector(&mut rng, 20);
    let t = pcg(&a, &IdentityOperator(20), &rhs, PcgOptions::default()).unwrap();
    let (x, k) = reference_cg(&a, &rhs, 1e-8, 200);
    assert_eq!(t.iterations, k);
    assert_eq!(t.solution, x);
}

#[test]
fn exact_least_squares_preconditioner_takes_one_iteration() {
    for i in 0..20 {
        let inst = random_instance(13, i, 10);
        let (s, p) = wlsq_operators(&inst.a, &inst.a, &inst.w).unwrap();
        let rhs = gaussian_vector(&mut instance_rng(13, 1000 + i), inst.a.rows());
        let t = pcg(&s, &p, &rhs, PcgOptions::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations, 1, "instance {i}");
    }
}

#[test]
fn exact_background_preconditioner_takes_one_iteration() {
    for i in 0..20 {
        let mut rng = instance_rng(14, i);
        let layout = random_layout(&mut rng, 4, 6, VariantKind::Zero).exact();
        let cov = random_covariances(&mut rng, &layout, 100.0);
        let (s, p) = fourdvar_operators(&layout, &cov).unwrap();
        let rhs = fourdvar_benchmark_rhs(&layout, &cov, i).unwrap();
        let t = pcg(&s, &p, &rhs, PcgOptions::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations, 1, "layout {i}");
    }
}

#[test]
fn vanishing_models_make_zero_variant_exact() {
    let layout =
        FourDVarLayout::new(3, vec![DenseMatrix::zeros(3, 3); 4], Approximation::Zero).unwrap();
    let cov = BlockCovariances::scaled_identity(&layout, 1.0, 1.0).unwrap();
    let (s, p) = fourdvar_operators(&layout, &cov).unwrap();
    let rhs = gaussian_vector(&mut instance_rng(1, 0), layout.dim());
    assert_eq!(s.apply(&rhs), rhs);
    assert_eq!(p.apply(&rhs), rhs);
    let t = pcg(&s, &p, &rhs, PcgOptions::default()).unwrap();
    assert_eq!(t.iterations, 1);
}

#[test]
fn operators_are_linear_and_symmetric() {
    let inst = random_instance(15, 3, 8);
    let (s, p) = wlsq_operators(&inst.a, &inst.a_tilde, &inst.w).unwrap();
    let mut rng = instance_rng(15, 99);
    let layout = random_layout(&mut rng, 3, 4, VariantKind::Identity);
    let cov = random_covariances(&mut rng, &layout, 10.0);
    let (fs, fp) = fourdvar_operators(&layout, &cov).unwrap();
    let ops: [&dyn LinearOperator; 4] = [&s, &p, &fs, &fp];
    for op in ops {
        let n = op.dim();
        let x = gaussian_vector(&mut rng, n);
        let y = gaussian_vector(&mut rng, n);
        let (a, b) = (1.7, -0.3);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let lhs = op.apply(&combo);
        let (ax, ay) = (op.apply(&x), op.apply(&y));
        let scale = norm2(&ax) + norm2(&ay);
        for i in 0..n {
            assert!((lhs[i] - (a * ax[i] + b * ay[i])).abs() <= 1e-10 * scale);
        }
        assert!(
            (dot(&ax, &y) - dot(&x, &ay)).abs()
                <= 1e-10 * (norm2(&ax) * norm2(&y) + norm2(&x) * norm2(&ay))
        );
    }
}

#[test]
fn converged_solutions_pass_the_remultiplication_check() {
    for i in 0..30 {
        let inst = random_instance(16, i, 8);
        let (s, p) = wlsq_operators(&inst.a, &inst.a_tilde, &inst.w).unwrap();
        let rhs = wlsq_benchmark_rhs(&inst.a, &inst.w, i).unwrap();
        let tol = 1e-8;
        let t = pcg(&s, &p, &rhs, PcgOptions::with_tol(tol)).unwrap();
        if t.converged {
            let res: Vec<f64> = s
                .apply(&t.solution)
                .iter()
                .zip(&rhs)
                .map(|(a, b)| a - b)
                .collect();
            assert!(norm2(&res) <= 10.0 * tol * norm2(&rhs));
            assert!(t.final_relative_residual(norm2(&rhs)) <= tol);
        }
        assert!(t.iterations <= 10 * s.dim());
    }
}

#[test]
fn well_conditioned_systems_converge_within_the_default_cap() {
    // Finite termination after `dim` steps holds only in exact arithmetic;
    // in double precision a few extra steps are normal.
    for i in 0..40 {
        let mut rng = instance_rng(17, i);
        let n = 5 + (i as usize % 20);
        let kappa = [1e1, 1e3, 1e6][i as usize % 3];
        let w = wlsq_core::random::random_spd(&mut rng, n, kappa);
        let rhs = gaussian_vector(&mut rng, n);
        let t = cg(&w, &rhs, PcgOptions::default()).unwrap();
        assert!(t.converged, "dimension {n}, condition {kappa}");
        assert!(t.iterations <= 10 * n);
        let res: Vec<f64> = LinearOperator::apply(&w, &t.solution)
            .iter()
            .zip(&rhs)
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm2(&res) <= 1e-8 * norm2(&rhs));
    }
}

#[test]
fn indefinite_operator_reports_breakdown() {
    let m = DenseMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
    let err = cg(&m, &[1.0, 1.0], PcgOptions::default()).unwrap_err();
    assert!(
        matches!(err, wlsq_core::Error::BreakdownDetected { .. }),
        "{err:?}"
    );
}

#[test]
fn plus2_iterations_grow_with_alpha() {
    let mut last = 0;
    for alpha in [1.0, 10.0, 100.0] {
        let inst = example_instance(ExampleVariant::new(VariantTag::Plus2, alpha).unwrap());
        let (s, p) = wlsq_operators(&inst.a, &inst.a_tilde, &inst.w).unwrap();
        let rhs = wlsq_benchmark_rhs(&inst.a, &inst.w, 42).unwrap();
        let t = pcg(&s, &p, &rhs, PcgOptions::default()).unwrap();
        assert!(t.converged);
        assert!(t.iterations >= last);
        last = t.iterations;
    }
}

#[test]
fn stable_iterations_stay_bounded() {
    for alpha in [1.0, 10.0, 100.0, 1000.0] {
        let inst = example_instance(ExampleVariant::new(VariantTag::Stable, alpha).unwrap());
        let (s, p) = wlsq_operators(&inst.a, &inst.a_tilde, &inst.w).unwrap();
        let rhs = wlsq_benchmark_rhs(&inst.a, &inst.w, 42).unwrap();
        let t = pcg(&s, &p, &rhs, PcgOptions::default()).unwrap();
        assert!(t.converged);
        assert!(
            t.iterations <= 3,
            "alpha {alpha}: {} iterations",
            t.iterations
        );
    }
}
