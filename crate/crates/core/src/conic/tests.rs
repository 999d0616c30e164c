use super::*;
use crate::linalg::{c, max_eigenvalue, outer_col, row_form};
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cvec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_psd(rng: &mut impl Rng, n: usize) -> CMat {
    let mut a = CMat::zeros(n, n);
    for _ in 0..n {
        a += outer_col(&random_cvec(rng, n));
    }
    a
}

#[test]
fn scalar_hermitian_is_single_nonneg_row() {
    let mut p = ConeProgram::new();
    let a = p.embed_hermitian("A", 1).unwrap();
    assert_eq!(a.num_vars(), 1);
    assert_eq!(p.num_psd_cones(), 0);
    assert_eq!(p.num_nonneg_rows(), 1);
    assert!(a.im_var(0, 0).is_none());
}

#[test]
fn zero_dimension_is_rejected() {
    let mut p = ConeProgram::new();
    assert!(matches!(
        p.embed_hermitian("A", 0),
        Err(ConicError::Dimension(_))
    ));
}

#[test]
fn duplicate_names_are_rejected() {
    let mut p = ConeProgram::new();
    p.embed_hermitian("A", 2).unwrap();
    assert_eq!(
        p.embed_hermitian("A", 3),
        Err(ConicError::DuplicateName("A".into()))
    );
    p.scalar("t").unwrap();
    assert_eq!(p.scalar("t"), Err(ConicError::DuplicateName("t".into())));
    assert_eq!(p.scalar("A"), Err(ConicError::DuplicateName("A".into())));
}

#[test]
fn embedding_block_is_structurally_symmetric() {
    let mut p = ConeProgram::new();
    let a = p.embed_hermitian("A", 3).unwrap();
    assert_eq!(a.num_vars(), 9);
    assert_eq!(p.psd_sides(), vec![6]);
    for r in 0..6 {
        for col in 0..6 {
            assert_eq!(
                a.embedding_entry(r, col),
                a.embedding_entry(col, r),
                "entry ({r},{col})"
            );
        }
    }
    // diagonal sub-blocks share variables
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(a.embedding_entry(i, j), a.embedding_entry(i + 3, j + 3));
        }
    }
}

#[test]
fn round_trip_reproduces_hermitian_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p = ConeProgram::new();
    let slice = p.embed_hermitian("A", 4).unwrap();
    for _ in 0..50 {
        let a = random_psd(&mut rng, 4);
        let mut x = vec![0.0; p.num_vars()];
        slice.assign(&a, &mut x);
        let back = slice.extract(&x);
        for (u, v) in a.iter().zip(back.iter()) {
            assert!((u - v).norm() <= 1e-10);
        }
    }
}

#[test]
fn quadratic_forms_match_direct_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..1000 {
        let n = 1 + trial % 5;
        let mut p = ConeProgram::new();
        let slice = p.embed_hermitian("A", n).unwrap();
        let a = random_psd(&mut rng, n);
        let h = random_cvec(&mut rng, n);
        let mut x = vec![0.0; p.num_vars()];
        slice.assign(&a, &mut x);
        let via_embedding = slice.row_form(&h).eval(&x);
        let direct = row_form(&h, &a);
        assert_relative_eq!(via_embedding, direct, max_relative = 1e-10);
        let via_col = slice.col_form(&h).eval(&x);
        assert_relative_eq!(
            via_col,
            crate::linalg::col_form(&h, &a),
            max_relative = 1e-10
        );
    }
}

#[test]
fn identity_is_feasible_for_the_embedding() {
    let mut p = ConeProgram::new();
    let slice = p.embed_hermitian("A", 3).unwrap();
    let mut x = vec![0.0; p.num_vars()];
    slice.assign(&CMat::identity(3, 3), &mut x);
    assert!(p.max_violation(&x) <= 0.0);
    assert_relative_eq!(slice.trace().eval(&x), 3.0);
}

#[test]
fn exp_upper_boundary_points() {
    let mut p = ConeProgram::new();
    let t = p.scalar("t").unwrap();
    let r = p.scalar("r").unwrap();
    p.exp_upper(t, AffineExpr::var(r));
    assert!(p.max_violation(&[0.0, 1.0]) < 1e-15);
    assert!(p.max_violation(&[1.0, std::f64::consts::E]) < 1e-15);
    assert!(p.max_violation(&[1.0, 2.0]) > 0.7);
    assert_eq!(p.num_exp_cones(), 1);
}

#[test]
fn exp_lower_is_non_convex() {
    let mut p = ConeProgram::new();
    let t = p.scalar("t").unwrap();
    assert_eq!(
        p.exp_lower(t, AffineExpr::constant(1.0)),
        Err(ConicError::NonConvex)
    );
    assert_eq!(p.num_exp_cones(), 0);
}

#[test]
fn solve_exp_cone_analytic_optimum() {
    let mut p = ConeProgram::new();
    let t = p.scalar("t").unwrap();
    p.exp_upper(t, AffineExpr::constant(2.0));
    p.maximize(AffineExpr::var(t));
    let sol = p.solve(&SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.value(t) - std::f64::consts::LN_2).abs() < 1e-6);
    assert!((sol.objective - std::f64::consts::LN_2).abs() < 1e-6);
}

#[test]
fn solve_trace_constrained_eigenvalue_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [2, 3, 4] {
        let base = random_cvec(&mut rng, n);
        let cmat = random_psd(&mut rng, n) - outer_col(&base) * c(0.5, 0.0);
        let cmat = crate::linalg::hermitian_part(&cmat);
        let mut p = ConeProgram::new();
        let a = p.embed_hermitian("A", n).unwrap();
        p.add_le(a.trace(), AffineExpr::constant(1.0));
        p.maximize(a.trace_product(&cmat));
        let sol = p.solve(&SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let expected = max_eigenvalue(&cmat);
        assert!(
            (sol.objective - expected).abs() < 1e-6 * expected.abs().max(1.0),
            "n={n}"
        );
        for margin in sol.psd_margins(&p) {
            assert!(margin >= -1e-7);
        }
    }
}

#[test]
fn solve_reports_infeasible_pair() {
    let mut p = ConeProgram::new();
    let x = p.scalar("x").unwrap();
    p.add_ge(AffineExpr::var(x), AffineExpr::constant(1.0));
    p.add_le(AffineExpr::var(x), AffineExpr::constant(0.0));
    p.maximize(AffineExpr::var(x));
    let sol = p.solve(&SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(sol.objective.is_nan());
}

#[test]
fn solve_reports_unbounded() {
    let mut p = ConeProgram::new();
    let x = p.scalar("x").unwrap();
    p.add_ge(AffineExpr::var(x), AffineExpr::constant(1.0));
    p.maximize(AffineExpr::var(x));
    let sol = p.solve(&SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

#[test]
fn standard_form_rows_follow_cone_order() {
    let mut p = ConeProgram::new();
    let x = p.scalar("x").unwrap();
    let a = p.embed_hermitian("A", 2).unwrap();
    p.add_eq(AffineExpr::var(x), AffineExpr::constant(1.0));
    p.exp_upper(x, a.trace());
    let f = p.standard_form().unwrap();
    assert_eq!(
        f.cones,
        vec![
            ConeKind::Zero(1),
            ConeKind::Exponential,
            ConeKind::PsdTriangle(4)
        ]
    );
    assert_eq!(f.num_rows(), 1 + 3 + 10);
    assert_eq!(f.row_ranges().last().unwrap().end, f.num_rows());
}

#[test]
fn dump_mentions_every_cone() {
    let mut p = ConeProgram::new();
    let t = p.scalar("t").unwrap();
    let a = p.embed_hermitian("A", 2).unwrap();
    p.exp_upper(t, a.trace());
    p.add_le(a.trace(), AffineExpr::constant(1.0));
    p.maximize(AffineExpr::var(t));
    let text = p.dump();
    for tag in ["OBJSENSE MAX", "L+ 1", "EXP 3", "SVECPSD 4", "A.im[0,1]"] {
        assert!(text.contains(tag), "missing {tag}:\n{text}");
    }
}

#[test]
fn affine_algebra_merges_terms() {
    let (x, y) = (VarId(0), VarId(1));
    let e = AffineExpr::var(x) * 2.0 + AffineExpr::var(y) - AffineExpr::var(x) * 2.0
        + AffineExpr::constant(3.0);
    assert_eq!(e.terms(), &[(y, 1.0)]);
    assert_eq!(e.coeff(x), 0.0);
    assert_eq!(e.eval(&[5.0, 7.0]), 10.0);
    assert_eq!((-e).constant_term(), -3.0);
}
