//! Interplay of the tangent projections with the restriction maps when the
//! solution's column space matches the ground truth's.
//!
//! The setup mirrors the oracle situation: `L_hat` has column space equal to
//! the true `U0` and is supported on all columns, while the clean-column
//! restriction of `L_hat` defines the reduced tangent space. Three operator
//! identities then hold and are exercised here on random instances.

use robustmc::mat::DenseMatrix;
use robustmc::operators::{
    embed, project_columns, project_tangent, restrict, ColumnSet, TangentSpace,
};
use robustmc::rng::Rng;

struct OracleSetup {
    t_hat: TangentSpace<f64>,
    t_clean: TangentSpace<f64>,
    i0: ColumnSet,
    n: usize,
}

fn oracle_setup(p: usize, n: usize, r: usize, i0_members: Vec<usize>, rng: &mut Rng) -> OracleSetup {
    let i0 = ColumnSet::new(n, i0_members).unwrap();
    // column space shared with the ground truth: L_hat = U0 B^T with B generic
    let u0 = robustmc::theory::random_orthonormal::<f64>(p, r, rng);
    let b = DenseMatrix::from_fn(n, r, |_, _| rng.gaussian());
    let l_hat = u0.matmul_transb(&b).unwrap();
    let t_hat = TangentSpace::from_low_rank(&l_hat).unwrap();
    assert_eq!(t_hat.rank(), r);
    // reduced space from the clean-column restriction
    let clean = restrict(&project_columns(&l_hat, &i0, true).unwrap(), &i0).unwrap();
    let t_clean = TangentSpace::from_low_rank(&clean).unwrap();
    assert_eq!(t_clean.rank(), r);
    OracleSetup { t_hat, t_clean, i0, n }
}

fn rel_diff(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    a.sub(b).unwrap().frob_norm() / (1.0 + a.frob_norm())
}

#[test]
fn restriction_identities_hold_on_random_instances() {
    let mut rng = Rng::new(2024);
    for trial in 0..5 {
        let p = 12;
        let n = 10;
        let r = 2;
        let setup = oracle_setup(p, n, r, vec![3, 7, 9], &mut rng);
        let OracleSetup { t_hat, t_clean, i0, n } = &setup;

        // identity 1: the clean restriction of a T_hat projection already
        // lies in the reduced tangent space
        let x = DenseMatrix::from_fn(p, *n, |_, _| rng.gaussian());
        let rx = restrict(&project_columns(&project_tangent(&x, t_hat, false).unwrap(), i0, true).unwrap(), i0)
            .unwrap();
        let projected = project_tangent(&rx, t_clean, false).unwrap();
        assert!(rel_diff(&projected, &rx) <= 1e-8, "trial {trial}: identity 1");

        // identity 2: project, restrict, embed back — T_hat cannot tell the
        // difference for matrices supported on the clean columns
        let z = project_columns(&DenseMatrix::from_fn(p, *n, |_, _| rng.gaussian()), i0, true)
            .unwrap();
        let lhs = project_tangent(
            &embed(&project_tangent(&restrict(&z, i0).unwrap(), t_clean, false).unwrap(), i0, *n)
                .unwrap(),
            t_hat,
            false,
        )
        .unwrap();
        let rhs = project_tangent(&z, t_hat, false).unwrap();
        assert!(rel_diff(&lhs, &rhs) <= 1e-8, "trial {trial}: identity 2");

        // identity 3: complement projections commute with embedding
        let inner = embed(
            &project_tangent(&restrict(&z, i0).unwrap(), t_clean, true).unwrap(),
            i0,
            *n,
        )
        .unwrap();
        let lhs = project_tangent(&inner, t_hat, true).unwrap();
        assert!(rel_diff(&lhs, &inner) <= 1e-8, "trial {trial}: identity 3");
    }
}

#[test]
fn identities_fail_without_shared_column_space() {
    // the identities are not vacuous: with an unrelated tangent space the
    // first one breaks decisively
    let mut rng = Rng::new(77);
    let p = 12;
    let n = 10;
    let r = 2;
    let setup = oracle_setup(p, n, r, vec![2, 5], &mut rng);
    let unrelated_u = robustmc::theory::random_orthonormal::<f64>(p, r, &mut rng);
    let unrelated_v = robustmc::theory::random_orthonormal::<f64>(n, r, &mut rng);
    let t_other = TangentSpace::new(unrelated_u, unrelated_v).unwrap();

    let x = DenseMatrix::from_fn(p, n, |_, _| rng.gaussian());
    let rx = restrict(
        &project_columns(&project_tangent(&x, &t_other, false).unwrap(), &setup.i0, true).unwrap(),
        &setup.i0,
    )
    .unwrap();
    let projected = project_tangent(&rx, &setup.t_clean, false).unwrap();
    assert!(rel_diff(&projected, &rx) > 1e-3);
}
