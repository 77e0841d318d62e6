//! Thin SVD via a symmetric eigendecomposition of the Gram matrix.
//!
//! The input `A` (or its transpose, whichever is taller) is reduced through
//! `B = G^T G`; `B` is tridiagonalized by Householder reflections and
//! diagonalized by implicit-shift QL sweeps. Right singular vectors are the
//! eigenvectors, singular values are recomputed as `||G v||` (more accurate
//! than square roots of the eigenvalues), and left vectors are `G v / sigma`
//! with a deterministic orthonormal completion for numerically zero singular
//! values. Everything is deterministic for a fixed input.

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, SvdFactors};
use crate::scalar::Scalar;

/// Iteration cap per eigenvalue in the QL sweep. Exceeding it aborts the
/// decomposition with [`Error::NoConvergence`] instead of returning garbage.
pub(crate) const EIG_ITER_CAP: usize = 64;

/// Relative threshold below which a singular value is treated as zero when a
/// rank-r basis is extracted from solver output.
pub const NUMERICAL_RANK_REL_TOL: f64 = 1e-9;

fn sign_of<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form with
/// accumulation of the orthogonal transformation in `z`.
fn tred2<T: Scalar>(z: &mut DenseMatrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let mut scale = T::zero();
            for k in 0..=l {
                scale = scale + z.get(i, k).abs();
            }
            if scale == T::zero() {
                e[i] = z.get(i, l);
            } else {
                for k in 0..=l {
                    let v = z.get(i, k) / scale;
                    z.set(i, k, v);
                    h = h + v * v;
                }
                let mut f = z.get(i, l);
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h = h - f * g;
                z.set(i, l, f - g);
                f = T::zero();
                for j in 0..=l {
                    z.set(j, i, z.get(i, j) / h);
                    let mut g2 = T::zero();
                    for k in 0..=j {
                        g2 = g2 + z.get(j, k) * z.get(i, k);
                    }
                    for k in (j + 1)..=l {
                        g2 = g2 + z.get(k, j) * z.get(i, k);
                    }
                    e[j] = g2 / h;
                    f = f + e[j] * z.get(i, j);
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let fj = z.get(i, j);
                    let gj = e[j] - hh * fj;
                    e[j] = gj;
                    for k in 0..=j {
                        let v = z.get(j, k) - (fj * e[k] + gj * z.get(i, k));
                        z.set(j, k, v);
                    }
                }
            }
        } else {
            e[i] = z.get(i, l);
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g = g + z.get(i, k) * z.get(k, j);
                }
                for k in 0..i {
                    let v = z.get(k, j) - g * z.get(k, i);
                    z.set(k, j, v);
                }
            }
        }
        d[i] = z.get(i, i);
        z.set(i, i, T::one());
        for j in 0..i {
            z.set(j, i, T::zero());
            z.set(i, j, T::zero());
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotating the
/// accumulated eigenvector matrix `z` along.
fn tql2<T: Scalar>(d: &mut [T], e: &mut [T], z: &mut DenseMatrix<T>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::cast(2.0);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > EIG_ITER_CAP {
                return Err(Error::NoConvergence { cap: EIG_ITER_CAP });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + sign_of(r, g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for iu in (l..m).rev() {
                let mut f = s * e[iu];
                let b = c * e[iu];
                r = f.hypot(g);
                e[iu + 1] = r;
                if r == T::zero() {
                    d[iu + 1] = d[iu + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + two * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                for k in 0..z.rows() {
                    f = z.get(k, iu + 1);
                    z.set(k, iu + 1, s * z.get(k, iu) + c * f);
                    z.set(k, iu, c * z.get(k, iu) - s * f);
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix: eigenvalues descending,
/// eigenvectors as the columns of the returned matrix.
pub(crate) fn sym_eigen_desc<T: Scalar>(
    a: &DenseMatrix<T>,
) -> Result<(Vec<T>, DenseMatrix<T>)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch("eigendecomposition needs a square matrix".into()));
    }
    let mut z = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    tql2(&mut d, &mut e, &mut z)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));
    let vals: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let vecs = DenseMatrix::from_fn(n, n, |i, j| z.get(i, order[j]));
    Ok((vals, vecs))
}

/// Fills the columns of `u` not marked in `filled` with a deterministic
/// orthonormal completion built from standard basis vectors.
fn complete_orthonormal<T: Scalar>(u: &mut DenseMatrix<T>, filled: &[bool]) {
    let m = u.rows();
    let k = u.cols();
    let mut done: Vec<bool> = filled.to_vec();
    let mut next_candidate = 0usize;
    for j in 0..k {
        if done[j] {
            continue;
        }
        let mut accepted = false;
        while next_candidate < m {
            let cand = next_candidate;
            next_candidate += 1;
            let mut v = vec![T::zero(); m];
            v[cand] = T::one();
            // two orthogonalization passes against all settled columns
            for _ in 0..2 {
                for q in 0..k {
                    if !done[q] {
                        continue;
                    }
                    let mut proj = T::zero();
                    for i in 0..m {
                        proj = proj + u.get(i, q) * v[i];
                    }
                    for i in 0..m {
                        v[i] = v[i] - proj * u.get(i, q);
                    }
                }
            }
            let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm > T::cast(0.3) {
                for i in 0..m {
                    u.set(i, j, v[i] / norm);
                }
                done[j] = true;
                accepted = true;
                break;
            }
        }
        // the span always leaves room (k <= m), so a candidate must exist
        debug_assert!(accepted, "orthonormal completion exhausted candidates");
    }
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`
/// (which must have orthonormal columns), deterministic for a fixed input.
pub(crate) fn orthonormal_complement<T: Scalar>(
    basis: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let m = basis.rows();
    let k = basis.cols();
    if k > m {
        return Err(Error::DimensionMismatch("basis wider than its ambient space".into()));
    }
    let mut full = DenseMatrix::zeros(m, m);
    for j in 0..k {
        for i in 0..m {
            full.set(i, j, basis.get(i, j));
        }
    }
    let mut filled = vec![false; m];
    for f in filled.iter_mut().take(k) {
        *f = true;
    }
    complete_orthonormal(&mut full, &filled);
    Ok(DenseMatrix::from_fn(m, m - k, |i, j| full.get(i, k + j)))
}

/// One modified Gram-Schmidt pass to clean up cross-column orthogonality.
/// Directions only move by amounts on the order of the defect being removed.
fn polish_columns<T: Scalar>(u: &mut DenseMatrix<T>) {
    let m = u.rows();
    let k = u.cols();
    for j in 0..k {
        for q in 0..j {
            let mut proj = T::zero();
            for i in 0..m {
                proj = proj + u.get(i, q) * u.get(i, j);
            }
            for i in 0..m {
                let v = u.get(i, j) - proj * u.get(i, q);
                u.set(i, j, v);
            }
        }
        let norm = (0..m).map(|i| u.get(i, j) * u.get(i, j)).sum::<T>().sqrt();
        if norm > T::zero() {
            for i in 0..m {
                u.set(i, j, u.get(i, j) / norm);
            }
        }
    }
}

/// Thin SVD with `k = min(rows, cols)`.
pub fn svd<T: Scalar>(a: &DenseMatrix<T>) -> Result<SvdFactors<T>> {
    if !a.is_finite() {
        return Err(Error::Precondition("svd input must be finite".into()));
    }
    let (p, n) = a.shape();
    let k = p.min(n);
    if k == 0 {
        return Ok(SvdFactors {
            u: DenseMatrix::zeros(p, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(n, 0),
        });
    }
    let transposed = p < n;
    let g = if transposed { a.transpose() } else { a.clone() };
    let m = g.rows();
    let gram = g.tmatmul(&g)?;
    let (_, z) = sym_eigen_desc(&gram)?;
    let w = g.matmul(&z)?;

    let sig: Vec<T> = (0..k).map(|j| w.col_norm(j)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).expect("finite singular values"));
    let sigma_max = sig[order[0]];
    let trust = sigma_max * T::cast(1e-13);

    let mut u = DenseMatrix::zeros(m, k);
    let mut filled = vec![false; k];
    let mut sigma = vec![T::zero(); k];
    for (jj, &j) in order.iter().enumerate() {
        sigma[jj] = sig[j];
        if sig[j] > trust {
            for i in 0..m {
                u.set(i, jj, w.get(i, j) / sig[j]);
            }
            filled[jj] = true;
        }
    }
    complete_orthonormal(&mut u, &filled);
    polish_columns(&mut u);
    let v = DenseMatrix::from_fn(z.rows(), k, |i, jj| z.get(i, order[jj]));

    let factors = if transposed {
        SvdFactors { u: v, sigma, v: u }
    } else {
        SvdFactors { u, sigma, v }
    };
    Ok(factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::NormKind;
    use crate::rng::Rng;

    fn check_factors(a: &DenseMatrix<f64>, f: &SvdFactors<f64>, rel_tol: f64) {
        let k = f.sigma.len();
        assert_eq!(k, a.rows().min(a.cols()));
        // orthonormal columns
        for (b, dim) in [(&f.u, a.rows()), (&f.v, a.cols())] {
            assert_eq!(b.rows(), dim);
            let g = b.tmatmul(b).unwrap();
            for i in 0..k {
                for j in 0..k {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g.get(i, j) - want).abs() < 1e-10,
                        "gram[{i}][{j}] = {}",
                        g.get(i, j)
                    );
                }
            }
        }
        // sorted, nonnegative
        for j in 0..k {
            assert!(f.sigma[j] >= 0.0);
            if j > 0 {
                assert!(f.sigma[j - 1] >= f.sigma[j]);
            }
        }
        let err = f.reconstruct().sub(a).unwrap().frob_norm();
        let scale = a.frob_norm().max(1e-300);
        assert!(err / scale <= rel_tol, "reconstruction error {}", err / scale);
    }

    #[test]
    fn identity_and_diagonal() {
        let i2: DenseMatrix<f64> = DenseMatrix::identity(2);
        let f = svd(&i2).unwrap();
        assert!((f.sigma[0] - 1.0).abs() < 1e-14 && (f.sigma[1] - 1.0).abs() < 1e-14);
        check_factors(&i2, &f, 1e-12);

        let d: DenseMatrix<f64> = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 0.0]]).unwrap();
        let f = svd(&d).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!(f.sigma[1].abs() < 1e-12);
        check_factors(&d, &f, 1e-12);
    }

    #[test]
    fn random_rectangular_reconstruction() {
        let mut rng = Rng::new(3);
        let a = DenseMatrix::from_fn(5, 4, |_, _| rng.gaussian());
        let f = svd(&a).unwrap();
        check_factors(&a, &f, 1e-10);
        // wide orientation too
        let at = a.transpose();
        let ft = svd(&at).unwrap();
        check_factors(&at, &ft, 1e-10);
        for j in 0..4 {
            assert!((f.sigma[j] - ft.sigma[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn low_rank_input_keeps_orthonormal_factors() {
        let mut rng = Rng::new(9);
        let a = DenseMatrix::from_fn(12, 3, |_, _| rng.gaussian());
        let b = DenseMatrix::from_fn(10, 3, |_, _| rng.gaussian());
        let l = a.matmul_transb(&b).unwrap(); // rank 3 of size 12x10
        let f = svd(&l).unwrap();
        check_factors(&l, &f, 1e-10);
        assert_eq!(f.numerical_rank(NUMERICAL_RANK_REL_TOL), 3);
    }

    #[test]
    fn zero_matrix() {
        let z: DenseMatrix<f64> = DenseMatrix::zeros(4, 3);
        let f = svd(&z).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
        check_factors(&z, &f, 1.0); // reconstruction trivially zero
    }

    #[test]
    fn svd_is_deterministic() {
        let mut rng = Rng::new(17);
        let a = DenseMatrix::from_fn(8, 8, |_, _| rng.gaussian());
        let f1 = svd(&a).unwrap();
        let f2 = svd(&a).unwrap();
        assert_eq!(f1.u, f2.u);
        assert_eq!(f1.sigma, f2.sigma);
        assert_eq!(f1.v, f2.v);
    }

    #[test]
    fn nuclear_matches_trace_identity() {
        // ||A||_* equals trace of sqrt(A^T A); cross-check on a matrix with
        // known singular values built from rotations
        let mut rng = Rng::new(31);
        let a = DenseMatrix::from_fn(6, 6, |_, _| rng.gaussian());
        let f = svd(&a).unwrap();
        let nuc: f64 = f.sigma.iter().sum();
        assert!((a.norm(NormKind::Nuclear) - nuc).abs() < 1e-10);
    }

    #[test]
    fn eigen_on_symmetric_matrix() {
        let mut rng = Rng::new(41);
        let g = DenseMatrix::from_fn(7, 7, |_, _| rng.gaussian());
        let s = g.add(&g.transpose()).unwrap().scale(0.5);
        let (vals, vecs) = sym_eigen_desc(&s).unwrap();
        // descending
        for w in vals.windows(2) {
            assert!(w[0] >= w[1]);
        }
        // S V = V diag(vals)
        let sv = s.matmul(&vecs).unwrap();
        for j in 0..7 {
            for i in 0..7 {
                assert!((sv.get(i, j) - vals[j] * vecs.get(i, j)).abs() < 1e-9);
            }
        }
    }
}
