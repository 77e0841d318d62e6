//! Augmented Lagrange multiplier solver for
//!
//! ```text
//! minimize   ||L||_* + lambda * ||C||_{1,2}
//! subject to P_Omega(L + C) = P_Omega(M)
//! ```
//!
//! Each iteration shrinks the singular values of the current residual to
//! update `L`, shrinks `C` under the configured sparsity mode, refreshes the
//! compensation variable `E` on the unobserved entries, takes a multiplier
//! step on `Y`, and grows the penalty weight geometrically. Every update is
//! positively homogeneous, so with the automatic penalty scale the solve
//! commutes with rescaling the input.

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, NormKind};
use crate::operators::{self, ColumnSet, ObservationMask};
use crate::scalar::Scalar;

/// How the corruption term `C` is penalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SparsityMode {
    /// Column-group penalty `lambda * ||C||_{1,2}`; corruption is confined
    /// to whole columns.
    ColumnSparse,
    /// Entrywise penalty `lambda * ||C||_1`; the low-rank-plus-sparse
    /// baseline.
    EntrySparse,
    /// No corruption term: plain nuclear-norm completion (`C` pinned to 0,
    /// `lambda` ignored).
    CompletionOnly,
}

impl SparsityMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "column_sparse" => Ok(Self::ColumnSparse),
            "entry_sparse" => Ok(Self::EntrySparse),
            "completion_only" => Ok(Self::CompletionOnly),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ColumnSparse => "column_sparse",
            Self::EntrySparse => "entry_sparse",
            Self::CompletionOnly => "completion_only",
        }
    }
}

/// Solver hyperparameters. `u0 = None` uses the scale-free default
/// `1 / ||M||_{1,2}`; `support_threshold = None` uses
/// `1e-6 * ||M||_F / sqrt(n)`, which sits well below any genuine corrupted
/// column while staying scale-relative.
#[derive(Clone, Debug)]
pub struct SolverConfig<T> {
    pub lambda: T,
    pub u0: Option<T>,
    pub alpha: T,
    pub tol: T,
    pub max_iter: usize,
    pub mode: SparsityMode,
    pub support_threshold: Option<T>,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(lambda: T, mode: SparsityMode) -> Self {
        Self {
            lambda,
            u0: None,
            alpha: T::cast(1.1),
            tol: T::cast(1e-6),
            max_iter: 500,
            mode,
            support_threshold: None,
        }
    }

    // negated comparisons so NaN parameters fail validation
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > T::zero() && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        if !(self.alpha > T::one()) {
            return Err(Error::InvalidParameter("alpha must exceed 1".into()));
        }
        if !(self.tol > T::zero() && self.tol < T::one()) {
            return Err(Error::InvalidParameter("tol must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if let Some(u0) = self.u0 {
            if !(u0 > T::zero() && u0.is_finite()) {
                return Err(Error::InvalidParameter("u0 must be positive".into()));
            }
        }
        if let Some(t) = self.support_threshold {
            if !(t >= T::zero()) {
                return Err(Error::InvalidParameter("support_threshold must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Column-support threshold used when extracting the recovered solution.
    pub fn support_threshold_for(&self, m_obs: &DenseMatrix<T>) -> T {
        self.support_threshold.unwrap_or_else(|| {
            T::cast(1e-6) * m_obs.frob_norm() / T::from_count(m_obs.cols()).sqrt()
        })
    }
}

/// Iterates produced by [`solve`]. On convergence the feasibility residual
/// `||M - E - L - C||_F / ||M||_F` of the final iterate is at most `tol`;
/// `E` is supported entirely off the observation mask.
#[derive(Clone, Debug)]
pub struct SolverResult<T> {
    pub l: DenseMatrix<T>,
    pub c: DenseMatrix<T>,
    pub e: DenseMatrix<T>,
    pub y: DenseMatrix<T>,
    pub iterations: usize,
    pub residual_trace: Vec<T>,
    pub converged: bool,
}

/// Post-processed solver output: the recovered low-rank matrix, zeroed on
/// the identified corrupted columns.
#[derive(Clone, Debug)]
pub struct RecoveredSolution<T> {
    pub l: DenseMatrix<T>,
    pub support: ColumnSet,
}

/// Runs the multiplier loop on `P_Omega(M)`. The input must be zero off the
/// mask (unobserved entries are represented as explicit zeros).
pub fn solve<T: Scalar>(
    m_obs: &DenseMatrix<T>,
    omega: &ObservationMask,
    cfg: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    cfg.validate()?;
    if m_obs.shape() != (omega.rows(), omega.cols()) {
        return Err(Error::DimensionMismatch("observations and mask disagree".into()));
    }
    let flags = omega.to_flags();
    for (k, &v) in m_obs.data().iter().enumerate() {
        if !flags[k] && v != T::zero() {
            return Err(Error::Precondition(
                "unobserved entries of the input must be zero".into(),
            ));
        }
    }

    let (p, n) = m_obs.shape();
    let m_norm = m_obs.frob_norm();
    if m_norm == T::zero() {
        // Degenerate all-zero input: the zero solution is optimal and the
        // automatic penalty scale is undefined.
        return Ok(SolverResult {
            l: DenseMatrix::zeros(p, n),
            c: DenseMatrix::zeros(p, n),
            e: DenseMatrix::zeros(p, n),
            y: DenseMatrix::zeros(p, n),
            iterations: 1,
            residual_trace: vec![T::zero()],
            converged: true,
        });
    }

    let mut u = match cfg.u0 {
        Some(u0) => u0,
        None => T::one() / m_obs.norm(NormKind::OneTwo),
    };
    let mut l = DenseMatrix::zeros(p, n);
    let mut c = DenseMatrix::zeros(p, n);
    let mut e = DenseMatrix::zeros(p, n);
    let mut y = DenseMatrix::zeros(p, n);
    let mut trace = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let u_inv = T::one() / u;
        let y_scaled = y.scale(u_inv);

        // L step: singular-value shrinkage of M - E - C + Y/u
        let g = m_obs.sub(&e)?.sub(&c)?.add(&y_scaled)?;
        let f = g.svd()?;
        l = operators::shrink_singular_factors(&f, u_inv);

        // C step under the configured penalty (E still the previous iterate)
        if cfg.mode != SparsityMode::CompletionOnly {
            let w = m_obs.sub(&e)?.sub(&l)?.add(&y_scaled)?;
            c = match cfg.mode {
                SparsityMode::ColumnSparse => operators::shrink_columns(&w, cfg.lambda * u_inv)?,
                SparsityMode::EntrySparse => operators::shrink_entries(&w, cfg.lambda * u_inv)?,
                SparsityMode::CompletionOnly => unreachable!(),
            };
        }

        // E step: compensation lives only on unobserved entries
        let h1 = m_obs.sub(&l)?.sub(&c)?.add(&y_scaled)?;
        let mut e_next = DenseMatrix::zeros(p, n);
        for (k, &obs) in flags.iter().enumerate() {
            if !obs {
                e_next.set(k / n, k % n, h1.data()[k]);
            }
        }
        e = e_next;

        // multiplier step and residual bookkeeping
        let h = m_obs.sub(&e)?.sub(&l)?.sub(&c)?;
        y = y.add(&h.scale(u))?;
        let residual = h.frob_norm() / m_norm;
        trace.push(residual);
        if residual <= cfg.tol {
            converged = true;
            break;
        }
        u = u * cfg.alpha;
    }

    Ok(SolverResult {
        l,
        c,
        e,
        y,
        iterations: trace.len(),
        residual_trace: trace,
        converged,
    })
}

/// Identifies the corrupted-column support `{ j : ||C_j||_2 > threshold }`
/// and zeroes those columns out of `L`.
pub fn extract_solution<T: Scalar>(
    res: &SolverResult<T>,
    threshold: T,
) -> Result<RecoveredSolution<T>> {
    let n = res.c.cols();
    let members: Vec<usize> = (0..n).filter(|&j| res.c.col_norm(j) > threshold).collect();
    let support = ColumnSet::new(n, members)?;
    let l = operators::project_columns(&res.l, &support, true)?;
    Ok(RecoveredSolution { l, support })
}
