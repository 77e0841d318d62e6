//! Numerical validators for the analytic machinery behind exact recovery:
//! incoherence of a subspace basis, the closed-form regularizer selectors,
//! the sufficient-condition inequalities of the main recovery statements,
//! the tangent-space sampling-gap operator, the golfing recursion, the dual
//! certificate conditions, the feasible-perturbation inequality, and
//! Monte-Carlo checks of the concentration bounds.
//!
//! Everything here evaluates the displayed formulas literally (natural
//! logarithms throughout) and reports slacks rather than hiding them, so the
//! unspecified absolute constants can be calibrated empirically.

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, NormKind};
use crate::operators::{
    project_columns, project_mask, project_mask_complement, project_tangent, restrict, ColumnSet,
    ObservationMask, TangentSpace,
};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::svd::{orthonormal_complement, sym_eigen_desc};
use std::io::Write;

/// Parameters of the sufficient conditions. `eta1`..`eta3` stand in for the
/// unspecified absolute constants and default to 1; every check reports its
/// slack so they can be calibrated.
#[derive(Clone, Copy, Debug)]
pub struct TheoremParams {
    pub p: usize,
    pub n: usize,
    pub n1: usize,
    pub r_bar: usize,
    pub gamma_bar: f64,
    pub rho_lower: f64,
    pub mu0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl TheoremParams {
    pub fn new(
        p: usize,
        n: usize,
        n1: usize,
        r_bar: usize,
        gamma_bar: f64,
        rho_lower: f64,
        mu0: f64,
    ) -> Self {
        Self { p, n, n1, r_bar, gamma_bar, rho_lower, mu0, eta1: 1.0, eta2: 1.0, eta3: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_lower > 0.0 && self.rho_lower <= 1.0) {
            return Err(Error::InvalidParameter("rho_lower outside (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.gamma_bar) {
            return Err(Error::InvalidParameter("gamma_bar outside [0, 1)".into()));
        }
        Ok(())
    }
}

/// Closed-form choices of the column-penalty weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaRule {
    Theorem1,
    Corollary1,
    Corollary2,
    Corollary3,
    Theorem2,
}

impl LambdaRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Self::Theorem1),
            "corollary1" => Ok(Self::Corollary1),
            "corollary2" => Ok(Self::Corollary2),
            "corollary3" => Ok(Self::Corollary3),
            "theorem2" => Ok(Self::Theorem2),
            _ => Err(Error::InvalidParameter(format!("unknown lambda rule {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::Corollary1 => "corollary1",
            Self::Corollary2 => "corollary2",
            Self::Corollary3 => "corollary3",
            Self::Theorem2 => "theorem2",
        }
    }
}

fn log4n1(n1: usize) -> f64 {
    (4.0 * n1 as f64).ln()
}

/// Evaluates the cited closed-form expression for `lambda`.
pub fn lambda_select(rule: LambdaRule, params: &TheoremParams) -> Result<f64> {
    params.validate()?;
    let p = params.p as f64;
    let n = params.n as f64;
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{} required for {}", what, rule.name())))
        }
    };
    match rule {
        LambdaRule::Theorem1 => {
            need(params.gamma_bar > 0.0, "gamma_bar > 0")?;
            need(params.r_bar >= 1 && params.mu0 > 0.0 && params.n1 >= 1, "r_bar, mu0, n1")?;
            let l = log4n1(params.n1);
            Ok((params.rho_lower
                / (params.gamma_bar * params.r_bar as f64 * params.mu0 * n * l * l))
                .sqrt()
                / 48.0)
        }
        LambdaRule::Corollary1 => {
            need(params.p >= 1 && params.n >= 1, "p, n")?;
            Ok((p.powf(0.25) / n).sqrt())
        }
        LambdaRule::Corollary2 => {
            need(params.r_bar >= 1 && params.mu0 > 0.0 && params.n1 >= 1, "r_bar, mu0, n1")?;
            let l = log4n1(params.n1);
            Ok(params.mu0 * params.r_bar as f64 * l * l / n.sqrt())
        }
        LambdaRule::Corollary3 => {
            need(params.gamma_bar == 0.0, "gamma_bar = 0")?;
            Ok(n)
        }
        LambdaRule::Theorem2 => {
            need(params.gamma_bar > 0.0, "gamma_bar > 0")?;
            Ok(1.0 / (4.0 * (params.gamma_bar * n).sqrt()))
        }
    }
}

/// One evaluated inequality: `holds` compares `lhs` against `rhs` in the
/// direction the condition states, with `slack` positive when it holds.
#[derive(Clone, Debug)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

fn check_ge(name: &'static str, lhs: f64, rhs: f64) -> ConditionCheck {
    ConditionCheck { name, holds: lhs >= rhs, lhs, rhs, slack: lhs - rhs }
}

fn check_le(name: &'static str, lhs: f64, rhs: f64) -> ConditionCheck {
    ConditionCheck { name, holds: lhs <= rhs, lhs, rhs, slack: rhs - lhs }
}

fn shape_check(p: usize, n1: usize) -> ConditionCheck {
    let slack = (n1 as f64 - p as f64).min(p as f64 - 32.0);
    ConditionCheck { name: "n1 >= p >= 32", holds: slack >= 0.0, lhs: slack, rhs: 0.0, slack }
}

/// Evaluates each sufficient-condition inequality of the chosen statement
/// literally, with the configured `eta` constants.
pub fn check_theorem_conditions(rule: LambdaRule, params: &TheoremParams) -> Vec<ConditionCheck> {
    let p = params.p as f64;
    let n = params.n as f64;
    let r = params.r_bar as f64;
    let mu = params.mu0;
    let rho = params.rho_lower;
    let gamma = params.gamma_bar;
    let l = log4n1(params.n1);
    match rule {
        LambdaRule::Theorem1 => {
            let gamma_ratio = gamma / (1.0 - gamma);
            let rhs_gamma = params.eta2 * rho * rho
                / ((1.0 + mu * r / (rho * p.sqrt())).powi(2) * mu.powi(3) * r.powi(3) * l.powi(6));
            vec![
                shape_check(params.p, params.n1),
                check_ge("rho >= eta1 mu0^2 r^2 log^3(4 n1) / p", rho, params.eta1 * mu * mu * r * r * l.powi(3) / p),
                check_le("gamma/(1-gamma) <= eta2 rho^2 / ((1 + mu0 r/(rho sqrt p))^2 mu0^3 r^3 log^6(4 n1))", gamma_ratio, rhs_gamma),
            ]
        }
        LambdaRule::Theorem2 => {
            let gamma_ratio = gamma / (1.0 - gamma);
            let lp = p.ln();
            vec![
                shape_check(params.p, params.n1),
                check_ge("rho >= eta1 mu0^2 r^2 log^2(4 n1) / (sqrt(p) log p)", rho, params.eta1 * mu * mu * r * r * l * l / (p.sqrt() * lp)),
                check_le("gamma/(1-gamma) <= eta2 rho^2 log^2(p) / (mu0^2 r^2 log^2(4 n1))", gamma_ratio, params.eta2 * rho * rho * lp * lp / (mu * mu * r * r * l * l)),
            ]
        }
        LambdaRule::Corollary1 => vec![
            check_le("r <= eta1 / mu0", r, params.eta1 / mu),
            check_ge("rho >= eta2 log(4 n1) / p^(1/4)", rho, params.eta2 * l / p.powf(0.25)),
            check_le("gamma <= eta3 / sqrt(p)", gamma, params.eta3 / p.sqrt()),
        ],
        LambdaRule::Corollary2 => vec![
            check_ge("rho >= 0.1", rho, 0.1),
            check_le("r <= eta1 sqrt(p) / (mu0 log^(3/2)(4 n1))", r, params.eta1 * p.sqrt() / (mu * l.powf(1.5))),
            check_le("gamma <= eta2 / (mu0^3 r^3 log^6(4 n1))", gamma, params.eta2 / (mu.powi(3) * r.powi(3) * l.powi(6))),
        ],
        LambdaRule::Corollary3 => {
            let m = rho * p * params.n1 as f64;
            let l4n = (4.0 * n).ln();
            vec![
                ConditionCheck { name: "gamma = 0", holds: gamma == 0.0, lhs: gamma, rhs: 0.0, slack: -gamma },
                check_ge("m >= eta1 mu0^2 r^2 n log^2(4 n)", m, params.eta1 * mu * mu * r * r * n * l4n * l4n),
            ]
        }
    }
}

/// Smallest incoherence parameter of an orthonormal basis:
/// `(dim / r) * max_i ||row_i||^2`. Always lies in `[1, dim / r]`.
pub fn incoherence_mu<T: Scalar>(basis: &DenseMatrix<T>, dim: usize, r: usize) -> Result<T> {
    if basis.rows() != dim || basis.cols() != r {
        return Err(Error::DimensionMismatch(format!(
            "basis is {}x{}, stated {dim}x{r}",
            basis.rows(),
            basis.cols()
        )));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("incoherence of an empty basis".into()));
    }
    let gram = basis.tmatmul(basis)?;
    for i in 0..r {
        for j in 0..r {
            let want = if i == j { T::one() } else { T::zero() };
            if (gram.get(i, j) - want).abs() > T::cast(1e-10) {
                return Err(Error::InvalidParameter("basis columns not orthonormal".into()));
            }
        }
    }
    let mut max_row = T::zero();
    for i in 0..dim {
        let s: T = basis.row(i).iter().map(|&v| v * v).sum();
        max_row = max_row.max(s);
    }
    Ok(T::from_count(dim) / T::from_count(r) * max_row)
}

/// Gaussian matrix with columns orthonormalized in place; used by the
/// Monte-Carlo validators to draw random subspaces.
pub fn random_orthonormal<T: Scalar>(rows: usize, r: usize, rng: &mut Rng) -> DenseMatrix<T> {
    assert!(r <= rows, "rank exceeds dimension");
    let mut b: DenseMatrix<T> = DenseMatrix::zeros(rows, r);
    for j in 0..r {
        loop {
            let mut col: Vec<T> = (0..rows).map(|_| T::cast(rng.gaussian())).collect();
            for _ in 0..2 {
                for q in 0..j {
                    let mut proj = T::zero();
                    for i in 0..rows {
                        proj = proj + b.get(i, q) * col[i];
                    }
                    for (i, c) in col.iter_mut().enumerate() {
                        *c = *c - proj * b.get(i, q);
                    }
                }
            }
            let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm > T::cast(1e-6) {
                for (i, c) in col.iter().enumerate() {
                    b.set(i, j, *c / norm);
                }
                break;
            }
        }
    }
    b
}

/// Largest tangent dimension `r (p + n1 - r)` the gap operator will
/// materialize; beyond this the dense matrix becomes impractically large.
pub const MAX_TANGENT_DIM: usize = 600;

/// Spectral norm of `(p n1 / m0) P_T P_Omega P_T - P_T`, the deviation of
/// the rescaled sampling operator from the identity on the tangent space.
/// The operator is materialized on an orthonormal basis of the tangent
/// space, whose dimension `r (p + n1 - r)` must stay within
/// [`MAX_TANGENT_DIM`].
pub fn tangent_sampling_gap<T: Scalar>(
    t: &TangentSpace<T>,
    omega0: &ObservationMask,
    m0: usize,
) -> Result<T> {
    let (p, n1) = t.ambient();
    if (omega0.rows(), omega0.cols()) != (p, n1) {
        return Err(Error::DimensionMismatch("mask does not match tangent ambient".into()));
    }
    if m0 == 0 || m0 != omega0.len() {
        return Err(Error::Precondition(format!(
            "m0 = {m0} but the mask holds {} entries (must match, nonzero)",
            omega0.len()
        )));
    }
    let r = t.rank();
    if r == 0 {
        return Ok(T::zero());
    }
    let dim = r * (p + n1 - r);
    if dim > MAX_TANGENT_DIM {
        return Err(Error::InvalidParameter(format!(
            "tangent dimension {dim} exceeds the dense-materialization cap {MAX_TANGENT_DIM}"
        )));
    }

    let u_perp = orthonormal_complement(t.u())?;
    let v_perp = orthonormal_complement(t.v())?;
    // rank-one orthonormal basis of the tangent space: (left, right) pairs
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(dim);
    // u_a v_b^T, then u_a w_b^T (w in V-perp), then z_a v_b^T (z in U-perp);
    // encode left index < r as U column, >= r as U-perp column, same for right
    for a in 0..r {
        for b in 0..r {
            pairs.push((a, b));
        }
    }
    for a in 0..r {
        for b in 0..(n1 - r) {
            pairs.push((a, r + b));
        }
    }
    for a in 0..(p - r) {
        for b in 0..r {
            pairs.push((r + a, b));
        }
    }
    debug_assert_eq!(pairs.len(), dim);

    let left_val = |idx: usize, i: usize| {
        if idx < r {
            t.u().get(i, idx)
        } else {
            u_perp.get(i, idx - r)
        }
    };
    let right_val = |idx: usize, j: usize| {
        if idx < r {
            t.v().get(j, idx)
        } else {
            v_perp.get(j, idx - r)
        }
    };

    // values of each basis element on the sampled entries
    let entries = omega0.entries();
    let mut vals: Vec<Vec<T>> = Vec::with_capacity(dim);
    for &(a, b) in &pairs {
        vals.push(entries.iter().map(|&(i, j)| left_val(a, i) * right_val(b, j)).collect());
    }

    // G = c <B_k, P_Omega B_l> - I restricted to the tangent space; since the
    // basis is orthonormal and P_T is self-adjoint this captures the whole
    // operator
    let c = T::from_count(p * n1) / T::from_count(m0);
    let mut g = DenseMatrix::zeros(dim, dim);
    for k in 0..dim {
        for l in k..dim {
            let mut acc = T::zero();
            for (x, y) in vals[k].iter().zip(&vals[l]) {
                acc = acc + *x * *y;
            }
            let mut v = c * acc;
            if k == l {
                v = v - T::one();
            }
            g.set(k, l, v);
            g.set(l, k, v);
        }
    }
    let (eigs, _) = sym_eigen_desc(&g)?;
    let hi = eigs.first().copied().unwrap_or_else(T::zero).abs();
    let lo = eigs.last().copied().unwrap_or_else(T::zero).abs();
    Ok(hi.max(lo))
}

/// Closed-form bound and applicability of the sampling-gap concentration
/// inequality: returns `(rhs, precondition_holds)` for parameters
/// `(p, n1, r, mu0, beta, m0)`.
pub fn sampling_gap_bound(
    p: usize,
    n1: usize,
    r: usize,
    mu0: f64,
    beta: f64,
    m0: usize,
) -> (f64, bool) {
    let dims = (n1 + p) as f64;
    let logd = dims.ln();
    let rhs = (16.0 * beta * mu0 * r as f64 * dims * logd / (3.0 * m0 as f64)).sqrt();
    let applicable = m0 as f64 > 16.0 / 3.0 * mu0 * r as f64 * dims * beta * logd;
    (rhs, applicable)
}

/// Runs the golfing recursion
/// `Y_i = Y_{i-1} + (p n1 / q) P_Omega_i(target - P_T(Y_{i-1}))`
/// against a target inside the tangent space, recording
/// `||P_T(Y_i) - target||_F` after every batch.
pub fn golfing_run<T: Scalar>(
    target: &DenseMatrix<T>,
    batches: &[ObservationMask],
    t: &TangentSpace<T>,
    q: usize,
) -> Result<(DenseMatrix<T>, Vec<T>)> {
    let (p, n1) = t.ambient();
    if target.shape() != (p, n1) {
        return Err(Error::DimensionMismatch("target does not match tangent ambient".into()));
    }
    let in_t = project_tangent(target, t, false)?;
    let defect = in_t.sub(target)?.frob_norm();
    if defect > T::cast(1e-8) * T::one().max(target.frob_norm()) {
        return Err(Error::Precondition(format!(
            "target lies outside the tangent space (defect {:.3e})",
            defect.as_f64()
        )));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("batch size must be positive".into()));
    }
    let c = T::from_count(p * n1) / T::from_count(q);
    let mut y = DenseMatrix::zeros(p, n1);
    let mut trace = Vec::with_capacity(batches.len());
    for batch in batches {
        if (batch.rows(), batch.cols()) != (p, n1) || batch.len() != q {
            return Err(Error::DimensionMismatch(format!(
                "batch of {} entries on {}x{}, expected {q} on {p}x{n1}",
                batch.len(),
                batch.rows(),
                batch.cols()
            )));
        }
        let residual = target.sub(&project_tangent(&y, t, false)?)?;
        y = y.add(&project_mask(&residual, batch)?.scale(c))?;
        trace.push(project_tangent(&y, t, false)?.sub(target)?.frob_norm());
    }
    Ok((y, trace))
}

/// Inputs of the dual-certificate validation. `uv_t` is the product of the
/// SVD factors the tangent space was built from (it is not recoverable from
/// the space itself, which forgets the pairing of the bases), `m` the number
/// of observed entries on the clean columns.
#[derive(Clone, Debug)]
pub struct CertificateInput<T> {
    pub q_hat: DenseMatrix<T>,
    pub t_hat: TangentSpace<T>,
    pub uv_t: DenseMatrix<T>,
    pub c_hat: DenseMatrix<T>,
    pub i0: ColumnSet,
    pub omega: ObservationMask,
    pub lambda: T,
    pub m: usize,
}

/// Outcome of the five certificate conditions. Booleans and slacks are
/// reported for all five regardless of failures; slacks are raw so callers
/// can judge strictness themselves.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub a: ConditionCheck,
    pub b_prime: ConditionCheck,
    pub c_prime: ConditionCheck,
    pub d: ConditionCheck,
    pub e_prime: ConditionCheck,
}

impl CertificateReport {
    pub fn all_hold(&self) -> bool {
        self.a.holds && self.b_prime.holds && self.c_prime.holds && self.d.holds && self.e_prime.holds
    }

    pub fn checks(&self) -> [&ConditionCheck; 5] {
        [&self.a, &self.b_prime, &self.c_prime, &self.d, &self.e_prime]
    }
}

/// Validates a supplied dual certificate against the five optimality
/// conditions:
///
/// * (a) support inside the observations: `P_Omega_c(Q) = 0` to 1e-10;
/// * (b') tangent residual witness: `D = R(P_I0c(P_T(Q) - UV^T))` obeys
///   `||D||_F <= (1/2) sqrt(m / (2 p n1)) lambda` — the minimal-Frobenius
///   witness under the convention that the residual is supported on the
///   clean columns, so a pass is sufficient while a fail is evidence (not
///   proof) that no witness exists;
/// * (c') `||P_T_perp(Q)|| <= 1/2`;
/// * (d) `P_I0(Q)` lies in `lambda` times the column-subgradient set of
///   `C_hat`: supported columns match `lambda C_j / ||C_j||` to 1e-8, the
///   remaining corrupted columns have norm at most `lambda`;
/// * (e') `||P_I0c(Q)||_{inf,2} <= lambda / 2`.
pub fn dual_certificate_check<T: Scalar>(inp: &CertificateInput<T>) -> Result<CertificateReport> {
    let (p, n) = inp.q_hat.shape();
    if inp.t_hat.ambient() != (p, n)
        || inp.uv_t.shape() != (p, n)
        || inp.c_hat.shape() != (p, n)
        || inp.i0.cols() != n
        || (inp.omega.rows(), inp.omega.cols()) != (p, n)
    {
        return Err(Error::DimensionMismatch("certificate inputs disagree on shape".into()));
    }
    let n1 = n - inp.i0.len();
    if inp.m == 0 || n1 == 0 {
        return Err(Error::InvalidParameter("certificate needs m >= 1 and a clean column".into()));
    }
    let lam = inp.lambda.as_f64();

    // (a)
    let off = project_mask_complement(&inp.q_hat, &inp.omega)?;
    let a = check_le("P_Omega_c(Q) = 0", off.entry_inf_norm().as_f64(), 1e-10);

    // (b')
    let resid = project_tangent(&inp.q_hat, &inp.t_hat, false)?.sub(&inp.uv_t)?;
    let witness = restrict(&project_columns(&resid, &inp.i0, true)?, &inp.i0)?;
    let bound =
        0.5 * (inp.m as f64 / (2.0 * p as f64 * n1 as f64)).sqrt() * lam;
    let b_prime = check_le("||D||_F <= (1/2) sqrt(m/(2 p n1)) lambda", witness.frob_norm().as_f64(), bound);

    // (c')
    let c_prime = check_le(
        "||P_T_perp(Q)|| <= 1/2",
        project_tangent(&inp.q_hat, &inp.t_hat, true)?.norm(NormKind::Spectral).as_f64(),
        0.5,
    );

    // (d): worst margin over the corrupted columns
    let mut d_margin = f64::INFINITY;
    let mut d_lhs = 0.0;
    let mut d_rhs = 0.0;
    for &j in inp.i0.members() {
        let c_norm = inp.c_hat.col_norm(j);
        let (lhs, rhs) = if c_norm > T::zero() {
            let mut dev = T::zero();
            for i in 0..p {
                let want = inp.lambda * inp.c_hat.get(i, j) / c_norm;
                let diff = inp.q_hat.get(i, j) - want;
                dev = dev + diff * diff;
            }
            (dev.sqrt().as_f64(), 1e-8)
        } else {
            (inp.q_hat.col_norm(j).as_f64(), lam)
        };
        if rhs - lhs < d_margin {
            d_margin = rhs - lhs;
            d_lhs = lhs;
            d_rhs = rhs;
        }
    }
    let d = if inp.i0.is_empty() {
        ConditionCheck { name: "P_I0(Q) in lambda G(C)", holds: true, lhs: 0.0, rhs: 0.0, slack: f64::INFINITY }
    } else {
        ConditionCheck { name: "P_I0(Q) in lambda G(C)", holds: d_margin >= 0.0, lhs: d_lhs, rhs: d_rhs, slack: d_margin }
    };

    // (e')
    let clean = project_columns(&inp.q_hat, &inp.i0, true)?;
    let e_prime = check_le(
        "||P_I0c(Q)||_{inf,2} <= lambda/2",
        clean.norm(NormKind::InfTwo).as_f64(),
        lam / 2.0,
    );

    Ok(CertificateReport { a, b_prime, c_prime, d, e_prime })
}

/// Both sides of the feasible-perturbation inequality
/// `||P_I0c P_T(D1)||_F <= sqrt(2 p n1 / m) (||P_T_perp(D1)||_* +
/// ||P_I0c(D2)||_{1,2})`. The bound is probabilistic over the sampling; a
/// violation on an adversarial mask is reported, not an error.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn perturbation_inequality_check<T: Scalar>(
    delta1: &DenseMatrix<T>,
    delta2: &DenseMatrix<T>,
    t_hat: &TangentSpace<T>,
    i0: &ColumnSet,
    omega: &ObservationMask,
    m: usize,
) -> Result<PerturbationCheck> {
    let (p, n) = delta1.shape();
    if delta2.shape() != (p, n)
        || t_hat.ambient() != (p, n)
        || i0.cols() != n
        || (omega.rows(), omega.cols()) != (p, n)
    {
        return Err(Error::DimensionMismatch("perturbation inputs disagree on shape".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let n1 = n - i0.len();
    let feas = project_mask(delta1, omega)?.add(&project_mask(delta2, omega)?)?.frob_norm();
    let scale = T::one().max(delta1.frob_norm() + delta2.frob_norm());
    if feas > T::cast(1e-10) * scale {
        return Err(Error::Precondition(format!(
            "perturbations infeasible: ||P_Omega(D1) + P_Omega(D2)||_F = {:.3e}",
            feas.as_f64()
        )));
    }
    let lhs = project_columns(&project_tangent(delta1, t_hat, false)?, i0, true)?
        .frob_norm()
        .as_f64();
    let factor = (2.0 * p as f64 * n1 as f64 / m as f64).sqrt();
    let rhs = factor
        * (project_tangent(delta1, t_hat, true)?.norm(NormKind::Nuclear).as_f64()
            + project_columns(delta2, i0, true)?.norm(NormKind::OneTwo).as_f64());
    Ok(PerturbationCheck { holds: lhs <= rhs, lhs, rhs })
}

/// Which concentration bound the Monte-Carlo validator exercises:
///
/// * `L5Inf` — entrywise-infinity contraction of the rescaled sampling
///   operator on a fixed tangent matrix;
/// * `L6OpInf` — spectral deviation of rescaled sampling, controlled by the
///   entrywise norm;
/// * `L7Inf2Order2` — column-norm contraction of the tangent-restricted
///   sampling operator;
/// * `L8Inf2Order1` — column-norm growth of rescaled sampling on a matrix
///   whose columns live in a fixed incoherent subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LemmaKind {
    L5Inf,
    L6OpInf,
    L7Inf2Order2,
    L8Inf2Order1,
}

impl LemmaKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "L5_inf" => Ok(Self::L5Inf),
            "L6_op_inf" => Ok(Self::L6OpInf),
            "L7_inf2_order2" => Ok(Self::L7Inf2Order2),
            "L8_inf2_order1" => Ok(Self::L8Inf2Order1),
            _ => Err(Error::InvalidParameter(format!("unknown lemma {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::L5Inf => "L5_inf",
            Self::L6OpInf => "L6_op_inf",
            Self::L7Inf2Order2 => "L7_inf2_order2",
            Self::L8Inf2Order1 => "L8_inf2_order1",
        }
    }
}

/// One Monte-Carlo draw: the two sides of the bound, whether the stated
/// sample-size precondition held, and whether the bound was violated.
#[derive(Clone, Copy, Debug)]
pub struct LemmaTrial {
    pub lhs: f64,
    pub rhs: f64,
    pub applicable: bool,
    pub violated: bool,
}

/// Aggregated Monte-Carlo result. `violations` counts trials that were both
/// applicable and violated; `bound_applicable` is true when every trial met
/// the sample-size precondition.
#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub trials: usize,
    pub violations: usize,
    pub records: Vec<LemmaTrial>,
    pub bound_applicable: bool,
}

impl LemmaReport {
    /// CSV with columns `trial, lhs, rhs, violated`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "trial,lhs,rhs,violated")?;
        for (t, rec) in self.records.iter().enumerate() {
            writeln!(w, "{},{},{},{}", t, rec.lhs, rec.rhs, u8::from(rec.violated))?;
        }
        Ok(())
    }
}

/// Monte-Carlo validation of one concentration bound: per trial, draw a
/// fresh random subspace pair and a fresh matrix of the required form,
/// sample `m0` entries without replacement, and evaluate both sides exactly
/// as displayed. Trials use per-index child streams of `rng`, so reports
/// merge deterministically under any parallel schedule.
#[allow(clippy::too_many_arguments)]
pub fn lemma_monte_carlo<T: Scalar>(
    which: LemmaKind,
    p: usize,
    n1: usize,
    r: usize,
    m0: usize,
    beta: f64,
    trials: usize,
    rng: &Rng,
) -> Result<LemmaReport> {
    if r == 0 || r > p.min(n1) {
        return Err(Error::InvalidParameter(format!("rank {r} infeasible for {p}x{n1}")));
    }
    if m0 == 0 || m0 > p * n1 {
        return Err(Error::InvalidParameter(format!("m0 = {m0} outside 1..={}", p * n1)));
    }
    if which == LemmaKind::L7Inf2Order2 && p > n1 {
        return Err(Error::InvalidParameter("this bound is stated for p <= n1".into()));
    }
    let dims = (n1 + p) as f64;
    let logd = dims.ln();
    let c = T::from_count(p * n1) / T::from_count(m0);
    let rf = r as f64;
    let m0f = m0 as f64;

    let mut records = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut trng = rng.child(trial as u64);
        let rec = match which {
            LemmaKind::L5Inf | LemmaKind::L7Inf2Order2 => {
                let u: DenseMatrix<T> = random_orthonormal(p, r, &mut trng);
                let v: DenseMatrix<T> = random_orthonormal(n1, r, &mut trng);
                let mu_u = incoherence_mu(&u, p, r)?.as_f64();
                let mu_v = incoherence_mu(&v, n1, r)?.as_f64();
                let mu0 = mu_u.max(mu_v);
                let t = TangentSpace::new(u, v)?;
                let g = DenseMatrix::from_fn(p, n1, |_, _| T::cast(trng.gaussian()));
                let z = project_tangent(&g, &t, false)?;
                let omega = crate::synth::sample_uniform_without_replacement(p, n1, m0, &mut trng)?;
                if which == LemmaKind::L5Inf {
                    let lhs = project_tangent(&project_mask(&z, &omega)?, &t, false)?
                        .scale(c)
                        .sub(&z)?
                        .entry_inf_norm()
                        .as_f64();
                    let rhs = (8.0 * beta * mu0 * rf * dims * logd / (3.0 * m0f)).sqrt()
                        * z.entry_inf_norm().as_f64();
                    let applicable = m0f > 8.0 / 3.0 * beta * mu0 * rf * dims * logd;
                    LemmaTrial { lhs, rhs, applicable, violated: lhs > rhs }
                } else {
                    let pz = project_tangent(&z, &t, false)?;
                    let lhs = project_tangent(&project_mask(&pz, &omega)?, &t, false)?
                        .scale(c)
                        .sub(&pz)?
                        .norm(NormKind::InfTwo)
                        .as_f64();
                    let rhs = 16.0 / 3.0
                        * beta
                        * (mu0 * mu0 * rf * rf * p as f64 * (n1 * n1) as f64 / (m0f * m0f)
                            * (2.0 * n1 as f64).ln().powi(2))
                        .sqrt()
                        * z.norm(NormKind::InfTwo).as_f64();
                    // no sample-size precondition is attached to this bound
                    LemmaTrial { lhs, rhs, applicable: true, violated: lhs > rhs }
                }
            }
            LemmaKind::L6OpInf => {
                let z: DenseMatrix<T> = DenseMatrix::from_fn(p, n1, |_, _| T::cast(trng.gaussian()));
                let omega = crate::synth::sample_uniform_without_replacement(p, n1, m0, &mut trng)?;
                let lhs = project_mask(&z, &omega)?.scale(c).sub(&z)?.norm(NormKind::Spectral).as_f64();
                let rhs = (8.0 * beta * (p * n1) as f64 * p.max(n1) as f64 * logd / (3.0 * m0f))
                    .sqrt()
                    * z.entry_inf_norm().as_f64();
                let applicable = m0f > 6.0 * beta * p.min(n1) as f64 * logd;
                LemmaTrial { lhs, rhs, applicable, violated: lhs > rhs }
            }
            LemmaKind::L8Inf2Order1 => {
                let u: DenseMatrix<T> = random_orthonormal(p, r, &mut trng);
                let mu0 = incoherence_mu(&u, p, r)?.as_f64();
                let w = DenseMatrix::from_fn(r, n1, |_, _| T::cast(trng.gaussian()));
                let a = u.matmul(&w)?;
                let omega = crate::synth::sample_uniform_without_replacement(p, n1, m0, &mut trng)?;
                let lhs = project_mask(&a, &omega)?.scale(c).norm(NormKind::InfTwo).as_f64();
                let rhs = (1.0 + (16.0 * beta * mu0 * rf * dims * p as f64 * logd / (3.0 * m0f)).sqrt())
                    * a.norm(NormKind::InfTwo).as_f64();
                let applicable = m0f >= 64.0 / 3.0 * beta * mu0 * rf * dims * logd;
                LemmaTrial { lhs, rhs, applicable, violated: lhs > rhs }
            }
        };
        records.push(rec);
    }
    let violations = records.iter().filter(|r| r.applicable && r.violated).count();
    let bound_applicable = records.iter().all(|r| r.applicable);
    Ok(LemmaReport { trials, violations, records, bound_applicable })
}
