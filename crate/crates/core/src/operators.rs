//! Projection and proximal operators the solver and the theory validators
//! are assembled from: entry-set projection, column-support projection,
//! tangent-space projection, the restriction maps between full-width and
//! clean-column matrices, and the three soft-thresholding operators.
//!
//! All projections are idempotent and self-adjoint; the shrink operators are
//! the proximal maps of the nuclear, column-group, and entrywise l1 norms.

use crate::error::{Error, Result};
use crate::mat::{DenseMatrix, SvdFactors};
use crate::scalar::Scalar;
use crate::svd::NUMERICAL_RANK_REL_TOL;
use std::io::{BufRead, Write};

/// Set of observed entries of a `rows x cols` matrix, kept sorted
/// lexicographically so that equal sets compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
}

impl ObservationMask {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::InvalidParameter(format!(
                    "mask entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
        }
        entries.sort_unstable();
        if entries.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate mask entry".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push((i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.binary_search(&(i, j)).is_ok()
    }

    /// Union with another mask over the same grid.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch("mask union over different grids".into()));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        entries.sort_unstable();
        entries.dedup();
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    /// Embeds a mask over the leading `self.cols` columns into a wider grid.
    pub fn widen(&self, cols: usize) -> Result<Self> {
        if cols < self.cols {
            return Err(Error::InvalidParameter("widen target narrower than mask".into()));
        }
        Ok(Self { rows: self.rows, cols, entries: self.entries.clone() })
    }

    /// Row-major membership flags, for repeated complement projections.
    pub fn to_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.rows * self.cols];
        for &(i, j) in &self.entries {
            flags[i * self.cols + j] = true;
        }
        flags
    }

    /// Text form: `rows cols count` header, then one `i j` line per entry in
    /// canonical order.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.entries.len())?;
        for &(i, j) in &self.entries {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut it = header.split_whitespace();
        let rows = parse_usize(it.next(), "mask rows")?;
        let cols = parse_usize(it.next(), "mask cols")?;
        let count = parse_usize(it.next(), "mask count")?;
        let mut entries = Vec::with_capacity(count);
        let mut line = String::new();
        for _ in 0..count {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Parse("mask body truncated".into()));
            }
            let mut it = line.split_whitespace();
            let i = parse_usize(it.next(), "mask entry row")?;
            let j = parse_usize(it.next(), "mask entry col")?;
            entries.push((i, j));
        }
        Self::new(rows, cols, entries)
    }
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

/// Sorted set of column indices of an `n`-column matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnSet {
    cols: usize,
    members: Vec<usize>,
}

impl ColumnSet {
    pub fn new(cols: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= cols {
                return Err(Error::InvalidParameter(format!(
                    "column index {last} outside 0..{cols}"
                )));
            }
        }
        Ok(Self { cols, members })
    }

    pub fn empty(cols: usize) -> Self {
        Self { cols, members: Vec::new() }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }

    pub fn complement(&self) -> ColumnSet {
        let members = (0..self.cols).filter(|j| !self.contains(*j)).collect();
        Self { cols: self.cols, members }
    }

    /// Text form: `cols count` header, then one index per line.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {}", self.cols, self.members.len())?;
        for &j in &self.members {
            writeln!(w, "{j}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut it = header.split_whitespace();
        let cols = parse_usize(it.next(), "column-set width")?;
        let count = parse_usize(it.next(), "column-set count")?;
        let mut members = Vec::with_capacity(count);
        let mut line = String::new();
        for _ in 0..count {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Parse("column-set body truncated".into()));
            }
            members.push(parse_usize(line.split_whitespace().next(), "column index")?);
        }
        Self::new(cols, members)
    }
}

/// Span of matrices sharing the column space of `U` or the row space of `V`,
/// represented by the two orthonormal bases. Rank 0 (empty bases) is allowed
/// and makes the projection identically zero.
#[derive(Clone, Debug)]
pub struct TangentSpace<T> {
    u: DenseMatrix<T>,
    v: DenseMatrix<T>,
}

impl<T: Scalar> TangentSpace<T> {
    /// Validates orthonormality of both bases to 1e-10 entrywise.
    pub fn new(u: DenseMatrix<T>, v: DenseMatrix<T>) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::DimensionMismatch("bases carry different ranks".into()));
        }
        if u.cols() > u.rows().min(v.rows()) {
            return Err(Error::InvalidParameter("rank exceeds ambient dimensions".into()));
        }
        for (name, b) in [("U", &u), ("V", &v)] {
            check_orthonormal(b, T::cast(1e-10))
                .map_err(|e| Error::InvalidParameter(format!("{name} basis: {e}")))?;
        }
        Ok(Self { u, v })
    }

    /// Tangent space of a (numerically) low-rank matrix: thin SVD truncated
    /// at `1e-9 * sigma_1`.
    pub fn from_low_rank(l: &DenseMatrix<T>) -> Result<Self> {
        let f = l.svd()?;
        let r = f.numerical_rank(T::cast(NUMERICAL_RANK_REL_TOL));
        Self::from_factors_truncated(&f, r)
    }

    /// Keeps the leading `r` singular directions of existing factors.
    pub fn from_factors_truncated(f: &SvdFactors<T>, r: usize) -> Result<Self> {
        let u = DenseMatrix::from_fn(f.u.rows(), r, |i, j| f.u.get(i, j));
        let v = DenseMatrix::from_fn(f.v.rows(), r, |i, j| f.v.get(i, j));
        Self::new(u, v)
    }

    pub fn u(&self) -> &DenseMatrix<T> {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// Ambient shape `(p, n)` of matrices this space projects.
    pub fn ambient(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }
}

fn check_orthonormal<T: Scalar>(b: &DenseMatrix<T>, tol: T) -> Result<()> {
    let g = b.tmatmul(b)?;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let want = if i == j { T::one() } else { T::zero() };
            if (g.get(i, j) - want).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "columns not orthonormal (defect {:.3e} at ({i}, {j}))",
                    (g.get(i, j) - want).abs().as_f64()
                )));
            }
        }
    }
    Ok(())
}

/// Keeps the entries in `mask`, zeroes the rest.
pub fn project_mask<T: Scalar>(
    a: &DenseMatrix<T>,
    mask: &ObservationMask,
) -> Result<DenseMatrix<T>> {
    if a.shape() != (mask.rows(), mask.cols()) {
        return Err(Error::DimensionMismatch("mask projection shape".into()));
    }
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for &(i, j) in mask.entries() {
        out.set(i, j, a.get(i, j));
    }
    Ok(out)
}

/// Zeroes the entries in `mask`, keeps the rest.
pub fn project_mask_complement<T: Scalar>(
    a: &DenseMatrix<T>,
    mask: &ObservationMask,
) -> Result<DenseMatrix<T>> {
    if a.shape() != (mask.rows(), mask.cols()) {
        return Err(Error::DimensionMismatch("mask projection shape".into()));
    }
    let mut out = a.clone();
    for &(i, j) in mask.entries() {
        out.set(i, j, T::zero());
    }
    Ok(out)
}

/// Keeps the columns in `set` (or its complement), zeroes the rest.
pub fn project_columns<T: Scalar>(
    a: &DenseMatrix<T>,
    set: &ColumnSet,
    complement: bool,
) -> Result<DenseMatrix<T>> {
    if a.cols() != set.cols() {
        return Err(Error::DimensionMismatch("column projection width".into()));
    }
    Ok(DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        if set.contains(j) != complement {
            a.get(i, j)
        } else {
            T::zero()
        }
    }))
}

/// Tolerance used when enforcing that the columns removed by [`restrict`]
/// are zero; solver output is only zero up to roundoff.
const RESTRICT_ZERO_TOL: f64 = 1e-12;

/// Drops the columns in `removed`, mapping a `p x n` matrix supported on the
/// complement of `removed` to a `p x (n - |removed|)` matrix.
pub fn restrict<T: Scalar>(a: &DenseMatrix<T>, removed: &ColumnSet) -> Result<DenseMatrix<T>> {
    if a.cols() != removed.cols() {
        return Err(Error::DimensionMismatch("restriction width".into()));
    }
    let tol = T::cast(RESTRICT_ZERO_TOL) * T::one().max(a.entry_inf_norm());
    for &j in removed.members() {
        for i in 0..a.rows() {
            if a.get(i, j).abs() > tol {
                return Err(Error::Precondition(format!(
                    "restrict input has nonzero entry ({i}, {j}) on a removed column"
                )));
            }
        }
    }
    let keep: Vec<usize> = (0..a.cols()).filter(|j| !removed.contains(*j)).collect();
    Ok(DenseMatrix::from_fn(a.rows(), keep.len(), |i, j| a.get(i, keep[j])))
}

/// Inverse of [`restrict`]: re-inserts zero columns at the positions in
/// `removed`, producing a `p x n` matrix.
pub fn embed<T: Scalar>(
    b: &DenseMatrix<T>,
    removed: &ColumnSet,
    n: usize,
) -> Result<DenseMatrix<T>> {
    if removed.cols() != n {
        return Err(Error::DimensionMismatch("embedding width".into()));
    }
    if b.cols() + removed.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} columns plus {} removed do not fill width {n}",
            b.cols(),
            removed.len()
        )));
    }
    let keep: Vec<usize> = (0..n).filter(|j| !removed.contains(*j)).collect();
    let mut out = DenseMatrix::zeros(b.rows(), n);
    for (src, &dst) in keep.iter().enumerate() {
        for i in 0..b.rows() {
            out.set(i, dst, b.get(i, src));
        }
    }
    Ok(out)
}

/// Orthogonal projection onto the tangent space
/// `P_T(A) = U U^T A + A V V^T - U U^T A V V^T`, or onto its complement
/// `(I - U U^T) A (I - V V^T)`.
pub fn project_tangent<T: Scalar>(
    a: &DenseMatrix<T>,
    t: &TangentSpace<T>,
    complement: bool,
) -> Result<DenseMatrix<T>> {
    if a.shape() != t.ambient() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix against {}x{} tangent space",
            a.rows(),
            a.cols(),
            t.ambient().0,
            t.ambient().1
        )));
    }
    if t.rank() == 0 {
        return Ok(if complement { a.clone() } else { DenseMatrix::zeros(a.rows(), a.cols()) });
    }
    let ut_a = t.u.tmatmul(a)?; // r x n
    let a_v = a.matmul(&t.v)?; // p x r
    let ut_a_v = ut_a.matmul(&t.v)?; // r x r
    // U (U^T A) + (A V) V^T - U (U^T A V) V^T
    let first = t.u.matmul(&ut_a)?;
    let second = a_v.matmul_transb(&t.v)?;
    let third = t.u.matmul(&ut_a_v)?.matmul_transb(&t.v)?;
    let pt = first.add(&second)?.sub(&third)?;
    if complement {
        a.sub(&pt)
    } else {
        Ok(pt)
    }
}

/// Soft-thresholds singular values: the proximal operator of
/// `eps * ||.||_*`. A value exactly at the threshold maps to zero.
pub fn shrink_singular<T: Scalar>(a: &DenseMatrix<T>, eps: T) -> Result<DenseMatrix<T>> {
    let f = a.svd()?;
    Ok(shrink_singular_factors(&f, eps))
}

/// Same as [`shrink_singular`] when the factors are already at hand.
pub fn shrink_singular_factors<T: Scalar>(f: &SvdFactors<T>, eps: T) -> DenseMatrix<T> {
    let shrunk = SvdFactors {
        u: f.u.clone(),
        sigma: f.sigma.iter().map(|&s| if s <= eps { T::zero() } else { s - eps }).collect(),
        v: f.v.clone(),
    };
    shrunk.reconstruct()
}

/// Soft-thresholds whole columns by their Euclidean norm: the proximal
/// operator of `eps * ||.||_{1,2}`.
pub fn shrink_columns<T: Scalar>(a: &DenseMatrix<T>, eps: T) -> Result<DenseMatrix<T>> {
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for j in 0..a.cols() {
        let norm = a.col_norm(j);
        if norm > eps {
            let scale = (norm - eps) / norm;
            for i in 0..a.rows() {
                out.set(i, j, a.get(i, j) * scale);
            }
        }
    }
    Ok(out)
}

/// Entrywise soft-thresholding: the proximal operator of `eps * ||.||_1`.
pub fn shrink_entries<T: Scalar>(a: &DenseMatrix<T>, eps: T) -> Result<DenseMatrix<T>> {
    Ok(a.map(|v| {
        if v.abs() <= eps {
            T::zero()
        } else {
            v - eps * v.signum()
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gaussian())
    }

    fn random_tangent(p: usize, n: usize, r: usize, rng: &mut Rng) -> TangentSpace<f64> {
        let a = random_matrix(p, r, rng);
        let b = random_matrix(n, r, rng);
        let l = a.matmul_transb(&b).unwrap();
        TangentSpace::from_low_rank(&l).unwrap()
    }

    #[test]
    fn mask_projection_examples() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let m = ObservationMask::new(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let pa = project_mask(&a, &m).unwrap();
        assert_eq!(pa, DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 4.0]]).unwrap());
        // idempotent
        assert_eq!(project_mask(&pa, &m).unwrap(), pa);
        // full and empty masks
        assert_eq!(project_mask(&a, &ObservationMask::full(2, 2)).unwrap(), a);
        assert_eq!(
            project_mask(&a, &ObservationMask::empty(2, 2)).unwrap(),
            DenseMatrix::zeros(2, 2)
        );
        assert!(project_mask(&a, &ObservationMask::empty(3, 2)).is_err());
    }

    #[test]
    fn mask_canonical_order_and_serialization() {
        let m1 = ObservationMask::new(3, 3, vec![(2, 1), (0, 0), (1, 2)]).unwrap();
        let m2 = ObservationMask::new(3, 3, vec![(0, 0), (1, 2), (2, 1)]).unwrap();
        assert_eq!(m1, m2);
        assert!(ObservationMask::new(2, 2, vec![(0, 0), (0, 0)]).is_err());
        assert!(ObservationMask::new(2, 2, vec![(2, 0)]).is_err());
        let mut buf = Vec::new();
        m1.write_text(&mut buf).unwrap();
        let back = ObservationMask::read_text(&mut buf.as_slice()).unwrap();
        assert_eq!(m1, back);
    }

    #[test]
    fn column_projection_examples() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let set = ColumnSet::new(3, vec![2]).unwrap();
        let kept = project_columns(&a, &set, false).unwrap();
        assert_eq!(
            kept,
            DenseMatrix::from_rows(&[&[0.0, 0.0, 3.0], &[0.0, 0.0, 6.0]]).unwrap()
        );
        let empty = ColumnSet::empty(3);
        assert_eq!(project_columns(&a, &empty, false).unwrap(), DenseMatrix::zeros(2, 3));
        assert_eq!(project_columns(&a, &empty, true).unwrap(), a);
        // complementarity on random input
        let mut rng = Rng::new(2);
        let b = random_matrix(4, 6, &mut rng);
        let s = ColumnSet::new(6, vec![1, 4]).unwrap();
        let sum = project_columns(&b, &s, false)
            .unwrap()
            .add(&project_columns(&b, &s, true).unwrap())
            .unwrap();
        assert_eq!(sum, b);
    }

    #[test]
    fn restrict_embed_round_trip() {
        let i0 = ColumnSet::new(3, vec![1]).unwrap();
        let a = DenseMatrix::from_rows(&[&[1.0, 0.0, 2.0], &[3.0, 0.0, 4.0]]).unwrap();
        let r = restrict(&a, &i0).unwrap();
        assert_eq!(r, DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap());
        assert_eq!(embed(&r, &i0, 3).unwrap(), a);
        assert_eq!(restrict(&embed(&r, &i0, 3).unwrap(), &i0).unwrap(), r);
        // empty set: identity
        let none = ColumnSet::empty(3);
        assert_eq!(restrict(&a, &none).unwrap(), a);
        // nonzero removed column violates the precondition
        let bad = DenseMatrix::from_rows(&[&[1.0, 0.5, 2.0], &[3.0, 0.0, 4.0]]).unwrap();
        assert!(matches!(restrict(&bad, &i0), Err(Error::Precondition(_))));
    }

    #[test]
    fn tangent_projection_examples() {
        let mut rng = Rng::new(4);
        let t = random_tangent(6, 5, 2, &mut rng);
        // A = U X^T stays fixed
        let x = random_matrix(5, 2, &mut rng);
        let a = t.u().matmul_transb(&x).unwrap();
        let pa = project_tangent(&a, &t, false).unwrap();
        assert!(pa.sub(&a).unwrap().frob_norm() < 1e-10);
        assert!(project_tangent(&a, &t, true).unwrap().frob_norm() < 1e-10);

        // rank 0: everything is in the complement
        let t0 = TangentSpace::new(DenseMatrix::zeros(6, 0), DenseMatrix::zeros(5, 0)).unwrap();
        let b = random_matrix(6, 5, &mut rng);
        assert!(project_tangent(&b, &t0, false).unwrap().frob_norm() == 0.0);
        assert_eq!(project_tangent(&b, &t0, true).unwrap(), b);

        // orthogonality of the split
        let pt = project_tangent(&b, &t, false).unwrap();
        let ptp = project_tangent(&b, &t, true).unwrap();
        assert!(pt.dot(&ptp).unwrap().abs() < 1e-10);
        assert!(pt.add(&ptp).unwrap().sub(&b).unwrap().frob_norm() < 1e-12);
    }

    #[test]
    fn projections_idempotent_and_self_adjoint() {
        let mut rng = Rng::new(6);
        let a = random_matrix(7, 6, &mut rng);
        let b = random_matrix(7, 6, &mut rng);

        let mask = ObservationMask::new(7, 6, {
            let mut v = Vec::new();
            for i in 0..7 {
                for j in 0..6 {
                    if rng.bernoulli(0.4) {
                        v.push((i, j));
                    }
                }
            }
            v
        })
        .unwrap();
        let cset = ColumnSet::new(6, vec![0, 3]).unwrap();
        let t = random_tangent(7, 6, 2, &mut rng);

        let pairs: Vec<(DenseMatrix<f64>, DenseMatrix<f64>)> = vec![
            (project_mask(&a, &mask).unwrap(), project_mask(&b, &mask).unwrap()),
            (
                project_columns(&a, &cset, false).unwrap(),
                project_columns(&b, &cset, false).unwrap(),
            ),
            (
                project_tangent(&a, &t, false).unwrap(),
                project_tangent(&b, &t, false).unwrap(),
            ),
            (project_tangent(&a, &t, true).unwrap(), project_tangent(&b, &t, true).unwrap()),
        ];
        for (pa, pb) in &pairs {
            // self-adjoint: <P(a), b> = <a, P(b)>
            assert!((pa.dot(&b).unwrap() - a.dot(pb).unwrap()).abs() < 1e-9);
        }
        // idempotence
        assert_eq!(project_mask(&pairs[0].0, &mask).unwrap(), pairs[0].0);
        assert_eq!(project_columns(&pairs[1].0, &cset, false).unwrap(), pairs[1].0);
        let twice = project_tangent(&pairs[2].0, &t, false).unwrap();
        assert!(twice.sub(&pairs[2].0).unwrap().frob_norm() < 1e-10);
    }

    #[test]
    fn shrink_singular_examples() {
        let a = DenseMatrix::from_rows(&[
            &[5.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.2],
        ])
        .unwrap();
        let s = shrink_singular(&a, 1.0).unwrap();
        let want =
            DenseMatrix::from_rows(&[&[4.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
                .unwrap();
        assert!(s.sub(&want).unwrap().frob_norm() < 1e-10);
        // eps = 0 keeps the matrix
        let mut rng = Rng::new(8);
        let b = random_matrix(5, 4, &mut rng);
        assert!(shrink_singular(&b, 0.0).unwrap().sub(&b).unwrap().frob_norm() < 1e-10);
    }

    #[test]
    fn shrink_columns_examples() {
        let a: DenseMatrix<f64> = DenseMatrix::from_rows(&[&[0.0], &[2.0]]).unwrap();
        let s = shrink_columns(&a, 0.5).unwrap();
        assert!((s.get(0, 0) - 0.0).abs() < 1e-15);
        assert!((s.get(1, 0) - 1.5).abs() < 1e-15);
        // every column at or below the threshold dies (ties shrink to zero)
        let b = DenseMatrix::from_rows(&[&[0.3, 0.0], &[0.4, 0.5]]).unwrap();
        assert_eq!(shrink_columns(&b, 0.5).unwrap(), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn shrink_entries_examples() {
        let a = DenseMatrix::from_rows(&[&[2.0, -0.1], &[-3.0, 0.0]]).unwrap();
        let s = shrink_entries(&a, 0.5).unwrap();
        assert_eq!(s, DenseMatrix::from_rows(&[&[1.5, 0.0], &[-2.5, 0.0]]).unwrap());
        assert_eq!(shrink_entries(&a, 0.0).unwrap(), a);
    }

    #[test]
    fn shrink_operators_are_nonexpansive() {
        let mut rng = Rng::new(12);
        for _ in 0..6 {
            let a = random_matrix(6, 5, &mut rng);
            let b = random_matrix(6, 5, &mut rng);
            let d = a.sub(&b).unwrap().frob_norm();
            for eps in [0.1, 0.7] {
                let shrinkers: [fn(
                    &DenseMatrix<f64>,
                    f64,
                )
                    -> crate::error::Result<DenseMatrix<f64>>;
                    3] = [shrink_singular, shrink_columns, shrink_entries];
                for f in shrinkers {
                    let da = f(&a, eps).unwrap();
                    let db = f(&b, eps).unwrap();
                    assert!(da.sub(&db).unwrap().frob_norm() <= d + 1e-9);
                }
            }
        }
    }

    #[test]
    fn tangent_space_rejects_skewed_basis() {
        let u = DenseMatrix::from_rows(&[&[1.0, 0.9], &[0.0, 0.1], &[0.0, 0.0]]).unwrap();
        let v: DenseMatrix<f64> = DenseMatrix::identity(2);
        assert!(TangentSpace::new(u, v).is_err());
    }
}
