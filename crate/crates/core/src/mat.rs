//! Dense row-major matrices, the matrix norms used by the recovery program,
//! and thin SVD factors.
//!
//! All entries are kept finite: constructors and deserialization reject
//! NaN/Inf, and library operations only combine finite values. Matrices are
//! immutable in spirit — operations return new values — so they can be shared
//! freely across threads.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::svd;
use std::io::{BufRead, Write};

/// Dense real matrix, row-major (`data[i * cols + j]`).
///
/// Zero-sized dimensions are permitted so that rank-0 bases (`p x 0`) can be
/// carried by the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Matrix norms of the objective and its dual:
///
/// * `Nuclear` — sum of singular values;
/// * `Spectral` — largest singular value;
/// * `EntryInf` — largest absolute entry;
/// * `OneTwo` — sum of column Euclidean norms;
/// * `InfTwo` — largest column Euclidean norm;
/// * `Frobenius` — square root of the sum of squared entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Nuclear,
    Spectral,
    EntryInf,
    OneTwo,
    InfTwo,
    Frobenius,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds from a row-major buffer, rejecting length mismatches and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "buffer of {} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from nested row slices.
    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| v * a)
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other`, without materializing the transpose.
    pub fn tmatmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}^T * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = &self.data[k * self.cols..(k + 1) * self.cols];
            let brow = &other.data[k * other.cols..(k + 1) * other.cols];
            for (i, &a) in arow.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_transb(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}^T",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            for j in 0..other.rows {
                let brow = &other.data[j * other.cols..(j + 1) * other.cols];
                let mut acc = T::zero();
                for (&a, &b) in arow.iter().zip(brow) {
                    acc = acc + a * b;
                }
                out.data[i * out.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &Self) -> Result<T> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch("inner product shapes differ".into()));
        }
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    pub fn col_norm(&self, j: usize) -> T {
        let mut acc = T::zero();
        for i in 0..self.rows {
            let v = self.get(i, j);
            acc = acc + v * v;
        }
        acc.sqrt()
    }

    pub fn frob_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn entry_inf_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Evaluates one of the six norms. `Nuclear` and `Spectral` go through
    /// the SVD; the eigen sweep cap makes failure there effectively
    /// unreachable for finite input, so this panics rather than propagating.
    pub fn norm(&self, kind: NormKind) -> T {
        match kind {
            NormKind::Frobenius => self.frob_norm(),
            NormKind::EntryInf => self.entry_inf_norm(),
            NormKind::OneTwo => (0..self.cols).map(|j| self.col_norm(j)).sum(),
            NormKind::InfTwo => {
                (0..self.cols).fold(T::zero(), |m, j| m.max(self.col_norm(j)))
            }
            NormKind::Nuclear => {
                let f = svd::svd(self).expect("svd convergence for nuclear norm");
                f.sigma.iter().copied().sum()
            }
            NormKind::Spectral => {
                let f = svd::svd(self).expect("svd convergence for spectral norm");
                f.sigma.first().copied().unwrap_or_else(T::zero)
            }
        }
    }

    /// Thin SVD; see [`SvdFactors`].
    pub fn svd(&self) -> Result<SvdFactors<T>> {
        svd::svd(self)
    }

    /// Writes the text form: a `rows cols` header line, then one line per
    /// row with entries at 17 significant digits, which round-trips `f64`
    /// exactly.
    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row = self.row(i);
            let mut line = String::with_capacity(row.len() * 25);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the text form written by [`DenseMatrix::write_text`].
    pub fn read_text<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let mut it = header.split_whitespace();
        let rows: usize = parse_field(it.next(), "rows")?;
        let cols: usize = parse_field(it.next(), "cols")?;
        let mut data = Vec::with_capacity(rows * cols);
        let mut line = String::new();
        while data.len() < rows * cols {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Parse("matrix body truncated".into()));
            }
            for tok in line.split_whitespace() {
                let v: T = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad matrix entry {tok:?}")))?;
                data.push(v);
            }
        }
        Self::from_vec(rows, cols, data)
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}")))
}

/// Thin SVD `A = U diag(sigma) V^T` with `k = min(rows, cols)`:
/// `U` is `rows x k` and `V` is `cols x k`, both with orthonormal columns,
/// and `sigma` is nonnegative and sorted descending.
#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Scalar> SvdFactors<T> {
    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let k = self.sigma.len();
        let mut scaled = self.u.clone();
        for j in 0..k {
            for i in 0..scaled.rows() {
                scaled.set(i, j, scaled.get(i, j) * self.sigma[j]);
            }
        }
        scaled.matmul_transb(&self.v).expect("factor shapes agree")
    }

    /// Number of singular values above `rel_tol * sigma_1`.
    pub fn numerical_rank(&self, rel_tol: T) -> usize {
        let s1 = self.sigma.first().copied().unwrap_or_else(T::zero);
        let cut = rel_tol * s1;
        self.sigma.iter().filter(|&&s| s > cut).count()
    }
}
