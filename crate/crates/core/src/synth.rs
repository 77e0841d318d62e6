//! Reproducible synthetic problem instances: Gaussian low-rank ground truth,
//! three corruption schemes, and the observation sampling models.
//!
//! Corrupted columns occupy the trailing indices by default (ground truth is
//! assembled as `[L0_clean | corrupted]`); an optional column permutation
//! removes that positional cue. All draws come from a single seeded stream
//! in a fixed order, so a seed pins the instance bit for bit.

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use crate::operators::{project_mask, ColumnSet, ObservationMask};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::svd::NUMERICAL_RANK_REL_TOL;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

/// How corrupted columns are filled and observed.
///
/// * `SingleAdversarial` — one corrupted column that mimics the first clean
///   column except for its last entry, which is set to `magnitude`; fully
///   observed (the strongest play available to the adversary).
/// * `NeutralGaussian` — i.i.d. Gaussian columns, each entry observed
///   independently with probability `rho`.
/// * `AdversarialCopy` — column `i` copies the observed entries of clean
///   column `i` and fills the rest with Gaussian noise; fully observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CorruptionScheme {
    SingleAdversarial { magnitude: f64 },
    NeutralGaussian,
    AdversarialCopy,
}

impl CorruptionScheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::SingleAdversarial { .. } => "single_adversarial",
            Self::NeutralGaussian => "neutral_gaussian",
            Self::AdversarialCopy => "adversarial_copy",
        }
    }

    /// Parses a scheme name; `magnitude` applies to `single_adversarial`.
    pub fn parse(name: &str, magnitude: f64) -> Result<Self> {
        match name {
            "single_adversarial" => Ok(Self::SingleAdversarial { magnitude }),
            "neutral_gaussian" => Ok(Self::NeutralGaussian),
            "adversarial_copy" => Ok(Self::AdversarialCopy),
            _ => Err(Error::InvalidParameter(format!("unknown scheme {name:?}"))),
        }
    }
}

/// Ground truth plus observations for one recovery trial.
#[derive(Clone, Debug)]
pub struct ProblemInstance<T> {
    pub p: usize,
    pub n: usize,
    /// Number of clean columns, `n - |I0|`.
    pub n1: usize,
    pub r: usize,
    pub gamma: f64,
    pub rho: f64,
    pub scheme: CorruptionScheme,
    /// Low-rank ground truth, zero on the corrupted columns.
    pub l0: DenseMatrix<T>,
    /// Corruption, zero outside the corrupted columns and outside the mask.
    pub c0: DenseMatrix<T>,
    pub i0: ColumnSet,
    pub omega: ObservationMask,
    /// `P_Omega(L0 + C0)`, the solver input.
    pub m_obs: DenseMatrix<T>,
    pub seed: u64,
}

/// Product of two i.i.d. standard Gaussian factors, `p x r` times `r x n1`;
/// rank exactly `r` almost surely.
pub fn gen_low_rank<T: Scalar>(
    p: usize,
    n1: usize,
    r: usize,
    rng: &mut Rng,
) -> Result<DenseMatrix<T>> {
    if r > p.min(n1) {
        return Err(Error::InvalidParameter(format!(
            "rank {r} exceeds min({p}, {n1})"
        )));
    }
    if r == 0 {
        return Ok(DenseMatrix::zeros(p, n1));
    }
    let a = DenseMatrix::from_fn(p, r, |_, _| T::cast(rng.gaussian()));
    let b = DenseMatrix::from_fn(n1, r, |_, _| T::cast(rng.gaussian()));
    a.matmul_transb(&b)
}

/// Draws exactly `m` distinct entries of the `p x n1` grid, every size-`m`
/// subset equally likely (partial Fisher-Yates over the flattened grid).
pub fn sample_uniform_without_replacement(
    p: usize,
    n1: usize,
    m: usize,
    rng: &mut Rng,
) -> Result<ObservationMask> {
    let total = p * n1;
    if m > total {
        return Err(Error::InvalidParameter(format!(
            "cannot sample {m} of {total} entries"
        )));
    }
    let mut flat: Vec<usize> = (0..total).collect();
    for t in 0..m {
        let j = t + rng.below(total - t);
        flat.swap(t, j);
    }
    let entries = flat[..m].iter().map(|&f| (f / n1, f % n1)).collect();
    ObservationMask::new(p, n1, entries)
}

/// `s` independent batches of `q` distinct entries each; batches may overlap
/// one another.
pub fn sample_batch_replacement(
    p: usize,
    n1: usize,
    s: usize,
    q: usize,
    rng: &mut Rng,
) -> Result<Vec<ObservationMask>> {
    if s == 0 {
        return Err(Error::InvalidParameter("batch count must be at least 1".into()));
    }
    if q > p * n1 {
        return Err(Error::InvalidParameter(format!(
            "batch size {q} exceeds grid size {}",
            p * n1
        )));
    }
    (0..s).map(|_| sample_uniform_without_replacement(p, n1, q, rng)).collect()
}

/// Output of [`apply_corruption`]: padded ground truth on the full width
/// `n = n1 + |I0|`, with the corrupted columns at the trailing indices.
#[derive(Clone, Debug)]
pub struct CorruptionParts<T> {
    pub l0: DenseMatrix<T>,
    pub c0: DenseMatrix<T>,
    pub i0: ColumnSet,
    /// Observed entries on the corrupted columns.
    pub observed: ObservationMask,
}

/// Pads the clean ground truth with corrupted columns according to `scheme`.
///
/// The corrupted-column count is `round(gamma * n)` with `n` the resulting
/// total width (`single_adversarial` forces exactly one). `clean_mask` is
/// the observation set on the clean columns; `adversarial_copy` needs it to
/// mimic the revealed entries of the columns it impersonates.
pub fn apply_corruption<T: Scalar>(
    l0_clean: &DenseMatrix<T>,
    scheme: CorruptionScheme,
    gamma: f64,
    rho: f64,
    clean_mask: &ObservationMask,
    rng: &mut Rng,
) -> Result<CorruptionParts<T>> {
    let n1 = l0_clean.cols();
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} outside [0, 1)")));
    }
    // |I0| = round(gamma * n) with n = n1 + |I0|
    let k = (gamma / (1.0 - gamma) * n1 as f64).round() as usize;
    let k = match scheme {
        CorruptionScheme::SingleAdversarial { .. } => 1,
        _ => k,
    };
    apply_corruption_with_count(l0_clean, scheme, k, rho, clean_mask, rng)
}

pub(crate) fn apply_corruption_with_count<T: Scalar>(
    l0_clean: &DenseMatrix<T>,
    scheme: CorruptionScheme,
    k: usize,
    rho: f64,
    clean_mask: &ObservationMask,
    rng: &mut Rng,
) -> Result<CorruptionParts<T>> {
    let p = l0_clean.rows();
    let n1 = l0_clean.cols();
    if k == 0 {
        return Err(Error::Precondition("corruption requires at least one column".into()));
    }
    if clean_mask.rows() != p || clean_mask.cols() != n1 {
        return Err(Error::DimensionMismatch("clean mask does not match ground truth".into()));
    }
    let n = n1 + k;
    let i0 = ColumnSet::new(n, (n1..n).collect())?;

    let mut c0 = DenseMatrix::zeros(p, n);
    let mut observed = Vec::new();
    match scheme {
        CorruptionScheme::SingleAdversarial { magnitude } => {
            if n1 == 0 {
                return Err(Error::Precondition("no clean column to mimic".into()));
            }
            // copy of the first clean column with the last entry replaced
            for i in 0..p {
                let v = if i + 1 == p { T::cast(magnitude) } else { l0_clean.get(i, 0) };
                c0.set(i, n1, v);
                observed.push((i, n1));
            }
        }
        CorruptionScheme::NeutralGaussian => {
            if !(0.0 < rho && rho <= 1.0) {
                return Err(Error::InvalidParameter(format!("rho {rho} outside (0, 1]")));
            }
            for c in 0..k {
                for i in 0..p {
                    let v = rng.gaussian();
                    if rng.bernoulli(rho) {
                        c0.set(i, n1 + c, T::cast(v));
                        observed.push((i, n1 + c));
                    }
                }
            }
        }
        CorruptionScheme::AdversarialCopy => {
            if k > n1 {
                return Err(Error::Precondition(format!(
                    "{k} corrupted columns cannot each copy a distinct clean column of {n1}"
                )));
            }
            for c in 0..k {
                for i in 0..p {
                    let v = if clean_mask.contains(i, c) {
                        l0_clean.get(i, c)
                    } else {
                        T::cast(rng.gaussian())
                    };
                    c0.set(i, n1 + c, v);
                    observed.push((i, n1 + c));
                }
            }
        }
    }

    let mut l0 = DenseMatrix::zeros(p, n);
    for i in 0..p {
        for j in 0..n1 {
            l0.set(i, j, l0_clean.get(i, j));
        }
    }
    Ok(CorruptionParts { l0, c0, i0, observed: ObservationMask::new(p, n, observed)? })
}

/// Builder options beyond the plain parameter list.
#[derive(Clone, Copy, Debug, Default)]
pub struct BuildOptions {
    /// Shuffle the column order so corrupted columns are not positionally
    /// identifiable. Off by default; the instance's `i0` always records the
    /// true support either way.
    pub permute_columns: bool,
}

/// Generates a complete instance: low-rank ground truth, corruption,
/// observation mask, and the solver input `P_Omega(L0 + C0)`.
pub fn build_instance<T: Scalar>(
    p: usize,
    n: usize,
    r: usize,
    gamma: f64,
    rho: f64,
    scheme: CorruptionScheme,
    seed: u64,
) -> Result<ProblemInstance<T>> {
    build_instance_with(p, n, r, gamma, rho, scheme, seed, BuildOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn build_instance_with<T: Scalar>(
    p: usize,
    n: usize,
    r: usize,
    gamma: f64,
    rho: f64,
    scheme: CorruptionScheme,
    seed: u64,
    opts: BuildOptions,
) -> Result<ProblemInstance<T>> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} outside [0, 1)")));
    }
    if !(0.0 < rho && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho {rho} outside (0, 1]")));
    }
    let mut k = (gamma * n as f64).round() as usize;
    if k > 0 {
        if let CorruptionScheme::SingleAdversarial { .. } = scheme {
            k = 1;
        }
    }
    let n1 = n
        .checked_sub(k)
        .filter(|&n1| n1 > 0)
        .ok_or_else(|| Error::InvalidParameter("no clean columns left".into()))?;
    if r > p.min(n1) {
        return Err(Error::InvalidParameter(format!("rank {r} infeasible for {p}x{n1}")));
    }

    let mut rng = Rng::new(seed);
    let clean = gen_low_rank::<T>(p, n1, r, &mut rng)?;
    let m_clean = (rho * (p * n1) as f64).round() as usize;
    let clean_mask = sample_uniform_without_replacement(p, n1, m_clean, &mut rng)?;

    let (mut l0, mut c0, mut i0, mut omega) = if k == 0 {
        (clean.clone(), DenseMatrix::zeros(p, n), ColumnSet::empty(n), clean_mask.widen(n)?)
    } else {
        let parts = apply_corruption_with_count(&clean, scheme, k, rho, &clean_mask, &mut rng)?;
        let omega = clean_mask.widen(n)?.union(&parts.observed)?;
        (parts.l0, parts.c0, parts.i0, omega)
    };

    if opts.permute_columns {
        // Fisher-Yates permutation: position j receives original column perm[j]
        let mut perm: Vec<usize> = (0..n).collect();
        for t in 0..n {
            let j = t + rng.below(n - t);
            perm.swap(t, j);
        }
        let mut inverse = vec![0usize; n];
        for (dst, &src) in perm.iter().enumerate() {
            inverse[src] = dst;
        }
        l0 = DenseMatrix::from_fn(p, n, |i, j| l0.get(i, perm[j]));
        c0 = DenseMatrix::from_fn(p, n, |i, j| c0.get(i, perm[j]));
        i0 = ColumnSet::new(n, i0.members().iter().map(|&j| inverse[j]).collect())?;
        omega = ObservationMask::new(
            p,
            n,
            omega.entries().iter().map(|&(i, j)| (i, inverse[j])).collect(),
        )?;
    }

    let m_obs = project_mask(&l0.add(&c0)?, &omega)?;
    Ok(ProblemInstance { p, n, n1, r, gamma, rho, scheme, l0, c0, i0, omega, m_obs, seed })
}

impl<T: Scalar> ProblemInstance<T> {
    /// Numerical rank of the ground truth at the `1e-9 * sigma_1` rule.
    pub fn l0_numerical_rank(&self) -> Result<usize> {
        Ok(self.l0.svd()?.numerical_rank(T::cast(NUMERICAL_RANK_REL_TOL)))
    }

    /// Writes the instance as a directory: a `manifest.txt` of `key=value`
    /// lines plus the matrix/mask/column-set text files.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = BufWriter::new(fs::File::create(dir.join("manifest.txt"))?);
        writeln!(manifest, "p={}", self.p)?;
        writeln!(manifest, "n={}", self.n)?;
        writeln!(manifest, "n1={}", self.n1)?;
        writeln!(manifest, "r={}", self.r)?;
        writeln!(manifest, "gamma={}", self.gamma)?;
        writeln!(manifest, "rho={}", self.rho)?;
        writeln!(manifest, "scheme={}", self.scheme.name())?;
        if let CorruptionScheme::SingleAdversarial { magnitude } = self.scheme {
            writeln!(manifest, "magnitude={magnitude}")?;
        }
        writeln!(manifest, "seed={}", self.seed)?;
        drop(manifest);
        for (name, m) in [("l0", &self.l0), ("c0", &self.c0), ("m_obs", &self.m_obs)] {
            let mut f = BufWriter::new(fs::File::create(dir.join(format!("{name}.txt")))?);
            m.write_text(&mut f)?;
        }
        let mut f = BufWriter::new(fs::File::create(dir.join("omega.txt"))?);
        self.omega.write_text(&mut f)?;
        let mut f = BufWriter::new(fs::File::create(dir.join("i0.txt"))?);
        self.i0.write_text(&mut f)?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
        let mut kv = std::collections::HashMap::new();
        for line in manifest.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("manifest line {line:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let field = |k: &str| {
            kv.get(k).cloned().ok_or_else(|| Error::Parse(format!("manifest missing {k}")))
        };
        let read_mat = |name: &str| -> Result<DenseMatrix<T>> {
            let mut r = BufReader::new(fs::File::open(dir.join(format!("{name}.txt")))?);
            DenseMatrix::read_text(&mut r)
        };
        let parse_num = |s: String, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse(format!("bad {what}")))
        };
        let mut omega_r = BufReader::new(fs::File::open(dir.join("omega.txt"))?);
        let mut i0_r = BufReader::new(fs::File::open(dir.join("i0.txt"))?);
        let magnitude = match kv.get("magnitude") {
            Some(v) => v.parse().map_err(|_| Error::Parse("bad magnitude".into()))?,
            None => 10.0,
        };
        let scheme = CorruptionScheme::parse(&field("scheme")?, magnitude)?;
        Ok(Self {
            p: parse_num(field("p")?, "p")? as usize,
            n: parse_num(field("n")?, "n")? as usize,
            n1: parse_num(field("n1")?, "n1")? as usize,
            r: parse_num(field("r")?, "r")? as usize,
            gamma: parse_num(field("gamma")?, "gamma")?,
            rho: parse_num(field("rho")?, "rho")?,
            scheme,
            seed: field("seed")?
                .parse()
                .map_err(|_| Error::Parse("bad seed".into()))?,
            l0: read_mat("l0")?,
            c0: read_mat("c0")?,
            m_obs: read_mat("m_obs")?,
            omega: ObservationMask::read_text(&mut omega_r)?,
            i0: ColumnSet::read_text(&mut i0_r)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::project_columns;

    #[test]
    fn low_rank_generator_examples() {
        let mut rng = Rng::new(1);
        let z: DenseMatrix<f64> = gen_low_rank(5, 4, 0, &mut rng).unwrap();
        assert_eq!(z, DenseMatrix::zeros(5, 4));

        let l: DenseMatrix<f64> = gen_low_rank(30, 30, 3, &mut rng).unwrap();
        let f = l.svd().unwrap();
        assert!(f.sigma[3] <= 1e-9 * f.sigma[0], "4th singular value {}", f.sigma[3]);
        assert_eq!(f.numerical_rank(1e-9), 3);

        let mut r1 = Rng::new(99);
        let mut r2 = Rng::new(99);
        let a: DenseMatrix<f64> = gen_low_rank(6, 5, 2, &mut r1).unwrap();
        let b: DenseMatrix<f64> = gen_low_rank(6, 5, 2, &mut r2).unwrap();
        assert_eq!(a, b);

        assert!(gen_low_rank::<f64>(3, 2, 4, &mut rng).is_err());
    }

    #[test]
    fn uniform_sampling_examples() {
        let mut rng = Rng::new(3);
        let full = sample_uniform_without_replacement(4, 5, 20, &mut rng).unwrap();
        assert_eq!(full, ObservationMask::full(4, 5));
        let none = sample_uniform_without_replacement(4, 5, 0, &mut rng).unwrap();
        assert!(none.is_empty());
        assert!(sample_uniform_without_replacement(4, 5, 21, &mut rng).is_err());
        let m = sample_uniform_without_replacement(10, 10, 37, &mut rng).unwrap();
        assert_eq!(m.len(), 37);
    }

    #[test]
    fn uniform_sampling_cell_frequencies() {
        // 20x20 grid, half the entries: inclusion frequency near 0.5 per cell
        let p = 20;
        let n1 = 20;
        let trials = 10_000;
        let mut counts = vec![0u32; p * n1];
        let base = Rng::new(77);
        for t in 0..trials {
            let mut rng = base.child(t as u64);
            let mask = sample_uniform_without_replacement(p, n1, 200, &mut rng).unwrap();
            for &(i, j) in mask.entries() {
                counts[i * n1 + j] += 1;
            }
        }
        for (cell, &c) in counts.iter().enumerate() {
            let freq = c as f64 / trials as f64;
            assert!((freq - 0.5).abs() <= 0.02, "cell {cell} frequency {freq}");
        }
    }

    #[test]
    fn batch_sampling_examples() {
        let mut rng = Rng::new(5);
        let batches = sample_batch_replacement(10, 20, 3, 50, &mut rng).unwrap();
        assert_eq!(batches.len(), 3);
        for b in &batches {
            assert_eq!(b.len(), 50); // distinct within a batch by construction
        }
        // a single batch is exactly one without-replacement draw
        let mut r1 = Rng::new(31);
        let mut r2 = Rng::new(31);
        let one = sample_batch_replacement(6, 7, 1, 20, &mut r1).unwrap();
        let plain = sample_uniform_without_replacement(6, 7, 20, &mut r2).unwrap();
        assert_eq!(one[0], plain);
        let full = sample_batch_replacement(4, 5, 2, 20, &mut rng).unwrap();
        assert!(full.iter().all(|b| *b == ObservationMask::full(4, 5)));
        assert!(sample_batch_replacement(4, 5, 0, 3, &mut rng).is_err());
        assert!(sample_batch_replacement(4, 5, 2, 21, &mut rng).is_err());
    }

    #[test]
    fn single_adversarial_column_contents() {
        let mut rng = Rng::new(11);
        let clean: DenseMatrix<f64> = gen_low_rank(6, 5, 2, &mut rng).unwrap();
        let mask = ObservationMask::full(6, 5);
        let parts = apply_corruption(
            &clean,
            CorruptionScheme::SingleAdversarial { magnitude: 10.0 },
            0.2,
            1.0,
            &mask,
            &mut rng,
        )
        .unwrap();
        assert_eq!(parts.i0.members(), &[5]);
        for i in 0..6 {
            let want = if i == 5 { 10.0 } else { clean.get(i, 0) };
            assert_eq!(parts.c0.get(i, 5), want);
            assert!(parts.observed.contains(i, 5));
        }
        // padded ground truth is zero on the corrupted column
        assert_eq!(project_columns(&parts.l0, &parts.i0, false).unwrap().frob_norm(), 0.0);
    }

    #[test]
    fn zero_corruption_count_errors() {
        let mut rng = Rng::new(12);
        let clean: DenseMatrix<f64> = gen_low_rank(4, 4, 1, &mut rng).unwrap();
        let mask = ObservationMask::full(4, 4);
        let res = apply_corruption(
            &clean,
            CorruptionScheme::NeutralGaussian,
            0.0,
            0.5,
            &mask,
            &mut rng,
        );
        assert!(matches!(res, Err(Error::Precondition(_))));
    }

    #[test]
    fn adversarial_copy_agrees_on_observed_entries() {
        let mut rng = Rng::new(13);
        let p = 8;
        let n1 = 8;
        let clean: DenseMatrix<f64> = gen_low_rank(p, n1, 2, &mut rng).unwrap();
        let mask = sample_uniform_without_replacement(p, n1, 40, &mut rng).unwrap();
        let parts = apply_corruption_with_count(
            &clean,
            CorruptionScheme::AdversarialCopy,
            2,
            0.6,
            &mask,
            &mut rng,
        )
        .unwrap();
        for c in 0..2 {
            for i in 0..p {
                assert!(parts.observed.contains(i, n1 + c));
                if mask.contains(i, c) {
                    assert_eq!(parts.c0.get(i, n1 + c), clean.get(i, c));
                }
            }
        }
    }

    #[test]
    fn build_instance_invariants() {
        let inst: ProblemInstance<f64> = build_instance(
            20,
            20,
            2,
            0.1,
            0.6,
            CorruptionScheme::NeutralGaussian,
            42,
        )
        .unwrap();
        assert_eq!(inst.i0.len(), 2); // round(0.1 * 20)
        assert_eq!(inst.n1, 18);
        // masks on clean columns hold exactly round(rho * p * n1) entries
        let clean_count = inst
            .omega
            .entries()
            .iter()
            .filter(|&&(_, j)| !inst.i0.contains(j))
            .count();
        assert_eq!(clean_count, (0.6f64 * (20.0 * 18.0)).round() as usize);
        // supports are disjoint and M_obs matches the projected sum
        assert_eq!(project_columns(&inst.l0, &inst.i0, false).unwrap().frob_norm(), 0.0);
        assert_eq!(project_columns(&inst.c0, &inst.i0, true).unwrap().frob_norm(), 0.0);
        let want = project_mask(&inst.l0.add(&inst.c0).unwrap(), &inst.omega).unwrap();
        assert_eq!(inst.m_obs, want);
        assert_eq!(inst.l0_numerical_rank().unwrap(), 2);
    }

    #[test]
    fn build_instance_gamma_zero_and_full_rho() {
        let inst: ProblemInstance<f64> =
            build_instance(6, 7, 2, 0.0, 1.0, CorruptionScheme::NeutralGaussian, 5).unwrap();
        assert!(inst.i0.is_empty());
        assert_eq!(inst.omega, ObservationMask::full(6, 7));
        assert_eq!(inst.c0, DenseMatrix::zeros(6, 7));
        assert_eq!(inst.m_obs, inst.l0);
    }

    #[test]
    fn single_adversarial_forces_one_column() {
        let inst: ProblemInstance<f64> = build_instance(
            40,
            40,
            2,
            1.0 / 40.0,
            0.5,
            CorruptionScheme::SingleAdversarial { magnitude: 10.0 },
            9,
        )
        .unwrap();
        assert_eq!(inst.i0.len(), 1);
        assert_eq!(inst.n1, 39);
        // full-size regime: n = p = 400 with gamma = 1/400
        let inst: ProblemInstance<f64> = build_instance(
            400,
            400,
            2,
            1.0 / 400.0,
            0.3,
            CorruptionScheme::SingleAdversarial { magnitude: 10.0 },
            9,
        )
        .unwrap();
        assert_eq!(inst.i0.len(), 1);
        assert_eq!(inst.n1, 399);
    }

    #[test]
    fn instances_reproduce_bit_for_bit() {
        let a: ProblemInstance<f64> =
            build_instance(12, 10, 2, 0.2, 0.7, CorruptionScheme::AdversarialCopy, 1234).unwrap();
        let b: ProblemInstance<f64> =
            build_instance(12, 10, 2, 0.2, 0.7, CorruptionScheme::AdversarialCopy, 1234).unwrap();
        assert_eq!(a.l0, b.l0);
        assert_eq!(a.c0, b.c0);
        assert_eq!(a.m_obs, b.m_obs);
        assert_eq!(a.omega, b.omega);
    }

    #[test]
    fn permuted_instances_keep_invariants() {
        let inst: ProblemInstance<f64> = build_instance_with(
            10,
            12,
            2,
            0.25,
            0.8,
            CorruptionScheme::NeutralGaussian,
            77,
            BuildOptions { permute_columns: true },
        )
        .unwrap();
        assert_eq!(inst.i0.len(), 3);
        assert_eq!(project_columns(&inst.l0, &inst.i0, false).unwrap().frob_norm(), 0.0);
        assert_eq!(project_columns(&inst.c0, &inst.i0, true).unwrap().frob_norm(), 0.0);
        let want = project_mask(&inst.l0.add(&inst.c0).unwrap(), &inst.omega).unwrap();
        assert_eq!(inst.m_obs, want);
    }

    #[test]
    fn generated_column_spaces_are_incoherent() {
        // mu is a subspace quantity, so orthonormalizing the Gaussian
        // factors gives the same value as the SVD bases of the product
        use crate::theory::incoherence_mu;
        let p = 100;
        let r = 2;
        let mut below_ten = 0;
        for seed in 0..100u64 {
            let mut rng = Rng::new(9000 + seed);
            let a = DenseMatrix::from_fn(p, r, |_, _| rng.gaussian());
            let b = DenseMatrix::from_fn(p, r, |_, _| rng.gaussian());
            let mut mu: f64 = 0.0;
            for factor in [a, b] {
                let mut q = factor;
                for j in 0..r {
                    for prev in 0..j {
                        let mut proj = 0.0;
                        for i in 0..p {
                            proj += q.get(i, prev) * q.get(i, j);
                        }
                        for i in 0..p {
                            q.set(i, j, q.get(i, j) - proj * q.get(i, prev));
                        }
                    }
                    let norm = (0..p).map(|i| q.get(i, j) * q.get(i, j)).sum::<f64>().sqrt();
                    for i in 0..p {
                        q.set(i, j, q.get(i, j) / norm);
                    }
                }
                mu = mu.max(incoherence_mu(&q, p, r).unwrap());
            }
            assert!(mu.is_finite());
            if mu < 10.0 {
                below_ten += 1;
            }
        }
        assert!(below_ten >= 95, "only {below_ten}/100 seeds below mu = 10");
    }

    #[test]
    fn instance_directory_round_trip() {
        let inst: ProblemInstance<f64> =
            build_instance(6, 8, 2, 0.25, 0.5, CorruptionScheme::NeutralGaussian, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        inst.save_dir(dir.path()).unwrap();
        let back = ProblemInstance::<f64>::load_dir(dir.path()).unwrap();
        assert_eq!(inst.l0, back.l0);
        assert_eq!(inst.c0, back.c0);
        assert_eq!(inst.m_obs, back.m_obs);
        assert_eq!(inst.omega, back.omega);
        assert_eq!(inst.i0, back.i0);
        assert_eq!(inst.gamma, back.gamma);
        assert_eq!(inst.rho, back.rho);
        assert_eq!(inst.scheme, back.scheme);
    }
}
