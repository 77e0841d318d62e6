//! Per-trial recovery evaluation and seeded phase-diagram grids.
//!
//! A trial is scored against the ground truth on three axes: relative error
//! on the clean columns, exact identification of the corrupted support, and
//! containment of the recovered column space in the true one. A grid sweeps
//! two parameter axes, runs a fixed number of seeded trials per cell, and
//! reports the success frequency; every (cell, trial) derives its own seed
//! from the base seed, so results are independent of the parallel schedule.

use crate::error::{Error, Result};
use crate::operators::{project_columns, TangentSpace};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::solver::{extract_solution, solve, SolverConfig, SparsityMode};
use crate::synth::{build_instance, CorruptionScheme, ProblemInstance};
use crate::theory::{lambda_select, LambdaRule, TheoremParams};
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

/// Default relative-error threshold separating the exact-recovery regime
/// (errors around 1e-6) from failures (errors around 1e-1).
pub const DEFAULT_SUCCESS_TOL: f64 = 1e-3;

/// Outcome of one solve against ground truth. `success` requires all three
/// components: small clean-column error, exact support identification, and
/// a recovered column space inside the true one.
#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub clean_rel_error: f64,
    pub support_exact: bool,
    pub colspace_ok: bool,
    pub success: bool,
    pub iterations: usize,
    pub wall_time: f64,
    pub converged: bool,
    /// Tag describing a solver failure; such trials count as non-success.
    pub error: Option<String>,
}

impl RecoveryReport {
    fn failed(reason: String, wall_time: f64) -> Self {
        Self {
            clean_rel_error: f64::INFINITY,
            support_exact: false,
            colspace_ok: false,
            success: false,
            iterations: 0,
            wall_time,
            converged: false,
            error: Some(reason),
        }
    }
}

/// Solves an instance and scores the recovered solution.
pub fn run_trial<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &SolverConfig<T>,
    success_tol: f64,
) -> RecoveryReport {
    let start = Instant::now();
    let res = match solve(&inst.m_obs, &inst.omega, cfg) {
        Ok(res) => res,
        Err(e) => return RecoveryReport::failed(format!("solve: {e}"), elapsed(start)),
    };
    let threshold = cfg.support_threshold_for(&inst.m_obs);
    let sol = match extract_solution(&res, threshold) {
        Ok(sol) => sol,
        Err(e) => return RecoveryReport::failed(format!("extract: {e}"), elapsed(start)),
    };

    let support_exact = sol.support == inst.i0;
    let clean_l = match project_columns(&sol.l, &inst.i0, true) {
        Ok(m) => m,
        Err(e) => return RecoveryReport::failed(format!("score: {e}"), elapsed(start)),
    };
    let l0_norm = inst.l0.frob_norm().as_f64();
    let diff = match clean_l.sub(&inst.l0) {
        Ok(d) => d.frob_norm().as_f64(),
        Err(e) => return RecoveryReport::failed(format!("score: {e}"), elapsed(start)),
    };
    let clean_rel_error = if l0_norm > 0.0 {
        diff / l0_norm
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    // column-space containment, measured against the ground-truth basis
    let colspace_ok = match TangentSpace::from_low_rank(&inst.l0) {
        Ok(t0) => {
            let u0 = t0.u().clone();
            let proj = u0
                .matmul(&u0.tmatmul(&sol.l).expect("shapes agree"))
                .expect("shapes agree");
            let outside = sol.l.sub(&proj).expect("shapes agree").frob_norm().as_f64();
            let l_norm = sol.l.frob_norm().as_f64();
            outside <= success_tol * l_norm || l_norm == 0.0
        }
        Err(e) => return RecoveryReport::failed(format!("score: {e}"), elapsed(start)),
    };

    let success = clean_rel_error <= success_tol && support_exact && colspace_ok;
    RecoveryReport {
        clean_rel_error,
        support_exact,
        colspace_ok,
        success,
        iterations: res.iterations,
        wall_time: elapsed(start),
        converged: res.converged,
        error: None,
    }
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// A sweepable parameter axis.
#[derive(Clone, Debug, PartialEq)]
pub enum GridAxis {
    Rho(Vec<f64>),
    Gamma(Vec<f64>),
    Rank(Vec<usize>),
}

impl GridAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Rho(_) => "rho",
            Self::Gamma(_) => "gamma",
            Self::Rank(_) => "r",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Rho(v) | Self::Gamma(v) => v.len(),
            Self::Rank(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis labels for the CSV header / row prefixes.
    pub fn labels(&self) -> Vec<String> {
        match self {
            Self::Rho(v) | Self::Gamma(v) => v.iter().map(|x| x.to_string()).collect(),
            Self::Rank(v) => v.iter().map(|x| x.to_string()).collect(),
        }
    }
}

/// Penalty weight: fixed, or selected per cell by a closed-form rule
/// evaluated at the cell's parameters (with `mu0_estimate` standing in for
/// the unknown incoherence).
#[derive(Clone, Copy, Debug)]
pub enum LambdaChoice {
    Fixed(f64),
    Rule(LambdaRule),
}

/// Full description of a phase-diagram sweep. Axis values override the
/// corresponding fixed parameter cell by cell; all listed solver modes run
/// on the same instances.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub axis1: GridAxis,
    pub axis2: GridAxis,
    pub p: usize,
    pub n: usize,
    pub r: usize,
    pub gamma: f64,
    pub rho: f64,
    pub scheme: CorruptionScheme,
    pub modes: Vec<SparsityMode>,
    pub lambda: LambdaChoice,
    pub mu0_estimate: f64,
    pub trials_per_cell: usize,
    pub base_seed: u64,
    pub success_tol: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axis1.is_empty() || self.axis2.is_empty() {
            return Err(Error::InvalidParameter("grid axes must be nonempty".into()));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::InvalidParameter("trials_per_cell must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidParameter("at least one solver mode".into()));
        }
        Ok(())
    }

    fn cell_params(&self, i1: usize, i2: usize) -> (f64, f64, usize) {
        let mut rho = self.rho;
        let mut gamma = self.gamma;
        let mut r = self.r;
        for (axis, idx) in [(&self.axis1, i1), (&self.axis2, i2)] {
            match axis {
                GridAxis::Rho(v) => rho = v[idx],
                GridAxis::Gamma(v) => gamma = v[idx],
                GridAxis::Rank(v) => r = v[idx],
            }
        }
        (rho, gamma, r)
    }

    fn cell_lambda(&self, rho: f64, gamma: f64, r: usize) -> Result<f64> {
        match self.lambda {
            LambdaChoice::Fixed(l) => Ok(l),
            LambdaChoice::Rule(rule) => {
                let k = (gamma * self.n as f64).round() as usize;
                let n1 = self.n.saturating_sub(k).max(1);
                let params = TheoremParams::new(
                    self.p,
                    self.n,
                    n1,
                    r.max(1),
                    gamma,
                    rho,
                    self.mu0_estimate,
                );
                lambda_select(rule, &params)
            }
        }
    }
}

/// Success frequencies of one solver mode over the grid, `freq[i1][i2]`.
#[derive(Clone, Debug)]
pub struct ModeGrid {
    pub mode: SparsityMode,
    pub freq: Vec<Vec<f64>>,
}

/// Outcome of a sweep: axis labels plus one frequency matrix per mode.
#[derive(Clone, Debug)]
pub struct GridResult {
    pub axis1_name: String,
    pub axis1_labels: Vec<String>,
    pub axis2_name: String,
    pub axis2_labels: Vec<String>,
    pub grids: Vec<ModeGrid>,
}

/// Runs the sweep. Cells and trials execute in parallel; each task derives
/// its seed from `(base_seed, cell, trial)`, so the output is a pure
/// function of the spec.
pub fn run_grid<T: Scalar>(spec: &GridSpec) -> Result<GridResult> {
    spec.validate()?;
    let n1 = spec.axis1.len();
    let n2 = spec.axis2.len();
    let trials = spec.trials_per_cell;

    let tasks: Vec<(usize, usize, usize)> = (0..n1)
        .flat_map(|i1| (0..n2).flat_map(move |i2| (0..trials).map(move |t| (i1, i2, t))))
        .collect();

    let per_task: Vec<Vec<bool>> = tasks
        .par_iter()
        .map(|&(i1, i2, t)| {
            let (rho, gamma, r) = spec.cell_params(i1, i2);
            let seed = derive_seed(spec.base_seed, &[i1 as u64, i2 as u64, t as u64]);
            let lambda = match spec.cell_lambda(rho, gamma, r) {
                Ok(l) => l,
                Err(_) => return vec![false; spec.modes.len()],
            };
            let inst: ProblemInstance<T> =
                match build_instance(spec.p, spec.n, r, gamma, rho, spec.scheme, seed) {
                    Ok(inst) => inst,
                    Err(_) => return vec![false; spec.modes.len()],
                };
            spec.modes
                .iter()
                .map(|&mode| {
                    let mut cfg = SolverConfig::new(T::cast(lambda), mode);
                    cfg.max_iter = spec.max_iter;
                    cfg.tol = T::cast(spec.tol);
                    run_trial(&inst, &cfg, spec.success_tol).success
                })
                .collect()
        })
        .collect();

    let mut grids: Vec<ModeGrid> = spec
        .modes
        .iter()
        .map(|&mode| ModeGrid { mode, freq: vec![vec![0.0; n2]; n1] })
        .collect();
    for (task_idx, &(i1, i2, _)) in tasks.iter().enumerate() {
        for (m, grid) in grids.iter_mut().enumerate() {
            if per_task[task_idx][m] {
                grid.freq[i1][i2] += 1.0;
            }
        }
    }
    for grid in &mut grids {
        for row in &mut grid.freq {
            for v in row {
                *v /= trials as f64;
            }
        }
    }

    Ok(GridResult {
        axis1_name: spec.axis1.name().to_string(),
        axis1_labels: spec.axis1.labels(),
        axis2_name: spec.axis2.name().to_string(),
        axis2_labels: spec.axis2.labels(),
        grids,
    })
}

/// CSV form of one frequency matrix: a header row of axis-2 values, then one
/// row of frequencies per axis-1 value.
pub fn write_grid_csv<W: Write>(
    axis2_labels: &[String],
    freq: &[Vec<f64>],
    w: &mut W,
) -> Result<()> {
    writeln!(w, "{}", axis2_labels.join(","))?;
    for row in freq {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Plain (P2) PGM form with maxval 255: pixel = round(255 * frequency), so
/// white marks always-successful cells.
pub fn write_grid_pgm<W: Write>(freq: &[Vec<f64>], w: &mut W) -> Result<()> {
    let height = freq.len();
    let width = freq.first().map_or(0, |r| r.len());
    writeln!(w, "P2")?;
    writeln!(w, "{width} {height}")?;
    writeln!(w, "255")?;
    for row in freq {
        let pixels: Vec<String> =
            row.iter().map(|v| ((v * 255.0).round() as u32).to_string()).collect();
        writeln!(w, "{}", pixels.join(" "))?;
    }
    Ok(())
}

/// Parses a frequency CSV written by [`write_grid_csv`].
pub fn read_grid_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty grid csv".into()))?;
    let labels: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut freq = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
        freq.push(row.map_err(|_| Error::Parse(format!("bad grid row {line:?}")))?);
    }
    Ok((labels, freq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_trial_succeeds() {
        // fully observed, uncorrupted, rank 1: plain completion is exact
        let inst: ProblemInstance<f64> =
            build_instance(10, 10, 1, 0.0, 1.0, CorruptionScheme::NeutralGaussian, 7).unwrap();
        let cfg = SolverConfig::new(1.0, SparsityMode::CompletionOnly);
        let rep = run_trial(&inst, &cfg, DEFAULT_SUCCESS_TOL);
        assert!(rep.success, "{rep:?}");
        assert!(rep.clean_rel_error <= 1e-6);
        assert!(rep.support_exact && rep.colspace_ok);
        assert!(rep.error.is_none());
    }

    #[test]
    fn grid_frequency_arithmetic() {
        // single-cell grid with a trivially successful configuration
        let spec = GridSpec {
            axis1: GridAxis::Rho(vec![1.0]),
            axis2: GridAxis::Rank(vec![1]),
            p: 8,
            n: 8,
            r: 1,
            gamma: 0.0,
            rho: 1.0,
            scheme: CorruptionScheme::NeutralGaussian,
            modes: vec![SparsityMode::CompletionOnly],
            lambda: LambdaChoice::Fixed(1.0),
            mu0_estimate: 1.0,
            trials_per_cell: 2,
            base_seed: 3,
            success_tol: DEFAULT_SUCCESS_TOL,
            max_iter: 500,
            tol: 1e-6,
        };
        let result = run_grid::<f64>(&spec).unwrap();
        assert_eq!(result.grids.len(), 1);
        assert_eq!(result.grids[0].freq, vec![vec![1.0]]);
    }

    #[test]
    fn grid_is_deterministic() {
        let spec = GridSpec {
            axis1: GridAxis::Rho(vec![0.8, 1.0]),
            axis2: GridAxis::Rank(vec![1, 2]),
            p: 10,
            n: 10,
            r: 1,
            gamma: 0.0,
            rho: 1.0,
            scheme: CorruptionScheme::NeutralGaussian,
            modes: vec![SparsityMode::CompletionOnly],
            lambda: LambdaChoice::Fixed(1.0),
            mu0_estimate: 1.0,
            trials_per_cell: 2,
            base_seed: 11,
            success_tol: DEFAULT_SUCCESS_TOL,
            max_iter: 300,
            tol: 1e-6,
        };
        let a = run_grid::<f64>(&spec).unwrap();
        let b = run_grid::<f64>(&spec).unwrap();
        assert_eq!(a.grids[0].freq, b.grids[0].freq);
    }

    #[test]
    fn corollary3_lambda_matches_completion_only_on_clean_grids() {
        // with no corruption, the rule lambda = n suppresses C entirely: the
        // two modes agree cell by cell and C* is numerically zero
        let spec = GridSpec {
            axis1: GridAxis::Rho(vec![0.7, 1.0]),
            axis2: GridAxis::Rank(vec![1, 2]),
            p: 14,
            n: 14,
            r: 1,
            gamma: 0.0,
            rho: 1.0,
            scheme: CorruptionScheme::NeutralGaussian,
            modes: vec![SparsityMode::ColumnSparse, SparsityMode::CompletionOnly],
            lambda: LambdaChoice::Rule(LambdaRule::Corollary3),
            mu0_estimate: 1.0,
            trials_per_cell: 2,
            base_seed: 17,
            success_tol: DEFAULT_SUCCESS_TOL,
            max_iter: 500,
            tol: 1e-6,
        };
        let result = run_grid::<f64>(&spec).unwrap();
        assert_eq!(result.grids[0].freq, result.grids[1].freq);

        let inst: ProblemInstance<f64> =
            build_instance(14, 14, 2, 0.0, 0.7, CorruptionScheme::NeutralGaussian, 99).unwrap();
        let cfg = SolverConfig::new(14.0, SparsityMode::ColumnSparse);
        let res = crate::solver::solve(&inst.m_obs, &inst.omega, &cfg).unwrap();
        assert!(res.c.frob_norm() <= 1e-8, "C norm {}", res.c.frob_norm());
    }

    #[test]
    fn frequency_of_three_in_five_is_point_six() {
        // aggregation arithmetic, independent of the solver
        let successes = [true, true, false, true, false];
        let freq = successes.iter().filter(|&&s| s).count() as f64 / successes.len() as f64;
        assert_eq!(freq, 0.6);
    }

    #[test]
    fn csv_and_pgm_emission() {
        let labels = vec!["1".to_string(), "2".to_string()];
        let freq = vec![vec![1.0, 0.0], vec![0.6, 0.2]];
        let mut csv = Vec::new();
        write_grid_csv(&labels, &freq, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 3);
        let (labels2, freq2) = read_grid_csv(&text).unwrap();
        assert_eq!(labels2, labels);
        assert_eq!(freq2, freq);

        let mut pgm = Vec::new();
        write_grid_pgm(&[vec![1.0]], &mut pgm).unwrap();
        let text = String::from_utf8(pgm).unwrap();
        assert_eq!(text, "P2\n1 1\n255\n255\n");
        let mut pgm = Vec::new();
        write_grid_pgm(&[vec![0.0]], &mut pgm).unwrap();
        assert_eq!(String::from_utf8(pgm).unwrap(), "P2\n1 1\n255\n0\n");
    }
}
