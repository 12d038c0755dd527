use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{run_simulation, RunConfig, SimulationOutput, Termination};

/// The `(α, β, h)` grid of a stability study.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub hs: Vec<f64>,
    /// Shared settings; `alpha`, `beta` and `n_elems` are overwritten per cell.
    pub base: RunConfig<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 1.0, 2.0],
            betas: vec![0.0, 1.0, 2.0, 5.0],
            hs: vec![5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2],
            base: RunConfig::default(),
        }
    }
}

impl SweepGrid {
    pub fn single(alpha: f64, beta: f64, h: f64) -> Self {
        Self {
            alphas: vec![alpha],
            betas: vec![beta],
            hs: vec![h],
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.alphas.len() * self.betas.len() * self.hs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.alphas.iter().any(|&a| !(a > 0.0)) {
            return bad("every alpha must be positive");
        }
        if self.betas.iter().any(|&b| !(b >= 0.0)) {
            return bad("every beta must be non-negative");
        }
        if self.hs.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
            return bad("every h must lie in (0, 1]");
        }
        self.base.validate()
    }

    /// Cells in `α`-major, then `β`, then `h` order.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &a in &self.alphas {
            for &b in &self.betas {
                for &h in &self.hs {
                    out.push((a, b, h));
                }
            }
        }
        out
    }

    /// Configuration of one cell.
    pub fn config(&self, alpha: f64, beta: f64, h: f64) -> RunConfig<f64> {
        RunConfig {
            n_elems: RunConfig::<f64>::with_width(h).n_elems,
            alpha,
            beta,
            ..self.base.clone()
        }
    }
}

/// How a sweep cell ended.
#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Finished(Termination),
    /// The run could not start; the message is kept out of the table.
    Error,
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Finished(t) => t.label(),
            CellStatus::Error => "error",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "error" => Some(CellStatus::Error),
            other => Termination::from_label(other).map(CellStatus::Finished),
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub var: f64,
    pub t_final: f64,
    pub n_steps: usize,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, alpha: f64, beta: f64, h: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.alpha == alpha && c.beta == beta && c.h == h)
    }
}

/// Runs one cell. Failures end up in the status, never in an `Err`.
pub fn run_cell(grid: &SweepGrid, alpha: f64, beta: f64, h: f64) -> (SweepCell, Option<SimulationOutput<f64>>) {
    match run_simulation(grid.config(alpha, beta, h)) {
        Ok(out) => (
            SweepCell {
                alpha,
                beta,
                h,
                var: out.summary.var,
                t_final: out.summary.t_reached,
                n_steps: out.summary.n_steps,
                status: CellStatus::Finished(out.summary.termination.clone()),
            },
            Some(out),
        ),
        Err(_) => (
            SweepCell {
                alpha,
                beta,
                h,
                var: f64::NAN,
                t_final: 0.0,
                n_steps: 0,
                status: CellStatus::Error,
            },
            None,
        ),
    }
}

/// Runs every cell on `workers` threads (0 = all cores). `on_cell` sees each
/// finished cell with its full output, in completion order.
pub fn run_sweep_with<F>(grid: &SweepGrid, workers: usize, on_cell: F) -> Result<SweepResult>
where
    F: Fn(&SweepCell, Option<&SimulationOutput<f64>>) + Sync,
{
    grid.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        grid.cells()
            .into_par_iter()
            .map(|(a, b, h)| {
                let (cell, out) = run_cell(grid, a, b, h);
                on_cell(&cell, out.as_ref());
                cell
            })
            .collect()
    });
    Ok(SweepResult { cells })
}

pub fn run_sweep(grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    run_sweep_with(grid, workers, |_, _| {})
}
