//! Discretized white-noise observations `dY_t = 2 sqrt(f(t)) dt + n^{-1/2} dW_t`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream, HYPOTHESIS_F, MODEL_GWN};
use crate::density_core::Density;
use crate::{Error, Result};

pub const DEFAULT_GRID_M: usize = 4096;
/// Sub-cells placed inside every interval between consecutive breakpoints.
pub const BREAKPOINT_CELLS: usize = 256;

/// Partition of `[0, 1]` into cells; drifts are evaluated at cell midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    edges: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(grid_m: usize) -> Result<Self> {
        Self::refined(grid_m, &[])
    }

    /// `grid_m` uniform cells, with every interval between consecutive
    /// breakpoints additionally split into [`BREAKPOINT_CELLS`] cells so that
    /// perturbations narrower than a uniform cell are resolved.
    pub fn refined(grid_m: usize, breakpoints: &[f64]) -> Result<Self> {
        if grid_m < 16 {
            return Err(Error::InvalidParameter(format!("grid_m must be at least 16, got {grid_m}")));
        }
        let mut edges: Vec<f64> = (0..=grid_m).map(|i| i as f64 / grid_m as f64).collect();
        let mut bps: Vec<f64> = breakpoints.iter().copied().filter(|b| (0.0..=1.0).contains(b)).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        for w in bps.windows(2) {
            edges.extend((0..=BREAKPOINT_CELLS).map(|k| w[0] + (w[1] - w[0]) * k as f64 / BREAKPOINT_CELLS as f64));
        }
        edges.extend(bps);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        Ok(Self { edges })
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| w[1] - w[0])
    }

    /// `b(t_i) = 2 sqrt(f(t_i))` at the midpoints.
    pub fn drift(&self, f: &Density) -> Vec<f64> {
        self.midpoints().map(|t| 2.0 * f.eval(t).max(0.0).sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwnPath {
    /// Number of uniform cells before breakpoint refinement.
    pub grid_m: usize,
    pub grid: Arc<TimeGrid>,
    /// `dY_i = b(t_i) dt_i + n^{-1/2} sqrt(dt_i) xi_i`, one per cell.
    pub increments: Vec<f64>,
    pub n: u64,
    pub seed: u64,
}

/// Simulates a path on `grid_m` uniform cells refined at `f`'s breakpoints.
pub fn simulate_gwn_path(f: &Density, n: u64, grid_m: usize, seed: u64) -> Result<GwnPath> {
    let grid = Arc::new(TimeGrid::refined(grid_m, f.breakpoints())?);
    simulate_gwn_path_on(f, n, grid_m, grid, seed)
}

/// Simulates a path on a given grid (e.g. one refined at the breakpoints of
/// both hypotheses).
pub fn simulate_gwn_path_on(
    f: &Density,
    n: u64,
    grid_m: usize,
    grid: Arc<TimeGrid>,
    seed: u64,
) -> Result<GwnPath> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let sigma = (n as f64).powf(-0.5);
    let mut rng = stream(seed, MODEL_GWN, HYPOTHESIS_F, 0);
    let increments = grid
        .drift(f)
        .iter()
        .zip(grid.widths())
        .map(|(b, dt)| {
            let xi: f64 = rng.sample(StandardNormal);
            b * dt + sigma * dt.sqrt() * xi
        })
        .collect();
    Ok(GwnPath {
        grid_m,
        grid,
        increments,
        n,
        seed,
    })
}

/// Girsanov log-likelihood ratio `log dQ_g/dQ_f` of the discretized path,
/// `n [sum (b_g - b_f) dY - 1/2 sum (b_g^2 - b_f^2) dt]`.
pub fn log_likelihood_ratio(path: &GwnPath, f: &Density, g: &Density) -> f64 {
    log_likelihood_ratio_with(path, &path.grid.drift(f), &path.grid.drift(g))
}

/// [`log_likelihood_ratio`] with precomputed midpoint drifts.
pub fn log_likelihood_ratio_with(path: &GwnPath, bf: &[f64], bg: &[f64]) -> f64 {
    let mut s = 0.0;
    for (((dy, dt), a), b) in path.increments.iter().zip(path.grid.widths()).zip(bf).zip(bg) {
        s += (b - a) * dy - 0.5 * (b * b - a * a) * dt;
    }
    path.n as f64 * s
}

impl GwnPath {
    /// Merges adjacent cell pairs: the same Brownian path observed on a grid
    /// with half the resolution. Requires an even number of cells.
    pub fn coarsen(&self) -> Result<GwnPath> {
        let cells = self.increments.len();
        if cells % 2 != 0 || cells < 32 {
            return Err(Error::InvalidParameter(format!(
                "cannot halve a grid of {cells} cells"
            )));
        }
        let edges: Vec<f64> = self.grid.edges().iter().step_by(2).copied().collect();
        let increments = self.increments.chunks(2).map(|c| c[0] + c[1]).collect();
        Ok(GwnPath {
            grid_m: self.grid_m / 2,
            grid: Arc::new(TimeGrid { edges }),
            increments,
            n: self.n,
            seed: self.seed,
        })
    }
}

/// Neyman–Pearson test of `H0: f` against `g`; `true` rejects `H0`.
/// A log-likelihood ratio of exactly zero accepts.
pub fn np_test_gwn(path: &GwnPath, f: &Density, g: &Density) -> bool {
    log_likelihood_ratio(path, f, g) > 0.0
}

/// Cells where the two drifts differ; the likelihood ratio ignores all others.
#[derive(Debug, Clone)]
pub(crate) struct InformativeCells {
    pub bf: Vec<f64>,
    pub bg: Vec<f64>,
    pub dt: Vec<f64>,
}

impl InformativeCells {
    pub fn new(grid: &TimeGrid, f: &Density, g: &Density) -> Self {
        let (mut bf, mut bg, mut dt) = (Vec::new(), Vec::new(), Vec::new());
        for ((a, b), w) in grid.drift(f).into_iter().zip(grid.drift(g)).zip(grid.widths()) {
            if a != b {
                bf.push(a);
                bg.push(b);
                dt.push(w);
            }
        }
        Self { bf, bg, dt }
    }

    /// Simulates the informative increments under the drift `truth` (`bf` or
    /// `bg`) and returns the test decision.
    pub fn rejects<R: Rng + ?Sized>(&self, rng: &mut R, under_g: bool, n: u64) -> bool {
        let sigma = (n as f64).powf(-0.5);
        let mut s = 0.0;
        for i in 0..self.dt.len() {
            let (a, b, dt) = (self.bf[i], self.bg[i], self.dt[i]);
            let drift = if under_g { b } else { a };
            let xi: f64 = rng.sample(StandardNormal);
            let dy = drift * dt + sigma * dt.sqrt() * xi;
            s += (b - a) * dy - 0.5 * (b * b - a * a) * dt;
        }
        n as f64 * s > 0.0
    }
}
