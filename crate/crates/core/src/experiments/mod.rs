//! Monte Carlo simulation of both experiments and Neyman–Pearson testing.
//!
//! For simple hypotheses the likelihood-ratio test at threshold one
//! minimizes the sum of the two error probabilities, and that minimum equals
//! `1 - TV`. [`estimate_tv`] therefore estimates the total variation between
//! the two hypotheses within either experiment.

mod gwn;
pub mod rng;

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density_core::{build_cdf, hellinger_sq_densities, l1_distance, CdfTable, Density, QuadConfig, DEFAULT_CDF_GRID};
use crate::distances::{deficiency_lower_bound_from, gwn_tv_from_h2};
use crate::output::Table;
use crate::{Error, Result};

pub use gwn::{
    log_likelihood_ratio, log_likelihood_ratio_with, np_test_gwn, simulate_gwn_path, simulate_gwn_path_on,
    GwnPath, TimeGrid, BREAKPOINT_CELLS, DEFAULT_GRID_M,
};
use gwn::InformativeCells;
use rng::{stream, HYPOTHESIS_F, HYPOTHESIS_G, MODEL_DENSITY, MODEL_GWN};

pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum Model {
    /// `n` i.i.d. observations.
    Density,
    /// White noise on a grid of `grid_m` uniform cells (refined at breakpoints).
    Gwn { grid_m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// `1 - (type I + type II error)`.
    pub value: f64,
    /// `sqrt(p1 (1 - p1)/reps + p2 (1 - p2)/reps)`.
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
    pub type_i: f64,
    pub type_ii: f64,
}

impl McEstimate {
    fn from_counts(type_i: u64, type_ii: u64, reps: usize, seed: u64) -> Self {
        let r = reps as f64;
        let (p1, p2) = (type_i as f64 / r, type_ii as f64 / r);
        Self {
            value: 1.0 - (p1 + p2),
            std_error: (p1 * (1.0 - p1) / r + p2 * (1.0 - p2) / r).sqrt(),
            reps,
            seed,
            type_i: p1,
            type_ii: p2,
        }
    }
}

/// Running `sum log(g/f)` with the infinite cases kept apart.
#[derive(Debug, Default, Clone, Copy)]
struct LogRatio {
    finite: f64,
    pos_inf: bool,
    neg_inf: bool,
}

impl LogRatio {
    #[inline]
    fn add(&mut self, x: f64, fx: f64, gx: f64) -> Result<()> {
        match (fx > 0.0, gx > 0.0) {
            (true, true) => self.finite += gx.ln() - fx.ln(),
            (false, true) => self.pos_inf = true,
            (true, false) => self.neg_inf = true,
            (false, false) => return Err(Error::ZeroProbabilitySample { x }),
        }
        Ok(())
    }

    fn rejects(&self) -> Result<bool> {
        match (self.pos_inf, self.neg_inf) {
            (true, true) => Err(Error::Validation(
                "sample has points where only f and points where only g vanish".into(),
            )),
            (true, false) => Ok(true),
            (false, true) => Ok(false),
            (false, false) => Ok(self.finite > 0.0),
        }
    }
}

/// Neyman–Pearson test of `H0: f` against `g` from an i.i.d. sample; `true`
/// rejects `H0`. Rejects iff `sum log(g(X_i)/f(X_i)) > 0`; a point with
/// `f = 0 < g` forces rejection, `g = 0 < f` forces acceptance.
pub fn np_test_density(samples: &[f64], f: &Density, g: &Density) -> Result<bool> {
    let mut lr = LogRatio::default();
    for &x in samples {
        lr.add(x, f.eval(x), g.eval(x))?;
    }
    lr.rejects()
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::InvalidParameter(format!("reps must be at least {MIN_REPS}, got {reps}")));
    }
    Ok(())
}

/// Monte Carlo estimate of the total variation between the `f`- and
/// `g`-experiments with `n` observations (or noise level `n^{-1/2}`).
///
/// `reps` datasets are simulated under each hypothesis; replication `i`
/// under hypothesis `h` draws from its own stream
/// [`rng::derive_seed`]`(seed, model, h, i)`.
pub fn estimate_tv(model: Model, f: &Density, g: &Density, n: u64, reps: usize, seed: u64) -> Result<McEstimate> {
    check_reps(reps)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let (type_i, type_ii) = match model {
        Model::Density => {
            let cfg = QuadConfig::default();
            let tf = build_cdf(f, &cfg, DEFAULT_CDF_GRID)?;
            let tg = build_cdf(g, &cfg, DEFAULT_CDF_GRID)?;
            let run = |table: &CdfTable, hyp: u64, rep: u64| -> Result<bool> {
                let mut rng = stream(seed, MODEL_DENSITY, hyp, rep);
                let mut lr = LogRatio::default();
                for _ in 0..n {
                    let x = table.quantile(rng.random::<f64>());
                    lr.add(x, f.eval(x), g.eval(x))?;
                }
                lr.rejects()
            };
            count_errors(reps, |rep| Ok((run(&tf, HYPOTHESIS_F, rep)?, run(&tg, HYPOTHESIS_G, rep)?)))?
        }
        Model::Gwn { grid_m } => {
            let mut bps = f.breakpoints().to_vec();
            bps.extend_from_slice(g.breakpoints());
            let grid = TimeGrid::refined(grid_m, &bps)?;
            // Cells with equal drifts contribute nothing to the likelihood
            // ratio, so only the informative increments are simulated.
            let cells = InformativeCells::new(&grid, f, g);
            count_errors(reps, |rep| {
                let mut r1 = stream(seed, MODEL_GWN, HYPOTHESIS_F, rep);
                let mut r2 = stream(seed, MODEL_GWN, HYPOTHESIS_G, rep);
                Ok((cells.rejects(&mut r1, false, n), cells.rejects(&mut r2, true, n)))
            })?
        }
    };
    Ok(McEstimate::from_counts(type_i, type_ii, reps, seed))
}

/// Counts `(type I, type II)` errors; `run(rep)` returns the decisions
/// `(rejects under f, rejects under g)`.
fn count_errors<F>(reps: usize, run: F) -> Result<(u64, u64)>
where
    F: Fn(u64) -> Result<(bool, bool)> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let (under_f, under_g) = run(rep)?;
            Ok((under_f as u64, (!under_g) as u64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub n_h2: f64,
    pub tv_density: McEstimate,
    pub tv_gwn: McEstimate,
    pub tv_gwn_closed: f64,
    pub deficiency_lb: f64,
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "n",
    "nH2",
    "tv_density_mc",
    "tv_density_se",
    "tv_gwn_mc",
    "tv_gwn_se",
    "tv_gwn_closed",
    "deficiency_lb",
];

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(SWEEP_COLUMNS);
    for r in rows {
        t.push(vec![
            r.n as f64,
            r.n_h2,
            r.tv_density.value,
            r.tv_density.std_error,
            r.tv_gwn.value,
            r.tv_gwn.std_error,
            r.tv_gwn_closed,
            r.deficiency_lb,
        ]);
    }
    t
}

/// For every `n` in `n_grid`: `n H^2`, both Monte Carlo TVs, the closed-form
/// white-noise TV and the deficiency lower bound of the pair built for `n`.
pub fn consistency_sweep<B>(
    pair_builder: B,
    n_grid: &[u64],
    reps: usize,
    seed: u64,
    grid_m: usize,
) -> Result<Vec<SweepRow>>
where
    B: Fn(u64) -> Result<(Density, Density)>,
{
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!("n_grid must be strictly increasing, got {n_grid:?}")));
    }
    let cfg = QuadConfig::default();
    n_grid
        .iter()
        .map(|&n| {
            let (f, g) = pair_builder(n)?;
            let h2 = hellinger_sq_densities(&f, &g, &cfg)?;
            let l1 = l1_distance(&f, &g, &cfg)?;
            let sub_seed = rng::derive_seed(seed, 0x7377_6565_70, n, 0);
            Ok(SweepRow {
                n,
                n_h2: n as f64 * h2,
                tv_density: estimate_tv(Model::Density, &f, &g, n, reps, sub_seed)?,
                tv_gwn: estimate_tv(Model::Gwn { grid_m }, &f, &g, n, reps, sub_seed)?,
                tv_gwn_closed: gwn_tv_from_h2(h2, n),
                deficiency_lb: deficiency_lower_bound_from(l1, h2, n),
            })
        })
        .collect()
}

/// Shared grid for paths compared under both hypotheses.
pub fn shared_grid(f: &Density, g: &Density, grid_m: usize) -> Result<Arc<TimeGrid>> {
    let mut bps = f.breakpoints().to_vec();
    bps.extend_from_slice(g.breakpoints());
    Ok(Arc::new(TimeGrid::refined(grid_m, &bps)?))
}

#[cfg(test)]
mod tests;
