//! Information distances in the density and white-noise experiments.
//!
//! With `H^2 = int (sqrt f - sqrt g)^2` for one observation:
//!
//! * white noise `dY = 2 sqrt(f) dt + n^{-1/2} dW`:
//!   `TV = 1 - 2 Phi(-sqrt(n H^2))`, `H^2_n = 2 - 2 exp(-n H^2 / 2)`;
//! * `n` i.i.d. observations: `TV <= 1 - (1 - TV_1)^n`,
//!   `H^2_n = 2 - 2 (1 - H^2 / 2)^n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::density_core::{hellinger_sq_densities, integrate, l1_distance, Density, QuadConfig};
use crate::output::Table;
use crate::{Error, Result};

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

/// `1 - 2 Phi(-sqrt(n h2))` from the one-observation squared Hellinger distance.
pub fn gwn_tv_from_h2(h2: f64, n: u64) -> f64 {
    1.0 - 2.0 * normal_cdf(-(n as f64 * h2.max(0.0)).sqrt())
}

/// `2 - 2 exp(-(n/2) h2)`.
pub fn gwn_hellinger_sq_from_h2(h2: f64, n: u64) -> f64 {
    -2.0 * (-0.5 * n as f64 * h2.max(0.0)).exp_m1()
}

/// Total variation between the white-noise experiments driven by `f` and `g`.
pub fn gwn_tv(f: &Density, g: &Density, n: u64) -> Result<f64> {
    check_n(n)?;
    Ok(gwn_tv_from_h2(hellinger_sq_densities(f, g, &QuadConfig::default())?, n))
}

/// Squared Hellinger distance between the white-noise experiments.
pub fn gwn_hellinger_sq(f: &Density, g: &Density, n: u64) -> Result<f64> {
    check_n(n)?;
    Ok(gwn_hellinger_sq_from_h2(hellinger_sq_densities(f, g, &QuadConfig::default())?, n))
}

/// `1 - (1 - tv)^n`, evaluated as `-expm1(n log1p(-tv))`.
pub fn product_tv_upper(tv_1obs: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tv_1obs) {
        return Err(Error::InvalidParameter(format!("tv must lie in [0, 1], got {tv_1obs}")));
    }
    if tv_1obs == 1.0 {
        return Ok(if n == 0 { 0.0 } else { 1.0 });
    }
    Ok(-(n as f64 * (-tv_1obs).ln_1p()).exp_m1())
}

/// `2 - 2 (1 - h2/2)^n`.
pub fn product_hellinger_sq(h2_1obs: f64, n: u64) -> Result<f64> {
    if !(0.0..=2.0).contains(&h2_1obs) {
        return Err(Error::InvalidParameter(format!("H^2 must lie in [0, 2], got {h2_1obs}")));
    }
    if h2_1obs == 2.0 {
        return Ok(if n == 0 { 0.0 } else { 2.0 });
    }
    Ok(-2.0 * (n as f64 * (-0.5 * h2_1obs).ln_1p()).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub n: u64,
    pub tolerance: f64,
    /// `H^2(Q^n)` (white noise).
    pub h2_gwn: f64,
    /// `H^2(P^n)` (i.i.d. sample).
    pub h2_density: f64,
    /// `H^2(P^n) - H^2(Q^n) >= 0`.
    pub info_lower_margin: f64,
    /// `H^2(Q^n) + 2 log(n)/n - H^2(P^n) >= 0`.
    pub info_upper_margin: f64,
    pub tv_1obs: f64,
    pub h2_1obs: f64,
    /// `TV - H^2/2 >= 0`.
    pub tv_lower_margin: f64,
    /// `min(H, 1 - (1 - H^2/2)^2 / 2) - TV >= 0`.
    pub tv_upper_margin: f64,
    pub info_lower_ok: bool,
    pub info_upper_ok: bool,
    pub tv_lower_ok: bool,
    pub tv_upper_ok: bool,
}

impl SandwichReport {
    pub fn all_ok(&self) -> bool {
        self.info_lower_ok && self.info_upper_ok && self.tv_lower_ok && self.tv_upper_ok
    }
}

/// Sandwich inequalities from precomputed one-observation `L1` and `H^2`.
pub fn sandwich_from(l1: f64, h2: f64, n: u64, tolerance: f64) -> Result<SandwichReport> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("sandwich checks need n > 1, got {n}")));
    }
    let h2 = h2.clamp(0.0, 2.0);
    let tv = (0.5 * l1).clamp(0.0, 1.0);
    let h2_gwn = gwn_hellinger_sq_from_h2(h2, n);
    let h2_density = product_hellinger_sq(h2, n)?;
    let nf = n as f64;
    let info_lower_margin = h2_density - h2_gwn;
    let info_upper_margin = h2_gwn + 2.0 * nf.ln() / nf - h2_density;
    let tv_lower_margin = tv - 0.5 * h2;
    let affinity = 1.0 - 0.5 * h2;
    let tv_upper_margin = h2.sqrt().min(1.0 - 0.5 * affinity * affinity) - tv;
    Ok(SandwichReport {
        n,
        tolerance,
        h2_gwn,
        h2_density,
        info_lower_margin,
        info_upper_margin,
        tv_1obs: tv,
        h2_1obs: h2,
        tv_lower_margin,
        tv_upper_margin,
        info_lower_ok: info_lower_margin >= -tolerance,
        info_upper_ok: info_upper_margin >= -tolerance,
        tv_lower_ok: tv_lower_margin >= -tolerance,
        tv_upper_ok: tv_upper_margin >= -tolerance,
    })
}

/// `H^2(Q^n) <= H^2(P^n) <= H^2(Q^n) + 2 log(n)/n` and
/// `H^2/2 <= TV <= min(H, 1 - (1 - H^2/2)^2/2)` for one observation.
pub fn sandwich_checks(f: &Density, g: &Density, n: u64, tolerance: f64) -> Result<SandwichReport> {
    let cfg = QuadConfig::default();
    sandwich_from(l1_distance(f, g, &cfg)?, hellinger_sq_densities(f, g, &cfg)?, n, tolerance)
}

/// `(1/2)(1 - l1/2)^n - Phi(-sqrt(n h2))`.
pub fn deficiency_lower_bound_from(l1: f64, h2: f64, n: u64) -> f64 {
    let half_l1 = (0.5 * l1).clamp(0.0, 1.0);
    let agree = if half_l1 == 1.0 {
        0.0
    } else {
        (n as f64 * (-half_l1).ln_1p()).exp()
    };
    0.5 * agree - normal_cdf(-(n as f64 * h2.max(0.0)).sqrt())
}

/// Binary-experiment lower bound on the deficiency of the white-noise
/// experiment with respect to the density experiment; may be negative.
pub fn deficiency_lower_bound(f1: &Density, f2: &Density, n: u64) -> Result<f64> {
    check_n(n)?;
    let cfg = QuadConfig::default();
    Ok(deficiency_lower_bound_from(
        l1_distance(f1, f2, &cfg)?,
        hellinger_sq_densities(f1, f2, &cfg)?,
        n,
    ))
}

/// `(1/2) e^{-3/2} (1 - sqrt(e/pi))`.
pub fn limiting_deficiency_constant() -> f64 {
    0.5 * (-1.5f64).exp() * (1.0 - (std::f64::consts::E / std::f64::consts::PI).sqrt())
}

/// Pointwise estimation rate `n^{-beta/(beta+1)} + (f(x)/n)^{beta/(2beta+1)}`.
pub fn pointwise_rate(f_at_x: f64, n: u64, beta: f64) -> Result<f64> {
    check_n(n)?;
    if !(f_at_x >= 0.0) {
        return Err(Error::InvalidParameter(format!("f(x) must be non-negative, got {f_at_x}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let nf = n as f64;
    Ok(nf.powf(-beta / (beta + 1.0)) + (f_at_x / nf).powf(beta / (2.0 * beta + 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `min(1, n^{(1-2beta)/(2beta+1)} int f^{-(2beta+3)/(2beta+1)})`.
    pub value: f64,
    /// The integral; infinite when divergent.
    pub integral: f64,
    pub divergent: bool,
    pub warning: Option<String>,
}

/// Distance from a zero endpoint at which the local exponent is probed and
/// below which the integrand is replaced by its power-law tail.
const ZERO_EPS: [f64; 2] = [1e-10, 1e-12];

/// Order of the squared deficiency between the two experiments for `f`.
pub fn deficiency_rate(f: &Density, beta: f64, n: u64) -> Result<RateReport> {
    check_n(n)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let warning = (!(beta > 0.5 && beta <= 1.0))
        .then(|| format!("beta = {beta} lies outside the validity window (1/2, 1]"));
    let p = (2.0 * beta + 3.0) / (2.0 * beta + 1.0);
    let integrand = |x: f64| f.eval(x).powf(-p);
    let scale = (n as f64).powf((1.0 - 2.0 * beta) / (2.0 * beta + 1.0));
    let divergent = |warning| RateReport {
        value: 1.0,
        integral: f64::INFINITY,
        divergent: true,
        warning,
    };

    // Interior zeros make the integral diverge for every admissible beta.
    const M: usize = 4096;
    if (1..M).any(|i| f.eval(i as f64 / M as f64) <= 0.0) {
        return Ok(divergent(warning));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut tail = 0.0;
    for (endpoint, inward) in [(0.0, 1.0), (1.0, -1.0)] {
        if f.eval(endpoint) > 0.0 {
            continue;
        }
        let g1 = integrand(endpoint + inward * ZERO_EPS[0]);
        let g2 = integrand(endpoint + inward * ZERO_EPS[1]);
        if !g1.is_finite() || !g2.is_finite() {
            return Ok(divergent(warning));
        }
        // g ~ c d^{-s} with d the distance to the endpoint.
        let s = (g2 / g1).ln() / (ZERO_EPS[0] / ZERO_EPS[1]).ln();
        if s >= 1.0 - 1e-9 {
            return Ok(divergent(warning));
        }
        tail += g1 * ZERO_EPS[0] / (1.0 - s);
        if endpoint == 0.0 {
            lo = ZERO_EPS[0];
        } else {
            hi = 1.0 - ZERO_EPS[0];
        }
    }
    let cfg = QuadConfig::new(1e-9, 60, 8)?;
    let bps: Vec<f64> = f.breakpoints().iter().copied().filter(|b| *b > lo && *b < hi).collect();
    let integral = integrate(integrand, lo, hi, &cfg, &bps)? + tail;
    Ok(RateReport {
        value: (scale * integral).min(1.0),
        integral,
        divergent: false,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub n: u64,
    pub l1: f64,
    pub hellinger_sq_1obs: f64,
    pub tv_density_upper: f64,
    pub hellinger_sq_density_n: f64,
    pub tv_gwn: f64,
    pub hellinger_sq_gwn: f64,
    pub deficiency_lb: f64,
}

impl DistanceReport {
    pub fn from_parts(l1: f64, h2: f64, n: u64) -> Result<Self> {
        check_n(n)?;
        let h2 = h2.clamp(0.0, 2.0);
        Ok(Self {
            n,
            l1,
            hellinger_sq_1obs: h2,
            tv_density_upper: product_tv_upper((0.5 * l1).clamp(0.0, 1.0), n)?,
            hellinger_sq_density_n: product_hellinger_sq(h2, n)?,
            tv_gwn: gwn_tv_from_h2(h2, n),
            hellinger_sq_gwn: gwn_hellinger_sq_from_h2(h2, n),
            deficiency_lb: deficiency_lower_bound_from(l1, h2, n),
        })
    }

    pub fn compute(f: &Density, g: &Density, n: u64) -> Result<Self> {
        let cfg = QuadConfig::default();
        Self::from_parts(l1_distance(f, g, &cfg)?, hellinger_sq_densities(f, g, &cfg)?, n)
    }
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "n",
    "l1",
    "h2_1obs",
    "tv_gwn",
    "h2_gwn_n",
    "tv_density_upper",
    "h2_density_n",
    "deficiency_lb",
];

/// One row per `n`; pairs are built and evaluated in parallel, rows keep
/// the order of `n_grid`.
pub fn distance_sweep<B>(pair_builder: B, n_grid: &[u64]) -> Result<(Table, Vec<DistanceReport>)>
where
    B: Fn(u64) -> Result<(Density, Density)> + Sync,
{
    let reports: Vec<DistanceReport> = n_grid
        .par_iter()
        .map(|&n| {
            let (f, g) = pair_builder(n)?;
            DistanceReport::compute(&f, &g, n)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(SWEEP_COLUMNS);
    for r in &reports {
        t.push(vec![
            r.n as f64,
            r.l1,
            r.hellinger_sq_1obs,
            r.tv_gwn,
            r.hellinger_sq_gwn,
            r.tv_density_upper,
            r.hellinger_sq_density_n,
            r.deficiency_lb,
        ]);
    }
    Ok((t, reports))
}
