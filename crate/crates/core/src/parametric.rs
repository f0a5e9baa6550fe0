//! The location family `f_theta(x) = g(x - theta)` with
//! `g(x) = 960 x^2 (1/2 - x)^2` on `[0, 1/2]`.
//!
//! Although every `f_theta` vanishes on a whole interval, the family has
//! constant Fisher information, a closed-form Hellinger distance and finite
//! Hellinger metric dimension.

use serde::{Deserialize, Serialize};

use crate::density_core::{integrate, Density, QuadConfig};
use crate::{Error, Result};

const C960_SQRT: f64 = 30.983_866_769_659_336; // sqrt(960)

/// `sqrt(g(u)) = sqrt(960) u (1/2 - u)` on `[0, 1/2]`, zero elsewhere.
#[inline]
fn root_g(u: f64) -> f64 {
    if (0.0..=0.5).contains(&u) {
        C960_SQRT * u * (0.5 - u)
    } else {
        0.0
    }
}

/// `(sqrt g)'(u) = sqrt(960) (1/2 - 2u)` on `[0, 1/2]`, zero elsewhere.
#[inline]
fn root_g_prime(u: f64) -> f64 {
    if (0.0..=0.5).contains(&u) {
        C960_SQRT * (0.5 - 2.0 * u)
    } else {
        0.0
    }
}

#[inline]
fn g(u: f64) -> f64 {
    if (0.0..=0.5).contains(&u) {
        960.0 * (u * (0.5 - u)).powi(2)
    } else {
        0.0
    }
}

/// `g'(u) = 960 u (1/2 - u)(1 - 4u)`.
#[inline]
fn g_prime(u: f64) -> f64 {
    if (0.0..=0.5).contains(&u) {
        960.0 * u * (0.5 - u) * (1.0 - 4.0 * u)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationFamily {
    pub theta: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, 1/2), got {theta}")));
    }
    Ok(())
}

impl LocationFamily {
    pub fn new(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { theta })
    }

    pub fn eval(&self, x: f64) -> f64 {
        g(x - self.theta)
    }

    pub fn density(&self) -> Density {
        let theta = self.theta;
        Density::new(format!("location(theta={theta})"), move |x| g(x - theta))
            .with_breakpoints(vec![theta, theta + 0.5])
            .expect("theta in (0, 1/2)")
    }
}

/// The base density `g` on `[0, 1]`.
pub fn base_density() -> Density {
    Density::new("960 x^2 (1/2 - x)^2", g)
        .with_breakpoints(vec![0.5])
        .expect("static breakpoint")
}

/// `int g'(x - theta)^2 / g(x - theta) dx` over the support; the 0/0 at the
/// support ends is replaced by its limit `4 ((sqrt g)')^2`.
pub fn fisher_information(theta: f64, cfg: &QuadConfig) -> Result<f64> {
    check_theta(theta)?;
    let integrand = |x: f64| {
        let u = x - theta;
        if !(0.0..=0.5).contains(&u) {
            return 0.0;
        }
        let gu = g(u);
        if gu > 0.0 {
            g_prime(u).powi(2) / gu
        } else {
            4.0 * root_g_prime(u).powi(2)
        }
    };
    integrate(integrand, 0.0, 1.0, cfg, &[theta, theta + 0.5])
}

/// `(40 d^2 (1 - 2d + 8 d^3 / 5), 2 - 2 int sqrt(f_theta f_theta'))`, `d = |theta - theta'|`.
pub fn hellinger_sq_location(theta: f64, theta_prime: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    check_theta(theta_prime)?;
    let closed = hellinger_sq_closed_form((theta - theta_prime).abs());
    let cfg = QuadConfig::new(1e-13, 60, 8)?;
    let affinity = integrate(
        |x| root_g(x - theta) * root_g(x - theta_prime),
        0.0,
        1.0,
        &cfg,
        &[theta, theta_prime, theta + 0.5, theta_prime + 0.5],
    )?;
    Ok((closed, 2.0 - 2.0 * affinity))
}

/// `40 d^2 (1 - 2d + 8 d^3 / 5)` for `0 <= d <= 1/2`.
pub fn hellinger_sq_closed_form(delta: f64) -> f64 {
    40.0 * delta * delta * (1.0 - 2.0 * delta + 1.6 * delta.powi(3))
}

/// `int sqrt(g(x - theta) g(x)) dx` by quadrature.
pub fn affinity(theta: f64, cfg: &QuadConfig) -> Result<f64> {
    integrate(|x| root_g(x - theta) * root_g(x), 0.0, 1.0, cfg, &[0.5, theta, theta + 0.5])
}

/// `int [sqrt f_{theta+h} - sqrt f_theta - (h/2) l_theta sqrt f_theta]^2`,
/// with the score term written as `(h/2) l_theta sqrt f_theta = -h (sqrt g)'(x - theta)`
/// on the support of `f_theta` and zero elsewhere.
pub fn qmd_remainder(theta: f64, h: f64, cfg: &QuadConfig) -> Result<f64> {
    check_theta(theta)?;
    check_theta(theta + h)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let integrand = |x: f64| {
        let u = x - theta;
        let r = root_g(u - h) - root_g(u) + h * root_g_prime(u);
        r * r
    };
    let mut bps = vec![theta, theta + h, theta + 0.5, theta + h + 0.5];
    bps.retain(|b| (0.0..=1.0).contains(b));
    integrate(integrand, 0.0, 1.0, cfg, &bps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDimension {
    pub c_tilde: f64,
    /// `log2(2 c_tilde)`.
    pub d_bound: f64,
    pub grid_points: usize,
}

pub const CERTIFICATE_GRID: usize = 401;

/// `c~ = max max(H^2/d^2, d^2/H^2)` over pairs of a uniform `theta` grid on
/// `[lo, hi]`, from the closed form, and `D <= log2(2 c~)`.
pub fn metric_dimension_certificate(interval: (f64, f64)) -> Result<MetricDimension> {
    metric_dimension_certificate_on(interval, CERTIFICATE_GRID)
}

pub fn metric_dimension_certificate_on(interval: (f64, f64), points: usize) -> Result<MetricDimension> {
    let (lo, hi) = interval;
    check_theta(lo)?;
    check_theta(hi)?;
    if !(lo < hi) || points < 2 {
        return Err(Error::InvalidParameter(format!(
            "need lo < hi and at least two grid points, got ({lo}, {hi}) with {points}"
        )));
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut c: f64 = 1.0;
    for (i, a) in grid.iter().enumerate() {
        for b in &grid[i + 1..] {
            let d = (b - a).abs();
            let r = hellinger_sq_closed_form(d) / (d * d);
            c = c.max(r).max(1.0 / r);
        }
    }
    Ok(MetricDimension {
        c_tilde: c,
        d_bound: (2.0 * c).log2(),
        grid_points: points,
    })
}
