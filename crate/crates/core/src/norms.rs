//! Hölder norms, the flatness seminorm and grid certificates of membership
//! in the flat Hölder ball `H^beta(R)`.
//!
//! Every supremum is taken over a finite grid, so a reported norm is a lower
//! bound for the true norm: a failed membership check is conclusive, a passed
//! one is a grid-level certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density_core::{segment_cuts, Density};
use crate::{Error, Result};

pub const DEFAULT_NORM_GRID: usize = 4096;
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Pairs closer than this are all compared for the Hölder seminorm.
const PAIR_WINDOW: f64 = 0.1;
const RANDOM_PAIRS: usize = 100_000;
const RANDOM_PAIR_SEED: u64 = 0x5eed_0f_ba1_5;
/// Interior points added to every breakpoint interval shorter than 64 grid spacings.
const INTERVAL_REFINEMENT: usize = 64;
/// Relative slack used when comparing a grid norm against a radius.
const MEMBERSHIP_RTOL: f64 = 1e-9;

/// Largest integer strictly smaller than `beta`.
pub fn floor_strict(beta: f64) -> usize {
    (beta.ceil() - 1.0).max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub beta: f64,
    /// `||f||_inf`
    pub sup_norm: f64,
    /// `||f^(floor beta)||_inf`
    pub top_deriv_sup: f64,
    /// `|f|_{C^beta}`
    pub holder_semi: f64,
    /// `|f|_{H^beta}`; infinite when `f` vanishes where a derivative does not.
    pub flat_semi: f64,
    /// `||f||_{C^beta} = sup_norm + top_deriv_sup + holder_semi`
    pub c_norm: f64,
    /// `||f||_{H^beta} = c_norm + flat_semi`
    pub h_norm: f64,
    /// Number of uniform grid points (before breakpoint refinement).
    pub grid_size: usize,
    /// Point where the flatness ratio is `x/0` with `x != 0`, if any.
    pub flat_witness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatSeminorm {
    pub value: f64,
    pub witness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessCheck {
    pub holds: bool,
    /// First violating `(x, h)` pair, if any.
    pub witness: Option<(f64, f64)>,
}

/// `f^(j)(x)`: the stored analytic derivative when available, otherwise a
/// second-order central difference with step `h_fd`.
pub fn derivative(d: &Density, j: usize, x: f64, h_fd: f64) -> Result<f64> {
    if let Some(v) = d.derivatives_at(x, j) {
        return Ok(v[j]);
    }
    if j == 0 {
        return Ok(d.eval(x));
    }
    if !(h_fd > 0.0) {
        return Err(Error::InvalidParameter(format!("h_fd must be positive, got {h_fd}")));
    }
    let half = 0.5 * j as f64 * h_fd;
    let (lo, hi) = enclosing_interval(d, x);
    if x - half < lo || x + half > hi || d.breakpoints().contains(&x) {
        return Err(Error::StencilCrossesBreakpoint { x, order: j });
    }
    Ok(central_difference(d, j, x, h_fd))
}

fn enclosing_interval(d: &Density, x: f64) -> (f64, f64) {
    let cuts = segment_cuts(0.0, 1.0, d.breakpoints());
    let i = cuts.partition_point(|&c| c <= x).clamp(1, cuts.len() - 1);
    (cuts[i - 1], cuts[i])
}

fn central_difference(d: &Density, j: usize, x: f64, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=j {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * d.eval(x + (0.5 * j as f64 - k as f64) * h);
        binom = binom * (j - k) as f64 / (k + 1) as f64;
    }
    sum / h.powi(j as i32)
}

/// Derivatives `0..=order` at `x`, falling back to finite differences whose
/// step shrinks near breakpoints and becomes one-sided at interval ends.
fn derivatives_upto(d: &Density, order: usize, x: f64) -> Vec<f64> {
    if let Some(v) = d.derivatives_at(x, order) {
        return v;
    }
    let (lo, hi) = enclosing_interval(d, x);
    let mut out = vec![d.eval(x)];
    for j in 1..=order {
        let dist = (x - lo).min(hi - x);
        let central_h = (2.0 * dist / j as f64).min(DEFAULT_FD_STEP);
        let v = if central_h >= 1e-7 {
            central_difference(d, j, x, central_h)
        } else {
            // One-sided stencil x, x±h, ..., x±jh on the roomier side.
            let dir = if hi - x >= x - lo { 1.0 } else { -1.0 };
            let h = (DEFAULT_FD_STEP).min(0.5 * (hi - lo) / j as f64) * dir;
            let mut sum = 0.0;
            let mut binom = 1.0;
            for k in 0..=j {
                let sign = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * binom * d.eval(x + k as f64 * h);
                binom = binom * (j - k) as f64 / (k + 1) as f64;
            }
            sum / h.powi(j as i32)
        };
        out.push(v);
    }
    out
}

/// Uniform grid plus breakpoints, their grid neighbours and a refinement of
/// short breakpoint intervals.
fn norm_grid(d: &Density, grid_size: usize) -> Vec<f64> {
    let m = grid_size.max(2) - 1;
    let h = 1.0 / m as f64;
    let mut g: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    for &b in d.breakpoints() {
        g.extend([b, (b - h).max(0.0), (b + h).min(1.0)]);
    }
    let cuts = segment_cuts(0.0, 1.0, d.breakpoints());
    for w in cuts.windows(2) {
        if w[1] - w[0] < 64.0 * h {
            for k in 1..INTERVAL_REFINEMENT {
                g.push(w[0] + (w[1] - w[0]) * k as f64 / INTERVAL_REFINEMENT as f64);
            }
        }
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn validate_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

struct GridValues {
    xs: Vec<f64>,
    derivs: Vec<Vec<f64>>,
}

fn grid_values(d: &Density, order: usize, grid_size: usize) -> GridValues {
    let xs = norm_grid(d, grid_size);
    let derivs = xs.iter().map(|&x| derivatives_upto(d, order, x)).collect();
    GridValues { xs, derivs }
}

fn holder_parts(d: &Density, beta: f64, gv: &GridValues) -> (f64, f64, f64) {
    let r = floor_strict(beta);
    let alpha = beta - r as f64;
    let sup_norm = gv.derivs.iter().map(|v| v[0].abs()).fold(0.0, f64::max);
    let top_deriv_sup = gv.derivs.iter().map(|v| v[r].abs()).fold(0.0, f64::max);
    let mut semi: f64 = 0.0;
    let n = gv.xs.len();
    for i in 0..n {
        let (xi, di) = (gv.xs[i], gv.derivs[i][r]);
        for k in i + 1..n {
            let dx = gv.xs[k] - xi;
            if dx > PAIR_WINDOW {
                break;
            }
            semi = semi.max((gv.derivs[k][r] - di).abs() / dx.powf(alpha));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_PAIR_SEED);
    for _ in 0..RANDOM_PAIRS {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        if x == y {
            continue;
        }
        let dx = derivatives_upto(d, r, x)[r];
        let dy = derivatives_upto(d, r, y)[r];
        semi = semi.max((dx - dy).abs() / (x - y).abs().powf(alpha));
    }
    (sup_norm, top_deriv_sup, semi)
}

fn flat_from_values(beta: f64, gv: &GridValues) -> FlatSeminorm {
    if beta <= 1.0 {
        return FlatSeminorm {
            value: 0.0,
            witness: None,
        };
    }
    let r = floor_strict(beta);
    let mut best: f64 = 0.0;
    for j in 1..=r {
        let jf = j as f64;
        let mut sup_log = f64::NEG_INFINITY;
        for (x, v) in gv.xs.iter().zip(&gv.derivs) {
            let f = v[0].abs();
            let fj = v[j].abs();
            if fj == 0.0 {
                continue;
            }
            if f == 0.0 {
                return FlatSeminorm {
                    value: f64::INFINITY,
                    witness: Some(*x),
                };
            }
            sup_log = sup_log.max(beta * fj.ln() - (beta - jf) * f.ln());
        }
        if sup_log > f64::NEG_INFINITY {
            best = best.max((sup_log / jf).exp());
        }
    }
    FlatSeminorm {
        value: best,
        witness: None,
    }
}

/// Grid Hölder norm; the flatness fields of the report are zero.
pub fn holder_norm(d: &Density, beta: f64, grid_size: usize) -> Result<NormReport> {
    validate_beta(beta)?;
    let gv = grid_values(d, floor_strict(beta), grid_size);
    let (sup_norm, top_deriv_sup, holder_semi) = holder_parts(d, beta, &gv);
    let c_norm = sup_norm + top_deriv_sup + holder_semi;
    Ok(NormReport {
        beta,
        sup_norm,
        top_deriv_sup,
        holder_semi,
        flat_semi: 0.0,
        c_norm,
        h_norm: c_norm,
        grid_size,
        flat_witness: None,
    })
}

/// Flatness seminorm `max_{1<=j<beta} sup |f^(j)|^{beta/j} / |f|^{(beta-j)/j}`
/// on the grid (0/0 counts as 0; zero for `beta <= 1`).
pub fn flat_seminorm(d: &Density, beta: f64, grid_size: usize) -> Result<FlatSeminorm> {
    validate_beta(beta)?;
    if beta <= 1.0 {
        return Ok(flat_from_values(beta, &GridValues { xs: vec![], derivs: vec![] }));
    }
    let gv = grid_values(d, floor_strict(beta), grid_size);
    Ok(flat_from_values(beta, &gv))
}

/// Full `H^beta` norm report.
pub fn norm_report(d: &Density, beta: f64, grid_size: usize) -> Result<NormReport> {
    validate_beta(beta)?;
    let gv = grid_values(d, floor_strict(beta), grid_size);
    let (sup_norm, top_deriv_sup, holder_semi) = holder_parts(d, beta, &gv);
    let flat = flat_from_values(beta, &gv);
    let c_norm = sup_norm + top_deriv_sup + holder_semi;
    Ok(NormReport {
        beta,
        sup_norm,
        top_deriv_sup,
        holder_semi,
        flat_semi: flat.value,
        c_norm,
        h_norm: c_norm + flat.value,
        grid_size,
        flat_witness: flat.witness,
    })
}

/// `||f||_{H^beta} <= R` on the default 4096-point grid (with `1e-9`
/// relative slack for rounding).
pub fn check_membership(d: &Density, beta: f64, radius: f64) -> Result<(bool, NormReport)> {
    let report = norm_report(d, beta, DEFAULT_NORM_GRID)?;
    Ok((within_radius(report.h_norm, radius), report))
}

pub(crate) fn within_radius(norm: f64, radius: f64) -> bool {
    norm <= radius * (1.0 + MEMBERSHIP_RTOL)
}

/// Left side of the admissibility condition `(e^a - 1) + a^beta / floor(beta)! <= 1/2`.
pub fn flatness_condition(a: f64, beta: f64) -> f64 {
    let fact: f64 = (1..=floor_strict(beta)).map(|k| k as f64).product();
    a.exp_m1() + a.powf(beta) / fact
}

/// Checks `|f(x+h) - f(x)| <= |f(x)|/2` for `|h| <= a (|f(x)|/R)^{1/beta}`
/// at every grid point, probing 16 step sizes on each side.
pub fn local_flatness_check(
    d: &Density,
    beta: f64,
    radius: f64,
    a: f64,
    grid_size: usize,
) -> Result<FlatnessCheck> {
    validate_beta(beta)?;
    if !(a > 0.0) || flatness_condition(a, beta) > 0.5 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "a = {a} violates (e^a - 1) + a^beta / floor(beta)! <= 1/2 for beta = {beta}"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("R must be positive, got {radius}")));
    }
    const PROBES: usize = 16;
    let m = grid_size.max(2) - 1;
    for i in 0..=m {
        let x = i as f64 / m as f64;
        let fx = d.eval(x);
        let h_max = a * (fx.abs() / radius).powf(1.0 / beta);
        if h_max == 0.0 {
            continue;
        }
        let bound = 0.5 * fx.abs() * (1.0 + 1e-12) + 1e-300;
        for k in 1..=PROBES {
            let step = h_max * k as f64 / PROBES as f64;
            for h in [step, -step] {
                let y = x + h;
                if !(0.0..=1.0).contains(&y) {
                    continue;
                }
                if (d.eval(y) - fx).abs() > bound {
                    return Ok(FlatnessCheck {
                        holds: false,
                        witness: Some((x, h)),
                    });
                }
            }
        }
    }
    Ok(FlatnessCheck {
        holds: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cubic_no_derivs() -> Density {
        Density::new("3x^2 (no analytic derivatives)", |x: f64| 3.0 * x * x)
    }

    #[test]
    fn strict_floor() {
        assert_eq!(floor_strict(0.5), 0);
        assert_eq!(floor_strict(1.0), 0);
        assert_eq!(floor_strict(1.5), 1);
        assert_eq!(floor_strict(2.0), 1);
        assert_eq!(floor_strict(3.2), 3);
    }

    #[test]
    fn derivative_examples() {
        let f = cubic_no_derivs();
        assert_abs_diff_eq!(derivative(&f, 1, 0.5, 1e-4).unwrap(), 3.0, epsilon = 1e-7);
        assert_abs_diff_eq!(derivative(&f, 2, 0.5, 1e-4).unwrap(), 6.0, epsilon = 1e-4);
        let u = Density::new("constant", |_| 1.0);
        assert_abs_diff_eq!(derivative(&u, 1, 0.3, 1e-4).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(derivative(&u, 3, 0.3, 1e-3).unwrap(), 0.0, epsilon = 1e-6);
        let p = Density::power(2.5).unwrap();
        assert_relative_eq!(derivative(&p, 2, 0.4, 1e-4).unwrap(), 3.5 * 2.5 * 1.5 * 0.4f64.powf(0.5));
    }

    #[test]
    fn stencil_crossing_breakpoint_is_an_error() {
        let f = cubic_no_derivs().with_breakpoints(vec![0.5]).unwrap();
        let err = derivative(&f, 2, 0.49995, 1e-4).unwrap_err();
        assert!(matches!(err, Error::StencilCrossesBreakpoint { .. }));
        assert!(derivative(&f, 1, 0.0, 1e-4).is_err());
    }

    #[test]
    fn holder_norm_linear_and_constant() {
        let lin = Density::power(1.0).unwrap();
        let r = holder_norm(&lin, 1.0, 1025).unwrap();
        assert_relative_eq!(r.c_norm, 6.0, max_relative = 1e-12);
        let u = Density::uniform();
        let r = holder_norm(&u, 0.7, 1025).unwrap();
        assert_relative_eq!(r.c_norm, 2.0);
        assert_eq!(r.holder_semi, 0.0);
    }

    #[test]
    fn holder_semi_of_sqrt_power_below_gamma_bound() {
        use statrs::function::gamma::gamma;
        let beta = 0.5;
        let f = Density::power(beta).unwrap();
        let r = holder_norm(&f, beta, 1025).unwrap();
        let bound = gamma(beta + 2.0) / gamma(beta + 1.0);
        assert!(r.holder_semi <= bound * (1.0 + 1e-12), "{} > {bound}", r.holder_semi);
        // Pairs (0, y) attain the bound exactly.
        assert_relative_eq!(r.holder_semi, bound, max_relative = 1e-12);
    }

    #[test]
    fn flat_seminorm_examples() {
        let f = Density::power(2.0).unwrap();
        assert_eq!(flat_seminorm(&f, 0.8, 512).unwrap().value, 0.0);
        assert_relative_eq!(flat_seminorm(&f, 2.0, 512).unwrap().value, 12.0, max_relative = 1e-12);
        // Finite-difference path: 1 + x^2 gives sup (2x)^2 / (1 + x^2) = 2 at x = 1.
        let g = Density::new("1 + x^2", |x: f64| 1.0 + x * x);
        // One-sided differences at x = 1 are first order.
        assert_relative_eq!(flat_seminorm(&g, 2.0, 512).unwrap().value, 2.0, max_relative = 1e-3);
        let u = Density::uniform();
        assert_eq!(flat_seminorm(&u, 3.0, 512).unwrap().value, 0.0);
    }

    #[test]
    fn flat_seminorm_infinite_sentinel() {
        // x + 1/2 shifted to vanish at 0 with nonzero slope: f = 2x.
        let f = Density::power(1.0).unwrap();
        let fs = flat_seminorm(&f, 1.5, 256).unwrap();
        assert!(fs.value.is_infinite());
        assert_eq!(fs.witness, Some(0.0));
    }

    #[test]
    fn flat_seminorm_matches_power_closed_form() {
        use statrs::function::gamma::gamma;
        for beta in [1.5, 2.5, 3.7] {
            let f = Density::power(beta).unwrap();
            let numeric = flat_seminorm(&f, beta, DEFAULT_NORM_GRID).unwrap().value;
            let closed = (1..=floor_strict(beta))
                .map(|j| {
                    let jf = j as f64;
                    gamma(beta + 2.0).powf(beta / jf)
                        * gamma(beta - jf + 1.0).powf(-beta / jf)
                        * (beta + 1.0).powf(-(beta - jf) / jf)
                })
                .fold(0.0, f64::max);
            assert_relative_eq!(numeric, closed, max_relative = 1e-2);
        }
    }

    #[test]
    fn flat_seminorm_scales_linearly() {
        let base = |x: f64| 1.0 + 0.5 * x * x - 0.2 * x * x * x;
        for beta in [2.5, 3.5] {
            let f = Density::new("poly", base);
            let v = flat_seminorm(&f, beta, 1024).unwrap().value;
            for lambda in [0.5, 2.0] {
                let g = Density::new("scaled poly", move |x| lambda * base(x));
                let w = flat_seminorm(&g, beta, 1024).unwrap().value;
                assert_relative_eq!(w, lambda * v, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn holder_norm_grows_with_nested_grids() {
        let f = Density::log_trig(&[0.8, -0.5, 0.3], &Default::default()).unwrap();
        let mut last = 0.0;
        for g in [65, 129, 257, 513, 1025] {
            let c = holder_norm(&f, 1.6, g).unwrap().c_norm;
            assert!(c >= last, "grid {g}: {c} < {last}");
            last = c;
        }
    }

    #[test]
    fn membership_examples() {
        let lin = Density::power(1.0).unwrap();
        assert!(check_membership(&lin, 1.0, 6.0).unwrap().0);
        assert!(!check_membership(&lin, 1.0, 5.0).unwrap().0);
        let (ok, rep) = check_membership(&Density::uniform(), 0.6, 2.0).unwrap();
        assert!(ok);
        assert_relative_eq!(rep.h_norm, 2.0);
    }

    #[test]
    fn local_flatness_examples() {
        let u = Density::uniform();
        assert!(local_flatness_check(&u, 1.0, 2.0, 0.2, 1024).unwrap().holds);
        let lin = Density::power(1.0).unwrap();
        assert!(local_flatness_check(&lin, 1.0, 6.0, 0.235, 4096).unwrap().holds);
        let wiggle = Density::new("wiggle", |x: f64| {
            1.0 + 0.9 * (40.0 * std::f64::consts::PI * x).sin()
        });
        let check = local_flatness_check(&wiggle, 1.0, 1.0, 0.235, 1024).unwrap();
        assert!(!check.holds);
        let (x, h) = check.witness.unwrap();
        assert!((wiggle.eval(x + h) - wiggle.eval(x)).abs() > 0.5 * wiggle.eval(x));
    }

    #[test]
    fn local_flatness_rejects_inadmissible_a() {
        let u = Density::uniform();
        assert!(local_flatness_check(&u, 1.0, 2.0, 0.3, 64).is_err());
    }
}
