//! The two-point counterexample `(f_1, f_2)`.
//!
//! Starting from a base density `f_0`, a point `x_0` is chosen where
//! `f_0(x_0) = R^{1/(beta+1)} n^{-beta/(beta+1)}`. Two adjacent intervals
//! `[x_0, x_1]`, `[x_1, x_2]` of `f_0`-mass `F` each are perturbed
//! multiplicatively by the bump kernel:
//!
//! ```text
//! f_j(x) = f_0(x) (1 - gamma F + gamma K((F_0(x) - F_0(x_{j-1})) / F)),
//! gamma  = 1/(nF) + 2/sqrt(nF).
//! ```
//!
//! Both `f_j` keep unit mass, `||f_1 - f_2||_1 = 2 gamma F`, and
//! `n H^2(f_1, f_2) >= 2 - 3/n`.

mod kernel;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density_core::{
    build_cdf, gauss_legendre, hellinger_sq_densities, integrate, l1_distance, mass_endpoint,
    power_derivatives, Density, QuadConfig,
};
use crate::jet::Jet;
use crate::norms::{norm_report, DEFAULT_NORM_GRID};
use crate::output::Table;
use crate::{Error, Result};

pub use kernel::{bump_kernel, BumpKernel};

/// Table size used only to seed the mass-endpoint root finder.
const SEED_CDF_GRID: usize = 2048;
/// Gauss–Legendre panels for the local primitive `int_{x_{j-1}}^x f_0`.
const PRIMITIVE_PANELS: usize = 4;
const IDENTITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum F0Kind {
    /// `(beta + 1) x^beta`.
    Power,
    /// `x^beta + n^{-beta/(beta+1)} M_n`, normalized.
    ShiftedPower { m_n: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    SmoothBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub beta: f64,
    /// Claimed `H^beta` radius of `f_0`; `None` uses [`default_radius`].
    pub radius: Option<f64>,
    pub n: u64,
    pub f0_kind: F0Kind,
    pub kernel: KernelKind,
}

impl CounterexampleParams {
    pub fn new(beta: f64, n: u64) -> Self {
        Self {
            beta,
            radius: None,
            n,
            f0_kind: F0Kind::Power,
            kernel: KernelKind::SmoothBump,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn with_f0(mut self, kind: F0Kind) -> Self {
        self.f0_kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {}", self.n)));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::InvalidParameter(format!("R must be positive, got {r}")));
            }
        }
        if let F0Kind::ShiftedPower { m_n } = self.f0_kind {
            if !(m_n > 0.0) || !m_n.is_finite() {
                return Err(Error::InvalidParameter(format!("M_n must be positive, got {m_n}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleResult {
    pub params: CounterexampleParams,
    pub radius: f64,
    pub f0: Density,
    pub f1: Density,
    pub f2: Density,
    /// Perturbation endpoints in the working frame, where `x0 <= 1/2`.
    /// When `mirrored` is set the densities above live on the reflected
    /// axis and the perturbations occupy `[1 - x2, 1 - x0]`.
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub mirrored: bool,
    pub a: f64,
    pub f_mass: f64,
    pub gamma: f64,
    pub kernel_sup: f64,
    /// `max(C_emp, 4, 1 + (1 + sqrt(8/a))^2 ||K||_inf)`, where `C_emp` is the
    /// largest grid ratio `||f_j||_{H^beta} / R`.
    pub c_band: f64,
    pub c_emp: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Scalar part of a [`CounterexampleResult`], for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSummary {
    pub params: CounterexampleParams,
    pub radius: f64,
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub mirrored: bool,
    pub a: f64,
    pub f_mass: f64,
    pub gamma: f64,
    pub gamma_f: f64,
    pub kernel_sup: f64,
    pub c_band: f64,
    pub c_emp: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl CounterexampleResult {
    pub fn summary(&self) -> CounterexampleSummary {
        CounterexampleSummary {
            params: self.params.clone(),
            radius: self.radius,
            x0: self.x0,
            x1: self.x1,
            x2: self.x2,
            mirrored: self.mirrored,
            a: self.a,
            f_mass: self.f_mass,
            gamma: self.gamma,
            gamma_f: self.gamma * self.f_mass,
            kernel_sup: self.kernel_sup,
            c_band: self.c_band,
            c_emp: self.c_emp,
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Perturbation breakpoints in the coordinates of `f0`, `f1`, `f2`.
    pub fn breakpoints(&self) -> [f64; 3] {
        if self.mirrored {
            [1.0 - self.x2, 1.0 - self.x1, 1.0 - self.x0]
        } else {
            [self.x0, self.x1, self.x2]
        }
    }
}

/// Largest admissible flatness constant:
/// `min(1/4, root of e^a - 1 + a^beta / floor(beta)! = 1/2)`.
pub fn solve_a(beta: f64) -> f64 {
    let g = |a: f64| crate::norms::flatness_condition(a, beta) - 0.5;
    if g(0.25) <= 0.0 {
        return 0.25;
    }
    let (mut lo, mut hi) = (0.0, 0.25);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `f_0(x) = (beta + 1) x^beta`.
pub fn default_f0(beta: f64) -> Result<Density> {
    Density::power(beta)
}

/// `f_{0,n}(x) = (x^beta + n^{-beta/(beta+1)} M_n) / Z` with
/// `Z = 1/(beta+1) + n^{-beta/(beta+1)} M_n`.
pub fn sharpness_f0(beta: f64, n: u64, m_n: f64) -> Result<Density> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if !(m_n > 0.0) || !m_n.is_finite() {
        return Err(Error::InvalidParameter(format!("M_n must be positive, got {m_n}")));
    }
    let shift = (n as f64).powf(-beta / (beta + 1.0)) * m_n;
    let z = 1.0 / (beta + 1.0) + shift;
    Ok(Density::new(format!("shifted_power(beta={beta}, n={n}, M_n={m_n})"), move |x: f64| {
        (x.powf(beta) + shift) / z
    })
    .with_derivatives(usize::MAX, move |x, order| {
        power_derivatives(1.0 / z, beta, shift / z, x, order)
    }))
}

/// `R^{1/(beta+1)} n^{-beta/(beta+1)}`, the top of the admissible band for `f_0(x_0)`.
pub fn band_top(beta: f64, radius: f64, n: u64) -> f64 {
    radius.powf(1.0 / (beta + 1.0)) * (n as f64).powf(-beta / (beta + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct X0Location {
    /// In the coordinates of `f0`.
    pub x0: f64,
    /// `x0 > 1/2`; the construction then runs on the reflected density.
    pub mirrored: bool,
}

/// Finds `x_0` with `f_0(x_0)` at the top of the band, by bisection on the
/// monotone branch leaving the grid minimum of `f_0` towards the far side
/// of the domain.
pub fn locate_x0(f0: &Density, beta: f64, radius: f64, n: u64) -> Result<X0Location> {
    let target = band_top(beta, radius, n);
    let bottom = target * 2f64.powf(-beta / (beta + 1.0));
    const M: usize = 4096;
    let xs: Vec<f64> = (0..=M).map(|i| i as f64 / M as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f0.eval(x)).collect();
    let (imin, &fmin) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    if fmin > target {
        return Err(Error::Infeasible(format!(
            "n too large for this f0, R: band [{bottom:.6e}, {target:.6e}] lies below min f0 = {fmin:.6e}"
        )));
    }
    let rightwards = imin <= M / 2;
    let crossing = if rightwards {
        (imin + 1..=M).find(|&i| vals[i] >= target).map(|i| (i - 1, i))
    } else {
        (0..imin).rev().find(|&i| vals[i] >= target).map(|i| (i + 1, i))
    };
    let Some((below, above)) = crossing else {
        return Err(Error::Infeasible(format!(
            "n too small for this f0, R: band [{bottom:.6e}, {target:.6e}] exceeds f0 on its monotone branch"
        )));
    };
    // f0(lo) < target <= f0(hi)
    let (mut lo, mut hi) = (xs[below], xs[above]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f0.eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Prefer the side whose value is closest to the target.
    let x0 = if (f0.eval(lo) - target).abs() < (f0.eval(hi) - target).abs() { lo } else { hi };
    Ok(X0Location {
        x0,
        mirrored: x0 > 0.5,
    })
}

/// `F = a f_0(x_0)^{(beta+1)/beta} / (4 R^{1/beta})`, checked against
/// `a/(8n) <= F <= 1/(16n)`.
pub fn compute_f(f0_at_x0: f64, a: f64, radius: f64, beta: f64, n: u64) -> Result<f64> {
    let f = a * f0_at_x0.powf((beta + 1.0) / beta) / (4.0 * radius.powf(1.0 / beta));
    let nf = n as f64;
    let (lower, upper) = (a / (8.0 * nf), 1.0 / (16.0 * nf));
    let slack = 1e-12;
    if !(f >= lower * (1.0 - slack) && f <= upper * (1.0 + slack)) {
        return Err(Error::Infeasible(format!(
            "F = {f:.6e} outside [a/(8n), 1/(16n)] = [{lower:.6e}, {upper:.6e}]"
        )));
    }
    Ok(f)
}

/// `||f_0||_{H^beta}` on the default grid, rounded up to three significant figures.
pub fn default_radius(f0: &Density, beta: f64) -> Result<f64> {
    let norm = norm_report(f0, beta, DEFAULT_NORM_GRID)?.h_norm;
    if !norm.is_finite() || norm <= 0.0 {
        return Err(Error::Infeasible(format!(
            "f0 has no finite H^beta norm for beta = {beta} (got {norm})"
        )));
    }
    Ok(round_up_3sig(norm))
}

fn round_up_3sig(x: f64) -> f64 {
    let scale = 10f64.powi(x.log10().floor() as i32 - 2);
    // Guard against values already on the 3-digit lattice up to rounding.
    let q = x / scale;
    let r = if (q - q.round()).abs() < 1e-9 { q.round() } else { q.ceil() };
    r * scale
}

/// Perturbed density on the working frame.
fn perturbed(
    f0: &Density,
    lo: f64,
    hi: f64,
    f_mass: f64,
    gamma: f64,
    breakpoints: Vec<f64>,
    label: String,
) -> Result<Density> {
    let k = bump_kernel();
    let base = 1.0 - gamma * f_mass;
    let arg = {
        let f0 = f0.clone();
        move |x: f64| -> f64 {
            if x <= lo || x >= hi {
                return -1.0;
            }
            gauss_legendre(|y| f0.eval(y), lo, x, PRIMITIVE_PANELS) / f_mass
        }
    };
    let arg = Arc::new(arg);
    let eval = {
        let f0 = f0.clone();
        let arg = arg.clone();
        move |x: f64| f0.eval(x) * (base + gamma * k.eval(arg(x)))
    };
    let mut d = Density::new(label, eval);
    if let Some(max) = f0.analytic_order() {
        let f0 = f0.clone();
        d = d.with_derivatives(max.saturating_sub(1), move |x, order| {
            let f0d = f0
                .derivatives_at(x, order + 1)
                .expect("order within the analytic range of f0");
            let v = arg(x);
            if !(v > 0.0 && v < 1.0) {
                return f0d[..=order].iter().map(|c| c * base).collect();
            }
            let mut vd = Vec::with_capacity(order + 1);
            vd.push(v);
            vd.extend(f0d[..order].iter().map(|c| c / f_mass));
            let kv = k.compose(&Jet::from_derivatives(&vd));
            let factor = &Jet::constant(base, order) + &kv.scale(gamma);
            (&Jet::from_derivatives(&f0d[..=order]) * &factor).derivatives()
        });
    }
    d.with_breakpoints(breakpoints)
}

/// Builds `(f_1, f_2)` and validates every identity of the construction.
pub fn construct(p: &CounterexampleParams) -> Result<CounterexampleResult> {
    p.validate()?;
    let beta = p.beta;
    let n = p.n;
    let f0 = match p.f0_kind {
        F0Kind::Power => default_f0(beta)?,
        F0Kind::ShiftedPower { m_n } => sharpness_f0(beta, n, m_n)?,
    };
    let radius = match p.radius {
        Some(r) => r,
        None => default_radius(&f0, beta)?,
    };
    let a = solve_a(beta);
    let loc = locate_x0(&f0, beta, radius, n)?;
    let work = if loc.mirrored { f0.reflect() } else { f0.clone() };
    let x0 = if loc.mirrored { 1.0 - loc.x0 } else { loc.x0 };
    let f_mass = compute_f(work.eval(x0), a, radius, beta, n)?;

    let cfg = QuadConfig::default();
    let table = build_cdf(&work, &cfg, SEED_CDF_GRID)?;
    let below_n0 = |e: Error| match e {
        Error::InsufficientMass { .. } => {
            Error::Infeasible(format!("n = {n} below n_0(R, beta): x2 > 1 ({e})"))
        }
        other => other,
    };
    let x1 = mass_endpoint(&work, &table, x0, f_mass).map_err(below_n0)?;
    if x1 >= 1.0 {
        return Err(Error::Infeasible(format!("n = {n} below n_0(R, beta): x2 > 1")));
    }
    let x2 = mass_endpoint(&work, &table, x1, f_mass).map_err(below_n0)?;
    if !(x0 < x1 && x1 < x2 && x2 <= 1.0) {
        return Err(Error::Validation(format!(
            "perturbation endpoints out of order: x0={x0}, x1={x1}, x2={x2}"
        )));
    }

    let nf = n as f64 * f_mass;
    let gamma = 1.0 / nf + 2.0 / nf.sqrt();
    let mut bps: Vec<f64> = work.breakpoints().to_vec();
    bps.extend([x0, x1, x2]);
    let w1 = perturbed(&work, x0, x1, f_mass, gamma, bps.clone(), format!("f1(beta={beta}, n={n})"))?;
    let w2 = perturbed(&work, x1, x2, f_mass, gamma, bps, format!("f2(beta={beta}, n={n})"))?;
    let (f1, f2) = if loc.mirrored {
        (
            w1.reflect().with_label(format!("f1(beta={beta}, n={n})")),
            w2.reflect().with_label(format!("f2(beta={beta}, n={n})")),
        )
    } else {
        (w1.clone(), w2.clone())
    };

    let k = bump_kernel();
    let kernel_sup = k.sup();
    let mut diag = BTreeMap::new();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        if !ok {
            failures.push(format!("{name}: {detail}"));
        }
    };

    // Identities of the construction (working frame).
    let tight = QuadConfig::new(1e-13, 60, 8)?;
    let seg_mass = |lo: f64, hi: f64| integrate(|y| work.eval(y), lo, hi, &tight, &[]);
    let m01 = (seg_mass(x0, x1)? - f_mass).abs();
    let m12 = (seg_mass(x1, x2)? - f_mass).abs();
    diag.insert("interval_mass_residual_01".into(), m01);
    diag.insert("interval_mass_residual_12".into(), m12);
    let sqrt_res = ((1.0 + gamma).sqrt() - (1.0 + 1.0 / nf.sqrt())).abs();
    diag.insert("gamma_residual".into(), sqrt_res);
    check("gamma", sqrt_res <= 1e-12 * (1.0 + gamma), format!("{sqrt_res:e}"));

    let nn = n as f64;
    diag.insert("f_lower_margin".into(), f_mass - a / (8.0 * nn));
    diag.insert("f_upper_margin".into(), 1.0 / (16.0 * nn) - f_mass);
    diag.insert("gamma_f_times_n".into(), gamma * f_mass * nn);
    check(
        "gamma_f",
        gamma * f_mass <= 1.5 / nn * (1.0 + 1e-12),
        format!("gamma F = {:e} > 3/(2n)", gamma * f_mass),
    );

    let mass1 = (w1.validate(&cfg)? - 1.0).abs();
    let mass2 = (w2.validate(&cfg)? - 1.0).abs();
    diag.insert("mass_residual_f1".into(), mass1);
    diag.insert("mass_residual_f2".into(), mass2);
    check("mass_f1", mass1 < IDENTITY_TOL, format!("{mass1:e}"));
    check("mass_f2", mass2 < IDENTITY_TOL, format!("{mass2:e}"));

    let l1 = l1_distance(&w1, &w2, &cfg)?;
    let l1_res = (l1 - 2.0 * gamma * f_mass).abs();
    diag.insert("l1".into(), l1);
    diag.insert("l1_residual".into(), l1_res);
    check("l1_identity", l1_res < IDENTITY_TOL, format!("{l1_res:e}"));

    let h2 = hellinger_sq_densities(&w1, &w2, &cfg)?;
    diag.insert("hellinger_sq".into(), h2);
    diag.insert("n_hellinger_sq".into(), nn * h2);
    diag.insert("hellinger_margin".into(), nn * h2 - (2.0 - 3.0 / nn));

    // Supports of f_j - f_0 are [x_{j-1}, x_j]: the kernel argument leaves
    // (0, 1) outside, so only the constant factor 1 - gamma F survives there.
    let probe = [x0 - 1e-9, x1, x2 + 1e-9];
    let base = 1.0 - gamma * f_mass;
    let support_res = probe
        .iter()
        .filter(|x| (0.0..=1.0).contains(*x))
        .map(|&x| {
            let f = work.eval(x);
            (w1.eval(x) - base * f).abs().max((w2.eval(x) - base * f).abs())
        })
        .fold(0.0, f64::max);
    diag.insert("support_residual".into(), support_res);
    check("supports", support_res <= 1e-12, format!("{support_res:e}"));

    // Band containment 1 - 3/(2n) <= f_j / f_0 <= 1 + (1 + sqrt(8/a))^2 ||K||_inf.
    let band_hi = 1.0 + (1.0 + (8.0 / a).sqrt()).powi(2) * kernel_sup;
    let band_lo = 1.0 - 1.5 / nn;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max: f64 = 0.0;
    for x in band_grid(x0, x1, x2) {
        let f = work.eval(x);
        if f > 0.0 {
            for w in [&w1, &w2] {
                let r = w.eval(x) / f;
                ratio_min = ratio_min.min(r);
                ratio_max = ratio_max.max(r);
            }
        }
    }
    diag.insert("band_lower_margin".into(), ratio_min - band_lo);
    diag.insert("band_upper_margin".into(), band_hi - ratio_max);
    check("band_lower", ratio_min >= band_lo - 1e-12, format!("min ratio {ratio_min}"));
    check("band_upper", ratio_max <= band_hi + 1e-12, format!("max ratio {ratio_max}"));

    // |f_0(x) - f_0(x_0)| <= f_0(x_0)/2 on the perturbation support.
    let fx0 = work.eval(x0);
    let dev = (0..=256)
        .map(|i| x0 + (x2 - x0) * i as f64 / 256.0)
        .map(|x| (work.eval(x) - fx0).abs())
        .fold(0.0, f64::max);
    diag.insert("flatness_margin".into(), 0.5 * fx0 - dev);
    check("flatness", dev <= 0.5 * fx0, format!("deviation {dev} > f0(x0)/2"));

    // Empirical norm ratio standing in for the unexplicit constant C.
    let mut c_emp: f64 = 0.0;
    for w in [&f1, &f2] {
        c_emp = c_emp.max(norm_report(w, beta, DEFAULT_NORM_GRID)?.h_norm / radius);
    }
    let c_band = c_emp.max(4.0).max(band_hi);
    diag.insert("c_emp".into(), c_emp);
    diag.insert("f0_norm_ratio".into(), norm_report(&f0, beta, DEFAULT_NORM_GRID)?.h_norm / radius);

    if !failures.is_empty() {
        return Err(Error::Validation(format!(
            "counterexample identities failed: {}; diagnostics: {diag:?}",
            failures.join("; ")
        )));
    }
    Ok(CounterexampleResult {
        params: p.clone(),
        radius,
        f0,
        f1,
        f2,
        x0,
        x1,
        x2,
        mirrored: loc.mirrored,
        a,
        f_mass,
        gamma,
        kernel_sup,
        c_band,
        c_emp,
        diagnostics: diag,
    })
}

/// Uniform grid plus 32 points inside each perturbation interval.
fn band_grid(x0: f64, x1: f64, x2: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=4096).map(|i| i as f64 / 4096.0).collect();
    for (lo, hi) in [(x0, x1), (x1, x2)] {
        g.extend((0..=32).map(|k| lo + (hi - lo) * k as f64 / 32.0));
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// `m` equally spaced rows `x,f0,f1,f2`, plus the breakpoints and 32 rows
/// inside each perturbation interval.
pub fn export_figure_grid(r: &CounterexampleResult, m: usize) -> Result<Table> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    let [b0, b1, b2] = r.breakpoints();
    let mut xs: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    for (lo, hi) in [(b0, b1), (b1, b2)] {
        xs.extend((0..=32).map(|k| lo + (hi - lo) * k as f64 / 32.0));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut t = Table::new(["x", "f0", "f1", "f2"]);
    for x in xs {
        t.push(vec![x, r.f0.eval(x), r.f1.eval(x), r.f2.eval(x)]);
    }
    Ok(t)
}
