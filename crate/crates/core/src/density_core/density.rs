use std::fmt;
use std::io::Write;
use std::sync::Arc;

use super::quad::{integrate, QuadConfig};
use crate::jet::Jet;
use crate::output::fmt_f64;
use crate::{Error, Result};

pub type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Returns `[f(x), f'(x), ..., f^(order)(x)]`.
pub type DerivFn = Arc<dyn Fn(f64, usize) -> Vec<f64> + Send + Sync>;

/// A probability density on `[0, 1]`.
///
/// Cloning is cheap; the evaluation closures are shared. The density is
/// treated as zero outside `[0, 1]`.
#[derive(Clone)]
pub struct Density {
    label: String,
    eval: EvalFn,
    derivatives: Option<(usize, DerivFn)>,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("analytic_order", &self.analytic_order())
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl Density {
    pub fn new(label: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            derivatives: None,
            breakpoints: Vec::new(),
        }
    }

    /// Attaches analytic derivatives up to `max_order` (`usize::MAX` for all orders).
    pub fn with_derivatives(
        mut self,
        max_order: usize,
        derivs: impl Fn(f64, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = Some((max_order, Arc::new(derivs)));
        self
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(Error::InvalidParameter(format!(
                "breakpoints must lie in [0, 1], got {breakpoints:?}"
            )));
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        (self.eval)(x)
    }

    /// Highest derivative order available analytically, if any.
    pub fn analytic_order(&self) -> Option<usize> {
        self.derivatives.as_ref().map(|(k, _)| *k)
    }

    /// Analytic derivatives `[f, f', ..., f^(order)]` at `x`, when available
    /// up to `order`.
    pub fn derivatives_at(&self, x: f64, order: usize) -> Option<Vec<f64>> {
        match &self.derivatives {
            Some((max, d)) if order <= *max => Some(d(x, order)),
            _ => None,
        }
    }

    /// The density `x -> f(1 - x)`.
    pub fn reflect(&self) -> Density {
        let eval = self.eval.clone();
        let derivatives = self.derivatives.as_ref().map(|(max, d)| {
            let d = d.clone();
            let reflected: DerivFn = Arc::new(move |x: f64, order: usize| {
                let mut v = d(1.0 - x, order);
                for (j, c) in v.iter_mut().enumerate() {
                    if j % 2 == 1 {
                        *c = -*c;
                    }
                }
                v
            });
            (*max, reflected)
        });
        let mut breakpoints: Vec<f64> = self.breakpoints.iter().map(|b| 1.0 - b).collect();
        breakpoints.sort_by(f64::total_cmp);
        Density {
            label: format!("{} (reflected)", self.label),
            eval: Arc::new(move |x| eval(1.0 - x)),
            derivatives,
            breakpoints,
        }
    }

    /// Total mass by quadrature; errors when it misses 1 by more than `10 * abs_tol`
    /// or when a negative value shows up on a 1025-point grid.
    pub fn validate(&self, cfg: &QuadConfig) -> Result<f64> {
        for i in 0..=1024 {
            let x = i as f64 / 1024.0;
            let v = self.eval(x);
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "density '{}' is negative or undefined at x={x}: {v}",
                    self.label
                )));
            }
        }
        let mass = integrate(|x| self.eval(x), 0.0, 1.0, cfg, &self.breakpoints)?;
        let tolerance = 10.0 * cfg.abs_tol;
        if (mass - 1.0).abs() > tolerance {
            return Err(Error::MassMismatch { mass, tolerance });
        }
        Ok(mass)
    }

    /// Writes `m` equally spaced rows `x,f` with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W, m: usize) -> std::io::Result<()> {
        writeln!(out, "x,f")?;
        let m = m.max(2);
        for i in 0..m {
            let x = i as f64 / (m - 1) as f64;
            writeln!(out, "{},{}", fmt_f64(x), fmt_f64(self.eval(x)))?;
        }
        Ok(())
    }

    /// The uniform density on `[0, 1]`.
    pub fn uniform() -> Density {
        Density::new("uniform", |_| 1.0).with_derivatives(usize::MAX, |_, order| {
            let mut v = vec![0.0; order + 1];
            v[0] = 1.0;
            v
        })
    }

    /// `(beta + 1) x^beta`, with all derivatives
    /// `f^(j)(x) = (beta+1) beta (beta-1) ... (beta-j+1) x^(beta-j)`.
    pub fn power(beta: f64) -> Result<Density> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Density::new(format!("power(beta={beta})"), move |x: f64| {
            (beta + 1.0) * x.powf(beta)
        })
        .with_derivatives(usize::MAX, move |x, order| power_derivatives(beta + 1.0, beta, 0.0, x, order)))
    }

    /// `exp(sum_k c_k cos(k pi x)) / Z`, a strictly positive smooth density.
    /// Handy for random smooth test pairs.
    pub fn log_trig(coeffs: &[f64], cfg: &QuadConfig) -> Result<Density> {
        let coeffs: Arc<[f64]> = coeffs.into();
        let c = coeffs.clone();
        let raw = move |x: f64| -> f64 {
            c.iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x).cos())
                .sum::<f64>()
                .exp()
        };
        let z = integrate(&raw, 0.0, 1.0, &cfg.with_tol(cfg.abs_tol * 1e-2), &[])?;
        let c = coeffs.clone();
        let derivs = move |x: f64, order: usize| {
            let mut exponent = vec![0.0; order + 1];
            for (k, a) in c.iter().enumerate() {
                let w = (k + 1) as f64 * std::f64::consts::PI;
                let (s, co) = (w * x).sin_cos();
                // d^j/dx^j cos(wx) cycles through cos, -sin, -cos, sin.
                let mut wp = 1.0;
                for (j, e) in exponent.iter_mut().enumerate() {
                    let base = match j % 4 {
                        0 => co,
                        1 => -s,
                        2 => -co,
                        _ => s,
                    };
                    *e += a * wp * base;
                    wp *= w;
                }
            }
            Jet::from_derivatives(&exponent).exp().scale(1.0 / z).derivatives()
        };
        Ok(Density::new(format!("log_trig({:?})", &*coeffs), move |x| raw(x) / z)
            .with_derivatives(usize::MAX, derivs))
    }
}

/// Derivatives of `scale * x^p + offset` up to `order`, for `x >= 0`.
pub(crate) fn power_derivatives(scale: f64, p: f64, offset: f64, x: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut coef = scale;
    for j in 0..=order {
        let e = p - j as f64;
        let v = if coef == 0.0 {
            0.0
        } else if x > 0.0 {
            coef * x.powf(e)
        } else if e > 0.0 {
            0.0
        } else if e == 0.0 {
            coef
        } else {
            f64::INFINITY * coef.signum()
        };
        out.push(if j == 0 { v + offset } else { v });
        coef *= e;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_family_matches_gamma_ratio() {
        use statrs::function::gamma::gamma;
        let beta = 2.7;
        let f = Density::power(beta).unwrap();
        let x = 0.37;
        let d = f.derivatives_at(x, 2).unwrap();
        for (j, dj) in d.iter().enumerate() {
            let expected =
                gamma(beta + 2.0) / gamma(beta - j as f64 + 1.0) * x.powf(beta - j as f64);
            assert_relative_eq!(*dj, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn integer_power_derivatives_terminate() {
        // 3x^2: f''' = 0 everywhere, including at the origin.
        let f = Density::power(2.0).unwrap();
        let d = f.derivatives_at(0.0, 3).unwrap();
        assert_eq!(d, vec![0.0, 0.0, 6.0, 0.0]);
    }

    #[test]
    fn reflection_flips_odd_derivatives() {
        let f = Density::power(1.0).unwrap();
        let g = f.reflect();
        assert_relative_eq!(g.eval(0.25), 1.5);
        assert_relative_eq!(g.derivatives_at(0.25, 1).unwrap()[1], -2.0);
    }

    #[test]
    fn log_trig_is_normalized_with_consistent_derivative() {
        let cfg = QuadConfig::default();
        let f = Density::log_trig(&[0.4, -0.3, 0.2], &cfg).unwrap();
        let mass = f.validate(&cfg).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
        let x = 0.31;
        let h = 1e-5;
        let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
        assert_relative_eq!(f.derivatives_at(x, 1).unwrap()[1], fd, max_relative = 1e-7);
        assert_relative_eq!(f.derivatives_at(x, 0).unwrap()[0], f.eval(x), max_relative = 1e-14);
    }

    #[test]
    fn unnormalized_function_fails_validation() {
        let cfg = QuadConfig::default();
        let f = Density::new("half", |_| 0.5);
        assert!(matches!(f.validate(&cfg), Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn breakpoints_outside_unit_interval_rejected() {
        assert!(Density::uniform().with_breakpoints(vec![0.5, 1.5]).is_err());
        let d = Density::uniform().with_breakpoints(vec![0.7, 0.2, 0.7]).unwrap();
        assert_eq!(d.breakpoints(), &[0.2, 0.7]);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let mut buf = Vec::new();
        Density::uniform().write_csv(&mut buf, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,f");
        assert_eq!(lines.len(), 4);
    }
}
