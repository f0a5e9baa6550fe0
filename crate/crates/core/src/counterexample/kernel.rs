//! The normalized `C^inf` bump `K(u) = exp(-1/(u(1-u))) / Z` on `[0, 1]`.

use std::sync::OnceLock;

use crate::density_core::{integrate, QuadConfig};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpKernel {
    z: f64,
}

/// Below this `exp(-1/w)` underflows to zero.
const MIN_W: f64 = 1.0 / 745.0;

fn unnormalized(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    (-1.0 / (u * (1.0 - u))).exp()
}

/// The bump kernel; `Z` is computed once, to `1e-14`, on first use.
pub fn bump_kernel() -> BumpKernel {
    static Z: OnceLock<f64> = OnceLock::new();
    let z = *Z.get_or_init(|| {
        let cfg = QuadConfig::new(1e-15, 60, 16).expect("static quadrature config");
        integrate(unnormalized, 0.0, 1.0, &cfg, &[0.5]).expect("bump normalizer converges")
    });
    BumpKernel { z }
}

impl BumpKernel {
    pub fn normalizer(&self) -> f64 {
        self.z
    }

    /// `||K||_inf = K(1/2) = e^{-4} / Z`.
    pub fn sup(&self) -> f64 {
        (-4.0f64).exp() / self.z
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        unnormalized(u) / self.z
    }

    /// Jet of `K(v(x))` from the jet of `v`.
    pub fn compose(&self, v: &Jet) -> Jet {
        let u = v.value();
        let order = v.order();
        if u <= 0.0 || u >= 1.0 || u * (1.0 - u) < MIN_W {
            return Jet::constant(0.0, order);
        }
        let w = v - &(v * v);
        w.recip().scale(-1.0).exp().scale(1.0 / self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn normalized_symmetric_and_peaked_at_half() {
        let k = bump_kernel();
        let cfg = QuadConfig::new(1e-13, 60, 8).unwrap();
        let mass = integrate(|u| k.eval(u), 0.0, 1.0, &cfg, &[]).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
        assert_eq!(k.eval(0.0), 0.0);
        assert_eq!(k.eval(1.0), 0.0);
        assert_relative_eq!(k.eval(0.5), k.sup());
        for i in 0..=200 {
            let u = i as f64 / 200.0;
            assert_relative_eq!(k.eval(u), k.eval(1.0 - u), max_relative = 1e-12);
            assert!(k.eval(u) <= k.sup());
        }
    }

    #[test]
    fn normalizer_matches_independent_midpoint_sum() {
        let m = 200_000;
        let h = 1.0 / m as f64;
        let z: f64 = (0..m).map(|i| unnormalized((i as f64 + 0.5) * h) * h).sum();
        assert_relative_eq!(bump_kernel().normalizer(), z, max_relative = 1e-9);
    }

    #[test]
    fn composed_jet_matches_finite_differences() {
        let k = bump_kernel();
        // v(x) = x^2 at x = 0.6.
        let x: f64 = 0.6;
        let v = Jet::from_derivatives(&[x * x, 2.0 * x, 2.0, 0.0]);
        let d = k.compose(&v).derivatives();
        let g = |y: f64| k.eval(y * y);
        let h = 1e-4;
        assert_relative_eq!(d[0], g(x), max_relative = 1e-14);
        assert_relative_eq!(d[1], (g(x + h) - g(x - h)) / (2.0 * h), max_relative = 1e-6);
        let second = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
        assert_relative_eq!(d[2], second, max_relative = 1e-5);
        let third = (g(x + 2.0 * h) - 2.0 * g(x + h) + 2.0 * g(x - h) - g(x - 2.0 * h)) / (2.0 * h * h * h);
        assert_relative_eq!(d[3], third, max_relative = 1e-3);
    }

    #[test]
    fn composed_jet_vanishes_outside_support() {
        let k = bump_kernel();
        let v = Jet::from_derivatives(&[1.2, 1.0, 0.0]);
        assert_eq!(k.compose(&v).coefficients(), &[0.0, 0.0, 0.0]);
    }
}
