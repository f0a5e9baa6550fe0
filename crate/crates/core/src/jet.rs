//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] holds the normalized Taylor coefficients `c_k = g^(k)(x) / k!`
//! of a function at a point. Products, reciprocals and exponentials of jets
//! give exact derivatives of compositions such as `f_0 * K(v(x))` without
//! finite differences.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet(Vec<f64>);

impl Jet {
    /// Jet of a constant, truncated at `order`.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Jet(c)
    }

    /// Builds a jet from plain derivatives `[g, g', g'', ...]`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let c = derivs
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Jet(c)
    }

    pub fn from_coefficients(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet(coeffs)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    /// Plain derivatives `[g, g', ..., g^(order)]`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.0
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet(self.0.iter().map(|c| c * s).collect())
    }

    pub fn recip(&self) -> Self {
        let a = &self.0;
        let inv0 = 1.0 / a[0];
        let mut b = vec![0.0; a.len()];
        b[0] = inv0;
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -inv0 * s;
        }
        Jet(b)
    }

    pub fn exp(&self) -> Self {
        let a = &self.0;
        let mut e = vec![0.0; a.len()];
        e[0] = a[0].exp();
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        let n = self.0.len().min(other.0.len());
        Jet((0..n).map(|k| op(self.0[k], other.0[k])).collect())
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.0.len().min(rhs.0.len());
        let c = (0..n)
            .map(|k| (0..=k).map(|j| self.0[j] * rhs.0[k - j]).sum())
            .collect();
        Jet(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_of_sine_matches_closed_form() {
        // h(x) = exp(sin x) at x = 0.4: h' = cos e^sin, h'' = (cos^2 - sin) e^sin.
        let x: f64 = 0.4;
        let s = Jet::from_derivatives(&[x.sin(), x.cos(), -x.sin()]);
        let d = s.exp().derivatives();
        let e = x.sin().exp();
        assert_relative_eq!(d[0], e, max_relative = 1e-15);
        assert_relative_eq!(d[1], x.cos() * e, max_relative = 1e-15);
        assert_relative_eq!(d[2], (x.cos().powi(2) - x.sin()) * e, max_relative = 1e-14);
    }

    #[test]
    fn reciprocal_and_product() {
        // 1/x and x * (1/x) = 1 at x = 2.
        let x = Jet::from_derivatives(&[2.0, 1.0, 0.0, 0.0]);
        let inv = x.recip().derivatives();
        assert_relative_eq!(inv[1], -0.25);
        assert_relative_eq!(inv[2], 2.0 / 8.0);
        assert_relative_eq!(inv[3], -6.0 / 16.0);
        let one = (&x * &x.recip()).derivatives();
        assert_relative_eq!(one[0], 1.0);
        assert!(one[1..].iter().all(|c| c.abs() < 1e-15));
    }
}
