//! Kernel functions and the analytic functionals used in estimation and band
//! construction.

use crate::error::{Error, Result};

/// A symmetric, compactly supported second-order kernel together with its
/// precomputed functionals.
///
/// `lambda` is the integral of K², `cee` is the integral of (K')² divided by
/// `lambda`, and `mu2` is the second moment. `cee` feeds the extreme-value
/// centering constant, so the derivative is supplied analytically.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub name: &'static str,
    eval: fn(f64) -> f64,
    derivative: fn(f64) -> f64,
    pub support_halfwidth: f64,
    pub lambda: f64,
    pub cee: f64,
    pub mu2: f64,
}

fn quartic_eval(u: f64) -> f64 {
    if u.abs() > 1.0 {
        0.0
    } else {
        let v = 1.0 - u * u;
        0.9375 * v * v
    }
}

fn quartic_derivative(u: f64) -> f64 {
    if u.abs() > 1.0 {
        0.0
    } else {
        -3.75 * u * (1.0 - u * u)
    }
}

/// The quartic (biweight) kernel 15/16 (1 - u²)² on [-1, 1].
pub fn quartic_kernel() -> KernelSpec {
    KernelSpec {
        name: "quartic",
        eval: quartic_eval,
        derivative: quartic_derivative,
        support_halfwidth: 1.0,
        lambda: 5.0 / 7.0,
        cee: 3.0,
        mu2: 1.0 / 7.0,
    }
}

impl KernelSpec {
    /// Builds a kernel from user-supplied functions and functionals.
    pub fn custom(
        name: &'static str,
        eval: fn(f64) -> f64,
        derivative: fn(f64) -> f64,
        support_halfwidth: f64,
        lambda: f64,
        cee: f64,
        mu2: f64,
    ) -> Self {
        Self { name, eval, derivative, support_halfwidth, lambda, cee, mu2 }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.eval)(u)
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        (self.derivative)(u)
    }

    /// K_h(u) = K(u/h)/h.
    pub fn rescaled_eval(&self, u: f64, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidBandwidth(h));
        }
        Ok(self.rescaled_unchecked(u, h))
    }

    #[inline]
    pub(crate) fn rescaled_unchecked(&self, u: f64, h: f64) -> f64 {
        self.eval(u / h) / h
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        quartic_kernel()
    }
}

/// Free-function form of [`KernelSpec::rescaled_eval`].
pub fn rescaled_eval(spec: &KernelSpec, u: f64, h: f64) -> Result<f64> {
    spec.rescaled_eval(u, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_oracle::gauss_kronrod;
    use proptest::prelude::*;

    #[test]
    fn quartic_point_values() {
        let k = quartic_kernel();
        assert_eq!(k.eval(0.0), 0.9375);
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(-1.0), 0.0);
        assert_eq!(k.eval(0.5), 0.527_343_75);
        assert_eq!(k.eval(1.000_001), 0.0);
    }

    #[test]
    fn functionals_match_quadrature() {
        let k = quartic_kernel();
        let q = |f: &dyn Fn(f64) -> f64| gauss_kronrod(f, -1.0, 1.0, 1e-13);
        let mass = q(&|u| k.eval(u));
        let first = q(&|u| u * k.eval(u));
        let mu2 = q(&|u| u * u * k.eval(u));
        let lambda = q(&|u| k.eval(u).powi(2));
        let dsq = q(&|u| k.derivative(u).powi(2));
        assert!((mass - 1.0).abs() < 1e-10);
        assert!(first.abs() < 1e-10);
        assert!((mu2 - k.mu2).abs() < 1e-8);
        assert!((lambda - k.lambda).abs() < 1e-8);
        assert!((dsq / lambda - k.cee).abs() < 1e-8);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let k = quartic_kernel();
        let step = 1e-6;
        for i in -19..=19 {
            let u = i as f64 / 20.0;
            let fd = (k.eval(u + step) - k.eval(u - step)) / (2.0 * step);
            assert!((fd - k.derivative(u)).abs() < 1e-8, "u = {u}");
        }
    }

    #[test]
    fn rescaled_examples() {
        let k = quartic_kernel();
        assert_eq!(k.rescaled_eval(0.0, 0.5).unwrap(), 1.875);
        assert_eq!(k.rescaled_eval(0.6, 0.5).unwrap(), 0.0);
        assert_eq!(k.rescaled_eval(0.3, 1.0).unwrap(), k.eval(0.3));
        assert!(matches!(k.rescaled_eval(0.0, 0.0), Err(Error::InvalidBandwidth(_))));
        assert!(matches!(rescaled_eval(&k, 0.0, -1.0), Err(Error::InvalidBandwidth(_))));
    }

    #[test]
    fn rescaled_kernel_integrates_to_one() {
        let k = quartic_kernel();
        for &h in &[0.05, 0.3, 2.0] {
            let step = h / 1000.0;
            let total: f64 = (-1100..=1100)
                .map(|i| k.rescaled_eval(i as f64 * step, h).unwrap() * step)
                .sum();
            assert!((total - 1.0).abs() < 1e-3, "h = {h}");
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_nonnegative(u in -3.0f64..3.0) {
            let k = quartic_kernel();
            prop_assert!(k.eval(u) >= 0.0);
            prop_assert_eq!(k.eval(u), k.eval(-u));
            if u.abs() > k.support_halfwidth {
                prop_assert_eq!(k.eval(u), 0.0);
            }
        }

        #[test]
        fn rescaling_homogeneity(u in -2.0f64..2.0, h in 0.01f64..3.0, c in 0.1f64..10.0) {
            let k = quartic_kernel();
            let lhs = k.rescaled_eval(c * u, c * h).unwrap();
            let rhs = k.rescaled_eval(u, h).unwrap() / c;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
