//! Population quantities of a simulation design, used as oracles.
//!
//! With X ~ U[-1, 1] (density f_X = 1/2), ε | X = x ~ N(0, σ²(x)) with density
//! φ_x, and P(δ = 1 | Y) = π(Y), Bayes' rule gives the joint density of
//! (X, ε) among complete cases:
//!
//!   f_{X,ε|δ=1}(x, e) = f_X(x) φ_x(e) π(m(x) + e) / p,
//!   p = P(δ = 1) = ∫∫ f_X(x) φ_x(e) π(m(x) + e) de dx.
//!
//! Substituting into s(x) = ∫ e² / π²(m(x) + e) f_{X,ε|δ=1}(x, e) de,
//!
//!   s(x) = f_X(x) / p · ∫ e² φ_x(e) / π(m(x) + e) de,
//!   d(x) = λ(K) s(x) / f_X(x)² = λ(K) / (p f_X(x)) · E[ε² / π(Y) | X = x].
//!
//! The inner integrals are evaluated by adaptive Simpson in the standardized
//! error z = e / σ(x) over [-12, 12].

use super::dgp::Scenario;
use crate::kernel::KernelSpec;
use crate::numeric::norm_pdf;
use crate::quad::adaptive_simpson;

const Z_LIMIT: f64 = 12.0;
const DENSITY_X: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Truth {
    scenario: Scenario,
    lambda: f64,
    p_observed: f64,
}

impl Truth {
    pub fn new(scenario: &Scenario, kernel: &KernelSpec) -> Self {
        let mut truth = Self { scenario: scenario.clone(), lambda: kernel.lambda, p_observed: f64::NAN };
        let inner = |x: f64| truth.conditional_moment(x, |_, pi| pi);
        truth.p_observed = DENSITY_X * adaptive_simpson(&inner, -1.0, 1.0, 1e-11);
        truth
    }

    pub fn mean(&self, x: f64) -> f64 {
        self.scenario.case.mean(x)
    }

    pub fn density(&self, x: f64) -> f64 {
        if (-1.0..=1.0).contains(&x) {
            DENSITY_X
        } else {
            0.0
        }
    }

    /// P(δ = 1).
    pub fn observed_probability(&self) -> f64 {
        self.p_observed
    }

    /// ∫ g(e, π(m(x) + e)) φ_x(e) de.
    fn conditional_moment(&self, x: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
        let m = self.scenario.case.mean(x);
        let sigma = self.scenario.case.sigma(x);
        let integrand = |z: f64| {
            let e = sigma * z;
            g(e, self.scenario.true_pi(m + e)) * norm_pdf(z)
        };
        adaptive_simpson(&integrand, -Z_LIMIT, Z_LIMIT, 1e-12)
    }

    /// E[ε² / π(Y) | X = x].
    pub fn inverse_weighted_variance(&self, x: f64) -> f64 {
        self.conditional_moment(x, |e, pi| e * e / pi)
    }

    /// s(x) = ∫ ε² / π² f_{X,ε|δ=1}(x, ε) dε.
    pub fn s(&self, x: f64) -> f64 {
        self.density(x) / self.p_observed * self.inverse_weighted_variance(x)
    }

    /// d(x) = λ(K) s(x) / f_X(x)².
    pub fn d(&self, x: f64) -> f64 {
        self.lambda * self.s(x) / self.density(x).powi(2)
    }
}
