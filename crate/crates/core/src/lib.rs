//! Nonparametric regression with covariates missing at random.
//!
//! The mean function is estimated by inverse-selection-probability weighted
//! local linear regression, with a parametric model for the probability that
//! the covariate is observed given the (always observed) response. Bands are
//! simultaneous over a trimmed interval and use extreme-value critical
//! constants; [`band::test_null`] turns a band into a test of a null curve.
//!
//! ```
//! use ipwband::prelude::*;
//!
//! let scenario = Scenario::new(Case::Case1, Mechanism::Logit, [1.8, 1.0], 400).with_replications(1);
//! let sample = generate(&scenario, 0).unwrap();
//! let model = fit_selection(Family::Logit, &sample.y(), &sample.delta()).unwrap();
//! let (config, _) = FitConfig::recommended(&sample, quartic_kernel(), DEFAULT_RHO).unwrap();
//! let interval = observed_range(&sample).unwrap();
//! let band = build_band(&sample, &model, &config, &interval, DEFAULT_GRID_SIZE, 0.05).unwrap();
//! assert_eq!(band.grid.len(), 401);
//! ```

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod band;
pub mod error;
pub mod io;
pub mod kernel;
mod linalg;
pub mod numeric;
mod quad;
pub mod regress;
pub mod sample;
pub mod selection;
pub mod sim;

#[cfg(test)]
mod test_oracle;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::band::{
        build_band, complete_case_band, critical_constants, fit_band, fit_complete_case_band, gumbel_cdf,
        gumbel_quantile, test_null, variance_estimate, weighted_linear_null, BandEstimate, BandFit,
        CriticalConstants, NullTestResult, DEFAULT_GRID_SIZE,
    };
    pub use crate::kernel::{quartic_kernel, KernelSpec};
    pub use crate::regress::{
        density_estimate, observed_range, rot_bandwidth, scb_bandwidth, silverman_bandwidth, wll_fit,
        EvalInterval, FitConfig, LocalLinear, DEFAULT_RHO,
    };
    pub use crate::sample::{ObservedSample, Record};
    pub use crate::selection::{fit_selection, hosmer_lemeshow, predict_pi, Family, SelectionModel};
    pub use crate::sim::{generate, run_scenario, Case, CoverageReport, Mechanism, Scenario, Truth};
}
