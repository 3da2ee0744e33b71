//! Variance estimation, extreme-value critical constants, simultaneous
//! confidence band assembly and band-based tests of a null curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::numeric::KahanSum;
use crate::regress::{EvalInterval, FitConfig, LocalLinear};
use crate::sample::ObservedSample;
use crate::selection::SelectionModel;

pub const DEFAULT_GRID_SIZE: usize = 401;

/// Largest fraction of grid points that may be excluded before a band is
/// declared infeasible.
pub const MAX_FAILED_GRID_FRACTION: f64 = 0.05;

/// Limit law of the standardized maximal deviation: P(T ≤ t) = exp(-2 e^{-t}).
pub fn gumbel_cdf(t: f64) -> f64 {
    (-2.0 * (-t).exp()).exp()
}

/// Upper tail 1 - exp(-2 e^{-t}), accurate for large t.
pub fn gumbel_sf(t: f64) -> f64 {
    -(-2.0 * (-t).exp()).exp_m1()
}

/// q_α = -log(-½ log(1 - α)), the (1 - α) quantile of [`gumbel_cdf`].
pub fn gumbel_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(alpha));
    }
    Ok(-(-0.5 * (-alpha).ln_1p()).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub a_h: f64,
    pub b_h: f64,
}

impl CriticalConstants {
    /// b_h + q_α / a_h, the multiplier of the pointwise standard error.
    pub fn multiplier(&self, q_alpha: f64) -> f64 {
        self.b_h + q_alpha / self.a_h
    }
}

/// a_h = √(-2 log(h / (b0 - a0))), b_h = a_h + log(C(K) / (4π²)) / (2 a_h).
pub fn critical_constants(h: f64, a0: f64, b0: f64, kernel: &KernelSpec) -> Result<CriticalConstants> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidBandwidth(h));
    }
    let length = b0 - a0;
    if !(h < length) {
        return Err(Error::BandwidthExceedsInterval { h, length });
    }
    let a_h = (-2.0 * (h / length).ln()).sqrt();
    let pi = std::f64::consts::PI;
    let b_h = a_h + (kernel.cee / (4.0 * pi * pi)).ln() / (2.0 * a_h);
    Ok(CriticalConstants { a_h, b_h })
}

/// Outcome of [`variance_estimate`] at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    /// Complete cases with positive kernel weight at x.
    pub in_window: usize,
}

impl VarianceEstimate {
    pub fn is_empty_window(&self) -> bool {
        self.in_window == 0
    }

    pub fn is_positive(&self) -> bool {
        self.value > 0.0
    }
}

/// d̂ₙ(x) = Δₙ⁻¹ h f̂(x)⁻² Σ (δᵢ/π̂ᵢ²) K_h²(Xᵢ - x) ε̂ᵢ².
///
/// `pi_hat` and `residuals` are aligned with `sample.records()`; entries for
/// rows with a missing covariate are ignored.
pub fn variance_estimate(
    sample: &ObservedSample,
    pi_hat: &[f64],
    residuals: &[f64],
    f_hat: impl Fn(f64) -> f64,
    x: f64,
    h: f64,
    kernel: &KernelSpec,
) -> Result<VarianceEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidBandwidth(h));
    }
    if pi_hat.len() != sample.n() || residuals.len() != sample.n() {
        return Err(Error::Precondition("pi_hat and residuals must align with the sample".into()));
    }
    let f = f_hat(x);
    if !(f > 0.0) {
        return Err(Error::DensityFloor { x, value: f });
    }
    let mut acc = KahanSum::new();
    let mut in_window = 0;
    for ((r, &p), &e) in sample.records().iter().zip(pi_hat).zip(residuals) {
        let Some(xi) = r.x else { continue };
        let k = kernel.rescaled_unchecked(xi - x, h);
        if k > 0.0 {
            in_window += 1;
            acc.add(k * k * e * e / (p * p));
        }
    }
    let value = h * acc.value() / (sample.n_complete() as f64 * f * f);
    Ok(VarianceEstimate { value, in_window })
}

/// Point estimates and variance estimates on a grid, shared by bands at
/// every confidence level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFit {
    pub grid: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub f_hat: Vec<f64>,
    /// Grid points excluded because of a singular window, empty window or
    /// nonpositive density estimate.
    pub excluded: Vec<usize>,
    pub interval: EvalInterval,
    pub h: f64,
    pub h_f: f64,
    /// Sample size entering (nh)^{-1/2}.
    pub n: usize,
    pub n_complete: usize,
    pub r_n: f64,
    pub constants: CriticalConstants,
}

/// A simultaneous confidence band at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEstimate {
    pub grid: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub excluded: Vec<usize>,
    pub interval: EvalInterval,
    pub h: f64,
    pub h_f: f64,
    pub n: usize,
    pub n_complete: usize,
    pub r_n: f64,
    pub a_h: f64,
    pub b_h: f64,
    pub alpha: f64,
    pub q_alpha: f64,
}

impl BandFit {
    /// Evaluates m̂ and d̂ on the grid of `interval`.
    ///
    /// `n` and `r_n` are the sample size and complete-case ratio used for the
    /// band scaling; Δₙ is taken from `smoother`.
    pub fn compute(
        smoother: &LocalLinear,
        n: usize,
        r_n: f64,
        config: &FitConfig,
        interval: &EvalInterval,
        grid_size: usize,
    ) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::Precondition(format!("grid size {grid_size} below 2")));
        }
        let constants = critical_constants(config.h, interval.a0, interval.b0, &config.kernel)?;
        let h = config.h;
        let grid = interval.grid(grid_size);
        let reach = h * config.kernel.support_halfwidth;
        let residuals = smoother.residuals(h, interval.a0 - reach, interval.b0 + reach);
        let n_complete = smoother.x().len();

        let points: Vec<Option<(f64, f64, f64)>> = grid
            .par_iter()
            .map(|&x| {
                let m = smoother.fit(x, h).ok()?;
                let f = smoother.density(x, config.h_f);
                if !(f > 0.0) {
                    return None;
                }
                let (sum, count) = smoother.weighted_residual_sum(x, h, &residuals);
                if count == 0 {
                    return None;
                }
                let d = h * sum? / (n_complete as f64 * f * f);
                Some((m, d, f))
            })
            .collect();

        let excluded: Vec<usize> =
            points.iter().enumerate().filter(|(_, p)| p.is_none()).map(|(i, _)| i).collect();
        if excluded.len() as f64 > MAX_FAILED_GRID_FRACTION * grid_size as f64 {
            return Err(Error::CoverageInfeasible { failed: excluded.len(), total: grid_size });
        }
        let pick = |j: usize| points.iter().map(|p| p.map_or(f64::NAN, |t| [t.0, t.1, t.2][j])).collect();
        Ok(Self {
            m_hat: pick(0),
            d_hat: pick(1),
            f_hat: pick(2),
            grid,
            excluded,
            interval: *interval,
            h,
            h_f: config.h_f,
            n,
            n_complete,
            r_n,
            constants,
        })
    }

    /// (nh)^{-1/2} r_n^{1/2} d̂^{1/2}(x) at every grid point.
    pub fn standard_errors(&self) -> Vec<f64> {
        let scale = (self.r_n / (self.n as f64 * self.h)).sqrt();
        self.d_hat.iter().map(|d| scale * d.sqrt()).collect()
    }

    pub fn band(&self, alpha: f64) -> Result<BandEstimate> {
        let q_alpha = gumbel_quantile(alpha)?;
        let mult = self.constants.multiplier(q_alpha);
        let se = self.standard_errors();
        let half: Vec<f64> = se.iter().map(|s| s * mult).collect();
        Ok(BandEstimate {
            grid: self.grid.clone(),
            m_hat: self.m_hat.clone(),
            lower: self.m_hat.iter().zip(&half).map(|(m, w)| m - w).collect(),
            upper: self.m_hat.iter().zip(&half).map(|(m, w)| m + w).collect(),
            d_hat: self.d_hat.clone(),
            excluded: self.excluded.clone(),
            interval: self.interval,
            h: self.h,
            h_f: self.h_f,
            n: self.n,
            n_complete: self.n_complete,
            r_n: self.r_n,
            a_h: self.constants.a_h,
            b_h: self.constants.b_h,
            alpha,
            q_alpha,
        })
    }
}

impl BandEstimate {
    pub fn is_valid(&self, i: usize) -> bool {
        self.m_hat[i].is_finite() && self.d_hat[i].is_finite()
    }

    /// Whether `truth` lies inside the band at every valid grid point.
    pub fn covers(&self, truth: impl Fn(f64) -> f64) -> bool {
        (0..self.grid.len())
            .filter(|&i| self.is_valid(i))
            .all(|i| {
                let t = truth(self.grid[i]);
                self.lower[i] <= t && t <= self.upper[i]
            })
    }

    /// Mean of upper - lower over valid grid points.
    pub fn average_width(&self) -> f64 {
        let (sum, count) = (0..self.grid.len())
            .filter(|&i| self.is_valid(i))
            .fold((KahanSum::new(), 0usize), |(mut s, c), i| {
                s.add(self.upper[i] - self.lower[i]);
                (s, c + 1)
            });
        sum.value() / count as f64
    }
}

/// The inverse-probability-weighted band for m(x).
pub fn build_band(
    sample: &ObservedSample,
    selection: &SelectionModel,
    config: &FitConfig,
    interval: &EvalInterval,
    grid_size: usize,
    alpha: f64,
) -> Result<BandEstimate> {
    fit_band(sample, selection, config, interval, grid_size)?.band(alpha)
}

/// Grid evaluation behind [`build_band`], reusable across levels.
pub fn fit_band(
    sample: &ObservedSample,
    selection: &SelectionModel,
    config: &FitConfig,
    interval: &EvalInterval,
    grid_size: usize,
) -> Result<BandFit> {
    let pi_hat = selection.predict_all(&sample.y());
    let smoother = LocalLinear::new(sample, &pi_hat, config.kernel)?;
    BandFit::compute(&smoother, sample.n(), sample.r_n(), config, interval, grid_size)
}

/// The complete-case comparator: rows with a missing covariate are dropped
/// and the rest treated as a fully observed sample (π ≡ 1, r = 1, n = Δₙ).
pub fn complete_case_band(
    sample: &ObservedSample,
    config: &FitConfig,
    interval: &EvalInterval,
    grid_size: usize,
    alpha: f64,
) -> Result<BandEstimate> {
    fit_complete_case_band(sample, config, interval, grid_size)?.band(alpha)
}

pub fn fit_complete_case_band(
    sample: &ObservedSample,
    config: &FitConfig,
    interval: &EvalInterval,
    grid_size: usize,
) -> Result<BandFit> {
    let cc = sample.complete_cases();
    let smoother = LocalLinear::new(&cc, &vec![1.0; cc.n()], config.kernel)?;
    BandFit::compute(&smoother, cc.n(), 1.0, config, interval, grid_size)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTestResult {
    /// sup over the grid of |(nh)^{1/2} r_n^{-1/2} (m̂ - m₀)| / d̂^{1/2}.
    pub sup_stat: f64,
    /// a_h (sup_stat - b_h)
    pub t_star: f64,
    pub pvalue: f64,
    /// Smallest confidence level whose band contains the null curve.
    pub min_cover_level: f64,
    /// Grid location of the largest standardized deviation.
    pub argmax: f64,
    pub excluded: Vec<usize>,
}

/// Tests H₀: m = m₀ with the maximal standardized deviation over the grid.
///
/// Deviations at rounding level (relative 1e-12 of the curve scale) count as
/// exact agreement so that a null curve equal to the estimate gives a zero
/// statistic even where d̂ vanishes.
pub fn test_null(band: &BandEstimate, null_values: &[f64]) -> Result<NullTestResult> {
    if null_values.len() != band.grid.len() {
        return Err(Error::Precondition(format!(
            "{} null values for a grid of {}",
            null_values.len(),
            band.grid.len()
        )));
    }
    if null_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("null curve has non-finite values".into()));
    }
    let scale = (band.n as f64 * band.h / band.r_n).sqrt();
    let magnitude = band
        .m_hat
        .iter()
        .chain(null_values)
        .filter(|v| v.is_finite())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tiny = 1e-12 * magnitude;

    let mut excluded = Vec::new();
    let mut sup_stat = 0.0f64;
    let mut argmax = band.grid[0];
    for (i, null) in null_values.iter().enumerate() {
        if !band.is_valid(i) {
            excluded.push(i);
            continue;
        }
        let diff = (band.m_hat[i] - null).abs();
        let z = if diff <= tiny {
            0.0
        } else if band.d_hat[i] > 0.0 {
            scale * diff / band.d_hat[i].sqrt()
        } else {
            f64::INFINITY
        };
        if z > sup_stat {
            sup_stat = z;
            argmax = band.grid[i];
        }
    }
    let t_star = band.a_h * (sup_stat - band.b_h);
    let pvalue = gumbel_sf(t_star).clamp(0.0, 1.0);
    Ok(NullTestResult {
        sup_stat,
        t_star,
        pvalue,
        min_cover_level: gumbel_cdf(t_star).clamp(0.0, 1.0),
        argmax,
        excluded,
    })
}

/// Inverse-probability-weighted least squares line a + b x on the complete cases.
pub fn weighted_linear_null(sample: &ObservedSample, selection: &SelectionModel) -> Result<(f64, f64)> {
    let rows: Vec<(f64, f64, f64)> = sample
        .records()
        .iter()
        .filter_map(|r| r.x.map(|x| (x, r.y, 1.0 / selection.predict_pi(r.y))))
        .collect();
    weighted_line(&rows)
}

/// Weighted least squares line through (x, y, weight) triples.
pub fn weighted_line(rows: &[(f64, f64, f64)]) -> Result<(f64, f64)> {
    let sw: f64 = rows.iter().map(|r| r.2).collect::<KahanSum>().value();
    if !(sw > 0.0) {
        return Err(Error::DegenerateSupport("no positive weight".into()));
    }
    let xbar = rows.iter().map(|r| r.2 * r.0).collect::<KahanSum>().value() / sw;
    let ybar = rows.iter().map(|r| r.2 * r.1).collect::<KahanSum>().value() / sw;
    let sxx = rows.iter().map(|r| r.2 * (r.0 - xbar).powi(2)).collect::<KahanSum>().value();
    let sxy = rows.iter().map(|r| r.2 * (r.0 - xbar) * (r.1 - ybar)).collect::<KahanSum>().value();
    let spread = rows.iter().map(|r| r.2 * r.0 * r.0).collect::<KahanSum>().value();
    if !(sxx > 1e-12 * spread) {
        return Err(Error::DegenerateSupport("fewer than two distinct complete-case covariate values".into()));
    }
    let slope = sxy / sxx;
    Ok((ybar - slope * xbar, slope))
}
