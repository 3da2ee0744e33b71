//! Inverse-probability-weighted local linear estimation, the weighted kernel
//! density pilot, interval trimming and bandwidth rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::linalg::least_squares;
use crate::numeric::{ksum, quantile_sorted, KahanSum};
use crate::sample::ObservedSample;

/// Rule-of-thumb constant for local linear mean estimation with the quartic
/// kernel: (λ(K) / μ₂(K)²)^{1/5} = 35^{1/5}.
pub const ROT_CONSTANT_QUARTIC: f64 = 2.0362;

/// Default exponent of the logarithmic undersmoothing factor.
pub const DEFAULT_RHO: f64 = 0.25;

/// Observed covariate range and the trimmed interval the band lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalInterval {
    pub a_hat: f64,
    pub b_hat: f64,
    pub a0: f64,
    pub b0: f64,
}

impl EvalInterval {
    pub fn from_range(a_hat: f64, b_hat: f64) -> Result<Self> {
        if !(a_hat < b_hat) {
            return Err(Error::DegenerateSupport(format!("range [{a_hat}, {b_hat}] is empty")));
        }
        Ok(Self {
            a_hat,
            b_hat,
            a0: 0.9 * a_hat + 0.1 * b_hat,
            b0: 0.9 * b_hat + 0.1 * a_hat,
        })
    }

    pub fn length(&self) -> f64 {
        self.b0 - self.a0
    }

    /// Equally spaced grid a0 + (b0 - a0) k / (size - 1).
    pub fn grid(&self, size: usize) -> Vec<f64> {
        let last = (size - 1) as f64;
        (0..size)
            .map(|k| {
                if k == size - 1 {
                    self.b0
                } else {
                    self.a0 + (self.b0 - self.a0) * k as f64 / last
                }
            })
            .collect()
    }
}

pub fn observed_range(sample: &ObservedSample) -> Result<EvalInterval> {
    let (lo, hi) = sample
        .complete_pairs()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| (lo.min(x), hi.max(x)));
    if !(lo < hi) {
        return Err(Error::DegenerateSupport(
            "fewer than two distinct complete-case covariate values".into(),
        ));
    }
    EvalInterval::from_range(lo, hi)
}

/// Bandwidths and kernel used by the weighted local linear fit.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub kernel: KernelSpec,
    /// Bandwidth for the mean estimate.
    pub h: f64,
    /// Pilot density bandwidth.
    pub h_f: f64,
    pub rho: f64,
}

impl FitConfig {
    pub fn new(kernel: KernelSpec, h: f64, h_f: f64, rho: f64) -> Result<Self> {
        for b in [h, h_f] {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidBandwidth(b));
            }
        }
        check_rho(rho)?;
        Ok(Self { kernel, h, h_f, rho })
    }

    /// The default recipe: h = h_rot · log^{-ρ} n and Silverman's rule for h_f,
    /// both computed from the complete cases; n is the full sample size.
    pub fn recommended(sample: &ObservedSample, kernel: KernelSpec, rho: f64) -> Result<(Self, BandwidthReport)> {
        check_rho(rho)?;
        let rot = rot_bandwidth(sample)?;
        let h = scb_bandwidth(rot.h_rot, sample.n(), rho)?;
        let h_f = silverman_bandwidth(sample)?;
        let report = BandwidthReport { h_rot: rot.h_rot, rot_fallback: rot.fallback, h, h_f };
        Ok((Self::new(kernel, h, h_f, rho)?, report))
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.2 && rho.is_finite()) {
        return Err(Error::Precondition(format!("rho = {rho} must exceed 1/5")));
    }
    Ok(())
}

/// Audit trail of the bandwidth recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub h_rot: f64,
    pub rot_fallback: Option<RotFallback>,
    pub h: f64,
    pub h_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotFallback {
    /// The pilot polynomial fits the data exactly.
    ZeroResidualVariance,
    /// The pilot polynomial has no curvature.
    ZeroCurvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotBandwidth {
    pub h_rot: f64,
    pub fallback: Option<RotFallback>,
}

const ROT_POLY_DEGREE: usize = 4;

/// Rule-of-thumb plug-in bandwidth from a global quartic pilot fit on the
/// complete cases.
///
/// h_rot = C · [σ̃² (b̂ - â) / Σ m̃''(Xᵢ)²]^{1/5}, with σ̃² = RSS / (Δₙ - 5).
/// Degenerate pilots (zero residual variance or zero curvature) fall back to
/// (b̂ - â) Δₙ^{-1/5}.
pub fn rot_bandwidth(sample: &ObservedSample) -> Result<RotBandwidth> {
    let m = sample.n_complete();
    if m < 10 {
        return Err(Error::Precondition(format!("rule-of-thumb bandwidth needs 10 complete cases, got {m}")));
    }
    let range = observed_range(sample)?;
    let width = range.b_hat - range.a_hat;
    let center = 0.5 * (range.a_hat + range.b_hat);
    let half = 0.5 * width;

    let cols = ROT_POLY_DEGREE + 1;
    let mut design = Vec::with_capacity(m * cols);
    let mut ys = Vec::with_capacity(m);
    let mut ts = Vec::with_capacity(m);
    for (x, y) in sample.complete_pairs() {
        let t = (x - center) / half;
        let mut p = 1.0;
        for _ in 0..cols {
            design.push(p);
            p *= t;
        }
        ys.push(y);
        ts.push(t);
    }
    let coef = least_squares(&design, m, cols, &ys)
        .ok_or_else(|| Error::DegenerateSupport("pilot polynomial design is rank deficient".into()))?;

    let fitted = |t: f64| coef.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let rss = ksum(ts.iter().zip(&ys).map(|(&t, &y)| (y - fitted(t)).powi(2)));
    let sigma2 = rss / (m - cols) as f64;
    // m̃''(x) = p''(t) / half², p''(t) = 2c₂ + 6c₃t + 12c₄t²
    let curvature = ksum(ts.iter().map(|&t| {
        let d2 = (2.0 * coef[2] + 6.0 * coef[3] * t + 12.0 * coef[4] * t * t) / (half * half);
        d2 * d2
    }));

    let y_scale = ksum(ys.iter().map(|y| y * y)) / m as f64;
    let fallback = if sigma2 <= 1e-24 * y_scale.max(f64::MIN_POSITIVE) {
        Some(RotFallback::ZeroResidualVariance)
    } else if curvature * width.powi(4) <= 1e-24 * m as f64 * y_scale.max(f64::MIN_POSITIVE) {
        Some(RotFallback::ZeroCurvature)
    } else {
        None
    };
    let h_rot = match fallback {
        Some(_) => width * (m as f64).powf(-0.2),
        None => ROT_CONSTANT_QUARTIC * (sigma2 * width / curvature).powf(0.2),
    };
    Ok(RotBandwidth { h_rot, fallback })
}

/// h = h_rot · (ln n)^{-ρ}.
pub fn scb_bandwidth(h_rot: f64, n: usize, rho: f64) -> Result<f64> {
    if !(h_rot > 0.0 && h_rot.is_finite()) {
        return Err(Error::InvalidBandwidth(h_rot));
    }
    if n < 3 {
        return Err(Error::Precondition(format!("sample size {n} below 3")));
    }
    check_rho(rho)?;
    Ok(scb_bandwidth_real(h_rot, n as f64, rho))
}

pub(crate) fn scb_bandwidth_real(h_rot: f64, n: f64, rho: f64) -> f64 {
    h_rot * n.ln().powf(-rho)
}

/// Silverman's rule 0.9 · min(sd, IQR/1.34) · Δₙ^{-1/5} on complete-case x.
pub fn silverman_bandwidth(sample: &ObservedSample) -> Result<f64> {
    let mut xs = sample.complete_x();
    let m = xs.len();
    if m < 10 {
        return Err(Error::Precondition(format!("Silverman bandwidth needs 10 complete cases, got {m}")));
    }
    xs.sort_by(f64::total_cmp);
    let mean = ksum(xs.iter().copied()) / m as f64;
    let sd = (ksum(xs.iter().map(|x| (x - mean).powi(2))) / (m - 1) as f64).sqrt();
    let iqr = quantile_sorted(&xs, 0.75) - quantile_sorted(&xs, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::DegenerateSupport("complete-case covariate has zero spread".into()));
    }
    Ok(0.9 * spread * (m as f64).powf(-0.2))
}

/// Complete cases sorted by covariate with their inverse-probability weights,
/// ready for repeated local evaluation.
#[derive(Debug, Clone)]
pub struct LocalLinear {
    kernel: KernelSpec,
    x: Vec<f64>,
    y: Vec<f64>,
    /// 1 / π̂ᵢ
    w: Vec<f64>,
    n: usize,
}

impl LocalLinear {
    /// `pi_hat` is aligned with `sample.records()`; entries for missing rows
    /// are not used.
    pub fn new(sample: &ObservedSample, pi_hat: &[f64], kernel: KernelSpec) -> Result<Self> {
        if pi_hat.len() != sample.n() {
            return Err(Error::Precondition(format!(
                "{} selection probabilities for {} records",
                pi_hat.len(),
                sample.n()
            )));
        }
        let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(sample.n_complete());
        for (r, &p) in sample.records().iter().zip(pi_hat) {
            if let Some(x) = r.x {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Precondition(format!("selection probability {p} outside (0, 1]")));
                }
                rows.push((x, r.y, 1.0 / p));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        Ok(Self {
            kernel,
            x: rows.iter().map(|r| r.0).collect(),
            y: rows.iter().map(|r| r.1).collect(),
            w: rows.iter().map(|r| r.2).collect(),
            n: sample.n(),
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Sorted complete-case covariates.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    fn window(&self, x: f64, h: f64) -> std::ops::Range<usize> {
        let reach = h * self.kernel.support_halfwidth;
        let lo = self.x.partition_point(|&v| v < x - reach);
        let hi = self.x.partition_point(|&v| v <= x + reach);
        lo..hi
    }

    /// m̂(x): intercept of the weighted local linear fit.
    pub fn fit(&self, x: f64, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidBandwidth(h));
        }
        let inv_n = 1.0 / self.n as f64;
        let window = self.window(x, h);
        let weight = |i: usize| self.w[i] * self.kernel.rescaled_unchecked(self.x[i] - x, h) * inv_n;
        let mut s0 = KahanSum::new();
        let mut s1 = KahanSum::new();
        let mut s2 = KahanSum::new();
        let mut t0 = KahanSum::new();
        let mut count = 0;
        for i in window.clone() {
            let wk = weight(i);
            if wk <= 0.0 {
                continue;
            }
            count += 1;
            let d = self.x[i] - x;
            s0.add(wk);
            s1.add(wk * d);
            s2.add(wk * d * d);
            t0.add(wk * self.y[i]);
        }
        let s0 = s0.value();
        if count < 2 || !(s0 > 0.0) {
            return Err(Error::SingularWindow { x, count });
        }
        // Centred second pass: the intercept of the weighted line through
        // (d̄, ȳ), which is far better conditioned than the raw moments.
        let d_bar = s1.value() / s0;
        let y_bar = t0.value() / s0;
        let mut sxx = KahanSum::new();
        let mut sxy = KahanSum::new();
        for i in window {
            let wk = weight(i);
            if wk <= 0.0 {
                continue;
            }
            let dc = self.x[i] - x - d_bar;
            sxx.add(wk * dc * dc);
            sxy.add(wk * dc * (self.y[i] - y_bar));
        }
        // s0·sxx is the determinant s0·s2 − s1² of the normal equations.
        let sxx = sxx.value();
        if !(sxx > 1e-12 * s2.value()) {
            return Err(Error::SingularWindow { x, count });
        }
        Ok(y_bar - sxy.value() / sxx * d_bar)
    }

    /// f̂(x) = n⁻¹ Σ (δᵢ/π̂ᵢ) K_{h_f}(Xᵢ - x).
    pub fn density(&self, x: f64, h_f: f64) -> f64 {
        let total: KahanSum = self
            .window(x, h_f)
            .map(|i| self.w[i] * self.kernel.rescaled_unchecked(self.x[i] - x, h_f))
            .collect();
        total.value() / self.n as f64
    }

    /// Residuals Yᵢ - m̂(Xᵢ) in sorted order for covariates inside `[lo, hi]`.
    /// Entries outside the range, or whose own window is singular, are `None`.
    pub fn residuals(&self, h: f64, lo: f64, hi: f64) -> Vec<Option<f64>> {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(&x, &y)| {
                if x < lo || x > hi {
                    None
                } else {
                    self.fit(x, h).ok().map(|m| y - m)
                }
            })
            .collect()
    }

    /// Σ (δᵢ/π̂ᵢ²) K_h²(Xᵢ - x) ε̂ᵢ² over the window at x, with residuals in
    /// sorted order. Returns `None` if a residual needed inside the window is
    /// unavailable, and the number of in-window cases.
    pub(crate) fn weighted_residual_sum(
        &self,
        x: f64,
        h: f64,
        residuals: &[Option<f64>],
    ) -> (Option<f64>, usize) {
        let mut acc = KahanSum::new();
        let mut count = 0;
        for i in self.window(x, h) {
            let k = self.kernel.rescaled_unchecked(self.x[i] - x, h);
            if k <= 0.0 {
                continue;
            }
            count += 1;
            let Some(e) = residuals[i] else {
                return (None, count);
            };
            acc.add(self.w[i] * self.w[i] * k * k * e * e);
        }
        (Some(acc.value()), count)
    }
}

/// Weighted local linear estimate m̂(x, π̂) at a single point.
pub fn wll_fit(sample: &ObservedSample, pi_hat: &[f64], x: f64, config: &FitConfig) -> Result<f64> {
    LocalLinear::new(sample, pi_hat, config.kernel)?.fit(x, config.h)
}

/// Inverse-probability-weighted kernel density estimate at x.
pub fn density_estimate(
    sample: &ObservedSample,
    pi_hat: &[f64],
    x: f64,
    h_f: f64,
    kernel: &KernelSpec,
) -> Result<f64> {
    if !(h_f > 0.0 && h_f.is_finite()) {
        return Err(Error::InvalidBandwidth(h_f));
    }
    Ok(LocalLinear::new(sample, pi_hat, *kernel)?.density(x, h_f))
}
