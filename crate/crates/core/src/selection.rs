//! Parametric selection-probability model π(y, α) fitted by maximum likelihood,
//! plus the Hosmer–Lemeshow goodness-of-fit test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{chi2_sf, ksum, norm_cdf, norm_pdf};

pub const DEFAULT_PI_FLOOR: f64 = 0.01;
pub const MAX_ITERATIONS: usize = 100;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_HALVINGS: usize = 30;
pub const SEPARATION_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logit,
    Probit,
}

impl Family {
    /// Link inverse: probability for linear predictor `eta`.
    pub fn probability(self, eta: f64) -> f64 {
        match self {
            Family::Logit => 1.0 / (1.0 + (-eta).exp()),
            Family::Probit => norm_cdf(eta),
        }
    }

    /// Per-observation log-likelihood, its first and second derivative in eta.
    fn contribution(self, eta: f64, observed: bool) -> (f64, f64, f64) {
        match self {
            Family::Logit => {
                // log p = -log(1 + e^{-eta}), log(1 - p) = -log(1 + e^{eta})
                let p = 1.0 / (1.0 + (-eta).exp());
                let ll = if observed { -softplus(-eta) } else { -softplus(eta) };
                let d1 = if observed { 1.0 - p } else { -p };
                (ll, d1, -p * (1.0 - p))
            }
            Family::Probit => {
                // Mills ratios; sign flips for the unobserved branch.
                let z = if observed { eta } else { -eta };
                let tail = norm_cdf(z);
                let (log_tail, mills) = if tail > 0.0 {
                    (tail.ln(), norm_pdf(z) / tail)
                } else {
                    // z far in the lower tail: log Φ(z) ≈ log φ(z) - log(-z)
                    (-0.5 * z * z - (2.0 * std::f64::consts::PI).sqrt().ln() - (-z).ln(), -z)
                };
                let d1 = mills;
                let d2 = -mills * (z + mills);
                if observed {
                    (log_tail, d1, d2)
                } else {
                    (log_tail, -d1, d2)
                }
            }
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Logit => f.write_str("logit"),
            Family::Probit => f.write_str("probit"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" | "logistic" => Ok(Family::Logit),
            "probit" => Ok(Family::Probit),
            other => Err(Error::Config(format!("unknown selection family `{other}`"))),
        }
    }
}

/// A fitted binary model for P(δ = 1 | Y = y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionModel {
    pub family: Family,
    /// (intercept, slope)
    pub alpha: [f64; 2],
    pub floor: f64,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    /// Log-likelihood after each accepted Newton step, starting value first.
    pub loglik_trace: Vec<f64>,
}

impl SelectionModel {
    /// A model with known coefficients, e.g. the true mechanism in simulations.
    pub fn known(family: Family, alpha: [f64; 2]) -> Self {
        Self {
            family,
            alpha,
            floor: DEFAULT_PI_FLOOR,
            converged: true,
            iterations: 0,
            loglik: f64::NAN,
            loglik_trace: Vec::new(),
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::Precondition(format!("probability floor {floor} outside (0, 1)")));
        }
        self.floor = floor;
        Ok(self)
    }

    /// Fitted probability without the floor.
    pub fn raw_probability(&self, y: f64) -> f64 {
        self.family.probability(self.alpha[0] + self.alpha[1] * y)
    }

    pub fn predict_pi(&self, y: f64) -> f64 {
        self.raw_probability(y).max(self.floor)
    }

    pub fn predict_all(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| self.predict_pi(v)).collect()
    }
}

/// Free-function form of [`SelectionModel::predict_pi`].
pub fn predict_pi(model: &SelectionModel, y: f64) -> f64 {
    model.predict_pi(y)
}

struct Evaluation {
    loglik: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

fn evaluate(family: Family, alpha: [f64; 2], y: &[f64], delta: &[bool]) -> Evaluation {
    let mut ll = Vec::with_capacity(y.len());
    let mut g0 = Vec::with_capacity(y.len());
    let mut g1 = Vec::with_capacity(y.len());
    let mut h00 = Vec::with_capacity(y.len());
    let mut h01 = Vec::with_capacity(y.len());
    let mut h11 = Vec::with_capacity(y.len());
    for (&yi, &di) in y.iter().zip(delta) {
        let (l, d1, d2) = family.contribution(alpha[0] + alpha[1] * yi, di);
        ll.push(l);
        g0.push(d1);
        g1.push(d1 * yi);
        h00.push(d2);
        h01.push(d2 * yi);
        h11.push(d2 * yi * yi);
    }
    let h01 = ksum(h01);
    Evaluation {
        loglik: ksum(ll),
        grad: [ksum(g0), ksum(g1)],
        hess: [[ksum(h00), h01], [h01, ksum(h11)]],
    }
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Log-likelihood of `alpha` on the given data, unclamped.
pub fn log_likelihood(family: Family, alpha: [f64; 2], y: &[f64], delta: &[bool]) -> f64 {
    evaluate(family, alpha, y, delta).loglik
}

/// Maximum-likelihood fit of π(y, α) by Newton iterations with step halving.
pub fn fit_selection(family: Family, y: &[f64], delta: &[bool]) -> Result<SelectionModel> {
    if y.len() != delta.len() {
        return Err(Error::Precondition(format!(
            "y has {} entries but delta has {}",
            y.len(),
            delta.len()
        )));
    }
    if y.len() < 10 {
        return Err(Error::Precondition(format!("need at least 10 observations, got {}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("non-finite response".into()));
    }
    let observed = delta.iter().filter(|&&d| d).count();
    if observed == 0 {
        return Err(Error::DegenerateResponse { missing: "observed (δ = 1)" });
    }
    if observed == delta.len() {
        return Err(Error::DegenerateResponse { missing: "missing (δ = 0)" });
    }

    if separated(y, delta) {
        return Err(Error::Separation { norm: f64::INFINITY, threshold: SEPARATION_THRESHOLD });
    }

    let rate = observed as f64 / y.len() as f64;
    let start = match family {
        Family::Logit => (rate / (1.0 - rate)).ln(),
        Family::Probit => crate::numeric::norm_quantile(rate),
    };
    let mut alpha = [start, 0.0];
    let mut current = evaluate(family, alpha, y, delta);
    let mut trace = vec![current.loglik];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        if norm2(current.grad) <= GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;
        let [[a, b], [_, d]] = current.hess;
        let det = a * d - b * b;
        // Hessian is negative definite for both links; fall back to a
        // gradient step if it is numerically not.
        let step = if det > 0.0 && a < 0.0 {
            [
                -(d * current.grad[0] - b * current.grad[1]) / det,
                -(-b * current.grad[0] + a * current.grad[1]) / det,
            ]
        } else {
            let scale = 1.0 / (1.0 + a.abs().max(d.abs()));
            [current.grad[0] * scale, current.grad[1] * scale]
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = [alpha[0] + t * step[0], alpha[1] + t * step[1]];
            let eval = evaluate(family, candidate, y, delta);
            if eval.loglik.is_finite() && eval.loglik >= current.loglik {
                accepted = Some((candidate, eval));
                break;
            }
            t *= 0.5;
        }
        let Some((candidate, eval)) = accepted else {
            break;
        };
        let norm = norm2(candidate);
        if norm > SEPARATION_THRESHOLD {
            return Err(Error::Separation { norm, threshold: SEPARATION_THRESHOLD });
        }
        let stalled = candidate == alpha;
        alpha = candidate;
        current = eval;
        trace.push(current.loglik);
        if stalled {
            break;
        }
    }
    if !converged && norm2(current.grad) <= GRADIENT_TOLERANCE {
        converged = true;
    }

    Ok(SelectionModel {
        family,
        alpha,
        floor: DEFAULT_PI_FLOOR,
        converged,
        iterations,
        loglik: current.loglik,
        loglik_trace: trace,
    })
}

/// True when the responses of one group all lie on one side of the other
/// group's, so the likelihood has no finite maximiser.
fn separated(y: &[f64], delta: &[bool]) -> bool {
    let range = |want: bool| {
        y.iter()
            .zip(delta)
            .filter(|(_, &d)| d == want)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
    };
    let (lo1, hi1) = range(true);
    let (lo0, hi0) = range(false);
    hi0 <= lo1 || hi1 <= lo0
}

/// Result of the Hosmer–Lemeshow test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HosmerLemeshow {
    pub statistic: f64,
    pub dof: usize,
    pub pvalue: f64,
    /// Number of bins actually used after merging.
    pub bins: usize,
    /// Set when a bin with no variance had to be merged into a neighbour.
    pub collapsed: bool,
}

/// Decile-of-risk goodness-of-fit test of a fitted selection model.
///
/// Bins use the model's fitted probabilities before the floor is applied.
pub fn hosmer_lemeshow(
    model: &SelectionModel,
    y: &[f64],
    delta: &[bool],
    groups: usize,
) -> Result<HosmerLemeshow> {
    if groups < 3 {
        return Err(Error::Precondition(format!("Hosmer-Lemeshow needs at least 3 groups, got {groups}")));
    }
    if y.len() != delta.len() {
        return Err(Error::Precondition("y and delta lengths differ".into()));
    }
    let n = y.len();
    if n < groups {
        return Err(Error::Precondition(format!("{n} observations for {groups} groups")));
    }
    let mut order: Vec<(f64, bool)> =
        y.iter().zip(delta).map(|(&yi, &di)| (model.raw_probability(yi), di)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // (observed, expected, count)
    let mut raw = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * n / groups;
        let hi = (g + 1) * n / groups;
        let slice = &order[lo..hi];
        let obs = slice.iter().filter(|p| p.1).count() as f64;
        let exp = ksum(slice.iter().map(|p| p.0));
        raw.push((obs, exp, slice.len() as f64));
    }

    let informative = |b: &(f64, f64, f64)| {
        let var = b.1 * (1.0 - b.1 / b.2);
        b.2 > 0.0 && var > 1e-12 * b.2
    };
    let mut bins: Vec<(f64, f64, f64)> = Vec::new();
    let mut pending: Option<(f64, f64, f64)> = None;
    let mut collapsed = false;
    for b in raw {
        let merged = match pending.take() {
            Some(p) => {
                collapsed = true;
                (p.0 + b.0, p.1 + b.1, p.2 + b.2)
            }
            None => b,
        };
        if informative(&merged) {
            bins.push(merged);
        } else {
            pending = Some(merged);
        }
    }
    if let Some(p) = pending {
        collapsed = true;
        match bins.last_mut() {
            Some(last) => {
                last.0 += p.0;
                last.1 += p.1;
                last.2 += p.2;
            }
            None => bins.push(p),
        }
    }
    if bins.len() < 3 {
        return Err(Error::Precondition(format!(
            "only {} informative bins remain after merging",
            bins.len()
        )));
    }

    let statistic = ksum(bins.iter().map(|&(o, e, m)| (o - e).powi(2) / (e * (1.0 - e / m))));
    let dof = bins.len() - 2;
    Ok(HosmerLemeshow {
        statistic,
        dof,
        pvalue: chi2_sf(statistic, dof as f64),
        bins: bins.len(),
        collapsed,
    })
}
