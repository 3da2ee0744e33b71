use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate, Scenario};
use crate::band::{fit_band, fit_complete_case_band};
use crate::error::{Error, Result};
use crate::kernel::quartic_kernel;
use crate::numeric::KahanSum;
use crate::regress::{observed_range, FitConfig};
use crate::selection::fit_selection;

/// Largest tolerated fraction of failed replications.
pub const MAX_FAILED_REPLICATIONS: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Fraction of replications whose band covered m at every grid point.
    pub coverage: f64,
    /// Mean of upper - lower over replications and grid points.
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub alpha: f64,
    pub level: f64,
    pub scb: Summary,
    pub cc: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: Scenario,
    pub levels: Vec<LevelSummary>,
    /// Replications that entered the summaries.
    pub used: usize,
    pub failures: usize,
}

/// Per-level outcome of one replication: (covered, average width) for the
/// weighted band and for the complete-case band.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub scb: Vec<(bool, f64)>,
    pub cc: Vec<(bool, f64)>,
}

/// Generates one data set and builds both bands at every level.
pub fn run_replication(scenario: &Scenario, rep_index: usize) -> Result<RepOutcome> {
    let kernel = quartic_kernel();
    let sample = generate(scenario, rep_index)?;
    let model = fit_selection(scenario.mechanism.working_family(), &sample.y(), &sample.delta())?
        .with_floor(scenario.pi_floor)?;
    let interval = observed_range(&sample)?;
    let (config, _) = FitConfig::recommended(&sample, kernel, scenario.rho)?;
    let fit = fit_band(&sample, &model, &config, &interval, scenario.grid_size)?;

    let cc_sample = sample.complete_cases();
    let (cc_config, _) = FitConfig::recommended(&cc_sample, kernel, scenario.rho)?;
    let cc_fit = fit_complete_case_band(&sample, &cc_config, &interval, scenario.grid_size)?;

    let truth = |x: f64| scenario.case.mean(x);
    let mut out = RepOutcome { scb: Vec::new(), cc: Vec::new() };
    for &alpha in &scenario.alpha_levels {
        let b = fit.band(alpha)?;
        out.scb.push((b.covers(truth), b.average_width()));
        let c = cc_fit.band(alpha)?;
        out.cc.push((c.covers(truth), c.average_width()));
    }
    Ok(out)
}

/// Runs every replication (in parallel) and aggregates in replication order.
pub fn run_scenario(scenario: &Scenario) -> Result<CoverageReport> {
    scenario.validate()?;
    let outcomes: Vec<Result<RepOutcome>> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| run_replication(scenario, r))
        .collect();
    let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failures = outcomes.len() - ok.len();
    if failures as f64 > MAX_FAILED_REPLICATIONS * scenario.replications as f64 || ok.is_empty() {
        return Err(Error::ScenarioFailed { failed: failures, total: scenario.replications });
    }

    let summarize = |pick: &dyn Fn(&RepOutcome) -> (bool, f64)| {
        let covered = ok.iter().filter(|o| pick(o).0).count();
        let width: KahanSum = ok.iter().map(|o| pick(o).1).collect();
        Summary { coverage: covered as f64 / ok.len() as f64, width: width.value() / ok.len() as f64 }
    };
    let levels = scenario
        .alpha_levels
        .iter()
        .enumerate()
        .map(|(j, &alpha)| LevelSummary {
            alpha,
            level: 1.0 - alpha,
            scb: summarize(&|o| o.scb[j]),
            cc: summarize(&|o| o.cc[j]),
        })
        .collect();
    Ok(CoverageReport { scenario: scenario.clone(), levels, used: ok.len(), failures })
}
