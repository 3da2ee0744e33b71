//! End-to-end analysis of an observed sample: selection model, goodness of
//! fit, bandwidths, bands at each level and an optional null-curve test.

use serde::{Deserialize, Serialize};

use crate::band::{fit_band, test_null, weighted_linear_null, DEFAULT_GRID_SIZE};
use crate::error::{Error, Result};
use crate::io::{artifact_number, interpolate, BandArtifact, NullArtifact, SCHEMA_VERSION};
use crate::kernel::quartic_kernel;
use crate::regress::{observed_range, BandwidthReport, EvalInterval, FitConfig, DEFAULT_RHO};
use crate::sample::ObservedSample;
use crate::selection::{fit_selection, hosmer_lemeshow, Family, HosmerLemeshow, DEFAULT_PI_FLOOR};

pub const DEFAULT_HL_GROUPS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum NullSpec {
    None,
    /// Weighted least squares line.
    Linear,
    /// Sorted (x, value) points, linearly interpolated onto the grid.
    Curve(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub family: Family,
    pub alpha_levels: Vec<f64>,
    pub rho: f64,
    pub grid_size: usize,
    pub pi_floor: f64,
    pub hl_groups: usize,
    pub null: NullSpec,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            family: Family::Logit,
            alpha_levels: vec![0.05],
            rho: DEFAULT_RHO,
            grid_size: DEFAULT_GRID_SIZE,
            pi_floor: DEFAULT_PI_FLOOR,
            hl_groups: DEFAULT_HL_GROUPS,
            null: NullSpec::None,
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_levels.is_empty() || self.alpha_levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("alpha levels must be a nonempty subset of (0, 1)".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Config(format!("grid size {} below 2", self.grid_size)));
        }
        if !(self.rho > 0.2) {
            return Err(Error::Config(format!("rho = {} must exceed 1/5", self.rho)));
        }
        if !(self.pi_floor > 0.0 && self.pi_floor < 1.0) {
            return Err(Error::Config(format!("pi floor {} outside (0, 1)", self.pi_floor)));
        }
        Ok(())
    }
}

/// Pipeline stage an error came from; drives CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Fit,
    Band,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedError {
    pub stage: Stage,
    pub error: Error,
}

impl std::fmt::Display for StagedError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let stage = match self.stage {
            Stage::Input => "input",
            Stage::Fit => "selection fit",
            Stage::Band => "band",
        };
        write!(f, "{stage}: {}", self.error)
    }
}

impl std::error::Error for StagedError {}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StagedError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StagedError> {
        self.map_err(|error| StagedError { stage, error })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionArtifact {
    pub family: Family,
    pub alpha: [f64; 2],
    pub floor: f64,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelArtifact {
    pub name: String,
    pub lambda: f64,
    pub cee: f64,
    pub mu2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsArtifact {
    pub h: f64,
    pub h_f: f64,
    pub h_rot: f64,
    pub rot_fallback: Option<crate::regress::RotFallback>,
    pub rho: f64,
    pub r_n: f64,
    pub a_h: f64,
    pub b_h: f64,
}

/// Everything written by an analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisArtifact {
    pub schema_version: u32,
    pub seed: u64,
    pub n: usize,
    pub n_complete: usize,
    pub selection: SelectionArtifact,
    pub hosmer_lemeshow: HosmerLemeshow,
    pub kernel: KernelArtifact,
    pub interval: EvalInterval,
    pub constants: Option<ConstantsArtifact>,
    pub bands: Vec<BandArtifact>,
    pub null_test: Option<NullArtifact>,
}

/// Selection model and Hosmer–Lemeshow test only.
pub fn run_fit(
    sample: &ObservedSample,
    config: &AnalysisConfig,
) -> std::result::Result<(crate::selection::SelectionModel, HosmerLemeshow), StagedError> {
    config.validate().at(Stage::Input)?;
    let y = sample.y();
    let delta = sample.delta();
    let model = fit_selection(config.family, &y, &delta)
        .and_then(|m| m.with_floor(config.pi_floor))
        .at(Stage::Fit)?;
    let hl = hosmer_lemeshow(&model, &y, &delta, config.hl_groups).at(Stage::Fit)?;
    Ok((model, hl))
}

/// The full pipeline. With `bands = false` only the selection stage runs.
pub fn run_analysis(
    sample: &ObservedSample,
    config: &AnalysisConfig,
    bands: bool,
) -> std::result::Result<AnalysisArtifact, StagedError> {
    let (model, hl) = run_fit(sample, config)?;
    let kernel = quartic_kernel();
    let interval = observed_range(sample).at(Stage::Band)?;
    let mut artifact = AnalysisArtifact {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        n: sample.n(),
        n_complete: sample.n_complete(),
        selection: SelectionArtifact {
            family: model.family,
            alpha: model.alpha.map(artifact_number),
            floor: model.floor,
            converged: model.converged,
            iterations: model.iterations,
            loglik: artifact_number(model.loglik),
        },
        hosmer_lemeshow: HosmerLemeshow {
            statistic: artifact_number(hl.statistic),
            pvalue: artifact_number(hl.pvalue),
            ..hl
        },
        kernel: KernelArtifact {
            name: kernel.name.to_string(),
            lambda: artifact_number(kernel.lambda),
            cee: artifact_number(kernel.cee),
            mu2: artifact_number(kernel.mu2),
        },
        interval: EvalInterval {
            a_hat: artifact_number(interval.a_hat),
            b_hat: artifact_number(interval.b_hat),
            a0: artifact_number(interval.a0),
            b0: artifact_number(interval.b0),
        },
        constants: None,
        bands: Vec::new(),
        null_test: None,
    };
    if !bands {
        return Ok(artifact);
    }

    let (fit_config, bw): (FitConfig, BandwidthReport) =
        FitConfig::recommended(sample, kernel, config.rho).at(Stage::Band)?;
    let fit = fit_band(sample, &model, &fit_config, &interval, config.grid_size).at(Stage::Band)?;
    artifact.constants = Some(ConstantsArtifact {
        h: artifact_number(bw.h),
        h_f: artifact_number(bw.h_f),
        h_rot: artifact_number(bw.h_rot),
        rot_fallback: bw.rot_fallback,
        rho: config.rho,
        r_n: artifact_number(fit.r_n),
        a_h: artifact_number(fit.constants.a_h),
        b_h: artifact_number(fit.constants.b_h),
    });
    let mut estimates = Vec::new();
    for &alpha in &config.alpha_levels {
        let b = fit.band(alpha).at(Stage::Band)?;
        artifact.bands.push(BandArtifact::from_band(&b));
        estimates.push(b);
    }

    let band = &estimates[0];
    artifact.null_test = match &config.null {
        NullSpec::None => None,
        NullSpec::Linear => {
            let (a, b) = weighted_linear_null(sample, &model).at(Stage::Band)?;
            let null: Vec<f64> = band.grid.iter().map(|x| a + b * x).collect();
            let t = test_null(band, &null).at(Stage::Band)?;
            Some(NullArtifact::new("linear", Some((a, b)), &t))
        }
        NullSpec::Curve(curve) => {
            let null = band
                .grid
                .iter()
                .map(|&x| interpolate(curve, x))
                .collect::<Result<Vec<f64>>>()
                .at(Stage::Input)?;
            let t = test_null(band, &null).at(Stage::Band)?;
            Some(NullArtifact::new("external", None, &t))
        }
    };
    Ok(artifact)
}
