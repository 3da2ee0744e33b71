use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::norm_quantile;
use crate::regress::DEFAULT_RHO;
use crate::sample::{ObservedSample, Record};
use crate::selection::{Family, DEFAULT_PI_FLOOR};

/// Upper cap on the selection probability under the truncated mechanism.
pub const TRUNCATION_CAP: f64 = 0.75;

/// Mean and error-scale designs; X ~ U[-1, 1] throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Case4,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Case1, Case::Case2, Case::Case3, Case::Case4];

    pub fn mean(self, x: f64) -> f64 {
        match self {
            Case::Case1 | Case::Case2 => (std::f64::consts::PI * x).sin(),
            Case::Case3 | Case::Case4 => (-1.2 * x.powi(3)).exp(),
        }
    }

    pub fn mean_second_derivative(self, x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        match self {
            Case::Case1 | Case::Case2 => -pi * pi * (pi * x).sin(),
            Case::Case3 | Case::Case4 => {
                // m = e^{g}, g = -1.2x³: m'' = e^{g} (g'' + g'²)
                let g1 = -3.6 * x * x;
                let g2 = -7.2 * x;
                (-1.2 * x.powi(3)).exp() * (g2 + g1 * g1)
            }
        }
    }

    pub fn sigma(self, x: f64) -> f64 {
        match self {
            Case::Case1 | Case::Case3 => 1.0,
            Case::Case2 | Case::Case4 => 2.0 * x.exp() / (x.exp() + 1.0),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Case::Case1 => 1,
            Case::Case2 => 2,
            Case::Case3 => 3,
            Case::Case4 => 4,
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Case {}", self.index())
    }
}

/// True missingness mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Logit,
    Probit,
    /// Logistic probabilities capped at [`TRUNCATION_CAP`].
    TruncatedLogit,
}

impl Mechanism {
    pub fn probability(self, params: [f64; 2], y: f64) -> f64 {
        let eta = params[0] + params[1] * y;
        match self {
            Mechanism::Logit => Family::Logit.probability(eta),
            Mechanism::Probit => Family::Probit.probability(eta),
            Mechanism::TruncatedLogit => Family::Logit.probability(eta).min(TRUNCATION_CAP),
        }
    }

    /// Family of the model fitted in each replication; the truncated
    /// mechanism is deliberately fitted with a plain logistic model.
    pub fn working_family(self) -> Family {
        match self {
            Mechanism::Logit | Mechanism::TruncatedLogit => Family::Logit,
            Mechanism::Probit => Family::Probit,
        }
    }

    /// The true mechanism as a model when it lies in a parametric family.
    pub fn true_family(self) -> Option<Family> {
        match self {
            Mechanism::Logit => Some(Family::Logit),
            Mechanism::Probit => Some(Family::Probit),
            Mechanism::TruncatedLogit => None,
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mechanism::Logit => "logit",
            Mechanism::Probit => "probit",
            Mechanism::TruncatedLogit => "truncated_logit",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(Mechanism::Logit),
            "probit" => Ok(Mechanism::Probit),
            "truncated_logit" => Ok(Mechanism::TruncatedLogit),
            other => Err(Error::Config(format!("unknown mechanism `{other}`"))),
        }
    }
}

fn default_grid() -> usize {
    crate::band::DEFAULT_GRID_SIZE
}
fn default_rho() -> f64 {
    DEFAULT_RHO
}
fn default_floor() -> f64 {
    DEFAULT_PI_FLOOR
}

/// One simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub case: Case,
    pub mechanism: Mechanism,
    /// (α₀, α₁) of the true mechanism.
    pub params: [f64; 2],
    pub n: usize,
    /// Error probabilities α; the bands have level 1 - α.
    pub alpha_levels: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_floor")]
    pub pi_floor: f64,
}

impl Scenario {
    pub fn new(case: Case, mechanism: Mechanism, params: [f64; 2], n: usize) -> Self {
        Self {
            case,
            mechanism,
            params,
            n,
            alpha_levels: vec![0.05, 0.01],
            replications: 1000,
            base_seed: 20_240_601,
            grid_size: default_grid(),
            rho: default_rho(),
            pi_floor: default_floor(),
        }
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    pub fn with_levels(mut self, alpha_levels: Vec<f64>) -> Self {
        self.alpha_levels = alpha_levels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.replications < 1 {
            problems.push("replications must be at least 1".to_string());
        }
        if self.n < 50 {
            problems.push(format!("n = {} is below 50", self.n));
        }
        if self.alpha_levels.is_empty() || self.alpha_levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            problems.push("alpha_levels must be a nonempty subset of (0, 1)".to_string());
        }
        if self.grid_size < 2 {
            problems.push("grid_size must be at least 2".to_string());
        }
        if !(self.rho > 0.2) {
            problems.push("rho must exceed 1/5".to_string());
        }
        if !(self.pi_floor > 0.0 && self.pi_floor < 1.0) {
            problems.push("pi_floor must lie in (0, 1)".to_string());
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            problems.push("params must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn true_pi(&self, y: f64) -> f64 {
        self.mechanism.probability(self.params, y)
    }
}

/// Independent ChaCha stream for one replication: the key comes from the base
/// seed and the stream id is the replication index, so replications never
/// share or overlap random numbers.
pub fn replication_rng(base_seed: u64, rep_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(rep_index);
    rng
}

/// Uniform draw on the open interval (0, 1) with 53 random bits.
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Draws replication `rep_index` of the scenario. Normal errors use the
/// inverse-CDF transform; each observation consumes exactly three uniforms
/// in the order (X, ε, δ).
pub fn generate(scenario: &Scenario, rep_index: usize) -> Result<ObservedSample> {
    Ok(generate_full(scenario, rep_index)?.0)
}

/// Like [`generate`] but also returns the covariates of the missing rows.
pub(crate) fn generate_full(scenario: &Scenario, rep_index: usize) -> Result<(ObservedSample, Vec<f64>)> {
    if rep_index >= scenario.replications {
        return Err(Error::Precondition(format!(
            "replication {rep_index} out of range for {} replications",
            scenario.replications
        )));
    }
    let mut rng = replication_rng(scenario.base_seed, rep_index as u64);
    let mut records = Vec::with_capacity(scenario.n);
    let mut xs = Vec::with_capacity(scenario.n);
    for _ in 0..scenario.n {
        let x = 2.0 * open_unit(&mut rng) - 1.0;
        let eps = scenario.case.sigma(x) * norm_quantile(open_unit(&mut rng));
        let y = scenario.case.mean(x) + eps;
        let observed = open_unit(&mut rng) < scenario.true_pi(y);
        records.push(if observed { Record::complete(x, y) } else { Record::missing(y) });
        xs.push(x);
    }
    // A sample with no complete case is astronomically unlikely for the
    // designs here; surface it as a precondition failure.
    Ok((ObservedSample::new(records)?, xs))
}
