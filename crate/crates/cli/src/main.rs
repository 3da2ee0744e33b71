use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ipwband::analysis::{run_analysis, AnalysisArtifact, AnalysisConfig, NullSpec, Stage, StagedError};
use ipwband::band::gumbel_quantile;
use ipwband::io::{artifact_number, band_csv, csv_number, ingest_csv, read_curve_csv};
use ipwband::kernel::quartic_kernel;
use ipwband::regress::DEFAULT_RHO;
use ipwband::selection::{Family, DEFAULT_PI_FLOOR};
use ipwband::sim::{emit_table, run_scenario, TableFormat};
use ipwband::Error;

mod scenarios;

const EXIT_IO: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_FIT: u8 = 3;
const EXIT_BAND: u8 = 4;

#[derive(Parser)]
#[command(name = "ipwband", version, about = "Simultaneous confidence bands for regression with covariates missing at random")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the selection model and report the Hosmer-Lemeshow test.
    Fit(CommonArgs),
    /// Estimate the mean curve and its simultaneous bands.
    Band(CommonArgs),
    /// Test a null curve against the band at the first alpha level.
    Test {
        #[command(flatten)]
        common: CommonArgs,
        /// `linear` for a weighted least-squares line, otherwise a CSV file of `x,value` points.
        #[arg(long)]
        null: String,
    },
    /// Run coverage simulations described by a TOML file.
    Simulate(SimulateArgs),
    /// Print kernel functionals and Gumbel critical values.
    Constants {
        #[arg(long = "alpha", value_delimiter = ',', default_values_t = vec![0.05, 0.01])]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Logit,
    Probit,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Logit => Family::Logit,
            FamilyArg::Probit => Family::Probit,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// CSV file with header `delta,x,y`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Logit)]
    family: FamilyArg,
    /// Error probabilities; bands have level 1 - alpha.
    #[arg(long = "alpha", value_delimiter = ',', default_values_t = vec![0.05])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    #[arg(long, default_value_t = 401)]
    grid_size: usize,
    #[arg(long, default_value_t = DEFAULT_PI_FLOOR)]
    pi_floor: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML file with one `[[scenario]]` table per design.
    config: PathBuf,
    /// Directory for table.csv, table.md and one JSON report per scenario.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the base seed of every scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the replication count of every scenario.
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<StagedError> for Failure {
    fn from(e: StagedError) -> Self {
        let code = match (&e.error, e.stage) {
            (Error::Io(_), _) => EXIT_IO,
            (Error::Schema { .. } | Error::Config(_), _) | (_, Stage::Input) => EXIT_INPUT,
            (_, Stage::Fit) => EXIT_FIT,
            (_, Stage::Band) => EXIT_BAND,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Schema { .. } | Error::Config(_) => EXIT_INPUT,
            _ => EXIT_BAND,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Fit(args) => analyse(&args, NullSpec::None, false),
        Command::Band(args) => analyse(&args, NullSpec::None, true),
        Command::Test { common, null } => {
            let spec = if null == "linear" {
                NullSpec::Linear
            } else {
                NullSpec::Curve(read_curve_csv(&null)?)
            };
            analyse(&common, spec, true)
        }
        Command::Simulate(args) => simulate(&args),
        Command::Constants { alpha, format } => constants(&alpha, format),
    }
}

fn analyse(args: &CommonArgs, null: NullSpec, bands: bool) -> Result<(), Failure> {
    let ingested = ingest_csv(&args.input)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let config = AnalysisConfig {
        family: args.family.into(),
        alpha_levels: args.alpha.clone(),
        rho: args.rho,
        grid_size: args.grid_size,
        pi_floor: args.pi_floor,
        null,
        seed: args.seed,
        ..AnalysisConfig::default()
    };
    let artifact = run_analysis(&ingested.sample, &config, bands)?;
    let text = match args.format {
        Format::Json => to_json(&artifact)?,
        Format::Csv if artifact.null_test.is_some() => summary_csv(&artifact),
        Format::Csv if bands => band_csv(&artifact.bands),
        Format::Csv => summary_csv(&artifact),
    };
    emit(args.output.as_deref(), &text)
}

/// `key,value` rows of the scalar results.
fn summary_csv(a: &AnalysisArtifact) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("n".into(), a.n.to_string()),
        ("n_complete".into(), a.n_complete.to_string()),
        ("family".into(), a.selection.family.to_string()),
        ("alpha0".into(), csv_number(a.selection.alpha[0])),
        ("alpha1".into(), csv_number(a.selection.alpha[1])),
        ("converged".into(), a.selection.converged.to_string()),
        ("hl_statistic".into(), csv_number(a.hosmer_lemeshow.statistic)),
        ("hl_dof".into(), a.hosmer_lemeshow.dof.to_string()),
        ("hl_pvalue".into(), csv_number(a.hosmer_lemeshow.pvalue)),
    ];
    if let Some(c) = &a.constants {
        rows.extend([
            ("h".into(), csv_number(c.h)),
            ("h_f".into(), csv_number(c.h_f)),
            ("a_h".into(), csv_number(c.a_h)),
            ("b_h".into(), csv_number(c.b_h)),
        ]);
    }
    if let Some(t) = &a.null_test {
        rows.push(("null".into(), t.kind.clone()));
        if let (Some(i), Some(s)) = (t.intercept, t.slope) {
            rows.push(("null_intercept".into(), csv_number(i)));
            rows.push(("null_slope".into(), csv_number(s)));
        }
        rows.extend([
            ("sup_stat".into(), csv_number(t.sup_stat)),
            ("t_star".into(), csv_number(t.t_star)),
            ("pvalue".into(), csv_number(t.pvalue)),
            ("min_cover_level".into(), csv_number(t.min_cover_level)),
        ]);
    }
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", args.config.display())))?;
    let mut list = scenarios::parse(&text).map_err(|m| Failure::new(EXIT_INPUT, m))?;
    for s in &mut list {
        if let Some(seed) = args.seed {
            s.base_seed = seed;
        }
        if let Some(r) = args.replications {
            s.replications = r;
        }
        s.validate()?;
    }
    let mut reports = Vec::with_capacity(list.len());
    for (i, s) in list.iter().enumerate() {
        eprintln!("scenario {}/{}: {} {} {:?} n={}", i + 1, list.len(), s.case, s.mechanism, s.params, s.n);
        reports.push(run_scenario(s)?);
    }

    match &args.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_failure(dir))?;
            write(&dir.join("table.csv"), &emit_table(&reports, TableFormat::Csv))?;
            write(&dir.join("table.md"), &emit_table(&reports, TableFormat::Markdown))?;
            for (i, r) in reports.iter().enumerate() {
                write(&dir.join(format!("scenario_{:02}.json", i + 1)), &to_json(r)?)?;
            }
            Ok(())
        }
        None => {
            let text = match args.format {
                Format::Csv => emit_table(&reports, TableFormat::Csv),
                Format::Json => to_json(&reports)?,
            };
            emit(None, &text)
        }
    }
}

#[derive(serde::Serialize)]
struct KernelConstants {
    name: &'static str,
    lambda: f64,
    cee: f64,
    mu2: f64,
    support_halfwidth: f64,
    q_alpha: Vec<(f64, f64)>,
}

fn constants(alpha: &[f64], format: Format) -> Result<(), Failure> {
    let k = quartic_kernel();
    let q = alpha
        .iter()
        .map(|&a| Ok((a, artifact_number(gumbel_quantile(a)?))))
        .collect::<Result<Vec<_>, Error>>()?;
    let text = match format {
        Format::Json => to_json(&KernelConstants {
            name: k.name,
            lambda: artifact_number(k.lambda),
            cee: artifact_number(k.cee),
            mu2: artifact_number(k.mu2),
            support_halfwidth: k.support_halfwidth,
            q_alpha: q,
        })?,
        Format::Csv => {
            let mut out = format!(
                "key,value\nkernel,{}\nlambda,{}\ncee,{}\nmu2,{}\n",
                k.name,
                artifact_number(k.lambda),
                artifact_number(k.cee),
                artifact_number(k.mu2)
            );
            for (a, v) in q {
                out.push_str(&format!("q_{a},{v}\n"));
            }
            out
        }
    };
    emit(None, &text)
}

fn to_json<T: serde::Serialize + ?Sized>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure::new(EXIT_IO, e.to_string()))
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(io_failure(path))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write(p, text),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::new(EXIT_IO, e.to_string())),
                _ => Ok(()),
            }
        }
    }
}
