//! `corrsamp`: sample, evaluate, validate and benchmark random correlation
//! matrices.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or parameter error,
//! 3 I/O error.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrsamp::bench::{run_benchmark, BenchConfig, BenchReport};
use corrsamp::densities::{lkj_log_density, riw_log_density, rw_log_density};
use corrsamp::io::{read_matrices_csv, write_batch, write_json, Format};
use corrsamp::rng::DEFAULT_SEED;
use corrsamp::samplers::{sample_batch_par, Method};
use corrsamp::special::{eta_to_dof, RwParams};
use corrsamp::validation::{
    constants_suite, jacobians_suite, marginals_suite, theorem_suite, Perturbation, TheoremSuiteConfig,
    ValidationReport,
};
use corrsamp::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "corrsamp",
    version,
    about = "Random correlation matrices: RW, RIW and LKJ (onion)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw correlation matrices and write them as CSV or JSON.
    Sample(SampleArgs),
    /// Log density of each matrix in a CSV file.
    Density(DensityArgs),
    /// Run a validation suite; exits 1 if any check fails.
    Validate(ValidateArgs),
    /// Time the samplers against each other.
    Bench(BenchArgs),
}

#[derive(Args)]
#[group(id = "shape", required = true, multiple = false)]
struct ShapeArgs {
    /// Degrees of freedom m (> T − 1).
    #[arg(short = 'm', long, group = "shape")]
    dof: Option<f64>,
    /// LKJ shape eta (> 0); equivalent to m = 2·eta + T − 1.
    #[arg(long, group = "shape")]
    eta: Option<f64>,
}

impl ShapeArgs {
    fn params(&self, dim: usize) -> corrsamp::Result<RwParams> {
        match (self.dof, self.eta) {
            (Some(m), None) => RwParams::new(dim, m),
            (None, Some(eta)) => RwParams::new(dim, eta_to_dof(dim, eta)?),
            _ => unreachable!("clap enforces exactly one of --dof/--eta"),
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Rw)]
    method: MethodArg,
    /// Matrix dimension T.
    #[arg(short = 'T', long)]
    dim: usize,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Number of matrices.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct DensityArgs {
    /// CSV file of matrices (`-` for standard input).
    input: PathBuf,
    /// Law to evaluate; `onion` evaluates the LKJ density.
    #[arg(long, value_enum, default_value_t = MethodArg::Rw)]
    method: MethodArg,
    /// Expected dimension; inferred from the header if omitted.
    #[arg(short = 'T', long)]
    dim: Option<usize>,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Also print |ln RW − ln LKJ| per row.
    #[arg(long)]
    check_theorem: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Constants,
    Marginals,
    Theorem,
    Jacobians,
    All,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
    /// Offset added to the LKJ log constant inside the theorem suite.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb_constant: f64,
    /// Shift added to eta in the theorem suite's onion sampler.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    perturb_eta: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 40, 80])]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Comma-separated methods; all three if omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    method: Vec<MethodArg>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// Degrees of freedom are T plus this offset.
    #[arg(long, default_value_t = 1.0)]
    dof_offset: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; a text table if omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    Rw,
    Riw,
    #[value(alias = "lkj")]
    Onion,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rw => Method::Rw,
            MethodArg::Riw => Method::Riw,
            MethodArg::Onion => Method::Onion,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn with_path(path: Option<&Path>, e: Error) -> Failure {
    match (path, &e) {
        (Some(p), Error::Io(msg)) => io_failure(p, msg),
        _ => e.into(),
    }
}

fn cmd_sample(a: SampleArgs) -> Result<(), Failure> {
    let params = a.shape.params(a.dim)?;
    let batch = sample_batch_par(a.method.into(), params, a.n, a.seed)?;
    let out = open_output(a.out.as_deref())?;
    write_batch(out, &batch, a.format.into()).map_err(|e| with_path(a.out.as_deref(), e))
}

fn cmd_density(a: DensityArgs) -> Result<(), Failure> {
    let matrices = if a.input.as_os_str() == "-" {
        read_matrices_csv(io::stdin().lock(), a.dim)?
    } else {
        let f = File::open(&a.input).map_err(|e| io_failure(&a.input, e))?;
        read_matrices_csv(f, a.dim).map_err(|e| with_path(Some(&a.input), e))?
    };
    let dim = match (a.dim, matrices.first()) {
        (Some(d), _) => d,
        (None, Some(p)) => p.dim(),
        (None, None) => return Ok(()),
    };
    let params = a.shape.params(dim)?;
    let eta = params.to_lkj().eta;
    let method: Method = a.method.into();
    let mut out = open_output(a.out.as_deref())?;
    let mut text = String::from("sample_id,log_density");
    if a.check_theorem {
        text.push_str(",theorem_gap");
    }
    text.push('\n');
    for (id, p) in matrices.iter().enumerate() {
        let value = match method {
            Method::Rw => rw_log_density(p, params.m)?.value,
            Method::Onion => lkj_log_density(p, eta)?.value,
            Method::Riw => riw_log_density(p, params.m)?.value,
        };
        text.push_str(&format!("{id},{value:?}"));
        if a.check_theorem {
            let gap = rw_log_density(p, params.m)?.value - lkj_log_density(p, eta)?.value;
            text.push_str(&format!(",{:?}", gap.abs()));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| io_failure(a.out.as_deref().unwrap_or(Path::new("<stdout>")), e))
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let perturbation = Perturbation {
        log_constant_offset: a.perturb_constant,
        onion_eta_shift: a.perturb_eta,
    };
    let theorem = || {
        theorem_suite(&TheoremSuiteConfig {
            seed: a.seed,
            perturbation,
            ..TheoremSuiteConfig::default()
        })
    };
    let report = match a.suite {
        Suite::Constants => constants_suite()?,
        Suite::Marginals => marginals_suite(a.seed)?,
        Suite::Theorem => theorem()?,
        Suite::Jacobians => jacobians_suite(a.seed)?,
        Suite::All => ValidationReport::merge(
            "all",
            a.seed,
            vec![
                constants_suite()?,
                marginals_suite(a.seed)?,
                theorem()?,
                jacobians_suite(a.seed)?,
            ],
        ),
    };
    if let Some(p) = &a.out {
        let f = File::create(p).map_err(|e| io_failure(p, e))?;
        write_json(f, &report).map_err(|e| with_path(Some(p), e))?;
    }
    match a.format {
        Some(ReportFormat::Json) => write_json(io::stdout().lock(), &report)?,
        _ => print!("{}", report.to_text()),
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("{} check(s) failed", report.failures().count()),
        })
    }
}

fn bench_csv(r: &BenchReport) -> String {
    let mut s = String::from("dim,method,n,wall_seconds,seconds_per_matrix,ratio_to_onion\n");
    for row in &r.rows {
        s.push_str(&format!(
            "{},{},{},{:?},{:?},{}\n",
            row.dim,
            row.method,
            row.n,
            row.wall_seconds,
            row.seconds_per_matrix,
            row.ratio_to_onion.map_or(String::new(), |x| format!("{x:?}"))
        ));
    }
    s
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let methods = if a.method.is_empty() {
        Method::ALL.to_vec()
    } else {
        a.method.iter().map(|&m| m.into()).collect()
    };
    let report = run_benchmark(&BenchConfig {
        dims: a.dims,
        n: a.n,
        methods,
        seed: a.seed,
        repetitions: a.repetitions,
        dof_offset: a.dof_offset,
    })?;
    let mut out = open_output(a.out.as_deref())?;
    let result = match a.format {
        Some(FormatArg::Json) => return write_json(out, &report).map_err(|e| with_path(a.out.as_deref(), e)),
        Some(FormatArg::Csv) => out.write_all(bench_csv(&report).as_bytes()),
        None => out.write_all(report.to_text().as_bytes()),
    };
    result
        .and_then(|_| out.flush())
        .map_err(|e| io_failure(a.out.as_deref().unwrap_or(Path::new("<stdout>")), e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Density(a) => cmd_density(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("corrsamp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
