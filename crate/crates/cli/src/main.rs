//! `normlab`: sharp L^p constants for homogeneous product kernels.

mod render;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use normlab_core::haar::{build_h_with, h_l1_norm, invariance_suite};
use normlab_core::norm_lab::{
    extremal_ladder, power_method_lower_bound, random_upper_bound_check, LogGrid,
};
use normlab_core::sharp_constant::{
    audit_hilbert, mc_constant_with, product_constant_with, MC_HALF_WIDTH, ROUTE_TOL,
};
use normlab_core::{
    Convention, Error, FactorKernel, LebesgueExponent, Method, ProductKernel, QuadratureSpec,
};

use render::{Format, Rendered};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "normlab",
    version,
    about = "Sharp L^p operator norms of homogeneous product kernels"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the sharp constant by every available route.
    Constant(ConstantArgs),
    /// Empirical checks of sharpness and of the bound itself.
    #[command(subcommand)]
    Verify(Verify),
    /// Compare published closed forms with the quadrature oracle.
    #[command(subcommand)]
    Audit(Audit),
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Rayleigh quotients of the near-extremal family along an ε ladder.
    Extremal(ExtremalArgs),
    /// Rayleigh quotients of seeded random nonnegative functions.
    UpperBound(UpperBoundArgs),
    /// Scaling and inversion invariance of the Haar measure.
    Haar(HaarArgs),
}

#[derive(Subcommand, Debug)]
enum Audit {
    /// Printed versus derived Hilbert constant.
    Hilbert(AuditArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KernelKind {
    Hilbert,
    Hardy,
    Custom,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    De,
    Gl,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ConventionArg {
    Operator,
    Adjoint,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// Kernel family applied to every factor [default: hilbert].
    #[arg(long, value_enum, conflicts_with = "kernel_file")]
    kernel: Option<KernelKind>,

    /// Profile κ(s, r, c) for `--kernel custom`.
    #[arg(long)]
    profile: Option<String>,

    /// Factor dimensions, comma separated; the list length sets m.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,

    /// Number of factors; must match the length of --n.
    #[arg(long)]
    m: Option<usize>,

    /// JSON kernel specification.
    #[arg(long)]
    kernel_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QuadArgs {
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-14)]
    abs_tol: f64,
    #[arg(long, default_value_t = 12)]
    max_level: usize,
    #[arg(long, default_value_t = 1e12)]
    divergence_bound: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::De)]
    method: MethodArg,
}

#[derive(Args, Debug)]
struct ConstantArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Lebesgue exponent, 1 < p < ∞.
    #[arg(long)]
    p: f64,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long, value_enum, default_value_t = ConventionArg::Operator)]
    convention: ConventionArg,
    /// Add the Monte Carlo route.
    #[arg(long)]
    mc: bool,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExtremalArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// ε values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.2,0.1,0.05")]
    eps: Vec<f64>,
    /// Log-grid spacing; the width is chosen to cover the smallest ε.
    #[arg(long, default_value_t = 0.015)]
    spacing: f64,
    /// Also run this many power-method iterations on the default grid.
    #[arg(long, default_value_t = 0)]
    power_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args, Debug)]
struct UpperBoundArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid half-width in log coordinates.
    #[arg(long, default_value_t = 30.0)]
    half_width: f64,
    /// Points per axis; defaults to 4001 for m = 1 and 401 otherwise.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args, Debug)]
struct HaarArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[command(flatten)]
    quad: QuadArgs,
}

impl QuadArgs {
    fn spec(&self) -> Result<QuadratureSpec, Error> {
        let spec = QuadratureSpec {
            method: match self.method {
                MethodArg::De => Method::DoubleExponential,
                MethodArg::Gl => Method::GaussLegendre,
            },
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_level: self.max_level,
            divergence_bound: self.divergence_bound,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn resolve_dims(n: &[usize], m: Option<usize>) -> Result<Vec<usize>, Error> {
    let dims = if n.is_empty() {
        vec![1; m.unwrap_or(1)]
    } else {
        n.to_vec()
    };
    if let Some(m) = m {
        if m != dims.len() {
            return Err(Error::Usage(format!(
                "--m {m} does not match the {} dimensions given by --n",
                dims.len()
            )));
        }
    }
    if dims.is_empty() {
        return Err(Error::Usage("at least one factor is required".into()));
    }
    Ok(dims)
}

impl KernelArgs {
    fn build(&self) -> Result<ProductKernel, Error> {
        if let Some(path) = &self.kernel_file {
            if self.profile.is_some() || !self.n.is_empty() || self.m.is_some() {
                return Err(Error::Usage(
                    "--kernel-file cannot be combined with --profile, --n or --m".into(),
                ));
            }
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
            return ProductKernel::from_json(&text);
        }
        let kind = self.kernel.unwrap_or(KernelKind::Hilbert);
        if kind != KernelKind::Custom && self.profile.is_some() {
            return Err(Error::Usage(
                "--profile is only valid with --kernel custom".into(),
            ));
        }
        let dims = resolve_dims(&self.n, self.m)?;
        match kind {
            KernelKind::Hilbert => ProductKernel::hilbert(&dims),
            KernelKind::Hardy => ProductKernel::hardy(&dims),
            KernelKind::Custom => {
                let text = self
                    .profile
                    .as_deref()
                    .ok_or_else(|| Error::Usage("--kernel custom requires --profile".into()))?;
                let factors = dims
                    .iter()
                    .map(|&n| FactorKernel::custom(n, text))
                    .collect::<Result<Vec<_>, _>>()?;
                ProductKernel::new(factors)
            }
        }
    }
}

fn convention(c: ConventionArg) -> Convention {
    match c {
        ConventionArg::Operator => Convention::Operator,
        ConventionArg::Adjoint => Convention::Adjoint,
    }
}

fn run_constant(a: &ConstantArgs) -> Result<Rendered, Error> {
    let p = LebesgueExponent::new(a.p)?;
    let spec = a.quad.spec()?;
    let kernel = a.kernel.build()?;
    let conv = convention(a.convention);
    let mut report = product_constant_with(&kernel, p, conv, &spec)?;

    let h = build_h_with(&kernel, p, conv, spec)?;
    let haar = h_l1_norm(&h, &spec)?;
    report.haar_l1 = Some(haar.value);
    report.haar_l1_err_est = Some(haar.err_est);
    report.push_check("haar", haar.value, haar.err_est, ROUTE_TOL);

    if a.mc {
        let mut estimate = 1.0;
        let mut rel_var = 0.0;
        for (i, k) in kernel.factors().iter().enumerate() {
            let mut e = vec![0.0; k.n];
            e[0] = 1.0;
            let est = mc_constant_with(
                k,
                p,
                conv,
                &e,
                a.seed.wrapping_add(i as u64),
                a.samples,
                MC_HALF_WIDTH,
            )?;
            estimate *= est.estimate;
            if est.estimate != 0.0 {
                rel_var += (est.std_err / est.estimate).powi(2);
            }
        }
        let std_err = estimate.abs() * rel_var.sqrt();
        let c = report.product_constant;
        // three standard errors, expressed relative to C
        let tol = if c != 0.0 {
            3.0 * std_err / c.abs()
        } else {
            3.0 * std_err
        };
        report.push_check("monte_carlo", estimate, std_err, tol);
    }
    let pass = report.all_pass();
    Ok(Rendered::constant(report, pass))
}

fn run_extremal(a: &ExtremalArgs) -> Result<Rendered, Error> {
    let p = LebesgueExponent::new(a.p)?;
    let spec = a.quad.spec()?;
    let kernel = a.kernel.build()?;
    let ladder = extremal_ladder(&kernel, p, &a.eps, a.spacing, &spec)?;
    let power = if a.power_iters > 0 {
        Some(power_method_lower_bound(
            &kernel,
            p,
            &LogGrid::default(),
            a.power_iters,
            a.seed,
        )?)
    } else {
        None
    };
    Ok(Rendered::extremal(ladder, power))
}

fn run_upper_bound(a: &UpperBoundArgs) -> Result<Rendered, Error> {
    let p = LebesgueExponent::new(a.p)?;
    let kernel = a.kernel.build()?;
    let points = a.points.unwrap_or(if kernel.m() == 1 { 4001 } else { 401 });
    let grid = LogGrid::new(a.half_width, points)?;
    Ok(Rendered::upper_bound(random_upper_bound_check(
        &kernel, p, &grid, a.seed, a.count,
    )?))
}

fn run_audit(a: &AuditArgs) -> Result<Rendered, Error> {
    let p = LebesgueExponent::new(a.p)?;
    let spec = a.quad.spec()?;
    let dims = resolve_dims(&a.n, a.m)?;
    Ok(Rendered::audit(audit_hilbert(&dims, p, &spec)?))
}

fn dispatch(cli: &Cli) -> Result<Rendered, Error> {
    match &cli.command {
        Command::Constant(a) => run_constant(a),
        Command::Verify(Verify::Extremal(a)) => run_extremal(a),
        Command::Verify(Verify::UpperBound(a)) => run_upper_bound(a),
        Command::Verify(Verify::Haar(a)) => Ok(Rendered::haar(invariance_suite(a.seed, a.count)?)),
        Command::Audit(Audit::Hilbert(a)) => run_audit(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Usage(_) | Error::Parse(_) => EXIT_USAGE,
        Error::Range(_) | Error::Evaluation(_) | Error::DivergenceSuspected(_) => EXIT_NUMERIC,
    }
}

fn report_error(json: bool, kind: &str, message: &str, code: u8) -> ExitCode {
    if json {
        let v = json!({ "error": { "kind": kind, "message": message }, "exit_code": code });
        println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
    } else {
        eprintln!("normlab: {message}");
    }
    ExitCode::from(code)
}

/// Sniffs `--format json` from raw arguments so parse failures can honour it.
fn wants_json(args: &[String]) -> bool {
    args.windows(2)
        .any(|w| w[0] == "--format" && w[1] == "json")
        || args.iter().any(|a| a == "--format=json")
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("NORMLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::Usage(format!(
            "NORMLAB_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Usage(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let json = wants_json(&args);
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json => {
            let msg = e.render().to_string();
            return report_error(true, "usage", msg.trim(), EXIT_USAGE);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = configure_threads() {
        return report_error(json, e.kind(), &e.to_string(), exit_code(&e));
    }
    let rendered = match dispatch(&cli) {
        Ok(r) => r,
        Err(e) => return report_error(json, e.kind(), &e.to_string(), exit_code(&e)),
    };
    let text = match rendered.render(cli.format) {
        Ok(t) => t,
        Err(e) => return report_error(json, e.kind(), &e.to_string(), exit_code(&e)),
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                let msg = format!("cannot write {}: {e}", path.display());
                return report_error(json, "usage", &msg, EXIT_USAGE);
            }
        }
        None => print!("{text}"),
    }
    if rendered.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}
