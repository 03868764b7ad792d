use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mteq::bench::{run_bench, summarize, write_csv, BenchSpec};
use mteq::io::{read_instance, read_tensor, read_vector, write_instance, write_vector};
use mteq::problems::{generate, ProblemId, ProblemInstance};
use mteq::solvers::{solve, Method, SolveConfig, Status};
use mteq::structure::{existence_sufficient, is_z_tensor, mtensor_certificate, Verdict};
use mteq::tensor::majorization;
use mteq::{DenseTensor, Error};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 7;

#[derive(Parser)]
#[command(
    name = "mteq",
    version,
    about = "Monotone iterative solvers for M-tensor equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated problem or fixture to a directory.
    Gen {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Output directory for tensor.json, rhs.json and meta.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve one system and report the outcome.
    Solve(SolveArgs),
    /// Report Z/M-tensor structure and the existence test.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        /// Also run the power-type spectral radius estimate.
        #[arg(long)]
        power: bool,
    },
    /// Run a seeded sweep over sizes, step lengths and methods.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Problem id: 1, 2, 3, 4, ex11, ex21 or ex22.
    #[arg(long)]
    problem: ProblemId,
    /// Dimension (ignored for fixtures).
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InputArgs {
    /// Problem id to generate in memory instead of reading files.
    #[arg(long, conflicts_with_all = ["tensor", "dir"])]
    problem: Option<ProblemId>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tensor file; requires --rhs.
    #[arg(long, requires = "rhs", conflicts_with = "dir")]
    tensor: Option<PathBuf>,
    #[arg(long)]
    rhs: Option<PathBuf>,
    /// Instance directory written by `gen`.
    #[arg(long)]
    dir: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "smeqm")]
    method: Method,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 3000)]
    max_iter: usize,
    /// Initial point: `zero`, a comma-separated list, or a vector file.
    #[arg(long, default_value = "zero")]
    x0: String,
    /// Iterate on the original system instead of the max-entry scaled one.
    #[arg(long)]
    no_scale: bool,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the final iterate as a JSON array.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    problem: ProblemId,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    /// Comma-separated step lengths.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    alpha: Vec<f64>,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "smeqm")]
    method: Vec<Method>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 3000)]
    max_iter: usize,
    /// Write every run as a CSV row.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { problem, out } => cmd_gen(&problem, &out),
        Command::Solve(args) => cmd_solve(&args),
        Command::Analyze { input, power } => cmd_analyze(&input, power),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::DimensionMismatch { .. } => {
                    ExitCode::from(EXIT_USAGE)
                }
                _ => ExitCode::from(EXIT_IO),
            }
        }
    }
}

fn exit_code(status: Status) -> ExitCode {
    ExitCode::from(match status {
        Status::Converged => 0,
        Status::MaxIterReached => 3,
        Status::InfeasibleStart => 4,
        Status::NegativePowerRHS => 5,
        Status::SingularMatrix => 6,
    })
}

fn cmd_gen(args: &ProblemArgs, out: &Path) -> mteq::Result<ExitCode> {
    let inst = generate(args.problem, args.n, args.seed)?;
    write_instance(out, &inst)?;
    println!(
        "wrote problem {} (order {}, n = {}) to {}",
        inst.meta.problem,
        inst.tensor.order(),
        inst.tensor.dim(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_input(input: &InputArgs) -> mteq::Result<(DenseTensor, Vec<f64>, Option<ProblemInstance>)> {
    if let Some(problem) = input.problem {
        let inst = generate(problem, input.n, input.seed)?;
        return Ok((inst.tensor.clone(), inst.rhs.clone(), Some(inst)));
    }
    if let Some(dir) = &input.dir {
        let inst = read_instance(dir)?;
        return Ok((inst.tensor.clone(), inst.rhs.clone(), Some(inst)));
    }
    match (&input.tensor, &input.rhs) {
        (Some(t), Some(b)) => {
            let tensor = read_tensor(t)?;
            let rhs = read_vector(b)?;
            if rhs.len() != tensor.dim() {
                return Err(Error::DimensionMismatch {
                    expected: tensor.dim(),
                    found: rhs.len(),
                });
            }
            Ok((tensor, rhs, None))
        }
        _ => Err(Error::InvalidConfig(
            "give --problem, --dir, or --tensor with --rhs".into(),
        )),
    }
}

fn parse_x0(spec: &str, n: usize) -> mteq::Result<Vec<f64>> {
    let x0 = if spec == "zero" {
        vec![0.0; n]
    } else if Path::new(spec).is_file() {
        read_vector(Path::new(spec))?
    } else {
        mteq::io::vector_from_str(spec)?
    };
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    Ok(x0)
}

fn fmt_vec(v: &[f64]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = v.iter().take(SHOWN).map(|x| format!("{x:.9e}")).collect();
    if v.len() > SHOWN {
        parts.push(format!("... ({} entries)", v.len()));
    }
    format!("[{}]", parts.join(", "))
}

fn cmd_solve(args: &SolveArgs) -> mteq::Result<ExitCode> {
    let (tensor, rhs, _) = load_input(&args.input)?;
    let x0 = parse_x0(&args.x0, tensor.dim())?;
    let cfg = SolveConfig {
        method: args.method,
        alpha: args.alpha,
        omega: args.omega,
        eta: args.tol,
        max_iter: args.max_iter,
        scale: !args.no_scale,
        ..SolveConfig::default()
    };
    let out = solve(&tensor, &rhs, &x0, &cfg)?;

    println!("status: {}", out.status);
    println!(
        "method: {} (alpha = {}, omega = {})",
        cfg.method.as_str(),
        cfg.alpha,
        cfg.omega
    );
    if out.alpha_experimental {
        println!("note: alpha > 1 is outside the proven convergence range");
    }
    println!("iterations: {}", out.iterations);
    println!("scale factor: {:e}", out.scale_factor);
    println!("start feasible: {}", out.start_feasible);
    println!("residual (scaled): {:e}", out.final_res2);
    println!("residual (unscaled): {:e}", out.final_res2_unscaled);
    println!("monotonicity audit violations: {}", out.audit_violations);
    if cfg.method == Method::Anewton {
        println!("epsilon fallbacks: {}", out.trace.fallback_count());
    }
    println!("x: {}", fmt_vec(&out.x));

    if let Some(path) = &args.trace {
        out.trace.write_csv(BufWriter::new(File::create(path)?))?;
        println!("trace: {}", path.display());
    }
    if let Some(path) = &args.out {
        write_vector(path, &out.x)?;
        println!("solution: {}", path.display());
    }
    Ok(exit_code(out.status))
}

fn cmd_analyze(input: &InputArgs, power: bool) -> mteq::Result<ExitCode> {
    let (tensor, rhs, inst) = load_input(input)?;
    if let Some(inst) = &inst {
        println!("problem: {}", inst.meta.problem);
    }
    println!("order: {}, dim: {}", tensor.order(), tensor.dim());
    println!("z-tensor: {}", is_z_tensor(&tensor));

    let cert = mtensor_certificate(&tensor, power)?;
    println!("certificate: {:?}", cert.verdict);
    println!("  s: {}", cert.s);
    println!("  row-sum bound: {}", cert.row_sum_bound);
    if cert.row_sum_bound > 0.0 {
        println!("  ratio s / bound: {:.6}", cert.s / cert.row_sum_bound);
    }
    if let Some(rho) = cert.power_estimate {
        println!("  power estimate: {rho}");
    }

    let maj = majorization(&tensor);
    let m = maj.matrix();
    match maj.lu() {
        Ok(lu) => {
            let n = m.rows();
            let mut inv_norm: f64 = 0.0;
            let mut row_abs = vec![0.0; n];
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let col = lu.solve(&e)?;
                for (acc, v) in row_abs.iter_mut().zip(&col) {
                    *acc += v.abs();
                }
            }
            for v in row_abs {
                inv_norm = inv_norm.max(v);
            }
            println!(
                "majorization: nonsingular, cond_inf = {:.6e}",
                m.norm_inf() * inv_norm
            );
        }
        Err(e) => println!("majorization: {e}"),
    }

    if cert.verdict == Verdict::NotZTensor {
        println!("existence: not applicable (not a Z-tensor)");
    } else {
        match existence_sufficient(&tensor, &rhs) {
            Ok(v) => println!("existence: {v:?}"),
            Err(e) => println!("existence: {e}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &BenchArgs) -> mteq::Result<ExitCode> {
    let spec = BenchSpec {
        reps: args.reps as usize,
        seed: args.seed,
        omega: args.omega,
        eta: args.tol,
        max_iter: args.max_iter,
        ..BenchSpec::new(
            args.problem,
            args.n.clone(),
            args.alpha.clone(),
            args.method.clone(),
        )
    };
    let rows = run_bench(&spec)?;
    if let Some(path) = &args.csv {
        write_csv(&rows, BufWriter::new(File::create(path)?))?;
    }

    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(
        w,
        "{:>5} {:>8} {:>8} {:>6} {:>10} {:>10}",
        "n", "alpha", "method", "conv", "mean_iter", "mean_ms"
    )?;
    for s in summarize(&rows) {
        writeln!(
            w,
            "{:>5} {:>8} {:>8} {:>6} {:>10.1} {:>10.3}",
            s.n,
            s.alpha,
            s.method.as_str(),
            format!("{}/{}", s.converged, s.reps),
            s.mean_iters,
            s.mean_ms
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
