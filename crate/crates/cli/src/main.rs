use clap::{Parser, Subcommand, ValueEnum};
use evsparse::pipeline::{
    compare_reports, load_batch, load_model, oracle_check, read_report, render_report, run_batch,
    target_records, write_report, Method, ReportFormat, ResultRecord,
};
use evsparse::{Error, ErrorKind, Tolerance};
use std::path::PathBuf;
use std::process::ExitCode;

const WORKERS_ENV: &str = "EVSPARSE_WORKERS";
const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "evsparse", version, about = "Evidential sparsification of softmax outputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of feature vectors through a model and emit result records.
    Sparsify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Evidential)]
        method: MethodArg,
        /// Relative zero-evidence tolerance, scaled by max(1, max|w|).
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EmitArg::Structured)]
        emit: EmitArg,
    },
    /// Check the closed forms against the power-set oracle for every input.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_k: usize,
    },
    /// Wasserstein / Bhattacharyya distances between two result files.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Target distributions from two result files paired by position.
    Target {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EmitArg::Structured)]
        emit: EmitArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Evidential,
    Sparsemax,
    Softmax,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Evidential => Method::Evidential,
            MethodArg::Sparsemax => Method::Sparsemax,
            MethodArg::Softmax => Method::Softmax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Structured,
    Csv,
}

impl From<EmitArg> for ReportFormat {
    fn from(e: EmitArg) -> Self {
        match e {
            EmitArg::Structured => ReportFormat::Structured,
            EmitArg::Csv => ReportFormat::Csv,
        }
    }
}

fn emit(records: &[ResultRecord], format: ReportFormat, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => write_report(records, format, path),
        None => {
            print!("{}", render_report(records, format)?);
            Ok(())
        }
    }
}

fn configure_workers() -> Result<(), Error> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Error::InvalidParams(format!("{WORKERS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParams(format!("cannot configure {threads} workers: {e}")))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Sparsify {
            model,
            inputs,
            method,
            tol,
            out,
            emit: format,
        } => {
            let model = load_model(&model)?;
            let batch = load_batch(&inputs)?;
            let outcome = run_batch(&model, &batch, method.into(), Tolerance::Relative(tol))?;
            emit(&outcome.records, format.into(), out.as_ref())?;
            if outcome.failures.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            for f in &outcome.failures {
                eprintln!("input {} ({}): {}", f.index, f.id, f.error);
            }
            eprintln!(
                "{} of {} inputs failed",
                outcome.failures.len(),
                batch.inputs.len()
            );
            let code = outcome
                .failures
                .iter()
                .map(|f| f.error.kind().exit_code())
                .max()
                .unwrap_or(1);
            Ok(ExitCode::from(code as u8))
        }
        Command::Oracle {
            model,
            inputs,
            max_k,
        } => {
            let model = load_model(&model)?;
            let batch = load_batch(&inputs)?;
            if batch.num_features != model.num_features() {
                return Err(Error::DimensionMismatch {
                    what: "batch J vs model J".into(),
                    expected: model.num_features(),
                    found: batch.num_features,
                });
            }
            let (mut worst_pl, mut worst_fuse, mut mismatches, mut checked, mut fused) =
                (0.0_f64, 0.0_f64, 0usize, 0usize, 0usize);
            println!("id\tK\tpl_vs_softmax\tfused_vs_closed\tsign_mismatches");
            for input in &batch.inputs {
                let Some(check) = oracle_check(&model, &input.id, &input.features, max_k)? else {
                    println!("{}\t{}\tskipped (K > max-k)", input.id, model.num_classes());
                    continue;
                };
                checked += 1;
                worst_pl = worst_pl.max(check.plausibility_vs_softmax);
                if let Some(d) = check.fused_vs_closed {
                    worst_fuse = worst_fuse.max(d);
                    fused += 1;
                }
                mismatches += check.sign_mismatches;
                println!(
                    "{}\t{}\t{:.3e}\t{}\t{}",
                    check.id,
                    check.num_classes,
                    check.plausibility_vs_softmax,
                    check
                        .fused_vs_closed
                        .map_or_else(|| "skipped".to_string(), |d| format!("{d:.3e}")),
                    check.sign_mismatches
                );
            }
            println!(
                "checked {checked} inputs ({fused} with fusion): max pl-vs-softmax {worst_pl:.3e}, max fused-vs-closed {worst_fuse:.3e}, sign mismatches {mismatches}"
            );
            if worst_pl > ORACLE_TOLERANCE || worst_fuse > ORACLE_TOLERANCE || mismatches > 0 {
                eprintln!("oracle deviations exceed {ORACLE_TOLERANCE:e}");
                return Ok(ExitCode::from(ErrorKind::Numerical.exit_code() as u8));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { a, b } => {
            let (ra, rb) = (read_report(&a)?, read_report(&b)?);
            let rows = compare_reports(&ra, &rb)?;
            println!("id\twasserstein\tbhattacharyya\tsize_a\tsize_b\treduction_a\treduction_b");
            for c in &rows {
                println!(
                    "{}\t{:.9}\t{:.9}\t{}\t{}\t{:.6}\t{:.6}",
                    c.id, c.wasserstein, c.bhattacharyya, c.size_a, c.size_b, c.reduction_a, c.reduction_b
                );
            }
            if !rows.is_empty() {
                let n = rows.len() as f64;
                let mean = |f: fn(&evsparse::pipeline::Comparison) -> f64| rows.iter().map(f).sum::<f64>() / n;
                println!(
                    "mean\t{:.9}\t{:.9}\t{:.3}\t{:.3}\t{:.6}\t{:.6}",
                    mean(|c| c.wasserstein),
                    mean(|c| c.bhattacharyya),
                    mean(|c| c.size_a as f64),
                    mean(|c| c.size_b as f64),
                    mean(|c| c.reduction_a),
                    mean(|c| c.reduction_b)
                );
            }
            eprintln!("{} matched ids", rows.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Target {
            a,
            b,
            out,
            emit: format,
        } => {
            let records = target_records(&read_report(&a)?, &read_report(&b)?)?;
            emit(&records, format.into(), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(e.kind().exit_code() as u8);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
