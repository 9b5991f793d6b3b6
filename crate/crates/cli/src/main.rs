use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use covtune::estimators::GridOptions;
use covtune::io::{read_dataset, read_matrix, write_matrix};
use covtune::selection::RuleKind;
use covtune::study::{
    rank_rows, read_records, resolve_threads, run_study, summarize, tuned_estimate, write_ranks, write_records,
    write_summary, write_timings, StudyConfig, DEFAULT_BOOTSTRAP,
};
use covtune::{EstimatorSpec, Family, RngStream, SelectionRule};

#[derive(Parser)]
#[command(name = "covtune", version, about = "Tuned regularized covariance estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation study described by a TOML config.
    Study(StudyArgs),
    /// Tune one estimator on a data file and write the estimate.
    Estimate(EstimateArgs),
    /// Aggregate a records file into per-cell MSE and rankings.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (overrides the config and COVTUNE_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Base seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Observations as rows, variables as columns.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    family: Family,
    /// e.g. CV10, reCV3:op, RCV2, boot, boot:op, SURE, oracle:op
    #[arg(long)]
    rule: String,
    /// True covariance, required by the oracle rule.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the tuned estimate; the score curve goes to `<out>.report.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Skip the first line of the data file.
    #[arg(long)]
    header: bool,
    /// Bootstrap resamples for the bootstrap rules.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    boot: usize,
    /// Leave the diagonal alone under thresholding.
    #[arg(long)]
    preserve_diagonal: bool,
    /// Number of thresholds in the hard/soft grid.
    #[arg(long, default_value_t = GridOptions::default().threshold_points)]
    grid_points: usize,
    /// Largest bandwidth tried by banding/tapering.
    #[arg(long)]
    max_bandwidth: Option<usize>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Summary CSV; rankings are written next to it as `<stem>.ranks.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Drop cells whose Frobenius or operator MSE exceeds this value.
    #[arg(long)]
    max_mse: Option<f64>,
}

enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<covtune::Error> for Failure {
    fn from(e: covtune::Error) -> Self {
        use covtune::Error as E;
        match e {
            E::NoConvergence { .. } => Failure::Numerical(e.to_string()),
            E::Config(_) | E::UnsupportedFamily { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn with_path(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Study(args) => study(args),
        Command::Estimate(args) => estimate(args),
        Command::Summarize(args) => summarize_command(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn study(args: StudyArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config).map_err(with_path(&args.config))?;
    let mut config = StudyConfig::from_toml(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let env = std::env::var("COVTUNE_THREADS").ok();
    let threads = resolve_threads(args.threads, config.threads, env.as_deref())?;
    config.threads = Some(threads);
    config.validate()?;

    fs::create_dir_all(&args.out).map_err(with_path(&args.out))?;
    fs::write(args.out.join("config.toml"), config.to_toml()?)?;
    let output = run_study(&config, threads)?;

    let create = |name: &str| -> Result<BufWriter<File>, Failure> {
        let path = args.out.join(name);
        Ok(BufWriter::new(File::create(&path).map_err(with_path(&path))?))
    };
    write_records(create("records.csv")?, &output.records)?;
    write_timings(create("timings.csv")?, &output.records)?;
    let rows = summarize(&output.records, None);
    write_summary(create("summary.csv")?, &rows)?;
    write_ranks(create("summary.ranks.csv")?, &rank_rows(&rows))?;
    if output.failures() > 0 {
        warn!(
            "{} trials failed; see the status column of records.csv",
            output.failures()
        );
    }
    info!("wrote {} records to {}", output.records.len(), args.out.display());
    Ok(())
}

fn estimate(args: EstimateArgs) -> Result<(), Failure> {
    let rule = SelectionRule::parse(&args.rule, args.boot).map_err(|e| Failure::Usage(e.to_string()))?;
    if !rule.admits(args.family) {
        return Err(Failure::Usage(format!(
            "rule {rule} cannot tune the {} estimator",
            args.family
        )));
    }
    if rule.kind() == RuleKind::Oracle && args.truth.is_none() {
        return Err(Failure::Usage("the oracle rule needs --truth".into()));
    }
    if args.grid_points < 2 {
        return Err(Failure::Usage("--grid-points must be at least 2".into()));
    }
    let data = read_dataset(&args.data, args.header)?;
    let truth = args.truth.as_deref().map(read_matrix).transpose()?;
    if let Some(t) = &truth {
        if t.dim() != data.p() {
            return Err(Failure::Data(format!(
                "truth is {0}x{0} but the data has {1} columns",
                t.dim(),
                data.p()
            )));
        }
    }
    let options = GridOptions {
        threshold_points: args.grid_points,
        max_bandwidth: args.max_bandwidth,
    };
    let spec = EstimatorSpec::default_for(args.family, &data, &options)?.with_preserve_diagonal(args.preserve_diagonal);
    let (estimate, result) = tuned_estimate(&rule, &spec, &data, truth.as_ref(), &RngStream::new(args.seed, 0))?;
    write_matrix(&args.out, &estimate)?;

    let report_path = report_path(&args.out);
    let mut report = Vec::new();
    writeln!(report, "lambda,score,selected")?;
    for pt in &result.curve {
        let selected = u8::from(pt.lambda == result.lambda);
        writeln!(report, "{},{},{selected}", pt.lambda, pt.score)?;
    }
    fs::write(&report_path, &report).map_err(with_path(&report_path))?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "estimator: {}", args.family)?;
    writeln!(out, "rule: {rule}")?;
    if let Some(l0) = result.stage_one_lambda {
        writeln!(out, "stage-one lambda: {l0}")?;
    }
    writeln!(out, "selected lambda: {}", result.lambda)?;
    out.write_all(&report)?;
    Ok(())
}

fn report_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report.csv");
    PathBuf::from(name)
}

fn summarize_command(args: SummarizeArgs) -> Result<(), Failure> {
    let file = File::open(&args.input).map_err(with_path(&args.input))?;
    let records = read_records(file)?;
    let rows = summarize(&records, args.max_mse);
    write_summary(
        BufWriter::new(File::create(&args.out).map_err(with_path(&args.out))?),
        &rows,
    )?;
    let ranks = args.out.with_extension("ranks.csv");
    write_ranks(
        BufWriter::new(File::create(&ranks).map_err(with_path(&ranks))?),
        &rank_rows(&rows),
    )?;
    info!("summarized {} records into {} rows", records.len(), rows.len());
    Ok(())
}
