//! The `evsdg` command line: `train`, `generate` and `validate`.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data or model errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use evsdg_core::buckets::TrainingBuckets;
use evsdg_core::validate::{compare_real_synthetic, validate_arrival_fit, ValidationReport};
use evsdg_core::{
    generate_sessions, train, ArrivalSampler, EmConfig, GenerationConfig, Horizon, IatBoundaryPolicy, LambdaMode,
    OverdispersionRule, RateBounds, Session, TimeGrid, TrainConfig,
};

use crate::ingest::{parse_sessions, write_sessions, ParsePolicy};
use crate::persist::{load_model, model_to_string};
use crate::report::{report_to_string, ALPHA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "evsdg", version, about = "Synthetic EV charging session generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a session CSV and write it as JSON.
    Train(TrainArgs),
    /// Generate synthetic sessions from a model file.
    Generate(GenerateArgs),
    /// Test a model against a session CSV and report goodness of fit.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ArrivalModelArg {
    /// Exponential inter-arrival times.
    Iat,
    /// Poisson counts per slot.
    Poisson,
    /// Poisson counts, negative binomial in overdispersed slots.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LambdaModeArg {
    Piecewise,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Naive,
    Restart,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 60)]
    slot_minutes: u32,
    #[arg(long, value_enum, default_value_t = ArrivalModelArg::Auto)]
    arrival_model: ArrivalModelArg,
    #[arg(long, value_enum, default_value_t = LambdaModeArg::Piecewise)]
    lambda_mode: LambdaModeArg,
    #[arg(long, default_value_t = 4)]
    fourier_order: usize,
    #[arg(long, default_value_t = RateBounds::default().min())]
    lambda_min: f64,
    #[arg(long, default_value_t = RateBounds::default().max())]
    lambda_max: f64,
    #[arg(long, default_value_t = 8)]
    max_components: usize,
    #[arg(long, default_value_t = 50)]
    min_cell_n: usize,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Restart)]
    iat_boundary: BoundaryArg,
    /// Abort on the first bad row instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Seed for the mixture fits' random initializations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,
    /// First day of the horizon, YYYY-MM-DD.
    #[arg(long, value_parser = parse_date)]
    from: NaiveDate,
    /// Day after the last day of the horizon, YYYY-MM-DD.
    #[arg(long, value_parser = parse_date)]
    to: NaiveDate,
    #[arg(long)]
    seed: u64,
    /// Defaults to standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed for the synthetic sample compared against the input.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    strict: bool,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("expected YYYY-MM-DD: {e}"))
}

enum Failure {
    Usage(String),
    Data(String),
}

fn data_err(context: &str) -> impl Fn(&dyn std::fmt::Display) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

/// Runs the tool with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a, out, err),
        Command::Generate(a) => cmd_generate(&a, out, err),
        Command::Validate(a) => cmd_validate(&a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn read_sessions(path: &Path, strict: bool, err: &mut dyn Write) -> Result<(Vec<Session>, usize), Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let policy = if strict { ParsePolicy::Strict } else { ParsePolicy::SkipBad };
    let (sessions, skipped) =
        parse_sessions(BufReader::new(file), policy).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    for e in skipped.iter().take(10) {
        let _ = writeln!(err, "warning: skipped {}: {e}", path.display());
    }
    if skipped.len() > 10 {
        let _ = writeln!(err, "warning: skipped {} more rows", skipped.len() - 10);
    }
    Ok((sessions, skipped.len()))
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig, Failure> {
    let grid = TimeGrid::new(a.slot_minutes).map_err(|e| Failure::Usage(format!("--slot-minutes: {e}")))?;
    let bounds =
        RateBounds::new(a.lambda_min, a.lambda_max).map_err(|e| Failure::Usage(format!("--lambda-min/--lambda-max: {e}")))?;
    let lambda_mode = match a.lambda_mode {
        LambdaModeArg::Piecewise => LambdaMode::Piecewise,
        LambdaModeArg::Smooth => {
            if 2 * a.fourier_order + 1 > grid.slots_per_day() as usize {
                return Err(Failure::Usage(format!(
                    "--fourier-order {} needs at least {} slots per day",
                    a.fourier_order,
                    2 * a.fourier_order + 1
                )));
            }
            LambdaMode::Smooth { order: a.fourier_order }
        }
    };
    let (sampler, count_rule) = match a.arrival_model {
        ArrivalModelArg::Iat => (ArrivalSampler::Iat, None),
        ArrivalModelArg::Poisson => (ArrivalSampler::Counts, None),
        ArrivalModelArg::Auto => (ArrivalSampler::Counts, Some(OverdispersionRule::default())),
    };
    let em = EmConfig { k_max: a.max_components, min_cell_n: a.min_cell_n, ..EmConfig::default() };
    em.validate()
        .map_err(|_| Failure::Usage("--max-components and --min-cell-n must be positive".into()))?;
    Ok(TrainConfig {
        grid,
        bounds,
        lambda_mode,
        count_rule,
        iat_boundary_policy: match a.iat_boundary {
            BoundaryArg::Naive => IatBoundaryPolicy::Naive,
            BoundaryArg::Restart => IatBoundaryPolicy::Restart,
        },
        sampler,
        em,
        mixture_by_daytype: false,
        seed: a.seed,
    })
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |x| format!("{:.1}%", 100.0 * x))
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let cfg = train_config(a)?;
    let (sessions, skipped) = read_sessions(&a.input, a.strict, err)?;
    let outcome = train(&sessions, &cfg).map_err(|e| Failure::Data(format!("training failed: {e}")))?;
    let text = model_to_string(&outcome.model);
    std::fs::write(&a.output, &text).map_err(|e| data_err("writing model")(&e))?;

    let fit = validate_arrival_fit(outcome.model.arrival(), &outcome.buckets);
    let observed = outcome.buckets.counts.values().filter(|c| c.iter().any(|&n| n > 0)).count();
    let h = &outcome.horizon;
    let lines = [
        format!("sessions: {} ({} rows skipped)", sessions.len(), skipped),
        format!("training window: {} to {} ({} days)", h.start(), h.end(), h.days()),
        format!(
            "arrival model: {:?} sampler, {} rate",
            a.arrival_model,
            match cfg.lambda_mode {
                LambdaMode::Piecewise => "piecewise".to_string(),
                LambdaMode::Smooth { order } => format!("smooth (order {order})"),
            }
        )
        .to_lowercase(),
        format!(
            "  rate cells: {} ({} with arrivals), negative binomial cells: {}",
            outcome.buckets.counts.len(),
            observed,
            outcome.model.arrival().counts().negbinom_len()
        ),
        format!(
            "connected time mixtures: {} cells fitted, {} month fallbacks, {} global fallbacks",
            outcome.connected_stats.own_fits, outcome.connected_stats.month_fallbacks, outcome.connected_stats.global_fallbacks
        ),
        format!(
            "energy mixtures: {} cells fitted, {} month fallbacks, {} global fallbacks",
            outcome.energy_stats.own_fits, outcome.energy_stats.month_fallbacks, outcome.energy_stats.global_fallbacks
        ),
        format!(
            "KS pass rate at alpha = {ALPHA}: {} of {} slots ({} low power, {} omitted)",
            percent(fit.pass_rate(ALPHA)),
            fit.cells.len(),
            fit.low_power.len(),
            fit.omitted.len()
        ),
        format!("model written to {} ({} bytes)", a.output.display(), text.len()),
    ];
    for line in lines {
        let _ = writeln!(out, "{line}");
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let horizon = Horizon::new(a.from, a.to).map_err(|_| Failure::Usage("--from must be before --to".into()))?;
    let file = File::open(&a.model).map_err(|e| Failure::Data(format!("{}: {e}", a.model.display())))?;
    let model = load_model(BufReader::new(file)).map_err(|e| Failure::Data(format!("{}: {e}", a.model.display())))?;
    let cfg = GenerationConfig::new(horizon, a.seed, model.arrival().sampler());
    let sessions = generate_sessions(&model, &cfg).map_err(|e| data_err("generation failed")(&e))?;
    match &a.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            write_sessions(&sessions, BufWriter::new(file)).map_err(|e| data_err("writing sessions")(&e))?;
            let _ = writeln!(out, "generated {} sessions", sessions.len());
        }
        None => {
            write_sessions(&sessions, &mut *out).map_err(|e| data_err("writing sessions")(&e))?;
            let _ = writeln!(err, "generated {} sessions", sessions.len());
        }
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let file = File::open(&a.model).map_err(|e| Failure::Data(format!("{}: {e}", a.model.display())))?;
    let model = load_model(BufReader::new(file)).map_err(|e| Failure::Data(format!("{}: {e}", a.model.display())))?;
    let (real, _) = read_sessions(&a.input, a.strict, err)?;
    let horizon = Horizon::covering(real.iter().map(Session::arrival))
        .ok_or_else(|| Failure::Data(format!("{}: no sessions", a.input.display())))?;
    let grid = *model.grid();
    let buckets = TrainingBuckets::from_sessions(&real, &grid, &horizon, model.connected().by_daytype())
        .map_err(|e| data_err("bucketing input")(&e))?;
    let arrival_fit = validate_arrival_fit(model.arrival(), &buckets);

    let cfg = GenerationConfig::new(horizon, a.seed, model.arrival().sampler());
    let synth = generate_sessions(&model, &cfg).map_err(|e| data_err("generation failed")(&e))?;
    let comparison = compare_real_synthetic(&real, &synth, &grid)
        .map_err(|e| Failure::Data(format!("comparing with a synthetic sample: {e}")))?;
    let text = report_to_string(&ValidationReport { arrival_fit, comparison });
    match &a.report {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(())
}
