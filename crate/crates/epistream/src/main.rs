//! Command-line front end: `generate`, `mine`, `compare`, `bounds`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epistream::bounds::{bounds, BoundsInput};
use epistream::datagen::{export_ground_truth, generate_stream, Drift, GenConfig};
use epistream::event::{read_events, write_events, SymbolTable};
use epistream::harness::{run_experiment, ExperimentConfig, InputSpec};
use epistream::miner::{run_variant, DeltaPolicy, MinerConfig, Variant};

#[derive(Parser)]
#[command(
    name = "epistream",
    about = "Streaming top-k and (v,k)-persistent episode mining over event streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event stream with ground truth
    Generate(GenerateArgs),
    /// Mine one variant over an event file and write a window report CSV
    Mine(MineArgs),
    /// Run a multi-variant comparison experiment from a config file
    Compare(CompareArgs),
    /// Evaluate the frequency and error bounds for given parameters
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output path for the event stream
    #[arg(long, default_value = "events.tsv")]
    out: PathBuf,
    /// Output path for the ground-truth CSV
    #[arg(long, default_value = "ground_truth.csv")]
    truth_out: PathBuf,
    #[arg(long, default_value_t = 500)]
    alphabet: u32,
    /// Aggregate background rate, events/sec
    #[arg(long, default_value_t = 10.0)]
    noise_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    #[arg(long, default_value_t = 10)]
    patterns: u32,
    #[arg(long, default_value_t = 4)]
    pattern_length: u32,
    /// Occurrences/sec per embedded pattern
    #[arg(long, default_value_t = 2.0)]
    pattern_rate: f64,
    /// Mean in-occurrence gap, seconds
    #[arg(long, default_value_t = 0.05)]
    intra_gap: f64,
    /// Random-walk drift step per batch (0 disables drift)
    #[arg(long, default_value_t = 0.0)]
    drift_step: f64,
    #[arg(long, default_value_t = 200.0)]
    duration: f64,
    #[arg(long, default_value_t = 10.0)]
    batch_span: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct MineArgs {
    /// Event file, lines of "timestamp<TAB>event_type"
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "alg4")]
    variant: Variant,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Episode size to mine
    #[arg(long, default_value_t = 3)]
    l: usize,
    /// Batches per window
    #[arg(long, default_value_t = 10)]
    m: u32,
    /// Persistence parameter (required for alg4/alg5)
    #[arg(long)]
    v: Option<u32>,
    #[arg(long, default_value_t = 10.0)]
    batch_span: f64,
    /// "auto" for the 75th-percentile estimator, or a fixed number
    #[arg(long, default_value = "auto")]
    delta: String,
    /// Initial delta as a fraction of the first f_k (estimator only)
    #[arg(long, default_value_t = 0.05)]
    delta0_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon_step: f64,
    /// Stream origin; defaults to the first event's timestamp
    #[arg(long)]
    origin: Option<f64>,
    #[arg(long, default_value = "reports")]
    report_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Flat key = value experiment config
    #[arg(long)]
    config: PathBuf,
    /// Extra key=value overrides applied after the file
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    k: u64,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    v: u32,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long)]
    epsilon: f64,
    /// Per-batch f_k values, comma separated; a single value is repeated
    #[arg(long)]
    fk: String,
    /// Number of persistent episodes found, when known
    #[arg(long)]
    persistent_count: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> epistream::Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Mine(args) => mine(args),
        Command::Compare(args) => compare(args),
        Command::Bounds(args) => print_bounds(args),
    }
}

fn generate(args: GenerateArgs) -> epistream::Result<()> {
    let cfg = GenConfig {
        alphabet_size: args.alphabet,
        noise_rate: args.noise_rate,
        powerlaw_exponent: args.exponent,
        num_patterns: args.patterns,
        pattern_length: args.pattern_length,
        pattern_rate: args.pattern_rate,
        intra_gap: args.intra_gap,
        drift: if args.drift_step == 0.0 {
            Drift::None
        } else {
            Drift::RandomWalk {
                step_frac: args.drift_step,
            }
        },
        duration: args.duration,
        batch_span: args.batch_span,
        seed: args.seed,
    };
    let mut symbols = SymbolTable::new();
    let (events, truth) = generate_stream(&cfg, &mut symbols)?;
    let mut out = BufWriter::new(fs::File::create(&args.out)?);
    writeln!(out, "# epistream synthetic stream, seed={}", cfg.seed)?;
    write_events(&mut out, &events, &symbols)?;
    out.flush()?;
    let mut truth_out = BufWriter::new(fs::File::create(&args.truth_out)?);
    export_ground_truth(&truth, &symbols, &mut truth_out)?;
    truth_out.flush()?;
    println!(
        "wrote {} events over {} batches to {} (truth: {})",
        events.len(),
        cfg.num_batches(),
        args.out.display(),
        args.truth_out.display()
    );
    Ok(())
}

fn mine(args: MineArgs) -> epistream::Result<()> {
    let mut symbols = SymbolTable::new();
    let reader = std::io::BufReader::new(fs::File::open(&args.input)?);
    let events = read_events(reader, &mut symbols)?;

    let delta = match args.delta.as_str() {
        "auto" => DeltaPolicy::Estimated {
            initial_frac: args.delta0_frac,
        },
        other => DeltaPolicy::Fixed(other.parse().map_err(|_| {
            epistream::Error::Config(format!("--delta must be \"auto\" or a number, got {other:?}"))
        })?),
    };
    let mut cfg = MinerConfig::new(args.variant, args.k, args.l, args.m);
    cfg.batch_span = args.batch_span;
    cfg.persistence = args.v;
    cfg.delta_policy = delta;
    cfg.epsilon_step = args.epsilon_step;

    let reports = run_variant(&events, &cfg, args.origin)?;

    fs::create_dir_all(&args.report_dir)?;
    let path = args.report_dir.join(format!("{}.csv", args.variant));
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(
        w,
        "window_id,rank,episode,window_freq,f_k,f_min,delta_used,flags"
    )?;
    for report in &reports {
        for (rank, (ep, freq)) in report.ranked.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                report.window.end_batch,
                rank + 1,
                ep.render(&symbols),
                freq,
                report.f_k,
                report.f_min,
                report.delta_used,
                report.flags
            )?;
        }
    }
    w.flush()?;

    for report in reports.iter().rev().take(1) {
        println!(
            "window {} ({} episodes, f_k={}, f_min={}):",
            report.window.end_batch,
            report.ranked.len(),
            report.f_k,
            report.f_min
        );
        for (rank, (ep, freq)) in report.ranked.iter().take(args.k).enumerate() {
            println!("  {:>3}. {}  {}", rank + 1, ep.render(&symbols), freq);
        }
    }
    println!("report: {}", path.display());
    Ok(())
}

fn compare(args: CompareArgs) -> epistream::Result<()> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if !args.overrides.is_empty() {
        let mut gen = match &cfg.input {
            InputSpec::Generate(g) => g.clone(),
            _ => GenConfig::default(),
        };
        let mut is_generate = matches!(cfg.input, InputSpec::Generate(_));
        for pair in &args.overrides {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                epistream::Error::Config(format!("override must be key=value, got {pair:?}"))
            })?;
            cfg.apply_kv(key.trim(), value.trim(), &mut gen, &mut is_generate)?;
        }
        if is_generate {
            cfg.input = InputSpec::Generate(gen);
        }
    }
    let summary = run_experiment(&cfg)?;
    println!("reports in {}", summary.report_dir.display());
    println!(
        "{:<6} {:>8} {:>10} {:>10} {:>14} {:>14}",
        "var", "windows", "precision", "recall", "sec/window", "tracked"
    );
    for (variant, precision, recall, seconds, nodes) in summary.averages() {
        let windows = summary
            .rows
            .iter()
            .filter(|r| r.variant == variant && !r.partial)
            .count();
        println!(
            "{:<6} {:>8} {:>10.4} {:>10.4} {:>14.6} {:>14.1}",
            variant.name(),
            windows,
            precision,
            recall,
            seconds,
            nodes
        );
    }
    Ok(())
}

fn print_bounds(args: BoundsArgs) -> epistream::Result<()> {
    let parts: Vec<&str> = args.fk.split(',').collect();
    let mut fk: Vec<u64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| epistream::Error::Config(format!("bad f_k value {p:?}")))
        })
        .collect::<epistream::Result<_>>()?;
    if fk.len() == 1 {
        fk = vec![fk[0]; args.m as usize];
    }
    let report = bounds(&BoundsInput {
        k: args.k,
        m: args.m,
        v: args.v,
        delta: args.delta,
        phi: args.phi,
        epsilon: args.epsilon,
        fk_per_batch: fk,
        persistent_count: args.persistent_count,
    })?;
    println!("f_L        = {}", report.f_l);
    println!("f_U        = {}", report.f_u);
    println!("mu         = {}", report.mu);
    println!("max_errors = {}", report.max_errors);
    println!("valid      = {}", report.valid);
    for c in &report.corollary {
        println!(
            "closed form ({:?}): errors <= epsilon*k*{} if phi/2 > {}  (= {} here)",
            c.case,
            c.error_factor,
            c.min_phi_over_2,
            c.max_errors(args.epsilon, args.k)
        );
    }
    Ok(())
}
