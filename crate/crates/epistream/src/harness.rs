//! Experiment runner: drives variants over one batch sequence, scores them
//! against the full-window baseline, and writes CSV reports.
//!
//! Alg0's per-window output is the ground truth for precision/recall. A
//! reference curve scores each window's truth against the previous window's,
//! showing how fast the true top-k itself moves. For generator runs the
//! embedded patterns give a second, optional truth.
//!
//! Reports, per variant, land in the report directory as `<variant>.csv`
//! with one row per (window, rank). `summary.csv` has one row per
//! (variant, window); `averages.csv` aggregates complete windows;
//! `reference.csv` holds the self-reference curve. Identical configs and
//! seeds produce byte-identical report CSVs; wall-time columns live only in
//! the summary files and are excluded from that guarantee.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::datagen::{export_ground_truth, generate_stream, Drift, GenConfig};
use crate::episode::Episode;
use crate::event::{batchify, read_events, Batch, SymbolTable};
use crate::miner::{
    run_variant_on_batches, DeltaPolicy, MinerConfig, Variant, WindowReport,
};
use crate::{Error, Result};

/// Precision/recall of a predicted episode set against a truth set. Empty
/// denominators yield 0 with the corresponding `*_defined` flag cleared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOutcome {
    pub precision: f64,
    pub recall: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

pub fn evaluate(predicted: &BTreeSet<Episode>, truth: &BTreeSet<Episode>) -> EvalOutcome {
    let hits = predicted.intersection(truth).count() as f64;
    let precision_defined = !predicted.is_empty();
    let recall_defined = !truth.is_empty();
    EvalOutcome {
        precision: if precision_defined {
            hits / predicted.len() as f64
        } else {
            0.0
        },
        recall: if recall_defined {
            hits / truth.len() as f64
        } else {
            0.0
        },
        precision_defined,
        recall_defined,
    }
}

/// Where the experiment's events come from.
#[derive(Debug, Clone)]
pub enum InputSpec {
    File(PathBuf),
    Generate(GenConfig),
}

/// Full experiment description: input, variants, miner parameters, output.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub input: InputSpec,
    pub variants: Vec<Variant>,
    pub k: usize,
    pub episode_size: usize,
    pub window_batches: u32,
    pub persistence: Option<u32>,
    pub batch_span: f64,
    pub delta: DeltaPolicy,
    pub epsilon_step: f64,
    pub origin: Option<f64>,
    pub report_dir: PathBuf,
    /// Refuse to run Alg0 on windows with more events than this.
    pub window_event_cap: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            input: InputSpec::Generate(GenConfig::default()),
            variants: Variant::ALL.to_vec(),
            k: 10,
            episode_size: 3,
            window_batches: 10,
            persistence: None,
            batch_span: 10.0,
            delta: DeltaPolicy::Estimated { initial_frac: 0.05 },
            epsilon_step: 0.1,
            origin: None,
            report_dir: PathBuf::from("reports"),
            window_event_cap: 5_000_000,
        }
    }
}

impl ExperimentConfig {
    /// Parses the flat `key = value` config format. Unknown keys error so
    /// typos do not silently fall back to defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::default();
        let mut gen = GenConfig::default();
        let mut input_is_generate = true;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply_kv(key, value, &mut gen, &mut input_is_generate)
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
        }
        if input_is_generate {
            cfg.input = InputSpec::Generate(gen);
        }
        Ok(cfg)
    }

    /// Applies one `key = value` pair; CLI overrides reuse this.
    pub fn apply_kv(
        &mut self,
        key: &str,
        value: &str,
        gen: &mut GenConfig,
        input_is_generate: &mut bool,
    ) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
        }
        match key {
            "input" => {
                if value == "generate" {
                    *input_is_generate = true;
                } else {
                    *input_is_generate = false;
                    self.input = InputSpec::File(PathBuf::from(value));
                }
            }
            "variants" => {
                self.variants = value
                    .split(',')
                    .map(|s| s.parse())
                    .collect::<Result<Vec<Variant>>>()?;
                if self.variants.is_empty() {
                    return Err(Error::Config("variants must be non-empty".into()));
                }
            }
            "k" => self.k = num(key, value)?,
            "l" => self.episode_size = num(key, value)?,
            "m" => self.window_batches = num(key, value)?,
            "v" => self.persistence = Some(num(key, value)?),
            "batch_span" => self.batch_span = num(key, value)?,
            "delta" => {
                self.delta = if value == "auto" {
                    DeltaPolicy::Estimated { initial_frac: 0.05 }
                } else {
                    DeltaPolicy::Fixed(num(key, value)?)
                }
            }
            "delta0_frac" => {
                let frac: f64 = num(key, value)?;
                self.delta = DeltaPolicy::Estimated { initial_frac: frac };
            }
            "epsilon_step" => self.epsilon_step = num(key, value)?,
            "origin" => self.origin = Some(num(key, value)?),
            "report_dir" => self.report_dir = PathBuf::from(value),
            "window_event_cap" => self.window_event_cap = num(key, value)?,
            "gen.alphabet_size" => gen.alphabet_size = num(key, value)?,
            "gen.noise_rate" => gen.noise_rate = num(key, value)?,
            "gen.powerlaw_exponent" => gen.powerlaw_exponent = num(key, value)?,
            "gen.num_patterns" => gen.num_patterns = num(key, value)?,
            "gen.pattern_length" => gen.pattern_length = num(key, value)?,
            "gen.pattern_rate" => gen.pattern_rate = num(key, value)?,
            "gen.intra_gap" => gen.intra_gap = num(key, value)?,
            "gen.drift_step" => {
                let step: f64 = num(key, value)?;
                gen.drift = if step == 0.0 {
                    Drift::None
                } else {
                    Drift::RandomWalk { step_frac: step }
                };
            }
            "gen.duration" => gen.duration = num(key, value)?,
            "gen.seed" => gen.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn miner_config(&self, variant: Variant) -> MinerConfig {
        let mut cfg = MinerConfig::new(variant, self.k, self.episode_size, self.window_batches);
        cfg.batch_span = self.batch_span;
        cfg.persistence = self.persistence;
        cfg.delta_policy = self.delta;
        cfg.epsilon_step = self.epsilon_step;
        cfg
    }
}

/// Scores and resource numbers of one variant on one window.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub variant: Variant,
    pub window: u32,
    pub partial: bool,
    pub precision: f64,
    pub recall: f64,
    /// Against the generator's embedded patterns, when available.
    pub gt_precision: Option<f64>,
    pub gt_recall: Option<f64>,
    pub batch_seconds: f64,
    pub tracked_nodes: usize,
    pub flags: String,
}

/// Everything `run_experiment` computed, plus where it wrote the files.
#[derive(Debug)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    pub reports: BTreeMap<Variant, Vec<WindowReport>>,
    pub report_dir: PathBuf,
    pub symbols: SymbolTable,
}

impl ExperimentSummary {
    /// Mean precision/recall/time/nodes per variant over complete windows.
    pub fn averages(&self) -> Vec<(Variant, f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for (&variant, _) in &self.reports {
            let rows: Vec<&SummaryRow> = self
                .rows
                .iter()
                .filter(|r| r.variant == variant && !r.partial)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let n = rows.len() as f64;
            out.push((
                variant,
                rows.iter().map(|r| r.precision).sum::<f64>() / n,
                rows.iter().map(|r| r.recall).sum::<f64>() / n,
                rows.iter().map(|r| r.batch_seconds).sum::<f64>() / n,
                rows.iter().map(|r| r.tracked_nodes as f64).sum::<f64>() / n,
            ));
        }
        out
    }
}

/// Runs every requested variant over the same batch sequence and writes the
/// report files. Alg0 always runs (it is the truth reference) even when not
/// requested, but is only reported if requested.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    let mut symbols = SymbolTable::new();
    let mut truth_export: Option<String> = None;

    let (events, embedded) = match &cfg.input {
        InputSpec::File(path) => {
            let reader = std::io::BufReader::new(fs::File::open(path).map_err(|e| {
                Error::Config(format!("cannot open input {}: {e}", path.display()))
            })?);
            (read_events(reader, &mut symbols)?, None)
        }
        InputSpec::Generate(gen_cfg) => {
            let mut gen_cfg = gen_cfg.clone();
            gen_cfg.batch_span = cfg.batch_span;
            let (events, truth) = generate_stream(&gen_cfg, &mut symbols)?;
            let mut buf = Vec::new();
            export_ground_truth(&truth, &symbols, &mut buf)?;
            truth_export = Some(String::from_utf8(buf).expect("csv is utf-8"));
            let episodes: BTreeSet<Episode> = truth.episodes.iter().cloned().collect();
            (events, Some(episodes))
        }
    };
    if events.is_empty() {
        return Err(Error::Config("the input stream has no events".into()));
    }

    let batches = batchify(&events, cfg.batch_span, cfg.origin)?;
    guard_window_cap(&batches, cfg.window_batches, cfg.window_event_cap)?;

    // Alg0 is the evaluation truth
    let alg0_reports = run_variant_on_batches(&batches, &cfg.miner_config(Variant::Alg0))?;
    let truth_sets: Vec<BTreeSet<Episode>> =
        alg0_reports.iter().map(|r| r.episode_set()).collect();

    let mut reports: BTreeMap<Variant, Vec<WindowReport>> = BTreeMap::new();
    for &variant in &cfg.variants {
        if variant == Variant::Alg0 {
            reports.insert(variant, alg0_reports.clone());
        } else {
            reports.insert(
                variant,
                run_variant_on_batches(&batches, &cfg.miner_config(variant))?,
            );
        }
    }

    let mut rows = Vec::new();
    for (&variant, variant_reports) in &reports {
        for (i, report) in variant_reports.iter().enumerate() {
            let predicted = report.episode_set();
            let scored = evaluate(&predicted, &truth_sets[i]);
            let (gt_p, gt_r) = match &embedded {
                Some(truth_eps) => {
                    let e = evaluate(&predicted, truth_eps);
                    (Some(e.precision), Some(e.recall))
                }
                None => (None, None),
            };
            rows.push(SummaryRow {
                variant,
                window: report.window.end_batch,
                partial: report.flags.partial_window,
                precision: scored.precision,
                recall: scored.recall,
                gt_precision: gt_p,
                gt_recall: gt_r,
                batch_seconds: report.batch_seconds,
                tracked_nodes: report.tracked_nodes,
                flags: report.flags.to_string(),
            });
        }
    }

    fs::create_dir_all(&cfg.report_dir)?;
    for (&variant, variant_reports) in &reports {
        write_variant_csv(&cfg.report_dir, variant, variant_reports, &symbols)?;
    }
    write_summary_csv(&cfg.report_dir, &rows)?;
    write_reference_csv(&cfg.report_dir, &alg0_reports, &truth_sets)?;
    write_averages_csv(&cfg.report_dir, &rows)?;
    if let Some(text) = truth_export {
        fs::write(cfg.report_dir.join("ground_truth.csv"), text)?;
    }

    Ok(ExperimentSummary {
        rows,
        reports,
        report_dir: cfg.report_dir.clone(),
        symbols,
    })
}

fn guard_window_cap(batches: &[Batch], m: u32, cap: u64) -> Result<()> {
    let mut worst = 0u64;
    for (i, _) in batches.iter().enumerate() {
        let first = i.saturating_sub(m as usize - 1);
        let total: u64 = batches[first..=i]
            .iter()
            .map(|b| b.events.len() as u64)
            .sum();
        worst = worst.max(total);
    }
    if worst > cap {
        return Err(Error::Config(format!(
            "a window holds {worst} events, above the cap of {cap}; raise \
             window_event_cap or shrink the batch span"
        )));
    }
    Ok(())
}

fn write_variant_csv(
    dir: &Path,
    variant: Variant,
    reports: &[WindowReport],
    symbols: &SymbolTable,
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(dir.join(format!("{variant}.csv")))?);
    writeln!(
        w,
        "window_id,rank,episode,window_freq,f_k,f_min,delta_used,flags"
    )?;
    for report in reports {
        for (rank, (ep, freq)) in report.ranked.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                report.window.end_batch,
                rank + 1,
                ep.render(symbols),
                freq,
                report.f_k,
                report.f_min,
                report.delta_used,
                report.flags
            )?;
        }
    }
    Ok(())
}

fn write_summary_csv(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(dir.join("summary.csv"))?);
    writeln!(
        w,
        "variant,window,precision,recall,gt_precision,gt_recall,batch_seconds,tracked_nodes,flags"
    )?;
    for r in rows {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{:.4},{:.4},{},{},{:.6},{},{}",
            r.variant,
            r.window,
            r.precision,
            r.recall,
            fmt_opt(r.gt_precision),
            fmt_opt(r.gt_recall),
            r.batch_seconds,
            r.tracked_nodes,
            r.flags
        )?;
    }
    Ok(())
}

/// The "previous window predicts the current one" self-reference curve.
fn write_reference_csv(
    dir: &Path,
    alg0: &[WindowReport],
    truth_sets: &[BTreeSet<Episode>],
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(dir.join("reference.csv"))?);
    writeln!(w, "window,precision,recall")?;
    for i in 1..alg0.len() {
        let scored = evaluate(&truth_sets[i - 1], &truth_sets[i]);
        writeln!(
            w,
            "{},{:.4},{:.4}",
            alg0[i].window.end_batch, scored.precision, scored.recall
        )?;
    }
    Ok(())
}

fn write_averages_csv(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut per_variant: BTreeMap<Variant, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.partial) {
        per_variant.entry(r.variant).or_default().push(r);
    }
    let mut w = BufWriter::new(fs::File::create(dir.join("averages.csv"))?);
    writeln!(
        w,
        "variant,windows,mean_precision,mean_recall,mean_batch_seconds,mean_tracked_nodes"
    )?;
    for (variant, rows) in per_variant {
        let n = rows.len() as f64;
        if rows.is_empty() {
            continue;
        }
        writeln!(
            w,
            "{},{},{:.4},{:.4},{:.6},{:.1}",
            variant,
            rows.len(),
            rows.iter().map(|r| r.precision).sum::<f64>() / n,
            rows.iter().map(|r| r.recall).sum::<f64>() / n,
            rows.iter().map(|r| r.batch_seconds).sum::<f64>() / n,
            rows.iter().map(|r| r.tracked_nodes as f64).sum::<f64>() / n,
        )?;
    }
    Ok(())
}

/// Best-effort resident set size in kilobytes (Linux), for curious eyes;
/// structural node counts are the memory metric reports rely on.
pub fn resident_kb() -> Option<u64> {
    let text = fs::read_to_string("/proc/self/statm").ok()?;
    let pages: u64 = text.split_whitespace().nth(1)?.parse().ok()?;
    Some(pages * 4096 / 1024)
}

/// Reads CSV text and blanks the wall-time columns, for determinism checks.
pub fn strip_timing_columns(csv_text: &str) -> String {
    let mut lines = csv_text.lines();
    let Some(header) = lines.next() else {
        return String::new();
    };
    let columns: Vec<&str> = header.split(',').collect();
    let timing: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, name)| name.contains("seconds"))
        .map(|(i, _)| i)
        .collect();
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for line in lines {
        let mut fields: Vec<&str> = line.split(',').collect();
        for &i in &timing {
            if i < fields.len() {
                fields[i] = "";
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
