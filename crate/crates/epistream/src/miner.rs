//! The streaming mining engine.
//!
//! The first batch is mined from scratch by progressive threshold lowering;
//! every later batch updates the carried lattice: demote what fell below the
//! new threshold (deleting its super-episodes), promote borders and fresh
//! candidates that cleared it, and generate new candidates anchored at the
//! newly frequent episodes only. Episode sets are reported per window from
//! the per-node count rings.
//!
//! Six variants share this crate's counting and reporting machinery:
//!
//! - `Alg0` re-mines every window from all of its events (the baseline the
//!   others are judged against),
//! - `Alg1` reports from the union of batchwise top-k sets,
//! - `Alg2` additionally keeps counting an episode once it entered some
//!   batch top-k, dropping it after `m` consecutive misses,
//! - `Alg3`/`Alg4`/`Alg5` run the incremental lattice with batch thresholds
//!   `f_k - 2*delta`, `f_k - 2(m-v)*delta` and the heuristic
//!   `f_k - m(2 - v/m - (v/m)^2)*delta` respectively.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::str::FromStr;
use std::time::Instant;

use crate::count::count_many;
use crate::episode::{generate_candidates, Episode, NewlyFrequent};
use crate::event::{batchify, window_of, Batch, Event, EventTypeId, Window};
use crate::lattice::{NodeStatus, PatternLattice};
use crate::levelwise::{lattice_from_levels, mine_topk, threshold_from};
use crate::{Error, Result};

/// The algorithm variants compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Alg0,
    Alg1,
    Alg2,
    Alg3,
    Alg4,
    Alg5,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Alg0,
        Variant::Alg1,
        Variant::Alg2,
        Variant::Alg3,
        Variant::Alg4,
        Variant::Alg5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Alg0 => "alg0",
            Variant::Alg1 => "alg1",
            Variant::Alg2 => "alg2",
            Variant::Alg3 => "alg3",
            Variant::Alg4 => "alg4",
            Variant::Alg5 => "alg5",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alg0" | "0" => Ok(Variant::Alg0),
            "alg1" | "1" => Ok(Variant::Alg1),
            "alg2" | "2" => Ok(Variant::Alg2),
            "alg3" | "3" => Ok(Variant::Alg3),
            "alg4" | "4" => Ok(Variant::Alg4),
            "alg5" | "5" => Ok(Variant::Alg5),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

/// How the per-batch mining threshold is derived from `f_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdPolicy {
    /// `f_k - 2(m-1)*delta`: no top-k episode of any window batch is missed.
    ExactTopK,
    /// `f_k - 2(m-v)*delta`: no `(v,k)`-persistent episode is missed.
    Persistence,
    /// `f_k - 2*delta`: the next batch's top-k is contained in this batch's
    /// frequent set.
    NextBatch,
    /// `f_k - m(2 - v/m - (v/m)^2)*delta`.
    Heuristic,
}

/// The threshold slack `theta` for a policy (the threshold is `f_k - theta`).
pub fn theta(policy: ThresholdPolicy, m: u32, v: u32, delta: f64) -> f64 {
    match policy {
        ThresholdPolicy::ExactTopK => 2.0 * (m - 1) as f64 * delta,
        ThresholdPolicy::Persistence => 2.0 * (m.saturating_sub(v)) as f64 * delta,
        ThresholdPolicy::NextBatch => 2.0 * delta,
        ThresholdPolicy::Heuristic => {
            let r = v as f64 / m as f64;
            m as f64 * (2.0 - r - r * r) * delta
        }
    }
}

/// Batch frequency threshold `max(1, ceil(f_k - theta))` for a policy.
pub fn threshold(policy: ThresholdPolicy, f_k: u64, m: u32, v: u32, delta: f64) -> u64 {
    threshold_from(f_k, theta(policy, m, v, delta))
}

/// How `delta` (the assumed maximum batch-to-batch frequency change) is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    Fixed(f64),
    /// 75th-percentile estimate from consecutive-batch count differences;
    /// before the first estimate, `initial_frac * f_k` of the first batch.
    Estimated { initial_frac: f64 },
}

/// Rolling state of the delta estimator.
#[derive(Debug, Clone)]
pub struct DeltaState {
    pub current: f64,
    pub min_samples: usize,
    /// Set when the last update kept the previous value for lack of samples.
    pub fallback: bool,
    history: Vec<f64>,
}

impl DeltaState {
    pub fn new(initial: f64, min_samples: usize) -> Self {
        DeltaState {
            current: initial,
            min_samples,
            fallback: false,
            history: Vec::new(),
        }
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }
}

/// Updates `state` from the absolute count differences of episodes present
/// in both maps and returns the new delta.
///
/// The estimate is the nearest-rank 75th percentile (the `ceil(0.75 n)`-th
/// smallest difference). With fewer than `state.min_samples` common episodes
/// the previous value is kept and `state.fallback` is set.
pub fn estimate_delta(
    prev: &BTreeMap<Episode, u64>,
    cur: &BTreeMap<Episode, u64>,
    state: &mut DeltaState,
) -> f64 {
    let mut diffs: Vec<u64> = prev
        .iter()
        .filter_map(|(ep, &p)| cur.get(ep).map(|&c| p.abs_diff(c)))
        .collect();
    if diffs.len() < state.min_samples {
        state.fallback = true;
        return state.current;
    }
    diffs.sort_unstable();
    let rank = ((0.75 * diffs.len() as f64).ceil() as usize).clamp(1, diffs.len());
    state.current = diffs[rank - 1] as f64;
    state.fallback = false;
    state.history.push(state.current);
    state.current
}

/// Engine configuration shared by all variants.
#[derive(Debug, Clone)]
pub struct MinerConfig {
    /// Number of top episodes to report per window.
    pub k: usize,
    /// Episode size to mine (number of nodes).
    pub episode_size: usize,
    /// Batches per window.
    pub window_batches: u32,
    /// Batch span in seconds.
    pub batch_span: f64,
    /// Persistence parameter `v` (required for Alg4/Alg5).
    pub persistence: Option<u32>,
    pub variant: Variant,
    pub delta_policy: DeltaPolicy,
    /// Multiplicative threshold-lowering step for top-k bootstraps.
    pub epsilon_step: f64,
    /// Minimum common-episode sample for a delta estimate.
    pub min_delta_samples: usize,
}

impl MinerConfig {
    pub fn new(variant: Variant, k: usize, episode_size: usize, window_batches: u32) -> Self {
        MinerConfig {
            k,
            episode_size,
            window_batches,
            batch_span: 1.0,
            persistence: None,
            variant,
            delta_policy: DeltaPolicy::Estimated { initial_frac: 0.05 },
            epsilon_step: 0.1,
            min_delta_samples: 4,
        }
    }

    pub fn with_persistence(mut self, v: u32) -> Self {
        self.persistence = Some(v);
        self
    }

    pub fn with_delta(mut self, policy: DeltaPolicy) -> Self {
        self.delta_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.episode_size < 1 {
            return Err(Error::Config("episode size must be >= 1".into()));
        }
        if self.window_batches < 1 {
            return Err(Error::Config("window must span >= 1 batch".into()));
        }
        if !(self.batch_span > 0.0) {
            return Err(Error::Config("batch span must be positive".into()));
        }
        if !(self.epsilon_step > 0.0 && self.epsilon_step < 1.0) {
            return Err(Error::Config("epsilon step must lie in (0, 1)".into()));
        }
        if let Some(v) = self.persistence {
            if v < 1 || v > self.window_batches {
                return Err(Error::Config(format!(
                    "persistence v={v} must satisfy 1 <= v <= m={}",
                    self.window_batches
                )));
            }
        }
        match self.variant {
            Variant::Alg4 | Variant::Alg5 if self.persistence.is_none() => {
                return Err(Error::Config(format!(
                    "variant {} requires the persistence parameter v",
                    self.variant
                )));
            }
            _ => {}
        }
        if let DeltaPolicy::Fixed(d) = self.delta_policy {
            if !(d >= 0.0) {
                return Err(Error::Config("fixed delta must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// The threshold policy the variant applies (incremental variants only).
    pub fn policy(&self) -> Option<ThresholdPolicy> {
        match self.variant {
            Variant::Alg3 => Some(ThresholdPolicy::NextBatch),
            Variant::Alg4 => Some(ThresholdPolicy::Persistence),
            Variant::Alg5 => Some(ThresholdPolicy::Heuristic),
            _ => None,
        }
    }

    fn theta_for(&self, policy: ThresholdPolicy, delta: f64) -> f64 {
        let v = self.persistence.unwrap_or(1);
        theta(policy, self.window_batches, v, delta)
    }
}

/// Report qualifiers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReportFlags {
    /// Fewer than `m` batches seen so far.
    pub partial_window: bool,
    /// Fewer than `k` episodes were available at some decision point.
    pub shortfall: bool,
    /// The delta estimator kept its previous value for lack of samples.
    pub delta_fallback: bool,
}

impl std::fmt::Display for ReportFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.partial_window {
            parts.push("partial");
        }
        if self.shortfall {
            parts.push("shortfall");
        }
        if self.delta_fallback {
            parts.push("delta_fallback");
        }
        if parts.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&parts.join("|"))
        }
    }
}

/// Ranked episodes of one window plus the numbers that produced them.
#[derive(Debug, Clone)]
pub struct WindowReport {
    pub window: Window,
    /// `(episode, window frequency)` in descending frequency, ties included,
    /// lexicographic within a tie.
    pub ranked: Vec<(Episode, u64)>,
    /// The `f_k` the variant used this batch (batch-level for incremental
    /// variants, window-level for Alg0).
    pub f_k: u64,
    /// The mining threshold used this batch.
    pub f_min: u64,
    pub delta_used: f64,
    pub flags: ReportFlags,
    /// Wall time spent processing this batch/slide.
    pub batch_seconds: f64,
    /// Lattice nodes (incremental variants) or patterns tracked/counted.
    pub tracked_nodes: usize,
}

impl WindowReport {
    pub fn episode_set(&self) -> BTreeSet<Episode> {
        self.ranked.iter().map(|(ep, _)| ep.clone()).collect()
    }
}

/// Per-batch numbers from one incremental update.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub batch: u32,
    pub f_k: u64,
    pub f_min: u64,
    pub delta_used: f64,
    pub shortfall: bool,
    pub delta_fallback: bool,
    /// Episodes that newly became frequent this batch (all levels).
    pub newly_frequent: usize,
    /// Candidates generated this batch (all levels).
    pub candidates_generated: usize,
    pub lattice_nodes: usize,
}

/// Ranks the level-`len` frequent episodes of `lattice` by window frequency
/// and keeps everything at or above the k-th value (ties included).
pub fn report_topk_window(
    lattice: &PatternLattice,
    window: &Window,
    k: usize,
    len: usize,
) -> (Vec<(Episode, u64)>, bool) {
    let mut ranked: Vec<(Episode, u64)> = lattice
        .episodes_with_status(len, NodeStatus::Frequent)
        .map(|(ep, _)| (ep.clone(), lattice.window_frequency(ep, window).value))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let shortfall = ranked.len() < k;
    if ranked.len() > k {
        let cut = ranked[k - 1].1;
        ranked.retain(|&(_, c)| c >= cut);
    }
    (ranked, shortfall)
}

/// The incremental engine behind Alg3/Alg4/Alg5.
pub struct Miner {
    cfg: MinerConfig,
    policy: ThresholdPolicy,
    lattice: Option<PatternLattice>,
    delta: DeltaState,
    /// Level-`episode_size` counts from the previous batch, for estimation.
    prev_top_counts: BTreeMap<Episode, u64>,
    last_outcome: Option<BatchOutcome>,
}

impl Miner {
    pub fn new(cfg: MinerConfig) -> Result<Self> {
        cfg.validate()?;
        let policy = cfg.policy().ok_or_else(|| {
            Error::Config(format!(
                "variant {} is not an incremental lattice variant",
                cfg.variant
            ))
        })?;
        let initial_delta = match cfg.delta_policy {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Estimated { .. } => 0.0,
        };
        Ok(Miner {
            delta: DeltaState::new(initial_delta, cfg.min_delta_samples),
            cfg,
            policy,
            lattice: None,
            prev_top_counts: BTreeMap::new(),
            last_outcome: None,
        })
    }

    /// Engine with an explicit threshold policy (e.g. [`ThresholdPolicy::ExactTopK`],
    /// which no numbered variant maps to directly but equals Alg4 at `v = 1`).
    pub fn with_policy(cfg: MinerConfig, policy: ThresholdPolicy) -> Result<Self> {
        cfg.validate()?;
        let initial_delta = match cfg.delta_policy {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Estimated { .. } => 0.0,
        };
        Ok(Miner {
            delta: DeltaState::new(initial_delta, cfg.min_delta_samples),
            cfg,
            policy,
            lattice: None,
            prev_top_counts: BTreeMap::new(),
            last_outcome: None,
        })
    }

    pub fn lattice(&self) -> Option<&PatternLattice> {
        self.lattice.as_ref()
    }

    pub fn config(&self) -> &MinerConfig {
        &self.cfg
    }

    pub fn delta_state(&self) -> &DeltaState {
        &self.delta
    }

    /// Frequent episodes currently at the target level.
    pub fn frequent_top_level(&self) -> BTreeSet<Episode> {
        match &self.lattice {
            None => BTreeSet::new(),
            Some(lat) => lat
                .episodes_with_status(self.cfg.episode_size, NodeStatus::Frequent)
                .map(|(ep, _)| ep.clone())
                .collect(),
        }
    }

    /// Processes the next batch: full mining for the first batch, the
    /// incremental lattice update afterwards.
    pub fn process_batch(&mut self, batch: &Batch) -> Result<BatchOutcome> {
        let outcome = if self.lattice.is_none() {
            self.mine_first_batch(batch)?
        } else {
            self.incremental_update(batch)?
        };
        self.last_outcome = Some(outcome.clone());
        Ok(outcome)
    }

    fn mine_first_batch(&mut self, batch: &Batch) -> Result<BatchOutcome> {
        let cfg = &self.cfg;
        let ell = cfg.episode_size;
        let policy = self.policy;
        let delta_of = |f_k: u64| match cfg.delta_policy {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Estimated { initial_frac } => initial_frac * f_k as f64,
        };
        let slice = [batch];
        let tk = mine_topk(&slice, cfg.k, ell, cfg.epsilon_step, |f_k| {
            self.cfg.theta_for(policy, delta_of(f_k))
        });
        let delta_used = delta_of(tk.f_k);
        self.delta.current = delta_used;

        let lattice = lattice_from_levels(&tk.levels, batch.index, cfg.window_batches as usize);
        self.prev_top_counts = tk.levels[ell - 1]
            .frequent
            .iter()
            .chain(tk.levels[ell - 1].border.iter())
            .map(|(ep, &c)| (ep.clone(), c))
            .collect();
        let nodes = lattice.node_count();
        self.lattice = Some(lattice);

        Ok(BatchOutcome {
            batch: batch.index,
            f_k: tk.f_k,
            f_min: tk.f_min,
            delta_used,
            shortfall: tk.shortfall,
            delta_fallback: false,
            newly_frequent: 0,
            candidates_generated: 0,
            lattice_nodes: nodes,
        })
    }

    fn incremental_update(&mut self, batch: &Batch) -> Result<BatchOutcome> {
        let ell = self.cfg.episode_size;
        let s = batch.index;
        let k = self.cfg.k;
        let lattice = self.lattice.as_mut().expect("bootstrap ran");

        // estimate f_k from the carried frequent top-level episodes
        let carried: Vec<Episode> = lattice
            .episodes_with_status(ell, NodeStatus::Frequent)
            .map(|(ep, _)| ep.clone())
            .collect();
        let carried_counts = count_many(carried.iter(), &batch.events);

        let delta_used = match self.cfg.delta_policy {
            DeltaPolicy::Fixed(d) => {
                self.delta.current = d;
                self.delta.fallback = false;
                d
            }
            DeltaPolicy::Estimated { .. } => {
                estimate_delta(&self.prev_top_counts, &carried_counts, &mut self.delta)
            }
        };

        let mut ordered: Vec<u64> = carried_counts.values().copied().collect();
        ordered.sort_unstable_by(|a, b| b.cmp(a));
        let shortfall = ordered.len() < k;
        let f_k = if ordered.is_empty() {
            0
        } else {
            ordered[(k - 1).min(ordered.len() - 1)]
        };
        let f_min = threshold_from(f_k, self.cfg.theta_for(self.policy, delta_used));

        // level-1 candidates: event types never seen by the lattice
        let known: BTreeSet<EventTypeId> = lattice.level1_types();
        let present: BTreeSet<EventTypeId> = batch.events.iter().map(|e| e.ty).collect();
        let mut candidates: BTreeSet<Episode> = present
            .difference(&known)
            .map(|&ty| Episode::singleton(ty))
            .collect();

        let mut newly_frequent_total = 0usize;
        let mut candidates_total = candidates.len();

        for level in 1..=ell {
            let frequent_prev: Vec<Episode> = lattice
                .episodes_with_status(level, NodeStatus::Frequent)
                .map(|(ep, _)| ep.clone())
                .collect();
            let border_prev: Vec<Episode> = lattice
                .episodes_with_status(level, NodeStatus::Border)
                .map(|(ep, _)| ep.clone())
                .collect();

            // one pass over the batch for everything this level tracks
            let counts = if level == ell {
                let mut counts =
                    count_many(border_prev.iter().chain(candidates.iter()), &batch.events);
                counts.extend(
                    carried_counts
                        .iter()
                        .map(|(ep, &c)| (ep.clone(), c)),
                );
                counts
            } else {
                count_many(
                    frequent_prev
                        .iter()
                        .chain(border_prev.iter())
                        .chain(candidates.iter()),
                    &batch.events,
                )
            };

            let mut newly_frequent: BTreeSet<Episode> = BTreeSet::new();

            for ep in &frequent_prev {
                let c = counts[ep];
                if level == 1 && c == 0 {
                    // type absent from this batch: drop it entirely; candidate
                    // seeding re-discovers it when it reappears
                    lattice.demote_to_border(ep, s);
                    lattice.remove(ep);
                } else if c >= f_min {
                    lattice.record_count(ep, s, c);
                } else {
                    lattice.demote_to_border(ep, s);
                    lattice.record_count(ep, s, c);
                }
            }

            for ep in &border_prev {
                let c = counts[ep];
                if level == 1 && c == 0 {
                    lattice.remove(ep);
                } else if c >= f_min {
                    lattice.promote(ep, c, s);
                    newly_frequent.insert(ep.clone());
                } else {
                    lattice.record_count(ep, s, c);
                }
            }

            for ep in &candidates {
                let c = counts[ep];
                if c >= f_min {
                    lattice.insert(ep, NodeStatus::Frequent, s, c);
                    newly_frequent.insert(ep.clone());
                } else {
                    lattice.insert(ep, NodeStatus::Border, s, c);
                }
            }

            newly_frequent_total += newly_frequent.len();

            if level < ell {
                let frequent_now: BTreeSet<Episode> = lattice
                    .episodes_with_status(level, NodeStatus::Frequent)
                    .map(|(ep, _)| ep.clone())
                    .collect();
                let generated =
                    generate_candidates(&frequent_now, NewlyFrequent::Only(&newly_frequent))?;
                candidates = generated
                    .episodes
                    .into_iter()
                    .filter(|ep| lattice.node(ep).is_none())
                    .collect();
                candidates_total += candidates.len();
            }
        }

        self.prev_top_counts = lattice
            .level(ell)
            .iter()
            .filter_map(|(ep, node)| node.count_at(s).map(|c| (ep.clone(), c)))
            .collect();

        Ok(BatchOutcome {
            batch: s,
            f_k,
            f_min,
            delta_used,
            shortfall,
            delta_fallback: self.delta.fallback,
            newly_frequent: newly_frequent_total,
            candidates_generated: candidates_total,
            lattice_nodes: self.lattice.as_ref().unwrap().node_count(),
        })
    }

    /// Window report for the window ending at the last processed batch.
    pub fn window_report(&self) -> Option<WindowReport> {
        let outcome = self.last_outcome.as_ref()?;
        let lattice = self.lattice.as_ref()?;
        let window = window_of(outcome.batch, self.cfg.window_batches);
        let (ranked, report_shortfall) =
            report_topk_window(lattice, &window, self.cfg.k, self.cfg.episode_size);
        Some(WindowReport {
            window,
            ranked,
            f_k: outcome.f_k,
            f_min: outcome.f_min,
            delta_used: outcome.delta_used,
            flags: ReportFlags {
                partial_window: window.is_partial(),
                shortfall: outcome.shortfall || report_shortfall,
                delta_fallback: outcome.delta_fallback,
            },
            batch_seconds: 0.0,
            tracked_nodes: lattice.node_count(),
        })
    }
}

/// Runs a variant over a pre-batched stream, one report per batch.
pub fn run_variant_on_batches(batches: &[Batch], cfg: &MinerConfig) -> Result<Vec<WindowReport>> {
    cfg.validate()?;
    match cfg.variant {
        Variant::Alg0 => run_alg0(batches, cfg),
        Variant::Alg1 => run_alg1(batches, cfg),
        Variant::Alg2 => run_alg2(batches, cfg),
        Variant::Alg3 | Variant::Alg4 | Variant::Alg5 => run_incremental(batches, cfg),
    }
}

/// Batchifies `events` with the configured span and runs the variant.
pub fn run_variant(
    events: &[Event],
    cfg: &MinerConfig,
    origin: Option<f64>,
) -> Result<Vec<WindowReport>> {
    let batches = batchify(events, cfg.batch_span, origin)?;
    run_variant_on_batches(&batches, cfg)
}

fn rank_and_cut(mut ranked: Vec<(Episode, u64)>, k: usize) -> Vec<(Episode, u64)> {
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if ranked.len() > k {
        let cut = ranked[k - 1].1;
        ranked.retain(|&(_, c)| c >= cut);
    }
    ranked
}

fn run_alg0(batches: &[Batch], cfg: &MinerConfig) -> Result<Vec<WindowReport>> {
    let mut reports = Vec::with_capacity(batches.len());
    for batch in batches {
        let started = Instant::now();
        let window = window_of(batch.index, cfg.window_batches);
        let first = window.first_batch() as usize;
        let slice: Vec<&Batch> = batches[first - 1..batch.index as usize].iter().collect();
        let tk = mine_topk(&slice, cfg.k, cfg.episode_size, cfg.epsilon_step, |_| 0.0);
        let ranked: Vec<(Episode, u64)> = tk.levels[cfg.episode_size - 1]
            .frequent
            .iter()
            .filter(|&(_, &c)| c >= tk.f_k)
            .map(|(ep, &c)| (ep.clone(), c))
            .collect();
        let ranked = rank_and_cut(ranked, cfg.k);
        reports.push(WindowReport {
            window,
            ranked,
            f_k: tk.f_k,
            f_min: tk.f_min,
            delta_used: 0.0,
            flags: ReportFlags {
                partial_window: window.is_partial(),
                shortfall: tk.shortfall,
                delta_fallback: false,
            },
            batch_seconds: started.elapsed().as_secs_f64(),
            tracked_nodes: tk.peak_patterns,
        });
    }
    Ok(reports)
}

/// Batch top-k (ties included) with counts, by progressive lowering.
fn batch_topk(batch: &Batch, cfg: &MinerConfig) -> (BTreeMap<Episode, u64>, u64, u64, bool, usize) {
    let slice = [batch];
    let tk = mine_topk(&slice, cfg.k, cfg.episode_size, cfg.epsilon_step, |_| 0.0);
    let top: BTreeMap<Episode, u64> = tk.levels[cfg.episode_size - 1]
        .frequent
        .iter()
        .filter(|&(_, &c)| c >= tk.f_k)
        .map(|(ep, &c)| (ep.clone(), c))
        .collect();
    (top, tk.f_k, tk.f_min, tk.shortfall, tk.peak_patterns)
}

fn run_alg1(batches: &[Batch], cfg: &MinerConfig) -> Result<Vec<WindowReport>> {
    let m = cfg.window_batches as usize;
    let mut history: VecDeque<BTreeMap<Episode, u64>> = VecDeque::new();
    let mut reports = Vec::with_capacity(batches.len());
    for batch in batches {
        let started = Instant::now();
        let (top, f_k, f_min, shortfall, peak) = batch_topk(batch, cfg);
        history.push_back(top);
        if history.len() > m {
            history.pop_front();
        }
        let mut summed: BTreeMap<Episode, u64> = BTreeMap::new();
        for per_batch in &history {
            for (ep, &c) in per_batch {
                *summed.entry(ep.clone()).or_insert(0) += c;
            }
        }
        let tracked = summed.len();
        let ranked = rank_and_cut(summed.into_iter().collect(), cfg.k);
        let window = window_of(batch.index, cfg.window_batches);
        reports.push(WindowReport {
            window,
            ranked,
            f_k,
            f_min,
            delta_used: 0.0,
            flags: ReportFlags {
                partial_window: window.is_partial(),
                shortfall,
                delta_fallback: false,
            },
            batch_seconds: started.elapsed().as_secs_f64(),
            tracked_nodes: tracked.max(peak),
        });
    }
    Ok(reports)
}

fn run_alg2(batches: &[Batch], cfg: &MinerConfig) -> Result<Vec<WindowReport>> {
    struct Track {
        counts: VecDeque<(u32, u64)>,
        missed: u32,
    }
    let m = cfg.window_batches;
    let mut tracked: BTreeMap<Episode, Track> = BTreeMap::new();
    let mut reports = Vec::with_capacity(batches.len());
    for batch in batches {
        let started = Instant::now();
        let s = batch.index;
        let (top, f_k, f_min, shortfall, peak) = batch_topk(batch, cfg);

        let outside: Vec<Episode> = tracked
            .keys()
            .filter(|ep| !top.contains_key(*ep))
            .cloned()
            .collect();
        let outside_counts = count_many(outside.iter(), &batch.events);

        for (ep, &c) in &top {
            let entry = tracked.entry(ep.clone()).or_insert_with(|| Track {
                counts: VecDeque::new(),
                missed: 0,
            });
            entry.missed = 0;
            entry.counts.push_back((s, c));
            if entry.counts.len() > m as usize {
                entry.counts.pop_front();
            }
        }
        for ep in &outside {
            let entry = tracked.get_mut(ep).expect("tracked");
            entry.missed += 1;
            entry.counts.push_back((s, outside_counts[ep]));
            if entry.counts.len() > m as usize {
                entry.counts.pop_front();
            }
        }
        tracked.retain(|_, t| t.missed < m);

        let window = window_of(s, cfg.window_batches);
        let range = window.batches();
        let summed: Vec<(Episode, u64)> = tracked
            .iter()
            .map(|(ep, t)| {
                let sum = t
                    .counts
                    .iter()
                    .filter(|(b, _)| range.contains(b))
                    .map(|&(_, c)| c)
                    .sum();
                (ep.clone(), sum)
            })
            .collect();
        let tracked_now = tracked.len();
        let ranked = rank_and_cut(summed, cfg.k);
        reports.push(WindowReport {
            window,
            ranked,
            f_k,
            f_min,
            delta_used: 0.0,
            flags: ReportFlags {
                partial_window: window.is_partial(),
                shortfall,
                delta_fallback: false,
            },
            batch_seconds: started.elapsed().as_secs_f64(),
            tracked_nodes: tracked_now.max(peak),
        });
    }
    Ok(reports)
}

fn run_incremental(batches: &[Batch], cfg: &MinerConfig) -> Result<Vec<WindowReport>> {
    let mut miner = Miner::new(cfg.clone())?;
    let mut reports = Vec::with_capacity(batches.len());
    for batch in batches {
        let started = Instant::now();
        miner.process_batch(batch)?;
        let mut report = miner.window_report().expect("batch processed");
        report.batch_seconds = started.elapsed().as_secs_f64();
        reports.push(report);
    }
    Ok(reports)
}
