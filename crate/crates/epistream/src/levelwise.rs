//! From-scratch level-wise (Apriori) mining over one batch or a window.
//!
//! This is the bootstrap path for the first batch, the ground-truth baseline
//! that re-mines a whole window per slide, and the reference the incremental
//! engine is checked against. Frequency over several batches is the *sum* of
//! per-batch counts, never a count over the concatenated events.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::count::count_many;
use crate::episode::{generate_candidates, Episode, NewlyFrequent};
use crate::event::Batch;
use crate::lattice::{NodeStatus, PatternLattice};

/// Frequent and border episodes of one level, with their counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelSets {
    pub frequent: BTreeMap<Episode, u64>,
    pub border: BTreeMap<Episode, u64>,
}

/// Outcome of mining at a fixed threshold.
#[derive(Debug, Clone)]
pub struct MineResult {
    /// `levels[i]` holds the size-`i+1` sets.
    pub levels: Vec<LevelSets>,
    /// Distinct episodes counted (all levels).
    pub patterns_counted: usize,
}

/// Sums per-batch counts of `patterns` over `batches`.
pub fn count_summed<'a, I>(patterns: I, batches: &[&Batch]) -> BTreeMap<Episode, u64>
where
    I: IntoIterator<Item = &'a Episode>,
{
    let pats: Vec<&Episode> = patterns.into_iter().collect();
    let mut total: BTreeMap<Episode, u64> = pats.iter().map(|&p| (p.clone(), 0)).collect();
    for batch in batches {
        for (ep, c) in count_many(pats.iter().copied(), &batch.events) {
            *total.get_mut(&ep).expect("counted episode was requested") += c;
        }
    }
    total
}

/// Level-wise mining of all episodes with summed frequency >= `f_min` over
/// `batches`, up to `max_level` nodes. Level-1 candidates are the event types
/// present in the batches; higher levels come from the full Apriori join.
pub fn mine_levels(batches: &[&Batch], f_min: u64, max_level: usize) -> MineResult {
    let f_min = f_min.max(1);
    let mut levels = Vec::with_capacity(max_level);
    let mut patterns_counted = 0usize;

    // level 1 by direct tally
    let mut singles: BTreeMap<Episode, u64> = BTreeMap::new();
    for batch in batches {
        for ev in &batch.events {
            *singles.entry(Episode::singleton(ev.ty)).or_insert(0) += 1;
        }
    }
    patterns_counted += singles.len();
    let mut level = LevelSets::default();
    for (ep, c) in singles {
        if c >= f_min {
            level.frequent.insert(ep, c);
        } else {
            level.border.insert(ep, c);
        }
    }
    levels.push(level);

    for _ in 2..=max_level {
        let prev_frequent: BTreeSet<Episode> =
            levels.last().unwrap().frequent.keys().cloned().collect();
        if prev_frequent.is_empty() {
            levels.push(LevelSets::default());
            continue;
        }
        let cands = generate_candidates(&prev_frequent, NewlyFrequent::All)
            .expect("level sets are uniform");
        patterns_counted += cands.episodes.len();
        let counts = count_summed(cands.episodes.iter(), batches);
        let mut level = LevelSets::default();
        for (ep, c) in counts {
            if c >= f_min {
                level.frequent.insert(ep, c);
            } else {
                level.border.insert(ep, c);
            }
        }
        levels.push(level);
    }

    MineResult {
        levels,
        patterns_counted,
    }
}

/// Outcome of top-k mining by progressive threshold lowering.
#[derive(Debug, Clone)]
pub struct TopkMine {
    /// Level sets of the final mining pass (threshold `f_min`).
    pub levels: Vec<LevelSets>,
    /// Frequency of the k-th most frequent size-`max_level` episode.
    pub f_k: u64,
    /// Threshold of the final pass: `max(1, ceil(f_k - theta))`.
    pub f_min: u64,
    /// Lowering rounds performed before `f_k` was known.
    pub rounds: u32,
    /// Set when fewer than `k` episodes exist even at threshold 1.
    pub shortfall: bool,
    /// Largest number of episodes counted in any single pass.
    pub peak_patterns: usize,
}

/// Finds the top-k size-`max_level` episodes by progressively lowering the
/// threshold, then re-mines once at `f_k - theta_of(f_k)`.
///
/// The threshold starts at the k-th highest singleton frequency and shrinks
/// by the factor `1 - epsilon_step` per round until at least `k` episodes of
/// the target size are frequent (or the threshold bottoms out at 1, which is
/// flagged as a shortfall). `theta_of` receives the discovered `f_k`, since
/// policies may scale their slack by it.
pub fn mine_topk(
    batches: &[&Batch],
    k: usize,
    max_level: usize,
    epsilon_step: f64,
    theta_of: impl Fn(u64) -> f64,
) -> TopkMine {
    assert!(k >= 1 && (0.0..1.0).contains(&epsilon_step) && epsilon_step > 0.0);

    let mut singleton_counts: BTreeMap<Episode, u64> = BTreeMap::new();
    for batch in batches {
        for ev in &batch.events {
            *singleton_counts.entry(Episode::singleton(ev.ty)).or_insert(0) += 1;
        }
    }
    let mut ordered: Vec<u64> = singleton_counts.values().copied().collect();
    ordered.sort_unstable_by(|a, b| b.cmp(a));
    let start = if ordered.is_empty() {
        1
    } else {
        ordered[(k - 1).min(ordered.len() - 1)]
    };

    let mut threshold = start.max(1) as f64;
    let mut rounds = 0u32;
    let mut last_int = u64::MAX;
    let mut peak_patterns = 0usize;
    let mined = loop {
        let t_int = (threshold.ceil() as u64).max(1);
        if t_int != last_int {
            let res = mine_levels(batches, t_int, max_level);
            peak_patterns = peak_patterns.max(res.patterns_counted);
            rounds += 1;
            last_int = t_int;
            if res.levels[max_level - 1].frequent.len() >= k || t_int == 1 {
                break res;
            }
        }
        threshold *= 1.0 - epsilon_step;
    };

    let top_level = &mined.levels[max_level - 1].frequent;
    let mut counts: Vec<u64> = top_level.values().copied().collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let shortfall = counts.len() < k;
    let f_k = if counts.is_empty() {
        0
    } else {
        counts[(k - 1).min(counts.len() - 1)]
    };

    let f_min = threshold_from(f_k, theta_of(f_k));
    let final_res = mine_levels(batches, f_min, max_level);
    peak_patterns = peak_patterns.max(final_res.patterns_counted);

    TopkMine {
        levels: final_res.levels,
        f_k,
        f_min,
        rounds,
        shortfall,
        peak_patterns,
    }
}

/// `max(1, ceil(f_k - theta))`, the batch threshold every policy reduces to.
pub fn threshold_from(f_k: u64, theta: f64) -> u64 {
    let x = f_k as f64 - theta;
    if x <= 1.0 {
        1
    } else {
        x.ceil() as u64
    }
}

/// Builds a lattice from freshly mined level sets, recording batch-`s` counts.
pub fn lattice_from_levels(levels: &[LevelSets], s: u32, m: usize) -> PatternLattice {
    let mut lattice = PatternLattice::new(levels.len(), m);
    for sets in levels {
        for (ep, &c) in &sets.frequent {
            lattice.insert(ep, NodeStatus::Frequent, s, c);
        }
        for (ep, &c) in &sets.border {
            lattice.insert(ep, NodeStatus::Border, s, c);
        }
    }
    lattice
}

/// Snapshot of a lattice as level sets with the batch-`s` counts, for
/// comparison against from-scratch mining.
pub fn lattice_to_levels(lattice: &PatternLattice, s: u32) -> Vec<LevelSets> {
    (1..=lattice.max_level())
        .map(|level| {
            let mut sets = LevelSets::default();
            for (ep, node) in lattice.level(level) {
                let count = node.count_at(s).unwrap_or(0);
                match node.status {
                    NodeStatus::Frequent => sets.frequent.insert(ep.clone(), count),
                    NodeStatus::Border => sets.border.insert(ep.clone(), count),
                };
            }
            sets
        })
        .collect()
}
