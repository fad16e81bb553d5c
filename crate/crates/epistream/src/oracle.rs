//! Exhaustive reference computations over the full episode universe.
//!
//! These enumerate every size-`len` episode over a given alphabet and count
//! them all, so they are only usable for small alphabets. They exist to
//! verify the streaming engine: per-batch top-k certification, true window
//! top-k, and the true maximum batch-to-batch frequency change.

use std::collections::{BTreeMap, BTreeSet};

use crate::count::count_many;
use crate::episode::Episode;
use crate::event::{Batch, EventTypeId};

/// All `|alphabet|^len` episodes of size `len`.
pub fn universe_episodes(alphabet: &[EventTypeId], len: usize) -> Vec<Episode> {
    assert!(len >= 1);
    let mut out: Vec<Vec<EventTypeId>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * alphabet.len());
        for prefix in &out {
            for &ty in alphabet {
                let mut nodes = prefix.clone();
                nodes.push(ty);
                next.push(nodes);
            }
        }
        out = next;
    }
    out.into_iter().map(Episode::new).collect()
}

/// Counts of every size-`len` episode over `alphabet` in one batch.
pub fn exhaustive_batch_counts(
    batch: &Batch,
    alphabet: &[EventTypeId],
    len: usize,
) -> BTreeMap<Episode, u64> {
    let universe = universe_episodes(alphabet, len);
    count_many(universe.iter(), &batch.events)
}

/// The k-th highest count and the tie-included top-k set of one batch.
pub fn exhaustive_batch_topk(
    batch: &Batch,
    alphabet: &[EventTypeId],
    k: usize,
    len: usize,
) -> (BTreeSet<Episode>, u64) {
    topk_of_counts(&exhaustive_batch_counts(batch, alphabet, len), k)
}

/// True top-k over a window: counts summed per batch across `batches`.
pub fn exhaustive_window_topk(
    batches: &[&Batch],
    alphabet: &[EventTypeId],
    k: usize,
    len: usize,
) -> (BTreeSet<Episode>, u64) {
    let universe = universe_episodes(alphabet, len);
    let mut sums: BTreeMap<Episode, u64> = universe.iter().map(|ep| (ep.clone(), 0)).collect();
    for batch in batches {
        for (ep, c) in count_many(universe.iter(), &batch.events) {
            *sums.get_mut(&ep).expect("requested") += c;
        }
    }
    topk_of_counts(&sums, k)
}

/// Tie-included top-k of a count map: everything with count >= the k-th
/// highest (and >= 1; episodes that never occur cannot be "top").
pub fn topk_of_counts(counts: &BTreeMap<Episode, u64>, k: usize) -> (BTreeSet<Episode>, u64) {
    let mut ordered: Vec<u64> = counts.values().copied().filter(|&c| c > 0).collect();
    ordered.sort_unstable_by(|a, b| b.cmp(a));
    if ordered.is_empty() {
        return (BTreeSet::new(), 0);
    }
    let f_k = ordered[(k - 1).min(ordered.len() - 1)];
    let set = counts
        .iter()
        .filter(|&(_, &c)| c >= f_k && c > 0)
        .map(|(ep, _)| ep.clone())
        .collect();
    (set, f_k)
}

/// Largest per-episode count change between consecutive batches, over the
/// whole universe (the measured "maximum rate of change").
pub fn max_count_change(
    batches: &[Batch],
    alphabet: &[EventTypeId],
    len: usize,
) -> f64 {
    let universe = universe_episodes(alphabet, len);
    let mut prev: Option<BTreeMap<Episode, u64>> = None;
    let mut max_change = 0u64;
    for batch in batches {
        let counts = count_many(universe.iter(), &batch.events);
        if let Some(prev) = &prev {
            for (ep, &c) in &counts {
                let p = prev.get(ep).copied().unwrap_or(0);
                max_change = max_change.max(p.abs_diff(c));
            }
        }
        prev = Some(counts);
    }
    max_change as f64
}

/// Per-batch k-th highest counts over the universe, for Lemma-style checks.
pub fn per_batch_fk(
    batches: &[Batch],
    alphabet: &[EventTypeId],
    k: usize,
    len: usize,
) -> Vec<u64> {
    batches
        .iter()
        .map(|b| exhaustive_batch_topk(b, alphabet, k, len).1)
        .collect()
}
