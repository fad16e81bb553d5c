//! Non-overlapped occurrence counting of serial episodes.
//!
//! An occurrence of an episode maps its nodes, in order, to events of the
//! matching types at strictly increasing timestamps. Two occurrences are
//! non-overlapped when they use disjoint events and no event of one falls
//! between the events of the other; a set of pairwise non-overlapped
//! occurrences therefore occupies a sequence of disjoint, ordered stretches
//! of the event list. An episode's frequency in a batch is the maximum size
//! of such a set.
//!
//! [`count_nonoverlapped`] computes the frequency with a single left-to-right
//! scan that restarts the episode automaton after each completed occurrence;
//! greedy earliest completion attains the maximum for serial episodes.
//! [`brute_force_max_nonoverlapped`] is an exhaustive reference used to check
//! it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::episode::Episode;
use crate::event::{Event, EventTypeId};
use crate::{Error, Result};

/// Default event-count limit for the brute-force oracle.
pub const DEFAULT_ORACLE_EVENT_BOUND: usize = 16;

/// Maximum number of non-overlapped occurrences of `episode` in `events`.
///
/// `events` must be in stream order (non-decreasing timestamps). Consecutive
/// episode nodes must match events at strictly increasing timestamps, so
/// simultaneous events never chain within one occurrence.
pub fn count_nonoverlapped(episode: &Episode, events: &[Event]) -> u64 {
    let nodes = episode.nodes();
    let mut count = 0u64;
    let mut next = 0usize;
    let mut last_time = 0.0f64;
    for ev in events {
        if ev.ty == nodes[next] && (next == 0 || ev.time > last_time) {
            last_time = ev.time;
            next += 1;
            if next == nodes.len() {
                count += 1;
                next = 0;
            }
        }
    }
    count
}

/// Counts a set of episodes in one pass over the events.
///
/// Every event is dispatched only to the automata currently waiting on its
/// type, so the cost is proportional to the number of automaton advances
/// rather than `patterns x events`. The result is identical to calling
/// [`count_nonoverlapped`] per episode; duplicate input episodes collapse.
pub fn count_many<'a, I>(patterns: I, events: &[Event]) -> BTreeMap<Episode, u64>
where
    I: IntoIterator<Item = &'a Episode>,
{
    let unique: BTreeSet<&Episode> = patterns.into_iter().collect();
    let eps: Vec<&Episode> = unique.into_iter().collect();

    struct Automaton {
        next: usize,
        last_time: f64,
        count: u64,
    }
    let mut states: Vec<Automaton> = eps
        .iter()
        .map(|_| Automaton {
            next: 0,
            last_time: 0.0,
            count: 0,
        })
        .collect();

    // waiting[ty] = indices of automata whose next needed node is `ty`
    let mut waiting: HashMap<EventTypeId, Vec<usize>> = HashMap::new();
    for (i, ep) in eps.iter().enumerate() {
        waiting.entry(ep.nodes()[0]).or_default().push(i);
    }

    for ev in events {
        let Some(queue) = waiting.remove(&ev.ty) else {
            continue;
        };
        let mut blocked = Vec::new();
        for i in queue {
            let st = &mut states[i];
            if st.next == 0 || st.last_time < ev.time {
                st.last_time = ev.time;
                st.next += 1;
                if st.next == eps[i].len() {
                    st.count += 1;
                    st.next = 0;
                }
                waiting.entry(eps[i].nodes()[st.next]).or_default().push(i);
            } else {
                blocked.push(i);
            }
        }
        if !blocked.is_empty() {
            waiting.entry(ev.ty).or_default().extend(blocked);
        }
    }

    eps.into_iter()
        .zip(states)
        .map(|(ep, st)| (ep.clone(), st.count))
        .collect()
}

/// Exhaustive maximum non-overlapped count, limited to small event lists.
///
/// Enumerates every occurrence map of `episode` over `events` and finds the
/// largest set of pairwise non-overlapped occurrences; it shares no logic
/// with the scanning counter. Errors when `events` exceeds
/// [`DEFAULT_ORACLE_EVENT_BOUND`]; use
/// [`brute_force_max_nonoverlapped_with_bound`] to raise the limit.
pub fn brute_force_max_nonoverlapped(episode: &Episode, events: &[Event]) -> Result<u64> {
    brute_force_max_nonoverlapped_with_bound(episode, events, DEFAULT_ORACLE_EVENT_BOUND)
}

pub fn brute_force_max_nonoverlapped_with_bound(
    episode: &Episode,
    events: &[Event],
    bound: usize,
) -> Result<u64> {
    if events.len() > bound {
        return Err(Error::OracleBound {
            events: events.len(),
            limit: bound,
        });
    }

    // enumerate all occurrence maps; only the (first, last) position span of
    // an occurrence matters for overlap, so spans are deduplicated
    let mut spans: BTreeSet<(usize, usize)> = BTreeSet::new();
    let nodes = episode.nodes();
    let mut positions = Vec::with_capacity(nodes.len());
    fn dfs(
        nodes: &[EventTypeId],
        events: &[Event],
        from: usize,
        positions: &mut Vec<usize>,
        spans: &mut BTreeSet<(usize, usize)>,
    ) {
        if positions.len() == nodes.len() {
            spans.insert((positions[0], positions[positions.len() - 1]));
            return;
        }
        let depth = positions.len();
        for p in from..events.len() {
            if events[p].ty != nodes[depth] {
                continue;
            }
            if depth > 0 && !(events[p].time > events[positions[depth - 1]].time) {
                continue;
            }
            positions.push(p);
            dfs(nodes, events, p + 1, positions, spans);
            positions.pop();
        }
    }
    dfs(nodes, events, 0, &mut positions, &mut spans);

    // two occurrences are compatible exactly when one span ends strictly
    // before the other begins; maximize the count over span-ordered chains
    let spans: Vec<(usize, usize)> = {
        let mut v: Vec<_> = spans.into_iter().collect();
        v.sort_by_key(|&(start, end)| (end, start));
        v
    };
    let mut best = 0u64;
    // best_by_end[i] = largest chain using spans[..=i] that ends with spans[i]
    let mut best_by_end: Vec<u64> = Vec::with_capacity(spans.len());
    for i in 0..spans.len() {
        let (start_i, _) = spans[i];
        let mut b = 1;
        for j in 0..i {
            if spans[j].1 < start_i {
                b = b.max(best_by_end[j] + 1);
            }
        }
        best_by_end.push(b);
        best = best.max(b);
    }
    Ok(best)
}
