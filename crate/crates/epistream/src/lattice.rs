//! The pattern lattice carried between batches.
//!
//! Per level the lattice holds the frequent episodes and the negative border
//! (episodes that failed the frequency test although all their subepisodes
//! passed). Every node keeps a ring of its most recent per-batch counts, one
//! slot per window batch, so window frequencies are a ring sum. Nodes link to
//! the episodes they helped generate, which makes deleting all super-episodes
//! of a demoted node an upward traversal rather than a lattice scan.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::episode::Episode;
use crate::event::{EventTypeId, SymbolTable, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Frequent,
    Border,
}

impl NodeStatus {
    fn label(self) -> &'static str {
        match self {
            NodeStatus::Frequent => "frequent",
            NodeStatus::Border => "border",
        }
    }
}

/// One episode tracked by the lattice.
#[derive(Debug, Clone)]
pub struct LatticeNode {
    pub status: NodeStatus,
    /// `(batch, count)` pairs, strictly increasing in batch, at most `m`.
    /// Border nodes keep only their most recent count.
    ring: VecDeque<(u32, u64)>,
    /// Episodes one level up that this node helped generate.
    children: BTreeSet<Episode>,
    pub last_counted: u32,
}

impl LatticeNode {
    fn new(status: NodeStatus) -> Self {
        LatticeNode {
            status,
            ring: VecDeque::new(),
            children: BTreeSet::new(),
            last_counted: 0,
        }
    }

    pub fn ring(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.ring.iter().copied()
    }

    /// Count recorded for batch `s`, if any.
    pub fn count_at(&self, s: u32) -> Option<u64> {
        self.ring
            .iter()
            .find(|&&(batch, _)| batch == s)
            .map(|&(_, c)| c)
    }
}

/// Frequent and border sets for levels `1..=max_level`, with per-node count
/// rings sized for windows of `m` batches.
#[derive(Debug, Clone)]
pub struct PatternLattice {
    levels: Vec<BTreeMap<Episode, LatticeNode>>,
    m: usize,
    max_level: usize,
}

/// Result of a window-frequency query; `known` is false when the episode is
/// not in the lattice at all (the value is then 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowFrequency {
    pub value: u64,
    pub known: bool,
}

impl PatternLattice {
    pub fn new(max_level: usize, m: usize) -> Self {
        assert!(max_level >= 1 && m >= 1);
        PatternLattice {
            levels: vec![BTreeMap::new(); max_level],
            m,
            max_level,
        }
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn window_batches(&self) -> usize {
        self.m
    }

    /// Nodes of one level, keyed by episode. `level` is 1-based.
    pub fn level(&self, level: usize) -> &BTreeMap<Episode, LatticeNode> {
        &self.levels[level - 1]
    }

    pub fn node(&self, ep: &Episode) -> Option<&LatticeNode> {
        self.levels.get(ep.len() - 1)?.get(ep)
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    /// Episodes with `status` at `level`, in lexicographic order.
    pub fn episodes_with_status(
        &self,
        level: usize,
        status: NodeStatus,
    ) -> impl Iterator<Item = (&Episode, &LatticeNode)> {
        self.level(level)
            .iter()
            .filter(move |(_, n)| n.status == status)
    }

    /// Inserts `ep` with `status` and records its batch-`s` count; creates
    /// the node if absent.
    pub fn insert(&mut self, ep: &Episode, status: NodeStatus, s: u32, count: u64) {
        self.register(ep.clone(), status);
        let node = self.levels[ep.len() - 1].get_mut(ep).expect("just inserted");
        node.status = status;
        Self::push_count(node, s, count, self.m);
    }

    /// Marks `ep` frequent (creating it if absent) and records its count.
    pub fn promote(&mut self, ep: &Episode, count: u64, s: u32) {
        let level = ep.len();
        if !self.levels[level - 1].contains_key(ep) {
            self.register(ep.clone(), NodeStatus::Frequent);
        }
        let node = self.levels[level - 1].get_mut(ep).expect("just inserted");
        node.status = NodeStatus::Frequent;
        Self::push_count(node, s, count, self.m);
    }

    /// Marks `ep` as border and removes every lattice node above it that
    /// contains it (reached through the generation links). Returns how many
    /// nodes were removed. The demoted node keeps only its latest count.
    pub fn demote_to_border(&mut self, ep: &Episode, _s: u32) -> usize {
        let level = ep.len();
        let Some(node) = self.levels[level - 1].get_mut(ep) else {
            return 0;
        };
        node.status = NodeStatus::Border;
        while node.ring.len() > 1 {
            node.ring.pop_front();
        }
        let seeds: Vec<Episode> = node.children.iter().cloned().collect();
        let mut removed = 0;
        let mut stack = seeds;
        while let Some(victim) = stack.pop() {
            let vl = victim.len();
            if let Some(victim_node) = self.levels[vl - 1].remove(&victim) {
                removed += 1;
                stack.extend(victim_node.children.iter().cloned());
                // unlink from surviving parents
                if vl >= 2 {
                    for sub in victim.maximal_subepisodes().expect("level >= 2") {
                        if let Some(parent) = self.levels[vl - 2].get_mut(&sub) {
                            parent.children.remove(&victim);
                        }
                    }
                }
            }
        }
        removed
    }

    /// Removes a node outright (no border marking), unlinking it from its
    /// parents. Used for level-1 types absent from the current batch.
    pub fn remove(&mut self, ep: &Episode) -> bool {
        let level = ep.len();
        let existed = self.levels[level - 1].remove(ep).is_some();
        if existed && level >= 2 {
            for sub in ep.maximal_subepisodes().expect("level >= 2") {
                if let Some(parent) = self.levels[level - 2].get_mut(&sub) {
                    parent.children.remove(ep);
                }
            }
        }
        existed
    }

    /// Creates a node without recording a count yet.
    pub fn register(&mut self, ep: Episode, status: NodeStatus) {
        let level = ep.len();
        assert!(level <= self.max_level, "episode longer than the lattice");
        if level >= 2 {
            for sub in ep.maximal_subepisodes().expect("level >= 2") {
                if let Some(parent) = self.levels[level - 2].get_mut(&sub) {
                    parent.children.insert(ep.clone());
                }
            }
        }
        self.levels[level - 1].entry(ep).or_insert_with(|| LatticeNode::new(status));
    }

    /// Records the batch-`s` count for an existing node, enforcing the ring
    /// rules (capacity `m`, nothing older than `s - m + 1`, border nodes keep
    /// a single entry).
    pub fn record_count(&mut self, ep: &Episode, s: u32, count: u64) {
        let m = self.m;
        if let Some(node) = self.levels[ep.len() - 1].get_mut(ep) {
            Self::push_count(node, s, count, m);
        }
    }

    fn push_count(node: &mut LatticeNode, s: u32, count: u64, m: usize) {
        if node.status == NodeStatus::Border {
            node.ring.clear();
        }
        node.ring.push_back((s, count));
        while node.ring.len() > m {
            node.ring.pop_front();
        }
        let oldest_allowed = s.saturating_sub(m as u32 - 1);
        while matches!(node.ring.front(), Some(&(b, _)) if b < oldest_allowed) {
            node.ring.pop_front();
        }
        node.last_counted = s;
    }

    /// Sum of the node's recorded counts over the window's batches; batches
    /// without a recorded count contribute 0. Unknown episodes yield
    /// `known = false`.
    pub fn window_frequency(&self, ep: &Episode, window: &Window) -> WindowFrequency {
        match self.node(ep) {
            None => WindowFrequency { value: 0, known: false },
            Some(node) => {
                let range = window.batches();
                let value = node
                    .ring
                    .iter()
                    .filter(|(b, _)| range.contains(b))
                    .map(|&(_, c)| c)
                    .sum();
                WindowFrequency { value, known: true }
            }
        }
    }

    /// All frequent episodes at `level` whose batch-`s` count is at least the
    /// k-th largest such count. Ties are included, so the result may exceed
    /// `k`; it is smaller only when fewer episodes have a count for `s`.
    /// Sorted by descending count, then lexicographically.
    pub fn top_k(&self, level: usize, k: usize, s: u32) -> Vec<(Episode, u64)> {
        let mut ranked: Vec<(Episode, u64)> = self
            .episodes_with_status(level, NodeStatus::Frequent)
            .filter_map(|(ep, node)| node.count_at(s).map(|c| (ep.clone(), c)))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if ranked.is_empty() || k == 0 {
            return Vec::new();
        }
        if ranked.len() > k {
            let cut = ranked[k - 1].1;
            ranked.retain(|&(_, c)| c >= cut);
        }
        ranked
    }

    /// One line per node: `level<TAB>status<TAB>episode<TAB>ring`, where the
    /// ring is space-separated `batch:count` pairs.
    pub fn dump(&self, symbols: &SymbolTable) -> String {
        let mut out = String::new();
        for (li, level) in self.levels.iter().enumerate() {
            for (ep, node) in level {
                let ring = node
                    .ring
                    .iter()
                    .map(|(b, c)| format!("{b}:{c}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    li + 1,
                    node.status.label(),
                    ep.render(symbols),
                    ring
                );
            }
        }
        out
    }

    /// Level-1 episode set, used for candidate seeding.
    pub fn level1_types(&self) -> BTreeSet<EventTypeId> {
        self.level(1).keys().map(|ep| ep.nodes()[0]).collect()
    }
}
