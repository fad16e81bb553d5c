//! Serial episodes and Apriori-style candidate generation.
//!
//! A serial episode is an ordered sequence of event types (repeats allowed).
//! Candidate generation at level `i+1` joins frequent size-`i` episodes and
//! keeps a join only when every drop-one-node subepisode is frequent. The
//! incremental miner additionally restricts generation to candidates having
//! at least one *newly* frequent subepisode, which caps the work per level at
//! one anchored probe pair per `(newly frequent, frequent)` episode pair
//! instead of considering all frequent pairs.

use std::collections::BTreeSet;

use crate::event::{EventTypeId, SymbolTable};
use crate::{Error, Result};

/// An ordered, non-empty sequence of event types.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Episode {
    nodes: Vec<EventTypeId>,
}

impl Episode {
    /// Panics if `nodes` is empty; episodes have at least one node.
    pub fn new(nodes: Vec<EventTypeId>) -> Self {
        assert!(!nodes.is_empty(), "an episode has at least one node");
        Episode { nodes }
    }

    pub fn singleton(ty: EventTypeId) -> Self {
        Episode { nodes: vec![ty] }
    }

    pub fn nodes(&self) -> &[EventTypeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Event-type names joined by `->`, e.g. `A->B->C`.
    pub fn render(&self, symbols: &SymbolTable) -> String {
        self.nodes
            .iter()
            .map(|&id| symbols.name(id))
            .collect::<Vec<_>>()
            .join("->")
    }

    /// The distinct episodes obtained by deleting exactly one node.
    ///
    /// Defined for episodes of length >= 2; single-node episodes have no
    /// proper subepisodes.
    pub fn maximal_subepisodes(&self) -> Result<BTreeSet<Episode>> {
        if self.len() < 2 {
            return Err(Error::Domain(format!(
                "maximal_subepisodes requires length >= 2, got {}",
                self.len()
            )));
        }
        Ok(self.maximal_subepisodes_unchecked())
    }

    fn maximal_subepisodes_unchecked(&self) -> BTreeSet<Episode> {
        let mut out = BTreeSet::new();
        for drop in 0..self.len() {
            let mut nodes = Vec::with_capacity(self.len() - 1);
            nodes.extend_from_slice(&self.nodes[..drop]);
            nodes.extend_from_slice(&self.nodes[drop + 1..]);
            out.insert(Episode { nodes });
        }
        out
    }
}

impl std::fmt::Debug for Episode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Ep{:?}", self.nodes)
    }
}

/// Suffix-prefix join of two equal-length episodes.
///
/// If the length-`(i-1)` suffix of `a` equals the length-`(i-1)` prefix of
/// `b`, the result is `a` followed by the last node of `b`; otherwise `None`.
pub fn serial_join(a: &Episode, b: &Episode) -> Result<Option<Episode>> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "serial_join requires equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let i = a.len();
    if a.nodes[1..] != b.nodes[..i - 1] {
        return Ok(None);
    }
    let mut nodes = a.nodes.clone();
    nodes.push(b.nodes[i - 1]);
    Ok(Some(Episode { nodes }))
}

/// Which subepisode anchor a candidate must have to be generated.
#[derive(Debug, Clone, Copy)]
pub enum NewlyFrequent<'a> {
    /// No restriction: full Apriori generation (first batch, baselines).
    All,
    /// Only candidates with at least one maximal subepisode in this set.
    Only(&'a BTreeSet<Episode>),
}

/// Candidates of size `level` whose maximal subepisodes were all frequent at
/// generation time.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub level: usize,
    pub episodes: BTreeSet<Episode>,
    /// Number of join probes performed. For anchored generation this is one
    /// per (newly frequent, frequent) pair, i.e. at most |F_new| * |F|.
    pub join_attempts: usize,
}

/// Generates the level-`i+1` candidates from the frequent size-`i` set.
///
/// A sequence of length `i+1` is a candidate when (a) all of its maximal
/// subepisodes are in `frequent`, and (b) at least one of them is in the
/// newly-frequent set (condition (b) is dropped for [`NewlyFrequent::All`]).
///
/// Anchored generation probes, for each pair `(n, f)` with `n` newly frequent
/// and `f` frequent, the two sequences `f + last(n)` and `first(n) + f`.
/// Every candidate satisfying (a) and (b) arises from such a probe: if the
/// anchor keeps the candidate's last node the candidate is its own frequent
/// prefix extended by that node, otherwise the anchor is the prefix and the
/// candidate is its first node prepended to the frequent suffix.
pub fn generate_candidates(
    frequent: &BTreeSet<Episode>,
    newly: NewlyFrequent<'_>,
) -> Result<CandidateSet> {
    let level_in = match frequent.iter().next() {
        Some(ep) => ep.len(),
        None => {
            return Ok(CandidateSet {
                level: 0,
                episodes: BTreeSet::new(),
                join_attempts: 0,
            })
        }
    };
    if frequent.iter().any(|ep| ep.len() != level_in) {
        return Err(Error::Domain(
            "generate_candidates requires all episodes at one level".into(),
        ));
    }
    if let NewlyFrequent::Only(new) = newly {
        if !new.is_empty() && !new.iter().all(|ep| frequent.contains(ep)) {
            return Err(Error::Domain(
                "newly frequent episodes must be a subset of the frequent set".into(),
            ));
        }
    }

    let mut episodes = BTreeSet::new();
    let mut join_attempts = 0usize;

    let closed = |cand: &Episode| {
        cand.maximal_subepisodes_unchecked()
            .iter()
            .all(|sub| frequent.contains(sub))
    };

    match newly {
        NewlyFrequent::All => {
            // classic suffix-prefix join over F x F via a prefix index
            let mut by_prefix: std::collections::BTreeMap<&[EventTypeId], Vec<&Episode>> =
                std::collections::BTreeMap::new();
            for ep in frequent {
                by_prefix
                    .entry(&ep.nodes()[..level_in - 1])
                    .or_default()
                    .push(ep);
            }
            for a in frequent {
                let suffix = &a.nodes()[1..];
                if let Some(bs) = by_prefix.get(suffix) {
                    for b in bs {
                        join_attempts += 1;
                        let mut nodes = a.nodes.clone();
                        nodes.push(b.nodes[level_in - 1]);
                        let cand = Episode { nodes };
                        if closed(&cand) {
                            episodes.insert(cand);
                        }
                    }
                }
            }
        }
        NewlyFrequent::Only(new) => {
            for anchor in new {
                for f in frequent {
                    join_attempts += 1;
                    // anchor retained the last node: candidate = f + last(anchor)
                    let mut nodes = f.nodes.clone();
                    nodes.push(anchor.nodes[level_in - 1]);
                    let cand = Episode { nodes };
                    if cand.maximal_subepisodes_unchecked().contains(anchor) && closed(&cand) {
                        episodes.insert(cand);
                    }
                    // anchor is the prefix: candidate = first(anchor) + f
                    let mut nodes = Vec::with_capacity(level_in + 1);
                    nodes.push(anchor.nodes[0]);
                    nodes.extend_from_slice(&f.nodes);
                    let cand = Episode { nodes };
                    if cand.maximal_subepisodes_unchecked().contains(anchor) && closed(&cand) {
                        episodes.insert(cand);
                    }
                }
            }
        }
    }

    Ok(CandidateSet {
        level: level_in + 1,
        episodes,
        join_attempts,
    })
}
