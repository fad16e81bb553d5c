//! Synthetic event-stream generator with exportable ground truth.
//!
//! Background noise is a homogeneous Poisson process per event type whose
//! rates split an aggregate rate across the alphabet by a power law in rank
//! (rank 1 noisiest). Embedded serial episodes use their own event types,
//! drawn from the quiet end of the alphabet: occurrence start times follow a
//! Poisson process at the pattern's current rate, and each occurrence emits
//! its nodes in order with exponential intra-occurrence gaps. With drift
//! enabled, each pattern's rate is multiplied by `1 + step` or `1 - step`
//! (uniformly) at every batch boundary, clamped to a tenth and tenfold of
//! the initial rate — the same timescale the miner's windows work at.
//!
//! Everything is a pure function of the seed: the same config produces a
//! byte-identical stream.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::episode::Episode;
use crate::event::{Event, SymbolTable};
use crate::{Error, Result};

/// How pattern arrival rates evolve over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drift {
    None,
    /// Multiply each pattern's rate by `1 +- step_frac` at batch boundaries.
    RandomWalk { step_frac: f64 },
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub alphabet_size: u32,
    /// Aggregate background rate, events/sec across the whole alphabet.
    pub noise_rate: f64,
    /// Power-law exponent for the per-rank background rates (> 1).
    pub powerlaw_exponent: f64,
    pub num_patterns: u32,
    pub pattern_length: u32,
    /// Initial occurrences/sec per embedded pattern.
    pub pattern_rate: f64,
    /// Mean gap between consecutive events of one occurrence (seconds).
    pub intra_gap: f64,
    pub drift: Drift,
    /// Stream length in seconds.
    pub duration: f64,
    /// Batch span in seconds; drift steps happen at batch boundaries.
    pub batch_span: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            alphabet_size: 500,
            noise_rate: 10.0,
            powerlaw_exponent: 2.0,
            num_patterns: 10,
            pattern_length: 4,
            pattern_rate: 2.0,
            intra_gap: 0.05,
            drift: Drift::None,
            duration: 200.0,
            batch_span: 10.0,
            seed: 1,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphabet_size == 0 {
            return Err(Error::Config("alphabet must be non-empty".into()));
        }
        if self.num_patterns * self.pattern_length > self.alphabet_size {
            return Err(Error::Config(format!(
                "patterns need {} distinct event types but the alphabet has {}",
                self.num_patterns * self.pattern_length,
                self.alphabet_size
            )));
        }
        if self.num_patterns > 0 && self.pattern_length == 0 {
            return Err(Error::Config("pattern length must be >= 1".into()));
        }
        if !(self.noise_rate >= 0.0) || !(self.pattern_rate >= 0.0) {
            return Err(Error::Config("rates must be non-negative".into()));
        }
        if self.powerlaw_exponent <= 1.0 {
            return Err(Error::Config("power-law exponent must exceed 1".into()));
        }
        if !(self.duration > 0.0) || !(self.batch_span > 0.0) {
            return Err(Error::Config("duration and batch span must be positive".into()));
        }
        if !(self.intra_gap > 0.0) && self.num_patterns > 0 && self.pattern_length > 1 {
            return Err(Error::Config("intra-occurrence gap must be positive".into()));
        }
        if let Drift::RandomWalk { step_frac } = self.drift {
            if !(0.0..1.0).contains(&step_frac) {
                return Err(Error::Config("drift step must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }

    /// Number of batches the configured duration spans.
    pub fn num_batches(&self) -> u32 {
        (self.duration / self.batch_span).ceil() as u32
    }

    /// Expected drift-induced change in a pattern's per-batch count (the
    /// Poisson sampling noise on top of it is not included).
    pub fn nominal_delta(&self) -> f64 {
        match self.drift {
            Drift::None => 0.0,
            Drift::RandomWalk { step_frac } => {
                step_frac * self.pattern_rate * self.batch_span
            }
        }
    }
}

/// What the generator embedded, for evaluation against mining output.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// The embedded episodes, in pattern order.
    pub episodes: Vec<Episode>,
    /// Occurrences started per `(batch, pattern index)`.
    pub intended: BTreeMap<(u32, usize), u64>,
    /// Per-batch pattern rates after drift, in batch-major order.
    pub rates: BTreeMap<(u32, usize), f64>,
    pub nominal_delta: f64,
}

impl GroundTruth {
    pub fn intended_count(&self, batch: u32, pattern: usize) -> u64 {
        self.intended.get(&(batch, pattern)).copied().unwrap_or(0)
    }
}

fn poisson_arrivals(rng: &mut ChaCha8Rng, rate: f64, start: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if rate <= 0.0 {
        return out;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = start + exp.sample(rng);
    while t < end {
        out.push(t);
        t += exp.sample(rng);
    }
    out
}

/// Generates the stream and its ground truth. Event-type names are interned
/// into `symbols` as `e0..e{N-1}`; pattern `p` uses the quiet tail types
/// `e{N - (p+1)*len} ..= e{N - p*len - 1}` in order.
pub fn generate_stream(
    config: &GenConfig,
    symbols: &mut SymbolTable,
) -> Result<(Vec<Event>, GroundTruth)> {
    config.validate()?;
    let n = config.alphabet_size;
    let ids: Vec<u32> = (0..n).map(|i| symbols.intern(&format!("e{i}"))).collect();

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    // (time, tiebreak) pairs; the tiebreak fixes the order of simultaneous
    // events so the merge is deterministic
    let mut tagged: Vec<(f64, u64, u32)> = Vec::new();
    let mut tag = 0u64;

    // background noise: power-law split of the aggregate rate over ranks
    let weight_sum: f64 = (1..=n)
        .map(|r| (r as f64).powf(-config.powerlaw_exponent))
        .sum();
    for (rank0, &ty) in ids.iter().enumerate() {
        let rate = config.noise_rate * ((rank0 + 1) as f64).powf(-config.powerlaw_exponent)
            / weight_sum;
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        for t in poisson_arrivals(&mut rng, rate, 0.0, config.duration) {
            tagged.push((t, tag, ty));
            tag += 1;
        }
    }

    // embedded patterns on the quiet tail of the alphabet
    let len = config.pattern_length as usize;
    let mut episodes = Vec::new();
    let mut intended = BTreeMap::new();
    let mut rates = BTreeMap::new();
    let num_batches = config.num_batches();
    for p in 0..config.num_patterns as usize {
        let first = n as usize - (p + 1) * len;
        let nodes: Vec<u32> = ids[first..first + len].to_vec();
        episodes.push(Episode::new(nodes.clone()));

        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let mut rate = config.pattern_rate;
        for b in 1..=num_batches {
            if b > 1 {
                if let Drift::RandomWalk { step_frac } = config.drift {
                    let factor = if rng.gen_bool(0.5) {
                        1.0 + step_frac
                    } else {
                        1.0 - step_frac
                    };
                    rate = (rate * factor).clamp(
                        0.1 * config.pattern_rate,
                        10.0 * config.pattern_rate,
                    );
                }
            }
            rates.insert((b, p), rate);
            let start = (b - 1) as f64 * config.batch_span;
            let end = (start + config.batch_span).min(config.duration);
            let starts = poisson_arrivals(&mut rng, rate, start, end);
            intended.insert((b, p), starts.len() as u64);
            for occ_start in starts {
                let mut t = occ_start;
                for (i, &ty) in nodes.iter().enumerate() {
                    if i > 0 {
                        let gap = Exp::new(1.0 / config.intra_gap).expect("positive gap");
                        t += gap.sample(&mut rng);
                    }
                    tagged.push((t, tag, ty));
                    tag += 1;
                }
            }
            if end >= config.duration {
                break;
            }
        }
    }

    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let events: Vec<Event> = tagged
        .into_iter()
        .map(|(t, _, ty)| Event::new(ty, t))
        .collect();

    Ok((
        events,
        GroundTruth {
            episodes,
            intended,
            rates,
            nominal_delta: config.nominal_delta(),
        },
    ))
}

/// Writes the ground truth as CSV: `batch,episode,intended_count`.
pub fn export_ground_truth<W: Write>(
    truth: &GroundTruth,
    symbols: &SymbolTable,
    w: &mut W,
) -> Result<()> {
    writeln!(w, "batch,episode,intended_count")?;
    for (&(batch, pattern), &count) in &truth.intended {
        writeln!(w, "{batch},{},{count}", truth.episodes[pattern].render(symbols))?;
    }
    Ok(())
}

/// Reads an exported ground-truth CSV back into `(batch, episode) -> count`.
pub fn read_ground_truth<R: BufRead>(
    r: R,
    symbols: &mut SymbolTable,
) -> Result<BTreeMap<(u32, Episode), u64>> {
    let mut out = BTreeMap::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.trim().splitn(3, ',');
        let (batch, episode, count) = (|| {
            let b = parts.next()?.parse::<u32>().ok()?;
            let ep_str = parts.next()?;
            let c = parts.next()?.parse::<u64>().ok()?;
            let nodes: Vec<u32> = ep_str.split("->").map(|name| symbols.intern(name)).collect();
            Some((b, Episode::new(nodes), c))
        })()
        .ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("bad ground-truth row {line:?}"),
        })?;
        out.insert((batch, episode), count);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::count_nonoverlapped;
    use crate::event::batchify;

    fn small_config() -> GenConfig {
        GenConfig {
            alphabet_size: 12,
            noise_rate: 2.0,
            num_patterns: 2,
            pattern_length: 3,
            pattern_rate: 1.0,
            intra_gap: 0.02,
            duration: 60.0,
            batch_span: 10.0,
            seed: 42,
            ..GenConfig::default()
        }
    }

    #[test]
    fn same_seed_identical_streams() {
        let cfg = small_config();
        let mut s1 = SymbolTable::new();
        let mut s2 = SymbolTable::new();
        let (e1, _) = generate_stream(&cfg, &mut s1).unwrap();
        let (e2, _) = generate_stream(&cfg, &mut s2).unwrap();
        assert_eq!(e1.len(), e2.len());
        for (a, b) in e1.iter().zip(e2.iter()) {
            assert_eq!(a.ty, b.ty);
            assert_eq!(a.time, b.time);
        }
    }

    #[test]
    fn timestamps_non_decreasing() {
        let mut syms = SymbolTable::new();
        let (events, _) = generate_stream(&small_config(), &mut syms).unwrap();
        for pair in events.windows(2) {
            assert!(pair[0].time <= pair[1].time);
        }
    }

    #[test]
    fn no_patterns_means_noise_only() {
        let cfg = GenConfig {
            num_patterns: 0,
            ..small_config()
        };
        let mut syms = SymbolTable::new();
        let (events, truth) = generate_stream(&cfg, &mut syms).unwrap();
        assert!(truth.episodes.is_empty());
        assert!(!events.is_empty());
    }

    #[test]
    fn rejects_overfull_alphabet() {
        let cfg = GenConfig {
            alphabet_size: 5,
            num_patterns: 2,
            pattern_length: 3,
            ..GenConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn pattern_count_matches_poisson_mean() {
        // noise off, one fixed-rate pattern: the measured non-overlapped
        // count concentrates around rate * duration; averaged over seeds
        let rate = 0.5;
        let duration = 400.0;
        let mut total = 0.0;
        let seeds = [11u64, 12, 13, 14, 15];
        for &seed in &seeds {
            let cfg = GenConfig {
                alphabet_size: 4,
                noise_rate: 0.0,
                num_patterns: 1,
                pattern_length: 4,
                pattern_rate: rate,
                intra_gap: 0.01,
                duration,
                batch_span: 50.0,
                seed,
                ..GenConfig::default()
            };
            let mut syms = SymbolTable::new();
            let (events, truth) = generate_stream(&cfg, &mut syms).unwrap();
            total += count_nonoverlapped(&truth.episodes[0], &events) as f64;
        }
        let mean = total / seeds.len() as f64;
        let expected = rate * duration;
        assert!(
            (mean - expected).abs() <= 5.0 * expected.sqrt(),
            "mean {mean} strays from {expected}"
        );
    }

    #[test]
    fn stationary_counts_show_no_trend() {
        // sign test over per-batch counts split half vs half
        let cfg = GenConfig {
            alphabet_size: 6,
            noise_rate: 0.0,
            num_patterns: 1,
            pattern_length: 3,
            pattern_rate: 2.0,
            intra_gap: 0.01,
            duration: 300.0,
            batch_span: 10.0,
            seed: 7,
            ..GenConfig::default()
        };
        let mut syms = SymbolTable::new();
        let (events, truth) = generate_stream(&cfg, &mut syms).unwrap();
        let batches = batchify(&events, cfg.batch_span, Some(0.0)).unwrap();
        assert!(batches.len() >= 30);
        let counts: Vec<i64> = batches
            .iter()
            .map(|b| count_nonoverlapped(&truth.episodes[0], &b.events) as i64)
            .collect();
        let half = counts.len() / 2;
        let mut pos = 0i32;
        let mut neg = 0i32;
        for i in 0..half {
            let d = counts[i + half] - counts[i];
            if d > 0 {
                pos += 1;
            } else if d < 0 {
                neg += 1;
            }
        }
        assert!((pos - neg).abs() <= 10, "trend detected: +{pos} / -{neg}");
    }

    #[test]
    fn drift_respects_clamp() {
        let cfg = GenConfig {
            drift: Drift::RandomWalk { step_frac: 0.5 },
            duration: 2000.0,
            batch_span: 10.0,
            num_patterns: 1,
            pattern_length: 3,
            alphabet_size: 6,
            noise_rate: 0.0,
            pattern_rate: 1.0,
            seed: 3,
            ..GenConfig::default()
        };
        let mut syms = SymbolTable::new();
        let (_, truth) = generate_stream(&cfg, &mut syms).unwrap();
        for (&(_, _), &r) in &truth.rates {
            assert!((0.1..=10.0).contains(&(r / cfg.pattern_rate)));
        }
        assert_eq!(cfg.nominal_delta(), 0.5 * 1.0 * 10.0);
    }

    #[test]
    fn ground_truth_round_trip() {
        let cfg = small_config();
        let mut syms = SymbolTable::new();
        let (_, truth) = generate_stream(&cfg, &mut syms).unwrap();
        let mut buf = Vec::new();
        export_ground_truth(&truth, &syms, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("batch,episode,intended_count\n"));
        let rows = text.lines().count() - 1;
        assert_eq!(rows, truth.intended.len());

        let mut syms2 = syms.clone();
        let back = read_ground_truth(std::io::Cursor::new(&buf), &mut syms2).unwrap();
        for (&(b, p), &c) in &truth.intended {
            assert_eq!(back[&(b, truth.episodes[p].clone())], c);
        }
    }

    #[test]
    fn ground_truth_header_only_without_patterns() {
        let cfg = GenConfig {
            num_patterns: 0,
            ..small_config()
        };
        let mut syms = SymbolTable::new();
        let (_, truth) = generate_stream(&cfg, &mut syms).unwrap();
        let mut buf = Vec::new();
        export_ground_truth(&truth, &syms, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "batch,episode,intended_count\n");
    }
}
