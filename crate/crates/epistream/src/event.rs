//! Events, stream ingestion, time-based batching and sliding windows.
//!
//! A stream is an ordered sequence of `(event type, timestamp)` pairs with
//! non-decreasing timestamps. Batch `s` covers the half-open time span
//! `[(s-1)*T_b, s*T_b)` relative to the stream origin, and a window is the
//! `m` consecutive batches ending at some batch `s`.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::ops::RangeInclusive;

use crate::{Error, Result};

/// Integer id of an event type, assigned by the [`SymbolTable`] at ingest.
pub type EventTypeId = u32;

/// One timestamped event. Timestamps are decimal seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub ty: EventTypeId,
    pub time: f64,
}

impl Event {
    pub fn new(ty: EventTypeId, time: f64) -> Self {
        Event { ty, time }
    }
}

/// Bidirectional map between event-type names and their integer ids.
///
/// Ids are assigned in first-appearance order, so a given input always
/// produces the same mapping.
#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    names: Vec<String>,
    ids: HashMap<String, EventTypeId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, inserting a fresh one if unseen.
    pub fn intern(&mut self, name: &str) -> EventTypeId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as EventTypeId;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<EventTypeId> {
        self.ids.get(name).copied()
    }

    /// Name for `id`; falls back to `#id` for ids this table never assigned.
    pub fn name(&self, id: EventTypeId) -> String {
        self.names
            .get(id as usize)
            .cloned()
            .unwrap_or_else(|| format!("#{id}"))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// All assigned ids, in assignment order.
    pub fn ids_iter(&self) -> impl Iterator<Item = EventTypeId> + '_ {
        0..self.names.len() as EventTypeId
    }
}

/// A contiguous slice of the stream: batch `index` holds the events with
/// `start <= t < end`, where `end - start` is the configured batch span.
#[derive(Debug, Clone)]
pub struct Batch {
    /// 1-based batch number.
    pub index: u32,
    pub events: Vec<Event>,
    pub start: f64,
    pub end: f64,
}

/// The window of interest ending at batch `end_batch`: the batches
/// `[end_batch - m + 1, ..., end_batch]`, clipped at 1 during warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub end_batch: u32,
    pub m: u32,
}

impl Window {
    pub fn first_batch(&self) -> u32 {
        self.end_batch.saturating_sub(self.m - 1).max(1)
    }

    pub fn batches(&self) -> RangeInclusive<u32> {
        self.first_batch()..=self.end_batch
    }

    /// True while fewer than `m` batches have arrived.
    pub fn is_partial(&self) -> bool {
        self.end_batch < self.m
    }

    pub fn len(&self) -> u32 {
        self.end_batch - self.first_batch() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The window of `m` batches ending at batch `s`.
pub fn window_of(s: u32, m: u32) -> Window {
    assert!(s >= 1 && m >= 1, "window_of requires s >= 1 and m >= 1");
    Window { end_batch: s, m }
}

/// Reads events from a text stream, one `timestamp<TAB>event_type` per line.
///
/// Lines starting with `#` and blank lines are ignored. Event-type names are
/// interned into `symbols`. Timestamps must be non-decreasing in file order.
pub fn read_events<R: BufRead>(reader: R, symbols: &mut SymbolTable) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    let mut last_time = f64::NEG_INFINITY;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (time_str, name) = trimmed.split_once('\t').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected \"timestamp<TAB>event_type\", got {trimmed:?}"),
        })?;
        let time: f64 = time_str.trim().parse().map_err(|e| Error::Parse {
            line: line_no,
            msg: format!("bad timestamp {time_str:?}: {e}"),
        })?;
        if !time.is_finite() || time < 0.0 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("timestamp must be a finite non-negative number, got {time_str}"),
            });
        }
        if time < last_time {
            return Err(Error::OutOfOrder {
                line: line_no,
                msg: format!("timestamp {time} is earlier than preceding {last_time}"),
            });
        }
        last_time = time;
        let ty = symbols.intern(name.trim());
        events.push(Event::new(ty, time));
    }
    Ok(events)
}

/// Writes events in the same format `read_events` consumes.
pub fn write_events<W: Write>(w: &mut W, events: &[Event], symbols: &SymbolTable) -> Result<()> {
    for ev in events {
        writeln!(w, "{}\t{}", ev.time, symbols.name(ev.ty))?;
    }
    Ok(())
}

/// Partitions a time-ordered event list into contiguous batches of span `t_b`.
///
/// Batch `s` receives the events with `(s-1)*t_b <= t - t0 < s*t_b`. Batches
/// with no events are still materialized so indices stay contiguous. `t0`
/// defaults to the first event's timestamp.
pub fn batchify(events: &[Event], t_b: f64, t0: Option<f64>) -> Result<Vec<Batch>> {
    if !(t_b > 0.0) || !t_b.is_finite() {
        return Err(Error::Config(format!("batch span must be positive, got {t_b}")));
    }
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let origin = t0.unwrap_or(events[0].time);
    let last_index = {
        let rel = events[events.len() - 1].time - origin;
        if rel < 0.0 {
            return Err(Error::Config(format!(
                "stream origin {origin} is later than an event at {}",
                events[events.len() - 1].time
            )));
        }
        (rel / t_b).floor() as u32 + 1
    };
    let mut batches: Vec<Batch> = (1..=last_index)
        .map(|s| Batch {
            index: s,
            events: Vec::new(),
            start: origin + (s - 1) as f64 * t_b,
            end: origin + s as f64 * t_b,
        })
        .collect();
    for ev in events {
        let rel = ev.time - origin;
        if rel < 0.0 {
            return Err(Error::Config(format!(
                "event at {} precedes the stream origin {origin}",
                ev.time
            )));
        }
        let s = (rel / t_b).floor() as usize; // 0-based slot
        batches[s].events.push(*ev);
    }
    Ok(batches)
}
