//! Streaming discovery of frequent serial episodes over sliding windows.
//!
//! An event stream is cut into fixed-span batches; a window is the `m` most
//! recent batches. `epistream` mines, one batch at a time, the episodes whose
//! window frequency (sum of per-batch non-overlapped occurrence counts) puts
//! them in the top-k, and the `(v,k)`-persistent episodes that reach the batch
//! top-k in at least `v` of the window's batches. The engine keeps a lattice
//! of frequent and negative-border patterns between batches so that each new
//! batch only pays for what changed.
//!
//! The main pieces:
//!
//! - [`event`] — events, time-based batching, sliding windows
//! - [`episode`] — serial episodes and Apriori-style candidate generation
//! - [`count`] — non-overlapped occurrence counting (plus a brute-force oracle)
//! - [`lattice`] — the frequent/border pattern lattice carried across batches
//! - [`levelwise`] — from-scratch level-wise mining (bootstrap and baseline)
//! - [`miner`] — the streaming engine, threshold policies, algorithm variants
//! - [`bounds`] — window-frequency bounds and top-k approximation error bounds
//! - [`datagen`] — synthetic stream generator with exportable ground truth
//! - [`oracle`] — exhaustive reference computations used for verification
//! - [`harness`] — experiment runner, precision/recall evaluation, CSV reports
//!
//! Each major capability has a runnable example under `examples/`; start with
//! `compare_variants`:
//!
//! ```bash
//! cargo run --release --example compare_variants
//! ```

pub mod bounds;
pub mod count;
pub mod datagen;
pub mod episode;
pub mod event;
pub mod harness;
pub mod lattice;
pub mod levelwise;
pub mod miner;
pub mod oracle;

mod error;

pub use error::{Error, Result};
