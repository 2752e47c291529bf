//! Multi-copy benchmark runner.
//!
//! Every operation of a workload is applied to each of `n` independent
//! copies before moving on to the next operation, which defeats the caches
//! in proportion to `n`. Timing covers the operation loop only; building
//! and prefilling the copies is excluded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hint::black_box;
use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use glass::Side;

use crate::amplify::{amplify, Target};
use crate::events::{EventOp, FeedSide, MarketEvent};
use crate::maps::{bench_book, bench_glass, BenchBook, BenchMap, MapBook, Structure};
use crate::treap::ArenaTreap;
use crate::workload::{synth_workload, SynthOp, Workload};

pub const SYNTH_BASE_ITERATIONS: usize = 2500;
pub const REPLAY_BASE_ITERATIONS: usize = 7500;
pub const AMPLIFY_FACTOR: usize = 100;

pub fn synth_iterations(copies: usize) -> usize {
    (SYNTH_BASE_ITERATIONS / copies).max(1)
}

pub fn replay_iterations(copies: usize) -> usize {
    (REPLAY_BASE_ITERATIONS / copies).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub structure: Structure,
    pub family: String,
    pub copies: usize,
    pub iterations: usize,
    /// Operations per iteration, per copy.
    pub ops: usize,
    pub elapsed: Duration,
    /// Digest of the first copy's results in the first iteration.
    pub checksum: u64,
}

impl BenchResult {
    pub fn ns_per_op(&self) -> f64 {
        let n = (self.iterations * self.ops * self.copies).max(1);
        self.elapsed.as_nanos() as f64 / n as f64
    }
}

#[inline]
fn mix(acc: u64, v: Option<u64>) -> u64 {
    acc.wrapping_mul(0x0100_0000_01b3)
        .wrapping_add(v.map_or(0x9e37, |x| x.wrapping_add(1)))
}

pub fn run_synth<M: BenchMap>(
    structure: Structure,
    make: impl Fn() -> M,
    w: &Workload,
    copies: usize,
    iterations: usize,
) -> BenchResult {
    let mut elapsed = Duration::ZERO;
    let mut checksum = 0;
    for it in 0..iterations {
        let mut maps: Vec<M> = (0..copies).map(|_| make()).collect();
        for m in &mut maps {
            for &k in &w.prefill {
                m.insert(k, k);
            }
        }
        let mut acc = 0u64;
        let start = Instant::now();
        for &k in &w.keys {
            for (i, m) in maps.iter_mut().enumerate() {
                let r = match w.op {
                    SynthOp::Insert => Some(u64::from(m.insert(k, k))),
                    SynthOp::Erase => m.erase(k),
                    SynthOp::FindExisting | SynthOp::FindNonExisting => m.find(k),
                };
                if i == 0 {
                    acc = mix(acc, r);
                }
                black_box(r);
            }
        }
        elapsed += start.elapsed();
        if it == 0 {
            checksum = acc;
        }
        black_box(&maps);
    }
    BenchResult {
        structure,
        family: w.op.name().to_string(),
        copies,
        iterations,
        ops: w.keys.len(),
        elapsed,
        checksum,
    }
}

pub fn run_replay<B: BenchBook>(
    structure: Structure,
    family: &str,
    make: impl Fn(Side) -> B,
    events: &[MarketEvent],
    copies: usize,
    iterations: usize,
) -> BenchResult {
    let mut elapsed = Duration::ZERO;
    let mut checksum = 0;
    let mut levels = Vec::with_capacity(64);
    for it in 0..iterations {
        let mut books: Vec<[B; 2]> = (0..copies)
            .map(|_| {
                [
                    make(FeedSide::Bid.book_side()),
                    make(FeedSide::Ask.book_side()),
                ]
            })
            .collect();
        let mut acc = 0u64;
        let start = Instant::now();
        for e in events {
            let s = e.side.index();
            for (i, pair) in books.iter_mut().enumerate() {
                let book = &mut pair[s];
                let r = match e.op {
                    EventOp::Adjust { price, delta } => {
                        book.adjust(price, delta);
                        None
                    }
                    EventOp::Best => book.best(),
                    EventOp::NextBest { price } => book.next_best_after(price),
                    EventOp::Iter { depth } => {
                        levels.clear();
                        book.iterate(depth, &mut levels);
                        Some(levels.iter().fold(0u64, |a, &(p, q)| a.wrapping_add(p ^ q)))
                    }
                };
                if i == 0 {
                    acc = mix(acc, r);
                }
                black_box(r);
            }
        }
        elapsed += start.elapsed();
        if it == 0 {
            checksum = acc;
        }
        black_box(&books);
    }
    BenchResult {
        structure,
        family: family.to_string(),
        copies,
        iterations,
        ops: events.len(),
        elapsed,
        checksum,
    }
}

/// One copies count of a sweep: nanoseconds per operation for each structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub family: String,
    pub copies: usize,
    pub iterations: usize,
    pub ns: BTreeMap<&'static str, f64>,
    pub checksum: u64,
}

impl SweepRow {
    fn from_results(results: &[BenchResult]) -> Result<Self, String> {
        let first = &results[0];
        if let Some(bad) = results.iter().find(|r| r.checksum != first.checksum) {
            return Err(format!(
                "{} disagrees with {} on {} at {} copies",
                bad.structure.name(),
                first.structure.name(),
                first.family,
                first.copies
            ));
        }
        Ok(Self {
            family: first.family.clone(),
            copies: first.copies,
            iterations: first.iterations,
            ns: results
                .iter()
                .map(|r| (r.structure.name(), r.ns_per_op()))
                .collect(),
            checksum: first.checksum,
        })
    }

    /// Baseline time over glass time; above 1 means glass is faster.
    pub fn ratio(&self, baseline: Structure) -> f64 {
        self.ns[baseline.name()] / self.ns[Structure::Glass.name()]
    }
}

/// Sweep settings shared by all families.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub copies: RangeInclusive<usize>,
    /// Divides the default iteration counts, for quick runs.
    pub iter_scale: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            copies: 1..=32,
            iter_scale: 1,
        }
    }
}

impl SweepConfig {
    fn scaled(&self, base: usize) -> usize {
        (base / self.iter_scale.max(1)).max(1)
    }
}

pub fn sweep_synth(
    op: SynthOp,
    seed: u64,
    keys: usize,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>, String> {
    let w = synth_workload(op, seed, keys, 50);
    let mut rows = Vec::new();
    for n in cfg.copies.clone() {
        let iters = cfg.scaled(synth_iterations(n));
        let results = [
            run_synth(Structure::Glass, || bench_glass(keys), &w, n, iters),
            run_synth(Structure::BTree, BTreeMap::new, &w, n, iters),
            run_synth(
                Structure::Treap,
                || ArenaTreap::with_capacity(keys),
                &w,
                n,
                iters,
            ),
        ];
        rows.push(SweepRow::from_results(&results)?);
    }
    Ok(rows)
}

/// Replay sweep; with `amplify_iter`, iteration events are repeated that many
/// times and the other reads dropped.
pub fn sweep_replay(
    events: &[MarketEvent],
    amplify_iter: Option<usize>,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>, String> {
    let (family, events) = match amplify_iter {
        Some(f) => (
            format!("replay-iter-{f}x"),
            amplify(events, f, Target::Iter).map_err(|e| e.to_string())?,
        ),
        None => ("replay".to_string(), events.to_vec()),
    };
    let mut rows = Vec::new();
    for n in cfg.copies.clone() {
        let iters = cfg.scaled(replay_iterations(n));
        let results = [
            run_replay(Structure::Glass, &family, bench_book, &events, n, iters),
            run_replay(
                Structure::BTree,
                &family,
                |s| MapBook::new(s, BTreeMap::new()),
                &events,
                n,
                iters,
            ),
            run_replay(
                Structure::Treap,
                &family,
                |s| MapBook::new(s, ArenaTreap::with_capacity(1024)),
                &events,
                n,
                iters,
            ),
        ];
        rows.push(SweepRow::from_results(&results)?);
    }
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "family,copies,iterations,glass_ns,btree_ns,treap_ns,btree_ratio,treap_ratio,checksum";

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{:.2},{:.2},{:.3},{:.3},{:016x}",
            r.family,
            r.copies,
            r.iterations,
            r.ns["glass"],
            r.ns["btree"],
            r.ns["treap"],
            r.ratio(Structure::BTree),
            r.ratio(Structure::Treap),
            r.checksum
        );
    }
    out
}
