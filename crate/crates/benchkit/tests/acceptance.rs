//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p benchkit --test acceptance -- --nocapture` to see
//! the lines on success; on failure they are shown anyway.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use benchkit::capacity::capacity_report;
use benchkit::dunno::{dunno_prob_absent, dunno_probs, simulate_absent};
use benchkit::events::synth_feed;
use benchkit::maps::{bench_glass, Structure};
use benchkit::runner::{
    rows_to_csv, run_synth, sweep_replay, sweep_synth, SweepConfig, SweepRow, AMPLIFY_FACTOR,
};
use benchkit::workload::{synth_workload, SynthOp};
use glass::bitops::{
    common_prefix_chunks, next_set_bit, prev_set_bit, truncation_len, DivisionPlan, TrieGeometry,
};
use glass::cachetable::{CacheTable, Lookup};
use glass::nodepool::{max_size_for_capacity, HandleWidth, Pool};
use glass::oracle::{book_fuzz_run, fuzz_run, gen_book_ops, gen_trace, RefBook, RefMap, Shape};
use glass::{BookConfig, EdgeMode, Glass, GlassConfig, Growth, OrderBook, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome, Duration);

fn rel_err(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

fn capacity_table() -> Outcome {
    let sizes = [900, 9000, 90_000, 900_000];
    let want = [
        (HandleWidth::W16, ["339.05 Kb", "2.93 Mb", "N/A", "N/A"]),
        (
            HandleWidth::W32,
            ["565.08 Kb", "4.89 Mb", "43.78 Mb", "414.57 Mb"],
        ),
    ];
    let mut got_all = Vec::new();
    for (width, cells) in want {
        let got: Vec<String> = capacity_report(width, &sizes)
            .iter()
            .map(|r| r.cell())
            .collect();
        if got != cells {
            return Err(format!("{}-bit: got {got:?}, want {cells:?}", width.bits()));
        }
        got_all.extend(got);
    }
    Ok(got_all.join(" | "))
}

fn inverse_capacity() -> Outcome {
    let geo = TrieGeometry::new(50, 5).map_err(|e| e.to_string())?;
    let s = max_size_for_capacity(65534, &geo);
    if s.abs_diff(9210) <= 1 {
        Ok(format!("max size for 65534 nodes = {s}"))
    } else {
        Err(format!("max size for 65534 nodes = {s}, want 9210 +- 1"))
    }
}

fn probability_present() -> Outcome {
    let (plus, _) = dunno_probs(9210, 32768, 5);
    let e = rel_err(plus, 3.76e-7);
    let line = format!("p_present = {plus:.4e}, target 3.76e-7, rel err {e:.3}");
    if e <= 0.02 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn probability_absent() -> Outcome {
    let (_, minus) = dunno_probs(9210, 32768, 5);
    let e = rel_err(minus, 2.14e-8);
    let line = format!("p_absent = {minus:.4e}, target 2.14e-8, rel err {e:.3}");
    if e <= 0.02 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn worked_examples() -> Outcome {
    let geo = TrieGeometry::with_word_bits(3, 1, 8).map_err(|e| e.to_string())?;
    let lambda = common_prefix_chunks(0b010, 0b011, &geo);
    let cut = truncation_len(4, 3, 1);
    let line = format!("common prefix = {lambda}, truncation = {cut}");
    if lambda == 2 && cut == 1 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn bitops_exhaustive() -> Outcome {
    for mask in 0u64..1 << 16 {
        for i in 0u32..16 {
            let next = (i + 1..64).find(|&j| mask >> j & 1 == 1);
            let prev = (0..i).rev().find(|&j| mask >> j & 1 == 1);
            if next_set_bit(mask, i) != next || prev_set_bit(mask, i) != prev {
                return Err(format!("mismatch at mask {mask:#x}, i {i}"));
            }
        }
    }
    let mut checked = 0u64;
    for c in 1u32..=6 {
        let plan = DivisionPlan::new(c);
        for kappa in (0u64..1 << 20).step_by(c as usize) {
            if plan.exact_div(kappa) != kappa / u64::from(c) {
                return Err(format!("exact division wrong for {kappa} / {c}"));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{} bit scans and {checked} divisions agree",
        (1u64 << 16) * 16
    ))
}

fn feature_configs() -> Vec<GlassConfig> {
    let mut out = Vec::new();
    for cache in [false, true] {
        for edge in [EdgeMode::Eager, EdgeMode::Lazy] {
            for trash in [false, true] {
                out.push(
                    GlassConfig::default()
                        .cache_table(cache)
                        .edge_mode(edge)
                        .trash_encoding(trash),
                );
            }
        }
    }
    out
}

fn glass_fuzz() -> Outcome {
    const OPS: usize = 1_000_000;
    const CHECKED_OPS: usize = 100_000;
    let mut total = 0;
    for (i, cfg) in feature_configs().into_iter().enumerate() {
        let trace = gen_trace(1000 + i as u64, Shape::local(), cfg.key_bits, OPS);
        let mut g: Glass = Glass::new(cfg).map_err(|e| e.to_string())?;
        let mut reference = RefMap::new(cfg.key_bits, Some(cfg.max_size));
        fuzz_run(&mut g, &mut reference, &trace.ops, false).map_err(|d| format!("{cfg:?}: {d}"))?;
        total += trace.ops.len();

        let trace = gen_trace(2000 + i as u64, Shape::local(), cfg.key_bits, CHECKED_OPS);
        let mut g: Glass = Glass::new(cfg.growth(Growth::Doubling)).map_err(|e| e.to_string())?;
        let mut reference = RefMap::new(cfg.key_bits, Some(cfg.max_size));
        fuzz_run(&mut g, &mut reference, &trace.ops, true)
            .map_err(|d| format!("{cfg:?} (checked): {d}"))?;
    }
    Ok(format!("8 configs, {total} ops unchecked plus 8 x {CHECKED_OPS} with integrity checks, 0 divergences"))
}

fn book_fuzz() -> Outcome {
    const OPS: usize = 100_000;
    let mut report = Vec::new();
    for max_size in [4usize, 64] {
        let window = 25.min(max_size - 1);
        for side in [Side::Min, Side::Max] {
            let ops = gen_book_ops(max_size as u64 * 7 + side as u64, side, 50, OPS, window);
            let cfg = BookConfig::new(side).max_size(max_size).window(window);
            let mut book: OrderBook = OrderBook::new(cfg).map_err(|e| e.to_string())?;
            let mut reference = RefBook::new(side);
            let too_far = book_fuzz_run(&mut book, &mut reference, &ops)
                .map_err(|d| format!("S={max_size} {side:?}: {d}"))?;
            if too_far == 0 {
                return Err(format!(
                    "S={max_size} {side:?}: the too-far guard never fired"
                ));
            }
            report.push(format!(
                "S={max_size} {side:?}: {} restructures, {too_far} too-far",
                book.stats().restructures
            ));
        }
    }
    Ok(report.join("; "))
}

fn cache_table_properties() -> Outcome {
    const N: usize = 10_000;
    const J: usize = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pool: Pool<u16, u64> =
        Pool::new(2, N, Growth::Preallocate, true).map_err(|e| e.to_string())?;
    let mut table: CacheTable<u16> = CacheTable::new(1024);
    let mut keys = BTreeMap::new();
    for _ in 0..N {
        let h = pool.allocate().map_err(|e| e.to_string())?;
        let key: u64 = rng.random::<u64>() >> 14;
        table.insert(&mut pool, key, h);
        keys.insert(h, key);
    }
    let old: Vec<Vec<u16>> = (0..table.bucket_count())
        .map(|b| table.chain(&pool, b))
        .collect();
    table.grow(&mut pool);
    for nb in 0..table.bucket_count() {
        let want: Vec<u16> = old[nb >> 1]
            .iter()
            .copied()
            .filter(|&h| table.bucket_of(keys[&h]) == nb)
            .collect();
        if table.chain(&pool, nb) != want {
            return Err(format!("bucket {nb} order differs from stable partition"));
        }
    }

    let mut dont_know = 0;
    for q in 0..50_000 {
        let key = if q % 2 == 0 {
            keys[&(rng.random_range(0..N) as u16)]
        } else {
            rng.random::<u64>() >> 14
        };
        let chain = table.chain(&pool, table.bucket_of(key));
        let probes_before = table.stats().probes.get();
        let got = table.lookup(&pool, key);
        let probes = table.stats().probes.get() - probes_before;
        if probes > J as u64 {
            return Err(format!("lookup inspected {probes} entries"));
        }
        let present = chain.iter().find(|&&h| keys[&h] == key).copied();
        match got {
            Lookup::DontKnow if chain.len() <= J => {
                return Err(format!("don't know on a chain of {}", chain.len()))
            }
            Lookup::DontKnow => dont_know += 1,
            Lookup::Exists(h) if Some(h) == present => {}
            Lookup::Absent if present.is_none() => {}
            other => return Err(format!("lookup gave {other:?}, chain holds {present:?}")),
        }
    }
    Ok(format!(
        "{} buckets after grow, order kept; {dont_know} don't-knows, all on chains > {J}",
        table.bucket_count()
    ))
}

fn performance() -> Outcome {
    let keys = 8000;
    let w = synth_workload(SynthOp::FindExisting, 1, keys, 50);
    let glass = run_synth(Structure::Glass, || bench_glass(keys), &w, 1, 200);
    let tree = run_synth(Structure::BTree, BTreeMap::new, &w, 1, 200);
    let ratio = tree.ns_per_op() / glass.ns_per_op();

    // Iteration counts are scaled down; the CLI runs the full ones.
    let synth_cfg = SweepConfig {
        copies: 1..=32,
        iter_scale: 250,
    };
    let replay_cfg = SweepConfig {
        copies: 1..=32,
        iter_scale: 7500,
    };
    let mut rows: Vec<SweepRow> = Vec::new();
    for op in SynthOp::ALL {
        rows.extend(sweep_synth(op, 1, 2000, &synth_cfg)?);
    }
    let feed = synth_feed(1, 4000);
    rows.extend(sweep_replay(&feed, None, &replay_cfg)?);
    rows.extend(sweep_replay(&feed, Some(AMPLIFY_FACTOR), &replay_cfg)?);
    let csv = rows_to_csv(&rows);
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("ratio_vs_copies.csv");
    std::fs::write(&path, &csv).map_err(|e| e.to_string())?;
    let families: std::collections::BTreeSet<&str> =
        rows.iter().map(|r| r.family.as_str()).collect();
    let line = format!(
        "find-e ratio btree/glass = {ratio:.2}; {} CSV rows over {} families at {}",
        rows.len(),
        families.len(),
        path.display()
    );
    if ratio > 1.0 && rows.len() == 6 * 32 && families.len() == 6 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn monte_carlo() -> Outcome {
    let analytic = dunno_prob_absent(1000, 1024, 2);
    let est = simulate_absent(1000, 1024, 2, 10_000_000, 10);
    let z = (est.mean - analytic) / est.std_err;
    let line = format!(
        "analytic {analytic:.5}, simulated {:.5} +- {:.5} over {} bins, z = {z:.2}",
        est.mean, est.std_err, est.observations
    );
    if z.abs() <= 3.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        (
            "1",
            "capacity table",
            capacity_table,
            Duration::from_secs(1),
        ),
        (
            "2",
            "inverse capacity",
            inverse_capacity,
            Duration::from_secs(1),
        ),
        (
            "3a",
            "p_present reproduction",
            probability_present,
            Duration::from_secs(5),
        ),
        (
            "3b",
            "p_absent reproduction",
            probability_absent,
            Duration::from_secs(5),
        ),
        (
            "4",
            "worked examples",
            worked_examples,
            Duration::from_secs(1),
        ),
        (
            "5",
            "bitops exhaustive",
            bitops_exhaustive,
            Duration::from_secs(120),
        ),
        (
            "6",
            "glass differential fuzz",
            glass_fuzz,
            Duration::from_secs(600),
        ),
        (
            "7",
            "order book differential fuzz",
            book_fuzz,
            Duration::from_secs(300),
        ),
        (
            "8",
            "cache table properties",
            cache_table_properties,
            Duration::from_secs(60),
        ),
        (
            "9",
            "performance and ratio CSV",
            performance,
            Duration::from_secs(1800),
        ),
        (
            "10",
            "Monte-Carlo check",
            monte_carlo,
            Duration::from_secs(120),
        ),
    ];
    let mut failed = Vec::new();
    for (id, name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d} (took {took:.1?}, limit {limit:?})")),
            Err(d) => (false, d),
        };
        println!(
            "{} [{id}] {name}: {detail} ({took:.2?})",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
