use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use benchkit::capacity::{capacity_report, report_to_text};
use benchkit::dunno::dunno_probs;
use benchkit::events::{events_to_text, parse_events, synth_feed};
use benchkit::locality::locality_histograms;
use benchkit::runner::{rows_to_csv, sweep_replay, sweep_synth, SweepConfig};
use benchkit::workload::SynthOp;
use glass::nodepool::HandleWidth;

#[derive(Parser)]
#[command(
    name = "glassbench",
    about = "Benchmarks and analysis for the glass ordered map"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Multi-copy benchmarks, CSV on stdout.
    #[command(subcommand)]
    Bench(Bench),
    /// Sequential and edge locality histograms of a feed.
    Locality {
        #[arg(long)]
        file: PathBuf,
        /// Writes `<prefix>.sequential.dat` and `<prefix>.edge.dat`.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// "Don't know" probabilities for J = 0..=jmax.
    Dunno {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        jmax: u64,
        /// Also writes `<prefix>.present.dat` and `<prefix>.absent.dat`.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
    /// Node bound and memory per glass size (K = 50, C = 5).
    Capacity {
        #[arg(long, default_value_t = 16)]
        width: u32,
        #[arg(long, num_args = 1.., default_values_t = [900u64, 9000, 90_000, 900_000])]
        sizes: Vec<u64>,
    },
    /// Writes a synthetic replay feed.
    SynthFeed {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        len: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// A single count `N` or a range `A-B`.
    #[arg(long, default_value = "1-32", value_parser = parse_copies)]
    copies: RangeInclusive<usize>,
    /// Divides the default iteration counts.
    #[arg(long, default_value_t = 1)]
    iter_scale: usize,
}

impl SweepArgs {
    fn config(&self) -> SweepConfig {
        SweepConfig {
            copies: self.copies.clone(),
            iter_scale: self.iter_scale,
        }
    }
}

#[derive(Subcommand)]
enum Bench {
    Synth {
        /// insert, erase, find-e or find-ne.
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Distinct keys per workload.
        #[arg(long, default_value_t = 8000)]
        keys: usize,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    Replay {
        #[arg(long)]
        file: PathBuf,
        /// Repeat each iteration event this many times and drop other reads.
        #[arg(long)]
        amplify_iter: Option<usize>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

fn parse_copies(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (a.trim().parse(), b.trim().parse()),
        None => (s.trim().parse(), s.trim().parse()),
    };
    let (lo, hi): (usize, usize) = (
        lo.map_err(|e| format!("{e}"))?,
        hi.map_err(|e| format!("{e}"))?,
    );
    if lo == 0 || hi < lo || hi > 32 {
        return Err(format!("copies must satisfy 1 <= A <= B <= 32, got {s}"));
    }
    Ok(lo..=hi)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Bench(Bench::Synth {
            op,
            seed,
            keys,
            sweep,
        }) => {
            let Some(op) = SynthOp::from_name(&op) else {
                bail!("unknown op {op:?}; expected insert, erase, find-e or find-ne");
            };
            if keys > 9000 {
                bail!("at most 9000 keys fit the 16-bit glass");
            }
            let rows = sweep_synth(op, seed, keys, &sweep.config()).map_err(anyhow::Error::msg)?;
            print!("{}", rows_to_csv(&rows));
        }
        Cmd::Bench(Bench::Replay {
            file,
            amplify_iter,
            sweep,
        }) => {
            let events = parse_events(&read(&file)?)?;
            let rows =
                sweep_replay(&events, amplify_iter, &sweep.config()).map_err(anyhow::Error::msg)?;
            print!("{}", rows_to_csv(&rows));
        }
        Cmd::Locality { file, out_prefix } => {
            let events = parse_events(&read(&file)?)?;
            let (seq, edge) = locality_histograms(&events);
            write(
                with_suffix(&out_prefix, ".sequential.dat"),
                &seq.to_columns(),
            )?;
            write(with_suffix(&out_prefix, ".edge.dat"), &edge.to_columns())?;
            println!(
                "sequential {} events, edge {} events",
                seq.total(),
                edge.total()
            );
        }
        Cmd::Dunno {
            n,
            b,
            jmax,
            out_prefix,
        } => {
            if n == 0 || b == 0 {
                bail!("n and b must be positive");
            }
            let (mut present, mut absent) = (String::new(), String::new());
            println!("J p_present p_absent");
            for j in 0..=jmax {
                let (p, m) = dunno_probs(n, b, j);
                println!("{j} {p:.6e} {m:.6e}");
                present.push_str(&format!("{j} {p:.6e}\n"));
                absent.push_str(&format!("{j} {m:.6e}\n"));
            }
            if let Some(prefix) = out_prefix {
                write(with_suffix(&prefix, ".present.dat"), &present)?;
                write(with_suffix(&prefix, ".absent.dat"), &absent)?;
            }
        }
        Cmd::Capacity { width, sizes } => {
            let Some(w) = HandleWidth::from_bits(width) else {
                bail!("width must be 16 or 32");
            };
            print!("{}", report_to_text(&capacity_report(w, &sizes)));
        }
        Cmd::SynthFeed { seed, len, out } => {
            write(out, &events_to_text(&synth_feed(seed, len)))?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
