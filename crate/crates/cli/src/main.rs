use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dpgc_cli::settings::parse_dims;
use dpgc_cli::{run_bench, BenchError, Problem, Settings};
use dpgc_core::dimacs::write_dimacs;
use dpgc_core::{build_seg1, build_seg2, gen_synthetic, SegParams, SyntheticKind};

#[derive(Parser)]
#[command(name = "dpgc", version, about = "Parallel graph cuts with dynamic subgraph merging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Time serial BK against the parallel modes and write a CSV report
    Bench {
        /// TOML file with the same keys as the long flags (underscores for dashes)
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write a synthetic image as PGM, or its segmentation graph as DIMACS
    Gen {
        /// seg1_worst or seg2_random
        #[arg(long)]
        kind: SyntheticKind,
        /// Image size as <W>x<H>
        #[arg(long, value_parser = parse_dims)]
        size: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the seg1/seg2 graph in DIMACS format instead of the image
        #[arg(long)]
        graph: Option<Problem>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn bench(config: Option<PathBuf>, flags: Settings) -> Result<()> {
    let settings = match config {
        Some(path) => Settings::from_toml_file(&path)?.overlay(&flags),
        None => flags,
    };
    let cfg = settings.resolve()?;
    let report = run_bench(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            report.write_csv(BufWriter::new(file))?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    if let Some(path) = &cfg.hist {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        report.write_histogram(BufWriter::new(file), cfg.hist_bin)?;
    }
    Ok(())
}

fn gen(kind: SyntheticKind, (w, h): (usize, usize), seed: u64, graph: Option<Problem>, out: PathBuf) -> Result<()> {
    let img = gen_synthetic(kind, w, h, seed)?;
    let g = match graph {
        None => return Ok(img.write_pgm(&out)?),
        Some(Problem::Seg1) => build_seg1(&img, &SegParams::seg1_worst())?,
        Some(Problem::Seg2) => build_seg2(&img, &SegParams::seg2_random())?,
        Some(Problem::Raw) => bail!("--graph takes seg1 or seg2"),
    };
    let mut file = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
    write_dimacs(&g, &mut file)?;
    file.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench { config, settings } => bench(config, settings),
        Command::Gen { kind, size, seed, graph, out } => gen(kind, size, seed, graph, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<BenchError>() {
                Some(BenchError::CutMismatch { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
