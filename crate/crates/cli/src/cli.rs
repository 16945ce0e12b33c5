//! Argument parsing and dispatch for the `rcacf` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_bench, cmd_eval, cmd_synth, cmd_track, VariantSummary};
use crate::config::load_overlay;
use crate::error::{CliResult, EXIT_OK};
use crate::manifest::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "rcacf",
    version,
    about = "Correlation-filter tracking, evaluation and benchmarks"
)]
pub struct Cli {
    /// Parallel jobs for `bench` (overrides the manifest).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Base seed for synthetic sequences (overrides spec and manifest).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON object of filter settings laid over the chosen variant(s).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one OTB-layout sequence and write a result file.
    Track {
        #[arg(long)]
        seq: PathBuf,
        /// base, ca or rcacf
        #[arg(long, default_value = "rcacf")]
        variant: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score result files against ground truth.
    Eval {
        /// Result files or glob patterns.
        #[arg(long, required = true, num_args = 1..)]
        results: Vec<String>,
        /// Sequence directories or dataset roots.
        #[arg(long, required = true, num_args = 1..)]
        meta: Vec<PathBuf>,
        /// `<name>: IV,SV,...` attribute file.
        #[arg(long)]
        attributes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every sequence × variant pair of a manifest.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render a synthetic sequence in OTB layout.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_summary(rows: &[VariantSummary]) {
    for v in rows {
        match (v.precision_at_20, v.success_auc) {
            (Some(p), Some(a)) => println!(
                "{}: precision@20 = {p:.4}, success AUC = {a:.4} ({} sequences, {})",
                v.label, v.sequences, v.fingerprint
            ),
            _ => println!("{}: no sequences scored ({})", v.label, v.fingerprint),
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let overlay = cli.config.as_deref().map(load_overlay).transpose()?;
    match cli.command {
        Command::Track { seq, variant, out } => {
            let r = cmd_track(&seq, &variant, &out, overlay.as_ref())?;
            println!(
                "{}: {} frames tracked with {} -> {}",
                r.sequence_id,
                r.boxes.len(),
                r.variant,
                out.display()
            );
        }
        Command::Eval {
            results,
            meta,
            attributes,
            out,
        } => {
            let summary = cmd_eval(&results, &meta, attributes.as_deref(), &out)?;
            print_summary(&summary.variants);
        }
        Command::Bench { manifest } => {
            let overrides = Overrides {
                workers: cli.workers.map(|w| w as usize),
                seed: cli.seed,
                config: overlay,
            };
            let summary = cmd_bench(&manifest, &overrides)?;
            print_summary(&summary.variants);
            println!("{} result files written", summary.result_files);
            for (variant, f) in &summary.failures {
                eprintln!("warning: {} failed under {variant}: {}", f.sequence, f.reason);
            }
            if !summary.untabulated.is_empty() {
                eprintln!(
                    "warning: left out of comparison tables: {}",
                    summary.untabulated.join(", ")
                );
            }
        }
        Command::Synth { spec, out } => {
            let meta = cmd_synth(&spec, &out, cli.seed)?;
            println!("{}: {} frames -> {}", meta.name, meta.frame_paths.len(), out.display());
        }
    }
    Ok(())
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
