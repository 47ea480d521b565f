//! `breakage` — batch pipeline from filter-list history and paired page
//! recordings to a trained breakage classifier.
//!
//! The subcommands compose into the full pipeline:
//!
//! ```text
//! mine      commit log  -> labeled page examples (JSONL)
//! simulate  config      -> synthetic dataset of recording triples
//! diff      pre + post  -> intervention subgraph (GraphML)
//! featurize dataset dir -> feature matrix (CSV)
//! train     features    -> model file (JSON)
//! evaluate  features    -> nested cross-validation report
//! loco      features    -> feature-importance report
//! curve     features    -> learning-curve report
//! match     rules + url -> block/allow decision
//! ```
//!
//! Every command emits a run manifest as one JSON line on stderr and is
//! byte-deterministic given the same inputs, seed, and `--jobs` setting.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

fn version_string() -> String {
    format!(
        "{} (feature schema v{})",
        breakage_core::VERSION,
        breakage_core::features::SCHEMA_VERSION
    )
}

#[derive(Parser)]
#[command(
    name = "breakage",
    about = "Predicts whether applying a content-filter rule breaks a web page",
    version = version_string()
)]
struct Cli {
    /// Worker threads for parallel stages; 0 means all available cores.
    /// Results are identical for every setting.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract labeled page examples from a filter-list commit log.
    Mine {
        /// Commit log, one JSON commit per line.
        #[arg(long)]
        commits: PathBuf,
        /// Output file for labeled examples, one JSON object per line.
        #[arg(long)]
        out: PathBuf,
        /// Ignore commits before this date (YYYY-MM-DD, default 2013-01-01).
        #[arg(long)]
        since: Option<String>,
    },
    /// Generate a synthetic labeled dataset of recording triples.
    Simulate {
        /// Generator config (JSON: seed, n_examples, broken_fraction,
        /// signal_strength, size_range).
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the intervention subgraph between two page recordings.
    Diff {
        /// Recording without the intervention (GraphML).
        #[arg(long)]
        pre: PathBuf,
        /// Recording with the intervention applied (GraphML).
        #[arg(long)]
        post: PathBuf,
        /// Output GraphML file.
        #[arg(long)]
        out: PathBuf,
        /// Identifier stored with the pair.
        #[arg(long, default_value = "pair")]
        example_id: String,
    },
    /// Extract the feature matrix for a dataset directory.
    Featurize {
        /// Dataset directory produced by `simulate` (or laid out the same).
        #[arg(long)]
        dataset: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the column schema as JSONL.
        #[arg(long)]
        schema_out: Option<PathBuf>,
    },
    /// Train a classifier with default hyperparameters.
    Train {
        /// Feature matrix CSV from `featurize`.
        #[arg(long)]
        features: PathBuf,
        /// Output model file (JSON).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate generalization with nested cross-validated search.
    Evaluate {
        /// Feature matrix CSV from `featurize`.
        #[arg(long)]
        features: PathBuf,
        /// Output report (JSON).
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Outer folds.
        #[arg(long, default_value_t = 10)]
        outer: usize,
        /// Inner folds for the hyperparameter search.
        #[arg(long, default_value_t = 3)]
        inner: usize,
        /// Random-search candidates per outer fold.
        #[arg(long, default_value_t = 10)]
        budget: usize,
    },
    /// Rank features by retraining without them (leave-one-covariate-out).
    Loco {
        /// Feature matrix CSV from `featurize`.
        #[arg(long)]
        features: PathBuf,
        /// Output report (JSON).
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Comma-separated feature or group names to leave out
        /// (default: every feature group).
        #[arg(long, value_delimiter = ',')]
        targets: Vec<String>,
    },
    /// Measure test AUC as a function of training-set size.
    Curve {
        /// Feature matrix CSV from `featurize`.
        #[arg(long)]
        features: PathBuf,
        /// Output report (JSON).
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
    },
    /// Decide whether a rule list blocks one request.
    Match {
        /// Filter-list file, one rule per line.
        #[arg(long)]
        rules: PathBuf,
        /// Request URL.
        #[arg(long)]
        url: String,
        /// Resource type: script, image, stylesheet, subdocument, xhr, other.
        #[arg(long = "type")]
        resource_type: String,
        /// Origin host of the frame issuing the request.
        #[arg(long)]
        frame: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();

    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            eprintln!("error: cannot configure {} worker threads: {e}", cli.jobs);
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::Mine { commits, out, since } => {
            commands::mine(commits, out, since.as_deref())
        }
        Command::Simulate { config, out } => commands::simulate(config, out),
        Command::Diff {
            pre,
            post,
            out,
            example_id,
        } => commands::diff_graphs(pre, post, out, example_id),
        Command::Featurize {
            dataset,
            out,
            schema_out,
        } => commands::featurize(dataset, out, schema_out.as_ref()),
        Command::Train {
            features,
            model,
            seed,
        } => commands::train(features, model, *seed),
        Command::Evaluate {
            features,
            report,
            seed,
            outer,
            inner,
            budget,
        } => commands::evaluate(features, report, *seed, *outer, *inner, *budget),
        Command::Loco {
            features,
            report,
            seed,
            folds,
            targets,
        } => commands::loco(features, report, *seed, *folds, targets),
        Command::Curve {
            features,
            report,
            seed,
            folds,
        } => commands::curve(features, report, *seed, *folds),
        Command::Match {
            rules,
            url,
            resource_type,
            frame,
        } => commands::match_request(rules, url, resource_type, frame),
    };

    match result {
        Ok(manifest) => {
            manifest.emit(started);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
