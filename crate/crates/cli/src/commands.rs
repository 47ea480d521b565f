//! Implementations of the pipeline subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use breakage_core::dataset;
use breakage_core::diff;
use breakage_core::eval::{
    self, CandidateConfig, CurveConfig, LocoConfig, NestedCvConfig, CURVE_FRACTIONS,
};
use breakage_core::features;
use breakage_core::filter::{decide, FilterList, Outcome, RequestContext, ResourceType};
use breakage_core::graph::graphml;
use breakage_core::mining;
use breakage_core::ml::{Matrix, MlError, ModelDocument, Pipeline};
use breakage_core::synth::{self, SynthConfig};
use breakage_core::{GraphTriple, Hyperparams, Label};

use crate::manifest::RunManifest;

/// Errors split by who must act: bad input (exit 2) or everything else
/// (exit 1).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", path.display())))
}

fn write_json_report<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create_output(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Internal(format!("cannot serialize report: {e}")))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Maps a modelling error: shape/data problems are the user's, the rest ours.
fn ml_error(e: MlError) -> CliError {
    match e {
        MlError::EmptyMatrix | MlError::AllFeaturesDropped | MlError::SchemaMismatch { .. } => {
            CliError::Input(e.to_string())
        }
        other => CliError::Internal(other.to_string()),
    }
}

fn eval_error(e: eval::EvalError) -> CliError {
    match e {
        eval::EvalError::TooFewSamples { .. }
        | eval::EvalError::BadConfig(_)
        | eval::EvalError::UnknownTarget(_)
        | eval::EvalError::DegenerateFold => CliError::Input(e.to_string()),
        eval::EvalError::Ml(inner) => ml_error(inner),
    }
}

fn load_feature_matrix(path: &Path) -> Result<(Matrix, Vec<u8>, usize), CliError> {
    let schema = features::schema_v1();
    let rows = features::read_csv(open_input(path)?, schema)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no feature rows", path.display())));
    }
    let n = rows.len();
    let (x, y) = Matrix::from_feature_rows(&rows);
    Ok((x, y, n))
}

pub fn mine(
    commits: &Path,
    out: &Path,
    since: Option<&str>,
) -> Result<RunManifest, CliError> {
    let cutoff = match since {
        Some(s) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|e| CliError::Input(format!("--since `{s}` is not a YYYY-MM-DD date: {e}")))?
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists")
            .and_utc(),
        None => mining::default_cutoff(),
    };
    let records = mining::parse_commit_log(open_input(commits)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", commits.display())))?;
    let outcome = mining::mine_examples(&records, cutoff);

    let mut w = create_output(out)?;
    for example in &outcome.examples {
        serde_json::to_writer(&mut w, example)
            .map_err(|e| CliError::Internal(format!("cannot serialize example: {e}")))?;
        w.write_all(b"\n")
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out.display())))?;
    }
    w.flush()
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out.display())))?;

    let stats = &outcome.stats;
    println!(
        "mined {} examples ({} broken, {} working) from {} commits",
        outcome.examples.len(),
        stats.examples_broken,
        stats.examples_working,
        stats.commits_total
    );
    Ok(RunManifest::new("mine")
        .input(commits)
        .output(out)
        .count("commits", stats.commits_total as u64)
        .count("examples", outcome.examples.len() as u64)
        .count("examples_broken", stats.examples_broken as u64)
        .count("examples_working", stats.examples_working as u64)
        .count("commits_skipped_other", stats.commits_other as u64)
        .count("commits_before_cutoff", stats.commits_before_cutoff as u64)
        .count("unsupported_lines", stats.unsupported_lines as u64))
}

pub fn simulate(config: &Path, out: &Path) -> Result<RunManifest, CliError> {
    let cfg: SynthConfig = serde_json::from_reader(open_input(config)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", config.display())))?;
    let examples = synth::generate_dataset(&cfg).map_err(|e| CliError::Input(e.to_string()))?;
    dataset::save_dataset(out, &examples)
        .map_err(|e| CliError::Internal(format!("cannot write dataset: {e}")))?;

    let broken = examples.iter().filter(|e| e.label == Label::Broken).count();
    println!(
        "wrote {} examples ({} broken, {} working) to {}",
        examples.len(),
        broken,
        examples.len() - broken,
        out.display()
    );
    Ok(RunManifest::new("simulate")
        .input(config)
        .output(out)
        .seed(cfg.seed)
        .count("examples", examples.len() as u64)
        .count("examples_broken", broken as u64)
        .count("examples_working", (examples.len() - broken) as u64))
}

pub fn diff_graphs(
    pre: &Path,
    post: &Path,
    out: &Path,
    example_id: &str,
) -> Result<RunManifest, CliError> {
    let pre_graph = graphml::load_graphml(open_input(pre)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", pre.display())))?;
    let post_graph = graphml::load_graphml(open_input(post)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", post.display())))?;
    let flipped = diff::flipped_resources(&pre_graph, &post_graph).len();
    let triple = GraphTriple::from_pair(example_id, pre_graph, post_graph)
        .map_err(|e| CliError::Input(e.to_string()))?;
    if triple.is_effectless() {
        eprintln!("warning: recordings have no flipped resources; intervention graph is empty");
    }
    graphml::save_graphml(&triple.intervention, create_output(out)?)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out.display())))?;

    println!(
        "intervention subgraph: {} nodes, {} edges ({} flipped resources)",
        triple.intervention.nodes().len(),
        triple.intervention.edges().len(),
        flipped
    );
    Ok(RunManifest::new("diff")
        .input(pre)
        .input(post)
        .output(out)
        .count("pre_nodes", triple.pre.nodes().len() as u64)
        .count("post_nodes", triple.post.nodes().len() as u64)
        .count("intervention_nodes", triple.intervention.nodes().len() as u64)
        .count("intervention_edges", triple.intervention.edges().len() as u64)
        .count("flipped_resources", flipped as u64))
}

pub fn featurize(
    dataset_dir: &Path,
    out: &Path,
    schema_out: Option<&PathBuf>,
) -> Result<RunManifest, CliError> {
    let examples = dataset::load_dataset(dataset_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dataset_dir.display())))?;
    if examples.is_empty() {
        return Err(CliError::Input(format!(
            "{}: dataset is empty",
            dataset_dir.display()
        )));
    }
    let schema = features::schema_v1();
    let rows = features::extract_dataset(schema, &examples);
    features::write_csv(create_output(out)?, schema, &rows)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", out.display())))?;
    let mut manifest = RunManifest::new("featurize")
        .input(dataset_dir)
        .output(out)
        .count("examples", rows.len() as u64)
        .count("columns", schema.len() as u64);
    if let Some(path) = schema_out {
        features::write_schema_manifest(create_output(path)?, schema)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        manifest = manifest.output(path);
    }
    println!(
        "extracted {} columns for {} examples",
        schema.len(),
        rows.len()
    );
    Ok(manifest)
}

pub fn train(features_path: &Path, model: &Path, seed: u64) -> Result<RunManifest, CliError> {
    let schema = features::schema_v1();
    let (x, y, n) = load_feature_matrix(features_path)?;
    let hp = Hyperparams {
        seed,
        ..Hyperparams::default()
    };
    let prep = breakage_core::ml::PreprocessConfig::default();
    let pipeline = Pipeline::fit(&x, &y, &prep, &hp).map_err(ml_error)?;
    let names: Vec<String> = pipeline
        .preprocessor
        .kept
        .iter()
        .map(|&c| schema.specs()[c].name.clone())
        .collect();
    let kept = names.len();
    let trees = pipeline.booster.trees.len();
    let doc = ModelDocument::new(
        schema.version(),
        names,
        pipeline.preprocessor,
        pipeline.booster,
    );
    doc.save(model)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    println!(
        "trained {} trees on {} rows ({} of {} columns kept)",
        trees,
        n,
        kept,
        schema.len()
    );
    Ok(RunManifest::new("train")
        .input(features_path)
        .output(model)
        .seed(seed)
        .count("rows", n as u64)
        .count("kept_columns", kept as u64)
        .count("trees", trees as u64))
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    features_path: &Path,
    report: &Path,
    seed: u64,
    outer: usize,
    inner: usize,
    budget: usize,
) -> Result<RunManifest, CliError> {
    let (x, y, n) = load_feature_matrix(features_path)?;
    let cfg = NestedCvConfig {
        outer_folds: outer,
        inner_folds: inner,
        budget,
        seed,
        ..NestedCvConfig::default()
    };
    let result = eval::nested_cv(&x, &y, &cfg).map_err(eval_error)?;
    write_json_report(report, &result)?;

    println!(
        "mean AUC {:.4} (std {:.4}) over {} outer folds",
        result.mean_auc,
        result.std_auc,
        result.outer.len()
    );
    Ok(RunManifest::new("evaluate")
        .input(features_path)
        .output(report)
        .seed(seed)
        .count("rows", n as u64)
        .count("outer_folds", outer as u64)
        .count("candidates_per_fold", budget as u64))
}

/// Default leave-out targets: every named feature group.
const DEFAULT_LOCO_TARGETS: [&str; 7] = [
    "expert",
    "auto",
    "page",
    "intervention",
    "network",
    "absolute",
    "relative",
];

pub fn loco(
    features_path: &Path,
    report: &Path,
    seed: u64,
    folds: usize,
    targets: &[String],
) -> Result<RunManifest, CliError> {
    let schema = features::schema_v1();
    let (x, y, n) = load_feature_matrix(features_path)?;
    let targets: Vec<String> = if targets.is_empty() {
        DEFAULT_LOCO_TARGETS.iter().map(|s| s.to_string()).collect()
    } else {
        targets.to_vec()
    };
    let cfg = LocoConfig {
        folds,
        seed,
        candidate: CandidateConfig::default(),
    };
    let result = eval::loco(&x, &y, schema, &targets, &cfg).map_err(eval_error)?;
    write_json_report(report, &result)?;

    println!("baseline AUC {:.4}", result.baseline_auc);
    for entry in &result.entries {
        println!("  without {}: AUC {:.4} (loss {:+.4})", entry.target, entry.mean_auc, entry.auc_loss);
    }
    Ok(RunManifest::new("loco")
        .input(features_path)
        .output(report)
        .seed(seed)
        .count("rows", n as u64)
        .count("targets", targets.len() as u64)
        .count("folds", folds as u64))
}

pub fn curve(
    features_path: &Path,
    report: &Path,
    seed: u64,
    folds: usize,
) -> Result<RunManifest, CliError> {
    let (x, y, n) = load_feature_matrix(features_path)?;
    let cfg = CurveConfig {
        folds,
        fractions: CURVE_FRACTIONS.to_vec(),
        seed,
        candidate: CandidateConfig::default(),
    };
    let result = eval::learning_curve(&x, &y, &cfg).map_err(eval_error)?;
    write_json_report(report, &result)?;

    for point in &result.points {
        if point.available {
            println!(
                "fraction {:.2}: AUC {:.4} (std {:.4})",
                point.fraction, point.mean_auc, point.std_auc
            );
        } else {
            println!(
                "fraction {:.2}: unavailable (a class would have no training rows)",
                point.fraction
            );
        }
    }
    Ok(RunManifest::new("curve")
        .input(features_path)
        .output(report)
        .seed(seed)
        .count("rows", n as u64)
        .count("folds", folds as u64)
        .count("fractions", CURVE_FRACTIONS.len() as u64))
}

pub fn match_request(
    rules_path: &Path,
    url: &str,
    resource_type: &str,
    frame: &str,
) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(rules_path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", rules_path.display())))?;
    let list = FilterList::parse(&text);
    let rtype = ResourceType::from_str_opt(resource_type).ok_or_else(|| {
        CliError::Input(format!(
            "unknown resource type `{resource_type}` (script, image, stylesheet, subdocument, xhr, other)"
        ))
    })?;
    let ctx = RequestContext::new(url, rtype, frame)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let decision = decide(&list.rules, &ctx);
    match (decision.outcome, decision.matched_rule) {
        (Outcome::Blocked, Some(i)) => println!("blocked rule={} {}", i, list.rules[i].raw),
        (Outcome::ExceptionAllowed, Some(i)) => {
            println!("allowed exception={} {}", i, list.rules[i].raw)
        }
        _ => println!("allowed"),
    }
    Ok(RunManifest::new("match")
        .input(rules_path)
        .count("rules", list.rules.len() as u64)
        .count("unsupported_lines", list.unsupported.len() as u64))
}
