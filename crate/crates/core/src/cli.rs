//! The `mnam` command line: experiment training, certification, evaluation,
//! importance and shape export.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data
//! error (unreadable or mismatched data or model files), 4 certification
//! failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::artifact::{ModelArtifact, ModelParams};
use crate::baselines::{fcnn_train, lr_train};
use crate::config::{ExperimentConfig, ModelKind, NamedConstraints};
use crate::data::recipe::{load_and_preprocess, PreprocessSummary};
use crate::data::snapshot::content_hash;
use crate::data::{split, Dataset, Normalization};
use crate::error::{Error, Result};
use crate::importance::{feature_importance, top_k_cumulative, ImportanceReport};
use crate::metrics::{evaluate, render_tables, EvalReport};
use crate::monotonicity::{certify, CertReport, PenaltyConfig};
use crate::nam::NamModel;
use crate::training::{certified_train, train_nam, RoundRecord};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_CERTIFICATION: u8 = 4;

const DEFAULT_SHAPE_GRID: usize = 101;

#[derive(Debug, Parser)]
#[command(
    name = "mnam",
    version,
    about = "Monotonic neural additive models for default prediction"
)]
pub struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Classification threshold on the predicted probability of default.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Certification grid (train, certify) or shape grid (export-shapes).
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the configured model and write model.json, eval.json/eval.txt and,
    /// for additive models with constraints, cert.json (plus trace.jsonl for mnam).
    Train,
    /// Certify a saved additive model; prints the certificate as JSON.
    Certify {
        #[arg(long)]
        model: PathBuf,
        /// Individually monotone features (comma separated names).
        #[arg(long, value_delimiter = ',')]
        individual: Vec<String>,
        /// Dominance pair `u:v` (repeatable).
        #[arg(long = "pair", value_parser = parse_pair)]
        pairs: Vec<(String, String)>,
    },
    /// Evaluate a saved model on the config's test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Overrides the config's data file.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Sensitivity importance of a saved model on the config's training split.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Write one `x,x_raw,f` CSV per feature of a saved additive model.
    ExportShapes {
        #[arg(long)]
        model: PathBuf,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once(':') {
        Some((u, v)) if !u.is_empty() && !v.is_empty() => Ok((u.to_string(), v.to_string())),
        _ => Err(format!("expected `u:v`, got `{s}`")),
    }
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

/// Exit code of an error raised outside a stage that fixes it.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Constraint(_)
        | Error::FeatureIndex { .. }
        | Error::NonFiniteLoss { .. } => EXIT_CONFIG,
        Error::Data(_)
        | Error::Schema { .. }
        | Error::Csv(_)
        | Error::SingleClass
        | Error::LengthMismatch { .. }
        | Error::FeatureMismatch { .. }
        | Error::Snapshot { .. }
        | Error::Artifact { .. } => EXIT_DATA,
        Error::CertificationFailed(_) => EXIT_CERTIFICATION,
        Error::DegenerateImportance | Error::Json(_) | Error::Io(_) => EXIT_INTERNAL,
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn data_stage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io(_) | Error::Json(_) => Failure::new(EXIT_DATA, e.to_string()),
        other => other.into(),
    })
}

fn config_stage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io(_) | Error::Json(_) => Failure::new(EXIT_CONFIG, e.to_string()),
        other => other.into(),
    })
}

fn output<T>(r: std::io::Result<T>, path: &Path) -> std::result::Result<T, Failure> {
    r.map_err(|e| {
        Failure::new(
            EXIT_INTERNAL,
            format!("cannot write {}: {e}", path.display()),
        )
    })
}

/// Raw and normalized splits of an experiment's data file.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub summary: PreprocessSummary,
    pub train_raw: Dataset,
    pub test_raw: Dataset,
    pub train: Dataset,
    pub test: Dataset,
    pub normalization: Normalization,
}

/// Preprocess, split with the config seed, then fit min-max scaling on train.
pub fn load_experiment_data(cfg: &ExperimentConfig, path: &Path) -> Result<ExperimentData> {
    let spec = cfg.recipe_spec()?;
    let prepared = load_and_preprocess(path, &spec)?;
    if let Some(expected) = &spec.expected {
        if let Err(e) = prepared.summary.verify(expected) {
            if cfg.data.strict_counts {
                return Err(e);
            }
            eprintln!("warning: {e}");
        }
    }
    let (train_raw, test_raw) = split(&prepared.dataset, cfg.data.train_fraction, cfg.seed)?;
    let normalization = Normalization::fit(&train_raw, &prepared.pair_groups)?;
    Ok(ExperimentData {
        summary: prepared.summary,
        train: normalization.apply(&train_raw)?,
        test: normalization.apply(&test_raw)?,
        train_raw,
        test_raw,
        normalization,
    })
}

/// Everything a training run produces.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub eval: EvalReport,
    pub cert: Option<CertReport>,
    pub trace: Vec<RoundRecord>,
}

/// Trains the configured model on `data.train` and evaluates it on `data.test`.
/// A certification failure is returned as [`Error::CertificationFailed`].
pub fn train_experiment(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<TrainOutcome> {
    cfg.validate()?;
    let names = data.train.feature_names();
    let cs = cfg.constraints.resolve(&names)?;
    let (params, cert, trace) = match cfg.model.kind {
        ModelKind::Lr => (
            ModelParams::Lr(lr_train(&data.train, &cfg.train)?),
            None,
            vec![],
        ),
        ModelKind::Fcnn => (
            ModelParams::Fcnn(fcnn_train(&data.train, &cfg.train)?),
            None,
            vec![],
        ),
        ModelKind::Nam => {
            let trained = train_nam(&data.train, &cs, &cfg.train, 0.0, 0.0)?;
            let cert = if cs.is_empty() {
                None
            } else {
                Some(certify(&trained.model, &cs, &cfg.train.certification)?)
            };
            (ModelParams::Nam(trained.model), cert, vec![])
        }
        ModelKind::Mnam => {
            let run = certified_train(&data.train, Some(&data.test), &cs, &cfg.train)?;
            (ModelParams::Nam(run.model), Some(run.report), run.trace)
        }
    };
    let constraints = if cfg.model.kind.is_additive() {
        cfg.constraints.clone()
    } else {
        NamedConstraints::default()
    };
    let artifact = ModelArtifact::new(
        cfg.model.kind,
        data.normalization.clone(),
        constraints,
        content_hash(&data.train),
        params,
    )?;
    let eval = evaluate(&artifact.params, &data.test, cfg.eval.threshold)?;
    Ok(TrainOutcome {
        artifact,
        eval,
        cert,
        trace,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn trace_jsonl(trace: &[RoundRecord]) -> Result<String> {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

fn write_files(dir: &Path, files: &[(&str, String)]) -> CmdResult {
    output(std::fs::create_dir_all(dir), dir)?;
    for (name, body) in files {
        let path = dir.join(name);
        output(std::fs::write(&path, body), &path)?;
    }
    Ok(())
}

fn load_config(cli: &Cli) -> std::result::Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(EXIT_CONFIG, "this command needs --config"))?;
    let mut cfg = config_stage(ExperimentConfig::load(path))?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(t) = cli.threshold {
        cfg.eval.threshold = t;
    }
    if let Some(g) = cli.grid_size {
        cfg.train.certification.grid_size = g;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    config_stage(cfg.validate())?;
    Ok(cfg)
}

fn load_model(path: &Path) -> std::result::Result<ModelArtifact, Failure> {
    data_stage(ModelArtifact::load(path))
}

fn additive(artifact: &ModelArtifact) -> std::result::Result<&NamModel, Failure> {
    artifact.params.as_nam().ok_or_else(|| {
        Failure::new(
            EXIT_CONFIG,
            format!("a {} model has no shape functions", artifact.kind.label()),
        )
    })
}

fn cmd_train(cli: &Cli) -> CmdResult {
    let cfg = load_config(cli)?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Failure::new(EXIT_CONFIG, "no output directory: set `out` or pass --out"))?;
    let data = data_stage(load_experiment_data(&cfg, &cfg.data_path()))?;
    eprintln!(
        "{} rows ({} positives) -> {} train / {} test",
        data.summary.rows,
        data.summary.positives,
        data.train.n_rows(),
        data.test.n_rows()
    );
    match train_experiment(&cfg, &data) {
        Ok(outcome) => {
            let label = cfg.model.kind.label().to_string();
            let mut files = vec![
                ("model.json", outcome.artifact.to_json()?),
                ("eval.json", to_json(&outcome.eval)?),
                ("eval.txt", render_tables(&[(label, outcome.eval.clone())])),
            ];
            if let Some(cert) = &outcome.cert {
                files.push(("cert.json", to_json(cert)?));
            }
            if cfg.model.kind == ModelKind::Mnam {
                files.push(("trace.jsonl", trace_jsonl(&outcome.trace)?));
            }
            write_files(&out, &files)?;
            print!(
                "{}",
                render_tables(&[(cfg.model.kind.label().to_string(), outcome.eval)])
            );
            if let Some(cert) = outcome.cert.filter(|c| !c.pass) {
                eprintln!("note: constraints do not certify: {:?}", cert.violations());
            }
            Ok(())
        }
        Err(Error::CertificationFailed(failure)) => {
            let files = [
                ("cert.json", to_json(&failure.report)?),
                ("trace.jsonl", trace_jsonl(&failure.trace)?),
            ];
            write_files(&out, &files)?;
            eprint!("{}", trace_jsonl(&failure.trace)?);
            Err(Failure::new(EXIT_CERTIFICATION, failure.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_certify(
    cli: &Cli,
    model: &Path,
    individual: &[String],
    pairs: &[(String, String)],
) -> CmdResult {
    let artifact = load_model(model)?;
    let nam = additive(&artifact)?;
    let mut grid = PenaltyConfig::certification();
    let mut constraints = artifact.constraints.clone();
    if cli.config.is_some() {
        let cfg = load_config(cli)?;
        grid = cfg.train.certification;
        constraints = cfg.constraints;
    }
    if !individual.is_empty() || !pairs.is_empty() {
        constraints = NamedConstraints {
            individual: individual.to_vec(),
            pairwise: pairs.to_vec(),
            ..NamedConstraints::default()
        };
    }
    if let Some(g) = cli.grid_size {
        grid.grid_size = g;
    }
    let cs = config_stage(constraints.resolve(&artifact.features))?;
    if cs.is_empty() {
        eprintln!("warning: no constraints to certify");
    }
    let report = config_stage(certify(nam, &cs, &grid))?;
    let text = to_json(&report)?;
    print!("{text}");
    if let Some(dir) = &cli.out {
        write_files(dir, &[("cert.json", text)])?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_CERTIFICATION,
            format!("certification failed on {:?}", report.violations()),
        ))
    }
}

/// Config data split back through the artifact's own normalization.
fn model_data(
    cli: &Cli,
    artifact: &ModelArtifact,
    data: Option<&PathBuf>,
) -> std::result::Result<(ExperimentConfig, Dataset, Dataset), Failure> {
    let cfg = load_config(cli)?;
    let path = data.cloned().unwrap_or_else(|| cfg.data_path());
    let exp = data_stage(load_experiment_data(&cfg, &path))?;
    let train = data_stage(artifact.normalization.apply(&exp.train_raw))?;
    let test = data_stage(artifact.normalization.apply(&exp.test_raw))?;
    Ok((cfg, train, test))
}

fn cmd_evaluate(cli: &Cli, model: &Path, data: Option<&PathBuf>) -> CmdResult {
    let artifact = load_model(model)?;
    let (cfg, _, test) = model_data(cli, &artifact, data)?;
    let report = data_stage(evaluate(&artifact.params, &test, cfg.eval.threshold))?;
    let table = render_tables(&[(artifact.kind.label().to_string(), report.clone())]);
    print!("{table}");
    if let Some(dir) = &cli.out {
        write_files(
            dir,
            &[("eval.json", to_json(&report)?), ("eval.txt", table)],
        )?;
    }
    Ok(())
}

fn importance_table(report: &ImportanceReport) -> String {
    let mut out = String::new();
    let width = report
        .features
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(7)
        .max(7);
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>10}",
        "feature", "importance", "cumulative"
    );
    let mut acc = 0.0;
    for &j in &report.ordering {
        acc += report.scores[j];
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.2}  {:>10.2}",
            report.features[j], report.scores[j], acc
        );
    }
    if let Ok(top) = top_k_cumulative(report, 0.9) {
        let _ = writeln!(out, "\n{} features reach 90% of the total", top.len());
    }
    out
}

fn cmd_importance(cli: &Cli, model: &Path, data: Option<&PathBuf>) -> CmdResult {
    let artifact = load_model(model)?;
    let (_, train, _) = model_data(cli, &artifact, data)?;
    let report = feature_importance(&artifact.params, &train)?;
    let table = importance_table(&report);
    print!("{table}");
    if let Some(dir) = &cli.out {
        write_files(
            dir,
            &[
                ("importance.json", to_json(&report)?),
                ("importance.csv", report.to_csv()),
                ("importance.txt", table),
            ],
        )?;
    }
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_export_shapes(cli: &Cli, model: &Path) -> CmdResult {
    let artifact = load_model(model)?;
    let nam = additive(&artifact)?;
    let grid = cli.grid_size.unwrap_or(DEFAULT_SHAPE_GRID);
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| model.parent().unwrap_or(Path::new(".")).join("shapes"));
    let mut files = Vec::with_capacity(nam.num_features());
    for (j, name) in artifact.features.iter().enumerate() {
        let shape = config_stage(nam.shape_eval(j, grid))?;
        let mut csv = String::from("x,x_raw,f\n");
        for (x, f) in shape {
            let _ = writeln!(csv, "{x},{},{f}", artifact.normalization.unscale(j, x));
        }
        files.push((format!("{:02}_{}.csv", j, file_stem(name)), csv));
    }
    let refs: Vec<(&str, String)> = files.iter().map(|(n, b)| (n.as_str(), b.clone())).collect();
    write_files(&dir, &refs)?;
    eprintln!("wrote {} shape files to {}", files.len(), dir.display());
    Ok(())
}

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Train => cmd_train(cli),
        Command::Certify {
            model,
            individual,
            pairs,
        } => cmd_certify(cli, model, individual, pairs),
        Command::Evaluate { model, data } => cmd_evaluate(cli, model, data.as_ref()),
        Command::Importance { model, data } => cmd_importance(cli, model, data.as_ref()),
        Command::ExportShapes { model } => cmd_export_shapes(cli, model),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> u8 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
