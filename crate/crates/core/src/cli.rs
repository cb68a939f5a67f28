//! The `cmxtag` command line.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data or model errors.
//! Machine-readable output goes to `--output` when given, stdout otherwise;
//! diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::cmi::{corpus_cmi_report_with, IndependentTags};
use crate::corpus::{parse_corpus_with_diagnostics, split_corpus, write_corpus, Corpus, TagsetMode};
use crate::crf::{load_model, save_model, train, TrainConfig};
use crate::error::Error;
use crate::eval::{evaluate, generate_synthetic_corpus, render_matrix, EvalReport, LangPair, MatrixAxis};
use crate::features::{EmoticonLexicon, FeatureConfig};
use crate::tuning::{grid_search, GridSpec};

#[derive(Debug, Parser)]
#[command(
    name = "cmxtag",
    version,
    about = "CRF POS tagging and Code-Mixing Index statistics for code-mixed text"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Code-Mixing Index statistics of a corpus
    Cmi(CmiArgs),
    /// Train a tagger (or run a manifest of train/tag/eval jobs)
    Train(TrainArgs),
    /// Tag a corpus with a trained model
    Tag(TagArgs),
    /// Score predicted tags against gold tags
    Eval(EvalArgs),
    /// Cross-validated grid search over c1/c2
    Grid(GridArgs),
    /// Write k-fold train/held-out splits
    Split(SplitArgs),
    /// Generate a synthetic code-mixed corpus
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Coarse,
    Fine,
    Open,
}

impl From<ModeArg> for TagsetMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Coarse => TagsetMode::Coarse,
            ModeArg::Fine => TagsetMode::Fine,
            ModeArg::Open => TagsetMode::Open,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LangPairArg {
    Hi,
    Bn,
    Te,
}

impl From<LangPairArg> for LangPair {
    fn from(p: LangPairArg) -> Self {
        match p {
            LangPairArg::Hi => LangPair::Hi,
            LangPairArg::Bn => LangPair::Bn,
            LangPairArg::Te => LangPair::Te,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReadArgs {
    /// Tagset validation for POS labels
    #[arg(long, value_enum, default_value = "open")]
    pub mode: ModeArg,
    /// Reject unknown language tags instead of mapping them to undef
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    #[arg(long, default_value_t = 3)]
    pub max_ngram: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: u32,
    /// Disable language-tag features
    #[arg(long)]
    pub no_lang_feature: bool,
    /// Emoticon lexicon, one entry per line (replaces the built-in list)
    #[arg(long)]
    pub emoticons: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimArgs {
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CmiArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    /// Count only `univ` tokens as language-independent
    #[arg(long)]
    pub univ_only: bool,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// TSV of (train, test, model, tag-column[, langpair, axis-value]) rows
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// With --manifest: use --c1/--c2 instead of a per-row grid search
    #[arg(long)]
    pub no_search: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    #[arg(long, default_value_t = 0.05)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub c2: f64,
    #[arg(long = "c1-grid", value_delimiter = ',')]
    pub c1_grid: Option<Vec<f64>>,
    #[arg(long = "c2-grid", value_delimiter = ',')]
    pub c2_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    #[arg(long = "c1-grid", value_delimiter = ',')]
    pub c1_grid: Option<Vec<f64>>,
    #[arg(long = "c2-grid", value_delimiter = ',')]
    pub c2_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub optim: OptimArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory receiving fold<k>.train.tsv and fold<k>.test.tsv
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub read: ReadArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub num_utterances: usize,
    #[arg(long, default_value_t = 0.3)]
    pub mixing: f64,
    #[arg(long, value_enum, default_value = "hi")]
    pub langpair: LangPairArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(sub: &str, msg: &str) -> CliError {
    let mut cmd = Cli::command();
    let usage = cmd
        .find_subcommand_mut(sub)
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default();
    CliError::Usage(format!("error: {msg}\n\n{usage}"))
}

fn required<'a>(value: &'a Option<PathBuf>, sub: &str, flag: &str) -> CliResult<&'a Path> {
    value.as_deref().ok_or_else(|| {
        usage(
            sub,
            &format!("the following required argument was not provided: --{flag}"),
        )
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(Error::InvalidArgument(format!("{}: {e}", path.display()))))
}

fn read_corpus(path: &Path, read: &ReadArgs, err: &mut dyn Write) -> CliResult<Corpus> {
    let text = read_text(path)?;
    let parsed = parse_corpus_with_diagnostics(&text, read.mode.into(), read.strict)
        .map_err(|e| CliError::Data(Error::InvalidArgument(format!("{}: {e}", path.display()))))?;
    for d in &parsed.diagnostics {
        let _ = writeln!(err, "warning: {}: {d}", path.display());
    }
    Ok(parsed.corpus)
}

fn emit(output: &Option<PathBuf>, out: &mut dyn Write, data: &[u8]) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, data)?,
        None => out.write_all(data)?,
    }
    Ok(())
}

fn feature_config(args: &FeatureArgs) -> CliResult<FeatureConfig> {
    let emoticons = match &args.emoticons {
        Some(path) => EmoticonLexicon::from_reader(fs::File::open(path)?)?,
        None => EmoticonLexicon::default(),
    };
    let cfg = FeatureConfig {
        window: args.window,
        max_ngram: args.max_ngram,
        min_count: args.min_count,
        use_lang: !args.no_lang_feature,
        emoticons,
    };
    cfg.validate().map_err(|e| CliError::Usage(format!("error: {e}")))?;
    Ok(cfg)
}

fn grid_spec(c1: &Option<Vec<f64>>, c2: &Option<Vec<f64>>, folds: usize, seed: u64) -> GridSpec {
    let default = GridSpec::default();
    GridSpec {
        c1_values: c1.clone().unwrap_or(default.c1_values),
        c2_values: c2.clone().unwrap_or(default.c2_values),
        folds,
        seed,
    }
}

fn cmd_cmi(a: &CmiArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let input = required(&a.input, "cmi", "input")?;
    let corpus = read_corpus(input, &a.read, err)?;
    let independent = if a.univ_only {
        IndependentTags::UnivOnly
    } else {
        IndependentTags::AllNonLanguage
    };
    let report = corpus_cmi_report_with(&corpus, independent)?;
    let text = match a.format {
        Format::Tsv => report.to_tsv(),
        Format::Json => report.to_json()? + "\n",
    };
    emit(&a.output, out, text.as_bytes())
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let features = feature_config(&a.features)?;
    let config = TrainConfig {
        c1: a.c1,
        c2: a.c2,
        max_iterations: a.optim.max_iter,
        tolerance: a.optim.tol,
        features,
    };
    config.validate().map_err(|e| CliError::Usage(format!("error: {e}")))?;
    if let Some(manifest) = &a.manifest {
        return run_manifest(manifest, a, &config, out, err);
    }
    let input = required(&a.input, "train", "input")?;
    let model_path = required(&a.model, "train", "model")?;
    let corpus = read_corpus(input, &a.read, err)?;
    let model = train(&corpus, &config)?;
    fs::write(model_path, save_model(&model))?;
    let _ = writeln!(
        err,
        "trained {} labels, {} features -> {}",
        model.labels().len(),
        model.feature_index().len(),
        model_path.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ManifestRow {
    train: String,
    test: String,
    model: String,
    tag_column: String,
    c1: f64,
    c2: f64,
    weighted_f1: f64,
    accuracy: f64,
    #[serde(skip)]
    cell: Option<(String, String)>,
    #[serde(skip)]
    report: EvalReport,
}

struct ManifestJob {
    train: PathBuf,
    test: PathBuf,
    model: PathBuf,
    mode: TagsetMode,
    raw: [String; 4],
    cell: Option<(String, String)>,
}

fn parse_manifest(path: &Path) -> CliResult<Vec<ManifestJob>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut jobs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if i == 0 && fields[0] == "train" {
            continue;
        }
        let bad = |msg: String| {
            CliError::Data(Error::Parse {
                line: i + 1,
                message: format!("{}: {msg}", path.display()),
            })
        };
        if fields.len() != 4 && fields.len() != 6 {
            return Err(bad(format!(
                "expected 4 or 6 TAB-separated fields, found {}",
                fields.len()
            )));
        }
        let mode: TagsetMode = fields[3].parse().map_err(|e: Error| bad(e.to_string()))?;
        jobs.push(ManifestJob {
            train: base.join(fields[0]),
            test: base.join(fields[1]),
            model: base.join(fields[2]),
            mode,
            raw: [fields[0], fields[1], fields[2], fields[3]].map(str::to_string),
            cell: (fields.len() == 6).then(|| (fields[4].to_string(), fields[5].to_string())),
        });
    }
    if jobs.is_empty() {
        return Err(CliError::Data(Error::InvalidArgument(format!(
            "{}: manifest has no jobs",
            path.display()
        ))));
    }
    Ok(jobs)
}

fn run_manifest(
    manifest: &Path,
    a: &TrainArgs,
    config: &TrainConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let jobs = parse_manifest(manifest)?;
    let grid = grid_spec(&a.c1_grid, &a.c2_grid, a.folds, a.seed);
    let results: Vec<CliResult<ManifestRow>> = jobs
        .par_iter()
        .map(|job| {
            let read = ReadArgs {
                mode: match job.mode {
                    TagsetMode::Coarse => ModeArg::Coarse,
                    TagsetMode::Fine => ModeArg::Fine,
                    TagsetMode::Open => ModeArg::Open,
                },
                strict: a.read.strict,
            };
            let mut sink = Vec::new();
            let train_corpus = read_corpus(&job.train, &read, &mut sink)?;
            let test_corpus = read_corpus(&job.test, &read, &mut sink)?;
            let (c1, c2) = if a.no_search {
                (config.c1, config.c2)
            } else {
                let result = grid_search(&train_corpus, &grid, config)?;
                (result.best_c1, result.best_c2)
            };
            let model = train(
                &train_corpus,
                &TrainConfig {
                    c1,
                    c2,
                    ..config.clone()
                },
            )?;
            fs::write(&job.model, save_model(&model))?;
            let pred = model.tag_corpus(&test_corpus)?;
            let report = evaluate(&test_corpus, &pred)?;
            Ok(ManifestRow {
                train: job.raw[0].clone(),
                test: job.raw[1].clone(),
                model: job.raw[2].clone(),
                tag_column: job.raw[3].clone(),
                c1,
                c2,
                weighted_f1: report.weighted_f1,
                accuracy: report.accuracy,
                cell: job.cell.clone(),
                report,
            })
        })
        .collect();
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let overall = rows.iter().map(|r| r.weighted_f1).sum::<f64>() / rows.len() as f64;

    let matrix = if rows.iter().all(|r| r.cell.is_some()) {
        let mut reports = IndexMap::new();
        for r in &rows {
            reports.insert(r.cell.clone().expect("checked above"), r.report.clone());
        }
        let granularity = reports.keys().all(|(_, c)| matches!(c.as_str(), "fine" | "coarse"));
        let axis = if granularity {
            MatrixAxis::Granularity
        } else {
            MatrixAxis::Platform
        };
        Some(render_matrix(&reports, axis)?)
    } else {
        None
    };

    let text = match a.format {
        Format::Tsv => {
            let mut s = String::from("train\ttest\tmodel\ttag_column\tc1\tc2\tweighted_f1\taccuracy\n");
            for r in &rows {
                s.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\n",
                    r.train, r.test, r.model, r.tag_column, r.c1, r.c2, r.weighted_f1, r.accuracy
                ));
            }
            s.push_str(&format!("overall\t{:.4}\n", overall));
            if let Some(m) = &matrix {
                s.push('\n');
                s.push_str(&m.to_string());
            }
            s
        }
        Format::Json => {
            let value = serde_json::json!({
                "jobs": rows,
                "overall": overall,
                "matrix": matrix,
            });
            serde_json::to_string_pretty(&value).map_err(Error::from)? + "\n"
        }
    };
    let _ = writeln!(err, "ran {} manifest jobs", rows.len());
    emit(&a.output, out, text.as_bytes())
}

fn cmd_tag(a: &TagArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let input = required(&a.input, "tag", "input")?;
    let model_path = required(&a.model, "tag", "model")?;
    let bytes = fs::read(model_path)?;
    let model = load_model(&bytes)?;
    let corpus = read_corpus(input, &a.read, err)?;
    let tagged = model.tag_corpus(&corpus)?;
    emit(&a.output, out, write_corpus(&tagged)?.as_bytes())
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let gold = read_corpus(required(&a.gold, "eval", "gold")?, &a.read, err)?;
    let pred = read_corpus(required(&a.pred, "eval", "pred")?, &a.read, err)?;
    let report = evaluate(&gold, &pred)?;
    let text = match a.format {
        Format::Tsv => report.to_tsv(),
        Format::Json => report.to_json()? + "\n",
    };
    emit(&a.output, out, text.as_bytes())
}

fn cmd_grid(a: &GridArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let input = required(&a.input, "grid", "input")?;
    let grid = grid_spec(&a.c1_grid, &a.c2_grid, a.folds, a.seed);
    grid.validate().map_err(|e| CliError::Usage(format!("error: {e}")))?;
    let base = TrainConfig {
        max_iterations: a.optim.max_iter,
        tolerance: a.optim.tol,
        features: feature_config(&a.features)?,
        ..TrainConfig::default()
    };
    let corpus = read_corpus(input, &a.read, err)?;
    let result = grid_search(&corpus, &grid, &base)?;
    let text = match a.format {
        Format::Tsv => result.to_tsv(),
        Format::Json => {
            let _ = writeln!(err, "{}", result.best_line());
            result.to_json()? + "\n"
        }
    };
    emit(&a.output, out, text.as_bytes())
}

fn cmd_split(a: &SplitArgs, err: &mut dyn Write) -> CliResult<()> {
    let input = required(&a.input, "split", "input")?;
    let dir = required(&a.output, "split", "output")?;
    let corpus = read_corpus(input, &a.read, err)?;
    let folds = split_corpus(&corpus, a.folds, a.seed)?;
    fs::create_dir_all(dir)?;
    for (k, (train_part, held_out)) in folds.iter().enumerate() {
        fs::write(dir.join(format!("fold{k}.train.tsv")), write_corpus(train_part)?)?;
        fs::write(dir.join(format!("fold{k}.test.tsv")), write_corpus(held_out)?)?;
    }
    let _ = writeln!(err, "wrote {} folds to {}", folds.len(), dir.display());
    Ok(())
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let corpus = generate_synthetic_corpus(a.seed, a.num_utterances, a.langpair.into(), a.mixing)
        .map_err(|e| CliError::Usage(format!("error: {e}")))?;
    emit(&a.output, out, write_corpus(&corpus)?.as_bytes())
}

/// Parses `args` (program name first) and runs the subcommand, returning the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let result = match &cli.command {
        Command::Cmi(a) => cmd_cmi(a, out, err),
        Command::Train(a) => cmd_train(a, out, err),
        Command::Tag(a) => cmd_tag(a, out, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Grid(a) => cmd_grid(a, out, err),
        Command::Split(a) => cmd_split(a, err),
        Command::Synth(a) => cmd_synth(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "{msg}");
            1
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}
