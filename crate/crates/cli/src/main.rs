//! `vulcan`: generate corpora, extract dependence paths, train and evaluate
//! line classifiers, run ablations and baselines, and measure similarity.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 internal
//! failure (recursion guard tripped, gradient check failed).

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vulcan_core::corpus::{
    corpus_hash, generate_corpus, generate_similarity_triplets, read_corpus, read_triplets, write_corpus,
    write_triplets, CorpusError, CorpusRecord, CorpusSpec, Split,
};
use vulcan_core::dependence::{build_vocabs, encode_path, get_path, rhs_tokens, PathOrOneHot, TokenClass, Vocab};
use vulcan_core::frontend::{FrontendError, SourceProgram};
use vulcan_core::gradcheck::{model_check, op_checks};
use vulcan_core::harness::{
    evaluate, run_ablation_suite, run_bow_suite, similarity_experiment, summarize, train, write_results_csv,
    write_similarity_csv, write_summary_json, ExperimentConfig, FeatureMode, HarnessError, ResultsSummary,
};
use vulcan_core::model::{load_model, save_model, ModelConfig, ModelError, Variant};

#[derive(Parser)]
#[command(name = "vulcan", version, about = "Line-level vulnerability classification over MiniSol programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled corpus (and optionally similarity triplets).
    Gen(GenArgs),
    /// Write end-points and encoded AST paths for every labeled line.
    Extract(ExtractArgs),
    /// Train one model variant and write its checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on one split of a corpus.
    Eval(EvalArgs),
    /// Train every ablation variant under several seeds.
    Ablate(SuiteArgs),
    /// Train the bag-of-words baselines under several seeds.
    Baselines(SuiteArgs),
    /// Distances between line representations across similarity triplets.
    Sim(SimArgs),
    /// Probability that one line of a program is vulnerable.
    Predict(PredictArgs),
    /// Finite-difference gradient checks of every operation and the model.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Root seed; falls back to VULCAN_SEED.
    #[arg(long, env = "VULCAN_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    seed: SeedArg,
    /// Corpus spec as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of programs [default: 200]
    #[arg(long)]
    programs: Option<usize>,
    /// Shortest program in lines [default: 15]
    #[arg(long)]
    min_lines: Option<usize>,
    /// Longest program in lines [default: 45]
    #[arg(long)]
    max_lines: Option<usize>,
    /// Probability of flipping each label [default: 0]
    #[arg(long)]
    label_noise: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write this many similarity triplets to --triplets-out.
    #[arg(long, default_value_t = 20)]
    triplet_count: usize,
    #[arg(long)]
    triplets_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Training settings shared by train, ablate and baselines.
#[derive(Args)]
struct TrainingFlags {
    /// Experiment config as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Adagrad learning rate [default: 0.05]
    #[arg(long)]
    lr: Option<f64>,
    /// Lines per batch [default: 32]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Maximum epochs [default: 20]
    #[arg(long)]
    epochs: Option<usize>,
    /// Epochs without validation improvement before stopping [default: 5]
    #[arg(long)]
    patience: Option<usize>,
    /// Negatives kept per positive training line [default: 10]
    #[arg(long)]
    subsample_ratio: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    training: TrainingFlags,
    #[arg(long)]
    corpus: PathBuf,
    /// full, no_endpoints, prev_line or no_attn [default: full]
    #[arg(long)]
    variant: Option<String>,
    /// Checkpoint path; the training log goes to <out>.log.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// train, val or test
    #[arg(long, default_value = "val")]
    split: String,
    /// Also write the metrics JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    training: TrainingFlags,
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    /// Directory for the results CSV and JSON summary.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    model: PathBuf,
    /// Triplets file from `gen --triplets-out`; generated from --seed when absent.
    #[arg(long)]
    triplets: Option<PathBuf>,
    /// Triplets to generate when no file is given.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// CSV output (pair, mean, std, n).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    line: usize,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    seed: SeedArg,
}

/// A problem with how the command was invoked.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A self-check that should never fail.
#[derive(Debug)]
struct InternalError(String);

impl std::fmt::Display for InternalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InternalError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn model_exit_code(e: &ModelError) -> u8 {
    match e {
        ModelError::ConfigConflict(_) => 1,
        ModelError::RecursionDepthExceeded { .. } => 3,
        _ => 2,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if cause.is::<InternalError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return model_exit_code(e);
        }
        if let Some(e) = cause.downcast_ref::<HarnessError>() {
            return match e {
                HarnessError::InvalidConfig(_) => 1,
                HarnessError::Model(m) => model_exit_code(m),
                _ => 2,
            };
        }
        if let Some(CorpusError::InvalidSpec(_)) = cause.downcast_ref::<CorpusError>() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => suite(a, false),
        Command::Baselines(a) => suite(a, true),
        Command::Sim(a) => sim(a),
        Command::Predict(a) => predict(a),
        Command::Gradcheck(a) => gradcheck(a),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    read_corpus(path).with_context(|| format!("reading corpus {}", path.display()))
}

fn parse_split(s: &str) -> Result<Split> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        other => Err(usage(format!("unknown split `{other}` (expected train, val or test)"))),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<CorpusSpec>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => CorpusSpec::default(),
    };
    if let Some(n) = a.programs {
        spec.programs = n;
    }
    if let Some(n) = a.min_lines {
        spec.size.min_lines = n;
    }
    if let Some(n) = a.max_lines {
        spec.size.max_lines = n;
    }
    if let Some(p) = a.label_noise {
        spec.label_noise = p;
    }
    if spec.programs == 0 {
        return Err(usage("--programs must be positive"));
    }
    spec.size.validate()?;
    let records = generate_corpus(a.seed.seed, &spec)?;
    write_corpus(&a.out, &records)?;
    if let Some(path) = &a.triplets_out {
        write_triplets(path, &generate_similarity_triplets(a.triplet_count, a.seed.seed))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TokenRecord {
    text: String,
    class: TokenClass,
    endpoint: Option<usize>,
    /// Encoded path steps; empty for one-hot tokens and undefined variables.
    path: Vec<usize>,
    truncated: bool,
    /// One-hot index for operators and built-ins.
    one_hot: Option<usize>,
}

#[derive(Serialize)]
struct LineRecord<'a> {
    program: &'a str,
    line: usize,
    tokens: Vec<TokenRecord>,
}

fn extract(a: ExtractArgs) -> Result<()> {
    let records = load_corpus(&a.corpus)?;
    let asts = records
        .iter()
        .map(|r| r.program().parse().with_context(|| format!("parsing {}", r.id)))
        .collect::<Result<Vec<_>>>()?;
    // Vocabulary from the training split, as a trained model would see it.
    let train_asts: Vec<_> = records
        .iter()
        .zip(&asts)
        .filter(|(r, _)| r.split == Split::Train)
        .map(|(_, ast)| ast.clone())
        .collect();
    let vocab: Vocab = build_vocabs(if train_asts.is_empty() { &asts } else { &train_asts }, Default::default())?;
    let mut out = String::new();
    for (r, ast) in records.iter().zip(&asts) {
        for l in &r.labels {
            let mut tokens = Vec::new();
            for occ in rhs_tokens(ast, l.line)? {
                let (endpoint, what) = get_path(&occ, l.line, ast)?;
                let (path, truncated, one_hot) = match what {
                    PathOrOneHot::Path(p) => {
                        let enc = encode_path(&p, &vocab);
                        (enc.indices, enc.truncated, None)
                    }
                    PathOrOneHot::OneHot { text, class } => (Vec::new(), false, Some(vocab.one_hot_index(&text, class))),
                    PathOrOneHot::Empty => (Vec::new(), false, None),
                };
                tokens.push(TokenRecord {
                    text: occ.text.clone(),
                    class: occ.class,
                    endpoint,
                    path,
                    truncated,
                    one_hot,
                });
            }
            let rec = LineRecord {
                program: &r.id,
                line: l.line,
                tokens,
            };
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
    }
    write_atomic(&a.out, out.as_bytes())
}

fn experiment_config(flags: &TrainingFlags) -> Result<ExperimentConfig> {
    let mut cfg = match &flags.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = flags.lr {
        cfg.lr = v;
    }
    if let Some(v) = flags.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = flags.epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = flags.patience {
        cfg.patience = v;
    }
    if let Some(v) = flags.subsample_ratio {
        cfg.subsample_ratio = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainReport<'a> {
    best_epoch: usize,
    val: vulcan_core::harness::Metrics,
    checkpoint: &'a Path,
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut cfg = experiment_config(&a.training)?.with_seed(a.seed.seed);
    if let Some(v) = &a.variant {
        let variant: Variant = v.parse().map_err(|e: ModelError| usage(e.to_string()))?;
        cfg = cfg.with_variant(variant)?;
    }
    let records = load_corpus(&a.corpus)?;
    let (model, log) = train(&records, &cfg)?;
    let val = evaluate(&model, &records, Split::Val)?;
    save_model(&model, &a.out)?;
    let mut log_path = a.out.as_os_str().to_owned();
    log_path.push(".log.json");
    write_atomic(Path::new(&log_path), &serde_json::to_vec_pretty(&log)?)?;
    print_json(&TrainReport {
        best_epoch: log.best_epoch,
        val,
        checkpoint: &a.out,
    })
}

fn eval(a: EvalArgs) -> Result<()> {
    let split = parse_split(&a.split)?;
    let model = load_model(&a.model)?;
    let records = load_corpus(&a.corpus)?;
    let metrics = evaluate(&model, &records, split)?;
    if let Some(out) = &a.out {
        write_atomic(out, &serde_json::to_vec_pretty(&metrics)?)?;
    }
    print_json(&metrics)
}

fn suite(a: SuiteArgs, baselines: bool) -> Result<()> {
    if a.seeds.is_empty() {
        return Err(usage("--seeds needs at least one seed"));
    }
    let cfg = experiment_config(&a.training)?;
    if !a.out_dir.is_dir() {
        return Err(usage(format!("{} is not a directory", a.out_dir.display())));
    }
    let records = load_corpus(&a.corpus)?;
    let (results, stem) = if baselines {
        (run_bow_suite(&records, &cfg, &FeatureMode::ALL, &a.seeds)?, "baselines")
    } else {
        (run_ablation_suite(&records, &cfg, &Variant::ABLATIONS, &a.seeds)?, "ablation")
    };
    let summary = ResultsSummary {
        config: cfg,
        corpus_sha256: corpus_hash(&records),
        split: Split::Val,
        rows: summarize(&results, Split::Val),
        runs: results.clone(),
    };
    write_results_csv(&a.out_dir.join(format!("{stem}.csv")), &results)?;
    write_summary_json(&a.out_dir.join(format!("{stem}_summary.json")), &summary)?;
    print_json(&summary.rows)
}

fn sim(a: SimArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let triplets = match &a.triplets {
        Some(p) => read_triplets(p).with_context(|| format!("reading {}", p.display()))?,
        None => generate_similarity_triplets(a.count, a.seed.seed),
    };
    if triplets.is_empty() {
        return Err(usage("no triplets to compare"));
    }
    let rows = similarity_experiment(&model, &triplets)?;
    write_similarity_csv(&a.out, &rows)?;
    for r in &rows {
        println!("{},{},{},{}", r.pair, r.mean, r.std, r.n);
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let source = fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let model = load_model(&a.model)?;
    let id = a.file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let program = SourceProgram::new(id, source);
    let ast = program.parse()?;
    if a.line == 0 || a.line > ast.line_count {
        return Err(FrontendError::LineOutOfRange {
            line: a.line,
            count: ast.line_count,
        }
        .into());
    }
    let prepared = model.prepare_ast(&program.id, ast)?;
    let p = model.predict(&prepared, &[a.line])?;
    println!("{}", p[0]);
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<()> {
    let mut results = op_checks(a.seed.seed);
    for variant in Variant::ABLATIONS {
        results.push(model_check(variant.apply(&ModelConfig::tiny())?, a.seed.seed)?);
    }
    let mut failed = Vec::new();
    for r in &results {
        let status = if r.passed() { "ok" } else { "FAIL" };
        println!(
            "{:<20} max_rel_err={:.3e} tol={:.0e} checked={} {status}",
            r.name, r.report.max_rel_err, r.tolerance, r.report.checked
        );
        if !r.passed() {
            failed.push(r.name.clone());
        }
    }
    if !failed.is_empty() {
        bail!(InternalError(format!("gradient check failed for {}", failed.join(", "))));
    }
    Ok(())
}
