use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dsvs::corpus::{budget_in_snippets, load_manifest, load_summary, save_manifest, save_summary, AnnotatedVideo};
use dsvs::functions::GridConfig;
use dsvs::gtgen::generate_gt_summaries;
use dsvs::harness::{
    generate_synthetic_corpus, run_baselines, run_cross_domain, run_gt_ablation, run_gt_sanity, CorpusConfig,
    ExperimentOptions, SanityOptions,
};
use dsvs::learn::{summarize_video, train, GtMode, MixtureModel, ModelVariant, OptimizerKind};
use dsvs::measure::{decompose_score, score_bounds, MeasureParams};
use dsvs::optimize::verify_bounds;

/// Domain-specific video summarization: scoring, ground truth, learning and experiments.
#[derive(Parser)]
#[command(name = "dsvs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (manifest, features, annotations).
    GenSynthetic(GenSyntheticArgs),
    /// Generate ground-truth summary pools from ratings.
    GenGt(GenGtArgs),
    /// Score a summary file against its video's annotations.
    Score(ScoreArgs),
    /// Learn mixture weights for one domain.
    Train(TrainArgs),
    /// Summarize a video with a trained model.
    Summarize(SummarizeArgs),
    /// Compare the learned mixture against baselines on one domain.
    Baseline(ExperimentArgs),
    /// Evaluate every domain's model on every domain's test videos.
    CrossDomain(ExperimentArgs),
    /// Train with a random ground truth per epoch and with a fixed one.
    GtAblation(ExperimentArgs),
    /// Compare ground-truth pools with positive-only random summaries.
    GtSanity(GtSanityArgs),
    /// Check approximation guarantees against exhaustive search.
    VerifyBounds(VerifyBoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Exit with a nonzero status when the experiment's check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Clone, Copy)]
struct MeasureArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Repetitiveness cut-off in seconds.
    #[arg(long, default_value_t = 6.0)]
    beta_sec: f64,
    /// Per-snippet penalty for negatively rated segments.
    #[arg(long = "penalty", default_value_t = 2.0)]
    penalty_k: f64,
}

impl MeasureArgs {
    fn params(&self) -> Result<MeasureParams> {
        Ok(MeasureParams::new(self.alpha, self.beta_sec, self.penalty_k)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Adagrad,
    Sgd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GtModeArg {
    Random,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    ModularOnly,
    StructuredOnly,
}

#[derive(Args)]
struct TrainingArgs {
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[arg(long = "lr", visible_alias = "learning-rate")]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 15.0)]
    budget_pct: f64,
    #[arg(long, value_enum)]
    gt_mode: Option<GtModeArg>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    max_gt: Option<usize>,
    /// Keep the last weights instead of averaging over the second half of training.
    #[arg(long)]
    last_iterate: bool,
    /// Component grid file; defaults to the grid derived from the features.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[command(flatten)]
    measure: MeasureArgs,
}

impl TrainingArgs {
    fn options(&self) -> Result<ExperimentOptions> {
        let mut o = ExperimentOptions::default().with_master_seed(self.seed);
        let t = &mut o.train;
        t.budget_pct = self.budget_pct;
        t.measure = self.measure.params()?;
        if let Some(v) = self.lambda1 {
            t.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            t.lambda2 = v;
        }
        if let Some(v) = self.learning_rate {
            t.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.max_gt {
            t.max_gt = v;
        }
        if self.last_iterate {
            t.averaging = false;
        }
        if let Some(v) = self.optimizer {
            t.optimizer = match v {
                OptimizerArg::Adagrad => OptimizerKind::Adagrad,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            };
        }
        if let Some(v) = self.gt_mode {
            t.gt_mode = match v {
                GtModeArg::Random => GtMode::Random,
                GtModeArg::Fixed => GtMode::Fixed,
            };
        }
        if let Some(v) = self.variant {
            t.variant = match v {
                VariantArg::Full => ModelVariant::Full,
                VariantArg::ModularOnly => ModelVariant::ModularOnly,
                VariantArg::StructuredOnly => ModelVariant::StructuredOnly,
            };
        }
        t.validate()?;
        if let Some(path) = &self.grid {
            o.grid = Some(GridConfig::load(path)?);
        }
        Ok(o)
    }
}

#[derive(Args)]
struct GenSyntheticArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Corpus configuration; defaults to the built-in one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    videos_per_domain: Option<usize>,
    #[arg(long)]
    snippets_per_video: Option<usize>,
}

#[derive(Args)]
struct GenGtArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Only this video; all videos when omitted.
    #[arg(long)]
    video: Option<String>,
    #[arg(long, default_value_t = 15.0)]
    budget_pct: f64,
    #[arg(long, default_value_t = dsvs::gtgen::DEFAULT_MAX_GT)]
    max_gt: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for `<video>.gt.json` files.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    measure: MeasureArgs,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    summary: PathBuf,
    /// Budget for normalization; defaults to the summary file's budget.
    #[arg(long)]
    budget_pct: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[command(flatten)]
    measure: MeasureArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    domain: String,
    /// Model output path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    training: TrainingArgs,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    video: String,
    /// Budget; defaults to the model's training budget.
    #[arg(long)]
    budget_pct: Option<f64>,
    /// Summary file output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Domain for single-domain experiments.
    #[arg(long)]
    domain: Option<String>,
    /// Comma-separated domains for the cross-domain matrix; all when omitted.
    #[arg(long, value_delimiter = ',')]
    domains: Vec<String>,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long, default_value_t = 100)]
    random_seeds: usize,
    /// Margin by which the full mixture must beat every baseline under --check.
    #[arg(long, default_value_t = 0.02)]
    margin: f64,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    output: OutputArgs,
}

impl ExperimentArgs {
    fn options(&self) -> Result<ExperimentOptions> {
        let mut o = self.training.options()?;
        o.train_fraction = self.train_fraction;
        o.random_seeds = self.random_seeds;
        Ok(o)
    }

    fn domain(&self) -> Result<&str> {
        self.domain.as_deref().context("--domain is required")
    }
}

#[derive(Args)]
struct GtSanityArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = vec![5.0, 15.0, 30.0])]
    budgets: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    random_samples: usize,
    #[arg(long, default_value_t = 100)]
    max_gt: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    measure: MeasureArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyBoundsArgs {
    /// Guarantee case, 1 to 8; every case when omitted.
    #[arg(long)]
    case: Vec<u8>,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match format {
        Format::Text => print!("{}", text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn find_video<'a>(videos: &'a [AnnotatedVideo], id: &str) -> Result<&'a AnnotatedVideo> {
    videos
        .iter()
        .find(|v| v.id == id)
        .ok_or_else(|| dsvs::Error::UnknownVideo(id.to_string()).into())
}

fn all_domains(videos: &[AnnotatedVideo]) -> Vec<String> {
    let mut d: Vec<String> = videos.iter().filter_map(|v| v.domain.clone()).collect();
    d.sort();
    d.dedup();
    d
}

fn gen_synthetic(a: GenSyntheticArgs) -> Result<bool> {
    let mut config = match &a.config {
        Some(p) => CorpusConfig::load(p)?,
        None => CorpusConfig::default_config(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(v) = a.videos_per_domain {
        config.videos_per_domain = v;
    }
    if let Some(n) = a.snippets_per_video {
        config.snippets_per_video = n;
    }
    let videos = generate_synthetic_corpus(&config)?;
    let path = save_manifest(&videos, &a.out)?;
    println!("{} videos written to {}", videos.len(), path.display());
    Ok(true)
}

fn gen_gt(a: GenGtArgs) -> Result<bool> {
    let videos = load_manifest(&a.manifest)?;
    let params = a.measure.params()?;
    let selected: Vec<&AnnotatedVideo> = match &a.video {
        Some(id) => vec![find_video(&videos, id)?],
        None => videos.iter().collect(),
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for v in selected {
        let budget = budget_in_snippets(v, a.budget_pct)?;
        let pool = generate_gt_summaries(v, budget, a.max_gt, a.seed, params)?;
        let path = a.out.join(format!("{}.gt.json", v.id));
        std::fs::write(&path, serde_json::to_string_pretty(&pool)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        println!("{}: {} ground-truth summaries of {} snippets", v.id, pool.len(), budget);
    }
    Ok(true)
}

#[derive(Serialize)]
struct ScoreReport {
    video_id: String,
    budget_snippets: usize,
    score: f64,
    normalized_score: f64,
    score_loss: f64,
    submodular_part: f64,
    supermodular_part: f64,
}

fn score(a: ScoreArgs) -> Result<bool> {
    let videos = load_manifest(&a.manifest)?;
    let file = load_summary(&a.summary)?;
    let video = find_video(&videos, &file.video_id)?;
    let params = a.measure.params()?;
    let summary = file.summary();
    summary.check_bounds(video.n_snippets)?;
    let budget = match a.budget_pct {
        Some(p) => budget_in_snippets(video, p)?,
        None => file.budget_snippets,
    };
    let bounds = score_bounds(video, budget, params)?;
    let (sub, sup) = decompose_score(video, &summary, params)?;
    let s = sub + sup;
    let report = ScoreReport {
        video_id: video.id.clone(),
        budget_snippets: budget,
        score: s,
        normalized_score: bounds.normalize(s),
        score_loss: bounds.loss(s),
        submodular_part: sub,
        supermodular_part: sup,
    };
    emit(a.format, &report, || {
        format!(
            "video {}  budget {}\nscore {:.6}\nnormalized {:.6}\nscore_loss {:.6}\nsubmodular part {:.6}\nsupermodular part {:.6}\n",
            report.video_id,
            report.budget_snippets,
            report.score,
            report.normalized_score,
            report.score_loss,
            report.submodular_part,
            report.supermodular_part
        )
    })?;
    Ok(true)
}

fn train_cmd(a: TrainArgs) -> Result<bool> {
    let videos = load_manifest(&a.manifest)?;
    let opts = a.training.options()?;
    let own: Vec<AnnotatedVideo> = videos
        .into_iter()
        .filter(|v| v.domain.as_deref() == Some(a.domain.as_str()))
        .collect();
    if own.is_empty() {
        bail!(dsvs::Error::UnknownDomain(a.domain.clone()));
    }
    let grid = opts
        .grid
        .clone()
        .unwrap_or_else(|| GridConfig::default_for_video(&own[0]))
        .for_domain(Some(&a.domain));
    let (model, record) = train(&own, &[], &grid, &a.domain, &opts.train)?;
    model.save(&a.out)?;
    let last = record.epoch_hinge.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained {} on {} videos: final hinge {:.6}, {} clamped steps; model written to {}",
        a.domain,
        own.len(),
        last,
        record.total_violations(),
        a.out.display()
    );
    for c in &model.w2 {
        println!("  {:<40} {:.6}", c.id, c.weight);
    }
    Ok(true)
}

fn summarize(a: SummarizeArgs) -> Result<bool> {
    let videos = load_manifest(&a.manifest)?;
    let model = MixtureModel::load(&a.model)?;
    let video = find_video(&videos, &a.video)?;
    let pct = a.budget_pct.unwrap_or(model.config.budget_pct);
    let (summary, report) = summarize_video(&model, video, pct, model.config.measure)?;
    if let Some(out) = &a.out {
        save_summary(out, &summary, report.budget_snippets)?;
    }
    emit(a.format, &report, || {
        let mut s = format!(
            "video {}  budget {}\nsnippets {:?}\nscore {:.6}  normalized {:.6}  score_loss {:.6}\nobjective {:.6}  modular {:.6}\n",
            report.video_id,
            report.budget_snippets,
            summary.snippet_indices,
            report.score,
            report.normalized_score,
            report.score_loss,
            report.objective,
            report.modular_contribution
        );
        for c in &report.components {
            s += &format!(
                "  {:<40} w {:.6}  f {:.6}  w·f {:.6}\n",
                c.id, c.weight, c.value, c.weighted
            );
        }
        s
    })?;
    Ok(true)
}

fn load_corpus(path: &Path) -> Result<Vec<AnnotatedVideo>> {
    let videos = load_manifest(path)?;
    if videos.is_empty() {
        bail!(dsvs::Error::EmptyCorpus);
    }
    Ok(videos)
}

fn baseline(a: ExperimentArgs) -> Result<bool> {
    let videos = load_corpus(&a.manifest)?;
    let report = run_baselines(&videos, a.domain()?, &a.options()?)?;
    emit(a.output.format, &report, || report.to_text())?;
    Ok(report.full_beats_all(a.margin))
}

fn cross_domain(a: ExperimentArgs) -> Result<bool> {
    let videos = load_corpus(&a.manifest)?;
    let domains = if a.domains.is_empty() {
        all_domains(&videos)
    } else {
        a.domains.clone()
    };
    let report = run_cross_domain(&videos, &domains, &a.options()?)?;
    emit(a.output.format, &report, || report.to_text())?;
    Ok(report.all_diagonal_minimal())
}

fn gt_ablation(a: ExperimentArgs) -> Result<bool> {
    let videos = load_corpus(&a.manifest)?;
    let report = run_gt_ablation(&videos, a.domain()?, &a.options()?)?;
    emit(a.output.format, &report, || report.to_text())?;
    Ok(report.random_gt.mean <= report.fixed_gt.mean)
}

fn gt_sanity(a: GtSanityArgs) -> Result<bool> {
    let videos = load_corpus(&a.manifest)?;
    let opts = SanityOptions {
        budgets_pct: a.budgets.clone(),
        random_samples: a.random_samples,
        max_gt: a.max_gt,
        seed: a.seed,
        measure: a.measure.params()?,
    };
    let report = run_gt_sanity(&videos, &opts)?;
    emit(a.output.format, &report, || report.to_text())?;
    Ok(report.failures() == 0)
}

fn verify(a: VerifyBoundsArgs) -> Result<bool> {
    let cases = if a.case.is_empty() {
        (1..=8).collect()
    } else {
        a.case.clone()
    };
    let reports = cases
        .iter()
        .map(|&c| verify_bounds(c, a.n, a.k, a.trials, a.seed))
        .collect::<dsvs::Result<Vec<_>>>()?;
    emit(a.output.format, &reports, || {
        reports.iter().map(|r| r.to_text()).collect()
    })?;
    Ok(reports.iter().all(|r| r.passed()))
}

fn run(cli: Cli) -> Result<(bool, bool)> {
    let check = |o: &OutputArgs| o.check;
    Ok(match cli.command {
        Command::GenSynthetic(a) => (gen_synthetic(a)?, false),
        Command::GenGt(a) => (gen_gt(a)?, false),
        Command::Score(a) => (score(a)?, false),
        Command::Train(a) => (train_cmd(a)?, false),
        Command::Summarize(a) => (summarize(a)?, false),
        Command::Baseline(a) => {
            let c = check(&a.output);
            (baseline(a)?, c)
        }
        Command::CrossDomain(a) => {
            let c = check(&a.output);
            (cross_domain(a)?, c)
        }
        Command::GtAblation(a) => {
            let c = check(&a.output);
            (gt_ablation(a)?, c)
        }
        Command::GtSanity(a) => {
            let c = check(&a.output);
            (gt_sanity(a)?, c)
        }
        Command::VerifyBounds(a) => {
            let c = check(&a.output);
            (verify(a)?, c)
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((passed, check)) => {
            if check && !passed {
                eprintln!("check failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
