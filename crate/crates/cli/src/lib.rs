//! The `layout-critic` command line.
//!
//! [`run`] parses arguments and dispatches to a subcommand. Exit codes are 0
//! on success, 1 on a usage error and 2 when the command itself fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use layout_critic::critique::{Critic, QualityWeights, RewardWeights};
use layout_critic::data::{
    bundled_suite, generate_synthetic, load_annotations, suite_records, to_canvas_spec,
    write_annotations, SynthConfig, SynthMode,
};
use layout_critic::layout::{parse_dual_output, CanvasSpec, Layout};
use layout_critic::metrics::{evaluate_batch, EvalOptions};
use layout_critic::policy::{train_from, GrpoConfig, PolicyParams};
use layout_critic::render::{render_svg, RenderStyle};
use layout_critic_llm::{best_of_n, EndpointConfig, DEFAULT_KEY_VAR};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod ablation;

pub use ablation::{run_ablation, AblationRow};

#[derive(Debug, Parser)]
#[command(name = "layout-critic", version, about = "Score, evaluate, train and render graphic layouts")]
pub struct Cli {
    /// Worker threads for scoring and training (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one candidate layout and print its reward breakdown as JSON.
    Score(ScoreArgs),
    /// Compute Ove, Und and Occ over an annotation file.
    Evaluate(EvaluateArgs),
    /// Train the placement policy with GRPO on a suite of canvases.
    Train(TrainArgs),
    /// Sample candidates from a chat-completion endpoint and keep the best.
    Rerank(RerankArgs),
    /// Draw a layout and its salient regions as SVG.
    Render(RenderArgs),
    /// Generate synthetic canvases as annotation JSONL.
    Gen(GenArgs),
    /// Train under each reward preset and compare layout structure.
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Csv,
    Json,
}

/// Accepts a preset name or three comma-separated weights `f,q,u`.
pub fn parse_weights(s: &str) -> Result<RewardWeights, String> {
    if let Some(w) = RewardWeights::preset(s) {
        return Ok(w);
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("expected a preset name or f,q,u weights, got {s:?}"))?;
    let [f, q, u] = parts[..] else {
        return Err(format!("expected three weights, got {}", parts.len()));
    };
    let w = RewardWeights::new(f, q, u);
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Canvas spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Layout JSON in the `<layout>` block format.
    #[arg(long, conflicts_with = "output", required_unless_present = "output")]
    pub layout: Option<PathBuf>,
    /// Raw model response with `<design>` and `<layout>` blocks.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Ground-truth layout JSON; enables the IoU term.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value = "quality_focused", value_parser = parse_weights)]
    pub weights: RewardWeights,
    /// Balance between edge and center alignment.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Annotation JSONL whose layouts are evaluated.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    /// Raster resolution for occlusion.
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Annotation JSONL of training canvases (default: the bundled suite).
    #[arg(long)]
    pub suite: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,
    #[arg(long, default_value_t = 0.2)]
    pub clip_eps: f64,
    #[arg(long, default_value_t = 0.01)]
    pub kl_beta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value = "quality_focused", value_parser = parse_weights)]
    pub weights: RewardWeights,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start from these parameters instead of a seeded random draw.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Ignore the suite's ground-truth layouts (no IoU term).
    #[arg(long)]
    pub no_reference: bool,
    /// Directory for params.json, initial_params.json and train_log.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Ground-truth layout JSON; enables the IoU term.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Base URL of an OpenAI-compatible API, e.g. http://localhost:8000/v1.
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value = "quality_focused", value_parser = parse_weights)]
    pub weights: RewardWeights,
    /// Environment variable holding the bearer token.
    #[arg(long, default_value = DEFAULT_KEY_VAR)]
    pub api_key_env: String,
    #[arg(long, default_value_t = 0.9)]
    pub temperature: f64,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Sampling seed forwarded to the endpoint.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for rerank.json and winner_layout.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Canvas spec JSON (with --layout).
    #[arg(long, requires = "layout", conflicts_with = "data")]
    pub spec: Option<PathBuf>,
    #[arg(long, requires = "spec")]
    pub layout: Option<PathBuf>,
    /// Annotation JSONL (with --index).
    #[arg(long, required_unless_present = "spec")]
    pub data: Option<PathBuf>,
    /// Record number in --data, counted from 0.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Output width in pixels (default: canvas width).
    #[arg(long)]
    pub width: Option<u32>,
    /// Output height in pixels (default: canvas height).
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "random")]
    pub mode: SynthMode,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub min_elements: usize,
    #[arg(long, default_value_t = 8)]
    pub max_elements: usize,
    #[arg(long, default_value_t = 0.3)]
    pub underlay_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub min_saliency: usize,
    #[arg(long, default_value_t = 2)]
    pub max_saliency: usize,
    /// Write the bundled training suite and ignore the other options.
    #[arg(long)]
    pub bundled: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Annotation JSONL of training canvases (default: the bundled suite).
    #[arg(long)]
    pub suite: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    /// Number of training seeds per preset.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// First seed; the others follow consecutively.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Canvas ids, specs and ground-truth layouts of a suite file, or the bundled
/// suite when no path is given.
pub fn load_suite(path: Option<&Path>) -> Result<(Vec<String>, Vec<CanvasSpec>, Vec<Layout>)> {
    let records = match path {
        Some(p) => load_annotations(p, true)?.records,
        None => {
            let items: Vec<_> = bundled_suite().into_iter().map(|(s, l)| (s, Some(l))).collect();
            suite_records("suite", &items)
        }
    };
    let mut ids = Vec::with_capacity(records.len());
    let mut specs = Vec::with_capacity(records.len());
    let mut refs = Vec::with_capacity(records.len());
    for r in &records {
        let (spec, layout) = to_canvas_spec(r)?;
        ids.push(r.id.clone());
        specs.push(spec);
        refs.push(layout);
    }
    Ok((ids, specs, refs))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn read_spec(path: &Path) -> Result<CanvasSpec> {
    CanvasSpec::from_json(&read(path)?).with_context(|| format!("invalid spec {}", path.display()))
}

fn read_layout(path: &Path, spec: &CanvasSpec) -> Result<Layout> {
    Layout::from_layout_json(&read(path)?, spec)
        .map_err(anyhow::Error::msg)
        .with_context(|| format!("invalid layout {}", path.display()))
}

fn score(a: &ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let qw = QualityWeights {
        alpha: a.alpha,
        ..QualityWeights::default()
    };
    qw.validate()?;
    let critic = Critic::new(a.weights, qw);
    let reference = a.reference.as_deref().map(|p| read_layout(p, &spec)).transpose()?;
    let parsed = match (&a.layout, &a.output) {
        (Some(p), _) => parse_dual_output(&read_layout(p, &spec)?.to_dual_output(""), &spec),
        (None, Some(p)) => parse_dual_output(&read(p)?, &spec),
        (None, None) => bail!("one of --layout or --output is required"),
    };
    let breakdown = critic.score(&parsed, &spec, reference.as_ref())?;
    writeln!(out, "{}", breakdown.to_json())?;
    Ok(())
}

fn evaluate(a: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let report = load_annotations(&a.data, a.strict)?;
    for s in &report.skipped {
        writeln!(err, "warning: line {} skipped: {}", s.line, s.reason)?;
    }
    let mut ids = Vec::new();
    let mut batch = Vec::new();
    for r in &report.records {
        let (spec, layout) = to_canvas_spec(r)?;
        ids.push(r.id.clone());
        batch.push((layout, spec.saliency));
    }
    let metrics = evaluate_batch(
        &batch,
        &EvalOptions {
            resolution: a.resolution,
            keep_per_layout: true,
        },
    )?;
    let text = match a.format {
        ReportFormat::Csv => metrics.to_csv(&ids),
        ReportFormat::Json => metrics.aggregate_json() + "\n",
    };
    emit(out, a.out.as_deref(), &text)
}

fn train_cmd(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let (_, specs, refs) = load_suite(a.suite.as_deref())?;
    let cfg = GrpoConfig {
        group_size: a.group_size,
        clip_eps: a.clip_eps,
        kl_beta: a.kl_beta,
        learning_rate: a.lr,
        iterations: a.iters,
        seed: a.seed,
        ..GrpoConfig::default()
    };
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let init = match &a.init {
        Some(p) => PolicyParams::from_json(&read(p)?)?,
        None => PolicyParams::random_init(&specs, &mut rng),
    };
    let references = (!a.no_reference).then_some(&refs[..]);
    let outcome = train_from(
        init,
        &specs,
        references,
        &cfg,
        &a.weights,
        &QualityWeights::default(),
        &mut rng,
    )?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write_file(&a.out.join("params.json"), &outcome.params.to_json())?;
    write_file(&a.out.join("initial_params.json"), &outcome.reference.to_json())?;
    write_file(&a.out.join("train_log.jsonl"), &outcome.log_jsonl())?;
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        writeln!(
            out,
            "mean reward {:.4} at iteration 0, {:.4} at iteration {}",
            first.mean_reward, last.mean_reward, last.iteration
        )?;
    }
    Ok(())
}

fn rerank_cmd(a: &RerankArgs, out: &mut dyn Write) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let reference = a.reference.as_deref().map(|p| read_layout(p, &spec)).transpose()?;
    let timeout = Duration::try_from_secs_f64(a.timeout).context("invalid --timeout")?;
    let cfg = EndpointConfig {
        temperature: a.temperature,
        timeout,
        retries: a.retries,
        concurrency: a.concurrency,
        seed: a.seed,
        ..EndpointConfig::from_env(&a.endpoint, &a.model, &a.api_key_env)
    };
    let result = best_of_n(&cfg, &spec, reference.as_ref(), a.n, &a.weights, &QualityWeights::default())?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write_file(&a.out.join("rerank.json"), &result.to_json())?;
    let winner = result.winner();
    match result.winner_layout() {
        Some(l) => write_file(&a.out.join("winner_layout.json"), &l.to_layout_json())?,
        None => bail!("no candidate produced a parsable layout"),
    }
    writeln!(
        out,
        "winner {} of {}: total {:.4} ({:?})",
        result.winner,
        result.candidates.len(),
        winner.reward.r_total,
        winner.parsed.status
    )?;
    Ok(())
}

fn render_cmd(a: &RenderArgs, out: &mut dyn Write) -> Result<()> {
    let (spec, layout) = match (&a.spec, &a.layout, &a.data) {
        (Some(s), Some(l), _) => {
            let spec = read_spec(s)?;
            let layout = read_layout(l, &spec)?;
            (spec, layout)
        }
        (_, _, Some(d)) => {
            let records = load_annotations(d, true)?.records;
            let rec = records
                .get(a.index)
                .with_context(|| format!("index {} out of range ({} records)", a.index, records.len()))?;
            to_canvas_spec(rec)?
        }
        _ => bail!("either --spec with --layout or --data is required"),
    };
    let style = RenderStyle::for_canvas(a.width.unwrap_or(spec.canvas_width), a.height.unwrap_or(spec.canvas_height));
    emit(out, a.out.as_deref(), &render_svg(&layout, &spec.saliency, &style))
}

fn gen_cmd(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let records = if a.bundled {
        let items: Vec<_> = bundled_suite().into_iter().map(|(s, l)| (s, Some(l))).collect();
        suite_records("suite", &items)
    } else {
        let cfg = SynthConfig {
            count: a.count,
            min_elements: a.min_elements,
            max_elements: a.max_elements,
            underlay_prob: a.underlay_prob,
            min_saliency: a.min_saliency,
            max_saliency: a.max_saliency,
            mode: a.mode,
            seed: a.seed,
        };
        suite_records(a.mode.as_str(), &generate_synthetic(&cfg)?)
    };
    let mut buf = Vec::new();
    write_annotations(&mut buf, &records)?;
    emit(out, a.out.as_deref(), &String::from_utf8(buf)?)
}

fn ablate_cmd(a: &AblateArgs, out: &mut dyn Write) -> Result<()> {
    let (_, specs, refs) = load_suite(a.suite.as_deref())?;
    let base = GrpoConfig {
        iterations: a.iters,
        group_size: a.group_size,
        ..GrpoConfig::default()
    };
    base.validate()?;
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|i| a.seed + i).collect();
    let rows = run_ablation(&specs, &refs, &base, &QualityWeights::default(), &seeds)?;
    let text = match a.format {
        TableFormat::Table => ablation::to_table(&rows),
        TableFormat::Csv => ablation::to_csv(&rows),
        TableFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(out, a.out.as_deref(), &text)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Score(a) => score(a, out),
        Command::Evaluate(a) => evaluate(a, out, err),
        Command::Train(a) => train_cmd(a, out),
        Command::Rerank(a) => rerank_cmd(a, out),
        Command::Render(a) => render_cmd(a, out),
        Command::Gen(a) => gen_cmd(a, out),
        Command::Ablate(a) => ablate_cmd(a, out),
    }
}

/// Runs the command line against the given streams and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| {
                // Pool workers need Send streams, so output is buffered.
                let (mut o, mut e) = (Vec::new(), Vec::new());
                let r = pool.install(|| dispatch(&cli, &mut o, &mut e));
                out.write_all(&o)?;
                err.write_all(&e)?;
                r
            }),
        None => dispatch(&cli, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
