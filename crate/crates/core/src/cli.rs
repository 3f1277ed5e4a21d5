//! Command-line front end. Every command writes one JSON report, to `--out`
//! or stdout, and only after all computation has succeeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::frontier::{self, CurveConfig, MauveConfig, DEFAULT_GRID_SIZE, DEFAULT_SCALING};
use crate::io::{
    self, BtReport, CorrelationReport, EmbeddingFormat, PerplexityReport, ReportDocument,
    RunConfig, TextStats,
};
use crate::quantize::{
    EmbeddingSet, QuantizeConfig, DEFAULT_EXPLAINED_VARIANCE, DEFAULT_MAX_ITERS,
    DEFAULT_NUM_BUCKETS, DEFAULT_RESTARTS,
};
use crate::ranking;
use crate::textstats::{self, DEFAULT_BLEU_ORDER, DEFAULT_SELF_BLEU_SAMPLES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mauve", version, about = "Compare generated and reference text distributions")]
pub struct Cli {
    /// Seed for clustering, Self-BLEU sampling and tie-breaking.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Divergence-frontier score between two embedding sets.
    Mauve(MauveArgs),
    /// Frechet distance between Gaussian fits of two embedding sets.
    Frechet(PairArgs),
    /// Zipf, repetition, distinct-n and Self-BLEU for a token corpus.
    Stats(StatsArgs),
    /// Perplexities of model and human text and the gap between them.
    Ppl(PplArgs),
    /// Bradley-Terry scores from pairwise ratings.
    BtFit(BtArgs),
    /// Spearman correlation between two metric columns.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Embeddings of the reference (human) samples.
    #[arg(long = "p")]
    pub p: PathBuf,
    /// Embeddings of the model samples.
    #[arg(long = "q")]
    pub q: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<EmbeddingFormat>,
}

#[derive(Debug, Args)]
pub struct MauveArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = DEFAULT_NUM_BUCKETS, value_parser = at_least::<1>)]
    pub num_buckets: usize,
    #[arg(long = "scaling-c", default_value_t = DEFAULT_SCALING, value_parser = positive_f64)]
    pub scaling_c: f64,
    /// Grid resolution n; the frontier uses weights i/n for i in 1..n.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE, value_parser = at_least::<2>)]
    pub grid_size: usize,
    #[arg(long, default_value_t = DEFAULT_EXPLAINED_VARIANCE, value_parser = unit_interval)]
    pub pca_variance: f64,
    /// Leave the (0,1) and (1,0) endpoints off the frontier.
    #[arg(long)]
    pub no_anchors: bool,
    #[arg(long, default_value_t = DEFAULT_RESTARTS, value_parser = at_least::<1>)]
    pub kmeans_restarts: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS, value_parser = at_least::<1>)]
    pub kmeans_max_iters: usize,
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
    #[arg(long)]
    pub curve_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// JSONL file with one array of token ids per line.
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 4, value_parser = at_least::<1>)]
    pub distinct_n: usize,
    #[arg(long, default_value_t = DEFAULT_BLEU_ORDER, value_parser = at_least::<1>)]
    pub bleu_order: usize,
    #[arg(long, default_value_t = DEFAULT_SELF_BLEU_SAMPLES, value_parser = at_least::<1>)]
    pub self_bleu_samples: usize,
}

#[derive(Debug, Args)]
pub struct PplArgs {
    /// CSV of `total_logprob,n_tokens` for model text.
    #[arg(long)]
    pub model: PathBuf,
    /// Same format, for human text.
    #[arg(long)]
    pub human: PathBuf,
}

#[derive(Debug, Args)]
pub struct BtArgs {
    /// CSV of `player_a,player_b,rating`.
    pub ratings: PathBuf,
    #[arg(long, default_value_t = ranking::DEFAULT_MAX_ITERS, value_parser = at_least::<1>)]
    pub max_iters: usize,
    #[arg(long, default_value_t = ranking::DEFAULT_TOLERANCE, value_parser = positive_f64)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// CSV with a header row.
    pub metrics: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
}

fn at_least<const MIN: usize>(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= MIN => Ok(v),
        Ok(_) => Err(format!("must be at least {MIN}")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("must be a finite positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        Ok(_) => Err("must lie in (0, 1]".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn load_pair(args: &PairArgs) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let fmt = |p: &Path| args.format.unwrap_or_else(|| EmbeddingFormat::from_path(p));
    let p = io::read_embeddings(&args.p, fmt(&args.p))?;
    let q = io::read_embeddings(&args.q, fmt(&args.q))?;
    Ok((p, q))
}

/// Runs a parsed command and returns the finished report.
pub fn execute(cli: &Cli) -> Result<ReportDocument> {
    let start = Instant::now();
    let mut doc = match &cli.command {
        Command::Mauve(args) => run_mauve(args, cli.seed)?,
        Command::Frechet(args) => {
            let (p, q) = load_pair(args)?;
            let mut doc = ReportDocument::new(
                "frechet",
                RunConfig {
                    inputs: vec![display(&args.p), display(&args.q)],
                    ..RunConfig::default()
                },
            );
            doc.frechet_distance = Some(frontier::frechet_distance(&p, &q)?);
            doc
        }
        Command::Stats(args) => {
            let corpus = io::read_token_corpus(&args.corpus)?;
            let mut doc = ReportDocument::new(
                "stats",
                RunConfig {
                    inputs: vec![display(&args.corpus)],
                    seed: Some(cli.seed),
                    distinct_n: Some(args.distinct_n),
                    bleu_order: Some(args.bleu_order),
                    self_bleu_samples: Some(args.self_bleu_samples),
                    ..RunConfig::default()
                },
            );
            doc.text_stats = Some(TextStats {
                n_sequences: corpus.len(),
                zipf_coefficient: textstats::zipf_coefficient(&corpus)?,
                repetition_frequency: textstats::repetition_frequency(&corpus),
                distinct_n: textstats::distinct_n(&corpus, args.distinct_n)?,
                self_bleu: textstats::self_bleu(
                    &corpus,
                    args.bleu_order,
                    args.self_bleu_samples,
                    cli.seed,
                )?,
            });
            doc
        }
        Command::Ppl(args) => {
            let model = io::read_logprobs(&args.model)?;
            let human = io::read_logprobs(&args.human)?;
            let mut doc = ReportDocument::new(
                "ppl",
                RunConfig {
                    inputs: vec![display(&args.model), display(&args.human)],
                    ..RunConfig::default()
                },
            );
            doc.perplexity = Some(PerplexityReport {
                model_perplexity: textstats::perplexity(&model)?,
                human_perplexity: textstats::perplexity(&human)?,
                gap: textstats::gen_ppl_gap(&model, &human)?,
            });
            doc
        }
        Command::BtFit(args) => {
            let raw = io::read_ratings(&args.ratings)?;
            let data = ranking::preprocess_ratings(&raw, cli.seed)?;
            let fit = ranking::bt_fit(&data, args.max_iters, args.tolerance)?;
            if !fit.converged {
                log::warn!("Bradley-Terry fit stopped after {} iterations", fit.iterations);
            }
            let mut doc = ReportDocument::new(
                "bt-fit",
                RunConfig {
                    inputs: vec![display(&args.ratings)],
                    seed: Some(cli.seed),
                    bt_max_iters: Some(args.max_iters),
                    bt_tolerance: Some(args.tolerance),
                    ..RunConfig::default()
                },
            );
            doc.bradley_terry = Some(BtReport {
                negative_log_likelihood: ranking::bt_negative_log_likelihood(&data, &fit.scores),
                win_probability: fit.scores.win_prob_table(),
                games: data.games_per_player(),
                players: data.player_names,
                scores: fit.scores.w,
                iterations: fit.iterations,
                converged: fit.converged,
            });
            doc
        }
        Command::Correlate(args) => {
            let (x, y) = io::read_metric_columns(&args.metrics, &args.x, &args.y)?;
            let mut doc = ReportDocument::new(
                "correlate",
                RunConfig {
                    inputs: vec![display(&args.metrics)],
                    ..RunConfig::default()
                },
            );
            doc.correlation = Some(CorrelationReport {
                spearman: ranking::spearman(&x, &y)?,
                n: x.len(),
                x_column: args.x.clone(),
                y_column: args.y.clone(),
            });
            doc
        }
    };
    doc.timing.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(doc)
}

fn run_mauve(args: &MauveArgs, seed: u64) -> Result<ReportDocument> {
    let (p, q) = load_pair(&args.pair)?;
    let config = MauveConfig {
        quantize: QuantizeConfig {
            k: args.num_buckets,
            explained_variance: args.pca_variance,
            max_iters: args.kmeans_max_iters,
            restarts: args.kmeans_restarts,
            seed,
        },
        curve: CurveConfig {
            scaling: args.scaling_c,
            grid_size: args.grid_size,
            anchors: !args.no_anchors,
        },
    };
    let report = frontier::mauve(&p, &q, &config)?;
    if let Some(path) = &args.curve_csv {
        io::write_curve_csv(path, &report.curve)?;
    }
    if let Some(path) = &args.curve_svg {
        let title = format!("MAUVE = {:.4}", report.mauve);
        io::write_curve_svg(path, &report.curve, &title)?;
    }
    let mut doc = ReportDocument::new(
        "mauve",
        RunConfig {
            inputs: vec![display(&args.pair.p), display(&args.pair.q)],
            seed: Some(seed),
            num_buckets: Some(args.num_buckets),
            scaling_c: Some(args.scaling_c),
            grid_size: Some(args.grid_size),
            pca_variance: Some(args.pca_variance),
            anchors: Some(!args.no_anchors),
            kmeans_restarts: Some(args.kmeans_restarts),
            kmeans_max_iters: Some(args.kmeans_max_iters),
            ..RunConfig::default()
        },
    );
    doc.mauve = Some(report);
    Ok(doc)
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": message, "kind": kind }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
/// Errors go to stderr as a single JSON object.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            eprintln!("{}", error_json("usage", e.render().to_string().trim()));
            return EXIT_USAGE;
        }
    };
    match execute(&cli).and_then(|doc| emit(&cli, &doc)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            EXIT_DATA
        }
    }
}

fn emit(cli: &Cli, doc: &ReportDocument) -> Result<()> {
    match &cli.out {
        Some(path) => io::write_report(path, doc),
        None => {
            let text = io::report_to_string(doc);
            std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
