use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use threadscope::authors::EdgeTarget;
use threadscope::classify::{ClassifierConfig, SuccessMode};
use threadscope::exec::Execution;
use threadscope::ingest::{IdNormalization, Period};
use threadscope::pipeline::PipelineOptions;
use threadscope::report::{run_analysis, AnalysisConfig, OutputFormat, Section};
use threadscope::synth::{generate_corpus_to_dir, CorpusSpec};

#[derive(Parser)]
#[command(name = "threadscope", version, about = "Behavioral analytics over threaded discussion dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; 1 runs sequentially, default uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Ingestion summary.
    IngestStats(AnalysisArgs),
    /// Comment and activity distributions with tail fits.
    Distributions(AnalysisArgs),
    /// Post ages and short-lived posts.
    Lifetimes(AnalysisArgs),
    /// Fast same-author first comments and post success.
    Cyborg(AnalysisArgs),
    /// Comment accumulation classes of popular posts.
    Evolution(AnalysisArgs),
    /// Largest-branch share of popular discussions.
    Limelight(AnalysisArgs),
    /// Per-author activity, interaction scores and categories.
    Authors(AnalysisArgs),
    /// Every section, or those listed with --sections.
    Report {
        #[command(flatten)]
        args: AnalysisArgs,
        /// Comma-separated section names.
        #[arg(long, value_delimiter = ',', value_parser = parse_section)]
        sections: Vec<Section>,
    },
    /// Generate a synthetic corpus with ground truth.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_section(s: &str) -> Result<Section, String> {
    s.parse()
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Ndjson,
}

#[derive(Clone, Copy, ValueEnum)]
enum Success {
    CommentsOnly,
    CommentsOrScore,
}

#[derive(Clone, Copy, ValueEnum)]
enum Edge {
    PostAuthor,
    ParentAuthor,
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long)]
    posts: PathBuf,
    #[arg(long)]
    comments: PathBuf,
    /// Inclusive period start, epoch seconds.
    #[arg(long)]
    period_start: Option<i64>,
    /// Exclusive period end, epoch seconds.
    #[arg(long)]
    period_end: Option<i64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = 86_400)]
    mayfly_threshold: i64,
    #[arg(long, default_value_t = 6)]
    cyborg_latency: i64,
    /// Treat a latency equal to --cyborg-latency as slow.
    #[arg(long)]
    cyborg_latency_exclusive: bool,
    #[arg(long, default_value_t = 100)]
    cyborg_min_chars: usize,
    #[arg(long, default_value_t = 0.75)]
    bloomer_fraction: f64,
    #[arg(long, default_value_t = 86_400)]
    early_cutoff: i64,
    #[arg(long, default_value_t = 2_592_000)]
    late_cutoff: i64,
    /// Posts with more comments than this are popular.
    #[arg(long, default_value_t = 500)]
    popular_min_comments: usize,
    #[arg(long, default_value_t = 500)]
    limelight_min_comments: usize,
    #[arg(long, value_enum, default_value = "comments-or-score")]
    success_mode: Success,
    #[arg(long, value_enum, default_value = "post-author")]
    edge_target: Edge,
    /// Keep `t1_`/`t3_` id prefixes.
    #[arg(long)]
    verbatim_ids: bool,
    /// Leave this author out of the per-author distributions; repeatable.
    #[arg(long)]
    exclude_author: Vec<String>,
    #[arg(long)]
    emit_post_metrics: bool,
    #[arg(long)]
    emit_author_metrics: bool,
    #[arg(long)]
    emit_limelight: bool,
}

impl AnalysisArgs {
    fn config(self, sections: Vec<Section>, exec: Execution) -> Result<AnalysisConfig, String> {
        let period = match (self.period_start, self.period_end) {
            (None, None) => Period::unbounded(),
            (s, e) => Period::new(s.unwrap_or(1), e.unwrap_or(i64::MAX)).map_err(|e| e.to_string())?,
        };
        let classifier = ClassifierConfig {
            mayfly_threshold_s: self.mayfly_threshold,
            cyborg_latency_s: self.cyborg_latency,
            cyborg_latency_inclusive: !self.cyborg_latency_exclusive,
            cyborg_min_chars: self.cyborg_min_chars,
            bloomer_fraction: self.bloomer_fraction,
            early_cutoff_s: self.early_cutoff,
            late_cutoff_s: self.late_cutoff,
            popular_min_comments: self.popular_min_comments,
            success_mode: match self.success_mode {
                Success::CommentsOnly => SuccessMode::CommentsOnly,
                Success::CommentsOrScore => SuccessMode::CommentsOrScore,
            },
        };
        classifier.validate().map_err(|e| e.to_string())?;
        let mut cfg = AnalysisConfig::new(self.posts, self.comments, self.out);
        cfg.pipeline = PipelineOptions {
            period,
            ids: if self.verbatim_ids { IdNormalization::Verbatim } else { IdNormalization::StripTypePrefix },
            classifier,
            limelight_min_comments: self.limelight_min_comments,
            edge_target: match self.edge_target {
                Edge::PostAuthor => EdgeTarget::PostAuthor,
                Edge::ParentAuthor => EdgeTarget::ParentAuthor,
            },
            ..PipelineOptions::default()
        };
        cfg.format = match self.format {
            Format::Csv => OutputFormat::Csv,
            Format::Ndjson => OutputFormat::Ndjson,
        };
        cfg.execution = exec;
        if !sections.is_empty() {
            cfg.sections = sections.into_iter().collect();
        }
        cfg.emit_post_metrics = self.emit_post_metrics;
        cfg.emit_author_metrics = self.emit_author_metrics;
        cfg.emit_limelight = self.emit_limelight;
        cfg.exclude_authors = self.exclude_author;
        Ok(cfg)
    }
}

fn analyze(args: AnalysisArgs, sections: Vec<Section>, exec: Execution) -> ExitCode {
    let cfg = match args.config(sections, exec) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_analysis(&cfg) {
        Ok(summary) => {
            for (s, e) in &summary.failed_sections {
                eprintln!("section {s} failed: {e}");
            }
            log::info!("wrote {} files to {}", summary.files.len(), cfg.out_dir.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn synth(spec: Option<PathBuf>, out: PathBuf, seed: Option<u64>) -> ExitCode {
    let mut corpus = match spec {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(text) => match CorpusSpec::parse(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            },
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => CorpusSpec::default(),
    };
    if let Some(s) = seed {
        corpus.seed = s;
    }
    match generate_corpus_to_dir(&corpus, &out) {
        Ok(t) => {
            log::info!("generated {} posts and {} comments in {}", t.posts, t.comments, out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let exec = Execution::from_threads(cli.threads);
    let one = |s: Section| vec![s];
    match cli.command {
        Command::IngestStats(a) => analyze(a, one(Section::Ingest), exec),
        Command::Distributions(a) => analyze(a, one(Section::Distributions), exec),
        Command::Lifetimes(a) => analyze(a, one(Section::Lifetimes), exec),
        Command::Cyborg(a) => analyze(a, one(Section::Cyborg), exec),
        Command::Evolution(a) => analyze(a, one(Section::Evolution), exec),
        Command::Limelight(a) => analyze(a, one(Section::Limelight), exec),
        Command::Authors(a) => analyze(a, one(Section::Authors), exec),
        Command::Report { args, sections } => analyze(args, sections, exec),
        Command::Synth { spec, out, seed } => synth(spec, out, seed),
    }
}
