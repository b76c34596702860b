//! Report bundle: plot-ready tables grouped by section plus a manifest.
//!
//! Every table is written in post-index or sorted order and floats use the
//! shortest round-trip formatting, so a bundle is byte-identical for any
//! degree of parallelism.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::Serializer;
use thiserror::Error;

use crate::authors::{category_counts, categorize_author, comments_per_post_curve, interaction_score, AuthorMetrics};
use crate::classify::{CyborgKind, CyborgTable, EvolutionKind, DAY};
use crate::exec::Execution;
use crate::ingest::{open_dump, InvalidPeriod};
use crate::limelight::hog_author_distinct_fraction;
use crate::pipeline::{run_pipeline, CorpusAnalysis, PipelineOptions};
use crate::stats::{
    ccdf, density_grid_2d, fit_lognormal_mle, scan_xmin_ks_with, Binning, DistributionSummary,
    ScanOptions, TailFit,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Ingest,
    Distributions,
    Lifetimes,
    Cyborg,
    Evolution,
    Limelight,
    Authors,
}

impl Section {
    pub const ALL: [Section; 7] = [
        Section::Ingest,
        Section::Distributions,
        Section::Lifetimes,
        Section::Cyborg,
        Section::Evolution,
        Section::Limelight,
        Section::Authors,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Section::Ingest => "ingest-stats",
            Section::Distributions => "distributions",
            Section::Lifetimes => "lifetimes",
            Section::Cyborg => "cyborg",
            Section::Evolution => "evolution",
            Section::Limelight => "limelight",
            Section::Authors => "authors",
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Section {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Section::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s || (s == "ingest" && *x == Section::Ingest))
            .ok_or_else(|| format!("unknown section `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Ndjson,
}

impl OutputFormat {
    fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Ndjson => "ndjson",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "ndjson" => Ok(OutputFormat::Ndjson),
            _ => Err(format!("unknown format `{s}`; expected csv or ndjson")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub posts_path: PathBuf,
    pub comments_path: PathBuf,
    pub pipeline: PipelineOptions,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub execution: Execution,
    pub sections: BTreeSet<Section>,
    pub emit_post_metrics: bool,
    pub emit_author_metrics: bool,
    pub emit_limelight: bool,
    /// Handles left out of the per-author distributions.
    pub exclude_authors: Vec<String>,
}

impl AnalysisConfig {
    pub fn new(posts: impl Into<PathBuf>, comments: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        AnalysisConfig {
            posts_path: posts.into(),
            comments_path: comments.into(),
            pipeline: PipelineOptions::default(),
            out_dir: out.into(),
            format: OutputFormat::Csv,
            execution: Execution::Sequential,
            sections: Section::ALL.into_iter().collect(),
            emit_post_metrics: false,
            emit_author_metrics: false,
            emit_limelight: false,
            exclude_authors: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: io::Error },
    #[error("cannot write report to {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Period(#[from] InvalidPeriod),
    #[error("invalid classifier config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub section: String,
    pub rows: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub files: Vec<ManifestEntry>,
    pub failed_sections: Vec<(String, String)>,
}

impl RunSummary {
    /// 0 on success, 2 when any section failed.
    pub fn exit_code(&self) -> i32 {
        if self.failed_sections.is_empty() {
            0
        } else {
            2
        }
    }
}

// ---------------------------------------------------------------------------
// Table output

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    Bool(bool),
    Null,
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::UInt(v as u64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => v.to_string(),
            Cell::Float(_) | Cell::Null => String::new(),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl serde::Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::UInt(v) => s.serialize_u64(*v),
            Cell::Float(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Float(_) | Cell::Null => s.serialize_none(),
            Cell::Str(v) => s.serialize_str(v),
            Cell::Bool(v) => s.serialize_bool(*v),
        }
    }
}

struct Row<'a>(&'a [&'static str], &'a [Cell]);

impl serde::Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

enum Sink {
    Csv(csv::Writer<BufWriter<File>>),
    Ndjson(BufWriter<File>),
}

/// Streams one table to disk and counts its rows.
pub struct TableWriter {
    sink: Sink,
    columns: &'static [&'static str],
    file: String,
    section: String,
    rows: u64,
}

impl TableWriter {
    pub fn create(
        dir: &Path,
        stem: &str,
        section: &str,
        columns: &'static [&'static str],
        format: OutputFormat,
    ) -> io::Result<Self> {
        let file = format!("{stem}.{}", format.extension());
        let out = BufWriter::new(File::create(dir.join(&file))?);
        let sink = match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(columns)?;
                Sink::Csv(w)
            }
            OutputFormat::Ndjson => Sink::Ndjson(out),
        };
        Ok(TableWriter { sink, columns, file, section: section.to_string(), rows: 0 })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns.len());
        match &mut self.sink {
            Sink::Csv(w) => w.write_record(cells.iter().map(Cell::text))?,
            Sink::Ndjson(w) => {
                serde_json::to_writer(&mut *w, &Row(self.columns, cells))?;
                w.write_all(b"\n")?;
            }
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finish(self) -> io::Result<ManifestEntry> {
        match self.sink {
            Sink::Csv(mut w) => w.flush()?,
            Sink::Ndjson(mut w) => w.flush()?,
        }
        Ok(ManifestEntry { file: self.file, section: self.section, rows: self.rows })
    }
}

struct Ctx<'a> {
    dir: &'a Path,
    format: OutputFormat,
    exec: Execution,
    excluded: HashSet<&'a str>,
    files: Vec<ManifestEntry>,
}

impl Ctx<'_> {
    fn table(
        &mut self,
        stem: &str,
        section: &str,
        columns: &'static [&'static str],
        rows: impl IntoIterator<Item = Vec<Cell>>,
    ) -> io::Result<()> {
        let mut t = TableWriter::create(self.dir, stem, section, columns, self.format)?;
        for r in rows {
            t.row(&r)?;
        }
        self.files.push(t.finish()?);
        Ok(())
    }

    fn metrics(&mut self, stem: &str, section: &str, rows: Vec<(&str, Cell)>) -> io::Result<()> {
        self.table(
            stem,
            section,
            &["metric", "value"],
            rows.into_iter().map(|(k, v)| vec![k.into(), v]),
        )
    }

    fn histogram(&mut self, stem: &str, section: &str, h: Option<&DistributionSummary>) -> io::Result<()> {
        let rows: Vec<Vec<Cell>> = match h {
            Some(h) => h
                .rows()
                .zip(h.density())
                .map(|((lo, hi, c), d)| vec![lo.into(), hi.into(), c.into(), d.into()])
                .collect(),
            None => Vec::new(),
        };
        self.table(stem, section, &["bin_lo", "bin_hi", "count", "density"], rows)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Histogram over `[0, 1]` with `width`-wide bins; an exact 1 lands in
/// the final `[1, 1 + width)` bin.
fn unit_histogram(values: &[f64], width: f64) -> DistributionSummary {
    let bins = (1.0 / width).round() as usize + 1;
    let mut h = DistributionSummary::linear_range(0.0, width * bins as f64, bins).expect("valid range");
    for &v in values {
        h.record(v);
    }
    h
}

fn fixed_linear(lo: f64, hi: f64, bins: usize, values: impl Iterator<Item = f64>) -> DistributionSummary {
    let mut h = DistributionSummary::linear_range(lo, hi, bins).expect("valid range");
    for v in values {
        h.record(v);
    }
    h
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

fn cyborg_name(k: CyborgKind) -> &'static str {
    match k {
        CyborgKind::CyborgLike => "cyborg_like",
        CyborgKind::FastSameAuthorShort => "fast_same_author_short",
        CyborgKind::NotFastSameAuthor => "other",
    }
}

fn evolution_name(k: EvolutionKind) -> &'static str {
    match k {
        EvolutionKind::EarlyBloomer => "early_bloomer",
        EvolutionKind::Steady => "steady",
        EvolutionKind::LateBloomer => "late_bloomer",
    }
}

// ---------------------------------------------------------------------------
// Sections

fn write_ingest(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    let s = &a.stats;
    let sec = Section::Ingest.name();
    let posts = a.posts.len() as u64;
    let comments: u64 = a.posts.iter().map(|p| p.metrics.total_comments as u64).sum();
    let commented = a.posts.iter().filter(|p| p.metrics.total_comments > 0).count() as u64;
    let orphaned: u64 = a.posts.iter().map(|p| p.metrics.orphaned_comments as u64).sum();
    let period = a.options.period;
    ctx.metrics(
        "ingest_summary",
        sec,
        vec![
            ("post_lines", s.post_lines.into()),
            ("comment_lines", s.comment_lines.into()),
            ("malformed_post_lines", s.malformed_post_lines.into()),
            ("malformed_comment_lines", s.malformed_comment_lines.into()),
            ("duplicate_posts", s.duplicate_posts.into()),
            ("posts", posts.into()),
            ("posts_dropped_out_of_period", s.posts_dropped_out_of_period.into()),
            ("posts_with_deleted_author", s.posts_with_deleted_author.into()),
            ("comments", comments.into()),
            ("comments_dropped_out_of_period", s.comments_dropped_out_of_period.into()),
            ("comments_dropped_post_out_of_period", s.comments_dropped_post_out_of_period.into()),
            ("comments_dropped_missing_post", s.comments_dropped_missing_post.into()),
            ("disconnected_posts", s.disconnected_posts().into()),
            ("removed_comments", s.removed_comments.into()),
            ("orphaned_comments", orphaned.into()),
            ("commented_posts", commented.into()),
            ("users", (a.authors.author_count() as u64).into()),
            ("mean_comments_per_post", ratio(comments, posts).into()),
            ("mean_comments_per_commented_post", ratio(comments, commented).into()),
            ("period_start", period.start().into()),
            ("period_end", period.end().into()),
        ],
    )?;
    ctx.table(
        "disconnected_posts",
        sec,
        &["post_id"],
        s.disconnected_post_ids.iter().map(|id| vec![id.as_str().into()]),
    )
}

fn fit_rows(quantity: &str, fit: Result<TailFit, String>) -> Vec<Cell> {
    match fit {
        Ok(f) => {
            let nu = f.ccdf_exponent();
            let (alpha, mu) = match nu {
                Some(_) => (Some(f.exponent_or_mu), None),
                None => (None, Some(f.exponent_or_mu)),
            };
            let alpha_fmt = alpha.map(|v| TailFit::format_with_uncertainty(v, f.stderr));
            let nu_fmt = nu.map(|v| TailFit::format_with_uncertainty(v, f.stderr));
            vec![
                quantity.into(),
                format!("{:?}", f.family).to_lowercase().into(),
                "ok".into(),
                alpha.into(),
                nu.into(),
                mu.into(),
                (mu.map(|_| f.sigma)).into(),
                f.xmin.into(),
                f.stderr.into(),
                f.ks_stat.into(),
                f.n_tail.into(),
                alpha_fmt.into(),
                nu_fmt.into(),
            ]
        }
        Err(e) => {
            let mut row: Vec<Cell> = vec![quantity.into(), Cell::Null, format!("failed: {e}").into()];
            row.extend(std::iter::repeat_n(Cell::Null, 10));
            row
        }
    }
}

const FIT_COLUMNS: &[&str] = &[
    "quantity", "family", "status", "alpha", "nu", "mu", "sigma", "xmin", "stderr", "ks_stat",
    "n_tail", "alpha_formatted", "nu_formatted",
];

fn ccdf_rows(values: &[f64]) -> Vec<Vec<Cell>> {
    ccdf(values)
        .map(|c| c.points.into_iter().map(|(x, q)| vec![x.into(), q.into()]).collect())
        .unwrap_or_default()
}

fn write_distributions(a: &CorpusAnalysis, authors: &[AuthorMetrics], ctx: &mut Ctx) -> io::Result<()> {
    let sec = Section::Distributions.name();
    let per_post: Vec<f64> = a
        .posts
        .iter()
        .map(|p| p.metrics.total_comments as f64)
        .filter(|&c| c > 0.0)
        .collect();
    let kept: Vec<&AuthorMetrics> = authors.iter().filter(|m| !ctx.excluded.contains(m.author.as_str())).collect();
    let posts_per_author: Vec<f64> =
        kept.iter().filter(|m| m.posts_created > 0).map(|m| m.posts_created as f64).collect();
    let comments_per_author: Vec<f64> =
        kept.iter().filter(|m| m.comments_made > 0).map(|m| m.comments_made as f64).collect();

    ctx.table("ccdf_comments_per_post", sec, &["comments", "ccdf"], ccdf_rows(&per_post))?;
    ctx.table("ccdf_posts_per_author", sec, &["posts", "ccdf"], ccdf_rows(&posts_per_author))?;
    ctx.table("ccdf_comments_per_author", sec, &["comments", "ccdf"], ccdf_rows(&comments_per_author))?;

    let opts = ScanOptions::default();
    let exec = ctx.exec;
    let scan = |v: &[f64]| scan_xmin_ks_with(v, &opts, exec).map_err(|e| e.to_string());
    let fits = vec![
        fit_rows("comments_per_post", scan(&per_post)),
        fit_rows("comments_per_post", fit_lognormal_mle(&per_post).map_err(|e| e.to_string())),
        fit_rows("posts_per_author", scan(&posts_per_author)),
        fit_rows("comments_per_author", scan(&comments_per_author)),
    ];
    ctx.table("tail_fits", sec, FIT_COLUMNS, fits)?;

    let ages: Vec<f64> = a.posts.iter().filter_map(|p| p.metrics.age_seconds).map(|x| x as f64).collect();
    let one: Vec<f64> = a
        .posts
        .iter()
        .filter(|p| p.metrics.total_comments == 1)
        .filter_map(|p| p.metrics.age_seconds)
        .map(|x| x as f64)
        .collect();
    let h = DistributionSummary::from_values(&ages, Binning::log_default()).ok();
    ctx.histogram("age_pdf", sec, h.as_ref())?;
    let h = DistributionSummary::from_values(&one, Binning::log_default()).ok();
    ctx.histogram("one_comment_age_pdf", sec, h.as_ref())
}

fn write_lifetimes(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    let sec = Section::Lifetimes.name();
    let threshold = a.options.classifier.mayfly_threshold_s;
    let commented = a.posts.iter().filter(|p| p.mayfly.is_some()).count() as u64;
    let mayfly = a.posts.iter().filter(|p| p.mayfly == Some(true)).count() as u64;
    let inset = fixed_linear(
        0.0,
        60.0,
        60,
        a.posts.iter().filter_map(|p| p.metrics.age_seconds).map(|x| x as f64),
    );
    ctx.metrics(
        "mayfly_summary",
        sec,
        vec![
            ("threshold_s", threshold.into()),
            ("commented_posts", commented.into()),
            ("posts_without_comments", (a.posts.len() as u64 - commented).into()),
            ("mayfly_posts", mayfly.into()),
            ("mayfly_fraction", ratio(mayfly, commented).into()),
            ("ages_at_least_60s", inset.out_of_range.into()),
        ],
    )?;
    ctx.histogram("age_inset_60s", sec, Some(&inset))
}

fn write_cyborg(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    let sec = Section::Cyborg.name();
    let cfg = &a.options.classifier;
    let mut table = CyborgTable::default();
    for p in &a.posts {
        table.observe(&p.metrics, cfg);
    }
    ctx.table(
        "cyborg_table",
        sec,
        &["row", "count"],
        table.rows().into_iter().map(|(k, v)| vec![k.into(), v.into()]),
    )?;
    let latency = fixed_linear(
        0.0,
        60.0,
        60,
        a.posts.iter().filter_map(|p| p.metrics.first_comment_latency_seconds).map(|x| x as f64),
    );
    ctx.histogram("first_comment_latency_60s", sec, Some(&latency))?;

    // age profile and success rate of fast same-author posts
    let fast: Vec<(f64, bool)> = a
        .posts
        .iter()
        .filter(|p| matches!(p.cyborg, Some(c) if c.kind != CyborgKind::NotFastSameAuthor))
        .filter_map(|p| p.metrics.age_seconds.map(|age| (age as f64, p.successful)))
        .collect();
    let ages: Vec<f64> = fast.iter().map(|f| f.0).collect();
    let mut rows = Vec::new();
    if let Ok(all) = DistributionSummary::from_values(&ages, Binning::log_default()) {
        let mut succ = DistributionSummary::with_edges(all.bin_edges.clone()).expect("same edges");
        for &(age, ok) in &fast {
            if ok {
                succ.record(age);
            }
        }
        for ((lo, hi, n), (_, _, s)) in all.rows().zip(succ.rows()) {
            rows.push(vec![lo.into(), hi.into(), n.into(), s.into(), ratio(s, n).into()]);
        }
    }
    ctx.table(
        "fast_post_age_success",
        sec,
        &["bin_lo", "bin_hi", "posts", "successful", "success_rate"],
        rows,
    )
}

fn write_evolution(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    let sec = Section::Evolution.name();
    let popular: Vec<_> = a.posts.iter().filter(|p| p.evolution.is_some()).collect();
    let mut counts: BTreeMap<EvolutionKind, u64> = BTreeMap::new();
    for p in &popular {
        *counts.entry(p.evolution.expect("filtered").kind).or_default() += 1;
    }
    let mut rows: Vec<Vec<Cell>> = [EvolutionKind::EarlyBloomer, EvolutionKind::Steady, EvolutionKind::LateBloomer]
        .iter()
        .map(|k| vec![evolution_name(*k).into(), counts.get(k).copied().unwrap_or(0).into()])
        .collect();
    rows.push(vec!["popular_posts".into(), (popular.len() as u64).into()]);
    ctx.table("evolution_counts", sec, &["class", "count"], rows)?;
    ctx.table(
        "evolution_posts",
        sec,
        &["post_id", "n_comments", "t75_seconds", "class"],
        popular.iter().map(|p| {
            let e = p.evolution.expect("filtered");
            vec![
                p.metrics.post_id.as_str().into(),
                p.metrics.total_comments.into(),
                e.t75_seconds.into(),
                evolution_name(e.kind).into(),
            ]
        }),
    )?;

    // (days since creation, fraction of comments reached) per comment
    let pairs: Vec<(f64, f64)> = popular
        .iter()
        .flat_map(|p| {
            let n = p.metrics.comment_offsets.len() as f64;
            p.metrics
                .comment_offsets
                .iter()
                .enumerate()
                .map(move |(i, &o)| (o as f64 / DAY as f64, (i + 1) as f64 / n))
        })
        .collect();
    let grid = density_grid_2d(
        &pairs,
        Binning::Linear { width: 1.0, origin: 0.0 },
        Binning::Linear { width: 0.05, origin: 0.0 },
    )
    .ok();
    let mut cells = Vec::new();
    let mut means = Vec::new();
    if let Some(g) = &grid {
        for (i, col) in g.counts.iter().enumerate() {
            let (xl, xh) = (g.x_edges[i], g.x_edges[i + 1]);
            for (j, &c) in col.iter().enumerate() {
                if c > 0 {
                    cells.push(vec![xl.into(), xh.into(), g.y_edges[j].into(), g.y_edges[j + 1].into(), c.into()]);
                }
            }
            means.push(vec![xl.into(), xh.into(), g.column_mean_y[i].into(), col.iter().sum::<u64>().into()]);
        }
    }
    ctx.table("evolution_density", sec, &["days_lo", "days_hi", "fraction_lo", "fraction_hi", "count"], cells)?;
    ctx.table("evolution_mean_curve", sec, &["days_lo", "days_hi", "mean_fraction", "count"], means)?;

    // per class: mean fraction of comments present after d days
    const DAYS: i64 = 60;
    let mut curves = Vec::new();
    for kind in [EvolutionKind::EarlyBloomer, EvolutionKind::Steady, EvolutionKind::LateBloomer] {
        let members: Vec<&Vec<i64>> = popular
            .iter()
            .filter(|p| p.evolution.map(|e| e.kind) == Some(kind))
            .map(|p| &p.metrics.comment_offsets)
            .collect();
        if members.is_empty() {
            continue;
        }
        for d in 0..=DAYS {
            let cut = d * DAY;
            let sum: f64 = members
                .iter()
                .map(|o| o.partition_point(|&x| x <= cut) as f64 / o.len() as f64)
                .sum();
            curves.push(vec![evolution_name(kind).into(), d.into(), (sum / members.len() as f64).into()]);
        }
    }
    ctx.table("evolution_curves", sec, &["class", "day", "mean_fraction"], curves)
}

fn write_limelight(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    let sec = Section::Limelight.name();
    let results: Vec<_> = a.posts.iter().filter_map(|p| p.limelight.clone()).collect();
    let mut scores: Vec<f64> = results.iter().map(|r| r.score).collect();
    ctx.histogram("limelight_histogram", sec, Some(&unit_histogram(&scores, 0.02)))?;
    scores.sort_by(f64::total_cmp);
    let n = scores.len();
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        let f = (i + 1) as f64 / n as f64;
        match cdf.last_mut() {
            Some(last) if last.0 == s => last.1 = f,
            _ => cdf.push((s, f)),
        }
    }
    ctx.table("limelight_cdf", sec, &["score", "cdf"], cdf.into_iter().map(|(s, f)| vec![s.into(), f.into()]))?;
    let high = scores.iter().filter(|&&s| s >= 0.25).count() as u64;
    let distinct = results.iter().filter(|r| !r.hog_author_is_post_author).count() as u64;
    let mean = (n > 0).then(|| scores.iter().sum::<f64>() / n as f64);
    ctx.metrics(
        "limelight_summary",
        sec,
        vec![
            ("min_comments", (a.options.limelight_min_comments as u64).into()),
            ("eligible_posts", (n as u64).into()),
            ("mean_score", mean.into()),
            ("median_score", median(&scores).into()),
            ("fraction_at_least_0_25", ratio(high, n as u64).into()),
            ("hog_distinct_posts", distinct.into()),
            ("hog_distinct_fraction", hog_author_distinct_fraction(&results).ok().into()),
        ],
    )?;
    // eligible posts split by the class of their first comment
    let mut cross: BTreeMap<CyborgKind, (u64, u64, f64)> = BTreeMap::new();
    for p in a.posts.iter().filter(|p| p.limelight.is_some()) {
        let (Some(c), Some(l)) = (p.cyborg, &p.limelight) else { continue };
        let e = cross.entry(c.kind).or_default();
        e.0 += 1;
        e.1 += u64::from(l.score >= 0.25);
        e.2 += l.score;
    }
    ctx.table(
        "limelight_by_cyborg_class",
        sec,
        &["cyborg_class", "posts", "at_least_0_25", "mean_score"],
        cross.into_iter().map(|(k, (posts, high, sum))| {
            vec![cyborg_name(k).into(), posts.into(), high.into(), (sum / posts as f64).into()]
        }),
    )
}

fn write_authors(a: &CorpusAnalysis, authors: &[AuthorMetrics], ctx: &mut Ctx) -> io::Result<()> {
    let sec = Section::Authors.name();
    let c = category_counts(authors);
    let total = c.total_active;
    ctx.table(
        "author_categories",
        sec,
        &["category", "count", "fraction"],
        [
            ("total_active", total),
            ("producers_only", c.producers_only),
            ("consumers_only", c.consumers_only),
            ("both", c.both),
        ]
        .into_iter()
        .map(|(k, v)| vec![k.into(), v.into(), ratio(v, total).into()]),
    )?;
    let scores: Vec<f64> = authors
        .iter()
        .filter_map(|m| interaction_score(m.effective_comments_received, m.comments_on_others))
        .collect();
    let undefined = authors.len() - scores.len();
    ctx.histogram("interaction_score_histogram", sec, Some(&unit_histogram(&scores, 0.02)))?;
    let curve = comments_per_post_curve(authors);
    ctx.table(
        "comments_per_post_ratio_curve",
        sec,
        &["ratio", "cumulative_fraction"],
        curve.points.iter().map(|&(r, f)| vec![r.into(), f.into()]),
    )?;
    let s = &a.authors;
    ctx.metrics(
        "author_summary",
        sec,
        vec![
            ("active_authors", (authors.len() as u64).into()),
            ("interaction_edges", (s.edge_count() as u64).into()),
            ("interaction_score_defined", (scores.len() as u64).into()),
            ("interaction_score_undefined", (undefined as u64).into()),
            ("ratio_authors", curve.n_authors.into()),
            ("ratio_below_unity", curve.below_unity.into()),
            ("ratio_at_unity", curve.at_unity.into()),
            ("ratio_above_unity", curve.above_unity.into()),
            ("deleted_posts", s.deleted.posts.into()),
            ("deleted_comments", s.deleted.comments_made.into()),
            ("comments_on_deleted_posts", s.deleted.comments_on_deleted_posts.into()),
            ("comments_on_own_posts", s.comments_on_own_posts.into()),
        ],
    )
}

fn write_post_metrics(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    let mut t = TableWriter::create(
        ctx.dir,
        "post_metrics",
        "posts",
        &[
            "post_id", "author", "created_utc", "score", "n_comments", "effective_comments",
            "age_seconds", "first_comment_latency_seconds", "first_comment_same_author",
            "first_comment_char_len", "orphaned_comments", "mayfly", "cyborg_class", "successful",
            "evolution_class", "t75_seconds", "limelight_score",
        ],
        ctx.format,
    )?;
    for p in &a.posts {
        let m = &p.metrics;
        let commented = m.total_comments > 0;
        t.row(&[
            m.post_id.as_str().into(),
            m.author.as_str().into(),
            m.created_utc.into(),
            m.score.into(),
            m.total_comments.into(),
            m.effective_comments.into(),
            m.age_seconds.into(),
            m.first_comment_latency_seconds.into(),
            commented.then_some(m.first_comment_same_author).into(),
            commented.then_some(m.first_comment_char_len).into(),
            m.orphaned_comments.into(),
            p.mayfly.into(),
            p.cyborg.map(|c| cyborg_name(c.kind)).into(),
            p.successful.into(),
            p.evolution.map(|e| evolution_name(e.kind)).into(),
            p.evolution.map(|e| e.t75_seconds).into(),
            p.limelight.as_ref().map(|l| l.score).into(),
        ])?;
    }
    ctx.files.push(t.finish()?);
    Ok(())
}

fn write_author_metrics(authors: &[AuthorMetrics], ctx: &mut Ctx) -> io::Result<()> {
    ctx.table(
        "author_metrics",
        "authors",
        &[
            "author", "posts_created", "comments_made", "effective_comments_received",
            "comments_on_others", "interaction_score", "category", "in_degree", "out_degree",
            "comments_per_post_ratio",
        ],
        authors.iter().map(|m| {
            let cat = categorize_author(m).ok().map(|c| match c {
                crate::authors::AuthorCategory::ProducerOnly => "producer_only",
                crate::authors::AuthorCategory::ConsumerOnly => "consumer_only",
                crate::authors::AuthorCategory::Both => "both",
            });
            vec![
                m.author.as_str().into(),
                m.posts_created.into(),
                m.comments_made.into(),
                m.effective_comments_received.into(),
                m.comments_on_others.into(),
                interaction_score(m.effective_comments_received, m.comments_on_others).into(),
                cat.into(),
                m.in_degree.into(),
                m.out_degree.into(),
                ratio(m.effective_comments_received, m.posts_created).into(),
            ]
        }),
    )
}

fn write_limelight_posts(a: &CorpusAnalysis, ctx: &mut Ctx) -> io::Result<()> {
    ctx.table(
        "limelight_posts",
        "limelight",
        &[
            "post_id", "n_comments", "score", "hog_comment_id", "hog_author",
            "hog_author_is_post_author", "hog_branch_size", "branch_total", "n_first_level",
        ],
        a.posts.iter().filter_map(|p| {
            let l = p.limelight.as_ref()?;
            Some(vec![
                l.post_id.as_str().into(),
                p.metrics.total_comments.into(),
                l.score.into(),
                l.hog_comment_id.as_str().into(),
                l.hog_author.as_str().into(),
                l.hog_author_is_post_author.into(),
                l.hog_branch_size.into(),
                l.branch_total.into(),
                l.n_first_level.into(),
            ])
        }),
    )
}

/// Writes the selected sections of `analysis` into `cfg.out_dir`. A
/// failing section is recorded and the others still run.
pub fn write_report(analysis: &CorpusAnalysis, cfg: &AnalysisConfig) -> Result<RunSummary, ReportError> {
    let out_err = |source| ReportError::Output { path: cfg.out_dir.clone(), source };
    fs::create_dir_all(&cfg.out_dir).map_err(out_err)?;
    let authors = analysis.authors.finalize();
    let mut ctx = Ctx {
        dir: &cfg.out_dir,
        format: cfg.format,
        exec: cfg.execution,
        excluded: cfg.exclude_authors.iter().map(String::as_str).collect(),
        files: Vec::new(),
    };
    let mut summary = RunSummary::default();
    let mut record = |name: &str, r: io::Result<()>| {
        if let Err(e) = r {
            log::error!("section {name} failed: {e}");
            summary.failed_sections.push((name.to_string(), e.to_string()));
        }
    };
    for s in &cfg.sections {
        let r = cfg.execution.install(|| match s {
            Section::Ingest => write_ingest(analysis, &mut ctx),
            Section::Distributions => write_distributions(analysis, &authors, &mut ctx),
            Section::Lifetimes => write_lifetimes(analysis, &mut ctx),
            Section::Cyborg => write_cyborg(analysis, &mut ctx),
            Section::Evolution => write_evolution(analysis, &mut ctx),
            Section::Limelight => write_limelight(analysis, &mut ctx),
            Section::Authors => write_authors(analysis, &authors, &mut ctx),
        });
        record(s.name(), r);
    }
    if cfg.emit_post_metrics {
        record("post-metrics", write_post_metrics(analysis, &mut ctx));
    }
    if cfg.emit_author_metrics {
        record("author-metrics", write_author_metrics(&authors, &mut ctx));
    }
    if cfg.emit_limelight {
        record("limelight-posts", write_limelight_posts(analysis, &mut ctx));
    }
    summary.files = std::mem::take(&mut ctx.files);

    let manifest = cfg.out_dir.join("manifest.csv");
    let write_manifest = || -> io::Result<()> {
        let mut w = csv::Writer::from_path(&manifest)?;
        w.write_record(["file", "section", "rows"])?;
        for f in &summary.files {
            w.write_record([f.file.as_str(), f.section.as_str(), &f.rows.to_string()])?;
        }
        for (s, e) in &summary.failed_sections {
            w.write_record([String::new(), s.clone(), format!("failed: {e}")])?;
        }
        w.flush()
    };
    write_manifest().map_err(out_err)?;
    Ok(summary)
}

/// Full pipeline: read both dumps, analyze, write the bundle.
pub fn run_analysis(cfg: &AnalysisConfig) -> Result<RunSummary, ReportError> {
    cfg.pipeline
        .classifier
        .validate()
        .map_err(|e| ReportError::Config(e.to_string()))?;
    let open = |p: &PathBuf| open_dump(p).map_err(|source| ReportError::Input { path: p.clone(), source });
    let posts = open(&cfg.posts_path)?;
    let comments = open(&cfg.comments_path)?;
    let analysis = run_pipeline(posts, comments, &cfg.pipeline, cfg.execution).map_err(|source| {
        ReportError::Input { path: cfg.comments_path.clone(), source }
    })?;
    write_report(&analysis, cfg)
}
