//! Two-pass corpus processing.
//!
//! Pass one indexes the kept posts. Pass two streams the comment dump,
//! admits in-period comments on kept posts and groups them per post in a
//! compact form. Trees are then built and analyzed chunk by chunk, so only
//! the grouped comments and one chunk of trees are alive at once.

use std::collections::HashSet;
use std::io::{self, BufRead};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::authors::{AuthorSummary, EdgeTarget};
use crate::classify::{
    classify_cyborg, classify_evolution, classify_mayfly, is_successful, ClassifierConfig,
    CyborgClass, EvolutionClass,
};
use crate::exec::Execution;
use crate::ingest::{
    for_each_line_batch, parse_comment_line, parse_post_line, IdNormalization, IngestStats,
    Period, PostIndex, PostRecord, DELETED_AUTHOR,
};
use crate::limelight::{limelight_score, LimelightResult, DEFAULT_LIMELIGHT_MIN_COMMENTS};
use crate::thread::{build_thread, post_metrics, PostMetrics, ThreadComment, ThreadTree};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub period: Period,
    pub ids: IdNormalization,
    pub classifier: ClassifierConfig,
    /// Posts with at least this many comments get a limelight score.
    pub limelight_min_comments: usize,
    pub edge_target: EdgeTarget,
    /// Lines parsed per batch.
    pub batch_lines: usize,
    /// Upper bound on comments held as built trees at once.
    pub chunk_comments: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            period: Period::unbounded(),
            ids: IdNormalization::default(),
            classifier: ClassifierConfig::default(),
            limelight_min_comments: DEFAULT_LIMELIGHT_MIN_COMMENTS,
            edge_target: EdgeTarget::default(),
            batch_lines: 16_384,
            chunk_comments: 262_144,
        }
    }
}

/// Kept posts with their admitted comments; `groups[i]` belongs to `posts[i]`.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub posts: Vec<PostRecord>,
    pub groups: Vec<Vec<ThreadComment>>,
    pub stats: IngestStats,
}

/// Shares one allocation per distinct author handle.
#[derive(Debug, Default)]
struct Interner(HashSet<Arc<str>>);

impl Interner {
    fn get(&mut self, s: &str) -> Arc<str> {
        if let Some(a) = self.0.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.0.insert(a.clone());
        a
    }
}

/// Runs both ingestion passes. Batches are parsed with `exec`; admission
/// and grouping stay sequential so results follow dump order.
pub fn load_corpus<P: BufRead, C: BufRead>(
    posts: P,
    comments: C,
    opts: &PipelineOptions,
    exec: Execution,
) -> io::Result<LoadedCorpus> {
    let ids = opts.ids;
    let mut index = PostIndex::new(opts.period);
    for_each_line_batch(posts, opts.batch_lines, |lines| {
        for parsed in exec.map(lines, |l| parse_post_line(l, ids)) {
            index.push(parsed);
        }
    })?;

    let mut stats = index.stats().clone();
    let mut groups: Vec<Vec<ThreadComment>> = vec![Vec::new(); index.posts().len()];
    let mut authors = Interner::default();
    for_each_line_batch(comments, opts.batch_lines, |lines| {
        for parsed in exec.map(lines, |l| parse_comment_line(l, ids)) {
            if let Some(i) = index.admit(&parsed, &mut stats) {
                let c = parsed.expect("admitted comments parsed");
                let author = authors.get(&c.author);
                let g = &mut groups[i];
                // most threads are tiny; avoid amortized slack there
                if g.len() == g.capacity() && g.len() < 16 {
                    g.reserve_exact(1);
                }
                g.push(ThreadComment::from_record_with_author(
                    &c.id,
                    &c.parent_id,
                    author,
                    c.created_utc,
                    &c.body,
                ));
            }
        }
    })?;
    let (posts, _) = index.into_parts();
    for g in &mut groups {
        g.shrink_to_fit();
    }
    Ok(LoadedCorpus { posts, groups, stats })
}

/// Every per-post result the report needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostAnalysis {
    /// Comment offsets are retained for popular posts only.
    pub metrics: PostMetrics,
    pub deleted_author: bool,
    pub mayfly: Option<bool>,
    pub cyborg: Option<CyborgClass>,
    pub successful: bool,
    pub evolution: Option<EvolutionClass>,
    pub limelight: Option<LimelightResult>,
}

pub fn analyze_tree(tree: &ThreadTree, opts: &PipelineOptions) -> PostAnalysis {
    let cfg = &opts.classifier;
    let mut metrics = post_metrics(tree);
    let commented = metrics.total_comments > 0;
    let evolution = classify_evolution(&metrics.comment_offsets, cfg).ok();
    if evolution.is_none() {
        metrics.comment_offsets = Vec::new();
    }
    let limelight = if metrics.total_comments >= opts.limelight_min_comments {
        limelight_score(tree).ok()
    } else {
        None
    };
    PostAnalysis {
        deleted_author: metrics.author == DELETED_AUTHOR,
        mayfly: classify_mayfly(&metrics, cfg),
        cyborg: commented.then(|| classify_cyborg(&metrics, cfg)),
        successful: is_successful(&metrics, metrics.score, cfg),
        evolution,
        limelight,
        metrics,
    }
}

#[derive(Debug, Clone)]
pub struct CorpusAnalysis {
    pub stats: IngestStats,
    /// In post-index order.
    pub posts: Vec<PostAnalysis>,
    pub authors: AuthorSummary,
    pub options: PipelineOptions,
}

/// Builds and analyzes every tree. Output is identical for any `exec`.
pub fn analyze_corpus(loaded: LoadedCorpus, opts: &PipelineOptions, exec: Execution) -> CorpusAnalysis {
    let LoadedCorpus { posts, groups, stats } = loaded;
    let mut results = Vec::with_capacity(posts.len());
    let mut authors = AuthorSummary::new();
    let mut chunk: Vec<(PostRecord, Vec<ThreadComment>)> = Vec::new();
    let mut held = 0usize;
    let edge = opts.edge_target;

    let mut flush = |chunk: &mut Vec<(PostRecord, Vec<ThreadComment>)>, authors: &mut AuthorSummary| {
        let trees = exec.map_owned(std::mem::take(chunk), |(p, g)| build_thread(p, g));
        results.extend(exec.map(&trees, |t| analyze_tree(t, opts)));
        let part = exec.fold_merge(
            &trees,
            AuthorSummary::new,
            |mut s, t| {
                s.observe_tree(t, edge);
                s
            },
            AuthorSummary::merge,
        );
        *authors = std::mem::take(authors).merge(part);
    };

    for (p, g) in posts.into_iter().zip(groups) {
        held += g.len() + 1;
        chunk.push((p, g));
        if held >= opts.chunk_comments {
            flush(&mut chunk, &mut authors);
            held = 0;
        }
    }
    if !chunk.is_empty() {
        flush(&mut chunk, &mut authors);
    }
    CorpusAnalysis { stats, posts: results, authors, options: *opts }
}

/// Loads and analyzes in one call, inside the pool `exec` describes.
pub fn run_pipeline<P: BufRead + Send, C: BufRead + Send>(
    posts: P,
    comments: C,
    opts: &PipelineOptions,
    exec: Execution,
) -> io::Result<CorpusAnalysis> {
    exec.install(|| {
        let loaded = load_corpus(posts, comments, opts, exec)?;
        Ok(analyze_corpus(loaded, opts, exec))
    })
}
