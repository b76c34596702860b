//! Synthetic dump generator with planted ground truth.
//!
//! Labels are drawn first (exact counts from the requested fractions) and
//! each post's comments are then constructed to satisfy them, so every
//! classifier can be checked for exact recovery. Output uses the same
//! newline-delimited format the ingester reads.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{bloomer_target, CyborgKind, EvolutionKind, DAY};
use crate::ingest::DELETED_AUTHOR;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid spec: {0}")]
    Invalid(String),
    #[error("spec fractions are inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CommentLaw {
    Pareto { alpha: f64, xmin: f64 },
    Fixed(usize),
}

impl FromStr for CommentLaw {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let args = |prefix: &str| -> Option<Vec<String>> {
            let inner = s.strip_prefix(prefix)?.strip_suffix(')')?;
            Some(inner.split(',').map(|a| a.trim().to_string()).collect())
        };
        if let Some(a) = args("pareto(") {
            if a.len() != 2 {
                return Err("pareto takes (alpha, xmin)".into());
            }
            let alpha = a[0].parse().map_err(|_| "bad alpha")?;
            let xmin = a[1].parse().map_err(|_| "bad xmin")?;
            Ok(CommentLaw::Pareto { alpha, xmin })
        } else if let Some(a) = args("fixed(") {
            let k = a[0].parse().map_err(|_| "bad count")?;
            Ok(CommentLaw::Fixed(k))
        } else {
            Err(format!("unknown comment law `{s}`"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub n_posts: usize,
    pub comment_law: CommentLaw,
    /// Law samples above this are redrawn.
    pub law_max_comments: usize,
    /// Posts forced above the popularity threshold.
    pub popular_posts: usize,
    pub popular_comments_min: usize,
    pub popular_comments_max: usize,
    pub fraction_zero_comments: f64,
    /// Fractions over commented posts.
    pub fraction_mayfly: f64,
    pub fraction_cyborg: f64,
    pub fraction_fast_short: f64,
    /// Fraction over all posts.
    pub fraction_successful: f64,
    /// Fractions over popular posts; they must sum to one.
    pub fraction_early: f64,
    pub fraction_steady: f64,
    pub fraction_late: f64,
    /// Fraction over limelight-eligible posts.
    pub fraction_hog_distinct: f64,
    pub limelight_min_score: f64,
    pub limelight_max_score: f64,
    pub n_authors: usize,
    pub fraction_producers_only: f64,
    pub fraction_consumers_only: f64,
    /// Probability that another user's comment is by a deleted account.
    pub fraction_deleted_comments: f64,
    pub fraction_deleted_posts: f64,
    pub fraction_removed_comments: f64,
    pub period_start: i64,
    pub period_end: i64,
}

/// 2008-01-01T00:00:00Z
pub const DEFAULT_PERIOD_START: i64 = 1_199_145_600;
/// 2009-01-01T00:00:00Z
pub const DEFAULT_PERIOD_END: i64 = 1_230_768_000;

/// Generator thresholds; they match the classifier defaults.
const POPULAR_ABOVE: usize = 500;
const LIMELIGHT_FROM: usize = 500;
const FAST_LATENCY: i64 = 6;
const CYBORG_CHARS: usize = 100;
const BLOOMER_FRACTION: f64 = 0.75;

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 1,
            n_posts: 1000,
            comment_law: CommentLaw::Pareto { alpha: 2.5, xmin: 1.0 },
            law_max_comments: 499,
            popular_posts: 0,
            popular_comments_min: 501,
            popular_comments_max: 1500,
            fraction_zero_comments: 0.0,
            fraction_mayfly: 0.8,
            fraction_cyborg: 0.1,
            fraction_fast_short: 0.02,
            fraction_successful: 0.7,
            fraction_early: 0.5,
            fraction_steady: 0.3,
            fraction_late: 0.2,
            fraction_hog_distinct: 0.97,
            limelight_min_score: 0.05,
            limelight_max_score: 0.9,
            n_authors: 200,
            fraction_producers_only: 0.2,
            fraction_consumers_only: 0.2,
            fraction_deleted_comments: 0.02,
            fraction_deleted_posts: 0.05,
            fraction_removed_comments: 0.01,
            period_start: DEFAULT_PERIOD_START,
            period_end: DEFAULT_PERIOD_END,
        }
    }
}

fn exact_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}

/// Splits `n` by `fractions` with largest-remainder rounding.
fn apportion(fractions: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut out: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut rest = n.saturating_sub(out.iter().sum());
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(fractions.len() * 2) {
        if rest == 0 {
            break;
        }
        out[i] += 1;
        rest -= 1;
    }
    out
}

impl CorpusSpec {
    /// Parses a `key = value` spec file. Blank lines and `#` comments are
    /// ignored; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut spec = CorpusSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SynthError::Parse { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            macro_rules! num {
                () => {
                    value.parse().map_err(|_| err(format!("bad value for {key}: `{value}`")))?
                };
            }
            match key {
                "seed" => spec.seed = num!(),
                "n_posts" => spec.n_posts = num!(),
                "comment_law" => spec.comment_law = value.parse().map_err(err)?,
                "law_max_comments" => spec.law_max_comments = num!(),
                "popular_posts" => spec.popular_posts = num!(),
                "popular_comments_min" => spec.popular_comments_min = num!(),
                "popular_comments_max" => spec.popular_comments_max = num!(),
                "fraction_zero_comments" => spec.fraction_zero_comments = num!(),
                "fraction_mayfly" => spec.fraction_mayfly = num!(),
                "fraction_cyborg" => spec.fraction_cyborg = num!(),
                "fraction_fast_short" => spec.fraction_fast_short = num!(),
                "fraction_successful" => spec.fraction_successful = num!(),
                "fraction_early" => spec.fraction_early = num!(),
                "fraction_steady" => spec.fraction_steady = num!(),
                "fraction_late" => spec.fraction_late = num!(),
                "fraction_hog_distinct" => spec.fraction_hog_distinct = num!(),
                "limelight_min_score" => spec.limelight_min_score = num!(),
                "limelight_max_score" => spec.limelight_max_score = num!(),
                "n_authors" => spec.n_authors = num!(),
                "fraction_producers_only" => spec.fraction_producers_only = num!(),
                "fraction_consumers_only" => spec.fraction_consumers_only = num!(),
                "fraction_deleted_comments" => spec.fraction_deleted_comments = num!(),
                "fraction_deleted_posts" => spec.fraction_deleted_posts = num!(),
                "fraction_removed_comments" => spec.fraction_removed_comments = num!(),
                "period_start" => spec.period_start = num!(),
                "period_end" => spec.period_end = num!(),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fractions = [
            ("fraction_zero_comments", self.fraction_zero_comments),
            ("fraction_mayfly", self.fraction_mayfly),
            ("fraction_cyborg", self.fraction_cyborg),
            ("fraction_fast_short", self.fraction_fast_short),
            ("fraction_successful", self.fraction_successful),
            ("fraction_early", self.fraction_early),
            ("fraction_steady", self.fraction_steady),
            ("fraction_late", self.fraction_late),
            ("fraction_hog_distinct", self.fraction_hog_distinct),
            ("fraction_producers_only", self.fraction_producers_only),
            ("fraction_consumers_only", self.fraction_consumers_only),
            ("fraction_deleted_comments", self.fraction_deleted_comments),
            ("fraction_deleted_posts", self.fraction_deleted_posts),
            ("fraction_removed_comments", self.fraction_removed_comments),
        ];
        for (name, f) in fractions {
            if !(0.0..=1.0).contains(&f) {
                return Err(SynthError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        let evo = self.fraction_early + self.fraction_steady + self.fraction_late;
        if (evo - 1.0).abs() > 1e-9 {
            return Err(SynthError::Inconsistent("evolution fractions must sum to 1".into()));
        }
        if self.fraction_cyborg + self.fraction_fast_short > 1.0 {
            return Err(SynthError::Inconsistent("cyborg + fast-short exceeds 1".into()));
        }
        if self.fraction_producers_only + self.fraction_consumers_only >= 1.0 {
            return Err(SynthError::Inconsistent(
                "producer-only and consumer-only fractions leave no authors doing both".into(),
            ));
        }
        if self.n_posts == 0 {
            return Err(SynthError::Invalid("n_posts must be positive".into()));
        }
        if self.n_authors < 4 {
            return Err(SynthError::Invalid("n_authors must be at least 4".into()));
        }
        if self.popular_posts > self.n_posts {
            return Err(SynthError::Invalid("popular_posts exceeds n_posts".into()));
        }
        if self.popular_comments_min <= POPULAR_ABOVE
            || self.popular_comments_max < self.popular_comments_min
        {
            return Err(SynthError::Invalid(format!(
                "popular comment range must lie above {POPULAR_ABOVE}"
            )));
        }
        if !(self.limelight_min_score > 0.0
            && self.limelight_min_score <= self.limelight_max_score
            && self.limelight_max_score <= 1.0)
        {
            return Err(SynthError::Invalid("limelight score range must lie in (0, 1]".into()));
        }
        match self.comment_law {
            CommentLaw::Pareto { alpha, xmin } => {
                if !(alpha > 1.0 && xmin >= 1.0) {
                    return Err(SynthError::Invalid("pareto law needs alpha > 1, xmin >= 1".into()));
                }
                if xmin.floor() as usize > self.law_max_comments {
                    return Err(SynthError::Invalid("law xmin exceeds law_max_comments".into()));
                }
            }
            CommentLaw::Fixed(k) => {
                if k == 0 {
                    return Err(SynthError::Invalid(
                        "fixed(0) law; use fraction_zero_comments instead".into(),
                    ));
                }
            }
        }
        if self.period_end - self.period_start <= 62 * DAY {
            return Err(SynthError::Invalid("period must span more than 62 days".into()));
        }
        if self.period_start <= 0 {
            return Err(SynthError::Invalid("period_start must be positive".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sampling

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid pareto parameters: need alpha > 1, xmin > 0, n >= 1")]
pub struct ParetoError;

/// Inverse-CDF transform of `u` in `(0, 1]`.
pub fn pareto_from_uniform(u: f64, alpha: f64, xmin: f64) -> f64 {
    xmin * u.powf(-1.0 / (alpha - 1.0))
}

/// `n` draws from a continuous Pareto with density exponent `alpha`.
pub fn sample_pareto(alpha: f64, xmin: f64, n: usize, seed: u64) -> Result<Vec<f64>, ParetoError> {
    if !(alpha > 1.0 && alpha.is_finite() && xmin > 0.0 && xmin.is_finite() && n >= 1) {
        return Err(ParetoError);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| pareto_from_uniform(1.0 - rng.random::<f64>(), alpha, xmin))
        .collect())
}

// ---------------------------------------------------------------------------
// Ground truth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostTruth {
    pub post_id: String,
    pub author: String,
    pub n_comments: usize,
    pub age_seconds: Option<i64>,
    pub effective_comments: usize,
    pub mayfly: Option<bool>,
    pub cyborg: Option<CyborgKind>,
    pub successful: bool,
    pub evolution: Option<EvolutionKind>,
    pub t75_seconds: Option<i64>,
    pub limelight_score: Option<f64>,
    pub hog_distinct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorTruth {
    pub author: String,
    pub posts_created: u64,
    pub comments_made: u64,
    pub effective_comments_received: u64,
    pub comments_on_others: u64,
    /// Received effective comments per post; absent without posts.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusTotals {
    pub posts: usize,
    pub comments: usize,
    pub commented_posts: usize,
    pub popular_posts: usize,
    pub limelight_eligible_posts: usize,
    pub mayfly_posts: usize,
    pub cyborg_like_posts: usize,
    pub fast_short_posts: usize,
    pub successful_posts: usize,
    pub early_bloomers: usize,
    pub steady_posts: usize,
    pub late_bloomers: usize,
    pub hog_distinct_posts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthRecord {
    Corpus { spec: CorpusSpec, totals: CorpusTotals },
    Post(PostTruth),
    Author(AuthorTruth),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub posts: Vec<PostTruth>,
    pub authors: Vec<AuthorTruth>,
    pub totals: Option<CorpusTotals>,
}

impl GroundTruth {
    pub fn from_ndjson(text: &str) -> Result<Self, serde_json::Error> {
        let mut gt = GroundTruth::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                TruthRecord::Corpus { totals, .. } => gt.totals = Some(totals),
                TruthRecord::Post(p) => gt.posts.push(p),
                TruthRecord::Author(a) => gt.authors.push(a),
            }
        }
        Ok(gt)
    }
}

// ---------------------------------------------------------------------------
// Output lines

#[derive(Serialize)]
struct PostLine<'a> {
    author: &'a str,
    created_utc: i64,
    id: &'a str,
    name: String,
    num_comments: usize,
    score: i64,
    title: &'a str,
}

#[derive(Serialize)]
struct CommentLine<'a> {
    author: &'a str,
    body: &'a str,
    created_utc: i64,
    id: &'a str,
    link_id: &'a str,
    name: String,
    parent_id: String,
    score: i64,
}

const ID_WIDTH: usize = 7;
const COMMENT_ID_BASE: u64 = 10_000_000_000;

fn base36(mut v: u64) -> String {
    let digits = b"0123456789abcdefghijklmnopqrstuvwxyz";
    let mut buf = [b'0'; ID_WIDTH];
    for slot in buf.iter_mut().rev() {
        *slot = digits[(v % 36) as usize];
        v /= 36;
    }
    String::from_utf8(buf.to_vec()).expect("ascii")
}

const FILLER: &str = "lorem ipsum dolor sit amet, consectetur adipiscing élit sed do eiusmod tempor ";

fn body_of(len: usize, out: &mut String) {
    out.clear();
    out.extend(FILLER.chars().cycle().take(len));
}

// ---------------------------------------------------------------------------
// Generation

/// Receives generated lines. Implemented for in-memory buffers and files.
pub trait CorpusSink {
    fn post_line(&mut self, line: &[u8]) -> io::Result<()>;
    fn comment_line(&mut self, line: &[u8]) -> io::Result<()>;
    fn truth(&mut self, record: &TruthRecord) -> io::Result<()>;
}

/// Writers for the three output streams.
pub struct WriterSink<P: Write, C: Write, T: Write> {
    pub posts: P,
    pub comments: C,
    pub truth: T,
}

impl<P: Write, C: Write, T: Write> CorpusSink for WriterSink<P, C, T> {
    fn post_line(&mut self, line: &[u8]) -> io::Result<()> {
        self.posts.write_all(line)?;
        self.posts.write_all(b"\n")
    }

    fn comment_line(&mut self, line: &[u8]) -> io::Result<()> {
        self.comments.write_all(line)?;
        self.comments.write_all(b"\n")
    }

    fn truth(&mut self, record: &TruthRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.truth, record)?;
        self.truth.write_all(b"\n")
    }
}

/// Everything a generation run produced, held in memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryCorpus {
    pub posts: Vec<u8>,
    pub comments: Vec<u8>,
    pub truth: GroundTruth,
}

impl CorpusSink for MemoryCorpus {
    fn post_line(&mut self, line: &[u8]) -> io::Result<()> {
        self.posts.extend_from_slice(line);
        self.posts.push(b'\n');
        Ok(())
    }

    fn comment_line(&mut self, line: &[u8]) -> io::Result<()> {
        self.comments.extend_from_slice(line);
        self.comments.push(b'\n');
        Ok(())
    }

    fn truth(&mut self, record: &TruthRecord) -> io::Result<()> {
        match record {
            TruthRecord::Corpus { totals, .. } => self.truth.totals = Some(totals.clone()),
            TruthRecord::Post(p) => self.truth.posts.push(p.clone()),
            TruthRecord::Author(a) => self.truth.authors.push(a.clone()),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum First {
    Fast(CyborgKind),
    NotFast,
}

#[derive(Debug, Clone)]
struct Plan {
    k: usize,
    evolution: Option<EvolutionKind>,
    hog_distinct: Option<bool>,
    first: First,
    mayfly: bool,
    deleted_author: bool,
    successful: bool,
}

impl Plan {
    /// The post author must write at least one comment on this post.
    fn author_comments(&self) -> bool {
        self.k > 0
            && (matches!(self.first, First::Fast(_))
                || !self.successful
                || self.hog_distinct == Some(false))
    }
}

struct Authors {
    names: Vec<String>,
    /// Indices allowed to post.
    posters: Vec<usize>,
    /// Indices allowed to post and comment.
    both: Vec<usize>,
    /// Indices allowed to comment.
    commenters: Vec<usize>,
}

impl Authors {
    fn new(spec: &CorpusSpec) -> Self {
        let n = spec.n_authors;
        let producers = exact_count(spec.fraction_producers_only, n);
        let consumers = exact_count(spec.fraction_consumers_only, n).min(n - producers - 1);
        let names = (0..n).map(|i| format!("user{i:06}")).collect();
        let both: Vec<usize> = (producers + consumers..n).collect();
        let posters = (0..producers).chain(both.iter().copied()).collect();
        let commenters = (producers..producers + consumers).chain(both.iter().copied()).collect();
        Authors { names, posters, both, commenters }
    }
}

#[derive(Default)]
struct Tally {
    posts: u64,
    comments: u64,
    received: u64,
    on_others: u64,
}

fn choose(rng: &mut ChaCha8Rng, from: &[usize], k: usize) -> Vec<usize> {
    let mut v = from.to_vec();
    v.shuffle(rng);
    v.truncate(k);
    v
}

fn plan_posts(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Plan>, SynthError> {
    let n = spec.n_posts;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let zero = exact_count(spec.fraction_zero_comments, n);
    if zero + spec.popular_posts > n {
        return Err(SynthError::Inconsistent("zero-comment and popular posts exceed n_posts".into()));
    }
    let mut ks = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        ks[i] = if pos < zero {
            0
        } else if pos < zero + spec.popular_posts {
            rng.random_range(spec.popular_comments_min..=spec.popular_comments_max)
        } else {
            match spec.comment_law {
                CommentLaw::Fixed(k) => k,
                CommentLaw::Pareto { alpha, xmin } => loop {
                    let x = pareto_from_uniform(1.0 - rng.random::<f64>(), alpha, xmin).floor();
                    if x <= spec.law_max_comments as f64 {
                        break x as usize;
                    }
                },
            }
        };
    }

    let mut plans: Vec<Plan> = ks
        .iter()
        .map(|&k| Plan {
            k,
            evolution: None,
            hog_distinct: None,
            first: First::NotFast,
            mayfly: false,
            deleted_author: false,
            successful: false,
        })
        .collect();

    let commented: Vec<usize> = (0..n).filter(|&i| ks[i] > 0).collect();
    let popular: Vec<usize> = (0..n).filter(|&i| ks[i] > POPULAR_ABOVE).collect();
    let eligible: Vec<usize> = (0..n).filter(|&i| ks[i] >= LIMELIGHT_FROM).collect();

    // evolution classes among popular posts
    let evo = apportion(&[spec.fraction_early, spec.fraction_steady, spec.fraction_late], popular.len());
    let mut shuffled = popular.clone();
    shuffled.shuffle(rng);
    let kinds = [EvolutionKind::EarlyBloomer, EvolutionKind::Steady, EvolutionKind::LateBloomer];
    let mut it = shuffled.into_iter();
    for (kind, count) in kinds.iter().zip(evo) {
        for i in it.by_ref().take(count) {
            plans[i].evolution = Some(*kind);
        }
    }

    // hog authorship among limelight-eligible posts
    let distinct: Vec<usize> = choose(rng, &eligible, exact_count(spec.fraction_hog_distinct, eligible.len()));
    for &i in &eligible {
        plans[i].hog_distinct = Some(false);
    }
    for i in distinct {
        plans[i].hog_distinct = Some(true);
    }

    // fast first comments stay off limelight-eligible posts
    let small: Vec<usize> = commented.iter().copied().filter(|&i| ks[i] < LIMELIGHT_FROM).collect();
    let n_cyborg = exact_count(spec.fraction_cyborg, commented.len());
    let n_short = exact_count(spec.fraction_fast_short, commented.len());
    if n_cyborg + n_short > small.len() {
        return Err(SynthError::Inconsistent(
            "not enough non-popular commented posts for the fast-comment fractions".into(),
        ));
    }
    let fast = choose(rng, &small, n_cyborg + n_short);
    for (pos, &i) in fast.iter().enumerate() {
        plans[i].first = First::Fast(if pos < n_cyborg {
            CyborgKind::CyborgLike
        } else {
            CyborgKind::FastSameAuthorShort
        });
    }

    // mayfly: single fast comments force it, steady and late bloomers forbid it
    let n_mayfly = exact_count(spec.fraction_mayfly, commented.len());
    let forced: Vec<usize> = commented
        .iter()
        .copied()
        .filter(|&i| ks[i] == 1 && matches!(plans[i].first, First::Fast(_)))
        .collect();
    let optional: Vec<usize> = commented
        .iter()
        .copied()
        .filter(|&i| {
            !(ks[i] == 1 && matches!(plans[i].first, First::Fast(_)))
                && !matches!(plans[i].evolution, Some(EvolutionKind::Steady | EvolutionKind::LateBloomer))
        })
        .collect();
    if n_mayfly < forced.len() || n_mayfly > forced.len() + optional.len() {
        return Err(SynthError::Inconsistent(format!(
            "fraction_mayfly needs {n_mayfly} posts; feasible range is {}..={}",
            forced.len(),
            forced.len() + optional.len()
        )));
    }
    for i in forced.iter().copied().chain(choose(rng, &optional, n_mayfly - forced.len())) {
        plans[i].mayfly = true;
    }

    // deleted post authors: never fast, never limelight-eligible
    let n_deleted = exact_count(spec.fraction_deleted_posts, n);
    let deletable: Vec<usize> = (0..n)
        .filter(|&i| ks[i] < LIMELIGHT_FROM && plans[i].first == First::NotFast)
        .collect();
    if n_deleted > deletable.len() {
        return Err(SynthError::Inconsistent("too many deleted-author posts".into()));
    }
    for i in choose(rng, &deletable, n_deleted) {
        plans[i].deleted_author = true;
    }

    // success: eligible and commented deleted-author posts must succeed
    let n_success = exact_count(spec.fraction_successful, n);
    let must: Vec<usize> = (0..n)
        .filter(|&i| ks[i] >= LIMELIGHT_FROM || (plans[i].deleted_author && ks[i] > 0))
        .collect();
    let may: Vec<usize> = (0..n)
        .filter(|&i| !(ks[i] >= LIMELIGHT_FROM || (plans[i].deleted_author && ks[i] > 0)))
        .collect();
    if n_success < must.len() {
        return Err(SynthError::Inconsistent(format!(
            "fraction_successful gives {n_success} posts but {} must succeed",
            must.len()
        )));
    }
    for i in must.iter().copied().chain(choose(rng, &may, n_success - must.len())) {
        plans[i].successful = true;
    }
    Ok(plans)
}

/// Sorted comment offsets for a planned post plus its planted t75.
fn plan_offsets(p: &Plan, rng: &mut ChaCha8Rng) -> (Vec<i64>, Option<i64>) {
    let k = p.k;
    if k == 0 {
        return (Vec::new(), None);
    }
    let author_first = matches!(p.first, First::Fast(_)) || !p.successful || p.hog_distinct == Some(false);
    let latency = match p.first {
        First::Fast(_) => rng.random_range(0..=FAST_LATENCY),
        // a same-author first comment must stay slow
        First::NotFast if author_first => rng.random_range(FAST_LATENCY + 1..=3600),
        First::NotFast => rng.random_range(0..=3600),
    };
    let late_age = |rng: &mut ChaCha8Rng, from: i64| rng.random_range(from.max(DAY)..=55 * DAY);

    let (age, t75) = match p.evolution {
        Some(kind) => {
            let t75 = match kind {
                EvolutionKind::EarlyBloomer if p.mayfly => rng.random_range(latency..DAY),
                EvolutionKind::EarlyBloomer => rng.random_range(latency..=DAY),
                EvolutionKind::Steady => rng.random_range(DAY + 1..=30 * DAY),
                EvolutionKind::LateBloomer => rng.random_range(30 * DAY + 1..=50 * DAY),
            };
            let age = if p.mayfly { rng.random_range(t75..DAY) } else { late_age(rng, t75) };
            (age, Some(t75))
        }
        None => {
            let age = if p.mayfly { rng.random_range(latency..DAY) } else { late_age(rng, latency) };
            (age, None)
        }
    };
    if k == 1 {
        // the single comment fixes both latency and age
        let only = if matches!(p.first, First::Fast(_)) { latency } else { age };
        return (vec![only], t75);
    }
    let mut offsets = Vec::with_capacity(k);
    offsets.push(latency);
    match t75 {
        Some(t) => {
            let target = bloomer_target(BLOOMER_FRACTION, k);
            let mut head: Vec<i64> = (1..target - 1).map(|_| rng.random_range(latency..=t)).collect();
            head.sort_unstable();
            offsets.extend(head);
            offsets.push(t);
            let mut tail: Vec<i64> = (target..k - 1).map(|_| rng.random_range(t..=age)).collect();
            tail.sort_unstable();
            offsets.extend(tail);
        }
        None => {
            let mut mid: Vec<i64> = (1..k - 1).map(|_| rng.random_range(latency..=age)).collect();
            mid.sort_unstable();
            offsets.extend(mid);
        }
    }
    offsets.push(age);
    (offsets, t75)
}

/// Parent (as a comment position, or `None` for the post) of each comment
/// plus the planted hog branch size for eligible posts.
fn plan_structure(p: &Plan, spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
    let k = p.k;
    let mut parents: Vec<Option<usize>> = Vec::with_capacity(k);
    if k == 0 {
        return parents;
    }
    if p.hog_distinct.is_none() {
        parents.push(None);
        for i in 1..k {
            if rng.random_bool(0.4) {
                parents.push(None);
            } else {
                parents.push(Some(rng.random_range(0..i)));
            }
        }
        return parents;
    }
    let s = rng.random_range(spec.limelight_min_score..=spec.limelight_max_score);
    let hog = ((s * k as f64).round() as usize).clamp(2, k);
    // other branches stay strictly smaller than the hog
    let mut labels: Vec<usize> = vec![0; hog - 1];
    let mut rest = k - hog;
    let mut branch = 1;
    while rest > 0 {
        let size = rng.random_range(1..=rest.min(hog - 1));
        labels.extend(std::iter::repeat_n(branch, size));
        rest -= size;
        branch += 1;
    }
    labels.shuffle(rng);
    labels.insert(0, 0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); branch];
    for (pos, &b) in labels.iter().enumerate() {
        let m = &mut members[b];
        parents.push(if m.is_empty() { None } else { Some(m[rng.random_range(0..m.len())]) });
        m.push(pos);
    }
    parents
}

/// Runs the generator, streaming everything into `sink`.
pub fn generate_corpus<S: CorpusSink>(spec: &CorpusSpec, sink: &mut S) -> Result<CorpusTotals, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let plans = plan_posts(spec, &mut rng)?;
    let authors = Authors::new(spec);
    let mut tallies: Vec<Tally> = (0..authors.names.len()).map(|_| Tally::default()).collect();

    let mut totals = CorpusTotals {
        posts: plans.len(),
        comments: 0,
        commented_posts: 0,
        popular_posts: 0,
        limelight_eligible_posts: 0,
        mayfly_posts: 0,
        cyborg_like_posts: 0,
        fast_short_posts: 0,
        successful_posts: 0,
        early_bloomers: 0,
        steady_posts: 0,
        late_bloomers: 0,
        hog_distinct_posts: 0,
    };
    let latest_start = spec.period_end - 61 * DAY;
    let mut next_comment: u64 = COMMENT_ID_BASE;
    let mut line: Vec<u8> = Vec::with_capacity(512);
    let mut body = String::new();

    for (pi, plan) in plans.iter().enumerate() {
        let post_id = base36(pi as u64);
        let post_name = format!("t3_{post_id}");
        let author_idx = if plan.deleted_author {
            None
        } else if plan.author_comments() {
            Some(authors.both[rng.random_range(0..authors.both.len())])
        } else {
            Some(authors.posters[rng.random_range(0..authors.posters.len())])
        };
        let post_author: &str = author_idx.map_or(DELETED_AUTHOR, |i| authors.names[i].as_str());
        let created = rng.random_range(spec.period_start..latest_start);
        let score = if plan.successful { rng.random_range(2..=60) } else { 1 };

        line.clear();
        serde_json::to_writer(
            &mut line,
            &PostLine {
                author: post_author,
                created_utc: created,
                id: &post_id,
                name: post_name.clone(),
                num_comments: plan.k,
                score,
                title: "synthetic post",
            },
        )
        .map_err(io::Error::from)?;
        sink.post_line(&line)?;
        if let Some(a) = author_idx {
            tallies[a].posts += 1;
        }

        let (offsets, t75) = plan_offsets(plan, &mut rng);
        let parents = plan_structure(plan, spec, &mut rng);
        let ids: Vec<String> = (0..plan.k)
            .map(|_| {
                next_comment += 1;
                base36(next_comment)
            })
            .collect();

        // authors: None is the post author, Some(None) deleted, Some(Some(i)) another user
        let mut comment_authors: Vec<Option<Option<usize>>> = Vec::with_capacity(plan.k);
        for pos in 0..plan.k {
            let by_post_author = if !plan.successful {
                true
            } else if pos == 0 {
                matches!(plan.first, First::Fast(_)) || plan.hog_distinct == Some(false)
            } else {
                !plan.deleted_author && rng.random_bool(0.15) && author_idx.is_some_and(|a| authors.both.contains(&a))
            };
            if by_post_author && author_idx.is_some() {
                comment_authors.push(None);
            } else if rng.random_bool(spec.fraction_deleted_comments) {
                comment_authors.push(Some(None));
            } else {
                let other = loop {
                    let c = authors.commenters[rng.random_range(0..authors.commenters.len())];
                    if Some(c) != author_idx {
                        break c;
                    }
                };
                comment_authors.push(Some(Some(other)));
            }
        }

        let mut effective = 0usize;
        let mut branch_of: Vec<usize> = Vec::with_capacity(plan.k);
        let mut branch_sizes: Vec<usize> = Vec::new();
        for pos in 0..plan.k {
            let author: &str = match comment_authors[pos] {
                None => post_author,
                Some(None) => DELETED_AUTHOR,
                Some(Some(i)) => authors.names[i].as_str(),
            };
            match comment_authors[pos] {
                None => {
                    tallies[author_idx.expect("real post author")].comments += 1;
                }
                Some(other) => {
                    effective += 1;
                    if let Some(o) = other {
                        tallies[o].comments += 1;
                        tallies[o].on_others += 1;
                    }
                    if let Some(a) = author_idx {
                        tallies[a].received += 1;
                    }
                }
            }
            let len = if pos == 0 {
                match plan.first {
                    First::Fast(CyborgKind::CyborgLike) => rng.random_range(CYBORG_CHARS + 1..=400),
                    First::Fast(_) => rng.random_range(1..=CYBORG_CHARS),
                    First::NotFast => rng.random_range(1..=80),
                }
            } else {
                rng.random_range(1..=60)
            };
            if pos > 0 && rng.random_bool(spec.fraction_removed_comments) {
                body.clear();
                body.push_str(crate::ingest::REMOVED_BODY);
            } else {
                body_of(len, &mut body);
            }
            let parent_name = match parents[pos] {
                None => {
                    branch_of.push(branch_sizes.len());
                    branch_sizes.push(1);
                    post_name.clone()
                }
                Some(pp) => {
                    let b = branch_of[pp];
                    branch_of.push(b);
                    branch_sizes[b] += 1;
                    format!("t1_{}", ids[pp])
                }
            };
            line.clear();
            serde_json::to_writer(
                &mut line,
                &CommentLine {
                    author,
                    body: &body,
                    created_utc: created + offsets[pos],
                    id: &ids[pos],
                    link_id: &post_name,
                    name: format!("t1_{}", ids[pos]),
                    parent_id: parent_name,
                    score: rng.random_range(-3..=40),
                },
            )
            .map_err(io::Error::from)?;
            sink.comment_line(&line)?;
        }

        let limelight_score = (!branch_sizes.is_empty()).then(|| {
            let max = *branch_sizes.iter().max().expect("nonempty");
            max as f64 / plan.k as f64
        });
        let cyborg = (plan.k > 0).then_some(match plan.first {
            First::Fast(kind) => kind,
            First::NotFast => CyborgKind::NotFastSameAuthor,
        });
        let truth = PostTruth {
            post_id: post_id.clone(),
            author: post_author.to_string(),
            n_comments: plan.k,
            age_seconds: offsets.last().copied(),
            effective_comments: effective,
            mayfly: (plan.k > 0).then_some(plan.mayfly),
            cyborg,
            successful: plan.successful,
            evolution: plan.evolution,
            t75_seconds: t75,
            limelight_score,
            hog_distinct: plan.hog_distinct,
        };
        sink.truth(&TruthRecord::Post(truth))?;

        totals.comments += plan.k;
        totals.commented_posts += usize::from(plan.k > 0);
        totals.popular_posts += usize::from(plan.k > POPULAR_ABOVE);
        totals.limelight_eligible_posts += usize::from(plan.hog_distinct.is_some());
        totals.mayfly_posts += usize::from(plan.k > 0 && plan.mayfly);
        totals.cyborg_like_posts += usize::from(plan.first == First::Fast(CyborgKind::CyborgLike));
        totals.fast_short_posts +=
            usize::from(plan.first == First::Fast(CyborgKind::FastSameAuthorShort));
        totals.successful_posts += usize::from(plan.successful);
        match plan.evolution {
            Some(EvolutionKind::EarlyBloomer) => totals.early_bloomers += 1,
            Some(EvolutionKind::Steady) => totals.steady_posts += 1,
            Some(EvolutionKind::LateBloomer) => totals.late_bloomers += 1,
            None => {}
        }
        totals.hog_distinct_posts += usize::from(plan.hog_distinct == Some(true));
    }

    for (i, t) in tallies.iter().enumerate() {
        if t.posts + t.comments == 0 {
            continue;
        }
        sink.truth(&TruthRecord::Author(AuthorTruth {
            author: authors.names[i].clone(),
            posts_created: t.posts,
            comments_made: t.comments,
            effective_comments_received: t.received,
            comments_on_others: t.on_others,
            ratio: (t.posts > 0).then(|| t.received as f64 / t.posts as f64),
        }))?;
    }
    sink.truth(&TruthRecord::Corpus { spec: spec.clone(), totals: totals.clone() })?;
    Ok(totals)
}

pub const POSTS_FILE: &str = "posts.ndjson";
pub const COMMENTS_FILE: &str = "comments.ndjson";
pub const TRUTH_FILE: &str = "ground_truth.ndjson";

/// Writes `posts.ndjson`, `comments.ndjson` and `ground_truth.ndjson`
/// into `dir`.
pub fn generate_corpus_to_dir(spec: &CorpusSpec, dir: &Path) -> Result<CorpusTotals, SynthError> {
    fs::create_dir_all(dir)?;
    let open = |name: &str| -> io::Result<BufWriter<File>> {
        Ok(BufWriter::with_capacity(1 << 20, File::create(dir.join(name))?))
    };
    let mut sink = WriterSink {
        posts: open(POSTS_FILE)?,
        comments: open(COMMENTS_FILE)?,
        truth: open(TRUTH_FILE)?,
    };
    let totals = generate_corpus(spec, &mut sink)?;
    sink.posts.flush()?;
    sink.comments.flush()?;
    sink.truth.flush()?;
    Ok(totals)
}

pub fn generate_corpus_in_memory(spec: &CorpusSpec) -> Result<MemoryCorpus, SynthError> {
    let mut sink = MemoryCorpus::default();
    generate_corpus(spec, &mut sink)?;
    Ok(sink)
}

/// Per-author truth keyed by handle.
pub fn author_truth_map(gt: &GroundTruth) -> HashMap<&str, &AuthorTruth> {
    gt.authors.iter().map(|a| (a.author.as_str(), a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cdf() {
        assert_eq!(pareto_from_uniform(0.25, 2.0, 1.0), 4.0);
        assert_eq!(pareto_from_uniform(1.0, 2.5, 3.0), 3.0);
        assert!(sample_pareto(1.0, 1.0, 10, 1).is_err());
        assert!(sample_pareto(2.0, 0.0, 10, 1).is_err());
        assert!(sample_pareto(2.0, 1.0, 0, 1).is_err());
        let a = sample_pareto(2.5, 1.0, 100, 42).unwrap();
        assert_eq!(a, sample_pareto(2.5, 1.0, 100, 42).unwrap());
        assert!(a.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn spec_file_parsing() {
        let spec = CorpusSpec::parse(
            "# test\nseed = 7\nn_posts=1000\ncomment_law = pareto(2.5, 1)\nfraction_mayfly = 0.8 # inline\n",
        )
        .unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.comment_law, CommentLaw::Pareto { alpha: 2.5, xmin: 1.0 });
        assert!(CorpusSpec::parse("bogus = 1").is_err());
        assert!(CorpusSpec::parse("seed").is_err());
        assert!(CorpusSpec::parse("fraction_early = 0.9").is_err());
        assert!(matches!(
            CorpusSpec::parse("comment_law = fixed(3)").unwrap().comment_law,
            CommentLaw::Fixed(3)
        ));
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(&[0.5, 0.3, 0.2], 100), vec![50, 30, 20]);
        assert_eq!(apportion(&[0.5, 0.3, 0.2], 7).iter().sum::<usize>(), 7);
        assert_eq!(apportion(&[1.0 / 3.0; 3], 10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn planted_mayfly_count() {
        let spec = CorpusSpec { seed: 7, n_posts: 1000, fraction_mayfly: 0.8, ..Default::default() };
        let c = generate_corpus_in_memory(&spec).unwrap();
        let mayfly = c.truth.posts.iter().filter(|p| p.age_seconds.is_some_and(|a| a < DAY)).count();
        assert_eq!(mayfly, 800);
        assert_eq!(c.truth.posts.iter().filter(|p| p.mayfly == Some(true)).count(), 800);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = CorpusSpec { seed: 3, n_posts: 300, popular_posts: 2, ..Default::default() };
        let a = generate_corpus_in_memory(&spec).unwrap();
        let b = generate_corpus_in_memory(&spec).unwrap();
        assert_eq!(a.posts, b.posts);
        assert_eq!(a.comments, b.comments);
        assert_eq!(a.truth, b.truth);
        let other = generate_corpus_in_memory(&CorpusSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a.comments, other.comments);
    }

    #[test]
    fn inconsistent_specs_fail() {
        // all commented posts fast with single comments force mayfly
        let spec = CorpusSpec {
            comment_law: CommentLaw::Fixed(1),
            fraction_cyborg: 0.5,
            fraction_mayfly: 0.1,
            ..Default::default()
        };
        assert!(matches!(generate_corpus_in_memory(&spec), Err(SynthError::Inconsistent(_))));
        let spec = CorpusSpec { popular_posts: 10, n_posts: 10, fraction_successful: 0.5, ..Default::default() };
        assert!(matches!(generate_corpus_in_memory(&spec), Err(SynthError::Inconsistent(_))));
        let spec = CorpusSpec { fraction_late: 0.5, ..Default::default() };
        assert!(matches!(spec.validate(), Err(SynthError::Inconsistent(_))));
    }

    #[test]
    fn timestamps_respect_order_and_period() {
        let spec = CorpusSpec { n_posts: 200, popular_posts: 3, ..Default::default() };
        let c = generate_corpus_in_memory(&spec).unwrap();
        let mut created: HashMap<String, i64> = HashMap::new();
        for l in c.posts.split(|&b| b == b'\n').filter(|l| !l.is_empty()) {
            let v: serde_json::Value = serde_json::from_slice(l).unwrap();
            created.insert(v["name"].as_str().unwrap().into(), v["created_utc"].as_i64().unwrap());
        }
        for l in c.comments.split(|&b| b == b'\n').filter(|l| !l.is_empty()) {
            let v: serde_json::Value = serde_json::from_slice(l).unwrap();
            let t = v["created_utc"].as_i64().unwrap();
            let p = created[v["link_id"].as_str().unwrap()];
            assert!(t >= p);
            assert!(t < spec.period_end && p >= spec.period_start);
        }
    }

    #[test]
    fn base36_is_fixed_width_and_ordered() {
        assert_eq!(base36(0), "0000000");
        assert_eq!(base36(35), "000000z");
        assert!(base36(COMMENT_ID_BASE) > base36(COMMENT_ID_BASE - 1));
    }
}
