//! Per-post behavioral classes: short lifetimes, cyborg-like first comments,
//! success at drawing outside reactions, and comment-accumulation shape.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thread::PostMetrics;

pub const DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessMode {
    CommentsOnly,
    /// An effective comment, or a score other than the submitter's default 1.
    CommentsOrScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub mayfly_threshold_s: i64,
    pub cyborg_latency_s: i64,
    /// Whether a latency equal to `cyborg_latency_s` counts as fast.
    pub cyborg_latency_inclusive: bool,
    /// First comment must be strictly longer than this, in characters.
    pub cyborg_min_chars: usize,
    pub bloomer_fraction: f64,
    pub early_cutoff_s: i64,
    pub late_cutoff_s: i64,
    /// Posts strictly above this many comments count as popular.
    pub popular_min_comments: usize,
    pub success_mode: SuccessMode,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            mayfly_threshold_s: DAY,
            cyborg_latency_s: 6,
            cyborg_latency_inclusive: true,
            cyborg_min_chars: 100,
            bloomer_fraction: 0.75,
            early_cutoff_s: DAY,
            late_cutoff_s: 30 * DAY,
            popular_min_comments: 500,
            success_mode: SuccessMode::CommentsOrScore,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("invalid classifier config: {0}")]
    InvalidConfig(&'static str),
    #[error("post has no comments")]
    NoComments,
    #[error("post has {comments} comments; popularity needs more than {threshold}")]
    NotPopular { comments: usize, threshold: usize },
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.mayfly_threshold_s <= 0 || self.cyborg_latency_s <= 0 {
            return Err(ClassifyError::InvalidConfig("thresholds must be positive"));
        }
        if self.cyborg_min_chars == 0 || self.popular_min_comments == 0 {
            return Err(ClassifyError::InvalidConfig("thresholds must be positive"));
        }
        if self.early_cutoff_s <= 0 || self.early_cutoff_s >= self.late_cutoff_s {
            return Err(ClassifyError::InvalidConfig("need 0 < early cutoff < late cutoff"));
        }
        if !(self.bloomer_fraction > 0.0 && self.bloomer_fraction < 1.0) {
            return Err(ClassifyError::InvalidConfig("bloomer fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn is_fast(&self, latency_s: i64) -> bool {
        if self.cyborg_latency_inclusive {
            latency_s <= self.cyborg_latency_s
        } else {
            latency_s < self.cyborg_latency_s
        }
    }
}

/// `Some(true)` when the post's activity ended within the threshold;
/// `None` for posts without comments.
pub fn classify_mayfly(m: &PostMetrics, cfg: &ClassifierConfig) -> Option<bool> {
    m.age_seconds.map(|age| age < cfg.mayfly_threshold_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CyborgKind {
    CyborgLike,
    FastSameAuthorShort,
    NotFastSameAuthor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyborgClass {
    pub kind: CyborgKind,
    pub successful: bool,
}

pub fn is_successful(m: &PostMetrics, post_score: Option<i64>, cfg: &ClassifierConfig) -> bool {
    let commented = m.effective_comments >= 1;
    match cfg.success_mode {
        SuccessMode::CommentsOnly => commented,
        SuccessMode::CommentsOrScore => commented || post_score.is_some_and(|s| s != 1),
    }
}

pub fn classify_cyborg(m: &PostMetrics, cfg: &ClassifierConfig) -> CyborgClass {
    let kind = match m.first_comment_latency_seconds {
        Some(lat) if cfg.is_fast(lat) && m.first_comment_same_author => {
            if m.first_comment_char_len > cfg.cyborg_min_chars {
                CyborgKind::CyborgLike
            } else {
                CyborgKind::FastSameAuthorShort
            }
        }
        _ => CyborgKind::NotFastSameAuthor,
    };
    CyborgClass { kind, successful: is_successful(m, m.score, cfg) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionKind {
    EarlyBloomer,
    Steady,
    LateBloomer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionClass {
    pub kind: EvolutionKind,
    pub t75_seconds: i64,
}

/// Number of comments a post must accumulate to reach `fraction` of `total`.
pub fn bloomer_target(fraction: f64, total: usize) -> usize {
    // the epsilon keeps exact products such as 0.7 * 10 from rounding up
    let t = (fraction * total as f64 - 1e-9).ceil();
    (t.max(1.0) as usize).min(total.max(1))
}

/// Classifies a popular post from its sorted comment offsets.
pub fn classify_evolution(
    offsets: &[i64],
    cfg: &ClassifierConfig,
) -> Result<EvolutionClass, ClassifyError> {
    if offsets.len() <= cfg.popular_min_comments {
        return Err(ClassifyError::NotPopular {
            comments: offsets.len(),
            threshold: cfg.popular_min_comments,
        });
    }
    debug_assert!(offsets.windows(2).all(|w| w[0] <= w[1]));
    let target = bloomer_target(cfg.bloomer_fraction, offsets.len());
    let t75 = offsets[target - 1];
    let kind = if t75 <= cfg.early_cutoff_s {
        EvolutionKind::EarlyBloomer
    } else if t75 > cfg.late_cutoff_s {
        EvolutionKind::LateBloomer
    } else {
        EvolutionKind::Steady
    };
    Ok(EvolutionClass { kind, t75_seconds: t75 })
}

/// Cyborg contingency over commented posts. The "non cyborg-like" cohort
/// is the fast, same-author, short-first-comment group.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyborgTable {
    pub commented_posts: u64,
    pub fast_first_comment: u64,
    pub fast_same_author: u64,
    pub cyborg_like: u64,
    pub successful_cyborg: u64,
    pub unsuccessful_cyborg: u64,
    pub successful_non_cyborg: u64,
    pub unsuccessful_non_cyborg: u64,
    pub successful_other: u64,
    pub unsuccessful_other: u64,
}

impl CyborgTable {
    pub fn observe(&mut self, m: &PostMetrics, cfg: &ClassifierConfig) -> Option<CyborgClass> {
        let lat = m.first_comment_latency_seconds?;
        self.commented_posts += 1;
        if cfg.is_fast(lat) {
            self.fast_first_comment += 1;
        }
        let c = classify_cyborg(m, cfg);
        let (succ, fail) = match c.kind {
            CyborgKind::CyborgLike => {
                self.fast_same_author += 1;
                self.cyborg_like += 1;
                (&mut self.successful_cyborg, &mut self.unsuccessful_cyborg)
            }
            CyborgKind::FastSameAuthorShort => {
                self.fast_same_author += 1;
                (&mut self.successful_non_cyborg, &mut self.unsuccessful_non_cyborg)
            }
            CyborgKind::NotFastSameAuthor => {
                (&mut self.successful_other, &mut self.unsuccessful_other)
            }
        };
        if c.successful {
            *succ += 1;
        } else {
            *fail += 1;
        }
        Some(c)
    }

    pub fn merge(&mut self, o: &CyborgTable) {
        self.commented_posts += o.commented_posts;
        self.fast_first_comment += o.fast_first_comment;
        self.fast_same_author += o.fast_same_author;
        self.cyborg_like += o.cyborg_like;
        self.successful_cyborg += o.successful_cyborg;
        self.unsuccessful_cyborg += o.unsuccessful_cyborg;
        self.successful_non_cyborg += o.successful_non_cyborg;
        self.unsuccessful_non_cyborg += o.unsuccessful_non_cyborg;
        self.successful_other += o.successful_other;
        self.unsuccessful_other += o.unsuccessful_other;
    }

    pub fn rows(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("commented_posts", self.commented_posts),
            ("posts_with_fast_first_comment", self.fast_first_comment),
            ("posts_with_same_author_fast_first_comment", self.fast_same_author),
            ("cyborg_like_posts", self.cyborg_like),
            ("successful_cyborg_like_posts", self.successful_cyborg),
            ("successful_non_cyborg_like_posts", self.successful_non_cyborg),
            ("unsuccessful_cyborg_like_posts", self.unsuccessful_cyborg),
            ("unsuccessful_non_cyborg_like_posts", self.unsuccessful_non_cyborg),
            ("successful_other_posts", self.successful_other),
            ("unsuccessful_other_posts", self.unsuccessful_other),
        ]
    }
}
