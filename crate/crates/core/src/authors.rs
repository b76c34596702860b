//! Per-author activity, interaction scores and categories.
//!
//! Comment events define directed author interactions: by default from the
//! commenter to the author of the post. Self-loops and the deleted sentinel
//! never form edges.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CommentRecord, PostRecord, DELETED_AUTHOR};
use crate::thread::{Link, ThreadTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeTarget {
    /// Commenter to the author of the post.
    #[default]
    PostAuthor,
    /// Commenter to the author of the parent comment (or post).
    ParentAuthor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorMetrics {
    pub author: String,
    pub posts_created: u64,
    pub comments_made: u64,
    /// A: comments received on own posts from other users.
    pub effective_comments_received: u64,
    /// B: own comments on other users' posts.
    pub comments_on_others: u64,
    /// Distinct authors with an edge into this author.
    pub in_degree: u64,
    /// Distinct authors this author has an edge to.
    pub out_degree: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Counters {
    posts: u64,
    comments: u64,
    received: u64,
    on_others: u64,
}

/// Activity of the deleted sentinel, which is not an identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletedActivity {
    pub posts: u64,
    pub comments_made: u64,
    /// Comments (by anyone) on posts whose author is deleted.
    pub comments_on_deleted_posts: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorError {
    #[error("author `{0}` has neither posts nor comments")]
    Inactive(String),
}

/// Mergeable author accumulator.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuthorSummary {
    counters: HashMap<Arc<str>, Counters>,
    edges: HashSet<(Arc<str>, Arc<str>)>,
    pub deleted: DeletedActivity,
    pub comments_on_own_posts: u64,
    pub skipped_disconnected: u64,
}

fn is_real(a: &str) -> bool {
    a != DELETED_AUTHOR
}

impl AuthorSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe_post(&mut self, author: &Arc<str>) {
        if is_real(author) {
            self.counters.entry(author.clone()).or_default().posts += 1;
        } else {
            self.deleted.posts += 1;
        }
    }

    /// Records one comment by `commenter` on a post by `post_author`
    /// (`None` when the post is unknown). `edge_target` is the author the
    /// interaction edge points to.
    pub fn observe_comment(
        &mut self,
        commenter: &Arc<str>,
        post_author: Option<&Arc<str>>,
        edge_target: Option<&Arc<str>>,
    ) {
        let Some(post_author) = post_author else {
            self.skipped_disconnected += 1;
            return;
        };
        let commenter_real = is_real(commenter);
        if commenter_real {
            self.counters.entry(commenter.clone()).or_default().comments += 1;
        } else {
            self.deleted.comments_made += 1;
        }
        if !is_real(post_author) {
            self.deleted.comments_on_deleted_posts += 1;
            if commenter_real {
                self.counters.get_mut(commenter).expect("inserted above").on_others += 1;
            }
        } else if commenter == post_author {
            self.comments_on_own_posts += 1;
        } else {
            self.counters.entry(post_author.clone()).or_default().received += 1;
            if commenter_real {
                self.counters.get_mut(commenter).expect("inserted above").on_others += 1;
            }
        }
        if let Some(target) = edge_target {
            if commenter_real && is_real(target) && commenter != target {
                self.edges.insert((commenter.clone(), target.clone()));
            }
        }
    }

    pub fn observe_tree(&mut self, tree: &ThreadTree, edge: EdgeTarget) {
        let post_author: Arc<str> = Arc::from(tree.post().author.as_str());
        self.observe_post(&post_author);
        let comments = tree.comments();
        for (i, c) in comments.iter().enumerate() {
            let target = match (edge, tree.link(i)) {
                (EdgeTarget::ParentAuthor, Link::Comment(p)) => &comments[p].author,
                _ => &post_author,
            };
            self.observe_comment(&c.author, Some(&post_author), Some(target));
        }
    }

    pub fn merge(self, other: AuthorSummary) -> AuthorSummary {
        let (mut big, small) = if self.counters.len() >= other.counters.len() {
            (self, other)
        } else {
            (other, self)
        };
        for (k, v) in small.counters {
            let e = big.counters.entry(k).or_default();
            e.posts += v.posts;
            e.comments += v.comments;
            e.received += v.received;
            e.on_others += v.on_others;
        }
        big.edges.extend(small.edges);
        big.deleted.posts += small.deleted.posts;
        big.deleted.comments_made += small.deleted.comments_made;
        big.deleted.comments_on_deleted_posts += small.deleted.comments_on_deleted_posts;
        big.comments_on_own_posts += small.comments_on_own_posts;
        big.skipped_disconnected += small.skipped_disconnected;
        big
    }

    pub fn author_count(&self) -> usize {
        self.counters.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Per-author metrics sorted by author handle.
    pub fn finalize(&self) -> Vec<AuthorMetrics> {
        let mut in_deg: HashMap<&str, u64> = HashMap::new();
        let mut out_deg: HashMap<&str, u64> = HashMap::new();
        for (from, to) in &self.edges {
            *out_deg.entry(from).or_default() += 1;
            *in_deg.entry(to).or_default() += 1;
        }
        let mut out: Vec<AuthorMetrics> = self
            .counters
            .iter()
            .map(|(a, c)| AuthorMetrics {
                author: a.to_string(),
                posts_created: c.posts,
                comments_made: c.comments,
                effective_comments_received: c.received,
                comments_on_others: c.on_others,
                in_degree: in_deg.get(&**a).copied().unwrap_or(0),
                out_degree: out_deg.get(&**a).copied().unwrap_or(0),
            })
            .collect();
        out.sort_by(|a, b| a.author.cmp(&b.author));
        out
    }
}

/// Accumulates author metrics from flat record lists. `post_authors` maps
/// post id to author; comments on posts missing from it are skipped.
pub fn accumulate_author_metrics(
    posts: &[PostRecord],
    comments: &[CommentRecord],
    post_authors: &HashMap<String, String>,
    edge: EdgeTarget,
) -> AuthorSummary {
    let mut s = AuthorSummary::new();
    for p in posts {
        s.observe_post(&Arc::from(p.author.as_str()));
    }
    let comment_authors: HashMap<(&str, &str), &str> = match edge {
        EdgeTarget::PostAuthor => HashMap::new(),
        EdgeTarget::ParentAuthor => comments
            .iter()
            .map(|c| ((c.link_id.as_str(), c.id.as_str()), c.author.as_str()))
            .collect(),
    };
    for c in comments {
        let commenter = Arc::<str>::from(c.author.as_str());
        let post_author = post_authors.get(&c.link_id).map(|a| Arc::<str>::from(a.as_str()));
        let target = match edge {
            EdgeTarget::PostAuthor => post_author.clone(),
            EdgeTarget::ParentAuthor => comment_authors
                .get(&(c.link_id.as_str(), c.parent_id.as_str()))
                .map(|a| Arc::<str>::from(*a))
                .or_else(|| post_author.clone()),
        };
        s.observe_comment(&commenter, post_author.as_ref(), target.as_ref());
    }
    s
}

/// `A / (A + B)`, undefined when both are zero.
pub fn interaction_score(received: u64, on_others: u64) -> Option<f64> {
    let total = received + on_others;
    (total > 0).then(|| received as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorCategory {
    ProducerOnly,
    ConsumerOnly,
    Both,
}

pub fn categorize_author(m: &AuthorMetrics) -> Result<AuthorCategory, AuthorError> {
    match (m.posts_created > 0, m.comments_made > 0) {
        (true, false) => Ok(AuthorCategory::ProducerOnly),
        (false, true) => Ok(AuthorCategory::ConsumerOnly),
        (true, true) => Ok(AuthorCategory::Both),
        (false, false) => Err(AuthorError::Inactive(m.author.clone())),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub total_active: u64,
    pub producers_only: u64,
    pub consumers_only: u64,
    pub both: u64,
}

pub fn category_counts(metrics: &[AuthorMetrics]) -> CategoryCounts {
    let mut c = CategoryCounts::default();
    for m in metrics {
        match categorize_author(m) {
            Ok(AuthorCategory::ProducerOnly) => c.producers_only += 1,
            Ok(AuthorCategory::ConsumerOnly) => c.consumers_only += 1,
            Ok(AuthorCategory::Both) => c.both += 1,
            Err(_) => continue,
        }
        c.total_active += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCurve {
    /// `(ratio, fraction of authors with ratio <= it)` per distinct ratio.
    pub points: Vec<(f64, f64)>,
    pub n_authors: u64,
    pub below_unity: f64,
    pub at_unity: f64,
    pub above_unity: f64,
}

/// Effective comments received per post, over authors with at least one post.
pub fn comments_per_post_curve(metrics: &[AuthorMetrics]) -> RatioCurve {
    let producers: Vec<&AuthorMetrics> = metrics.iter().filter(|m| m.posts_created > 0).collect();
    let n = producers.len() as u64;
    let (mut below, mut at, mut above) = (0u64, 0u64, 0u64);
    for m in &producers {
        match m.effective_comments_received.cmp(&m.posts_created) {
            std::cmp::Ordering::Less => below += 1,
            std::cmp::Ordering::Equal => at += 1,
            std::cmp::Ordering::Greater => above += 1,
        }
    }
    let mut ratios: Vec<f64> = producers
        .iter()
        .map(|m| m.effective_comments_received as f64 / m.posts_created as f64)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, r) in ratios.iter().enumerate() {
        let frac = (i + 1) as f64 / n as f64;
        match points.last_mut() {
            Some(last) if last.0 == *r => last.1 = frac,
            _ => points.push((*r, frac)),
        }
    }
    let frac = |k: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    RatioCurve {
        points,
        n_authors: n,
        below_unity: frac(below),
        at_unity: frac(at),
        above_unity: frac(above),
    }
}
