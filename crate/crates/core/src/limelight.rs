//! Limelight score: the share of a post's discussion held by its largest
//! first-level branch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::same_author;
use crate::thread::ThreadTree;

/// Posts with at least this many comments enter limelight reporting.
pub const DEFAULT_LIMELIGHT_MIN_COMMENTS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LimelightError {
    #[error("post has no first-level comments")]
    NoFirstLevel,
    #[error("no limelight results to summarize")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimelightResult {
    pub post_id: String,
    pub score: f64,
    pub hog_comment_id: String,
    pub hog_author: String,
    pub hog_author_is_post_author: bool,
    pub hog_branch_size: usize,
    pub branch_total: usize,
    pub n_first_level: usize,
}

/// Orphaned subtrees are left out of both numerator and denominator.
/// First-level comments are in canonical order, so the first maximum is
/// the earliest (then smallest-id) branch.
pub fn limelight_score(tree: &ThreadTree) -> Result<LimelightResult, LimelightError> {
    let sizes = tree.branch_sizes();
    let mut best: Option<(usize, usize)> = None;
    for (j, &s) in sizes.iter().enumerate() {
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((j, s));
        }
    }
    let (j, hog) = best.ok_or(LimelightError::NoFirstLevel)?;
    let total: usize = sizes.iter().sum();
    let root = &tree.comments()[tree.first_level()[j]];
    let post = tree.post();
    Ok(LimelightResult {
        post_id: post.id.clone(),
        score: hog as f64 / total as f64,
        hog_comment_id: root.id().to_string(),
        hog_author: root.author.to_string(),
        hog_author_is_post_author: same_author(&root.author, &post.author),
        hog_branch_size: hog,
        branch_total: total,
        n_first_level: sizes.len(),
    })
}

/// Fraction of posts whose hog comment was written by someone other than
/// the post author. A deleted author on either side counts as distinct.
pub fn hog_author_distinct_fraction(results: &[LimelightResult]) -> Result<f64, LimelightError> {
    if results.is_empty() {
        return Err(LimelightError::Empty);
    }
    let distinct = results.iter().filter(|r| !r.hog_author_is_post_author).count();
    Ok(distinct as f64 / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{PostRecord, DELETED_AUTHOR};
    use crate::thread::{build_thread, ThreadComment};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn post(author: &str) -> PostRecord {
        PostRecord {
            id: "P".into(),
            author: author.into(),
            created_utc: 1,
            declared_num_comments: 0,
            score: None,
            body_or_title: String::new(),
        }
    }

    fn c(id: &str, parent: &str, author: &str, t: i64) -> ThreadComment {
        ThreadComment::from_record_with_author(id, parent, Arc::from(author), t, "x")
    }

    fn result(distinct: bool) -> LimelightResult {
        LimelightResult {
            post_id: "p".into(),
            score: 1.0,
            hog_comment_id: "c".into(),
            hog_author: "a".into(),
            hog_author_is_post_author: !distinct,
            hog_branch_size: 1,
            branch_total: 1,
            n_first_level: 1,
        }
    }

    #[test]
    fn single_branch_scores_one() {
        let t = build_thread(
            post("op"),
            vec![c("a", "P", "x", 2), c("b", "a", "y", 3), c("d", "b", "z", 4)],
        );
        let r = limelight_score(&t).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.n_first_level, 1);
    }

    #[test]
    fn three_and_one() {
        let t = build_thread(
            post("op"),
            vec![
                c("a", "P", "x", 2),
                c("b", "a", "y", 3),
                c("d", "b", "z", 4),
                c("e", "P", "op", 5),
            ],
        );
        let r = limelight_score(&t).unwrap();
        assert_eq!(r.score, 0.75);
        assert_eq!(r.hog_comment_id, "a");
        assert_eq!(r.hog_author, "x");
        assert!(!r.hog_author_is_post_author);
    }

    #[test]
    fn ties_go_to_earliest_branch() {
        let t = build_thread(post("op"), vec![c("z", "P", "x", 2), c("a", "P", "op", 3)]);
        let r = limelight_score(&t).unwrap();
        assert_eq!(r.hog_comment_id, "z");
        assert_eq!(r.score, 0.5);
        let t = build_thread(post("op"), vec![c("z", "P", "x", 2), c("a", "P", "op", 2)]);
        assert_eq!(limelight_score(&t).unwrap().hog_comment_id, "a");
    }

    #[test]
    fn orphans_are_excluded() {
        let t = build_thread(
            post("op"),
            vec![c("a", "P", "x", 2), c("o", "lost", "y", 3), c("o2", "o", "y", 4)],
        );
        let r = limelight_score(&t).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.branch_total, 1);
        let only_orphans = build_thread(post("op"), vec![c("o", "lost", "y", 3)]);
        assert_eq!(limelight_score(&only_orphans), Err(LimelightError::NoFirstLevel));
        let empty = build_thread(post("op"), vec![]);
        assert_eq!(limelight_score(&empty), Err(LimelightError::NoFirstLevel));
    }

    #[test]
    fn deleted_hog_author_is_distinct() {
        let t = build_thread(post(DELETED_AUTHOR), vec![c("a", "P", DELETED_AUTHOR, 2)]);
        assert!(!limelight_score(&t).unwrap().hog_author_is_post_author);
    }

    #[test]
    fn distinct_fraction() {
        assert_eq!(hog_author_distinct_fraction(&[]), Err(LimelightError::Empty));
        let all_same = vec![result(false); 3];
        assert_eq!(hog_author_distinct_fraction(&all_same).unwrap(), 0.0);
        let mix = vec![result(true), result(true), result(false), result(true)];
        assert_eq!(hog_author_distinct_fraction(&mix).unwrap(), 0.75);
    }

    #[test]
    fn score_bounds_and_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = rng.random_range(1..80);
            let nodes: Vec<ThreadComment> = (0..n)
                .map(|i| {
                    let parent = if i == 0 || rng.random_bool(0.3) {
                        "P".to_string()
                    } else if rng.random_bool(0.05) {
                        "gone".to_string()
                    } else {
                        format!("k{}", rng.random_range(0..i))
                    };
                    c(&format!("k{i}"), &parent, "u", rng.random_range(1..50))
                })
                .collect();
            let mut shuffled = nodes.clone();
            shuffled.shuffle(&mut rng);
            let a = build_thread(post("op"), nodes);
            let b = build_thread(post("op"), shuffled);
            let ra = limelight_score(&a).unwrap();
            assert_eq!(ra, limelight_score(&b).unwrap());
            assert!(ra.score > 0.0 && ra.score <= 1.0);
            assert!(ra.score >= 1.0 / ra.n_first_level as f64);
            assert_eq!(ra.branch_total + a.orphaned_count(), n);
            assert_eq!(ra.score == 1.0, ra.n_first_level == 1);
        }
    }
}
