//! Discussion-tree reconstruction and per-post structural metrics.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ingest::{same_author, CommentRecord, PostRecord, REMOVED_BODY};

/// Compact comment kept in memory between ingestion and tree building.
/// Bodies are reduced to their character count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadComment {
    /// `id` immediately followed by `parent_id`, in one allocation.
    ids: Box<str>,
    id_len: u32,
    pub author: Arc<str>,
    pub created_utc: i64,
    /// Unicode scalar values in the body.
    pub char_len: u32,
    pub removed: bool,
}

impl ThreadComment {
    pub fn from_record(c: CommentRecord) -> Self {
        let author: Arc<str> = Arc::from(c.author);
        Self::from_record_with_author(&c.id, &c.parent_id, author, c.created_utc, &c.body)
    }

    pub fn from_record_with_author(
        id: &str,
        parent_id: &str,
        author: Arc<str>,
        created_utc: i64,
        body: &str,
    ) -> Self {
        let mut ids = String::with_capacity(id.len() + parent_id.len());
        ids.push_str(id);
        ids.push_str(parent_id);
        ThreadComment {
            ids: ids.into_boxed_str(),
            id_len: u32::try_from(id.len()).expect("comment id under 4 GiB"),
            author,
            created_utc,
            char_len: u32::try_from(body.chars().count()).unwrap_or(u32::MAX),
            removed: body == REMOVED_BODY,
        }
    }

    pub fn id(&self) -> &str {
        &self.ids[..self.id_len as usize]
    }

    pub fn parent_id(&self) -> &str {
        &self.ids[self.id_len as usize..]
    }
}

/// Where a comment hangs in its tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Post,
    /// Index of the parent in [`ThreadTree::comments`].
    Comment(usize),
    /// Parent unknown (missing, or the link closed a cycle). The comment
    /// roots a detached subtree attached at post level.
    Orphan,
}

/// One post with its comments in canonical order: by `created_utc`, ties by id.
#[derive(Debug, Clone)]
pub struct ThreadTree {
    post: PostRecord,
    comments: Vec<ThreadComment>,
    links: Vec<Link>,
    /// For each comment, the position in `first_level` of its branch root;
    /// `None` for comments inside an orphaned subtree.
    branch: Vec<Option<u32>>,
    first_level: Vec<usize>,
    orphans: Vec<usize>,
    clamped_offsets: usize,
}

fn canonical_order(a: &ThreadComment, b: &ThreadComment) -> std::cmp::Ordering {
    a.created_utc
        .cmp(&b.created_utc)
        .then_with(|| a.id().cmp(b.id()))
}

/// Builds the tree for `post`. Comments whose parent is neither the post
/// nor another comment of the thread become orphans; so does the earliest
/// member of any parent cycle.
pub fn build_thread(post: PostRecord, mut comments: Vec<ThreadComment>) -> ThreadTree {
    comments.sort_by(canonical_order);
    let n = comments.len();

    let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(n);
    for (i, c) in comments.iter().enumerate() {
        by_id.entry(c.id()).or_insert(i);
    }
    let mut links: Vec<Link> = comments
        .iter()
        .map(|c| {
            if c.parent_id() == post.id {
                Link::Post
            } else {
                match by_id.get(c.parent_id()) {
                    Some(&p) => Link::Comment(p),
                    None => Link::Orphan,
                }
            }
        })
        .collect();
    drop(by_id);

    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unseen,
        OnPath,
        Done(Option<usize>),
    }
    // resolved branch root (comment index) per node, found by walking up
    let mut state = vec![State::Unseen; n];
    let mut path: Vec<usize> = Vec::new();
    for start in 0..n {
        if state[start] != State::Unseen {
            continue;
        }
        path.clear();
        let mut cur = start;
        let root = loop {
            match state[cur] {
                State::Done(r) => break r,
                State::OnPath => {
                    // cycle: detach its earliest member
                    let pos = path.iter().position(|&p| p == cur).expect("node on path");
                    let breaker = *path[pos..].iter().min().expect("nonempty cycle");
                    links[breaker] = Link::Orphan;
                    break None;
                }
                State::Unseen => {}
            }
            state[cur] = State::OnPath;
            path.push(cur);
            match links[cur] {
                Link::Post => break Some(cur),
                Link::Orphan => break None,
                Link::Comment(p) => cur = p,
            }
        };
        for &p in &path {
            state[p] = State::Done(root);
        }
    }

    let first_level: Vec<usize> = (0..n).filter(|&i| links[i] == Link::Post).collect();
    let orphans: Vec<usize> = (0..n).filter(|&i| links[i] == Link::Orphan).collect();
    let mut slot = vec![u32::MAX; n];
    for (j, &i) in first_level.iter().enumerate() {
        slot[i] = j as u32;
    }
    let branch = state
        .iter()
        .map(|s| match s {
            State::Done(Some(r)) => Some(slot[*r]),
            _ => None,
        })
        .collect();
    let clamped_offsets = comments
        .iter()
        .filter(|c| c.created_utc < post.created_utc)
        .count();

    ThreadTree {
        post,
        comments,
        links,
        branch,
        first_level,
        orphans,
        clamped_offsets,
    }
}

/// Convenience wrapper over [`build_thread`] for full records.
pub fn build_thread_from_records(post: PostRecord, comments: Vec<CommentRecord>) -> ThreadTree {
    let nodes = comments.into_iter().map(ThreadComment::from_record).collect();
    build_thread(post, nodes)
}

/// Size of each first-level branch, in `first_level` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtreeSizes {
    pub branches: Vec<(Box<str>, usize)>,
    /// Comments in orphaned subtrees, roots included.
    pub orphaned: usize,
}

impl ThreadTree {
    pub fn post(&self) -> &PostRecord {
        &self.post
    }

    pub fn comments(&self) -> &[ThreadComment] {
        &self.comments
    }

    pub fn link(&self, i: usize) -> Link {
        self.links[i]
    }

    pub fn first_level(&self) -> &[usize] {
        &self.first_level
    }

    /// Roots of detached subtrees.
    pub fn orphans(&self) -> &[usize] {
        &self.orphans
    }

    pub fn orphaned_count(&self) -> usize {
        self.branch.iter().filter(|b| b.is_none()).count()
    }

    /// Comments created before their post; their offsets clamp to zero.
    pub fn clamped_offsets(&self) -> usize {
        self.clamped_offsets
    }

    /// First-level branch of comment `i`, as a position in `first_level`.
    pub fn branch_of(&self, i: usize) -> Option<usize> {
        self.branch[i].map(|b| b as usize)
    }

    pub fn branch_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.first_level.len()];
        for b in self.branch.iter().flatten() {
            sizes[*b as usize] += 1;
        }
        sizes
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.comments.len()];
        for (i, l) in self.links.iter().enumerate() {
            if let Link::Comment(p) = l {
                out[*p].push(i);
            }
        }
        out
    }
}

pub fn first_level_subtree_sizes(tree: &ThreadTree) -> SubtreeSizes {
    let sizes = tree.branch_sizes();
    SubtreeSizes {
        branches: tree
            .first_level
            .iter()
            .zip(sizes)
            .map(|(&i, s)| (Box::from(tree.comments[i].id()), s))
            .collect(),
        orphaned: tree.orphaned_count(),
    }
}

/// Seconds since post creation for every comment, nondecreasing.
pub fn comment_time_series(tree: &ThreadTree) -> Vec<i64> {
    let t0 = tree.post.created_utc;
    // canonical order is by timestamp, so clamped offsets stay sorted
    tree.comments
        .iter()
        .map(|c| (c.created_utc - t0).max(0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostMetrics {
    pub post_id: String,
    pub author: String,
    pub created_utc: i64,
    pub score: Option<i64>,
    /// Absent for posts without in-period comments.
    pub age_seconds: Option<i64>,
    pub total_comments: usize,
    pub effective_comments: usize,
    pub first_comment_latency_seconds: Option<i64>,
    pub first_comment_same_author: bool,
    pub first_comment_char_len: usize,
    pub orphaned_comments: usize,
    pub comment_offsets: Vec<i64>,
}

pub fn post_metrics(tree: &ThreadTree) -> PostMetrics {
    let post = &tree.post;
    let offsets = comment_time_series(tree);
    let effective = tree
        .comments
        .iter()
        .filter(|c| !same_author(&c.author, &post.author))
        .count();
    let first = tree.comments.first();
    PostMetrics {
        post_id: post.id.clone(),
        author: post.author.clone(),
        created_utc: post.created_utc,
        score: post.score,
        age_seconds: offsets.last().copied(),
        total_comments: tree.comments.len(),
        effective_comments: effective,
        first_comment_latency_seconds: offsets.first().copied(),
        first_comment_same_author: first.is_some_and(|c| same_author(&c.author, &post.author)),
        first_comment_char_len: first.map_or(0, |c| c.char_len as usize),
        orphaned_comments: tree.orphaned_count(),
        comment_offsets: offsets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DELETED_AUTHOR;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn post(author: &str, t: i64) -> PostRecord {
        PostRecord {
            id: "P".into(),
            author: author.into(),
            created_utc: t,
            declared_num_comments: 0,
            score: None,
            body_or_title: String::new(),
        }
    }

    fn c(id: &str, parent: &str, author: &str, t: i64) -> ThreadComment {
        ThreadComment::from_record_with_author(id, parent, Arc::from(author), t, "body")
    }

    #[test]
    fn two_comment_chain() {
        let t = build_thread(post("op", 0), vec![c("c2", "c1", "b", 2), c("c1", "P", "a", 1)]);
        assert_eq!(t.first_level(), &[0]);
        assert_eq!(t.comments()[0].id(), "c1");
        assert_eq!(t.link(1), Link::Comment(0));
        assert_eq!(t.children()[0], vec![1]);
        assert!(t.orphans().is_empty());
    }

    #[test]
    fn missing_parent_becomes_orphan() {
        let t = build_thread(post("op", 0), vec![c("c2", "missing", "b", 2)]);
        assert!(t.first_level().is_empty());
        assert_eq!(t.orphans(), &[0]);
        assert_eq!(t.link(0), Link::Orphan);
        let s = first_level_subtree_sizes(&t);
        assert!(s.branches.is_empty());
        assert_eq!(s.orphaned, 1);
    }

    #[test]
    fn orphan_descendants_are_orphaned() {
        let t = build_thread(
            post("op", 0),
            vec![
                c("a", "P", "x", 1),
                c("o", "gone", "x", 2),
                c("o2", "o", "y", 3),
                c("a2", "a", "y", 4),
            ],
        );
        let s = first_level_subtree_sizes(&t);
        assert_eq!(s.branches, vec![("a".into(), 2)]);
        assert_eq!(s.orphaned, 2);
        assert_eq!(t.orphans().len(), 1);
    }

    #[test]
    fn cycles_are_detached() {
        let t = build_thread(
            post("op", 0),
            vec![c("x", "y", "u", 5), c("y", "x", "u", 6), c("z", "y", "u", 7)],
        );
        // x is earliest in the cycle
        assert_eq!(t.link(0), Link::Orphan);
        assert_eq!(t.link(1), Link::Comment(0));
        assert_eq!(t.orphaned_count(), 3);
        assert!(t.first_level().is_empty());
    }

    #[test]
    fn empty_thread() {
        let t = build_thread(post("op", 0), vec![]);
        assert!(t.comments().is_empty());
        let m = post_metrics(&t);
        assert_eq!(m.age_seconds, None);
        assert_eq!(m.first_comment_latency_seconds, None);
        assert_eq!(m.total_comments, 0);
        assert!(!m.first_comment_same_author);
        assert!(comment_time_series(&t).is_empty());
    }

    #[test]
    fn age_and_latency() {
        let t = build_thread(
            post("op", 1000),
            vec![c("b", "P", "x", 1100), c("a", "P", "y", 1006)],
        );
        let m = post_metrics(&t);
        assert_eq!(m.age_seconds, Some(100));
        assert_eq!(m.first_comment_latency_seconds, Some(6));
        assert_eq!(m.comment_offsets, vec![6, 100]);
    }

    #[test]
    fn effective_comments_exclude_author() {
        let t = build_thread(
            post("u1", 0),
            vec![c("a", "P", "u1", 1), c("b", "P", "u2", 2)],
        );
        let m = post_metrics(&t);
        assert_eq!(m.effective_comments, 1);
        assert!(m.first_comment_same_author);
    }

    #[test]
    fn deleted_sentinel_never_matches() {
        let t = build_thread(post(DELETED_AUTHOR, 0), vec![c("a", "P", DELETED_AUTHOR, 1)]);
        let m = post_metrics(&t);
        assert_eq!(m.effective_comments, 1);
        assert!(!m.first_comment_same_author);
    }

    #[test]
    fn ties_break_by_id() {
        let t = build_thread(
            post("op", 0),
            vec![c("b", "P", "x", 5), c("a", "P", "op", 5)],
        );
        let m = post_metrics(&t);
        assert!(m.first_comment_same_author);
        assert_eq!(t.comments()[0].id(), "a");
    }

    #[test]
    fn early_comments_clamp_to_zero() {
        let t = build_thread(post("op", 100), vec![c("a", "P", "x", 90), c("b", "P", "x", 120)]);
        assert_eq!(t.clamped_offsets(), 1);
        assert_eq!(comment_time_series(&t), vec![0, 20]);
    }

    #[test]
    fn char_len_counts_scalars() {
        let n = ThreadComment::from_record_with_author("a", "P", Arc::from("x"), 1, "héé");
        assert_eq!(n.char_len, 3);
    }

    #[test]
    fn subtree_sizes_by_hand() {
        let t = build_thread(
            post("op", 0),
            vec![
                c("c1", "P", "a", 1),
                c("c2", "c1", "b", 2),
                c("c4", "c2", "b", 4),
                c("c3", "P", "a", 3),
            ],
        );
        let s = first_level_subtree_sizes(&t);
        assert_eq!(s.branches, vec![("c1".into(), 3), ("c3".into(), 1)]);
        let single = build_thread(post("op", 0), vec![c("c1", "P", "a", 1)]);
        assert_eq!(first_level_subtree_sizes(&single).branches, vec![("c1".into(), 1)]);
    }

    fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Vec<ThreadComment> {
        (0..n)
            .map(|i| {
                let parent = match rng.random_range(0..10) {
                    0 => "nowhere".to_string(),
                    1..=3 => "P".to_string(),
                    _ => format!("k{}", rng.random_range(0..n)),
                };
                let id = format!("k{i}");
                let parent = if parent == id { "P".to_string() } else { parent };
                c(&id, &parent, "u", rng.random_range(0..40))
            })
            .collect()
    }

    /// Walks parent pointers by id from scratch for every node.
    fn traversal_oracle(post_id: &str, nodes: &[ThreadComment]) -> (Vec<(String, usize)>, usize) {
        let find = |id: &str| nodes.iter().position(|n| n.id() == id);
        let mut first: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent_id() == post_id)
            .collect();
        first.sort_by(|&a, &b| canonical_order(&nodes[a], &nodes[b]));
        let mut sizes = vec![0usize; first.len()];
        let mut orphaned = 0;
        for i in 0..nodes.len() {
            let mut cur = i;
            let mut steps = 0;
            let root = loop {
                if nodes[cur].parent_id() == post_id {
                    break Some(cur);
                }
                match find(nodes[cur].parent_id()) {
                    Some(p) if steps <= nodes.len() => {
                        cur = p;
                        steps += 1;
                    }
                    _ => break None,
                }
            };
            match root.and_then(|r| first.iter().position(|&f| f == r)) {
                Some(j) => sizes[j] += 1,
                None => orphaned += 1,
            }
        }
        let named = first
            .iter()
            .zip(sizes)
            .map(|(&f, s)| (nodes[f].id().to_string(), s))
            .collect();
        (named, orphaned)
    }

    #[test]
    fn random_trees_match_traversal_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let nodes = random_tree(&mut rng, 50);
            let (want, want_orphaned) = traversal_oracle("P", &nodes);
            let t = build_thread(post("op", 0), nodes);
            let got = first_level_subtree_sizes(&t);
            let got: Vec<(String, usize)> =
                got.branches.iter().map(|(i, s)| (i.to_string(), *s)).collect();
            assert_eq!(got, want);
            assert_eq!(t.orphaned_count(), want_orphaned);
            let total: usize = got.iter().map(|(_, s)| s).sum();
            assert_eq!(total + t.orphaned_count(), 50);
        }
    }

    #[test]
    fn time_series_matches_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nodes = random_tree(&mut rng, 20);
        let mut want: Vec<i64> = nodes.iter().map(|n| n.created_utc).collect();
        want.sort_unstable();
        let t = build_thread(post("op", 0), nodes);
        assert_eq!(comment_time_series(&t), want);
        assert_eq!(post_metrics(&t).age_seconds, want.last().copied());
    }

    #[test]
    fn build_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let nodes = random_tree(&mut rng, 30);
            let mut shuffled = nodes.clone();
            shuffled.shuffle(&mut rng);
            let a = build_thread(post("op", 0), nodes);
            let b = build_thread(post("op", 0), shuffled);
            assert_eq!(first_level_subtree_sizes(&a), first_level_subtree_sizes(&b));
            assert_eq!(post_metrics(&a), post_metrics(&b));
        }
    }
}
