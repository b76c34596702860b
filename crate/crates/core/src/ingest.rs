//! Dump ingestion: line parsing, period filtering and ingest counters.
//!
//! Posts and comments arrive as newline-delimited JSON objects. Parsing is
//! stateless per line; filtering is a two-pass affair because a comment can
//! only be judged once every post of the dump has been indexed.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Author value the platform writes when an account or record was deleted.
pub const DELETED_AUTHOR: &str = "[deleted]";
/// Body value the platform writes for moderator-removed comments.
pub const REMOVED_BODY: &str = "[removed]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line is not valid UTF-8")]
    Encoding,
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("created_utc is not a positive epoch timestamp")]
    InvalidTimestamp,
    #[error("record id is empty")]
    EmptyId,
    #[error("comment names itself as parent")]
    SelfParent,
}

/// How record identifiers are compared across posts and comments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IdNormalization {
    /// Drop a leading `t1_` / `t3_` style type prefix.
    #[default]
    StripTypePrefix,
    /// Compare ids exactly as written.
    Verbatim,
}

impl IdNormalization {
    pub fn apply<'a>(&self, id: &'a str) -> &'a str {
        match self {
            IdNormalization::Verbatim => id,
            IdNormalization::StripTypePrefix => {
                let b = id.as_bytes();
                if b.len() > 3 && b[0] == b't' && b[1].is_ascii_digit() && b[2] == b'_' {
                    &id[3..]
                } else {
                    id
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub author: String,
    pub created_utc: i64,
    pub declared_num_comments: u64,
    pub score: Option<i64>,
    pub body_or_title: String,
}

impl PostRecord {
    pub fn is_deleted_author(&self) -> bool {
        self.author == DELETED_AUTHOR
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: String,
    pub author: String,
    pub created_utc: i64,
    pub link_id: String,
    pub parent_id: String,
    pub body: String,
    pub score: Option<i64>,
}

impl CommentRecord {
    pub fn is_deleted_author(&self) -> bool {
        self.author == DELETED_AUTHOR
    }

    pub fn is_removed(&self) -> bool {
        self.body == REMOVED_BODY
    }
}

/// True when two author handles denote the same identity. The deleted
/// sentinel never matches anything, itself included.
pub fn same_author(a: &str, b: &str) -> bool {
    a == b && a != DELETED_AUTHOR
}

/// Half-open time window `[start, end)` in epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    start: i64,
    end: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid period: start {start} must be before end {end}")]
pub struct InvalidPeriod {
    pub start: i64,
    pub end: i64,
}

impl Period {
    pub fn new(start: i64, end: i64) -> Result<Self, InvalidPeriod> {
        if start < end {
            Ok(Period { start, end })
        } else {
            Err(InvalidPeriod { start, end })
        }
    }

    /// A window wide enough to keep every valid record.
    pub fn unbounded() -> Self {
        Period { start: 1, end: i64::MAX }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

// ---------------------------------------------------------------------------
// Line parsing

/// A numeric field that dumps write as integers, floats or strings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
enum Flex {
    #[default]
    Missing,
    Value(i64),
    Invalid,
}

impl Flex {
    fn value(self) -> Option<i64> {
        match self {
            Flex::Value(v) => Some(v),
            _ => None,
        }
    }
}

struct FlexVisitor;

impl<'de> Visitor<'de> for FlexVisitor {
    type Value = Flex;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer, an integral float, or a numeric string")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Flex, E> {
        Ok(Flex::Value(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Flex, E> {
        Ok(i64::try_from(v).map(Flex::Value).unwrap_or(Flex::Invalid))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Flex, E> {
        if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 {
            Ok(Flex::Value(v as i64))
        } else {
            Ok(Flex::Invalid)
        }
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Flex, E> {
        let t = v.trim();
        if let Ok(i) = t.parse::<i64>() {
            return Ok(Flex::Value(i));
        }
        match t.parse::<f64>() {
            Ok(f) => self.visit_f64(f),
            Err(_) => Ok(Flex::Invalid),
        }
    }

    fn visit_bool<E: de::Error>(self, _: bool) -> Result<Flex, E> {
        Ok(Flex::Invalid)
    }

    fn visit_unit<E: de::Error>(self) -> Result<Flex, E> {
        Ok(Flex::Missing)
    }

    fn visit_none<E: de::Error>(self) -> Result<Flex, E> {
        Ok(Flex::Missing)
    }

    fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Flex, D::Error> {
        d.deserialize_any(FlexVisitor)
    }

    fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<Flex, A::Error> {
        while seq.next_element::<de::IgnoredAny>()?.is_some() {}
        Ok(Flex::Invalid)
    }

    fn visit_map<A: de::MapAccess<'de>>(self, mut map: A) -> Result<Flex, A::Error> {
        while map.next_entry::<de::IgnoredAny, de::IgnoredAny>()?.is_some() {}
        Ok(Flex::Invalid)
    }
}

fn flex<'de, D: Deserializer<'de>>(d: D) -> Result<Flex, D::Error> {
    d.deserialize_any(FlexVisitor)
}

#[derive(Deserialize)]
struct RawPost<'a> {
    #[serde(borrow, default)]
    name: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    id: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    author: Option<Cow<'a, str>>,
    #[serde(default, deserialize_with = "flex")]
    created_utc: Flex,
    #[serde(default, deserialize_with = "flex")]
    num_comments: Flex,
    #[serde(default, deserialize_with = "flex")]
    score: Flex,
    #[serde(borrow, default)]
    title: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    selftext: Option<Cow<'a, str>>,
}

#[derive(Deserialize)]
struct RawComment<'a> {
    #[serde(borrow, default)]
    name: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    id: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    author: Option<Cow<'a, str>>,
    #[serde(default, deserialize_with = "flex")]
    created_utc: Flex,
    #[serde(borrow, default)]
    link_id: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    parent_id: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    body: Option<Cow<'a, str>>,
    #[serde(default, deserialize_with = "flex")]
    score: Flex,
}

fn decode(line: &[u8]) -> Result<&str, ParseError> {
    let s = std::str::from_utf8(line).map_err(|_| ParseError::Encoding)?;
    Ok(s.trim_end_matches(['\r', '\n']))
}

fn record_id(
    name: Option<Cow<'_, str>>,
    id: Option<Cow<'_, str>>,
    ids: IdNormalization,
) -> Result<String, ParseError> {
    let raw = name.or(id).ok_or(ParseError::MissingField("name"))?;
    let norm = ids.apply(raw.trim());
    if norm.is_empty() {
        Err(ParseError::EmptyId)
    } else {
        Ok(norm.to_owned())
    }
}

fn timestamp(v: Flex) -> Result<i64, ParseError> {
    match v {
        Flex::Missing => Err(ParseError::MissingField("created_utc")),
        Flex::Value(t) if t > 0 => Ok(t),
        _ => Err(ParseError::InvalidTimestamp),
    }
}

fn json_error(e: serde_json::Error) -> ParseError {
    ParseError::Malformed(e.to_string())
}

fn author_or_deleted(a: Option<Cow<'_, str>>) -> String {
    match a {
        Some(a) if !a.is_empty() => a.into_owned(),
        _ => DELETED_AUTHOR.to_owned(),
    }
}

/// Parses one post row. A missing author is read as the deleted sentinel.
pub fn parse_post_line(line: &[u8], ids: IdNormalization) -> Result<PostRecord, ParseError> {
    let text = decode(line)?;
    let raw: RawPost = serde_json::from_str(text).map_err(json_error)?;
    let created_utc = timestamp(raw.created_utc)?;
    let id = record_id(raw.name, raw.id, ids)?;
    let body_or_title = match (raw.title, raw.selftext) {
        (Some(t), _) if !t.is_empty() => t.into_owned(),
        (_, Some(s)) => s.into_owned(),
        (Some(t), None) => t.into_owned(),
        (None, None) => String::new(),
    };
    Ok(PostRecord {
        id,
        author: author_or_deleted(raw.author),
        created_utc,
        declared_num_comments: raw.num_comments.value().unwrap_or(0).max(0) as u64,
        score: raw.score.value(),
        body_or_title,
    })
}

pub fn parse_comment_line(line: &[u8], ids: IdNormalization) -> Result<CommentRecord, ParseError> {
    let text = decode(line)?;
    let raw: RawComment = serde_json::from_str(text).map_err(json_error)?;
    let created_utc = timestamp(raw.created_utc)?;
    let id = record_id(raw.name, raw.id, ids)?;
    let link_id = raw.link_id.ok_or(ParseError::MissingField("link_id"))?;
    let link_id = ids.apply(link_id.trim()).to_owned();
    if link_id.is_empty() {
        return Err(ParseError::EmptyId);
    }
    let parent_id = raw.parent_id.ok_or(ParseError::MissingField("parent_id"))?;
    let parent_id = ids.apply(parent_id.trim()).to_owned();
    if parent_id.is_empty() {
        return Err(ParseError::EmptyId);
    }
    if parent_id == id {
        return Err(ParseError::SelfParent);
    }
    Ok(CommentRecord {
        id,
        author: author_or_deleted(raw.author),
        created_utc,
        link_id,
        parent_id,
        body: raw.body.map(Cow::into_owned).unwrap_or_default(),
        score: raw.score.value(),
    })
}

// ---------------------------------------------------------------------------
// Counters

/// Ingest counters. Every field is additive under [`IngestStats::merge`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub post_lines: u64,
    pub comment_lines: u64,
    pub malformed_post_lines: u64,
    pub malformed_comment_lines: u64,
    pub duplicate_posts: u64,
    pub posts_kept: u64,
    pub posts_dropped_out_of_period: u64,
    pub posts_with_deleted_author: u64,
    pub comments_kept: u64,
    /// Comment timestamp outside the period.
    pub comments_dropped_out_of_period: u64,
    /// Comment inside the period on a post created outside it.
    pub comments_dropped_post_out_of_period: u64,
    /// Comment inside the period whose post never appears in the dump.
    pub comments_dropped_missing_post: u64,
    pub removed_comments: u64,
    /// Distinct post ids referenced by in-period comments with no post
    /// record at all. This is an interpretation of "disconnected posts".
    pub disconnected_post_ids: BTreeSet<String>,
}

impl IngestStats {
    pub fn total_lines(&self) -> u64 {
        self.post_lines + self.comment_lines
    }

    pub fn malformed_lines(&self) -> u64 {
        self.malformed_post_lines + self.malformed_comment_lines
    }

    pub fn disconnected_posts(&self) -> u64 {
        self.disconnected_post_ids.len() as u64
    }

    /// Comments made inside the period, whether or not their post is kept.
    pub fn comments_in_period(&self) -> u64 {
        self.comments_kept
            + self.comments_dropped_post_out_of_period
            + self.comments_dropped_missing_post
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.post_lines += other.post_lines;
        self.comment_lines += other.comment_lines;
        self.malformed_post_lines += other.malformed_post_lines;
        self.malformed_comment_lines += other.malformed_comment_lines;
        self.duplicate_posts += other.duplicate_posts;
        self.posts_kept += other.posts_kept;
        self.posts_dropped_out_of_period += other.posts_dropped_out_of_period;
        self.posts_with_deleted_author += other.posts_with_deleted_author;
        self.comments_kept += other.comments_kept;
        self.comments_dropped_out_of_period += other.comments_dropped_out_of_period;
        self.comments_dropped_post_out_of_period += other.comments_dropped_post_out_of_period;
        self.comments_dropped_missing_post += other.comments_dropped_missing_post;
        self.removed_comments += other.removed_comments;
        self.disconnected_post_ids
            .extend(other.disconnected_post_ids.iter().cloned());
    }
}

// ---------------------------------------------------------------------------
// Two-pass filtering

/// Outcome of checking one parsed comment against the post index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentDisposition {
    /// Kept; carries the index of its post among the kept posts.
    Kept(usize),
    OutOfPeriod,
    PostOutOfPeriod,
    MissingPost,
}

/// First-pass product: every kept post plus the ids of posts that exist
/// in the dump but fall outside the period.
#[derive(Debug, Clone)]
pub struct PostIndex {
    period: Period,
    posts: Vec<PostRecord>,
    kept: HashMap<String, usize>,
    out_of_period: HashSet<String>,
    stats: IngestStats,
}

impl PostIndex {
    pub fn new(period: Period) -> Self {
        PostIndex {
            period,
            posts: Vec::new(),
            kept: HashMap::new(),
            out_of_period: HashSet::new(),
            stats: IngestStats::default(),
        }
    }

    pub fn period(&self) -> Period {
        self.period
    }

    /// Feeds one post line's parse outcome. First occurrence of an id wins.
    pub fn push(&mut self, parsed: Result<PostRecord, ParseError>) {
        self.stats.post_lines += 1;
        let post = match parsed {
            Ok(p) => p,
            Err(_) => {
                self.stats.malformed_post_lines += 1;
                return;
            }
        };
        if self.kept.contains_key(&post.id) || self.out_of_period.contains(&post.id) {
            self.stats.duplicate_posts += 1;
            return;
        }
        if !self.period.contains(post.created_utc) {
            self.stats.posts_dropped_out_of_period += 1;
            self.out_of_period.insert(post.id);
            return;
        }
        self.stats.posts_kept += 1;
        if post.is_deleted_author() {
            self.stats.posts_with_deleted_author += 1;
        }
        self.kept.insert(post.id.clone(), self.posts.len());
        self.posts.push(post);
    }

    pub fn posts(&self) -> &[PostRecord] {
        &self.posts
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn lookup(&self, post_id: &str) -> Option<usize> {
        self.kept.get(post_id).copied()
    }

    pub fn classify(&self, c: &CommentRecord) -> CommentDisposition {
        if !self.period.contains(c.created_utc) {
            return CommentDisposition::OutOfPeriod;
        }
        match self.kept.get(c.link_id.as_str()) {
            Some(&i) => CommentDisposition::Kept(i),
            None if self.out_of_period.contains(c.link_id.as_str()) => {
                CommentDisposition::PostOutOfPeriod
            }
            None => CommentDisposition::MissingPost,
        }
    }

    /// Classifies a comment line and records it in `stats`.
    pub fn admit(
        &self,
        parsed: &Result<CommentRecord, ParseError>,
        stats: &mut IngestStats,
    ) -> Option<usize> {
        stats.comment_lines += 1;
        let c = match parsed {
            Ok(c) => c,
            Err(_) => {
                stats.malformed_comment_lines += 1;
                return None;
            }
        };
        match self.classify(c) {
            CommentDisposition::Kept(i) => {
                stats.comments_kept += 1;
                if c.is_removed() {
                    stats.removed_comments += 1;
                }
                Some(i)
            }
            CommentDisposition::OutOfPeriod => {
                stats.comments_dropped_out_of_period += 1;
                None
            }
            CommentDisposition::PostOutOfPeriod => {
                stats.comments_dropped_post_out_of_period += 1;
                None
            }
            CommentDisposition::MissingPost => {
                stats.comments_dropped_missing_post += 1;
                if !stats.disconnected_post_ids.contains(&c.link_id) {
                    stats.disconnected_post_ids.insert(c.link_id.clone());
                }
                None
            }
        }
    }

    pub fn into_parts(self) -> (Vec<PostRecord>, IngestStats) {
        (self.posts, self.stats)
    }
}

#[derive(Debug, Clone)]
pub struct FilteredCorpus {
    pub posts: Vec<PostRecord>,
    pub comments: Vec<CommentRecord>,
    pub stats: IngestStats,
}

/// In-memory two-pass filter: index the posts, then admit comments.
pub fn filter_corpus<P, C>(posts: P, comments: C, period: Period) -> FilteredCorpus
where
    P: IntoIterator<Item = Result<PostRecord, ParseError>>,
    C: IntoIterator<Item = Result<CommentRecord, ParseError>>,
{
    let mut index = PostIndex::new(period);
    for p in posts {
        index.push(p);
    }
    let mut stats = IngestStats::default();
    let mut kept = Vec::new();
    for c in comments {
        if index.admit(&c, &mut stats).is_some() {
            if let Ok(c) = c {
                kept.push(c);
            }
        }
    }
    let (posts, mut post_stats) = index.into_parts();
    post_stats.merge(&stats);
    FilteredCorpus { posts, comments: kept, stats: post_stats }
}

// ---------------------------------------------------------------------------
// File access

/// Opens a dump file, decompressing `.gz` and `.zst`/`.zstd` by extension.
pub fn open_dump(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let reader: Box<dyn BufRead + Send> = match ext.as_deref() {
        Some("gz") => Box::new(BufReader::with_capacity(
            1 << 20,
            flate2::read::MultiGzDecoder::new(BufReader::new(file)),
        )),
        Some("zst") | Some("zstd") => Box::new(BufReader::with_capacity(
            1 << 20,
            zstd::stream::read::Decoder::new(file)?,
        )),
        _ => Box::new(BufReader::with_capacity(1 << 20, file)),
    };
    Ok(reader)
}

/// Reads raw lines in batches of at most `batch` and hands each batch to
/// `f`. Line terminators are stripped.
pub fn for_each_line_batch<R, F>(mut reader: R, batch: usize, mut f: F) -> io::Result<()>
where
    R: BufRead,
    F: FnMut(&[Vec<u8>]),
{
    let batch = batch.max(1);
    let mut lines: Vec<Vec<u8>> = Vec::with_capacity(batch);
    let mut used = 0;
    loop {
        if used == lines.len() {
            lines.push(Vec::new());
        }
        let buf = &mut lines[used];
        buf.clear();
        let n = reader.read_until(b'\n', buf)?;
        if n == 0 {
            break;
        }
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        used += 1;
        if used == batch {
            f(&lines[..used]);
            used = 0;
        }
    }
    if used > 0 {
        f(&lines[..used]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NORM: IdNormalization = IdNormalization::StripTypePrefix;

    fn post(id: &str, t: i64) -> Result<PostRecord, ParseError> {
        Ok(PostRecord {
            id: id.into(),
            author: "op".into(),
            created_utc: t,
            declared_num_comments: 0,
            score: None,
            body_or_title: String::new(),
        })
    }

    fn comment(id: &str, link: &str, t: i64) -> Result<CommentRecord, ParseError> {
        Ok(CommentRecord {
            id: id.into(),
            author: "u".into(),
            created_utc: t,
            link_id: link.into(),
            parent_id: link.into(),
            body: "hi".into(),
            score: None,
        })
    }

    #[test]
    fn parses_post_fields() {
        let line = br#"{"author":"u1","created_utc":1199145600,"name":"t3_a","num_comments":4,"title":"hello"}"#;
        let p = parse_post_line(line, NORM).unwrap();
        assert_eq!(p.id, "a");
        assert_eq!(p.author, "u1");
        assert_eq!(p.created_utc, 1199145600);
        assert_eq!(p.declared_num_comments, 4);
        assert_eq!(p.score, None);
        assert_eq!(p.body_or_title, "hello");

        let verbatim = parse_post_line(line, IdNormalization::Verbatim).unwrap();
        assert_eq!(verbatim.id, "t3_a");
    }

    #[test]
    fn timestamp_may_be_a_string() {
        let line = br#"{"author":"u1","created_utc":"1199145600","id":"a","score":"12"}"#;
        let p = parse_post_line(line, NORM).unwrap();
        assert_eq!(p.created_utc, 1199145600);
        assert_eq!(p.score, Some(12));
    }

    #[test]
    fn missing_timestamp_is_an_error() {
        let line = br#"{"author":"u1","name":"t3_a"}"#;
        assert_eq!(
            parse_post_line(line, NORM),
            Err(ParseError::MissingField("created_utc"))
        );
        let line = br#"{"author":"u1","name":"t3_a","created_utc":"soon"}"#;
        assert_eq!(parse_post_line(line, NORM), Err(ParseError::InvalidTimestamp));
        let line = br#"{"author":"u1","name":"t3_a","created_utc":0}"#;
        assert_eq!(parse_post_line(line, NORM), Err(ParseError::InvalidTimestamp));
    }

    #[test]
    fn bad_encoding_and_json() {
        assert_eq!(parse_post_line(b"\xff\xfe{}", NORM), Err(ParseError::Encoding));
        assert!(matches!(
            parse_post_line(b"{\"name\":", NORM),
            Err(ParseError::Malformed(_))
        ));
        assert_eq!(
            parse_post_line(br#"{"created_utc":5}"#, NORM),
            Err(ParseError::MissingField("name"))
        );
    }

    #[test]
    fn deleted_author_is_flagged_and_counted() {
        let line = br#"{"author":"[deleted]","created_utc":1199145600,"name":"t3_a"}"#;
        let p = parse_post_line(line, NORM).unwrap();
        assert!(p.is_deleted_author());
        let mut index = PostIndex::new(Period::unbounded());
        index.push(Ok(p));
        assert_eq!(index.stats().posts_with_deleted_author, 1);
    }

    #[test]
    fn parses_comment_fields() {
        let line = br#"{"author":"u2","created_utc":1199145700,"link_id":"t3_a","parent_id":"t3_a","name":"t1_c","body":"x","score":3}"#;
        let c = parse_comment_line(line, NORM).unwrap();
        assert_eq!(c.link_id, "a");
        assert_eq!(c.parent_id, c.link_id);
        assert_eq!(c.id, "c");
        assert_eq!(c.score, Some(3));
        assert!(!c.is_removed());
    }

    #[test]
    fn removed_comment_is_flagged() {
        let line = br#"{"author":"u2","created_utc":10,"link_id":"t3_a","parent_id":"t3_a","name":"t1_c","body":"[removed]"}"#;
        let c = parse_comment_line(line, NORM).unwrap();
        assert!(c.is_removed());
        let mut idx = PostIndex::new(Period::unbounded());
        idx.push(post("a", 5));
        let mut stats = IngestStats::default();
        assert_eq!(idx.admit(&Ok(c), &mut stats), Some(0));
        assert_eq!(stats.removed_comments, 1);
    }

    #[test]
    fn self_parent_is_rejected() {
        let line = br#"{"author":"u2","created_utc":10,"link_id":"t3_a","parent_id":"t1_c","name":"t1_c"}"#;
        assert_eq!(parse_comment_line(line, NORM), Err(ParseError::SelfParent));
    }

    #[test]
    fn period_rule() {
        let period = Period::new(100, 200).unwrap();
        let out = filter_corpus(
            vec![post("old", 50), post("p", 150)],
            vec![
                comment("c1", "old", 150), // post before period
                comment("c2", "p", 250),   // comment after period
                comment("c3", "p", 160),   // kept
                comment("c4", "ghost", 170),
                comment("c5", "ghost", 180),
            ],
            period,
        );
        assert_eq!(out.posts.len(), 1);
        assert_eq!(out.comments.len(), 1);
        assert_eq!(out.comments[0].id, "c3");
        let s = &out.stats;
        assert_eq!(s.comments_dropped_post_out_of_period, 1);
        assert_eq!(s.comments_dropped_out_of_period, 1);
        assert_eq!(s.comments_dropped_missing_post, 2);
        assert_eq!(s.disconnected_posts(), 1);
        assert_eq!(s.posts_dropped_out_of_period, 1);
        assert_eq!(s.comments_in_period(), 4);
    }

    #[test]
    fn hand_corpus_disconnected() {
        // one post, one comment on it, one comment on an absent post
        let out = filter_corpus(
            vec![post("a", 10)],
            vec![comment("c1", "a", 11), comment("c2", "zz", 12)],
            Period::unbounded(),
        );
        assert_eq!(out.comments.len(), 1);
        assert_eq!(
            out.stats.disconnected_post_ids.iter().collect::<Vec<_>>(),
            vec!["zz"]
        );
    }

    #[test]
    fn duplicate_posts_keep_first() {
        let mut idx = PostIndex::new(Period::unbounded());
        idx.push(post("a", 10));
        idx.push(post("a", 20));
        idx.push(Err(ParseError::EmptyId));
        assert_eq!(idx.posts().len(), 1);
        assert_eq!(idx.posts()[0].created_utc, 10);
        assert_eq!(idx.stats().duplicate_posts, 1);
        assert_eq!(idx.stats().malformed_post_lines, 1);
        assert_eq!(idx.stats().post_lines, 3);
    }

    #[test]
    fn period_validation() {
        assert!(Period::new(5, 5).is_err());
        assert!(Period::new(6, 5).is_err());
        let p = Period::new(5, 6).unwrap();
        assert!(p.contains(5) && !p.contains(6));
    }

    #[test]
    fn line_batches_strip_terminators() {
        let data = b"a\r\nbb\n\nccc";
        let mut seen = Vec::new();
        for_each_line_batch(&data[..], 2, |b| {
            seen.extend(b.iter().map(|l| String::from_utf8(l.clone()).unwrap()))
        })
        .unwrap();
        assert_eq!(seen, vec!["a", "bb", "", "ccc"]);
    }

    #[test]
    fn gzip_input_is_detected() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ndjson.gz");
        let mut enc = flate2::write::GzEncoder::new(
            File::create(&path).unwrap(),
            flate2::Compression::fast(),
        );
        enc.write_all(b"one\ntwo\n").unwrap();
        enc.finish().unwrap();
        let mut n = 0;
        for_each_line_batch(open_dump(&path).unwrap(), 10, |b| n += b.len()).unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn zstd_input_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.zst");
        let data = zstd::encode_all(&b"one\ntwo\nthree\n"[..], 3).unwrap();
        std::fs::write(&path, data).unwrap();
        let mut n = 0;
        for_each_line_batch(open_dump(&path).unwrap(), 2, |b| n += b.len()).unwrap();
        assert_eq!(n, 3);
    }
}
