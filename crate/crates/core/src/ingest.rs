//! Forum post logs, course rosters, and thread assembly.
//!
//! Posts arrive as CSV (header `post_id,thread_id,author_id,timestamp,parent_post_id`)
//! or JSONL (one object per line, same keys). Rosters are CSV with header
//! `user_id,role,grade`. All parsing is strict: malformed rows are hard
//! errors that name the offending row, never silently skipped.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeZone, Utc};
use serde::Deserialize;
use thiserror::Error;

/// Forum participant identifier. Plain strings; the log side must match the
/// roster side byte for byte.
pub type UserId = String;
/// Post identifier, unique within a log.
pub type PostId = String;
/// Thread identifier.
pub type ThreadId = String;

/// Reserved author id for posts made anonymously. All anonymous posts are
/// attributed to the single roster participant with the `anonymous` role,
/// which must use this id.
pub const ANONYMOUS_USER_ID: &str = "ANONYMOUS";

const POSTS_HEADER: [&str; 5] = [
    "post_id",
    "thread_id",
    "author_id",
    "timestamp",
    "parent_post_id",
];
const ROSTER_HEADER: [&str; 3] = ["user_id", "role", "grade"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: malformed csv record: {msg}")]
    Csv { row: u64, msg: String },
    #[error("line {line}: malformed json: {msg}")]
    Json { line: u64, msg: String },
    #[error("unexpected header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("row {row}: missing required field `{field}`")]
    MissingField { row: u64, field: &'static str },
    #[error("duplicate post id {0}")]
    DuplicatePostId(PostId),
    #[error("row {row}: unparseable timestamp `{value}`")]
    BadTimestamp { row: u64, value: String },
    #[error("duplicate user id {0}")]
    DuplicateUserId(UserId),
    #[error("row {row}: unknown role `{token}`")]
    UnknownRole { row: u64, token: String },
    #[error("row {row}: grade {grade} outside declared scale [{min}, {max}]")]
    GradeOutOfRange {
        row: u64,
        grade: f64,
        min: f64,
        max: f64,
    },
    #[error("row {row}: unparseable grade `{value}`")]
    BadGrade { row: u64, value: String },
    #[error("more than one anonymous participant: `{first}` and `{second}`")]
    MultipleAnonymous { first: UserId, second: UserId },
    #[error("anonymous participant must use the reserved id `{ANONYMOUS_USER_ID}`, found `{0}`")]
    AnonymousId(UserId),
    #[error("anonymous participant `{0}` must not carry a grade")]
    AnonymousGrade(UserId),
    #[error("invalid grade scale: min {min} must be below max {max}")]
    BadScale { min: f64, max: f64 },
    #[error("post {post}: parent `{parent}` belongs to thread `{parent_thread}`, not `{thread}`")]
    ParentOtherThread {
        post: PostId,
        parent: PostId,
        thread: ThreadId,
        parent_thread: ThreadId,
    },
    #[error("post {post}: parent `{parent}` not found in the log")]
    ParentMissing { post: PostId, parent: PostId },
    #[error("post {post}: parent `{parent}` is timestamped after its reply")]
    ParentLater { post: PostId, parent: PostId },
}

/// A single forum post. Bodies are never read; only the reply structure and
/// timing matter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub post_id: PostId,
    pub thread_id: ThreadId,
    pub author_id: UserId,
    pub timestamp: DateTime<Utc>,
    /// Absent for thread-starting posts. Validated but not consumed by the
    /// edge rule, which is thread-level rather than reply-tree-level.
    pub parent_post_id: Option<PostId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Student,
    Instructor,
    Anonymous,
}

impl Role {
    fn parse(token: &str) -> Option<Role> {
        match token {
            "student" => Some(Role::Student),
            "instructor" => Some(Role::Instructor),
            "anonymous" => Some(Role::Anonymous),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Student => "student",
            Role::Instructor => "instructor",
            Role::Anonymous => "anonymous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    pub user_id: UserId,
    pub role: Role,
    pub grade: Option<f64>,
}

/// Declared grade scale; grades outside it are rejected at parse time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradeScale {
    pub min: f64,
    pub max: f64,
}

impl Default for GradeScale {
    fn default() -> Self {
        GradeScale {
            min: 0.0,
            max: 100.0,
        }
    }
}

impl GradeScale {
    pub fn contains(&self, grade: f64) -> bool {
        grade.is_finite() && grade >= self.min && grade <= self.max
    }
}

/// Validated collection of posts, in input order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PostLog {
    posts: Vec<Post>,
}

impl PostLog {
    /// Wraps a post list, rejecting duplicate post ids.
    pub fn new(posts: Vec<Post>) -> Result<PostLog, IngestError> {
        let mut seen = BTreeMap::new();
        for post in &posts {
            if seen.insert(post.post_id.clone(), ()).is_some() {
                return Err(IngestError::DuplicatePostId(post.post_id.clone()));
            }
        }
        Ok(PostLog { posts })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }
}

/// Course participants keyed by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    participants: BTreeMap<UserId, Participant>,
    scale: GradeScale,
}

impl Roster {
    pub fn new(participants: Vec<Participant>, scale: GradeScale) -> Result<Roster, IngestError> {
        if !(scale.min < scale.max) {
            return Err(IngestError::BadScale {
                min: scale.min,
                max: scale.max,
            });
        }
        let mut map = BTreeMap::new();
        let mut anonymous: Option<UserId> = None;
        for p in participants {
            if p.role == Role::Anonymous {
                if let Some(first) = &anonymous {
                    return Err(IngestError::MultipleAnonymous {
                        first: first.clone(),
                        second: p.user_id,
                    });
                }
                if p.user_id != ANONYMOUS_USER_ID {
                    return Err(IngestError::AnonymousId(p.user_id));
                }
                if p.grade.is_some() {
                    return Err(IngestError::AnonymousGrade(p.user_id));
                }
                anonymous = Some(p.user_id.clone());
            }
            let id = p.user_id.clone();
            if map.insert(id.clone(), p).is_some() {
                return Err(IngestError::DuplicateUserId(id));
            }
        }
        Ok(Roster {
            participants: map,
            scale,
        })
    }

    pub fn get(&self, user_id: &str) -> Option<&Participant> {
        self.participants.get(user_id)
    }

    /// Students in ascending user-id order.
    pub fn students(&self) -> impl Iterator<Item = &Participant> {
        self.participants
            .values()
            .filter(|p| p.role == Role::Student)
    }

    pub fn has_anonymous(&self) -> bool {
        self.participants
            .values()
            .any(|p| p.role == Role::Anonymous)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Participant> {
        self.participants.values()
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn scale(&self) -> GradeScale {
        self.scale
    }
}

/// Threads with posts in ascending `(timestamp, post_id)` order. The
/// post-id tie-break makes the order total, so downstream results never
/// depend on input row order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ThreadSet {
    threads: BTreeMap<ThreadId, Vec<Post>>,
}

impl ThreadSet {
    pub fn threads(&self) -> &BTreeMap<ThreadId, Vec<Post>> {
        &self.threads
    }

    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn post_count(&self) -> usize {
        self.threads.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostFormat {
    Csv,
    Jsonl,
}

/// Parse a post log. Timestamps are normalized to UTC.
pub fn parse_posts<R: Read>(source: R, format: PostFormat) -> Result<PostLog, IngestError> {
    match format {
        PostFormat::Csv => parse_posts_csv(source),
        PostFormat::Jsonl => parse_posts_jsonl(source),
    }
}

fn required<'a>(value: &'a str, row: u64, field: &'static str) -> Result<&'a str, IngestError> {
    if value.is_empty() {
        Err(IngestError::MissingField { row, field })
    } else {
        Ok(value)
    }
}

/// Accepts RFC 3339 (offsets are converted to UTC) and bare
/// `YYYY-MM-DDTHH:MM:SS[.fff]`, which is taken as UTC.
fn parse_timestamp(value: &str, row: u64) -> Result<DateTime<Utc>, IngestError> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(value, fmt) {
            return Ok(Utc.from_utc_datetime(&naive));
        }
    }
    Err(IngestError::BadTimestamp {
        row,
        value: value.to_string(),
    })
}

fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    let got: Vec<&str> = found.iter().map(str::trim).collect();
    if got != expected {
        return Err(IngestError::Header {
            expected: expected.join(","),
            found: got.join(","),
        });
    }
    Ok(())
}

fn build_post(
    row: u64,
    post_id: &str,
    thread_id: &str,
    author_id: &str,
    timestamp: &str,
    parent: Option<&str>,
) -> Result<Post, IngestError> {
    let post_id = required(post_id, row, "post_id")?;
    let thread_id = required(thread_id, row, "thread_id")?;
    let author_id = required(author_id, row, "author_id")?;
    let timestamp = parse_timestamp(required(timestamp, row, "timestamp")?, row)?;
    let parent_post_id = parent.filter(|p| !p.is_empty()).map(str::to_string);
    Ok(Post {
        post_id: post_id.to_string(),
        thread_id: thread_id.to_string(),
        author_id: author_id.to_string(),
        timestamp,
        parent_post_id,
    })
}

fn parse_posts_csv<R: Read>(source: R) -> Result<PostLog, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    check_header(
        reader
            .headers()
            .map_err(|e| IngestError::Csv {
                row: 1,
                msg: e.to_string(),
            })?,
        &POSTS_HEADER,
    )?;

    let mut posts = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IngestError::Csv {
            row: e
                .position()
                .map(|p| p.line())
                .unwrap_or(0),
            msg: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != POSTS_HEADER.len() {
            return Err(IngestError::Csv {
                row,
                msg: format!("expected {} fields, found {}", POSTS_HEADER.len(), record.len()),
            });
        }
        posts.push(build_post(
            row,
            &record[0],
            &record[1],
            &record[2],
            &record[3],
            record.get(4),
        )?);
    }
    PostLog::new(posts)
}

#[derive(Deserialize)]
struct RawJsonPost {
    post_id: String,
    thread_id: String,
    author_id: String,
    timestamp: String,
    #[serde(default)]
    parent_post_id: Option<String>,
}

fn parse_posts_jsonl<R: Read>(source: R) -> Result<PostLog, IngestError> {
    let reader = BufReader::new(source);
    let mut posts = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let row = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawJsonPost =
            serde_json::from_str(&line).map_err(|e| IngestError::Json {
                line: row,
                msg: e.to_string(),
            })?;
        posts.push(build_post(
            row,
            &raw.post_id,
            &raw.thread_id,
            &raw.author_id,
            &raw.timestamp,
            raw.parent_post_id.as_deref(),
        )?);
    }
    PostLog::new(posts)
}

/// Parse a roster CSV against the default 0-100 grade scale.
pub fn parse_roster<R: Read>(source: R) -> Result<Roster, IngestError> {
    parse_roster_with_scale(source, GradeScale::default())
}

pub fn parse_roster_with_scale<R: Read>(
    source: R,
    scale: GradeScale,
) -> Result<Roster, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    check_header(
        reader
            .headers()
            .map_err(|e| IngestError::Csv {
                row: 1,
                msg: e.to_string(),
            })?,
        &ROSTER_HEADER,
    )?;

    let mut participants = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IngestError::Csv {
            row: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != ROSTER_HEADER.len() {
            return Err(IngestError::Csv {
                row,
                msg: format!(
                    "expected {} fields, found {}",
                    ROSTER_HEADER.len(),
                    record.len()
                ),
            });
        }
        let user_id = required(&record[0], row, "user_id")?;
        let role_token = required(&record[1], row, "role")?;
        let role = Role::parse(role_token).ok_or_else(|| IngestError::UnknownRole {
            row,
            token: role_token.to_string(),
        })?;
        let grade = match &record[2] {
            "" => None,
            text => {
                let grade: f64 = text.parse().map_err(|_| IngestError::BadGrade {
                    row,
                    value: text.to_string(),
                })?;
                if !scale.contains(grade) {
                    return Err(IngestError::GradeOutOfRange {
                        row,
                        grade,
                        min: scale.min,
                        max: scale.max,
                    });
                }
                Some(grade)
            }
        };
        participants.push(Participant {
            user_id: user_id.to_string(),
            role,
            grade,
        });
    }
    Roster::new(participants, scale)
}

/// Group posts into threads and sort each thread by `(timestamp, post_id)`.
/// Parent references are validated here: a parent must exist, live in the
/// same thread, and not be timestamped after its reply.
pub fn assemble_threads(log: &PostLog) -> Result<ThreadSet, IngestError> {
    let mut by_id: BTreeMap<&str, &Post> = BTreeMap::new();
    for post in log.posts() {
        by_id.insert(&post.post_id, post);
    }
    for post in log.posts() {
        if let Some(parent_id) = &post.parent_post_id {
            let parent = by_id.get(parent_id.as_str()).ok_or_else(|| {
                IngestError::ParentMissing {
                    post: post.post_id.clone(),
                    parent: parent_id.clone(),
                }
            })?;
            if parent.thread_id != post.thread_id {
                return Err(IngestError::ParentOtherThread {
                    post: post.post_id.clone(),
                    parent: parent_id.clone(),
                    thread: post.thread_id.clone(),
                    parent_thread: parent.thread_id.clone(),
                });
            }
            if parent.timestamp > post.timestamp {
                return Err(IngestError::ParentLater {
                    post: post.post_id.clone(),
                    parent: parent_id.clone(),
                });
            }
        }
    }

    let mut threads: BTreeMap<ThreadId, Vec<Post>> = BTreeMap::new();
    for post in log.posts() {
        threads
            .entry(post.thread_id.clone())
            .or_default()
            .push(post.clone());
    }
    for posts in threads.values_mut() {
        posts.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.post_id.cmp(&b.post_id))
        });
    }
    Ok(ThreadSet { threads })
}

/// Write the canonical posts CSV. Parsing the output yields the same
/// `PostLog` back.
pub fn write_posts_csv<W: Write>(log: &PostLog, sink: W) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer
        .write_record(POSTS_HEADER)
        .map_err(csv_write_err)?;
    for post in log.posts() {
        writer
            .write_record([
                post.post_id.as_str(),
                post.thread_id.as_str(),
                post.author_id.as_str(),
                &format_timestamp(&post.timestamp),
                post.parent_post_id.as_deref().unwrap_or(""),
            ])
            .map_err(csv_write_err)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the canonical roster CSV, participants in user-id order.
pub fn write_roster_csv<W: Write>(roster: &Roster, sink: W) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(sink);
    writer
        .write_record(ROSTER_HEADER)
        .map_err(csv_write_err)?;
    for p in roster.iter() {
        let grade = p.grade.map(|g| format!("{g}")).unwrap_or_default();
        writer
            .write_record([p.user_id.as_str(), p.role.as_str(), &grade])
            .map_err(csv_write_err)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_write_err(e: csv::Error) -> IngestError {
    IngestError::Csv {
        row: 0,
        msg: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s, 0).unwrap()
    }

    const POSTS: &str = "\
post_id,thread_id,author_id,timestamp,parent_post_id
p1,t1,alice,2024-01-01T10:00:00Z,
p2,t1,bob,2024-01-01T10:05:00Z,p1
p3,t2,carol,2024-01-02T09:00:00Z,
";

    #[test]
    fn parses_csv_posts_and_preserves_count() {
        let log = parse_posts(POSTS.as_bytes(), PostFormat::Csv).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.posts()[1].parent_post_id.as_deref(), Some("p1"));
        assert_eq!(log.posts()[0].timestamp, ts("2024-01-01T10:00:00Z"));
    }

    #[test]
    fn duplicate_post_id_is_an_error() {
        let input = "\
post_id,thread_id,author_id,timestamp,parent_post_id
p1,t1,alice,2024-01-01T10:00:00Z,
p1,t1,bob,2024-01-01T10:05:00Z,
";
        let err = parse_posts(input.as_bytes(), PostFormat::Csv).unwrap_err();
        assert_eq!(err.to_string(), "duplicate post id p1");
    }

    #[test]
    fn missing_thread_id_names_the_row() {
        let input = "\
post_id,thread_id,author_id,timestamp,parent_post_id
p1,,alice,2024-01-01T10:00:00Z,
";
        let err = parse_posts(input.as_bytes(), PostFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        assert!(err.to_string().contains("thread_id"), "{err}");
    }

    #[test]
    fn bad_timestamp_is_an_error() {
        let input = "\
post_id,thread_id,author_id,timestamp,parent_post_id
p1,t1,alice,yesterday,
";
        let err = parse_posts(input.as_bytes(), PostFormat::Csv).unwrap_err();
        assert!(matches!(err, IngestError::BadTimestamp { row: 2, .. }), "{err}");
    }

    #[test]
    fn offsets_normalize_to_utc() {
        let input = "\
post_id,thread_id,author_id,timestamp,parent_post_id
p1,t1,alice,2024-01-01T12:00:00+02:00,
";
        let log = parse_posts(input.as_bytes(), PostFormat::Csv).unwrap();
        assert_eq!(log.posts()[0].timestamp, ts("2024-01-01T10:00:00Z"));
    }

    #[test]
    fn parses_jsonl_posts() {
        let input = concat!(
            r#"{"post_id":"p1","thread_id":"t1","author_id":"alice","timestamp":"2024-01-01T10:00:00Z"}"#,
            "\n",
            r#"{"post_id":"p2","thread_id":"t1","author_id":"bob","timestamp":"2024-01-01T10:05:00Z","parent_post_id":"p1"}"#,
            "\n",
        );
        let log = parse_posts(input.as_bytes(), PostFormat::Jsonl).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.posts()[1].parent_post_id.as_deref(), Some("p1"));
    }

    #[test]
    fn jsonl_error_names_the_line() {
        let input = "{\"post_id\":\"p1\"\n";
        let err = parse_posts(input.as_bytes(), PostFormat::Jsonl).unwrap_err();
        assert!(matches!(err, IngestError::Json { line: 1, .. }), "{err}");
    }

    #[test]
    fn roster_parses_students_and_instructors() {
        let input = "user_id,role,grade\ns1,student,91.5\nt1,instructor,\n";
        let roster = parse_roster(input.as_bytes()).unwrap();
        assert_eq!(roster.len(), 2);
        assert_eq!(roster.get("s1").unwrap().grade, Some(91.5));
        assert_eq!(roster.get("t1").unwrap().role, Role::Instructor);
    }

    #[test]
    fn unknown_role_is_an_error() {
        let input = "user_id,role,grade\nta1,TA,\n";
        let err = parse_roster(input.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unknown role"), "{err}");
    }

    #[test]
    fn grade_outside_scale_is_an_error() {
        let input = "user_id,role,grade\ns1,student,140\n";
        let err = parse_roster(input.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::GradeOutOfRange { grade, .. } if grade == 140.0));
    }

    #[test]
    fn duplicate_user_id_is_an_error() {
        let input = "user_id,role,grade\ns1,student,80\ns1,student,90\n";
        let err = parse_roster(input.as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::DuplicateUserId(id) if id == "s1"));
    }

    #[test]
    fn second_anonymous_participant_is_an_error() {
        let p = |id: &str| Participant {
            user_id: id.to_string(),
            role: Role::Anonymous,
            grade: None,
        };
        let err = Roster::new(
            vec![
                Participant {
                    user_id: ANONYMOUS_USER_ID.to_string(),
                    role: Role::Anonymous,
                    grade: None,
                },
                p("ghost"),
            ],
            GradeScale::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MultipleAnonymous { .. }));
    }

    #[test]
    fn anonymous_must_use_reserved_id() {
        let err = Roster::new(
            vec![Participant {
                user_id: "ghost".to_string(),
                role: Role::Anonymous,
                grade: None,
            }],
            GradeScale::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::AnonymousId(id) if id == "ghost"));
    }

    fn post(id: &str, thread: &str, author: &str, when: &str) -> Post {
        Post {
            post_id: id.to_string(),
            thread_id: thread.to_string(),
            author_id: author.to_string(),
            timestamp: ts(when),
            parent_post_id: None,
        }
    }

    #[test]
    fn threads_sort_by_timestamp() {
        let log = PostLog::new(vec![
            post("p3", "t1", "a", "2024-01-01T03:00:00Z"),
            post("p1", "t1", "b", "2024-01-01T01:00:00Z"),
            post("p2", "t1", "c", "2024-01-01T02:00:00Z"),
        ])
        .unwrap();
        let threads = assemble_threads(&log).unwrap();
        let ids: Vec<&str> = threads.threads()["t1"]
            .iter()
            .map(|p| p.post_id.as_str())
            .collect();
        assert_eq!(ids, ["p1", "p2", "p3"]);
    }

    #[test]
    fn timestamp_ties_break_by_post_id() {
        let log = PostLog::new(vec![
            post("b", "t1", "x", "2024-01-01T01:00:00Z"),
            post("a", "t1", "y", "2024-01-01T01:00:00Z"),
        ])
        .unwrap();
        let threads = assemble_threads(&log).unwrap();
        let ids: Vec<&str> = threads.threads()["t1"]
            .iter()
            .map(|p| p.post_id.as_str())
            .collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn single_post_thread() {
        let log = PostLog::new(vec![post("p1", "t1", "a", "2024-01-01T01:00:00Z")]).unwrap();
        let threads = assemble_threads(&log).unwrap();
        assert_eq!(threads.threads()["t1"].len(), 1);
    }

    #[test]
    fn parent_in_other_thread_is_an_error() {
        let mut reply = post("p2", "t2", "b", "2024-01-01T02:00:00Z");
        reply.parent_post_id = Some("p1".to_string());
        let log = PostLog::new(vec![post("p1", "t1", "a", "2024-01-01T01:00:00Z"), reply]).unwrap();
        let err = assemble_threads(&log).unwrap_err();
        assert!(matches!(err, IngestError::ParentOtherThread { .. }), "{err}");
    }

    #[test]
    fn parent_after_reply_is_an_error() {
        let mut reply = post("p2", "t1", "b", "2024-01-01T01:00:00Z");
        reply.parent_post_id = Some("p1".to_string());
        let log = PostLog::new(vec![post("p1", "t1", "a", "2024-01-01T02:00:00Z"), reply]).unwrap();
        let err = assemble_threads(&log).unwrap_err();
        assert!(matches!(err, IngestError::ParentLater { .. }), "{err}");
    }

    #[test]
    fn posts_round_trip_through_canonical_csv() {
        let log = parse_posts(POSTS.as_bytes(), PostFormat::Csv).unwrap();
        let mut buf = Vec::new();
        write_posts_csv(&log, &mut buf).unwrap();
        let reparsed = parse_posts(buf.as_slice(), PostFormat::Csv).unwrap();
        assert_eq!(log, reparsed);
    }

    #[test]
    fn roster_round_trips_through_canonical_csv() {
        let input = "user_id,role,grade\ns1,student,91.5\ns2,student,\nt1,instructor,\n";
        let roster = parse_roster(input.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_roster_csv(&roster, &mut buf).unwrap();
        let reparsed = parse_roster(buf.as_slice()).unwrap();
        assert_eq!(roster, reparsed);
    }
}
