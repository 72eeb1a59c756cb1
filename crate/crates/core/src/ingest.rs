//! Readers and writers for the two message-stream formats.
//!
//! `email_csv` is RFC-4180 with header
//! `message_id,timestamp,sender,recipients,in_reply_to,subject,body`
//! (recipients `;`-separated). `micropost_jsonl` holds one object per line
//! with keys `id, created_at, author, text, mentions, in_reply_to,
//! retweet_of, author_followers, author_following`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{format_timestamp, parse_timestamp, sort_events, Channel, MessageEvent, NodeId, Timestamp};

pub const EMAIL_HEADER: [&str; 7] = [
    "message_id",
    "timestamp",
    "sender",
    "recipients",
    "in_reply_to",
    "subject",
    "body",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    EmailCsv,
    MicropostJsonl,
}

impl InputFormat {
    pub fn channel(self) -> Channel {
        match self {
            InputFormat::EmailCsv => Channel::Email,
            InputFormat::MicropostJsonl => Channel::Micropost,
        }
    }
}

impl From<Channel> for InputFormat {
    fn from(c: Channel) -> Self {
        match c {
            Channel::Email => InputFormat::EmailCsv,
            Channel::Micropost => InputFormat::MicropostJsonl,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Channel>().map(InputFormat::from)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestOptions {
    /// Abort when more than this percentage of data rows is malformed.
    pub max_reject_pct: f64,
    /// The percentage limit only applies to inputs with at least this many rows.
    pub abort_min_rows: usize,
    pub min_timestamp: Timestamp,
    pub max_timestamp: Timestamp,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            max_reject_pct: 10.0,
            abort_min_rows: 20,
            min_timestamp: 0,
            // 2100-01-01T00:00:00Z
            max_timestamp: 4_102_444_800,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub events: Vec<MessageEvent>,
    pub rejects: Vec<Reject>,
    pub rows: usize,
}

pub fn ingest(path: &Path, format: InputFormat, opts: &IngestOptions) -> Result<Ingested> {
    if path.as_os_str() == "-" {
        return ingest_reader(std::io::stdin().lock(), format, opts);
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file), format, opts).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(reader: R, format: InputFormat, opts: &IngestOptions) -> Result<Ingested> {
    let mut out = match format {
        InputFormat::EmailCsv => read_email_csv(reader, opts)?,
        InputFormat::MicropostJsonl => read_micropost_jsonl(reader, opts)?,
    };
    if out.rows >= opts.abort_min_rows
        && out.rejects.len() as f64 > opts.max_reject_pct / 100.0 * out.rows as f64
    {
        let first = &out.rejects[0];
        return Err(Error::TooManyRejects {
            rejected: out.rejects.len(),
            total: out.rows,
            limit_pct: opts.max_reject_pct,
            first: format!("line {}: {}", first.line, first.reason),
        });
    }
    sort_events(&mut out.events);
    Ok(out)
}

struct RowSink<'a> {
    opts: &'a IngestOptions,
    seen: HashSet<String>,
    out: Ingested,
}

impl<'a> RowSink<'a> {
    fn new(opts: &'a IngestOptions) -> Self {
        RowSink {
            opts,
            seen: HashSet::new(),
            out: Ingested::default(),
        }
    }

    fn accept(&mut self, line: u64, parsed: Result<MessageEvent>) {
        self.out.rows += 1;
        let checked = parsed.and_then(|ev| {
            if ev.timestamp < self.opts.min_timestamp || ev.timestamp > self.opts.max_timestamp {
                return Err(Error::InvalidInput(format!(
                    "timestamp {} outside configured bounds",
                    format_timestamp(ev.timestamp)
                )));
            }
            if !self.seen.insert(ev.message_id.clone()) {
                return Err(Error::InvalidInput(format!("duplicate message_id {:?}", ev.message_id)));
            }
            Ok(ev)
        });
        match checked {
            Ok(ev) => self.out.events.push(ev),
            Err(e) => self.out.rejects.push(Reject {
                line,
                reason: e.to_string(),
            }),
        }
    }
}

fn non_empty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Canonicalizes and de-duplicates an identifier list, keeping first occurrences.
fn node_list<'s>(items: impl Iterator<Item = &'s str>) -> Result<Vec<NodeId>> {
    let mut out: Vec<NodeId> = Vec::new();
    for raw in items.filter(|s| !s.trim().is_empty()) {
        let id = NodeId::new(raw)?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    Ok(out)
}

fn read_email_csv<R: Read>(reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_io)?.clone();
    if !header.is_empty() && header.iter().map(str::trim).ne(EMAIL_HEADER.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "unexpected email_csv header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut sink = RowSink::new(opts);
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                sink.accept(line, parse_email_row(&record));
            }
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(csv_io(e));
                }
                let line = e.position().map_or(0, |p| p.line());
                sink.accept(line, Err(Error::InvalidInput(e.to_string())));
            }
        }
    }
    Ok(sink.out)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<input>", io),
        other => Error::InvalidInput(format!("{other:?}")),
    }
}

fn parse_email_row(rec: &csv::StringRecord) -> Result<MessageEvent> {
    if rec.len() != EMAIL_HEADER.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} fields, found {}",
            EMAIL_HEADER.len(),
            rec.len()
        )));
    }
    let message_id =
        non_empty(&rec[0]).ok_or_else(|| Error::InvalidInput("empty message_id".into()))?;
    let timestamp = parse_timestamp(&rec[1])?;
    let sender = NodeId::new(&rec[2])?;
    let recipients = node_list(rec[3].split(';'))?;
    if recipients.is_empty() {
        return Err(Error::InvalidInput("email without recipients".into()));
    }
    Ok(MessageEvent {
        message_id,
        timestamp,
        sender,
        recipients,
        channel: Channel::Email,
        in_reply_to: non_empty(&rec[4]),
        retweet_of: None,
        subject_text: non_empty(&rec[5]),
        body_text: non_empty(&rec[6]),
        author_followers: None,
        author_following: None,
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct MicropostRow {
    id: String,
    created_at: String,
    author: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default)]
    in_reply_to: Option<String>,
    #[serde(default)]
    retweet_of: Option<String>,
    #[serde(default)]
    author_followers: Option<u64>,
    #[serde(default)]
    author_following: Option<u64>,
}

fn read_micropost_jsonl<R: Read>(reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut sink = RowSink::new(opts);
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<MicropostRow>(&line)
            .map_err(|e| Error::InvalidInput(e.to_string()))
            .and_then(micropost_event);
        sink.accept(idx as u64 + 1, parsed);
    }
    Ok(sink.out)
}

fn micropost_event(row: MicropostRow) -> Result<MessageEvent> {
    let message_id =
        non_empty(&row.id).ok_or_else(|| Error::InvalidInput("empty id".into()))?;
    Ok(MessageEvent {
        message_id,
        timestamp: parse_timestamp(&row.created_at)?,
        sender: NodeId::new(&row.author)?,
        recipients: node_list(row.mentions.iter().map(String::as_str))?,
        channel: Channel::Micropost,
        in_reply_to: row.in_reply_to.as_deref().and_then(non_empty),
        retweet_of: row.retweet_of.as_deref().and_then(non_empty),
        subject_text: None,
        body_text: row.text.as_deref().and_then(non_empty),
        author_followers: row.author_followers,
        author_following: row.author_following,
    })
}

pub fn write_events<W: Write>(events: &[MessageEvent], format: InputFormat, w: W) -> Result<()> {
    match format {
        InputFormat::EmailCsv => write_email_csv(events, w),
        InputFormat::MicropostJsonl => write_micropost_jsonl(events, w),
    }
}

pub fn write_email_csv<W: Write>(events: &[MessageEvent], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(EMAIL_HEADER)?;
    for ev in events {
        let recipients = ev
            .recipients
            .iter()
            .map(NodeId::as_str)
            .collect::<Vec<_>>()
            .join(";");
        wtr.write_record([
            ev.message_id.as_str(),
            &format_timestamp(ev.timestamp),
            ev.sender.as_str(),
            &recipients,
            ev.in_reply_to.as_deref().unwrap_or(""),
            ev.subject_text.as_deref().unwrap_or(""),
            ev.body_text.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn write_micropost_jsonl<W: Write>(events: &[MessageEvent], mut w: W) -> Result<()> {
    for ev in events {
        let row = MicropostRow {
            id: ev.message_id.clone(),
            created_at: format_timestamp(ev.timestamp),
            author: ev.sender.to_string(),
            text: ev.body_text.clone(),
            mentions: ev.recipients.iter().map(|r| r.to_string()).collect(),
            in_reply_to: ev.in_reply_to.clone(),
            retweet_of: ev.retweet_of.clone(),
            author_followers: ev.author_followers,
            author_following: ev.author_following,
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}
