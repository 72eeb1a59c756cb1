//! Raw communication records and account identifiers.

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

/// Canonical account identifier (lowercased email address or handle).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    /// Canonicalizes `raw` and wraps it. Fails on identifiers that are empty
    /// after canonicalization.
    pub fn new(raw: &str) -> Result<Self> {
        let canon = canonicalize(raw);
        if canon.is_empty() {
            return Err(Error::InvalidInput(format!("empty account identifier {raw:?}")));
        }
        Ok(NodeId(canon))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Trim, drop a display name (`Name <addr>`), strip leading `@`, lowercase.
pub fn canonicalize(raw: &str) -> String {
    let mut s = raw.trim();
    if let (Some(open), Some(close)) = (s.rfind('<'), s.rfind('>')) {
        if open < close {
            s = s[open + 1..close].trim();
        }
    }
    let s = s.trim_start_matches('@').trim();
    s.to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Email,
    Micropost,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Email => "email",
            Channel::Micropost => "micropost",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "email" | "email_csv" => Ok(Channel::Email),
            "micropost" | "micropost_jsonl" => Ok(Channel::Micropost),
            other => Err(Error::InvalidInput(format!("unknown channel {other:?}"))),
        }
    }
}

/// One timestamped communication.
///
/// For micropost events `recipients` holds the mentioned handles; reply and
/// retweet targets are resolved through `in_reply_to` / `retweet_of` when
/// the graph is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageEvent {
    pub message_id: String,
    pub timestamp: Timestamp,
    pub sender: NodeId,
    pub recipients: Vec<NodeId>,
    pub channel: Channel,
    pub in_reply_to: Option<String>,
    pub retweet_of: Option<String>,
    pub subject_text: Option<String>,
    pub body_text: Option<String>,
    pub author_followers: Option<u64>,
    pub author_following: Option<u64>,
}

impl MessageEvent {
    /// Recipients other than the sender, first occurrence order.
    pub fn targets(&self) -> impl Iterator<Item = &NodeId> {
        self.recipients.iter().filter(move |r| **r != self.sender)
    }

    /// Text used for per-message semantic scoring: body, else subject.
    pub fn text(&self) -> Option<&str> {
        self.body_text
            .as_deref()
            .filter(|t| !t.trim().is_empty())
            .or(self.subject_text.as_deref().filter(|t| !t.trim().is_empty()))
    }
}

/// Sorts by (timestamp, message_id); the id is the documented tie-break.
pub fn sort_events(events: &mut [MessageEvent]) {
    events.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.message_id.cmp(&b.message_id))
    });
}

pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    let s = s.trim();
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.timestamp())
        .or_else(|_| {
            chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
                .map(|t| t.and_utc().timestamp())
        })
        .map_err(|_| Error::InvalidInput(format!("unparseable timestamp {s:?}")))
}

pub fn format_timestamp(ts: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| ts.to_string())
}
