//! Rule-based spammer identification.
//!
//! Criteria (email uses A–C and needs two; micropost uses A–D and needs three):
//!
//! * A: high volume. Email: the account's sent count sits at or above the
//!   configured percentile of the activity distribution. Micropost: the same
//!   volume test, or posts spread over at least `active_hour_bins` distinct
//!   hours of the day.
//! * B: receives at most `min_received_nonspam` messages from accounts not
//!   currently classified as spam.
//! * C: manually labelled spam; for microposts also when at least
//!   `url_fraction` of the account's posts carry a link.
//! * D (micropost): following ≥ `follow_ratio` × max(followers, 1).
//!
//! B refers to the spam set itself, so classification iterates to a fixed
//! point. A, C and D never change between iterations and B can only switch
//! on as the spam set grows, so the spam set is monotone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Channel, MessageEvent, NodeId};
use crate::graph::{author_index, induced_targets, CommGraph};
use crate::node::{contribution_index_from, message_counts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpamThresholds {
    pub high_volume_percentile: f64,
    pub min_received_nonspam: u64,
    pub follow_ratio: f64,
    pub active_hour_bins: u32,
    pub ci_screen: f64,
    pub max_fixed_point_iters: u32,
    pub url_fraction: f64,
}

impl Default for SpamThresholds {
    fn default() -> Self {
        SpamThresholds {
            high_volume_percentile: 99.0,
            min_received_nonspam: 1,
            follow_ratio: 10.0,
            active_hour_bins: 20,
            ci_screen: 0.8,
            max_fixed_point_iters: 5,
            url_fraction: 0.8,
        }
    }
}

impl SpamThresholds {
    pub fn validate(&self) -> Result<()> {
        let p = self.high_volume_percentile;
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::Config(format!("high_volume_percentile {p} outside (0, 100]")));
        }
        if self.follow_ratio.is_nan() || self.follow_ratio <= 1.0 {
            return Err(Error::Config(format!("follow_ratio {} must exceed 1", self.follow_ratio)));
        }
        if !(1..=24).contains(&self.active_hour_bins) {
            return Err(Error::Config(format!("active_hour_bins {} outside 1..=24", self.active_hour_bins)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spam,
    Ham,
}

/// Manual labels keyed by canonical node id.
#[derive(Debug, Clone, Default)]
pub struct Labels(pub BTreeMap<NodeId, Label>);

impl Labels {
    /// Reads `node_id,label` CSV with label ∈ {spam, ham}.
    pub fn read<R: Read>(r: R) -> Result<Labels> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut out = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let (Some(id), Some(label)) = (rec.get(0), rec.get(1)) else {
                return Err(Error::InvalidInput(format!("labels row {}: expected node_id,label", i + 2)));
            };
            let label = match label.to_ascii_lowercase().as_str() {
                "spam" => Label::Spam,
                "ham" => Label::Ham,
                other => return Err(Error::InvalidInput(format!("labels row {}: unknown label {other:?}", i + 2))),
            };
            out.insert(NodeId::new(id)?, label);
        }
        Ok(Labels(out))
    }

    pub fn load(path: &Path) -> Result<Labels> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Labels::read(f)
    }
}

/// The condition-count rule: email needs two of A–C, micropost three of A–D.
pub fn is_spammer(satisfied: &BTreeSet<Criterion>, channel: Channel) -> bool {
    match channel {
        Channel::Email => satisfied.iter().filter(|c| **c != Criterion::D).count() >= 2,
        Channel::Micropost => satisfied.len() >= 3,
    }
}

fn has_url(text: &str) -> bool {
    let t = text.to_ascii_lowercase();
    t.contains("http://") || t.contains("https://") || t.contains("www.")
}

/// Accounts whose value reaches the `pct` percentile rank: at least
/// `pct`% of all accounts have a strictly smaller value. At 100 nobody
/// qualifies.
pub fn high_volume_set(activity: &BTreeMap<&NodeId, u64>, pct: f64) -> BTreeSet<NodeId> {
    let mut sorted: Vec<u64> = activity.values().copied().collect();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    activity
        .iter()
        .filter(|(_, &v)| {
            let below = sorted.partition_point(|&x| x < v) as f64;
            v > 0 && below >= pct / 100.0 * n
        })
        .map(|(id, _)| (*id).clone())
        .collect()
}

/// Precomputed per-account evidence; only criterion B depends on the spam set.
pub struct SpamEvidence {
    channel: Channel,
    nodes: Vec<NodeId>,
    fixed: BTreeMap<NodeId, BTreeSet<Criterion>>,
    /// receiver → sender → messages.
    received_from: HashMap<NodeId, BTreeMap<NodeId, u64>>,
    min_received_nonspam: u64,
    pub unknown_labels: usize,
}

impl SpamEvidence {
    pub fn new(events: &[MessageEvent], graph: &CommGraph, labels: Option<&Labels>, t: &SpamThresholds) -> SpamEvidence {
        let channel = graph.channel();
        let authors = author_index(events);
        let mut sent: BTreeMap<&NodeId, u64> = graph.nodes().iter().map(|id| (id, 0)).collect();
        let mut hours: HashMap<&NodeId, u32> = HashMap::new();
        let mut urls: HashMap<&NodeId, u64> = HashMap::new();
        let mut follow: HashMap<&NodeId, (u64, u64)> = HashMap::new();
        let mut received_from: HashMap<NodeId, BTreeMap<NodeId, u64>> = HashMap::new();
        for ev in events {
            *sent.entry(&ev.sender).or_default() += 1;
            let hour = ev.timestamp.rem_euclid(86_400) / 3600;
            *hours.entry(&ev.sender).or_default() |= 1 << hour;
            if ev.text().is_some_and(has_url) {
                *urls.entry(&ev.sender).or_default() += 1;
            }
            if let (Some(fol), Some(fing)) = (ev.author_followers, ev.author_following) {
                follow.insert(&ev.sender, (fol, fing));
            }
            for target in induced_targets(ev, channel, &authors).0 {
                *received_from
                    .entry(target.clone())
                    .or_default()
                    .entry(ev.sender.clone())
                    .or_default() += 1;
            }
        }
        let volume = high_volume_set(&sent, t.high_volume_percentile);
        let mut unknown_labels = 0;
        if let Some(l) = labels {
            unknown_labels = l.0.keys().filter(|id| !sent.contains_key(id)).count();
        }
        let fixed = sent
            .iter()
            .map(|(&id, &count)| {
                let mut s = BTreeSet::new();
                let busy_hours = hours.get(id).map_or(0, |h| h.count_ones());
                let a = volume.contains(id)
                    || (channel == Channel::Micropost && count > 0 && busy_hours >= t.active_hour_bins);
                if a {
                    s.insert(Criterion::A);
                }
                let labelled = labels.and_then(|l| l.0.get(id)) == Some(&Label::Spam);
                let linky = channel == Channel::Micropost
                    && count > 0
                    && urls.get(id).copied().unwrap_or(0) as f64 >= t.url_fraction * count as f64;
                if labelled || linky {
                    s.insert(Criterion::C);
                }
                if channel == Channel::Micropost {
                    if let Some(&(followers, following)) = follow.get(id) {
                        if following as f64 >= t.follow_ratio * followers.max(1) as f64 {
                            s.insert(Criterion::D);
                        }
                    }
                }
                (id.clone(), s)
            })
            .collect::<BTreeMap<_, _>>();
        SpamEvidence {
            channel,
            nodes: fixed.keys().cloned().collect(),
            fixed,
            received_from,
            min_received_nonspam: t.min_received_nonspam,
            unknown_labels,
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    /// Satisfied criteria for every account given the current spam set.
    pub fn criteria(&self, spam: &BTreeSet<NodeId>) -> BTreeMap<NodeId, BTreeSet<Criterion>> {
        self.nodes
            .iter()
            .map(|id| {
                let mut s = self.fixed[id].clone();
                let legit: u64 = self.received_from.get(id).map_or(0, |from| {
                    from.iter()
                        .filter(|(sender, _)| !spam.contains(*sender))
                        .map(|(_, n)| n)
                        .sum()
                });
                if legit <= self.min_received_nonspam {
                    s.insert(Criterion::B);
                }
                (id.clone(), s)
            })
            .collect()
    }
}

/// Evaluates the criteria with an empty spam set.
pub fn evaluate_criteria(
    events: &[MessageEvent],
    graph: &CommGraph,
    labels: Option<&Labels>,
    thresholds: &SpamThresholds,
) -> BTreeMap<NodeId, BTreeSet<Criterion>> {
    SpamEvidence::new(events, graph, labels, thresholds).criteria(&BTreeSet::new())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpamVerdict {
    pub node: NodeId,
    pub satisfied: BTreeSet<Criterion>,
    pub is_spammer: bool,
    /// Iteration (1-based) in which this node's criteria last changed.
    pub iteration_fixed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdicts: Vec<SpamVerdict>,
    pub iterations: u32,
    pub converged: bool,
    /// Spam set after each iteration.
    pub history: Vec<BTreeSet<NodeId>>,
    pub warnings: Vec<String>,
}

impl Classification {
    pub fn spammers(&self) -> BTreeSet<NodeId> {
        self.history.last().cloned().unwrap_or_default()
    }
}

/// Iterates criterion B against the growing spam set until it is stable or
/// `max_iters` is reached.
pub fn classify(evidence: &SpamEvidence, max_iters: u32) -> Classification {
    let mut spam = BTreeSet::new();
    let mut history = Vec::new();
    let mut last: Option<BTreeMap<NodeId, BTreeSet<Criterion>>> = None;
    let mut changed_at: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut converged = false;
    let mut iter = 0;
    let cap = max_iters.max(1);
    while iter < cap {
        iter += 1;
        let crit = evidence.criteria(&spam);
        for (id, s) in &crit {
            if last.as_ref().map(|l| &l[id]) != Some(s) {
                changed_at.insert(id.clone(), iter);
            }
        }
        let next: BTreeSet<NodeId> = crit
            .iter()
            .filter(|(_, s)| is_spammer(s, evidence.channel))
            .map(|(id, _)| id.clone())
            .collect();
        last = Some(crit);
        history.push(next.clone());
        if next == spam {
            converged = true;
            break;
        }
        spam = next;
    }
    let mut warnings = Vec::new();
    if !converged {
        warnings.push(format!("spam fixed point not reached within {cap} iterations"));
    }
    if evidence.unknown_labels > 0 {
        warnings.push(format!("{} labels name unknown accounts", evidence.unknown_labels));
    }
    let crit = last.unwrap_or_default();
    let verdicts = crit
        .into_iter()
        .map(|(id, satisfied)| SpamVerdict {
            is_spammer: is_spammer(&satisfied, evidence.channel),
            iteration_fixed: changed_at.get(&id).copied().unwrap_or(1),
            node: id,
            satisfied,
        })
        .collect();
    Classification {
        verdicts,
        iterations: iter,
        converged,
        history,
        warnings,
    }
}

pub fn detect_spammers(
    events: &[MessageEvent],
    graph: &CommGraph,
    labels: Option<&Labels>,
    thresholds: &SpamThresholds,
) -> Classification {
    let ev = SpamEvidence::new(events, graph, labels, thresholds);
    classify(&ev, thresholds.max_fixed_point_iters)
}

/// Accounts with contribution index ≥ `ci_screen` and high-volume activity.
/// Advisory only; never feeds classification.
pub fn ci_screen(events: &[MessageEvent], channel: Channel, t: &SpamThresholds) -> Vec<NodeId> {
    let counts = message_counts(events, channel);
    let activity: BTreeMap<&NodeId, u64> = counts.iter().map(|(id, c)| (id, c.sent)).collect();
    let volume = high_volume_set(&activity, t.high_volume_percentile);
    let mut out: Vec<NodeId> = volume
        .into_iter()
        .filter(|id| {
            let c = counts[id];
            contribution_index_from(c.sent, c.received).is_some_and(|ci| ci >= t.ci_screen)
        })
        .collect();
    out.sort();
    out
}

/// `node_id,satisfied_criteria,is_spammer,iterations`
pub fn write_verdicts<W: std::io::Write>(verdicts: &[SpamVerdict], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["node_id", "satisfied_criteria", "is_spammer", "iterations"])?;
    for v in verdicts {
        let crit: String = v.satisfied.iter().map(|c| c.to_string()).collect();
        wtr.write_record([
            v.node.as_str(),
            &crit,
            if v.is_spammer { "true" } else { "false" },
            &v.iteration_fixed.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}
