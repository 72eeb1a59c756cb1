//! Node-removal plans and the reduced graphs and event streams they produce.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::event::{Channel, MessageEvent, NodeId};
use crate::graph::CommGraph;

#[derive(Debug, Clone, PartialEq)]
pub enum RemovalPlan {
    Spammers,
    Bottom,
    TopPercentile(f64),
    TopPercentilePlusBottom(f64),
    SpammersPlusBottom,
    Custom { path: PathBuf, nodes: Vec<NodeId> },
}

/// The seven plans of the standard experiment grid.
pub const DEFAULT_PLANS: &str = "spammers,bottom,top1,top5,top10,top1+bottom,spammers+bottom";

fn parse_pct(s: &str, whole: &str) -> Result<f64> {
    let p: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("plan {whole:?}: bad percentile {s:?}")))?;
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::Config(format!("plan {whole:?}: percentile must lie in (0, 100)")));
    }
    Ok(p)
}

/// Reads one node id per line; blank lines and `#` comments are skipped.
pub fn read_node_list(path: &Path) -> Result<Vec<NodeId>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(NodeId::new)
        .collect()
}

impl RemovalPlan {
    /// Parses `spammers | bottom | top<p> | top<p>+bottom | spammers+bottom |
    /// custom:<file>`. Custom lists are read immediately.
    pub fn parse(s: &str) -> Result<RemovalPlan> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if let Some(path) = s.strip_prefix("custom:") {
            let path = PathBuf::from(path);
            let nodes = read_node_list(&path)?;
            return Ok(RemovalPlan::Custom { path, nodes });
        }
        match lower.as_str() {
            "spammers" => return Ok(RemovalPlan::Spammers),
            "bottom" => return Ok(RemovalPlan::Bottom),
            "spammers+bottom" => return Ok(RemovalPlan::SpammersPlusBottom),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("top") {
            return match rest.strip_suffix("+bottom") {
                Some(p) => Ok(RemovalPlan::TopPercentilePlusBottom(parse_pct(p, s)?)),
                None => Ok(RemovalPlan::TopPercentile(parse_pct(rest, s)?)),
            };
        }
        Err(Error::Config(format!("unknown removal plan {s:?}")))
    }

    /// Parses a comma-separated list, rejecting duplicates.
    pub fn parse_list(s: &str) -> Result<Vec<RemovalPlan>> {
        let mut plans: Vec<RemovalPlan> = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let plan = RemovalPlan::parse(part)?;
            if plans.iter().any(|p| p.to_string() == plan.to_string()) {
                return Err(Error::Config(format!("plan {plan} listed twice")));
            }
            plans.push(plan);
        }
        if plans.is_empty() {
            return Err(Error::Config("no removal plans given".into()));
        }
        Ok(plans)
    }

    pub fn needs_verdicts(&self) -> bool {
        matches!(self, RemovalPlan::Spammers | RemovalPlan::SpammersPlusBottom)
    }
}

impl fmt::Display for RemovalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RemovalPlan::Spammers => f.write_str("spammers"),
            RemovalPlan::Bottom => f.write_str("bottom"),
            RemovalPlan::TopPercentile(p) => write!(f, "top{p}"),
            RemovalPlan::TopPercentilePlusBottom(p) => write!(f, "top{p}+bottom"),
            RemovalPlan::SpammersPlusBottom => f.write_str("spammers+bottom"),
            RemovalPlan::Custom { path, .. } => write!(f, "custom:{}", path.display()),
        }
    }
}

impl Serialize for RemovalPlan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Selection {
    pub nodes: BTreeSet<NodeId>,
    /// Custom-list entries that are not in the graph.
    pub skipped: Vec<NodeId>,
}

/// Isolates and degree-1 nodes.
pub fn bottom_nodes(g: &CommGraph) -> BTreeSet<NodeId> {
    (0..g.node_count() as u32)
        .filter(|&v| g.degree(v) <= 1)
        .map(|v| g.node(v).clone())
        .collect()
}

/// Every node whose total degree reaches that of the node at rank
/// ⌈p·n/100⌉ in descending degree order. Ties at the cutoff are included.
pub fn top_percentile_nodes(g: &CommGraph, p: f64) -> BTreeSet<NodeId> {
    let n = g.node_count();
    if n == 0 {
        return BTreeSet::new();
    }
    let mut degrees: Vec<usize> = (0..n as u32).map(|v| g.degree(v)).collect();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let k = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    let cutoff = degrees[k - 1];
    (0..n as u32)
        .filter(|&v| g.degree(v) >= cutoff)
        .map(|v| g.node(v).clone())
        .collect()
}

/// Resolves a plan to a node set. Spammer plans need `spammers`.
pub fn select_nodes(g: &CommGraph, plan: &RemovalPlan, spammers: Option<&BTreeSet<NodeId>>) -> Result<Selection> {
    let spam = || {
        spammers
            .map(|s| s.iter().filter(|id| g.contains(id)).cloned().collect::<BTreeSet<_>>())
            .ok_or_else(|| Error::MissingVerdicts(plan.to_string()))
    };
    let nodes = match plan {
        RemovalPlan::Spammers => spam()?,
        RemovalPlan::Bottom => bottom_nodes(g),
        RemovalPlan::TopPercentile(p) => top_percentile_nodes(g, *p),
        RemovalPlan::TopPercentilePlusBottom(p) => {
            let mut s = top_percentile_nodes(g, *p);
            s.extend(bottom_nodes(g));
            s
        }
        RemovalPlan::SpammersPlusBottom => {
            let mut s = spam()?;
            s.extend(bottom_nodes(g));
            s
        }
        RemovalPlan::Custom { nodes, .. } => {
            let (present, skipped): (Vec<&NodeId>, Vec<&NodeId>) = nodes.iter().partition(|id| g.contains(id));
            let mut skipped: Vec<NodeId> = skipped.into_iter().cloned().collect();
            skipped.sort();
            skipped.dedup();
            return Ok(Selection {
                nodes: present.into_iter().cloned().collect(),
                skipped,
            });
        }
    };
    Ok(Selection {
        nodes,
        skipped: Vec::new(),
    })
}

pub fn remove(g: &CommGraph, nodes: &BTreeSet<NodeId>) -> CommGraph {
    g.without(nodes)
}

/// The event stream of the reduced network. Events sent by removed accounts
/// are dropped; removed recipients are stripped from the rest. An email left
/// without recipients is dropped; a micropost survives with fewer mentions.
pub fn reduce_events(events: &[MessageEvent], removed: &BTreeSet<NodeId>) -> Vec<MessageEvent> {
    if removed.is_empty() {
        return events.to_vec();
    }
    events
        .iter()
        .filter(|ev| !removed.contains(&ev.sender))
        .filter_map(|ev| {
            let mut ev = ev.clone();
            let before = ev.recipients.len();
            ev.recipients.retain(|r| !removed.contains(r));
            let emptied = before > 0 && ev.recipients.is_empty();
            (!(ev.channel == Channel::Email && emptied)).then_some(ev)
        })
        .collect()
}
