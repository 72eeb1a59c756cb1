//! Immutable directed interaction graphs.
//!
//! Nodes are stored sorted by identifier, so node indices (`u32`) are
//! deterministic for a given node set. Adjacency is kept in CSR form in both
//! directions; every metric kernel runs on these slices.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Channel, MessageEvent, NodeId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub source: u32,
    pub target: u32,
    /// Number of messages inducing this ordered pair.
    pub weight: u64,
    pub first: Timestamp,
    pub last: Timestamp,
}

#[derive(Debug, Clone)]
pub struct CommGraph {
    channel: Channel,
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, u32>,
    arcs: Vec<Arc>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
    dangling_refs: usize,
}

impl PartialEq for CommGraph {
    fn eq(&self, other: &Self) -> bool {
        self.channel == other.channel && self.nodes == other.nodes && self.arcs == other.arcs
    }
}

/// Looks up the author of a referenced message.
pub type AuthorIndex<'a> = HashMap<&'a str, &'a NodeId>;

pub fn author_index(events: &[MessageEvent]) -> AuthorIndex<'_> {
    events
        .iter()
        .map(|e| (e.message_id.as_str(), &e.sender))
        .collect()
}

/// Accounts an event links its sender to under the channel's link rule,
/// de-duplicated, self excluded. The second value counts reply/retweet
/// references that could not be resolved.
///
/// Email: one target per recipient. Micropost: mentioned accounts, the
/// author of the replied-to post and the author of the retweeted post.
pub fn induced_targets<'a>(
    event: &'a MessageEvent,
    rule: Channel,
    authors: &AuthorIndex<'a>,
) -> (Vec<&'a NodeId>, usize) {
    let mut out: Vec<&NodeId> = Vec::with_capacity(event.recipients.len() + 1);
    let mut dangling = 0;
    let push = |id: &'a NodeId, out: &mut Vec<&'a NodeId>| {
        if *id != event.sender && !out.contains(&id) {
            out.push(id);
        }
    };
    for r in &event.recipients {
        push(r, &mut out);
    }
    if rule == Channel::Micropost {
        for reference in [&event.in_reply_to, &event.retweet_of].into_iter().flatten() {
            match authors.get(reference.as_str()) {
                Some(author) => push(author, &mut out),
                None => dangling += 1,
            }
        }
    }
    (out, dangling)
}

#[derive(Debug, Default)]
struct ArcAcc {
    weight: u64,
    first: Timestamp,
    last: Timestamp,
}

/// Aggregates events into a graph. Input order does not matter.
pub fn build_graph(events: &[MessageEvent], rule: Channel) -> CommGraph {
    let authors = author_index(events);
    build_graph_with(events, rule, &authors, None)
}

/// Builds from `events`, resolving references through `authors`. When
/// `extra_nodes` is given those accounts are added even if inactive.
pub(crate) fn build_graph_with<'a>(
    events: &'a [MessageEvent],
    rule: Channel,
    authors: &AuthorIndex<'a>,
    extra_nodes: Option<&[NodeId]>,
) -> CommGraph {
    let mut nodes: BTreeSet<&NodeId> = BTreeSet::new();
    if let Some(extra) = extra_nodes {
        nodes.extend(extra.iter());
    }
    let mut acc: BTreeMap<(&NodeId, &NodeId), ArcAcc> = BTreeMap::new();
    let mut dangling = 0;
    for ev in events {
        nodes.insert(&ev.sender);
        let (targets, d) = induced_targets(ev, rule, authors);
        dangling += d;
        for r in &ev.recipients {
            nodes.insert(r);
        }
        for t in targets {
            nodes.insert(t);
            let a = acc.entry((&ev.sender, t)).or_insert(ArcAcc {
                weight: 0,
                first: ev.timestamp,
                last: ev.timestamp,
            });
            a.weight += 1;
            a.first = a.first.min(ev.timestamp);
            a.last = a.last.max(ev.timestamp);
        }
    }
    let nodes: Vec<NodeId> = nodes.into_iter().cloned().collect();
    let index: HashMap<NodeId, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i as u32))
        .collect();
    let arcs = acc
        .into_iter()
        .map(|((s, t), a)| Arc {
            source: index[s],
            target: index[t],
            weight: a.weight,
            first: a.first,
            last: a.last,
        })
        .collect();
    let mut g = CommGraph::assemble(rule, nodes, index, arcs);
    g.dangling_refs = dangling;
    g
}

impl CommGraph {
    /// Builds a graph from node ids and `(source, target, weight)` triples.
    /// Self-loops are dropped and parallel arcs merged.
    pub fn from_arcs<'a>(
        channel: Channel,
        nodes: impl IntoIterator<Item = &'a NodeId>,
        arcs: impl IntoIterator<Item = (&'a NodeId, &'a NodeId, u64)>,
    ) -> Result<CommGraph> {
        let nodes: BTreeSet<&NodeId> = nodes.into_iter().collect();
        let nodes: Vec<NodeId> = nodes.into_iter().cloned().collect();
        let index: HashMap<NodeId, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let mut acc: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for (s, t, w) in arcs {
            let (Some(&si), Some(&ti)) = (index.get(s), index.get(t)) else {
                return Err(Error::InvalidInput(format!("arc {s}->{t} references an unknown node")));
            };
            if si != ti && w > 0 {
                *acc.entry((si, ti)).or_default() += w;
            }
        }
        let arcs = acc
            .into_iter()
            .map(|((source, target), weight)| Arc {
                source,
                target,
                weight,
                first: 0,
                last: 0,
            })
            .collect();
        Ok(CommGraph::assemble(channel, nodes, index, arcs))
    }

    /// `arcs` must be sorted by (source, target), loop-free and unique.
    fn assemble(channel: Channel, nodes: Vec<NodeId>, index: HashMap<NodeId, u32>, arcs: Vec<Arc>) -> CommGraph {
        let n = nodes.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for a in &arcs {
            out_offsets[a.source as usize + 1] += 1;
            in_offsets[a.target as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = arcs.iter().map(|a| a.target).collect();
        let mut in_sources = vec![0u32; arcs.len()];
        let mut fill = in_offsets.clone();
        for a in &arcs {
            let slot = &mut fill[a.target as usize];
            in_sources[*slot] = a.source;
            *slot += 1;
        }
        CommGraph {
            channel,
            nodes,
            index,
            arcs,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            dangling_refs: 0,
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, idx: u32) -> &NodeId {
        &self.nodes[idx as usize]
    }

    pub fn index_of(&self, id: &NodeId) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    /// Arcs sorted by (source, target).
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, source: &NodeId, target: &NodeId) -> Option<&Arc> {
        let (s, t) = (self.index_of(source)?, self.index_of(target)?);
        let lo = self.out_offsets[s as usize];
        let row = &self.arcs[lo..self.out_offsets[s as usize + 1]];
        row.binary_search_by_key(&t, |a| a.target).ok().map(|i| &row[i])
    }

    pub fn out_neighbors(&self, v: u32) -> &[u32] {
        &self.out_targets[self.out_offsets[v as usize]..self.out_offsets[v as usize + 1]]
    }

    pub fn in_neighbors(&self, v: u32) -> &[u32] {
        &self.in_sources[self.in_offsets[v as usize]..self.in_offsets[v as usize + 1]]
    }

    pub fn out_degree(&self, v: u32) -> usize {
        self.out_offsets[v as usize + 1] - self.out_offsets[v as usize]
    }

    pub fn in_degree(&self, v: u32) -> usize {
        self.in_offsets[v as usize + 1] - self.in_offsets[v as usize]
    }

    /// In-degree plus out-degree over distinct arcs.
    pub fn degree(&self, v: u32) -> usize {
        self.in_degree(v) + self.out_degree(v)
    }

    pub fn total_weight(&self) -> u64 {
        self.arcs.iter().map(|a| a.weight).sum()
    }

    /// Sum of incoming arc weights (messages received).
    pub fn in_weight(&self, v: u32) -> u64 {
        self.in_neighbors(v)
            .iter()
            .map(|&s| {
                let row = &self.arcs[self.out_offsets[s as usize]..self.out_offsets[s as usize + 1]];
                let i = row.binary_search_by_key(&v, |a| a.target).expect("CSR consistency");
                row[i].weight
            })
            .sum()
    }

    /// Reply or retweet references that named an unknown message.
    pub fn dangling_refs(&self) -> usize {
        self.dangling_refs
    }

    /// Sorted, de-duplicated union of in- and out-neighbors.
    pub fn undirected_neighbors(&self) -> Vec<Vec<u32>> {
        (0..self.node_count() as u32)
            .map(|v| {
                let mut nb: Vec<u32> = self
                    .out_neighbors(v)
                    .iter()
                    .chain(self.in_neighbors(v))
                    .copied()
                    .collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect()
    }

    /// Graph with every arc mirrored; used for symmetrized distances.
    pub fn symmetrized(&self) -> CommGraph {
        let mut acc: BTreeMap<(u32, u32), Arc> = BTreeMap::new();
        for a in &self.arcs {
            for (s, t) in [(a.source, a.target), (a.target, a.source)] {
                acc.entry((s, t))
                    .and_modify(|e| {
                        e.weight += a.weight;
                        e.first = e.first.min(a.first);
                        e.last = e.last.max(a.last);
                    })
                    .or_insert(Arc { source: s, target: t, ..*a });
            }
        }
        CommGraph::assemble(
            self.channel,
            self.nodes.clone(),
            self.index.clone(),
            acc.into_values().collect(),
        )
    }

    /// A new graph without `removed` and their incident arcs.
    pub fn without(&self, removed: &BTreeSet<NodeId>) -> CommGraph {
        let mut remap = vec![u32::MAX; self.node_count()];
        let mut nodes = Vec::with_capacity(self.node_count().saturating_sub(removed.len()));
        for (i, id) in self.nodes.iter().enumerate() {
            if !removed.contains(id) {
                remap[i] = nodes.len() as u32;
                nodes.push(id.clone());
            }
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let arcs = self
            .arcs
            .iter()
            .filter(|a| remap[a.source as usize] != u32::MAX && remap[a.target as usize] != u32::MAX)
            .map(|a| Arc {
                source: remap[a.source as usize],
                target: remap[a.target as usize],
                ..*a
            })
            .collect();
        CommGraph::assemble(self.channel, nodes, index, arcs)
    }
}

/// One contiguous time window and the graph of its events.
#[derive(Debug, Clone)]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
    pub graph: CommGraph,
}

#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    pub window_length: i64,
    pub windows: Vec<Window>,
}

/// Slices `events` into windows of `window_length` seconds starting at the
/// first event. The last window is closed so the final event is covered.
pub fn window_slices(events: &[MessageEvent], rule: Channel, window_length: i64) -> Result<SnapshotSeries> {
    let (Some(lo), Some(hi)) = (
        events.iter().map(|e| e.timestamp).min(),
        events.iter().map(|e| e.timestamp).max(),
    ) else {
        if window_length <= 0 {
            return Err(Error::Config("window length must be positive".into()));
        }
        return Ok(SnapshotSeries {
            window_length,
            windows: Vec::new(),
        });
    };
    window_slices_between(events, rule, window_length, lo, hi, &author_index(events))
}

/// Like [`window_slices`] but over an explicit `[origin, end]` span, so a
/// reduced stream can share the windows of its parent stream.
pub fn window_slices_between<'a>(
    events: &'a [MessageEvent],
    rule: Channel,
    window_length: i64,
    origin: Timestamp,
    end: Timestamp,
    authors: &AuthorIndex<'a>,
) -> Result<SnapshotSeries> {
    if window_length <= 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    let span = (end - origin).max(0);
    let count = ((span + window_length - 1) / window_length).max(1) as usize;
    let mut buckets: Vec<Vec<MessageEvent>> = vec![Vec::new(); count];
    for ev in events {
        let k = ((ev.timestamp - origin).max(0) / window_length) as usize;
        buckets[k.min(count - 1)].push(ev.clone());
    }
    let windows = buckets
        .iter()
        .enumerate()
        .map(|(k, evs)| {
            let start = origin + k as i64 * window_length;
            let end = if k + 1 == count { end.max(start) } else { start + window_length };
            Window {
                start,
                end,
                graph: build_graph_with(evs, rule, authors, None),
            }
        })
        .collect();
    Ok(SnapshotSeries {
        window_length,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionStats {
    pub min: usize,
    pub median: f64,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeSummary {
    pub total: DistributionStats,
    pub in_degree: DistributionStats,
    pub out_degree: DistributionStats,
    /// max / median of total degree; absent when the median is zero.
    pub tail_ratio: Option<f64>,
}

fn stats(mut v: Vec<usize>) -> DistributionStats {
    v.sort_unstable();
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    };
    DistributionStats {
        min: v[0],
        median,
        max: v[n - 1],
    }
}

pub fn degree_summary(g: &CommGraph) -> Result<DegreeSummary> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = g.node_count() as u32;
    let total = stats((0..n).map(|v| g.degree(v)).collect());
    let tail_ratio = (total.median > 0.0).then(|| total.max as f64 / total.median);
    Ok(DegreeSummary {
        total,
        in_degree: stats((0..n).map(|v| g.in_degree(v)).collect()),
        out_degree: stats((0..n).map(|v| g.out_degree(v)).collect()),
        tail_ratio,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    pub fn email(mid: &str, t: Timestamp, from: &str, to: &[&str]) -> MessageEvent {
        MessageEvent {
            message_id: mid.to_string(),
            timestamp: t,
            sender: id(from),
            recipients: to.iter().map(|r| id(r)).collect(),
            channel: Channel::Email,
            in_reply_to: None,
            retweet_of: None,
            subject_text: None,
            body_text: None,
            author_followers: None,
            author_following: None,
        }
    }

    pub fn digraph(nodes: &[&str], arcs: &[(&str, &str)]) -> CommGraph {
        let ids: Vec<NodeId> = nodes.iter().map(|s| id(s)).collect();
        let arcs: Vec<(NodeId, NodeId)> = arcs.iter().map(|(a, b)| (id(a), id(b))).collect();
        CommGraph::from_arcs(Channel::Email, &ids, arcs.iter().map(|(a, b)| (a, b, 1))).unwrap()
    }
}
