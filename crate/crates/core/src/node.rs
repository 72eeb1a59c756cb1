//! Node-level metrics and the per-node metric record.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::event::{Channel, MessageEvent, NodeId, Timestamp};
use crate::graph::{author_index, induced_targets, window_slices_between, CommGraph, SnapshotSeries};
use crate::paths::{shortest_path_summary, PathSummary};
use crate::response::{interaction_stats, pair_responses};
use crate::text::{author_semantics, CorpusModel, SentimentScorer};

/// The thirteen row metrics, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AlterArt,
    EgoArt,
    AlterNudges,
    EgoNudges,
    Activity,
    ContributionIndex,
    Betweenness,
    BetweennessOscillations,
    Closeness,
    Degree,
    Sentiment,
    Emotionality,
    Complexity,
}

impl Metric {
    pub const ALL: [Metric; 13] = [
        Metric::AlterArt,
        Metric::EgoArt,
        Metric::AlterNudges,
        Metric::EgoNudges,
        Metric::Activity,
        Metric::ContributionIndex,
        Metric::Betweenness,
        Metric::BetweennessOscillations,
        Metric::Closeness,
        Metric::Degree,
        Metric::Sentiment,
        Metric::Emotionality,
        Metric::Complexity,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::AlterArt => "alter_art",
            Metric::EgoArt => "ego_art",
            Metric::AlterNudges => "alter_nudges",
            Metric::EgoNudges => "ego_nudges",
            Metric::Activity => "activity",
            Metric::ContributionIndex => "contribution_index",
            Metric::Betweenness => "betweenness",
            Metric::BetweennessOscillations => "betweenness_oscillations",
            Metric::Closeness => "closeness",
            Metric::Degree => "degree",
            Metric::Sentiment => "sentiment",
            Metric::Emotionality => "emotionality",
            Metric::Complexity => "complexity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeMetricRecord {
    pub node: NodeId,
    pub degree: u32,
    pub in_degree: u32,
    pub out_degree: u32,
    pub closeness: f64,
    pub betweenness: f64,
    pub betweenness_oscillations: u32,
    pub activity: u64,
    pub messages_received: u64,
    pub contribution_index: Option<f64>,
    /// Seconds.
    pub ego_art: Option<f64>,
    /// Seconds.
    pub alter_art: Option<f64>,
    pub ego_nudges: Option<f64>,
    pub alter_nudges: Option<f64>,
    pub sentiment: Option<f64>,
    pub emotionality: Option<f64>,
    /// Bits per token.
    pub complexity: Option<f64>,
}

impl NodeMetricRecord {
    pub fn value(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::AlterArt => self.alter_art,
            Metric::EgoArt => self.ego_art,
            Metric::AlterNudges => self.alter_nudges,
            Metric::EgoNudges => self.ego_nudges,
            Metric::Activity => Some(self.activity as f64),
            Metric::ContributionIndex => self.contribution_index,
            Metric::Betweenness => Some(self.betweenness),
            Metric::BetweennessOscillations => Some(self.betweenness_oscillations as f64),
            Metric::Closeness => Some(self.closeness),
            Metric::Degree => Some(self.degree as f64),
            Metric::Sentiment => self.sentiment,
            Metric::Emotionality => self.emotionality,
            Metric::Complexity => self.complexity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeCentrality {
    pub in_degree: u32,
    pub out_degree: u32,
    pub total: u32,
}

pub fn degree_centrality(g: &CommGraph) -> Vec<DegreeCentrality> {
    (0..g.node_count() as u32)
        .map(|v| DegreeCentrality {
            in_degree: g.in_degree(v) as u32,
            out_degree: g.out_degree(v) as u32,
            total: g.degree(v) as u32,
        })
        .collect()
}

/// Reachability-scaled closeness: (r/(n−1))·(r/Σd) with r nodes reachable.
pub fn closeness_from_parts(reach: u32, dist_sum: u64, n: usize) -> f64 {
    if reach == 0 || n < 2 {
        return 0.0;
    }
    let r = reach as f64;
    (r / (n - 1) as f64) * (r / dist_sum as f64)
}

pub fn closeness_centrality(g: &CommGraph) -> Vec<f64> {
    closeness_from_summary(&shortest_path_summary(g, false), g.node_count())
}

pub fn closeness_from_summary(s: &PathSummary, n: usize) -> Vec<f64> {
    s.reach
        .iter()
        .zip(&s.dist_sum)
        .map(|(&r, &d)| closeness_from_parts(r, d, n))
        .collect()
}

/// Raw directed betweenness, indexed like `g.nodes()`.
pub fn betweenness_centrality(g: &CommGraph) -> Vec<f64> {
    crate::paths::betweenness(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Oscillations {
    pub count: u32,
    pub series_too_short: bool,
}

/// Interior strict local extrema after collapsing runs of equal values.
pub fn count_oscillations(series: &[f64]) -> Oscillations {
    if series.len() < 3 {
        return Oscillations {
            count: 0,
            series_too_short: true,
        };
    }
    let mut collapsed: Vec<f64> = Vec::with_capacity(series.len());
    for &x in series {
        if collapsed.last() != Some(&x) {
            collapsed.push(x);
        }
    }
    let count = collapsed
        .windows(3)
        .filter(|w| (w[1] > w[0] && w[1] > w[2]) || (w[1] < w[0] && w[1] < w[2]))
        .count() as u32;
    Oscillations {
        count,
        series_too_short: false,
    }
}

/// Per-window betweenness for each node of `nodes` (0 where absent).
pub fn betweenness_series(series: &SnapshotSeries, nodes: &[NodeId]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; series.windows.len()]; nodes.len()];
    let pos: HashMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();
    for (k, w) in series.windows.iter().enumerate() {
        if w.graph.arc_count() == 0 {
            continue;
        }
        let bc = betweenness_centrality(&w.graph);
        for (idx, id) in w.graph.nodes().iter().enumerate() {
            if let Some(&i) = pos.get(id) {
                out[i][k] = bc[idx];
            }
        }
    }
    out
}

pub fn betweenness_oscillations(series: &SnapshotSeries, node: &NodeId) -> Oscillations {
    count_oscillations(&betweenness_series(series, std::slice::from_ref(node))[0])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MessageCounts {
    pub sent: u64,
    pub received: u64,
}

/// Messages sent (events authored) and received (events inducing an arc
/// to the node) per account.
pub fn message_counts(events: &[MessageEvent], rule: Channel) -> HashMap<NodeId, MessageCounts> {
    let authors = author_index(events);
    let mut out: HashMap<NodeId, MessageCounts> = HashMap::new();
    for ev in events {
        out.entry(ev.sender.clone()).or_default().sent += 1;
        for t in induced_targets(ev, rule, &authors).0 {
            out.entry(t.clone()).or_default().received += 1;
        }
    }
    out
}

pub fn activity(events: &[MessageEvent], node: &NodeId) -> u64 {
    events.iter().filter(|e| &e.sender == node).count() as u64
}

/// (S − R)/(S + R); `None` when both are zero.
pub fn contribution_index_from(sent: u64, received: u64) -> Option<f64> {
    let total = sent + received;
    (total > 0).then(|| (sent as f64 - received as f64) / total as f64)
}

pub fn contribution_index(events: &[MessageEvent], rule: Channel, node: &NodeId) -> Option<f64> {
    let c = message_counts(events, rule).get(node).copied().unwrap_or_default();
    contribution_index_from(c.sent, c.received)
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeMetricsConfig {
    /// Snapshot window for oscillations, seconds.
    pub window: i64,
    /// Response pairing horizon, seconds.
    pub horizon: i64,
}

/// Everything computed for one (graph, event stream) measurement pass.
pub struct NodeMeasurement {
    pub records: Vec<NodeMetricRecord>,
    pub paths: PathSummary,
    pub oscillation_series_too_short: bool,
}

/// Computes all thirteen metrics for every node of `g`. Interaction and
/// semantic metrics come from `events`; windows span `[span.0, span.1]`.
pub fn measure_nodes(
    g: &CommGraph,
    events: &[MessageEvent],
    span: Option<(Timestamp, Timestamp)>,
    cfg: &NodeMetricsConfig,
    scorer: &dyn SentimentScorer,
) -> crate::Result<NodeMeasurement> {
    let rule = g.channel();
    let paths = shortest_path_summary(g, true);
    let n = g.node_count();
    let closeness = closeness_from_summary(&paths, n);

    let authors = author_index(events);
    let span = span.or_else(|| {
        let lo = events.iter().map(|e| e.timestamp).min()?;
        let hi = events.iter().map(|e| e.timestamp).max()?;
        Some((lo, hi))
    });
    let (osc, too_short) = match span {
        Some((lo, hi)) => {
            let series = window_slices_between(events, rule, cfg.window, lo, hi, &authors)?;
            let bs = betweenness_series(&series, g.nodes());
            let osc: Vec<Oscillations> = bs.iter().map(|s| count_oscillations(s)).collect();
            let short = osc.first().is_some_and(|o| o.series_too_short);
            (osc.into_iter().map(|o| o.count).collect(), short)
        }
        None => (vec![0; n], true),
    };

    let counts = message_counts(events, rule);
    let pairing = pair_responses(events, rule, cfg.horizon);
    let inter = interaction_stats(&pairing.pairs);
    let model = CorpusModel::from_events(events);
    let sem: BTreeMap<NodeId, _> = author_semantics(events, scorer, &model);

    let records = (0..n as u32)
        .map(|v| {
            let id = g.node(v);
            let c = counts.get(id).copied().unwrap_or_default();
            let i = inter.get(id).copied().unwrap_or_default();
            let s = sem.get(id);
            NodeMetricRecord {
                node: id.clone(),
                degree: g.degree(v) as u32,
                in_degree: g.in_degree(v) as u32,
                out_degree: g.out_degree(v) as u32,
                closeness: closeness[v as usize],
                betweenness: paths.betweenness[v as usize],
                betweenness_oscillations: osc[v as usize],
                activity: c.sent,
                messages_received: c.received,
                contribution_index: contribution_index_from(c.sent, c.received),
                ego_art: i.ego_art,
                alter_art: i.alter_art,
                ego_nudges: i.ego_nudges,
                alter_nudges: i.alter_nudges,
                sentiment: s.map(|s| s.sentiment),
                emotionality: s.map(|s| s.emotionality),
                complexity: s.map(|s| s.complexity),
            }
        })
        .collect();
    Ok(NodeMeasurement {
        records,
        paths,
        oscillation_series_too_short: too_short,
    })
}

/// CSV header: node id, the thirteen metrics in column order, then the
/// in/out degree split.
pub fn node_metrics_header() -> Vec<&'static str> {
    let mut h = vec!["node_id"];
    h.extend(Metric::ALL.iter().map(|m| m.key()));
    h.extend(["in_degree", "out_degree"]);
    h
}

/// Writes records as CSV; undefined values are empty cells.
pub fn write_node_metrics<W: std::io::Write>(records: &[NodeMetricRecord], w: W) -> crate::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(node_metrics_header())?;
    for r in records {
        let mut row = vec![r.node.to_string()];
        row.extend(
            Metric::ALL
                .iter()
                .map(|&m| r.value(m).map(crate::report::fmt_sig).unwrap_or_default()),
        );
        row.push(r.in_degree.to_string());
        row.push(r.out_degree.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| crate::Error::io("<output>", e))?;
    Ok(())
}
