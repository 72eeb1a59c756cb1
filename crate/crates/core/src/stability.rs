//! The removal experiment: measure the full network, apply every plan,
//! measure again and correlate.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Channel, MessageEvent, NodeId};
use crate::global::{global_from_summary, global_metrics, GlobalMetrics, GlobalOptions};
use crate::graph::{build_graph, CommGraph};
use crate::node::{measure_nodes, Metric, NodeMeasurement, NodeMetricRecord, NodeMetricsConfig};
use crate::removal::{reduce_events, select_nodes, RemovalPlan, Selection};
use crate::report::fmt_sig;
use crate::spam::{detect_spammers, Labels, SpamThresholds};
use crate::stats::{correlate, Correlation};
use crate::text::SentimentScorer;

pub const DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityConfig {
    pub window: i64,
    pub horizon: i64,
    pub symmetrize_distances: bool,
    pub spam: SpamThresholds,
}

impl StabilityConfig {
    /// 30-day windows and a 14-day horizon for email; 7 and 7 days for
    /// microposts.
    pub fn for_channel(channel: Channel) -> Self {
        let (window, horizon) = match channel {
            Channel::Email => (30 * DAY, 14 * DAY),
            Channel::Micropost => (7 * DAY, 7 * DAY),
        };
        StabilityConfig {
            window,
            horizon,
            symmetrize_distances: false,
            spam: SpamThresholds::default(),
        }
    }

    pub fn node_config(&self) -> NodeMetricsConfig {
        NodeMetricsConfig {
            window: self.window,
            horizon: self.horizon,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub config: serde_json::Value,
    /// `full` first, then plans in declared order; absent when the reduced
    /// graph could not be measured.
    pub global_metrics: IndexMap<String, Option<GlobalMetrics>>,
    pub node_correlations: IndexMap<String, Option<IndexMap<String, Correlation>>>,
    pub selection_sizes: IndexMap<String, Option<usize>>,
    pub flags: Vec<String>,
}

impl StabilityReport {
    pub fn correlation(&self, plan: &str, metric: Metric) -> Option<&Correlation> {
        self.node_correlations.get(plan)?.as_ref()?.get(metric.key())
    }

    pub fn global(&self, plan: &str) -> Option<&GlobalMetrics> {
        self.global_metrics.get(plan)?.as_ref()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::report::to_report_json(self)
    }

    /// One row per (plan, metric), metrics in table order.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["plan", "metric", "pearson_r", "spearman_rho", "p_value", "n_pairs", "flag"])?;
        let cell = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        for (plan, corr) in &self.node_correlations {
            for m in Metric::ALL {
                let c = corr.as_ref().and_then(|c| c.get(m.key()));
                let flag = match c {
                    None => "plan_failed".to_string(),
                    Some(c) => c.flag.map(|f| f.as_str().to_string()).unwrap_or_default(),
                };
                wtr.write_record([
                    plan.as_str(),
                    m.key(),
                    &cell(c.and_then(|c| c.pearson_r)),
                    &cell(c.and_then(|c| c.spearman_rho)),
                    &cell(c.and_then(|c| c.p_value)),
                    &c.map(|c| c.n_pairs.to_string()).unwrap_or_default(),
                    &flag,
                ])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

/// The report plus per-node metrics for the full network and every plan.
pub struct Experiment {
    pub report: StabilityReport,
    pub spammers: BTreeSet<NodeId>,
    pub node_metrics: IndexMap<String, Option<Vec<NodeMetricRecord>>>,
}

/// Measurement of one reduced network, shared by every plan that selects
/// the same node set.
struct Reduced {
    records: Vec<NodeMetricRecord>,
    global: Option<GlobalMetrics>,
    flags: Vec<String>,
}

fn metric_values(records: &[NodeMetricRecord], m: Metric) -> BTreeMap<NodeId, f64> {
    records
        .iter()
        .filter_map(|r| Some((r.node.clone(), r.value(m)?)))
        .collect()
}

fn globals(g: &CommGraph, m: &NodeMeasurement, cfg: &StabilityConfig) -> Result<GlobalMetrics> {
    if cfg.symmetrize_distances {
        global_metrics(g, GlobalOptions { symmetrize_distances: true })
    } else {
        global_from_summary(g, &m.paths)
    }
}

/// Correlates each metric of `full` against `reduced` over the nodes of `reduced`.
pub fn correlate_records(full: &[NodeMetricRecord], reduced: &[NodeMetricRecord]) -> IndexMap<String, Correlation> {
    let surviving: BTreeSet<NodeId> = reduced.iter().map(|r| r.node.clone()).collect();
    Metric::ALL
        .iter()
        .map(|&m| {
            let c = correlate(&metric_values(full, m), &metric_values(reduced, m), &surviving);
            (m.key().to_string(), c)
        })
        .collect()
}

fn measure_reduced(
    g: &CommGraph,
    events: &[MessageEvent],
    removed: &BTreeSet<NodeId>,
    span: (i64, i64),
    cfg: &StabilityConfig,
    scorer: &dyn SentimentScorer,
) -> std::result::Result<Reduced, String> {
    let reduced = g.without(removed);
    if reduced.is_empty() {
        return Err("every node removed".into());
    }
    let reduced_events = reduce_events(events, removed);
    let m = measure_nodes(&reduced, &reduced_events, Some(span), &cfg.node_config(), scorer)
        .map_err(|e| format!("measurement failed: {e}"))?;
    let mut flags = Vec::new();
    let global = globals(&reduced, &m, cfg)
        .map_err(|e| flags.push(format!("global metrics failed: {e}")))
        .ok();
    Ok(Reduced {
        records: m.records,
        global,
        flags,
    })
}

/// Runs every plan against `events`. Plans are evaluated concurrently and
/// merged in declared order, so output does not depend on thread count.
pub fn run_experiment(
    events: &[MessageEvent],
    channel: Channel,
    plans: &[RemovalPlan],
    cfg: &StabilityConfig,
    labels: Option<&Labels>,
    scorer: &dyn SentimentScorer,
) -> Result<Experiment> {
    if plans.is_empty() {
        return Err(Error::Config("no removal plans given".into()));
    }
    cfg.spam.validate()?;
    let g = build_graph(events, channel);
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let span = (
        events.iter().map(|e| e.timestamp).min().unwrap_or(0),
        events.iter().map(|e| e.timestamp).max().unwrap_or(0),
    );
    let classification = detect_spammers(events, &g, labels, &cfg.spam);
    let spammers = classification.spammers();
    let full = measure_nodes(&g, events, Some(span), &cfg.node_config(), scorer)?;

    let mut flags = classification.warnings.clone();
    if full.oscillation_series_too_short {
        flags.push("fewer than three windows: betweenness oscillations are all zero".into());
    }
    if g.dangling_refs() > 0 {
        flags.push(format!("{} unresolved reply or retweet references", g.dangling_refs()));
    }

    let selections: Vec<Result<Selection>> = plans.iter().map(|p| select_nodes(&g, p, Some(&spammers))).collect();
    // Distinct non-empty node sets, measured once each. An empty selection
    // reuses the full measurement.
    let mut distinct: Vec<&BTreeSet<NodeId>> = Vec::new();
    for sel in selections.iter().flatten() {
        if !sel.nodes.is_empty() && !distinct.contains(&&sel.nodes) {
            distinct.push(&sel.nodes);
        }
    }
    let measured: Vec<std::result::Result<Reduced, String>> = distinct
        .par_iter()
        .map(|set| measure_reduced(&g, events, set, span, cfg, scorer))
        .collect();

    let mut report = StabilityReport {
        config: serde_json::to_value(cfg)?,
        global_metrics: IndexMap::new(),
        node_correlations: IndexMap::new(),
        selection_sizes: IndexMap::new(),
        flags,
    };
    let full_global = globals(&g, &full, cfg)?;
    report.global_metrics.insert("full".into(), Some(full_global));
    let mut node_metrics = IndexMap::new();
    for (plan, sel) in plans.iter().zip(&selections) {
        let name = plan.to_string();
        let sel = match sel {
            Ok(sel) => sel,
            Err(e) => {
                report.flags.push(format!("{name}: selection failed: {e}"));
                report.global_metrics.insert(name.clone(), None);
                report.node_correlations.insert(name.clone(), None);
                report.selection_sizes.insert(name.clone(), None);
                node_metrics.insert(name, None);
                continue;
            }
        };
        if !sel.skipped.is_empty() {
            report.flags.push(format!("{name}: {} listed nodes not in graph", sel.skipped.len()));
        }
        report.selection_sizes.insert(name.clone(), Some(sel.nodes.len()));
        let outcome = if sel.nodes.is_empty() {
            Ok((&full.records, Some(full_global)))
        } else {
            let k = distinct.iter().position(|s| **s == sel.nodes).expect("every selection was measured");
            match &measured[k] {
                Ok(r) => {
                    report.flags.extend(r.flags.iter().map(|f| format!("{name}: {f}")));
                    Ok((&r.records, r.global))
                }
                Err(e) => Err(e),
            }
        };
        match outcome {
            Ok((records, global)) => {
                report.global_metrics.insert(name.clone(), global);
                report
                    .node_correlations
                    .insert(name.clone(), Some(correlate_records(&full.records, records)));
                node_metrics.insert(name, Some(records.clone()));
            }
            Err(e) => {
                report.flags.push(format!("{name}: {e}"));
                report.global_metrics.insert(name.clone(), None);
                report.node_correlations.insert(name.clone(), None);
                node_metrics.insert(name, None);
            }
        }
    }
    node_metrics.insert_before(0, "full".to_string(), Some(full.records));
    Ok(Experiment {
        report,
        spammers,
        node_metrics,
    })
}
