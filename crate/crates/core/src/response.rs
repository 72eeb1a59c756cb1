//! Prompt/response pairing, average response times and nudges.
//!
//! Every (message, induced target) pair is a prompt from the sender to the
//! target. Unanswered prompts from A to B form a run; the next message from
//! B to A inside the horizon answers the run. An explicit `in_reply_to`
//! naming a prompt in the run selects that prompt, otherwise the earliest
//! unexpired prompt is used. Either way the whole run is closed.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::event::{Channel, MessageEvent, NodeId, Timestamp};
use crate::graph::{author_index, induced_targets};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResponsePair {
    pub prompt_id: String,
    pub response_id: String,
    pub prompter: NodeId,
    pub responder: NodeId,
    /// Seconds between prompt and response.
    pub latency: i64,
    /// Prompts in the run this response closed.
    pub run_length: u32,
}

impl ResponsePair {
    /// Extra pings beyond the first prompt.
    pub fn nudges(&self) -> u32 {
        self.run_length - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpenRun {
    pub prompter: NodeId,
    pub responder: NodeId,
    pub length: u32,
    /// True when the run was abandoned because the horizon passed, false
    /// when it was still open at the end of the corpus.
    pub expired: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Pairing {
    pub pairs: Vec<ResponsePair>,
    pub open_runs: Vec<OpenRun>,
}

struct Prompt<'a> {
    id: &'a str,
    at: Timestamp,
}

/// Pairs responses with prompts in one sweep over time-ordered events
/// (ties broken by message id). `horizon` is in seconds.
pub fn pair_responses(events: &[MessageEvent], rule: Channel, horizon: i64) -> Pairing {
    let authors = author_index(events);
    let mut order: Vec<&MessageEvent> = events.iter().collect();
    order.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.message_id.cmp(&b.message_id)));

    let mut runs: HashMap<(&NodeId, &NodeId), VecDeque<Prompt>> = HashMap::new();
    let mut out = Pairing::default();

    for ev in order {
        let (targets, _) = induced_targets(ev, rule, &authors);
        for &prompter in &targets {
            let Some(run) = runs.get_mut(&(prompter, &ev.sender)) else {
                continue;
            };
            let mut expired = 0;
            while run.front().is_some_and(|p| ev.timestamp - p.at > horizon) {
                run.pop_front();
                expired += 1;
            }
            if expired > 0 {
                out.open_runs.push(OpenRun {
                    prompter: prompter.clone(),
                    responder: ev.sender.clone(),
                    length: expired,
                    expired: true,
                });
            }
            if run.is_empty() {
                continue;
            }
            let prompt = ev
                .in_reply_to
                .as_deref()
                .and_then(|r| run.iter().find(|p| p.id == r))
                .unwrap_or(&run[0]);
            out.pairs.push(ResponsePair {
                prompt_id: prompt.id.to_string(),
                response_id: ev.message_id.clone(),
                prompter: prompter.clone(),
                responder: ev.sender.clone(),
                latency: ev.timestamp - prompt.at,
                run_length: run.len() as u32,
            });
            run.clear();
        }
        for &target in &targets {
            runs.entry((&ev.sender, target)).or_default().push_back(Prompt {
                id: &ev.message_id,
                at: ev.timestamp,
            });
        }
    }

    let remaining: BTreeMap<_, _> = runs.into_iter().filter(|(_, r)| !r.is_empty()).collect();
    for ((prompter, responder), run) in remaining {
        out.open_runs.push(OpenRun {
            prompter: prompter.clone(),
            responder: responder.clone(),
            length: run.len() as u32,
            expired: false,
        });
    }
    out
}

/// Per-node means over response pairs; `None` when the pair set is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct InteractionStats {
    /// Mean seconds the node takes to answer others.
    pub ego_art: Option<f64>,
    /// Mean seconds others take to answer the node.
    pub alter_art: Option<f64>,
    /// Mean extra pings the node sent before being answered.
    pub ego_nudges: Option<f64>,
    /// Mean extra pings others sent before the node answered.
    pub alter_nudges: Option<f64>,
}

#[derive(Default)]
struct Acc {
    sum: f64,
    n: u64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }
    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

pub fn interaction_stats(pairs: &[ResponsePair]) -> HashMap<NodeId, InteractionStats> {
    #[derive(Default)]
    struct Node {
        ego_art: Acc,
        alter_art: Acc,
        ego_nudges: Acc,
        alter_nudges: Acc,
    }
    let mut acc: HashMap<&NodeId, Node> = HashMap::new();
    for p in pairs {
        let r = acc.entry(&p.responder).or_default();
        r.ego_art.add(p.latency as f64);
        r.alter_nudges.add(p.nudges() as f64);
        let q = acc.entry(&p.prompter).or_default();
        q.alter_art.add(p.latency as f64);
        q.ego_nudges.add(p.nudges() as f64);
    }
    acc.into_iter()
        .map(|(id, a)| {
            (
                id.clone(),
                InteractionStats {
                    ego_art: a.ego_art.mean(),
                    alter_art: a.alter_art.mean(),
                    ego_nudges: a.ego_nudges.mean(),
                    alter_nudges: a.alter_nudges.mean(),
                },
            )
        })
        .collect()
}

/// (ego_art, alter_art) for one node, in seconds.
pub fn art(pairs: &[ResponsePair], node: &NodeId) -> (Option<f64>, Option<f64>) {
    let s = interaction_stats_for(pairs, node);
    (s.ego_art, s.alter_art)
}

/// (ego_nudges, alter_nudges) for one node.
pub fn nudges(pairs: &[ResponsePair], node: &NodeId) -> (Option<f64>, Option<f64>) {
    let s = interaction_stats_for(pairs, node);
    (s.ego_nudges, s.alter_nudges)
}

fn interaction_stats_for(pairs: &[ResponsePair], node: &NodeId) -> InteractionStats {
    let relevant: Vec<ResponsePair> = pairs
        .iter()
        .filter(|p| &p.prompter == node || &p.responder == node)
        .cloned()
        .collect();
    interaction_stats(&relevant).remove(node).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_support::{email, id};

    const H: i64 = 14 * 86_400;

    fn pairs(evs: &[MessageEvent]) -> Pairing {
        pair_responses(evs, Channel::Email, H)
    }

    #[test]
    fn single_reply() {
        let p = pairs(&[email("1", 0, "a", &["b"]), email("2", 3600, "b", &["a"])]);
        assert_eq!(p.pairs.len(), 1);
        assert_eq!((p.pairs[0].latency, p.pairs[0].run_length), (3600, 1));
        assert_eq!(art(&p.pairs, &id("b")), (Some(3600.0), None));
        assert_eq!(art(&p.pairs, &id("a")), (None, Some(3600.0)));
        assert_eq!(nudges(&p.pairs, &id("a")), (Some(0.0), None));
        assert_eq!(art(&p.pairs, &id("z")), (None, None));
    }

    #[test]
    fn fifo_run() {
        let p = pairs(&[
            email("1", 0, "a", &["b"]),
            email("2", 100, "a", &["b"]),
            email("3", 200, "b", &["a"]),
        ]);
        assert_eq!(p.pairs.len(), 1);
        assert_eq!(p.pairs[0].prompt_id, "1");
        assert_eq!((p.pairs[0].latency, p.pairs[0].run_length), (200, 2));
        assert_eq!(nudges(&p.pairs, &id("a")), (Some(1.0), None));
        assert_eq!(nudges(&p.pairs, &id("b")), (None, Some(1.0)));
    }

    #[test]
    fn horizon_boundary() {
        let p = pairs(&[email("1", 0, "a", &["b"]), email("2", H + 1, "b", &["a"])]);
        assert!(p.pairs.is_empty());
        assert!(p.open_runs.iter().any(|r| r.expired && r.length == 1));
        let p = pairs(&[email("1", 0, "a", &["b"]), email("2", H, "b", &["a"])]);
        assert_eq!(p.pairs.len(), 1);
    }

    #[test]
    fn explicit_reply_selects_prompt() {
        let mut reply = email("3", 500, "b", &["a"]);
        reply.in_reply_to = Some("2".into());
        let p = pairs(&[email("1", 0, "a", &["b"]), email("2", 100, "a", &["b"]), reply]);
        assert_eq!(p.pairs[0].prompt_id, "2");
        assert_eq!((p.pairs[0].latency, p.pairs[0].run_length), (400, 2));
    }

    #[test]
    fn equal_timestamps_use_id_tie_break() {
        let evs = vec![email("b", 0, "x", &["y"]), email("a", 0, "x", &["y"]), email("c", 5, "y", &["x"])];
        let mut rev = evs.clone();
        rev.reverse();
        let p = pairs(&evs);
        assert_eq!(p, pairs(&rev));
        assert_eq!(p.pairs[0].prompt_id, "a");
    }

    #[test]
    fn runs_are_conserved() {
        let evs = vec![
            email("1", 0, "a", &["b", "c"]),
            email("2", 10, "b", &["a"]),
            email("3", 20, "c", &["a", "b"]),
            email("4", 30, "a", &["c"]),
            email("5", H + 100, "b", &["c"]),
        ];
        let p = pairs(&evs);
        let closed: u32 = p.pairs.iter().map(|r| r.run_length).sum();
        let open: u32 = p.open_runs.iter().map(|r| r.length).sum();
        let prompts: usize = evs.iter().map(|e| e.targets().count()).sum();
        assert_eq!((closed + open) as usize, prompts);
    }
}
