//! Synthetic scale-free networks and message streams with planted spammers.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, Zipf};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{sort_events, Channel, MessageEvent, NodeId, Timestamp};
use crate::graph::CommGraph;
use crate::text::Lexicon;

/// 2020-01-01T00:00:00Z
pub const DEFAULT_START: Timestamp = 1_577_836_800;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n: usize,
    pub m_attach: usize,
    pub reciprocation_prob: f64,
    pub spammer_count: usize,
    pub spammer_volume_multiplier: f64,
    /// Recipients per spam message, drawn uniformly from this range.
    pub spam_recipients: (usize, usize),
    pub reply_prob: f64,
    /// Mean reply latency in seconds.
    pub reply_latency_mean: f64,
    pub nudge_prob: f64,
    /// Mean number of extra conversations per arc beyond the first.
    pub extra_conversations: f64,
    pub start: Timestamp,
    pub span_days: i64,
    pub channel: Channel,
    pub vocabulary: usize,
    /// Range of per-author Zipf exponents.
    pub vocab_skew: (f64, f64),
    /// Probability that a word is drawn from the sentiment lexicon.
    pub sentiment_word_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 2000,
            m_attach: 3,
            reciprocation_prob: 0.3,
            spammer_count: 10,
            spammer_volume_multiplier: 50.0,
            spam_recipients: (2, 4),
            reply_prob: 0.6,
            reply_latency_mean: 7200.0,
            nudge_prob: 0.2,
            extra_conversations: 1.0,
            start: DEFAULT_START,
            span_days: 365,
            channel: Channel::Email,
            vocabulary: 3000,
            vocab_skew: (1.05, 1.6),
            sentiment_word_prob: 0.12,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.m_attach < 1 || self.n <= self.m_attach {
            return bad(format!("need n > m_attach >= 1, got n={} m_attach={}", self.n, self.m_attach));
        }
        for (name, p) in [
            ("reciprocation_prob", self.reciprocation_prob),
            ("reply_prob", self.reply_prob),
            ("nudge_prob", self.nudge_prob),
            ("sentiment_word_prob", self.sentiment_word_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.nudge_prob >= 1.0 {
            return bad("nudge_prob must be below 1".into());
        }
        if self.spammer_count > self.n {
            return bad(format!("spammer_count {} exceeds n {}", self.spammer_count, self.n));
        }
        if self.spammer_volume_multiplier.is_nan() || self.spammer_volume_multiplier <= 1.0 {
            return bad("spammer_volume_multiplier must exceed 1".into());
        }
        let (lo, hi) = self.spam_recipients;
        if lo < 1 || hi < lo {
            return bad(format!("invalid spam recipient range {lo}..={hi}"));
        }
        if self.reply_latency_mean.is_nan() || self.reply_latency_mean <= 0.0 {
            return bad("reply_latency_mean must be positive".into());
        }
        if self.extra_conversations.is_nan() || self.extra_conversations < 0.0 {
            return bad("extra_conversations must be non-negative".into());
        }
        if self.span_days < 1 || self.vocabulary < 2 {
            return bad("span_days and vocabulary must be positive".into());
        }
        let (s0, s1) = self.vocab_skew;
        if !(s0 > 0.0 && s1 >= s0) {
            return bad(format!("invalid vocab_skew range {s0}..{s1}"));
        }
        Ok(())
    }
}

pub fn node_name(i: usize) -> NodeId {
    NodeId::new(&format!("n{i:05}")).expect("generated ids are valid")
}

/// Preferential attachment with kernel (total degree + 1). Node `i` sends
/// `min(m_attach, i)` arcs to distinct earlier nodes; every arc is
/// reciprocated with `reciprocation_prob`.
pub fn gen_scale_free(cfg: &SynthConfig) -> Result<CommGraph> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arcs = scale_free_arcs(cfg, &mut rng);
    let nodes: Vec<NodeId> = (0..cfg.n).map(node_name).collect();
    CommGraph::from_arcs(
        cfg.channel,
        &nodes,
        arcs.iter().map(|&(s, t)| (&nodes[s], &nodes[t], 1)),
    )
}

fn scale_free_arcs(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    // Each node appears once for the +1 term and once per incident arc end.
    let mut pool: Vec<usize> = Vec::with_capacity(cfg.n * (2 * cfg.m_attach + 1) * 2);
    let mut arcs = Vec::with_capacity(cfg.n * cfg.m_attach * 2);
    pool.push(0);
    let mut chosen: Vec<usize> = Vec::with_capacity(cfg.m_attach);
    for i in 1..cfg.n {
        chosen.clear();
        while chosen.len() < cfg.m_attach.min(i) {
            let t = pool[rng.random_range(0..pool.len())];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            arcs.push((i, t));
            pool.extend([i, t]);
            if rng.random::<f64>() < cfg.reciprocation_prob {
                arcs.push((t, i));
                pool.extend([i, t]);
            }
        }
        pool.push(i);
    }
    arcs
}

#[derive(Debug, Clone, Serialize)]
pub struct AuthorStyle {
    /// In [−1, 1]; positive authors favour positive sentiment words.
    pub valence_bias: f64,
    /// Zipf exponent of the author's word choice.
    pub vocab_skew: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    pub spammers: BTreeSet<NodeId>,
    pub reply_prob: f64,
    pub reply_latency_mean: f64,
    pub nudge_prob: f64,
    pub styles: BTreeMap<NodeId, AuthorStyle>,
}

impl GroundTruth {
    /// `node_id,label` rows for every generated node.
    pub fn write_labels<W: std::io::Write>(&self, nodes: &[NodeId], w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["node_id", "label"])?;
        for id in nodes {
            let label = if self.spammers.contains(id) { "spam" } else { "ham" };
            wtr.write_record([id.as_str(), label])?;
        }
        wtr.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// A deterministic pseudo-word vocabulary that avoids lexicon entries.
fn pseudo_vocabulary(size: usize, lexicon: &Lexicon) -> Vec<String> {
    let syllables: Vec<String> = ONSETS
        .iter()
        .flat_map(|o| VOWELS.iter().map(move |v| format!("{o}{v}")))
        .collect();
    let k = syllables.len();
    let mut out = Vec::with_capacity(size);
    let mut i = 0usize;
    while out.len() < size {
        let mut w = String::new();
        let mut x = i;
        loop {
            w.push_str(&syllables[x % k]);
            x /= k;
            if x == 0 {
                break;
            }
        }
        w.push_str(&syllables[(i * 7 + 3) % k]);
        if !lexicon.positive.contains(&w) && !lexicon.negative.contains(&w) {
            out.push(w);
        }
        i += 1;
    }
    out
}

struct TextGen {
    vocab: Vec<String>,
    positive: Vec<String>,
    negative: Vec<String>,
    sentiment_word_prob: f64,
}

impl TextGen {
    fn new(cfg: &SynthConfig) -> TextGen {
        let lex = Lexicon::default_lexicon();
        let sorted = |set: &HashSet<String>| {
            let mut v: Vec<String> = set.iter().cloned().collect();
            v.sort();
            v
        };
        TextGen {
            vocab: pseudo_vocabulary(cfg.vocabulary, &lex),
            positive: sorted(&lex.positive),
            negative: sorted(&lex.negative),
            sentiment_word_prob: cfg.sentiment_word_prob,
        }
    }

    fn text(&self, style: &AuthorStyle, zipf: &Zipf<f64>, words: usize, rng: &mut ChaCha8Rng) -> String {
        let mut out: Vec<&str> = Vec::with_capacity(words);
        for _ in 0..words {
            if rng.random::<f64>() < self.sentiment_word_prob {
                let pos = rng.random::<f64>() < (1.0 + style.valence_bias) / 2.0;
                let list = if pos { &self.positive } else { &self.negative };
                out.push(list.choose(rng).expect("lexicon lists are non-empty").as_str());
            } else {
                let rank = zipf.sample(rng) as usize;
                out.push(&self.vocab[(rank - 1).min(self.vocab.len() - 1)]);
            }
        }
        out.join(" ")
    }
}

struct Author {
    style: AuthorStyle,
    zipf: Zipf<f64>,
}

struct Builder<'a> {
    cfg: &'a SynthConfig,
    nodes: Vec<NodeId>,
    events: Vec<MessageEvent>,
    next_id: u64,
}

impl Builder<'_> {
    fn push(
        &mut self,
        t: Timestamp,
        from: usize,
        to: &[usize],
        in_reply_to: Option<String>,
        subject: String,
        body: String,
    ) -> String {
        let id = format!("m{:08}", self.next_id);
        self.next_id += 1;
        self.events.push(MessageEvent {
            message_id: id.clone(),
            timestamp: t,
            sender: self.nodes[from].clone(),
            recipients: to.iter().map(|&r| self.nodes[r].clone()).collect(),
            channel: self.cfg.channel,
            in_reply_to,
            retweet_of: None,
            subject_text: (self.cfg.channel == Channel::Email).then_some(subject),
            body_text: Some(body),
            author_followers: None,
            author_following: None,
        });
        id
    }
}

/// Generates a timestamped stream over the arcs of `graph`.
///
/// Conversations between a pair of accounts are laid out on one timeline,
/// one per slot, so unrelated conversations never interleave. Each opens
/// with a prompt, may be followed by nudges while unanswered and is
/// answered with `reply_prob` after an exponential latency. Spammers take
/// no part in conversations; they broadcast to uniformly chosen targets
/// and nobody writes back to them.
pub fn gen_message_stream(graph: &CommGraph, cfg: &SynthConfig) -> Result<(Vec<MessageEvent>, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let n = graph.node_count();
    let nodes: Vec<NodeId> = graph.nodes().to_vec();
    let text = TextGen::new(cfg);
    let authors: Vec<Author> = (0..n)
        .map(|_| {
            let style = AuthorStyle {
                valence_bias: rng.random_range(-1.0..=1.0),
                vocab_skew: rng.random_range(cfg.vocab_skew.0..=cfg.vocab_skew.1),
            };
            let zipf = Zipf::new(cfg.vocabulary as f64, style.vocab_skew).expect("validated skew");
            Author { style, zipf }
        })
        .collect();

    let spam_count = cfg.spammer_count.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let spam_idx: HashSet<usize> = order[..spam_count].iter().copied().collect();

    let span = cfg.span_days * 86_400;
    let extra = (cfg.extra_conversations > 0.0).then(|| Poisson::new(cfg.extra_conversations).expect("validated"));
    let latency = Exp::new(1.0 / cfg.reply_latency_mean).expect("validated");
    let mut b = Builder {
        cfg,
        nodes: nodes.clone(),
        events: Vec::new(),
        next_id: 0,
    };

    // Unordered pairs with the directed arcs they carry.
    let mut pairs: BTreeMap<(u32, u32), Vec<(usize, usize)>> = BTreeMap::new();
    for a in graph.arcs() {
        let (s, t) = (a.source as usize, a.target as usize);
        if spam_idx.contains(&s) || spam_idx.contains(&t) {
            continue;
        }
        pairs
            .entry((a.source.min(a.target), a.source.max(a.target)))
            .or_default()
            .push((s, t));
    }
    for arcs in pairs.values() {
        let mut convs: Vec<(usize, usize)> = Vec::new();
        for &arc in arcs {
            let k = 1 + extra.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
            convs.extend(std::iter::repeat_n(arc, k));
        }
        convs.shuffle(&mut rng);
        let slot = span / convs.len() as i64;
        for (k, &(u, v)) in convs.iter().enumerate() {
            let slot_start = cfg.start + k as i64 * slot;
            // Conversations occupy the first half of their slot.
            let budget = (slot / 2).max(2);
            let t0 = slot_start + rng.random_range(0..budget / 2);
            let limit = slot_start + budget;
            let (au, av) = (&authors[u], &authors[v]);
            let subject = text.text(&au.style, &au.zipf, rng.random_range(2..=6), &mut rng);
            let body = text.text(&au.style, &au.zipf, rng.random_range(8..=24), &mut rng);
            let prompt = b.push(t0, u, &[v], None, subject, body);
            let replied = rng.random::<f64>() < cfg.reply_prob;
            let reply_at = (t0 + 1 + latency.sample(&mut rng).round() as i64).min(limit);
            let mut nudges = 0;
            while rng.random::<f64>() < cfg.nudge_prob {
                nudges += 1;
            }
            let mut tn = t0;
            for _ in 0..nudges {
                tn = if replied {
                    rng.random_range(tn..reply_at)
                } else {
                    (tn + 1 + latency.sample(&mut rng).round() as i64).min(limit)
                };
                let subject = text.text(&au.style, &au.zipf, rng.random_range(2..=6), &mut rng);
                let body = text.text(&au.style, &au.zipf, rng.random_range(4..=12), &mut rng);
                b.push(tn, u, &[v], None, subject, body);
            }
            if replied {
                let subject = text.text(&av.style, &av.zipf, rng.random_range(2..=6), &mut rng);
                let body = text.text(&av.style, &av.zipf, rng.random_range(8..=24), &mut rng);
                b.push(reply_at.max(tn + 1), v, &[u], Some(prompt), subject, body);
            }
        }
    }

    let mut activity = vec![0u64; n];
    for ev in &b.events {
        activity[graph.index_of(&ev.sender).expect("own node") as usize] += 1;
    }
    let mut sent: Vec<u64> = (0..n).filter(|i| !spam_idx.contains(i)).map(|i| activity[i]).collect();
    sent.sort_unstable();
    let median = sent.get(sent.len() / 2).copied().unwrap_or(1).max(1) as f64;
    let volume = (cfg.spammer_volume_multiplier * median).round() as usize;
    let mut spammers: Vec<usize> = spam_idx.iter().copied().collect();
    spammers.sort_unstable();
    let others: Vec<usize> = (0..n).filter(|i| !spam_idx.contains(i)).collect();
    for &s in &spammers {
        for k in 0..volume {
            let want = rng.random_range(cfg.spam_recipients.0..=cfg.spam_recipients.1).min(others.len());
            let to: Vec<usize> = others.choose_multiple(&mut rng, want).copied().collect();
            if to.is_empty() {
                break;
            }
            let t = cfg.start + rng.random_range(0..span);
            let offer = text.vocab[rng.random_range(0..text.vocab.len())].clone();
            let subject = format!("{offer} offer {k}");
            let body = format!("claim your {offer} today at http://{offer}.example/deal/{k} limited offer");
            b.push(t, s, &to, None, subject, body);
        }
    }

    if cfg.channel == Channel::Micropost {
        let mut follow = vec![(0u64, 0u64); n];
        for (i, f) in follow.iter_mut().enumerate() {
            *f = if spam_idx.contains(&i) {
                (rng.random_range(0..50), rng.random_range(2000..8000))
            } else {
                let base = (graph.in_degree(i as u32) as u64 + 1) * 10;
                (base + rng.random_range(0..50), base + rng.random_range(0..50))
            };
        }
        for ev in &mut b.events {
            let i = graph.index_of(&ev.sender).expect("own node") as usize;
            ev.author_followers = Some(follow[i].0);
            ev.author_following = Some(follow[i].1);
        }
    }

    let mut events = b.events;
    sort_events(&mut events);
    let truth = GroundTruth {
        spammers: spammers.iter().map(|&i| nodes[i].clone()).collect(),
        reply_prob: cfg.reply_prob,
        reply_latency_mean: cfg.reply_latency_mean,
        nudge_prob: cfg.nudge_prob,
        styles: nodes.iter().cloned().zip(authors.into_iter().map(|a| a.style)).collect(),
    };
    Ok((events, truth))
}

/// Graph and stream in one call.
pub fn generate(cfg: &SynthConfig) -> Result<(CommGraph, Vec<MessageEvent>, GroundTruth)> {
    let g = gen_scale_free(cfg)?;
    let (events, truth) = gen_message_stream(&g, cfg)?;
    Ok((g, events, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn small(n: usize, m: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n,
            m_attach: m,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn tiny_graph_arc_count_and_determinism() {
        let cfg = SynthConfig {
            spammer_count: 0,
            ..small(5, 1, 7)
        };
        let a = gen_scale_free(&cfg).unwrap();
        let b = gen_scale_free(&cfg).unwrap();
        assert_eq!(a, b);
        let reciprocated = a.arcs().iter().filter(|x| a.out_neighbors(x.target).contains(&x.source)).count() / 2;
        assert_eq!(a.arc_count(), 4 + reciprocated);
    }

    #[test]
    fn full_reciprocation() {
        let cfg = SynthConfig {
            reciprocation_prob: 1.0,
            ..small(200, 2, 3)
        };
        let g = gen_scale_free(&cfg).unwrap();
        for a in g.arcs() {
            assert!(g.out_neighbors(a.target).contains(&a.source));
        }
    }

    #[test]
    fn heavy_tail() {
        let mut hits = 0;
        for seed in 0..20 {
            let g = gen_scale_free(&small(2000, 3, seed)).unwrap();
            let mut d: Vec<usize> = (0..g.node_count() as u32).map(|v| g.degree(v)).collect();
            d.sort_unstable();
            if d[d.len() - 1] >= 5 * d[d.len() / 2] {
                hits += 1;
            }
        }
        assert!(hits >= 18, "{hits}");
    }

    #[test]
    fn invalid_configs() {
        assert!(gen_scale_free(&small(3, 3, 0)).is_err());
        assert!(gen_scale_free(&small(3, 0, 0)).is_err());
        let cfg = SynthConfig {
            reply_prob: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stream_is_deterministic_and_spammers_get_no_mail() {
        let cfg = small(300, 3, 11);
        let (_, e1, t1) = generate(&cfg).unwrap();
        let (_, e2, _) = generate(&cfg).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(t1.spammers.len(), 10);
        for ev in &e1 {
            assert!(ev.recipients.iter().all(|r| !t1.spammers.contains(r)));
        }
        let g = build_graph(&e1, Channel::Email);
        assert!(g.node_count() > 250);
    }

    #[test]
    fn no_spammers() {
        let cfg = SynthConfig {
            spammer_count: 0,
            ..small(100, 2, 1)
        };
        let (_, events, truth) = generate(&cfg).unwrap();
        assert!(truth.spammers.is_empty());
        assert!(events.iter().all(|e| !e.body_text.as_deref().unwrap_or("").contains("http://")));
    }

    #[test]
    fn pseudo_words_avoid_lexicon() {
        let lex = Lexicon::default_lexicon();
        let v = pseudo_vocabulary(5000, &lex);
        assert_eq!(v.iter().collect::<HashSet<_>>().len(), 5000);
        assert!(v.iter().all(|w| !lex.positive.contains(w) && !lex.negative.contains(w)));
    }
}
