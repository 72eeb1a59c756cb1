//! Sentiment, emotionality and complexity of message text.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Channel, MessageEvent, NodeId};
use crate::stats::{correlate_pairs, Correlation};

pub const DEFAULT_LEXICON: &str = include_str!("../data/default.lex");

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Valence in [0, 1]; 0.5 is neutral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct SentimentScore(f64);

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore(0.5);

    /// Clamps into [0, 1].
    pub fn new(v: f64) -> Self {
        SentimentScore(v.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// 2·|value − 0.5|, in [0, 1].
    pub fn emotionality(self) -> f64 {
        2.0 * (self.0 - 0.5).abs()
    }
}

pub trait SentimentScorer: Send + Sync {
    /// Recorded in reports.
    fn name(&self) -> &str;
    fn score(&self, text: &str) -> SentimentScore;
}

/// Always neutral.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeutralScorer;

impl SentimentScorer for NeutralScorer {
    fn name(&self) -> &str {
        "neutral"
    }
    fn score(&self, _text: &str) -> SentimentScore {
        SentimentScore::NEUTRAL
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub positive: HashSet<String>,
    pub negative: HashSet<String>,
}

impl Lexicon {
    /// Parses `[positive]` / `[negative]` sections with one token per line.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Lexicon> {
        let mut lex = Lexicon::default();
        let mut section: Option<bool> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[positive]" => section = Some(true),
                "[negative]" => section = Some(false),
                _ if line.starts_with('[') => {
                    return Err(Error::InvalidInput(format!("lexicon line {}: unknown section {line}", i + 1)))
                }
                token => {
                    let set = match section {
                        Some(true) => &mut lex.positive,
                        Some(false) => &mut lex.negative,
                        None => {
                            return Err(Error::InvalidInput(format!(
                                "lexicon line {}: token outside a section",
                                i + 1
                            )))
                        }
                    };
                    set.insert(token.to_lowercase());
                }
            }
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Lexicon> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text)
    }

    pub fn default_lexicon() -> Lexicon {
        Lexicon::parse(DEFAULT_LEXICON).expect("shipped lexicon parses")
    }
}

/// 0.5 + 0.5·(pos − neg)/max(pos + neg, 1) over token hits.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    name: String,
    lexicon: Lexicon,
}

impl LexiconScorer {
    pub fn new(name: impl Into<String>, lexicon: Lexicon) -> Self {
        LexiconScorer {
            name: name.into(),
            lexicon,
        }
    }
}

impl Default for LexiconScorer {
    fn default() -> Self {
        LexiconScorer::new("lexicon:default", Lexicon::default_lexicon())
    }
}

impl SentimentScorer for LexiconScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, text: &str) -> SentimentScore {
        let (mut pos, mut neg) = (0i64, 0i64);
        for tok in tokenize(text) {
            if self.lexicon.positive.contains(&tok) {
                pos += 1;
            } else if self.lexicon.negative.contains(&tok) {
                neg += 1;
            }
        }
        SentimentScore::new(0.5 + 0.5 * (pos - neg) as f64 / (pos + neg).max(1) as f64)
    }
}

pub fn sentiment(text: &str, scorer: &dyn SentimentScorer) -> SentimentScore {
    scorer.score(text)
}

/// Mean per-message emotionality; `None` for an empty list.
pub fn emotionality(scores: &[SentimentScore]) -> Option<f64> {
    (!scores.is_empty()).then(|| scores.iter().map(|s| s.emotionality()).sum::<f64>() / scores.len() as f64)
}

/// Population variance of the raw scores around their mean.
pub fn emotionality_variance(scores: &[SentimentScore]) -> Option<f64> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let m = scores.iter().map(|s| s.value()).sum::<f64>() / n;
    Some(scores.iter().map(|s| (s.value() - m).powi(2)).sum::<f64>() / n)
}

/// Unigram counts over the analyzed corpus with add-one smoothing.
#[derive(Debug, Clone, Default)]
pub struct CorpusModel {
    counts: HashMap<String, u64>,
    total: u64,
}

impl CorpusModel {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut m = CorpusModel::default();
        for t in texts {
            m.add(t);
        }
        m
    }

    pub fn add(&mut self, text: &str) {
        for tok in tokenize(text) {
            *self.counts.entry(tok).or_default() += 1;
            self.total += 1;
        }
    }

    /// Every subject and body in `events`.
    pub fn from_events(events: &[MessageEvent]) -> Self {
        CorpusModel::from_texts(
            events
                .iter()
                .flat_map(|e| [e.subject_text.as_deref(), e.body_text.as_deref()])
                .flatten(),
        )
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// (count + 1) / (total + V).
    pub fn probability(&self, token: &str) -> f64 {
        (self.count(token) + 1) as f64 / (self.total + self.counts.len() as u64).max(1) as f64
    }
}

/// Per-token smoothed probabilities, in text order.
pub fn token_probabilities(text: &str, model: &CorpusModel) -> Vec<(String, f64)> {
    tokenize(text)
        .into_iter()
        .map(|t| {
            let p = model.probability(&t);
            (t, p)
        })
        .collect()
}

/// Mean surprisal in bits, −(1/T)·Σ log₂ p(w); `None` without tokens.
pub fn complexity(text: &str, model: &CorpusModel) -> Option<f64> {
    let toks = tokenize(text);
    if toks.is_empty() {
        return None;
    }
    let bits: f64 = toks.iter().map(|t| -model.probability(t).log2()).sum();
    Some((bits / toks.len() as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MessageSemantics {
    pub sentiment: f64,
    pub emotionality: f64,
    pub complexity: f64,
}

pub fn message_semantics(text: &str, scorer: &dyn SentimentScorer, model: &CorpusModel) -> Option<MessageSemantics> {
    let c = complexity(text, model)?;
    let s = scorer.score(text);
    Some(MessageSemantics {
        sentiment: s.value(),
        emotionality: s.emotionality(),
        complexity: c,
    })
}

/// Author-level means of message-level semantics over each author's
/// messages with text.
pub fn author_semantics(
    events: &[MessageEvent],
    scorer: &dyn SentimentScorer,
    model: &CorpusModel,
) -> BTreeMap<NodeId, MessageSemantics> {
    let mut acc: BTreeMap<&NodeId, (MessageSemantics, usize)> = BTreeMap::new();
    for ev in events {
        let Some(m) = ev.text().and_then(|t| message_semantics(t, scorer, model)) else {
            continue;
        };
        let e = acc.entry(&ev.sender).or_insert((
            MessageSemantics {
                sentiment: 0.0,
                emotionality: 0.0,
                complexity: 0.0,
            },
            0,
        ));
        e.0.sentiment += m.sentiment;
        e.0.emotionality += m.emotionality;
        e.0.complexity += m.complexity;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(id, (s, n))| {
            let n = n as f64;
            (
                id.clone(),
                MessageSemantics {
                    sentiment: s.sentiment / n,
                    emotionality: s.emotionality / n,
                    complexity: s.complexity / n,
                },
            )
        })
        .collect()
}

/// Table column order: body/subject pairs of sentiment, complexity, emotionality.
pub const SEMANTIC_VARIABLES: [&str; 6] = [
    "body_sentiment",
    "subject_sentiment",
    "body_complexity",
    "subject_complexity",
    "body_emotionality",
    "subject_emotionality",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub variables: Vec<String>,
    pub n: usize,
    /// Row-major 6×6 Pearson coefficients; `None` where undefined.
    pub r: Vec<Vec<Option<f64>>>,
    pub p_value: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.r[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemanticReport {
    pub scorer: String,
    pub complexity_unit: &'static str,
    pub min_author_messages: usize,
    pub email_level: Option<CorrelationMatrix>,
    pub author_level: Option<CorrelationMatrix>,
    /// Mean variance-based emotionality reading over qualifying authors.
    pub emotionality_var: Option<f64>,
    pub flags: Vec<String>,
}

fn matrix(rows: &[[f64; 6]]) -> CorrelationMatrix {
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let cols: Vec<Vec<f64>> = (0..6).map(col).collect();
    let mut r = vec![vec![None; 6]; 6];
    let mut p = vec![vec![None; 6]; 6];
    for i in 0..6 {
        for j in 0..=i {
            let c: Correlation = correlate_pairs(&cols[i], &cols[j]);
            let (ri, pi) = if i == j && c.pearson_r.is_some() {
                (Some(1.0), Some(0.0))
            } else {
                (c.pearson_r, c.p_value)
            };
            r[i][j] = ri;
            r[j][i] = ri;
            p[i][j] = pi;
            p[j][i] = pi;
        }
    }
    CorrelationMatrix {
        variables: SEMANTIC_VARIABLES.iter().map(|s| s.to_string()).collect(),
        n: rows.len(),
        r,
        p_value: p,
    }
}

fn row(body: MessageSemantics, subject: MessageSemantics) -> [f64; 6] {
    [
        body.sentiment,
        subject.sentiment,
        body.complexity,
        subject.complexity,
        body.emotionality,
        subject.emotionality,
    ]
}

/// Correlates body and subject semantics at email level (each email with
/// both parts) and author level (authors with at least `min_author_msgs`
/// such emails, using per-author means).
pub fn subject_body_correlation(
    events: &[MessageEvent],
    scorer: &dyn SentimentScorer,
    model: &CorpusModel,
    min_author_msgs: usize,
) -> SemanticReport {
    let mut email_rows: Vec<[f64; 6]> = Vec::new();
    let mut by_author: BTreeMap<&NodeId, Vec<[f64; 6]>> = BTreeMap::new();
    let mut by_author_scores: BTreeMap<&NodeId, Vec<SentimentScore>> = BTreeMap::new();
    for ev in events.iter().filter(|e| e.channel == Channel::Email) {
        let (Some(body), Some(subject)) = (ev.body_text.as_deref(), ev.subject_text.as_deref()) else {
            continue;
        };
        let (Some(b), Some(s)) = (
            message_semantics(body, scorer, model),
            message_semantics(subject, scorer, model),
        ) else {
            continue;
        };
        let r = row(b, s);
        email_rows.push(r);
        by_author.entry(&ev.sender).or_default().push(r);
        by_author_scores
            .entry(&ev.sender)
            .or_default()
            .push(SentimentScore::new(b.sentiment));
    }
    let mut flags = Vec::new();
    let email_level = if email_rows.len() >= crate::stats::MIN_PAIRS {
        Some(matrix(&email_rows))
    } else {
        flags.push(format!("email_level: only {} qualifying emails", email_rows.len()));
        None
    };
    let qualifying: Vec<&NodeId> = by_author
        .iter()
        .filter(|(_, rows)| rows.len() >= min_author_msgs)
        .map(|(id, _)| *id)
        .collect();
    let author_rows: Vec<[f64; 6]> = qualifying
        .iter()
        .map(|id| {
            let rows = &by_author[id];
            let mut m = [0.0; 6];
            for r in rows {
                for k in 0..6 {
                    m[k] += r[k];
                }
            }
            m.map(|v| v / rows.len() as f64)
        })
        .collect();
    let author_level = if author_rows.len() >= crate::stats::MIN_PAIRS {
        Some(matrix(&author_rows))
    } else {
        flags.push(format!("author_level: only {} qualifying authors", author_rows.len()));
        None
    };
    let vars: Vec<f64> = qualifying
        .iter()
        .filter_map(|id| emotionality_variance(&by_author_scores[id]))
        .collect();
    SemanticReport {
        scorer: scorer.name().to_string(),
        complexity_unit: "bits",
        min_author_messages: min_author_msgs,
        email_level,
        author_level,
        emotionality_var: (!vars.is_empty()).then(|| vars.iter().sum::<f64>() / vars.len() as f64),
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_support::email;

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("Hello, WORLD-wide 42x!"), vec!["hello", "world", "wide", "42x"]);
        assert!(tokenize(" ,.; ").is_empty());
    }

    #[test]
    fn lexicon_sentiment() {
        let s = LexiconScorer::default();
        assert_eq!(sentiment("", &s).value(), 0.5);
        assert_eq!(sentiment("the quarterly figures", &s).value(), 0.5);
        assert_eq!(sentiment("great thanks", &s).value(), 1.0);
        assert_eq!(sentiment("bad problem", &s).value(), 0.0);
    }

    #[test]
    fn golden_fixture_sentence() {
        // pos: great, thanks, helpful (3); neg: delay, problem (2) → 0.5 + 0.5·1/5.
        let s = LexiconScorer::default();
        let v = sentiment("Great news, thanks for the helpful update despite the delay and the problem.", &s);
        assert_eq!(v.value(), 0.6);
    }

    #[test]
    fn lexicon_parse_errors() {
        assert!(Lexicon::parse("good\n").is_err());
        assert!(Lexicon::parse("[neutral]\nx\n").is_err());
        let lex = Lexicon::parse("# c\n[positive]\nYay\n\n[negative]\nboo\n").unwrap();
        assert!(lex.positive.contains("yay") && lex.negative.contains("boo"));
    }

    #[test]
    fn emotionality_cases() {
        let s = |v: f64| SentimentScore::new(v);
        assert_eq!(emotionality(&[s(0.5), s(0.5)]), Some(0.0));
        assert_eq!(emotionality(&[s(0.0), s(1.0)]), Some(1.0));
        assert_eq!(emotionality(&[s(0.5), s(1.0)]), Some(0.5));
        assert_eq!(emotionality(&[]), None);
    }

    #[test]
    fn single_type_corpus_has_zero_complexity() {
        let m = CorpusModel::from_texts(["a a a a"]);
        assert_eq!(m.vocabulary_size(), 1);
        assert_eq!(complexity("a a a a", &m), Some(0.0));
        assert_eq!(complexity("", &m), None);
    }

    #[test]
    fn uniform_corpus_approaches_log_v() {
        let text: String = (0..8).map(|i| format!("w{i} ")).collect::<String>().repeat(5000);
        let m = CorpusModel::from_texts([text.as_str()]);
        let c = complexity("w3", &m).unwrap();
        assert!((c - 3.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn rare_token_is_more_complex() {
        let m = CorpusModel::from_texts(["meeting meeting meeting budget", "meeting meeting synergy"]);
        // 7 tokens, 3 types: p(meeting) = 6/10, p(synergy) = 2/10
        let rare = complexity("synergy", &m).unwrap();
        let common = complexity("meeting", &m).unwrap();
        assert!((rare - 5.0f64.log2()).abs() < 1e-12);
        assert!((common - (10.0f64 / 6.0).log2()).abs() < 1e-12);
        assert!(rare > common);
    }

    fn styled(mid: &str, from: &str, subject: &str, body: &str) -> MessageEvent {
        let mut e = email(mid, 0, from, &["z"]);
        e.subject_text = Some(subject.into());
        e.body_text = Some(body.into());
        e
    }

    #[test]
    fn identical_subject_and_body_correlate_perfectly() {
        let texts = ["great thanks", "bad problem delay", "meeting agenda notes", "budget review good great", "issue late great great"];
        let evs: Vec<MessageEvent> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| styled(&i.to_string(), &format!("u{}", i % 2), t, t))
            .collect();
        let scorer = LexiconScorer::default();
        let model = CorpusModel::from_events(&evs);
        let rep = subject_body_correlation(&evs, &scorer, &model, 3);
        let m = rep.email_level.unwrap();
        assert_eq!(m.n, 5);
        for (b, s) in [(0, 1), (2, 3), (4, 5)] {
            assert!((m.get(b, s).unwrap() - 1.0).abs() < 1e-12);
        }
        for i in 0..6 {
            assert_eq!(m.get(i, i), Some(1.0));
            for j in 0..6 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert!(rep.author_level.is_none());
        assert_eq!(rep.flags.len(), 1);
    }

    #[test]
    fn author_means_are_exact() {
        let evs = vec![
            styled("1", "a", "x", "great"),
            styled("2", "a", "x", "bad"),
            styled("3", "b", "x", "ok"),
        ];
        let model = CorpusModel::from_events(&evs);
        let scorer = LexiconScorer::default();
        let per = author_semantics(&evs, &scorer, &model);
        let a = per[&NodeId::new("a").unwrap()];
        assert_eq!(a.sentiment, 0.5);
        assert_eq!(a.emotionality, 1.0);
        let ca = (complexity("great", &model).unwrap() + complexity("bad", &model).unwrap()) / 2.0;
        assert_eq!(a.complexity, ca);
        let neutral = author_semantics(&evs, &NeutralScorer, &model);
        assert!(neutral.values().all(|s| s.emotionality == 0.0));
    }
}
