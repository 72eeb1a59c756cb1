//! Acceptance suite. Prints one `criterion N: PASS|FAIL - detail` line per
//! criterion and exits nonzero if any fails. Pass criterion numbers as
//! arguments to run a subset.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use netstab_core::global::{clustering_coefficient, global_metrics};
use netstab_core::node::{betweenness_centrality, contribution_index_from, measure_nodes, message_counts, Metric};
use netstab_core::removal::{reduce_events, RemovalPlan};
use netstab_core::spam::{ci_screen, classify, is_spammer, Criterion, Label, Labels, SpamEvidence, SpamThresholds};
use netstab_core::stability::{correlate_records, run_experiment, Experiment, StabilityConfig};
use netstab_core::synth::{generate, GroundTruth, SynthConfig};
use netstab_core::text::{subject_body_correlation, CorpusModel, LexiconScorer};
use netstab_core::{build_graph, Channel, MessageEvent, NodeId};
use rand::Rng;
use support::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct SeedRun {
    seed: u64,
    events: Vec<MessageEvent>,
    truth: GroundTruth,
    experiment: Experiment,
    elapsed: Duration,
}

fn default_plans() -> Vec<RemovalPlan> {
    RemovalPlan::parse_list(netstab_core::removal::DEFAULT_PLANS).unwrap()
}

/// The five default synthetic networks (n = 2000, m_attach = 3, 10 planted
/// spammers) with all default plans run on each.
fn seed_runs() -> &'static [SeedRun] {
    static RUNS: OnceLock<Vec<SeedRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        SEEDS
            .iter()
            .map(|&seed| {
                let cfg = SynthConfig {
                    n: 2000,
                    m_attach: 3,
                    spammer_count: 10,
                    seed,
                    ..Default::default()
                };
                let (_, events, truth) = generate(&cfg).unwrap();
                let start = Instant::now();
                let experiment = run_experiment(
                    &events,
                    Channel::Email,
                    &default_plans(),
                    &StabilityConfig::for_channel(Channel::Email),
                    None,
                    &LexiconScorer::default(),
                )
                .unwrap();
                SeedRun {
                    seed,
                    events,
                    truth,
                    experiment,
                    elapsed: start.elapsed(),
                }
            })
            .collect()
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut errors = Vec::new();
    for seed in 0..100 {
        errors.extend(check_betweenness(seed).err());
    }
    for seed in 1000..1100 {
        errors.extend(check_distances(seed).err());
    }
    for seed in 2000..2050 {
        errors.extend(check_clustering(seed).err());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = errors.is_empty() && secs < 60.0;
    let first = errors.first().cloned().unwrap_or_default();
    outcome(
        pass,
        format!("250 oracle graphs, {} mismatches, {secs:.2}s {first}", errors.len()),
    )
}

fn criterion_2() -> Outcome {
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    check("CI(9,1)", contribution_index_from(9, 1) == Some(0.8));
    check("CI(k,k)", (1..=50).all(|k| contribution_index_from(k, k) == Some(0.0)));
    check("CI(0,5)", contribution_index_from(0, 5) == Some(-1.0));
    check("CI(0,0)", contribution_index_from(0, 0).is_none());
    let path = graph(3, &[(0, 1), (1, 2)]);
    let m = global_metrics(&path, Default::default()).unwrap();
    check("path ADARP", m.adarp == 4.0 / 3.0);
    check("path diameter", m.diameter == 2);
    check("path B(b)", betweenness_centrality(&path)[1] == 1.0);
    let tri = graph(3, &[(0, 1), (1, 2), (2, 0)]);
    check("triangle CC", clustering_coefficient(&tri).unwrap() == 1.0);
    let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
    check("star CC", clustering_coefficient(&star).unwrap() == 0.0);
    outcome(bad.is_empty(), format!("9 fixtures, failing: {bad:?}"))
}

fn identity_check(channel: Channel, seed: u64) -> Result<String, String> {
    let cfg = SynthConfig {
        n: 600,
        channel,
        seed,
        ..Default::default()
    };
    let (_, events, _) = generate(&cfg).unwrap();
    let scfg = StabilityConfig::for_channel(channel);
    let scorer = LexiconScorer::default();
    let empty = RemovalPlan::Custom {
        path: "empty".into(),
        nodes: Vec::new(),
    };
    let name = empty.to_string();
    let exp = run_experiment(&events, channel, &[empty], &scfg, None, &scorer).map_err(|e| e.to_string())?;
    let report = &exp.report;
    if report.global(&name).is_none() || report.global(&name) != report.global("full") {
        return Err(format!("{channel:?}: global metrics differ under the empty plan"));
    }

    // Recompute independently through the removal path.
    let g = build_graph(&events, channel);
    let none = BTreeSet::new();
    let reduced = g.without(&none);
    let reduced_events = reduce_events(&events, &none);
    let span = (
        events.iter().map(|e| e.timestamp).min().unwrap(),
        events.iter().map(|e| e.timestamp).max().unwrap(),
    );
    let full = measure_nodes(&g, &events, Some(span), &scfg.node_config(), &scorer).map_err(|e| e.to_string())?;
    let again = measure_nodes(&reduced, &reduced_events, Some(span), &scfg.node_config(), &scorer)
        .map_err(|e| e.to_string())?;
    let gm_full = global_metrics(&g, Default::default()).map_err(|e| e.to_string())?;
    let gm_again = global_metrics(&reduced, Default::default()).map_err(|e| e.to_string())?;
    if gm_full != gm_again || Some(&gm_full) != report.global("full") {
        return Err(format!("{channel:?}: recomputed global metrics differ"));
    }

    let mut checked = 0;
    for (source, corr) in [
        ("report", report.node_correlations[&name].clone().unwrap()),
        ("recompute", correlate_records(&full.records, &again.records)),
    ] {
        for m in Metric::ALL {
            let c = &corr[m.key()];
            if c.n_pairs < 3 {
                continue;
            }
            match c.pearson_r {
                Some(r) if (r - 1.0).abs() <= 1e-12 => checked += 1,
                other => return Err(format!("{channel:?} {source} {}: r = {other:?}", m.key())),
            }
        }
    }
    Ok(format!("{channel:?} {checked} r=1"))
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    for (channel, seed) in [(Channel::Email, 11), (Channel::Micropost, 12)] {
        match identity_check(channel, seed) {
            Ok(d) => details.push(d),
            Err(e) => return outcome(false, e),
        }
    }
    outcome(true, format!("globals identical; {}", details.join(", ")))
}

fn pearson(e: &Experiment, plan: &str, m: Metric) -> Option<f64> {
    e.report.correlation(plan, m).and_then(|c| c.pearson_r)
}

fn criterion_4() -> Outcome {
    let runs = seed_runs();
    let mut a_fail = Vec::new();
    let (mut b, mut c, mut d) = (0, 0, 0);
    let mut slowest = Duration::ZERO;
    for run in runs {
        let e = &run.experiment;
        slowest = slowest.max(run.elapsed);
        for plan in ["spammers", "spammers+bottom"] {
            for m in [Metric::Degree, Metric::Betweenness, Metric::Activity] {
                let r = pearson(e, plan, m);
                if !r.is_some_and(|r| r >= 0.9) {
                    a_fail.push(format!("seed {} {plan} {}: {r:?}", run.seed, m.key()));
                }
            }
        }
        let top10 = pearson(e, "top10", Metric::Closeness);
        let spb = pearson(e, "spammers+bottom", Metric::Closeness);
        if let (Some(x), Some(y)) = (top10, spb) {
            if x < y {
                b += 1;
            }
        }
        let full = e.report.global("full").unwrap();
        let drop = |plan: &str| e.report.global(plan).map(|g| full.giant_component_fraction - g.giant_component_fraction);
        if let (Some(t), Some(bt)) = (drop("top10"), drop("bottom")) {
            if t > bt {
                c += 1;
            }
        }
        let ddiam = |plan: &str| e.report.global(plan).map(|g| (g.diameter as i64 - full.diameter as i64).abs());
        if let (Some(s), Some(t)) = (ddiam("spammers"), ddiam("top10")) {
            if s <= t {
                d += 1;
            }
        }
    }
    let pass = a_fail.is_empty() && b >= 4 && c == 5 && d >= 4 && slowest < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "(a) {} correlations below 0.9{}; (b) {b}/5; (c) {c}/5; (d) {d}/5; slowest seed {:.1}s on {} thread(s)",
            a_fail.len(),
            a_fail.first().map(|s| format!(" e.g. {s}")).unwrap_or_default(),
            slowest.as_secs_f64(),
            rayon::current_num_threads()
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = SpamThresholds::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for run in seed_runs() {
        let planted = &run.truth.spammers;
        let found = &run.experiment.spammers;
        let hit = found.intersection(planted).count() as f64;
        let precision = if found.is_empty() { 0.0 } else { hit / found.len() as f64 };
        let recall = hit / planted.len() as f64;
        let screen: BTreeSet<NodeId> = ci_screen(&run.events, Channel::Email, &t).into_iter().collect();
        let screen_recall = screen.intersection(planted).count() as f64 / planted.len() as f64;
        let counts = message_counts(&run.events, Channel::Email);
        let high_ci = planted
            .iter()
            .filter(|id| {
                let c = counts.get(*id).copied().unwrap_or_default();
                contribution_index_from(c.sent, c.received).is_some_and(|ci| ci >= 0.8)
            })
            .count() as f64
            / planted.len() as f64;
        pass &= precision >= 0.9 && recall >= 0.9 && screen_recall >= 0.9 && high_ci >= 0.9;
        parts.push(format!(
            "seed {}: P={precision:.2} R={recall:.2} screen={screen_recall:.2} CI>=0.8 {high_ci:.2}",
            run.seed
        ));
    }
    outcome(pass, parts.join("; "))
}

fn chain_fixture() -> Result<String, String> {
    let mut events = vec![email("z1", 3600, "z", &["y"])];
    for i in 0..30 {
        events.push(email(&format!("y{i}"), 7200 + i * 60, "y", &["x"]));
    }
    let g = build_graph(&events, Channel::Email);
    let labels = Labels([(id("y"), Label::Spam)].into_iter().collect());
    let t = SpamThresholds {
        high_volume_percentile: 60.0,
        ..Default::default()
    };
    let ev = SpamEvidence::new(&events, &g, Some(&labels), &t);
    let c = classify(&ev, 10);
    if !c.converged {
        return Err("chain did not converge".into());
    }
    let mut prev_spam = BTreeSet::new();
    let mut prev = ev.criteria(&prev_spam);
    for spam in &c.history {
        if !prev_spam.is_subset(spam) {
            return Err(format!("spam set shrank: {prev_spam:?} -> {spam:?}"));
        }
        let next = ev.criteria(spam);
        for (node, s) in &prev {
            if !s.is_subset(&next[node]) {
                return Err(format!("{node}: criteria shrank"));
            }
        }
        prev_spam = spam.clone();
        prev = next;
    }
    let x = c.verdicts.iter().find(|v| v.node == id("x")).unwrap();
    let y = c.verdicts.iter().find(|v| v.node == id("y")).unwrap();
    if !y.is_spammer || !x.satisfied.contains(&Criterion::B) || x.iteration_fixed != 2 {
        return Err(format!("unexpected chain verdicts: {x:?} {y:?}"));
    }
    Ok(format!("chain: y spam, x gains B at iteration {}", x.iteration_fixed))
}

fn criterion_6() -> Outcome {
    let mut rng = rng(6);
    let all = [Criterion::A, Criterion::B, Criterion::C, Criterion::D];
    let mut mismatches = 0;
    for channel in [Channel::Email, Channel::Micropost] {
        for _ in 0..10_000 {
            let set: BTreeSet<Criterion> = all.iter().copied().filter(|_| rng.random::<bool>()).collect();
            let email_count = set.contains(&Criterion::A) as u8 + set.contains(&Criterion::B) as u8 + set.contains(&Criterion::C) as u8;
            let want = match channel {
                Channel::Email => email_count >= 2,
                Channel::Micropost => email_count + set.contains(&Criterion::D) as u8 >= 3,
            };
            if is_spammer(&set, channel) != want {
                mismatches += 1;
            }
        }
    }
    // Every node of real classifications obeys the same rule.
    let mut nodes = 0;
    for run in seed_runs() {
        let g = build_graph(&run.events, Channel::Email);
        let c = classify(&SpamEvidence::new(&run.events, &g, None, &SpamThresholds::default()), 5);
        for v in &c.verdicts {
            nodes += 1;
            if v.is_spammer != is_spammer(&v.satisfied, Channel::Email) {
                mismatches += 1;
            }
        }
    }
    let micro = SynthConfig {
        n: 600,
        channel: Channel::Micropost,
        seed: 6,
        ..Default::default()
    };
    let (_, events, _) = generate(&micro).unwrap();
    let g = build_graph(&events, Channel::Micropost);
    for v in classify(&SpamEvidence::new(&events, &g, None, &SpamThresholds::default()), 5).verdicts {
        nodes += 1;
        if v.is_spammer != is_spammer(&v.satisfied, Channel::Micropost) {
            mismatches += 1;
        }
    }
    match chain_fixture() {
        Ok(d) => outcome(
            mismatches == 0,
            format!("2x10^4 random sets + {nodes} classified nodes, {mismatches} mismatches; {d}"),
        ),
        Err(e) => outcome(false, e),
    }
}

fn criterion_7() -> Outcome {
    let scorer = LexiconScorer::default();
    let mut wins = 0;
    let mut parts = Vec::new();
    for run in seed_runs() {
        let model = CorpusModel::from_events(&run.events);
        let rep = subject_body_correlation(&run.events, &scorer, &model, 3);
        let author = rep.author_level.as_ref().and_then(|m| m.get(2, 3));
        let email = rep.email_level.as_ref().and_then(|m| m.get(2, 3));
        if let (Some(a), Some(e)) = (author, email) {
            if a > e {
                wins += 1;
            }
        }
        parts.push(format!("seed {}: author {author:.3?} email {email:.3?}", run.seed));
    }
    outcome(wins >= 4, format!("{wins}/5 seeds; {}", parts.join("; ")))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_netstab")
}

fn synth_into_stability(threads: &str) -> Result<Vec<u8>, String> {
    let mut synth = Command::new(bin())
        .args(["synth", "--n", "600", "--seed", "8", "--out-messages", "-"])
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let out = Command::new(bin())
        .args(["--threads", threads, "stability", "--input", "-", "--format", "email", "--out", "-"])
        .stdin(synth.stdout.take().unwrap())
        .output()
        .map_err(|e| e.to_string())?;
    let status = synth.wait().map_err(|e| e.to_string())?;
    if !status.success() || !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn criterion_8() -> Outcome {
    let runs: Result<Vec<Vec<u8>>, String> = ["4", "4", "1", "8"].iter().map(|t| synth_into_stability(t)).collect();
    match runs {
        Err(e) => outcome(false, format!("run failed: {e}")),
        Ok(r) => {
            let repeat = r[0] == r[1];
            let threads = r[2] == r[3] && r[0] == r[2];
            outcome(
                repeat && threads && !r[0].is_empty(),
                format!("repeat identical: {repeat}; threads 1 vs 8 identical: {threads}; {} bytes", r[0].len()),
            )
        }
    }
}

fn criterion_9() -> Outcome {
    let cfg = SynthConfig {
        n: 20_000,
        m_attach: 2,
        seed: 9,
        ..Default::default()
    };
    let (_, events, _) = generate(&cfg).unwrap();
    let arcs = build_graph(&events, Channel::Email).arc_count();
    let start = Instant::now();
    let res = run_experiment(
        &events,
        Channel::Email,
        &default_plans(),
        &StabilityConfig::for_channel(Channel::Email),
        None,
        &LexiconScorer::default(),
    );
    let secs = start.elapsed().as_secs_f64();
    match res {
        Err(e) => outcome(false, format!("run failed: {e}")),
        Ok(exp) => {
            let complete = exp.report.global_metrics.len() == 8;
            outcome(
                complete && secs < 600.0,
                format!(
                    "n=20000, {arcs} arcs, {} messages, 7 plans in {secs:.1}s on {} thread(s)",
                    events.len(),
                    rayon::current_num_threads()
                ),
            )
        }
    }
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {verdict} - {}", o.detail);
        std::io::stdout().flush().ok();
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
