mod settings;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use netstab_core::export::{write_edge_list, write_graphml};
use netstab_core::global::{global_metrics, GlobalOptions};
use netstab_core::graph::degree_summary;
use netstab_core::ingest::{ingest, write_events, Ingested, InputFormat};
use netstab_core::node::{measure_nodes, write_node_metrics};
use netstab_core::removal::{reduce_events, select_nodes, RemovalPlan, DEFAULT_PLANS};
use netstab_core::report::to_report_json;
use netstab_core::spam::{ci_screen, detect_spammers, write_verdicts};
use netstab_core::stability::run_experiment;
use netstab_core::synth::{generate, SynthConfig};
use netstab_core::text::{subject_body_correlation, CorpusModel};
use netstab_core::{build_graph, CommGraph};
use serde::Serialize;

use settings::{load_labels, InputArgs, Resolver, RunConfig, SpamArgs, TextArgs, WindowArgs};

#[derive(Parser, Debug)]
#[command(name = "netstab", version, about = "Node-removal stability analysis for communication networks")]
struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// INI-style configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an input file and summarise the resulting graph.
    IngestCheck {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Global metrics and per-node metrics for the full network.
    Metrics {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        windows: WindowArgs,
        #[command(flatten)]
        text: TextArgs,
        /// Global metrics JSON.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// Per-node metrics CSV.
        #[arg(long)]
        node_metrics: Option<PathBuf>,
    },
    /// Apply the spammer rules and write per-node verdicts.
    DetectSpam {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        spam: SpamArgs,
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// Write the contribution-index screen candidates, one per line.
        #[arg(long)]
        screen_out: Option<PathBuf>,
    },
    /// Remove the nodes selected by a plan and write the reduced graph.
    Simplify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        spam: SpamArgs,
        #[arg(long)]
        plan: String,
        /// `.graphml` for GraphML, anything else for an edge-list CSV.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// Also write the reduced message stream in the input format.
        #[arg(long)]
        out_messages: Option<PathBuf>,
    },
    /// Run every removal plan and correlate node metrics with the full network.
    Stability {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        spam: SpamArgs,
        #[command(flatten)]
        windows: WindowArgs,
        #[command(flatten)]
        text: TextArgs,
        #[arg(long)]
        plans: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// One row per (plan, metric).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Directory for node_metrics_<plan>.csv files.
        #[arg(long)]
        node_metrics_dir: Option<PathBuf>,
    },
    /// Subject-versus-body semantic correlations.
    Text {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        text: TextArgs,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Generate a synthetic network and message stream.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m_attach: Option<usize>,
        #[arg(long)]
        spammers: Option<usize>,
        #[arg(long)]
        reciprocation: Option<f64>,
        #[arg(long)]
        reply_prob: Option<f64>,
        #[arg(long)]
        nudge_prob: Option<f64>,
        /// Mean reply latency, e.g. `2h`.
        #[arg(long)]
        reply_latency: Option<String>,
        #[arg(long)]
        spam_multiplier: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// `email` or `micropost`.
        #[arg(long)]
        channel: Option<String>,
        #[arg(long, default_value = "-")]
        out_messages: PathBuf,
        #[arg(long)]
        out_truth: Option<PathBuf>,
    },
    /// Write the full graph, or the graph reduced by a plan, as GraphML or CSV.
    Export {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        spam: SpamArgs,
        #[arg(long)]
        plan: Option<String>,
        /// `graphml` or `edgelist`; defaults from the output extension.
        #[arg(long)]
        to: Option<String>,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

fn open_out(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|e| netstab_core::Error::io(path, e))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = open_out(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn note_output(rc: &mut RunConfig, name: &str, path: &Path) {
    rc.outputs.insert(name.to_string(), path.display().to_string());
}

fn load(resolver: &Resolver, rc: &mut RunConfig, a: &InputArgs) -> Result<(Ingested, InputFormat)> {
    let format = resolver.input(rc, a)?;
    let ing = ingest(&a.input, format, &Resolver::ingest_options(rc))?;
    for r in ing.rejects.iter().take(20) {
        eprintln!("warning: line {}: {}", r.line, r.reason);
    }
    if ing.rejects.len() > 20 {
        eprintln!("warning: {} more rejected rows", ing.rejects.len() - 20);
    }
    Ok((ing, format))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn spammers_for(
    plan: &RemovalPlan,
    events: &[netstab_core::MessageEvent],
    g: &CommGraph,
    rc: &RunConfig,
) -> Result<Option<std::collections::BTreeSet<netstab_core::NodeId>>> {
    if !plan.needs_verdicts() {
        return Ok(None);
    }
    let labels = load_labels(rc)?;
    let c = detect_spammers(events, g, labels.as_ref(), &rc.spam);
    for w in &c.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Some(c.spammers()))
}

fn run(cli: Cli) -> Result<()> {
    let resolver = Resolver::new(cli.config.as_deref())?;
    match cli.command {
        Command::IngestCheck { input, out } => {
            let mut rc = resolver.base("ingest-check");
            note_output(&mut rc, "summary", &out);
            let (ing, format) = load(&resolver, &mut rc, &input)?;
            let g = build_graph(&ing.events, format.channel());
            #[derive(Serialize)]
            struct Summary<'a> {
                rows: usize,
                events: usize,
                rejected: usize,
                rejects: &'a [netstab_core::ingest::Reject],
                nodes: usize,
                arcs: usize,
                dangling_references: usize,
                degrees: Option<netstab_core::graph::DegreeSummary>,
            }
            let body = Summary {
                rows: ing.rows,
                events: ing.events.len(),
                rejected: ing.rejects.len(),
                rejects: &ing.rejects,
                nodes: g.node_count(),
                arcs: g.arc_count(),
                dangling_references: g.dangling_refs(),
                degrees: degree_summary(&g).ok(),
            };
            write_text(&out, &to_report_json(&Envelope { config: &rc, body })?)
        }
        Command::Metrics {
            input,
            windows,
            text,
            out,
            node_metrics,
        } => {
            let mut rc = resolver.base("metrics");
            note_output(&mut rc, "global", &out);
            if let Some(p) = &node_metrics {
                note_output(&mut rc, "node_metrics", p);
            }
            let (ing, format) = load(&resolver, &mut rc, &input)?;
            let cfg = resolver.windows(&mut rc, &windows, format.channel())?;
            let scorer = resolver.text(&mut rc, &text)?;
            let g = build_graph(&ing.events, format.channel());
            let global = global_metrics(
                &g,
                GlobalOptions {
                    symmetrize_distances: cfg.symmetrize_distances,
                },
            )?;
            #[derive(Serialize)]
            struct Body {
                global_metrics: netstab_core::global::GlobalMetrics,
                degrees: netstab_core::graph::DegreeSummary,
            }
            let body = Body {
                global_metrics: global,
                degrees: degree_summary(&g)?,
            };
            if let Some(p) = &node_metrics {
                let m = measure_nodes(&g, &ing.events, None, &cfg.node_config(), &scorer)?;
                if m.oscillation_series_too_short {
                    eprintln!("warning: fewer than three windows; oscillation counts are zero");
                }
                let mut w = open_out(p)?;
                write_node_metrics(&m.records, &mut w)?;
                w.flush()?;
            }
            write_text(&out, &to_report_json(&Envelope { config: &rc, body })?)
        }
        Command::DetectSpam {
            input,
            spam,
            out,
            screen_out,
        } => {
            let mut rc = resolver.base("detect-spam");
            note_output(&mut rc, "verdicts", &out);
            let (ing, format) = load(&resolver, &mut rc, &input)?;
            resolver.spam(&mut rc, &spam)?;
            let labels = load_labels(&rc)?;
            let g = build_graph(&ing.events, format.channel());
            let c = detect_spammers(&ing.events, &g, labels.as_ref(), &rc.spam);
            for w in &c.warnings {
                eprintln!("warning: {w}");
            }
            let mut w = open_out(&out)?;
            write_verdicts(&c.verdicts, &mut w)?;
            w.flush()?;
            if let Some(p) = screen_out {
                let list = ci_screen(&ing.events, format.channel(), &rc.spam);
                let text: String = list.iter().map(|id| format!("{id}\n")).collect();
                write_text(&p, &text)?;
            }
            Ok(())
        }
        Command::Simplify {
            input,
            spam,
            plan,
            out,
            out_messages,
        } => {
            let mut rc = resolver.base("simplify");
            let (ing, format) = load(&resolver, &mut rc, &input)?;
            resolver.spam(&mut rc, &spam)?;
            let plan = RemovalPlan::parse(&plan)?;
            let g = build_graph(&ing.events, format.channel());
            let spammers = spammers_for(&plan, &ing.events, &g, &rc)?;
            let sel = select_nodes(&g, &plan, spammers.as_ref())?;
            if !sel.skipped.is_empty() {
                eprintln!("warning: {} listed nodes not in graph", sel.skipped.len());
            }
            eprintln!("{plan}: removed {} of {} nodes", sel.nodes.len(), g.node_count());
            let reduced = g.without(&sel.nodes);
            let mut w = open_out(&out)?;
            if out.extension().is_some_and(|e| e == "graphml") {
                write_graphml(&reduced, &mut w)?;
            } else {
                write_edge_list(&reduced, &mut w)?;
            }
            w.flush()?;
            if let Some(p) = out_messages {
                let events = reduce_events(&ing.events, &sel.nodes);
                let mut w = open_out(&p)?;
                write_events(&events, format, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Stability {
            input,
            spam,
            windows,
            text,
            plans,
            seed,
            out,
            csv,
            node_metrics_dir,
        } => {
            let mut rc = resolver.base("stability");
            note_output(&mut rc, "report", &out);
            if let Some(p) = &csv {
                note_output(&mut rc, "csv", p);
            }
            if let Some(p) = &node_metrics_dir {
                note_output(&mut rc, "node_metrics_dir", p);
            }
            let (ing, format) = load(&resolver, &mut rc, &input)?;
            resolver.spam(&mut rc, &spam)?;
            let cfg = resolver.windows(&mut rc, &windows, format.channel())?;
            let scorer = resolver.text(&mut rc, &text)?;
            resolver.seed(&mut rc, seed)?;
            let plans = RemovalPlan::parse_list(&resolver.plans(&mut rc, plans, DEFAULT_PLANS)?)?;
            let labels = load_labels(&rc)?;
            let exp = run_experiment(&ing.events, format.channel(), &plans, &cfg, labels.as_ref(), &scorer)?;
            let mut report = exp.report;
            report.config = serde_json::to_value(&rc)?;
            for f in &report.flags {
                eprintln!("warning: {f}");
            }
            if let Some(p) = &csv {
                let mut w = open_out(p)?;
                report.write_csv(&mut w)?;
                w.flush()?;
            }
            if let Some(dir) = &node_metrics_dir {
                std::fs::create_dir_all(dir).map_err(|e| netstab_core::Error::io(dir, e))?;
                for (plan, records) in &exp.node_metrics {
                    let Some(records) = records else { continue };
                    let safe: String = plan
                        .chars()
                        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '+' { c } else { '_' })
                        .collect();
                    let mut w = open_out(&dir.join(format!("node_metrics_{safe}.csv")))?;
                    write_node_metrics(records, &mut w)?;
                    w.flush()?;
                }
            }
            write_text(&out, &report.to_json()?)
        }
        Command::Text { input, text, out } => {
            let mut rc = resolver.base("text");
            note_output(&mut rc, "report", &out);
            let (ing, _) = load(&resolver, &mut rc, &input)?;
            let scorer = resolver.text(&mut rc, &text)?;
            let model = CorpusModel::from_events(&ing.events);
            let rep = subject_body_correlation(&ing.events, &scorer, &model, rc.min_author_msgs);
            for f in &rep.flags {
                eprintln!("warning: {f}");
            }
            write_text(&out, &to_report_json(&Envelope { config: &rc, body: rep })?)
        }
        Command::Synth {
            n,
            m_attach,
            spammers,
            reciprocation,
            reply_prob,
            nudge_prob,
            reply_latency,
            spam_multiplier,
            seed,
            channel,
            out_messages,
            out_truth,
        } => {
            let ini = resolver.ini();
            let d = SynthConfig::default();
            let pick = |flag: Option<f64>, key: &str, default: f64| -> Result<f64> {
                Ok(flag.or(ini.parsed(key)?).unwrap_or(default))
            };
            let latency = match reply_latency {
                Some(s) => Some(netstab_core::config::parse_duration(&s)?),
                None => ini.duration("synth.reply_latency")?,
            };
            let channel = match channel.or_else(|| ini.get("synth.channel").map(String::from)) {
                Some(c) => c.parse()?,
                None => d.channel,
            };
            let cfg = SynthConfig {
                n: n.or(ini.parsed("synth.n")?).unwrap_or(d.n),
                m_attach: m_attach.or(ini.parsed("synth.m_attach")?).unwrap_or(d.m_attach),
                spammer_count: spammers.or(ini.parsed("synth.spammers")?).unwrap_or(d.spammer_count),
                reciprocation_prob: pick(reciprocation, "synth.reciprocation", d.reciprocation_prob)?,
                reply_prob: pick(reply_prob, "synth.reply_prob", d.reply_prob)?,
                nudge_prob: pick(nudge_prob, "synth.nudge_prob", d.nudge_prob)?,
                reply_latency_mean: latency.map_or(d.reply_latency_mean, |s| s as f64),
                spammer_volume_multiplier: pick(spam_multiplier, "synth.spam_multiplier", d.spammer_volume_multiplier)?,
                seed: seed.or(ini.parsed("seed")?).unwrap_or(d.seed),
                channel,
                ..d
            };
            let (g, events, truth) = generate(&cfg)?;
            let mut w = open_out(&out_messages)?;
            write_events(&events, channel.into(), &mut w)?;
            w.flush()?;
            if let Some(p) = out_truth {
                let mut w = open_out(&p)?;
                truth.write_labels(g.nodes(), &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::Export {
            input,
            spam,
            plan,
            to,
            out,
        } => {
            let mut rc = resolver.base("export");
            let (ing, format) = load(&resolver, &mut rc, &input)?;
            resolver.spam(&mut rc, &spam)?;
            let mut g = build_graph(&ing.events, format.channel());
            if let Some(plan) = plan {
                let plan = RemovalPlan::parse(&plan)?;
                let spammers = spammers_for(&plan, &ing.events, &g, &rc)?;
                let sel = select_nodes(&g, &plan, spammers.as_ref())?;
                g = g.without(&sel.nodes);
            }
            let graphml = match to.as_deref() {
                Some("graphml") => true,
                Some("edgelist") => false,
                Some(other) => bail!(netstab_core::Error::Config(format!("unknown export format {other:?}"))),
                None => out.extension().is_some_and(|e| e == "graphml"),
            };
            let mut w = open_out(&out)?;
            if graphml {
                write_graphml(&g, &mut w)?;
            } else {
                write_edge_list(&g, &mut w)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<netstab_core::Error>() {
        Some(inner) if !inner.is_input_error() => 2,
        Some(_) => 1,
        None if e.downcast_ref::<io::Error>().is_some() => 1,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
