//! Resolution of run settings: command-line flags, then the config file,
//! then built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use netstab_core::config::{format_duration, parse_duration, IniFile};
use netstab_core::ingest::{IngestOptions, InputFormat};
use netstab_core::spam::SpamThresholds;
use netstab_core::stability::StabilityConfig;
use netstab_core::text::{Lexicon, LexiconScorer};
use netstab_core::Channel;
use serde::Serialize;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Args, Debug, Clone, Default)]
pub struct InputArgs {
    /// Message file, or `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    /// `email` (CSV) or `micropost` (JSON lines); guessed from the file
    /// extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Abort ingestion when more than this percentage of rows is malformed.
    #[arg(long)]
    pub max_reject_pct: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpamArgs {
    /// `node_id,label` CSV with labels spam or ham.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub high_volume_pct: Option<f64>,
    #[arg(long)]
    pub min_received_nonspam: Option<u64>,
    #[arg(long)]
    pub follow_ratio: Option<f64>,
    #[arg(long)]
    pub active_hour_bins: Option<u32>,
    #[arg(long)]
    pub ci_screen: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u32>,
    #[arg(long)]
    pub url_fraction: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct WindowArgs {
    /// Snapshot window for oscillation counts, e.g. `30d`.
    #[arg(long)]
    pub window: Option<String>,
    /// Reply pairing horizon, e.g. `14d`.
    #[arg(long)]
    pub horizon: Option<String>,
    /// Measure ADARP and diameter on the symmetrized graph.
    #[arg(long)]
    pub symmetrize_distances: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TextArgs {
    /// Sentiment lexicon with `[positive]` and `[negative]` sections.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub min_author_msgs: Option<usize>,
}

/// Everything a run depends on, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub version: &'static str,
    pub command: String,
    pub input: Option<String>,
    pub format: Option<InputFormat>,
    pub max_reject_pct: f64,
    pub plans: Vec<String>,
    pub window: String,
    pub horizon: String,
    pub symmetrize_distances: bool,
    pub seed: u64,
    pub labels: Option<String>,
    pub spam: SpamThresholds,
    pub lexicon: String,
    pub min_author_msgs: usize,
    pub outputs: BTreeMap<String, String>,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn guess_format(path: &Path) -> InputFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json" | "ndjson") => InputFormat::MicropostJsonl,
        _ => InputFormat::EmailCsv,
    }
}

pub struct Resolver {
    ini: IniFile,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Resolver> {
        let ini = match config {
            Some(p) => IniFile::load(p)?,
            None => IniFile::default(),
        };
        Ok(Resolver { ini })
    }

    pub fn ini(&self) -> &IniFile {
        &self.ini
    }

    fn pick<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self.ini.parsed(key)?.unwrap_or(default))
    }

    pub fn base(&self, command: &str) -> RunConfig {
        RunConfig {
            version: VERSION,
            command: command.to_string(),
            input: None,
            format: None,
            max_reject_pct: IngestOptions::default().max_reject_pct,
            plans: Vec::new(),
            window: String::new(),
            horizon: String::new(),
            symmetrize_distances: false,
            seed: 0,
            labels: None,
            spam: SpamThresholds::default(),
            lexicon: "default".into(),
            min_author_msgs: 3,
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&self, rc: &mut RunConfig, a: &InputArgs) -> Result<InputFormat> {
        let format = match a.format.clone().or_else(|| self.ini.get("input.format").map(String::from)) {
            Some(f) => f.parse::<InputFormat>()?,
            None => guess_format(&a.input),
        };
        rc.input = Some(path_str(&a.input));
        rc.format = Some(format);
        rc.max_reject_pct = self.pick(a.max_reject_pct, "input.max_reject_pct", rc.max_reject_pct)?;
        Ok(format)
    }

    pub fn ingest_options(rc: &RunConfig) -> IngestOptions {
        IngestOptions {
            max_reject_pct: rc.max_reject_pct,
            ..Default::default()
        }
    }

    pub fn spam(&self, rc: &mut RunConfig, a: &SpamArgs) -> Result<()> {
        let d = SpamThresholds::default();
        rc.spam = SpamThresholds {
            high_volume_percentile: self.pick(a.high_volume_pct, "spam.high_volume_pct", d.high_volume_percentile)?,
            min_received_nonspam: self.pick(a.min_received_nonspam, "spam.min_received_nonspam", d.min_received_nonspam)?,
            follow_ratio: self.pick(a.follow_ratio, "spam.follow_ratio", d.follow_ratio)?,
            active_hour_bins: self.pick(a.active_hour_bins, "spam.active_hour_bins", d.active_hour_bins)?,
            ci_screen: self.pick(a.ci_screen, "spam.ci_screen", d.ci_screen)?,
            max_fixed_point_iters: self.pick(a.max_iters, "spam.max_iters", d.max_fixed_point_iters)?,
            url_fraction: self.pick(a.url_fraction, "spam.url_fraction", d.url_fraction)?,
        };
        rc.spam.validate()?;
        rc.labels = a
            .labels
            .as_deref()
            .map(path_str)
            .or_else(|| self.ini.get("spam.labels").map(String::from));
        Ok(())
    }

    pub fn windows(&self, rc: &mut RunConfig, a: &WindowArgs, channel: Channel) -> Result<StabilityConfig> {
        let mut cfg = StabilityConfig::for_channel(channel);
        let dur = |flag: &Option<String>, key: &str, default: i64| -> Result<i64> {
            match flag {
                Some(s) => Ok(parse_duration(s)?),
                None => Ok(self.ini.duration(key)?.unwrap_or(default)),
            }
        };
        cfg.window = dur(&a.window, "metrics.window", cfg.window)?;
        cfg.horizon = dur(&a.horizon, "metrics.horizon", cfg.horizon)?;
        cfg.symmetrize_distances =
            a.symmetrize_distances || self.ini.flag("metrics.symmetrize_distances")?.unwrap_or(false);
        cfg.spam = rc.spam.clone();
        rc.window = format_duration(cfg.window);
        rc.horizon = format_duration(cfg.horizon);
        rc.symmetrize_distances = cfg.symmetrize_distances;
        Ok(cfg)
    }

    pub fn text(&self, rc: &mut RunConfig, a: &TextArgs) -> Result<LexiconScorer> {
        rc.min_author_msgs = self.pick(a.min_author_msgs, "text.min_author_msgs", rc.min_author_msgs)?;
        let path = a
            .lexicon
            .clone()
            .or_else(|| self.ini.get("text.lexicon").map(PathBuf::from));
        Ok(match path {
            None => LexiconScorer::default(),
            Some(p) => {
                let lex = Lexicon::load(&p)?;
                rc.lexicon = path_str(&p);
                LexiconScorer::new(format!("lexicon:{}", path_str(&p)), lex)
            }
        })
    }

    pub fn seed(&self, rc: &mut RunConfig, flag: Option<u64>) -> Result<u64> {
        rc.seed = self.pick(flag, "seed", 42)?;
        Ok(rc.seed)
    }

    pub fn plans(&self, rc: &mut RunConfig, flag: Option<String>, default: &str) -> Result<String> {
        let plans = flag
            .or_else(|| self.ini.get("stability.plans").map(String::from))
            .unwrap_or_else(|| default.to_string());
        rc.plans = plans.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        Ok(plans)
    }
}

pub fn load_labels(rc: &RunConfig) -> Result<Option<netstab_core::spam::Labels>> {
    rc.labels
        .as_deref()
        .map(|p| netstab_core::spam::Labels::load(Path::new(p)).with_context(|| format!("reading labels {p}")))
        .transpose()
}
