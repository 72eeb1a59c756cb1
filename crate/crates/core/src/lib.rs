//! Stability analysis of communication networks under node removal.
//!
//! Messages are ingested into a directed, weighted communication graph.
//! Global and per-node metrics are measured on the full network and again
//! after applying removal plans (spammers, periphery, hubs), and the two
//! passes are correlated node by node.

pub mod config;
pub mod error;
pub mod event;
pub mod export;
pub mod global;
pub mod graph;
pub mod ingest;
pub mod node;
pub mod paths;
pub mod removal;
pub mod report;
pub mod response;
pub mod spam;
pub mod stability;
pub mod stats;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use event::{Channel, MessageEvent, NodeId, Timestamp};
pub use graph::{build_graph, CommGraph};
pub use removal::RemovalPlan;
pub use stability::{run_experiment, StabilityConfig, StabilityReport};
