//! Whole-network metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::paths::{shortest_path_summary, PathSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalMetrics {
    /// Average distance among reachable pairs; 0 when `reachable_pairs == 0`.
    pub adarp: f64,
    pub diameter: u32,
    pub clustering_coefficient: f64,
    pub average_degree: f64,
    pub giant_component_fraction: f64,
    pub reachable_pairs: u64,
}

impl GlobalMetrics {
    pub fn no_reachable_pairs(&self) -> bool {
        self.reachable_pairs == 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GlobalOptions {
    /// Measure ADARP and diameter on the symmetrized graph.
    pub symmetrize_distances: bool,
}

fn non_empty(g: &CommGraph) -> Result<()> {
    if g.is_empty() {
        Err(Error::EmptyGraph)
    } else {
        Ok(())
    }
}

pub fn global_metrics(g: &CommGraph, opts: GlobalOptions) -> Result<GlobalMetrics> {
    non_empty(g)?;
    let summary = if opts.symmetrize_distances {
        shortest_path_summary(&g.symmetrized(), false)
    } else {
        shortest_path_summary(g, false)
    };
    global_from_summary(g, &summary)
}

/// Assembles global metrics reusing an already computed path summary.
pub fn global_from_summary(g: &CommGraph, summary: &PathSummary) -> Result<GlobalMetrics> {
    non_empty(g)?;
    let pairs = summary.reachable_pairs();
    Ok(GlobalMetrics {
        adarp: if pairs == 0 {
            0.0
        } else {
            summary.total_distance() as f64 / pairs as f64
        },
        diameter: summary.diameter(),
        clustering_coefficient: clustering_coefficient(g)?,
        average_degree: average_degree(g)?,
        giant_component_fraction: giant_component_fraction(g)?,
        reachable_pairs: pairs,
    })
}

pub fn adarp(g: &CommGraph) -> Result<f64> {
    Ok(global_metrics(g, GlobalOptions::default())?.adarp)
}

pub fn diameter(g: &CommGraph) -> Result<u32> {
    non_empty(g)?;
    Ok(shortest_path_summary(g, false).diameter())
}

/// Global transitivity of the symmetrized simple graph:
/// 3 × triangles / connected triples.
pub fn clustering_coefficient(g: &CommGraph) -> Result<f64> {
    non_empty(g)?;
    let nb = g.undirected_neighbors();
    let mut triangles = 0u64;
    let mut triples = 0u64;
    for (v, nv) in nb.iter().enumerate() {
        let d = nv.len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        let v = v as u32;
        for &u in nv.iter().filter(|&&u| u > v) {
            triangles += count_common_above(nv, &nb[u as usize], u);
        }
    }
    Ok(if triples == 0 {
        0.0
    } else {
        (3 * triangles) as f64 / triples as f64
    })
}

/// |{w ∈ a ∩ b : w > floor}| for sorted slices.
fn count_common_above(a: &[u32], b: &[u32], floor: u32) -> u64 {
    let (mut i, mut j) = (a.partition_point(|&x| x <= floor), b.partition_point(|&x| x <= floor));
    let mut c = 0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// 2m / n over distinct arcs.
pub fn average_degree(g: &CommGraph) -> Result<f64> {
    non_empty(g)?;
    Ok(2.0 * g.arc_count() as f64 / g.node_count() as f64)
}

/// Sizes of the weakly connected components, largest first.
pub fn weak_components(g: &CommGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for a in g.arcs() {
        let (ra, rb) = (find(&mut parent, a.source), find(&mut parent, a.target));
        if ra != rb {
            parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
    let mut sizes = vec![0usize; n];
    for v in 0..n as u32 {
        let r = find(&mut parent, v);
        sizes[r as usize] += 1;
    }
    let mut sizes: Vec<usize> = sizes.into_iter().filter(|&s| s > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

pub fn giant_component_fraction(g: &CommGraph) -> Result<f64> {
    non_empty(g)?;
    Ok(weak_components(g)[0] as f64 / g.node_count() as f64)
}
