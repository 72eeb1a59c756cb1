//! Unweighted single-source shortest paths from every node.
//!
//! One breadth-first pass per source yields both the distance aggregates
//! (reach counts, distance sums, eccentricities) and, optionally, Brandes
//! dependency accumulation for betweenness. Sources are processed in fixed
//! size chunks and partial betweenness vectors are summed in chunk order, so
//! results are bit-identical for any rayon pool size.

use rayon::prelude::*;

use crate::graph::CommGraph;

const CHUNK: usize = 32;
const BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    /// Number of nodes reachable from each source, excluding itself.
    pub reach: Vec<u32>,
    /// Sum of finite distances from each source.
    pub dist_sum: Vec<u64>,
    /// Largest finite distance from each source (0 when it reaches nobody).
    pub eccentricity: Vec<u32>,
    /// Raw pair-dependency betweenness; empty unless requested.
    pub betweenness: Vec<f64>,
}

impl PathSummary {
    pub fn reachable_pairs(&self) -> u64 {
        self.reach.iter().map(|&r| r as u64).sum()
    }

    pub fn total_distance(&self) -> u64 {
        self.dist_sum.iter().sum()
    }

    pub fn diameter(&self) -> u32 {
        self.eccentricity.iter().copied().max().unwrap_or(0)
    }
}

struct Scratch {
    dist: Vec<i32>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
        }
    }
}

struct ChunkOut {
    reach: Vec<u32>,
    dist_sum: Vec<u64>,
    ecc: Vec<u32>,
    betweenness: Option<Vec<f64>>,
}

fn run_chunk(g: &CommGraph, sources: std::ops::Range<usize>, with_betweenness: bool) -> ChunkOut {
    let n = g.node_count();
    let mut s = Scratch::new(n);
    let mut out = ChunkOut {
        reach: Vec::with_capacity(sources.len()),
        dist_sum: Vec::with_capacity(sources.len()),
        ecc: Vec::with_capacity(sources.len()),
        betweenness: with_betweenness.then(|| vec![0.0; n]),
    };
    for src in sources {
        let src = src as u32;
        s.order.clear();
        s.dist[src as usize] = 0;
        s.sigma[src as usize] = 1.0;
        s.order.push(src);
        let mut head = 0;
        let mut sum = 0u64;
        let mut ecc = 0u32;
        // `order` doubles as the BFS queue; it ends in non-decreasing distance order.
        while head < s.order.len() {
            let v = s.order[head];
            head += 1;
            let dv = s.dist[v as usize];
            sum += dv as u64;
            ecc = ecc.max(dv as u32);
            let sv = s.sigma[v as usize];
            for &w in g.out_neighbors(v) {
                let dw = &mut s.dist[w as usize];
                if *dw < 0 {
                    *dw = dv + 1;
                    s.order.push(w);
                }
                if *dw == dv + 1 {
                    s.sigma[w as usize] += sv;
                }
            }
        }
        out.reach.push(s.order.len() as u32 - 1);
        out.dist_sum.push(sum);
        out.ecc.push(ecc);

        if let Some(bc) = out.betweenness.as_mut() {
            for &w in s.order.iter().rev() {
                let dw = s.dist[w as usize];
                let coeff = (1.0 + s.delta[w as usize]) / s.sigma[w as usize];
                for &v in g.in_neighbors(w) {
                    if s.dist[v as usize] == dw - 1 {
                        s.delta[v as usize] += s.sigma[v as usize] * coeff;
                    }
                }
                if w != src {
                    bc[w as usize] += s.delta[w as usize];
                }
            }
        }
        for &v in &s.order {
            s.dist[v as usize] = -1;
            s.sigma[v as usize] = 0.0;
            s.delta[v as usize] = 0.0;
        }
    }
    out
}

/// All-sources BFS over the directed arcs of `g`, in the current rayon pool.
pub fn shortest_path_summary(g: &CommGraph, with_betweenness: bool) -> PathSummary {
    let n = g.node_count();
    let mut summary = PathSummary {
        reach: Vec::with_capacity(n),
        dist_sum: Vec::with_capacity(n),
        eccentricity: Vec::with_capacity(n),
        betweenness: if with_betweenness { vec![0.0; n] } else { Vec::new() },
    };
    let chunks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(CHUNK)
        .map(|lo| lo..(lo + CHUNK).min(n))
        .collect();
    for batch in chunks.chunks(BATCH) {
        let outs: Vec<ChunkOut> = batch
            .par_iter()
            .map(|r| run_chunk(g, r.clone(), with_betweenness))
            .collect();
        for out in outs {
            summary.reach.extend(out.reach);
            summary.dist_sum.extend(out.dist_sum);
            summary.eccentricity.extend(out.ecc);
            if let Some(bc) = out.betweenness {
                for (acc, x) in summary.betweenness.iter_mut().zip(bc) {
                    *acc += x;
                }
            }
        }
    }
    summary
}

/// Betweenness only.
pub fn betweenness(g: &CommGraph) -> Vec<f64> {
    shortest_path_summary(g, true).betweenness
}
