//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use netstab_core::{Channel, CommGraph, MessageEvent, NodeId};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

pub fn email(mid: &str, t: i64, from: &str, to: &[&str]) -> MessageEvent {
    MessageEvent {
        message_id: mid.to_string(),
        timestamp: t,
        sender: id(from),
        recipients: to.iter().map(|r| id(r)).collect(),
        channel: Channel::Email,
        in_reply_to: None,
        retweet_of: None,
        subject_text: None,
        body_text: None,
        author_followers: None,
        author_following: None,
    }
}

pub fn graph(n: usize, arcs: &[(usize, usize)]) -> CommGraph {
    let ids: Vec<NodeId> = (0..n).map(|i| id(&format!("v{i:03}"))).collect();
    CommGraph::from_arcs(Channel::Email, &ids, arcs.iter().map(|&(a, b)| (&ids[a], &ids[b], 1))).unwrap()
}

/// Erdős–Rényi style digraph with arc probability `p`.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> (CommGraph, Vec<(usize, usize)>) {
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random::<f64>() < p {
                arcs.push((a, b));
            }
        }
    }
    (graph(n, &arcs), arcs)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn adjacency(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in arcs {
        adj[a][b] = true;
    }
    adj
}

/// All-pairs hop distances by Floyd–Warshall; `None` when unreachable.
pub fn floyd_warshall(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<Option<u64>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(a, b) in arcs {
        if a != b {
            d[a][b] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|ij| ik + kj < ij) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

pub struct DistanceOracle {
    pub reachable_pairs: u64,
    pub total_distance: u64,
    pub diameter: u64,
    pub closeness: Vec<f64>,
}

pub fn distance_oracle(n: usize, arcs: &[(usize, usize)]) -> DistanceOracle {
    let d = floyd_warshall(n, arcs);
    let mut out = DistanceOracle {
        reachable_pairs: 0,
        total_distance: 0,
        diameter: 0,
        closeness: vec![0.0; n],
    };
    for (i, row) in d.iter().enumerate() {
        let (mut r, mut s) = (0u64, 0u64);
        for (j, dij) in row.iter().enumerate() {
            if let (true, Some(x)) = (i != j, dij) {
                r += 1;
                s += x;
                out.diameter = out.diameter.max(*x);
            }
        }
        out.reachable_pairs += r;
        out.total_distance += s;
        if r > 0 && n > 1 {
            out.closeness[i] = (r as f64 / (n - 1) as f64) * (r as f64 / s as f64);
        }
    }
    out
}

/// Betweenness by explicit enumeration of every shortest path, in exact
/// rational arithmetic.
pub fn brute_force_betweenness(n: usize, arcs: &[(usize, usize)]) -> Vec<Rational64> {
    let adj = adjacency(n, arcs);
    let d = floyd_warshall(n, arcs);
    let mut bc = vec![Rational64::from_integer(0); n];
    for s in 0..n {
        for t in 0..n {
            let Some(len) = d[s][t] else { continue };
            if s == t {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![s];
            enumerate(&adj, t, len as usize, &mut stack, &mut paths);
            let total = paths.len() as i64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count() as i64;
                bc[v] += Rational64::new(through, total);
            }
        }
    }
    bc
}

fn enumerate(adj: &[Vec<bool>], t: usize, len: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let last = *stack.last().unwrap();
    if stack.len() - 1 == len {
        if last == t {
            out.push(stack.clone());
        }
        return;
    }
    for next in 0..adj.len() {
        if adj[last][next] && !stack.contains(&next) {
            stack.push(next);
            enumerate(adj, t, len, stack, out);
            stack.pop();
        }
    }
}

/// Transitivity by testing every (centre, pair) triple of the undirected
/// simple graph.
pub fn triple_clustering(n: usize, arcs: &[(usize, usize)]) -> f64 {
    let mut und = vec![vec![false; n]; n];
    for &(a, b) in arcs {
        if a != b {
            und[a][b] = true;
            und[b][a] = true;
        }
    }
    let (mut closed, mut connected) = (0u64, 0u64);
    for v in 0..n {
        for a in 0..n {
            for b in (a + 1)..n {
                if a != v && b != v && und[v][a] && und[v][b] {
                    connected += 1;
                    if und[a][b] {
                        closed += 1;
                    }
                }
            }
        }
    }
    if connected == 0 {
        0.0
    } else {
        closed as f64 / connected as f64
    }
}

pub fn to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}

/// Checks betweenness on one random digraph with 2..=8 nodes against the
/// enumeration oracle; the value must equal the rational to 1e-12 relative.
pub fn check_betweenness(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(2..=8);
    let p = r.random_range(0.1..0.7);
    let (g, arcs) = random_digraph(&mut r, n, p);
    let got = netstab_core::node::betweenness_centrality(&g);
    let want = brute_force_betweenness(n, &arcs);
    for v in 0..n {
        if !rel_close(got[v], to_f64(want[v]), 1e-12) {
            return Err(format!("seed {seed} node {v}: {} vs {}", got[v], want[v]));
        }
    }
    Ok(())
}

/// Checks ADARP, diameter, reachable pairs and closeness on one random
/// digraph with up to 64 nodes.
pub fn check_distances(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(1..=64);
    let p = r.random_range(0.01..0.15);
    let (g, arcs) = random_digraph(&mut r, n, p);
    let o = distance_oracle(n, &arcs);
    let m = netstab_core::global::global_metrics(&g, Default::default()).map_err(|e| e.to_string())?;
    if m.reachable_pairs != o.reachable_pairs || u64::from(m.diameter) != o.diameter {
        return Err(format!(
            "seed {seed}: pairs {} vs {}, diameter {} vs {}",
            m.reachable_pairs, o.reachable_pairs, m.diameter, o.diameter
        ));
    }
    let adarp = if o.reachable_pairs == 0 {
        0.0
    } else {
        o.total_distance as f64 / o.reachable_pairs as f64
    };
    if !rel_close(m.adarp, adarp, 1e-9) {
        return Err(format!("seed {seed}: adarp {} vs {adarp}", m.adarp));
    }
    let cl = netstab_core::node::closeness_centrality(&g);
    for v in 0..n {
        if !rel_close(cl[v], o.closeness[v], 1e-9) {
            return Err(format!("seed {seed} node {v}: closeness {} vs {}", cl[v], o.closeness[v]));
        }
    }
    Ok(())
}

pub fn check_clustering(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(1..=64);
    let p = r.random_range(0.02..0.3);
    let (g, arcs) = random_digraph(&mut r, n, p);
    let got = netstab_core::global::clustering_coefficient(&g).map_err(|e| e.to_string())?;
    let want = triple_clustering(n, &arcs);
    if rel_close(got, want, 1e-12) {
        Ok(())
    } else {
        Err(format!("seed {seed}: clustering {got} vs {want}"))
    }
}
