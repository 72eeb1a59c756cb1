mod support;

use netstab_core::global::{clustering_coefficient, global_metrics};
use netstab_core::node::{betweenness_centrality, contribution_index_from};
use support::*;

#[test]
fn betweenness_matches_path_enumeration() {
    for seed in 0..100 {
        check_betweenness(seed).unwrap();
    }
}

#[test]
fn distances_match_floyd_warshall() {
    for seed in 1000..1100 {
        check_distances(seed).unwrap();
    }
}

#[test]
fn clustering_matches_triple_count() {
    for seed in 2000..2050 {
        check_clustering(seed).unwrap();
    }
}

#[test]
fn contribution_index_fixtures() {
    assert_eq!(contribution_index_from(9, 1), Some(0.8));
    for k in 1..20 {
        assert_eq!(contribution_index_from(k, k), Some(0.0));
    }
    assert_eq!(contribution_index_from(0, 5), Some(-1.0));
    assert_eq!(contribution_index_from(0, 0), None);
}

#[test]
fn path_fixture() {
    let g = graph(3, &[(0, 1), (1, 2)]);
    let m = global_metrics(&g, Default::default()).unwrap();
    assert_eq!(m.adarp, 4.0 / 3.0);
    assert_eq!(m.diameter, 2);
    assert_eq!(betweenness_centrality(&g), vec![0.0, 1.0, 0.0]);
}

#[test]
fn triangle_and_star_clustering() {
    let tri = graph(3, &[(0, 1), (1, 2), (2, 0)]);
    assert_eq!(clustering_coefficient(&tri).unwrap(), 1.0);
    let star = graph(5, &[(0, 1), (0, 2), (3, 0), (4, 0)]);
    assert_eq!(clustering_coefficient(&star).unwrap(), 0.0);
}

#[test]
fn oracle_sanity() {
    // Diamond a->{b,c}->d: two shortest paths, each inner node carries half.
    let bc = brute_force_betweenness(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
    assert_eq!(bc[1], num_rational::Rational64::new(1, 2));
    assert_eq!(triple_clustering(3, &[(0, 1), (1, 2)]), 0.0);
}
