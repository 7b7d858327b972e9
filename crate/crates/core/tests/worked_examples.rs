//! Small instances worked out by hand, pinned end to end: a 5x5 support
//! pattern and one of its matchings, an intervention that exposes a
//! hidden row, a four-matching pattern with unequal benefits, and runs
//! on cycles and DAGs whose intervention counts are known in advance.

use std::collections::BTreeSet;

use ced_core::lscm::{self, WeightMatrix, DEFAULT_WEIGHT_RANGE};
use ced_core::matching::{BipartiteGraph, MarginalMode};
use ced_core::policy::{
    self, BenefitValue, PolicyKind, RunOptions, SelectionMode,
};

fn pattern(rows: &[&[usize]]) -> BipartiteGraph {
    let n = rows.len();
    let support: Vec<Vec<bool>> =
        rows.iter().map(|cols| (0..n).map(|j| cols.contains(&j)).collect()).collect();
    BipartiteGraph::from_support(&support).unwrap()
}

/// 5x5 support whose rows have three nonzeros each; one of its perfect
/// matchings is marked below and must show up in the enumeration.
fn cross_pattern() -> BipartiteGraph {
    pattern(&[&[1, 2, 3], &[0, 3, 4], &[1, 3, 4], &[0, 1, 2], &[0, 2, 4]])
}

const MARKED_MATCHING: [(usize, usize); 5] = [(1, 0), (0, 1), (3, 2), (2, 3), (4, 4)];

#[test]
fn cross_pattern_matchings_contain_the_marked_permutation() {
    let bg = cross_pattern();
    let enumeration = bg.enumerate(10_000);
    assert!(!enumeration.truncated);
    assert!(enumeration.matchings.iter().any(|m| m.pairs() == MARKED_MATCHING));
    for m in &enumeration.matchings {
        assert_eq!(m.len(), 5);
        for &(r, c) in m.pairs() {
            assert!(bg.has_edge(r, c));
        }
    }
    // The sampler may only ever produce members of that same set.
    let all: BTreeSet<_> = enumeration.matchings.iter().map(|m| m.pairs().to_vec()).collect();
    for seed in 0..50 {
        let sampled = bg.sample_matching(seed).unwrap();
        assert!(all.contains(sampled.pairs()));
    }
}

#[test]
fn revealing_an_edge_keeps_exactly_the_matchings_through_it() {
    let bg = cross_pattern();
    let before = bg.enumerate(10_000).matchings;
    let through: BTreeSet<Vec<(usize, usize)>> = before
        .iter()
        .filter(|m| m.pairs().contains(&(1, 3)))
        .map(|m| m.pairs().to_vec())
        .collect();
    assert!(!through.is_empty());

    let after = bg.apply_revealed_edge(1, 3).unwrap();
    let remaining = after.enumerate(10_000).matchings;
    assert_eq!(remaining.len(), through.len());
    for m in &remaining {
        let mut extended = m.pairs().to_vec();
        extended.push((1, 3));
        extended.sort_by_key(|&(_, c)| c);
        assert!(through.contains(&extended));
    }
}

/// Five variables, true rows hidden behind scrambled scaled outputs.
/// Intervening on variable 3 deletes its row from the interventional
/// output; the single observational row without a scaled twin is output
/// row 1, so that row must be matched to variable 3 and unscaled.
#[test]
fn an_intervention_identifies_the_hidden_row() {
    let w = WeightMatrix::from_rows(&[
        vec![0.0, 0.0, 0.0, 0.0, 1.3],
        vec![0.7, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.9, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 1.1, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.8, 0.0],
    ])
    .unwrap();
    let obs = lscm::ica_oracle_with(&w, &[0, 3, 1, 2, 4], &[1.5, -2.0, 0.25, 3.0, -0.5]).unwrap();
    let intervened = lscm::intervened_weights(&w, 3).unwrap();
    let interv =
        lscm::ica_oracle_with(&intervened, &[1, 4, 0, 3, 2], &[2.0, -1.0, 0.5, 1.25, -3.0])
            .unwrap();
    // Output row 3 of the interventional data is the unscaled basis row
    // of the intervened variable; everything else is shared, rescaled.
    assert_eq!(interv.row(3), vec![0.0, 0.0, 0.0, 1.25, 0.0]);

    let got = lscm::recover_row(&obs, &interv, 3).unwrap();
    assert_eq!(got.revealed_ica_row, 1);
    let expected = [0.5, 0.0, 1.1, 0.0, 0.0];
    for (j, &e) in expected.iter().enumerate() {
        assert!((got.revealed_row[j] - e).abs() < 1e-12);
    }
}

/// Four matchings; column 0 sees row 0 twice and rows 1, 2 once each.
/// Worked out by listing all four matchings by hand.
#[test]
fn benefit_arithmetic_on_a_four_matching_pattern() {
    let bg = pattern(&[&[0, 1], &[0, 1, 2], &[0, 1, 3], &[2, 3]]);
    let (count, truncated) = bg.count_matchings(1_000);
    assert!(!truncated);
    assert_eq!(count, 4);

    let marginals = bg.edge_marginals(0, MarginalMode::Exact { enumeration_limit: 1_000 }).unwrap();
    assert_eq!(marginals, vec![(0, 0.5), (1, 0.25), (2, 0.25)]);

    let benefit = policy::marginal_benefit_exact(&bg, 0, 1_000).unwrap();
    assert_eq!(
        benefit.value,
        BenefitValue::Exact { class_size: 4, numerator: 10 } // expected eliminations 10/4
    );
    assert!((benefit.normalized - 0.625).abs() < 1e-15);
    assert!((policy::normalized_benefit(&[0.5, 0.25, 0.25]).unwrap() - 0.625).abs() < 1e-15);

    // Column 2 splits its mass (1/2, 1/2): lower value, so the greedy
    // pick is column 0.
    let col2 = policy::marginal_benefit_exact(&bg, 2, 1_000).unwrap();
    assert!((col2.normalized - 0.5).abs() < 1e-15);
    assert_eq!(policy::select_next(&bg, SelectionMode::Exact, 0, 1_000).unwrap(), 0);
}

#[test]
fn sparse_random_models_land_in_the_expected_density_band() {
    // Edge probability 0.25 on 90 candidate slots: expect about 22.5
    // edges, and the tails beyond [10, 35] have probability under 1e-3.
    for seed in 0..50 {
        let w = lscm::generate_er_model(10, 0.25, DEFAULT_WEIGHT_RANGE, seed).unwrap();
        let count = w.support().edge_count();
        assert!((10..=35).contains(&count), "seed {seed} gave {count} edges");
    }
}

fn cycle_model(n: usize) -> WeightMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        rows[(i + 1) % n][i] = 0.9;
    }
    WeightMatrix::from_rows(&rows).unwrap()
}

#[test]
fn a_single_cycle_needs_exactly_one_intervention() {
    for n in 2..=6 {
        let w = cycle_model(n);
        let obs = lscm::ica_oracle(&w, 31 * n as u64);
        for kind in PolicyKind::ALL {
            let options = RunOptions::new(n, SelectionMode::Exact, 7);
            let outcome = policy::run_identification(&w, &obs, kind, &options).unwrap();
            assert!(outcome.identified);
            assert_eq!(outcome.interventions_used(), 1, "n={n} kind={kind}");
            assert_eq!(outcome.class_size_trace, Some(vec![2, 1]));
        }
    }
}

#[test]
fn two_disjoint_triangles_need_two_adaptive_interventions() {
    let mut rows = vec![vec![0.0; 6]; 6];
    for (u, v) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
        rows[v][u] = 0.8;
    }
    let w = WeightMatrix::from_rows(&rows).unwrap();
    let obs = lscm::ica_oracle(&w, 404);
    let options = RunOptions::new(6, SelectionMode::Exact, 11);
    let outcome = policy::run_identification(&w, &obs, PolicyKind::Adaptive, &options).unwrap();
    assert!(outcome.identified);
    assert_eq!(outcome.interventions_used(), 2);
    // One member per triangle orientation: 2 x 2 graphs, halved twice.
    assert_eq!(outcome.class_size_trace, Some(vec![4, 2, 1]));
}

#[test]
fn dags_are_identified_without_interventions() {
    for seed in 0..20 {
        let w = lscm::generate_er_dag(6, 0.4, DEFAULT_WEIGHT_RANGE, seed).unwrap();
        let obs = lscm::ica_oracle(&w, seed ^ 0xda6);
        assert!(BipartiteGraph::from_ica(&obs).unwrap().is_unique().unwrap());
        for kind in PolicyKind::ALL {
            let options = RunOptions::new(6, SelectionMode::Exact, seed);
            let outcome = policy::run_identification(&w, &obs, kind, &options).unwrap();
            assert!(outcome.identified);
            assert_eq!(outcome.interventions_used(), 0);
        }
    }
}
