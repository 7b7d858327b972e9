//! Intervention-selection strategies and the identification loop.
//!
//! One intervention on variable `v` reveals which oracle row is the
//! structural row of `v`. If the equivalence class currently has `N`
//! members and `n_r` of them assign row `r` to `v`, the intervention
//! eliminates `N - n_r` members with probability `n_r / N`, so its
//! expected benefit is `sum_r p_r (N - n_r) = N * sum_r p_r (1 - p_r)`.
//! The adaptive strategy picks the variable maximizing this quantity;
//! the expected benefit is adaptive monotone and adaptive submodular
//! (checkable by brute force with [`check_adaptive_submodularity`]), so
//! the greedy choice carries the usual `1 - 1/e` guarantee against the
//! optimal adaptive policy.
//!
//! Everything here treats the bipartite graph as the state: applying a
//! revealed edge is how a partial realization is carried forward.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lscm::{self, IcaOutput, LscmError, WeightMatrix};
use crate::matching::{BipartiteGraph, MatchingError, DEFAULT_ENUMERATION_LIMIT};
use crate::seeds;

/// Two expected benefits closer than this are treated as tied by the
/// submodularity checker.
pub const SUBMODULARITY_TOLERANCE: f64 = 1e-9;

/// Default cap on unresolved variables for the brute-force
/// submodularity check, which enumerates all partial realizations.
pub const SUBMODULARITY_CHECK_LIMIT: usize = 6;

/// Distributions handed to [`normalized_benefit`] must sum to one
/// within this.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Model(#[from] LscmError),
    #[error("no candidate variables are left to intervene on")]
    NoCandidates,
    #[error("not a probability distribution: {0}")]
    BadDistribution(String),
    #[error("submodularity check is limited to {limit} unresolved variables, got {active}")]
    TooLargeForCheck { active: usize, limit: usize },
}

/// The three intervention-selection strategies the harness benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    /// Greedy maximization of expected class shrinkage.
    Adaptive,
    /// Uniform choice among unresolved variables that can still be
    /// informative (bipartite degree at least two).
    Random,
    /// The unresolved variable of highest bipartite degree.
    MaxDegree,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Adaptive, PolicyKind::Random, PolicyKind::MaxDegree];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Adaptive => "adaptive",
            PolicyKind::Random => "random",
            PolicyKind::MaxDegree => "maxdegree",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(PolicyKind::Adaptive),
            "random" => Ok(PolicyKind::Random),
            "maxdegree" => Ok(PolicyKind::MaxDegree),
            other => Err(format!("unknown strategy {other:?}; expected adaptive, random, or maxdegree")),
        }
    }
}

/// How benefits are computed: exactly over the enumerated class, or from
/// matchings drawn by the greedy sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Exact,
    Sampled { samples: usize },
}

/// `sum_i p_i (1 - p_i)` without validating `p`; the building block the
/// estimator applies to empirical frequencies.
pub fn l_statistic(p: &[f64]) -> f64 {
    p.iter().map(|&pi| pi * (1.0 - pi)).sum()
}

/// [`l_statistic`] over a checked probability distribution. Maximal at
/// the uniform distribution, where it equals `1 - 1/k`.
pub fn normalized_benefit(p: &[f64]) -> Result<f64, PolicyError> {
    if p.is_empty() {
        return Err(PolicyError::BadDistribution("empty".into()));
    }
    if let Some(&bad) = p.iter().find(|&&pi| !(0.0..=1.0).contains(&pi)) {
        return Err(PolicyError::BadDistribution(format!("entry {bad} outside [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(PolicyError::BadDistribution(format!("sums to {sum}")));
    }
    Ok(l_statistic(p))
}

/// The estimated value of intervening on one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BenefitEstimate {
    pub variable: usize,
    /// `sum_r p_r (1 - p_r)`; multiply by the class size for the
    /// expected number of eliminated members.
    pub normalized: f64,
    pub value: BenefitValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BenefitValue {
    /// Exact integers from full enumeration: the expected benefit is
    /// `numerator / class_size` with `numerator = sum_r n_r (N - n_r)`.
    Exact { class_size: u64, numerator: u128 },
    /// Empirical frequencies from this many sampler draws.
    Sampled { samples: usize },
}

/// Exact expected benefit of intervening on `variable`, by enumerating
/// the perfect matchings of the active subgraph.
pub fn marginal_benefit_exact(
    bg: &BipartiteGraph,
    variable: usize,
    enumeration_limit: u64,
) -> Result<BenefitEstimate, PolicyError> {
    if !bg.is_col_active(variable) {
        return Err(MatchingError::InactiveColumn(variable).into());
    }
    let all = exact_benefits(bg, enumeration_limit)?;
    all.into_iter()
        .find(|b| b.variable == variable)
        .ok_or(PolicyError::NoCandidates)
}

/// Exact expected benefits for every unresolved variable, from a single
/// enumeration pass.
pub fn exact_benefits(
    bg: &BipartiteGraph,
    enumeration_limit: u64,
) -> Result<Vec<BenefitEstimate>, PolicyError> {
    let counts = bg.exact_marginal_counts(enumeration_limit)?;
    if counts.total == 0 {
        return Err(MatchingError::NoPerfectMatching.into());
    }
    let n_total = counts.total as u128;
    Ok(bg
        .active_cols()
        .into_iter()
        .map(|col| {
            let numerator: u128 = counts
                .counts_for(col)
                .iter()
                .map(|&n_r| n_r as u128 * (n_total - n_r as u128))
                .sum();
            BenefitEstimate {
                variable: col,
                normalized: numerator as f64 / (counts.total as f64 * counts.total as f64),
                value: BenefitValue::Exact { class_size: counts.total, numerator },
            }
        })
        .collect())
}

/// Estimated expected benefits for every unresolved variable, from one
/// shared batch of sampler draws.
pub fn sampled_benefits(
    bg: &BipartiteGraph,
    samples: usize,
    seed: u64,
) -> Result<Vec<BenefitEstimate>, PolicyError> {
    assert!(samples > 0, "need at least one sample");
    let batch = bg.sample_batch(samples, seed)?;
    Ok(bg
        .active_cols()
        .into_iter()
        .map(|col| {
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for m in &batch {
                let r = m.row_for_col(col).expect("sampled matchings cover active columns");
                *counts.entry(r).or_insert(0) += 1;
            }
            let freqs: Vec<f64> =
                counts.values().map(|&c| c as f64 / samples as f64).collect();
            BenefitEstimate {
                variable: col,
                normalized: l_statistic(&freqs),
                value: BenefitValue::Sampled { samples },
            }
        })
        .collect())
}

/// Picks the next intervention target greedily. Exact mode compares the
/// integer benefit numerators (no floating-point ties); both modes break
/// remaining ties toward the lowest variable index.
pub fn select_next(
    bg: &BipartiteGraph,
    mode: SelectionMode,
    seed: u64,
    enumeration_limit: u64,
) -> Result<usize, PolicyError> {
    let estimates = match mode {
        SelectionMode::Exact => exact_benefits(bg, enumeration_limit)?,
        SelectionMode::Sampled { samples } => sampled_benefits(bg, samples, seed)?,
    };
    select_from_estimates(&estimates)
}

fn select_from_estimates(estimates: &[BenefitEstimate]) -> Result<usize, PolicyError> {
    let mut best: Option<&BenefitEstimate> = None;
    for e in estimates {
        let better = match best {
            None => true,
            Some(b) => match (&e.value, &b.value) {
                (
                    BenefitValue::Exact { numerator: en, .. },
                    BenefitValue::Exact { numerator: bn, .. },
                ) => en > bn,
                _ => e.normalized > b.normalized,
            },
        };
        if better {
            best = Some(e);
        }
    }
    best.map(|e| e.variable).ok_or(PolicyError::NoCandidates)
}

/// Options for [`run_identification`].
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Maximum number of interventions.
    pub budget: usize,
    pub mode: SelectionMode,
    /// Drives everything random in the run: interventional oracle
    /// draws, sampler batches, and the random baseline's choices.
    pub seed: u64,
    /// Cap for exact-mode enumeration; exceeding it is an error rather
    /// than a silent approximation.
    pub enumeration_limit: u64,
    /// Lets the random baseline draw from every unresolved variable
    /// instead of only those with degree at least two.
    pub naive_random_pool: bool,
}

impl RunOptions {
    pub fn new(budget: usize, mode: SelectionMode, seed: u64) -> Self {
        RunOptions {
            budget,
            mode,
            seed,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
            naive_random_pool: false,
        }
    }
}

/// One intervention performed during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionRecord {
    pub round: usize,
    pub target: usize,
    pub revealed_ica_row: usize,
    pub revealed_row: Vec<f64>,
}

/// What a full identification run did.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub interventions: Vec<InterventionRecord>,
    /// Whether the matching became unique within the budget.
    pub identified: bool,
    /// Exact mode only: class size before any intervention, then after
    /// each one; the last entry is the final class size.
    pub class_size_trace: Option<Vec<u64>>,
    /// Final class size when known: always in exact mode, and 1 in
    /// sampled mode once identified.
    pub final_class_size: Option<u64>,
}

impl RunOutcome {
    pub fn interventions_used(&self) -> usize {
        self.interventions.len()
    }
}

// Seed-derivation tags for the independent randomness streams of a run.
const TAG_INTERVENE: u64 = 1;
const TAG_BENEFIT: u64 = 2;
const TAG_BASELINE: u64 = 3;

/// Runs the identification loop: intervene, recover a row, shrink the
/// bipartite graph, until the matching is unique or the budget is spent.
///
/// The observational output is taken as given so that competing
/// strategies can be compared on the identical instance.
pub fn run_identification(
    w: &WeightMatrix,
    obs: &IcaOutput,
    kind: PolicyKind,
    options: &RunOptions,
) -> Result<RunOutcome, PolicyError> {
    let mut bg = BipartiteGraph::from_ica(obs)?;
    let exact = matches!(options.mode, SelectionMode::Exact);
    let mut trace: Option<Vec<u64>> = exact.then(Vec::new);
    let mut baseline_rng = ChaCha8Rng::seed_from_u64(seeds::derive(options.seed, &[TAG_BASELINE]));
    let mut interventions: Vec<InterventionRecord> = Vec::new();
    let identified;

    loop {
        // In exact mode one enumeration pass per round yields the class
        // size for the trace, the uniqueness test, and the benefits.
        let exact_estimates = if exact {
            let estimates = exact_benefits(&bg, options.enumeration_limit)?;
            let class_size = match estimates.first() {
                Some(BenefitEstimate { value: BenefitValue::Exact { class_size, .. }, .. }) => {
                    *class_size
                }
                _ => 1, // no unresolved variables: the empty matching
            };
            if let Some(t) = trace.as_mut() {
                t.push(class_size);
            }
            if class_size == 1 {
                identified = true;
                break;
            }
            Some(estimates)
        } else {
            if bg.is_unique()? {
                identified = true;
                break;
            }
            None
        };

        let round = interventions.len();
        if round == options.budget {
            identified = false;
            break;
        }

        let target = match kind {
            PolicyKind::Adaptive => match exact_estimates {
                Some(est) => select_from_estimates(&est)?,
                None => {
                    let SelectionMode::Sampled { samples } = options.mode else {
                        unreachable!("exact mode always has estimates")
                    };
                    let seed = seeds::derive(options.seed, &[TAG_BENEFIT, round as u64]);
                    select_from_estimates(&sampled_benefits(&bg, samples, seed)?)?
                }
            },
            PolicyKind::Random => {
                let mut pool: Vec<usize> = if options.naive_random_pool {
                    bg.active_cols()
                } else {
                    bg.active_cols().into_iter().filter(|&c| bg.col_degree(c) >= 2).collect()
                };
                if pool.is_empty() {
                    // A non-unique matching always leaves some variable
                    // with degree >= 2, but stay safe.
                    pool = bg.active_cols();
                }
                if pool.is_empty() {
                    return Err(PolicyError::NoCandidates);
                }
                pool[baseline_rng.random_range(0..pool.len())]
            }
            PolicyKind::MaxDegree => bg
                .active_cols()
                .into_iter()
                .max_by_key(|&c| (bg.col_degree(c), std::cmp::Reverse(c)))
                .ok_or(PolicyError::NoCandidates)?,
        };

        let interv_seed = seeds::derive(options.seed, &[TAG_INTERVENE, round as u64]);
        let interventional = lscm::intervene(w, target, interv_seed)?;
        let recovered = lscm::recover_row(obs, &interventional, target)?;
        bg = bg.apply_revealed_edge(recovered.revealed_ica_row, target)?;
        interventions.push(InterventionRecord {
            round,
            target,
            revealed_ica_row: recovered.revealed_ica_row,
            revealed_row: recovered.revealed_row,
        });
    }

    let final_class_size = match (&trace, identified) {
        (Some(t), _) => t.last().copied(),
        (None, true) => Some(1),
        (None, false) => None,
    };
    Ok(RunOutcome { interventions, identified, class_size_trace: trace, final_class_size })
}

/// The verdict of the brute-force adaptive-submodularity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularityReport {
    /// Distinct consistent partial realizations inspected.
    pub realizations: usize,
    /// (realization, sub-realization, variable) triples compared.
    pub comparisons: usize,
    /// Every marginal benefit was nonnegative.
    pub monotone: bool,
    /// No marginal benefit grew when conditioning on more evidence.
    pub submodular: bool,
    /// Largest observed `benefit(after) - benefit(before)`; at most
    /// [`SUBMODULARITY_TOLERANCE`] when `submodular` is true.
    pub worst_violation: f64,
}

impl SubmodularityReport {
    pub fn holds(&self) -> bool {
        self.monotone && self.submodular
    }
}

/// Verifies adaptive monotonicity and adaptive submodularity of the
/// expected benefit on one instance by sheer enumeration: every
/// consistent partial realization, every sub-realization of it, every
/// still-unresolved variable.
pub fn check_adaptive_submodularity(
    bg: &BipartiteGraph,
    max_active: usize,
) -> Result<SubmodularityReport, PolicyError> {
    let active = bg.active_count();
    if active > max_active {
        return Err(PolicyError::TooLargeForCheck { active, limit: max_active });
    }
    let enumeration = bg.enumerate(DEFAULT_ENUMERATION_LIMIT);
    if enumeration.truncated {
        return Err(MatchingError::EnumerationTruncated { limit: DEFAULT_ENUMERATION_LIMIT }.into());
    }
    let matchings: Vec<Vec<(usize, usize)>> =
        enumeration.matchings.iter().map(|m| m.pairs().to_vec()).collect();
    if matchings.is_empty() {
        return Err(MatchingError::NoPerfectMatching.into());
    }
    let cols = bg.active_cols();

    // Consistent partial realizations = restrictions of some matching to
    // a column subset. Realizations are kept as (col, row) pairs sorted
    // by column, so equal evidence deduplicates structurally.
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut realizations: Vec<Vec<(usize, usize)>> = Vec::new();
    for m in &matchings {
        for mask in 0u64..(1 << cols.len()) {
            let psi: Vec<(usize, usize)> = m
                .iter()
                .enumerate()
                .filter(|&(k, _)| mask >> k & 1 == 1)
                .map(|(_, &(r, c))| (c, r))
                .collect();
            index.entry(psi.clone()).or_insert_with(|| {
                realizations.push(psi);
                realizations.len() - 1
            });
        }
    }

    // benefit[id] maps each unresolved variable to its expected benefit
    // under that evidence.
    let benefit: Vec<HashMap<usize, f64>> = realizations
        .iter()
        .map(|psi| {
            let survivors: Vec<&Vec<(usize, usize)>> = matchings
                .iter()
                .filter(|m| {
                    psi.iter().all(|&(c, r)| m.iter().any(|&(mr, mc)| mc == c && mr == r))
                })
                .collect();
            let total = survivors.len() as f64;
            let mut per_var = HashMap::new();
            for &v in &cols {
                if psi.iter().any(|&(c, _)| c == v) {
                    continue;
                }
                let mut counts: HashMap<usize, usize> = HashMap::new();
                for m in &survivors {
                    let row = m
                        .iter()
                        .find(|&&(_, mc)| mc == v)
                        .map(|&(mr, _)| mr)
                        .expect("matchings cover active columns");
                    *counts.entry(row).or_insert(0) += 1;
                }
                let delta: f64 = counts
                    .values()
                    .map(|&n_r| n_r as f64 * (total - n_r as f64) / total)
                    .sum();
                per_var.insert(v, delta);
            }
            per_var
        })
        .collect();

    let mut comparisons = 0usize;
    let mut monotone = true;
    let mut submodular = true;
    let mut worst: f64 = 0.0;
    for (sup_id, sup) in realizations.iter().enumerate() {
        for (&v, &delta_sup) in &benefit[sup_id] {
            if delta_sup < -SUBMODULARITY_TOLERANCE {
                monotone = false;
            }
            // Every sub-realization of consistent evidence is itself
            // consistent, so the lookup below cannot miss.
            for mask in 0u64..(1 << sup.len()) {
                let sub: Vec<(usize, usize)> = sup
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &pair)| pair)
                    .collect();
                let sub_id = index[&sub];
                let delta_sub = benefit[sub_id][&v];
                comparisons += 1;
                let violation = delta_sup - delta_sub;
                worst = worst.max(violation);
                if violation > SUBMODULARITY_TOLERANCE {
                    submodular = false;
                }
            }
        }
    }

    Ok(SubmodularityReport {
        realizations: realizations.len(),
        comparisons,
        monotone,
        submodular,
        worst_violation: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lscm::{generate_er_dag, generate_er_model, ica_oracle, DEFAULT_WEIGHT_RANGE};
    use crate::matching::MarginalMode;

    fn bg_from(rows: &[&[usize]]) -> BipartiteGraph {
        let n = rows.len();
        let support: Vec<Vec<bool>> =
            rows.iter().map(|cols| (0..n).map(|c| cols.contains(&c)).collect()).collect();
        BipartiteGraph::from_support(&support).unwrap()
    }

    #[test]
    fn normalized_benefit_basics() {
        assert_eq!(normalized_benefit(&[1.0]).unwrap(), 0.0);
        let k = 4;
        let uniform = vec![1.0 / k as f64; k];
        let l = normalized_benefit(&uniform).unwrap();
        assert!((l - (1.0 - 1.0 / k as f64)).abs() < 1e-12);
        assert!(normalized_benefit(&[]).is_err());
        assert!(normalized_benefit(&[0.5, 0.4]).is_err());
        assert!(normalized_benefit(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn uniform_maximizes_the_benefit() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xb37);
        for _ in 0..50 {
            let k = rng.random_range(2..=8);
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|&x| x / sum).collect();
            let uniform = vec![1.0 / k as f64; k];
            assert!(
                normalized_benefit(&p).unwrap()
                    <= normalized_benefit(&uniform).unwrap() + 1e-12
            );
        }
    }

    #[test]
    fn exact_benefit_on_complete_two_by_two() {
        let k22 = bg_from(&[&[0, 1], &[0, 1]]);
        let b = marginal_benefit_exact(&k22, 0, 100).unwrap();
        assert_eq!(
            b.value,
            BenefitValue::Exact { class_size: 2, numerator: 2 }
        );
        assert!((b.normalized - 0.5).abs() < 1e-12);
        assert!(marginal_benefit_exact(&k22, 2, 100).is_err());
    }

    #[test]
    fn exact_benefit_matches_outcome_by_outcome_reduction() {
        // Independently: benefit = sum over rows of
        // P(row) * (N - |class after pinning that row|).
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b2);
        for _ in 0..60 {
            let n = rng.random_range(2..=6);
            let g = loop {
                let support: Vec<Vec<bool>> =
                    (0..n).map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect()).collect();
                if let Ok(g) = BipartiteGraph::from_support(&support) {
                    if !g.enumerate(10_000).matchings.is_empty() {
                        break g;
                    }
                }
            };
            let est = exact_benefits(&g, 10_000).unwrap();
            let (total, _) = g.count_matchings(10_000);
            for b in est {
                let BenefitValue::Exact { class_size, numerator } = b.value else {
                    panic!("exact mode")
                };
                assert_eq!(class_size, total);
                let marg = g
                    .edge_marginals(b.variable, MarginalMode::Exact { enumeration_limit: 10_000 })
                    .unwrap();
                let mut expected: u128 = 0;
                for (row, _) in marg {
                    let reduced = g.apply_revealed_edge(row, b.variable).unwrap();
                    let (kept, _) = reduced.count_matchings(10_000);
                    assert!(kept >= 1);
                    expected += kept as u128 * (total - kept) as u128;
                }
                assert_eq!(numerator, expected);
            }
        }
    }

    #[test]
    fn sampled_benefits_are_seeded_and_cover_active_cols() {
        let g = bg_from(&[&[0, 1], &[0, 1, 2], &[1, 2]]);
        let a = sampled_benefits(&g, 300, 5).unwrap();
        let b = sampled_benefits(&g, 300, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for est in &a {
            assert!(est.normalized >= 0.0);
            assert_eq!(est.value, BenefitValue::Sampled { samples: 300 });
        }
    }

    #[test]
    fn selection_breaks_ties_toward_the_lowest_index() {
        let k22 = bg_from(&[&[0, 1], &[0, 1]]);
        assert_eq!(select_next(&k22, SelectionMode::Exact, 0, 100).unwrap(), 0);
        // Column 2 is forced (benefit 0), columns 0 and 1 tie.
        let g = bg_from(&[&[0, 1], &[0, 1], &[2]]);
        assert_eq!(select_next(&g, SelectionMode::Exact, 0, 100).unwrap(), 0);
        let est = exact_benefits(&g, 100).unwrap();
        assert_eq!(est[2].variable, 2);
        assert_eq!(est[2].normalized, 0.0);
    }

    fn exact_options(budget: usize, seed: u64) -> RunOptions {
        RunOptions::new(budget, SelectionMode::Exact, seed)
    }

    #[test]
    fn dags_are_identified_without_interventions() {
        for seed in 0..10 {
            let w = generate_er_dag(6, 0.4, DEFAULT_WEIGHT_RANGE, seed).unwrap();
            let obs = ica_oracle(&w, 100 + seed);
            for kind in PolicyKind::ALL {
                let out = run_identification(&w, &obs, kind, &exact_options(6, seed)).unwrap();
                assert!(out.identified);
                assert_eq!(out.interventions_used(), 0);
                assert_eq!(out.class_size_trace, Some(vec![1]));
                assert_eq!(out.final_class_size, Some(1));
            }
        }
    }

    #[test]
    fn a_two_cycle_takes_exactly_one_intervention() {
        // The class is a singleton but the row assignment is ambiguous
        // until one intervention pins it down.
        let w = WeightMatrix::from_rows(&[vec![0.0, 0.8], vec![-0.6, 0.0]]).unwrap();
        let obs = ica_oracle(&w, 7);
        for kind in PolicyKind::ALL {
            let out = run_identification(&w, &obs, kind, &exact_options(2, 13)).unwrap();
            assert!(out.identified, "{kind}");
            assert_eq!(out.interventions_used(), 1, "{kind}");
            assert_eq!(out.class_size_trace, Some(vec![2, 1]), "{kind}");
            let rec = &out.interventions[0];
            let t = rec.target;
            assert_eq!(obs.row_origin()[rec.revealed_ica_row], t);
            for j in 0..2 {
                assert!((rec.revealed_row[j] - w.entry(t, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn budget_zero_reports_without_intervening() {
        let w = WeightMatrix::from_rows(&[vec![0.0, 0.8], vec![-0.6, 0.0]]).unwrap();
        let obs = ica_oracle(&w, 7);
        let out = run_identification(&w, &obs, PolicyKind::Adaptive, &exact_options(0, 1)).unwrap();
        assert!(!out.identified);
        assert_eq!(out.interventions_used(), 0);
        assert_eq!(out.class_size_trace, Some(vec![2]));
        assert_eq!(out.final_class_size, Some(2));
    }

    #[test]
    fn identification_is_deterministic_given_seeds() {
        let w = generate_er_model(7, 0.3, DEFAULT_WEIGHT_RANGE, 50).unwrap();
        let obs = ica_oracle(&w, 51);
        for kind in PolicyKind::ALL {
            let a = run_identification(&w, &obs, kind, &exact_options(7, 99)).unwrap();
            let b = run_identification(&w, &obs, kind, &exact_options(7, 99)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exact_runs_identify_within_a_full_budget_and_shrink_monotonically() {
        for seed in 0..15 {
            let Ok(w) = generate_er_model(7, 2.0 / 7.0, DEFAULT_WEIGHT_RANGE, 700 + seed) else {
                continue;
            };
            let obs = ica_oracle(&w, 800 + seed);
            for kind in PolicyKind::ALL {
                let out = run_identification(&w, &obs, kind, &exact_options(7, seed)).unwrap();
                assert!(out.identified, "seed {seed} kind {kind}");
                let trace = out.class_size_trace.as_ref().unwrap();
                assert_eq!(trace.len(), out.interventions_used() + 1);
                assert_eq!(*trace.last().unwrap(), 1);
                for w in trace.windows(2) {
                    assert!(w[1] <= w[0], "class must never grow: {trace:?}");
                }
                // Each revealed row matches the ground truth.
                for rec in &out.interventions {
                    assert_eq!(obs.row_origin()[rec.revealed_ica_row], rec.target);
                }
            }
        }
    }

    #[test]
    fn sampled_mode_identifies_small_cycles() {
        let w = WeightMatrix::from_rows(&[
            vec![0.0, 0.0, 0.0, 0.9],
            vec![0.7, 0.0, 0.0, 0.0],
            vec![0.0, -0.8, 0.0, 0.0],
            vec![0.0, 0.0, 0.6, 0.0],
        ])
        .unwrap();
        let obs = ica_oracle(&w, 17);
        let options = RunOptions::new(4, SelectionMode::Sampled { samples: 200 }, 23);
        let out = run_identification(&w, &obs, PolicyKind::Adaptive, &options).unwrap();
        assert!(out.identified);
        assert!(out.class_size_trace.is_none());
        assert_eq!(out.final_class_size, Some(1));
        assert!(out.interventions_used() >= 1);
    }

    #[test]
    fn submodularity_holds_on_small_instances() {
        let patterns: Vec<BipartiteGraph> = vec![
            bg_from(&[&[0, 1], &[0, 1]]),
            bg_from(&[&[0, 1], &[0, 1, 2], &[1, 2]]),
            bg_from(&[&[0, 4], &[1, 0], &[2, 1], &[3, 2], &[4, 3]]),
        ];
        for g in patterns {
            let report = check_adaptive_submodularity(&g, SUBMODULARITY_CHECK_LIMIT).unwrap();
            assert!(report.holds(), "{report:?}");
            assert!(report.worst_violation <= SUBMODULARITY_TOLERANCE);
            assert!(report.realizations > 1);
        }
    }

    #[test]
    fn submodularity_check_rejects_large_instances() {
        let w = generate_er_model(8, 0.5, DEFAULT_WEIGHT_RANGE, 3).unwrap();
        let obs = ica_oracle(&w, 4);
        let g = BipartiteGraph::from_ica(&obs).unwrap();
        assert_eq!(
            check_adaptive_submodularity(&g, 6),
            Err(PolicyError::TooLargeForCheck { active: 8, limit: 6 })
        );
    }

    #[test]
    fn strategy_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("greedy".parse::<PolicyKind>().is_err());
    }
}
