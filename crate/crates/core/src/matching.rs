//! The bipartite encoding of an equivalence class.
//!
//! Left nodes are the rows of an observational oracle output, right nodes
//! are the variables, and an edge `(r, j)` means row `r` has a nonzero
//! entry at variable `j`. Assigning every variable a distinct row that
//! could be its structural row is a perfect matching, and the perfect
//! matchings correspond one-to-one with the candidate causal graphs.
//!
//! Interventions resolve variables one at a time: [`apply_revealed_edge`]
//! pins a (row, variable) pair and deactivates both endpoints, shrinking
//! the matching problem. The class is identified exactly when the
//! remaining graph has a unique perfect matching.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::DirectedGraph;
use crate::lscm::IcaOutput;
use crate::seeds;

/// Bitmask adjacency bounds instances at 64 nodes per side.
pub const MAX_NODES: usize = 64;

/// Default cap on how many matchings enumeration will visit.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1_000_000;

/// How many times the greedy sampler restarts after dead ends before
/// falling back or giving up.
pub const SAMPLER_MAX_RESTARTS: usize = 100;

/// Instances with at most this many unresolved variables fall back to
/// uniform sampling from a full enumeration when the greedy sampler
/// keeps dead-ending.
pub const SAMPLER_FALLBACK_LIMIT: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("bipartite graphs are limited to {limit} nodes per side, got {n}")]
    TooManyNodes { n: usize, limit: usize },
    #[error("support pattern must be square, got {rows} rows of width {width}")]
    NotSquare { rows: usize, width: usize },
    #[error("row {0} has no support; no perfect matching can exist")]
    EmptyRow(usize),
    #[error("column {0} has no support; no perfect matching can exist")]
    EmptyColumn(usize),
    #[error("({row}, {col}) is not an edge between an active row and an active column")]
    NotAnActiveEdge { row: usize, col: usize },
    #[error("column {0} is not active")]
    InactiveColumn(usize),
    #[error("the graph has no perfect matching")]
    NoPerfectMatching,
    #[error("enumeration exceeded the limit of {limit} matchings")]
    EnumerationTruncated { limit: u64 },
    #[error("greedy sampler dead-ended {restarts} times and the instance is too large to enumerate")]
    SamplerExhausted { restarts: usize },
    #[error("a full perfect matching on a fully active graph is required, got {got} of {need} pairs")]
    IncompleteMatching { got: usize, need: usize },
    #[error("invalid support text: {0}")]
    Parse(String),
}

/// A partial assignment of active columns to distinct rows, stored as
/// `(row, col)` pairs sorted by column.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable_by_key(|&(_, c)| c);
        Matching { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn row_for_col(&self, col: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&col, |&(_, c)| c)
            .ok()
            .map(|i| self.pairs[i].0)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Exact per-column marginals over the full set of perfect matchings:
/// `counts[col][row]` matchings assign `row` to `col`, out of `total`.
#[derive(Debug, Clone)]
pub struct MarginalCounts {
    pub total: u64,
    counts: Vec<Vec<u64>>,
}

impl MarginalCounts {
    pub fn counts_for(&self, col: usize) -> &[u64] {
        &self.counts[col]
    }
}

/// The bipartite graph between oracle output rows and variables, with
/// the still-unresolved subsets of each side marked active.
///
/// The active row and column counts always agree, and adjacency is kept
/// restricted to active pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n: usize,
    adj: Vec<u64>,
    active_rows: u64,
    active_cols: u64,
}

impl BipartiteGraph {
    /// Builds the graph from a square 0/1 support pattern; every row and
    /// column must have at least one edge.
    pub fn from_support(support: &[Vec<bool>]) -> Result<Self, MatchingError> {
        let n = support.len();
        if n > MAX_NODES {
            return Err(MatchingError::TooManyNodes { n, limit: MAX_NODES });
        }
        for row in support {
            if row.len() != n {
                return Err(MatchingError::NotSquare { rows: n, width: row.len() });
            }
        }
        let adj: Vec<u64> = support
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold(0u64, |m, (j, &b)| if b { m | 1 << j } else { m })
            })
            .collect();
        if let Some(r) = adj.iter().position(|&m| m == 0) {
            return Err(MatchingError::EmptyRow(r));
        }
        for c in 0..n {
            if !adj.iter().any(|&m| m >> c & 1 == 1) {
                return Err(MatchingError::EmptyColumn(c));
            }
        }
        let all = full_mask(n);
        Ok(BipartiteGraph { n, adj, active_rows: all, active_cols: all })
    }

    /// Builds the graph from an observational oracle output.
    pub fn from_ica(obs: &IcaOutput) -> Result<Self, MatchingError> {
        Self::from_support(&obs.support())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unresolved columns, ascending.
    pub fn active_cols(&self) -> Vec<usize> {
        bits(self.active_cols).collect()
    }

    /// Unresolved rows, ascending.
    pub fn active_rows(&self) -> Vec<usize> {
        bits(self.active_rows).collect()
    }

    pub fn is_col_active(&self, col: usize) -> bool {
        col < self.n && self.active_cols >> col & 1 == 1
    }

    pub fn is_row_active(&self, row: usize) -> bool {
        row < self.n && self.active_rows >> row & 1 == 1
    }

    /// Number of unresolved variables (equal on both sides).
    pub fn active_count(&self) -> usize {
        self.active_cols.count_ones() as usize
    }

    pub fn has_edge(&self, row: usize, col: usize) -> bool {
        row < self.n && col < self.n && self.adj[row] >> col & 1 == 1
    }

    pub fn col_degree(&self, col: usize) -> usize {
        bits(self.active_rows).filter(|&r| self.adj[r] >> col & 1 == 1).count()
    }

    pub fn row_degree(&self, row: usize) -> usize {
        self.adj[row].count_ones() as usize
    }

    fn col_mask(&self, col: usize) -> u64 {
        let mut mask = 0u64;
        for r in bits(self.active_rows) {
            if self.adj[r] >> col & 1 == 1 {
                mask |= 1 << r;
            }
        }
        mask
    }

    /// Serializes the support pattern (active or not) as 0/1 text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.n {
            for c in 0..self.n {
                if c > 0 {
                    out.push(' ');
                }
                out.push(if self.adj[r] >> c & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`to_text`](Self::to_text); the
    /// result has every node active.
    pub fn from_text(text: &str) -> Result<Self, MatchingError> {
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<bool>, _> = line
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(MatchingError::Parse(format!(
                        "line {}: expected 0 or 1, got {:?}",
                        lineno + 1,
                        other
                    ))),
                })
                .collect();
            rows.push(row?);
        }
        if rows.is_empty() {
            return Err(MatchingError::Parse("no rows".into()));
        }
        Self::from_support(&rows)
    }

    /// Visits perfect matchings on the active subgraph in lexicographic
    /// order (columns ascending, rows ascending within a column), up to
    /// `limit`. Returns true when the limit cut the walk short.
    fn visit_matchings<F: FnMut(&[(usize, usize)])>(&self, limit: u64, f: &mut F) -> bool {
        struct Walk<'a, F> {
            cols: &'a [usize],
            col_masks: &'a [u64],
            assignment: Vec<(usize, usize)>,
            visited: u64,
            limit: u64,
            truncated: bool,
            f: &'a mut F,
        }

        impl<F: FnMut(&[(usize, usize)])> Walk<'_, F> {
            fn descend(&mut self, depth: usize, used_rows: u64) {
                if depth == self.cols.len() {
                    if self.visited == self.limit {
                        self.truncated = true;
                        return;
                    }
                    self.visited += 1;
                    (self.f)(&self.assignment);
                    return;
                }
                // Abandon the branch early if some later column already
                // has no row left.
                if self.col_masks[depth + 1..].iter().any(|&m| m & !used_rows == 0) {
                    return;
                }
                let avail = self.col_masks[depth] & !used_rows;
                for r in bits(avail) {
                    self.assignment.push((r, self.cols[depth]));
                    self.descend(depth + 1, used_rows | 1 << r);
                    self.assignment.pop();
                    if self.truncated {
                        return;
                    }
                }
            }
        }

        let cols: Vec<usize> = self.active_cols();
        let col_masks: Vec<u64> = cols.iter().map(|&c| self.col_mask(c)).collect();
        let mut walk = Walk {
            cols: &cols,
            col_masks: &col_masks,
            assignment: Vec::with_capacity(cols.len()),
            visited: 0,
            limit,
            truncated: false,
            f,
        };
        walk.descend(0, 0);
        walk.truncated
    }

    /// All perfect matchings of the active subgraph, up to `limit`.
    pub fn enumerate(&self, limit: u64) -> Enumeration {
        let mut matchings = Vec::new();
        let truncated = self.visit_matchings(limit, &mut |pairs| {
            matchings.push(Matching::new(pairs.to_vec()));
        });
        Enumeration { matchings, truncated }
    }

    /// Counts perfect matchings without storing them; the flag reports
    /// whether the limit was hit.
    pub fn count_matchings(&self, limit: u64) -> (u64, bool) {
        let mut count = 0u64;
        let truncated = self.visit_matchings(limit, &mut |_| count += 1);
        (count, truncated)
    }

    /// Counts, for every active column, how often each row is chosen
    /// across all perfect matchings. Errors when the class is larger
    /// than `limit`.
    pub fn exact_marginal_counts(&self, limit: u64) -> Result<MarginalCounts, MatchingError> {
        let mut counts = vec![vec![0u64; self.n]; self.n];
        let mut total = 0u64;
        let truncated = self.visit_matchings(limit, &mut |pairs| {
            total += 1;
            for &(r, c) in pairs {
                counts[c][r] += 1;
            }
        });
        if truncated {
            return Err(MatchingError::EnumerationTruncated { limit });
        }
        Ok(MarginalCounts { total, counts })
    }

    /// Finds one perfect matching of the active subgraph by augmenting
    /// paths, trying columns and rows in ascending order.
    pub fn find_perfect_matching(&self) -> Result<Matching, MatchingError> {
        let mut row_match: Vec<Option<usize>> = vec![None; self.n];

        fn augment(
            bg: &BipartiteGraph,
            col: usize,
            row_match: &mut Vec<Option<usize>>,
            visited: &mut u64,
        ) -> bool {
            for r in bits(bg.col_mask(col) & !*visited) {
                *visited |= 1 << r;
                let free = match row_match[r] {
                    None => true,
                    Some(other) => augment(bg, other, row_match, visited),
                };
                if free {
                    row_match[r] = Some(col);
                    return true;
                }
            }
            false
        }

        for c in bits(self.active_cols) {
            let mut visited = 0u64;
            if !augment(self, c, &mut row_match, &mut visited) {
                return Err(MatchingError::NoPerfectMatching);
            }
        }
        let pairs: Vec<(usize, usize)> = row_match
            .iter()
            .enumerate()
            .filter_map(|(r, &m)| m.map(|c| (r, c)))
            .collect();
        Ok(Matching::new(pairs))
    }

    /// Whether the active subgraph has exactly one perfect matching.
    ///
    /// A perfect matching is unique iff the graph has no alternating
    /// cycle, checked by orienting matched edges from column to row and
    /// all other edges from row to column and looking for a directed
    /// cycle. Errors when no perfect matching exists at all.
    pub fn is_unique(&self) -> Result<bool, MatchingError> {
        let matching = self.find_perfect_matching()?;
        // Node ids: rows are 0..n, columns are n..2n.
        let n = self.n;
        let mut arcs: Vec<Vec<usize>> = vec![Vec::new(); 2 * n];
        for &(r, c) in matching.pairs() {
            arcs[n + c].push(r);
        }
        for r in bits(self.active_rows) {
            for c in bits(self.adj[r] & self.active_cols) {
                if matching.row_for_col(c) != Some(r) {
                    arcs[r].push(n + c);
                }
            }
        }

        // Iterative DFS with tri-color marking; a back edge is a cycle.
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let mut color = vec![Color::White; 2 * n];
        for start in 0..2 * n {
            if color[start] != Color::White {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            color[start] = Color::Gray;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < arcs[v].len() {
                    let u = arcs[v][*next];
                    *next += 1;
                    match color[u] {
                        Color::Gray => return Ok(false),
                        Color::White => {
                            color[u] = Color::Gray;
                            stack.push((u, 0));
                        }
                        Color::Black => {}
                    }
                } else {
                    color[v] = Color::Black;
                    stack.pop();
                }
            }
        }
        Ok(true)
    }

    /// Draws one perfect matching with the greedy heuristic: repeatedly
    /// take an unresolved column of minimum remaining degree (lowest
    /// index on ties) and match it to a uniformly random available row.
    ///
    /// The draw is fast but *not* uniform over perfect matchings. Dead
    /// ends restart the walk, up to [`SAMPLER_MAX_RESTARTS`]; small
    /// instances then fall back to uniform sampling via enumeration.
    pub fn sample_matching(&self, seed: u64) -> Result<Matching, MatchingError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SAMPLER_MAX_RESTARTS {
            if let Some(m) = self.greedy_attempt(&mut rng) {
                return Ok(m);
            }
        }
        if self.active_count() <= SAMPLER_FALLBACK_LIMIT {
            let enumeration = self.enumerate(DEFAULT_ENUMERATION_LIMIT);
            if enumeration.matchings.is_empty() {
                return Err(MatchingError::NoPerfectMatching);
            }
            let pick = rng.random_range(0..enumeration.matchings.len());
            Ok(enumeration.matchings[pick].clone())
        } else {
            Err(MatchingError::SamplerExhausted { restarts: SAMPLER_MAX_RESTARTS })
        }
    }

    fn greedy_attempt(&self, rng: &mut ChaCha8Rng) -> Option<Matching> {
        let mut remaining_cols = self.active_cols;
        let mut remaining_rows = self.active_rows;
        let mut pairs = Vec::with_capacity(self.active_count());
        while remaining_cols != 0 {
            let (col, avail) = bits(remaining_cols)
                .map(|c| (c, self.col_mask(c) & remaining_rows))
                .min_by_key(|&(c, m)| (m.count_ones(), c))
                .expect("remaining_cols is nonempty");
            if avail == 0 {
                return None;
            }
            let k = rng.random_range(0..avail.count_ones());
            let row = nth_bit(avail, k);
            pairs.push((row, col));
            remaining_cols &= !(1 << col);
            remaining_rows &= !(1 << row);
        }
        Some(Matching::new(pairs))
    }

    /// Draws `count` matchings with [`sample_matching`](Self::sample_matching),
    /// each from an independently derived seed.
    pub fn sample_batch(&self, count: usize, seed: u64) -> Result<Vec<Matching>, MatchingError> {
        (0..count)
            .map(|k| self.sample_matching(seeds::derive(seed, &[k as u64])))
            .collect()
    }

    /// Draws `count` matchings independently and uniformly by full
    /// enumeration; the reference sampler for statistical checks.
    pub fn sample_uniform_via_enumeration(
        &self,
        count: usize,
        seed: u64,
        limit: u64,
    ) -> Result<Vec<Matching>, MatchingError> {
        let enumeration = self.enumerate(limit);
        if enumeration.truncated {
            return Err(MatchingError::EnumerationTruncated { limit });
        }
        if enumeration.matchings.is_empty() {
            return Err(MatchingError::NoPerfectMatching);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| enumeration.matchings[rng.random_range(0..enumeration.matchings.len())].clone())
            .collect())
    }

    /// Pins `row` as the structural row of `col`: both become inactive
    /// and their incident edges disappear. The perfect matchings of the
    /// result are exactly the matchings of `self` that contained
    /// `(row, col)`, minus that pair.
    pub fn apply_revealed_edge(&self, row: usize, col: usize) -> Result<Self, MatchingError> {
        if !(self.is_row_active(row) && self.is_col_active(col) && self.has_edge(row, col)) {
            return Err(MatchingError::NotAnActiveEdge { row, col });
        }
        let mut next = self.clone();
        next.active_rows &= !(1 << row);
        next.active_cols &= !(1 << col);
        next.adj[row] = 0;
        for mask in next.adj.iter_mut() {
            *mask &= !(1 << col);
        }
        Ok(next)
    }

    /// The causal graph a perfect matching proposes: variable `col`
    /// adopts the support of its matched row, minus the diagonal, as its
    /// parent set. Requires a fully active graph and a full matching.
    pub fn induced_graph(&self, matching: &Matching) -> Result<DirectedGraph, MatchingError> {
        if self.active_count() != self.n || matching.len() != self.n {
            return Err(MatchingError::IncompleteMatching {
                got: matching.len(),
                need: self.n,
            });
        }
        let rows: Vec<Vec<bool>> = (0..self.n)
            .map(|col| {
                let row = matching.row_for_col(col).expect("full matching covers every column");
                (0..self.n).map(|j| j != col && self.adj[row] >> j & 1 == 1).collect()
            })
            .collect();
        Ok(DirectedGraph::from_adjacency(rows).expect("diagonal was stripped"))
    }

    /// The distribution of rows at `col` across perfect matchings,
    /// either exact or estimated from the greedy sampler. Rows with zero
    /// mass are omitted; pairs come back sorted by row.
    pub fn edge_marginals(
        &self,
        col: usize,
        mode: MarginalMode,
    ) -> Result<Vec<(usize, f64)>, MatchingError> {
        if !self.is_col_active(col) {
            return Err(MatchingError::InactiveColumn(col));
        }
        match mode {
            MarginalMode::Exact { enumeration_limit } => {
                let counts = self.exact_marginal_counts(enumeration_limit)?;
                if counts.total == 0 {
                    return Err(MatchingError::NoPerfectMatching);
                }
                Ok(counts
                    .counts_for(col)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c > 0)
                    .map(|(r, &c)| (r, c as f64 / counts.total as f64))
                    .collect())
            }
            MarginalMode::Sampled { samples, seed } => {
                let batch = self.sample_batch(samples, seed)?;
                let mut counts = vec![0u64; self.n];
                for m in &batch {
                    let r = m.row_for_col(col).expect("sampled matchings cover active columns");
                    counts[r] += 1;
                }
                Ok(counts
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c > 0)
                    .map(|(r, &c)| (r, c as f64 / samples as f64))
                    .collect())
            }
        }
    }
}

/// How [`BipartiteGraph::edge_marginals`] computes the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalMode {
    Exact { enumeration_limit: u64 },
    Sampled { samples: usize, seed: u64 },
}

/// The result of enumerating perfect matchings.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub matchings: Vec<Matching>,
    pub truncated: bool,
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

/// Index of the `k`-th (0-based) set bit of `mask`.
fn nth_bit(mask: u64, k: u32) -> usize {
    let mut remaining = k;
    for i in bits(mask) {
        if remaining == 0 {
            return i;
        }
        remaining -= 1;
    }
    panic!("mask {mask:#x} has fewer than {k} set bits");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(rows: &[&[usize]]) -> BipartiteGraph {
        let n = rows.len();
        let support: Vec<Vec<bool>> =
            rows.iter().map(|cols| (0..n).map(|c| cols.contains(&c)).collect()).collect();
        BipartiteGraph::from_support(&support).unwrap()
    }

    /// Permanent of the active 0/1 adjacency by Ryser's formula; an
    /// independent count of perfect matchings.
    fn permanent(g: &BipartiteGraph) -> u64 {
        let cols = g.active_cols();
        let rows = g.active_rows();
        let n = cols.len();
        if n == 0 {
            return 1;
        }
        let mut total: i64 = 0;
        for subset in 1u64..(1 << n) {
            let mut product: i64 = 1;
            for &r in &rows {
                let mut row_sum = 0i64;
                for (k, &c) in cols.iter().enumerate() {
                    if subset >> k & 1 == 1 && g.has_edge(r, c) {
                        row_sum += 1;
                    }
                }
                product *= row_sum;
                if product == 0 {
                    break;
                }
            }
            let sign = if (n as u32 - subset.count_ones()).is_multiple_of(2) { 1 } else { -1 };
            total += sign * product;
        }
        total as u64
    }

    fn random_valid_pattern(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BipartiteGraph {
        loop {
            let support: Vec<Vec<bool>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_bool(p)).collect()).collect();
            if let Ok(g) = BipartiteGraph::from_support(&support) {
                return g;
            }
        }
    }

    #[test]
    fn construction_validates_support() {
        assert!(matches!(
            BipartiteGraph::from_support(&[vec![false, false], vec![true, true]]),
            Err(MatchingError::EmptyRow(0))
        ));
        assert!(matches!(
            BipartiteGraph::from_support(&[vec![true, false], vec![true, false]]),
            Err(MatchingError::EmptyColumn(1))
        ));
        assert!(matches!(
            BipartiteGraph::from_support(&[vec![true, false]]),
            Err(MatchingError::NotSquare { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let g = bg(&[&[0, 1], &[1, 2], &[0, 2]]);
        assert_eq!(BipartiteGraph::from_text(&g.to_text()).unwrap(), g);
        assert!(BipartiteGraph::from_text("0 2\n1 0\n").is_err());
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let k22 = bg(&[&[0, 1], &[0, 1]]);
        let e = k22.enumerate(DEFAULT_ENUMERATION_LIMIT);
        assert!(!e.truncated);
        assert_eq!(e.matchings.len(), 2);
        assert_eq!(e.matchings[0].pairs(), &[(0, 0), (1, 1)]);
        assert_eq!(e.matchings[1].pairs(), &[(1, 0), (0, 1)]);
    }

    #[test]
    fn five_cycle_support_has_two_matchings() {
        // Support of I - W for the 5-cycle: row i covers {i, i-1}.
        let g = bg(&[&[0, 4], &[1, 0], &[2, 1], &[3, 2], &[4, 3]]);
        let e = g.enumerate(DEFAULT_ENUMERATION_LIMIT);
        assert_eq!(e.matchings.len(), 2);
        for c in 0..5 {
            let marg = g
                .edge_marginals(c, MarginalMode::Exact { enumeration_limit: 100 })
                .unwrap();
            assert_eq!(marg.len(), 2);
            assert!(marg.iter().all(|&(_, p)| (p - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn enumeration_truncates_at_the_limit() {
        let full: &[usize] = &[0, 1, 2, 3];
        let k44 = bg(&[full, full, full, full]);
        let e = k44.enumerate(10);
        assert!(e.truncated);
        assert_eq!(e.matchings.len(), 10);
        let (count, truncated) = k44.count_matchings(100);
        assert_eq!((count, truncated), (24, false));
        assert!(matches!(
            k44.exact_marginal_counts(10),
            Err(MatchingError::EnumerationTruncated { limit: 10 })
        ));
    }

    #[test]
    fn count_matches_ryser_permanent_on_random_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e5);
        for _ in 0..150 {
            let n = rng.random_range(1..=7);
            let g = random_valid_pattern(&mut rng, n, 0.45);
            let (count, truncated) = g.count_matchings(DEFAULT_ENUMERATION_LIMIT);
            assert!(!truncated);
            assert_eq!(count, permanent(&g));
        }
    }

    #[test]
    fn fully_resolved_graph_has_the_empty_matching() {
        let g = bg(&[&[0, 1], &[0, 1]]);
        let g = g.apply_revealed_edge(0, 0).unwrap();
        let g = g.apply_revealed_edge(1, 1).unwrap();
        assert_eq!(g.active_count(), 0);
        let e = g.enumerate(10);
        assert_eq!(e.matchings.len(), 1);
        assert!(e.matchings[0].is_empty());
        assert!(g.is_unique().unwrap());
    }

    #[test]
    fn uniqueness_detection() {
        let identity = bg(&[&[0], &[1], &[2]]);
        assert!(identity.is_unique().unwrap());
        let k22 = bg(&[&[0, 1], &[0, 1]]);
        assert!(!k22.is_unique().unwrap());
        // Forced matching despite extra edges: row degrees 1, 2, 3.
        let forced = bg(&[&[0], &[0, 1], &[0, 1, 2]]);
        assert!(forced.is_unique().unwrap());
        // Degrees are all >= 1 but Hall's condition fails on {1, 2}.
        let hall = bg(&[&[0], &[0], &[1, 2]]);
        assert_eq!(hall.is_unique(), Err(MatchingError::NoPerfectMatching));
        assert_eq!(hall.enumerate(10).matchings.len(), 0);
    }

    #[test]
    fn uniqueness_agrees_with_enumeration_on_random_patterns() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0c1);
        for _ in 0..200 {
            let n = rng.random_range(2..=6);
            let g = random_valid_pattern(&mut rng, n, 0.4);
            let count = g.enumerate(DEFAULT_ENUMERATION_LIMIT).matchings.len();
            match g.is_unique() {
                Ok(unique) => assert_eq!(unique, count == 1),
                Err(MatchingError::NoPerfectMatching) => assert_eq!(count, 0),
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn applying_an_edge_keeps_exactly_the_matchings_through_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
        for _ in 0..80 {
            let n = rng.random_range(2..=6);
            let g = random_valid_pattern(&mut rng, n, 0.5);
            let all = g.enumerate(DEFAULT_ENUMERATION_LIMIT).matchings;
            for r in 0..n {
                for c in 0..n {
                    if !g.has_edge(r, c) {
                        assert!(matches!(
                            g.apply_revealed_edge(r, c),
                            Err(MatchingError::NotAnActiveEdge { .. })
                        ));
                        continue;
                    }
                    let reduced = g.apply_revealed_edge(r, c).unwrap();
                    assert_eq!(reduced.active_count(), n - 1);
                    let got: Vec<Vec<(usize, usize)>> = reduced
                        .enumerate(DEFAULT_ENUMERATION_LIMIT)
                        .matchings
                        .iter()
                        .map(|m| m.pairs().to_vec())
                        .collect();
                    let expected: Vec<Vec<(usize, usize)>> = all
                        .iter()
                        .filter(|m| m.row_for_col(c) == Some(r))
                        .map(|m| {
                            m.pairs().iter().copied().filter(|&(rr, cc)| (rr, cc) != (r, c)).collect()
                        })
                        .collect();
                    assert_eq!(got, expected);
                }
            }
        }
    }

    #[test]
    fn sampled_matchings_are_valid_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5a3);
        for _ in 0..60 {
            let n = rng.random_range(2..=8);
            let g = random_valid_pattern(&mut rng, n, 0.5);
            let any = g.find_perfect_matching();
            match g.sample_matching(7) {
                Ok(m) => {
                    assert!(any.is_ok());
                    assert_eq!(m.len(), g.active_count());
                    let mut rows_seen = std::collections::BTreeSet::new();
                    for &(r, c) in m.pairs() {
                        assert!(g.has_edge(r, c));
                        assert!(rows_seen.insert(r));
                    }
                    assert_eq!(g.sample_matching(7).unwrap(), m);
                }
                Err(MatchingError::NoPerfectMatching) => assert!(any.is_err()),
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn sampler_eventually_covers_every_matching_of_a_small_class() {
        let full: &[usize] = &[0, 1, 2];
        let k33 = bg(&[full, full, full]);
        let all: std::collections::BTreeSet<Matching> =
            k33.enumerate(100).matchings.into_iter().collect();
        let sampled: std::collections::BTreeSet<Matching> =
            k33.sample_batch(200, 99).unwrap().into_iter().collect();
        assert_eq!(sampled, all);
    }

    #[test]
    fn sampler_falls_back_to_enumeration_when_no_matching_exists() {
        let hall = bg(&[&[0], &[0], &[1, 2]]);
        assert_eq!(hall.sample_matching(1), Err(MatchingError::NoPerfectMatching));
    }

    #[test]
    fn uniform_reference_sampler_draws_every_matching() {
        let g = bg(&[&[0, 1], &[0, 1, 2], &[1, 2]]);
        let total = g.enumerate(100).matchings.len();
        let draws = g.sample_uniform_via_enumeration(500, 3, 100).unwrap();
        let distinct: std::collections::BTreeSet<Matching> = draws.into_iter().collect();
        assert_eq!(distinct.len(), total);
        assert!(matches!(
            g.sample_uniform_via_enumeration(10, 3, 1),
            Err(MatchingError::EnumerationTruncated { limit: 1 })
        ));
    }

    #[test]
    fn sampled_marginals_sum_to_one_over_present_rows() {
        let g = bg(&[&[0, 1], &[0, 1, 2], &[1, 2]]);
        for c in 0..3 {
            let marg = g.edge_marginals(c, MarginalMode::Sampled { samples: 400, seed: 5 }).unwrap();
            let sum: f64 = marg.iter().map(|&(_, p)| p).sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for &(r, _) in &marg {
                assert!(g.has_edge(r, c));
            }
        }
        let g2 = g.apply_revealed_edge(0, 0).unwrap();
        assert_eq!(
            g2.edge_marginals(0, MarginalMode::Exact { enumeration_limit: 10 }),
            Err(MatchingError::InactiveColumn(0))
        );
    }

    #[test]
    fn both_matchings_of_a_two_cycle_induce_the_same_graph() {
        // Observational support of a 2-cycle is all ones; the two
        // assignments correspond to the same causal graph.
        let w = crate::lscm::WeightMatrix::from_rows(&[vec![0.0, 0.5], vec![-0.75, 0.0]]).unwrap();
        let obs = crate::lscm::ica_oracle(&w, 21);
        let g = BipartiteGraph::from_ica(&obs).unwrap();
        let e = g.enumerate(10);
        assert_eq!(e.matchings.len(), 2);
        let g0 = g.induced_graph(&e.matchings[0]).unwrap();
        let g1 = g.induced_graph(&e.matchings[1]).unwrap();
        assert_eq!(g0, g1);
        assert_eq!(g0, w.support());

        let partial = g.apply_revealed_edge(0, 0).unwrap();
        let m = partial.enumerate(10).matchings[0].clone();
        assert!(matches!(
            partial.induced_graph(&m),
            Err(MatchingError::IncompleteMatching { .. })
        ));
    }

    #[test]
    fn node_cap_is_enforced() {
        let support = vec![vec![true; 65]; 65];
        assert!(matches!(
            BipartiteGraph::from_support(&support),
            Err(MatchingError::TooManyNodes { n: 65, limit: 64 })
        ));
    }
}
