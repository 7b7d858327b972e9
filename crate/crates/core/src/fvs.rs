//! Exact minimum feedback vertex sets.
//!
//! Every intervention resolves at most one vertex, and a strategy is done
//! only when no directed cycle is left ambiguous, so the size of a
//! minimum feedback vertex set of the true graph lower-bounds the number
//! of interventions any strategy needs on that instance. The search here
//! is exact: iterative deepening on the deletion budget, branching on
//! the vertices of a shortest cycle, with strongly connected components
//! handled independently inside the size oracle.
//!
//! Exact search is exponential in the worst case; instances are capped
//! at [`FvsConfig::max_nodes`] vertices and a wall-clock deadline.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::graph::{scc, DirectedGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FvsError {
    #[error("exact feedback vertex set is limited to {limit} vertices, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("exact feedback vertex set exceeded its time limit of {seconds} s")]
    TimeLimit { seconds: u64 },
}

/// Resource limits for the exact search.
#[derive(Debug, Clone, Copy)]
pub struct FvsConfig {
    pub max_nodes: usize,
    pub time_limit: Duration,
}

impl Default for FvsConfig {
    fn default() -> Self {
        FvsConfig { max_nodes: 40, time_limit: Duration::from_secs(60) }
    }
}

/// A minimum feedback vertex set: `witness` is sorted ascending and is
/// the lexicographically smallest set of its size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FvsResult {
    pub size: usize,
    pub witness: Vec<usize>,
}

/// True when the graph has no directed cycle.
pub fn is_acyclic(g: &DirectedGraph) -> bool {
    scc(g).components.len() == g.n()
}

/// Computes a minimum feedback vertex set under the default limits.
pub fn min_fvs(g: &DirectedGraph) -> Result<FvsResult, FvsError> {
    min_fvs_with(g, &FvsConfig::default())
}

/// Computes a minimum feedback vertex set under caller-chosen limits.
pub fn min_fvs_with(g: &DirectedGraph, config: &FvsConfig) -> Result<FvsResult, FvsError> {
    let n = g.n();
    if n > config.max_nodes {
        return Err(FvsError::TooLarge { n, limit: config.max_nodes });
    }
    let search = Search {
        n,
        children: (0..n)
            .map(|v| {
                (0..n).fold(0u64, |m, u| if g.has_edge(v, u) { m | 1 << u } else { m })
            })
            .collect(),
        deadline: Instant::now() + config.time_limit,
        seconds: config.time_limit.as_secs(),
    };
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    let size = search
        .min_deletions(all, all)?
        .expect("deleting every vertex always acyclifies");

    // Lexicographically smallest witness, built greedily: the next
    // element is the smallest vertex whose deletion still admits a
    // completion among strictly larger vertices.
    let mut witness = Vec::with_capacity(size);
    let mut active = all;
    let mut from = 0usize;
    for slot in 0..size {
        let left = size - slot - 1;
        let v = (from..n)
            .find(|&v| {
                if active >> v & 1 == 0 {
                    return false;
                }
                let remaining = active & !(1 << v);
                let allowed = remaining & higher_than(v);
                matches!(search.min_deletions(remaining, allowed), Ok(Some(k)) if k <= left)
            })
            .expect("a minimum feedback vertex set always completes");
        witness.push(v);
        active &= !(1 << v);
        from = v + 1;
    }
    debug_assert!(search.min_deletions(active, 0) == Ok(Some(0)));
    Ok(FvsResult { size, witness })
}

/// Mask of vertices strictly greater than `v`.
fn higher_than(v: usize) -> u64 {
    if v >= 63 {
        0
    } else {
        !((1u64 << (v + 1)) - 1)
    }
}

struct Search {
    n: usize,
    children: Vec<u64>,
    deadline: Instant,
    seconds: u64,
}

impl Search {
    /// Smallest number of deletions, all drawn from `allowed`, that make
    /// the subgraph induced by `active` acyclic; `None` when no subset
    /// of `allowed` suffices.
    fn min_deletions(&self, active: u64, allowed: u64) -> Result<Option<usize>, FvsError> {
        if Instant::now() > self.deadline {
            return Err(FvsError::TimeLimit { seconds: self.seconds });
        }
        // Cycles never cross components, so solve each strongly
        // connected component separately and add the minima.
        let mut total = 0usize;
        for comp in self.components(active) {
            if comp.count_ones() < 2 {
                continue;
            }
            let budget_cap = (comp & allowed).count_ones() as usize;
            let mut solved = None;
            for k in 0..=budget_cap {
                if self.acyclifiable(comp, allowed, k)? {
                    solved = Some(k);
                    break;
                }
            }
            match solved {
                // A strongly connected component on >= 2 vertices always
                // contains a cycle, so k = 0 never succeeds here.
                Some(k) => total += k,
                None => return Ok(None),
            }
        }
        Ok(Some(total))
    }

    /// Depth-limited search: can `budget` deletions from `allowed` break
    /// every cycle of the subgraph induced by `active`?
    fn acyclifiable(&self, active: u64, allowed: u64, budget: usize) -> Result<bool, FvsError> {
        if Instant::now() > self.deadline {
            return Err(FvsError::TimeLimit { seconds: self.seconds });
        }
        let Some(cycle) = self.shortest_cycle(active) else {
            return Ok(true);
        };
        if budget == 0 {
            return Ok(false);
        }
        // Any valid deletion set must hit this cycle.
        for &v in &cycle {
            if allowed >> v & 1 == 0 {
                continue;
            }
            if self.acyclifiable(active & !(1 << v), allowed, budget - 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// A shortest directed cycle in the subgraph induced by `active`,
    /// found by BFS from every vertex; `None` when acyclic.
    fn shortest_cycle(&self, active: u64) -> Option<Vec<usize>> {
        let mut best: Option<Vec<usize>> = None;
        for start in 0..self.n {
            if active >> start & 1 == 0 {
                continue;
            }
            if let Some(cycle) = self.cycle_through(start, active) {
                if cycle.len() == 2 {
                    return Some(cycle);
                }
                if best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
                    best = Some(cycle);
                }
            }
        }
        best
    }

    /// Shortest cycle through `start`: BFS back to `start`.
    fn cycle_through(&self, start: usize, active: u64) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        let mut seen = 0u64;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let succ = self.children[v] & active;
            if succ >> start & 1 == 1 {
                let mut cycle = vec![v];
                let mut cur = v;
                while cur != start {
                    cur = parent[cur];
                    cycle.push(cur);
                }
                cycle.reverse();
                return Some(cycle);
            }
            let mut fresh = succ & !seen & !(1 << start);
            while fresh != 0 {
                let u = fresh.trailing_zeros() as usize;
                fresh &= fresh - 1;
                seen |= 1 << u;
                parent[u] = v;
                queue.push_back(u);
            }
        }
        None
    }

    /// Strongly connected components of the subgraph induced by
    /// `active`, as vertex masks (Tarjan, iterative).
    fn components(&self, active: u64) -> Vec<u64> {
        const UNVISITED: usize = usize::MAX;
        let n = self.n;
        let mut index = vec![UNVISITED; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut next = 0usize;
        let mut comps = Vec::new();
        let mut frames: Vec<(usize, usize)> = Vec::new();

        for root in 0..n {
            if active >> root & 1 == 0 || index[root] != UNVISITED {
                continue;
            }
            index[root] = next;
            low[root] = next;
            next += 1;
            stack.push(root);
            on_stack[root] = true;
            frames.push((root, 0));
            while let Some(&mut (v, ref mut child)) = frames.last_mut() {
                let succ = self.children[v] & active;
                let mut advanced = false;
                while *child < n {
                    let u = *child;
                    *child += 1;
                    if succ >> u & 1 == 0 {
                        continue;
                    }
                    if index[u] == UNVISITED {
                        index[u] = next;
                        low[u] = next;
                        next += 1;
                        stack.push(u);
                        on_stack[u] = true;
                        frames.push((u, 0));
                        advanced = true;
                        break;
                    } else if on_stack[u] {
                        low[v] = low[v].min(index[u]);
                    }
                }
                if advanced {
                    continue;
                }
                frames.pop();
                if let Some(&(p, _)) = frames.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut mask = 0u64;
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        mask |= 1 << w;
                        if w == v {
                            break;
                        }
                    }
                    comps.push(mask);
                }
            }
        }
        comps
    }
}
