//! Directed graphs over vertices `0..n` and the operations that describe
//! the observational equivalence class of a cyclic linear model.
//!
//! Adjacency follows the row convention of weight matrices: entry `(i, j)`
//! is set when there is an edge `j -> i`, i.e. `j` is a parent of `i`.
//! Row `i` of the matrix therefore lists the parents of vertex `i`, and
//! `I + B` (adjacency plus identity) is the object whose row permutations
//! generate the equivalence class. Self-loops are excluded throughout.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Default vertex-count cap for [`enumerate_equivalence_class`], which
/// scans all `n!` row permutations.
pub const ENUMERATION_NODE_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("adjacency matrix must be square, got {rows} rows of width {width}")]
    NotSquare { rows: usize, width: usize },
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for a graph on {n} nodes")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graphs have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("a cycle needs at least two distinct vertices")]
    CycleTooShort,
    #[error("cycle repeats vertex {0}")]
    CycleRepeatsVertex(usize),
    #[error("cycle edge {from} -> {to} is absent from the graph")]
    MissingCycleEdge { from: usize, to: usize },
    #[error("equivalence-class enumeration is limited to {limit} nodes, got {n}")]
    TooLargeToEnumerate { n: usize, limit: usize },
    #[error("invalid adjacency text: {0}")]
    Parse(String),
}

/// A directed graph without self-loops, stored as a dense adjacency
/// matrix in the parent convention (`(i, j)` set means `j -> i`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedGraph {
    n: usize,
    adj: Vec<bool>,
}

impl DirectedGraph {
    /// The graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        DirectedGraph { n, adj: vec![false; n * n] }
    }

    /// The directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 2, "a directed cycle needs at least two vertices");
        let mut g = Self::empty(n);
        for v in 0..n {
            g.set_edge(v, (v + 1) % n);
        }
        g
    }

    /// Builds a graph from `(from, to)` edge pairs.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(n);
        for &(from, to) in edges {
            for v in [from, to] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            g.set_edge(from, to);
        }
        Ok(g)
    }

    /// Builds a graph from a dense adjacency matrix where `rows[i][j]`
    /// set means `j -> i`.
    pub fn from_adjacency(rows: Vec<Vec<bool>>) -> Result<Self, GraphError> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(GraphError::NotSquare { rows: n, width: row.len() });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] {
                return Err(GraphError::SelfLoop(i));
            }
        }
        let adj = rows.into_iter().flatten().collect();
        Ok(DirectedGraph { n, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when the edge `from -> to` is present.
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[to * self.n + from]
    }

    fn set_edge(&mut self, from: usize, to: usize) {
        debug_assert_ne!(from, to);
        self.adj[to * self.n + from] = true;
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count()
    }

    /// Parents of `v` (vertices with an edge into `v`), ascending.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.has_edge(u, v)).collect()
    }

    /// Children of `v` (vertices `v` has an edge into), ascending.
    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.has_edge(v, u)).collect()
    }

    /// The graph with every edge direction flipped.
    pub fn reversed(&self) -> Self {
        let mut g = Self::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adj[i * self.n + j] {
                    g.set_edge(i, j);
                }
            }
        }
        g
    }

    /// Rows of `I + B`: row `i` has `true` at `i` and at each parent of `i`.
    fn rows_with_diagonal(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| {
                let mut row: Vec<bool> = self.adj[i * self.n..(i + 1) * self.n].to_vec();
                row[i] = true;
                row
            })
            .collect()
    }

    /// Serializes as a dense 0/1 matrix, one row per line, entries
    /// space-separated, in the same parent convention as storage.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    out.push(' ');
                }
                out.push(if self.adj[i * self.n + j] { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`to_text`](Self::to_text).
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                match tok {
                    "0" => row.push(false),
                    "1" => row.push(true),
                    other => {
                        return Err(GraphError::Parse(format!(
                            "line {}: expected 0 or 1, got {:?}",
                            lineno + 1,
                            other
                        )))
                    }
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(GraphError::Parse("no rows".into()));
        }
        Self::from_adjacency(rows)
    }
}

impl fmt::Debug for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DirectedGraph(n={})", self.n)?;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adj[i * self.n + j] {
                    write!(f, " {}->{}", j, i)?;
                }
            }
        }
        Ok(())
    }
}

/// The strongly-connected-component decomposition of a graph.
///
/// Components are numbered by their smallest vertex, ascending, so the
/// numbering is a deterministic function of the graph alone. The
/// condensation uses the same parent convention as [`DirectedGraph`] and
/// is always acyclic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    pub component_of: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub condensation: DirectedGraph,
}

/// Computes strongly connected components with Tarjan's algorithm.
pub fn scc(g: &DirectedGraph) -> SccPartition {
    let n = g.n;
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut raw_components: Vec<Vec<usize>> = Vec::new();

    // Iterative Tarjan; frames hold (vertex, next child to scan).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            let mut advanced = false;
            while *child < n {
                let u = *child;
                *child += 1;
                if !g.has_edge(v, u) {
                    continue;
                }
                if index[u] == UNVISITED {
                    index[u] = next_index;
                    low[u] = next_index;
                    next_index += 1;
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
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                raw_components.push(comp);
            }
        }
    }

    let mut components = raw_components;
    components.sort_by_key(|c| c[0]);
    let mut component_of = vec![0usize; n];
    for (id, comp) in components.iter().enumerate() {
        for &v in comp {
            component_of[v] = id;
        }
    }

    let k = components.len();
    let mut condensation = DirectedGraph::empty(k);
    for to in 0..n {
        for from in 0..n {
            if g.has_edge(from, to) && component_of[from] != component_of[to] {
                condensation.set_edge(component_of[from], component_of[to]);
            }
        }
    }

    SccPartition { component_of, components, condensation }
}

/// A directed cycle given as an ordered list of distinct vertices; the
/// edges are consecutive pairs plus the wrap-around from last to first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    vertices: Vec<usize>,
}

impl Cycle {
    pub fn new(vertices: Vec<usize>) -> Result<Self, GraphError> {
        if vertices.len() < 2 {
            return Err(GraphError::CycleTooShort);
        }
        let mut seen = BTreeSet::new();
        for &v in &vertices {
            if !seen.insert(v) {
                return Err(GraphError::CycleRepeatsVertex(v));
            }
        }
        Ok(Cycle { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Rotates the vertex list so the smallest vertex comes first.
    /// Rotations describe the same cycle; this picks a canonical one so
    /// cycles can be compared and deduplicated.
    pub fn canonical(mut self) -> Self {
        let min_pos = self
            .vertices
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| v)
            .map(|(pos, _)| pos)
            .expect("cycle is nonempty");
        self.vertices.rotate_left(min_pos);
        self
    }
}

/// Reverses a directed cycle of `g`, producing the equivalent graph in
/// which the cycle runs the other way.
///
/// On `M = I + B` this moves the row at the successor of each cycle
/// vertex onto that vertex; the cycle edge into the successor is what
/// keeps the diagonal all-ones. Edges from outside the cycle into a
/// cycle vertex end up pointing at that vertex's predecessor.
pub fn reverse_cycle(g: &DirectedGraph, cycle: &Cycle) -> Result<DirectedGraph, GraphError> {
    let n = g.n;
    let verts = cycle.vertices();
    for &v in verts {
        if v >= n {
            return Err(GraphError::VertexOutOfRange { vertex: v, n });
        }
    }
    let len = verts.len();
    for k in 0..len {
        let from = verts[k];
        let to = verts[(k + 1) % len];
        if !g.has_edge(from, to) {
            return Err(GraphError::MissingCycleEdge { from, to });
        }
    }

    let old = g.rows_with_diagonal();
    let mut new = old.clone();
    for k in 0..len {
        new[verts[k]] = old[verts[(k + 1) % len]].clone();
    }
    for (i, row) in new.iter_mut().enumerate() {
        debug_assert!(row[i], "cycle reversion must keep the diagonal");
        row[i] = false;
    }
    Ok(DirectedGraph::from_adjacency(new).expect("reverted rows form a valid graph"))
}

/// Tests whether two graphs are observationally equivalent: whether some
/// permutation matrix `P` satisfies `I + B2 = P (I + B1)`.
///
/// Such a `P` exists exactly when the two matrices have the same multiset
/// of rows, so no matching search is needed.
pub fn equivalent(g1: &DirectedGraph, g2: &DirectedGraph) -> Result<bool, GraphError> {
    if g1.n != g2.n {
        return Err(GraphError::SizeMismatch(g1.n, g2.n));
    }
    let mut rows1 = g1.rows_with_diagonal();
    let mut rows2 = g2.rows_with_diagonal();
    rows1.sort_unstable();
    rows2.sort_unstable();
    Ok(rows1 == rows2)
}

/// Enumerates the full equivalence class of `g` by brute force, checking
/// every row permutation of `I + B` for an all-ones diagonal image.
///
/// Returns the class sorted and deduplicated; `g` itself is always a
/// member. Runs in `O(n! * n^2)`, hence the node cap.
pub fn enumerate_equivalence_class(g: &DirectedGraph) -> Result<Vec<DirectedGraph>, GraphError> {
    enumerate_equivalence_class_with_limit(g, ENUMERATION_NODE_LIMIT)
}

/// [`enumerate_equivalence_class`] with a caller-chosen node cap.
pub fn enumerate_equivalence_class_with_limit(
    g: &DirectedGraph,
    limit: usize,
) -> Result<Vec<DirectedGraph>, GraphError> {
    let n = g.n;
    if n > limit {
        return Err(GraphError::TooLargeToEnumerate { n, limit });
    }
    let rows = g.rows_with_diagonal();
    let mut class = BTreeSet::new();

    // sigma[j] = index of the old row placed at position j; valid when
    // every placed row has a 1 on the new diagonal position.
    let mut sigma: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn place(
        j: usize,
        n: usize,
        rows: &[Vec<bool>],
        sigma: &mut Vec<usize>,
        used: &mut [bool],
        class: &mut BTreeSet<DirectedGraph>,
    ) {
        if j == n {
            let new_rows: Vec<Vec<bool>> = sigma
                .iter()
                .enumerate()
                .map(|(pos, &src)| {
                    let mut row = rows[src].clone();
                    row[pos] = false;
                    row
                })
                .collect();
            let g = DirectedGraph::from_adjacency(new_rows)
                .expect("diagonal-preserving permutation yields a valid graph");
            class.insert(g);
            return;
        }
        for src in 0..n {
            if used[src] || !rows[src][j] {
                continue;
            }
            used[src] = true;
            sigma.push(src);
            place(j + 1, n, rows, sigma, used, class);
            sigma.pop();
            used[src] = false;
        }
    }
    place(0, n, &rows, &mut sigma, &mut used, &mut class);

    debug_assert!(class.contains(g), "a graph is always in its own class");
    Ok(class.into_iter().collect())
}
