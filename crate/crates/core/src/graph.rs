//! Graph representation, validation, bipartiteness classification, and
//! enumeration of vertex covers (the feasible supports of the dynamics).
//!
//! Vertices are 1-based in every external format (edge-list files, JSON
//! reports, error messages) and 0-based in the Rust API.

use std::fmt;

use thiserror::Error;

/// Hard cap on the vertex count for exhaustive support enumeration.
pub const DEFAULT_COVER_CAP: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: cannot parse `{content}` as an edge (expected two integers)")]
    Malformed { line: usize, content: String },
    #[error("line {line}: vertex label {label} is not a positive integer")]
    InvalidLabel { line: usize, label: i64 },
    #[error("line {line}: self-loop at vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("graph is disconnected: vertex {vertex} is not reachable from vertex 1")]
    Disconnected { vertex: usize },
    #[error("graph has no edges")]
    NoEdges,
    #[error("vertex count {m} exceeds the enumeration cap {cap}; refusing combinatorial blow-up")]
    TooManyVertices { m: usize, cap: usize },
}

/// A finite connected simple graph on vertices `0..m` (1-based in all I/O).
///
/// Edges keep their input order; simulation consumes randomness in exactly
/// this order, so the order is part of the reproducibility contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Result of the 2-coloring classification.
///
/// Parts are sorted vertex lists with vertex 0 always in `a`, which makes
/// the (otherwise swap-ambiguous) bipartition deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BipartiteClass {
    NotBipartite,
    UnbalancedBipartite { a: Vec<usize>, b: Vec<usize> },
    BalancedBipartite { a: Vec<usize>, b: Vec<usize> },
}

impl BipartiteClass {
    /// The bipartition `(A, B)` if the graph is bipartite.
    pub fn parts(&self) -> Option<(&[usize], &[usize])> {
        match self {
            BipartiteClass::NotBipartite => None,
            BipartiteClass::UnbalancedBipartite { a, b }
            | BipartiteClass::BalancedBipartite { a, b } => Some((a, b)),
        }
    }

    pub fn is_balanced_bipartite(&self) -> bool {
        matches!(self, BipartiteClass::BalancedBipartite { .. })
    }
}

impl fmt::Display for BipartiteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(vs: &[usize]) -> String {
            let labels: Vec<String> = vs.iter().map(|v| (v + 1).to_string()).collect();
            format!("{{{}}}", labels.join(","))
        }
        match self {
            BipartiteClass::NotBipartite => write!(f, "not-bipartite"),
            BipartiteClass::UnbalancedBipartite { a, b } => {
                write!(f, "unbalanced-bipartite A={} B={}", set(a), set(b))
            }
            BipartiteClass::BalancedBipartite { a, b } => {
                write!(f, "balanced-bipartite A={} B={}", set(a), set(b))
            }
        }
    }
}

impl Graph {
    /// Builds a graph from 0-based edge pairs, validating simplicity and
    /// connectivity. `m` is the vertex count; isolated vertices are rejected
    /// by the connectivity check (a lone vertex cannot reach vertex 0).
    pub fn new(m: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        // Re-run the line-indexed validation with synthetic line numbers so
        // both construction paths share one code path.
        let lines: Vec<(usize, usize, usize)> = edges
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| (k + 1, u, v))
            .collect();
        Self::build(m, lines)
    }

    fn build(m: usize, lines: Vec<(usize, usize, usize)>) -> Result<Self, GraphError> {
        if lines.is_empty() {
            return Err(GraphError::NoEdges);
        }
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(lines.len());
        let mut adjacency = vec![Vec::new(); m];
        for (line, u, v) in lines {
            if u == v {
                return Err(GraphError::SelfLoop { line, vertex: u + 1 });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge {
                    line,
                    u: key.0 + 1,
                    v: key.1 + 1,
                });
            }
            edges.push(key);
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        let g = Graph { m, edges, adjacency };
        if let Some(vertex) = g.first_unreachable() {
            return Err(GraphError::Disconnected { vertex: vertex + 1 });
        }
        Ok(g)
    }

    fn first_unreachable(&self) -> Option<usize> {
        let mut visited = vec![false; self.m];
        let mut stack = vec![0usize];
        visited[0] = true;
        while let Some(u) = stack.pop() {
            for &w in &self.adjacency[u] {
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        visited.iter().position(|&v| !v)
    }

    pub fn vertex_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 0-based `(min, max)` pairs, in input order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of vertex `v` (0-based).
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// BFS 2-coloring. An odd cycle makes the graph non-bipartite; otherwise
    /// the unique bipartition with vertex 0 on the A side is returned.
    pub fn classify_bipartiteness(&self) -> BipartiteClass {
        let mut color = vec![u8::MAX; self.m];
        let mut queue = std::collections::VecDeque::new();
        color[0] = 0;
        queue.push_back(0usize);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if color[w] == u8::MAX {
                    color[w] = 1 - color[u];
                    queue.push_back(w);
                } else if color[w] == color[u] {
                    return BipartiteClass::NotBipartite;
                }
            }
        }
        let a: Vec<usize> = (0..self.m).filter(|&v| color[v] == 0).collect();
        let b: Vec<usize> = (0..self.m).filter(|&v| color[v] == 1).collect();
        if a.len() == b.len() {
            BipartiteClass::BalancedBipartite { a, b }
        } else {
            BipartiteClass::UnbalancedBipartite { a, b }
        }
    }

    /// All vertex covers, i.e. sets `S` meeting every edge. These are exactly
    /// the supports on which a face of the constrained simplex is nonempty.
    /// Returned sorted by cardinality, then lexicographically.
    ///
    /// Exhaustive over `2^m` subsets, hence the hard cap on `m`.
    pub fn vertex_covers(&self, max_m: usize) -> Result<Vec<Vec<usize>>, GraphError> {
        if self.m > max_m {
            return Err(GraphError::TooManyVertices {
                m: self.m,
                cap: max_m,
            });
        }
        let mut covers: Vec<Vec<usize>> = self
            .cover_masks()
            .into_iter()
            .map(|mask| mask_to_set(mask, self.m))
            .collect();
        covers.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        Ok(covers)
    }

    pub(crate) fn cover_masks(&self) -> Vec<u32> {
        (0u32..1 << self.m)
            .filter(|&mask| {
                self.edges
                    .iter()
                    .all(|&(u, v)| mask & (1 << u) != 0 || mask & (1 << v) != 0)
            })
            .collect()
    }
}

fn mask_to_set(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|&v| mask & (1 << v) != 0).collect()
}

/// Parses an edge-list text: one edge per line as two 1-based integers,
/// `#` starts a comment line, blank lines and trailing whitespace tolerated.
/// The vertex count is the maximum label seen.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = Vec::new();
    let mut max_label = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let (Some(su), Some(sv), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(GraphError::Malformed {
                line,
                content: content.to_string(),
            });
        };
        let parse_label = |s: &str| -> Result<usize, GraphError> {
            match s.parse::<i64>() {
                Ok(l) if l >= 1 => Ok(l as usize),
                Ok(l) => Err(GraphError::InvalidLabel { line, label: l }),
                Err(_) => Err(GraphError::Malformed {
                    line,
                    content: content.to_string(),
                }),
            }
        };
        let u = parse_label(su)?;
        let v = parse_label(sv)?;
        max_label = max_label.max(u).max(v);
        lines.push((line, u - 1, v - 1));
    }
    Graph::build(max_label, lines)
}
