//! Finite simple undirected graphs, Dirichlet energy and the graph families
//! used throughout the crate.
//!
//! Vertices are dense indices `0..n`. Every generator documents how its
//! natural coordinates map onto those indices.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::Triangulation;

/// A finite simple undirected graph.
///
/// Construction rejects self-loops, duplicate edges and out-of-range
/// endpoints. Connectivity is *not* enforced here so that [`validate`] can
/// report it; every walk and resistance routine checks it instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    genus_hint: Option<u32>,
}

/// Serialized form: `{"n": int, "edges": [[u,v],...], "genus_hint": int|null}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub genus_hint: Option<u32>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges may be given in either
    /// orientation and any order; they are stored as `u < v`, sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({},{})",
                    e.0, e.1
                )));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            n,
            edges,
            adjacency,
            genus_hint: None,
        })
    }

    pub fn with_genus_hint(mut self, genus: Option<u32>) -> Self {
        self.genus_hint = genus;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Average degree `2|E| / n`.
    pub fn avg_degree(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    /// Declared minimum genus. Advisory only; never verified.
    pub fn genus_hint(&self) -> Option<u32> {
        self.genus_hint
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Errors unless the graph is connected with at least two vertices.
    pub fn require_connected(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::pre("graph must have at least two vertices"));
        }
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(())
    }

    /// Breadth-first distances from `source` (`usize::MAX` when unreachable).
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Biconnected components (blocks), each returned as its sorted vertex set.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut state = BlockSearch {
            graph: self,
            disc: vec![usize::MAX; self.n],
            low: vec![0; self.n],
            time: 0,
            stack: Vec::new(),
            blocks: Vec::new(),
        };
        for v in 0..self.n {
            if state.disc[v] == usize::MAX {
                state.visit(v, usize::MAX);
            }
        }
        state.blocks
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
            genus_hint: self.genus_hint,
        }
    }

    /// Compact JSON, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Graph::try_from(file)
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        Ok(Graph::new(file.n, file.edges.iter().map(|e| (e[0], e[1])))?
            .with_genus_hint(file.genus_hint))
    }
}

struct BlockSearch<'a> {
    graph: &'a Graph,
    disc: Vec<usize>,
    low: Vec<usize>,
    time: usize,
    stack: Vec<(usize, usize)>,
    blocks: Vec<Vec<usize>>,
}

impl BlockSearch<'_> {
    fn visit(&mut self, v: usize, parent: usize) {
        self.disc[v] = self.time;
        self.low[v] = self.time;
        self.time += 1;
        for &w in self.graph.neighbors(v) {
            if self.disc[w] == usize::MAX {
                self.stack.push((v, w));
                self.visit(w, v);
                self.low[v] = self.low[v].min(self.low[w]);
                if self.low[w] >= self.disc[v] {
                    let mut block = BTreeSet::new();
                    while let Some((a, b)) = self.stack.pop() {
                        block.insert(a);
                        block.insert(b);
                        if (a, b) == (v, w) {
                            break;
                        }
                    }
                    self.blocks.push(block.into_iter().collect());
                }
            } else if w != parent && self.disc[w] < self.disc[v] {
                self.stack.push((v, w));
                self.low[v] = self.low[v].min(self.disc[w]);
            }
        }
    }
}

/// Summary produced by [`validate`]; failures are listed, never raised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub edge_count: usize,
    pub simple: bool,
    pub connected: bool,
    pub min_degree: usize,
    pub max_degree: usize,
    pub avg_degree: f64,
    pub genus_hint: Option<u32>,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn validate(graph: &Graph) -> ValidationReport {
    let file = graph.to_file();
    validate_file(&file)
}

/// Validates raw file contents, so that non-simple input can be reported
/// rather than rejected.
pub fn validate_file(file: &GraphFile) -> ValidationReport {
    let n = file.n;
    let mut failures = Vec::new();
    let mut seen = BTreeSet::new();
    let mut simple = true;
    for e in &file.edges {
        let (u, v) = (e[0], e[1]);
        if u >= n || v >= n {
            failures.push(format!("edge ({u},{v}) out of range 0..{n}"));
            simple = false;
        } else if u == v {
            failures.push(format!("self-loop at {u}"));
            simple = false;
        } else if !seen.insert((u.min(v), u.max(v))) {
            failures.push(format!("duplicate edge ({},{})", u.min(v), u.max(v)));
            simple = false;
        }
    }
    let graph = Graph::new(n, seen.iter().copied()).expect("deduplicated edges are valid");
    let degrees = graph.degrees();
    let min_degree = degrees.iter().copied().min().unwrap_or(0);
    let connected = graph.is_connected();
    if n == 0 {
        failures.push("graph has no vertices".into());
    } else if !connected {
        failures.push("graph is disconnected".into());
    }
    if min_degree == 0 && n > 0 {
        failures.push("some vertex has degree 0".into());
    }
    ValidationReport {
        n,
        edge_count: graph.edge_count(),
        simple,
        connected,
        min_degree,
        max_degree: graph.max_degree(),
        avg_degree: graph.avg_degree(),
        genus_hint: file.genus_hint,
        failures,
    }
}

/// A real value per vertex. Entries must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::pre(format!(
                "vertex function value at {i} is not finite"
            )));
        }
        Ok(VertexFunction(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, v: usize) -> &f64 {
        &self.0[v]
    }
}

/// `Σ_{uv ∈ E} (f(u) − f(v))²`.
pub fn dirichlet_energy(graph: &Graph, f: &VertexFunction) -> Result<f64> {
    if f.len() != graph.n() {
        return Err(Error::LengthMismatch {
            expected: graph.n(),
            actual: f.len(),
        });
    }
    Ok(graph
        .edges()
        .iter()
        .map(|&(u, v)| (f[u] - f[v]).powi(2))
        .sum())
}

pub fn path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::pre("path needs n >= 2"));
    }
    Graph::new(n, (1..n).map(|i| (i - 1, i)))
}

pub fn complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::pre("complete graph needs n >= 2"));
    }
    Graph::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

/// The grid graph `(Z/kZ)²`. Vertex `(i, j)` has index `i + k·j`.
pub fn torus_grid(k: usize) -> Result<Graph> {
    if k < 3 {
        return Err(Error::pre(
            "torus_grid needs k >= 3 (k = 2 creates duplicate edges)",
        ));
    }
    let idx = |i: usize, j: usize| (i % k) + k * (j % k);
    let mut edges = Vec::with_capacity(2 * k * k);
    for j in 0..k {
        for i in 0..k {
            edges.push((idx(i, j), idx(i + 1, j)));
            edges.push((idx(i, j), idx(i, j + 1)));
        }
    }
    Ok(Graph::new(k * k, edges)?.with_genus_hint(Some(1)))
}

/// Complete graph on `0..clique_size` with a path `clique_size-1, clique_size, ...`
/// of `path_length` further vertices glued at vertex `clique_size - 1`.
pub fn lollipop(clique_size: usize, path_length: usize) -> Result<Graph> {
    if clique_size < 3 || path_length < 1 {
        return Err(Error::pre(
            "lollipop needs clique_size >= 3 and path_length >= 1",
        ));
    }
    let n = clique_size + path_length;
    let clique = (0..clique_size).flat_map(|u| (u + 1..clique_size).map(move |v| (u, v)));
    let tail = (clique_size..n).map(|v| (v - 1, v));
    Graph::new(n, clique.chain(tail))
}

/// A max-degree-3 tree on `n - 4g` vertices with `g` copies of K5, each
/// sharing one vertex with a distinct leaf.
///
/// The tree is the complete binary tree in heap order (parent of `i` is
/// `(i-1)/2`) truncated to `n - 4g` vertices; leaves are taken in index
/// order, which is BFS order. Block `i` adds vertices `m + 4i .. m + 4i + 3`
/// where `m = n - 4g`.
pub fn tree_plus_k5(n: usize, g: usize) -> Result<Graph> {
    if g < 1 {
        return Err(Error::pre("tree_plus_k5 needs g >= 1"));
    }
    let m = n
        .checked_sub(4 * g)
        .filter(|&m| m >= 1)
        .ok_or_else(|| Error::pre(format!("tree_plus_k5: n = {n} leaves no tree for g = {g}")))?;
    let mut edges: Vec<(usize, usize)> = (1..m).map(|i| ((i - 1) / 2, i)).collect();
    let mut tree_degree = vec![0usize; m];
    for &(a, b) in &edges {
        tree_degree[a] += 1;
        tree_degree[b] += 1;
    }
    let leaves: Vec<usize> = (0..m).filter(|&v| tree_degree[v] <= 1).collect();
    if leaves.len() < g {
        return Err(Error::pre(format!(
            "tree_plus_k5: tree on {m} vertices has {} leaves, need {g}",
            leaves.len()
        )));
    }
    for (i, &leaf) in leaves.iter().take(g).enumerate() {
        let block: Vec<usize> = std::iter::once(leaf)
            .chain((0..4).map(|t| m + 4 * i + t))
            .collect();
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((block[a], block[b]));
            }
        }
    }
    Ok(Graph::new(n, edges)?.with_genus_hint(Some(g as u32)))
}

/// The 1-skeleton of a triangulation, carrying its genus as the hint.
pub fn skeleton(tri: &Triangulation) -> Graph {
    let edges = tri.edges();
    Graph::new(tri.n(), edges)
        .expect("triangulation edges form a simple graph")
        .with_genus_hint(Some(tri.genus()))
}
