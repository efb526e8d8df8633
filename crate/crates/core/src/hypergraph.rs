//! Hypergraphs with multiset edge semantics.
//!
//! Vertices are `0..n` and edges are indexed `0..m` in insertion order. The
//! text formats shift both to 1-based ids; nothing in memory does.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("edge {edge}: vertex {vertex} out of range (n = {n})")]
    VertexOutOfRange { edge: usize, vertex: usize, n: usize },
    #[error("edge {edge}: vertex {vertex} repeated")]
    DuplicateVertex { edge: usize, vertex: usize },
    #[error("edge {edge} is empty")]
    EmptyEdge { edge: usize },
    #[error("edge index {edge} out of range (m = {m})")]
    EdgeOutOfRange { edge: usize, m: usize },
    #[error("edge {edge} has size {size} > r = {r}")]
    EdgeTooLarge { edge: usize, size: usize, r: usize },
    #[error("maximum degree {degree} exceeds bound k = {k}")]
    DegreeExceeded { degree: usize, k: usize },
    #[error("degree bound k must be positive")]
    ZeroDegreeBound,
}

/// A hypergraph on vertices `0..n`. Edges are stored sorted and may repeat
/// as sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Builds a hypergraph, sorting each edge. Fails on out-of-range or
    /// repeated vertices and on empty edges.
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self, HypergraphError> {
        let mut sorted = Vec::with_capacity(edges.len());
        for (i, mut e) in edges.into_iter().enumerate() {
            if e.is_empty() {
                return Err(HypergraphError::EmptyEdge { edge: i });
            }
            e.sort_unstable();
            for w in e.windows(2) {
                if w[0] == w[1] {
                    return Err(HypergraphError::DuplicateVertex { edge: i, vertex: w[0] });
                }
            }
            if let Some(&v) = e.last() {
                if v >= n {
                    return Err(HypergraphError::VertexOutOfRange { edge: i, vertex: v, n });
                }
            }
            sorted.push(e);
        }
        Ok(Hypergraph { n, edges: sorted })
    }

    pub fn edgeless(n: usize) -> Self {
        Hypergraph { n, edges: Vec::new() }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    /// Size of the largest edge, 0 when edgeless.
    pub fn max_edge_size(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_uniform(&self, r: usize) -> bool {
        self.edges.iter().all(|e| e.len() == r)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            for &v in e {
                deg[v] += 1;
            }
        }
        deg
    }

    /// Largest number of edges any vertex lies in.
    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Incident edge indices per vertex, in increasing order.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (i, e) in self.edges.iter().enumerate() {
            for &v in e {
                inc[v].push(i);
            }
        }
        inc
    }

    pub fn connected_components(&self) -> ComponentDecomposition {
        self.components_excluding(&[])
    }

    /// Components of `(V, E \ removed)`. Edge indices in the result refer to
    /// this hypergraph.
    pub fn components_excluding(&self, removed: &[usize]) -> ComponentDecomposition {
        let mut skip = vec![false; self.edges.len()];
        for &i in removed {
            skip[i] = true;
        }
        let mut uf = UnionFind::new(self.n);
        let mut touched = vec![false; self.n];
        for (i, e) in self.edges.iter().enumerate() {
            if skip[i] {
                continue;
            }
            for &v in e {
                touched[v] = true;
            }
            for w in e.windows(2) {
                uf.union(w[0], w[1]);
            }
        }

        // Vertices are scanned in increasing order, so components come out
        // sorted by their minimum vertex.
        let mut slot = vec![usize::MAX; self.n];
        let mut components: Vec<Component> = Vec::new();
        let mut isolated = Vec::new();
        for (v, &touched) in touched.iter().enumerate() {
            if !touched {
                isolated.push(v);
                continue;
            }
            let root = uf.find(v);
            if slot[root] == usize::MAX {
                slot[root] = components.len();
                components.push(Component::default());
            }
            components[slot[root]].vertices.push(v);
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !skip[i] {
                components[slot[uf.find(e[0])]].edges.push(i);
            }
        }
        ComponentDecomposition { components, isolated_vertices: isolated }
    }

    /// Splits edge indices by their position relative to the vertex set `s`.
    pub fn edge_partition(&self, s: &[usize]) -> EdgePartition {
        let mut mask = vec![false; self.n];
        for &v in s {
            mask[v] = true;
        }
        self.edge_partition_mask(&mask)
    }

    /// Same as [`edge_partition`](Self::edge_partition) with `s` given as a
    /// membership mask of length `n`.
    pub fn edge_partition_mask(&self, in_s: &[bool]) -> EdgePartition {
        let mut part = EdgePartition::default();
        for (i, e) in self.edges.iter().enumerate() {
            let inside = e.iter().filter(|&&v| in_s[v]).count();
            if inside == e.len() {
                part.inside.push(i);
            } else if inside == 0 {
                part.outside.push(i);
            } else {
                part.crossing.push(i);
            }
        }
        part
    }

    /// Drops the edges in `removed`, keeping the relative order of the rest.
    /// The returned vector maps new edge indices to old ones.
    pub fn remove_edges(&self, removed: &[usize]) -> Result<(Hypergraph, Vec<usize>), HypergraphError> {
        let m = self.edges.len();
        let mut skip = vec![false; m];
        for &i in removed {
            if i >= m {
                return Err(HypergraphError::EdgeOutOfRange { edge: i, m });
            }
            skip[i] = true;
        }
        let mut edges = Vec::with_capacity(m);
        let mut map = Vec::with_capacity(m);
        for (i, e) in self.edges.iter().enumerate() {
            if !skip[i] {
                edges.push(e.clone());
                map.push(i);
            }
        }
        Ok((Hypergraph { n: self.n, edges }, map))
    }

    /// Pads every edge to size exactly `r` and drops isolated vertices.
    ///
    /// Short edges are grouped, in edge order, into blocks of `k`; each block
    /// owns `r` fresh vertices and every edge in it is topped up from the
    /// front of that pool. A fresh vertex therefore lies in at most `k`
    /// edges. Edge indices are unchanged.
    pub fn uniformize(&self, r: usize, k: usize) -> Result<Uniformized, HypergraphError> {
        if k == 0 {
            return Err(HypergraphError::ZeroDegreeBound);
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.len() > r {
                return Err(HypergraphError::EdgeTooLarge { edge: i, size: e.len(), r });
            }
        }
        let degree = self.max_degree();
        if degree > k {
            return Err(HypergraphError::DegreeExceeded { degree, k });
        }

        let short: Vec<usize> = (0..self.edges.len()).filter(|&i| self.edges[i].len() < r).collect();
        let blocks = short.len().div_ceil(k);
        let total = self.n + blocks * r;
        let mut padded = self.edges.clone();
        let mut fresh_raw = vec![Vec::new(); self.edges.len()];
        for (pos, &i) in short.iter().enumerate() {
            let base = self.n + (pos / k) * r;
            let need = r - padded[i].len();
            for j in 0..need {
                padded[i].push(base + j);
                fresh_raw[i].push(base + j);
            }
        }

        let mut used = vec![false; total];
        for e in &padded {
            for &v in e {
                used[v] = true;
            }
        }
        let mut renumber = vec![usize::MAX; total];
        let mut original_vertex = Vec::new();
        for v in 0..total {
            if used[v] {
                renumber[v] = original_vertex.len();
                original_vertex.push(if v < self.n { Some(v) } else { None });
            }
        }
        let edges = padded
            .iter()
            .map(|e| {
                let mut e: Vec<usize> = e.iter().map(|&v| renumber[v]).collect();
                e.sort_unstable();
                e
            })
            .collect();
        let padding = fresh_raw
            .iter()
            .map(|f| f.iter().map(|&v| renumber[v]).collect())
            .collect();
        Ok(Uniformized {
            hypergraph: Hypergraph { n: original_vertex.len(), edges },
            padding,
            original_vertex,
            blocks,
        })
    }
}

/// Result of [`Hypergraph::uniformize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Uniformized {
    pub hypergraph: Hypergraph,
    /// Fresh vertices (new ids) appended to each edge.
    pub padding: Vec<Vec<usize>>,
    /// For each new vertex, the input vertex it came from, or `None` if fresh.
    pub original_vertex: Vec<Option<usize>>,
    /// Number of padding blocks used.
    pub blocks: usize,
}

impl Uniformized {
    /// Number of fresh vertices that survived isolated-vertex removal.
    pub fn fresh_vertices(&self) -> usize {
        self.original_vertex.iter().filter(|v| v.is_none()).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentDecomposition {
    /// Components with at least one edge, sorted by minimum vertex.
    pub components: Vec<Component>,
    /// Vertices in no (remaining) edge.
    pub isolated_vertices: Vec<usize>,
}

impl ComponentDecomposition {
    pub fn edge_counts(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.edges.len()).collect()
    }
}

/// `inside` = E(S), `outside` = E(V \ S), `crossing` = E(S, V \ S).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgePartition {
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
    pub crossing: Vec<usize>,
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
