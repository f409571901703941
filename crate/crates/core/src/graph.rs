//! Simple undirected graphs stored as a symmetric adjacency bitmatrix.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An unordered vertex pair `{i, j}`, always stored with `i < j`.
///
/// The derived ordering is lexicographic on `(i, j)`, which is also the
/// order of [`VertexPair::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexPair {
    pub i: usize,
    pub j: usize,
}

impl VertexPair {
    /// Builds the pair from two distinct vertices given in any order.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "a vertex pair needs two distinct vertices");
        if a < b {
            VertexPair { i: a, j: b }
        } else {
            VertexPair { i: b, j: a }
        }
    }

    /// Position of this pair in the lexicographic enumeration of all pairs
    /// of an `n`-vertex graph.
    #[inline]
    pub fn index(&self, n: usize) -> usize {
        debug_assert!(self.i < self.j && self.j < n);
        self.i * n - self.i * (self.i + 1) / 2 + (self.j - self.i - 1)
    }

    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut i = 0;
        loop {
            let row = n - i - 1;
            if index < row {
                return VertexPair { i, j: i + 1 + index };
            }
            index -= row;
            i += 1;
        }
    }
}

impl fmt::Display for VertexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.i, self.j)
    }
}

/// Number of unordered pairs on `n` vertices.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Labeled simple undirected graph on vertices `0..n`.
///
/// Every row of the adjacency matrix is a bitset of `words` 64-bit words, so
/// pair lookups are O(1) and neighbourhood intersections are word-parallel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    pub fn complete(n: usize) -> Self {
        Graph::new(n).complement()
    }

    /// Builds a graph from an edge list. Panics on self-loops or
    /// out-of-range vertices.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            assert!(u < n && v < n, "vertex out of range");
            g.add_edge(u, v);
        }
        g
    }

    /// The cycle `0-1-...-(n-1)-0`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of 64-bit words per adjacency row.
    #[inline]
    pub fn words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    pub fn has_pair(&self, vp: VertexPair) -> bool {
        self.has_edge(vp.i, vp.j)
    }

    /// Sets the state of pair `{u, v}` in both orientations.
    #[inline]
    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        assert_ne!(u, v, "self-loops are not allowed");
        let (wu, bu) = (u * self.words + v / 64, 1u64 << (v % 64));
        let (wv, bv) = (v * self.words + u / 64, 1u64 << (u % 64));
        if present {
            self.rows[wu] |= bu;
            self.rows[wv] |= bv;
        } else {
            self.rows[wu] &= !bu;
            self.rows[wv] &= !bv;
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.set_edge(u, v, true);
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.set_edge(u, v, false);
    }

    /// Toggles the pair and returns its new state.
    pub fn flip(&mut self, vp: VertexPair) -> bool {
        let now = !self.has_pair(vp);
        self.set_edge(vp.i, vp.j, now);
        now
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// Edge density `m / C(n, 2)`; zero for graphs with fewer than two vertices.
    pub fn density(&self) -> f64 {
        let pairs = pair_count(self.n);
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    /// Neighbours of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> BitIter<'_> {
        BitIter::new(self.row(v))
    }

    /// All edges as pairs, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = VertexPair> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&j| j > i)
                .map(move |j| VertexPair { i, j })
        })
    }

    /// All vertex pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = VertexPair> {
        let n = self.n;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| VertexPair { i, j }))
    }

    /// Flips every pair. `g.complement().complement() == g`.
    pub fn complement(&self) -> Graph {
        let mut out = self.clone();
        for v in 0..self.n {
            let row = &mut out.rows[v * self.words..(v + 1) * self.words];
            for (w, word) in row.iter_mut().enumerate() {
                *word = !*word & valid_mask(self.n, w);
            }
            row[v / 64] &= !(1u64 << (v % 64));
        }
        out
    }

    /// Number of pairs on which the two graphs disagree.
    pub fn hamming_distance(&self, other: &Graph) -> usize {
        assert_eq!(self.n, other.n);
        let total: usize = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum();
        total / 2
    }

    /// Pairs on which the two graphs disagree, lexicographically ordered.
    pub fn difference(&self, other: &Graph) -> Vec<VertexPair> {
        assert_eq!(self.n, other.n);
        self.pairs()
            .filter(|&vp| self.has_pair(vp) != other.has_pair(vp))
            .collect()
    }

    /// True when every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<_> = self.edges().map(|e| (e.i, e.j)).collect();
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &edges)
            .finish()
    }
}

#[inline]
fn valid_mask(n: usize, word: usize) -> u64 {
    let lo = word * 64;
    if n >= lo + 64 {
        u64::MAX
    } else if n <= lo {
        0
    } else {
        (1u64 << (n - lo)) - 1
    }
}

/// Iterator over the set bits of a bitset slice, ascending.
pub struct BitIter<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl<'a> BitIter<'a> {
    pub fn new(words: &'a [u64]) -> Self {
        BitIter {
            words,
            index: 0,
            current: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.index * 64 + bit)
    }
}

/// Parameters of an Erdős–Rényi `G(n, p)` draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErParams {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl ErParams {
    pub fn new(n: usize, p: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p), "edge probability must lie in [0, 1]");
        ErParams { n, p, seed }
    }
}

/// Draws `G(n, p)`: every pair, visited in lexicographic order, becomes an
/// edge when a uniform `[0, 1)` draw from ChaCha8 seeded with `seed` falls
/// below `p`.
pub fn generate_er(params: ErParams) -> Graph {
    assert!((0.0..=1.0).contains(&params.p), "edge probability must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut g = Graph::new(params.n);
    for i in 0..params.n {
        for j in i + 1..params.n {
            if rng.random::<f64>() < params.p {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Samples an optional-pair set for sandwich instances: each non-edge of
/// `g` is kept independently with probability `density`.
pub fn generate_optional_pairs(g: &Graph, density: f64, seed: u64) -> Vec<VertexPair> {
    assert!((0.0..=1.0).contains(&density), "density must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    g.pairs()
        .filter(|&vp| !g.has_pair(vp))
        .filter(|_| rng.random::<f64>() < density)
        .collect()
}
