//! Enumeration of odd holes and odd antiholes.
//!
//! The search grows chordless paths by depth-first extension. A candidate
//! vertex adjacent to an internal path vertex would create a chord and is
//! skipped; a candidate adjacent to the start vertex closes a chordless
//! cycle, which is recorded when it has odd length of at least five.
//! Starting each path at the minimum vertex of its cycle and requiring the
//! second vertex to be smaller than the last yields every hole exactly once.

use std::fmt;
use std::time::Instant;

use crate::graph::{Graph, VertexPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HoleKind {
    Hole,
    Antihole,
}

impl HoleKind {
    pub fn tag(self) -> char {
        match self {
            HoleKind::Hole => 'H',
            HoleKind::Antihole => 'A',
        }
    }
}

/// An odd hole, or an odd antihole, in canonical cyclic form.
///
/// `vertices` lists the cycle so that the first entry is the minimum label
/// and the second entry is smaller than the last. For an antihole the cycle
/// is a cycle of the complement graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hole {
    vertices: Vec<usize>,
    kind: HoleKind,
}

impl Hole {
    /// Canonicalises an arbitrary rotation/direction of a cycle.
    pub fn new(cycle: &[usize], kind: HoleKind) -> Self {
        let k = cycle.len();
        assert!(k >= 3, "a cycle needs at least three vertices");
        let start = (0..k).min_by_key(|&i| cycle[i]).unwrap();
        let next = cycle[(start + 1) % k];
        let prev = cycle[(start + k - 1) % k];
        let vertices = if next < prev {
            (0..k).map(|t| cycle[(start + t) % k]).collect()
        } else {
            (0..k).map(|t| cycle[(start + k - t) % k]).collect()
        };
        Hole { vertices, kind }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn kind(&self) -> HoleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }

    pub fn contains_pair(&self, vp: VertexPair) -> bool {
        self.contains(vp.i) && self.contains(vp.j)
    }

    /// Sorted vertex set.
    pub fn vertex_set(&self) -> Vec<usize> {
        let mut s = self.vertices.clone();
        s.sort_unstable();
        s
    }

    /// Every pair inside the vertex set together with its adjacency in the
    /// realized pattern (in the original graph, not the complement).
    pub fn pattern(&self) -> Vec<(VertexPair, bool)> {
        let k = self.vertices.len();
        let mut out = Vec::with_capacity(k * (k - 1) / 2);
        for a in 0..k {
            for b in a + 1..k {
                let consecutive = b == a + 1 || (a == 0 && b == k - 1);
                let adjacent = match self.kind {
                    HoleKind::Hole => consecutive,
                    HoleKind::Antihole => !consecutive,
                };
                out.push((VertexPair::new(self.vertices[a], self.vertices[b]), adjacent));
            }
        }
        out.sort_unstable();
        out
    }

    /// Pairs of the vertex set that are non-edges of `g` in the realized
    /// pattern: the chords of a hole, the cycle pairs of an antihole.
    pub fn internal_non_edges(&self) -> Vec<VertexPair> {
        self.pattern()
            .into_iter()
            .filter(|&(_, adj)| !adj)
            .map(|(vp, _)| vp)
            .collect()
    }

    /// Checks that this structure is realized as an induced pattern in `g`.
    pub fn is_realized_in(&self, g: &Graph) -> bool {
        let k = self.vertices.len();
        if k < 5 || k % 2 == 0 || self.vertices.iter().any(|&v| v >= g.n()) {
            return false;
        }
        let set = self.vertex_set();
        if set.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        self.pattern().iter().all(|&(vp, adj)| g.has_pair(vp) == adj)
    }
}

impl fmt::Display for Hole {
    /// `H v1 v2 ... vk` with 1-based labels.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.tag())?;
        for v in &self.vertices {
            write!(f, " {}", v + 1)?;
        }
        Ok(())
    }
}

struct Search<'g> {
    g: &'g Graph,
    kind: HoleKind,
    min_len: usize,
    limit: usize,
    /// Only cycles through this vertex are recorded; the start vertex is not
    /// required to be the cycle minimum.
    through: Option<usize>,
    path: Vec<usize>,
    on_path: Vec<u64>,
    internal: Vec<u64>,
    out: Vec<Hole>,
    /// Past this instant the search stops as soon as it holds one structure.
    deadline: Option<Instant>,
    expired: bool,
    calls: u32,
}

impl<'g> Search<'g> {
    fn new(g: &'g Graph, kind: HoleKind, min_len: usize, limit: Option<usize>) -> Self {
        Search {
            g,
            kind,
            min_len,
            limit: limit.unwrap_or(usize::MAX),
            through: None,
            path: Vec::with_capacity(g.n()),
            on_path: vec![0; g.words()],
            internal: vec![0; g.words()],
            out: Vec::new(),
            deadline: None,
            expired: false,
            calls: 0,
        }
    }

    fn full(&self) -> bool {
        self.out.len() >= self.limit || (self.expired && !self.out.is_empty())
    }

    fn tick(&mut self) {
        self.calls = self.calls.wrapping_add(1);
        if self.calls % 1024 == 0 {
            if let Some(d) = self.deadline {
                self.expired = Instant::now() >= d;
            }
        }
    }

    fn run_all_starts(mut self) -> Vec<Hole> {
        if self.limit == 0 {
            return self.out;
        }
        for u in 0..self.g.n() {
            self.start(u);
            if self.full() {
                break;
            }
        }
        self.out
    }

    fn start(&mut self, u: usize) {
        self.path.push(u);
        set_bit(&mut self.on_path, u);
        self.extend();
        clear_bit(&mut self.on_path, u);
        self.path.pop();
    }

    /// Returns true once the limit is reached.
    fn extend(&mut self) -> bool {
        self.tick();
        if self.full() {
            return true;
        }
        let g = self.g;
        let u = self.path[0];
        let v = *self.path.last().unwrap();
        let len = self.path.len();
        let restrict_min = self.through.is_none();

        if let Some(target) = self.through {
            // The target can never join once it sees an internal vertex.
            if !test_bit(&self.on_path, target) && intersects(g.row(target), &self.internal) {
                return false;
            }
        }

        for x in g.neighbors(v) {
            if test_bit(&self.on_path, x) || (restrict_min && x < u) {
                continue;
            }
            if intersects(g.row(x), &self.internal) {
                continue;
            }
            if len >= 2 && g.has_edge(u, x) {
                if len >= 4 && len % 2 == 0 && self.path[1] < x && len + 1 >= self.min_len {
                    let hit = match self.through {
                        Some(t) => x == t || test_bit(&self.on_path, t),
                        None => true,
                    };
                    if hit {
                        self.emit(x);
                        if self.full() {
                            return true;
                        }
                    }
                }
                continue;
            }
            if len >= 2 {
                set_bit(&mut self.internal, v);
            }
            self.path.push(x);
            set_bit(&mut self.on_path, x);
            let stop = self.extend();
            clear_bit(&mut self.on_path, x);
            self.path.pop();
            if len >= 2 {
                clear_bit(&mut self.internal, v);
            }
            if stop {
                return true;
            }
        }
        false
    }

    fn emit(&mut self, last: usize) {
        let mut cycle = self.path.clone();
        cycle.push(last);
        let hole = if self.through.is_some() {
            Hole::new(&cycle, self.kind)
        } else {
            // Already canonical: starts at the minimum, path[1] < last.
            Hole {
                vertices: cycle,
                kind: self.kind,
            }
        };
        self.out.push(hole);
    }
}

#[inline]
fn set_bit(bits: &mut [u64], v: usize) {
    bits[v / 64] |= 1 << (v % 64);
}

#[inline]
fn clear_bit(bits: &mut [u64], v: usize) {
    bits[v / 64] &= !(1 << (v % 64));
}

#[inline]
fn test_bit(bits: &[u64], v: usize) -> bool {
    bits[v / 64] >> (v % 64) & 1 == 1
}

#[inline]
fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

/// All odd holes of `g`, or the first `limit` of them in the deterministic
/// enumeration order (start vertices ascending, neighbours ascending).
pub fn find_odd_holes(g: &Graph, limit: Option<usize>) -> Vec<Hole> {
    Search::new(g, HoleKind::Hole, 5, limit).run_all_starts()
}

/// Structures found before `deadline`: holes then antiholes, each capped by
/// its limit. Once the deadline passes the enumeration stops, but each
/// non-empty class still yields at least one member, so an empty result
/// always means the graph is perfect.
pub fn find_structures_until(
    g: &Graph,
    limits: (Option<usize>, Option<usize>),
    deadline: Option<Instant>,
) -> (Vec<Hole>, Vec<Hole>) {
    let mut holes = Search::new(g, HoleKind::Hole, 5, limits.0);
    holes.deadline = deadline;
    let holes = holes.run_all_starts();
    let complement = g.complement();
    let mut antiholes = Search::new(&complement, HoleKind::Antihole, 7, limits.1);
    antiholes.deadline = deadline;
    (holes, antiholes.run_all_starts())
}

/// Odd antiholes of length at least seven: odd holes of the complement.
///
/// Five-vertex antiholes are never reported because the complement of a
/// five-cycle is a five-cycle on the same vertex set, already reported by
/// [`find_odd_holes`].
pub fn find_odd_antiholes(g: &Graph, limit: Option<usize>) -> Vec<Hole> {
    find_odd_holes_in_complement(&g.complement(), limit)
}

/// [`find_odd_antiholes`] for callers that already hold the complement.
pub fn find_odd_holes_in_complement(complement: &Graph, limit: Option<usize>) -> Vec<Hole> {
    Search::new(complement, HoleKind::Antihole, 7, limit).run_all_starts()
}

/// Odd holes of `g` whose vertex set contains both endpoints of `vp`.
pub fn find_odd_holes_through_pair(g: &Graph, vp: VertexPair) -> Vec<Hole> {
    through_pair(g, vp, HoleKind::Hole, 5)
}

/// Odd antiholes (length at least seven) of `g` containing both endpoints
/// of `vp`, searched in the supplied complement.
pub fn find_odd_antiholes_through_pair(complement: &Graph, vp: VertexPair) -> Vec<Hole> {
    through_pair(complement, vp, HoleKind::Antihole, 7)
}

fn through_pair(g: &Graph, vp: VertexPair, kind: HoleKind, min_len: usize) -> Vec<Hole> {
    let mut search = Search::new(g, kind, min_len, None);
    search.through = Some(vp.j);
    search.start(vp.i);
    let mut out = search.out;
    out.sort_unstable();
    out
}

/// A graph is perfect iff it has neither an odd hole nor an odd antihole.
pub fn is_perfect(g: &Graph) -> bool {
    find_odd_holes(g, Some(1)).is_empty() && find_odd_antiholes(g, Some(1)).is_empty()
}
