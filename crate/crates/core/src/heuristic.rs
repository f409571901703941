//! Greedy flip heuristic that drives a graph towards perfection.
//!
//! All odd holes and antiholes of the working graph are pooled, and each
//! vertex pair is scored by how many pooled structures contain both of its
//! endpoints. The highest-scoring pair is flipped; that destroys exactly the
//! pooled structures through the pair, and any newly created structure must
//! also contain the pair, so only those are searched for. A flip is kept
//! only when it creates strictly fewer structures than it destroys.

use std::collections::{BTreeSet, HashSet};

use crate::graph::{pair_count, Graph, VertexPair};
use crate::holes::{
    find_odd_antiholes_through_pair, find_odd_holes, find_odd_holes_in_complement,
    find_odd_holes_through_pair, Hole,
};

pub type HoleId = usize;

/// Pool of known holes/antiholes with per-pair incidence counts.
#[derive(Debug, Clone)]
pub struct PairCountIndex {
    n: usize,
    holes: Vec<Option<Hole>>,
    live: usize,
    counts: Vec<u32>,
    by_pair: Vec<BTreeSet<HoleId>>,
}

impl PairCountIndex {
    pub fn new(n: usize) -> Self {
        PairCountIndex {
            n,
            holes: Vec::new(),
            live: 0,
            counts: vec![0; pair_count(n)],
            by_pair: vec![BTreeSet::new(); pair_count(n)],
        }
    }

    pub fn from_holes<I: IntoIterator<Item = Hole>>(n: usize, holes: I) -> Self {
        let mut index = PairCountIndex::new(n);
        for h in holes {
            index.insert(h);
        }
        index
    }

    pub fn insert(&mut self, hole: Hole) -> HoleId {
        let id = self.holes.len();
        let vs = hole.vertices();
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                let p = VertexPair::new(vs[a], vs[b]).index(self.n);
                self.counts[p] += 1;
                self.by_pair[p].insert(id);
            }
        }
        self.holes.push(Some(hole));
        self.live += 1;
        id
    }

    pub fn remove(&mut self, id: HoleId) -> Option<Hole> {
        let hole = self.holes.get_mut(id)?.take()?;
        let vs = hole.vertices();
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                let p = VertexPair::new(vs[a], vs[b]).index(self.n);
                self.counts[p] -= 1;
                self.by_pair[p].remove(&id);
            }
        }
        self.live -= 1;
        Some(hole)
    }

    /// Number of pooled structures containing both endpoints of `vp`.
    pub fn count(&self, vp: VertexPair) -> u32 {
        self.counts[vp.index(self.n)]
    }

    /// Ids of pooled structures containing both endpoints of `vp`.
    pub fn holes_through(&self, vp: VertexPair) -> Vec<HoleId> {
        self.by_pair[vp.index(self.n)].iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Sum of all pair counts, `Σ C(len, 2)` over the pool.
    pub fn mass(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn holes(&self) -> impl Iterator<Item = &Hole> {
        self.holes.iter().flatten()
    }

    /// Applies one accepted flip: drops the destroyed structures and adds
    /// the created ones.
    pub fn refresh_after_flip(&mut self, flipped: VertexPair, destroyed: &[HoleId], created: Vec<Hole>) {
        debug_assert_eq!(destroyed, self.holes_through(flipped).as_slice());
        for &id in destroyed {
            self.remove(id);
        }
        for h in created {
            self.insert(h);
        }
    }

    /// Id-independent snapshot: counts plus the sorted multiset of pooled
    /// structures. Two indexes over the same pool compare equal.
    pub fn snapshot(&self) -> (Vec<u32>, Vec<Hole>) {
        let mut holes: Vec<Hole> = self.holes().cloned().collect();
        holes.sort();
        (self.counts.clone(), holes)
    }

    /// Verifies the incidence lists against the counts.
    pub fn is_consistent(&self) -> bool {
        self.by_pair.iter().zip(&self.counts).all(|(s, &c)| s.len() == c as usize)
            && self.by_pair.iter().enumerate().all(|(p, ids)| {
                let vp = VertexPair::from_index(self.n, p);
                ids.iter()
                    .all(|&id| self.holes[id].as_ref().is_some_and(|h| h.contains_pair(vp)))
            })
    }

    /// The eligible pair with the largest positive count; ties go to the
    /// lexicographically smallest pair.
    fn best_pair(&self, eligible: impl Fn(usize) -> bool) -> Option<usize> {
        let mut best: Option<(u32, usize)> = None;
        for (p, &c) in self.counts.iter().enumerate() {
            if c > 0 && eligible(p) && best.is_none_or(|(bc, _)| c > bc) {
                best = Some((c, p));
            }
        }
        best.map(|(_, p)| p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicMode {
    /// Pairs may be added or removed.
    EditBothWays,
    /// Only non-edges of the starting graph may be flipped (added).
    AdditionsOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeuristicOutcome {
    Perfect { graph: Graph, flips: Vec<VertexPair> },
    Failed { graph: Graph, remaining: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicRun {
    pub outcome: HeuristicOutcome,
    /// Flip attempts, accepted or reverted.
    pub trials: usize,
}

impl HeuristicRun {
    pub fn is_perfect(&self) -> bool {
        matches!(self.outcome, HeuristicOutcome::Perfect { .. })
    }

    pub fn graph(&self) -> &Graph {
        match &self.outcome {
            HeuristicOutcome::Perfect { graph, .. } | HeuristicOutcome::Failed { graph, .. } => graph,
        }
    }

    /// Accepted flips; only defined for a perfect outcome.
    pub fn flips(&self) -> Option<&[VertexPair]> {
        match &self.outcome {
            HeuristicOutcome::Perfect { flips, .. } => Some(flips),
            HeuristicOutcome::Failed { .. } => None,
        }
    }
}

/// Observer for each accepted flip, used by tests to audit the index.
pub trait FlipObserver {
    fn after_flip(&mut self, graph: &Graph, index: &PairCountIndex);
}

impl FlipObserver for () {
    fn after_flip(&mut self, _: &Graph, _: &PairCountIndex) {}
}

pub fn run_heuristic(g: &Graph, mode: HeuristicMode) -> HeuristicRun {
    run_heuristic_observed(g, mode, &mut ())
}

pub fn run_heuristic_observed(
    g: &Graph,
    mode: HeuristicMode,
    observer: &mut dyn FlipObserver,
) -> HeuristicRun {
    let n = g.n();
    let mut graph = g.clone();
    let mut complement = g.complement();
    let initial = find_odd_holes(&graph, None)
        .into_iter()
        .chain(find_odd_holes_in_complement(&complement, None));
    let mut index = PairCountIndex::from_holes(n, initial);
    let pairs: Vec<VertexPair> = graph.pairs().collect();
    let allowed: Vec<bool> = match mode {
        HeuristicMode::EditBothWays => vec![true; pairs.len()],
        HeuristicMode::AdditionsOnly => pairs.iter().map(|&vp| !g.has_pair(vp)).collect(),
    };
    let mut flips = Vec::new();
    let mut trials = 0;

    while !index.is_empty() {
        let mut failed: HashSet<usize> = HashSet::new();
        loop {
            // Pairs in no pooled structure can never win a strict decrease.
            let Some(p) = index.best_pair(|p| allowed[p] && !failed.contains(&p)) else {
                let remaining = index.len();
                return HeuristicRun {
                    outcome: HeuristicOutcome::Failed { graph, remaining },
                    trials,
                };
            };
            trials += 1;
            let vp = pairs[p];
            graph.flip(vp);
            complement.flip(vp);
            let created: Vec<Hole> = find_odd_holes_through_pair(&graph, vp)
                .into_iter()
                .chain(find_odd_antiholes_through_pair(&complement, vp))
                .collect();
            if created.len() >= index.count(vp) as usize {
                graph.flip(vp);
                complement.flip(vp);
                failed.insert(p);
                continue;
            }
            let destroyed = index.holes_through(vp);
            index.refresh_after_flip(vp, &destroyed, created);
            flips.push(vp);
            observer.after_flip(&graph, &index);
            break;
        }
    }
    HeuristicRun {
        outcome: HeuristicOutcome::Perfect { graph, flips },
        trials,
    }
}
