//! Exact 0/1 solver for the restricted master problem.
//!
//! Every decision variable is a vertex pair; its value is the pair's
//! adjacency in the output graph. The objective is the number of free pairs
//! whose value differs from the input graph. Constraints are nogoods: each
//! [`PatternConstraint`] forbids one exact adjacency pattern on the pairs of
//! an odd vertex set, i.e. at least one listed pair must take the opposite
//! of its required state.
//!
//! The search is a depth-first branch and bound. Unassigned free pairs keep
//! their input value, so a node's materialized graph costs exactly the
//! number of committed flips. A node with no violated constraint is an
//! integer candidate and is offered to the lazy-cut callback; otherwise the
//! solver branches on the violated constraint with the fewest unassigned
//! pairs, taking its smallest unassigned pair and exploring "flip" before
//! "keep". Nodes are pruned with a hitting-set lower bound over the
//! currently violated constraints.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::graph::{pair_count, Graph, VertexPair};
use crate::holes::{Hole, HoleKind};
use crate::relax::{LpBound, Relaxation, Row};

/// Linearised forbidden-pattern constraint of one hole or antihole.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternConstraint {
    pairs: Vec<(VertexPair, bool)>,
    source_kind: HoleKind,
    source_len: usize,
}

impl PatternConstraint {
    /// One literal per pair of the hole's vertex set, requiring the pattern
    /// adjacency. Satisfied when any pair disagrees with it.
    pub fn from_hole(hole: &Hole) -> Self {
        PatternConstraint {
            pairs: hole.pattern(),
            source_kind: hole.kind(),
            source_len: hole.len(),
        }
    }

    /// A constraint over an explicit literal list, sorted on construction.
    pub fn new(mut pairs: Vec<(VertexPair, bool)>, source_kind: HoleKind, source_len: usize) -> Self {
        pairs.sort_unstable();
        PatternConstraint {
            pairs,
            source_kind,
            source_len,
        }
    }

    pub fn pairs(&self) -> &[(VertexPair, bool)] {
        &self.pairs
    }

    pub fn source_kind(&self) -> HoleKind {
        self.source_kind
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn is_satisfied_by(&self, g: &Graph) -> bool {
        self.pairs.iter().any(|&(vp, req)| g.has_pair(vp) != req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairDomain {
    Free,
    Fixed(bool),
}

/// Per-pair variable domains, indexed by [`VertexPair::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDomain {
    n: usize,
    states: Vec<PairDomain>,
}

impl VariableDomain {
    pub fn all_free(n: usize) -> Self {
        VariableDomain {
            n,
            states: vec![PairDomain::Free; pair_count(n)],
        }
    }

    /// Edges of `g` fixed present, non-edges free.
    pub fn completion(g: &Graph) -> Self {
        let mut d = VariableDomain::all_free(g.n());
        for e in g.edges() {
            d.set(e, PairDomain::Fixed(true));
        }
        d
    }

    /// Edges of `g` fixed present, `optional` pairs free, everything else
    /// fixed absent.
    pub fn sandwich(g: &Graph, optional: &[VertexPair]) -> Self {
        let n = g.n();
        let mut d = VariableDomain {
            n,
            states: vec![PairDomain::Fixed(false); pair_count(n)],
        };
        for e in g.edges() {
            d.set(e, PairDomain::Fixed(true));
        }
        for &vp in optional {
            d.set(vp, PairDomain::Free);
        }
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, vp: VertexPair) -> PairDomain {
        self.states[vp.index(self.n)]
    }

    pub fn set(&mut self, vp: VertexPair, d: PairDomain) {
        let idx = vp.index(self.n);
        self.states[idx] = d;
    }

    pub fn free_count(&self) -> usize {
        self.states.iter().filter(|d| **d == PairDomain::Free).count()
    }

    /// Whether `g` takes the fixed value on every fixed pair.
    pub fn admits(&self, g: &Graph) -> bool {
        g.n() == self.n
            && g.pairs().zip(&self.states).all(|(vp, d)| match d {
                PairDomain::Free => true,
                PairDomain::Fixed(v) => g.has_pair(vp) == *v,
            })
    }

    /// The graph obtained by forcing fixed pairs onto `input`.
    pub fn project(&self, input: &Graph) -> Graph {
        let mut g = input.clone();
        for (vp, d) in input.pairs().zip(&self.states) {
            if let PairDomain::Fixed(v) = d {
                g.set_edge(vp.i, vp.j, *v);
            }
        }
        g
    }
}

/// Hamming distance between `g` and `input` counted over free pairs only.
pub fn free_distance(input: &Graph, domains: &VariableDomain, g: &Graph) -> usize {
    input
        .pairs()
        .zip(&domains.states)
        .filter(|(vp, d)| **d == PairDomain::Free && input.has_pair(*vp) != g.has_pair(*vp))
        .count()
}

/// Assignment of a subset of pairs, indexed by [`VertexPair::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialAssignment {
    n: usize,
    values: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn empty(n: usize) -> Self {
        PartialAssignment {
            n,
            values: vec![None; pair_count(n)],
        }
    }

    pub fn assign(&mut self, vp: VertexPair, value: bool) {
        let idx = vp.index(self.n);
        self.values[idx] = Some(value);
    }

    pub fn get(&self, vp: VertexPair) -> Option<bool> {
        self.values[vp.index(self.n)]
    }
}

/// Lower bound on the completion cost of a partial assignment: committed
/// flips plus a greedily built family of pairwise pair-disjoint constraints
/// that are violated when no further pair is flipped.
///
/// Unassigned free pairs are taken at their input value. Candidates are
/// scanned by increasing number of unassigned free pairs, ties in pool order.
pub fn lower_bound_disjoint_packing(
    input: &Graph,
    domains: &VariableDomain,
    constraints: &[PatternConstraint],
    partial: &PartialAssignment,
) -> usize {
    let n = input.n();
    let value = |vp: VertexPair| match domains.get(vp) {
        PairDomain::Fixed(v) => v,
        PairDomain::Free => partial.get(vp).unwrap_or_else(|| input.has_pair(vp)),
    };
    let committed = input
        .pairs()
        .filter(|&vp| domains.get(vp) == PairDomain::Free)
        .filter(|&vp| partial.get(vp).is_some_and(|v| v != input.has_pair(vp)))
        .count();

    let mut violated: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (ci, c) in constraints.iter().enumerate() {
        if c.pairs.iter().all(|&(vp, req)| value(vp) == req) {
            let open: Vec<usize> = c
                .pairs
                .iter()
                .map(|&(vp, _)| vp)
                .filter(|&vp| domains.get(vp) == PairDomain::Free && partial.get(vp).is_none())
                .map(|vp| vp.index(n))
                .collect();
            violated.push((open.len(), ci, open));
        }
    }
    violated.sort_by_key(|&(len, ci, _)| (len, ci));
    let mut used = vec![false; pair_count(n)];
    let mut packed = 0;
    for (_, _, open) in &violated {
        if open.iter().all(|&p| !used[p]) {
            for &p in open {
                used[p] = true;
            }
            packed += 1;
        }
    }
    committed + packed
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

/// Search counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MasterStats {
    pub nodes: u64,
    pub candidates: u64,
    pub lazy_cuts: u64,
    pub pool_size: usize,
    pub incumbent_updates: u64,
    pub injected_incumbents: u64,
}

#[derive(Debug, Clone)]
pub struct MasterResult {
    pub status: MasterStatus,
    /// Best assignment found, as a graph. Absent when infeasible or when no
    /// incumbent exists at the time limit.
    pub assignment: Option<Graph>,
    pub objective: Option<usize>,
    pub lower_bound: usize,
    pub stats: MasterStats,
    /// Every constraint seen, initial and lazy.
    pub pool: Vec<PatternConstraint>,
}

/// Optimality gap in percent, `(ub - lb) / ub * 100`; 100 without an upper
/// bound and 0 when the upper bound is zero.
pub fn gap_pct(upper: Option<usize>, lower: usize) -> f64 {
    match upper {
        None => 100.0,
        Some(0) => 0.0,
        Some(ub) => (ub.saturating_sub(lower)) as f64 / ub as f64 * 100.0,
    }
}

/// Reply to an integer candidate.
#[derive(Debug, Default)]
pub struct CandidateResponse {
    /// Lazy cuts. The candidate is rejected if it violates any of them.
    pub cuts: Vec<PatternConstraint>,
    /// A feasible assignment to offer as incumbent.
    pub incumbent: Option<Graph>,
}

/// The search state at a node. Unassigned free pairs show their input value.
pub struct NodeView<'a> {
    pub index: u64,
    pub depth: usize,
    pub graph: &'a Graph,
    /// The relaxation point rounded at 0.5, when a relaxation was solved.
    pub relaxation: Option<&'a Graph>,
    pub incumbent_objective: Option<usize>,
}

pub trait MasterCallbacks {
    fn on_integer_candidate(
        &mut self,
        candidate: &Graph,
        incumbent_objective: Option<usize>,
    ) -> CandidateResponse;

    /// Separation at a fractional relaxation point: cuts found in the
    /// rounded graph.
    fn on_fractional(&mut self, _rounded: &Graph) -> Vec<PatternConstraint> {
        Vec::new()
    }

    /// Fired at every search node; may return an incumbent.
    fn on_node(&mut self, _node: &NodeView<'_>) -> Option<Graph> {
        None
    }
}

/// Accepts every candidate.
pub struct NoCallbacks;

impl MasterCallbacks for NoCallbacks {
    fn on_integer_candidate(&mut self, _: &Graph, _: Option<usize>) -> CandidateResponse {
        CandidateResponse::default()
    }
}

/// How the branching pair is chosen when a relaxation is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    /// Pseudocosts, initialised by probing both children.
    #[default]
    Reliability,
    /// The pair whose relaxation value leans furthest from its input value.
    Lean,
}

#[derive(Debug, Clone, Default)]
pub struct MasterOptions {
    pub time_limit: Option<Duration>,
    /// Stop at the first accepted candidate without optimising.
    pub first_feasible: bool,
    /// Stop after this many nodes, reported like a time-out.
    pub node_limit: Option<u64>,
    /// At the root and every this many nodes, re-optimise over the pairs
    /// where the relaxation disagrees with the incumbent, all others fixed
    /// to the incumbent.
    pub neighborhood_interval: Option<u64>,
    pub branching: Branching,
    /// Bound with the hitting-set argument alone, without the linear
    /// relaxation, and branch on the violated constraint with the fewest
    /// unassigned pairs.
    pub combinatorial_only: bool,
}

const NONE: u32 = u32::MAX;

const FRAC_EPS: f64 = 1e-6;
const SCORE_EPS: f64 = 1e-6;
/// Observations per direction before a pseudocost is trusted.
const RELIABILITY: u32 = 1;
/// Probes without a better score before the candidate scan stops.
const LOOKAHEAD: usize = 4;
const MAX_PROBES: usize = 10;
/// Separation rounds on rounded fractional points at the root.
const ROOT_SEPARATION_ROUNDS: usize = 5;
/// Node limit of a neighbourhood sub-solve.
const NEIGHBORHOOD_NODES: u64 = 300;
/// Gain assigned to a probed child that is infeasible or pruned.
const PRUNED_GAIN: f64 = 1e3;


struct Clause {
    /// Literals on free pairs: (pair index, required value).
    lits: Vec<(u32, bool)>,
    mismatch: u32,
    unassigned: u32,
}

#[derive(Clone, Copy)]
struct Frame {
    lb: usize,
    second_pending: bool,
    /// Pair, value of the child being explored, parent relaxation value of
    /// the pair and parent objective.
    branch: Option<(usize, bool, f64, f64)>,
}

enum Relaxed {
    Fractional,
    Accepted,
    Cut,
}

enum Flow {
    Continue,
    Stop,
}

struct Solver<'a> {
    input: &'a Graph,
    domains: &'a VariableDomain,
    n: usize,
    pairs: Vec<VertexPair>,
    free: Vec<bool>,
    input_value: Vec<bool>,
    value: Vec<bool>,
    assigned: Vec<bool>,
    current: Graph,
    cost: usize,

    pool: Vec<PatternConstraint>,
    seen: HashSet<Vec<(VertexPair, bool)>>,
    clauses: Vec<Clause>,
    occurrences: Vec<Vec<(u32, bool)>>,
    violated: Vec<u32>,
    violated_pos: Vec<u32>,

    best: Option<Graph>,
    ub: Option<usize>,
    root_lb: Option<usize>,
    frames: Vec<Frame>,
    stats: MasterStats,
    options: MasterOptions,
    deadline: Option<Instant>,
    timed_out: bool,

    rows: Vec<Row>,
    relax: Option<Relaxation>,
    /// Per pair and direction (to 0, to 1): summed bound gain per unit
    /// change, and observation count.
    pseudo: Vec<[(f64, u32); 2]>,
    /// Incumbent updates before the search started.
    seeded_updates: u64,

    // bound scratch
    stamp: Vec<u32>,
    stamp_gen: u32,
    degree: Vec<u32>,
    touched: Vec<u32>,
    order: Vec<u32>,
    buckets: Vec<u32>,
}

impl<'a> Solver<'a> {
    fn new(input: &'a Graph, domains: &'a VariableDomain, options: MasterOptions) -> Self {
        let n = input.n();
        let pairs: Vec<VertexPair> = input.pairs().collect();
        let np = pairs.len();
        let free: Vec<bool> = domains.states.iter().map(|d| *d == PairDomain::Free).collect();
        let current = domains.project(input);
        let input_value: Vec<bool> = pairs.iter().map(|&vp| input.has_pair(vp)).collect();
        let value: Vec<bool> = pairs.iter().map(|&vp| current.has_pair(vp)).collect();
        let deadline = options.time_limit.map(|t| Instant::now() + t);
        let relax = (!options.first_feasible && !options.combinatorial_only)
            .then(|| Relaxation::new(&free, &input_value, deadline));
        Solver {
            input,
            domains,
            n,
            pairs,
            assigned: free.iter().map(|f| !f).collect(),
            free,
            input_value,
            value,
            current,
            cost: 0,
            pool: Vec::new(),
            seen: HashSet::new(),
            clauses: Vec::new(),
            occurrences: vec![Vec::new(); np],
            violated: Vec::new(),
            violated_pos: Vec::new(),
            best: None,
            ub: None,
            root_lb: None,
            frames: Vec::new(),
            stats: MasterStats::default(),
            options,
            deadline,
            timed_out: false,
            rows: Vec::new(),
            relax,
            pseudo: vec![[(0.0, 0); 2]; np],
            seeded_updates: 0,
            stamp: vec![0; np],
            stamp_gen: 0,
            degree: vec![0; np],
            touched: Vec::new(),
            order: Vec::new(),
            buckets: Vec::new(),
        }
    }

    /// Adds a constraint unless an identical one is already pooled. Returns
    /// `None` for duplicates, otherwise whether the current assignment
    /// violates it.
    fn add_constraint(&mut self, c: PatternConstraint) -> Option<bool> {
        if !self.seen.insert(c.pairs.clone()) {
            return None;
        }
        let mut lits = Vec::with_capacity(c.pairs.len());
        let mut satisfied_by_fixed = false;
        for &(vp, req) in &c.pairs {
            let p = vp.index(self.n);
            if self.free[p] {
                lits.push((p as u32, req));
            } else if self.value[p] != req {
                satisfied_by_fixed = true;
            }
        }
        self.pool.push(c);
        if satisfied_by_fixed {
            return Some(false);
        }
        let id = self.clauses.len() as u32;
        let mut mismatch = 0;
        let mut unassigned = 0;
        for &(p, req) in &lits {
            let p = p as usize;
            if self.value[p] != req {
                mismatch += 1;
            }
            if !self.assigned[p] {
                unassigned += 1;
            }
            self.occurrences[p].push((id, req));
        }
        self.rows.push(Row::nogood(&lits));
        self.clauses.push(Clause {
            lits,
            mismatch,
            unassigned,
        });
        self.violated_pos.push(NONE);
        if mismatch == 0 {
            self.mark_violated(id);
        }
        Some(mismatch == 0)
    }

    fn mark_violated(&mut self, id: u32) {
        self.violated_pos[id as usize] = self.violated.len() as u32;
        self.violated.push(id);
    }

    fn unmark_violated(&mut self, id: u32) {
        let pos = self.violated_pos[id as usize] as usize;
        let last = *self.violated.last().unwrap();
        self.violated.swap_remove(pos);
        if last != id {
            self.violated_pos[last as usize] = pos as u32;
        }
        self.violated_pos[id as usize] = NONE;
    }

    fn set_value(&mut self, p: usize, v: bool) {
        if self.value[p] == v {
            return;
        }
        self.value[p] = v;
        let vp = self.pairs[p];
        self.current.set_edge(vp.i, vp.j, v);
        if v != self.input_value[p] {
            self.cost += 1;
        } else {
            self.cost -= 1;
        }
        for k in 0..self.occurrences[p].len() {
            let (id, req) = self.occurrences[p][k];
            let clause = &mut self.clauses[id as usize];
            if v == req {
                clause.mismatch -= 1;
                if clause.mismatch == 0 {
                    self.mark_violated(id);
                }
            } else {
                clause.mismatch += 1;
                if clause.mismatch == 1 {
                    self.unmark_violated(id);
                }
            }
        }
    }

    fn assign(&mut self, p: usize, v: bool) {
        debug_assert!(!self.assigned[p]);
        self.assigned[p] = true;
        for &(id, _) in &self.occurrences[p] {
            self.clauses[id as usize].unassigned -= 1;
        }
        self.set_value(p, v);
    }

    fn unassign(&mut self, p: usize) {
        debug_assert!(self.assigned[p]);
        self.set_value(p, self.input_value[p]);
        self.assigned[p] = false;
        for &(id, _) in &self.occurrences[p] {
            self.clauses[id as usize].unassigned += 1;
        }
    }

    fn unassigned_lits(&self, id: u32) -> impl Iterator<Item = usize> + '_ {
        self.clauses[id as usize]
            .lits
            .iter()
            .map(|l| l.0 as usize)
            .filter(|&p| !self.assigned[p])
    }

    /// Hitting-set lower bound on the number of further flips needed to
    /// satisfy the violated constraints; `None` if some violated constraint
    /// has no unassigned pair left.
    fn extra_flips_bound(&mut self) -> Option<usize> {
        let nv = self.violated.len();
        if nv == 0 {
            return Some(0);
        }
        if self.violated.iter().any(|&id| self.clauses[id as usize].unassigned == 0) {
            return None;
        }
        // degrees
        self.touched.clear();
        for k in 0..nv {
            let id = self.violated[k];
            for l in 0..self.clauses[id as usize].lits.len() {
                let p = self.clauses[id as usize].lits[l].0 as usize;
                if !self.assigned[p] {
                    if self.degree[p] == 0 {
                        self.touched.push(p as u32);
                    }
                    self.degree[p] += 1;
                }
            }
        }

        // disjoint packing, smallest constraints first
        self.order.clear();
        self.order.extend_from_slice(&self.violated);
        {
            let clauses = &self.clauses;
            self.order
                .sort_unstable_by_key(|&id| (clauses[id as usize].unassigned, id));
        }
        self.stamp_gen = self.stamp_gen.wrapping_add(1);
        if self.stamp_gen == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.stamp_gen = 1;
        }
        let gen = self.stamp_gen;
        let mut packed = 0usize;
        let mut packed_degree_sum = 0usize;
        for k in 0..self.order.len() {
            let id = self.order[k];
            if self.unassigned_lits(id).any(|p| self.stamp[p] == gen) {
                continue;
            }
            let mut max_deg = 0;
            for l in 0..self.clauses[id as usize].lits.len() {
                let p = self.clauses[id as usize].lits[l].0 as usize;
                if !self.assigned[p] {
                    self.stamp[p] = gen;
                    max_deg = max_deg.max(self.degree[p] as usize);
                }
            }
            packed += 1;
            packed_degree_sum += max_deg;
        }

        // degrees in descending order via counting sort
        let max_deg = self.touched.iter().map(|&p| self.degree[p as usize]).max().unwrap_or(0) as usize;
        self.buckets.clear();
        self.buckets.resize(max_deg + 1, 0);
        for &p in &self.touched {
            self.buckets[self.degree[p as usize] as usize] += 1;
        }
        let prefix_needed = |target: usize, buckets: &[u32]| -> usize {
            let mut covered = 0usize;
            let mut used = 0usize;
            for d in (1..buckets.len()).rev() {
                let count = buckets[d] as usize;
                if count == 0 {
                    continue;
                }
                let need = (target - covered).div_ceil(d);
                if need <= count {
                    return used + need;
                }
                covered += count * d;
                used += count;
            }
            used
        };
        let degree_bound = prefix_needed(nv, &self.buckets);
        let sum_over_packing = if packed_degree_sum >= nv {
            packed
        } else {
            packed + prefix_needed(nv - packed_degree_sum, &self.buckets)
        };

        for &p in &self.touched {
            self.degree[p as usize] = 0;
        }
        Some(packed.max(degree_bound).max(sum_over_packing))
    }

    fn node_bound(&mut self) -> Option<usize> {
        if self.options.first_feasible {
            if self.violated.iter().any(|&id| self.clauses[id as usize].unassigned == 0) {
                return None;
            }
            return Some(self.cost);
        }
        self.extra_flips_bound().map(|extra| self.cost + extra)
    }

    fn try_incumbent(&mut self, g: &Graph) -> bool {
        if g.n() != self.n || !self.domains.admits(g) {
            return false;
        }
        if !self.pool.iter().all(|c| c.is_satisfied_by(g)) {
            return false;
        }
        let cost = free_distance(self.input, self.domains, g);
        if self.ub.is_none_or(|ub| cost < ub) {
            self.ub = Some(cost);
            self.best = Some(g.clone());
            self.stats.incumbent_updates += 1;
            true
        } else {
            false
        }
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d)
            || self.options.node_limit.is_some_and(|l| self.stats.nodes > l)
        {
            self.timed_out = true;
        }
        self.timed_out
    }

    fn search(
        &mut self,
        depth: usize,
        fix: Option<(usize, bool)>,
        callbacks: &mut dyn MasterCallbacks,
    ) -> Flow {
        self.stats.nodes += 1;
        if self.out_of_time() {
            return Flow::Stop;
        }

        if self.violated.is_empty() {
            if self.ub.is_some_and(|ub| self.cost >= ub) {
                return Flow::Continue;
            }
            self.stats.candidates += 1;
            let response = callbacks.on_integer_candidate(&self.current, self.ub);
            for cut in response.cuts {
                if self.add_constraint(cut).is_some() {
                    self.stats.lazy_cuts += 1;
                }
            }
            if let Some(g) = response.incumbent {
                if self.try_incumbent(&g) {
                    self.stats.injected_incumbents += 1;
                }
            }
            if self.violated.is_empty() {
                if self.ub.is_none_or(|ub| self.cost < ub) {
                    self.ub = Some(self.cost);
                    self.best = Some(self.current.clone());
                    self.stats.incumbent_updates += 1;
                }
                return if self.options.first_feasible {
                    Flow::Stop
                } else {
                    Flow::Continue
                };
            }
        }

        let nb = self.node_bound();
        let Some(mut lb) = nb else {
            return Flow::Continue;
        };
        if self.ub.is_some_and(|ub| lb >= ub) {
            return Flow::Continue;
        }
        let pushed = match self.relax.as_mut().map(|r| r.bound(&self.rows, fix)) {
            None => false,
            Some(LpBound::Infeasible) => return Flow::Continue,
            Some(LpBound::Unknown) => true,
            Some(LpBound::Bound(b)) => {
                lb = lb.max(b);
                true
            }
        };
        if pushed {
            if let Some(obj) = self.relax.as_ref().and_then(|r| r.top_objective()) {
                self.record_gain(obj);
            }
        }
        let mut pushed = pushed;
        let mut rounds = if depth == 0 { ROOT_SEPARATION_ROUNDS } else { 0 };
        while pushed && self.ub.is_none_or(|ub| lb < ub) {
            match self.integral_relaxation(callbacks, &mut rounds) {
                Relaxed::Fractional => break,
                Relaxed::Accepted => {
                    lb = lb.max(self.ub.expect("accepted candidate sets the incumbent"));
                }
                Relaxed::Cut => match self.relax.as_mut().unwrap().refresh(&self.rows) {
                    LpBound::Infeasible => pushed = false,
                    LpBound::Unknown => break,
                    LpBound::Bound(b) => lb = lb.max(b),
                },
            }
            if self.timed_out {
                break;
            }
        }
        if !pushed && self.relax.is_some() {
            return Flow::Continue;
        }
        let rounded = if pushed { self.rounded_relaxation() } else { None };
        if let Some(r) = &rounded {
            self.try_rounding(r, callbacks);
        }
        let view = NodeView {
            index: self.stats.nodes,
            depth,
            graph: &self.current,
            relaxation: rounded.as_ref(),
            incumbent_objective: self.ub,
        };
        if let Some(g) = callbacks.on_node(&view) {
            if self.try_incumbent(&g) {
                self.stats.injected_incumbents += 1;
            }
        }
        if self
            .options
            .neighborhood_interval
            .is_some_and(|k| depth == 0 || self.stats.nodes % k == 0)
        {
            self.neighborhood_search(callbacks);
        }
        if depth == 0 && self.root_lb.is_none_or(|r| lb > r) {
            self.root_lb = Some(lb);
        }
        if self.ub.is_some_and(|ub| lb >= ub) {
            if pushed {
                self.relax.as_mut().unwrap().pop();
            }
            return Flow::Continue;
        }
        let flow = self.branch(depth, lb, callbacks);
        if pushed {
            self.relax.as_mut().unwrap().pop();
        }
        flow
    }

    /// Offers an integral relaxation optimum to the callbacks as an integer
    /// candidate.
    /// Relaxation value of every pair at the top node; pairs outside the
    /// relaxation take their current value.
    fn relaxation_point(&self) -> Option<Vec<f64>> {
        let relax = self.relax.as_ref()?;
        (0..self.value.len())
            .map(|p| {
                if self.free[p] {
                    relax.top_value(p)
                } else {
                    Some(if self.value[p] { 1.0 } else { 0.0 })
                }
            })
            .collect()
    }

    fn round(&self, x: &[f64]) -> Graph {
        let mut rounded = self.current.clone();
        for (p, &v) in x.iter().enumerate() {
            let vp = self.pairs[p];
            rounded.set_edge(vp.i, vp.j, v > 0.5);
        }
        rounded
    }

    /// The top relaxation point rounded at 0.5.
    fn rounded_relaxation(&self) -> Option<Graph> {
        self.relaxation_point().map(|x| self.round(&x))
    }

    /// Offers a rounded relaxation point that satisfies every constraint as
    /// an integer candidate.
    fn try_rounding(&mut self, rounded: &Graph, callbacks: &mut dyn MasterCallbacks) {
        let cost = free_distance(self.input, self.domains, rounded);
        if self.ub.is_some_and(|ub| cost >= ub) || !self.pool.iter().all(|c| c.is_satisfied_by(rounded)) {
            return;
        }
        self.stats.candidates += 1;
        let response = callbacks.on_integer_candidate(rounded, self.ub);
        let rejected = !response.cuts.is_empty();
        for cut in response.cuts {
            if self.add_constraint(cut).is_some() {
                self.stats.lazy_cuts += 1;
            }
        }
        if let Some(g) = response.incumbent {
            if self.try_incumbent(&g) {
                self.stats.injected_incumbents += 1;
            }
        }
        if !rejected {
            self.try_incumbent(rounded);
        }
    }

    /// Solves the subproblem fixing every pair on which the relaxation
    /// point and the incumbent agree, under a node limit, and adopts its
    /// constraints and any better solution.
    fn neighborhood_search(&mut self, callbacks: &mut dyn MasterCallbacks) {
        let Some(best) = self.best.clone() else {
            return;
        };
        let Some(x) = self.relaxation_point() else {
            return;
        };
        let mut domains = self.domains.clone();
        let mut open = 0;
        let mut total = 0;
        for p in (0..x.len()).filter(|&p| self.free[p]) {
            total += 1;
            let vp = self.pairs[p];
            let inc = best.has_pair(vp);
            if (x[p] - if inc { 1.0 } else { 0.0 }).abs() < 1e-6 {
                domains.set(vp, PairDomain::Fixed(inc));
            } else {
                open += 1;
            }
        }
        // Only worthwhile when at least half the pairs get fixed.
        if open == 0 || open * 2 > total {
            return;
        }
        let options = MasterOptions {
            time_limit: self.deadline.map(|d| d.saturating_duration_since(Instant::now())),
            first_feasible: false,
            node_limit: Some(NEIGHBORHOOD_NODES),
            neighborhood_interval: None,
            branching: Branching::Lean,
            combinatorial_only: false,
        };
        let sub = solve(self.input, &domains, self.pool.clone(), Some(best), &options, callbacks);
        for c in sub.pool {
            if self.add_constraint(c).is_some() {
                self.stats.lazy_cuts += 1;
            }
        }
        if let Some(g) = sub.assignment {
            self.try_incumbent(&g);
        }
        self.out_of_time();
    }

    /// Adds the cuts found in the rounding of a fractional point; true if
    /// the point violates any of them.
    fn separate_fractional(&mut self, callbacks: &mut dyn MasterCallbacks) -> bool {
        let Some(x) = self.relaxation_point() else {
            return false;
        };
        let rounded = self.round(&x);
        let mut added = false;
        for cut in callbacks.on_fractional(&rounded) {
            let slack: f64 = cut
                .pairs
                .iter()
                .map(|&(vp, req)| {
                    let v = x[vp.index(self.n)];
                    if req { 1.0 - v } else { v }
                })
                .sum();
            if self.add_constraint(cut).is_some() {
                self.stats.lazy_cuts += 1;
                added |= slack < 1.0 - 1e-6;
            }
        }
        added
    }

    fn integral_relaxation(&mut self, callbacks: &mut dyn MasterCallbacks, rounds: &mut usize) -> Relaxed {
        let Some(values) = self.relax.as_ref().unwrap().integral_top() else {
            if *rounds > 0 && self.separate_fractional(callbacks) {
                *rounds -= 1;
                return Relaxed::Cut;
            }
            return Relaxed::Fractional;
        };
        let mut candidate = self.current.clone();
        for &(p, v) in &values {
            let vp = self.pairs[p];
            candidate.set_edge(vp.i, vp.j, v);
        }
        self.stats.candidates += 1;
        let response = callbacks.on_integer_candidate(&candidate, self.ub);
        let mut added = false;
        for cut in response.cuts {
            if self.add_constraint(cut).is_some() {
                self.stats.lazy_cuts += 1;
                added = true;
            }
        }
        if let Some(g) = response.incumbent {
            if self.try_incumbent(&g) {
                self.stats.injected_incumbents += 1;
            }
        }
        if added {
            self.out_of_time();
            return Relaxed::Cut;
        }
        let accepted = self.try_incumbent(&candidate);
        debug_assert!(accepted || self.ub.is_some());
        Relaxed::Accepted
    }

    /// Pair to branch on. With a relaxation: the unassigned pair of any
    /// violated constraint whose relaxation value leans furthest from its
    /// input value, ties to the smallest pair. Without one: the smallest
    /// unassigned pair of the violated constraint with the fewest unassigned
    /// pairs.
    fn branch_pair(&self) -> usize {
        let Some(relax) = self.relax.as_ref() else {
            let clause = *self
                .violated
                .iter()
                .min_by_key(|&&id| (self.clauses[id as usize].unassigned, id))
                .expect("violated constraint present");
            return self
                .unassigned_lits(clause)
                .min()
                .expect("bound rejects exhausted constraints");
        };
        let lean = |p: usize| -> f64 {
            let x = relax.top_value(p).unwrap_or(0.0);
            if self.input_value[p] { 1.0 - x } else { x }
        };
        let mut best: Option<(f64, usize)> = None;
        for &id in &self.violated {
            for p in self.unassigned_lits(id) {
                let l = lean(p);
                if best.is_none_or(|(bl, bp)| l > bl + 1e-9 || (l > bl - 1e-9 && p < bp)) {
                    best = Some((l, p));
                }
            }
        }
        best.expect("bound rejects exhausted constraints").1
    }

    /// Reliability branching over the fractional unassigned pairs: the
    /// score of a pair is the product of its estimated bound gains in both
    /// directions. Estimates come from pseudocosts once a direction has
    /// enough observations and from probing the child otherwise.
    fn reliable_pair(&mut self) -> Option<usize> {
        let relax = self.relax.as_ref()?;
        let base = relax.top_objective()?;
        let mut cands: Vec<(usize, f64)> = Vec::new();
        for p in 0..self.value.len() {
            if self.free[p] && !self.assigned[p] {
                let x = relax.top_value(p)?;
                if x > FRAC_EPS && x < 1.0 - FRAC_EPS {
                    cands.push((p, x));
                }
            }
        }
        if cands.is_empty() {
            return None;
        }
        let avg = |d: usize, pc: &[[(f64, u32); 2]]| -> f64 {
            let (s, c) = pc.iter().fold((0.0, 0u32), |(s, c), e| (s + e[d].0, c + e[d].1));
            if c == 0 { 1.0 } else { s / c as f64 }
        };
        let defaults = [avg(0, &self.pseudo), avg(1, &self.pseudo)];
        let estimate = |pc: &[[(f64, u32); 2]], p: usize, x: f64| -> [f64; 2] {
            let per = |d: usize| {
                let (s, c) = pc[p][d];
                if c == 0 { defaults[d] } else { s / c as f64 }
            };
            [per(0) * x, per(1) * (1.0 - x)]
        };
        let score = |g: [f64; 2]| g[0].max(SCORE_EPS) * g[1].max(SCORE_EPS);
        cands.sort_by(|a, b| {
            let sa = score(estimate(&self.pseudo, a.0, a.1));
            let sb = score(estimate(&self.pseudo, b.0, b.1));
            sb.partial_cmp(&sa).unwrap().then(a.0.cmp(&b.0))
        });
        let cutoff = self.ub.map(|u| u as f64 - 1.0 + 1e-6);
        let mut best: Option<(f64, usize)> = None;
        let mut stale = 0;
        let mut probes = 0;
        for &(p, x) in &cands {
            let reliable = self.pseudo[p].iter().all(|&(_, c)| c >= RELIABILITY);
            let gains = if reliable || probes >= MAX_PROBES {
                estimate(&self.pseudo, p, x)
            } else {
                probes += 1;
                let relax = self.relax.as_mut().unwrap();
                let mut g = [0.0; 2];
                for (d, v) in [(0, false), (1, true)] {
                    let child = relax.probe(&self.rows, (p, v));
                    g[d] = match child {
                        Some(c) if cutoff.is_none_or(|cut| c <= cut) => {
                            let gain = (c - base).max(0.0);
                            let frac = if v { 1.0 - x } else { x };
                            let e = &mut self.pseudo[p][d];
                            e.0 += gain / frac;
                            e.1 += 1;
                            gain
                        }
                        _ => PRUNED_GAIN,
                    };
                }
                g
            };
            let sc = score(gains);
            if best.is_none_or(|(bs, _)| sc > bs) {
                best = Some((sc, p));
                stale = 0;
            } else {
                stale += 1;
                if stale >= LOOKAHEAD && !reliable {
                    break;
                }
            }
        }
        best.map(|(_, p)| p)
    }

    /// Records the bound change of a child in the pseudocosts of its pair.
    fn record_gain(&mut self, child_objective: f64) {
        let Some(&Frame { branch: Some((p, v, x, parent)), .. }) = self.frames.last() else {
            return;
        };
        let frac = if v { 1.0 - x } else { x };
        if frac > FRAC_EPS {
            let e = &mut self.pseudo[p][v as usize];
            e.0 += (child_objective - parent).max(0.0) / frac;
            e.1 += 1;
        }
    }

    fn branch(&mut self, depth: usize, lb: usize, callbacks: &mut dyn MasterCallbacks) -> Flow {
        // Lean dives until the search finds its own incumbent.
        let diving = self.stats.incumbent_updates <= self.seeded_updates;
        let p = if self.options.branching == Branching::Reliability && !diving {
            self.reliable_pair()
        } else {
            None
        }
        .unwrap_or_else(|| self.branch_pair());
        let keep_value = self.value[p];
        // The child agreeing with the relaxation's rounding goes first; flip
        // first without a relaxation.
        let first = match self.relax.as_ref().and_then(|r| r.top_value(p)) {
            Some(x) => x > 0.5,
            None => !keep_value,
        };

        let branch = self.relax.as_ref().and_then(|r| {
            let x = r.top_value(p)?;
            Some((p, first, x, r.top_objective()?))
        });
        self.frames.push(Frame {
            lb,
            second_pending: true,
            branch,
        });
        self.assign(p, first);
        let flow = self.search(depth + 1, Some((p, first)), callbacks);
        self.unassign(p);
        if let Flow::Stop = flow {
            self.frames.pop();
            return Flow::Stop;
        }
        let frame = self.frames.last_mut().unwrap();
        frame.second_pending = false;
        frame.branch = frame.branch.map(|(p, v, x, o)| (p, !v, x, o));

        let flow = if self.ub.is_some_and(|ub| lb >= ub) {
            Flow::Continue
        } else {
            self.assign(p, !first);
            let flow = self.search(depth + 1, Some((p, !first)), callbacks);
            self.unassign(p);
            flow
        };
        self.frames.pop();
        flow
    }

    /// Best bound over the unexplored part of the tree at a time-out.
    fn open_lower_bound(&self) -> usize {
        let root = self.root_lb.unwrap_or(0);
        let pending = self
            .frames
            .iter()
            .filter(|f| f.second_pending)
            .map(|f| f.lb)
            .chain(self.frames.last().map(|f| f.lb))
            .min()
            .unwrap_or(root);
        let lb = root.max(pending);
        match self.ub {
            Some(ub) => lb.min(ub),
            None => lb,
        }
    }
}

/// Solves the master problem over `domains`, seeded with `constraints` and
/// an optional feasible `incumbent`.
pub fn solve(
    input: &Graph,
    domains: &VariableDomain,
    constraints: Vec<PatternConstraint>,
    incumbent: Option<Graph>,
    options: &MasterOptions,
    callbacks: &mut dyn MasterCallbacks,
) -> MasterResult {
    assert_eq!(input.n(), domains.n(), "domain and graph sizes differ");
    let mut solver = Solver::new(input, domains, options.clone());
    for c in constraints {
        solver.add_constraint(c);
    }
    if let Some(g) = incumbent {
        let accepted = solver.try_incumbent(&g);
        debug_assert!(accepted, "initial incumbent must satisfy domains and pool");
    }

    solver.seeded_updates = solver.stats.incumbent_updates;
    let flow = solver.search(0, None, callbacks);
    solver.stats.pool_size = solver.pool.len();
    let timed_out = matches!(flow, Flow::Stop) && solver.timed_out;
    if timed_out {
        let lower_bound = solver.open_lower_bound();
        return MasterResult {
            status: MasterStatus::TimeLimit,
            objective: solver.ub,
            assignment: solver.best,
            lower_bound,
            stats: solver.stats,
            pool: solver.pool,
        };
    }
    match solver.ub {
        Some(ub) => MasterResult {
            status: MasterStatus::Optimal,
            objective: Some(if options.first_feasible { 0 } else { ub }),
            assignment: solver.best,
            lower_bound: if options.first_feasible { 0 } else { ub },
            stats: solver.stats,
            pool: solver.pool,
        },
        None => MasterResult {
            status: MasterStatus::Infeasible,
            assignment: None,
            objective: None,
            lower_bound: solver.root_lb.unwrap_or(0),
            stats: solver.stats,
            pool: solver.pool,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_er, ErParams};
    use crate::holes::{find_odd_antiholes, find_odd_holes};

    fn c5_pattern() -> PatternConstraint {
        PatternConstraint::from_hole(&find_odd_holes(&Graph::cycle(5), None)[0])
    }

    fn solve_plain(g: &Graph, domains: &VariableDomain, pool: Vec<PatternConstraint>) -> MasterResult {
        solve(g, domains, pool, None, &MasterOptions::default(), &mut NoCallbacks)
    }

    #[test]
    fn empty_pool_keeps_input() {
        let g = Graph::cycle(5);
        let r = solve_plain(&g, &VariableDomain::all_free(5), vec![]);
        assert_eq!(r.status, MasterStatus::Optimal);
        assert_eq!(r.objective, Some(0));
        assert_eq!(r.assignment.unwrap(), g);
    }

    #[test]
    fn single_nogood_costs_one_flip() {
        let g = Graph::cycle(5);
        let r = solve_plain(&g, &VariableDomain::all_free(5), vec![c5_pattern()]);
        assert_eq!(r.status, MasterStatus::Optimal);
        assert_eq!(r.objective, Some(1));
        assert_eq!(r.lower_bound, 1);
        let out = r.assignment.unwrap();
        assert_eq!(out.hamming_distance(&g), 1);
        assert!(c5_pattern().is_satisfied_by(&out));
    }

    #[test]
    fn recognition_mode_is_infeasible() {
        let g = Graph::cycle(5);
        let domains = VariableDomain::sandwich(&g, &[]);
        let r = solve_plain(&g, &domains, vec![c5_pattern()]);
        assert_eq!(r.status, MasterStatus::Infeasible);
        assert!(r.assignment.is_none());
    }

    #[test]
    fn packing_examples() {
        let two = Graph::from_edges(
            10,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (5, 6), (6, 7), (7, 8), (8, 9), (9, 5)],
        );
        let pool: Vec<_> = find_odd_holes(&two, None).iter().map(PatternConstraint::from_hole).collect();
        assert_eq!(pool.len(), 2);
        let domains = VariableDomain::all_free(10);
        let empty = PartialAssignment::empty(10);
        assert_eq!(lower_bound_disjoint_packing(&two, &domains, &pool, &empty), 2);
        assert_eq!(lower_bound_disjoint_packing(&two, &domains, &[], &empty), 0);

        let mut partial = PartialAssignment::empty(10);
        partial.assign(VertexPair::new(0, 1), false);
        assert_eq!(lower_bound_disjoint_packing(&two, &domains, &[], &partial), 1);
        // flipping {0,1} satisfies the first pattern; the second stays violated
        assert_eq!(lower_bound_disjoint_packing(&two, &domains, &pool, &partial), 2);

        let shared = Graph::from_edges(
            8,
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 5), (5, 6), (6, 7), (7, 0)],
        );
        let pool: Vec<_> = find_odd_holes(&shared, None).iter().map(PatternConstraint::from_hole).collect();
        assert_eq!(pool.len(), 2);
        let domains = VariableDomain::all_free(8);
        assert_eq!(
            lower_bound_disjoint_packing(&shared, &domains, &pool, &PartialAssignment::empty(8)),
            1
        );
    }

    #[test]
    fn gap_formula() {
        assert_eq!(gap_pct(Some(10), 8), 20.0);
        assert_eq!(gap_pct(None, 3), 100.0);
        assert_eq!(gap_pct(Some(0), 0), 0.0);
    }

    /// Exhaustive minimum over all assignments of the free pairs.
    fn brute_force(g: &Graph, domains: &VariableDomain, pool: &[PatternConstraint]) -> Option<usize> {
        let free: Vec<VertexPair> = g.pairs().filter(|&vp| domains.get(vp) == PairDomain::Free).collect();
        assert!(free.len() <= 21);
        let base = domains.project(g);
        let mut best = None;
        for mask in 0u32..(1 << free.len()) {
            let cost = mask.count_ones() as usize;
            if best.is_some_and(|b| cost >= b) {
                continue;
            }
            let mut h = base.clone();
            for (k, &vp) in free.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    h.flip(vp);
                }
            }
            if pool.iter().all(|c| c.is_satisfied_by(&h)) {
                best = Some(cost);
            }
        }
        best
    }

    fn hole_pool(g: &Graph) -> Vec<PatternConstraint> {
        find_odd_holes(g, None)
            .iter()
            .chain(find_odd_antiholes(g, None).iter())
            .map(PatternConstraint::from_hole)
            .collect()
    }

    #[test]
    fn matches_brute_force_on_small_pools() {
        for seed in 0..40 {
            let g = generate_er(ErParams::new(7, 0.5, seed));
            // pools from holes of the graph and of a perturbed copy
            let mut other = generate_er(ErParams::new(7, 0.5, seed + 1000));
            other.flip(VertexPair::new(0, 1));
            let mut pool = hole_pool(&g);
            pool.extend(hole_pool(&other));
            let domains = VariableDomain::all_free(7);
            let r = solve_plain(&g, &domains, pool.clone());
            assert_eq!(r.objective, brute_force(&g, &domains, &pool), "seed {seed}");
            let out = r.assignment.unwrap();
            assert!(pool.iter().all(|c| c.is_satisfied_by(&out)));

            let domains = VariableDomain::completion(&g);
            let r = solve_plain(&g, &domains, pool.clone());
            let bf = brute_force(&g, &domains, &pool);
            assert_eq!(r.objective, bf, "completion seed {seed}");
            if bf.is_none() {
                assert_eq!(r.status, MasterStatus::Infeasible);
            }
        }
    }

    #[test]
    fn adding_constraints_never_helps() {
        for seed in 0..15 {
            let g = generate_er(ErParams::new(8, 0.5, seed));
            let pool = hole_pool(&g);
            let domains = VariableDomain::all_free(8);
            let mut previous = 0;
            for k in 0..=pool.len() {
                let r = solve_plain(&g, &domains, pool[..k].to_vec());
                let obj = r.objective.unwrap();
                assert!(obj >= previous);
                previous = obj;
            }
        }
    }

    #[test]
    fn deterministic_node_counts() {
        let g = generate_er(ErParams::new(9, 0.5, 3));
        let pool = hole_pool(&g);
        let domains = VariableDomain::all_free(9);
        let a = solve_plain(&g, &domains, pool.clone());
        let b = solve_plain(&g, &domains, pool);
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn incumbent_injection_keeps_optimum() {
        for seed in 0..10 {
            let g = generate_er(ErParams::new(8, 0.4, seed));
            let pool = hole_pool(&g);
            let domains = VariableDomain::all_free(8);
            let plain = solve_plain(&g, &domains, pool.clone());
            // the empty graph is perfect, so it satisfies every hole pattern
            let r = solve(&g, &domains, pool, Some(Graph::new(8)), &MasterOptions::default(), &mut NoCallbacks);
            assert_eq!(r.objective, plain.objective);
            assert_eq!(r.status, MasterStatus::Optimal);
        }
    }

    struct Lazy {
        calls: usize,
    }

    impl MasterCallbacks for Lazy {
        fn on_integer_candidate(&mut self, g: &Graph, _: Option<usize>) -> CandidateResponse {
            self.calls += 1;
            CandidateResponse {
                cuts: hole_pool(g),
                incumbent: None,
            }
        }
    }

    #[test]
    fn lazy_cuts_reach_perfect_graphs() {
        for seed in 0..10 {
            let g = generate_er(ErParams::new(8, 0.5, seed));
            let mut cb = Lazy { calls: 0 };
            let r = solve(&g, &VariableDomain::all_free(8), vec![], None, &MasterOptions::default(), &mut cb);
            assert_eq!(r.status, MasterStatus::Optimal);
            let out = r.assignment.unwrap();
            assert!(crate::holes::is_perfect(&out));
            assert!(cb.calls >= 1);
        }
    }

    #[test]
    fn zero_time_limit_reports_time_limit() {
        let g = generate_er(ErParams::new(12, 0.5, 1));
        let options = MasterOptions {
            time_limit: Some(Duration::ZERO),
            ..MasterOptions::default()
        };
        let r = solve(&g, &VariableDomain::all_free(12), hole_pool(&g), None, &options, &mut NoCallbacks);
        assert_eq!(r.status, MasterStatus::TimeLimit);
        assert!(r.objective.is_none());
    }
}
