//! Problem drivers: editing, completion, deletion and sandwich on top of the
//! nogood master solver, with lazy hole/antihole cuts and heuristic hooks.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::expectation::termination_threshold;
use crate::graph::{Graph, VertexPair};
use crate::heuristic::{run_heuristic, HeuristicMode};
use crate::holes::{find_odd_antiholes, find_odd_holes, find_structures_until, Hole, HoleKind};
use crate::master::{
    self, free_distance, gap_pct, CandidateResponse, MasterCallbacks, MasterOptions,
    MasterStatus, NodeView, PatternConstraint, VariableDomain,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("optional pair {0} is an edge of the input graph")]
    OptionalPairIsEdge(VertexPair),
    #[error("optional pair {pair} out of range for {n} vertices")]
    OptionalPairOutOfRange { pair: VertexPair, n: usize },
    #[error("optional pairs are only meaningful for the sandwich problem")]
    UnexpectedOptionalPairs,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyParseError {
    #[error("unknown strategy {0:?}; expected base, hc, hr, hcr or addall")]
    UnknownStrategy(String),
    #[error("bad termination {0:?}; expected one, all or a fraction in (0, 1)")]
    BadTermination(String),
    #[error("unknown problem {0:?}; expected edit, complete, delete or sandwich")]
    UnknownProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Edit,
    Complete,
    Delete,
    Sandwich,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Edit => "edit",
            ProblemKind::Complete => "complete",
            ProblemKind::Delete => "delete",
            ProblemKind::Sandwich => "sandwich",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edit" => Ok(ProblemKind::Edit),
            "complete" => Ok(ProblemKind::Complete),
            "delete" => Ok(ProblemKind::Delete),
            "sandwich" => Ok(ProblemKind::Sandwich),
            _ => Err(StrategyParseError::UnknownProblem(s.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: ProblemKind,
    pub input: Graph,
    pub optional_pairs: Vec<VertexPair>,
}

impl Instance {
    pub fn new(kind: ProblemKind, input: Graph) -> Self {
        Instance {
            kind,
            input,
            optional_pairs: Vec::new(),
        }
    }

    pub fn sandwich(input: Graph, optional_pairs: Vec<VertexPair>) -> Self {
        Instance {
            kind: ProblemKind::Sandwich,
            input,
            optional_pairs,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.kind != ProblemKind::Sandwich && !self.optional_pairs.is_empty() {
            return Err(SolveError::UnexpectedOptionalPairs);
        }
        validate_optional(&self.input, &self.optional_pairs)
    }
}

fn validate_optional(g: &Graph, optional: &[VertexPair]) -> Result<(), SolveError> {
    for &vp in optional {
        if vp.j >= g.n() {
            return Err(SolveError::OptionalPairOutOfRange { pair: vp, n: g.n() });
        }
        if g.has_pair(vp) {
            return Err(SolveError::OptionalPairIsEdge(vp));
        }
    }
    Ok(())
}

/// How many holes (and, separately, antiholes) each candidate check collects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    One,
    /// Fraction of the expected count in `G(n, density)`.
    Percentage(f64),
    All,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::One => f.write_str("one"),
            Termination::All => f.write_str("all"),
            Termination::Percentage(x) => write!(f, "{x}"),
        }
    }
}

impl FromStr for Termination {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" => Ok(Termination::One),
            "all" => Ok(Termination::All),
            _ => match s.parse::<f64>() {
                Ok(x) if x > 0.0 && x < 1.0 => Ok(Termination::Percentage(x)),
                _ => Err(StrategyParseError::BadTermination(s.to_string())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub termination: Termination,
    pub heuristic_on_candidates: bool,
    pub heuristic_on_nodes: bool,
    pub node_interval: u64,
    pub add_all_initial: bool,
    pub time_limit: Option<Duration>,
    /// Recorded in result rows. The solver itself draws no random numbers.
    pub seed: u64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            termination: Termination::All,
            heuristic_on_candidates: false,
            heuristic_on_nodes: false,
            node_interval: 10,
            add_all_initial: false,
            time_limit: None,
            seed: 0,
        }
    }
}

/// The five named strategy columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedStrategy {
    Base,
    HeurCandidates,
    HeurNodes,
    HeurBoth,
    AddAll,
}

impl NamedStrategy {
    pub const ALL: [NamedStrategy; 5] = [
        NamedStrategy::Base,
        NamedStrategy::HeurCandidates,
        NamedStrategy::HeurNodes,
        NamedStrategy::HeurBoth,
        NamedStrategy::AddAll,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NamedStrategy::Base => "base",
            NamedStrategy::HeurCandidates => "hc",
            NamedStrategy::HeurNodes => "hr",
            NamedStrategy::HeurBoth => "hcr",
            NamedStrategy::AddAll => "addall",
        }
    }

    pub fn config(self) -> StrategyConfig {
        let (c, r, a) = match self {
            NamedStrategy::Base => (false, false, false),
            NamedStrategy::HeurCandidates => (true, false, false),
            NamedStrategy::HeurNodes => (false, true, false),
            NamedStrategy::HeurBoth => (true, true, false),
            NamedStrategy::AddAll => (true, true, true),
        };
        StrategyConfig {
            heuristic_on_candidates: c,
            heuristic_on_nodes: r,
            add_all_initial: a,
            ..StrategyConfig::default()
        }
    }
}

impl FromStr for NamedStrategy {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamedStrategy::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| StrategyParseError::UnknownStrategy(s.to_string()))
    }
}

impl StrategyConfig {
    /// Parses `<name>[:<termination>]`, e.g. `hcr`, `base:one`, `addall:0.25`.
    pub fn parse(s: &str) -> Result<Self, StrategyParseError> {
        let (name, term) = match s.split_once(':') {
            Some((n, t)) => (n, Some(t)),
            None => (s, None),
        };
        let mut cfg = name.parse::<NamedStrategy>()?.config();
        if let Some(t) = term {
            cfg.termination = t.parse()?;
        }
        Ok(cfg)
    }

    /// Canonical label used in result rows.
    pub fn label(&self) -> String {
        let name = match (
            self.heuristic_on_candidates,
            self.heuristic_on_nodes,
            self.add_all_initial,
        ) {
            (false, false, false) => "base".to_string(),
            (true, false, false) => "hc".to_string(),
            (false, true, false) => "hr".to_string(),
            (true, true, false) => "hcr".to_string(),
            (true, true, true) => "addall".to_string(),
            (c, r, a) => {
                let mut s = String::from("custom");
                for (on, tag) in [(c, "-hc"), (r, "-hr"), (a, "-addall")] {
                    if on {
                        s.push_str(tag);
                    }
                }
                s
            }
        };
        let name = if self.heuristic_on_nodes && self.node_interval != 10 {
            format!("{name}@{}", self.node_interval)
        } else {
            name
        };
        match self.termination {
            Termination::All => name,
            t => format!("{name}:{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    SandwichFeasible,
    SandwichInfeasiblePrecheck,
    SandwichInfeasibleProven,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::SandwichFeasible => "feasible",
            SolveStatus::SandwichInfeasiblePrecheck => "infeasible_precheck",
            SolveStatus::SandwichInfeasibleProven => "infeasible_proven",
            SolveStatus::TimeLimit => "timelimit",
        }
    }

    /// Whether the run ended with a definite answer.
    pub fn is_definite(self) -> bool {
        self != SolveStatus::TimeLimit
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub kind: ProblemKind,
    pub status: SolveStatus,
    pub output: Option<Graph>,
    pub objective: Option<usize>,
    pub lower_bound: usize,
    pub gap_pct: f64,
    /// Integer candidates checked for holes.
    pub iterations: u64,
    pub hole_cuts: u64,
    pub antihole_cuts: u64,
    pub heuristic_improvements: u64,
    pub nodes: u64,
    pub precheck_time: Duration,
    pub total_time: Duration,
    pub precheck_witness: Option<Hole>,
}

pub const RESULT_CSV_HEADER: &str = "problem,n,p,seed,strategy,status,objective,lower_bound,gap_pct,time_s,precheck_time_s,iterations,hole_cuts,antihole_cuts,heuristic_improvements";

/// Identifies the instance in a result row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMeta {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl SolveResult {
    /// One result row. With `omit_times` both time columns are written as 0
    /// so rows are byte-identical across runs.
    pub fn csv_row(&self, meta: &RowMeta, strategy: &str, omit_times: bool) -> String {
        let time = |d: Duration| {
            if omit_times {
                "0".to_string()
            } else {
                format!("{:.6}", d.as_secs_f64())
            }
        };
        format!(
            "{},{},{},{},{},{},{},{},{:.4},{},{},{},{},{},{}",
            self.kind,
            meta.n,
            meta.p,
            meta.seed,
            strategy,
            self.status,
            self.objective.map(|o| o.to_string()).unwrap_or_default(),
            self.lower_bound,
            self.gap_pct,
            time(self.total_time),
            time(self.precheck_time),
            self.iterations,
            self.hole_cuts,
            self.antihole_cuts,
            self.heuristic_improvements,
        )
    }
}

/// Nodes between neighbourhood searches in the master.
const NEIGHBORHOOD_INTERVAL: u64 = 50;

/// Lazy-cut and heuristic callbacks for one run.
struct CutCallbacks<'a> {
    input: &'a Graph,
    domains: &'a VariableDomain,
    limits: (Option<usize>, Option<usize>),
    deadline: Option<Instant>,
    heuristic_mode: HeuristicMode,
    on_candidates: bool,
    node_interval: Option<u64>,
    cut: HashSet<Hole>,
    iterations: u64,
    hole_cuts: u64,
    antihole_cuts: u64,
    heuristic_improvements: u64,
}

impl CutCallbacks<'_> {
    /// Runs the heuristic from `start` and returns its output when it beats
    /// the incumbent.
    fn improve(&mut self, start: &Graph, incumbent: Option<usize>) -> Option<Graph> {
        let run = run_heuristic(start, self.heuristic_mode);
        if !run.is_perfect() {
            return None;
        }
        let g = run.graph();
        if !self.domains.admits(g) {
            return None;
        }
        let obj = free_distance(self.input, self.domains, g);
        if incumbent.is_none_or(|ub| obj < ub) {
            self.heuristic_improvements += 1;
            Some(g.clone())
        } else {
            None
        }
    }

    /// Constraints for the structures of `g` not cut before.
    fn cuts_in(&mut self, g: &Graph) -> Vec<PatternConstraint> {
        let (holes, antiholes) = find_structures_until(g, self.limits, self.deadline);
        let mut cuts = Vec::with_capacity(holes.len() + antiholes.len());
        for h in holes.into_iter().chain(antiholes) {
            if self.cut.insert(h.clone()) {
                match h.kind() {
                    HoleKind::Hole => self.hole_cuts += 1,
                    HoleKind::Antihole => self.antihole_cuts += 1,
                }
                cuts.push(PatternConstraint::from_hole(&h));
            }
        }
        cuts
    }
}

impl MasterCallbacks for CutCallbacks<'_> {
    fn on_integer_candidate(
        &mut self,
        candidate: &Graph,
        incumbent_objective: Option<usize>,
    ) -> CandidateResponse {
        self.iterations += 1;
        let cuts = self.cuts_in(candidate);
        if cuts.is_empty() {
            return CandidateResponse::default();
        }
        let incumbent = if self.on_candidates {
            self.improve(candidate, incumbent_objective)
        } else {
            None
        };
        CandidateResponse { cuts, incumbent }
    }

    fn on_fractional(&mut self, rounded: &Graph) -> Vec<PatternConstraint> {
        self.cuts_in(rounded)
    }

    fn on_node(&mut self, node: &NodeView<'_>) -> Option<Graph> {
        let interval = self.node_interval?;
        if node.index % interval != 0 {
            return None;
        }
        self.improve(node.relaxation.unwrap_or(node.graph), node.incumbent_objective)
    }
}

fn thresholds(g: &Graph, termination: Termination) -> (Option<usize>, Option<usize>) {
    match termination {
        Termination::One => (Some(1), Some(1)),
        Termination::All => (None, None),
        Termination::Percentage(f) => {
            let (h, a) = termination_threshold(g.n(), g.density(), f)
                .expect("percentage validated at construction");
            (Some(h), Some(a))
        }
    }
}

fn deadline(cfg: &StrategyConfig, start: Instant) -> Option<Instant> {
    cfg.time_limit.map(|t| start + t)
}

/// Structures seeded up front by the add-all strategy, cut short at the
/// time limit.
fn initial_pool(g: &Graph, cfg: &StrategyConfig, start: Instant) -> Vec<Hole> {
    if !cfg.add_all_initial {
        return Vec::new();
    }
    let (mut holes, antiholes) = find_structures_until(g, (None, None), deadline(cfg, start));
    holes.extend(antiholes);
    holes
}

fn all_structures(g: &Graph) -> Vec<Hole> {
    let mut all = find_odd_holes(g, None);
    all.extend(find_odd_antiholes(g, None));
    all
}

struct RunSetup<'a> {
    kind: ProblemKind,
    input: &'a Graph,
    domains: VariableDomain,
    seed_pool: Vec<Hole>,
    incumbent: Option<Graph>,
    heuristic_mode: HeuristicMode,
    first_feasible: bool,
}

fn run(setup: RunSetup<'_>, cfg: &StrategyConfig, start: Instant) -> SolveResult {
    let RunSetup {
        kind,
        input,
        domains,
        seed_pool,
        incumbent,
        heuristic_mode,
        first_feasible,
    } = setup;
    let heuristics = !first_feasible;
    let mut callbacks = CutCallbacks {
        input,
        domains: &domains,
        limits: thresholds(input, cfg.termination),
        deadline: deadline(cfg, start),
        heuristic_mode,
        on_candidates: heuristics && cfg.heuristic_on_candidates,
        node_interval: (heuristics && cfg.heuristic_on_nodes).then_some(cfg.node_interval.max(1)),
        cut: seed_pool.iter().cloned().collect(),
        iterations: 0,
        hole_cuts: 0,
        antihole_cuts: 0,
        heuristic_improvements: 0,
    };
    let constraints = seed_pool.iter().map(PatternConstraint::from_hole).collect();
    let options = MasterOptions {
        time_limit: cfg.time_limit.map(|t| t.saturating_sub(start.elapsed())),
        first_feasible,
        node_limit: None,
        neighborhood_interval: (!first_feasible).then_some(NEIGHBORHOOD_INTERVAL),
        ..MasterOptions::default()
    };
    let res = master::solve(input, &domains, constraints, incumbent, &options, &mut callbacks);
    let status = match (res.status, first_feasible) {
        (MasterStatus::Optimal, false) => SolveStatus::Optimal,
        (MasterStatus::Optimal, true) => SolveStatus::SandwichFeasible,
        (MasterStatus::Infeasible, true) => SolveStatus::SandwichInfeasibleProven,
        (MasterStatus::Infeasible, false) => {
            unreachable!("the complete graph is always a feasible completion")
        }
        (MasterStatus::TimeLimit, _) => SolveStatus::TimeLimit,
    };
    let gap = match status {
        SolveStatus::TimeLimit => gap_pct(res.objective, res.lower_bound),
        _ => 0.0,
    };
    SolveResult {
        kind,
        status,
        output: res.assignment,
        objective: res.objective,
        lower_bound: res.lower_bound,
        gap_pct: gap,
        iterations: callbacks.iterations,
        hole_cuts: callbacks.hole_cuts,
        antihole_cuts: callbacks.antihole_cuts,
        heuristic_improvements: callbacks.heuristic_improvements,
        nodes: res.stats.nodes,
        precheck_time: Duration::ZERO,
        total_time: start.elapsed(),
        precheck_witness: None,
    }
}

/// Minimum number of pair flips making `g` perfect.
pub fn solve_edit(g: &Graph, cfg: &StrategyConfig) -> SolveResult {
    let start = Instant::now();
    let n = g.n();
    // Both trivial graphs are perfect; the nearer one seeds the upper bound.
    let trivial = if 2 * g.edge_count() <= crate::graph::pair_count(n) {
        Graph::new(n)
    } else {
        Graph::complete(n)
    };
    let setup = RunSetup {
        kind: ProblemKind::Edit,
        input: g,
        domains: VariableDomain::all_free(n),
        seed_pool: initial_pool(g, cfg, start),
        incumbent: Some(trivial),
        heuristic_mode: HeuristicMode::EditBothWays,
        first_feasible: false,
    };
    run(setup, cfg, start)
}

/// Minimum number of edge additions making `g` perfect.
pub fn solve_complete(g: &Graph, cfg: &StrategyConfig) -> SolveResult {
    let start = Instant::now();
    let setup = RunSetup {
        kind: ProblemKind::Complete,
        input: g,
        domains: VariableDomain::completion(g),
        seed_pool: initial_pool(g, cfg, start),
        incumbent: Some(Graph::complete(g.n())),
        heuristic_mode: HeuristicMode::AdditionsOnly,
        first_feasible: false,
    };
    run(setup, cfg, start)
}

/// Minimum number of edge removals making `g` perfect, solved as a
/// completion of the complement.
pub fn solve_delete(g: &Graph, cfg: &StrategyConfig) -> SolveResult {
    let mut res = solve_complete(&g.complement(), cfg);
    res.kind = ProblemKind::Delete;
    res.output = res.output.map(|h| h.complement());
    res
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrecheckOutcome {
    Pass,
    Infeasible(Hole),
}

/// Looks for a hole or antihole none of whose internal non-edges is
/// optional; such a structure survives every admissible sandwich graph.
pub fn precheck(g: &Graph, optional: &[VertexPair]) -> PrecheckOutcome {
    precheck_over(&all_structures(g), optional)
}

fn precheck_over(structures: &[Hole], optional: &[VertexPair]) -> PrecheckOutcome {
    let optional: HashSet<VertexPair> = optional.iter().copied().collect();
    structures
        .iter()
        .find(|h| !h.internal_non_edges().iter().any(|vp| optional.contains(vp)))
        .map_or(PrecheckOutcome::Pass, |h| PrecheckOutcome::Infeasible(h.clone()))
}

/// Decides whether some perfect graph lies between `g1` and `g1` plus the
/// optional pairs. Heuristic settings in `cfg` are ignored.
pub fn solve_sandwich(
    g1: &Graph,
    optional: &[VertexPair],
    cfg: &StrategyConfig,
) -> Result<SolveResult, SolveError> {
    validate_optional(g1, optional)?;
    let start = Instant::now();
    let structures = all_structures(g1);
    let verdict = precheck_over(&structures, optional);
    let precheck_time = start.elapsed();
    if let PrecheckOutcome::Infeasible(witness) = verdict {
        return Ok(SolveResult {
            kind: ProblemKind::Sandwich,
            status: SolveStatus::SandwichInfeasiblePrecheck,
            output: None,
            objective: None,
            lower_bound: 0,
            gap_pct: 0.0,
            iterations: 0,
            hole_cuts: 0,
            antihole_cuts: 0,
            heuristic_improvements: 0,
            nodes: 0,
            precheck_time,
            total_time: start.elapsed(),
            precheck_witness: Some(witness),
        });
    }
    let setup = RunSetup {
        kind: ProblemKind::Sandwich,
        input: g1,
        domains: VariableDomain::sandwich(g1, optional),
        seed_pool: structures,
        incumbent: None,
        heuristic_mode: HeuristicMode::AdditionsOnly,
        first_feasible: true,
    };
    let mut res = run(setup, cfg, start);
    res.precheck_time = precheck_time;
    if res.status == SolveStatus::SandwichFeasible {
        res.objective = Some(0);
    }
    Ok(res)
}

/// Dispatches on the instance kind.
pub fn solve_instance(instance: &Instance, cfg: &StrategyConfig) -> Result<SolveResult, SolveError> {
    instance.validate()?;
    Ok(match instance.kind {
        ProblemKind::Edit => solve_edit(&instance.input, cfg),
        ProblemKind::Complete => solve_complete(&instance.input, cfg),
        ProblemKind::Delete => solve_delete(&instance.input, cfg),
        ProblemKind::Sandwich => solve_sandwich(&instance.input, &instance.optional_pairs, cfg)?,
    })
}
