//! Linear relaxation of the master problem, used as a node bound.
//!
//! Each node owns a copy of its parent's relaxation with one more variable
//! fixed, so backtracking is a pop. Only rows violated by some solution
//! along the path are carried; the rest are checked against each solution
//! and added when violated, so the bound equals that over all rows.

use std::time::Instant;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};

/// One constraint row: `Σ coeff·x ≥ rhs` over free pair indices.
pub(crate) struct Row {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    /// Row of a nogood whose literals are `(pair, required value)`: at least
    /// one pair must differ from its required value. Empty rows are skipped
    /// by the relaxation; the search detects them directly.
    pub fn nogood(lits: &[(u32, bool)]) -> Row {
        let mut rhs = 1.0;
        let terms = lits
            .iter()
            .map(|&(p, req)| {
                if req {
                    rhs -= 1.0;
                    (p as usize, -1.0)
                } else {
                    (p as usize, 1.0)
                }
            })
            .collect();
        Row { terms, rhs }
    }
}

#[derive(Clone)]
pub(crate) struct NodeLp {
    solution: Solution,
    /// Rows in the relaxation, by index into the row list.
    included: Vec<bool>,
    /// Variables fixed along the path.
    fixes: Vec<(usize, bool)>,
}

pub(crate) struct Relaxation {
    problem: Problem,
    vars: Vec<Option<Variable>>,
    offset: f64,
    /// One entry per bounded node on the current path; `None` below a
    /// numerical failure.
    stack: Vec<Option<NodeLp>>,
    deadline: Option<Instant>,
}

const EPS: f64 = 1e-6;

enum Step {
    Solved(Solution),
    Infeasible,
    Failed,
}

fn step(res: Result<SolveOutcome, microlp::Error>) -> Step {
    match res {
        Ok(SolveOutcome::Solution(s)) => Step::Solved(s),
        Err(microlp::Error::Infeasible) => Step::Infeasible,
        // No limits are configured, so interruption means trouble as well.
        Ok(SolveOutcome::Interrupted(_)) | Err(_) => Step::Failed,
    }
}

/// Result of bounding one node.
pub(crate) enum LpBound {
    Infeasible,
    Bound(usize),
    /// Numerical failure; no bound available.
    Unknown,
}

impl Relaxation {
    /// `free[p]` marks the variables; `input_value[p]` orients the objective
    /// (cost 1 for differing from the input).
    /// Past `deadline` row completion gives up and reports no bound.
    pub fn new(free: &[bool], input_value: &[bool], deadline: Option<Instant>) -> Self {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let mut offset = 0.0;
        let vars = free
            .iter()
            .zip(input_value)
            .map(|(&f, &inp)| {
                f.then(|| {
                    if inp {
                        offset += 1.0;
                    }
                    problem.add_var(if inp { -1.0 } else { 1.0 }, (0.0, 1.0))
                })
            })
            .collect();
        Relaxation {
            problem,
            vars,
            offset,
            stack: Vec::new(),
            deadline,
        }
    }

    fn expr(&self, row: &Row) -> LinearExpr {
        row.terms
            .iter()
            .map(|&(p, c)| (self.vars[p].expect("row over free pairs"), c))
            .collect()
    }

    /// Rows outside the relaxation that `solution` violates.
    fn violated(&self, rows: &[Row], solution: &Solution, included: &[bool]) -> Vec<usize> {
        rows.iter()
            .enumerate()
            .filter(|&(r, row)| {
                !row.terms.is_empty() && !included.get(r).copied().unwrap_or(false) && {
                    let lhs: f64 = row
                        .terms
                        .iter()
                        .map(|&(p, c)| c * solution.var_value(self.vars[p].unwrap()))
                        .sum();
                    lhs < row.rhs - EPS
                }
            })
            .map(|(r, _)| r)
            .collect()
    }

    /// Adds violated rows until the solution satisfies every row, so the
    /// value equals that of the relaxation over all rows.
    fn complete(&self, rows: &[Row], node: NodeLp) -> Result<NodeLp, LpBound> {
        let NodeLp { mut solution, mut included, fixes } = node;
        included.resize(rows.len(), false);
        loop {
            let missing = self.violated(rows, &solution, &included);
            if missing.is_empty() {
                return Ok(NodeLp { solution, included, fixes });
            }
            for r in missing {
                if self.deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err(LpBound::Unknown);
                }
                included[r] = true;
                match step(solution.add_constraint(self.expr(&rows[r]), ComparisonOp::Ge, rows[r].rhs)) {
                    Step::Solved(s) => solution = s,
                    Step::Infeasible => return self.confirm_infeasible(rows, included, fixes),
                    Step::Failed => return Err(LpBound::Unknown),
                }
            }
        }
    }

    /// Warm-started solves occasionally report infeasibility wrongly, so
    /// the node is rebuilt and solved from scratch before it is discarded.
    fn confirm_infeasible(&self, rows: &[Row], included: Vec<bool>, fixes: Vec<(usize, bool)>) -> Result<NodeLp, LpBound> {
        let mut problem = self.problem.clone();
        let mut fixed = vec![None; self.vars.len()];
        for &(p, v) in &fixes {
            fixed[p] = Some(v);
        }
        for (r, row) in rows.iter().enumerate() {
            if included.get(r).copied().unwrap_or(false) {
                // Fixed variables fold into the right-hand side.
                let mut rhs = row.rhs;
                let mut expr = LinearExpr::empty();
                for &(p, c) in &row.terms {
                    match fixed[p] {
                        Some(v) => rhs -= if v { c } else { 0.0 },
                        None => expr.add(self.vars[p].unwrap(), c),
                    }
                }
                problem.add_constraint(expr, ComparisonOp::Ge, rhs);
            }
        }
        for &(p, v) in &fixes {
            let x = if v { 1.0 } else { 0.0 };
            problem.add_constraint([(self.vars[p].unwrap(), 1.0)], ComparisonOp::Eq, x);
        }
        match step(problem.solve()) {
            Step::Solved(solution) => self.complete(rows, NodeLp { solution, included, fixes }),
            Step::Infeasible => Err(LpBound::Infeasible),
            Step::Failed => Err(LpBound::Unknown),
        }
    }

    fn push(&mut self, result: Result<NodeLp, LpBound>) -> LpBound {
        match result {
            Ok(node) => {
                let value = self.offset + node.solution.objective();
                self.stack.push(Some(node));
                LpBound::Bound((value - EPS).ceil().max(0.0) as usize)
            }
            Err(LpBound::Infeasible) => LpBound::Infeasible,
            Err(other) => {
                self.stack.push(None);
                other
            }
        }
    }

    /// Bounds the child of the current top node obtained by fixing
    /// `fix = (pair, value)`, or the root when the stack is empty. Pushes an
    /// entry unless the node is infeasible; the caller releases it with
    /// [`Relaxation::pop`].
    pub fn bound(&mut self, rows: &[Row], fix: Option<(usize, bool)>) -> LpBound {
        let start = match self.stack.last() {
            Some(Some(parent)) => parent.clone(),
            Some(None) => return self.push(Err(LpBound::Unknown)),
            None => match step(self.problem.solve()) {
                Step::Solved(solution) => NodeLp { solution, included: Vec::new(), fixes: Vec::new() },
                Step::Infeasible => return LpBound::Infeasible,
                Step::Failed => return self.push(Err(LpBound::Unknown)),
            },
        };
        let NodeLp { mut solution, included, mut fixes } = start;
        if let Some((p, v)) = fix {
            fixes.push((p, v));
            let var = self.vars[p].expect("branching on a free pair");
            match step(solution.fix_var(var, if v { 1.0 } else { 0.0 })) {
                Step::Solved(s) => solution = s,
                Step::Infeasible => {
                    let result = self.confirm_infeasible(rows, included, fixes);
                    if let Err(LpBound::Infeasible) = result {
                        return LpBound::Infeasible;
                    }
                    return self.push(result);
                }
                Step::Failed => return self.push(Err(LpBound::Unknown)),
            }
        }
        let result = self.complete(rows, NodeLp { solution, included, fixes });
        self.push(result)
    }

    /// Re-solves the top node against rows added since it was bounded. On
    /// infeasibility the top entry is removed.
    pub fn refresh(&mut self, rows: &[Row]) -> LpBound {
        let Some(Some(top)) = self.stack.pop() else {
            return self.push(Err(LpBound::Unknown));
        };
        let result = self.complete(rows, top);
        self.push(result)
    }
    /// The top node's solution rounded to 0/1 per pair, if it is integral.
    pub fn integral_top(&self) -> Option<Vec<(usize, bool)>> {
        let top = self.stack.last()?.as_ref()?;
        let mut out = Vec::new();
        for (p, var) in self.vars.iter().enumerate() {
            if let Some(v) = var {
                let x = top.solution.var_value(*v);
                if x > EPS && x < 1.0 - EPS {
                    return None;
                }
                out.push((p, x > 0.5));
            }
        }
        Some(out)
    }

    /// Objective value of the top node, in flips.
    pub fn top_objective(&self) -> Option<f64> {
        let top = self.stack.last()?.as_ref()?;
        Some(self.offset + top.solution.objective())
    }

    /// Objective of the child fixing `fix`, without keeping it; `None` if
    /// the child is infeasible.
    pub fn probe(&mut self, rows: &[Row], fix: (usize, bool)) -> Option<f64> {
        let parent = self.top_objective();
        match self.bound(rows, Some(fix)) {
            LpBound::Infeasible => None,
            _ => {
                let v = self.top_objective().or(parent);
                self.pop();
                v
            }
        }
    }

    /// Relaxation value of pair `p` at the top node.
    pub fn top_value(&self, p: usize) -> Option<f64> {
        let top = self.stack.last()?.as_ref()?;
        Some(top.solution.var_value(self.vars[p]?))
    }

    pub fn pop(&mut self) {
        self.stack.pop();
    }
}
