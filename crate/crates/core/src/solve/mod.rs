//! Inference over a [`GroundProblem`]: satisfiability, model expansion,
//! complete propagation, optimization, explanations and relevance.
//!
//! Every call owns its search state, so one problem can serve many calls in
//! parallel. The input structure's user assignments are the assumptions an
//! explanation may cite; given assignments not already substituted during
//! grounding are always in force. Assignments with origin `propagated` are
//! derived facts and ignored as input.

mod engine;
mod explain;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::{CellId, CellKind, GFormula, GTerm, GroundError, GroundProblem, NumOp};
use crate::linear::{self, Constraint, LinExpr, Rel};
use crate::model::{Assignment, Bound, Interval, Key, Origin, PartialStructure, Restriction, Term, Value};
use crate::rational::Rat;

use engine::{interval_formula, Branch, Engine, Flow, State, Visitor};
pub use explain::{
    explain_inconsistency, explain_value, relevance, relevance_of, relevance_with, Explanation, Law, Relevance, Target,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub timeout: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { timeout: Some(Duration::from_secs(30)) }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { timeout: None }
    }

    pub fn millis(ms: u64) -> Self {
        Budget { timeout: Some(Duration::from_millis(ms)) }
    }
}

/// Wall-clock limit of one call. Clocks are unavailable on bare wasm, where
/// the limit is not enforced.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Deadline {
    #[cfg(not(target_arch = "wasm32"))]
    at: Option<std::time::Instant>,
}

impl Deadline {
    #[allow(unused_variables)]
    pub(crate) fn new(budget: &Budget) -> Self {
        Deadline {
            #[cfg(not(target_arch = "wasm32"))]
            at: budget.timeout.map(|t| std::time::Instant::now() + t),
        }
    }

    pub(crate) fn expired(&self) -> bool {
        #[cfg(not(target_arch = "wasm32"))]
        {
            matches!(self.at, Some(at) if std::time::Instant::now() >= at)
        }
        #[cfg(target_arch = "wasm32")]
        {
            false
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("time budget exhausted")]
    Timeout,
    #[error("no cell `{0}` in the problem")]
    UnknownKey(Key),
    #[error("`{0}` is not a consequence of the current structure")]
    NotAConsequence(String),
    #[error("the structure is consistent; there is nothing to explain")]
    Consistent,
    #[error("the structure is inconsistent")]
    Inconsistent,
    #[error("objective is not a numeric term: {0}")]
    InvalidGoal(String),
    #[error("objective is not linear once the finite choices are fixed")]
    NonLinearObjective,
}

impl From<GroundError> for SolveError {
    fn from(e: GroundError) -> Self {
        SolveError::InvalidGoal(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    /// A total structure extending the input.
    Sat(PartialStructure),
    Unsat,
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Consistent,
    Inconsistent,
}

/// What remains possible for one cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Finite(Vec<Value>),
    Numeric(Interval),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationResult {
    pub status: Status,
    /// Cells narrowed to one value, excluding those the user set.
    pub consequences: Vec<Assignment>,
    /// Declared candidates no model uses, for cells the user did not set.
    pub eliminated: BTreeMap<Key, Vec<Value>>,
    /// Feasible ranges narrower than the declared type.
    pub numeric_bounds: BTreeMap<Key, Interval>,
    /// Remaining candidates of every cell; empty when inconsistent.
    pub domains: BTreeMap<Key, Domain>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimizationGoal {
    pub term: Term,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OptimizeResult {
    Optimal {
        model: PartialStructure,
        value: Rat,
    },
    Unsat,
    /// No finite optimum is attained.
    Unbounded,
}

/// Input structure split into permanent facts and retractable assumptions.
pub(crate) struct Prepared {
    pub always: Vec<GFormula>,
    /// Index into the input structure, and the formula it stands for.
    pub user: Vec<(usize, GFormula)>,
    pub user_cells: Vec<CellId>,
}

impl Prepared {
    pub(crate) fn new(gp: &GroundProblem, st: &PartialStructure) -> Result<Self, SolveError> {
        let mut always: Vec<GFormula> = gp.given.iter().map(|(c, r)| restriction_formula(gp, *c, r)).collect();
        let mut user = Vec::new();
        let mut user_cells = Vec::new();
        for (i, a) in st.iter().enumerate() {
            let c = gp.cell(&a.key).ok_or_else(|| SolveError::UnknownKey(a.key.clone()))?;
            let f = restriction_formula(gp, c, &a.value);
            match a.origin {
                Origin::User => {
                    user.push((i, f));
                    if matches!(a.value, Restriction::Exact(_)) {
                        user_cells.push(c);
                    }
                }
                Origin::Given => always.push(f),
                Origin::Propagated => {}
            }
        }
        Ok(Prepared { always, user, user_cells })
    }

    pub(crate) fn all(&self) -> Vec<GFormula> {
        let mut v = self.always.clone();
        v.extend(self.user.iter().map(|(_, f)| f.clone()));
        v
    }
}

/// Formula stating that cell `c` satisfies `r`.
pub(crate) fn restriction_formula(gp: &GroundProblem, c: CellId, r: &Restriction) -> GFormula {
    let cell = &gp.cells[c];
    if let Some(fixed) = &cell.fixed {
        let ok = match r {
            Restriction::Exact(v) => v == fixed,
            Restriction::Within(iv) => fixed.as_num().is_some_and(|x| iv.contains(x)),
        };
        return GFormula::Const(ok);
    }
    match (r, &cell.kind) {
        (Restriction::Exact(v), CellKind::Finite(_)) => {
            match gp.value_id(v).filter(|&id| gp.position(c, id).is_some()) {
                Some(id) => GFormula::SymEq(GTerm::Cell(c), GTerm::Val(id)),
                None => GFormula::Const(false),
            }
        }
        (Restriction::Exact(Value::Num(x)), CellKind::Numeric { .. }) => {
            GFormula::NumCmp(NumOp::Eq, GTerm::Cell(c), GTerm::Num(x.clone()))
        }
        (Restriction::Exact(_), CellKind::Numeric { .. }) => GFormula::Const(false),
        (Restriction::Within(iv), CellKind::Numeric { .. }) => interval_formula(c, iv),
        (Restriction::Within(iv), CellKind::Finite(_)) => {
            let numeric = gp.candidates(c).iter().any(|v| v.as_num().is_some());
            if numeric {
                interval_formula(c, iv)
            } else {
                GFormula::Const(false)
            }
        }
    }
}

/// Visitor that stops at the first satisfiable branch.
struct Find {
    model: Option<Vec<Value>>,
    want_model: bool,
}

impl Visitor for Find {
    fn leaf(&mut self, eng: &Engine, st: &State) -> Result<Flow, SolveError> {
        let want = self.want_model;
        let mut found = None;
        let flow = eng.branches(st, &mut |eng, b| {
            found = Some(if want { eng.model(st, &b, &[]) } else { None });
            Ok(Flow::Stop)
        })?;
        if let Some(m) = found {
            self.model = m.or(Some(Vec::new()));
        }
        Ok(flow)
    }
}

/// Runs the search for one model under the enabled laws and `extra`.
pub(crate) fn find_model(
    gp: &GroundProblem,
    laws: Option<&[bool]>,
    extra: Vec<GFormula>,
    deadline: Deadline,
    want_model: bool,
) -> Result<Option<Vec<Value>>, SolveError> {
    let mut eng = Engine::new(gp, laws, extra, deadline);
    let Some(root) = eng.root()? else { return Ok(None) };
    let mut v = Find { model: None, want_model };
    eng.search(root, &mut v)?;
    Ok(v.model)
}

fn to_structure(gp: &GroundProblem, st: &PartialStructure, values: Vec<Value>) -> PartialStructure {
    let mut out = PartialStructure::new();
    for (c, v) in values.into_iter().enumerate() {
        let key = gp.cells[c].key.clone();
        let origin = if gp.cells[c].fixed.is_some() {
            Origin::Given
        } else {
            st.iter().find(|a| a.key == key && a.origin != Origin::Propagated).map_or(Origin::Propagated, |a| a.origin)
        };
        out.push(Assignment::exact(key, v, origin));
    }
    out
}

/// Decides whether some total model extends `st`.
pub fn check(gp: &GroundProblem, st: &PartialStructure, budget: &Budget) -> Result<CheckResult, SolveError> {
    let prep = Prepared::new(gp, st)?;
    let deadline = Deadline::new(budget);
    Ok(match find_model(gp, None, prep.all(), deadline, true)? {
        Some(values) => CheckResult::Sat(to_structure(gp, st, values)),
        None => CheckResult::Unsat,
    })
}

/// The first model in search order: finite cells take the earliest
/// declared candidate that leads to a model, numeric cells the lowest value.
pub fn expand(
    gp: &GroundProblem,
    st: &PartialStructure,
    budget: &Budget,
) -> Result<Option<PartialStructure>, SolveError> {
    Ok(match check(gp, st, budget)? {
        CheckResult::Sat(m) => Some(m),
        CheckResult::Unsat => None,
    })
}

/// Union of what the models seen so far allow.
/// Union of the models seen so far: supported finite values and the hull
/// of each numeric slot. Stops the search at the first new leaf.
struct Hull {
    found: bool,
    support: Vec<u64>,
    num: Vec<Option<Interval>>,
    /// The last leaf relaxed a non-linear comparison, so its numeric
    /// ranges are samples rather than exact extremes.
    nonlinear: bool,
}

impl Hull {
    fn supports(&self, eng: &Engine, c: CellId, p: usize) -> bool {
        let (off, _) = eng.gp.finite_layout[eng.gp.cells[c].slot];
        self.support[off + p / 64] >> (p % 64) & 1 == 1
    }

    fn covers(&self, st: &State) -> bool {
        if !self.found {
            return false;
        }
        if st.dom.iter().zip(&self.support).any(|(d, s)| d & !s != 0) {
            return false;
        }
        st.lo.iter().zip(&st.hi).zip(&self.num).all(|((lo, hi), h)| match h {
            Some(iv) => iv.contains(lo) && iv.contains(hi),
            None => false,
        })
    }

    fn widen(&mut self, slot: usize, iv: Interval) {
        self.num[slot] = Some(match self.num[slot].take() {
            None => iv,
            Some(h) => hull_of(&h, &iv),
        });
    }
}

impl Visitor for Hull {
    fn prune(&mut self, _eng: &Engine, st: &State) -> bool {
        self.covers(st)
    }

    fn leaf(&mut self, eng: &Engine, st: &State) -> Result<Flow, SolveError> {
        let mut any = false;
        let mut hulls: Vec<(CellId, Interval)> = Vec::new();
        let mut nonlinear = false;
        eng.branches(st, &mut |eng, b: Branch| {
            any = true;
            nonlinear |= !b.free.is_empty();
            hulls.extend(eng.branch_hull(st, &b));
            Ok(Flow::Continue)
        })?;
        if !any {
            return Ok(Flow::Continue);
        }
        self.found = true;
        self.nonlinear = nonlinear;
        for (s, d) in self.support.iter_mut().zip(&st.dom) {
            *s |= d;
        }
        let mut in_branch = vec![false; st.lo.len()];
        for (c, iv) in hulls {
            let slot = eng.gp.cells[c].slot;
            in_branch[slot] = true;
            self.widen(slot, iv);
        }
        for slot in 0..st.lo.len() {
            if !in_branch[slot] {
                self.widen(slot, Interval::closed(st.lo[slot].clone(), st.hi[slot].clone()));
            }
        }
        Ok(Flow::Stop)
    }
}

/// Searches below `st` for a model the hull does not cover yet.
fn probe(eng: &mut Engine, st: State, hull: &mut Hull) -> Result<bool, SolveError> {
    Ok(eng.search(st, hull)? == Flow::Stop)
}

fn hull_of(a: &Interval, b: &Interval) -> Interval {
    let lo = match (&a.lo, &b.lo) {
        (Some(x), Some(y)) => {
            Some(if x.value < y.value || (x.value == y.value && !x.strict) { x.clone() } else { y.clone() })
        }
        _ => None,
    };
    let hi = match (&a.hi, &b.hi) {
        (Some(x), Some(y)) => {
            Some(if x.value > y.value || (x.value == y.value && !x.strict) { x.clone() } else { y.clone() })
        }
        _ => None,
    };
    Interval { lo, hi }
}

/// Per-cell feasible candidates and ranges, over all models extending `st`.
pub fn propagate(gp: &GroundProblem, st: &PartialStructure, budget: &Budget) -> Result<PropagationResult, SolveError> {
    let prep = Prepared::new(gp, st)?;
    let deadline = Deadline::new(budget);
    let mut eng = Engine::new(gp, None, prep.all(), deadline);
    let inconsistent = PropagationResult {
        status: Status::Inconsistent,
        consequences: Vec::new(),
        eliminated: BTreeMap::new(),
        numeric_bounds: BTreeMap::new(),
        domains: BTreeMap::new(),
    };
    let Some(mut root) = eng.root()? else { return Ok(inconsistent) };
    let mut hull =
        Hull { found: false, support: vec![0; root.dom.len()], num: vec![None; root.lo.len()], nonlinear: false };
    if !probe(&mut eng, root.clone(), &mut hull)? {
        return Ok(inconsistent);
    }
    // Every finite value either shows up in some model or has none.
    for &c in &gp.finite_cells {
        for p in eng.positions(&root, c) {
            if hull.supports(&eng, c, p) {
                continue;
            }
            let mut st = root.clone();
            eng.set_single(&mut st, c, p);
            let seed = eng.occurrences(c);
            if !(eng.fixpoint(&mut st, seed)? && probe(&mut eng, st, &mut hull)?) {
                eng.remove(&mut root, c, p);
                let seed = eng.occurrences(c);
                if !eng.fixpoint(&mut root, seed)? {
                    unreachable!("a supported model survives removing unsupported values");
                }
            }
        }
    }
    // Push each numeric bound outwards until no model lies beyond it.
    let base = prep.all();
    for (slot, &c) in gp.numeric_cells.iter().enumerate() {
        if gp.cells[c].fixed.is_some() {
            continue;
        }
        for upper in [false, true] {
            loop {
                let iv = hull.num[slot].clone().expect("widened at the first model");
                let side = if upper { iv.hi } else { iv.lo };
                let Some(b) = side else { break };
                let beyond = Bound { value: b.value, strict: !b.strict };
                let outside = if upper {
                    Interval { lo: Some(beyond), hi: None }
                } else {
                    Interval { lo: None, hi: Some(beyond) }
                };
                let mut extra = base.clone();
                extra.push(interval_formula(c, &outside));
                let mut probe_eng = Engine::new(gp, None, extra, deadline);
                let Some(st) = probe_eng.root_from(root.clone())? else { break };
                let outer = Interval::closed(st.lo[slot].clone(), st.hi[slot].clone());
                let found = probe(&mut probe_eng, st, &mut hull)?;
                if !found {
                    break;
                }
                if hull.nonlinear {
                    // Sampled divisors can creep towards the extreme forever;
                    // settle for the propagated bound on this side instead.
                    hull.widen(slot, outer);
                    break;
                }
            }
        }
    }

    let mut out = PropagationResult {
        status: Status::Consistent,
        consequences: Vec::new(),
        eliminated: BTreeMap::new(),
        numeric_bounds: BTreeMap::new(),
        domains: BTreeMap::new(),
    };
    for (c, cell) in gp.cells.iter().enumerate() {
        let skip = cell.fixed.is_some() || prep.user_cells.contains(&c);
        match &cell.kind {
            CellKind::Finite(ids) => {
                let (off, _) = gp.finite_layout[cell.slot];
                let mut kept = Vec::new();
                let mut gone = Vec::new();
                for (p, &id) in ids.iter().enumerate() {
                    let v = gp.value(id).clone();
                    if hull.support[off + p / 64] >> (p % 64) & 1 == 1 {
                        kept.push(v);
                    } else {
                        gone.push(v);
                    }
                }
                if !skip {
                    if kept.len() == 1 {
                        out.consequences.push(Assignment::exact(cell.key.clone(), kept[0].clone(), Origin::Propagated));
                    }
                    if !gone.is_empty() {
                        out.eliminated.insert(cell.key.clone(), gone);
                    }
                }
                out.domains.insert(cell.key.clone(), Domain::Finite(kept));
            }
            CellKind::Numeric { lo, hi } => {
                let iv = hull.num[cell.slot].clone().expect("every slot widened at a leaf");
                if !skip {
                    if let Some(x) = iv.point() {
                        out.consequences.push(Assignment::exact(
                            cell.key.clone(),
                            Value::Num(x.clone()),
                            Origin::Propagated,
                        ));
                    }
                    if iv != Interval::closed(lo.clone(), hi.clone()) {
                        out.numeric_bounds.insert(cell.key.clone(), iv.clone());
                    }
                }
                out.domains.insert(cell.key.clone(), Domain::Numeric(iv));
            }
        }
    }
    Ok(out)
}

/// Branch and bound on a minimized objective.
struct Optimum {
    objective: GTerm,
    best: Option<(Bound, Option<Vec<Value>>)>,
    unbounded: bool,
    error: Option<SolveError>,
}

impl Visitor for Optimum {
    fn prune(&mut self, eng: &Engine, st: &State) -> bool {
        let Some((b, _)) = &self.best else { return false };
        match eng.range(st, &self.objective, None).lo {
            Some(lo) => lo > b.value || (lo == b.value && !b.strict),
            None => false,
        }
    }

    fn leaf(&mut self, eng: &Engine, st: &State) -> Result<Flow, SolveError> {
        let obj = match eng.linear(st, &self.objective, None) {
            Ok(e) => e,
            Err(_) => {
                self.error = Some(SolveError::NonLinearObjective);
                return Ok(Flow::Stop);
            }
        };
        let mut bounds = Vec::new();
        for (v, _) in &obj.terms {
            let (lo, hi) = eng.bounds(st, *v);
            bounds.extend(Constraint::within(*v, &Interval::closed(lo, hi)));
        }
        let mut stop = false;
        eng.branches(st, &mut |eng, b| {
            let mut cs = b.cons.clone();
            cs.extend(bounds.iter().cloned());
            let m = match linear::minimize(&cs, &obj) {
                Ok(Some(m)) => m,
                Ok(None) => {
                    stop = true;
                    return Ok(Flow::Stop);
                }
                Err(_) => return Ok(Flow::Continue),
            };
            let better = match &self.best {
                None => true,
                Some((cur, _)) => m.value < cur.value || (m.value == cur.value && cur.strict && !m.strict),
            };
            if better {
                let model = if m.strict {
                    None
                } else {
                    let mut extra = bounds.clone();
                    extra.push(Constraint::new(obj.sub(&LinExpr::constant(m.value.clone())), Rel::Eq));
                    eng.model(st, &b, &extra)
                };
                self.best = Some((m, model));
            }
            Ok(Flow::Continue)
        })?;
        if stop {
            self.unbounded = true;
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }
}

/// The best model under `goal`. Among equally good models the one found
/// first in search order wins.
pub fn optimize(
    gp: &GroundProblem,
    st: &PartialStructure,
    goal: &OptimizationGoal,
    budget: &Budget,
) -> Result<OptimizeResult, SolveError> {
    let prep = Prepared::new(gp, st)?;
    let mut objective = gp.ground_term(&goal.term)?;
    if !is_numeric_term(gp, &objective) {
        return Err(SolveError::InvalidGoal(gp.describe_term(&objective)));
    }
    if goal.direction == Direction::Maximize {
        objective = GTerm::Neg(Box::new(objective));
    }
    let deadline = Deadline::new(budget);
    let mut eng = Engine::new(gp, None, prep.all(), deadline);
    eng.focus_on(&objective);
    let Some(root) = eng.root()? else { return Ok(OptimizeResult::Unsat) };
    let mut v = Optimum { objective, best: None, unbounded: false, error: None };
    eng.search(root, &mut v)?;
    if let Some(e) = v.error {
        return Err(e);
    }
    if v.unbounded {
        return Ok(OptimizeResult::Unbounded);
    }
    Ok(match v.best {
        None => OptimizeResult::Unsat,
        Some((b, Some(model))) if !b.strict => {
            let value = if goal.direction == Direction::Maximize { -b.value } else { b.value };
            OptimizeResult::Optimal { model: to_structure(gp, st, model), value }
        }
        Some(_) => OptimizeResult::Unbounded,
    })
}

fn is_numeric_term(gp: &GroundProblem, t: &GTerm) -> bool {
    match t {
        GTerm::Num(_) => true,
        GTerm::Val(v) => gp.value(*v).as_num().is_some(),
        GTerm::Cell(c) => match &gp.cells[*c].kind {
            CellKind::Numeric { .. } => true,
            CellKind::Finite(_) => gp.candidates(*c).iter().all(|v| v.as_num().is_some()),
        },
        GTerm::Case(_, arms) => arms.iter().all(|a| is_numeric_term(gp, a)),
        GTerm::Neg(a) => is_numeric_term(gp, a),
        GTerm::Add(a, b) | GTerm::Sub(a, b) | GTerm::Mul(a, b) | GTerm::Div(a, b) => {
            is_numeric_term(gp, a) && is_numeric_term(gp, b)
        }
    }
}
