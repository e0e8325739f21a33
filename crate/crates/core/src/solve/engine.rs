//! Depth-first search over finite cells with forward checking and interval
//! bound propagation; leaves are decided exactly by linear elimination.

use std::borrow::Cow;
use std::collections::{HashMap, VecDeque};

use crate::ground::{CellId, CellKind, Clause, GFormula, GTerm, GroundProblem, NumOp, ValueId};
use crate::linear::{self, Constraint, Infeasible, LinExpr, Rel};
use crate::model::{Bound, Interval, Value};
use crate::rational::Rat;

use super::{Deadline, SolveError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Tri {
    F,
    T,
    U,
}

impl Tri {
    fn not(self) -> Tri {
        match self {
            Tri::F => Tri::T,
            Tri::T => Tri::F,
            Tri::U => Tri::U,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

/// Search node: candidate sets of finite cells, closed bounds of numeric
/// cells, and which clauses are already true on the whole node.
#[derive(Clone, Debug)]
pub(crate) struct State {
    pub dom: Vec<u64>,
    pub size: Vec<u32>,
    pub lo: Vec<Rat>,
    pub hi: Vec<Rat>,
    pub sat: Vec<u64>,
}

/// Closed range with possibly infinite ends.
#[derive(Clone, Debug)]
pub(crate) struct Range {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

impl Range {
    fn point(x: Rat) -> Range {
        Range { lo: Some(x.clone()), hi: Some(x) }
    }

    fn full() -> Range {
        Range { lo: None, hi: None }
    }

    fn hull(self, other: Range) -> Range {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        Range { lo, hi }
    }

    fn neg(self) -> Range {
        Range { lo: self.hi.map(|x| -x), hi: self.lo.map(|x| -x) }
    }

    fn add(self, other: Range) -> Range {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Range { lo, hi }
    }

    fn is_zero(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(a), Some(b)) if a.is_zero() && b.is_zero())
    }

    fn mul(self, other: Range) -> Range {
        if self.is_zero() || other.is_zero() {
            return Range::point(Rat::zero());
        }
        match (self.lo, self.hi, other.lo, other.hi) {
            (Some(a), Some(b), Some(c), Some(d)) => {
                let ps = [&a * &c, &a * &d, &b * &c, &b * &d];
                let lo = ps.iter().min().cloned();
                let hi = ps.iter().max().cloned();
                Range { lo, hi }
            }
            _ => Range::full(),
        }
    }

    fn div(self, d: Range) -> Range {
        if d.is_zero() {
            // x / 0 is defined as 0.
            return Range::point(Rat::zero());
        }
        match (&d.lo, &d.hi) {
            (Some(a), Some(b)) if a.is_positive() || b.is_negative() => {
                self.mul(Range { lo: Some(b.recip()), hi: Some(a.recip()) })
            }
            _ => Range::full(),
        }
    }
}

/// Negation-normal residual of a clause once its finite cells are fixed.
#[derive(Clone, Debug)]
pub(crate) enum Res {
    T,
    F,
    Atom(Constraint),
    /// A comparison that is not linear under the current node.
    Free(FreeAtom),
    And(Vec<Res>),
    Or(Vec<Res>),
    /// Depends on a finite cell that is still open.
    Unknown,
}

#[derive(Clone, Debug)]
pub(crate) struct FreeAtom {
    pub op: NumOp,
    pub lhs: GTerm,
    pub rhs: GTerm,
    pub negated: bool,
}

pub(crate) enum LinErr {
    Open,
    NonLinear,
}

pub(crate) struct QClause<'a> {
    pub body: Cow<'a, GFormula>,
    pub finite: Cow<'a, [CellId]>,
    pub numeric: Cow<'a, [CellId]>,
}

pub(crate) trait Visitor {
    /// Skip the subtree below `st`.
    fn prune(&mut self, _eng: &Engine, _st: &State) -> bool {
        false
    }

    fn leaf(&mut self, eng: &Engine, st: &State) -> Result<Flow, SolveError>;
}

/// One conjunctive case of a leaf: linear constraints plus relaxed
/// non-linear comparisons.
#[derive(Clone, Debug, Default)]
pub(crate) struct Branch {
    pub cons: Vec<Constraint>,
    pub free: Vec<FreeAtom>,
}

pub(crate) struct Engine<'a> {
    pub gp: &'a GroundProblem,
    pub clauses: Vec<QClause<'a>>,
    occurs: Vec<Vec<u32>>,
    degree: Vec<u32>,
    deadline: Deadline,
    /// Cells branched on even when no open clause needs them.
    focus: Vec<bool>,
    failures: Vec<u64>,
    pub nodes: u64,
}

/// Upper bound on bound-tightening steps per fixpoint, per numeric cell.
const TIGHTEN_ROUNDS: usize = 16;

impl<'a> Engine<'a> {
    /// An engine over the clauses of the enabled theory formulas plus
    /// `extra` clauses.
    pub fn new(gp: &'a GroundProblem, laws: Option<&[bool]>, extra: Vec<GFormula>, deadline: Deadline) -> Self {
        let mut clauses = Vec::new();
        for c in &gp.clauses {
            if laws.is_none_or(|m| m[c.formula]) {
                clauses.push(QClause {
                    body: Cow::Borrowed(&c.body),
                    finite: Cow::Borrowed(&c.finite[..]),
                    numeric: Cow::Borrowed(&c.numeric[..]),
                });
            }
        }
        for body in extra {
            let c = Clause::new(usize::MAX, Vec::new(), body, gp);
            clauses.push(QClause {
                body: Cow::Owned(c.body),
                finite: Cow::Owned(c.finite),
                numeric: Cow::Owned(c.numeric),
            });
        }
        let mut occurs = vec![Vec::new(); gp.cells.len()];
        for (i, q) in clauses.iter().enumerate() {
            for &c in q.finite.iter().chain(q.numeric.iter()) {
                occurs[c].push(i as u32);
            }
        }
        let degree = occurs.iter().map(|o| o.len() as u32).collect();
        Engine {
            gp,
            clauses,
            occurs,
            degree,
            deadline,
            focus: vec![false; gp.cells.len()],
            failures: vec![0; gp.cells.len()],
            nodes: 0,
        }
    }

    /// Makes the search branch on the finite cells of `t`.
    pub fn focus_on(&mut self, t: &GTerm) {
        match t {
            GTerm::Cell(c) if self.gp.cells[*c].is_finite() => self.focus[*c] = true,
            GTerm::Case(c, arms) => {
                self.focus[*c] = true;
                arms.iter().for_each(|a| self.focus_on(a));
            }
            GTerm::Neg(a) => self.focus_on(a),
            GTerm::Add(a, b) | GTerm::Sub(a, b) | GTerm::Mul(a, b) | GTerm::Div(a, b) => {
                self.focus_on(a);
                self.focus_on(b);
            }
            _ => {}
        }
    }

    // -- state access -------------------------------------------------------

    /// State with base domains and fixed cells applied, before propagation.
    pub fn base_state(&self) -> State {
        let gp = self.gp;
        let mut st = State {
            dom: vec![0; gp.finite_words],
            size: vec![0; gp.finite_layout.len()],
            lo: Vec::with_capacity(gp.numeric_slots),
            hi: Vec::with_capacity(gp.numeric_slots),
            sat: vec![0; self.clauses.len().div_ceil(64)],
        };
        for (slot, &(off, len)) in gp.finite_layout.iter().enumerate() {
            let cell = &gp.cells[gp.finite_cells[slot]];
            if let Some(v) = &cell.fixed {
                let pos = gp.value_id(v).and_then(|id| gp.position(gp.finite_cells[slot], id)).expect("typed");
                st.dom[off + pos / 64] |= 1 << (pos % 64);
                st.size[slot] = 1;
            } else {
                for p in 0..len {
                    st.dom[off + p / 64] |= 1 << (p % 64);
                }
                st.size[slot] = len as u32;
            }
        }
        for &c in &gp.numeric_cells {
            let cell = &gp.cells[c];
            let CellKind::Numeric { lo, hi } = &cell.kind else { unreachable!() };
            match &cell.fixed {
                Some(Value::Num(v)) => {
                    st.lo.push(v.clone());
                    st.hi.push(v.clone());
                }
                _ => {
                    st.lo.push(lo.clone());
                    st.hi.push(hi.clone());
                }
            }
        }
        st
    }

    pub fn has(&self, st: &State, cell: CellId, pos: usize) -> bool {
        let (off, _) = self.gp.finite_layout[self.gp.cells[cell].slot];
        st.dom[off + pos / 64] >> (pos % 64) & 1 == 1
    }

    pub fn size(&self, st: &State, cell: CellId) -> u32 {
        st.size[self.gp.cells[cell].slot]
    }

    pub fn positions(&self, st: &State, cell: CellId) -> Vec<usize> {
        let (off, len) = self.gp.finite_layout[self.gp.cells[cell].slot];
        (0..len).filter(|p| st.dom[off + p / 64] >> (p % 64) & 1 == 1).collect()
    }

    pub fn first(&self, st: &State, cell: CellId) -> usize {
        let (off, len) = self.gp.finite_layout[self.gp.cells[cell].slot];
        (0..len).find(|p| st.dom[off + p / 64] >> (p % 64) & 1 == 1).expect("non-empty domain")
    }

    fn value_at(&self, cell: CellId, pos: usize) -> ValueId {
        match &self.gp.cells[cell].kind {
            CellKind::Finite(vals) => vals[pos],
            CellKind::Numeric { .. } => unreachable!("numeric cell has no positions"),
        }
    }

    /// The single remaining position of a finite cell.
    fn assigned(&self, st: &State, cell: CellId, ov: Ov) -> Option<usize> {
        if let Some((c, p)) = ov {
            if c == cell {
                return Some(p);
            }
        }
        if self.size(st, cell) == 1 {
            Some(self.first(st, cell))
        } else {
            None
        }
    }

    pub fn remove(&self, st: &mut State, cell: CellId, pos: usize) {
        let slot = self.gp.cells[cell].slot;
        let (off, _) = self.gp.finite_layout[slot];
        let w = &mut st.dom[off + pos / 64];
        if *w >> (pos % 64) & 1 == 1 {
            *w &= !(1 << (pos % 64));
            st.size[slot] -= 1;
        }
    }

    /// Copies the candidates or bounds of `cell` from `from`.
    pub fn copy_cell(&self, st: &mut State, from: &State, cell: CellId) {
        let slot = self.gp.cells[cell].slot;
        if self.gp.cells[cell].is_finite() {
            let (off, len) = self.gp.finite_layout[slot];
            let words = len.div_ceil(64);
            st.dom[off..off + words].copy_from_slice(&from.dom[off..off + words]);
            st.size[slot] = from.size[slot];
        } else {
            st.lo[slot] = from.lo[slot].clone();
            st.hi[slot] = from.hi[slot].clone();
        }
    }

    pub fn set_single(&self, st: &mut State, cell: CellId, pos: usize) {
        let slot = self.gp.cells[cell].slot;
        let (off, len) = self.gp.finite_layout[slot];
        for w in 0..len.div_ceil(64) {
            st.dom[off + w] = 0;
        }
        st.dom[off + pos / 64] |= 1 << (pos % 64);
        st.size[slot] = 1;
    }

    pub fn bounds(&self, st: &State, cell: CellId) -> (Rat, Rat) {
        let s = self.gp.cells[cell].slot;
        (st.lo[s].clone(), st.hi[s].clone())
    }

    fn is_sat(&self, st: &State, q: usize) -> bool {
        st.sat[q / 64] >> (q % 64) & 1 == 1
    }

    fn mark_sat(&self, st: &mut State, q: usize) {
        st.sat[q / 64] |= 1 << (q % 64);
    }

    pub fn tick(&mut self) -> Result<(), SolveError> {
        self.nodes += 1;
        if self.nodes.is_multiple_of(64) && self.deadline.expired() {
            return Err(SolveError::Timeout);
        }
        Ok(())
    }

    // -- evaluation ---------------------------------------------------------

    pub fn eval(&self, st: &State, f: &GFormula, ov: Ov) -> Tri {
        match f {
            GFormula::Const(b) => {
                if *b {
                    Tri::T
                } else {
                    Tri::F
                }
            }
            GFormula::SymEq(a, b) => self.eval_eq(st, a, b, ov),
            GFormula::NumCmp(op, a, b) => {
                let x = self.range(st, a, ov);
                let y = self.range(st, b, ov);
                cmp_ranges(*op, &x, &y)
            }
            GFormula::Not(g) => self.eval(st, g, ov).not(),
            GFormula::And(v) => {
                let mut out = Tri::T;
                for g in v {
                    match self.eval(st, g, ov) {
                        Tri::F => return Tri::F,
                        Tri::U => out = Tri::U,
                        Tri::T => {}
                    }
                }
                out
            }
            GFormula::Or(v) => {
                let mut out = Tri::F;
                for g in v {
                    match self.eval(st, g, ov) {
                        Tri::T => return Tri::T,
                        Tri::U => out = Tri::U,
                        Tri::F => {}
                    }
                }
                out
            }
            GFormula::Iff(a, b) => match (self.eval(st, a, ov), self.eval(st, b, ov)) {
                (Tri::U, _) | (_, Tri::U) => Tri::U,
                (x, y) => {
                    if x == y {
                        Tri::T
                    } else {
                        Tri::F
                    }
                }
            },
        }
    }

    fn eval_eq(&self, st: &State, a: &GTerm, b: &GTerm, ov: Ov) -> Tri {
        if let (GTerm::Cell(c), GTerm::Val(v)) | (GTerm::Val(v), GTerm::Cell(c)) = (a, b) {
            let Some(pos) = self.gp.position(*c, *v) else { return Tri::F };
            if let Some(p) = self.assigned(st, *c, ov) {
                return if p == pos { Tri::T } else { Tri::F };
            }
            return if self.has(st, *c, pos) { Tri::U } else { Tri::F };
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        self.values_of(st, a, ov, &mut xs);
        self.values_of(st, b, ov, &mut ys);
        xs.sort_unstable();
        xs.dedup();
        ys.sort_unstable();
        ys.dedup();
        if xs.len() == 1 && ys.len() == 1 {
            return if xs[0] == ys[0] { Tri::T } else { Tri::F };
        }
        if xs.iter().any(|x| ys.binary_search(x).is_ok()) {
            Tri::U
        } else {
            Tri::F
        }
    }

    /// Possible values of a finite-valued term.
    fn values_of(&self, st: &State, t: &GTerm, ov: Ov, out: &mut Vec<ValueId>) {
        match t {
            GTerm::Val(v) => out.push(*v),
            GTerm::Cell(c) => match self.assigned(st, *c, ov) {
                Some(p) => out.push(self.value_at(*c, p)),
                None => out.extend(self.positions(st, *c).into_iter().map(|p| self.value_at(*c, p))),
            },
            GTerm::Case(c, arms) => match self.assigned(st, *c, ov) {
                Some(p) => self.values_of(st, &arms[p], ov, out),
                None => {
                    for p in self.positions(st, *c) {
                        self.values_of(st, &arms[p], ov, out);
                    }
                }
            },
            _ => {}
        }
    }

    pub fn range(&self, st: &State, t: &GTerm, ov: Ov) -> Range {
        match t {
            GTerm::Num(n) => Range::point(n.clone()),
            GTerm::Val(v) => match self.gp.value(*v) {
                Value::Num(n) => Range::point(n.clone()),
                _ => Range::full(),
            },
            GTerm::Cell(c) => {
                let cell = &self.gp.cells[*c];
                if cell.is_finite() {
                    let ps = match self.assigned(st, *c, ov) {
                        Some(p) => vec![p],
                        None => self.positions(st, *c),
                    };
                    let mut r: Option<Range> = None;
                    for p in ps {
                        let x = match self.gp.value(self.value_at(*c, p)) {
                            Value::Num(n) => Range::point(n.clone()),
                            _ => Range::full(),
                        };
                        r = Some(match r {
                            None => x,
                            Some(r) => r.hull(x),
                        });
                    }
                    r.unwrap_or_else(Range::full)
                } else {
                    Range { lo: Some(st.lo[cell.slot].clone()), hi: Some(st.hi[cell.slot].clone()) }
                }
            }
            GTerm::Case(c, arms) => match self.assigned(st, *c, ov) {
                Some(p) => self.range(st, &arms[p], ov),
                None => {
                    let mut r: Option<Range> = None;
                    for p in self.positions(st, *c) {
                        let x = self.range(st, &arms[p], ov);
                        r = Some(match r {
                            None => x,
                            Some(r) => r.hull(x),
                        });
                    }
                    r.unwrap_or_else(Range::full)
                }
            },
            GTerm::Neg(a) => self.range(st, a, ov).neg(),
            GTerm::Add(a, b) => self.range(st, a, ov).add(self.range(st, b, ov)),
            GTerm::Sub(a, b) => self.range(st, a, ov).add(self.range(st, b, ov).neg()),
            GTerm::Mul(a, b) => self.range(st, a, ov).mul(self.range(st, b, ov)),
            GTerm::Div(a, b) => self.range(st, a, ov).div(self.range(st, b, ov)),
        }
    }

    /// Linear form of a term over numeric cells. `fixed` supplies values for
    /// numeric cells that should be treated as constants.
    pub fn linear(&self, st: &State, t: &GTerm, fixed: Option<&HashMap<CellId, Rat>>) -> Result<LinExpr, LinErr> {
        Ok(match t {
            GTerm::Num(n) => LinExpr::constant(n.clone()),
            GTerm::Val(v) => match self.gp.value(*v) {
                Value::Num(n) => LinExpr::constant(n.clone()),
                _ => return Err(LinErr::NonLinear),
            },
            GTerm::Cell(c) => {
                let cell = &self.gp.cells[*c];
                if cell.is_finite() {
                    let p = self.assigned(st, *c, None).ok_or(LinErr::Open)?;
                    match self.gp.value(self.value_at(*c, p)) {
                        Value::Num(n) => LinExpr::constant(n.clone()),
                        _ => return Err(LinErr::NonLinear),
                    }
                } else if let Some(v) = fixed.and_then(|m| m.get(c)) {
                    LinExpr::constant(v.clone())
                } else if st.lo[cell.slot] == st.hi[cell.slot] {
                    LinExpr::constant(st.lo[cell.slot].clone())
                } else {
                    LinExpr::var(*c)
                }
            }
            GTerm::Case(c, arms) => {
                let p = self.assigned(st, *c, None).ok_or(LinErr::Open)?;
                self.linear(st, &arms[p], fixed)?
            }
            GTerm::Neg(a) => self.linear(st, a, fixed)?.scale(&-Rat::one()),
            GTerm::Add(a, b) => self.linear(st, a, fixed)?.add(&self.linear(st, b, fixed)?),
            GTerm::Sub(a, b) => self.linear(st, a, fixed)?.sub(&self.linear(st, b, fixed)?),
            GTerm::Mul(a, b) => {
                let x = self.linear(st, a, fixed)?;
                let y = self.linear(st, b, fixed)?;
                if x.is_constant() {
                    y.scale(&x.constant)
                } else if y.is_constant() {
                    x.scale(&y.constant)
                } else {
                    return Err(LinErr::NonLinear);
                }
            }
            GTerm::Div(a, b) => {
                let x = self.linear(st, a, fixed)?;
                let y = self.linear(st, b, fixed)?;
                if !y.is_constant() {
                    return Err(LinErr::NonLinear);
                }
                if y.constant.is_zero() {
                    LinExpr::default()
                } else {
                    x.scale(&y.constant.recip())
                }
            }
        })
    }

    /// Residual of `f` (negated when `neg`) in negation normal form.
    pub fn residual(&self, st: &State, f: &GFormula, neg: bool, fixed: Option<&HashMap<CellId, Rat>>) -> Res {
        match self.eval(st, f, None) {
            Tri::T => return if neg { Res::F } else { Res::T },
            Tri::F => return if neg { Res::T } else { Res::F },
            Tri::U => {}
        }
        match f {
            GFormula::Const(_) => unreachable!("decided above"),
            GFormula::SymEq(..) => Res::Unknown,
            GFormula::NumCmp(op, a, b) => {
                let e = match (self.linear(st, a, fixed), self.linear(st, b, fixed)) {
                    (Ok(x), Ok(y)) => x.sub(&y),
                    (Err(LinErr::Open), _) | (_, Err(LinErr::Open)) => return Res::Unknown,
                    _ => return Res::Free(FreeAtom { op: *op, lhs: a.clone(), rhs: b.clone(), negated: neg }),
                };
                atom(*op, e, neg)
            }
            GFormula::Not(g) => self.residual(st, g, !neg, fixed),
            GFormula::And(v) | GFormula::Or(v) => {
                let conj = matches!(f, GFormula::And(_)) != neg;
                let parts = v.iter().map(|g| self.residual(st, g, neg, fixed)).collect();
                if conj {
                    res_and(parts)
                } else {
                    res_or(parts)
                }
            }
            GFormula::Iff(a, b) => {
                let pa = self.residual(st, a, false, fixed);
                let na = self.residual(st, a, true, fixed);
                let pb = self.residual(st, b, neg, fixed);
                let nb = self.residual(st, b, !neg, fixed);
                res_or(vec![res_and(vec![pa, pb]), res_and(vec![na, nb])])
            }
        }
    }

    // -- propagation --------------------------------------------------------

    /// Runs forward checking and bound tightening to a fixpoint, starting
    /// from the clauses in `seed`. Returns false on a conflict.
    pub fn fixpoint(&mut self, st: &mut State, seed: impl IntoIterator<Item = usize>) -> Result<bool, SolveError> {
        let n = self.clauses.len();
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        for q in seed {
            if !queued[q] && !self.is_sat(st, q) {
                queued[q] = true;
                queue.push_back(q);
            }
        }
        let mut tighten_budget = TIGHTEN_ROUNDS * (self.gp.numeric_slots + 1);
        let mut steps = 0u64;
        while let Some(q) = queue.pop_front() {
            queued[q] = false;
            steps += 1;
            if steps.is_multiple_of(1024) && self.deadline.expired() {
                return Err(SolveError::Timeout);
            }
            if self.is_sat(st, q) {
                continue;
            }
            let mut changed: Vec<CellId> = Vec::new();
            match self.eval(st, &self.clauses[q].body, None) {
                Tri::T => {
                    self.mark_sat(st, q);
                    continue;
                }
                Tri::F => return Ok(false),
                Tri::U => {}
            }
            let open: Vec<CellId> = self.clauses[q].finite.iter().copied().filter(|&c| self.size(st, c) > 1).collect();
            if open.len() == 1 {
                let c = open[0];
                let before = self.size(st, c);
                for p in self.positions(st, c) {
                    if self.eval(st, &self.clauses[q].body, Some((c, p))) == Tri::F {
                        self.remove(st, c, p);
                    }
                }
                let after = self.size(st, c);
                if after == 0 {
                    return Ok(false);
                }
                if after < before {
                    changed.push(c);
                    if after == 1 {
                        // the clause may now be decided or linear
                        changed.push(usize::MAX);
                    }
                }
            } else if open.is_empty() && !self.clauses[q].numeric.is_empty() && tighten_budget > 0 {
                let res = self.residual(st, &self.clauses[q].body, false, None);
                let mut atoms = Vec::new();
                if conjunctive_atoms(&res, &mut atoms) {
                    for a in atoms {
                        match self.tighten(st, a) {
                            Err(Infeasible) => return Ok(false),
                            Ok(cells) => {
                                tighten_budget = tighten_budget.saturating_sub(cells.len());
                                changed.extend(cells);
                            }
                        }
                    }
                }
            }
            if changed.is_empty() {
                continue;
            }
            for c in changed {
                let list: &[u32] = if c == usize::MAX { &[] } else { &self.occurs[c] };
                for &r in list {
                    let r = r as usize;
                    if !queued[r] && !self.is_sat(st, r) {
                        queued[r] = true;
                        queue.push_back(r);
                    }
                }
                if c == usize::MAX && !queued[q] {
                    queued[q] = true;
                    queue.push_back(q);
                }
            }
        }
        Ok(true)
    }

    /// Tightens closed bounds from `Σ aᵢxᵢ + k rel 0`. Returns the cells
    /// whose bounds moved.
    fn tighten(&self, st: &mut State, c: &Constraint) -> Result<Vec<CellId>, Infeasible> {
        let terms = &c.expr.terms;
        let slot = |v: CellId| self.gp.cells[v].slot;
        // min and max of each aᵢxᵢ
        let mins: Vec<Rat> = terms
            .iter()
            .map(|(v, a)| if a.is_positive() { a * &st.lo[slot(*v)] } else { a * &st.hi[slot(*v)] })
            .collect();
        let maxs: Vec<Rat> = terms
            .iter()
            .map(|(v, a)| if a.is_positive() { a * &st.hi[slot(*v)] } else { a * &st.lo[slot(*v)] })
            .collect();
        let sum_min = mins.iter().fold(c.expr.constant.clone(), |acc, x| acc + x);
        let sum_max = maxs.iter().fold(c.expr.constant.clone(), |acc, x| acc + x);
        if sum_min.is_positive() || (c.rel != Rel::Le && c.rel != Rel::Eq && !sum_min.is_negative()) {
            return Err(Infeasible);
        }
        if c.rel == Rel::Eq && sum_max.is_negative() {
            return Err(Infeasible);
        }
        let mut moved = Vec::new();
        for (i, (v, a)) in terms.iter().enumerate() {
            let s = slot(*v);
            // aᵢxᵢ ≤ -(sum_min - minᵢ)
            let upper = -(&sum_min - &mins[i]);
            let (mut lo, mut hi) = (st.lo[s].clone(), st.hi[s].clone());
            if a.is_positive() {
                hi = hi.min(&upper / a);
            } else {
                lo = lo.max(&upper / a);
            }
            if c.rel == Rel::Eq {
                // aᵢxᵢ ≥ -(sum_max - maxᵢ)
                let lower = -(&sum_max - &maxs[i]);
                if a.is_positive() {
                    lo = lo.max(&lower / a);
                } else {
                    hi = hi.min(&lower / a);
                }
            }
            if lo > hi {
                return Err(Infeasible);
            }
            if lo != st.lo[s] || hi != st.hi[s] {
                st.lo[s] = lo;
                st.hi[s] = hi;
                moved.push(*v);
            }
        }
        Ok(moved)
    }

    /// Root state: base domains propagated over every clause. `None` when
    /// propagation already finds a conflict.
    pub fn root(&mut self) -> Result<Option<State>, SolveError> {
        let st = self.base_state();
        self.root_from(st)
    }

    /// Clauses mentioning `c`.
    pub fn occurrences(&self, c: CellId) -> Vec<usize> {
        self.occurs[c].iter().map(|&q| q as usize).collect()
    }

    pub fn root_from(&mut self, mut st: State) -> Result<Option<State>, SolveError> {
        let all: Vec<usize> = (0..self.clauses.len()).collect();
        Ok(if self.fixpoint(&mut st, all)? { Some(st) } else { None })
    }

    // -- search -------------------------------------------------------------

    /// Open finite cell to branch on, if any unsatisfied clause still has one.
    /// Smallest size over weight, where the weight of a cell is its number of
    /// open clauses plus the failures seen when branching on it. The failure
    /// count steers the search towards the choices that carry a conflict
    /// instead of enumerating unrelated ones underneath.
    fn branch_cell(&self, st: &State) -> Option<CellId> {
        let mut best: Option<(CellId, u32, u64)> = None;
        for &c in &self.gp.finite_cells {
            let size = self.size(st, c);
            if size <= 1 || (self.degree[c] == 0 && !self.focus[c]) {
                continue;
            }
            let mut deg = self.occurs[c].iter().filter(|&&q| !self.is_sat(st, q as usize)).count() as u64;
            if self.focus[c] {
                deg += 1;
            } else if deg == 0 {
                continue;
            }
            let weight = deg + self.failures[c];
            let better = match best {
                None => true,
                // ties by cell id (iteration order)
                Some((_, bs, bw)) => (size as u128) * (bw as u128) < (bs as u128) * (weight as u128),
            };
            if better {
                best = Some((c, size, weight));
            }
        }
        best.map(|(c, ..)| c)
    }

    pub fn search(&mut self, st: State, v: &mut dyn Visitor) -> Result<Flow, SolveError> {
        self.tick()?;
        if v.prune(self, &st) {
            return Ok(Flow::Continue);
        }
        let Some(c) = self.branch_cell(&st) else {
            return v.leaf(self, &st);
        };
        if !self.linear_ok(&st) {
            return Ok(Flow::Continue);
        }
        for p in self.positions(&st, c) {
            let mut child = st.clone();
            self.set_single(&mut child, c, p);
            let seed = self.occurs[c].iter().map(|&q| q as usize).collect::<Vec<_>>();
            if !self.fixpoint(&mut child, seed)? {
                self.failures[c] += 1;
            } else if self.search(child, v)? == Flow::Stop {
                return Ok(Flow::Stop);
            }
        }
        Ok(Flow::Continue)
    }

    /// Joint feasibility of the numeric clauses already reduced to linear
    /// conjunctions. Bound tightening alone misses combinations such as
    /// `d = x - y`, `x >= y`, `d < 0`. A clause reduced to a disjunction of
    /// linear conjunctions must keep one disjunct feasible against them.
    fn linear_ok(&self, st: &State) -> bool {
        let mut residuals = Vec::new();
        for (q, clause) in self.clauses.iter().enumerate() {
            if clause.numeric.is_empty() || self.is_sat(st, q) {
                continue;
            }
            if clause.finite.iter().any(|&c| self.size(st, c) > 1) {
                continue;
            }
            residuals.push(self.residual(st, &clause.body, false, None));
        }
        let mut atoms = Vec::new();
        let mut groups: Vec<Vec<Vec<&Constraint>>> = Vec::new();
        for r in &residuals {
            let mut mine = Vec::new();
            if conjunctive_atoms(r, &mut mine) {
                atoms.extend(mine);
            } else if let Res::Or(ds) = r {
                let mut alts = Vec::new();
                let linear = ds.iter().filter(|d| !matches!(d, Res::F)).all(|d| {
                    let mut alt = Vec::new();
                    let ok = conjunctive_atoms(d, &mut alt);
                    alts.push(alt);
                    ok
                });
                if linear {
                    groups.push(alts);
                }
            }
        }
        if atoms.len() < 2 && groups.is_empty() {
            return true;
        }
        let mut vars: Vec<CellId> = atoms
            .iter()
            .copied()
            .chain(groups.iter().flatten().flatten().copied())
            .flat_map(|c| c.expr.terms.iter().map(|(v, _)| *v))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        let mut cons: Vec<Constraint> = atoms.into_iter().cloned().collect();
        for v in vars {
            let (lo, hi) = self.bounds(st, v);
            cons.extend(Constraint::within(v, &Interval::closed(lo, hi)));
        }
        if !linear::feasible(&cons) {
            return false;
        }
        groups.iter().all(|alts| {
            alts.iter().any(|alt| {
                let mut with = cons.clone();
                with.extend(alt.iter().map(|c| (*c).clone()));
                linear::feasible(&with)
            })
        })
    }

    // -- leaves -------------------------------------------------------------

    /// Residuals of all unsatisfied clauses at a leaf, plus node bounds of
    /// the numeric cells they mention.
    pub fn leaf_residuals(&self, st: &State) -> (Vec<Res>, Vec<Constraint>) {
        let mut res = Vec::new();
        let mut vars = Vec::new();
        for (q, clause) in self.clauses.iter().enumerate() {
            if self.is_sat(st, q) {
                continue;
            }
            let r = self.residual(st, &clause.body, false, None);
            if matches!(r, Res::T) {
                continue;
            }
            vars.extend(clause.numeric.iter().copied());
            res.push(r);
        }
        vars.sort_unstable();
        vars.dedup();
        let mut bounds = Vec::new();
        for v in vars {
            let (lo, hi) = self.bounds(st, v);
            bounds.extend(Constraint::within(v, &Interval::closed(lo, hi)));
        }
        (res, bounds)
    }

    /// Enumerates the feasible conjunctive branches of a leaf, in order.
    pub fn branches(
        &self,
        st: &State,
        f: &mut dyn FnMut(&Engine, Branch) -> Result<Flow, SolveError>,
    ) -> Result<Flow, SolveError> {
        let (res, bounds) = self.leaf_residuals(st);
        let pending: Vec<&Res> = res.iter().rev().collect();
        let start = Branch { cons: bounds, free: Vec::new() };
        self.tableau(st, pending, start, f)
    }

    fn tableau(
        &self,
        st: &State,
        mut pending: Vec<&Res>,
        mut cur: Branch,
        f: &mut dyn FnMut(&Engine, Branch) -> Result<Flow, SolveError>,
    ) -> Result<Flow, SolveError> {
        while let Some(r) = pending.pop() {
            match r {
                Res::T => {}
                Res::F | Res::Unknown => return Ok(Flow::Continue),
                Res::Atom(c) => cur.cons.push(c.clone()),
                Res::Free(a) => cur.free.push(a.clone()),
                Res::And(v) => pending.extend(v.iter().rev()),
                Res::Or(v) => {
                    if self.deadline.expired() {
                        return Err(SolveError::Timeout);
                    }
                    if !linear::feasible(&cur.cons) {
                        return Ok(Flow::Continue);
                    }
                    for d in v {
                        let mut p = pending.clone();
                        p.push(d);
                        if self.tableau(st, p, cur.clone(), f)? == Flow::Stop {
                            return Ok(Flow::Stop);
                        }
                    }
                    return Ok(Flow::Continue);
                }
            }
        }
        match self.settle(st, cur) {
            Some(b) => f(self, b),
            None => Ok(Flow::Continue),
        }
    }

    /// Decides a branch. Relaxed non-linear atoms are re-checked after
    /// fixing their divisors to witness values; the returned branch then
    /// carries those extra constraints.
    fn settle(&self, st: &State, b: Branch) -> Option<Branch> {
        if b.free.is_empty() {
            return linear::feasible(&b.cons).then_some(b);
        }
        let w = linear::witness(&b.cons, &[]).ok()?;
        let mut divisors: Vec<CellId> = Vec::new();
        for a in &b.free {
            divisors.extend(divisor_cells(&a.lhs));
            divisors.extend(divisor_cells(&a.rhs));
        }
        divisors.sort_unstable();
        divisors.dedup();
        // the witness alone misses most solutions of `x op n / d`, so also
        // sample the divisor's range on this branch
        let samples: Vec<Vec<Rat>> = divisors
            .iter()
            .map(|&d| {
                let (lo, hi) = match linear::project(&b.cons, d) {
                    Ok(iv) => {
                        let (nlo, nhi) = self.bounds(st, d);
                        (iv.lo.map(|x| x.value).unwrap_or(nlo), iv.hi.map(|x| x.value).unwrap_or(nhi))
                    }
                    Err(_) => self.bounds(st, d),
                };
                let mut v = vec![w.get(&d).cloned().unwrap_or_else(|| lo.clone()), hi.clone(), lo.clone()];
                let span = &hi - &lo;
                for k in [2i64, 4, 8, 16, 64] {
                    for j in (1..k).step_by(2) {
                        v.push(&lo + &span * Rat::new(j, k));
                    }
                }
                v.retain(|x| !x.is_zero());
                v
            })
            .collect();
        let rounds = samples.iter().map(Vec::len).max().unwrap_or(0);
        let mut tried: Vec<Vec<Rat>> = Vec::new();
        for i in 0..rounds {
            let pick: Vec<Rat> = samples.iter().map(|s| s[i.min(s.len() - 1)].clone()).collect();
            if tried.contains(&pick) {
                continue;
            }
            if let Some(out) = self.settle_at(st, &b, &divisors, &pick) {
                return Some(out);
            }
            tried.push(pick);
        }
        None
    }

    fn settle_at(&self, st: &State, b: &Branch, divisors: &[CellId], pick: &[Rat]) -> Option<Branch> {
        let fixed: HashMap<CellId, Rat> = divisors.iter().copied().zip(pick.iter().cloned()).collect();
        let mut cons = b.cons.clone();
        for (d, v) in divisors.iter().zip(pick) {
            cons.push(Constraint::new(LinExpr::var(*d).sub(&LinExpr::constant(v.clone())), Rel::Eq));
        }
        for a in &b.free {
            let x = self.linear(st, &a.lhs, Some(&fixed)).ok()?;
            let y = self.linear(st, &a.rhs, Some(&fixed)).ok()?;
            match atom(a.op, x.sub(&y), a.negated) {
                Res::Atom(c) => cons.push(c),
                Res::Or(v) => {
                    // x ≠ y: keep the first side that is feasible
                    let mut chosen = None;
                    for r in v {
                        if let Res::Atom(c) = r {
                            let mut t = cons.clone();
                            t.push(c.clone());
                            if linear::feasible(&t) {
                                chosen = Some(c);
                                break;
                            }
                        }
                    }
                    cons.push(chosen?);
                }
                Res::T => {}
                _ => return None,
            }
        }
        linear::feasible(&cons).then(|| Branch { cons, free: b.free.clone() })
    }

    /// Total model at a leaf: open finite cells take their first candidate,
    /// numeric cells outside the branch their lower bound.
    pub fn model(&self, st: &State, b: &Branch, extra: &[Constraint]) -> Option<Vec<Value>> {
        let mut cons = b.cons.clone();
        cons.extend_from_slice(extra);
        let w = linear::witness(&cons, &[]).ok()?;
        let gp = self.gp;
        let mut out = Vec::with_capacity(gp.cells.len());
        for (c, cell) in gp.cells.iter().enumerate() {
            out.push(if cell.is_finite() {
                gp.value(self.value_at(c, self.first(st, c))).clone()
            } else {
                Value::Num(w.get(&c).cloned().unwrap_or_else(|| st.lo[cell.slot].clone()))
            });
        }
        Some(out)
    }

    /// Exact range of each numeric cell over a branch.
    pub fn branch_hull(&self, st: &State, b: &Branch) -> Vec<(CellId, Interval)> {
        let mut vars: Vec<CellId> = b.cons.iter().flat_map(|c| c.expr.terms.iter().map(|(v, _)| *v)).collect();
        vars.sort_unstable();
        vars.dedup();
        let mut out = Vec::with_capacity(vars.len());
        for v in vars {
            if let Ok(iv) = linear::project(&b.cons, v) {
                out.push((v, iv));
            } else {
                let (lo, hi) = self.bounds(st, v);
                out.push((v, Interval::closed(lo, hi)));
            }
        }
        out
    }
}

/// Override: treat a finite cell as fixed to one position during evaluation.
pub(crate) type Ov = Option<(CellId, usize)>;

fn cmp_ranges(op: NumOp, x: &Range, y: &Range) -> Tri {
    let le = |a: &Option<Rat>, b: &Option<Rat>| matches!((a, b), (Some(a), Some(b)) if a <= b);
    let lt = |a: &Option<Rat>, b: &Option<Rat>| matches!((a, b), (Some(a), Some(b)) if a < b);
    match op {
        NumOp::Le => {
            if le(&x.hi, &y.lo) {
                Tri::T
            } else if lt(&y.hi, &x.lo) {
                Tri::F
            } else {
                Tri::U
            }
        }
        NumOp::Lt => {
            if lt(&x.hi, &y.lo) {
                Tri::T
            } else if le(&y.hi, &x.lo) {
                Tri::F
            } else {
                Tri::U
            }
        }
        NumOp::Eq | NumOp::Ne => {
            let r = if le(&x.hi, &y.lo) && le(&y.hi, &x.lo) {
                Tri::T
            } else if lt(&x.hi, &y.lo) || lt(&y.hi, &x.lo) {
                Tri::F
            } else {
                Tri::U
            };
            if op == NumOp::Ne {
                r.not()
            } else {
                r
            }
        }
    }
}

/// Atom for `e op 0`, negated when `neg`.
fn atom(op: NumOp, e: LinExpr, neg: bool) -> Res {
    let lt = |e: LinExpr| Res::Atom(Constraint::new(e, Rel::Lt));
    let minus = |e: &LinExpr| e.scale(&-Rat::one());
    let r = match (op, neg) {
        (NumOp::Le, false) => Res::Atom(Constraint::new(e, Rel::Le)),
        (NumOp::Le, true) => lt(minus(&e)),
        (NumOp::Lt, false) => lt(e),
        (NumOp::Lt, true) => Res::Atom(Constraint::new(minus(&e), Rel::Le)),
        (NumOp::Eq, false) | (NumOp::Ne, true) => Res::Atom(Constraint::new(e, Rel::Eq)),
        (NumOp::Eq, true) | (NumOp::Ne, false) => {
            let m = minus(&e);
            Res::Or(vec![lt(e), lt(m)])
        }
    };
    // Decide variable-free atoms right away.
    match r {
        Res::Atom(c) if c.expr.is_constant() => {
            if c.holds(&HashMap::new()) == Some(true) {
                Res::T
            } else {
                Res::F
            }
        }
        Res::Or(v) => res_or(
            v.into_iter()
                .map(|r| match r {
                    Res::Atom(c) if c.expr.is_constant() => {
                        if c.holds(&HashMap::new()) == Some(true) {
                            Res::T
                        } else {
                            Res::F
                        }
                    }
                    r => r,
                })
                .collect(),
        ),
        r => r,
    }
}

fn res_and(parts: Vec<Res>) -> Res {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            Res::T => {}
            Res::F => return Res::F,
            Res::And(v) => out.extend(v),
            p => out.push(p),
        }
    }
    if out.iter().any(|r| matches!(r, Res::Unknown)) {
        return Res::Unknown;
    }
    match out.len() {
        0 => Res::T,
        1 => out.pop().expect("one"),
        _ => Res::And(out),
    }
}

fn res_or(parts: Vec<Res>) -> Res {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            Res::F => {}
            Res::T => return Res::T,
            Res::Or(v) => out.extend(v),
            p => out.push(p),
        }
    }
    if out.iter().any(|r| matches!(r, Res::Unknown)) {
        return Res::Unknown;
    }
    match out.len() {
        0 => Res::F,
        1 => out.pop().expect("one"),
        _ => Res::Or(out),
    }
}

/// Collects the atoms of a residual that is a plain conjunction.
fn conjunctive_atoms<'r>(r: &'r Res, out: &mut Vec<&'r Constraint>) -> bool {
    match r {
        Res::Atom(c) => {
            out.push(c);
            true
        }
        Res::And(v) => v.iter().all(|x| conjunctive_atoms(x, out)),
        _ => false,
    }
}

fn divisor_cells(t: &GTerm) -> Vec<CellId> {
    let mut out = Vec::new();
    fn walk(t: &GTerm, out: &mut Vec<CellId>, under_div: bool) {
        match t {
            GTerm::Cell(c) if under_div => out.push(*c),
            GTerm::Case(_, arms) => arms.iter().for_each(|a| walk(a, out, under_div)),
            GTerm::Neg(a) => walk(a, out, under_div),
            GTerm::Add(a, b) | GTerm::Sub(a, b) | GTerm::Mul(a, b) => {
                walk(a, out, under_div);
                walk(b, out, under_div);
            }
            GTerm::Div(a, b) => {
                walk(a, out, under_div);
                walk(b, out, true);
            }
            _ => {}
        }
    }
    walk(t, &mut out, false);
    out
}

/// Converts a numeric interval restriction into an exact bound formula.
pub(crate) fn interval_formula(cell: CellId, iv: &Interval) -> GFormula {
    let x = GTerm::Cell(cell);
    let mut parts = Vec::new();
    if let Some(Bound { value, strict }) = &iv.lo {
        let op = if *strict { NumOp::Lt } else { NumOp::Le };
        parts.push(GFormula::NumCmp(op, GTerm::Num(value.clone()), x.clone()));
    }
    if let Some(Bound { value, strict }) = &iv.hi {
        let op = if *strict { NumOp::Lt } else { NumOp::Le };
        parts.push(GFormula::NumCmp(op, x.clone(), GTerm::Num(value.clone())));
    }
    crate::ground::and(parts)
}
