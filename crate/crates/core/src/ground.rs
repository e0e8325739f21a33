//! Instantiation of a theory over the finite domains of its vocabulary.
//!
//! Every `(symbol, args)` pair becomes a [`Cell`]. Enumerated, boolean and
//! integer cells are *finite*: their candidate values are listed explicitly.
//! Rational cells are *numeric* and range over an interval. Given (catalog)
//! values are substituted while grounding, so the clauses only mention cells
//! that can actually vary.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{
    well_formed, CmpOp, Formula, Key, Origin, PartialStructure, Restriction, Term, Theory, TypeKind, ValidationError,
    Value, Vocabulary,
};
use crate::rational::Rat;

pub type CellId = usize;
pub type ValueId = u32;

/// Largest integer type expanded into an explicit candidate list.
const MAX_INT_DOMAIN: i64 = 100_000;

#[derive(Clone, Debug)]
pub struct GroundOptions {
    pub max_cells: u128,
    pub max_clauses: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions { max_cells: 1_000_000, max_clauses: 1_000_000 }
    }
}

#[derive(Debug, Error)]
pub enum GroundError {
    #[error("knowledge base is not well formed ({} error(s)); first: {}", .0.len(), .0[0])]
    Invalid(Vec<ValidationError>),
    #[error("grounding needs {needed} {what}, budget is {budget}")]
    Capacity { what: &'static str, needed: u128, budget: u128 },
    #[error("`{symbol}` applied outside its domain to `{value}`")]
    OutOfDomain { symbol: String, value: String },
    #[error("unsupported argument expression in `{0}`")]
    Unsupported(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// Candidate values in declaration order (`false` before `true`).
    Finite(Vec<ValueId>),
    Numeric {
        lo: Rat,
        hi: Rat,
    },
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub key: Key,
    pub symbol: usize,
    pub kind: CellKind,
    /// Value fixed by a given assignment.
    pub fixed: Option<Value>,
    /// Index into the finite or numeric part of a search state.
    pub(crate) slot: usize,
}

impl Cell {
    pub fn is_finite(&self) -> bool {
        matches!(self.kind, CellKind::Finite(_))
    }
}

/// A ground term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GTerm {
    Val(ValueId),
    Num(Rat),
    Cell(CellId),
    /// `arms[i]` is the value when the selector cell takes its i-th base
    /// candidate; this is how `f(g)` is grounded when `g` is not fixed.
    Case(CellId, Vec<GTerm>),
    Neg(Box<GTerm>),
    Add(Box<GTerm>, Box<GTerm>),
    Sub(Box<GTerm>, Box<GTerm>),
    Mul(Box<GTerm>, Box<GTerm>),
    Div(Box<GTerm>, Box<GTerm>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NumOp {
    Eq,
    Ne,
    Le,
    Lt,
}

/// A ground formula. `Ge`/`Gt` are normalized away by swapping operands.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GFormula {
    Const(bool),
    SymEq(GTerm, GTerm),
    NumCmp(NumOp, GTerm, GTerm),
    Not(Box<GFormula>),
    And(Vec<GFormula>),
    Or(Vec<GFormula>),
    Iff(Box<GFormula>, Box<GFormula>),
}

impl GFormula {
    pub fn not(f: GFormula) -> GFormula {
        match f {
            GFormula::Const(b) => GFormula::Const(!b),
            GFormula::Not(g) => *g,
            g => GFormula::Not(Box::new(g)),
        }
    }
}

/// One instance of a theory formula.
#[derive(Clone, Debug)]
pub struct Clause {
    /// Index of the originating formula in the theory.
    pub formula: usize,
    /// Quantifier instantiation that produced this clause.
    pub bindings: Vec<(String, Value)>,
    pub body: GFormula,
    pub finite: Vec<CellId>,
    pub numeric: Vec<CellId>,
}

impl Clause {
    pub(crate) fn new(formula: usize, bindings: Vec<(String, Value)>, body: GFormula, gp: &GroundProblem) -> Self {
        let mut finite = Vec::new();
        let mut numeric = Vec::new();
        collect_formula(&body, gp, &mut finite, &mut numeric);
        finite.sort_unstable();
        finite.dedup();
        numeric.sort_unstable();
        numeric.dedup();
        Clause { formula, bindings, body, finite, numeric }
    }
}

fn collect_formula(f: &GFormula, gp: &GroundProblem, fin: &mut Vec<CellId>, num: &mut Vec<CellId>) {
    match f {
        GFormula::Const(_) => {}
        GFormula::SymEq(a, b) | GFormula::NumCmp(_, a, b) => {
            collect_term(a, gp, fin, num);
            collect_term(b, gp, fin, num);
        }
        GFormula::Not(g) => collect_formula(g, gp, fin, num),
        GFormula::And(v) | GFormula::Or(v) => v.iter().for_each(|g| collect_formula(g, gp, fin, num)),
        GFormula::Iff(a, b) => {
            collect_formula(a, gp, fin, num);
            collect_formula(b, gp, fin, num);
        }
    }
}

fn collect_term(t: &GTerm, gp: &GroundProblem, fin: &mut Vec<CellId>, num: &mut Vec<CellId>) {
    match t {
        GTerm::Val(_) | GTerm::Num(_) => {}
        GTerm::Cell(c) => {
            if gp.cells[*c].is_finite() {
                fin.push(*c)
            } else {
                num.push(*c)
            }
        }
        GTerm::Case(c, arms) => {
            fin.push(*c);
            arms.iter().for_each(|a| collect_term(a, gp, fin, num));
        }
        GTerm::Neg(a) => collect_term(a, gp, fin, num),
        GTerm::Add(a, b) | GTerm::Sub(a, b) | GTerm::Mul(a, b) | GTerm::Div(a, b) => {
            collect_term(a, gp, fin, num);
            collect_term(b, gp, fin, num);
        }
    }
}

/// A theory instantiated over finite domains. Immutable once built.
#[derive(Clone, Debug)]
pub struct GroundProblem {
    pub vocabulary: Vocabulary,
    pub theory: Theory,
    pub values: Vec<Value>,
    value_index: HashMap<Value, ValueId>,
    pub cells: Vec<Cell>,
    cell_index: HashMap<Key, CellId>,
    pub clauses: Vec<Clause>,
    /// Given interval restrictions; always in force.
    pub given: Vec<(CellId, Restriction)>,
    /// Word offset and length of each finite slot.
    pub(crate) finite_layout: Vec<(usize, usize)>,
    pub(crate) finite_words: usize,
    pub(crate) numeric_slots: usize,
    /// Cells of each finite slot and numeric slot, respectively.
    pub(crate) finite_cells: Vec<CellId>,
    pub(crate) numeric_cells: Vec<CellId>,
}

impl GroundProblem {
    pub fn cell(&self, key: &Key) -> Option<CellId> {
        self.cell_index.get(key).copied()
    }

    pub fn value_id(&self, v: &Value) -> Option<ValueId> {
        self.value_index.get(v).copied()
    }

    pub fn value(&self, id: ValueId) -> &Value {
        &self.values[id as usize]
    }

    /// Base candidates of a finite cell, as values.
    pub fn candidates(&self, cell: CellId) -> Vec<Value> {
        match &self.cells[cell].kind {
            CellKind::Finite(ids) => ids.iter().map(|&i| self.values[i as usize].clone()).collect(),
            CellKind::Numeric { .. } => Vec::new(),
        }
    }

    /// Position of `value` among the base candidates of a finite cell.
    pub(crate) fn position(&self, cell: CellId, value: ValueId) -> Option<usize> {
        match &self.cells[cell].kind {
            CellKind::Finite(ids) => ids.iter().position(|&v| v == value),
            CellKind::Numeric { .. } => None,
        }
    }

    pub fn cells_of_symbol(&self, symbol: &str) -> Vec<CellId> {
        match self.vocabulary.symbol_index(symbol) {
            Some(s) => (0..self.cells.len()).filter(|&c| self.cells[c].symbol == s).collect(),
            None => Vec::new(),
        }
    }

    /// Renders a ground term for diagnostics.
    pub fn describe_term(&self, t: &GTerm) -> String {
        match t {
            GTerm::Val(v) => self.values[*v as usize].to_string(),
            GTerm::Num(n) => n.to_string(),
            GTerm::Cell(c) => self.cells[*c].key.to_string(),
            GTerm::Case(c, _) => format!("case({})", self.cells[*c].key),
            GTerm::Neg(a) => format!("-({})", self.describe_term(a)),
            GTerm::Add(a, b) => format!("({} + {})", self.describe_term(a), self.describe_term(b)),
            GTerm::Sub(a, b) => format!("({} - {})", self.describe_term(a), self.describe_term(b)),
            GTerm::Mul(a, b) => format!("({} * {})", self.describe_term(a), self.describe_term(b)),
            GTerm::Div(a, b) => format!("({} / {})", self.describe_term(a), self.describe_term(b)),
        }
    }

    /// Grounds a closed numeric term, e.g. an optimization objective.
    pub fn ground_term(&self, t: &Term) -> Result<GTerm, GroundError> {
        let mut g = Grounder { gp: self, env: Vec::new() };
        g.term(t)
    }

    /// Copy with an unconstrained twin of each listed cell appended. The
    /// twins have no key in the index and take their declared domain.
    pub(crate) fn with_twins(&self, of: &[CellId]) -> (GroundProblem, Vec<CellId>) {
        let mut gp = self.clone();
        let mut twins = Vec::with_capacity(of.len());
        for &c in of {
            let mut cell = self.cells[c].clone();
            cell.fixed = None;
            let id = gp.cells.len();
            cell.slot = match &cell.kind {
                CellKind::Finite(vals) => {
                    gp.finite_layout.push((gp.finite_words, vals.len()));
                    gp.finite_words += vals.len().div_ceil(64);
                    gp.finite_cells.push(id);
                    gp.finite_layout.len() - 1
                }
                CellKind::Numeric { .. } => {
                    gp.numeric_slots += 1;
                    gp.numeric_cells.push(id);
                    gp.numeric_slots - 1
                }
            };
            gp.cells.push(cell);
            twins.push(id);
        }
        (gp, twins)
    }

    /// Grounds a closed formula against this problem's cells.
    pub fn ground_formula(&self, f: &Formula) -> Result<GFormula, GroundError> {
        let mut g = Grounder { gp: self, env: Vec::new() };
        g.formula(f)
    }
}

/// Grounds `th` over the finite domains of `voc`. Given assignments in `st`
/// are substituted; user assignments are ignored here and passed to the
/// inference calls instead.
pub fn ground(voc: &Vocabulary, th: &Theory, st: &PartialStructure) -> Result<GroundProblem, GroundError> {
    ground_with(voc, th, st, &GroundOptions::default())
}

pub fn ground_with(
    voc: &Vocabulary,
    th: &Theory,
    st: &PartialStructure,
    opts: &GroundOptions,
) -> Result<GroundProblem, GroundError> {
    let errors = well_formed(voc, th, st);
    if !errors.is_empty() {
        return Err(GroundError::Invalid(errors));
    }

    let mut needed: u128 = 0;
    for s in &voc.symbols {
        let mut n: u128 = 1;
        for a in &s.args {
            n = n.saturating_mul(voc.type_decl(a).and_then(|d| d.size()).unwrap_or(u128::MAX));
        }
        needed = needed.saturating_add(n);
    }
    if needed > opts.max_cells {
        return Err(GroundError::Capacity { what: "cells", needed, budget: opts.max_cells });
    }
    for t in &voc.types {
        if let TypeKind::Int { lo, hi } = t.kind {
            if hi.saturating_sub(lo) > MAX_INT_DOMAIN {
                let needed = (hi as i128 - lo as i128) as u128;
                return Err(GroundError::Capacity { what: "integer values", needed, budget: MAX_INT_DOMAIN as u128 });
            }
        }
    }

    let mut gp = GroundProblem {
        vocabulary: voc.clone(),
        theory: th.clone(),
        values: Vec::new(),
        value_index: HashMap::new(),
        cells: Vec::new(),
        cell_index: HashMap::new(),
        clauses: Vec::new(),
        given: Vec::new(),
        finite_layout: Vec::new(),
        finite_words: 0,
        numeric_slots: 0,
        finite_cells: Vec::new(),
        numeric_cells: Vec::new(),
    };

    let intern = |gp: &mut GroundProblem, v: Value| -> ValueId {
        if let Some(&id) = gp.value_index.get(&v) {
            return id;
        }
        let id = gp.values.len() as ValueId;
        gp.values.push(v.clone());
        gp.value_index.insert(v, id);
        id
    };
    intern(&mut gp, Value::Bool(false));
    intern(&mut gp, Value::Bool(true));
    for t in &voc.types {
        if let TypeKind::Enum(cs) = &t.kind {
            for c in cs {
                intern(&mut gp, Value::Sym(c.clone()));
            }
        }
    }
    for (si, s) in voc.symbols.iter().enumerate() {
        let decl = voc.type_decl(&s.result).expect("checked by well_formed");
        let kind = match decl.numeric_range() {
            Some((lo, hi)) if !decl.is_finite() => CellKind::Numeric { lo, hi },
            _ => {
                let vals = decl.values().expect("finite type");
                CellKind::Finite(vals.into_iter().map(|v| intern(&mut gp, v)).collect())
            }
        };
        for args in voc.arg_tuples(s).expect("finite argument types") {
            let key = Key { symbol: s.name.clone(), args };
            let id = gp.cells.len();
            let slot = match &kind {
                CellKind::Finite(vals) => {
                    let words = vals.len().div_ceil(64);
                    gp.finite_layout.push((gp.finite_words, vals.len()));
                    gp.finite_words += words;
                    gp.finite_cells.push(id);
                    gp.finite_layout.len() - 1
                }
                CellKind::Numeric { .. } => {
                    gp.numeric_slots += 1;
                    gp.numeric_cells.push(id);
                    gp.numeric_slots - 1
                }
            };
            gp.cell_index.insert(key.clone(), id);
            gp.cells.push(Cell { key, symbol: si, kind: kind.clone(), fixed: None, slot });
        }
    }

    for a in st.iter() {
        if a.origin != Origin::Given {
            continue;
        }
        let id = gp.cell_index[&a.key];
        match &a.value {
            Restriction::Exact(v) => gp.cells[id].fixed = Some(v.clone()),
            Restriction::Within(_) => gp.given.push((id, a.value.clone())),
        }
    }

    let mut clauses = Vec::new();
    {
        let mut g = Grounder { gp: &gp, env: Vec::new() };
        for (fi, lf) in th.formulas.iter().enumerate() {
            g.top(fi, &lf.formula, &mut clauses, opts.max_clauses)?;
        }
    }
    gp.clauses = clauses.into_iter().map(|(fi, b, body)| Clause::new(fi, b, body, &gp)).collect();
    Ok(gp)
}

struct Grounder<'a> {
    gp: &'a GroundProblem,
    /// Bound variables with their type name and value.
    env: Vec<(String, String, Value)>,
}

type RawClause = (usize, Vec<(String, Value)>, GFormula);

impl<'a> Grounder<'a> {
    fn top(&mut self, fi: usize, f: &Formula, out: &mut Vec<RawClause>, budget: usize) -> Result<(), GroundError> {
        match f {
            Formula::Forall(v, ty, body) => {
                let values = self.gp.vocabulary.type_decl(ty).and_then(|d| d.values()).unwrap_or_default();
                for val in values {
                    self.env.push((v.clone(), ty.clone(), val));
                    let r = self.top(fi, body, out, budget);
                    self.env.pop();
                    r?;
                }
                Ok(())
            }
            Formula::And(parts) => {
                for p in parts {
                    self.top(fi, p, out, budget)?;
                }
                Ok(())
            }
            _ => {
                if out.len() >= budget {
                    return Err(GroundError::Capacity {
                        what: "clauses",
                        needed: out.len() as u128 + 1,
                        budget: budget as u128,
                    });
                }
                let body = self.formula(f)?;
                let bindings = self.env.iter().map(|(n, _, v)| (n.clone(), v.clone())).collect();
                out.push((fi, bindings, body));
                Ok(())
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> Result<GFormula, GroundError> {
        Ok(match f {
            Formula::Bool(b) => GFormula::Const(*b),
            Formula::Pred(t) => {
                let t = self.term(t)?;
                self.sym_eq(t, GTerm::Val(self.gp.value_index[&Value::Bool(true)]))
            }
            Formula::Cmp(op, a, b) => {
                if self.is_numeric(a) || self.is_numeric(b) {
                    let x = self.term(a)?;
                    let y = self.term(b)?;
                    num_cmp(*op, x, y)
                } else {
                    let x = self.term(a)?;
                    let y = self.term(b)?;
                    let eq = self.sym_eq(x, y);
                    match op {
                        CmpOp::Eq => eq,
                        _ => GFormula::not(eq),
                    }
                }
            }
            Formula::Not(g) => GFormula::not(self.formula(g)?),
            Formula::And(parts) => {
                let mut v = Vec::with_capacity(parts.len());
                for p in parts {
                    v.push(self.formula(p)?);
                }
                and(v)
            }
            Formula::Or(parts) => {
                let mut v = Vec::with_capacity(parts.len());
                for p in parts {
                    v.push(self.formula(p)?);
                }
                or(v)
            }
            Formula::Implies(a, b) => {
                let a = self.formula(a)?;
                let b = self.formula(b)?;
                or(vec![GFormula::not(a), b])
            }
            Formula::Equiv(a, b) => {
                let a = self.formula(a)?;
                let b = self.formula(b)?;
                match (a, b) {
                    (GFormula::Const(x), g) | (g, GFormula::Const(x)) => {
                        if x {
                            g
                        } else {
                            GFormula::not(g)
                        }
                    }
                    (a, b) => GFormula::Iff(Box::new(a), Box::new(b)),
                }
            }
            Formula::Forall(v, ty, body) | Formula::Exists(v, ty, body) => {
                let values = self.gp.vocabulary.type_decl(ty).and_then(|d| d.values()).unwrap_or_default();
                let mut parts = Vec::with_capacity(values.len());
                for val in values {
                    self.env.push((v.clone(), ty.clone(), val));
                    let r = self.formula(body);
                    self.env.pop();
                    parts.push(r?);
                }
                if matches!(f, Formula::Forall(..)) {
                    and(parts)
                } else {
                    or(parts)
                }
            }
        })
    }

    fn sym_eq(&self, a: GTerm, b: GTerm) -> GFormula {
        match (&a, &b) {
            (GTerm::Val(x), GTerm::Val(y)) => GFormula::Const(x == y),
            (GTerm::Cell(c), GTerm::Val(v)) | (GTerm::Val(v), GTerm::Cell(c)) => {
                if self.gp.position(*c, *v).is_none() {
                    GFormula::Const(false)
                } else {
                    GFormula::SymEq(GTerm::Cell(*c), GTerm::Val(*v))
                }
            }
            _ => GFormula::SymEq(a, b),
        }
    }

    fn is_numeric(&self, t: &Term) -> bool {
        let voc = &self.gp.vocabulary;
        match t {
            Term::Const(Value::Num(_)) => true,
            Term::Const(_) => false,
            Term::Var(v) => self
                .env
                .iter()
                .rev()
                .find(|(n, _, _)| n == v)
                .and_then(|(_, ty, _)| voc.type_decl(ty))
                .is_some_and(|d| d.is_numeric()),
            Term::App(name, _) => {
                voc.symbol(name).and_then(|s| voc.type_decl(&s.result)).is_some_and(|d| d.is_numeric())
            }
            _ => true,
        }
    }

    fn term(&mut self, t: &Term) -> Result<GTerm, GroundError> {
        Ok(match t {
            Term::Var(v) => {
                let (_, _, val) = self.env.iter().rev().find(|(n, _, _)| n == v).expect("closed formula");
                self.constant(val.clone())
            }
            Term::Const(v) => self.constant(v.clone()),
            Term::App(name, args) => {
                let sym = self.gp.vocabulary.symbol_index(name).expect("checked by well_formed");
                let mut gargs = Vec::with_capacity(args.len());
                for a in args {
                    gargs.push(self.term(a)?);
                }
                self.apply(sym, gargs)?
            }
            Term::Neg(a) => match self.term(a)? {
                GTerm::Num(n) => GTerm::Num(-n),
                x => GTerm::Neg(Box::new(x)),
            },
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                let x = self.term(a)?;
                let y = self.term(b)?;
                arith(t, x, y)
            }
        })
    }

    fn constant(&self, v: Value) -> GTerm {
        match v {
            Value::Num(n) => GTerm::Num(n),
            v => GTerm::Val(self.gp.value_index[&v]),
        }
    }

    fn apply(&self, sym: usize, args: Vec<GTerm>) -> Result<GTerm, GroundError> {
        let decl = &self.gp.vocabulary.symbols[sym];
        let Some(i) = args.iter().position(|a| !matches!(a, GTerm::Val(_) | GTerm::Num(_))) else {
            let mut key_args = Vec::with_capacity(args.len());
            for a in &args {
                key_args.push(match a {
                    GTerm::Val(v) => self.gp.values[*v as usize].clone(),
                    GTerm::Num(n) => Value::Num(n.clone()),
                    _ => unreachable!(),
                });
            }
            let key = Key { symbol: decl.name.clone(), args: key_args };
            let Some(&cell) = self.gp.cell_index.get(&key) else {
                let value = key.args.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
                return Err(GroundError::OutOfDomain { symbol: decl.name.clone(), value });
            };
            return Ok(match &self.gp.cells[cell].fixed {
                Some(v) => self.constant(v.clone()),
                None => GTerm::Cell(cell),
            });
        };
        let (selector, arms) = match &args[i] {
            GTerm::Cell(c) => {
                let CellKind::Finite(vals) = &self.gp.cells[*c].kind else {
                    return Err(GroundError::Unsupported(decl.name.clone()));
                };
                (*c, vals.iter().map(|&v| self.constant(self.gp.values[v as usize].clone())).collect::<Vec<_>>())
            }
            GTerm::Case(c, arms) => (*c, arms.clone()),
            _ => return Err(GroundError::Unsupported(decl.name.clone())),
        };
        let mut out = Vec::with_capacity(arms.len());
        for arm in arms {
            let mut a = args.clone();
            a[i] = arm;
            out.push(self.apply(sym, a)?);
        }
        Ok(case(selector, out))
    }
}

/// `f` with every occurrence of cell `from` replaced by `to`.
pub(crate) fn rename(f: &GFormula, from: CellId, to: CellId) -> GFormula {
    fn term(t: &GTerm, from: CellId, to: CellId) -> GTerm {
        let sub = |a: &GTerm| Box::new(term(a, from, to));
        match t {
            GTerm::Cell(c) if *c == from => GTerm::Cell(to),
            GTerm::Case(c, arms) => {
                let c = if *c == from { to } else { *c };
                GTerm::Case(c, arms.iter().map(|a| term(a, from, to)).collect())
            }
            GTerm::Neg(a) => GTerm::Neg(sub(a)),
            GTerm::Add(a, b) => GTerm::Add(sub(a), sub(b)),
            GTerm::Sub(a, b) => GTerm::Sub(sub(a), sub(b)),
            GTerm::Mul(a, b) => GTerm::Mul(sub(a), sub(b)),
            GTerm::Div(a, b) => GTerm::Div(sub(a), sub(b)),
            t => t.clone(),
        }
    }
    let f2 = |g: &GFormula| rename(g, from, to);
    match f {
        GFormula::Const(b) => GFormula::Const(*b),
        GFormula::SymEq(a, b) => GFormula::SymEq(term(a, from, to), term(b, from, to)),
        GFormula::NumCmp(op, a, b) => GFormula::NumCmp(*op, term(a, from, to), term(b, from, to)),
        GFormula::Not(g) => GFormula::Not(Box::new(f2(g))),
        GFormula::And(v) => GFormula::And(v.iter().map(f2).collect()),
        GFormula::Or(v) => GFormula::Or(v.iter().map(f2).collect()),
        GFormula::Iff(a, b) => GFormula::Iff(Box::new(f2(a)), Box::new(f2(b))),
    }
}

pub(crate) fn case(selector: CellId, arms: Vec<GTerm>) -> GTerm {
    if arms.windows(2).all(|w| w[0] == w[1]) && !arms.is_empty() {
        return arms.into_iter().next().expect("non-empty");
    }
    GTerm::Case(selector, arms)
}

fn arith(t: &Term, x: GTerm, y: GTerm) -> GTerm {
    if let (GTerm::Num(a), GTerm::Num(b)) = (&x, &y) {
        match t {
            Term::Add(..) => return GTerm::Num(a + b),
            Term::Sub(..) => return GTerm::Num(a - b),
            Term::Mul(..) => return GTerm::Num(a * b),
            Term::Div(..) if !b.is_zero() => return GTerm::Num(a / b),
            Term::Div(..) => return GTerm::Num(Rat::zero()),
            _ => {}
        }
    }
    let (x, y) = (Box::new(x), Box::new(y));
    match t {
        Term::Add(..) => GTerm::Add(x, y),
        Term::Sub(..) => GTerm::Sub(x, y),
        Term::Mul(..) => GTerm::Mul(x, y),
        _ => GTerm::Div(x, y),
    }
}

pub(crate) fn num_cmp(op: CmpOp, x: GTerm, y: GTerm) -> GFormula {
    let (op, x, y) = match op {
        CmpOp::Eq => (NumOp::Eq, x, y),
        CmpOp::Ne => (NumOp::Ne, x, y),
        CmpOp::Le => (NumOp::Le, x, y),
        CmpOp::Lt => (NumOp::Lt, x, y),
        CmpOp::Ge => (NumOp::Le, y, x),
        CmpOp::Gt => (NumOp::Lt, y, x),
    };
    if let (GTerm::Num(a), GTerm::Num(b)) = (&x, &y) {
        return GFormula::Const(match op {
            NumOp::Eq => a == b,
            NumOp::Ne => a != b,
            NumOp::Le => a <= b,
            NumOp::Lt => a < b,
        });
    }
    GFormula::NumCmp(op, x, y)
}

pub(crate) fn and(parts: Vec<GFormula>) -> GFormula {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            GFormula::Const(true) => {}
            GFormula::Const(false) => return GFormula::Const(false),
            GFormula::And(inner) => out.extend(inner),
            p => out.push(p),
        }
    }
    match out.len() {
        0 => GFormula::Const(true),
        1 => out.pop().expect("one element"),
        _ => GFormula::And(out),
    }
}

pub(crate) fn or(parts: Vec<GFormula>) -> GFormula {
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match p {
            GFormula::Const(false) => {}
            GFormula::Const(true) => return GFormula::Const(true),
            GFormula::Or(inner) => out.extend(inner),
            p => out.push(p),
        }
    }
    match out.len() {
        0 => GFormula::Const(false),
        1 => out.pop().expect("one element"),
        _ => GFormula::Or(out),
    }
}
