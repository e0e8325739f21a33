//! Interactive sessions: user choices, re-propagation and the JSON views
//! clients render.
//!
//! A [`Session`] is a plain value. Every operation takes the current one and
//! returns the next, so a view is a function of the knowledge base and the
//! ordered user assignments alone. Values travel as strings on the wire;
//! numbers as exact decimals (or `p/q`).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adhesive::{param_of, remaining_in, Remaining, SELECTION};
use crate::ground::{ground, CellId, GroundError, GroundProblem};
use crate::model::{
    Assignment, Category, Interval, Key, Origin, PartialStructure, Restriction, Term, TypeDecl, TypeKind, Value,
    Vocabulary, BOOL_TYPE,
};
use crate::parser::KnowledgeBase;
use crate::rational::Rat;
use crate::solve::{
    explain_inconsistency, explain_value, optimize, propagate, relevance_of, Budget, Direction, Domain, Explanation,
    OptimizationGoal, OptimizeResult, PropagationResult, Relevance, SolveError, Status, Target,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsultError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{0}` is not shown to users")]
    Hidden(String),
    #[error("`{symbol}` takes {expected} argument(s), got {got}")]
    Arity { symbol: String, expected: usize, got: usize },
    #[error("`{value}` is not a value of type `{ty}`")]
    Type { value: String, ty: String },
    #[error("`{value}` is no longer a candidate for `{key}`")]
    NotACandidate { key: String, value: String },
    #[error("`{0}` has no user assignment")]
    NoUserAssignment(String),
    #[error("`{0}` is not propagated")]
    NotPropagated(String),
    #[error("the session is inconsistent")]
    Inconsistent,
    #[error("the session is consistent")]
    Consistent,
    #[error("`{0}` has no finite optimum")]
    Unbounded(String),
    #[error("no model has a known value for `{0}`")]
    NoOptimum(String),
    #[error("`{0}` is not numeric")]
    NotNumeric(String),
    #[error("time budget exhausted")]
    Timeout,
    #[error("{0}")]
    Ground(String),
    #[error("{0}")]
    Solve(SolveError),
}

impl From<GroundError> for ConsultError {
    fn from(e: GroundError) -> Self {
        ConsultError::Ground(e.to_string())
    }
}

impl From<SolveError> for ConsultError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Timeout => ConsultError::Timeout,
            SolveError::Inconsistent => ConsultError::Inconsistent,
            SolveError::Consistent => ConsultError::Consistent,
            other => ConsultError::Solve(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileKind {
    Bool,
    Enum,
    Number,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireInterval {
    pub lo: Option<String>,
    pub hi: Option<String>,
    #[serde(default)]
    pub lo_strict: bool,
    #[serde(default)]
    pub hi_strict: bool,
}

impl From<&Interval> for WireInterval {
    fn from(iv: &Interval) -> Self {
        WireInterval {
            lo: iv.lo.as_ref().map(|b| b.value.to_string()),
            hi: iv.hi.as_ref().map(|b| b.value.to_string()),
            lo_strict: iv.lo.as_ref().is_some_and(|b| b.strict),
            hi_strict: iv.hi.as_ref().is_some_and(|b| b.strict),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireAssignment {
    pub symbol: String,
    pub args: Vec<String>,
    pub label: String,
    /// Exact value, or `None` when only `bounds` are known.
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bounds: Option<WireInterval>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub symbol: String,
    pub args: Vec<String>,
    pub label: String,
    pub category: Category,
    #[serde(rename = "type")]
    pub ty: String,
    pub kind: TileKind,
    pub value: Option<String>,
    pub origin: Option<Origin>,
    /// Remaining values of a finite tile, in declaration order.
    pub candidates: Option<Vec<String>>,
    /// Feasible range of a numeric tile.
    pub bounds: Option<WireInterval>,
    pub relevant: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireLaw {
    pub id: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireExplanation {
    /// The explained value; `None` for an inconsistency.
    pub target: Option<WireAssignment>,
    pub assignments: Vec<WireAssignment>,
    pub laws: Vec<WireLaw>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub status: Status,
    pub tiles: Vec<Tile>,
    pub remaining: Remaining,
    /// User assignments in entry order.
    pub choices: Vec<WireAssignment>,
    /// Attached whenever the status is inconsistent.
    pub inconsistency: Option<WireExplanation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetRequest {
    pub symbol: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    pub symbol: String,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizeResponse {
    pub symbol: String,
    pub direction: Direction,
    pub value: String,
    /// The selected adhesive, when the KB has one.
    pub adhesive: Option<String>,
    /// Values of every tile in the optimal model.
    pub model: Vec<WireAssignment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaSymbol {
    pub symbol: String,
    pub args: Vec<String>,
    pub label: String,
    pub category: Category,
    #[serde(rename = "type")]
    pub ty: String,
    pub kind: TileKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaType {
    pub name: String,
    pub kind: TileKind,
    pub values: Option<Vec<String>>,
    pub range: Option<WireInterval>,
}

/// Tile metadata: categories, types and labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbSchema {
    pub categories: Vec<Category>,
    pub types: Vec<SchemaType>,
    pub symbols: Vec<SchemaSymbol>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    pub user: Vec<Assignment>,
    pub propagation: PropagationResult,
    pub view: StateView,
}

#[derive(Clone, Debug)]
struct TileSpec {
    key: Key,
    cell: CellId,
    label: String,
    category: Category,
    ty: String,
    kind: TileKind,
}

/// A loaded knowledge base, shared read-only by all of its sessions.
#[derive(Debug)]
pub struct Consultant {
    kb: KnowledgeBase,
    gp: GroundProblem,
    tiles: Vec<TileSpec>,
    budget: Budget,
    initial: OnceLock<Result<Session, ConsultError>>,
}

fn kind_of(voc: &Vocabulary, ty: &str) -> TileKind {
    match voc.type_decl(ty).map(|t| &t.kind) {
        Some(TypeKind::Bool) | None if ty == BOOL_TYPE => TileKind::Bool,
        Some(TypeKind::Int { .. } | TypeKind::Real { .. }) => TileKind::Number,
        _ => TileKind::Enum,
    }
}

fn type_decl(voc: &Vocabulary, ty: &str) -> Option<TypeDecl> {
    if ty == BOOL_TYPE {
        return Some(TypeDecl { name: BOOL_TYPE.into(), kind: TypeKind::Bool });
    }
    voc.type_decl(ty).cloned()
}

/// Reads a wire value as a value of type `ty`.
pub fn parse_value(voc: &Vocabulary, ty: &str, text: &str) -> Result<Value, ConsultError> {
    let bad = || ConsultError::Type { value: text.to_string(), ty: ty.to_string() };
    let decl = type_decl(voc, ty).ok_or_else(bad)?;
    let v = match &decl.kind {
        TypeKind::Bool => match text.trim() {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => return Err(bad()),
        },
        TypeKind::Enum(_) => Value::Sym(text.trim().to_string()),
        TypeKind::Int { .. } | TypeKind::Real { .. } => Value::Num(Rat::parse(text).ok_or_else(bad)?),
    };
    if decl.contains(&v) {
        Ok(v)
    } else {
        Err(bad())
    }
}

impl Consultant {
    pub fn new(kb: KnowledgeBase, budget: Budget) -> Result<Self, ConsultError> {
        let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure)?;
        let mut tiles = Vec::new();
        for s in &kb.vocabulary.symbols {
            if s.category == Category::Hidden {
                continue;
            }
            for args in kb.vocabulary.arg_tuples(s).unwrap_or_default() {
                let key = Key { symbol: s.name.clone(), args };
                let Some(cell) = gp.cell(&key) else { continue };
                tiles.push(TileSpec {
                    key,
                    cell,
                    label: s.display_label().to_string(),
                    category: s.category,
                    ty: s.result.clone(),
                    kind: kind_of(&kb.vocabulary, &s.result),
                });
            }
        }
        Ok(Consultant { kb, gp, tiles, budget, initial: OnceLock::new() })
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn ground_problem(&self) -> &GroundProblem {
        &self.gp
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn schema(&self) -> KbSchema {
        let voc = &self.kb.vocabulary;
        let mut used: Vec<&str> = Vec::new();
        let mut symbols = Vec::new();
        for s in voc.symbols.iter().filter(|s| s.category != Category::Hidden) {
            for ty in s.args.iter().chain(std::iter::once(&s.result)) {
                if !used.contains(&ty.as_str()) {
                    used.push(ty);
                }
            }
            symbols.push(SchemaSymbol {
                symbol: s.name.clone(),
                args: s.args.clone(),
                label: s.display_label().to_string(),
                category: s.category,
                ty: s.result.clone(),
                kind: kind_of(voc, &s.result),
            });
        }
        let types = used
            .into_iter()
            .filter_map(|ty| type_decl(voc, ty))
            .map(|t| SchemaType {
                kind: kind_of(voc, &t.name),
                values: match t.kind {
                    TypeKind::Real { .. } | TypeKind::Int { .. } => None,
                    _ => t.values().map(|vs| vs.iter().map(Value::to_string).collect()),
                },
                range: t.numeric_range().map(|(lo, hi)| WireInterval::from(&Interval::closed(lo, hi))),
                name: t.name,
            })
            .collect();
        let mut categories: Vec<Category> = symbols.iter().map(|s| s.category).collect();
        categories.sort();
        categories.dedup();
        KbSchema { categories, types, symbols }
    }

    fn structure(&self, user: &[Assignment]) -> PartialStructure {
        let mut st = self.kb.structure.clone();
        st.assignments.extend(user.iter().cloned());
        st
    }

    /// The view of a session without user choices; computed once.
    pub fn initial(&self) -> Result<Session, ConsultError> {
        self.initial.get_or_init(|| self.evaluate(Vec::new())).clone()
    }

    /// Rebuilds a session from its assignment log.
    pub fn replay(&self, user: &[Assignment]) -> Result<Session, ConsultError> {
        if user.is_empty() {
            return self.initial();
        }
        self.evaluate(user.to_vec())
    }

    fn evaluate(&self, user: Vec<Assignment>) -> Result<Session, ConsultError> {
        let st = self.structure(&user);
        let prop = propagate(&self.gp, &st, &self.budget)?;
        let relevance = match prop.status {
            Status::Consistent => {
                let cells: Vec<CellId> = self.tiles.iter().map(|t| t.cell).collect();
                relevance_of(&self.gp, &st, &prop, &cells, &self.budget)?
            }
            Status::Inconsistent => BTreeMap::new(),
        };
        let inconsistency = match prop.status {
            Status::Consistent => None,
            Status::Inconsistent => Some(self.wire_explanation(explain_inconsistency(&self.gp, &st, &self.budget)?)),
        };
        let view = self.view(&user, &prop, &relevance, inconsistency);
        Ok(Session { user, propagation: prop, view })
    }

    fn view(
        &self,
        user: &[Assignment],
        prop: &PropagationResult,
        relevance: &BTreeMap<Key, Relevance>,
        inconsistency: Option<WireExplanation>,
    ) -> StateView {
        let mut tiles = Vec::with_capacity(self.tiles.len());
        for t in &self.tiles {
            let own = user.iter().find(|a| a.key == t.key);
            let (value, origin) = match own.map(|a| &a.value) {
                Some(Restriction::Exact(v)) => (Some(v.to_string()), Some(Origin::User)),
                _ => match prop.consequences.iter().find(|a| a.key == t.key).map(|a| &a.value) {
                    Some(Restriction::Exact(v)) => (Some(v.to_string()), Some(Origin::Propagated)),
                    _ => (None, None),
                },
            };
            let (candidates, bounds) = match prop.domains.get(&t.key) {
                Some(Domain::Finite(vs)) => (Some(vs.iter().map(Value::to_string).collect()), None),
                Some(Domain::Numeric(iv)) => (None, Some(WireInterval::from(iv))),
                None if t.kind == TileKind::Number => (None, None),
                None => (Some(Vec::new()), None),
            };
            tiles.push(Tile {
                symbol: t.key.symbol.clone(),
                args: t.key.args.iter().map(Value::to_string).collect(),
                label: t.label.clone(),
                category: t.category,
                ty: t.ty.clone(),
                kind: t.kind,
                value,
                origin,
                candidates,
                bounds,
                relevant: relevance.get(&t.key) != Some(&Relevance::Irrelevant),
            });
        }
        StateView {
            status: prop.status,
            tiles,
            remaining: remaining_in(&self.gp, prop),
            choices: user.iter().map(|a| self.wire_assignment(a)).collect(),
            inconsistency,
        }
    }

    fn label_of(&self, symbol: &str) -> String {
        self.kb.vocabulary.symbol(symbol).map_or(symbol, |s| s.display_label()).to_string()
    }

    fn wire_assignment(&self, a: &Assignment) -> WireAssignment {
        let (value, bounds) = match &a.value {
            Restriction::Exact(v) => (Some(v.to_string()), None),
            Restriction::Within(iv) => (None, Some(WireInterval::from(iv))),
        };
        WireAssignment {
            symbol: a.key.symbol.clone(),
            args: a.key.args.iter().map(Value::to_string).collect(),
            label: self.label_of(&a.key.symbol),
            value,
            bounds,
            origin: a.origin,
        }
    }

    fn wire_explanation(&self, e: Explanation) -> WireExplanation {
        WireExplanation {
            target: match &e.target {
                Target::Value(a) => Some(self.wire_assignment(a)),
                Target::Inconsistency => None,
            },
            assignments: e.assignments.iter().map(|a| self.wire_assignment(a)).collect(),
            laws: e.laws.into_iter().map(|l| WireLaw { id: l.id, label: l.label }).collect(),
        }
    }

    /// Resolves `symbol(args)` to a shown location.
    fn tile(&self, symbol: &str, args: &[String]) -> Result<&TileSpec, ConsultError> {
        let decl = self.kb.vocabulary.symbol(symbol).ok_or_else(|| ConsultError::UnknownSymbol(symbol.to_string()))?;
        if decl.category == Category::Hidden {
            return Err(ConsultError::Hidden(symbol.to_string()));
        }
        if decl.args.len() != args.len() {
            return Err(ConsultError::Arity { symbol: symbol.to_string(), expected: decl.args.len(), got: args.len() });
        }
        let mut key_args = Vec::with_capacity(args.len());
        for (ty, text) in decl.args.iter().zip(args) {
            key_args.push(parse_value(&self.kb.vocabulary, ty, text)?);
        }
        let key = Key { symbol: symbol.to_string(), args: key_args };
        self.tiles.iter().find(|t| t.key == key).ok_or_else(|| ConsultError::UnknownSymbol(key.to_string()))
    }

    /// Sets or changes a user value and re-propagates from scratch.
    pub fn set(&self, session: &Session, req: &SetRequest) -> Result<Session, ConsultError> {
        let tile = self.tile(&req.symbol, &req.args)?;
        let value = parse_value(&self.kb.vocabulary, &tile.ty, &req.value)?;
        let exact = Restriction::Exact(value.clone());
        let current = session.user.iter().position(|a| a.key == tile.key);
        if let Some(i) = current {
            if session.user[i].value == exact {
                return Ok(session.clone());
            }
        } else if session.propagation.consequences.iter().any(|a| a.key == tile.key && a.value == exact) {
            return Ok(session.clone());
        }
        let finite = tile.kind != TileKind::Number;
        if finite && current.is_none() {
            let offered =
                matches!(session.propagation.domains.get(&tile.key), Some(Domain::Finite(vs)) if vs.contains(&value));
            if !offered {
                return Err(ConsultError::NotACandidate { key: tile.key.to_string(), value: req.value.clone() });
            }
        }
        let mut user = session.user.clone();
        let a = Assignment::exact(tile.key.clone(), value, Origin::User);
        match current {
            Some(i) => user[i] = a,
            None => user.push(a),
        }
        let next = self.evaluate(user)?;
        if finite && current.is_some() && next.view.status == Status::Inconsistent {
            // a changed choice must still be one the other choices allow
            return Err(ConsultError::NotACandidate { key: tile.key.to_string(), value: req.value.clone() });
        }
        Ok(next)
    }

    /// Removes a user value and re-propagates from scratch.
    pub fn retract(&self, session: &Session, symbol: &str, args: &[String]) -> Result<Session, ConsultError> {
        let tile = self.tile(symbol, args)?;
        let Some(i) = session.user.iter().position(|a| a.key == tile.key) else {
            return Err(ConsultError::NoUserAssignment(tile.key.to_string()));
        };
        let mut user = session.user.clone();
        user.remove(i);
        self.replay(&user)
    }

    /// Why a propagated value or bound holds.
    pub fn explain(&self, session: &Session, symbol: &str, args: &[String]) -> Result<WireExplanation, ConsultError> {
        if session.view.status == Status::Inconsistent {
            return Err(ConsultError::Inconsistent);
        }
        let tile = self.tile(symbol, args)?;
        let prop = &session.propagation;
        let target = if let Some(a) = prop.consequences.iter().find(|a| a.key == tile.key) {
            a.clone()
        } else if let Some(iv) = prop.numeric_bounds.get(&tile.key) {
            Assignment::within(tile.key.clone(), iv.clone(), Origin::Propagated)
        } else {
            return Err(ConsultError::NotPropagated(tile.key.to_string()));
        };
        let e = explain_value(&self.gp, &self.structure(&session.user), &target, &self.budget)?;
        Ok(self.wire_explanation(e))
    }

    pub fn inconsistency(&self, session: &Session) -> Result<WireExplanation, ConsultError> {
        session.view.inconsistency.clone().ok_or(ConsultError::Consistent)
    }

    /// Best model for one numeric tile. For an adhesive parameter only
    /// adhesives that know the parameter take part, since unknown values are
    /// stored as a sentinel.
    pub fn optimize(&self, session: &Session, req: &OptimizeRequest) -> Result<OptimizeResponse, ConsultError> {
        if session.view.status == Status::Inconsistent {
            return Err(ConsultError::Inconsistent);
        }
        let tile = self.tile(&req.symbol, &[])?;
        if tile.kind != TileKind::Number {
            return Err(ConsultError::NotNumeric(req.symbol.clone()));
        }
        let mut st = self.structure(&session.user);
        if let Some(p) = param_of(&req.symbol) {
            if self.gp.cell(&Key::new("Known", vec![Value::sym(p.id)])).is_some() {
                st.push(Assignment::user("Known", vec![Value::sym(p.id)], Value::Bool(true)));
            }
        }
        let goal = OptimizationGoal { term: Term::sym(&req.symbol), direction: req.direction };
        match optimize(&self.gp, &st, &goal, &self.budget)? {
            OptimizeResult::Optimal { model, value } => {
                let adhesive = model.exact(&Key::constant(SELECTION)).map(Value::to_string);
                let shown = self
                    .tiles
                    .iter()
                    .filter_map(|t| model.iter().find(|a| a.key == t.key))
                    .map(|a| self.wire_assignment(a))
                    .collect();
                Ok(OptimizeResponse {
                    symbol: req.symbol.clone(),
                    direction: req.direction,
                    value: value.to_string(),
                    adhesive,
                    model: shown,
                })
            }
            OptimizeResult::Unbounded => Err(ConsultError::Unbounded(req.symbol.clone())),
            OptimizeResult::Unsat => Err(ConsultError::NoOptimum(req.symbol.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_kb;

    const TEMPS: &str = "vocabulary {\n\
        type T := real[-100..100].\n\
        type S := {fixed, floating}.\n\
        MinTemp : () -> T. MaxTemp : () -> T. Support : () -> S. Glued : () -> Bool.\n\
        }\n\
        theory {\n\
        @label(\"Minimum below maximum\") MinTemp =< MaxTemp.\n\
        @label(\"Fixed parts are glued\") Support = fixed => Glued.\n\
        }";

    fn consultant() -> Consultant {
        Consultant::new(parse_kb(TEMPS).unwrap(), Budget::default()).unwrap()
    }

    fn set(c: &Consultant, s: &Session, symbol: &str, value: &str) -> Result<Session, ConsultError> {
        c.set(s, &SetRequest { symbol: symbol.into(), args: vec![], value: value.into() })
    }

    #[test]
    fn min_above_max_is_explained() {
        let c = consultant();
        let s = set(&c, &c.initial().unwrap(), "MinTemp", "20").unwrap();
        let s = set(&c, &s, "MaxTemp", "10").unwrap();
        assert_eq!(s.view.status, Status::Inconsistent);
        let core = s.view.inconsistency.unwrap();
        let syms: Vec<&str> = core.assignments.iter().map(|a| a.symbol.as_str()).collect();
        assert_eq!(syms, ["MinTemp", "MaxTemp"]);
        assert_eq!(core.laws, [WireLaw { id: "f1".into(), label: "Minimum below maximum".into() }]);
    }

    #[test]
    fn set_then_retract_restores_the_view() {
        let c = consultant();
        let s0 = c.initial().unwrap();
        let s1 = set(&c, &s0, "Support", "fixed").unwrap();
        let glued = s1.view.tiles.iter().find(|t| t.symbol == "Glued").unwrap();
        assert_eq!((glued.value.as_deref(), glued.origin), (Some("true"), Some(Origin::Propagated)));
        let back = c.retract(&s1, "Support", &[]).unwrap();
        assert_eq!(back.view, s0.view);
    }

    #[test]
    fn propagated_value_set_again_is_a_no_op() {
        let c = consultant();
        let s1 = set(&c, &c.initial().unwrap(), "Support", "fixed").unwrap();
        let s2 = set(&c, &s1, "Glued", "true").unwrap();
        assert_eq!(s1.view, s2.view);
        assert!(matches!(set(&c, &s1, "Glued", "false"), Err(ConsultError::NotACandidate { .. })));
    }

    #[test]
    fn retract_needs_a_user_value() {
        let c = consultant();
        let s1 = set(&c, &c.initial().unwrap(), "Support", "fixed").unwrap();
        assert!(matches!(c.retract(&s1, "Glued", &[]), Err(ConsultError::NoUserAssignment(_))));
        assert!(matches!(c.retract(&s1, "Nope", &[]), Err(ConsultError::UnknownSymbol(_))));
    }

    #[test]
    fn explanation_names_cause_and_law() {
        let c = consultant();
        let s = set(&c, &c.initial().unwrap(), "Support", "fixed").unwrap();
        let e = c.explain(&s, "Glued", &[]).unwrap();
        assert_eq!(e.assignments.len(), 1);
        assert_eq!(e.assignments[0].symbol, "Support");
        assert_eq!(e.laws[0].label, "Fixed parts are glued");
        assert!(matches!(c.explain(&s, "MinTemp", &[]), Err(ConsultError::NotPropagated(_))));
    }

    #[test]
    fn wire_values_are_typed() {
        let c = consultant();
        let s = c.initial().unwrap();
        assert!(matches!(set(&c, &s, "MinTemp", "hot"), Err(ConsultError::Type { .. })));
        assert!(matches!(set(&c, &s, "MinTemp", "500"), Err(ConsultError::Type { .. })));
        assert!(matches!(set(&c, &s, "Support", "glued"), Err(ConsultError::Type { .. })));
        let s = set(&c, &s, "MinTemp", "12.5").unwrap();
        let max = s.view.tiles.iter().find(|t| t.symbol == "MaxTemp").unwrap();
        assert_eq!(max.bounds.as_ref().unwrap().lo.as_deref(), Some("12.5"));
    }

    #[test]
    fn maximize_a_bounded_tile() {
        let c = consultant();
        let s = set(&c, &c.initial().unwrap(), "MaxTemp", "30").unwrap();
        let r = c.optimize(&s, &OptimizeRequest { symbol: "MinTemp".into(), direction: Direction::Maximize }).unwrap();
        assert_eq!(r.value, "30");
    }
}
