//! Declarative data model: vocabularies, theories and (partial) structures.
//!
//! Everything here is an immutable value; inference lives in [`crate::ground`]
//! and [`crate::solve`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rat;

/// Name of the built-in boolean type.
pub const BOOL_TYPE: &str = "Bool";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypeKind {
    /// Named constants, in declaration order.
    Enum(Vec<String>),
    /// Inclusive integer interval.
    Int {
        lo: i64,
        hi: i64,
    },
    /// Inclusive rational interval.
    Real {
        lo: Rat,
        hi: Rat,
    },
    Bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    pub kind: TypeKind,
}

impl TypeDecl {
    pub fn enumeration(name: &str, constants: &[&str]) -> Self {
        TypeDecl { name: name.to_string(), kind: TypeKind::Enum(constants.iter().map(|c| c.to_string()).collect()) }
    }

    pub fn int(name: &str, lo: i64, hi: i64) -> Self {
        TypeDecl { name: name.to_string(), kind: TypeKind::Int { lo, hi } }
    }

    pub fn real(name: &str, lo: Rat, hi: Rat) -> Self {
        TypeDecl { name: name.to_string(), kind: TypeKind::Real { lo, hi } }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self.kind, TypeKind::Real { .. })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, TypeKind::Int { .. } | TypeKind::Real { .. })
    }

    /// The values of a finite type, in declaration order (`false` before
    /// `true` for booleans). `None` for rational intervals.
    pub fn values(&self) -> Option<Vec<Value>> {
        match &self.kind {
            TypeKind::Enum(cs) => Some(cs.iter().map(|c| Value::Sym(c.clone())).collect()),
            TypeKind::Int { lo, hi } => Some((*lo..=*hi).map(|n| Value::Num(Rat::from_int(n))).collect()),
            TypeKind::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            TypeKind::Real { .. } => None,
        }
    }

    /// Number of values of a finite type.
    pub fn size(&self) -> Option<u128> {
        match &self.kind {
            TypeKind::Enum(cs) => Some(cs.len() as u128),
            TypeKind::Int { lo, hi } => Some((*hi as i128 - *lo as i128 + 1).max(0) as u128),
            TypeKind::Bool => Some(2),
            TypeKind::Real { .. } => None,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (&self.kind, value) {
            (TypeKind::Enum(cs), Value::Sym(s)) => cs.contains(s),
            (TypeKind::Int { lo, hi }, Value::Num(n)) => {
                n.is_integer() && *n >= Rat::from_int(*lo) && *n <= Rat::from_int(*hi)
            }
            (TypeKind::Real { lo, hi }, Value::Num(n)) => n >= lo && n <= hi,
            (TypeKind::Bool, Value::Bool(_)) => true,
            _ => false,
        }
    }

    /// Declared numeric range, for integer and rational types.
    pub fn numeric_range(&self) -> Option<(Rat, Rat)> {
        match &self.kind {
            TypeKind::Int { lo, hi } => Some((Rat::from_int(*lo), Rat::from_int(*hi))),
            TypeKind::Real { lo, hi } => Some((lo.clone(), hi.clone())),
            _ => None,
        }
    }
}

/// Display category of a symbol tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub enum Category {
    #[default]
    Performance,
    Production,
    Bond,
    SubstrateA,
    SubstrateB,
    Hidden,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Performance,
        Category::Production,
        Category::Bond,
        Category::SubstrateA,
        Category::SubstrateB,
        Category::Hidden,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Performance => "Performance",
            Category::Production => "Production",
            Category::Bond => "Bond",
            Category::SubstrateA => "SubstrateA",
            Category::SubstrateB => "SubstrateB",
            Category::Hidden => "Hidden",
        }
    }

    pub fn from_name(name: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// A function or predicate symbol. Predicates are symbols whose result is
/// [`BOOL_TYPE`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDecl {
    pub name: String,
    pub args: Vec<String>,
    pub result: String,
    pub category: Category,
    /// Human-readable tile label.
    pub label: Option<String>,
}

impl SymbolDecl {
    pub fn new(name: &str, args: &[&str], result: &str) -> Self {
        SymbolDecl {
            name: name.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
            result: result.to_string(),
            category: Category::default(),
            label: None,
        }
    }

    pub fn with_category(mut self, category: Category) -> Self {
        self.category = category;
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn is_predicate(&self) -> bool {
        self.result == BOOL_TYPE
    }

    pub fn display_label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub types: Vec<TypeDecl>,
    pub symbols: Vec<SymbolDecl>,
}

static BOOL_DECL: std::sync::OnceLock<TypeDecl> = std::sync::OnceLock::new();

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Looks up a type, including the built-in `Bool`.
    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        if name == BOOL_TYPE {
            return Some(BOOL_DECL.get_or_init(|| TypeDecl { name: BOOL_TYPE.into(), kind: TypeKind::Bool }));
        }
        self.types.iter().find(|t| t.name == name)
    }

    pub fn symbol(&self, name: &str) -> Option<&SymbolDecl> {
        self.symbols.iter().find(|s| s.name == name)
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    /// Enumeration types declaring the given constant.
    pub fn types_with_constant(&self, constant: &str) -> Vec<&TypeDecl> {
        self.types
            .iter()
            .filter(|t| matches!(&t.kind, TypeKind::Enum(cs) if cs.iter().any(|c| c == constant)))
            .collect()
    }

    /// Every argument tuple of a symbol, in lexicographic declaration order.
    /// `None` if an argument type is unknown or infinite.
    pub fn arg_tuples(&self, symbol: &SymbolDecl) -> Option<Vec<Vec<Value>>> {
        let mut tuples = vec![Vec::new()];
        for arg in &symbol.args {
            let values = self.type_decl(arg)?.values()?;
            let mut next = Vec::with_capacity(tuples.len() * values.len());
            for t in &tuples {
                for v in &values {
                    let mut t = t.clone();
                    t.push(v.clone());
                    next.push(t);
                }
            }
            tuples = next;
        }
        Some(tuples)
    }
}

/// A constant of some type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Sym(String),
    Num(Rat),
}

impl Value {
    pub fn sym(name: &str) -> Self {
        Value::Sym(name.to_string())
    }

    pub fn int(n: i64) -> Self {
        Value::Num(Rat::from_int(n))
    }

    pub fn as_num(&self) -> Option<&Rat> {
        match self {
            Value::Num(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Sym(s) => f.write_str(s),
            Value::Num(n) => write!(f, "{n}"),
        }
    }
}

/// A ground location `symbol(args)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Key {
    pub symbol: String,
    pub args: Vec<Value>,
}

impl Key {
    pub fn new(symbol: &str, args: Vec<Value>) -> Self {
        Key { symbol: symbol.to_string(), args }
    }

    pub fn constant(symbol: &str) -> Self {
        Key::new(symbol, Vec::new())
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(Value),
    App(String, Vec<Term>),
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
}

impl Term {
    pub fn app(symbol: &str, args: Vec<Term>) -> Term {
        Term::App(symbol.to_string(), args)
    }

    /// A 0-ary application.
    pub fn sym(symbol: &str) -> Term {
        Term::App(symbol.to_string(), Vec::new())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(Value::sym(name))
    }

    pub fn num(n: Rat) -> Term {
        Term::Const(Value::Num(n))
    }

    pub fn int(n: i64) -> Term {
        Term::Const(Value::int(n))
    }

    /// True when the term contains no variables and no symbol applications.
    pub fn is_literal(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) | Term::App(..) => false,
            Term::Neg(a) => a.is_literal(),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => a.is_literal() && b.is_literal(),
        }
    }

    /// Evaluates a literal numeric term.
    pub fn literal_value(&self) -> Option<Rat> {
        match self {
            Term::Const(Value::Num(n)) => Some(n.clone()),
            Term::Neg(a) => Some(-a.literal_value()?),
            Term::Add(a, b) => Some(a.literal_value()? + b.literal_value()?),
            Term::Sub(a, b) => Some(a.literal_value()? - b.literal_value()?),
            Term::Mul(a, b) => Some(a.literal_value()? * b.literal_value()?),
            Term::Div(a, b) => {
                let d = b.literal_value()?;
                if d.is_zero() {
                    None
                } else {
                    Some(a.literal_value()? / d)
                }
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn is_order(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Le => ord != Greater,
            CmpOp::Lt => ord == Less,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Bool(bool),
    /// A boolean-valued term used as a formula, e.g. `Available(a)`.
    Pred(Term),
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Equiv(Box<Formula>, Box<Formula>),
    /// `!var in Type: body`
    Forall(String, String, Box<Formula>),
    /// `?var in Type: body`
    Exists(String, String, Box<Formula>),
}

impl Formula {
    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn equiv(a: Formula, b: Formula) -> Formula {
        Formula::Equiv(Box::new(a), Box::new(b))
    }

    pub fn forall(var: &str, ty: &str, body: Formula) -> Formula {
        Formula::Forall(var.to_string(), ty.to_string(), Box::new(body))
    }

    pub fn exists(var: &str, ty: &str, body: Formula) -> Formula {
        Formula::Exists(var.to_string(), ty.to_string(), Box::new(body))
    }

    pub fn pred(symbol: &str, args: Vec<Term>) -> Formula {
        Formula::Pred(Term::app(symbol, args))
    }
}

/// A theory formula with its identifier and explanation label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledFormula {
    pub id: String,
    pub label: String,
    pub formula: Formula,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theory {
    pub formulas: Vec<LabeledFormula>,
}

impl Theory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: &str, label: &str, formula: Formula) {
        self.formulas.push(LabeledFormula { id: id.to_string(), label: label.to_string(), formula });
    }

    pub fn get(&self, id: &str) -> Option<&LabeledFormula> {
        self.formulas.iter().find(|f| f.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    User,
    Propagated,
    Given,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bound {
    pub value: Rat,
    pub strict: bool,
}

impl Bound {
    pub fn closed(value: Rat) -> Self {
        Bound { value, strict: false }
    }

    pub fn open(value: Rat) -> Self {
        Bound { value, strict: true }
    }
}

/// A numeric interval; a missing side is unbounded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<Bound>,
    pub hi: Option<Bound>,
}

impl Interval {
    pub fn closed(lo: Rat, hi: Rat) -> Self {
        Interval { lo: Some(Bound::closed(lo)), hi: Some(Bound::closed(hi)) }
    }

    pub fn at_least(lo: Rat) -> Self {
        Interval { lo: Some(Bound::closed(lo)), hi: None }
    }

    pub fn at_most(hi: Rat) -> Self {
        Interval { lo: None, hi: Some(Bound::closed(hi)) }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let lo_ok = match &self.lo {
            None => true,
            Some(b) if b.strict => x > &b.value,
            Some(b) => x >= &b.value,
        };
        let hi_ok = match &self.hi {
            None => true,
            Some(b) if b.strict => x < &b.value,
            Some(b) => x <= &b.value,
        };
        lo_ok && hi_ok
    }

    pub fn is_empty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Some(l), Some(h)) => l.value > h.value || (l.value == h.value && (l.strict || h.strict)),
            _ => false,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = match (&self.lo, &other.lo) {
            (None, x) | (x, None) => x.clone(),
            (Some(a), Some(b)) => {
                Some(if a.value > b.value || (a.value == b.value && a.strict) { a.clone() } else { b.clone() })
            }
        };
        let hi = match (&self.hi, &other.hi) {
            (None, x) | (x, None) => x.clone(),
            (Some(a), Some(b)) => {
                Some(if a.value < b.value || (a.value == b.value && a.strict) { a.clone() } else { b.clone() })
            }
        };
        Interval { lo, hi }
    }

    /// True when every point of `self` lies in `other`.
    pub fn is_within(&self, other: &Interval) -> bool {
        let lo_ok = match (&other.lo, &self.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s.value > o.value || (s.value == o.value && (s.strict || !o.strict)),
        };
        let hi_ok = match (&other.hi, &self.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s.value < o.value || (s.value == o.value && (s.strict || !o.strict)),
        };
        lo_ok && hi_ok
    }

    /// The single point of a degenerate closed interval.
    pub fn point(&self) -> Option<&Rat> {
        match (&self.lo, &self.hi) {
            (Some(l), Some(h)) if l.value == h.value && !l.strict && !h.strict => Some(&l.value),
            _ => None,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lo {
            None => f.write_str("(")?,
            Some(b) => write!(f, "{}{}", if b.strict { "(" } else { "[" }, b.value)?,
        }
        f.write_str("..")?;
        match &self.hi {
            None => f.write_str(")"),
            Some(b) => write!(f, "{}{}", b.value, if b.strict { ")" } else { "]" }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Restriction {
    Exact(Value),
    Within(Interval),
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Restriction::Exact(v) => write!(f, "= {v}"),
            Restriction::Within(iv) => write!(f, "in {iv}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub key: Key,
    pub value: Restriction,
    pub origin: Origin,
}

impl Assignment {
    pub fn exact(key: Key, value: Value, origin: Origin) -> Self {
        Assignment { key, value: Restriction::Exact(value), origin }
    }

    pub fn user(symbol: &str, args: Vec<Value>, value: Value) -> Self {
        Assignment::exact(Key::new(symbol, args), value, Origin::User)
    }

    pub fn given(symbol: &str, args: Vec<Value>, value: Value) -> Self {
        Assignment::exact(Key::new(symbol, args), value, Origin::Given)
    }

    pub fn within(key: Key, interval: Interval, origin: Origin) -> Self {
        Assignment { key, value: Restriction::Within(interval), origin }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.key, self.value)
    }
}

/// An interpretation of some of the vocabulary's symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialStructure {
    pub assignments: Vec<Assignment>,
}

impl PartialStructure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_assignments(assignments: Vec<Assignment>) -> Self {
        PartialStructure { assignments }
    }

    pub fn push(&mut self, a: Assignment) {
        self.assignments.push(a);
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Assignment> {
        self.assignments.iter()
    }

    pub fn user(&self) -> impl Iterator<Item = &Assignment> {
        self.assignments.iter().filter(|a| a.origin == Origin::User)
    }

    pub fn exact(&self, key: &Key) -> Option<&Value> {
        self.assignments.iter().find_map(|a| match &a.value {
            Restriction::Exact(v) if &a.key == key => Some(v),
            _ => None,
        })
    }

    /// Keeps only assignments of the given origin.
    pub fn with_origin(&self, origin: Origin) -> PartialStructure {
        PartialStructure { assignments: self.assignments.iter().filter(|a| a.origin == origin).cloned().collect() }
    }

    /// True when every `symbol(args)` of the vocabulary has an exact value.
    pub fn is_total(&self, voc: &Vocabulary) -> bool {
        let exact: HashSet<&Key> =
            self.assignments.iter().filter(|a| matches!(a.value, Restriction::Exact(_))).map(|a| &a.key).collect();
        voc.symbols.iter().all(|s| match voc.arg_tuples(s) {
            Some(tuples) => tuples.into_iter().all(|args| exact.contains(&Key { symbol: s.name.clone(), args })),
            None => false,
        })
    }
}

/// Two assignments to the same location that cannot both hold.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergeConflict {
    pub key: Key,
    pub existing: Restriction,
    pub incoming: Restriction,
}

impl fmt::Display for MergeConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} conflicts with {}", self.key, self.existing, self.incoming)
    }
}

fn restrictions_clash(a: &Restriction, b: &Restriction) -> bool {
    match (a, b) {
        (Restriction::Exact(x), Restriction::Exact(y)) => x != y,
        (Restriction::Exact(Value::Num(x)), Restriction::Within(iv))
        | (Restriction::Within(iv), Restriction::Exact(Value::Num(x))) => !iv.contains(x),
        (Restriction::Within(p), Restriction::Within(q)) => p.intersect(q).is_empty(),
        _ => true,
    }
}

/// Union of two structures over the same vocabulary.
///
/// Identical assignments are kept once; the base's origin wins. Every
/// location receiving incompatible values is reported.
pub fn merge(base: &PartialStructure, delta: &[Assignment]) -> Result<PartialStructure, Vec<MergeConflict>> {
    let mut out = base.clone();
    let mut conflicts = Vec::new();
    for a in delta {
        let mut duplicate = false;
        for existing in &out.assignments {
            if existing.key != a.key {
                continue;
            }
            if existing.value == a.value {
                duplicate = true;
            } else if restrictions_clash(&existing.value, &a.value) {
                let c =
                    MergeConflict { key: a.key.clone(), existing: existing.value.clone(), incoming: a.value.clone() };
                if !conflicts.contains(&c) {
                    conflicts.push(c);
                }
            }
        }
        if !duplicate {
            out.assignments.push(a.clone());
        }
    }
    if conflicts.is_empty() {
        Ok(out)
    } else {
        Err(conflicts)
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValidationKind {
    DuplicateName,
    EmptyEnumeration,
    DuplicateConstant,
    EmptyInterval,
    NameClash,
    UnknownType,
    UnknownSymbol,
    InfiniteArgumentType,
    InfiniteQuantifier,
    ArityMismatch,
    TypeMismatch,
    FreeVariable,
    ShadowedName,
    NonLinear,
    DivisionByZero,
    DuplicateFormulaId,
    EmptyLabel,
    IllTypedAssignment,
    ConflictingAssignment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub kind: ValidationKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Ty {
    Bool,
    Enum(String),
    Num {
        integral: bool,
    },
    /// Bare enumeration constant whose type comes from context.
    Constant(String),
    /// Already reported.
    Error,
}

impl Ty {
    fn of_decl(decl: &TypeDecl) -> Ty {
        match &decl.kind {
            TypeKind::Bool => Ty::Bool,
            TypeKind::Enum(_) => Ty::Enum(decl.name.clone()),
            TypeKind::Int { .. } => Ty::Num { integral: true },
            TypeKind::Real { .. } => Ty::Num { integral: false },
        }
    }

    fn is_num(&self) -> bool {
        matches!(self, Ty::Num { .. } | Ty::Error)
    }

    fn describe(&self) -> String {
        match self {
            Ty::Bool => "Bool".into(),
            Ty::Enum(n) => n.clone(),
            Ty::Num { integral: true } => "integer".into(),
            Ty::Num { integral: false } => "number".into(),
            Ty::Constant(c) => format!("constant `{c}`"),
            Ty::Error => "?".into(),
        }
    }
}

struct Checker<'a> {
    voc: &'a Vocabulary,
    errors: Vec<ValidationError>,
    location: String,
}

impl<'a> Checker<'a> {
    fn error(&mut self, kind: ValidationKind, message: String) {
        self.errors.push(ValidationError { kind, location: self.location.clone(), message });
    }

    fn compatible(&self, a: &Ty, b: &Ty) -> bool {
        match (a, b) {
            (Ty::Error, _) | (_, Ty::Error) => true,
            (Ty::Num { .. }, Ty::Num { .. }) => true,
            (Ty::Bool, Ty::Bool) => true,
            (Ty::Enum(x), Ty::Enum(y)) => x == y,
            (Ty::Constant(c), Ty::Enum(t)) | (Ty::Enum(t), Ty::Constant(c)) => {
                self.voc.type_decl(t).is_some_and(|d| matches!(&d.kind, TypeKind::Enum(cs) if cs.contains(c)))
            }
            (Ty::Constant(_), Ty::Constant(_)) => true,
            _ => false,
        }
    }

    /// Checks a term against a declared argument/expected type.
    fn expect(&mut self, term: &Term, expected: &str, env: &mut Vec<(String, String)>) {
        let Some(decl) = self.voc.type_decl(expected) else {
            return;
        };
        let want = Ty::of_decl(decl);
        let got = self.infer(term, env);
        if !self.compatible(&got, &want) {
            self.error(ValidationKind::TypeMismatch, format!("expected {}, found {}", want.describe(), got.describe()));
        }
    }

    fn infer(&mut self, term: &Term, env: &mut Vec<(String, String)>) -> Ty {
        match term {
            Term::Var(v) => match env.iter().rev().find(|(n, _)| n == v) {
                Some((_, ty)) => self.voc.type_decl(ty).map(Ty::of_decl).unwrap_or(Ty::Error),
                None => {
                    self.error(ValidationKind::FreeVariable, format!("free variable `{v}`"));
                    Ty::Error
                }
            },
            Term::Const(Value::Bool(_)) => Ty::Bool,
            Term::Const(Value::Num(n)) => Ty::Num { integral: n.is_integer() },
            Term::Const(Value::Sym(c)) => {
                if self.voc.types_with_constant(c).is_empty() {
                    self.error(ValidationKind::UnknownSymbol, format!("unknown symbol or constant `{c}`"));
                    Ty::Error
                } else {
                    Ty::Constant(c.clone())
                }
            }
            Term::App(name, args) => {
                let Some(sym) = self.voc.symbol(name) else {
                    self.error(ValidationKind::UnknownSymbol, format!("unknown symbol `{name}`"));
                    for a in args {
                        self.infer(a, env);
                    }
                    return Ty::Error;
                };
                if sym.args.len() != args.len() {
                    self.error(
                        ValidationKind::ArityMismatch,
                        format!("`{name}` takes {} argument(s), {} given", sym.args.len(), args.len()),
                    );
                    return self.voc.type_decl(&sym.result).map(Ty::of_decl).unwrap_or(Ty::Error);
                }
                let sym = sym.clone();
                for (a, ty) in args.iter().zip(&sym.args) {
                    self.expect(a, ty, env);
                }
                self.voc.type_decl(&sym.result).map(Ty::of_decl).unwrap_or(Ty::Error)
            }
            Term::Neg(a) => self.numeric(a, env),
            Term::Add(a, b) | Term::Sub(a, b) => {
                let x = self.numeric(a, env);
                let y = self.numeric(b, env);
                match (x, y) {
                    (Ty::Num { integral: p }, Ty::Num { integral: q }) => Ty::Num { integral: p && q },
                    _ => Ty::Error,
                }
            }
            Term::Mul(a, b) => {
                self.numeric(a, env);
                self.numeric(b, env);
                if !a.is_literal() && !b.is_literal() {
                    self.error(ValidationKind::NonLinear, "product of two non-constant terms".into());
                }
                Ty::Num { integral: false }
            }
            Term::Div(a, b) => {
                self.numeric(a, env);
                self.numeric(b, env);
                if b.is_literal() {
                    if b.literal_value().is_none_or(|d| d.is_zero()) {
                        self.error(ValidationKind::DivisionByZero, "division by zero".into());
                    }
                } else if !matches!(**b, Term::App(..) | Term::Var(_)) {
                    self.error(
                        ValidationKind::NonLinear,
                        "divisor must be a constant or a single numeric symbol".into(),
                    );
                }
                Ty::Num { integral: false }
            }
        }
    }

    fn numeric(&mut self, term: &Term, env: &mut Vec<(String, String)>) -> Ty {
        let ty = self.infer(term, env);
        if !ty.is_num() {
            self.error(ValidationKind::TypeMismatch, format!("expected a number, found {}", ty.describe()));
            return Ty::Error;
        }
        ty
    }

    fn formula(&mut self, f: &Formula, env: &mut Vec<(String, String)>) {
        match f {
            Formula::Bool(_) => {}
            Formula::Pred(t) => {
                let ty = self.infer(t, env);
                if !matches!(ty, Ty::Bool | Ty::Error) {
                    self.error(ValidationKind::TypeMismatch, format!("expected Bool, found {}", ty.describe()));
                }
            }
            Formula::Cmp(op, a, b) => {
                let x = self.infer(a, env);
                let y = self.infer(b, env);
                if op.is_order() {
                    if !x.is_num() || !y.is_num() {
                        self.error(
                            ValidationKind::TypeMismatch,
                            format!("cannot order {} and {}", x.describe(), y.describe()),
                        );
                    }
                } else if !self.compatible(&x, &y) {
                    self.error(
                        ValidationKind::TypeMismatch,
                        format!("cannot compare {} with {}", x.describe(), y.describe()),
                    );
                }
            }
            Formula::Not(a) => self.formula(a, env),
            Formula::And(fs) | Formula::Or(fs) => {
                for g in fs {
                    self.formula(g, env);
                }
            }
            Formula::Implies(a, b) | Formula::Equiv(a, b) => {
                self.formula(a, env);
                self.formula(b, env);
            }
            Formula::Forall(v, ty, body) | Formula::Exists(v, ty, body) => {
                match self.voc.type_decl(ty) {
                    None => self.error(ValidationKind::UnknownType, format!("unknown type `{ty}`")),
                    Some(d) if !d.is_finite() => self.error(
                        ValidationKind::InfiniteQuantifier,
                        format!("cannot quantify over rational type `{ty}`"),
                    ),
                    Some(_) => {}
                }
                if self.voc.symbol(v).is_some() || !self.voc.types_with_constant(v).is_empty() {
                    self.error(ValidationKind::ShadowedName, format!("variable `{v}` shadows a symbol or constant"));
                }
                env.push((v.clone(), ty.clone()));
                self.formula(body, env);
                env.pop();
            }
        }
    }
}

fn check_vocabulary(checker: &mut Checker) {
    let voc = checker.voc;
    let mut type_names = HashSet::new();
    for t in &voc.types {
        checker.location = format!("vocabulary: type `{}`", t.name);
        if t.name == BOOL_TYPE || !type_names.insert(t.name.as_str()) {
            checker.error(ValidationKind::DuplicateName, format!("type `{}` declared twice", t.name));
        }
        match &t.kind {
            TypeKind::Enum(cs) => {
                if cs.is_empty() {
                    checker.error(ValidationKind::EmptyEnumeration, "enumeration has no constants".into());
                }
                let mut seen = HashSet::new();
                for c in cs {
                    if !seen.insert(c) {
                        checker.error(ValidationKind::DuplicateConstant, format!("constant `{c}` repeated"));
                    }
                }
            }
            TypeKind::Int { lo, hi } if lo > hi => {
                checker.error(ValidationKind::EmptyInterval, format!("empty interval [{lo}..{hi}]"))
            }
            TypeKind::Real { lo, hi } if lo > hi => {
                checker.error(ValidationKind::EmptyInterval, format!("empty interval [{lo}..{hi}]"))
            }
            _ => {}
        }
    }
    let mut symbol_names = HashSet::new();
    for s in &voc.symbols {
        checker.location = format!("vocabulary: symbol `{}`", s.name);
        if !symbol_names.insert(s.name.as_str()) {
            checker.error(ValidationKind::DuplicateName, format!("symbol `{}` declared twice", s.name));
        }
        if !voc.types_with_constant(&s.name).is_empty() {
            checker.error(ValidationKind::NameClash, format!("symbol `{}` is also a constant name", s.name));
        }
        for a in &s.args {
            match voc.type_decl(a) {
                None => checker.error(ValidationKind::UnknownType, format!("unknown type `{a}`")),
                Some(d) if !d.is_finite() => {
                    checker.error(ValidationKind::InfiniteArgumentType, format!("argument type `{a}` is not finite"))
                }
                Some(_) => {}
            }
        }
        if voc.type_decl(&s.result).is_none() {
            checker.error(ValidationKind::UnknownType, format!("unknown type `{}`", s.result));
        }
    }
}

fn check_theory(checker: &mut Checker, th: &Theory) {
    let mut ids = HashSet::new();
    for lf in &th.formulas {
        checker.location = format!("theory: formula `{}`", lf.id);
        if !ids.insert(lf.id.as_str()) {
            checker.error(ValidationKind::DuplicateFormulaId, format!("formula id `{}` used twice", lf.id));
        }
        if lf.label.trim().is_empty() {
            checker.error(ValidationKind::EmptyLabel, "formula label is empty".into());
        }
        checker.formula(&lf.formula, &mut Vec::new());
    }
}

fn check_structure(checker: &mut Checker, st: &PartialStructure) {
    let voc = checker.voc;
    let mut exact: HashMap<&Key, &Value> = HashMap::new();
    let mut intervals: BTreeMap<&Key, Vec<&Interval>> = BTreeMap::new();
    for (i, a) in st.assignments.iter().enumerate() {
        checker.location = format!("structure: assignment {} `{}`", i + 1, a);
        let Some(sym) = voc.symbol(&a.key.symbol) else {
            checker.error(ValidationKind::UnknownSymbol, format!("unknown symbol `{}`", a.key.symbol));
            continue;
        };
        if sym.args.len() != a.key.args.len() {
            checker.error(
                ValidationKind::ArityMismatch,
                format!("`{}` takes {} argument(s), {} given", sym.name, sym.args.len(), a.key.args.len()),
            );
            continue;
        }
        for (v, ty) in a.key.args.iter().zip(&sym.args) {
            if let Some(d) = voc.type_decl(ty) {
                if !d.contains(v) {
                    checker.error(ValidationKind::IllTypedAssignment, format!("argument `{v}` is not a {ty}"));
                }
            }
        }
        let Some(result) = voc.type_decl(&sym.result) else { continue };
        match &a.value {
            Restriction::Exact(v) => {
                if !result.contains(v) {
                    checker.error(ValidationKind::IllTypedAssignment, format!("value `{v}` is not a {}", result.name));
                } else if let Some(prev) = exact.insert(&a.key, v) {
                    if prev != v {
                        checker.error(
                            ValidationKind::ConflictingAssignment,
                            format!("`{}` assigned both `{prev}` and `{v}`", a.key),
                        );
                    }
                }
            }
            Restriction::Within(iv) => {
                if !result.is_numeric() {
                    checker.error(
                        ValidationKind::IllTypedAssignment,
                        format!("interval restriction on non-numeric symbol `{}`", sym.name),
                    );
                } else if iv.is_empty() {
                    checker.error(ValidationKind::IllTypedAssignment, format!("empty interval {iv}"));
                } else {
                    intervals.entry(&a.key).or_default().push(iv);
                }
            }
        }
    }
    checker.location = "structure".into();
    for (key, ivs) in intervals {
        let mut acc = Interval { lo: None, hi: None };
        for iv in &ivs {
            acc = acc.intersect(iv);
        }
        let clash = acc.is_empty() || exact.get(key).is_some_and(|v| v.as_num().is_some_and(|n| !acc.contains(n)));
        if clash {
            checker.error(ValidationKind::ConflictingAssignment, format!("restrictions on `{key}` do not intersect"));
        }
    }
}

/// Reports every type error, unknown name, free variable and ill-typed
/// assignment. An empty report means the inputs are valid.
pub fn well_formed(voc: &Vocabulary, th: &Theory, st: &PartialStructure) -> Vec<ValidationError> {
    let mut checker = Checker { voc, errors: Vec::new(), location: String::new() };
    check_vocabulary(&mut checker);
    check_theory(&mut checker, th);
    check_structure(&mut checker, st);
    checker.errors
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temps() -> Vocabulary {
        Vocabulary {
            types: vec![
                TypeDecl::real("Temp", Rat::from_int(-100), Rat::from_int(100)),
                TypeDecl::enumeration("Adhesive", &["a1", "a2"]),
            ],
            symbols: vec![
                SymbolDecl::new("MinTemp", &[], "Temp"),
                SymbolDecl::new("MaxTemp", &[], "Temp"),
                SymbolDecl::new("BondStrength", &["Adhesive"], "Temp"),
            ],
        }
    }

    #[test]
    fn empty_inputs_are_valid() {
        assert!(well_formed(&Vocabulary::new(), &Theory::new(), &PartialStructure::new()).is_empty());
    }

    #[test]
    fn undeclared_symbol_reported_once() {
        let mut th = Theory::new();
        th.push("f", "uses Foo", Formula::pred("Foo", vec![]));
        let errs = well_formed(&temps(), &th, &PartialStructure::new());
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ValidationKind::UnknownSymbol);
        assert!(errs[0].location.contains("`f`"));
    }

    #[test]
    fn bare_unknown_name_reported_once() {
        let mut th = Theory::new();
        th.push("f", "uses Foo", Formula::eq(Term::sym("MinTemp"), Term::constant("Foo")));
        let errs = well_formed(&temps(), &th, &PartialStructure::new());
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert_eq!(errs[0].kind, ValidationKind::UnknownSymbol);
    }

    #[test]
    fn string_value_for_rational_symbol() {
        let st = PartialStructure::from_assignments(vec![Assignment::given(
            "BondStrength",
            vec![Value::sym("a1")],
            Value::sym("red"),
        )]);
        let errs = well_formed(&temps(), &Theory::new(), &st);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ValidationKind::IllTypedAssignment);
    }

    #[test]
    fn free_variable_and_nonlinear_product() {
        let mut th = Theory::new();
        th.push("free", "x", Formula::Cmp(CmpOp::Le, Term::var("x"), Term::int(3)));
        th.push(
            "prod",
            "p",
            Formula::Cmp(
                CmpOp::Le,
                Term::Mul(Box::new(Term::sym("MinTemp")), Box::new(Term::sym("MaxTemp"))),
                Term::int(3),
            ),
        );
        let kinds: Vec<_> = well_formed(&temps(), &th, &PartialStructure::new()).into_iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![ValidationKind::FreeVariable, ValidationKind::NonLinear]);
    }

    #[test]
    fn quantifier_over_rationals_rejected() {
        let mut th = Theory::new();
        th.push("q", "q", Formula::forall("t", "Temp", Formula::Bool(true)));
        let errs = well_formed(&temps(), &th, &PartialStructure::new());
        assert_eq!(errs[0].kind, ValidationKind::InfiniteQuantifier);
    }

    #[test]
    fn merge_cases() {
        let m20 = Assignment::user("MinTemp", vec![], Value::int(20));
        let m30 = Assignment::user("MinTemp", vec![], Value::int(30));
        let one = merge(&PartialStructure::new(), std::slice::from_ref(&m20)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(merge(&one, &[m20]).unwrap(), one);
        let conflicts = merge(&one, &[m30]).unwrap_err();
        assert_eq!(conflicts.len(), 1);
        assert_eq!(conflicts[0].key, Key::constant("MinTemp"));
    }

    #[test]
    fn interval_algebra() {
        let a = Interval::closed(Rat::from_int(0), Rat::from_int(10));
        let b = Interval { lo: Some(Bound::open(Rat::from_int(10))), hi: None };
        assert!(a.intersect(&b).is_empty());
        assert!(Interval::closed(Rat::from_int(2), Rat::from_int(3)).is_within(&a));
        assert!(!b.is_within(&a));
        assert_eq!(a.to_string(), "[0..10]");
    }
}
